//! Per-pixel quadratic fit `I(x) ≈ xᵀAx + bᵀx + c` on an image that is
//! exactly quadratic, so the fit recovers the generating coefficients.

use staflow::flow::polynomial_expansion;
use staflow::raster::GrayFrame;

fn main() -> Result<(), staflow::flow::FlowError> {
    // I = 0.5 x² - 0.25 xy + 2 y² + 3x - y + 10 around (16, 12)
    let frame = GrayFrame::from_fn(32, 24, |x, y| {
        let (x, y) = (x as f64 - 16.0, y as f64 - 12.0);
        0.5 * x * x - 0.25 * x * y + 2.0 * y * y + 3.0 * x - y + 10.0
    });
    for (s, sigma) in [(5, 1.1), (7, 1.5), (9, 2.0)] {
        let poly = polynomial_expansion(&frame, s, sigma)?;
        let (a, b, c) = (poly.a(16, 12), poly.b(16, 12), poly.c(16, 12));
        println!("s={s} σ={sigma}: A=[[{:.4}, {:.4}], [{:.4}, {:.4}]] b=({:.4}, {:.4}) c={c:.4}", a[0][0], a[0][1], a[1][0], a[1][1], b[0], b[1]);
    }
    println!("expected: A=[[0.5, -0.125], [-0.125, 2]] b=(3, -1) c=10");
    Ok(())
}
