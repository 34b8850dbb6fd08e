//! Renders a rotating flow field with the 55-color wheel: hue encodes
//! direction, saturation encodes magnitude, the still center is white.
//!
//! ```text
//! cargo run --example colorize_flow -- wheel.png
//! ```

use staflow::color::flow_to_color;
use staflow::flow::FlowField;

fn main() -> Result<(), staflow::color::ColorError> {
    let path = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("staflow-wheel.png").display().to_string());
    let (w, h) = (201, 201);
    let flow = FlowField::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - 100.0, y as f64 - 100.0);
        if dx.hypot(dy) > 100.0 { (f64::NAN, f64::NAN) } else { (-dy, dx) }
    });
    let colored = flow_to_color(&flow, None);
    colored.image.save(&path)?;
    println!("{} ({} pixels outside the disc drawn black)", path, colored.non_finite);
    Ok(())
}
