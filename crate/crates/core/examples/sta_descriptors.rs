//! Grid histograms of a moving sequence, aggregated into STA1 (mean) and
//! STA2 (per-component histograms over time) descriptors.

use std::error::Error;

use staflow::flow::{FarnebackParams, FlowAlgorithm};
use staflow::raster::GrayFrame;
use staflow::sta::{grid_vector, orientation_bin, sta1, BoundingBox, Sta2Accumulator, StaParams};
use staflow::synth::smooth_texture;

fn main() -> Result<(), Box<dyn Error>> {
    let params = StaParams::new(8, 6, 8, 5);
    println!("grid vector length m·n·k1 = {}, STA2 length m·n·k1·k2 = {}", params.grid_len(), params.sta2_len());
    println!("a rightward vector falls in bin {}, a downward one in bin {}", orientation_bin(1.0, 0.0, 8)?, orientation_bin(0.0, 1.0, 8)?);

    // texture drifting down-right with increasing speed
    let canvas = smooth_texture(120, 100, 1);
    let mut offset = 0.0;
    let frames: Vec<GrayFrame> = (0..6)
        .map(|i| {
            offset += 0.5 * i as f64;
            GrayFrame::from_fn(96, 72, |x, y| canvas.sample_bilinear(x as f64 + 12.0 - offset, y as f64 + 12.0 - offset))
        })
        .collect();
    let bbox = BoundingBox::new(8, 6, 80, 60);
    let flow = FlowAlgorithm::Farneback(FarnebackParams::default());

    let mut grids = Vec::new();
    let mut acc = Sta2Accumulator::new(params)?;
    for pair in frames.windows(2) {
        let g = grid_vector(&flow.compute(&pair[0], &pair[1])?, &bbox, &params)?;
        acc.push(&g)?;
        grids.push(g);
    }
    let d1 = sta1(&grids, None)?;
    let d2 = acc.extract()?;
    println!("STA1: {} values, first patch {:?}", d1.len(), &d1.values[..8]);
    println!("STA2: {} values from t = {} grid vectors", d2.len(), acc.t());
    println!("first patch, bin 1 (down-right) over time: {:?}", &d2.values[5..10]);
    Ok(())
}
