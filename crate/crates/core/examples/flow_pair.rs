//! Both flow solvers on a synthetic translation, with error statistics and
//! `.flo` / PNG output.
//!
//! ```text
//! cargo run --release --example flow_pair -- [out_dir]
//! ```

use std::error::Error;
use std::path::PathBuf;
use std::time::Instant;

use staflow::color::flow_to_color;
use staflow::flow::{median_endpoint_error, save_flo, FarnebackParams, FlowAlgorithm, TvL1Params};
use staflow::synth::translation_pair;

fn main() -> Result<(), Box<dyn Error>> {
    let out: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("staflow-flow-pair"), PathBuf::from);
    std::fs::create_dir_all(&out)?;

    let truth = (2.5, -1.0);
    let fx = translation_pair(160, 120, truth, 7);
    let solvers = [
        FlowAlgorithm::Farneback(FarnebackParams { w: 2, s: 5, sigma: 1.1, ..Default::default() }),
        FlowAlgorithm::Tvl1(TvL1Params { lambda: 0.05, theta: 0.1, tau: 0.15, ..Default::default() }),
    ];
    for solver in &solvers {
        let start = Instant::now();
        let flow = solver.compute(&fx.prev, &fx.next)?;
        let epe = median_endpoint_error(&flow, truth, 8);
        println!("{:<60} median EPE {epe:.4} px in {:.2?}", solver.label(), start.elapsed());
        save_flo(&flow, out.join(format!("{}.flo", solver.name())))?;
        flow_to_color(&flow, None).image.save(out.join(format!("{}.png", solver.name())))?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
