pub mod bench;
pub mod cli;
pub mod color;
pub mod flow;
pub mod learn;
pub mod raster;
pub mod sta;
pub mod synth;
