pub mod cli;
pub mod data;
pub mod dsp;
pub mod harness;
pub mod model;
pub mod numcore;
pub mod seeds;
