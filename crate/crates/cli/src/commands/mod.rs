pub mod batch;
pub mod eval;
pub mod fit;
pub mod synth;
