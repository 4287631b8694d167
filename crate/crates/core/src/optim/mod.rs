pub mod lm;

pub use lm::{levenberg_marquardt, LeastSquares, LmConfig, LmReport};
