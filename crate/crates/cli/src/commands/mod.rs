pub mod elo;
pub mod eval;
pub mod preprocess;
pub mod rank;
pub mod serve;
pub mod simulate;
pub mod train;
