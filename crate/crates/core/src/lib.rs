pub mod arch;
pub mod cli;
pub mod data;
pub mod hpo;
pub mod kv;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod train;
pub mod uq;
