pub mod cli;
pub mod coverage;
pub mod error;
pub mod figures;
pub mod icsc;
pub mod kernels;
pub mod moments;
pub mod netsim;
pub mod qmc;
pub mod scenario;
pub mod special;
