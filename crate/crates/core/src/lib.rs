pub mod error;
pub mod matcore;
pub mod schatten;
pub mod kernels;
pub mod random;
pub mod mazur;
pub mod strip;
pub mod estimator;
pub mod verify;
pub mod runner;
