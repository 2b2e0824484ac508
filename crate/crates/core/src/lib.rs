pub mod cli;
pub mod data;
pub mod encoders;
pub mod eval;
pub mod gradcheck;
pub mod numerics;
pub mod rng;
pub mod zsl;
