pub mod config;
pub mod error;
pub mod experiment;
pub mod model;
pub mod modulator;
pub mod quad;
pub mod report;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod subordination;
pub mod verify;
