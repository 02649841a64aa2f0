pub mod budget;
pub mod cli;
pub mod detection;
pub mod error;
pub mod fock;
pub mod memory;
pub mod params;
pub mod protocol;
pub mod sources;
