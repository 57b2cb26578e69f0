pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod measures;
pub mod scenarios;
pub mod wigner;
