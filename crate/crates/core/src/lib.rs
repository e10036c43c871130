pub mod bernstein;
pub mod bounds;
pub mod data_driven;
pub mod domain;
pub mod dynamics;
pub mod edmd;
pub mod error;
pub mod experiments;
pub mod koopman;
pub mod modulus;
