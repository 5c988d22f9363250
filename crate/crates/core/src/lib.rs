pub mod linalg;
mod phase;
pub mod pfaffian;
pub mod kernel;
pub mod points;
pub mod quadrature;
pub mod sampler;
pub mod integrals;
pub mod stationary;
pub mod heat;
