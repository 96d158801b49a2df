pub mod cli;
pub mod fields;
pub mod harness;
pub mod modes;
pub mod propagator;
pub mod quadrature;
