pub mod error;
pub mod grid;
pub mod special;
pub mod spectral_models;
pub mod kernel;
pub mod integrability;
pub mod flow;
pub mod proxy;
pub mod holder;
pub mod experiments;
