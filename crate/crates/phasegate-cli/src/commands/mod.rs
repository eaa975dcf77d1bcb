pub mod ablate;
pub mod audit;
pub mod correlate;
pub mod maskgen;
pub mod mimo;
pub mod phantom;
pub mod select;
pub mod validate;
