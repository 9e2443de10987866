//! Multiparameter persistent-homology fingerprints for molecular graphs,
//! with gradient-boosted ensembles that report decomposed uncertainty.

pub mod filtration;
pub mod harness;
pub mod homology;
pub mod metrics;
pub mod molgraph;
pub mod sglb;
pub mod vectorize;
