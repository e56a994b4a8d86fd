//! Meta-path credit-risk features over heterogeneous information networks.

pub mod hin;
pub mod metapath;
pub mod riskbayes;
pub mod mpfeatures;
pub mod creditmodel;
pub mod evalharness;
pub mod synthgen;
pub mod cli;
