//! Fixtures, random chain corpora and reference computations for tests and
//! benchmarks. Enabled by the `testing` feature.

pub mod corpus;
pub mod fixtures;
pub mod oracle;
