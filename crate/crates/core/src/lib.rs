//! Disclosure analysis for data-integration settings with source constraints.

pub mod check;
pub mod corpus;
pub mod engine;
pub mod hardgen;
pub mod instance;
pub mod model;
pub mod oracle;
pub mod rewrite;
pub mod syntax;
pub mod uid;
pub mod verdict;
pub mod vischase;
