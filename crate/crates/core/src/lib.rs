//! Market-clearing combinatorial Walrasian equilibria: exact LP
//! characterization, constructive mechanisms and brute-force oracles.

pub mod configlp;
pub mod equilibria;
pub mod error;
pub mod exactlp;
pub mod instances;
pub mod market;
pub mod mechanisms;
pub mod oracle;
pub mod rational;
pub mod valuation;

pub use error::{Error, Result};
pub use market::{
    induced_partition, revenue, social_welfare, Allocation, BundleSet, Instance, ItemSet, Metadata,
    Outcome, Owner, Partition, Prices,
};
pub use rational::Rat;
pub use valuation::Valuation;
