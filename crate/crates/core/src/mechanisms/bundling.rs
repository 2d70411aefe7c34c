use super::superadditive::require_superadditive;
use super::{Mechanism, MechanismRun, MechanismTrace};
use crate::error::Result;
use crate::market::{Allocation, Instance, ItemSet, Owner, Partition};
use crate::oracle::{optimal_over_partition, OracleBudget};

/// Bundle-efficient allocation over `p` (found exhaustively) with
/// full-surplus prices.
pub fn bundle_efficient_full_surplus(instance: &Instance, p: &Partition) -> Result<MechanismRun> {
    require_superadditive(instance)?;
    let best = optimal_over_partition(instance, p, &mut OracleBudget::default())?;
    let mut x = Allocation::empty(instance.m(), instance.n());
    let mut trace = MechanismTrace::new(Mechanism::FullSurplus, x.clone());
    for (j, owner) in best.owners.iter().enumerate() {
        if let Some(i) = owner {
            trace.apply(instance, &mut x, "assign", Owner::Agent(*i), p.block(j));
        }
    }
    MechanismRun::finish(instance, x, trace)
}

/// `⌈log2 m⌉` contiguous blocks (at least one) whose sizes differ by at
/// most one, larger blocks first.
pub fn log_bundling_partition(m: usize) -> Partition {
    let k = (usize::BITS - (m.max(2) - 1).leading_zeros()) as usize;
    let (base, extra) = (m / k, m % k);
    let mut blocks = Vec::with_capacity(k);
    let mut start = 0;
    for b in 0..k {
        let size = base + usize::from(b < extra);
        blocks.push(ItemSet::from_items(start..start + size));
        start += size;
    }
    Partition::new(m, blocks).expect("contiguous blocks cover M")
}

/// Groups items into `⌈log2 m⌉` bundles and returns the bundle-efficient
/// allocation over them.
pub fn log_bundling_mechanism(instance: &Instance) -> Result<MechanismRun> {
    let p = log_bundling_partition(instance.m());
    let mut run = bundle_efficient_full_surplus(instance, &p)?;
    run.trace.mechanism = Mechanism::LogBundling;
    Ok(run)
}
