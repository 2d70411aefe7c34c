use std::cmp::Ordering;

use num_traits::{Signed, Zero};

use super::{argmax_full_value, Mechanism, MechanismRun, MechanismTrace};
use crate::error::{Error, Result};
use crate::market::{
    induced_partition, lex_less, social_welfare, Allocation, Instance, ItemSet, Owner,
};
use crate::rational::Rat;
use crate::valuation::{demand_with_utility, relative_demand_query};

/// Largest agent count for the subset enumeration of Phase 2.
pub const MAX_MERGE_AGENTS: usize = 16;

pub(super) fn require_superadditive(instance: &Instance) -> Result<()> {
    for (i, v) in instance.agents().iter().enumerate() {
        if !v.is_superadditive(instance.m())? {
            return Err(Error::NotSuperadditive { agent: i });
        }
    }
    Ok(())
}

/// Value-density greedy, a grand-bundle check, then local
/// merges until no agent values a set of bundles above their holders.
///
/// Phase 2 enumerates `(i, T)` directly and checks the chosen gap against
/// one demand query per agent on the bundled market.
pub fn superadditive_mccwe(instance: &Instance) -> Result<MechanismRun> {
    require_superadditive(instance)?;
    let n = instance.n();
    if n > MAX_MERGE_AGENTS {
        return Err(Error::SizeLimit(format!(
            "{n} agents for subset merging (cap is {MAX_MERGE_AGENTS})"
        )));
    }
    let mut x = Allocation::empty(instance.m(), n);
    let mut trace = MechanismTrace::new(Mechanism::Superadditive, x.clone());

    let mut remaining = instance.items();
    while !remaining.is_empty() {
        let mut best: Option<(usize, ItemSet, Rat)> = None;
        for (i, v) in instance.agents().iter().enumerate() {
            let (set, density) = relative_demand_query(v, remaining)?;
            if best.as_ref().is_none_or(|(_, _, d)| density > *d) {
                best = Some((i, set, density));
            }
        }
        let (i, set, _) = best.expect("at least one agent");
        trace.apply(instance, &mut x, "phase1", Owner::Agent(i), set);
        remaining = remaining.difference(set);
    }

    let (top, top_value) = argmax_full_value(instance);
    if top_value > social_welfare(instance, &x) {
        trace.apply(
            instance,
            &mut x,
            "line6",
            Owner::Agent(top),
            instance.items(),
        );
    }

    let limit = n * n;
    let mut merges = 0;
    loop {
        let choice = best_merge(instance, &x);
        let demand_gap = phase_two_demand_gap(instance, &x)?;
        let Some((i, t, gap)) = choice else {
            assert!(demand_gap.is_zero(), "demand route found gap {demand_gap}");
            break;
        };
        assert_eq!(
            gap, demand_gap,
            "merge enumeration and demand route disagree"
        );
        let items = t
            .iter()
            .fold(ItemSet::EMPTY, |acc, &j| acc.union(x.bundle(j)));
        trace.apply(instance, &mut x, "phase2", Owner::Agent(i), items);
        merges += 1;
        assert!(merges <= limit, "phase 2 exceeded {limit} merges");
    }
    MechanismRun::finish(instance, x, trace)
}

/// The `(i, T)` maximizing `v_i(∪_T x_j) - Σ_T v_j(x_j)` when that gap is
/// positive. `T` ranges over nonempty sets of agents holding nonempty
/// bundles. Ties: smaller `|T|`, then lower `i`, then lexicographic `T`.
fn best_merge(instance: &Instance, x: &Allocation) -> Option<(usize, Vec<usize>, Rat)> {
    let holders: Vec<usize> = (0..instance.n())
        .filter(|&j| !x.bundle(j).is_empty())
        .collect();
    let own: Vec<Rat> = holders
        .iter()
        .map(|&j| instance.agent(j).value(x.bundle(j)))
        .collect();
    let mut best: Option<(usize, u32, Rat)> = None;
    for mask in 1u32..1 << holders.len() {
        let mut union = ItemSet::EMPTY;
        let mut held = Rat::zero();
        for (k, &j) in holders.iter().enumerate() {
            if mask >> k & 1 == 1 {
                union = union.union(x.bundle(j));
                held += &own[k];
            }
        }
        for (i, v) in instance.agents().iter().enumerate() {
            let gap = v.value(union) - &held;
            if !gap.is_positive() {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bi, bm, bg)) => match gap.cmp(bg) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => {
                        (mask.count_ones(), i) < (bm.count_ones(), *bi)
                            || ((mask.count_ones(), i) == (bm.count_ones(), *bi)
                                && lex_less(mask, *bm))
                    }
                },
            };
            if better {
                best = Some((i, mask, gap));
            }
        }
    }
    best.map(|(i, mask, gap)| {
        let t = holders
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &j)| j)
            .collect();
        (i, t, gap)
    })
}

/// Largest utility any agent gets from a demand query on the market whose
/// items are the current bundles, priced at their holders' values.
pub fn phase_two_demand_gap(instance: &Instance, x: &Allocation) -> Result<Rat> {
    let induced = induced_partition(x);
    let prices: Vec<Rat> = induced
        .owners
        .iter()
        .zip(induced.partition.blocks())
        .map(|(owner, block)| match owner {
            Owner::Agent(j) => instance.agent(*j).value(*block),
            Owner::Unallocated => Rat::zero(),
        })
        .collect();
    let mut best = Rat::zero();
    for v in instance.agents() {
        let (u, _) = demand_with_utility(v, &induced.partition, &prices)?;
        if u > best {
            best = u;
        }
    }
    Ok(best)
}
