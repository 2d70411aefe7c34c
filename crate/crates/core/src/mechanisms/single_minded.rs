use super::{argmax_full_value, Mechanism, MechanismRun, MechanismTrace};
use crate::error::{Error, Result};
use crate::market::{Allocation, Instance, ItemSet, Owner};
use crate::rational::Rat;
use crate::valuation::Valuation;

/// Greedy allocation among small desired sets (`|S_i|² <= m`),
/// leftovers to the first nonempty bundle, then large-set bidders in
/// decreasing value take over every bundle meeting their set when they
/// outbid its holders combined.
///
/// With no small-set bidder everything goes to the bidder valuing `M` most.
pub fn single_minded_mccwe(instance: &Instance) -> Result<MechanismRun> {
    let bids: Vec<(ItemSet, Rat)> = instance
        .agents()
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Valuation::SingleMinded { desired, value } => Ok((*desired, value.clone())),
            _ => Err(Error::NotSingleMinded { agent: i }),
        })
        .collect::<Result<_>>()?;
    let m = instance.m();
    let mut x = Allocation::empty(m, instance.n());
    let mut trace = MechanismTrace::new(Mechanism::SingleMinded, x.clone());

    let (small, large): (Vec<usize>, Vec<usize>) =
        (0..bids.len()).partition(|&i| bids[i].0.len() * bids[i].0.len() <= m);
    let by_value = |mut agents: Vec<usize>| {
        // stable: equal values keep increasing index order
        agents.sort_by(|&a, &b| bids[b].1.cmp(&bids[a].1));
        agents
    };

    if small.is_empty() {
        let (top, _) = argmax_full_value(instance);
        trace.apply(
            instance,
            &mut x,
            "fallback",
            Owner::Agent(top),
            instance.items(),
        );
    } else {
        let mut taken = ItemSet::EMPTY;
        for i in by_value(small) {
            let desired = bids[i].0;
            if taken.is_disjoint(desired) {
                trace.apply(instance, &mut x, "greedy", Owner::Agent(i), desired);
                taken = taken.union(desired);
            }
        }
        let leftover = x.unallocated();
        if !leftover.is_empty() {
            let first = (0..instance.n())
                .find(|&i| !x.bundle(i).is_empty())
                .expect("the first small bidder always wins");
            trace.apply(instance, &mut x, "leftover", Owner::Agent(first), leftover);
        }
    }

    for i in by_value(large) {
        let (desired, value) = &bids[i];
        let holders: Vec<usize> = (0..instance.n())
            .filter(|&j| !x.bundle(j).is_disjoint(*desired))
            .collect();
        let held: Rat = holders
            .iter()
            .map(|&j| instance.agent(j).value(x.bundle(j)))
            .sum();
        if *value > held {
            let items = holders
                .iter()
                .fold(ItemSet::EMPTY, |acc, &j| acc.union(x.bundle(j)));
            trace.apply(instance, &mut x, "phase2", Owner::Agent(i), items);
        }
    }
    MechanismRun::finish(instance, x, trace)
}
