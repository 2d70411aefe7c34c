use num_traits::Signed;

use super::{Mechanism, MechanismRun, MechanismTrace};
use crate::error::{Error, Result};
use crate::market::{Allocation, Instance, ItemSet, Owner};
use crate::rational::Rat;
use crate::valuation::uniform_item_values;

/// Shared item values and per-agent budgets.
fn uniform_parts(instance: &Instance) -> Result<(Vec<Rat>, Vec<Rat>)> {
    let Some(values) = uniform_item_values(instance) else {
        return Err(Error::NotUniformBudgetAdditive(
            "agents must be budget-additive with one shared value per item".into(),
        ));
    };
    let budgets = instance
        .agents()
        .iter()
        .map(|v| v.budget().expect("budget-additive").clone())
        .collect();
    Ok((values, budgets))
}

/// Gives every item held by an agent with no value for it (or left
/// unallocated) to the lowest-index agent valuing it, if any.
fn reassign_unvalued(
    instance: &Instance,
    x: &mut Allocation,
    trace: &mut MechanismTrace,
    phase: &'static str,
) {
    for j in 0..instance.m() {
        let holder_values = match x.owner_of(j) {
            Owner::Agent(i) => instance.agent(i).item_value(j).is_positive(),
            Owner::Unallocated => false,
        };
        if holder_values {
            continue;
        }
        let to = (0..instance.n())
            .find(|&l| instance.agent(l).item_value(j).is_positive())
            .map_or(Owner::Unallocated, Owner::Agent);
        if to != x.owner_of(j) {
            trace.apply(instance, x, phase, to, ItemSet::singleton(j));
        }
    }
}

/// Agents in nondecreasing budget order shed their cheapest
/// items that a richer agent values, each to the richest agent valuing it,
/// until within budget. Prices are `p_i = v_i(x_i)`.
pub fn uniform_budget_additive_mccwe(instance: &Instance, x: &Allocation) -> Result<MechanismRun> {
    let (values, budget) = uniform_parts(instance)?;
    instance.check_allocation(x)?;
    let mut x = x.clone();
    let mut trace = MechanismTrace::new(Mechanism::UniformBudgetAdditive, x.clone());
    reassign_unvalued(instance, &mut x, &mut trace, "prepass");

    // sums use the shared values, not v_i({j}) = min(B_i, v_j)
    let over =
        |x: &Allocation, i: usize| x.bundle(i).iter().map(|j| &values[j]).sum::<Rat>() > budget[i];
    if (0..instance.n()).all(|i| !over(&x, i)) {
        return MechanismRun::finish(instance, x, trace);
    }

    let mut order: Vec<usize> = (0..instance.n()).collect();
    order.sort_by(|&a, &b| budget[a].cmp(&budget[b]));
    for i in order {
        while over(&x, i) {
            let interested = |j: usize| {
                (0..instance.n()).filter(move |&l| instance.agent(l).item_value(j).is_positive())
            };
            let movable = x
                .bundle(i)
                .iter()
                .filter(|&j| interested(j).any(|l| budget[l] > budget[i]));
            let Some(j) = movable.min_by(|&a, &b| values[a].cmp(&values[b])) else {
                break;
            };
            let to = interested(j)
                .reduce(|best, l| if budget[l] > budget[best] { l } else { best })
                .expect("a richer agent values j");
            trace.apply(
                instance,
                &mut x,
                "rebalance",
                Owner::Agent(to),
                ItemSet::singleton(j),
            );
        }
    }
    MechanismRun::finish(instance, x, trace)
}

/// With identical budgets every allocation whose items sit with agents
/// valuing them is MC-CWE; this moves the rest and prices at `v_i(x_i)`.
pub fn identical_budget_cleanup(instance: &Instance, x: &Allocation) -> Result<MechanismRun> {
    let (_, budget) = uniform_parts(instance)?;
    if let Some(agent) = budget.iter().position(|b| *b != budget[0]) {
        return Err(Error::NotIdenticalBudgets { agent });
    }
    instance.check_allocation(x)?;
    let mut x = x.clone();
    let mut trace = MechanismTrace::new(Mechanism::IdenticalBudgetCleanup, x.clone());
    reassign_unvalued(instance, &mut x, &mut trace, "cleanup");
    MechanismRun::finish(instance, x, trace)
}
