//! Mechanisms that return MC-CWE outcomes, each with a replayable trace.

mod budget_additive;
mod bundling;
mod single_minded;
mod superadditive;

use std::fmt;
use std::str::FromStr;

pub use budget_additive::{identical_budget_cleanup, uniform_budget_additive_mccwe};
pub use bundling::{bundle_efficient_full_surplus, log_bundling_mechanism, log_bundling_partition};
pub use single_minded::single_minded_mccwe;
pub use superadditive::{phase_two_demand_gap, superadditive_mccwe};

use crate::error::{Error, Result};
use crate::market::{social_welfare, Allocation, Instance, ItemSet, Outcome, Owner};
use crate::rational::Rat;

/// One move: `items` go to `agent` (`None` is the unallocated pool).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub phase: &'static str,
    pub agent: Option<usize>,
    pub items: ItemSet,
    pub welfare_before: Rat,
    pub welfare_after: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismTrace {
    pub mechanism: Mechanism,
    pub initial: Allocation,
    pub steps: Vec<TraceStep>,
}

impl MechanismTrace {
    fn new(mechanism: Mechanism, initial: Allocation) -> Self {
        MechanismTrace {
            mechanism,
            initial,
            steps: Vec::new(),
        }
    }

    /// Moves `items` to `to` in `x`, logging the step.
    fn apply(
        &mut self,
        instance: &Instance,
        x: &mut Allocation,
        phase: &'static str,
        to: Owner,
        items: ItemSet,
    ) {
        let welfare_before = social_welfare(instance, x);
        x.move_items(items, to);
        self.steps.push(TraceStep {
            phase,
            agent: match to {
                Owner::Agent(i) => Some(i),
                Owner::Unallocated => None,
            },
            items,
            welfare_before,
            welfare_after: social_welfare(instance, x),
        });
    }

    /// The allocation obtained by applying every step to `initial`.
    pub fn replay(&self) -> Allocation {
        let mut x = self.initial.clone();
        for s in &self.steps {
            x.move_items(s.items, s.agent.map_or(Owner::Unallocated, Owner::Agent));
        }
        x
    }

    pub fn count(&self, phase: &str) -> usize {
        self.steps.iter().filter(|s| s.phase == phase).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismRun {
    pub outcome: Outcome,
    pub trace: MechanismTrace,
}

impl MechanismRun {
    fn finish(instance: &Instance, x: Allocation, trace: MechanismTrace) -> Result<Self> {
        debug_assert_eq!(trace.replay(), x);
        Ok(MechanismRun {
            outcome: Outcome::full_surplus(instance, x)?,
            trace,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    Superadditive,
    SingleMinded,
    UniformBudgetAdditive,
    LogBundling,
    IdenticalBudgetCleanup,
    FullSurplus,
}

impl Mechanism {
    pub const ALL: [Mechanism; 6] = [
        Mechanism::Superadditive,
        Mechanism::SingleMinded,
        Mechanism::UniformBudgetAdditive,
        Mechanism::LogBundling,
        Mechanism::IdenticalBudgetCleanup,
        Mechanism::FullSurplus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Superadditive => "superadditive",
            Mechanism::SingleMinded => "singleminded",
            Mechanism::UniformBudgetAdditive => "uba",
            Mechanism::LogBundling => "logbundle",
            Mechanism::IdenticalBudgetCleanup => "cleanup",
            Mechanism::FullSurplus => "fullsurplus",
        }
    }

    /// Whether the mechanism transforms a given allocation.
    pub fn takes_allocation(self) -> bool {
        matches!(
            self,
            Mechanism::UniformBudgetAdditive | Mechanism::IdenticalBudgetCleanup
        )
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::BadParams(format!("unknown mechanism {s:?}")))
    }
}

fn argmax_full_value(instance: &Instance) -> (usize, Rat) {
    let full = instance.items();
    let mut best = (0, instance.agent(0).value(full));
    for (i, v) in instance.agents().iter().enumerate().skip(1) {
        let val = v.value(full);
        if val > best.1 {
            best = (i, val);
        }
    }
    best
}
