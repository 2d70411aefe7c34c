//! Built-in example markets, seeded random families and the JSON file
//! format.

mod format;
mod generate;

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

pub use format::{
    parse_allocation, parse_instance, parse_outcome, write_allocation, write_instance,
    write_outcome, write_trace, FORMAT_VERSION,
};
pub use generate::{random_single_minded, random_superadditive, random_uniform_budget_additive};

use crate::error::{Error, Result};
use crate::market::{Instance, ItemSet, Metadata};
use crate::rational::{format_rat, int, rat, Rat};
use crate::valuation::Valuation;

pub const BUILT_INS: [&str; 6] = [
    "fig1a",
    "fig1b",
    "revenue_example",
    "bundling_necessity",
    "nonuniform_identical_budget",
    "partition_reduction",
];

pub const RANDOM_FAMILIES: [&str; 3] = [
    "random_superadditive",
    "random_single_minded",
    "random_uniform_budget_additive",
];

/// A family name with its parameters. Unset parameters take the family's
/// defaults.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstanceSpec {
    pub family: String,
    pub eps: Option<Rat>,
    pub big_r: Option<Rat>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub identical_budgets: bool,
    pub values: Option<Vec<Rat>>,
}

impl InstanceSpec {
    pub fn new(family: impl Into<String>) -> Self {
        InstanceSpec {
            family: family.into(),
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<Instance> {
        let m = || {
            self.m
                .ok_or_else(|| Error::BadParams(format!("{} needs m", self.family)))
        };
        let n = || {
            self.n
                .ok_or_else(|| Error::BadParams(format!("{} needs n", self.family)))
        };
        let seed = self.seed.unwrap_or(0);
        match self.family.as_str() {
            "fig1a" => fig1a(self.eps.clone().unwrap_or_else(|| rat(1, 10))),
            "fig1b" => Ok(fig1b()),
            "revenue_example" => revenue_example(self.big_r.clone().unwrap_or_else(|| int(100))),
            "bundling_necessity" => bundling_necessity(self.m.unwrap_or(16)),
            "nonuniform_identical_budget" => {
                nonuniform_identical_budget(self.eps.clone().unwrap_or_else(|| rat(1, 8)))
            }
            "partition_reduction" => partition_reduction(
                self.values
                    .clone()
                    .unwrap_or_else(|| vec![int(1), int(1), int(2)]),
            ),
            "random_superadditive" => random_superadditive(m()?, n()?, seed),
            "random_single_minded" => random_single_minded(m()?, n()?, seed),
            "random_uniform_budget_additive" => {
                random_uniform_budget_additive(m()?, n()?, self.identical_budgets, seed)
            }
            other => Err(Error::BadParams(format!("unknown family {other:?}"))),
        }
    }
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}{k}")).collect()
}

fn metadata(items: Vec<String>, agents: Vec<String>, params: &[(&str, String)]) -> Metadata {
    Metadata {
        item_names: items,
        agent_names: agents,
        params: params
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect::<BTreeMap<_, _>>(),
    }
}

/// Budget-additive agents over shared item values; each agent lists the
/// items it is interested in.
fn uniform_market(name: &str, values: &[Rat], agents: &[(Rat, &[usize])]) -> Result<Instance> {
    let agents = agents
        .iter()
        .map(|(budget, interest)| Valuation::BudgetAdditive {
            budget: budget.clone(),
            item_values: (0..values.len())
                .map(|j| {
                    if interest.contains(&j) {
                        values[j].clone()
                    } else {
                        Rat::zero()
                    }
                })
                .collect(),
        })
        .collect();
    Instance::new(name, values.len(), agents)?.with_uniform_item_values(values.to_vec())
}

fn check_eps(eps: &Rat) -> Result<()> {
    if !eps.is_positive() || *eps >= Rat::one() {
        return Err(Error::BadParams(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

/// Five uniform budget-additive agents over four items with an MC-CWE
/// welfare gap: fractional optimum 8, integral `8 - eps`, best MC-CWE 7.
pub fn fig1a(eps: Rat) -> Result<Instance> {
    check_eps(&eps)?;
    let one_minus = Rat::one() - &eps;
    let values = [int(1), int(4), int(2), int(2)];
    let inst = uniform_market(
        "fig1a",
        &values,
        &[
            (int(3), &[0, 1]),
            (int(4), &[1, 2, 3]),
            (one_minus.clone(), &[2]),
            (int(2), &[2, 3]),
            (one_minus, &[3]),
        ],
    )?;
    Ok(inst.with_metadata(metadata(
        names("a", 4),
        names("c", 5),
        &[("eps", format_rat(&eps))],
    )))
}

/// Identical budgets and no Walrasian equilibrium: fractional optimum 8,
/// integral optimum 7.
pub fn fig1b() -> Instance {
    let values = [int(1), int(1), int(1), int(1), int(1), int(1), int(2)];
    // items: α1 α2 a1 a2 b1 b2 β
    let inst = uniform_market(
        "fig1b",
        &values,
        &[
            (int(2), &[2, 4, 0]),
            (int(2), &[3, 5, 1]),
            (int(2), &[2, 4, 6]),
            (int(2), &[3, 5, 6]),
        ],
    )
    .expect("fixed instance");
    inst.with_metadata(metadata(
        ["α1", "α2", "a1", "a2", "b1", "b2", "β"]
            .map(String::from)
            .to_vec(),
        ["c1", "c2", "d1", "d2"].map(String::from).to_vec(),
        &[],
    ))
}

/// Two gross-substitutes agents where bundling lifts revenue from 5 to
/// `R + 3`.
pub fn revenue_example(big_r: Rat) -> Result<Instance> {
    if big_r < int(2) {
        return Err(Error::BadParams(format!(
            "R must be at least 2, got {big_r}"
        )));
    }
    let inst = Instance::new(
        "revenue_example",
        3,
        vec![
            Valuation::SingleMinded {
                desired: ItemSet::singleton(0),
                value: int(1),
            },
            Valuation::CappedAdditive {
                item_values: vec![&big_r - int(1), big_r.clone(), big_r.clone()],
                cap: 2,
            },
        ],
    )?;
    Ok(inst.with_metadata(metadata(
        names("a", 3),
        names("agent", 2),
        &[("R", format_rat(&big_r))],
    )))
}

/// `t = √m` small single-minded bidders whose size-`t` sets meet pairwise
/// in exactly one item, plus one bidder valuing all of `M` at `m`.
///
/// Items are the `C(t,2)` shared items `o_ij` (`i < j`, lexicographic),
/// then one private item per small bidder, then dummy items up to `m`.
pub fn bundling_necessity(m: usize) -> Result<Instance> {
    let t = (1..=m).find(|t| t * t >= m).unwrap_or(0);
    if t * t != m || t < 2 || m > crate::market::MAX_ITEMS {
        return Err(Error::BadParams(format!(
            "m must be a perfect square t^2 with t >= 2 and m <= {}, got {m}",
            crate::market::MAX_ITEMS
        )));
    }
    let mut item_names = Vec::with_capacity(m);
    let mut sets = vec![ItemSet::EMPTY; t];
    for i in 0..t {
        for j in i + 1..t {
            sets[i].insert(item_names.len());
            sets[j].insert(item_names.len());
            item_names.push(format!("o{}{}", i + 1, j + 1));
        }
    }
    for (i, set) in sets.iter_mut().enumerate() {
        set.insert(item_names.len());
        item_names.push(format!("p{}", i + 1));
    }
    let real = item_names.len();
    item_names.extend((1..=m - real).map(|k| format!("d{k}")));

    let small_value = int(1 + 2 * t as i64);
    let mut agents: Vec<Valuation> = sets
        .into_iter()
        .map(|desired| Valuation::SingleMinded {
            desired,
            value: small_value.clone(),
        })
        .collect();
    agents.push(Valuation::SingleMinded {
        desired: ItemSet::full(m),
        value: int(m as i64),
    });
    let mut agent_names = names("s", t);
    agent_names.push("big".into());
    Ok(
        Instance::new("bundling_necessity", m, agents)?.with_metadata(metadata(
            item_names,
            agent_names,
            &[("m", m.to_string())],
        )),
    )
}

/// Identical budgets but non-uniform values: fractional optimum
/// `4 + 2 eps`, integral optimum `4 + eps`, and every bundling of a pair
/// caps welfare at 4.
pub fn nonuniform_identical_budget(eps: Rat) -> Result<Instance> {
    check_eps(&eps)?;
    let ba = |values: Vec<Rat>| Valuation::BudgetAdditive {
        budget: int(2),
        item_values: values,
    };
    let inst = Instance::new(
        "nonuniform_identical_budget",
        3,
        vec![
            ba(vec![int(2), int(1), int(1)]),
            ba(vec![int(0), int(2), int(2)]),
            ba(vec![int(4) * &eps, int(0), eps.clone()]),
        ],
    )?;
    Ok(inst.with_metadata(metadata(
        names("a", 3),
        names("c", 3),
        &[("eps", format_rat(&eps))],
    )))
}

/// Two budget-additive agents with budget `Σ a_j / 2`: welfare `Σ a_j`
/// is attainable iff the values split into two equal halves.
pub fn partition_reduction(values: Vec<Rat>) -> Result<Instance> {
    if values.is_empty() || values.iter().any(|v| v.is_negative()) {
        return Err(Error::BadParams(
            "partition values must be a nonempty list of nonnegative rationals".into(),
        ));
    }
    let total: Rat = values.iter().sum();
    let budget = total / int(2);
    let m = values.len();
    let agent = Valuation::BudgetAdditive {
        budget: budget.clone(),
        item_values: values.clone(),
    };
    let inst = Instance::new("partition_reduction", m, vec![agent.clone(), agent])?
        .with_uniform_item_values(values)?;
    Ok(inst.with_metadata(metadata(
        names("a", m),
        names("agent", 2),
        &[("B", format_rat(&budget))],
    )))
}

/// Every built-in at its default parameters plus a few parameter sweeps.
pub fn corpus() -> Vec<Instance> {
    let mut out = vec![
        fig1a(rat(1, 10)).expect("valid"),
        fig1a(rat(1, 2)).expect("valid"),
        fig1b(),
        revenue_example(int(10)).expect("valid"),
        revenue_example(int(100)).expect("valid"),
        revenue_example(int(1000)).expect("valid"),
        nonuniform_identical_budget(rat(1, 8)).expect("valid"),
        partition_reduction(vec![int(1), int(1), int(2)]).expect("valid"),
        partition_reduction(vec![int(3), int(1), int(1), int(2), int(2), int(1)]).expect("valid"),
    ];
    for m in [4, 9, 16] {
        out.push(bundling_necessity(m).expect("valid"));
    }
    out
}
