//! The configuration LP of a reduced market and the LP characterization of
//! MC-CWE allocations.
//!
//! For a partition `Π` with `k` blocks the LP has one variable `y_{i,S}` per
//! agent and nonempty bundle set `S ⊆ Π`:
//!
//! ```text
//! max  Σ v_i(S) y_{i,S}
//! s.t. Σ_S y_{i,S} <= 1              for every agent i      (dual u_i)
//!      Σ_{i, S ∋ j} y_{i,S} <= 1     for every block j      (dual q_j)
//!      y >= 0
//! ```
//!
//! An allocation `X` is MC-CWE iff this LP over `Π(X)` has optimum
//! `SW(X)`; the block duals `q` are then supporting prices.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exactlp::{solve_lp, LinearProgram, LpStatus, Relation, MAX_LP_VARIABLES};
use crate::market::{
    induced_partition, social_welfare, Allocation, BundleSet, Instance, Outcome, Partition, Prices,
};
use crate::oracle::{optimal_over_partition, OracleBudget};
use crate::rational::{int, Rat};

/// Largest block count for a configuration LP.
pub const MAX_CONFIG_BLOCKS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigLpSolution {
    pub value: Rat,
    /// Nonzero `y_{i,S}`.
    pub y: BTreeMap<(usize, BundleSet), Rat>,
    pub dual_u: Vec<Rat>,
    pub dual_q: Vec<Rat>,
}

fn check_size(n: usize, k: usize) -> Result<()> {
    if k > MAX_CONFIG_BLOCKS {
        return Err(Error::SizeLimit(format!(
            "configuration LP over {k} blocks (cap is {MAX_CONFIG_BLOCKS})"
        )));
    }
    let vars = n.saturating_mul((1usize << k) - 1);
    if vars > MAX_LP_VARIABLES {
        return Err(Error::SizeLimit(format!(
            "configuration LP needs {vars} variables (cap is {MAX_LP_VARIABLES})"
        )));
    }
    Ok(())
}

/// Column order is agent-major, then bundle mask `1..2^k`.
pub fn build_config_lp(instance: &Instance, p: &Partition) -> Result<LinearProgram> {
    let n = instance.n();
    let k = p.len();
    check_size(n, k)?;
    let cols = (1u32 << k) - 1;
    let width = n * cols as usize;

    let mut objective = Vec::with_capacity(width);
    for v in instance.agents() {
        for mask in 1..=cols {
            objective.push(v.value(p.union_of(BundleSet(mask))));
        }
    }
    let mut lp = LinearProgram::new(objective);
    for i in 0..n {
        let mut row = vec![Rat::zero(); width];
        for c in 0..cols as usize {
            row[i * cols as usize + c] = int(1);
        }
        lp.add_constraint(row, Relation::Le, int(1));
    }
    for j in 0..k {
        let mut row = vec![Rat::zero(); width];
        for i in 0..n {
            for mask in 1..=cols {
                if mask >> j & 1 == 1 {
                    row[i * cols as usize + mask as usize - 1] = int(1);
                }
            }
        }
        lp.add_constraint(row, Relation::Le, int(1));
    }
    Ok(lp)
}

/// Exact fractional optimum of the configuration LP with its dual.
pub fn fractional_opt(instance: &Instance, p: &Partition) -> Result<ConfigLpSolution> {
    let lp = build_config_lp(instance, p)?;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        // y = 0 is feasible and the region is bounded
        return Err(Error::Certificate(format!(
            "configuration LP reported {:?}",
            sol.status
        )));
    }
    let n = instance.n();
    let cols = (1usize << p.len()) - 1;
    let mut y = BTreeMap::new();
    for (idx, val) in sol.primal.iter().enumerate() {
        if !val.is_zero() {
            y.insert(
                (idx / cols, BundleSet((idx % cols + 1) as u32)),
                val.clone(),
            );
        }
    }
    Ok(ConfigLpSolution {
        value: sol.objective_value,
        y,
        dual_u: sol.dual[..n].to_vec(),
        dual_q: sol.dual[n..].to_vec(),
    })
}

fn check_refinement(x: &Allocation, p: &Partition) -> Result<()> {
    for (i, b) in x.bundles().iter().enumerate() {
        if p.bundle_covering(*b).is_none() {
            return Err(Error::InvalidAllocation(format!(
                "agent {i}'s bundle {b} is not a union of partition blocks"
            )));
        }
    }
    Ok(())
}

/// Fractional optimum over `p` minus `SW(X)`. Zero iff `X` is an
/// equilibrium allocation of the market bundled by `p`.
pub fn support_gap_over(instance: &Instance, x: &Allocation, p: &Partition) -> Result<Rat> {
    instance.check_allocation(x)?;
    check_refinement(x, p)?;
    let lp = fractional_opt(instance, p)?;
    Ok(lp.value - social_welfare(instance, x))
}

/// Whether `X` can be priced as a WE of the market bundled by `p`. With
/// the all-singletons partition this is the plain Walrasian test.
pub fn is_supportable_over(instance: &Instance, x: &Allocation, p: &Partition) -> Result<bool> {
    Ok(support_gap_over(instance, x, p)?.is_zero())
}

/// Whether `X` is an MC-CWE allocation: the LP over `Π(X)` is optimized by
/// `X` itself.
pub fn is_mccwe_allocation(instance: &Instance, x: &Allocation) -> Result<bool> {
    let induced = induced_partition(x);
    is_supportable_over(instance, x, &induced.partition)
}

/// Prices `X` with the block duals of the LP over `Π(X)`.
pub fn supporting_prices(instance: &Instance, x: &Allocation) -> Result<Outcome> {
    instance.check_allocation(x)?;
    let induced = induced_partition(x);
    let lp = fractional_opt(instance, &induced.partition)?;
    let welfare = social_welfare(instance, x);
    if lp.value != welfare {
        return Err(Error::NotMccwe {
            gap: lp.value - welfare,
        });
    }
    let agents = (0..instance.n())
        .map(|i| induced.block_of_agent(i).map(|b| lp.dual_q[b].clone()))
        .collect();
    let unallocated = induced.unallocated_block().map(|b| lp.dual_q[b].clone());
    Outcome::new(
        x.clone(),
        Prices::Bundles {
            agents,
            unallocated,
        },
    )
}

/// Walrasian item prices for `X` from the all-singletons LP, if any exist.
pub fn walrasian_prices(instance: &Instance, x: &Allocation) -> Result<Outcome> {
    instance.check_allocation(x)?;
    let p = Partition::singletons(instance.m());
    let lp = fractional_opt(instance, &p)?;
    let welfare = social_welfare(instance, x);
    if lp.value != welfare {
        return Err(Error::NotMccwe {
            gap: lp.value - welfare,
        });
    }
    Outcome::new(x.clone(), Prices::Items(lp.dual_q))
}

/// Fractional optimum over `p` divided by the best integral assignment of
/// its blocks.
pub fn integrality_gap(
    instance: &Instance,
    p: &Partition,
    budget: &mut OracleBudget,
) -> Result<Rat> {
    let frac = fractional_opt(instance, p)?;
    let integral = optimal_over_partition(instance, p, budget)?;
    if integral.value.is_zero() {
        return Ok(int(1));
    }
    Ok(frac.value / integral.value)
}
