//! Seeded random families.
//!
//! Every stream is ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`) fed
//! through `rand` 0.8's `gen_range`, so a seed reproduces the same instance
//! on every platform.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::market::{Instance, ItemSet, Metadata};
use crate::rational::{int, rat, Rat};
use crate::valuation::Valuation;

/// Largest `m` for the explicit-table family.
pub const MAX_RANDOM_TABLE_ITEMS: usize = 12;

fn check(m: usize, n: usize, max_m: usize) -> Result<()> {
    if m == 0 || m > max_m || n == 0 || n > 32 {
        return Err(Error::BadParams(format!(
            "need 1 <= m <= {max_m} and 1 <= n <= 32, got m={m}, n={n}"
        )));
    }
    Ok(())
}

fn tagged(inst: Instance, family: &str, m: usize, n: usize, seed: u64) -> Instance {
    let mut meta = Metadata::default();
    for (k, v) in [
        ("family", family.to_string()),
        ("m", m.to_string()),
        ("n", n.to_string()),
        ("seed", seed.to_string()),
    ] {
        meta.params.insert(k.into(), v);
    }
    inst.with_metadata(meta)
}

fn random_subset(rng: &mut ChaCha8Rng, m: usize, size: usize) -> ItemSet {
    ItemSet::from_items(sample(rng, m, size))
}

/// Each agent's table is the max of a random additive base and up to two
/// single-minded bumps, closed under `v(S) >= v(T) + v(S \ T)`.
pub fn random_superadditive(m: usize, n: usize, seed: u64) -> Result<Instance> {
    check(m, n, MAX_RANDOM_TABLE_ITEMS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = 1u32 << m;
    let mut agents = Vec::with_capacity(n);
    for _ in 0..n {
        let base: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=4)).collect();
        let bumps: Vec<(u32, i64)> = (0..rng.gen_range(0..=2))
            .map(|_| (rng.gen_range(1..full), rng.gen_range(1..=12)))
            .collect();
        let mut table: Vec<Rat> = (0..full)
            .map(|s| {
                let additive: i64 = (0..m).filter(|j| s >> j & 1 == 1).map(|j| base[j]).sum();
                let bump = bumps
                    .iter()
                    .filter(|(d, _)| d & s == *d)
                    .map(|(_, v)| *v)
                    .max()
                    .unwrap_or(0);
                int(additive.max(bump))
            })
            .collect();
        // submasks precede their supersets, so one pass closes the table
        for s in 1..full {
            let mut t = (s - 1) & s;
            while t > 0 {
                let split = &table[t as usize] + &table[(s ^ t) as usize];
                if split > table[s as usize] {
                    table[s as usize] = split;
                }
                t = (t - 1) & s;
            }
        }
        agents.push(Valuation::SuperadditiveExplicit { table });
    }
    let inst = Instance::new(format!("random_superadditive_{seed}"), m, agents)?;
    Ok(tagged(inst, "random_superadditive", m, n, seed))
}

/// Desired sets of uniform random size, integer values in `1..=20`.
pub fn random_single_minded(m: usize, n: usize, seed: u64) -> Result<Instance> {
    check(m, n, crate::market::MAX_ITEMS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = (0..n)
        .map(|_| {
            let size = rng.gen_range(1..=m);
            Valuation::SingleMinded {
                desired: random_subset(&mut rng, m, size),
                value: int(rng.gen_range(1..=20)),
            }
        })
        .collect();
    let inst = Instance::new(format!("random_single_minded_{seed}"), m, agents)?;
    Ok(tagged(inst, "random_single_minded", m, n, seed))
}

/// Shared item values in `{1/2, 1, …, 8}`, each agent interested in each
/// item with probability 1/2, budgets in `{8, 17/2, …, 16}` (one draw for
/// all agents when `identical_budgets`). Every value is at most every
/// budget.
pub fn random_uniform_budget_additive(
    m: usize,
    n: usize,
    identical_budgets: bool,
    seed: u64,
) -> Result<Instance> {
    check(m, n, crate::market::MAX_ITEMS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<Rat> = (0..m).map(|_| rat(rng.gen_range(1..=16), 2)).collect();
    let shared_budget = rat(rng.gen_range(16..=32), 2);
    let agents = (0..n)
        .map(|_| {
            let budget = if identical_budgets {
                shared_budget.clone()
            } else {
                rat(rng.gen_range(16..=32), 2)
            };
            let item_values = values
                .iter()
                .map(|v| if rng.gen_bool(0.5) { v.clone() } else { int(0) })
                .collect();
            Valuation::BudgetAdditive {
                budget,
                item_values,
            }
        })
        .collect();
    let family = "random_uniform_budget_additive";
    let inst =
        Instance::new(format!("{family}_{seed}"), m, agents)?.with_uniform_item_values(values)?;
    let mut inst = tagged(inst, family, m, n, seed);
    if identical_budgets {
        let mut meta = inst.metadata().clone();
        meta.params
            .insert("identical_budgets".into(), "true".into());
        inst = inst.with_metadata(meta);
    }
    Ok(inst)
}
