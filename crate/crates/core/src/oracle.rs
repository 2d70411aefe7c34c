//! Exhaustive ground truth: integral optima, optima over a fixed bundling,
//! the best MC-CWE, and item-pricing supportability for single-minded
//! bidders.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::configlp::{fractional_opt, supporting_prices};
use crate::error::{Error, Result};
use crate::exactlp::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::market::{
    induced_partition, lex_less, social_welfare, Allocation, BundleSet, Instance, ItemSet, Outcome,
    Partition,
};
use crate::rational::{int, Rat};

pub const DEFAULT_MAX_STATES: u64 = 10_000_000;

/// Caps the number of enumerated states across oracle calls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_states: u64,
    pub used: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget::new(DEFAULT_MAX_STATES)
    }
}

impl OracleBudget {
    pub fn new(max_states: u64) -> Self {
        OracleBudget {
            max_states,
            used: 0,
        }
    }

    pub fn remaining(&self) -> u64 {
        self.max_states.saturating_sub(self.used)
    }

    /// Reserves `base^exp` states, or fails without charging anything.
    pub fn charge_power(&mut self, base: usize, exp: usize, what: &str) -> Result<u64> {
        let states = (base as u64)
            .checked_pow(exp as u32)
            .filter(|&s| s <= self.remaining())
            .ok_or_else(|| {
                Error::SizeLimit(format!(
                    "{what} needs {base}^{exp} states; {} remain in the budget",
                    self.remaining()
                ))
            })?;
        self.used += states;
        Ok(states)
    }
}

/// A welfare-maximal assignment of whole blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAssignment {
    /// `owners[j]` is the agent receiving block `j`, if any.
    pub owners: Vec<Option<usize>>,
    pub allocation: Allocation,
    pub value: Rat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralOpt {
    pub allocation: Allocation,
    pub value: Rat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestMccwe {
    pub outcome: Outcome,
    pub value: Rat,
    /// Configuration LPs actually solved.
    pub lps_solved: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemPricing {
    pub welfare: Rat,
    pub winners: Vec<usize>,
    pub prices: Vec<Rat>,
}

/// Per-agent reduced value tables over bundle masks, scaled to a common
/// integer denominator when that fits in `i128` so enumeration avoids
/// big-number arithmetic.
enum Tables {
    Scaled(Vec<Vec<i128>>),
    Exact(Vec<Vec<Rat>>),
}

fn block_tables(instance: &Instance, p: &Partition) -> Tables {
    let k = p.len();
    let exact: Vec<Vec<Rat>> = instance
        .agents()
        .iter()
        .map(|v| {
            (0..1u32 << k)
                .map(|mask| v.value(p.union_of(BundleSet(mask))))
                .collect()
        })
        .collect();
    match scale(&exact, instance.n()) {
        Some(scaled) => Tables::Scaled(scaled),
        None => Tables::Exact(exact),
    }
}

fn scale(tables: &[Vec<Rat>], n: usize) -> Option<Vec<Vec<i128>>> {
    let mut denom = BigInt::one();
    for r in tables.iter().flatten() {
        denom = denom.lcm(r.denom());
    }
    let limit = i128::MAX / (n.max(1) as i128 + 1);
    tables
        .iter()
        .map(|row| {
            row.iter()
                .map(|r| {
                    let s = (r.numer() * (&denom / r.denom())).to_i128()?;
                    (s.abs() <= limit).then_some(s)
                })
                .collect()
        })
        .collect()
}

/// Visits every assignment of `k` blocks to `{unallocated} ∪ agents` in
/// increasing lexicographic order of the code vector (block 0 most
/// significant). `visit` receives the code and each agent's bundle mask.
fn for_each_assignment(n: usize, k: usize, mut visit: impl FnMut(&[usize], &[u32])) {
    let mut code = vec![0usize; k];
    let mut masks = vec![0u32; n + 1]; // masks[0] is the unallocated pool
    masks[0] = if k == 0 { 0 } else { (1u32 << k) - 1 };
    loop {
        visit(&code, &masks[1..]);
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            let bit = 1u32 << pos;
            masks[code[pos]] &= !bit;
            if code[pos] < n {
                code[pos] += 1;
                masks[code[pos]] |= bit;
                break;
            }
            code[pos] = 0;
            masks[0] |= bit;
        }
    }
}

fn welfare_of<T: Clone + std::ops::AddAssign<T>>(tables: &[Vec<T>], masks: &[u32], zero: T) -> T {
    let mut w = zero;
    for (row, &mask) in tables.iter().zip(masks) {
        w += row[mask as usize].clone();
    }
    w
}

/// Lexicographically first welfare-maximal code vector.
fn best_code(n: usize, k: usize, tables: &Tables) -> Vec<usize> {
    fn run<T: Clone + Ord + std::ops::AddAssign<T>>(
        n: usize,
        k: usize,
        tables: &[Vec<T>],
        zero: T,
    ) -> Vec<usize> {
        let mut best: Option<(T, Vec<usize>)> = None;
        for_each_assignment(n, k, |code, masks| {
            let w = welfare_of(tables, masks, zero.clone());
            if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
                best = Some((w, code.to_vec()));
            }
        });
        best.expect("at least one assignment").1
    }
    match tables {
        Tables::Scaled(t) => run(n, k, t, 0i128),
        Tables::Exact(t) => run(n, k, t, Rat::zero()),
    }
}

fn allocation_from_blocks(p: &Partition, n: usize, code: &[usize]) -> Result<Allocation> {
    let mut bundles = vec![ItemSet::EMPTY; n];
    for (j, &c) in code.iter().enumerate() {
        if c > 0 {
            bundles[c - 1] = bundles[c - 1].union(p.block(j));
        }
    }
    Allocation::new(p.m(), bundles)
}

/// Best assignment of `p`'s whole blocks to agents, by exhaustive search
/// over `(n+1)^k` assignments. Ties go to the lexicographically smallest
/// assignment vector, with "unallocated" ordered first.
pub fn optimal_over_partition(
    instance: &Instance,
    p: &Partition,
    budget: &mut OracleBudget,
) -> Result<BlockAssignment> {
    if p.m() != instance.m() {
        return Err(Error::InvalidAllocation(format!(
            "partition over {} items for an instance with {}",
            p.m(),
            instance.m()
        )));
    }
    let n = instance.n();
    let k = p.len();
    budget.charge_power(n + 1, k, "block assignment search")?;
    let tables = block_tables(instance, p);
    let code = best_code(n, k, &tables);
    let allocation = allocation_from_blocks(p, n, &code)?;
    let value = social_welfare(instance, &allocation);
    Ok(BlockAssignment {
        owners: code.iter().map(|&c| c.checked_sub(1)).collect(),
        allocation,
        value,
    })
}

/// Welfare-maximal allocation.
///
/// Enumerates all `(n+1)^m` assignments when the budget allows (ties: the
/// lexicographically smallest assignment vector). Otherwise, if every agent
/// is single-minded, searches winner sets with disjoint desired sets
/// instead; winners then receive exactly their desired sets.
pub fn optimal_integral(instance: &Instance, budget: &mut OracleBudget) -> Result<IntegralOpt> {
    let singletons = Partition::singletons(instance.m());
    match optimal_over_partition(instance, &singletons, budget) {
        Ok(best) => Ok(IntegralOpt {
            allocation: best.allocation,
            value: best.value,
        }),
        Err(Error::SizeLimit(msg)) => {
            if instance.agents().iter().all(|v| v.is_single_minded()) {
                single_minded_optimum(instance, budget)
            } else {
                Err(Error::SizeLimit(msg))
            }
        }
        Err(e) => Err(e),
    }
}

fn desired_sets(instance: &Instance) -> Result<Vec<(ItemSet, Rat)>> {
    instance
        .agents()
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            crate::valuation::Valuation::SingleMinded { desired, value } => {
                Ok((*desired, value.clone()))
            }
            _ => Err(Error::NotSingleMinded { agent: i }),
        })
        .collect()
}

/// Winner sets (agent bitmasks) with pairwise disjoint desired sets and
/// their welfare, in increasing mask order.
fn disjoint_winner_sets(desired: &[(ItemSet, Rat)]) -> Vec<(u32, Rat)> {
    let n = desired.len();
    let mut out = vec![(0u32, Rat::zero())];
    // extend each set only with agents above its largest member
    let mut frontier: Vec<(u32, ItemSet, Rat, usize)> = vec![(0, ItemSet::EMPTY, Rat::zero(), 0)];
    while let Some((mask, used, w, next)) = frontier.pop() {
        for i in next..n {
            let (d, v) = &desired[i];
            if used.is_disjoint(*d) {
                let m2 = mask | 1 << i;
                let w2 = &w + v;
                out.push((m2, w2.clone()));
                frontier.push((m2, used.union(*d), w2, i + 1));
            }
        }
    }
    out.sort_by_key(|(m, _)| *m);
    out
}

fn single_minded_optimum(instance: &Instance, budget: &mut OracleBudget) -> Result<IntegralOpt> {
    let desired = desired_sets(instance)?;
    budget.charge_power(2, instance.n(), "winner set search")?;
    let mut best: Option<(u32, Rat)> = None;
    for (mask, w) in disjoint_winner_sets(&desired) {
        if best
            .as_ref()
            .is_none_or(|(bm, bw)| w > *bw || (w == *bw && lex_less(mask, *bm)))
        {
            best = Some((mask, w));
        }
    }
    let (mask, _) = best.expect("the empty winner set");
    let bundles = desired
        .iter()
        .enumerate()
        .map(|(i, (d, _))| {
            if mask >> i & 1 == 1 {
                *d
            } else {
                ItemSet::EMPTY
            }
        })
        .collect();
    let allocation = Allocation::new(instance.m(), bundles)?;
    let value = social_welfare(instance, &allocation);
    Ok(IntegralOpt { allocation, value })
}

/// Highest-welfare MC-CWE allocation with its supporting prices.
///
/// Allocations are visited by decreasing welfare, ties in increasing
/// lexicographic order of the assignment vector; the first one whose
/// configuration LP over `Π(X)` has value `SW(X)` wins. LP values are
/// cached per induced partition.
pub fn best_mccwe(instance: &Instance, budget: &mut OracleBudget) -> Result<BestMccwe> {
    let n = instance.n();
    let m = instance.m();
    budget.charge_power(n + 1, m, "MC-CWE search")?;
    let singletons = Partition::singletons(m);
    let tables = block_tables(instance, &singletons);

    let mut codes: Vec<Vec<u8>> = Vec::new();
    let order: Vec<usize> = match &tables {
        Tables::Scaled(t) => sorted_by_welfare(n, m, t, 0i128, &mut codes),
        Tables::Exact(t) => sorted_by_welfare(n, m, t, Rat::zero(), &mut codes),
    };

    let mut cache: HashMap<Vec<ItemSet>, Rat> = HashMap::new();
    for idx in order {
        let code: Vec<usize> = codes[idx].iter().map(|&c| c as usize).collect();
        let x = Allocation::from_assignment(m, n, &code)?;
        let welfare = social_welfare(instance, &x);
        let induced = induced_partition(&x);
        let key = induced.partition.blocks().to_vec();
        let lp_value = match cache.get(&key) {
            Some(v) => v.clone(),
            None => {
                let v = fractional_opt(instance, &induced.partition)?.value;
                cache.insert(key, v.clone());
                v
            }
        };
        if lp_value == welfare {
            let outcome = supporting_prices(instance, &x)?;
            return Ok(BestMccwe {
                outcome,
                value: welfare,
                lps_solved: cache.len(),
            });
        }
    }
    unreachable!("the allocation leaving everything unsold has welfare 0 and is MC-CWE")
}

fn sorted_by_welfare<T: Clone + Ord + std::ops::AddAssign<T>>(
    n: usize,
    m: usize,
    tables: &[Vec<T>],
    zero: T,
    codes: &mut Vec<Vec<u8>>,
) -> Vec<usize> {
    let mut welfare = Vec::new();
    for_each_assignment(n, m, |code, masks| {
        welfare.push(welfare_of(tables, masks, zero.clone()));
        codes.push(code.iter().map(|&c| c as u8).collect());
    });
    let mut order: Vec<usize> = (0..codes.len()).collect();
    // stable sort keeps lexicographic order within a welfare level
    order.sort_by(|&a, &b| welfare[b].cmp(&welfare[a]));
    order
}

/// Best welfare achievable by item prices when every agent is
/// single-minded.
///
/// A winner set `W` (pairwise disjoint desired sets) is supportable when
/// some `p >= 0` has `Σ_{a∈S_i} p_a <= v_i` for winners and
/// `Σ_{a∈S_j} p_a >= v_j` for losers. A loser indifferent at equality is
/// treated as content with nothing.
pub fn best_single_minded_item_pricing(
    instance: &Instance,
    budget: &mut OracleBudget,
) -> Result<ItemPricing> {
    let desired = desired_sets(instance)?;
    budget.charge_power(2, instance.n(), "winner set search")?;
    let mut candidates = disjoint_winner_sets(&desired);
    candidates.sort_by(|(ma, wa), (mb, wb)| {
        wb.cmp(wa).then_with(|| {
            if lex_less(*ma, *mb) {
                std::cmp::Ordering::Less
            } else if ma == mb {
                std::cmp::Ordering::Equal
            } else {
                std::cmp::Ordering::Greater
            }
        })
    });
    for (mask, welfare) in candidates {
        if let Some(prices) = supporting_item_prices(instance.m(), &desired, mask)? {
            return Ok(ItemPricing {
                welfare,
                winners: (0..desired.len()).filter(|i| mask >> i & 1 == 1).collect(),
                prices,
            });
        }
    }
    unreachable!("the empty winner set is priced out by p_a = max value")
}

fn supporting_item_prices(
    m: usize,
    desired: &[(ItemSet, Rat)],
    winners: u32,
) -> Result<Option<Vec<Rat>>> {
    let mut lp = LinearProgram::new(vec![Rat::zero(); m]);
    for (i, (d, v)) in desired.iter().enumerate() {
        let mut row = vec![Rat::zero(); m];
        for a in d.iter() {
            row[a] = int(1);
        }
        let rel = if winners >> i & 1 == 1 {
            Relation::Le
        } else {
            Relation::Ge
        };
        lp.add_constraint(row, rel, v.clone());
    }
    let sol = solve_lp(&lp)?;
    Ok((sol.status == LpStatus::Optimal).then_some(sol.primal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::Valuation;

    fn additive(values: &[i64]) -> Valuation {
        Valuation::Additive {
            item_values: values.iter().map(|&x| int(x)).collect(),
        }
    }

    fn sm(items: &[usize], value: i64) -> Valuation {
        Valuation::SingleMinded {
            desired: ItemSet::from_items(items.iter().copied()),
            value: int(value),
        }
    }

    #[test]
    fn assignment_order_is_lexicographic() {
        let mut seen = Vec::new();
        for_each_assignment(2, 2, |code, masks| {
            seen.push((code.to_vec(), masks.to_vec()))
        });
        assert_eq!(seen.len(), 9);
        assert_eq!(seen[0], (vec![0, 0], vec![0, 0]));
        assert_eq!(seen[1], (vec![0, 1], vec![0b10, 0]));
        assert_eq!(seen[5], (vec![1, 2], vec![0b01, 0b10]));
        assert_eq!(seen[8], (vec![2, 2], vec![0, 0b11]));
    }

    #[test]
    fn single_agent_gets_everything() {
        let inst = Instance::new("one", 3, vec![additive(&[1, 2, 3])]).unwrap();
        let mut b = OracleBudget::default();
        let opt = optimal_integral(&inst, &mut b).unwrap();
        assert_eq!(opt.value, int(6));
        assert_eq!(opt.allocation.bundle(0), ItemSet::full(3));
        let best = best_mccwe(&inst, &mut b).unwrap();
        assert_eq!(best.value, int(6));
    }

    #[test]
    fn ties_prefer_unallocated_then_lower_agents() {
        // item 1 is worthless to everyone: it stays unallocated
        let inst = Instance::new("tie", 2, vec![additive(&[1, 0]), additive(&[1, 0])]).unwrap();
        let opt = optimal_integral(&inst, &mut OracleBudget::default()).unwrap();
        assert_eq!(opt.allocation.bundles(), &[ItemSet(0b01), ItemSet::EMPTY]);
        assert_eq!(opt.allocation.unallocated(), ItemSet(0b10));
    }

    #[test]
    fn budget_is_enforced() {
        let inst = Instance::new("big", 10, vec![additive(&[1; 10]); 3]).unwrap();
        let mut b = OracleBudget::new(1000);
        assert!(matches!(
            optimal_integral(&inst, &mut b),
            Err(Error::SizeLimit(_))
        ));
        assert_eq!(b.used, 0);
    }

    #[test]
    fn single_minded_fallback_matches_brute_force() {
        let inst = Instance::new(
            "sm",
            4,
            vec![
                sm(&[0, 1], 5),
                sm(&[1, 2], 4),
                sm(&[2, 3], 3),
                sm(&[0, 1, 2, 3], 7),
            ],
        )
        .unwrap();
        let brute = optimal_integral(&inst, &mut OracleBudget::default()).unwrap();
        let fallback = single_minded_optimum(&inst, &mut OracleBudget::default()).unwrap();
        assert_eq!(brute.value, int(8));
        assert_eq!(fallback.value, int(8));
    }

    #[test]
    fn item_pricing_second_price() {
        let inst = Instance::new("sp", 1, vec![sm(&[0], 3), sm(&[0], 5)]).unwrap();
        let r = best_single_minded_item_pricing(&inst, &mut OracleBudget::default()).unwrap();
        assert_eq!(r.welfare, int(5));
        assert_eq!(r.winners, vec![1]);
        let one = Instance::new("one", 2, vec![sm(&[0, 1], 5)]).unwrap();
        let r = best_single_minded_item_pricing(&one, &mut OracleBudget::default()).unwrap();
        assert_eq!(r.welfare, int(5));
    }

    #[test]
    fn scaled_and_exact_tables_agree() {
        let inst = Instance::new(
            "frac",
            2,
            vec![
                Valuation::Additive {
                    item_values: vec![crate::rational::rat(1, 3), crate::rational::rat(1, 7)],
                },
                additive(&[0, 1]),
            ],
        )
        .unwrap();
        let p = Partition::singletons(2);
        let Tables::Scaled(s) = block_tables(&inst, &p) else {
            panic!("small denominators should scale")
        };
        let exact: Vec<Vec<Rat>> = inst
            .agents()
            .iter()
            .map(|v| (0..4u32).map(|mk| v.value(ItemSet(mk))).collect())
            .collect();
        assert_eq!(
            best_code(2, 2, &Tables::Scaled(s)),
            best_code(2, 2, &Tables::Exact(exact))
        );
    }
}
