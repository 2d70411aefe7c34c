//! Valuation families and the three query types: value, demand and
//! relative demand.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::market::{
    lex_less, low_bits, submasks, BundleSet, Instance, ItemSet, Partition, MAX_DEMAND_BLOCKS,
    MAX_ENUM_ITEMS,
};
use crate::rational::Rat;

/// Largest `m` for an explicit `2^m` value table.
pub const MAX_TABLE_ITEMS: usize = 20;

/// Largest `m` for exhaustive disjoint-pair checks (`3^m` pairs).
pub const MAX_PAIR_CHECK_ITEMS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub enum Valuation {
    Additive {
        item_values: Vec<Rat>,
    },
    /// `value` for any superset of `desired`, zero otherwise.
    SingleMinded {
        desired: ItemSet,
        value: Rat,
    },
    /// Full value table indexed by item bitmask.
    SuperadditiveExplicit {
        table: Vec<Rat>,
    },
    /// `min(budget, Σ item_values)`.
    BudgetAdditive {
        budget: Rat,
        item_values: Vec<Rat>,
    },
    /// Sum of the `cap` largest item values in the set.
    CappedAdditive {
        item_values: Vec<Rat>,
        cap: usize,
    },
}

impl Valuation {
    /// Checked constructor for explicit tables: normalized, monotone and
    /// super-additive over all disjoint pairs.
    pub fn superadditive_explicit(table: Vec<Rat>) -> Result<Self> {
        let m = table_items(table.len()).ok_or_else(|| {
            Error::InvalidInstance(format!(
                "table length {} is not a power of two",
                table.len()
            ))
        })?;
        let v = Valuation::SuperadditiveExplicit { table };
        v.validate(m)?;
        Ok(v)
    }

    /// Structural checks against an item count `m`.
    pub fn validate(&self, m: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        let check_values = |values: &[Rat]| -> Result<()> {
            if values.len() != m {
                return bad(format!("{} item values for {m} items", values.len()));
            }
            if values.iter().any(|v| v.is_negative()) {
                return bad("negative item value".into());
            }
            Ok(())
        };
        match self {
            Valuation::Additive { item_values } => check_values(item_values),
            Valuation::SingleMinded { desired, value } => {
                if desired.is_empty() || !desired.within(m) {
                    return bad(format!("desired set {desired} is empty or out of range"));
                }
                if value.is_negative() {
                    return bad("negative single-minded value".into());
                }
                Ok(())
            }
            Valuation::BudgetAdditive {
                budget,
                item_values,
            } => {
                check_values(item_values)?;
                if budget.is_negative() {
                    return bad("negative budget".into());
                }
                Ok(())
            }
            Valuation::CappedAdditive { item_values, cap } => {
                check_values(item_values)?;
                if *cap == 0 {
                    return bad("capacity must be positive".into());
                }
                Ok(())
            }
            Valuation::SuperadditiveExplicit { table } => {
                if m > MAX_TABLE_ITEMS {
                    return Err(Error::SizeLimit(format!(
                        "explicit tables support at most {MAX_TABLE_ITEMS} items"
                    )));
                }
                if table.len() != 1 << m {
                    return bad(format!("table has {} entries, expected 2^{m}", table.len()));
                }
                if !table[0].is_zero() {
                    return bad("table is not normalized: v(∅) != 0".into());
                }
                if table.iter().any(|v| v.is_negative()) {
                    return bad("negative table entry".into());
                }
                if !monotone_table(table, m) {
                    return bad("table is not monotone".into());
                }
                if let Some((s, t)) = pair_violation(table, m, |u, s, t| u >= &(s + t)) {
                    return bad(format!(
                        "table is not super-additive: v({}) < v({}) + v({})",
                        ItemSet(s | t),
                        ItemSet(s),
                        ItemSet(t)
                    ));
                }
                Ok(())
            }
        }
    }

    /// `v(S)`.
    pub fn value(&self, set: ItemSet) -> Rat {
        match self {
            Valuation::Additive { item_values } => set.iter().map(|j| &item_values[j]).sum(),
            Valuation::SingleMinded { desired, value } => {
                if desired.is_subset(set) {
                    value.clone()
                } else {
                    Rat::zero()
                }
            }
            Valuation::SuperadditiveExplicit { table } => table[set.bits() as usize].clone(),
            Valuation::BudgetAdditive {
                budget,
                item_values,
            } => {
                let total: Rat = set.iter().map(|j| &item_values[j]).sum();
                if &total > budget {
                    budget.clone()
                } else {
                    total
                }
            }
            Valuation::CappedAdditive { item_values, cap } => {
                let mut vals: Vec<&Rat> = set.iter().map(|j| &item_values[j]).collect();
                vals.sort_by(|a, b| b.cmp(a));
                vals.into_iter().take(*cap).sum()
            }
        }
    }

    /// Value of a single item on its own.
    pub fn item_value(&self, item: usize) -> Rat {
        self.value(ItemSet::singleton(item))
    }

    pub fn is_single_minded(&self) -> bool {
        matches!(self, Valuation::SingleMinded { .. })
    }

    pub fn budget(&self) -> Option<&Rat> {
        match self {
            Valuation::BudgetAdditive { budget, .. } => Some(budget),
            _ => None,
        }
    }

    /// `v(∅) == 0`.
    pub fn is_normalized(&self) -> bool {
        self.value(ItemSet::EMPTY).is_zero()
    }

    /// Non-decreasing under inclusion. Only explicit tables can fail.
    pub fn is_monotone(&self, m: usize) -> bool {
        match self {
            Valuation::SuperadditiveExplicit { table } => monotone_table(table, m),
            _ => true,
        }
    }

    /// `v(S ∪ T) >= v(S) + v(T)` for all disjoint `S, T`.
    ///
    /// Additive and single-minded valuations are super-additive by form;
    /// other families are checked over every disjoint pair.
    pub fn is_superadditive(&self, m: usize) -> Result<bool> {
        match self {
            Valuation::Additive { .. } | Valuation::SingleMinded { .. } => Ok(true),
            _ => self.exhaustive_pair_check(m, |u, s, t| u >= &(s + t)),
        }
    }

    /// `v(S ∪ T) <= v(S) + v(T)` for all disjoint `S, T`.
    ///
    /// Additive, budget-additive and capped-additive valuations are
    /// sub-additive by form; a single-minded valuation is sub-additive iff
    /// its desired set cannot be split, i.e. it has one item or zero value.
    pub fn is_subadditive(&self, m: usize) -> Result<bool> {
        match self {
            Valuation::Additive { .. }
            | Valuation::BudgetAdditive { .. }
            | Valuation::CappedAdditive { .. } => Ok(true),
            Valuation::SingleMinded { desired, value } => Ok(desired.len() <= 1 || value.is_zero()),
            _ => self.exhaustive_pair_check(m, |u, s, t| u <= &(s + t)),
        }
    }

    /// Checks `holds(v(S∪T), v(S), v(T))` over all disjoint pairs.
    pub fn exhaustive_pair_check(
        &self,
        m: usize,
        holds: impl Fn(&Rat, &Rat, &Rat) -> bool,
    ) -> Result<bool> {
        if m > MAX_PAIR_CHECK_ITEMS {
            return Err(Error::SizeLimit(format!(
                "pairwise check over 3^{m} set pairs (cap is {MAX_PAIR_CHECK_ITEMS} items)"
            )));
        }
        let table = self.table(m);
        Ok(pair_violation(&table, m, holds).is_none())
    }

    /// All `2^m` values indexed by bitmask.
    pub fn table(&self, m: usize) -> Vec<Rat> {
        (0..1u32 << m).map(|s| self.value(ItemSet(s))).collect()
    }
}

fn table_items(len: usize) -> Option<usize> {
    (len.is_power_of_two()).then(|| len.trailing_zeros() as usize)
}

fn monotone_table(table: &[Rat], m: usize) -> bool {
    (0..table.len()).all(|s| {
        (0..m)
            .filter(|j| s >> j & 1 == 0)
            .all(|j| table[s] <= table[s | 1 << j])
    })
}

fn pair_violation(
    table: &[Rat],
    m: usize,
    holds: impl Fn(&Rat, &Rat, &Rat) -> bool,
) -> Option<(u32, u32)> {
    for u in 0..1u32 << m {
        for s in submasks(u) {
            let t = u & !s;
            // each unordered pair once
            if s > t {
                continue;
            }
            if !holds(&table[u as usize], &table[s as usize], &table[t as usize]) {
                return Some((s, t));
            }
        }
    }
    None
}

/// Best bundle set at the given block prices.
///
/// Ties: highest utility, then fewest blocks, then the set whose lowest
/// differing block is smaller.
pub fn demand_query(v: &Valuation, p: &Partition, prices: &[Rat]) -> Result<BundleSet> {
    let k = check_blocks(p, prices)?;
    let mut best: Option<(Rat, u32)> = None;
    for mask in 0..1u32 << k {
        let u = bundle_utility(v, p, mask, prices);
        let better = match &best {
            None => true,
            Some((bu, bm)) => match u.cmp(bu) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => prefer_set(mask, *bm),
            },
        };
        if better {
            best = Some((u, mask));
        }
    }
    Ok(BundleSet(best.map_or(0, |(_, m)| m)))
}

/// Maximum utility over all bundle sets, and every set attaining it.
pub fn demand_with_utility(
    v: &Valuation,
    p: &Partition,
    prices: &[Rat],
) -> Result<(Rat, Vec<BundleSet>)> {
    let k = check_blocks(p, prices)?;
    let mut best = Rat::zero();
    let mut argmax = Vec::new();
    for mask in 0..1u32 << k {
        let u = bundle_utility(v, p, mask, prices);
        match u.cmp(&best) {
            Ordering::Greater => {
                best = u;
                argmax.clear();
                argmax.push(BundleSet(mask));
            }
            Ordering::Equal => argmax.push(BundleSet(mask)),
            Ordering::Less => {}
        }
    }
    Ok((best, argmax))
}

fn check_blocks(p: &Partition, prices: &[Rat]) -> Result<usize> {
    let k = p.len();
    if k > MAX_DEMAND_BLOCKS {
        return Err(Error::SizeLimit(format!(
            "demand enumeration over {k} blocks (cap is {MAX_DEMAND_BLOCKS})"
        )));
    }
    if prices.len() != k {
        return Err(Error::InvalidOutcome(format!(
            "{} prices for {k} blocks",
            prices.len()
        )));
    }
    Ok(k)
}

fn bundle_utility(v: &Valuation, p: &Partition, mask: u32, prices: &[Rat]) -> Rat {
    let bundle = BundleSet(mask);
    let cost: Rat = bundle.iter().map(|j| &prices[j]).sum();
    v.value(p.union_of(bundle)) - cost
}

/// Fewer elements first, then lexicographic.
fn prefer_set(candidate: u32, incumbent: u32) -> bool {
    match candidate.count_ones().cmp(&incumbent.count_ones()) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => lex_less(candidate, incumbent),
    }
}

/// Nonempty `S ⊆ pool` maximizing `v(S) / |S|`, with that density.
///
/// Ties: highest density, then smallest `|S|`, then lexicographic.
pub fn relative_demand_query(v: &Valuation, pool: ItemSet) -> Result<(ItemSet, Rat)> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let top = 32 - pool.bits().leading_zeros() as usize;
    if top > MAX_ENUM_ITEMS {
        return Err(Error::SizeLimit(format!(
            "relative demand over items up to {top} (cap is {MAX_ENUM_ITEMS})"
        )));
    }
    let mut best: Option<(Rat, u32, Rat)> = None; // (value, set, size)
    for s in submasks(pool.bits()).skip(1) {
        let value = v.value(ItemSet(s));
        let size = Rat::from_integer((s.count_ones() as i64).into());
        let better = match &best {
            None => true,
            Some((bv, bs, bsize)) => match (&value * bsize).cmp(&(bv * &size)) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => prefer_set(s, *bs),
            },
        };
        if better {
            best = Some((value, s, size));
        }
    }
    let (value, set, size) = best.expect("pool is nonempty");
    Ok((ItemSet(set), value / size))
}

/// Structural flags of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassReport {
    pub normalized: bool,
    pub monotone: bool,
    pub superadditive: bool,
    pub subadditive: bool,
    pub single_minded: bool,
    pub uniform_budget_additive: bool,
    pub identical_budgets: bool,
}

pub fn classify(instance: &Instance) -> Result<ClassReport> {
    let m = instance.m();
    let agents = instance.agents();
    let mut report = ClassReport {
        normalized: agents.iter().all(Valuation::is_normalized),
        monotone: agents.iter().all(|v| v.is_monotone(m)),
        superadditive: true,
        subadditive: true,
        single_minded: agents.iter().all(Valuation::is_single_minded),
        uniform_budget_additive: uniform_item_values(instance).is_some(),
        identical_budgets: false,
    };
    for v in agents {
        if report.superadditive && !v.is_superadditive(m)? {
            report.superadditive = false;
        }
        if report.subadditive && !v.is_subadditive(m)? {
            report.subadditive = false;
        }
    }
    report.identical_budgets = report.uniform_budget_additive && {
        let b0 = agents[0].budget();
        agents.iter().all(|v| v.budget() == b0)
    };
    Ok(report)
}

/// The shared item values if every agent is budget-additive and values each
/// item at either 0 or one common value.
pub fn uniform_item_values(instance: &Instance) -> Option<Vec<Rat>> {
    if let Some(values) = instance.uniform_item_values() {
        return Some(values.to_vec());
    }
    let mut shared = vec![Rat::zero(); instance.m()];
    for v in instance.agents() {
        let Valuation::BudgetAdditive { item_values, .. } = v else {
            return None;
        };
        for (s, own) in shared.iter_mut().zip(item_values) {
            if own.is_zero() {
                continue;
            }
            if s.is_zero() {
                *s = own.clone();
            } else if s != own {
                return None;
            }
        }
    }
    Some(shared)
}

/// Bitmask of items an agent values positively.
pub fn interest_set(v: &Valuation, m: usize) -> ItemSet {
    let mut out = ItemSet::EMPTY;
    for j in 0..m {
        if v.item_value(j).is_positive() {
            out.insert(j);
        }
    }
    out.intersection(ItemSet(low_bits(m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn ints(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn single(items: &[usize], value: i64) -> Valuation {
        Valuation::SingleMinded {
            desired: ItemSet::from_items(items.iter().copied()),
            value: int(value),
        }
    }

    #[test]
    fn single_minded_values() {
        let v = single(&[0, 1], 5);
        assert_eq!(v.value(ItemSet::from_items([0, 1, 2])), int(5));
        assert_eq!(v.value(ItemSet::from_items([0])), int(0));
    }

    #[test]
    fn budget_additive_value_caps_at_budget() {
        // fig1a agent c2: budget 4, values (0,4,2,2)
        let v = Valuation::BudgetAdditive {
            budget: int(4),
            item_values: ints(&[0, 4, 2, 2]),
        };
        assert_eq!(v.value(ItemSet::from_items([2, 3])), int(4));
        assert_eq!(v.value(ItemSet::from_items([1, 2, 3])), int(4));
        assert_eq!(v.value(ItemSet::from_items([2])), int(2));
    }

    #[test]
    fn capped_additive_takes_largest() {
        let v = Valuation::CappedAdditive {
            item_values: ints(&[99, 100, 100]),
            cap: 2,
        };
        assert_eq!(v.value(ItemSet::full(3)), int(200));
        assert_eq!(v.value(ItemSet::from_items([0, 2])), int(199));
    }

    #[test]
    fn additive_matches_budget_additive_with_huge_budget() {
        let values = ints(&[3, 1, 4, 1, 5]);
        let a = Valuation::Additive {
            item_values: values.clone(),
        };
        let b = Valuation::BudgetAdditive {
            budget: int(1_000_000),
            item_values: values,
        };
        for s in 0..32 {
            assert_eq!(a.value(ItemSet(s)), b.value(ItemSet(s)));
        }
    }

    #[test]
    fn explicit_table_rejects_submodular() {
        // v(0)=v(1)=2, v(01)=3 is submodular
        let err = Valuation::superadditive_explicit(ints(&[0, 2, 2, 3]));
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
        assert!(Valuation::superadditive_explicit(ints(&[0, 1, 1, 3])).is_ok());
        assert!(Valuation::superadditive_explicit(ints(&[1, 1, 1, 3])).is_err());
        assert!(Valuation::superadditive_explicit(ints(&[0, 1, 1])).is_err());
    }

    #[test]
    fn closed_forms_agree_with_exhaustive_checks() {
        let m = 4;
        let vals = [
            single(&[0, 2], 3),
            single(&[1], 2),
            Valuation::Additive {
                item_values: ints(&[1, 0, 2, 5]),
            },
            Valuation::BudgetAdditive {
                budget: int(3),
                item_values: ints(&[1, 2, 2, 0]),
            },
            Valuation::CappedAdditive {
                item_values: ints(&[1, 2, 2, 3]),
                cap: 2,
            },
        ];
        for v in &vals {
            let sup = v.exhaustive_pair_check(m, |u, s, t| u >= &(s + t)).unwrap();
            let sub = v.exhaustive_pair_check(m, |u, s, t| u <= &(s + t)).unwrap();
            assert_eq!(v.is_superadditive(m).unwrap(), sup, "{v:?}");
            assert_eq!(v.is_subadditive(m).unwrap(), sub, "{v:?}");
        }
    }

    #[test]
    fn demand_query_tie_break_prefers_block_zero() {
        // two blocks ({a1}, {a2,a3}), agent 2 of the revenue example, R = 100
        let v = Valuation::CappedAdditive {
            item_values: ints(&[99, 100, 100]),
            cap: 2,
        };
        let p = Partition::new(3, vec![ItemSet(0b001), ItemSet(0b110)]).unwrap();
        let prices = ints(&[1, 102]);
        assert_eq!(demand_query(&v, &p, &prices).unwrap(), BundleSet(0b01));
        let (best, argmax) = demand_with_utility(&v, &p, &prices).unwrap();
        assert_eq!(best, int(98));
        assert_eq!(argmax, vec![BundleSet(0b01), BundleSet(0b10)]);
    }

    #[test]
    fn demand_query_at_zero_prices_returns_smallest_full_value_set() {
        let v = single(&[1], 4);
        let p = Partition::singletons(3);
        let prices = ints(&[0, 0, 0]);
        assert_eq!(demand_query(&v, &p, &prices).unwrap(), BundleSet(0b010));
    }

    #[test]
    fn demand_query_empty_when_everything_loses() {
        // fig1a agent c3 at prices equal to item values, eps = 1/10
        let v = Valuation::BudgetAdditive {
            budget: rat(9, 10),
            item_values: ints(&[0, 0, 2, 0]),
        };
        let p = Partition::singletons(4);
        let prices = ints(&[1, 4, 2, 2]);
        assert_eq!(demand_query(&v, &p, &prices).unwrap(), BundleSet::EMPTY);
    }

    #[test]
    fn relative_demand_examples() {
        let v = single(&[0, 1], 6);
        let (s, d) = relative_demand_query(&v, ItemSet(0b111)).unwrap();
        assert_eq!((s, d), (ItemSet(0b011), int(3)));

        let (s, d) = relative_demand_query(&v, ItemSet(0b110)).unwrap();
        assert_eq!((s, d), (ItemSet(0b010), int(0)));

        let add = Valuation::Additive {
            item_values: ints(&[3, 1]),
        };
        let (s, d) = relative_demand_query(&add, ItemSet(0b11)).unwrap();
        assert_eq!((s, d), (ItemSet(0b01), int(3)));

        assert_eq!(
            relative_demand_query(&v, ItemSet::EMPTY),
            Err(Error::EmptyPool)
        );
    }

    #[test]
    fn size_limits() {
        let v = single(&[0], 1);
        let p = Partition::singletons(21);
        let prices = vec![Rat::zero(); 21];
        assert!(matches!(
            demand_query(&v, &p, &prices),
            Err(Error::SizeLimit(_))
        ));
        let capped = Valuation::CappedAdditive {
            item_values: vec![int(1); 15],
            cap: 2,
        };
        assert!(matches!(
            capped.is_superadditive(15),
            Err(Error::SizeLimit(_))
        ));
    }
}
