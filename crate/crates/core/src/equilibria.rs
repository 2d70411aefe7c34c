//! Demand correspondences on reduced markets and the WE / CWE / MC-CWE
//! verifiers.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{
    induced_partition, utility, BundleSet, Instance, ItemSet, Outcome, Partition, Prices,
};
use crate::rational::Rat;
use crate::valuation::{demand_query, demand_with_utility, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMode {
    /// Item prices on the all-singletons market; unallocated items at 0.
    We,
    /// Buyer stability on `Π(X)` only.
    Cwe,
    /// Buyer and seller stability on `Π(X)`.
    Mccwe,
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyMode::We => "we",
            VerifyMode::Cwe => "cwe",
            VerifyMode::Mccwe => "mccwe",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `agent` strictly prefers `offending` (blocks of the checked market,
    /// covering `offending_items`) to its own bundle, by `gap`.
    Buyer {
        agent: usize,
        offending: BundleSet,
        offending_items: ItemSet,
        gap: Rat,
    },
    /// Unallocated items carry a nonzero price.
    Seller { items: ItemSet, price: Rat },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub mode: VerifyMode,
    pub ok: bool,
    /// Buyer violations by decreasing gap, then seller violations.
    pub violations: Vec<Violation>,
}

/// Every bundle set maximizing utility at `prices`.
pub fn demand_correspondence(
    v: &Valuation,
    p: &Partition,
    prices: &[Rat],
) -> Result<Vec<BundleSet>> {
    demand_with_utility(v, p, prices).map(|(_, sets)| sets)
}

/// The market a verifier checks: blocks, their prices, what each agent
/// owns and which blocks are unsold.
struct CheckedMarket {
    partition: Partition,
    prices: Vec<Rat>,
    owned: Vec<BundleSet>,
    unsold: Vec<(ItemSet, Rat)>,
}

fn reduced_market(instance: &Instance, outcome: &Outcome) -> CheckedMarket {
    let x = outcome.allocation();
    let induced = induced_partition(x);
    let prices = outcome.block_prices(&induced);
    let owned = (0..instance.n()).map(|i| induced.owned(i)).collect();
    let unsold = induced
        .unallocated_block()
        .map(|b| vec![(induced.partition.block(b), prices[b].clone())])
        .unwrap_or_default();
    CheckedMarket {
        partition: induced.partition,
        prices,
        owned,
        unsold,
    }
}

fn item_market(instance: &Instance, outcome: &Outcome) -> Result<CheckedMarket> {
    let x = outcome.allocation();
    let m = instance.m();
    let item_prices = match outcome.prices() {
        Prices::Items(p) => p.clone(),
        Prices::Bundles {
            agents,
            unallocated,
        } => {
            let mut p = vec![Rat::zero(); m];
            for (i, price) in agents.iter().enumerate() {
                let b = x.bundle(i);
                if let Some(price) = price {
                    if b.len() != 1 {
                        return Err(Error::InvalidOutcome(format!(
                            "WE needs item prices but agent {i} holds the bundle {b}"
                        )));
                    }
                    p[b.min_item().expect("nonempty")] = price.clone();
                }
            }
            if let Some(price) = unallocated {
                let x0 = x.unallocated();
                if x0.len() == 1 {
                    p[x0.min_item().expect("nonempty")] = price.clone();
                } else if !price.is_zero() {
                    return Err(Error::InvalidOutcome(format!(
                        "WE cannot split the positive price {price} of unallocated bundle {x0}"
                    )));
                }
            }
            p
        }
    };
    let owned = x.bundles().iter().map(|b| BundleSet(b.bits())).collect();
    let unsold = x
        .unallocated()
        .iter()
        .map(|j| (ItemSet::singleton(j), item_prices[j].clone()))
        .collect();
    Ok(CheckedMarket {
        partition: Partition::singletons(m),
        prices: item_prices,
        owned,
        unsold,
    })
}

pub fn verify(instance: &Instance, outcome: &Outcome, mode: VerifyMode) -> Result<VerifyReport> {
    instance.check_allocation(outcome.allocation())?;
    let market = match mode {
        VerifyMode::We => item_market(instance, outcome)?,
        VerifyMode::Cwe | VerifyMode::Mccwe => reduced_market(instance, outcome),
    };

    let mut buyer = Vec::new();
    for (i, v) in instance.agents().iter().enumerate() {
        let own = utility(v, &market.partition, market.owned[i], &market.prices);
        let best = demand_query(v, &market.partition, &market.prices)?;
        let best_u = utility(v, &market.partition, best, &market.prices);
        if best_u > own {
            buyer.push(Violation::Buyer {
                agent: i,
                offending: best,
                offending_items: market.partition.union_of(best),
                gap: best_u - own,
            });
        }
    }
    buyer.sort_by(|a, b| match (a, b) {
        (
            Violation::Buyer {
                agent: ia, gap: ga, ..
            },
            Violation::Buyer {
                agent: ib, gap: gb, ..
            },
        ) => gb.cmp(ga).then(ia.cmp(ib)),
        _ => unreachable!(),
    });

    let mut violations = buyer;
    if mode != VerifyMode::Cwe {
        for (items, price) in market.unsold {
            if !price.is_zero() {
                violations.push(Violation::Seller { items, price });
            }
        }
    }
    Ok(VerifyReport {
        mode,
        ok: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Allocation;
    use crate::rational::int;

    fn ints(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn bundle_prices(agents: Vec<Option<i64>>, x0: Option<i64>) -> Prices {
        Prices::Bundles {
            agents: agents.into_iter().map(|p| p.map(int)).collect(),
            unallocated: x0.map(int),
        }
    }

    #[test]
    fn empty_market_passes_every_mode() {
        let inst = Instance::new(
            "valueless",
            2,
            vec![Valuation::Additive {
                item_values: ints(&[0, 0]),
            }],
        )
        .unwrap();
        let out =
            Outcome::new(Allocation::empty(2, 1), bundle_prices(vec![None], Some(0))).unwrap();
        for mode in [VerifyMode::We, VerifyMode::Cwe, VerifyMode::Mccwe] {
            assert!(verify(&inst, &out, mode).unwrap().ok, "{mode}");
        }
    }

    #[test]
    fn seller_violation_only_outside_cwe() {
        let inst = Instance::new(
            "one",
            2,
            vec![Valuation::SingleMinded {
                desired: ItemSet(0b01),
                value: int(3),
            }],
        )
        .unwrap();
        let x = Allocation::new(2, vec![ItemSet(0b01)]).unwrap();
        let out = Outcome::new(x, bundle_prices(vec![Some(2)], Some(1))).unwrap();
        assert!(verify(&inst, &out, VerifyMode::Cwe).unwrap().ok);
        let r = verify(&inst, &out, VerifyMode::Mccwe).unwrap();
        assert_eq!(
            r.violations,
            vec![Violation::Seller {
                items: ItemSet(0b10),
                price: int(1)
            }]
        );
        assert!(!verify(&inst, &out, VerifyMode::We).unwrap().ok);
    }

    #[test]
    fn buyer_violation_reports_exact_gap() {
        let inst = Instance::new(
            "two",
            1,
            vec![
                Valuation::Additive {
                    item_values: ints(&[5]),
                },
                Valuation::Additive {
                    item_values: ints(&[3]),
                },
            ],
        )
        .unwrap();
        // agent 1 holds the item at price 1; agent 0 would pay 1 for value 5
        let x = Allocation::new(1, vec![ItemSet::EMPTY, ItemSet(1)]).unwrap();
        let out = Outcome::new(x, bundle_prices(vec![None, Some(1)], None)).unwrap();
        let r = verify(&inst, &out, VerifyMode::Mccwe).unwrap();
        assert!(!r.ok);
        assert_eq!(
            r.violations,
            vec![Violation::Buyer {
                agent: 0,
                offending: BundleSet(1),
                offending_items: ItemSet(1),
                gap: int(4)
            }]
        );
    }

    #[test]
    fn we_rejects_bundle_prices_on_bundles() {
        let inst = Instance::new(
            "one",
            2,
            vec![Valuation::Additive {
                item_values: ints(&[1, 1]),
            }],
        )
        .unwrap();
        let x = Allocation::new(2, vec![ItemSet(0b11)]).unwrap();
        let out = Outcome::new(x, bundle_prices(vec![Some(2)], None)).unwrap();
        assert!(matches!(
            verify(&inst, &out, VerifyMode::We),
            Err(Error::InvalidOutcome(_))
        ));
    }

    #[test]
    fn correspondence_includes_all_ties() {
        let v = Valuation::BudgetAdditive {
            budget: int(3),
            item_values: ints(&[1, 4, 0, 0]),
        };
        let p = Partition::singletons(4);
        let d = demand_correspondence(&v, &p, &ints(&[1, 3, 99, 99])).unwrap();
        assert_eq!(d, vec![BundleSet(0b00), BundleSet(0b01), BundleSet(0b10)]);
    }
}
