//! Market data model: item sets, partitions, allocations, priced outcomes
//! and the welfare, utility and revenue accounting built on them.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rat;
use crate::valuation::Valuation;

/// Hard ceiling on the number of items an [`ItemSet`] can address.
pub const MAX_ITEMS: usize = 32;

/// Largest `m` for which operations enumerate all `2^m` item subsets.
pub const MAX_ENUM_ITEMS: usize = 24;

/// Largest block count for demand enumeration over `2^k` bundle sets.
pub const MAX_DEMAND_BLOCKS: usize = 20;

/// Bitmask over items `0..m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ItemSet(pub u32);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub fn full(m: usize) -> Self {
        ItemSet(low_bits(m))
    }

    pub fn singleton(item: usize) -> Self {
        ItemSet(1 << item)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Self {
        ItemSet(items.into_iter().fold(0, |acc, j| acc | (1 << j)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, item: usize) -> bool {
        self.0 >> item & 1 == 1
    }

    pub fn union(self, other: ItemSet) -> ItemSet {
        ItemSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ItemSet) -> ItemSet {
        ItemSet(self.0 & other.0)
    }

    pub fn difference(self, other: ItemSet) -> ItemSet {
        ItemSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: ItemSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn insert(&mut self, item: usize) {
        self.0 |= 1 << item;
    }

    pub fn remove(&mut self, item: usize) {
        self.0 &= !(1 << item);
    }

    /// Items in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        BitIter(self.0)
    }

    pub fn min_item(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn within(self, m: usize) -> bool {
        self.0 & !low_bits(m) == 0
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_mask(f, self.0)
    }
}

/// Bitmask over the blocks of a [`Partition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BundleSet(pub u32);

impl BundleSet {
    pub const EMPTY: BundleSet = BundleSet(0);

    pub fn singleton(block: usize) -> Self {
        BundleSet(1 << block)
    }

    pub fn from_blocks<I: IntoIterator<Item = usize>>(blocks: I) -> Self {
        BundleSet(blocks.into_iter().fold(0, |acc, j| acc | (1 << j)))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, block: usize) -> bool {
        self.0 >> block & 1 == 1
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        BitIter(self.0)
    }
}

impl fmt::Display for BundleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_mask(f, self.0)
    }
}

fn write_mask(f: &mut fmt::Formatter<'_>, mask: u32) -> fmt::Result {
    write!(f, "{{")?;
    for (k, j) in BitIter(mask).enumerate() {
        if k > 0 {
            write!(f, ",")?;
        }
        write!(f, "{j}")?;
    }
    write!(f, "}}")
}

struct BitIter(u32);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let j = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(j)
    }
}

pub(crate) fn low_bits(m: usize) -> u32 {
    if m >= 32 {
        u32::MAX
    } else {
        (1u32 << m) - 1
    }
}

/// All submasks of `mask`, including `0` and `mask`, in increasing order.
pub fn submasks(mask: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(0u32);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask {
            None
        } else {
            Some((cur.wrapping_sub(mask)) & mask)
        };
        Some(cur)
    })
}

/// Canonical order among equal-size sets: the set holding the smaller
/// lowest differing element comes first.
pub fn lex_less(a: u32, b: u32) -> bool {
    let diff = a ^ b;
    diff != 0 && a & (diff & diff.wrapping_neg()) != 0
}

/// Partition of `M` into nonempty blocks ordered by their smallest item.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    m: usize,
    blocks: Vec<ItemSet>,
}

impl Partition {
    pub fn new(m: usize, mut blocks: Vec<ItemSet>) -> Result<Self> {
        if m == 0 || m > MAX_ITEMS {
            return Err(Error::InvalidInstance(format!(
                "item count {m} out of range"
            )));
        }
        let mut seen = ItemSet::EMPTY;
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidAllocation("empty partition block".into()));
            }
            if !b.within(m) {
                return Err(Error::InvalidAllocation(format!(
                    "block {b} exceeds {m} items"
                )));
            }
            if !seen.is_disjoint(*b) {
                return Err(Error::InvalidAllocation(format!(
                    "block {b} overlaps another"
                )));
            }
            seen = seen.union(*b);
        }
        if seen != ItemSet::full(m) {
            return Err(Error::InvalidAllocation(format!(
                "blocks miss items {}",
                ItemSet::full(m).difference(seen)
            )));
        }
        blocks.sort_by_key(|b| b.min_item());
        Ok(Partition { m, blocks })
    }

    pub fn singletons(m: usize) -> Self {
        Partition {
            m,
            blocks: (0..m).map(ItemSet::singleton).collect(),
        }
    }

    pub fn whole(m: usize) -> Self {
        Partition {
            m,
            blocks: vec![ItemSet::full(m)],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[ItemSet] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> ItemSet {
        self.blocks[j]
    }

    pub fn all_blocks(&self) -> BundleSet {
        BundleSet(low_bits(self.blocks.len()))
    }

    /// Union of the selected blocks.
    pub fn union_of(&self, bundle: BundleSet) -> ItemSet {
        bundle
            .iter()
            .fold(ItemSet::EMPTY, |acc, j| acc.union(self.blocks[j]))
    }

    pub fn block_containing(&self, item: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(item))
    }

    /// Blocks whose items are all inside `set`, or `None` if `set` cuts a
    /// block.
    pub fn bundle_covering(&self, set: ItemSet) -> Option<BundleSet> {
        let mut out = BundleSet::EMPTY;
        let mut covered = ItemSet::EMPTY;
        for (j, b) in self.blocks.iter().enumerate() {
            if b.is_subset(set) {
                out.0 |= 1 << j;
                covered = covered.union(*b);
            } else if !b.is_disjoint(set) {
                return None;
            }
        }
        (covered == set).then_some(out)
    }

    /// Every block of `self` lies inside some block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.blocks
            .iter()
            .all(|b| coarser.blocks.iter().any(|c| b.is_subset(*c)))
    }
}

/// Who holds a block of an induced partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    Agent(usize),
    Unallocated,
}

/// `(x_0, x_1, …, x_n)`: pairwise disjoint, covering `M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    m: usize,
    x0: ItemSet,
    bundles: Vec<ItemSet>,
}

impl Allocation {
    /// Builds an allocation from agent bundles; everything else is `x_0`.
    pub fn new(m: usize, bundles: Vec<ItemSet>) -> Result<Self> {
        if m == 0 || m > MAX_ITEMS {
            return Err(Error::InvalidAllocation(format!(
                "item count {m} out of range"
            )));
        }
        let mut seen = ItemSet::EMPTY;
        for (i, b) in bundles.iter().enumerate() {
            if !b.within(m) {
                return Err(Error::InvalidAllocation(format!(
                    "agent {i} holds items beyond {m}"
                )));
            }
            if !seen.is_disjoint(*b) {
                return Err(Error::InvalidAllocation(format!(
                    "agent {i} holds items {} already allocated",
                    seen.intersection(*b)
                )));
            }
            seen = seen.union(*b);
        }
        Ok(Allocation {
            m,
            x0: ItemSet::full(m).difference(seen),
            bundles,
        })
    }

    /// Like [`Allocation::new`] but also checks a stated `x_0`.
    pub fn with_unallocated(m: usize, x0: ItemSet, bundles: Vec<ItemSet>) -> Result<Self> {
        let alloc = Allocation::new(m, bundles)?;
        if alloc.x0 != x0 {
            return Err(Error::InvalidAllocation(format!(
                "x0 {x0} does not equal the unallocated items {}",
                alloc.x0
            )));
        }
        Ok(alloc)
    }

    /// Everything unallocated.
    pub fn empty(m: usize, n: usize) -> Self {
        Allocation {
            m,
            x0: ItemSet::full(m),
            bundles: vec![ItemSet::EMPTY; n],
        }
    }

    /// From an assignment vector: `code[j] == 0` leaves item `j`
    /// unallocated, `code[j] == i + 1` gives it to agent `i`.
    pub fn from_assignment(m: usize, n: usize, code: &[usize]) -> Result<Self> {
        if code.len() != m {
            return Err(Error::InvalidAllocation("assignment length != m".into()));
        }
        let mut bundles = vec![ItemSet::EMPTY; n];
        for (j, &c) in code.iter().enumerate() {
            if c > n {
                return Err(Error::InvalidAllocation(format!(
                    "item {j} assigned to {c}"
                )));
            }
            if c > 0 {
                bundles[c - 1].insert(j);
            }
        }
        Allocation::new(m, bundles)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    pub fn unallocated(&self) -> ItemSet {
        self.x0
    }

    pub fn bundles(&self) -> &[ItemSet] {
        &self.bundles
    }

    pub fn bundle(&self, agent: usize) -> ItemSet {
        self.bundles[agent]
    }

    pub fn owner_of(&self, item: usize) -> Owner {
        self.bundles
            .iter()
            .position(|b| b.contains(item))
            .map_or(Owner::Unallocated, Owner::Agent)
    }

    /// Moves `items` to `to`, taking them from wherever they are now.
    pub fn move_items(&mut self, items: ItemSet, to: Owner) {
        self.x0 = self.x0.difference(items);
        for b in &mut self.bundles {
            *b = b.difference(items);
        }
        match to {
            Owner::Agent(i) => self.bundles[i] = self.bundles[i].union(items),
            Owner::Unallocated => self.x0 = self.x0.union(items),
        }
    }

    /// Re-checks disjointness and coverage.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = Allocation::with_unallocated(self.m, self.x0, self.bundles.clone())?;
        debug_assert_eq!(&rebuilt, self);
        Ok(())
    }
}

/// `Π(X)` together with the owner of each block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedPartition {
    pub partition: Partition,
    pub owners: Vec<Owner>,
}

impl InducedPartition {
    pub fn block_of_agent(&self, agent: usize) -> Option<usize> {
        self.owners.iter().position(|o| *o == Owner::Agent(agent))
    }

    pub fn unallocated_block(&self) -> Option<usize> {
        self.owners.iter().position(|o| *o == Owner::Unallocated)
    }

    /// The bundle set an agent owns: its block, or nothing.
    pub fn owned(&self, agent: usize) -> BundleSet {
        self.block_of_agent(agent)
            .map_or(BundleSet::EMPTY, BundleSet::singleton)
    }
}

/// Nonempty members of `(x_0, x_1, …, x_n)` as blocks. `x_0` stays one block.
pub fn induced_partition(x: &Allocation) -> InducedPartition {
    let mut pairs: Vec<(ItemSet, Owner)> = Vec::with_capacity(x.n() + 1);
    if !x.x0.is_empty() {
        pairs.push((x.x0, Owner::Unallocated));
    }
    for (i, b) in x.bundles.iter().enumerate() {
        if !b.is_empty() {
            pairs.push((*b, Owner::Agent(i)));
        }
    }
    pairs.sort_by_key(|(b, _)| b.min_item());
    let (blocks, owners): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    InducedPartition {
        partition: Partition { m: x.m, blocks },
        owners,
    }
}

/// Optional names and generator parameters carried alongside an instance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Metadata {
    pub item_names: Vec<String>,
    pub agent_names: Vec<String>,
    pub params: BTreeMap<String, String>,
}

/// The market `(M, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    name: String,
    m: usize,
    agents: Vec<Valuation>,
    uniform_item_values: Option<Vec<Rat>>,
    metadata: Metadata,
}

impl Instance {
    pub fn new(name: impl Into<String>, m: usize, agents: Vec<Valuation>) -> Result<Self> {
        if m == 0 || m > MAX_ITEMS {
            return Err(Error::InvalidInstance(format!(
                "item count {m} must be in 1..={MAX_ITEMS}"
            )));
        }
        if agents.is_empty() {
            return Err(Error::InvalidInstance(
                "at least one agent is required".into(),
            ));
        }
        for (i, v) in agents.iter().enumerate() {
            v.validate(m)
                .map_err(|e| Error::InvalidInstance(format!("agent {i}: {e}")))?;
        }
        Ok(Instance {
            name: name.into(),
            m,
            agents,
            uniform_item_values: None,
            metadata: Metadata::default(),
        })
    }

    /// Declares the shared per-item values of a uniform budget-additive
    /// market; every agent must value each item at 0 or at this value.
    pub fn with_uniform_item_values(mut self, values: Vec<Rat>) -> Result<Self> {
        if values.len() != self.m {
            return Err(Error::InvalidInstance(format!(
                "{} uniform item values for {} items",
                values.len(),
                self.m
            )));
        }
        for (i, v) in self.agents.iter().enumerate() {
            let Valuation::BudgetAdditive { item_values, .. } = v else {
                return Err(Error::InvalidInstance(format!(
                    "agent {i} is not budget-additive but uniform item values were given"
                )));
            };
            for (j, (own, shared)) in item_values.iter().zip(&values).enumerate() {
                if !own.is_zero() && own != shared {
                    return Err(Error::InvalidInstance(format!(
                        "agent {i} values item {j} at {own}, shared value is {shared}"
                    )));
                }
            }
        }
        if values.iter().any(|v| v.is_negative()) {
            return Err(Error::InvalidInstance("negative uniform item value".into()));
        }
        self.uniform_item_values = Some(values);
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[Valuation] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &Valuation {
        &self.agents[i]
    }

    pub fn uniform_item_values(&self) -> Option<&[Rat]> {
        self.uniform_item_values.as_deref()
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn items(&self) -> ItemSet {
        ItemSet::full(self.m)
    }

    pub fn check_allocation(&self, x: &Allocation) -> Result<()> {
        if x.m() != self.m || x.n() != self.n() {
            return Err(Error::InvalidAllocation(format!(
                "allocation is for m={}, n={} but instance has m={}, n={}",
                x.m(),
                x.n(),
                self.m,
                self.n()
            )));
        }
        Ok(())
    }
}

/// `v(∪_{j ∈ B} Π_j)`.
pub fn reduced_value(v: &Valuation, p: &Partition, bundle: BundleSet) -> Rat {
    v.value(p.union_of(bundle))
}

/// `Σ_i v_i(x_i)`; `x_0` contributes nothing.
pub fn social_welfare(instance: &Instance, x: &Allocation) -> Rat {
    instance
        .agents
        .iter()
        .zip(&x.bundles)
        .map(|(v, b)| v.value(*b))
        .sum()
}

/// Reduced value minus the prices of the selected blocks.
pub fn utility(v: &Valuation, p: &Partition, bundle: BundleSet, prices: &[Rat]) -> Rat {
    let cost: Rat = bundle.iter().map(|j| &prices[j]).sum();
    reduced_value(v, p, bundle) - cost
}

/// Either one price per nonempty induced bundle, or one price per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prices {
    /// `agents[i]` is `Some` exactly when `x_i` is nonempty; `unallocated`
    /// is `Some` exactly when `x_0` is nonempty.
    Bundles {
        agents: Vec<Option<Rat>>,
        unallocated: Option<Rat>,
    },
    Items(Vec<Rat>),
}

/// An allocation with nonnegative prices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    allocation: Allocation,
    prices: Prices,
}

impl Outcome {
    pub fn new(allocation: Allocation, prices: Prices) -> Result<Self> {
        match &prices {
            Prices::Bundles {
                agents,
                unallocated,
            } => {
                if agents.len() != allocation.n() {
                    return Err(Error::InvalidOutcome(format!(
                        "{} agent prices for {} agents",
                        agents.len(),
                        allocation.n()
                    )));
                }
                for (i, p) in agents.iter().enumerate() {
                    let nonempty = !allocation.bundle(i).is_empty();
                    match p {
                        Some(p) if !nonempty => {
                            return Err(Error::InvalidOutcome(format!(
                                "agent {i} has an empty bundle but price {p}"
                            )))
                        }
                        None if nonempty => {
                            return Err(Error::InvalidOutcome(format!(
                                "agent {i} holds {} but has no price",
                                allocation.bundle(i)
                            )))
                        }
                        Some(p) if p.is_negative() => {
                            return Err(Error::InvalidOutcome(format!(
                                "agent {i} has negative price {p}"
                            )))
                        }
                        _ => {}
                    }
                }
                match (unallocated, allocation.unallocated().is_empty()) {
                    (Some(_), true) => {
                        return Err(Error::InvalidOutcome(
                            "price given for an empty unallocated block".into(),
                        ))
                    }
                    (None, false) => {
                        return Err(Error::InvalidOutcome(
                            "unallocated block has no price".into(),
                        ))
                    }
                    (Some(p), false) if p.is_negative() => {
                        return Err(Error::InvalidOutcome(format!(
                            "unallocated block has negative price {p}"
                        )))
                    }
                    _ => {}
                }
            }
            Prices::Items(items) => {
                if items.len() != allocation.m() {
                    return Err(Error::InvalidOutcome(format!(
                        "{} item prices for {} items",
                        items.len(),
                        allocation.m()
                    )));
                }
                if let Some(j) = items.iter().position(|p| p.is_negative()) {
                    return Err(Error::InvalidOutcome(format!(
                        "item {j} has a negative price"
                    )));
                }
            }
        }
        Ok(Outcome { allocation, prices })
    }

    /// `p_i = v_i(x_i)` on every nonempty bundle, `0` on `x_0`.
    pub fn full_surplus(instance: &Instance, allocation: Allocation) -> Result<Self> {
        instance.check_allocation(&allocation)?;
        let agents = allocation
            .bundles()
            .iter()
            .zip(instance.agents())
            .map(|(b, v)| (!b.is_empty()).then(|| v.value(*b)))
            .collect();
        let unallocated = (!allocation.unallocated().is_empty()).then(Rat::zero);
        Outcome::new(
            allocation,
            Prices::Bundles {
                agents,
                unallocated,
            },
        )
    }

    pub fn allocation(&self) -> &Allocation {
        &self.allocation
    }

    pub fn prices(&self) -> &Prices {
        &self.prices
    }

    /// Price of each block of `induced` (which must be `Π` of this
    /// outcome's allocation).
    pub fn block_prices(&self, induced: &InducedPartition) -> Vec<Rat> {
        induced
            .owners
            .iter()
            .zip(induced.partition.blocks())
            .map(|(owner, block)| match (&self.prices, owner) {
                (Prices::Bundles { agents, .. }, Owner::Agent(i)) => {
                    agents[*i].clone().unwrap_or_else(Rat::zero)
                }
                (Prices::Bundles { unallocated, .. }, Owner::Unallocated) => {
                    unallocated.clone().unwrap_or_else(Rat::zero)
                }
                (Prices::Items(items), _) => block.iter().map(|j| &items[j]).sum(),
            })
            .collect()
    }
}

/// Sum of prices over bundles held by agents.
pub fn revenue(instance: &Instance, outcome: &Outcome) -> Rat {
    debug_assert_eq!(instance.n(), outcome.allocation.n());
    match &outcome.prices {
        Prices::Bundles { agents, .. } => agents.iter().flatten().sum(),
        Prices::Items(items) => {
            let sold = ItemSet::full(outcome.allocation.m).difference(outcome.allocation.x0);
            sold.iter().map(|j| &items[j]).sum()
        }
    }
}
