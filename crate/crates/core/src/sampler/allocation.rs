use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{rational_to_f64, Rational, SamplerError, SamplingMode};
use crate::lang::LangPair;

/// How much data a key has. `Unbounded` marks languages whose supply is
/// effectively infinite relative to any budget (e.g. English).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Availability {
    Count(u64),
    Unbounded,
}

impl Availability {
    fn cmp_size(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Availability::Count(a), Availability::Count(b)) => a.cmp(b),
            (Availability::Count(_), Availability::Unbounded) => Ordering::Less,
            (Availability::Unbounded, Availability::Count(_)) => Ordering::Greater,
            (Availability::Unbounded, Availability::Unbounded) => Ordering::Equal,
        }
    }
}

impl From<u64> for Availability {
    fn from(n: u64) -> Self {
        Availability::Count(n)
    }
}

impl Serialize for Availability {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Availability::Count(n) => s.serialize_u64(*n),
            Availability::Unbounded => s.serialize_str("uncapped"),
        }
    }
}

impl<'de> Deserialize<'de> for Availability {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Availability::Count(n)),
            Raw::Word(w) if w == "uncapped" => Ok(Availability::Unbounded),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a count or \"uncapped\", got {w:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllocationEntry {
    pub available: Availability,
    pub allocated: Rational,
}

impl AllocationEntry {
    /// Allocated over available; `None` for unbounded keys.
    pub fn epochs(&self) -> Option<Rational> {
        match self.available {
            Availability::Count(n) => Some(self.allocated / Rational::from_integer(n as i128)),
            Availability::Unbounded => None,
        }
    }

    /// Whole units, rounded down.
    pub fn allocated_units(&self) -> u64 {
        self.allocated
            .floor()
            .to_integer()
            .to_u64()
            .unwrap_or(u64::MAX)
    }
}

/// Output of a planning step.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub mode: SamplingMode,
    pub budget: u64,
    pub cap_epochs: Option<Rational>,
    entries: BTreeMap<String, AllocationEntry>,
}

impl Allocation {
    pub fn entries(&self) -> &BTreeMap<String, AllocationEntry> {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&AllocationEntry> {
        self.entries.get(key)
    }

    pub fn allocated(&self, key: &str) -> Rational {
        self.entries
            .get(key)
            .map_or_else(Rational::zero, |e| e.allocated)
    }

    pub fn epochs(&self, key: &str) -> Option<Rational> {
        self.entries.get(key).and_then(AllocationEntry::epochs)
    }

    pub fn total_allocated(&self) -> Rational {
        self.entries.values().map(|e| e.allocated).sum()
    }

    /// Share of the total allocation; 0 when nothing was allocated.
    pub fn proportion(&self, key: &str) -> f64 {
        let total = self.total_allocated();
        if total.is_zero() {
            return 0.0;
        }
        rational_to_f64(self.allocated(key) / total)
    }

    pub fn report(&self) -> AllocationReport {
        let allocations = self
            .entries
            .iter()
            .map(|(k, e)| {
                (
                    k.clone(),
                    KeyReport {
                        available: e.available,
                        allocated: e.allocated_units(),
                        epochs: e.epochs().map(rational_to_f64),
                        proportion: self.proportion(k),
                    },
                )
            })
            .collect();
        let available = self
            .entries
            .values()
            .try_fold(0u64, |acc, e| match e.available {
                Availability::Count(n) => Some(acc + n),
                Availability::Unbounded => None,
            })
            .map_or(Availability::Unbounded, Availability::Count);
        AllocationReport {
            mode: self.mode,
            budget: self.budget,
            cap_epochs: self.cap_epochs.map(|c| c.to_string()),
            allocations,
            totals: TotalsReport {
                available,
                allocated: self
                    .total_allocated()
                    .floor()
                    .to_integer()
                    .to_u64()
                    .unwrap_or(u64::MAX),
                budget: self.budget,
            },
        }
    }
}

/// JSON shape of an allocation: per-key rows plus totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationReport {
    pub mode: SamplingMode,
    pub budget: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_epochs: Option<String>,
    pub allocations: BTreeMap<String, KeyReport>,
    pub totals: TotalsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyReport {
    pub available: Availability,
    pub allocated: u64,
    pub epochs: Option<f64>,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalsReport {
    pub available: Availability,
    pub allocated: u64,
    pub budget: u64,
}

fn check_inputs(
    available: &BTreeMap<String, Availability>,
    budget: u64,
) -> Result<(), SamplerError> {
    if available.is_empty() {
        return Err(SamplerError::EmptyKeys);
    }
    if budget == 0 {
        return Err(SamplerError::ZeroBudget);
    }
    if let Some((k, _)) = available
        .iter()
        .find(|(_, a)| **a == Availability::Count(0))
    {
        return Err(SamplerError::ZeroAvailability(k.clone()));
    }
    Ok(())
}

/// Unimax: visit keys from smallest to largest (ties by key), giving each the
/// smaller of an even share of the remaining budget and `cap` epochs of its
/// data.
pub fn unimax_allocate(
    available: &BTreeMap<String, Availability>,
    budget: u64,
    cap: Rational,
) -> Result<Allocation, SamplerError> {
    check_inputs(available, budget)?;
    if cap < Rational::from_integer(1) {
        return Err(SamplerError::InvalidCap(cap));
    }
    let mut order: Vec<(&String, &Availability)> = available.iter().collect();
    order.sort_by(|a, b| a.1.cmp_size(b.1).then_with(|| a.0.cmp(b.0)));

    let mut remaining = Rational::from_integer(budget as i128);
    let mut entries = BTreeMap::new();
    for (i, (key, avail)) in order.iter().enumerate() {
        let keys_left = (order.len() - i) as i128;
        let share = remaining / Rational::from_integer(keys_left);
        let allocated = match avail {
            Availability::Count(n) => share.min(cap * Rational::from_integer(*n as i128)),
            Availability::Unbounded => share,
        };
        remaining -= allocated;
        entries.insert(
            (*key).clone(),
            AllocationEntry {
                available: **avail,
                allocated,
            },
        );
    }
    Ok(Allocation {
        mode: SamplingMode::Unimax,
        budget,
        cap_epochs: Some(cap),
        entries,
    })
}

/// Budget split in proportion to availability; every key gets the same
/// number of epochs.
pub fn proportional_allocate(
    available: &BTreeMap<String, Availability>,
    budget: u64,
) -> Result<Allocation, SamplerError> {
    check_inputs(available, budget)?;
    let mut total: i128 = 0;
    for (k, a) in available {
        match a {
            Availability::Count(n) => total += *n as i128,
            Availability::Unbounded => return Err(SamplerError::UnboundedProportional(k.clone())),
        }
    }
    if total == 0 {
        return Err(SamplerError::ZeroTotal);
    }
    let budget_r = Rational::from_integer(budget as i128);
    let entries = available
        .iter()
        .map(|(k, a)| {
            let Availability::Count(n) = a else {
                unreachable!()
            };
            let allocated = budget_r * Rational::new(*n as i128, total);
            (
                k.clone(),
                AllocationEntry {
                    available: *a,
                    allocated,
                },
            )
        })
        .collect();
    Ok(Allocation {
        mode: SamplingMode::Proportional,
        budget,
        cap_epochs: None,
        entries,
    })
}

/// A parallel-data budget, either directly in sentence pairs or as a share of
/// a stage's character budget converted with a mean pair length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParallelBudget {
    Sentences(u64),
    CharacterShare {
        stage_characters: u64,
        share: Rational,
        mean_pair_characters: u64,
    },
}

impl ParallelBudget {
    pub fn sentences(&self) -> u64 {
        match *self {
            ParallelBudget::Sentences(n) => n,
            ParallelBudget::CharacterShare {
                stage_characters,
                share,
                mean_pair_characters,
            } => {
                if mean_pair_characters == 0 {
                    return 0;
                }
                let chars = Rational::from_integer(stage_characters as i128) * share;
                (chars / Rational::from_integer(mean_pair_characters as i128))
                    .floor()
                    .to_integer()
                    .to_u64()
                    .unwrap_or(0)
            }
        }
    }
}

/// Per-direction sentence counts; the odd sentence goes to the forward
/// direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionSplit {
    pub forward: u64,
    pub backward: u64,
}

impl DirectionSplit {
    pub fn even(total: u64) -> Self {
        Self {
            forward: total - total / 2,
            backward: total / 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairAllocation {
    pub allocation: Allocation,
    pub directions: BTreeMap<LangPair, DirectionSplit>,
}

impl PairAllocation {
    pub fn sentences(&self, pair: LangPair) -> u64 {
        self.allocation
            .get(&pair.to_string())
            .map_or(0, AllocationEntry::allocated_units)
    }
}

/// Unimax over language pairs, budgeted in sentence pairs, with each pair's
/// share split evenly between its two directions.
pub fn pair_allocate(
    available: &BTreeMap<LangPair, Availability>,
    budget: ParallelBudget,
    cap: Rational,
) -> Result<PairAllocation, SamplerError> {
    let keyed: BTreeMap<String, Availability> =
        available.iter().map(|(p, a)| (p.to_string(), *a)).collect();
    let allocation = unimax_allocate(&keyed, budget.sentences(), cap)?;
    let directions = available
        .keys()
        .map(|p| {
            let units = allocation
                .get(&p.to_string())
                .map_or(0, AllocationEntry::allocated_units);
            (*p, DirectionSplit::even(units))
        })
        .collect();
    Ok(PairAllocation {
        allocation,
        directions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Lang;

    fn avail(items: &[(&str, u64)]) -> BTreeMap<String, Availability> {
        items
            .iter()
            .map(|(k, v)| (k.to_string(), Availability::Count(*v)))
            .collect()
    }

    fn r(n: i128) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn single_key_is_capped() {
        let alloc = unimax_allocate(&avail(&[("x", 100)]), 1000, r(4)).unwrap();
        assert_eq!(alloc.allocated("x"), r(400));
        assert_eq!(alloc.epochs("x"), Some(r(4)));
        assert!(alloc.total_allocated() < r(1000));
    }

    #[test]
    fn equal_keys_split_evenly() {
        let alloc =
            unimax_allocate(&avail(&[("a", 100), ("b", 100), ("c", 100)]), 150, r(4)).unwrap();
        for k in ["a", "b", "c"] {
            assert_eq!(alloc.allocated(k), r(50));
        }
    }

    #[test]
    fn table_two_languages_at_four_epochs() {
        let a = avail(&[
            ("liv", 2_600_000),
            ("vro", 14_000_000),
            ("kpv", 578_900_000),
        ]);
        let alloc = unimax_allocate(&a, 1_500_000_000, r(4)).unwrap();
        assert_eq!(alloc.allocated("liv"), r(10_400_000));
        assert_eq!(alloc.allocated("vro"), r(56_000_000));
        assert_eq!(alloc.allocated("kpv"), r(1_433_600_000));
        assert_eq!(alloc.total_allocated(), r(1_500_000_000));
        let kpv_epochs = rational_to_f64(alloc.epochs("kpv").unwrap());
        assert!((kpv_epochs - 2.4764).abs() < 1e-4);
    }

    #[test]
    fn one_epoch_caps_everything() {
        let a = avail(&[
            ("liv", 2_600_000),
            ("vro", 14_000_000),
            ("kpv", 578_900_000),
        ]);
        let alloc = unimax_allocate(&a, 1_500_000_000, r(1)).unwrap();
        for k in ["liv", "vro", "kpv"] {
            assert_eq!(alloc.epochs(k), Some(r(1)));
        }
        assert!((alloc.proportion("kpv") - 0.9721).abs() < 1e-4);
    }

    #[test]
    fn equal_sizes_get_equal_shares() {
        let alloc = unimax_allocate(&avail(&[("b", 3), ("a", 3)]), 5, r(1)).unwrap();
        assert_eq!(alloc.allocated("a"), Rational::new(5, 2));
        assert_eq!(alloc.allocated("b"), Rational::new(5, 2));
        let alloc = unimax_allocate(&avail(&[("b", 2), ("a", 2)]), 5, r(1)).unwrap();
        assert_eq!(alloc.allocated("a"), r(2));
        assert_eq!(alloc.allocated("b"), r(2));
    }

    #[test]
    fn errors_on_empty_or_zero() {
        assert!(matches!(
            unimax_allocate(&BTreeMap::new(), 10, r(1)),
            Err(SamplerError::EmptyKeys)
        ));
        assert!(matches!(
            unimax_allocate(&avail(&[("a", 1)]), 0, r(1)),
            Err(SamplerError::ZeroBudget)
        ));
        assert!(matches!(
            unimax_allocate(&avail(&[("a", 0)]), 5, r(1)),
            Err(SamplerError::ZeroAvailability(_))
        ));
    }

    #[test]
    fn unbounded_keys_take_the_even_share() {
        let mut a = avail(&[
            ("lv", 27_800_000_000),
            ("et", 32_600_000_000),
            ("fi", 114_000_000_000),
        ]);
        a.insert("ru".into(), Availability::Unbounded);
        a.insert("en".into(), Availability::Unbounded);
        let alloc = unimax_allocate(&a, 1_500_000_000, r(4)).unwrap();
        for k in ["lv", "et", "fi", "ru", "en"] {
            assert_eq!(alloc.allocated(k), r(300_000_000), "{k}");
        }
        assert_eq!(alloc.epochs("ru"), None);
    }

    #[test]
    fn proportional_epochs_are_equal() {
        let a = avail(&[("a", 1), ("b", 3)]);
        let alloc = proportional_allocate(&a, 8).unwrap();
        assert_eq!(alloc.allocated("a"), r(2));
        assert_eq!(alloc.allocated("b"), r(6));
        assert_eq!(alloc.epochs("a"), alloc.epochs("b"));

        let alloc = proportional_allocate(&a, 4).unwrap();
        assert_eq!(alloc.epochs("a"), Some(r(1)));
    }

    #[test]
    fn proportional_rejects_unbounded_and_zero_budget() {
        let mut a = avail(&[("a", 1)]);
        assert!(matches!(
            proportional_allocate(&a, 0),
            Err(SamplerError::ZeroBudget)
        ));
        a.insert("en".into(), Availability::Unbounded);
        assert!(matches!(
            proportional_allocate(&a, 5),
            Err(SamplerError::UnboundedProportional(_))
        ));
    }

    #[test]
    fn single_pair_takes_min_of_budget_and_supply() {
        let pair = LangPair::new(Lang::Liv, Lang::En);
        let a = BTreeMap::from([(pair, Availability::Count(493))]);
        let out = pair_allocate(&a, ParallelBudget::Sentences(10_000), r(1)).unwrap();
        assert_eq!(out.sentences(pair), 493);
        assert_eq!(
            out.directions[&pair],
            DirectionSplit {
                forward: 247,
                backward: 246
            }
        );
        let out = pair_allocate(&a, ParallelBudget::Sentences(100), r(1)).unwrap();
        assert_eq!(out.sentences(pair), 100);
    }

    #[test]
    fn character_share_budget_converts_to_sentences() {
        let b = ParallelBudget::CharacterShare {
            stage_characters: 3_000_000_000,
            share: Rational::new(1, 100),
            mean_pair_characters: 200,
        };
        assert_eq!(b.sentences(), 150_000);
    }

    #[test]
    fn report_shape() {
        let a = avail(&[
            ("liv", 2_600_000),
            ("vro", 14_000_000),
            ("kpv", 578_900_000),
        ]);
        let report = unimax_allocate(&a, 1_500_000_000, r(4)).unwrap().report();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["allocations"]["liv"]["allocated"], 10_400_000);
        assert_eq!(json["allocations"]["liv"]["epochs"], 4.0);
        assert_eq!(json["totals"]["allocated"], 1_500_000_000u64);
        assert_eq!(json["cap_epochs"], "4");
        let back: AllocationReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, report);
    }
}
