//! Optimal lists under known parameters and the numeric regret-bound
//! constants derived from them.

use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::index::bernoulli_kl;
use crate::model::{Instance, RankedList};

/// Upper limit on the number of subsets [`brute_force_optimal`] will enumerate.
pub const BRUTE_FORCE_GUARD: u128 = 1_000_000;
/// Absolute precision of the confusion-threshold bisection.
pub const CONFUSION_TOLERANCE: f64 = 1e-9;
/// Grid step of the monotonicity scan guarding that bisection.
pub const MONOTONICITY_GRID: f64 = 1e-3;

/// Extends `prefix` greedily to `length` items: each step appends the item
/// with the largest success rate at the next slot, smallest id on ties.
fn greedy_extend(inst: &Instance, mut list: Vec<usize>, length: usize) -> Vec<usize> {
    let mut scratch = list.clone();
    while list.len() < length {
        let slot = list.len();
        let mut best: Option<(usize, f64)> = None;
        for k in (0..inst.n_items()).filter(|k| !list.contains(k)) {
            scratch.truncate(slot);
            scratch.push(k);
            let rate = inst.success_rate_unchecked(&scratch, slot);
            if best.is_none_or(|(_, r)| rate > r) {
                best = Some((k, rate));
            }
        }
        let (k, _) = best.expect("length <= n_items leaves a candidate");
        list.push(k);
        scratch.clone_from(&list);
    }
    list
}

/// Greedy construction of the optimal list of the given length.
pub fn greedy_optimal_list(inst: &Instance, length: usize) -> Result<RankedList> {
    if length > inst.n_items() {
        return Err(Error::LengthTooLarge {
            requested: length,
            items: inst.n_items(),
        });
    }
    RankedList::new(greedy_extend(inst, Vec::with_capacity(length), length))
}

/// Optimal list of the instance's own length.
pub fn optimal_list(inst: &Instance) -> RankedList {
    greedy_optimal_list(inst, inst.n_slots()).expect("n_slots <= n_items by validation")
}

/// Whether some greedy step had more than one maximizer, in which case the
/// optimal list is not unique.
pub fn greedy_has_ties(inst: &Instance, length: usize) -> bool {
    let length = length.min(inst.n_items());
    let list = greedy_extend(inst, Vec::new(), length);
    let mut scratch = Vec::with_capacity(length);
    for slot in 0..length {
        let rates: Vec<f64> = (0..inst.n_items())
            .filter(|k| !list[..slot].contains(k))
            .map(|k| {
                scratch.clear();
                scratch.extend_from_slice(&list[..slot]);
                scratch.push(k);
                inst.success_rate_unchecked(&scratch, slot)
            })
            .collect();
        let best = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if rates.iter().filter(|&&r| r == best).count() > 1 {
            return true;
        }
    }
    false
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustive search over item subsets of size `length`.
///
/// Returns the first maximizing subset in lexicographic order, listed in
/// ascending item order, with its reward.
pub fn brute_force_optimal(inst: &Instance, length: usize) -> Result<(RankedList, f64)> {
    let n = inst.n_items();
    if length > n {
        return Err(Error::LengthTooLarge {
            requested: length,
            items: n,
        });
    }
    let count = binomial(n, length);
    if count > BRUTE_FORCE_GUARD {
        return Err(Error::TooManyCombinations(count));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in (0..n).combinations(length) {
        let value = inst.expected_reward_unchecked(&subset);
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((subset, value));
        }
    }
    let (items, value) = best.expect("at least one subset");
    Ok((RankedList::new(items)?, value))
}

/// Highest-reward list of the instance's length that shows `item` first.
pub fn best_list_with_item_first(inst: &Instance, item: usize) -> Result<RankedList> {
    if item >= inst.n_items() {
        return Err(Error::UnknownItem(item));
    }
    RankedList::new(greedy_extend(inst, vec![item], inst.n_slots()))
}

/// Result of the confusion search for one suboptimal item.
#[derive(Debug, Clone, PartialEq)]
pub enum Confusion {
    /// Smallest CTR for which the item enters the optimal list, and the
    /// divergence from its true CTR.
    Reachable { threshold: f64, kl: f64, monotone: bool },
    /// No CTR in `[0, 1]` places the item in the optimal list.
    Unreachable,
}

/// Smallest divergence from the true CTR of `item` to a CTR under which the
/// item enters the optimal list, only the item's own CTR being perturbed.
pub fn min_confusion_kl(inst: &Instance, item: usize) -> Result<Confusion> {
    if item >= inst.n_items() {
        return Err(Error::UnknownItem(item));
    }
    if optimal_list(inst).contains(item) {
        return Err(Error::ItemIsOptimal(item));
    }
    let base = inst.ctr(item);
    let enters = |x: f64| -> bool {
        let perturbed = inst.with_ctr(item, x).expect("x stays in [0, 1]");
        optimal_list(&perturbed).contains(item)
    };
    if !enters(1.0) {
        return Ok(Confusion::Unreachable);
    }

    // Sampled check that membership never switches back off as x grows.
    let mut monotone = true;
    let mut seen = false;
    let steps = ((1.0 - base) / MONOTONICITY_GRID).ceil() as usize;
    for i in 1..=steps {
        let x = (base + i as f64 * MONOTONICITY_GRID).min(1.0);
        let inside = enters(x);
        if seen && !inside {
            monotone = false;
            break;
        }
        seen |= inside;
    }

    let (mut lo, mut hi) = (base, 1.0);
    while hi - lo > CONFUSION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if enters(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Confusion::Reachable {
        threshold: hi,
        kl: bernoulli_kl(base, hi),
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Lower-bound term: confusion with the list starting with the item.
    Confusion,
    /// Upper-bound term of last-slot exploration.
    TypeOne,
    /// Upper-bound term of first-slot exploration.
    TypeTwo,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundKind::Confusion => "confusion",
            BoundKind::TypeOne => "type-1",
            BoundKind::TypeTwo => "type-2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPart {
    pub kind: BoundKind,
    pub gap: f64,
    pub kl: f64,
    pub term: f64,
}

/// Contribution of one suboptimal item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemBound {
    pub item: usize,
    pub parts: Vec<BoundPart>,
    /// Sum of the finite parts.
    pub term: f64,
    pub notes: Vec<String>,
}

impl ItemBound {
    fn new(item: usize, parts: Vec<BoundPart>, notes: Vec<String>) -> Self {
        let term = parts.iter().map(|p| p.term).filter(|t| t.is_finite()).sum();
        Self {
            item,
            parts,
            term,
            notes,
        }
    }
}

/// Per-item regret constants, in regret per unit of `ln T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub title: String,
    pub items: Vec<ItemBound>,
    pub total: f64,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(title: &str, items: Vec<ItemBound>, notes: Vec<String>) -> Self {
        let total = items.iter().map(|i| i.term).sum();
        Self {
            title: title.to_string(),
            items,
            total,
            notes,
        }
    }

    pub fn item(&self, item: usize) -> Option<&ItemBound> {
        self.items.iter().find(|i| i.item == item)
    }

    /// CSV with columns `item,gap,kl,term,note`, one row per bound part.
    /// Item ids are one-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("item,gap,kl,term,note\n");
        for item in &self.items {
            let extra = item.notes.join("; ").replace(',', ";");
            if item.parts.is_empty() {
                out += &format!("{},,,0,{}\n", item.item + 1, extra);
            }
            for part in &item.parts {
                let note = if extra.is_empty() {
                    part.kind.label().to_string()
                } else {
                    format!("{} {}", part.kind.label(), extra)
                };
                out += &format!("{},{},{},{},{}\n", item.item + 1, part.gap, part.kl, part.term, note);
            }
        }
        out
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        for item in &self.items {
            writeln!(f, "  item {}: term {:.6}", item.item + 1, item.term)?;
            for part in &item.parts {
                writeln!(
                    f,
                    "    {:<9} gap {:.6}  kl {:.6}  term {:.6}",
                    part.kind.label(),
                    part.gap,
                    part.kl,
                    part.term
                )?;
            }
            for note in &item.notes {
                writeln!(f, "    note: {note}")?;
            }
        }
        writeln!(f, "  total: {:.6}", self.total)?;
        for note in &self.notes {
            writeln!(f, "  note: {note}")?;
        }
        Ok(())
    }
}

fn suboptimal_items(inst: &Instance, best: &RankedList) -> Vec<usize> {
    (0..inst.n_items()).filter(|&k| !best.contains(k)).collect()
}

fn tie_notes(inst: &Instance) -> Vec<String> {
    if greedy_has_ties(inst, inst.n_slots()) {
        vec!["optimal list is not unique; constants assume uniqueness".into()]
    } else {
        Vec::new()
    }
}

/// Asymptotic regret lower-bound constant for uniformly good policies.
pub fn regret_lower_bound(inst: &Instance) -> Result<BoundReport> {
    let best = optimal_list(inst);
    let best_reward = inst.expected_reward_unchecked(&best);
    let mut notes = tie_notes(inst);
    notes.push("confusion search perturbs only the item's own CTR; the constant is conservative".into());
    let mut items = Vec::new();
    for k in suboptimal_items(inst, &best) {
        let mut item_notes = Vec::new();
        let parts = match min_confusion_kl(inst, k)? {
            Confusion::Unreachable => {
                item_notes.push("not reachable: no CTR in [0, 1] makes the item optimal".into());
                Vec::new()
            }
            Confusion::Reachable { kl, monotone, .. } => {
                if !monotone {
                    item_notes.push("membership predicate not monotone on the scan grid".into());
                }
                let with_first = best_list_with_item_first(inst, k)?;
                let gap = best_reward - inst.expected_reward_unchecked(&with_first);
                let term = if kl > 0.0 {
                    gap / kl
                } else {
                    item_notes.push("zero divergence (tie); term excluded".into());
                    f64::INFINITY
                };
                vec![BoundPart {
                    kind: BoundKind::Confusion,
                    gap,
                    kl,
                    term,
                }]
            }
        };
        items.push(ItemBound::new(k, parts, item_notes));
    }
    Ok(BoundReport::new("regret lower bound (per ln T)", items, notes))
}

fn checked_kl(item: usize, lower: f64, upper: f64) -> Result<f64> {
    if lower >= upper {
        return Err(Error::DeltaTooLarge { item, lower, upper });
    }
    Ok(bernoulli_kl(lower, upper))
}

/// Asymptotic regret upper-bound constant of LDR for a margin `delta`.
pub fn ldr_upper_bound_constant(inst: &Instance, delta: f64) -> Result<BoundReport> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::Precondition(format!("delta must be nonnegative, got {delta}")));
    }
    let best = optimal_list(inst);
    let best_reward = inst.expected_reward_unchecked(&best);
    let last = best.len() - 1;
    let best_last_rate = inst.success_rate_unchecked(&best, last);
    let mut items = Vec::new();
    for k in suboptimal_items(inst, &best) {
        let mut notes = Vec::new();

        let mut replaced = best.to_vec();
        replaced[last] = k;
        let replaced_rate = inst.success_rate_unchecked(&replaced, last);
        let gap = best_reward - inst.expected_reward_unchecked(&replaced);
        let kl = checked_kl(k, replaced_rate + delta, best_last_rate - delta)?;
        let mut parts = vec![BoundPart {
            kind: BoundKind::TypeOne,
            gap,
            kl,
            term: gap / kl,
        }];

        let topic = inst.topic_of(k);
        match best.iter().rposition(|&j| inst.topic_of(j) == topic) {
            None => notes.push("topic absent from the optimal list; type-2 term omitted".into()),
            Some(slot) => {
                let mut shifted = Vec::with_capacity(best.len());
                shifted.push(k);
                shifted.extend_from_slice(&best[..last]);
                let gap = best_reward - inst.expected_reward_unchecked(&shifted);
                let kl = checked_kl(
                    k,
                    inst.unblocked_rate(k) + delta,
                    inst.unblocked_rate(best[slot]) - delta,
                )?;
                parts.push(BoundPart {
                    kind: BoundKind::TypeTwo,
                    gap,
                    kl,
                    term: gap / kl,
                });
            }
        }
        items.push(ItemBound::new(k, parts, notes));
    }
    Ok(BoundReport::new(
        &format!("LDR regret upper bound (per ln T, delta = {delta})"),
        items,
        tie_notes(inst),
    ))
}
