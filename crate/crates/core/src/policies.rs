//! List-selection policies: LDR and its randomized variant, PIE*, RBA and a
//! static list.
//!
//! Every policy follows the same round protocol: `select` proposes a list
//! and tags how it was produced, the environment returns the clicked slot
//! (if any), and `observe` updates the state. Policies never see the topic
//! of the user.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::index::{exploration_schedule, index_exceeds, klucb_index};
use crate::model::{check_distinct, Instance, RankedList};

/// What a policy may know about the instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemLayout {
    pub n_items: usize,
    pub n_slots: usize,
    pub topic_of: Vec<usize>,
}

impl From<&Instance> for ItemLayout {
    fn from(inst: &Instance) -> Self {
        Self {
            n_items: inst.n_items(),
            n_slots: inst.n_slots(),
            topic_of: inst.topics().to_vec(),
        }
    }
}

/// How the list of a round was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionTag {
    /// Leader played as is.
    Event1a,
    /// Shuffled leader.
    Event1b,
    /// First-slot exploration of the given item.
    Event2 { item: usize },
    /// Last-slot exploration of the given item.
    Event3 { item: usize },
    /// Leader played after both exploration checks failed.
    Event4,
    /// Policies without an event structure.
    Untagged,
}

impl ActionTag {
    /// Rounds that refresh the success-rate statistics of LDR.
    pub fn updates_success_rates(self) -> bool {
        matches!(self, ActionTag::Event1a | ActionTag::Event3 { .. } | ActionTag::Event4)
    }
}

pub trait Policy: Send {
    fn name(&self) -> String;

    /// Returns the policy to its initial state with a fresh random stream.
    fn reset(&mut self, seed: u64);

    fn select(&mut self, round: u64) -> (RankedList, ActionTag);

    fn observe(&mut self, list: &RankedList, tag: ActionTag, clicked_slot: Option<usize>) -> Result<()>;
}

/// Running Bernoulli mean seeded with one phantom observation of 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub sum: f64,
    pub count: f64,
}

impl Default for Estimate {
    fn default() -> Self {
        Self { sum: 0.5, count: 1.0 }
    }
}

impl Estimate {
    pub fn mean(&self) -> f64 {
        self.sum / self.count
    }

    pub fn push(&mut self, success: bool) {
        self.count += 1.0;
        if success {
            self.sum += 1.0;
        }
    }

    pub fn index(&self, budget: f64) -> f64 {
        klucb_index(self.mean(), self.count, budget)
    }

    pub fn index_exceeds(&self, budget: f64, threshold: f64) -> bool {
        index_exceeds(self.mean(), self.count, budget, threshold)
    }
}

fn budget(round: u64) -> f64 {
    exploration_schedule(round.max(1)).expect("round >= 1")
}

/// Item with the largest index among those not in `exclude`, smallest id on
/// ties. Candidates are screened with a single divergence evaluation against
/// the running maximum and only inverted when they beat it.
fn argmax_index(estimates: &[Estimate], budget: f64, exclude: &[usize]) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (k, est) in estimates.iter().enumerate() {
        if exclude.contains(&k) {
            continue;
        }
        match best {
            Some((_, value)) if !est.index_exceeds(budget, value) => {}
            _ => best = Some((k, est.index(budget))),
        }
    }
    best.expect("fewer excluded items than items").0
}

fn check_shape(layout: &ItemLayout, list: &RankedList) -> Result<()> {
    if list.len() != layout.n_slots {
        return Err(Error::InconsistentTag(format!(
            "list of length {} for {} slots",
            list.len(),
            layout.n_slots
        )));
    }
    if let Some(&k) = list.iter().find(|&&k| k >= layout.n_items) {
        return Err(Error::UnknownItem(k));
    }
    Ok(())
}

fn check_slot(layout: &ItemLayout, clicked_slot: Option<usize>) -> Result<()> {
    match clicked_slot {
        Some(slot) if slot >= layout.n_slots => Err(Error::SlotOutOfRange {
            slot,
            len: layout.n_slots,
        }),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdrVariant {
    /// Leader refreshed every fourth round; the round index modulo 4 picks
    /// the phase.
    Windowed,
    /// Leader refreshed every round; the phase is drawn uniformly.
    Randomized,
}

/// LDR (Learning Diverse Rankings).
///
/// Two families of statistics are kept per item: the success rate `c_hat`
/// over rounds where the item was shown in an unshuffled leader or a
/// last-slot exploration (`t` such rounds), and the unblocked rate
/// `theta_hat` over rounds where no item of the same topic was shown above
/// it (`tau` such rounds).
#[derive(Debug, Clone)]
pub struct Ldr {
    variant: LdrVariant,
    layout: ItemLayout,
    success: Vec<Estimate>,
    unblocked: Vec<Estimate>,
    leader: Vec<usize>,
    rng: ChaCha8Rng,
}

impl Ldr {
    pub fn new(layout: ItemLayout, variant: LdrVariant, seed: u64) -> Self {
        let n = layout.n_items;
        Self {
            variant,
            layout,
            success: vec![Estimate::default(); n],
            unblocked: vec![Estimate::default(); n],
            leader: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn variant(&self) -> LdrVariant {
        self.variant
    }

    pub fn leader(&self) -> &[usize] {
        &self.leader
    }

    pub fn c_hat(&self, item: usize) -> f64 {
        self.success[item].mean()
    }

    pub fn t(&self, item: usize) -> f64 {
        self.success[item].count
    }

    pub fn theta_hat(&self, item: usize) -> f64 {
        self.unblocked[item].mean()
    }

    pub fn tau(&self, item: usize) -> f64 {
        self.unblocked[item].count
    }

    pub fn success_estimate(&self, item: usize) -> Estimate {
        self.success[item]
    }

    pub fn unblocked_estimate(&self, item: usize) -> Estimate {
        self.unblocked[item]
    }

    /// Overwrites the statistics of one item (warm starts, tests).
    pub fn set_statistics(&mut self, item: usize, success: Estimate, unblocked: Estimate) {
        self.success[item] = success;
        self.unblocked[item] = unblocked;
    }

    /// Overwrites the current leader (warm starts, tests).
    pub fn set_leader(&mut self, leader: Vec<usize>) -> Result<()> {
        check_shape(&self.layout, &RankedList::new(leader.clone())?)?;
        self.leader = leader;
        Ok(())
    }

    /// Ranks items by `c_hat` to decide how many slots each topic gets and
    /// where, then fills each slot with the unplaced item of that topic with
    /// the largest `theta_hat`.
    pub fn update_leader(&mut self) {
        let n_slots = self.layout.n_slots;
        let mut by_success: Vec<usize> = (0..self.layout.n_items).collect();
        by_success.sort_by(|&a, &b| {
            self.success[b]
                .mean()
                .total_cmp(&self.success[a].mean())
                .then(a.cmp(&b))
        });
        let mut leader: Vec<usize> = Vec::with_capacity(n_slots);
        for &anchor in &by_success[..n_slots] {
            let topic = self.layout.topic_of[anchor];
            let mut pick: Option<usize> = None;
            for k in 0..self.layout.n_items {
                if self.layout.topic_of[k] != topic || leader.contains(&k) {
                    continue;
                }
                if pick.is_none_or(|p| self.unblocked[k].mean() > self.unblocked[p].mean()) {
                    pick = Some(k);
                }
            }
            leader.push(pick.expect("a topic with an anchor has an unplaced item"));
        }
        self.leader = leader;
    }

    fn type_two_candidates(&self, budget: f64) -> Vec<usize> {
        (0..self.layout.n_items)
            .filter(|k| !self.leader.contains(k))
            .filter(|&k| {
                let topic = self.layout.topic_of[k];
                self.leader
                    .iter()
                    .filter(|&&j| self.layout.topic_of[j] == topic)
                    .map(|&j| self.unblocked[j].mean())
                    .reduce(f64::min)
                    .is_some_and(|weakest| self.unblocked[k].index_exceeds(budget, weakest))
            })
            .collect()
    }

    fn type_one_candidates(&self, budget: f64) -> Vec<usize> {
        let last = *self.leader.last().expect("leader is nonempty");
        let topic = self.layout.topic_of[last];
        let threshold = self.success[last].mean();
        (0..self.layout.n_items)
            .filter(|k| !self.leader.contains(k) && self.layout.topic_of[*k] != topic)
            .filter(|&k| self.success[k].index_exceeds(budget, threshold))
            .collect()
    }
}

impl Policy for Ldr {
    fn name(&self) -> String {
        match self.variant {
            LdrVariant::Windowed => "ldr".into(),
            LdrVariant::Randomized => "ldr-randomized".into(),
        }
    }

    fn reset(&mut self, seed: u64) {
        *self = Self::new(self.layout.clone(), self.variant, seed);
    }

    fn select(&mut self, round: u64) -> (RankedList, ActionTag) {
        let refresh = match self.variant {
            LdrVariant::Windowed => round.is_multiple_of(4),
            LdrVariant::Randomized => true,
        };
        if refresh || self.leader.is_empty() {
            self.update_leader();
        }
        let phase = match self.variant {
            LdrVariant::Windowed => round % 4,
            LdrVariant::Randomized => self.rng.gen_range(0..4),
        };
        let mut list = self.leader.clone();
        let tag = match phase {
            0 => ActionTag::Event1a,
            3 => {
                list.shuffle(&mut self.rng);
                ActionTag::Event1b
            }
            _ => {
                let budget = budget(round);
                let mut tag = None;
                if phase == 1 {
                    let candidates = self.type_two_candidates(budget);
                    if !candidates.is_empty() {
                        let k = candidates[self.rng.gen_range(0..candidates.len())];
                        list.pop();
                        list.insert(0, k);
                        tag = Some(ActionTag::Event2 { item: k });
                    }
                }
                tag.unwrap_or_else(|| {
                    let candidates = self.type_one_candidates(budget);
                    if candidates.is_empty() {
                        ActionTag::Event4
                    } else {
                        let k = candidates[self.rng.gen_range(0..candidates.len())];
                        *list.last_mut().expect("nonempty") = k;
                        ActionTag::Event3 { item: k }
                    }
                })
            }
        };
        (RankedList::new(list).expect("leader items are distinct"), tag)
    }

    fn observe(&mut self, list: &RankedList, tag: ActionTag, clicked_slot: Option<usize>) -> Result<()> {
        check_shape(&self.layout, list)?;
        check_slot(&self.layout, clicked_slot)?;
        let consistent = match tag {
            ActionTag::Event1a | ActionTag::Event4 => list.items() == self.leader.as_slice(),
            ActionTag::Event1b => list.iter().all(|k| self.leader.contains(k)),
            ActionTag::Event2 { item } => {
                list[0] == item && !self.leader.contains(&item) && list[1..] == self.leader[..self.leader.len() - 1]
            }
            ActionTag::Event3 { item } => {
                let last = list.len() - 1;
                list[last] == item && !self.leader.contains(&item) && list[..last] == self.leader[..last]
            }
            ActionTag::Untagged => false,
        };
        if !consistent {
            return Err(Error::InconsistentTag(format!("{tag:?} does not match list {list}")));
        }

        if tag.updates_success_rates() {
            for (slot, &k) in list.iter().enumerate() {
                self.success[k].push(clicked_slot == Some(slot));
            }
        }
        for (slot, &k) in list.iter().enumerate() {
            let topic = self.layout.topic_of[k];
            if list[..slot].iter().all(|&j| self.layout.topic_of[j] != topic) {
                self.unblocked[k].push(clicked_slot == Some(slot));
            }
        }
        Ok(())
    }
}

/// PIE*: one KL-UCB index per item built from inspections only, showing the
/// `L` items with the largest indices.
#[derive(Debug, Clone)]
pub struct PieStar {
    layout: ItemLayout,
    estimates: Vec<Estimate>,
}

impl PieStar {
    pub fn new(layout: ItemLayout) -> Self {
        let n = layout.n_items;
        Self {
            layout,
            estimates: vec![Estimate::default(); n],
        }
    }

    pub fn estimate(&self, item: usize) -> Estimate {
        self.estimates[item]
    }
}

impl Policy for PieStar {
    fn name(&self) -> String {
        "pie-star".into()
    }

    fn reset(&mut self, _seed: u64) {
        *self = Self::new(self.layout.clone());
    }

    fn select(&mut self, round: u64) -> (RankedList, ActionTag) {
        let budget = budget(round);
        let indices: Vec<f64> = self.estimates.iter().map(|e| e.index(budget)).collect();
        let mut order: Vec<usize> = (0..self.layout.n_items).collect();
        order.sort_by(|&a, &b| indices[b].total_cmp(&indices[a]).then(a.cmp(&b)));
        order.truncate(self.layout.n_slots);
        (RankedList::new(order).expect("distinct"), ActionTag::Untagged)
    }

    fn observe(&mut self, list: &RankedList, _tag: ActionTag, clicked_slot: Option<usize>) -> Result<()> {
        check_shape(&self.layout, list)?;
        check_slot(&self.layout, clicked_slot)?;
        let inspected = clicked_slot.map_or(list.len(), |slot| slot + 1);
        for (slot, &k) in list[..inspected].iter().enumerate() {
            self.estimates[k].push(clicked_slot == Some(slot));
        }
        Ok(())
    }
}

/// Ranked bandits: an independent KL-UCB learner per slot.
#[derive(Debug, Clone)]
pub struct Rba {
    layout: ItemLayout,
    slots: Vec<Vec<Estimate>>,
}

impl Rba {
    pub fn new(layout: ItemLayout) -> Self {
        let slots = vec![vec![Estimate::default(); layout.n_items]; layout.n_slots];
        Self { layout, slots }
    }

    pub fn estimate(&self, slot: usize, item: usize) -> Estimate {
        self.slots[slot][item]
    }
}

impl Policy for Rba {
    fn name(&self) -> String {
        "rba".into()
    }

    fn reset(&mut self, _seed: u64) {
        *self = Self::new(self.layout.clone());
    }

    /// Slot by slot, the slot's learner shows its best item not already
    /// placed above.
    fn select(&mut self, round: u64) -> (RankedList, ActionTag) {
        let budget = budget(round);
        let mut list = Vec::with_capacity(self.layout.n_slots);
        for estimates in &self.slots {
            list.push(argmax_index(estimates, budget, &list));
        }
        (RankedList::new(list).expect("distinct"), ActionTag::Untagged)
    }

    fn observe(&mut self, list: &RankedList, _tag: ActionTag, clicked_slot: Option<usize>) -> Result<()> {
        check_shape(&self.layout, list)?;
        check_slot(&self.layout, clicked_slot)?;
        for (slot, &k) in list.iter().enumerate() {
            self.slots[slot][k].push(clicked_slot == Some(slot));
        }
        Ok(())
    }
}

/// Always shows the same list.
#[derive(Debug, Clone)]
pub struct StaticList {
    list: RankedList,
}

impl StaticList {
    pub fn new(layout: &ItemLayout, items: Vec<usize>) -> Result<Self> {
        let list = RankedList::new(items)?;
        check_shape(layout, &list)?;
        Ok(Self { list })
    }
}

impl Policy for StaticList {
    fn name(&self) -> String {
        let ids: Vec<String> = self.list.iter().map(|k| (k + 1).to_string()).collect();
        format!("static:{}", ids.join(","))
    }

    fn reset(&mut self, _seed: u64) {}

    fn select(&mut self, _round: u64) -> (RankedList, ActionTag) {
        (self.list.clone(), ActionTag::Untagged)
    }

    fn observe(&mut self, _list: &RankedList, _tag: ActionTag, _clicked_slot: Option<usize>) -> Result<()> {
        Ok(())
    }
}

/// Policy chosen by name: `ldr`, `ldr-randomized`, `pie-star`, `rba` or
/// `static:<one-based ids>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Ldr,
    LdrRandomized,
    PieStar,
    Rba,
    /// Zero-based item ids.
    Static(Vec<usize>),
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ldr" => Ok(Self::Ldr),
            "ldr-randomized" => Ok(Self::LdrRandomized),
            "pie-star" => Ok(Self::PieStar),
            "rba" => Ok(Self::Rba),
            other => {
                let ids = other
                    .strip_prefix("static:")
                    .ok_or_else(|| Error::UnknownPolicy(s.to_string()))?;
                let items = ids
                    .split(',')
                    .map(|id| match id.trim().parse::<usize>() {
                        Ok(k) if k >= 1 => Ok(k - 1),
                        _ => Err(Error::UnknownPolicy(s.to_string())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                check_distinct(&items)?;
                Ok(Self::Static(items))
            }
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ldr => write!(f, "ldr"),
            Self::LdrRandomized => write!(f, "ldr-randomized"),
            Self::PieStar => write!(f, "pie-star"),
            Self::Rba => write!(f, "rba"),
            Self::Static(items) => {
                let ids: Vec<String> = items.iter().map(|k| (k + 1).to_string()).collect();
                write!(f, "static:{}", ids.join(","))
            }
        }
    }
}

impl PolicySpec {
    pub fn build(&self, layout: &ItemLayout, seed: u64) -> Result<Box<dyn Policy>> {
        Ok(match self {
            Self::Ldr => Box::new(Ldr::new(layout.clone(), LdrVariant::Windowed, seed)),
            Self::LdrRandomized => Box::new(Ldr::new(layout.clone(), LdrVariant::Randomized, seed)),
            Self::PieStar => Box::new(PieStar::new(layout.clone())),
            Self::Rba => Box::new(Rba::new(layout.clone())),
            Self::Static(items) => Box::new(StaticList::new(layout, items.clone())?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_layout() -> ItemLayout {
        ItemLayout {
            n_items: 4,
            n_slots: 2,
            topic_of: vec![0, 0, 1, 1],
        }
    }

    fn list(items: &[usize]) -> RankedList {
        RankedList::new(items.to_vec()).unwrap()
    }

    #[test]
    fn fresh_ldr_plays_id_ordered_leader() {
        let mut ldr = Ldr::new(toy_layout(), LdrVariant::Windowed, 1);
        let (l, tag) = ldr.select(0);
        assert_eq!(l.items(), &[0, 1]);
        assert_eq!(tag, ActionTag::Event1a);
    }

    #[test]
    fn shuffle_phase_permutes_leader() {
        let mut ldr = Ldr::new(toy_layout(), LdrVariant::Windowed, 5);
        ldr.select(0);
        for round in [3, 7, 11, 15] {
            let (l, tag) = ldr.select(round);
            assert_eq!(tag, ActionTag::Event1b);
            let mut sorted = l.to_vec();
            sorted.sort();
            assert_eq!(sorted, vec![0, 1]);
        }
    }

    #[test]
    fn forced_type_two_exploration() {
        let layout = ItemLayout {
            n_items: 4,
            n_slots: 2,
            topic_of: vec![0, 1, 0, 1],
        };
        let mut ldr = Ldr::new(layout, LdrVariant::Windowed, 2);
        ldr.set_leader(vec![0, 1]).unwrap();
        // Leader's topic-1 item looks poor and is well sampled.
        ldr.set_statistics(
            0,
            Estimate {
                sum: 500.0,
                count: 1000.0,
            },
            Estimate {
                sum: 100.0,
                count: 1000.0,
            },
        );
        ldr.set_statistics(
            1,
            Estimate {
                sum: 500.0,
                count: 1000.0,
            },
            Estimate {
                sum: 900.0,
                count: 1000.0,
            },
        );
        // Outside item of the same topic: one pull at 1/2.
        ldr.set_statistics(
            2,
            Estimate {
                sum: 0.0,
                count: 1000.0,
            },
            Estimate::default(),
        );
        ldr.set_statistics(
            3,
            Estimate {
                sum: 0.0,
                count: 1000.0,
            },
            Estimate {
                sum: 0.0,
                count: 1000.0,
            },
        );
        let (l, tag) = ldr.select(1_000_001);
        assert_eq!(tag, ActionTag::Event2 { item: 2 });
        assert_eq!(l.items(), &[2, 0]);
    }

    #[test]
    fn type_one_exploration_replaces_last_slot() {
        let mut ldr = Ldr::new(toy_layout(), LdrVariant::Windowed, 2);
        ldr.set_leader(vec![0, 1]).unwrap();
        for k in 0..4 {
            ldr.set_statistics(
                k,
                Estimate {
                    sum: 100.0,
                    count: 1000.0,
                },
                Estimate {
                    sum: 100.0,
                    count: 1000.0,
                },
            );
        }
        // Item 3 (topic 2) has few pulls, item 2 (topic 2) is confidently poor.
        ldr.set_statistics(
            2,
            Estimate {
                sum: 0.0,
                count: 1000.0,
            },
            Estimate {
                sum: 0.0,
                count: 1000.0,
            },
        );
        ldr.set_statistics(
            3,
            Estimate { sum: 0.5, count: 1.0 },
            Estimate {
                sum: 0.0,
                count: 1000.0,
            },
        );
        let (l, tag) = ldr.select(2);
        assert_eq!(tag, ActionTag::Event3 { item: 3 });
        assert_eq!(l.items(), &[0, 3]);
        // With nothing worth exploring the leader is played.
        ldr.set_statistics(
            3,
            Estimate {
                sum: 0.0,
                count: 1000.0,
            },
            Estimate {
                sum: 0.0,
                count: 1000.0,
            },
        );
        assert_eq!(ldr.select(2).1, ActionTag::Event4);
    }

    #[test]
    fn observe_rules() {
        let layout = ItemLayout {
            n_items: 4,
            n_slots: 3,
            topic_of: vec![0, 0, 1, 1],
        };
        let mut ldr = Ldr::new(layout, LdrVariant::Windowed, 0);
        ldr.set_leader(vec![0, 1, 2]).unwrap();
        // Shuffle round: t untouched, tau only for per-topic-first items.
        ldr.observe(&list(&[1, 0, 2]), ActionTag::Event1b, None).unwrap();
        assert_eq!((0..4).map(|k| ldr.t(k)).collect::<Vec<_>>(), vec![1.0; 4]);
        assert_eq!((0..4).map(|k| ldr.tau(k)).collect::<Vec<_>>(), vec![1.0, 2.0, 2.0, 1.0]);
        // Leader round with a click in slot 2 (zero-based 1).
        ldr.observe(&list(&[0, 1, 2]), ActionTag::Event1a, Some(1)).unwrap();
        assert_eq!((0..4).map(|k| ldr.t(k)).collect::<Vec<_>>(), vec![2.0, 2.0, 2.0, 1.0]);
        assert_eq!(ldr.c_hat(1), 0.75);
        assert_eq!(ldr.c_hat(0), 0.25);
        assert_eq!(ldr.c_hat(2), 0.25);
        assert_eq!((0..4).map(|k| ldr.tau(k)).collect::<Vec<_>>(), vec![2.0, 2.0, 3.0, 1.0]);
    }

    #[test]
    fn observe_rejects_inconsistent_tags() {
        let mut ldr = Ldr::new(toy_layout(), LdrVariant::Windowed, 0);
        ldr.set_leader(vec![0, 2]).unwrap();
        assert!(ldr.observe(&list(&[0, 3]), ActionTag::Event1a, None).is_err());
        assert!(ldr
            .observe(&list(&[0, 3]), ActionTag::Event2 { item: 3 }, None)
            .is_err());
        assert!(ldr.observe(&list(&[0, 2]), ActionTag::Event1a, Some(2)).is_err());
        assert!(ldr
            .observe(&list(&[0, 3]), ActionTag::Event3 { item: 3 }, Some(1))
            .is_ok());
    }

    #[test]
    fn leader_fills_topic_slots_by_theta_hat() {
        let layout = ItemLayout {
            n_items: 5,
            n_slots: 3,
            topic_of: vec![0, 0, 1, 0, 1],
        };
        let mut ldr = Ldr::new(layout, LdrVariant::Windowed, 0);
        let est = |m: f64| Estimate {
            sum: m * 100.0,
            count: 100.0,
        };
        // c_hat ranking: 1, 2, 0 -> topics 0, 1, 0.
        for (k, c, th) in [
            (0, 0.3, 0.2),
            (1, 0.5, 0.3),
            (2, 0.4, 0.1),
            (3, 0.1, 0.6),
            (4, 0.0, 0.4),
        ] {
            ldr.set_statistics(k, est(c), est(th));
        }
        ldr.update_leader();
        assert_eq!(ldr.leader(), &[3, 4, 1]);
    }

    #[test]
    fn pie_star_updates_inspected_items_only() {
        let mut pie = PieStar::new(ItemLayout {
            n_items: 4,
            n_slots: 3,
            topic_of: vec![0, 0, 1, 1],
        });
        let (l, _) = pie.select(1);
        assert_eq!(l.items(), &[0, 1, 2]);
        pie.observe(&l, ActionTag::Untagged, None).unwrap();
        for k in 0..3 {
            assert_eq!(pie.estimate(k), Estimate { sum: 0.5, count: 2.0 });
        }
        pie.observe(&l, ActionTag::Untagged, Some(1)).unwrap();
        assert_eq!(pie.estimate(0), Estimate { sum: 0.5, count: 3.0 });
        assert_eq!(pie.estimate(1), Estimate { sum: 1.5, count: 3.0 });
        assert_eq!(pie.estimate(2), Estimate { sum: 0.5, count: 2.0 });
        assert_eq!(pie.estimate(3), Estimate::default());
    }

    #[test]
    fn rba_credit_and_dedup() {
        let mut rba = Rba::new(toy_layout());
        let (l, _) = rba.select(1);
        assert_eq!(l.items(), &[0, 1]);
        rba.observe(&l, ActionTag::Untagged, Some(1)).unwrap();
        assert!(rba.estimate(1, 1).mean() > 0.5);
        assert!(rba.estimate(0, 0).mean() < 0.5);
        // Both slot learners now favour item 2; the lower slot falls back.
        let mut rba = Rba::new(toy_layout());
        for slot in 0..2 {
            for k in 0..4 {
                let m = if k == 2 { 0.9 } else { 0.1 + 0.1 * k as f64 };
                rba.slots[slot][k] = Estimate {
                    sum: m * 1e4,
                    count: 1e4,
                };
            }
        }
        assert_eq!(rba.select(100).0.items(), &[2, 3]);
    }

    #[test]
    fn policy_names_round_trip() {
        for name in ["ldr", "ldr-randomized", "pie-star", "rba", "static:1,3"] {
            assert_eq!(name.parse::<PolicySpec>().unwrap().to_string(), name);
        }
        assert_eq!(
            "static:1,3".parse::<PolicySpec>().unwrap(),
            PolicySpec::Static(vec![0, 2])
        );
        assert!("static:0".parse::<PolicySpec>().is_err());
        assert!("static:1,1".parse::<PolicySpec>().is_err());
        assert!("ucb".parse::<PolicySpec>().is_err());
        let layout = toy_layout();
        assert!(PolicySpec::Static(vec![0, 1, 2]).build(&layout, 0).is_err());
        assert!(PolicySpec::Static(vec![0, 9]).build(&layout, 0).is_err());
    }

    #[test]
    fn select_is_pure_given_state() {
        let mut ldr = Ldr::new(toy_layout(), LdrVariant::Randomized, 77);
        for round in 0..50 {
            let mut twin = ldr.clone();
            let a = ldr.select(round);
            let b = twin.select(round);
            assert_eq!(a, b);
            ldr.observe(&a.0, a.1, if round % 3 == 0 { Some(0) } else { None })
                .unwrap();
        }
    }
}
