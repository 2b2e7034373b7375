//! Topic-partitioned cascade click model.
//!
//! Items are partitioned into topics. A user arrives with a topic drawn from
//! the topic distribution, scans the displayed list top-down and clicks the
//! first item found relevant. An item is relevant with probability equal to
//! its click-through rate when it belongs to the user's topic and never
//! otherwise, so each item carries a single CTR scalar.
//!
//! Items and topics are zero-based indices in the library API. The instance
//! file format uses one-based topic indices.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of the topic distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

/// A validated, immutable problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n_slots: usize,
    topic_of: Vec<usize>,
    ctr: Vec<f64>,
    topic_dist: Vec<f64>,
}

/// On-disk instance description. Topic indices are one-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub n_items: usize,
    pub n_slots: usize,
    pub n_topics: usize,
    pub topic_of: Vec<usize>,
    pub ctr: Vec<f64>,
    pub topic_dist: Vec<f64>,
}

/// Validates a raw description into an [`Instance`].
pub fn validate_instance(spec: &InstanceSpec) -> Result<Instance> {
    if spec.topic_of.len() != spec.n_items {
        return Err(Error::Shape(format!(
            "topic_of has {} entries, n_items = {}",
            spec.topic_of.len(),
            spec.n_items
        )));
    }
    if spec.ctr.len() != spec.n_items {
        return Err(Error::Shape(format!(
            "ctr has {} entries, n_items = {}",
            spec.ctr.len(),
            spec.n_items
        )));
    }
    if spec.topic_dist.len() != spec.n_topics {
        return Err(Error::Shape(format!(
            "topic_dist has {} entries, n_topics = {}",
            spec.topic_dist.len(),
            spec.n_topics
        )));
    }
    let mut topic_of = Vec::with_capacity(spec.n_items);
    for (item, &topic) in spec.topic_of.iter().enumerate() {
        if topic == 0 {
            return Err(Error::Shape(format!(
                "topic_of entry of item {} is 0; topics are numbered from 1",
                item + 1
            )));
        }
        if topic > spec.n_topics {
            return Err(Error::UnknownTopic {
                item,
                topic: topic - 1,
                n_topics: spec.n_topics,
            });
        }
        topic_of.push(topic - 1);
    }
    Instance::new(topic_of, spec.ctr.clone(), spec.topic_dist.clone(), spec.n_slots)
}

impl Instance {
    /// Builds an instance from zero-based topic assignments.
    pub fn new(topic_of: Vec<usize>, ctr: Vec<f64>, topic_dist: Vec<f64>, n_slots: usize) -> Result<Self> {
        let n_items = ctr.len();
        if topic_of.len() != n_items {
            return Err(Error::Shape(format!(
                "{} topic assignments for {} items",
                topic_of.len(),
                n_items
            )));
        }
        if n_items == 0 {
            return Err(Error::Shape("instance has no items".into()));
        }
        if n_slots == 0 {
            return Err(Error::Shape("list length must be at least 1".into()));
        }
        if n_slots > n_items {
            return Err(Error::TooManySlots {
                slots: n_slots,
                items: n_items,
            });
        }
        for (index, &value) in topic_dist.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::DistributionEntry { index, value });
            }
        }
        let sum: f64 = topic_dist.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::DistributionSum(sum));
        }
        for (item, &value) in ctr.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::CtrOutOfRange { item, value });
            }
        }
        for (item, &topic) in topic_of.iter().enumerate() {
            if topic >= topic_dist.len() {
                return Err(Error::UnknownTopic {
                    item,
                    topic,
                    n_topics: topic_dist.len(),
                });
            }
        }
        Ok(Self {
            n_slots,
            topic_of,
            ctr,
            topic_dist,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: InstanceSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        validate_instance(&spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_spec()).expect("instance spec is always serializable")
    }

    pub fn to_spec(&self) -> InstanceSpec {
        InstanceSpec {
            n_items: self.n_items(),
            n_slots: self.n_slots,
            n_topics: self.n_topics(),
            topic_of: self.topic_of.iter().map(|t| t + 1).collect(),
            ctr: self.ctr.clone(),
            topic_dist: self.topic_dist.clone(),
        }
    }

    pub fn n_items(&self) -> usize {
        self.ctr.len()
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_topics(&self) -> usize {
        self.topic_dist.len()
    }

    pub fn topic_of(&self, item: usize) -> usize {
        self.topic_of[item]
    }

    pub fn topics(&self) -> &[usize] {
        &self.topic_of
    }

    pub fn ctr(&self, item: usize) -> f64 {
        self.ctr[item]
    }

    pub fn ctrs(&self) -> &[f64] {
        &self.ctr
    }

    pub fn topic_dist(&self) -> &[f64] {
        &self.topic_dist
    }

    /// Same instance with a single CTR replaced.
    pub fn with_ctr(&self, item: usize, value: f64) -> Result<Self> {
        let mut ctr = self.ctr.clone();
        *ctr.get_mut(item).ok_or(Error::UnknownItem(item))? = value;
        Self::new(self.topic_of.clone(), ctr, self.topic_dist.clone(), self.n_slots)
    }

    /// Same instance with a different list length.
    pub fn with_slots(&self, n_slots: usize) -> Result<Self> {
        Self::new(
            self.topic_of.clone(),
            self.ctr.clone(),
            self.topic_dist.clone(),
            n_slots,
        )
    }

    /// Topics that carry positive mass but contain no item. Such queries can
    /// never produce a click; the instance is still valid.
    pub fn empty_topics(&self) -> Vec<usize> {
        (0..self.n_topics())
            .filter(|&m| self.topic_dist[m] > 0.0 && !self.topic_of.contains(&m))
            .collect()
    }

    /// Probability that a single item shown in the first slot is clicked.
    pub fn unblocked_rate(&self, item: usize) -> f64 {
        self.topic_dist[self.topic_of[item]] * self.ctr[item]
    }

    pub fn check_items(&self, list: &[usize]) -> Result<()> {
        match list.iter().find(|&&k| k >= self.n_items()) {
            Some(&k) => Err(Error::UnknownItem(k)),
            None => Ok(()),
        }
    }

    /// Checks that `list` is a full-length list of distinct known items.
    pub fn check_list(&self, list: &[usize]) -> Result<()> {
        if list.len() != self.n_slots {
            return Err(Error::Shape(format!(
                "list has {} items, instance expects {}",
                list.len(),
                self.n_slots
            )));
        }
        self.check_items(list)?;
        check_distinct(list)
    }

    /// Average reward `mu(u)`: probability that a list (or prefix) receives a click.
    pub fn expected_reward(&self, list: &[usize]) -> Result<f64> {
        self.check_items(list)?;
        Ok(self.expected_reward_unchecked(list))
    }

    /// Probability that the item in `slot` (zero-based) is clicked.
    pub fn success_rate(&self, list: &[usize], slot: usize) -> Result<f64> {
        if slot >= list.len() {
            return Err(Error::SlotOutOfRange { slot, len: list.len() });
        }
        self.check_items(list)?;
        Ok(self.success_rate_unchecked(list, slot))
    }

    pub(crate) fn success_rate_unchecked(&self, list: &[usize], slot: usize) -> f64 {
        let item = list[slot];
        let topic = self.topic_of[item];
        let mut rate = self.topic_dist[topic] * self.ctr[item];
        for &above in &list[..slot] {
            if self.topic_of[above] == topic {
                rate *= 1.0 - self.ctr[above];
            }
        }
        rate
    }

    pub(crate) fn expected_reward_unchecked(&self, list: &[usize]) -> f64 {
        (0..list.len())
            .map(|slot| self.success_rate_unchecked(list, slot))
            .sum()
    }

    /// Draws one user and returns the cascade feedback for `list`.
    pub fn simulate_round<R: Rng + ?Sized>(&self, list: &[usize], rng: &mut R) -> ClickFeedback {
        let topic = self.sample_topic(rng);
        let clicked_slot = list.iter().position(|&item| {
            self.topic_of[item] == topic && {
                let p = self.ctr[item];
                p > 0.0 && rng.gen::<f64>() < p
            }
        });
        ClickFeedback {
            clicked_slot,
            realized_topic: Some(topic),
        }
    }

    fn sample_topic<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (m, &p) in self.topic_dist.iter().enumerate() {
            if p > 0.0 {
                last_positive = m;
                acc += p;
                if u < acc {
                    return m;
                }
            }
        }
        last_positive
    }
}

pub(crate) fn check_distinct(list: &[usize]) -> Result<()> {
    for (i, &k) in list.iter().enumerate() {
        if list[..i].contains(&k) {
            return Err(Error::DuplicateItem(k));
        }
    }
    Ok(())
}

/// Ordered list of distinct items.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankedList(Vec<usize>);

impl RankedList {
    pub fn new(items: Vec<usize>) -> Result<Self> {
        check_distinct(&items)?;
        Ok(Self(items))
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.contains(&item)
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl std::ops::Deref for RankedList {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Formats one-based item ids, e.g. `(1, 3)`.
impl fmt::Display for RankedList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", k + 1)?;
        }
        write!(f, ")")
    }
}

/// Outcome of one round.
///
/// `realized_topic` is filled in by the simulator for diagnostics. Policies
/// only ever receive `clicked_slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClickFeedback {
    pub clicked_slot: Option<usize>,
    pub realized_topic: Option<usize>,
}
