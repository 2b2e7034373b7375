//! Fitting a cascade-model instance from a click log.
//!
//! A log holds one record per click: the clicked item, the slot it was shown
//! in and its topic. Items are ordered by their mean click position to
//! recover the list users saw on average; within each topic an item's CTR is
//! its clicks over the clicks of same-topic items at or below it plus that
//! topic's share of abandoned sessions.

use std::collections::HashMap;
use std::io::Read;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Instance;

pub const DEFAULT_ABANDONMENT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickRecord {
    pub item: String,
    /// One-based slot.
    pub position: u32,
    pub topic: String,
}

/// Reads `item_id,position,topic_id` records. The header row is required and
/// any malformed line is an error.
pub fn read_click_log<R: Read>(reader: R) -> Result<Vec<ClickRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["item_id", "position", "topic_id"] {
        return Err(Error::MalformedLog {
            line: 1,
            reason: "header must be item_id,position,topic_id".into(),
        });
    }
    let mut records = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::MalformedLog {
            line,
            reason: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(Error::MalformedLog {
                line,
                reason: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let position: u32 = row[1].parse().map_err(|_| Error::MalformedLog {
            line,
            reason: format!("bad position '{}'", &row[1]),
        })?;
        let record = ClickRecord {
            item: row[0].to_string(),
            position,
            topic: row[2].to_string(),
        };
        validate_record(&record).map_err(|reason| Error::MalformedLog { line, reason })?;
        records.push(record);
    }
    Ok(records)
}

fn validate_record(record: &ClickRecord) -> std::result::Result<(), String> {
    if record.position == 0 {
        return Err("position must be at least 1".into());
    }
    if record.item.is_empty() || record.topic.is_empty() {
        return Err("empty identifier".into());
    }
    Ok(())
}

pub fn write_click_log(records: &[ClickRecord]) -> String {
    let mut out = String::from("item_id,position,topic_id\n");
    for r in records {
        out += &format!("{},{},{}\n", r.item, r.position, r.topic);
    }
    out
}

#[derive(Debug, Clone)]
struct ItemClicks<'a> {
    item: &'a str,
    topic: &'a str,
    clicks: u64,
    position_sum: u64,
}

impl ItemClicks<'_> {
    fn mean_position(&self) -> f64 {
        self.position_sum as f64 / self.clicks as f64
    }
}

fn tally(records: &[ClickRecord]) -> Result<Vec<ItemClicks<'_>>> {
    if records.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut by_item: HashMap<&str, ItemClicks<'_>> = HashMap::new();
    for r in records {
        validate_record(r).map_err(Error::Precondition)?;
        let entry = by_item.entry(&r.item).or_insert(ItemClicks {
            item: &r.item,
            topic: &r.topic,
            clicks: 0,
            position_sum: 0,
        });
        if entry.topic != r.topic {
            return Err(Error::Precondition(format!(
                "item '{}' appears under topics '{}' and '{}'",
                r.item, entry.topic, r.topic
            )));
        }
        entry.clicks += 1;
        entry.position_sum += u64::from(r.position);
    }
    let mut items: Vec<ItemClicks<'_>> = by_item.into_values().collect();
    items.sort_by(|a, b| {
        a.mean_position()
            .total_cmp(&b.mean_position())
            .then(b.clicks.cmp(&a.clicks))
            .then(a.item.cmp(b.item))
    });
    Ok(items)
}

/// Items in ascending order of mean click position; ties by more clicks,
/// then id.
pub fn average_displayed_list(records: &[ClickRecord]) -> Result<Vec<String>> {
    Ok(tally(records)?.into_iter().map(|c| c.item.to_string()).collect())
}

/// A fitted instance with the names behind its zero-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedInstance {
    pub instance: Instance,
    /// Item names in index order (the average displayed list).
    pub items: Vec<String>,
    /// Topic names in index order (first appearance in the average list).
    pub topics: Vec<String>,
}

impl FittedInstance {
    /// Instance file with the item and topic names as leading comments.
    pub fn to_toml_string(&self) -> String {
        format!(
            "# items: {}\n# topics: {}\n{}",
            self.items.join(", "),
            self.topics.join(", "),
            self.instance.to_toml_string()
        )
    }
}

/// Fits CTRs and the topic distribution from a click log.
///
/// Each topic is charged `rate / (1 - rate)` abandoned sessions per click on
/// that topic, so abandonment is the fraction `rate` of all sessions. The
/// topic distribution is the per-topic click share.
pub fn fit_instance(records: &[ClickRecord], abandonment_rate: f64, n_slots: usize) -> Result<FittedInstance> {
    if !(0.0..1.0).contains(&abandonment_rate) {
        return Err(Error::AbandonmentRate(abandonment_rate));
    }
    let items = tally(records)?;
    let mut topics: Vec<&str> = Vec::new();
    for c in &items {
        if !topics.contains(&c.topic) {
            topics.push(c.topic);
        }
    }
    let topic_of: Vec<usize> = items
        .iter()
        .map(|c| topics.iter().position(|&t| t == c.topic).expect("collected above"))
        .collect();
    let total: u64 = items.iter().map(|c| c.clicks).sum();
    let mut topic_clicks = vec![0u64; topics.len()];
    for (c, &m) in items.iter().zip(&topic_of) {
        topic_clicks[m] += c.clicks;
    }
    let per_click_abandonment = abandonment_rate / (1.0 - abandonment_rate);

    let ctr = (0..items.len())
        .map(|k| {
            let m = topic_of[k];
            let at_or_below: u64 = (k..items.len())
                .filter(|&j| topic_of[j] == m)
                .map(|j| items[j].clicks)
                .sum();
            let abandoned = per_click_abandonment * topic_clicks[m] as f64;
            items[k].clicks as f64 / (at_or_below as f64 + abandoned)
        })
        .collect();
    let topic_dist = topic_clicks.iter().map(|&c| c as f64 / total as f64).collect();

    Ok(FittedInstance {
        instance: Instance::new(topic_of, ctr, topic_dist, n_slots)?,
        items: items.iter().map(|c| c.item.to_string()).collect(),
        topics: topics.iter().map(|t| t.to_string()).collect(),
    })
}

/// Synthetic log of `rounds` users shown `list`. Items are named
/// `item<k>` and topics `topic<m>` with one-based numbers. Also returns the
/// number of rounds without a click.
pub fn simulate_click_log<R: Rng + ?Sized>(
    inst: &Instance,
    list: &[usize],
    rounds: u64,
    rng: &mut R,
) -> Result<(Vec<ClickRecord>, u64)> {
    inst.check_items(list)?;
    let mut records = Vec::new();
    let mut abandoned = 0;
    for _ in 0..rounds {
        match inst.simulate_round(list, rng).clicked_slot {
            Some(slot) => {
                let k = list[slot];
                records.push(ClickRecord {
                    item: format!("item{}", k + 1),
                    position: slot as u32 + 1,
                    topic: format!("topic{}", inst.topic_of(k) + 1),
                });
            }
            None => abandoned += 1,
        }
    }
    Ok((records, abandoned))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rec(item: &str, position: u32, topic: &str) -> ClickRecord {
        ClickRecord {
            item: item.into(),
            position,
            topic: topic.into(),
        }
    }

    fn repeated(item: &str, position: u32, topic: &str, n: usize) -> Vec<ClickRecord> {
        vec![rec(item, position, topic); n]
    }

    #[test]
    fn orders_by_mean_position() {
        let mut log = repeated("B", 3, "x", 4);
        log.extend(repeated("A", 1, "x", 4));
        log.push(rec("A", 2, "x"));
        // A: mean 1.2, B: mean 3.0
        assert_eq!(average_displayed_list(&log).unwrap(), vec!["A", "B"]);
        assert_eq!(average_displayed_list(&[rec("Z", 4, "t")]).unwrap(), vec!["Z"]);
        assert!(matches!(average_displayed_list(&[]), Err(Error::EmptyLog)));
    }

    #[test]
    fn position_ties_prefer_more_clicks() {
        let mut log = repeated("a", 2, "x", 1);
        log.extend(repeated("b", 2, "x", 3));
        assert_eq!(average_displayed_list(&log).unwrap(), vec!["b", "a"]);
    }

    #[test]
    fn single_topic_fit_matches_hand_values() {
        let mut log = repeated("A", 1, "t", 60);
        log.extend(repeated("B", 2, "t", 20));
        let fit = fit_instance(&log, 0.2, 2).unwrap();
        assert_eq!(fit.items, vec!["A", "B"]);
        assert_abs_diff_eq!(fit.instance.ctr(0), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.instance.ctr(1), 0.5, epsilon = 1e-12);
        assert_eq!(fit.instance.topic_dist(), &[1.0]);
    }

    #[test]
    fn zero_abandonment_makes_bottom_items_certain() {
        let mut log = repeated("A", 1, "t", 30);
        log.extend(repeated("B", 2, "t", 10));
        log.extend(repeated("C", 3, "u", 7));
        log.extend(repeated("D", 4, "u", 3));
        let fit = fit_instance(&log, 0.0, 2).unwrap();
        assert_eq!(fit.instance.ctr(1), 1.0);
        assert_eq!(fit.instance.ctr(3), 1.0);
        assert_abs_diff_eq!(fit.instance.ctr(0), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.instance.topic_dist()[0], 40.0 / 50.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_errors() {
        let log = repeated("A", 1, "t", 3);
        assert!(matches!(fit_instance(&log, 1.0, 1), Err(Error::AbandonmentRate(_))));
        assert!(matches!(fit_instance(&[], 0.2, 1), Err(Error::EmptyLog)));
        let mut mixed = log.clone();
        mixed.push(rec("A", 1, "u"));
        assert!(fit_instance(&mixed, 0.2, 1).is_err());
    }

    #[test]
    fn fit_ignores_record_order() {
        let mut log = repeated("A", 1, "t", 13);
        log.extend(repeated("B", 3, "u", 5));
        log.extend(repeated("C", 2, "t", 9));
        log.push(rec("B", 1, "u"));
        let forward = fit_instance(&log, 0.2, 2).unwrap();
        log.reverse();
        assert_eq!(fit_instance(&log, 0.2, 2).unwrap(), forward);
    }

    #[test]
    fn more_clicks_never_lower_ctr() {
        let mut log = repeated("A", 1, "t", 20);
        log.extend(repeated("B", 2, "t", 10));
        let before = fit_instance(&log, 0.2, 2).unwrap().instance.ctr(1);
        log.extend(repeated("B", 2, "t", 5));
        let after = fit_instance(&log, 0.2, 2).unwrap().instance.ctr(1);
        assert!(after >= before);
    }

    #[test]
    fn reads_log_and_rejects_malformed_lines() {
        let text = "item_id,position,topic_id\nA,1,t\nB,2,u\n";
        let log = read_click_log(text.as_bytes()).unwrap();
        assert_eq!(log, vec![rec("A", 1, "t"), rec("B", 2, "u")]);
        assert_eq!(read_click_log(write_click_log(&log).as_bytes()).unwrap(), log);
        for bad in [
            "A,1,t\n",
            "item_id,position,topic_id\nA,x,t\n",
            "item_id,position,topic_id\nA,0,t\n",
            "item_id,position,topic_id\nA,1\n",
            "item_id,position,topic_id\n,1,t\n",
        ] {
            assert!(read_click_log(bad.as_bytes()).is_err(), "{bad:?}");
        }
        let err = read_click_log("item_id,position,topic_id\nA,1,t\nB,q,t\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"));
    }
}
