//! Seeded episodes, batches of runs and their aggregation, instance
//! generators and the PIE* misordering condition.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ClickFeedback, Instance, RankedList};
use crate::oracle::optimal_list;
use crate::policies::{ActionTag, ItemLayout, Policy, PolicySpec};

/// Default number of points of the geometric checkpoint grid.
pub const DEFAULT_CHECKPOINTS: usize = 50;

/// Stable 64-bit seed for `(master, label, index)`.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegretMode {
    /// Accumulates `mu(u*) - mu(u(n))`.
    #[default]
    Pseudo,
    /// `n mu(u*)` minus the clicks actually obtained.
    Realized,
}

impl FromStr for RegretMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pseudo" => Ok(Self::Pseudo),
            "realized" => Ok(Self::Realized),
            _ => Err(Error::Config(format!("unknown regret mode '{s}'"))),
        }
    }
}

impl fmt::Display for RegretMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pseudo => "pseudo",
            Self::Realized => "realized",
        })
    }
}

/// Roughly geometric grid of round counts in `[1, horizon]`, always ending at
/// `horizon`.
pub fn geometric_checkpoints(horizon: u64, points: usize) -> Vec<u64> {
    if horizon == 0 {
        return Vec::new();
    }
    let points = points.max(2);
    let top = (horizon as f64).ln();
    let mut grid: Vec<u64> = (0..points)
        .map(|i| (top * i as f64 / (points - 1) as f64).exp().round() as u64)
        .map(|c| c.clamp(1, horizon))
        .collect();
    grid.push(horizon);
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Cumulative regret of one run sampled at checkpoints (rounds completed).
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrajectory {
    pub policy: String,
    pub run: usize,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub cumulative_regret: Vec<f64>,
    /// List played in the last round.
    pub final_list: Option<RankedList>,
}

impl RegretTrajectory {
    pub fn final_regret(&self) -> f64 {
        *self.cumulative_regret.last().unwrap_or(&0.0)
    }

    pub fn at(&self, checkpoint: u64) -> Option<f64> {
        self.checkpoints
            .iter()
            .position(|&c| c == checkpoint)
            .map(|i| self.cumulative_regret[i])
    }
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub list: RankedList,
    pub tag: ActionTag,
    pub feedback: ClickFeedback,
    pub cumulative_regret: f64,
}

/// Round-by-round driver of one policy against one instance.
pub struct Episode<'a> {
    inst: &'a Instance,
    mode: RegretMode,
    best_reward: f64,
    rng: ChaCha8Rng,
    round: u64,
    pseudo: f64,
    clicks: u64,
}

impl<'a> Episode<'a> {
    /// Resets `policy` from the episode seed; environment and policy draw
    /// from independent streams derived from it.
    pub fn new(inst: &'a Instance, policy: &mut dyn Policy, seed: u64, mode: RegretMode) -> Self {
        policy.reset(derive_seed(seed, "policy", 0));
        let best = optimal_list(inst);
        Self {
            inst,
            mode,
            best_reward: inst.expected_reward_unchecked(&best),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, "environment", 0)),
            round: 0,
            pseudo: 0.0,
            clicks: 0,
        }
    }

    pub fn rounds_played(&self) -> u64 {
        self.round
    }

    pub fn cumulative_regret(&self) -> f64 {
        match self.mode {
            RegretMode::Pseudo => self.pseudo,
            RegretMode::Realized => self.round as f64 * self.best_reward - self.clicks as f64,
        }
    }

    pub fn step(&mut self, policy: &mut dyn Policy) -> Result<RoundRecord> {
        let (list, tag) = policy.select(self.round);
        self.inst.check_list(&list)?;
        let feedback = self.inst.simulate_round(&list, &mut self.rng);
        policy.observe(&list, tag, feedback.clicked_slot)?;
        self.pseudo += self.best_reward - self.inst.expected_reward_unchecked(&list);
        self.clicks += u64::from(feedback.clicked_slot.is_some());
        self.round += 1;
        Ok(RoundRecord {
            round: self.round - 1,
            list,
            tag,
            feedback,
            cumulative_regret: self.cumulative_regret(),
        })
    }
}

/// Plays `horizon` rounds and records the regret at each checkpoint.
pub fn run_episode(
    inst: &Instance,
    policy: &mut dyn Policy,
    horizon: u64,
    seed: u64,
    mode: RegretMode,
    checkpoints: &[u64],
) -> Result<RegretTrajectory> {
    check_checkpoints(checkpoints, horizon)?;
    let mut episode = Episode::new(inst, policy, seed, mode);
    let mut values = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    let mut final_list = None;
    while episode.rounds_played() < horizon {
        final_list = Some(episode.step(policy)?.list);
        while next.peek().is_some_and(|&&c| c == episode.rounds_played()) {
            values.push(episode.cumulative_regret());
            next.next();
        }
    }
    Ok(RegretTrajectory {
        policy: policy.name(),
        run: 0,
        seed,
        checkpoints: checkpoints.to_vec(),
        cumulative_regret: values,
        final_list,
    })
}

fn check_checkpoints(checkpoints: &[u64], horizon: u64) -> Result<()> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be strictly increasing".into()));
    }
    if checkpoints.iter().any(|&c| c == 0 || c > horizon) {
        return Err(Error::Config(format!("checkpoints must lie in [1, {horizon}]")));
    }
    Ok(())
}

/// Where the instance of an experiment comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Given(Instance),
    Artificial {
        n_items: usize,
        n_slots: usize,
        n_topics: usize,
        seed: u64,
    },
    Toy,
}

impl InstanceSource {
    pub fn resolve(&self) -> Result<Instance> {
        match self {
            Self::Given(inst) => Ok(inst.clone()),
            Self::Artificial {
                n_items,
                n_slots,
                n_topics,
                seed,
            } => generate_artificial_instance(*n_items, *n_slots, *n_topics, &mut ChaCha8Rng::seed_from_u64(*seed)),
            Self::Toy => Ok(toy_instance()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: InstanceSource,
    pub policies: Vec<PolicySpec>,
    pub horizon: u64,
    pub runs: usize,
    pub master_seed: u64,
    pub mode: RegretMode,
    /// Defaults to a geometric grid of [`DEFAULT_CHECKPOINTS`] points.
    pub checkpoints: Option<Vec<u64>>,
}

impl ExperimentConfig {
    pub fn checkpoint_grid(&self) -> Vec<u64> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| geometric_checkpoints(self.horizon, DEFAULT_CHECKPOINTS))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("at least one run is required".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("no policy given".into()));
        }
        check_checkpoints(&self.checkpoint_grid(), self.horizon)
    }
}

/// Mean and 5%/95% nearest-rank quantiles of one policy at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub policy: String,
    pub checkpoint: u64,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub instance: Instance,
    /// Ordered by policy (configuration order), then run.
    pub trajectories: Vec<RegretTrajectory>,
    pub aggregate: Vec<AggregateRow>,
}

impl BatchResult {
    pub fn runs_of<'s>(&'s self, policy: &'s str) -> impl Iterator<Item = &'s RegretTrajectory> + 's {
        self.trajectories.iter().filter(move |t| t.policy == policy)
    }

    pub fn mean_curve(&self, policy: &str) -> Vec<(u64, f64)> {
        self.aggregate
            .iter()
            .filter(|r| r.policy == policy)
            .map(|r| (r.checkpoint, r.mean))
            .collect()
    }

    pub fn runs_csv(&self) -> String {
        let mut out = String::from("policy,run,checkpoint,cumulative_regret\n");
        for t in &self.trajectories {
            for (c, v) in t.checkpoints.iter().zip(&t.cumulative_regret) {
                out += &format!("{},{},{},{}\n", t.policy, t.run, c, v);
            }
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        aggregate_csv(&self.aggregate)
    }
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("policy,checkpoint,mean,q05,q95\n");
    for r in rows {
        out += &format!("{},{},{},{},{}\n", r.policy, r.checkpoint, r.mean, r.q05, r.q95);
    }
    out
}

pub fn parse_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["policy", "checkpoint", "mean", "q05", "q95"] {
        return Err(Error::Parse(
            "aggregate CSV needs columns policy,checkpoint,mean,q05,q95".into(),
        ));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number '{}'", line + 2, &record[i])))
        };
        rows.push(AggregateRow {
            policy: record[0].to_string(),
            checkpoint: field(1)? as u64,
            mean: field(2)?,
            q05: field(3)?,
            q95: field(4)?,
        });
    }
    Ok(rows)
}

/// Nearest-rank empirical quantile of sorted values.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Aggregates runs of each policy, in run order, at every checkpoint.
pub fn aggregate(trajectories: &[RegretTrajectory]) -> Vec<AggregateRow> {
    let mut policies: Vec<&str> = Vec::new();
    for t in trajectories {
        if !policies.contains(&t.policy.as_str()) {
            policies.push(&t.policy);
        }
    }
    let mut rows = Vec::new();
    for policy in policies {
        let mut runs: Vec<&RegretTrajectory> = trajectories.iter().filter(|t| t.policy == policy).collect();
        runs.sort_by_key(|t| t.run);
        for (i, &checkpoint) in runs[0].checkpoints.iter().enumerate() {
            let values: Vec<f64> = runs.iter().map(|t| t.cumulative_regret[i]).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let mut sorted = values;
            sorted.sort_by(f64::total_cmp);
            rows.push(AggregateRow {
                policy: policy.to_string(),
                checkpoint,
                mean,
                q05: nearest_rank(&sorted, 0.05),
                q95: nearest_rank(&sorted, 0.95),
            });
        }
    }
    rows
}

/// Runs every `(policy, run)` episode of the configuration.
///
/// Run `r` of policy `p` is seeded from `(master_seed, p, r)`, so results do
/// not depend on how episodes are scheduled.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchResult> {
    cfg.validate()?;
    let inst = cfg.source.resolve()?;
    let layout = ItemLayout::from(&inst);
    let checkpoints = cfg.checkpoint_grid();
    let jobs: Vec<(&PolicySpec, usize)> = cfg
        .policies
        .iter()
        .flat_map(|p| (0..cfg.runs).map(move |r| (p, r)))
        .collect();
    let run_job = |&(spec, run): &(&PolicySpec, usize)| -> Result<RegretTrajectory> {
        let name = spec.to_string();
        let seed = derive_seed(cfg.master_seed, &name, run as u64);
        let mut policy = spec.build(&layout, seed)?;
        let mut trajectory = run_episode(&inst, policy.as_mut(), cfg.horizon, seed, cfg.mode, &checkpoints)?;
        trajectory.policy = name;
        trajectory.run = run;
        Ok(trajectory)
    };
    #[cfg(feature = "parallel")]
    let trajectories: Vec<RegretTrajectory> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run_job).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let trajectories: Vec<RegretTrajectory> = jobs.iter().map(run_job).collect::<Result<_>>()?;
    let aggregate = aggregate(&trajectories);
    Ok(BatchResult {
        instance: inst,
        trajectories,
        aggregate,
    })
}

/// `(R(T) - R(T/2)) / (R(T/2) - R(T/4))` on a curve sampled at `T/4`,
/// `T/2` and `T`. Tends to 2 for linear growth and to 1 for logarithmic
/// growth.
pub fn increment_ratio(curve: &[(u64, f64)], horizon: u64) -> Result<f64> {
    let at = |c: u64| {
        curve
            .iter()
            .find(|(x, _)| *x == c)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Config(format!("curve has no checkpoint at {c}")))
    };
    let (quarter, half, full) = (at(horizon / 4)?, at(horizon / 2)?, at(horizon)?);
    Ok((full - half) / (half - quarter))
}

/// Random instance: topics assigned round-robin, CTRs uniform in
/// `[0.2, 1]`, uniform topic distribution.
pub fn generate_artificial_instance<R: Rng + ?Sized>(
    n_items: usize,
    n_slots: usize,
    n_topics: usize,
    rng: &mut R,
) -> Result<Instance> {
    if n_topics == 0 {
        return Err(Error::Shape("at least one topic is required".into()));
    }
    let topic_of = (0..n_items).map(|k| k % n_topics).collect();
    let ctr = (0..n_items).map(|_| rng.gen_range(0.2..=1.0)).collect();
    let topic_dist = vec![1.0 / n_topics as f64; n_topics];
    Instance::new(topic_of, ctr, topic_dist, n_slots)
}

/// Four items in two equally likely topics, `L = 2`, CTRs 0.9 and 0.8 in
/// the first topic and 0.35 and 0.3 in the second.
pub fn toy_instance() -> Instance {
    Instance::new(vec![0, 0, 1, 1], vec![0.9, 0.8, 0.35, 0.3], vec![0.5, 0.5], 2).expect("toy instance is valid")
}

/// Whether PIE* can settle on the wrong order of same-topic items `better`
/// and `worse` with positive probability:
/// `phi theta_j > phi (1 - theta_j) theta_i / (1 - phi theta_j)`.
pub fn pie_star_misorder_condition(inst: &Instance, better: usize, worse: usize) -> Result<bool> {
    for k in [better, worse] {
        if k >= inst.n_items() {
            return Err(Error::UnknownItem(k));
        }
    }
    let topic = inst.topic_of(better);
    if inst.topic_of(worse) != topic {
        return Err(Error::Precondition("items belong to different topics".into()));
    }
    let (ti, tj) = (inst.ctr(better), inst.ctr(worse));
    if ti <= tj {
        return Err(Error::Precondition(format!(
            "first item must have the larger CTR ({ti} <= {tj})"
        )));
    }
    let phi = inst.topic_dist()[topic];
    Ok(misorder_inequality(phi, ti, tj))
}

/// The misordering inequality on raw parameters.
pub fn misorder_inequality(phi: f64, better_ctr: f64, worse_ctr: f64) -> bool {
    phi * worse_ctr > phi * (1.0 - worse_ctr) * better_ctr / (1.0 - phi * worse_ctr)
}
