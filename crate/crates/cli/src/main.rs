//! `ldr`: command-line front end of the diverse-ranking simulator.
//!
//! Exit status is 0 on success, 1 when an input or argument is invalid and 2
//! when the run itself fails (for instance an unwritable output directory).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use ldr_core::harness::{
    geometric_checkpoints, parse_aggregate_csv, run_batch, toy_instance, ExperimentConfig, InstanceSource, RegretMode,
};
use ldr_core::ingest::{fit_instance, read_click_log, DEFAULT_ABANDONMENT};
use ldr_core::oracle::{brute_force_optimal, greedy_optimal_list, ldr_upper_bound_constant, regret_lower_bound};
use ldr_core::policies::PolicySpec;
use ldr_core::report::regret_curve_svg;
use ldr_core::Instance;

#[derive(Debug, Parser)]
#[command(
    name = "ldr",
    version,
    about = "Diverse rankings under a topic-partitioned cascade click model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the optimal list, its reward and the per-slot success rates.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// List length (defaults to the instance's number of slots).
        #[arg(long)]
        length: Option<usize>,
        /// Cross-check the greedy list against exhaustive enumeration.
        #[arg(long)]
        brute_force: bool,
    },
    /// Print the LDR upper-bound constant and the regret lower bound.
    Bounds {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
    },
    /// Run a batch of seeded episodes and write per-run and aggregate CSV.
    Simulate(SimulateArgs),
    /// Write a random instance (round-robin topics, CTRs uniform in [0.2, 1]).
    Generate {
        #[arg(long)]
        items: usize,
        #[arg(long)]
        slots: usize,
        #[arg(long)]
        topics: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the four-item toy instance.
    Toy {
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an instance from a click log (item_id,position,topic_id).
    Fit {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ABANDONMENT)]
        abandonment: f64,
        /// Number of slots (defaults to the deepest clicked position).
        #[arg(long)]
        slots: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw an aggregate CSV as an SVG regret curve.
    Curve {
        #[arg(long)]
        aggregate: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "Cumulative regret")]
        title: String,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Instance file (TOML).
    #[arg(long, required_unless_present = "toy", conflicts_with = "toy")]
    instance: Option<PathBuf>,
    /// Use the built-in toy instance.
    #[arg(long)]
    toy: bool,
    /// Comma-separated: ldr, ldr-randomized, pie-star, rba, static:1,3
    #[arg(long)]
    policies: String,
    /// Rounds per run.
    #[arg(long)]
    horizon: u64,
    /// Runs per policy.
    #[arg(long)]
    runs: usize,
    /// Master seed; every run derives its own seed from it.
    #[arg(long)]
    seed: u64,
    /// pseudo (expected reward gap) or realized (clicks missed).
    #[arg(long, default_value = "pseudo")]
    mode: String,
    /// Number of geometric checkpoints.
    #[arg(long, default_value_t = 50)]
    checkpoints: usize,
    /// Worker threads (0 uses every core). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Also draw `regret.svg`.
    #[arg(long)]
    svg: bool,
    /// Output directory for runs.csv and aggregate.csv.
    #[arg(long)]
    out: PathBuf,
}

/// Marks an error as caused by the user's input.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Invalid(msg.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<ldr_core::Error>() {
            return if matches!(e, ldr_core::Error::Io(_)) { 2 } else { 1 };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn one_line(err: &anyhow::Error) -> String {
    err.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ")
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = read_input(path)?;
    Instance::from_toml_str(&text).with_context(|| format!("{}", path.display()))
}

/// Files written by one command. Nothing touches the disk until `commit`,
/// and a failed commit removes whatever it already wrote.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, String)>,
    created_dir: Option<PathBuf>,
}

impl Outputs {
    fn add(&mut self, path: PathBuf, contents: String) {
        self.files.push((path, contents));
    }

    fn in_dir(dir: &Path) -> anyhow::Result<Self> {
        let mut out = Self::default();
        if !dir.exists() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            out.created_dir = Some(dir.to_path_buf());
        }
        Ok(out)
    }

    fn commit(self) -> anyhow::Result<()> {
        let mut written: Vec<&Path> = Vec::new();
        for (path, contents) in &self.files {
            if let Err(e) = fs::write(path, contents) {
                for done in written {
                    let _ = fs::remove_file(done);
                }
                let _ = fs::remove_file(path);
                if let Some(dir) = &self.created_dir {
                    let _ = fs::remove_dir(dir);
                }
                return Err(anyhow!(e).context(format!("cannot write {}", path.display())));
            }
            written.push(path);
        }
        Ok(())
    }

    fn discard(self) {
        if let Some(dir) = &self.created_dir {
            let _ = fs::remove_dir(dir);
        }
    }
}

fn write_one(path: PathBuf, contents: String) -> anyhow::Result<()> {
    let mut out = Outputs::default();
    out.add(path, contents);
    out.commit()
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Oracle {
            instance,
            length,
            brute_force,
        } => oracle(&load_instance(&instance)?, length, brute_force),
        Command::Bounds { instance, delta } => {
            let inst = load_instance(&instance)?;
            print!("{}", ldr_upper_bound_constant(&inst, delta)?);
            print!("{}", regret_lower_bound(&inst)?);
            Ok(())
        }
        Command::Simulate(args) => simulate(args),
        Command::Generate {
            items,
            slots,
            topics,
            seed,
            out,
        } => {
            let source = InstanceSource::Artificial {
                n_items: items,
                n_slots: slots,
                n_topics: topics,
                seed,
            };
            write_one(out, source.resolve()?.to_toml_string())
        }
        Command::Toy { out } => write_one(out, toy_instance().to_toml_string()),
        Command::Fit {
            log,
            abandonment,
            slots,
            out,
        } => {
            let file = fs::File::open(&log).map_err(|e| invalid(format!("cannot read {}: {e}", log.display())))?;
            let records = read_click_log(file)?;
            let slots = match slots {
                Some(s) => s,
                None => records.iter().map(|r| r.position as usize).max().unwrap_or(1),
            };
            let distinct = {
                let mut ids: Vec<&str> = records.iter().map(|r| r.item.as_str()).collect();
                ids.sort_unstable();
                ids.dedup();
                ids.len()
            };
            let fitted = fit_instance(&records, abandonment, slots.min(distinct.max(1)))?;
            write_one(out, fitted.to_toml_string())
        }
        Command::Curve { aggregate, out, title } => {
            let rows = parse_aggregate_csv(&read_input(&aggregate)?)?;
            write_one(out, regret_curve_svg(&rows, &title))
        }
    }
}

fn oracle(inst: &Instance, length: Option<usize>, brute_force: bool) -> anyhow::Result<()> {
    let length = length.unwrap_or(inst.n_slots());
    let best = greedy_optimal_list(inst, length)?;
    let value = inst.expected_reward(&best)?;
    println!("optimal list: {best}");
    println!("expected reward: {value:.6}");
    for slot in 0..best.len() {
        println!(
            "  slot {}: item {} success rate {:.6}",
            slot + 1,
            best[slot] + 1,
            inst.success_rate(&best, slot)?
        );
    }
    if brute_force {
        let (set, exhaustive) = brute_force_optimal(inst, length)?;
        println!("brute force: set {set} expected reward {exhaustive:.6}");
        if (exhaustive - value).abs() > 1e-12 {
            bail!("greedy reward {value} differs from brute force {exhaustive}");
        }
        println!("greedy matches brute force");
    }
    Ok(())
}

fn parse_policies(text: &str) -> anyhow::Result<Vec<PolicySpec>> {
    // Items of a static list are also comma-separated, so numeric tokens
    // belong to the preceding `static:` entry.
    let mut names: Vec<String> = Vec::new();
    for token in text.split(',').map(str::trim) {
        match names.last_mut() {
            Some(last) if last.starts_with("static:") && token.parse::<usize>().is_ok() => {
                last.push(',');
                last.push_str(token);
            }
            _ => names.push(token.to_string()),
        }
    }
    names
        .iter()
        .map(|n| n.parse::<PolicySpec>().map_err(anyhow::Error::from))
        .collect()
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let source = match &args.instance {
        Some(path) => InstanceSource::Given(load_instance(path)?),
        None => InstanceSource::Toy,
    };
    let cfg = ExperimentConfig {
        source,
        policies: parse_policies(&args.policies)?,
        horizon: args.horizon,
        runs: args.runs,
        master_seed: args.seed,
        mode: args.mode.parse::<RegretMode>()?,
        checkpoints: Some(geometric_checkpoints(args.horizon, args.checkpoints)),
    };
    cfg.validate()?;
    let inst = cfg.source.resolve()?;
    for policy in &cfg.policies {
        if let PolicySpec::Static(items) = policy {
            inst.check_list(items)?;
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("cannot start worker threads")?;
    let outputs = Outputs::in_dir(&args.out)?;
    let batch = match pool.install(|| run_batch(&cfg)) {
        Ok(batch) => batch,
        Err(e) => {
            outputs.discard();
            return Err(e.into());
        }
    };
    let mut outputs = outputs;
    outputs.add(args.out.join("runs.csv"), batch.runs_csv());
    outputs.add(args.out.join("aggregate.csv"), batch.aggregate_csv());
    if args.svg {
        outputs.add(
            args.out.join("regret.svg"),
            regret_curve_svg(&batch.aggregate, "Cumulative regret"),
        );
    }
    outputs.commit()?;
    for policy in &cfg.policies {
        let name = policy.to_string();
        let finals: Vec<f64> = batch.runs_of(&name).map(|t| t.final_regret()).collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        println!("{name}: mean regret at T = {} is {mean:.3}", cfg.horizon);
    }
    Ok(())
}
