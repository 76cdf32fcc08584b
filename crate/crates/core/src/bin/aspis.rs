use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use aspis::adversary::{byzantine_returns, AttackMode, AttackScenario, DistortionSpec, Selection};
use aspis::analysis::{emit_tables, to_json, write_csv, TableGrid};
use aspis::assignment::{assign_aspis, assign_aspis_plus, assign_baseline, assign_detox, SchemeKind};
use aspis::combinatorics::{build_steiner_triple_system, sample_permutation};
use aspis::detection::{build_agreement_graph, detect_aspis, maximum_cliques, EqualityMode};
use aspis::exec::Execution;
use aspis::harness::{bench_cliques, random_gradients, train, worker_labels, RunConfig};
use aspis::rng::{derive_seed, stream};
use aspis::Error;

#[derive(Parser)]
#[command(name = "aspis", version, about = "Redundant gradient assignment with clique-based Byzantine detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the worker/file assignment as JSON.
    Assign {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scheme: Option<Scheme>,
        #[arg(long = "K")]
        workers: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        /// Iteration whose permutation to apply (design placement only).
        #[arg(long, default_value_t = 0)]
        iteration: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distortion-fraction tables from the closed forms.
    Epsilon {
        #[command(flatten)]
        common: Common,
        #[arg(long = "K")]
        workers: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        /// Inclusive range `a..b` or comma-separated list.
        #[arg(long, default_value = "2..7")]
        q: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One iteration of detection on the subset placement, with a trace.
    DetectDemo {
        #[command(flatten)]
        common: Common,
    },
    /// Train on a synthetic task; writes the trajectory CSV and final model.
    Train {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "model.json")]
        model: PathBuf,
    },
    /// Time maximal-clique enumeration on attack-induced graphs.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long = "K", default_value_t = 100)]
        workers: usize,
        #[arg(long, default_value_t = 5)]
        r: usize,
        #[arg(long, default_value = "5,15,25,35,45")]
        q: String,
        #[arg(long, value_delimiter = ',', default_value = "att1,att2")]
        attack: Vec<Attack>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Aspis,
    AspisPlus,
    Detox,
    Baseline,
}

impl From<Scheme> for SchemeKind {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Aspis => SchemeKind::Aspis,
            Scheme::AspisPlus => SchemeKind::AspisPlus,
            Scheme::Detox => SchemeKind::Detox,
            Scheme::Baseline => SchemeKind::Baseline,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Attack {
    Att1,
    Att2,
}

impl From<Attack> for AttackMode {
    fn from(a: Attack) -> Self {
        match a {
            Attack::Att1 => AttackMode::Att1,
            Attack::Att2 => AttackMode::Att2,
        }
    }
}

impl Common {
    /// The configuration file (or defaults) with the seed override applied,
    /// and whether a file was given.
    fn load(&self) -> anyhow::Result<(RunConfig, bool)> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::InvalidParameter(format!("reading {}: {e}", path.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok((cfg, self.config.is_some()))
    }
}

fn parse_qs(spec: &str) -> anyhow::Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("cannot parse q list {spec:?}; use a..b or a,b,c"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad().into());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad().into())).collect()
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Assign { common, scheme, workers, r, iteration, out } => {
            let (mut cfg, _) = common.load()?;
            cfg.scheme = scheme.map_or(cfg.scheme, Into::into);
            cfg.workers = workers.unwrap_or(cfg.workers);
            cfg.r = r.unwrap_or(cfg.r);
            let assignment = match cfg.scheme {
                SchemeKind::Aspis => assign_aspis(cfg.workers, cfg.r)?,
                SchemeKind::AspisPlus => {
                    let design = build_steiner_triple_system(cfg.workers)?;
                    let perm = sample_permutation(cfg.workers, derive_seed(cfg.seed, stream::PERMUTATION, iteration as u64));
                    assign_aspis_plus(&design, &perm)?
                }
                SchemeKind::Detox => assign_detox(cfg.workers, cfg.r)?,
                SchemeKind::Baseline => assign_baseline(cfg.workers)?,
            };
            emit(&out, &(assignment.to_json() + "\n"))
        }
        Command::Epsilon { common, workers, r, q, format, out } => {
            let (cfg, _) = common.load()?;
            let grid = TableGrid { workers: workers.unwrap_or(cfg.workers), r: r.unwrap_or(cfg.r), qs: parse_qs(&q)? };
            let rows = emit_tables(&grid)?;
            let text = match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&rows, &mut buf)?;
                    String::from_utf8(buf).context("CSV is UTF-8")?
                }
                Format::Json => to_json(&rows) + "\n",
            };
            emit(&out, &text)
        }
        Command::DetectDemo { common } => {
            let (cfg, from_file) = common.load()?;
            let scenarios: Vec<AttackScenario> = if from_file {
                vec![cfg.attack.clone()]
            } else {
                let fixed = Selection::Fixed { workers: vec![0, 1, 2] };
                vec![
                    AttackScenario::new(AttackMode::Att2, 3, DistortionSpec::default()).with_selection(fixed.clone()).with_disagreement(vec![3, 4, 5]),
                    AttackScenario::new(AttackMode::Att1, 3, DistortionSpec::default()).with_selection(fixed),
                ]
            };
            let (k, r) = if from_file { (cfg.workers, cfg.r) } else { (7, 3) };
            let assignment = assign_aspis(k, r)?;
            let truth = random_gradients(assignment.f, 4, cfg.seed, 0);
            for scenario in scenarios {
                let adversaries = aspis::adversary::choose_adversaries(&scenario, k, r, 0, cfg.seed)?;
                let d = if scenario.mode == AttackMode::Att2 {
                    aspis::adversary::disagreement_set(&scenario, k, &adversaries, 0, cfg.seed)?
                } else {
                    Vec::new()
                };
                let table = byzantine_returns(&assignment, &adversaries, &scenario, &d, &truth)?;
                let graph = build_agreement_graph(&assignment, &table, EqualityMode::Exact, Execution::default())?;
                let outcome = detect_aspis(&graph, scenario.q);
                println!("{} (K = {k}, r = {r}, q = {})", scenario.mode.name(), scenario.q);
                println!("  Byzantines: {{{}}}", worker_labels(&adversaries).replace(' ', ","));
                if !d.is_empty() {
                    println!("  disagreement set: {{{}}}", worker_labels(&d).replace(' ', ","));
                }
                let edges: Vec<String> = graph.edges().iter().map(|&(u, v)| format!("U{}-U{}", u + 1, v + 1)).collect();
                println!("  edges ({}): {}", edges.len(), edges.join(" "));
                for c in maximum_cliques(graph.adjacency()) {
                    println!("  maximum clique: {{{}}}", worker_labels(&c).replace(' ', ","));
                }
                if outcome.is_identified() {
                    println!("  result: identified {{{}}}", worker_labels(&outcome.adversaries).replace(' ', ","));
                } else {
                    println!("  result: ambiguous, {} maximum cliques", outcome.max_cliques);
                }
            }
            Ok(())
        }
        Command::Train { common, out, model } => {
            let (cfg, _) = common.load()?;
            let trajectory = train(&cfg)?;
            let mut buf = Vec::new();
            trajectory.write_csv(&mut buf)?;
            emit(&out, &String::from_utf8(buf).context("CSV is UTF-8")?)?;
            write_file(&model, &(trajectory.model_json() + "\n"))
        }
        Command::Bench { common, workers, r, q, attack, out } => {
            let (cfg, from_file) = common.load()?;
            let (workers, r) = if from_file { (cfg.workers, cfg.r) } else { (workers, r) };
            let mut w = csv::Writer::from_writer(Vec::new());
            for &a in &attack {
                for &qi in &parse_qs(&q)? {
                    w.serialize(bench_cliques(workers, r, qi, a.into(), cfg.seed)?)?;
                }
            }
            let bytes = w.into_inner().context("flushing CSV")?;
            emit(&out, &String::from_utf8(bytes)?)
        }
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(err) if err.is_config() => ExitCode::from(2),
                Some(_) => ExitCode::from(3),
                None => ExitCode::from(1),
            }
        }
    }
}
