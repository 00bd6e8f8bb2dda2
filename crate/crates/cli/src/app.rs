//! The `ctbn` command-line driver.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use ctbn_core::baselines::{default_step, exact_posterior_grid, likelihood_weighting, LwConfig, OracleConfig};
use ctbn_core::ctbn::CtbnSpec;
use ctbn_core::gibbs::{run_chains, Evidence, GibbsConfig, Scan};
use ctbn_core::markov::LambdaPolicy;
use ctbn_core::mcmc::{ChangeTimeVariant, DimensionVariant, MoveKind, MoveSchedule, TimeScope};
use ctbn_core::Error;

use crate::examples::packaged;
use crate::model::{ModelError, ModelFile};
use crate::paths::PathsFile;
use crate::result::{weight_rows, AcceptanceSummary, ResultFile, RunMetadata, TOP_WEIGHTS};
use crate::simulate::simulate_evidence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Mcmc,
    Lw,
    Oracle,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Mcmc => "mcmc",
            Algorithm::Lw => "lw",
            Algorithm::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ScanArg {
    #[default]
    Systematic,
    Random,
}

/// Posterior inference for continuous time Bayesian networks.
#[derive(Debug, Clone, Parser)]
#[command(name = "ctbn", version)]
pub struct Args {
    /// Model document, or the name of a packaged model
    /// (example1, example2, lotka_volterra).
    #[arg(long)]
    pub model: String,
    /// Evidence document. Without it, evidence is simulated from the
    /// model's simulation block.
    #[arg(long)]
    pub evidence: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Algorithm::Mcmc)]
    pub algorithm: Algorithm,
    /// Sweeps for mcmc (burn-in included), samples for lw.
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    /// Defaults to a tenth of the sweeps.
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Uniformization rate as a multiple of the largest exit rate.
    #[arg(long, default_value_t = 2.5)]
    pub lambda_mult: f64,
    /// Number of equispaced grid points.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Comma-separated moves, each optionally followed by `*N`:
    /// change_time, change_time_full, change_time_regime,
    /// change_time_full_regime, change_state, random_point,
    /// random_point_bridge, virtual_point.
    #[arg(long)]
    pub moves: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub scan: ScanArg,
    /// Result document; written to standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Posterior rows as comma-separated values.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Multiplies the repetitions of every scheduled move.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Forward samples drawn to pick the starting trajectory.
    #[arg(long, default_value_t = 1)]
    pub init_candidates: usize,
    /// Seed for simulated evidence; defaults to --seed.
    #[arg(long)]
    pub simulate_seed: Option<u64>,
    /// Writes the simulated evidence.
    #[arg(long)]
    pub save_evidence: Option<PathBuf>,
    /// Writes the simulated paths of the hidden nodes.
    #[arg(long)]
    pub save_truth: Option<PathBuf>,
    /// Oracle step; defaults to a thousandth of the interval.
    #[arg(long)]
    pub oracle_step: Option<f64>,
}

/// A failed invocation with its exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Unreadable or invalid input; exit status 1.
    Input(String),
    /// The computation itself failed; exit status 2.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

fn input(context: &str) -> impl Fn(ModelError) -> Failure + '_ {
    move |e| Failure::Input(format!("{context}: {e}"))
}

fn runtime(e: Error) -> Failure {
    match e {
        Error::InvalidConfig(_) | Error::InvalidEvidence(_) | Error::InvalidSpec(_) => Failure::Input(e.to_string()),
        _ => Failure::Runtime(e.to_string()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

/// Parses a `--moves` list.
pub fn parse_moves(list: &str) -> Result<MoveSchedule, Failure> {
    let mut entries = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, reps) = match item.split_once('*') {
            Some((name, reps)) => {
                let reps = reps
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::Input(format!("bad repetition count in move {item}")))?;
                (name.trim(), reps)
            }
            None => (item, 1),
        };
        let time = |variant, scope| MoveKind::ChangeTime { variant, scope };
        let kind = match name {
            "change_time" => time(ChangeTimeVariant::SinglePoint, TimeScope::Global),
            "change_time_full" => time(ChangeTimeVariant::FullResample, TimeScope::Global),
            "change_time_regime" => time(ChangeTimeVariant::SinglePoint, TimeScope::PerRegime),
            "change_time_full_regime" => time(ChangeTimeVariant::FullResample, TimeScope::PerRegime),
            "change_state" => MoveKind::ChangeState,
            "random_point" => MoveKind::Dimension(DimensionVariant::RandomPoint { bridge: false }),
            "random_point_bridge" => MoveKind::Dimension(DimensionVariant::RandomPoint { bridge: true }),
            "virtual_point" => MoveKind::Dimension(DimensionVariant::VirtualPoint),
            other => return Err(Failure::Input(format!("unknown move {other}"))),
        };
        entries.push((kind, reps));
    }
    MoveSchedule::new(entries).map_err(|e| Failure::Input(e.to_string()))
}

/// Loads a packaged model by name or a model document from disk.
pub fn load_model(arg: &str) -> Result<(ModelFile, CtbnSpec<f64>), Failure> {
    let text = match packaged(arg) {
        Some(text) => text.to_string(),
        None => read(Path::new(arg))?,
    };
    let file = ModelFile::from_json(&text).map_err(input(arg))?;
    let spec = file.to_spec().map_err(input(arg))?;
    Ok((file, spec))
}

fn evidence_for(args: &Args, file: &ModelFile, spec: &CtbnSpec<f64>) -> Result<Evidence<f64>, Failure> {
    if let Some(path) = &args.evidence {
        let context = path.display().to_string();
        let doc = PathsFile::from_json(&read(path)?).map_err(input(&context))?;
        return doc.to_evidence(spec).map_err(input(&context));
    }
    let sim = file
        .simulation
        .as_ref()
        .ok_or_else(|| Failure::Input("no --evidence given and the model has no simulation block".into()))?;
    let observed = sim
        .observed
        .iter()
        .map(|name| {
            spec.node_index(name)
                .ok_or_else(|| Failure::Input(format!("simulation.observed: unknown node {name}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let seed = args.simulate_seed.unwrap_or(args.seed);
    let simulated = simulate_evidence(spec, &observed, sim.t_min, sim.t_max, seed).map_err(runtime)?;
    if let Some(path) = &args.save_evidence {
        write(path, &simulated.evidence_file(spec).to_json())?;
    }
    if let Some(path) = &args.save_truth {
        write(path, &simulated.truth_file(spec).to_json())?;
    }
    Ok(simulated.evidence)
}

/// Output of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub result: ResultFile,
    pub summary: String,
}

/// Runs the algorithm selected by `args`.
pub fn execute(args: &Args) -> Result<Report, Failure> {
    let (file, spec) = load_model(&args.model)?;
    let evidence = evidence_for(args, &file, &spec)?;
    let start = Instant::now();
    let mut metadata = RunMetadata {
        algorithm: args.algorithm.name().into(),
        model: file.name.clone().unwrap_or_else(|| args.model.clone()),
        seed: args.seed,
        iterations: args.iters,
        burn_in: 0,
        lambda_mult: args.lambda_mult,
        chains: 1,
        grid: args.grid,
        acceptance: None,
        ess: None,
        wall_seconds: 0.0,
    };
    let (mut result, summary) = match args.algorithm {
        Algorithm::Mcmc => {
            let schedule = match &args.moves {
                Some(list) => parse_moves(list)?,
                None => MoveSchedule::default(),
            };
            let config = GibbsConfig {
                scan: match args.scan {
                    ScanArg::Systematic => Scan::Systematic,
                    ScanArg::Random => Scan::Random,
                },
                schedule: schedule.scaled(args.reps),
                iterations: args.iters,
                burn_in: args.burnin,
                seed: args.seed,
                lambda: LambdaPolicy {
                    multiplier: args.lambda_mult,
                    uniform: false,
                },
                grid_points: args.grid,
                init_candidates: args.init_candidates,
                ..GibbsConfig::default()
            };
            config.validate().map_err(runtime)?;
            let estimate = run_chains(&spec, &evidence, &config, args.chains).map_err(runtime)?;
            let acceptance = AcceptanceSummary::from_stats(&estimate.diagnostics.moves);
            let mut summary = format!(
                "mcmc: {} sweeps x {} chain(s), acceptance {}",
                args.iters,
                args.chains.max(1),
                rate(acceptance.overall)
            );
            for (name, m) in &acceptance.moves {
                summary += &format!(", {name} {}", rate(m.rate));
            }
            metadata.burn_in = config.burn_in();
            metadata.chains = args.chains.max(1);
            metadata.acceptance = Some(acceptance);
            (ResultFile::new(&spec, &estimate, metadata), summary)
        }
        Algorithm::Lw => {
            let config = LwConfig {
                grid_points: args.grid,
                ..LwConfig::new(args.iters, args.seed)
            };
            let lw = likelihood_weighting(&spec, &evidence, &config).map_err(runtime)?;
            let d = &lw.diagnostics;
            let summary = format!(
                "lw: {} samples, ESS {:.3}, top-{TOP_WEIGHTS} mass {:.3}",
                args.iters,
                d.ess,
                d.top_k_mass(TOP_WEIGHTS)
            );
            metadata.ess = Some(d.ess);
            let mut result = ResultFile::new(&spec, &lw.estimate, metadata);
            result.weights = weight_rows(d, TOP_WEIGHTS);
            (result, summary)
        }
        Algorithm::Oracle => {
            let (t_min, t_max) = evidence.interval();
            let step = args.oracle_step.unwrap_or_else(|| default_step(t_min, t_max));
            if !(step > 0.0) {
                return Err(Failure::Input(format!("oracle step {step} must be positive")));
            }
            let estimate = exact_posterior_grid(&spec, &evidence, args.grid, step, &OracleConfig::default())
                .map_err(runtime)?;
            metadata.iterations = 0;
            let summary = format!("oracle: exact marginals on {} grid points, step {step}", args.grid);
            (ResultFile::new(&spec, &estimate, metadata), summary)
        }
    };
    result.metadata.wall_seconds = start.elapsed().as_secs_f64();
    Ok(Report { result, summary })
}

fn rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".into(), |r| format!("{r:.3}"))
}

/// Entry point: parses `args`, runs, writes the outputs and returns the
/// process exit status.
pub fn cli_main<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(args) => args,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args).and_then(|report| emit(&args, &report)) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}

fn emit(args: &Args, report: &Report) -> Result<(), Failure> {
    let json = report.result.to_json();
    if let Some(path) = &args.csv {
        write(path, &report.result.to_csv())?;
    }
    match &args.output {
        Some(path) => {
            write(path, &json)?;
            println!("{}", report.summary);
        }
        None => {
            print!("{json}");
            eprintln!("{}", report.summary);
        }
    }
    Ok(())
}
