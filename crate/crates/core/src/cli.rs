//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 enumeration budget
//! exceeded, 4 no feasible mapping, 5 oracle validation failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel_model::capacity_std_dev;
use crate::exec::Exec;
use crate::mapper::{
    enumerate_pareto, heuristic_map, CandidateSolution, EnumerateOptions, HeuristicOptions,
    MapperError, Weights, DEFAULT_ENUMERATION_BUDGET, DEFAULT_MOVE_BUDGET,
};
use crate::metrics::{ChannelSets, Environment, MappingMetrics};
use crate::oracle::{
    bernoulli_sigma, sample_handover_chain, sample_mean_capacity, sample_metrics,
    simulate_channel_occupancy, OracleConfig, OracleEstimate,
};
use crate::scenario::{Mapping, Scenario};
use crate::sweep::{run_sweep, Preset, SweepBase, SweepError, SweepParam, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_VALIDATION: i32 = 5;

/// Width of the acceptance window, in standard errors.
const ORACLE_SIGMAS: f64 = 3.0;
const CTMC_BATCHES: usize = 100;
const SEED_SPREAD: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Parser)]
#[command(name = "svnmap", version, about = "Analytic metrics, mapping and validation for secondary virtual networks")]
pub struct Cli {
    /// Output format (sweeps default to csv, everything else to table).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 2)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exhaustive,
    Heuristic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-SVN and layer metrics of a mapping.
    Metrics { scenario: PathBuf, mapping: PathBuf },
    /// Search for good mappings.
    Map {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "heuristic")]
        mode: Mode,
        /// w_h,w_b,w_u for handover, blocking and utilization.
        #[arg(long, default_value = "1,1,1")]
        weights: String,
        /// Largest number of assignments the exhaustive search may visit.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u128,
        /// Neighbour evaluations allowed to the local search.
        #[arg(long, default_value_t = DEFAULT_MOVE_BUDGET)]
        moves: usize,
        /// Also write the best mapping (first front member) as JSON.
        #[arg(long)]
        save_mapping: Option<PathBuf>,
    },
    /// One-parameter sweep of a single SVN's metrics.
    Sweep(SweepArgs),
    /// Compare every analytic quantity with a Monte Carlo estimate.
    Oracle {
        scenario: PathBuf,
        mapping: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Simulated time for the channel occupancy checks, in seconds.
        #[arg(long, default_value_t = 1e4)]
        horizon: f64,
        /// Adds this offset to every analytic value (exercises the FAIL path).
        #[arg(long, hide = true)]
        corrupt_analytic: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Built-in study: fig2, fig3 or fig4.
    #[arg(long, conflicts_with_all = ["scenario", "param", "mapping"])]
    pub preset: Option<String>,
    /// Scenario supplying the channels and the SVN request.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Restrict the channel set to the SVN's entry in this mapping.
    #[arg(long, requires = "scenario")]
    pub mapping: Option<PathBuf>,
    /// rho, channels or blocking.
    #[arg(long, requires = "scenario")]
    pub param: Option<String>,
    #[arg(long)]
    pub start: Option<f64>,
    #[arg(long)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// SVN to sweep (defaults to the first one).
    #[arg(long)]
    pub svn: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Budget(String),
    Infeasible(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Budget(m) | CliError::Infeasible(m) => m,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

/// A rectangular report with optional leading comment lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn render(&self, format: Format) -> String {
        let mut s = String::new();
        match format {
            Format::Csv => {
                for c in &self.comments {
                    let _ = writeln!(s, "# {c}");
                }
                for line in std::iter::once(&self.header).chain(&self.rows) {
                    let cells: Vec<String> = line.iter().map(|c| csv_cell(c)).collect();
                    let _ = writeln!(s, "{}", cells.join(","));
                }
            }
            Format::Table => {
                for c in &self.comments {
                    let _ = writeln!(s, "{c}");
                }
                let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for row in &self.rows {
                    for (w, cell) in widths.iter_mut().zip(row) {
                        *w = (*w).max(cell.len());
                    }
                }
                for line in std::iter::once(&self.header).chain(&self.rows) {
                    let cells: Vec<String> = line
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:<w$}"))
                        .collect();
                    let _ = writeln!(s, "{}", cells.join("  ").trim_end());
                }
            }
        }
        s
    }
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

/// Twelve significant digits, shortest form (like C's `%.12g`).
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        format!("{}e{exp}", trim_fraction(mantissa))
    } else {
        let decimals = (11 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn parse_weights(s: &str) -> Result<Weights, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Usage(format!("--weights expects w_h,w_b,w_u (got {s:?})"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut w = [0.0; 3];
    for (slot, p) in w.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| bad())?;
    }
    Ok(Weights::new(w[0], w[1], w[2]))
}

fn load_env(path: &Path) -> Result<Environment, CliError> {
    let scenario = Scenario::from_path(path).map_err(input)?;
    Environment::new(scenario).map_err(input)
}

fn load_mapping(env: &Environment, path: &Path) -> Result<(Mapping, Vec<Vec<usize>>), CliError> {
    let mapping = Mapping::from_path(path).map_err(input)?;
    let sets = env.resolve(&mapping).map_err(input)?;
    Ok((mapping, sets))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli, stderr) {
        Ok((report, format, code)) => {
            let text = report.render(format);
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &text) {
                    let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                    return EXIT_INPUT;
                }
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

fn execute(cli: &Cli, stderr: &mut dyn Write) -> Result<(Report, Format, i32), CliError> {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let table_default = cli.format.unwrap_or(Format::Table);
    match &cli.command {
        Command::Metrics { scenario, mapping } => {
            let env = load_env(scenario)?;
            let (_, sets) = load_mapping(&env, mapping)?;
            warn_shared(&env, &sets, stderr);
            let m = env.evaluate(&sets);
            Ok((metrics_report(&m, table_default), table_default, EXIT_OK))
        }
        Command::Map {
            scenario,
            mode,
            weights,
            budget,
            moves,
            save_mapping,
        } => {
            let weights = parse_weights(weights)?;
            let env = load_env(scenario)?;
            let (report, best) = match mode {
                Mode::Exhaustive => map_exhaustive(&env, weights, *budget, exec)?,
                Mode::Heuristic => {
                    let opts = HeuristicOptions {
                        weights,
                        move_budget: *moves,
                        exec,
                    };
                    let sol = heuristic_map(&env, &opts).map_err(mapper_error)?;
                    let report = solutions_report(std::slice::from_ref(&sol), weights);
                    if !sol.feasible {
                        for v in &sol.violations {
                            let _ = writeln!(
                                stderr,
                                "violated: SVN {} {} (margin {})",
                                v.svn_id,
                                v.constraint,
                                fmt_num(v.margin)
                            );
                        }
                        let _ = write!(stderr, "{}", report.render(table_default));
                        return Err(CliError::Infeasible("no feasible mapping".into()));
                    }
                    (report, sol)
                }
            };
            if let Some(path) = save_mapping {
                let json = serde_json::to_string_pretty(&best.mapping).expect("mapping serializes");
                std::fs::write(path, json + "\n").map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok((report, table_default, EXIT_OK))
        }
        Command::Sweep(args) => {
            let (spec, comments) = sweep_spec(args)?;
            let out = run_sweep(&spec, exec).map_err(sweep_error)?;
            for (value, reason) in &out.skipped {
                let _ = writeln!(stderr, "warning: skipped {}={}: {reason}", spec.param, fmt_num(*value));
            }
            let mut report = Report::new(&[
                match spec.param {
                    SweepParam::Blocking => "imposed_blocking",
                    other => other.name(),
                },
                "collision",
                "blocking",
                "utilization",
                "su_utilization",
                "handover_attempt",
                "handover",
                "channels_per_su",
            ]);
            report.comments = comments;
            for row in &out.rows {
                let m = &row.metrics;
                report.rows.push(
                    [
                        row.value,
                        m.collision_prob,
                        m.blocking_prob,
                        m.joint_utilization,
                        m.su_utilization,
                        m.handover_attempt_prob,
                        m.handover_prob,
                        m.channels_per_su,
                    ]
                    .iter()
                    .map(|&x| fmt_num(x))
                    .collect(),
                );
            }
            Ok((report, cli.format.unwrap_or(Format::Csv), EXIT_OK))
        }
        Command::Oracle {
            scenario,
            mapping,
            samples,
            horizon,
            corrupt_analytic,
        } => {
            if *samples == 0 {
                return Err(CliError::Usage("--samples must be positive".into()));
            }
            if !(horizon.is_finite() && *horizon > 0.0) {
                return Err(CliError::Usage("--horizon must be positive".into()));
            }
            let env = load_env(scenario)?;
            let (_, sets) = load_mapping(&env, mapping)?;
            warn_shared(&env, &sets, stderr);
            let cfg = OracleConfig::new(*samples, cli.seed).with_exec(exec);
            let report = oracle_report(&env, &sets, &cfg, *horizon, corrupt_analytic.unwrap_or(0.0));
            let failed = report.rows.iter().filter(|r| r[5] == "FAIL").count();
            let code = if failed > 0 {
                let _ = writeln!(stderr, "oracle validation failed: {failed} of {} checks outside the window", report.rows.len());
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            Ok((report, table_default, code))
        }
    }
}

fn mapper_error(e: MapperError) -> CliError {
    match e {
        MapperError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        MapperError::InvalidWeights(_) => CliError::Usage(e.to_string()),
        MapperError::Mapping(_) => CliError::Input(e.to_string()),
    }
}

fn sweep_error(e: SweepError) -> CliError {
    match e {
        SweepError::Capacity(_) => CliError::Input(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

fn warn_shared(env: &Environment, sets: &[Vec<usize>], stderr: &mut dyn Write) {
    let mut holders = vec![Vec::new(); env.n_channels()];
    for (l, set) in sets.iter().enumerate() {
        for &c in set {
            holders[c].push(env.scenario().svn_requests[l].svn_id.as_str());
        }
    }
    for (c, h) in holders.iter().enumerate() {
        if h.len() > 1 {
            let _ = writeln!(
                stderr,
                "warning: channel {} is held by several SVNs ({})",
                env.scenario().channels[c].id,
                h.join(", ")
            );
        }
    }
}

fn metrics_report(m: &MappingMetrics, format: Format) -> Report {
    let mut cols = vec![
        "svn_id",
        "collision",
        "blocking",
        "utilization",
        "handover_attempt",
        "handover",
    ];
    let detailed = format == Format::Table;
    if detailed {
        cols.extend(["channels", "chsu", "allocated_bps", "requested_bps"]);
    }
    let mut report = Report::new(&cols);
    for s in &m.per_svn {
        let mut row = vec![s.svn_id.clone()];
        row.extend(
            [
                s.collision_prob,
                s.blocking_prob,
                s.joint_utilization,
                s.handover_attempt_prob,
                s.handover_prob,
            ]
            .iter()
            .map(|&x| fmt_num(x)),
        );
        if detailed {
            row.push(s.n_channels.to_string());
            row.extend(
                [s.channels_per_su, s.allocated_rate_bps, s.requested_rate_bps]
                    .iter()
                    .map(|&x| fmt_num(x)),
            );
        }
        report.rows.push(row);
    }
    let l = &m.layer;
    let mut row = vec!["__layer__".to_string()];
    row.extend(
        [
            l.mean_collision,
            l.mean_blocking,
            l.mean_utilization,
            l.mean_handover_attempt,
            l.mean_handover,
        ]
        .iter()
        .map(|&x| fmt_num(x)),
    );
    if detailed {
        row.extend(std::iter::repeat_n(String::new(), 4));
    }
    report.rows.push(row);
    report
}

fn describe_mapping(m: &Mapping) -> String {
    m.assignments
        .iter()
        .map(|(svn, chans)| format!("{svn}={}", chans.join(" ")))
        .collect::<Vec<_>>()
        .join(";")
}

fn solutions_report(solutions: &[CandidateSolution], weights: Weights) -> Report {
    let mut report = Report::new(&[
        "rank",
        "handover",
        "blocking",
        "utilization",
        "score",
        "feasible",
        "mapping",
    ]);
    for (i, s) in solutions.iter().enumerate() {
        let o = &s.objectives;
        report.rows.push(vec![
            (i + 1).to_string(),
            fmt_num(o.mean_handover),
            fmt_num(o.mean_blocking),
            fmt_num(o.mean_utilization),
            fmt_num(weights.scalarize(o)),
            s.feasible.to_string(),
            describe_mapping(&s.mapping),
        ]);
    }
    report
}

fn map_exhaustive(
    env: &Environment,
    weights: Weights,
    budget: u128,
    exec: Exec,
) -> Result<(Report, CandidateSolution), CliError> {
    let front = enumerate_pareto(env, &EnumerateOptions { budget, exec }).map_err(mapper_error)?;
    if front.is_empty() {
        return Err(CliError::Infeasible("no feasible mapping".into()));
    }
    let mut report = solutions_report(&front.members, weights);
    report.comments.push(format!("Pareto front: {} mappings", front.len()));
    let best = front
        .members
        .iter()
        .min_by(|a, b| {
            weights
                .scalarize(&a.objectives)
                .total_cmp(&weights.scalarize(&b.objectives))
        })
        .expect("nonempty front")
        .clone();
    Ok((report, best))
}

fn num(flag: &str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("custom sweeps need --{flag}")))
}

fn sweep_spec(args: &SweepArgs) -> Result<(SweepSpec, Vec<String>), CliError> {
    if let Some(name) = &args.preset {
        let preset: Preset = name.parse().map_err(sweep_error)?;
        let mut spec = SweepSpec::preset(preset).map_err(sweep_error)?;
        if let Some(v) = args.start {
            spec.start = v;
        }
        if let Some(v) = args.stop {
            spec.stop = v;
        }
        if let Some(v) = args.steps {
            spec.steps = v;
        }
        let comments = sweep_comments(&format!("preset {name}"), &spec);
        return Ok((spec, comments));
    }
    let Some(path) = &args.scenario else {
        return Err(CliError::Usage("sweep needs --preset or --scenario".into()));
    };
    let param: SweepParam = args
        .param
        .as_deref()
        .ok_or_else(|| CliError::Usage("custom sweeps need --param".into()))?
        .parse()
        .map_err(sweep_error)?;
    let env = load_env(path)?;
    let svn = match &args.svn {
        Some(id) => env
            .scenario()
            .svn_index(id)
            .ok_or_else(|| CliError::Input(format!("unknown SVN {id:?}")))?,
        None => 0,
    };
    let indices: Vec<usize> = match &args.mapping {
        Some(m) => load_mapping(&env, m)?.1[svn].clone(),
        None => (0..env.n_channels()).collect(),
    };
    if indices.is_empty() {
        return Err(CliError::Input("the swept SVN holds no channels".into()));
    }
    let channels = env.channel_set(&indices);
    let base = SweepBase {
        template: channels[0].clone(),
        channels,
        request: env.scenario().svn_requests[svn].clone(),
        chsu: None,
    };
    let spec = SweepSpec {
        param,
        start: num("start", args.start)?,
        stop: num("stop", args.stop)?,
        steps: args.steps.ok_or_else(|| CliError::Usage("custom sweeps need --steps".into()))?,
        base,
    };
    let comments = sweep_comments(&format!("scenario {}", path.display()), &spec);
    Ok((spec, comments))
}

fn sweep_comments(source: &str, spec: &SweepSpec) -> Vec<String> {
    let b = &spec.base;
    let r = &b.request;
    let t = &b.template;
    let mut c = vec![
        format!(
            "{source}: {} from {} to {} in {} steps",
            spec.param,
            fmt_num(spec.start),
            fmt_num(spec.stop),
            spec.steps
        ),
        format!(
            "svn {}: su_arrival_rate={} su_service_rate={} mean_demand_bps={}",
            r.svn_id,
            fmt_num(r.su_arrival_rate),
            fmt_num(r.su_service_rate),
            fmt_num(r.mean_demand_bps)
        ),
    ];
    if spec.param == SweepParam::Channels {
        c.push(format!(
            "channel template {}: rho={} mean_capacity_bps={}",
            t.channel_id,
            fmt_num(t.rho),
            fmt_num(t.mean_capacity_bps)
        ));
    } else {
        c.push(format!(
            "channels={} rho=[{}]",
            b.channels.len(),
            b.channels.iter().map(|ch| fmt_num(ch.rho)).collect::<Vec<_>>().join(" ")
        ));
    }
    c.push(match b.chsu {
        Some(v) => format!("chsu={} (fixed)", fmt_num(v)),
        None => "chsu derived from demand and effective rates".into(),
    });
    c
}

fn check_row(
    report: &mut Report,
    subject: &str,
    metric: &str,
    analytic: f64,
    est: Option<(OracleEstimate, f64)>,
) {
    let (estimate, se, verdict) = match est {
        Some((e, min_sigma)) => (
            fmt_num(e.value),
            fmt_num(e.std_error),
            if e.agrees_with(analytic, ORACLE_SIGMAS, min_sigma) {
                "PASS"
            } else {
                "FAIL"
            },
        ),
        None => ("-".into(), "-".into(), "SKIP"),
    };
    report.rows.push(vec![
        subject.to_string(),
        metric.to_string(),
        fmt_num(analytic),
        estimate,
        se,
        verdict.to_string(),
    ]);
}

fn oracle_report(
    env: &Environment,
    sets: &ChannelSets,
    cfg: &OracleConfig,
    horizon: f64,
    offset: f64,
) -> Report {
    let mut report = Report::new(&["subject", "metric", "analytic", "estimate", "std_error", "verdict"]);
    report.comments.push(format!(
        "samples={} seed={} window={}sigma horizon_s={}",
        cfg.samples,
        cfg.seed,
        ORACLE_SIGMAS,
        fmt_num(horizon)
    ));
    let contexts = env.contexts(sets);
    let metrics = env.evaluate(sets);
    let handover = sample_handover_chain(&contexts, cfg);
    let n = cfg.samples;
    for (l, ctx) in contexts.iter().enumerate() {
        let m = &metrics.per_svn[l];
        let local = OracleConfig {
            seed: cfg.seed ^ (l as u64 + 1).wrapping_mul(SEED_SPREAD),
            ..*cfg
        };
        let counts = (!sets[l].is_empty()).then(|| {
            sample_metrics(&env.channel_set(&sets[l]), ctx.su_mean, ctx.chsu, &local)
        });
        let pc = m.collision_prob + offset;
        let pb = m.blocking_prob + offset;
        check_row(&mut report, &m.svn_id, "collision", pc, counts.map(|c| (c.collision, bernoulli_sigma(pc, n))));
        check_row(&mut report, &m.svn_id, "blocking", pb, counts.map(|c| (c.blocking, bernoulli_sigma(pb, n))));
        let pa = m.handover_attempt_prob + offset;
        let ph = m.handover_prob + offset;
        let h = handover[l];
        check_row(&mut report, &m.svn_id, "handover_attempt", pa, Some((h.attempt, bernoulli_sigma(pa, n))));
        check_row(&mut report, &m.svn_id, "handover", ph, Some((h.handover, bernoulli_sigma(pa, n))));
    }
    for (c, (channel, profile)) in env.scenario().channels.iter().zip(env.profiles()).enumerate() {
        let subject = format!("channel:{}", channel.id);
        let seed = cfg.seed ^ (c as u64 + 1).wrapping_mul(SEED_SPREAD).rotate_left(17);
        let cap = sample_mean_capacity(channel, &OracleConfig { seed, ..*cfg });
        let null_sigma = capacity_std_dev(channel).map_or(0.0, |sd| sd / (n as f64).sqrt());
        check_row(&mut report, &subject, "mean_capacity", profile.mean_capacity_bps * (1.0 + offset), Some((cap, null_sigma)));
        let busy = simulate_channel_occupancy(channel, horizon, seed, CTMC_BATCHES);
        check_row(&mut report, &subject, "busy_fraction", profile.rho + offset, Some((busy, 0.0)));
    }
    let passed = report.rows.iter().filter(|r| r[5] == "PASS").count();
    let checked = report.rows.iter().filter(|r| r[5] != "SKIP").count();
    report.comments.push(format!("{passed}/{checked} checks passed"));
    report
}
