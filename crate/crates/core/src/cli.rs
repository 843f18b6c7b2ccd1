//! The `qfilter` command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 infeasible construction,
//! 4 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::boolean::{
    approximate_povm_window, boolean_problem, classical_query_count, closed_form_overlap,
    fk_closed_form, povm_advantage, Advantage, PriorMode, QueryCounts, Variant,
};
use crate::ensemble::{gram_matrix, min_hermitian_eigenvalue, FilteringProblem};
use crate::io::{format_sig, load_problem, sweep_grid, write_sweep_csv, EnsembleFile};
use crate::neumark::{outer, scheme_for, Outcome, SchemeKind};
use crate::simulation::{aggregate_failure, analytic_failure, simulate, SimulationStats};
use crate::strategies::{failure_curve, optimal_filtering, Regime, StrategyReport};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Gram matrices of more states than this are checked through the `D×D`
/// frame operator, which has the same nonzero spectrum.
const DIRECT_GRAM_LIMIT: usize = 512;
const GRAM_PSD_TOL: f64 = 1e-9;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_)
        | Error::InvalidState(_)
        | Error::ResourceLimit(_)
        | Error::Io { .. } => EXIT_INVALID,
        Error::Infeasible(_)
        | Error::InfeasibleDependency { .. }
        | Error::DegenerateDecomposition(_) => EXIT_INFEASIBLE,
        Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qfilter",
    version,
    about = "Optimal unambiguous quantum state filtering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Sqm1,
    Sqm2,
    Povm,
}

impl From<Strategy> for SchemeKind {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Sqm1 => SchemeKind::Sqm1,
            Strategy::Sqm2 => SchemeKind::Sqm2,
            Strategy::Povm => SchemeKind::Povm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorModeArg {
    EqualStatesBasis,
    EqualStatesFull,
    EqualSets,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Basis,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Failure probabilities of every strategy for an ensemble file.
    Strategies {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Failure probabilities versus average overlap, as CSV.
    Sweep {
        #[arg(long)]
        eta1: f64,
        #[arg(long)]
        f: f64,
        #[arg(long, default_value_t = 0.0)]
        smin: f64,
        #[arg(long)]
        smax: f64,
        #[arg(long, default_value_t = 121)]
        steps: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter the biased pair W_k out of balanced Boolean functions.
    Boolean {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, value_enum, default_value = "equal-states-basis")]
        prior_mode: PriorModeArg,
        /// Target prior for `--prior-mode custom`.
        #[arg(long)]
        eta1: Option<f64>,
        #[arg(long, value_enum, default_value = "basis")]
        variant: VariantArg,
        /// Also write the constructed ensemble file.
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Monte Carlo simulation of a measurement scheme.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        strategy: Strategy,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Target failure probability for the POVM; optimal when omitted.
        #[arg(long)]
        q1: Option<f64>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(path: &str) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_string(),
        source,
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Strategies {
            input,
            format,
            output,
        } => {
            let problem = load_problem(&input)?;
            let report = checked_report(&problem)?;
            let text = render_strategies(&problem, &report, format);
            match output {
                Some(path) => {
                    std::fs::write(&path, text).map_err(io_err(&path.display().to_string()))
                }
                None => out.write_all(text.as_bytes()).map_err(io_err("<stdout>")),
            }
        }
        Command::Sweep {
            eta1,
            f,
            smin,
            smax,
            steps,
            out: path,
        } => {
            let grid = sweep_grid(smin, smax, steps)?;
            let rows = failure_curve(eta1, f, &grid)?;
            match path {
                Some(path) => {
                    let name = path.display().to_string();
                    let file = File::create(&path).map_err(io_err(&name))?;
                    let mut w = BufWriter::new(file);
                    write_sweep_csv(&rows, &mut w).map_err(io_err(&name))?;
                    w.flush().map_err(io_err(&name))
                }
                None => write_sweep_csv(&rows, out).map_err(io_err("<stdout>")),
            }
        }
        Command::Boolean {
            n,
            k,
            prior_mode,
            eta1,
            variant,
            export,
            format,
        } => {
            let mode = match (prior_mode, eta1) {
                (PriorModeArg::Custom, Some(x)) => PriorMode::Custom(x),
                (PriorModeArg::Custom, None) => {
                    return Err(Error::invalid("--prior-mode custom requires --eta1"))
                }
                (_, Some(_)) => {
                    return Err(Error::invalid("--eta1 only applies to --prior-mode custom"))
                }
                (PriorModeArg::EqualStatesBasis, None) => PriorMode::EqualStatesBasis,
                (PriorModeArg::EqualStatesFull, None) => PriorMode::EqualStatesFull,
                (PriorModeArg::EqualSets, None) => PriorMode::EqualSets,
            };
            let variant = match variant {
                VariantArg::Basis => Variant::Basis,
                VariantArg::Full => Variant::Full,
            };
            let problem = boolean_problem(n, k, mode, variant)?;
            let report = checked_report(&problem)?;
            let summary = BooleanSummary::new(n, k, variant, &problem, report)?;
            if let Some(path) = export {
                EnsembleFile::from_problem(&problem).write(&path)?;
            }
            out.write_all(summary.render(format).as_bytes())
                .map_err(io_err("<stdout>"))
        }
        Command::Simulate {
            input,
            strategy,
            trials,
            seed,
            q1,
            format,
        } => {
            if trials == 0 {
                return Err(Error::invalid("--trials must be at least 1"));
            }
            let problem = load_problem(&input)?;
            if q1.is_some() && strategy != Strategy::Povm {
                return Err(Error::invalid("--q1 only applies to --strategy povm"));
            }
            let scheme = scheme_for(&problem, strategy.into(), q1)?;
            let stats = simulate(&scheme, &problem, trials, seed)?;
            let text = render_simulation(&problem, &stats, scheme.warnings(), format);
            out.write_all(text.as_bytes()).map_err(io_err("<stdout>"))
        }
    }
}

/// Optimal report, with the ensemble's Gram matrix and every reported value
/// checked for numerical sanity.
fn checked_report(problem: &FilteringProblem) -> Result<StrategyReport> {
    let min_eig = if problem.len() <= DIRECT_GRAM_LIMIT {
        min_hermitian_eigenvalue(&gram_matrix(problem.states())?)
    } else {
        let d = problem.dim();
        let mut frame = nalgebra::DMatrix::zeros(d, d);
        for s in problem.states() {
            frame += outer(s.amplitudes(), s.amplitudes());
        }
        min_hermitian_eigenvalue(&frame)
    };
    if min_eig.is_nan() || min_eig < -GRAM_PSD_TOL {
        return Err(Error::Numerical(format!(
            "Gram matrix has eigenvalue {min_eig:e} below -{GRAM_PSD_TOL:e}"
        )));
    }
    let report = optimal_filtering(problem)?;
    let scalars = [
        report.q_sqm1,
        report.q_sqm2,
        report.optimal_q,
        report.optimal_q1,
        report.overlap_s,
    ];
    if scalars
        .iter()
        .chain(&report.per_state_failure)
        .any(|x| !x.is_finite())
    {
        return Err(Error::Numerical(
            "non-finite value in strategy report".into(),
        ));
    }
    Ok(report)
}

#[derive(Serialize)]
struct StrategiesJson<'a> {
    states: usize,
    dimension: usize,
    eta1: f64,
    #[serde(flatten)]
    report: &'a StrategyReport,
}

fn render_strategies(
    problem: &FilteringProblem,
    report: &StrategyReport,
    format: Format,
) -> String {
    match format {
        Format::Json => {
            let json = StrategiesJson {
                states: problem.len(),
                dimension: problem.dim(),
                eta1: problem.target_prior(),
                report,
            };
            serde_json::to_string_pretty(&json).expect("report serializes") + "\n"
        }
        Format::Table | Format::Csv => {
            let mut rows = vec![
                ("states", problem.len().to_string()),
                ("dimension", problem.dim().to_string()),
                ("eta1", format_sig(problem.target_prior(), 12)),
            ];
            rows.extend(report_rows(report));
            if format == Format::Csv {
                let mut s = String::from("key,value\n");
                for (k, v) in rows {
                    s.push_str(&format!("{k},{v}\n"));
                }
                s
            } else {
                table(&rows)
            }
        }
    }
}

fn report_rows(report: &StrategyReport) -> Vec<(&'static str, String)> {
    vec![
        ("overlap_S", format_sig(report.overlap_s, 12)),
        ("parallel_norm_f", format_sig(report.parallel_norm_f, 12)),
        ("q_sqm1", format_sig(report.q_sqm1, 12)),
        ("q_sqm2", format_sig(report.q_sqm2, 12)),
        (
            "q_povm",
            report
                .q_povm
                .map_or_else(|| "-".to_string(), |q| format_sig(q, 12)),
        ),
        ("regime", report.regime.to_string()),
        ("optimal_q1", format_sig(report.optimal_q1, 12)),
        ("optimal_Q", format_sig(report.optimal_q, 12)),
        ("average_success", format_sig(report.average_success, 12)),
    ]
}

fn table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

#[derive(Serialize)]
struct ApproximateWindow {
    lower: f64,
    upper: f64,
    d_eta1: f64,
    inside: bool,
}

#[derive(Serialize)]
struct BooleanSummary {
    n: u32,
    k: u32,
    dimension: usize,
    variant: Variant,
    complement_size: usize,
    eta1: f64,
    f_k: f64,
    overlap_s_closed_form: f64,
    report: StrategyReport,
    povm_advantage: Advantage,
    classical_queries: QueryCounts,
    approximate_povm_window: ApproximateWindow,
}

impl BooleanSummary {
    fn new(
        n: u32,
        k: u32,
        variant: Variant,
        problem: &FilteringProblem,
        report: StrategyReport,
    ) -> Result<Self> {
        let eta1 = problem.target_prior();
        let d = problem.dim();
        let (lower, upper) = approximate_povm_window(k);
        let d_eta1 = d as f64 * eta1;
        Ok(Self {
            n,
            k,
            dimension: d,
            variant,
            complement_size: problem.len() - 1,
            eta1,
            f_k: fk_closed_form(k),
            overlap_s_closed_form: closed_form_overlap(n, k, eta1),
            report,
            povm_advantage: povm_advantage(n, k)?,
            classical_queries: classical_query_count(n, k)?,
            approximate_povm_window: ApproximateWindow {
                lower,
                upper,
                d_eta1,
                inside: (lower..=upper).contains(&d_eta1),
            },
        })
    }

    fn render(&self, format: Format) -> String {
        if format == Format::Json {
            return serde_json::to_string_pretty(self).expect("summary serializes") + "\n";
        }
        let mut rows = vec![
            ("n", self.n.to_string()),
            ("k", self.k.to_string()),
            ("dimension", self.dimension.to_string()),
            ("variant", format!("{:?}", self.variant).to_lowercase()),
            ("complement_size", self.complement_size.to_string()),
            ("eta1", format_sig(self.eta1, 12)),
            ("f_k", format_sig(self.f_k, 12)),
        ];
        rows.extend(report_rows(&self.report));
        rows.extend([
            (
                "povm_ratio_exact",
                format_sig(self.povm_advantage.exact_ratio, 12),
            ),
            (
                "povm_ratio_approx",
                format_sig(self.povm_advantage.approx_ratio, 12),
            ),
            (
                "classical_dj",
                self.classical_queries.balanced_vs_constant.to_string(),
            ),
            (
                "classical_wk",
                self.classical_queries.wk_vs_balanced.to_string(),
            ),
            (
                "approx_window",
                format!(
                    "{} <= D*eta1 = {} <= {} ({})",
                    format_sig(self.approximate_povm_window.lower, 12),
                    format_sig(self.approximate_povm_window.d_eta1, 12),
                    format_sig(self.approximate_povm_window.upper, 12),
                    if self.approximate_povm_window.inside {
                        "inside"
                    } else {
                        "outside"
                    }
                ),
            ),
        ]);
        if format == Format::Csv {
            let mut s = String::from("key,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{k},\"{v}\"\n"));
            }
            s
        } else {
            table(&rows)
        }
    }
}

#[derive(Serialize)]
struct StateRow {
    state: usize,
    prior: f64,
    is_target: u64,
    is_complement: u64,
    fail: u64,
    fail_rate: f64,
    analytic_fail_rate: f64,
    z_fail: f64,
}

#[derive(Serialize)]
struct SimulationJson<'a> {
    scheme: &'static str,
    seed: u64,
    trials_per_state: u64,
    states: Vec<StateRow>,
    z_scores: Vec<[f64; 3]>,
    empirical_q: f64,
    analytic_q: f64,
    misidentifications: u64,
    warnings: &'a [String],
}

fn render_simulation(
    problem: &FilteringProblem,
    stats: &SimulationStats,
    warnings: &[String],
    format: Format,
) -> String {
    let rows: Vec<StateRow> = (0..stats.counts.len())
        .map(|i| StateRow {
            state: i,
            prior: problem.priors()[i],
            is_target: stats.counts[i][Outcome::IsTarget.index()],
            is_complement: stats.counts[i][Outcome::IsComplement.index()],
            fail: stats.counts[i][Outcome::Fail.index()],
            fail_rate: stats.empirical_rate(i, Outcome::Fail),
            analytic_fail_rate: stats.analytic_rate(i, Outcome::Fail),
            z_fail: stats.z_score(i, Outcome::Fail),
        })
        .collect();
    let empirical_q = aggregate_failure(stats, problem.priors());
    let analytic_q = analytic_failure(stats, problem.priors());
    match format {
        Format::Json => {
            let json = SimulationJson {
                scheme: stats.scheme_kind.as_str(),
                seed: stats.seed,
                trials_per_state: stats.trials_per_state,
                states: rows,
                z_scores: stats.z_scores(),
                empirical_q,
                analytic_q,
                misidentifications: stats.misidentifications(),
                warnings,
            };
            serde_json::to_string_pretty(&json).expect("stats serialize") + "\n"
        }
        Format::Csv => {
            let mut s = String::from(
                "state,prior,is_target,is_complement,fail,fail_rate,analytic_fail_rate,z_fail\n",
            );
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.state,
                    format_sig(r.prior, 12),
                    r.is_target,
                    r.is_complement,
                    r.fail,
                    format_sig(r.fail_rate, 12),
                    format_sig(r.analytic_fail_rate, 12),
                    format_sig(r.z_fail, 6)
                ));
            }
            s
        }
        Format::Table => {
            let mut s = format!(
                "scheme {}  seed {}  trials/state {}\n",
                stats.scheme_kind.as_str(),
                stats.seed,
                stats.trials_per_state
            );
            for w in warnings {
                s.push_str(&format!("warning: {w}\n"));
            }
            s.push_str(&format!(
                "{:>6} {:>10} {:>10} {:>10} {:>10} {:>12} {:>12} {:>8}\n",
                "state", "prior", "target", "complement", "fail", "fail_rate", "analytic", "z"
            ));
            // large ensembles: show the head only
            for r in rows.iter().take(64) {
                s.push_str(&format!(
                    "{:>6} {:>10.6} {:>10} {:>10} {:>10} {:>12.8} {:>12.8} {:>8.3}\n",
                    r.state,
                    r.prior,
                    r.is_target,
                    r.is_complement,
                    r.fail,
                    r.fail_rate,
                    r.analytic_fail_rate,
                    r.z_fail
                ));
            }
            if rows.len() > 64 {
                s.push_str(&format!("... {} more states\n", rows.len() - 64));
            }
            s.push_str(&format!(
                "empirical Q {}  analytic Q {}  misidentifications {}\n",
                format_sig(empirical_q, 12),
                format_sig(analytic_q, 12),
                stats.misidentifications()
            ));
            s
        }
    }
}

/// Regime label as printed by the CLI.
pub fn regime_label(r: Regime) -> &'static str {
    r.as_str()
}
