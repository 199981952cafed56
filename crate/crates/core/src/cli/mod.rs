//! Command-line front end: reads weight and function documents, dispatches to
//! the analysis modules and writes CSV, JSON and SVG artifacts.

pub mod emit;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::degeneracy::{detect_intervals, DegeneracyDecomposition, DEFAULT_MAX_INTERVALS};
use crate::error::{Error, Result};
use crate::function::{FunctionSpec, Interval, PiecewiseFunction, QuadratureConfig, Side, Weight};
use crate::hat::{build_hat, check_hat_properties, HatWeight, PropertyReport};
use crate::muckenhoupt::{a1_constant, local_growth_check, nested_pairs, BallFamily, GrowthReport};
use crate::pairing::pairing_report;
use crate::poincare::{batch_verify, random_corpus};
use crate::relaxation::{counterexample_diagnostics, lsc_probe, recovery_schedule, RecoveryStep, DEFAULT_SCHEDULE};
use emit::{emit_plot, real, write_csv, write_json, Series};

/// Points sampled for profiles and plots.
const PLOT_POINTS: usize = 800;
const SLACK: f64 = 1.05;

#[derive(Debug, Parser)]
#[command(name = "degrelax", version, about = "Degenerate weights, auxiliary weights and relaxation diagnostics")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Weight document (JSON).
    #[arg(long, global = true)]
    pub weight: Option<PathBuf>,
    /// Function document (JSON); repeat for several.
    #[arg(long = "function", global = true)]
    pub functions: Vec<PathBuf>,
    /// Bisection resolution for zero detection.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub resolution: f64,
    /// Quadrature panels per smooth segment.
    #[arg(long, global = true, default_value_t = 64)]
    pub panels: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Nondegenerate intervals of the weight.
    Analyze,
    /// Auxiliary weight profile, property checks and overlay.
    Hat,
    /// Overlay of the weight and its auxiliary weight.
    Plot,
    /// Pairing of the first function with the second as test function.
    Pair,
    /// Poincaré margins on the given functions or a seeded random corpus.
    Poincare {
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Recovery sequence diagnostics for one function.
    Relax,
    /// Block-weight diagnostics for `1/x³`.
    Counterexample {
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 20, 50, 100, 200])]
        blocks: Vec<usize>,
    },
    /// Empirical A₁ constant and optional growth check.
    A1 {
        #[arg(long = "q-exponent")]
        q_exponent: Option<f64>,
    },
}

/// Exit status for an error: 2 for unusable input, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::Io(_)
        | Error::BadParameters(_)
        | Error::InvalidInterval { .. }
        | Error::InvalidFunction(_)
        | Error::OutOfDomain { .. }
        | Error::NegativeWeight { .. }
        | Error::MissingDerivative
        | Error::NotPositive => 2,
        _ => 1,
    }
}

/// Runs a command and returns the process exit status.
pub fn run(cfg: &RunConfig) -> i32 {
    match dispatch(cfg) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Ctx<'a> {
    c: &'a Common,
    q: QuadratureConfig,
}

impl Ctx<'_> {
    fn weight(&self) -> Result<Weight> {
        let p = self.c.weight.as_ref().ok_or_else(|| Error::Parse("--weight is required".into()))?;
        load(p)?.to_weight()
    }

    fn functions(&self, at_least: usize) -> Result<Vec<PiecewiseFunction>> {
        if self.c.functions.len() < at_least {
            return Err(Error::Parse(format!("at least {at_least} --function document(s) required")));
        }
        self.c.functions.iter().map(|p| load(p)?.to_function()).collect()
    }

    fn decompose(&self, w: &Weight) -> Result<DegeneracyDecomposition> {
        detect_intervals(w, w.domain(), self.c.resolution, DEFAULT_MAX_INTERVALS)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.c.out.join(name)
    }
}

fn load(p: &Path) -> Result<FunctionSpec> {
    FunctionSpec::load(p).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", p.display()))),
        Error::Parse(m) => Error::Parse(format!("{}: {m}", p.display())),
        e => e,
    })
}

fn dispatch(cfg: &RunConfig) -> Result<bool> {
    if cfg.common.panels < 2 {
        return Err(Error::BadParameters("--panels must be at least 2".into()));
    }
    std::fs::create_dir_all(&cfg.common.out)?;
    let ctx = Ctx { c: &cfg.common, q: QuadratureConfig::default().with_panels(cfg.common.panels) };
    match &cfg.command {
        Command::Analyze => analyze(&ctx),
        Command::Hat => hat(&ctx),
        Command::Plot => {
            let w = ctx.weight()?;
            let hw = build_hat(&w, &ctx.decompose(&w)?)?;
            plot(&w, &hw, &ctx.path("figure.svg"))?;
            Ok(true)
        }
        Command::Pair => pair(&ctx),
        Command::Poincare { count } => poincare(&ctx, *count),
        Command::Relax => relax(&ctx),
        Command::Counterexample { beta, gamma, blocks } => counterexample(&ctx, *beta, *gamma, blocks),
        Command::A1 { q_exponent } => a1(&ctx, *q_exponent),
    }
}

#[derive(Serialize)]
struct AnalyzeSummary {
    n_w: Option<usize>,
    truncated: bool,
    intervals: usize,
    zero_set_points: Vec<f64>,
    zero_segments: Vec<(f64, f64)>,
}

fn analyze(ctx: &Ctx) -> Result<bool> {
    let w = ctx.weight()?;
    let dec = ctx.decompose(&w)?;
    let rows: Vec<Vec<String>> = dec.intervals.iter().enumerate().map(|(k, i)| vec![k.to_string(), real(i.lo()), real(i.hi())]).collect();
    write_csv(&ctx.path("intervals.csv"), &["index", "a", "b"], &rows)?;
    let summary = AnalyzeSummary {
        n_w: dec.n_w,
        truncated: dec.truncated,
        intervals: dec.len(),
        zero_set_points: dec.zero_set_points.clone(),
        zero_segments: dec.zero_segments.clone(),
    };
    write_json(&ctx.path("analyze.json"), &summary)?;
    Ok(true)
}

fn profile(w: &Weight, hw: &HatWeight) -> Vec<(f64, f64, f64)> {
    let d = w.domain();
    (0..=PLOT_POINTS)
        .map(|k| {
            let x = if k == PLOT_POINTS { d.hi() } else { d.lo() + d.len() * k as f64 / PLOT_POINTS as f64 };
            let side = if k == PLOT_POINTS { Side::Left } else { Side::Right };
            (x, w.eval_side(x, side), hw.value(x))
        })
        .collect()
}

fn plot(w: &Weight, hw: &HatWeight, path: &Path) -> Result<()> {
    let p = profile(w, hw);
    let series = [
        Series::new("w", p.iter().map(|r| (r.0, r.1)).collect()),
        Series::new("hat w", p.iter().map(|r| (r.0, r.2)).collect()),
    ];
    emit_plot("weight and auxiliary weight", &series, path)?;
    Ok(())
}

#[derive(Serialize)]
struct HatSummary {
    exact: bool,
    intervals: usize,
    properties: PropertyReport,
}

fn hat(ctx: &Ctx) -> Result<bool> {
    let w = ctx.weight()?;
    let hw = build_hat(&w, &ctx.decompose(&w)?)?;
    let rows: Vec<Vec<String>> = profile(&w, &hw).into_iter().map(|(x, a, b)| vec![real(x), real(a), real(b)]).collect();
    write_csv(&ctx.path("hat.csv"), &["x", "w", "w_hat"], &rows)?;
    plot(&w, &hw, &ctx.path("hat.svg"))?;
    let properties = check_hat_properties(&hw, &w);
    let pass = properties.pass;
    write_json(&ctx.path("hat.json"), &HatSummary { exact: hw.is_exact(), intervals: hw.intervals().len(), properties })?;
    Ok(pass)
}

fn pair(ctx: &Ctx) -> Result<bool> {
    let w = ctx.weight()?;
    let f = ctx.functions(2)?;
    let r = pairing_report(&w, &f[0], &f[1], &ctx.q)?;
    write_json(&ctx.path("pairing.json"), &r)?;
    Ok(true)
}

#[derive(Serialize)]
struct PoincareSummary {
    count: usize,
    checked: usize,
    failures: Vec<usize>,
    not_in_domain: Vec<usize>,
    min_margin: Option<f64>,
    pass: bool,
}

fn poincare(ctx: &Ctx, count: usize) -> Result<bool> {
    let w = ctx.weight()?;
    let dec = ctx.decompose(&w)?;
    let hw = build_hat(&w, &dec)?;
    let corpus = if ctx.c.functions.is_empty() { random_corpus(&dec, count, ctx.c.seed)? } else { ctx.functions(1)? };
    let batch = batch_verify(&w, &hw, &dec, &corpus, &ctx.q);
    let rows: Vec<Vec<String>> = batch
        .reports
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.as_ref().map(|r| vec![k.to_string(), real(r.lhs), real(r.rhs), real(r.margin)]))
        .collect();
    write_csv(&ctx.path("poincare.csv"), &["id", "lhs", "rhs", "margin"], &rows)?;
    let margins = batch.reports.iter().flatten().map(|r| r.margin);
    let summary = PoincareSummary {
        count: corpus.len(),
        checked: rows.len(),
        min_margin: margins.reduce(f64::min),
        pass: batch.failures.is_empty(),
        failures: batch.failures,
        not_in_domain: batch.not_in_domain,
    };
    let pass = summary.pass;
    write_json(&ctx.path("poincare.json"), &summary)?;
    Ok(pass)
}

#[derive(Serialize)]
struct RelaxVerdict {
    relaxed: f64,
    steps: Vec<RecoveryStep>,
    l1_nonincreasing: bool,
    gap_nonincreasing: bool,
    final_gap_small: bool,
    lsc_tail_min: Option<f64>,
    lsc_pass: bool,
    pass: bool,
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|p| p[1] <= SLACK * p[0])
}

fn relax(ctx: &Ctx) -> Result<bool> {
    let w = ctx.weight()?;
    let dec = ctx.decompose(&w)?;
    let hw = build_hat(&w, &dec)?;
    let u = ctx.functions(1)?.swap_remove(0);
    let steps = recovery_schedule(&w, &hw, &dec, &u, &DEFAULT_SCHEDULE, &ctx.q)?;
    let rows: Vec<Vec<String>> = steps.iter().map(|s| vec![s.h.to_string(), real(s.l1_hat_error), real(s.energy), real(s.energy_gap)]).collect();
    write_csv(&ctx.path("relax.csv"), &["h", "l1_hat_error", "energy", "energy_gap"], &rows)?;
    let relaxed = steps[0].relaxed;
    let family: Vec<PiecewiseFunction> = steps.iter().map(|s| s.u_h.clone()).collect();
    let lsc = lsc_probe(&w, &hw, &dec, &family, &u, 1e-6, &ctx.q).ok();
    let l1: Vec<f64> = steps.iter().map(|s| s.l1_hat_error).collect();
    let gaps: Vec<f64> = steps.iter().map(|s| s.energy_gap).collect();
    let mut v = RelaxVerdict {
        relaxed,
        l1_nonincreasing: nonincreasing(&l1),
        gap_nonincreasing: nonincreasing(&gaps),
        final_gap_small: gaps.last().is_some_and(|&g| g <= 1e-2 * (1.0 + relaxed)),
        lsc_tail_min: lsc.as_ref().map(|r| r.tail_min),
        lsc_pass: lsc.as_ref().is_some_and(|r| r.pass),
        pass: false,
        steps,
    };
    v.pass = v.l1_nonincreasing && v.gap_nonincreasing && v.final_gap_small && v.lsc_pass;
    write_json(&ctx.path("relax.json"), &v)?;
    Ok(v.pass)
}

fn counterexample(ctx: &Ctx, beta: f64, gamma: f64, blocks: &[usize]) -> Result<bool> {
    let k = Interval::new(0.25, 0.5)?;
    let d = counterexample_diagnostics(beta, gamma, blocks, k, &ctx.q)?;
    let rows: Vec<Vec<String>> = (0..d.schedule.len())
        .map(|j| vec![d.schedule[j].to_string(), real(d.s_uw[j]), real(d.s_uhat[j]), real(d.tv_k[j]), real(d.tv_blocks[j])])
        .collect();
    write_csv(&ctx.path("counterexample.csv"), &["blocks", "s_uw", "s_uhat", "tv_k", "tv_blocks"], &rows)?;
    write_json(&ctx.path("counterexample.json"), &d)?;
    Ok(true)
}

#[derive(Serialize)]
struct A1Summary {
    best_c: f64,
    violating_ball: Option<(f64, f64)>,
    resolution: BallFamily,
    balls: usize,
    growth: Option<GrowthReport>,
    pass: bool,
}

fn a1(ctx: &Ctx, q_exponent: Option<f64>) -> Result<bool> {
    let w = ctx.weight()?;
    let omega = w.domain();
    let r = a1_constant(&w, omega, &BallFamily::default(), &ctx.q)?;
    let rows: Vec<Vec<String>> = r.samples.iter().map(|s| vec![real(s.x), real(s.r), real(s.ratio)]).collect();
    write_csv(&ctx.path("a1.csv"), &["x", "r", "ratio"], &rows)?;
    let growth = q_exponent.map(|p| local_growth_check(&w, p, &nested_pairs(omega, 16, 8), &ctx.q)).transpose()?;
    let pass = growth.as_ref().is_none_or(|g| g.pass);
    let summary = A1Summary { best_c: r.best_c, violating_ball: r.violating_ball, resolution: r.resolution, balls: r.samples.len(), growth, pass };
    write_json(&ctx.path("a1.json"), &summary)?;
    Ok(pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_input_and_verification() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 2);
        assert_eq!(exit_code(&Error::NotInDomain), 1);
        assert_eq!(exit_code(&Error::ConvergenceNotEstablished("x".into())), 1);
    }

    #[test]
    fn flags_parse() {
        let c = RunConfig::try_parse_from(["degrelax", "counterexample", "--beta", "3", "--blocks", "10,20", "--out", "o"]).unwrap();
        match c.command {
            Command::Counterexample { beta, gamma, blocks } => {
                assert_eq!((beta, gamma), (3.0, 0.5));
                assert_eq!(blocks, vec![10, 20]);
            }
            _ => panic!(),
        }
        assert_eq!(c.common.out, PathBuf::from("o"));
        assert!(RunConfig::try_parse_from(["degrelax", "a1", "--q-exponent", "2", "--weight", "w.json"]).is_ok());
        assert!(RunConfig::try_parse_from(["degrelax", "bogus"]).is_err());
    }
}
