mod config;
mod output;

use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use clap::Parser;
use serde::Serialize;

use monocorr::assembly::{barrier_probe, diagonal_sum, fourier_statistic, plan, CELL_CSV_HEADER};
use monocorr::correlations::{
    gap_report, pair_corr_fast, pair_corr_naive, three_gap_check, triple_corr, CorrelationReport, TripleMode,
};
use monocorr::expsum::{
    a_process_grid, derive_beta, lemma5_bound, maximal_op_sample, BGrid, PaperConstants, BPROCESS_CSV_HEADER,
    DEFAULT_EPSILON, DEFAULT_GAMMA,
};
use monocorr::sequences::{generate, SequenceKind, SequenceSpec};
use monocorr::testfns::TestFunction;

use config::{Cli, Command, ConfigError, RunConfig};
use output::{Artifacts, PlotStyle};

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Module(#[from] monocorr::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

type Run<T> = Result<T, RunError>;

fn spec_of(cmd: Command, cfg: &RunConfig) -> Run<SequenceSpec> {
    let kind: SequenceKind = cfg.require(cmd, "kind", &cfg.kind)?.into();
    let alpha = cfg.require(cmd, "alpha", &cfg.alpha)?;
    let spec = match kind {
        SequenceKind::Monomial => SequenceSpec::monomial(alpha, cfg.require(cmd, "theta", &cfg.theta)?)?,
        SequenceKind::Linear => SequenceSpec::linear(alpha)?,
        SequenceKind::SqrtNoSquares => SequenceSpec::sqrt_no_squares(alpha)?,
    };
    if let Some(t) = cfg.theta {
        if t != spec.theta {
            return Err(ConfigError::Invalid {
                field: "theta",
                reason: format!("{kind:?} fixes theta = {}", spec.theta),
            }
            .into());
        }
    }
    Ok(spec)
}

fn test_function(field: &'static str, text: &str) -> Run<TestFunction> {
    text.parse().map_err(|e: monocorr::Error| {
        ConfigError::Invalid {
            field,
            reason: e.to_string(),
        }
        .into()
    })
}

fn f_of(cmd: Command, cfg: &RunConfig) -> Run<TestFunction> {
    test_function("f", &cfg.require(cmd, "f", &cfg.f)?)
}

fn timing(cfg: &RunConfig, t: Instant) -> Option<f64> {
    cfg.record_timings.then(|| t.elapsed().as_secs_f64() * 1e3)
}

fn curve(reports: &[CorrelationReport]) -> Vec<(f64, f64)> {
    reports.iter().map(|r| (r.n as f64, r.deviation)).collect()
}

fn paircorr(cmd: Command, cfg: &RunConfig, out: &mut Artifacts) -> Run<()> {
    let spec = spec_of(cmd, cfg)?;
    let f = f_of(cmd, cfg)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for n in cfg.sizes(cmd)? {
        let t = Instant::now();
        cfg.check_memory(n)?;
        let seg = generate(spec, n)?;
        let r = if cfg.naive {
            pair_corr_naive(&seg, &f, cfg.with_diagonal)?
        } else {
            pair_corr_fast(&seg, &f, cfg.with_diagonal)?
        };
        rows.push(r.csv_row(&spec, timing(cfg, t)));
        reports.push(r);
    }
    out.csv("paircorr.csv", CorrelationReport::CSV_HEADER, &rows)?;
    out.json("paircorr.json", &reports)?;
    out.plot("paircorr", PlotStyle::Curve, ("N", "deviation"), None, &curve(&reports))?;
    Ok(())
}

fn triple(cmd: Command, cfg: &RunConfig, out: &mut Artifacts) -> Run<()> {
    let spec = spec_of(cmd, cfg)?;
    let f = f_of(cmd, cfg)?;
    let g = match &cfg.g {
        Some(text) => test_function("g", text)?,
        None => f,
    };
    let mode = if cfg.naive { TripleMode::Naive } else { TripleMode::Fast };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for n in cfg.sizes(cmd)? {
        let t = Instant::now();
        cfg.check_memory(n)?;
        let seg = generate(spec, n)?;
        let r = triple_corr(&seg, &f, &g, mode)?;
        rows.push(r.csv_row(&spec, timing(cfg, t)));
        reports.push(r);
    }
    out.csv("triple.csv", CorrelationReport::CSV_HEADER, &rows)?;
    out.json("triple.json", &reports)?;
    out.plot("triple", PlotStyle::Curve, ("N", "deviation"), None, &curve(&reports))?;
    Ok(())
}

#[derive(Serialize)]
struct GapSummary<'a> {
    n: u64,
    distinct_count: usize,
    ks_vs_exponential: f64,
    histogram: &'a [monocorr::correlations::HistogramBin],
}

fn gaps(cmd: Command, cfg: &RunConfig, out: &mut Artifacts) -> Run<()> {
    let spec = spec_of(cmd, cfg)?;
    let n = cfg.require(cmd, "N", &cfg.n)?;
    let bins = cfg.bins.unwrap_or(50);
    cfg.check_memory(n)?;
    let report = gap_report(&generate(spec, n)?, bins)?;
    let rows: Vec<String> = report
        .histogram
        .iter()
        .map(|b| format!("{},{},{}", b.left, b.right, b.mass))
        .collect();
    out.csv("gaps.csv", "left,right,mass", &rows)?;
    out.json(
        "gaps.json",
        &GapSummary {
            n: report.n,
            distinct_count: report.distinct_count,
            ks_vs_exponential: report.ks_vs_exponential,
            histogram: &report.histogram,
        },
    )?;
    let points: Vec<(f64, f64)> = report
        .histogram
        .iter()
        .map(|b| ((b.left + b.right) / 2.0, b.mass))
        .collect();
    out.plot("gaps", PlotStyle::Histogram, ("scaled gap", "density"), Some("exp"), &points)?;
    Ok(())
}

fn threegap(cmd: Command, cfg: &RunConfig, out: &mut Artifacts) -> Run<()> {
    let alpha = cfg.require(cmd, "alpha", &cfg.alpha)?;
    let outcome = three_gap_check(alpha, &cfg.sizes(cmd)?)?;
    let rows: Vec<String> = outcome
        .counts
        .iter()
        .map(|(n, c)| format!("{alpha},{n},{c}"))
        .collect();
    out.csv("threegap.csv", "alpha,N,distinct_count", &rows)?;
    out.json("threegap.json", &outcome)?;
    let points: Vec<(f64, f64)> = outcome.counts.iter().map(|&(n, c)| (n as f64, c as f64)).collect();
    out.plot("threegap", PlotStyle::Curve, ("N", "distinct gaps"), None, &points)?;
    Ok(())
}

fn expsum_check(cmd: Command, cfg: &RunConfig, out: &mut Artifacts) -> Run<()> {
    let alpha = cfg.require(cmd, "alpha", &cfg.alpha)?;
    let theta = cfg.require(cmd, "theta", &cfg.theta)?;
    let gamma = cfg.gamma.unwrap_or(4);
    let seed = cfg.seed.unwrap_or(0);
    derive_beta(alpha, theta)?;
    let consts = PaperConstants::new(alpha, theta, gamma, cfg.epsilon.unwrap_or(DEFAULT_EPSILON))?;
    out.json("constants.json", &consts)?;

    let cases = a_process_grid(seed)?;
    let rows: Vec<String> = cases
        .iter()
        .map(|c| {
            format!(
                "{},{:e},{},{},{},{:e},{:e},{:e},{},{:e}",
                c.theta, c.gamma, c.m, c.lo, c.hi, c.f, c.direct_abs, c.bound, c.best_l, c.ratio()
            )
        })
        .collect();
    out.csv("aprocess.csv", "theta,gamma,M,lo,hi,F,direct_abs,bound,best_l,ratio", &rows)?;
    let points: Vec<(f64, f64)> = cases.iter().enumerate().map(|(i, c)| (i as f64, c.ratio())).collect();
    out.plot("aprocess", PlotStyle::Curve, ("case", "ratio"), None, &points)?;

    let mut rows = Vec::new();
    for u in [6i64, 8] {
        for (q1, q2) in [(1u64, 2u64), (2, 3)] {
            for j in [0, u / 2, u - 1] {
                if j as f64 >= consts.j_limit(u, q1) {
                    continue;
                }
                let s = maximal_op_sample(theta, consts.lambda(u, j, q1), consts.eta(q1, q2), u, 200, seed)?;
                let b = lemma5_bound(u, j, q1, q2, &consts);
                rows.push(format!("{u},{j},{q1},{q2},{:e},{},{:e},{:e}", s.value, s.lattice_count, b, s.value / b));
            }
        }
    }
    out.csv("maximal.csv", "u,j,q1,q2,sup,lattice_count,bound,ratio", &rows)?;
    Ok(())
}

fn bprocess_grid(_cmd: Command, cfg: &RunConfig, out: &mut Artifacts) -> Run<()> {
    let mut grid = BGrid::default();
    if let Some(a) = cfg.alpha {
        grid.alphas = vec![a];
    }
    if let Some(t) = &cfg.thetas {
        grid.thetas = t.clone();
    } else if let Some(t) = cfg.theta {
        grid.thetas = vec![t];
    }
    if let Some(g) = cfg.gamma {
        grid.gamma = g;
    }
    let rows = grid.run()?;
    let lines: Vec<String> = rows.iter().map(|r| r.report.csv_row(r.alpha, r.theta, r.k, r.q)).collect();
    out.csv("bprocess.csv", BPROCESS_CSV_HEADER, &lines)?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.k as f64, r.report.ratio())).collect();
    out.plot("bprocess", PlotStyle::Curve, ("k", "observed_error/bound"), None, &points)?;
    Ok(())
}

fn gamma_eps(cfg: &RunConfig) -> (u32, f64) {
    (cfg.gamma.unwrap_or(DEFAULT_GAMMA), cfg.epsilon.unwrap_or(DEFAULT_EPSILON))
}

fn diagonal(cmd: Command, cfg: &RunConfig, out: &mut Artifacts) -> Run<()> {
    let spec = spec_of(cmd, cfg)?;
    let f = f_of(cmd, cfg)?;
    let (gamma, eps) = gamma_eps(cfg);
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for n in cfg.sizes(cmd)? {
        let d = diagonal_sum(&spec, &f, &plan(n, gamma, eps)?)?;
        rows.push(format!("{n},{gamma},{},{},{}", d.value, d.target, d.f_at_zero));
        points.push((n as f64, d.value - d.target));
    }
    out.csv("diagonal.csv", "N,Gamma,value,target,f_at_zero", &rows)?;
    out.plot("diagonal", PlotStyle::Curve, ("N", "value - target"), None, &points)?;
    Ok(())
}

fn assembly(cmd: Command, cfg: &RunConfig, out: &mut Artifacts) -> Run<()> {
    let spec = spec_of(cmd, cfg)?;
    let f = f_of(cmd, cfg)?;
    let (gamma, eps) = gamma_eps(cfg);
    let n = cfg.require(cmd, "N", &cfg.n)?;
    let report = fourier_statistic(&spec, &f, &plan(n, gamma, eps)?)?;
    let rows: Vec<String> = report.cells.iter().map(|c| c.csv_row()).collect();
    out.csv("cells.csv", CELL_CSV_HEADER, &rows)?;
    out.json("assembly.json", &report)?;
    Ok(())
}

fn barrier(cmd: Command, cfg: &RunConfig, out: &mut Artifacts) -> Run<()> {
    let alpha = cfg.require(cmd, "alpha", &cfg.alpha)?;
    let thetas = cfg.require(cmd, "thetas", &cfg.thetas)?;
    let f = f_of(cmd, cfg)?;
    let (gamma, eps) = gamma_eps(cfg);
    let mut lines = Vec::new();
    let mut points = Vec::new();
    for n in cfg.sizes(cmd)? {
        for r in barrier_probe(alpha, &thetas, &f, &plan(n, gamma, eps)?)? {
            lines.push(format!(
                "{},{},{:e},{},{},{:e}",
                r.theta, r.n, r.offdiag_total, r.empirical_exponent, r.predicted_exponent, r.predicted_bound
            ));
            points.push((r.theta, r.empirical_exponent));
        }
    }
    out.csv(
        "barrier.csv",
        "theta,N,offdiag_total,empirical_exponent,predicted_exponent,predicted_bound",
        &lines,
    )?;
    out.plot("barrier", PlotStyle::Curve, ("theta", "empirical exponent"), None, &points)?;
    Ok(())
}

fn run(cli: Cli) -> Run<()> {
    let (cmd, cfg) = RunConfig::resolve(cli)?;
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(ConfigError::Invalid {
                field: "threads",
                reason: "must be positive".into(),
            }
            .into());
        }
        // a pool can only be installed once per process; later calls are no-ops
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let echo = serde_json::to_string_pretty(&cfg).expect("config serializes");
    eprintln!("{echo}");
    let started = SystemTime::now();
    let clock = Instant::now();
    let mut out = Artifacts::new(&cfg.output_dir())?;
    out.write("config.json", format!("{echo}\n").as_bytes())?;
    match cmd {
        Command::Paircorr => paircorr(cmd, &cfg, &mut out)?,
        Command::Triple => triple(cmd, &cfg, &mut out)?,
        Command::Gaps => gaps(cmd, &cfg, &mut out)?,
        Command::Threegap => threegap(cmd, &cfg, &mut out)?,
        Command::ExpsumCheck => expsum_check(cmd, &cfg, &mut out)?,
        Command::BprocessGrid => bprocess_grid(cmd, &cfg, &mut out)?,
        Command::Diagonal => diagonal(cmd, &cfg, &mut out)?,
        Command::Assembly => assembly(cmd, &cfg, &mut out)?,
        Command::Barrier => barrier(cmd, &cfg, &mut out)?,
    }
    let manifest = out.finish(&cfg, rayon::current_num_threads(), started, clock.elapsed().as_secs_f64() * 1e3)?;
    eprintln!("wrote {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
