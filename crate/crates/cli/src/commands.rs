use std::path::Path;

use serde::Serialize;
use vbs_ge::checks::{run_all, CheckOutcome};
use vbs_ge::contraction::{
    dense_family, dense_optimize, dense_overlap_sq, log2_lambda_sq, norm_pbc, obc_norms, NormResult,
};
use vbs_ge::fit::{compare_with_table, fit, FitParams, FitReport, TableComparison};
use vbs_ge::ge::{extrapolated_eps, ge_with_mode, sweep, Eps, GeResult};
use vbs_ge::sampler::{sample, summarize, SampleMode, SampleRecord, SampleSummary};
use vbs_ge::vbs::{uniform_vector, ChainSpec, Sector, SpinSpec};
use vbs_ge::Error;

use crate::output::{float, to_csv, to_json};
use crate::{Bc, Command, ComputeArgs, FitArgs, Format, ModeArg, OracleArgs, RunConfig, SimulateArgs, SweepArgs};

const SUMMARY_DELTA: f64 = 0.05;

#[derive(Debug, Serialize)]
pub struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            kind: "io",
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a CliError,
        }
        to_json(&Record { error: self }).unwrap_or_else(|_| format!("{{\"error\":{{\"message\":{:?}}}}}\n", self.message))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::InvalidSpin(_) | Error::InvalidLength(_) | Error::BoundaryIndex { .. } => "invalid-chain",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::Domain(_) => "domain",
            Error::UndefinedGlobalGe => "undefined",
            _ => "invalid-input",
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            kind: "serialization",
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// One line of the entanglement table, shared by `compute` and `sweep`.
#[derive(Serialize)]
struct GeRow {
    s: u32,
    #[serde(rename = "L")]
    length: usize,
    bc: &'static str,
    sector: Sector,
    /// Absent for an exact zero.
    log2_lambda_sq: Option<f64>,
    eps: Eps,
    exact_zero: bool,
}

const GE_COLUMNS: [&str; 7] = ["s", "L", "bc", "sector", "log2_lambda_sq", "eps", "exact_zero"];

fn ge_rows(r: &GeResult, bc: Bc, sectors: &[Sector]) -> Vec<GeRow> {
    sectors
        .iter()
        .map(|&sector| {
            let l: NormResult = r.log2_lambda_sq(sector);
            GeRow {
                s: r.chain.spin.s(),
                length: r.chain.length,
                bc: bc.label(),
                sector,
                log2_lambda_sq: l.log2(),
                eps: r.eps_for(sector),
                exact_zero: l.exact_zero,
            }
        })
        .collect()
}

fn ge_csv_row(r: &GeRow) -> Vec<String> {
    vec![
        r.s.to_string(),
        r.length.to_string(),
        r.bc.to_string(),
        r.sector.label().to_string(),
        r.log2_lambda_sq.map_or_else(|| "-inf".to_string(), float),
        r.eps.to_string(),
        r.exact_zero.to_string(),
    ]
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: &'a RunConfig<'a>,
    #[serde(flatten)]
    body: T,
}

fn render<T: Serialize>(
    config: &RunConfig,
    format: Format,
    body: T,
    csv: impl FnOnce() -> (Vec<(String, String)>, Vec<&'static str>, Vec<Vec<String>>),
) -> CliResult<String> {
    match format {
        Format::Json => Ok(to_json(&Document { config, body })?),
        Format::Csv => {
            let (mut comments, header, rows) = csv();
            comments.insert(0, ("config".into(), to_json(config)?.trim_end().to_string()));
            Ok(to_csv(&comments, &header, &rows))
        }
    }
}

pub fn run(command: &Command, config: &RunConfig, format: Format) -> CliResult<String> {
    match command {
        Command::Compute(a) => compute(a, config, format),
        Command::Sweep(a) => sweep_cmd(a, config, format),
        Command::Simulate(a) => simulate(a, config, format),
        Command::Fit(a) => fit_cmd(a, config, format),
        Command::Oracle(a) => oracle(a, config, format),
        Command::Check => check(config, format),
    }
}

fn compute(a: &ComputeArgs, config: &RunConfig, format: Format) -> CliResult<String> {
    let chain = ChainSpec::build(a.spin, a.length, a.bc.boundary())?;
    let r = ge_with_mode(&chain, a.bc.mode())?;
    let rows = ge_rows(&r, a.bc, &a.sector.sectors());

    #[derive(Serialize)]
    struct Body {
        eps_even: Eps,
        eps_odd: Eps,
        eps: Eps,
        rows: Vec<GeRow>,
    }
    let csv_rows: Vec<Vec<String>> = rows.iter().map(ge_csv_row).collect();
    let body = Body {
        eps_even: r.eps_even,
        eps_odd: r.eps_odd,
        eps: r.eps,
        rows,
    };
    render(config, format, body, || {
        (vec![("eps".into(), r.eps.to_string())], GE_COLUMNS.to_vec(), csv_rows)
    })
}

fn sweep_cmd(a: &SweepArgs, config: &RunConfig, format: Format) -> CliResult<String> {
    let table = sweep(&a.spins, &a.lengths, a.bc.boundary(), a.bc.mode())?;
    let sectors = a.sector.sectors();
    let mut rows = Vec::new();
    for row in table {
        rows.extend(ge_rows(&row.result?, a.bc, &sectors));
    }
    let csv_rows: Vec<Vec<String>> = rows.iter().map(ge_csv_row).collect();

    #[derive(Serialize)]
    struct Body {
        rows: Vec<GeRow>,
    }
    render(config, format, Body { rows }, || (vec![], GE_COLUMNS.to_vec(), csv_rows))
}

#[derive(Serialize)]
struct Batch {
    mode: SampleMode,
    /// Smallest analytic sector value of the chain.
    bound: f64,
    delta: f64,
    summary: SampleSummary,
    records: Vec<SampleRecord>,
}

fn simulate(a: &SimulateArgs, config: &RunConfig, format: Format) -> CliResult<String> {
    let chain = ChainSpec::build(a.spin, a.length, a.bc.boundary())?;
    let bound = ge_with_mode(&chain, a.bc.mode())?.eps.as_f64();
    let modes: Vec<SampleMode> = match a.mode {
        ModeArg::Unconstrained => vec![SampleMode::Unconstrained],
        ModeArg::PermInvariant => vec![SampleMode::PermInvariant],
        ModeArg::BoundaryRandom => a
            .sector
            .sectors()
            .into_iter()
            .map(|sector| SampleMode::BoundaryRandom { sector })
            .collect(),
    };
    let mut batches = Vec::new();
    for mode in modes {
        let records = sample(&chain, mode, a.samples, a.seed)?;
        let summary = summarize(&records, bound, SUMMARY_DELTA)?;
        batches.push(Batch {
            mode,
            bound,
            delta: SUMMARY_DELTA,
            summary,
            records,
        });
    }
    let csv = || {
        let mut comments = Vec::new();
        let mut rows = Vec::new();
        for b in &batches {
            let s = &b.summary;
            comments.push((
                format!("summary {}", b.mode.label()),
                format!(
                    "bound={} min={} mean={} within_delta={} finite={} infinite={} below_bound={}",
                    float(b.bound),
                    s.min.map_or_else(|| "inf".to_string(), float),
                    s.mean.map_or_else(|| "inf".to_string(), float),
                    float(s.within_delta),
                    s.finite,
                    s.infinite,
                    s.below_bound
                ),
            ));
            for r in &b.records {
                rows.push(vec![
                    r.index.to_string(),
                    r.chain.spin.s().to_string(),
                    r.chain.length.to_string(),
                    a.bc.label().to_string(),
                    r.mode.label(),
                    r.seed.to_string(),
                    r.value.to_string(),
                ]);
            }
        }
        (comments, vec!["index", "s", "L", "bc", "mode", "seed", "value"], rows)
    };
    #[derive(Serialize)]
    struct Body<'a> {
        batches: &'a [Batch],
    }
    let csv_parts = csv();
    render(config, format, Body { batches: &batches }, || csv_parts)
}

fn fit_cmd(a: &FitArgs, config: &RunConfig, format: Format) -> CliResult<String> {
    let Some(&first) = a.spins.first() else {
        return Err(Error::InvalidInput("no spins given".into()).into());
    };
    let mut points = Vec::with_capacity(a.spins.len());
    for &s in &a.spins {
        let ext = extrapolated_eps(SpinSpec::new(s as i64)?, Sector::Even, a.bc.boundary(), &a.lengths, a.bc.mode())?;
        points.push((s, ext.eps_infinity));
    }
    let init = FitParams::table(first % 2 == 1, a.log_base);
    let report: FitReport = fit(&points, init, a.max_iter, a.tol)?;
    let comparison: Vec<TableComparison> = compare_with_table(&points, a.max_iter, a.tol)?;

    #[derive(Serialize)]
    struct Point {
        s: u32,
        eps_even: f64,
    }
    #[derive(Serialize)]
    struct Body {
        points: Vec<Point>,
        initial: FitParams,
        report: FitReport,
        published_comparison: Vec<TableComparison>,
    }
    let p = report.params;
    let mut comments = vec![
        (
            "fit".to_string(),
            format!(
                "alpha={} beta={} gamma={} delta={} log_base={} rms_residual={} iterations={} converged={}",
                float(p.alpha),
                float(p.beta),
                float(p.gamma),
                float(p.delta),
                float(p.log_base),
                float(report.rms_residual),
                report.iterations,
                report.converged
            ),
        ),
    ];
    for c in &comparison {
        comments.push((
            format!("published params, base {}", float(c.log_base)),
            format!(
                "rms={} refit_rms={}",
                c.table_rms.map_or_else(|| "out-of-domain".to_string(), float),
                float(c.refit.rms_residual)
            ),
        ));
    }
    let rows: Vec<Vec<String>> = points.iter().map(|(s, e)| vec![s.to_string(), float(*e)]).collect();
    let body = Body {
        points: points.iter().map(|&(s, eps_even)| Point { s, eps_even }).collect(),
        initial: init,
        report,
        published_comparison: comparison,
    };
    render(config, format, body, || (comments, vec!["s", "eps_even"], rows))
}

#[derive(Serialize)]
struct OracleRow {
    quantity: String,
    dense: f64,
    transfer: f64,
    rel_diff: f64,
}

fn oracle_row(quantity: String, dense: f64, transfer: f64) -> OracleRow {
    let scale = dense.abs().max(transfer.abs());
    OracleRow {
        quantity,
        dense,
        transfer,
        rel_diff: if scale > 0.0 { (dense - transfer).abs() / scale } else { 0.0 },
    }
}

fn oracle(a: &OracleArgs, config: &RunConfig, format: Format) -> CliResult<String> {
    let chain = ChainSpec::build(a.spin, a.length, a.bc.boundary())?;
    let family = dense_family(&chain, a.dense_cap)?;
    let mut rows = Vec::new();
    if a.bc == Bc::Pbc {
        rows.push(oracle_row("norm".into(), family[0].norm_sqr(), norm_pbc(&chain)?.value()));
    } else {
        let d = chain.spin.bond_dim();
        for (k, (st, n)) in family.iter().zip(obc_norms(chain.spin, chain.length)?).enumerate() {
            rows.push(oracle_row(format!("norm({},{})", k / d + 1, k % d + 1), st.norm_sqr(), n.value()));
        }
    }
    let mut best_sector = 0.0f64;
    for sector in Sector::BOTH {
        let v: Vec<num_complex::Complex64> = uniform_vector(chain.spin, sector)
            .into_iter()
            .map(|x| num_complex::Complex64::new(x, 0.0))
            .collect();
        let dense = dense_overlap_sq(&chain, &vec![v; chain.length], a.dense_cap)?;
        let tm = log2_lambda_sq(&chain, sector, a.bc.mode())?.value();
        best_sector = best_sector.max(tm);
        rows.push(oracle_row(format!("overlap_sq({})", sector.label()), dense, tm));
    }

    #[derive(Serialize)]
    struct Optimum {
        restarts: usize,
        max_overlap_sq: f64,
        best_sector_overlap_sq: f64,
        odd_level_weight: f64,
        restart_values: Vec<f64>,
    }
    let optimum = if a.restarts > 0 {
        let r = dense_optimize(&chain, a.restarts, a.seed, a.dense_cap)?;
        Some(Optimum {
            restarts: a.restarts,
            max_overlap_sq: r.max_overlap_sq,
            best_sector_overlap_sq: best_sector,
            odd_level_weight: r.odd_level_weight(),
            restart_values: r.restart_values.clone(),
        })
    } else {
        None
    };
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.quantity.clone(), float(r.dense), float(r.transfer), float(r.rel_diff)])
        .collect();
    let comments = optimum
        .as_ref()
        .map(|o| {
            vec![(
                "optimum".to_string(),
                format!(
                    "max_overlap_sq={} best_sector_overlap_sq={} odd_level_weight={}",
                    float(o.max_overlap_sq),
                    float(o.best_sector_overlap_sq),
                    float(o.odd_level_weight)
                ),
            )]
        })
        .unwrap_or_default();

    #[derive(Serialize)]
    struct Body {
        comparisons: Vec<OracleRow>,
        optimum: Option<Optimum>,
    }
    let body = Body {
        comparisons: rows,
        optimum,
    };
    render(config, format, body, || (comments, vec!["quantity", "dense", "transfer", "rel_diff"], csv_rows))
}

fn check(config: &RunConfig, format: Format) -> CliResult<String> {
    let outcomes: Vec<CheckOutcome> = run_all();
    let passed = outcomes.iter().filter(|c| c.passed).count();
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()])
        .collect();

    #[derive(Serialize)]
    struct Body {
        passed: usize,
        total: usize,
        checks: Vec<CheckOutcome>,
    }
    let total = outcomes.len();
    render(config, format, Body { passed, total, checks: outcomes }, || {
        (
            vec![("passed".into(), format!("{passed}/{total}"))],
            vec!["name", "passed", "detail"],
            rows,
        )
    })
}
