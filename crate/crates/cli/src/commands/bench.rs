use std::collections::BTreeMap;
use std::time::Instant;

use clap::ValueEnum;
use egw::graph::is_decomposable;
use egw::gwishart::{analytic_log_norm, laplace_log_norm, mc_log_norm};
use egw::metrics::rel_error_lognorm;
use egw::simulate::model;
use egw::{task_seed, GWishartParams, Graph, Matrix, ModelId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fmt;
use crate::error::{CliError, CliResult};
use crate::manifest::OutDir;
use crate::plot::{line_chart, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// Path graph of Model 1
    Ar1,
    /// Bandwidth-2 graph of Model 2
    Ar2,
    /// Star graph of Model 3
    Star,
    /// Non-decomposable graphs drawn from Model 4
    Random,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Ar1 => "ar1",
            GraphKind::Ar2 => "ar2",
            GraphKind::Star => "star",
            GraphKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    Analytic,
    Laplace,
    Mc,
}

impl BenchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchMethod::Analytic => "analytic",
            BenchMethod::Laplace => "laplace",
            BenchMethod::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub graph_kind: GraphKind,
    pub p_list: Vec<usize>,
    pub delta_list: Vec<f64>,
    pub methods: Vec<BenchMethod>,
    pub mc_samples: usize,
    /// Graphs per dimension; only `random` draws differ between them.
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub p: usize,
    pub delta: f64,
    pub graph_kind: GraphKind,
    pub method: BenchMethod,
    pub log_value: f64,
    pub std_error: f64,
    pub wall_time_ns: u128,
    pub rep: usize,
    pub graph_seed: Option<u64>,
}

/// Draws tried per random graph before giving up on finding a
/// non-decomposable one.
const MAX_GRAPH_DRAWS: u64 = 1000;

/// Centre `Ω` of the prior `W_G(δ, (δ−2)Ω⁻¹)` and its graph.
pub fn bench_center(
    kind: GraphKind,
    p: usize,
    rep: usize,
    seed: u64,
) -> CliResult<(Matrix, Graph, Option<u64>)> {
    let fixed = |id| -> CliResult<(Matrix, Graph, Option<u64>)> {
        let t = model::<f64>(id, p, 0)?;
        Ok((t.omega_star, t.graph_star, None))
    };
    match kind {
        GraphKind::Ar1 => fixed(ModelId::Ar1),
        GraphKind::Ar2 => fixed(ModelId::Ar2),
        GraphKind::Star => fixed(ModelId::Star),
        GraphKind::Random => {
            let base = task_seed(task_seed(seed, p as u64), rep as u64);
            for k in 0..MAX_GRAPH_DRAWS {
                let s = task_seed(base, k);
                let t = model::<f64>(ModelId::Random, p, s)?;
                if !is_decomposable(&t.graph_star) {
                    return Ok((t.omega_star, t.graph_star, Some(s)));
                }
            }
            Err(CliError::Numeric(format!(
                "no non-decomposable Model 4 graph at p = {p}"
            )))
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.p_list.is_empty()
            || self.delta_list.is_empty()
            || self.methods.is_empty()
            || self.reps == 0
        {
            return Err(CliError::Usage("empty benchmark grid".into()));
        }
        if let Some(d) = self.delta_list.iter().find(|&&d| !(d > 2.0)) {
            return Err(CliError::Usage(format!("delta must exceed 2, got {d}")));
        }
        if let Some(p) = self
            .p_list
            .iter()
            .find(|&&p| p < 2 || (self.graph_kind == GraphKind::Ar2 && p < 3))
        {
            return Err(CliError::Usage(format!(
                "p = {p} too small for {}",
                self.graph_kind.as_str()
            )));
        }
        if self.methods.contains(&BenchMethod::Analytic) && self.graph_kind == GraphKind::Random {
            return Err(egw::Error::NotDecomposable.into());
        }
        Ok(())
    }
}

/// All benchmark cells, in `(p, rep, δ, method)` order. Cells run on the
/// current rayon pool; each Monte Carlo cell has its own seed.
pub fn bench_rows(spec: &BenchSpec) -> CliResult<Vec<BenchRow>> {
    spec.validate()?;
    let mut methods = spec.methods.clone();
    methods.sort();
    methods.dedup();
    let mut centers = Vec::new();
    for &p in &spec.p_list {
        for rep in 0..spec.reps {
            centers.push((p, rep, bench_center(spec.graph_kind, p, rep, spec.seed)?));
        }
    }
    let mut cells = Vec::new();
    for c in 0..centers.len() {
        for &delta in &spec.delta_list {
            for &m in &methods {
                cells.push((c, delta, m));
            }
        }
    }
    let rows: Vec<CliResult<BenchRow>> = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(c, delta, method))| {
            let (p, rep, (omega, graph, graph_seed)) = &centers[c];
            let start = Instant::now();
            let est = match method {
                BenchMethod::Laplace => laplace_log_norm(delta - 2.0, omega, graph)?,
                BenchMethod::Analytic | BenchMethod::Mc => {
                    let params = GWishartParams::new(
                        delta,
                        omega.spd_inverse()?.scale(delta - 2.0),
                        graph.clone(),
                    )?;
                    if method == BenchMethod::Analytic {
                        analytic_log_norm(&params)?
                    } else {
                        mc_log_norm(
                            &params,
                            spec.mc_samples,
                            task_seed(spec.seed, 1 << 32 | idx as u64),
                        )?
                    }
                }
            };
            Ok(BenchRow {
                p: *p,
                delta,
                graph_kind: spec.graph_kind,
                method,
                log_value: est.log_value,
                std_error: est.std_error,
                wall_time_ns: start.elapsed().as_nanos(),
                rep: *rep,
                graph_seed: *graph_seed,
            })
        })
        .collect();
    rows.into_iter().collect()
}

pub const CSV_HEADER: &str =
    "p,delta,graph_kind,method,log_value,std_error,wall_time_ns,rep,graph_seed";

/// Benchmark CSV; with `timed = false` the wall-time column is left empty.
pub fn rows_csv(rows: &[BenchRow], timed: bool) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.p,
            fmt(r.delta),
            r.graph_kind.as_str(),
            r.method.as_str(),
            fmt(r.log_value),
            fmt(r.std_error),
            if timed {
                r.wall_time_ns.to_string()
            } else {
                String::new()
            },
            r.rep,
            r.graph_seed.map(|s| s.to_string()).unwrap_or_default()
        ));
    }
    s
}

/// Mean over reps of `f(row)` for each `(p, method)`, keyed by δ.
fn mean_by<F: Fn(&BenchRow) -> Option<f64>>(
    rows: &[BenchRow],
    f: F,
) -> BTreeMap<(usize, BenchMethod), Vec<(f64, f64)>> {
    let mut acc: BTreeMap<(usize, BenchMethod), Vec<(f64, f64, usize)>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = f(r) {
            let series = acc.entry((r.p, r.method)).or_default();
            match series.iter_mut().find(|e| e.0 == r.delta) {
                Some(e) => {
                    e.1 += v;
                    e.2 += 1;
                }
                None => series.push((r.delta, v, 1)),
            }
        }
    }
    acc.into_iter()
        .map(|(k, v)| {
            (
                k,
                v.into_iter().map(|(d, s, n)| (d, s / n as f64)).collect(),
            )
        })
        .collect()
}

/// Relative error of each Laplace row against the exact value when present,
/// else the Monte Carlo estimate of the same cell.
pub fn laplace_rel_errors(rows: &[BenchRow]) -> Vec<(usize, usize, f64, f64)> {
    let reference = |r: &BenchRow| {
        let same = |m| {
            rows.iter()
                .find(|o| o.p == r.p && o.rep == r.rep && o.delta == r.delta && o.method == m)
        };
        same(BenchMethod::Analytic).or_else(|| same(BenchMethod::Mc))
    };
    rows.iter()
        .filter(|r| r.method == BenchMethod::Laplace)
        .filter_map(|r| {
            reference(r).map(|t| {
                (
                    r.p,
                    r.rep,
                    r.delta,
                    rel_error_lognorm(t.log_value, r.log_value).re,
                )
            })
        })
        .collect()
}

/// Writes `bench.csv` and the plots `log_constant.svg`, `rel_error.svg`
/// and `time.svg`.
pub fn run(spec: &BenchSpec, out: &mut OutDir) -> CliResult<()> {
    let rows = bench_rows(spec)?;
    out.write_timed(
        "bench.csv",
        &rows_csv(&rows, true),
        Some(&rows_csv(&rows, false)),
    )?;

    let logs = mean_by(&rows, |r| Some(r.log_value));
    let series: Vec<Series> = logs
        .into_iter()
        .map(|((p, m), pts)| Series {
            label: format!("p={p} {}", m.as_str()),
            points: pts,
        })
        .collect();
    out.write(
        "log_constant.svg",
        &line_chart("log normalising constant", "delta", "log I", &series),
    )?;

    let mut re: BTreeMap<usize, Vec<(f64, f64, usize)>> = BTreeMap::new();
    for (p, _, delta, v) in laplace_rel_errors(&rows) {
        let s = re.entry(p).or_default();
        match s.iter_mut().find(|e| e.0 == delta) {
            Some(e) => {
                e.1 += v;
                e.2 += 1;
            }
            None => s.push((delta, v, 1)),
        }
    }
    if !re.is_empty() {
        let series: Vec<Series> = re
            .into_iter()
            .map(|(p, pts)| Series {
                label: format!("p={p}"),
                points: pts.into_iter().map(|(d, s, n)| (d, s / n as f64)).collect(),
            })
            .collect();
        out.write(
            "rel_error.svg",
            &line_chart("relative error of Laplace", "delta", "re", &series),
        )?;
    }

    let mut times: BTreeMap<BenchMethod, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in &rows {
        let e = times.entry(r.method).or_default().entry(r.p).or_default();
        e.0 += (r.wall_time_ns.max(1) as f64).ln();
        e.1 += 1;
    }
    let series: Vec<Series> = times
        .into_iter()
        .map(|(m, by_p)| Series {
            label: m.as_str().to_string(),
            points: by_p
                .into_iter()
                .map(|(p, (s, n))| (p as f64, s / n as f64))
                .collect(),
        })
        .collect();
    out.write_timed(
        "time.svg",
        &line_chart("computation time", "p", "mean log(ns)", &series),
        None,
    )?;
    Ok(())
}
