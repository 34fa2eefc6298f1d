use std::path::{Path, PathBuf};

use clap::ValueEnum;
use egw::io::{matrix_from_csv, matrix_to_csv};
use egw::posterior::score_graph;
use egw::sampler::{degree_posterior, median_probability_model, run_chain, DegreePosterior};
use egw::{ChainResult, Graph, SampleCov};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fmt;
use crate::config::FitSettings;
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// `n × p` observations, one row per sample
    Data,
    /// Precomputed `p × p` sample covariance; needs `n`
    Cov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub input: PathBuf,
    pub input_kind: InputKind,
    pub n: Option<usize>,
    pub input_sha256: String,
    pub settings: FitSettings,
    pub dump_scores: bool,
}

impl FitSpec {
    /// Spec for `input`, recording its absolute path and digest.
    pub fn new(
        input: &Path,
        input_kind: InputKind,
        n: Option<usize>,
        settings: FitSettings,
        dump_scores: bool,
    ) -> CliResult<FitSpec> {
        let input = std::fs::canonicalize(input)
            .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
        let bytes = std::fs::read(&input)?;
        Ok(FitSpec {
            input_sha256: sha256_hex(&bytes),
            input,
            input_kind,
            n,
            settings,
            dump_scores,
        })
    }
}

/// Sample covariance and column names from a CSV file.
pub fn load_input(
    path: &Path,
    kind: InputKind,
    n: Option<usize>,
    center: bool,
    standardize: bool,
) -> CliResult<(SampleCov, Option<Vec<String>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (m, names) =
        matrix_from_csv(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(CliError::Data(format!(
            "{}: NaN or infinite entries",
            path.display()
        )));
    }
    if m.ncols() < 2 {
        return Err(CliError::Data(format!(
            "need at least 2 variables, got {}",
            m.ncols()
        )));
    }
    let scov = match kind {
        InputKind::Data => {
            if n.is_some_and(|n| n != m.nrows()) {
                return Err(CliError::Usage(format!(
                    "--n {} disagrees with {} data rows",
                    n.unwrap_or(0),
                    m.nrows()
                )));
            }
            SampleCov::from_data(&m, center, standardize)
        }
        InputKind::Cov => {
            let n = n.ok_or_else(|| CliError::Usage("covariance input needs --n".into()))?;
            SampleCov::new(m, n)
        }
    }
    .map_err(|e| CliError::Data(e.to_string()))?;
    Ok((scov, names))
}

/// Runs the chain and writes `chain.jsonl`, `edge_freq.csv`, `mpm.json`,
/// `degree_posterior.csv`, `rank_posterior.csv`, `summary.json`,
/// `config.txt` and, on request, `scores.csv`.
pub fn run(spec: &FitSpec, out: &mut OutDir) -> CliResult<()> {
    let bytes = std::fs::read(&spec.input)
        .map_err(|e| CliError::Data(format!("{}: {e}", spec.input.display())))?;
    if sha256_hex(&bytes) != spec.input_sha256 {
        return Err(CliError::Data(format!(
            "{} changed since the run was recorded",
            spec.input.display()
        )));
    }
    let s = &spec.settings;
    let (scov, names) = load_input(
        &spec.input,
        spec.input_kind,
        spec.n,
        s.center,
        s.standardize,
    )?;
    fit_into(&scov, names, s, spec.dump_scores, out)?;
    Ok(())
}

pub fn fit_into(
    scov: &SampleCov,
    names: Option<Vec<String>>,
    s: &FitSettings,
    dump_scores: bool,
    out: &mut OutDir,
) -> CliResult<ChainResult> {
    let p = scov.p();
    let names = names.unwrap_or_else(|| super::simulate::column_names(p));
    let chain = run_chain(scov, &s.posterior, &s.mcmc)?;

    let mut jsonl = String::new();
    for rec in &chain.samples {
        jsonl.push_str(&serde_json::to_string(rec)?);
        jsonl.push('\n');
    }
    out.write("chain.jsonl", &jsonl)?;
    out.write(
        "edge_freq.csv",
        &matrix_to_csv(&chain.edge_freq, Some(&names)),
    )?;
    out.write("config.txt", &s.to_config_text())?;

    let mpm = median_probability_model(&chain.edge_freq, s.threshold);
    out.write("mpm.json", &(mpm.to_json() + "\n"))?;

    let summary = serde_json::json!({
        "p": p,
        "n": scov.n(),
        "n_samples": chain.samples.len(),
        "acceptance_rate": chain.acceptance_rate,
        "distinct_graphs": chain.graphs.len(),
        "n_fits": chain.n_fits,
        "cache_hits": chain.cache_hits,
        "mpm_edges": mpm.n_edges(),
    });
    out.write(
        "summary.json",
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;

    if !chain.samples.is_empty() {
        let dp = degree_posterior(&chain)?;
        let (deg, rank) = degree_rank_csv(&dp, &names);
        out.write("degree_posterior.csv", &deg)?;
        out.write("rank_posterior.csv", &rank)?;
    }
    if dump_scores {
        out.write("scores.csv", &score_dump(scov, s, &chain)?)?;
    }
    Ok(chain)
}

fn degree_rank_csv(dp: &DegreePosterior, names: &[String]) -> (String, String) {
    let p = names.len();
    let mut deg = String::from("vertex,name,mean_degree,mean_rank");
    for d in 0..p {
        deg.push_str(&format!(",deg_{d}"));
    }
    deg.push('\n');
    let mut rank = String::from("vertex,name");
    for k in 0..(2 * p - 1) {
        rank.push_str(&format!(",rank_{}", fmt(DegreePosterior::rank_value(k))));
    }
    rank.push('\n');
    for v in 0..p {
        let row: Vec<String> = dp.degree[v].iter().map(|&x| fmt(x)).collect();
        deg.push_str(&format!(
            "{v},{},{},{},{}\n",
            names[v],
            fmt(dp.mean_degree[v]),
            fmt(dp.mean_rank[v]),
            row.join(",")
        ));
        let row: Vec<String> = dp.rank[v].iter().map(|&x| fmt(x)).collect();
        rank.push_str(&format!("{v},{},{}\n", names[v], row.join(",")));
    }
    (deg, rank)
}

/// Score decomposition of every distinct retained graph, by hash.
fn score_dump(scov: &SampleCov, s: &FitSettings, chain: &ChainResult) -> CliResult<String> {
    let graphs: Vec<(&String, &Graph)> = chain.graphs.iter().collect();
    let rows: Vec<CliResult<String>> = graphs
        .par_iter()
        .map(|(h, g)| {
            let sc = score_graph(g, scov, &s.posterior, None)?;
            Ok(format!(
                "{h},{},{},{},{},{}\n",
                g.n_edges(),
                fmt(sc.log_prior),
                fmt(sc.log_lik_alpha),
                fmt(sc.dim_penalty),
                fmt(sc.log_score)
            ))
        })
        .collect();
    let mut text = String::from("graph_hash,size,log_prior,log_lik_alpha,dim_penalty,log_score\n");
    for r in rows {
        text.push_str(&r?);
    }
    Ok(text)
}
