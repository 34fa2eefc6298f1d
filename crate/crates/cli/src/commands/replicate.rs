use egw::metrics::{confusion, mean_se, sp_se_mcc};
use egw::sampler::{median_probability_model, run_chain};
use egw::simulate::{model, sample_mvn};
use egw::{task_seed, ConfusionCounts, ModelId, RecoveryScores};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fmt;
use crate::config::FitSettings;
use crate::error::{CliError, CliResult};
use crate::manifest::OutDir;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSpec {
    pub model: ModelId,
    pub p: usize,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// The chain seed inside is replaced by a per-replication seed.
    pub settings: FitSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepResult {
    pub rep: usize,
    pub counts: ConfusionCounts,
    pub scores: RecoveryScores,
    pub acceptance_rate: f64,
}

/// Seeds of replication `rep`: truth, data, chain.
pub fn rep_seeds(master: u64, rep: usize) -> (u64, u64, u64) {
    let r = 3 * rep as u64;
    (
        task_seed(master, r),
        task_seed(master, r + 1),
        task_seed(master, r + 2),
    )
}

/// One simulate-and-fit pipeline per replication, on the current rayon pool.
pub fn replicate(spec: &ReplicateSpec) -> CliResult<Vec<RepResult>> {
    if spec.reps == 0 {
        return Err(CliError::Usage("reps must be at least 1".into()));
    }
    (0..spec.reps)
        .into_par_iter()
        .map(|rep| {
            let (s_truth, s_data, s_chain) = rep_seeds(spec.seed, rep);
            let truth = model::<f64>(spec.model, spec.p, s_truth)?;
            let data = sample_mvn(&truth, spec.n, s_data)?;
            let mut mcmc = spec.settings.mcmc.clone();
            mcmc.seed = s_chain;
            let chain = run_chain(&data.scov, &spec.settings.posterior, &mcmc)?;
            let mpm = median_probability_model(&chain.edge_freq, spec.settings.threshold);
            let counts = confusion(&mpm, &truth.graph_star)?;
            Ok(RepResult {
                rep,
                counts,
                scores: sp_se_mcc(&counts),
                acceptance_rate: chain.acceptance_rate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: RecoveryScores,
    pub std_err: Option<RecoveryScores>,
}

pub fn summarize(results: &[RepResult]) -> Summary {
    let col = |f: fn(&RecoveryScores) -> f64| {
        mean_se(&results.iter().map(|r| f(&r.scores)).collect::<Vec<_>>())
    };
    let (sp, sp_se) = col(|s| s.sp);
    let (se, se_se) = col(|s| s.se);
    let (mcc, mcc_se) = col(|s| s.mcc);
    Summary {
        mean: RecoveryScores { sp, se, mcc },
        std_err: match (sp_se, se_se, mcc_se) {
            (Some(sp), Some(se), Some(mcc)) => Some(RecoveryScores { sp, se, mcc }),
            _ => None,
        },
    }
}

pub const CSV_HEADER: &str =
    "model,p,n,delta,rep,sp,se,mcc,sp_stderr,se_stderr,mcc_stderr,tp,fp,fn,tn,acceptance_rate";

pub fn results_csv(spec: &ReplicateSpec, results: &[RepResult]) -> String {
    let head = format!(
        "{},{},{},{}",
        spec.model,
        spec.p,
        spec.n,
        fmt(spec.settings.posterior.delta)
    );
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in results {
        let c = r.counts;
        s.push_str(&format!(
            "{head},{},{},{},{},,,,{},{},{},{},{}\n",
            r.rep,
            fmt(r.scores.sp),
            fmt(r.scores.se),
            fmt(r.scores.mcc),
            c.tp,
            c.fp,
            c.fn_,
            c.tn,
            fmt(r.acceptance_rate)
        ));
    }
    let sum = summarize(results);
    let se =
        |f: fn(&RecoveryScores) -> f64| sum.std_err.as_ref().map(|e| fmt(f(e))).unwrap_or_default();
    s.push_str(&format!(
        "{head},mean,{},{},{},{},{},{},,,,,\n",
        fmt(sum.mean.sp),
        fmt(sum.mean.se),
        fmt(sum.mean.mcc),
        se(|e| e.sp),
        se(|e| e.se),
        se(|e| e.mcc)
    ));
    s
}

/// Writes `replicate.csv`: one row per replication and a closing summary
/// row of means and standard errors.
pub fn run(spec: &ReplicateSpec, out: &mut OutDir) -> CliResult<()> {
    let results = replicate(spec)?;
    out.write("replicate.csv", &results_csv(spec, &results))?;
    out.write("config.txt", &spec.settings.to_config_text())?;
    Ok(())
}
