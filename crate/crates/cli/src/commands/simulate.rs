use egw::io::matrix_to_csv;
use egw::simulate::{model, sample_mvn};
use egw::{task_seed, ModelId};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::manifest::OutDir;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSpec {
    pub model: ModelId,
    pub p: usize,
    pub n: usize,
    pub seed: u64,
}

pub fn column_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

/// Writes the truth (`omega_star.csv`, `sigma_star.csv`, `graph_star.json`,
/// `graph_star.csv`) and the draws (`data.csv`, `sigma_hat.csv`).
pub fn run(spec: &SimulateSpec, out: &mut OutDir) -> CliResult<()> {
    let truth = model::<f64>(spec.model, spec.p, task_seed(spec.seed, 0))?;
    let d = sample_mvn(&truth, spec.n, task_seed(spec.seed, 1))?;
    let names = column_names(spec.p);
    out.write(
        "omega_star.csv",
        &matrix_to_csv(&truth.omega_star, Some(&names)),
    )?;
    out.write(
        "sigma_star.csv",
        &matrix_to_csv(&truth.sigma_star()?, Some(&names)),
    )?;
    out.write("graph_star.json", &(truth.graph_star.to_json() + "\n"))?;
    out.write("graph_star.csv", &truth.graph_star.to_adjacency_csv())?;
    out.write("data.csv", &matrix_to_csv(&d.data, Some(&names)))?;
    out.write(
        "sigma_hat.csv",
        &matrix_to_csv(d.scov.sigma_hat(), Some(&names)),
    )?;
    Ok(())
}
