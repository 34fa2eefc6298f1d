//! Ground-truth precision matrices for the four simulation models and
//! seeded Gaussian data.
//!
//! All randomness comes from `ChaCha20Rng::seed_from_u64`, so a seed gives
//! the same draw on every platform.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::SampleCov;
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::scalar::Real;

const SUPPORT_THRESHOLD: f64 = 1e-12;
const AR1_TRUNCATION: f64 = 1e-10;
const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    Ar1,
    Ar2,
    Star,
    Random,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::Ar1, ModelId::Ar2, ModelId::Star, ModelId::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Ar1 => "ar1",
            ModelId::Ar2 => "ar2",
            ModelId::Star => "star",
            ModelId::Random => "random",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ar1" | "1" => Ok(ModelId::Ar1),
            "ar2" | "2" => Ok(ModelId::Ar2),
            "star" | "3" => Ok(ModelId::Star),
            "random" | "4" => Ok(ModelId::Random),
            other => Err(Error::InvalidConfig(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth<T> {
    pub omega_star: Matrix<T>,
    pub graph_star: Graph,
    pub model: ModelId,
    pub p: usize,
    pub seed: Option<u64>,
}

impl<T: Real> SimulationTruth<T> {
    pub fn sigma_star(&self) -> Result<Matrix<T>> {
        self.omega_star.spd_inverse()
    }
}

/// `D^{−1/2} Ω D^{−1/2}` with `D = diag(Ω)`.
pub fn standardize<T: Real>(omega: &Matrix<T>) -> Matrix<T> {
    let s: Vec<T> = omega.diag().iter().map(|&d| T::one() / d.sqrt()).collect();
    let mut out = Matrix::from_fn(omega.nrows(), omega.ncols(), |i, j| {
        omega[(i, j)] * s[i] * s[j]
    });
    for i in 0..out.nrows() {
        out[(i, i)] = T::one();
    }
    out
}

fn truth<T: Real>(
    omega_star: Matrix<T>,
    model: ModelId,
    seed: Option<u64>,
) -> Result<SimulationTruth<T>> {
    if !omega_star.is_positive_definite() {
        return Err(Error::not_pd(format!("{model} truth")));
    }
    let graph_star = Graph::from_support(&omega_star, T::lit(SUPPORT_THRESHOLD));
    Ok(SimulationTruth {
        p: omega_star.nrows(),
        omega_star,
        graph_star,
        model,
        seed,
    })
}

fn need_p(p: usize, min: usize, model: ModelId) -> Result<()> {
    if p < min {
        return Err(Error::InvalidConfig(format!(
            "model {model} needs p >= {min}, got {p}"
        )));
    }
    Ok(())
}

/// Model 1: inverse of `Σ_ij = 0.7^{|i−j|}`, standardised.
pub fn model_ar1<T: Real>(p: usize) -> Result<SimulationTruth<T>> {
    need_p(p, 2, ModelId::Ar1)?;
    let rho = T::lit(0.7);
    let sigma = Matrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32));
    let mut omega = sigma.spd_inverse()?;
    for i in 0..p {
        for j in 0..p {
            if i != j && omega[(i, j)].abs() < T::lit(AR1_TRUNCATION) {
                omega[(i, j)] = T::zero();
            }
        }
    }
    omega.symmetrize();
    truth(standardize(&omega), ModelId::Ar1, None)
}

/// Model 2: unit diagonal, 0.5 on the first and 0.25 on the second off-diagonal.
pub fn model_ar2<T: Real>(p: usize) -> Result<SimulationTruth<T>> {
    need_p(p, 3, ModelId::Ar2)?;
    let omega = Matrix::from_fn(p, p, |i, j| match i.abs_diff(j) {
        0 => T::one(),
        1 => T::lit(0.5),
        2 => T::lit(0.25),
        _ => T::zero(),
    });
    truth(omega, ModelId::Ar2, None)
}

/// Model 3: vertex 0 joined to every other vertex with weight 0.1.
pub fn model_star<T: Real>(p: usize) -> Result<SimulationTruth<T>> {
    need_p(p, 2, ModelId::Star)?;
    let omega = Matrix::from_fn(p, p, |i, j| {
        if i == j {
            T::one()
        } else if i == 0 || j == 0 {
            T::lit(0.1)
        } else {
            T::zero()
        }
    });
    truth(omega, ModelId::Star, None)
}

/// Sparse symmetric `B` with entries 0.5 w.p. 0.05, shifted by `τI` so that
/// the condition number is `p`. Returned before standardisation.
pub fn random_unstandardized<T: Real>(p: usize, seed: u64) -> Result<Matrix<T>> {
    need_p(p, 2, ModelId::Random)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..MAX_REDRAWS {
        let mut b = Matrix::zeros(p, p);
        let mut any = false;
        for i in 0..p {
            for j in (i + 1)..p {
                if rng.random::<f64>() < 0.05 {
                    b[(i, j)] = T::lit(0.5);
                    b[(j, i)] = T::lit(0.5);
                    any = true;
                }
            }
        }
        if !any {
            continue;
        }
        let eig = b.sym_eigen();
        let pp = T::from_usize_lossy(p);
        let tau = (eig.max() - pp * eig.min()) / (pp - T::one());
        for i in 0..p {
            b[(i, i)] = tau;
        }
        return Ok(b);
    }
    Err(Error::DegenerateDraw(MAX_REDRAWS))
}

/// Model 4: [`random_unstandardized`] with unit diagonal.
pub fn model_random<T: Real>(p: usize, seed: u64) -> Result<SimulationTruth<T>> {
    let omega = random_unstandardized(p, seed)?;
    truth(standardize(&omega), ModelId::Random, Some(seed))
}

pub fn model<T: Real>(id: ModelId, p: usize, seed: u64) -> Result<SimulationTruth<T>> {
    match id {
        ModelId::Ar1 => model_ar1(p),
        ModelId::Ar2 => model_ar2(p),
        ModelId::Star => model_star(p),
        ModelId::Random => model_random(p, seed),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData<T> {
    /// `n × p` draws.
    pub data: Matrix<T>,
    pub scov: SampleCov<T>,
}

/// `n` iid draws from `N_p(0, Ω*⁻¹)` and their uncentred second moment.
pub fn sample_mvn<T: Real>(
    truth: &SimulationTruth<T>,
    n: usize,
    seed: u64,
) -> Result<SimulatedData<T>> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "sample size must be at least 1".into(),
        ));
    }
    let p = truth.p;
    let sigma = truth.sigma_star()?;
    let chol = sigma.cholesky()?;
    let l = chol.l();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut data = Matrix::zeros(n, p);
    let mut z = vec![T::zero(); p];
    for r in 0..n {
        for v in z.iter_mut() {
            *v = T::lit(rng.sample::<f64, _>(StandardNormal));
        }
        let row = data.row_mut(r);
        for i in 0..p {
            row[i] = (0..=i).map(|k| l[(i, k)] * z[k]).sum();
        }
    }
    let scov = SampleCov::from_data(&data, false, false)?;
    Ok(SimulatedData { data, scov })
}
