//! Graph-constrained maximum likelihood estimation of a precision matrix,
//! the Gaussian log-likelihood, and the concave objective `h`.
//!
//! The MLE over the cone of positive definite matrices supported on a graph
//! is characterised by moment matching: the inverse of the estimate agrees
//! with the sample covariance on the diagonal and on every edge, while the
//! estimate itself vanishes off the edge set. It is computed by iterative
//! proportional scaling with one block per edge (and one per isolated
//! vertex), each block update being solved exactly while the covariance
//! `W = Ω⁻¹` is kept in sync by a rank-two correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Sample covariance `Σ̂ = n⁻¹ XᵀX` together with the sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCov<T> {
    sigma_hat: Matrix<T>,
    n: usize,
}

impl<T: Real> SampleCov<T> {
    /// Validates symmetry, finiteness and a strictly positive diagonal.
    pub fn new(sigma_hat: Matrix<T>, n: usize) -> Result<Self> {
        if !sigma_hat.is_square() {
            return Err(Error::DimensionMismatch(
                "sample covariance must be square".into(),
            ));
        }
        if sigma_hat.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(
                "sample covariance has non-finite entries".into(),
            ));
        }
        if !sigma_hat.is_symmetric(T::lit(1e-10)) {
            return Err(Error::InvalidConfig(
                "sample covariance is not symmetric".into(),
            ));
        }
        if let Some(i) = (0..sigma_hat.nrows()).find(|&i| !(sigma_hat[(i, i)] > T::zero())) {
            return Err(Error::InvalidConfig(format!(
                "sample covariance has non-positive variance at index {i}"
            )));
        }
        let mut sigma_hat = sigma_hat;
        sigma_hat.symmetrize();
        Ok(SampleCov { sigma_hat, n })
    }

    /// `n⁻¹ XᵀX` from an `n × p` data matrix, optionally centering and
    /// scaling each column to unit variance first.
    pub fn from_data(x: &Matrix<T>, center: bool, standardize: bool) -> Result<Self> {
        let (n, p) = (x.nrows(), x.ncols());
        if n == 0 || p == 0 {
            return Err(Error::DimensionMismatch("empty data matrix".into()));
        }
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "data contain NaN or infinite values".into(),
            ));
        }
        let nn = T::from_usize_lossy(n);
        let mut xc = x.clone();
        if center {
            for j in 0..p {
                let mean = (0..n).map(|i| xc[(i, j)]).sum::<T>() / nn;
                for i in 0..n {
                    xc[(i, j)] -= mean;
                }
            }
        }
        if standardize {
            for j in 0..p {
                let sd = ((0..n).map(|i| xc[(i, j)] * xc[(i, j)]).sum::<T>() / nn).sqrt();
                if sd > T::zero() {
                    for i in 0..n {
                        xc[(i, j)] /= sd;
                    }
                }
            }
        }
        let mut s = Matrix::zeros(p, p);
        for i in 0..n {
            let row = xc.row(i);
            for a in 0..p {
                let ra = row[a];
                for b in a..p {
                    s[(a, b)] += ra * row[b];
                }
            }
        }
        for a in 0..p {
            for b in a..p {
                let v = s[(a, b)] / nn;
                s[(a, b)] = v;
                s[(b, a)] = v;
            }
        }
        Self::new(s, n)
    }

    #[inline]
    pub fn sigma_hat(&self) -> &Matrix<T> {
        &self.sigma_hat
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.sigma_hat.nrows()
    }
}

/// Options for [`fit_mle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleConfig<T> {
    /// Convergence tolerance on the largest moment-matching violation.
    pub tol: T,
    /// Maximum number of full sweeps.
    pub max_iter: usize,
    /// Optional eigenvalue bound ξ > 1 applied after convergence.
    pub sieve_xi: Option<T>,
}

impl<T: Real> Default for MleConfig<T> {
    fn default() -> Self {
        MleConfig {
            tol: T::default_tol(),
            max_iter: 10_000,
            sieve_xi: None,
        }
    }
}

impl<T: Real> MleConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidConfig(
                "MLE tolerance must be positive".into(),
            ));
        }
        if let Some(xi) = self.sieve_xi {
            if !(xi > T::one()) {
                return Err(Error::InvalidConfig("sieve bound must exceed 1".into()));
            }
        }
        Ok(())
    }
}

/// Output of [`fit_mle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionEstimate<T> {
    pub omega_hat: Matrix<T>,
    pub converged: bool,
    pub iterations: usize,
    pub max_violation: T,
}

impl<T: Real> PrecisionEstimate<T> {
    /// Turns a flagged non-converged estimate into [`Error::NoConvergence`].
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NoConvergence {
                iterations: self.iterations,
                max_violation: self.max_violation.as_f64(),
            })
        }
    }
}

/// Largest `|(Ω⁻¹)_ij − Σ̂_ij|` over the diagonal and edges.
pub fn kkt_violation<T: Real>(w: &Matrix<T>, s: &Matrix<T>, g: &Graph) -> T {
    let diag = (0..g.p()).map(|i| (w[(i, i)] - s[(i, i)]).abs());
    let off = g
        .edges()
        .iter()
        .map(|&(i, j)| (w[(i, j)] - s[(i, j)]).abs());
    diag.chain(off).fold(T::zero(), T::max)
}

#[derive(Debug, Clone, Copy)]
enum Block {
    Vertex(usize),
    Edge(usize, usize),
}

fn blocks(g: &Graph) -> Vec<Block> {
    let covered: Vec<bool> = (0..g.p()).map(|i| g.degree(i) > 0).collect();
    let mut out: Vec<Block> = (0..g.p())
        .filter(|&i| !covered[i])
        .map(Block::Vertex)
        .collect();
    out.extend(g.edges().iter().map(|&(i, j)| Block::Edge(i, j)));
    out
}

fn block_violation<T: Real>(w: &Matrix<T>, s: &Matrix<T>, block: Block) -> T {
    match block {
        Block::Vertex(i) => (w[(i, i)] - s[(i, i)]).abs(),
        Block::Edge(i, j) => (w[(i, i)] - s[(i, i)])
            .abs()
            .max((w[(i, j)] - s[(i, j)]).abs())
            .max((w[(j, j)] - s[(j, j)]).abs()),
    }
}

/// One exact block update of `Ω` with the matching rank-one/two update of `W`.
fn update_block<T: Real>(
    s: &Matrix<T>,
    omega: &mut Matrix<T>,
    w: &mut Matrix<T>,
    block: Block,
    buf: &mut [T],
) {
    let p = omega.nrows();
    match block {
        Block::Vertex(i) => {
            let a = w[(i, i)];
            let t = s[(i, i)];
            omega[(i, i)] += T::one() / t - T::one() / a;
            let coef = (t - a) / (a * a);
            buf[..p].copy_from_slice(w.row(i));
            for r in 0..p {
                let cr = coef * buf[r];
                if cr == T::zero() {
                    continue;
                }
                let row = w.row_mut(r);
                for (c, x) in row.iter_mut().enumerate() {
                    *x += cr * buf[c];
                }
            }
        }
        Block::Edge(i, j) => {
            let (a11, a12, a22) = (w[(i, i)], w[(i, j)], w[(j, j)]);
            let (s11, s12, s22) = (s[(i, i)], s[(i, j)], s[(j, j)]);
            let det_a = a11 * a22 - a12 * a12;
            let det_s = s11 * s22 - s12 * s12;
            // Ω_CC += S_CC⁻¹ − W_CC⁻¹
            omega[(i, i)] += s22 / det_s - a22 / det_a;
            omega[(j, j)] += s11 / det_s - a11 / det_a;
            let d12 = -s12 / det_s + a12 / det_a;
            omega[(i, j)] += d12;
            omega[(j, i)] += d12;
            // M = A⁻¹ (S − A) A⁻¹
            let (i11, i12, i22) = (a22 / det_a, -a12 / det_a, a11 / det_a);
            let (e11, e12, e22) = (s11 - a11, s12 - a12, s22 - a22);
            // X = A⁻¹ E
            let x11 = i11 * e11 + i12 * e12;
            let x12 = i11 * e12 + i12 * e22;
            let x21 = i12 * e11 + i22 * e12;
            let x22 = i12 * e12 + i22 * e22;
            // M = X A⁻¹
            let m11 = x11 * i11 + x12 * i12;
            let m12 = x11 * i12 + x12 * i22;
            let m22 = x21 * i12 + x22 * i22;
            let (ui, uj) = buf.split_at_mut(p);
            ui.copy_from_slice(w.row(i));
            uj[..p].copy_from_slice(w.row(j));
            for r in 0..p {
                let (a, b) = (ui[r], uj[r]);
                let ca = m11 * a + m12 * b;
                let cb = m12 * a + m22 * b;
                let row = w.row_mut(r);
                for ((x, &a), &b) in row.iter_mut().zip(ui.iter()).zip(uj.iter()) {
                    *x += ca * a + cb * b;
                }
            }
        }
    }
}

/// Sweeps between exact re-inversions of the IPS iterate.
const REFRESH_EVERY: usize = 8;
/// Blocks whose violation is below this fraction of the current maximum are
/// left for a later sweep.
const SKIP_RATIO: f64 = 0.1;

/// Graph-constrained MLE from a cold start `diag(1/Σ̂_ii)`.
pub fn fit_mle<T: Real>(
    scov: &SampleCov<T>,
    g: &Graph,
    cfg: &MleConfig<T>,
) -> Result<PrecisionEstimate<T>> {
    fit_mle_warm(scov, g, cfg, None)
}

/// Graph-constrained MLE, optionally warm-started from `init`. Entries of
/// `init` off the edge set are zeroed; if that leaves a matrix that is not
/// positive definite the cold start is used instead.
pub fn fit_mle_warm<T: Real>(
    scov: &SampleCov<T>,
    g: &Graph,
    cfg: &MleConfig<T>,
    init: Option<&Matrix<T>>,
) -> Result<PrecisionEstimate<T>> {
    cfg.validate()?;
    let p = scov.p();
    if g.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} vertices, covariance is {p}x{p}",
            g.p()
        )));
    }
    let s = scov.sigma_hat();
    let s_chol = s
        .cholesky()
        .map_err(|_| Error::not_pd("sample covariance is singular"))?;

    if g.n_edges() == g.max_edges() {
        let omega_hat = s_chol.inverse();
        return finish(omega_hat, s, g, cfg, 0);
    }

    let cold = || Matrix::from_diag(&s.diag().iter().map(|&d| T::one() / d).collect::<Vec<_>>());
    let mut omega = match init {
        Some(m) if m.nrows() == p => {
            let mut m = m.clone();
            for i in 0..p {
                for j in 0..p {
                    if i != j && !g.has_edge(i, j) {
                        m[(i, j)] = T::zero();
                    }
                }
            }
            if m.is_positive_definite() {
                m
            } else {
                cold()
            }
        }
        _ => cold(),
    };

    let blocks = blocks(g);
    let mut buf = vec![T::zero(); 2 * p];
    let mut sweeps = 0;
    let invert = |om: &Matrix<T>| om.spd_inverse().map_err(|_| Error::not_pd("IPS iterate"));
    let mut w = invert(&omega)?;
    let mut fresh = true;
    loop {
        let viol = kkt_violation(&w, s, g);
        if viol <= cfg.tol && !fresh {
            // confirm against an exact inverse before stopping
            w = invert(&omega)?;
            fresh = true;
            continue;
        }
        if viol <= cfg.tol || sweeps >= cfg.max_iter || !viol.is_finite() {
            break;
        }
        if sweeps % REFRESH_EVERY == REFRESH_EVERY - 1 && !fresh {
            w = invert(&omega)?;
        }
        fresh = false;
        // blocks already matched to well within tol contribute nothing useful
        let skip = (cfg.tol * T::lit(0.25)).max(viol * T::lit(SKIP_RATIO));
        for &b in &blocks {
            if block_violation(&w, s, b) > skip {
                update_block(s, &mut omega, &mut w, b, &mut buf);
            }
        }
        sweeps += 1;
    }
    finish(omega, s, g, cfg, sweeps)
}

fn finish<T: Real>(
    mut omega: Matrix<T>,
    s: &Matrix<T>,
    g: &Graph,
    cfg: &MleConfig<T>,
    sweeps: usize,
) -> Result<PrecisionEstimate<T>> {
    omega.symmetrize();
    if let Some(xi) = cfg.sieve_xi {
        omega = apply_sieve(&omega, g, xi)?;
    }
    let w = omega.spd_inverse()?;
    let max_violation = kkt_violation(&w, s, g);
    Ok(PrecisionEstimate {
        omega_hat: omega,
        converged: max_violation <= cfg.tol,
        iterations: sweeps,
        max_violation,
    })
}

/// Clips eigenvalues into `[1/ξ, ξ]` and restores the zero pattern of the
/// graph. A matrix already inside the band is returned unchanged.
fn apply_sieve<T: Real>(omega: &Matrix<T>, g: &Graph, xi: T) -> Result<Matrix<T>> {
    let eig = omega.sym_eigen();
    let lo = T::one() / xi;
    if eig.min() >= lo && eig.max() <= xi {
        return Ok(omega.clone());
    }
    let mut clipped = eig.reconstruct_with(|l| l.max(lo).min(xi));
    let p = g.p();
    for i in 0..p {
        for j in 0..p {
            if i != j && !g.has_edge(i, j) {
                clipped[(i, j)] = T::zero();
            }
        }
    }
    if !clipped.is_positive_definite() {
        return Err(Error::not_pd("sieve projection"));
    }
    Ok(clipped)
}

/// `log L_n(Ω) = −(np/2) log 2π + (n/2) log|Ω| − (n/2) tr(Σ̂Ω)`.
pub fn log_likelihood<T: Real>(omega: &Matrix<T>, scov: &SampleCov<T>) -> Result<T> {
    if omega.nrows() != scov.p() || !omega.is_square() {
        return Err(Error::DimensionMismatch(
            "precision and covariance sizes differ".into(),
        ));
    }
    if scov.n() == 0 {
        return Ok(T::zero());
    }
    let log_det = omega.spd_log_det()?;
    let n = T::from_usize_lossy(scov.n());
    let p = T::from_usize_lossy(scov.p());
    let half_n = n / T::lit(2.0);
    Ok(-half_n * p * (T::TAU()).ln() + half_n * log_det
        - half_n * scov.sigma_hat().trace_of_product(omega))
}

/// `h(Ω) = log|Ω| − tr(Ω̂⁻¹ Ω)`.
pub fn h_value<T: Real>(omega: &Matrix<T>, omega_hat: &Matrix<T>) -> Result<T> {
    if omega.nrows() != omega_hat.nrows() {
        return Err(Error::DimensionMismatch("h: sizes differ".into()));
    }
    let inv = omega_hat.spd_inverse()?;
    Ok(omega.spd_log_det()? - inv.trace_of_product(omega))
}
