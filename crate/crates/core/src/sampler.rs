//! Metropolis–Hastings over graphs with single-edge flips, plus chain
//! summaries: edge inclusion frequencies, the median probability model and
//! degree/rank posteriors.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::sync::Mutex;
use std::time::Instant;

use lru::LruCache;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_mle, PrecisionEstimate, SampleCov};
use crate::graph::{max_edges, pair_from_rank, Graph};
use crate::linalg::Matrix;
use crate::posterior::{score_graph, PosteriorConfig};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainInit {
    Empty,
    /// Each edge present independently with probability `q0`.
    Random {
        q0: f64,
    },
    Given {
        graph: Graph,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    /// Flip one of the `p(p−1)/2` positions chosen uniformly.
    Uniform,
    /// Add or remove with probability ½ each, then pick uniformly among the
    /// possible moves; corrected by the Hastings ratio.
    AddRemove,
    /// The same moves treated as symmetric. Its stationary law is not the
    /// posterior: each edge is further penalised by about `|E|/(R̄−|E|)`.
    AddRemoveUncorrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Total iterations, burn-in included.
    pub n_iter: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub thin: usize,
    pub init: ChainInit,
    pub proposal: Proposal,
    /// `None` leaves the score cache unbounded; `Some(0)` disables it.
    pub cache_cap: Option<usize>,
    /// Re-fit the current state from a cold start every this many
    /// iterations and count disagreements with the warm fit.
    pub verify_warm_every: Option<usize>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_iter: 20_000,
            burn_in: 4_000,
            seed: 0,
            thin: 1,
            init: ChainInit::Empty,
            proposal: Proposal::Uniform,
            cache_cap: None,
            verify_warm_every: None,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in > self.n_iter {
            return Err(Error::InvalidConfig(format!(
                "burn_in {} exceeds n_iter {}",
                self.burn_in, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if let ChainInit::Random { q0 } = self.init {
            if !(0.0..=1.0).contains(&q0) {
                return Err(Error::InvalidConfig(format!(
                    "initial edge probability {q0} outside [0,1]"
                )));
            }
        }
        if self.verify_warm_every == Some(0) {
            return Err(Error::InvalidConfig(
                "verify_warm_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Something that assigns an unnormalised log posterior to graphs.
pub trait Target<T: Real> {
    fn p(&self) -> usize;

    /// Log score of `g` and, when a fit was performed, the precision
    /// estimate to warm-start the next fit from.
    fn score(
        &self,
        g: &Graph,
        warm: Option<&PrecisionEstimate<T>>,
    ) -> Result<(T, Option<PrecisionEstimate<T>>)>;

    /// Cold refit used to audit warm starts. `None` when not applicable.
    fn cold_fit(&self, _g: &Graph) -> Result<Option<PrecisionEstimate<T>>> {
        Ok(None)
    }
}

/// The marginal posterior score of [`score_graph`].
#[derive(Debug, Clone)]
pub struct PosteriorTarget<'a, T> {
    pub scov: &'a SampleCov<T>,
    pub cfg: &'a PosteriorConfig<T>,
}

impl<T: Real> Target<T> for PosteriorTarget<'_, T> {
    fn p(&self) -> usize {
        self.scov.p()
    }

    fn score(
        &self,
        g: &Graph,
        warm: Option<&PrecisionEstimate<T>>,
    ) -> Result<(T, Option<PrecisionEstimate<T>>)> {
        let s = score_graph(g, self.scov, self.cfg, warm)?;
        if s.log_score == T::neg_infinity() {
            return Ok((s.log_score, None));
        }
        Ok((s.log_score, Some(s.omega_hat)))
    }

    fn cold_fit(&self, g: &Graph) -> Result<Option<PrecisionEstimate<T>>> {
        fit_mle(self.scov, g, &self.cfg.mle).map(Some)
    }
}

/// Constant target on `p` vertices.
#[derive(Debug, Clone, Copy)]
pub struct FlatTarget {
    pub p: usize,
}

impl<T: Real> Target<T> for FlatTarget {
    fn p(&self) -> usize {
        self.p
    }

    fn score(
        &self,
        _g: &Graph,
        _warm: Option<&PrecisionEstimate<T>>,
    ) -> Result<(T, Option<PrecisionEstimate<T>>)> {
        Ok((T::zero(), None))
    }
}

/// Log scores keyed by graph, safe to share between chains.
pub struct ScoreCache<T> {
    inner: Option<Mutex<LruCache<Graph, T>>>,
}

impl<T: Real> ScoreCache<T> {
    pub fn new(cap: Option<usize>) -> Self {
        let inner = match cap {
            None => Some(LruCache::unbounded()),
            Some(c) => NonZeroUsize::new(c).map(LruCache::new),
        };
        ScoreCache {
            inner: inner.map(Mutex::new),
        }
    }

    pub fn get(&self, g: &Graph) -> Option<T> {
        let m = self.inner.as_ref()?;
        m.lock().expect("score cache poisoned").get(g).copied()
    }

    pub fn insert(&self, g: &Graph, v: T) {
        if let Some(m) = &self.inner {
            m.lock().expect("score cache poisoned").put(g.clone(), v);
        }
    }

    pub fn len(&self) -> usize {
        self.inner
            .as_ref()
            .map_or(0, |m| m.lock().expect("score cache poisoned").len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample<T> {
    pub iter: usize,
    pub graph_hash: String,
    pub size: usize,
    pub log_score: T,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult<T> {
    pub p: usize,
    pub samples: Vec<ChainSample<T>>,
    pub graphs: BTreeMap<String, Graph>,
    pub acceptance_rate: f64,
    pub edge_freq: Matrix<f64>,
    pub n_fits: usize,
    pub cache_hits: usize,
    pub warm_mismatches: usize,
    pub wall_time_ns: u128,
}

struct Proposed {
    graph: Graph,
    log_hastings: f64,
}

fn propose<R: Rng>(g: &Graph, kind: Proposal, rng: &mut R) -> Option<Proposed> {
    let p = g.p();
    let r = max_edges(p);
    match kind {
        Proposal::Uniform => {
            let (i, j) = pair_from_rank(p, rng.random_range(0..r));
            Some(Proposed {
                graph: g.flip_edge(i, j).expect("rank maps to a valid pair"),
                log_hastings: 0.0,
            })
        }
        Proposal::AddRemove | Proposal::AddRemoveUncorrected => {
            let add = rng.random::<bool>();
            let m = g.n_edges();
            if (add && m == r) || (!add && m == 0) {
                return None;
            }
            let (i, j) = if add {
                let k = rng.random_range(0..r - m);
                (0..r)
                    .map(|t| pair_from_rank(p, t))
                    .filter(|&(i, j)| !g.has_edge(i, j))
                    .nth(k)
                    .expect("k indexes a non-edge")
            } else {
                g.edges()[rng.random_range(0..m)]
            };
            let graph = g.flip_edge(i, j).expect("valid pair");
            let m2 = graph.n_edges();
            // q(G|G′)/q(G′|G)
            let log_hastings = if kind == Proposal::AddRemoveUncorrected {
                0.0
            } else if add {
                ((r - m) as f64).ln() - (m2 as f64).ln()
            } else {
                (m as f64).ln() - ((r - m2) as f64).ln()
            };
            Some(Proposed {
                graph,
                log_hastings,
            })
        }
    }
}

fn initial_graph<R: Rng>(p: usize, init: &ChainInit, rng: &mut R) -> Result<Graph> {
    match init {
        ChainInit::Empty => Ok(Graph::empty(p)),
        ChainInit::Random { q0 } => {
            let edges: Vec<(usize, usize)> = (0..max_edges(p))
                .map(|k| pair_from_rank(p, k))
                .filter(|_| rng.random::<f64>() < *q0)
                .collect();
            Graph::from_edges(p, edges)
        }
        ChainInit::Given { graph } => {
            if graph.p() != p {
                return Err(Error::DimensionMismatch(format!(
                    "initial graph has {} vertices, target has {p}",
                    graph.p()
                )));
            }
            Ok(graph.clone())
        }
    }
}

/// Runs one chain with its own score cache.
pub fn run_chain_on<T: Real>(target: &impl Target<T>, mcmc: &McmcConfig) -> Result<ChainResult<T>> {
    let cache = ScoreCache::new(mcmc.cache_cap);
    run_chain_with_cache(target, mcmc, &cache)
}

/// Runs one chain on the marginal posterior of `scov`.
pub fn run_chain<T: Real>(
    scov: &SampleCov<T>,
    cfg: &PosteriorConfig<T>,
    mcmc: &McmcConfig,
) -> Result<ChainResult<T>> {
    cfg.validate()?;
    run_chain_on(&PosteriorTarget { scov, cfg }, mcmc)
}

pub fn run_chain_with_cache<T: Real>(
    target: &impl Target<T>,
    mcmc: &McmcConfig,
    cache: &ScoreCache<T>,
) -> Result<ChainResult<T>> {
    mcmc.validate()?;
    let p = target.p();
    if p < 2 {
        return Err(Error::InvalidConfig(format!(
            "graph sampling needs p >= 2, got {p}"
        )));
    }
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(mcmc.seed);

    let mut current = initial_graph(p, &mcmc.init, &mut rng)?;
    let (mut current_score, mut warm) = target.score(&current, None)?;
    if current_score == T::neg_infinity() {
        return Err(Error::InvalidConfig(
            "initial graph has zero prior mass".into(),
        ));
    }
    cache.insert(&current, current_score);
    // whether `warm` is the fit of `current` itself rather than a neighbour
    let mut warm_is_current = warm.is_some();

    let mut n_fits = 1usize;
    let mut cache_hits = 0usize;
    let mut warm_mismatches = 0usize;
    let mut accepted_total = 0usize;
    let mut samples = Vec::new();
    let mut graphs = BTreeMap::new();
    let mut counts = vec![0usize; p * p];

    for iter in 0..mcmc.n_iter {
        let proposal = propose(&current, mcmc.proposal, &mut rng);
        let u: f64 = rng.random();
        let mut accepted = false;
        if let Some(Proposed {
            graph,
            log_hastings,
        }) = proposal
        {
            let (score, fit) = match cache.get(&graph) {
                Some(s) => {
                    cache_hits += 1;
                    (s, None)
                }
                None => {
                    let (s, fit) = target.score(&graph, warm.as_ref())?;
                    n_fits += 1;
                    cache.insert(&graph, s);
                    (s, fit)
                }
            };
            if score > T::neg_infinity() {
                let log_ratio = (score - current_score).as_f64() + log_hastings;
                if u.ln() < log_ratio {
                    accepted = true;
                    accepted_total += 1;
                    current = graph;
                    current_score = score;
                    warm_is_current = fit.is_some();
                    if fit.is_some() {
                        warm = fit;
                    }
                }
            }
        }

        if let Some(k) = mcmc.verify_warm_every {
            if (iter + 1) % k == 0 && warm_is_current {
                if let (Some(w), Some(cold)) = (&warm, target.cold_fit(&current)?) {
                    let tol = w.omega_hat.frobenius_norm() * T::lit(1e-6);
                    if w.omega_hat.max_abs_diff(&cold.omega_hat) > tol {
                        warm_mismatches += 1;
                        log::warn!("warm and cold fits disagree at iteration {}", iter + 1);
                    }
                }
            }
        }

        if iter >= mcmc.burn_in && (iter - mcmc.burn_in) % mcmc.thin == 0 {
            let hash = current.hash_hex();
            for &(i, j) in current.edges() {
                counts[i * p + j] += 1;
            }
            graphs
                .entry(hash.clone())
                .or_insert_with(|| current.clone());
            samples.push(ChainSample {
                iter,
                graph_hash: hash,
                size: current.n_edges(),
                log_score: current_score,
                accepted,
            });
        }
    }

    let edge_freq = freq_from_counts(p, &counts, samples.len());
    Ok(ChainResult {
        p,
        acceptance_rate: if mcmc.n_iter == 0 {
            0.0
        } else {
            accepted_total as f64 / mcmc.n_iter as f64
        },
        samples,
        graphs,
        edge_freq,
        n_fits,
        cache_hits,
        warm_mismatches,
        wall_time_ns: start.elapsed().as_nanos(),
    })
}

fn freq_from_counts(p: usize, upper: &[usize], n: usize) -> Matrix<f64> {
    let mut f = Matrix::zeros(p, p);
    if n == 0 {
        return f;
    }
    for i in 0..p {
        for j in (i + 1)..p {
            let v = upper[i * p + j] as f64 / n as f64;
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    f
}

impl<T: Real> ChainResult<T> {
    /// Retained graphs in order.
    pub fn sample_graphs(&self) -> impl Iterator<Item = &Graph> + '_ {
        self.samples.iter().map(|s| &self.graphs[&s.graph_hash])
    }
}

/// Empirical inclusion frequency of every edge among retained samples.
pub fn edge_inclusion<T: Real>(chain: &ChainResult<T>) -> Result<Matrix<f64>> {
    if chain.samples.is_empty() {
        return Err(Error::EmptyChain);
    }
    let p = chain.p;
    let mut counts = vec![0usize; p * p];
    for g in chain.sample_graphs() {
        for &(i, j) in g.edges() {
            counts[i * p + j] += 1;
        }
    }
    Ok(freq_from_counts(p, &counts, chain.samples.len()))
}

/// Edges whose inclusion frequency is strictly above `threshold`.
pub fn median_probability_model(freq: &Matrix<f64>, threshold: f64) -> Graph {
    let p = freq.nrows();
    let edges = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .filter(|&(i, j)| freq[(i, j)] > threshold);
    Graph::from_edges(p, edges).expect("pairs are in range")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreePosterior {
    /// `degree[v][d]` = share of samples in which vertex `v` has degree `d`.
    pub degree: Vec<Vec<f64>>,
    /// `rank[v][k]` = share of samples in which vertex `v` has rank
    /// `1 + k/2` (1 = highest degree, ties take the average rank).
    pub rank: Vec<Vec<f64>>,
    pub mean_degree: Vec<f64>,
    pub mean_rank: Vec<f64>,
}

impl DegreePosterior {
    pub fn rank_value(k: usize) -> f64 {
        1.0 + k as f64 / 2.0
    }
}

/// Ranks by decreasing degree, ties receiving their average rank.
pub fn degree_ranks(degrees: &[usize]) -> Vec<f64> {
    degrees
        .iter()
        .map(|&d| {
            let above = degrees.iter().filter(|&&x| x > d).count();
            let tied = degrees.iter().filter(|&&x| x == d).count();
            above as f64 + (tied as f64 + 1.0) / 2.0
        })
        .collect()
}

pub fn degree_posterior<T: Real>(chain: &ChainResult<T>) -> Result<DegreePosterior> {
    if chain.samples.is_empty() {
        return Err(Error::EmptyChain);
    }
    let p = chain.p;
    let n = chain.samples.len() as f64;
    let mut degree = vec![vec![0.0; p]; p];
    let mut rank = vec![vec![0.0; 2 * p - 1]; p];
    let mut mean_degree = vec![0.0; p];
    let mut mean_rank = vec![0.0; p];
    for g in chain.sample_graphs() {
        let d = g.degrees();
        let r = degree_ranks(&d);
        for v in 0..p {
            degree[v][d[v]] += 1.0 / n;
            rank[v][((r[v] - 1.0) * 2.0).round() as usize] += 1.0 / n;
            mean_degree[v] += d[v] as f64 / n;
            mean_rank[v] += r[v] / n;
        }
    }
    Ok(DegreePosterior {
        degree,
        rank,
        mean_degree,
        mean_rank,
    })
}
