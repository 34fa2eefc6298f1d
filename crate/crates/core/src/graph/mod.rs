//! Undirected graphs on vertices `0..p`, the free-parameter index of a
//! graph-constrained precision matrix, and chordal-graph machinery.

mod chordal;

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub use chordal::{
    clique_decomposition, is_decomposable, mcs_elimination_order, perfect_elimination_order,
    CliqueTree,
};

/// Simple undirected graph. Edges are kept sorted lexicographically with
/// `i < j`; equality and hashing only look at `(p, edges)`.
#[derive(Clone)]
pub struct Graph {
    p: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<bool>,
}

impl Graph {
    pub fn empty(p: usize) -> Self {
        Graph {
            p,
            edges: Vec::new(),
            adj: vec![false; p * p],
        }
    }

    pub fn complete(p: usize) -> Self {
        let edges = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j)));
        Self::from_edges(p, edges).expect("complete graph edges are valid")
    }

    /// Builds a graph from pairs in any orientation. Duplicates are merged.
    pub fn from_edges(p: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(p);
        for (a, b) in pairs {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i == j || j >= p {
                return Err(Error::InvalidPair(a, b, p));
            }
            if !g.adj[i * p + j] {
                g.adj[i * p + j] = true;
                g.adj[j * p + i] = true;
                g.edges.push((i, j));
            }
        }
        g.edges.sort_unstable();
        Ok(g)
    }

    /// Path `0 - 1 - ... - (p-1)`.
    pub fn path(p: usize) -> Self {
        Self::band(p, 1)
    }

    /// Band graph with edges `|i - j| <= width`.
    pub fn band(p: usize, width: usize) -> Self {
        let edges = (0..p).flat_map(|i| ((i + 1)..p.min(i + width + 1)).map(move |j| (i, j)));
        Self::from_edges(p, edges).expect("band edges are valid")
    }

    /// Star centred at vertex 0.
    pub fn star(p: usize) -> Self {
        Self::from_edges(p, (1..p).map(|j| (0, j))).expect("star edges are valid")
    }

    /// Off-diagonal support of a square matrix, `|m_ij| > threshold`.
    pub fn from_support<T: Real>(m: &Matrix<T>, threshold: T) -> Self {
        let p = m.nrows();
        let mut pairs = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if m[(i, j)].abs() > threshold || m[(j, i)].abs() > threshold {
                    pairs.push((i, j));
                }
            }
        }
        Self::from_edges(p, pairs).expect("support pairs are valid")
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `C(p, 2)`, the number of vertex pairs.
    #[inline]
    pub fn max_edges(&self) -> usize {
        max_edges(self.p)
    }

    /// `p + |E|`: free entries of a precision matrix supported on the graph.
    #[inline]
    pub fn n_free_params(&self) -> usize {
        self.p + self.edges.len()
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adj[i * self.p + j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.p).filter(move |&j| self.adj[i * self.p + j])
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i * self.p..(i + 1) * self.p]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.p).map(|i| self.degree(i)).collect()
    }

    /// Copy with the pair `(i, j)` toggled. Requires `i < j < p`.
    pub fn flip_edge(&self, i: usize, j: usize) -> Result<Graph> {
        if i >= j || j >= self.p {
            return Err(Error::InvalidPair(i, j, self.p));
        }
        let mut g = self.clone();
        let present = g.adj[i * g.p + j];
        g.adj[i * g.p + j] = !present;
        g.adj[j * g.p + i] = !present;
        match g.edges.binary_search(&(i, j)) {
            Ok(pos) => {
                g.edges.remove(pos);
            }
            Err(pos) => g.edges.insert(pos, (i, j)),
        }
        Ok(g)
    }

    /// Is every pair in `vs` adjacent?
    pub fn is_clique(&self, vs: &[usize]) -> bool {
        vs.iter()
            .enumerate()
            .all(|(a, &u)| vs[a + 1..].iter().all(|&v| self.has_edge(u, v)))
    }

    /// `G ⊆ other` (same vertex set, edge subset).
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.p == other.p && self.edges.iter().all(|&(i, j)| other.has_edge(i, j))
    }

    /// 0/1 adjacency matrix.
    pub fn adjacency<T: Real>(&self) -> Matrix<T> {
        Matrix::from_fn(self.p, self.p, |i, j| {
            if self.has_edge(i, j) {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Relabels vertices: vertex `perm[k]` becomes vertex `k`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        let mut pos = vec![0; self.p];
        for (k, &v) in perm.iter().enumerate() {
            pos[v] = k;
        }
        Graph::from_edges(self.p, self.edges.iter().map(|&(i, j)| (pos[i], pos[j])))
            .expect("permutation preserves validity")
    }

    pub fn param_index(&self) -> ParamIndex {
        ParamIndex::new(self)
    }

    /// Stable 64-bit FNV-1a hash over `p` and the sorted edge list, used as a
    /// portable identifier in chain logs.
    pub fn canonical_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed(self.p as u64);
        for &(i, j) in &self.edges {
            feed(i as u64);
            feed(j as u64);
        }
        h
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.canonical_hash())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Graph> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Adjacency as 0/1 CSV, one row per vertex.
    pub fn to_adjacency_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.p {
            let row: Vec<&str> = (0..self.p)
                .map(|j| if self.has_edge(i, j) { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_adjacency_csv(s: &str) -> Result<Graph> {
        let rows: Vec<Vec<u8>> = s
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|c| match c.trim() {
                        "0" => Ok(0),
                        "1" => Ok(1),
                        other => Err(Error::Parse(format!("bad adjacency entry {other:?}"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Parse("adjacency matrix is not square".into()));
        }
        let mut pairs = Vec::new();
        for i in 0..p {
            if rows[i][i] != 0 {
                return Err(Error::Parse(format!("self-loop at vertex {i}")));
            }
            for j in (i + 1)..p {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Parse(format!("asymmetric entry ({i}, {j})")));
                }
                if rows[i][j] == 1 {
                    pairs.push((i, j));
                }
            }
        }
        Graph::from_edges(p, pairs)
    }
}

/// `C(p, 2)`.
#[inline]
pub fn max_edges(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Lexicographic rank of the pair `(i, j)`, `i < j`, among all `C(p, 2)` pairs.
#[inline]
pub fn pair_rank(p: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < p);
    i * p - i * (i + 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_rank`].
pub fn pair_from_rank(p: usize, mut k: usize) -> (usize, usize) {
    for i in 0..p {
        let row = p - i - 1;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    panic!("pair rank out of range");
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.edges == other.edges
    }
}

impl Eq for Graph {}

impl Hash for Graph {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.p.hash(state);
        self.edges.hash(state);
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(p={}, edges={:?})", self.p, self.edges)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    p: usize,
    edges: Vec<[usize; 2]>,
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphRepr {
            p: self.p,
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GraphRepr::deserialize(d)?;
        Graph::from_edges(r.p, r.edges.into_iter().map(|[i, j]| (i, j)))
            .map_err(serde::de::Error::custom)
    }
}

/// Ordered free positions of a precision matrix on a graph: the `p` diagonal
/// cells first, then the edges in lexicographic order.
#[derive(Debug, Clone)]
pub struct ParamIndex {
    p: usize,
    positions: Vec<(usize, usize)>,
    lookup: Vec<usize>,
}

impl ParamIndex {
    pub fn new(g: &Graph) -> Self {
        let p = g.p();
        let mut positions: Vec<(usize, usize)> = (0..p).map(|i| (i, i)).collect();
        positions.extend_from_slice(g.edges());
        let mut lookup = vec![usize::MAX; p * p];
        for (k, &(i, j)) in positions.iter().enumerate() {
            lookup[i * p + j] = k;
            lookup[j * p + i] = k;
        }
        ParamIndex {
            p,
            positions,
            lookup,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn position(&self, k: usize) -> (usize, usize) {
        self.positions[k]
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    /// Index of the matrix cell `(i, j)` (either orientation), if free.
    #[inline]
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        match self.lookup[i * self.p + j] {
            usize::MAX => None,
            k => Some(k),
        }
    }

    /// Free entries of a symmetric matrix in index order.
    pub fn gather<T: Real>(&self, m: &Matrix<T>) -> Vec<T> {
        self.positions.iter().map(|&(i, j)| m[(i, j)]).collect()
    }

    /// Symmetric matrix with the given free entries and zeros elsewhere.
    pub fn scatter<T: Real>(&self, values: &[T]) -> Matrix<T> {
        assert_eq!(values.len(), self.len());
        let mut m = Matrix::zeros(self.p, self.p);
        for (&(i, j), &v) in self.positions.iter().zip(values) {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

/// Checks that `m` vanishes (within `tol`) at every non-edge of `g`.
pub fn check_support<T: Real>(m: &Matrix<T>, g: &Graph, tol: T) -> Result<()> {
    let p = g.p();
    if m.nrows() != p || m.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix for a graph on {p} vertices",
            m.nrows(),
            m.ncols()
        )));
    }
    for i in 0..p {
        for j in (i + 1)..p {
            if !g.has_edge(i, j) && (m[(i, j)].abs() > tol || m[(j, i)].abs() > tol) {
                return Err(Error::SupportViolation(i, j));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_examples() {
        let g = Graph::empty(3).flip_edge(0, 1).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.flip_edge(0, 1).unwrap(), Graph::empty(3));
        let k = Graph::complete(3).flip_edge(1, 2).unwrap();
        assert_eq!(k.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn flip_rejects_bad_pairs() {
        let g = Graph::empty(3);
        assert_eq!(g.flip_edge(1, 1), Err(Error::InvalidPair(1, 1, 3)));
        assert_eq!(g.flip_edge(2, 1), Err(Error::InvalidPair(2, 1, 3)));
        assert_eq!(g.flip_edge(0, 3), Err(Error::InvalidPair(0, 3, 3)));
    }

    #[test]
    fn counts() {
        let g = Graph::complete(5);
        assert_eq!(g.n_edges(), 10);
        assert_eq!(g.max_edges(), 10);
        assert_eq!(g.n_free_params(), 15);
        assert_eq!(Graph::band(5, 2).n_edges(), 7);
        assert_eq!(Graph::star(4).degrees(), vec![3, 1, 1, 1]);
    }

    #[test]
    fn pair_rank_roundtrip() {
        let p = 7;
        for k in 0..max_edges(p) {
            let (i, j) = pair_from_rank(p, k);
            assert_eq!(pair_rank(p, i, j), k);
        }
        assert_eq!(pair_rank(p, 0, 1), 0);
        assert_eq!(pair_rank(p, 5, 6), max_edges(p) - 1);
    }

    #[test]
    fn param_index_order() {
        let g = Graph::from_edges(3, [(1, 2), (0, 1)]).unwrap();
        let idx = g.param_index();
        assert_eq!(idx.positions(), &[(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)]);
        assert_eq!(idx.index_of(2, 1), Some(4));
        assert_eq!(idx.index_of(0, 2), None);
    }

    #[test]
    fn json_roundtrip_and_format() {
        let g = Graph::from_edges(4, [(2, 1), (0, 3)]).unwrap();
        let s = g.to_json();
        assert_eq!(s, r#"{"p":4,"edges":[[0,3],[1,2]]}"#);
        assert_eq!(Graph::from_json(&s).unwrap(), g);
        assert!(Graph::from_json(r#"{"p":2,"edges":[[0,2]]}"#).is_err());
    }

    #[test]
    fn adjacency_csv_roundtrip() {
        let g = Graph::band(5, 2);
        assert_eq!(Graph::from_adjacency_csv(&g.to_adjacency_csv()).unwrap(), g);
        assert!(Graph::from_adjacency_csv("0,1\n0,0\n").is_err());
    }

    #[test]
    fn hash_depends_on_edges_only() {
        let a = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let b = Graph::from_edges(4, [(3, 2), (1, 0)]).unwrap();
        assert_eq!(a.canonical_hash(), b.canonical_hash());
        assert_ne!(a.canonical_hash(), Graph::empty(4).canonical_hash());
    }

    #[test]
    fn support_check() {
        let g = Graph::path(3);
        let mut m = Matrix::<f64>::identity(3);
        m[(0, 1)] = 0.3;
        m[(1, 0)] = 0.3;
        assert!(check_support(&m, &g, 1e-12).is_ok());
        m[(0, 2)] = 1e-3;
        assert_eq!(
            check_support(&m, &g, 1e-12),
            Err(Error::SupportViolation(0, 2))
        );
    }
}
