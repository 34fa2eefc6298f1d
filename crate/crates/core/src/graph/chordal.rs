//! Chordality test by maximum cardinality search and clique/separator
//! decomposition of decomposable graphs.

use super::Graph;
use crate::error::{Error, Result};

/// Maximal cliques of a decomposable graph in an order with the running
/// intersection property, and the separators between consecutive cliques.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueTree {
    pub cliques: Vec<Vec<usize>>,
    /// `separators[k]` is the intersection of `cliques[k + 1]` with the union
    /// of the earlier cliques. May be empty for disconnected graphs.
    pub separators: Vec<Vec<usize>>,
}

/// Maximum cardinality search visit order, lowest index first on ties.
fn mcs_order(g: &Graph) -> Vec<usize> {
    let p = g.p();
    let mut weight = vec![0usize; p];
    let mut numbered = vec![false; p];
    let mut order = Vec::with_capacity(p);
    for _ in 0..p {
        let v = (0..p)
            .filter(|&v| !numbered[v])
            .fold(None, |best: Option<usize>, v| match best {
                Some(b) if weight[b] >= weight[v] => Some(b),
                _ => Some(v),
            })
            .expect("an unnumbered vertex remains");
        numbered[v] = true;
        order.push(v);
        for u in g.neighbors(v) {
            if !numbered[u] {
                weight[u] += 1;
            }
        }
    }
    order
}

/// Neighbours of each vertex that were visited before it, in visit order.
fn earlier_neighbors(g: &Graph, visit: &[usize]) -> Vec<Vec<usize>> {
    let mut pos = vec![0; g.p()];
    for (k, &v) in visit.iter().enumerate() {
        pos[v] = k;
    }
    let mut out = vec![Vec::new(); g.p()];
    for &v in visit {
        let mut earlier: Vec<usize> = g.neighbors(v).filter(|&u| pos[u] < pos[v]).collect();
        earlier.sort_by_key(|&u| pos[u]);
        out[v] = earlier;
    }
    out
}

/// Returns a perfect elimination ordering when the graph is decomposable:
/// every vertex's neighbours appearing later in the ordering form a clique.
pub fn perfect_elimination_order(g: &Graph) -> Option<Vec<usize>> {
    let visit = mcs_order(g);
    let earlier = earlier_neighbors(g, &visit);
    for &v in &visit {
        if !g.is_clique(&earlier[v]) {
            return None;
        }
    }
    Some(visit.into_iter().rev().collect())
}

/// Reverse maximum cardinality search order. A perfect elimination
/// ordering when the graph is decomposable, a heuristic one otherwise.
pub fn mcs_elimination_order(g: &Graph) -> Vec<usize> {
    mcs_order(g).into_iter().rev().collect()
}

/// `true` iff the graph is chordal.
pub fn is_decomposable(g: &Graph) -> bool {
    perfect_elimination_order(g).is_some()
}

/// Maximal cliques and separators of a decomposable graph.
pub fn clique_decomposition(g: &Graph) -> Result<CliqueTree> {
    let peo = perfect_elimination_order(g).ok_or(Error::NotDecomposable)?;
    let visit: Vec<usize> = peo.into_iter().rev().collect();
    let earlier = earlier_neighbors(g, &visit);

    let candidates: Vec<Vec<usize>> = visit
        .iter()
        .map(|&v| {
            let mut c = earlier[v].clone();
            c.push(v);
            c.sort_unstable();
            c
        })
        .collect();

    let is_subset = |a: &[usize], b: &[usize]| a.iter().all(|x| b.binary_search(x).is_ok());
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for (k, c) in candidates.iter().enumerate() {
        // A candidate can only be contained in one generated later in the search.
        if !candidates[k + 1..].iter().any(|d| is_subset(c, d)) {
            cliques.push(c.clone());
        }
    }

    let mut separators = Vec::with_capacity(cliques.len().saturating_sub(1));
    let mut seen = vec![false; g.p()];
    for (k, c) in cliques.iter().enumerate() {
        if k > 0 {
            separators.push(c.iter().copied().filter(|&v| seen[v]).collect());
        }
        for &v in c {
            seen[v] = true;
        }
    }
    Ok(CliqueTree {
        cliques,
        separators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn later_neighborhoods_are_cliques(g: &Graph, order: &[usize]) -> bool {
        let mut pos = vec![0; g.p()];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        order.iter().all(|&v| {
            let later: Vec<usize> = g.neighbors(v).filter(|&u| pos[u] > pos[v]).collect();
            g.is_clique(&later)
        })
    }

    #[test]
    fn complete_graphs_are_decomposable() {
        for p in 1..8 {
            assert!(is_decomposable(&Graph::complete(p)));
        }
    }

    #[test]
    fn four_cycle_is_not() {
        let c4 = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert!(!is_decomposable(&c4));
        assert_eq!(clique_decomposition(&c4), Err(Error::NotDecomposable));
        // a chord repairs it
        assert!(is_decomposable(&c4.flip_edge(0, 2).unwrap()));
    }

    #[test]
    fn path_order_is_perfect() {
        let g = Graph::path(5);
        let order = perfect_elimination_order(&g).unwrap();
        assert!(later_neighborhoods_are_cliques(&g, &order));
        assert!(later_neighborhoods_are_cliques(&g, &[0, 1, 2, 3, 4]));
    }

    #[test]
    fn path3_cliques() {
        let t = clique_decomposition(&Graph::path(3)).unwrap();
        assert_eq!(t.cliques, vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(t.separators, vec![vec![1]]);
    }

    #[test]
    fn complete4_single_clique() {
        let t = clique_decomposition(&Graph::complete(4)).unwrap();
        assert_eq!(t.cliques, vec![vec![0, 1, 2, 3]]);
        assert!(t.separators.is_empty());
    }

    #[test]
    fn ar2_band_cliques() {
        let t = clique_decomposition(&Graph::band(5, 2)).unwrap();
        assert_eq!(t.cliques, vec![vec![0, 1, 2], vec![1, 2, 3], vec![2, 3, 4]]);
        assert_eq!(t.separators, vec![vec![1, 2], vec![2, 3]]);
    }

    #[test]
    fn disconnected_gives_empty_separator() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let t = clique_decomposition(&g).unwrap();
        assert_eq!(t.cliques.len(), 2);
        assert_eq!(t.separators, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn tie_breaking_is_lowest_index() {
        assert_eq!(mcs_order(&Graph::empty(3)), vec![0, 1, 2]);
    }
}
