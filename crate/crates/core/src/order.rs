//! Vertex orderings, the reverse Cuthill-McKee fill-reducing ordering, and
//! perfect-elimination checks on ordered graphs.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A bijection from original vertex labels to positions `0..p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexOrdering {
    position: Vec<usize>,
    vertex_at: Vec<usize>,
}

impl VertexOrdering {
    pub fn identity(p: usize) -> Self {
        VertexOrdering {
            position: (0..p).collect(),
            vertex_at: (0..p).collect(),
        }
    }

    /// Build from `position[v] =` position of vertex `v`. Must be a bijection.
    pub fn from_positions(position: Vec<usize>) -> Result<Self> {
        let p = position.len();
        let mut vertex_at = vec![usize::MAX; p];
        for (v, &pos) in position.iter().enumerate() {
            if pos >= p || vertex_at[pos] != usize::MAX {
                return Err(Error::input(format!(
                    "ordering is not a bijection: position {} repeated or out of range",
                    pos + 1
                )));
            }
            vertex_at[pos] = v;
        }
        Ok(VertexOrdering {
            position,
            vertex_at,
        })
    }

    /// Build from the visit sequence: `sequence[k] = ` vertex at position `k`.
    pub fn from_sequence(sequence: Vec<usize>) -> Result<Self> {
        let p = sequence.len();
        let mut position = vec![usize::MAX; p];
        for (k, &v) in sequence.iter().enumerate() {
            if v >= p || position[v] != usize::MAX {
                return Err(Error::input(format!(
                    "ordering is not a bijection: vertex {} repeated or out of range",
                    v + 1
                )));
            }
            position[v] = k;
        }
        Ok(VertexOrdering {
            position,
            vertex_at: sequence,
        })
    }

    pub fn p(&self) -> usize {
        self.position.len()
    }

    pub fn position_of(&self, v: usize) -> usize {
        self.position[v]
    }

    pub fn vertex_at(&self, pos: usize) -> usize {
        self.vertex_at[pos]
    }

    /// Vertices in position order.
    pub fn sequence(&self) -> &[usize] {
        &self.vertex_at
    }

    pub fn inverse(&self) -> VertexOrdering {
        VertexOrdering {
            position: self.vertex_at.clone(),
            vertex_at: self.position.clone(),
        }
    }
}

/// A graph together with a vertex ordering and the relabeled edge set.
#[derive(Debug, Clone)]
pub struct OrderedGraph {
    graph: Graph,
    sigma: VertexOrdering,
    edges_sigma: BTreeSet<(usize, usize)>,
}

impl OrderedGraph {
    pub fn p(&self) -> usize {
        self.graph.p()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn sigma(&self) -> &VertexOrdering {
        &self.sigma
    }

    /// Relabeled edges as canonical `(lo, hi)` position pairs.
    pub fn edges_sigma(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges_sigma.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges_sigma.len()
    }

    pub fn has_edge_sigma(&self, i: usize, j: usize) -> bool {
        i != j && self.edges_sigma.contains(&(i.min(j), i.max(j)))
    }
}

/// Relabel a graph by an ordering.
pub fn apply_ordering(g: &Graph, sigma: &VertexOrdering) -> Result<OrderedGraph> {
    if sigma.p() != g.p() {
        return Err(Error::input(format!(
            "ordering has {} entries but the graph has {} vertices",
            sigma.p(),
            g.p()
        )));
    }
    let edges_sigma = g
        .edges()
        .map(|(u, v)| {
            let (a, b) = (sigma.position_of(u), sigma.position_of(v));
            (a.min(b), a.max(b))
        })
        .collect();
    Ok(OrderedGraph {
        graph: g.clone(),
        sigma: sigma.clone(),
        edges_sigma,
    })
}

/// Reverse Cuthill-McKee fill-reducing ordering.
///
/// Deterministic: components are swept in order of their smallest original
/// label, the start vertex of each component is a pseudo-peripheral vertex
/// found by repeated breadth-first sweeps, and all ties break toward the
/// smallest (degree, label) pair. The concatenated Cuthill-McKee sequence is
/// reversed as a whole.
pub fn rcm_ordering(g: &Graph) -> VertexOrdering {
    let p = g.p();
    let mut visited = vec![false; p];
    let mut order = Vec::with_capacity(p);
    for comp in g.connected_components() {
        let start = pseudo_peripheral(g, &comp);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&w| !visited[w])
                .collect();
            next.sort_by_key(|&w| (g.degree(w), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    VertexOrdering::from_sequence(order).expect("BFS visits each vertex once")
}

/// Breadth-first levels from `start`, restricted to its component.
fn bfs_levels(g: &Graph, start: usize) -> Vec<Vec<usize>> {
    let mut dist = vec![usize::MAX; g.p()];
    dist[start] = 0;
    let mut levels = vec![vec![start]];
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                if levels.len() <= dist[w] {
                    levels.push(Vec::new());
                }
                levels[dist[w]].push(w);
                queue.push_back(w);
            }
        }
    }
    levels
}

/// George-Liu style pseudo-peripheral vertex: sweep from the minimum
/// (degree, label) vertex; move to the far level while eccentricity grows.
fn pseudo_peripheral(g: &Graph, comp: &[usize]) -> usize {
    let start = *comp
        .iter()
        .min_by_key(|&&v| (g.degree(v), v))
        .expect("non-empty component");
    let mut levels = bfs_levels(g, start);
    loop {
        let x = *levels
            .last()
            .expect("at least one level")
            .iter()
            .min_by_key(|&&v| (g.degree(v), v))
            .expect("non-empty level");
        let levels_x = bfs_levels(g, x);
        if levels_x.len() > levels.len() {
            levels = levels_x;
        } else {
            return x;
        }
    }
}

/// True iff the ordering is a perfect vertex elimination scheme for the
/// relabeled graph: every vertex's higher-position neighborhood is a clique.
pub fn is_perfect_elimination(og: &OrderedGraph) -> bool {
    let p = og.p();
    for k in 0..p {
        let higher: Vec<usize> = (k + 1..p).filter(|&i| og.has_edge_sigma(i, k)).collect();
        for (a, &i) in higher.iter().enumerate() {
            for &j in &higher[a + 1..] {
                if !og.has_edge_sigma(i, j) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;

    fn bandwidth(og: &OrderedGraph) -> usize {
        og.edges_sigma().map(|(i, j)| j - i).max().unwrap_or(0)
    }

    /// Exhaustive oracle over all 3! = 6 orderings: bandwidth 1 is minimal
    /// for the path 3-1-2, and RCM attains it.
    #[test]
    fn rcm_path_attains_minimal_bandwidth() {
        let g = parse_graph("p 3\n3 1\n1 2\n").unwrap();
        let mut best = usize::MAX;
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for perm in perms {
            let sigma = VertexOrdering::from_positions(perm.to_vec()).unwrap();
            best = best.min(bandwidth(&apply_ordering(&g, &sigma).unwrap()));
        }
        assert_eq!(best, 1);
        let og = apply_ordering(&g, &rcm_ordering(&g)).unwrap();
        assert_eq!(bandwidth(&og), 1);
    }

    #[test]
    fn rcm_is_a_permutation_and_deterministic() {
        let g = parse_graph("p 7\n1 2\n2 3\n3 4\n4 1\n5 6\n").unwrap();
        let sigma = rcm_ordering(&g);
        let mut image: Vec<usize> = (0..g.p()).map(|v| sigma.position_of(v)).collect();
        image.sort_unstable();
        assert_eq!(image, (0..g.p()).collect::<Vec<_>>());
        assert_eq!(sigma, rcm_ordering(&g));
    }

    #[test]
    fn apply_identity_and_roundtrip() {
        let g = parse_graph("p 4\n1 2\n2 3\n3 4\n4 1\n").unwrap();
        let og = apply_ordering(&g, &VertexOrdering::identity(4)).unwrap();
        let expected: Vec<(usize, usize)> = g.edges().collect();
        assert_eq!(og.edges_sigma().collect::<Vec<_>>(), expected);

        // swap labels 3 and 4 (1-based): E_sigma = {(1,2),(2,4),(4,3),(3,1)}
        let sigma = VertexOrdering::from_positions(vec![0, 1, 3, 2]).unwrap();
        let og = apply_ordering(&g, &sigma).unwrap();
        let got: Vec<(usize, usize)> = og.edges_sigma().collect();
        assert_eq!(got, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);

        // sigma then its inverse restores the original edge set
        let relabeled = Graph::from_edges(4, og.edges_sigma()).unwrap();
        let back = apply_ordering(&relabeled, &sigma.inverse()).unwrap();
        let round: Vec<(usize, usize)> = back.edges_sigma().collect();
        assert_eq!(round, expected);
    }

    #[test]
    fn non_bijective_sigma_rejected() {
        assert!(VertexOrdering::from_positions(vec![0, 0, 1]).is_err());
        assert!(VertexOrdering::from_positions(vec![0, 1, 3]).is_err());
    }

    #[test]
    fn four_cycle_natural_is_not_perfect_elimination() {
        let g = parse_graph("p 4\n1 2\n2 3\n3 4\n4 1\n").unwrap();
        let og = apply_ordering(&g, &VertexOrdering::identity(4)).unwrap();
        assert!(!is_perfect_elimination(&og));
    }

    #[test]
    fn complete_graph_any_ordering_is_perfect() {
        let edges = (0..5).flat_map(|i| (0..i).map(move |j| (j, i)));
        let g = Graph::from_edges(5, edges).unwrap();
        for perm in [[0, 1, 2, 3, 4], [4, 2, 0, 3, 1], [1, 3, 0, 4, 2]] {
            let sigma = VertexOrdering::from_positions(perm.to_vec()).unwrap();
            assert!(is_perfect_elimination(&apply_ordering(&g, &sigma).unwrap()));
        }
    }

    #[test]
    fn path_natural_order_is_perfect() {
        let g = parse_graph("p 4\n1 2\n2 3\n3 4\n").unwrap();
        let og = apply_ordering(&g, &VertexOrdering::identity(4)).unwrap();
        assert!(is_perfect_elimination(&og));
    }
}
