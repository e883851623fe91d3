//! Undirected, loop-free graphs over vertices `0..p`.
//!
//! Vertices are 0-based internally; every file format and report uses 1-based
//! labels. Edges are stored canonically as `(lo, hi)` pairs with `lo < hi`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Default cap on the number of maximal cliques enumerated before aborting.
pub const DEFAULT_CLIQUE_CAP: usize = 1_000_000;

/// An undirected graph: the allowed off-diagonal non-zero pattern of a
/// precision matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Graph with `p` vertices and no edges.
    pub fn empty(p: usize) -> Self {
        Graph {
            p,
            edges: BTreeSet::new(),
            adj: vec![Vec::new(); p],
        }
    }

    /// Build from an edge list (0-based endpoints, either orientation,
    /// duplicates collapse). Rejects self-loops and out-of-range vertices.
    pub fn from_edges<I>(p: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::input(format!("self-loop at vertex {}", u + 1)));
            }
            if u >= p || v >= p {
                return Err(Error::input(format!(
                    "edge ({}, {}) out of range for p = {}",
                    u + 1,
                    v + 1,
                    p
                )));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adj = vec![Vec::new(); p];
        for &(u, v) in &set {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Graph { p, edges: set, adj })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical `(lo, hi)` edge pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Connected components as sorted vertex lists, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.p];
        let mut comps = Vec::new();
        for s in 0..self.p {
            if seen[s] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = std::collections::VecDeque::from([s]);
            seen[s] = true;
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Induced subgraph on `vertices` (relabeled `0..vertices.len()` in the
    /// given order).
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Graph> {
        let mut index = vec![usize::MAX; self.p];
        for (k, &v) in vertices.iter().enumerate() {
            index[v] = k;
        }
        let mut edges = Vec::new();
        for &v in vertices {
            for &w in &self.adj[v] {
                if v < w && index[w] != usize::MAX {
                    edges.push((index[v], index[w]));
                }
            }
        }
        Graph::from_edges(vertices.len(), edges)
    }

    /// All maximal cliques, each sorted, in lexicographic order, using the
    /// default enumeration cap.
    pub fn maximal_cliques(&self) -> Result<Vec<Vec<usize>>> {
        self.maximal_cliques_capped(DEFAULT_CLIQUE_CAP)
    }

    /// Bron-Kerbosch enumeration with pivoting. The clique count of a dense
    /// graph can be exponential in `p`; `cap` aborts with a resource error
    /// instead of exhausting memory.
    pub fn maximal_cliques_capped(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        let mut dense = vec![false; self.p * self.p];
        for &(u, v) in &self.edges {
            dense[u * self.p + v] = true;
            dense[v * self.p + u] = true;
        }
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut r = Vec::new();
        let p_set: BTreeSet<usize> = (0..self.p).collect();
        self.bron_kerbosch(&dense, &mut r, p_set, BTreeSet::new(), cap, &mut out)?;
        out.sort();
        Ok(out)
    }

    fn bron_kerbosch(
        &self,
        dense: &[bool],
        r: &mut Vec<usize>,
        mut p: BTreeSet<usize>,
        mut x: BTreeSet<usize>,
        cap: usize,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        if p.is_empty() && x.is_empty() {
            if out.len() >= cap {
                return Err(Error::resource(format!(
                    "maximal clique cap of {} exceeded",
                    cap
                )));
            }
            let mut clique = r.clone();
            clique.sort_unstable();
            out.push(clique);
            return Ok(());
        }
        // pivot on the candidate covering the most of P
        let pivot = p
            .iter()
            .chain(x.iter())
            .copied()
            .max_by_key(|&u| {
                (
                    self.adj[u].iter().filter(|&&w| p.contains(&w)).count(),
                    usize::MAX - u,
                )
            })
            .expect("P or X non-empty");
        let todo: Vec<usize> = p
            .iter()
            .copied()
            .filter(|&v| !dense[pivot * self.p + v])
            .collect();
        for v in todo {
            r.push(v);
            let np = p
                .iter()
                .copied()
                .filter(|&w| dense[v * self.p + w])
                .collect();
            let nx = x
                .iter()
                .copied()
                .filter(|&w| dense[v * self.p + w])
                .collect();
            self.bron_kerbosch(dense, r, np, nx, cap, out)?;
            r.pop();
            p.remove(&v);
            x.insert(v);
        }
        Ok(())
    }
}

/// Parse the edge-list text format: a header line `p <count>`, then one
/// 1-based `i j` pair per line. `#` starts a comment; blank lines are ignored.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut p: Option<usize> = None;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let ln = lineno + 1;
        let mut tokens = line.split_whitespace();
        let first = tokens.next().expect("non-empty line");
        if first == "p" {
            if p.is_some() {
                return Err(Error::input(format!("line {ln}: duplicate header line")));
            }
            let count = tokens
                .next()
                .ok_or_else(|| Error::input(format!("line {ln}: header missing vertex count")))?;
            let count: usize = count
                .parse()
                .map_err(|_| Error::input(format!("line {ln}: bad vertex count '{count}'")))?;
            if count == 0 {
                return Err(Error::input(format!(
                    "line {ln}: vertex count must be positive"
                )));
            }
            if tokens.next().is_some() {
                return Err(Error::input(format!(
                    "line {ln}: trailing tokens after header"
                )));
            }
            p = Some(count);
            continue;
        }
        let p =
            p.ok_or_else(|| Error::input(format!("line {ln}: edge before 'p <count>' header")))?;
        let second = tokens
            .next()
            .ok_or_else(|| Error::input(format!("line {ln}: expected two vertex labels")))?;
        if tokens.next().is_some() {
            return Err(Error::input(format!(
                "line {ln}: expected exactly two vertex labels"
            )));
        }
        let parse_vertex = |tok: &str| -> Result<usize> {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::input(format!("line {ln}: bad vertex label '{tok}'")))?;
            if v == 0 || v > p {
                return Err(Error::input(format!(
                    "line {ln}: vertex {v} out of range 1..{p}"
                )));
            }
            Ok(v - 1)
        };
        let u = parse_vertex(first)?;
        let v = parse_vertex(second)?;
        if u == v {
            return Err(Error::input(format!(
                "line {ln}: self-loop at vertex {}",
                u + 1
            )));
        }
        edges.push((u, v));
    }
    let p = p.ok_or_else(|| Error::input("missing 'p <count>' header line"))?;
    Graph::from_edges(p, edges)
}

/// Render a graph in the edge-list text format (1-based labels).
pub fn format_graph(g: &Graph) -> String {
    let mut s = format!("p {}\n", g.p());
    for (u, v) in g.edges() {
        s.push_str(&format!("{} {}\n", u + 1, v + 1));
    }
    s
}
