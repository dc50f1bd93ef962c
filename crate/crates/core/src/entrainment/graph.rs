use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EntrainmentError;

pub const MAX_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Directed graph over speakers. An edge `y -> x` carries the (positive)
/// mean entrainment of `y` to `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntrainmentGraph {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    // Dense weighted adjacency, 0.0 where there is no edge.
    adj: Vec<Vec<f64>>,
}

impl EntrainmentGraph {
    pub fn new(nodes: Vec<String>, edges: Vec<Edge>) -> Result<Self, EntrainmentError> {
        let n = nodes.len();
        if n < 2 {
            return Err(EntrainmentError::TooFewSpeakers(n));
        }
        if n > MAX_NODES {
            return Err(EntrainmentError::TooManySpeakers(n));
        }
        let mut adj = vec![vec![0.0; n]; n];
        for e in &edges {
            let bad = |reason| EntrainmentError::InvalidEdge {
                from: e.from,
                to: e.to,
                reason,
            };
            if e.from >= n || e.to >= n {
                return Err(bad("node out of range"));
            }
            if e.from == e.to {
                return Err(bad("self-loop"));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(bad("weight must be positive and finite"));
            }
            if adj[e.from][e.to] != 0.0 {
                return Err(bad("duplicate edge"));
            }
            adj[e.from][e.to] = e.weight;
        }
        Ok(EntrainmentGraph { nodes, edges, adj })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn weight(&self, from: usize, to: usize) -> Option<f64> {
        let w = self.adj[from][to];
        (w > 0.0).then_some(w)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adj[from][to] > 0.0
    }

    /// `adj[u][v]` is the weight of `u -> v`, or 0.
    pub fn adjacency(&self) -> &[Vec<f64>] {
        &self.adj
    }

    pub fn out_neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&v| self.has_edge(u, v))
    }

    pub fn in_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&u| self.has_edge(u, v))
    }

    /// Same graph with nodes reordered: node `i` of the result is node
    /// `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut pos = vec![0; order.len()];
        for (i, &o) in order.iter().enumerate() {
            pos[o] = i;
        }
        let nodes = order.iter().map(|&o| self.nodes[o].clone()).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                from: pos[e.from],
                to: pos[e.to],
                weight: e.weight,
            })
            .collect();
        EntrainmentGraph::new(nodes, edges).expect("permutation of a valid graph")
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph entrainment {\n");
        for n in &self.nodes {
            let _ = writeln!(s, "  \"{}\";", escape(n));
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\" [weight={}, label=\"{:.3}\"];",
                escape(&self.nodes[e.from]),
                escape(&self.nodes[e.to]),
                e.weight,
                e.weight
            );
        }
        s.push_str("}\n");
        s
    }

    /// `[{"from": .., "to": .., "weight": ..}, ..]` with speaker names.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct NamedEdge<'a> {
            from: &'a str,
            to: &'a str,
            weight: f64,
        }
        let edges: Vec<NamedEdge> = self
            .edges
            .iter()
            .map(|e| NamedEdge {
                from: &self.nodes[e.from],
                to: &self.nodes[e.to],
                weight: e.weight,
            })
            .collect();
        serde_json::to_string_pretty(&edges).expect("edge list serializes")
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i}")).collect()
    }

    #[test]
    fn validation() {
        let e = |from, to, weight| Edge { from, to, weight };
        assert!(EntrainmentGraph::new(names(1), vec![]).is_err());
        assert!(EntrainmentGraph::new(names(9), vec![]).is_err());
        assert!(EntrainmentGraph::new(names(2), vec![e(0, 0, 0.5)]).is_err());
        assert!(EntrainmentGraph::new(names(2), vec![e(0, 1, 0.0)]).is_err());
        assert!(EntrainmentGraph::new(names(2), vec![e(0, 1, -0.1)]).is_err());
        assert!(EntrainmentGraph::new(names(2), vec![e(0, 2, 0.1)]).is_err());
        assert!(EntrainmentGraph::new(names(2), vec![e(0, 1, 0.1), e(0, 1, 0.2)]).is_err());
        let g = EntrainmentGraph::new(names(3), vec![e(0, 1, 0.1), e(2, 1, 0.2)]).unwrap();
        assert_eq!(g.in_neighbors(1).collect::<Vec<_>>(), [0, 2]);
        assert_eq!(g.out_neighbors(0).collect::<Vec<_>>(), [1]);
    }

    #[test]
    fn exports() {
        let g = EntrainmentGraph::new(
            vec!["A".into(), "B \"b\"".into()],
            vec![Edge {
                from: 1,
                to: 0,
                weight: 0.25,
            }],
        )
        .unwrap();
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph entrainment {"));
        assert!(dot.contains("\"B \\\"b\\\"\" -> \"A\" [weight=0.25"));
        let v: serde_json::Value = serde_json::from_str(&g.to_json()).unwrap();
        assert_eq!(v[0]["from"], "B \"b\"");
        assert_eq!(v[0]["to"], "A");
        assert_eq!(v[0]["weight"], 0.25);
    }
}
