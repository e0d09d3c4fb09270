use serde::{Deserialize, Serialize};

use super::{risk_landscape, PredictorGraph};
use crate::scalar::Scalar;

/// A level-set component: predictors sharing one height and connected
/// through predictors of that height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReebNode<T> {
    pub height: T,
    pub members: Vec<usize>,
}

/// Quotient of a predictor graph by the components of its risk level sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReebGraph<T> {
    pub nodes: Vec<ReebNode<T>>,
    /// `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl<T: Scalar> ReebGraph<T> {
    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == node || b == node).count()
    }

    pub fn min_height(&self) -> T {
        self.nodes
            .iter()
            .map(|n| n.height)
            .fold(T::infinity(), |a, b| a.min(b))
    }

    /// Nodes whose neighbors are all strictly higher, in node order. An
    /// isolated node counts.
    pub fn local_minima(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&v| {
                self.edges.iter().all(|&(a, b)| {
                    let other = if a == v {
                        b
                    } else if b == v {
                        a
                    } else {
                        return true;
                    };
                    self.nodes[other].height > self.nodes[v].height
                })
            })
            .collect()
    }

    /// `node_id,height,degree` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,height,degree\n");
        for (k, node) in self.nodes.iter().enumerate() {
            out.push_str(&format!("{k},{:.17e},{}\n", node.height.as_f64(), self.degree(k)));
        }
        out
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, v: usize) -> usize {
        let mut root = v;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = v;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Builds the Reeb graph of the risk function.
///
/// Heights are grouped into levels: sorted heights whose consecutive gaps
/// are at most `tol` share a level, reported at the level's smallest height.
/// With `tol = 0` only exactly equal risks merge. Nodes are ordered by
/// their smallest member.
pub fn reeb_graph<T: Scalar>(pg: &PredictorGraph<T>, tol: T) -> ReebGraph<T> {
    let heights = risk_landscape(pg);
    let n = heights.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| heights[a].partial_cmp(&heights[b]).expect("finite risks").then(a.cmp(&b)));
    let mut level = vec![0; n];
    let mut level_height = Vec::new();
    for (k, &v) in order.iter().enumerate() {
        if k == 0 || heights[v] - heights[order[k - 1]] > tol {
            level_height.push(heights[v]);
        }
        level[v] = level_height.len() - 1;
    }

    let mut uf = UnionFind((0..n).collect());
    for &(a, b) in pg.edges() {
        if level[a] == level[b] {
            uf.union(a, b);
        }
    }
    let mut node_of = vec![usize::MAX; n];
    let mut nodes: Vec<ReebNode<T>> = Vec::new();
    for v in 0..n {
        let root = uf.find(v);
        if node_of[root] == usize::MAX {
            node_of[root] = nodes.len();
            nodes.push(ReebNode {
                height: level_height[level[v]],
                members: Vec::new(),
            });
        }
        node_of[v] = node_of[root];
        nodes[node_of[v]].members.push(v);
    }
    let mut edges: Vec<(usize, usize)> = pg
        .edges()
        .iter()
        .map(|&(a, b)| (node_of[a], node_of[b]))
        .filter(|&(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    ReebGraph { nodes, edges }
}
