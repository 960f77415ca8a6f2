//! Join trees: one node per atom, with bags satisfying running intersection.

use crate::error::{Error, Result};
use crate::model::{Query, VarSet};

/// An undirected join tree with a designated root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinTree {
    bags: Vec<VarSet>,
    labels: Vec<String>,
    adj: Vec<Vec<usize>>,
    root: usize,
}

/// Parent/child orientation of a tree from a chosen root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rooted {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    /// Children in ascending node id.
    pub children: Vec<Vec<usize>>,
    /// Post-order, visiting children in ascending id; the root comes last.
    pub post_order: Vec<usize>,
}

impl Rooted {
    /// Every node in the subtree of `s`, including `s`.
    pub fn subtree(&self, s: usize) -> Vec<usize> {
        let mut out = vec![s];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.children[out[i]]);
            i += 1;
        }
        out
    }
}

impl JoinTree {
    /// Builds a tree from bags and undirected edges, checking it is a valid join tree.
    pub fn new(bags: Vec<VarSet>, labels: Vec<String>, edges: &[(usize, usize)], root: usize) -> Result<JoinTree> {
        let n = bags.len();
        if n == 0 || labels.len() != n || root >= n {
            return Err(Error::Contract("join tree needs one label per bag and a root among them".into()));
        }
        if edges.len() != n - 1 {
            return Err(Error::Contract(format!("{} edges for {} nodes is not a tree", edges.len(), n)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::Contract(format!("bad tree edge ({a}, {b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        let t = JoinTree { bags, labels, adj, root };
        if t.rooted_at(root).post_order.len() != n {
            return Err(Error::Contract("join tree is disconnected".into()));
        }
        if !running_intersection(&t.bags, &t.adj) {
            return Err(Error::Contract("bags violate running intersection".into()));
        }
        Ok(t)
    }

    /// Join tree for an acyclic query, rooted at the node with the most free
    /// variables (lowest id on ties).
    pub fn for_query(q: &Query) -> Result<JoinTree> {
        let bags: Vec<VarSet> = q.atoms().iter().map(|a| a.vars).collect();
        let edges = crate::analysis::gyo(&bags)
            .ok_or_else(|| Error::Analysis(format!("query `{}` is cyclic; only acyclic queries are supported", q.name())))?;
        let labels = q.atoms().iter().map(|a| a.name.clone()).collect();
        let root = default_root(&bags, q.free());
        JoinTree::new(bags, labels, &edges, root)
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn bag(&self, i: usize) -> VarSet {
        self.bags[i]
    }

    pub fn bags(&self) -> &[VarSet] {
        &self.bags
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Undirected edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, l) in self.adj.iter().enumerate() {
            out.extend(l.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    pub fn with_root(mut self, root: usize) -> Result<JoinTree> {
        if root >= self.len() {
            return Err(Error::Contract(format!("root {root} out of range")));
        }
        self.root = root;
        Ok(self)
    }

    pub fn rooted(&self) -> Rooted {
        self.rooted_at(self.root)
    }

    pub fn rooted_at(&self, root: usize) -> Rooted {
        orient(&self.adj, root, |_| true)
    }

    /// Leaves of the rooted tree (nodes without children), excluding a lone root.
    pub fn leaves(&self) -> Vec<usize> {
        let r = self.rooted();
        (0..self.len()).filter(|&i| r.children[i].is_empty() && i != self.root).collect()
    }

    /// Checks that bags are the atoms of `q`, in order.
    pub fn matches(&self, q: &Query) -> bool {
        self.len() == q.atoms().len()
            && q.atoms().iter().enumerate().all(|(i, a)| self.bags[i] == a.vars && self.labels[i] == a.name)
    }
}

/// Node with the most bag variables in `free`, lowest id on ties.
pub(crate) fn default_root(bags: &[VarSet], free: VarSet) -> usize {
    let mut best = 0;
    for (i, b) in bags.iter().enumerate() {
        if b.inter(free).len() > bags[best].inter(free).len() {
            best = i;
        }
    }
    best
}

/// Orients the subgraph of `adj` induced by `alive` nodes from `root`.
pub(crate) fn orient(adj: &[Vec<usize>], root: usize, alive: impl Fn(usize) -> bool) -> Rooted {
    let n = adj.len();
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut post = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    // iterative DFS: (node, next neighbor slot)
    let mut stack = vec![(root, 0usize)];
    seen[root] = true;
    while let Some(top) = stack.last_mut() {
        let u = top.0;
        if top.1 < adj[u].len() {
            let v = adj[u][top.1];
            top.1 += 1;
            if !seen[v] && alive(v) {
                seen[v] = true;
                parent[v] = Some(u);
                children[u].push(v);
                stack.push((v, 0));
            }
        } else {
            post.push(u);
            stack.pop();
        }
    }
    Rooted { root, parent, children, post_order: post }
}

/// For every variable, the nodes whose bags hold it induce a connected subtree.
pub(crate) fn running_intersection(bags: &[VarSet], adj: &[Vec<usize>]) -> bool {
    let all = bags.iter().fold(VarSet::EMPTY, |s, b| s.union(*b));
    all.iter().all(|v| {
        let holders: Vec<usize> = (0..bags.len()).filter(|&i| bags[i].contains(v)).collect();
        let reached = orient(adj, holders[0], |i| bags[i].contains(v)).post_order.len();
        reached == holders.len()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Query, VarId};

    #[test]
    fn path_tree_is_a_chain() {
        let q = Query::new("Q", &["a", "d"], &[("R", &["a", "b"]), ("S", &["b", "c"]), ("T", &["c", "d"])]).unwrap();
        let t = JoinTree::for_query(&q).unwrap();
        assert_eq!(t.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(t.root(), 0);
        let r = t.rooted();
        assert_eq!(r.post_order, vec![2, 1, 0]);
        assert_eq!(t.leaves(), vec![2]);
    }

    #[test]
    fn rejects_broken_running_intersection() {
        let b = |ids: &[u8]| VarSet::from_ids(ids.iter().map(|&i| VarId(i)));
        let bags = vec![b(&[0, 1]), b(&[1, 2]), b(&[0, 3])];
        let labels = vec!["A".into(), "B".into(), "C".into()];
        assert!(JoinTree::new(bags.clone(), labels.clone(), &[(0, 1), (1, 2)], 0).is_err());
        assert!(JoinTree::new(bags, labels, &[(0, 1), (0, 2)], 0).is_ok());
    }
}
