//! Mutable evaluation state: a join tree whose nodes carry relations and can
//! be merged away while an evaluator runs.

use crate::error::{Error, Result};
use crate::model::{Query, VarSet};
use crate::relation::{semijoin, Database, Relation};
use crate::semiring::Semiring;
use crate::stats::EvalStats;
use crate::tree::{orient, running_intersection, JoinTree, Rooted};

pub(crate) struct WorkTree<S: Semiring> {
    pub bags: Vec<VarSet>,
    pub rels: Vec<Relation<S>>,
    pub labels: Vec<String>,
    pub adj: Vec<Vec<usize>>,
    pub alive: Vec<bool>,
    /// Original nodes merged into each node, itself included.
    pub weight: Vec<usize>,
    pub free: VarSet,
}

impl<S: Semiring> Clone for WorkTree<S> {
    fn clone(&self) -> Self {
        WorkTree {
            bags: self.bags.clone(),
            rels: self.rels.clone(),
            labels: self.labels.clone(),
            adj: self.adj.clone(),
            alive: self.alive.clone(),
            weight: self.weight.clone(),
            free: self.free,
        }
    }
}

impl<S: Semiring> WorkTree<S> {
    pub fn from_query(q: &Query, db: &Database<S>, tree: &JoinTree) -> Result<Self> {
        if !tree.matches(q) {
            return Err(Error::Contract(format!("join tree does not match the atoms of `{}`", q.name())));
        }
        let rels: Vec<Relation<S>> = db.relations_for(q)?.into_iter().cloned().collect();
        let n = rels.len();
        Ok(WorkTree {
            bags: tree.bags().to_vec(),
            rels,
            labels: tree.labels().to_vec(),
            adj: (0..n).map(|i| tree.neighbors(i).to_vec()).collect(),
            alive: vec![true; n],
            weight: vec![1; n],
            free: q.free(),
        })
    }

    pub fn rooted(&self, root: usize) -> Rooted {
        orient(&self.adj, root, |i| self.alive[i])
    }

    pub fn alive_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.bags.len()).filter(|&i| self.alive[i])
    }

    /// `|D|` over the live nodes.
    pub fn size(&self) -> usize {
        self.alive_nodes().map(|i| self.rels[i].len()).sum()
    }

    /// Union of the bags of live nodes other than `s`.
    pub fn vars_outside(&self, s: usize) -> VarSet {
        self.alive_nodes().filter(|&i| i != s).fold(VarSet::EMPTY, |a, i| a.union(self.bags[i]))
    }

    pub fn kill(&mut self, c: usize) {
        self.alive[c] = false;
        self.rels[c] = Relation::empty(VarSet::EMPTY);
    }

    /// Two semijoin passes along the live tree.
    pub fn full_reduce(&mut self, root: usize, stats: &mut EvalStats) -> Result<()> {
        let rt = self.rooted(root);
        for &s in &rt.post_order {
            if let Some(p) = rt.parent[s] {
                let r = semijoin(&self.rels[p], &self.rels[s], stats)?;
                self.rels[p] = r;
            }
        }
        for &s in rt.post_order.iter().rev() {
            if let Some(p) = rt.parent[s] {
                let r = semijoin(&self.rels[s], &self.rels[p], stats)?;
                self.rels[s] = r;
            }
        }
        Ok(())
    }

    pub fn check_running_intersection(&self) -> Result<()> {
        let ids: Vec<usize> = self.alive_nodes().collect();
        let bags: Vec<VarSet> = ids.iter().map(|&i| self.bags[i]).collect();
        let adj: Vec<Vec<usize>> = ids
            .iter()
            .map(|&i| self.adj[i].iter().filter_map(|j| ids.iter().position(|k| k == j)).collect())
            .collect();
        if running_intersection(&bags, &adj) {
            Ok(())
        } else {
            Err(Error::Contract("running intersection broken after a bag update".into()))
        }
    }

    /// The live part as a standalone join tree and database.
    pub fn export(&self, root: usize) -> Result<(JoinTree, Database<S>)> {
        let ids: Vec<usize> = self.alive_nodes().collect();
        let pos = |j: usize| ids.iter().position(|&k| k == j);
        let mut edges = Vec::new();
        for (a, &i) in ids.iter().enumerate() {
            for &j in &self.adj[i] {
                if let Some(b) = pos(j) {
                    if a < b {
                        edges.push((a, b));
                    }
                }
            }
        }
        let tree = JoinTree::new(
            ids.iter().map(|&i| self.bags[i]).collect(),
            ids.iter().map(|&i| self.labels[i].clone()).collect(),
            &edges,
            pos(root).ok_or_else(|| Error::Contract("root was truncated".into()))?,
        )?;
        let mut db = Database::new();
        for &i in &ids {
            db.insert(&self.labels[i], self.rels[i].clone());
        }
        Ok((tree, db))
    }

    pub fn into_database(self) -> Database<S> {
        let mut db = Database::new();
        for (i, r) in self.rels.into_iter().enumerate() {
            if self.alive[i] {
                db.insert(&self.labels[i], r);
            }
        }
        db
    }
}
