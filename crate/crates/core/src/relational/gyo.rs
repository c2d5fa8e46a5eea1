use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use super::SchemaGraph;

/// A join tree over the tables of an acyclic schema.
///
/// Every feature is owned by exactly one node; per-feature lifts in a
/// SumProd query are applied only at the owner so shared features are not
/// counted twice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinTree {
    root: usize,
    parent: Vec<Option<usize>>,
    separators: Vec<Vec<usize>>,
    node_features: Vec<BTreeSet<usize>>,
    owner: Vec<usize>,
}

/// Stuck state of a GYO reduction on a cyclic schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicVerdict {
    /// `(table index, remaining columns)` for every table left in the hypergraph.
    pub residual: Vec<(usize, Vec<usize>)>,
}

impl fmt::Display for CyclicVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cyclic schema: residual hypergraph")?;
        for (t, cols) in &self.residual {
            write!(f, " T{t}{cols:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GyoOutcome {
    Acyclic(JoinTree),
    Cyclic(CyclicVerdict),
}

/// GYO reduction. Each step removes the lowest-indexed column that occurs
/// in exactly one remaining table; failing that, it removes the
/// lowest-indexed table whose remaining columns are contained in another
/// table's, attaching it to the lowest-indexed such table.
pub fn gyo_reduce(g: &SchemaGraph) -> GyoOutcome {
    let m = g.hyperedges.len();
    let mut current: Vec<BTreeSet<usize>> = g.hyperedges.clone();
    let mut alive = vec![true; m];
    let mut parent = vec![None; m];
    let mut remaining = m;

    'reduce: while remaining > 1 {
        for f in 0..g.vertices {
            let mut holders = (0..m).filter(|&e| alive[e] && current[e].contains(&f));
            if let (Some(e), None) = (holders.next(), holders.next()) {
                current[e].remove(&f);
                continue 'reduce;
            }
        }
        for e in (0..m).filter(|&e| alive[e]) {
            let absorber = (0..m).find(|&o| o != e && alive[o] && current[e].is_subset(&current[o]));
            if let Some(o) = absorber {
                parent[e] = Some(o);
                alive[e] = false;
                remaining -= 1;
                continue 'reduce;
            }
        }
        let residual = (0..m)
            .filter(|&e| alive[e])
            .map(|e| (e, current[e].iter().copied().collect()))
            .collect();
        return GyoOutcome::Cyclic(CyclicVerdict { residual });
    }

    let root = (0..m).find(|&e| alive[e]).unwrap_or(0);
    GyoOutcome::Acyclic(JoinTree::from_parents(root, parent, g.hyperedges.clone(), g.vertices))
}

impl JoinTree {
    fn from_parents(
        root: usize,
        parent: Vec<Option<usize>>,
        node_features: Vec<BTreeSet<usize>>,
        vertices: usize,
    ) -> Self {
        let separators = (0..parent.len())
            .map(|u| match parent[u] {
                Some(p) => node_features[u].intersection(&node_features[p]).copied().collect(),
                None => Vec::new(),
            })
            .collect();
        let mut tree = Self { root, parent, separators, node_features, owner: vec![usize::MAX; vertices] };
        // first node in breadth-first order from the root that holds the feature
        for u in tree.bfs_order() {
            for &f in &tree.node_features[u] {
                if tree.owner[f] == usize::MAX {
                    tree.owner[f] = u;
                }
            }
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, u: usize) -> Option<usize> {
        self.parent[u]
    }

    /// Features shared by `u` and its parent.
    pub fn separator(&self, u: usize) -> &[usize] {
        &self.separators[u]
    }

    pub fn node_features(&self, u: usize) -> &BTreeSet<usize> {
        &self.node_features[u]
    }

    pub fn owner(&self, feature: usize) -> usize {
        self.owner[feature]
    }

    pub fn dim(&self) -> usize {
        self.owner.len()
    }

    /// Same tree with a different feature ownership. Each owner must contain
    /// the feature it owns.
    pub fn with_owners(&self, owner: Vec<usize>) -> Option<Self> {
        if owner.len() != self.owner.len() {
            return None;
        }
        if owner.iter().enumerate().any(|(f, &u)| u >= self.len() || !self.node_features[u].contains(&f)) {
            return None;
        }
        Some(Self { owner, ..self.clone() })
    }

    /// Neighbours of `u` with the separator of the connecting edge.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        let up = self.parent[u].map(|p| (p, self.separators[u].as_slice()));
        let down = (0..self.len()).filter(move |&c| self.parent[c] == Some(u)).map(move |c| (c, self.separators[c].as_slice()));
        up.into_iter().chain(down)
    }

    fn bfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        let mut queue = VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            queue.extend((0..self.len()).filter(|&c| self.parent[c] == Some(u)));
        }
        order
    }

    /// Orientation of the tree towards `root`: nodes in post-order, with
    /// each node's parent and the separator to that parent.
    pub fn rooted_at(&self, root: usize) -> Rooted {
        let n = self.len();
        let mut parent = vec![None; n];
        let mut separator = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut pre = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            pre.push(u);
            for (v, sep) in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    separator[v] = sep.to_vec();
                    children[u].push(v);
                    stack.push(v);
                }
            }
        }
        pre.reverse();
        Rooted { post_order: pre, parent, separator, children }
    }

    /// For every feature, the nodes holding it induce a connected subtree.
    pub fn satisfies_running_intersection(&self) -> bool {
        for f in 0..self.dim() {
            let holders: Vec<usize> = (0..self.len()).filter(|&u| self.node_features[u].contains(&f)).collect();
            if holders.is_empty() {
                continue;
            }
            let mut reached = vec![false; self.len()];
            let mut stack = vec![holders[0]];
            reached[holders[0]] = true;
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if !reached[v] && self.node_features[v].contains(&f) {
                        reached[v] = true;
                        stack.push(v);
                    }
                }
            }
            if holders.iter().any(|&u| !reached[u]) {
                return false;
            }
        }
        true
    }
}

/// A join tree oriented towards a chosen root.
#[derive(Debug, Clone)]
pub struct Rooted {
    pub post_order: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    pub separator: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}
