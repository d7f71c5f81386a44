//! Boykov–Kolmogorov max-flow: two search trees grown from the terminals,
//! augment on contact, re-adopt orphaned nodes. Nodes and arcs are visited
//! in insertion order, so results are reproducible for a fixed build order.

use std::collections::VecDeque;

const NONE: usize = usize::MAX;
const TERMINAL: usize = usize::MAX - 1;
const ORPHAN: usize = usize::MAX - 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Source,
    Sink,
}

pub struct Graph {
    /// Residual source capacity minus residual sink capacity per node.
    tr_cap: Vec<f64>,
    head: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
    flow: f64,
}

impl Graph {
    pub fn new(nodes: usize) -> Self {
        Graph {
            tr_cap: vec![0.0; nodes],
            head: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); nodes],
            flow: 0.0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.tr_cap.len()
    }

    /// Adds arcs `i → j` with capacity `cap` and `j → i` with `rev_cap`.
    pub fn add_edge(&mut self, i: usize, j: usize, cap: f64, rev_cap: f64) {
        let a = self.head.len();
        self.head.push(j);
        self.cap.push(cap);
        self.head.push(i);
        self.cap.push(rev_cap);
        self.adj[i].push(a);
        self.adj[j].push(a + 1);
    }

    /// Adds terminal capacities. The shared part of the two is saturated
    /// immediately and counted as flow.
    pub fn add_terminal(&mut self, i: usize, source: f64, sink: f64) {
        let (mut s, mut t) = (source, sink);
        if self.tr_cap[i] > 0.0 {
            s += self.tr_cap[i];
        } else {
            t -= self.tr_cap[i];
        }
        self.flow += s.min(t);
        self.tr_cap[i] = s - t;
    }

    /// Runs to completion and returns the flow value plus the min-cut side of
    /// every node. Nodes cut off from both terminals land on the source side.
    pub fn solve(mut self) -> (f64, Vec<Segment>) {
        let n = self.node_count();
        let mut tree = vec![Tree::Free; n];
        let mut parent = vec![NONE; n];
        let mut ts = vec![0u64; n];
        let mut dist = vec![0usize; n];
        let mut time = 0u64;
        let mut active: VecDeque<usize> = VecDeque::new();
        let mut queued = vec![false; n];
        let mut orphans: VecDeque<usize> = VecDeque::new();

        for i in 0..n {
            if self.tr_cap[i] != 0.0 {
                tree[i] = if self.tr_cap[i] > 0.0 { Tree::Source } else { Tree::Sink };
                parent[i] = TERMINAL;
                dist[i] = 1;
                active.push_back(i);
                queued[i] = true;
            }
        }

        let mut current: Option<usize> = None;
        loop {
            let i = match current {
                Some(i) if tree[i] != Tree::Free => i,
                _ => {
                    let mut next = None;
                    while let Some(i) = active.pop_front() {
                        queued[i] = false;
                        if tree[i] != Tree::Free {
                            next = Some(i);
                            break;
                        }
                    }
                    match next {
                        Some(i) => i,
                        None => break,
                    }
                }
            };

            // Grow the tree of `i` until it touches the other tree.
            let mut middle = None;
            for &a in &self.adj[i] {
                let j = self.head[a];
                let sister = a ^ 1;
                match tree[i] {
                    Tree::Source if self.cap[a] > 0.0 => match tree[j] {
                        Tree::Free => {
                            tree[j] = Tree::Source;
                            parent[j] = sister;
                            ts[j] = ts[i];
                            dist[j] = dist[i] + 1;
                            if !queued[j] {
                                active.push_back(j);
                                queued[j] = true;
                            }
                        }
                        Tree::Sink => {
                            middle = Some(a);
                            break;
                        }
                        Tree::Source => {
                            if ts[j] <= ts[i] && dist[j] > dist[i] {
                                parent[j] = sister;
                                ts[j] = ts[i];
                                dist[j] = dist[i] + 1;
                            }
                        }
                    },
                    Tree::Sink if self.cap[sister] > 0.0 => match tree[j] {
                        Tree::Free => {
                            tree[j] = Tree::Sink;
                            parent[j] = sister;
                            ts[j] = ts[i];
                            dist[j] = dist[i] + 1;
                            if !queued[j] {
                                active.push_back(j);
                                queued[j] = true;
                            }
                        }
                        Tree::Source => {
                            middle = Some(sister);
                            break;
                        }
                        Tree::Sink => {
                            if ts[j] <= ts[i] && dist[j] > dist[i] {
                                parent[j] = sister;
                                ts[j] = ts[i];
                                dist[j] = dist[i] + 1;
                            }
                        }
                    },
                    _ => {}
                }
            }

            time += 1;
            let Some(m) = middle else {
                current = None;
                continue;
            };
            current = Some(i);
            self.augment(m, &mut parent, &mut orphans);

            // Adoption.
            while let Some(o) = orphans.pop_front() {
                self.adopt(o, &mut tree, &mut parent, &mut ts, &mut dist, time, &mut active, &mut queued, &mut orphans);
            }
        }

        let seg = tree
            .iter()
            .map(|t| if *t == Tree::Sink { Segment::Sink } else { Segment::Source })
            .collect();
        (self.flow, seg)
    }

    /// Pushes the bottleneck along source-root → … → m → … → sink-root.
    fn augment(&mut self, m: usize, parent: &mut [usize], orphans: &mut VecDeque<usize>) {
        let mut bottleneck = self.cap[m];
        let mut i = self.head[m ^ 1];
        loop {
            let a = parent[i];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.cap[a ^ 1]);
            i = self.head[a];
        }
        bottleneck = bottleneck.min(self.tr_cap[i]);
        let mut i = self.head[m];
        loop {
            let a = parent[i];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.cap[a]);
            i = self.head[a];
        }
        bottleneck = bottleneck.min(-self.tr_cap[i]);

        self.cap[m ^ 1] += bottleneck;
        self.cap[m] -= bottleneck;
        let mut i = self.head[m ^ 1];
        loop {
            let a = parent[i];
            if a == TERMINAL {
                break;
            }
            self.cap[a] += bottleneck;
            self.cap[a ^ 1] -= bottleneck;
            if self.cap[a ^ 1] <= 0.0 {
                parent[i] = ORPHAN;
                orphans.push_back(i);
            }
            i = self.head[a];
        }
        self.tr_cap[i] -= bottleneck;
        if self.tr_cap[i] <= 0.0 {
            parent[i] = ORPHAN;
            orphans.push_back(i);
        }
        let mut i = self.head[m];
        loop {
            let a = parent[i];
            if a == TERMINAL {
                break;
            }
            self.cap[a ^ 1] += bottleneck;
            self.cap[a] -= bottleneck;
            if self.cap[a] <= 0.0 {
                parent[i] = ORPHAN;
                orphans.push_back(i);
            }
            i = self.head[a];
        }
        self.tr_cap[i] += bottleneck;
        if self.tr_cap[i] >= 0.0 {
            parent[i] = ORPHAN;
            orphans.push_back(i);
        }
        self.flow += bottleneck;
    }

    #[allow(clippy::too_many_arguments)]
    fn adopt(
        &self,
        o: usize,
        tree: &mut [Tree],
        parent: &mut [usize],
        ts: &mut [u64],
        dist: &mut [usize],
        time: u64,
        active: &mut VecDeque<usize>,
        queued: &mut [bool],
        orphans: &mut VecDeque<usize>,
    ) {
        let side = tree[o];
        // Residual capacity that would carry flow between `o` and neighbor
        // through arc `a` (from `o`) in this tree's direction.
        let usable = |a: usize| match side {
            Tree::Source => self.cap[a ^ 1] > 0.0,
            _ => self.cap[a] > 0.0,
        };
        let mut best: Option<(usize, usize)> = None;
        for &a in &self.adj[o] {
            let j = self.head[a];
            if tree[j] != side || !usable(a) {
                continue;
            }
            // Walk to the root; only terminal-rooted paths are valid.
            let mut d = 0usize;
            let mut k = j;
            let valid = loop {
                if ts[k] == time {
                    d += dist[k];
                    break true;
                }
                let p = parent[k];
                d += 1;
                if p == TERMINAL {
                    ts[k] = time;
                    dist[k] = 1;
                    break true;
                }
                if p == ORPHAN || p == NONE {
                    break false;
                }
                k = self.head[p];
            };
            if !valid {
                continue;
            }
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((a, d));
            }
            // Cache distances along the walked path.
            let mut k = j;
            let mut dk = d;
            while ts[k] != time {
                ts[k] = time;
                dist[k] = dk;
                dk -= 1;
                k = self.head[parent[k]];
            }
        }

        if let Some((a, d)) = best {
            parent[o] = a;
            ts[o] = time;
            dist[o] = d + 1;
            return;
        }

        tree[o] = Tree::Free;
        parent[o] = NONE;
        for &a in &self.adj[o] {
            let j = self.head[a];
            if tree[j] != side {
                continue;
            }
            if usable(a) && !queued[j] {
                active.push_back(j);
                queued[j] = true;
            }
            let p = parent[j];
            if p != TERMINAL && p != ORPHAN && p != NONE && self.head[p] == o {
                parent[j] = ORPHAN;
                orphans.push_back(j);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimum cut by enumerating all 2^n assignments.
    fn brute_force(n: usize, edges: &[(usize, usize, f64, f64)], terms: &[(f64, f64)]) -> f64 {
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let sink = |i: usize| mask >> i & 1 == 1;
            let mut c = 0.0;
            for (i, &(s, t)) in terms.iter().enumerate() {
                c += if sink(i) { s } else { t };
            }
            for &(i, j, f, r) in edges {
                if !sink(i) && sink(j) {
                    c += f;
                }
                if sink(i) && !sink(j) {
                    c += r;
                }
            }
            best = best.min(c);
        }
        best
    }

    fn cut_cost(seg: &[Segment], edges: &[(usize, usize, f64, f64)], terms: &[(f64, f64)]) -> f64 {
        let sink = |i: usize| seg[i] == Segment::Sink;
        let mut c = 0.0;
        for (i, &(s, t)) in terms.iter().enumerate() {
            c += if sink(i) { s } else { t };
        }
        for &(i, j, f, r) in edges {
            if !sink(i) && sink(j) {
                c += f;
            }
            if sink(i) && !sink(j) {
                c += r;
            }
        }
        c
    }

    #[test]
    fn textbook_network() {
        // s→0 (3), s→1 (2), 0→1 (1), 0→2 (3), 1→3 (2), 2→t (2), 3→t (3), 2→3 (1)
        let terms = [(3.0, 0.0), (2.0, 0.0), (0.0, 2.0), (0.0, 3.0)];
        let edges = [(0, 1, 1.0, 0.0), (0, 2, 3.0, 0.0), (1, 3, 2.0, 0.0), (2, 3, 1.0, 0.0)];
        let mut g = Graph::new(4);
        for (i, &(s, t)) in terms.iter().enumerate() {
            g.add_terminal(i, s, t);
        }
        for &(i, j, f, r) in &edges {
            g.add_edge(i, j, f, r);
        }
        let (flow, seg) = g.solve();
        assert_eq!(flow, 5.0);
        assert_eq!(cut_cost(&seg, &edges, &terms), 5.0);
    }

    #[test]
    fn node_with_both_terminals() {
        let mut g = Graph::new(1);
        g.add_terminal(0, 4.0, 1.5);
        let (flow, seg) = g.solve();
        assert_eq!(flow, 1.5);
        assert_eq!(seg, vec![Segment::Source]);
    }

    proptest! {
        #[test]
        fn matches_exhaustive_cut(
            n in 2usize..9,
            raw_edges in proptest::collection::vec((0usize..9, 0usize..9, 0u32..8, 0u32..8), 0..20),
            raw_terms in proptest::collection::vec((0u32..8, 0u32..8), 9),
        ) {
            let edges: Vec<_> = raw_edges
                .into_iter()
                .filter(|&(i, j, _, _)| i < n && j < n && i != j)
                .map(|(i, j, f, r)| (i, j, f as f64 / 4.0, r as f64 / 4.0))
                .collect();
            let terms: Vec<_> = raw_terms[..n].iter().map(|&(s, t)| (s as f64 / 4.0, t as f64 / 4.0)).collect();
            let mut g = Graph::new(n);
            for (i, &(s, t)) in terms.iter().enumerate() {
                g.add_terminal(i, s, t);
            }
            for &(i, j, f, r) in &edges {
                g.add_edge(i, j, f, r);
            }
            let (flow, seg) = g.solve();
            let best = brute_force(n, &edges, &terms);
            prop_assert_eq!(flow, best);
            prop_assert_eq!(cut_cost(&seg, &edges, &terms), best);
        }
    }
}
