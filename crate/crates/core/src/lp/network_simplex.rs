//! Primal network simplex specialised to the complete bipartite
//! transportation network.
//!
//! Nodes `0..n` are sources, `n..n+m` sinks and `n+m` an artificial root.
//! Arc `i*m + j` joins source `i` to sink `j`; arc `n*m + v` is the
//! artificial arc between node `v` and the root. The basis is kept strongly
//! feasible (every zero-flow tree arc points towards the root), and the
//! leaving arc is chosen as the last blocking arc met when walking the
//! pivot cycle from its apex. With that rule the method terminates under
//! any entering-arc selection, including degenerate supplies.

use super::PivotRule;

/// Result of a run: arc flows on the real arcs plus bookkeeping.
pub(crate) struct SimplexOutcome {
    pub flows: Vec<f64>,
    pub iterations: usize,
    pub optimal: bool,
    /// Largest flow left on an artificial arc.
    pub artificial_flow: f64,
}

pub(crate) struct NetworkSimplex<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    art_cost: f64,
    eps: f64,
    /// Flow on every arc, real arcs first.
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    /// Artificial arc direction: true when it runs node -> root.
    art_up: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
    pi: Vec<f64>,
    next_arc: usize,
    block_size: usize,
    stack: Vec<usize>,
}

impl<'a> NetworkSimplex<'a> {
    pub fn new(cost: &'a [f64], supply: &[f64], demand: &[f64]) -> Self {
        let n = supply.len();
        let m = demand.len();
        debug_assert_eq!(cost.len(), n * m);
        let root = n + m;
        let nodes = n + m + 1;
        let real = n * m;

        let max_abs = cost.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        let art_cost = (max_abs + 1.0) * nodes as f64;
        let eps = 1e-12 * (1.0 + max_abs);

        let mut flow = vec![0.0; real + n + m];
        let mut in_tree = vec![false; real + n + m];
        let mut art_up = vec![true; n + m];
        let mut parent = vec![root; nodes];
        let mut pred = vec![usize::MAX; nodes];
        let mut depth = vec![1; nodes];
        let mut pi = vec![0.0; nodes];
        depth[root] = 0;
        parent[root] = usize::MAX;

        for v in 0..(n + m) {
            let arc = real + v;
            // Sources push towards the root; sinks with positive demand
            // are fed from it. Zero-demand sinks point upwards so the
            // initial tree is strongly feasible.
            let (amount, up) = if v < n { (supply[v], true) } else { (demand[v - n], demand[v - n] <= 0.0) };
            art_up[v] = up;
            flow[arc] = amount.abs();
            in_tree[arc] = true;
            pred[v] = arc;
            // Reduced cost zero on tree arcs: c + pi[src] - pi[tgt] = 0.
            pi[v] = if up { -art_cost } else { art_cost };
        }
        let children = {
            let mut c = vec![Vec::new(); nodes];
            c[root] = (0..(n + m)).collect();
            c
        };
        let block_size = ((real as f64).sqrt().ceil() as usize).max(10).min(real.max(1));

        Self {
            n,
            m,
            cost,
            art_cost,
            eps,
            flow,
            in_tree,
            art_up,
            parent,
            pred,
            depth,
            children,
            pi,
            next_arc: 0,
            block_size,
            stack: Vec::new(),
        }
    }

    fn root(&self) -> usize {
        self.n + self.m
    }

    fn arc_ends(&self, arc: usize) -> (usize, usize) {
        let real = self.n * self.m;
        if arc < real {
            (arc / self.m, self.n + arc % self.m)
        } else {
            let v = arc - real;
            if self.art_up[v] {
                (v, self.root())
            } else {
                (self.root(), v)
            }
        }
    }

    fn arc_cost(&self, arc: usize) -> f64 {
        if arc < self.n * self.m {
            self.cost[arc]
        } else {
            self.art_cost
        }
    }

    #[inline]
    fn reduced_cost(&self, arc: usize) -> f64 {
        let i = arc / self.m;
        let j = self.n + arc % self.m;
        self.cost[arc] + self.pi[i] - self.pi[j]
    }

    fn find_entering(&mut self, rule: PivotRule) -> Option<usize> {
        let real = self.n * self.m;
        match rule {
            PivotRule::Bland => (0..real).find(|&a| !self.in_tree[a] && self.reduced_cost(a) < -self.eps),
            PivotRule::BlockSearch => {
                let mut best = None;
                let mut best_rc = -self.eps;
                let mut scanned_in_block = 0;
                let mut a = self.next_arc;
                for _ in 0..real {
                    if !self.in_tree[a] {
                        let rc = self.reduced_cost(a);
                        if rc < best_rc {
                            best_rc = rc;
                            best = Some(a);
                        }
                    }
                    scanned_in_block += 1;
                    a += 1;
                    if a == real {
                        a = 0;
                    }
                    if scanned_in_block == self.block_size {
                        if best.is_some() {
                            self.next_arc = a;
                            return best;
                        }
                        scanned_in_block = 0;
                    }
                }
                self.next_arc = a;
                best
            }
        }
    }

    fn find_join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] >= self.depth[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        u
    }

    /// True when the tree arc into `u` points from `u` to its parent.
    fn pred_up(&self, u: usize) -> bool {
        let (src, _) = self.arc_ends(self.pred[u]);
        src == u
    }

    fn remove_child(&mut self, parent: usize, child: usize) {
        let list = &mut self.children[parent];
        let pos = list.iter().position(|&c| c == child).expect("child present in tree");
        list.swap_remove(pos);
    }

    /// One pivot. Returns false on an unbounded cycle (cannot happen for
    /// transportation networks with finite supplies).
    fn pivot(&mut self, entering: usize) -> bool {
        let (first, second) = self.arc_ends(entering);
        let join = self.find_join(first, second);

        let mut delta = f64::INFINITY;
        let mut u_out = usize::MAX;
        let mut side = 0;
        let mut u = first;
        while u != join {
            if self.pred_up(u) {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    u_out = u;
                    side = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            if !self.pred_up(u) {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    u_out = u;
                    side = 2;
                }
            }
            u = self.parent[u];
        }
        if side == 0 {
            return false;
        }

        if delta > 0.0 {
            self.flow[entering] += delta;
            let mut u = first;
            while u != join {
                let a = self.pred[u];
                if self.pred_up(u) {
                    self.flow[a] -= delta;
                } else {
                    self.flow[a] += delta;
                }
                u = self.parent[u];
            }
            let mut u = second;
            while u != join {
                let a = self.pred[u];
                if self.pred_up(u) {
                    self.flow[a] += delta;
                } else {
                    self.flow[a] -= delta;
                }
                u = self.parent[u];
            }
        }
        let leaving = self.pred[u_out];
        self.flow[leaving] = 0.0;

        let (u_in, v_in) = if side == 1 { (first, second) } else { (second, first) };

        // Re-hang the subtree of u_out below v_in, reversing the path
        // u_in -> ... -> u_out.
        let old_parent = self.parent[u_out];
        self.remove_child(old_parent, u_out);
        let mut prev = v_in;
        let mut prev_arc = entering;
        let mut cur = u_in;
        loop {
            let next = self.parent[cur];
            let next_arc = self.pred[cur];
            if cur != u_out {
                self.remove_child(next, cur);
            }
            self.parent[cur] = prev;
            self.pred[cur] = prev_arc;
            self.children[prev].push(cur);
            if cur == u_out {
                break;
            }
            prev = cur;
            prev_arc = next_arc;
            cur = next;
        }
        self.in_tree[leaving] = false;
        self.in_tree[entering] = true;

        // Potentials shift by a constant over the moved subtree; depths
        // are recomputed.
        let (src, tgt) = self.arc_ends(entering);
        let rc = self.arc_cost(entering) + self.pi[src] - self.pi[tgt];
        let sigma = if u_in == src { -rc } else { rc };
        self.depth[u_in] = self.depth[v_in] + 1;
        self.stack.clear();
        self.stack.push(u_in);
        while let Some(x) = self.stack.pop() {
            self.pi[x] += sigma;
            let d = self.depth[x] + 1;
            for k in 0..self.children[x].len() {
                let c = self.children[x][k];
                self.depth[c] = d;
                self.stack.push(c);
            }
        }
        true
    }

    pub fn run(mut self, rule: PivotRule, max_iters: usize) -> SimplexOutcome {
        let mut iterations = 0;
        let mut optimal = false;
        while iterations < max_iters {
            match self.find_entering(rule) {
                None => {
                    optimal = true;
                    break;
                }
                Some(a) => {
                    if !self.pivot(a) {
                        break;
                    }
                    iterations += 1;
                }
            }
        }
        if !optimal && iterations >= max_iters {
            optimal = self.find_entering(rule).is_none();
        }
        let real = self.n * self.m;
        let artificial_flow = self.flow[real..].iter().fold(0.0_f64, |a, &f| a.max(f));
        self.flow.truncate(real);
        SimplexOutcome { flows: self.flow, iterations, optimal, artificial_flow }
    }
}
