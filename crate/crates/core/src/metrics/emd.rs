//! Earth mover's distance between two grids, linear variant:
//!
//! `EMD(p, q) = min sum f_ij d_ij + |sum p - sum q| * max d_ij`
//!
//! subject to `f_ij >= 0`, `sum_j f_ij <= p_i`, `sum_i f_ij <= q_j` and
//! `sum f_ij = min(sum p, sum q)`.
//!
//! The transportation problem is solved exactly with successive shortest
//! augmenting paths on the bipartite residual graph, using node potentials so
//! each search is a Dijkstra over nonnegative reduced costs. Since the ground
//! distance is a metric, mass shared by `p` and `q` in the same bin can stay
//! in place at zero cost; only the surplus bins of `p` and the deficit bins of
//! `q` enter the solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::SaliencyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum GroundDistance {
    /// Distance between cell centers, in cells.
    #[default]
    Euclidean,
    Manhattan,
}

impl GroundDistance {
    pub fn between(self, width: usize, a: usize, b: usize) -> f64 {
        let (ar, ac) = ((a / width) as f64, (a % width) as f64);
        let (br, bc) = ((b / width) as f64, (b % width) as f64);
        let (dr, dc) = (ar - br, ac - bc);
        match self {
            GroundDistance::Euclidean => libm::sqrt(dr * dr + dc * dc),
            GroundDistance::Manhattan => dr.abs() + dc.abs(),
        }
    }

    /// Largest distance between any two cells of a `height x width` grid.
    pub fn max_on(self, height: usize, width: usize) -> f64 {
        let (dr, dc) = ((height - 1) as f64, (width - 1) as f64);
        match self {
            GroundDistance::Euclidean => libm::sqrt(dr * dr + dc * dc),
            GroundDistance::Manhattan => dr + dc,
        }
    }
}

pub const DEFAULT_EMD_RESOLUTION: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmdConfig {
    /// Grids taller or wider than this are downsampled (mass-preserving)
    /// before solving.
    pub max_height: usize,
    pub max_width: usize,
    pub ground: GroundDistance,
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self { max_height: DEFAULT_EMD_RESOLUTION, max_width: DEFAULT_EMD_RESOLUTION, ground: GroundDistance::Euclidean }
    }
}

impl EmdConfig {
    pub fn with_resolution(res: usize) -> Self {
        Self { max_height: res, max_width: res, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub from: usize,
    pub to: usize,
    pub mass: f64,
}

/// Optimal flows between bins of the (possibly downsampled) grids.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPlan {
    /// Grid size the bin indices refer to.
    pub dims: (usize, usize),
    pub flows: Vec<Flow>,
    /// `sum f_ij d_ij`
    pub transport_cost: f64,
    /// `|sum p - sum q| * max d_ij`
    pub penalty: f64,
    /// transport cost plus penalty
    pub total_cost: f64,
}

impl FlowPlan {
    /// Largest violation of the four flow constraints for the given bin
    /// masses (zero for a feasible plan).
    pub fn max_violation(&self, p: &[f64], q: &[f64]) -> f64 {
        let mut out_of = vec![0.0; p.len()];
        let mut into = vec![0.0; q.len()];
        let mut total = 0.0;
        let mut worst: f64 = 0.0;
        for f in &self.flows {
            worst = worst.max(-f.mass);
            out_of[f.from] += f.mass;
            into[f.to] += f.mass;
            total += f.mass;
        }
        for (o, &cap) in out_of.iter().zip(p) {
            worst = worst.max(o - cap);
        }
        for (i, &cap) in into.iter().zip(q) {
            worst = worst.max(i - cap);
        }
        let target = p.iter().sum::<f64>().min(q.iter().sum());
        worst.max((total - target).abs())
    }

    /// `sum f_ij d_ij` recomputed from the flows.
    pub fn cost_of_flows(&self, ground: GroundDistance) -> f64 {
        self.flows.iter().map(|f| f.mass * ground.between(self.dims.1, f.from, f.to)).sum()
    }
}

/// EMD between two equally sized nonnegative grids.
///
/// Two all-zero grids have distance 0 by convention. Grids larger than the
/// configured resolution are area-downsampled first.
pub fn emd(p: &SaliencyGrid, q: &SaliencyGrid, cfg: &EmdConfig) -> Result<(f64, FlowPlan)> {
    p.ensure_same_dims(q)?;
    let (h, w) = p.dims();
    let (th, tw) = (h.min(cfg.max_height.max(1)), w.min(cfg.max_width.max(1)));
    let (p, q) = if (th, tw) != (h, w) {
        (p.downsample_area(th, tw)?, q.downsample_area(th, tw)?)
    } else {
        (p.clone(), q.clone())
    };
    let plan = emd_bins(p.values(), q.values(), th, tw, cfg.ground)?;
    Ok((plan.total_cost, plan))
}

/// EMD on raw row-major bin masses of a `height x width` grid.
pub fn emd_bins(p: &[f64], q: &[f64], height: usize, width: usize, ground: GroundDistance) -> Result<FlowPlan> {
    if p.len() != height * width || q.len() != height * width {
        return Err(Error::LengthMismatch { height, width, got: p.len().max(q.len()) });
    }
    let sum_p: f64 = p.iter().sum();
    let sum_q: f64 = q.iter().sum();
    let penalty = (sum_p - sum_q).abs() * ground.max_on(height, width);
    let mut flows = Vec::new();

    // mass that stays in its own bin
    let mut supply = Vec::new();
    let mut demand = Vec::new();
    for (bin, (&a, &b)) in p.iter().zip(q).enumerate() {
        let shared = a.min(b);
        if shared > 0.0 {
            flows.push(Flow { from: bin, to: bin, mass: shared });
        }
        if a > shared {
            supply.push((bin, a - shared));
        } else if b > shared {
            demand.push((bin, b - shared));
        }
    }

    if !supply.is_empty() && !demand.is_empty() {
        let cost: Vec<f64> = supply
            .iter()
            .flat_map(|&(i, _)| demand.iter().map(move |&(j, _)| ground.between(width, i, j)))
            .collect();
        let s: Vec<f64> = supply.iter().map(|&(_, m)| m).collect();
        let d: Vec<f64> = demand.iter().map(|&(_, m)| m).collect();
        for (si, di, mass) in solve_transport(&s, &d, &cost) {
            flows.push(Flow { from: supply[si].0, to: demand[di].0, mass });
        }
    }

    let mut plan = FlowPlan { dims: (height, width), flows, transport_cost: 0.0, penalty, total_cost: 0.0 };
    plan.transport_cost = plan.cost_of_flows(ground);
    plan.total_cost = plan.transport_cost + penalty;
    Ok(plan)
}

/// Min-cost transportation of `min(sum supply, sum demand)` units over a
/// complete bipartite graph with `cost[i * demand.len() + j]`. Returns
/// `(source, sink, mass)` triples with positive mass.
///
/// Primal network simplex with block pricing. Every node starts hanging off
/// an artificial root; root arcs on the surplus side are free, all others
/// cost more than any real route. Leaving arcs follow Cunningham's rule, so
/// the tree stays strongly feasible and degenerate pivots cannot cycle.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = supply.len();
    let m = demand.len();
    debug_assert_eq!(cost.len(), n * m);
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let mut simplex = Simplex::new(supply, demand, cost);
    while let Some(e) = simplex.entering() {
        if !simplex.pivot(e) {
            break;
        }
    }
    let mut out = Vec::new();
    for (e, &f) in simplex.flow[..n * m].iter().enumerate() {
        if f > 0.0 {
            out.push((e / m, e % m, f));
        }
    }
    out
}

const NONE: usize = usize::MAX;

struct Simplex<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    root: usize,
    // the artificial arc of node v is n*m + v; `up[v]` when it points v -> root
    up: Vec<bool>,
    art_cost: Vec<f64>,
    flow: Vec<f64>,
    basis: Vec<usize>,
    slot: Vec<usize>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    eps: f64,
    next: usize,
    block: usize,
    tree: Vec<Vec<usize>>,
    stack: Vec<usize>,
    side_k: Vec<usize>,
    side_l: Vec<usize>,
}

impl<'a> Simplex<'a> {
    fn new(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let (n, m) = (supply.len(), demand.len());
        let nodes = n + m + 1;
        let arcs = n * m + n + m;
        let total_s: f64 = supply.iter().sum();
        let total_d: f64 = demand.iter().sum();
        let max_c = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let big = 1.0 + 2.0 * max_c;

        let mut up = vec![false; n + m];
        let mut art_cost = vec![big; n + m];
        let mut flow = vec![0.0; arcs];
        for (i, &s) in supply.iter().enumerate() {
            if s > 0.0 {
                up[i] = true;
                flow[n * m + i] = s;
                if total_s > total_d {
                    art_cost[i] = 0.0;
                }
            }
        }
        for (j, &d) in demand.iter().enumerate() {
            flow[n * m + n + j] = d.max(0.0);
            if total_d > total_s {
                art_cost[n + j] = 0.0;
            }
        }
        let basis: Vec<usize> = (n * m..arcs).collect();
        let mut slot = vec![NONE; arcs];
        for (k, &e) in basis.iter().enumerate() {
            slot[e] = k;
        }
        let mut s = Simplex {
            n,
            m,
            cost,
            root: n + m,
            up,
            art_cost,
            flow,
            basis,
            slot,
            parent: vec![NONE; nodes],
            pred: vec![NONE; nodes],
            depth: vec![0; nodes],
            pi: vec![0.0; nodes],
            eps: 1e-13 * big,
            next: 0,
            block: (libm::sqrt(arcs as f64) as usize).max(16),
            tree: vec![Vec::new(); nodes],
            stack: Vec::with_capacity(nodes),
            side_k: Vec::new(),
            side_l: Vec::new(),
        };
        for k in 0..s.basis.len() {
            let e = s.basis[k];
            let (t, h) = s.ends(e);
            s.tree[t].push(e);
            s.tree[h].push(e);
        }
        let root = s.root;
        s.hang(root, NONE, NONE);
        s
    }

    fn ends(&self, e: usize) -> (usize, usize) {
        let nm = self.n * self.m;
        if e < nm {
            (e / self.m, self.n + e % self.m)
        } else if self.up[e - nm] {
            (e - nm, self.root)
        } else {
            (self.root, e - nm)
        }
    }

    fn arc_cost(&self, e: usize) -> f64 {
        let nm = self.n * self.m;
        if e < nm {
            self.cost[e]
        } else {
            self.art_cost[e - nm]
        }
    }

    fn reduced(&self, e: usize) -> f64 {
        let (t, h) = self.ends(e);
        self.arc_cost(e) + self.pi[t] - self.pi[h]
    }

    /// Attach `top` below `parent` through arc `via` and recompute links,
    /// depths and potentials for everything hanging off it.
    fn hang(&mut self, top: usize, parent: usize, via: usize) {
        self.parent[top] = parent;
        self.pred[top] = via;
        if parent == NONE {
            self.depth[top] = 0;
            self.pi[top] = 0.0;
        } else {
            self.set_from_parent(top);
        }
        self.stack.clear();
        self.stack.push(top);
        while let Some(u) = self.stack.pop() {
            for k in 0..self.tree[u].len() {
                let e = self.tree[u][k];
                if e == self.pred[u] {
                    continue;
                }
                let (t, h) = self.ends(e);
                let v = if t == u { h } else { t };
                self.parent[v] = u;
                self.pred[v] = e;
                self.set_from_parent(v);
                self.stack.push(v);
            }
        }
    }

    fn set_from_parent(&mut self, v: usize) {
        let (u, e) = (self.parent[v], self.pred[v]);
        self.depth[v] = self.depth[u] + 1;
        // tree arcs have zero reduced cost
        self.pi[v] = if self.ends(e).0 == u { self.pi[u] + self.arc_cost(e) } else { self.pi[u] - self.arc_cost(e) };
    }

    /// Most negative reduced cost within the first block that has one.
    fn entering(&mut self) -> Option<usize> {
        let arcs = self.flow.len();
        let mut best = None;
        let mut best_rc = -self.eps;
        let mut seen = 0;
        for _ in 0..arcs {
            let e = self.next;
            self.next = if e + 1 == arcs { 0 } else { e + 1 };
            if self.slot[e] == NONE {
                let rc = self.reduced(e);
                if rc < best_rc {
                    best_rc = rc;
                    best = Some(e);
                }
            }
            seen += 1;
            if seen == self.block {
                if best.is_some() {
                    return best;
                }
                seen = 0;
            }
        }
        best
    }

    /// Push flow around the cycle closed by `e_in`. False if unbounded.
    fn pivot(&mut self, e_in: usize) -> bool {
        let (k, l) = self.ends(e_in);
        self.side_k.clear();
        self.side_l.clear();
        let (mut a, mut b) = (k, l);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                self.side_k.push(a);
                a = self.parent[a];
            } else {
                self.side_l.push(b);
                b = self.parent[b];
            }
        }

        // The cycle runs join -> k -> l -> join. On the k side an arc pointing
        // up opposes it, on the l side one pointing down does. The last
        // blocking arc in cycle order leaves.
        let mut theta = f64::INFINITY;
        let mut leaving = NONE;
        for idx in (0..self.side_k.len()).rev() {
            let v = self.side_k[idx];
            let e = self.pred[v];
            if self.ends(e).0 == v && self.flow[e] <= theta {
                theta = self.flow[e];
                leaving = v;
            }
        }
        for idx in 0..self.side_l.len() {
            let v = self.side_l[idx];
            let e = self.pred[v];
            if self.ends(e).1 == v && self.flow[e] <= theta {
                theta = self.flow[e];
                leaving = v;
            }
        }
        if leaving == NONE {
            return false;
        }

        if theta > 0.0 {
            self.flow[e_in] += theta;
            for idx in 0..self.side_k.len() {
                let v = self.side_k[idx];
                let e = self.pred[v];
                if self.ends(e).0 == v {
                    self.flow[e] -= theta;
                } else {
                    self.flow[e] += theta;
                }
            }
            for idx in 0..self.side_l.len() {
                let v = self.side_l[idx];
                let e = self.pred[v];
                if self.ends(e).1 == v {
                    self.flow[e] -= theta;
                } else {
                    self.flow[e] += theta;
                }
            }
        }
        let e_out = self.pred[leaving];
        self.flow[e_out] = 0.0;
        let slot = self.slot[e_out];
        self.basis[slot] = e_in;
        self.slot[e_in] = slot;
        self.slot[e_out] = NONE;

        let (t, h) = self.ends(e_out);
        for v in [t, h] {
            let at = self.tree[v].iter().position(|&x| x == e_out).unwrap();
            self.tree[v].swap_remove(at);
        }
        self.tree[k].push(e_in);
        self.tree[l].push(e_in);
        // the side cut off by e_out re-hangs from the entering arc
        let cut_k = self.side_k.contains(&leaving);
        let (inner, outer) = if cut_k { (k, l) } else { (l, k) };
        self.hang(inner, outer, e_in);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: usize, w: usize, v: &[f64]) -> SaliencyGrid {
        SaliencyGrid::new(h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn identical_grids_cost_nothing() {
        let p = grid(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        let (d, plan) = emd(&p, &p, &EmdConfig::default()).unwrap();
        assert_eq!(d, 0.0);
        assert!(plan.flows.iter().all(|f| f.from == f.to));
    }

    #[test]
    fn corner_to_corner() {
        let p = grid(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let q = grid(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let (d, plan) = emd(&p, &q, &EmdConfig::default()).unwrap();
        assert!((d - core::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(plan.flows, vec![Flow { from: 0, to: 3, mass: 1.0 }]);
    }

    #[test]
    fn empty_target_pays_only_penalty() {
        let p = grid(3, 4, &[0.5, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25]);
        let q = SaliencyGrid::zeros(3, 4).unwrap();
        let (d, plan) = emd(&p, &q, &EmdConfig::default()).unwrap();
        assert!(plan.flows.is_empty());
        assert!((d - libm::sqrt(4.0 + 9.0)).abs() < 1e-12);
    }

    #[test]
    fn both_empty_is_zero() {
        let z = SaliencyGrid::zeros(2, 3).unwrap();
        assert_eq!(emd(&z, &z, &EmdConfig::default()).unwrap().0, 0.0);
    }

    #[test]
    fn horizontal_shift_costs_k() {
        for k in 1..6 {
            let mut a = vec![0.0; 8];
            let mut b = vec![0.0; 8];
            a[1] = 1.0;
            b[1 + k.min(6)] = 1.0;
            let (d, _) = emd(&grid(1, 8, &a), &grid(1, 8, &b), &EmdConfig::default()).unwrap();
            assert_eq!(d, k.min(6) as f64);
        }
    }

    #[test]
    fn manhattan_ground() {
        let p = grid(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let q = grid(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let cfg = EmdConfig { ground: GroundDistance::Manhattan, ..EmdConfig::default() };
        assert_eq!(emd(&p, &q, &cfg).unwrap().0, 2.0);
    }

    #[test]
    fn solver_needs_rerouting() {
        // Greedy nearest-first would send source 0 to sink 0 and pay for
        // source 1 travelling far; the optimum crosses.
        let cost = [1.0, 2.0, 1.0, 100.0];
        let flows = solve_transport(&[1.0, 1.0], &[1.0, 1.0], &cost);
        let total: f64 = flows.iter().map(|&(i, j, f)| f * cost[i * 2 + j]).sum();
        assert_eq!(total, 3.0);
    }

    #[test]
    fn unequal_mass_partial_transport() {
        // p has 1.5, q has 1.0: one unit moves, half a unit is penalized.
        let p = [1.0, 0.0, 0.5];
        let q = [0.0, 1.0, 0.0];
        let plan = emd_bins(&p, &q, 1, 3, GroundDistance::Euclidean).unwrap();
        assert!(plan.max_violation(&p, &q) < 1e-12);
        assert!((plan.transport_cost - 1.0).abs() < 1e-12);
        assert!((plan.penalty - 0.5 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn large_inputs_downsampled() {
        let p = SaliencyGrid::from_fn(64, 64, |r, c| ((r + c) % 5) as f64).unwrap().sum_normalize().unwrap();
        let q = SaliencyGrid::from_fn(64, 64, |r, c| ((r * c) % 7) as f64).unwrap().sum_normalize().unwrap();
        let (d, plan) = emd(&p, &q, &EmdConfig::with_resolution(16)).unwrap();
        assert_eq!(plan.dims, (16, 16));
        assert!(d > 0.0);
        assert!(plan.penalty < 1e-12);
    }

    #[test]
    fn dim_mismatch() {
        let p = SaliencyGrid::zeros(2, 2).unwrap();
        let q = SaliencyGrid::zeros(2, 3).unwrap();
        assert!(matches!(emd(&p, &q, &EmdConfig::default()), Err(Error::DimMismatch { .. })));
    }
}
