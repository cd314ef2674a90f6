//! Dense two-phase simplex (Bland's rule) used as an independent oracle for
//! the transportation solver. Small problems only.

const EPS: f64 = 1e-12;

/// Minimizes `c.x` subject to `a x = b`, `x >= 0`, with `b >= 0`.
/// Returns the optimal value and point, or `None` when infeasible.
pub fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let rows = a.len();
    let n = c.len();
    let width = n + rows;
    // tableau rows: [A | I | b]
    let mut t: Vec<Vec<f64>> = (0..rows)
        .map(|k| {
            let mut row = a[k].clone();
            row.resize(width + 1, 0.0);
            row[n + k] = 1.0;
            row[width] = b[k];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + rows).collect();

    let phase1_cost: Vec<f64> = (0..width).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    run(&mut t, &mut basis, &phase1_cost, width, width);
    let infeasibility: f64 = basis.iter().enumerate().filter(|(_, &j)| j >= n).map(|(k, _)| t[k][width]).sum();
    if infeasibility > 1e-9 {
        return None;
    }
    // drive zero-level artificials out where possible
    for k in 0..rows {
        if basis[k] >= n {
            if let Some(j) = (0..n).find(|&j| t[k][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, k, j);
            }
        }
    }

    let mut cost = c.to_vec();
    cost.resize(width, 0.0);
    run(&mut t, &mut basis, &cost, n, width);

    let mut x = vec![0.0; n];
    for (k, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[k][width];
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    Some((value, x))
}

/// Simplex iterations; only columns `< allowed` may enter.
fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize, width: usize) {
    loop {
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let reduced = cost[j] - basis.iter().enumerate().map(|(k, &bj)| cost[bj] * t[k][j]).sum::<f64>();
            reduced < -EPS
        });
        let Some(j) = entering else { return };
        let mut leave: Option<(usize, f64)> = None;
        for k in 0..t.len() {
            if t[k][j] > EPS {
                let ratio = t[k][width] / t[k][j];
                leave = match leave {
                    None => Some((k, ratio)),
                    Some((lk, lr)) => {
                        if ratio < lr - EPS || (ratio <= lr + EPS && basis[k] < basis[lk]) {
                            Some((k, ratio))
                        } else {
                            Some((lk, lr))
                        }
                    }
                };
            }
        }
        let (k, _) = leave.expect("transport LPs are bounded");
        pivot(t, basis, k, j);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], k: usize, j: usize) {
    let p = t[k][j];
    for v in t[k].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[k].clone();
    for (r, row) in t.iter_mut().enumerate() {
        if r != k {
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[k] = j;
}

/// Minimum of `sum f_ij d_ij` with `sum_j f_ij <= p_i`, `sum_i f_ij <= q_j`,
/// `sum f_ij = min(sum p, sum q)`, written with explicit slack variables.
pub fn transport_lp(p: &[f64], q: &[f64], dist: impl Fn(usize, usize) -> f64) -> f64 {
    let (n, m) = (p.len(), q.len());
    let vars = n * m + n + m;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; vars];
        for j in 0..m {
            row[i * m + j] = 1.0;
        }
        row[n * m + i] = 1.0;
        a.push(row);
        b.push(p[i]);
    }
    for j in 0..m {
        let mut row = vec![0.0; vars];
        for i in 0..n {
            row[i * m + j] = 1.0;
        }
        row[n * m + n + j] = 1.0;
        a.push(row);
        b.push(q[j]);
    }
    let mut total = vec![0.0; vars];
    total[..n * m].fill(1.0);
    a.push(total);
    b.push(p.iter().sum::<f64>().min(q.iter().sum()));

    let mut c = vec![0.0; vars];
    for i in 0..n {
        for j in 0..m {
            c[i * m + j] = dist(i, j);
        }
    }
    simplex_min(&a, &b, &c).expect("transport LP is feasible").0
}

/// Euclidean distance between cells `a` and `b` of a grid `width` wide.
pub fn cell_distance(width: usize, a: usize, b: usize) -> f64 {
    let dr = (a / width) as f64 - (b / width) as f64;
    let dc = (a % width) as f64 - (b % width) as f64;
    (dr * dr + dc * dc).sqrt()
}

/// Full linear-variant EMD computed through the oracle LP.
pub fn emd_oracle(p: &[f64], q: &[f64], height: usize, width: usize) -> f64 {
    let max_d = (((height - 1) * (height - 1) + (width - 1) * (width - 1)) as f64).sqrt();
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    transport_lp(p, q, |i, j| cell_distance(width, i, j)) + (sp - sq).abs() * max_d
}
