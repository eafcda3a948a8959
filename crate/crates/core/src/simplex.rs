//! Dense two-phase simplex for the small linear programs behind the dual cone
//! tests, and the epigraph minimax `min_τ max_j (b_j − a_jᵀτ)` built on it.

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program has no rows")]
    NoRows,
    #[error("row {row} has {found} entries, expected {expected}")]
    Shape {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("right-hand side is not finite")]
    NonFinite,
    #[error("pivot limit reached")]
    PivotLimit,
}

/// Outcome of `min cᵀx s.t. Ax = b, x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    /// `x` is feasible and `x + s·ray` stays feasible with objective → −∞.
    Unbounded { x: Vec<f64>, ray: Vec<f64> },
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width - 1
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[col];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = col;
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let rhs = self.rhs();
        self.obj = vec![0.0; self.width];
        self.obj[..costs.len()].copy_from_slice(costs);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = if b < costs.len() { costs[b] } else { 0.0 };
            if cb != 0.0 {
                for j in 0..=rhs {
                    self.obj[j] -= cb * self.rows[i][j];
                }
            }
        }
    }

    /// Runs Bland's rule over columns `< ncols`. Returns the entering column
    /// of an unbounded direction if one is found.
    fn optimize(&mut self, ncols: usize) -> Result<Option<usize>, LpError> {
        let rhs = self.rhs();
        for _ in 0..MAX_PIVOTS {
            let Some(col) = (0..ncols).find(|&j| self.obj[j] < -PIVOT_EPS) else {
                return Ok(None);
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[col] > PIVOT_EPS {
                    let ratio = row[rhs] / row[col];
                    let better = match best {
                        None => true,
                        Some((r, _, b)) => ratio < r || (ratio == r && self.basis[i] < b),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(r, col),
                None => return Ok(Some(col)),
            }
        }
        Err(LpError::PivotLimit)
    }

    fn solution(&self, nvars: usize) -> Vec<f64> {
        let rhs = self.rhs();
        let mut x = vec![0.0; nvars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < nvars {
                x[b] = self.rows[i][rhs];
            }
        }
        x
    }
}

/// Solves `min cᵀx s.t. Ax = b, x ≥ 0` by the two-phase method with Bland's rule.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome, LpError> {
    let m = a.len();
    if m == 0 {
        return Err(LpError::NoRows);
    }
    let nvars = c.len();
    for (row, r) in a.iter().enumerate() {
        if r.len() != nvars {
            return Err(LpError::Shape {
                row,
                expected: nvars,
                found: r.len(),
            });
        }
    }
    if b.len() != m {
        return Err(LpError::Shape {
            row: m,
            expected: m,
            found: b.len(),
        });
    }
    if b.iter().chain(c).chain(a.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(LpError::NonFinite);
    }

    let width = nvars + m + 1;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut r = vec![0.0; width];
        for j in 0..nvars {
            r[j] = sign * a[i][j];
        }
        r[nvars + i] = 1.0;
        r[width - 1] = sign * b[i];
        rows.push(r);
    }
    let mut t = Tableau {
        rows,
        obj: Vec::new(),
        basis: (nvars..nvars + m).collect(),
        width,
    };

    // phase one: minimize the sum of artificials
    let mut phase_one = vec![0.0; nvars + m];
    phase_one[nvars..].iter_mut().for_each(|v| *v = 1.0);
    t.set_costs(&phase_one);
    t.optimize(nvars + m)?;
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let infeasibility = -t.obj[width - 1];
    if infeasibility > 1e-9 * scale {
        return Ok(LpOutcome::Infeasible);
    }

    // drive artificials out of the basis; drop redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= nvars {
            match (0..nvars).find(|&j| t.rows[i][j].abs() > 1e-9) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    for row in t.rows.iter_mut() {
        row[nvars..width - 1].iter_mut().for_each(|v| *v = 0.0);
    }
    if t.rows.is_empty() {
        // every row was redundant: x = 0 is the only basic solution
        return match c.iter().position(|&cj| cj < 0.0) {
            Some(j) => {
                let mut ray = vec![0.0; nvars];
                ray[j] = 1.0;
                Ok(LpOutcome::Unbounded {
                    x: vec![0.0; nvars],
                    ray,
                })
            }
            None => Ok(LpOutcome::Optimal {
                x: vec![0.0; nvars],
                objective: 0.0,
            }),
        };
    }

    t.set_costs(c);
    let entering = t.optimize(nvars)?;
    let x = t.solution(nvars);
    match entering {
        None => {
            let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            Ok(LpOutcome::Optimal { x, objective })
        }
        Some(col) => {
            let mut ray = vec![0.0; nvars];
            ray[col] = 1.0;
            for (i, &bv) in t.basis.iter().enumerate() {
                if bv < nvars {
                    ray[bv] = -t.rows[i][col];
                }
            }
            Ok(LpOutcome::Unbounded { x, ray })
        }
    }
}

/// One constraint `b − aᵀτ ≤ t` of the epigraph problem.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxRow {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxSolution {
    /// `min_τ max_j (b_j − a_jᵀτ)`; `−∞` when unbounded below.
    pub t_min: f64,
    /// An attaining `τ` (a feasible starting point when unbounded).
    pub tau: Vec<f64>,
    /// Direction along which the maximum decreases without bound.
    pub ray: Option<Vec<f64>>,
}

/// `max_j (b_j − a_jᵀτ)`.
pub fn max_violation(rows: &[MinimaxRow], tau: &[f64]) -> f64 {
    rows.iter()
        .map(|r| r.b - r.a.iter().zip(tau).map(|(a, t)| a * t).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Minimizes `max_j (b_j − a_jᵀτ)` over `τ ∈ Rⁿ`.
///
/// A row with `b = +∞` makes the value `+∞`. The reported `t_min` is
/// re-evaluated at the returned `τ`, so it is always attained.
pub fn lp_min_infeasibility(rows: &[MinimaxRow]) -> Result<MinimaxSolution, LpError> {
    let Some(first) = rows.first() else {
        return Err(LpError::NoRows);
    };
    let n = first.a.len();
    for (row, r) in rows.iter().enumerate() {
        if r.a.len() != n {
            return Err(LpError::Shape {
                row,
                expected: n,
                found: r.a.len(),
            });
        }
        if r.a.iter().any(|v| !v.is_finite()) || r.b.is_nan() || r.b == f64::NEG_INFINITY {
            return Err(LpError::NonFinite);
        }
    }
    if rows.iter().any(|r| r.b == f64::INFINITY) {
        return Ok(MinimaxSolution {
            t_min: f64::INFINITY,
            tau: vec![0.0; n],
            ray: None,
        });
    }

    // variables: τ⁺ (n), τ⁻ (n), t⁺, t⁻, surplus s (m)
    let m = rows.len();
    let nvars = 2 * n + 2 + m;
    let mut c = vec![0.0; nvars];
    c[2 * n] = 1.0;
    c[2 * n + 1] = -1.0;
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for (j, r) in rows.iter().enumerate() {
        let mut row = vec![0.0; nvars];
        for d in 0..n {
            row[d] = r.a[d];
            row[n + d] = -r.a[d];
        }
        row[2 * n] = 1.0;
        row[2 * n + 1] = -1.0;
        row[2 * n + 2 + j] = -1.0;
        a.push(row);
        b.push(r.b);
    }
    let split = |x: &[f64]| -> Vec<f64> { (0..n).map(|d| x[d] - x[n + d]).collect() };
    match minimize(&c, &a, &b)? {
        LpOutcome::Optimal { x, .. } => {
            let tau = split(&x);
            Ok(MinimaxSolution {
                t_min: max_violation(rows, &tau),
                tau,
                ray: None,
            })
        }
        LpOutcome::Unbounded { x, ray } => Ok(MinimaxSolution {
            t_min: f64::NEG_INFINITY,
            tau: split(&x),
            ray: Some(split(&ray)),
        }),
        // t large always satisfies every row
        LpOutcome::Infeasible => unreachable!("epigraph program is always feasible"),
    }
}
