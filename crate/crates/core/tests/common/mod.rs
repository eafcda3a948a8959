#![allow(dead_code)]

use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::Rng;
use sonc::circuits::Circuit;
use sonc::poly_support::{ExponentVector, SparsePolynomial, SupportSet};

pub type Q = Ratio<i128>;

pub fn ev(v: &[u32]) -> ExponentVector {
    ExponentVector::new(v.to_vec())
}

/// Solves `[s_1 … s_k; 1 … 1] λ = [β; 1]` over the rationals; `Some(λ)` only
/// when the vertices are affinely independent and every `λ_i > 0`.
pub fn barycentric_oracle(vertices: &[Vec<u32>], beta: &[u32]) -> Option<Vec<Q>> {
    let k = vertices.len();
    let n = beta.len();
    let mut rows: Vec<Vec<Q>> = (0..=n)
        .map(|r| {
            let mut row: Vec<Q> = vertices
                .iter()
                .map(|v| Q::from_integer(if r < n { v[r] as i128 } else { 1 }))
                .collect();
            row.push(Q::from_integer(if r < n { beta[r] as i128 } else { 1 }));
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..=k {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][col] != Q::from_integer(0)) else {
            continue;
        };
        if col == k {
            return None; // inconsistent
        }
        rows.swap(r, p);
        let pv = rows[r][col];
        for x in rows[r].iter_mut() {
            *x /= pv;
        }
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][col];
                if f != Q::from_integer(0) {
                    for j in 0..=k {
                        let t = rows[r][j] * f;
                        rows[i][j] -= t;
                    }
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if pivots.len() != k {
        return None; // dependent vertices
    }
    let lambda: Vec<Q> = (0..k).map(|i| rows[i][k]).collect();
    lambda.iter().all(|l| *l > Q::from_integer(0)).then_some(lambda)
}

fn affinely_independent_oracle(points: &[Vec<u32>]) -> bool {
    // the first point always has the representation λ = e_1
    let beta = points[0].clone();
    let k = points.len();
    let n = beta.len();
    let mut rows: Vec<Vec<Q>> = (0..=n)
        .map(|r| {
            points
                .iter()
                .map(|v| Q::from_integer(if r < n { v[r] as i128 } else { 1 }))
                .collect()
        })
        .collect();
    let mut rank = 0;
    for col in 0..k {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i][col] != Q::from_integer(0)) else {
            continue;
        };
        rows.swap(rank, p);
        for i in rank + 1..rows.len() {
            let f = rows[i][col] / rows[rank][col];
            for j in 0..k {
                let t = rows[rank][j] * f;
                rows[i][j] -= t;
            }
        }
        rank += 1;
    }
    rank == k
}

/// Every circuit of `A` by exhaustive search over subsets of even points.
pub fn brute_force_circuits(support: &SupportSet) -> BTreeSet<(Vec<ExponentVector>, ExponentVector)> {
    let even: Vec<Vec<u32>> = support
        .points()
        .iter()
        .filter(|p| p.entries().iter().all(|e| e % 2 == 0))
        .map(|p| p.entries().to_vec())
        .collect();
    let n = support.n();
    let mut out = BTreeSet::new();
    for mask in 1u64..(1u64 << even.len()) {
        let subset: Vec<Vec<u32>> = (0..even.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| even[i].clone())
            .collect();
        if subset.len() > n + 1 || !affinely_independent_oracle(&subset) {
            continue;
        }
        let mut verts: Vec<ExponentVector> = subset.iter().map(|v| ev(v)).collect();
        verts.sort();
        if subset.len() == 1 {
            out.insert((verts.clone(), verts[0].clone()));
            continue;
        }
        for beta in support.points() {
            if verts.contains(beta) {
                continue;
            }
            if barycentric_oracle(&subset, beta.entries()).is_some() {
                out.insert((verts.clone(), beta.clone()));
            }
        }
    }
    out
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// A random circuit with `n ≤ max_n` and `2 ≤ k ≤ min(max_k, n + 1)`.
pub fn random_circuit<R: Rng>(rng: &mut R, max_n: usize, max_k: usize) -> Circuit {
    loop {
        let n = rng.gen_range(1..=max_n);
        let k = rng.gen_range(2..=max_k.min(n + 1));
        let verts: Vec<Vec<u32>> = (0..k)
            .map(|_| (0..n).map(|_| 2 * rng.gen_range(0..=4u32)).collect())
            .collect();
        if !affinely_independent_oracle(&verts) {
            continue;
        }
        let hi: Vec<u32> = (0..n).map(|d| verts.iter().map(|v| v[d]).max().unwrap()).collect();
        let mut inner = Vec::new();
        let mut point = vec![0u32; n];
        loop {
            if !verts.contains(&point) && barycentric_oracle(&verts, &point).is_some() {
                inner.push(point.clone());
            }
            let mut d = 0;
            while d < n {
                point[d] += 1;
                if point[d] <= hi[d] {
                    break;
                }
                point[d] = 0;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        if inner.is_empty() {
            continue;
        }
        let beta = inner[rng.gen_range(0..inner.len())].clone();
        return Circuit::new(verts.iter().map(|v| ev(v)).collect(), ev(&beta)).unwrap();
    }
}

/// `μ` from the oracle, in the circuit's vertex order.
pub fn oracle_mu(c: &Circuit) -> Vec<f64> {
    let verts: Vec<Vec<u32>> = c.vertices().iter().map(|v| v.entries().to_vec()).collect();
    barycentric_oracle(&verts, c.inner().entries())
        .unwrap()
        .iter()
        .map(|q| *q.numer() as f64 / *q.denom() as f64)
        .collect()
}

/// `Π (c_i/μ_i)^{μ_i}` as a direct product.
pub fn theta_oracle(c: &[f64], circuit: &Circuit) -> f64 {
    oracle_mu(circuit)
        .iter()
        .zip(c)
        .map(|(m, ci)| (ci / m).powf(*m))
        .product()
}

/// Evaluates `Σ |c_α| |x|^α`.
pub fn abs_eval(p: &SparsePolynomial, x: &[f64]) -> f64 {
    let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    p.terms().map(|(e, c)| c.abs() * e.monomial(&ax)).sum()
}

pub fn dense_support(n: usize, d: u32) -> SupportSet {
    let mut pts = Vec::new();
    let mut point = vec![0u32; n];
    loop {
        if point.iter().sum::<u32>() <= d {
            pts.push(ev(&point));
        }
        let mut i = 0;
        while i < n {
            point[i] += 1;
            if point[i] <= d {
                break;
            }
            point[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    SupportSet::new(n, pts).unwrap()
}

/// `c₀ + x1⁶ (+ x2⁶) + a few random terms of degree ≤ 5`, n ∈ {1, 2}.
pub fn random_instance<R: Rng>(rng: &mut R) -> SparsePolynomial {
    let n = rng.gen_range(1..=2);
    let mut terms = vec![(ExponentVector::zeros(n), rng.gen_range(-1.0..2.0))];
    for i in 0..n {
        terms.push((ExponentVector::unit(n, i, 6), rng.gen_range(0.5..2.0)));
    }
    for _ in 0..rng.gen_range(1..=4) {
        let mut e = vec![0u32; n];
        let deg = rng.gen_range(1..=5);
        for _ in 0..deg {
            e[rng.gen_range(0..n)] += 1;
        }
        terms.push((ev(&e), rng.gen_range(-2.0..2.0)));
    }
    SparsePolynomial::from_terms(n, terms).unwrap()
}
