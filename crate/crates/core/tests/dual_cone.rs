mod common;

use common::{ev, log_uniform, random_circuit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sonc::circuits::{circuit_number, enumerate_circuits, Circuit};
use sonc::dual_cone::{
    circuit_dual_membership, dual_infeasibility, hankel_minor_values, psd_dual_quartic,
    quartic_dual_membership, quartic_inequality_values, sage_dual_membership, sonc_dual_membership,
    sonc_dual_membership_with_catalog, verify_dual_witness, DualConfig,
};
use sonc::nonneg_circuit::{is_nonneg_circuit, CircuitPolynomial};
use sonc::poly_support::{moment_vector, DualVector, SupportSet};
use sonc::simplex::{lp_min_infeasibility, MinimaxRow};

fn quartic() -> SupportSet {
    SupportSet::univariate_dense(4)
}

fn dv(s: &SupportSet, v: &[f64]) -> DualVector {
    DualVector::new(s.clone(), v.to_vec()).unwrap()
}

fn random_support(rng: &mut ChaCha8Rng) -> SupportSet {
    let n = rng.gen_range(1..=3);
    let mut pts = std::collections::BTreeSet::new();
    pts.insert(vec![0u32; n]);
    let size = rng.gen_range(2..=7usize.min(4usize.pow(n as u32)));
    while pts.len() < size {
        pts.insert((0..n).map(|_| rng.gen_range(0..=4u32)).collect::<Vec<_>>());
    }
    SupportSet::new(n, pts.iter().map(|p| ev(p)).collect()).unwrap()
}

#[test]
fn lp_examples() {
    let row = |a: f64, b: f64| MinimaxRow { a: vec![a], b };
    let s = lp_min_infeasibility(&[row(1.0, 0.0), row(-1.0, 0.0)]).unwrap();
    assert!(s.t_min.abs() < 1e-12 && s.tau[0].abs() < 1e-12);
    let s = lp_min_infeasibility(&[row(1.0, 1.0), row(-1.0, 1.0)]).unwrap();
    assert!((s.t_min - 1.0).abs() < 1e-12 && s.tau[0].abs() < 1e-12);
    let s = lp_min_infeasibility(&[row(1.0, 5.0)]).unwrap();
    assert_eq!(s.t_min, f64::NEG_INFINITY);
    assert!(s.ray.is_some());
}

#[test]
fn circuit_examples() {
    let a = SupportSet::univariate_dense(2);
    let c = Circuit::new(vec![ev(&[0]), ev(&[2])], ev(&[1])).unwrap();
    let r = circuit_dual_membership(&c, &dv(&a, &[1.0, 1.0, 1.0]), 1e-9).unwrap();
    assert!(r.member);
    let (v_star, tau) = r.witness.unwrap();
    assert!((v_star - 1.0).abs() < 1e-12 && tau[0].abs() < 1e-9);
    assert!(!circuit_dual_membership(&c, &dv(&a, &[1.0, 1.5, 1.0]), 1e-9).unwrap().member);
    assert!(circuit_dual_membership(&c, &dv(&a, &[1.0, -1.0, 1.0]), 1e-9).unwrap().member);
}

#[test]
fn separating_point() {
    let a = quartic();
    let v = [2.0, 0.0, 1.0, 1.0, 1.0];
    let r = sonc_dual_membership(&a, &dv(&a, &v), 1e-9).unwrap();
    assert!(r.member);
    assert_eq!(r.witnesses.len(), 5);
    assert_eq!(quartic_inequality_values(&v), [2.0, 1.0, 1.0, 2.0, 8.0, 1.0, 1.0, 0.0]);
    assert!(quartic_dual_membership(&v, 1e-9));
    assert_eq!(hankel_minor_values(&v)[6], -1.0);
    assert!(!psd_dual_quartic(&v, 1e-9));
}

#[test]
fn quartic_membership_examples() {
    let a = quartic();
    assert!(sonc_dual_membership(&a, &moment_vector(&[0.7], &a).unwrap(), 1e-9).unwrap().member);
    let r = sonc_dual_membership(&a, &dv(&a, &[1.0, 2.0, 1.0, 1.0, 1.0]), 1e-9).unwrap();
    assert!(!r.member);
    let (_, c) = r.violated_circuit.unwrap();
    assert_eq!((c.vertices()[0].entries()[0], c.vertices()[1].entries()[0], c.inner().entries()[0]), (0, 2, 1));
    assert!(!quartic_dual_membership(&[1.0, 0.0, 0.0, 1.0, 1.0], 1e-9));
    assert!(quartic_dual_membership(&[0.0; 5], 1e-9));
    assert!(psd_dual_quartic(&[1.0, 2.0, 4.0, 8.0, 16.0], 1e-9));
    assert!(psd_dual_quartic(&[1.0, 0.0, 1.0, 0.0, 1.0], 1e-9));
}

#[test]
fn generic_test_matches_quartic_inequalities() {
    let a = quartic();
    let catalog = enumerate_circuits(&a).unwrap();
    let config = DualConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let (mut tested, mut members) = (0, 0);
    while tested < 20_000 {
        let mut v: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        if tested >= 10_000 {
            // second half: even coordinates nonnegative, so members are common
            for k in [0, 2, 4] {
                v[k] = v[k].abs();
            }
        }
        if quartic_inequality_values(&v).iter().any(|g| g.abs() < 1e-4) {
            continue;
        }
        tested += 1;
        let want = quartic_dual_membership(&v, 1e-9);
        let got = sonc_dual_membership_with_catalog(&catalog, &dv(&a, &v), &config).unwrap().member;
        assert_eq!(got, want, "v = {v:?}");
        members += want as usize;
    }
    assert!(members > 500, "{members}");
}

/// Nonnegative combinations of moment vectors, and points at infinity.
fn random_psd_point(rng: &mut ChaCha8Rng) -> [f64; 5] {
    let atoms = rng.gen_range(1..=3);
    let mut v = [0.0; 5];
    for _ in 0..atoms {
        let x: f64 = rng.gen_range(-2.0..2.0);
        let w: f64 = rng.gen_range(0.0..1.0);
        for (k, vk) in v.iter_mut().enumerate() {
            *vk += w * x.powi(k as i32);
        }
    }
    if rng.gen_bool(0.2) {
        v[4] += rng.gen_range(0.0..1.0);
    }
    v
}

#[test]
fn psd_dual_is_contained_in_sonc_dual() {
    let a = quartic();
    let catalog = enumerate_circuits(&a).unwrap();
    let config = DualConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut tested = 0;
    while tested < 10_000 {
        let v = if rng.gen_bool(0.8) {
            random_psd_point(&mut rng)
        } else {
            std::array::from_fn(|_| rng.gen_range(-2.0..2.0))
        };
        if !psd_dual_quartic(&v, 1e-9) {
            continue;
        }
        tested += 1;
        assert!(quartic_dual_membership(&v, 1e-9), "v = {v:?}");
        assert!(sonc_dual_membership_with_catalog(&catalog, &dv(&a, &v), &config).unwrap().member);
    }
}

#[test]
fn membership_is_scale_invariant() {
    let a = quartic();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..500 {
        let v: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        if quartic_inequality_values(&v).iter().any(|g| g.abs() < 1e-4) {
            continue;
        }
        let base = sonc_dual_membership(&a, &dv(&a, &v), 1e-9).unwrap().member;
        for t in [1e-3, 1e3] {
            let s = dv(&a, &v).scaled(t);
            assert_eq!(sonc_dual_membership(&a, &s, 1e-9).unwrap().member, base);
        }
    }
}

#[test]
fn moment_vectors_are_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for i in 0..1000 {
        let a = random_support(&mut rng);
        let mut x: Vec<f64> = (0..a.n()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        if i % 5 == 0 {
            let k = rng.gen_range(0..x.len());
            x[k] = 0.0;
        }
        let v = moment_vector(&x, &a).unwrap();
        let catalog = enumerate_circuits(&a).unwrap();
        let r = sonc_dual_membership_with_catalog(&catalog, &v, &DualConfig::with_tol(1e-7)).unwrap();
        assert!(r.member, "x = {x:?}, A = {a:?}");
        for w in &r.witnesses {
            let c = catalog.get(w.circuit_id).unwrap();
            assert!(verify_dual_witness(c, &v, w.v_star, &w.tau, 1e-7).unwrap());
        }
    }
}

#[test]
fn infeasibility_is_convex_in_v_star() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for _ in 0..300 {
        let circuit = random_circuit(&mut rng, 3, 4);
        let mut pts = circuit.vertices().to_vec();
        pts.push(circuit.inner().clone());
        let s = SupportSet::new(circuit.dim(), pts).unwrap();
        let values: Vec<f64> = s.points().iter().map(|_| rng.gen_range(0.01..2.0)).collect();
        let v = dv(&s, &values);
        let lo = v.get(circuit.inner()).unwrap();
        let hi = 2.0 * lo.max(std::f64::consts::E * values.iter().cloned().fold(0.0, f64::max));
        for _ in 0..10 {
            let a = rng.gen_range(lo..hi);
            let b = rng.gen_range(lo..hi);
            let fa = dual_infeasibility(&circuit, &v, a).unwrap();
            let fb = dual_infeasibility(&circuit, &v, b).unwrap();
            let fm = dual_infeasibility(&circuit, &v, 0.5 * (a + b)).unwrap();
            assert!(fm <= 0.5 * (fa + fb) + 1e-8, "{fm} > avg({fa}, {fb})");
        }
    }
}

#[test]
fn members_pair_nonnegatively_with_nonneg_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let mut pairs = 0;
    while pairs < 200 {
        let circuit = random_circuit(&mut rng, 3, 4);
        let c: Vec<f64> = (0..circuit.arity()).map(|_| log_uniform(&mut rng, 0.1, 10.0)).collect();
        let theta = circuit_number(&c, &circuit).unwrap();
        let delta = if circuit.beta_even() {
            rng.gen_range(-theta..theta)
        } else {
            theta * rng.gen_range(-1.0..1.0)
        };
        let q = CircuitPolynomial::new(circuit.clone(), c, delta).unwrap();
        assert!(is_nonneg_circuit(&q).nonneg);
        let poly = q.to_polynomial();
        let a = poly.support();
        // a member v: positive combination of moment vectors, plus an
        // independently constructed candidate kept only if accepted
        let mut values = vec![0.0; a.len()];
        for _ in 0..rng.gen_range(1..=3) {
            let x: Vec<f64> = (0..a.n()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w = rng.gen_range(0.1..1.0);
            for (slot, val) in values.iter_mut().zip(moment_vector(&x, &a).unwrap().values()) {
                *slot += w * val;
            }
        }
        let candidates = [
            values,
            a.points().iter().map(|_| rng.gen_range(-1.0..2.0)).collect(),
        ];
        for cand in candidates {
            let v = dv(&a, &cand);
            if !sonc_dual_membership(&a, &v, 1e-9).unwrap().member {
                continue;
            }
            pairs += 1;
            let pairing = v.pairing(&poly).unwrap();
            assert!(pairing >= -1e-7 * (1.0 + v.max_abs()) * (1.0 + poly.max_abs_coefficient()), "{pairing}");
        }
    }
}

#[test]
fn sage_examples() {
    let a = SupportSet::univariate_dense(4);
    assert!(sage_dual_membership(&a, &dv(&a, &[1.0; 5]), 1e-9).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for _ in 0..200 {
        let s = random_support(&mut rng);
        let x: Vec<f64> = (0..s.n()).map(|_| rng.gen_range(0.05..3.0)).collect();
        assert!(sage_dual_membership(&s, &moment_vector(&x, &s).unwrap(), 1e-9).unwrap());
    }
    let b = SupportSet::new(1, vec![ev(&[0]), ev(&[2])]).unwrap();
    for y in [1.01, 2.0, 50.0] {
        assert!(sage_dual_membership(&b, &dv(&b, &[1.0, y]), 1e-9).unwrap());
    }
    assert!(sage_dual_membership(&b, &dv(&b, &[1.0, -1.0]), 1e-9).is_err());
}

#[test]
fn report_json() {
    let a = quartic();
    let r = sonc_dual_membership(&a, &dv(&a, &[1.0, 2.0, 1.0, 1.0, 1.0]), 1e-9).unwrap();
    let j = r.to_json_value();
    assert_eq!(j["member"], serde_json::json!(false));
    assert_eq!(j["violated_circuit"]["beta"], serde_json::json!([1]));
    let r = sonc_dual_membership(&a, &dv(&a, &[1.0; 5]), 1e-9).unwrap();
    let j = r.to_json_value();
    assert_eq!(j["witnesses"].as_array().unwrap().len(), 5);
    assert_eq!(j["witnesses"][0]["circuit"], serde_json::json!(3));
}
