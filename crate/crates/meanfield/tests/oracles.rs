use std::f64::consts::PI;

use meanfield::*;
use numkit::{RngStream, SymmetricMatrix};

// Root of 2πc = √(1−c²) + (π − arccos c)·c, from scipy.optimize.brentq.
const C_STAR: f64 = 0.21723362821122166;

#[test]
fn relu_fixed_point_matches_reference_root() {
    for sigma_b2 in [0.25, 1.0, 2.0] {
        let cfg = MeanFieldConfig::new(6, sigma_b2).unwrap();
        let p = find_bsb1_fixed_point(&cfg, 1e-12, 10_000).unwrap();
        assert!((p.q - 2.0 * sigma_b2).abs() < 1e-10, "q = {}", p.q);
        assert!((p.c - C_STAR).abs() < 1e-10, "c = {}", p.c);
        assert!(p.residual < 1e-8);
    }
}

#[test]
fn full_map_reaches_same_point_from_random_starts() {
    let cfg = MeanFieldConfig::new(5, 1.0).unwrap();
    let p = find_bsb1_fixed_point(&cfg, 1e-12, 10_000).unwrap();
    let mut rng = RngStream::new(11);
    for _ in 0..5 {
        let start = wishart(5, 7, &mut rng);
        let (end, _) = iterate_full_map(&cfg, &start, 1e-12, 10_000).unwrap();
        assert!(end.max_abs_diff(&p.matrix) < 1e-6);
    }
}

#[test]
fn closed_form_agrees_with_monte_carlo() {
    let mut rng = RngStream::new(3);
    for d in [2, 4, 7] {
        let c = wishart(d, d + 2, &mut rng);
        let cfg = MeanFieldConfig::new(d, 0.0).unwrap();
        let exact = v_phi_closed(&cfg, &c).unwrap();
        let mc = v_phi_mc(&cfg, &c, 1_000_000, &RngStream::new(100 + d as u64)).unwrap();
        for i in 0..d {
            for j in 0..d {
                let z = (mc.mean.get(i, j) - exact.get(i, j)).abs() / mc.std_err.get(i, j);
                assert!(z < 5.0, "d={d} ({i},{j}) z={z}");
            }
        }
    }
}

#[test]
fn normalized_quadrature_agrees_with_monte_carlo() {
    let mut rng = RngStream::new(4);
    for d in [3, 5, 8] {
        let c = wishart(d, d + 2, &mut rng);
        let s: Vec<f64> = (0..d).map(|i| 0.5 + 0.2 * i as f64).collect();
        let cfg = MeanFieldConfig::new(d, 0.0).unwrap().normalized(true).with_scaling(s).unwrap();
        let quad = v_dphi(&cfg, &c).unwrap();
        let mc = v_phi_mc(&cfg, &c, 1_000_000, &RngStream::new(200 + d as u64)).unwrap();
        for i in 0..d {
            for j in 0..d {
                let z = (mc.mean.get(i, j) - quad.get(i, j)).abs() / mc.std_err.get(i, j);
                assert!(z < 5.0, "d={d} ({i},{j}) z={z}");
            }
        }
    }
}

#[test]
fn relu_jacobian_at_identity_is_dos() {
    let cfg = MeanFieldConfig::new(5, 0.0).unwrap();
    let j = jacobian_fd(|c| cov_map_step(&cfg, c), &SymmetricMatrix::identity(5), 1e-5).unwrap();
    let (fit, residual) = DosOperator::fit(&j);
    assert!(residual < 1e-9);
    assert!((fit.u - 0.5).abs() < 1e-9);
    assert!((fit.v - 1.0 / (4.0 * PI)).abs() < 1e-9);
    assert!((fit.w - 0.25).abs() < 1e-9);
}

#[test]
fn dos_eigenvectors_to_machine_precision() {
    for d in [2, 3, 6, 10] {
        let t = DosOperator::new(d, 0.5, 1.0 / (4.0 * PI), 0.25);
        let r = dos_eigencheck(&t).unwrap();
        let tol = 8.0 * f64::EPSILON;
        assert!(r.m_residual <= tol && r.l_residual <= tol, "{r:?}");
        assert!(r.spans_space);
        assert_eq!(r.w_multiplicity + r.u_multiplicity, d * (d + 1) / 2);
    }
}

#[test]
fn k_measure_is_one_for_unit_scaling() {
    let mut rng = RngStream::new(5);
    for _ in 0..200 {
        let c = wishart(6, 8, &mut rng);
        assert_eq!(k_measure(&c, &[1.0; 6]).unwrap(), 1.0);
    }
}

#[test]
fn normalized_fixed_point_reached_in_one_step() {
    // The normalized kernel only sees G·C·G, which is a multiple of G for
    // every BSB1 matrix, so the map lands on its fixed point immediately.
    let cfg = MeanFieldConfig::new(4, 1.0).unwrap().normalized(true);
    let p = find_bsb1_fixed_point(&cfg, 1e-12, 100).unwrap();
    assert!(p.iterations <= 3);
    assert!((p.q - 1.5).abs() < 1e-12);
}

#[test]
fn spectral_values_match_independent_computation() {
    // Reference values from a separate scipy implementation that evaluates
    // the kernel by adaptive quadrature and differentiates numerically.
    let cfg = MeanFieldConfig::new(4, 1.0).unwrap().normalized(true);
    let p = find_bsb1_fixed_point(&cfg, 1e-12, 100).unwrap();
    let r = theorem3_verify(&cfg, &p.matrix, 1e-5, 1e-5).unwrap();
    assert!((r.l.eigenvalue.unwrap() - 0.15428).abs() < 1e-4, "{:?}", r.l);
    assert!((r.m.eigenvalue.unwrap() - 0.11074).abs() < 1e-4, "{:?}", r.m);
    assert!(r.lambda_g().abs() < 1e-8);
    assert!(r.kernel_residual < 1e-8 && r.l.residual < 1e-8 && r.m.residual < 1e-8);
}

#[test]
fn decomposition_pieces_live_in_their_subspaces() {
    let mut rng = RngStream::new(6);
    for d in [2, 3, 4, 7] {
        let c = wishart(d, d + 2, &mut rng);
        let p = orthogonal_decompose(&c);
        let g = SymmetricMatrix::centering(d);
        assert!(p.sum().max_abs_diff(&c) < 1e-12);
        assert!(p.c0.sandwich(&g).frobenius_norm() < 1e-12);
        let pieces = [&p.c0, &p.cg, &p.cl, &p.cm];
        for a in 0..4 {
            for b in a + 1..4 {
                assert!(pieces[a].inner(pieces[b]).abs() < 1e-12);
            }
        }
        for i in 0..d {
            assert!(p.cm.get(i, i).abs() < 1e-12);
            assert!((0..d).map(|j| p.cm.get(i, j)).sum::<f64>().abs() < 1e-12);
        }
    }
}

#[test]
fn initial_g_ratio_equals_k_measure() {
    let mut rng = RngStream::new(7);
    for _ in 0..20 {
        let c = wishart(5, 7, &mut rng);
        let mut s: Vec<f64> = (0..5).map(|_| rng.uniform_range(0.2, 2.0)).collect();
        let norm = (s.iter().map(|x| x * x).sum::<f64>() / 5.0).sqrt();
        s.iter_mut().for_each(|x| *x /= norm);
        assert!((initial_g_ratio(&c, &s) - k_measure(&c, &s).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn scaling_search_beats_uniform_on_generic_covariances() {
    let mut rng = RngStream::new(8);
    let cfg = MeanFieldConfig::new(4, 0.0).unwrap();
    let mut wins = 0;
    for _ in 0..20 {
        let c = wishart(4, 6, &mut rng);
        let r = theorem1_search(&c, &cfg, 200, 1e-5).unwrap();
        assert!(r.ratio <= 1.0);
        if r.ratio < 1.0 {
            wins += 1;
        }
    }
    assert!(wins >= 19, "{wins}");
}
