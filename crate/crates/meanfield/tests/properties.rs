use meanfield::{k_measure, orthogonal_decompose, v_phi_closed, MeanFieldConfig};
use numkit::SymmetricMatrix;
use proptest::prelude::*;

/// `A·Aᵀ/d + 0.1·I` from a flattened `d × d` matrix.
fn psd(d: usize, a: &[f64]) -> SymmetricMatrix {
    SymmetricMatrix::from_upper(d, |i, j| {
        let dot: f64 = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum();
        dot / d as f64 + if i == j { 0.1 } else { 0.0 }
    })
}

fn case() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (2usize..7).prop_flat_map(|d| {
        (
            Just(d),
            prop::collection::vec(-2.0f64..2.0, d * d),
            prop::collection::vec(0.1f64..3.0, d),
        )
    })
}

proptest! {
    #[test]
    fn k_ignores_overall_scale_of_c_and_s((d, a, s) in case(), alpha in 0.01f64..100.0) {
        let c = psd(d, &a);
        let k = k_measure(&c, &s).unwrap();
        let ks = k_measure(&c.scale(alpha), &s).unwrap();
        let s2: Vec<f64> = s.iter().map(|x| x * alpha.sqrt()).collect();
        let kc = k_measure(&c, &s2).unwrap();
        prop_assert!((k - ks).abs() <= 1e-10 * k.abs().max(1.0));
        prop_assert!((k - kc).abs() <= 1e-10 * k.abs().max(1.0));
    }

    #[test]
    fn relu_kernel_commutes_with_positive_diagonal_scaling((d, a, s) in case()) {
        let c = psd(d, &a);
        let cfg = MeanFieldConfig::new(d, 0.0).unwrap();
        let lhs = v_phi_closed(&cfg, &c.diag_conjugate(&s)).unwrap();
        let rhs = v_phi_closed(&cfg, &c).unwrap().diag_conjugate(&s);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * rhs.frobenius_norm().max(1.0));
    }

    #[test]
    fn decomposition_reassembles_the_input((d, a, _s) in case()) {
        let c = psd(d, &a);
        let parts = orthogonal_decompose(&c);
        prop_assert!(parts.sum().max_abs_diff(&c) <= 1e-12 * c.frobenius_norm());
    }
}
