use proptest::prelude::*;
use vml_lab::fit::{decay_fit, DEFAULT_WINDOW};
use vml_lab::symmetry::SignedPerm;
use vml_lab::{build_k_set, ExperimentConfig, LabError};

fn signed_perm() -> impl Strategy<Value = SignedPerm> {
    (0usize..6, prop::array::uniform3(prop::bool::ANY)).prop_map(|(p, s)| {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        SignedPerm {
            perm: perms[p],
            sign: s.map(|b| if b { -1.0 } else { 1.0 }),
        }
    })
}

proptest! {
    #[test]
    fn signed_perms_are_orthogonal(r in signed_perm(), x in prop::array::uniform3(-5.0f64..5.0),
                                   y in prop::array::uniform3(-5.0f64..5.0)) {
        let (rx, ry) = (r.apply(x), r.apply(y));
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        prop_assert!((dot(rx, ry) - dot(x, y)).abs() < 1e-12);
        prop_assert_eq!(r.inverse().apply(rx), x);
        prop_assert_eq!(r.det().abs(), 1.0);
        prop_assert_eq!(r.inverse().det(), r.det());
    }

    #[test]
    fn fit_recovers_power_laws(sigma in 0.4f64..2.0, c in 0.1f64..100.0) {
        let t: Vec<f64> = (0..=220).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|s| c * (1.0 + s).powf(-2.0 * sigma)).collect();
        let r = decay_fit(&t, &y, DEFAULT_WINDOW, 1, 3).unwrap();
        prop_assert!((r.sigma_hat - sigma).abs() < 1e-10);
        prop_assert_eq!(r.sigma_target, 1.25);
    }

    #[test]
    fn slow_series_are_inconclusive(sigma in 0.0f64..0.3) {
        let t: Vec<f64> = (0..=220).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|s| (1.0 + s).powf(-2.0 * sigma)).collect();
        prop_assert!(matches!(decay_fit(&t, &y, DEFAULT_WINDOW, 0, 1), Err(LabError::Inconclusive(_))));
    }

    #[test]
    fn k_weights_are_positive_and_scale_like_volume(r0 in 0.05f64..1.0, dr in 0.05f64..1.0,
                                                    count in 8usize..30, dirs in prop::sample::select(vec![1usize, 6, 14])) {
        let shells: Vec<f64> = (0..count).map(|i| r0 + dr * i as f64).collect();
        let cfg = ExperimentConfig { shells: shells.clone(), directions: dirs, ..Default::default() };
        let ks = build_k_set(&cfg).unwrap();
        prop_assert_eq!(ks.len(), count * dirs);
        prop_assert!(ks.iter().all(|m| m.weight > 0.0));
        let total: f64 = ks.iter().map(|m| m.weight).sum();
        let b = shells[count - 1];
        let exact = 4.0 * std::f64::consts::PI / 3.0 * b.powi(3);
        // trapezoid on r^2 from the origin overshoots by h^3 / 6 per panel
        let excess = 4.0 * std::f64::consts::PI / 6.0 * (r0.powi(3) + (count - 1) as f64 * dr.powi(3));
        prop_assert!((total - exact - excess).abs() < 1e-12 * exact);
        for m in &ks {
            let img = m.map.apply(ks[m.representative].k);
            prop_assert!(img.iter().zip(&m.k).all(|(x, y)| (x - y).abs() < 1e-14));
        }
    }
}
