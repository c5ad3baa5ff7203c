use hybrid_uq::oracle::{fd_check, monte_carlo, reference_statistics, FdConfig, FdKind, McConfig};
use hybrid_uq::perturbation::{compute_gamma, run_collocation, run_hybrid};
use hybrid_uq::{DeformationSpec, FemModel, HybridOptions, ParamPoint, SolverOptions, TriMesh};

fn model(m: usize, spec: DeformationSpec) -> FemModel {
    FemModel::experiment(m, spec).unwrap()
}

#[test]
fn tail_slope_matches_finite_differences() {
    let cfg = FdConfig {
        trials: 4,
        mesh_m: 33,
        seed: 11,
        ..FdConfig::for_kind(FdKind::Dq)
    };
    let r = fd_check(FdKind::Dq, &cfg).unwrap();
    assert!((r.observed_order - 2.0).abs() < 0.3, "{r:?}");
    assert!(r.max_rel_error < 1e-5, "{r:?}");
}

#[test]
fn gamma_is_the_directional_derivative_at_large_knots() {
    // one-sided differences of Q along ỹ_n shrink the gap to γ_n linearly
    let spec = DeformationSpec::new(0.1, 2.0, 0.5, 1.0, 2, 3).unwrap();
    let fm = FemModel::new(
        TriMesh::new(17).unwrap(),
        spec.clone(),
        Default::default(),
        &Default::default(),
        SolverOptions {
            rel_tol: 1e-14,
            cap_factor: 500.0,
            ..Default::default()
        },
    )
    .unwrap();
    let large = [0.8, -1.1];
    let gamma = compute_gamma(&fm, &large).unwrap().gamma;
    let q0 = fm
        .qoi_at(&ParamPoint::from_large(&spec, &large).unwrap())
        .unwrap();
    for n in 1..=3 {
        let q_at = |s: f64| {
            let mut small = vec![0.0; 3];
            small[n - 1] = s / spec.tail_sqrt_mu(n);
            fm.qoi_at(&ParamPoint::from_blocks(&spec, &large, &small).unwrap())
                .unwrap()
        };
        let gap = |s: f64| ((q_at(s) - q0) / s - gamma[n - 1]).abs();
        let (g1, g2) = (gap(2e-2), gap(1e-2));
        assert!(g2 < 0.6 * g1, "n {n}: {g1} {g2}");
    }
}

#[test]
fn monte_carlo_agrees_with_collocation() {
    let spec = DeformationSpec::new(1.0 / 15.0, 3.0, 0.5, 1.0, 3, 0).unwrap();
    let fm = model(17, spec);
    let sc = run_collocation(&fm, 4, 3).unwrap();
    let mc = monte_carlo(
        &fm,
        &McConfig {
            samples: 4000,
            seed: 1,
        },
    )
    .unwrap();
    assert!(
        (mc.mean - sc.mean).abs() < 3.0 * mc.stderr_mean,
        "{mc:?} vs {sc:?}"
    );
    assert!(
        (mc.variance - sc.variance).abs() < 3.0 * mc.stderr_var,
        "{mc:?} vs {sc:?}"
    );
}

#[test]
fn monte_carlo_error_halves_with_four_times_the_samples() {
    let spec = DeformationSpec::new(1.0 / 15.0, 3.0, 0.5, 1.0, 2, 0).unwrap();
    let fm = model(9, spec);
    let a = monte_carlo(
        &fm,
        &McConfig {
            samples: 1000,
            seed: 3,
        },
    )
    .unwrap();
    let b = monte_carlo(
        &fm,
        &McConfig {
            samples: 4000,
            seed: 3,
        },
    )
    .unwrap();
    let ratio = a.stderr_mean / b.stderr_mean;
    assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
}

#[test]
fn monte_carlo_is_schedule_independent() {
    let spec = DeformationSpec::new(0.1, 3.0, 0.5, 1.0, 2, 2).unwrap();
    let fm = model(9, spec);
    let cfg = McConfig {
        samples: 64,
        seed: 9,
    };
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| monte_carlo(&fm, &cfg)).unwrap();
    let b = four.install(|| monte_carlo(&fm, &cfg)).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.variance.to_bits(), b.variance.to_bits());
}

#[test]
fn hybrid_is_schedule_independent() {
    let fm = model(17, DeformationSpec::experiment(3).unwrap());
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let opts = HybridOptions::new(2).with_correction_level(1);
    let a = one.install(|| run_hybrid(&fm, opts)).unwrap();
    let b = four.install(|| run_hybrid(&fm, opts)).unwrap();
    assert_eq!(a.variance.to_bits(), b.variance.to_bits());
    assert_eq!(a.correction_var.to_bits(), b.correction_var.to_bits());
}

#[test]
fn reference_reaches_a_plateau() {
    let spec = DeformationSpec::new(1.0 / 15.0, 3.0, 0.5, 1.0, 1, 2).unwrap();
    let fm = model(17, spec);
    let means: Vec<f64> = (2..=6)
        .map(|w| reference_statistics(&fm, w, None).unwrap().mean)
        .collect();
    let rel = (means[4] - means[3]).abs() / means[4].abs();
    assert!(rel < 1e-6, "{means:?}");
    // differences shrink over three consecutive levels
    let diffs: Vec<f64> = means.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
    assert!(diffs[1] <= diffs[0] && diffs[2] <= diffs[1], "{diffs:?}");
}

#[test]
fn correction_captures_the_tail_variance() {
    // against full-dimensional collocation, adding the correction moves the
    // variance toward the reference
    let spec = DeformationSpec::new(0.1, 1.0, 0.5, 1.0, 2, 2).unwrap();
    let fm = model(17, spec);
    let reference = reference_statistics(&fm, 4, None).unwrap();
    let sc = run_collocation(&fm, 3, 2).unwrap();
    let hy = run_hybrid(&fm, HybridOptions::new(3)).unwrap();
    let e_sc = (sc.variance - reference.variance).abs();
    let e_hy = (hy.variance - reference.variance).abs();
    assert!(e_hy < 0.2 * e_sc, "collocation {e_sc:e}, hybrid {e_hy:e}");
}
