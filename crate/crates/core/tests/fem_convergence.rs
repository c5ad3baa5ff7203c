//! Finite element accuracy against closed-form solutions.

use hybrid_uq::fem::{bump, Forcing};
use hybrid_uq::{DeformationSpec, FemModel, ParamPoint, PdeData, QoISpec, SolverOptions, TriMesh};

/// Trapezoid rule on `[a, b]`. Every integrand below is smooth and vanishes
/// with all derivatives at the ends, where the rule converges faster than
/// any power of the step.
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (1..n).map(|i| f(a + i as f64 * h)).sum::<f64>() * h + 0.5 * h * (f(a) + f(b))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn undeformed() -> DeformationSpec {
    DeformationSpec::new(0.0, 3.0, 0.5, 1.0, 1, 0).unwrap()
}

fn manufactured_model(m: usize) -> FemModel {
    // u* = x1(1-x1)x2(1-x2), -Δu* = 2[x2(1-x2) + x1(1-x1)]
    let forcing = Forcing::new(
        |x| 2.0 * (x[1] * (1.0 - x[1]) + x[0] * (1.0 - x[0])),
        |x| [2.0 * (1.0 - 2.0 * x[0]), 2.0 * (1.0 - 2.0 * x[1])],
    );
    let data = PdeData::experiment()
        .with_forcing(forcing)
        .with_top_value(|_| 0.0);
    let solver = SolverOptions {
        rel_tol: 1e-13,
        ..Default::default()
    };
    FemModel::new(
        TriMesh::new(m).unwrap(),
        undeformed(),
        data,
        &QoISpec::experiment(),
        solver,
    )
    .unwrap()
}

#[test]
fn manufactured_qoi_converges_at_second_order() {
    let n = 4000;
    let exact = trapezoid(|t| bump(t) * t * (1.0 - t), 0.0, 1.0, n)
        * trapezoid(|t| bump(2.0 * t) * t * (1.0 - t), 0.0, 0.5, n);
    let meshes = [17, 33, 65, 129];
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for m in meshes {
        let model = manufactured_model(m);
        let q = model.qoi_at(&ParamPoint::zeros(model.spec())).unwrap();
        hs.push(1.0 / (m - 1) as f64);
        errs.push((q - exact).abs());
    }
    let rate = slope(&hs, &errs);
    assert!((rate - 2.0).abs() < 0.15, "rate {rate}, errors {errs:?}");
}

#[test]
fn qoi_of_the_unit_function() {
    let full = trapezoid(bump, 0.0, 1.0, 4000);
    let exact = full * full / 2.0;
    let mut errs = Vec::new();
    for m in [33, 65, 129] {
        let model = FemModel::experiment(m, undeformed()).unwrap();
        let ones = vec![1.0; model.mesh().node_count()];
        errs.push((model.eval_qoi(&ones) - exact).abs() / exact);
    }
    assert!(errs[2] < 1e-4, "{errs:?}");
    assert!(errs[1] / errs[2] > 3.0, "{errs:?}");
}

/// `Q` for the Laplace problem on `(0,1)×(0,H)` with `ϑ` on top and zero
/// elsewhere, by separation of variables.
fn stretched_rectangle_qoi(height: f64) -> f64 {
    let n_quad = 4000;
    let mut total = 0.0;
    for n in (1..120).step_by(2) {
        let k = n as f64 * std::f64::consts::PI;
        let ix = trapezoid(|x| bump(x) * (k * x).sin(), 0.0, 1.0, n_quad);
        // sinh(k y)/sinh(k H) without overflow
        let ratio = |y: f64| {
            (k * (y - height)).exp() * (1.0 - (-2.0 * k * y).exp())
                / (1.0 - (-2.0 * k * height).exp())
        };
        let iy = trapezoid(|y| bump(2.0 * y) * ratio(y), 0.0, 0.5, n_quad);
        total += 2.0 * ix * ix * iy;
    }
    total
}

#[test]
fn constant_stretch_matches_separation_of_variables() {
    // with N = 1 the map is a uniform vertical stretch of the upper half
    let spec = DeformationSpec::new(1.0 / 15.0, 3.0, 0.5, 1.0, 1, 0).unwrap();
    for y1 in [-1.7, 0.0, 1.7] {
        let e = 1.0 + spec.amplitude * spec.first_mode_scale() * y1;
        let exact = stretched_rectangle_qoi(0.5 + 0.5 * e);
        let mut errs = Vec::new();
        for m in [65, 129] {
            let model = FemModel::experiment(m, spec.clone()).unwrap();
            let q = model
                .qoi_at(&ParamPoint::new(&spec, vec![y1]).unwrap())
                .unwrap();
            errs.push((q - exact).abs() / exact);
        }
        assert!(errs[1] < 3e-4, "y1 {y1}: {errs:?}");
        assert!(errs[0] / errs[1] > 3.0, "y1 {y1}: {errs:?}");
    }
}
