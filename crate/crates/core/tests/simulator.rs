use nalgebra::SymmetricEigen;
use nniqs_core::phase::{generate, AxisGrid};
use nniqs_core::spin::{build_block, build_condensate_diagonal, dense_oracle, enumerate_sectors, ModelParams};
use nniqs_core::theory::{analytic_condensate, i_integral};
use nniqs_core::thermal::{diagonalize, sweep, ThermalEngine};
use proptest::prelude::*;

fn dense_gibbs(p: &ModelParams, t: f64) -> f64 {
    let eig = SymmetricEigen::new(dense_oracle(p).unwrap());
    let d = build_condensate_diagonal(p);
    let e0 = eig.eigenvalues.min();
    let (mut z, mut acc) = (0.0, 0.0);
    for k in 0..eig.eigenvalues.len() {
        let w = (-(eig.eigenvalues[k] - e0) / t).exp();
        z += w;
        acc += w * (0..d.values.len()).map(|i| eig.eigenvectors[(i, k)].powi(2) * d.values[i]).sum::<f64>();
    }
    d.scale * acc / z
}

#[test]
fn six_sites_at_finite_density_match_dense_gibbs() {
    let p = ModelParams::new(6, 1.0, 0.7).unwrap();
    let engine = ThermalEngine::new(&p).unwrap();
    assert!((engine.expectation(0.5).unwrap() - dense_gibbs(&p, 0.5)).abs() < 1e-9);
}

#[test]
fn sweep_matches_dense_gibbs_pointwise() {
    let p = ModelParams::new(6, 0.8, 0.3).unwrap();
    let t = [0.1, 0.37, 0.9, 1.6, 2.5];
    for (v, &x) in sweep(&p, &t).unwrap().iter().zip(&t) {
        assert!((v - dense_gibbs(&p, x)).abs() < 1e-9, "T={x}");
    }
}

#[test]
fn small_diagram_matches_dense_gibbs_at_every_cell() {
    let p = ModelParams::new(6, 1.2, 0.0).unwrap();
    let axes = AxisGrid::default_window(8).unwrap();
    let d = generate(&p, &axes).unwrap();
    for (i, &t) in axes.t_values.iter().enumerate() {
        for (j, &mu) in axes.mu_values.iter().enumerate() {
            let want = dense_gibbs(&p.with_mu(mu), t);
            assert!((d.values.get(i, j) - want).abs() < 1e-9, "cell ({i}, {j})");
        }
    }
}

#[test]
fn two_site_half_filling_block() {
    let p = ModelParams::new(2, 1.0, 0.0).unwrap();
    let sectors = enumerate_sectors(&p);
    assert_eq!(sectors.iter().map(|s| s.dim()).collect::<Vec<_>>(), [1, 2, 1]);
    let sys = diagonalize(&build_block(&p, &sectors[1]).unwrap()).unwrap();
    let root = 65f64.sqrt() / 8.0;
    let mut e = sys.eigen.values.clone();
    e.sort_by(f64::total_cmp);
    assert!((e[0] + root).abs() < 1e-14 && (e[1] - root).abs() < 1e-14);
    assert_eq!(build_block(&p, &sectors[2]).unwrap().matrix.get(0, 0), -0.125);
}

#[test]
fn condensate_signs() {
    let d2 = build_condensate_diagonal(&ModelParams::new(2, 1.0, 0.0).unwrap());
    assert_eq!(d2.values[0b01], -2.0);
    assert_eq!(d2.values[0b11], 0.0);
    let d4 = build_condensate_diagonal(&ModelParams::new(4, 1.0, 0.0).unwrap());
    assert_eq!(d4.values[0b0101], -4.0);
}

#[test]
fn analytic_curve_approaches_zero_temperature_value() {
    let cold = analytic_condensate(&[0.01]).unwrap()[0];
    assert!((cold + 0.159929).abs() < 1e-6);
    let curve = analytic_condensate(&[0.1, 0.5, 1.0, 2.0]).unwrap();
    assert!(curve.windows(2).all(|w| w[1] > w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integral_is_negative(a in 1e-3f64..60.0) {
        let v = i_integral(a).unwrap();
        prop_assert!(v <= 0.0);
        if a < 40.0 {
            prop_assert!(v < 0.0);
        }
    }

    #[test]
    fn random_triples_match_dense_gibbs(n in 2usize..=7, w in 0.3f64..1.5, mu in 0.0f64..1.4, t in 0.1f64..2.5) {
        let p = ModelParams::new(n, w, mu).unwrap();
        let sector = ThermalEngine::new(&p).unwrap().expectation(t).unwrap();
        prop_assert!((sector - dense_gibbs(&p, t)).abs() < 1e-9);
    }
}
