use crystalchain::dynamics::{
    default_degeneracy_tol, eigendecompose, find_stable_horizon, find_stable_t, infinite_time_average,
    time_averaged_profile, transition_probability, StableHorizonSearch, DEFAULT_EIGEN_TOL,
};
use crystalchain::hamiltonian::{build_model, evaluate, CouplingValues};
use crystalchain_oracles::{probabilities_at, quadrature_average};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fig2_couplings() -> CouplingValues {
    CouplingValues { mu0: 1.0, eps: 0.1, gamma: 0.3, delta: 0.3, ..Default::default() }
}

fn random_couplings(rng: &mut impl Rng) -> CouplingValues {
    CouplingValues {
        mu0: 1.0,
        eps: rng.gen_range(0.0..1.0),
        gamma: rng.gen_range(0.0..1.0),
        delta: rng.gen_range(0.0..1.0),
        eta: rng.gen_range(0.0..1.0),
        beta: 0.0,
    }
}

fn model_matrix(n: usize, values: &CouplingValues) -> DMatrix<f64> {
    evaluate(&build_model(n).unwrap(), values)
}

#[test]
fn random_symmetric_64_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let a = DMatrix::from_fn(64, 64, |_, _| rng.gen_range(-1.0..1.0));
    let h = &a + a.transpose();
    let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
    let scale = h.amax();
    assert!((spec.reconstruct() - &h).amax() <= 1e-10 * scale);
    let v = &spec.eigenvectors;
    assert!((v.transpose() * v - DMatrix::identity(64, 64)).amax() <= 1e-10);
    let residual = &h * v - v * DMatrix::from_diagonal(&spec.eigenvalues);
    assert!(residual.amax() <= 1e-10 * scale);
    assert!(spec.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
    for col in v.column_iter() {
        assert!(col[col.iamax()] >= 0.0);
    }
}

#[test]
fn model_spectra_reconstruct() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=8 {
        let h = model_matrix(n, &random_couplings(&mut rng));
        let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
        assert!((spec.reconstruct() - &h).amax() <= 1e-9 * h.amax(), "n={n}");
    }
}

#[test]
fn decomposition_is_deterministic() {
    let h = model_matrix(5, &fig2_couplings());
    let a = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
    let b = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
    assert_eq!(a.eigenvalues, b.eigenvalues);
    assert_eq!(a.eigenvectors, b.eigenvectors);
}

#[test]
fn unitarity_at_random_times() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=8 {
        let h = model_matrix(n, &random_couplings(&mut rng));
        let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
        let dim = spec.dim();
        for _ in 0..3 {
            let t = rng.gen_range(0.0..100.0);
            let i = rng.gen_range(0..dim);
            let total: f64 = (0..dim).map(|f| transition_probability(&spec, i, f, t)).sum();
            assert!((total - 1.0).abs() <= 1e-10, "n={n} t={t} total={total}");
        }
        for i in 0..dim.min(4) {
            for f in 0..dim {
                let p0 = transition_probability(&spec, i, f, 0.0);
                let want = if i == f { 1.0 } else { 0.0 };
                assert!((p0 - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn matches_matrix_exponential() {
    let h = model_matrix(3, &fig2_couplings());
    let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
    for &(i, t) in &[(3usize, 0.7), (0, 5.0), (7, 31.4), (4, 250.0)] {
        let oracle = probabilities_at(&h, i, t);
        for (f, want) in oracle.iter().enumerate() {
            let got = transition_probability(&spec, i, f, t);
            assert!((got - want).abs() <= 1e-8, "i={i} f={f} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn closed_form_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in 2..=6 {
        let h = model_matrix(n, &random_couplings(&mut rng));
        let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
        let i = rng.gen_range(0..spec.dim());
        let horizon = rng.gen_range(5.0..40.0);
        let closed = time_averaged_profile(&spec, i, horizon).unwrap();
        let quad = quadrature_average(&h, i, horizon, 100_000);
        let err = closed.p_avg.iter().zip(&quad).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-6, "n={n} T={horizon} err={err}");
    }
}

#[test]
fn averages_are_normalized_and_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [3, 4, 6] {
        let h = model_matrix(n, &random_couplings(&mut rng));
        let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
        let dim = spec.dim();
        for &t in &[1e-3, 0.5, 17.0, 1e4] {
            let rows: Vec<_> = (0..dim).map(|i| time_averaged_profile(&spec, i, t).unwrap()).collect();
            for (i, row) in rows.iter().enumerate() {
                assert!((row.total() - 1.0).abs() <= 1e-8);
                for f in 0..dim {
                    assert!((row.p_avg[f] - rows[f].p_avg[i]).abs() <= 1e-12);
                    assert!((0.0..=1.0).contains(&row.p_avg[f]));
                }
            }
        }
        let inf = infinite_time_average(&spec, 0, default_degeneracy_tol(&spec)).unwrap();
        assert!((inf.total() - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn short_horizon_is_delta_row() {
    let h = model_matrix(3, &fig2_couplings());
    let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
    let p = time_averaged_profile(&spec, 2, 1e-9).unwrap();
    for (f, v) in p.p_avg.iter().enumerate() {
        let want = if f == 2 { 1.0 } else { 0.0 };
        assert!((v - want).abs() < 1e-12);
    }
}

#[test]
fn long_horizon_approaches_infinite_average() {
    let h = model_matrix(3, &fig2_couplings());
    let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL).unwrap();
    for i in 0..8 {
        let inf = infinite_time_average(&spec, i, default_degeneracy_tol(&spec)).unwrap();
        let long = time_averaged_profile(&spec, i, 1e6).unwrap();
        assert!(inf.max_abs_diff(&long) <= 1e-4);
        // Non-degenerate spectrum: the clusters are singletons.
        let diag: Vec<f64> = (0..8).map(|f| spec.overlaps(i, f).iter().map(|c| c * c).sum()).collect();
        for (a, b) in inf.p_avg.iter().zip(&diag) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn stable_horizon_tracks_infinite_average() {
    for (n, values, init) in [
        (3, fig2_couplings(), "RRY"),
        (4, CouplingValues { mu0: 1.0, eps: 0.1, gamma: 0.5, delta: 0.5, eta: 0.5, beta: 0.0 }, "YYRY"),
        (6, CouplingValues { mu0: 1.0, eps: 0.1, gamma: 0.5, delta: 0.5, eta: 0.5, beta: 0.0 }, "RYRYRY"),
    ] {
        let sym = build_model(n).unwrap();
        let spec = eigendecompose(&evaluate(&sym, &values), DEFAULT_EIGEN_TOL).unwrap();
        let i = sym.basis().index_of(&init.parse().unwrap()).unwrap();
        let search = StableHorizonSearch::default();
        let stable = find_stable_horizon(&spec, i, &search).unwrap();
        let inf = infinite_time_average(&spec, i, default_degeneracy_tol(&spec)).unwrap();
        assert!(stable.max_abs_diff(&inf) <= 1e-2, "n={n}");
        assert!(stable.max_abs_diff(&inf) <= 10.0 * search.rel_tol, "n={n}");

        let mut last = f64::INFINITY;
        for tol in [1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3] {
            let t = find_stable_t(&spec, i, tol, 2.0).unwrap();
            assert!(t <= last);
            last = t;
        }
    }
}

