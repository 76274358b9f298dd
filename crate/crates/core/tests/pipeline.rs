//! End-to-end checks across modules: sampled spectra against solved limits,
//! the two spectral routes against each other, and file formats.

use num_complex::Complex64;

use lcmp::ensemble::{build_matrix, eigenvalues_sym, resolvent_trace_stream, sample_spectrum, EnsembleConfig, H0Spec};
use lcmp::measures::{ks_distance, AmplitudeLaw, EmpiricalSpectrum, SpectralMeasure};
use lcmp::samplers::VectorLaw;
use lcmp::solver::{limit_density, mp_closed_form, ModelSpec, SolverOptions};
use lcmp::verify::{clustered_grid, snap_to_atoms};

#[test]
fn sampled_marchenko_pastur_is_close_to_the_solved_limit() {
    let (n, m) = (400, 200);
    let config = EnsembleConfig::new(n, m, VectorLaw::GaussianIso, AmplitudeLaw::dirac(1.0), H0Spec::Zero, 3).unwrap();
    let spec = sample_spectrum(&config, 0).unwrap();
    let model = ModelSpec::marchenko_pastur(0.5).unwrap();
    let limit = limit_density(&model, &clustered_grid(0.0, 3.2, 2000), &SolverOptions::default()).unwrap();
    assert_eq!(limit.atoms(), &[(0.0, 0.5)]);
    let ks = ks_distance(&snap_to_atoms(&spec, &limit).unwrap(), &limit).unwrap();
    assert!(ks < 0.03, "KS = {ks}");
}

#[test]
fn solved_density_matches_the_closed_form_inside_the_bulk() {
    for c in [0.5, 2.0] {
        let model = ModelSpec::marchenko_pastur(c).unwrap();
        let (lo, hi) = ((1.0 - f64::sqrt(c)).powi(2), (1.0 + f64::sqrt(c)).powi(2));
        let grid: Vec<f64> = (1..60).map(|k| lo + (hi - lo) * k as f64 / 60.0).collect();
        let limit = limit_density(&model, &clustered_grid(0.0, hi + 0.5, 3000), &SolverOptions::default()).unwrap();
        let d = limit.density().unwrap();
        for l in grid {
            assert!((d.value_at(l) - mp_closed_form(c, l)).abs() < 2e-3, "c = {c}, l = {l}");
        }
    }
}

#[test]
fn deformed_model_moments_match_the_ensemble() {
    // H0 with N0 = (delta_-1 + delta_1)/2 and two amplitudes; the first two
    // moments of the limit are c E tau and 1 + c E tau^2 + c^2 (E tau)^2.
    // With c > 1/2 the rank of the perturbation leaves no atom at -1 or 1.
    let c = 0.8;
    let n0: SpectralMeasure = "atoms:-1:0.5,1:0.5".parse().unwrap();
    let sigma: AmplitudeLaw = "atoms:0.5:0.5,1.5:0.5".parse().unwrap();
    let model = ModelSpec::new(c, sigma.clone(), n0.clone()).unwrap();
    let limit = limit_density(&model, &clustered_grid(-3.0, 7.0, 4000), &SolverOptions::default()).unwrap();
    let (e_tau, e_tau2) = (1.0, 0.5 * 0.25 + 0.5 * 2.25);
    assert!((limit.moment(1).unwrap() - c * e_tau).abs() < 2e-3);
    let second = 1.0 + c * e_tau2 + c * c * e_tau * e_tau;
    assert!((limit.moment(2).unwrap() - second).abs() < 5e-3);

    let config = EnsembleConfig::new(600, 480, VectorLaw::Sphere, sigma, H0Spec::Quantiles(n0), 5).unwrap();
    let spec = sample_spectrum(&config, 0).unwrap();
    assert!(ks_distance(&spec, &limit).unwrap() < 0.03);
}

#[test]
fn resolvent_stream_and_eigensolve_agree() {
    let laws = [VectorLaw::Sphere, VectorLaw::LpBall(1.5), VectorLaw::ComplexGaussianIso];
    for (k, law) in laws.into_iter().enumerate() {
        let sigma: AmplitudeLaw = "atoms:-0.5:0.3,2:0.7".parse().unwrap();
        let h0 = H0Spec::Diagonal((0..40).map(|i| (i % 3) as f64 - 1.0).collect());
        let config = EnsembleConfig::new(40, 25, law, sigma, h0, k as u64).unwrap();
        let spec = eigenvalues_sym(&build_matrix(&config, 2).unwrap()).unwrap();
        for z in [Complex64::i(), Complex64::new(0.5, 0.5), Complex64::new(-1.0, -0.2)] {
            let a = resolvent_trace_stream(&config, z, 2).unwrap();
            let b = spec.stieltjes(z).unwrap();
            assert!((a - b).norm() < 1e-8, "{law} at {z}");
        }
    }
}

#[test]
fn measures_round_trip_through_their_formats() {
    let model = ModelSpec::marchenko_pastur(0.25).unwrap();
    let limit = limit_density(&model, &clustered_grid(0.2, 2.3, 300), &SolverOptions::default()).unwrap();
    let back = SpectralMeasure::from_json(&limit.to_json()).unwrap();
    assert_eq!(back.atoms(), limit.atoms());
    assert_eq!(back.density().unwrap().values(), limit.density().unwrap().values());
    let csv = SpectralMeasure::from_density_csv(&limit.density_csv()).unwrap();
    assert_eq!(csv.density().unwrap().grid(), limit.density().unwrap().grid());

    let spec = EmpiricalSpectrum::new(vec![0.1, -2.5e-17, 3.0, 1.0 / 3.0]).unwrap();
    assert_eq!(EmpiricalSpectrum::from_csv(&spec.to_csv()).unwrap(), spec);
    assert_eq!(EmpiricalSpectrum::from_json(&spec.to_json()).unwrap(), spec);
    assert_eq!(ModelSpec::from_json(&model.to_json()).unwrap(), model);
}
