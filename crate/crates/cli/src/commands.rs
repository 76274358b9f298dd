use std::collections::BTreeMap;

use serde_json::{json, Value};

use lcmp::ensemble::{eigenvalues_sym, gram_counting_relation, gram_matrix, sample_spectrum, EnsembleConfig, H0Spec};
use lcmp::measures::{AmplitudeLaw, EmpiricalSpectrum, SpectralMeasure};
use lcmp::rng::RngStream;
use lcmp::samplers::{isotropy_estimate, VectorLaw};
use lcmp::solver::{limit_density_detailed, ModelSpec, SolverOptions};
use lcmp::verify::{
    convergence_report, law_independence, study_limit, verify_counting_variance, verify_norm_tail,
    verify_quadratic_form, verify_stieltjes_variance, CheckReport, ConvergenceReport, StudySpec,
};
use lcmp::{Error, Result};

use crate::output::Run;
use crate::{parse, Check, Command, CompareArgs, DensityArgs, EnsembleArgs, ModelArgs, Outcome, SimulateArgs, VerifyArgs};

/// Gram duality tolerance for both the spectra and the counting relation.
pub const GRAM_TOLERANCE: f64 = 1e-8;
/// Standard errors allowed in the isotropy check.
pub const ISOTROPY_SLACK: f64 = 5.0;

pub fn run(command: &Command, flags: &BTreeMap<String, String>) -> Result<Outcome> {
    match command {
        Command::Density(a) => density(a, flags),
        Command::Simulate(a) => simulate(a, flags),
        Command::Compare(a) if a.gram => gram(a, flags),
        Command::Compare(a) => compare(a, flags),
        Command::Verify(a) => verify(a, flags),
    }
}

fn outcome(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::CriterionFailed
    }
}

fn model_from(args: &ModelArgs) -> Result<ModelSpec> {
    let n0 = match (&args.n0, &args.h0_spectrum) {
        (Some(s), _) => parse::measure(s)?,
        (None, Some(path)) => parse::spectrum_measure(path)?,
        (None, None) => SpectralMeasure::dirac(0.0),
    };
    ModelSpec::new(args.c, parse::amplitude_law(&args.sigma)?, n0)
}

fn options_from(args: &ModelArgs) -> SolverOptions {
    SolverOptions {
        damping: args.damping,
        tol: args.tol,
        max_iter: args.max_iter,
        eps_start: args.eps_start,
        eps_final: args.eps_final,
        tau_truncation: args.truncate,
        ..SolverOptions::default()
    }
}

fn density(args: &DensityArgs, flags: &BTreeMap<String, String>) -> Result<Outcome> {
    let model = model_from(&args.model)?;
    let opts = options_from(&args.model);
    opts.validate()?;
    let grid = parse::grid(&args.grid)?;
    let limit = limit_density_detailed(&model, &grid, &opts)?;
    let measure = &limit.measure;
    let mut run = Run::new(&args.common.out)?;
    run.write("density.csv", &measure.density_csv())?;
    run.write("measure.json", &(measure.to_json() + "\n"))?;
    let diagnostics = json!({
        "iterations": limit.iterations,
        "atoms": measure.atoms(),
        "total_mass": measure.total_mass(),
        "probability": measure.is_probability(),
        "eps_start": opts.eps_start_for(&model),
        "eps_final": opts.eps_final,
    });
    run.finish("density", flags, args.common.seed, json!({ "diagnostics": diagnostics }))?;
    Ok(Outcome::Pass)
}

fn ensemble_config(n: usize, m: usize, e: &EnsembleArgs, seed: u64) -> Result<EnsembleConfig> {
    EnsembleConfig::new(n, m, e.law.parse()?, parse::amplitude_law(&e.sigma)?, e.h0.parse()?, seed)
}

/// `left,right,density` rows over the range of `values`, normalized to
/// unit total mass.
pub fn histogram_csv(values: &[f64], bins: usize) -> Result<String> {
    if bins == 0 || values.is_empty() {
        return Err(Error::InvalidArgument("histogram needs values and at least one bin".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = values.len() as f64;
    let mut out = String::from("left,right,density\n");
    for (k, c) in counts.iter().enumerate() {
        let left = lo + width * k as f64;
        let right = if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 };
        out.push_str(&format!("{left},{right},{}\n", *c as f64 / (total * (right - left))));
    }
    Ok(out)
}

fn simulate(args: &SimulateArgs, flags: &BTreeMap<String, String>) -> Result<Outcome> {
    let config = ensemble_config(args.n, args.m, &args.ensemble, args.common.seed)?;
    if args.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let mut run = Run::new(&args.common.out)?;
    let mut pooled = Vec::with_capacity(args.n * args.trials);
    for t in 0..args.trials {
        let spec = sample_spectrum(&config, t as u64)?;
        run.write(&format!("eigenvalues_{t:04}.csv"), &spec.to_csv())?;
        pooled.extend_from_slice(spec.eigenvalues());
    }
    run.write("histogram.csv", &histogram_csv(&pooled, args.bins)?)?;
    run.finish("simulate", flags, args.common.seed, json!({}))?;
    Ok(Outcome::Pass)
}

fn compare(args: &CompareArgs, flags: &BTreeMap<String, String>) -> Result<Outcome> {
    let c = args.c.ok_or_else(|| Error::InvalidArgument("compare needs --c".into()))?;
    let sigma = parse::amplitude_law(&args.sigma)?;
    let n0 = match &args.n0 {
        Some(s) => parse::measure(s)?,
        None => SpectralMeasure::dirac(0.0),
    };
    let h0 = match &args.h0 {
        Some(s) => s.parse()?,
        None => H0Spec::Quantiles(n0.clone()),
    };
    let model = ModelSpec::new(c, sigma.clone(), n0)?;
    let opts = SolverOptions { eps_final: args.eps_final, tol: args.tol, ..SolverOptions::default() };
    opts.validate()?;
    let dims: Vec<usize> = parse::list(&args.dims)?;
    let laws: Vec<VectorLaw> = parse::list(&args.law)?;

    let studies: Vec<StudySpec> = laws
        .iter()
        .map(|&law| StudySpec {
            law,
            sigma: sigma.clone(),
            h0: h0.clone(),
            c,
            dims: dims.clone(),
            seeds: args.seeds,
            master_seed: args.common.seed,
        })
        .collect();
    let spectra = studies.iter().map(StudySpec::spectra).collect::<Result<Vec<_>>>()?;
    let all: Vec<&EmpiricalSpectrum> = spectra.iter().flatten().flatten().collect();
    let limit = study_limit(&model, &all, &opts, args.points)?;
    let reports = studies
        .iter()
        .zip(&spectra)
        .map(|(s, sp)| convergence_report(s, sp, &limit))
        .collect::<Result<Vec<_>>>()?;

    let mut checks: Vec<CheckReport> = reports.iter().map(ConvergenceReport::to_check).collect();
    if reports.len() > 1 {
        let n_max = *dims.last().expect("dims are non-empty");
        checks.push(law_independence(&reports, n_max)?.to_check());
    }
    let mut csv = String::from(ConvergenceReport::CSV_HEADER);
    for r in &reports {
        csv.push_str(&r.csv_rows());
    }
    let pass = checks.iter().all(|c| c.pass);
    let mut run = Run::new(&args.common.out)?;
    run.write("convergence.csv", &csv)?;
    run.write("convergence.json", &(serde_json::to_string_pretty(&checks)? + "\n"))?;
    run.finish("compare", flags, args.common.seed, json!({}))?;
    Ok(outcome(pass))
}

/// Largest relative gap between the top eigenvalues of `big` and all of `small`.
fn nonzero_spectrum_gap(big: &EmpiricalSpectrum, small: &EmpiricalSpectrum) -> f64 {
    let top = &big.eigenvalues()[big.n() - small.n()..];
    top.iter()
        .zip(small.eigenvalues())
        .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn gram(args: &CompareArgs, flags: &BTreeMap<String, String>) -> Result<Outcome> {
    let (n, m) = match (args.n, args.m) {
        (Some(n), Some(m)) => (n, m),
        _ => return Err(Error::InvalidArgument("gram mode needs --n and --m".into())),
    };
    if !(n > m && m > 0) {
        return Err(Error::InvalidArgument(format!("gram mode needs n > m > 0, got n = {n}, m = {m}")));
    }
    let sigma = parse::amplitude_law(&args.sigma)?;
    if sigma != AmplitudeLaw::dirac(1.0) {
        return Err(Error::InvalidArgument("gram mode needs tau = 1 (--sigma atoms:1:1)".into()));
    }
    let law: VectorLaw = args.law.parse()?;
    let config = EnsembleConfig::new(n, m, law, sigma, H0Spec::Zero, args.common.seed)?;
    let (mut discrepancy, mut gap) = (0.0f64, 0.0f64);
    for t in 0..args.trials.max(1) as u64 {
        let spec_m = sample_spectrum(&config, t)?;
        let spec_g = eigenvalues_sym(&gram_matrix(&config, t)?)?;
        discrepancy = discrepancy.max(gram_counting_relation(n, m, &spec_m, &spec_g)?);
        gap = gap.max(nonzero_spectrum_gap(&spec_m, &spec_g));
    }
    let report = CheckReport {
        kind: "gram".into(),
        params: json!({
            "n": n,
            "m": m,
            "law": law.to_string(),
            "trials": args.trials.max(1),
            "relative_spectrum_gap": gap,
        }),
        estimate: discrepancy,
        bound: GRAM_TOLERANCE,
        se: 0.0,
        pass: discrepancy <= GRAM_TOLERANCE && gap <= GRAM_TOLERANCE,
    };
    let mut run = Run::new(&args.common.out)?;
    run.write("gram.json", &(report.to_json() + "\n"))?;
    run.finish("compare", flags, args.common.seed, json!({}))?;
    Ok(outcome(report.pass))
}

fn ensemble_params(args: &VerifyArgs) -> Value {
    json!({
        "n": args.n,
        "m": args.m,
        "law": args.ensemble.law,
        "sigma": args.ensemble.sigma,
        "h0": args.ensemble.h0,
        "trials": args.trials,
    })
}

fn verify(args: &VerifyArgs, flags: &BTreeMap<String, String>) -> Result<Outcome> {
    let seed = args.common.seed;
    let report = match args.check {
        Check::CountingVar => {
            let config = ensemble_config(args.n, args.m, &args.ensemble, seed)?;
            let interval = parse::interval(&args.interval)?;
            let mut params = ensemble_params(args);
            params["interval"] = json!([interval.0, interval.1]);
            verify_counting_variance(&config, interval, args.trials)?.to_check("counting-var", params)
        }
        Check::StieltjesVar => {
            let config = ensemble_config(args.n, args.m, &args.ensemble, seed)?;
            let z = parse::complex(&args.z)?;
            let mut params = ensemble_params(args);
            params["z"] = json!([z.re, z.im]);
            verify_stieltjes_variance(&config, z, args.trials)?.to_check("stieltjes-var", params)
        }
        Check::Quadform => {
            let law: VectorLaw = args.ensemble.law.parse()?;
            let dims: Vec<usize> = parse::list(&args.dims)?;
            verify_quadratic_form(law, &dims, args.samples, &mut RngStream::new(seed, 0))?.to_check()
        }
        Check::Tail => {
            let law: VectorLaw = args.ensemble.law.parse()?;
            let t: Vec<f64> = parse::list(&args.t)?;
            verify_norm_tail(law, args.n, args.samples, &t, &mut RngStream::new(seed, 0))?.to_check()
        }
        Check::Isotropy => {
            let law: VectorLaw = args.ensemble.law.parse()?;
            let r = isotropy_estimate(law, args.n, args.samples, &mut RngStream::new(seed, 0))?;
            CheckReport {
                kind: "isotropy".into(),
                params: json!({ "law": law.to_string(), "report": r }),
                estimate: r.max_cov_z.max(r.mean_norm / r.mean_norm_se),
                bound: ISOTROPY_SLACK,
                se: 0.0,
                pass: r.passes(ISOTROPY_SLACK),
            }
        }
    };
    let mut run = Run::new(&args.common.out)?;
    run.write(&format!("{}.json", report.kind), &(report.to_json() + "\n"))?;
    run.finish("verify", flags, seed, json!({}))?;
    Ok(outcome(report.pass))
}
