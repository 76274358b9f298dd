//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! The process exits non-zero only when a criterion fails that is not listed
//! in `KNOWN_FAILURES`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde_json::Value;
use tempfile::TempDir;

use lcmp::ensemble::{build_matrix, eigenvalues_sym, resolvent_trace_stream, EnsembleConfig, H0Spec};
use lcmp::measures::{AmplitudeLaw, SpectralMeasure};
use lcmp::rng::RngStream;
use lcmp::samplers::{sample_vector, VectorLaw};
use lcmp::solver::{
    limit_density, mp_closed_form, mp_stieltjes_oracle, normalization_check, solve_mpe_at, solve_mpe_grid, ModelSpec,
    SolverOptions,
};
use lcmp::verify::clustered_grid;

const ORACLE_TOL: f64 = 1e-8;
const DENSITY_TOL: f64 = 1e-3;
const MASS_TOL: f64 = 5e-3;
const NORMALIZATION_TOL: f64 = 2e-3;
const STREAM_TOL: f64 = 1e-8;
const SPHERE_NORM_TOL: f64 = 1e-12;
const QUADFORM_GAUSS_TOL: f64 = 0.15;

/// Criteria expected to fail, with the reason printed next to them.
const KNOWN_FAILURES: &[(u32, &str)] = &[
    (
        2,
        "the quoted spot values 1/(4pi) and 0.30819 come from a density scaled by 1/(4 pi c lambda), \
         whose total mass is 1/(2c); the normalized density gives 1/(2pi) and 0.15410",
    ),
    (
        6,
        "cross-law agreement within 2 pooled SE at n = 1024 with 5 seeds is not reliable: over master \
         seeds 0..19 it fails for 7 of 20 (seed 0 included), and gauss sits about 2e-4 above sphere",
    ),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn lcmp(args: &[&str], out: &Path) -> (Option<i32>, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_lcmp"))
        .args(args)
        .args(["--out", out.to_str().expect("utf-8 path")])
        .output()
        .expect("binary runs");
    (output.status.code(), String::from_utf8_lossy(&output.stderr).into_owned())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).expect("output exists")).expect("valid json")
}

fn oracle_equivalence() -> Outcome {
    let opts = SolverOptions::default();
    let zs = [Complex64::i(), Complex64::new(0.0, 2.0), Complex64::new(1.0, 0.1), Complex64::new(-1.0, 0.5)];
    let mut worst: f64 = 0.0;
    for c in [0.25, 0.5, 1.0, 2.0] {
        let model = ModelSpec::marchenko_pastur(c).unwrap();
        for z in zs {
            let f = solve_mpe_at(z, &model, &opts, None).unwrap();
            worst = worst.max((f - mp_stieltjes_oracle(c, z)).norm());
        }
    }
    Outcome { pass: worst <= ORACLE_TOL, detail: format!("max |f - oracle| = {worst:.2e} (tol {ORACLE_TOL:.0e})") }
}

fn density_reproduction() -> Outcome {
    let dir = TempDir::new().unwrap();
    let (code, err) = lcmp(&["density", "--c", "1", "--grid", "0.01:3.99:400", "--eps-final", "1e-4"], dir.path());
    if code != Some(0) {
        return Outcome { pass: false, detail: format!("density exited with {code:?}: {err}") };
    }
    let csv = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let measure = SpectralMeasure::from_density_csv(&csv).unwrap();
    let d = measure.density().unwrap();
    let pointwise = d
        .grid()
        .iter()
        .zip(d.values())
        .map(|(&l, &v)| (v - mp_closed_form(1.0, l)).abs())
        .fold(0.0, f64::max);

    let opts = SolverOptions { eps_final: 1e-4, ..SolverOptions::default() };
    let spot = |c: f64, l: f64| solve_mpe_grid(&[l], &ModelSpec::marchenko_pastur(c).unwrap(), &opts).unwrap()[0].im / PI;
    let (rho2, rho1) = (spot(1.0, 2.0), spot(0.25, 1.0));
    let quoted = [(rho2, 1.0 / (4.0 * PI)), (rho1, 0.30819)];
    let spots_ok = quoted.iter().all(|(v, q)| (v - q).abs() <= DENSITY_TOL);
    let closed_ok = (rho2 - mp_closed_form(1.0, 2.0)).abs() <= DENSITY_TOL && (rho1 - mp_closed_form(0.25, 1.0)).abs() <= DENSITY_TOL;
    Outcome {
        pass: pointwise <= DENSITY_TOL && spots_ok,
        detail: format!(
            "pointwise max err {pointwise:.2e} (tol {DENSITY_TOL:.0e}); solved rho(2; c=1) = {rho2:.5}, quoted {:.5}; \
             solved rho(1; c=0.25) = {rho1:.5}, quoted 0.30819; solved spots {} the normalized closed form",
            1.0 / (4.0 * PI),
            if closed_ok { "match" } else { "DO NOT match" },
        ),
    }
}

fn mass_accounting() -> Outcome {
    let model = ModelSpec::marchenko_pastur(0.25).unwrap();
    let opts = SolverOptions::default();
    let limit = limit_density(&model, &clustered_grid(0.0, 2.5, 2000), &opts).unwrap();
    let atom = limit.atoms().iter().find(|(x, _)| *x == 0.0).map_or(0.0, |a| a.1);
    let total = limit.total_mass();
    let norm = normalization_check(|z| solve_mpe_at(z, &model, &opts, None), 1e3).unwrap();
    Outcome {
        pass: (atom - 0.75).abs() <= MASS_TOL && (total - 1.0).abs() <= MASS_TOL && (norm - 1.0).abs() <= NORMALIZATION_TOL,
        detail: format!("atom {atom:.6}, total mass {total:.6} (tol {MASS_TOL:.0e}); y|f(iy)| at y = 1e3: {norm:.6} (tol {NORMALIZATION_TOL:.0e})"),
    }
}

fn variance_bounds() -> Outcome {
    let dir = TempDir::new().unwrap();
    let runs = [
        ("counting-var", vec!["verify", "--check", "counting-var", "--n", "500", "--m", "250", "--trials", "200", "--interval", "0.25:2.25"]),
        ("stieltjes-var", vec!["verify", "--check", "stieltjes-var", "--n", "400", "--m", "200", "--trials", "200", "--z", "i"]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, args) in runs {
        let (code, err) = lcmp(&args, dir.path());
        if code.is_none() || code == Some(2) {
            return Outcome { pass: false, detail: format!("{kind} exited with {code:?}: {err}") };
        }
        let r = json(&dir.path().join(format!("{kind}.json")));
        pass &= r["pass"].as_bool().unwrap();
        parts.push(format!(
            "{kind} {:.3e} <= {:.3e} + 3 x {:.1e}",
            r["estimate"].as_f64().unwrap(),
            r["bound"].as_f64().unwrap(),
            r["se"].as_f64().unwrap()
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn resolvent_stream() -> Outcome {
    let mut rng = RngStream::new(2024, 0);
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let n = rng.random_range(2..=100);
        let m = rng.random_range(0..=2 * n);
        let law = VectorLaw::SHIPPED[rng.random_range(0..VectorLaw::SHIPPED.len())];
        let (t1, t2): (f64, f64) = (rng.random_range(-2.0..0.05), rng.random_range(0.1..3.0));
        let w: f64 = rng.random_range(0.1..0.9);
        let sigma = AmplitudeLaw::new(vec![(t1, w), (t2, 1.0 - w)]).unwrap();
        let h0 = H0Spec::Diagonal((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        let config = EnsembleConfig::new(n, m, law, sigma, h0, k).unwrap();
        let spec = eigenvalues_sym(&build_matrix(&config, 0).unwrap()).unwrap();
        for z in [Complex64::i(), Complex64::new(0.5, 0.5)] {
            let a = resolvent_trace_stream(&config, z, 0).unwrap();
            worst = worst.max((a - spec.stieltjes(z).unwrap()).norm());
        }
    }
    Outcome { pass: worst <= STREAM_TOL, detail: format!("20 configs, max |stream - eigensolve| = {worst:.2e} (tol {STREAM_TOL:.0e})") }
}

fn convergence_study() -> Outcome {
    let dir = TempDir::new().unwrap();
    let args = ["compare", "--c", "0.5", "--law", "sphere,gauss,lp:1,cube", "--dims", "256,512,1024", "--seeds", "5", "--seed", "0"];
    let (code, err) = lcmp(&args, dir.path());
    if code.is_none() || code == Some(2) {
        return Outcome { pass: false, detail: format!("compare exited with {code:?}: {err}") };
    }
    let checks = json(&dir.path().join("convergence.json"));
    let checks = checks.as_array().unwrap();
    let mut decreasing = true;
    let mut parts = Vec::new();
    for c in &checks[..4] {
        let p = &c["params"];
        decreasing &= p["decreasing"].as_bool().unwrap();
        let ks: Vec<String> = p["rows"].as_array().unwrap().iter().map(|r| format!("{:.5}", r["mean_ks"].as_f64().unwrap())).collect();
        parts.push(format!("{} [{}]", p["law"].as_str().unwrap(), ks.join(" > ")));
    }
    let gap = checks[4]["estimate"].as_f64().unwrap();
    let agree = checks[4]["pass"].as_bool().unwrap();
    Outcome {
        pass: decreasing && agree,
        detail: format!(
            "monotone decrease {}: {}; cross-law gap at n = 1024 {gap:.2} pooled SE (limit 2) {}",
            if decreasing { "ok" } else { "FAILED" },
            parts.join(", "),
            if agree { "ok" } else { "FAILED" }
        ),
    }
}

fn isotropy_suite() -> Outcome {
    let dir = TempDir::new().unwrap();
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for law in VectorLaw::SHIPPED {
        for n in [10, 50, 200] {
            let (law_s, n_s) = (law.to_string(), n.to_string());
            let (code, err) = lcmp(&["verify", "--check", "isotropy", "--law", &law_s, "--n", &n_s, "--samples", "100000"], dir.path());
            if code.is_none() || code == Some(2) {
                return Outcome { pass: false, detail: format!("isotropy {law_s} n = {n} exited with {code:?}: {err}") };
            }
            let r = json(&dir.path().join("isotropy.json"));
            worst = worst.max(r["estimate"].as_f64().unwrap());
            if !r["pass"].as_bool().unwrap() {
                pass = false;
                failures.push(format!("{law_s}@{n}"));
            }
        }
    }
    let mut rng = RngStream::new(11, 0);
    let mut norm_err: f64 = 0.0;
    for n in [10, 50, 200] {
        for _ in 0..10_000 {
            let y = sample_vector(VectorLaw::Sphere, n, &mut rng).unwrap();
            norm_err = norm_err.max((y.norm_sqr().sqrt() - 1.0).abs());
        }
    }
    pass &= norm_err <= SPHERE_NORM_TOL;
    Outcome {
        pass,
        detail: format!(
            "6 laws x n in {{10, 50, 200}}, worst {worst:.2} SE (limit 5){}; sphere max ||Y| - 1| = {norm_err:.1e}",
            if failures.is_empty() { String::new() } else { format!(", failing {}", failures.join(" ")) }
        ),
    }
}

fn concentration_decay() -> Outcome {
    let dir = TempDir::new().unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut gauss_slope = f64::NAN;
    for law in VectorLaw::SHIPPED {
        let law_s = law.to_string();
        let (code, err) = lcmp(&["verify", "--check", "quadform", "--law", &law_s, "--dims", "64,128,256,512"], dir.path());
        if code.is_none() || code == Some(2) {
            return Outcome { pass: false, detail: format!("quadform {law_s} exited with {code:?}: {err}") };
        }
        let r = json(&dir.path().join("quadform.json"));
        pass &= r["pass"].as_bool().unwrap();
        parts.push(format!("{law_s} {:.2}", r["estimate"].as_f64().unwrap()));
        if law == VectorLaw::GaussianIso {
            gauss_slope = r["params"]["slope_identity"].as_f64().unwrap_or(f64::NAN);
        }
    }
    let gauss_ok = (gauss_slope + 1.0).abs() <= QUADFORM_GAUSS_TOL;
    Outcome {
        pass: pass && gauss_ok,
        detail: format!(
            "worst slope per law (limit -0.2): {}; gauss A = I slope {gauss_slope:.3} (target -1 +/- {QUADFORM_GAUSS_TOL})",
            parts.join(", ")
        ),
    }
}

fn gram_duality() -> Outcome {
    let dir = TempDir::new().unwrap();
    let (code, err) = lcmp(&["compare", "--gram", "--n", "300", "--m", "150", "--law", "gauss"], dir.path());
    if code.is_none() || code == Some(2) {
        return Outcome { pass: false, detail: format!("gram exited with {code:?}: {err}") };
    }
    let r = json(&dir.path().join("gram.json"));
    Outcome {
        pass: r["pass"].as_bool().unwrap(),
        detail: format!(
            "counting discrepancy {:.1e}, relative spectrum gap {:.1e} (tol 1e-8)",
            r["estimate"].as_f64().unwrap(),
            r["params"]["relative_spectrum_gap"].as_f64().unwrap()
        ),
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 5] = [
        &["density", "--c", "0.5", "--grid", "0.01:3:200"],
        &["simulate", "--n", "80", "--m", "40", "--law", "lp:1", "--sigma", "atoms:0.5:0.5,2:0.5", "--trials", "3", "--seed", "9"],
        &["compare", "--c", "0.5", "--law", "sphere,cgauss", "--dims", "32,64", "--seeds", "2", "--seed", "4"],
        &["compare", "--gram", "--n", "40", "--m", "20", "--law", "cube", "--seed", "5"],
        &["verify", "--check", "tail", "--law", "laplace", "--n", "30", "--samples", "2000", "--seed", "6"],
    ];
    let mut differing = Vec::new();
    for args in commands {
        let dir = TempDir::new().unwrap();
        lcmp(args, dir.path());
        let first = snapshot(dir.path());
        lcmp(args, dir.path());
        if first.is_empty() || snapshot(dir.path()) != first {
            differing.push(args[0..2].join(" "));
        }
    }
    Outcome {
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            "density, simulate, compare, gram and verify reruns are byte-identical".into()
        } else {
            format!("outputs differ for: {}", differing.join("; "))
        },
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "MP oracle equivalence", oracle_equivalence),
        (2, "MP density reproduction", density_reproduction),
        (3, "mass and atom accounting", mass_accounting),
        (4, "variance bounds", variance_bounds),
        (5, "resolvent-stream oracle", resolvent_stream),
        (6, "convergence study", convergence_study),
        (7, "isotropy suite", isotropy_suite),
        (8, "concentration decay", concentration_decay),
        (9, "Gram duality", gram_duality),
        (10, "determinism", determinism),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id).map(|(_, why)| *why);
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{status} {id:>2} {name} ({secs:.1} s): {}", outcome.detail);
        if !outcome.pass {
            match known {
                Some(why) => println!("        known failure: {why}"),
                None => unexpected += 1,
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
