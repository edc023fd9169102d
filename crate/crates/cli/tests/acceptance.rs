//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured quantities. Tolerances are fixed here, not tuned at runtime.

use gdl::{run_experiment_from_str, Overrides};
use gdl_core::dynamics::{coupled_propagation_gap, estimate_variance_decay, SimulationParams};
use gdl_core::propagation::{remainder_closed_bound, remainder_r, PropagationInputs};
use gdl_core::quadrature::{check_quasi_factorization, QuadRule, QuadratureGrid};
use gdl_core::rates::geometry::{
    construct_overlap_pairs, geometry_level, max_family_box,
};
use gdl_core::rates::{coupling_product, perturb_bisection, rate_kappa_concave};
use gdl_core::{
    BoundaryCondition, ConstantsRegistry, InteractionKind, InteractionSpec, LocalObservable,
    ModelSpec, Region, SelfPotential, Site,
};
use std::f64::consts::E;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

fn tmp_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn overrides(dir: &PathBuf) -> Overrides {
    Overrides { out_dir: Some(dir.clone()), ..Default::default() }
}

#[test]
fn criterion_01_ou_calibration() {
    let start = Instant::now();
    let model = ModelSpec::new(
        SelfPotential::quadratic(),
        InteractionSpec::new(InteractionKind::Zero, 1, 1.0).unwrap(),
        Arc::new(Region::cube(1, 0).unwrap()),
        BoundaryCondition::Zero,
    )
    .unwrap();
    let f = LocalObservable::clipped_coordinate(Site::from(0), 10.0).unwrap();
    let params = SimulationParams {
        dt: 1e-3,
        horizon: 12.0,
        ensemble_size: 128,
        burn_in_steps: 500,
        thinning: 5,
        proposal_scale: 1.0,
        heavy_tail_mix: 0.05,
        seed: 0x0c01,
    };
    let series = estimate_variance_decay(&model, &f, &[0.0, 0.5, 1.0], &params).unwrap();
    let idx = series.times.iter().position(|&t| (t - 1.0).abs() < 1e-12).unwrap();
    let (v, se) = (series.variance[idx], series.std_error[idx]);
    let exact = (-1.0f64).exp();
    let pairs = params.ensemble_size * ((params.horizon / params.dt) as usize - 1000);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(pairs >= 100_000, "effective sample count {pairs} below 1e5");
    assert!(
        (v - exact).abs() <= 3.0 * se,
        "autocovariance at t=1: {v} vs e^-1 = {exact} (se {se})"
    );
    assert!(elapsed < 120.0, "runtime {elapsed:.1}s exceeds 2 minutes");
    println!(
        "ACCEPT 01 OU calibration: PASS  cov(1) = {v:.5} vs {exact:.5} (se {se:.5}, {pairs} pairs, {elapsed:.1}s)"
    );
}

#[test]
fn criterion_02_geometry_suite() {
    let mut split = 0usize;
    let mut vacuous = 0usize;
    for dim in 1..=3u32 {
        for &eps in &[0.25, 0.5, 0.75] {
            for k in 0..=20u32 {
                let parent = max_family_box(k, dim, eps).unwrap();
                if parent.in_family(k as i64 - 1, eps) {
                    // no integer rectangle separates F_k from F_{k-1} here
                    vacuous += 1;
                    continue;
                }
                let level = geometry_level(k, dim, eps).unwrap();
                let pairs = construct_overlap_pairs(&parent, k, eps)
                    .unwrap_or_else(|e| panic!("k={k} d={dim} eps={eps}: {e}"));
                assert_eq!(pairs.len(), level.pair_count.max(1) as usize);
                for p in &pairs {
                    let a = p.cut_axis;
                    assert!(p.parent.contains_box(&p.first) && p.parent.contains_box(&p.second));
                    assert!(p.second.lo[a] <= p.first.hi[a] + 1, "(i) union");
                    assert!(p.complement_separation() >= level.separation, "(ii) separation");
                    assert!(p.first.in_family(k as i64 - 1, eps), "half outside F_(k-1)");
                    assert!(p.second.in_family(k as i64 - 1, eps), "half outside F_(k-1)");
                }
                for i in 0..pairs.len() {
                    for j in i + 1..pairs.len() {
                        if let (Some(a), Some(b)) = (&pairs[i].overlap, &pairs[j].overlap) {
                            assert!(a.intersect(b).is_none(), "(iii) disjoint overlaps");
                        }
                    }
                }
                split += 1;
            }
        }
    }
    println!("ACCEPT 02 geometry suite: PASS  {split} levels verified, {vacuous} vacuous, 0 failures");
}

#[test]
fn criterion_03_recursion_convergence() {
    // partial products for eps = 0.5, d = 1, c1 = c2 = 1
    let mut prev = 0.0;
    let mut p40 = 0.0;
    let mut p60 = 0.0;
    for k in 0..=60u32 {
        let p = coupling_product(0, k, 1, 0.5, 1.0, 1.0).unwrap();
        assert!(p >= prev, "partial products must be monotone increasing");
        prev = p;
        if k == 40 {
            p40 = p;
        }
        if k == 60 {
            p60 = p;
        }
    }
    assert!((p60 - p40).abs() < 1e-12, "products must stabilise: {p40} vs {p60}");

    // dilation bracket for the bisection-built rate function
    let registry = ConstantsRegistry::default();
    let base = rate_kappa_concave(2.0, 1.0).unwrap();
    for half_side in [4u64, 10, 32] {
        let beta = perturb_bisection(base.clone(), half_side, 1, 0.5, &registry).unwrap();
        let (k0, k_top) = match &beta {
            gdl_core::rates::RateFunction::PerturbedBisection { level_range, .. } => *level_range,
            _ => panic!("expected the bisection variant"),
        };
        let dil = beta.bisection_dilation().unwrap();
        let pow = 2f64.powi((k_top - k0) as i32);
        assert!(dil >= pow, "dilation below 2^(k-k0)");
        assert!(dil <= p60 * pow * (1.0 + 1e-12), "dilation above C 2^(k-k0)");
    }
    println!(
        "ACCEPT 03 recursion convergence: PASS  product limit {p60:.12}, dilation bracket holds"
    );
}

#[test]
fn criterion_04_remainder_suite() {
    assert!((remainder_r(0, 1.0) - (E - 1.0)).abs() < 1e-12);
    assert!((remainder_r(2, 1.0) - (E - 2.5)).abs() < 1e-12);
    for m in 1..=50u32 {
        let mut prev_x = 0.0;
        for i in 0..=40 {
            let x = 0.25 * i as f64;
            let r = remainder_r(m, x);
            assert!(r >= 0.0);
            assert!(remainder_closed_bound(m, x) >= r, "closed bound fails at m={m}, x={x}");
            if x > 0.0 {
                assert!(remainder_r(m - 1, x) > r, "must decrease in m at x={x}");
                assert!(r > prev_x, "must increase in x at m={m}");
            }
            prev_x = r;
        }
    }
    println!("ACCEPT 04 remainder suite: PASS  grid m in [1,50] x x in [0,10], exact values to 1e-12");
}

fn oracle_config(potential: &str) -> String {
    let (kind_line, rate) = match potential {
        "kappa" => ("kind = \"kappa_concave\"\nalpha = 2.0", "op = \"kappa\"\nalpha = 2.0\nc = 1.0"),
        _ => ("kind = \"sub_exponential\"\np = 0.5", "op = \"sub_exponential\"\np = 0.5\nc = 1.0"),
    };
    format!(
        r#"
task = "oracle"

[model]
dimension = 1
l = 0
r = 1
t = 1.0
[model.potential]
{kind_line}
[model.interaction]
name = "zero"

[oracle]
grid = {{ points = 400 }}

[oracle.check]
name = "weak_poincare"
fit_constant = true
scales = [1.0, 2.0, 4.0, 8.0]
s_exp_min = 2
s_exp_max = 20

[oracle.check.rate]
{rate}
"#
    )
}

fn run_oracle(potential: &str, dir_name: &str) -> (f64, f64) {
    let dir = tmp_dir(dir_name);
    run_experiment_from_str(&oracle_config(potential), &overrides(&dir)).unwrap();
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("oracle.json")).unwrap()).unwrap();
    assert_eq!(verdict["pass"], true, "oracle verdict failed: {verdict}");
    (
        verdict["detail"]["fitted_constant"].as_f64().unwrap(),
        verdict["value"].as_f64().unwrap(),
    )
}

#[test]
fn criterion_05_oracle_inequality_checks() {
    let start = Instant::now();
    let (c_kappa, deficit_kappa) = run_oracle("kappa", "oracle_kappa");
    let t_kappa = start.elapsed().as_secs_f64();
    assert!(t_kappa < 60.0, "kappa check took {t_kappa:.1}s");
    assert!(c_kappa.is_finite() && c_kappa > 0.0);
    assert!(deficit_kappa <= 0.0);

    let start = Instant::now();
    let (c_subexp, deficit_subexp) = run_oracle("subexp", "oracle_subexp");
    let t_subexp = start.elapsed().as_secs_f64();
    assert!(t_subexp < 60.0, "subexp check took {t_subexp:.1}s");
    assert!(c_subexp.is_finite() && c_subexp > 0.0);
    assert!(deficit_subexp <= 0.0);
    println!(
        "ACCEPT 05 oracle inequalities: PASS  kappa c = {c_kappa:.4} ({t_kappa:.1}s), subexp c = {c_subexp:.4} ({t_subexp:.1}s)"
    );
}

#[test]
fn criterion_06_dlr_residual() {
    let dir = tmp_dir("dlr");
    let cfg = r#"
task = "oracle"

[model]
dimension = 1
l = 1
r = 1
t = 2.0
[model.potential]
kind = "sub_exponential"
p = 0.5
[model.interaction]
name = "lorentz"

[oracle]
grid = { points = 200 }

[oracle.check]
name = "dlr"
inner_l = 0
observable = { kind = "tanh", site = [0], scale = 1.0 }
"#;
    run_experiment_from_str(cfg, &overrides(&dir)).unwrap();
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("oracle.json")).unwrap()).unwrap();
    let residual = verdict["value"].as_f64().unwrap();
    assert!(residual <= 1e-6, "DLR residual {residual}");
    println!("ACCEPT 06 DLR residual: PASS  residual = {residual:.3e} <= 1e-6 at n = 200");
}

#[test]
fn criterion_07_quasi_factorization() {
    let region = Arc::new(Region::rectangle(1, [0, 0, 0], [2, 0, 0]).unwrap());
    let part1 = Arc::new(Region::rectangle(1, [0, 0, 0], [1, 0, 0]).unwrap());
    let part2 = Arc::new(Region::rectangle(1, [1, 0, 0], [2, 0, 0]).unwrap());
    let mut worst_by_t = Vec::new();
    for &t in &[2.0, 5.0, 10.0] {
        let model = ModelSpec::new(
            SelfPotential::kappa_concave(2.0).unwrap(),
            InteractionSpec::new(InteractionKind::Lorentz, 1, t).unwrap(),
            region.clone(),
            BoundaryCondition::Zero,
        )
        .unwrap();
        let grid = QuadratureGrid::new(1000.0, 160, QuadRule::GaussLegendre, 1e-3).unwrap();
        let mut worst = 0.0f64;
        for site in 0..=2i64 {
            let f = LocalObservable::tanh_site(Site::from(site), 1.0).unwrap();
            let qf = check_quasi_factorization(&model, part1.clone(), part2.clone(), &f, &grid)
                .unwrap();
            assert!(qf.ratio <= 1.5, "ratio {} exceeds 1.5 at T={t}", qf.ratio);
            worst = worst.max(qf.ratio);
        }
        worst_by_t.push(worst);
    }
    assert!(
        worst_by_t[0] >= worst_by_t[1] && worst_by_t[1] >= worst_by_t[2],
        "ratios must decrease toward 1 as T grows: {worst_by_t:?}"
    );
    assert!(worst_by_t.iter().all(|r| *r >= 1.0 - 1e-9));
    println!(
        "ACCEPT 07 quasi-factorization: PASS  worst ratios {:.6} >= {:.6} >= {:.6} (all <= 1.5)",
        worst_by_t[0], worst_by_t[1], worst_by_t[2]
    );
}

const STUDY_SUBEXP: &str = r#"
task = "decay-study"

[model]
dimension = 1
l = 8
r = 1
t = 5.0
[model.potential]
kind = "sub_exponential"
p = 0.5
[model.interaction]
name = "lorentz"
[model.boundary]
kind = "zero"

[params]
dt = 1e-3
horizon = 60.0
ensemble_size = 600
burn_in_steps = 1500
thinning = 5
proposal_scale = 1.2
heavy_tail_mix = 0.1
seed = 8881

[decay_study]
observable = { kind = "tanh", site = [0], scale = 1.0 }
times = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 11.0, 14.0, 18.0, 22.0, 26.0, 30.0]
fit_window = [1.0, 30.0]
envelope = { kind = "sub_exp", p = 0.5 }
"#;

#[test]
fn criterion_08_decay_shape_sub_exponential() {
    let start = Instant::now();
    let dir = tmp_dir("study_subexp");
    run_experiment_from_str(STUDY_SUBEXP, &overrides(&dir)).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("decay_study.json")).unwrap())
            .unwrap();
    let stretched = report["stretched_fit"]["residual"].as_f64().unwrap();
    let poly = report["polynomial_fit"]["residual"].as_f64().unwrap();
    let exponent = report["stretched_fit"]["model"]["exponent"].as_f64().unwrap();
    let dominated = report["dominated"].as_bool().unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!((exponent - 1.0 / 3.0).abs() < 1e-12, "hypothesis exponent p/(2-p)");
    assert!(
        stretched < poly,
        "stretched residual {stretched} must beat polynomial {poly}"
    );
    assert!(dominated, "calibrated stretched envelope must dominate within 3 SE");
    assert!(elapsed < 1800.0, "runtime {elapsed:.0}s exceeds 30 minutes");
    println!(
        "ACCEPT 08 sub-exponential decay shape: PASS  residuals {stretched:.2e} < {poly:.2e}, dominated, {elapsed:.0}s"
    );
}

const STUDY_KAPPA: &str = r#"
task = "decay-study"

[model]
dimension = 1
l = 8
r = 1
t = 5.0
[model.potential]
kind = "kappa_concave"
alpha = 6.0
base = "smooth_abs_wide"
base_width = 4.0
[model.interaction]
name = "lorentz"
[model.boundary]
kind = "zero"

[params]
dt = 2e-3
horizon = 42.0
ensemble_size = 1000
burn_in_steps = 1500
thinning = 5
proposal_scale = 3.0
heavy_tail_mix = 0.15
seed = 9992

[decay_study]
observable = { kind = "tanh", site = [0], scale = 4.0 }
times = [0.0, 0.5, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0, 11.0, 15.0, 20.0, 25.0, 30.0]
fit_window = [2.0, 30.0]
envelope = { kind = "kappa", alpha = 6.0, eps = 0.5 }
"#;

#[test]
fn criterion_09_decay_shape_kappa_concave() {
    let start = Instant::now();
    let dir = tmp_dir("study_kappa");
    run_experiment_from_str(STUDY_KAPPA, &overrides(&dir)).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("decay_study.json")).unwrap())
            .unwrap();
    let slope = report["polynomial_fit"]["model"]["slope"].as_f64().unwrap();
    let dominated = report["dominated"].as_bool().unwrap();
    let window = &report["effective_window"];
    let elapsed = start.elapsed().as_secs_f64();
    assert!(slope <= -1.0, "log-log slope {slope} must be <= -1");
    assert!(dominated, "calibrated polynomial envelope must dominate within 3 SE");
    assert!(elapsed < 1800.0, "runtime {elapsed:.0}s exceeds 30 minutes");
    println!(
        "ACCEPT 09 polynomial decay shape: PASS  slope {slope:.2} <= -1 on window {window}, dominated, {elapsed:.0}s"
    );
}

#[test]
fn criterion_10_finite_speed_experiment() {
    // Cauchy-type spins with the cosine interaction keep the pair coupling
    // alive at every spin separation, so the influence of the far boundary
    // is resolvable down to the deepest cube. T = 1 keeps the true
    // propagation speed below the nominal chain constant (2r)^d |W''|.
    let make = |half: i64| {
        ModelSpec::new(
            SelfPotential::kappa_concave(2.0).unwrap(),
            InteractionSpec::new(InteractionKind::Cosine, 1, 1.0).unwrap(),
            Arc::new(Region::cube(1, half).unwrap()),
            BoundaryCondition::Zero,
        )
        .unwrap()
    };
    let large = make(32);
    let f = LocalObservable::tanh_site(Site::from(0), 1.0).unwrap();
    let params = SimulationParams {
        dt: 1e-3,
        horizon: 1.0,
        ensemble_size: 12,
        burn_in_steps: 600,
        thinning: 5,
        proposal_scale: 1.0,
        heavy_tail_mix: 0.1,
        seed: 0xf00d,
    };
    let t = 1.0;
    let mut gaps = Vec::new();
    for half in [4i64, 8, 16] {
        let gap = coupled_propagation_gap(&make(half), &large, &f, t, 24, &params).unwrap();
        println!("  half side {half}: gap {:.6e} +- {:.2e}", gap.gap, gap.std_error);
        gaps.push(gap);
    }
    // strictly decreasing, ordered within 2 SE
    for w in gaps.windows(2) {
        let slack = 2.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        assert!(
            w[1].gap < w[0].gap + slack,
            "gaps must decrease in the half side: {} then {}",
            w[0].gap,
            w[1].gap
        );
    }
    assert!(gaps[2].gap < gaps[0].gap, "outermost comparison must be strict");

    // proof-chain analytic bound with the prefactor fitted at L = 4
    let bound_for = |half: u64| {
        PropagationInputs {
            half_side: half,
            range: 1,
            support_radius: 1,
            time: t,
            c: 1.0,
            c_prime: 1.0,
            c_second: 1.0,
            triple_norm: f.triple_norm,
            dimension: 1,
            w_prime_norm: 1.0,
            w_second_norm: 1.0,
        }
        .bound()
        .unwrap()
        .proof_chain
    };
    let k = gaps[0].gap / bound_for(4);
    for (i, half) in [8u64, 16].iter().enumerate() {
        let bound = k * bound_for(*half);
        assert!(
            gaps[i + 1].gap <= bound,
            "gap {} at half side {half} exceeds the fitted proof-chain bound {bound}",
            gaps[i + 1].gap
        );
    }

    // identical volumes: exactly zero for all starts
    let control = coupled_propagation_gap(&large, &large, &f, t, 4, &params).unwrap();
    assert_eq!(control.gap, 0.0, "identical systems with common noise must match exactly");
    assert!(control.per_start.iter().all(|&g| g == 0.0));
    println!(
        "ACCEPT 10 finite speed: PASS  gaps {:.3e} > {:.3e} > {:.3e}, below fitted chain bound, control exactly 0",
        gaps[0].gap, gaps[1].gap, gaps[2].gap
    );
}

#[test]
fn criterion_11_reproducibility() {
    // Every artifact-producing path re-run with the same seed must produce
    // byte-identical CSV bodies (and identical JSON reports).
    let simulate_cfg = r#"
task = "simulate"

[model]
dimension = 1
l = 1
r = 1
t = 2.0
[model.potential]
kind = "sub_exponential"
p = 0.5
[model.interaction]
name = "lorentz"

[params]
dt = 1e-3
horizon = 3.0
ensemble_size = 24
burn_in_steps = 200
thinning = 4
proposal_scale = 1.2
heavy_tail_mix = 0.1
seed = 31337

[simulate]
observable = { kind = "tanh", site = [0], scale = 1.0 }
times = [0.0, 0.5, 1.0, 2.0]
"#;
    let study_cfg = r#"
task = "decay-study"

[model]
dimension = 1
l = 2
r = 1
t = 5.0
[model.potential]
kind = "sub_exponential"
p = 0.5
[model.interaction]
name = "lorentz"

[params]
dt = 2e-3
horizon = 12.0
ensemble_size = 48
burn_in_steps = 300
thinning = 4
proposal_scale = 1.2
heavy_tail_mix = 0.1
seed = 777

[decay_study]
observable = { kind = "tanh", site = [0], scale = 1.0 }
times = [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0]
fit_window = [0.5, 5.0]
envelope = { kind = "sub_exp", p = 0.5 }
"#;
    let propagation_cfg = r#"
task = "propagation"

[propagation]
range = 1
support_radius = 1
time = 1.0
c = 1.0
c_prime = 1.0
c_second = 1.0
triple_norm = 1.0
dimension = 1
w_prime_norm = 0.65
w_second_norm = 2.0
l_values = [2, 4, 8, 16, 32, 64]
"#;
    let envelope_cfg = r#"
task = "envelope"

[envelope]
t_min = 0.5
t_max = 500.0
points = 40

[envelope.envelope]
kind = "rw_optimized"
var0 = 1.0
sup_norm = 1.0

[envelope.envelope.rate]
op = "sub_exponential"
p = 0.5
c = 1.0
"#;
    let rates_cfg = r#"
task = "rates"

[rates]
s_min = 1e-9
s_max = 0.25
points = 64

[rates.rate]
op = "perturb_bisection"
l = 8
dimension = 1
eps = 0.5

[rates.rate.base]
op = "kappa"
alpha = 2.0
c = 1.0
"#;
    let dlr_cfg = r#"
task = "oracle"

[model]
dimension = 1
l = 1
r = 1
t = 2.0
[model.potential]
kind = "sub_exponential"
p = 0.5
[model.interaction]
name = "lorentz"

[oracle]
grid = { points = 100 }

[oracle.check]
name = "dlr"
inner_l = 0
observable = { kind = "tanh", site = [0], scale = 1.0 }
"#;

    let mut compared = 0usize;
    for (name, cfg) in [
        ("rates", rates_cfg),
        ("envelope", envelope_cfg),
        ("propagation", propagation_cfg),
        ("oracle", dlr_cfg),
        ("simulate", simulate_cfg),
        ("decay-study", study_cfg),
    ] {
        let dir_a = tmp_dir(&format!("repro_{name}_a"));
        let dir_b = tmp_dir(&format!("repro_{name}_b"));
        let out_a = run_experiment_from_str(cfg, &overrides(&dir_a)).unwrap();
        let out_b = run_experiment_from_str(cfg, &overrides(&dir_b)).unwrap();
        assert_eq!(out_a.artifacts.len(), out_b.artifacts.len());
        for (a, b) in out_a.artifacts.iter().zip(&out_b.artifacts) {
            let fname = a.file_name().unwrap().to_str().unwrap();
            if fname.ends_with(".meta.json") {
                continue; // sidecars carry timestamps
            }
            let bytes_a = std::fs::read(a).unwrap();
            let bytes_b = std::fs::read(b).unwrap();
            assert_eq!(bytes_a, bytes_b, "artifact {fname} of task {name} differs across reruns");
            compared += 1;
        }
    }
    println!("ACCEPT 11 reproducibility: PASS  {compared} artifact bodies byte-identical across reruns");
}
