//! Quadrature-oracle verification of the functional inequalities.

use gdl_core::quadrature::{
    check_dlr, check_quasi_factorization, check_weak_poincare, fit_weak_poincare_constant,
    quad_expectation, QuadRule, QuadratureGrid,
};
use gdl_core::rates::{rate_kappa_concave, rate_sub_exponential, RateFunction};
use gdl_core::{
    BoundaryCondition, InteractionKind, InteractionSpec, LocalObservable, ModelSpec, Region,
    SelfPotential, Site,
};
use std::sync::Arc;

fn single_site(potential: SelfPotential) -> ModelSpec {
    ModelSpec::new(
        potential,
        InteractionSpec::new(InteractionKind::Zero, 1, 1.0).unwrap(),
        Arc::new(Region::cube(1, 0).unwrap()),
        BoundaryCondition::Zero,
    )
    .unwrap()
}

fn sigmoid_family() -> Vec<LocalObservable> {
    [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&a| LocalObservable::tanh_site(Site::from(0), a).unwrap())
        .collect()
}

fn s_grid() -> Vec<f64> {
    (2..=20).map(|k| 2f64.powi(-k)).collect()
}

#[test]
fn cauchy_type_rate_function_passes_with_finite_constant() {
    let model = single_site(SelfPotential::kappa_concave(2.0).unwrap());
    let grid = QuadratureGrid::for_model(&model, 400, QuadRule::GaussLegendre).unwrap();
    let family = sigmoid_family();
    let shape = rate_kappa_concave(2.0, 1.0).unwrap(); // s^-1 shape
    let c = fit_weak_poincare_constant(&model, &grid, &shape, &family, &s_grid()).unwrap();
    println!("kappa(2) fitted constant: {c}");
    assert!(c.is_finite() && c > 0.0);
    let beta = rate_kappa_concave(2.0, c).unwrap();
    let report = check_weak_poincare(&model, &grid, &beta, &family, &s_grid()).unwrap();
    println!("kappa(2) worst deficit: {} at ({}, s={})",
        report.worst_deficit, report.worst_observable, report.worst_s);
    assert!(report.worst_deficit <= 0.0);
    // slightly smaller constant must fail: the fit is tight
    let betal = rate_kappa_concave(2.0, c * 0.8).unwrap();
    let report = check_weak_poincare(&model, &grid, &betal, &family, &s_grid()).unwrap();
    assert!(report.worst_deficit > 0.0, "fit should be near-tight");
}

#[test]
fn sub_exponential_rate_function_passes_with_finite_constant() {
    let model = single_site(SelfPotential::sub_exponential(0.5).unwrap());
    let grid = QuadratureGrid::for_model(&model, 400, QuadRule::GaussLegendre).unwrap();
    let family = sigmoid_family();
    let shape = rate_sub_exponential(0.5, 1.0).unwrap(); // (log 2/(s^1))^2 shape
    let c = fit_weak_poincare_constant(&model, &grid, &shape, &family, &s_grid()).unwrap();
    println!("subexp(1/2) fitted constant: {c}");
    assert!(c.is_finite() && c > 0.0);
    let beta = rate_sub_exponential(0.5, c).unwrap();
    let report = check_weak_poincare(&model, &grid, &beta, &family, &s_grid()).unwrap();
    println!("subexp(1/2) worst deficit: {}", report.worst_deficit);
    assert!(report.worst_deficit <= 0.0);
}

#[test]
fn large_s_values_need_no_energy_term() {
    // Var <= Osc^2 / 4, so s >= 1/4 makes the deficit nonpositive for beta = 0.
    let model = single_site(SelfPotential::kappa_concave(2.0).unwrap());
    let grid = QuadratureGrid::for_model(&model, 300, QuadRule::GaussLegendre).unwrap();
    let family = sigmoid_family();
    let report = check_weak_poincare(
        &model,
        &grid,
        &RateFunction::Constant(0.0),
        &family,
        &[0.25, 0.5, 1.0],
    )
    .unwrap();
    assert!(report.worst_deficit <= 0.0, "deficit {}", report.worst_deficit);
}

fn interacting_chain(potential: SelfPotential, half: i64, t: f64) -> ModelSpec {
    ModelSpec::new(
        potential,
        InteractionSpec::new(InteractionKind::Lorentz, 1, t).unwrap(),
        Arc::new(Region::cube(1, half).unwrap()),
        BoundaryCondition::Zero,
    )
    .unwrap()
}

#[test]
fn dlr_residual_identity_region() {
    // Lambda = Delta: conditioning is the identity and the residual vanishes
    // to rounding.
    let model = interacting_chain(SelfPotential::sub_exponential(0.5).unwrap(), 1, 2.0);
    let grid = QuadratureGrid::for_model(&model, 60, QuadRule::GaussLegendre).unwrap();
    let f = LocalObservable::tanh_site(Site::from(0), 1.0).unwrap();
    let residual = check_dlr(&model, model.region().clone(), &f, &grid).unwrap();
    println!("identity DLR residual: {residual:.3e}");
    assert!(residual < 1e-12);
}

#[test]
fn dlr_residual_product_measure() {
    let model = ModelSpec::new(
        SelfPotential::sub_exponential(0.5).unwrap(),
        InteractionSpec::new(InteractionKind::Zero, 1, 1.0).unwrap(),
        Arc::new(Region::cube(1, 1).unwrap()),
        BoundaryCondition::Zero,
    )
    .unwrap();
    let grid = QuadratureGrid::for_model(&model, 100, QuadRule::GaussLegendre).unwrap();
    let inner = Arc::new(Region::cube(1, 0).unwrap());
    let f = LocalObservable::tanh_site(Site::from(0), 1.0).unwrap();
    let residual = check_dlr(&model, inner, &f, &grid).unwrap();
    println!("product DLR residual: {residual:.3e}");
    assert!(residual < 1e-10);
}

#[test]
fn dlr_residual_interacting_center_site() {
    let model = interacting_chain(SelfPotential::sub_exponential(0.5).unwrap(), 1, 2.0);
    let grid = QuadratureGrid::for_model(&model, 200, QuadRule::GaussLegendre).unwrap();
    let inner = Arc::new(Region::cube(1, 0).unwrap());
    let f = LocalObservable::tanh_site(Site::from(0), 1.0).unwrap();
    let residual = check_dlr(&model, inner, &f, &grid).unwrap();
    println!("interacting DLR residual at n=200: {residual:.3e}");
    assert!(residual <= 1e-6, "residual {residual}");
}

#[test]
fn quasi_factorization_product_and_constant_cases() {
    // W = 0 and f measurable w.r.t. one block: exact factorisation, ratio <= 1.
    let model = ModelSpec::new(
        SelfPotential::kappa_concave(2.0).unwrap(),
        InteractionSpec::new(InteractionKind::Zero, 1, 1.0).unwrap(),
        Arc::new(Region::cube(1, 1).unwrap()),
        BoundaryCondition::Zero,
    )
    .unwrap();
    let grid = QuadratureGrid::for_model(&model, 120, QuadRule::GaussLegendre).unwrap();
    let part1 = Arc::new(Region::rectangle(1, [-1, 0, 0], [0, 0, 0]).unwrap());
    let part2 = Arc::new(Region::rectangle(1, [0, 0, 0], [1, 0, 0]).unwrap());
    // f depends only on part1 \ part2 = {-1}
    let f = LocalObservable::tanh_site(Site::from(-1), 1.0).unwrap();
    let qf = check_quasi_factorization(&model, part1.clone(), part2.clone(), &f, &grid).unwrap();
    println!("product-case ratio: {} (lhs {}, rhs {})", qf.ratio, qf.lhs, qf.rhs);
    assert!(qf.ratio <= 1.0 + 1e-9);

    // constant observable: both sides vanish
    let c = LocalObservable::new("const", vec![Site::from(0)], 1.0, 0.0, |_| 0.7, |_, _| 0.0);
    let qf = check_quasi_factorization(&model, part1, part2, &c, &grid).unwrap();
    assert_eq!(qf.lhs, 0.0);
    assert_eq!(qf.rhs, 0.0);
}

#[test]
fn quasi_factorization_ratio_tempers_with_temperature() {
    let parts = (
        Arc::new(Region::rectangle(1, [-1, 0, 0], [0, 0, 0]).unwrap()),
        Arc::new(Region::rectangle(1, [0, 0, 0], [1, 0, 0]).unwrap()),
    );
    let mut worst_by_t = Vec::new();
    for &t in &[2.0, 5.0, 10.0] {
        let model = interacting_chain(SelfPotential::kappa_concave(2.0).unwrap(), 1, t);
        let grid = QuadratureGrid::new(1000.0, 160, QuadRule::GaussLegendre, 1e-3).unwrap();
        let mut worst = 0.0f64;
        for site in [-1i64, 0, 1] {
            let f = LocalObservable::tanh_site(Site::from(site), 1.0).unwrap();
            let qf =
                check_quasi_factorization(&model, parts.0.clone(), parts.1.clone(), &f, &grid)
                    .unwrap();
            println!("T={t} f=tanh(s{site}): ratio {}", qf.ratio);
            worst = worst.max(qf.ratio);
        }
        worst_by_t.push(worst);
    }
    println!("worst ratios by T: {worst_by_t:?}");
    assert!(worst_by_t.iter().all(|r| *r <= 1.5));
    // weaker coupling pushes the ratio down toward exact factorisation at 1
    assert!(worst_by_t[0] >= worst_by_t[1] && worst_by_t[1] >= worst_by_t[2]);
    assert!(worst_by_t.iter().all(|r| *r >= 1.0 - 1e-9));
}

#[test]
fn tensorized_rate_function_passes_on_the_product_model() {
    // Two independent sites: the one-site rate function dilated by the site
    // count must pass the oracle check over two-site observables.
    let single = single_site(SelfPotential::kappa_concave(2.0).unwrap());
    let grid = QuadratureGrid::for_model(&single, 300, QuadRule::GaussLegendre).unwrap();
    let family_1 = sigmoid_family();
    let shape = rate_kappa_concave(2.0, 1.0).unwrap();
    let c = fit_weak_poincare_constant(&single, &grid, &shape, &family_1, &s_grid()).unwrap();
    let beta_1 = rate_kappa_concave(2.0, c).unwrap();

    let product = ModelSpec::new(
        SelfPotential::kappa_concave(2.0).unwrap(),
        InteractionSpec::new(InteractionKind::Zero, 1, 1.0).unwrap(),
        Arc::new(Region::rectangle(1, [0, 0, 0], [1, 0, 0]).unwrap()),
        BoundaryCondition::Zero,
    )
    .unwrap();
    let mut family_2: Vec<LocalObservable> = Vec::new();
    for site in [0i64, 1] {
        for scale in [1.0, 4.0] {
            family_2.push(LocalObservable::tanh_site(Site::from(site), scale).unwrap());
        }
    }
    family_2.push(LocalObservable::tanh_pair(Site::from(0), Site::from(1)).unwrap());
    let beta_2 = gdl_core::rates::tensorize(beta_1, 2).unwrap();
    let report = check_weak_poincare(&product, &grid, &beta_2, &family_2, &s_grid()).unwrap();
    println!("tensorized deficit on the product model: {}", report.worst_deficit);
    assert!(report.worst_deficit <= 0.0, "deficit {}", report.worst_deficit);
}

#[test]
fn perturbed_rate_functions_pass_on_interacting_models() {
    // Crude perturbation and the bisection-improved construction, with the
    // base constant fitted on the oracle, must certify the inequality on a
    // genuinely interacting chain of three sites.
    let model = interacting_chain(SelfPotential::kappa_concave(2.0).unwrap(), 1, 2.0);
    let grid = QuadratureGrid::new(1000.0, 160, QuadRule::GaussLegendre, 1e-3).unwrap();
    let mut family: Vec<LocalObservable> = Vec::new();
    for site in [-1i64, 0, 1] {
        family.push(LocalObservable::tanh_site(Site::from(site), 1.0).unwrap());
        family.push(LocalObservable::tanh_site(Site::from(site), 4.0).unwrap());
    }
    family.push(LocalObservable::tanh_pair(Site::from(-1), Site::from(1)).unwrap());

    // crude route: shape beta(s) = crude(volume 3) of the one-site form
    let crude_shape = gdl_core::rates::perturb_crude(
        rate_kappa_concave(2.0, 1.0).unwrap(),
        3,
        1.0,
    )
    .unwrap();
    let c_crude =
        fit_weak_poincare_constant(&model, &grid, &crude_shape, &family, &s_grid()).unwrap();
    assert!(c_crude.is_finite() && c_crude > 0.0);
    let beta_crude = gdl_core::rates::scale(crude_shape, c_crude).unwrap();
    let report = check_weak_poincare(&model, &grid, &beta_crude, &family, &s_grid()).unwrap();
    assert!(report.worst_deficit <= 0.0);

    // bisection route for the cube [-1, 1]
    let bisection_shape = gdl_core::rates::perturb_bisection(
        rate_kappa_concave(2.0, 1.0).unwrap(),
        1,
        1,
        0.5,
        &gdl_core::ConstantsRegistry::default(),
    )
    .unwrap();
    let c_bis =
        fit_weak_poincare_constant(&model, &grid, &bisection_shape, &family, &s_grid()).unwrap();
    assert!(c_bis.is_finite() && c_bis > 0.0);
    let beta_bis = gdl_core::rates::scale(bisection_shape, c_bis).unwrap();
    let report = check_weak_poincare(&model, &grid, &beta_bis, &family, &s_grid()).unwrap();
    println!("bisection route fitted constant {c_bis:.4}, deficit {}", report.worst_deficit);
    assert!(report.worst_deficit <= 0.0);
}

#[test]
fn deficit_is_monotone_in_the_constant() {
    // enables the bisection fit: a larger constant can only help
    let model = single_site(SelfPotential::kappa_concave(2.0).unwrap());
    let grid = QuadratureGrid::for_model(&model, 200, QuadRule::GaussLegendre).unwrap();
    let family = sigmoid_family();
    let grid_s = s_grid();
    let mut prev = f64::INFINITY;
    for c in [0.001, 0.01, 0.05, 0.2, 1.0, 5.0] {
        let beta = rate_kappa_concave(2.0, c).unwrap();
        let report = check_weak_poincare(&model, &grid, &beta, &family, &grid_s).unwrap();
        assert!(report.worst_deficit <= prev, "deficit must not increase with c");
        prev = report.worst_deficit;
    }
}

#[test]
fn two_dimensional_pair_keeps_dlr_exact() {
    // Two adjacent sites on the 2D lattice: exercises the planar stencil and
    // shell inside the oracle. The conditional-consistency identity must
    // stay exact to rounding.
    let region = Arc::new(Region::from_sites(
        2,
        [Site::new(&[0, 0]), Site::new(&[0, 1])],
    ).unwrap());
    let model = ModelSpec::new(
        SelfPotential::sub_exponential(0.5).unwrap(),
        InteractionSpec::new(InteractionKind::Lorentz, 1, 2.0).unwrap(),
        region,
        BoundaryCondition::Constant { value: 0.2 },
    )
    .unwrap();
    // in d=2 each site has 4 neighbours: 1 internal + 3 boundary each
    assert_eq!(model.ordered_neighbor_pairs(), 8);
    let grid = QuadratureGrid::for_model(&model, 120, QuadRule::GaussLegendre).unwrap();
    let inner = Arc::new(Region::from_sites(2, [Site::new(&[0, 0])]).unwrap());
    let f = LocalObservable::tanh_site(Site::new(&[0, 0]), 1.0).unwrap();
    let residual = check_dlr(&model, inner, &f, &grid).unwrap();
    println!("2D pair DLR residual: {residual:.3e}");
    assert!(residual < 1e-12);

    // and the variance splits exactly under the law of total variance:
    // Var(f) = E Var(f | s1) + Var(E[f | s1]) >= E Var(f | s1)
    let part1 = Arc::new(Region::from_sites(2, [Site::new(&[0, 0])]).unwrap());
    let part2 = Arc::new(Region::from_sites(2, [Site::new(&[0, 1])]).unwrap());
    // a non-covering pair is rejected
    let qf = check_quasi_factorization(&model, part2.clone(), part2.clone(), &f, &grid);
    assert!(qf.is_err());
    let qf = check_quasi_factorization(&model, part1, part2, &f, &grid).unwrap();
    assert!(qf.ratio >= 1.0 - 1e-9, "total-variance direction: {}", qf.ratio);
}

#[test]
fn oracle_matches_metropolis_moments() {
    use gdl_core::dynamics::{sample_equilibrium, SimulationParams};
    let model = single_site(SelfPotential::kappa_concave(3.0).unwrap());
    let grid = QuadratureGrid::for_model(&model, 400, QuadRule::GaussLegendre).unwrap();
    let f = LocalObservable::tanh_site(Site::from(0), 1.0).unwrap();
    let exact = quad_expectation(&model, &grid, |c| f.evaluate(c).powi(2)).unwrap();

    let mut params = SimulationParams::test_default(314);
    params.thinning = 10;
    let n = 20_000;
    let sample = sample_equilibrium(&model, n, &params).unwrap();
    let vals: Vec<f64> = sample.configurations.iter().map(|c| f.evaluate(c).powi(2)).collect();
    let mc = gdl_core::stats::mean(&vals);
    let se = gdl_core::stats::standard_error(&vals);
    println!("oracle {exact:.6} vs MC {mc:.6} +- {se:.6}");
    assert!((mc - exact).abs() < 4.0 * se, "oracle {exact} vs MC {mc} (se {se})");
}
