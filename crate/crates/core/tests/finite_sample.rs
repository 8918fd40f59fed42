use glm_pss::finite::{rescale_beta_to_f2, simulate_power, EmpiricalDesign};
use glm_pss::pss::power;
use glm_pss::random::RngStream;
use glm_pss::FamilyLink;

fn two_point(beta: f64) -> EmpiricalDesign {
    EmpiricalDesign::new(
        FamilyLink::logistic(),
        vec![vec![0.0], vec![1.0]],
        vec![vec![1.0], vec![1.0]],
        vec![beta],
        vec![0.0],
    )
    .unwrap()
}

fn covariate_design(beta: f64) -> EmpiricalDesign {
    let mut rng = RngStream::new(3, 0);
    let mut x = Vec::new();
    let mut z = Vec::new();
    for _ in 0..200 {
        let xi = rng.standard_normal();
        x.push(vec![xi, (rng.uniform() < 0.4) as u8 as f64]);
        z.push(vec![1.0, 0.3 * xi + rng.standard_normal()]);
    }
    EmpiricalDesign::new(FamilyLink::logistic(), x, z, vec![beta, -beta], vec![-0.3, 0.4]).unwrap()
}

#[test]
fn null_design_has_nominal_size() {
    let alpha = 0.05;
    let sim = simulate_power(&covariate_design(0.0), 500, 2000, alpha, 1).unwrap();
    let tol = 3.0 * (alpha * (1.0 - alpha) / 2000.0).sqrt();
    assert!((sim.rejection_rate - alpha).abs() <= tol, "{sim:?}");
}

#[test]
fn two_point_design_reaches_asymptotic_power() {
    let d = two_point(1.0);
    let delta = rescale_beta_to_f2(&d, 0.02).unwrap();
    let d = d.with_scaled_beta(delta).unwrap();
    let sim = simulate_power(&d, 393, 2000, 0.05, 2).unwrap();
    let asymptotic = power(393, 0.02, 1, 0.05).unwrap();
    assert!((sim.rejection_rate - asymptotic).abs() <= 0.03, "{sim:?} vs {asymptotic}");
    assert!((asymptotic - 0.80).abs() < 0.01);
}

#[test]
fn power_grows_with_sample_size() {
    let d = covariate_design(0.15);
    let small = simulate_power(&d, 200, 1000, 0.05, 4).unwrap();
    let large = simulate_power(&d, 800, 1000, 0.05, 4).unwrap();
    assert!(
        large.rejection_rate > small.rejection_rate + 3.0 * (small.mc_stderr + large.mc_stderr),
        "{small:?} {large:?}"
    );
}

#[test]
fn row_order_does_not_change_power_beyond_noise() {
    let d = covariate_design(0.12);
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.reverse();
    order.swap(3, 150);
    let shuffled = d.permuted(&order).unwrap();
    let a = simulate_power(&d, 400, 2000, 0.05, 9).unwrap();
    let b = simulate_power(&shuffled, 400, 2000, 0.05, 9).unwrap();
    let se = (a.mc_stderr.powi(2) + b.mc_stderr.powi(2)).sqrt();
    assert!((a.rejection_rate - b.rejection_rate).abs() <= 4.0 * se, "{a:?} {b:?}");
    assert_eq!(d.effect_sizes().unwrap().f2, d.effect_sizes().unwrap().f2);
    assert!((shuffled.f2().unwrap() - d.f2().unwrap()).abs() < 1e-14);
}

#[test]
fn information_route_matches_projection_route() {
    let d = covariate_design(0.4);
    assert!((d.f2().unwrap() - d.f2_from_information().unwrap()).abs() < 1e-12);
}
