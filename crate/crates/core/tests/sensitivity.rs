use glm_pss::random::RngStream;
use glm_pss::sim::{average_ranks, lhs_sample, prcc, summarize, MeasureSummary};
use glm_pss::Error;

#[test]
fn lhs_marginals_are_uniform() {
    let mut rng = RngStream::new(1, 0);
    let s = lhs_sample(&[(0.0, 1.0), (0.0, 1.0)], 1000, &mut rng).unwrap();
    let mut bins = [0usize; 10];
    for row in &s {
        bins[(row[0] * 10.0) as usize] += 1;
    }
    let chi2: f64 = bins.iter().map(|&b| (b as f64 - 100.0).powi(2) / 100.0).sum();
    // 0.999 quantile of chi-square with 9 df
    assert!(chi2 < 27.877, "{chi2}");

    let r0 = average_ranks(&s.iter().map(|r| r[0]).collect::<Vec<_>>());
    let r1 = average_ranks(&s.iter().map(|r| r[1]).collect::<Vec<_>>());
    let m = 500.5;
    let num: f64 = r0.iter().zip(&r1).map(|(a, b)| (a - m) * (b - m)).sum();
    let den: f64 = r0.iter().map(|a| (a - m).powi(2)).sum();
    assert!((num / den).abs() < 0.1);
}

#[test]
fn prcc_detects_single_monotone_driver() {
    let mut rng = RngStream::new(2, 0);
    let params = lhs_sample(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], 1000, &mut rng).unwrap();
    let response: Vec<Option<f64>> =
        params.iter().map(|p| Some((3.0 * p[0]).exp() + 0.05 * rng.standard_normal())).collect();
    let p = prcc(&params, &response).unwrap();
    assert!(p.coefficients[0] > 0.95, "{p:?}");
    assert!(p.coefficients[1].abs() < 0.1 && p.coefficients[2].abs() < 0.1);
}

#[test]
fn prcc_of_noise_is_near_zero() {
    let mut rng = RngStream::new(3, 0);
    let params = lhs_sample(&[(0.0, 1.0), (0.0, 1.0)], 1000, &mut rng).unwrap();
    let response: Vec<Option<f64>> = (0..1000).map(|_| Some(rng.standard_normal())).collect();
    let p = prcc(&params, &response).unwrap();
    assert!(p.coefficients.iter().all(|c| c.abs() < 0.1));
}

#[test]
fn prcc_drops_undefined_rows_and_rejects_degenerate_ranks() {
    let mut rng = RngStream::new(4, 0);
    let params = lhs_sample(&[(0.0, 1.0), (0.0, 1.0)], 50, &mut rng).unwrap();
    let mut response: Vec<Option<f64>> = params.iter().map(|p| Some(p[0] + p[1])).collect();
    response[7] = None;
    response[9] = None;
    assert_eq!(prcc(&params, &response).unwrap().dropped, 2);

    let copies: Vec<Vec<f64>> = params.iter().map(|p| vec![p[0], p[0]]).collect();
    assert!(matches!(prcc(&copies, &response), Err(Error::Singular(_))));
}

#[test]
fn identical_responses_summarize_flat() {
    match summarize(&[Some(0.02); 10]) {
        MeasureSummary::Quantiles { min, median, max, .. } => assert!(min == median && median == max),
        other => panic!("{other:?}"),
    }
}
