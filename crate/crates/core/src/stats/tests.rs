use super::*;
use crate::rng::stream;
use alloc::vec::Vec;
use proptest::prelude::*;
use rand_distr::{Distribution, Exp1, StandardNormal};

fn normals(m: usize, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed);
    (0..m).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); sd * z }).collect::<Vec<f64>>()
}

#[test]
fn variance_test_accepts_truth_and_rejects_double() {
    let xs = normals(4000, 1.5, 1);
    assert!(variance_test(&xs, 2.25).unwrap().passed());
    assert!(!variance_test(&xs, 4.5).unwrap().accepted);
    let control = variance_test(&xs, 4.5).unwrap().as_negative_control();
    assert!(control.passed());
}

#[test]
fn variance_test_of_zero_samples_against_zero_is_exact() {
    let report = variance_test(&vec![0.0; 300], 0.0).unwrap();
    assert!(report.accepted);
    assert_eq!(report.metadata["z"], "0");
}

#[test]
fn too_few_replicas_is_a_precondition() {
    assert!(matches!(variance_test(&[1.0; 10], 1.0), Err(Error::Precondition(_))));
    assert!(matches!(kurtosis_test(&[1.0; 100], KurtosisMode::GaussianLimit), Err(Error::Precondition(_))));
}

#[test]
fn variance_z_is_calibrated() {
    // Over many independent replications |z| <= 3 should fail rarely.
    let rejections = (0..200)
        .filter(|s| !variance_test(&normals(400, 1.0, 100 + s), 1.0).unwrap().accepted)
        .count();
    assert!(rejections <= 5, "{rejections}");
}

#[test]
fn ecf_test_accepts_gaussian_and_rejects_wrong_scale() {
    let xs = normals(3000, 2.0, 2);
    let truth = |t: f64| ((-2.0 * t * t).exp(), 0.0);
    assert!(ecf_test(&xs, truth, 9).unwrap().accepted);
    let wrong = |t: f64| ((-0.5 * 4.0 * 1.5 * t * t).exp(), 0.0);
    assert!(!ecf_test(&xs, wrong, 9).unwrap().accepted);
}

#[test]
fn ecf_test_distinguishes_laplace_from_gaussian() {
    let mut rng = stream(3);
    let xs: Vec<f64> = (0..5000)
        .map(|_| {
            let e: f64 = Exp1.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            (2.0 * e).sqrt() * z
        })
        .collect();
    let laplace = |t: f64| (1.0 / (1.0 + t * t), 0.0);
    let gauss = |t: f64| ((-t * t).exp(), 0.0);
    assert!(ecf_test(&xs, laplace, 4).unwrap().accepted);
    assert!(!ecf_test(&xs, gauss, 4).unwrap().accepted);
}

#[test]
fn normality_test_matches_scale() {
    let xs = normals(2000, 1.0, 5);
    assert!(normality_test(&xs, 1.0).unwrap().accepted);
    assert!(!normality_test(&xs, 2.0).unwrap().accepted);
}

#[test]
fn kurtosis_modes() {
    let xs = normals(5000, 1.0, 6);
    assert!(kurtosis_test(&xs, KurtosisMode::GaussianLimit).unwrap().accepted);
    let mut rng = stream(7);
    // Student-like scale mixture with excess kurtosis 3 Var(V) / E[V]^2 = 0.75 for V uniform on [0.5, 1.5]... times 4.
    let mixed: Vec<f64> = (0..20000)
        .map(|_| {
            let v: f64 = 0.5 + rand::Rng::random::<f64>(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            v.sqrt() * z
        })
        .collect();
    let target = 3.0 * (1.0 / 12.0);
    let report = kurtosis_test(&mixed, KurtosisMode::MixtureLimit { target, target_se: 0.0 }).unwrap();
    assert!(report.accepted, "{report:?}");
    assert!(!kurtosis_test(&mixed, KurtosisMode::GaussianLimit).unwrap().accepted);
}

#[test]
fn brownian_moment_scaling_has_slope_one() {
    let mut rng = stream(8);
    let step = 1.0 / 64.0;
    let paths: Vec<Vec<f64>> = (0..400)
        .map(|_| {
            let mut x = 0.0;
            let mut path = vec![0.0];
            for _ in 0..64 {
                let z: f64 = StandardNormal.sample(&mut rng);
                x += step.sqrt() * z;
                path.push(x);
            }
            path
        })
        .collect();
    let sample = GridSample { step, trajectories: &paths };
    let report = moment_scaling_test(&sample, 2.0, 1.0).unwrap();
    assert!(report.accepted);
    assert!((report.statistic - 1.0).abs() < 0.1, "{}", report.statistic);
    assert!(!moment_scaling_test(&sample, 2.0, 1.5).unwrap().accepted);
    let coarse = GridSample { step: 1.0 / 16.0, trajectories: &paths };
    assert!(matches!(moment_scaling_test(&coarse, 2.0, 1.0), Err(Error::Precondition(_))));
}

#[test]
fn probe_reads_increments() {
    let probe = FiniteDimProbe::new(vec![0.5, 1.0], vec![1.0, 0.5]).unwrap();
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let values = [0.0, 1.0, 2.0, 3.0, 5.0];
    assert_eq!(probe.evaluate(&grid, &values).unwrap(), 2.0 + 0.5 * 3.0);
    assert_eq!(probe.windows(), vec![(0.0, 0.5), (0.5, 1.0)]);
    assert!(FiniteDimProbe::new(vec![0.5, 0.5], vec![1.0, 1.0]).is_err());
    assert!(FiniteDimProbe::new(vec![0.3], vec![1.0]).unwrap().evaluate(&grid, &values).is_err());
}

#[test]
fn overlapping_windows_are_rejected() {
    assert!(check_disjoint((0.0, 0.5), (0.5, 1.0)).is_ok());
    assert!(matches!(check_disjoint((0.0, 0.5), (0.0, 0.5)), Err(Error::Precondition(_))));
}

#[test]
fn cross_term_and_concentration_ladders() {
    let ladder: Vec<Rung> = [(1.0, 0.5), (2.0, 0.1), (3.0, 0.0)]
        .iter()
        .enumerate()
        .map(|(i, &(n, shift))| Rung { n, samples: normals(2000, 1.0 / (i + 1) as f64, 20 + i as u64).iter().map(|x| x * 0.05 + shift).collect() })
        .collect();
    assert!(cross_term_test(2, &ladder).unwrap().accepted);
    assert!(cross_term_test(2, &ladder).unwrap().metadata.contains_key("mean_times_ln_n"));
    let conc: Vec<Rung> = (0..3)
        .map(|i| Rung { n: i as f64, samples: normals(500, 1.0 / (i + 1) as f64, 40 + i).iter().map(|x| 10.0 + x).collect() })
        .collect();
    assert!(concentration_test(2, &conc).unwrap().accepted);
    assert!(matches!(concentration_test(1, &conc), Err(Error::InvalidMode { .. })));
}

#[test]
fn chi_square_survival_values() {
    // chi^2 with 2 degrees of freedom has survival exp(-x/2).
    assert!((gamma_q(1.0, 1.5) - (-1.5f64).exp()).abs() < 1e-13);
    assert!((gamma_q(1.0, 20.0) - (-20.0f64).exp()).abs() < 1e-15);
    // chi^2_1 at 3.841458820694124 is the 95% point.
    assert!((gamma_q(0.5, 3.841458820694124 / 2.0) - 0.05).abs() < 1e-12);
    assert!(uniformity_test(&[100.0, 98.0, 103.0, 99.0]).unwrap().accepted);
    assert!(!uniformity_test(&[100.0, 200.0, 100.0, 100.0]).unwrap().accepted);
}

#[test]
fn jackknife_of_mean_matches_standard_error() {
    let xs = normals(2000, 1.0, 11);
    let (m, se) = jackknife(&xs, 20, |v| v.iter().map(|x| **x).sum::<f64>() / v.len() as f64);
    assert!((m - mean(&xs)).abs() < 1e-14);
    let direct = (variance(&xs) / 2000.0).sqrt();
    assert!((se / direct - 1.0).abs() < 0.5, "{se} {direct}");
}

proptest! {
    #[test]
    fn passed_follows_expectation(accepted in any::<bool>(), negative in any::<bool>()) {
        let mut report = TestReport::new("t", 0.0, String::new(), accepted);
        if negative {
            report = report.as_negative_control();
        }
        prop_assert_eq!(report.passed(), accepted != negative);
    }

    #[test]
    fn variance_statistic_is_shift_invariant(shift in -100.0..100.0f64, seed in 0u64..1000) {
        let xs = normals(300, 1.0, seed);
        let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let a = variance_test(&xs, 1.0).unwrap();
        let b = variance_test(&shifted, 1.0).unwrap();
        prop_assert!((a.statistic - b.statistic).abs() < 1e-9);
    }

    #[test]
    fn gamma_q_is_a_survival_function(a in 0.5..20.0f64, x in 0.0..60.0f64) {
        let q = gamma_q(a, x);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&q));
        prop_assert!(gamma_q(a, x + 0.5) <= q + 1e-12);
    }
}
