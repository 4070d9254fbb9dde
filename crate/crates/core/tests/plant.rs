use std::sync::Arc;
use taud::plant::*;
use std::f64::consts::FRAC_PI_2;

fn noiseless_unicycle() -> PlantModel {
    PlantModel::unicycle().with_noise_gain(vec![0.0; 9]).unwrap()
}

#[test]
fn unicycle_forward_and_turned() {
    let m = noiseless_unicycle();
    let mut rng = RngStream::new(1);
    assert_eq!(m.step(&[0.0, 0.0, 0.0], &[1.0, 0.0], &mut rng).unwrap(), vec![0.1, 0.0, 0.0]);
    let x = m.step(&[0.0, 0.0, FRAC_PI_2], &[1.0, 0.0], &mut rng).unwrap();
    assert!(x[0].abs() < 1e-17);
    assert_eq!(x[1], 0.1);
    assert_eq!(x[2], FRAC_PI_2);
}

#[test]
fn identity_plant_zero_input_is_fixed_point() {
    let m = PlantModel::new(
        Arc::new(Linear::identity(2, 1)),
        vec![0.0; 4],
        vec![0.0; 2],
        vec![1.0; 2],
        vec![-1.0],
        vec![1.0],
    )
    .unwrap();
    let mut rng = RngStream::new(3);
    assert_eq!(m.step(&[0.25, -4.0], &[0.0], &mut rng).unwrap(), vec![0.25, -4.0]);
}

#[test]
fn inputs_are_clamped() {
    let m = noiseless_unicycle();
    let mut rng = RngStream::new(1);
    assert_eq!(m.step(&[0.0, 0.0, 0.0], &[7.0, 0.0], &mut rng).unwrap(), vec![0.1, 0.0, 0.0]);
}

#[test]
fn robot_initial_box() {
    let m = PlantModel::unicycle();
    let mut rng = RngStream::new(11);
    for _ in 0..1000 {
        let x = m.sample_initial(&mut rng);
        assert!((0.0..=2.5).contains(&x[0]));
        assert!((0.0..=2.5).contains(&x[1]));
        assert!((-FRAC_PI_2..=FRAC_PI_2).contains(&x[2]));
    }
}

#[test]
fn degenerate_initial_box() {
    let v = vec![1.5, -2.0, 0.25];
    let m = PlantModel::new(
        Arc::new(Unicycle::default()),
        identity(3, 0.01),
        v.clone(),
        v.clone(),
        vec![-1.0; 2],
        vec![1.0; 2],
    )
    .unwrap();
    assert_eq!(m.sample_initial(&mut RngStream::new(0)), v);
}

#[test]
fn initial_mean_near_center() {
    let m = PlantModel::unicycle();
    let mut rng = RngStream::new(5);
    let n = 100_000;
    let mut sum = [0.0; 3];
    for _ in 0..n {
        let x = m.sample_initial(&mut rng);
        for i in 0..3 {
            sum[i] += x[i];
        }
    }
    for i in 0..3 {
        let (lo, hi) = (m.init_low()[i], m.init_high()[i]);
        let center = 0.5 * (lo + hi);
        let se = (hi - lo) / 12f64.sqrt() / (n as f64).sqrt();
        assert!((sum[i] / n as f64 - center).abs() < 3.0 * se, "coordinate {i}");
    }
}

#[test]
fn noise_covariance_matches_gain() {
    let sigma = 0.05;
    let m = PlantModel::unicycle().with_noise_gain(identity(3, sigma)).unwrap();
    let mut rng = RngStream::new(9);
    let x = [0.3, 0.7, 0.2];
    let u = [0.5, -0.5];
    let f = m.dynamics().apply(&x, &u);
    let n = 100_000;
    let mut cov = [[0.0; 3]; 3];
    for _ in 0..n {
        let y = m.step(&x, &u, &mut rng).unwrap();
        let e: Vec<f64> = y.iter().zip(&f).map(|(a, b)| a - b).collect();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += e[i] * e[j] / n as f64;
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let expected = if i == j { sigma * sigma } else { 0.0 };
            assert!((cov[i][j] - expected).abs() < 0.05 * sigma * sigma, "({i},{j}) = {}", cov[i][j]);
        }
    }
}

#[test]
fn same_seed_same_trajectory() {
    let m = PlantModel::unicycle();
    let run = |seed| {
        let mut rng = RngStream::new(seed);
        let mut x = m.sample_initial(&mut rng);
        for k in 0..50 {
            x = m.step(&x, &[0.5, (k as f64 * 0.1).sin()], &mut rng).unwrap();
        }
        x
    };
    assert_eq!(run(4), run(4));
    assert_ne!(run(4), run(5));
}

#[test]
fn rejects_bad_models() {
    let singular = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    assert_eq!(
        PlantModel::unicycle().with_noise_gain(singular).unwrap_err(),
        PlantError::SingularNoiseGain
    );
    let m = PlantModel::unicycle();
    assert!(matches!(
        m.step(&[0.0, 0.0], &[0.0, 0.0], &mut RngStream::new(0)),
        Err(PlantError::Dimension { .. })
    ));
    assert!(matches!(
        PlantModel::new(
            Arc::new(DoubleIntegrator::default()),
            identity(2, 0.01),
            vec![1.0, 0.0],
            vec![0.0, 0.0],
            vec![-1.0],
            vec![1.0],
        ),
        Err(PlantError::InvertedBox { what: "init", index: 0 })
    ));
}
