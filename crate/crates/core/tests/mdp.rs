use taud::ncs::DelayConfig;
use taud::stl::{Phi, TemporalOp};
use taud::mdp::*;
use taud::stl::{parse_spec, Inner, Predicate, SubFormula};

fn phi_le(c: f64, t_end: usize) -> Phi {
    Phi::single(
        SubFormula::new(TemporalOp::Finally, 0, t_end, Inner::Pred(Predicate::upper(1, 0, c))).unwrap(),
    )
}

#[test]
fn init_fills_window_and_zero_history() {
    let z = ExtendedState::init(&[1.0, 2.0, 3.0], 3, 2, 2);
    assert_eq!(z.window(), vec![vec![1.0, 2.0, 3.0]; 3].as_slice());
    assert_eq!(z.history(), vec![vec![0.0, 0.0]; 2].as_slice());
    let z = ExtendedState::init(&[4.0], 1, 0, 2);
    assert_eq!(z.window(), &[vec![4.0]][..]);
    assert!(z.history().is_empty());
}

#[test]
fn advance_shifts() {
    let z = ExtendedState::from_parts(vec![vec![1.0], vec![2.0], vec![3.0]], vec![vec![10.0], vec![20.0]], 1)
        .unwrap();
    let z2 = z.advance(&[4.0], &[30.0]).unwrap();
    assert_eq!(z2.window(), &[vec![2.0], vec![3.0], vec![4.0]][..]);
    assert_eq!(z2.history(), &[vec![20.0], vec![30.0]][..]);
    let single = ExtendedState::init(&[0.0], 1, 0, 1).advance(&[9.0], &[1.0]).unwrap();
    assert_eq!(single.window(), &[vec![9.0]][..]);
    assert!(matches!(z.advance(&[1.0, 2.0], &[0.0]), Err(MdpError::Dimension { .. })));
}

#[test]
fn window_forgets_initial_state() {
    let mut z = ExtendedState::init(&[-1.0], 4, 1, 1);
    for i in 0..4 {
        z = z.advance(&[i as f64], &[0.0]).unwrap();
    }
    assert!(z.window().iter().all(|x| x[0] != -1.0));
}

#[test]
fn reward_levels() {
    let g = RewardParams::new(100.0, TemporalOp::Globally).unwrap();
    let phi = phi_le(0.0, 0);
    let z = ExtendedState::init(&[0.1], 1, 0, 1);
    assert_eq!(reward(&z, &phi, &g).unwrap(), -1.0);
    let z = ExtendedState::init(&[0.0], 1, 0, 1);
    let r = reward(&z, &phi, &g).unwrap();
    assert_eq!(r, -(-100f64).exp());
    assert!((r + 3.720075976020836e-44).abs() < 1e-57);

    let f = RewardParams::new(2.0, TemporalOp::Finally).unwrap();
    let z = ExtendedState::init(&[-0.3], 1, 0, 1);
    assert!((reward(&z, &phi, &f).unwrap() - 7.38905609893065).abs() < 1e-12);
}

#[test]
fn reward_checks_window() {
    let g = RewardParams::new(1.0, TemporalOp::Globally).unwrap();
    let z = ExtendedState::init(&[0.0], 2, 0, 1);
    assert!(matches!(reward(&z, &phi_le(0.0, 0), &g), Err(MdpError::WindowLength { .. })));
    assert!(RewardParams::new(0.0, TemporalOp::Globally).is_err());
}

#[test]
fn robot_dimension_law() {
    let spec = parse_spec(taud::ROBOT_TASK, 3).unwrap();
    let z = ExtendedState::init(&[0.0; 3], spec.tau(), 10, 2);
    assert_eq!(z.flat_len(), 320);
    assert_eq!(z.flatten().len(), 320);
}

#[test]
fn applied_input_indexing() {
    let z = ExtendedState::from_parts(vec![vec![0.0]], vec![vec![1.0], vec![2.0], vec![3.0]], 1).unwrap();
    let a = [4.0];
    let pick = |sc, ca| z.applied_input(&a, &DelayConfig::new(sc, ca, 1, 2).unwrap())[0];
    assert_eq!(pick(0, 0), 4.0);
    assert_eq!(pick(1, 0), 3.0);
    assert_eq!(pick(1, 1), 2.0);
    assert_eq!(pick(1, 2), 1.0);
}
