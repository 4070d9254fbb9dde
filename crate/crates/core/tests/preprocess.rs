use taud::mdp::ExtendedState;
use taud::stl::{SubFormula, TemporalOp};
use taud::preprocess::*;
use taud::stl::{parse_spec, Inner, Predicate};

/// Trace whose scalar state is 0 at the listed indices and 1 elsewhere;
/// the body `x0 <= 0.5` holds exactly at those indices.
fn marked(len: usize, holds: &[usize]) -> Vec<Vec<f64>> {
    (0..len).map(|i| vec![if holds.contains(&i) { 0.0 } else { 1.0 }]).collect()
}

fn sub(op: TemporalOp, a: usize, b: usize) -> SubFormula {
    SubFormula::new(op, a, b, Inner::Pred(Predicate::upper(1, 0, 0.5))).unwrap()
}

#[test]
fn finally_flag_latest_instant() {
    assert_eq!(flag_value(&marked(5, &[1, 3]), &sub(TemporalOp::Finally, 0, 4)).unwrap(), 0.8);
}

#[test]
fn globally_flag_suffix() {
    assert_eq!(flag_value(&marked(5, &[2, 3, 4]), &sub(TemporalOp::Globally, 0, 4)).unwrap(), 0.6);
    // a gap before te breaks the suffix
    assert_eq!(flag_value(&marked(5, &[0, 1, 2, 4]), &sub(TemporalOp::Globally, 0, 4)).unwrap(), 0.2);
    assert_eq!(
        flag_value(&marked(5, &[0, 1, 2, 3]), &sub(TemporalOp::Globally, 0, 4)).unwrap(),
        f64::NEG_INFINITY
    );
}

#[test]
fn nowhere_is_neg_infinity() {
    for op in [TemporalOp::Globally, TemporalOp::Finally] {
        assert_eq!(flag_value(&marked(5, &[]), &sub(op, 1, 3)).unwrap(), f64::NEG_INFINITY);
    }
}

#[test]
fn window_too_short() {
    assert!(matches!(
        flag_value(&marked(3, &[0]), &sub(TemporalOp::Finally, 0, 3)),
        Err(PreprocessError::WindowTooShort { len: 3, t_end: 3 })
    ));
}

#[test]
fn transform_values() {
    assert!((transform_flag(0.8) - 0.3).abs() < 1e-15);
    assert_eq!(transform_flag(1.0), 0.5);
    assert_eq!(transform_flag(f64::NEG_INFINITY), -0.5);
}

#[test]
fn single_instant_state() {
    let z = ExtendedState::init(&[0.2], 1, 0, 1);
    let s = SubFormula::new(TemporalOp::Finally, 0, 0, Inner::Pred(Predicate::upper(1, 0, 0.3))).unwrap();
    let p = preprocess_state(&z, &[s]).unwrap();
    assert_eq!(p.flatten(), vec![0.2, 0.5]);
}

#[test]
fn history_passes_through() {
    let z = ExtendedState::from_parts(vec![vec![0.0]; 2], vec![vec![1.0, 2.0], vec![3.0, 4.0]], 2).unwrap();
    let p = preprocess_state(&z, &[sub(TemporalOp::Finally, 0, 1)]).unwrap();
    assert_eq!(p.history, z.history());
    assert_eq!(&p.flatten()[2..], &[1.0, 2.0, 3.0, 4.0]);
    assert!(matches!(preprocess_state(&z, &[]), Err(PreprocessError::NoSubFormulas)));
}

#[test]
fn robot_dimension_law() {
    let spec = parse_spec(taud::ROBOT_TASK, 3).unwrap();
    let z = ExtendedState::init(&[0.0; 3], spec.tau(), 10, 2);
    let p = preprocess_state(&z, spec.subs()).unwrap();
    assert_eq!(p.flat_len(), 25);
    assert_eq!(p.flatten().len(), preprocessed_dim(3, 2, 10, 2));
}
