use taud::stl::StlError;
use taud::stl::*;
use taud::stl::{PhiExpr, TemporalOp::*};

fn le(c: f64) -> Inner {
    Inner::Pred(Predicate::upper(1, 0, c))
}

fn sub(op: TemporalOp, a: usize, b: usize, body: Inner) -> SubFormula {
    SubFormula::new(op, a, b, body).unwrap()
}

#[test]
fn finally_and_globally_on_short_trace() {
    let tr = Trace::scalar(&[1.0, 2.0, 3.0]).unwrap();
    let f = sub(Finally, 0, 2, le(1.5));
    let g = sub(Globally, 0, 2, le(1.5));
    assert!(f.satisfies(&tr, 0).unwrap());
    assert!(!g.satisfies(&tr, 0).unwrap());
    assert_eq!(f.robustness(&tr, 0).unwrap(), 0.5);
    assert_eq!(g.robustness(&tr, 0).unwrap(), -1.5);
}

#[test]
fn boundary_margin_is_zero_and_satisfied() {
    let tr = Trace::scalar(&[0.7]).unwrap();
    let p = Predicate::upper(1, 0, 0.7);
    assert_eq!(p.robustness(&tr, 0).unwrap(), 0.0);
    assert!(p.satisfies(&tr, 0).unwrap());
}

#[test]
fn tautology_predicate() {
    let tr = Trace::new(vec![vec![4.0, -2.0]]).unwrap();
    let p = Predicate::upper(2, 0, tr.state(0)[0] + 1.0);
    assert!(p.satisfies(&tr, 0).unwrap());
}

#[test]
fn window_underrun_reported() {
    let tr = Trace::scalar(&[1.0, 2.0]).unwrap();
    let f = sub(Finally, 0, 2, le(1.5));
    assert!(matches!(f.robustness(&tr, 0), Err(StlError::WindowUnderrun { .. })));
    assert!(matches!(f.satisfies(&tr, 0), Err(StlError::WindowUnderrun { .. })));
}

#[test]
fn horizons() {
    assert_eq!(Predicate::upper(1, 0, 1.0).horizon(), 0);
    assert_eq!(sub(Finally, 0, 99, le(1.0)).horizon(), 99);
    let phi = Phi::from_expr(PhiExpr::And(vec![
        PhiExpr::Sub(sub(Finally, 0, 99, le(1.0))),
        PhiExpr::Sub(sub(Finally, 0, 99, le(2.0))),
    ]));
    let spec = Spec::new(Globally, 900, phi);
    assert_eq!(spec.horizon(), 999);
    assert_eq!(spec.tau(), 100);
}

#[test]
fn decompose_document_order_and_dedup() {
    let a = sub(Finally, 0, 1, le(1.0));
    let b = sub(Globally, 0, 2, le(2.0));
    let c = sub(Finally, 1, 3, le(3.0));
    let phi = Phi::from_expr(PhiExpr::And(vec![
        PhiExpr::Sub(a.clone()),
        PhiExpr::Or(vec![PhiExpr::Sub(b.clone()), PhiExpr::Sub(c.clone())]),
    ]));
    assert_eq!(decompose(&phi), &[a.clone(), b, c][..]);
    let dup = Phi::from_expr(PhiExpr::Or(vec![PhiExpr::Sub(a.clone()), PhiExpr::Sub(a.clone())]));
    assert_eq!(dup.num_subs(), 1);
    assert_eq!(Phi::single(a).num_subs(), 1);
}
