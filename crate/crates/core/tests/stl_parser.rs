use taud::stl::StlError;
use taud::stl::*;
use taud::stl::TemporalOp;
use taud::stl::Formula;

pub(crate) const EQ9: &str = "G[0,900](F[0,99](x0>=3.75 && x0<=5 && x1>=3.75 && x1<=5) && F[0,99](x0>=3.75 && x0<=5 && x1>=1.25 && x1<=2.5))";

#[test]
fn robot_task_parses() {
    let s = parse_spec(EQ9, 3).unwrap();
    assert_eq!(s.outer(), TemporalOp::Globally);
    assert_eq!(s.horizon_end(), 900);
    assert_eq!(s.phi().num_subs(), 2);
    assert_eq!(s.tau(), 100);
    assert_eq!(s.total_horizon(), 999);
    assert_eq!(s.horizon(), 999);
}

#[test]
fn zero_horizons() {
    let s = parse_spec("F[0,0](x0<=1)", 1).unwrap();
    assert_eq!(s.outer(), TemporalOp::Finally);
    assert_eq!((s.horizon_end(), s.phi().num_subs(), s.tau(), s.total_horizon()), (0, 1, 1, 0));
    assert_eq!(s.subs()[0].to_string(), "G[0,0](x0 <= 1.0)");
    assert_eq!(parse_spec(&s.to_string(), 1).unwrap(), s);
}

#[test]
fn nested_globally() {
    let s = parse_spec("G[0,5](G[1,3](x0<=2))", 1).unwrap();
    assert_eq!((s.tau(), s.total_horizon()), (4, 8));
}

#[test]
fn ge_is_negated_le() {
    let i = parse_inner("x1 >= 2.5", 2).unwrap();
    assert_eq!(i, Inner::Pred(Predicate::new(vec![0.0, -1.0], -2.5).unwrap()));
}

#[test]
fn linear_predicates() {
    let i = parse_inner("2*x0 + -0.5*x1 - x2 <= 1e1", 3).unwrap();
    assert_eq!(i, Inner::Pred(Predicate::new(vec![2.0, -0.5, -1.0], 10.0).unwrap()));
}

#[test]
fn and_binds_tighter_than_or() {
    let i = parse_inner("x0<=1 || x0<=2 && x0<=3", 1).unwrap();
    match i {
        Inner::Or(v) => {
            assert_eq!(v.len(), 2);
            assert!(matches!(v[1], Inner::And(_)));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn error_cases() {
    assert!(matches!(parse_spec("G[0,5](F[0,3](G[0,1](x0<=1)))", 1), Err(StlError::Nesting { .. })));
    assert!(matches!(parse_spec("G[0,5](x0<=1 && F[0,1](x0<=2))", 1), Err(StlError::Nesting { .. })));
    assert!(matches!(parse_spec("G[0,5](F[0,1](x0<=2) && x0<=1)", 1), Err(StlError::Nesting { .. })));
    assert!(matches!(parse_spec("G[0,5](F[4,3](x0<=1))", 1), Err(StlError::BadInterval { .. })));
    assert!(matches!(
        parse_spec("G[0,5](F[0,3](x2<=1))", 2),
        Err(StlError::VariableOutOfRange { index: 2, .. })
    ));
    assert!(matches!(parse_spec("G[0,5](F[0,3](x0<=1)) junk", 1), Err(StlError::Syntax { .. })));
    assert!(matches!(parse_spec("G[0,5](F[0,3](x0<1))", 1), Err(StlError::Syntax { .. })));
    assert!(matches!(parse_spec("G[0,5](F[0,3](x0 - x0<=1))", 1), Err(StlError::DegeneratePredicate { .. })));
    assert!(matches!(parse_spec("G[1,5](F[0,3](x0<=1))", 1), Err(StlError::Syntax { .. })));
}

#[test]
fn syntax_error_position() {
    match parse_spec("G[0,5](F[0,3](x0<=))", 1) {
        Err(StlError::Syntax { pos, .. }) => assert_eq!(pos, 18),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn print_reparse_identity() {
    let texts = [
        EQ9,
        "F[0,10](G[2,4](!(x0<=1 || x1>=2) && x1<=3.5) || F[0,1](!x0<=0))",
        "G[0,3]((F[0,1](x0<=1) || G[0,2](x0>=-1)) && F[1,1](3*x0 + x1 <= 2))",
    ];
    for t in texts {
        let s = parse_spec(t, 3).unwrap();
        let printed = s.to_string();
        let again = parse_spec(&printed, 3).unwrap();
        assert_eq!(s, again, "{printed}");
    }
}

#[test]
fn truncated_bare_body_reports_the_syntax_error() {
    assert!(matches!(parse_spec("G[0,5](x0 <=", 1), Err(StlError::Syntax { .. })));
}
