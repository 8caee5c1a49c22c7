use fastslow::coeffs::{builtin_system, parse_expr, BinOp, Expr, Func, Var};
use fastslow::scalar::ulp_distance;
use fastslow::Error;
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..1000).prop_map(|n| Expr::num(n as f64 / 8.0)),
        Just(Expr::var(Var::T)),
        Just(Expr::var(Var::X)),
        Just(Expr::var(Var::Y)),
    ]
}

fn tree() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (inner.clone(), inner.clone(), 0usize..5).prop_map(|(a, b, k)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][k];
                Expr::binary(op, a, b)
            }),
            (inner, 0usize..Func::ALL.len()).prop_map(|(a, k)| Expr::call(Func::ALL[k], a)),
        ]
    })
}

proptest! {
    #[test]
    fn printed_tree_parses_back(e in tree()) {
        let printed = e.to_string();
        let reparsed = parse_expr(&printed).map_err(|err| TestCaseError::fail(format!("{printed}: {err}")))?;
        prop_assert_eq!(reparsed, e);
    }

    #[test]
    fn parse_print_parse_is_stable(e in tree()) {
        let once = parse_expr(&e.to_string()).unwrap();
        let twice = parse_expr(&once.to_string()).unwrap();
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn precedence_examples() {
    let y = || Expr::var(Var::Y);
    let x = || Expr::var(Var::X);
    assert_eq!(
        parse_expr("-(1+y)*x").unwrap(),
        Expr::neg(Expr::mul(Expr::add(Expr::num(1.0), y()), x()))
    );
    assert_eq!(
        parse_expr("1+y^2*x").unwrap(),
        Expr::add(Expr::num(1.0), Expr::mul(Expr::pow(y(), Expr::num(2.0)), x()))
    );
    assert_eq!(parse_expr("-y^2").unwrap(), Expr::neg(Expr::pow(y(), Expr::num(2.0))));
    assert_eq!(parse_expr("2^3^2").unwrap().eval(0.0, 0.0, 0.0).unwrap(), 512.0);
    assert_eq!(parse_expr("8-4-2").unwrap().eval(0.0, 0.0, 0.0).unwrap(), 2.0);
    assert_eq!(parse_expr("8/4/2").unwrap().eval(0.0, 0.0, 0.0).unwrap(), 1.0);
    assert_eq!(parse_expr("2+sin(").unwrap_err().offset, 6);
}

#[test]
fn evaluation_examples() {
    let at = |src: &str, t: f64, x: f64, y: f64| parse_expr(src).unwrap().eval(t, x, y).unwrap();
    assert_eq!(at("-(1+y)*x", 0.0, 2.0, 1.0), -4.0);
    assert_eq!(at("2+sin(x)", 0.0, 0.0, 0.0), 2.0);
    assert_eq!(at("(1+x^2)*y", 0.0, 1.0, 3.0), 6.0);
    assert!(parse_expr("1/x").unwrap().eval(0.0, 0.0, 0.0f64).is_err());
    assert!(parse_expr("sqrt(x)").unwrap().eval(0.0, -1.0, 0.0f64).is_err());
}

const MALFORMED: [&str; 50] = [
    "", " ", "(", ")", "()", "1+", "+", "*2", "2*", "2**3", "1 2", "x y", "sin", "sin x", "sin()", "sin(x",
    "sin(x))", "((x)", "(x))", "x^", "^x", "x^^2", "2+*3", "1/", "/1", "z", "foo(x)", "log(x)", "tan(1)", "x+z",
    "1..2", "1e", "1e+", ".", "x,y", "x;", "#", "x$", "2+(3", "cos(1,2)", "abs(", "exp)", "(*)", "y*(", "t-",
    "-", "--", "3+-", "sqrt(2))+1", "x+(y-)",
];

#[test]
fn malformed_corpus_is_rejected() {
    for src in MALFORMED {
        match parse_expr(src) {
            Err(e) => assert!(e.offset <= src.len(), "{src:?}: offset {} beyond input", e.offset),
            Ok(tree) => panic!("{src:?} parsed as {tree:?}"),
        }
    }
}

#[test]
fn builtins_match_hand_coded_closures() {
    let ex1 = builtin_system::<f64>("example1").unwrap();
    let ex2 = builtin_system::<f64>("example2").unwrap();
    let lattice: Vec<f64> = (0..5).map(|i| -3.0 + 1.5 * i as f64).collect();
    let mut checked = 0;
    for &t in &lattice {
        for &x in &lattice {
            for &y in lattice.iter().take(4) {
                let pairs = [
                    (ex1.force(t, x, y).unwrap(), -(1.0 + y) * x),
                    (ex1.damping(t, x, y).unwrap(), 1.0),
                    (ex1.fast_drift(t, x, y).unwrap(), -y),
                    (ex1.fast_diffusion(t, x, y).unwrap(), 1.0),
                    (ex2.force(t, x, y).unwrap(), -(1.0 + y * y) * x),
                    (ex2.damping(t, x, y).unwrap(), 1.0),
                    (ex2.fast_drift(t, x, y).unwrap(), -(1.0 + x * x) * y),
                    (ex2.fast_diffusion(t, x, y).unwrap(), 2.0 + x.sin()),
                ];
                for (got, want) in pairs {
                    assert!(ulp_distance(got, want) <= 1, "({t},{x},{y}): {got} vs {want}");
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 100);
}

#[test]
fn builtin_examples() {
    let ex1 = builtin_system::<f64>("example1").unwrap();
    assert_eq!(ex1.force(0.0, 2.0, 1.0).unwrap(), -4.0);
    assert_eq!(ex1.fast_diffusion(0.3, -1.0, 5.0).unwrap(), 1.0);
    let ex2 = builtin_system::<f64>("example2").unwrap();
    assert_eq!(ex2.fast_drift(0.0, 1.0, 3.0).unwrap(), -6.0);
    assert_eq!(ex2.fast_diffusion(0.0, 0.0, 7.0).unwrap(), 2.0);
    match builtin_system::<f64>("example3") {
        Err(Error::UnknownSystem { available, .. }) => assert!(available.contains("example1")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn single_precision_evaluation() {
    let ex2 = builtin_system::<f32>("example2").unwrap();
    assert_eq!(ex2.fast_drift(0.0, 1.0, 3.0).unwrap(), -6.0f32);
}
