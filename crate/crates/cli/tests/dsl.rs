use proptest::prelude::*;
use spencer_cli::dsl::JetCoord;
use spencer_cli::{parse_problem_file, parse_problem_file_with};
use spencer_core::{q, MultiIndex, Series};

const HEADER: &str = "manifold dim 2\nvars x y\ndistribution V = span(d/dy)\ntruncation 8\n";

const CASE1: &str = "\
# Case 1
manifold dim 2
vars x y
distribution V = span(d/dy)
truncation 8
equation R order 1 on V: p[1,0] = 0
transversal N: y=0
";

fn with(body: &str) -> String {
    format!("{HEADER}{body}\n")
}

fn coord(comp: usize, a: &[u32]) -> JetCoord {
    JetCoord { comp, alpha: MultiIndex(a.to_vec()) }
}

fn diag(text: &str) -> (usize, usize, String) {
    let d = parse_problem_file(text).unwrap_err();
    (d.line, d.column, d.message)
}

#[test]
fn case1_file() {
    let s = parse_problem_file(CASE1).unwrap();
    assert_eq!(s.dim, 2);
    assert_eq!(s.vars, vec!["x", "y"]);
    assert_eq!(s.distribution.vars, vec![1]);
    assert_eq!(s.truncation, 8);
    assert_eq!(s.equations.len(), 1);
    let e = &s.equations[0];
    assert_eq!((e.name.as_str(), e.order), ("R", 1));
    assert_eq!(e.relations.len(), 1);
    assert_eq!(e.relations[0].terms, vec![(coord(1, &[1, 0]), Series::one(2, 8))]);
    assert_eq!(s.transversal.as_ref().unwrap().vars, vec![1]);
}

#[test]
fn order_violation_is_reported_with_position() {
    let (line, col, msg) = diag(&with("equation R order 1 on V: p[2,0] = 0"));
    assert_eq!((line, col), (5, 26));
    assert!(msg.contains("order 2"), "{msg}");
}

#[test]
fn polynomial_coefficients() {
    let s = parse_problem_file(&with("equation R order 1 on V: p[0,1] = x^3*p[1,0]")).unwrap();
    let terms = &s.equations[0].relations[0].terms;
    let x3 = Series::var(2, 8, 0).pow(3);
    assert_eq!(terms, &vec![(coord(1, &[1, 0]), -&x3), (coord(1, &[0, 1]), Series::one(2, 8))]);

    let s = parse_problem_file(&with("equation R order 1 on V: 3/2*p[1,0] + 0.25*x*y*p[0,1] - (1 + x)^2*p[0,0] = 0"))
        .unwrap();
    let t = &s.equations[0].relations[0].terms;
    let x = Series::var(2, 8, 0);
    let one = Series::one(2, 8);
    let want_p00 = -&(&(&one + &x) * &(&one + &x));
    assert_eq!(t[0], (coord(1, &[0, 0]), want_p00));
    assert_eq!(t[1].1, Series::constant(2, 8, spencer_core::qf(3, 2)));
    assert_eq!(t[2].1, (&x * &Series::var(2, 8, 1)).scale(&spencer_core::qf(1, 4)));
}

#[test]
fn division_by_a_unit_is_a_series() {
    let s = parse_problem_file(&with("equation R order 1 on V: p[1,0] = 1/(1 - x)*p[0,1]")).unwrap();
    let geo = Series::from_terms(2, 8, (0..=8).map(|k| (MultiIndex(vec![k, 0]), q(1))));
    assert_eq!(s.equations[0].relations[0].terms[1].1, -&geo);
    let (_, _, msg) = diag(&with("equation R order 1 on V: p[1,0] = 1/x*p[0,1]"));
    assert!(msg.contains("vanishes"), "{msg}");
}

#[test]
fn rejects_bad_input() {
    let cases = [
        ("equation R order 1 on V: p[1,0] = z*p[0,1]", "unknown variable"),
        ("equation R order 1 on V: p[1,0] = 1e3*p[0,1]", "non-rational literal"),
        ("equation R order 1 on V: p[1,0] = pi*p[0,1]", "unknown variable"),
        ("equation R order 1 on V: p[1,0] = exp(x)*p[0,1]", "non-rational literal"),
        ("equation R order 1 on V: p[1,0] = 1.*p[0,1]", "non-rational literal"),
        ("equation R order 1 on V: p[1,0]*p[0,1] = 0", "linear"),
        ("equation R order 1 on V: p[1,0] = 1", "without a jet coordinate"),
        ("equation R order 1 on V: p[1,0] - p[1,0] = 0", "identically zero"),
        ("equation R order 1 on V: px[1,0] = 0", "not in the distribution"),
        ("equation R order 1 on V: p[1,0,0] = 0", "entries"),
        ("equation R order 1 on W: p[1,0] = 0", "unknown distribution"),
        ("equation R order 1 on V: p[1,0] = = 0", "exactly one"),
        ("equation R order 1 on V: (p[1,0] = 0", "expected ')'"),
        ("equation R order 1 on V: p[1,0] = x^y*p[0,1]", "exponent"),
        ("transversal N: y=1", "<var>=0"),
        ("section F:\n  map x = x", "no 'end'"),
        ("connection W:\nend", "order"),
        ("end", "outside"),
        ("frobnicate", "unknown keyword"),
        ("equation R order 1 on V: p[1,0] = 0 $", "unexpected character"),
    ];
    for (body, want) in cases {
        let (_, _, msg) = diag(&with(body));
        assert!(msg.contains(want), "{body}: {msg}");
    }
    let (line, _, msg) = diag("vars x y\n");
    assert_eq!(line, 1);
    assert!(msg.contains("manifold dim"));
    assert!(diag("manifold dim 2\nvars x\n").2.contains("1 variables"));
    assert!(diag("manifold dim 2\nvars x y\n").2.contains("distribution"));
}

#[test]
fn several_fiber_directions_need_named_coordinates() {
    let head = "manifold dim 3\nvars x y z\ndistribution V = span(d/dy, d/dz)\n";
    let s = parse_problem_file(&format!("{head}equation R order 1 on V: py[1,0,0] = pz[0,1,0]\n")).unwrap();
    let t = &s.equations[0].relations[0].terms;
    assert_eq!(t[0].0, coord(1, &[1, 0, 0]));
    assert_eq!(t[1].0, coord(2, &[0, 1, 0]));
    let d = parse_problem_file(&format!("{head}equation R order 1 on V: p[1,0,0] = 0\n")).unwrap_err();
    assert!(d.message.contains("ambiguous"));
}

#[test]
fn blocks() {
    let text = with(
        "equation R order 1 on V: p[1,0] = 0
equation S order 1 on V: p[0,1] = x*p[1,0]
section F order 2:
  maps R -> S
  map x = x + x^2
  jet y[1,1] = x
  phi x = x + x^2
end
connection W order 2:
  omega y: y[0,0] = 1; y[0,1] = x
end
jet xi order 2:
  y[0,0] = y^2
end",
    );
    let s = parse_problem_file(&text).unwrap();
    let f = &s.sections[0];
    assert_eq!(f.order, Some(2));
    assert_eq!(f.maps, Some(("R".into(), "S".into())));
    assert_eq!(f.base_map[&0], &Series::var(2, 8, 0) + &Series::var(2, 8, 0).pow(2));
    assert_eq!(f.jets[&coord(1, &[1, 1])], Series::var(2, 8, 0));
    assert_eq!(s.connections[0].omega[&1].len(), 2);
    assert_eq!(s.jets[0].entries[&coord(1, &[0, 0])], Series::var(2, 8, 1).pow(2));

    let bad = with("jet xi order 1:\n  y[2,0] = 1\nend");
    assert!(parse_problem_file(&bad).unwrap_err().message.contains("above the declared order"));
}

#[test]
fn truncation_override_and_default() {
    let s = parse_problem_file_with(CASE1, Some(3)).unwrap();
    assert_eq!(s.truncation, 3);
    assert_eq!(s.equations[0].relations[0].terms[0].1.trunc(), 3);
    let s = parse_problem_file("manifold dim 1\nvars t\ndistribution V = span(d/dt)\n").unwrap();
    assert_eq!(s.truncation, spencer_cli::dsl::DEFAULT_TRUNCATION);
}

#[test]
fn print_parse_round_trip() {
    let text = with(
        "equation R order 2 on V: p[0,1] = (x^3 - 1/3*x)*p[1,0] + y*p[0,0]; p[2,0] = 0
equation J order 1 on V:
transversal N: y=0
section F:
  map x = x + x^2
  jet y[0,1] = 1 + x
  phi x = x + x^2
end",
    );
    let s = parse_problem_file(&text).unwrap();
    let printed = s.to_dsl();
    let again = parse_problem_file(&printed).unwrap();
    assert_eq!(again, s);
    assert_eq!(again.to_dsl(), printed);
}

fn arb_series() -> impl Strategy<Value = String> {
    proptest::collection::vec((-5i64..=5, 1i64..=4, 0u32..=3, 0u32..=3), 1..4).prop_map(|ts| {
        ts.iter()
            .map(|(a, b, i, j)| format!("({a}/{b})*x^{i}*y^{j}"))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn arb_relation() -> impl Strategy<Value = String> {
    let idx = prop_oneof![Just("[1,0]"), Just("[0,1]"), Just("[0,0]"), Just("[1,1]"), Just("[2,0]")];
    (1i64..=3, proptest::collection::vec((arb_series(), idx), 0..3))
        .prop_map(|(c, rest)| {
            let mut s = format!("{c}*p[0,2]");
            for (coef, i) in rest {
                s += &format!(" - ({coef})*p{i}");
            }
            s + " = 0"
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_normalizes(rels in proptest::collection::vec(arb_relation(), 1..3), t in 2u32..=6) {
        let text = format!(
            "manifold dim 2\nvars x y\ndistribution V = span(d/dy)\ntruncation {t}\nequation R order 2 on V: {}\n",
            rels.join("; ")
        );
        let s = parse_problem_file(&text).unwrap();
        let printed = s.to_dsl();
        let again = parse_problem_file(&printed).unwrap();
        prop_assert_eq!(&again, &s);
        prop_assert_eq!(again.to_dsl(), printed);
    }

    #[test]
    fn parser_is_total(junk in "\\PC{0,80}") {
        let _ = parse_problem_file(&junk);
        let _ = parse_problem_file(&with(&junk));
    }

    #[test]
    fn parser_is_total_on_near_miss_relations(
        pieces in proptest::collection::vec(
            prop_oneof![
                Just("p[1,0]"), Just("p[0,1]"), Just("x"), Just("y"), Just("+"), Just("-"), Just("*"),
                Just("/"), Just("^"), Just("("), Just(")"), Just("="), Just(";"), Just("2"), Just("0"),
                Just("1.5"), Just("p[9,9]"), Just("p["), Just("z"), Just("->"),
            ],
            0..16,
        )
    ) {
        let _ = parse_problem_file(&with(&format!("equation R order 1 on V: {}", pieces.join(" "))));
    }
}
