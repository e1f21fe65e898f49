use std::f64::consts::PI;

use proptest::prelude::*;

use graphwave::builders;
use graphwave::graph::Potential;
use graphwave::io::{emit_graph, parse_graph, parse_graph_file};
use graphwave::{Edge, Error, MetricGraph, VertexCondition};

fn line_of(r: Result<MetricGraph, Error>) -> usize {
    match r {
        Err(Error::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn parses_a_tadpole() {
    let text = format!(
        "# tadpole\n\nvertex v nk   # hub\nedge loop0 v v {}\nedge tail v inf inf nonlinear=1\n",
        2.0 * PI
    );
    let g = parse_graph(&text).unwrap();
    assert_eq!(g, builders::tadpole(2.0 * PI));
    assert!(g.validate().is_ok());
}

#[test]
fn parses_every_condition_and_option() {
    let text = "vertex a delta -1.5\nvertex b delta-prime 0.25\nvertex c gk 1 2 0.5\n\
                edge e1 a b 1.0 nonlinear=0\nedge e2 b c 2.0 potential=-0.5\nedge e3 c inf inf\nedge e4 c a 3\n";
    let g = parse_graph(text).unwrap();
    assert_eq!(g.vertices[0].condition, VertexCondition::Delta(-1.5));
    assert_eq!(g.vertices[1].condition, VertexCondition::DeltaPrime(0.25));
    assert_eq!(g.vertices[2].condition, VertexCondition::GeneralizedKirchhoff(vec![1.0, 2.0, 0.5]));
    assert!(!g.edges[0].nonlinear);
    assert_eq!(g.edges[1].potential, Some(Potential::Constant(-0.5)));
    assert!(g.edges[2].is_unbounded());
    assert!(g.validate().is_ok());
}

#[test]
fn errors_carry_line_numbers() {
    assert_eq!(line_of(parse_graph("vertex a nk\nvertex b robin 1\n")), 2);
    assert_eq!(line_of(parse_graph("vertex a nk\n# note\nvertex a nk\n")), 3);
    assert_eq!(line_of(parse_graph("vertex a nk\nedge e a a 1\nedge e a a 2\n")), 3);
    assert_eq!(line_of(parse_graph("vertex a nk\nedge e a a one\n")), 2);
    assert_eq!(line_of(parse_graph("vertex a nk\nedge e a inf 3\n")), 2);
    assert_eq!(line_of(parse_graph("vertex a nk\nedge e a a inf\n")), 2);
    assert_eq!(line_of(parse_graph("vertex a delta\n")), 1);
    assert_eq!(line_of(parse_graph("vertex a nk 1\n")), 1);
    assert_eq!(line_of(parse_graph("vertex a gk\n")), 1);
    assert_eq!(line_of(parse_graph("vertex a nk\nedge e a a 1 nonlinear=2\n")), 2);
    assert_eq!(line_of(parse_graph("vertex a nk\nedge e a\n")), 2);
    assert_eq!(line_of(parse_graph("vertex a nk\nnode b\n")), 2);
    assert_eq!(line_of(parse_graph("vertex a delta nan\n")), 1);
}

#[test]
fn structure_is_checked_by_validation() {
    let g = parse_graph("vertex a nk\nvertex b nk\nvertex c nk\nedge e a b 1\n").unwrap();
    assert_eq!(g.check(), Err(Error::Disconnected { components: 2 }));
    let g = parse_graph("vertex a nk\nedge e a b 1\n").unwrap();
    assert!(matches!(g.check(), Err(Error::DanglingVertex { .. })));
    let g = parse_graph("vertex a nk\nedge e a a -2\n").unwrap();
    assert!(matches!(g.check(), Err(Error::NonPositiveLength { .. })));
}

#[test]
fn file_round_trip() {
    let dir = std::env::temp_dir().join(format!("graphwave-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("dumbbell.graph");
    let g = builders::dumbbell(PI, 2.0, PI);
    std::fs::write(&path, emit_graph(&g).unwrap()).unwrap();
    assert_eq!(parse_graph_file(&path).unwrap(), g);
    assert!(matches!(parse_graph_file(dir.join("missing.graph")), Err(Error::Io(_))));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sampled_potentials_have_no_text_form() {
    let mut g = builders::interval(1.0);
    g.edges[0].potential = Some(Potential::Sampled { step: 0.5, values: vec![0.0, 1.0] });
    assert!(emit_graph(&g).is_err());
}

#[test]
fn builders_round_trip() {
    for g in [
        builders::tadpole(2.0 * PI),
        builders::flower(&[1.0, 2.5, 0.3]),
        builders::dumbbell(1.0, 0.1, 3.0),
        builders::double_bridge(1.0, 2.0),
        builders::bubble_tower(&[3.0, 2.0, 1.0]),
        builders::star(4, VertexCondition::Delta(-0.7)),
        builders::line(VertexCondition::DeltaPrime(1.0 / 3.0)),
        builders::circle(0.1),
    ] {
        assert_eq!(parse_graph(&emit_graph(&g).unwrap()).unwrap(), g);
    }
}

fn arb_condition() -> impl Strategy<Value = VertexCondition> {
    prop_oneof![
        Just(VertexCondition::NeumannKirchhoff),
        any::<f64>().prop_filter("finite", |x| x.is_finite()).prop_map(VertexCondition::Delta),
        (-1e6f64..1e6).prop_map(VertexCondition::DeltaPrime),
        prop::collection::vec(1e-3f64..1e3, 1..4).prop_map(VertexCondition::GeneralizedKirchhoff),
    ]
}

fn arb_graph() -> impl Strategy<Value = MetricGraph> {
    (prop::collection::vec(arb_condition(), 1..5), prop::collection::vec((0usize..5, prop::option::of(0usize..5), 1e-6f64..1e6, any::<bool>(), prop::option::of(-10.0f64..10.0)), 0..8))
        .prop_map(|(conds, edges)| {
            let mut g = MetricGraph::new();
            for (i, cnd) in conds.iter().enumerate() {
                g.add_vertex(&format!("v{i}"), cnd.clone());
            }
            let n = conds.len();
            for (k, (a, b, len, nl, pot)) in edges.into_iter().enumerate() {
                let from = format!("v{}", a % n);
                let mut e = match b {
                    Some(b) => Edge::bounded(&format!("e{k}"), &from, &format!("v{}", b % n), len),
                    None => Edge::half_line(&format!("e{k}"), &from),
                };
                e.nonlinear = nl;
                e.potential = pot.map(Potential::Constant);
                g.add_edge(e);
            }
            g
        })
}

proptest! {
    #[test]
    fn emit_then_parse_is_identity(g in arb_graph()) {
        let text = emit_graph(&g).unwrap();
        prop_assert_eq!(parse_graph(&text).unwrap(), g.clone());
        prop_assert_eq!(emit_graph(&parse_graph(&text).unwrap()).unwrap(), text);
    }
}
