use std::f64::consts::PI;

use graphwave::builders;
use graphwave::discrete::GridOptions;
use graphwave::dtn::*;
use graphwave::operators::{assemble_linearization, linearization_scale, morse_index, ZERO_BAND};
use graphwave::solver::{refine, NewtonOptions, StandingWave};
use graphwave::{Edge, MetricGraph, VertexCondition};

fn solve(g: &MetricGraph, edges: &[&str], eps: f64, h: f64, opts: DtnOptions) -> (PulsePlacement, StandingWave, StandingWave) {
    let pl = PulsePlacement::new(g, edges).unwrap();
    let seed = dtn_seed(g, &pl, eps, GridOptions::with_h(h), opts).unwrap();
    let w = refine(&seed, NewtonOptions::default()).unwrap();
    (pl, seed, w)
}

fn morse(w: &StandingWave) -> usize {
    let (lp, _) = assemble_linearization(&w.disc, &w.u, w.omega, w.p).unwrap();
    morse_index(&lp, Some(ZERO_BAND * linearization_scale(&w.u, w.omega, w.p))).unwrap()
}

#[test]
fn tadpole_guess_is_leading_order() {
    let g = builders::tadpole(2.0 * PI);
    let pl = PulsePlacement::new(&g, &["loop0"]).unwrap();
    assert_eq!(pl.edges[0].kind, PulseKind::Loop);
    assert_eq!(pl.vertices[0].total_degree, 3);
    let p = dirichlet_guess(&pl, &g, 4.0, DtnOptions::default()).unwrap();
    let exact = 8.0 / 3.0 * (-4.0 * PI).exp();
    assert!((p[0].1 - exact).abs() <= 1e-15 * exact);
}

#[test]
fn flower_guess_three_terms() {
    let l = 1.5;
    let g = builders::flower(&[2.0 * l; 3]);
    let pl = PulsePlacement::new(&g, &["loop0", "loop1", "loop2"]).unwrap();
    assert_eq!(pl.vertices[0].total_degree, 7);
    assert!(consistency_check(&pl, &g).is_ok());
    let eps = 3.0;
    let p = dirichlet_guess(&pl, &g, eps, DtnOptions::default()).unwrap();
    let exact = 24.0 / 7.0 * (-eps * l).exp();
    assert!((p[0].1 - exact).abs() <= 1e-14 * exact);
}

#[test]
fn guess_rejects_small_eps() {
    let g = builders::tadpole(2.0 * PI);
    let pl = PulsePlacement::new(&g, &["loop0"]).unwrap();
    assert!(dirichlet_guess(&pl, &g, 2.0, DtnOptions::default()).is_err());
    // short loop: data too large
    let g = builders::tadpole(0.2);
    let pl = PulsePlacement::new(&g, &["loop0"]).unwrap();
    assert!(dirichlet_guess(&pl, &g, 3.0, DtnOptions::default()).is_err());
}

#[test]
fn guess_scales_exponentially_in_length() {
    let eps = 3.0;
    let l = 1.3;
    let p1 = {
        let g = builders::tadpole(2.0 * l);
        let pl = PulsePlacement::new(&g, &["loop0"]).unwrap();
        dirichlet_guess(&pl, &g, eps, DtnOptions::default()).unwrap()[0].1
    };
    let p2 = {
        let g = builders::tadpole(4.0 * l);
        let pl = PulsePlacement::new(&g, &["loop0"]).unwrap();
        dirichlet_guess(&pl, &g, eps, DtnOptions::default()).unwrap()[0].1
    };
    // per-loop factor e^{−εℓ} is squared when ℓ doubles
    let f1 = p1 * 3.0 / 8.0;
    let f2 = p2 * 3.0 / 8.0;
    assert!((f2 - f1 * f1).abs() <= 1e-15);
}

#[test]
fn consistency_examples() {
    let g = builders::flower(&[2.0, 3.0, 4.0]);
    let pl = PulsePlacement::new(&g, &["loop0", "loop1", "loop2"]).unwrap();
    assert!(consistency_check(&pl, &g).is_ok());

    let g = builders::dumbbell(PI, 2.0, PI);
    let pl = PulsePlacement::new(&g, &["loopm", "loopp"]).unwrap();
    assert!(consistency_check(&pl, &g).is_ok());

    // two boundary vertices with reaches 1 and 4 joined by an edge of length 2
    let mut g = MetricGraph::new();
    g.add_vertex("a", VertexCondition::NeumannKirchhoff).add_vertex("b", VertexCondition::NeumannKirchhoff);
    g.add_edge(Edge::bounded("la", "a", "a", 2.0));
    g.add_edge(Edge::bounded("lb", "b", "b", 8.0));
    g.add_edge(Edge::bounded("m", "a", "b", 2.0));
    let pl = PulsePlacement::new(&g, &["la", "lb"]).unwrap();
    let r = consistency_check(&pl, &g);
    assert_eq!(r.violations.len(), 2, "{:?}", r.violations);
}

#[test]
fn placement_errors() {
    let g = builders::flower(&[2.0, 2.0]);
    assert!(PulsePlacement::new(&g, &["tail"]).is_err());
    assert!(PulsePlacement::new(&g, &["nope"]).is_err());
    assert!(PulsePlacement::new(&g, &["loop0", "loop0"]).is_err());
    assert!(PulsePlacement::new(&g, &[]).is_err());
}

#[test]
fn sech_tail_neumann_deficit() {
    for len in [3.0f64, 5.0, 7.0] {
        let n = 200;
        let z: Vec<f64> = (0..=n).map(|i| len * i as f64 / n as f64).collect();
        let u: Vec<f64> = z.iter().map(|z| 1.0 / z.cosh()).collect();
        let v: Vec<f64> = z.iter().map(|z| -z.tanh() / z.cosh()).collect();
        let c = single_bump_neumann_check(&z, &u, &v, 1.0).unwrap();
        // closed form of the deficit for sech: |−sech tanh − sech + 4e^{−L}|
        let s = 1.0 / len.cosh();
        let exact = (-s * len.tanh() - s + 4.0 * (-len).exp()).abs();
        assert!((c.deficit - exact).abs() <= 1e-15);
        assert!(c.deficit < 10.0 * (-3.0 * len).exp());
    }
    assert!(single_bump_neumann_check(&[0.0, 1.0], &[0.5, 0.6], &[0.0, 0.1], 1.0).is_err());
}

#[test]
fn tadpole_bump_deficit_follows_bound_shape() {
    // exact bumps with the tadpole vertex value; ratio to ε e^{−3εℓ} stays bounded
    let l = 1.0;
    let mut ratios = Vec::new();
    for eps in [3.0, 4.0, 5.0, 6.0, 7.0, 8.0] {
        let value = graphwave::period::tadpole_root(eps, 1.0, l).unwrap();
        let len = eps * l;
        let prof = bump_profile(value, len).unwrap();
        let n = 50;
        let z: Vec<f64> = (0..=n).map(|i| len * i as f64 / n as f64).collect();
        let (u, v): (Vec<f64>, Vec<f64>) = z.iter().map(|&z| prof.eval(z, value)).unzip();
        let c = single_bump_neumann_check(&z, &u, &v, eps).unwrap();
        ratios.push(c.deficit / c.bound_shape);
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(max < 50.0, "{ratios:?}");
}

#[test]
fn tadpole_newton_matches_guess_better_with_eps() {
    let g = builders::tadpole(2.0);
    let mut errs = Vec::new();
    for eps in [3.0, 4.0, 5.0] {
        let (pl, _, w) = solve(&g, &["loop0"], eps, 0.01, DtnOptions::default());
        let guess = dirichlet_guess(&pl, &g, eps, DtnOptions::default()).unwrap()[0].1;
        let b = neumann_balance(&w, &g, &pl).unwrap()[0];
        errs.push((b.value - guess).abs() / guess);
        // Kirchhoff balance of the solved wave
        assert!((b.remainder_flux + b.pulse_flux).abs() < 1e-2 * b.value.max(1e-300) + 1e-6);
        let r = concentration_ratio(&w, &[0]).unwrap();
        assert!(r > 0.99 && r <= 1.0);
        assert_eq!(morse(&w), 1);
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn flower_multi_pulse_morse_equals_pulse_count() {
    let g = builders::flower(&[2.0; 3]);
    let opts = DtnOptions::default();
    for (edges, n) in [(vec!["loop0"], 1), (vec!["loop0", "loop1"], 2), (vec!["loop0", "loop1", "loop2"], 3)] {
        let (_, _, w) = solve(&g, &edges, 3.0, 0.02, opts);
        assert_eq!(morse(&w), n, "{edges:?}");
        let idx: Vec<usize> = edges.iter().map(|e| g.edge_index(e).unwrap()).collect();
        assert!(concentration_ratio(&w, &idx).unwrap() > 0.99);
    }
}

#[test]
fn dumbbell_states_morse_indices() {
    let g = builders::dumbbell(PI, 2.0, PI);
    let opts = DtnOptions { eps0: 1.5, ..Default::default() };
    let cases: [(&[&str], usize); 5] = [
        (&["loopm"], 1),
        (&["mid"], 1),
        (&["loopm", "loopp"], 2),
        (&["loopm", "mid"], 3),
        (&["loopm", "mid", "loopp"], 5),
    ];
    for (edges, expected) in cases {
        let (_, _, w) = solve(&g, edges, 2.0, 0.02, opts);
        assert_eq!(morse(&w), expected, "{edges:?}");
    }
}

#[test]
fn single_edge_concentration_is_one() {
    let g = builders::circle(4.0);
    let pl = PulsePlacement::new(&g, &["loop"]).unwrap();
    let seed = dtn_seed(&g, &pl, 3.0, GridOptions::with_h(0.05), DtnOptions::default()).unwrap();
    assert!((concentration_ratio(&seed, &[0]).unwrap() - 1.0).abs() < 1e-15);
}
