use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use graphwave::analytic::a_fn;
use graphwave::builders;
use graphwave::discrete::GridOptions;
use graphwave::dtn::{concentration_ratio, consistency_check, dirichlet_guess, dtn_seed, neumann_balance, DtnOptions, PulsePlacement};
use graphwave::evolve::{evolve_from_wave, EvolveOptions, Scheme};
use graphwave::groundstate::{energy_bracket, minimization_discretization, minimize_at_mass, nonexistence_screen, MinimizeOptions};
use graphwave::io::parse_graph_file;
use graphwave::operators::{
    assemble_laplacian, assemble_linearization, laplacian_discretization, linearization_scale, lowest_eigenvalues,
    morse_index, ZERO_BAND,
};
use graphwave::period::{period_t, PeriodQuery};
use graphwave::solver::{
    assemble_tadpole_wave, continue_branch, refine, soliton_seed, star_state, wave_discretization, ContinuationOptions,
    NewtonOptions, Provenance, StandingWave,
};
use graphwave::stability::{stability_report, SlopeSource};
use graphwave::{MetricGraph, VertexCondition};

use crate::{Cli, Command, Direction, Failure, Global, SchemeArg, WaveArgs};

type Outcome<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

struct Ctx {
    grid: GridOptions,
    tol: Option<f64>,
    jobs: usize,
    out: PathBuf,
}

impl Ctx {
    fn new(g: &Global) -> Outcome<Self> {
        if !(g.grid_h > 0.0 && g.grid_h.is_finite()) {
            return Err(usage("--grid-h must be positive"));
        }
        if g.jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        let mut grid = GridOptions::with_h(g.grid_h);
        if let Some(t) = g.trunc {
            if !(t > 0.0 && t.is_finite()) {
                return Err(usage("--trunc must be positive"));
            }
            grid = grid.trunc(t);
        }
        if let Some(t) = g.tol {
            if !(t > 0.0) {
                return Err(usage("--tol must be positive"));
            }
        }
        let out = g
            .out
            .clone()
            .or_else(|| std::env::var_os("GRAPHWAVE_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Ctx { grid, tol: g.tol, jobs: g.jobs, out })
    }

    fn write(&self, name: &str, contents: &str) -> Outcome {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_json(&self, name: &str, v: &Value) -> Outcome {
        let mut s = serde_json::to_string_pretty(v).expect("json serializes");
        s.push('\n');
        self.write(name, &s)
    }

    fn newton(&self) -> NewtonOptions {
        let d = NewtonOptions::default();
        NewtonOptions { tol: self.tol.unwrap_or(d.tol), ..d }
    }

    fn pool(&self) -> Outcome<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build().map_err(|e| usage(e.to_string()))
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let ctx = Ctx::new(&cli.global)?;
    match &cli.command {
        Command::Validate { graph } => validate(&ctx, graph),
        Command::Spectrum { graph, count } => spectrum(&ctx, &load(graph)?, *count),
        Command::Solve { graph, wave } => solve(&ctx, &load(graph)?, wave),
        Command::Branch { graph, p, omega_min, omega_max, omega_start, direction, ds, max_points, placement, eps0 } => {
            if !(omega_min < omega_max && *omega_max < 0.0) {
                return Err(usage("need omega-min < omega-max < 0"));
            }
            let up = *direction == Direction::Up;
            let start = omega_start.unwrap_or(if up { *omega_min } else { *omega_max });
            let wave = WaveArgs { omega: start, p: *p, placement: placement.clone(), eps0: *eps0 };
            let opts = ContinuationOptions {
                ds: *ds,
                max_points: *max_points,
                omega_min: *omega_min,
                omega_max: *omega_max,
                direction: if up { 1.0 } else { -1.0 },
                newton: NewtonOptions { check_spectrum: false, ..ctx.newton() },
                ..Default::default()
            };
            branch(&ctx, &load(graph)?, &wave, opts)
        }
        Command::Stability { graph, wave } => stability(&ctx, &load(graph)?, wave),
        Command::Dtn { graph, wave } => dtn(&ctx, &load(graph)?, wave),
        Command::Evolve { graph, wave, dt, t_final, record_every, perturb, perturb_edge, scheme } => {
            if !(*dt > 0.0 && *t_final > 0.0) || *record_every == 0 {
                return Err(usage("need dt > 0, t-final > 0 and record-every ≥ 1"));
            }
            let opts = EvolveOptions {
                dt: *dt,
                t_final: *t_final,
                record_every: *record_every,
                scheme: match scheme {
                    SchemeArg::Conservative => Scheme::Conservative,
                    SchemeArg::Midpoint => Scheme::Midpoint,
                },
                ..Default::default()
            };
            evolve(&ctx, &load(graph)?, wave, *perturb, perturb_edge, &opts)
        }
        Command::Groundstate { graph, mass, p, max_iter } => groundstate(&ctx, &load(graph)?, mass, *p, *max_iter),
        Command::PeriodScan { p, from, to, n, slope_fraction } => period_scan(&ctx, *p, *from, *to, *n, *slope_fraction),
    }
}

fn load(path: &Path) -> Outcome<MetricGraph> {
    let g = parse_graph_file(path)?;
    g.check()?;
    Ok(g)
}

fn validate(ctx: &Ctx, path: &Path) -> Outcome {
    let g = parse_graph_file(path)?;
    let report = g.validate();
    let violations: Vec<String> = report.violations.iter().map(|e| e.to_string()).collect();
    let mut v = json!({
        "ok": report.is_ok(),
        "violations": violations,
        "vertices": g.vertices.len(),
        "edges": g.edges.len(),
    });
    if report.is_ok() {
        v["compact"] = json!(g.is_compact());
        v["half_lines"] = json!(g.half_line_count());
        v["bounded_length"] = json!(g.bounded_length());
    }
    ctx.write_json("validation.json", &v)?;
    if report.is_ok() {
        println!("ok: {} vertices, {} edges", g.vertices.len(), g.edges.len());
        Ok(())
    } else {
        for s in &violations {
            println!("violation: {s}");
        }
        Err(usage(format!("{} structural violation(s) in {}", violations.len(), path.display())))
    }
}

fn spectrum(ctx: &Ctx, g: &MetricGraph, count: usize) -> Outcome {
    let disc = laplacian_discretization(g, ctx.grid)?;
    let op = assemble_laplacian(&disc, 0.0);
    let slice = lowest_eigenvalues(&op, count, ctx.tol)?;
    ctx.write("spectrum.csv", &slice.to_csv())?;
    for (i, l) in slice.eigenvalues.iter().enumerate() {
        println!("λ{i} = {l:.10}");
    }
    Ok(())
}

fn tadpole_loop(g: &MetricGraph) -> Option<f64> {
    (g.edges.len() == 2 && *g == builders::tadpole(g.edges[0].length)).then(|| g.edges[0].length)
}

fn is_star(g: &MetricGraph) -> bool {
    g.vertices.len() == 1
        && !g.edges.is_empty()
        && g.edges.iter().all(|e| e.is_unbounded() && e.nonlinear && e.potential.is_none())
        && matches!(g.vertices[0].condition, VertexCondition::NeumannKirchhoff | VertexCondition::Delta(_))
}

/// Seed a wave from the best available construction and polish it with Newton.
fn standing_wave(ctx: &Ctx, g: &MetricGraph, w: &WaveArgs) -> Outcome<StandingWave> {
    if !(w.omega < 0.0) {
        return Err(usage("--omega must be negative"));
    }
    if !(w.p > 0.0 && w.p <= 2.0) {
        return Err(usage("--p must lie in (0, 2]"));
    }
    let eps = (-w.omega).sqrt();
    let seed = if !w.placement.is_empty() {
        if w.p != 1.0 {
            return Err(usage("multi-pulse seeds are available for p = 1 only"));
        }
        let ids: Vec<&str> = w.placement.iter().map(String::as_str).collect();
        let pl = PulsePlacement::new(g, &ids)?;
        dtn_seed(g, &pl, eps, ctx.grid, DtnOptions { eps0: w.eps0, ..Default::default() })?
    } else if let Some(len) = tadpole_loop(g) {
        assemble_tadpole_wave(eps, w.p, len / 2.0, ctx.grid)?
    } else if is_star(g) {
        star_state(g, 0, w.omega, w.p, ctx.grid)?
    } else {
        let disc = wave_discretization(g, w.omega, ctx.grid)?;
        let u = soliton_seed(&disc, w.omega, w.p)?;
        StandingWave::from_profile(&disc, u, w.omega, w.p, Provenance::Analytic)
    };
    Ok(refine(&seed, ctx.newton())?)
}

fn wave_json(w: &StandingWave, g: &MetricGraph) -> Value {
    let vertex_values: serde_json::Map<String, Value> = g
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id.clone(), w.disc.vertex_unknown(i).map(|a| json!(w.u[a])).unwrap_or(Value::Null)))
        .collect();
    json!({
        "omega": w.omega,
        "p": w.p,
        "mass": w.mass,
        "energy": w.energy,
        "residual": w.residual,
        "sup_norm": w.sup_norm(),
        "provenance": serde_json::to_value(w.provenance).expect("provenance serializes"),
        "newton_iterations": w.iterations(),
        "vertex_values": vertex_values,
    })
}

fn solve(ctx: &Ctx, g: &MetricGraph, args: &WaveArgs) -> Outcome {
    let w = standing_wave(ctx, g, args)?;
    ctx.write("wave.csv", &w.profile().to_csv())?;
    ctx.write_json("wave.json", &wave_json(&w, g))?;
    println!("ω = {}, mass = {:.10}, energy = {:.10}, residual = {:.2e}", w.omega, w.mass, w.energy, w.residual);
    Ok(())
}

fn branch(ctx: &Ctx, g: &MetricGraph, args: &WaveArgs, opts: ContinuationOptions) -> Outcome {
    let w = standing_wave(ctx, g, args)?;
    let br = continue_branch(&w, opts)?;
    let folds = br.points.iter().filter(|p| p.fold).count();
    let m = br.masses();
    let increasing = m.windows(2).all(|x| x[1] >= x[0]);
    let decreasing = m.windows(2).all(|x| x[1] <= x[0]);
    ctx.write("branch.csv", &br.to_csv())?;
    ctx.write_json(
        "branch.json",
        &json!({
            "points": br.points.len(),
            "folds": folds,
            "mass_monotone": increasing || decreasing,
            "omega_range": [br.omegas().iter().cloned().fold(f64::INFINITY, f64::min), br.omegas().iter().cloned().fold(f64::NEG_INFINITY, f64::max)],
            "truncated": br.truncated,
        }),
    )?;
    println!("{} points, {} fold(s), mass monotone: {}", br.points.len(), folds, increasing || decreasing);
    if let Some(why) = &br.truncated {
        println!("stopped early: {why}");
    }
    Ok(())
}

fn stability(ctx: &Ctx, g: &MetricGraph, args: &WaveArgs) -> Outcome {
    let w = standing_wave(ctx, g, args)?;
    let rep = stability_report(&w, SlopeSource::Local)?;
    let mut s = rep.to_json();
    s.push('\n');
    ctx.write("stability.json", &s)?;
    println!("verdict: {:?}, n(L+) = {}, dμ/dω = {:.6e}", rep.verdict, rep.n_lplus, rep.slope.value);
    Ok(())
}

fn dtn(ctx: &Ctx, g: &MetricGraph, args: &WaveArgs) -> Outcome {
    if args.placement.is_empty() {
        return Err(usage("dtn needs --placement"));
    }
    if args.p != 1.0 {
        return Err(usage("the vertex asymptotics are available for p = 1 only"));
    }
    if !(args.omega < 0.0) {
        return Err(usage("--omega must be negative"));
    }
    let eps = (-args.omega).sqrt();
    let ids: Vec<&str> = args.placement.iter().map(String::as_str).collect();
    let pl = PulsePlacement::new(g, &ids)?;
    let report = consistency_check(&pl, g);
    if !report.is_ok() {
        ctx.write_json("dtn.json", &json!({ "eps": eps, "consistent": false, "violations": report.violations }))?;
        return Err(usage(format!("inconsistent placement: {}", report.violations.join("; "))));
    }
    let opts = DtnOptions { eps0: args.eps0, ..Default::default() };
    let guess = dirichlet_guess(&pl, g, eps, opts)?;
    let w = standing_wave(ctx, g, args)?;
    let (lp, _) = assemble_linearization(&w.disc, &w.u, w.omega, w.p)?;
    let morse = morse_index(&lp, Some(ZERO_BAND * linearization_scale(&w.u, w.omega, w.p)))?;
    let pulse_edges: Vec<usize> = pl.edges.iter().map(|e| e.edge).collect();
    let conc = concentration_ratio(&w, &pulse_edges)?;
    let balance = neumann_balance(&w, g, &pl)?;
    let vertices: Vec<Value> = guess
        .iter()
        .map(|&(v, predicted)| {
            let solved = w.disc.vertex_unknown(v).map(|a| w.u[a] / eps);
            let b = balance.iter().find(|b| b.vertex == v);
            json!({
                "vertex": g.vertices[v].id,
                "predicted": predicted,
                "solved": solved,
                "remainder_flux": b.map(|b| b.remainder_flux),
                "remainder_predicted": b.map(|b| b.remainder_predicted),
                "pulse_flux": b.map(|b| b.pulse_flux),
                "pulse_predicted": b.map(|b| b.pulse_predicted),
            })
        })
        .collect();
    ctx.write("dtn_wave.csv", &w.profile().to_csv())?;
    ctx.write_json(
        "dtn.json",
        &json!({
            "eps": eps,
            "consistent": true,
            "placement": args.placement,
            "vertices": vertices,
            "concentration": conc,
            "morse_index": morse,
            "wave": wave_json(&w, g),
        }),
    )?;
    println!("ε = {eps}, Morse index {morse}, concentration {conc:.12}");
    Ok(())
}

fn evolve(ctx: &Ctx, g: &MetricGraph, args: &WaveArgs, delta: f64, edges: &[String], opts: &EvolveOptions) -> Outcome {
    let w = standing_wave(ctx, g, args)?;
    let mut targets = Vec::new();
    for id in edges {
        targets.push(g.edge_index(id).ok_or_else(|| usage(format!("unknown edge `{id}`")))?);
    }
    let perturbed: Option<Vec<_>> = (delta != 0.0).then(|| {
        w.disc
            .unknown_coords()
            .iter()
            .zip(&w.u)
            .map(|((k, _), &u)| {
                let hit = targets.is_empty() || targets.contains(k);
                Complex64::new(if hit { u * (1.0 + delta) } else { u }, 0.0)
            })
            .collect()
    });
    let tr = evolve_from_wave(&w, perturbed.as_deref(), opts)?;
    ctx.write("trajectory.csv", &tr.to_csv())?;
    ctx.write_json(
        "evolve.json",
        &json!({
            "omega": w.omega,
            "t_final": tr.times.last(),
            "mass_drift_rate": tr.mass_drift_rate(),
            "energy_drift_rate": tr.energy_drift_rate(),
            "max_orbital_distance": tr.max_distance(),
            "retries": tr.retries,
        }),
    )?;
    println!(
        "max orbital distance {:.3e}, mass drift {:.2e}/t, energy drift {:.2e}/t",
        tr.max_distance(),
        tr.mass_drift_rate(),
        tr.energy_drift_rate()
    );
    Ok(())
}

fn groundstate(ctx: &Ctx, g: &MetricGraph, masses: &[f64], p: f64, max_iter: usize) -> Outcome {
    if masses.iter().any(|m| !(*m > 0.0)) {
        return Err(usage("masses must be positive"));
    }
    let disc = minimization_discretization(g, ctx.grid)?;
    // positive seed: a bump on every bounded edge, decaying tails
    let seed = disc.sample(|k, x| {
        let e = &g.edges[k];
        if e.is_unbounded() {
            0.2 * (-x).exp()
        } else {
            0.2 + (PI * x / e.length).sin()
        }
    });
    let d = MinimizeOptions::default();
    let opts = MinimizeOptions { max_iter, tol: ctx.tol.unwrap_or(d.tol), ..d };
    let runs: Vec<_> = ctx.pool()?.install(|| masses.par_iter().map(|&mu| minimize_at_mass(&disc, mu, p, &seed, &opts)).collect());
    let mut entries = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        let run = run?;
        ctx.write(&format!("groundstate_{i}.csv"), &run.to_csv())?;
        ctx.write(&format!("groundstate_profile_{i}.csv"), &disc.to_function_real(&run.u).to_csv())?;
        let bracket = energy_bracket(run.mu, p).ok();
        entries.push(json!({
            "mass": run.mu,
            "energy": run.energy,
            "omega": run.omega,
            "grad_norm": run.grad_norm(),
            "iterations": run.history.len(),
            "termination": format!("{:?}", run.termination).to_lowercase(),
            "half_line_level": bracket.map(|b| b.0),
            "line_level": bracket.map(|b| b.1),
            "beats_line_level": run.beats_line_level().ok(),
        }));
        println!("μ = {}: E = {:.10}, ω = {:.10}, {:?}", run.mu, run.energy, run.omega, run.termination);
    }
    let screen = nonexistence_screen(g).ok().map(|s| serde_json::to_value(s).expect("screen serializes"));
    ctx.write_json("groundstate.json", &json!({ "p": p, "runs": entries, "screen": screen }))
}

fn period_scan(ctx: &Ctx, p: f64, from: f64, to: f64, n: usize, frac: f64) -> Outcome {
    if !(from > 0.0 && from < to) || n < 2 {
        return Err(usage("need 0 < from < to and n ≥ 2"));
    }
    if !(p > 0.0 && p <= 2.0) || !(frac >= 0.0) {
        return Err(usage("need p in (0, 2] and slope-fraction ≥ 0"));
    }
    let rows: Vec<_> = ctx.pool()?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let value = from + (to - from) * i as f64 / (n - 1) as f64;
                let slope = frac * a_fn(value, p).max(0.0).sqrt();
                period_t(PeriodQuery::new(value, slope, p)).map(|t| (value, slope, t))
            })
            .collect()
    });
    let mut s = String::from("value,slope,period\n");
    for r in rows {
        let (v, q, t) = r?;
        s.push_str(&format!("{v:.12e},{q:.12e},{t:.12e}\n"));
    }
    ctx.write("period.csv", &s)
}
