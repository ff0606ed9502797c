//! One function per subcommand. Each fills the defaults it uses into the
//! document, so the report carries the resolved configuration.

use ifsconj::attractor::{chaos_game, chaos_game_diag};
use ifsconj::config::Document;
use ifsconj::conjugacy1d::{
    build_linear_conjugacy, verify_conjugacy, verify_on_points, weak_conjugacy_linear, ConjugacyReport,
    Homeomorphism1D,
};
use ifsconj::ifs::{compose_orbit, effective_slope, orbit_trajectory, IfsDescriptor};
use ifsconj::linearization::{
    classify_sequence_fate, decay_bound_check, koenigs_conjugacy, linear_part, DEFAULT_DEPTH,
};
use ifsconj::maps::{MapKind, ScalarMap, WorkingInterval};
use ifsconj::multidim::{
    box_grid, componentwise_conjugacy, diag_compose, similarity_conjugacy, DiagonalMap, SimilarityIfs,
    VectorHomeomorphism,
};
use ifsconj::stability::{hyperbolicity_audit, ifs_distance, perturbation_probe, Level};
use ifsconj::{IfsError, Result};
use serde_json::{json, Value};

use crate::output::{num, opt, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Ok,
    Obstructed,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Ok => "ok",
            Status::Obstructed => "obstructed",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass | Status::Ok => 0,
            Status::Fail => 1,
            Status::Obstructed => 2,
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub table: Table,
}

pub const DEFAULT_ANCHOR: f64 = 1.0;
pub const DEFAULT_N_MAX: usize = 400;
pub const DEFAULT_X0: f64 = 0.1;
pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_BURN_IN: usize = 100;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn pass_or_fail(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn linear_slope(m: &ScalarMap, field: &str) -> Result<f64> {
    m.linear_slope()
        .ok_or_else(|| IfsError::UnsupportedMap(format!("`{field}` must be a linear map for this command")))
}

/// A conjugacy candidate with the maps it should intertwine.
struct Built {
    h: Homeomorphism1D,
    detail: Value,
    report: ConjugacyReport,
}

/// Either `f`/`g` (two single maps) or `maps`/`target` with `sequence` and `n`.
fn build_and_verify(doc: &mut Document, grid: usize, tolerance: f64) -> Result<Built> {
    let anchor = *doc.anchor.get_or_insert(DEFAULT_ANCHOR);
    let bridge = *doc.bridge.get_or_insert_with(Default::default);
    let interval = doc.interval()?;
    if doc.f.is_some() || doc.g.is_some() {
        let (f, g) = (doc.f_map()?, doc.g_map()?);
        let (k, m) = (linear_slope(&f, "f")?, linear_slope(&g, "g")?);
        let h = build_linear_conjugacy(k, m, anchor, bridge)?;
        let report = verify_conjugacy(&f, &g, &h, interval, grid, tolerance)?;
        return Ok(Built { detail: json!({"k": k, "m": m}), h, report });
    }
    let (f, g) = (doc.ifs()?, doc.target_ifs()?);
    let sigma = doc.sequence()?;
    let n = Document::require(doc.n, "n")?;
    let w = weak_conjugacy_linear(&f, &g, &sigma, n, anchor, bridge)?;
    let report = verify_on_points(
        |x| compose_orbit(&f, &sigma, n, x).ok(),
        |y| compose_orbit(&g, &sigma, n, y).ok(),
        &w.h,
        interval.grid(grid),
        tolerance,
    )?;
    let detail = json!({"k_star": w.k_star, "m_star": w.m_star, "interval": w.interval, "n": n});
    Ok(Built { h: w.h, detail, report })
}

fn residual_table(r: &ConjugacyReport) -> Table {
    let mut t = Table::new(["x", "h_x", "residual"]);
    for ((x, hx), res) in r.grid.iter().zip(&r.h_values).zip(&r.residuals) {
        t.push(vec![num(*x), opt(*hx), opt(*res)]);
    }
    t
}

fn residual_summary(r: &ConjugacyReport) -> Value {
    json!({
        "verdict": r.verdict,
        "residual_sup": r.residual_sup,
        "abs_residual_sup": r.abs_residual_sup,
        "tolerance": r.tolerance,
        "worst_point": r.worst_point,
        "escapes": r.escapes,
        "grid_size": r.grid.len(),
    })
}

pub fn conjugacy(doc: &mut Document, grid: usize, tolerance: f64) -> Result<Outcome> {
    let b = build_and_verify(doc, grid, tolerance)?;
    let result = json!({"construction": b.detail, "h": b.h, "check": residual_summary(&b.report)});
    Ok(Outcome { status: Status::Ok, result, table: residual_table(&b.report) })
}

pub fn verify(doc: &mut Document, grid: usize, tolerance: f64) -> Result<Outcome> {
    let b = build_and_verify(doc, grid, tolerance)?;
    let mut result = residual_summary(&b.report);
    result["construction"] = b.detail;
    Ok(Outcome { status: pass_or_fail(b.report.passed()), result, table: residual_table(&b.report) })
}

pub fn orbit(doc: &mut Document) -> Result<Outcome> {
    let sigma = doc.sequence()?;
    let n = Document::require(doc.n, "n")?;
    if doc.is_diagonal() {
        let maps = doc.diag_maps()?;
        let m = maps[0].dim();
        let points = doc.points.get_or_insert_with(|| vec![vec![1.0; m]]).clone();
        let mut header = vec!["point".to_string(), "n".to_string()];
        header.extend((1..=m).map(|i| format!("x{i}")));
        let mut t = Table::new(header);
        let symbols = sigma.prefix_checked(n, maps.len())?;
        let mut finals = Vec::new();
        for (p, x) in points.iter().enumerate() {
            let mut row = vec![(p + 1).to_string(), "0".into()];
            row.extend(x.iter().map(|v| num(*v)));
            t.push(row);
            let mut y = x.clone();
            for (step, &sym) in (1..).zip(&symbols) {
                y = maps[sym - 1].apply(&y)?;
                let mut row = vec![(p + 1).to_string(), step.to_string()];
                row.extend(y.iter().map(|v| num(*v)));
                t.push(row);
            }
            finals.push(y);
        }
        let result = json!({"dimension": m, "n": n, "final": finals});
        return Ok(Outcome { status: Status::Ok, result, table: t });
    }
    let f = doc.ifs()?;
    let x = *doc.x.get_or_insert(1.0);
    let traj = orbit_trajectory(&f, &sigma, n, x)?;
    let mut t = Table::new(["n", "x_n"]);
    t.push(vec!["0".into(), num(x)]);
    for (i, v) in traj.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), num(*v)]);
    }
    let slope = f.linear_slopes().ok().and_then(|_| effective_slope(&f, &sigma, n).ok());
    let decay = decay_bound_check(&f, &sigma, n, x).ok();
    let result = json!({
        "n": n,
        "x": x,
        "final": traj.last().copied().unwrap_or(x),
        "effective_slope": slope,
        "decay_bound": decay,
    });
    Ok(Outcome { status: Status::Ok, result, table: t })
}

pub fn linearize(doc: &mut Document, neighborhood: f64) -> Result<Outcome> {
    let f = doc.ifs()?;
    let depth = *doc.n_max.get_or_insert(DEFAULT_DEPTH);
    let lp = linear_part(&f)?;
    let mut t = Table::new(["map", "slope", "interval", "koenigs_depth", "koenigs_residual"]);
    let mut koenigs = Vec::new();
    for (i, m) in f.maps().iter().enumerate() {
        let mut row = vec![(i + 1).to_string(), num(lp.slopes[i]), lp.interval_tags[i].label().to_string()];
        if m.linear_slope().is_some() || lp.interval_tags[i].is_boundary() {
            row.extend([String::new(), String::new()]);
            koenigs.push(json!({"map": i + 1, "skipped": "linear or boundary slope"}));
        } else {
            match koenigs_conjugacy(m, neighborhood, depth) {
                Ok(k) => {
                    row.extend([k.depth.to_string(), num(k.residual_sup)]);
                    koenigs.push(json!({
                        "map": i + 1,
                        "multiplier": k.multiplier,
                        "radius": k.radius,
                        "depth": k.depth,
                        "residual_sup": k.residual_sup,
                        "residual_points": k.residual_points,
                    }));
                }
                Err(e) if !e.is_obstruction() => {
                    row.extend([String::new(), String::new()]);
                    koenigs.push(json!({"map": i + 1, "error": e.to_string()}));
                }
                Err(e) => return Err(e),
            }
        }
        t.push(row);
    }
    let result = json!({"linear_part": lp, "koenigs": koenigs});
    Ok(Outcome { status: Status::Ok, result, table: t })
}

/// Largest declared Lipschitz constant among the perturbations of `f`.
fn declared_epsilon(f: &IfsDescriptor) -> f64 {
    f.maps()
        .iter()
        .map(|m| match m.kind() {
            MapKind::LinearPlusLipschitz { perturbation, .. } => perturbation.epsilon(),
            _ => 0.0,
        })
        .fold(0.0, f64::max)
}

pub fn classify(doc: &mut Document) -> Result<Outcome> {
    let f = doc.ifs()?;
    let sigma = doc.sequence()?;
    let n_max = *doc.n_max.get_or_insert(DEFAULT_N_MAX);
    let x0 = *doc.x0.get_or_insert(DEFAULT_X0);
    let eps = *doc.epsilon.get_or_insert(declared_epsilon(&f));
    let r = classify_sequence_fate(&f, &sigma, n_max, x0, eps)?;
    let mut t = Table::new(["n", "n1", "n2", "ratio", "orbit_F", "orbit_G", "bound"]);
    for s in &r.samples {
        t.push(vec![
            s.n.to_string(),
            s.n1.to_string(),
            s.n2.to_string(),
            opt(s.ratio),
            num(s.orbit_f),
            num(s.orbit_g),
            num(s.bound),
        ]);
    }
    Ok(Outcome { status: Status::Ok, result: to_value(&r), table: t })
}

fn point_header(m: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    h.extend(["residual".to_string(), "bound".to_string()]);
    h
}

pub fn multidim(doc: &mut Document, per_axis: usize, tolerance: f64) -> Result<Outcome> {
    let maps = doc.diag_maps()?;
    let m = maps[0].dim();
    let sigma = doc.sequence()?;
    let n = Document::require(doc.n, "n")?;
    let radius = doc.interval()?.radius;
    let points = doc.points.get_or_insert_with(|| box_grid(m, per_axis, radius)).clone();
    let mut t = Table::new(point_header(m));
    let mut worst = (0.0f64, Vec::new());
    let mut all_ok = true;
    let push = |t: &mut Table, x: &[f64], r: f64, b: f64| {
        let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        row.extend([num(r), num(b)]);
        t.push(row);
    };

    if let Some(spec) = doc.similarity.clone() {
        let s = SimilarityIfs::from_rows(maps, &spec.a)?;
        let mut warning = None;
        for x in &points {
            let r = similarity_conjugacy(&s, &sigma, n, x)?;
            all_ok &= r.within_bound();
            if r.residual > worst.0 || worst.1.is_empty() {
                worst = (worst.0.max(r.residual), x.clone());
            }
            warning = warning.or(r.warning.clone());
            push(&mut t, x, r.residual, r.bound);
        }
        let result = json!({
            "mode": "similarity",
            "homeomorphism": s.homeomorphism(),
            "conjugated": s.conjugated().iter().map(|a| a.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "condition": s.condition(),
            "warning": warning,
            "residual_sup": worst.0,
            "worst_point": worst.1,
            "points": points.len(),
            "passed": all_ok,
        });
        return Ok(Outcome { status: pass_or_fail(all_ok), result, table: t });
    }

    let g = doc.diag_target()?;
    let anchor = *doc.anchor.get_or_insert(DEFAULT_ANCHOR);
    let bridge = *doc.bridge.get_or_insert_with(Default::default);
    let hypothesis = *doc.hypothesis.get_or_insert_with(Default::default);
    let h = componentwise_conjugacy(&maps, &g, &sigma, n, anchor, bridge, hypothesis)?;
    for x in &points {
        let r = vector_residual(&maps, &g, &h, &sigma, n, x)?;
        all_ok &= r <= tolerance;
        if r > worst.0 || worst.1.is_empty() {
            worst = (worst.0.max(r), x.clone());
        }
        push(&mut t, x, r, tolerance);
    }
    let result = json!({
        "mode": "componentwise",
        "homeomorphism": h,
        "residual_sup": worst.0,
        "worst_point": worst.1,
        "tolerance": tolerance,
        "points": points.len(),
        "passed": all_ok,
    });
    Ok(Outcome { status: pass_or_fail(all_ok), result, table: t })
}

fn vector_residual(
    f: &[DiagonalMap],
    g: &[DiagonalMap],
    h: &VectorHomeomorphism,
    sigma: &ifsconj::SymbolSequence,
    n: usize,
    x: &[f64],
) -> Result<f64> {
    let lhs = h.evaluate(&diag_compose(f, sigma, n, x)?)?;
    let rhs = diag_compose(g, sigma, n, &h.evaluate(x)?)?;
    Ok(lhs.iter().zip(&rhs).map(|(l, r)| (l - r).abs() / (1.0 + r.abs())).fold(0.0, f64::max))
}

pub fn distance(doc: &mut Document, level: u8, grid: usize) -> Result<Outcome> {
    let (f, g) = (doc.ifs()?, doc.target_ifs()?);
    let interval = doc.interval()?;
    let r = ifs_distance(&f, &g, Level::from_index(level)?, interval, grid)?;
    let (i, j) = r.argmax_pair.unwrap_or((1, 1));
    let t = gap_table(f.map(i), g.map(j), interval, grid);
    let mut result = to_value(&r);
    result["value"] = json!(r.value());
    result["plotted_pair"] = json!([i, j]);
    Ok(Outcome { status: Status::Ok, result, table: t })
}

/// Pointwise gaps behind `rho0` and `rho1` for one pair of maps.
fn gap_table(f: &ScalarMap, g: &ScalarMap, interval: WorkingInterval, grid: usize) -> Table {
    let mut t = Table::new(["x", "map_gap", "inverse_gap", "derivative_gap"]);
    for x in interval.grid(grid) {
        let inv = match (f.inverse(x), g.inverse(x)) {
            (Some(a), Some(b)) => num((a - b).abs()),
            _ => String::new(),
        };
        t.push(vec![
            num(x),
            num((f.eval(x) - g.eval(x)).abs()),
            inv,
            num((f.derivative_at(x) - g.derivative_at(x)).abs()),
        ]);
    }
    t
}

pub fn audit(doc: &mut Document) -> Result<Outcome> {
    let f = doc.ifs()?;
    let a = hyperbolicity_audit(&f, doc.interval()?)?;
    let mut t = Table::new(["map", "fixed_point", "derivative", "margin", "verdict"]);
    for e in &a.entries {
        let verdict = to_value(&e.verdict);
        t.push(vec![
            e.map.to_string(),
            num(e.fixed_point),
            num(e.derivative),
            num(e.margin),
            verdict.as_str().unwrap_or_default().to_string(),
        ]);
    }
    let status = if a.necessary_condition_holds { Status::Pass } else { Status::Obstructed };
    let mut result = to_value(&a);
    result["verdict"] = json!(if a.necessary_condition_holds { "hyperbolic" } else { "non-hyperbolic" });
    Ok(Outcome { status, result, table: t })
}

pub fn probe(doc: &mut Document, delta: f64, trials: usize, seed: u64) -> Result<Outcome> {
    let f = doc.ifs()?;
    let r = perturbation_probe(&f, delta, trials, seed, doc.interval()?)?;
    let mut t = Table::new(["trial", "attempts", "matched_distance", "conjugable", "max_residual", "passed"]);
    for row in &r.rows {
        t.push(vec![
            row.trial.to_string(),
            row.attempts.to_string(),
            num(row.matched_distance),
            row.conjugable.to_string(),
            num(row.max_residual),
            row.passed.to_string(),
        ]);
    }
    Ok(Outcome { status: Status::Ok, result: to_value(&r), table: t })
}

pub fn attractor(doc: &mut Document, seed: u64) -> Result<Outcome> {
    let iterations = *doc.iterations.get_or_insert(DEFAULT_ITERATIONS);
    let burn_in = *doc.burn_in.get_or_insert(DEFAULT_BURN_IN);
    let sample = if doc.is_diagonal() {
        let maps = doc.diag_maps()?;
        let m = maps[0].dim();
        let x0 = doc.points.get_or_insert_with(|| vec![vec![0.0; m]])[0].clone();
        chaos_game_diag(&maps, iterations, burn_in, seed, &x0)?
    } else {
        let f = doc.ifs()?;
        let x0 = *doc.x0.get_or_insert(0.0);
        chaos_game(&f, iterations, burn_in, seed, x0, doc.interval()?)?
    };
    let header: Vec<String> = if sample.dimension == 1 {
        vec!["x".into()]
    } else {
        (1..=sample.dimension).map(|i| format!("x{i}")).collect()
    };
    let mut t = Table::new(header);
    for p in &sample.points {
        t.push(p.iter().map(|v| num(*v)).collect());
    }
    Ok(Outcome { status: Status::Ok, result: to_value(&sample), table: t })
}
