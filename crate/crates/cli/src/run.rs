//! Command implementations.

use std::fs;
use std::io::Write;

use optctl::closedloop::{
    filippov_hull_condition, integrate, minimal_bf_monitor, nagumo_monitor, residual_check,
    sgf_system, Barrier, ClosedLoopSystem, IntegrateOptions, Trajectory,
};
use optctl::cqcheck::{CqOptions, CqReport};
use optctl::gallery::{get_gallery, list_gallery, GalleryEntry};
use optctl::linalg::sym_eigen;
use optctl::model::load_problem;
use optctl::regprobe::{
    boundedness_sweep, directional_derivative, holder_fit, jump_scan, lipschitz_quotient,
    point_lipschitz_estimate, ControllerMap, DEFAULT_RADII, DIVERGENCE_FACTOR, GROWTH_CAP,
};
use optctl::solver::{evaluate_controller, SolveStatus};
use optctl::{ParametricQp, SolveOptions};

use crate::output::{
    csv_f, render_analyze_csv, render_analyze_report, render_estimate, render_monitor,
};
use crate::{expr, AnalyzeArgs, CliError, GalleryArgs, ProbeArgs, SimulateArgs, SourceArgs};

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn runtime(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}

fn write_out(path: &str, content: &str) -> Result<(), CliError> {
    if path == "-" {
        std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| runtime(format!("cannot write to stdout: {e}")))
    } else {
        fs::write(path, content).map_err(|e| input(format!("cannot write {path}: {e}")))
    }
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let vals: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|_| input(format!("cannot parse {what} '{text}' as numbers")))?;
    if vals.is_empty() {
        return Err(input(format!("{what} is empty")));
    }
    Ok(vals)
}

fn parse_segment(text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| input(format!("segment '{text}' must be 'start:end'")))?;
    let a = parse_f64_list(a, "segment start")?;
    let b = parse_f64_list(b, "segment end")?;
    if a.len() != b.len() {
        return Err(input("segment endpoints have different dimensions"));
    }
    Ok((a, b))
}

fn load_program(source: &SourceArgs) -> Result<ParametricQp, CliError> {
    match (&source.gallery, &source.spec) {
        (Some(name), None) => {
            let entry = get_gallery::<f64>(name).map_err(|e| input(e.to_string()))?;
            entry.program.ok_or_else(|| {
                input(format!(
                    "gallery entry '{name}' has no loadable program (closed form only)"
                ))
            })
        }
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).map_err(|e| input(format!("cannot read {path}: {e}")))?;
            load_problem(&text).map_err(|e| input(format!("{path}: {e}")))
        }
        _ => Err(input("exactly one of --gallery or --spec is required")),
    }
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let program = load_program(&args.source)?;
    let x = parse_f64_list(&args.point, "--point")?;
    let opts = CqOptions::<f64>::default();
    let sol = evaluate_controller(&program, &x, &opts.solve)
        .map_err(|e| runtime(format!("solver failed: {e}")))?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(runtime(format!("program infeasible at {x:?}")));
        }
        other => return Err(runtime(format!("solver ended with status {other:?}"))),
    }
    let report = CqReport::analyze(&program, &x, &sol, &opts)
        .map_err(|e| runtime(format!("analysis failed: {e}")))?;
    let strongly_convex = {
        let q = program.q_at(&x).map_err(|e| runtime(e.to_string()))?;
        sym_eigen(&q).0[0] > opts.solve.eig_tol
    };
    let rendered = match args.format.as_str() {
        "report" => render_analyze_report(
            &program.name,
            (
                program.state_dim(),
                program.input_dim(),
                program.num_constraints(),
            ),
            &x,
            &sol,
            &report,
            strongly_convex,
        ),
        "csv" => render_analyze_csv(&report),
        other => return Err(input(format!("unknown format '{other}' (report | csv)"))),
    };
    write_out(&args.out, &rendered)
}

/// Resolve the controller map to probe: closed form by default when the
/// entry registers one, solver-backed otherwise or on request.
fn probe_map(
    source: &SourceArgs,
    source_map: &Option<String>,
    component: Option<usize>,
) -> Result<(ControllerMap<f64>, Option<usize>), CliError> {
    let opts = SolveOptions::default();
    match (&source.gallery, &source.spec) {
        (Some(name), None) => {
            let entry: GalleryEntry<f64> = get_gallery(name).map_err(|e| input(e.to_string()))?;
            let choice = source_map
                .as_deref()
                .unwrap_or(if entry.closed_form.is_some() {
                    "closed-form"
                } else {
                    "solver"
                });
            match choice {
                "closed-form" => {
                    let map = entry
                        .closed_form
                        .clone()
                        .ok_or_else(|| input(format!("'{name}' has no closed form")))?;
                    // the closed form may cover a single solver component;
                    // accept that component index (or none) and measure the
                    // scalar output
                    let comp = match (component, entry.closed_form_component) {
                        (None, _) => None,
                        (Some(c), Some(k)) if c == k + 1 => None,
                        (Some(c), None) if c >= 1 && c <= map.input_dim => Some(c - 1),
                        (Some(c), Some(k)) => {
                            return Err(input(format!(
                                "closed form of '{name}' computes component {} only, not {c}",
                                k + 1
                            )))
                        }
                        (Some(c), None) => {
                            return Err(input(format!("component {c} out of range for '{name}'")))
                        }
                    };
                    Ok((map, comp))
                }
                "solver" => {
                    let map = entry
                        .solver_map(opts)
                        .ok_or_else(|| input(format!("'{name}' has no loadable program")))?;
                    let comp = resolve_component(component, map.input_dim)?;
                    Ok((map, comp))
                }
                other => Err(input(format!(
                    "unknown --source-map '{other}' (closed-form | solver)"
                ))),
            }
        }
        (None, Some(_)) => {
            let program = load_program(source)?;
            let m = program.input_dim();
            let map = ControllerMap::from_program(program, opts);
            let comp = resolve_component(component, m)?;
            Ok((map, comp))
        }
        _ => Err(input("exactly one of --gallery or --spec is required")),
    }
}

fn resolve_component(component: Option<usize>, m: usize) -> Result<Option<usize>, CliError> {
    match component {
        None => Ok(None),
        Some(c) if c >= 1 && c <= m => Ok(Some(c - 1)),
        Some(c) => Err(input(format!("component {c} out of range (1..={m})"))),
    }
}

pub fn probe(args: ProbeArgs) -> Result<(), CliError> {
    let (map, comp) = probe_map(&args.source, &args.source_map, args.component)?;
    let radii = match &args.radii {
        Some(text) => parse_f64_list(text, "--radii")?,
        None => DEFAULT_RADII.to_vec(),
    };
    let center = || -> Result<Vec<f64>, CliError> {
        let text = args
            .center
            .as_ref()
            .ok_or_else(|| input("--center is required for this probe"))?;
        let x = parse_f64_list(text, "--center")?;
        if x.len() != map.state_dim {
            return Err(input(format!(
                "--center has dimension {}, map expects {}",
                x.len(),
                map.state_dim
            )));
        }
        Ok(x)
    };
    let rendered = match args.kind.as_str() {
        "pair-quotient" => {
            let family = args.pairs.as_deref().unwrap_or("parabola");
            if family != "parabola" {
                return Err(input(format!("unknown pair family '{family}' (parabola)")));
            }
            if map.state_dim != 2 {
                return Err(input("the parabola pair family needs a 2-state map"));
            }
            let svals = parse_f64_list(&args.pair_s, "--pair-s")?;
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = svals
                .iter()
                .map(|&s| (vec![s, s * s / 2.0], vec![s, 0.0]))
                .collect();
            let quotients = lipschitz_quotient(&map, &pairs, comp)
                .map_err(|e| runtime(format!("probe failed: {e}")))?;
            let mut out = format!(
                "#probe,pair-quotient,map={},pairs=parabola,component={}\n",
                map.name,
                comp.map_or("norm".to_string(), |c| (c + 1).to_string())
            );
            out.push_str("s,distance,quotient\n");
            for ((s, q), (p, qpt)) in svals.iter().zip(&quotients).zip(&pairs) {
                let dist = ((p[0] - qpt[0]).powi(2) + (p[1] - qpt[1]).powi(2)).sqrt();
                out.push_str(&format!("{},{},{}\n", csv_f(*s), csv_f(dist), csv_f(*q)));
            }
            out
        }
        "point-lipschitz" => {
            let est = point_lipschitz_estimate(
                &map,
                &center()?,
                &radii,
                args.samples,
                args.seed,
                comp,
                GROWTH_CAP,
            )
            .map_err(|e| runtime(format!("probe failed: {e}")))?;
            render_estimate(&est)
        }
        "holder" => {
            let est = holder_fit(&map, &center()?, &radii, args.samples, args.seed, comp)
                .map_err(|e| runtime(format!("probe failed: {e}")))?;
            render_estimate(&est)
        }
        "directional" => {
            let dir_text = args
                .direction
                .as_ref()
                .ok_or_else(|| input("--direction is required"))?;
            let v = parse_f64_list(dir_text, "--direction")?;
            let steps = match &args.steps {
                Some(text) => parse_f64_list(text, "--steps")?,
                None => vec![1e-2, 1e-3, 1e-4, 1e-5],
            };
            let est = directional_derivative(&map, &center()?, &v, &steps)
                .map_err(|e| runtime(format!("probe failed: {e}")))?;
            render_estimate(&est)
        }
        "jump" => {
            let seg_text = args
                .segment
                .as_ref()
                .ok_or_else(|| input("--segment is required"))?;
            let (a, b) = parse_segment(seg_text)?;
            if a.len() != map.state_dim {
                return Err(input(format!(
                    "segment has dimension {}, map expects {}",
                    a.len(),
                    map.state_dim
                )));
            }
            let est = jump_scan(&map, &a, &b, args.points, args.jump_tol, comp)
                .map_err(|e| runtime(format!("probe failed: {e}")))?;
            render_estimate(&est)
        }
        "boundedness" => {
            let est = boundedness_sweep(
                &map,
                &center()?,
                &radii,
                args.samples,
                args.seed,
                comp,
                DIVERGENCE_FACTOR,
            )
            .map_err(|e| runtime(format!("probe failed: {e}")))?;
            render_estimate(&est)
        }
        other => return Err(input(format!("unknown probe kind '{other}'"))),
    };
    write_out(&args.out, &rendered)
}

fn build_system(args: &SimulateArgs) -> Result<ClosedLoopSystem<f64>, CliError> {
    let opts = SolveOptions::default();
    if args.sgf {
        let obj_text = args
            .objective
            .as_ref()
            .ok_or_else(|| input("--sgf requires --objective"))?;
        let mut n = expr::max_var_index(obj_text).map_err(|e| input(e.to_string()))?;
        for c in &args.constraint {
            n = n.max(expr::max_var_index(c).map_err(|e| input(e.to_string()))?);
        }
        if n == 0 {
            return Err(input("the objective mentions no variables"));
        }
        let objective = expr::parse_poly(obj_text, n).map_err(|e| input(e.to_string()))?;
        let constraints: Result<Vec<_>, _> = args
            .constraint
            .iter()
            .map(|c| expr::parse_poly(c, n))
            .collect();
        let constraints = constraints.map_err(|e| input(e.to_string()))?;
        if args.alpha <= 0.0 {
            return Err(input("--alpha must be positive"));
        }
        sgf_system(&objective, &constraints, args.alpha, opts).map_err(|e| input(e.to_string()))
    } else if let Some(name) = &args.gallery {
        let entry: GalleryEntry<f64> = get_gallery(name).map_err(|e| input(e.to_string()))?;
        let dynamics = entry
            .dynamics
            .clone()
            .ok_or_else(|| input(format!("gallery entry '{name}' has no registered dynamics")))?;
        let controller = entry
            .closed_form
            .clone()
            .or_else(|| entry.solver_map(opts))
            .ok_or_else(|| input(format!("gallery entry '{name}' has no controller")))?;
        let n = dynamics.state_dim();
        let barriers = parse_barriers(&args.barrier, n, args.alpha)?;
        ClosedLoopSystem::new(name.clone(), dynamics, controller, barriers)
            .map_err(|e| input(e.to_string()))
    } else {
        Err(input("one of --gallery or --sgf is required"))
    }
}

fn parse_barriers(texts: &[String], n: usize, alpha: f64) -> Result<Vec<Barrier<f64>>, CliError> {
    texts
        .iter()
        .map(|t| {
            let h = expr::parse_poly(t, n).map_err(|e| input(e.to_string()))?;
            Ok(Barrier {
                h,
                alpha_gain: alpha,
            })
        })
        .collect()
}

fn trajectory_domain(
    traj: &Trajectory<f64>,
    explicit: &Option<String>,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    if let Some(text) = explicit {
        let (lo, hi) = parse_segment(text)?;
        return Ok((lo, hi));
    }
    let n = traj.states[0].len();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for s in &traj.states {
        for i in 0..n {
            lo[i] = lo[i].min(s[i]);
            hi[i] = hi[i].max(s[i]);
        }
    }
    for i in 0..n {
        let pad = (0.25 * (hi[i] - lo[i])).max(0.5);
        lo[i] -= pad;
        hi[i] += pad;
    }
    Ok((lo, hi))
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let system = build_system(&args)?;
    let x0 = parse_f64_list(&args.x0, "--x0")?;
    if x0.len() != system.dynamics.state_dim() {
        return Err(input(format!(
            "--x0 has dimension {}, system expects {}",
            x0.len(),
            system.dynamics.state_dim()
        )));
    }

    if let Some(curve_name) = &args.verify_curve {
        if args.gallery.as_deref() != Some("pl_nonunique") {
            return Err(input(
                "--verify-curve is defined for --gallery pl_nonunique",
            ));
        }
        let curve: fn(f64) -> Vec<f64> = match curve_name.as_str() {
            "y1" => |t| vec![0.5 * t, 0.0],
            "y2" => |t| vec![0.5 * t, t * t / 8.0],
            other => return Err(input(format!("unknown curve '{other}' (y1 | y2)"))),
        };
        let residual = residual_check(&system, curve, 0.0, args.t, args.h_fd)
            .map_err(|e| runtime(format!("residual check failed: {e}")))?;
        let tol = 1e-6;
        let mut out = String::new();
        out.push_str(&format!(
            "#verify,{},residual={},tol={},certified={}\n",
            curve_name,
            csv_f(residual),
            csv_f(tol),
            residual <= tol
        ));
        return write_out(&args.out, &out);
    }

    let traj = integrate(&system, &x0, args.t, args.dt, IntegrateOptions::default())
        .map_err(|e| runtime(e.to_string()))?;
    let mut out = traj.csv(&system.barriers);

    if let Some(kind) = &args.monitor {
        let h = match system.barriers.first() {
            Some(b) => b.h.clone(),
            None => {
                let texts = &args.barrier;
                if texts.is_empty() {
                    return Err(input("--monitor requires --barrier"));
                }
                expr::parse_poly(&texts[0], system.dynamics.state_dim())
                    .map_err(|e| input(e.to_string()))?
            }
        };
        let (lo, hi) = trajectory_domain(&traj, &args.domain)?;
        let rep = match kind.as_str() {
            "nagumo" => nagumo_monitor(
                &system,
                &h,
                Some(&traj),
                (&lo, &hi),
                args.monitor_samples,
                args.tol,
                args.seed,
            ),
            "minimal-bf" => minimal_bf_monitor(
                &system,
                &h,
                args.alpha,
                Some(&traj),
                (&lo, &hi),
                args.monitor_samples,
                args.band,
                args.tol,
                args.seed,
            ),
            "filippov" => filippov_hull_condition(
                &system,
                &h,
                (&lo, &hi),
                args.monitor_samples,
                args.ball_radius,
                args.hull_samples,
                args.tol,
                args.seed,
            ),
            other => return Err(input(format!("unknown monitor '{other}'"))),
        }
        .map_err(|e| runtime(format!("monitor failed: {e}")))?;
        out.push_str(&render_monitor(&rep));
    }
    write_out(&args.out, &out)
}

pub fn gallery(args: GalleryArgs) -> Result<(), CliError> {
    if args.list {
        return list();
    }
    let name = args
        .name
        .as_ref()
        .ok_or_else(|| input("--name (or --list) is required"))?;
    let entry: GalleryEntry<f64> = get_gallery(name).map_err(|e| input(e.to_string()))?;
    let source = SourceArgs {
        gallery: Some(name.clone()),
        spec: None,
    };
    let (map, _) = probe_map(&source, &args.source_map, None)?;
    let comp_label = match (entry.closed_form_component, map.input_dim) {
        (Some(k), 1) => format!("u{}", k + 1),
        (_, 1) => "u1".to_string(),
        _ => String::new(),
    };

    let mut out = String::new();
    if let Some(grid) = args.grid {
        if map.state_dim != 2 {
            return Err(input("--grid exports need a 2-state entry"));
        }
        if grid < 2 {
            return Err(input("--grid must be at least 2"));
        }
        let range = parse_f64_list(&args.range, "--range")?;
        if range.len() != 2 || range[0] >= range[1] {
            return Err(input("--range must be 'lo,hi' with lo < hi"));
        }
        let (lo, hi) = (range[0], range[1]);
        out.push_str(&header_row(2, map.input_dim, &comp_label));
        let step = (hi - lo) / (grid - 1) as f64;
        for i in 0..grid {
            let x1 = lo + step * i as f64;
            for j in 0..grid {
                let x2 = lo + step * j as f64;
                out.push_str(&value_row(&map, &[x1, x2]));
            }
        }
    } else if let Some(seg) = &args.segment {
        let (a, b) = parse_segment(seg)?;
        if a.len() != map.state_dim {
            return Err(input(format!(
                "segment has dimension {}, entry expects {}",
                a.len(),
                map.state_dim
            )));
        }
        if args.points < 2 {
            return Err(input("--points must be at least 2"));
        }
        out.push_str(&header_row(map.state_dim, map.input_dim, &comp_label));
        let nf = (args.points - 1) as f64;
        for k in 0..args.points {
            let t = k as f64 / nf;
            let x: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(&ai, &bi)| ai + t * (bi - ai))
                .collect();
            out.push_str(&value_row(&map, &x));
        }
    } else {
        return Err(input("one of --grid or --segment is required"));
    }
    write_out(&args.out, &out)
}

fn header_row(n: usize, m: usize, comp_label: &str) -> String {
    let mut cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    if !comp_label.is_empty() {
        cols.push(comp_label.to_string());
    } else {
        cols.extend((1..=m).map(|i| format!("u{i}")));
    }
    format!("{}\n", cols.join(","))
}

fn value_row(map: &ControllerMap<f64>, x: &[f64]) -> String {
    let mut cells: Vec<String> = x.iter().map(|&v| csv_f(v)).collect();
    match map.eval(x) {
        Ok(u) => cells.extend(u.iter().map(|&v| csv_f(v))),
        // infeasible states leave explicit NaN cells rather than holes
        Err(_) => cells.extend((0..map.input_dim).map(|_| "nan".to_string())),
    }
    format!("{}\n", cells.join(","))
}

pub fn list() -> Result<(), CliError> {
    let mut out = String::new();
    for (name, notes) in list_gallery() {
        out.push_str(&format!("{name:<22} {notes}\n"));
    }
    write_out("-", &out)
}
