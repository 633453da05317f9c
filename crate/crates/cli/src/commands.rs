use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use attractor_core::analytic::{
    blowout_coupling, coupled_quadrilateral, lozi_bound, lozi_geometry, lozi_region_check, skew_tent_gamma, tent_bands,
};
use attractor_core::attractor::{basin_probe, compute_attractor, AttractorOptions, Seed};
use attractor_core::continuation::{
    bcnf_border_collision_curve, bcnf_curve_b_polyline, bcnf_cycle, classify_sweep, continue_attractor, coupled_sweep, default_seed,
    lyapunov_surface, parse_itinerary, solve_cycle, ContinuationOptions, CoupledLabel, CoupledOptions, Estimator, Grid2, ParameterPath,
    SweepOptions, Threshold,
};
use attractor_core::geometry::{connected_components, semi_distance_with, set_from_str, set_to_csv, CompactSet, Dim, Point};
use attractor_core::maps::MapSpec;

use crate::config::{self, axis, BandsJob, ContinueJob, CurveJob, CurveName, SweepJob, SweepKind};
use crate::error::{CliError, CliResult};
use crate::{AttractorArgs, CycleArgs, JobArgs};

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::validation(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}

/// Empty for non-finite values, so CSV cells never hold `NaN` or `inf`.
fn cell(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn read_set(path: &Path) -> CliResult<CompactSet> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    set_from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn hausdorff(a: &Path, b: &Path, step: Option<f64>) -> CliResult<()> {
    let (x, y) = (read_set(a)?, read_set(b)?);
    let ab = semi_distance_with(&x, &y, step)?;
    let ba = semi_distance_with(&y, &x, step)?;
    let v = json!({
        "semi_ab": ab.value,
        "semi_ba": ba.value,
        "hausdorff": ab.value.max(ba.value),
        "error_bar": ab.error_bar.max(ba.error_bar),
    });
    emit(None, &json_text(&v))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn attractor(args: &AttractorArgs, rng_seed: u64) -> CliResult<()> {
    let map = args.map.map()?;
    let seed = match &args.x0 {
        Some(v) => {
            let p = Point::from_slice(v)?;
            if p.dim() != map.dim() {
                return Err(CliError::validation(format!("--x0 has {} coordinates, {} needs {}", v.len(), map.family(), map.dim().len())));
            }
            Seed::Point(p)
        }
        None => default_seed(&map),
    };
    if !(args.escape_radius > 0.0) || args.n_samples < 2 {
        return Err(CliError::validation("escape radius must be positive and n_samples at least 2"));
    }
    let opts = AttractorOptions {
        n_transient: args.n_transient,
        n_samples: args.n_samples,
        lyapunov_steps: args.lyapunov_steps,
        escape_radius: args.escape_radius,
    };
    let est = compute_attractor(&map, &seed, &opts)?;
    let mut meta = est.metadata_json();
    meta["map"] = serde_json::to_value(map).expect("maps serialise");
    meta["x0"] = json!(args.x0);
    meta["seed"] = json!(rng_seed);
    if let Some(cloud) = &est.points {
        let (lo, hi) = cloud.bounding_box();
        let n = map.dim().len();
        meta["hull"] = json!({"lo": &lo[..n], "hi": &hi[..n]});
        if let Some(r) = args.basin_radius {
            meta["basin_radius"] = json!(r);
            meta["basin_fraction"] = json!(basin_probe(&map, &est, r, args.basin_probes, 1000, rng_seed)?);
        }
        std::fs::write(with_suffix(&args.output, "csv"), set_to_csv(&CompactSet::Cloud(cloud.clone()), 1.0)?)?;
    }
    let text = json_text(&meta);
    std::fs::write(with_suffix(&args.output, "json"), &text)?;
    emit(None, &text)?;
    if est.escaped {
        return Err(CliError::Escape(format!("{map} from {:?}", args.x0)));
    }
    Ok(())
}

pub fn bands(j: &JobArgs) -> CliResult<()> {
    let job: BandsJob = config::load(j.config.as_deref())?;
    job.validate()?;
    let rows: Vec<CliResult<String>> = job
        .slopes()
        .into_par_iter()
        .map(|s| {
            let u = tent_bands(s)?;
            let hull = u.hull();
            let gap = u.gaps().into_iter().fold(f64::INFINITY, f64::min);
            let orbit = if job.orbit_samples >= 2 {
                let map = MapSpec::tent(s)?;
                let opts = AttractorOptions::for_dim(Dim::One).with_samples(job.orbit_transient, job.orbit_samples);
                let opts = AttractorOptions { lyapunov_steps: 0, ..opts };
                let est = compute_attractor(&map, &default_seed(&map), &opts)?;
                match est.set() {
                    Some(c) => connected_components(&c, job.gap_tol)?.len().to_string(),
                    None => String::new(),
                }
            } else {
                String::new()
            };
            Ok(format!("{s},{},{},{},{},{orbit}\n", u.count(), hull.lo, hull.hi, cell(gap)))
        })
        .collect();
    let mut out = String::from("s,bands,hull_lo,hull_hi,min_gap,orbit_bands\n");
    for r in rows {
        out.push_str(&r?);
    }
    emit(j.output.as_deref(), &out)
}

pub fn quad(s: f64, omega: f64) -> CliResult<()> {
    MapSpec::coupled_skew_tent(s, omega)?;
    let q = coupled_quadrilateral(s, omega)?;
    let v = json!({
        "s": s,
        "omega": omega,
        "vertices": q.polygon.vertices(),
        "area": q.polygon.area(),
        "hypotheses_hold": q.hypotheses_hold(),
        "warnings": q.warnings,
        "gamma": skew_tent_gamma(s),
        "blowout_omega": finite(blowout_coupling(s)),
        "diagonal_omega": 1.0 / (2.0 * s),
    });
    emit(None, &json_text(&v))
}

pub fn lozi(a: f64, b: f64, ns: &[usize]) -> CliResult<()> {
    MapSpec::lozi(a, b)?;
    let region = lozi_region_check(a, b);
    let mut v = json!({"a": a, "b": b, "region": region.to_json(), "geometry": Value::Null});
    if region.holds {
        let g = lozi_geometry(a, b)?;
        v["geometry"] = g.to_json();
        v["bounds"] = ns.iter().map(|&n| json!({"n": n, "bound": lozi_bound(&g, n)})).collect();
    }
    emit(None, &json_text(&v))
}

pub fn cycle(args: &CycleArgs) -> CliResult<()> {
    let map = args.map.map()?;
    let word = parse_itinerary(&args.itinerary)?;
    let c = solve_cycle(&map, &word)?;
    let mut v = c.to_json();
    v["map"] = serde_json::to_value(map).expect("maps serialise");
    v["period"] = json!(c.period());
    v["trace"] = json!(c.monodromy.trace());
    v["det"] = json!(c.monodromy.determinant());
    v["saddle"] = json!(c.is_saddle());
    emit(None, &json_text(&v))
}

pub fn curve(j: &JobArgs) -> CliResult<()> {
    let job: CurveJob = config::load(j.config.as_deref())?;
    let plan = job.plan()?;
    let d = job.deltas();
    let along = axis(plan.along, job.samples);
    let bracket = (plan.bracket[0], plan.bracket[1]);
    let name = match job.curve {
        CurveName::A => "a",
        CurveName::B => "b",
        CurveName::C => "c",
        CurveName::D => "d",
    };
    let mut v = json!({"curve": name, "delta_L": d.left, "delta_R": d.right});
    match job.curve {
        CurveName::A => {
            parse_itinerary(&job.itinerary)?;
            v["itinerary"] = json!(job.itinerary);
            v["points"] = json!(bcnf_border_collision_curve(&job.itinerary, d, &along, bracket));
        }
        CurveName::B => v["points"] = json!(bcnf_curve_b_polyline(d, &along, bracket)),
        CurveName::C | CurveName::D => {
            // c: τ_L scans at fixed τ_R; d: τ_R scans at fixed τ_L.
            let vary = if job.curve == CurveName::C { "tau_L" } else { "tau_R" };
            let values = axis_between(plan.scan, job.scan_steps + 1);
            let mut opts = ContinuationOptions::for_dim(Dim::Two);
            opts.attractor = AttractorOptions { lyapunov_steps: 0, ..opts.attractor.with_samples(job.n_transient, job.n_samples) };
            opts.refine_min_step = Some(plan.refine_min_step);
            opts.threshold = Threshold::Fixed(job.jump_threshold);
            let found: Vec<CliResult<Option<[f64; 4]>>> = along
                .par_iter()
                .map(|&fixed| {
                    let base = if vary == "tau_L" { d.map(values[0], fixed) } else { d.map(fixed, values[0]) };
                    base.validate()?;
                    let path = ParameterPath::along(&base, vary, &values)?;
                    let mut opts = opts.clone();
                    let [x, y] = rrl_seed(&base);
                    opts.initial_seed = Some(Seed::Point(Point::new2(x, y)?));
                    let res = continue_attractor(&path, &opts)?;
                    Ok(res.jumps().first().map(|&i| {
                        let (p, q) = (res.maps[i].params(), res.maps[i + 1].params());
                        [
                            0.5 * (p[0] + q[0]),
                            0.5 * (p[2] + q[2]),
                            if vary == "tau_L" { p[0] } else { p[2] },
                            if vary == "tau_L" { q[0] } else { q[2] },
                        ]
                    }))
                })
                .collect();
            let mut points = Vec::new();
            let mut brackets = Vec::new();
            for f in found {
                if let Some([tl, tr, lo, hi]) = f? {
                    points.push([tl, tr]);
                    brackets.push([lo, hi]);
                }
            }
            v["vary"] = json!(vary);
            v["scan"] = json!(plan.scan);
            v["points"] = json!(points);
            v["brackets"] = json!(brackets);
        }
    }
    emit(j.output.as_deref(), &json_text(&v))
}

/// A point on the unstable manifold of the `RRL` saddle, or the origin when
/// that cycle is not an admissible saddle. A single orbit follows one
/// attractor where a seed cloud could straddle coexisting ones.
fn rrl_seed(map: &MapSpec) -> [f64; 2] {
    match bcnf_cycle("RRL", map) {
        Ok(c) if c.admissible => match c.unstable_direction() {
            Some((_, v)) => [c.points[0][0] + 1e-4 * v[0], c.points[0][1] + 1e-4 * v[1]],
            None => [0.0, 0.0],
        },
        _ => [0.0, 0.0],
    }
}

/// `n` points from `r[0]` to `r[1]`, in that order.
fn axis_between(r: [f64; 2], n: usize) -> Vec<f64> {
    (0..n).map(|k| if k == n - 1 { r[1] } else { r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64 }).collect()
}

pub fn sweep(j: &JobArgs, surface: bool) -> CliResult<()> {
    let job: SweepJob = config::load(j.config.as_deref())?;
    job.validate()?;
    let mut out = String::new();
    match job.kind {
        SweepKind::Bcnf => {
            let grid = Grid2 { x: (job.tau_l[0], job.tau_l[1]), nx: job.nx, y: (job.tau_r[0], job.tau_r[1]), ny: job.ny };
            let opts = SweepOptions {
                deltas: job.deltas(),
                n_transient: job.n_transient,
                n_samples: job.n_samples,
                lyapunov_steps: job.lyapunov_steps,
                ..Default::default()
            };
            let cells = if surface { lyapunov_surface(&grid, &opts)? } else { classify_sweep(&grid, &opts)? };
            out.push_str("tau_L,tau_R,label,lyap1,lyap2\n");
            for c in &cells {
                let l = c.lyapunovs();
                let get = |k: usize| l.get(k).map_or(String::new(), |v| cell(*v));
                writeln!(out, "{},{},{},{},{}", c.tau_l, c.tau_r, c.label.as_str(), get(0), get(1)).expect("writing to a String");
            }
        }
        SweepKind::Coupled => {
            if surface {
                return Err(CliError::validation("lyap-surface needs a bcnf job"));
            }
            let opts = CoupledOptions { grid_n: job.grid_n, n_iter: job.n_iter, off_diagonal_tol: job.off_diagonal_tol };
            let cells = coupled_sweep(&axis(job.s, job.ns), &axis(job.omega, job.nomega), &opts)?;
            out.push_str("s,omega,label,off_diagonal\n");
            for c in &cells {
                writeln!(out, "{},{},{},{}", c.s, c.omega, c.label.as_str(), c.off_diagonal).expect("writing to a String");
            }
            for s in axis(job.s, job.ns) {
                let first = cells.iter().find(|c| c.s == s && c.label == CoupledLabel::Diagonal).map(|c| c.omega);
                eprintln!("s = {s}: diagonal from omega = {first:?}, 1/(2s) = {}", 1.0 / (2.0 * s));
            }
        }
    }
    emit(j.output.as_deref(), &out)
}

pub fn continuation(j: &JobArgs) -> CliResult<()> {
    let job: ContinueJob = config::load(j.config.as_deref())?;
    let base = job.base_map()?;
    let path = ParameterPath::along(&base, &job.vary, &job.values()?)?;
    let mut opts = ContinuationOptions::for_dim(base.dim());
    if let Some(n) = job.n_transient {
        opts.attractor.n_transient = n;
    }
    if let Some(n) = job.n_samples {
        opts.attractor.n_samples = n;
    }
    if let Some(n) = job.lyapunov_steps {
        opts.attractor.lyapunov_steps = n;
    }
    if let Some(n) = job.warm_points {
        opts.warm_points = n;
    }
    opts.threshold = match &job.threshold {
        Some(t) => t.to_threshold()?,
        None => Threshold::default(),
    };
    opts.refine_min_step = job.refine_min_step;
    if let Some(si) = job.set_image {
        opts.estimator = Estimator::SetImage { grid: si.grid, n_iter: si.n_iter, span: si.span };
    }
    let res = continue_attractor(&path, &opts)?;
    let names = base.family().param_names();
    let mut out = format!("step,{},d_H,jump\n", names.join(","));
    for (i, m) in res.maps.iter().enumerate() {
        let params: Vec<String> = m.params().iter().map(f64::to_string).collect();
        let (d, flag) = if i == 0 { (String::new(), 0) } else { (cell(res.distances[i - 1]), res.jump_flags[i - 1] as u8) };
        writeln!(out, "{i},{},{d},{flag}", params.join(",")).expect("writing to a String");
    }
    eprintln!("{} steps, {} flagged", res.jump_flags.len(), res.jumps().len());
    emit(j.output.as_deref(), &out)
}
