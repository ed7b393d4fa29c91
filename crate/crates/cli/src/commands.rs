use serde::Serialize;

use friedrichs::dispersion_analysis::Region;
use friedrichs::dynamics::{
    evolve_ode, fmt17, gaussian_packet, survival_amplitude_bromwich, EvolveOptions, ExcitationState, FieldGrid,
    GridSpec,
};
use friedrichs::linalg::{hermitian_eigenvalues, imaginary_part, max_abs, max_abs_diff, to_pairs};
use friedrichs::model::{validate_hypotheses, Model, ValidationGrid, ValidationReport};
use friedrichs::phase::{disc_exclusion_margin, trajectory_sweep, PhaseError, SweepConfig as PhaseSweepConfig};
use friedrichs::self_energy::{
    sigma_boundary, sigma_continuation, sigma_direct, sigma_physical, SelfEnergyMatrix, SelfEnergyRecord, Side,
};
use friedrichs::spectral::{bound_states, resonances, CharacteristicValue, Corrections};
use friedrichs::{QuadConfig64, C64};

use crate::config::{EvolveMethod, RunConfig, Sheet, SideName};
use crate::{CliError, Format, Output};

pub struct Context {
    pub format: Option<Format>,
    pub tol: Option<f64>,
}

fn ok(body: String) -> Result<Output, CliError> {
    Ok(Output { body, failure: None })
}

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Numerical(e.to_string()))
}

fn model(cfg: &RunConfig) -> Result<Model, CliError> {
    let doc = cfg.model.as_ref().ok_or_else(|| CliError::Config("missing `model` section".into()))?;
    Ok(doc.build()?)
}

/// Builds the model and refuses to continue unless every hypothesis holds.
fn validated_model(cfg: &RunConfig) -> Result<Model, CliError> {
    let m = model(cfg)?;
    validate_hypotheses(&m, &ValidationGrid::default())
        .ensure_passed()
        .map_err(|e| CliError::Hypothesis(e.to_string()))?;
    Ok(m)
}

#[derive(Serialize)]
struct SigmaPoint {
    #[serde(flatten)]
    record: SelfEnergyRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    direct: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_discrepancy: Option<f64>,
}

pub fn sigma(cfg: &RunConfig, ctx: &Context, cross_check: bool) -> Result<Output, CliError> {
    let sc = cfg.sigma.as_ref().ok_or_else(|| CliError::Config("missing `sigma` section".into()))?;
    if sc.z.is_empty() && sc.energies.is_empty() {
        return Err(CliError::Config("`sigma` needs a nonempty `z` or `energies` list".into()));
    }
    if cross_check && sc.sheet == Sheet::Second {
        return Err(CliError::Config("direct quadrature only evaluates the physical sheet".into()));
    }
    let m = validated_model(cfg)?;
    let tol = ctx.tol.unwrap_or(1e-10);
    let quad = QuadConfig64::new(tol * 1e-2, tol);
    let side = match sc.side {
        SideName::Above => Side::Above,
        SideName::Below => Side::Below,
    };
    let mut points: Vec<(SelfEnergyMatrix, Option<SelfEnergyMatrix>)> = Vec::new();
    for p in &sc.z {
        let z = C64::new(p[0], p[1]);
        let s = if z.im == 0.0 {
            sigma_boundary(&m, z.re, side)?
        } else if z.im < 0.0 && sc.sheet == Sheet::Second {
            sigma_continuation(&m, z)?
        } else {
            sigma_physical(&m, z)?
        };
        let d = if cross_check { Some(sigma_direct(&m, z, &quad)?) } else { None };
        points.push((s, d));
    }
    for &e in &sc.energies {
        let s = sigma_boundary(&m, e, side)?;
        let d = if cross_check { Some(sigma_direct(&m, C64::new(e, 0.0), &quad)?) } else { None };
        points.push((s, d));
    }
    match ctx.format.unwrap_or(Format::Json) {
        Format::Json => {
            let recs: Vec<SigmaPoint> = points
                .iter()
                .map(|(s, d)| SigmaPoint {
                    record: s.to_record(sc.parts),
                    direct: d.as_ref().map(|d| to_pairs(&d.matrix)),
                    max_discrepancy: d.as_ref().map(|d| max_abs_diff(&s.matrix, &d.matrix)),
                })
                .collect();
            ok(json(&recs)?)
        }
        Format::Csv => {
            let mut out = String::from("re_z,im_z,row,col,re,im");
            if cross_check {
                out.push_str(",direct_re,direct_im,discrepancy,max_discrepancy");
            }
            out.push('\n');
            for (s, d) in &points {
                let worst = d.as_ref().map(|d| max_abs_diff(&s.matrix, &d.matrix));
                let n = s.matrix.nrows();
                for i in 0..n {
                    for j in 0..n {
                        let v = s.matrix[(i, j)];
                        out.push_str(&format!(
                            "{},{},{i},{j},{},{}",
                            fmt17(s.z.re),
                            fmt17(s.z.im),
                            fmt17(v.re),
                            fmt17(v.im)
                        ));
                        if let (Some(d), Some(w)) = (d, worst) {
                            let u = d.matrix[(i, j)];
                            out.push_str(&format!(
                                ",{},{},{},{}",
                                fmt17(u.re),
                                fmt17(u.im),
                                fmt17((u - v).norm()),
                                fmt17(w)
                            ));
                        }
                        out.push('\n');
                    }
                }
            }
            ok(out)
        }
    }
}

pub fn modes(cfg: &RunConfig, ctx: &Context, neglect: bool) -> Result<Output, CliError> {
    let mc = cfg.modes.as_ref().ok_or_else(|| CliError::Config("missing `modes` section".into()))?;
    let m = validated_model(cfg)?;
    let corrections = if neglect { Corrections::Neglect } else { mc.corrections };
    let mut found: Vec<CharacteristicValue> = Vec::new();
    if let Some([lo, hi]) = mc.bound_range {
        if !(hi > lo) {
            return Err(CliError::Config("`bound_range` must be nonempty".into()));
        }
        let rep = bound_states(&m, (lo, hi), mc.grid, corrections)?;
        for miss in &rep.near_misses {
            eprintln!(
                "near miss at E = {} (smallest singular value {:.3e})",
                miss.energy, miss.smallest_singular_value
            );
        }
        found.extend(rep.states);
    }
    if mc.resonances {
        let region = match &mc.region {
            Some(r) => r.region()?,
            None => Region::default_for(&m),
        };
        let seeds: Vec<C64> = mc.seeds.iter().map(|s| C64::new(s[0], s[1])).collect();
        let rep = resonances(&m, &region, &seeds);
        for (seed, why) in &rep.failures {
            eprintln!("seed {seed}: {why}");
        }
        for r in rep.roots {
            if !found.iter().any(|f| (f.z - r.z).norm() <= 1e-8 * (1.0 + r.z.norm())) {
                found.push(r);
            }
        }
    }
    found.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    let recs: Vec<_> = found.iter().map(|c| c.to_record()).collect();
    match ctx.format.unwrap_or(Format::Json) {
        Format::Json => ok(json(&recs)?),
        Format::Csv => {
            let mut out = String::from("re,im,kind,residual,degeneracy\n");
            for r in &recs {
                let kind =
                    serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{kind},{},{}\n",
                    fmt17(r.z[0]),
                    fmt17(r.z[1]),
                    fmt17(r.residual),
                    r.degeneracy
                ));
            }
            ok(out)
        }
    }
}

#[derive(Serialize)]
struct SweepJson {
    k: Vec<f64>,
    branches: Vec<Vec<[f64; 2]>>,
    ambiguous: Vec<bool>,
    /// Smallest `|λ + i| − 1`; diagnostic, negative inside the unit circle.
    disc_margin: f64,
}

pub fn phase_sweep(cfg: &RunConfig, ctx: &Context) -> Result<Output, CliError> {
    let sc = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("missing `sweep` section".into()))?;
    let positions = match (&sc.positions, &cfg.model) {
        (Some(p), _) => p.clone(),
        (None, Some(_)) => model(cfg)?.atoms().positions().to_vec(),
        (None, None) => return Err(CliError::Config("`sweep` needs `positions` or a `model`".into())),
    };
    if !(sc.step > 0.0 && sc.k_end > sc.k_start) {
        return Err(CliError::Config("sweep needs k_end > k_start and a positive step".into()));
    }
    let mut pc = PhaseSweepConfig::new(sc.k_start, sc.k_end, sc.step, sc.eta);
    if let Some(t) = sc.match_tol {
        pc.match_tol = t;
    }
    let traj = trajectory_sweep(&positions, &pc).map_err(|e| match e {
        PhaseError::RootFindingStall { .. } => CliError::Numerical(e.to_string()),
        _ => CliError::Config(e.to_string()),
    })?;
    match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => ok(traj.to_csv()),
        Format::Json => ok(json(&SweepJson {
            k: traj.ks.clone(),
            branches: traj.branches.iter().map(|b| b.iter().map(|v| [v.re, v.im]).collect()).collect(),
            ambiguous: traj.ambiguous.clone(),
            disc_margin: disc_exclusion_margin(&traj),
        })?),
    }
}

#[derive(Serialize)]
struct OdeJson {
    survival: Vec<[f64; 2]>,
    norm: Vec<f64>,
    max_norm_drift: f64,
    grid_points: usize,
    grid_too_coarse: bool,
    /// Discretization echo time; `None` when no echo is expected.
    recurrence_time: Option<f64>,
}

#[derive(Serialize)]
struct BromwichJson {
    survival: Vec<[f64; 2]>,
    delta: f64,
    step: f64,
    tail_estimate: f64,
}

#[derive(Serialize)]
struct EvolveJson {
    times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ode: Option<OdeJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bromwich: Option<BromwichJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_discrepancy: Option<f64>,
}

pub fn evolve(cfg: &RunConfig, ctx: &Context, method: Option<EvolveMethod>) -> Result<Output, CliError> {
    let ec = cfg.evolve.as_ref().ok_or_else(|| CliError::Config("missing `evolve` section".into()))?;
    let ts = ec.time_grid()?;
    let method = method.or(ec.method).unwrap_or_default();
    if ec.field.is_some() && method != EvolveMethod::Ode {
        return Err(CliError::Config("an initial field packet is only supported with the ODE method".into()));
    }
    let m = validated_model(cfg)?;
    let a0 = ec.amplitudes();
    if a0.len() != m.n() {
        return Err(CliError::Config(format!("`a0` has {} entries for {} atoms", a0.len(), m.n())));
    }
    let t_max = *ts.last().expect("nonempty time grid");
    let ode = if method != EvolveMethod::Bromwich {
        let spec = ec.grid.clone().unwrap_or(GridSpec { horizon: t_max.max(1.0), ..GridSpec::default() });
        let grid = FieldGrid::graded(&m, &spec)?;
        let mut opts = EvolveOptions::default();
        if let Some(t) = ctx.tol {
            opts.rel_tol = t;
            opts.abs_tol = t * 1e-2;
        }
        if let Some(s) = ec.tail_shift {
            opts.tail_shift = s;
        }
        let init = match &ec.field {
            Some(p) => ExcitationState::with_field(
                a0.clone(),
                &grid,
                gaussian_packet(C64::new(p.amplitude[0], p.amplitude[1]), p.k0, p.sigma, p.x0),
            ),
            None => ExcitationState::atomic(a0.clone(), &grid),
        };
        let tr = evolve_ode(&m, &init, &ts, &grid, &opts)?;
        if tr.grid_too_coarse {
            eprintln!("warning: norm drift {:.3e} suggests the field grid is too coarse", tr.max_norm_drift());
        }
        Some((tr, grid.len()))
    } else {
        None
    };
    let br = if method != EvolveMethod::Ode {
        let bc = ec.bromwich.unwrap_or_default();
        Some(survival_amplitude_bromwich(&m, &a0, &ts, &bc)?)
    } else {
        None
    };
    let disc: Option<Vec<f64>> = match (&ode, &br) {
        (Some((tr, _)), Some(b)) => Some(tr.survival.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).collect()),
        _ => None,
    };
    match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("t");
            if ode.is_some() {
                out.push_str(if br.is_some() { ",ode_re,ode_im,ode_abs2,norm" } else { ",re,im,abs2,norm" });
            }
            if br.is_some() {
                out.push_str(if ode.is_some() {
                    ",bromwich_re,bromwich_im,bromwich_abs2,discrepancy"
                } else {
                    ",re,im,abs2"
                });
            }
            out.push('\n');
            for (i, t) in ts.iter().enumerate() {
                out.push_str(&fmt17(*t));
                if let Some((tr, _)) = &ode {
                    let a = tr.survival[i];
                    out.push_str(&format!(
                        ",{},{},{},{}",
                        fmt17(a.re),
                        fmt17(a.im),
                        fmt17(a.norm_sqr()),
                        fmt17(tr.norm[i])
                    ));
                }
                if let Some(b) = &br {
                    let a = b.values[i];
                    out.push_str(&format!(",{},{},{}", fmt17(a.re), fmt17(a.im), fmt17(a.norm_sqr())));
                    if let Some(d) = &disc {
                        out.push_str(&format!(",{}", fmt17(d[i])));
                    }
                }
                out.push('\n');
            }
            ok(out)
        }
        Format::Json => ok(json(&EvolveJson {
            times: ts.clone(),
            ode: ode.as_ref().map(|(tr, points)| OdeJson {
                survival: tr.survival.iter().map(|a| [a.re, a.im]).collect(),
                norm: tr.norm.clone(),
                max_norm_drift: tr.max_norm_drift(),
                grid_points: *points,
                grid_too_coarse: tr.grid_too_coarse,
                recurrence_time: tr.recurrence_time.is_finite().then_some(tr.recurrence_time),
            }),
            bromwich: br.as_ref().map(|b| BromwichJson {
                survival: b.values.iter().map(|a| [a.re, a.im]).collect(),
                delta: b.delta,
                step: b.step,
                tail_estimate: b.tail_estimate,
            }),
            max_discrepancy: disc.map(|d| d.into_iter().fold(0.0, f64::max)),
        })?),
    }
}

#[derive(Serialize)]
struct Invariant {
    name: String,
    passed: bool,
    value: f64,
}

#[derive(Serialize)]
struct CheckReport {
    model: String,
    passed: bool,
    hypotheses: ValidationReport,
    invariants: Vec<Invariant>,
}

fn quick_invariants(m: &Model) -> Result<Vec<Invariant>, CliError> {
    let mut out = Vec::new();
    let probes = [C64::new(0.5, 0.5), C64::new(2.0, 0.1), C64::new(-1.0, 1.0)];
    let mut herglotz = f64::INFINITY;
    let mut symmetry: f64 = 0.0;
    for z in probes {
        let s = sigma_physical(m, z)?.matrix;
        let scale = 1.0 + max_abs(&s);
        herglotz = herglotz.min(hermitian_eigenvalues(&imaginary_part(&s))[0] / scale);
        symmetry = symmetry.max(max_abs_diff(&s, &s.transpose()) / scale);
    }
    out.push(Invariant {
        name: "herglotz: smallest eigenvalue of Im Σ".into(),
        passed: herglotz >= -1e-10,
        value: herglotz,
    });
    out.push(Invariant { name: "symmetry: Σ = Σᵀ".into(), passed: symmetry <= 1e-10, value: symmetry });
    let z = C64::new(0.7, 0.4);
    let a = sigma_physical(m, z)?.matrix;
    let b = sigma_direct(m, z, &QuadConfig64::new(1e-12, 1e-10))?.matrix;
    let d = max_abs_diff(&a, &b) / (1.0 + max_abs(&a));
    out.push(Invariant {
        name: "decomposition matches direct quadrature at 0.7+0.4i".into(),
        passed: d <= 1e-6,
        value: d,
    });
    Ok(out)
}

pub fn check(cfg: &RunConfig, ctx: &Context) -> Result<Output, CliError> {
    let m = model(cfg)?;
    let mut grid = ValidationGrid::default();
    if let Some(c) = &cfg.check {
        if let Some(k) = c.k_max {
            if !(k > 0.0) {
                return Err(CliError::Config("`k_max` must be positive".into()));
            }
            grid.k_max = k;
        }
        if let Some(s) = c.samples {
            if s < 3 {
                return Err(CliError::Config("`samples` must be at least 3".into()));
            }
            grid.samples = s;
        }
    }
    let report = validate_hypotheses(&m, &grid);
    let mut failure = report.ensure_passed().err().map(|e| CliError::Hypothesis(e.to_string()));
    let invariants = if failure.is_none() { quick_invariants(&m)? } else { Vec::new() };
    if failure.is_none() {
        if let Some(bad) = invariants.iter().find(|i| !i.passed) {
            failure = Some(CliError::Numerical(format!("invariant failed: {}", bad.name)));
        }
    }
    for c in &report.checks {
        eprintln!("{} H{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
    }
    if let Some(v) = report.normalization_omega {
        eprintln!("normalization ∫|F|²/ω dk = {v}");
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    for i in &invariants {
        eprintln!("{} {} ({:.3e})", if i.passed { "PASS" } else { "FAIL" }, i.name, i.value);
    }
    let passed = failure.is_none();
    let rep = CheckReport { model: m.label().to_string(), passed, hypotheses: report, invariants };
    let body = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => json(&rep)?,
        Format::Csv => {
            let mut s = String::from("check,passed,value\n");
            for c in &rep.hypotheses.checks {
                s.push_str(&format!("H{},{},{}\n", c.id, c.passed, fmt17(c.worst_violation)));
            }
            for i in &rep.invariants {
                s.push_str(&format!("\"{}\",{},{}\n", i.name, i.passed, fmt17(i.value)));
            }
            s
        }
    };
    Ok(Output { body, failure })
}
