//! Orchestration: building models and initial data from a config, running
//! the transformed and reference solvers, and emitting result files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use gwt_core::grid::{GridField, UniformGrid};
use gwt_core::packet::{integrate_packet, IntegrateOptions, PacketState, PacketTrajectory};
use gwt_core::potentials::{self, AqConvention, PotentialModel};
use gwt_core::reconstruct::{
    init_from_gaussian, init_from_general, l2_error, position_expectation, reconstruct_psi,
    GaussianInitialData, GeneralInitialData, OutOfCell,
};
use gwt_core::reference::{run_reference, PsiState};
use gwt_core::snapshot::{load_snapshot, save_snapshot};
use gwt_core::wsolver::{
    CharIntegrator, Composition, GwtCoefficients, Quadrature, Scheme, SchemeConfig,
    StepDiagnostics, StrangOrder, WSolver, WState,
};

use crate::config::{
    CharKind, CompositionKind, Config, InitialConfig, QuadratureKind, ReferenceKind, SchemeKind,
    StrangOrderKind,
};

pub fn build_model(cfg: &Config) -> Result<Arc<dyn PotentialModel>> {
    potentials::by_name(&cfg.model.name, &cfg.model.params)
        .map_err(|e| anyhow!("model '{}': {e}", cfg.model.name))
}

/// Initial data resolved from the config.
pub enum InitialData {
    Gaussian(GaussianInitialData),
    General(GeneralInitialData),
}

impl InitialData {
    pub fn init(&self, eps: f64, eta_grid: &UniformGrid) -> Result<(PacketState, WState)> {
        let pair = match self {
            InitialData::Gaussian(d) => init_from_gaussian(d, eps, eta_grid)?,
            InitialData::General(d) => init_from_general(d, eps, eta_grid)?,
        };
        Ok(pair)
    }

    pub fn psi0_field(&self, eps: f64, x_grid: &UniformGrid) -> GridField {
        match self {
            InitialData::Gaussian(d) => GridField::from_fn(x_grid.clone(), |x| d.psi0(x, eps)),
            InitialData::General(d) => GridField::from_fn(x_grid.clone(), |x| d.psi0(x, eps)),
        }
    }
}

/// Amplitude normalizing `psi_0 = a exp(-(y^2+y^4)/eps) * phase` to unit L2
/// norm, by trapezoid quadrature in the stretched variable.
fn quartic_chirp_amplitude(eps: f64) -> f64 {
    let n = 48_000usize;
    let half = 12.0;
    let h = 2.0 * half / n as f64;
    let mut integral = 0.0;
    for i in 0..=n {
        let u = -half + i as f64 * h;
        let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
        integral += weight * (-2.0 * (u * u + eps * u * u * u * u)).exp();
    }
    integral *= h * eps.sqrt();
    1.0 / integral.sqrt()
}

pub fn build_initial(cfg: &Config, eps: f64) -> Result<InitialData> {
    match &cfg.initial {
        InitialConfig::Gaussian {
            q0,
            p0,
            c_re,
            c_im,
            gamma0,
            normalize,
            im_delta,
        } => {
            let d = q0.len();
            let c = DMatrix::from_fn(d, d, |j, k| {
                Complex64::new(c_re[j * d + k], c_im[j * d + k])
            });
            let data = if let Some(im) = im_delta {
                GaussianInitialData::new(
                    DVector::from_vec(q0.clone()),
                    DVector::from_vec(p0.clone()),
                    c,
                    Complex64::new(*gamma0, *im),
                )
            } else if *normalize {
                GaussianInitialData::normalized(
                    DVector::from_vec(q0.clone()),
                    DVector::from_vec(p0.clone()),
                    c,
                    *gamma0,
                    eps,
                )
            } else {
                GaussianInitialData::new(
                    DVector::from_vec(q0.clone()),
                    DVector::from_vec(p0.clone()),
                    c,
                    Complex64::new(*gamma0, 0.0),
                )
            }
            .map_err(|e| anyhow!("initial data: {e}"))?;
            Ok(InitialData::Gaussian(data))
        }
        InitialConfig::General {
            builtin,
            q0,
            p0,
            delta_re,
            delta_im,
            amplitude,
        } => {
            if builtin != "quartic_chirp" {
                bail!("unknown general builtin '{builtin}'");
            }
            let a = amplitude.unwrap_or_else(|| quartic_chirp_amplitude(eps));
            let data = GeneralInitialData::with_hessian(
                DVector::from_vec(q0.clone()),
                DVector::from_vec(p0.clone()),
                Complex64::new(*delta_re, *delta_im),
                Box::new(move |_| Complex64::new(a, 0.0)),
                Box::new(|xi| {
                    let y = xi[0];
                    Complex64::i() * (y * y + y * y * y * y)
                        + Complex64::new(y.cos() - 1.0, 0.0)
                }),
                DMatrix::from_vec(1, 1, vec![Complex64::new(-0.5, 1.0)]),
            )
            .map_err(|e| anyhow!("initial data: {e}"))?;
            Ok(InitialData::General(data))
        }
    }
}

pub fn scheme_config(cfg: &Config, dt: f64) -> SchemeConfig {
    SchemeConfig {
        scheme: match cfg.scheme.kind {
            SchemeKind::SlTs2 => Scheme::SlTs2,
            SchemeKind::SlTs3 => Scheme::SlTs3,
        },
        composition: match cfg.scheme.composition {
            CompositionKind::Lie => Composition::Lie,
            CompositionKind::Strang => Composition::Strang,
        },
        dt,
        quadrature: match cfg.scheme.quadrature {
            QuadratureKind::Midpoint => Quadrature::Midpoint,
            QuadratureKind::Trapezoid => Quadrature::Trapezoid,
        },
        char_integrator: match cfg.scheme.characteristic {
            CharKind::Heun => CharIntegrator::Heun,
            CharKind::Rk4 => CharIntegrator::Rk4,
        },
        strang_order: match cfg.scheme.strang_order {
            StrangOrderKind::KineticOuter => StrangOrder::KineticOuter,
            StrangOrderKind::PotentialOuter => StrangOrder::PotentialOuter,
        },
    }
}

/// One observable sample.
#[derive(Debug, Clone)]
pub struct ObservableRow {
    pub t: f64,
    pub x_literal: Vec<f64>,
    pub x_normalized: Vec<f64>,
    pub mass: f64,
}

/// Result of one transformed-equation run.
pub struct GwtRun {
    pub w: WState,
    pub state: PacketState,
    pub traj: PacketTrajectory,
    pub diagnostics: Vec<StepDiagnostics>,
    pub observables: Vec<ObservableRow>,
}

/// Overridable knobs for sweep entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOverrides {
    pub eps: Option<f64>,
    pub dt: Option<f64>,
    pub eta_n: Option<usize>,
    pub record_observables: bool,
}

/// Integrates the packet ODEs over [0, T] and advances the `w` equation.
pub fn simulate_gwt(cfg: &Config, ov: RunOverrides) -> Result<GwtRun> {
    let eps = ov.eps.unwrap_or(cfg.experiment.epsilon);
    let dt = ov.dt.unwrap_or(cfg.scheme.dt);
    let t_final = cfg.experiment.t_final;
    let model = build_model(cfg)?;
    let eta_grid = match ov.eta_n {
        Some(n) => {
            let bounds: Vec<(f64, f64)> =
                cfg.eta_grid.bounds.iter().map(|b| (b[0], b[1])).collect();
            gwt_core::grid::make_grid(&bounds, &vec![n; bounds.len()])?
        }
        None => cfg.eta_grid.build()?,
    };
    let data = build_initial(cfg, eps)?;
    let (state0, w0) = data.init(eps, &eta_grid)?;

    let packet_dt = dt / cfg.scheme.packet_dt_divisor;
    let traj = integrate_packet(
        state0,
        model.as_ref(),
        eps,
        t_final,
        packet_dt,
        IntegrateOptions {
            tol_b: cfg.scheme.packet_tol_b,
            validate: true,
        },
    )?;

    let convention = if cfg.scheme.aq_half {
        AqConvention::Half
    } else {
        AqConvention::Unscaled
    };
    let coeffs = GwtCoefficients::new(&traj, model.as_ref(), eps, convention);
    let mut solver = WSolver::new(w0, &coeffs, scheme_config(cfg, dt));
    let mut observables = Vec::new();
    let record = |w: &WState, traj: &PacketTrajectory, rows: &mut Vec<ObservableRow>| -> Result<()> {
        let st = traj.sample(w.t)?;
        let e = position_expectation(w, &st)?;
        rows.push(ObservableRow {
            t: w.t,
            x_literal: e.literal.iter().copied().collect(),
            x_normalized: e.normalized.iter().copied().collect(),
            mass: e.mass,
        });
        Ok(())
    };
    if ov.record_observables {
        record(solver.state(), &traj, &mut observables)?;
    }
    while solver.state().t < t_final - 1e-12 * t_final.max(1.0) {
        let target = (solver.state().t + dt).min(t_final);
        solver.run_to(target)?;
        if ov.record_observables {
            record(solver.state(), &traj, &mut observables)?;
        }
    }
    let diagnostics = solver.diagnostics().to_vec();
    let w = solver.into_state();
    let state = traj.sample(t_final)?;
    Ok(GwtRun {
        w,
        state,
        traj,
        diagnostics,
        observables,
    })
}

/// Initial wave function on the configured x grid.
pub fn reference_initial(cfg: &Config, eps: f64) -> Result<PsiState> {
    let x_grid = cfg
        .x_grid
        .as_ref()
        .ok_or_else(|| anyhow!("an [x_grid] section is required for reference runs"))?
        .build()?;
    let data = build_initial(cfg, eps)?;
    Ok(PsiState {
        field: data.psi0_field(eps, &x_grid),
        t: 0.0,
        eps,
    })
}

/// Direct SL-TS benchmark run to the experiment final time.
pub fn simulate_reference(cfg: &Config, eps: f64, dt: f64) -> Result<PsiState> {
    let psi0 = reference_initial(cfg, eps)?;
    let model = build_model(cfg)?;
    let (psi, _) = run_reference(&psi0, model.as_ref(), cfg.experiment.t_final, dt, &[])?;
    Ok(psi)
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn write_diagnostics_csv(path: &Path, rows: &[StepDiagnostics]) -> Result<()> {
    let mut out = String::from("step,t,norm,max_abs,boundary_max,boundary_flag\n");
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{},{},{}\n",
            fmt(r.t),
            fmt(r.norm),
            fmt(r.max_abs),
            fmt(r.boundary_max),
            r.boundary_flag as u8
        ));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_observables_csv(path: &Path, rows: &[ObservableRow]) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    let d = rows[0].x_literal.len();
    let mut header = vec!["t".to_string()];
    for j in 0..d {
        header.push(format!("x_literal_{j}"));
    }
    for j in 0..d {
        header.push(format!("x_normalized_{j}"));
    }
    header.push("mass".into());
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let mut cells = vec![fmt(r.t)];
        cells.extend(r.x_literal.iter().map(|&v| fmt(v)));
        cells.extend(r.x_normalized.iter().map(|&v| fmt(v)));
        cells.push(fmt(r.mass));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// One row of an error table.
#[derive(Debug, Clone)]
pub struct ErrorRow {
    pub eps: f64,
    pub dt: f64,
    pub deta: f64,
    pub scheme: String,
    pub abs_error: f64,
    pub rel_error: f64,
    pub observed_order: Option<f64>,
}

pub fn write_error_table(path: &Path, rows: &[ErrorRow]) -> Result<()> {
    let mut out = String::from("eps,dt,deta,scheme,abs_error,rel_error,observed_order\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt(r.eps),
            fmt(r.dt),
            fmt(r.deta),
            r.scheme,
            fmt(r.abs_error),
            fmt(r.rel_error),
            r.observed_order.map(fmt).unwrap_or_default()
        ));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn scheme_name(cfg: &Config) -> &'static str {
    match cfg.scheme.kind {
        SchemeKind::SlTs2 => "sl-ts2",
        SchemeKind::SlTs3 => "sl-ts3",
    }
}

/// Fills the `observed_order` column from successive dt or mesh halvings.
pub fn fill_observed_orders(rows: &mut [ErrorRow], by_dt: bool) {
    for i in 0..rows.len().saturating_sub(1) {
        let (a, b) = (&rows[i], &rows[i + 1]);
        if a.eps != b.eps {
            continue;
        }
        let halved = if by_dt {
            (b.dt - 0.5 * a.dt).abs() <= 1e-12 * a.dt
        } else {
            (b.deta - 0.5 * a.deta).abs() <= 1e-12 * a.deta
        };
        if halved && b.abs_error > 0.0 {
            rows[i].observed_order = Some((a.abs_error / b.abs_error).log2());
        }
    }
}

/// Runs the transformed solver per the config and writes the artifacts.
pub fn run_gwt(cfg: &Config, out_dir: &Path, quiet: bool) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let record_observables = cfg.output.write_observables;
    let run = simulate_gwt(
        cfg,
        RunOverrides {
            record_observables,
            ..Default::default()
        },
    )?;
    if cfg.output.write_w_snapshot {
        save_snapshot(&out_dir.join("w.snap"), &run.w.field, run.w.eps, run.w.t)?;
    }
    if cfg.output.write_diagnostics {
        write_diagnostics_csv(&out_dir.join("diagnostics.csv"), &run.diagnostics)?;
    }
    if record_observables {
        write_observables_csv(&out_dir.join("observables.csv"), &run.observables)?;
    }
    if cfg.output.write_trajectory {
        let mut buf = Vec::new();
        run.traj.write_csv(&mut buf)?;
        std::fs::write(out_dir.join("trajectory.csv"), buf)?;
    }
    if let Some(xg) = &cfg.x_grid {
        if cfg.output.write_psi_snapshot {
            let x_grid = xg.build()?;
            let (psi, stats) = reconstruct_psi(&run.w, &run.state, &x_grid, OutOfCell::Zero)
                .map_err(|e| anyhow!("reconstruction: {e}"))?;
            save_snapshot(&out_dir.join("psi.snap"), &psi.field, psi.eps, psi.t)?;
            if !quiet && stats.outside_points > 0 {
                eprintln!(
                    "note: {}/{} reconstruction points map outside the eta cell (treated as 0)",
                    stats.outside_points, stats.total_points
                );
            }
        }
    }
    let flagged = run.diagnostics.iter().filter(|d| d.boundary_flag).count();
    if !quiet {
        if flagged > 0 {
            eprintln!(
                "warning: boundary diagnostic flagged {flagged}/{} steps; consider a larger eta domain",
                run.diagnostics.len()
            );
        }
        println!(
            "run '{}' finished at t = {} (norm {:.6e})",
            cfg.experiment.name,
            run.w.t,
            run.diagnostics.last().map(|d| d.norm).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

/// Runs the SL-TS benchmark and writes the snapshot plus a metadata sidecar.
pub fn run_reference_cmd(cfg: &Config, out_dir: &Path, quiet: bool) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let eps = cfg.experiment.epsilon;
    let rdt = cfg
        .reference
        .as_ref()
        .ok_or_else(|| anyhow!("a [reference] section with dt is required"))?
        .dt;
    let x_grid = cfg
        .x_grid
        .as_ref()
        .ok_or_else(|| anyhow!("an [x_grid] section is required"))?
        .build()?;
    let dx = x_grid.axis(0).spacing();
    if !quiet && dx > 2.0 * eps {
        eprintln!(
            "warning: dx = {dx:.3e} is coarse relative to eps = {eps:.3e}; the benchmark \
             meshing guidance is dx = O(eps)"
        );
    }
    let psi = simulate_reference(cfg, eps, rdt)?;
    let snap = out_dir.join("reference.snap");
    save_snapshot(&snap, &psi.field, psi.eps, psi.t)?;
    let sidecar = format!(
        "# reference snapshot metadata\nname = {:?}\nmodel = {:?}\nparams = {:?}\n\
         epsilon = {}\nt_final = {}\ndt = {}\nnx = {:?}\n",
        cfg.experiment.name,
        cfg.model.name,
        cfg.model.params,
        fmt(eps),
        fmt(cfg.experiment.t_final),
        fmt(rdt),
        x_grid.axes().iter().map(|ax| ax.n).collect::<Vec<_>>()
    );
    std::fs::write(snap.with_extension("snap.meta.toml"), sidecar)?;
    if !quiet {
        println!("reference written to {}", snap.display());
    }
    Ok(snap)
}

/// Loads a reference snapshot, checking eps and final time compatibility.
pub fn load_reference(path: &Path, eps: f64, t_final: f64) -> Result<PsiState> {
    let (field, snap_eps, t) = load_snapshot(path)?;
    if (snap_eps - eps).abs() > 1e-12 * eps {
        bail!(
            "reference {} has eps = {snap_eps}, expected {eps}",
            path.display()
        );
    }
    if (t - t_final).abs() > 1e-9 * t_final.max(1.0) {
        bail!("reference {} ends at t = {t}, expected {t_final}", path.display());
    }
    Ok(PsiState {
        field,
        t,
        eps: snap_eps,
    })
}

/// Reconstructs a run onto the reference grid and evaluates the L2 error.
pub fn error_against_reference(run: &GwtRun, psi_ref: &PsiState) -> Result<(f64, f64)> {
    let (psi_num, _) = reconstruct_psi(
        &run.w,
        &run.state,
        psi_ref.field.grid(),
        OutOfCell::Zero,
    )?;
    let e = l2_error(&psi_num.field, &psi_ref.field)?;
    Ok((e.absolute, e.relative))
}

/// Time-convergence study: one row per (eps, dt) pair.
pub fn converge_time(
    cfg: &Config,
    reference_path: Option<&Path>,
    out_dir: &Path,
    quiet: bool,
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let sweep = cfg
        .sweep
        .as_ref()
        .filter(|s| !s.dts.is_empty())
        .ok_or_else(|| anyhow!("a [sweep] section with dts is required"))?;
    let epsilons = if sweep.epsilons.is_empty() {
        vec![cfg.experiment.epsilon]
    } else {
        sweep.epsilons.clone()
    };
    let deta = {
        let g = cfg.eta_grid.build()?;
        g.axis(0).spacing()
    };
    let mut rows: Vec<ErrorRow> = Vec::new();
    for &eps in &epsilons {
        let psi_ref = match sweep.reference_kind {
            ReferenceKind::Slts => {
                if epsilons.len() > 1 {
                    bail!(
                        "slts reference sweeps over eps are not supported; use one eps per \
                         config or reference_kind = \"gwt\""
                    );
                }
                match reference_path {
                    Some(p) if p.exists() => load_reference(p, eps, cfg.experiment.t_final)?,
                    other => {
                        let rdt = cfg
                            .reference
                            .as_ref()
                            .ok_or_else(|| anyhow!("[reference].dt required"))?
                            .dt;
                        if !quiet {
                            eprintln!("computing SL-TS reference (dt = {rdt:.3e})...");
                        }
                        let psi = simulate_reference(cfg, eps, rdt)?;
                        let path = other
                            .map(Path::to_path_buf)
                            .unwrap_or_else(|| out_dir.join("reference.snap"));
                        save_snapshot(&path, &psi.field, psi.eps, psi.t)?;
                        psi
                    }
                }
            }
            ReferenceKind::Gwt => {
                let rdt = sweep
                    .reference_dt
                    .ok_or_else(|| anyhow!("sweep.reference_dt required for gwt reference"))?;
                if !quiet {
                    eprintln!("computing self-reference run (eps = {eps:.3e}, dt = {rdt:.3e})...");
                }
                let run = simulate_gwt(
                    cfg,
                    RunOverrides {
                        eps: Some(eps),
                        dt: Some(rdt),
                        ..Default::default()
                    },
                )?;
                let x_grid = cfg
                    .x_grid
                    .as_ref()
                    .ok_or_else(|| anyhow!("[x_grid] required"))?
                    .build()?;
                let (psi, _) = reconstruct_psi(&run.w, &run.state, &x_grid, OutOfCell::Zero)?;
                psi
            }
        };
        for &dt in &sweep.dts {
            let run = simulate_gwt(
                cfg,
                RunOverrides {
                    eps: Some(eps),
                    dt: Some(dt),
                    ..Default::default()
                },
            )?;
            let (abs_error, rel_error) = error_against_reference(&run, &psi_ref)?;
            if !quiet {
                println!("eps = {eps:.6e} dt = {dt:.6e}: abs {abs_error:.4e} rel {rel_error:.4e}");
            }
            rows.push(ErrorRow {
                eps,
                dt,
                deta,
                scheme: scheme_name(cfg).into(),
                abs_error,
                rel_error,
                observed_order: None,
            });
        }
    }
    fill_observed_orders(&mut rows, true);
    let path = out_dir.join("errors_time.csv");
    write_error_table(&path, &rows)?;
    Ok(path)
}

/// Spatial-convergence study against a fine self-reference run; errors are
/// measured between `w` fields on the common cell and reported in the
/// physical normalization.
pub fn converge_space(
    cfg: &Config,
    reference_path: Option<&Path>,
    out_dir: &Path,
    quiet: bool,
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let sweep = cfg
        .sweep
        .as_ref()
        .filter(|s| !s.eta_ns.is_empty())
        .ok_or_else(|| anyhow!("a [sweep] section with eta_ns is required"))?;
    let eps = cfg.experiment.epsilon;
    let ref_n = sweep
        .reference_eta_n
        .ok_or_else(|| anyhow!("sweep.reference_eta_n is required"))?;

    let (w_ref, state) = match reference_path {
        Some(p) if p.exists() => {
            let (field, snap_eps, t) = load_snapshot(p)?;
            if (snap_eps - eps).abs() > 1e-12 * eps {
                bail!("reference eps mismatch");
            }
            // the packet trajectory does not depend on the w grid
            let model = build_model(cfg)?;
            let data = build_initial(cfg, eps)?;
            let (state0, _) = data.init(eps, &cfg.eta_grid.build()?)?;
            let traj = integrate_packet(
                state0,
                model.as_ref(),
                eps,
                cfg.experiment.t_final,
                cfg.scheme.dt / cfg.scheme.packet_dt_divisor,
                IntegrateOptions {
                    tol_b: cfg.scheme.packet_tol_b,
                    validate: true,
                },
            )?;
            let state = traj.sample(cfg.experiment.t_final)?;
            (
                WState {
                    field,
                    t,
                    eps: snap_eps,
                },
                state,
            )
        }
        other => {
            if !quiet {
                eprintln!("computing self-reference run (n = {ref_n})...");
            }
            let run = simulate_gwt(
                cfg,
                RunOverrides {
                    eta_n: Some(ref_n),
                    ..Default::default()
                },
            )?;
            if let Some(p) = other {
                save_snapshot(p, &run.w.field, run.w.eps, run.w.t)?;
            }
            (run.w, run.state)
        }
    };
    // physical-normalization factor mapping |w| errors to |psi| errors
    let d = state.dim() as f64;
    let factor = ((-2.0 * state.gamma2.im / eps).exp() * eps.powf(d / 2.0)
        / state.b.determinant().abs())
    .sqrt();
    let ref_norm = gwt_core::grid::discrete_l2_norm(&w_ref.field);

    let mut rows: Vec<ErrorRow> = Vec::new();
    for &n in &sweep.eta_ns {
        let run = simulate_gwt(
            cfg,
            RunOverrides {
                eta_n: Some(n),
                ..Default::default()
            },
        )?;
        let e = l2_error(&run.w.field, &w_ref.field)?;
        let abs_error = factor * e.absolute;
        let rel_error = e.absolute / ref_norm;
        let deta = run.w.field.grid().axis(0).spacing();
        if !quiet {
            println!("n = {n} (deta = {deta:.4e}): abs {abs_error:.4e} rel {rel_error:.4e}");
        }
        rows.push(ErrorRow {
            eps,
            dt: cfg.scheme.dt,
            deta,
            scheme: scheme_name(cfg).into(),
            abs_error,
            rel_error,
            observed_order: None,
        });
    }
    fill_observed_orders(&mut rows, false);
    let path = out_dir.join("errors_space.csv");
    write_error_table(&path, &rows)?;
    Ok(path)
}

/// Runs the transformed solver and writes the observable time series.
pub fn observables_cmd(cfg: &Config, out_dir: &Path, quiet: bool) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let run = simulate_gwt(
        cfg,
        RunOverrides {
            record_observables: true,
            ..Default::default()
        },
    )?;
    let path = out_dir.join("observables.csv");
    write_observables_csv(&path, &run.observables)?;
    if !quiet {
        println!(
            "observables written to {} ({} samples)",
            path.display(),
            run.observables.len()
        );
    }
    Ok(path)
}

