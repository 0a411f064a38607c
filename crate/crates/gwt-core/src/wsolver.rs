//! Split-step solvers for the transformed `w` equation.
//!
//! The equation is advanced by SL-TS3 (kinetic / potential / convection) or
//! SL-TS2 (kinetic / convection-potential) compositions. The kinetic part is
//! solved in Fourier space with a unimodular multiplier, the potential part
//! by a pointwise unimodular multiplier, and the convection part by
//! semi-Lagrangian backward characteristic tracing with spectral
//! interpolation at the feet. All time-dependent coefficients are sampled
//! from a [`PacketTrajectory`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::{
    fft_forward_inplace, fft_inverse_inplace, GridField, SpectralField, SpectralGrid, UniformGrid,
    MAX_DIM,
};
use crate::packet::PacketTrajectory;
use crate::potentials::{AqConvention, ExpansionCenter, PotentialModel};
use crate::{CoreError, Result};

/// The `w` field with its clock and semi-classical parameter.
#[derive(Debug, Clone)]
pub struct WState {
    pub field: GridField,
    pub t: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    SlTs2,
    #[default]
    SlTs3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Composition {
    Lie,
    #[default]
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    Midpoint,
    #[default]
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CharIntegrator {
    #[default]
    Heun,
    Rk4,
}

/// Which operator sits on the outside of the Strang sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StrangOrder {
    #[default]
    KineticOuter,
    PotentialOuter,
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub composition: Composition,
    pub dt: f64,
    pub quadrature: Quadrature,
    pub char_integrator: CharIntegrator,
    pub strang_order: StrangOrder,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        Self {
            scheme,
            composition: Composition::Strang,
            dt,
            quadrature: Quadrature::Trapezoid,
            char_integrator: CharIntegrator::Heun,
            strang_order: StrangOrder::KineticOuter,
        }
    }
}

/// Per-step solver diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub t: f64,
    pub norm: f64,
    pub max_abs: f64,
    pub boundary_max: f64,
    /// Set when `boundary_max > 1e-10 * max_abs`: the periodic box may be
    /// too small for the current support of `w`.
    pub boundary_flag: bool,
}

pub const BOUNDARY_FLAG_RATIO: f64 = 1e-10;

pub fn step_diagnostics(w: &WState) -> StepDiagnostics {
    let max_abs = w.field.max_abs();
    let boundary_max = w.field.boundary_max_abs();
    StepDiagnostics {
        t: w.t,
        norm: crate::grid::discrete_l2_norm(&w.field),
        max_abs,
        boundary_max,
        boundary_flag: boundary_max > BOUNDARY_FLAG_RATIO * max_abs,
    }
}

/// Time-dependent coefficient fields of the `w` equation.
///
/// `kinetic_form` returns `B(t) B(t)^T` so the kinetic symbol is
/// `|B^T zeta|^2 = zeta^T (B B^T) zeta`; `velocities` fills the convection
/// velocity `G` (d entries per point); `phase_rates` fills `Im F` (`F` is
/// purely imaginary by construction).
pub trait WCoefficients: Sync {
    fn dim(&self) -> usize;
    fn kinetic_form(&self, t: f64) -> Result<[[f64; MAX_DIM]; MAX_DIM]>;
    fn velocities(&self, t: f64, etas: &[f64], out: &mut [f64]) -> Result<()>;
    fn phase_rates(&self, t: f64, etas: &[f64], out: &mut [f64]) -> Result<()>;
}

// ---------------------------------------------------------------------------
// small fixed-size matrix helpers (d <= MAX_DIM)
// ---------------------------------------------------------------------------

type SmallMat = [[f64; MAX_DIM]; MAX_DIM];

fn mat_from(d: usize, m: &nalgebra::DMatrix<f64>) -> SmallMat {
    let mut out = [[0.0; MAX_DIM]; MAX_DIM];
    for j in 0..d {
        for k in 0..d {
            out[j][k] = m[(j, k)];
        }
    }
    out
}

fn mat_inv(d: usize, m: &SmallMat) -> Result<SmallMat> {
    let mut out = [[0.0; MAX_DIM]; MAX_DIM];
    match d {
        1 => {
            if m[0][0] == 0.0 {
                return Err(CoreError::InvalidArgument("singular B".into()));
            }
            out[0][0] = 1.0 / m[0][0];
        }
        2 => {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det == 0.0 || !det.is_finite() {
                return Err(CoreError::InvalidArgument("singular B".into()));
            }
            out[0][0] = m[1][1] / det;
            out[0][1] = -m[0][1] / det;
            out[1][0] = -m[1][0] / det;
            out[1][1] = m[0][0] / det;
        }
        _ => unreachable!(),
    }
    Ok(out)
}

#[inline]
fn mat_vec(d: usize, m: &SmallMat, v: &[f64], out: &mut [f64]) {
    for j in 0..d {
        let mut s = 0.0;
        for k in 0..d {
            s += m[j][k] * v[k];
        }
        out[j] = s;
    }
}

#[inline]
fn quad_form_eval(d: usize, m: &SmallMat, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..d {
        for k in 0..d {
            s += v[j] * m[j][k] * v[k];
        }
    }
    s
}

// ---------------------------------------------------------------------------
// trajectory-backed coefficients
// ---------------------------------------------------------------------------

/// Coefficients of the `w` equation derived from a packet trajectory and a
/// potential model.
pub struct GwtCoefficients<'a> {
    traj: &'a PacketTrajectory,
    model: &'a dyn PotentialModel,
    eps: f64,
    convention: AqConvention,
}

struct Slice {
    dim: usize,
    p: [f64; MAX_DIM],
    b: SmallMat,
    b_inv: SmallMat,
    /// (B^T)^{-1} alpha_I^2 B^{-1}
    imag_form: SmallMat,
    /// alpha_R B^{-1}
    alpha_r_binv: SmallMat,
    center: ExpansionCenter,
    sqrt_eps: f64,
}

impl<'a> GwtCoefficients<'a> {
    pub fn new(
        traj: &'a PacketTrajectory,
        model: &'a dyn PotentialModel,
        eps: f64,
        convention: AqConvention,
    ) -> Self {
        Self {
            traj,
            model,
            eps,
            convention,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn slice(&self, t: f64) -> Result<Slice> {
        let s = self.traj.sample(t)?;
        let d = s.dim();
        let b = mat_from(d, &s.b);
        let b_inv = mat_inv(d, &b)?;
        let alpha_i = s.alpha_i();
        let alpha_r = s.alpha_r();
        let binv_dyn = nalgebra::DMatrix::from_fn(d, d, |j, k| b_inv[j][k]);
        let imag_form = binv_dyn.transpose() * &alpha_i * &alpha_i * &binv_dyn;
        let alpha_r_binv = &alpha_r * &binv_dyn;
        let mut p = [0.0; MAX_DIM];
        for k in 0..d {
            p[k] = s.p[k];
        }
        Ok(Slice {
            dim: d,
            p,
            b,
            b_inv,
            imag_form: mat_from(d, &imag_form),
            alpha_r_binv: mat_from(d, &alpha_r_binv),
            center: ExpansionCenter::new(self.model, s.q.as_slice(), self.convention),
            sqrt_eps: self.eps.sqrt(),
        })
    }
}

impl Slice {
    #[inline]
    fn velocity(&self, model: &dyn PotentialModel, eta: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let mut xi = [0.0; MAX_DIM];
        mat_vec(d, &self.b_inv, eta, &mut xi);
        for x in xi[..d].iter_mut() {
            *x *= self.sqrt_eps;
        }
        let bundle = self.center.remainders(model, &xi[..d]);
        let mut g = [0.0; MAX_DIM];
        mat_vec(d, &self.b, &bundle.a_1, &mut g);
        for k in 0..d {
            out[k] = g[k] / self.sqrt_eps;
        }
    }

    #[inline]
    fn phase_rate(&self, model: &dyn PotentialModel, eta: &[f64]) -> f64 {
        let d = self.dim;
        let mut xi = [0.0; MAX_DIM];
        mat_vec(d, &self.b_inv, eta, &mut xi);
        for x in xi[..d].iter_mut() {
            *x *= self.sqrt_eps;
        }
        let bundle = self.center.remainders(model, &xi[..d]);
        let mut r_eta = [0.0; MAX_DIM];
        mat_vec(d, &self.alpha_r_binv, eta, &mut r_eta);
        let cross: f64 = (0..d).map(|k| bundle.a_1[k] * r_eta[k]).sum();
        let ar_p: f64 = (0..d).map(|k| bundle.a_r[k] * self.p[k]).sum();
        let eps = self.sqrt_eps * self.sqrt_eps;
        -2.0 * quad_form_eval(d, &self.imag_form, eta)
            - (bundle.u_r - 2.0 * self.sqrt_eps * cross - ar_p) / eps
    }
}

impl WCoefficients for GwtCoefficients<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn kinetic_form(&self, t: f64) -> Result<[[f64; MAX_DIM]; MAX_DIM]> {
        let s = self.traj.sample(t)?;
        let bbt = &s.b * s.b.transpose();
        Ok(mat_from(s.dim(), &bbt))
    }

    fn velocities(&self, t: f64, etas: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        let slice = self.slice(t)?;
        out.par_chunks_mut(d)
            .zip(etas.par_chunks(d))
            .with_min_len(256)
            .for_each(|(o, eta)| slice.velocity(self.model, eta, o));
        Ok(())
    }

    fn phase_rates(&self, t: f64, etas: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        let slice = self.slice(t)?;
        out.par_iter_mut()
            .zip(etas.par_chunks(d))
            .with_min_len(256)
            .for_each(|(o, eta)| *o = slice.phase_rate(self.model, eta));
        Ok(())
    }
}

/// Convection velocity `G = B A_(1)(xi)/sqrt(eps)` at scattered points.
pub fn eval_g(
    traj: &PacketTrajectory,
    model: &dyn PotentialModel,
    eps: f64,
    t: f64,
    etas: &[f64],
) -> Result<Vec<f64>> {
    let coeffs = GwtCoefficients::new(traj, model, eps, AqConvention::Half);
    let mut out = vec![0.0; etas.len()];
    coeffs.velocities(t, etas, &mut out)?;
    Ok(out)
}

/// Purely imaginary multiplier field
/// `F = -2i eta^T (B^T)^{-1} alpha_I^2 B^{-1} eta
///  + (U_r - 2 sqrt(eps) A_(1)^T alpha_R B^{-1} eta - A_r^T p)/(i eps)`.
pub fn eval_f(
    traj: &PacketTrajectory,
    model: &dyn PotentialModel,
    eps: f64,
    t: f64,
    etas: &[f64],
) -> Result<Vec<Complex64>> {
    let coeffs = GwtCoefficients::new(traj, model, eps, AqConvention::Half);
    let d = coeffs.dim();
    let mut im = vec![0.0; etas.len() / d];
    coeffs.phase_rates(t, etas, &mut im)?;
    Ok(im.into_iter().map(|v| Complex64::new(0.0, v)).collect())
}

// ---------------------------------------------------------------------------
// sub-steps over explicit intervals
// ---------------------------------------------------------------------------

fn quad_samples(quad: Quadrature, t0: f64, t1: f64) -> Vec<(f64, f64)> {
    // (sample time, weight)
    let tau = t1 - t0;
    match quad {
        Quadrature::Trapezoid => vec![(t0, 0.5 * tau), (t1, 0.5 * tau)],
        Quadrature::Midpoint => vec![(0.5 * (t0 + t1), tau)],
    }
}

fn apply_kinetic<C: WCoefficients + ?Sized>(
    values: &mut [Complex64],
    grid: &UniformGrid,
    coeffs: &C,
    t0: f64,
    t1: f64,
    quad: Quadrature,
) -> Result<()> {
    if t1 == t0 {
        return Ok(());
    }
    let d = grid.dim();
    let mut m_bar = [[0.0; MAX_DIM]; MAX_DIM];
    for &(ts, wgt) in &quad_samples(quad, t0, t1) {
        let m = coeffs.kinetic_form(ts)?;
        for j in 0..d {
            for k in 0..d {
                m_bar[j][k] += wgt * m[j][k];
            }
        }
    }
    let dims: Vec<usize> = grid.axes().iter().map(|ax| ax.n).collect();
    fft_forward_inplace(values, &dims);
    let spectral = SpectralGrid::of(grid);
    match d {
        1 => {
            for (k, z) in values.iter_mut().enumerate() {
                let zeta = spectral.wavenumber_at(0, k);
                let kl = 0.5 * m_bar[0][0] * zeta * zeta;
                *z *= Complex64::from_polar(1.0, -kl);
            }
        }
        2 => {
            let n1 = dims[1];
            let zetas0: Vec<f64> = (0..dims[0]).map(|k| spectral.wavenumber_at(0, k)).collect();
            let zetas1: Vec<f64> = (0..n1).map(|k| spectral.wavenumber_at(1, k)).collect();
            values.par_chunks_mut(n1).enumerate().for_each(|(k0, row)| {
                let z0 = zetas0[k0];
                for (k1, z) in row.iter_mut().enumerate() {
                    let zeta = [z0, zetas1[k1]];
                    let kl = 0.5 * quad_form_eval(2, &m_bar, &zeta);
                    *z *= Complex64::from_polar(1.0, -kl);
                }
            });
        }
        _ => unreachable!(),
    }
    fft_inverse_inplace(values, &dims);
    Ok(())
}

fn apply_potential<C: WCoefficients + ?Sized>(
    values: &mut [Complex64],
    nodes: &[f64],
    coeffs: &C,
    t0: f64,
    t1: f64,
    quad: Quadrature,
) -> Result<()> {
    if t1 == t0 {
        return Ok(());
    }
    let n = values.len();
    let mut acc = vec![0.0; n];
    let mut rates = vec![0.0; n];
    for &(ts, wgt) in &quad_samples(quad, t0, t1) {
        coeffs.phase_rates(ts, nodes, &mut rates)?;
        for (a, r) in acc.iter_mut().zip(&rates) {
            *a += wgt * r;
        }
    }
    for (z, f) in values.iter_mut().zip(&acc) {
        *z *= Complex64::from_polar(1.0, *f);
    }
    Ok(())
}

/// Backward characteristic feet: solves `d eta/dt = -G(eta, t)` from the
/// terminal nodes at `t1` down to `t0`.
fn trace_feet<C: WCoefficients + ?Sized>(
    nodes: &[f64],
    coeffs: &C,
    t0: f64,
    t1: f64,
    integrator: CharIntegrator,
) -> Result<Vec<f64>> {
    let tau = t1 - t0;
    let m = nodes.len();
    let mut feet = nodes.to_vec();
    if tau == 0.0 {
        return Ok(feet);
    }
    // substitute u = t1 - t: d eta/du = +G(eta, t1 - u), eta(0) = node
    match integrator {
        CharIntegrator::Heun => {
            let mut g1 = vec![0.0; m];
            coeffs.velocities(t1, nodes, &mut g1)?;
            let stage: Vec<f64> = nodes.iter().zip(&g1).map(|(x, g)| x + tau * g).collect();
            let mut g0 = vec![0.0; m];
            coeffs.velocities(t0, &stage, &mut g0)?;
            for ((f, ga), gb) in feet.iter_mut().zip(&g1).zip(&g0) {
                *f += 0.5 * tau * (ga + gb);
            }
        }
        CharIntegrator::Rk4 => {
            let tm = 0.5 * (t0 + t1);
            let mut k1 = vec![0.0; m];
            let mut k2 = vec![0.0; m];
            let mut k3 = vec![0.0; m];
            let mut k4 = vec![0.0; m];
            let mut stage = vec![0.0; m];
            coeffs.velocities(t1, nodes, &mut k1)?;
            for i in 0..m {
                stage[i] = nodes[i] + 0.5 * tau * k1[i];
            }
            coeffs.velocities(tm, &stage, &mut k2)?;
            for i in 0..m {
                stage[i] = nodes[i] + 0.5 * tau * k2[i];
            }
            coeffs.velocities(tm, &stage, &mut k3)?;
            for i in 0..m {
                stage[i] = nodes[i] + tau * k3[i];
            }
            coeffs.velocities(t0, &stage, &mut k4)?;
            for i in 0..m {
                feet[i] += tau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    if feet.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::SolverFailure {
            t: t0,
            message: "characteristic tracing produced a non-finite foot".into(),
        });
    }
    Ok(feet)
}

fn interp_at(grid: &UniformGrid, values: &mut Vec<Complex64>, feet: &[f64]) {
    let dims: Vec<usize> = grid.axes().iter().map(|ax| ax.n).collect();
    let mut coeffs = std::mem::take(values);
    fft_forward_inplace(&mut coeffs, &dims);
    let spec = SpectralField::from_parts(grid.clone(), coeffs);
    *values = spec.eval_at(feet);
}

fn apply_convection<C: WCoefficients + ?Sized>(
    values: &mut Vec<Complex64>,
    grid: &UniformGrid,
    nodes: &[f64],
    coeffs: &C,
    t0: f64,
    t1: f64,
    integrator: CharIntegrator,
) -> Result<()> {
    if t1 == t0 {
        return Ok(());
    }
    let feet = trace_feet(nodes, coeffs, t0, t1, integrator)?;
    interp_at(grid, values, &feet);
    Ok(())
}

fn apply_convection_potential<C: WCoefficients + ?Sized>(
    values: &mut Vec<Complex64>,
    grid: &UniformGrid,
    nodes: &[f64],
    coeffs: &C,
    t0: f64,
    t1: f64,
    integrator: CharIntegrator,
    quad: Quadrature,
) -> Result<()> {
    if t1 == t0 {
        return Ok(());
    }
    let tau = t1 - t0;
    let m = values.len();
    let feet = trace_feet(nodes, coeffs, t0, t1, integrator)?;
    // accumulated phase H = int F(eta(s), s) ds along the traced path
    let mut h = vec![0.0; m];
    match quad {
        Quadrature::Trapezoid => {
            let mut r0 = vec![0.0; m];
            let mut r1 = vec![0.0; m];
            coeffs.phase_rates(t0, &feet, &mut r0)?;
            coeffs.phase_rates(t1, nodes, &mut r1)?;
            for i in 0..m {
                h[i] = 0.5 * tau * (r0[i] + r1[i]);
            }
        }
        Quadrature::Midpoint => {
            let tm = 0.5 * (t0 + t1);
            let half = trace_feet(nodes, coeffs, tm, t1, integrator)?;
            let mut rm = vec![0.0; m];
            coeffs.phase_rates(tm, &half, &mut rm)?;
            for i in 0..m {
                h[i] = tau * rm[i];
            }
        }
    }
    interp_at(grid, values, &feet);
    for (z, hi) in values.iter_mut().zip(&h) {
        *z *= Complex64::from_polar(1.0, *hi);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// public per-operation API (integrates over [w.t, w.t + dt_eff])
// ---------------------------------------------------------------------------

fn finished(mut w: WState, dt_eff: f64) -> Result<WState> {
    w.t += dt_eff;
    if !w.field.is_finite() {
        return Err(CoreError::SolverFailure {
            t: w.t,
            message: "field contains non-finite values".into(),
        });
    }
    Ok(w)
}

/// Kinetic sub-step: `w_hat_l <- exp(-i K_l) w_hat_l` with
/// `K_l = int 1/2 |B(s)^T zeta_l|^2 ds` by the configured quadrature.
pub fn kinetic_step<C: WCoefficients + ?Sized>(
    w: &WState,
    coeffs: &C,
    dt_eff: f64,
    quad: Quadrature,
) -> Result<WState> {
    let mut out = w.clone();
    let grid = w.field.grid().clone();
    apply_kinetic(out.field.values_mut(), &grid, coeffs, w.t, w.t + dt_eff, quad)?;
    finished(out, dt_eff)
}

/// Potential sub-step: `w_j <- exp(F_j) w_j` with `F_j ~ int F(eta_j, s) ds`.
pub fn potential_step<C: WCoefficients + ?Sized>(
    w: &WState,
    coeffs: &C,
    dt_eff: f64,
    quad: Quadrature,
) -> Result<WState> {
    let mut out = w.clone();
    let nodes = w.field.grid().node_points();
    apply_potential(out.field.values_mut(), &nodes, coeffs, w.t, w.t + dt_eff, quad)?;
    finished(out, dt_eff)
}

/// Semi-Lagrangian convection sub-step: backward-traced feet plus spectral
/// interpolation.
pub fn convection_step<C: WCoefficients + ?Sized>(
    w: &WState,
    coeffs: &C,
    dt_eff: f64,
    integrator: CharIntegrator,
) -> Result<WState> {
    let mut out = w.clone();
    let grid = w.field.grid().clone();
    let nodes = grid.node_points();
    let mut values = std::mem::take(out.field.values_vec_mut());
    apply_convection(&mut values, &grid, &nodes, coeffs, w.t, w.t + dt_eff, integrator)?;
    debug_assert_eq!(values.len(), out.field.grid().num_nodes());
    *out.field.values_vec_mut() = values;
    finished(out, dt_eff)
}

/// Backward-forward step: the characteristic foot and the phase
/// `H = int F(eta(s), s) ds` along the traced path, then
/// `w_j <- exp(H) w(foot)`.
pub fn convection_potential_step<C: WCoefficients + ?Sized>(
    w: &WState,
    coeffs: &C,
    dt_eff: f64,
    integrator: CharIntegrator,
    quad: Quadrature,
) -> Result<WState> {
    let mut out = w.clone();
    let grid = w.field.grid().clone();
    let nodes = grid.node_points();
    let mut values = std::mem::take(out.field.values_vec_mut());
    apply_convection_potential(
        &mut values,
        &grid,
        &nodes,
        coeffs,
        w.t,
        w.t + dt_eff,
        integrator,
        quad,
    )?;
    debug_assert_eq!(values.len(), out.field.grid().num_nodes());
    *out.field.values_vec_mut() = values;
    finished(out, dt_eff)
}

/// One full step of the configured scheme/composition.
///
/// Strang SL-TS3 (kinetic outer): K over [t, t+dt/2], P over [t, t+dt/2],
/// C over [t, t+dt], P over [t+dt/2, t+dt], K over [t+dt/2, t+dt]. Half-step
/// quadratures integrate over the actual half-intervals. Lie variants apply
/// each operator once over the full step in the listed order.
pub fn advance<C: WCoefficients + ?Sized>(
    w: &WState,
    coeffs: &C,
    cfg: &SchemeConfig,
) -> Result<WState> {
    let mut out = w.clone();
    let grid = w.field.grid().clone();
    let nodes = grid.node_points();
    let mut values = std::mem::take(out.field.values_vec_mut());
    let (t0, t1) = (w.t, w.t + cfg.dt);
    let tm = 0.5 * (t0 + t1);
    let q = cfg.quadrature;
    let ci = cfg.char_integrator;

    match (cfg.scheme, cfg.composition, cfg.strang_order) {
        (Scheme::SlTs3, Composition::Strang, StrangOrder::KineticOuter) => {
            apply_kinetic(&mut values, &grid, coeffs, t0, tm, q)?;
            apply_potential(&mut values, &nodes, coeffs, t0, tm, q)?;
            apply_convection(&mut values, &grid, &nodes, coeffs, t0, t1, ci)?;
            apply_potential(&mut values, &nodes, coeffs, tm, t1, q)?;
            apply_kinetic(&mut values, &grid, coeffs, tm, t1, q)?;
        }
        (Scheme::SlTs3, Composition::Strang, StrangOrder::PotentialOuter) => {
            apply_potential(&mut values, &nodes, coeffs, t0, tm, q)?;
            apply_kinetic(&mut values, &grid, coeffs, t0, tm, q)?;
            apply_convection(&mut values, &grid, &nodes, coeffs, t0, t1, ci)?;
            apply_kinetic(&mut values, &grid, coeffs, tm, t1, q)?;
            apply_potential(&mut values, &nodes, coeffs, tm, t1, q)?;
        }
        (Scheme::SlTs3, Composition::Lie, _) => {
            apply_kinetic(&mut values, &grid, coeffs, t0, t1, q)?;
            apply_potential(&mut values, &nodes, coeffs, t0, t1, q)?;
            apply_convection(&mut values, &grid, &nodes, coeffs, t0, t1, ci)?;
        }
        (Scheme::SlTs2, Composition::Strang, StrangOrder::KineticOuter) => {
            apply_kinetic(&mut values, &grid, coeffs, t0, tm, q)?;
            apply_convection_potential(&mut values, &grid, &nodes, coeffs, t0, t1, ci, q)?;
            apply_kinetic(&mut values, &grid, coeffs, tm, t1, q)?;
        }
        (Scheme::SlTs2, Composition::Strang, StrangOrder::PotentialOuter) => {
            apply_convection_potential(&mut values, &grid, &nodes, coeffs, t0, tm, ci, q)?;
            apply_kinetic(&mut values, &grid, coeffs, t0, t1, q)?;
            apply_convection_potential(&mut values, &grid, &nodes, coeffs, tm, t1, ci, q)?;
        }
        (Scheme::SlTs2, Composition::Lie, _) => {
            apply_kinetic(&mut values, &grid, coeffs, t0, t1, q)?;
            apply_convection_potential(&mut values, &grid, &nodes, coeffs, t0, t1, ci, q)?;
        }
    }
    debug_assert_eq!(values.len(), out.field.grid().num_nodes());
    *out.field.values_vec_mut() = values;
    finished(out, cfg.dt)
}

/// Stateful driver: repeated [`advance`] with recorded diagnostics.
pub struct WSolver<'a, C: WCoefficients + ?Sized> {
    coeffs: &'a C,
    cfg: SchemeConfig,
    state: WState,
    diagnostics: Vec<StepDiagnostics>,
}

impl<'a, C: WCoefficients + ?Sized> WSolver<'a, C> {
    pub fn new(state: WState, coeffs: &'a C, cfg: SchemeConfig) -> Self {
        let initial = step_diagnostics(&state);
        Self {
            coeffs,
            cfg,
            state,
            diagnostics: vec![initial],
        }
    }

    pub fn state(&self) -> &WState {
        &self.state
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    pub fn into_state(self) -> WState {
        self.state
    }

    pub fn step(&mut self) -> Result<()> {
        self.state = advance(&self.state, self.coeffs, &self.cfg)?;
        self.diagnostics.push(step_diagnostics(&self.state));
        Ok(())
    }

    /// Advances to `t_final` in steps of the configured `dt` (last step
    /// shortened if needed).
    pub fn run_to(&mut self, t_final: f64) -> Result<()> {
        while self.state.t < t_final - 1e-12 * t_final.max(1.0) {
            let dt = self.cfg.dt.min(t_final - self.state.t);
            let mut cfg = self.cfg;
            cfg.dt = dt;
            self.state = advance(&self.state, self.coeffs, &cfg)?;
            self.diagnostics.push(step_diagnostics(&self.state));
        }
        Ok(())
    }
}

/// Test-only coefficient hooks; not part of the public contract.
#[doc(hidden)]
pub mod testing {
    use super::*;

    /// Constant velocity, zero kinetic and phase parts.
    pub struct ConstantVelocity {
        pub dim: usize,
        pub g: [f64; MAX_DIM],
    }

    impl WCoefficients for ConstantVelocity {
        fn dim(&self) -> usize {
            self.dim
        }
        fn kinetic_form(&self, _t: f64) -> Result<SmallMat> {
            Ok([[0.0; MAX_DIM]; MAX_DIM])
        }
        fn velocities(&self, _t: f64, etas: &[f64], out: &mut [f64]) -> Result<()> {
            for (chunk, _) in out.chunks_mut(self.dim).zip(etas.chunks(self.dim)) {
                chunk.copy_from_slice(&self.g[..self.dim]);
            }
            Ok(())
        }
        fn phase_rates(&self, _t: f64, _etas: &[f64], out: &mut [f64]) -> Result<()> {
            out.fill(0.0);
            Ok(())
        }
    }

    /// Forwards everything but forces `F = 0`.
    pub struct NullPhase<C>(pub C);

    impl<C: WCoefficients> WCoefficients for NullPhase<C> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn kinetic_form(&self, t: f64) -> Result<SmallMat> {
            self.0.kinetic_form(t)
        }
        fn velocities(&self, t: f64, etas: &[f64], out: &mut [f64]) -> Result<()> {
            self.0.velocities(t, etas, out)
        }
        fn phase_rates(&self, _t: f64, _etas: &[f64], out: &mut [f64]) -> Result<()> {
            out.fill(0.0);
            Ok(())
        }
    }
}
