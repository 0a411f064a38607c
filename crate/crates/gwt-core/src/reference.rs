//! Direct semi-Lagrangian time-splitting (SL-TS) solver for the
//! untransformed equation
//! `i eps psi_t = -eps^2/2 Lap psi + i eps A . grad psi + U psi`
//! on the physical grid, used to produce benchmark solutions.
//!
//! Strang composition per step: K(dt/2) C(dt/2) P(dt) C(dt/2) K(dt/2) with
//! kinetic and potential multipliers in Fourier/physical space and the
//! convection solved by backward characteristic tracing plus spectral
//! interpolation. The characteristics `dx/dt = -A(x)` are autonomous, so the
//! feet are traced once per step size and cached across steps.

use num_complex::Complex64;

use crate::grid::{
    fft_forward_inplace, fft_inverse_inplace, GridField, SpectralField, SpectralGrid, UniformGrid,
    MAX_DIM,
};
use crate::potentials::{eval_u, PotentialModel};
use crate::{CoreError, Result};

/// Wave function samples on the x-grid with clock and eps.
#[derive(Debug, Clone)]
pub struct PsiState {
    pub field: GridField,
    pub t: f64,
    pub eps: f64,
}

/// SL-TS stepper with per-step-size caches.
pub struct ReferenceSolver {
    grid: UniformGrid,
    dt: f64,
    feet_half: Vec<f64>,
    kin_half: Vec<Complex64>,
    pot_full: Vec<Complex64>,
}

impl ReferenceSolver {
    pub fn new(model: &dyn PotentialModel, grid: UniformGrid, eps: f64, dt: f64) -> Result<Self> {
        if dt <= 0.0 || eps <= 0.0 {
            return Err(CoreError::InvalidArgument(format!(
                "need dt > 0 and eps > 0, got dt = {dt}, eps = {eps}"
            )));
        }
        if model.dim() != grid.dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "model dim {} vs grid dim {}",
                model.dim(),
                grid.dim()
            )));
        }
        let d = grid.dim();
        let nodes = grid.node_points();

        // backward solve of dx/ds = -A(x) from each terminal node over
        // tau = dt/2 equals one forward RK4 step of dx/du = +A(x)
        let tau = 0.5 * dt;
        let m = nodes.len() / d;
        let mut feet_half = vec![0.0; nodes.len()];
        let mut a1 = [0.0; MAX_DIM];
        let mut a2 = [0.0; MAX_DIM];
        let mut a3 = [0.0; MAX_DIM];
        let mut a4 = [0.0; MAX_DIM];
        let mut stage = [0.0; MAX_DIM];
        for i in 0..m {
            let x = &nodes[i * d..(i + 1) * d];
            model.a(x, &mut a1[..d]);
            for k in 0..d {
                stage[k] = x[k] + 0.5 * tau * a1[k];
            }
            model.a(&stage[..d], &mut a2[..d]);
            for k in 0..d {
                stage[k] = x[k] + 0.5 * tau * a2[k];
            }
            model.a(&stage[..d], &mut a3[..d]);
            for k in 0..d {
                stage[k] = x[k] + tau * a3[k];
            }
            model.a(&stage[..d], &mut a4[..d]);
            for k in 0..d {
                feet_half[i * d + k] =
                    x[k] + tau / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k]);
            }
        }

        // kinetic half-step multiplier exp(-i eps |zeta|^2 dt / 4)
        let spectral = SpectralGrid::of(&grid);
        let total = grid.num_nodes();
        let mut kin_half = Vec::with_capacity(total);
        match d {
            1 => {
                for k in 0..total {
                    let z = spectral.wavenumber_at(0, k);
                    kin_half.push(Complex64::from_polar(1.0, -eps * z * z * tau / 2.0));
                }
            }
            2 => {
                let n1 = grid.axis(1).n;
                for flat in 0..total {
                    let z0 = spectral.wavenumber_at(0, flat / n1);
                    let z1 = spectral.wavenumber_at(1, flat % n1);
                    kin_half.push(Complex64::from_polar(
                        1.0,
                        -eps * (z0 * z0 + z1 * z1) * tau / 2.0,
                    ));
                }
            }
            _ => unreachable!(),
        }

        // potential full-step multiplier exp(-i U(x) dt / eps)
        let mut pot_full = Vec::with_capacity(total);
        for i in 0..total {
            let x = &nodes[i * d..(i + 1) * d];
            pot_full.push(Complex64::from_polar(1.0, -eval_u(model, x) * dt / eps));
        }

        Ok(Self {
            grid,
            dt,
            feet_half,
            kin_half,
            pot_full,
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn convect_half(&self, values: &mut Vec<Complex64>) {
        let dims: Vec<usize> = self.grid.axes().iter().map(|ax| ax.n).collect();
        let mut coeffs = std::mem::take(values);
        fft_forward_inplace(&mut coeffs, &dims);
        let spec = SpectralField::from_parts(self.grid.clone(), coeffs);
        *values = spec.eval_at(&self.feet_half);
    }

    fn kinetic_half(&self, values: &mut [Complex64]) {
        let dims: Vec<usize> = self.grid.axes().iter().map(|ax| ax.n).collect();
        fft_forward_inplace(values, &dims);
        for (z, m) in values.iter_mut().zip(&self.kin_half) {
            *z *= m;
        }
        fft_inverse_inplace(values, &dims);
    }

    /// One Strang step K(dt/2) C(dt/2) P(dt) C(dt/2) K(dt/2).
    pub fn advance(&self, psi: &PsiState) -> Result<PsiState> {
        if psi.field.grid() != &self.grid {
            return Err(CoreError::IncompatibleGrids(
                "state grid differs from solver grid".into(),
            ));
        }
        let mut out = psi.clone();
        let values = out.field.values_vec_mut();
        self.kinetic_half(values);
        self.convect_half(values);
        for (z, m) in values.iter_mut().zip(&self.pot_full) {
            *z *= m;
        }
        self.convect_half(values);
        self.kinetic_half(values);
        out.t += self.dt;
        if !out.field.is_finite() {
            return Err(CoreError::SolverFailure {
                t: out.t,
                message: "reference field contains non-finite values".into(),
            });
        }
        Ok(out)
    }
}

/// One SL-TS step (builds the per-step caches; prefer [`ReferenceSolver`]
/// when stepping repeatedly).
pub fn reference_advance(
    psi: &PsiState,
    model: &dyn PotentialModel,
    dt: f64,
) -> Result<PsiState> {
    ReferenceSolver::new(model, psi.field.grid().clone(), psi.eps, dt)?.advance(psi)
}

/// Runs SL-TS to `t_final`; `snap_times` collects intermediate states (each
/// matched to the nearest step boundary within half a step).
pub fn run_reference(
    psi0: &PsiState,
    model: &dyn PotentialModel,
    t_final: f64,
    dt: f64,
    snap_times: &[f64],
) -> Result<(PsiState, Vec<PsiState>)> {
    if t_final < psi0.t {
        return Err(CoreError::InvalidArgument(format!(
            "t_final {t_final} precedes state time {}",
            psi0.t
        )));
    }
    let solver = ReferenceSolver::new(model, psi0.field.grid().clone(), psi0.eps, dt)?;
    let mut psi = psi0.clone();
    let mut snaps: Vec<PsiState> = Vec::new();
    let grab = |p: &PsiState, snaps: &mut Vec<PsiState>| {
        for &ts in snap_times {
            if (p.t - ts).abs() < 0.5 * dt && !snaps.iter().any(|s| s.t == p.t) {
                snaps.push(p.clone());
            }
        }
    };
    grab(&psi, &mut snaps);
    while psi.t < t_final - 1e-12 * t_final.max(1.0) {
        let h = dt.min(t_final - psi.t);
        psi = if (h - dt).abs() <= f64::EPSILON * dt {
            solver.advance(&psi)?
        } else {
            reference_advance(&psi, model, h)?
        };
        grab(&psi, &mut snaps);
    }
    Ok((psi, snaps))
}
