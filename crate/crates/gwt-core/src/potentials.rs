//! Scalar potential `V`, vector potential `A`, the effective potential
//! `U = |A|^2/2 + V`, their derivatives, and the Taylor remainders about the
//! packet center that drive the `w` equation.
//!
//! Models supply analytic (closed-form) derivatives; finite differences are
//! used only as a test oracle so the coefficient accuracy is not polluted by
//! differencing error.

use std::sync::Arc;

use crate::grid::MAX_DIM;
use crate::{CoreError, Result};

/// Evaluators for `V`, `A` and their first and second derivatives.
///
/// Output layout: `grad_v` has `d` entries, `grad_a[j*d + k] = dA_j/dx_k`,
/// `hess_v[j*d + k] = d2V/dx_j dx_k`, and
/// `hess_a[(j*d + k)*d + k'] = d2A_j/dx_k dx_k'`.
pub trait PotentialModel: Send + Sync {
    fn dim(&self) -> usize;
    fn v(&self, x: &[f64]) -> f64;
    fn grad_v(&self, x: &[f64], out: &mut [f64]);
    fn hess_v(&self, x: &[f64], out: &mut [f64]);
    fn a(&self, x: &[f64], out: &mut [f64]);
    fn grad_a(&self, x: &[f64], out: &mut [f64]);
    fn hess_a(&self, x: &[f64], out: &mut [f64]);
}

/// `U`, `grad U` and `hess U` at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct EffectiveValues {
    pub u: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

/// Effective potential `U = |A|^2/2 + V` with derivatives by the chain rule.
pub fn eval_effective(model: &dyn PotentialModel, x: &[f64]) -> EffectiveValues {
    let d = model.dim();
    let mut a = [0.0; MAX_DIM];
    let mut ga = [0.0; MAX_DIM * MAX_DIM];
    let mut ha = [0.0; MAX_DIM * MAX_DIM * MAX_DIM];
    let mut gv = [0.0; MAX_DIM];
    let mut hv = [0.0; MAX_DIM * MAX_DIM];
    model.a(x, &mut a[..d]);
    model.grad_a(x, &mut ga[..d * d]);
    model.hess_a(x, &mut ha[..d * d * d]);
    model.grad_v(x, &mut gv[..d]);
    model.hess_v(x, &mut hv[..d * d]);

    let mut out = EffectiveValues::default();
    out.u = model.v(x) + 0.5 * a[..d].iter().map(|aj| aj * aj).sum::<f64>();
    for k in 0..d {
        let mut g = gv[k];
        for j in 0..d {
            g += a[j] * ga[j * d + k];
        }
        out.grad[k] = g;
    }
    for k in 0..d {
        for kp in 0..d {
            let mut h = hv[k * d + kp];
            for j in 0..d {
                h += ga[j * d + k] * ga[j * d + kp] + a[j] * ha[(j * d + k) * d + kp];
            }
            out.hess[k][kp] = h;
        }
    }
    out
}

/// Effective potential value only (no derivatives).
pub fn eval_u(model: &dyn PotentialModel, x: &[f64]) -> f64 {
    let d = model.dim();
    let mut a = [0.0; MAX_DIM];
    model.a(x, &mut a[..d]);
    model.v(x) + 0.5 * a[..d].iter().map(|aj| aj * aj).sum::<f64>()
}

/// Whether the quadratic term of the `A` expansion carries the Taylor 1/2.
///
/// The half convention is consistent with the Taylor theorem; the raw index
/// form (no 1/2) is kept available for sensitivity runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AqConvention {
    #[default]
    Half,
    Unscaled,
}

/// Taylor remainders of `U` and `A` at displacement `xi` from the center.
#[derive(Debug, Clone, Copy, Default)]
pub struct RemainderBundle {
    pub u_r: f64,
    pub a_1: [f64; MAX_DIM],
    pub a_q: [f64; MAX_DIM],
    pub a_r: [f64; MAX_DIM],
}

/// Frozen expansion data at a packet center `q`; `remainders` then costs one
/// `V` and one `A` evaluation per displacement.
#[derive(Debug, Clone)]
pub struct ExpansionCenter {
    dim: usize,
    q: [f64; MAX_DIM],
    u0: f64,
    grad_u: [f64; MAX_DIM],
    hess_u: [[f64; MAX_DIM]; MAX_DIM],
    a0: [f64; MAX_DIM],
    grad_a: [f64; MAX_DIM * MAX_DIM],
    hess_a: [f64; MAX_DIM * MAX_DIM * MAX_DIM],
    convention: AqConvention,
}

impl ExpansionCenter {
    pub fn new(model: &dyn PotentialModel, q: &[f64], convention: AqConvention) -> Self {
        let d = model.dim();
        let eff = eval_effective(model, q);
        let mut a0 = [0.0; MAX_DIM];
        let mut grad_a = [0.0; MAX_DIM * MAX_DIM];
        let mut hess_a = [0.0; MAX_DIM * MAX_DIM * MAX_DIM];
        model.a(q, &mut a0[..d]);
        model.grad_a(q, &mut grad_a[..d * d]);
        model.hess_a(q, &mut hess_a[..d * d * d]);
        let mut qb = [0.0; MAX_DIM];
        qb[..d].copy_from_slice(q);
        Self {
            dim: d,
            q: qb,
            u0: eff.u,
            grad_u: eff.grad,
            hess_u: eff.hess,
            a0,
            grad_a,
            hess_a,
            convention,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn remainders(&self, model: &dyn PotentialModel, xi: &[f64]) -> RemainderBundle {
        let d = self.dim;
        let mut x = [0.0; MAX_DIM];
        for k in 0..d {
            x[k] = self.q[k] + xi[k];
        }
        let u_full = eval_u(model, &x[..d]);
        let mut quad = 0.0;
        let mut lin = 0.0;
        for k in 0..d {
            lin += xi[k] * self.grad_u[k];
            for kp in 0..d {
                quad += xi[k] * self.hess_u[k][kp] * xi[kp];
            }
        }
        let u_r = u_full - self.u0 - lin - 0.5 * quad;

        let mut a_full = [0.0; MAX_DIM];
        model.a(&x[..d], &mut a_full[..d]);
        let scale = match self.convention {
            AqConvention::Half => 0.5,
            AqConvention::Unscaled => 1.0,
        };
        let mut bundle = RemainderBundle {
            u_r,
            ..Default::default()
        };
        for j in 0..d {
            let mut lin_a = 0.0;
            for k in 0..d {
                lin_a += self.grad_a[j * d + k] * xi[k];
            }
            bundle.a_1[j] = a_full[j] - self.a0[j] - lin_a;
            let mut q2 = 0.0;
            for k in 0..d {
                for kp in 0..d {
                    q2 += self.hess_a[(j * d + k) * d + kp] * xi[k] * xi[kp];
                }
            }
            bundle.a_q[j] = scale * q2;
            bundle.a_r[j] = bundle.a_1[j] - bundle.a_q[j];
        }
        bundle
    }
}

/// Taylor remainders of `U` and `A` about `q` at displacement `xi`.
pub fn taylor_remainders(
    model: &dyn PotentialModel,
    q: &[f64],
    xi: &[f64],
    convention: AqConvention,
) -> RemainderBundle {
    ExpansionCenter::new(model, q, convention).remainders(model, xi)
}

/// Max |div A| over a fixed sample lattice.
pub fn sampled_divergence(model: &dyn PotentialModel, half_width: f64) -> f64 {
    let d = model.dim();
    let per_axis = 9usize;
    let mut max = 0.0_f64;
    let mut ga = [0.0; MAX_DIM * MAX_DIM];
    let total = per_axis.pow(d as u32);
    for flat in 0..total {
        let mut x = [0.0; MAX_DIM];
        let mut rem = flat;
        for k in 0..d {
            let j = rem % per_axis;
            rem /= per_axis;
            // irrational stride, avoids sampling only symmetry points
            x[k] = -half_width + (j as f64 + 0.318_309_886) * 2.0 * half_width / per_axis as f64;
        }
        model.grad_a(&x[..d], &mut ga[..d * d]);
        let div: f64 = (0..d).map(|k| ga[k * d + k]).sum();
        max = max.max(div.abs());
    }
    max
}

const DIVERGENCE_TOL: f64 = 1e-10;

/// Registers a model for use with the transformed equation.
///
/// In two dimensions a non-divergence-free `A` is rejected (the implemented
/// equation omits the `(i eps/2)(div A) psi` term). The one-dimensional
/// built-ins are reductions of higher-dimensional divergence-free fields and
/// a scalar divergence does not transfer to them, so `d = 1` models skip the
/// check.
pub fn register(model: Arc<dyn PotentialModel>) -> Result<Arc<dyn PotentialModel>> {
    let d = model.dim();
    if d == 0 || d > MAX_DIM {
        return Err(CoreError::InvalidModel(format!("dimension {d} unsupported")));
    }
    if d >= 2 {
        let div = sampled_divergence(model.as_ref(), 4.0);
        if div > DIVERGENCE_TOL {
            return Err(CoreError::InvalidModel(format!(
                "vector potential is not divergence-free (sampled |div A| = {div:.3e})"
            )));
        }
    }
    Ok(model)
}

// ---------------------------------------------------------------------------
// Built-in model catalog
// ---------------------------------------------------------------------------

/// V = 1 + cos x, A = sin x (one dimension).
#[derive(Debug, Clone, Copy)]
pub struct CosineWell;

impl PotentialModel for CosineWell {
    fn dim(&self) -> usize {
        1
    }
    fn v(&self, x: &[f64]) -> f64 {
        1.0 + x[0].cos()
    }
    fn grad_v(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -x[0].sin();
    }
    fn hess_v(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -x[0].cos();
    }
    fn a(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0].sin();
    }
    fn grad_a(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0].cos();
    }
    fn hess_a(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -x[0].sin();
    }
}

/// V = 2 x^2, A = exp(-2 x^2) (one dimension); harmonic well with a vector
/// potential that vanishes at the domain boundary.
#[derive(Debug, Clone, Copy)]
pub struct GaussianCoil;

impl PotentialModel for GaussianCoil {
    fn dim(&self) -> usize {
        1
    }
    fn v(&self, x: &[f64]) -> f64 {
        2.0 * x[0] * x[0]
    }
    fn grad_v(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 4.0 * x[0];
    }
    fn hess_v(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = 4.0;
    }
    fn a(&self, x: &[f64], out: &mut [f64]) {
        out[0] = (-2.0 * x[0] * x[0]).exp();
    }
    fn grad_a(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -4.0 * x[0] * (-2.0 * x[0] * x[0]).exp();
    }
    fn hess_a(&self, x: &[f64], out: &mut [f64]) {
        let e = (-2.0 * x[0] * x[0]).exp();
        out[0] = (16.0 * x[0] * x[0] - 4.0) * e;
    }
}

/// V = 1/2 x^T K x, A = L x with symmetric `K`; `L` must be traceless in two
/// dimensions so that `A` stays divergence-free.
#[derive(Debug, Clone)]
pub struct Harmonic {
    dim: usize,
    spring: [f64; MAX_DIM * MAX_DIM],
    coupling: [f64; MAX_DIM * MAX_DIM],
}

impl Harmonic {
    pub fn new(dim: usize, spring: &[f64], coupling: &[f64]) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(CoreError::InvalidModel(format!("dimension {dim}")));
        }
        if spring.len() != dim * dim || coupling.len() != dim * dim {
            return Err(CoreError::InvalidModel(
                "spring/coupling matrices must be d x d".into(),
            ));
        }
        for j in 0..dim {
            for k in 0..dim {
                if (spring[j * dim + k] - spring[k * dim + j]).abs() > 1e-14 {
                    return Err(CoreError::InvalidModel("spring matrix not symmetric".into()));
                }
            }
        }
        let mut s = [0.0; MAX_DIM * MAX_DIM];
        let mut c = [0.0; MAX_DIM * MAX_DIM];
        s[..dim * dim].copy_from_slice(spring);
        c[..dim * dim].copy_from_slice(coupling);
        Ok(Self {
            dim,
            spring: s,
            coupling: c,
        })
    }

    /// 1D harmonic oscillator V = 1/2 k x^2 with no vector potential.
    pub fn oscillator_1d(k: f64) -> Self {
        Self::new(1, &[k], &[0.0]).expect("static shape")
    }
}

impl PotentialModel for Harmonic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn v(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for j in 0..d {
            for k in 0..d {
                s += x[j] * self.spring[j * d + k] * x[k];
            }
        }
        0.5 * s
    }
    fn grad_v(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for j in 0..d {
            out[j] = (0..d).map(|k| self.spring[j * d + k] * x[k]).sum();
        }
    }
    fn hess_v(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.spring[..self.dim * self.dim]);
    }
    fn a(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for j in 0..d {
            out[j] = (0..d).map(|k| self.coupling[j * d + k] * x[k]).sum();
        }
    }
    fn grad_a(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.coupling[..self.dim * self.dim]);
    }
    fn hess_a(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// A = (sin y, sin x), V = s (cos x + cos y) (two dimensions). The scale `s`
/// defaults to 1; `s = 0` leaves only the magnetic part.
#[derive(Debug, Clone, Copy)]
pub struct CrossedSine {
    pub v_scale: f64,
}

impl Default for CrossedSine {
    fn default() -> Self {
        Self { v_scale: 1.0 }
    }
}

impl PotentialModel for CrossedSine {
    fn dim(&self) -> usize {
        2
    }
    fn v(&self, x: &[f64]) -> f64 {
        self.v_scale * (x[0].cos() + x[1].cos())
    }
    fn grad_v(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -self.v_scale * x[0].sin();
        out[1] = -self.v_scale * x[1].sin();
    }
    fn hess_v(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = -self.v_scale * x[0].cos();
        out[3] = -self.v_scale * x[1].cos();
    }
    fn a(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[1].sin();
        out[1] = x[0].sin();
    }
    fn grad_a(&self, x: &[f64], out: &mut [f64]) {
        // (dA_j/dx_k) row-major: A_1 depends on y only, A_2 on x only
        out[0] = 0.0;
        out[1] = x[1].cos();
        out[2] = x[0].cos();
        out[3] = 0.0;
    }
    fn hess_a(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        // d2A_1/dy2 at (j=0,k=1,k'=1); d2A_2/dx2 at (j=1,k=0,k'=0)
        out[3] = -x[1].sin();
        out[4] = -x[0].sin();
    }
}

/// V = 0, A = 0.
#[derive(Debug, Clone, Copy)]
pub struct Free {
    pub dim: usize,
}

impl PotentialModel for Free {
    fn dim(&self) -> usize {
        self.dim
    }
    fn v(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn grad_v(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn hess_v(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn a(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn grad_a(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn hess_a(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Looks up a built-in model by name with numeric parameters.
///
/// Names: `cosine_well`, `gaussian_coil`, `harmonic` (params: dim, then the
/// spring and coupling matrices row-major), `crossed_sine` (optional param:
/// scalar-potential scale), `free` (param: dim).
pub fn by_name(name: &str, params: &[f64]) -> Result<Arc<dyn PotentialModel>> {
    let model: Arc<dyn PotentialModel> = match name {
        "cosine_well" => Arc::new(CosineWell),
        "gaussian_coil" => Arc::new(GaussianCoil),
        "crossed_sine" => Arc::new(CrossedSine {
            v_scale: params.first().copied().unwrap_or(1.0),
        }),
        "free" => Arc::new(Free {
            dim: params.first().copied().unwrap_or(1.0) as usize,
        }),
        "harmonic" => {
            let dim = *params.first().ok_or_else(|| {
                CoreError::InvalidModel("harmonic requires dim as first parameter".into())
            })? as usize;
            let need = 1 + 2 * dim * dim;
            if params.len() != need {
                return Err(CoreError::InvalidModel(format!(
                    "harmonic with dim {dim} needs {need} parameters, got {}",
                    params.len()
                )));
            }
            let spring = &params[1..1 + dim * dim];
            let coupling = &params[1 + dim * dim..];
            Arc::new(Harmonic::new(dim, spring, coupling)?)
        }
        other => {
            return Err(CoreError::InvalidModel(format!("unknown model '{other}'")));
        }
    };
    register(model)
}
