//! Uniform periodic tensor grids in 1 or 2 dimensions, discrete Fourier
//! transforms, discrete norms and trigonometric interpolation at scattered
//! points.
//!
//! Conventions: the forward transform carries no 1/N factor,
//! `w_hat[l] = sum_j w[j] exp(-i zeta_l (eta_j - a))` with wavenumbers
//! `zeta_l = 2 pi l / (b - a)`, `l = -N/2 .. N/2-1`; the inverse carries the
//! 1/N. Coefficients are stored in native FFT order (`l mod N`), and
//! [`SpectralField::signed_index`] maps between the two layouts.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::{CoreError, Result};

/// Maximum spatial dimension currently supported by the solvers.
pub const MAX_DIM: usize = 2;

/// One periodic axis `[a, b)` with `n` nodes at `a + j (b-a)/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Axis {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.a + j as f64 * self.spacing()
    }

    /// Wavenumber for the signed mode index `l`.
    pub fn wavenumber(&self, l: i64) -> f64 {
        2.0 * std::f64::consts::PI * l as f64 / self.len()
    }

    /// Wraps `x` into the periodic cell `[a, b)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let len = self.len();
        let y = (x - self.a).rem_euclid(len) + self.a;
        if y >= self.b {
            self.a
        } else {
            y
        }
    }
}

/// Uniform periodic tensor grid; axis 0 is the slowest (row-major layout).
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    axes: Vec<Axis>,
}

impl UniformGrid {
    /// Builds a grid from per-axis bounds and point counts.
    ///
    /// Counts must be even and at least 4, intervals non-degenerate.
    pub fn new(bounds: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        if bounds.is_empty() || bounds.len() != counts.len() {
            return Err(CoreError::InvalidGrid(format!(
                "got {} bounds and {} counts",
                bounds.len(),
                counts.len()
            )));
        }
        if bounds.len() > MAX_DIM {
            return Err(CoreError::InvalidGrid(format!(
                "dimension {} exceeds supported maximum {}",
                bounds.len(),
                MAX_DIM
            )));
        }
        let mut axes = Vec::with_capacity(bounds.len());
        for (&(a, b), &n) in bounds.iter().zip(counts) {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(CoreError::InvalidGrid(format!(
                    "degenerate interval [{a}, {b})"
                )));
            }
            if n < 4 || n % 2 != 0 {
                return Err(CoreError::InvalidGrid(format!(
                    "point count {n} must be even and >= 4"
                )));
            }
            axes.push(Axis { a, b, n });
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    /// Total number of nodes.
    pub fn num_nodes(&self) -> usize {
        self.axes.iter().map(|ax| ax.n).product()
    }

    /// Product of the axis spacings (volume element of one node).
    pub fn node_volume(&self) -> f64 {
        self.axes.iter().map(|ax| ax.spacing()).product()
    }

    /// Volume of the periodic cell.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|ax| ax.len()).product()
    }

    /// Coordinates of the node with flat index `idx`, written into `out`.
    pub fn node_coords(&self, idx: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        let mut rem = idx;
        for k in (0..self.dim()).rev() {
            let n = self.axes[k].n;
            out[k] = self.axes[k].node(rem % n);
            rem /= n;
        }
    }

    /// True when `x` lies inside the principal cell on every axis.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.axes
            .iter()
            .zip(x)
            .all(|(ax, &xi)| xi >= ax.a && xi < ax.b)
    }

    /// Flat list of all node coordinate tuples, d entries per node.
    pub fn node_points(&self) -> Vec<f64> {
        let d = self.dim();
        let m = self.num_nodes();
        let mut pts = vec![0.0; m * d];
        for idx in 0..m {
            let mut rem = idx;
            for k in (0..d).rev() {
                let n = self.axes[k].n;
                pts[idx * d + k] = self.axes[k].node(rem % n);
                rem /= n;
            }
        }
        pts
    }
}

/// Wavenumber table for a grid, in the signed layout `l = -N/2 .. N/2-1`.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    axes: Vec<Axis>,
}

impl SpectralGrid {
    pub fn of(grid: &UniformGrid) -> Self {
        Self {
            axes: grid.axes().to_vec(),
        }
    }

    /// Signed mode index for the native (FFT-order) index `k` on axis `ax`.
    pub fn signed_index(&self, ax: usize, k: usize) -> i64 {
        let n = self.axes[ax].n;
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// Wavenumber for the native index `k` on axis `ax`.
    pub fn wavenumber_at(&self, ax: usize, k: usize) -> f64 {
        self.axes[ax].wavenumber(self.signed_index(ax, k))
    }

    /// All wavenumbers of one axis in native order.
    pub fn wavenumbers(&self, ax: usize) -> Vec<f64> {
        (0..self.axes[ax].n)
            .map(|k| self.wavenumber_at(ax, k))
            .collect()
    }
}

/// Complex samples on a [`UniformGrid`], row-major over axes.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: UniformGrid,
    values: Vec<Complex64>,
}

impl GridField {
    pub fn new(grid: UniformGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        let n = grid.num_nodes();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: UniformGrid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let d = grid.dim();
        let mut x = [0.0_f64; MAX_DIM];
        let values = (0..grid.num_nodes())
            .map(|idx| {
                grid.node_coords(idx, &mut x[..d]);
                f(&x[..d])
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Crate-internal: lets the solvers move the buffer out and back without
    /// copying. Callers must restore a buffer of the same length.
    pub(crate) fn values_vec_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max |value| over nodes adjacent to the periodic seam (first or last
    /// index on any axis). Used as the domain-adequacy diagnostic.
    pub fn boundary_max_abs(&self) -> f64 {
        let d = self.grid.dim();
        let mut max = 0.0_f64;
        let mut idxs = [0usize; MAX_DIM];
        for (flat, z) in self.values.iter().enumerate() {
            let mut rem = flat;
            for k in (0..d).rev() {
                let n = self.grid.axes[k].n;
                idxs[k] = rem % n;
                rem /= n;
            }
            let on_edge = (0..d).any(|k| {
                let n = self.grid.axes[k].n;
                idxs[k] == 0 || idxs[k] == n - 1
            });
            if on_edge {
                max = max.max(z.norm());
            }
        }
        max
    }
}

/// Discrete l2 norm `( prod_k (b_k-a_k)/N_k * sum_j |w_j|^2 )^{1/2}`.
pub fn discrete_l2_norm(field: &GridField) -> f64 {
    (field.grid.node_volume() * sum_norm_sqr(field.values())).sqrt()
}

/// Chunked sum of |z|^2; keeps accumulation error well below test tolerances.
pub(crate) fn sum_norm_sqr(values: &[Complex64]) -> f64 {
    values
        .chunks(1024)
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum()
}

fn fft_cache(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, matches!(dir, FftDirection::Forward));
    let mut map = cache.lock().expect("fft cache poisoned");
    map.entry(key)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            planner.plan_fft(n, dir)
        })
        .clone()
}

/// In-place DFT of `values` with shape `dims` (row-major) along every axis.
fn fft_all_axes(values: &mut [Complex64], dims: &[usize], dir: FftDirection) {
    match dims.len() {
        1 => {
            let fft = fft_cache(dims[0], dir);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(values, &mut scratch);
        }
        2 => {
            let (n0, n1) = (dims[0], dims[1]);
            let fft1 = fft_cache(n1, dir);
            let mut scratch = vec![Complex64::default(); fft1.get_inplace_scratch_len()];
            for row in values.chunks_mut(n1) {
                fft1.process_with_scratch(row, &mut scratch);
            }
            let fft0 = fft_cache(n0, dir);
            let mut col = vec![Complex64::default(); n0];
            let mut scratch0 = vec![Complex64::default(); fft0.get_inplace_scratch_len()];
            for j in 0..n1 {
                for i in 0..n0 {
                    col[i] = values[i * n1 + j];
                }
                fft0.process_with_scratch(&mut col, &mut scratch0);
                for i in 0..n0 {
                    values[i * n1 + j] = col[i];
                }
            }
        }
        _ => unreachable!("grids are limited to {MAX_DIM} dimensions"),
    }
}

/// In-place forward DFT of a value buffer with the given row-major shape.
pub(crate) fn fft_forward_inplace(values: &mut [Complex64], dims: &[usize]) {
    fft_all_axes(values, dims, FftDirection::Forward);
}

/// In-place inverse DFT including the 1/prod(N) normalization.
pub(crate) fn fft_inverse_inplace(values: &mut [Complex64], dims: &[usize]) {
    fft_all_axes(values, dims, FftDirection::Inverse);
    let scale = 1.0 / dims.iter().product::<usize>() as f64;
    for z in values.iter_mut() {
        *z *= scale;
    }
}

/// Spectral coefficients of a field, in native FFT order per axis.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: UniformGrid,
    spectral: SpectralGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// Wraps an already-transformed coefficient buffer.
    pub(crate) fn from_parts(grid: UniformGrid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.num_nodes());
        Self {
            spectral: SpectralGrid::of(&grid),
            grid,
            coeffs,
        }
    }
}

/// Forward transform: `w_hat_l = sum_j w_j exp(-i zeta_l . (eta_j - a))`.
pub fn transform_forward(field: &GridField) -> SpectralField {
    let dims: Vec<usize> = field.grid.axes().iter().map(|ax| ax.n).collect();
    let mut coeffs = field.values.clone();
    fft_all_axes(&mut coeffs, &dims, FftDirection::Forward);
    SpectralField {
        spectral: SpectralGrid::of(&field.grid),
        grid: field.grid.clone(),
        coeffs,
    }
}

/// Inverse transform, including the `1/prod N_k` normalization.
pub fn transform_inverse(spec: &SpectralField) -> GridField {
    let dims: Vec<usize> = spec.grid.axes().iter().map(|ax| ax.n).collect();
    let mut values = spec.coeffs.clone();
    fft_all_axes(&mut values, &dims, FftDirection::Inverse);
    let scale = 1.0 / spec.grid.num_nodes() as f64;
    for z in values.iter_mut() {
        *z *= scale;
    }
    GridField {
        grid: spec.grid.clone(),
        values,
    }
}

impl SpectralField {
    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn spectral_grid(&self) -> &SpectralGrid {
        &self.spectral
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Maps a native flat index to the signed mode index of axis `ax`.
    pub fn signed_index(&self, ax: usize, k: usize) -> i64 {
        self.spectral.signed_index(ax, k)
    }

    /// Evaluates the trigonometric interpolant at one point.
    pub fn eval_at_point(&self, x: &[f64]) -> Complex64 {
        match self.grid.dim() {
            1 => eval_1d(&self.coeffs, self.grid.axis(0), x[0]),
            2 => {
                let mut col = vec![Complex64::default(); self.grid.axis(1).n];
                eval_2d(
                    &self.coeffs,
                    self.grid.axis(0),
                    self.grid.axis(1),
                    x[0],
                    x[1],
                    &mut col,
                )
            }
            _ => unreachable!(),
        }
    }

    /// Evaluates the interpolant at scattered points (`d` coordinates per
    /// point, flat). Runs in parallel over points.
    pub fn eval_at(&self, points: &[f64]) -> Vec<Complex64> {
        let d = self.grid.dim();
        assert!(
            points.len() % d == 0,
            "point buffer length {} not divisible by dim {}",
            points.len(),
            d
        );
        match d {
            1 => points
                .par_iter()
                .with_min_len(64)
                .map(|&x| eval_1d(&self.coeffs, self.grid.axis(0), x))
                .collect(),
            2 => {
                let ax0 = *self.grid.axis(0);
                let ax1 = *self.grid.axis(1);
                points
                    .par_chunks(2)
                    .with_min_len(8)
                    .map_init(
                        || vec![Complex64::default(); ax1.n],
                        |col, xy| eval_2d(&self.coeffs, &ax0, &ax1, xy[0], xy[1], col),
                    )
                    .collect()
            }
            _ => unreachable!(),
        }
    }
}

/// Unit phase factor `exp(i zeta_1 (x - a))` for one axis, argument wrapped
/// into the cell first to keep the trig argument small.
fn base_rotor(ax: &Axis, x: f64) -> Complex64 {
    let frac = (x - ax.a).rem_euclid(ax.len()) / ax.len();
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * frac)
}

const RENORM_EVERY: usize = 128;

/// Fills `out[k] = exp(i zeta_{l(k)} (x-a))` in native order, refreshing the
/// recurrence with an exact exponential every few steps to bound drift.
fn fill_phases(ax: &Axis, x: f64, out: &mut [Complex64]) {
    let n = ax.n;
    let r = base_rotor(ax, x);
    let frac = (x - ax.a).rem_euclid(ax.len()) / ax.len();
    let exact = |l: i64| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * frac * l as f64);
    let mut ph = Complex64::new(1.0, 0.0);
    for k in 0..n / 2 {
        if k % RENORM_EVERY == 0 {
            ph = exact(k as i64);
        }
        out[k] = ph;
        ph *= r;
    }
    let rc = r.conj();
    let mut ph = rc;
    for step in 0..n / 2 {
        let k = n - 1 - step; // signed l = -(step+1)
        if step % RENORM_EVERY == 0 {
            ph = exact(-(step as i64 + 1));
        }
        out[k] = ph;
        ph *= rc;
    }
}

fn eval_1d(coeffs: &[Complex64], ax: &Axis, x: f64) -> Complex64 {
    let n = ax.n;
    let r = base_rotor(ax, x);
    let frac = (x - ax.a).rem_euclid(ax.len()) / ax.len();
    let exact = |l: i64| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * frac * l as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut ph = Complex64::new(1.0, 0.0);
    for k in 0..n / 2 {
        if k % RENORM_EVERY == 0 {
            ph = exact(k as i64);
        }
        acc += coeffs[k] * ph;
        ph *= r;
    }
    let rc = r.conj();
    let mut ph = rc;
    for step in 0..n / 2 {
        let k = n - 1 - step;
        if step % RENORM_EVERY == 0 {
            ph = exact(-(step as i64 + 1));
        }
        acc += coeffs[k] * ph;
        ph *= rc;
    }
    acc / n as f64
}

fn eval_2d(
    coeffs: &[Complex64],
    ax0: &Axis,
    ax1: &Axis,
    x0: f64,
    x1: f64,
    col_phases: &mut [Complex64],
) -> Complex64 {
    let (n0, n1) = (ax0.n, ax1.n);
    fill_phases(ax1, x1, col_phases);
    let r = base_rotor(ax0, x0);
    let frac = (x0 - ax0.a).rem_euclid(ax0.len()) / ax0.len();
    let exact = |l: i64| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * frac * l as f64);
    let row_sum = |k0: usize| -> Complex64 {
        let row = &coeffs[k0 * n1..(k0 + 1) * n1];
        let mut s = Complex64::new(0.0, 0.0);
        for (c, p) in row.iter().zip(col_phases.iter()) {
            s += c * p;
        }
        s
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let mut ph = Complex64::new(1.0, 0.0);
    for k in 0..n0 / 2 {
        if k % RENORM_EVERY == 0 {
            ph = exact(k as i64);
        }
        acc += row_sum(k) * ph;
        ph *= r;
    }
    let rc = r.conj();
    let mut ph = rc;
    for step in 0..n0 / 2 {
        let k = n0 - 1 - step;
        if step % RENORM_EVERY == 0 {
            ph = exact(-(step as i64 + 1));
        }
        acc += row_sum(k) * ph;
        ph *= rc;
    }
    acc / (n0 * n1) as f64
}

/// Convenience: builds a grid, checking the invariants.
pub fn make_grid(bounds: &[(f64, f64)], counts: &[usize]) -> Result<UniformGrid> {
    UniformGrid::new(bounds, counts)
}

/// Evaluates the trigonometric interpolant of `field` at scattered points.
pub fn spectral_eval_at(field: &GridField, points: &[f64]) -> Vec<Complex64> {
    transform_forward(field).eval_at(points)
}
