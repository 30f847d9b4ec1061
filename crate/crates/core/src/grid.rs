//! Periodic square grid, spectral transforms and the spectral operators built
//! on them (derivatives, fractional Laplacian, off-grid sampling).
//!
//! Values are stored row-major with `x1` varying fastest: node `(i, j)` sits at
//! `x = (i h, j h)` with `h = L / n`. Spectral coefficients are normalized so
//! that `f(x) = sum_k c_k exp(i xi_k . x)`, i.e. `c = FFT(f) / n^2`, and are
//! kept in a `k1`-major layout (`k1 * n + k2`) which saves one transpose per
//! transform pair.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Cached forward/inverse plans for an `n x n` complex transform.
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl Fft2 {
    /// Shared plan for size `n`. Plans are immutable and can be used from
    /// any number of workers, each with its own scratch buffer.
    pub fn get(n: usize) -> Arc<Fft2> {
        static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
        let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = plans.lock().expect("fft plan cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(n);
                let inverse = planner.plan_fft_inverse(n);
                let scratch_len = forward
                    .get_inplace_scratch_len()
                    .max(inverse.get_inplace_scratch_len());
                Arc::new(Fft2 {
                    n,
                    forward,
                    inverse,
                    scratch_len,
                })
            })
            .clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn make_scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.scratch_len]
    }

    /// Physical layout in, unnormalized spectrum (k1-major) out.
    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        self.forward.process_with_scratch(buf, scratch);
        transpose_in_place(buf, self.n);
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Spectrum (k1-major) in, physical layout out. Unnormalized: feeding the
    /// `c_k` coefficients returns grid values directly.
    pub fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        self.inverse.process_with_scratch(buf, scratch);
        transpose_in_place(buf, self.n);
        self.inverse.process_with_scratch(buf, scratch);
    }
}

fn transpose_in_place(buf: &mut [Complex64], n: usize) {
    for a in 0..n {
        for b in (a + 1)..n {
            buf.swap(a * n + b, b * n + a);
        }
    }
}

/// Integer frequencies and physical wavenumbers for one axis, shared by both
/// axes of the square grid.
#[derive(Clone, Debug)]
pub struct WaveVectorTable {
    n: usize,
    period: f64,
    freq: Vec<i64>,
    xi: Vec<f64>,
}

impl WaveVectorTable {
    pub fn new(n: usize, period: f64) -> Self {
        let half = (n / 2) as i64;
        let freq: Vec<i64> = (0..n as i64)
            .map(|j| if j <= half { j } else { j - n as i64 })
            .collect();
        let scale = 2.0 * PI / period;
        let xi = freq.iter().map(|&k| k as f64 * scale).collect();
        Self {
            n,
            period,
            freq,
            xi,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Integer frequency of spectral index `j` (the Nyquist index maps to `+n/2`).
    pub fn freq(&self, j: usize) -> i64 {
        self.freq[j]
    }

    pub fn xi(&self, j: usize) -> f64 {
        self.xi[j]
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    /// Symbol of `d/dx` along one axis. Zero on the Nyquist index, whose real
    /// interpolant `cos(n x / 2)` has no resolvable derivative on the grid.
    pub fn deriv(&self, j: usize) -> Complex64 {
        if self.is_nyquist(j) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, self.xi[j])
        }
    }

    /// Symbol of `d^2/dx^2` (even, kept on the Nyquist index).
    pub fn second_deriv(&self, j: usize) -> f64 {
        -self.xi[j] * self.xi[j]
    }

    pub fn abs_xi(&self, j1: usize, j2: usize) -> f64 {
        self.xi[j1].hypot(self.xi[j2])
    }

    /// One-axis factor of the translation `f(x) -> f(x - s)`.
    pub fn shift_phase(&self, j: usize, s: f64) -> Complex64 {
        let arg = self.xi[j] * s;
        if self.is_nyquist(j) {
            Complex64::new(arg.cos(), 0.0)
        } else {
            Complex64::new(arg.cos(), -arg.sin())
        }
    }

    /// Per-axis shift factors for all spectral indices.
    pub fn shift_phases(&self, s: f64) -> Vec<Complex64> {
        (0..self.n).map(|j| self.shift_phase(j, s)).collect()
    }
}

/// Spectral coefficients of a field (k1-major layout).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    n: usize,
    period: f64,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of the integer frequency pair `(k1, k2)`, taken modulo `n`.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.n as i64;
        let j1 = k1.rem_euclid(n) as usize;
        let j2 = k2.rem_euclid(n) as usize;
        self.coeffs[j1 * self.n + j2]
    }
}

/// Off-grid sampling method for [`sample_shifted`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SampleMethod {
    #[default]
    Spectral,
    Bilinear,
}

/// Real samples of the interface height on the periodic grid.
#[derive(Clone, Debug)]
pub struct InterfaceField {
    n: usize,
    period: f64,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

pub(crate) fn check_grid(n: usize, period: f64) -> Result<()> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::GridSize(n));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::Period(period));
    }
    Ok(())
}

impl InterfaceField {
    pub fn new(n: usize, period: f64, values: Vec<f64>) -> Result<Self> {
        check_grid(n, period)?;
        if values.len() != n * n {
            return Err(Error::Length {
                n,
                expected: n * n,
                got: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                i: idx % n,
                j: idx / n,
                value: values[idx],
            });
        }
        Ok(Self::from_parts(n, period, values))
    }

    pub(crate) fn from_parts(n: usize, period: f64, values: Vec<f64>) -> Self {
        Self {
            n,
            period,
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn zeros(n: usize, period: f64) -> Result<Self> {
        Self::new(n, period, vec![0.0; n * n])
    }

    /// Samples `f(x1, x2)` at every node.
    pub fn from_fn(n: usize, period: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_grid(n, period)?;
        let h = period / n as f64;
        let values = (0..n * n)
            .map(|idx| f((idx % n) as f64 * h, (idx / n) as f64 * h))
            .collect();
        Self::new(n, period, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    /// Physical coordinates of the node with flat index `idx`.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        [(idx % self.n) as f64 * h, (idx / self.n) as f64 * h]
    }

    pub fn same_grid(&self, other: &InterfaceField) -> bool {
        self.n == other.n && self.period == other.period
    }

    pub fn wave_vectors(&self) -> WaveVectorTable {
        WaveVectorTable::new(self.n, self.period)
    }

    /// New field on the same grid. Values are trusted to be finite.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.n * self.n);
        Self::from_parts(self.n, self.period, values)
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Continuum `L^2` norm over the torus.
    pub fn l2_norm(&self) -> f64 {
        let h = self.spacing();
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        (pairwise_sum(&sq) * h * h).sqrt()
    }

    /// `int f g dx` over the torus.
    pub fn inner(&self, other: &InterfaceField) -> f64 {
        let h = self.spacing();
        let prod: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        pairwise_sum(&prod) * h * h
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.with_values(self.values.iter().map(|v| a * v).collect())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &InterfaceField) -> Self {
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(s, o)| s + a * o)
                .collect(),
        )
    }

    pub fn sub(&self, other: &InterfaceField) -> Self {
        self.axpy(-1.0, other)
    }

    /// Lattice translation: result(i, j) = self(i - di, j - dj).
    pub fn roll(&self, di: i64, dj: i64) -> Self {
        let n = self.n as i64;
        let mut out = vec![0.0; self.values.len()];
        for j in 0..n {
            for i in 0..n {
                let si = (i - di).rem_euclid(n);
                let sj = (j - dj).rem_euclid(n);
                out[(j * n + i) as usize] = self.values[(sj * n + si) as usize];
            }
        }
        self.with_values(out)
    }

    /// `g(x) = f(-x)` on the grid.
    pub fn reflected(&self) -> Self {
        let n = self.n;
        let mut out = vec![0.0; self.values.len()];
        for j in 0..n {
            for i in 0..n {
                out[j * n + i] = self.values[((n - j) % n) * n + (n - i) % n];
            }
        }
        self.with_values(out)
    }

    /// Cached normalized spectral coefficients.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let fft = Fft2::get(self.n);
            let mut buf: Vec<Complex64> = self
                .values
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            let mut scratch = fft.make_scratch();
            fft.forward(&mut buf, &mut scratch);
            let norm = 1.0 / (self.n * self.n) as f64;
            buf.iter_mut().for_each(|c| *c *= norm);
            buf
        })
    }

    pub fn has_cached_spectrum(&self) -> bool {
        self.spectrum.get().is_some()
    }

    /// Build a field from normalized coefficients; the imaginary part of the
    /// inverse transform (round-off for Hermitian input) is discarded.
    pub(crate) fn from_coeffs(n: usize, period: f64, mut coeffs: Vec<Complex64>) -> Self {
        let fft = Fft2::get(n);
        let mut scratch = fft.make_scratch();
        fft.inverse(&mut coeffs, &mut scratch);
        Self::from_parts(n, period, coeffs.iter().map(|c| c.re).collect())
    }

    /// Multiply the spectrum by `symbol(j1, j2)` and transform back.
    pub fn apply_symbol(&self, symbol: impl Fn(usize, usize) -> Complex64) -> Self {
        let n = self.n;
        let spec = self.spectrum();
        let coeffs = (0..n * n)
            .map(|idx| spec[idx] * symbol(idx / n, idx % n))
            .collect();
        Self::from_coeffs(n, self.period, coeffs)
    }
}

/// Deterministic pairwise summation (fixed order regardless of caller).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Normalized spectral coefficients of `f`.
pub fn to_spectral(f: &InterfaceField) -> Spectrum {
    Spectrum {
        n: f.n,
        period: f.period,
        coeffs: f.spectrum().to_vec(),
    }
}

pub fn from_spectral(spec: &Spectrum) -> Result<InterfaceField> {
    check_grid(spec.n, spec.period)?;
    let field = InterfaceField::from_coeffs(spec.n, spec.period, spec.coeffs.clone());
    InterfaceField::new(spec.n, spec.period, field.into_values())
}

/// `(-Delta)^s` as the multiplier `|xi|^{2s}`, zero on the mean mode.
pub fn fractional_laplacian(f: &InterfaceField, s: f64) -> Result<InterfaceField> {
    if !(-1.0..=3.0).contains(&s) {
        return Err(Error::FractionalOrder(s));
    }
    if s < 0.0 {
        let mean = f.mean();
        if mean.abs() > 1e-12 * (1.0 + f.max_abs()) {
            return Err(Error::NonZeroMean { s, mean });
        }
    }
    let wv = f.wave_vectors();
    Ok(f.apply_symbol(|j1, j2| {
        if j1 == 0 && j2 == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(wv.abs_xi(j1, j2).powf(2.0 * s), 0.0)
        }
    }))
}

/// Spectral gradient `(d f / d x1, d f / d x2)`.
pub fn gradient(f: &InterfaceField) -> (InterfaceField, InterfaceField) {
    let wv = f.wave_vectors();
    let gx = f.apply_symbol(|j1, _| wv.deriv(j1));
    let gy = f.apply_symbol(|_, j2| wv.deriv(j2));
    (gx, gy)
}

pub fn laplacian(f: &InterfaceField) -> InterfaceField {
    let wv = f.wave_vectors();
    f.apply_symbol(|j1, j2| Complex64::new(wv.second_deriv(j1) + wv.second_deriv(j2), 0.0))
}

/// Second derivatives `[f_11, f_12, f_22]`.
pub fn hessian(f: &InterfaceField) -> [InterfaceField; 3] {
    let wv = f.wave_vectors();
    [
        f.apply_symbol(|j1, _| Complex64::new(wv.second_deriv(j1), 0.0)),
        f.apply_symbol(|j1, j2| wv.deriv(j1) * wv.deriv(j2)),
        f.apply_symbol(|_, j2| Complex64::new(wv.second_deriv(j2), 0.0)),
    ]
}

/// `f(x - shift)` at every grid node.
pub fn sample_shifted(f: &InterfaceField, shift: [f64; 2], method: SampleMethod) -> InterfaceField {
    match method {
        SampleMethod::Spectral => {
            let wv = f.wave_vectors();
            let p1 = wv.shift_phases(shift[0]);
            let p2 = wv.shift_phases(shift[1]);
            f.apply_symbol(|j1, j2| p1[j1] * p2[j2])
        }
        SampleMethod::Bilinear => bilinear_shift(f, shift),
    }
}

fn bilinear_shift(f: &InterfaceField, shift: [f64; 2]) -> InterfaceField {
    let n = f.n;
    let h = f.spacing();
    // Fractional lattice offset of x - shift relative to x.
    let (s1, s2) = (-shift[0] / h, -shift[1] / h);
    let (b1, b2) = (s1.floor(), s2.floor());
    let (t1, t2) = (s1 - b1, s2 - b2);
    let (o1, o2) = (b1 as i64, b2 as i64);
    let ni = n as i64;
    let mut out = vec![0.0; n * n];
    for j in 0..ni {
        for i in 0..ni {
            let at = |di: i64, dj: i64| {
                let ii = (i + o1 + di).rem_euclid(ni) as usize;
                let jj = (j + o2 + dj).rem_euclid(ni) as usize;
                f.values[jj * n + ii]
            };
            out[(j * ni + i) as usize] = (1.0 - t1) * (1.0 - t2) * at(0, 0)
                + t1 * (1.0 - t2) * at(1, 0)
                + (1.0 - t1) * t2 * at(0, 1)
                + t1 * t2 * at(1, 1);
        }
    }
    f.with_values(out)
}

/// `(f(x - y), f(x + y))` from a single packed complex transform.
pub fn shifted_pair(f: &InterfaceField, y: [f64; 2]) -> (InterfaceField, InterfaceField) {
    let wv = f.wave_vectors();
    let n = f.n;
    let (m1, m2) = (wv.shift_phases(y[0]), wv.shift_phases(y[1]));
    let (q1, q2) = (wv.shift_phases(-y[0]), wv.shift_phases(-y[1]));
    let spec = f.spectrum();
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (j1, j2) = (idx / n, idx % n);
            spec[idx] * (m1[j1] * m2[j2] + i * q1[j1] * q2[j2])
        })
        .collect();
    let fft = Fft2::get(n);
    let mut scratch = fft.make_scratch();
    fft.inverse(&mut buf, &mut scratch);
    (
        f.with_values(buf.iter().map(|c| c.re).collect()),
        f.with_values(buf.iter().map(|c| c.im).collect()),
    )
}

/// Evaluates the real trigonometric interpolant of a field and its gradient
/// at arbitrary points.
pub struct PointEvaluator {
    wv: WaveVectorTable,
    coeffs: Vec<Complex64>,
}

impl PointEvaluator {
    pub fn new(f: &InterfaceField) -> Self {
        Self {
            wv: f.wave_vectors(),
            coeffs: f.spectrum().to_vec(),
        }
    }

    fn basis(&self, p: f64) -> Vec<Complex64> {
        // exp(+i xi p); the Nyquist term of the real interpolant is cos.
        (0..self.wv.n())
            .map(|j| self.wv.shift_phase(j, -p))
            .collect()
    }

    fn contract(&self, b1: &[Complex64], b2: &[Complex64], w1: &[Complex64], w2: &[Complex64]) -> f64 {
        let n = self.wv.n();
        let mut total = Complex64::new(0.0, 0.0);
        for j1 in 0..n {
            let row = &self.coeffs[j1 * n..(j1 + 1) * n];
            let mut inner = Complex64::new(0.0, 0.0);
            for j2 in 0..n {
                inner += row[j2] * b2[j2] * w2[j2];
            }
            total += inner * b1[j1] * w1[j1];
        }
        total.re
    }

    pub fn value(&self, p: [f64; 2]) -> f64 {
        let (b1, b2) = (self.basis(p[0]), self.basis(p[1]));
        let one = vec![Complex64::new(1.0, 0.0); self.wv.n()];
        self.contract(&b1, &b2, &one, &one)
    }

    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let n = self.wv.n();
        let (b1, b2) = (self.basis(p[0]), self.basis(p[1]));
        let one = vec![Complex64::new(1.0, 0.0); n];
        let d: Vec<Complex64> = (0..n).map(|j| self.wv.deriv(j)).collect();
        [
            self.contract(&b1, &b2, &d, &one),
            self.contract(&b1, &b2, &one, &d),
        ]
    }
}
