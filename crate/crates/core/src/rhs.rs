//! Right-hand side of the contour equation by polar principal-value
//! quadrature.
//!
//! For a node pair `{y, -y}` with `y = r e`, write `u = Delta_y f`,
//! `ub = Delta-bar_y f`, `g = grad f . e`, and `k` for the kernel
//! `(1 + u^2)^{-3/2}`. In the measure `d(ln r) dtheta` the paired integrands are
//!
//! * slope form:      `(g(x) - g(x-y)) k(u) + (g(x+y) - g(x)) k(ub)`
//! * integrated form: `(g(x) - u) k(u) - (g(x) + ub) k(ub)`
//! * oscillatory form: the slope form with `k(u) = cos(arctan u) int_0^inf e^{-s} cos(s u) ds`
//!
//! and the equation reads `d_t f = (rho / 2 pi) (1 / 2 pi) P.V. int ... `, whose
//! linearization about `f = 0` is `-(rho / 2 pi) |xi|`.
//!
//! With `linear_exact` (the default) the quadrature only carries the
//! nonlinear remainder: the same nodes are applied to the linearized
//! integrand as a spectral multiplier, that is subtracted, and the exact
//! `-|xi|` is added back. The disk `|y| < r_min` gets its leading Taylor term,
//! and the slope/oscillatory forms get the boundary term at `|y| = r_max`
//! that turns them into the integrated form,
//! `int (G(u(R e)) + G(ub(R e))) dtheta` with `G(u) = u / sqrt(1 + u^2)`.
//! Without `linear_exact` only the truncated annulus quadrature is used.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, hessian, laplacian, Fft2, InterfaceField, WaveVectorTable};
use crate::parallel::{chunked_fold, CHUNK};
use crate::quadrature::{gauss_laguerre, PairNode, PvQuadrature};

/// Extra factor on the `y`-integral: `int (1 - cos xi.y) |y|^{-3} dy = 2 pi |xi|`.
pub const NORMALIZATION: f64 = 1.0 / (2.0 * PI);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    #[default]
    Analytic,
    /// Gauss-Laguerre evaluation of the `s`-integral with this many nodes.
    Laguerre(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    #[default]
    M1,
    Integrated,
    M2(KernelMode),
}

impl Formulation {
    fn is_slope_form(self) -> bool {
        !matches!(self, Formulation::Integrated)
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    M1,
    Analytic,
    Laguerre { nodes: Vec<f64>, weights: Vec<f64> },
}

impl Kernel {
    fn for_formulation(form: Formulation) -> Result<Self> {
        Ok(match form {
            Formulation::M1 | Formulation::Integrated => Kernel::M1,
            Formulation::M2(KernelMode::Analytic) => Kernel::Analytic,
            Formulation::M2(KernelMode::Laguerre(m)) => {
                if !(4..=64).contains(&m) {
                    return Err(Error::InvalidParameter {
                        name: "laguerre_nodes",
                        msg: format!("must lie in [4, 64], got {m}"),
                    });
                }
                let (nodes, weights) = gauss_laguerre(m);
                Kernel::Laguerre { nodes, weights }
            }
        })
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        let s = 1.0 + u * u;
        match self {
            Kernel::M1 => 1.0 / (s * s.sqrt()),
            Kernel::Analytic => (1.0 / s.sqrt()) * (1.0 / s),
            Kernel::Laguerre { nodes, weights } => {
                let q: f64 = nodes.iter().zip(weights).map(|(k, w)| w * (k * u).cos()).sum();
                (1.0 / s.sqrt()) * q
            }
        }
    }
}

/// `cos(arctan u) = (1 + u^2)^{-1/2}`.
pub fn cos_arctan(u: f64) -> f64 {
    1.0 / (1.0 + u * u).sqrt()
}

/// `int_0^inf e^{-s} cos(s u) ds` in closed form.
pub fn laplace_cos(u: f64) -> f64 {
    1.0 / (1.0 + u * u)
}

/// The same integral by `m`-node Gauss-Laguerre quadrature.
pub fn laplace_cos_laguerre(u: f64, m: usize) -> f64 {
    let (x, w) = gauss_laguerre(m);
    x.iter().zip(&w).map(|(k, w)| w * (k * u).cos()).sum()
}

fn ring_g(u: f64) -> f64 {
    u / (1.0 + u * u).sqrt()
}

/// Values entering one paired integrand at one point `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSample {
    /// `f(x)`, `f(x - y)`, `f(x + y)`.
    pub f0: f64,
    pub fm: f64,
    pub fp: f64,
    /// `grad f . e` at `x`, `x - y`, `x + y`.
    pub g0: f64,
    pub gm: f64,
    pub gp: f64,
    pub r: f64,
}

/// Paired integrand (measure `d(ln r) dtheta`) with the closed-form kernel.
pub fn pair_integrand(form: Formulation, s: PairSample) -> f64 {
    let kernel = match form {
        Formulation::M2(_) => Kernel::Analytic,
        _ => Kernel::M1,
    };
    pair_value(form.is_slope_form(), &kernel, s)
}

#[inline]
fn pair_value(slope_form: bool, kernel: &Kernel, s: PairSample) -> f64 {
    let u = (s.f0 - s.fm) / s.r;
    let ub = (s.f0 - s.fp) / s.r;
    if slope_form {
        (s.g0 - s.gm) * kernel.eval(u) + (s.gp - s.g0) * kernel.eval(ub)
    } else {
        (s.g0 - u) * kernel.eval(u) - (s.g0 + ub) * kernel.eval(ub)
    }
}

/// Pointwise factors of the kernel at offset `y`.
#[derive(Clone, Debug)]
pub struct KernelFactors {
    pub slope: InterfaceField,
    pub slope_bar: InterfaceField,
    /// `S_y f = Delta_y f + Delta-bar_y f`.
    pub sum: InterfaceField,
    /// `D_y f = Delta_y f - Delta-bar_y f`.
    pub diff: InterfaceField,
    /// `K_y f = 1 / (1 + (Delta_y f)^2)`.
    pub k: InterfaceField,
    pub k_bar: InterfaceField,
}

/// `(K + K-bar, S D K K-bar)` for slopes `a = Delta_y f`, `b = Delta-bar_y f`.
pub fn kernel_bound_terms(a: f64, b: f64) -> (f64, f64) {
    let k = 1.0 / (1.0 + a * a);
    let kb = 1.0 / (1.0 + b * b);
    (k + kb, (a + b) * (a - b) * k * kb)
}

pub fn kernel_factors(f: &InterfaceField, y: [f64; 2]) -> Result<KernelFactors> {
    let a = crate::differences::slope(f, y)?;
    let b = crate::differences::slope_bar(f, y)?;
    let map = |g: &dyn Fn(f64, f64) -> f64| {
        f.with_values(a.values().iter().zip(b.values()).map(|(&x, &z)| g(x, z)).collect())
    };
    let factors = KernelFactors {
        sum: map(&|x, z| x + z),
        diff: map(&|x, z| x - z),
        k: map(&|x, _| 1.0 / (1.0 + x * x)),
        k_bar: map(&|_, z| 1.0 / (1.0 + z * z)),
        slope: a,
        slope_bar: b,
    };
    for idx in 0..f.values().len() {
        let (k, kb) = (factors.k.values()[idx], factors.k_bar.values()[idx]);
        let (ks, sdkk) = kernel_bound_terms(factors.slope.values()[idx], factors.slope_bar.values()[idx]);
        let bad = !(k > 0.0 && k <= 1.0 && kb > 0.0 && kb <= 1.0) || ks.abs() > 2.0 || sdkk.abs() > 2.0;
        if bad {
            let x = f.node(idx);
            return Err(Error::KernelBound(format!(
                "at x = ({:.6}, {:.6}), y = ({:.6}, {:.6}): K = {k}, K-bar = {kb}, S D K K-bar = {sdkk}",
                x[0], x[1], y[0], y[1]
            )));
        }
    }
    Ok(factors)
}

/// What the evaluation did besides producing the field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsDiagnostics {
    /// Mean of the right-hand side before the mean mode was removed.
    pub mean_defect: f64,
    /// L^2 norm of the returned right-hand side.
    pub l2: f64,
    pub pair_count: usize,
    /// Outer radius of the quadrature; the nonlinear far field beyond it is
    /// not represented.
    pub truncated_at: f64,
}

/// Precomputed quadrature and linear multipliers for one grid.
#[derive(Clone, Debug)]
pub struct RhsPlan {
    n: usize,
    period: f64,
    quad: PvQuadrature,
    formulation: Formulation,
    linear_exact: bool,
    kernel: Kernel,
    pairs: Vec<PairNode>,
    /// `NORMALIZATION * Q_lin(xi) + |xi|` per spectral index (only with `linear_exact`).
    linear_multiplier: Option<Vec<f64>>,
}

impl RhsPlan {
    pub fn new(n: usize, period: f64, quad: PvQuadrature, formulation: Formulation, linear_exact: bool) -> Result<Self> {
        crate::grid::check_grid(n, period)?;
        let kernel = Kernel::for_formulation(formulation)?;
        let pairs = quad.pairs();
        let mut plan = Self {
            n,
            period,
            quad,
            formulation,
            linear_exact,
            kernel,
            pairs,
            linear_multiplier: None,
        };
        if linear_exact {
            plan.linear_multiplier = Some(plan.build_linear_multiplier());
        }
        Ok(plan)
    }

    /// Default quadrature, `linear_exact` on.
    pub fn default_for(n: usize, period: f64, formulation: Formulation) -> Result<Self> {
        Self::new(n, period, PvQuadrature::default_for(n, period), formulation, true)
    }

    pub fn quadrature(&self) -> &PvQuadrature {
        &self.quad
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn linear_exact(&self) -> bool {
        self.linear_exact
    }

    fn ring_directions(&self) -> Vec<[f64; 2]> {
        self.quad.angular.half_directions()
    }

    fn build_linear_multiplier(&self) -> Vec<f64> {
        let n = self.n;
        let wv = WaveVectorTable::new(n, self.period);
        let slope_form = self.formulation.is_slope_form();
        let dtheta = self.quad.angular.weight();
        let r_min = self.quad.r_min;
        let r_max = self.quad.r_max;
        let dirs = self.ring_directions();
        let d: Vec<Complex64> = (0..n).map(|j| wv.deriv(j)).collect();
        let s2: Vec<f64> = (0..n).map(|j| wv.second_deriv(j)).collect();

        let near = chunked_fold(
            self.pairs.len(),
            CHUNK,
            || vec![0.0; n * n],
            |acc, ip| {
                let node = self.pairs[ip];
                let y = [node.r * node.e[0], node.r * node.e[1]];
                let (p1, p2) = (wv.shift_phases(y[0]), wv.shift_phases(y[1]));
                let (q1, q2) = (wv.shift_phases(-y[0]), wv.shift_phases(-y[1]));
                for j1 in 0..n {
                    for j2 in 0..n {
                        let pm = p1[j1] * p2[j2];
                        let pp = q1[j1] * q2[j2];
                        let v = if slope_form {
                            let de = d[j1] * node.e[0] + d[j2] * node.e[1];
                            (de * (pp - pm)).re
                        } else {
                            -(2.0 - pm.re - pp.re) / node.r
                        };
                        acc[j1 * n + j2] += node.weight * v;
                    }
                }
            },
            crate::parallel::add_into,
        )
        .unwrap_or_else(|| vec![0.0; n * n]);

        let mut mult = near;
        // Inner disk, leading term: r_min * int (e.H.e) dtheta for the slope
        // forms, half of it for the integrated form.
        let inner_scale = if slope_form { 2.0 } else { 1.0 } * r_min * dtheta;
        for &e in &dirs {
            let (p1, p2) = (wv.shift_phases(r_max * e[0]), wv.shift_phases(r_max * e[1]));
            let (q1, q2) = (wv.shift_phases(-r_max * e[0]), wv.shift_phases(-r_max * e[1]));
            for j1 in 0..n {
                for j2 in 0..n {
                    let ehe = e[0] * e[0] * s2[j1] + 2.0 * e[0] * e[1] * (d[j1] * d[j2]).re + e[1] * e[1] * s2[j2];
                    let mut v = inner_scale * ehe;
                    if slope_form {
                        let sum = (p1[j1] * p2[j2]).re + (q1[j1] * q2[j2]).re;
                        v += dtheta * (2.0 - sum) / r_max;
                    }
                    mult[j1 * n + j2] += v;
                }
            }
        }
        for j1 in 0..n {
            for j2 in 0..n {
                let idx = j1 * n + j2;
                mult[idx] = NORMALIZATION * mult[idx] + wv.abs_xi(j1, j2);
            }
        }
        mult
    }

    /// Nonlinear paired quadrature `Q(f)` over the annulus, plus the inner
    /// and ring corrections when `linear_exact` is on.
    fn quadrature_sum(&self, f: &InterfaceField) -> Result<Vec<f64>> {
        let n = self.n;
        let nn = n * n;
        let wv = f.wave_vectors();
        let spec = f.spectrum();
        let slope_form = self.formulation.is_slope_form();
        let (gx, gy) = gradient(f);
        let fft = Fft2::get(n);
        let d: Vec<Complex64> = (0..n).map(|j| wv.deriv(j)).collect();
        let i_unit = Complex64::new(0.0, 1.0);
        let f0 = f.values();

        type State = (Vec<f64>, Option<Error>);
        let merge = |a: State, b: State| -> State { (crate::parallel::add_into(a.0, b.0), a.1.or(b.1)) };
        let (acc, err) = chunked_fold(
            self.pairs.len(),
            CHUNK,
            || (vec![0.0; nn], None),
            |(acc, err): &mut State, ip| {
                if err.is_some() {
                    return;
                }
                let node = self.pairs[ip];
                let e = node.e;
                let y = [node.r * e[0], node.r * e[1]];
                let (p1, p2) = (wv.shift_phases(y[0]), wv.shift_phases(y[1]));
                let (q1, q2) = (wv.shift_phases(-y[0]), wv.shift_phases(-y[1]));
                let mut scratch = fft.make_scratch();
                let mut buf = vec![Complex64::new(0.0, 0.0); nn];
                let mut gbuf = if slope_form { vec![Complex64::new(0.0, 0.0); nn] } else { Vec::new() };
                for j1 in 0..n {
                    for j2 in 0..n {
                        let idx = j1 * n + j2;
                        let packed = spec[idx] * (p1[j1] * p2[j2] + i_unit * q1[j1] * q2[j2]);
                        buf[idx] = packed;
                        if slope_form {
                            gbuf[idx] = packed * (d[j1] * e[0] + d[j2] * e[1]);
                        }
                    }
                }
                fft.inverse(&mut buf, &mut scratch);
                if slope_form {
                    fft.inverse(&mut gbuf, &mut scratch);
                }
                for idx in 0..nn {
                    let g0 = gx.values()[idx] * e[0] + gy.values()[idx] * e[1];
                    let (gm, gp) = if slope_form { (gbuf[idx].re, gbuf[idx].im) } else { (0.0, 0.0) };
                    let sample = PairSample {
                        f0: f0[idx],
                        fm: buf[idx].re,
                        fp: buf[idx].im,
                        g0,
                        gm,
                        gp,
                        r: node.r,
                    };
                    let v = pair_value(slope_form, &self.kernel, sample);
                    if !v.is_finite() {
                        let x = f.node(idx);
                        *err = Some(Error::NonFiniteIntegrand {
                            x1: x[0],
                            x2: x[1],
                            y1: y[0],
                            y2: y[1],
                        });
                        return;
                    }
                    acc[idx] += node.weight * v;
                }
            },
            merge,
        )
        .unwrap_or_else(|| (vec![0.0; nn], None));
        if let Some(e) = err {
            return Err(e);
        }
        let mut acc = acc;
        if self.linear_exact {
            self.add_corrections(f, &gx, &gy, &mut acc);
        }
        Ok(acc)
    }

    fn add_corrections(&self, f: &InterfaceField, gx: &InterfaceField, gy: &InterfaceField, acc: &mut [f64]) {
        let slope_form = self.formulation.is_slope_form();
        let dtheta = self.quad.angular.weight();
        let [fxx, fxy, fyy] = hessian(f);
        let inner_scale = if slope_form { 2.0 } else { 1.0 } * self.quad.r_min * dtheta;
        let r_max = self.quad.r_max;
        for e in self.ring_directions() {
            for idx in 0..acc.len() {
                let g0 = gx.values()[idx] * e[0] + gy.values()[idx] * e[1];
                let ehe = e[0] * e[0] * fxx.values()[idx] + 2.0 * e[0] * e[1] * fxy.values()[idx] + e[1] * e[1] * fyy.values()[idx];
                acc[idx] += inner_scale * ehe * self.kernel.eval(g0);
            }
            if slope_form {
                let (fm, fp) = crate::grid::shifted_pair(f, [r_max * e[0], r_max * e[1]]);
                for idx in 0..acc.len() {
                    let f0 = f.values()[idx];
                    let u = (f0 - fm.values()[idx]) / r_max;
                    let ub = (f0 - fp.values()[idx]) / r_max;
                    acc[idx] += dtheta * (ring_g(u) + ring_g(ub));
                }
            }
        }
    }

    fn check_field(&self, f: &InterfaceField) -> Result<()> {
        if f.n() != self.n || f.period() != self.period {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn evaluate_with_diagnostics(&self, f: &InterfaceField, rho: f64) -> Result<(InterfaceField, RhsDiagnostics)> {
        self.check_field(f)?;
        check_rho(rho)?;
        let q = self.quadrature_sum(f)?;
        let c = rho / (2.0 * PI);
        let mut values: Vec<f64> = q.iter().map(|v| c * NORMALIZATION * v).collect();
        if let Some(mult) = &self.linear_multiplier {
            let lin = f.apply_symbol(|j1, j2| Complex64::new(mult[j1 * self.n + j2], 0.0));
            values.iter_mut().zip(lin.values()).for_each(|(v, l)| *v -= c * l);
        }
        let raw = f.with_values(values);
        let mean = raw.mean();
        let out = raw.with_values(raw.values().iter().map(|v| v - mean).collect());
        let diag = RhsDiagnostics {
            mean_defect: mean,
            l2: out.l2_norm(),
            pair_count: self.pairs.len(),
            truncated_at: self.quad.r_max,
        };
        Ok((out, diag))
    }

    pub fn evaluate(&self, f: &InterfaceField, rho: f64) -> Result<InterfaceField> {
        Ok(self.evaluate_with_diagnostics(f, rho)?.0)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "rho",
            msg: format!("density jump must be positive and finite, got {rho}"),
        })
    }
}

fn plan_for(f: &InterfaceField, quad: &PvQuadrature, form: Formulation) -> Result<RhsPlan> {
    RhsPlan::new(f.n(), f.period(), quad.clone(), form, true)
}

pub fn rhs_m1(f: &InterfaceField, rho: f64, quad: &PvQuadrature) -> Result<InterfaceField> {
    plan_for(f, quad, Formulation::M1)?.evaluate(f, rho)
}

pub fn rhs_integrated(f: &InterfaceField, rho: f64, quad: &PvQuadrature) -> Result<InterfaceField> {
    plan_for(f, quad, Formulation::Integrated)?.evaluate(f, rho)
}

pub fn rhs_m2(f: &InterfaceField, rho: f64, quad: &PvQuadrature, mode: KernelMode) -> Result<InterfaceField> {
    plan_for(f, quad, Formulation::M2(mode))?.evaluate(f, rho)
}

/// Oscillatory form with the closed-form kernel plus `eps * Laplacian f`.
pub fn rhs_regularized(f: &InterfaceField, rho: f64, eps: f64, quad: &PvQuadrature) -> Result<InterfaceField> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            msg: format!("must be finite and >= 0, got {eps}"),
        });
    }
    let base = rhs_m2(f, rho, quad, KernelMode::Analytic)?;
    if eps == 0.0 {
        return Ok(base);
    }
    Ok(base.axpy(eps, &laplacian(f)))
}

/// `-(rho / 2 pi) Lambda f`, the linearized right-hand side.
pub fn rhs_linearized(f: &InterfaceField, rho: f64) -> Result<InterfaceField> {
    check_rho(rho)?;
    let wv = f.wave_vectors();
    let c = rho / (2.0 * PI);
    Ok(f.apply_symbol(|j1, j2| Complex64::new(-c * wv.abs_xi(j1, j2), 0.0)))
}
