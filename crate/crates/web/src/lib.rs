//! Browser demo: a live small-grid evolution with a heat map, a scan of the
//! pointwise kernel bounds and a smallness explorer for steep ridges.
//!
//! The numerical work lives in plain Rust functions so it can be tested
//! natively; the `wasm_bindgen` wrappers only convert errors.

use std::f64::consts::PI;

use muskat::grid::InterfaceField;
use muskat::norms::{lipschitz_seminorm, smallness_from_norms, smallness_threshold, sobolev_seminorm};
use muskat::rhs::{kernel_bound_terms as bound_terms, Formulation, RhsPlan};
use muskat::simulation::{Scheme, StepParams, Stepper, StepperState};
use wasm_bindgen::prelude::*;

const TAU: f64 = 2.0 * PI;

fn js(e: muskat::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// 1D periodized Gaussian centred at `L/2`.
fn gauss1(x: f64, w: f64) -> f64 {
    (-1..=1)
        .map(|m| {
            let d = x - 0.5 * TAU + m as f64 * TAU;
            (-d * d / (2.0 * w * w)).exp()
        })
        .sum()
}

/// Initial data for the demo. `size` is the amplitude (`mode`, `bump`) or
/// the Lipschitz slope (`ridge`).
pub fn initial_field(n: usize, profile: &str, size: f64, width: f64) -> muskat::Result<InterfaceField> {
    match profile {
        "mode" => InterfaceField::from_fn(n, TAU, |x1, x2| size * (x1 + x2).cos()),
        "bump" => InterfaceField::from_fn(n, TAU, |x1, x2| size * gauss1(x1, width) * gauss1(x2, width)),
        "ridge" => {
            // Steepest point of the Gaussian sits at distance `width`.
            let a = size * width * 0.5f64.exp();
            InterfaceField::from_fn(n, TAU, |x1, _| a * gauss1(x1, width))
        }
        other => Err(muskat::Error::UnknownProfile(other.to_string())),
    }
}

/// Blue-white-red image (RGBA) of `values`, symmetric around zero.
pub fn diverging_rgba(values: &[f64]) -> Vec<u8> {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut out = Vec::with_capacity(4 * values.len());
    for v in values {
        let s = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
        let fade = |c: f64| (255.0 * (1.0 - s.abs() * c)) as u8;
        let (r, g, b) = if s >= 0.0 { (255, fade(0.85), fade(1.0)) } else { (fade(1.0), fade(0.85), 255) };
        out.extend_from_slice(&[r, g, b, 255]);
    }
    out
}

/// A running evolution with its slope and dissipation history.
#[wasm_bindgen]
pub struct Demo {
    stepper: Stepper,
    state: StepperState,
    /// `int_0^t ||f||^2_{H^{5/2}}` by the trapezoid rule.
    dissipation: f64,
    h52_sq: f64,
    k0: f64,
}

impl Demo {
    pub fn create(n: usize, profile: &str, size: f64, width: f64) -> muskat::Result<Demo> {
        let f0 = initial_field(n, profile, size, width)?;
        let plan = RhsPlan::default_for(n, TAU, Formulation::Integrated)?;
        let params = StepParams {
            scheme: Scheme::IfRk4,
            ..StepParams::default()
        };
        let stepper = Stepper::new(n, TAU, Some(plan), params)?;
        let h52 = sobolev_seminorm(&f0, 2.5);
        let k0 = lipschitz_seminorm(&f0);
        Ok(Demo {
            state: stepper.initial_state(f0),
            stepper,
            dissipation: 0.0,
            h52_sq: h52 * h52,
            k0,
        })
    }

    /// Steps until the clock has moved by `span`.
    pub fn advance_by(&mut self, span: f64) -> muskat::Result<()> {
        let target = self.state.t + span;
        while self.state.t < target - 1e-12 {
            let dt = self
                .stepper
                .stable_dt(lipschitz_seminorm(&self.state.field))
                .min(target - self.state.t);
            self.state = self.stepper.step_with_dt(&self.state, dt)?;
            let h52 = sobolev_seminorm(&self.state.field, 2.5);
            self.dissipation += 0.5 * dt * (self.h52_sq + h52 * h52);
            self.h52_sq = h52 * h52;
        }
        Ok(())
    }
}

#[wasm_bindgen]
impl Demo {
    /// `profile` is `mode`, `bump` or `ridge`.
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, profile: &str, size: f64, width: f64) -> Result<Demo, JsError> {
        Demo::create(n, profile, size, width).map_err(js)
    }

    pub fn advance(&mut self, span: f64) -> Result<(), JsError> {
        self.advance_by(span).map_err(js)
    }

    pub fn n(&self) -> usize {
        self.state.field.n()
    }

    pub fn t(&self) -> f64 {
        self.state.t
    }

    pub fn h2(&self) -> f64 {
        sobolev_seminorm(&self.state.field, 2.0)
    }

    pub fn lipschitz(&self) -> f64 {
        lipschitz_seminorm(&self.state.field)
    }

    pub fn initial_lipschitz(&self) -> f64 {
        self.k0
    }

    /// Running `D(t)`.
    pub fn dissipation(&self) -> f64 {
        self.dissipation
    }

    pub fn max_abs(&self) -> f64 {
        self.state.field.max_abs()
    }

    /// RGBA pixels, `n x n`, `x1` along rows.
    pub fn heatmap(&self) -> Vec<u8> {
        diverging_rgba(self.state.field.values())
    }
}

/// `[K + K-bar, S D K K-bar]` for slopes `a`, `b`.
#[wasm_bindgen]
pub fn kernel_bound_terms(a: f64, b: f64) -> Vec<f64> {
    let (s, p) = bound_terms(a, b);
    vec![s, p]
}

/// `S D K K-bar` on a `res x res` grid of slopes in `[-range, range]^2`,
/// `a` along rows, `b` down columns.
pub fn kernel_product_grid(range: f64, res: usize) -> Vec<f64> {
    let at = |i: usize| -range + 2.0 * range * i as f64 / (res.max(2) - 1) as f64;
    (0..res * res).map(|idx| bound_terms(at(idx % res), at(idx / res)).1).collect()
}

/// RGBA image of [`kernel_product_grid`].
#[wasm_bindgen]
pub fn kernel_bound_image(range: f64, res: usize) -> Vec<u8> {
    diverging_rgba(&kernel_product_grid(range, res))
}

/// `[max |K + K-bar|, max |S D K K-bar|]` over the same grid.
#[wasm_bindgen]
pub fn kernel_bound_maxima(range: f64, res: usize) -> Vec<f64> {
    let at = |i: usize| -range + 2.0 * range * i as f64 / (res.max(2) - 1) as f64;
    let mut m = [0.0_f64; 2];
    for i in 0..res {
        for j in 0..res {
            let (s, p) = bound_terms(at(i), at(j));
            m[0] = m[0].max(s.abs());
            m[1] = m[1].max(p.abs());
        }
    }
    m.to_vec()
}

/// Small-data conditions for a steep ridge of slope `slope` and width
/// `width` scaled by `scale`:
/// `[|f|_H2, K, first lhs, first rhs, second lhs, second rhs, pass, max scale]`
/// where `max scale` is the largest passing multiple of the unscaled ridge
/// (NaN when none passes).
pub fn ridge_smallness(n: usize, slope: f64, width: f64, scale: f64, c: f64) -> muskat::Result<Vec<f64>> {
    let base = initial_field(n, "ridge", slope, width)?;
    let f = base.scaled(scale);
    let r = smallness_from_norms(sobolev_seminorm(&f, 2.0), lipschitz_seminorm(&f), c);
    let threshold = smallness_threshold(&base, c, 1e-6).unwrap_or(f64::NAN);
    Ok(vec![
        r.h2,
        r.lipschitz,
        r.first.lhs,
        r.first.rhs,
        r.second.lhs,
        r.second.rhs,
        if r.pass { 1.0 } else { 0.0 },
        threshold,
    ])
}

#[wasm_bindgen]
pub fn smallness_ridge(n: usize, slope: f64, width: f64, scale: f64, c: f64) -> Result<Vec<f64>, JsError> {
    ridge_smallness(n, slope, width, scale, c).map_err(js)
}
