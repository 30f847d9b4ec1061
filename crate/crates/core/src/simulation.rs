//! Time stepping, the energy ledger and the monitors run on it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{laplacian, InterfaceField};
use crate::norms::NormReport;
use crate::rhs::RhsPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Rk4,
    /// Lawson RK4: `-(rho/2pi) Lambda + eps Delta` integrated exactly.
    IfRk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Nonlinear contour equation plus `eps Delta`.
    #[default]
    Full,
    /// `-(rho/2pi) Lambda f + eps Delta f` only.
    Linearized,
    /// `eps Delta f` only.
    DiffusionOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub rho: f64,
    pub epsilon: f64,
    pub scheme: Scheme,
    pub cfl: f64,
    /// Upper bound on the step for the integrating-factor scheme.
    pub dt_max: f64,
    /// Overrides the stability policy when set.
    pub dt_fixed: Option<f64>,
    pub dynamics: Dynamics,
}

impl Default for StepParams {
    fn default() -> Self {
        Self {
            rho: 2.0 * PI,
            epsilon: 0.0,
            scheme: Scheme::Rk4,
            cfl: 0.25,
            dt_max: 0.05,
            dt_fixed: None,
            dynamics: Dynamics::Full,
        }
    }
}

/// Field and clock of a run.
#[derive(Clone, Debug)]
pub struct StepperState {
    pub field: InterfaceField,
    pub t: f64,
    /// Last step taken (0 before the first step).
    pub dt: f64,
    pub scheme: Scheme,
    pub epsilon: f64,
    pub rho: f64,
}

/// `1/2 (1 + K^2)^{-3/2}`.
pub fn dissipation_coefficient(k: f64) -> f64 {
    0.5 * (1.0 + k * k).powf(-1.5)
}

pub struct Stepper {
    params: StepParams,
    plan: Option<RhsPlan>,
    n: usize,
    period: f64,
}

impl Stepper {
    /// `plan` is required for [`Dynamics::Full`] and ignored otherwise.
    pub fn new(n: usize, period: f64, plan: Option<RhsPlan>, params: StepParams) -> Result<Self> {
        let bad = |name: &'static str, msg: String| Err(Error::InvalidParameter { name, msg });
        if !(params.rho > 0.0 && params.rho.is_finite()) {
            return bad("rho", format!("must be positive, got {}", params.rho));
        }
        if !(params.epsilon >= 0.0 && params.epsilon.is_finite()) {
            return bad("epsilon", format!("must be >= 0, got {}", params.epsilon));
        }
        if !(params.cfl > 0.0 && params.cfl.is_finite()) {
            return bad("cfl", format!("must be positive, got {}", params.cfl));
        }
        if !(params.dt_max > 0.0) {
            return bad("dt_max", format!("must be positive, got {}", params.dt_max));
        }
        if let Some(dt) = params.dt_fixed {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("dt_fixed", format!("must be positive, got {dt}"));
            }
        }
        if params.dynamics == Dynamics::DiffusionOnly && params.epsilon == 0.0 {
            return bad("epsilon", "diffusion-only dynamics needs epsilon > 0".into());
        }
        let plan = match params.dynamics {
            Dynamics::Full => Some(plan.ok_or_else(|| Error::InvalidParameter {
                name: "dynamics",
                msg: "full dynamics needs a right-hand-side plan".into(),
            })?),
            _ => None,
        };
        Ok(Self { params, plan, n, period })
    }

    pub fn params(&self) -> &StepParams {
        &self.params
    }

    pub fn initial_state(&self, f0: InterfaceField) -> StepperState {
        StepperState {
            field: f0,
            t: 0.0,
            dt: 0.0,
            scheme: self.params.scheme,
            epsilon: self.params.epsilon,
            rho: self.params.rho,
        }
    }

    fn speed(&self) -> f64 {
        self.params.rho / (2.0 * PI)
    }

    /// Symbol of the exactly integrated linear part.
    fn linear_symbol(&self, xi: f64) -> f64 {
        let diffusion = -self.params.epsilon * xi * xi;
        match self.params.dynamics {
            Dynamics::DiffusionOnly => diffusion,
            _ => -self.speed() * xi + diffusion,
        }
    }

    fn apply_linear(&self, f: &InterfaceField) -> InterfaceField {
        let wv = f.wave_vectors();
        f.apply_symbol(|j1, j2| Complex64::new(self.linear_symbol(wv.abs_xi(j1, j2)), 0.0))
    }

    fn apply_exp(&self, f: &InterfaceField, dt: f64) -> InterfaceField {
        let wv = f.wave_vectors();
        f.apply_symbol(|j1, j2| Complex64::new((self.linear_symbol(wv.abs_xi(j1, j2)) * dt).exp(), 0.0))
    }

    /// Full right-hand side.
    pub fn rhs(&self, f: &InterfaceField) -> Result<InterfaceField> {
        match (&self.plan, self.params.dynamics) {
            (Some(plan), Dynamics::Full) => {
                let base = plan.evaluate(f, self.params.rho)?;
                if self.params.epsilon > 0.0 {
                    Ok(base.axpy(self.params.epsilon, &laplacian(f)))
                } else {
                    Ok(base)
                }
            }
            _ => Ok(self.apply_linear(f)),
        }
    }

    /// Right-hand side minus the exactly integrated linear part.
    fn nonlinear(&self, f: &InterfaceField) -> Result<Option<InterfaceField>> {
        match &self.plan {
            Some(plan) if self.params.dynamics == Dynamics::Full => {
                let base = plan.evaluate(f, self.params.rho)?;
                let wv = f.wave_vectors();
                let c = self.speed();
                let lam = f.apply_symbol(|j1, j2| Complex64::new(c * wv.abs_xi(j1, j2), 0.0));
                Ok(Some(base.axpy(1.0, &lam)))
            }
            _ => Ok(None),
        }
    }

    fn linear_exact(&self) -> bool {
        self.plan.as_ref().is_none_or(|p| p.linear_exact())
    }

    /// Step size from the stability policy for a field of slope `k`.
    pub fn stable_dt(&self, k: f64) -> f64 {
        if let Some(dt) = self.params.dt_fixed {
            return dt;
        }
        let dx = self.period / self.n as f64;
        let cfl = self.params.cfl;
        let eps = self.params.epsilon;
        match self.params.scheme {
            Scheme::Rk4 => {
                let mut dt = f64::INFINITY;
                if self.params.dynamics != Dynamics::DiffusionOnly {
                    dt = dt.min(cfl * dx / self.speed());
                }
                if eps > 0.0 {
                    dt = dt.min(cfl * dx * dx / eps);
                }
                dt
            }
            Scheme::IfRk4 => {
                if self.params.dynamics != Dynamics::Full {
                    return self.params.dt_max;
                }
                if !self.linear_exact() {
                    return self.params.dt_max.min(cfl * dx / self.speed());
                }
                // The remainder's stiffness is that of the linear part times
                // 1 - (1 + K^2)^{-3/2}.
                let sigma = 1.0 - (1.0 + k * k).powf(-1.5);
                let limit = if sigma > 0.0 { cfl * dx / (self.speed() * sigma) } else { f64::INFINITY };
                self.params.dt_max.min(limit)
            }
        }
    }

    /// One step of size `dt`.
    pub fn step_with_dt(&self, state: &StepperState, dt: f64) -> Result<StepperState> {
        let f = &state.field;
        let field = match self.params.scheme {
            Scheme::Rk4 => {
                let k1 = self.rhs(f)?;
                let k2 = self.rhs(&f.axpy(0.5 * dt, &k1))?;
                let k3 = self.rhs(&f.axpy(0.5 * dt, &k2))?;
                let k4 = self.rhs(&f.axpy(dt, &k3))?;
                let incr = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
                f.axpy(dt / 6.0, &incr)
            }
            Scheme::IfRk4 => {
                let half = |g: &InterfaceField| self.apply_exp(g, 0.5 * dt);
                let full = |g: &InterfaceField| self.apply_exp(g, dt);
                match self.nonlinear(f)? {
                    None => full(f),
                    Some(k1) => {
                        let k2 = self.nonlinear(&half(&f.axpy(0.5 * dt, &k1)))?.expect("nonlinear part");
                        let ef = half(f);
                        let k3 = self.nonlinear(&ef.axpy(0.5 * dt, &k2))?.expect("nonlinear part");
                        let k4 = self.nonlinear(&full(f).axpy(dt, &half(&k3)))?.expect("nonlinear part");
                        let mid = half(&k2.axpy(1.0, &k3));
                        let incr = full(&k1).axpy(2.0, &mid).axpy(1.0, &k4);
                        full(f).axpy(dt / 6.0, &incr)
                    }
                }
            }
        };
        Ok(StepperState {
            field,
            t: state.t + dt,
            dt,
            ..state.clone()
        })
    }

    /// One step with the policy step size.
    pub fn step(&self, state: &StepperState) -> Result<StepperState> {
        let k = crate::norms::lipschitz_seminorm(&state.field);
        self.step_with_dt(state, self.stable_dt(k))
    }
}

/// One ledger row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub h2: f64,
    pub h52: f64,
    pub lipschitz: f64,
    pub d_of_t: f64,
    /// Estimate of `d/dt ||f||^2_{H^2-dot}` from neighbouring rows.
    pub de_dt: f64,
    /// `1/2 (1 + K^2)^{-3/2} ||f||^2_{H^{5/2}-dot}`.
    pub dissipation_budget: f64,
    /// `dE/dt + ||f||^2_{5/2} / (1 + K^2)^{3/2} - C_fit ||f||^2_{5/2} (h + h^2)`.
    pub energy_residual: f64,
    /// `K^2 - K_0^2 - C_fit D(t)`.
    pub slope_residual: f64,
}

pub const LEDGER_COLUMNS: [&str; 9] = [
    "t",
    "h2",
    "h52",
    "lipschitz",
    "d_of_t",
    "de_dt",
    "dissipation_budget",
    "energy_residual",
    "slope_residual",
];

impl LedgerRow {
    pub fn values(&self) -> [f64; 9] {
        [
            self.t,
            self.h2,
            self.h52,
            self.lipschitz,
            self.d_of_t,
            self.de_dt,
            self.dissipation_budget,
            self.energy_residual,
            self.slope_residual,
        ]
    }

    pub fn from_values(v: [f64; 9]) -> Self {
        Self {
            t: v[0],
            h2: v[1],
            h52: v[2],
            lipschitz: v[3],
            d_of_t: v[4],
            de_dt: v[5],
            dissipation_budget: v[6],
            energy_residual: v[7],
            slope_residual: v[8],
        }
    }
}

/// Time series of norm reports with the derived quantities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
    /// Every step size taken.
    pub dt_history: Vec<f64>,
    pub energy_c_fit: f64,
    pub slope_c_fit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort: Option<String>,
}

impl EnergyLedger {
    fn push(&mut self, report: &NormReport, d_of_t: f64) {
        self.rows.push(LedgerRow {
            t: report.t,
            h2: report.h2,
            h52: report.h52,
            lipschitz: report.lipschitz,
            d_of_t,
            de_dt: 0.0,
            dissipation_budget: dissipation_coefficient(report.lipschitz) * report.h52 * report.h52,
            energy_residual: 0.0,
            slope_residual: 0.0,
        });
    }

    /// Fills `de_dt` and the residual columns from the monitors.
    pub fn finalize(&mut self) {
        let rates = energy_derivative(&self.rows);
        for (row, r) in self.rows.iter_mut().zip(&rates) {
            row.de_dt = *r;
        }
        let energy = energy_terms(&self.rows);
        let c_e = fitted_max(&energy);
        let slope = slope_terms(&self.rows);
        let c_s = fitted_max(&slope);
        for (i, row) in self.rows.iter_mut().enumerate() {
            row.energy_residual = energy[i].0 - c_e * energy[i].1;
            row.slope_residual = slope[i].0 - c_s * slope[i].1;
        }
        self.energy_c_fit = c_e;
        self.slope_c_fit = c_s;
    }

    /// Strictly increasing `t`, nondecreasing `D`, `D(0) = 0`.
    pub fn invariants_hold(&self) -> bool {
        let first_ok = self.rows.first().is_none_or(|r| r.d_of_t == 0.0);
        first_ok && self.rows.windows(2).all(|w| w[1].t > w[0].t && w[1].d_of_t >= w[0].d_of_t)
    }
}

/// `d/dt h2^2` by three-point differences on the (possibly non-uniform) times.
fn energy_derivative(rows: &[LedgerRow]) -> Vec<f64> {
    let e: Vec<f64> = rows.iter().map(|r| r.h2 * r.h2).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let m = rows.len();
    match m {
        0 => vec![],
        1 => vec![0.0],
        2 => {
            let s = (e[1] - e[0]) / (t[1] - t[0]);
            vec![s, s]
        }
        _ => (0..m)
            .map(|i| {
                let (a, b, c) = if i == 0 {
                    (0, 1, 2)
                } else if i == m - 1 {
                    (m - 3, m - 2, m - 1)
                } else {
                    (i - 1, i, i + 1)
                };
                three_point_derivative([t[a], t[b], t[c]], [e[a], e[b], e[c]], t[i])
            })
            .collect(),
    }
}

/// Derivative at `x` of the quadratic through three points.
fn three_point_derivative(t: [f64; 3], e: [f64; 3], x: f64) -> f64 {
    let l0 = ((x - t[1]) + (x - t[2])) / ((t[0] - t[1]) * (t[0] - t[2]));
    let l1 = ((x - t[0]) + (x - t[2])) / ((t[1] - t[0]) * (t[1] - t[2]));
    let l2 = ((x - t[0]) + (x - t[1])) / ((t[2] - t[0]) * (t[2] - t[1]));
    e[0] * l0 + e[1] * l1 + e[2] * l2
}

/// `(lhs, rhs)` of the energy inequality per row.
fn energy_terms(rows: &[LedgerRow]) -> Vec<(f64, f64)> {
    rows.iter()
        .map(|r| {
            let d = r.h52 * r.h52;
            let lhs = r.de_dt + d * (1.0 + r.lipschitz * r.lipschitz).powf(-1.5);
            let rhs = d * (r.h2 + r.h2 * r.h2);
            (lhs, rhs)
        })
        .collect()
}

fn slope_terms(rows: &[LedgerRow]) -> Vec<(f64, f64)> {
    let k0 = rows.first().map_or(0.0, |r| r.lipschitz);
    rows.iter()
        .map(|r| (r.lipschitz * r.lipschitz - k0 * k0, r.d_of_t))
        .collect()
}

/// Smallest `C >= 0` with `lhs <= C rhs` on every row where `rhs > 0`.
fn fitted_max(terms: &[(f64, f64)]) -> f64 {
    terms
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .fold(0.0_f64, |c, (l, r)| c.max(l / r))
}

/// Energy inequality check over a time window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRateReport {
    pub t: Vec<f64>,
    pub de_dt: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub c_fit: f64,
    pub residual: Vec<f64>,
    /// `de_dt / (-2 ||f||^2_{5/2})` (1 for the linear decay).
    pub rate_ratio: Vec<f64>,
    /// Rows where no finite constant makes the inequality hold.
    pub violations: usize,
}

/// Monitors `d/dt ||f||^2_{H^2} + ||f||^2_{5/2} (1+K^2)^{-3/2} <= C ||f||^2_{5/2} (h + h^2)`
/// on reports with `t` in `[window.0, window.1]`.
pub fn energy_rate_monitor(ledger: &EnergyLedger, window: (f64, f64)) -> Result<EnergyRateReport> {
    let rates = energy_derivative(&ledger.rows);
    let mut rows = ledger.rows.clone();
    for (row, r) in rows.iter_mut().zip(&rates) {
        row.de_dt = *r;
    }
    let rows: Vec<LedgerRow> = rows.into_iter().filter(|r| r.t >= window.0 && r.t <= window.1).collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientSamples {
            need: 3,
            got: rows.len(),
        });
    }
    let terms = energy_terms(&rows);
    let c_fit = fitted_max(&terms);
    let tol = 1e-14;
    let violations = terms
        .iter()
        .filter(|(l, r)| *r <= 0.0 && *l > tol)
        .count();
    Ok(EnergyRateReport {
        t: rows.iter().map(|r| r.t).collect(),
        de_dt: rows.iter().map(|r| r.de_dt).collect(),
        lhs: terms.iter().map(|t| t.0).collect(),
        rhs: terms.iter().map(|t| t.1).collect(),
        c_fit,
        residual: terms.iter().map(|(l, r)| l - c_fit * r).collect(),
        rate_ratio: rows
            .iter()
            .map(|r| {
                let d = r.h52 * r.h52;
                if d > 0.0 {
                    r.de_dt / (-2.0 * d)
                } else {
                    0.0
                }
            })
            .collect(),
        violations,
    })
}

/// Slope-control check `K(t)^2 <= K(0)^2 + C D(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub t: Vec<f64>,
    /// Minimal constant making the inequality hold on every row.
    pub c_fit: f64,
    /// `K^2 - K0^2 - c D` for the given `c`.
    pub slack_at: Vec<f64>,
    pub violations: usize,
}

/// Evaluates the slope inequality; `slack_at` uses constant `c`.
pub fn slope_monitor(ledger: &EnergyLedger, c: f64) -> SlopeReport {
    let terms = slope_terms(&ledger.rows);
    let c_fit = fitted_max(&terms);
    let tol = 1e-12;
    SlopeReport {
        t: ledger.rows.iter().map(|r| r.t).collect(),
        c_fit,
        slack_at: terms.iter().map(|(l, d)| l - c * d).collect(),
        violations: terms.iter().filter(|(l, d)| *d <= 0.0 && *l > tol).count(),
    }
}

/// Settings of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub t_final: f64,
    pub report_interval: f64,
    pub max_slope: f64,
    pub max_h2_growth: f64,
    pub max_steps: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            report_interval: 0.1,
            max_slope: 1e4,
            max_h2_growth: 1e6,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub ledger: EnergyLedger,
    /// Final field (the last finite state when the run aborted).
    pub field: InterfaceField,
    pub t: f64,
    pub steps: usize,
}

impl RunOutcome {
    pub fn aborted(&self) -> bool {
        self.ledger.abort.is_some()
    }
}

/// Advances `f0` to `t_final`, reporting every `report_interval` (report
/// times are hit exactly). Instabilities stop the run and are recorded in
/// the ledger rather than returned as errors.
pub fn run(stepper: &Stepper, f0: InterfaceField, settings: &RunSettings) -> Result<RunOutcome> {
    if !(settings.t_final >= 0.0 && settings.report_interval > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_final",
            msg: "t_final must be >= 0 and report_interval > 0".into(),
        });
    }
    let mut ledger = EnergyLedger::default();
    let mut state = stepper.initial_state(f0);
    let mut report = NormReport::compute(&state.field, 0.0);
    let h2_0 = report.h2;
    ledger.push(&report, 0.0);
    let mut d_of_t = 0.0;
    let mut steps = 0;
    let mut next_report = settings.report_interval.min(settings.t_final);
    let mut report_index = 1u64;
    let eps_t = 1e-12 * settings.t_final.max(1.0);

    while state.t < settings.t_final - eps_t {
        if steps >= settings.max_steps {
            ledger.abort = Some(format!("step limit {} reached at t = {}", settings.max_steps, state.t));
            break;
        }
        let mut dt = stepper.stable_dt(report.lipschitz);
        let hits_report = state.t + dt >= next_report - eps_t;
        if hits_report {
            dt = next_report - state.t;
        }
        let next = match stepper.step_with_dt(&state, dt) {
            Ok(s) => s,
            Err(Error::NonFiniteIntegrand { .. }) => {
                ledger.abort = Some(format!("non-finite integrand at t = {}", state.t));
                break;
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        if !next.field.is_finite() {
            ledger.abort = Some(format!("non-finite field after step at t = {}", next.t));
            break;
        }
        let new_report = NormReport::compute(&next.field, if hits_report { next_report } else { next.t });
        if new_report.lipschitz > settings.max_slope {
            ledger.abort = Some(format!("slope {} exceeds {} at t = {}", new_report.lipschitz, settings.max_slope, next.t));
            break;
        }
        if h2_0 > 0.0 && new_report.h2 > settings.max_h2_growth * h2_0 {
            ledger.abort = Some(format!("H2 norm grew by more than {}x at t = {}", settings.max_h2_growth, next.t));
            break;
        }
        d_of_t += 0.5 * dt * (report.h52 * report.h52 + new_report.h52 * new_report.h52);
        ledger.dt_history.push(dt);
        state = next;
        report = new_report;
        if hits_report {
            state.t = next_report;
            ledger.push(&report, d_of_t);
            report_index += 1;
            next_report = (report_index as f64 * settings.report_interval).min(settings.t_final);
        }
    }
    if ledger.abort.is_some() && ledger.rows.last().is_some_and(|r| r.t < state.t) {
        let mut last = report.clone();
        last.t = state.t;
        ledger.push(&last, d_of_t);
    }
    ledger.finalize();
    Ok(RunOutcome {
        ledger,
        t: state.t,
        field: state.field,
        steps,
    })
}
