//! Run configuration: a TOML file with strict key checking.
//!
//! ```toml
//! n = 128                  # grid points per side, power of two >= 4
//! t_final = 5.0            # final time
//! period = 6.283185307179586   # cell side L (length)
//! rho = 6.283185307179586      # density jump (sets the linear decay rate rho / 2pi)
//! epsilon = 0.0            # artificial viscosity (length^2 / time)
//! report_interval = 0.1    # time between ledger rows
//! seed = 0
//! theorem_constant = 0.125 # C in the small-data criterion
//! output_dir = "out"
//!
//! [stepper]
//! scheme = "rk4"           # rk4 | if_rk4
//! dynamics = "full"        # full | linearized | diffusion_only
//! cfl = 0.25
//! dt_max = 0.05            # time; cap for if_rk4
//! # dt_fixed = 0.01        # bypasses the stability policy
//!
//! [quadrature]
//! formulation = "m1"       # m1 | integrated | m2
//! kernel = "analytic"      # analytic | laguerre (m2 only)
//! laguerre_nodes = 32
//! radial = 48              # log-spaced radial nodes
//! angular = 32             # directions, multiple of 4
//! r_min_factor = 0.25      # inner radius in grid spacings
//! linear_exact = true
//!
//! [initial]
//! profile = "single_mode"  # zero | single_mode | gaussian_bump | steep_ridge | random_bandlimited | file
//! amplitude = 1e-3
//! mode = [1, 0]
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quadrature::PvQuadrature;
use crate::rhs::{Formulation, KernelMode, RhsPlan};
use crate::simulation::{Dynamics, RunSettings, Scheme, StepParams, Stepper};

use super::write_atomic;

fn tau() -> f64 {
    2.0 * PI
}

fn default_report_interval() -> f64 {
    0.1
}

fn default_constant() -> f64 {
    0.125
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub t_final: f64,
    #[serde(default = "tau")]
    pub period: f64,
    #[serde(default = "tau")]
    pub rho: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_report_interval")]
    pub report_interval: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_constant")]
    pub theorem_constant: f64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub initial: InitialSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub dynamics: Dynamics,
    #[serde(default = "StepperConfig::default_cfl")]
    pub cfl: f64,
    #[serde(default = "StepperConfig::default_dt_max")]
    pub dt_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_fixed: Option<f64>,
}

impl StepperConfig {
    fn default_cfl() -> f64 {
        0.25
    }
    fn default_dt_max() -> f64 {
        0.05
    }
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::default(),
            dynamics: Dynamics::default(),
            cfl: Self::default_cfl(),
            dt_max: Self::default_dt_max(),
            dt_fixed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FormulationName {
    #[default]
    M1,
    Integrated,
    M2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    #[default]
    Analytic,
    Laguerre,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default)]
    pub formulation: FormulationName,
    #[serde(default)]
    pub kernel: KernelName,
    #[serde(default = "QuadratureConfig::default_laguerre")]
    pub laguerre_nodes: usize,
    #[serde(default = "QuadratureConfig::default_radial")]
    pub radial: usize,
    #[serde(default = "QuadratureConfig::default_angular")]
    pub angular: usize,
    #[serde(default = "QuadratureConfig::default_r_min")]
    pub r_min_factor: f64,
    #[serde(default = "QuadratureConfig::default_linear_exact")]
    pub linear_exact: bool,
}

impl QuadratureConfig {
    fn default_laguerre() -> usize {
        32
    }
    fn default_radial() -> usize {
        48
    }
    fn default_angular() -> usize {
        32
    }
    fn default_r_min() -> f64 {
        0.25
    }
    fn default_linear_exact() -> bool {
        true
    }

    pub fn formulation(&self) -> Formulation {
        match self.formulation {
            FormulationName::M1 => Formulation::M1,
            FormulationName::Integrated => Formulation::Integrated,
            FormulationName::M2 => Formulation::M2(match self.kernel {
                KernelName::Analytic => KernelMode::Analytic,
                KernelName::Laguerre => KernelMode::Laguerre(self.laguerre_nodes),
            }),
        }
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            formulation: FormulationName::default(),
            kernel: KernelName::default(),
            laguerre_nodes: Self::default_laguerre(),
            radial: Self::default_radial(),
            angular: Self::default_angular(),
            r_min_factor: Self::default_r_min(),
            linear_exact: Self::default_linear_exact(),
        }
    }
}

/// Initial data: a builtin profile with its parameters, or a snapshot file.
/// Parameters not used by the chosen profile are rejected at validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub profile: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// Target Lipschitz constant (steep_ridge) or exact one (random_bandlimited).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmax: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self::named("zero")
    }
}

impl InitialSpec {
    pub fn named(profile: &str) -> Self {
        Self {
            profile: profile.to_string(),
            amplitude: None,
            mode: None,
            width: None,
            slope: None,
            scale: None,
            kmax: None,
            file: None,
        }
    }
}

impl SimConfig {
    /// Config with every default applied.
    pub fn minimal(n: usize, t_final: f64) -> Self {
        toml::from_str(&format!("n = {n}\nt_final = {t_final:?}\n")).expect("minimal config parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Rejects out-of-range values, naming the key.
    pub fn validate(&self) -> Result<()> {
        let err = |k: &str, m: String| Err(Error::config(k, m));
        if self.n < 4 || !self.n.is_power_of_two() {
            return err("n", format!("must be a power of two >= 4, got {}", self.n));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return err("period", format!("must be positive, got {}", self.period));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return err("rho", format!("must be positive (stable regime), got {}", self.rho));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return err("epsilon", format!("must be >= 0, got {}", self.epsilon));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return err("t_final", format!("must be >= 0, got {}", self.t_final));
        }
        if !(self.report_interval > 0.0 && self.report_interval.is_finite()) {
            return err("report_interval", format!("must be positive, got {}", self.report_interval));
        }
        if !(self.theorem_constant > 0.0 && self.theorem_constant.is_finite()) {
            return err("theorem_constant", format!("must be positive, got {}", self.theorem_constant));
        }
        let s = &self.stepper;
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            return err("stepper.cfl", format!("must lie in (0, 1], got {}", s.cfl));
        }
        if !(s.dt_max > 0.0 && s.dt_max.is_finite()) {
            return err("stepper.dt_max", format!("must be positive, got {}", s.dt_max));
        }
        if let Some(dt) = s.dt_fixed {
            if !(dt > 0.0 && dt.is_finite()) {
                return err("stepper.dt_fixed", format!("must be positive, got {dt}"));
            }
        }
        if s.dynamics == Dynamics::DiffusionOnly && self.epsilon == 0.0 {
            return err("epsilon", "diffusion_only dynamics needs epsilon > 0".into());
        }
        let q = &self.quadrature;
        if q.radial == 0 || q.radial > 4096 {
            return err("quadrature.radial", format!("must lie in [1, 4096], got {}", q.radial));
        }
        if q.angular == 0 || !q.angular.is_multiple_of(4) || q.angular > 4096 {
            return err("quadrature.angular", format!("must be a positive multiple of 4, got {}", q.angular));
        }
        if !(q.r_min_factor > 0.0 && q.r_min_factor < self.n as f64 / 2.0) {
            return err("quadrature.r_min_factor", format!("must lie in (0, n/2), got {}", q.r_min_factor));
        }
        if !(4..=64).contains(&q.laguerre_nodes) {
            return err("quadrature.laguerre_nodes", format!("must lie in [4, 64], got {}", q.laguerre_nodes));
        }
        super::profiles::validate_spec(&self.initial)
    }

    pub fn pv_quadrature(&self) -> Result<PvQuadrature> {
        let q = &self.quadrature;
        PvQuadrature::for_grid(self.n, self.period, q.radial, q.angular, q.r_min_factor)
    }

    pub fn step_params(&self) -> StepParams {
        StepParams {
            rho: self.rho,
            epsilon: self.epsilon,
            scheme: self.stepper.scheme,
            cfl: self.stepper.cfl,
            dt_max: self.stepper.dt_max,
            dt_fixed: self.stepper.dt_fixed,
            dynamics: self.stepper.dynamics,
        }
    }

    pub fn stepper(&self) -> Result<Stepper> {
        let plan = match self.stepper.dynamics {
            Dynamics::Full => Some(RhsPlan::new(
                self.n,
                self.period,
                self.pv_quadrature()?,
                self.quadrature.formulation(),
                self.quadrature.linear_exact,
            )?),
            _ => None,
        };
        Stepper::new(self.n, self.period, plan, self.step_params())
    }

    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            t_final: self.t_final,
            report_interval: self.report_interval,
            ..RunSettings::default()
        }
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SimConfig::from_toml(&text)
}

pub fn save_config(cfg: &SimConfig, path: &Path) -> Result<()> {
    write_atomic(path, cfg.to_toml().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = SimConfig::from_toml("n = 64\nt_final = 1.0\n").unwrap();
        assert_eq!(cfg.period, 2.0 * PI);
        assert_eq!(cfg.rho, 2.0 * PI);
        assert_eq!(cfg.epsilon, 0.0);
        assert_eq!(cfg.stepper.cfl, 0.25);
        assert_eq!(cfg.theorem_constant, 0.125);
        assert_eq!(cfg.initial.profile, "zero");
        assert_eq!(cfg, SimConfig::minimal(64, 1.0));
    }

    #[test]
    fn rejections_name_the_key() {
        let cases = [
            ("n = 100\nt_final = 1.0\n", "n"),
            ("n = 64\nt_final = 1.0\nrho = -1.0\n", "rho"),
            ("n = 64\nt_final = 1.0\n[stepper]\ncfl = 3.0\n", "stepper.cfl"),
            ("n = 64\nt_final = 1.0\n[quadrature]\nangular = 30\n", "quadrature.angular"),
            ("n = 64\nt_final = 1.0\n[initial]\nprofile = \"single_mode\"\nwidth = 1.0\n", "initial.width"),
        ];
        for (text, key) in cases {
            match SimConfig::from_toml(text) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("expected rejection of {key}, got {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "n = 64\nt_final = 1.0\nrhoo = 1.0\n",
            "n = 64\nt_final = 1.0\n[quadrature]\nradail = 10\n",
            "n = 64\n",
        ] {
            assert!(matches!(SimConfig::from_toml(text), Err(Error::ConfigParse(_))), "{text}");
        }
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
n = 32
t_final = 2.5
period = 3.0
rho = 1.5
epsilon = 0.01
report_interval = 0.05
seed = 9
theorem_constant = 0.3
output_dir = "runs/a"
[stepper]
scheme = "if_rk4"
dynamics = "full"
cfl = 0.5
dt_max = 0.02
dt_fixed = 0.001
[quadrature]
formulation = "m2"
kernel = "laguerre"
laguerre_nodes = 24
radial = 20
angular = 16
r_min_factor = 0.5
linear_exact = false
[initial]
profile = "steep_ridge"
slope = 5.0
width = 0.4
scale = 0.01
"#;
        let cfg = SimConfig::from_toml(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        save_config(&cfg, &path).unwrap();
        let back = load_config(&path).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.quadrature.formulation(), Formulation::M2(KernelMode::Laguerre(24)));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(load_config(Path::new("/nonexistent/x.toml")), Err(Error::Io { .. })));
    }
}
