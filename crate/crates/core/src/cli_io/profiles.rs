//! Builtin initial data.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::InterfaceField;
use crate::norms::lipschitz_seminorm;

use super::config::InitialSpec;

pub const PROFILES: [&str; 6] = ["zero", "single_mode", "gaussian_bump", "steep_ridge", "random_bandlimited", "file"];

/// Which optional parameters each profile accepts.
fn accepted(profile: &str) -> Option<&'static [&'static str]> {
    Some(match profile {
        "zero" => &[],
        "single_mode" => &["amplitude", "mode"],
        "gaussian_bump" => &["amplitude", "width"],
        "steep_ridge" => &["slope", "width", "scale"],
        "random_bandlimited" => &["kmax", "slope"],
        "file" => &["file"],
        _ => return None,
    })
}

fn present(spec: &InitialSpec) -> Vec<&'static str> {
    let mut out = Vec::new();
    let flags = [
        ("amplitude", spec.amplitude.is_some()),
        ("mode", spec.mode.is_some()),
        ("width", spec.width.is_some()),
        ("slope", spec.slope.is_some()),
        ("scale", spec.scale.is_some()),
        ("kmax", spec.kmax.is_some()),
        ("file", spec.file.is_some()),
    ];
    for (name, on) in flags {
        if on {
            out.push(name);
        }
    }
    out
}

/// Checks the profile name and its parameters. Errors name `initial.<key>`.
pub fn validate_spec(spec: &InitialSpec) -> Result<()> {
    let err = |k: &str, m: String| Err(Error::config(format!("initial.{k}"), m));
    let Some(allowed) = accepted(&spec.profile) else {
        return err("profile", format!("unknown profile `{}` (expected one of {})", spec.profile, PROFILES.join(", ")));
    };
    for key in present(spec) {
        if !allowed.contains(&key) {
            return err(key, format!("not a parameter of profile `{}`", spec.profile));
        }
    }
    let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
    if spec.amplitude.is_some_and(|a| !a.is_finite()) {
        return err("amplitude", "must be finite".into());
    }
    if !positive(spec.width) {
        return err("width", "must be positive".into());
    }
    if !positive(spec.scale) {
        return err("scale", "must be positive".into());
    }
    if spec.slope.is_some_and(|s| !(s >= 0.0 && s.is_finite())) {
        return err("slope", "must be >= 0".into());
    }
    if spec.kmax == Some(0) {
        return err("kmax", "must be >= 1".into());
    }
    if spec.profile == "file" && spec.file.is_none() {
        return err("file", "profile `file` needs a path".into());
    }
    Ok(())
}

/// Builds the field for `spec` on an `n x n` grid of side `period`.
/// Deterministic given `seed`.
pub fn builtin_profile(spec: &InitialSpec, n: usize, period: f64, seed: u64) -> Result<InterfaceField> {
    if accepted(&spec.profile).is_none() {
        return Err(Error::UnknownProfile(spec.profile.clone()));
    }
    validate_spec(spec)?;
    let k0 = 2.0 * PI / period;
    match spec.profile.as_str() {
        "zero" => InterfaceField::zeros(n, period),
        "single_mode" => {
            let a = spec.amplitude.unwrap_or(1e-3);
            let [m1, m2] = spec.mode.unwrap_or([1, 0]);
            let half = (n / 2) as i64;
            if m1.abs() >= half || m2.abs() >= half {
                return Err(Error::ProfileParam {
                    name: "mode",
                    msg: format!("({m1}, {m2}) is not resolved below the Nyquist index {half}"),
                });
            }
            let (w1, w2) = (k0 * m1 as f64, k0 * m2 as f64);
            InterfaceField::from_fn(n, period, |x1, x2| a * (w1 * x1 + w2 * x2).cos())
        }
        "gaussian_bump" => {
            let a = spec.amplitude.unwrap_or(1e-2);
            let w = resolved_width(spec.width.unwrap_or(0.5), n, period)?;
            let c = 0.5 * period;
            InterfaceField::from_fn(n, period, |x1, x2| {
                a * periodic_gaussian(x1 - c, w, period) * periodic_gaussian(x2 - c, w, period)
            })
        }
        "steep_ridge" => {
            let k = spec.slope.unwrap_or(5.0);
            let w = resolved_width(spec.width.unwrap_or(0.5), n, period)?;
            let scale = spec.scale.unwrap_or(1.0);
            // max |d/ds exp(-s^2 / 2w^2)| = e^{-1/2} / w
            let a = scale * k * w * 0.5_f64.exp();
            let c = 0.5 * period;
            InterfaceField::from_fn(n, period, |x1, _| a * periodic_gaussian(x1 - c, w, period))
        }
        "random_bandlimited" => {
            let kmax = spec.kmax.unwrap_or(4) as i64;
            if kmax >= (n / 2) as i64 {
                return Err(Error::ProfileParam {
                    name: "kmax",
                    msg: format!("{kmax} is not below n/2 = {}", n / 2),
                });
            }
            random_bandlimited(n, period, kmax, spec.slope.unwrap_or(0.05), seed)
        }
        "file" => {
            let path = spec.file.as_ref().expect("validated");
            let snap = super::snapshot::read_snapshot(path)?;
            if snap.field.n() != n || snap.field.period() != period {
                return Err(Error::ProfileParam {
                    name: "file",
                    msg: format!(
                        "snapshot grid {}x{} (L = {}) does not match config {n}x{n} (L = {period})",
                        snap.field.n(),
                        snap.field.n(),
                        snap.field.period()
                    ),
                });
            }
            Ok(snap.field)
        }
        _ => unreachable!(),
    }
}

fn resolved_width(w: f64, n: usize, period: f64) -> Result<f64> {
    let dx = period / n as f64;
    if w < 2.0 * dx || w > period / 8.0 {
        return Err(Error::ProfileParam {
            name: "width",
            msg: format!("{w} outside [2 dx, L/8] = [{}, {}]", 2.0 * dx, period / 8.0),
        });
    }
    Ok(w)
}

/// `sum_m exp(-(s + mL)^2 / 2w^2)` over the nearest images.
fn periodic_gaussian(s: f64, w: f64, period: f64) -> f64 {
    (-2..=2)
        .map(|m| {
            let d = s + m as f64 * period;
            (-d * d / (2.0 * w * w)).exp()
        })
        .sum()
}

/// Random phases and amplitudes on `max(|k1|, |k2|) <= kmax`, scaled so that
/// the Lipschitz semi-norm equals `slope`.
pub fn random_bandlimited(n: usize, period: f64, kmax: i64, slope: f64, seed: u64) -> Result<InterfaceField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k0 = 2.0 * PI / period;
    let mut modes = Vec::new();
    for k1 in -kmax..=kmax {
        for k2 in -kmax..=kmax {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let ph: f64 = rng.gen_range(0.0..2.0 * PI);
            if (k1, k2) != (0, 0) {
                modes.push((k0 * k1 as f64, k0 * k2 as f64, a, ph));
            }
        }
    }
    let f = InterfaceField::from_fn(n, period, |x1, x2| {
        modes.iter().map(|(w1, w2, a, ph)| a * (w1 * x1 + w2 * x2 + ph).cos()).sum()
    })?;
    let k = lipschitz_seminorm(&f);
    Ok(if k > 0.0 { f.scaled(slope / k) } else { f })
}
