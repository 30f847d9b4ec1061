//! Homogeneous Sobolev and Besov semi-norms, the Lipschitz semi-norm and the
//! small-data criterion.
//!
//! All semi-norms are taken over one period cell. The Besov `y`-integral is
//! truncated to `|y| <= L/2`; every Besov value carries that radius.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, pairwise_sum, shifted_pair, InterfaceField};
use crate::parallel::map_indexed;
use crate::quadrature::{AngularRule, RadialRule};

/// `||f||_{H^s-dot} = (L^2 sum_{k != 0} |xi|^{2s} |c_k|^2)^{1/2}`.
///
/// # Panics
/// If `s` is outside `[0, 3]`.
pub fn sobolev_seminorm(f: &InterfaceField, s: f64) -> f64 {
    assert!((0.0..=3.0).contains(&s), "Sobolev order {s} outside [0, 3]");
    let n = f.n();
    let wv = f.wave_vectors();
    let spec = f.spectrum();
    let terms: Vec<f64> = (1..n * n)
        .map(|idx| {
            let xi = wv.abs_xi(idx / n, idx % n);
            xi.powf(2.0 * s) * spec[idx].norm_sqr()
        })
        .collect();
    (f.period() * f.period() * pairwise_sum(&terms)).sqrt()
}

/// `K = max_x |grad f(x)|` over grid nodes, with the spectral gradient.
pub fn lipschitz_seminorm(f: &InterfaceField) -> f64 {
    let (gx, gy) = gradient(f);
    gx.values()
        .iter()
        .zip(gy.values())
        .fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)))
}

/// Sharp constant `c_n` in `|d_1 f(x)| <= c_n ||f||_{H^2-dot}` for fields on
/// an `n x n` grid, `c_n^2 = (1 / 4 pi^2) sum_{k != 0} k_1^2 / |k|^4` over the
/// resolved integer modes. It does not depend on the period. The lattice sum
/// is isotropic, so the same constant bounds every directional derivative and
/// hence `K <= c_n ||f||_{H^2-dot}` (up to the Nyquist row).
pub fn slope_sobolev_constant(n: usize) -> f64 {
    let half = (n / 2) as i64;
    let mut terms = Vec::new();
    for k1 in (-half + 1)..=half {
        for k2 in (-half + 1)..=half {
            if k1 == 0 && k2 == 0 || k1 == half {
                // The Nyquist column has no resolvable derivative along x1.
                continue;
            }
            let (a, b) = (k1 as f64, k2 as f64);
            let r2 = a * a + b * b;
            terms.push(a * a / (r2 * r2));
        }
    }
    (pairwise_sum(&terms) / (4.0 * PI * PI)).sqrt()
}

/// Radial and angular resolution for Besov semi-norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovQuadrature {
    pub radial: usize,
    pub angular: usize,
}

impl Default for BesovQuadrature {
    fn default() -> Self {
        Self {
            radial: 64,
            angular: 32,
        }
    }
}

impl BesovQuadrature {
    pub fn refined(self, levels: u32) -> Self {
        Self {
            radial: self.radial << levels,
            angular: self.angular << levels,
        }
    }
}

fn lp_norm(values: &[f64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    } else {
        let pw: Vec<f64> = values.iter().map(|v| v.abs().powf(p)).collect();
        (pairwise_sum(&pw) * cell).powf(1.0 / p)
    }
}

fn check_exponent(name: &'static str, value: f64) -> Result<()> {
    if value >= 1.0 {
        Ok(())
    } else {
        Err(Error::Exponent { name, value })
    }
}

/// Finite-difference homogeneous Besov semi-norm
/// `( int || Delta^s_y f ||_{L^p}^q / |y|^{sq} dy / |y|^2 )^{1/q}` over
/// `L/(4n) <= |y| <= L/2`, with `Delta^s_y = delta_y` for `s < 1` and the
/// second difference `s_y` for `1 <= s < 2`. `p` or `q` may be infinite.
pub fn besov_seminorm(f: &InterfaceField, s: f64, p: f64, q: f64, quad: BesovQuadrature) -> Result<f64> {
    if !(s > 0.0 && s < 2.0) {
        return Err(Error::BesovOrder(s));
    }
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let period = f.period();
    let r_min = period / (4.0 * f.n() as f64);
    let radial = RadialRule::log_panels(quad.radial, r_min, 0.5 * period)?;
    let angular = AngularRule::new(quad.angular)?;
    let dirs = angular.half_directions();
    let cell = f.spacing() * f.spacing();
    // Both members of a {y, -y} pair give the same L^p norm (translation
    // invariance for delta, evenness for s_y), so half the directions suffice.
    let nd = dirs.len();
    let g = map_indexed(radial.len() * nd, |idx| {
        let (i, j) = (idx / nd, idx % nd);
        let r = radial.radii[i];
        let y = [r * dirs[j][0], r * dirs[j][1]];
        let (minus, plus) = shifted_pair(f, y);
        let diff: Vec<f64> = if s < 1.0 {
            f.values().iter().zip(minus.values()).map(|(c, m)| c - m).collect()
        } else {
            f.values()
                .iter()
                .zip(minus.values())
                .zip(plus.values())
                .map(|((c, m), p)| 2.0 * c - m - p)
                .collect()
        };
        lp_norm(&diff, p, cell) / r.powf(s)
    });
    if q.is_infinite() {
        return Ok(g.iter().fold(0.0_f64, |m, v| m.max(*v)));
    }
    let w_theta = 2.0 * angular.weight();
    let terms: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(idx, v)| radial.weights[idx / nd] * w_theta * v.powf(q))
        .collect();
    Ok(pairwise_sum(&terms).powf(1.0 / q))
}

/// One Besov value with its parameters and the truncation radius of the
/// `y`-integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovEntry {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub value: f64,
    pub truncated_at: f64,
}

/// Norms of one field at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub t: f64,
    pub h2: f64,
    pub h52: f64,
    pub lipschitz: f64,
    pub besov: Vec<BesovEntry>,
}

impl NormReport {
    pub fn compute(f: &InterfaceField, t: f64) -> Self {
        Self {
            t,
            h2: sobolev_seminorm(f, 2.0),
            h52: sobolev_seminorm(f, 2.5),
            lipschitz: lipschitz_seminorm(f),
            besov: Vec::new(),
        }
    }

    pub fn with_besov(mut self, f: &InterfaceField, params: &[(f64, f64, f64)], quad: BesovQuadrature) -> Result<Self> {
        for &(s, p, q) in params {
            self.besov.push(BesovEntry {
                s,
                p,
                q,
                value: besov_seminorm(f, s, p, q, quad)?,
                truncated_at: 0.5 * f.period(),
            });
        }
        Ok(self)
    }

    pub fn is_valid(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        ok(self.h2) && ok(self.h52) && ok(self.lipschitz) && self.besov.iter().all(|b| ok(b.value))
    }
}

/// One inequality `lhs < rhs` with its margins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// `rhs - lhs`.
    pub margin: f64,
    /// `rhs / lhs` (infinite when `lhs == 0`).
    pub ratio: f64,
}

impl Condition {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            pass: lhs < rhs,
            margin: rhs - lhs,
            ratio: if lhs > 0.0 { rhs / lhs } else { f64::INFINITY },
        }
    }
}

/// Outcome of the two small-data conditions for initial data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub constant: f64,
    pub h2: f64,
    pub lipschitz: f64,
    /// `C (h + h^2) < (2 + K^2)^{-3/2}`.
    pub first: Condition,
    /// `h^2 (2 + K^2)^{3/2} / (1 - C (h + h^2)(2 + K^2)^{3/2}) < 1`.
    pub second: Condition,
    pub pass: bool,
}

impl SmallnessReport {
    /// Smallest of the two ratio margins.
    pub fn ratio_margin(&self) -> f64 {
        self.first.ratio.min(self.second.ratio)
    }
}

/// Evaluates both conditions from `||f0||_{H^2-dot}` and `K0`.
pub fn smallness_from_norms(h2: f64, lipschitz: f64, c: f64) -> SmallnessReport {
    let w = (2.0 + lipschitz * lipschitz).powf(1.5);
    let a = c * (h2 + h2 * h2);
    let first = Condition::new(a, 1.0 / w);
    let denom = 1.0 - a * w;
    let lhs2 = if denom > 0.0 { h2 * h2 * w / denom } else { f64::INFINITY };
    let second = Condition::new(lhs2, 1.0);
    SmallnessReport {
        constant: c,
        h2,
        lipschitz,
        first,
        second,
        pass: first.pass && second.pass,
    }
}

pub fn smallness_criterion(f0: &InterfaceField, c: f64) -> Result<SmallnessReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("theorem_constant", format!("must be positive, got {c}")));
    }
    Ok(smallness_from_norms(sobolev_seminorm(f0, 2.0), lipschitz_seminorm(f0), c))
}

/// Largest amplitude `a` (to relative precision `rel_tol`) such that `a * f`
/// passes the criterion. Returns `None` if even tiny amplitudes fail.
pub fn smallness_threshold(f: &InterfaceField, c: f64, rel_tol: f64) -> Option<f64> {
    let (h, k) = (sobolev_seminorm(f, 2.0), lipschitz_seminorm(f));
    let passes = |a: f64| smallness_from_norms(a * h, a * k, c).pass;
    if h == 0.0 {
        return Some(f64::INFINITY);
    }
    let mut lo = 1e-12 / h;
    if !passes(lo) {
        return None;
    }
    let mut hi = 2.0 * lo;
    while passes(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo) > rel_tol * lo {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TAU: f64 = 2.0 * PI;

    fn mode(n: usize, a: f64, k: [f64; 2]) -> InterfaceField {
        InterfaceField::from_fn(n, TAU, |x1, x2| a * (k[0] * x1 + k[1] * x2).cos()).unwrap()
    }

    #[test]
    fn single_mode_sobolev() {
        for (a, k, s) in [(0.3, [1.0, 0.0], 2.0), (1.5, [3.0, -4.0], 0.5), (0.01, [2.0, 1.0], 2.5)] {
            let f = mode(32, a, k);
            let expected = a * f64::hypot(k[0], k[1]).powf(s) * (2.0 * PI * PI).sqrt();
            assert!((sobolev_seminorm(&f, s) - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn constants_have_zero_seminorms() {
        let f = InterfaceField::from_fn(16, TAU, |_, _| -2.0).unwrap();
        assert!(sobolev_seminorm(&f, 1.0) < 1e-12);
        assert!(lipschitz_seminorm(&f) < 1e-12);
        let b = besov_seminorm(&f, 1.5, f64::INFINITY, 2.0, BesovQuadrature { radial: 16, angular: 8 }).unwrap();
        assert!(b < 1e-12);
    }

    #[test]
    fn lipschitz_of_cosine() {
        let f = mode(64, 0.8, [1.0, 0.0]);
        assert!((lipschitz_seminorm(&f) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_refinement_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let modes: Vec<(f64, f64, f64, f64)> = (0..12)
            .map(|_| {
                (
                    rng.gen_range(-4..=4) as f64,
                    rng.gen_range(-4..=4) as f64,
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(0.0..TAU),
                )
            })
            .collect();
        let profile = |x1: f64, x2: f64| -> f64 { modes.iter().map(|(a, b, c, p)| c * (a * x1 + b * x2 + p).cos()).sum() };
        let coarse = InterfaceField::from_fn(16, TAU, profile).unwrap();
        let fine = InterfaceField::from_fn(64, TAU, profile).unwrap();
        assert!(lipschitz_seminorm(&coarse) <= lipschitz_seminorm(&fine) + 1e-10);
    }

    #[test]
    fn slope_constant_bounds_every_field() {
        let c = slope_sobolev_constant(32);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let v: Vec<f64> = (0..32 * 32).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = InterfaceField::new(32, 3.0, v).unwrap();
            let (gx, _) = gradient(&f);
            assert!(gx.max_abs() <= c * sobolev_seminorm(&f, 2.0) * (1.0 + 1e-12));
        }
        assert!(slope_sobolev_constant(128) > slope_sobolev_constant(64));
    }

    #[test]
    fn smallness_on_zero_and_huge() {
        let z = InterfaceField::zeros(16, TAU).unwrap();
        let r = smallness_criterion(&z, 0.125).unwrap();
        assert!(r.pass);
        assert!((r.first.margin - 2f64.powf(-1.5)).abs() < 1e-15);
        let big = mode(16, 100.0, [2.0, 0.0]);
        assert!(!smallness_criterion(&big, 0.125).unwrap().pass);
        assert!(smallness_criterion(&z, 0.0).is_err());
    }

    #[test]
    fn smallness_threshold_is_a_flip_point() {
        let f = mode(32, 1.0, [1.0, 1.0]);
        let a = smallness_threshold(&f, 0.125, 1e-10).unwrap();
        assert!(smallness_criterion(&f.scaled(a), 0.125).unwrap().pass);
        assert!(!smallness_criterion(&f.scaled(a * (1.0 + 1e-8)), 0.125).unwrap().pass);
        for frac in [0.1, 0.5, 0.9] {
            assert!(smallness_criterion(&f.scaled(a * frac), 0.125).unwrap().pass);
        }
    }

    #[test]
    fn besov_rejects_bad_parameters() {
        let f = mode(16, 1.0, [1.0, 0.0]);
        let q = BesovQuadrature::default();
        assert!(matches!(besov_seminorm(&f, 2.0, 2.0, 2.0, q), Err(Error::BesovOrder(_))));
        assert!(matches!(besov_seminorm(&f, 0.0, 2.0, 2.0, q), Err(Error::BesovOrder(_))));
        assert!(matches!(besov_seminorm(&f, 0.5, 0.5, 2.0, q), Err(Error::Exponent { name: "p", .. })));
    }

    #[test]
    fn interpolation_inequality_in_fourier() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..32 * 32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = InterfaceField::new(32, TAU, v).unwrap();
        let lhs = sobolev_seminorm(&f, 7.0 / 3.0);
        let rhs = sobolev_seminorm(&f, 2.0).powf(1.0 / 3.0) * sobolev_seminorm(&f, 2.5).powf(2.0 / 3.0);
        assert!(lhs <= rhs * (1.0 + 1e-10));
    }

    #[test]
    fn scaling_invariance_of_critical_norms() {
        let profile = |x1: f64, x2: f64| 0.2 * (x1 + 0.3).sin() * (2.0 * x2).cos() + 0.1 * (x1 - 3.0 * x2).cos();
        let f = InterfaceField::from_fn(32, TAU, profile).unwrap();
        // lambda^{-1} f(lambda x) with lambda = 2 lives on the half period.
        let g = InterfaceField::from_fn(32, TAU / 2.0, |x1, x2| 0.5 * profile(2.0 * x1, 2.0 * x2)).unwrap();
        let (a, b) = (sobolev_seminorm(&f, 2.0), sobolev_seminorm(&g, 2.0));
        assert!((a - b).abs() < 1e-12 * a);
        assert!((lipschitz_seminorm(&f) - lipschitz_seminorm(&g)).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn seminorms_vanish_only_on_constants(seed in 0u64..1000, c in -5.0f64..5.0, eps in 1e-6f64..1.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v: Vec<f64> = (0..16 * 16).map(|_| c + eps * rng.gen_range(-1.0..1.0)).collect();
                let f = InterfaceField::new(16, TAU, v).unwrap();
                prop_assert!(sobolev_seminorm(&f, 1.0) > 1e-12);
                prop_assert!(lipschitz_seminorm(&f) > 1e-12);
                let flat = InterfaceField::from_fn(16, TAU, |_, _| c).unwrap();
                prop_assert!(sobolev_seminorm(&flat, 1.0) < 1e-12);
            }

            #[test]
            fn smallness_is_monotone_in_amplitude(a in 1e-6f64..1.0, b in 1e-6f64..1.0) {
                let f = mode(16, 1.0, [1.0, 2.0]);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let pass_hi = smallness_criterion(&f.scaled(hi), 0.125).unwrap().pass;
                let pass_lo = smallness_criterion(&f.scaled(lo), 0.125).unwrap().pass;
                prop_assert!(!pass_hi || pass_lo);
            }
        }
    }
}
