//! Finite-difference operators in an arbitrary real offset `y`.
//!
//! Field versions evaluate at every grid node at once (shifted samples come
//! from spectral interpolation); the [`point`] versions take any sampler
//! closure and are used for off-grid checks and for profiles that are not
//! periodic (linear functions).
//!
//! | op | definition |
//! |----|------------|
//! | `delta` | `f(x) - f(x - y)` |
//! | `delta_bar` | `f(x) - f(x + y)` |
//! | `slope`, `slope_bar` | the two above divided by `|y|` |
//! | `second_diff` | `s_y f = 2 f(x) - f(x - y) - f(x + y)` |
//! | `centered_diff` | `d_y f = f(x + y) - f(x - y)` |

use crate::error::{Error, Result};
use crate::grid::{shifted_pair, InterfaceField};

/// Nonzero offset with its cached length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Offset {
    y: [f64; 2],
    norm: f64,
}

impl Offset {
    pub fn new(y: [f64; 2]) -> Result<Self> {
        let norm = y[0].hypot(y[1]);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroOffset(y[0], y[1]));
        }
        Ok(Self { y, norm })
    }

    pub fn polar(r: f64, theta: f64) -> Result<Self> {
        Self::new([r * theta.cos(), r * theta.sin()])
    }

    pub fn y(&self) -> [f64; 2] {
        self.y
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn direction(&self) -> [f64; 2] {
        [self.y[0] / self.norm, self.y[1] / self.norm]
    }

    pub fn neg(&self) -> Self {
        Self {
            y: [-self.y[0], -self.y[1]],
            norm: self.norm,
        }
    }
}

/// `f`, `f(x - y)` and `f(x + y)` on the grid; every operator below is a
/// pointwise combination of the three.
pub struct ShiftedSamples<'a> {
    pub f: &'a InterfaceField,
    pub minus: InterfaceField,
    pub plus: InterfaceField,
}

impl<'a> ShiftedSamples<'a> {
    pub fn new(f: &'a InterfaceField, y: [f64; 2]) -> Self {
        let (minus, plus) = shifted_pair(f, y);
        Self { f, minus, plus }
    }

    fn combine(&self, op: impl Fn(f64, f64, f64) -> f64) -> InterfaceField {
        let values = self
            .f
            .values()
            .iter()
            .zip(self.minus.values())
            .zip(self.plus.values())
            .map(|((&c, &m), &p)| op(c, m, p))
            .collect();
        self.f.with_values(values)
    }

    pub fn delta(&self) -> InterfaceField {
        self.combine(|c, m, _| c - m)
    }

    pub fn delta_bar(&self) -> InterfaceField {
        self.combine(|c, _, p| c - p)
    }

    pub fn second(&self) -> InterfaceField {
        self.combine(|c, m, p| 2.0 * c - m - p)
    }

    pub fn centered(&self) -> InterfaceField {
        self.combine(|_, m, p| p - m)
    }
}

pub fn delta(f: &InterfaceField, y: [f64; 2]) -> InterfaceField {
    ShiftedSamples::new(f, y).delta()
}

pub fn delta_bar(f: &InterfaceField, y: [f64; 2]) -> InterfaceField {
    ShiftedSamples::new(f, y).delta_bar()
}

/// `Delta_y f = delta_y f / |y|`.
pub fn slope(f: &InterfaceField, y: [f64; 2]) -> Result<InterfaceField> {
    let o = Offset::new(y)?;
    Ok(delta(f, y).scaled(1.0 / o.norm()))
}

pub fn slope_bar(f: &InterfaceField, y: [f64; 2]) -> Result<InterfaceField> {
    let o = Offset::new(y)?;
    Ok(delta_bar(f, y).scaled(1.0 / o.norm()))
}

/// `s_y f`; defined for `y = 0` as well (it vanishes there).
pub fn second_diff(f: &InterfaceField, y: [f64; 2]) -> InterfaceField {
    ShiftedSamples::new(f, y).second()
}

/// `S_y f = s_y f / |y|`.
pub fn second_quotient(f: &InterfaceField, y: [f64; 2]) -> Result<InterfaceField> {
    let o = Offset::new(y)?;
    Ok(second_diff(f, y).scaled(1.0 / o.norm()))
}

/// `d_y f`.
pub fn centered_diff(f: &InterfaceField, y: [f64; 2]) -> InterfaceField {
    ShiftedSamples::new(f, y).centered()
}

/// `D_y f = d_y f / |y|`.
pub fn centered_quotient(f: &InterfaceField, y: [f64; 2]) -> Result<InterfaceField> {
    let o = Offset::new(y)?;
    Ok(centered_diff(f, y).scaled(1.0 / o.norm()))
}

/// `(arctan Delta_y f + arctan Delta-bar_y f, arctan Delta_y f - arctan Delta-bar_y f)`.
pub fn arctan_slope_pair(f: &InterfaceField, y: [f64; 2]) -> Result<(InterfaceField, InterfaceField)> {
    let o = Offset::new(y)?;
    let sh = ShiftedSamples::new(f, y);
    let inv = 1.0 / o.norm();
    let sum = sh.combine(|c, m, p| ((c - m) * inv).atan() + ((c - p) * inv).atan());
    let diff = sh.combine(|c, m, p| ((c - m) * inv).atan() - ((c - p) * inv).atan());
    Ok((sum, diff))
}

/// Scalar versions over an arbitrary sampler `f(x)`.
pub mod point {
    fn at(x: [f64; 2], y: [f64; 2], s: f64) -> [f64; 2] {
        [x[0] + s * y[0], x[1] + s * y[1]]
    }

    fn norm(y: [f64; 2]) -> f64 {
        y[0].hypot(y[1])
    }

    pub fn delta(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], y: [f64; 2]) -> f64 {
        f(x) - f(at(x, y, -1.0))
    }

    pub fn delta_bar(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], y: [f64; 2]) -> f64 {
        f(x) - f(at(x, y, 1.0))
    }

    pub fn slope(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], y: [f64; 2]) -> f64 {
        delta(f, x, y) / norm(y)
    }

    pub fn slope_bar(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], y: [f64; 2]) -> f64 {
        delta_bar(f, x, y) / norm(y)
    }

    pub fn second_diff(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], y: [f64; 2]) -> f64 {
        2.0 * f(x) - f(at(x, y, -1.0)) - f(at(x, y, 1.0))
    }

    pub fn second_quotient(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], y: [f64; 2]) -> f64 {
        second_diff(f, x, y) / norm(y)
    }

    pub fn centered_diff(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], y: [f64; 2]) -> f64 {
        f(at(x, y, 1.0)) - f(at(x, y, -1.0))
    }

    pub fn centered_quotient(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], y: [f64; 2]) -> f64 {
        centered_diff(f, x, y) / norm(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gradient;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn smooth(n: usize) -> InterfaceField {
        InterfaceField::from_fn(n, TAU, |x1, x2| {
            0.6 * (x1 + 0.2).sin() * (x2 - 0.4).cos() + 0.3 * (2.0 * x1 - x2).cos() + 0.1 * (3.0 * x2).sin()
        })
        .unwrap()
    }

    fn max_abs_diff(a: &InterfaceField, b: &InterfaceField) -> f64 {
        a.sub(b).max_abs()
    }

    #[test]
    fn zero_offset_is_rejected() {
        let f = smooth(16);
        assert!(matches!(slope(&f, [0.0, 0.0]), Err(Error::ZeroOffset(..))));
        assert!(second_quotient(&f, [0.0, 0.0]).is_err());
        assert!(centered_quotient(&f, [0.0, 0.0]).is_err());
        assert!(arctan_slope_pair(&f, [0.0, 0.0]).is_err());
        assert!(second_diff(&f, [0.0, 0.0]).max_abs() < 1e-13);
    }

    #[test]
    fn linear_profiles_pointwise() {
        let (a, c) = ([0.7, -1.3], 0.25);
        let f = |x: [f64; 2]| a[0] * x[0] + a[1] * x[1] + c;
        let x = [0.3, 1.9];
        for y in [[0.1_f64, 0.0], [-0.4, 0.8], [2.0, 3.0]] {
            let ny = y[0].hypot(y[1]);
            let ay = (a[0] * y[0] + a[1] * y[1]) / ny;
            assert!((point::slope(f, x, y) - ay).abs() < 1e-13);
            assert!((point::slope_bar(f, x, y) + ay).abs() < 1e-13);
            assert!(point::second_diff(f, x, y).abs() < 1e-13);
            assert!((point::centered_quotient(f, x, y) - 2.0 * ay).abs() < 1e-13);
        }
    }

    #[test]
    fn constants_vanish() {
        let f = InterfaceField::from_fn(16, TAU, |_, _| 3.0).unwrap();
        let y = [0.31, -0.77];
        for g in [
            delta(&f, y),
            delta_bar(&f, y),
            slope(&f, y).unwrap(),
            slope_bar(&f, y).unwrap(),
            second_diff(&f, y),
            centered_diff(&f, y),
        ] {
            assert!(g.max_abs() < 1e-13);
        }
    }

    #[test]
    fn sum_and_difference_quotients() {
        let f = smooth(32);
        let y = [0.41, 0.13];
        let s = second_quotient(&f, y).unwrap();
        let d = centered_quotient(&f, y).unwrap();
        let (a, b) = (slope(&f, y).unwrap(), slope_bar(&f, y).unwrap());
        assert!(max_abs_diff(&s, &a.axpy(1.0, &b)) < 1e-13);
        assert!(max_abs_diff(&d, &a.sub(&b)) < 1e-13);
    }

    #[test]
    fn arctan_pair_on_zero_and_range() {
        let z = InterfaceField::zeros(16, TAU).unwrap();
        let (s, d) = arctan_slope_pair(&z, [0.2, 0.1]).unwrap();
        assert_eq!(s.max_abs(), 0.0);
        assert_eq!(d.max_abs(), 0.0);
        let f = smooth(32).scaled(40.0);
        for y in [[0.01, 0.0], [0.3, -0.2], [2.0, 1.0]] {
            let (s, d) = arctan_slope_pair(&f, y).unwrap();
            assert!(s.max_abs() <= PI && d.max_abs() <= PI);
        }
    }

    #[test]
    fn reflection_of_offset_swaps_operators() {
        let f = smooth(32);
        let y = [0.37, -0.52];
        let my = [-y[0], -y[1]];
        assert!(max_abs_diff(&slope(&f, my).unwrap(), &slope_bar(&f, y).unwrap()) < 1e-13);
        assert!(max_abs_diff(&centered_diff(&f, my), &centered_diff(&f, y).scaled(-1.0)) < 1e-13);
        assert!(max_abs_diff(&second_diff(&f, my), &second_diff(&f, y)) < 1e-13);
    }

    #[test]
    fn lattice_shift_equivariance() {
        let f = smooth(32);
        let g = f.roll(3, -5);
        let y = [0.23, 0.91];
        for (a, b) in [
            (delta(&g, y), delta(&f, y).roll(3, -5)),
            (second_diff(&g, y), second_diff(&f, y).roll(3, -5)),
            (centered_diff(&g, y), centered_diff(&f, y).roll(3, -5)),
        ] {
            assert!(max_abs_diff(&a, &b) < 1e-13);
        }
    }

    #[test]
    fn slope_tends_to_directional_derivative() {
        let f = smooth(64);
        let (gx, gy) = gradient(&f);
        let e = [0.6, 0.8];
        let dir = gx.scaled(e[0]).axpy(e[1], &gy);
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&r| max_abs_diff(&slope(&f, [r * e[0], r * e[1]]).unwrap(), &dir))
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 0.9, "{errs:?}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn offset_reflection_any_y(y1 in -3.0f64..3.0, y2 in -3.0f64..3.0, amp in 0.1f64..5.0) {
                prop_assume!(y1.hypot(y2) > 1e-3);
                let f = smooth(16).scaled(amp);
                let y = [y1, y2];
                let my = [-y1, -y2];
                let tol = 1e-12 * amp.max(1.0) / y1.hypot(y2).min(1.0);
                prop_assert!(max_abs_diff(&slope(&f, my).unwrap(), &slope_bar(&f, y).unwrap()) < tol);
                prop_assert!(max_abs_diff(&second_diff(&f, my), &second_diff(&f, y)) < 1e-12 * amp.max(1.0));
            }
        }
    }
}
