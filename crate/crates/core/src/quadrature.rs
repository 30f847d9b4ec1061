//! Gauss rules and the polar principal-value quadrature used for the
//! singular `y`-integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_m.
        let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Laguerre nodes and weights for `int_0^inf e^{-k} g(k) dk`.
pub fn gauss_laguerre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss-Laguerre rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    let mut z = 0.0_f64;
    for i in 0..m {
        // Initial guesses from the classical asymptotic recipe.
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * mf),
            1 => z + 15.0 / (1.0 + 2.5 * mf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut pp = 1.0;
        let mut p2 = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2_) = (1.0, 0.0);
            for j in 0..m {
                let p3 = p2_;
                p2_ = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0 - z) * p2_ - jf * p3) / (jf + 1.0);
            }
            pp = mf * (p1 - p2_) / z;
            p2 = p2_;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = -1.0 / (pp * mf * p2);
    }
    (nodes, weights)
}

/// Radial rule in `ln r`: composite Gauss-Legendre panels between `r_min`
/// and `r_max`. Weights are for the measure `d(ln r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialRule {
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
}

pub const PANEL_NODES: usize = 8;

impl RadialRule {
    /// `count` nodes in panels of [`PANEL_NODES`] (a single panel when the
    /// count is smaller or not a multiple).
    pub fn log_panels(count: usize, r_min: f64, r_max: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Quadrature("radial node count must be positive".into()));
        }
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::Quadrature(format!(
                "radial range must satisfy 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        let per_panel = if count.is_multiple_of(PANEL_NODES) { PANEL_NODES } else { count };
        let panels = count / per_panel;
        let (x, w) = gauss_legendre(per_panel);
        let (a, b) = (r_min.ln(), r_max.ln());
        let width = (b - a) / panels as f64;
        let mut radii = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (xi, wi) in x.iter().zip(&w) {
                radii.push((lo + 0.5 * width * (xi + 1.0)).exp());
                weights.push(0.5 * width * wi);
            }
        }
        Ok(Self { radii, weights })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// Uniform angular rule `theta_j = 2 pi j / count`; `count` divisible by 4
/// so the node set is closed under `y -> -y` and quarter turns.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularRule {
    pub count: usize,
}

impl AngularRule {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 || !count.is_multiple_of(4) {
            return Err(Error::Quadrature(format!(
                "angular node count must be a positive multiple of 4, got {count}"
            )));
        }
        Ok(Self { count })
    }

    pub fn weight(&self) -> f64 {
        2.0 * PI / self.count as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.count as f64
    }

    /// Unit directions of the upper half `j < count / 2`; each stands for
    /// the pair `{e, -e}`.
    pub fn half_directions(&self) -> Vec<[f64; 2]> {
        (0..self.count / 2)
            .map(|j| {
                let t = self.angle(j);
                [t.cos(), t.sin()]
            })
            .collect()
    }

    pub fn directions(&self) -> Vec<[f64; 2]> {
        (0..self.count)
            .map(|j| {
                let t = self.angle(j);
                [t.cos(), t.sin()]
            })
            .collect()
    }
}

/// Polar rule for `P.V. int_{r_min < |y| < r_max} Phi(y) dy / |y|^2`
/// (the `dr/r dtheta` measure; integrands carry their own remaining powers).
#[derive(Clone, Debug, PartialEq)]
pub struct PvQuadrature {
    pub radial: RadialRule,
    pub angular: AngularRule,
    pub r_min: f64,
    pub r_max: f64,
    pub symmetrize: bool,
}

/// One `{y, -y}` node pair: `y = r e` with weight for `d(ln r) dtheta`
/// applied to `Phi(y) + Phi(-y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairNode {
    pub r: f64,
    pub e: [f64; 2],
    pub weight: f64,
}

impl PvQuadrature {
    pub fn new(radial: usize, angular: usize, r_min: f64, r_max: f64) -> Result<Self> {
        Ok(Self {
            radial: RadialRule::log_panels(radial, r_min, r_max)?,
            angular: AngularRule::new(angular)?,
            r_min,
            r_max,
            symmetrize: true,
        })
    }

    /// Grid-adapted rule: `r_min = r_min_factor * L / n`, `r_max = L / 2`.
    pub fn for_grid(n: usize, period: f64, radial: usize, angular: usize, r_min_factor: f64) -> Result<Self> {
        if !(r_min_factor > 0.0 && r_min_factor.is_finite()) {
            return Err(Error::Quadrature(format!("r_min factor must be positive, got {r_min_factor}")));
        }
        Self::new(radial, angular, r_min_factor * period / n as f64, 0.5 * period)
    }

    /// Default resolution: 48 radial x 32 angular, `r_min = L / (4 n)`.
    pub fn default_for(n: usize, period: f64) -> Self {
        Self::for_grid(n, period, 48, 32, 0.25).expect("default quadrature is valid")
    }

    /// Doubles the radial and angular resolution and halves `r_min`, so the
    /// inner-disk Taylor remainder shrinks along with the node error.
    pub fn refined(&self) -> Self {
        let r_min = 0.5 * self.r_min;
        Self {
            radial: RadialRule::log_panels(2 * self.radial.len(), r_min, self.r_max)
                .expect("refining a valid rule"),
            angular: AngularRule::new(2 * self.angular.count).expect("refining a valid rule"),
            r_min,
            ..self.clone()
        }
    }

    pub fn pairs(&self) -> Vec<PairNode> {
        let dtheta = self.angular.weight();
        let dirs = self.angular.half_directions();
        let mut out = Vec::with_capacity(self.radial.len() * dirs.len());
        for (&r, &w) in self.radial.radii.iter().zip(&self.radial.weights) {
            for &e in &dirs {
                out.push(PairNode {
                    r,
                    e,
                    weight: w * dtheta,
                });
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.radial.len() * self.angular.count
    }
}
