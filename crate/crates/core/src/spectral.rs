//! Inverse Fourier transform of multi-frequency data in the wavenumber,
//! supporting-interval estimation, and the exact profiles `g` and `h` that
//! the transformed data converge to.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::FrequencyGrid;
use crate::geometry::{distance, distance_range, project, quadrature_nodes, Direction, Domain, Interval, Point};
use crate::source::{SourceModel, TimeWindow};

/// ξ-nodes per Nyquist spacing `π/K`.
pub const DEFAULT_XI_OVERSAMPLING: usize = 4;
/// Relative threshold for [`supporting_interval`].
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 0.1;

/// Treatment of the unavailable `k = 0` sample in sums over `(−K, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroFrequency {
    /// The `k = 0` node keeps its weight `Δk`, with `Re u(k₁)` standing in
    /// for the real value `u(0)`.
    #[default]
    Proxy,
    /// The `k = 0` cell is left out, which biases sums by `−Δk u(0) / 2π`.
    Omit,
}

impl ZeroFrequency {
    /// Contribution to `Σ_n Re(u_n e^{i k_n ξ})` standing for half the
    /// `k = 0` node.
    pub(crate) fn half_term(&self, samples: &[Complex64]) -> f64 {
        match self {
            ZeroFrequency::Proxy => 0.5 * samples.first().map_or(0.0, |u| u.re),
            ZeroFrequency::Omit => 0.0,
        }
    }
}

/// Samples of a real function of ξ on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    xi_lo: f64,
    xi_step: f64,
    values: Vec<f64>,
    resolution: f64,
}

impl Profile {
    pub fn xi(&self, i: usize) -> f64 {
        self.xi_lo + i as f64 * self.xi_step
    }

    pub fn xi_grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.xi(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Δξ = π/K` of the data the profile came from.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Profile {
        Profile {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// Two-column `xi,value` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::from("xi,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{}\n", self.xi(i), v));
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }
}

/// Number of ξ-nodes covering `range` at `oversampling` nodes per `π/K`.
pub fn default_xi_count(range: &Interval, grid: &FrequencyGrid, oversampling: usize) -> usize {
    let dxi = PI / grid.k_max();
    ((range.length() / dxi) * oversampling as f64).ceil() as usize + 1
}

/// `(1/2π) Δk [u(0) + Σ_n (u_n e^{i k_n ξ} + conj(u_n) e^{−i k_n ξ})]`, the
/// Riemann sum over `(−K, K)` of the Hermitian extension, with `u(0)` taken
/// from the first sample.
pub fn inverse_transform(
    samples: &[Complex64],
    grid: &FrequencyGrid,
    xi_range: &Interval,
    xi_count: usize,
) -> Result<Profile> {
    inverse_transform_with(samples, grid, xi_range, xi_count, ZeroFrequency::default())
}

pub fn inverse_transform_with(
    samples: &[Complex64],
    grid: &FrequencyGrid,
    xi_range: &Interval,
    xi_count: usize,
    zero: ZeroFrequency,
) -> Result<Profile> {
    if xi_count < 2 {
        return Err(Error::Precondition(format!("need at least 2 ξ-nodes, got {xi_count}")));
    }
    if samples.len() != grid.count() {
        return Err(Error::GridMismatch(format!(
            "{} samples for a grid of {} frequencies",
            samples.len(),
            grid.count()
        )));
    }
    let step = xi_range.length() / (xi_count - 1) as f64;
    let dk = grid.spacing();
    let zero_term = zero.half_term(samples);
    let values = (0..xi_count)
        .into_par_iter()
        .map(|i| {
            let xi = if i + 1 == xi_count {
                xi_range.hi()
            } else {
                xi_range.lo() + i as f64 * step
            };
            let mut acc = zero_term;
            for (n, u) in samples.iter().enumerate() {
                let k = grid.node(n + 1);
                let (s, c) = (k * xi).sin_cos();
                acc += u.re * c - u.im * s;
            }
            acc * dk / PI
        })
        .collect();
    Ok(Profile {
        xi_lo: xi_range.lo(),
        xi_step: step,
        values,
        resolution: PI / grid.k_max(),
    })
}

/// Hull of the ξ-nodes where `|value| ≥ ε_s · max|value|`; `None` for an
/// all-zero profile.
pub fn supporting_interval(profile: &Profile, threshold: f64) -> Option<Interval> {
    let max = profile.max_abs();
    if max == 0.0 {
        return None;
    }
    let level = threshold * max;
    let first = profile.values.iter().position(|v| v.abs() >= level)?;
    let last = profile.values.iter().rposition(|v| v.abs() >= level)?;
    Interval::new(profile.xi(first), profile.xi(last)).ok()
}

/// `H = (inf x̂·D + t_min, sup x̂·D + t_max)`.
pub fn far_supporting_interval(domain: &Domain, direction: &Direction, window: &TimeWindow) -> Option<Interval> {
    let p = project(domain, direction)?;
    Interval::new(p.lo() + window.t_min(), p.hi() + window.t_max()).ok()
}

/// `H₀ = (t_min − sup|x₀−z|, t_max − inf|x₀−z|)`.
pub fn near_supporting_interval(x0: &Point, domain: &Domain, window: &TimeWindow) -> Result<Interval> {
    let r = distance_range(x0, domain)?;
    Interval::new(window.t_min() - r.hi(), window.t_max() - r.lo())
}

/// Tabulated profile `ξ ↦ Σ_y c_y F(y, ξ − q_y) 𝟙{t_min < ξ − q_y < t_max}`
/// over the cell-rule nodes of the support, with `q_y = x̂·y` and
/// `c_y = w_y` for the far field or `q_y = −|x₀−y|` and
/// `c_y = w_y / (4π|x₀−y|)` for the near field.
#[derive(Clone)]
pub struct ProfileOracle<'a> {
    model: &'a SourceModel,
    /// (q, c, y) sorted by q.
    nodes: Vec<(f64, f64, Point)>,
    coeffs: Option<Vec<[f64; 4]>>,
}

impl<'a> ProfileOracle<'a> {
    /// Oracle for `g` along `direction`.
    pub fn far(model: &'a SourceModel, direction: &Direction, density: f64) -> Self {
        let nodes = quadrature_nodes(model.support(), density)
            .into_iter()
            .map(|n| (direction.project(&n.point), n.weight, n.point))
            .collect();
        Self::build(model, nodes)
    }

    /// Oracle for `h` seen from `x0`.
    pub fn near(model: &'a SourceModel, x0: &Point, density: f64) -> Result<Self> {
        if model.support().contains(x0) {
            return Err(Error::Precondition(format!("{x0:?} lies inside the support")));
        }
        let nodes = quadrature_nodes(model.support(), density)
            .into_iter()
            .map(|n| {
                let r = distance(x0, &n.point);
                (-r, n.weight / (4.0 * PI * r), n.point)
            })
            .collect();
        Ok(Self::build(model, nodes))
    }

    fn build(model: &'a SourceModel, mut nodes: Vec<(f64, f64, Point)>) -> Self {
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let coeffs = nodes
            .iter()
            .map(|(_, _, y)| model.time_coefficients(y))
            .collect::<Option<Vec<_>>>();
        ProfileOracle { model, nodes, coeffs }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let w = self.model.window();
        let (lo_q, hi_q) = (xi - w.t_max(), xi - w.t_min());
        let start = self.nodes.partition_point(|n| n.0 <= lo_q);
        let end = self.nodes.partition_point(|n| n.0 < hi_q);
        let mut acc = 0.0;
        for i in start..end {
            let (q, c, y) = &self.nodes[i];
            let t = xi - q;
            let f = match &self.coeffs {
                Some(a) => {
                    let a = &a[i];
                    ((a[3] * t + a[2]) * t + a[1]) * t + a[0]
                }
                None => self.model.amplitude(y, t),
            };
            acc += c * f;
        }
        acc
    }

    pub fn tabulate(&self, xi: &[f64]) -> Vec<f64> {
        xi.par_iter().map(|&x| self.eval(x)).collect()
    }
}

/// `g(ξ) = ∫_D F(y, ξ − x̂·y) 𝟙{t_min < ξ − x̂·y < t_max} dy`.
pub fn profile_oracle_far(model: &SourceModel, direction: &Direction, xi: f64, density: f64) -> f64 {
    ProfileOracle::far(model, direction, density).eval(xi)
}

/// `h(ξ) = ∫_D F(y, ξ + |x₀−y|) / (4π|x₀−y|) 𝟙{t_min < ξ + |x₀−y| < t_max} dy`.
pub fn profile_oracle_near(model: &SourceModel, x0: &Point, xi: f64, density: f64) -> Result<f64> {
    Ok(ProfileOracle::near(model, x0, density)?.eval(xi))
}

/// True when the projections of `d1` and `d2` along `direction` are
/// separated by more than the window length.
pub fn assumption_a(d1: &Domain, d2: &Domain, direction: &Direction, window: &TimeWindow) -> bool {
    let (Some(p1), Some(p2)) = (project(d1, direction), project(d2, direction)) else {
        return false;
    };
    let t = window.duration();
    p2.lo() - p1.hi() > t || p1.lo() - p2.hi() > t
}
