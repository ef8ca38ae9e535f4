//! Time-dependent sources `F(x, t)` on `D × (t_min, t_max)` and their
//! windowed Fourier transforms `f(x, k) = ∫ F(x, t) e^{−ikt} dt`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{quadrature_nodes, Domain, Point};
use crate::poly::Polynomial;

/// Interior time samples used by the positivity check.
const POSITIVITY_TIME_SAMPLES: usize = 128;
/// Panels of the Simpson fallback for non-polynomial amplitudes.
const SIMPSON_PANELS: usize = 512;
/// Highest supported power of `t` in polynomial amplitudes.
pub const MAX_TIME_DEGREE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    t_min: f64,
    t_max: f64,
}

impl TimeWindow {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(0.0 <= t_min && t_min < t_max && t_max.is_finite()) {
            return Err(Error::InvalidSource(format!(
                "time window needs 0 <= t_min < t_max, got ({t_min}, {t_max})"
            )));
        }
        Ok(TimeWindow { t_min, t_max })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// `T = t_max − t_min`
    pub fn duration(&self) -> f64 {
        self.t_max - self.t_min
    }

    /// Strictly interior time samples (cell midpoints).
    pub fn interior_samples(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let h = self.duration() / n as f64;
        (0..n).map(move |i| self.t_min + (i as f64 + 0.5) * h)
    }

    /// Moments `M_j(k) = ∫_{t_min}^{t_max} t^j e^{−ikt} dt` for
    /// `j = 0..=MAX_TIME_DEGREE`, in closed form.
    ///
    /// The integral is taken about the window midpoint `c`, so
    /// `M_j = e^{−ikc} Σ_l C(j,l) c^{j−l} N_l` with
    /// `N_l = ∫_{−h}^{h} τ^l e^{−ikτ} dτ`; `N_l` comes from its Taylor series
    /// when `|k| h` is small and from the antiderivative otherwise.
    pub fn moments(&self, k: f64) -> [Complex64; MAX_TIME_DEGREE + 1] {
        let c = 0.5 * (self.t_min + self.t_max);
        let h = 0.5 * self.duration();
        let n = centered_moments(k, h);
        let phase = Complex64::from_polar(1.0, -k * c);
        let mut out = [Complex64::new(0.0, 0.0); MAX_TIME_DEGREE + 1];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, nl) in n.iter().enumerate().take(j + 1) {
                acc += nl * (binomial(j, l) * c.powi((j - l) as i32));
            }
            *slot = phase * acc;
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn centered_moments(k: f64, h: f64) -> [Complex64; MAX_TIME_DEGREE + 1] {
    let mut out = [Complex64::new(0.0, 0.0); MAX_TIME_DEGREE + 1];
    if (k * h).abs() < 0.5 {
        // Σ_p (−ik)^p / p! ∫ τ^{l+p} dτ; odd powers integrate to zero.
        for (l, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut coeff = Complex64::new(1.0, 0.0);
            for p in 0..40 {
                if (l + p) % 2 == 0 {
                    let e = (l + p + 1) as i32;
                    acc += coeff * (2.0 * h.powi(e) / e as f64);
                }
                coeff *= Complex64::new(0.0, -k) / (p + 1) as f64;
            }
            *slot = acc;
        }
    } else {
        // ∫ τ^l e^{aτ} dτ = e^{aτ} Σ_m (−1)^m l!/(l−m)! τ^{l−m} / a^{m+1}
        let a = Complex64::new(0.0, -k);
        let anti = |l: usize, tau: f64| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut falling = 1.0;
            let mut apow = a;
            for m in 0..=l {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * falling * tau.powi((l - m) as i32) / apow;
                falling *= (l - m) as f64;
                apow *= a;
            }
            (a * tau).exp() * acc
        };
        for (l, slot) in out.iter_mut().enumerate() {
            *slot = anti(l, h) - anti(l, -h);
        }
    }
    out
}

type AmplitudeFn = dyn Fn(&Point, f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Amplitude {
    /// `F(x, t) = Σ_j a_j(x) t^j`, with the split kept alongside.
    Polynomial {
        joint: Polynomial,
        by_power: Vec<Polynomial>,
    },
    General(Arc<AmplitudeFn>),
}

impl fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amplitude::Polynomial { joint, .. } => write!(f, "Polynomial({joint})"),
            Amplitude::General(_) => write!(f, "General(<fn>)"),
        }
    }
}

/// A real, positive source `F(x, t)` supported on `support × window`.
#[derive(Debug, Clone)]
pub struct SourceModel {
    support: Domain,
    window: TimeWindow,
    amplitude: Amplitude,
}

impl SourceModel {
    /// Separable source `F(x, t) = a(x) · b(t)`.
    pub fn separable(
        support: Domain,
        window: TimeWindow,
        spatial: &Polynomial,
        temporal: &Polynomial,
    ) -> Result<Self> {
        if spatial.degree_in(3) > 0 {
            return Err(Error::InvalidSource("spatial factor must not depend on t".into()));
        }
        if (0..3).any(|i| temporal.degree_in(i) > 0) {
            return Err(Error::InvalidSource(
                "temporal factor must depend on t only".into(),
            ));
        }
        SourceModel::polynomial(support, window, spatial.mul(temporal))
    }

    /// Source given by one polynomial in `(x, t)` of degree at most 3 in `t`.
    pub fn polynomial(support: Domain, window: TimeWindow, joint: Polynomial) -> Result<Self> {
        if joint.degree_in(3) as usize > MAX_TIME_DEGREE {
            return Err(Error::InvalidSource(format!(
                "temporal degree above {MAX_TIME_DEGREE} is not supported"
            )));
        }
        let by_power = joint.split_time();
        let model = SourceModel {
            support,
            window,
            amplitude: Amplitude::Polynomial { joint, by_power },
        };
        model.check_positivity()?;
        Ok(model)
    }

    /// Arbitrary amplitude; its frequency profile is evaluated by composite
    /// Simpson quadrature in `t`.
    pub fn general(
        support: Domain,
        window: TimeWindow,
        amplitude: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let model = SourceModel {
            support,
            window,
            amplitude: Amplitude::General(Arc::new(amplitude)),
        };
        model.check_positivity()?;
        Ok(model)
    }

    fn check_positivity(&self) -> Result<()> {
        let density = if self.support.dim() == 2 { 20.0 } else { 10.0 };
        let nodes = quadrature_nodes(&self.support, density);
        for n in &nodes {
            for t in self.window.interior_samples(POSITIVITY_TIME_SAMPLES) {
                let v = self.amplitude(&n.point, t);
                if !(v > 0.0) {
                    return Err(Error::InvalidSource(format!(
                        "F(x, t) = {v} is not positive at x = {:?}, t = {t}",
                        n.point
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn support(&self) -> &Domain {
        &self.support
    }

    pub fn window(&self) -> &TimeWindow {
        &self.window
    }

    /// The polynomial `F(x, t)`, when the source has one.
    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match &self.amplitude {
            Amplitude::Polynomial { joint, .. } => Some(joint),
            Amplitude::General(_) => None,
        }
    }

    /// `F(x, t)` without any support restriction.
    pub fn amplitude(&self, x: &Point, t: f64) -> f64 {
        match &self.amplitude {
            Amplitude::Polynomial { joint, .. } => joint.eval(x, t),
            Amplitude::General(f) => f(x, t),
        }
    }

    /// `a_j(x)` in `F(x, t) = Σ_j a_j(x) t^j`, or `None` for general sources.
    pub fn time_coefficients(&self, x: &Point) -> Option<[f64; MAX_TIME_DEGREE + 1]> {
        match &self.amplitude {
            Amplitude::Polynomial { by_power, .. } => {
                let mut out = [0.0; MAX_TIME_DEGREE + 1];
                for (slot, p) in out.iter_mut().zip(by_power) {
                    *slot = p.eval(x, 0.0);
                }
                Some(out)
            }
            Amplitude::General(_) => None,
        }
    }

    /// `f(x, k)`; exactly zero outside the support.
    pub fn frequency_profile(&self, x: &Point, k: f64) -> Complex64 {
        if !self.support.contains(x) {
            return Complex64::new(0.0, 0.0);
        }
        self.frequency_profile_unchecked(x, k)
    }

    /// `f(x, k)` for a point already known to lie in the support.
    pub(crate) fn frequency_profile_unchecked(&self, x: &Point, k: f64) -> Complex64 {
        match &self.amplitude {
            Amplitude::Polynomial { by_power, .. } => {
                let m = self.window.moments(k);
                by_power
                    .iter()
                    .zip(m.iter())
                    .map(|(p, mj)| mj * p.eval(x, 0.0))
                    .sum()
            }
            Amplitude::General(f) => simpson_transform(|t| f(x, t), &self.window, k),
        }
    }

    /// `f(x, k)` for all real `k`, using `f(x, −k) = conj f(x, k)`.
    pub fn conjugate_extension(&self, x: &Point, k: f64) -> Complex64 {
        if k < 0.0 {
            self.frequency_profile(x, -k).conj()
        } else {
            self.frequency_profile(x, k)
        }
    }

    /// The same source moved rigidly by `offset` (support and amplitude).
    pub fn translated(&self, offset: &Point) -> SourceModel {
        let support = self.support.translate(offset);
        let amplitude = match &self.amplitude {
            Amplitude::Polynomial { joint, .. } => {
                let joint = joint.shifted(offset);
                let by_power = joint.split_time();
                Amplitude::Polynomial { joint, by_power }
            }
            Amplitude::General(f) => {
                let f = Arc::clone(f);
                let d = *offset;
                Amplitude::General(Arc::new(move |x: &Point, t| {
                    f(&[x[0] - d[0], x[1] - d[1], x[2] - d[2]], t)
                }))
            }
        };
        SourceModel {
            support,
            window: self.window,
            amplitude,
        }
    }
}

/// Composite Simpson rule for `∫ g(t) e^{−ikt} dt` over the window.
pub(crate) fn simpson_transform(g: impl Fn(f64) -> f64, window: &TimeWindow, k: f64) -> Complex64 {
    simpson(
        |t| Complex64::from_polar(g(t), -k * t),
        window.t_min(),
        window.t_max(),
        SIMPSON_PANELS,
    )
}

pub(crate) fn simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, panels: usize) -> Complex64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + i as f64 * h) * w;
    }
    acc * (h / 3.0)
}
