//! Experiment configuration read from a single JSON document.

use std::f64::consts::PI;
use std::path::Path;

use dsm_core::forward::{DEFAULT_DENSITY_2D, DEFAULT_DENSITY_3D};
use dsm_core::indicator::DEFAULT_ETA_FACTOR;
use dsm_core::spectral::{ZeroFrequency, DEFAULT_SUPPORT_THRESHOLD};
use dsm_core::{
    Direction, Domain, FrequencyGrid, MeasurementKind, NoiseMode, PipelineOptions, Point, Polynomial,
    SamplingGrid, SourceModel, Stations, TimeWindow,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Components of the support; more than one forms a disjoint union.
    pub domain: Vec<DomainSpec>,
    pub source: SourceSpec,
    pub measurement: MeasurementSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub pipeline: PipelineSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
    Kite {
        center: [f64; 2],
        #[serde(default = "one")]
        scale: f64,
    },
    Ball { center: [f64; 3], radius: f64 },
    /// Square in 2D, cube in 3D.
    Cube { center: Vec<f64>, half_width: f64 },
}

fn one() -> f64 {
    1.0
}

/// `F(x, t) = a(x) · b(t)` on `D × (window[0], window[1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub amplitude: String,
    pub temporal: String,
    pub window: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindSpec {
    FarField,
    NearField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub kind: KindSpec,
    /// Observation angles in radians (far field, 2D).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    /// Observation angles as multiples of π.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles_over_pi: Option<Vec<f64>>,
    /// `M` directions at `θ_m = (m − 1)π / M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_angles: Option<usize>,
    /// Observation points (near field, 3D).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 3]>>,
    pub k_max: f64,
    pub count: usize,
    /// Quadrature nodes per unit length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModeSpec {
    #[default]
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
    pub mode: NoiseModeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroFrequencySpec {
    #[default]
    Proxy,
    Omit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSpec {
    pub normalize_per_station: bool,
    /// Mask threshold ε on the normalized field (iso-level in 3D).
    pub threshold: f64,
    pub eta_factor: f64,
    pub zero_frequency: ZeroFrequencySpec,
    /// Relative threshold ε_s for supporting intervals of profiles.
    pub spectral_threshold: f64,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        PipelineSpec {
            normalize_per_station: true,
            threshold: 0.1,
            eta_factor: DEFAULT_ETA_FACTOR,
            zero_frequency: ZeroFrequencySpec::Proxy,
            spectral_threshold: DEFAULT_SUPPORT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// Also compare against the indicator built from the exact profile.
    pub oracle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    I1,
    I2,
    Combined,
    Aggregated,
    Normalized,
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::I1 => "i1",
            FieldKind::I2 => "i2",
            FieldKind::Combined => "combined",
            FieldKind::Aggregated => "aggregated",
            FieldKind::Normalized => "normalized",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub measurement: String,
    pub fields: Vec<FieldKind>,
    /// Also export each field as PGM (2D) or a structured-points volume (3D).
    pub images: bool,
    pub report: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            measurement: "measurement.csv".into(),
            fields: vec![
                FieldKind::I1,
                FieldKind::I2,
                FieldKind::Combined,
                FieldKind::Aggregated,
                FieldKind::Normalized,
            ],
            images: false,
            report: "report.txt".into(),
        }
    }
}

pub const RESOLVED_CONFIG: &str = "resolved_config.json";

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Defaults filled in and station lists expanded to explicit radians or
    /// points, then validated by building every derived object once.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let m = &mut self.measurement;
        match m.kind {
            KindSpec::FarField => {
                let given = [m.angles.is_some(), m.angles_over_pi.is_some(), m.uniform_angles.is_some()];
                if given.iter().filter(|g| **g).count() != 1 || m.points.is_some() {
                    return Err(CliError::Config(
                        "measurement: far field needs exactly one of angles, angles_over_pi, uniform_angles".into(),
                    ));
                }
                let angles = if let Some(a) = m.angles.take() {
                    a
                } else if let Some(a) = m.angles_over_pi.take() {
                    a.iter().map(|v| v * PI).collect()
                } else {
                    let n = m.uniform_angles.take().unwrap();
                    (0..n).map(|i| i as f64 * PI / n as f64).collect()
                };
                m.angles = Some(angles);
                m.density.get_or_insert(DEFAULT_DENSITY_2D);
            }
            KindSpec::NearField => {
                if m.points.is_none() || m.angles.is_some() || m.angles_over_pi.is_some() || m.uniform_angles.is_some() {
                    return Err(CliError::Config("measurement: near field needs points and no angles".into()));
                }
                m.density.get_or_insert(DEFAULT_DENSITY_3D);
            }
        }
        let p = &self.pipeline;
        if !(p.threshold.is_finite() && p.spectral_threshold > 0.0 && p.eta_factor > 0.0) {
            return Err(CliError::Config("pipeline: thresholds and eta_factor must be positive".into()));
        }
        if !(self.noise.delta >= 0.0 && self.noise.delta.is_finite()) {
            return Err(CliError::Config(format!("noise.delta must be non-negative, got {}", self.noise.delta)));
        }
        if self.output.fields.is_empty() {
            return Err(CliError::Config("output.fields must not be empty".into()));
        }
        let exp = self.build_source()?;
        let stations = self.stations()?;
        let grid = self.sampling_grid()?;
        self.frequency_grid()?;
        let dim = exp.support().dim();
        let sdim = if stations.kind() == MeasurementKind::FarField { 2 } else { 3 };
        if dim != sdim || grid.dim() != dim {
            return Err(CliError::Config(format!(
                "dimension mismatch: domain {dim}, stations {sdim}, grid {}",
                grid.dim()
            )));
        }
        if let Stations::Points(pts) = &stations {
            if let Some(p) = pts.iter().find(|p| exp.support().contains(p)) {
                return Err(CliError::Config(format!("measurement point {p:?} lies inside the support")));
            }
        }
        Ok(self)
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        let members = self
            .domain
            .iter()
            .enumerate()
            .map(|(i, d)| {
                match d {
                    DomainSpec::Disk { center, radius } => Domain::disk(*center, *radius),
                    DomainSpec::Ellipse { center, semi_axes } => Domain::ellipse(*center, *semi_axes),
                    DomainSpec::Kite { center, scale } => Domain::kite(*center, *scale),
                    DomainSpec::Ball { center, radius } => Domain::ball(*center, *radius),
                    DomainSpec::Cube { center, half_width } => Domain::cube(center, *half_width),
                }
                .map_err(|e| CliError::Config(format!("domain[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        match members.len() {
            0 => Err(CliError::Config("domain must list at least one component".into())),
            1 => Ok(members.into_iter().next().unwrap()),
            _ => Domain::union(members).map_err(|e| CliError::Config(format!("domain: {e}"))),
        }
    }

    pub fn window(&self) -> Result<TimeWindow, CliError> {
        let [a, b] = self.source.window;
        TimeWindow::new(a, b).map_err(|e| CliError::Config(format!("source.window: {e}")))
    }

    pub fn build_source(&self) -> Result<SourceModel, CliError> {
        let dim = self.domain()?.dim();
        let spatial_vars: &[&str] = if dim == 2 { &["x1", "x2"] } else { &["x1", "x2", "x3"] };
        let a = Polynomial::parse(&self.source.amplitude, spatial_vars)
            .map_err(|e| CliError::Config(format!("source.amplitude: {e}")))?;
        let b = Polynomial::parse(&self.source.temporal, &["x1", "x2", "x3", "t"])
            .and_then(|b| {
                if (0..3).any(|i| b.degree_in(i) > 0) {
                    Err(dsm_core::Error::InvalidSource("temporal factor must depend on t only".into()))
                } else {
                    Ok(b)
                }
            })
            .map_err(|e| CliError::Config(format!("source.temporal: {e}")))?;
        SourceModel::separable(self.domain()?, self.window()?, &a, &b)
            .map_err(|e| CliError::Config(format!("source: {e}")))
    }

    pub fn stations(&self) -> Result<Stations, CliError> {
        let m = &self.measurement;
        match m.kind {
            KindSpec::FarField => {
                let angles = m
                    .angles
                    .as_ref()
                    .ok_or_else(|| CliError::Config("measurement.angles missing after resolution".into()))?;
                if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) {
                    return Err(CliError::Config("measurement: angles must be finite and non-empty".into()));
                }
                Ok(Stations::Directions(angles.iter().map(|&a| Direction::from_angle(a)).collect()))
            }
            KindSpec::NearField => {
                let pts: Vec<Point> = m.points.clone().unwrap_or_default();
                if pts.is_empty() {
                    return Err(CliError::Config("measurement.points must not be empty".into()));
                }
                Ok(Stations::Points(pts))
            }
        }
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid, CliError> {
        FrequencyGrid::new(self.measurement.k_max, self.measurement.count)
            .map_err(|e| CliError::Config(format!("measurement: {e}")))
    }

    pub fn density(&self) -> f64 {
        self.measurement.density.unwrap_or(match self.measurement.kind {
            KindSpec::FarField => DEFAULT_DENSITY_2D,
            KindSpec::NearField => DEFAULT_DENSITY_3D,
        })
    }

    pub fn sampling_grid(&self) -> Result<SamplingGrid, CliError> {
        let g = &self.grid;
        SamplingGrid::new(&g.lo, &g.hi, &g.resolution).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn noise_mode(&self) -> NoiseMode {
        match self.noise.mode {
            NoiseModeSpec::Real => NoiseMode::Real,
            NoiseModeSpec::Complex => NoiseMode::Complex,
        }
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            normalize_per_station: self.pipeline.normalize_per_station,
            eta_factor: self.pipeline.eta_factor,
            zero_frequency: match self.pipeline.zero_frequency {
                ZeroFrequencySpec::Proxy => ZeroFrequency::Proxy,
                ZeroFrequencySpec::Omit => ZeroFrequency::Omit,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
