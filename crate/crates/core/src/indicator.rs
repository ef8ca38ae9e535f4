//! Direct sampling indicators on a search grid.
//!
//! For one station the auxiliary indicators correlate the data with the
//! test functions of the two window endpoints,
//! `I_j(y) = (Δk/2π) [u(0) + 2 Re Σ_n u(k_n) conj(φ_j(y, k_n))]`,
//! which tends to the profile value `g(x̂·y + t_j)` (far field) or
//! `h(t_j − |x−y|)` (near field). Their harmonic combination vanishes off the
//! strip or annulus of the station; stations are merged by a reciprocal sum.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{MeasurementSet, Stations};
use crate::geometry::{distance, Direction, Point, SamplingGrid};
use crate::source::{SourceModel, TimeWindow};
use crate::spectral::{ProfileOracle, ZeroFrequency};

/// Clamp factor: harmonic combinations floor their inputs at
/// `η = DEFAULT_ETA_FACTOR · max`.
pub const DEFAULT_ETA_FACTOR: f64 = 1e-12;

/// Which window endpoint a test function is tied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Min,
    Max,
}

impl Endpoint {
    pub fn time(&self, window: &TimeWindow) -> f64 {
        match self {
            Endpoint::Min => window.t_min(),
            Endpoint::Max => window.t_max(),
        }
    }

    fn index(&self) -> usize {
        match self {
            Endpoint::Min => 1,
            Endpoint::Max => 2,
        }
    }
}

/// `φ_j = e^{−ik(x̂·y + t_j)}`
pub fn test_function_far(j: Endpoint, direction: &Direction, y: &Point, k: f64, window: &TimeWindow) -> Complex64 {
    Complex64::from_polar(1.0, -k * (direction.project(y) + j.time(window)))
}

/// `ψ_j = e^{ik(|x−y| − t_j)}`
pub fn test_function_near(j: Endpoint, x: &Point, y: &Point, k: f64, window: &TimeWindow) -> Complex64 {
    Complex64::from_polar(1.0, k * (distance(x, y) - j.time(window)))
}

/// The ξ at which station `m` probes the profile from node `y`.
fn probe(stations: &Stations, m: usize, j: Endpoint, y: &Point, window: &TimeWindow) -> f64 {
    match stations {
        Stations::Directions(d) => d[m].project(y) + j.time(window),
        Stations::Points(p) => j.time(window) - distance(&p[m], y),
    }
}

/// Literal evaluation of `I_j` at one node: the data correlated against the
/// test function, one wavenumber at a time.
pub fn auxiliary_indicator(data: &MeasurementSet, m: usize, j: Endpoint, y: &Point, window: &TimeWindow) -> f64 {
    auxiliary_indicator_with(data, m, j, y, window, ZeroFrequency::default())
}

pub fn auxiliary_indicator_with(
    data: &MeasurementSet,
    m: usize,
    j: Endpoint,
    y: &Point,
    window: &TimeWindow,
    zero: ZeroFrequency,
) -> f64 {
    let grid = data.grid();
    let sum: Complex64 = data
        .station_values(m)
        .iter()
        .enumerate()
        .map(|(n, u)| {
            let k = grid.node(n + 1);
            let phi = match data.stations() {
                Stations::Directions(d) => test_function_far(j, &d[m], y, k, window),
                Stations::Points(p) => test_function_near(j, &p[m], y, k, window),
            };
            u * phi.conj()
        })
        .sum();
    (sum.re + zero.half_term(data.station_values(m))) * grid.spacing() / PI
}

/// `(Δk/π) [c₀ + Re Σ_n u_n e^{i n Δk ξ}]` via the phase recurrence.
fn correlate(samples: &[Complex64], dk: f64, xi: f64, c0: f64) -> f64 {
    let w = Complex64::from_polar(1.0, dk * xi);
    let mut z = w;
    let mut acc = c0;
    for u in samples {
        acc += u.re * z.re - u.im * z.im;
        z *= w;
    }
    acc * dk / PI
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    Auxiliary(Endpoint),
    Combined,
    Aggregated,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub formula: Formula,
    pub normalized: bool,
    pub stations: Vec<usize>,
}

impl Provenance {
    pub fn label(&self) -> String {
        let base = match self.formula {
            Formula::Auxiliary(j) => format!("I{}", j.index()),
            Formula::Combined => "I".to_string(),
            Formula::Aggregated => "aggregated".to_string(),
            Formula::Oracle => "oracle".to_string(),
        };
        if self.normalized {
            format!("{base}_normalized")
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    grid: SamplingGrid,
    values: Vec<f64>,
    provenance: Provenance,
}

impl IndicatorField {
    pub fn new(grid: SamplingGrid, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(IndicatorField { grid, values, provenance })
    }

    fn from_fn(grid: &SamplingGrid, provenance: Provenance, f: impl Fn(&Point) -> f64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.node(i))).collect();
        IndicatorField {
            grid: grid.clone(),
            values,
            provenance,
        }
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> usize {
        let max = self.max();
        self.values.iter().position(|&v| v == max).unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Applies `f` to every value, keeping grid and provenance.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> IndicatorField {
        IndicatorField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// `x,y[,z],value` rows after a `# grid` header; numbers use the shortest
    /// round-trip representation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        let d = g.dim();
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let res: Vec<String> = g.resolution()[..d].iter().map(|r| r.to_string()).collect();
        let mut s = String::new();
        writeln!(
            s,
            "# grid lo={} hi={} resolution={}",
            join(&g.lo()[..d]),
            join(&g.hi()[..d]),
            res.join(",")
        )
        .unwrap();
        writeln!(s, "# field {} stations={}", self.provenance.label(), {
            let st: Vec<String> = self.provenance.stations.iter().map(|m| m.to_string()).collect();
            st.join(",")
        })
        .unwrap();
        s.push_str(&["x", "y", "z"][..d].join(","));
        s.push_str(",value\n");
        for (i, v) in self.values.iter().enumerate() {
            let p = g.node(i);
            writeln!(s, "{},{}", join(&p[..d]), v).unwrap();
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut grid: Option<SamplingGrid> = None;
        let mut provenance = Provenance {
            formula: Formula::Combined,
            normalized: false,
            stations: Vec::new(),
        };
        let mut values = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix("# grid ") {
                let mut lo = None;
                let mut hi = None;
                let mut res = None;
                for kv in h.split_whitespace() {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::parse(lineno, format!("expected key=value, got `{kv}`")))?;
                    match k {
                        "lo" => lo = Some(parse_list::<f64>(v, lineno)?),
                        "hi" => hi = Some(parse_list::<f64>(v, lineno)?),
                        "resolution" => res = Some(parse_list::<usize>(v, lineno)?),
                        _ => return Err(Error::parse(lineno, format!("unknown grid key `{k}`"))),
                    }
                }
                let (Some(lo), Some(hi), Some(res)) = (lo, hi, res) else {
                    return Err(Error::parse(lineno, "grid header needs lo, hi and resolution"));
                };
                grid = Some(SamplingGrid::new(&lo, &hi, &res).map_err(|e| Error::parse(lineno, e.to_string()))?);
                continue;
            }
            if let Some(h) = line.strip_prefix("# field ") {
                let mut parts = h.split_whitespace();
                let label = parts.next().unwrap_or("");
                provenance = parse_label(label).ok_or_else(|| Error::parse(lineno, format!("unknown field `{label}`")))?;
                if let Some(st) = parts.next().and_then(|s| s.strip_prefix("stations=")) {
                    if !st.is_empty() {
                        provenance.stations = parse_list::<usize>(st, lineno)?;
                    }
                }
                continue;
            }
            if line.starts_with('#') || line.starts_with('x') {
                continue;
            }
            let g = grid
                .as_ref()
                .ok_or_else(|| Error::parse(lineno, "data row before `# grid` header"))?;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != g.dim() + 1 {
                return Err(Error::parse(lineno, format!("expected {} columns", g.dim() + 1)));
            }
            let v: f64 = f[g.dim()]
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, "bad value"))?;
            values.push(v);
        }
        let grid = grid.ok_or_else(|| Error::parse(0, "missing `# grid` header"))?;
        if values.len() != grid.len() {
            return Err(Error::parse(
                0,
                format!("expected {} rows, found {}", grid.len(), values.len()),
            ));
        }
        Ok(IndicatorField { grid, values, provenance })
    }

    /// Binary 16-bit grayscale image (P5, big-endian). The first row is the
    /// top of the domain (largest second coordinate); values are mapped
    /// linearly so that the field maximum becomes 65535.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        if self.grid.dim() != 2 {
            return Err(Error::Precondition("PGM export needs a 2D grid".into()));
        }
        let (nx, ny) = (self.grid.resolution()[0], self.grid.resolution()[1]);
        let (min, max) = (self.min(), self.max());
        let span = max - min;
        let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
        for j in (0..ny).rev() {
            for i in 0..nx {
                let v = self.values[self.grid.index([i, j, 0])];
                let level = if span > 0.0 {
                    ((v - min) / span * 65535.0).round() as u16
                } else {
                    0
                };
                out.extend_from_slice(&level.to_be_bytes());
            }
        }
        w.write_all(&out)?;
        Ok(())
    }

    /// Legacy ASCII structured-points volume with one scalar array.
    pub fn write_vtk<W: Write>(&self, mut w: W) -> Result<()> {
        if self.grid.dim() != 3 {
            return Err(Error::Precondition("volume export needs a 3D grid".into()));
        }
        let g = &self.grid;
        let r = g.resolution();
        let lo = g.lo();
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\n");
        writeln!(s, "{}", self.provenance.label()).unwrap();
        s.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
        writeln!(s, "DIMENSIONS {} {} {}", r[0], r[1], r[2]).unwrap();
        writeln!(s, "ORIGIN {} {} {}", lo[0], lo[1], lo[2]).unwrap();
        writeln!(s, "SPACING {} {} {}", g.spacing(0), g.spacing(1), g.spacing(2)).unwrap();
        writeln!(s, "POINT_DATA {}", g.len()).unwrap();
        s.push_str("SCALARS indicator double 1\nLOOKUP_TABLE default\n");
        for v in &self.values {
            writeln!(s, "{v}").unwrap();
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.parse::<T>().map_err(|_| Error::parse(lineno, format!("bad list entry `{x}`"))))
        .collect()
}

fn parse_label(label: &str) -> Option<Provenance> {
    let (base, normalized) = match label.strip_suffix("_normalized") {
        Some(b) => (b, true),
        None => (label, false),
    };
    let formula = match base {
        "I1" => Formula::Auxiliary(Endpoint::Min),
        "I2" => Formula::Auxiliary(Endpoint::Max),
        "I" => Formula::Combined,
        "aggregated" => Formula::Aggregated,
        "oracle" => Formula::Oracle,
        _ => return None,
    };
    Some(Provenance {
        formula,
        normalized,
        stations: Vec::new(),
    })
}

/// `I_j` of station `m` over the whole grid.
pub fn auxiliary_field(
    data: &MeasurementSet,
    m: usize,
    j: Endpoint,
    grid: &SamplingGrid,
    window: &TimeWindow,
) -> Result<IndicatorField> {
    auxiliary_field_with(data, m, j, grid, window, ZeroFrequency::default())
}

pub fn auxiliary_field_with(
    data: &MeasurementSet,
    m: usize,
    j: Endpoint,
    grid: &SamplingGrid,
    window: &TimeWindow,
    zero: ZeroFrequency,
) -> Result<IndicatorField> {
    check_station(data, m, grid)?;
    let samples = data.station_values(m);
    let dk = data.grid().spacing();
    let c0 = zero.half_term(samples);
    Ok(IndicatorField::from_fn(
        grid,
        Provenance {
            formula: Formula::Auxiliary(j),
            normalized: false,
            stations: vec![m],
        },
        |y| correlate(samples, dk, probe(data.stations(), m, j, y, window), c0),
    ))
}

fn check_station(data: &MeasurementSet, m: usize, grid: &SamplingGrid) -> Result<()> {
    if m >= data.station_count() {
        return Err(Error::GridMismatch(format!(
            "station {m} out of range (have {})",
            data.station_count()
        )));
    }
    let dim = match data.stations() {
        Stations::Directions(d) => d[m].dim(),
        Stations::Points(_) => 3,
    };
    if dim != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "station dimension {dim} differs from grid dimension {}",
            grid.dim()
        )));
    }
    Ok(())
}

fn eta(factor: f64, max: f64) -> f64 {
    let e = factor * max;
    if e > 0.0 && e.is_finite() {
        e
    } else {
        f64::MIN_POSITIVE
    }
}

/// `I₁I₂/(I₁+I₂)` with both inputs floored at `η`.
pub fn combine(i1: f64, i2: f64, eta: f64) -> f64 {
    let (a, b) = (i1.max(eta), i2.max(eta));
    a * b / (a + b)
}

/// Nodewise [`combine`] with `η = eta_factor · max(max I₁, max I₂)`.
pub fn combine_fields(i1: &IndicatorField, i2: &IndicatorField, eta_factor: f64) -> Result<IndicatorField> {
    if i1.grid != i2.grid {
        return Err(Error::GridMismatch("combined fields must share one grid".into()));
    }
    let e = eta(eta_factor, i1.max().max(i2.max()));
    let mut stations = i1.provenance.stations.clone();
    for s in &i2.provenance.stations {
        if !stations.contains(s) {
            stations.push(*s);
        }
    }
    Ok(IndicatorField {
        grid: i1.grid.clone(),
        values: i1.values.iter().zip(&i2.values).map(|(&a, &b)| combine(a, b, e)).collect(),
        provenance: Provenance {
            formula: Formula::Combined,
            normalized: false,
            stations,
        },
    })
}

/// `[Σ_m 1/I_m]⁻¹` with every input floored at `η = eta_factor · max`.
pub fn aggregate(fields: &[IndicatorField], eta_factor: f64) -> Result<IndicatorField> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Precondition("aggregate needs at least one field".into()))?;
    if fields.iter().any(|f| f.grid != first.grid) {
        return Err(Error::GridMismatch("aggregated fields must share one grid".into()));
    }
    let e = eta(eta_factor, fields.iter().map(|f| f.max()).fold(f64::NEG_INFINITY, f64::max));
    let values = (0..first.values.len())
        .map(|i| 1.0 / fields.iter().map(|f| 1.0 / f.values[i].max(e)).sum::<f64>())
        .collect();
    Ok(IndicatorField {
        grid: first.grid.clone(),
        values,
        provenance: Provenance {
            formula: Formula::Aggregated,
            normalized: false,
            stations: fields.iter().flat_map(|f| f.provenance.stations.iter().copied()).collect(),
        },
    })
}

/// `(I − min) / (max − min)`.
pub fn normalize(field: &IndicatorField) -> Result<IndicatorField> {
    let (min, max) = (field.min(), field.max());
    if !(max > min) {
        return Err(Error::DegenerateRange(format!(
            "cannot normalize a constant field (value {min})"
        )));
    }
    let span = max - min;
    let mut out = field.map(|v| (v - min) / span);
    out.provenance.normalized = true;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: SamplingGrid,
    values: Vec<bool>,
}

impl Mask {
    pub fn new(grid: SamplingGrid, values: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("mask length differs from grid".into()));
        }
        Ok(Mask { grid, values })
    }

    /// Samples a predicate at every grid node.
    pub fn from_predicate(grid: &SamplingGrid, pred: impl Fn(&Point) -> bool + Sync) -> Self {
        Mask {
            grid: grid.clone(),
            values: (0..grid.len()).into_par_iter().map(|i| pred(&grid.node(i))).collect(),
        }
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&b| b).count()
    }

    /// Nodes in the mask.
    pub fn selected(&self) -> impl Iterator<Item = Point> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.grid.node(i))
    }
}

/// `value ≥ ε`.
pub fn threshold_mask(field: &IndicatorField, eps: f64) -> Mask {
    Mask {
        grid: field.grid.clone(),
        values: field.values.iter().map(|&v| v >= eps).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    /// Normalize each station's combined field before aggregating.
    pub normalize_per_station: bool,
    pub eta_factor: f64,
    pub zero_frequency: ZeroFrequency,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            normalize_per_station: true,
            eta_factor: DEFAULT_ETA_FACTOR,
            zero_frequency: ZeroFrequency::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StationFields {
    pub i1: IndicatorField,
    pub i2: IndicatorField,
    pub combined: IndicatorField,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub stations: Vec<StationFields>,
    pub aggregated: IndicatorField,
    pub normalized: IndicatorField,
}

/// Per-station `I₁, I₂, I`, the aggregate over stations and its normalized
/// display field.
pub fn reconstruct(
    data: &MeasurementSet,
    grid: &SamplingGrid,
    window: &TimeWindow,
    options: &PipelineOptions,
) -> Result<Reconstruction> {
    let stations = (0..data.station_count())
        .map(|m| {
            let i1 = auxiliary_field_with(data, m, Endpoint::Min, grid, window, options.zero_frequency)?;
            let i2 = auxiliary_field_with(data, m, Endpoint::Max, grid, window, options.zero_frequency)?;
            let combined = combine_fields(&i1, &i2, options.eta_factor)?;
            Ok(StationFields { i1, i2, combined })
        })
        .collect::<Result<Vec<_>>>()?;
    let inputs = if options.normalize_per_station {
        stations
            .iter()
            .map(|s| normalize(&s.combined))
            .collect::<Result<Vec<_>>>()?
    } else {
        stations.iter().map(|s| s.combined.clone()).collect()
    };
    let aggregated = aggregate(&inputs, options.eta_factor)?;
    let normalized = normalize(&aggregated)?;
    Ok(Reconstruction {
        stations,
        aggregated,
        normalized,
    })
}

/// `combine(g(x̂·y + t_min), g(x̂·y + t_max))` from the exact profile.
pub fn oracle_far_field(
    model: &SourceModel,
    direction: &Direction,
    grid: &SamplingGrid,
    density: f64,
    eta_factor: f64,
) -> IndicatorField {
    let oracle = ProfileOracle::far(model, direction, density);
    let w = *model.window();
    oracle_field(grid, eta_factor, |y| {
        let p = direction.project(y);
        (oracle.eval(p + w.t_min()), oracle.eval(p + w.t_max()))
    })
}

/// `combine(h(t_min − |x−y|), h(t_max − |x−y|))` from the exact profile.
pub fn oracle_near_field(
    model: &SourceModel,
    x: &Point,
    grid: &SamplingGrid,
    density: f64,
    eta_factor: f64,
) -> Result<IndicatorField> {
    let oracle = ProfileOracle::near(model, x, density)?;
    let w = *model.window();
    Ok(oracle_field(grid, eta_factor, |y| {
        let r = distance(x, y);
        (oracle.eval(w.t_min() - r), oracle.eval(w.t_max() - r))
    }))
}

fn oracle_field(grid: &SamplingGrid, eta_factor: f64, pair: impl Fn(&Point) -> (f64, f64) + Sync) -> IndicatorField {
    let pairs: Vec<(f64, f64)> = (0..grid.len()).into_par_iter().map(|i| pair(&grid.node(i))).collect();
    let max = pairs.iter().fold(f64::NEG_INFINITY, |m, &(a, b)| m.max(a).max(b));
    let e = eta(eta_factor, max);
    IndicatorField {
        grid: grid.clone(),
        values: pairs.iter().map(|&(a, b)| combine(a, b, e)).collect(),
        provenance: Provenance {
            formula: Formula::Oracle,
            normalized: false,
            stations: Vec::new(),
        },
    }
}
