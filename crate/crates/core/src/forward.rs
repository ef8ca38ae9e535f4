//! Synthetic multi-frequency measurements: far-field patterns
//! `u∞(x̂, k) = ∫_D e^{−ik x̂·y} f(y, k) dy` and near-field values
//! `u(x, k) = ∫_D Φ_k(x, y) f(y, k) dy`, plus multiplicative noise.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{distance, quadrature_nodes, Direction, Point, QuadNode};
use crate::source::{SourceModel, MAX_TIME_DEGREE};

/// Default cell-rule densities (nodes per unit length).
pub const DEFAULT_DENSITY_2D: f64 = 100.0;
pub const DEFAULT_DENSITY_3D: f64 = 30.0;

/// Wavenumbers `k_n = n K / N`, `n = 1..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    k_max: f64,
    count: usize,
}

impl FrequencyGrid {
    pub fn new(k_max: f64, count: usize) -> Result<Self> {
        if !(k_max > 0.0 && k_max.is_finite()) || count == 0 {
            return Err(Error::Precondition(format!(
                "frequency grid needs K > 0 and N >= 1, got K = {k_max}, N = {count}"
            )));
        }
        Ok(FrequencyGrid { k_max, count })
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `Δk = K / N`
    pub fn spacing(&self) -> f64 {
        self.k_max / self.count as f64
    }

    /// Node `k_n` for `n` in `1..=N`.
    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.k_max / self.count as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.count).map(move |n| self.node(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    FarField,
    NearField,
}

impl MeasurementKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasurementKind::FarField => "far_field",
            MeasurementKind::NearField => "near_field",
        }
    }
}

/// Observation directions (far field) or observation points (near field).
#[derive(Debug, Clone, PartialEq)]
pub enum Stations {
    Directions(Vec<Direction>),
    Points(Vec<Point>),
}

impl Stations {
    pub fn len(&self) -> usize {
        match self {
            Stations::Directions(d) => d.len(),
            Stations::Points(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> MeasurementKind {
        match self {
            Stations::Directions(_) => MeasurementKind::FarField,
            Stations::Points(_) => MeasurementKind::NearField,
        }
    }

    fn coordinates(&self, m: usize) -> Vec<f64> {
        match self {
            Stations::Directions(d) => d[m].as_slice().to_vec(),
            Stations::Points(p) => p[m].to_vec(),
        }
    }

    /// Reorders stations; `order[i]` is the old index placed at `i`.
    pub fn permuted(&self, order: &[usize]) -> Stations {
        match self {
            Stations::Directions(d) => Stations::Directions(order.iter().map(|&i| d[i]).collect()),
            Stations::Points(p) => Stations::Points(order.iter().map(|&i| p[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// One real uniform variate per complex sample.
    #[default]
    Real,
    /// Independent uniform variates for the real and imaginary parts.
    Complex,
}

/// Complex samples indexed by (station, frequency node), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    stations: Stations,
    grid: FrequencyGrid,
    values: Vec<Complex64>,
    noise_level: f64,
    seed: u64,
    noise_mode: NoiseMode,
}

impl MeasurementSet {
    pub fn new(stations: Stations, grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != stations.len() * grid.count() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} stations x {} frequencies",
                values.len(),
                stations.len(),
                grid.count()
            )));
        }
        Ok(MeasurementSet {
            stations,
            grid,
            values,
            noise_level: 0.0,
            seed: 0,
            noise_mode: NoiseMode::Real,
        })
    }

    pub fn kind(&self) -> MeasurementKind {
        self.stations.kind()
    }

    pub fn stations(&self) -> &Stations {
        &self.stations
    }

    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// The N samples of station `m`.
    pub fn station_values(&self, m: usize) -> &[Complex64] {
        let n = self.grid.count();
        &self.values[m * n..(m + 1) * n]
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn noise_mode(&self) -> NoiseMode {
        self.noise_mode
    }

    /// Writes the measurement CSV. Numbers use the shortest representation
    /// that parses back to the same `f64`, so write → read → write is
    /// byte-identical.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "# kind={}", self.kind().name()).unwrap();
        writeln!(s, "# K={} N={}", self.grid.k_max(), self.grid.count()).unwrap();
        write!(s, "# delta={} seed={}", self.noise_level, self.seed).unwrap();
        if self.noise_mode == NoiseMode::Complex {
            write!(s, " noise=complex").unwrap();
        }
        s.push('\n');
        for m in 0..self.station_count() {
            let coords: Vec<String> = self
                .stations
                .coordinates(m)
                .iter()
                .map(|c| c.to_string())
                .collect();
            writeln!(s, "# station {m}: {}", coords.join(",")).unwrap();
        }
        for m in 0..self.station_count() {
            for (n, v) in self.station_values(m).iter().enumerate() {
                writeln!(s, "{m},{},{},{}", self.grid.node(n + 1), v.re, v.im).unwrap();
            }
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut kind = None;
        let mut grid = None;
        let mut noise = None;
        let mut coords: Vec<Vec<f64>> = Vec::new();
        let mut rows: Vec<(usize, usize, f64, f64)> = Vec::new();

        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix("# ") {
                if let Some(v) = h.strip_prefix("kind=") {
                    kind = Some(match v {
                        "far_field" => MeasurementKind::FarField,
                        "near_field" => MeasurementKind::NearField,
                        _ => return Err(Error::parse(lineno, format!("unknown kind `{v}`"))),
                    });
                } else if h.starts_with("K=") {
                    let kv = key_values(h, lineno)?;
                    let k: f64 = lookup(&kv, "K", lineno)?;
                    let n: usize = lookup(&kv, "N", lineno)?;
                    grid = Some(FrequencyGrid::new(k, n).map_err(|e| Error::parse(lineno, e.to_string()))?);
                } else if h.starts_with("delta=") {
                    let kv = key_values(h, lineno)?;
                    let delta: f64 = lookup(&kv, "delta", lineno)?;
                    let seed: u64 = lookup(&kv, "seed", lineno)?;
                    let mode = match kv.iter().find(|(k, _)| k == "noise").map(|(_, v)| v.as_str()) {
                        None | Some("real") => NoiseMode::Real,
                        Some("complex") => NoiseMode::Complex,
                        Some(other) => {
                            return Err(Error::parse(lineno, format!("unknown noise mode `{other}`")))
                        }
                    };
                    noise = Some((delta, seed, mode));
                } else if let Some(rest) = h.strip_prefix("station ") {
                    let (idx, c) = rest
                        .split_once(": ")
                        .ok_or_else(|| Error::parse(lineno, "station line needs `m: coords`"))?;
                    let idx: usize = idx
                        .parse()
                        .map_err(|_| Error::parse(lineno, "bad station index"))?;
                    if idx != coords.len() {
                        return Err(Error::parse(lineno, "station indices must be consecutive"));
                    }
                    let c = c
                        .split(',')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::parse(lineno, "bad station coordinate"))?;
                    coords.push(c);
                } else {
                    return Err(Error::parse(lineno, format!("unknown header `{line}`")));
                }
                continue;
            }
            let g = grid.ok_or_else(|| Error::parse(lineno, "data row before `# K= N=` header"))?;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::parse(lineno, "data rows need 4 fields"));
            }
            let m: usize = f[0].trim().parse().map_err(|_| Error::parse(lineno, "bad station index"))?;
            let k: f64 = f[1].trim().parse().map_err(|_| Error::parse(lineno, "bad wavenumber"))?;
            let re: f64 = f[2].trim().parse().map_err(|_| Error::parse(lineno, "bad real part"))?;
            let im: f64 = f[3].trim().parse().map_err(|_| Error::parse(lineno, "bad imaginary part"))?;
            let n = rows.len() % g.count();
            if m != rows.len() / g.count() {
                return Err(Error::parse(lineno, "rows must be ordered by station, then frequency"));
            }
            let expect = g.node(n + 1);
            if (k - expect).abs() > 1e-12 * expect {
                return Err(Error::parse(lineno, format!("wavenumber {k} does not match grid node {expect}")));
            }
            rows.push((m, n, re, im));
        }

        let kind = kind.ok_or_else(|| Error::parse(0, "missing `# kind=` header"))?;
        let grid = grid.ok_or_else(|| Error::parse(0, "missing `# K= N=` header"))?;
        let (delta, seed, mode) = noise.ok_or_else(|| Error::parse(0, "missing `# delta= seed=` header"))?;
        let stations = match kind {
            MeasurementKind::FarField => Stations::Directions(
                coords
                    .iter()
                    .map(|c| Direction::from_unit(c))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| Error::parse(0, e.to_string()))?,
            ),
            MeasurementKind::NearField => Stations::Points(
                coords
                    .iter()
                    .map(|c| {
                        <[f64; 3]>::try_from(c.as_slice())
                            .map_err(|_| Error::parse(0, "near-field stations need 3 coordinates"))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        if rows.len() != stations.len() * grid.count() {
            return Err(Error::parse(
                0,
                format!(
                    "expected {} data rows, found {}",
                    stations.len() * grid.count(),
                    rows.len()
                ),
            ));
        }
        let values = rows.iter().map(|&(_, _, re, im)| Complex64::new(re, im)).collect();
        let mut set = MeasurementSet::new(stations, grid, values)?;
        set.noise_level = delta;
        set.seed = seed;
        set.noise_mode = mode;
        Ok(set)
    }
}

fn key_values(h: &str, lineno: usize) -> Result<Vec<(String, String)>> {
    h.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::parse(lineno, format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

fn lookup<T: std::str::FromStr>(kv: &[(String, String)], key: &str, lineno: usize) -> Result<T> {
    kv.iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| Error::parse(lineno, format!("missing `{key}`")))?
        .1
        .parse()
        .map_err(|_| Error::parse(lineno, format!("bad value for `{key}`")))
}

/// A source discretized by the cell rule, with the per-node time
/// coefficients pre-multiplied by the cell weights.
#[derive(Debug, Clone)]
pub struct ForwardSolver<'a> {
    model: &'a SourceModel,
    nodes: Vec<QuadNode>,
    weighted: Option<Vec<[f64; MAX_TIME_DEGREE + 1]>>,
}

impl<'a> ForwardSolver<'a> {
    pub fn new(model: &'a SourceModel, density: f64) -> Self {
        let nodes = quadrature_nodes(model.support(), density);
        let weighted = nodes
            .iter()
            .map(|n| {
                model.time_coefficients(&n.point).map(|mut a| {
                    a.iter_mut().for_each(|c| *c *= n.weight);
                    a
                })
            })
            .collect::<Option<Vec<_>>>();
        ForwardSolver {
            model,
            nodes,
            weighted,
        }
    }

    pub fn nodes(&self) -> &[QuadNode] {
        &self.nodes
    }

    /// `Σ_y w_y K(y) f(y, k)` for a kernel `K` given as (phase, amplitude).
    fn integrate(&self, k: f64, kernel: impl Fn(&Point) -> (f64, f64)) -> Complex64 {
        match &self.weighted {
            Some(coeffs) => {
                let mut partial = [Complex64::new(0.0, 0.0); MAX_TIME_DEGREE + 1];
                for (node, a) in self.nodes.iter().zip(coeffs) {
                    let (phase, amp) = kernel(&node.point);
                    let e = Complex64::from_polar(amp, phase);
                    for (p, c) in partial.iter_mut().zip(a) {
                        *p += e * *c;
                    }
                }
                let m = self.model.window().moments(k);
                partial.iter().zip(m.iter()).map(|(p, mj)| p * mj).sum()
            }
            None => self
                .nodes
                .iter()
                .map(|node| {
                    let (phase, amp) = kernel(&node.point);
                    Complex64::from_polar(amp * node.weight, phase)
                        * self.model.frequency_profile_unchecked(&node.point, k)
                })
                .sum(),
        }
    }

    /// `u∞(x̂, k)`; negative `k` by conjugation.
    pub fn far_field(&self, direction: &Direction, k: f64) -> Complex64 {
        if k < 0.0 {
            return self.far_field(direction, -k).conj();
        }
        self.integrate(k, |y| (-k * direction.project(y), 1.0))
    }

    /// `u(x, k)` with `Φ_k(x, y) = e^{ik|x−y|} / (4π|x−y|)`; `x` must lie
    /// outside the support.
    pub fn near_field(&self, x: &Point, k: f64) -> Result<Complex64> {
        if self.model.support().contains(x) {
            return Err(Error::Precondition(format!(
                "near-field point {x:?} lies inside the support"
            )));
        }
        if k < 0.0 {
            return Ok(self.near_field(x, -k)?.conj());
        }
        Ok(self.integrate(k, |y| {
            let r = distance(x, y);
            (k * r, 1.0 / (4.0 * PI * r))
        }))
    }

    /// Clean data over the station × frequency lattice. Cells are evaluated
    /// in parallel; each cell sums nodes in a fixed order.
    pub fn synthesize(&self, stations: &Stations, grid: &FrequencyGrid) -> Result<MeasurementSet> {
        let dim = self.model.support().dim();
        match stations {
            Stations::Directions(d) => {
                if d.iter().any(|x| x.dim() != dim) {
                    return Err(Error::Precondition(
                        "direction and support dimensions differ".into(),
                    ));
                }
            }
            Stations::Points(p) => {
                if dim != 3 {
                    return Err(Error::Precondition("near-field data needs a 3D support".into()));
                }
                if let Some(x) = p.iter().find(|x| self.model.support().contains(x)) {
                    return Err(Error::Precondition(format!(
                        "near-field point {x:?} lies inside the support"
                    )));
                }
            }
        }
        let n = grid.count();
        let values = (0..stations.len() * n)
            .into_par_iter()
            .map(|cell| {
                let (m, j) = (cell / n, cell % n);
                let k = grid.node(j + 1);
                match stations {
                    Stations::Directions(d) => Ok(self.far_field(&d[m], k)),
                    Stations::Points(p) => self.near_field(&p[m], k),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        MeasurementSet::new(stations.clone(), *grid, values)
    }
}

/// One-shot far field at a single direction and wavenumber.
pub fn far_field(model: &SourceModel, direction: &Direction, k: f64, density: f64) -> Complex64 {
    ForwardSolver::new(model, density).far_field(direction, k)
}

/// One-shot near field at a single point and wavenumber.
pub fn near_field(model: &SourceModel, x: &Point, k: f64, density: f64) -> Result<Complex64> {
    ForwardSolver::new(model, density).near_field(x, k)
}

pub fn synthesize(
    model: &SourceModel,
    stations: &Stations,
    grid: &FrequencyGrid,
    density: f64,
) -> Result<MeasurementSet> {
    ForwardSolver::new(model, density).synthesize(stations, grid)
}

/// `u_δ = u + δ R ∘ u` with `R` uniform on `[−1, 1]`.
///
/// Variates come from ChaCha20 keyed by `seed`, one stream per station,
/// drawn in frequency order, so the result does not depend on scheduling.
pub fn add_noise(data: &MeasurementSet, delta: f64, seed: u64) -> Result<MeasurementSet> {
    add_noise_with_mode(data, delta, seed, NoiseMode::Real)
}

pub fn add_noise_with_mode(
    data: &MeasurementSet,
    delta: f64,
    seed: u64,
    mode: NoiseMode,
) -> Result<MeasurementSet> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Precondition(format!("noise level must be >= 0, got {delta}")));
    }
    let n = data.grid.count();
    let values: Vec<Complex64> = (0..data.station_count())
        .into_par_iter()
        .flat_map_iter(|m| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            data.station_values(m)
                .iter()
                .map(|&u| {
                    if delta == 0.0 {
                        return u;
                    }
                    match mode {
                        NoiseMode::Real => {
                            let r: f64 = rng.random_range(-1.0..=1.0);
                            u + u * (delta * r)
                        }
                        NoiseMode::Complex => {
                            let r = Complex64::new(
                                rng.random_range(-1.0..=1.0),
                                rng.random_range(-1.0..=1.0),
                            );
                            u + u * r * delta
                        }
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    debug_assert_eq!(values.len(), data.station_count() * n);
    Ok(MeasurementSet {
        values,
        noise_level: delta,
        seed,
        noise_mode: mode,
        ..data.clone()
    })
}
