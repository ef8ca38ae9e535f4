use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use dsm_core::forward::{add_noise_with_mode, ForwardSolver};
use dsm_core::geometry::{annulus_intersection, project, strip, theta_hull, Region};
use dsm_core::indicator::{aggregate, normalize, oracle_far_field, oracle_near_field, reconstruct, threshold_mask};
use dsm_core::metrics::{classification_scores, connected_components, mask_projection, oracle_l2, recovered_interval};
use dsm_core::spectral::{
    assumption_a, default_xi_count, far_supporting_interval, inverse_transform_with, near_supporting_interval,
    supporting_interval, DEFAULT_XI_OVERSAMPLING,
};
use dsm_core::{IndicatorField, Interval, Mask, MeasurementSet, RecoveryReport, Stations};

use crate::config::{ExperimentConfig, RESOLVED_CONFIG};
use crate::error::{data, numeric, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Pgm,
    Vtk,
}

/// Wall-clock timings, kept out of every output file.
#[derive(Debug, Default)]
pub struct Timings(pub Vec<(String, f64)>);

impl Timings {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push((stage.to_string(), start.elapsed().as_secs_f64() * 1e3));
        out
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

pub fn write_resolved(config: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    let path = out.join(RESOLVED_CONFIG);
    let mut w = create(&path)?;
    w.write_all(config.to_json().as_bytes())?;
    w.flush()?;
    Ok(path)
}

fn check_finite(values: &[f64], what: &str) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("non-finite value in {what}")))
    }
}

/// Synthesizes noisy data and writes the measurement file.
pub fn simulate(config: &ExperimentConfig, out: &Path, timings: &mut Timings) -> Result<PathBuf, CliError> {
    let model = config.build_source()?;
    let stations = config.stations()?;
    let grid = config.frequency_grid()?;
    let clean = timings.time("forward", || {
        ForwardSolver::new(&model, config.density()).synthesize(&stations, &grid)
    });
    let clean = clean.map_err(numeric)?;
    let data = add_noise_with_mode(&clean, config.noise.delta, config.noise.seed, config.noise_mode()).map_err(numeric)?;
    if data.values().iter().any(|u| !(u.re.is_finite() && u.im.is_finite())) {
        return Err(CliError::Numeric("non-finite measurement value".into()));
    }
    write_resolved(config, out)?;
    let path = out.join(&config.output.measurement);
    let mut w = create(&path)?;
    data.write_csv(&mut w).map_err(numeric)?;
    w.flush()?;
    Ok(path)
}

pub fn read_measurements(path: &Path) -> Result<MeasurementSet, CliError> {
    MeasurementSet::read_csv(open(path)?).map_err(|e| match e {
        dsm_core::Error::Parse { line, msg } => {
            CliError::Mismatch(format!("{}:{line}: {msg}", path.display()))
        }
        other => data(other),
    })
}

pub fn read_field(path: &Path) -> Result<IndicatorField, CliError> {
    IndicatorField::read_csv(open(path)?).map_err(|e| match e {
        dsm_core::Error::Parse { line, msg } => {
            CliError::Mismatch(format!("{}:{line}: {msg}", path.display()))
        }
        other => data(other),
    })
}

/// Stations and frequency grid of the data must be the configured ones.
fn check_matches(config: &ExperimentConfig, data: &MeasurementSet) -> Result<(), CliError> {
    let stations = config.stations()?;
    let grid = config.frequency_grid()?;
    if data.grid() != &grid {
        return Err(CliError::Mismatch(format!(
            "data grid K={} N={} differs from configured K={} N={}",
            data.grid().k_max(),
            data.grid().count(),
            grid.k_max(),
            grid.count()
        )));
    }
    if data.kind() != stations.kind() || data.station_count() != stations.len() {
        return Err(CliError::Mismatch(format!(
            "data has {} {} stations, config has {} {}",
            data.station_count(),
            data.kind().name(),
            stations.len(),
            stations.kind().name()
        )));
    }
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()));
    let same = match (data.stations(), &stations) {
        (Stations::Directions(a), Stations::Directions(b)) => {
            a.iter().zip(b).position(|(x, y)| !close(x.as_slice(), y.as_slice()))
        }
        (Stations::Points(a), Stations::Points(b)) => a.iter().zip(b).position(|(x, y)| !close(x, y)),
        _ => Some(0),
    };
    match same {
        None => Ok(()),
        Some(m) => Err(CliError::Mismatch(format!("station {m} differs from the configured one"))),
    }
}

fn field_path(out: &Path, name: &str, station: Option<usize>) -> PathBuf {
    match station {
        Some(m) => out.join(format!("{name}_{m}.csv")),
        None => out.join(format!("{name}.csv")),
    }
}

fn write_field(field: &IndicatorField, path: &Path, images: bool) -> Result<Vec<PathBuf>, CliError> {
    check_finite(field.values(), &path.display().to_string())?;
    let mut w = create(path)?;
    field.write_csv(&mut w).map_err(numeric)?;
    w.flush()?;
    let mut written = vec![path.to_path_buf()];
    if images {
        let format = if field.grid().dim() == 2 { RenderFormat::Pgm } else { RenderFormat::Vtk };
        written.push(render_field(field, path, format, path.parent().unwrap_or(Path::new(".")))?);
    }
    Ok(written)
}

/// Runs the indicator pipeline and writes the configured fields.
pub fn reconstruct_cmd(
    config: &ExperimentConfig,
    data_path: &Path,
    out: &Path,
    timings: &mut Timings,
) -> Result<Vec<PathBuf>, CliError> {
    let data = read_measurements(data_path)?;
    check_matches(config, &data)?;
    let grid = config.sampling_grid()?;
    let window = config.window()?;
    let rec = timings.time("reconstruct", || reconstruct(&data, &grid, &window, &config.pipeline_options()));
    let rec = rec.map_err(numeric)?;
    write_resolved(config, out)?;
    let mut written = Vec::new();
    let images = config.output.images;
    for kind in &config.output.fields {
        use crate::config::FieldKind::*;
        match kind {
            I1 | I2 | Combined => {
                for (m, s) in rec.stations.iter().enumerate() {
                    let f = match kind {
                        I1 => &s.i1,
                        I2 => &s.i2,
                        _ => &s.combined,
                    };
                    written.extend(write_field(f, &field_path(out, kind.name(), Some(m)), images)?);
                }
            }
            Aggregated => written.extend(write_field(&rec.aggregated, &field_path(out, "aggregated", None), images)?),
            Normalized => written.extend(write_field(&rec.normalized, &field_path(out, "normalized", None), images)?),
        }
    }
    Ok(written)
}

fn fmt_interval(iv: &Interval) -> String {
    format!("{},{}", iv.lo(), iv.hi())
}

fn undefined<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or("undefined".to_string(), f)
}

/// Supporting intervals, strip and component recovery, classification
/// against the known geometry and, optionally, the exact-profile indicator.
pub fn analyze(
    config: &ExperimentConfig,
    data_path: &Path,
    field_path: &Path,
    out: &Path,
    timings: &mut Timings,
) -> Result<PathBuf, CliError> {
    let data = read_measurements(data_path)?;
    check_matches(config, &data)?;
    let field = read_field(field_path)?;
    let grid = config.sampling_grid()?;
    if field.grid() != &grid {
        return Err(CliError::Mismatch(format!("{} is not on the configured grid", field_path.display())));
    }
    check_finite(field.values(), &field_path.display().to_string())?;
    let model = config.build_source()?;
    let domain = model.support();
    let window = *model.window();
    let eps = config.pipeline.threshold;
    let mask = threshold_mask(&field, eps);
    let zero = config.pipeline_options().zero_frequency;

    let mut lines: Vec<(String, String)> = Vec::new();
    let mut report = RecoveryReport::default();
    let truth: Region;

    // Supporting intervals of each station's inverse transform.
    let fgrid = data.grid();
    let profile_lines = timings.time("spectral", || -> Result<Vec<(String, String)>, CliError> {
        let mut l = Vec::new();
        for m in 0..data.station_count() {
            let exact = match data.stations() {
                Stations::Directions(d) => far_supporting_interval(domain, &d[m], &window)
                    .ok_or_else(|| CliError::Numeric("empty projection".into()))?,
                Stations::Points(p) => near_supporting_interval(&p[m], domain, &window).map_err(numeric)?,
            };
            let pad = 0.5 * exact.length().max(1.0);
            let range = Interval::new(exact.lo() - pad, exact.hi() + pad).map_err(numeric)?;
            let n = default_xi_count(&range, fgrid, DEFAULT_XI_OVERSAMPLING);
            let profile = inverse_transform_with(data.station_values(m), fgrid, &range, n, zero).map_err(numeric)?;
            check_finite(profile.values(), "profile")?;
            let est = supporting_interval(&profile, config.pipeline.spectral_threshold);
            l.push((format!("station.{m}.supporting_interval"), undefined(est, |i| fmt_interval(&i))));
            l.push((format!("station.{m}.true_supporting_interval"), fmt_interval(&exact)));
            l.push((
                format!("station.{m}.supporting_interval_error"),
                undefined(est, |i| i.endpoint_error(&exact).to_string()),
            ));
        }
        Ok(l)
    })?;
    lines.extend(profile_lines);

    match data.stations() {
        Stations::Directions(dirs) => {
            let comps = domain.components();
            if dirs.len() == 1 {
                let d = dirs[0];
                let exact = project(domain, &d).ok_or_else(|| CliError::Numeric("empty projection".into()))?;
                let got = recovered_interval(&field, &d, eps);
                report.strip_boundary_error = got.map(|g| g.endpoint_error(&exact));
                lines.push(("strip.recovered_interval".into(), undefined(got, |i| fmt_interval(&i))));
                lines.push(("strip.true_interval".into(), fmt_interval(&exact)));
                truth = strip(d, exact);
            } else {
                truth = theta_hull(domain, dirs).map_err(numeric)?;
            }
            if comps.len() > 1 {
                for (m, d) in dirs.iter().enumerate() {
                    for i in 0..comps.len() {
                        for j in i + 1..comps.len() {
                            lines.push((
                                format!("station.{m}.assumption_a.{i}_{j}"),
                                assumption_a(comps[i], comps[j], d, &window).to_string(),
                            ));
                        }
                    }
                }
                for (i, c) in comps.iter().enumerate() {
                    for (m, d) in dirs.iter().enumerate() {
                        let p = project(c, d).ok_or_else(|| CliError::Numeric("empty projection".into()))?;
                        lines.push((format!("station.{m}.component.{i}.true_interval"), fmt_interval(&p)));
                    }
                }
                if dirs.len() == 1 {
                    let found = connected_components(&mask);
                    lines.push(("mask.components".into(), found.len().to_string()));
                    for (i, idx) in found.iter().enumerate() {
                        let sub = Mask::new(
                            grid.clone(),
                            (0..grid.len()).map(|n| idx.binary_search(&n).is_ok()).collect(),
                        )
                        .map_err(numeric)?;
                        let p = mask_projection(&sub, &dirs[0]);
                        lines.push((format!("mask.component.{i}.interval"), undefined(p, |i| fmt_interval(&i))));
                    }
                }
            }
        }
        Stations::Points(pts) => {
            truth = annulus_intersection(domain, pts).map_err(numeric)?;
            for (m, p) in pts.iter().enumerate() {
                let r = dsm_core::geometry::distance_range(p, domain).map_err(numeric)?;
                lines.push((format!("station.{m}.true_annulus"), fmt_interval(&r)));
            }
        }
    }

    let truth_mask = Mask::from_predicate(&grid, |y| truth.contains(y));
    let scores = classification_scores(&mask, &truth_mask).map_err(numeric)?;
    report.classification = Some(scores);
    lines.push(("mask.selected".into(), mask.count().to_string()));
    lines.push(("truth.selected".into(), truth_mask.count().to_string()));

    if config.analysis.oracle {
        let oracle = timings.time("oracle", || oracle_pipeline(config, &data, &grid))?;
        report.oracle_l2 = Some(oracle_l2(&field, &oracle, &truth_mask).map_err(numeric)?);
    }

    let mut text = report.to_key_values(false);
    for (k, v) in lines {
        text.push_str(&format!("{k}={v}\n"));
    }
    write_resolved(config, out)?;
    let path = out.join(&config.output.report);
    let mut w = create(&path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(path)
}

/// The display pipeline applied to indicators built from the exact profile.
fn oracle_pipeline(
    config: &ExperimentConfig,
    data: &MeasurementSet,
    grid: &dsm_core::SamplingGrid,
) -> Result<IndicatorField, CliError> {
    let model = config.build_source()?;
    let eta = config.pipeline.eta_factor;
    let density = config.density();
    let per_station: Vec<IndicatorField> = match data.stations() {
        Stations::Directions(d) => d.iter().map(|d| oracle_far_field(&model, d, grid, density, eta)).collect(),
        Stations::Points(p) => p
            .iter()
            .map(|x| oracle_near_field(&model, x, grid, density, eta))
            .collect::<dsm_core::Result<_>>()
            .map_err(numeric)?,
    };
    let inputs = if config.pipeline.normalize_per_station {
        per_station.iter().map(normalize).collect::<dsm_core::Result<Vec<_>>>().map_err(numeric)?
    } else {
        per_station
    };
    normalize(&aggregate(&inputs, eta).map_err(numeric)?).map_err(numeric)
}

fn render_field(field: &IndicatorField, source: &Path, format: RenderFormat, out: &Path) -> Result<PathBuf, CliError> {
    let dim = field.grid().dim();
    let ext = match (format, dim) {
        (RenderFormat::Pgm, 2) => "pgm",
        (RenderFormat::Vtk, 3) => "vtk",
        (f, d) => {
            return Err(CliError::Mismatch(format!(
                "{} export needs a {}D field, got {d}D",
                if f == RenderFormat::Pgm { "PGM" } else { "volume" },
                if f == RenderFormat::Pgm { 2 } else { 3 }
            )))
        }
    };
    let stem = source.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    let path = out.join(format!("{stem}.{ext}"));
    let mut w = create(&path)?;
    match format {
        RenderFormat::Pgm => field.write_pgm(&mut w),
        RenderFormat::Vtk => field.write_vtk(&mut w),
    }
    .map_err(numeric)?;
    w.flush()?;
    Ok(path)
}

/// Exports a field file as an image (2D) or volume (3D). Without a format
/// the field's dimension decides.
pub fn render(field_path: &Path, format: Option<RenderFormat>, out: &Path) -> Result<PathBuf, CliError> {
    let field = read_field(field_path)?;
    check_finite(field.values(), &field_path.display().to_string())?;
    let format = format.unwrap_or(if field.grid().dim() == 2 { RenderFormat::Pgm } else { RenderFormat::Vtk });
    render_field(&field, field_path, format, out)
}
