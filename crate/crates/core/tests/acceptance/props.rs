//! Property suites run as part of the acceptance pass. Inputs are drawn from
//! a seeded generator so every run checks the same cases.

use std::f64::consts::PI;

use dsm_core::forward::{add_noise, FrequencyGrid, ForwardSolver, MeasurementSet, Stations};
use dsm_core::geometry::{distance_range, project, theta_hull, Direction, Domain, Point, SamplingGrid};
use dsm_core::indicator::{aggregate, combine, normalize, oracle_far_field, oracle_near_field, IndicatorField, DEFAULT_ETA_FACTOR};
use dsm_core::poly::Polynomial;
use dsm_core::source::{SourceModel, TimeWindow};
use dsm_core::spectral::{assumption_a, inverse_transform, ProfileOracle};
use dsm_core::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::{check, Check};

const XY: &[&str] = &["x1", "x2", "t"];

fn rng() -> StdRng {
    StdRng::seed_from_u64(20240607)
}

fn failures(list: &[(bool, String)]) -> Check {
    let bad: Vec<&String> = list.iter().filter(|(ok, _)| !ok).map(|(_, m)| m).collect();
    if bad.is_empty() {
        check(true, format!("{} checks", list.len()))
    } else {
        check(false, format!("{} of {} checks failed: {}", bad.len(), list.len(), bad.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; ")))
    }
}

pub fn forward_laws() -> Check {
    let mut r = rng();
    let mut out = Vec::new();
    let w = TimeWindow::new(0.0, 0.5).unwrap();
    let kite = Domain::kite([0.3, -0.2], 1.0).unwrap();
    let temporal = Polynomial::parse("t + 1", XY).unwrap();
    let a1 = Polynomial::parse("x1^2 + 1", XY).unwrap();
    let a2 = Polynomial::parse("2 + x2 + x1*x2", XY).unwrap();
    let m1 = SourceModel::separable(kite.clone(), w, &a1, &temporal).unwrap();
    let m2 = SourceModel::separable(kite.clone(), w, &a2, &temporal).unwrap();
    let m12 = SourceModel::separable(kite.clone(), w, &a1.add(&a2), &temporal).unwrap();
    let (s1, s2, s12) = (ForwardSolver::new(&m1, 60.0), ForwardSolver::new(&m2, 60.0), ForwardSolver::new(&m12, 60.0));
    for _ in 0..20 {
        let d = Direction::from_angle(r.random_range(0.0..2.0 * PI));
        let k = r.random_range(0.1..20.0);
        let (u1, u2, u12) = (s1.far_field(&d, k), s2.far_field(&d, k), s12.far_field(&d, k));
        let rel = (u12 - u1 - u2).norm() / u12.norm();
        out.push((rel < 1e-10, format!("linearity at k={k:.3}: {rel:e}")));
    }

    // Translation: a(x) moves with D.
    let joint = Polynomial::parse("(x1^2 + x2^2 + 10) * t", XY).unwrap();
    let base = SourceModel::polynomial(kite, w, joint).unwrap();
    let s0 = ForwardSolver::new(&base, 100.0);
    for _ in 0..6 {
        let off: Point = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), 0.0];
        let moved = base.translated(&off);
        let sm = ForwardSolver::new(&moved, 100.0);
        for _ in 0..3 {
            let d = Direction::from_angle(r.random_range(0.0..2.0 * PI));
            let k = r.random_range(0.1..5.0);
            let expect = s0.far_field(&d, k) * Complex64::from_polar(1.0, -k * d.project(&off));
            let rel = (sm.far_field(&d, k) - expect).norm() / expect.norm();
            out.push((rel < 1e-3, format!("translation by {off:?} at k={k:.3}: {rel:e}")));
        }
    }

    // Second differences along the frequency grid stay below ten times the
    // largest first difference.
    let fg = FrequencyGrid::new(20.0, 200).unwrap();
    let d = Direction::from_angle(PI / 2.0);
    let u: Vec<Complex64> = fg.nodes().map(|k| s0.far_field(&d, k)).collect();
    let first = u.windows(2).map(|p| (p[1] - p[0]).norm()).fold(0.0, f64::max);
    let second = u.windows(3).map(|p| (p[2] - p[1] * 2.0 + p[0]).norm()).fold(0.0, f64::max);
    out.push((second < 10.0 * first, format!("second difference {second:e} vs first {first:e}")));

    // Near-field magnitude bound.
    let cube = SourceModel::polynomial(
        Domain::cube(&[0.0; 3], 1.0).unwrap(),
        TimeWindow::new(0.0, 0.1).unwrap(),
        Polynomial::parse("(x1^2 + x2^2 + x3^2 + 1) * (t + 1)", &["x1", "x2", "x3", "t"]).unwrap(),
    )
    .unwrap();
    let sc = ForwardSolver::new(&cube, 15.0);
    for _ in 0..5 {
        let dir = Direction::new(&[r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).unwrap();
        let c = dir.components();
        let x = [3.0 * c[0], 3.0 * c[1], 3.0 * c[2]];
        let k = r.random_range(0.1..20.0);
        let potential: f64 = sc.nodes().iter().map(|n| n.weight / (4.0 * PI * dist(&x, &n.point))).sum();
        let fmax = sc
            .nodes()
            .iter()
            .map(|n| cube.frequency_profile(&n.point, k).norm())
            .fold(0.0, f64::max);
        let u = sc.near_field(&x, k).unwrap().norm();
        out.push((u <= fmax * potential * (1.0 + 1e-12), format!("near bound at k={k:.3}: {u} vs {}", fmax * potential)));
    }
    failures(&out)
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn union_law() -> Check {
    let mut r = rng();
    let mut out = Vec::new();
    let w = TimeWindow::new(0.0, 0.3).unwrap();
    let joint = Polynomial::parse("(x1^2 + x2^2 + 10) * t", XY).unwrap();
    for _ in 0..5 {
        let d1 = Domain::kite([r.random_range(-4.0..-2.5), r.random_range(-1.0..1.0)], 1.0).unwrap();
        let d2 = Domain::ellipse([r.random_range(2.0..4.0), r.random_range(-1.0..1.0)], [1.0, 0.6]).unwrap();
        let model = |d: Domain| SourceModel::polynomial(d, w, joint.clone()).unwrap();
        let (m1, m2, mu) = (model(d1.clone()), model(d2.clone()), model(Domain::union(vec![d1, d2]).unwrap()));
        let dir = Direction::from_angle(r.random_range(0.0..2.0 * PI));
        let (o1, o2, ou) = (ProfileOracle::far(&m1, &dir, 60.0), ProfileOracle::far(&m2, &dir, 60.0), ProfileOracle::far(&mu, &dir, 60.0));
        for _ in 0..20 {
            let xi = r.random_range(-6.0..6.0);
            let (a, b, g) = (o1.eval(xi), o2.eval(xi), ou.eval(xi));
            out.push(((g - a - b).abs() <= 1e-12 * g.max(1.0), format!("ξ={xi:.3}: {g} vs {a} + {b}")));
        }
    }
    failures(&out)
}

fn max_probe(model: &SourceModel, dir: &Direction, grid: &SamplingGrid, density: f64) -> f64 {
    let o = ProfileOracle::far(model, dir, density);
    let w = model.window();
    grid.nodes()
        .map(|y| {
            let p = dir.project(&y);
            o.eval(p + w.t_min()).max(o.eval(p + w.t_max()))
        })
        .fold(0.0, f64::max)
}

pub fn dichotomies() -> Check {
    let mut out = Vec::new();
    let one = Polynomial::constant(1.0);
    let grid = SamplingGrid::uniform(2, -3.0, 3.0, 61).unwrap();

    // Single strip, disk and kite.
    for (name, domain) in [("disk", Domain::disk([0.0, 0.0], 1.0).unwrap()), ("kite", Domain::kite([0.0, 0.0], 1.0).unwrap())] {
        let m = SourceModel::separable(domain, TimeWindow::new(0.0, 0.4).unwrap(), &one, &one).unwrap();
        for theta in [0.0, 0.9, 2.2] {
            let dir = Direction::from_angle(theta);
            let f = oracle_far_field(&m, &dir, &grid, 40.0, DEFAULT_ETA_FACTOR);
            let eta = DEFAULT_ETA_FACTOR * max_probe(&m, &dir, &grid, 40.0);
            let pd = project(m.support(), &dir).unwrap();
            let lam = pd.length();
            let (mut outside_ok, mut inside_ok) = (true, true);
            for (i, v) in f.values().iter().enumerate() {
                let p = dir.project(&grid.node(i));
                if !pd.contains_open(p) {
                    outside_ok &= *v <= eta;
                } else if p > pd.lo() + lam / 20.0 && p < pd.hi() - lam / 20.0 {
                    inside_ok &= *v > 10.0 * eta;
                }
            }
            out.push((outside_ok && inside_ok, format!("{name} strip at θ={theta}: outside {outside_ok}, inside {inside_ok}")));
        }
    }

    // Two components separated along the direction.
    let w = TimeWindow::new(0.0, 0.1).unwrap();
    let kite = Domain::kite([-3.0, -3.0], 1.0).unwrap();
    let ellipse = Domain::ellipse([2.0, 2.0], [1.5, 0.5]).unwrap();
    let joint = Polynomial::parse("(x1^2 + x2^2 + 10) * t", XY).unwrap();
    let m = SourceModel::polynomial(Domain::union(vec![kite.clone(), ellipse.clone()]).unwrap(), w, joint.clone()).unwrap();
    let wide = SamplingGrid::uniform(2, -6.0, 6.0, 61).unwrap();
    for theta in [0.0, PI / 4.0] {
        let dir = Direction::from_angle(theta);
        let sat = assumption_a(&kite, &ellipse, &dir, &w);
        let f = oracle_far_field(&m, &dir, &wide, 40.0, DEFAULT_ETA_FACTOR);
        let eta = DEFAULT_ETA_FACTOR * max_probe(&m, &dir, &wide, 40.0);
        let (p1, p2) = (project(&kite, &dir).unwrap(), project(&ellipse, &dir).unwrap());
        let (lo, hi) = if p1.hi() < p2.lo() { (p1.hi(), p2.lo()) } else { (p2.hi(), p1.lo()) };
        let gap_ok = f
            .values()
            .iter()
            .enumerate()
            .all(|(i, v)| !(dir.project(&wide.node(i)) > lo && dir.project(&wide.node(i)) < hi) || *v <= eta);
        out.push((sat && gap_ok, format!("gap at θ={theta:.3}: assumption {sat}, silent {gap_ok}")));
    }

    // Θ-hull with M = 4.
    let k0 = Domain::kite([0.0, 0.0], 1.0).unwrap();
    let mk = SourceModel::polynomial(k0.clone(), w, joint).unwrap();
    let dirs: Vec<Direction> = (0..4).map(|i| Direction::from_angle(i as f64 * PI / 4.0)).collect();
    let fields: Vec<IndicatorField> = dirs.iter().map(|d| oracle_far_field(&mk, d, &grid, 30.0, DEFAULT_ETA_FACTOR)).collect();
    let agg = aggregate(&fields, DEFAULT_ETA_FACTOR).unwrap();
    let eta = dirs.iter().map(|d| DEFAULT_ETA_FACTOR * max_probe(&mk, d, &grid, 30.0)).fold(0.0, f64::max);
    let hull = theta_hull(&k0, &dirs).unwrap();
    let core = k0.dilate(0.8).unwrap();
    let (mut outside_ok, mut inside_ok) = (true, true);
    for (i, v) in agg.values().iter().enumerate() {
        let y = grid.node(i);
        if !hull.contains(&y) {
            outside_ok &= *v <= eta;
        }
        if core.contains(&y) {
            inside_ok &= *v > 10.0 * eta;
        }
    }
    out.push((outside_ok && inside_ok, format!("Θ-hull: outside {outside_ok}, inside {inside_ok}")));

    // Annulus seen from a near-field point.
    let cube = SourceModel::polynomial(
        Domain::cube(&[0.0; 3], 1.0).unwrap(),
        w,
        Polynomial::parse("(x1^2 + x2^2 + x3^2 + 1) * (t + 1)", &["x1", "x2", "x3", "t"]).unwrap(),
    )
    .unwrap();
    let g3 = SamplingGrid::uniform(3, -3.0, 3.0, 13).unwrap();
    for x in [[3.0, 0.0, 0.0], [0.0, -3.0, 1.0]] {
        let f = oracle_near_field(&cube, &x, &g3, 15.0, DEFAULT_ETA_FACTOR).unwrap();
        let o = ProfileOracle::near(&cube, &x, 15.0).unwrap();
        let probe = |y: &Point| {
            let d = dist(&x, y);
            (o.eval(w.t_min() - d), o.eval(w.t_max() - d))
        };
        let eta = DEFAULT_ETA_FACTOR * g3.nodes().map(|y| { let (a, b) = probe(&y); a.max(b) }).fold(0.0, f64::max);
        let range = distance_range(&x, cube.support()).unwrap();
        let outside_ok = f
            .values()
            .iter()
            .enumerate()
            .all(|(i, v)| range.contains_open(dist(&x, &g3.node(i))) || *v <= eta);
        // A point at mid-annulus distance along the line towards the cube centre.
        let c = dist(&x, &[0.0; 3]);
        let s = range.midpoint() / c;
        let mid = [x[0] * (1.0 - s), x[1] * (1.0 - s), x[2] * (1.0 - s)];
        let (a, b) = probe(&mid);
        let inside_ok = combine(a, b, eta) > 10.0 * eta;
        out.push((outside_ok && inside_ok, format!("annulus from {x:?}: outside {outside_ok}, mid {inside_ok}")));
    }
    failures(&out)
}

pub fn symmetry_and_noise() -> Check {
    let mut r = rng();
    let mut out = Vec::new();
    let joint = Polynomial::parse("(x1^2 + x2^2 + 10) * (t^2 + 1)", XY).unwrap();
    let m = SourceModel::polynomial(Domain::kite([0.0, 0.0], 1.0).unwrap(), TimeWindow::new(0.2, 1.7).unwrap(), joint).unwrap();
    for _ in 0..50 {
        let x: Point = [r.random_range(-1.0..0.5), r.random_range(-1.0..1.0), 0.0];
        let k = r.random_range(0.0..30.0);
        let f = m.frequency_profile(&x, k);
        out.push((m.conjugate_extension(&x, -k) == f.conj(), format!("f(x,-k) at k={k}")));
    }
    let s = ForwardSolver::new(&m, 40.0);
    for _ in 0..10 {
        let d = Direction::from_angle(r.random_range(0.0..2.0 * PI));
        let k = r.random_range(0.01..20.0);
        out.push((s.far_field(&d, -k) == s.far_field(&d, k).conj(), format!("u(-k) at k={k}")));
    }
    let grid = FrequencyGrid::new(20.0, 200).unwrap();
    let dirs: Vec<Direction> = (0..4).map(|i| Direction::from_angle(i as f64)).collect();
    let clean = s.synthesize(&Stations::Directions(dirs), &grid).unwrap();
    let zero = add_noise(&clean, 0.0, 5).unwrap();
    out.push((zero.values() == clean.values(), "δ=0 is the identity".to_string()));
    for delta in [0.1, 0.5, 1.0] {
        for seed in [1u64, 2] {
            let noisy = add_noise(&clean, delta, seed).unwrap();
            let bounded = noisy
                .values()
                .iter()
                .zip(clean.values())
                .all(|(n, u)| (n - u).norm() <= delta * u.norm() * (1.0 + 1e-12));
            out.push((bounded, format!("|u_δ−u| ≤ δ|u| at δ={delta}, seed {seed}")));
            let again = add_noise(&clean, delta, seed).unwrap();
            out.push((again.values() == noisy.values(), format!("reproducible at δ={delta}, seed {seed}")));
        }
        let a = add_noise(&clean, delta, 1).unwrap();
        let b = add_noise(&clean, delta, 2).unwrap();
        out.push((a.values() != b.values(), format!("seeds differ at δ={delta}")));
    }
    // Profiles of real data are real by construction; the transform of the
    // Hermitian extension is checked against its conjugate-pair form.
    let h = inverse_transform(clean.station_values(0), &grid, &dsm_core::Interval::new(-3.0, 5.0).unwrap(), 64).unwrap();
    out.push((h.values().iter().all(|v| v.is_finite()), "profile finite".to_string()));
    failures(&out)
}

pub fn round_trips() -> Check {
    let mut out = Vec::new();
    let mut r = rng();
    let one = Polynomial::constant(1.0);
    let m = SourceModel::separable(Domain::kite([0.0, 0.0], 1.0).unwrap(), TimeWindow::new(0.0, 2.0).unwrap(), &one, &one).unwrap();
    let s = ForwardSolver::new(&m, 40.0);
    let grid = FrequencyGrid::new(20.0, 200).unwrap();
    let dirs: Vec<Direction> = (0..3).map(|_| Direction::from_angle(r.random_range(0.0..2.0 * PI))).collect();
    let data = add_noise(&s.synthesize(&Stations::Directions(dirs), &grid).unwrap(), 0.3, 9).unwrap();
    let bytes = |d: &MeasurementSet| {
        let mut v = Vec::new();
        d.write_csv(&mut v).unwrap();
        v
    };
    let first = bytes(&data);
    let back = MeasurementSet::read_csv(first.as_slice()).unwrap();
    out.push((bytes(&back) == first && back == data, "far-field measurement CSV".to_string()));

    let cube = SourceModel::separable(Domain::cube(&[0.0; 3], 1.0).unwrap(), TimeWindow::new(0.0, 0.1).unwrap(), &one, &one).unwrap();
    let near = ForwardSolver::new(&cube, 10.0)
        .synthesize(&Stations::Points(vec![[3.0, 0.0, 0.0], [0.0, 0.0, -3.0]]), &FrequencyGrid::new(20.0, 100).unwrap())
        .unwrap();
    let nb = bytes(&near);
    out.push((bytes(&MeasurementSet::read_csv(nb.as_slice()).unwrap()) == nb, "near-field measurement CSV".to_string()));

    let sg = SamplingGrid::uniform(2, -3.0, 3.0, 31).unwrap();
    let f = normalize(&oracle_far_field(&m, &Direction::from_angle(1.0), &sg, 30.0, DEFAULT_ETA_FACTOR)).unwrap();
    let mut a = Vec::new();
    f.write_csv(&mut a).unwrap();
    let fb = IndicatorField::read_csv(a.as_slice()).unwrap();
    let mut b = Vec::new();
    fb.write_csv(&mut b).unwrap();
    out.push((a == b && fb == f, "field CSV".to_string()));
    let (mut p1, mut p2) = (Vec::new(), Vec::new());
    f.write_pgm(&mut p1).unwrap();
    fb.write_pgm(&mut p2).unwrap();
    out.push((p1 == p2, "PGM from re-read field".to_string()));

    let g3 = SamplingGrid::uniform(3, -3.0, 3.0, 7).unwrap();
    let v = oracle_near_field(&cube, &[3.0, 0.0, 0.0], &g3, 10.0, DEFAULT_ETA_FACTOR).unwrap();
    let mut c = Vec::new();
    v.write_csv(&mut c).unwrap();
    let vb = IndicatorField::read_csv(c.as_slice()).unwrap();
    let (mut v1, mut v2) = (Vec::new(), Vec::new());
    v.write_vtk(&mut v1).unwrap();
    vb.write_vtk(&mut v2).unwrap();
    out.push((v1 == v2, "volume file from re-read field".to_string()));
    failures(&out)
}
