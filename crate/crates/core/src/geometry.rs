//! Support domains, directions, sampling grids and the region predicates
//! (strips, annuli, Θ-convex hulls) that the reconstructions are scored
//! against.
//!
//! Points are stored as `[f64; 3]` in both two and three dimensions; 2D
//! objects leave the third coordinate at zero and ignore it.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = [f64; 3];

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(&d, &d).sqrt()
}

/// Closed real interval `[lo, hi]` with `lo <= hi`.
///
/// Emptiness is expressed as `Option<Interval>::None` by every operation
/// that can produce an empty result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Precondition(format!(
                "interval requires lo <= hi, got ({lo}, {hi})"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Membership in the open interval `(lo, hi)`.
    pub fn contains_open(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn shift(&self, by: f64) -> Interval {
        Interval {
            lo: self.lo + by,
            hi: self.hi + by,
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Largest endpoint deviation from `other`.
    pub fn endpoint_error(&self, other: &Interval) -> f64 {
        (self.lo - other.lo).abs().max((self.hi - other.hi).abs())
    }
}

/// Unit vector in R² or R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    components: Point,
    dim: usize,
}

impl Direction {
    /// `(cos θ, sin θ)` in the plane.
    pub fn from_angle(theta: f64) -> Self {
        Direction {
            components: [theta.cos(), theta.sin(), 0.0],
            dim: 2,
        }
    }

    /// Normalizes `v`; the length of the slice fixes the dimension.
    pub fn new(v: &[f64]) -> Result<Self> {
        let dim = v.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::Precondition(format!(
                "direction needs 2 or 3 components, got {dim}"
            )));
        }
        let mut c = [0.0; 3];
        c[..dim].copy_from_slice(v);
        let n = dot(&c, &c).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Precondition("direction must be nonzero".into()));
        }
        for x in &mut c {
            *x /= n;
        }
        Ok(Direction { components: c, dim })
    }

    /// Accepts `v` unchanged when it is already unit length within 1e-12.
    pub fn from_unit(v: &[f64]) -> Result<Self> {
        let d = Direction::new(v)?;
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if (n2.sqrt() - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("{v:?} is not a unit vector")));
        }
        let mut c = [0.0; 3];
        c[..v.len()].copy_from_slice(v);
        Ok(Direction {
            components: c,
            dim: d.dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &Point {
        &self.components
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.components[..self.dim]
    }

    /// `x̂ · y`
    pub fn project(&self, y: &Point) -> f64 {
        dot(&self.components, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Disk in 2D, ball in 3D.
    Ball { center: Point, radius: f64 },
    Ellipse { center: Point, semi_axes: [f64; 2] },
    /// `center + scale · (cos s + 0.65 cos 2s − 0.65, 1.5 sin s)`.
    Kite { center: Point, scale: f64 },
    /// Square in 2D, cube in 3D: `|y_i − c_i| < half_width`.
    Cube { center: Point, half_width: f64 },
    Union(Vec<Domain>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    shape: Shape,
    dim: usize,
}

fn embed(c: &[f64]) -> Point {
    let mut p = [0.0; 3];
    p[..c.len()].copy_from_slice(c);
    p
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDomain(format!("{name} must be positive, got {v}")))
    }
}

impl Domain {
    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        Ok(Domain {
            shape: Shape::Ball {
                center: embed(&center),
                radius,
            },
            dim: 2,
        })
    }

    pub fn ball(center: [f64; 3], radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        Ok(Domain {
            shape: Shape::Ball { center, radius },
            dim: 3,
        })
    }

    pub fn ellipse(center: [f64; 2], semi_axes: [f64; 2]) -> Result<Self> {
        positive("semi-axis", semi_axes[0])?;
        positive("semi-axis", semi_axes[1])?;
        Ok(Domain {
            shape: Shape::Ellipse {
                center: embed(&center),
                semi_axes,
            },
            dim: 2,
        })
    }

    pub fn kite(center: [f64; 2], scale: f64) -> Result<Self> {
        positive("scale", scale)?;
        Ok(Domain {
            shape: Shape::Kite {
                center: embed(&center),
                scale,
            },
            dim: 2,
        })
    }

    /// Axis-aligned square (`center.len() == 2`) or cube (`== 3`).
    pub fn cube(center: &[f64], half_width: f64) -> Result<Self> {
        positive("half-width", half_width)?;
        let dim = center.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidDomain(format!(
                "cube center needs 2 or 3 coordinates, got {dim}"
            )));
        }
        Ok(Domain {
            shape: Shape::Cube {
                center: embed(center),
                half_width,
            },
            dim,
        })
    }

    /// Disjoint union. Members must share a dimension and must not overlap;
    /// overlap is detected by a bounding-box test followed by a dense
    /// membership sample of each member against the others.
    pub fn union(members: Vec<Domain>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidDomain("union needs at least one member".into()));
        };
        let dim = first.dim;
        if members.iter().any(|m| m.dim != dim) {
            return Err(Error::InvalidDomain("union members differ in dimension".into()));
        }
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if boxes_overlap(&a.bounding_box(), &b.bounding_box()) {
                    let density = if dim == 2 { 60.0 } else { 20.0 };
                    let hit = quadrature_nodes(a, density)
                        .iter()
                        .any(|n| b.contains(&n.point))
                        || quadrature_nodes(b, density)
                            .iter()
                            .any(|n| a.contains(&n.point));
                    if hit {
                        return Err(Error::InvalidDomain("union members overlap".into()));
                    }
                }
            }
        }
        Ok(Domain {
            shape: Shape::Union(members),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Union members, or the domain itself when it is not a union.
    pub fn components(&self) -> Vec<&Domain> {
        match &self.shape {
            Shape::Union(m) => m.iter().flat_map(|d| d.components()).collect(),
            _ => vec![self],
        }
    }

    /// Lebesgue measure (area in 2D, volume in 3D).
    pub fn measure(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => {
                if self.dim == 2 {
                    PI * radius * radius
                } else {
                    4.0 / 3.0 * PI * radius.powi(3)
                }
            }
            Shape::Ellipse { semi_axes, .. } => PI * semi_axes[0] * semi_axes[1],
            Shape::Kite { scale, .. } => 1.5 * PI * scale * scale,
            Shape::Cube { half_width, .. } => (2.0 * half_width).powi(self.dim as i32),
            Shape::Union(m) => m.iter().map(Domain::measure).sum(),
        }
    }

    /// Membership in the open domain.
    pub fn contains(&self, y: &Point) -> bool {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let d = [y[0] - center[0], y[1] - center[1], y[2] - center[2]];
                let r2 = if self.dim == 2 {
                    d[0] * d[0] + d[1] * d[1]
                } else {
                    dot(&d, &d)
                };
                r2 < radius * radius
            }
            Shape::Ellipse { center, semi_axes } => {
                let u = (y[0] - center[0]) / semi_axes[0];
                let v = (y[1] - center[1]) / semi_axes[1];
                u * u + v * v < 1.0
            }
            Shape::Kite { center, scale } => {
                let u = (y[0] - center[0]) / scale;
                let v = (y[1] - center[1]) / scale / 1.5;
                if !(v.abs() < 1.0) {
                    return false;
                }
                // Each horizontal line crosses the curve once on the right
                // branch (cos s = c) and once on the left (cos s = -c).
                let c = (1.0 - v * v).sqrt();
                let base = 1.3 * c * c - 1.3;
                base - c < u && u < base + c
            }
            Shape::Cube { center, half_width } => {
                (0..self.dim).all(|i| (y[i] - center[i]).abs() < *half_width)
            }
            Shape::Union(m) => m.iter().any(|d| d.contains(y)),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`; unused axes are `[0, 0]`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let mut lo = *center;
                let mut hi = *center;
                for i in 0..self.dim {
                    lo[i] -= radius;
                    hi[i] += radius;
                }
                (lo, hi)
            }
            Shape::Ellipse { center, semi_axes } => (
                [center[0] - semi_axes[0], center[1] - semi_axes[1], 0.0],
                [center[0] + semi_axes[0], center[1] + semi_axes[1], 0.0],
            ),
            Shape::Kite { center, scale } => {
                // Horizontal extremes sit at cos s = 1 and cos s = -1/2.6.
                (
                    [
                        center[0] + scale * kite_xmin(),
                        center[1] - 1.5 * scale,
                        0.0,
                    ],
                    [center[0] + scale, center[1] + 1.5 * scale, 0.0],
                )
            }
            Shape::Cube { center, half_width } => {
                let mut lo = *center;
                let mut hi = *center;
                for i in 0..self.dim {
                    lo[i] -= half_width;
                    hi[i] += half_width;
                }
                (lo, hi)
            }
            Shape::Union(m) => {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for d in m {
                    let (a, b) = d.bounding_box();
                    for i in 0..3 {
                        lo[i] = lo[i].min(a[i]);
                        hi[i] = hi[i].max(b[i]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Boundary curve for the planar shapes that need a parameter sweep.
    fn boundary_point(&self, s: f64) -> Option<Point> {
        match &self.shape {
            Shape::Kite { center, scale } => Some([
                center[0] + scale * (s.cos() + 0.65 * (2.0 * s).cos() - 0.65),
                center[1] + scale * 1.5 * s.sin(),
                0.0,
            ]),
            Shape::Ellipse { center, semi_axes } => Some([
                center[0] + semi_axes[0] * s.cos(),
                center[1] + semi_axes[1] * s.sin(),
                0.0,
            ]),
            _ => None,
        }
    }

    /// Scales the domain by `factor` about the origin.
    pub fn dilate(&self, factor: f64) -> Result<Domain> {
        positive("dilation factor", factor)?;
        let sc = |c: &Point| [c[0] * factor, c[1] * factor, c[2] * factor];
        let shape = match &self.shape {
            Shape::Ball { center, radius } => Shape::Ball {
                center: sc(center),
                radius: radius * factor,
            },
            Shape::Ellipse { center, semi_axes } => Shape::Ellipse {
                center: sc(center),
                semi_axes: [semi_axes[0] * factor, semi_axes[1] * factor],
            },
            Shape::Kite { center, scale } => Shape::Kite {
                center: sc(center),
                scale: scale * factor,
            },
            Shape::Cube { center, half_width } => Shape::Cube {
                center: sc(center),
                half_width: half_width * factor,
            },
            Shape::Union(m) => Shape::Union(
                m.iter()
                    .map(|d| d.dilate(factor))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(Domain {
            shape,
            dim: self.dim,
        })
    }

    /// Translates the domain by `offset`.
    pub fn translate(&self, offset: &Point) -> Domain {
        let tr = |c: &Point| [c[0] + offset[0], c[1] + offset[1], c[2] + offset[2]];
        let shape = match &self.shape {
            Shape::Ball { center, radius } => Shape::Ball {
                center: tr(center),
                radius: *radius,
            },
            Shape::Ellipse { center, semi_axes } => Shape::Ellipse {
                center: tr(center),
                semi_axes: *semi_axes,
            },
            Shape::Kite { center, scale } => Shape::Kite {
                center: tr(center),
                scale: *scale,
            },
            Shape::Cube { center, half_width } => Shape::Cube {
                center: tr(center),
                half_width: *half_width,
            },
            Shape::Union(m) => Shape::Union(m.iter().map(|d| d.translate(offset)).collect()),
        };
        let mut d = Domain {
            shape,
            dim: self.dim,
        };
        if d.dim == 2 {
            d.zero_third_axis();
        }
        d
    }

    fn zero_third_axis(&mut self) {
        match &mut self.shape {
            Shape::Ball { center, .. }
            | Shape::Ellipse { center, .. }
            | Shape::Kite { center, .. }
            | Shape::Cube { center, .. } => center[2] = 0.0,
            Shape::Union(m) => m.iter_mut().for_each(Domain::zero_third_axis),
        }
    }
}

fn kite_xmin() -> f64 {
    let c = -1.0 / 2.6;
    c + 1.3 * c * c - 1.3
}

fn boxes_overlap(a: &(Point, Point), b: &(Point, Point)) -> bool {
    (0..3).all(|i| a.0[i] <= b.1[i] && b.0[i] <= a.1[i])
}

/// Min and max of `f` over `s ∈ [0, 2π)`: nested sweeps doubling the sample
/// count until both extremes move by less than 1e-6, then golden-section
/// polishing around the best samples.
fn sweep_extrema(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let scan = |n: usize| {
        let h = 2.0 * PI / n as f64;
        let mut best_min = (f64::INFINITY, 0.0);
        let mut best_max = (f64::NEG_INFINITY, 0.0);
        for i in 0..n {
            let s = i as f64 * h;
            let v = f(s);
            if v < best_min.0 {
                best_min = (v, s);
            }
            if v > best_max.0 {
                best_max = (v, s);
            }
        }
        (best_min, best_max, h)
    };
    let mut n = 256;
    let mut prev = scan(n);
    loop {
        n *= 2;
        let cur = scan(n);
        let moved = (cur.0 .0 - prev.0 .0).abs().max((cur.1 .0 - prev.1 .0).abs());
        prev = cur;
        if moved < 1e-6 || n >= 1 << 20 {
            break;
        }
    }
    let ((vmin, smin), (vmax, smax), h) = prev;
    let lo = golden(|s| f(s), smin - h, smin + h).min(vmin);
    let hi = (-golden(|s| -f(s), smax - h, smax + h)).max(vmax);
    (lo, hi)
}

/// Minimum of a unimodal function on `[a, b]`.
fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// `x̂ · D = (inf x̂·y, sup x̂·y)` over `y ∈ D`.
pub fn project(domain: &Domain, direction: &Direction) -> Option<Interval> {
    let d = direction.components();
    match domain.shape() {
        Shape::Ball { center, radius } => {
            let c = dot(center, d);
            Some(Interval {
                lo: c - radius,
                hi: c + radius,
            })
        }
        Shape::Ellipse { center, semi_axes } => {
            let c = center[0] * d[0] + center[1] * d[1];
            let w = (semi_axes[0] * d[0]).hypot(semi_axes[1] * d[1]);
            Some(Interval { lo: c - w, hi: c + w })
        }
        Shape::Cube { center, half_width } => {
            let c = dot(center, d);
            let w: f64 = half_width * (0..domain.dim()).map(|i| d[i].abs()).sum::<f64>();
            Some(Interval { lo: c - w, hi: c + w })
        }
        Shape::Kite { .. } => {
            let (lo, hi) = sweep_extrema(|s| {
                let p = domain.boundary_point(s).expect("kite boundary");
                dot(&p, d)
            });
            Some(Interval { lo, hi })
        }
        Shape::Union(members) => members
            .iter()
            .filter_map(|m| project(m, direction))
            .reduce(|a, b| a.hull(&b)),
    }
}

/// `(inf |x₀ − z|, sup |x₀ − z|)` over `z ∈ D` for `x₀` outside the closure
/// of `D`.
pub fn distance_range(point: &Point, domain: &Domain) -> Result<Interval> {
    let range = match domain.shape() {
        Shape::Ball { center, radius } => {
            let r = distance(point, center);
            (r - radius, r + radius)
        }
        Shape::Cube { center, half_width } => {
            let mut near = 0.0;
            let mut far = 0.0;
            for i in 0..3 {
                let off = (point[i] - center[i]).abs();
                if i < domain.dim() {
                    let gap = (off - half_width).max(0.0);
                    near += gap * gap;
                    far += (off + half_width) * (off + half_width);
                } else {
                    near += off * off;
                    far += off * off;
                }
            }
            (near.sqrt(), far.sqrt())
        }
        Shape::Kite { .. } | Shape::Ellipse { .. } => {
            if domain.contains(point) {
                return Err(Error::Precondition("observation point lies inside the support".into()));
            }
            sweep_extrema(|s| {
                let p = domain.boundary_point(s).expect("planar boundary");
                distance(&p, point)
            })
        }
        Shape::Union(members) => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for m in members {
                let r = distance_range(point, m)?;
                lo = lo.min(r.lo);
                hi = hi.max(r.hi);
            }
            (lo, hi)
        }
    };
    if !(range.0 > 0.0) {
        return Err(Error::Precondition(
            "observation point lies inside the closure of the support".into(),
        ));
    }
    Ok(Interval {
        lo: range.0,
        hi: range.1,
    })
}

/// A cubature node with its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNode {
    pub point: Point,
    pub weight: f64,
}

/// Midpoint cell rule: a lattice of `ceil(extent · density)` cells per axis
/// covering the bounding box; cells whose centre lies in the domain are kept
/// with weight equal to the cell volume. Unions concatenate their members'
/// nodes.
pub fn quadrature_nodes(domain: &Domain, density: f64) -> Vec<QuadNode> {
    assert!(density > 0.0, "quadrature density must be positive");
    if let Shape::Union(members) = domain.shape() {
        return members
            .iter()
            .flat_map(|m| quadrature_nodes(m, density))
            .collect();
    }
    let dim = domain.dim();
    let (lo, hi) = domain.bounding_box();
    let mut counts = [1usize; 3];
    let mut steps = [0.0; 3];
    for i in 0..dim {
        let extent = hi[i] - lo[i];
        counts[i] = ((extent * density).ceil() as usize).max(1);
        steps[i] = extent / counts[i] as f64;
    }
    let weight: f64 = steps[..dim].iter().product();
    let mut nodes = Vec::new();
    for k in 0..counts[2] {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let mut p = [
                    lo[0] + (i as f64 + 0.5) * steps[0],
                    lo[1] + (j as f64 + 0.5) * steps[1],
                    0.0,
                ];
                if dim == 3 {
                    p[2] = lo[2] + (k as f64 + 0.5) * steps[2];
                }
                if domain.contains(&p) {
                    nodes.push(QuadNode { point: p, weight });
                }
            }
        }
    }
    nodes
}

/// Region predicates used as ground truth.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// `{y : lo < x̂·y < hi}`
    Strip { direction: Direction, interval: Interval },
    /// `{y : lo < |x − y| < hi}`
    Annulus { center: Point, interval: Interval },
    Inside(Domain),
    Intersection(Vec<Region>),
}

impl Region {
    pub fn contains(&self, y: &Point) -> bool {
        match self {
            Region::Strip { direction, interval } => interval.contains_open(direction.project(y)),
            Region::Annulus { center, interval } => interval.contains_open(distance(center, y)),
            Region::Inside(d) => d.contains(y),
            Region::Intersection(rs) => rs.iter().all(|r| r.contains(y)),
        }
    }
}

pub fn strip(direction: Direction, interval: Interval) -> Region {
    Region::Strip { direction, interval }
}

pub fn annulus(point: Point, interval: Interval) -> Result<Region> {
    if interval.lo < 0.0 {
        return Err(Error::Precondition("annulus radii must be nonnegative".into()));
    }
    Ok(Region::Annulus {
        center: point,
        interval,
    })
}

/// The Θ-convex hull: intersection of the strips `S^(x̂_m)` containing `D`.
pub fn theta_hull(domain: &Domain, directions: &[Direction]) -> Result<Region> {
    if directions.is_empty() {
        return Err(Error::Precondition("Θ-hull needs at least one direction".into()));
    }
    let strips = directions
        .iter()
        .map(|d| {
            project(domain, d)
                .map(|iv| strip(*d, iv))
                .ok_or_else(|| Error::InvalidDomain("empty domain".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Region::Intersection(strips))
}

/// Intersection of the annuli `A^(x_m)` spanned by `D` around each point.
pub fn annulus_intersection(domain: &Domain, points: &[Point]) -> Result<Region> {
    if points.is_empty() {
        return Err(Error::Precondition("need at least one observation point".into()));
    }
    let rs = points
        .iter()
        .map(|p| annulus(*p, distance_range(p, domain)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Region::Intersection(rs))
}

/// Rectangular lattice over the search box Ω, faces included.
///
/// Nodes are numbered with the first axis fastest:
/// `index = i + n0 * (j + n1 * k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    dim: usize,
    lo: Point,
    hi: Point,
    resolution: [usize; 3],
}

impl SamplingGrid {
    pub fn new(lo: &[f64], hi: &[f64], resolution: &[usize]) -> Result<Self> {
        let dim = lo.len();
        if !(dim == 2 || dim == 3) || hi.len() != dim || resolution.len() != dim {
            return Err(Error::Precondition(
                "grid bounds and resolution must all have 2 or 3 entries".into(),
            ));
        }
        for i in 0..dim {
            if !(lo[i] < hi[i]) {
                return Err(Error::Precondition(format!("grid axis {i} has lo >= hi")));
            }
            if resolution[i] < 2 {
                return Err(Error::Precondition(format!(
                    "grid axis {i} needs at least 2 nodes"
                )));
            }
        }
        let mut res = [1usize; 3];
        res[..dim].copy_from_slice(resolution);
        Ok(SamplingGrid {
            dim,
            lo: embed(lo),
            hi: embed(hi),
            resolution: res,
        })
    }

    /// Square/cubic grid `[lo, hi]^dim` with `n` nodes per axis.
    pub fn uniform(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        SamplingGrid::new(&vec![lo; dim], &vec![hi; dim], &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.resolution[axis] - 1) as f64
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.resolution[0] * (ijk[1] + self.resolution[1] * ijk[2])
    }

    pub fn unravel(&self, index: usize) -> [usize; 3] {
        let i = index % self.resolution[0];
        let rest = index / self.resolution[0];
        [i, rest % self.resolution[1], rest / self.resolution[1]]
    }

    pub fn node(&self, index: usize) -> Point {
        let ijk = self.unravel(index);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = if ijk[a] + 1 == self.resolution[a] {
                self.hi[a]
            } else {
                self.lo[a] + ijk[a] as f64 * self.spacing(a)
            };
        }
        p
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Largest cell diagonal, the natural tolerance for grid-read geometry.
    pub fn cell_diameter(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing(a).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}
