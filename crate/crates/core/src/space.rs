//! Concrete metric spaces with deterministic ball sampling.
//!
//! Every space answers three questions: the distance between two points, the
//! points of an open (or closed) ball around a point at a given sampling
//! budget, and the canonical list of carrier points at the working
//! resolution. One-dimensional spaces carry coordinates in double-double
//! precision so that balls far below `f64` spacing can still be sampled.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{domain, Error, Result};

/// Upper bound on the number of points a space will materialize.
pub const MAX_MATERIALIZED: usize = 20_000_000;

const MAX_CANTOR_LEVEL: u32 = 20;
const MAX_BOX_DIM: usize = 3;

/// A reference to a point of a [`MetricSpace`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    /// A coordinate on a one-dimensional space (interval, Cantor set, lattice line).
    Line(TwoFloat),
    /// Coordinates in a box of dimension `dim <= 3`.
    Vector { dim: u8, x: [f64; 3] },
    /// Index into a point cloud or distance table.
    Index(usize),
}

impl Point {
    pub fn line(x: f64) -> Self {
        Point::Line(TwoFloat::from(x))
    }

    pub fn vector(coords: &[f64]) -> Self {
        let mut x = [0.0; 3];
        x[..coords.len()].copy_from_slice(coords);
        Point::Vector {
            dim: coords.len() as u8,
            x,
        }
    }

    pub fn index(i: usize) -> Self {
        Point::Index(i)
    }

    pub fn as_line(&self) -> Option<TwoFloat> {
        match self {
            Point::Line(x) => Some(*x),
            _ => None,
        }
    }

    /// Nearest `f64` to a line coordinate.
    pub fn line_f64(&self) -> Option<f64> {
        self.as_line().map(f64::from)
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Vector { dim, x } => Some(&x[..*dim as usize]),
            _ => None,
        }
    }

    /// Canonical ordering: by coordinate, lexicographically, or by index.
    pub fn canonical_cmp(&self, other: &Point) -> Ordering {
        match (self, other) {
            (Point::Line(a), Point::Line(b)) => a.partial_cmp(b).unwrap_or(Ordering::Equal),
            (Point::Vector { x: a, .. }, Point::Vector { x: b, .. }) => {
                for (p, q) in a.iter().zip(b) {
                    match p.partial_cmp(q) {
                        Some(Ordering::Equal) | None => continue,
                        Some(o) => return o,
                    }
                }
                Ordering::Equal
            }
            (Point::Index(a), Point::Index(b)) => a.cmp(b),
            _ => Ordering::Equal,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Line(x) => write!(f, "{:?}", f64::from(*x)),
            Point::Vector { dim, x } => {
                let parts: Vec<String> = x[..*dim as usize]
                    .iter()
                    .map(|c| format!("{c:?}"))
                    .collect();
                write!(f, "({})", parts.join(";"))
            }
            Point::Index(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointRepr {
    Line(f64),
    Vector(Vec<f64>),
    Index { index: usize },
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            Point::Line(x) => PointRepr::Line(f64::from(*x)),
            Point::Vector { dim, x } => PointRepr::Vector(x[..*dim as usize].to_vec()),
            Point::Index(i) => PointRepr::Index { index: *i },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match PointRepr::deserialize(d)? {
            PointRepr::Line(x) => Ok(Point::line(x)),
            PointRepr::Vector(v) if (1..=MAX_BOX_DIM).contains(&v.len()) => Ok(Point::vector(&v)),
            PointRepr::Vector(v) => Err(serde::de::Error::custom(format!(
                "point has {} coordinates, expected 1 to 3",
                v.len()
            ))),
            PointRepr::Index { index } => Ok(Point::Index(index)),
        }
    }
}

/// The concrete kind of a space and its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceKind {
    Interval {
        lo: f64,
        hi: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    PointCloud {
        points: Vec<Vec<f64>>,
    },
    FiniteMatrix {
        distances: Vec<Vec<f64>>,
    },
    /// Endpoints of the `2^level` closed intervals of the level-`level` Cantor construction.
    Cantor {
        level: u32,
    },
    /// The real line, sampled lazily; nets on it are implicit lattices.
    LatticeLine,
}

/// JSON description of a space.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Interval {
        lo: f64,
        hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<f64>,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<f64>,
    },
    PointCloud {
        points: Vec<Vec<f64>>,
    },
    FiniteMatrix {
        distances: Vec<Vec<f64>>,
    },
    Cantor {
        level: u32,
    },
    LatticeLine {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<f64>,
    },
}

pub const DEFAULT_RESOLUTION: f64 = 1e-4;

/// A metric space with a distance oracle and deterministic ball sampling.
#[derive(Clone, Debug)]
pub struct MetricSpace {
    kind: SpaceKind,
    resolution: f64,
    /// Sorted carrier of a Cantor space.
    cantor: Vec<f64>,
}

impl MetricSpace {
    pub fn interval(lo: f64, hi: f64, resolution: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Spec("interval endpoints must be finite".into()));
        }
        if hi < lo {
            return Err(Error::Spec("hi < lo".into()));
        }
        Self::new(SpaceKind::Interval { lo, hi }, resolution)
    }

    pub fn unit_interval(resolution: f64) -> Result<Self> {
        Self::interval(0.0, 1.0, resolution)
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>, resolution: f64) -> Result<Self> {
        if lo.is_empty() || lo.len() > MAX_BOX_DIM {
            return Err(Error::Spec(format!(
                "box dimension {} outside 1..=3; use point_cloud for higher dimensions",
                lo.len()
            )));
        }
        if lo.len() != hi.len() {
            return Err(Error::Spec("box lo and hi differ in dimension".into()));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::Spec(
                "box requires finite lo <= hi on every axis".into(),
            ));
        }
        Self::new(SpaceKind::Box { lo, hi }, resolution)
    }

    pub fn point_cloud(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points
            .iter()
            .any(|p| p.len() != dim || p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::Spec(
                "points must share one dimension and be finite".into(),
            ));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::Spec(format!("points {j} and {i} coincide")));
                }
            }
        }
        Self::new(SpaceKind::PointCloud { points }, 0.0)
    }

    /// A finite space given by a full distance table. The table is checked to be a metric.
    pub fn finite_matrix(distances: Vec<Vec<f64>>) -> Result<Self> {
        let n = distances.len();
        if distances.iter().any(|row| row.len() != n) {
            return Err(Error::Spec("distances must be a square table".into()));
        }
        for i in 0..n {
            if distances[i][i] != 0.0 {
                return Err(Error::Spec(format!("distances[{i}][{i}] must be 0")));
            }
            for j in 0..n {
                let d = distances[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Spec(format!(
                        "distances[{i}][{j}] must be finite and >= 0"
                    )));
                }
                if i != j && d == 0.0 {
                    return Err(Error::Spec(format!(
                        "distinct points {i} and {j} at distance 0"
                    )));
                }
                if d != distances[j][i] {
                    return Err(Error::Spec(format!("distances not symmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if distances[i][k] > distances[i][j] + distances[j][k] {
                        return Err(Error::Spec(format!(
                            "triangle inequality fails for ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Self::new(SpaceKind::FiniteMatrix { distances }, 0.0)
    }

    pub fn cantor(level: u32) -> Result<Self> {
        if level > MAX_CANTOR_LEVEL {
            return Err(Error::Spec(format!(
                "cantor level {level} exceeds {MAX_CANTOR_LEVEL}"
            )));
        }
        let res = 3f64.powi(-(level as i32));
        Self::new(SpaceKind::Cantor { level }, res)
    }

    pub fn lattice_line(resolution: f64) -> Result<Self> {
        Self::new(SpaceKind::LatticeLine, resolution)
    }

    fn new(kind: SpaceKind, resolution: f64) -> Result<Self> {
        let needs_res = matches!(
            kind,
            SpaceKind::Interval { .. } | SpaceKind::Box { .. } | SpaceKind::LatticeLine
        );
        if needs_res && !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Spec("resolution must be a positive real".into()));
        }
        let cantor = match kind {
            SpaceKind::Cantor { level } => cantor_endpoints(level),
            _ => Vec::new(),
        };
        Ok(MetricSpace {
            kind,
            resolution,
            cantor,
        })
    }

    pub fn from_spec(spec: &SpaceSpec) -> Result<Self> {
        match spec.clone() {
            SpaceSpec::Interval { lo, hi, resolution } => {
                Self::interval(lo, hi, resolution.unwrap_or(DEFAULT_RESOLUTION))
            }
            SpaceSpec::Box { lo, hi, resolution } => {
                Self::boxed(lo, hi, resolution.unwrap_or(DEFAULT_RESOLUTION))
            }
            SpaceSpec::PointCloud { points } => Self::point_cloud(points),
            SpaceSpec::FiniteMatrix { distances } => Self::finite_matrix(distances),
            SpaceSpec::Cantor { level } => Self::cantor(level),
            SpaceSpec::LatticeLine { resolution } => {
                Self::lattice_line(resolution.unwrap_or(DEFAULT_RESOLUTION))
            }
        }
    }

    pub fn to_spec(&self) -> SpaceSpec {
        let resolution = Some(self.resolution);
        match &self.kind {
            SpaceKind::Interval { lo, hi } => SpaceSpec::Interval {
                lo: *lo,
                hi: *hi,
                resolution,
            },
            SpaceKind::Box { lo, hi } => SpaceSpec::Box {
                lo: lo.clone(),
                hi: hi.clone(),
                resolution,
            },
            SpaceKind::PointCloud { points } => SpaceSpec::PointCloud {
                points: points.clone(),
            },
            SpaceKind::FiniteMatrix { distances } => SpaceSpec::FiniteMatrix {
                distances: distances.clone(),
            },
            SpaceKind::Cantor { level } => SpaceSpec::Cantor { level: *level },
            SpaceKind::LatticeLine => SpaceSpec::LatticeLine { resolution },
        }
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn is_line(&self) -> bool {
        matches!(
            self.kind,
            SpaceKind::Interval { .. } | SpaceKind::Cantor { .. } | SpaceKind::LatticeLine
        )
    }

    /// Bounds of a one-dimensional space, `None` for the unbounded lattice line.
    pub fn line_bounds(&self) -> Option<(f64, f64)> {
        match &self.kind {
            SpaceKind::Interval { lo, hi } => Some((*lo, *hi)),
            SpaceKind::Cantor { .. } => Some((0.0, 1.0)),
            _ => None,
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            SpaceKind::Interval { lo, hi } => hi - lo,
            SpaceKind::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (h - l) * (h - l))
                .sum::<f64>()
                .sqrt(),
            SpaceKind::PointCloud { points } => {
                let mut d: f64 = 0.0;
                for i in 0..points.len() {
                    for j in 0..i {
                        d = d.max(euclid(&points[i], &points[j]));
                    }
                }
                d
            }
            SpaceKind::FiniteMatrix { distances } => distances
                .iter()
                .flat_map(|r| r.iter())
                .fold(0.0, |m, &d| m.max(d)),
            SpaceKind::Cantor { .. } => 1.0,
            SpaceKind::LatticeLine => f64::INFINITY,
        }
    }

    /// Number of points of a finite space.
    pub fn finite_len(&self) -> Option<usize> {
        match &self.kind {
            SpaceKind::PointCloud { points } => Some(points.len()),
            SpaceKind::FiniteMatrix { distances } => Some(distances.len()),
            SpaceKind::Cantor { .. } => Some(self.cantor.len()),
            _ => None,
        }
    }

    /// Checks that `p` is a valid point of this space.
    pub fn validate(&self, p: &Point) -> Result<()> {
        let tol = self.resolution;
        match (&self.kind, p) {
            (SpaceKind::Interval { lo, hi }, Point::Line(x)) => {
                let x = f64::from(*x);
                if x >= lo - tol && x <= hi + tol {
                    Ok(())
                } else {
                    Err(domain(format!("point {x} outside [{lo}, {hi}]")))
                }
            }
            (SpaceKind::LatticeLine, Point::Line(x)) if f64::from(*x).is_finite() => Ok(()),
            (SpaceKind::Cantor { .. }, Point::Line(x)) => {
                let x = f64::from(*x);
                let near = nearest_sorted(&self.cantor, x).map(|(_, d)| d);
                match near {
                    Some(d) if d <= tol => Ok(()),
                    _ => Err(domain(format!("point {x} is not in the Cantor carrier"))),
                }
            }
            (SpaceKind::Box { lo, .. }, Point::Vector { dim, x }) if *dim as usize == lo.len() => {
                let SpaceKind::Box { lo, hi } = &self.kind else {
                    unreachable!()
                };
                let inside = x[..lo.len()]
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(c, (l, h))| *c >= l - tol && *c <= h + tol);
                if inside {
                    Ok(())
                } else {
                    Err(domain("point outside the box"))
                }
            }
            (SpaceKind::PointCloud { points }, Point::Index(i)) if *i < points.len() => Ok(()),
            (SpaceKind::FiniteMatrix { distances }, Point::Index(i)) if *i < distances.len() => {
                Ok(())
            }
            _ => Err(domain(format!(
                "point {p} is not a valid reference for this space"
            ))),
        }
    }

    /// The distance `|u - v|` in double-double precision.
    pub fn distance_dd(&self, u: &Point, v: &Point) -> Result<TwoFloat> {
        self.raw_distance(u, v)
            .ok_or_else(|| domain(format!("invalid point pair ({u}, {v}) for this space")))
    }

    /// The distance `|u - v|`.
    pub fn distance(&self, u: &Point, v: &Point) -> Result<f64> {
        self.validate(u)?;
        self.validate(v)?;
        self.distance_dd(u, v).map(f64::from)
    }

    pub(crate) fn raw_distance(&self, u: &Point, v: &Point) -> Option<TwoFloat> {
        match (&self.kind, u, v) {
            (
                SpaceKind::Interval { .. } | SpaceKind::Cantor { .. } | SpaceKind::LatticeLine,
                Point::Line(a),
                Point::Line(b),
            ) => Some((*a - *b).abs()),
            (
                SpaceKind::Box { lo, .. },
                Point::Vector { dim: da, x: a },
                Point::Vector { dim: db, x: b },
            ) if *da as usize == lo.len() && da == db => Some(TwoFloat::from(euclid(
                &a[..*da as usize],
                &b[..*db as usize],
            ))),
            (SpaceKind::PointCloud { points }, Point::Index(i), Point::Index(j)) => {
                Some(TwoFloat::from(euclid(points.get(*i)?, points.get(*j)?)))
            }
            (SpaceKind::FiniteMatrix { distances }, Point::Index(i), Point::Index(j)) => {
                Some(TwoFloat::from(*distances.get(*i)?.get(*j)?))
            }
            _ => None,
        }
    }

    /// Points of the open ball `B(x, r)` other than `x`, sorted by distance descending.
    ///
    /// Continuous kinds are sampled on a grid centered at `x` with spacing
    /// `max(resolution, 2r/budget)`; finite kinds return every point of the ball.
    /// A supremum over the returned list is a lower bound for the supremum over the ball.
    pub fn ball_sample(&self, x: &Point, r: f64, budget: usize) -> Result<Vec<Point>> {
        self.sample_ball(x, r, budget, false)
    }

    /// Points of the closed ball `B[x, r]` other than `x`, sorted by distance descending.
    pub fn closed_ball_sample(&self, x: &Point, r: f64, budget: usize) -> Result<Vec<Point>> {
        self.sample_ball(x, r, budget, true)
    }

    fn sample_ball(&self, x: &Point, r: f64, budget: usize, closed: bool) -> Result<Vec<Point>> {
        if !(r > 0.0) {
            return Err(domain(format!("ball radius must be positive, got {r}")));
        }
        if budget == 0 {
            return Err(domain("sampling budget must be positive"));
        }
        self.validate(x)?;
        let inside = |d: TwoFloat| if closed { d <= r } else { d < r };
        let mut out: Vec<(TwoFloat, Point)> = Vec::new();
        match &self.kind {
            SpaceKind::Interval { .. } | SpaceKind::LatticeLine => {
                let xc = x.as_line().expect("validated");
                let bounds = self.line_bounds();
                let h = self.resolution.max(2.0 * r / budget as f64);
                let kmax = (r / h).ceil() as u64 + 1;
                let steps = r / h;
                for k in (1..=kmax).rev() {
                    // offsets within rounding of r lie on the sphere
                    let on_sphere = (k as f64 - steps).abs() <= 1e-9 * steps;
                    let off = TwoFloat::new_mul(k as f64, h);
                    for u in [xc - off, xc + off] {
                        let d = (u - xc).abs();
                        let keep = if on_sphere { closed } else { inside(d) };
                        if d > 0.0 && keep && in_bounds(bounds, u) {
                            out.push((d, Point::Line(u)));
                        }
                    }
                }
                // endpoints are carrier points the centered grid may miss
                if let Some((lo, hi)) = bounds {
                    for end in [lo, hi] {
                        let u = TwoFloat::from(end);
                        let d = (u - xc).abs();
                        if d > 0.0 && inside(d) && !out.iter().any(|(_, p)| *p == Point::Line(u)) {
                            out.push((d, Point::Line(u)));
                        }
                    }
                }
            }
            SpaceKind::Cantor { .. } => {
                let xc = x.as_line().expect("validated");
                let xf = f64::from(xc);
                let lo = self.cantor.partition_point(|&p| p < xf - 2.0 * r);
                for &p in &self.cantor[lo..] {
                    if p > xf + 2.0 * r {
                        break;
                    }
                    let d = (TwoFloat::from(p) - xc).abs();
                    if d > 0.0 && inside(d) {
                        out.push((d, Point::line(p)));
                    }
                }
            }
            SpaceKind::Box { lo, hi } => {
                let Point::Vector { x: c, .. } = x else {
                    unreachable!()
                };
                let m = lo.len();
                let h = self.resolution.max(2.0 * r / budget as f64);
                let kmax = (r / h).ceil() as i64;
                let span = (2 * kmax + 1) as usize;
                let total = span.pow(m as u32);
                if total > MAX_MATERIALIZED {
                    return Err(Error::Resource(format!(
                        "ball sample of {total} grid points exceeds {MAX_MATERIALIZED}"
                    )));
                }
                for flat in 0..total {
                    let mut rem = flat;
                    let mut p = [0.0; 3];
                    let mut ok = true;
                    for axis in (0..m).rev() {
                        let k = (rem % span) as i64 - kmax;
                        rem /= span;
                        p[axis] = c[axis] + k as f64 * h;
                        ok &= p[axis] >= lo[axis] && p[axis] <= hi[axis];
                    }
                    if !ok {
                        continue;
                    }
                    let d = TwoFloat::from(euclid(&p[..m], &c[..m]));
                    if d > 0.0 && inside(d) {
                        out.push((d, Point::vector(&p[..m])));
                    }
                }
            }
            SpaceKind::PointCloud { .. } | SpaceKind::FiniteMatrix { .. } => {
                let n = self.finite_len().unwrap_or(0);
                for j in 0..n {
                    let p = Point::Index(j);
                    let d = self.raw_distance(x, &p).expect("validated");
                    if d > 0.0 && inside(d) {
                        out.push((d, p));
                    }
                }
            }
        }
        out.sort_by(|(da, pa), (db, pb)| {
            db.partial_cmp(da)
                .unwrap_or(Ordering::Equal)
                .then_with(|| pa.canonical_cmp(pb))
        });
        Ok(out.into_iter().map(|(_, p)| p).collect())
    }

    /// Smallest positive distance between materialized points; `+inf` with fewer than two.
    pub fn min_positive_gap(&self) -> f64 {
        match &self.kind {
            SpaceKind::Interval { lo, hi } => {
                if hi > lo {
                    self.resolution.min(hi - lo)
                } else {
                    f64::INFINITY
                }
            }
            SpaceKind::Box { lo, hi } => {
                if lo.iter().zip(hi).any(|(l, h)| h > l) {
                    self.resolution
                } else {
                    f64::INFINITY
                }
            }
            SpaceKind::LatticeLine => self.resolution,
            SpaceKind::Cantor { .. } => self
                .cantor
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min),
            SpaceKind::PointCloud { .. } | SpaceKind::FiniteMatrix { .. } => {
                let n = self.finite_len().unwrap_or(0);
                let mut best = f64::INFINITY;
                for i in 0..n {
                    for j in 0..i {
                        let d = f64::from(
                            self.raw_distance(&Point::Index(i), &Point::Index(j))
                                .expect("indices"),
                        );
                        if d > 0.0 {
                            best = best.min(d);
                        }
                    }
                }
                best
            }
        }
    }

    /// Carrier points at the space's resolution, in canonical order.
    pub fn materialize(&self) -> Result<Vec<Point>> {
        self.materialize_at(self.resolution)
    }

    /// Carrier points with continuous kinds gridded at `step`, in canonical order.
    /// Finite kinds ignore `step`.
    pub fn materialize_at(&self, step: f64) -> Result<Vec<Point>> {
        match &self.kind {
            SpaceKind::Interval { lo, hi } => {
                if !(step > 0.0) {
                    return Err(domain("grid step must be positive"));
                }
                let n = line_grid_count(*lo, *hi, step)?;
                Ok((0..=n)
                    .map(|i| Point::line(grid_coord(*lo, *hi, i, n)))
                    .collect())
            }
            SpaceKind::Box { lo, hi } => {
                if !(step > 0.0) {
                    return Err(domain("grid step must be positive"));
                }
                let counts = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| line_grid_count(*l, *h, step))
                    .collect::<Result<Vec<_>>>()?;
                let total = counts.iter().map(|n| n + 1).product::<usize>();
                if total > MAX_MATERIALIZED {
                    return Err(Error::Resource(format!(
                        "box grid of {total} points exceeds {MAX_MATERIALIZED}"
                    )));
                }
                let m = lo.len();
                let mut out = Vec::with_capacity(total);
                for flat in 0..total {
                    let mut rem = flat;
                    let mut p = [0.0; 3];
                    for axis in (0..m).rev() {
                        let n = counts[axis];
                        let i = rem % (n + 1);
                        rem /= n + 1;
                        p[axis] = grid_coord(lo[axis], hi[axis], i, n);
                    }
                    out.push(Point::vector(&p[..m]));
                }
                Ok(out)
            }
            SpaceKind::Cantor { .. } => Ok(self.cantor.iter().map(|&c| Point::line(c)).collect()),
            SpaceKind::PointCloud { .. } | SpaceKind::FiniteMatrix { .. } => {
                Ok((0..self.finite_len().unwrap_or(0))
                    .map(Point::Index)
                    .collect())
            }
            SpaceKind::LatticeLine => Err(Error::Resource(
                "the lattice line cannot be materialized; use implicit lattice nets".into(),
            )),
        }
    }
}

fn in_bounds(bounds: Option<(f64, f64)>, u: TwoFloat) -> bool {
    match bounds {
        Some((lo, hi)) => u >= lo && u <= hi,
        None => true,
    }
}

pub(crate) fn line_grid_count(lo: f64, hi: f64, step: f64) -> Result<usize> {
    let n = ((hi - lo) / step).round();
    if n > MAX_MATERIALIZED as f64 {
        return Err(Error::Resource(format!(
            "grid of {n} cells at step {step} exceeds {MAX_MATERIALIZED}"
        )));
    }
    Ok(n as usize)
}

pub(crate) fn grid_coord(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n == 0 {
        lo
    } else if i == n {
        hi
    } else {
        lo + (hi - lo) * (i as f64 / n as f64)
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Left and right endpoints of the level-`level` Cantor intervals, sorted.
fn cantor_endpoints(level: u32) -> Vec<f64> {
    let denom = 3u64.pow(level) as f64;
    let mut out = Vec::with_capacity(2usize << level);
    for idx in 0u64..(1u64 << level) {
        let mut num = 0u64;
        for bit in 0..level {
            if idx >> (level - 1 - bit) & 1 == 1 {
                num += 2 * 3u64.pow(level - 1 - bit);
            }
        }
        out.push(num as f64 / denom);
        out.push((num + 1) as f64 / denom);
    }
    out
}

/// Nearest element of a sorted slice to `x`, with its distance.
pub(crate) fn nearest_sorted(sorted: &[f64], x: f64) -> Option<(usize, f64)> {
    if sorted.is_empty() {
        return None;
    }
    let i = sorted.partition_point(|&p| p < x);
    [i.checked_sub(1), (i < sorted.len()).then_some(i)]
        .into_iter()
        .flatten()
        .map(|j| (j, (sorted[j] - x).abs()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(ps: &[Point]) -> Vec<f64> {
        ps.iter().map(|p| p.line_f64().unwrap()).collect()
    }

    #[test]
    fn interval_distance() {
        let s = MetricSpace::unit_interval(1e-4).unwrap();
        let d = s.distance(&Point::line(0.2), &Point::line(0.7)).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(
            s.distance(&Point::line(0.3), &Point::line(0.3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn cantor_distance_and_carrier() {
        let s = MetricSpace::cantor(2).unwrap();
        let d = s
            .distance(&Point::line(0.0), &Point::line(2.0 / 3.0))
            .unwrap();
        assert_eq!(d, 2.0 / 3.0);
        // 2^k left endpoints plus their right partners
        assert_eq!(s.finite_len(), Some(8));
        let pts = s.materialize().unwrap();
        let c = coords(&pts);
        assert_eq!(c[0], 0.0);
        assert_eq!(c[2], 2.0 / 9.0);
    }

    #[test]
    fn invalid_point_is_domain_error() {
        let s = MetricSpace::unit_interval(1e-4).unwrap();
        assert!(matches!(
            s.distance(&Point::line(2.0), &Point::line(0.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            s.distance(&Point::Index(0), &Point::line(0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn interval_ball_sample_grid() {
        let s = MetricSpace::unit_interval(1e-4).unwrap();
        let b = s.ball_sample(&Point::line(0.5), 0.1, 4).unwrap();
        // spacing 0.05; offset 0.1 is not strictly inside the open ball
        assert_eq!(coords(&b), vec![0.45, 0.55]);
        let c = s.closed_ball_sample(&Point::line(0.5), 0.1, 4).unwrap();
        assert_eq!(c.len(), 4);
        assert!((f64::from(s.distance_dd(&c[0], &Point::line(0.5)).unwrap()) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ball_sample_rejects_nonpositive_radius() {
        let s = MetricSpace::unit_interval(1e-4).unwrap();
        assert!(matches!(
            s.ball_sample(&Point::line(0.5), 0.0, 4),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn single_point_matrix_ball_is_empty() {
        let s = MetricSpace::finite_matrix(vec![vec![0.0]]).unwrap();
        assert!(s.ball_sample(&Point::Index(0), 10.0, 8).unwrap().is_empty());
        assert_eq!(s.min_positive_gap(), f64::INFINITY);
    }

    #[test]
    fn cantor_ball_sample() {
        let s = MetricSpace::cantor(3).unwrap();
        let b = s.ball_sample(&Point::line(0.0), 0.04, 16).unwrap();
        assert_eq!(coords(&b), vec![1.0 / 27.0]);
        let b = s.ball_sample(&Point::line(0.0), 0.08, 16).unwrap();
        assert_eq!(coords(&b), vec![2.0 / 27.0, 1.0 / 27.0]);
    }

    #[test]
    fn min_gaps() {
        let line = MetricSpace::finite_matrix(vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 2.0],
            vec![3.0, 2.0, 0.0],
        ])
        .unwrap();
        assert_eq!(line.min_positive_gap(), 1.0);
        let c = MetricSpace::cantor(2).unwrap();
        assert!((c.min_positive_gap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(
            MetricSpace::unit_interval(0.01).unwrap().min_positive_gap(),
            0.01
        );
    }

    #[test]
    fn matrix_validation() {
        assert!(MetricSpace::finite_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        let bad_triangle = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(MetricSpace::finite_matrix(bad_triangle).is_err());
    }

    #[test]
    fn box_limited_to_three_dims() {
        assert!(MetricSpace::boxed(vec![0.0; 4], vec![1.0; 4], 0.1).is_err());
        let b = MetricSpace::boxed(vec![0.0, 0.0], vec![1.0, 1.0], 0.5).unwrap();
        assert_eq!(b.materialize().unwrap().len(), 9);
        let d = b
            .distance(&Point::vector(&[0.0, 0.0]), &Point::vector(&[0.3, 0.4]))
            .unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spec_roundtrip_and_errors() {
        let s: SpaceSpec =
            serde_json::from_str(r#"{"kind":"interval","lo":0,"hi":1,"resolution":1e-4}"#).unwrap();
        let space = MetricSpace::from_spec(&s).unwrap();
        assert_eq!(space.resolution(), 1e-4);
        let bad: SpaceSpec = serde_json::from_str(r#"{"kind":"interval","lo":1,"hi":0}"#).unwrap();
        let err = MetricSpace::from_spec(&bad).unwrap_err().to_string();
        assert!(err.contains("hi < lo"), "{err}");
        let missing = serde_json::from_str::<SpaceSpec>(r#"{"kind":"interval","lo":0}"#)
            .unwrap_err()
            .to_string();
        assert!(missing.contains("hi"), "{missing}");
    }
}
