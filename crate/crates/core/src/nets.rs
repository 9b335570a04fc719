//! Maximal ε-separated nets and hierarchies of nets at scales `a^{-n}`.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{domain, Error, Result};
use crate::lattice::{cell_offset, step_offset, CellOffset, LatticeBase};
use crate::space::{grid_coord, line_grid_count, MetricSpace, Point, SpaceKind, MAX_MATERIALIZED};

/// Spacing of an implicit lattice net `εZ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Spacing {
    /// `ε = a^{-level}`.
    Power { base: LatticeBase, level: u32 },
    /// An arbitrary positive step.
    Step(f64),
}

impl Spacing {
    pub fn epsilon(&self) -> f64 {
        match self {
            Spacing::Power { base, level } => f64::from(base.scale(*level)),
            Spacing::Step(s) => *s,
        }
    }

    pub fn offset(&self, x: TwoFloat) -> CellOffset {
        match self {
            Spacing::Power { base, level } => cell_offset(x, base, *level),
            Spacing::Step(s) => step_offset(x, *s),
        }
    }

    /// Converts a cell offset back to a length.
    fn length(&self, t: TwoFloat) -> TwoFloat {
        match self {
            Spacing::Power { base, level } => t / base.pow(*level),
            Spacing::Step(s) => t * *s,
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Points {
        points: Vec<Point>,
        /// Sorted coordinates when the points live on a line.
        line: Option<Vec<TwoFloat>>,
    },
    Lattice {
        spacing: Spacing,
        bounds: Option<(f64, f64)>,
    },
}

/// An ε-separated subset of a metric space.
#[derive(Clone, Debug)]
pub struct Net {
    space: Arc<MetricSpace>,
    epsilon: f64,
    repr: Repr,
}

impl Net {
    /// A net given by an explicit point list.
    pub fn explicit(space: Arc<MetricSpace>, epsilon: f64, mut points: Vec<Point>) -> Result<Net> {
        check_epsilon(epsilon)?;
        for p in &points {
            space.validate(p)?;
        }
        points.sort_by(|a, b| a.canonical_cmp(b));
        points.dedup();
        let line = points
            .iter()
            .map(|p| p.as_line())
            .collect::<Option<Vec<_>>>()
            .filter(|_| space.is_line());
        Ok(Net {
            space,
            epsilon,
            repr: Repr::Points { points, line },
        })
    }

    /// The lattice `εZ`, intersected with the interval when the space is one.
    pub fn lattice(space: Arc<MetricSpace>, spacing: Spacing) -> Result<Net> {
        let epsilon = spacing.epsilon();
        check_epsilon(epsilon)?;
        let bounds = match space.kind() {
            SpaceKind::LatticeLine => None,
            SpaceKind::Interval { lo, hi } => {
                for end in [*lo, *hi] {
                    if spacing.offset(TwoFloat::from(end)).distance() != 0.0 {
                        return Err(Error::Precondition(format!(
                            "interval endpoint {end} is not a point of the lattice {epsilon}Z"
                        )));
                    }
                }
                Some((*lo, *hi))
            }
            _ => {
                return Err(Error::Precondition(
                    "implicit lattice nets need an interval or the lattice line".into(),
                ))
            }
        };
        Ok(Net {
            space,
            epsilon,
            repr: Repr::Lattice { spacing, bounds },
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self.repr, Repr::Lattice { .. })
    }

    /// Explicit points in canonical order; empty for implicit lattices.
    pub fn points(&self) -> &[Point] {
        match &self.repr {
            Repr::Points { points, .. } => points,
            Repr::Lattice { .. } => &[],
        }
    }

    /// Number of points, `None` for implicit lattices.
    pub fn len(&self) -> Option<usize> {
        match &self.repr {
            Repr::Points { points, .. } => Some(points.len()),
            Repr::Lattice { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn spacing(&self) -> Option<&Spacing> {
        match &self.repr {
            Repr::Lattice { spacing, .. } => Some(spacing),
            Repr::Points { .. } => None,
        }
    }

    /// Whether `p` belongs to the net.
    pub fn contains(&self, p: &Point) -> bool {
        match &self.repr {
            Repr::Points { points, .. } => points.binary_search_by(|q| q.canonical_cmp(p)).is_ok(),
            Repr::Lattice { .. } => self.nearest_raw(p).is_some_and(|(_, d)| d == 0.0),
        }
    }

    /// `d(x, S)` in double-double precision; `+inf` for an empty net.
    pub fn distance_dd(&self, x: &Point) -> Result<TwoFloat> {
        self.space.validate(x)?;
        Ok(self.dist_raw(x))
    }

    pub(crate) fn dist_raw(&self, x: &Point) -> TwoFloat {
        match self.nearest_raw(x) {
            Some((_, d)) => d,
            None => TwoFloat::from(f64::INFINITY),
        }
    }

    /// The nearest net point and its distance; `None` for an empty net.
    pub fn nearest(&self, x: &Point) -> Result<Option<(Point, TwoFloat)>> {
        self.space.validate(x)?;
        Ok(self.nearest_raw(x))
    }

    pub(crate) fn nearest_raw(&self, x: &Point) -> Option<(Point, TwoFloat)> {
        match &self.repr {
            Repr::Lattice { spacing, bounds } => {
                let xc = x.as_line()?;
                let off = spacing.offset(xc);
                let below = xc - spacing.length(off.below);
                let above = xc + spacing.length(off.above);
                let mut cands = vec![
                    (below, spacing.length(off.below)),
                    (above, spacing.length(off.above)),
                ];
                if let Some((lo, hi)) = bounds {
                    cands.retain(|(p, _)| *p >= *lo && *p <= *hi);
                    for end in [*lo, *hi] {
                        cands.push((TwoFloat::from(end), (xc - end).abs()));
                    }
                }
                cands
                    .into_iter()
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
                    .map(|(p, d)| (Point::Line(p), d))
            }
            Repr::Points {
                points,
                line: Some(line),
            } => {
                let xc = x.as_line()?;
                nearest_line(line, xc).map(|(i, d)| (points[i], d))
            }
            Repr::Points { points, line: None } => points
                .iter()
                .filter_map(|p| Some((*p, self.space.raw_distance(x, p)?)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal)),
        }
    }

    pub fn to_file(&self) -> NetFile {
        match &self.repr {
            Repr::Points { points, .. } => NetFile::Explicit {
                epsilon: self.epsilon,
                points: points.clone(),
            },
            Repr::Lattice { .. } => NetFile::Implicit {
                implicit_lattice: LatticeFile {
                    scale: self.epsilon,
                },
            },
        }
    }

    pub fn from_file(space: Arc<MetricSpace>, file: NetFile) -> Result<Net> {
        match file {
            NetFile::Explicit { epsilon, points } => Net::explicit(space, epsilon, points),
            NetFile::Implicit { implicit_lattice } => {
                Net::lattice(space, Spacing::Step(implicit_lattice.scale))
            }
        }
    }
}

/// JSON form of a net.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NetFile {
    Explicit { epsilon: f64, points: Vec<Point> },
    Implicit { implicit_lattice: LatticeFile },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LatticeFile {
    pub scale: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "epsilon must be a positive real, got {epsilon}"
        )))
    }
}

fn nearest_line(sorted: &[TwoFloat], x: TwoFloat) -> Option<(usize, TwoFloat)> {
    let i = sorted.partition_point(|p| *p < x);
    [i.checked_sub(1), (i < sorted.len()).then_some(i)]
        .into_iter()
        .flatten()
        .map(|j| (j, (sorted[j] - x).abs()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
}

/// `d(x, S)`, validated; `+inf` when the net is empty.
pub fn dist_to_net(x: &Point, net: &Net) -> Result<f64> {
    net.distance_dd(x).map(f64::from)
}

/// Grid step used to materialize a continuous space for nets at scale `epsilon`.
pub fn working_step(space: &MetricSpace, epsilon: f64) -> f64 {
    let res = space.resolution();
    if res < epsilon / 4.0 {
        res
    } else {
        epsilon / 8.0
    }
}

/// Greedy maximal ε-separated set containing `seed`.
///
/// Carrier points are scanned in canonical order; a point is accepted when it
/// is at distance `>= epsilon` from everything accepted so far.
pub fn greedy_maximal_net(space: &Arc<MetricSpace>, epsilon: f64, seed: &[Point]) -> Result<Net> {
    check_epsilon(epsilon)?;
    for p in seed {
        space.validate(p)?;
    }
    let seed_net = Net::explicit(space.clone(), epsilon, seed.to_vec())?;
    if let Some((p, q, d)) = check_separated(&seed_net).violation {
        return Err(Error::Precondition(format!(
            "seed is not {epsilon}-separated: |{p} - {q}| = {d}"
        )));
    }
    let eps = TwoFloat::from(epsilon);
    let mut points = seed_net.points().to_vec();
    match space.kind() {
        SpaceKind::LatticeLine => {
            let net = Net::lattice(space.clone(), Spacing::Step(epsilon))?;
            if seed.iter().all(|p| net.contains(p)) {
                return Ok(net);
            }
            return Err(Error::Precondition(
                "on the lattice line the seed must lie on the lattice epsilon Z".into(),
            ));
        }
        SpaceKind::Interval { lo, hi } => {
            let step = working_step(space, epsilon);
            let n = line_grid_count(*lo, *hi, step)?;
            let coords = (0..=n).map(|i| TwoFloat::from(grid_coord(*lo, *hi, i, n)));
            points.extend(scan_line(&seed_net, coords, eps));
        }
        SpaceKind::Cantor { .. } => {
            let carrier = space.materialize()?;
            let coords = carrier.iter().filter_map(|p| p.as_line());
            points.extend(scan_line(&seed_net, coords, eps));
        }
        _ => {
            let carrier = space.materialize_at(working_step(space, epsilon))?;
            for c in carrier {
                let far = points
                    .iter()
                    .all(|p| space.raw_distance(&c, p).is_some_and(|d| d >= eps));
                if far {
                    points.push(c);
                }
            }
        }
    }
    Net::explicit(space.clone(), epsilon, points)
}

/// Ascending scan of line coordinates against a sorted seed.
fn scan_line(seed: &Net, coords: impl Iterator<Item = TwoFloat>, eps: TwoFloat) -> Vec<Point> {
    let seeds = match &seed.repr {
        Repr::Points {
            line: Some(line), ..
        } => line.clone(),
        _ => Vec::new(),
    };
    let mut last: Option<TwoFloat> = None;
    let mut out = Vec::new();
    for c in coords {
        if last.is_some_and(|l| c - l < eps) {
            continue;
        }
        if nearest_line(&seeds, c).is_some_and(|(_, d)| d < eps) {
            continue;
        }
        last = Some(c);
        out.push(Point::Line(c));
    }
    out
}

/// Result of a separation check.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparationCheck {
    pub passed: bool,
    /// Smallest pairwise distance found; `+inf` for fewer than two points.
    pub min_distance: f64,
    pub violation: Option<(Point, Point, f64)>,
}

/// Checks that distinct net points are at distance `>= epsilon`.
pub fn check_separated(net: &Net) -> SeparationCheck {
    let eps = TwoFloat::from(net.epsilon);
    let mut min = TwoFloat::from(f64::INFINITY);
    let mut violation = None;
    let mut visit = |p: &Point, q: &Point, d: TwoFloat| {
        if d < min {
            min = d;
        }
        if d < eps && violation.is_none() {
            violation = Some((*p, *q, f64::from(d)));
        }
    };
    match &net.repr {
        Repr::Lattice { .. } => {
            return SeparationCheck {
                passed: true,
                min_distance: net.epsilon,
                violation: None,
            }
        }
        Repr::Points {
            points,
            line: Some(line),
        } => {
            for i in 1..line.len() {
                visit(&points[i - 1], &points[i], line[i] - line[i - 1]);
            }
        }
        Repr::Points { points, line: None } => {
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    if let Some(d) = net.space.raw_distance(&points[i], &points[j]) {
                        visit(&points[i], &points[j], d);
                    }
                }
            }
        }
    }
    SeparationCheck {
        passed: violation.is_none(),
        min_distance: f64::from(min),
        violation,
    }
}

/// Result of a density check over probe points.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityCheck {
    pub passed: bool,
    pub probes: usize,
    /// Probe farthest from the net and its distance.
    pub worst: Option<(Point, f64)>,
    /// First probe, in canonical order, at distance `>= epsilon`.
    pub violation: Option<Point>,
}

/// Checks that every probe point lies within `< epsilon` of the net.
///
/// Continuous kinds are probed on a grid of step `probe_resolution`, finite
/// kinds at every point. The lattice line is dense by construction.
pub fn check_dense(net: &Net, probe_resolution: f64) -> Result<DensityCheck> {
    let space = &net.space;
    let eps = TwoFloat::from(net.epsilon);
    if matches!(space.kind(), SpaceKind::LatticeLine) && net.is_implicit() {
        return Ok(DensityCheck {
            passed: true,
            probes: 0,
            worst: None,
            violation: None,
        });
    }
    let mut probes = 0usize;
    let mut worst: Option<(Point, TwoFloat)> = None;
    let mut violation = None;
    let mut visit = |p: Point| {
        probes += 1;
        let d = net.dist_raw(&p);
        if worst.map_or(true, |(_, w)| d > w) {
            worst = Some((p, d));
        }
        if d >= eps && violation.is_none() {
            violation = Some(p);
        }
    };
    match space.kind() {
        SpaceKind::Interval { lo, hi } => {
            if !(probe_resolution > 0.0) {
                return Err(domain("probe resolution must be positive"));
            }
            let n = line_grid_count(*lo, *hi, probe_resolution)?;
            for i in 0..=n {
                visit(Point::line(grid_coord(*lo, *hi, i, n)));
            }
        }
        SpaceKind::LatticeLine => {
            return Err(Error::Resource(
                "explicit nets on the lattice line cannot be probed".into(),
            ))
        }
        _ => {
            for p in space.materialize_at(probe_resolution)? {
                visit(p);
            }
        }
    }
    Ok(DensityCheck {
        passed: violation.is_none(),
        probes,
        worst: worst.map(|(p, d)| (p, f64::from(d))),
        violation,
    })
}

#[derive(Clone, Debug)]
enum Levels {
    Explicit(Vec<Net>),
    Lattice,
}

/// Nets `S_0, S_1, ...` with `S_n` at scale `a^{-n}`.
#[derive(Clone, Debug)]
pub struct NetHierarchy {
    space: Arc<MetricSpace>,
    base: LatticeBase,
    monotone: bool,
    levels: Levels,
}

impl NetHierarchy {
    pub fn a(&self) -> f64 {
        self.base.value()
    }

    pub fn base(&self) -> &LatticeBase {
        &self.base
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn monotone(&self) -> bool {
        self.monotone
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self.levels, Levels::Lattice)
    }

    /// Deepest available level; `None` when unbounded.
    pub fn depth(&self) -> Option<u32> {
        match &self.levels {
            Levels::Explicit(nets) => Some(nets.len() as u32 - 1),
            Levels::Lattice => None,
        }
    }

    pub fn epsilon(&self, n: u32) -> f64 {
        f64::from(self.base.scale(n))
    }

    pub fn level(&self, n: u32) -> Result<Cow<'_, Net>> {
        match &self.levels {
            Levels::Explicit(nets) => nets
                .get(n as usize)
                .map(Cow::Borrowed)
                .ok_or_else(|| self.too_deep(n)),
            Levels::Lattice => Net::lattice(
                self.space.clone(),
                Spacing::Power {
                    base: self.base.clone(),
                    level: n,
                },
            )
            .map(Cow::Owned),
        }
    }

    fn too_deep(&self, n: u32) -> Error {
        Error::Resource(format!(
            "level {n} exceeds the hierarchy depth {}; use an implicit lattice hierarchy",
            self.depth().unwrap_or(0)
        ))
    }

    /// `φ_n(x) = d(x, S_n)` without validating `x`.
    pub(crate) fn phi(&self, x: &Point, n: u32) -> Result<TwoFloat> {
        match &self.levels {
            Levels::Explicit(nets) => nets
                .get(n as usize)
                .map(|net| net.dist_raw(x))
                .ok_or_else(|| self.too_deep(n)),
            Levels::Lattice => {
                let Some(xc) = x.as_line() else {
                    return Err(domain("lattice hierarchies need line points"));
                };
                let off = cell_offset(xc, &self.base, n);
                Ok(off.distance() / self.base.pow(n))
            }
        }
    }

    /// Nearest point of `S_n` to `x`.
    pub fn nearest(&self, x: &Point, n: u32) -> Result<Option<(Point, TwoFloat)>> {
        self.level(n)?.nearest(x)
    }

    pub fn to_file(&self) -> HierarchyFile {
        match &self.levels {
            Levels::Explicit(nets) => HierarchyFile {
                a: self.a(),
                monotone: self.monotone,
                levels: Some(nets.iter().map(Net::to_file).collect()),
                implicit_lattice: None,
            },
            Levels::Lattice => HierarchyFile {
                a: self.a(),
                monotone: self.monotone,
                levels: None,
                implicit_lattice: Some(true),
            },
        }
    }
}

/// JSON form of a hierarchy.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HierarchyFile {
    pub a: f64,
    pub monotone: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub levels: Option<Vec<NetFile>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub implicit_lattice: Option<bool>,
}

fn check_base(a: f64) -> Result<()> {
    if a > 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "hierarchy base must satisfy a > 1, got {a}"
        )))
    }
}

/// Implicit hierarchy `S_n = a^{-n}Z` on the lattice line, or its trace on an
/// interval with integer endpoints and integer `a`.
pub fn lattice_hierarchy(space: Arc<MetricSpace>, a: f64) -> Result<NetHierarchy> {
    check_base(a)?;
    let base = LatticeBase::new(a);
    match space.kind() {
        SpaceKind::LatticeLine => {}
        SpaceKind::Interval { lo, hi } => {
            if !base.is_integer() || lo.fract() != 0.0 || hi.fract() != 0.0 {
                return Err(Error::Precondition(
                    "lattice hierarchies on an interval need integer a and integer endpoints"
                        .into(),
                ));
            }
        }
        _ => {
            return Err(Error::Precondition(
                "lattice hierarchies need an interval or the lattice line".into(),
            ))
        }
    }
    Ok(NetHierarchy {
        space,
        monotone: base.is_integer(),
        base,
        levels: Levels::Lattice,
    })
}

/// Grid points needed to build level `n` greedily.
fn grid_size(space: &MetricSpace, epsilon: f64) -> Option<f64> {
    let step = working_step(space, epsilon);
    match space.kind() {
        SpaceKind::Interval { lo, hi } => Some(((hi - lo) / step).round() + 1.0),
        SpaceKind::Box { lo, hi } => Some(
            lo.iter()
                .zip(hi)
                .map(|(l, h)| ((h - l) / step).round() + 1.0)
                .product(),
        ),
        _ => None,
    }
}

/// Deepest level buildable greedily on `space`; `None` when unlimited.
pub fn max_feasible_depth(space: &MetricSpace, a: f64) -> Option<u32> {
    let base = LatticeBase::new(a);
    grid_size(space, 1.0)?;
    let mut n = 0u32;
    loop {
        let size = grid_size(space, f64::from(base.scale(n + 1)))?;
        if size > MAX_MATERIALIZED as f64 || n >= 1000 {
            return Some(n);
        }
        n += 1;
    }
}

/// Builds `S_0, ..., S_depth`, nested when `monotone` (each level seeded with the previous).
pub fn build_hierarchy(
    space: Arc<MetricSpace>,
    a: f64,
    depth: u32,
    monotone: bool,
) -> Result<NetHierarchy> {
    check_base(a)?;
    if matches!(space.kind(), SpaceKind::LatticeLine) {
        let h = lattice_hierarchy(space, a)?;
        if monotone && !h.monotone {
            return Err(Error::Precondition(
                "nested lattice nets a^{-n}Z need an integer base".into(),
            ));
        }
        return Ok(h);
    }
    if let Some(max) = max_feasible_depth(&space, a) {
        if depth > max {
            return Err(Error::Resource(format!(
                "depth {depth} is too deep for this space; max feasible depth is {max}"
            )));
        }
    }
    let base = LatticeBase::new(a);
    let mut nets: Vec<Net> = Vec::with_capacity(depth as usize + 1);
    for n in 0..=depth {
        let eps = f64::from(base.scale(n));
        let seed = match (monotone, nets.last()) {
            (true, Some(prev)) => prev.points().to_vec(),
            _ => Vec::new(),
        };
        nets.push(greedy_maximal_net(&space, eps, &seed)?);
    }
    Ok(NetHierarchy {
        space,
        base,
        monotone,
        levels: Levels::Explicit(nets),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(res: f64) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::unit_interval(res).unwrap())
    }

    fn coords(net: &Net) -> Vec<f64> {
        net.points().iter().map(|p| p.line_f64().unwrap()).collect()
    }

    #[test]
    fn greedy_on_unit_interval() {
        let net = greedy_maximal_net(&unit(0.01), 0.4, &[]).unwrap();
        assert_eq!(coords(&net), vec![0.0, 0.4, 0.8]);
        assert!(check_separated(&net).passed);
        let dense = check_dense(&net, 0.01).unwrap();
        assert!(dense.passed);
        let (_, d) = dense.worst.unwrap();
        assert!((d - 0.2).abs() < 1e-15);
    }

    #[test]
    fn greedy_keeps_seed() {
        let net = greedy_maximal_net(&unit(0.01), 0.4, &[Point::line(0.2)]).unwrap();
        let c = coords(&net);
        assert!(c.contains(&0.2));
        assert!(!c.contains(&0.0));
        assert!(check_separated(&net).passed);
        assert!(check_dense(&net, 0.01).unwrap().passed);
    }

    #[test]
    fn bad_seed_is_rejected() {
        let err = greedy_maximal_net(&unit(0.01), 0.4, &[Point::line(0.0), Point::line(0.3)]);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn single_point_space() {
        let s = Arc::new(MetricSpace::point_cloud(vec![vec![1.0, 2.0]]).unwrap());
        let net = greedy_maximal_net(&s, 0.5, &[]).unwrap();
        assert_eq!(net.points(), &[Point::index(0)]);
    }

    #[test]
    fn separation_examples() {
        let s = unit(0.01);
        let good = Net::explicit(
            s.clone(),
            0.4,
            vec![Point::line(0.0), Point::line(0.4), Point::line(0.8)],
        )
        .unwrap();
        assert!(check_separated(&good).passed);
        let bad = Net::explicit(s.clone(), 0.4, vec![Point::line(0.0), Point::line(0.3)]).unwrap();
        let chk = check_separated(&bad);
        assert!(!chk.passed);
        let (p, q, _) = chk.violation.unwrap();
        assert_eq!((p.line_f64(), q.line_f64()), (Some(0.0), Some(0.3)));
        let line = Arc::new(MetricSpace::lattice_line(1e-4).unwrap());
        let lat = Net::lattice(line, Spacing::Step(0.25)).unwrap();
        assert!(check_separated(&lat).passed);
    }

    #[test]
    fn density_examples() {
        let s = unit(0.01);
        let lonely = Net::explicit(s, 0.4, vec![Point::line(0.0)]).unwrap();
        let chk = check_dense(&lonely, 0.01).unwrap();
        assert!(!chk.passed);
        let v = chk.violation.unwrap().line_f64().unwrap();
        assert!(v >= 0.4);
        let line = Arc::new(MetricSpace::lattice_line(1e-4).unwrap());
        let lat = Net::lattice(line, Spacing::Step(0.25)).unwrap();
        assert!(check_dense(&lat, 0.01).unwrap().passed);
    }

    #[test]
    fn distances_to_nets() {
        let line = Arc::new(MetricSpace::lattice_line(1e-4).unwrap());
        let lat = Net::lattice(line, Spacing::Step(0.25)).unwrap();
        let d = dist_to_net(&Point::line(0.3), &lat).unwrap();
        assert!((d - 0.05).abs() < 1e-16);
        assert_eq!(dist_to_net(&Point::line(0.75), &lat).unwrap(), 0.0);
        let s = unit(0.01);
        let net = Net::explicit(
            s.clone(),
            0.4,
            vec![Point::line(0.0), Point::line(0.4), Point::line(0.8)],
        )
        .unwrap();
        let d = dist_to_net(&Point::line(0.5), &net).unwrap();
        assert!((d - 0.1).abs() < 1e-15);
        let empty = Net::explicit(s, 0.4, vec![]).unwrap();
        assert_eq!(
            dist_to_net(&Point::line(0.5), &empty).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn lattice_hierarchy_on_line() {
        let line = Arc::new(MetricSpace::lattice_line(1e-4).unwrap());
        let h = build_hierarchy(line, 2.0, 3, true).unwrap();
        assert!(h.is_implicit() && h.monotone());
        for n in 0..=3 {
            assert_eq!(h.epsilon(n), 0.5f64.powi(n as i32));
            let lvl = h.level(n).unwrap();
            assert!(lvl.contains(&Point::line(0.5f64.powi(n as i32))));
        }
    }

    #[test]
    fn nested_greedy_hierarchy() {
        let h = build_hierarchy(unit(1e-3), 2.0, 2, true).unwrap();
        let l0 = h.level(0).unwrap();
        assert_eq!(coords(&l0), vec![0.0, 1.0]);
        for n in 0..2 {
            let (a, b) = (h.level(n).unwrap(), h.level(n + 1).unwrap());
            assert!(a.points().iter().all(|p| b.contains(p)));
        }
        assert_eq!(coords(&h.level(1).unwrap()), vec![0.0, 0.5, 1.0]);
        assert_eq!(
            coords(&h.level(2).unwrap()),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn hierarchy_errors() {
        assert!(matches!(
            build_hierarchy(unit(1e-3), 1.0, 2, true),
            Err(Error::Domain(_))
        ));
        match build_hierarchy(unit(1e-3), 2.0, 40, true) {
            Err(Error::Resource(msg)) => assert!(msg.contains("max feasible depth")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn net_json_round_trip() {
        let s = unit(0.01);
        let net = greedy_maximal_net(&s, 0.4, &[]).unwrap();
        let text = serde_json::to_string(&net.to_file()).unwrap();
        assert_eq!(text, r#"{"epsilon":0.4,"points":[0.0,0.4,0.8]}"#);
        let back: NetFile = serde_json::from_str(&text).unwrap();
        let net2 = Net::from_file(s, back).unwrap();
        assert_eq!(net2.points(), net.points());
        let lat: NetFile = serde_json::from_str(r#"{"implicit_lattice":{"scale":0.25}}"#).unwrap();
        let line = Arc::new(MetricSpace::lattice_line(1e-4).unwrap());
        assert!(Net::from_file(line, lat).unwrap().is_implicit());
    }

    #[test]
    fn interval_lattice_trace() {
        let h = lattice_hierarchy(unit(1e-4), 600.0).unwrap();
        let net = h.level(3).unwrap();
        let (p, d) = net.nearest(&Point::line(0.5 + 1e-9)).unwrap().unwrap();
        assert_eq!(p.line_f64(), Some(0.5));
        assert!((f64::from(d) - 1e-9).abs() < 1e-16);
        assert_eq!(f64::from(h.phi(&Point::line(1.0), 7).unwrap()), 0.0);
    }
}
