//! Functions with prescribed blow-up sets, `f = g·h`.
//!
//! `g = α min(1, d(·, F))` vanishes exactly on the closed set `F = X \ G` and
//! `h` is a TW function of type `(a, b)` with `α = (a - b)/a`. Then
//! `Lip f <= 1` on `F`, `𝕃ip f <= 1` on the interior of `F`, and both
//! Lipschitz derivatives are infinite on `G`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{domain, Error, Result};
use crate::func::{tw_on_space, ScalarFn, TwEval};
use crate::lipderiv::{estimate_big_lip, estimate_lip, llip_r_pairwise, tw_schedule};
use crate::space::{MetricSpace, Point, SpaceKind};

/// Absolute tolerance used to evaluate `h`.
pub const EVAL_TOL: f64 = 1e-40;

/// Slack allowed above the bound 1 on `F`.
pub const VERIFY_TOL: f64 = 1e-6;

/// An open set `G` as a finite union of open intervals, kept sorted and merged.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RegionSpec {
    intervals: Vec<(f64, f64)>,
}

impl RegionSpec {
    pub fn empty() -> Self {
        RegionSpec::default()
    }

    pub fn from_intervals(parts: &[(f64, f64)]) -> Result<Self> {
        let mut v = Vec::with_capacity(parts.len());
        for &(l, h) in parts {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(domain(format!("bad open interval ({l}, {h})")));
            }
            v.push((l, h));
        }
        v.sort_by(|p, q| p.0.total_cmp(&q.0));
        // overlapping pieces merge; touching pieces keep the shared endpoint in F
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (l, h) in v {
            match merged.last_mut() {
                Some(last) if l < last.1 => last.1 = last.1.max(h),
                _ => merged.push((l, h)),
            }
        }
        Ok(RegionSpec { intervals: merged })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// The component of `G` containing `x`.
    fn component(&self, x: TwoFloat) -> Option<(f64, f64)> {
        self.intervals
            .iter()
            .copied()
            .find(|&(l, h)| x > TwoFloat::from(l) && x < TwoFloat::from(h))
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.as_line().map_or(false, |t| self.component(t).is_some())
    }

    /// `d(x, G)`, zero on `cl(G)`.
    pub fn distance_to_g(&self, x: &Point) -> Option<f64> {
        let t = x.as_line()?;
        let d = self
            .intervals
            .iter()
            .map(|&(l, h)| {
                if t <= TwoFloat::from(l) {
                    f64::from(TwoFloat::from(l) - t)
                } else if t >= TwoFloat::from(h) {
                    f64::from(t - TwoFloat::from(h))
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min);
        Some(d)
    }

    /// `d(x, F)` for `F = [lo, hi] \ G`, infinite when `F` is empty.
    pub fn distance_to_f(&self, x: TwoFloat, lo: f64, hi: f64) -> TwoFloat {
        let Some((l, h)) = self.component(x) else {
            return TwoFloat::from(0.0);
        };
        let mut d = TwoFloat::from(f64::INFINITY);
        if l >= lo {
            d = x - l;
        }
        if h <= hi {
            let e = TwoFloat::from(h) - x;
            if e < d {
                d = e;
            }
        }
        // infinite when this component covers the whole carrier
        d
    }

    /// Closed pieces of `F` inside `[lo, hi]`, each optionally shrunk by `collar`
    /// away from `∂G`.
    fn f_pieces(&self, lo: f64, hi: f64, collar: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start = lo;
        let mut start_collar = 0.0;
        for &(l, h) in &self.intervals {
            if h <= lo {
                continue;
            }
            if l >= hi {
                break;
            }
            let (a, b) = (start + start_collar, l - collar);
            if a <= b {
                out.push((a, b));
            }
            start = h;
            start_collar = collar;
        }
        let (a, b) = (start + start_collar, hi);
        if start <= hi && a <= b {
            out.push((a, b));
        }
        out
    }

    /// Open pieces of `G` inside `[lo, hi]`, shrunk by `collar` at `∂G`.
    fn g_pieces(&self, lo: f64, hi: f64, collar: f64) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .filter_map(|&(l, h)| {
                let a = if l < lo { lo } else { l + collar };
                let b = if h > hi { hi } else { h - collar };
                (a < b).then_some((a, b))
            })
            .collect()
    }
}

impl FromStr for RegionSpec {
    type Err = Error;

    /// Parses `(l,h)` groups joined by `u`, `U` or `∪`; an empty string is `∅`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Spec(format!("cannot parse region {s:?}"));
        let mut parts = Vec::new();
        let mut rest = s.trim();
        if rest == "{}" || rest == "∅" || rest == "empty" {
            rest = "";
        }
        while !rest.is_empty() {
            rest = rest.trim_start_matches(|c: char| {
                c.is_whitespace() || c == 'u' || c == 'U' || c == '∪'
            });
            if rest.is_empty() {
                break;
            }
            let inner = rest.strip_prefix('(').ok_or_else(bad)?;
            let close = inner.find(')').ok_or_else(bad)?;
            let (l, h) = inner[..close].split_once(',').ok_or_else(bad)?;
            let l = l.trim().parse::<f64>().map_err(|_| bad())?;
            let h = h.trim().parse::<f64>().map_err(|_| bad())?;
            parts.push((l, h));
            rest = &inner[close + 1..];
        }
        RegionSpec::from_intervals(&parts)
    }
}

impl fmt::Display for RegionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("∅");
        }
        for (i, (l, h)) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str("∪")?;
            }
            write!(f, "({l},{h})")?;
        }
        Ok(())
    }
}

fn carrier_bounds(space: &MetricSpace, region: &RegionSpec) -> Result<(f64, f64)> {
    match space.kind() {
        SpaceKind::Interval { lo, hi } => Ok((*lo, *hi)),
        SpaceKind::LatticeLine => Ok((f64::NEG_INFINITY, f64::INFINITY)),
        SpaceKind::Cantor { .. } => Err(Error::Precondition(
            "prescribed sets on Cantor carriers are not supported".into(),
        )),
        _ => {
            if region.is_empty() {
                Err(Error::Precondition(
                    "synthesis needs an interval or the real line".into(),
                ))
            } else {
                Err(domain(
                    "G must lie in the non-isolated part of an interval or the real line",
                ))
            }
        }
    }
}

/// `g(x) = α min(1, d(x, F))` with `F = X \ G`.
#[derive(Clone, Debug)]
pub struct Cutoff {
    space: Arc<MetricSpace>,
    region: RegionSpec,
    alpha: f64,
    bounds: (f64, f64),
}

/// The cutoff for `F = X \ G`.
pub fn cutoff(space: Arc<MetricSpace>, region: RegionSpec, alpha: f64) -> Result<Cutoff> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(domain(format!("alpha must be positive, got {alpha}")));
    }
    let bounds = carrier_bounds(&space, &region)?;
    Ok(Cutoff {
        space,
        region,
        alpha,
        bounds,
    })
}

impl Cutoff {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn region(&self) -> &RegionSpec {
        &self.region
    }

    /// `d(x, F)`, infinite for `F = ∅`.
    pub fn distance_to_f(&self, x: &Point) -> Result<TwoFloat> {
        self.space.validate(x)?;
        let t = x.as_line().expect("line space");
        Ok(self.region.distance_to_f(t, self.bounds.0, self.bounds.1))
    }
}

impl ScalarFn for Cutoff {
    fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    fn value(&self, x: &Point) -> Result<TwoFloat> {
        let d = self.distance_to_f(x)?;
        let m = if d < TwoFloat::from(1.0) {
            d
        } else {
            TwoFloat::from(1.0)
        };
        Ok(m * self.alpha)
    }

    fn describe(&self) -> String {
        format!("cutoff:{},{}", self.alpha, self.region)
    }
}

/// `f = g·h` together with its ingredients.
#[derive(Clone, Debug)]
pub struct SynthFunction {
    g: Cutoff,
    h: TwEval,
}

impl SynthFunction {
    pub fn alpha(&self) -> f64 {
        self.g.alpha
    }

    pub fn a(&self) -> f64 {
        self.h.function().a()
    }

    pub fn b(&self) -> f64 {
        self.h.function().b()
    }

    pub fn g(&self) -> &Cutoff {
        &self.g
    }

    pub fn h(&self) -> &TwEval {
        &self.h
    }

    pub fn region(&self) -> &RegionSpec {
        &self.g.region
    }
}

impl ScalarFn for SynthFunction {
    fn space(&self) -> &Arc<MetricSpace> {
        &self.g.space
    }

    fn value(&self, x: &Point) -> Result<TwoFloat> {
        let g = self.g.value(x)?;
        if g == TwoFloat::from(0.0) {
            return Ok(g);
        }
        Ok(g * self.h.value(x)?)
    }

    fn describe(&self) -> String {
        format!("synth:{},{},{}", self.a(), self.b(), self.g.region)
    }
}

/// Builds `f = g·h` with `h` of type `(a, b)` and `α = (a - b)/a`.
pub fn synthesize(
    space: Arc<MetricSpace>,
    region: RegionSpec,
    a: f64,
    b: f64,
) -> Result<SynthFunction> {
    if !(a > b && b > 1.0 && a.is_finite()) {
        return Err(domain(format!("need a > b > 1, got a={a}, b={b}")));
    }
    let (lo, hi) = carrier_bounds(&space, &region)?;
    if region.intervals.iter().any(|&(l, h)| h <= lo || l >= hi) {
        return Err(domain(format!(
            "G = {region} is not contained in the space"
        )));
    }
    let g = cutoff(space.clone(), region, (a - b) / a)?;
    let h = TwEval::new(tw_on_space(space, a, b, 0, EVAL_TOL)?, EVAL_TOL)?;
    Ok(SynthFunction { g, h })
}

/// Deterministic sample sets for [`verify_prescribed_sets`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSets {
    #[serde(rename = "F")]
    pub f: Vec<Point>,
    #[serde(rename = "G")]
    pub g: Vec<Point>,
    #[serde(rename = "IntF")]
    pub int_f: Vec<Point>,
}

/// `n` points spread evenly by length over `pieces` (midpoint rule).
fn spread(pieces: &[(f64, f64)], n: usize) -> Vec<Point> {
    let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    if n == 0 || pieces.is_empty() {
        return Vec::new();
    }
    if total <= 0.0 {
        return pieces.iter().take(n).map(|p| Point::line(p.0)).collect();
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut s = (k as f64 + 0.5) / n as f64 * total;
        for &(a, b) in pieces {
            if s <= b - a || (a, b) == *pieces.last().unwrap() {
                out.push(Point::line((a + s).min(b)));
                break;
            }
            s -= b - a;
        }
    }
    out
}

/// `n` points in each of `F`, `G` and `Int F`, avoiding a `collar` around `∂G`
/// in `G` and `Int F`. The `F` samples start with the points of `∂G`. On the real line `F` is cut to `G` widened by 1.
pub fn region_samples(
    space: &MetricSpace,
    region: &RegionSpec,
    n: usize,
    collar: f64,
) -> Result<SampleSets> {
    let (mut lo, mut hi) = carrier_bounds(space, region)?;
    if !lo.is_finite() {
        let (l, h) = match (region.intervals.first(), region.intervals.last()) {
            (Some(f), Some(l)) => (f.0 - 1.0, l.1 + 1.0),
            _ => (0.0, 1.0),
        };
        lo = l;
        hi = h;
    }
    // boundary points of G first, then an even spread over F
    let mut f: Vec<Point> = region
        .intervals
        .iter()
        .flat_map(|&(l, h)| [l, h])
        .filter(|&t| t >= lo && t <= hi)
        .map(Point::line)
        .take(n)
        .collect();
    f.extend(spread(&region.f_pieces(lo, hi, 0.0), n - f.len()));
    Ok(SampleSets {
        f,
        g: spread(&region.g_pieces(lo, hi, collar), n),
        int_f: spread(&region.f_pieces(lo, hi, collar), n),
    })
}

/// Settings for [`verify_prescribed_sets`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub threshold: f64,
    pub collar: f64,
    pub budget: usize,
    /// Scales `a^{-n}` for `n` in this range.
    pub scales: (u32, u32),
    pub tol: f64,
}

impl VerifyOptions {
    /// Collar `10·resolution`, scales `a^{-5}..a^{-12}` (fewer when `b/a` is
    /// large), budget 32 and threshold `10^3`.
    pub fn for_function(sf: &SynthFunction) -> Self {
        let ratio = sf.b() / sf.a();
        let mut to = 12;
        while to > 8 && ratio.powi(to as i32) < 1e-20 {
            to -= 1;
        }
        VerifyOptions {
            threshold: crate::lipderiv::DEFAULT_THRESHOLD,
            collar: 10.0 * sf.space().resolution(),
            budget: 32,
            scales: (to - 7, to),
            tol: VERIFY_TOL,
        }
    }
}

/// A sample that broke its bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthFailure {
    pub set: &'static str,
    pub point: Point,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthReport {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    #[serde(rename = "G")]
    pub g: String,
    pub collar: f64,
    pub threshold: f64,
    #[serde(rename = "F_samples")]
    pub f_samples: usize,
    #[serde(rename = "IntF_samples")]
    pub int_f_samples: usize,
    #[serde(rename = "G_samples")]
    pub g_samples: usize,
    #[serde(rename = "F_max_Lip")]
    pub f_max_lip: f64,
    #[serde(rename = "IntF_max_LLip")]
    pub int_f_max_llip: f64,
    /// Smallest `lip` estimate over the `G` samples.
    #[serde(rename = "G_min_lip")]
    pub g_min_lip: f64,
    /// Smallest per-scale growth factor of `Lip^r f` over the tail of the schedule.
    #[serde(rename = "G_min_growth")]
    pub g_min_growth: f64,
    pub failures: Vec<SynthFailure>,
    pub passed: bool,
}

/// Checks `Lip f <= 1` on `F`, `𝕃ip^r f <= 1` on `Int F` with `r = d(x, G)`, and
/// the divergence flag of `lip f` on `G`.
pub fn verify_prescribed_sets(
    sf: &SynthFunction,
    samples: &SampleSets,
    opts: &VerifyOptions,
) -> Result<SynthReport> {
    let sched = tw_schedule(sf.a(), opts.scales.0, opts.scales.1);
    let finest = *sched.last().ok_or_else(|| domain("empty scale range"))?;
    let need = 2.0 * finest / opts.budget as f64;
    if sf.space().resolution() > need {
        return Err(Error::Precondition(format!(
            "space resolution {} is too coarse for scale {finest}; need at most {need}",
            sf.space().resolution()
        )));
    }
    let bound = 1.0 + opts.tol;

    let f_vals = samples
        .f
        .par_iter()
        .map(|x| estimate_big_lip(sf, x, &sched, opts.budget, opts.threshold).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let int_vals = samples
        .int_f
        .par_iter()
        .map(|x| {
            let r = sf.region().distance_to_g(x).unwrap_or(0.0).min(1.0);
            if r > 0.0 {
                llip_r_pairwise(sf, x, r, opts.budget).map(|e| e.value)
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let g_vals = samples
        .g
        .par_iter()
        .map(|x| {
            let e = estimate_lip(sf, x, &sched, opts.budget, opts.threshold)?;
            let per = crate::lipderiv::limit_estimates(sf, x, &sched, opts.budget, opts.threshold)?
                .per_radius;
            let t0 = per.len() / 2;
            let steps = (per.len() - 1 - t0) as f64;
            let growth = if per[t0] > 0.0 {
                (per[per.len() - 1] / per[t0]).powf(1.0 / steps)
            } else {
                0.0
            };
            Ok((e.value, e.diverged, growth))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut failures = Vec::new();
    for (x, v) in samples.f.iter().zip(&f_vals) {
        if !(*v <= bound) {
            failures.push(SynthFailure {
                set: "F",
                point: *x,
                value: *v,
            });
        }
    }
    for (x, v) in samples.int_f.iter().zip(&int_vals) {
        if !(*v <= bound) {
            failures.push(SynthFailure {
                set: "IntF",
                point: *x,
                value: *v,
            });
        }
    }
    for (x, (v, div, _)) in samples.g.iter().zip(&g_vals) {
        if !div {
            failures.push(SynthFailure {
                set: "G",
                point: *x,
                value: *v,
            });
        }
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(SynthReport {
        a: sf.a(),
        b: sf.b(),
        alpha: sf.alpha(),
        g: sf.region().to_string(),
        collar: opts.collar,
        threshold: opts.threshold,
        f_samples: samples.f.len(),
        int_f_samples: samples.int_f.len(),
        g_samples: samples.g.len(),
        f_max_lip: max(&f_vals),
        int_f_max_llip: max(&int_vals),
        g_min_lip: g_vals.iter().map(|t| t.0).fold(f64::INFINITY, f64::min),
        g_min_growth: g_vals.iter().map(|t| t.2).fold(f64::INFINITY, f64::min),
        passed: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Arc<MetricSpace> {
        Arc::new(MetricSpace::unit_interval(1e-40).unwrap())
    }

    #[test]
    fn parse_regions() {
        let r: RegionSpec = "(0.8,1) u (0.2,0.5)∪(0.4,0.6)".parse().unwrap();
        assert_eq!(r.intervals(), &[(0.2, 0.6), (0.8, 1.0)]);
        assert!("".parse::<RegionSpec>().unwrap().is_empty());
        assert!("(0.5,0.2)".parse::<RegionSpec>().is_err());
        assert!("[0,1]".parse::<RegionSpec>().is_err());
        assert_eq!(r.to_string(), "(0.2,0.6)∪(0.8,1)");
    }

    #[test]
    fn cutoff_examples() {
        let g = cutoff(unit(), "(0.2,0.8)".parse().unwrap(), 1.0).unwrap();
        assert_eq!(f64::from(g.value(&Point::line(0.5)).unwrap()), 0.3);
        for x in [0.0, 0.1, 0.2, 0.8, 1.0] {
            assert_eq!(f64::from(g.value(&Point::line(x)).unwrap()), 0.0);
        }
        let all = cutoff(unit(), "(-1,2)".parse().unwrap(), 0.5).unwrap();
        assert_eq!(f64::from(all.value(&Point::line(0.3)).unwrap()), 0.5);
        let edge = cutoff(unit(), "(-1,0.5)".parse().unwrap(), 1.0).unwrap();
        assert_eq!(f64::from(edge.value(&Point::line(0.1)).unwrap()), 0.4);
    }

    #[test]
    fn synthesize_examples() {
        let sf = synthesize(unit(), "(0.2,0.8)".parse().unwrap(), 600.0, 17.0).unwrap();
        assert_eq!(sf.alpha(), 583.0 / 600.0);
        let zero = synthesize(unit(), RegionSpec::empty(), 600.0, 17.0).unwrap();
        for x in [0.0, 0.3, 0.77] {
            assert_eq!(f64::from(zero.value(&Point::line(x)).unwrap()), 0.0);
        }
        let whole = synthesize(unit(), "(-1,2)".parse().unwrap(), 600.0, 17.0).unwrap();
        let x = Point::line(0.3);
        let h = f64::from(whole.h().value(&x).unwrap());
        assert_eq!(f64::from(whole.value(&x).unwrap()), whole.alpha() * h);
        assert!(matches!(
            synthesize(unit(), "(2,3)".parse().unwrap(), 600.0, 17.0),
            Err(Error::Domain(_))
        ));
        let finite = Arc::new(MetricSpace::point_cloud(vec![vec![0.0], vec![1.0]]).unwrap());
        assert!(matches!(
            synthesize(finite, "(0.2,0.8)".parse().unwrap(), 600.0, 17.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn samples_avoid_collar() {
        let r: RegionSpec = "(0.2,0.8)".parse().unwrap();
        let s = region_samples(&MetricSpace::unit_interval(1e-4).unwrap(), &r, 50, 1e-3).unwrap();
        assert_eq!((s.f.len(), s.g.len(), s.int_f.len()), (50, 50, 50));
        for x in &s.g {
            let t = x.line_f64().unwrap();
            assert!(t >= 0.201 && t <= 0.799);
        }
        for x in &s.int_f {
            assert!(r.distance_to_g(x).unwrap() >= 1e-3);
        }
        for x in &s.f {
            assert!(!r.contains(x));
        }
    }

    #[test]
    fn small_verification() {
        let sf = synthesize(unit(), "(0.2,0.8)".parse().unwrap(), 600.0, 17.0).unwrap();
        let s = region_samples(sf.space(), sf.region(), 4, 1e-3).unwrap();
        let mut opts = VerifyOptions::for_function(&sf);
        opts.collar = 1e-3;
        let rep = verify_prescribed_sets(&sf, &s, &opts).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.f_max_lip <= 1.0 + 1e-6);
        assert!(rep.g_min_growth > 1.0);
        let coarse = synthesize(
            Arc::new(MetricSpace::unit_interval(1e-4).unwrap()),
            "(0.2,0.8)".parse().unwrap(),
            600.0,
            17.0,
        )
        .unwrap();
        let err = verify_prescribed_sets(&coarse, &s, &VerifyOptions::for_function(&coarse));
        assert!(matches!(err, Err(Error::Precondition(_))));
    }
}
