//! Sampled estimators of the pointwise Lipschitz functionals.
//!
//! Every sampled supremum is a lower bound for the true supremum over the ball.
//! Estimates of the limits `Lip f(x)`, `lip f(x)` and `𝕃ip f(x)` are built from
//! the values `L_j = Lip^{r_j} f(x)` along a descending radius schedule:
//!
//! - `lip` is the minimum of `L_j` over the last half of the schedule;
//! - `Lip` is the minimum over `k` of `max L_j` over the window `k < j <= k + W`,
//!   where `W` is the length of that tail;
//! - `𝕃ip` is the same minimum of pairwise slopes over the samples of the window
//!   balls together with `x`.
//!
//! The three share samples, so `lip <= Lip <= 𝕃ip` holds exactly.

use std::fmt;

use serde::{Serialize, Serializer};
use twofloat::TwoFloat;

use crate::error::{domain, Error, Result};
use crate::func::ScalarFn;
use crate::space::Point;

/// Default threshold above which a growing estimate is flagged as divergent.
pub const DEFAULT_THRESHOLD: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Functional {
    #[serde(rename = "Lip_r_ball")]
    LipRBall,
    #[serde(rename = "Lip_r_closed")]
    LipRClosed,
    #[serde(rename = "Lip_r_sup")]
    LipRSup,
    #[serde(rename = "lip_r_inf")]
    LipRInf,
    #[serde(rename = "Lip_limsup")]
    LipLimsup,
    #[serde(rename = "lip_liminf")]
    LipLiminf,
    #[serde(rename = "LLip_local")]
    LLipLocal,
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Functional::LipRBall => "Lip_r_ball",
            Functional::LipRClosed => "Lip_r_closed",
            Functional::LipRSup => "Lip_r_sup",
            Functional::LipRInf => "lip_r_inf",
            Functional::LipLimsup => "Lip_limsup",
            Functional::LipLiminf => "lip_liminf",
            Functional::LLipLocal => "LLip_local",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Lower,
    Upper,
    TwoSided,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Witness {
    None,
    Point(Point),
    Pair(Point, Point),
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Witness::None => s.serialize_none(),
            Witness::Point(p) => p.serialize(s),
            Witness::Pair(p, q) => [p, q].serialize(s),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::None => Ok(()),
            Witness::Point(p) => write!(f, "{p}"),
            Witness::Pair(p, q) => write!(f, "{p};{q}"),
        }
    }
}

/// A sampled estimate of one functional at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeEstimate {
    pub functional: Functional,
    pub point: Point,
    /// Radius, or the largest radius of a window.
    pub radius: f64,
    /// Smallest radius of a window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_min: Option<f64>,
    pub value: f64,
    pub diverged: bool,
    pub witness: Witness,
    pub bound_side: BoundSide,
}

impl DerivativeEstimate {
    fn at(functional: Functional, x: &Point, r: f64, value: f64, witness: Witness) -> Self {
        DerivativeEstimate {
            functional,
            point: *x,
            radius: r,
            radius_min: None,
            value,
            diverged: false,
            witness,
            bound_side: BoundSide::Lower,
        }
    }
}

/// `max |f(u) - f(x)| / r` over `samples`, with the first maximizer.
fn ball_sup(f: &dyn ScalarFn, fx: TwoFloat, samples: &[Point], r: f64) -> Result<(f64, Witness)> {
    let mut best = 0.0;
    let mut witness = Witness::None;
    for u in samples {
        let q = f64::from((f.value(u)? - fx).abs() / r);
        if q > best {
            best = q;
            witness = Witness::Point(*u);
        }
    }
    Ok((best, witness))
}

fn ball(f: &dyn ScalarFn, x: &Point, r: f64, budget: usize, closed: bool) -> Result<Vec<Point>> {
    if closed {
        f.space().closed_ball_sample(x, r, budget)
    } else {
        f.space().ball_sample(x, r, budget)
    }
}

/// `Lip^r f(x) = sup_{u ∈ B(x,r)} |f(u) - f(x)| / r`, sampled.
pub fn lip_r_ball(
    f: &dyn ScalarFn,
    x: &Point,
    r: f64,
    budget: usize,
) -> Result<DerivativeEstimate> {
    let samples = ball(f, x, r, budget, false)?;
    let (v, w) = ball_sup(f, f.value(x)?, &samples, r)?;
    Ok(DerivativeEstimate::at(Functional::LipRBall, x, r, v, w))
}

/// `Lip^r_+ f(x)`, the same supremum over the closed ball.
pub fn lip_r_closed(
    f: &dyn ScalarFn,
    x: &Point,
    r: f64,
    budget: usize,
) -> Result<DerivativeEstimate> {
    let samples = ball(f, x, r, budget, true)?;
    let (v, w) = ball_sup(f, f.value(x)?, &samples, r)?;
    Ok(DerivativeEstimate::at(Functional::LipRClosed, x, r, v, w))
}

/// Geometric grid `r q, r q^2, ..., r q^count` inside `(0, r)`.
pub fn rho_grid(r: f64, ratio: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| r * ratio.powi(i as i32)).collect()
}

/// Geometric schedule `r0, r0 q, ..., r0 q^{count-1}`.
pub fn schedule(r0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| r0 * ratio.powi(i as i32)).collect()
}

/// Default schedule `2^{-k}`, `k = 3..=kmax`.
pub fn dyadic_schedule(kmax: u32) -> Vec<f64> {
    (3..=kmax).map(|k| 0.5f64.powi(k as i32)).collect()
}

/// Schedule `a^{-n}`, `n = from..=to`, matching the scales of a TW function.
pub fn tw_schedule(a: f64, from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|n| a.powi(-(n as i32))).collect()
}

fn check_grid(r: f64, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Precondition("radius grid is empty".into()));
    }
    let ok = grid.iter().all(|&p| p > 0.0 && p < r) && grid.windows(2).all(|w| w[1] < w[0]);
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "radius grid must be strictly descending inside (0, {r})"
        )))
    }
}

/// Per-radius values `L_j = Lip^{ρ_j} f(x)` with the samples used.
struct Sweep {
    fx: TwoFloat,
    values: Vec<f64>,
    witnesses: Vec<Witness>,
    samples: Vec<Vec<(Point, TwoFloat)>>,
}

fn sweep(f: &dyn ScalarFn, x: &Point, radii: &[f64], budget: usize, keep: bool) -> Result<Sweep> {
    let fx = f.value(x)?;
    let mut out = Sweep {
        fx,
        values: Vec::with_capacity(radii.len()),
        witnesses: Vec::with_capacity(radii.len()),
        samples: Vec::new(),
    };
    for &rho in radii {
        let pts = f.space().ball_sample(x, rho, budget)?;
        let mut best = 0.0;
        let mut witness = Witness::None;
        let mut kept = Vec::new();
        for u in pts {
            let fu = f.value(&u)?;
            let q = f64::from((fu - fx).abs() / rho);
            if q > best {
                best = q;
                witness = Witness::Point(u);
            }
            if keep {
                kept.push((u, fu));
            }
        }
        out.values.push(best);
        out.witnesses.push(witness);
        out.samples.push(kept);
    }
    Ok(out)
}

fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.map_or(true, |b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.map_or(true, |b| *v < values[b]) {
            best = Some(i);
        }
    }
    best
}

/// `Lip_r f(x) = sup_{0<ρ<r} Lip^ρ f(x)` over `rho`.
pub fn lip_big_r(
    f: &dyn ScalarFn,
    x: &Point,
    r: f64,
    rho: &[f64],
    budget: usize,
) -> Result<DerivativeEstimate> {
    check_grid(r, rho)?;
    let s = sweep(f, x, rho, budget, false)?;
    let i = argmax(&s.values).expect("nonempty");
    let mut e = DerivativeEstimate::at(Functional::LipRSup, x, r, s.values[i], s.witnesses[i]);
    e.radius_min = rho.last().copied();
    Ok(e)
}

/// `lip_r f(x) = inf_{0<ρ<r} Lip^ρ f(x)` over `rho`.
pub fn lip_small_r(
    f: &dyn ScalarFn,
    x: &Point,
    r: f64,
    rho: &[f64],
    budget: usize,
) -> Result<DerivativeEstimate> {
    check_grid(r, rho)?;
    let s = sweep(f, x, rho, budget, false)?;
    let i = argmin(&s.values).expect("nonempty");
    let mut e = DerivativeEstimate::at(Functional::LipRInf, x, r, s.values[i], s.witnesses[i]);
    e.radius_min = rho.last().copied();
    e.bound_side = BoundSide::TwoSided;
    Ok(e)
}

/// Largest slope `|f(u) - f(v)| / |u - v|` over pairs from `pts`.
fn pair_sup(f: &dyn ScalarFn, pts: &[(Point, TwoFloat)]) -> (f64, Witness) {
    let mut best = 0.0;
    let mut witness = Witness::None;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if let Some(q) = slope(f, &pts[i], &pts[j]) {
                if q > best {
                    best = q;
                    witness = Witness::Pair(pts[i].0, pts[j].0);
                }
            }
        }
    }
    (best, witness)
}

fn slope(f: &dyn ScalarFn, a: &(Point, TwoFloat), b: &(Point, TwoFloat)) -> Option<f64> {
    let d = f.space().raw_distance(&a.0, &b.0)?;
    if d > 0.0 {
        Some(f64::from((a.1 - b.1).abs() / d))
    } else {
        None
    }
}

/// `𝕃ip^r f(x) = sup_{u≠v ∈ B(x,r)} |f(u) - f(v)| / |u - v|`, over ball samples and `x`.
pub fn llip_r_pairwise(
    f: &dyn ScalarFn,
    x: &Point,
    r: f64,
    budget: usize,
) -> Result<DerivativeEstimate> {
    let mut pts = vec![(*x, f.value(x)?)];
    for u in f.space().ball_sample(x, r, budget)? {
        let fu = f.value(&u)?;
        pts.push((u, fu));
    }
    let (v, w) = pair_sup(f, &pts);
    Ok(DerivativeEstimate::at(Functional::LLipLocal, x, r, v, w))
}

/// `lip_r`, `Lip_r` and `𝕃ip^r` at one radius from shared samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipProfile {
    pub lip_small: DerivativeEstimate,
    pub lip_big: DerivativeEstimate,
    pub llip: DerivativeEstimate,
}

/// Computes `lip_r <= Lip_r <= 𝕃ip^r` on the grid `rho`; the pairwise sup runs
/// over `x` and every sample drawn for the grid balls.
pub fn lip_profile(
    f: &dyn ScalarFn,
    x: &Point,
    r: f64,
    rho: &[f64],
    budget: usize,
) -> Result<LipProfile> {
    check_grid(r, rho)?;
    let s = sweep(f, x, rho, budget, true)?;
    let hi = argmax(&s.values).expect("nonempty");
    let lo = argmin(&s.values).expect("nonempty");
    let mut lip_big =
        DerivativeEstimate::at(Functional::LipRSup, x, r, s.values[hi], s.witnesses[hi]);
    lip_big.radius_min = rho.last().copied();
    let mut lip_small =
        DerivativeEstimate::at(Functional::LipRInf, x, r, s.values[lo], s.witnesses[lo]);
    lip_small.radius_min = rho.last().copied();
    lip_small.bound_side = BoundSide::TwoSided;
    let mut pts = vec![(*x, s.fx)];
    pts.extend(s.samples.into_iter().flatten());
    let (v, w) = pair_sup(f, &pts);
    let llip = DerivativeEstimate::at(Functional::LLipLocal, x, r, v, w);
    Ok(LipProfile {
        lip_small,
        lip_big,
        llip,
    })
}

/// Estimates of the three limit functionals at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitEstimates {
    pub lip: DerivativeEstimate,
    #[serde(rename = "Lip")]
    pub big_lip: DerivativeEstimate,
    #[serde(rename = "LLip")]
    pub llip: DerivativeEstimate,
    /// `Lip^{r_j} f(x)` along the schedule.
    pub per_radius: Vec<f64>,
}

/// Growth test shared by all divergence flags: value above `threshold` and the
/// values at the three smallest radii nondecreasing.
pub fn divergence_flag(per_radius: &[f64], value: f64, threshold: f64) -> bool {
    let n = per_radius.len();
    if n < 3 || !(value > threshold) {
        return false;
    }
    per_radius[n - 3] <= per_radius[n - 2] && per_radius[n - 2] <= per_radius[n - 1]
}

fn check_schedule(sched: &[f64]) -> Result<()> {
    if sched.len() < 2 {
        return Err(Error::Precondition(
            "radius schedule needs at least two radii".into(),
        ));
    }
    if sched.iter().all(|r| *r > 0.0) && sched.windows(2).all(|w| w[1] < w[0]) {
        Ok(())
    } else {
        Err(domain(
            "radius schedule must be positive and strictly descending",
        ))
    }
}

/// `lip`, `Lip` and `𝕃ip` estimates along a descending schedule.
pub fn limit_estimates(
    f: &dyn ScalarFn,
    x: &Point,
    sched: &[f64],
    budget: usize,
    threshold: f64,
) -> Result<LimitEstimates> {
    limit_impl(f, x, sched, budget, threshold, true)
}

fn limit_impl(
    f: &dyn ScalarFn,
    x: &Point,
    sched: &[f64],
    budget: usize,
    threshold: f64,
    with_pairs: bool,
) -> Result<LimitEstimates> {
    check_schedule(sched)?;
    let k = sched.len();
    let t0 = k / 2;
    let w = k - t0;
    let s = sweep(f, x, sched, budget, with_pairs)?;
    let r_min = sched[k - 1];

    let tail = &s.values[t0..];
    let i = t0 + argmin(tail).expect("nonempty tail");
    let mut lip = DerivativeEstimate::at(
        Functional::LipLiminf,
        x,
        sched[t0],
        s.values[i],
        s.witnesses[i],
    );

    // windows (start, start + w], start = 0..k-1-w
    let mut big: Option<(f64, usize, usize)> = None;
    for start in 0..k - w {
        let win = &s.values[start + 1..=start + w];
        let j = start + 1 + argmax(win).expect("nonempty window");
        if big.map_or(true, |(v, _, _)| s.values[j] < v) {
            big = Some((s.values[j], start, j));
        }
    }
    let (bv, bstart, bj) = big.expect("at least one window");
    let mut big_lip =
        DerivativeEstimate::at(Functional::LipLimsup, x, sched[bstart], bv, s.witnesses[bj]);

    let mut llip = DerivativeEstimate::at(Functional::LLipLocal, x, sched[0], bv, Witness::None);
    if with_pairs {
        let fx = s.fx;
        let mut best: Option<(f64, usize, Witness)> = None;
        for start in 0..k - w {
            let mut pts = vec![(*x, fx)];
            for j in start + 1..=start + w {
                pts.extend(s.samples[j].iter().copied());
            }
            let (v, wit) = pair_sup(f, &pts);
            if best.map_or(true, |(b, _, _)| v < b) {
                best = Some((v, start, wit));
            }
        }
        let (v, start, wit) = best.expect("at least one window");
        llip = DerivativeEstimate::at(Functional::LLipLocal, x, sched[start], v, wit);
    }

    for e in [&mut lip, &mut big_lip, &mut llip] {
        e.radius_min = Some(r_min);
        e.diverged = divergence_flag(&s.values, e.value, threshold);
    }
    Ok(LimitEstimates {
        lip,
        big_lip,
        llip,
        per_radius: s.values,
    })
}

/// `Lip f(x)` estimate (limsup proxy).
pub fn estimate_big_lip(
    f: &dyn ScalarFn,
    x: &Point,
    sched: &[f64],
    budget: usize,
    threshold: f64,
) -> Result<DerivativeEstimate> {
    limit_impl(f, x, sched, budget, threshold, false).map(|e| e.big_lip)
}

/// `lip f(x)` estimate (liminf proxy).
pub fn estimate_lip(
    f: &dyn ScalarFn,
    x: &Point,
    sched: &[f64],
    budget: usize,
    threshold: f64,
) -> Result<DerivativeEstimate> {
    limit_impl(f, x, sched, budget, threshold, false).map(|e| e.lip)
}

/// `𝕃ip f(x)` estimate.
pub fn estimate_llip(
    f: &dyn ScalarFn,
    x: &Point,
    sched: &[f64],
    budget: usize,
    threshold: f64,
) -> Result<DerivativeEstimate> {
    limit_impl(f, x, sched, budget, threshold, true).map(|e| e.llip)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::func::{Builtin, BuiltinKind};
    use crate::space::MetricSpace;

    fn unit(res: f64, kind: BuiltinKind) -> Builtin {
        Builtin::new(Arc::new(MetricSpace::unit_interval(res).unwrap()), kind).unwrap()
    }

    #[test]
    fn ball_sup_examples() {
        let c = unit(1e-4, BuiltinKind::Const(2.0));
        assert_eq!(
            lip_r_ball(&c, &Point::line(0.3), 0.1, 50).unwrap().value,
            0.0
        );
        let id = unit(1e-6, BuiltinKind::Identity);
        let e = lip_r_ball(&id, &Point::line(0.5), 0.1, 400).unwrap();
        assert!((e.value - 0.995).abs() < 1e-12, "{}", e.value);
        let closed = lip_r_closed(&id, &Point::line(0.5), 0.1, 400).unwrap();
        assert!((closed.value - 1.0).abs() < 1e-12);
        assert_eq!(e.bound_side, BoundSide::Lower);
    }

    #[test]
    fn isolated_point_is_zero() {
        let s = Arc::new(MetricSpace::finite_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        let f = Builtin::new(s.clone(), BuiltinKind::DistTo(Point::index(0))).unwrap();
        let x = Point::index(0);
        assert_eq!(lip_r_ball(&f, &x, 0.5, 10).unwrap().value, 0.0);
        assert_eq!(lip_r_ball(&f, &x, 1.0, 10).unwrap().value, 0.0);
        assert_eq!(lip_r_closed(&f, &x, 1.0, 10).unwrap().value, 1.0);
    }

    #[test]
    fn big_and_small() {
        let id = unit(1e-6, BuiltinKind::Identity);
        let x = Point::line(0.5);
        let grid = rho_grid(0.1, 0.5, 6);
        assert!((lip_big_r(&id, &x, 0.1, &grid, 400).unwrap().value - 1.0).abs() < 0.01);
        assert!((lip_small_r(&id, &x, 0.1, &grid, 400).unwrap().value - 1.0).abs() < 0.01);
        assert!(matches!(
            lip_big_r(&id, &x, 0.1, &[], 10),
            Err(Error::Precondition(_))
        ));
        let d = unit(1e-6, BuiltinKind::DistTo(x));
        let grid: Vec<f64> = (1..=60).map(|i| 0.6 - 0.01 * i as f64 + 0.005).collect();
        let v = lip_small_r(&d, &x, 0.6, &grid, 2000).unwrap().value;
        assert!((v - 0.5 / 0.595).abs() < 2e-3, "{v}");
    }

    #[test]
    fn pairwise_square() {
        let sq = unit(1e-6, BuiltinKind::Square);
        let e = llip_r_pairwise(&sq, &Point::line(0.5), 0.1, 200).unwrap();
        assert!(e.value <= 1.2 && e.value > 1.18, "{}", e.value);
        assert!(matches!(e.witness, Witness::Pair(_, _)));
    }

    #[test]
    fn limits_on_identity() {
        let id = unit(1e-9, BuiltinKind::Identity);
        let est = limit_estimates(&id, &Point::line(0.4), &dyadic_schedule(14), 64, 1e3).unwrap();
        assert!(est.lip.value > 0.95 && est.lip.value <= 1.0);
        assert!(est.lip.value <= est.big_lip.value && est.big_lip.value <= est.llip.value);
        assert!(!est.big_lip.diverged);
    }
}
