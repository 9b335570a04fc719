//! Constructive checks of the blow-up theorems for TW functions.
//!
//! Big lip: for a TW function of monotonic type `(a, b)` with `b > 2`, each scale
//! `n` yields a point `u_n` with `|f(u_n) - f(x)| / |u_n - x| >= c b^n`, where
//! `c = (b-2)/(b-1)` when `x` lies in some `S_{n0}` and `c = (b-2)/(b(b-1))`
//! otherwise.
//!
//! Little lip: when `2b/(a-b) + 1/(b-1) < H/8` and `λ < H`, every radius
//! `r` with `a^{-n} <= r < a^{-n+1}` yields `Lip^r f(x) >= (γ/a) b^n` with
//! `γ = λ/8 - 2b/(a-b) - 1/(b-1)`.

use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{domain, Error, Result};
use crate::func::{ScalarFn, TwEval};
use crate::lipderiv::lip_r_ball;
use crate::nets::Net;
use crate::porosity::{default_r_grid, hermeticity_at, DEFAULT_BUDGET, RH_LEVELS};
use crate::space::{MetricSpace, Point};
use crate::tvdw::TWFunction;

/// Distance below which `x` is treated as a net point.
pub const NET_POINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    NetPoint,
    OffNet,
    /// Little-lip record built from the displacement lemma.
    Displacement,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseTag::NetPoint => "net_point",
            CaseTag::OffNet => "off_net",
            CaseTag::Displacement => "displacement",
        })
    }
}

/// Evidence for one scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessRecord {
    pub x: Point,
    pub n: u32,
    /// Radius `r` for little-lip records.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub u_n: Point,
    pub rho_n: f64,
    /// `|f(u_n) - f(x)| / rho_n`, or `/ r` for little-lip records.
    pub ratio: f64,
    pub guaranteed_bound: f64,
    pub case_tag: CaseTag,
    pub pass: bool,
}

impl WitnessRecord {
    /// `ratio / guaranteed_bound - 1`.
    pub fn margin(&self) -> f64 {
        self.ratio / self.guaranteed_bound - 1.0
    }
}

/// Counts and the smallest relative margin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub tested: usize,
    pub passed: usize,
    pub min_margin: f64,
}

pub fn summarize(records: &[WitnessRecord]) -> Summary {
    Summary {
        tested: records.len(),
        passed: records.iter().filter(|r| r.pass).count(),
        min_margin: records
            .iter()
            .map(WitnessRecord::margin)
            .fold(f64::INFINITY, f64::min),
    }
}

/// Parameters for the little-lip theorem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Params {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// `2b/(a-b) + 1/(b-1)`.
    pub lhs: f64,
}

/// `2b/(a-b) + 1/(b-1)`.
pub fn hypothesis_lhs(a: f64, b: f64) -> f64 {
    2.0 * b / (a - b) + 1.0 / (b - 1.0)
}

/// `γ = λ/8 - 2b/(a-b) - 1/(b-1)`.
pub fn gamma(a: f64, b: f64, lambda: f64) -> f64 {
    lambda / 8.0 - hypothesis_lhs(a, b)
}

/// Checks `a > b > 1` and `2b/(a-b) + 1/(b-1) < h/8`.
pub fn check_hypothesis(a: f64, b: f64, h: f64) -> Result<f64> {
    if !(a > b && b > 1.0) {
        return Err(domain(format!(
            "hypothesis a > b > 1 fails for a={a}, b={b}"
        )));
    }
    let lhs = hypothesis_lhs(a, b);
    if lhs < h / 8.0 {
        Ok(lhs)
    } else {
        Err(domain(format!(
            "hypothesis 2b/(a-b) + 1/(b-1) < H/8 fails: {lhs} >= {}",
            h / 8.0
        )))
    }
}

/// Integer `(a, b)` and `λ = 0.99 H` with `γ > 0`.
///
/// `b` is the least integer with `1/(b-1) < λ/16` and `a` the least integer
/// above `b` with `2b/(a-b) < λ/16`, so both terms of the hypothesis fit in `λ/8`.
pub fn choose_params(h_est: f64) -> Result<Params> {
    if !(h_est > 0.0 && h_est <= 1.0) {
        return Err(domain(format!("H must lie in (0, 1], got {h_est}")));
    }
    let lambda = 0.99 * h_est;
    let half = lambda / 16.0;
    let mut b = 2.0;
    while 1.0 / (b - 1.0) >= half {
        b += 1.0;
    }
    let mut a = b + 1.0;
    while 2.0 * b / (a - b) >= half {
        a += 1.0;
    }
    let g = gamma(a, b, lambda);
    assert!(g > 0.0, "gamma must be positive");
    Ok(Params {
        a,
        b,
        lambda,
        gamma: g,
        lhs: hypothesis_lhs(a, b),
    })
}

fn eval_diff(f: &TWFunction, u: &Point, x: &Point, tol: f64) -> Result<TwoFloat> {
    let fu = f.eval_dd(u, tol)?.0;
    let fx = f.eval_dd(x, tol)?.0;
    Ok((fu - fx).abs())
}

/// Big-lip witnesses for `n` in `ns`.
pub fn big_lip_witnesses(
    f: &TWFunction,
    x: &Point,
    ns: std::ops::RangeInclusive<u32>,
) -> Result<Vec<WitnessRecord>> {
    let b = f.b();
    if !(b > 2.0) {
        return Err(domain(format!("hypothesis b > 2 fails: b = {b}")));
    }
    let h = f.hierarchy();
    if !h.monotone() {
        return Err(Error::Precondition(
            "big-lip witnesses need a hierarchy of monotonic type".into(),
        ));
    }
    let space = f.space();
    space.validate(x)?;
    let alpha = (b - 2.0) / (b - 1.0);
    let beta = (b - 2.0) / (b * (b - 1.0));
    let mut out = Vec::new();
    let mut in_net = false;
    for n in 0..=*ns.end() {
        in_net |= f64::from(h.phi(x, n)?) < NET_POINT_TOL;
        if n < *ns.start() {
            continue;
        }
        let bn = b.powi(n as i32);
        let scale = f64::from(h.base().scale(n));
        let (u, rho, bound, tag) = if in_net {
            // farthest of a coarse grid in B(x, 1/(2a^n))
            let pts = space.ball_sample(x, scale / 2.0, 10)?;
            let u = *pts.first().ok_or_else(|| {
                Error::Resolution(format!(
                    "ball of radius {} around {x} has no samples",
                    scale / 2.0
                ))
            })?;
            let rho = space.distance_dd(x, &u)?;
            (u, rho, alpha * bn, CaseTag::NetPoint)
        } else {
            let (u, rho) = h
                .nearest(x, n)?
                .ok_or_else(|| Error::Resolution(format!("net S_{n} is empty")))?;
            (u, rho, beta * bn, CaseTag::OffNet)
        };
        let rho_f = f64::from(rho);
        if !(rho_f > 0.0) {
            return Err(Error::Resolution(format!(
                "no witness distinct from {x} at scale {n}"
            )));
        }
        let slack = 1e-6 * bn;
        let tol = (1e-8 * bn * rho_f).max(f64::MIN_POSITIVE);
        let ratio = f64::from(eval_diff(f, &u, x, tol)? / rho);
        out.push(WitnessRecord {
            x: *x,
            n,
            r: None,
            u_n: u,
            rho_n: rho_f,
            ratio,
            guaranteed_bound: bound,
            case_tag: tag,
            pass: ratio >= bound - slack,
        });
    }
    Ok(out)
}

/// Point `u ∈ B[x, ε]` maximizing `|φ(u) - φ(x)|` for `φ = d(·, S)`, with that displacement.
///
/// Candidates are the nearest net point, a sampled `u` with
/// `λ 3ε/8 <= |u - x| <= 3ε/8`, and the closed-ball samples.
pub fn net_displacement_witness(
    space: &MetricSpace,
    net: &Net,
    x: &Point,
    lambda: f64,
) -> Result<(Point, f64)> {
    let rep = hermeticity_at(space, x, &default_r_grid(space)?, DEFAULT_BUDGET)?;
    if !(lambda > 0.0 && lambda < rep.h_estimate) {
        return Err(domain(format!(
            "need 0 < lambda < H(X,x) = {}, got {lambda}",
            rep.h_estimate
        )));
    }
    let eps = net.epsilon();
    let rh = rh_lookup(space, x, lambda, &rep)?;
    if !(eps < rh) {
        return Err(domain(format!(
            "epsilon {eps} is not below RH_lambda = {rh}"
        )));
    }
    displacement(space, net, x, lambda, DEFAULT_BUDGET)
}

fn rh_lookup(
    space: &MetricSpace,
    x: &Point,
    lambda: f64,
    rep: &crate::porosity::HermeticityReport,
) -> Result<f64> {
    if let Some((_, r)) = rep.rh_table.iter().find(|(l, _)| *l == lambda) {
        return Ok(*r);
    }
    crate::porosity::radius_of_hermeticity(space, x, lambda, &rep.r_grid, DEFAULT_BUDGET)
}

fn displacement(
    space: &MetricSpace,
    net: &Net,
    x: &Point,
    lambda: f64,
    budget: usize,
) -> Result<(Point, f64)> {
    let eps = net.epsilon();
    let phi_x = net.distance_dd(x)?;
    let mut cands: Vec<Point> = space.closed_ball_sample(x, eps, budget)?;
    if let Some((s, d)) = net.nearest(x)? {
        if d < eps {
            cands.push(s);
        }
    }
    let shell = crate::porosity::hermeticity_witness(space, x, lambda, 3.0 * eps / 8.0, budget)?;
    cands.extend(shell);
    let mut best: Option<(Point, TwoFloat)> = None;
    for u in cands {
        let d = (net.distance_dd(&u)? - phi_x).abs();
        if best.map_or(true, |(_, b)| d >= b) {
            best = Some((u, d));
        }
    }
    let (u, d) =
        best.ok_or_else(|| Error::Resolution(format!("closed ball around {x} has no samples")))?;
    let need = lambda * eps / 8.0;
    if f64::from(d) < need {
        return Err(Error::Resolution(format!(
            "counterexample: best displacement {} below lambda eps / 8 = {need} at {x}",
            f64::from(d)
        )));
    }
    Ok((u, f64::from(d)))
}

/// `n(r)`: the index with `a^{-n} <= r < a^{-n+1}`.
pub fn scale_index(a: f64, r: f64) -> u32 {
    let mut n = 0u32;
    let mut eps = 1.0f64;
    while eps > r * (1.0 + 1e-12) {
        n += 1;
        eps /= a;
    }
    n
}

/// Little-lip records for each `r` in `r_list`, using the displacement lemma at scale `a^{-n(r)}`.
///
/// `h_space` is the hermeticity `H(X)` used in the hypothesis. Each record also
/// folds in a sampled `Lip^r f(x)` with `budget` points.
pub fn little_lip_bounds(
    f: &TWFunction,
    x: &Point,
    r_list: &[f64],
    lambda: f64,
    h_space: f64,
    budget: usize,
) -> Result<Vec<WitnessRecord>> {
    let (a, b) = (f.a(), f.b());
    check_hypothesis(a, b, h_space)?;
    if !(lambda > 0.0 && lambda < h_space) {
        return Err(domain(format!(
            "need 0 < lambda < H = {h_space}, got {lambda}"
        )));
    }
    let g = gamma(a, b, lambda);
    if !(g > 0.0) {
        return Err(domain(format!(
            "gamma = lambda/8 - {} is not positive",
            hypothesis_lhs(a, b)
        )));
    }
    let space = f.space();
    let rep = hermeticity_at(space, x, &default_r_grid(space)?, DEFAULT_BUDGET)?;
    if !(lambda < rep.h_estimate) {
        return Err(domain(format!(
            "lambda {lambda} is not below H(X,x) = {} at {x}",
            rep.h_estimate
        )));
    }
    let rh = if RH_LEVELS.contains(&lambda) {
        rh_lookup(space, x, lambda, &rep)?
    } else {
        crate::porosity::radius_of_hermeticity(space, x, lambda, &rep.r_grid, DEFAULT_BUDGET)?
    };
    let delta = rh.min(1.0);
    let h = f.hierarchy();
    let mut out = Vec::new();
    for &r in r_list {
        if !(r > 0.0 && r < delta) {
            return Err(domain(format!(
                "radius {r} is outside (0, min(1, RH_lambda) = {delta})"
            )));
        }
        let n = scale_index(a, r);
        let net = h.level(n)?;
        let (u, _) = displacement(space, &net, x, lambda, budget.max(64))?;
        let bn = b.powi(n as i32);
        let bound = g / a * bn;
        let tol = (1e-9 * bound * r).max(f64::MIN_POSITIVE);
        let mut ratio = f64::from(eval_diff(f, &u, x, tol)? / r);
        let tw = TwEval::new(f.clone(), tol)?;
        let sampled = lip_r_ball(&tw as &dyn ScalarFn, x, r, budget)?;
        ratio = ratio.max(sampled.value);
        let rho = f64::from(space.distance_dd(x, &u)?);
        out.push(WitnessRecord {
            x: *x,
            n,
            r: Some(r),
            u_n: u,
            rho_n: rho,
            ratio,
            guaranteed_bound: bound,
            case_tag: CaseTag::Displacement,
            pass: ratio >= bound - 10.0 * tol / r,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    #[test]
    fn params() {
        let p = choose_params(1.0).unwrap();
        assert_eq!((p.a, p.b), (600.0, 18.0));
        assert!(p.gamma > 0.0 && p.lhs < p.lambda / 8.0);
        let q = choose_params(0.5).unwrap();
        assert!(q.b >= 33.0);
        let lhs = hypothesis_lhs(600.0, 17.0);
        assert!((lhs - 0.12082).abs() < 1e-5, "{lhs}");
        assert!((gamma(600.0, 17.0, 0.99) - 0.00293).abs() < 1e-5);
        assert!(check_hypothesis(4.0, 2.0, 1.0).is_err());
        let lhs = hypothesis_lhs(562.0, 17.0);
        assert!(lhs < 0.125);
    }

    #[test]
    fn big_lip_examples() {
        let s = Arc::new(MetricSpace::unit_interval(1e-30).unwrap());
        let f = TWFunction::lattice(s.clone(), 5.0, 3.0, 0).unwrap();
        let recs = big_lip_witnesses(&f, &Point::line(0.0), 4..=4).unwrap();
        let r = &recs[0];
        assert_eq!(r.case_tag, CaseTag::NetPoint);
        assert_eq!(r.guaranteed_bound, 40.5);
        assert!((r.rho_n - 0.4 * 5f64.powi(-4)).abs() < 1e-15);
        assert!(r.pass && r.ratio >= 40.5);
        let x = Point::line(std::f64::consts::FRAC_1_SQRT_2);
        let recs = big_lip_witnesses(&f, &x, 3..=3).unwrap();
        assert_eq!(recs[0].case_tag, CaseTag::OffNet);
        assert!((recs[0].guaranteed_bound - 4.5).abs() < 1e-12);
        assert!(recs[0].pass);
        let g = TWFunction::lattice(s, 5.0, 2.0, 0).unwrap();
        assert!(matches!(
            big_lip_witnesses(&g, &x, 1..=2),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn displacement_examples() {
        let s = Arc::new(MetricSpace::unit_interval(1e-6).unwrap());
        let pts = [0.0, 0.25, 0.5, 0.75, 1.0].map(Point::line).to_vec();
        let net = Net::explicit(s.clone(), 0.25, pts).unwrap();
        let (u, d) = net_displacement_witness(&s, &net, &Point::line(0.5), 0.9).unwrap();
        assert!((d - 0.125).abs() < 1e-9);
        assert!((u.line_f64().unwrap() - 0.625).abs() < 1e-9);
        let (u, d) = net_displacement_witness(&s, &net, &Point::line(0.1), 0.9).unwrap();
        assert!((d - 0.1).abs() < 1e-9);
        let uc = u.line_f64().unwrap();
        assert!(uc.abs() < 1e-9 || (uc - 0.25).abs() < 1e-9);
        assert!(matches!(
            net_displacement_witness(&s, &net, &Point::line(0.5), 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn little_lip_first_scales() {
        let s = Arc::new(MetricSpace::unit_interval(1e-30).unwrap());
        let f = TWFunction::lattice(s, 600.0, 17.0, 0).unwrap();
        let e1 = 1.0 / 600.0;
        let recs =
            little_lip_bounds(&f, &Point::line(0.3), &[e1, e1 / 600.0], 0.99, 1.0, 64).unwrap();
        assert_eq!(recs[0].n, 1);
        assert!((recs[0].guaranteed_bound - gamma(600.0, 17.0, 0.99) / 600.0 * 17.0).abs() < 1e-12);
        assert!(recs.iter().all(|r| r.pass));
        assert!(recs[1].guaranteed_bound > recs[0].guaranteed_bound);
        let g = TWFunction::lattice(
            Arc::new(MetricSpace::unit_interval(1e-6).unwrap()),
            4.0,
            2.0,
            0,
        )
        .unwrap();
        assert!(matches!(
            little_lip_bounds(&g, &Point::line(0.3), &[0.1], 0.5, 1.0, 16),
            Err(Error::Domain(_))
        ));
    }
}
