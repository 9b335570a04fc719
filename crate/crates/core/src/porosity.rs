//! Hermeticity, shell porosity and radius of hermeticity.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::space::{MetricSpace, Point, SpaceKind};

/// Default ball budget for continuous spaces.
pub const DEFAULT_BUDGET: usize = 1000;

/// Levels `λ` reported in the RH table (those below the H estimate).
pub const RH_LEVELS: [f64; 4] = [0.1, 0.25, 0.5, 0.9];

/// Per-point report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HermeticityReport {
    pub point: Point,
    pub r_grid: Vec<f64>,
    /// `(1/r) sup_{u ∈ B(x,r)} |u - x|` per radius.
    pub ratio_per_r: Vec<f64>,
    /// Widest empty shell relative to `r` per radius.
    pub shell_per_r: Vec<f64>,
    #[serde(rename = "H_estimate")]
    pub h_estimate: f64,
    pub p_s_estimate: f64,
    #[serde(rename = "RH_table")]
    pub rh_table: Vec<(f64, f64)>,
}

/// Geometric grid `rmax 3^{-m/8}` down to `rmin`.
pub fn r_grid(rmax: f64, rmin: f64) -> Result<Vec<f64>> {
    if !(rmin > 0.0 && rmax >= rmin && rmax.is_finite()) {
        return Err(domain(format!(
            "need 0 < rmin <= rmax, got rmin={rmin}, rmax={rmax}"
        )));
    }
    let mut out = Vec::new();
    let mut m = 0;
    loop {
        let r = rmax * 3f64.powf(-(m as f64) / 8.0);
        if r < rmin * (1.0 - 1e-12) {
            break;
        }
        out.push(r);
        m += 1;
    }
    Ok(out)
}

/// Default radius grid: from the diameter down to a scale resolved by the space.
pub fn default_r_grid(space: &MetricSpace) -> Result<Vec<f64>> {
    match space.kind() {
        SpaceKind::Cantor { level } => r_grid(1.0, 3f64.powi(-(level.saturating_sub(1) as i32))),
        SpaceKind::PointCloud { .. } | SpaceKind::FiniteMatrix { .. } => {
            let gap = space.min_positive_gap();
            if gap.is_finite() {
                r_grid(space.diameter(), gap / 4.0)
            } else {
                r_grid(1.0, 0.25)
            }
        }
        SpaceKind::LatticeLine => r_grid(1.0, 200.0 * space.resolution()),
        _ => {
            let diam = space.diameter();
            r_grid(diam, (200.0 * space.resolution()).min(diam))
        }
    }
}

/// Sampled distances from `x` inside the open ball, ascending, starting with 0.
fn distances(space: &MetricSpace, x: &Point, r: f64, budget: usize) -> Result<Vec<f64>> {
    let mut d = vec![0.0];
    let mut rest = space
        .ball_sample(x, r, budget)?
        .iter()
        .map(|u| space.distance_dd(x, u).map(f64::from))
        .collect::<Result<Vec<_>>>()?;
    rest.reverse();
    d.extend(rest);
    Ok(d)
}

fn ratio_and_shell(d: &[f64], r: f64) -> (f64, f64) {
    let far = *d.last().expect("contains 0");
    let gap = d.windows(2).map(|w| w[1] - w[0]).fold(r - far, f64::max);
    ((far / r).clamp(0.0, 1.0), (gap / r).clamp(0.0, 1.0))
}

fn check_r_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Precondition("radius grid is empty".into()));
    }
    if grid.iter().all(|r| *r > 0.0) && grid.windows(2).all(|w| w[1] < w[0]) {
        Ok(())
    } else {
        Err(domain(
            "radius grid must be positive and strictly descending",
        ))
    }
}

fn tail(values: &[f64]) -> &[f64] {
    &values[values.len() / 2..]
}

/// `H(X,x)` and `p^s(X,x)` over a descending grid, with the RH table.
pub fn hermeticity_at(
    space: &MetricSpace,
    x: &Point,
    grid: &[f64],
    budget: usize,
) -> Result<HermeticityReport> {
    check_r_grid(grid)?;
    space.validate(x)?;
    let mut ratio = Vec::with_capacity(grid.len());
    let mut shell = Vec::with_capacity(grid.len());
    for &r in grid {
        let (a, s) = ratio_and_shell(&distances(space, x, r, budget)?, r);
        ratio.push(a);
        shell.push(s);
    }
    let h = tail(&ratio).iter().copied().fold(f64::INFINITY, f64::min);
    let p = tail(&shell).iter().copied().fold(0.0, f64::max);
    let rh_table = RH_LEVELS
        .iter()
        .filter(|&&l| l < h)
        .filter_map(|&l| rh_from_ratios(grid, &ratio, l).map(|r| (l, r)))
        .collect();
    Ok(HermeticityReport {
        point: *x,
        r_grid: grid.to_vec(),
        ratio_per_r: ratio,
        shell_per_r: shell,
        h_estimate: h,
        p_s_estimate: p,
        rh_table,
    })
}

/// Largest grid `r` with `min_{ρ < r} ratio(ρ) > λ`.
fn rh_from_ratios(grid: &[f64], ratio: &[f64], lambda: f64) -> Option<f64> {
    // grid is descending; lip_r over ρ below r is a suffix minimum
    let mut best = None;
    let mut suffix_min = f64::INFINITY;
    for i in (0..grid.len()).rev() {
        if suffix_min.is_finite() && suffix_min > lambda {
            best = Some(grid[i]);
        }
        suffix_min = suffix_min.min(ratio[i]);
    }
    best
}

/// `RH_λ(X,x)`, the largest grid radius at which `lip_r d_x(x) > λ`.
pub fn radius_of_hermeticity(
    space: &MetricSpace,
    x: &Point,
    lambda: f64,
    grid: &[f64],
    budget: usize,
) -> Result<f64> {
    let rep = hermeticity_at(space, x, grid, budget)?;
    if !(lambda > 0.0 && lambda < rep.h_estimate) {
        return Err(domain(format!(
            "need 0 < lambda < H = {}, got {lambda}",
            rep.h_estimate
        )));
    }
    rh_from_ratios(grid, &rep.ratio_per_r, lambda)
        .ok_or_else(|| Error::Resolution(format!("no grid radius has lip_r d_x(x) > {lambda}")))
}

/// Direct estimate of `p^s(X,x)` from empty shells.
pub fn shell_porosity_at(
    space: &MetricSpace,
    x: &Point,
    grid: &[f64],
    budget: usize,
) -> Result<f64> {
    hermeticity_at(space, x, grid, budget).map(|r| r.p_s_estimate)
}

/// A sampled `u` with `λr <= |u - x| <= r`.
pub fn hermeticity_witness(
    space: &MetricSpace,
    x: &Point,
    lambda: f64,
    r: f64,
    budget: usize,
) -> Result<Option<Point>> {
    let pts = space.closed_ball_sample(x, r, budget)?;
    for u in pts {
        if f64::from(space.distance_dd(x, &u)?) >= lambda * r {
            return Ok(Some(u));
        }
    }
    Ok(None)
}

/// Sampled `H(X)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SpaceHermeticity {
    Estimate {
        #[serde(rename = "H")]
        h: f64,
        worst_point: Point,
        non_isolated: usize,
    },
    /// No sample is non-isolated at the working scale.
    VacuouslyHermetic,
}

/// Minimum of `H(X,x)` over the non-isolated samples.
pub fn hermeticity_of_space(
    space: &MetricSpace,
    samples: &[Point],
    grid: &[f64],
    budget: usize,
) -> Result<SpaceHermeticity> {
    check_r_grid(grid)?;
    let rmin = *grid.last().expect("nonempty");
    let mut best: Option<(f64, Point)> = None;
    let mut count = 0;
    for x in samples {
        if space.ball_sample(x, rmin, budget)?.is_empty() {
            continue;
        }
        count += 1;
        let h = hermeticity_at(space, x, grid, budget)?.h_estimate;
        if best.map_or(true, |(b, _)| h < b) {
            best = Some((h, *x));
        }
    }
    Ok(match best {
        Some((h, p)) => SpaceHermeticity::Estimate {
            h,
            worst_point: p,
            non_isolated: count,
        },
        None => SpaceHermeticity::VacuouslyHermetic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_interior() {
        let s = MetricSpace::unit_interval(1e-4).unwrap();
        let g = default_r_grid(&s).unwrap();
        let rep = hermeticity_at(&s, &Point::line(0.5), &g, DEFAULT_BUDGET).unwrap();
        assert!(rep.h_estimate >= 0.99 && rep.h_estimate <= 1.0);
        assert!(rep.p_s_estimate < 0.01);
        assert!(rep.ratio_per_r.iter().all(|r| (0.0..=1.0).contains(r)));
    }

    #[test]
    fn cantor_zero() {
        let s = MetricSpace::cantor(8).unwrap();
        let g = default_r_grid(&s).unwrap();
        let rep = hermeticity_at(&s, &Point::line(0.0), &g, DEFAULT_BUDGET).unwrap();
        assert!((rep.h_estimate - 0.5).abs() < 0.02, "{}", rep.h_estimate);
        assert!((rep.p_s_estimate + rep.h_estimate - 1.0).abs() < 0.02);
    }

    #[test]
    fn isolated_points() {
        let s = MetricSpace::finite_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let g = default_r_grid(&s).unwrap();
        let rep = hermeticity_at(&s, &Point::index(0), &g, 10).unwrap();
        assert_eq!(rep.h_estimate, 0.0);
        assert_eq!(rep.p_s_estimate, 1.0);
        let all = hermeticity_of_space(&s, &[Point::index(0), Point::index(1)], &g, 10).unwrap();
        assert_eq!(all, SpaceHermeticity::VacuouslyHermetic);
    }

    #[test]
    fn radius_examples() {
        let s = MetricSpace::unit_interval(1e-5).unwrap();
        let g: Vec<f64> = (0..=1000).map(|i| 1.0 - i as f64 * 0.99e-3).collect();
        let x = Point::line(0.5);
        let r = radius_of_hermeticity(&s, &x, 0.9, &g, 2000).unwrap();
        assert!((r - 5.0 / 9.0).abs() < 2e-3, "{r}");
        assert_eq!(radius_of_hermeticity(&s, &x, 0.5, &g, 2000).unwrap(), 1.0);
        assert!(matches!(
            radius_of_hermeticity(&s, &x, 1.0, &g, 2000),
            Err(Error::Domain(_))
        ));
    }
}
