//! Takagi–van der Waerden functions `f(x) = Σ b^n d(x, S_n)`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{domain, Error, Result};
use crate::lattice::dyadic;
use crate::nets::{lattice_hierarchy, NetHierarchy};
use crate::space::{MetricSpace, Point};

/// Hard cap on the number of summed terms.
pub const MAX_TERMS: u32 = 10_000;

/// A TW function of type `(a, b)` over a net hierarchy.
#[derive(Clone, Debug)]
pub struct TWFunction {
    a: f64,
    b: f64,
    hierarchy: Arc<NetHierarchy>,
    index_start: u32,
}

/// Value of a truncated series with its certified error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    /// First omitted index.
    pub terms_used: u32,
    pub error_bound: f64,
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b > 0.0 && a > b {
        Ok(())
    } else {
        Err(domain(format!("need a > b > 0, got a={a}, b={b}")))
    }
}

/// `b^n / ((a - b) a^{n-1})`, the bound on the tail `Σ_{k>=n} b^k d(x, S_k)`.
pub fn remainder_bound(a: f64, b: f64, n: u32) -> Result<f64> {
    check_ab(a, b)?;
    Ok(tail_bound(a, b, n))
}

fn tail_bound(a: f64, b: f64, n: u32) -> f64 {
    (b / a).powi(n as i32) * a / (a - b)
}

/// Least `n >= index_start` with `remainder_bound(a, b, n) <= tol`.
pub fn terms_for_tol(a: f64, b: f64, tol: f64, index_start: u32) -> Result<u32> {
    check_ab(a, b)?;
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut n = index_start;
    while tail_bound(a, b, n) > tol {
        n += 1;
        if n > MAX_TERMS {
            return Err(Error::Resource(format!(
                "tolerance {tol} needs more than {MAX_TERMS} terms"
            )));
        }
    }
    Ok(n)
}

impl TWFunction {
    pub fn new(a: f64, b: f64, hierarchy: Arc<NetHierarchy>, index_start: u32) -> Result<Self> {
        check_ab(a, b)?;
        if index_start > 1 {
            return Err(domain("index_start must be 0 or 1"));
        }
        if hierarchy.a() != a {
            return Err(Error::Precondition(format!(
                "hierarchy base {} differs from a = {a}",
                hierarchy.a()
            )));
        }
        Ok(TWFunction {
            a,
            b,
            hierarchy,
            index_start,
        })
    }

    /// The TW function over the implicit hierarchy `a^{-n}Z`.
    pub fn lattice(space: Arc<MetricSpace>, a: f64, b: f64, index_start: u32) -> Result<Self> {
        check_ab(a, b)?;
        let h = lattice_hierarchy(space, a)?;
        Self::new(a, b, Arc::new(h), index_start)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn index_start(&self) -> u32 {
        self.index_start
    }

    pub fn hierarchy(&self) -> &Arc<NetHierarchy> {
        &self.hierarchy
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        self.hierarchy.space()
    }

    /// Sup of `f`, `a / (a - b)`.
    pub fn global_bound(&self) -> f64 {
        tail_bound(self.a, self.b, 0)
    }

    /// `s_n(x) = Σ_{k=index_start}^{n-1} b^k d(x, S_k)`.
    pub fn partial_sum(&self, x: &Point, n: u32) -> Result<f64> {
        self.space().validate(x)?;
        self.partial_sum_dd(x, n).map(f64::from)
    }

    pub(crate) fn partial_sum_dd(&self, x: &Point, n: u32) -> Result<TwoFloat> {
        if let Some(depth) = self.hierarchy.depth() {
            if n > depth + 1 {
                return Err(Error::Resource(format!(
                    "{n} terms need hierarchy depth {}, have {depth}; use an implicit lattice hierarchy",
                    n - 1
                )));
            }
        }
        let mut sum = TwoFloat::from(0.0);
        let mut bk = TwoFloat::from(1.0);
        for _ in 0..self.index_start {
            bk = bk * self.b;
        }
        for k in self.index_start..n {
            sum = sum + bk * self.hierarchy.phi(x, k)?;
            bk = bk * self.b;
        }
        Ok(sum)
    }

    /// `f(x)` to absolute accuracy `tol`.
    pub fn eval(&self, x: &Point, tol: f64) -> Result<EvalResult> {
        let (v, r) = self.eval_dd(x, tol)?;
        Ok(EvalResult {
            value: f64::from(v),
            ..r
        })
    }

    /// As [`TWFunction::eval`], keeping the double-double sum.
    pub fn eval_dd(&self, x: &Point, tol: f64) -> Result<(TwoFloat, EvalResult)> {
        self.space().validate(x)?;
        let n = terms_for_tol(self.a, self.b, tol, self.index_start)?;
        let v = self.partial_sum_dd(x, n)?;
        Ok((
            v,
            EvalResult {
                value: f64::from(v),
                terms_used: n,
                error_bound: tail_bound(self.a, self.b, n),
            },
        ))
    }
}

/// `Σ (b/a)^n d(a^n x, Z)` summed in exact rationals, with the truncation rule of `eval`.
pub fn eval_standard_lattice(a: f64, b: f64, x: f64, tol: f64, index_start: u32) -> Result<f64> {
    let n = terms_for_tol(a, b, tol, index_start)?;
    if !x.is_finite() {
        return Err(domain("x must be finite"));
    }
    let ar = BigRational::from_float(a).expect("finite");
    let br = BigRational::from_float(b).expect("finite");
    let ratio = &br / &ar;
    let (mant, exp) = dyadic(TwoFloat::from(x));
    let xr = if exp >= 0 {
        BigRational::from_integer(mant << exp as usize)
    } else {
        BigRational::new(mant, BigInt::one() << (-exp) as usize)
    };
    let mut sum = BigRational::zero();
    let mut weight = num_traits::pow(ratio.clone(), index_start as usize);
    let mut t = &xr * num_traits::pow(ar.clone(), index_start as usize);
    for _ in index_start..n {
        let frac = &t - t.floor();
        let other = BigRational::one() - &frac;
        let d = if frac < other { frac } else { other };
        sum += &weight * d.abs();
        weight *= &ratio;
        t *= &ar;
    }
    Ok(sum.to_f64().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_lattice(a: f64, b: f64, start: u32) -> TWFunction {
        let s = Arc::new(MetricSpace::unit_interval(1e-4).unwrap());
        TWFunction::lattice(s, a, b, start).unwrap()
    }

    #[test]
    fn remainder_examples() {
        assert_eq!(remainder_bound(4.0, 2.0, 3).unwrap(), 0.25);
        assert_eq!(remainder_bound(5.0, 3.0, 0).unwrap(), 2.5);
        let r = remainder_bound(600.0, 17.0, 2).unwrap();
        assert!((r - 289.0 / (583.0 * 600.0)).abs() < 1e-18);
        assert!((r - 8.262e-4).abs() < 1e-7);
        assert!(matches!(
            remainder_bound(2.0, 2.0, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn partial_sums() {
        let f = unit_lattice(2.0, 1.0, 0);
        let third = Point::Line(TwoFloat::from(1.0) / 3.0);
        assert_eq!(f.partial_sum(&third, 0).unwrap(), 0.0);
        let s = f.partial_sum(&third, 3).unwrap();
        assert!((s - 7.0 / 12.0).abs() < 1e-15);
        for n in 0..30 {
            assert_eq!(f.partial_sum(&Point::line(0.0), n).unwrap(), 0.0);
        }
        let g = unit_lattice(2.0, 1.0, 1);
        assert_eq!(g.partial_sum(&third, 1).unwrap(), 0.0);
    }

    #[test]
    fn eval_examples() {
        let f = unit_lattice(4.0, 2.0, 0);
        let r = f.eval(&Point::line(0.3), 1e-6).unwrap();
        assert_eq!(r.terms_used, 21);
        assert!(r.error_bound <= 1e-6);
        assert_eq!(f.eval(&Point::line(0.0), 1e-12).unwrap().value, 0.0);
        let t = unit_lattice(2.0, 1.0, 0);
        let third = Point::Line(TwoFloat::from(1.0) / 3.0);
        let v = t.eval(&third, 1e-9).unwrap().value;
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn standard_lattice_examples() {
        assert_eq!(eval_standard_lattice(2.0, 1.0, 0.5, 1e-9, 0).unwrap(), 0.5);
        assert_eq!(eval_standard_lattice(2.0, 1.0, 0.5, 1e-9, 1).unwrap(), 0.0);
        assert_eq!(eval_standard_lattice(10.0, 1.0, 0.0, 1e-9, 1).unwrap(), 0.0);
    }

    #[test]
    fn explicit_depth_is_enforced() {
        let s = Arc::new(MetricSpace::unit_interval(1e-3).unwrap());
        let h = crate::nets::build_hierarchy(s, 2.0, 4, true).unwrap();
        let f = TWFunction::new(2.0, 1.0, Arc::new(h), 0).unwrap();
        assert!(f.partial_sum(&Point::line(0.3), 5).is_ok());
        assert!(matches!(
            f.eval(&Point::line(0.3), 1e-9),
            Err(Error::Resource(_))
        ));
    }
}
