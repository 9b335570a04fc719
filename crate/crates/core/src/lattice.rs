//! Exact distances to the scaled lattices `a^{-n} Z`.
//!
//! A double-double coordinate is an exact dyadic rational `M / 2^K`. For an
//! integer base `a` the fractional part of `a^n x` is `(a^n M mod 2^K) / 2^K`,
//! computed with wrapping `u128` arithmetic when `K < 128` and with big
//! integers otherwise. Non-integer bases go through exact rationals. Only the
//! final conversion back to double-double rounds.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use twofloat::TwoFloat;

/// Base `a > 1` of a lattice hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeBase {
    a: f64,
    int: Option<u64>,
}

impl LatticeBase {
    pub fn new(a: f64) -> Self {
        let int = (a.fract() == 0.0 && a >= 2.0 && a < 2f64.powi(63)).then_some(a as u64);
        LatticeBase { a, int }
    }

    pub fn value(&self) -> f64 {
        self.a
    }

    pub fn is_integer(&self) -> bool {
        self.int.is_some()
    }

    /// `a^n` in double-double precision.
    pub fn pow(&self, n: u32) -> TwoFloat {
        let mut p = TwoFloat::from(1.0);
        for _ in 0..n {
            p = p * self.a;
        }
        p
    }

    /// The lattice spacing `a^{-n}`.
    pub fn scale(&self, n: u32) -> TwoFloat {
        TwoFloat::from(1.0) / self.pow(n)
    }
}

/// Fractional position of `a^n x` inside its unit cell: `below = frac`, `above = 1 - frac`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellOffset {
    pub below: TwoFloat,
    pub above: TwoFloat,
}

impl CellOffset {
    /// `d(a^n x, Z)`.
    pub fn distance(&self) -> TwoFloat {
        if self.below <= self.above {
            self.below
        } else {
            self.above
        }
    }
}

/// Fractional offset of `a^n x` with respect to the integers.
pub fn cell_offset(x: TwoFloat, base: &LatticeBase, n: u32) -> CellOffset {
    let (mant, exp) = dyadic(x);
    if mant.is_zero() || exp >= 0 {
        return integral();
    }
    match base.int {
        Some(a) => int_base_offset(&mant, (-exp) as u32, a, n),
        None => rational_offset(&mant, exp, base.a, n),
    }
}

/// `d(x, a^{-n} Z)`.
pub fn lattice_distance(x: TwoFloat, base: &LatticeBase, n: u32) -> TwoFloat {
    cell_offset(x, base, n).distance() / base.pow(n)
}

/// Offset of `x / step` with respect to the integers, for an arbitrary positive step.
pub fn step_offset(x: TwoFloat, step: f64) -> CellOffset {
    let (mant, exp) = dyadic(x);
    if mant.is_zero() {
        return integral();
    }
    let x = dyadic_rational(mant, exp);
    let s = BigRational::from_float(step).expect("finite step");
    let t = x / s;
    let frac = &t - t.floor();
    let above = BigRational::one() - &frac;
    CellOffset {
        below: rational_to_dd(&frac),
        above: rational_to_dd(&above),
    }
}

fn dyadic_rational(mant: BigInt, exp: i32) -> BigRational {
    if exp >= 0 {
        BigRational::from_integer(mant << exp as usize)
    } else {
        BigRational::new(mant, BigInt::one() << (-exp) as usize)
    }
}

fn integral() -> CellOffset {
    CellOffset {
        below: TwoFloat::from(0.0),
        above: TwoFloat::from(1.0),
    }
}

/// Exact decomposition `x = mant * 2^exp`.
pub(crate) fn dyadic(x: TwoFloat) -> (BigInt, i32) {
    let parts = [x.hi(), x.lo()]
        .into_iter()
        .filter(|v| *v != 0.0)
        .map(|v| {
            let (m, e, s) = v.integer_decode();
            (BigInt::from(m) * i32::from(s), i32::from(e))
        })
        .collect::<Vec<_>>();
    let Some(exp) = parts.iter().map(|(_, e)| *e).min() else {
        return (BigInt::zero(), 0);
    };
    let mant = parts
        .into_iter()
        .map(|(m, e)| m << (e - exp) as usize)
        .fold(BigInt::zero(), |acc, m| acc + m);
    (mant, exp)
}

fn int_base_offset(mant: &BigInt, k: u32, a: u64, n: u32) -> CellOffset {
    if k < 127 {
        if let Some(m) = mant.to_i128() {
            let modulus = 1u128 << k;
            let mask = modulus - 1;
            let m_mod = m.rem_euclid(modulus as i128) as u128;
            let p = (a as u128).wrapping_pow(n) & mask;
            let r = p.wrapping_mul(m_mod) & mask;
            return CellOffset {
                below: scaled_u128(r, k),
                above: scaled_u128(modulus - r, k),
            };
        }
    }
    let modulus = BigUint::one() << k as usize;
    let m_mod = match mant.mod_floor(&BigInt::from(modulus.clone())).to_biguint() {
        Some(v) => v,
        None => BigUint::zero(),
    };
    let p = BigUint::from(a).modpow(&BigUint::from(n), &modulus);
    let r = (p * m_mod) % &modulus;
    let above = &modulus - &r;
    CellOffset {
        below: scaled_big(&BigInt::from(r), k),
        above: scaled_big(&BigInt::from(above), k),
    }
}

fn rational_offset(mant: &BigInt, exp: i32, a: f64, n: u32) -> CellOffset {
    let x = dyadic_rational(mant.clone(), exp);
    let a = BigRational::from_float(a).expect("finite base");
    let t = x * num_traits::pow(a, n as usize);
    let frac = &t - t.floor();
    let above = BigRational::one() - &frac;
    CellOffset {
        below: rational_to_dd(&frac),
        above: rational_to_dd(&above),
    }
}

/// `r * 2^{-k}` rounded to double-double.
fn scaled_u128(r: u128, k: u32) -> TwoFloat {
    let hi = r as f64;
    // hi <= 2^127 here, so the difference fits in i128 unless hi rounded up to 2^127
    let lo = if hi >= 2f64.powi(127) {
        -(((1u128 << 127) - r) as f64)
    } else {
        (r as i128 - hi as i128) as f64
    };
    ldexp(TwoFloat::new_add(hi, lo), -(k as i32))
}

fn scaled_big(r: &BigInt, k: u32) -> TwoFloat {
    let bits = r.bits();
    // shift to at most 120 significant bits before rounding to double-double
    let shift = bits.saturating_sub(120) as usize;
    let top = r >> shift;
    let v = top.to_i128().expect("at most 120 bits");
    let hi = v as f64;
    let lo = (v - hi as i128) as f64;
    ldexp(TwoFloat::new_add(hi, lo), shift as i32 - k as i32)
}

pub(crate) fn rational_to_dd(q: &BigRational) -> TwoFloat {
    if q.is_zero() {
        return TwoFloat::from(0.0);
    }
    let hi = q.to_f64().unwrap_or(0.0);
    let rest = match BigRational::from_float(hi) {
        Some(h) => q - h,
        None => q.clone(),
    };
    let lo = rest.to_f64().unwrap_or(0.0);
    let out = TwoFloat::new_add(hi, lo);
    if q.is_negative() != (out < 0.0) && out != 0.0 {
        return TwoFloat::from(hi);
    }
    out
}

/// `v * 2^e` without intermediate overflow or underflow of the scale factor.
pub(crate) fn ldexp(mut v: TwoFloat, mut e: i32) -> TwoFloat {
    while e != 0 {
        let step = e.clamp(-1000, 1000);
        v = v * 2f64.powi(step);
        e -= step;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: f64, a: f64, n: i32) -> f64 {
        let t = x * a.powi(n);
        (t - t.round()).abs()
    }

    #[test]
    fn small_scales_match_naive() {
        let base = LatticeBase::new(4.0);
        for &x in &[0.3, 0.0, 1.0, 0.125, 0.7072, -0.3] {
            for n in 0..5 {
                let exact = f64::from(cell_offset(TwoFloat::from(x), &base, n).distance());
                assert!(
                    (exact - naive(x, 4.0, n as i32)).abs() < 1e-12,
                    "x={x} n={n}"
                );
            }
        }
    }

    #[test]
    fn quarter_lattice_distance() {
        let base = LatticeBase::new(4.0);
        let d = f64::from(lattice_distance(TwoFloat::from(0.3), &base, 1));
        assert!((d - 0.05).abs() < 1e-16);
    }

    #[test]
    fn dyadic_points_sit_on_binary_lattices() {
        let base = LatticeBase::new(2.0);
        let x = TwoFloat::from(0.375);
        assert_eq!(f64::from(cell_offset(x, &base, 3).distance()), 0.0);
        assert_eq!(f64::from(cell_offset(x, &base, 2).distance()), 0.5);
    }

    #[test]
    fn deep_levels_stay_within_half_cell() {
        let base = LatticeBase::new(5.0);
        let x = TwoFloat::from(std::f64::consts::FRAC_1_SQRT_2);
        for n in 0..80 {
            let off = cell_offset(x, &base, n);
            let d = f64::from(off.distance());
            assert!((0.0..=0.5).contains(&d), "n={n} d={d}");
            let sum = f64::from(off.below + off.above);
            assert!((sum - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn big_integer_path_agrees_with_u128_path() {
        // a point whose double-double expansion needs more than 127 bits
        let x = TwoFloat::new_add(0.5, 1e-30);
        let base = LatticeBase::new(600.0);
        let small = TwoFloat::from(1e-30);
        for n in 1..12 {
            // 0.5 * 600^n is an integer, so the offset comes from the tiny part alone
            let want = cell_offset(small, &base, n);
            let got = cell_offset(x, &base, n);
            let diff = f64::from(got.below - want.below).abs();
            assert!(diff < 1e-25, "n={n} diff={diff}");
        }
    }

    #[test]
    fn arbitrary_step() {
        let off = step_offset(TwoFloat::from(0.3), 0.25);
        assert!((f64::from(off.distance()) - 0.2).abs() < 1e-15);
        let off = step_offset(TwoFloat::from(-0.3), 0.25);
        assert!((f64::from(off.below) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rational_base_path() {
        let base = LatticeBase::new(2.5);
        assert!(!base.is_integer());
        let off = cell_offset(TwoFloat::from(0.3), &base, 2);
        // 0.3 * 6.25 = 1.875
        assert!((f64::from(off.below) - 0.875).abs() < 1e-15);
    }
}
