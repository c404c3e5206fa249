//! The Tate curve: the cross ratio of 2-torsion as a product in `s = 1/t`.
//!
//! The four points of order two on the Tate curve `E_q`, `q = t^{-2}`, have
//! cross ratio
//!
//! ```text
//! lambda(t) = ( prod_{i >= 0} (t^{2i+1} + 1)/(t^{2i+1} - 1) )^8,
//! ```
//!
//! a holomorphic function on the disk `|t| > 1` centered at infinity; all
//! series here live in `s = 1/t` so expansions sit at 0. The classical
//! `j = E4^3 / Delta` q-expansion (computed from scratch, not from a table)
//! provides the independent check that the analytic parameter `q = t^{-2}`
//! and the algebraic parameter `lambda` describe the same curve:
//! `j(lambda(s))` with `q = s^2` must reproduce it coefficient for
//! coefficient.

use crate::field::{big, integer_divisible, is_integer};
use crate::poly::{Polynomial, RationalFunction};
use crate::series::LaurentSeries;
use crate::{Error, Result};
use num::BigRational;
use num::Zero;

type QSeries = LaurentSeries<BigRational>;
type QRf = RationalFunction<BigRational>;

/// One factor `(1 + s^k)/(1 - s^k)` expanded to `O(s^prec)`.
fn lambda_factor(k: usize, prec: i64) -> QSeries {
    let mut num = vec![big(1)];
    num.resize(k, big(0));
    num.push(big(1));
    let mut den = num.clone();
    den[k] = big(-1);
    let rf = QRf::new(Polynomial::from_coeffs(num), Polynomial::from_coeffs(den))
        .expect("nonzero denominator");
    QSeries::from_rational(&rf, "s", prec)
}

/// The 2-torsion cross ratio `prod_{i>=0} ((1+s^{2i+1})/(1-s^{2i+1}))^8`
/// to `O(s^prec)`; factors with `2i+1 >= prec` are 1 to that precision.
pub fn tate_lambda(prec: i64) -> Result<QSeries> {
    if prec < 1 {
        return Err(Error::InvalidArgument("precision must be >= 1".into()));
    }
    let mut acc = QSeries::one("s", &big(1), prec);
    let mut k = 1usize;
    while (k as i64) < prec {
        acc = acc.mul(&lambda_factor(k, prec).pow_i64(8)?)?;
        k += 2;
    }
    Ok(acc)
}

/// Every coefficient integral, constant term 1 (the normalization
/// `|lambda| = 1`).
pub fn tate_lambda_is_normalized(lambda: &QSeries) -> bool {
    lambda.valuation() == Some(0)
        && lambda.coefficient(0).map_or(false, |c| c == &big(1))
        && lambda.terms().all(|(_, c)| is_integer(c))
}

/// `lambda(-s) * lambda(s) = 1 + O(s^prec)` (the behaviour under the disk
/// automorphism `t -> -t`).
pub fn tate_inversion_check(prec: i64) -> Result<bool> {
    let lambda = tate_lambda(prec)?;
    let flipped = lambda.scale_variable(&big(-1))?;
    let one = QSeries::one("s", &big(1), prec);
    Ok(lambda.mul(&flipped)?.agrees_with(&one))
}

/// Verify that the two-sided fourth-power product over all integer indices
/// equals the one-sided eighth-power form: the negative-index factors are
/// computed honestly from `(s^{2j+1} + 1)/(s^{2j+1} - 1)` and paired off.
pub fn reordering_check(prec: i64) -> Result<bool> {
    // Symbolic identity behind the pairing, for the first few indices:
    // (s^k + 1)/(s^k - 1) = -(1 + s^k)/(1 - s^k).
    for j in 0..3usize {
        let k = 2 * j + 1;
        let mut plus = vec![big(1)];
        plus.resize(k, big(0));
        plus.push(big(1));
        let mut minus_lead = vec![big(-1)];
        minus_lead.resize(k, big(0));
        minus_lead.push(big(1)); // s^k - 1
        let lhs = QRf::new(
            Polynomial::from_coeffs(plus.clone()),
            Polynomial::from_coeffs(minus_lead),
        )?;
        let mut one_minus = vec![big(1)];
        one_minus.resize(k, big(0));
        one_minus.push(big(-1)); // 1 - s^k
        let rhs = QRf::new(
            Polynomial::from_coeffs(plus),
            Polynomial::from_coeffs(one_minus),
        )?
        .neg();
        if lhs != rhs {
            return Ok(false);
        }
    }

    // Formal product comparison to O(s^prec).
    let one_sided = tate_lambda(prec)?; // the 8th-power form
    let mut two_sided = QSeries::one("s", &big(1), prec);
    let mut k = 1usize;
    while (k as i64) < prec {
        // Index i >= 0 contributes ((1+s^k)/(1-s^k))^4; index -(i+1)
        // contributes ((s^k+1)/(s^k-1))^4 with the same k = 2i+1.
        let positive = lambda_factor(k, prec).pow_i64(4)?;
        let mut plus = vec![big(1)];
        plus.resize(k, big(0));
        plus.push(big(1));
        let mut minus = vec![big(-1)];
        minus.resize(k, big(0));
        minus.push(big(1));
        let negative_rf = QRf::new(
            Polynomial::from_coeffs(plus),
            Polynomial::from_coeffs(minus),
        )?;
        let negative = QSeries::from_rational(&negative_rf, "s", prec).pow_i64(4)?;
        two_sided = two_sided.mul(&positive)?.mul(&negative)?;
        k += 2;
    }
    Ok(two_sided.agrees_with(&one_sided))
}

/// The j-invariant as a function of the 2-torsion modulus:
/// `j = 2^8 (l^2 - l + 1)^3 / (l^2 (l - 1)^2)`, on exact values.
pub fn legendre_j_value(l: &BigRational) -> Result<BigRational> {
    if l.is_zero() || l == &big(1) {
        return Err(Error::DivisionByZero);
    }
    let num = (l * l - l + big(1)).pow(3) * big(256);
    let den = l * l * (l - big(1)).pow(2);
    Ok(num / den)
}

/// The same map on series (the input must not be identically 0 or 1).
pub fn legendre_j(l: &QSeries) -> Result<QSeries> {
    let one = QSeries::one(l.var(), &big(1), l.precision());
    let l2 = l.mul(l)?;
    let num = l2.sub(l)?.add(&one)?.pow_i64(3)?.mul_scalar(&big(256));
    let shifted = l.sub(&one)?;
    if l.is_zero() || shifted.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let den = l2.mul(&shifted.mul(&shifted)?)?;
    num.div(&den)
}

/// Divisor power sum `sigma_3(n)`.
fn sigma3(n: u64) -> u64 {
    (1..=n).filter(|d| n % d == 0).map(|d| d * d * d).sum()
}

/// The classical `j = E4^3 / Delta` expansion
/// `q^{-1} + 744 + 196884 q + ...`, computed from the Eisenstein series
/// `E4 = 1 + 240 sum sigma_3(n) q^n` and the product
/// `Delta = q prod (1 - q^n)^24`; nothing is read from a table.
pub fn j_tate_oracle(prec: i64) -> Result<QSeries> {
    if prec < 1 {
        return Err(Error::InvalidArgument("precision must be >= 1".into()));
    }
    let mut e4_coeffs = vec![big(1)];
    for n in 1..prec as u64 {
        e4_coeffs.push(big(240) * big(sigma3(n) as i64));
    }
    let e4 = QSeries::from_coeffs("q", 0, e4_coeffs, prec);

    let mut eta24 = QSeries::one("q", &big(1), prec);
    for n in 1..prec as usize {
        let mut coeffs = vec![big(1)];
        coeffs.resize(n, big(0));
        coeffs.push(big(-1)); // 1 - q^n
        let factor = QSeries::from_coeffs("q", 0, coeffs, prec);
        eta24 = eta24.mul(&factor.pow_i64(24)?)?;
    }
    let delta = eta24.mul_monomial(&big(1), 1); // q * prod(1-q^n)^24
    e4.pow_i64(3)?.div(&delta)
}

/// Outcome of the central identity `j(lambda(s))|_{q = s^2} = j(q)`.
pub struct JCheckReport {
    pub matches: bool,
    /// Exponent range over which the two expansions were compared.
    pub compared_from: i64,
    pub compared_to: i64,
    /// All compared coefficients on the Legendre side are integers.
    pub integral: bool,
    pub lhs: QSeries,
    pub rhs: QSeries,
}

/// Run the identity at `O(s^prec)`: `legendre_j(tate_lambda(prec))` against
/// `j_tate_oracle(prec/2)` with `q = s^2`.
pub fn tate_j_check(prec: i64) -> Result<JCheckReport> {
    let lambda = tate_lambda(prec)?;
    let lhs = legendre_j(&lambda)?;
    let rhs_q = j_tate_oracle(prec / 2)?;
    let rhs = rhs_q.ascend(2, "s");
    let matches = lhs.agrees_with(&rhs);
    let compared_to = lhs.precision().min(rhs.precision());
    let compared_from = lhs
        .valuation()
        .unwrap_or(0)
        .min(rhs.valuation().unwrap_or(0));
    let integral = lhs
        .terms()
        .filter(|(k, _)| *k < compared_to)
        .all(|(_, c)| is_integer(c));
    Ok(JCheckReport { matches, compared_from, compared_to, integral, lhs, rhs })
}

/// Coefficient-wise divisibility of `lambda - 1` by 16 (the condition
/// `|1 - lambda| < |2|^2` in formal guise).
pub fn sixteen_divisibility_check(prec: i64) -> Result<bool> {
    let lambda = tate_lambda(prec)?;
    let one = QSeries::one("s", &big(1), prec);
    let diff = lambda.sub(&one)?;
    Ok(diff.terms().all(|(_, c)| integer_divisible(c, 16)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_coefficients_frozen() {
        // Hand derivation: ((1+s)/(1-s))^8 = 1 + 16s + 128s^2 + 688s^3 + ...
        // and the i=1 factor contributes 16s^3, so
        // lambda = 1 + 16s + 128s^2 + 704s^3 + O(s^4).
        let l = tate_lambda(4).unwrap();
        let expect: Vec<(i64, i64)> = vec![(0, 1), (1, 16), (2, 128), (3, 704)];
        for (k, c) in expect {
            assert_eq!(l.coefficient(k), Some(&big(c)), "coefficient of s^{k}");
        }
        assert!(tate_lambda_is_normalized(&l));
    }

    #[test]
    fn inversion_identity() {
        assert!(tate_inversion_check(20).unwrap());
        assert!(tate_inversion_check(1).unwrap());
        // Negative control: corrupt one coefficient.
        let lambda = tate_lambda(10).unwrap();
        let mut coeffs: Vec<BigRational> =
            (0..10).map(|k| lambda.coefficient_or_zero(k, &big(0))).collect();
        coeffs[3] += big(1);
        let corrupted = QSeries::from_coeffs("s", 0, coeffs, 10);
        let flipped = corrupted.scale_variable(&big(-1)).unwrap();
        let one = QSeries::one("s", &big(1), 10);
        assert!(!corrupted.mul(&flipped).unwrap().agrees_with(&one));
    }

    #[test]
    fn reordering_identity() {
        assert!(reordering_check(20).unwrap());
        assert!(reordering_check(1).unwrap());
    }

    #[test]
    fn sixteen_divisibility() {
        assert!(sixteen_divisibility_check(20).unwrap());
    }

    #[test]
    fn legendre_values() {
        // Direct substitution: j(-1) = 2^8 * 27 / 4 = 1728, and 2 lies in
        // the same six-fold orbit, so j(2) = 1728 as well.
        assert_eq!(legendre_j_value(&big(-1)).unwrap(), big(1728));
        assert_eq!(legendre_j_value(&big(2)).unwrap(), big(1728));
        assert!(legendre_j_value(&big(0)).is_err());
        assert!(legendre_j_value(&big(1)).is_err());
    }

    #[test]
    fn oracle_expansion_structure() {
        let j = j_tate_oracle(4).unwrap();
        assert_eq!(j.valuation(), Some(-1));
        assert_eq!(j.coefficient(-1), Some(&big(1)));
        assert_eq!(j.coefficient(0), Some(&big(744)));
        assert_eq!(j.coefficient(1), Some(&big(196884)));
    }

    #[test]
    fn legendre_orbit_symmetry() {
        // j(l) = j(1/l) as series, on the computed lambda.
        let l = tate_lambda(12).unwrap();
        let j1 = legendre_j(&l).unwrap();
        let j2 = legendre_j(&l.inv().unwrap()).unwrap();
        assert!(j1.agrees_with(&j2));
        // And j(l) = j(1 - l).
        let one = QSeries::one("s", &big(1), 12);
        let j3 = legendre_j(&one.sub(&l).unwrap()).unwrap();
        assert!(j1.agrees_with(&j3));
    }

    #[test]
    fn j_identity_small() {
        let report = tate_j_check(16).unwrap();
        assert!(report.matches, "lhs {} vs rhs {}", report.lhs, report.rhs);
        assert!(report.integral);
        assert_eq!(report.lhs.valuation(), Some(-2));
        assert!(report.compared_to >= 10);
    }
}
