//! Truncated Laurent series with absolute-precision tracking.
//!
//! A series is known modulo `t^P` for an explicit precision `P`; arithmetic
//! propagates precision conservatively:
//!
//! - `add`: `min(P_f, P_g)`
//! - `mul`: `min(P_f + v_g, P_g + v_f)` (`v` = valuation)
//! - `inv` of `f = t^v u`: `P_f - 2v`
//! - Frobenius `f -> f^q` in characteristic p: `q * P_f`
//!
//! Negative valuations are first class: partial products of the deformation
//! series acquire poles at `t = 0` before the prefactor cancels them.
//!
//! [`product_accumulate`] multiplies a stream of factors and certifies
//! convergence by the valuation table `e_n = val(a_n - 1)` (a trailing-window
//! rule; the full table is recorded so callers can tighten the window).

use crate::field::Scalar;
use crate::poly::RationalFunction;
use crate::{Error, Result};
use std::fmt;

/// A Laurent series known modulo `t^prec`.
///
/// Invariants: the leading stored coefficient is nonzero and `val < prec`,
/// except for the zero-to-precision series which stores no coefficients and
/// has `val == prec`.
#[derive(Clone, PartialEq, Eq)]
pub struct LaurentSeries<C: Scalar> {
    var: String,
    val: i64,
    prec: i64,
    coeffs: Vec<C>,
}

impl<C: Scalar> LaurentSeries<C> {
    /// Build from explicit coefficients `c[i]` of `t^(val + i)`; strips
    /// leading zeros and truncates or zero-pads to the stated precision.
    pub fn from_coeffs(var: &str, mut val: i64, mut coeffs: Vec<C>, prec: i64) -> Self {
        assert!(val <= prec, "valuation {val} beyond precision {prec}");
        coeffs.truncate((prec - val).max(0) as usize);
        let zero = coeffs.first().map(|c| c.zero_like());
        while coeffs.first().map_or(false, |c| c.is_zero()) {
            coeffs.remove(0);
            val += 1;
        }
        if coeffs.is_empty() {
            return LaurentSeries { var: var.to_string(), val: prec, prec, coeffs };
        }
        let zero = zero.unwrap();
        while (coeffs.len() as i64) < prec - val {
            coeffs.push(zero.clone());
        }
        LaurentSeries { var: var.to_string(), val, prec, coeffs }
    }

    /// The series that is zero modulo `t^prec`.
    pub fn zero(var: &str, prec: i64) -> Self {
        LaurentSeries { var: var.to_string(), val: prec, prec, coeffs: Vec::new() }
    }

    /// The monomial `c * t^k` known modulo `t^prec`.
    pub fn monomial(var: &str, c: C, k: i64, prec: i64) -> Self {
        if c.is_zero() || k >= prec {
            return Self::zero(var, prec);
        }
        Self::from_coeffs(var, k, vec![c], prec)
    }

    pub fn one(var: &str, sample: &C, prec: i64) -> Self {
        Self::monomial(var, sample.one_like(), 0, prec)
    }

    /// Exact expansion of a rational function at `t = 0` to precision `prec`.
    pub fn from_rational(rf: &RationalFunction<C>, var: &str, prec: i64) -> Self {
        if rf.is_zero() {
            return Self::zero(var, prec);
        }
        let num = rf.num();
        let den = rf.den();
        let a = num.ord().expect("nonzero numerator") as i64;
        let b = den.ord().expect("nonzero denominator") as i64;
        let val = a - b;
        let n_terms = (prec - val).max(0) as usize;
        if n_terms == 0 {
            return Self::zero(var, prec);
        }
        let zero = rf.sample().zero_like();
        // Unit parts N, D with nonzero constant term.
        let ncoeffs: Vec<C> = num.coeffs()[a as usize..].to_vec();
        let dcoeffs: Vec<C> = den.coeffs()[b as usize..].to_vec();
        let d0_inv = dcoeffs[0].inv().expect("unit constant term");
        // D^{-1} by the standard recurrence, then convolve with N.
        let mut dinv = Vec::with_capacity(n_terms);
        dinv.push(d0_inv.clone());
        for n in 1..n_terms {
            let mut acc = zero.clone();
            for i in 1..=n.min(dcoeffs.len() - 1) {
                acc = acc.add(&dcoeffs[i].mul(&dinv[n - i]));
            }
            dinv.push(acc.neg().mul(&d0_inv));
        }
        let mut out = vec![zero.clone(); n_terms];
        for (i, nc) in ncoeffs.iter().enumerate() {
            if i >= n_terms {
                break;
            }
            if nc.is_zero() {
                continue;
            }
            for (j, dc) in dinv.iter().enumerate() {
                if i + j >= n_terms {
                    break;
                }
                out[i + j] = out[i + j].add(&nc.mul(dc));
            }
        }
        Self::from_coeffs(var, val, out, prec)
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    /// Valuation; `None` for the zero-to-precision series.
    pub fn valuation(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Valuation with zero-to-precision counted as its precision (a lower
    /// bound on the true valuation).
    pub fn valuation_or_precision(&self) -> i64 {
        self.val
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Stored coefficient of `t^k`, if `k` is in the stored window.
    pub fn coefficient(&self, k: i64) -> Option<&C> {
        if k < self.val || k >= self.prec {
            return None;
        }
        self.coeffs.get((k - self.val) as usize)
    }

    /// Coefficient of `t^k` for any `k < prec` (zero below the valuation).
    pub fn coefficient_or_zero(&self, k: i64, zero: &C) -> C {
        self.coefficient(k).cloned().unwrap_or_else(|| zero.zero_like())
    }

    /// Nonzero stored terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &C)> {
        let val = self.val;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (val + i as i64, c))
    }

    pub fn leading(&self) -> Option<(i64, &C)> {
        self.coeffs.first().map(|c| (self.val, c))
    }

    /// A sample field element, if any coefficient is stored.
    pub fn sample(&self) -> Option<&C> {
        self.coeffs.first()
    }

    fn check_var(&self, rhs: &Self) -> Result<()> {
        if self.var != rhs.var {
            return Err(Error::VariableMismatch(self.var.clone(), rhs.var.clone()));
        }
        Ok(())
    }

    /// Lower the claimed precision (a no-op if already at or below).
    pub fn truncate(&self, prec: i64) -> Self {
        if prec >= self.prec {
            return self.clone();
        }
        Self::from_coeffs(&self.var, self.val.min(prec), self.coeffs.clone(), prec)
    }

    pub fn neg(&self) -> Self {
        LaurentSeries {
            var: self.var.clone(),
            val: self.val,
            prec: self.prec,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_var(rhs)?;
        let prec = self.prec.min(rhs.prec);
        let val = self.val.min(rhs.val).min(prec);
        let zero = self
            .coeffs
            .first()
            .or_else(|| rhs.coeffs.first())
            .map(|c| c.zero_like());
        let Some(zero) = zero else {
            return Ok(Self::zero(&self.var, prec));
        };
        let mut out = Vec::with_capacity((prec - val) as usize);
        for k in val..prec {
            let a = self.coefficient_or_zero(k, &zero);
            let b = rhs.coefficient_or_zero(k, &zero);
            out.push(a.add(&b));
        }
        Ok(Self::from_coeffs(&self.var, val, out, prec))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_var(rhs)?;
        // v = prec for a zero operand, which makes the rule below exact.
        let prec = (self.prec + rhs.val).min(rhs.prec + self.val);
        if self.is_zero() || rhs.is_zero() {
            return Ok(Self::zero(&self.var, prec));
        }
        let val = self.val + rhs.val;
        let n = (prec - val).max(0) as usize;
        if n == 0 {
            return Ok(Self::zero(&self.var, prec));
        }
        let zero = self.coeffs[0].zero_like();
        let mut out = vec![zero; n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= n {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                if !b.is_zero() {
                    out[i + j] = out[i + j].add(&a.mul(b));
                }
            }
        }
        Ok(Self::from_coeffs(&self.var, val, out, prec))
    }

    /// Multiply by the exact monomial `c * t^k` (precision shifts by `k`).
    pub fn mul_monomial(&self, c: &C, k: i64) -> Self {
        if c.is_zero() {
            return Self::zero(&self.var, self.prec + k);
        }
        let coeffs = self.coeffs.iter().map(|a| a.mul(c)).collect();
        Self::from_coeffs(&self.var, self.val + k, coeffs, self.prec + k)
    }

    pub fn mul_scalar(&self, c: &C) -> Self {
        self.mul_monomial(c, 0)
    }

    /// Multiplicative inverse; for `f = t^v u` the result has precision
    /// `P - 2v`.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvertZeroSeries);
        }
        let v = self.val;
        let prec = self.prec - 2 * v;
        let n = (self.prec - v) as usize; // unit-part coefficients available
        let u0_inv = self.coeffs[0].inv()?;
        let zero = self.coeffs[0].zero_like();
        let mut out = Vec::with_capacity(n);
        out.push(u0_inv.clone());
        for k in 1..n {
            let mut acc = zero.clone();
            for i in 1..=k.min(self.coeffs.len() - 1) {
                acc = acc.add(&self.coeffs[i].mul(&out[k - i]));
            }
            out.push(acc.neg().mul(&u0_inv));
        }
        Ok(Self::from_coeffs(&self.var, -v, out, prec))
    }

    pub fn div(&self, rhs: &Self) -> Result<Self> {
        self.mul(&rhs.inv()?)
    }

    /// Integer power by repeated squaring (mul precision rule throughout).
    pub fn pow_i64(&self, k: i64) -> Result<Self> {
        if k == 0 {
            let sample = self.sample().ok_or(Error::InvertZeroSeries)?;
            return Ok(Self::one(&self.var, sample, self.prec - self.val));
        }
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc: Option<Self> = None;
        let mut b = base;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => b.clone(),
                    Some(a) => a.mul(&b)?,
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            b = b.mul(&b)?;
        }
        Ok(acc.unwrap())
    }

    /// Coefficient-wise q-power Frobenius: `(sum c_i t^i)^q = sum c_i^q t^{iq}`
    /// in characteristic p with `q` a power of p. Precision becomes `q * P`.
    pub fn frobenius_q(&self, q: u64) -> Result<Self> {
        let p = match self.sample() {
            Some(c) => c.characteristic(),
            None => return Ok(Self::zero(&self.var, self.prec * q as i64)),
        };
        if p == 0 {
            return Err(Error::InvalidArgument(
                "frobenius_q requires positive characteristic".into(),
            ));
        }
        let mut check = q;
        while check > 1 {
            if check % p != 0 {
                return Err(Error::InvalidArgument(format!(
                    "{q} is not a power of the characteristic {p}"
                )));
            }
            check /= p;
        }
        let qi = q as i64;
        let zero = self.coeffs[0].zero_like();
        let mut out = vec![zero; ((self.prec - self.val) as usize - 1) * q as usize + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                out[i * q as usize] = c.pow_u64(q);
            }
        }
        Ok(Self::from_coeffs(&self.var, self.val * qi, out, self.prec * qi))
    }

    /// Substitute `t -> z t` for a nonzero scalar `z`: `c_k -> z^k c_k`.
    pub fn scale_variable(&self, z: &C) -> Result<Self> {
        if z.is_zero() {
            return Err(Error::InvalidArgument("scale_variable requires z != 0".into()));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        let mut power = if self.val >= 0 {
            z.pow_u64(self.val as u64)
        } else {
            z.inv()?.pow_u64((-self.val) as u64)
        };
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            out.push(c.mul(&power));
            power = power.mul(z);
        }
        Ok(Self::from_coeffs(&self.var, self.val, out, self.prec))
    }

    /// Inverse of substitution by `t^d`: return `g` with `g(t^d) = f(t)`,
    /// requiring every exponent in the support to be divisible by `d`. The
    /// result is reported (conservatively) modulo `t^(P div d)`.
    pub fn descend(&self, d: i64, new_var: &str) -> Result<Self> {
        assert!(d >= 1, "descend requires d >= 1");
        if d == 1 {
            let mut g = self.clone();
            g.var = new_var.to_string();
            return Ok(g);
        }
        for (k, _) in self.terms() {
            if k.rem_euclid(d) != 0 {
                return Err(Error::Support { divisor: d, exponent: k });
            }
        }
        let prec = self.prec.div_euclid(d);
        if self.is_zero() {
            return Ok(Self::zero(new_var, prec));
        }
        let zero = self.coeffs[0].zero_like();
        let val = self.val.div_euclid(d);
        let mut out = Vec::new();
        let mut k = val;
        while k < prec {
            out.push(self.coefficient_or_zero(k * d, &zero));
            k += 1;
        }
        Ok(Self::from_coeffs(new_var, val, out, prec))
    }

    /// Substitute `t -> t^d`: exact on known coefficients, precision
    /// `(P - 1) * d + 1`.
    pub fn ascend(&self, d: i64, new_var: &str) -> Self {
        assert!(d >= 1, "ascend requires d >= 1");
        let prec = (self.prec - 1) * d + 1;
        if self.is_zero() {
            return Self::zero(new_var, prec);
        }
        let zero = self.coeffs[0].zero_like();
        let n = ((self.coeffs.len() - 1) * d as usize) + 1;
        let mut out = vec![zero; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i * d as usize] = c.clone();
        }
        Self::from_coeffs(new_var, self.val * d, out, prec)
    }

    /// Spec equality: agree on every coefficient up to the smaller precision
    /// (a mismatched valuation below that precision is an inequality).
    pub fn agrees_with(&self, rhs: &Self) -> bool {
        if self.var != rhs.var {
            return false;
        }
        self.difference_valuation(rhs).is_none()
    }

    /// Valuation of `self - rhs` if they differ below the common precision.
    pub fn difference_valuation(&self, rhs: &Self) -> Option<i64> {
        let diff = self.sub(rhs).ok()?;
        diff.valuation()
    }

    /// Order of agreement: the common precision when equal, otherwise the
    /// valuation of the difference.
    pub fn agreement_order(&self, rhs: &Self) -> i64 {
        match self.sub(rhs) {
            Ok(diff) => diff.valuation_or_precision(),
            Err(_) => i64::MIN,
        }
    }

    /// Map coefficients through a field homomorphism (e.g. a subfield
    /// embedding).
    pub fn map_coeffs<D: Scalar>(&self, var: &str, f: impl Fn(&C) -> D) -> LaurentSeries<D> {
        LaurentSeries {
            var: var.to_string(),
            val: self.val,
            prec: self.prec,
            coeffs: self.coeffs.iter().map(&f).collect(),
        }
    }

    /// Fallibly map coefficients (e.g. retraction to a subfield).
    pub fn try_map_coeffs<D: Scalar, E>(
        &self,
        var: &str,
        f: impl Fn(i64, &C) -> std::result::Result<D, E>,
    ) -> std::result::Result<LaurentSeries<D>, E> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs.push(f(self.val + i as i64, c)?);
        }
        Ok(LaurentSeries { var: var.to_string(), val: self.val, prec: self.prec, coeffs })
    }
}

impl<C: Scalar> fmt::Debug for LaurentSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::textform::series_string(self))
    }
}

impl<C: Scalar> fmt::Display for LaurentSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::textform::series_string(self))
    }
}

// ---------------------------------------------------------------------------
// Certified infinite products.
// ---------------------------------------------------------------------------

/// Outcome of the trailing-window convergence test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    Certified,
    NotCertified,
}

/// Evidence for the convergence of an infinite product: the valuations
/// `e_n = val(a_n - 1)` of the accumulated factors.
///
/// An entry equal to the factor's precision is a lower bound (the difference
/// vanished to working precision). The verdict is `Certified` only if every
/// `e_n` in the final window of size `w` exceeds the target.
#[derive(Clone, Debug)]
pub struct ConvergenceCertificate {
    pub entries: Vec<(usize, i64)>,
    pub target: i64,
    pub window: usize,
    pub verdict: Verdict,
    /// Absolute precision to which the returned product approximates the
    /// full (infinite) product; meaningful only when certified.
    pub achieved_precision: i64,
}

impl ConvergenceCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

/// Multiply a stream of factors `a_n`, recording `e_n = val(a_n - 1)`, and
/// stop once the trailing `window` factors all satisfy `e_n > target` (or
/// after `max_index` factors, in which case the verdict is `NotCertified`
/// and the partial product is still returned).
pub fn product_accumulate<C, I>(
    factors: I,
    target: i64,
    window: usize,
    max_index: usize,
) -> Result<(LaurentSeries<C>, ConvergenceCertificate)>
where
    C: Scalar,
    I: IntoIterator<Item = Result<LaurentSeries<C>>>,
{
    assert!(window >= 1, "window must be at least 1");
    let mut entries: Vec<(usize, i64)> = Vec::new();
    let mut product: Option<LaurentSeries<C>> = None;
    let mut streak = 0usize;

    for (i, factor) in factors.into_iter().enumerate() {
        let n = i + 1;
        let a = factor?;
        if a.is_zero() {
            return Err(Error::Assertion(format!("factor {n} is zero to its precision")));
        }
        let sample = a.sample().unwrap();
        let one = LaurentSeries::one(a.var(), sample, a.precision());
        let e_n = a.sub(&one)?.valuation_or_precision();
        entries.push((n, e_n));
        product = Some(match product {
            None => a,
            Some(p) => p.mul(&a)?,
        });
        streak = if e_n > target { streak + 1 } else { 0 };
        if streak >= window || n >= max_index {
            break;
        }
    }

    let product = product.ok_or_else(|| Error::InvalidArgument("empty factor stream".into()))?;
    let verdict = if streak >= window { Verdict::Certified } else { Verdict::NotCertified };
    // Certified tails multiply by 1 + O(t^{>target}); the absolute error is
    // that relative bound shifted by a negative product valuation, if any.
    let nu = product.valuation_or_precision().min(0);
    let achieved = match verdict {
        Verdict::Certified => product.precision().min(target + 1 + nu),
        Verdict::NotCertified => product.precision(),
    };
    let product = product.truncate(achieved);
    let certificate =
        ConvergenceCertificate { entries, target, window, verdict, achieved_precision: achieved };
    Ok((product, certificate))
}
