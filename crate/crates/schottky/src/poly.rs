//! Dense polynomials and reduced rational functions over an exact field.
//!
//! Polynomials are coefficient vectors (ascending, no trailing zeros; the
//! zero polynomial is the empty vector). Rational functions are stored fully
//! reduced with a monic denominator, so equality is structural.

use crate::field::Scalar;
use crate::{Error, Result};

/// Dense univariate polynomial; the variable name is contextual (`t` for the
/// deformation parameter, `s` for the Tate side).
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial<C: Scalar> {
    coeffs: Vec<C>,
}

impl<C: Scalar> Polynomial<C> {
    pub fn from_coeffs(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: C) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The monomial `c * t^k`.
    pub fn monomial(c: C, k: usize) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![c.zero_like(); k + 1];
        coeffs[k] = c;
        Polynomial { coeffs }
    }

    /// The variable `t`, in the same field as `sample`.
    pub fn var(sample: &C) -> Self {
        Self::monomial(sample.one_like(), 1)
    }

    pub fn one(sample: &C) -> Self {
        Self::constant(sample.one_like())
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Order of vanishing at `t = 0` (index of the first nonzero coefficient).
    pub fn ord(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn leading(&self) -> Option<&C> {
        self.coeffs.last()
    }

    pub fn coeff(&self, k: usize) -> Option<&C> {
        self.coeffs.get(k)
    }

    /// A sample element of the coefficient field, if the polynomial is
    /// nonzero.
    pub fn sample(&self) -> Option<&C> {
        self.coeffs.first()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// The constant value if `deg <= 0`.
    pub fn constant_value(&self) -> Option<&C> {
        match self.coeffs.len() {
            0 | 1 => self.coeffs.first(),
            _ => None,
        }
    }

    pub fn neg(&self) -> Self {
        Polynomial { coeffs: self.coeffs.iter().map(|c| c.neg()).collect() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let c = match (self.coeffs.get(i), rhs.coeffs.get(i)) {
                (Some(a), Some(b)) => a.add(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            };
            out.push(c);
        }
        Self::from_coeffs(out)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let zero = self.coeffs[0].zero_like();
        let mut out = vec![zero; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Self::from_coeffs(out)
    }

    pub fn mul_scalar(&self, s: &C) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|c| c.mul(s)).collect())
    }

    pub fn pow_u64(&self, k: u64) -> Self {
        if k == 0 {
            let one = self
                .sample()
                .map(|c| c.one_like())
                .expect("0^0 of the zero polynomial has no field context");
            return Self::constant(one);
        }
        let mut base = self.clone();
        let mut acc: Option<Self> = None;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc.unwrap()
    }

    /// Substitute `t -> z * t` (coefficient `c_k` becomes `z^k c_k`).
    pub fn scale_var(&self, z: &C) -> Self {
        let mut power = z.one_like();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            out.push(c.mul(&power));
            power = power.mul(z);
        }
        Self::from_coeffs(out)
    }

    pub fn eval(&self, x: &C) -> C {
        let mut acc = x.zero_like();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// Horner evaluation at a rational-function argument (composition).
    pub fn eval_rational(&self, r: &RationalFunction<C>) -> Result<RationalFunction<C>> {
        let sample = r.den.sample().expect("denominator is nonzero");
        let mut acc = RationalFunction::zero_like(sample);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(r).add(&RationalFunction::constant(c.clone()));
        }
        Ok(acc)
    }

    /// Division with remainder; errors on a zero divisor.
    pub fn divrem(&self, rhs: &Self) -> Result<(Self, Self)> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.degree() < rhs.degree() {
            return Ok((Self::zero(), self.clone()));
        }
        let lead_inv = rhs.leading().unwrap().inv()?;
        let mut rem = self.coeffs.clone();
        let dq = self.coeffs.len() - rhs.coeffs.len();
        let zero = rhs.leading().unwrap().zero_like();
        let mut quot = vec![zero; dq + 1];
        for k in (0..=dq).rev() {
            let top = rem[k + rhs.coeffs.len() - 1].clone();
            if top.is_zero() {
                continue;
            }
            let f = top.mul(&lead_inv);
            for (i, b) in rhs.coeffs.iter().enumerate() {
                rem[k + i] = rem[k + i].sub(&f.mul(b));
            }
            quot[k] = f;
        }
        Ok((Self::from_coeffs(quot), Self::from_coeffs(rem)))
    }

    /// Monic associate (zero stays zero).
    pub fn monic(&self) -> Self {
        match self.leading() {
            None => self.clone(),
            Some(l) if l.is_one() => self.clone(),
            Some(l) => self.mul_scalar(&l.inv().expect("leading coefficient is nonzero")),
        }
    }

    /// Monic greatest common divisor by the Euclidean algorithm.
    pub fn gcd(a: &Self, b: &Self) -> Self {
        let mut x = a.clone();
        let mut y = b.clone();
        while !y.is_zero() {
            let (_, r) = x.divrem(&y).expect("nonzero divisor");
            x = y;
            y = r;
        }
        x.monic()
    }

    /// Exact division; panics if not divisible (internal use after gcd).
    fn div_exact(&self, rhs: &Self) -> Self {
        let (q, r) = self.divrem(rhs).expect("nonzero divisor");
        debug_assert!(r.is_zero(), "division was not exact");
        q
    }
}

impl<C: Scalar> std::fmt::Debug for Polynomial<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Poly[{}]", crate::textform::poly_string(self, "t"))
    }
}

/// A reduced rational function: `gcd(num, den) = 1`, `den` monic and nonzero.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalFunction<C: Scalar> {
    num: Polynomial<C>,
    den: Polynomial<C>,
}

impl<C: Scalar> RationalFunction<C> {
    /// Reduce `num/den` to canonical form; errors on a zero denominator.
    pub fn new(num: Polynomial<C>, den: Polynomial<C>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if num.is_zero() {
            let one = Polynomial::one(den.sample().unwrap());
            return Ok(RationalFunction { num, den: one });
        }
        let g = Polynomial::gcd(&num, &den);
        let mut num = num.div_exact(&g);
        let mut den = den.div_exact(&g);
        let lead = den.leading().unwrap().clone();
        if !lead.is_one() {
            let inv = lead.inv().expect("nonzero leading coefficient");
            num = num.mul_scalar(&inv);
            den = den.mul_scalar(&inv);
        }
        Ok(RationalFunction { num, den })
    }

    pub fn from_poly(p: Polynomial<C>) -> Self {
        let one = match p.sample() {
            Some(c) => Polynomial::one(c),
            None => panic!("zero polynomial needs context; use zero_like"),
        };
        RationalFunction { num: p, den: one }
    }

    pub fn constant(c: C) -> Self {
        let one = Polynomial::one(&c);
        RationalFunction { num: Polynomial::constant(c), den: one }
    }

    pub fn zero_like(sample: &C) -> Self {
        RationalFunction { num: Polynomial::zero(), den: Polynomial::one(sample) }
    }

    pub fn one_like(sample: &C) -> Self {
        Self::constant(sample.one_like())
    }

    /// The variable itself, `t/1`.
    pub fn var(sample: &C) -> Self {
        Self::from_poly(Polynomial::var(sample))
    }

    pub fn num(&self) -> &Polynomial<C> {
        &self.num
    }

    pub fn den(&self) -> &Polynomial<C> {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn sample(&self) -> &C {
        self.den.sample().expect("denominator is nonzero")
    }

    /// `t`-adic valuation `ord(num) - ord(den)`; `None` for zero.
    pub fn val(&self) -> Option<i64> {
        let n = self.num.ord()? as i64;
        let d = self.den.ord().expect("denominator is nonzero") as i64;
        Some(n - d)
    }

    /// The constant value, if the function is a constant.
    pub fn constant_value(&self) -> Option<&C> {
        if self.den.is_one() {
            if self.num.is_zero() {
                return None; // zero has no unit witness; callers treat separately
            }
            return self.num.constant_value();
        }
        None
    }

    pub fn neg(&self) -> Self {
        RationalFunction { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let num = self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den));
        let den = self.den.mul(&rhs.den);
        Self::new(num, den).expect("denominator product is nonzero")
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero_like(self.sample());
        }
        // Cross-cancel before multiplying to keep degrees down.
        let g1 = Polynomial::gcd(&self.num, &rhs.den);
        let g2 = Polynomial::gcd(&rhs.num, &self.den);
        let num = self.num.div_exact(&g1).mul(&rhs.num.div_exact(&g2));
        let den = self.den.div_exact(&g2).mul(&rhs.den.div_exact(&g1));
        Self::new(num, den).expect("denominator is nonzero")
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, rhs: &Self) -> Result<Self> {
        Ok(self.mul(&rhs.inv()?))
    }

    /// Integer power; reduced inputs stay reduced, so no re-gcd is needed.
    pub fn pow_i64(&self, k: i64) -> Result<Self> {
        if k == 0 {
            return Ok(Self::one_like(self.sample()));
        }
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let e = k.unsigned_abs();
        let num = base.num.pow_u64(e);
        let den = base.den.pow_u64(e);
        Ok(RationalFunction { num, den })
    }

    /// Substitute `t -> z * t` and re-normalize.
    pub fn scale_var(&self, z: &C) -> Self {
        Self::new(self.num.scale_var(z), self.den.scale_var(z))
            .expect("scaling preserves nonzeroness")
    }

    /// Composition `self(r(t))`; errors if the denominator vanishes under
    /// substitution.
    pub fn compose(&self, r: &Self) -> Result<Self> {
        let num = self.num.eval_rational(r)?;
        let den = self.den.eval_rational(r)?;
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        num.div(&den)
    }

    pub fn eval(&self, x: &C) -> Result<C> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        self.num.eval(x).div(&d)
    }
}

impl<C: Scalar> std::fmt::Debug for RationalFunction<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Rf[{}]", crate::textform::rational_string(self, "t"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{fq_make, Scalar};
    use crate::field::FqElement;

    fn poly_f2(coeffs: &[u64]) -> Polynomial<FqElement> {
        let f = fq_make(2, 1).unwrap();
        Polynomial::from_coeffs(coeffs.iter().map(|&c| f.from_int(c as i64)).collect())
    }

    #[test]
    fn reduce_cancels_common_factor() {
        // (t^2 + t)/t = t + 1 over F_2.
        let r = RationalFunction::new(poly_f2(&[0, 1, 1]), poly_f2(&[0, 1])).unwrap();
        assert_eq!(r.num(), &poly_f2(&[1, 1]));
        assert!(r.den().is_one());
    }

    #[test]
    fn reduce_pole() {
        // t/t^3 = 1/t^2.
        let r = RationalFunction::new(poly_f2(&[0, 1]), poly_f2(&[0, 0, 0, 1])).unwrap();
        assert_eq!(r.num(), &poly_f2(&[1]));
        assert_eq!(r.den(), &poly_f2(&[0, 0, 1]));
        assert_eq!(r.val(), Some(-2));
    }

    #[test]
    fn reduce_coprime_unchanged() {
        // (t^2+t+1)/(t+1) over F_2 is already reduced.
        let num = poly_f2(&[1, 1, 1]);
        let den = poly_f2(&[1, 1]);
        let r = RationalFunction::new(num.clone(), den.clone()).unwrap();
        assert_eq!(r.num(), &num);
        assert_eq!(r.den(), &den);
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(matches!(
            RationalFunction::new(poly_f2(&[1]), Polynomial::zero()),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn reduce_scale_invariant() {
        // rf_reduce(a f, a g) == rf_reduce(f, g) for nonzero scalars a.
        let f9 = fq_make(3, 2).unwrap();
        let f = Polynomial::from_coeffs(vec![f9.element(2), f9.element(5), f9.element(1)]);
        let g = Polynomial::from_coeffs(vec![f9.element(3), f9.element(7)]);
        let base = RationalFunction::new(f.clone(), g.clone()).unwrap();
        for a in f9.units() {
            let scaled = RationalFunction::new(f.mul_scalar(&a), g.mul_scalar(&a)).unwrap();
            assert_eq!(scaled, base);
        }
    }

    #[test]
    fn divrem_and_gcd() {
        let f3 = fq_make(3, 1).unwrap();
        let p = |c: &[i64]| {
            Polynomial::from_coeffs(c.iter().map(|&v| f3.from_int(v)).collect::<Vec<_>>())
        };
        // (t^2 - 1) = (t - 1)(t + 1); gcd with (t - 1) is monic t - 1 = t + 2.
        let a = p(&[-1, 0, 1]);
        let b = p(&[-1, 1]);
        let g = Polynomial::gcd(&a, &b);
        assert_eq!(g, p(&[2, 1]));
        let (q, r) = a.divrem(&b).unwrap();
        assert!(r.is_zero());
        assert_eq!(q.mul(&b), a);
    }

    #[test]
    fn frobenius_identity_char_p() {
        // (1 - x)^q = 1 - x^q for rational functions over F_q.
        for (p, m) in [(2u64, 1u32), (3, 1), (2, 2)] {
            let f = fq_make(p, m).unwrap();
            let q = f.q();
            let x = RationalFunction::new(
                Polynomial::from_coeffs(vec![f.from_int(1), f.from_int(1)]),
                Polynomial::from_coeffs(vec![f.from_int(2), f.from_int(1), f.from_int(1)]),
            )
            .unwrap();
            let one = RationalFunction::one_like(&f.one());
            let lhs = one.sub(&x).pow_i64(q as i64).unwrap();
            let rhs = one.sub(&x.pow_i64(q as i64).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn compose_substitutes() {
        let f3 = fq_make(3, 1).unwrap();
        // f(t) = (2t+1)^2 / t^2, r(s) = s^2: f(r) = (2s^2+1)^2/s^4.
        let num = Polynomial::from_coeffs(vec![f3.from_int(1), f3.from_int(2)]).pow_u64(2);
        let den = Polynomial::monomial(f3.one(), 2);
        let f = RationalFunction::new(num, den).unwrap();
        let r = RationalFunction::from_poly(Polynomial::monomial(f3.one(), 2));
        let composed = f.compose(&r).unwrap();
        let expect_num =
            Polynomial::from_coeffs(vec![f3.from_int(1), f3.from_int(0), f3.from_int(2)])
                .pow_u64(2);
        let expect = RationalFunction::new(expect_num, Polynomial::monomial(f3.one(), 4)).unwrap();
        assert_eq!(composed, expect);
    }

    #[test]
    fn scale_var_renormalizes() {
        let f3 = fq_make(3, 1).unwrap();
        // (t+1)/(t+2) with t -> 2t gives (2t+1)/(2t+2) = (t+2)/(t+1).
        let r = RationalFunction::new(
            Polynomial::from_coeffs(vec![f3.from_int(1), f3.from_int(1)]),
            Polynomial::from_coeffs(vec![f3.from_int(2), f3.from_int(1)]),
        )
        .unwrap();
        let s = r.scale_var(&f3.from_int(2));
        assert!(s.den().leading().unwrap().is_one());
        let expect = RationalFunction::new(
            Polynomial::from_coeffs(vec![f3.from_int(2), f3.from_int(1)]),
            Polynomial::from_coeffs(vec![f3.from_int(1), f3.from_int(1)]),
        )
        .unwrap();
        assert_eq!(s, expect);
    }
}
