//! Exact coefficient fields: `F_q = F_p[x]/(modulus)` and big rationals.
//!
//! Field descriptors are canonical: the same `(p, m)` always produces the
//! same modulus (the lexicographically smallest irreducible polynomial,
//! coefficients compared low-degree-first) and the same multiplicative
//! tables, so results are reproducible across runs and machines.
//!
//! Elements are stored as an index `sum c_i p^i` into the field together
//! with a shared descriptor. Multiplication, inversion and powers go through
//! discrete log/exp tables (size `O(q)`), addition is digit-wise mod `p`,
//! which keeps the group-enumeration inner loops cheap.

use crate::{Error, Result};
use num::BigRational;
use num::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

/// Default bound on the field size `q = p^m`.
pub const DEFAULT_MAX_Q: u64 = 1 << 16;

/// Common interface for exact field elements used as coefficients.
///
/// Zero and one are contextual (`zero_like`) because an `F_q` element only
/// makes sense relative to its descriptor; for rationals the receiver is
/// ignored.
pub trait Scalar: Clone + PartialEq + Eq + fmt::Debug + fmt::Display + Send + Sync {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn from_i64_like(&self, n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    /// Multiplicative inverse; errors on zero.
    fn inv(&self) -> Result<Self>;
    /// Field characteristic; 0 for the rationals.
    fn characteristic(&self) -> u64;

    fn div(&self, rhs: &Self) -> Result<Self> {
        Ok(self.mul(&rhs.inv()?))
    }

    fn pow_u64(&self, mut k: u64) -> Self {
        let mut base = self.clone();
        let mut acc = self.one_like();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// F_p[x] helpers on raw digit vectors, used only during descriptor setup.
// ---------------------------------------------------------------------------

fn poly_trim(c: &mut Vec<u64>) {
    while c.last() == Some(&0) {
        c.pop();
    }
}

fn poly_mul_mod(a: &[u64], b: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + ai * bj) % p;
        }
    }
    poly_rem(&mut prod, modulus, p);
    prod
}

/// Reduce `a` modulo a monic `modulus` in place.
fn poly_rem(a: &mut Vec<u64>, modulus: &[u64], p: u64) {
    let d = modulus.len() - 1;
    poly_trim(a);
    while a.len() > d {
        let lead = *a.last().unwrap();
        let shift = a.len() - 1 - d;
        if lead != 0 {
            for (i, &mi) in modulus.iter().enumerate() {
                let idx = i + shift;
                a[idx] = (a[idx] + (p - 1) * lead % p * mi) % p;
            }
        }
        a.pop();
        poly_trim(a);
    }
}

fn poly_is_divisible(a: &[u64], b: &[u64], p: u64) -> bool {
    let mut r = a.to_vec();
    poly_rem(&mut r, b, p);
    r.is_empty()
}

fn index_to_digits(mut idx: u64, p: u64, m: u32) -> Vec<u64> {
    let mut digits = Vec::with_capacity(m as usize);
    for _ in 0..m {
        digits.push(idx % p);
        idx /= p;
    }
    digits
}

fn digits_to_index(digits: &[u64], p: u64) -> u64 {
    digits.iter().rev().fold(0, |acc, &d| acc * p + d)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// ---------------------------------------------------------------------------
// FieldDescriptor
// ---------------------------------------------------------------------------

/// The coefficient field `F_q = F_p[x]/(modulus)`, `q = p^m`.
///
/// Instances are interned: [`fq_make`] returns the same `Arc` for repeated
/// calls with the same parameters.
pub struct FieldDescriptor {
    p: u64,
    m: u32,
    q: u64,
    /// Monic irreducible modulus as ascending coefficients; `None` for the
    /// prime field (`m == 1`).
    modulus: Option<Vec<u64>>,
    /// `exp[i]` = index of `g^i` for a fixed deterministic generator `g`.
    exp: Vec<u32>,
    /// `log[idx]` of a nonzero element; `log[0]` is a sentinel.
    log: Vec<u32>,
}

impl fmt::Debug for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldDescriptor")
            .field("p", &self.p)
            .field("m", &self.m)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl FieldDescriptor {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Modulus coefficients (ascending, monic), or `None` for a prime field.
    pub fn modulus(&self) -> Option<&[u64]> {
        self.modulus.as_deref()
    }

    /// Canonical string of the modulus as a polynomial in `x`.
    pub fn modulus_string(&self) -> Option<String> {
        self.modulus.as_ref().map(|c| {
            let digits: Vec<u64> = c.clone();
            format_fp_poly(&digits)
        })
    }

    pub fn zero(self: &Arc<Self>) -> FqElement {
        FqElement { field: Arc::clone(self), idx: 0 }
    }

    pub fn one(self: &Arc<Self>) -> FqElement {
        FqElement { field: Arc::clone(self), idx: 1 }
    }

    /// Embed an integer via the prime subfield.
    pub fn from_int(self: &Arc<Self>, n: i64) -> FqElement {
        let r = n.rem_euclid(self.p as i64) as u64;
        FqElement { field: Arc::clone(self), idx: r as u32 }
    }

    /// Element with the given index in the enumeration order
    /// (`idx = sum c_i p^i`).
    pub fn element(self: &Arc<Self>, idx: u64) -> FqElement {
        assert!(idx < self.q, "element index {idx} out of range for q = {}", self.q);
        FqElement { field: Arc::clone(self), idx: idx as u32 }
    }

    /// The class of `x`, which generates `F_q` as an `F_p`-algebra (m >= 2).
    pub fn algebra_generator(self: &Arc<Self>) -> FqElement {
        assert!(self.m >= 2, "prime field has no polynomial generator");
        FqElement { field: Arc::clone(self), idx: self.p as u32 }
    }

    /// Iterator over all `q` elements in enumeration order.
    pub fn elements(self: &Arc<Self>) -> impl Iterator<Item = FqElement> + '_ {
        let this = Arc::clone(self);
        (0..self.q).map(move |i| FqElement { field: Arc::clone(&this), idx: i as u32 })
    }

    /// Iterator over the `q - 1` nonzero elements in enumeration order.
    pub fn units(self: &Arc<Self>) -> impl Iterator<Item = FqElement> + '_ {
        let this = Arc::clone(self);
        (1..self.q).map(move |i| FqElement { field: Arc::clone(&this), idx: i as u32 })
    }

    fn same_field(&self, other: &Self) -> bool {
        self.p == other.p && self.m == other.m
    }
}

/// Lexicographically smallest monic irreducible polynomial of degree `m >= 2`
/// over `F_p`, coefficients compared low-degree-first. Irreducibility is
/// checked by trial division against every monic polynomial of degree up to
/// `m/2`.
fn smallest_irreducible(p: u64, m: u32) -> Vec<u64> {
    let m = m as usize;
    debug_assert!(m >= 2);
    let mut divisors: Vec<Vec<u64>> = Vec::new();
    for d in 1..=m / 2 {
        for k in 0..p.pow(d as u32) {
            let mut c = index_to_digits(k, p, d as u32);
            c.push(1);
            divisors.push(c);
        }
    }
    let total = p.pow(m as u32);
    for k in 0..total {
        let mut cand = index_to_digits(k, p, m as u32);
        cand.push(1); // monic
        if divisors.iter().all(|d| !poly_is_divisible(&cand, d, p)) {
            return cand;
        }
    }
    unreachable!("an irreducible polynomial of degree {m} over F_{p} exists");
}

fn build_descriptor(p: u64, m: u32, max_q: u64) -> Result<FieldDescriptor> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if m == 0 {
        return Err(Error::BadDegree);
    }
    let q128 = (p as u128).pow(m);
    if q128 > max_q as u128 {
        return Err(Error::FieldTooLarge { q: q128, bound: max_q });
    }
    let q = q128 as u64;
    let modulus = if m == 1 { None } else { Some(smallest_irreducible(p, m)) };
    let mod_for_arith: Vec<u64> = modulus.clone().unwrap_or_else(|| vec![0, 1]);

    // Find the smallest multiplicative generator and fill log/exp tables.
    let order = q - 1;
    let factors = prime_factors(order);
    let pow_idx = |base: u64, mut k: u64| -> u64 {
        let mut b = index_to_digits(base, p, m);
        poly_trim(&mut b);
        let mut acc = vec![1u64];
        while k > 0 {
            if k & 1 == 1 {
                acc = poly_mul_mod(&acc, &b, &mod_for_arith, p);
            }
            b = poly_mul_mod(&b, &b, &mod_for_arith, p);
            k >>= 1;
        }
        digits_to_index(&acc, p)
    };
    let generator = if order == 1 {
        1
    } else {
        (2..q)
            .find(|&g| factors.iter().all(|&r| pow_idx(g, order / r) != 1))
            .expect("F_q* is cyclic")
    };

    let mut exp = vec![0u32; order as usize];
    let mut log = vec![u32::MAX; q as usize];
    let gen_digits = {
        let mut d = index_to_digits(generator, p, m);
        poly_trim(&mut d);
        d
    };
    let mut cur = vec![1u64];
    for i in 0..order as usize {
        let idx = digits_to_index(&cur, p);
        exp[i] = idx as u32;
        log[idx as usize] = i as u32;
        cur = poly_mul_mod(&cur, &gen_digits, &mod_for_arith, p);
    }

    Ok(FieldDescriptor { p, m, q, modulus, exp, log })
}

static REGISTRY: OnceLock<Mutex<HashMap<(u64, u32), Arc<FieldDescriptor>>>> = OnceLock::new();

/// Construct (or fetch the interned) descriptor for `F_{p^m}`.
///
/// Deterministic: repeated calls yield an identical descriptor. Errors on
/// non-prime `p`, `m == 0`, or `p^m` above [`DEFAULT_MAX_Q`].
pub fn fq_make(p: u64, m: u32) -> Result<Arc<FieldDescriptor>> {
    fq_make_bounded(p, m, DEFAULT_MAX_Q)
}

/// [`fq_make`] with an explicit bound on `q`.
pub fn fq_make_bounded(p: u64, m: u32, max_q: u64) -> Result<Arc<FieldDescriptor>> {
    let registry = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = registry.lock().unwrap();
    if let Some(d) = guard.get(&(p, m)) {
        if d.q > max_q {
            return Err(Error::FieldTooLarge { q: d.q as u128, bound: max_q });
        }
        return Ok(Arc::clone(d));
    }
    let descriptor = Arc::new(build_descriptor(p, m, max_q)?);
    guard.insert((p, m), Arc::clone(&descriptor));
    Ok(descriptor)
}

// ---------------------------------------------------------------------------
// FqElement
// ---------------------------------------------------------------------------

/// An element of `F_q`, held as an index together with its field.
#[derive(Clone)]
pub struct FqElement {
    field: Arc<FieldDescriptor>,
    idx: u32,
}

impl FqElement {
    pub fn field(&self) -> &Arc<FieldDescriptor> {
        &self.field
    }

    /// Index in the canonical enumeration order (`sum c_i p^i`).
    pub fn index(&self) -> u64 {
        self.idx as u64
    }

    /// Coefficient vector over `F_p`, ascending in the generator `x`.
    pub fn coeffs(&self) -> Vec<u64> {
        index_to_digits(self.idx as u64, self.field.p, self.field.m)
    }

    fn check_same(&self, rhs: &Self) -> Result<()> {
        if !self.field.same_field(&rhs.field) {
            return Err(Error::FieldMismatch(self.field.q, rhs.field.q));
        }
        Ok(())
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        Ok(Scalar::add(self, rhs))
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        Ok(Scalar::sub(self, rhs))
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        Ok(Scalar::mul(self, rhs))
    }

    pub fn try_div(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        Scalar::div(self, rhs)
    }

    /// Integer power, with negative exponents through the inverse.
    pub fn pow(&self, k: i64) -> Result<Self> {
        if k >= 0 {
            Ok(self.pow_u64(k as u64))
        } else {
            Ok(self.inv()?.pow_u64((-k) as u64))
        }
    }

    /// The p-power Frobenius `a -> a^p`.
    pub fn frobenius(&self) -> Self {
        self.pow_u64(self.field.p)
    }

    /// `a -> a^q` relative to a subfield of size `q` (used for descent
    /// checks: `a` lies in that subfield iff `a^q == a`).
    pub fn power_q(&self, q: u64) -> Self {
        self.pow_u64(q)
    }
}

impl PartialEq for FqElement {
    fn eq(&self, other: &Self) -> bool {
        self.field.same_field(&other.field) && self.idx == other.idx
    }
}

impl Eq for FqElement {}

impl std::hash::Hash for FqElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (self.field.p, self.field.m, self.idx).hash(state);
    }
}

impl fmt::Debug for FqElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FqElement({} in F_{})", self, self.field.q)
    }
}

fn format_fp_poly(digits: &[u64]) -> String {
    let mut terms: Vec<String> = Vec::new();
    for (i, &c) in digits.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let term = match (i, c) {
            (0, c) => format!("{c}"),
            (1, 1) => "x".to_string(),
            (1, c) => format!("{c}*x"),
            (i, 1) => format!("x^{i}"),
            (i, c) => format!("{c}*x^{i}"),
        };
        terms.push(term);
    }
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join("+")
    }
}

impl fmt::Display for FqElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_fp_poly(&self.coeffs()))
    }
}

impl Scalar for FqElement {
    fn zero_like(&self) -> Self {
        FqElement { field: Arc::clone(&self.field), idx: 0 }
    }

    fn one_like(&self) -> Self {
        FqElement { field: Arc::clone(&self.field), idx: 1 }
    }

    fn from_i64_like(&self, n: i64) -> Self {
        self.field.from_int(n)
    }

    fn is_zero(&self) -> bool {
        self.idx == 0
    }

    fn is_one(&self) -> bool {
        self.idx == 1
    }

    fn add(&self, rhs: &Self) -> Self {
        debug_assert!(self.field.same_field(&rhs.field), "field mismatch");
        let f = &self.field;
        let idx = if f.p == 2 {
            self.idx ^ rhs.idx
        } else {
            let mut a = self.idx as u64;
            let mut b = rhs.idx as u64;
            let mut out = 0u64;
            let mut scale = 1u64;
            for _ in 0..f.m {
                out += (a % f.p + b % f.p) % f.p * scale;
                a /= f.p;
                b /= f.p;
                scale *= f.p;
            }
            out as u32
        };
        FqElement { field: Arc::clone(f), idx }
    }

    fn sub(&self, rhs: &Self) -> Self {
        Scalar::add(self, &rhs.neg())
    }

    fn neg(&self) -> Self {
        let f = &self.field;
        if f.p == 2 {
            return self.clone();
        }
        let mut a = self.idx as u64;
        let mut out = 0u64;
        let mut scale = 1u64;
        for _ in 0..f.m {
            out += (f.p - a % f.p) % f.p * scale;
            a /= f.p;
            scale *= f.p;
        }
        FqElement { field: Arc::clone(f), idx: out as u32 }
    }

    fn mul(&self, rhs: &Self) -> Self {
        debug_assert!(self.field.same_field(&rhs.field), "field mismatch");
        let f = &self.field;
        if self.idx == 0 || rhs.idx == 0 {
            return self.zero_like();
        }
        let order = f.q - 1;
        let l = (f.log[self.idx as usize] as u64 + f.log[rhs.idx as usize] as u64) % order;
        FqElement { field: Arc::clone(f), idx: f.exp[l as usize] }
    }

    fn inv(&self) -> Result<Self> {
        let f = &self.field;
        if self.idx == 0 {
            return Err(Error::DivisionByZero);
        }
        let order = f.q - 1;
        let l = (order - f.log[self.idx as usize] as u64) % order;
        Ok(FqElement { field: Arc::clone(f), idx: f.exp[l as usize] })
    }

    fn characteristic(&self) -> u64 {
        self.field.p
    }

    fn pow_u64(&self, k: u64) -> Self {
        let f = &self.field;
        if self.idx == 0 {
            return if k == 0 { self.one_like() } else { self.zero_like() };
        }
        let order = f.q - 1;
        let l = (f.log[self.idx as usize] as u64 * (k % order)) % order;
        FqElement { field: Arc::clone(f), idx: f.exp[l as usize] }
    }
}

impl std::ops::Add for &FqElement {
    type Output = FqElement;
    fn add(self, rhs: &FqElement) -> FqElement {
        Scalar::add(self, rhs)
    }
}

impl std::ops::Sub for &FqElement {
    type Output = FqElement;
    fn sub(self, rhs: &FqElement) -> FqElement {
        Scalar::sub(self, rhs)
    }
}

impl std::ops::Mul for &FqElement {
    type Output = FqElement;
    fn mul(self, rhs: &FqElement) -> FqElement {
        Scalar::mul(self, rhs)
    }
}

impl std::ops::Neg for &FqElement {
    type Output = FqElement;
    fn neg(self) -> FqElement {
        Scalar::neg(self)
    }
}

// ---------------------------------------------------------------------------
// Subfield embeddings (F_q into F_{q^k}), used by the theta oracle.
// ---------------------------------------------------------------------------

/// A field homomorphism `F_q -> F_Q` for `q | Q` towers, determined by the
/// smallest root of the small modulus inside the big field.
pub struct SubfieldEmbedding {
    small: Arc<FieldDescriptor>,
    big: Arc<FieldDescriptor>,
    /// `forward[idx_small]` = index of the image in the big field.
    forward: Vec<u32>,
    backward: HashMap<u32, u32>,
}

impl SubfieldEmbedding {
    pub fn new(small: &Arc<FieldDescriptor>, big: &Arc<FieldDescriptor>) -> Result<Self> {
        if small.p != big.p || big.m % small.m != 0 {
            return Err(Error::InvalidArgument(format!(
                "F_{} is not a subfield of F_{}",
                small.q, big.q
            )));
        }
        let root = if small.m == 1 {
            big.from_int(1) // placeholder; prime subfield embeds by index
        } else {
            let modulus = small.modulus.as_ref().expect("m >= 2 has a modulus");
            let eval = |a: &FqElement| -> FqElement {
                let mut acc = big.zero();
                for &c in modulus.iter().rev() {
                    acc = Scalar::add(&Scalar::mul(&acc, a), &big.from_int(c as i64));
                }
                acc
            };
            // Roots of the small modulus lie in the image subgroup of order
            // q_small - 1, so scan only that subgroup plus zero.
            let step = (big.q - 1) / (small.q - 1);
            let mut found: Option<FqElement> = None;
            for k in 0..(small.q - 1) {
                let cand = big.element(big.exp[(k * step % (big.q - 1)) as usize] as u64);
                if eval(&cand).is_zero() {
                    let better = match &found {
                        None => true,
                        Some(prev) => cand.idx < prev.idx,
                    };
                    if better {
                        found = Some(cand);
                    }
                }
            }
            found.ok_or_else(|| {
                Error::Assertion(format!(
                    "modulus of F_{} has no root in F_{}",
                    small.q, big.q
                ))
            })?
        };

        let mut forward = vec![0u32; small.q as usize];
        let mut backward = HashMap::new();
        for idx in 0..small.q {
            let digits = index_to_digits(idx, small.p, small.m);
            let mut acc = big.zero();
            for &c in digits.iter().rev() {
                acc = Scalar::add(&Scalar::mul(&acc, &root), &big.from_int(c as i64));
            }
            forward[idx as usize] = acc.idx;
            backward.insert(acc.idx, idx as u32);
        }
        Ok(SubfieldEmbedding { small: Arc::clone(small), big: Arc::clone(big), forward, backward })
    }

    pub fn small(&self) -> &Arc<FieldDescriptor> {
        &self.small
    }

    pub fn big(&self) -> &Arc<FieldDescriptor> {
        &self.big
    }

    pub fn embed(&self, a: &FqElement) -> FqElement {
        assert!(a.field.same_field(&self.small), "element not in the small field");
        self.big.element(self.forward[a.idx as usize] as u64)
    }

    /// Map an element of the big field back, if it lies in the subfield.
    pub fn retract(&self, b: &FqElement) -> Option<FqElement> {
        assert!(b.field.same_field(&self.big), "element not in the big field");
        self.backward.get(&b.idx).map(|&i| self.small.element(i as u64))
    }
}

// ---------------------------------------------------------------------------
// BigRational as a Scalar (characteristic-0 coefficients for the Tate case).
// ---------------------------------------------------------------------------

impl Scalar for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }

    fn one_like(&self) -> Self {
        BigRational::one()
    }

    fn from_i64_like(&self, n: i64) -> Self {
        BigRational::from_integer(n.into())
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn is_one(&self) -> bool {
        One::is_one(self)
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn inv(&self) -> Result<Self> {
        if Zero::is_zero(self) {
            return Err(Error::DivisionByZero);
        }
        Ok(self.recip())
    }

    fn characteristic(&self) -> u64 {
        0
    }
}

/// Rational `n` as a `BigRational` (handy for tests and the Tate module).
pub fn big(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// True if a rational is an integer, i.e. has denominator 1.
pub fn is_integer(r: &BigRational) -> bool {
    r.denom().is_one() || Zero::is_zero(r)
}

/// True if an integer rational is divisible by `d`.
pub fn integer_divisible(r: &BigRational, d: i64) -> bool {
    is_integer(r) && (r.numer() % num::BigInt::from(d)).abs().is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_has_no_modulus() {
        let f2 = fq_make(2, 1).unwrap();
        assert_eq!(f2.q(), 2);
        assert!(f2.modulus().is_none());
    }

    #[test]
    fn f4_modulus_is_lexicographically_smallest() {
        // Independent scan: the four monic degree-2 polynomials over F_2 are
        // x^2, x^2+1, x^2+x, x^2+x+1; only the last has no root and no
        // factorization into degree-1 polynomials.
        let all: [[u64; 3]; 4] = [[0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1]];
        let has_root = |c: &[u64; 3]| (0..2u64).any(|x| (c[0] + c[1] * x + c[2] * x * x) % 2 == 0);
        let irreducible: Vec<_> = all.iter().filter(|c| !has_root(c)).collect();
        assert_eq!(irreducible, vec![&[1u64, 1, 1]]);

        let f4 = fq_make(2, 2).unwrap();
        assert_eq!(f4.modulus(), Some(&[1u64, 1, 1][..]));
        assert_eq!(f4.modulus_string().unwrap(), "x^2+x+1");
    }

    #[test]
    fn non_prime_p_rejected() {
        assert!(matches!(fq_make(4, 1), Err(Error::NotPrime(4))));
        assert!(matches!(fq_make(2, 0), Err(Error::BadDegree)));
        assert!(matches!(
            fq_make_bounded(2, 20, DEFAULT_MAX_Q),
            Err(Error::FieldTooLarge { .. })
        ));
    }

    #[test]
    fn repeated_make_is_identical() {
        let a = fq_make(3, 2).unwrap();
        let b = fq_make(3, 2).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.modulus(), b.modulus());
    }

    #[test]
    fn f4_multiplication_table() {
        // In F_4 = F_2[x]/(x^2+x+1): x * (x+1) = x^2 + x = 1.
        let f4 = fq_make(2, 2).unwrap();
        let x = f4.element(2);
        let x1 = f4.element(3);
        assert!(Scalar::mul(&x, &x1).is_one());
        // x^2 = x + 1.
        assert_eq!(x.pow_u64(2), x1);
    }

    #[test]
    fn lagrange_and_frobenius() {
        for (p, m) in [(2, 1), (2, 2), (3, 1), (3, 2), (2, 3), (5, 1)] {
            let f = fq_make(p, m).unwrap();
            let q = f.q();
            for a in f.units() {
                assert!(a.pow_u64(q - 1).is_one(), "a^(q-1) != 1 in F_{q}");
            }
            // Frobenius fixes exactly the prime subfield.
            let fixed: Vec<u64> =
                f.elements().filter(|a| a.frobenius() == *a).map(|a| a.index()).collect();
            assert_eq!(fixed, (0..p).collect::<Vec<_>>());
        }
    }

    #[test]
    fn field_axioms_randomized() {
        // Deterministic LCG sampling; 10^4 triples per field.
        for (p, m) in [(2, 2), (3, 1), (3, 2)] {
            let f = fq_make(p, m).unwrap();
            let q = f.q();
            let mut state = 0x9e3779b97f4a7c15u64;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 33
            };
            for _ in 0..10_000 {
                let a = f.element(next() % q);
                let b = f.element(next() % q);
                let c = f.element(next() % q);
                let ab_c = Scalar::mul(&Scalar::mul(&a, &b), &c);
                let a_bc = Scalar::mul(&a, &Scalar::mul(&b, &c));
                assert_eq!(ab_c, a_bc);
                let left = Scalar::mul(&a, &Scalar::add(&b, &c));
                let right = Scalar::add(&Scalar::mul(&a, &b), &Scalar::mul(&a, &c));
                assert_eq!(left, right);
                if !a.is_zero() {
                    assert!(Scalar::mul(&a, &a.inv().unwrap()).is_one());
                }
                assert!(Scalar::add(&a, &a.neg()).is_zero());
            }
        }
    }

    #[test]
    fn mismatch_and_zero_division_errors() {
        let f4 = fq_make(2, 2).unwrap();
        let f3 = fq_make(3, 1).unwrap();
        let a = f4.one();
        let b = f3.one();
        assert!(matches!(a.try_add(&b), Err(Error::FieldMismatch(4, 3))));
        assert!(matches!(a.try_div(&f4.zero()), Err(Error::DivisionByZero)));
    }

    #[test]
    fn subfield_embedding_roundtrip() {
        let f2 = fq_make(2, 1).unwrap();
        let f4 = fq_make(2, 2).unwrap();
        let emb = SubfieldEmbedding::new(&f2, &f4).unwrap();
        for a in f2.elements() {
            let up = emb.embed(&a);
            assert_eq!(emb.retract(&up), Some(a.clone()));
            // Subfield elements are exactly the Frobenius-stable ones.
            assert_eq!(up.power_q(2), up);
        }
        // The algebra generator of F_4 is not in F_2.
        let x = f4.algebra_generator();
        assert_eq!(emb.retract(&x), None);
        assert_ne!(x.power_q(2), x);

        // A proper tower: F_3 in F_9, homomorphism property on all pairs.
        let f3 = fq_make(3, 1).unwrap();
        let f9 = fq_make(3, 2).unwrap();
        let emb = SubfieldEmbedding::new(&f3, &f9).unwrap();
        for a in f3.elements() {
            for b in f3.elements() {
                assert_eq!(
                    emb.embed(&Scalar::add(&a, &b)),
                    Scalar::add(&emb.embed(&a), &emb.embed(&b))
                );
                assert_eq!(
                    emb.embed(&Scalar::mul(&a, &b)),
                    Scalar::mul(&emb.embed(&a), &emb.embed(&b))
                );
            }
        }
    }

    #[test]
    fn element_display_as_x_polynomials() {
        let f9 = fq_make(3, 2).unwrap();
        assert_eq!(f9.element(0).to_string(), "0");
        assert_eq!(f9.element(2).to_string(), "2");
        assert_eq!(f9.element(3).to_string(), "x");
        assert_eq!(f9.element(7).to_string(), "2*x+1");
    }
}
