//! Projective 2x2 matrices over `F_q[t]` and their fractional-linear action.
//!
//! Matrices are kept in a canonical form so that equality in `PGL(2)` is
//! structural: entries are divided by their common polynomial factor and
//! scaled so the first nonzero entry (in the order a, b, c, d) is monic.
//!
//! The named generators are the deformation-family matrices
//!
//! ```text
//! eps_u = [1 u; 0 1]    tau = [0 t; 1 0]    eps'_u = tau eps_u tau = [t 0; u t]
//! mu_a  = [a 0; 0 1]    delta_{u,v} = [eps_u, eps'_v]  (commutator)
//! ```
//!
//! with `u, v` in `F_q` and `a` in `F_q*`; the commutators `delta_{u,v}`
//! (`u, v != 0`) freely generate the Schottky group of the family.

use crate::field::{FieldDescriptor, FqElement, Scalar};
use crate::poly::{Polynomial, RationalFunction};
use crate::{Error, Result};
use std::sync::Arc;

/// A point of the projective line over the fraction field.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum P1Point<C: Scalar> {
    Finite(RationalFunction<C>),
    Infinity,
}

impl<C: Scalar> P1Point<C> {
    pub fn constant(c: C) -> Self {
        P1Point::Finite(RationalFunction::constant(c))
    }

    pub fn finite(r: RationalFunction<C>) -> Self {
        P1Point::Finite(r)
    }

    pub fn as_finite(&self) -> Option<&RationalFunction<C>> {
        match self {
            P1Point::Finite(r) => Some(r),
            P1Point::Infinity => None,
        }
    }
}

/// An element of `PGL(2, F(t))` with polynomial entries, stored canonically.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProjMatrix<C: Scalar> {
    a: Polynomial<C>,
    b: Polynomial<C>,
    c: Polynomial<C>,
    d: Polynomial<C>,
}

impl<C: Scalar> ProjMatrix<C> {
    /// Canonicalize and validate; errors on a singular matrix.
    pub fn new(
        a: Polynomial<C>,
        b: Polynomial<C>,
        c: Polynomial<C>,
        d: Polynomial<C>,
    ) -> Result<Self> {
        let det = a.mul(&d).sub(&b.mul(&c));
        if det.is_zero() {
            return Err(Error::Degenerate("singular projective matrix".into()));
        }
        let mut m = ProjMatrix { a, b, c, d };
        m.canonicalize();
        Ok(m)
    }

    fn canonicalize(&mut self) {
        let entries = [&self.a, &self.b, &self.c, &self.d];
        let mut g = Polynomial::zero();
        for e in entries {
            g = Polynomial::gcd(&g, e);
        }
        if !g.is_one() && !g.is_zero() {
            let div = |p: &Polynomial<C>| {
                if p.is_zero() {
                    p.clone()
                } else {
                    p.divrem(&g).expect("gcd divides").0
                }
            };
            self.a = div(&self.a);
            self.b = div(&self.b);
            self.c = div(&self.c);
            self.d = div(&self.d);
        }
        let lead = [&self.a, &self.b, &self.c, &self.d]
            .into_iter()
            .find_map(|p| p.leading())
            .expect("nonsingular matrix has a nonzero entry")
            .clone();
        if !lead.is_one() {
            let inv = lead.inv().expect("field element");
            self.a = self.a.mul_scalar(&inv);
            self.b = self.b.mul_scalar(&inv);
            self.c = self.c.mul_scalar(&inv);
            self.d = self.d.mul_scalar(&inv);
        }
    }

    pub fn identity(sample: &C) -> Self {
        let one = Polynomial::one(sample);
        ProjMatrix { a: one.clone(), b: Polynomial::zero(), c: Polynomial::zero(), d: one }
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.b.is_zero() && self.c.is_zero() && self.d.is_one()
    }

    pub fn entries(&self) -> [&Polynomial<C>; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn lower_left(&self) -> &Polynomial<C> {
        &self.c
    }

    pub fn det(&self) -> Polynomial<C> {
        self.a.mul(&self.d).sub(&self.b.mul(&self.c))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let a = self.a.mul(&rhs.a).add(&self.b.mul(&rhs.c));
        let b = self.a.mul(&rhs.b).add(&self.b.mul(&rhs.d));
        let c = self.c.mul(&rhs.a).add(&self.d.mul(&rhs.c));
        let d = self.c.mul(&rhs.b).add(&self.d.mul(&rhs.d));
        let mut m = ProjMatrix { a, b, c, d };
        m.canonicalize();
        m
    }

    /// Projective inverse (the adjugate).
    pub fn inv(&self) -> Self {
        let mut m = ProjMatrix {
            a: self.d.clone(),
            b: self.b.neg(),
            c: self.c.neg(),
            d: self.a.clone(),
        };
        m.canonicalize();
        m
    }

    /// Fractional-linear action `z -> (az + b)/(cz + d)` with the standard
    /// conventions at infinity.
    pub fn apply(&self, z: &P1Point<C>) -> P1Point<C> {
        match z {
            P1Point::Infinity => {
                if self.c.is_zero() {
                    P1Point::Infinity
                } else {
                    let image = RationalFunction::new(self.a.clone(), self.c.clone())
                        .expect("nonzero denominator");
                    P1Point::Finite(image)
                }
            }
            P1Point::Finite(z) => {
                let lift = |p: &Polynomial<C>| -> RationalFunction<C> {
                    if p.is_zero() {
                        RationalFunction::zero_like(z.sample())
                    } else {
                        RationalFunction::from_poly(p.clone())
                    }
                };
                let num = lift(&self.a).mul(z).add(&lift(&self.b));
                let den = lift(&self.c).mul(z).add(&lift(&self.d));
                if den.is_zero() {
                    debug_assert!(!num.is_zero(), "indeterminate image of invertible matrix");
                    P1Point::Infinity
                } else {
                    P1Point::Finite(num.div(&den).expect("nonzero denominator"))
                }
            }
        }
    }

    /// The `PGL` conjugacy invariant `trace^2 / det`.
    pub fn trace_invariant(&self) -> RationalFunction<C> {
        let tr = self.a.add(&self.d);
        let tr2 = tr.mul(&tr);
        RationalFunction::new(tr2, self.det()).expect("nonzero determinant")
    }

    /// Substitute `t -> z t` in every entry and re-canonicalize.
    pub fn scale_var(&self, z: &C) -> Self {
        let mut m = ProjMatrix {
            a: self.a.scale_var(z),
            b: self.b.scale_var(z),
            c: self.c.scale_var(z),
            d: self.d.scale_var(z),
        };
        m.canonicalize();
        m
    }

    /// The four entry strings `[a, b, c, d]` in the given variable.
    pub fn entry_strings(&self, var: &str) -> [String; 4] {
        [
            crate::textform::poly_string(&self.a, var),
            crate::textform::poly_string(&self.b, var),
            crate::textform::poly_string(&self.c, var),
            crate::textform::poly_string(&self.d, var),
        ]
    }
}

// ---------------------------------------------------------------------------
// Named generators of the deformation family.
// ---------------------------------------------------------------------------

/// Which named generator to build.
#[derive(Clone, Debug)]
pub enum GeneratorKind {
    /// `eps_u = [1 u; 0 1]`, `u` in `F_q`.
    Eps(FqElement),
    /// `eps'_u = [t 0; u t]`.
    EpsPrime(FqElement),
    /// `tau = [0 t; 1 0]` (order 2).
    Tau,
    /// `mu_a = [a 0; 0 1]`, i.e. `z -> a z`, `a` in `F_q*`.
    Mu(FqElement),
    /// `delta_{u,v} = eps_u eps'_v eps_{-u} eps'_{-v}`, `u, v` in `F_q*`.
    Delta(FqElement, FqElement),
}

type FqMatrix = ProjMatrix<FqElement>;

/// Build a named generator over `F_q[t]`.
pub fn make_generator(kind: GeneratorKind, field: &Arc<FieldDescriptor>) -> Result<FqMatrix> {
    let one = Polynomial::one(&field.one());
    let t = Polynomial::var(&field.one());
    let zero = Polynomial::zero();
    match kind {
        GeneratorKind::Eps(u) => {
            ProjMatrix::new(one.clone(), Polynomial::constant(u), zero, one)
        }
        GeneratorKind::EpsPrime(u) => {
            ProjMatrix::new(t.clone(), zero, Polynomial::constant(u), t)
        }
        GeneratorKind::Tau => ProjMatrix::new(zero.clone(), t, one, zero),
        GeneratorKind::Mu(a) => {
            if a.is_zero() {
                return Err(Error::InvalidArgument("mu_a requires a != 0".into()));
            }
            ProjMatrix::new(Polynomial::constant(a), zero.clone(), zero, one)
        }
        GeneratorKind::Delta(u, v) => {
            if u.is_zero() || v.is_zero() {
                return Err(Error::InvalidArgument(
                    "delta_{u,v} is a free generator only for u, v != 0".into(),
                ));
            }
            let eps_u = make_generator(GeneratorKind::Eps(u.clone()), field)?;
            let epsp_v = make_generator(GeneratorKind::EpsPrime(v.clone()), field)?;
            let eps_nu = make_generator(GeneratorKind::Eps(u.neg()), field)?;
            let epsp_nv = make_generator(GeneratorKind::EpsPrime(v.neg()), field)?;
            Ok(eps_u.mul(&epsp_v).mul(&eps_nu).mul(&epsp_nv))
        }
    }
}
