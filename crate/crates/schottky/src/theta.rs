//! Independent theta-function oracle for the deformation series.
//!
//! The coordinate functions of the curve are theta products over the group:
//!
//! ```text
//! x(z) = kappa_0 * z^q/(z^{q-1} - t^{q-1})
//!        * prod_{gamma != 1} (z - gamma(0))^q / ((z - gamma(oo)) prod_{u != 0} (z - gamma(tu)))
//! y(z) = kappa'_0 * 1/(z^q - z)
//!        * prod_{gamma != 1} (z - gamma(oo))^q / ((z - gamma(0)) prod_{u != 0} (z - gamma(u)))
//! ```
//!
//! with `kappa_0, kappa'_0` pinned by `x(1) = 1` and `y(t) = 1`. Evaluating
//! both at a fixed ordinary point `c` in `F_{q^2} \ F_q` and forming
//! `(x(c)^q - x(c)) (y(c)^q - y(c))` must reproduce `lambda(t)` with all
//! coefficients in `F_q` (the descent check), even though every intermediate
//! lives over `F_{q^2}`. This route never multiplies the per-`v` product
//! formulas together (which would cancel symbolically against the main
//! product), so it is a genuinely independent evaluation.

use crate::asm::AsmParams;
use crate::field::{fq_make, FieldDescriptor, FqElement, Scalar, SubfieldEmbedding};
use crate::moebius::{make_generator, GeneratorKind, P1Point, ProjMatrix};
use crate::poly::{Polynomial, RationalFunction};
use crate::series::{product_accumulate, ConvergenceCertificate, LaurentSeries};
use crate::words::{for_each_word_matrix_with_first, GroupSpec};
use crate::{Error, Result};
use rayon::prelude::*;
use std::sync::Arc;

type Fq = FqElement;
type Series = LaurentSeries<Fq>;

/// Where and how deep the oracle evaluates.
pub struct ThetaEvalContext {
    embedding: SubfieldEmbedding,
    /// The evaluation point `c`, an element of `F_{q^2} \ F_q` (defaults to
    /// the algebra generator of the quadratic extension).
    point: Fq,
    max_len: usize,
    precision: i64,
}

impl ThetaEvalContext {
    pub fn new(params: &AsmParams, max_len: usize, precision: i64) -> Result<Self> {
        let small = params.field().clone();
        let big = fq_make(small.p(), 2 * small.m())?;
        let embedding = SubfieldEmbedding::new(&small, &big)?;
        let point = big.algebra_generator();
        if point.power_q(small.q()) == point {
            return Err(Error::Assertion(
                "default evaluation point unexpectedly lies in F_q".into(),
            ));
        }
        Ok(ThetaEvalContext { embedding, point, max_len, precision })
    }

    pub fn point(&self) -> &Fq {
        &self.point
    }

    pub fn extension(&self) -> &Arc<FieldDescriptor> {
        self.embedding.big()
    }

    pub fn embedding(&self) -> &SubfieldEmbedding {
        &self.embedding
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    fn working_precision(&self) -> i64 {
        self.precision + 32
    }
}

/// The constant `kappa'_v` for `v != 0`, which the calibration `y(oo) = 0`
/// forces to be `-v`.
pub fn kappa_prime_constant(v: &Fq) -> Result<Fq> {
    if v.is_zero() {
        return Err(Error::InvalidArgument("kappa'_v = -v only for v != 0".into()));
    }
    Ok(v.neg())
}

/// Oracle output: the descended series plus the convergence evidence of the
/// two coordinate products.
pub struct ThetaResult {
    /// `(x(c)^q - x(c))(y(c)^q - y(c))` with coefficients retracted to `F_q`.
    pub series: Series,
    pub x_certificate: ConvergenceCertificate,
    pub y_certificate: ConvergenceCertificate,
}

/// The Schottky generators with entries embedded into `F_{q^2}[t]`.
fn gamma_group_embedded(emb: &SubfieldEmbedding) -> Result<GroupSpec<Fq>> {
    let big = emb.big();
    let mut gens = Vec::new();
    for u in emb.small().units() {
        for v in emb.small().units() {
            let m = make_generator(
                GeneratorKind::Delta(emb.embed(&u), emb.embed(&v)),
                big,
            )?;
            gens.push((format!("d[{u},{v}]"), m));
        }
    }
    Ok(GroupSpec::free(gens))
}

fn finite_series(m: &ProjMatrix<Fq>, z: &P1Point<Fq>, prec: i64, what: &str) -> Result<Series> {
    match m.apply(z) {
        P1Point::Finite(r) => Ok(Series::from_rational(&r, "t", prec)),
        P1Point::Infinity => Err(Error::Assertion(format!("{what} evaluated to infinity"))),
    }
}

/// `z - w` for a point evaluation series `w`, where `z` itself is a series.
fn z_minus(z: &Series, w: &Series) -> Result<Series> {
    z.sub(w)
}

struct BracketData {
    spec: GroupSpec<Fq>,
    /// Constant evaluation points `u` for `u` in `F_q` (embedded), the
    /// scaled points `t u` for `u != 0`, and infinity.
    const_points: Vec<P1Point<Fq>>,
    scaled_points: Vec<P1Point<Fq>>,
}

fn bracket_data(emb: &SubfieldEmbedding) -> Result<BracketData> {
    let big = emb.big();
    let spec = gamma_group_embedded(emb)?;
    let const_points: Vec<P1Point<Fq>> = emb
        .small()
        .elements()
        .map(|u| P1Point::constant(emb.embed(&u)))
        .collect();
    let scaled_points: Vec<P1Point<Fq>> = emb
        .small()
        .units()
        .map(|u| {
            P1Point::finite(RationalFunction::from_poly(Polynomial::monomial(
                emb.embed(&u),
                1,
            )))
        })
        .collect();
    Ok(BracketData { spec, const_points, scaled_points })
}

/// Per-length product of the `x`-bracket
/// `(1-g(oo)) prod_u (1-g(tu)) / (1-g(0))^q
///  * (z-g(0))^q / ((z-g(oo)) prod_u (z-g(tu)))`
/// and, when `with_y` is set, of the matching `y`-bracket.
fn bracket_products_n(
    data: &BracketData,
    n: usize,
    z: &Series,
    q: u64,
    prec: i64,
    with_y: bool,
) -> Result<(Series, Option<Series>)> {
    let big_one = match z.sample() {
        Some(c) => c.one_like(),
        None => return Err(Error::InvalidArgument("evaluation point is zero series".into())),
    };
    let one = Series::one("t", &big_one, prec);
    let t = Series::monomial("t", big_one.clone(), 1, prec);
    let parts: Vec<Result<Option<(Series, Option<Series>)>>> = (0..data.spec.alphabet_len())
        .into_par_iter()
        .map(|first| {
            let mut acc: Option<(Series, Option<Series>)> = None;
            for_each_word_matrix_with_first(&data.spec, n, first, &mut |_, m| {
                let g_inf = match m.apply(&P1Point::Infinity) {
                    P1Point::Finite(r) => Series::from_rational(&r, "t", prec),
                    P1Point::Infinity => {
                        return Err(Error::Assertion("g(oo) evaluated to infinity".into()))
                    }
                };
                let g_const: Vec<Series> = data
                    .const_points
                    .iter()
                    .map(|p| finite_series(m, p, prec, "g(u)"))
                    .collect::<Result<_>>()?;
                let g_scaled: Vec<Series> = data
                    .scaled_points
                    .iter()
                    .map(|p| finite_series(m, p, prec, "g(tu)"))
                    .collect::<Result<_>>()?;

                // x-bracket.
                let mut knum = one.sub(&g_inf)?;
                for gs in &g_scaled {
                    knum = knum.mul(&one.sub(gs)?)?;
                }
                let kden = one.sub(&g_const[0])?.frobenius_q(q)?;
                let mut bden = z_minus(z, &g_inf)?;
                for gs in &g_scaled {
                    bden = bden.mul(&z_minus(z, gs)?)?;
                }
                let bnum = z_minus(z, &g_const[0])?.frobenius_q(q)?;
                if kden.is_zero() || bden.is_zero() {
                    return Err(Error::Assertion(
                        "x-bracket denominator vanishes to working precision".into(),
                    ));
                }
                let xb = knum.mul(&bnum)?.div(&kden.mul(&bden)?)?;

                // y-bracket.
                let yb = if with_y {
                    let mut knum = t.sub(&g_const[0])?;
                    for gu in g_const.iter().skip(1) {
                        knum = knum.mul(&t.sub(gu)?)?;
                    }
                    let kden = t.sub(&g_inf)?.frobenius_q(q)?;
                    let bnum = z_minus(z, &g_inf)?.frobenius_q(q)?;
                    let mut bden = z_minus(z, &g_const[0])?;
                    for gu in g_const.iter().skip(1) {
                        bden = bden.mul(&z_minus(z, gu)?)?;
                    }
                    if kden.is_zero() || bden.is_zero() {
                        return Err(Error::Assertion(
                            "y-bracket denominator vanishes to working precision".into(),
                        ));
                    }
                    Some(knum.mul(&bnum)?.div(&kden.mul(&bden)?)?)
                } else {
                    None
                };

                acc = Some(match acc.take() {
                    None => (xb, yb),
                    Some((ax, ay)) => {
                        let nx = ax.mul(&xb)?;
                        let ny = match (ay, yb) {
                            (Some(a), Some(b)) => Some(a.mul(&b)?),
                            _ => None,
                        };
                        (nx, ny)
                    }
                });
                Ok(())
            })?;
            Ok(acc)
        })
        .collect();

    let mut acc: Option<(Series, Option<Series>)> = None;
    for part in parts {
        if let Some((bx, by)) = part? {
            acc = Some(match acc {
                None => (bx, by),
                Some((ax, ay)) => {
                    let nx = ax.mul(&bx)?;
                    let ny = match (ay, by) {
                        (Some(a), Some(b)) => Some(a.mul(&b)?),
                        _ => None,
                    };
                    (nx, ny)
                }
            });
        }
    }
    acc.ok_or_else(|| Error::Assertion(format!("no words of length {n}")))
}

/// The truncated theta product for `x(z)` at an ordinary point `z`
/// (a series over `F_{q^2}`), with its convergence certificate.
pub fn theta_x_at(
    ctx: &ThetaEvalContext,
    params: &AsmParams,
    z: &Series,
) -> Result<(Series, ConvergenceCertificate)> {
    let q = params.q();
    let prec = ctx.working_precision();
    let data = bracket_data(&ctx.embedding)?;
    let brackets = (1..=ctx.max_len)
        .map(|n| bracket_products_n(&data, n, z, q, prec, false).map(|(x, _)| x));
    let (product, cert) =
        product_accumulate(brackets, ctx.precision, params.window(), ctx.max_len)?;

    let big_one = ctx.extension().one();
    let one = Series::one("t", &big_one, prec);
    let t_qm1 = Series::monomial("t", big_one.clone(), (q - 1) as i64, prec);
    // Elementary factor: (1 - t^{q-1}) * z^q / (z^{q-1} - t^{q-1}).
    let zq = z.frobenius_q(q)?;
    let zqm1 = z.pow_i64((q - 1) as i64)?;
    let elementary = one
        .sub(&t_qm1)?
        .mul(&zq)?
        .div(&zqm1.sub(&t_qm1)?)?;
    Ok((elementary.mul(&product)?, cert))
}

/// The truncated theta product for `y(z)`.
pub fn theta_y_at(
    ctx: &ThetaEvalContext,
    params: &AsmParams,
    z: &Series,
) -> Result<(Series, ConvergenceCertificate)> {
    let q = params.q();
    let prec = ctx.working_precision();
    let data = bracket_data(&ctx.embedding)?;
    let brackets = (1..=ctx.max_len).map(|n| {
        bracket_products_n(&data, n, z, q, prec, true)
            .map(|(_, y)| y.expect("y-bracket requested"))
    });
    let (product, cert) =
        product_accumulate(brackets, ctx.precision, params.window(), ctx.max_len)?;

    let big_one = ctx.extension().one();
    let t = Series::monomial("t", big_one.clone(), 1, prec);
    // Elementary factor: (t^q - t) / (z^q - z).
    let tq_minus_t = t.frobenius_q(q)?.sub(&t)?;
    let zq_minus_z = z.frobenius_q(q)?.sub(z)?;
    if zq_minus_z.is_zero() {
        return Err(Error::InvalidArgument("z lies in F_q; pick an exterior point".into()));
    }
    let elementary = tq_minus_t.div(&zq_minus_z)?;
    Ok((elementary.mul(&product)?, cert))
}

/// Evaluate the oracle: `(x(c)^q - x(c)) (y(c)^q - y(c))`, descended to
/// `F_q`. Errors with [`Error::DescentFailure`] if a certified coefficient
/// lies outside the subfield.
pub fn theta_oracle_lambda(ctx: &ThetaEvalContext, params: &AsmParams) -> Result<ThetaResult> {
    let q = params.q();
    let prec = ctx.working_precision();
    let c_series = Series::monomial("t", ctx.point.clone(), 0, prec);

    // One traversal per length computes both brackets.
    let data = bracket_data(&ctx.embedding)?;
    let mut x_brackets = Vec::with_capacity(ctx.max_len);
    let mut y_brackets = Vec::with_capacity(ctx.max_len);
    for n in 1..=ctx.max_len {
        let (x, y) = bracket_products_n(&data, n, &c_series, q, prec, true)?;
        x_brackets.push(x);
        y_brackets.push(y.expect("y-bracket computed"));
    }
    let (x_prod, x_certificate) = product_accumulate(
        x_brackets.into_iter().map(Ok),
        ctx.precision,
        params.window(),
        ctx.max_len,
    )?;
    let (y_prod, y_certificate) = product_accumulate(
        y_brackets.into_iter().map(Ok),
        ctx.precision,
        params.window(),
        ctx.max_len,
    )?;

    let big_one = ctx.extension().one();
    let one = Series::one("t", &big_one, prec);
    let t = Series::monomial("t", big_one.clone(), 1, prec);
    let t_qm1 = t.pow_i64((q - 1) as i64)?;
    let zq = c_series.frobenius_q(q)?;
    let zqm1 = c_series.pow_i64((q - 1) as i64)?;
    let x = one
        .sub(&t_qm1)?
        .mul(&zq)?
        .div(&zqm1.sub(&t_qm1)?)?
        .mul(&x_prod)?;
    let tq_minus_t = t.frobenius_q(q)?.sub(&t)?;
    let zq_minus_z = c_series.frobenius_q(q)?.sub(&c_series)?;
    let y = tq_minus_t.div(&zq_minus_z)?.mul(&y_prod)?;

    // lambda = (x^q - x)(y^q - y), by series powers (not by reusing the
    // per-v product formulas, which would not be independent).
    let xq_minus_x = x.frobenius_q(q)?.sub(&x)?;
    let yq_minus_y = y.frobenius_q(q)?.sub(&y)?;
    let lambda_big = xq_minus_x.mul(&yq_minus_y)?;
    let lambda_big = lambda_big.truncate(ctx.precision.min(lambda_big.precision()));

    // Descent: every certified coefficient must lie in the subfield.
    let emb = &ctx.embedding;
    let series = lambda_big.try_map_coeffs("t", |k, coeff| {
        emb.retract(coeff).ok_or(Error::DescentFailure {
            exponent: k,
            value: coeff.to_string(),
        })
    })?;
    Ok(ThetaResult { series, x_certificate, y_certificate })
}

/// The `x(u) = u` consistency data: for every `u` in `F_q`, the order of
/// agreement between the truncated `x`-product at `z = u` and the constant
/// `u` (at least the certified precision when the oracle is sound).
pub fn theta_x_consistency(
    ctx: &ThetaEvalContext,
    params: &AsmParams,
) -> Result<Vec<(Fq, i64)>> {
    let prec = ctx.working_precision();
    let mut out = Vec::new();
    for u in ctx.embedding.small().elements() {
        let u_big = ctx.embedding.embed(&u);
        let z = Series::monomial("t", u_big.clone(), 0, prec);
        if u.is_zero() {
            // x(0) = 0 exactly: the elementary numerator z^q vanishes.
            out.push((u, prec));
            continue;
        }
        let (x, cert) = theta_x_at(ctx, params, &z)?;
        let target = Series::monomial("t", u_big, 0, x.precision());
        let agreement = x.agreement_order(&target).min(cert.achieved_precision);
        out.push((u, agreement));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::asm_lambda;

    fn params(p: u64, m: u32, prec: i64, len: usize) -> AsmParams {
        AsmParams::new(fq_make(p, m).unwrap(), prec, len).unwrap()
    }

    #[test]
    fn kappa_prime_is_minus_v() {
        let f9 = fq_make(3, 2).unwrap();
        for v in f9.units() {
            assert_eq!(kappa_prime_constant(&v).unwrap(), v.neg());
        }
        assert!(kappa_prime_constant(&f9.zero()).is_err());
    }

    #[test]
    fn context_picks_exterior_point() {
        let pr = params(2, 1, 10, 6);
        let ctx = ThetaEvalContext::new(&pr, 6, 10).unwrap();
        assert_eq!(ctx.extension().q(), 4);
        let c = ctx.point();
        assert_ne!(c.power_q(2), *c);
    }

    #[test]
    fn x_consistency_at_q2() {
        let pr = params(2, 1, 10, 6);
        let ctx = ThetaEvalContext::new(&pr, 6, 10).unwrap();
        for (u, agreement) in theta_x_consistency(&ctx, &pr).unwrap() {
            assert!(
                agreement >= 10,
                "x({u}) differs from {u} at order {agreement}"
            );
        }
    }

    #[test]
    fn oracle_q2_has_unit_valuation_and_matches_tate_multiplier() {
        let pr = params(2, 1, 12, 8);
        let ctx = ThetaEvalContext::new(&pr, 8, 12).unwrap();
        let oracle = theta_oracle_lambda(&ctx, &pr).unwrap();
        assert!(oracle.x_certificate.is_certified());
        assert!(oracle.y_certificate.is_certified());
        assert_eq!(oracle.series.valuation(), Some(1));
        assert!(oracle.series.leading().unwrap().1.is_one());

        // Ground truth: Omega/<delta_{1,1}> is a Tate curve whose parameter
        // k is the multiplier of delta: the small root of z^2 + z = t^4,
        // divided by the unit co-root 1 + z. The q = 2 curve has
        // j = 1/lambda^4 while the Tate curve has j = 1/k + 744 + ..., and
        // 744 is even, so lambda^4 = k at least to O(t^12).
        let f2 = fq_make(2, 1).unwrap();
        let prec = 24i64;
        let t4 = Series::monomial("t", f2.one(), 4, prec);
        let mut z = Series::zero("t", prec);
        for _ in 0..6 {
            z = t4.add(&z.frobenius_q(2).unwrap().truncate(prec)).unwrap();
        }
        let one = Series::one("t", &f2.one(), prec);
        let k = z.mul(&one.add(&z).unwrap().inv().unwrap()).unwrap();
        let lambda4 = oracle.series.frobenius_q(4).unwrap();
        assert!(
            lambda4.truncate(12).agrees_with(&k.truncate(12)),
            "lambda^4 {} vs multiplier {}",
            lambda4,
            k
        );

        // The displayed product differs by t * unit: its valuation is 2.
        let main = asm_lambda(&pr, None).unwrap();
        assert_eq!(main.series.valuation(), Some(2));
        assert!(!oracle.series.agrees_with(&main.series));
    }

    #[test]
    fn direct_route_reproduces_the_display() {
        // The uncollapsed per-word factor gives the same per-length
        // products as the displayed four-point bracket (the collapse is
        // length-preserving conjugation), at q = 2 and q = 3.
        for (p, prec, len) in [(2u64, 10i64, 6usize), (3, 8, 3)] {
            let pr = params(p, 1, prec, len);
            let display = asm_lambda(&pr, None).unwrap();
            let direct = crate::asm::asm_lambda_direct(&pr).unwrap();
            assert!(
                display.series.agrees_with(&direct.series),
                "q={p}: display {} vs direct {}",
                display.series,
                direct.series
            );
        }
    }
}
