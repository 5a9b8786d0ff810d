//! Exact rational arithmetic and small dense rational vectors.
//!
//! Everything downstream (score classification, radii, budgets, coverage
//! masses) compares quantities for *exact* equality or strict order, so this
//! module never touches floating point. The one representational rule that
//! keeps comparisons cheap and serialization canonical:
//!
//! * a [`Rational`] is always in lowest terms with a strictly positive
//!   denominator; the sign lives on the numerator.
//!
//! Distances are handled in *squared* form throughout the crate (`l2_dist_sq`,
//! never `l2_dist`): square roots of rationals are generally irrational, so
//! radii and margins are stored and compared as squares instead.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// Errors from rational construction, parsing, and vector operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumericError {
    /// A denominator of zero was supplied to a constructor or parser.
    #[error("zero denominator")]
    ZeroDenominator,
    /// The input string is not of the form `num` or `num/den` with optional
    /// leading minus signs.
    #[error("malformed rational literal: {0:?}")]
    Malformed(String),
    /// Vectors must carry at least one component.
    #[error("empty vector")]
    EmptyVector,
    /// A binary vector operation received operands of different dimension.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Arbitrary-precision rational number in canonical form.
///
/// Canonical form — lowest terms, denominator > 0 — is an invariant of every
/// constructed value, which makes `Eq`/`Hash` structural and `Display` output
/// unique per value. Construct via [`Rational::new`], [`Rational::int`],
/// [`Rational::from_bigints`], or parsing.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational {
    num: BigInt,
    den: BigInt,
}

impl Rational {
    /// Builds `num/den` from machine integers.
    ///
    /// # Panics
    ///
    /// Panics if `den == 0`. Use [`Rational::from_bigints`] for fallible
    /// construction from untrusted input.
    pub fn new(num: i64, den: i64) -> Self {
        Self::from_bigints(BigInt::from(num), BigInt::from(den))
            .expect("literal rational with zero denominator")
    }

    /// The integer `n` as a rational.
    pub fn int(n: i64) -> Self {
        Rational { num: BigInt::from(n), den: BigInt::one() }
    }

    pub fn zero() -> Self {
        Rational { num: BigInt::zero(), den: BigInt::one() }
    }

    pub fn one() -> Self {
        Rational { num: BigInt::one(), den: BigInt::one() }
    }

    /// Canonicalizing constructor: reduces to lowest terms and moves the sign
    /// onto the numerator. Rejects a zero denominator.
    pub fn from_bigints(num: BigInt, den: BigInt) -> Result<Self, NumericError> {
        if den.is_zero() {
            return Err(NumericError::ZeroDenominator);
        }
        let (mut num, mut den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        if num.is_zero() {
            den = BigInt::one();
        } else {
            let g = gcd(num.abs(), den.clone());
            num /= &g;
            den /= &g;
        }
        Ok(Rational { num, den })
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.num.is_positive()
    }

    pub fn is_nonneg(&self) -> bool {
        !self.num.is_negative()
    }

    /// True when the value is an integer (denominator 1).
    pub fn is_integer(&self) -> bool {
        self.den.is_one()
    }

    pub fn abs(&self) -> Self {
        Rational { num: self.num.abs(), den: self.den.clone() }
    }

    /// `self * self`, the workhorse of the squared-distance discipline.
    pub fn squared(&self) -> Self {
        // Already in lowest terms, so the square is too.
        Rational { num: &self.num * &self.num, den: &self.den * &self.den }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(
            Rational::from_bigints(self.den.clone(), self.num.clone())
                .expect("nonzero numerator as denominator"),
        )
    }

    /// Division that refuses a zero divisor instead of panicking.
    pub fn checked_div(&self, rhs: &Rational) -> Option<Self> {
        rhs.recip().map(|r| self * &r)
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

fn gcd(mut a: BigInt, mut b: BigInt) -> BigInt {
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

impl fmt::Display for Rational {
    /// Canonical text form: `num/den` in lowest terms, or just `num` for
    /// integers. This is the exact byte form used by the wire format, so it
    /// must stay stable.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Rational {
    type Err = NumericError;

    /// Accepts `num` or `num/den`, each an optional `-` followed by ASCII
    /// digits. Non-canonical input (`"2/4"`, `"-2/-4"`) is accepted and
    /// canonicalized; anything else — signs on the wrong side, whitespace,
    /// empty parts — is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        fn parse_part(part: &str, whole: &str) -> Result<BigInt, NumericError> {
            let digits = part.strip_prefix('-').unwrap_or(part);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(NumericError::Malformed(whole.to_string()));
            }
            part.parse::<BigInt>().map_err(|_| NumericError::Malformed(whole.to_string()))
        }

        match s.split_once('/') {
            None => Ok(Rational { num: parse_part(s, s)?, den: BigInt::one() }),
            Some((num, den)) => {
                let num = parse_part(num, s)?;
                let den = parse_part(den, s)?;
                Rational::from_bigints(num, den)
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        // Denominators are positive, so cross-multiplication preserves order.
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        Rational::from_bigints(&self.num * &rhs.den + &rhs.num * &self.den, &self.den * &rhs.den)
            .expect("product of positive denominators is positive")
    }
}

impl Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        Rational::from_bigints(&self.num * &rhs.den - &rhs.num * &self.den, &self.den * &rhs.den)
            .expect("product of positive denominators is positive")
    }
}

impl Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        Rational::from_bigints(&self.num * &rhs.num, &self.den * &rhs.den)
            .expect("product of positive denominators is positive")
    }
}

impl Div for &Rational {
    type Output = Rational;
    /// # Panics
    ///
    /// Panics on a zero divisor; use [`Rational::checked_div`] when the
    /// divisor is data-dependent.
    fn div(self, rhs: &Rational) -> Rational {
        self.checked_div(rhs).expect("division by zero rational")
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational { num: -self.num.clone(), den: self.den.clone() }
    }
}

macro_rules! forward_owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);
forward_owned_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| &acc + &x)
    }
}

/// Fixed-dimension vector of rationals.
///
/// The dimension is the component count and must be at least one; binary
/// operations insist on matching dimensions rather than padding or
/// truncating.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalVector {
    components: Vec<Rational>,
}

impl RationalVector {
    pub fn new(components: Vec<Rational>) -> Result<Self, NumericError> {
        if components.is_empty() {
            return Err(NumericError::EmptyVector);
        }
        Ok(RationalVector { components })
    }

    /// Convenience constructor from `(num, den)` literal pairs.
    ///
    /// # Panics
    ///
    /// Panics on an empty list or a zero denominator, like [`Rational::new`].
    pub fn from_pairs(pairs: &[(i64, i64)]) -> Self {
        RationalVector::new(pairs.iter().map(|&(n, d)| Rational::new(n, d)).collect())
            .expect("literal vector must be nonempty")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Rational] {
        &self.components
    }

    fn check_dim(&self, other: &Self) -> Result<(), NumericError> {
        if self.dim() != other.dim() {
            return Err(NumericError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    /// Standard inner product `Σ uᵢ·vᵢ`.
    pub fn inner_prod(&self, other: &Self) -> Result<Rational, NumericError> {
        self.check_dim(other)?;
        Ok(self.components.iter().zip(&other.components).map(|(a, b)| a * b).sum())
    }

    /// Squared Euclidean norm `Σ uᵢ²`. Kept squared on purpose; see the
    /// module docs.
    pub fn l2_norm_sq(&self) -> Rational {
        self.components.iter().map(Rational::squared).sum()
    }

    /// Squared Euclidean distance `Σ (uᵢ−vᵢ)²`.
    pub fn l2_dist_sq(&self, other: &Self) -> Result<Rational, NumericError> {
        self.check_dim(other)?;
        Ok(self.components.iter().zip(&other.components).map(|(a, b)| (a - b).squared()).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn construction_canonicalizes() {
        assert_eq!(r(2, 4), r(1, 2));
        assert_eq!(r(-2, -4), r(1, 2));
        assert_eq!(r(2, -4), r(-1, 2));
        assert_eq!(r(0, -7), Rational::zero());
        assert_eq!(r(0, 5).to_string(), "0");
    }

    #[test]
    fn zero_denominator_is_rejected() {
        assert_eq!(
            Rational::from_bigints(BigInt::from(1), BigInt::from(0)),
            Err(NumericError::ZeroDenominator)
        );
        assert_eq!("3/0".parse::<Rational>(), Err(NumericError::ZeroDenominator));
    }

    #[test]
    fn display_uses_integer_shorthand() {
        assert_eq!(r(6, 3).to_string(), "2");
        assert_eq!(r(-6, 4).to_string(), "-3/2");
        assert_eq!(r(3, 50).to_string(), "3/50");
    }

    #[test]
    fn parse_accepts_both_forms_and_rejects_garbage() {
        assert_eq!("7".parse::<Rational>().unwrap(), r(7, 1));
        assert_eq!("-3/9".parse::<Rational>().unwrap(), r(-1, 3));
        assert_eq!("4/-6".parse::<Rational>().unwrap(), r(-2, 3));
        for bad in ["", "1/", "/2", "1/2/3", "+1", "1.5", " 1", "a/2", "-"] {
            assert!(bad.parse::<Rational>().is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn ordering_is_by_value() {
        assert!(r(1, 3) < r(1, 2));
        assert!(r(-1, 2) < r(-1, 3));
        assert!(r(7, 500) < r(19, 100));
        assert_eq!(r(2, 4).cmp(&r(1, 2)), Ordering::Equal);
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(&r(1, 2) + &r(1, 3), r(5, 6));
        assert_eq!(&r(1, 2) - &r(1, 3), r(1, 6));
        assert_eq!(&r(2, 3) * &r(9, 4), r(3, 2));
        assert_eq!(&r(1, 2) / &r(1, 4), r(2, 1));
        assert_eq!(r(1, 2).checked_div(&Rational::zero()), None);
        assert_eq!(r(-3, 4).abs(), r(3, 4));
        assert_eq!(r(-3, 4).squared(), r(9, 16));
    }

    #[test]
    fn vector_operations_check_dimension() {
        let u = RationalVector::from_pairs(&[(1, 2), (0, 1), (0, 1)]);
        let v = RationalVector::from_pairs(&[(3, 5), (3, 50), (1, 50)]);
        assert_eq!(u.l2_dist_sq(&v).unwrap(), r(7, 500));
        assert_eq!(v.l2_norm_sq(), r(91, 250));

        let w = RationalVector::from_pairs(&[(1, 1)]);
        assert_eq!(u.inner_prod(&w), Err(NumericError::DimensionMismatch { left: 3, right: 1 }));
        assert_eq!(RationalVector::new(vec![]), Err(NumericError::EmptyVector));
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-1000i64..1000, 1i64..60).prop_map(|(n, d)| Rational::new(n, d))
    }

    fn arb_vector(dim: usize) -> impl Strategy<Value = RationalVector> {
        proptest::collection::vec(arb_rational(), dim)
            .prop_map(|cs| RationalVector::new(cs).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn display_parse_round_trip(q in arb_rational()) {
            let back: Rational = q.to_string().parse().unwrap();
            prop_assert_eq!(back, q);
        }

        #[test]
        fn cauchy_schwarz_in_squared_form(u in arb_vector(4), v in arb_vector(4)) {
            let ip = u.inner_prod(&v).unwrap();
            prop_assert!(ip.squared() <= &u.l2_norm_sq() * &v.l2_norm_sq());
        }

        #[test]
        fn inner_product_is_bilinear(u in arb_vector(3), v in arb_vector(3), w in arb_vector(3)) {
            let uw = RationalVector::new(
                u.components().iter().zip(w.components()).map(|(a, b)| a + b).collect()
            ).unwrap();
            let lhs = uw.inner_prod(&v).unwrap();
            let rhs = &u.inner_prod(&v).unwrap() + &w.inner_prod(&v).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn squared_distance_is_symmetric_and_definite(u in arb_vector(3), v in arb_vector(3)) {
            let d = u.l2_dist_sq(&v).unwrap();
            prop_assert_eq!(d.clone(), v.l2_dist_sq(&u).unwrap());
            prop_assert!(d.is_nonneg());
            prop_assert_eq!(d.is_zero(), u == v);
        }

        #[test]
        fn add_mul_are_exact(a in arb_rational(), b in arb_rational(), c in arb_rational()) {
            // Distributivity as a smoke test that canonicalization never
            // loses precision.
            let lhs = &a * &(&b + &c);
            let rhs = &(&a * &b) + &(&a * &c);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
