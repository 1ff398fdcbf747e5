//! Weierstrass models, admissible changes of variables and twist models.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::padic::{legendre, parse_rational, val_int, valuation, Prime, Rational, Valuation};

/// y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeierstrassModel {
    pub a1: Rational,
    pub a2: Rational,
    pub a3: Rational,
    pub a4: Rational,
    pub a6: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invariants {
    pub b2: Rational,
    pub b4: Rational,
    pub b6: Rational,
    pub b8: Rational,
    pub delta: Rational,
}

impl WeierstrassModel {
    pub fn new(a: [Rational; 5]) -> Self {
        let [a1, a2, a3, a4, a6] = a;
        WeierstrassModel { a1, a2, a3, a4, a6 }
    }

    pub fn from_ints(a: [i64; 5]) -> Self {
        Self::new(a.map(|x| Rational::from_integer(x.into())))
    }

    pub fn from_bigints(a: [BigInt; 5]) -> Self {
        Self::new(a.map(Rational::from_integer))
    }

    /// Parses `[a1,a2,a3,a4,a6]` with integer or `"n/d"` string entries.
    pub fn parse(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let arr = v
            .as_array()
            .filter(|a| a.len() == 5)
            .ok_or_else(|| Error::Parse("ainvs must be an array of five entries".into()))?;
        let mut out = Vec::with_capacity(5);
        for x in arr {
            let q = match x {
                serde_json::Value::Number(n) => parse_rational(&n.to_string())?,
                serde_json::Value::String(s) => parse_rational(s)?,
                _ => return Err(Error::Parse(format!("bad coefficient {x}"))),
            };
            out.push(q);
        }
        Ok(Self::new(out.try_into().expect("five entries")))
    }

    pub fn coeffs(&self) -> [&Rational; 5] {
        [&self.a1, &self.a2, &self.a3, &self.a4, &self.a6]
    }

    /// b2, b4, b6, b8 and the discriminant, computed over Z after clearing denominators.
    pub fn invariants(&self) -> Invariants {
        // [1/L, 0, 0, 0] makes the model integral and scales an invariant of weight k by L^k.
        let l = self
            .coeffs()
            .iter()
            .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
        let powers: Vec<BigInt> = if l.is_one() {
            Vec::new()
        } else {
            (0..=12).map(|k| num_traits::pow(l.clone(), k)).collect()
        };
        let scaled = |a: &Rational, w: usize| {
            if l.is_one() {
                a.numer().clone()
            } else {
                a.numer() * (&powers[w] / a.denom())
            }
        };
        let a = [
            scaled(&self.a1, 1),
            scaled(&self.a2, 2),
            scaled(&self.a3, 3),
            scaled(&self.a4, 4),
            scaled(&self.a6, 6),
        ];
        let [b2, b4, b6, b8, delta] = small_invariants(&a).unwrap_or_else(|| big_invariants(&a));
        let back = |x: BigInt, w: usize| {
            if l.is_one() {
                Rational::from_integer(x)
            } else {
                Rational::new(x, powers[w].clone())
            }
        };
        Invariants {
            b2: back(b2, 2),
            b4: back(b4, 4),
            b6: back(b6, 6),
            b8: back(b8, 8),
            delta: back(delta, 12),
        }
    }

    pub fn discriminant(&self) -> Rational {
        self.invariants().delta
    }

    pub fn is_integral_at(&self, p: &Prime) -> bool {
        self.coeffs().iter().all(|a| valuation(a, p) >= 0)
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs().iter().all(|a| a.is_integer())
    }

    /// Coefficients as a JSON array: integers where possible, `"n/d"` strings otherwise.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.coeffs().iter().map(|a| rational_json(a)).collect())
    }
}

pub(crate) fn rational_json(a: &Rational) -> serde_json::Value {
    if a.is_integer() {
        if let Ok(n) = a.numer().to_string().parse::<i64>() {
            return serde_json::Value::from(n);
        }
    }
    serde_json::Value::String(a.to_string())
}

impl fmt::Display for WeierstrassModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{},{},{},{}]",
            self.a1, self.a2, self.a3, self.a4, self.a6
        )
    }
}

fn big_invariants([a1, a2, a3, a4, a6]: &[BigInt; 5]) -> [BigInt; 5] {
    let b2 = a1 * a1 + a2 * 4;
    let b4 = a4 * 2 + a1 * a3;
    let b6 = a3 * a3 + a6 * 4;
    let b8 = a1 * a1 * a6 + a2 * a6 * 4 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
    let delta = &b2 * &b4 * &b6 * 9 - &b2 * &b2 * &b8 - &b4 * &b4 * &b4 * 8 - &b6 * &b6 * 27;
    [b2, b4, b6, b8, delta]
}

/// The same formulas in checked i128 arithmetic; None on overflow.
fn small_invariants(a: &[BigInt; 5]) -> Option<[BigInt; 5]> {
    let [a1, a2, a3, a4, a6] = [&a[0], &a[1], &a[2], &a[3], &a[4]].map(|x| x.to_i128());
    let (a1, a2, a3, a4, a6) = (a1?, a2?, a3?, a4?, a6?);
    let m = |x: i128, y: i128| x.checked_mul(y);
    let b2 = m(a1, a1)?.checked_add(m(a2, 4)?)?;
    let b4 = m(a4, 2)?.checked_add(m(a1, a3)?)?;
    let b6 = m(a3, a3)?.checked_add(m(a6, 4)?)?;
    let b8 = m(m(a1, a1)?, a6)?
        .checked_add(m(m(a2, a6)?, 4)?)?
        .checked_sub(m(m(a1, a3)?, a4)?)?
        .checked_add(m(m(a2, a3)?, a3)?)?
        .checked_sub(m(a4, a4)?)?;
    let delta = m(m(m(b2, b4)?, b6)?, 9)?
        .checked_sub(m(m(b2, b2)?, b8)?)?
        .checked_sub(m(m(m(b4, b4)?, b4)?, 8)?)?
        .checked_sub(m(m(b6, b6)?, 27)?)?;
    Some([b2, b4, b6, b8, delta].map(BigInt::from))
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// The change of variables x = u²x' + r, y = u³y' + u²s·x' + w.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Isomorphism {
    pub u: Rational,
    pub r: Rational,
    pub s: Rational,
    pub w: Rational,
}

impl Isomorphism {
    pub fn new(u: Rational, r: Rational, s: Rational, w: Rational) -> Result<Self> {
        if u.is_zero() {
            return Err(Error::DegenerateIsomorphism);
        }
        Ok(Isomorphism { u, r, s, w })
    }

    pub fn identity() -> Self {
        Isomorphism {
            u: Rational::one(),
            r: Rational::zero(),
            s: Rational::zero(),
            w: Rational::zero(),
        }
    }

    pub fn from_ints(u: i64, r: i64, s: i64, w: i64) -> Self {
        Self::new(rat(u), rat(r), rat(s), rat(w)).expect("u != 0")
    }

    pub fn translation(r: Rational, s: Rational, w: Rational) -> Self {
        Isomorphism {
            u: Rational::one(),
            r,
            s,
            w,
        }
    }

    pub fn scaling(u: Rational) -> Self {
        Isomorphism {
            u,
            r: Rational::zero(),
            s: Rational::zero(),
            w: Rational::zero(),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Apply `self`, then `next`.
    pub fn then(&self, next: &Isomorphism) -> Isomorphism {
        compose(self, next)
    }

    pub fn inverse(&self) -> Isomorphism {
        let u2 = &self.u * &self.u;
        Isomorphism {
            u: self.u.recip(),
            r: -&self.r / &u2,
            s: -&self.s / &self.u,
            w: (&self.r * &self.s - &self.w) / (&u2 * &self.u),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "u": rational_json(&self.u),
            "r": rational_json(&self.r),
            "s": rational_json(&self.s),
            "w": rational_json(&self.w),
        })
    }
}

impl fmt::Display for Isomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{},{}]", self.u, self.r, self.s, self.w)
    }
}

pub fn apply_isomorphism(e: &WeierstrassModel, phi: &Isomorphism) -> WeierstrassModel {
    // The formulas are weighted-homogeneous (a_i of weight i; s, r, w of weights 1, 2, 3),
    // so they are evaluated over Z after scaling by a common denominator L.
    let weighted = [
        (&e.a1, 1),
        (&e.a2, 2),
        (&e.a3, 3),
        (&e.a4, 4),
        (&e.a6, 6),
        (&phi.s, 1),
        (&phi.r, 2),
        (&phi.w, 3),
    ];
    let l = weighted
        .iter()
        .fold(BigInt::one(), |acc, (x, _)| acc.lcm(x.denom()));
    let pw = |k: usize| num_traits::pow(l.clone(), k);
    let int = |x: &Rational, k: usize| x.numer() * (pw(k) / x.denom());
    let [a1, a2, a3, a4, a6, s, r, w] = weighted.map(|(x, k)| int(x, k));
    let n1 = &a1 + &s * 2;
    let n2 = &a2 - &s * &a1 + &r * 3 - &s * &s;
    let n3 = &a3 + &r * &a1 + &w * 2;
    let n4 = &a4 - &s * &a3 + &r * &a2 * 2 - (&w + &r * &s) * &a1 + &r * &r * 3 - &s * &w * 2;
    let n6 = &a6 + &r * &a4 + &r * &r * &a2 + &r * &r * &r - &w * &a3 - &w * &w - &r * &w * &a1;
    // a_i' = n_i / (L u)^i
    let (un, ud) = (phi.u.numer(), phi.u.denom());
    let out = |n: BigInt, k: usize| {
        Rational::new(
            n * num_traits::pow(ud.clone(), k),
            num_traits::pow(&l * un, k),
        )
    };
    WeierstrassModel {
        a1: out(n1, 1),
        a2: out(n2, 2),
        a3: out(n3, 3),
        a4: out(n4, 4),
        a6: out(n6, 6),
    }
}

/// The isomorphism equal to applying `first` and then `second`.
pub fn compose(first: &Isomorphism, second: &Isomorphism) -> Isomorphism {
    let (u1, r1, s1, w1) = (&first.u, &first.r, &first.s, &first.w);
    let (u2, r2, s2, w2) = (&second.u, &second.r, &second.s, &second.w);
    let u1sq = u1 * u1;
    Isomorphism {
        u: u1 * u2,
        r: r1 + &u1sq * r2,
        s: s1 + u1 * s2,
        w: w1 + &u1sq * s1 * r2 + &u1sq * u1 * w2,
    }
}

/// One slot of a valuation vector or pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    AtLeast(Valuation),
    Exact(i64),
}

impl Slot {
    /// Whether a concrete valuation satisfies this pattern slot.
    pub fn admits(self, v: Valuation) -> bool {
        match self {
            Slot::AtLeast(k) => v >= k,
            Slot::Exact(k) => v == Valuation::Finite(k),
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::AtLeast(v) => write!(f, "{v}"),
            Slot::Exact(k) => write!(f, "={k}"),
        }
    }
}

/// Valuations of (a1, a2, a3, a4, a6), each exact or a lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ValuationVector(pub [Slot; 5]);

impl ValuationVector {
    pub fn of(e: &WeierstrassModel, p: &Prime) -> Self {
        valuation_vector(e, p)
    }

    /// Whether this (concrete) vector satisfies `pattern`.
    pub fn matches(&self, pattern: &ValuationVector) -> bool {
        self.0
            .iter()
            .zip(pattern.0.iter())
            .all(|(v, pat)| match *v {
                Slot::Exact(k) => pat.admits(Valuation::Finite(k)),
                Slot::AtLeast(v) => match *pat {
                    Slot::Exact(_) => false,
                    Slot::AtLeast(k) => v >= k,
                },
            })
    }
}

impl fmt::Display for ValuationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn valuation_vector(e: &WeierstrassModel, p: &Prime) -> ValuationVector {
    ValuationVector(e.coeffs().map(|a| match valuation(a, p) {
        Valuation::Finite(k) => Slot::Exact(k),
        Valuation::Infinite => Slot::AtLeast(Valuation::Infinite),
    }))
}

/// `V` matches `pattern` and the side condition holds.
pub fn matches(
    v: &ValuationVector,
    pattern: &ValuationVector,
    extra: Option<&dyn Fn() -> bool>,
) -> bool {
    v.matches(pattern) && extra.map_or(true, |f| f())
}

/// A nonzero twist parameter, optionally reduced to a canonical square-class representative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TwistClass {
    pub d: BigInt,
    pub canonical: bool,
}

impl TwistClass {
    pub fn new(d: impl Into<BigInt>) -> Result<Self> {
        let d = d.into();
        if d.is_zero() {
            return Err(Error::ZeroTwist);
        }
        Ok(TwistClass {
            d,
            canonical: false,
        })
    }

    pub fn as_rational(&self) -> Rational {
        Rational::from_integer(self.d.clone())
    }

    /// v_p(d).
    pub fn valuation(&self, p: &Prime) -> u32 {
        val_int(&self.d, p)
    }
}

impl fmt::Display for TwistClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.d)
    }
}

/// Reduces `d` to v_p(d) ∈ {0,1} with unit part 1 or the least non-residue (odd p) or its class mod 8 (p = 2).
pub fn canonicalize_twist(d: &BigInt, p: &Prime) -> Result<TwistClass> {
    if d.is_zero() {
        return Err(Error::ZeroTwist);
    }
    let v = val_int(d, p);
    let mut unit = d.clone();
    for _ in 0..v {
        unit /= p.value();
    }
    let unit = if p.is_two() {
        unit.mod_floor(&BigInt::from(8))
    } else if legendre(&Rational::from_integer(unit), p).expect("unit") == 1 {
        BigInt::one()
    } else {
        least_non_residue(p)
    };
    let d = if v % 2 == 1 { unit * p.value() } else { unit };
    Ok(TwistClass { d, canonical: true })
}

pub(crate) fn least_non_residue(p: &Prime) -> BigInt {
    let mut k = BigInt::from(2);
    while legendre(&Rational::from_integer(k.clone()), p).expect("unit") == 1 {
        k += 1;
    }
    k
}

/// y² = x³ + d·b2·x² + d²(8a1a3 + 16a4)·x + d³(16a3² + 64a6).
pub fn twist_model(e: &WeierstrassModel, d: &TwistClass) -> WeierstrassModel {
    twist_model_by(e, &d.as_rational())
}

pub(crate) fn twist_model_by(e: &WeierstrassModel, d: &Rational) -> WeierstrassModel {
    let inv = e.invariants();
    let d2 = d * d;
    WeierstrassModel {
        a1: Rational::zero(),
        a2: d * &inv.b2,
        a3: Rational::zero(),
        a4: &d2 * &inv.b4 * rat(8),
        a6: &d2 * d * &inv.b6 * rat(16),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn invariants_examples() {
        let i = WeierstrassModel::from_ints([0, 0, 0, 0, 1]).invariants();
        assert_eq!(
            (i.b2, i.b4, i.b6, i.b8, i.delta),
            (rat(0), rat(0), rat(4), rat(0), rat(-432))
        );
        assert_eq!(
            WeierstrassModel::from_ints([1, 0, 0, 0, 0]).discriminant(),
            rat(0)
        );
        assert_eq!(
            WeierstrassModel::from_ints([0, 0, 0, -1, 0]).discriminant(),
            rat(64)
        );
    }

    #[test]
    fn isomorphism_examples() {
        let e = WeierstrassModel::from_ints([0, 0, 0, 0, 1]);
        assert_eq!(apply_isomorphism(&e, &Isomorphism::identity()), e);
        let e2 = apply_isomorphism(&e, &Isomorphism::from_ints(1, 0, 0, -1));
        assert_eq!(e2, WeierstrassModel::from_ints([0, 0, -2, 0, 0]));
        assert_eq!(e2.discriminant(), e.discriminant());
        let e3 = apply_isomorphism(&e, &Isomorphism::from_ints(2, 0, 0, 0));
        assert_eq!(e3.discriminant(), e.discriminant() / rat(4096));
        let c = compose(
            &Isomorphism::from_ints(1, 3, 0, 0),
            &Isomorphism::from_ints(1, 5, 0, 0),
        );
        assert_eq!(c, Isomorphism::from_ints(1, 8, 0, 0));
        let phi = Isomorphism::from_ints(3, 1, -2, 7);
        assert!(compose(&phi, &phi.inverse()).is_identity());
    }

    #[test]
    fn valuation_vectors() {
        let show = |a, n| valuation_vector(&WeierstrassModel::from_ints(a), &p(n)).to_string();
        assert_eq!(show([0, 0, 0, 0, 1], 2), "(∞,∞,∞,∞,=0)");
        assert_eq!(show([2, 4, 8, 16, 64], 2), "(=1,=2,=3,=4,=6)");
        assert_eq!(show([1, 2, 0, 12, 18], 3), "(=0,=0,∞,=1,=2)");
    }

    #[test]
    fn pattern_matching() {
        use Slot::*;
        let inf = AtLeast(Valuation::Infinite);
        let at = |k| AtLeast(Valuation::Finite(k));
        let v = ValuationVector([Exact(0), Exact(0), inf, Exact(3), Exact(5)]);
        assert!(!v.matches(&ValuationVector([Exact(0), at(0), at(2), at(1), Exact(0)])));
        let v = ValuationVector([inf, Exact(1), inf, Exact(1), Exact(1)]);
        assert!(v.matches(&ValuationVector([inf, at(1), inf, at(1), Exact(1)])));
        let v = ValuationVector([Exact(1), Exact(2), Exact(3), Exact(4), Exact(5)]);
        assert!(matches(
            &v,
            &ValuationVector([at(1), at(2), at(3), at(4), Exact(5)]),
            Some(&|| true)
        ));
        assert!(!matches(
            &v,
            &ValuationVector([at(1), at(2), at(3), at(4), Exact(5)]),
            Some(&|| false)
        ));
    }

    #[test]
    fn twist_models() {
        let one = TwistClass::new(1).unwrap();
        let e = WeierstrassModel::from_ints([0, 3, 0, 5, 7]);
        assert_eq!(
            twist_model(&e, &one),
            WeierstrassModel::from_ints([0, 12, 0, 80, 448])
        );
        let e = WeierstrassModel::from_ints([1, 0, 0, 0, 1]);
        assert_eq!(
            twist_model(&e, &TwistClass::new(-1).unwrap()),
            WeierstrassModel::from_ints([0, -1, 0, 0, -64])
        );
        let e = WeierstrassModel::from_ints([0, 0, 0, 1, 0]);
        assert_eq!(
            twist_model(&e, &TwistClass::new(2).unwrap()),
            WeierstrassModel::from_ints([0, 0, 0, 64, 0])
        );
    }

    #[test]
    fn canonical_twists() {
        let c = |d: i64, n| canonicalize_twist(&BigInt::from(d), &p(n)).unwrap().d;
        assert_eq!(c(9, 2), BigInt::from(1));
        // 12 = 2²·3 lies in the square class of 3
        assert_eq!(c(12, 2), BigInt::from(3));
        assert_eq!(c(24, 2), BigInt::from(6));
        assert_eq!(c(-1, 2), BigInt::from(7));
        assert_eq!(c(3, 5), BigInt::from(2));
        assert_eq!(c(-100, 5), BigInt::from(1));
        assert_eq!(c(-50, 5), BigInt::from(2));
        assert_eq!(c(15, 5), BigInt::from(10));
        assert_eq!(
            canonicalize_twist(&BigInt::from(0), &p(3)),
            Err(Error::ZeroTwist)
        );
    }
}
