//! Valuations and residue-field arithmetic over Q_p.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational numbers, always kept in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;

/// Parses an integer or a fraction such as `-1/4`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let err = || Error::Parse(format!("not an exact rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(
            BigInt::from_str(s).map_err(|_| err())?,
        )),
    }
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// A p-adic valuation extended by `Infinite` for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl Add<i64> for Valuation {
    type Output = Valuation;
    fn add(self, rhs: i64) -> Valuation {
        match self {
            Valuation::Finite(v) => Valuation::Finite(v + rhs),
            Valuation::Infinite => Valuation::Infinite,
        }
    }
}

impl Add for Valuation {
    type Output = Valuation;
    fn add(self, rhs: Valuation) -> Valuation {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl PartialEq<i64> for Valuation {
    fn eq(&self, other: &i64) -> bool {
        *self == Valuation::Finite(*other)
    }
}

impl PartialOrd<i64> for Valuation {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.cmp(&Valuation::Finite(*other)))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("∞"),
        }
    }
}

/// A rational prime.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prime {
    p: BigInt,
    small: Option<u64>,
}

impl Prime {
    /// Checks primality (deterministic below 2^64, Miller-Rabin with fixed bases above).
    pub fn new(p: impl Into<BigInt>) -> Result<Prime> {
        let p: BigInt = p.into();
        if !is_prime(&p) {
            return Err(Error::NotPrime(p.to_string()));
        }
        let small = p.to_u64();
        Ok(Prime { p, small })
    }

    pub fn two() -> Prime {
        Prime {
            p: BigInt::from(2),
            small: Some(2),
        }
    }

    pub fn value(&self) -> &BigInt {
        &self.p
    }

    pub fn as_u64(&self) -> Option<u64> {
        self.small
    }

    pub fn is_two(&self) -> bool {
        self.small == Some(2)
    }

    pub fn pow(&self, k: u32) -> BigInt {
        num_traits::pow(self.p.clone(), k as usize)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

impl FromStr for Prime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Prime> {
        let p = BigInt::from_str(s.trim())
            .map_err(|_| Error::Parse(format!("not an integer: {s:?}")))?;
        Prime::new(p)
    }
}

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn is_prime(n: &BigInt) -> bool {
    if n < &BigInt::from(2) {
        return false;
    }
    if let Some(m) = n.to_u64() {
        return is_prime_u64(m);
    }
    for &b in &MR_BASES {
        if (n % b).is_zero() {
            return false;
        }
    }
    let one = BigInt::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    'outer: for &b in &MR_BASES {
        let mut x = BigInt::from(b).modpow(&d, n);
        if x == one || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == nm1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &b in &MR_BASES {
        if n == b {
            return true;
        }
        if n % b == 0 {
            return false;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        r
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'outer: for &b in &MR_BASES {
        let mut x = powmod(b, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// v_p of a nonzero integer.
pub(crate) fn val_int(n: &BigInt, p: &Prime) -> u32 {
    debug_assert!(!n.is_zero());
    if p.is_two() {
        return n.trailing_zeros().unwrap_or(0) as u32;
    }
    if let (Some(mut m), Some(q)) = (n.to_i128(), p.as_u64()) {
        let q = q as i128;
        let mut v = 0;
        while m % q == 0 {
            m /= q;
            v += 1;
        }
        return v;
    }
    let mut m = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = m.div_rem(p.value());
        if !r.is_zero() {
            return v;
        }
        m = q;
        v += 1;
    }
}

/// v_p of an integer, `Infinite` for zero.
pub fn valuation_int(n: &BigInt, p: &Prime) -> Valuation {
    if n.is_zero() {
        Valuation::Infinite
    } else {
        Valuation::Finite(val_int(n, p) as i64)
    }
}

pub fn valuation(x: &Rational, p: &Prime) -> Valuation {
    if x.is_zero() {
        return Valuation::Infinite;
    }
    Valuation::Finite(val_int(x.numer(), p) as i64 - val_int(x.denom(), p) as i64)
}

/// Inverse of `a` modulo `m`, if it exists.
pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// Residue of a p-integral rational modulo p^k, in `[0, p^k)`.
pub fn residue_mod(x: &Rational, p: &Prime, k: u32) -> Result<BigInt> {
    if valuation(x, p) < 0 {
        return Err(Error::NotIntegral);
    }
    let m = p.pow(k);
    if x.denom().is_one() {
        return Ok(x.numer().mod_floor(&m));
    }
    let inv = mod_inverse(x.denom(), &m).ok_or(Error::NotIntegral)?;
    Ok((x.numer() * inv).mod_floor(&m))
}

/// Residue of a p-adic unit modulo p^k.
pub fn unit_part_mod(x: &Rational, p: &Prime, k: u32) -> Result<BigInt> {
    if valuation(x, p) != 0 {
        return Err(Error::NotAUnit);
    }
    residue_mod(x, p, k)
}

/// Legendre symbol of a unit, as +1 or -1.
pub fn legendre(u: &Rational, p: &Prime) -> Result<i32> {
    if p.is_two() {
        return Err(Error::OddPrimeRequired);
    }
    let r = unit_part_mod(u, p, 1)?;
    Ok(if is_square_residue(&r, p.value()) {
        1
    } else {
        -1
    })
}

fn is_square_residue(r: &BigInt, p: &BigInt) -> bool {
    // Euler's criterion, in machine words when p fits in 32 bits.
    if let (Some(r), Some(q)) = (r.to_u64(), p.to_u32()) {
        let q = q as u64;
        let (mut base, mut e, mut acc) = (r % q, (q - 1) / 2, 1u64);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        return acc == 1;
    }
    let e: BigInt = (p - 1u32) >> 1u32;
    r.modpow(&e, p).is_one()
}

/// Whether the residue of `a` in F_2 lies in the image of α ↦ α² + α, which is {0}.
pub fn artin_schreier_in_image(a: &Rational, p: &Prime) -> Result<bool> {
    if !p.is_two() {
        return Err(Error::Char2Required);
    }
    match valuation(a, p) {
        v if v < 0 => Err(Error::NotIntegral),
        v => Ok(v >= 1),
    }
}

/// Whether a·X² + b·X + c has a root in F_p (inputs are residues or integers).
pub(crate) fn quadratic_has_root(a: &BigInt, b: &BigInt, c: &BigInt, p: &Prime) -> bool {
    let q = p.value();
    let (a, b, c) = (a.mod_floor(q), b.mod_floor(q), c.mod_floor(q));
    if a.is_zero() {
        return !b.is_zero() || c.is_zero();
    }
    if p.is_two() {
        // X = 0 or X = 1
        return c.is_zero() || ((&a + &b + &c) % 2u32).is_zero();
    }
    let disc = (&b * &b - BigInt::from(4) * &a * &c).mod_floor(q);
    disc.is_zero() || is_square_residue(&disc, q)
}

/// Number of distinct roots in F_p of X³ + c2·X² + c1·X + c0.
pub fn count_cubic_roots_mod_p(
    c2: &Rational,
    c1: &Rational,
    c0: &Rational,
    p: &Prime,
) -> Result<u32> {
    let f = [
        residue_mod(c0, p, 1)?,
        residue_mod(c1, p, 1)?,
        residue_mod(c2, p, 1)?,
    ];
    Ok(cubic_root_count(&f, p.value()))
}

/// deg gcd(f, X^p - X) for monic cubic f = X³ + f[2]X² + f[1]X + f[0] over F_p.
fn cubic_root_count(f: &[BigInt; 3], p: &BigInt) -> u32 {
    // Arithmetic in F_p[X]/(f), elements as [c0, c1, c2].
    let mulmod = |a: &[BigInt; 3], b: &[BigInt; 3]| -> [BigInt; 3] {
        let mut prod = vec![BigInt::zero(); 5];
        for i in 0..3 {
            for j in 0..3 {
                prod[i + j] += &a[i] * &b[j];
            }
        }
        // X³ = -(f2 X² + f1 X + f0)
        for k in (3..5).rev() {
            let top = std::mem::take(&mut prod[k]);
            for (i, fi) in f.iter().enumerate() {
                prod[k - 3 + i] -= &top * fi;
            }
        }
        [
            prod[0].mod_floor(p),
            prod[1].mod_floor(p),
            prod[2].mod_floor(p),
        ]
    };
    let x = [BigInt::zero(), BigInt::one(), BigInt::zero()];
    let mut acc = [BigInt::one(), BigInt::zero(), BigInt::zero()];
    let mut base = x;
    let mut e = p.clone();
    while !e.is_zero() {
        if e.is_odd() {
            acc = mulmod(&acc, &base);
        }
        base = mulmod(&base, &base);
        e >>= 1u32;
    }
    // g = X^p - X mod f
    let mut g: Vec<BigInt> = acc.to_vec();
    g[1] = (&g[1] - 1u32).mod_floor(p);
    let mut a: Vec<BigInt> = vec![f[0].clone(), f[1].clone(), f[2].clone(), BigInt::one()];
    trim(&mut g);
    while !g.is_empty() {
        let r = poly_rem(&a, &g, p);
        a = g;
        g = r;
    }
    (a.len() - 1) as u32
}

fn trim(v: &mut Vec<BigInt>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

fn poly_rem(a: &[BigInt], b: &[BigInt], p: &BigInt) -> Vec<BigInt> {
    let mut r = a.to_vec();
    let lead_inv = mod_inverse(b.last().expect("nonzero divisor"), p).expect("field");
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let coef = (r.last().unwrap() * &lead_inv).mod_floor(p);
        for (i, bi) in b.iter().enumerate() {
            r[shift + i] = (&r[shift + i] - &coef * bi).mod_floor(p);
        }
        trim(&mut r);
    }
    r
}

/// Ceiling of a rational.
pub(crate) fn ceil(x: &Rational) -> BigInt {
    -(-x.numer()).div_floor(x.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn valuations() {
        assert_eq!(valuation(&q("12"), &p(2)), Valuation::Finite(2));
        assert_eq!(valuation(&q("0"), &p(5)), Valuation::Infinite);
        assert_eq!(valuation(&q("5/9"), &p(3)), Valuation::Finite(-2));
        assert!(Valuation::Infinite > Valuation::Finite(i64::MAX));
        assert_eq!(Valuation::Infinite + 3, Valuation::Infinite);
    }

    #[test]
    fn unit_parts() {
        assert_eq!(unit_part_mod(&q("7/3"), &p(2), 2).unwrap(), BigInt::from(1));
        assert_eq!(unit_part_mod(&q("1"), &p(2), 3).unwrap(), BigInt::from(1));
        assert_eq!(unit_part_mod(&q("5"), &p(2), 2).unwrap(), BigInt::from(1));
        assert_eq!(unit_part_mod(&q("6"), &p(2), 2), Err(Error::NotAUnit));
    }

    #[test]
    fn legendre_symbols() {
        assert_eq!(legendre(&q("1"), &p(7)).unwrap(), 1);
        assert_eq!(legendre(&q("2"), &p(7)).unwrap(), 1);
        assert_eq!(legendre(&q("2"), &p(5)).unwrap(), -1);
        assert_eq!(legendre(&q("5"), &p(5)), Err(Error::NotAUnit));
        assert_eq!(legendre(&q("3"), &p(2)), Err(Error::OddPrimeRequired));
    }

    #[test]
    fn artin_schreier() {
        assert!(artin_schreier_in_image(&q("0"), &p(2)).unwrap());
        assert!(artin_schreier_in_image(&q("6"), &p(2)).unwrap());
        assert!(!artin_schreier_in_image(&q("3"), &p(2)).unwrap());
        assert_eq!(
            artin_schreier_in_image(&q("3"), &p(3)),
            Err(Error::Char2Required)
        );
    }

    #[test]
    fn cubic_roots() {
        let c = |a: &str, b: &str, c: &str, n| {
            count_cubic_roots_mod_p(&q(a), &q(b), &q(c), &p(n)).unwrap()
        };
        assert_eq!(c("0", "0", "0", 5), 1);
        assert_eq!(c("0", "-1", "0", 5), 3);
        // X³ + X² + 1 has no root in F_2, so the I0* Tamagawa number is 1 + 0
        assert_eq!(c("1", "0", "1", 2), 0);
    }

    #[test]
    fn primes() {
        assert!(Prime::new(4).is_err());
        assert!(Prime::new(1).is_err());
        assert!(Prime::new(BigInt::from(2u64).pow(89) - 1).is_ok());
        assert!(Prime::new(BigInt::from(2u64).pow(67) - 1).is_err());
    }
}
