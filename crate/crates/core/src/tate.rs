//! Tate's algorithm over Q_p: the reference implementation of local data.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::padic::{mod_inverse, quadratic_has_root, val_int, Prime, Rational};
use crate::weierstrass::{compose, Isomorphism, WeierstrassModel};

/// Kodaira symbol of the special fibre.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KodairaType {
    I(u32),
    II,
    III,
    IV,
    IStar(u32),
    IVStar,
    IIIStar,
    IIStar,
}

impl KodairaType {
    pub fn component_count(self) -> u32 {
        component_count(self)
    }

    pub fn is_additive(self) -> bool {
        !matches!(self, KodairaType::I(_))
    }
}

/// Number of irreducible components of the special fibre.
pub fn component_count(t: KodairaType) -> u32 {
    match t {
        KodairaType::I(n) => n.max(1),
        KodairaType::II => 1,
        KodairaType::III => 2,
        KodairaType::IV => 3,
        KodairaType::IStar(n) => n + 5,
        KodairaType::IVStar => 7,
        KodairaType::IIIStar => 8,
        KodairaType::IIStar => 9,
    }
}

impl fmt::Display for KodairaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KodairaType::I(n) => write!(f, "I{n}"),
            KodairaType::II => f.write_str("II"),
            KodairaType::III => f.write_str("III"),
            KodairaType::IV => f.write_str("IV"),
            KodairaType::IStar(n) => write!(f, "I{n}*"),
            KodairaType::IVStar => f.write_str("IV*"),
            KodairaType::IIIStar => f.write_str("III*"),
            KodairaType::IIStar => f.write_str("II*"),
        }
    }
}

impl FromStr for KodairaType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown Kodaira symbol {s:?}"));
        Ok(match s {
            "II" => KodairaType::II,
            "III" => KodairaType::III,
            "IV" => KodairaType::IV,
            "IV*" => KodairaType::IVStar,
            "III*" => KodairaType::IIIStar,
            "II*" => KodairaType::IIStar,
            _ => {
                let rest = s.strip_prefix('I').ok_or_else(bad)?;
                let (digits, star) = match rest.strip_suffix('*') {
                    Some(d) => (d, true),
                    None => (rest, false),
                };
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad());
                }
                let n: u32 = digits.parse().map_err(|_| bad())?;
                if star {
                    KodairaType::IStar(n)
                } else {
                    KodairaType::I(n)
                }
            }
        })
    }
}

impl Serialize for KodairaType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KodairaType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReductionKind {
    Good,
    SplitMultiplicative,
    NonsplitMultiplicative,
    Additive,
}

/// Local data of an elliptic curve at a prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalData {
    #[serde(rename = "type")]
    pub kodaira: KodairaType,
    pub delta: u32,
    pub f: u32,
    pub c: u32,
    pub m: u32,
    pub reduction: ReductionKind,
}

impl LocalData {
    /// Fills in m and f from the type and δ (Ogg's formula).
    pub fn from_parts(
        kodaira: KodairaType,
        delta: u32,
        c: u32,
        reduction: ReductionKind,
    ) -> LocalData {
        let m = component_count(kodaira);
        LocalData {
            kodaira,
            delta,
            f: delta + 1 - m,
            c,
            m,
            reduction,
        }
    }
}

impl fmt::Display for LocalData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} delta={} f={} c={}",
            self.kodaira, self.delta, self.f, self.c
        )
    }
}

/// Output of Tate's algorithm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TateOutput {
    pub local: LocalData,
    pub minimal_model: WeierstrassModel,
    pub phi: Isomorphism,
}

/// Runs Tate's algorithm, returning local data, a minimal model and the map onto it.
pub fn tate_local_data(e: &WeierstrassModel, p: &Prime) -> Result<TateOutput> {
    let mut run = Run::start(e, p, true)?;
    let local = run.execute()?;
    Ok(TateOutput {
        local,
        minimal_model: WeierstrassModel::from_bigints(run.a),
        phi: run.phi.expect("tracked"),
    })
}

/// Local data only; skips bookkeeping of the isomorphism.
pub fn local_data(e: &WeierstrassModel, p: &Prime) -> Result<LocalData> {
    Run::start(e, p, false)?.execute()
}

/// Split or nonsplit, for a model of type I_n with the node at the origin.
pub fn multiplicative_splitness(e: &WeierstrassModel, p: &Prime) -> Result<ReductionKind> {
    let r = |x: &Rational| crate::padic::residue_mod(x, p, 1);
    Ok(
        if quadratic_has_root(&BigInt::one(), &r(&e.a1)?, &-r(&e.a2)?, p) {
            ReductionKind::SplitMultiplicative
        } else {
            ReductionKind::NonsplitMultiplicative
        },
    )
}

const RESTART_CAP: u32 = 64;

struct Run<'a> {
    p: &'a Prime,
    pb: BigInt,
    a: [BigInt; 5],
    phi: Option<Isomorphism>,
}

struct Bs {
    b2: BigInt,
    b6: BigInt,
    b8: BigInt,
}

impl<'a> Run<'a> {
    fn start(e: &WeierstrassModel, p: &'a Prime, track: bool) -> Result<Self> {
        if e.discriminant().is_zero() {
            return Err(Error::SingularModel);
        }
        let l = e
            .coeffs()
            .iter()
            .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
        let mut a: [BigInt; 5] = Default::default();
        let weights = [1usize, 2, 3, 4, 6];
        for (i, c) in e.coeffs().iter().enumerate() {
            a[i] = c.numer() * num_traits::pow(l.clone(), weights[i]) / c.denom();
        }
        let phi = track.then(|| Isomorphism::scaling(Rational::new(BigInt::one(), l)));
        Ok(Run {
            p,
            pb: p.value().clone(),
            a,
            phi,
        })
    }

    fn v(&self, x: &BigInt) -> u32 {
        if x.is_zero() {
            u32::MAX
        } else {
            val_int(x, self.p)
        }
    }

    fn divides(&self, x: &BigInt) -> bool {
        (x % &self.pb).is_zero()
    }

    fn red(&self, x: &BigInt) -> BigInt {
        x.mod_floor(&self.pb)
    }

    fn inv(&self, x: &BigInt) -> BigInt {
        mod_inverse(x, &self.pb).expect("unit mod p")
    }

    fn is_p(&self, q: u64) -> bool {
        self.p.as_u64() == Some(q)
    }

    fn roots(&self, a: &BigInt, b: &BigInt, c: &BigInt) -> bool {
        quadratic_has_root(a, b, c, self.p)
    }

    fn bs(&self) -> Bs {
        let [a1, a2, a3, a4, a6] = &self.a;
        Bs {
            b2: a1 * a1 + 4 * a2,
            b6: a3 * a3 + 4 * a6,
            b8: a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4,
        }
    }

    fn disc(&self) -> BigInt {
        let [a1, a2, a3, a4, a6] = &self.a;
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        9 * &b2 * &b4 * &b6 - &b2 * &b2 * &b8 - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6
    }

    fn c4c6(&self) -> (BigInt, BigInt) {
        let [a1, a2, a3, a4, a6] = &self.a;
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let c4 = &b2 * &b2 - 24 * &b4;
        let c6: BigInt = 36 * &b2 * &b4 - &b2 * &b2 * &b2 - 216 * &b6;
        (c4, c6)
    }

    /// x = x' + r, y = y' + s·x' + t.
    fn rst(&mut self, r: BigInt, s: BigInt, t: BigInt) {
        if r.is_zero() && s.is_zero() && t.is_zero() {
            return;
        }
        let [a1, a2, a3, a4, a6] = &self.a;
        let n1 = a1 + 2 * &s;
        let n2 = a2 - &s * a1 + 3 * &r - &s * &s;
        let n3 = a3 + &r * a1 + 2 * &t;
        let n4 = a4 - &s * a3 + 2 * &r * a2 - (&t + &r * &s) * a1 + 3 * &r * &r - 2 * &s * &t;
        let n6 = a6 + &r * a4 + &r * &r * a2 + &r * &r * &r - &t * a3 - &t * &t - &r * &t * a1;
        self.a = [n1, n2, n3, n4, n6];
        if let Some(phi) = &mut self.phi {
            let step = Isomorphism::translation(r.into(), s.into(), t.into());
            *phi = compose(phi, &step);
        }
    }

    fn rescale(&mut self) {
        let weights = [1usize, 2, 3, 4, 6];
        for (i, w) in weights.iter().enumerate() {
            let q = num_traits::pow(self.pb.clone(), *w);
            debug_assert!((&self.a[i] % &q).is_zero());
            self.a[i] = &self.a[i] / q;
        }
        if let Some(phi) = &mut self.phi {
            *phi = compose(
                phi,
                &Isomorphism::scaling(Rational::from_integer(self.pb.clone())),
            );
        }
    }

    fn done(kodaira: KodairaType, vd: u32, f: u32, c: u32, reduction: ReductionKind) -> LocalData {
        let m = component_count(kodaira);
        debug_assert_eq!(f + m, vd + 1);
        LocalData {
            kodaira,
            delta: vd,
            f,
            c,
            m,
            reduction,
        }
    }

    fn execute(&mut self) -> Result<LocalData> {
        for _ in 0..RESTART_CAP {
            if let Some(ld) = self.pass()? {
                return Ok(ld);
            }
            self.rescale();
        }
        Err(Error::InternalLoopBound {
            context: "Tate restart",
            cap: RESTART_CAP,
        })
    }

    /// One pass of the algorithm; `None` means the model was not minimal.
    fn pass(&mut self) -> Result<Option<LocalData>> {
        use KodairaType::*;
        use ReductionKind::*;
        let p = self.pb.clone();
        let delta = self.disc();
        let vd = self.v(&delta);
        if vd == 0 {
            return Ok(Some(Self::done(I(0), 0, 0, 1, Good)));
        }

        // Move the singular point of the reduction to (0, 0).
        let (r, t) = {
            let [a1, a2, a3, a4, a6] = &self.a;
            let bs = self.bs();
            if self.is_p(2) {
                if self.divides(&bs.b2) {
                    let r = self.red(a4);
                    let t = self.red(&(&r * (1 + a2 + a4) + a6));
                    (r, t)
                } else {
                    let r = self.red(a3);
                    let t = self.red(&(&r + a4));
                    (r, t)
                }
            } else if self.is_p(3) {
                let b4 = 2 * a4 + a1 * a3;
                let r = if self.divides(&bs.b2) {
                    self.red(&-&bs.b6)
                } else {
                    let prod: BigInt = &bs.b2 * &b4;
                    self.red(&-prod)
                };
                let t = self.red(&(a1 * &r + a3));
                (r, t)
            } else {
                let (c4, c6) = self.c4c6();
                let r = if self.divides(&c4) {
                    self.red(&(-&bs.b2 * self.inv(&BigInt::from(12))))
                } else {
                    self.red(&(-(&c6 + &bs.b2 * &c4) * self.inv(&(12 * &c4))))
                };
                let t = self.red(&(-(a1 * &r + a3) * self.inv(&BigInt::from(2))));
                (r, t)
            }
        };
        self.rst(r, BigInt::zero(), t);
        let bs = self.bs();
        debug_assert!(self.a[2..].iter().all(|x| self.divides(x)));

        if !self.divides(&bs.b2) {
            let split = self.roots(&BigInt::one(), &self.a[0], &-&self.a[1]);
            let (c, kind) = if split {
                (vd, SplitMultiplicative)
            } else {
                (2 - vd % 2, NonsplitMultiplicative)
            };
            return Ok(Some(Self::done(I(vd), vd, 1, c, kind)));
        }
        if self.v(&self.a[4]) < 2 {
            return Ok(Some(Self::done(II, vd, vd, 1, Additive)));
        }
        if self.v(&bs.b8) < 3 {
            return Ok(Some(Self::done(III, vd, vd - 1, 2, Additive)));
        }
        if self.v(&bs.b6) < 3 {
            let a3t = &self.a[2] / &p;
            let a6t = &self.a[4] / (&p * &p);
            let c = if self.roots(&BigInt::one(), &a3t, &-a6t) {
                3
            } else {
                1
            };
            return Ok(Some(Self::done(IV, vd, vd - 2, c, Additive)));
        }

        // Arrange p | a1, a2; p² | a3, a4; p³ | a6.
        let (s, t) = {
            let [a1, a2, a3, _, a6] = &self.a;
            let p2 = &p * &p;
            if self.is_p(2) {
                (self.red(a2), &p * self.red(&(a6 / &p2)))
            } else if self.is_p(3) {
                (self.red(a1), &p * self.red(&(a3 / &p)))
            } else {
                let half = self.inv(&BigInt::from(2));
                (
                    self.red(&(-a1 * &half)),
                    &p * self.red(&(-(a3 / &p) * &half)),
                )
            }
        };
        self.rst(BigInt::zero(), s, t);
        debug_assert!(self.v(&self.a[0]) >= 1 && self.v(&self.a[1]) >= 1);
        debug_assert!(
            self.v(&self.a[2]) >= 2 && self.v(&self.a[3]) >= 2 && self.v(&self.a[4]) >= 3
        );

        let p2 = &p * &p;
        let p3 = &p2 * &p;
        let (b, c, d) = (&self.a[1] / &p, &self.a[3] / &p2, &self.a[4] / &p3);
        let w = 27 * &d * &d - &b * &b * &c * &c + 4 * &b * &b * &b * &d - 18 * &b * &c * &d
            + 4 * &c * &c * &c;
        let x = 3 * &c - &b * &b;
        let sw = if !self.divides(&w) {
            1
        } else if !self.divides(&x) {
            2
        } else {
            3
        };

        if sw == 1 {
            let f = [self.red(&d), self.red(&c), self.red(&b)];
            let roots = crate::padic::count_cubic_roots_mod_p(
                &Rational::from_integer(f[2].clone()),
                &Rational::from_integer(f[1].clone()),
                &Rational::from_integer(f[0].clone()),
                self.p,
            )?;
            return Ok(Some(Self::done(IStar(0), vd, vd - 4, 1 + roots, Additive)));
        }

        if sw == 2 {
            // Move the double root of the cubic to 0.
            let alpha = if self.is_p(2) {
                self.red(&c)
            } else if self.is_p(3) {
                self.red(&(&c * self.inv(&b)))
            } else {
                self.red(&((&b * &c - 9 * &d) * self.inv(&(2 * &x))))
            };
            self.rst(&p * alpha, BigInt::zero(), BigInt::zero());
            let (mut ix, mut iy) = (3u32, 3u32);
            let (mut mx, mut my) = (p2.clone(), p2.clone());
            let cap = vd + 4;
            let c = loop {
                if ix + iy > cap + 6 {
                    return Err(Error::InternalLoopBound {
                        context: "Tate I*_n subprocedure",
                        cap,
                    });
                }
                let a2t = &self.a[1] / &p;
                let a3t = &self.a[2] / &my;
                let a6t = &self.a[4] / (&mx * &my);
                if !self.divides(&(&a3t * &a3t + 4 * &a6t)) {
                    break if self.roots(&BigInt::one(), &a3t, &-&a6t) {
                        4
                    } else {
                        2
                    };
                }
                let t = if self.is_p(2) {
                    &my * self.red(&a6t)
                } else {
                    &my * self.red(&(-&a3t * self.inv(&BigInt::from(2))))
                };
                self.rst(BigInt::zero(), BigInt::zero(), t);
                my *= &p;
                iy += 1;
                let a4t = &self.a[3] / (&p * &mx);
                let a6t = &self.a[4] / (&mx * &my);
                if !self.divides(&(&a4t * &a4t - 4 * &a6t * &a2t)) {
                    break if self.roots(&a2t, &a4t, &a6t) { 4 } else { 2 };
                }
                let r = if self.is_p(2) {
                    &mx * self.red(&(&a6t * self.inv(&a2t)))
                } else {
                    &mx * self.red(&(-&a4t * self.inv(&(2 * &a2t))))
                };
                self.rst(r, BigInt::zero(), BigInt::zero());
                mx *= &p;
                ix += 1;
            };
            let n = ix + iy - 5;
            return Ok(Some(Self::done(
                IStar(n),
                vd,
                vd + 1 - ix - iy,
                c,
                Additive,
            )));
        }

        // Triple root: move it to 0.
        let alpha = if self.is_p(2) {
            self.red(&b)
        } else if self.is_p(3) {
            self.red(&-&d)
        } else {
            self.red(&(-&b * self.inv(&BigInt::from(3))))
        };
        self.rst(&p * alpha, BigInt::zero(), BigInt::zero());
        let p4 = &p2 * &p2;
        let a3t = &self.a[2] / &p2;
        let a6t = &self.a[4] / &p4;
        if !self.divides(&(&a3t * &a3t + 4 * &a6t)) {
            let c = if self.roots(&BigInt::one(), &a3t, &-&a6t) {
                3
            } else {
                1
            };
            return Ok(Some(Self::done(IVStar, vd, vd - 6, c, Additive)));
        }
        let t = if self.is_p(2) {
            &p2 * self.red(&a6t)
        } else {
            &p2 * self.red(&(-&a3t * self.inv(&BigInt::from(2))))
        };
        self.rst(BigInt::zero(), BigInt::zero(), t);
        if self.v(&self.a[3]) < 4 {
            return Ok(Some(Self::done(IIIStar, vd, vd - 7, 2, Additive)));
        }
        if self.v(&self.a[4]) < 6 {
            return Ok(Some(Self::done(IIStar, vd, vd - 8, 1, Additive)));
        }
        Ok(None)
    }
}
