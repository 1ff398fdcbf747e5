//! Strongly-minimal models: normalization, classification and Tamagawa numbers.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expr::{Env, Splitting};
use crate::padic::{valuation, Prime, Rational, Valuation};
use crate::tables::{self, CharCase, SmRow};
use crate::tate::{tate_local_data, KodairaType, LocalData, ReductionKind};
use crate::weierstrass::{apply_isomorphism, compose, Isomorphism, WeierstrassModel};

/// A model whose coefficient valuations match a strongly-minimal pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StronglyMinimalModel {
    pub model: WeierstrassModel,
    pub p: Prime,
    pub kodaira: KodairaType,
    /// Row number in the strongly-minimal pattern table (1-based).
    pub matched_row: usize,
}

impl StronglyMinimalModel {
    pub fn row(&self) -> &'static SmRow {
        &tables::sm_patterns()[self.matched_row - 1]
    }

    /// The subscript n for I_n and I_n^* with n > 0.
    pub fn n(&self) -> Option<i64> {
        family_n(self.kodaira)
    }

    pub fn env(&self) -> Env<'_> {
        Env::new(&self.p, &self.model).with_n(self.n())
    }

    pub fn tamagawa(&self) -> Result<u32> {
        tamagawa_from_row(self)
    }

    /// Full local data read from the tables.
    pub fn local_data(&self) -> Result<LocalData> {
        sm_local_data(self)
    }
}

pub(crate) fn family_n(t: KodairaType) -> Option<i64> {
    match t {
        KodairaType::I(n) | KodairaType::IStar(n) if n > 0 => Some(n as i64),
        _ => None,
    }
}

fn v(x: &Rational, p: &Prime) -> Valuation {
    valuation(x, p)
}

/// v(x) >= k.
fn at_least(x: &Rational, p: &Prime, k: i64) -> bool {
    v(x, p) >= Valuation::Finite(k)
}

fn p_pow(p: &Prime, k: i64) -> Rational {
    Rational::from_integer(p.pow(k as u32))
}

fn ratio(a: &Rational, b: &Rational) -> Result<Rational> {
    if b.is_zero() {
        return Err(Error::NotStronglyMinimal);
    }
    Ok(a / b)
}

/// Accumulates a chain of changes of variables applied to a model.
struct Walk {
    model: WeierstrassModel,
    phi: Isomorphism,
}

impl Walk {
    fn apply(&mut self, step: Isomorphism) {
        self.model = apply_isomorphism(&self.model, &step);
        self.phi = compose(&self.phi, &step);
    }

    fn translate(&mut self, r: Rational, s: Rational, w: Rational) {
        self.apply(Isomorphism::translation(r, s, w));
    }
}

fn zero() -> Rational {
    Rational::zero()
}

fn int(k: i64) -> Rational {
    Rational::from_integer(BigInt::from(k))
}

/// Transforms a minimal model into a strongly-minimal one.
///
/// Returns the model and the isomorphism from `e` onto it. The input must be minimal at `p`.
pub fn to_strongly_minimal(
    e: &WeierstrassModel,
    p: &Prime,
) -> Result<(StronglyMinimalModel, Isomorphism)> {
    let tate = tate_local_data(e, p)?;
    let actual = match v(&e.discriminant(), p) {
        Valuation::Finite(k) => k,
        Valuation::Infinite => return Err(Error::SingularModel),
    };
    if !e.is_integral_at(p) || actual != tate.local.delta as i64 {
        return Err(Error::NotMinimal {
            actual,
            minimal: tate.local.delta,
        });
    }
    let (sm, psi) = to_strongly_minimal_as(&tate.minimal_model, p, tate.local.kodaira)?;
    Ok((sm, compose(&tate.phi, &psi)))
}

/// Runs the normalization for a known type on a minimal model in Tate position
/// (singular point of the reduction at the origin, and for additive types beyond IV,
/// p | a1, a2; p^2 | a3, a4; p^3 | a6).
pub fn to_strongly_minimal_as(
    e: &WeierstrassModel,
    p: &Prime,
    kodaira: KodairaType,
) -> Result<(StronglyMinimalModel, Isomorphism)> {
    let mut walk = Walk {
        model: e.clone(),
        phi: Isomorphism::identity(),
    };
    if p.is_two() {
        normalize_two(&mut walk, p, kodaira)?;
    } else {
        normalize_odd(&mut walk, p, kodaira)?;
    }
    let row = classify(&walk.model, p)?;
    let found = row_type(row, &walk.model, p)?;
    if found != kodaira {
        return Err(Error::NotStronglyMinimal);
    }
    let sm = StronglyMinimalModel {
        model: walk.model,
        p: p.clone(),
        kodaira,
        matched_row: row.id,
    };
    Ok((sm, walk.phi))
}

fn normalize_two(walk: &mut Walk, p: &Prime, kodaira: KodairaType) -> Result<()> {
    use KodairaType::*;
    match kodaira {
        I(0) => {
            let m = &walk.model;
            if v(&m.a1, p) == Valuation::Finite(0) {
                let r = ratio(&(int(3) * &m.a3), &m.a1)?;
                walk.translate(r, zero(), zero());
                let m = &walk.model;
                if v(&(&m.a4 * &m.a6), p) == Valuation::Finite(0) {
                    let w = -ratio(&m.a4, &m.a1)?;
                    walk.translate(zero(), zero(), w);
                    let m = &walk.model;
                    if v(&m.a3, p) == Valuation::Finite(1) {
                        let r = ratio(&m.a3, &m.a1)?;
                        walk.translate(r, zero(), zero());
                    }
                }
            } else {
                let r = walk.model.a2.clone();
                walk.translate(r, zero(), zero());
            }
        }
        I(n) => {
            let n = n as i64;
            let target = (n + 2) / 2;
            let r = -ratio(&walk.model.a3, &walk.model.a1)?;
            walk.translate(r, zero(), zero());
            let cap = (n + 2) as u32;
            let mut passes = 0;
            while !at_least(&walk.model.a4, p, target) {
                if passes == cap {
                    return Err(Error::InternalLoopBound {
                        context: "I_n normalization at p = 2",
                        cap,
                    });
                }
                passes += 1;
                let w = ratio(&walk.model.a4, &walk.model.a1)?;
                walk.translate(zero(), zero(), w);
                if at_least(&walk.model.a3, p, target) {
                    break;
                }
                let r = -ratio(&walk.model.a3, &walk.model.a1)?;
                walk.translate(r, zero(), zero());
            }
            if n % 2 == 1 {
                if at_least(&walk.model.a3, p, (n + 1) / 2 + 1) {
                    walk.translate(p_pow(p, (n + 1) / 2), zero(), zero());
                }
            } else {
                walk.translate(zero(), zero(), p_pow(p, n / 2));
            }
        }
        II | III | IV => {
            if v(&walk.model.a2, p) == Valuation::Finite(0) {
                walk.translate(zero(), int(1), zero());
            }
        }
        IStar(0) => {
            if v(&walk.model.a4, p) == Valuation::Finite(2) {
                walk.translate(int(2), zero(), zero());
            }
        }
        IStar(_) | IVStar | IIIStar | IIStar => {}
    }
    Ok(())
}

fn normalize_odd(walk: &mut Walk, p: &Prime, kodaira: KodairaType) -> Result<()> {
    use KodairaType::*;
    let m = &walk.model;
    if !m.a1.is_zero() || !m.a3.is_zero() {
        let (s, w) = (-&m.a1 / int(2), -&m.a3 / int(2));
        walk.translate(zero(), s, w);
    }
    match kodaira {
        I(n) if n > 0 => {
            let n = n as i64;
            let target = (n + 4) / 2;
            let cap = (n + 4) as u32;
            let mut passes = 0;
            while !at_least(&walk.model.a4, p, target) {
                if passes == cap {
                    return Err(Error::InternalLoopBound {
                        context: "I_n normalization at odd p",
                        cap,
                    });
                }
                passes += 1;
                let m = &walk.model;
                let r = ratio(&(p_pow(p, target) - &m.a4), &(int(2) * &m.a2))?;
                walk.translate(r, zero(), zero());
            }
        }
        IStar(n) if n > 0 && n % 2 == 0 => {
            let n = n as i64;
            if v(&walk.model.a4, p) == Valuation::Finite((n + 4) / 2) {
                let m = &walk.model;
                let r = ratio(&(p_pow(p, (n + 6) / 2) - &m.a4), &(int(2) * &m.a2))?;
                walk.translate(r, zero(), zero());
            }
        }
        _ => {}
    }
    Ok(())
}

fn char_case(p: &Prime) -> CharCase {
    if p.is_two() {
        CharCase::Two
    } else {
        CharCase::Odd
    }
}

/// The value of n a family row assigns to `e`, if the row's family admits it.
fn row_n(row: &SmRow, base: &Env) -> Result<Option<Option<i64>>> {
    if !row.kodaira.has_n() {
        return Ok(Some(None));
    }
    let Some(n) = row.pattern.solve_n(base)? else {
        return Ok(None);
    };
    if n <= 0 {
        return Ok(None);
    }
    if let Some(fam) = &row.family {
        if !fam.holds(&base.clone().with_n(Some(n)))? {
            return Ok(None);
        }
    }
    Ok(Some(Some(n)))
}

fn row_matches(row: &SmRow, base: &Env) -> Result<bool> {
    if row.char_case != char_case(base.p) {
        return Ok(false);
    }
    let Some(n) = row_n(row, base)? else {
        return Ok(false);
    };
    let env = base.clone().with_n(n);
    if !row.pattern.admits(&env)? {
        return Ok(false);
    }
    match &row.side {
        Some(side) => side.holds(&env),
        None => Ok(true),
    }
}

/// The unique strongly-minimal pattern row matching `e` at `p`.
pub fn classify(e: &WeierstrassModel, p: &Prime) -> Result<&'static SmRow> {
    let base = Env::new(p, e);
    if base.discriminant().is_zero() {
        return Err(Error::SingularModel);
    }
    let mut hit: Option<&'static SmRow> = None;
    for row in tables::sm_patterns() {
        if row_matches(row, &base)? {
            if let Some(prev) = hit {
                return Err(Error::AmbiguousMatch(format!(
                    "rows {} and {}",
                    prev.id, row.id
                )));
            }
            hit = Some(row);
        }
    }
    hit.ok_or(Error::NoMatch)
}

/// The Kodaira type a matched row assigns to `e`.
pub fn row_type(row: &SmRow, e: &WeierstrassModel, p: &Prime) -> Result<KodairaType> {
    let n = row_n(row, &Env::new(p, e))?.ok_or(Error::NoMatch)?;
    row.kodaira.eval(&Env::new(p, e).with_n(n))
}

/// Classifies `e` and packages it as a strongly-minimal model.
pub fn classify_model(e: &WeierstrassModel, p: &Prime) -> Result<StronglyMinimalModel> {
    let row = classify(e, p)?;
    let kodaira = row_type(row, e, p)?;
    Ok(StronglyMinimalModel {
        model: e.clone(),
        p: p.clone(),
        kodaira,
        matched_row: row.id,
    })
}

fn to_u32(x: &Rational) -> Result<u32> {
    if !x.is_integer() {
        return Err(Error::Table(format!("non-integral table value {x}")));
    }
    x.to_integer()
        .to_u32()
        .ok_or_else(|| Error::Table(format!("table value {x} out of range")))
}

/// Tamagawa number and reduction kind; at p = 2 read by valuation comparisons where available.
pub fn tamagawa_and_reduction(s: &StronglyMinimalModel) -> Result<(u32, ReductionKind)> {
    let env = s.env();
    let q2 = if s.p.is_two() {
        tables::tamagawa_q2()
            .iter()
            .find(|r| tables::template_covers(&r.kodaira, &r.family, s.kodaira).is_some())
    } else {
        None
    };
    let branch = match q2 {
        Some(row) => {
            if !row.pattern.admits(&env)? {
                return Err(Error::TableMismatch {
                    table: "tamagawa_q2".into(),
                    detail: format!("{} does not fit {}", s.kodaira, row.pattern),
                });
            }
            row.tamagawa.select(&env)?
        }
        None => s.row().tamagawa.select(&env)?,
    };
    let c = to_u32(&branch.values[0].eval_num(&env)?)?;
    let reduction = match (branch.tag, s.kodaira) {
        (Some(Splitting::Split), _) => ReductionKind::SplitMultiplicative,
        (Some(Splitting::Nonsplit), _) => ReductionKind::NonsplitMultiplicative,
        (None, KodairaType::I(0)) => ReductionKind::Good,
        (None, KodairaType::I(_)) => {
            return Err(Error::Table(
                "multiplicative row without a split tag".into(),
            ));
        }
        (None, _) => ReductionKind::Additive,
    };
    Ok((c, reduction))
}

/// The Tamagawa number c of a strongly-minimal model.
pub fn tamagawa_from_row(s: &StronglyMinimalModel) -> Result<u32> {
    Ok(tamagawa_and_reduction(s)?.0)
}

/// The Tamagawa number from the general pattern table only (Legendre / Artin–Schreier form).
pub fn tamagawa_general(s: &StronglyMinimalModel) -> Result<u32> {
    let env = s.env();
    let branch = s.row().tamagawa.select(&env)?;
    to_u32(&branch.values[0].eval_num(&env)?)
}

/// (delta, f) over Q_2 from coefficient conditions.
pub fn disc_conductor_q2(s: &StronglyMinimalModel) -> Result<(u32, u32)> {
    if !s.p.is_two() {
        return Err(Error::Char2Required);
    }
    let env = s.env();
    let row = tables::disc_conductor_q2()
        .iter()
        .find(|r| tables::template_covers(&r.kodaira, &r.family, s.kodaira).is_some())
        .ok_or(Error::NoMatch)?;
    let branch = row.values.select(&env)?;
    Ok((
        to_u32(&branch.values[0].eval_num(&env)?)?,
        to_u32(&branch.values[1].eval_num(&env)?)?,
    ))
}

/// Local data of a strongly-minimal model, read entirely from the tables.
pub fn sm_local_data(s: &StronglyMinimalModel) -> Result<LocalData> {
    let (c, reduction) = tamagawa_and_reduction(s)?;
    let delta = match v(&s.model.discriminant(), &s.p) {
        Valuation::Finite(k) => k as u32,
        Valuation::Infinite => return Err(Error::SingularModel),
    };
    let data = LocalData::from_parts(s.kodaira, delta, c, reduction);
    if s.p.is_two() {
        let (d2, f2) = disc_conductor_q2(s)?;
        if (d2, f2) != (data.delta, data.f) {
            return Err(Error::TableMismatch {
                table: "disc_conductor_q2".into(),
                detail: format!(
                    "table gives ({d2}, {f2}), model gives ({}, {})",
                    data.delta, data.f
                ),
            });
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tate::local_data;

    fn sm(a: [i64; 5], p: u64) -> StronglyMinimalModel {
        let e = WeierstrassModel::from_ints(a);
        to_strongly_minimal(&e, &Prime::new(p).unwrap()).unwrap().0
    }

    #[test]
    fn classify_examples() {
        let two = Prime::two();
        let iv = WeierstrassModel::from_ints([2, 2, 2, 4, 4]);
        assert_eq!(classify_model(&iv, &two).unwrap().kodaira, KodairaType::IV);
        let three = Prime::new(3u32).unwrap();
        let ii_star = WeierstrassModel::from_ints([0, 9, 0, 81, 243]);
        assert_eq!(
            classify_model(&ii_star, &three).unwrap().kodaira,
            KodairaType::IIStar
        );
        let i3 = WeierstrassModel::from_ints([1, 1, 4, 4, 8]);
        assert_eq!(
            classify_model(&i3, &two).unwrap().kodaira,
            KodairaType::I(3)
        );
    }

    #[test]
    fn normalization_matches_oracle() {
        for (a, p) in [
            ([0, 0, 1, -1, 0], 37),
            ([1, 0, 1, -1, 0], 2),
            ([0, 1, 1, -2, 0], 2),
            ([1, -1, 1, -29, -53], 2),
            ([0, 0, 0, -1, 0], 2),
            ([0, 0, 0, 4, 0], 2),
            ([1, 1, 0, -8, -7], 3),
            ([0, -1, 1, -10, -20], 11),
            ([0, 0, 0, 1, 0], 2),
            ([0, 0, 0, -27, 0], 3),
        ] {
            let s = sm(a, p);
            let oracle =
                local_data(&WeierstrassModel::from_ints(a), &Prime::new(p).unwrap()).unwrap();
            assert_eq!(s.local_data().unwrap(), oracle, "{a:?} at {p}");
            assert_eq!(tamagawa_general(&s).unwrap(), oracle.c);
        }
    }

    #[test]
    fn q2_disc_conductor_examples() {
        let two = Prime::two();
        let iv_star = classify_model(&WeierstrassModel::from_ints([2, 4, 4, 8, 16]), &two).unwrap();
        assert_eq!(iv_star.kodaira, KodairaType::IVStar);
        assert_eq!(disc_conductor_q2(&iv_star).unwrap(), (8, 2));
    }
}
