//! Local data of quadratic twists read from a strongly-minimal model of the base curve.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Env, Splitting};
use crate::padic::{valuation, Prime, Rational, Valuation};
use crate::strongly_minimal::{
    classify_model, to_strongly_minimal, to_strongly_minimal_as, StronglyMinimalModel,
};
use crate::tables::{self, template_covers, TwistModelRow};
use crate::tate::{tate_local_data, KodairaType, LocalData, ReductionKind};
use crate::weierstrass::{
    apply_isomorphism, canonicalize_twist, compose, twist_model, Isomorphism, TwistClass,
};

/// How the twisted data was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TwistPath {
    /// Read from closed-form table rows on the base model.
    TableFast,
    /// Read from a strongly-minimal model of the twist.
    ModelDerived,
}

impl fmt::Display for TwistPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwistPath::TableFast => "TABLE_FAST",
            TwistPath::ModelDerived => "MODEL_DERIVED",
        })
    }
}

/// Local data of a curve and of its quadratic twist by `d` at `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistLocalData {
    pub base: LocalData,
    pub twisted: LocalData,
    pub d: TwistClass,
    pub p: Prime,
    pub path: TwistPath,
    /// Row of the Q_2 twist-model table behind the twisted data, when one was used.
    pub model_row: Option<usize>,
}

impl TwistLocalData {
    pub fn to_json(&self) -> serde_json::Value {
        let num = |x: &BigInt| {
            x.to_i64().map_or_else(
                || serde_json::json!(x.to_string()),
                |k| serde_json::json!(k),
            )
        };
        serde_json::json!({
            "p": num(self.p.value()),
            "d": num(&self.d.d),
            "path": self.path,
            "model_row": self.model_row,
            "base": self.base,
            "twisted": self.twisted,
        })
    }
}

fn mismatch(table: &str, detail: String) -> Error {
    Error::TableMismatch {
        table: table.into(),
        detail,
    }
}

fn v_d(d: &TwistClass, p: &Prime) -> Result<u32> {
    let k = d.valuation(p);
    if k > 1 {
        return Err(Error::Precondition(format!(
            "twist parameter {d} is not canonical at {}",
            p.value()
        )));
    }
    Ok(k)
}

fn to_u32(x: &Rational, what: &str) -> Result<u32> {
    x.is_integer()
        .then(|| x.to_integer().to_u32())
        .flatten()
        .ok_or_else(|| Error::Table(format!("{what} evaluates to {x}")))
}

fn disc_valuation(m: &crate::WeierstrassModel, p: &Prime) -> Result<u32> {
    match valuation(&m.discriminant(), p) {
        Valuation::Finite(k) => Ok(k as u32),
        Valuation::Infinite => Err(Error::SingularModel),
    }
}

fn reduction_for(tag: Option<Splitting>, t: KodairaType) -> ReductionKind {
    match (tag, t) {
        (Some(Splitting::Split), _) => ReductionKind::SplitMultiplicative,
        (Some(Splitting::Nonsplit), _) => ReductionKind::NonsplitMultiplicative,
        (None, KodairaType::I(0)) => ReductionKind::Good,
        (None, KodairaType::I(_)) => ReductionKind::NonsplitMultiplicative,
        (None, _) => ReductionKind::Additive,
    }
}

/// Evaluates the auxiliary polynomial P[j] for (type, v(d)) at the coefficients of `s` and `d`.
pub fn evaluate_prj(
    r: KodairaType,
    v_d: u32,
    j: u32,
    s: &StronglyMinimalModel,
    d: &TwistClass,
) -> Result<Rational> {
    let env = s.env().with_d(d.as_rational());
    poly_value(r, v_d, j, &env)
}

fn poly_value(r: KodairaType, v_d: u32, j: u32, env: &Env) -> Result<Rational> {
    let row = tables::twist_poly(v_d, r, j).ok_or_else(|| Error::UnknownPolynomial {
        family: r.to_string(),
        v_d,
        j,
    })?;
    row.poly.eval_num(env)
}

/// Evaluates a closure with an environment on the base model carrying d, the base data and P[j].
fn with_base_env<T>(
    s: &StronglyMinimalModel,
    d: &TwistClass,
    v_d: u32,
    base: Option<&LocalData>,
    body: impl FnOnce(&Env) -> Result<T>,
) -> Result<T> {
    let kodaira = s.kodaira;
    let polys = move |j: u32, env: &Env| poly_value(kodaira, v_d, j, env);
    let mut env = s.env().with_d(d.as_rational());
    if let Some(b) = base {
        env.c = Some(b.c as i64);
        env.delta = Some(b.delta as i64);
        env.f = Some(b.f as i64);
    }
    env.polys = Some(&polys);
    body(&env)
}

/// The odd-p table row for (type, v(d)).
fn odd_row(s: &StronglyMinimalModel, v_d: u32) -> Result<&'static tables::TwistOddRow> {
    tables::twist_odd()
        .iter()
        .find(|r| r.v_d == v_d && template_covers(&r.kodaira, &r.family, s.kodaira).is_some())
        .ok_or(Error::NoMatch)
}

/// Twist data at odd p: type and Tamagawa pair from the table, δ of the twist from its model.
pub fn twist_data_odd(s: &StronglyMinimalModel, d: &TwistClass) -> Result<TwistLocalData> {
    if s.p.is_two() {
        return Err(Error::OddPrimeRequired);
    }
    let vd = v_d(d, &s.p)?;
    let base = s.local_data()?;
    let row = odd_row(s, vd)?;
    let (twisted_type, cd, tag) = with_base_env(s, d, vd, Some(&base), |env| {
        let branch = row.tamagawa.select(env)?;
        let c = to_u32(&branch.values[0].eval_num(env)?, "c")?;
        if c != base.c {
            return Err(mismatch(
                "twist_odd",
                format!("row gives c = {c}, base has c = {}", base.c),
            ));
        }
        Ok((
            row.twisted.eval(env)?,
            to_u32(&branch.values[1].eval_num(env)?, "c of twist")?,
            branch.tag,
        ))
    })?;
    let (f, _) = twist_strongly_minimal(s, d)?;
    if f.kodaira != twisted_type {
        return Err(mismatch(
            "twist_odd",
            format!("predicted {twisted_type}, twist model is {}", f.kodaira),
        ));
    }
    let delta = disc_valuation(&f.model, &s.p)?;
    let twisted = LocalData::from_parts(twisted_type, delta, cd, reduction_for(tag, twisted_type));
    Ok(TwistLocalData {
        base,
        twisted,
        d: d.clone(),
        p: s.p.clone(),
        path: TwistPath::TableFast,
        model_row: None,
    })
}

/// A strongly-minimal model of the twist of `s` by `d`, with the map from the twist model.
pub fn twist_strongly_minimal(
    s: &StronglyMinimalModel,
    d: &TwistClass,
) -> Result<(StronglyMinimalModel, Isomorphism)> {
    let vd = v_d(d, &s.p)?;
    if s.p.is_two() {
        let (f, phi, _) = twist_model_q2(s, d, vd)?;
        Ok((f, phi))
    } else {
        twist_model_odd(s, d, vd)
    }
}

fn twist_model_odd(
    s: &StronglyMinimalModel,
    d: &TwistClass,
    vd: u32,
) -> Result<(StronglyMinimalModel, Isomorphism)> {
    use KodairaType::*;
    let row = odd_row(s, vd)?;
    let predicted = row.twisted.eval(&s.env())?;
    let mut phi = Isomorphism::from_ints(2, 0, 0, 0);
    if vd == 1 && matches!(s.kodaira, IStar(_) | IVStar | IIIStar | IIStar) {
        let up = Isomorphism::scaling(Rational::from_integer(s.p.value().clone()));
        phi = compose(&phi, &up);
    }
    let e = apply_isomorphism(&twist_model(&s.model, d), &phi);
    let (f, psi) = to_strongly_minimal_as(&e, &s.p, predicted)?;
    Ok((f, compose(&phi, &psi)))
}

/// The unique row of the Q_2 model table that applies to (s, d).
fn select_model_row(
    s: &StronglyMinimalModel,
    env: &Env,
    vd: u32,
) -> Result<&'static TwistModelRow> {
    let mut hit: Option<&'static TwistModelRow> = None;
    for row in tables::twist_models_q2() {
        if row.v_d != vd || template_covers(&row.kodaira, &row.family, s.kodaira).is_none() {
            continue;
        }
        if row.cond.holds(env)? {
            if let Some(prev) = hit {
                return Err(Error::AmbiguousMatch(format!(
                    "twist_models_q2 rows {} and {}",
                    prev.id, row.id
                )));
            }
            hit = Some(row);
        }
    }
    hit.ok_or(Error::NoMatch)
}

/// Builds F over Q_2 by the tabulated isomorphism and checks its pattern and type.
fn twist_model_q2(
    s: &StronglyMinimalModel,
    d: &TwistClass,
    vd: u32,
) -> Result<(StronglyMinimalModel, Isomorphism, &'static TwistModelRow)> {
    with_base_env(s, d, vd, None, |env| {
        let row = select_model_row(s, env, vd)?;
        let iso = tables::twist_iso(vd, s.kodaira, row.j).ok_or_else(|| {
            mismatch(
                "twist_isos_q2",
                format!(
                    "no isomorphism {} for {} with v(d) = {vd}",
                    row.j, s.kodaira
                ),
            )
        })?;
        let [u, r, sh, w] = &iso.urs_w;
        let phi = Isomorphism::new(
            u.eval_num(env)?,
            r.eval_num(env)?,
            sh.eval_num(env)?,
            w.eval_num(env)?,
        )?;
        let f = apply_isomorphism(&twist_model(&s.model, d), &phi);
        let on_f = env.rebind(&f);
        let fits =
            row.pattern.admits(&on_f)? && row.side.as_ref().map_or(Ok(true), |c| c.holds(&on_f))?;
        if !fits {
            let shown = crate::weierstrass::valuation_vector(&f, &s.p);
            return Err(mismatch(
                "twist_models_q2",
                format!(
                    "row {}: F has {shown}, expected ({}) for {} and d = {d}",
                    row.id, row.pattern, s.kodaira
                ),
            ));
        }
        let expected = row.twisted.eval(env)?;
        let sm = classify_model(&f, &s.p).map_err(|e| {
            mismatch(
                "twist_models_q2",
                format!("row {}: F does not classify: {e}", row.id),
            )
        })?;
        if sm.kodaira != expected {
            return Err(mismatch(
                "twist_models_q2",
                format!(
                    "row {}: F has type {}, row says {expected}",
                    row.id, sm.kodaira
                ),
            ));
        }
        Ok((sm, phi, row))
    })
}

/// Twist data over Q_2: the closed-form rows for v(d) = 0, the twist model for v(d) = 1.
pub fn twist_data_q2(s: &StronglyMinimalModel, d: &TwistClass) -> Result<TwistLocalData> {
    if !s.p.is_two() {
        return Err(Error::Char2Required);
    }
    match v_d(d, &s.p)? {
        0 => twist_data_q2_fast(s, d),
        _ => twist_data_q2_model(s, d),
    }
}

/// Q_2, v(d) = 0: every entry read from the closed-form rows on the base model.
pub fn twist_data_q2_fast(s: &StronglyMinimalModel, d: &TwistClass) -> Result<TwistLocalData> {
    if !s.p.is_two() {
        return Err(Error::Char2Required);
    }
    if v_d(d, &s.p)? != 0 {
        return Err(Error::Precondition(
            "the closed-form rows need a unit d".into(),
        ));
    }
    let base = s.local_data()?;
    let twisted = with_base_env(s, d, 0, Some(&base), |env| {
        let mut hit = None;
        for row in tables::twist_q2_unramified() {
            if template_covers(&row.kodaira, &row.family, s.kodaira).is_none()
                || !row.cond.holds(env)?
            {
                continue;
            }
            if let Some(prev) = hit.replace(row) {
                return Err(Error::AmbiguousMatch(format!(
                    "twist_q2_unramified rows {} and {}",
                    prev.id, row.id
                )));
            }
        }
        let row = hit.ok_or(Error::NoMatch)?;
        let num = |e: &crate::expr::Expr, what: &str| to_u32(&e.eval_num(env)?, what);
        let branch = row.tamagawa.select(env)?;
        let pairs = [
            ("delta", num(&row.delta[0], "delta")?, base.delta),
            ("f", num(&row.conductor[0], "f")?, base.f),
            ("c", num(&branch.values[0], "c")?, base.c),
        ];
        for (what, table, actual) in pairs {
            if table != actual {
                return Err(mismatch(
                    "twist_q2_unramified",
                    format!("row {}: {what} = {table}, base curve has {actual}", row.id),
                ));
            }
        }
        let kodaira = row.twisted.eval(env)?;
        let delta = num(&row.delta[1], "delta of twist")?;
        let f = num(&row.conductor[1], "f of twist")?;
        let c = num(&branch.values[1], "c of twist")?;
        let data = LocalData::from_parts(kodaira, delta, c, reduction_for(branch.tag, kodaira));
        if data.f != f {
            return Err(mismatch(
                "twist_q2_unramified",
                format!(
                    "row {}: f of twist {f} disagrees with {} from delta and type",
                    row.id, data.f
                ),
            ));
        }
        Ok(data)
    })?;
    Ok(TwistLocalData {
        base,
        twisted,
        d: d.clone(),
        p: s.p.clone(),
        path: TwistPath::TableFast,
        model_row: None,
    })
}

/// Any p: data of the twist read from its strongly-minimal model.
pub fn twist_data_q2_model(s: &StronglyMinimalModel, d: &TwistClass) -> Result<TwistLocalData> {
    let base = s.local_data()?;
    let (f, model_row) = if s.p.is_two() {
        let (f, _, row) = twist_model_q2(s, d, v_d(d, &s.p)?)?;
        (f, Some(row.id))
    } else {
        (twist_strongly_minimal(s, d)?.0, None)
    };
    let twisted = f.local_data()?;
    Ok(TwistLocalData {
        base,
        twisted,
        d: d.clone(),
        p: s.p.clone(),
        path: TwistPath::ModelDerived,
        model_row,
    })
}

/// Twist data by the default route for p: odd-p table, or the Q_2 routes.
pub fn twist_data(s: &StronglyMinimalModel, d: &TwistClass) -> Result<TwistLocalData> {
    if s.p.is_two() {
        twist_data_q2(s, d)
    } else {
        twist_data_odd(s, d)
    }
}

/// Twist data for an arbitrary model and twist parameter.
pub fn twist_local_data(
    e: &crate::WeierstrassModel,
    p: &Prime,
    d: &BigInt,
) -> Result<TwistLocalData> {
    let d = canonicalize_twist(d, p)?;
    let tate = tate_local_data(e, p)?;
    let (s, _) = to_strongly_minimal(&tate.minimal_model, p)?;
    twist_data(&s, &d)
}

/// Twisting by the trivial class.
pub fn trivial_twist() -> TwistClass {
    TwistClass {
        d: BigInt::one(),
        canonical: true,
    }
}
