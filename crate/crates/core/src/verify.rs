//! Differential testing: table-driven twist data against Tate's algorithm on the twist model.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::padic::{valuation, Prime, Valuation};
use crate::strongly_minimal::to_strongly_minimal;
use crate::tate::{local_data, tate_local_data, KodairaType, LocalData};
use crate::twist::{twist_data, twist_data_q2_model, TwistLocalData};
use crate::weierstrass::{
    apply_isomorphism, canonicalize_twist, twist_model, Isomorphism, TwistClass, WeierstrassModel,
};

/// Environment variable that overrides the requested job count.
pub const JOBS_ENV: &str = "TWISTFORGE_JOBS";

/// Optional restrictions on the enumerated curves.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Filters {
    /// Keep curves whose given model has v_p(disc) at most this bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_disc_valuation: Option<u32>,
    /// Keep curves of this Kodaira type at p.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kodaira: Option<KodairaType>,
}

/// A corpus: a coefficient box (or an explicit curve list), a prime and twist parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub p: u64,
    /// Inclusive ranges for a1, a2, a3, a4, a6.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub coeff_box: Option<[[i64; 2]; 5]>,
    /// Explicit integral curves, used instead of the box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<Vec<[i64; 5]>>,
    pub dset: Vec<i64>,
    #[serde(default)]
    pub filters: Filters,
}

impl CorpusSpec {
    pub fn from_box(p: u64, coeff_box: [[i64; 2]; 5], dset: Vec<i64>) -> Self {
        CorpusSpec {
            p,
            coeff_box: Some(coeff_box),
            curves: None,
            dset,
            filters: Filters::default(),
        }
    }

    /// The same range for every coefficient.
    pub fn cube(p: u64, lo: i64, hi: i64, dset: Vec<i64>) -> Self {
        Self::from_box(p, [[lo, hi]; 5], dset)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CorpusSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        Prime::new(self.p)?;
        if self.coeff_box.is_some() == self.curves.is_some() {
            return Err(Error::Parse(
                "exactly one of box and curves is required".into(),
            ));
        }
        if self.dset.contains(&0) {
            return Err(Error::ZeroTwist);
        }
        Ok(())
    }

    /// Number of coefficient vectors before filtering.
    pub fn corpus_size(&self) -> u64 {
        match (&self.coeff_box, &self.curves) {
            (Some(b), _) => b
                .iter()
                .map(|[lo, hi]| (hi - lo + 1).max(0) as u64)
                .product(),
            (_, Some(c)) => c.len() as u64,
            _ => 0,
        }
    }

    /// Curves in lexicographic order over (a1, a2, a3, a4, a6).
    pub fn curves(&self) -> Box<dyn Iterator<Item = [i64; 5]> + Send + '_> {
        match (&self.coeff_box, &self.curves) {
            (Some(b), _) => Box::new(BoxIter::new(*b)),
            (_, Some(c)) => Box::new(c.iter().copied()),
            _ => Box::new(std::iter::empty()),
        }
    }
}

struct BoxIter {
    bounds: [[i64; 2]; 5],
    next: Option<[i64; 5]>,
}

impl BoxIter {
    fn new(bounds: [[i64; 2]; 5]) -> Self {
        let empty = bounds.iter().any(|[lo, hi]| lo > hi);
        BoxIter {
            bounds,
            next: (!empty).then(|| bounds.map(|[lo, _]| lo)),
        }
    }
}

impl Iterator for BoxIter {
    type Item = [i64; 5];

    fn next(&mut self) -> Option<[i64; 5]> {
        let current = self.next?;
        let mut succ = current;
        let mut i = 5;
        self.next = loop {
            if i == 0 {
                break None;
            }
            i -= 1;
            if succ[i] < self.bounds[i][1] {
                succ[i] += 1;
                break Some(succ);
            }
            succ[i] = self.bounds[i][0];
        };
        Some(current)
    }
}

/// Outcome of one (curve, d) pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairRecord {
    pub ainvs: [i64; 5],
    pub d: i64,
    /// Default route through the tables, or the error it raised.
    pub fast: std::result::Result<TwistLocalData, String>,
    /// Strongly-minimal-model route, when it is distinct from the default (p = 2, v(d) = 0).
    pub model: Option<std::result::Result<LocalData, String>>,
    /// Tate's algorithm on E and on the twist model.
    pub oracle: std::result::Result<(LocalData, LocalData), String>,
}

impl PairRecord {
    pub fn agrees(&self) -> bool {
        let Ok((base, twisted)) = &self.oracle else {
            return false;
        };
        let fast_ok = matches!(&self.fast, Ok(t) if t.base == *base && t.twisted == *twisted);
        let model_ok = match &self.model {
            None => true,
            Some(m) => m.as_ref() == Ok(twisted),
        };
        fast_ok && model_ok
    }

    pub fn to_json(&self, p: u64) -> Value {
        let mut rec = json!({ "ainvs": self.ainvs, "p": p, "d": self.d });
        let obj = rec.as_object_mut().expect("object");
        if self.agrees() {
            let t = self.fast.as_ref().expect("agreement");
            obj.insert("status".into(), json!("agree"));
            obj.insert("path".into(), json!(t.path));
            obj.insert("base".into(), json!(t.base));
            obj.insert("twisted".into(), json!(t.twisted));
            return rec;
        }
        obj.insert("status".into(), json!("disagree"));
        obj.insert(
            "fast".into(),
            match &self.fast {
                Ok(t) => json!({ "path": t.path, "base": t.base, "twisted": t.twisted }),
                Err(e) => json!({ "error": e }),
            },
        );
        if let Some(m) = &self.model {
            obj.insert(
                "model".into(),
                match m {
                    Ok(t) => json!({ "twisted": t }),
                    Err(e) => json!({ "error": e }),
                },
            );
        }
        obj.insert(
            "oracle".into(),
            match &self.oracle {
                Ok((b, t)) => json!({ "base": b, "twisted": t }),
                Err(e) => json!({ "error": e }),
            },
        );
        rec
    }
}

/// Per-curve result, in enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CurveRecord {
    Singular([i64; 5]),
    Filtered,
    Pairs(Vec<PairRecord>),
}

/// Totals of a differential run; `total = agreements + disagreements.len() + skipped_singular`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiffReport {
    pub p: u64,
    pub total: u64,
    pub agreements: u64,
    pub disagreements: Vec<PairRecord>,
    pub skipped_singular: u64,
    /// Nonsingular curves dropped by the filters; not part of `total`.
    pub filtered: u64,
    /// Wall time; reported separately so that reports stay byte-identical.
    pub elapsed: Duration,
}

impl DiffReport {
    pub fn summary_json(&self) -> Value {
        json!({
            "summary": true,
            "p": self.p,
            "total": self.total,
            "agreements": self.agreements,
            "disagreements": self.disagreements.len(),
            "skipped_singular": self.skipped_singular,
            "filtered": self.filtered,
        })
    }

    pub fn is_clean(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Resolves the worker count: the environment variable wins over the flag.
pub fn resolve_jobs(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(JOBS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Parse(format!(
                "{JOBS_ENV} must be a positive integer, got {s:?}"
            ))),
        },
        Err(_) => Ok(flag),
    }
}

/// Evaluates every d for one curve, sharing the base computations.
pub fn evaluate_curve(a: [i64; 5], p: &Prime, spec: &CorpusSpec) -> CurveRecord {
    let e = WeierstrassModel::from_ints(a);
    let disc = e.discriminant();
    if disc.is_zero() {
        return CurveRecord::Singular(a);
    }
    if let Some(bound) = spec.filters.max_disc_valuation {
        if valuation(&disc, p) > Valuation::Finite(bound as i64) {
            return CurveRecord::Filtered;
        }
    }
    let tate = tate_local_data(&e, p);
    if let (Some(want), Ok(t)) = (spec.filters.kodaira, &tate) {
        if t.local.kodaira != want {
            return CurveRecord::Filtered;
        }
    }
    let sm = tate
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|t| to_strongly_minimal(&t.minimal_model, p));
    let pairs = spec
        .dset
        .iter()
        .map(|&d| {
            let raw = TwistClass::new(d).expect("nonzero");
            let oracle = match &tate {
                Ok(t) => local_data(&twist_model(&e, &raw), p)
                    .map(|twisted| (t.local, twisted))
                    .map_err(|e| e.to_string()),
                Err(err) => Err(err.to_string()),
            };
            let canonical = canonicalize_twist(&BigInt::from(d), p);
            let (fast, model) = match (&sm, &canonical) {
                (Ok((s, _)), Ok(cd)) => {
                    let fast = twist_data(s, cd).map_err(|e| e.to_string());
                    let model = (p.is_two() && cd.valuation(p) == 0).then(|| {
                        twist_data_q2_model(s, cd)
                            .map(|t| t.twisted)
                            .map_err(|e| e.to_string())
                    });
                    (fast, model)
                }
                (Err(err), _) | (_, Err(err)) => (Err(err.to_string()), None),
            };
            PairRecord {
                ainvs: a,
                d,
                fast,
                model,
                oracle,
            }
        })
        .collect();
    CurveRecord::Pairs(pairs)
}

const CHUNK: usize = 2048;

/// Runs the corpus with `jobs` workers (None: rayon's default), handing each curve's
/// records to `sink` in enumeration order.
pub fn run_differential_with(
    spec: &CorpusSpec,
    jobs: Option<usize>,
    mut sink: impl FnMut(&CurveRecord),
) -> Result<DiffReport> {
    spec.check()?;
    let p = Prime::new(spec.p)?;
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Precondition(e.to_string()))?;
    let mut report = DiffReport {
        p: spec.p,
        ..DiffReport::default()
    };
    let mut curves = spec.curves();
    loop {
        let chunk: Vec<[i64; 5]> = curves.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        let results: Vec<CurveRecord> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&a| evaluate_curve(a, &p, spec))
                .collect()
        });
        for rec in &results {
            sink(rec);
            match rec {
                CurveRecord::Singular(_) => {
                    report.skipped_singular += 1;
                    report.total += 1;
                }
                CurveRecord::Filtered => report.filtered += 1,
                CurveRecord::Pairs(pairs) => {
                    for pair in pairs {
                        report.total += 1;
                        if pair.agrees() {
                            report.agreements += 1;
                        } else {
                            report.disagreements.push(pair.clone());
                        }
                    }
                }
            }
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

pub fn run_differential(spec: &CorpusSpec) -> Result<DiffReport> {
    run_differential_with(spec, None, |_| {})
}

/// Report lines: one per (curve, d), one per singular curve, then the summary.
pub fn report_lines(
    spec: &CorpusSpec,
    jobs: Option<usize>,
    mut out: impl FnMut(String),
) -> Result<DiffReport> {
    let report = run_differential_with(spec, jobs, |rec| match rec {
        CurveRecord::Singular(a) => {
            out(json!({ "ainvs": a, "p": spec.p, "status": "singular" }).to_string())
        }
        CurveRecord::Filtered => {}
        CurveRecord::Pairs(pairs) => pairs
            .iter()
            .for_each(|pair| out(pair.to_json(spec.p).to_string())),
    })?;
    out(report.summary_json().to_string());
    Ok(report)
}

/// Both routes and the oracle on a single pair.
pub fn evaluate_pair(a: [i64; 5], p: &Prime, d: i64) -> Result<PairRecord> {
    if d == 0 {
        return Err(Error::ZeroTwist);
    }
    let spec = CorpusSpec {
        p: 0,
        coeff_box: None,
        curves: None,
        dset: vec![d],
        filters: Filters::default(),
    };
    match evaluate_curve(a, p, &spec) {
        CurveRecord::Pairs(mut v) => Ok(v.remove(0)),
        _ => Err(Error::SingularModel),
    }
}

fn disagrees(a: [i64; 5], p: &Prime, d: i64) -> bool {
    evaluate_pair(a, p, d).map(|r| !r.agrees()).unwrap_or(false)
}

fn size(a: &[i64; 5]) -> (u64, u64) {
    let bits = a
        .iter()
        .map(|x| 64 - x.unsigned_abs().leading_zeros() as u64)
        .sum();
    (bits, a.iter().map(|x| x.unsigned_abs()).sum())
}

fn to_ints(e: &WeierstrassModel) -> Option<[i64; 5]> {
    let mut out = [0i64; 5];
    for (slot, x) in out.iter_mut().zip(e.coeffs()) {
        if !x.is_integer() {
            return None;
        }
        *slot = i64::try_from(x.to_integer()).ok()?;
    }
    Some(out)
}

fn candidates(a: [i64; 5], p: i64) -> Vec<[i64; 5]> {
    let mut out = Vec::new();
    for i in 0..5 {
        let x = a[i];
        if x == 0 {
            continue;
        }
        for y in [0, x - x.signum(), x / 2, if x % p == 0 { x / p } else { x }] {
            if y != x {
                let mut b = a;
                b[i] = y;
                out.push(b);
            }
        }
    }
    let e = WeierstrassModel::from_ints(a);
    for r in -2..=2i64 {
        for s in -1..=1i64 {
            for t in -2..=2i64 {
                if (r, s, t) == (0, 0, 0) {
                    continue;
                }
                let phi = Isomorphism::from_ints(1, r, s, t);
                if let Some(b) = to_ints(&apply_isomorphism(&e, &phi)) {
                    out.push(b);
                }
            }
        }
    }
    out
}

/// Greedily shrinks a disagreeing integral curve while the disagreement persists.
pub fn minimize_witness(
    curve: &WeierstrassModel,
    d: &BigInt,
    p: &Prime,
) -> Result<WeierstrassModel> {
    let a = to_ints(curve)
        .ok_or_else(|| Error::Precondition("witness must have integral coefficients".into()))?;
    let d =
        i64::try_from(d).map_err(|_| Error::Precondition("twist parameter out of range".into()))?;
    let pi = i64::try_from(p.value()).unwrap_or(i64::MAX);
    if !disagrees(a, p, d) {
        return Err(Error::Precondition(
            "the two routes agree on this input".into(),
        ));
    }
    let mut best = a;
    loop {
        let next = candidates(best, pi)
            .into_iter()
            .filter(|b| size(b) < size(&best) && disagrees(*b, p, d))
            .min_by_key(|b| (size(b), *b));
        match next {
            Some(b) => best = b,
            None => return Ok(WeierstrassModel::from_ints(best)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_enumeration_is_lexicographic() {
        let spec = CorpusSpec::from_box(2, [[0, 1], [0, 0], [-1, 0], [0, 0], [0, 0]], vec![1]);
        let v: Vec<_> = spec.curves().collect();
        assert_eq!(
            v,
            vec![
                [0, 0, -1, 0, 0],
                [0, 0, 0, 0, 0],
                [1, 0, -1, 0, 0],
                [1, 0, 0, 0, 0]
            ]
        );
        assert_eq!(spec.corpus_size(), 4);
    }

    #[test]
    fn empty_box_has_no_work() {
        let spec = CorpusSpec::from_box(3, [[1, 0], [0, 0], [0, 0], [0, 0], [0, 0]], vec![1]);
        let r = run_differential(&spec).unwrap();
        assert_eq!((r.total, r.agreements, r.skipped_singular), (0, 0, 0));
    }

    #[test]
    fn singular_curve_is_counted() {
        let spec = CorpusSpec::cube(2, 0, 0, vec![-1]);
        let r = run_differential(&spec).unwrap();
        assert_eq!((r.total, r.skipped_singular, r.agreements), (1, 1, 0));
    }

    #[test]
    fn small_q2_box_agrees() {
        let r = run_differential(&CorpusSpec::cube(2, -1, 1, vec![-1, 2])).unwrap();
        assert!(r.is_clean(), "{:?}", r.disagreements.first());
        assert_eq!(r.total, r.agreements + r.skipped_singular);
    }

    #[test]
    fn spec_json() {
        let s = CorpusSpec::from_json(
            r#"{"p": 5, "box": [[0,0],[0,1],[0,0],[-1,1],[0,2]], "dset": [1, 2, 5], "filters": {"max_disc_valuation": 12}}"#,
        )
        .unwrap();
        assert_eq!(s.corpus_size(), 18);
        assert_eq!(s.filters.max_disc_valuation, Some(12));
        assert!(CorpusSpec::from_json(
            r#"{"p": 4, "box": [[0,0],[0,0],[0,0],[0,0],[0,0]], "dset": [1]}"#
        )
        .is_err());
        assert!(CorpusSpec::from_json(r#"{"p": 5, "dset": [1]}"#).is_err());
        assert!(
            CorpusSpec::from_json(r#"{"p": 5, "curves": [[0,0,1,-1,0]], "dset": [0]}"#).is_err()
        );
    }

    #[test]
    fn minimize_rejects_agreement() {
        let e = WeierstrassModel::from_ints([0, -1, 1, -10, -20]);
        let p = Prime::new(11u32).unwrap();
        assert!(matches!(
            minimize_witness(&e, &BigInt::from(2), &p),
            Err(Error::Precondition(_))
        ));
    }
}
