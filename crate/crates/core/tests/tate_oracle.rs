//! Tate's algorithm against values frozen from an independent implementation (PARI/GP
//! `elllocalred` and `ellap`), see `data/pari_localred.txt`.

use twistforge::padic::valuation;
use twistforge::tate::{local_data, tate_local_data};
use twistforge::weierstrass::apply_isomorphism;
use twistforge::{KodairaType, Prime, ReductionKind, Valuation, WeierstrassModel};

const FIXTURE: &str = include_str!("data/pari_localred.txt");

struct Golden {
    p: Prime,
    e: WeierstrassModel,
    kodaira: KodairaType,
    f: u32,
    c: u32,
    reduction: Option<ReductionKind>,
}

fn goldens() -> Vec<Golden> {
    FIXTURE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|line| {
            let (lhs, rhs) = line.split_once('|').unwrap();
            let nums: Vec<i64> = lhs.split_whitespace().map(|x| x.parse().unwrap()).collect();
            let fields: Vec<&str> = rhs.split_whitespace().collect();
            Golden {
                p: Prime::new(nums[0]).unwrap(),
                e: WeierstrassModel::from_ints([nums[1], nums[2], nums[3], nums[4], nums[5]]),
                kodaira: fields[0].parse().unwrap(),
                f: fields[1].parse().unwrap(),
                c: fields[2].parse().unwrap(),
                reduction: match fields[3] {
                    "split" => Some(ReductionKind::SplitMultiplicative),
                    "nonsplit" => Some(ReductionKind::NonsplitMultiplicative),
                    _ => None,
                },
            }
        })
        .collect()
}

#[test]
fn matches_frozen_values() {
    let rows = goldens();
    assert!(rows.len() > 7000);
    for g in &rows {
        let ld = local_data(&g.e, &g.p).unwrap();
        assert_eq!(
            (ld.kodaira, ld.f, ld.c),
            (g.kodaira, g.f, g.c),
            "curve {} at {}",
            g.e,
            g.p
        );
        assert_eq!(ld.f + ld.m, ld.delta + 1);
        if let Some(r) = g.reduction {
            assert_eq!(ld.reduction, r, "curve {} at {}", g.e, g.p);
        }
    }
}

#[test]
fn minimal_model_and_map() {
    for g in goldens().iter().step_by(7) {
        let out = tate_local_data(&g.e, &g.p).unwrap();
        assert_eq!(apply_isomorphism(&g.e, &out.phi), out.minimal_model);
        assert!(out.minimal_model.is_integral_at(&g.p));
        assert_eq!(
            valuation(&out.minimal_model.discriminant(), &g.p),
            Valuation::Finite(out.local.delta as i64)
        );
        let again = tate_local_data(&out.minimal_model, &g.p).unwrap();
        assert_eq!(again.local, out.local);
    }
}
