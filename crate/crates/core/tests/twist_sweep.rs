use std::collections::BTreeMap;

use num_bigint::BigInt;
use twistforge::strongly_minimal::to_strongly_minimal;
use twistforge::tate::{local_data, tate_local_data};
use twistforge::twist::{twist_data, twist_data_q2_fast, twist_data_q2_model};
use twistforge::weierstrass::{canonicalize_twist, twist_model};
use twistforge::{Prime, WeierstrassModel};

fn box_curves(r: i64) -> impl Iterator<Item = [i64; 5]> {
    let side = 2 * r + 1;
    (0..side.pow(5)).map(move |mut k| {
        let mut a = [0i64; 5];
        for slot in a.iter_mut() {
            *slot = k % side - r;
            k /= side;
        }
        a
    })
}

/// Failure counts keyed by a short description, with one witness each.
fn sweep(p: u32, ds: &[i64], radius: i64) -> BTreeMap<String, (usize, String)> {
    let prime = Prime::new(p).unwrap();
    let mut bad: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut note = |key: String, witness: String| {
        let entry = bad.entry(key).or_insert((0, witness));
        entry.0 += 1;
    };
    for a in box_curves(radius) {
        let e = WeierstrassModel::from_ints(a);
        let Ok(tate) = tate_local_data(&e, &prime) else {
            continue;
        };
        let (s, _) = to_strongly_minimal(&tate.minimal_model, &prime).unwrap();
        for &d in ds {
            let d = canonicalize_twist(&BigInt::from(d), &prime).unwrap();
            let oracle = local_data(&twist_model(&e, &d), &prime).unwrap();
            let witness = format!("{a:?} d={}", d.d);
            let vd = d.valuation(&prime);
            match twist_data(&s, &d) {
                Ok(t) if t.twisted == oracle && t.base == tate.local => {}
                Ok(t) => note(
                    format!(
                        "wrong v(d)={vd} {} -> {} (oracle {})",
                        s.kodaira, t.twisted, oracle
                    ),
                    witness.clone(),
                ),
                Err(err) => note(
                    format!("error v(d)={vd} {}: {err}", s.kodaira),
                    witness.clone(),
                ),
            }
            if p == 2 && vd == 0 {
                let fast = twist_data_q2_fast(&s, &d).map(|t| t.twisted);
                let model = twist_data_q2_model(&s, &d).map(|t| t.twisted);
                if fast != model {
                    note(
                        format!("paths differ {}: {:?} vs {:?}", s.kodaira, fast, model),
                        witness,
                    );
                }
            }
        }
    }
    bad
}

fn run(radius: i64) {
    let mut report = Vec::new();
    let cases = [
        (2u32, vec![1, 3, 5, 7, 2, 6, 10, 14]),
        (3, vec![1, 2, 3, 6]),
        (5, vec![1, 2, 5, 10]),
        (7, vec![1, 3, 7, 21]),
        (11, vec![1, 2, 11, 22]),
    ];
    for (p, ds) in cases {
        for (k, (count, w)) in sweep(p, &ds, radius) {
            report.push(format!("p={p} x{count} {k}  e.g. {w}"));
        }
    }
    assert!(report.is_empty(), "{}", report.join("\n"));
}

#[test]
fn twist_sweep_small_box() {
    run(2);
}

#[test]
#[ignore = "slow; run with --release --ignored"]
fn twist_sweep_wide_box() {
    run(4);
}
