use criterion::{black_box, criterion_group, criterion_main, Criterion};
use twistforge::strongly_minimal::to_strongly_minimal;
use twistforge::tate::{local_data, tate_local_data};
use twistforge::twist::twist_data;
use twistforge::weierstrass::{canonicalize_twist, twist_model};
use twistforge::{Prime, WeierstrassModel};

const CURVES: [(u64, [i64; 5], i64); 4] = [
    (11, [0, -1, 1, -10, -20], 2),
    (3, [0, 0, 0, -27, 55], 3),
    (2, [2, 0, -4, -4, -4], -1),
    (2, [1, -1, 1, -3, 3], 2),
];

fn bench(c: &mut Criterion) {
    for (p, a, d) in CURVES {
        let prime = Prime::new(p).unwrap();
        let e = WeierstrassModel::from_ints(a);
        let tate = tate_local_data(&e, &prime).unwrap();
        let (s, _) = to_strongly_minimal(&tate.minimal_model, &prime).unwrap();
        let class = canonicalize_twist(&d.into(), &prime).unwrap();
        let label = format!("p={p} {a:?} d={d}");

        c.bench_function(&format!("tate/{label}"), |b| {
            b.iter(|| local_data(black_box(&e), &prime).unwrap())
        });
        c.bench_function(&format!("strongly_minimal/{label}"), |b| {
            b.iter(|| to_strongly_minimal(black_box(&tate.minimal_model), &prime).unwrap())
        });
        c.bench_function(&format!("twist_tables/{label}"), |b| {
            b.iter(|| twist_data(black_box(&s), &class).unwrap())
        });
        c.bench_function(&format!("twist_oracle/{label}"), |b| {
            b.iter(|| local_data(&twist_model(black_box(&e), &class), &prime).unwrap())
        });
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
