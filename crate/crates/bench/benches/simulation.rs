use ambc_core::sim::run_ber;
use ambc_core::{CsiMode, Probability, ReceiverKind, Scenario};
use criterion::{criterion_group, criterion_main, Criterion};

fn ber(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_ber_1e4");
    g.sample_size(10);
    let base = Scenario { trials: 10_000, ..Scenario::default() };
    let cases = [
        ("optimum_perfect", base.clone()),
        ("optimum_svd", Scenario { csi: CsiMode::Svd, ..base.clone() }),
        (
            "simplified_perfect",
            Scenario { receiver: ReceiverKind::Simplified { pf: Probability::new(1e-2).unwrap() }, ..base.clone() },
        ),
    ];
    for (name, sc) in cases {
        g.bench_function(name, |b| b.iter(|| run_ber(&sc).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, ber);
criterion_main!(benches);
