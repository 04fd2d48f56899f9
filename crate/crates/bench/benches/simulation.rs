use coexist_bench::reference;
use coexist_core::{simulate, RsmaSplit, Scheme, SimOptions, SystemConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn minislots(c: &mut Criterion) {
    let (cfg, op) = reference();
    let cfg = SystemConfig { num_slots: 10_000, ..cfg };
    let op = op.with_snr_gap(10.0);
    let split = RsmaSplit::new(0.4, 0.01).unwrap();
    let mut g = c.benchmark_group("simulate");
    g.throughput(Throughput::Elements(cfg.num_slots * cfg.num_minislots as u64));
    for scheme in [Scheme::Punc, Scheme::Noma, Scheme::Rsma] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{scheme:?}")), &scheme, |b, &s| {
            b.iter(|| simulate(s, &op, &cfg, Some(&split), 0, SimOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, minislots);
criterion_main!(benches);
