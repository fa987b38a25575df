use criterion::{black_box, criterion_group, criterion_main, Criterion};
use saw_core::analysis::{fit_series, theta_estimate, FitOptions, Target};
use saw_core::SeriesTable;

fn fit(c: &mut Criterion) {
    let t = SeriesTable::reference();
    let mut g = c.benchmark_group("fit_series");
    g.sample_size(10);
    for target in [Target::Z, Target::P] {
        let opts = FitOptions { starts: 8, ..Default::default() };
        g.bench_function(format!("{target} 18:36"), |b| b.iter(|| fit_series(&t, (18, 36), target, &opts).unwrap()));
    }
    g.finish();
}

fn estimators(c: &mut Criterion) {
    let t = SeriesTable::reference();
    c.bench_function("theta_estimate/all", |b| {
        b.iter(|| (3..=34).map(|n| theta_estimate(black_box(&t), n).unwrap()).sum::<f64>())
    });
}

criterion_group!(benches, fit, estimators);
criterion_main!(benches);
