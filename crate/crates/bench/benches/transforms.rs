use criterion::{criterion_group, criterion_main, Criterion};
use hypharm::geometry::{DiscPoint, PolarGrid};
use hypharm::specialfn::log_gamma;
use hypharm::transforms::{
    helgason_forward, radon_forward, FunctionOnX, HorocycleGrid, SpectralGrid,
};
use num_complex::Complex64;
use std::hint::black_box;

fn bench_log_gamma(c: &mut Criterion) {
    let zs: Vec<Complex64> = (0..64)
        .map(|k| Complex64::new(0.25, 0.5 * k as f64))
        .collect();
    c.bench_function("log_gamma/64 points", |b| {
        b.iter(|| {
            zs.iter()
                .map(|&z| log_gamma(black_box(z)).unwrap())
                .sum::<Complex64>()
        })
    });
}

fn bench_transforms(c: &mut Criterion) {
    let polar = PolarGrid::new(3.2, 96, 32).unwrap();
    let u = FunctionOnX::gaussian(&polar, 0.45, &DiscPoint::from_polar(0.5, 0.8));
    let spectral = SpectralGrid::new(14.0, 112, 32).unwrap();
    let horocycle = HorocycleGrid::new(8.0, 128, 32).unwrap();
    let mut g = c.benchmark_group("transforms");
    g.sample_size(10);
    g.bench_function("helgason_forward/96x32", |b| {
        b.iter(|| helgason_forward(black_box(&u), &spectral))
    });
    g.bench_function("radon_forward/96x32", |b| {
        b.iter(|| radon_forward(black_box(&u), &horocycle))
    });
    g.finish();
}

criterion_group!(benches, bench_log_gamma, bench_transforms);
criterion_main!(benches);
