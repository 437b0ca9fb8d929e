use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use topsens::{dyadic_green, im_dyadic_green, spherical_bessel_j, Point, SphereQuadrature, WaveParameters};

fn bessel(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.03).collect();
    c.bench_function("spherical_bessel_j0..2 x1000", |b| {
        b.iter(|| xs.iter().map(|x| (0..3).map(|n| spherical_bessel_j(n, black_box(*x))).sum::<f64>()).sum::<f64>())
    });
}

fn green(c: &mut Criterion) {
    let wp = WaveParameters::from_wavenumber(1.0, 1.0, 8.0 * PI).unwrap();
    let x = Point::new(0.1, 0.2, -0.3);
    let y = Point::new(-0.4, 0.05, 0.2);
    c.bench_function("dyadic_green", |b| b.iter(|| dyadic_green(black_box(&x), black_box(&y), &wp).unwrap()));
    c.bench_function("im_dyadic_green", |b| b.iter(|| im_dyadic_green(black_box(&x), black_box(&y), &wp)));
}

fn quadrature(c: &mut Criterion) {
    c.bench_function("sphere quadrature 32x64", |b| b.iter(|| SphereQuadrature::product(black_box(32), 64).unwrap()));
}

criterion_group!(benches, bessel, green, quadrature);
criterion_main!(benches);
