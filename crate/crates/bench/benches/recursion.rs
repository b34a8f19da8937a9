use criterion::{black_box, criterion_group, criterion_main, Criterion};

use bosegas::{build_partition_table, occupation_spectrum, SingleParticleSpectrum, ThermalState, TrapGeometry};

fn bench_partition_table(c: &mut Criterion) {
    let g = TrapGeometry::isotropic(3).unwrap();
    for n in [400usize, 1600] {
        let state = ThermalState::new(n, 8.0).unwrap();
        c.bench_function(&format!("partition_table_3d_n{n}"), |b| {
            b.iter(|| build_partition_table(black_box(&g), black_box(&state)).unwrap())
        });
    }
}

fn bench_occupation_spectrum(c: &mut Criterion) {
    let g = TrapGeometry::axially_symmetric(1.0, 0.3).unwrap();
    let state = ThermalState::new(1000, 6.0).unwrap();
    let cutoff = g.default_cutoff(6.0, 1000.0, 1e-12).unwrap();
    c.bench_function("occupation_spectrum_cigar_n1000", |b| {
        b.iter(|| occupation_spectrum(black_box(&g), black_box(&state), &cutoff).unwrap())
    });
}

criterion_group!(benches, bench_partition_table, bench_occupation_spectrum);
criterion_main!(benches);
