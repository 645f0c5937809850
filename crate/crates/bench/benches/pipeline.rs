use std::f64::consts::FRAC_PI_2;

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use coprime_mmse::coarray::{music_spectrum, nominal_coarray_matrix, AngleGrid};
use coprime_mmse::combining::{design_mmse_combiner, MmseDesignInputs, PowerPrior};
use coprime_mmse::distributions::{CharacteristicIntegralTable, DoAPriorDistribution};
use coprime_mmse::experiments::{run_cdf_experiment, ExperimentConfig};
use coprime_mmse::geometry::{coarray_lag_sets, make_coprime_array, selection_combiner, ArrayGeometry, Picker};
use coprime_mmse::SourceScene;

fn mmse_design(c: &mut Criterion) {
    let g = make_coprime_array(2, 5).unwrap();
    let sel = selection_combiner(&coarray_lag_sets(&g), Picker::Smallest);
    let prior = DoAPriorDistribution::uniform(-FRAC_PI_2, FRAC_PI_2).unwrap();
    let table = CharacteristicIntegralTable::new(prior);
    c.bench_function("mmse_design_2_5_k7", |b| {
        b.iter(|| {
            design_mmse_combiner(&MmseDesignInputs {
                geometry: &g,
                sources: 7,
                prior: &table,
                power: PowerPrior::KnownPowers {
                    d: vec![10.0; 7],
                    sigma2: 1.0,
                },
                snapshots: 10,
                selection: &sel,
            })
            .unwrap()
        })
    });
}

fn music(c: &mut Criterion) {
    let scene = SourceScene::equal_power(vec![-1.0, -0.5, 0.0, 0.3, 0.7, 1.1, 1.3], 10.0, 1.0).unwrap();
    let z = nominal_coarray_matrix(&scene, 12);
    let grid = AngleGrid::over_support((-FRAC_PI_2, FRAC_PI_2));
    c.bench_function("music_l12_k7_2001", |b| b.iter(|| music_spectrum(black_box(&z), 7, &grid).unwrap()));
}

fn cdf_run(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        geometry: ArrayGeometry::coprime(2, 5).unwrap(),
        sources: 7,
        trials: 100,
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("experiments");
    group.sample_size(10);
    group.bench_function("cdf_2_5_k7_100_trials", |b| b.iter(|| run_cdf_experiment(&cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, mmse_design, music, cdf_run);
criterion_main!(benches);
