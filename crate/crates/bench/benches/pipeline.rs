use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use bbr_core::error_rates::{build_contingency, rates, RateOption};
use bbr_core::latent_model::{sample_skew_normal, simulate_responses, LogPosterior, ModelConfig, Parameters};
use bbr_core::posterior::predictive_ratio_interval;
use bbr_core::rng::stream_rng;
use bbr_core::sampler::{fit, SamplerConfig};
use bbr_core::study_data::{GroundTruth, StudyDataset, StudyDesign};
use bbr_core::variance::decompose;

fn study(n_ex: usize, n_items: usize) -> StudyDataset {
    let mut rng = stream_rng(1, 0);
    let params = Parameters {
        theta: (0..n_ex).map(|_| sample_skew_normal(2.0, 3.0, &mut rng)).collect(),
        zeta: (0..n_items).map(|_| sample_skew_normal(1.5, 0.0, &mut rng)).collect(),
        sigma_zeta: 1.5,
        omega: 2.0,
        alpha: 3.0,
        examiner_ids: Vec::new(),
        item_ids: Vec::new(),
    };
    let design = StudyDesign::fully_crossed(n_ex, n_items, GroundTruth::SameSource);
    simulate_responses(&params, &design, 2).unwrap()
}

fn tabulation(c: &mut Criterion) {
    let data = study(170, 100);
    c.bench_function("contingency_and_rates", |b| {
        b.iter(|| {
            let t = build_contingency(black_box(&data));
            RateOption::ALL.map(|o| rates(&t, o))
        })
    });
    c.bench_function("decompose", |b| b.iter(|| decompose(black_box(&data)).unwrap()));
}

fn log_density(c: &mut Criterion) {
    let data = study(40, 60);
    let obs = data.observations();
    let post = LogPosterior::new(&obs, ModelConfig::default());
    let mut rng = stream_rng(3, 0);
    let u: Vec<f64> = (0..post.dim()).map(|_| sample_skew_normal(1.0, 0.0, &mut rng)).collect();
    c.bench_function("log_posterior_40x60", |b| b.iter(|| post.value(black_box(&u))));
    c.bench_function("gradient_40x60", |b| b.iter(|| post.gradient(black_box(&u))));
}

fn sampling(c: &mut Criterion) {
    let data = study(40, 60);
    let cfg = SamplerConfig { iterations: 1000, warmup: 500, ..SamplerConfig::default() };
    let mut g = c.benchmark_group("mcmc");
    g.sample_size(10);
    g.bench_function("fit_40x60_4x1000", |b| {
        b.iter(|| fit(black_box(&data), &ModelConfig::default(), &cfg).unwrap())
    });
    let draws = fit(&data, &ModelConfig::default(), &cfg).unwrap();
    g.bench_function("ppc_500_sims", |b| {
        b.iter(|| predictive_ratio_interval(black_box(&draws), &data, 500, 7).unwrap())
    });
    g.finish();
}

criterion_group!(benches, tabulation, log_density, sampling);
criterion_main!(benches);
