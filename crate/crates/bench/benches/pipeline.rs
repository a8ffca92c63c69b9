use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use adstego::adversary::{adversarial_costs, ite_syn_attack, Class};
use adstego::coder::{sample_changes, solve_lambda, ternary_embed_stc};
use adstego::costmodel::{hill_cost, suniward_cost};
use adstego::imageio::generate_cover;
use adstego::rng;
use adstego::syncdir::{adjust_costs, embed_synchronized};
use adstego::{AdvConfig, BitMessage, ClassifierModel, CoderMode, EmbedConfig, Neighborhood, StcParams, WET_VALUE};

const SIDE: usize = 64;

fn costs(c: &mut Criterion) {
    let cover = generate_cover(7, SIDE, SIDE).unwrap();
    c.bench_function("hill_cost 64x64", |b| b.iter(|| hill_cost(black_box(&cover))));
    c.bench_function("suniward_cost 64x64", |b| b.iter(|| suniward_cost(black_box(&cover))));
}

fn coding(c: &mut Criterion) {
    let cover = generate_cover(7, SIDE, SIDE).unwrap();
    let xi = hill_cost(&cover);
    let target = 0.4 * xi.len() as f64;
    c.bench_function("solve_lambda 0.4", |b| b.iter(|| solve_lambda(black_box(&xi), target).unwrap()));

    let probs = solve_lambda(&xi, target).unwrap();
    c.bench_function("sample_changes", |b| {
        b.iter_batched(
            || rng::stream(1, &[]),
            |mut r| sample_changes(&probs, &xi, &mut r),
            BatchSize::SmallInput,
        )
    });

    let msg = BitMessage::random(target as usize, 3);
    let params = StcParams::production(1, 2).unwrap();
    c.bench_function("ternary STC embed 4096 px", |b| {
        b.iter(|| ternary_embed_stc(cover.pixels(), &msg, &xi.rho_plus, &xi.rho_minus, &params, WET_VALUE).unwrap())
    });
}

fn synchronization(c: &mut Criterion) {
    let cover = generate_cover(7, SIDE, SIDE).unwrap();
    let xi = hill_cost(&cover);
    let mut group = c.benchmark_group("embed_synchronized");
    group.sample_size(20);
    for mode in [CoderMode::Simulator, CoderMode::Stc] {
        let cfg = EmbedConfig::new(0.4, 5, mode);
        let msg = BitMessage::random(cfg.message_len(SIDE, SIDE), 5);
        group.bench_function(mode.as_str(), |b| b.iter(|| embed_synchronized(&cover, &msg, &xi, &cfg).unwrap()));
    }
    group.finish();

    let cfg = EmbedConfig::new(0.4, 5, CoderMode::Simulator);
    let msg = BitMessage::random(cfg.message_len(SIDE, SIDE), 5);
    let sync = embed_synchronized(&cover, &msg, &xi, &cfg).unwrap();
    c.bench_function("adjust_costs", |b| {
        b.iter(|| adjust_costs(&xi, &sync.changes, 10.0, Neighborhood::FourConnected).unwrap())
    });
}

fn classifier(c: &mut Criterion) {
    let cover = generate_cover(7, SIDE, SIDE).unwrap();
    let model = ClassifierModel::init(SIDE, SIDE, 11).unwrap();
    c.bench_function("classifier phi", |b| b.iter(|| model.phi(black_box(&cover)).unwrap()));
    c.bench_function("classifier input_gradient", |b| {
        b.iter(|| model.input_gradient(black_box(&cover), Class::Cover).unwrap())
    });

    let xi = hill_cost(&cover);
    let grad = model.input_gradient(&cover, Class::Cover).unwrap();
    c.bench_function("adversarial_costs", |b| b.iter(|| adversarial_costs(&xi, &grad, 10, 0.1).unwrap()));
}

fn attack(c: &mut Criterion) {
    let cover = generate_cover(7, SIDE, SIDE).unwrap();
    let xi = hill_cost(&cover);
    let cfg = EmbedConfig::new(0.4, 5, CoderMode::Stc);
    let msg = BitMessage::random(cfg.message_len(SIDE, SIDE), 5);
    let sync = embed_synchronized(&cover, &msg, &xi, &cfg).unwrap();
    // a model that always answers stego forces the full search
    let mut model = ClassifierModel::zeros(SIDE, SIDE).unwrap();
    model.output_bias_mut()[1] = 1.0;
    let adv = AdvConfig::new(3);
    let mut group = c.benchmark_group("ite_syn_attack");
    group.sample_size(10);
    group.bench_function("worst case, STC", |b| {
        b.iter(|| ite_syn_attack(&model, &cover, &msg, &sync.stego, &sync.final_costs, &adv, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, costs, coding, synchronization, classifier, attack);
criterion_main!(benches);
