use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use colsnn::encoder::encode;
use colsnn::mnist::{LabeledImage, PIXELS};
use colsnn::trainer::{evaluate, evaluate_sequential, train_epoch, training_rng};
use colsnn::{Network, NetworkConfig, StepOutput};

// Sparse blobs with roughly MNIST's ink density (~19% nonzero).
fn synthetic(n: usize, seed: u64) -> Vec<LabeledImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let pixels = (0..PIXELS)
                .map(|_| {
                    if rng.random_bool(0.19) {
                        rng.random_range(1..=255)
                    } else {
                        0
                    }
                })
                .collect();
            LabeledImage::new(pixels, (i % 10) as u8).unwrap()
        })
        .collect()
}

fn trained_network(images: &[LabeledImage]) -> Network {
    let mut net = Network::new(NetworkConfig::default()).unwrap();
    train_epoch(&mut net, images, &mut training_rng(0)).unwrap();
    net
}

fn bench_evaluate(c: &mut Criterion) {
    let images = synthetic(512, 1);
    let net = trained_network(&images);
    let mut group = c.benchmark_group("evaluate");
    group.throughput(Throughput::Elements(images.len() as u64));
    group.bench_with_input(
        BenchmarkId::new("parallel", images.len()),
        &images,
        |b, imgs| b.iter(|| evaluate(&net, imgs)),
    );
    group.bench_with_input(
        BenchmarkId::new("sequential", images.len()),
        &images,
        |b, imgs| b.iter(|| evaluate_sequential(&net, imgs)),
    );
    group.finish();
}

fn bench_train(c: &mut Criterion) {
    let images = synthetic(64, 2);
    let mut group = c.benchmark_group("train_epoch");
    group.throughput(Throughput::Elements(images.len() as u64));
    group.sample_size(20);
    group.bench_function("64_images", |b| {
        b.iter_batched(
            || Network::new(NetworkConfig::default()).unwrap(),
            |mut net| train_epoch(&mut net, &images, &mut training_rng(0)).unwrap(),
            criterion::BatchSize::LargeInput,
        )
    });
    group.finish();
}

// One full cycle from rest: 10 presentation steps, 10 leak-only steps.
fn bench_cycle(c: &mut Criterion) {
    let images = synthetic(1, 3);
    let schedule = encode(images[0].pixels());
    let mut net = trained_network(&synthetic(32, 4));
    let mut out = StepOutput::new(net.config().n_columns, net.config().n_micro);
    c.bench_function("forward_cycle", |b| {
        b.iter(|| {
            net.reset_potentials();
            for active in schedule.steps() {
                net.forward_step_into(active, &mut out);
            }
            for _ in 0..10 {
                net.forward_step_into(&[], &mut out);
            }
        })
    });
}

criterion_group!(benches, bench_evaluate, bench_train, bench_cycle);
criterion_main!(benches);
