#![allow(dead_code)]

use colsnn::mnist::{LabeledImage, PIXELS};
use colsnn::trainer::{train_epoch, training_rng};
use colsnn::{Network, NetworkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random sparse image: each pixel is inked with probability `density`.
pub fn random_image<R: Rng>(rng: &mut R, density: f64) -> LabeledImage {
    let pixels = (0..PIXELS)
        .map(|_| {
            if rng.random_bool(density) {
                rng.random_range(1..=255)
            } else {
                0
            }
        })
        .collect();
    LabeledImage::new(pixels, rng.random_range(0..10)).unwrap()
}

pub fn random_images(n: usize, seed: u64) -> Vec<LabeledImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_image(&mut rng, 0.2)).collect()
}

/// Default network after a short warm-up on random images, so that
/// neurons in several columns are able to fire.
pub fn warmed_network(seed: u64) -> Network {
    let mut net = Network::new(NetworkConfig {
        seed,
        ..NetworkConfig::default()
    })
    .unwrap();
    train_epoch(
        &mut net,
        &random_images(30, seed ^ 0xabcd),
        &mut training_rng(seed),
    )
    .unwrap();
    net
}
