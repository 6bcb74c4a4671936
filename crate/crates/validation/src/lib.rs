//! Data location and fixtures for the acceptance target in
//! `tests/acceptance.rs`.

use std::path::PathBuf;

use colsnn::mnist::{LabeledImage, PIXELS};
use colsnn::trainer::{train_epoch, training_rng};
use colsnn::{Network, NetworkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// MNIST directory: `$COLSNN_DATA_DIR`, else `<workspace>/data/mnist`, else
/// `/root/data/mnist`.
pub fn mnist_dir() -> Option<PathBuf> {
    std::env::var_os(colsnn::config::DATA_DIR_ENV)
        .map(PathBuf::from)
        .into_iter()
        .chain([
            workspace_root().join("data/mnist"),
            PathBuf::from("/root/data/mnist"),
        ])
        .find(|d| {
            d.join("train-images-idx3-ubyte").exists()
                || d.join("train-images-idx3-ubyte.gz").exists()
        })
}

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

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

/// Default network after a short warm-up on random images.
pub fn warmed_network(seed: u64) -> Network {
    let mut net = Network::new(NetworkConfig {
        seed,
        ..NetworkConfig::default()
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let images: Vec<LabeledImage> = (0..30).map(|_| random_image(&mut rng, 0.2)).collect();
    train_epoch(&mut net, &images, &mut training_rng(seed)).unwrap();
    net
}
