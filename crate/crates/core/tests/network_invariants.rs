mod common;

use colsnn::trainer::evaluate;
use colsnn::{Network, NeuronId, ResourceFunctionConfig, ResourceKind};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_images, warmed_network};

#[test]
fn predictions_ignore_batch_order() {
    let net = warmed_network(3);
    let images = random_images(200, 11);
    let expected: Vec<usize> = images.iter().map(|i| net.infer(i.pixels())).collect();

    let mut order: Vec<usize> = (0..images.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
    let shuffled: Vec<_> = order.iter().map(|&k| images[k].clone()).collect();
    let preds = colsnn::par::map(&shuffled, |i| net.infer(i.pixels()));
    for (p, &k) in preds.iter().zip(&order) {
        assert_eq!(*p, expected[k], "image {k}");
    }
}

#[test]
fn inference_leaves_the_network_untouched() {
    let net = warmed_network(4);
    let before = net.to_checkpoint_bytes();
    let images = random_images(50, 12);
    let a = evaluate(&net, &images);
    let b = evaluate(&net, &images);
    assert_eq!(a, b);
    assert_eq!(net.to_checkpoint_bytes(), before);
}

fn scaled(net: &Network, column: usize, factor: f64) -> Network {
    // with a linear function and a wide clamp, scaling resources scales weights
    let mut out = net.clone();
    let n_inputs = net.config().n_inputs;
    for micro in 0..net.config().n_micro {
        let id = NeuronId { column, micro };
        for i in 0..n_inputs {
            let w = net.synapses(id).weights()[i];
            if w > 0.0 {
                out.set_resource(id, i, w * factor);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn boosting_positive_weights_never_lowers_column_count(
        seed in 0u64..500,
        column in 0usize..10,
        factor in 1.0f64..4.0,
    ) {
        let mut net = warmed_network(seed);
        // identity weight map over the range the scaled weights can reach
        let mut cfg = net.config().clone();
        cfg.resource_fn = ResourceFunctionConfig::new(ResourceKind::Linear, -1.0, 1.0).unwrap();
        net = Network::from_resources(cfg, net.resources_flat()).unwrap();

        let boosted = scaled(&net, column, factor);
        for image in random_images(5, seed + 1) {
            let base = net.column_spike_counts(image.pixels())[column];
            let more = boosted.column_spike_counts(image.pixels())[column];
            prop_assert!(more >= base, "column {} count {} -> {}", column, base, more);
        }
    }
}
