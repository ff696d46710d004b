mod common;

use std::time::Instant;

use lightwaves::distrib::{train_in_process, TrainConfig};
use lightwaves::inference::Predictor;
use lightwaves::kernels::KernelBank;
use lightwaves::scattering::{transform_full, Variant};

fn best_of<F: FnMut()>(reps: usize, mut f: F) -> f64 {
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn selected_inference_beats_the_full_transform() {
    let train = common::sinusoids(60, 6, 128, &[0, 4], 12);
    let model = train_in_process(&TrainConfig::default(), &train).unwrap().model;
    assert!(model.descriptors.len() <= 500);
    let predictor = Predictor::new(&model, 6).unwrap();
    let one = train.slice(&[0], 0..6).unwrap();
    let bank = KernelBank::generate();

    let selected = best_of(5, || {
        predictor.predict_sample(one.sample(0), false).unwrap();
    });
    let full = best_of(5, || {
        transform_full(&one, &bank, Variant::L1L2).unwrap();
    });
    assert!(selected < full, "selected {selected:.6}s vs full {full:.6}s");
}
