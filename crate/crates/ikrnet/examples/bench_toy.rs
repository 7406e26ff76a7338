//! Rough throughput probe for the toy configuration.

use std::time::Instant;

use ikrnet::model::{IKrNet, IKrNetConfig};
use ikrnet::nn::{bce_loss, clip_grad_norm, AdamW, AdamWConfig, Tensor};

fn main() {
    let model = IKrNet::<f32>::build(&IKrNetConfig::toy(), 0).unwrap();
    println!("toy params: {}", model.count_parameters());
    let params = model.parameters();
    let mut opt = AdamW::new(AdamWConfig::default(), &params);

    let b = 16;
    let l = 5000;
    let data: Vec<f32> = (0..b * l).map(|i| ((i % 97) as f32 * 0.07).sin()).collect();
    let x = Tensor::from_vec(vec![b, 1, l], data, false);
    let y = Tensor::from_vec(vec![b], (0..b).map(|i| (i % 2) as f32).collect(), false);

    let iters = 10;
    let mut fwd = 0.0;
    let mut bwd = 0.0;
    let mut step = 0.0;
    for _ in 0..iters {
        model.zero_grad();
        let t0 = Instant::now();
        let scores = model.forward(&x, true).unwrap();
        let loss = bce_loss(&scores, &y).unwrap();
        fwd += t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        loss.backward();
        bwd += t1.elapsed().as_secs_f64();
        let t2 = Instant::now();
        clip_grad_norm(&params, 5.0);
        opt.step(&params);
        step += t2.elapsed().as_secs_f64();
    }
    let dt = fwd + bwd + step;
    println!(
        "{iters} steps of batch {b}: {:.2} s total ({:.2} fwd / {:.2} bwd / {:.2} step), {:.1} ms/record",
        dt,
        fwd,
        bwd,
        step,
        dt * 1000.0 / (iters * b) as f64
    );

    let t3 = Instant::now();
    for _ in 0..iters {
        let _ = ikrnet::nn::no_grad(|| model.forward(&x, false).unwrap());
    }
    println!("inference: {:.1} ms/record", t3.elapsed().as_secs_f64() * 1000.0 / (iters * b) as f64);
}
