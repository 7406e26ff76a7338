//! Central finite-difference harness (h = 1e-5, f64) and the full op list.
//! Error measure: |analytic - numeric| / max(1, |analytic|, |numeric|).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use ikrnet::model::IKrNet;
use ikrnet::nn::{
    adaptive_avg_pool1d, batchnorm1d, bce_loss, bilstm, concat_axis1, conv1d, global_avg_pool,
    linear, lstm_cell, matmul, no_grad, scale_channels, squeeze_excite, BiLstmLayer, LstmWeights,
    SqueezeExcite, Tensor,
};

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const SEEDS: u64 = 20;

/// How input elements are drawn.
#[derive(Clone, Copy)]
pub enum Draw {
    /// Uniform in [-1, 1].
    Signed,
    /// Uniform in [-1, 1] excluding a band around 0 (for kinked ops).
    AwayFromZero,
    /// Uniform in [0.05, 0.95] (probability scores).
    UnitInterval,
}

fn draw(rng: &mut ChaCha12Rng, kind: Draw) -> f64 {
    match kind {
        Draw::Signed => rng.random_range(-1.0..1.0),
        Draw::AwayFromZero => {
            let v: f64 = rng.random_range(-1.0..1.0);
            let mag = v.abs().max(5e-3);
            mag.copysign(if v == 0.0 { 1.0 } else { v })
        }
        Draw::UnitInterval => rng.random_range(0.05..0.95),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Checks one op: builds tensors from `shapes`, runs `f`, projects the
/// output to a scalar with fixed random weights, and compares the backward
/// gradients of every input element against central differences.
/// Returns the worst error observed.
pub fn check_op<F>(name: &str, seed: u64, shapes: &[(Vec<usize>, Draw)], f: F) -> f64
where
    F: Fn(&[Tensor<f64>]) -> Tensor<f64>,
{
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xC0FFEE);
    let datas: Vec<Vec<f64>> = shapes
        .iter()
        .map(|(shape, kind)| {
            let n: usize = shape.iter().product();
            (0..n).map(|_| draw(&mut rng, *kind)).collect()
        })
        .collect();

    let inputs: Vec<Tensor<f64>> = shapes
        .iter()
        .zip(&datas)
        .map(|((shape, _), data)| Tensor::from_vec(shape.clone(), data.clone(), true))
        .collect();
    let out = f(&inputs);
    let proj: Vec<f64> = (0..out.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let proj_t = Tensor::from_vec(vec![out.len()], proj.clone(), false);
    let flat = out.reshape(vec![out.len()]).unwrap();
    let loss = flat.mul(&proj_t).unwrap().mean_all().scale(out.len() as f64);
    loss.backward();
    let analytic: Vec<Vec<f64>> = inputs
        .iter()
        .map(|t| t.grad().unwrap_or_else(|| vec![0.0; t.len()]))
        .collect();

    let eval = |datas: &[Vec<f64>]| -> f64 {
        no_grad(|| {
            let tensors: Vec<Tensor<f64>> = shapes
                .iter()
                .zip(datas)
                .map(|((shape, _), data)| Tensor::from_vec(shape.clone(), data.clone(), false))
                .collect();
            dot(&f(&tensors).data(), &proj)
        })
    };
    let mut worst: f64 = 0.0;
    for ti in 0..datas.len() {
        for ei in 0..datas[ti].len() {
            let mut plus = datas.clone();
            plus[ti][ei] += H;
            let mut minus = datas.clone();
            minus[ti][ei] -= H;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * H);
            let a = analytic[ti][ei];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            worst = worst.max(err);
            assert!(
                err < TOL,
                "{name} seed {seed}: input {ti} element {ei}: analytic {a}, numeric {numeric}, err {err}"
            );
        }
    }
    worst
}

pub fn all_seeds(
    name: &str,
    shapes: &[(Vec<usize>, Draw)],
    f: impl Fn(&[Tensor<f64>]) -> Tensor<f64>,
) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        worst = worst.max(check_op(name, seed, shapes, &f));
    }
    worst
}

pub fn elementwise_suite() -> f64 {
    let pair = [(vec![2, 5], Draw::Signed), (vec![2, 5], Draw::Signed)];
    let mut worst = all_seeds("add", &pair, |t| t[0].add(&t[1]).unwrap());
    worst = worst.max(all_seeds("sub", &pair, |t| t[0].sub(&t[1]).unwrap()));
    worst = worst.max(all_seeds("mul", &pair, |t| t[0].mul(&t[1]).unwrap()));
    worst = worst.max(all_seeds("scale", &pair[..1], |t| t[0].scale(-1.7)));
    worst = worst.max(all_seeds("relu", &[(vec![3, 7], Draw::AwayFromZero)], |t| t[0].relu()));
    worst = worst.max(all_seeds("sigmoid", &[(vec![3, 7], Draw::Signed)], |t| t[0].sigmoid()));
    worst = worst.max(all_seeds("tanh", &[(vec![3, 7], Draw::Signed)], |t| t[0].tanh_act()));
    worst
}

pub fn structural_suite() -> f64 {
    let mut worst = all_seeds("reshape", &[(vec![2, 6], Draw::Signed)], |t| {
        t[0].reshape(vec![3, 4]).unwrap()
    });
    worst = worst.max(all_seeds("mean", &[(vec![4, 3], Draw::Signed)], |t| t[0].mean_all()));
    worst = worst.max(all_seeds("narrow", &[(vec![2, 6, 2], Draw::Signed)], |t| {
        t[0].narrow_axis1(1, 3).unwrap()
    }));
    worst = worst.max(all_seeds("transpose_last2", &[(vec![2, 3, 4], Draw::Signed)], |t| {
        t[0].transpose_last2().unwrap()
    }));
    worst = worst.max(all_seeds(
        "concat",
        &[
            (vec![2, 3, 2], Draw::Signed),
            (vec![2, 1, 2], Draw::Signed),
            (vec![2, 2, 2], Draw::Signed),
        ],
        |t| concat_axis1(t).unwrap(),
    ));
    worst
}

pub fn dense_suite() -> f64 {
    let mut worst = all_seeds(
        "matmul",
        &[(vec![3, 4], Draw::Signed), (vec![4, 2], Draw::Signed)],
        |t| matmul(&t[0], &t[1]).unwrap(),
    );
    worst = worst.max(all_seeds(
        "linear",
        &[
            (vec![3, 5], Draw::Signed),
            (vec![2, 5], Draw::Signed),
            (vec![2], Draw::Signed),
        ],
        |t| linear(&t[0], &t[1], Some(&t[2])).unwrap(),
    ));
    worst
}

pub fn conv_suite() -> f64 {
    let mut worst = all_seeds(
        "conv1d stride1",
        &[
            (vec![2, 3, 10], Draw::Signed),
            (vec![4, 3, 3], Draw::Signed),
            (vec![4], Draw::Signed),
        ],
        |t| conv1d(&t[0], &t[1], Some(&t[2]), 1, 0, 1).unwrap(),
    );
    worst = worst.max(all_seeds(
        "conv1d stride3 pad2 k7",
        &[
            (vec![2, 3, 16], Draw::Signed),
            (vec![4, 3, 7], Draw::Signed),
            (vec![4], Draw::Signed),
        ],
        |t| conv1d(&t[0], &t[1], Some(&t[2]), 3, 2, 1).unwrap(),
    ));
    worst = worst.max(all_seeds(
        "conv1d groups2",
        &[
            (vec![2, 4, 9], Draw::Signed),
            (vec![6, 2, 3], Draw::Signed),
            (vec![6], Draw::Signed),
        ],
        |t| conv1d(&t[0], &t[1], Some(&t[2]), 2, 1, 2).unwrap(),
    ));
    worst = worst.max(all_seeds(
        "conv1d depthwise",
        &[(vec![2, 4, 8], Draw::Signed), (vec![4, 1, 3], Draw::Signed)],
        |t| conv1d(&t[0], &t[1], None, 1, 1, 4).unwrap(),
    ));
    worst
}

pub fn pooling_suite() -> f64 {
    let mut worst = all_seeds("adaptive_avg_pool1d 7to3", &[(vec![2, 2, 7], Draw::Signed)], |t| {
        adaptive_avg_pool1d(&t[0], 3).unwrap()
    });
    worst = worst.max(all_seeds(
        "adaptive_avg_pool1d 6to6",
        &[(vec![1, 3, 6], Draw::Signed)],
        |t| adaptive_avg_pool1d(&t[0], 6).unwrap(),
    ));
    worst = worst.max(all_seeds("global_avg_pool", &[(vec![2, 3, 5], Draw::Signed)], |t| {
        global_avg_pool(&t[0]).unwrap()
    }));
    worst = worst.max(all_seeds(
        "scale_channels",
        &[(vec![2, 3, 4], Draw::Signed), (vec![2, 3], Draw::Signed)],
        |t| scale_channels(&t[0], &t[1]).unwrap(),
    ));
    worst
}

pub fn batchnorm_suite() -> f64 {
    all_seeds(
        "batchnorm1d",
        &[
            (vec![2, 3, 4], Draw::Signed),
            (vec![3], Draw::AwayFromZero),
            (vec![3], Draw::Signed),
        ],
        |t| {
            let running_mean = Tensor::zeros(vec![3]);
            let running_var = Tensor::from_vec(vec![3], vec![1.0; 3], false);
            batchnorm1d(&t[0], &t[1], &t[2], &running_mean, &running_var, true).unwrap()
        },
    )
}

pub fn bce_suite() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        let mut label_rng = ChaCha12Rng::seed_from_u64(seed ^ 0xAB);
        let labels: Vec<f64> = (0..6).map(|_| f64::from(label_rng.random_range(0..2))).collect();
        worst = worst.max(check_op(
            "bce_loss",
            seed,
            &[(vec![6], Draw::UnitInterval)],
            move |t| {
                let labels = Tensor::from_vec(vec![6], labels.clone(), false);
                bce_loss(&t[0], &labels).unwrap()
            },
        ));
    }
    worst
}

pub fn lstm_suite() -> f64 {
    let shapes = [
        (vec![2, 4], Draw::Signed),
        (vec![2, 3], Draw::Signed),
        (vec![2, 3], Draw::Signed),
        (vec![12, 4], Draw::Signed),
        (vec![12, 3], Draw::Signed),
        (vec![12], Draw::Signed),
        (vec![12], Draw::Signed),
    ];
    all_seeds("lstm_cell", &shapes, |t| {
        let w = LstmWeights {
            w_ih: t[3].clone(),
            w_hh: t[4].clone(),
            b_ih: t[5].clone(),
            b_hh: t[6].clone(),
        };
        let (h, c) = lstm_cell(&t[0], &t[1], &t[2], &w).unwrap();
        concat_axis1(&[h, c]).unwrap()
    })
}

pub fn bilstm_suite() -> f64 {
    let gate = 4 * 2;
    let shapes = [
        (vec![1, 3, 2], Draw::Signed),
        (vec![gate, 2], Draw::Signed),
        (vec![gate, 2], Draw::Signed),
        (vec![gate], Draw::Signed),
        (vec![gate], Draw::Signed),
        (vec![gate, 2], Draw::Signed),
        (vec![gate, 2], Draw::Signed),
        (vec![gate], Draw::Signed),
        (vec![gate], Draw::Signed),
        (vec![gate, 4], Draw::Signed),
        (vec![gate, 2], Draw::Signed),
        (vec![gate], Draw::Signed),
        (vec![gate], Draw::Signed),
        (vec![gate, 4], Draw::Signed),
        (vec![gate, 2], Draw::Signed),
        (vec![gate], Draw::Signed),
        (vec![gate], Draw::Signed),
    ];
    let weights = |t: &[Tensor<f64>], base: usize| LstmWeights {
        w_ih: t[base].clone(),
        w_hh: t[base + 1].clone(),
        b_ih: t[base + 2].clone(),
        b_hh: t[base + 3].clone(),
    };
    all_seeds("bilstm", &shapes, |t| {
        let layers = vec![
            BiLstmLayer { forward: weights(t, 1), backward: weights(t, 5) },
            BiLstmLayer { forward: weights(t, 9), backward: weights(t, 13) },
        ];
        bilstm(&t[0], &layers).unwrap()
    })
}

pub fn squeeze_excite_suite() -> f64 {
    let shapes = [
        (vec![2, 4, 5], Draw::Signed),
        (vec![2, 4], Draw::Signed),
        (vec![2], Draw::Signed),
        (vec![4, 2], Draw::Signed),
        (vec![4], Draw::Signed),
    ];
    all_seeds("squeeze_excite", &shapes, |t| {
        let se = SqueezeExcite {
            w_reduce: t[1].clone(),
            b_reduce: t[2].clone(),
            w_expand: t[3].clone(),
            b_expand: t[4].clone(),
        };
        squeeze_excite(&t[0], &se).unwrap()
    })
}

/// End-to-end check on the two-block micro model: every parameter and a
/// sample of input elements against central differences. Returns the worst
/// error; panics above `tol`.
pub fn micro_model_gradcheck(tol: f64) -> f64 {
    let cfg = super::micro_config();
    let model = IKrNet::<f64>::build(&cfg, 17).unwrap();
    let (b, l) = (2, 32);
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let data: Vec<f64> = (0..b * l).map(|_| rng.random_range(-1.0..1.0)).collect();
    let proj: Vec<f64> = {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        (0..b).map(|_| rng.random_range(-1.0..1.0)).collect()
    };

    let x = Tensor::from_vec(vec![b, 1, l], data.clone(), true);
    let scores = model.forward(&x, true).unwrap();
    let proj_t = Tensor::from_vec(vec![b], proj.clone(), false);
    let loss = scores.mul(&proj_t).unwrap().mean_all().scale(b as f64);
    loss.backward();

    let eval = |input: &[f64]| -> f64 {
        no_grad(|| {
            let x = Tensor::from_vec(vec![b, 1, l], input.to_vec(), false);
            let s = model.forward(&x, true).unwrap();
            s.data().iter().zip(&proj).map(|(a, w)| a * w).sum()
        })
    };

    let mut worst: f64 = 0.0;
    let xg = x.grad().unwrap();
    for ei in (0..data.len()).step_by(7) {
        let mut plus = data.clone();
        plus[ei] += H;
        let mut minus = data.clone();
        minus[ei] -= H;
        let numeric = (eval(&plus) - eval(&minus)) / (2.0 * H);
        let a = xg[ei];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
        worst = worst.max(err);
        assert!(err < tol, "input element {ei}: analytic {a} numeric {numeric} err {err}");
    }
    for p in model.parameters() {
        let grad = p.grad().unwrap_or_else(|| vec![0.0; p.len()]);
        let original = p.data();
        for ei in 0..original.len() {
            let mut plus = original.clone();
            plus[ei] += H;
            p.set_data(&plus);
            let up = eval(&data);
            let mut minus = original.clone();
            minus[ei] -= H;
            p.set_data(&minus);
            let down = eval(&data);
            p.set_data(&original);
            let numeric = (up - down) / (2.0 * H);
            let a = grad[ei];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            worst = worst.max(err);
            assert!(err < tol, "param element {ei}: analytic {a} numeric {numeric} err {err}");
        }
    }
    worst
}
