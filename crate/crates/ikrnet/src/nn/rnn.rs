//! LSTM cell and stacked bidirectional LSTM, composed from the dense
//! primitives so gradients flow without bespoke backward code.

use crate::error::NnError;
use crate::nn::ops::{concat_axis1, linear};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Weights of one LSTM direction. Gate order along the `4H` axis is
/// input, forget, cell, output.
pub struct LstmWeights<S: Scalar> {
    /// `[4H, I]`
    pub w_ih: Tensor<S>,
    /// `[4H, H]`
    pub w_hh: Tensor<S>,
    /// `[4H]`
    pub b_ih: Tensor<S>,
    /// `[4H]`
    pub b_hh: Tensor<S>,
}

impl<S: Scalar> LstmWeights<S> {
    pub fn hidden(&self) -> usize {
        self.w_hh.shape()[1]
    }

    pub fn input_size(&self) -> usize {
        self.w_ih.shape()[1]
    }
}

/// One LSTM step.
///
/// `x_t [B,I]`, `h_prev`/`c_prev [B,H]` -> `(h_t, c_t)` with
/// `c_t = sigma(f) c_prev + sigma(i) tanh(g)` and `h_t = sigma(o) tanh(c_t)`.
pub fn lstm_cell<S: Scalar>(
    x_t: &Tensor<S>,
    h_prev: &Tensor<S>,
    c_prev: &Tensor<S>,
    w: &LstmWeights<S>,
) -> Result<(Tensor<S>, Tensor<S>), NnError> {
    let (b, _) = x_t.dims2("lstm_cell")?;
    let h = w.hidden();
    if h_prev.shape() != [b, h] || c_prev.shape() != [b, h] {
        return Err(NnError::shape(
            "lstm_cell",
            format!("states [{b}, {h}]"),
            format!("{:?} / {:?}", h_prev.shape(), c_prev.shape()),
        ));
    }
    let gates = linear(x_t, &w.w_ih, Some(&w.b_ih))?
        .add(&linear(h_prev, &w.w_hh, Some(&w.b_hh))?)?;
    let i = gates.narrow_axis1(0, h)?.sigmoid();
    let f = gates.narrow_axis1(h, h)?.sigmoid();
    let g = gates.narrow_axis1(2 * h, h)?.tanh_act();
    let o = gates.narrow_axis1(3 * h, h)?.sigmoid();
    let c_t = f.mul(c_prev)?.add(&i.mul(&g)?)?;
    let h_t = o.mul(&c_t.tanh_act())?;
    Ok((h_t, c_t))
}

/// Weights of one bidirectional layer.
pub struct BiLstmLayer<S: Scalar> {
    pub forward: LstmWeights<S>,
    pub backward: LstmWeights<S>,
}

fn run_direction<S: Scalar>(
    steps: &[Tensor<S>],
    w: &LstmWeights<S>,
    reverse: bool,
) -> Result<Vec<Tensor<S>>, NnError> {
    let b = steps[0].shape()[0];
    let h = w.hidden();
    let mut h_t = Tensor::zeros(vec![b, h]);
    let mut c_t = Tensor::zeros(vec![b, h]);
    let mut out: Vec<Option<Tensor<S>>> = vec![None; steps.len()];
    let order: Vec<usize> = if reverse {
        (0..steps.len()).rev().collect()
    } else {
        (0..steps.len()).collect()
    };
    for t in order {
        let (h_next, c_next) = lstm_cell(&steps[t], &h_t, &c_t, w)?;
        out[t] = Some(h_next.clone());
        h_t = h_next;
        c_t = c_next;
    }
    Ok(out.into_iter().map(|t| t.unwrap()).collect())
}

/// Stacked bidirectional LSTM: `seq [B,T,I] -> [B,T,2H]`.
///
/// Per layer, forward and backward passes run over time and their states are
/// concatenated per step; layer `l > 0` consumes layer `l - 1` output.
pub fn bilstm<S: Scalar>(seq: &Tensor<S>, layers: &[BiLstmLayer<S>]) -> Result<Tensor<S>, NnError> {
    let (b, t_len, mut feat) = seq.dims3("bilstm")?;
    if layers.is_empty() {
        return Err(NnError::invalid("bilstm", "needs at least one layer"));
    }
    if t_len == 0 {
        return Err(NnError::invalid("bilstm", "sequence length must be >= 1"));
    }

    let mut steps: Vec<Tensor<S>> = (0..t_len)
        .map(|t| seq.narrow_axis1(t, 1)?.reshape(vec![b, feat]))
        .collect::<Result<_, _>>()?;

    for layer in layers {
        if layer.forward.input_size() != feat || layer.backward.input_size() != feat {
            return Err(NnError::shape(
                "bilstm",
                format!("layer input {feat}"),
                format!("{} / {}", layer.forward.input_size(), layer.backward.input_size()),
            ));
        }
        let fwd = run_direction(&steps, &layer.forward, false)?;
        let bwd = run_direction(&steps, &layer.backward, true)?;
        steps = fwd
            .iter()
            .zip(&bwd)
            .map(|(f, r)| concat_axis1(&[f.clone(), r.clone()]))
            .collect::<Result<_, _>>()?;
        feat = 2 * layer.forward.hidden();
    }

    let rows: Vec<Tensor<S>> = steps
        .iter()
        .map(|s| s.reshape(vec![b, 1, feat]))
        .collect::<Result<_, _>>()?;
    concat_axis1(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_weights(input: usize, hidden: usize) -> LstmWeights<f64> {
        LstmWeights {
            w_ih: Tensor::zeros(vec![4 * hidden, input]),
            w_hh: Tensor::zeros(vec![4 * hidden, hidden]),
            b_ih: Tensor::zeros(vec![4 * hidden]),
            b_hh: Tensor::zeros(vec![4 * hidden]),
        }
    }

    #[test]
    fn zero_weights_zero_state_stay_zero() {
        let w = zero_weights(3, 2);
        let x = Tensor::from_vec(vec![1, 3], vec![0.7, -0.4, 1.1], false);
        let h = Tensor::zeros(vec![1, 2]);
        let c = Tensor::zeros(vec![1, 2]);
        let (h_t, c_t) = lstm_cell(&x, &h, &c, &w).unwrap();
        assert_eq!(h_t.data(), vec![0.0, 0.0]);
        assert_eq!(c_t.data(), vec![0.0, 0.0]);
    }

    #[test]
    fn saturated_forget_gate_passes_cell_state() {
        let hidden = 2;
        let w = LstmWeights {
            w_ih: Tensor::zeros(vec![4 * hidden, 2]),
            w_hh: Tensor::zeros(vec![4 * hidden, hidden]),
            // Forget-gate bias slice driven to +20: sigma(20) ~ 1.
            b_ih: Tensor::from_vec(
                vec![4 * hidden],
                vec![0.0, 0.0, 20.0, 20.0, 0.0, 0.0, 0.0, 0.0],
                false,
            ),
            b_hh: Tensor::zeros(vec![4 * hidden]),
        };
        let x = Tensor::from_vec(vec![1, 2], vec![0.3, -0.8], false);
        let h = Tensor::zeros(vec![1, hidden]);
        let c = Tensor::from_vec(vec![1, hidden], vec![0.9, -1.4], false);
        let (_, c_t) = lstm_cell(&x, &h, &c, &w).unwrap();
        // c_t = c_prev + sigma(0) * tanh(0) = c_prev within saturation error.
        for (ct, cp) in c_t.data().iter().zip(c.data()) {
            let diff: f64 = ct - cp;
            assert!(diff.abs() < 1e-6);
        }
    }

    #[test]
    fn single_step_bilstm_concatenates_directions() {
        use crate::nn::init;
        use rand_chacha::ChaCha12Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let layer = BiLstmLayer {
            forward: init::lstm_weights::<f64>(4, 3, &mut rng),
            backward: init::lstm_weights::<f64>(4, 3, &mut rng),
        };
        let seq = Tensor::from_vec(vec![2, 1, 4], (0..8).map(|i| i as f64 / 7.0).collect(), false);
        let out = bilstm(&seq, &[layer]).unwrap();
        assert_eq!(out.shape(), &[2, 1, 6]);
    }

    #[test]
    fn backward_half_equals_forward_on_reversed_input_with_swapped_roles() {
        use crate::nn::init;
        use rand_chacha::ChaCha12Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let fwd = init::lstm_weights::<f64>(2, 3, &mut rng);
        let bwd = init::lstm_weights::<f64>(2, 3, &mut rng);
        let (b, t, i, h) = (1, 4, 2, 3);

        let data: Vec<f64> = (0..(b * t * i)).map(|v| (v as f64 * 0.37).sin()).collect();
        let seq = Tensor::from_vec(vec![b, t, i], data.clone(), false);
        let mut rev_data = vec![0.0; data.len()];
        for tt in 0..t {
            for ii in 0..i {
                rev_data[tt * i + ii] = data[(t - 1 - tt) * i + ii];
            }
        }
        let seq_rev = Tensor::from_vec(vec![b, t, i], rev_data, false);

        let clone = |w: &LstmWeights<f64>| LstmWeights {
            w_ih: Tensor::from_vec(w.w_ih.shape().to_vec(), w.w_ih.data(), false),
            w_hh: Tensor::from_vec(w.w_hh.shape().to_vec(), w.w_hh.data(), false),
            b_ih: Tensor::from_vec(w.b_ih.shape().to_vec(), w.b_ih.data(), false),
            b_hh: Tensor::from_vec(w.b_hh.shape().to_vec(), w.b_hh.data(), false),
        };
        let out = bilstm(&seq, &[BiLstmLayer { forward: clone(&fwd), backward: clone(&bwd) }]).unwrap();
        let swapped = bilstm(&seq_rev, &[BiLstmLayer { forward: clone(&bwd), backward: clone(&fwd) }]).unwrap();

        let od = out.data();
        let sd = swapped.data();
        for tt in 0..t {
            for hh in 0..h {
                let bwd_half = od[tt * 2 * h + h + hh];
                let fwd_on_rev = sd[(t - 1 - tt) * 2 * h + hh];
                assert!((bwd_half - fwd_on_rev).abs() < 1e-12);
            }
        }
    }
}
