//! Batch normalization over the channel axis of `[B,C,L]` tensors.

use crate::error::NnError;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

pub const BATCHNORM_EPS: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.1;

/// Learnable scale/shift plus running statistics.
///
/// Running buffers are plain tensors mutated during training-mode forward;
/// they carry no gradient and are checkpointed alongside parameters.
pub struct BatchNorm1d<S: Scalar> {
    pub gamma: Tensor<S>,
    pub beta: Tensor<S>,
    pub running_mean: Tensor<S>,
    pub running_var: Tensor<S>,
    channels: usize,
}

impl<S: Scalar> BatchNorm1d<S> {
    pub fn new(channels: usize) -> Self {
        BatchNorm1d {
            gamma: Tensor::from_vec(vec![channels], vec![S::one(); channels], true),
            beta: Tensor::from_vec(vec![channels], vec![S::zero(); channels], true),
            running_mean: Tensor::zeros(vec![channels]),
            running_var: Tensor::from_vec(vec![channels], vec![S::one(); channels], false),
            channels,
        }
    }

    pub fn forward(&self, x: &Tensor<S>, training: bool) -> Result<Tensor<S>, NnError> {
        batchnorm1d(
            x,
            &self.gamma,
            &self.beta,
            &self.running_mean,
            &self.running_var,
            training,
        )
    }

    pub fn channels(&self) -> usize {
        self.channels
    }
}

/// Normalizes each channel of `x [B,C,L]`.
///
/// Training mode uses batch statistics (biased variance) and updates the
/// running buffers with momentum 0.1 (unbiased variance, matching the usual
/// convention); inference mode normalizes with the running buffers.
pub fn batchnorm1d<S: Scalar>(
    x: &Tensor<S>,
    gamma: &Tensor<S>,
    beta: &Tensor<S>,
    running_mean: &Tensor<S>,
    running_var: &Tensor<S>,
    training: bool,
) -> Result<Tensor<S>, NnError> {
    let (b, c, l) = x.dims3("batchnorm1d")?;
    for (name, t) in [("gamma", gamma), ("beta", beta), ("running_mean", running_mean), ("running_var", running_var)] {
        if t.shape() != [c] {
            return Err(NnError::shape("batchnorm1d", format!("{name} [{c}]"), format!("{:?}", t.shape())));
        }
    }
    let n = b * l;
    if training && n < 2 {
        return Err(NnError::invalid(
            "batchnorm1d",
            format!("training mode needs B*L >= 2, got {n}"),
        ));
    }
    let eps = S::from_f64(BATCHNORM_EPS);

    let (mean, var) = if training {
        let mut mean = vec![S::zero(); c];
        let mut var = vec![S::zero(); c];
        x.with_data(|xv| {
            let inv_n = S::from_f64(1.0 / n as f64);
            for ci in 0..c {
                let mut acc = S::zero();
                for bi in 0..b {
                    let row = &xv[(bi * c + ci) * l..(bi * c + ci) * l + l];
                    for v in row {
                        acc += *v;
                    }
                }
                let m = acc * inv_n;
                let mut vacc = S::zero();
                for bi in 0..b {
                    let row = &xv[(bi * c + ci) * l..(bi * c + ci) * l + l];
                    for v in row {
                        let d = *v - m;
                        vacc += d * d;
                    }
                }
                mean[ci] = m;
                var[ci] = vacc * inv_n;
            }
        });
        // Update running statistics.
        let momentum = S::from_f64(BATCHNORM_MOMENTUM);
        let keep = S::one() - momentum;
        let unbias = if n > 1 { S::from_f64(n as f64 / (n as f64 - 1.0)) } else { S::one() };
        running_mean.with_data_mut(|rm| {
            for ci in 0..c {
                rm[ci] = keep * rm[ci] + momentum * mean[ci];
            }
        });
        running_var.with_data_mut(|rv| {
            for ci in 0..c {
                rv[ci] = keep * rv[ci] + momentum * var[ci] * unbias;
            }
        });
        (mean, var)
    } else {
        (running_mean.data(), running_var.data())
    };

    let inv_std: Vec<S> = var.iter().map(|v| S::one() / (*v + eps).sqrt()).collect();
    let gv = gamma.data();
    let bv = beta.data();

    let mut xhat = vec![S::zero(); b * c * l];
    let mut data = vec![S::zero(); b * c * l];
    x.with_data(|xv| {
        for bi in 0..b {
            for ci in 0..c {
                let base = (bi * c + ci) * l;
                for i in 0..l {
                    let h = (xv[base + i] - mean[ci]) * inv_std[ci];
                    xhat[base + i] = h;
                    data[base + i] = gv[ci] * h + bv[ci];
                }
            }
        }
    });

    let (px, pg, pb) = (x.clone(), gamma.clone(), beta.clone());
    let parents = vec![x.clone(), gamma.clone(), beta.clone()];
    Ok(Tensor::from_op(vec![b, c, l], data, parents, move |dy| {
        let gv = pg.data();
        if pb.requires_grad() {
            pb.with_grad_mut(|g| {
                for bi in 0..b {
                    for ci in 0..c {
                        let base = (bi * c + ci) * l;
                        let mut acc = S::zero();
                        for i in 0..l {
                            acc += dy[base + i];
                        }
                        g[ci] += acc;
                    }
                }
            });
        }
        if pg.requires_grad() {
            pg.with_grad_mut(|g| {
                for bi in 0..b {
                    for ci in 0..c {
                        let base = (bi * c + ci) * l;
                        let mut acc = S::zero();
                        for i in 0..l {
                            acc += dy[base + i] * xhat[base + i];
                        }
                        g[ci] += acc;
                    }
                }
            });
        }
        if px.requires_grad() {
            if training {
                // dx = inv_std/N * (N dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
                let inv_n = S::from_f64(1.0 / n as f64);
                let mut sum_d = vec![S::zero(); c];
                let mut sum_dh = vec![S::zero(); c];
                for bi in 0..b {
                    for ci in 0..c {
                        let base = (bi * c + ci) * l;
                        for i in 0..l {
                            let dxhat = dy[base + i] * gv[ci];
                            sum_d[ci] += dxhat;
                            sum_dh[ci] += dxhat * xhat[base + i];
                        }
                    }
                }
                px.with_grad_mut(|g| {
                    for bi in 0..b {
                        for ci in 0..c {
                            let base = (bi * c + ci) * l;
                            for i in 0..l {
                                let dxhat = dy[base + i] * gv[ci];
                                let nf = S::from_f64(n as f64);
                                g[base + i] += inv_std[ci]
                                    * inv_n
                                    * (nf * dxhat - sum_d[ci] - xhat[base + i] * sum_dh[ci]);
                            }
                        }
                    }
                });
            } else {
                px.with_grad_mut(|g| {
                    for bi in 0..b {
                        for ci in 0..c {
                            let base = (bi * c + ci) * l;
                            let scale = gv[ci] * inv_std[ci];
                            for i in 0..l {
                                g[base + i] += dy[base + i] * scale;
                            }
                        }
                    }
                });
            }
        }
    }))
}
