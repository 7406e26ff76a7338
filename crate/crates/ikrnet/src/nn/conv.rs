//! Grouped 1-D convolution (cross-correlation semantics).

use rayon::prelude::*;

use crate::error::NnError;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Output length for the given geometry, or an error when it collapses.
pub fn conv1d_out_len(l: usize, k: usize, stride: usize, padding: usize) -> Result<usize, NnError> {
    let padded = l + 2 * padding;
    if padded < k {
        return Err(NnError::invalid(
            "conv1d",
            format!("kernel {k} longer than padded input {padded}"),
        ));
    }
    Ok((padded - k) / stride + 1)
}

/// Zero-pads each `[L]` row of `x [B,C,L]` to `[L + 2 pad]`; `None` means
/// the caller can use the unpadded buffer directly.
fn pad_rows<S: Scalar>(x: &[S], rows: usize, l: usize, pad: usize) -> Option<Vec<S>> {
    if pad == 0 {
        return None;
    }
    let lp = l + 2 * pad;
    let mut out = vec![S::zero(); rows * lp];
    for r in 0..rows {
        out[r * lp + pad..r * lp + pad + l].copy_from_slice(&x[r * l..r * l + l]);
    }
    Some(out)
}

/// `input [B,Cin,L] * weight [Cout, Cin/groups, k] (+ bias [Cout]) -> [B,Cout,Lout]`.
///
/// `Lout = floor((L + 2 padding - k) / stride) + 1`. Channel `co` reads the
/// input group `co / (Cout/groups)`.
pub fn conv1d<S: Scalar>(
    input: &Tensor<S>,
    weight: &Tensor<S>,
    bias: Option<&Tensor<S>>,
    stride: usize,
    padding: usize,
    groups: usize,
) -> Result<Tensor<S>, NnError> {
    let (b, c_in, l) = input.dims3("conv1d")?;
    weight.check_rank("conv1d", 3)?;
    let (c_out, c_in_g, k) = (weight.shape()[0], weight.shape()[1], weight.shape()[2]);
    if stride == 0 || k == 0 || groups == 0 {
        return Err(NnError::invalid("conv1d", "stride, kernel, and groups must be >= 1"));
    }
    if c_in % groups != 0 || c_out % groups != 0 {
        return Err(NnError::invalid(
            "conv1d",
            format!("channels ({c_in} in, {c_out} out) not divisible by groups {groups}"),
        ));
    }
    if c_in_g != c_in / groups {
        return Err(NnError::shape(
            "conv1d",
            format!("weight [{c_out}, {}, {k}]", c_in / groups),
            format!("{:?}", weight.shape()),
        ));
    }
    if let Some(bias) = bias {
        if bias.shape() != [c_out] {
            return Err(NnError::shape("conv1d", format!("bias [{c_out}]"), format!("{:?}", bias.shape())));
        }
    }
    let l_out = conv1d_out_len(l, k, stride, padding)?;
    let out_per_group = c_out / groups;
    let lp = l + 2 * padding;

    let wv = weight.data();
    let bv = bias.map(|t| t.data());

    let mut data = vec![S::zero(); b * c_out * l_out];
    input.with_data(|xv| {
        let padded = pad_rows(xv, b * c_in, l, padding);
        let xpad: &[S] = padded.as_deref().unwrap_or(xv);
        data.par_chunks_mut(l_out).enumerate().for_each(|(idx, yrow)| {
            let bi = idx / c_out;
            let co = idx % c_out;
            if let Some(bv) = &bv {
                yrow.fill(bv[co]);
            }
            let g = co / out_per_group;
            for cil in 0..c_in_g {
                let ci = g * c_in_g + cil;
                let xrow = &xpad[(bi * c_in + ci) * lp..(bi * c_in + ci) * lp + lp];
                let wrow = &wv[(co * c_in_g + cil) * k..(co * c_in_g + cil) * k + k];
                // Tap-outer loops keep the inner accumulation contiguous.
                for (j, &wj) in wrow.iter().enumerate() {
                    if stride == 1 {
                        let xs = &xrow[j..j + l_out];
                        for (y, x) in yrow.iter_mut().zip(xs) {
                            *y += *x * wj;
                        }
                    } else {
                        for (t, y) in yrow.iter_mut().enumerate() {
                            *y += xrow[t * stride + j] * wj;
                        }
                    }
                }
            }
        });
    });

    let (px, pw) = (input.clone(), weight.clone());
    let pbias = bias.cloned();
    let mut parents = vec![input.clone(), weight.clone()];
    if let Some(bias) = bias {
        parents.push(bias.clone());
    }
    Ok(Tensor::from_op(vec![b, c_out, l_out], data, parents, move |dy| {
        let wv = pw.data();
        if px.requires_grad() {
            // One task per (batch, input-channel) row; rows are disjoint, so
            // the parallel accumulation stays deterministic.
            let fill_rows = |gpad: &mut [S], lp_used: usize| {
                gpad.par_chunks_mut(lp_used).enumerate().for_each(|(idx, grow)| {
                    let bi = idx / c_in;
                    let ci = idx % c_in;
                    let g = ci / c_in_g;
                    let cil = ci % c_in_g;
                    for col in 0..out_per_group {
                        let co = g * out_per_group + col;
                        let drow = &dy[(bi * c_out + co) * l_out..(bi * c_out + co) * l_out + l_out];
                        let wrow = &wv[(co * c_in_g + cil) * k..(co * c_in_g + cil) * k + k];
                        for (j, &wj) in wrow.iter().enumerate() {
                            if stride == 1 {
                                let gs = &mut grow[j..j + l_out];
                                for (gv, d) in gs.iter_mut().zip(drow) {
                                    *gv += *d * wj;
                                }
                            } else {
                                for (t, d) in drow.iter().enumerate() {
                                    grow[t * stride + j] += *d * wj;
                                }
                            }
                        }
                    }
                });
            };
            px.with_grad_mut(|g| {
                if padding == 0 {
                    fill_rows(g, l);
                } else {
                    let mut gpad = vec![S::zero(); b * c_in * lp];
                    fill_rows(&mut gpad, lp);
                    for r in 0..b * c_in {
                        let src = &gpad[r * lp + padding..r * lp + padding + l];
                        let dst = &mut g[r * l..r * l + l];
                        for i in 0..l {
                            dst[i] += src[i];
                        }
                    }
                }
            });
        }
        if pw.requires_grad() {
            px.with_data(|xv| {
                let padded = pad_rows(xv, b * c_in, l, padding);
                let xpad: &[S] = padded.as_deref().unwrap_or(xv);
                pw.with_grad_mut(|gw| {
                    gw.par_chunks_mut(c_in_g * k).enumerate().for_each(|(co, gslice)| {
                        let g = co / out_per_group;
                        for bi in 0..b {
                            let drow = &dy[(bi * c_out + co) * l_out..(bi * c_out + co) * l_out + l_out];
                            for cil in 0..c_in_g {
                                let ci = g * c_in_g + cil;
                                let xrow = &xpad[(bi * c_in + ci) * lp..(bi * c_in + ci) * lp + lp];
                                let grow = &mut gslice[cil * k..cil * k + k];
                                for (j, gv) in grow.iter_mut().enumerate() {
                                    let mut acc = S::zero();
                                    if stride == 1 {
                                        let xs = &xrow[j..j + l_out];
                                        for (d, x) in drow.iter().zip(xs) {
                                            acc += *d * *x;
                                        }
                                    } else {
                                        for (t, d) in drow.iter().enumerate() {
                                            acc += *d * xrow[t * stride + j];
                                        }
                                    }
                                    *gv += acc;
                                }
                            }
                        }
                    });
                });
            });
        }
        if let Some(pbias) = &pbias {
            if pbias.requires_grad() {
                pbias.with_grad_mut(|g| {
                    for bi in 0..b {
                        for co in 0..c_out {
                            let drow = &dy[(bi * c_out + co) * l_out..(bi * c_out + co) * l_out + l_out];
                            let mut acc = S::zero();
                            for d in drow {
                                acc += *d;
                            }
                            g[co] += acc;
                        }
                    }
                });
            }
        }
    }))
}
