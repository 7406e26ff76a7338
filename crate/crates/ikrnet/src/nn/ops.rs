//! Differentiable primitives: elementwise, structural, and dense linear ops.

use crate::error::NnError;
use crate::scalar::Scalar;
use crate::nn::tensor::Tensor;

fn check_same_shape<S: Scalar>(op: &'static str, a: &Tensor<S>, b: &Tensor<S>) -> Result<(), NnError> {
    if a.shape() != b.shape() {
        return Err(NnError::shape(op, format!("{:?}", a.shape()), format!("{:?}", b.shape())));
    }
    Ok(())
}

/// Splits a shape into `(outer, axis_len, inner)` around axis 1, the axis the
/// structural ops operate on.
fn axis1_view(shape: &[usize], op: &'static str) -> Result<(usize, usize, usize), NnError> {
    if shape.len() < 2 {
        return Err(NnError::shape(op, "rank >= 2", format!("{shape:?}")));
    }
    let outer = shape[0];
    let axis = shape[1];
    let inner: usize = shape[2..].iter().product();
    Ok((outer, axis, inner.max(1)))
}

impl<S: Scalar> Tensor<S> {
    pub fn add(&self, other: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        check_same_shape("add", self, other)?;
        let data = Tensor::with_data2(self, other, |a, b| {
            a.iter().zip(b).map(|(x, y)| *x + *y).collect::<Vec<_>>()
        });
        let (pa, pb) = (self.clone(), other.clone());
        Ok(Tensor::from_op(self.shape().to_vec(), data, vec![self.clone(), other.clone()], move |dy| {
            if pa.requires_grad() {
                pa.accumulate_grad(dy);
            }
            if pb.requires_grad() {
                pb.accumulate_grad(dy);
            }
        }))
    }

    pub fn sub(&self, other: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        check_same_shape("sub", self, other)?;
        let data = Tensor::with_data2(self, other, |a, b| {
            a.iter().zip(b).map(|(x, y)| *x - *y).collect::<Vec<_>>()
        });
        let (pa, pb) = (self.clone(), other.clone());
        Ok(Tensor::from_op(self.shape().to_vec(), data, vec![self.clone(), other.clone()], move |dy| {
            if pa.requires_grad() {
                pa.accumulate_grad(dy);
            }
            if pb.requires_grad() {
                pb.with_grad_mut(|g| {
                    for (gi, d) in g.iter_mut().zip(dy) {
                        *gi -= *d;
                    }
                });
            }
        }))
    }

    pub fn mul(&self, other: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        check_same_shape("mul", self, other)?;
        let data = Tensor::with_data2(self, other, |a, b| {
            a.iter().zip(b).map(|(x, y)| *x * *y).collect::<Vec<_>>()
        });
        let (pa, pb) = (self.clone(), other.clone());
        Ok(Tensor::from_op(self.shape().to_vec(), data, vec![self.clone(), other.clone()], move |dy| {
            if pa.requires_grad() {
                pa.with_grad_mut(|g| {
                    pb.with_data(|bv| {
                        for i in 0..g.len() {
                            g[i] += dy[i] * bv[i];
                        }
                    });
                });
            }
            if pb.requires_grad() {
                pb.with_grad_mut(|g| {
                    pa.with_data(|av| {
                        for i in 0..g.len() {
                            g[i] += dy[i] * av[i];
                        }
                    });
                });
            }
        }))
    }

    pub fn scale(&self, factor: S) -> Tensor<S> {
        let data = self.with_data(|a| a.iter().map(|x| *x * factor).collect::<Vec<_>>());
        let p = self.clone();
        Tensor::from_op(self.shape().to_vec(), data, vec![self.clone()], move |dy| {
            p.with_grad_mut(|g| {
                for (gi, d) in g.iter_mut().zip(dy) {
                    *gi += *d * factor;
                }
            });
        })
    }

    pub fn relu(&self) -> Tensor<S> {
        let data = self.with_data(|a| {
            a.iter().map(|x| if *x > S::zero() { *x } else { S::zero() }).collect::<Vec<_>>()
        });
        let p = self.clone();
        Tensor::from_op(self.shape().to_vec(), data, vec![self.clone()], move |dy| {
            p.with_grad_mut(|g| {
                p.with_data(|xv| {
                    for i in 0..g.len() {
                        if xv[i] > S::zero() {
                            g[i] += dy[i];
                        }
                    }
                });
            });
        })
    }

    pub fn sigmoid(&self) -> Tensor<S> {
        let data = self.with_data(|a| {
            a.iter().map(|x| S::one() / (S::one() + (-*x).exp())).collect::<Vec<_>>()
        });
        let y = data.clone();
        let p = self.clone();
        Tensor::from_op(self.shape().to_vec(), data, vec![self.clone()], move |dy| {
            p.with_grad_mut(|g| {
                for i in 0..g.len() {
                    g[i] += dy[i] * y[i] * (S::one() - y[i]);
                }
            });
        })
    }

    pub fn tanh_act(&self) -> Tensor<S> {
        let data = self.with_data(|a| a.iter().map(|x| x.tanh()).collect::<Vec<_>>());
        let y = data.clone();
        let p = self.clone();
        Tensor::from_op(self.shape().to_vec(), data, vec![self.clone()], move |dy| {
            p.with_grad_mut(|g| {
                for i in 0..g.len() {
                    g[i] += dy[i] * (S::one() - y[i] * y[i]);
                }
            });
        })
    }

    pub fn reshape(&self, shape: Vec<usize>) -> Result<Tensor<S>, NnError> {
        let n: usize = shape.iter().product();
        if n != self.len() {
            return Err(NnError::shape("reshape", format!("{n} elements"), format!("{}", self.len())));
        }
        let p = self.clone();
        Ok(Tensor::from_op(shape, self.data(), vec![self.clone()], move |dy| {
            p.accumulate_grad(dy);
        }))
    }

    /// Mean over all elements, as a `[1]` tensor.
    pub fn mean_all(&self) -> Tensor<S> {
        let n = self.len();
        let inv = S::from_f64(1.0 / n as f64);
        let mean = self.with_data(|a| a.iter().fold(S::zero(), |acc, x| acc + *x)) * inv;
        let p = self.clone();
        Tensor::from_op(vec![1], vec![mean], vec![self.clone()], move |dy| {
            let d = dy[0] * inv;
            p.with_grad_mut(|g| {
                for gi in g.iter_mut() {
                    *gi += d;
                }
            });
        })
    }

    /// Slice of length `len` starting at `start` along axis 1.
    pub fn narrow_axis1(&self, start: usize, len: usize) -> Result<Tensor<S>, NnError> {
        let (outer, axis, inner) = axis1_view(self.shape(), "narrow")?;
        if start + len > axis {
            return Err(NnError::invalid(
                "narrow",
                format!("range {start}..{} exceeds axis length {axis}", start + len),
            ));
        }
        let mut shape = self.shape().to_vec();
        shape[1] = len;
        let mut data = Vec::with_capacity(outer * len * inner);
        self.with_data(|a| {
            for o in 0..outer {
                let base = (o * axis + start) * inner;
                data.extend_from_slice(&a[base..base + len * inner]);
            }
        });
        let p = self.clone();
        Ok(Tensor::from_op(shape, data, vec![self.clone()], move |dy| {
            p.with_grad_mut(|g| {
                for o in 0..outer {
                    let src = o * len * inner;
                    let dst = (o * axis + start) * inner;
                    for i in 0..len * inner {
                        g[dst + i] += dy[src + i];
                    }
                }
            });
        }))
    }

    /// Transposes the last two axes of a rank-3 tensor.
    pub fn transpose_last2(&self) -> Result<Tensor<S>, NnError> {
        let (b, x, y) = self.dims3("transpose_last2")?;
        let mut data = vec![S::zero(); self.len()];
        self.with_data(|a| {
            for bi in 0..b {
                for xi in 0..x {
                    for yi in 0..y {
                        data[(bi * y + yi) * x + xi] = a[(bi * x + xi) * y + yi];
                    }
                }
            }
        });
        let p = self.clone();
        Ok(Tensor::from_op(vec![b, y, x], data, vec![self.clone()], move |dy| {
            p.with_grad_mut(|g| {
                for bi in 0..b {
                    for xi in 0..x {
                        for yi in 0..y {
                            g[(bi * x + xi) * y + yi] += dy[(bi * y + yi) * x + xi];
                        }
                    }
                }
            });
        }))
    }
}

/// Concatenates tensors along axis 1; all other axes must agree.
pub fn concat_axis1<S: Scalar>(tensors: &[Tensor<S>]) -> Result<Tensor<S>, NnError> {
    if tensors.is_empty() {
        return Err(NnError::invalid("concat", "no tensors given"));
    }
    let (outer, _, inner) = axis1_view(tensors[0].shape(), "concat")?;
    let rank = tensors[0].shape().len();
    let mut axis_total = 0;
    for t in tensors {
        let (o, a, i) = axis1_view(t.shape(), "concat")?;
        if o != outer || i != inner || t.shape().len() != rank {
            return Err(NnError::shape(
                "concat",
                format!("{:?} up to axis 1", tensors[0].shape()),
                format!("{:?}", t.shape()),
            ));
        }
        axis_total += a;
    }
    let mut shape = tensors[0].shape().to_vec();
    shape[1] = axis_total;

    let mut data = vec![S::zero(); outer * axis_total * inner];
    let mut offset = 0;
    for t in tensors {
        let a = t.shape()[1];
        t.with_data(|src| {
            for o in 0..outer {
                let dst = (o * axis_total + offset) * inner;
                let s = o * a * inner;
                data[dst..dst + a * inner].copy_from_slice(&src[s..s + a * inner]);
            }
        });
        offset += a;
    }

    let parents: Vec<Tensor<S>> = tensors.to_vec();
    let owned = parents.clone();
    Ok(Tensor::from_op(shape, data, parents, move |dy| {
        let mut offset = 0;
        for t in &owned {
            let a = t.shape()[1];
            if t.requires_grad() {
                t.with_grad_mut(|g| {
                    for o in 0..outer {
                        let src = (o * axis_total + offset) * inner;
                        let dst = o * a * inner;
                        for i in 0..a * inner {
                            g[dst + i] += dy[src + i];
                        }
                    }
                });
            }
            offset += a;
        }
    }))
}

/// `a [M,K] @ b [K,N] -> [M,N]`.
pub fn matmul<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>, NnError> {
    let (m, k) = a.dims2("matmul")?;
    let (kb, n) = b.dims2("matmul")?;
    if k != kb {
        return Err(NnError::shape("matmul", format!("[_, {k}] x [{k}, _]"), format!("[{m}, {k}] x [{kb}, {n}]")));
    }
    let mut data = vec![S::zero(); m * n];
    Tensor::with_data2(a, b, |av, bv| {
        for i in 0..m {
            for kk in 0..k {
                let aik = av[i * k + kk];
                let brow = &bv[kk * n..kk * n + n];
                let out = &mut data[i * n..i * n + n];
                for j in 0..n {
                    out[j] += aik * brow[j];
                }
            }
        }
    });
    let (pa, pb) = (a.clone(), b.clone());
    Ok(Tensor::from_op(vec![m, n], data, vec![a.clone(), b.clone()], move |dy| {
        if pa.requires_grad() {
            let bv = pb.data();
            pa.with_grad_mut(|g| {
                for i in 0..m {
                    for j in 0..n {
                        let d = dy[i * n + j];
                        let brow = &bv[j..];
                        let grow = &mut g[i * k..i * k + k];
                        for (kk, gi) in grow.iter_mut().enumerate() {
                            *gi += d * brow[kk * n];
                        }
                    }
                }
            });
        }
        if pb.requires_grad() {
            let av = pa.data();
            pb.with_grad_mut(|g| {
                for i in 0..m {
                    for kk in 0..k {
                        let aik = av[i * k + kk];
                        let drow = &dy[i * n..i * n + n];
                        let grow = &mut g[kk * n..kk * n + n];
                        for j in 0..n {
                            grow[j] += aik * drow[j];
                        }
                    }
                }
            });
        }
    }))
}

/// Fully connected layer `x [B,I] * w [O,I]^T + b [O] -> [B,O]`.
pub fn linear<S: Scalar>(
    x: &Tensor<S>,
    weight: &Tensor<S>,
    bias: Option<&Tensor<S>>,
) -> Result<Tensor<S>, NnError> {
    let (b, i) = x.dims2("linear")?;
    let (o, iw) = weight.dims2("linear")?;
    if i != iw {
        return Err(NnError::shape("linear", format!("weight [_, {i}]"), format!("[{o}, {iw}]")));
    }
    if let Some(bias) = bias {
        if bias.shape() != [o] {
            return Err(NnError::shape("linear", format!("bias [{o}]"), format!("{:?}", bias.shape())));
        }
    }
    let mut data = vec![S::zero(); b * o];
    Tensor::with_data2(x, weight, |xv, wv| {
        for bi in 0..b {
            let xrow = &xv[bi * i..bi * i + i];
            let out = &mut data[bi * o..bi * o + o];
            for oi in 0..o {
                let wrow = &wv[oi * i..oi * i + i];
                let mut acc = S::zero();
                for ii in 0..i {
                    acc += xrow[ii] * wrow[ii];
                }
                out[oi] = acc;
            }
        }
    });
    if let Some(bias) = bias {
        bias.with_data(|bv| {
            for bi in 0..b {
                for oi in 0..o {
                    data[bi * o + oi] += bv[oi];
                }
            }
        });
    }

    let (px, pw) = (x.clone(), weight.clone());
    let pbias = bias.cloned();
    let mut parents = vec![x.clone(), weight.clone()];
    if let Some(bias) = bias {
        parents.push(bias.clone());
    }
    Ok(Tensor::from_op(vec![b, o], data, parents, move |dy| {
        if px.requires_grad() {
            let wv = pw.data();
            px.with_grad_mut(|g| {
                for bi in 0..b {
                    let drow = &dy[bi * o..bi * o + o];
                    let grow = &mut g[bi * i..bi * i + i];
                    for oi in 0..o {
                        let d = drow[oi];
                        let wrow = &wv[oi * i..oi * i + i];
                        for ii in 0..i {
                            grow[ii] += d * wrow[ii];
                        }
                    }
                }
            });
        }
        if pw.requires_grad() {
            let xv = px.data();
            pw.with_grad_mut(|g| {
                for bi in 0..b {
                    let drow = &dy[bi * o..bi * o + o];
                    let xrow = &xv[bi * i..bi * i + i];
                    for oi in 0..o {
                        let d = drow[oi];
                        let grow = &mut g[oi * i..oi * i + i];
                        for ii in 0..i {
                            grow[ii] += d * xrow[ii];
                        }
                    }
                }
            });
        }
        if let Some(pbias) = &pbias {
            if pbias.requires_grad() {
                pbias.with_grad_mut(|g| {
                    for bi in 0..b {
                        for oi in 0..o {
                            g[oi] += dy[bi * o + oi];
                        }
                    }
                });
            }
        }
    }))
}

/// Mean over the length axis: `[B,C,L] -> [B,C]`.
pub fn global_avg_pool<S: Scalar>(x: &Tensor<S>) -> Result<Tensor<S>, NnError> {
    let (b, c, l) = x.dims3("global_avg_pool")?;
    let inv = S::from_f64(1.0 / l as f64);
    let mut data = vec![S::zero(); b * c];
    x.with_data(|xv| {
        for bc in 0..b * c {
            let row = &xv[bc * l..bc * l + l];
            let mut acc = S::zero();
            for v in row {
                acc += *v;
            }
            data[bc] = acc * inv;
        }
    });
    let p = x.clone();
    Ok(Tensor::from_op(vec![b, c], data, vec![x.clone()], move |dy| {
        p.with_grad_mut(|g| {
            for bc in 0..b * c {
                let d = dy[bc] * inv;
                let grow = &mut g[bc * l..bc * l + l];
                for gi in grow.iter_mut() {
                    *gi += d;
                }
            }
        });
    }))
}

/// Broadcast per-channel gates over the length axis:
/// `x [B,C,L] * s [B,C] -> [B,C,L]`.
pub fn scale_channels<S: Scalar>(x: &Tensor<S>, gates: &Tensor<S>) -> Result<Tensor<S>, NnError> {
    let (b, c, l) = x.dims3("scale_channels")?;
    let (bg, cg) = gates.dims2("scale_channels")?;
    if (b, c) != (bg, cg) {
        return Err(NnError::shape("scale_channels", format!("gates [{b}, {c}]"), format!("[{bg}, {cg}]")));
    }
    let mut data = vec![S::zero(); b * c * l];
    Tensor::with_data2(x, gates, |xv, sv| {
        for bc in 0..b * c {
            let s = sv[bc];
            let row = &xv[bc * l..bc * l + l];
            let out = &mut data[bc * l..bc * l + l];
            for i in 0..l {
                out[i] = row[i] * s;
            }
        }
    });
    let (px, ps) = (x.clone(), gates.clone());
    Ok(Tensor::from_op(vec![b, c, l], data, vec![x.clone(), gates.clone()], move |dy| {
        if px.requires_grad() {
            let sv = ps.data();
            px.with_grad_mut(|g| {
                for bc in 0..b * c {
                    let s = sv[bc];
                    let drow = &dy[bc * l..bc * l + l];
                    let grow = &mut g[bc * l..bc * l + l];
                    for i in 0..l {
                        grow[i] += drow[i] * s;
                    }
                }
            });
        }
        if ps.requires_grad() {
            let xv = px.data();
            ps.with_grad_mut(|g| {
                for bc in 0..b * c {
                    let drow = &dy[bc * l..bc * l + l];
                    let xrow = &xv[bc * l..bc * l + l];
                    let mut acc = S::zero();
                    for i in 0..l {
                        acc += drow[i] * xrow[i];
                    }
                    g[bc] += acc;
                }
            });
        }
    }))
}

/// Average pooling to a fixed output length; bin `i` covers input indices
/// `floor(i L / out) .. ceil((i + 1) L / out)`.
pub fn adaptive_avg_pool1d<S: Scalar>(x: &Tensor<S>, out_len: usize) -> Result<Tensor<S>, NnError> {
    let (b, c, l) = x.dims3("adaptive_avg_pool1d")?;
    if out_len == 0 {
        return Err(NnError::invalid("adaptive_avg_pool1d", "out_len must be >= 1"));
    }
    let edges: Vec<(usize, usize)> = (0..out_len)
        .map(|i| {
            let lo = i * l / out_len;
            let hi = ((i + 1) * l).div_ceil(out_len);
            (lo, hi)
        })
        .collect();
    let mut data = vec![S::zero(); b * c * out_len];
    x.with_data(|xv| {
        for bc in 0..b * c {
            let row = &xv[bc * l..bc * l + l];
            let out = &mut data[bc * out_len..bc * out_len + out_len];
            for (i, &(lo, hi)) in edges.iter().enumerate() {
                let mut acc = S::zero();
                for v in &row[lo..hi] {
                    acc += *v;
                }
                out[i] = acc * S::from_f64(1.0 / (hi - lo) as f64);
            }
        }
    });
    let p = x.clone();
    Ok(Tensor::from_op(vec![b, c, out_len], data, vec![x.clone()], move |dy| {
        p.with_grad_mut(|g| {
            for bc in 0..b * c {
                let drow = &dy[bc * out_len..bc * out_len + out_len];
                let grow = &mut g[bc * l..bc * l + l];
                for (i, &(lo, hi)) in edges.iter().enumerate() {
                    let d = drow[i] * S::from_f64(1.0 / (hi - lo) as f64);
                    for gi in &mut grow[lo..hi] {
                        *gi += d;
                    }
                }
            }
        });
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    type T64 = Tensor<f64>;

    #[test]
    fn relu_and_sigmoid_fixed_points() {
        let x = T64::from_vec(vec![3], vec![-1.0, 0.0, 2.0], false);
        assert_eq!(x.relu().data(), vec![0.0, 0.0, 2.0]);
        let s = T64::scalar(0.0).sigmoid();
        assert_eq!(s.item(), 0.5);
    }

    #[test]
    fn adaptive_pool_bin_rule() {
        let x = T64::from_vec(vec![1, 1, 4], vec![1.0, 2.0, 3.0, 4.0], false);
        assert_eq!(adaptive_avg_pool1d(&x, 2).unwrap().data(), vec![1.5, 3.5]);

        let x5 = T64::from_vec(vec![1, 1, 5], vec![1.0, 2.0, 3.0, 4.0, 5.0], false);
        assert_eq!(adaptive_avg_pool1d(&x5, 2).unwrap().data(), vec![2.0, 4.0]);

        let same = adaptive_avg_pool1d(&x, 4).unwrap();
        assert_eq!(same.data(), x.data());
    }

    #[test]
    fn concat_then_narrow_round_trips() {
        let a = T64::from_vec(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0], false);
        let b = T64::from_vec(vec![2, 1], vec![9.0, 8.0], false);
        let cat = concat_axis1(&[a.clone(), b]).unwrap();
        assert_eq!(cat.shape(), &[2, 3]);
        assert_eq!(cat.data(), vec![1.0, 2.0, 9.0, 3.0, 4.0, 8.0]);
        let back = cat.narrow_axis1(0, 2).unwrap();
        assert_eq!(back.data(), a.data());
    }

    #[test]
    fn matmul_known_product() {
        let a = T64::from_vec(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0], false);
        let b = T64::from_vec(vec![2, 2], vec![5.0, 6.0, 7.0, 8.0], false);
        assert_eq!(matmul(&a, &b).unwrap().data(), vec![19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn backward_through_chain() {
        let x = T64::from_vec(vec![2], vec![1.0, -2.0], true);
        let y = x.scale(3.0).relu();
        let loss = y.mean_all();
        loss.backward();
        // d/dx mean(relu(3x)) = 3/2 where 3x > 0, else 0.
        assert_eq!(x.grad().unwrap(), vec![1.5, 0.0]);
    }

    #[test]
    fn add_of_aliased_tensor_accumulates_twice() {
        let x = T64::from_vec(vec![2], vec![1.0, 2.0], true);
        let y = x.add(&x).unwrap();
        y.mean_all().backward();
        assert_eq!(x.grad().unwrap(), vec![1.0, 1.0]);
    }
}
