//! Dense tensors participating in a reverse-mode computation graph.
//!
//! Each op produces a fresh tensor holding a backward step: the parent
//! tensors plus a closure that routes the output gradient into them. Graphs
//! are acyclic by construction (a node's parents always predate it), so
//! processing nodes in decreasing creation order is a valid reverse
//! topological order.

use std::cell::Cell;
use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::error::NnError;
use crate::scalar::Scalar;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` with gradient recording disabled on this thread.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    let prev = GRAD_ENABLED.with(|g| g.replace(false));
    let out = f();
    GRAD_ENABLED.with(|g| g.set(prev));
    out
}

pub fn is_grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

pub(crate) struct BackwardStep<S: Scalar> {
    pub(crate) parents: Vec<Tensor<S>>,
    /// Accumulates parent gradients given this node's gradient.
    pub(crate) apply: Box<dyn Fn(&[S]) + Send + Sync>,
}

pub(crate) struct TensorData<S: Scalar> {
    id: u64,
    shape: Vec<usize>,
    data: RwLock<Vec<S>>,
    grad: RwLock<Option<Vec<S>>>,
    requires_grad: bool,
    op: Option<BackwardStep<S>>,
}

/// Shared handle to a tensor node. Clones alias the same storage.
pub struct Tensor<S: Scalar> {
    inner: Arc<TensorData<S>>,
}

impl<S: Scalar> Clone for Tensor<S> {
    fn clone(&self) -> Self {
        Tensor { inner: Arc::clone(&self.inner) }
    }
}

impl<S: Scalar> std::fmt::Debug for Tensor<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("id", &self.inner.id)
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad)
            .finish()
    }
}

/// Which valid reverse topological order `backward` walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopoOrder {
    /// Decreasing node-creation order.
    ReverseCreation,
    /// Reversed depth-first postorder from the output node.
    DfsPostorder,
}

impl<S: Scalar> Tensor<S> {
    pub fn from_vec(shape: Vec<usize>, data: Vec<S>, requires_grad: bool) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {:?} does not match buffer length {}",
            shape,
            data.len()
        );
        Tensor {
            inner: Arc::new(TensorData {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data: RwLock::new(data),
                grad: RwLock::new(None),
                requires_grad,
                op: None,
            }),
        }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor::from_vec(shape, vec![S::zero(); n], false)
    }

    pub fn full(shape: Vec<usize>, value: S) -> Self {
        let n = shape.iter().product();
        Tensor::from_vec(shape, vec![value; n], false)
    }

    pub fn scalar(value: S) -> Self {
        Tensor::from_vec(vec![1], vec![value], false)
    }

    pub(crate) fn from_op(
        shape: Vec<usize>,
        data: Vec<S>,
        parents: Vec<Tensor<S>>,
        backward: impl Fn(&[S]) + Send + Sync + 'static,
    ) -> Self {
        let record = is_grad_enabled() && parents.iter().any(|p| p.requires_grad());
        assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor {
            inner: Arc::new(TensorData {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data: RwLock::new(data),
                grad: RwLock::new(None),
                requires_grad: record,
                op: record.then(|| BackwardStep { parents, apply: Box::new(backward) }),
            }),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn len(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub(crate) fn same_node(&self, other: &Tensor<S>) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    /// Copy of the tensor's buffer.
    pub fn data(&self) -> Vec<S> {
        self.inner.data.read().unwrap().clone()
    }

    /// Runs `f` over the tensor's buffer without copying.
    pub fn with_data<R>(&self, f: impl FnOnce(&[S]) -> R) -> R {
        f(&self.inner.data.read().unwrap())
    }

    /// Runs `f` over two buffers, tolerating `a` and `b` aliasing.
    pub(crate) fn with_data2<R>(a: &Tensor<S>, b: &Tensor<S>, f: impl FnOnce(&[S], &[S]) -> R) -> R {
        let da = a.inner.data.read().unwrap();
        if a.same_node(b) {
            f(&da, &da)
        } else {
            let db = b.inner.data.read().unwrap();
            f(&da, &db)
        }
    }

    /// In-place mutation of the buffer; used by optimizers and loaders.
    pub fn with_data_mut<R>(&self, f: impl FnOnce(&mut [S]) -> R) -> R {
        f(&mut self.inner.data.write().unwrap())
    }

    pub fn set_data(&self, values: &[S]) {
        let mut guard = self.inner.data.write().unwrap();
        assert_eq!(guard.len(), values.len(), "set_data length mismatch");
        guard.copy_from_slice(values);
    }

    /// Copy of the accumulated gradient, if any.
    pub fn grad(&self) -> Option<Vec<S>> {
        self.inner.grad.read().unwrap().clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.write().unwrap() = None;
    }

    /// Accumulates into the gradient buffer, materializing zeros on first use.
    pub(crate) fn with_grad_mut(&self, f: impl FnOnce(&mut [S])) {
        let mut guard = self.inner.grad.write().unwrap();
        let g = guard.get_or_insert_with(|| vec![S::zero(); self.len()]);
        f(g);
    }

    pub(crate) fn accumulate_grad(&self, delta: &[S]) {
        self.with_grad_mut(|g| {
            for (gi, di) in g.iter_mut().zip(delta) {
                *gi += *di;
            }
        });
    }

    /// Reverse-mode gradient propagation seeded with ones at `self`.
    pub fn backward(&self) {
        self.backward_ordered(TopoOrder::ReverseCreation);
    }

    /// `backward` with an explicit processing order; both orders are valid
    /// reverse topological orders and must agree on the result.
    pub fn backward_ordered(&self, order: TopoOrder) {
        if !self.requires_grad() {
            return;
        }
        self.with_grad_mut(|g| {
            for v in g.iter_mut() {
                *v = S::one();
            }
        });

        let nodes = match order {
            TopoOrder::ReverseCreation => {
                let mut nodes = self.reachable();
                nodes.sort_by(|a, b| b.inner.id.cmp(&a.inner.id));
                nodes
            }
            TopoOrder::DfsPostorder => {
                let mut seen = HashSet::new();
                let mut post = Vec::new();
                let mut stack: Vec<(Tensor<S>, usize)> = vec![(self.clone(), 0)];
                seen.insert(self.inner.id);
                while let Some((node, child_idx)) = stack.pop() {
                    let parents: &[Tensor<S>] =
                        node.inner.op.as_ref().map(|o| o.parents.as_slice()).unwrap_or(&[]);
                    if child_idx < parents.len() {
                        let next = parents[child_idx].clone();
                        stack.push((node, child_idx + 1));
                        if next.requires_grad() && seen.insert(next.inner.id) {
                            stack.push((next, 0));
                        }
                    } else {
                        post.push(node);
                    }
                }
                post.reverse();
                post
            }
        };

        for node in nodes {
            if let Some(op) = &node.inner.op {
                let grad = node.inner.grad.read().unwrap();
                if let Some(g) = grad.as_ref() {
                    (op.apply)(g);
                }
            }
        }
    }

    /// All nodes requiring grad reachable from `self`, including `self`.
    fn reachable(&self) -> Vec<Tensor<S>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![self.clone()];
        seen.insert(self.inner.id);
        while let Some(node) = stack.pop() {
            if let Some(op) = &node.inner.op {
                for p in &op.parents {
                    if p.requires_grad() && seen.insert(p.inner.id) {
                        stack.push(p.clone());
                    }
                }
            }
            out.push(node);
        }
        out
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> S {
        assert_eq!(self.len(), 1, "item() requires a single-element tensor");
        self.inner.data.read().unwrap()[0]
    }

    /// Leaf copy of this tensor's values, detached from the graph.
    pub fn detach(&self) -> Tensor<S> {
        Tensor::from_vec(self.inner.shape.clone(), self.data(), false)
    }

    pub(crate) fn check_rank(&self, op: &'static str, rank: usize) -> Result<(), NnError> {
        if self.shape().len() != rank {
            return Err(NnError::shape(op, format!("rank-{rank} tensor"), format!("{:?}", self.shape())));
        }
        Ok(())
    }

    pub(crate) fn dims3(&self, op: &'static str) -> Result<(usize, usize, usize), NnError> {
        self.check_rank(op, 3)?;
        Ok((self.shape()[0], self.shape()[1], self.shape()[2]))
    }

    pub(crate) fn dims2(&self, op: &'static str) -> Result<(usize, usize), NnError> {
        self.check_rank(op, 2)?;
        Ok((self.shape()[0], self.shape()[1]))
    }
}
