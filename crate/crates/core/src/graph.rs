//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! Every builder method evaluates its node immediately and appends it to the
//! node list, so the list is always in topological order. [`Graph::grad`]
//! walks it backwards from a scalar loss.

use crate::cae::spp;
use crate::error::{Error, Result};
use crate::ops;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param,
    Dense { x: NodeId, w: NodeId, b: NodeId },
    Conv { x: NodeId, k: NodeId, b: NodeId },
    AvgPool(NodeId),
    Upsample(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Concat(Vec<NodeId>),
    Gather { x: NodeId, columns: Vec<usize> },
    Mse { pred: NodeId, target: Tensor },
    Spp { x: NodeId, levels: Vec<usize> },
    SppInverse { x: NodeId, levels: Vec<usize> },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar loss with respect to every node that reaches it.
#[derive(Debug)]
pub struct Gradients {
    per_node: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.per_node.get(id.0).and_then(|g| g.as_ref())
    }

    /// Takes the gradient out, or zeros shaped like `like` if the node does
    /// not influence the loss.
    pub fn take_or_zeros(&mut self, id: NodeId, like: &Tensor) -> Tensor {
        self.per_node
            .get_mut(id.0)
            .and_then(Option::take)
            .unwrap_or_else(|| Tensor::zeros(like.shape()))
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Input, value)
    }

    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Param, value)
    }

    pub fn dense(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let value = ops::dense(self.value(x), self.value(w), self.value(b))?;
        Ok(self.push(Op::Dense { x, w, b }, value))
    }

    pub fn conv2d_same(&mut self, x: NodeId, k: NodeId, b: NodeId) -> Result<NodeId> {
        let value = ops::conv2d_same(self.value(x), self.value(k), self.value(b))?;
        Ok(self.push(Op::Conv { x, k, b }, value))
    }

    pub fn avg_pool2x2(&mut self, x: NodeId) -> Result<NodeId> {
        let value = ops::avg_pool2x2(self.value(x))?;
        Ok(self.push(Op::AvgPool(x), value))
    }

    pub fn upsample_nearest2x(&mut self, x: NodeId, target_h: usize, target_w: usize) -> Result<NodeId> {
        let value = ops::upsample_nearest2x(self.value(x), target_h, target_w)?;
        Ok(self.push(Op::Upsample(x), value))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let src = self.value(x);
        let value = Tensor::from_parts(src.shape().to_vec(), src.data().iter().map(|v| v.tanh()).collect());
        self.push(Op::Tanh(x), value)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let src = self.value(x);
        let value = Tensor::from_parts(src.shape().to_vec(), src.data().iter().map(|v| v.max(0.0)).collect());
        self.push(Op::Relu(x), value)
    }

    /// Flattens and concatenates the inputs into one vector.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Contract("concat needs at least one input".into()));
        }
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let n = data.len();
        Ok(self.push(Op::Concat(parts.to_vec()), Tensor::from_parts(vec![n], data)))
    }

    /// Picks `x[r, columns[r]]` from each row of a `[B, K]` matrix.
    pub fn gather(&mut self, x: NodeId, columns: &[usize]) -> Result<NodeId> {
        let src = self.value(x);
        let (rows, cols) = match src.shape()[..] {
            [r, c] => (r, c),
            _ => return Err(Error::Shape(format!("gather needs [B, K], got {:?}", src.shape()))),
        };
        if columns.len() != rows || columns.iter().any(|&c| c >= cols) {
            return Err(Error::Contract(format!(
                "gather indices {columns:?} do not fit a {rows}x{cols} input"
            )));
        }
        let data = columns.iter().enumerate().map(|(r, &c)| src.data()[r * cols + c]).collect();
        Ok(self.push(
            Op::Gather { x, columns: columns.to_vec() },
            Tensor::from_parts(vec![rows], data),
        ))
    }

    /// Mean squared error against a constant target.
    pub fn mse(&mut self, pred: NodeId, target: Tensor) -> Result<NodeId> {
        let p = self.value(pred);
        if p.len() != target.len() {
            return Err(Error::Shape(format!(
                "mse target has {} values, prediction {}",
                target.len(),
                p.len()
            )));
        }
        let n = p.len() as f64;
        let loss = p.data().iter().zip(target.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
        Ok(self.push(Op::Mse { pred, target }, Tensor::scalar(loss)))
    }

    pub fn spp(&mut self, x: NodeId, levels: &[usize]) -> Result<NodeId> {
        let value = spp::spp_forward(self.value(x), levels)?;
        Ok(self.push(Op::Spp { x, levels: levels.to_vec() }, value))
    }

    pub fn spp_inverse(&mut self, x: NodeId, levels: &[usize], maps: usize, h: usize, w: usize) -> Result<NodeId> {
        let value = spp::spp_inverse(self.value(x).data(), levels, maps, h, w)?;
        Ok(self.push(Op::SppInverse { x, levels: levels.to_vec() }, value))
    }

    /// Reverse-mode gradients of the scalar node `loss`.
    pub fn grad(&self, loss: NodeId) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "loss must be scalar, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::filled(self.value(loss).shape(), 1.0));

        fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
            match &mut grads[id.0] {
                Some(existing) => existing.add_assign(&g),
                slot => *slot = Some(g),
            }
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input | Op::Param => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::Dense { x, w, b } => {
                    let (gx, gw, gb) = ops::dense_backward(self.value(*x), self.value(*w), self.value(*b), &g)?;
                    accumulate(&mut grads, *x, gx);
                    accumulate(&mut grads, *w, gw);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Conv { x, k, b } => {
                    let (gx, gk, gb) =
                        ops::conv2d_same_backward(self.value(*x), self.value(*k), self.value(*b), &g)?;
                    accumulate(&mut grads, *x, gx);
                    accumulate(&mut grads, *k, gk);
                    accumulate(&mut grads, *b, gb);
                }
                Op::AvgPool(x) => {
                    let gx = ops::avg_pool2x2_backward(self.value(*x).shape(), &g)?;
                    accumulate(&mut grads, *x, gx);
                }
                Op::Upsample(x) => {
                    let gx = ops::upsample_nearest2x_backward(self.value(*x).shape(), &g)?;
                    accumulate(&mut grads, *x, gx);
                }
                Op::Tanh(x) => {
                    let data = g.data().iter().zip(node.value.data()).map(|(g, y)| g * (1.0 - y * y)).collect();
                    accumulate(&mut grads, *x, Tensor::from_parts(g.shape().to_vec(), data));
                }
                Op::Relu(x) => {
                    let data = g
                        .data()
                        .iter()
                        .zip(self.value(*x).data())
                        .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *x, Tensor::from_parts(g.shape().to_vec(), data));
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let src = self.value(p);
                        let slice = g.data()[offset..offset + src.len()].to_vec();
                        offset += src.len();
                        accumulate(&mut grads, p, Tensor::from_parts(src.shape().to_vec(), slice));
                    }
                }
                Op::Gather { x, columns } => {
                    let src = self.value(*x);
                    let cols = src.shape()[1];
                    let mut data = vec![0.0; src.len()];
                    for (r, &c) in columns.iter().enumerate() {
                        data[r * cols + c] = g.data()[r];
                    }
                    accumulate(&mut grads, *x, Tensor::from_parts(src.shape().to_vec(), data));
                }
                Op::Mse { pred, target } => {
                    let p = self.value(*pred);
                    let scale = 2.0 * g.data()[0] / p.len() as f64;
                    let data = p.data().iter().zip(target.data()).map(|(a, b)| scale * (a - b)).collect();
                    accumulate(&mut grads, *pred, Tensor::from_parts(p.shape().to_vec(), data));
                }
                Op::Spp { x, levels } => {
                    let gx = spp::spp_forward_backward(self.value(*x).shape(), levels, g.data())?;
                    accumulate(&mut grads, *x, gx);
                }
                Op::SppInverse { x, levels } => {
                    let (maps, h, w) = node.value.chw()?;
                    let gx = spp::spp_inverse_backward(levels, maps, h, w, &g)?;
                    let src = self.value(*x);
                    accumulate(&mut grads, *x, Tensor::from_parts(src.shape().to_vec(), gx));
                }
            }
        }
        Ok(Gradients { per_node: grads })
    }
}
