//! Define-by-run reverse-mode differentiation over dense arrays.
//!
//! A [`Tape`] records operations during the forward pass and replays them
//! in reverse to accumulate adjoints. Values are `batch x width` matrices;
//! scalars are 1x1. The tape is rebuilt for every forward pass.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Exponential linear unit: `z` for `z > 0`, `alpha * (e^z - 1)` otherwise.
pub fn elu(z: f64, alpha: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        alpha * (z.exp() - 1.0)
    }
}

/// Derivative of [`elu`]. At `z = 0` the right-hand derivative 1 is used.
pub fn elu_prime(z: f64, alpha: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        alpha * z.exp()
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// `x . W^T + b`, with `W` of shape `[out, in]` and `b` of shape `[1, out]`.
    Linear {
        input: NodeId,
        weights: NodeId,
        bias: NodeId,
    },
    Elu {
        input: NodeId,
        alpha: f64,
    },
    Add(NodeId, NodeId),
    /// Add a 1-row vector to every row of a matrix.
    AddRow(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Exp(NodeId),
    Clamp {
        input: NodeId,
        lo: f64,
        hi: f64,
    },
    /// Wrap every entry to (-pi, pi]; backward is the identity.
    WrapAngle(NodeId),
    /// Sum of all entries, produces a 1x1 node.
    Sum(NodeId),
    ConcatCols(NodeId, NodeId),
    SliceCols {
        input: NodeId,
        start: usize,
        end: usize,
    },
}

#[derive(Debug)]
struct Node {
    value: Array2<f64>,
    grad: Option<Array2<f64>>,
    op: Op,
}

/// A recording of one forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            value,
            grad: None,
            op,
        });
        id
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// Leaf holding a single row vector.
    pub fn leaf_row(&mut self, row: &[f64]) -> NodeId {
        let value = Array2::from_shape_vec((1, row.len()), row.to_vec())
            .expect("row shape is consistent by construction");
        self.leaf(value)
    }

    pub fn scalar(&mut self, v: f64) -> NodeId {
        self.leaf(Array2::from_elem((1, 1), v))
    }

    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id.0].value
    }

    /// Adjoint accumulated by the last [`Tape::backward`] call.
    pub fn grad(&self, id: NodeId) -> &Array2<f64> {
        self.nodes[id.0]
            .grad
            .as_ref()
            .expect("grad requested before backward")
    }

    fn shape(&self, id: NodeId) -> (usize, usize) {
        let s = self.nodes[id.0].value.dim();
        (s.0, s.1)
    }

    fn check_same_shape(&self, context: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if (ar, ac) != (br, bc) {
            return Err(Error::dim(context, ar * ac, br * bc));
        }
        Ok(())
    }

    /// Dense affine map `x . W^T + b`.
    pub fn linear(&mut self, input: NodeId, weights: NodeId, bias: NodeId) -> Result<NodeId> {
        let (_, in_dim) = self.shape(input);
        let (out_dim, w_in) = self.shape(weights);
        if w_in != in_dim {
            return Err(Error::dim("linear input", w_in, in_dim));
        }
        let (b_rows, b_cols) = self.shape(bias);
        if b_rows != 1 || b_cols != out_dim {
            return Err(Error::dim("linear bias", out_dim, b_rows * b_cols));
        }
        let mut value = self.nodes[input.0].value.dot(&self.nodes[weights.0].value.t());
        value += &self.nodes[bias.0].value;
        Ok(self.push(
            value,
            Op::Linear {
                input,
                weights,
                bias,
            },
        ))
    }

    pub fn elu(&mut self, input: NodeId, alpha: f64) -> Result<NodeId> {
        if alpha <= 0.0 {
            return Err(Error::config(format!("elu alpha must be > 0, got {alpha}")));
        }
        let value = self.nodes[input.0].value.mapv(|z| elu(z, alpha));
        Ok(self.push(value, Op::Elu { input, alpha }))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_same_shape("add", a, b)?;
        let value = &self.nodes[a.0].value + &self.nodes[b.0].value;
        Ok(self.push(value, Op::Add(a, b)))
    }

    /// Broadcast-add row vector `row` (shape 1 x n) to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (_, ac) = self.shape(a);
        let (rr, rc) = self.shape(row);
        if rr != 1 || rc != ac {
            return Err(Error::dim("add_row", ac, rr * rc));
        }
        let value = &self.nodes[a.0].value + &self.nodes[row.0].value;
        Ok(self.push(value, Op::AddRow(a, row)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_same_shape("sub", a, b)?;
        let value = &self.nodes[a.0].value - &self.nodes[b.0].value;
        Ok(self.push(value, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_same_shape("mul", a, b)?;
        let value = &self.nodes[a.0].value * &self.nodes[b.0].value;
        Ok(self.push(value, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let value = self.nodes[a.0].value.mapv(|v| v * c);
        self.push(value, Op::Scale(a, c))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a.0].value.mapv(f64::exp);
        self.push(value, Op::Exp(a))
    }

    pub fn clamp(&mut self, input: NodeId, lo: f64, hi: f64) -> NodeId {
        let value = self.nodes[input.0].value.mapv(|v| v.clamp(lo, hi));
        self.push(value, Op::Clamp { input, lo, hi })
    }

    pub fn wrap_angle(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a.0].value.mapv(wrap_to_pi);
        self.push(value, Op::WrapAngle(a))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let total = self.nodes[a.0].value.sum();
        self.push(Array2::from_elem((1, 1), total), Op::Sum(a))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ar != br {
            return Err(Error::dim("concat_cols rows", ar, br));
        }
        let mut value = Array2::zeros((ar, ac + bc));
        value
            .slice_mut(ndarray::s![.., ..ac])
            .assign(&self.nodes[a.0].value);
        value
            .slice_mut(ndarray::s![.., ac..])
            .assign(&self.nodes[b.0].value);
        Ok(self.push(value, Op::ConcatCols(a, b)))
    }

    /// Columns `start..end` of `input`.
    pub fn slice_cols(&mut self, input: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let (_, cols) = self.shape(input);
        if start > end || end > cols {
            return Err(Error::dim("slice_cols", cols, end));
        }
        let value = self.nodes[input.0]
            .value
            .slice(ndarray::s![.., start..end])
            .to_owned();
        Ok(self.push(value, Op::SliceCols { input, start, end }))
    }

    /// Reverse pass from a scalar root. Clears any adjoints from previous
    /// passes first, so repeated calls from the same root are idempotent.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        let (r, c) = self.shape(root);
        if (r, c) != (1, 1) {
            return Err(Error::Contract(format!(
                "backward root must be scalar, got shape {r}x{c}"
            )));
        }
        for node in &mut self.nodes {
            let dim = node.value.raw_dim();
            node.grad = Some(Array2::zeros(dim));
        }
        *self.nodes[root.0]
            .grad
            .as_mut()
            .expect("just initialized")
            .get_mut((0, 0))
            .expect("root is 1x1") = 1.0;

        for i in (0..=root.0).rev() {
            let g = self.nodes[i]
                .grad
                .take()
                .expect("grads initialized above");
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::Linear {
                    input,
                    weights,
                    bias,
                } => {
                    let d_input = g.dot(&self.nodes[weights.0].value);
                    let d_weights = g.t().dot(&self.nodes[input.0].value);
                    let d_bias = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    self.accumulate(input, &d_input);
                    self.accumulate(weights, &d_weights);
                    self.accumulate(bias, &d_bias);
                }
                Op::Elu { input, alpha } => {
                    let d = &g * &self.nodes[input.0].value.mapv(|z| elu_prime(z, alpha));
                    self.accumulate(input, &d);
                }
                Op::Add(a, b) => {
                    self.accumulate(a, &g);
                    self.accumulate(b, &g);
                }
                Op::AddRow(a, row) => {
                    self.accumulate(a, &g);
                    let d_row = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    self.accumulate(row, &d_row);
                }
                Op::Sub(a, b) => {
                    self.accumulate(a, &g);
                    let neg = g.mapv(|v| -v);
                    self.accumulate(b, &neg);
                }
                Op::Mul(a, b) => {
                    let da = &g * &self.nodes[b.0].value;
                    let db = &g * &self.nodes[a.0].value;
                    self.accumulate(a, &da);
                    self.accumulate(b, &db);
                }
                Op::Scale(a, c) => {
                    let d = g.mapv(|v| v * c);
                    self.accumulate(a, &d);
                }
                Op::Exp(a) => {
                    let d = &g * &self.nodes[i].value;
                    self.accumulate(a, &d);
                }
                Op::Clamp { input, lo, hi } => {
                    let mask = self.nodes[input.0].value.mapv(|v| {
                        if (lo..=hi).contains(&v) {
                            1.0
                        } else {
                            0.0
                        }
                    });
                    let d = &g * &mask;
                    self.accumulate(input, &d);
                }
                Op::WrapAngle(a) => {
                    self.accumulate(a, &g);
                }
                Op::Sum(a) => {
                    let scalar = g[(0, 0)];
                    let dim = self.nodes[a.0].value.raw_dim();
                    let d = Array2::from_elem(dim, scalar);
                    self.accumulate(a, &d);
                }
                Op::ConcatCols(a, b) => {
                    let ac = self.shape(a).1;
                    let da = g.slice(ndarray::s![.., ..ac]).to_owned();
                    let db = g.slice(ndarray::s![.., ac..]).to_owned();
                    self.accumulate(a, &da);
                    self.accumulate(b, &db);
                }
                Op::SliceCols { input, start, end } => {
                    let grad = self.nodes[input.0]
                        .grad
                        .as_mut()
                        .expect("grads initialized in backward");
                    let mut view = grad.slice_mut(ndarray::s![.., start..end]);
                    view += &g;
                }
            }
            self.nodes[i].grad = Some(g);
        }
        Ok(())
    }

    fn accumulate(&mut self, id: NodeId, delta: &Array2<f64>) {
        let grad = self.nodes[id.0]
            .grad
            .as_mut()
            .expect("grads initialized in backward");
        *grad += delta;
    }
}

/// Wrap an angle difference into (-pi, pi].
pub fn wrap_to_pi(v: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = (v + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if wrapped == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        wrapped
    }
}
