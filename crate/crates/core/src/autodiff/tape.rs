use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `a + b` with `b` a `1 x k` row broadcast over the rows of `a`.
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    LeakyRelu(Var, f64),
    Abs(Var),
    Square(Var),
    /// Mean over all entries, `1 x 1` result.
    Mean(Var),
}

struct Node {
    op: Op,
    value: Array2<f64>,
}

/// Append-only record of a tensor computation. Nodes only refer to earlier
/// nodes, so one reverse sweep computes every gradient.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every node of a tape.
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient of `v`; exact zeros if the loss does not depend on it.
    pub fn wrt(&self, v: Var) -> Array2<f64> {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => Array2::zeros(self.shapes[v.0]),
        }
    }

    pub fn take(&mut self, v: Var) -> Array2<f64> {
        self.grads[v.0].take().unwrap_or_else(|| Array2::zeros(self.shapes[v.0]))
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    // Subgradient of |x| at 0 is taken as 0.
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Array2<f64>) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// Scalar value of a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(Op::MatMul(a, b), v)
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let v = self.value(a) + self.value(row);
        self.push(Op::AddRow(a, row), v)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(Op::Mul(a, b), v)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a) * s;
        self.push(Op::Scale(a, s), v)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x.max(0.0));
        self.push(Op::Relu(a), v)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).mapv(|x| if x > 0.0 { x } else { slope * x });
        self.push(Op::LeakyRelu(a, slope), v)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::abs);
        self.push(Op::Abs(a), v)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x * x);
        self.push(Op::Square(a), v)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let m = x.sum() / x.len() as f64;
        self.push(Op::Mean(a), Array2::from_elem((1, 1), m))
    }

    /// Reverse sweep from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let (rows, cols) = self.value(loss).dim();
        if (rows, cols) != (1, 1) {
            return Err(Error::NonScalarLoss { rows, cols });
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Array2::ones((1, 1)));

        fn acc(grads: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
            match &mut grads[v.0] {
                Some(existing) => *existing += &g,
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let keep = g.clone();
            match self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(b).t());
                    let gb = self.value(a).t().dot(&g);
                    acc(&mut grads, a, ga);
                    acc(&mut grads, b, gb);
                }
                Op::AddRow(a, row) => {
                    let gr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, row, gr);
                    acc(&mut grads, a, g);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, b, g.clone());
                    acc(&mut grads, a, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, b, -&g);
                    acc(&mut grads, a, g);
                }
                Op::Mul(a, b) => {
                    let ga = &g * self.value(b);
                    let gb = &g * self.value(a);
                    acc(&mut grads, a, ga);
                    acc(&mut grads, b, gb);
                }
                Op::Scale(a, s) => acc(&mut grads, a, g * s),
                Op::Relu(a) => {
                    let mut g = g;
                    g.zip_mut_with(self.value(a), |g, &x| {
                        if x <= 0.0 {
                            *g = 0.0
                        }
                    });
                    acc(&mut grads, a, g);
                }
                Op::LeakyRelu(a, slope) => {
                    let mut g = g;
                    g.zip_mut_with(self.value(a), |g, &x| {
                        if x <= 0.0 {
                            *g *= slope
                        }
                    });
                    acc(&mut grads, a, g);
                }
                Op::Abs(a) => {
                    let mut g = g;
                    g.zip_mut_with(self.value(a), |g, &x| *g *= sign(x));
                    acc(&mut grads, a, g);
                }
                Op::Square(a) => {
                    let mut g = g;
                    g.zip_mut_with(self.value(a), |g, &x| *g *= 2.0 * x);
                    acc(&mut grads, a, g);
                }
                Op::Mean(a) => {
                    let shape = self.value(a).dim();
                    let n = (shape.0 * shape.1) as f64;
                    acc(&mut grads, a, Array2::from_elem(shape, g[[0, 0]] / n));
                }
            }
            grads[idx] = Some(keep);
        }
        let shapes = self.nodes[..=loss.0].iter().map(|n| n.value.dim()).collect();
        Ok(Gradients { grads, shapes })
    }
}
