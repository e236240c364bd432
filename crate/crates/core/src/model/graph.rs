//! Minimal reverse-mode differentiation over [`Matrix`] values.
//!
//! Nodes are appended in evaluation order, so the tape is already a
//! topological order and the backward pass is a single reverse sweep.

use std::collections::BTreeMap;

use super::params::ParamStore;
use super::tensor::{lin_comb, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(usize),
    MatMul(Var, Var),
    MatMulBt(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    Gather(Var, Vec<usize>),
    ConcatRows(Vec<Var>),
    MeanRows(Var, usize, usize),
    LinComb(Vec<(Var, f64)>),
    Pick(Var, usize, usize),
    Sum(Vec<Var>),
}

struct Node {
    value: Matrix,
    op: Op,
}

pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: BTreeMap<usize, Var>,
}

/// Gradient of a scalar with respect to every parameter touched by the graph.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    pub by_id: BTreeMap<usize, Matrix>,
}

impl Gradients {
    pub fn accumulate(&mut self, other: Gradients) {
        for (id, g) in other.by_id {
            match self.by_id.get_mut(&id) {
                Some(acc) => acc.add_assign(&g),
                None => {
                    self.by_id.insert(id, g);
                }
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.by_id.values_mut() {
            for x in &mut g.data {
                *x *= s;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.by_id.values().map(Matrix::squared_norm).sum::<f64>().sqrt()
    }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            param_vars: BTreeMap::new(),
        }
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn input(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Input)
    }

    /// Leaf for parameter `id`; repeated requests share one node.
    pub fn param(&mut self, id: usize) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        let v = self.push(self.params.by_id(id).clone(), Op::Param(id));
        self.param_vars.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul(self.value(b));
        self.push(value, Op::MatMul(a, b))
    }

    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul_bt(self.value(b));
        self.push(value, Op::MatMulBt(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).add(self.value(b));
        self.push(value, Op::Add(a, b))
    }

    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let value = self.value(a).add_row(self.value(bias));
        self.push(value, Op::AddRow(a, bias))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).hadamard(self.value(b));
        self.push(value, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).map(|x| x * s);
        self.push(value, Op::Scale(a, s))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        self.push(value, Op::Tanh(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let value = self.value(a).softmax_rows();
        self.push(value, Op::SoftmaxRows(a))
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let value = self.value(a).log_softmax_rows();
        self.push(value, Op::LogSoftmaxRows(a))
    }

    pub fn gather(&mut self, table: Var, ids: Vec<usize>) -> Var {
        let value = self.value(table).gather_rows(&ids);
        self.push(value, Op::Gather(table, ids))
    }

    pub fn concat_rows(&mut self, parts: Vec<Var>) -> Var {
        let value = {
            let mats: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
            Matrix::concat_rows(&mats)
        };
        self.push(value, Op::ConcatRows(parts))
    }

    pub fn mean_rows(&mut self, a: Var, start: usize, end: usize) -> Var {
        let value = self.value(a).mean_rows(start, end);
        self.push(value, Op::MeanRows(a, start, end))
    }

    /// `Σ cᵢ·vᵢ` with the same skipping rules as [`lin_comb`].
    pub fn lin_comb(&mut self, terms: Vec<(Var, f64)>) -> Var {
        let terms: Vec<(Var, f64)> = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        if let [(v, c)] = terms.as_slice() {
            if *c == 1.0 {
                return *v;
            }
        }
        let value = {
            let refs: Vec<(&Matrix, f64)> = terms.iter().map(|&(v, c)| (self.value(v), c)).collect();
            lin_comb(&refs)
        };
        self.push(value, Op::LinComb(terms))
    }

    pub fn pick(&mut self, a: Var, row: usize, col: usize) -> Var {
        let x = self.value(a).row(row)[col];
        self.push(Matrix::row_vector(vec![x]), Op::Pick(a, row, col))
    }

    /// Sum of `1 × 1` nodes.
    pub fn sum(&mut self, parts: Vec<Var>) -> Var {
        let total = parts.iter().map(|&p| self.value(p).data[0]).sum();
        self.push(Matrix::row_vector(vec![total]), Op::Sum(parts))
    }

    /// Back-propagates from the scalar node `root`.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.value(root).shape(), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Option<Matrix>> = (0..=root.0).map(|_| None).collect();
        grads[root.0] = Some(Matrix::row_vector(vec![1.0]));
        let mut out = Gradients::default();

        fn acc(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot => *slot = Some(g),
            }
        }

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => {
                    out.by_id.insert(*id, g);
                }
                Op::MatMul(a, b) => {
                    let da = g.matmul_bt(self.value(*b));
                    let db = self.value(*a).matmul_at(&g);
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::MatMulBt(a, b) => {
                    let da = g.matmul(self.value(*b));
                    let db = g.matmul_at(self.value(*a));
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::AddRow(a, bias) => {
                    let mut db = vec![0.0; g.cols];
                    for r in 0..g.rows {
                        for (d, x) in db.iter_mut().zip(g.row(r)) {
                            *d += x;
                        }
                    }
                    acc(&mut grads, *bias, Matrix::row_vector(db));
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let da = g.hadamard(self.value(*b));
                    let db = g.hadamard(self.value(*a));
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::Scale(a, s) => {
                    let s = *s;
                    acc(&mut grads, *a, g.map(|x| x * s));
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let da = Matrix::from_vec(
                        g.rows,
                        g.cols,
                        g.data.iter().zip(&y.data).map(|(gi, yi)| gi * (1.0 - yi * yi)).collect(),
                    );
                    acc(&mut grads, *a, da);
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut da = Matrix::zeros(g.rows, g.cols);
                    for r in 0..g.rows {
                        let inner = super::tensor::dot(g.row(r), y.row(r));
                        for ((d, gi), yi) in da.row_mut(r).iter_mut().zip(g.row(r)).zip(y.row(r)) {
                            *d = yi * (gi - inner);
                        }
                    }
                    acc(&mut grads, *a, da);
                }
                Op::LogSoftmaxRows(a) => {
                    let y = &node.value;
                    let mut da = Matrix::zeros(g.rows, g.cols);
                    for r in 0..g.rows {
                        let total: f64 = g.row(r).iter().sum();
                        for ((d, gi), yi) in da.row_mut(r).iter_mut().zip(g.row(r)).zip(y.row(r)) {
                            *d = gi - yi.exp() * total;
                        }
                    }
                    acc(&mut grads, *a, da);
                }
                Op::Gather(table, ids) => {
                    let shape = self.value(*table).shape();
                    let mut dt = Matrix::zeros(shape.0, shape.1);
                    for (r, &id) in ids.iter().enumerate() {
                        for (d, x) in dt.row_mut(id).iter_mut().zip(g.row(r)) {
                            *d += x;
                        }
                    }
                    acc(&mut grads, *table, dt);
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let rows = self.value(p).rows;
                        let slice = g.data[offset * g.cols..(offset + rows) * g.cols].to_vec();
                        acc(&mut grads, p, Matrix::from_vec(rows, g.cols, slice));
                        offset += rows;
                    }
                }
                Op::MeanRows(a, start, end) => {
                    let shape = self.value(*a).shape();
                    let n = (end - start + 1) as f64;
                    let mut da = Matrix::zeros(shape.0, shape.1);
                    for r in *start..=*end {
                        for (d, x) in da.row_mut(r).iter_mut().zip(&g.data) {
                            *d = x / n;
                        }
                    }
                    acc(&mut grads, *a, da);
                }
                Op::LinComb(terms) => {
                    for &(v, c) in terms {
                        acc(&mut grads, v, g.map(|x| x * c));
                    }
                }
                Op::Pick(a, row, col) => {
                    let shape = self.value(*a).shape();
                    let mut da = Matrix::zeros(shape.0, shape.1);
                    da.row_mut(*row)[*col] = g.data[0];
                    acc(&mut grads, *a, da);
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        acc(&mut grads, p, g.clone());
                    }
                }
            }
        }
        out
    }
}
