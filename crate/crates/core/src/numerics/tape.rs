//! Reverse-mode tape. Every op computes its value eagerly and records its
//! inputs; `backward` walks the tape once in reverse.

use std::cell::RefCell;

use super::tensor::{gemm_acc, gemm_nt_acc, gemm_tn_acc, numel, Tensor};
use super::NumericsError;

type Res<T> = Result<T, NumericsError>;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddRows(usize, usize),
    MulScalarVar(usize, usize),
    Scale(usize, f64),
    Offset(usize),
    MatMul { a: usize, b: usize, m: usize, k: usize, n: usize },
    Concat { inputs: Vec<usize>, outer: usize, inners: Vec<usize> },
    Slice { input: usize, outer: usize, dim: usize, inner: usize, start: usize, len: usize },
    Reshape(usize),
    Softmax { input: usize, outer: usize, dim: usize, inner: usize },
    Sigmoid(usize),
    Tanh(usize),
    Exp(usize),
    Ln(usize),
    Sum(usize),
    Mean(usize),
    Gather { input: usize, rows: Vec<usize>, width: usize },
    Scatter { input: usize, index: Vec<usize> },
    Minimum(usize, usize),
    Clamp { input: usize, lo: f64, hi: f64 },
    Mask { input: usize, mask: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a tape.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

/// Gradients of one scalar with respect to every recorded value.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var<'_>) -> Option<&[f64]> {
        self.grads.get(v.id).and_then(|g| g.as_deref())
    }

    /// Gradient or zeros when the value did not influence the output.
    pub fn get_or_zeros(&self, v: Var<'_>) -> Vec<f64> {
        self.get(v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; v.numel()])
    }
}

fn same_shape(op: &'static str, a: &[usize], b: &[usize]) -> Res<()> {
    if a != b {
        return Err(NumericsError::shape(op, format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

fn axis_split(op: &'static str, shape: &[usize], axis: usize) -> Res<(usize, usize, usize)> {
    if axis >= shape.len() {
        return Err(NumericsError::shape(op, format!("axis {axis} out of range for {shape:?}")));
    }
    Ok((numel(&shape[..axis]), shape[axis], numel(&shape[axis + 1..])))
}

fn acc(dst: &mut Option<Vec<f64>>, len: usize) -> &mut Vec<f64> {
    dst.get_or_insert_with(|| vec![0.0; len])
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, shape: Vec<usize>, value: Vec<f64>, op: Op) -> Var<'_> {
        debug_assert_eq!(numel(&shape), value.len());
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { shape, value, op });
        Var { tape: self, id: nodes.len() - 1 }
    }

    pub fn leaf(&self, t: Tensor) -> Var<'_> {
        let (shape, data) = t.into_parts();
        self.push(shape, data, Op::Leaf)
    }

    pub fn scalar(&self, v: f64) -> Var<'_> {
        self.leaf(Tensor::scalar(v))
    }

    pub fn vector(&self, v: Vec<f64>) -> Var<'_> {
        self.leaf(Tensor::vector(v))
    }

    pub fn zeros(&self, shape: &[usize]) -> Var<'_> {
        self.leaf(Tensor::zeros(shape))
    }

    pub fn filled(&self, shape: &[usize], value: f64) -> Var<'_> {
        self.leaf(Tensor::filled(shape, value))
    }

    fn unary(&self, a: Var<'_>, f: impl Fn(f64) -> f64, op: Op) -> Var<'_> {
        let (shape, value) = {
            let nodes = self.nodes.borrow();
            let n = &nodes[a.id];
            (n.shape.clone(), n.value.iter().map(|&x| f(x)).collect())
        };
        self.push(shape, value, op)
    }

    fn binary(&self, name: &'static str, a: Var<'_>, b: Var<'_>, f: impl Fn(f64, f64) -> f64, op: Op) -> Res<Var<'_>> {
        let (shape, value) = {
            let nodes = self.nodes.borrow();
            let (x, y) = (&nodes[a.id], &nodes[b.id]);
            same_shape(name, &x.shape, &y.shape)?;
            (x.shape.clone(), x.value.iter().zip(&y.value).map(|(&p, &q)| f(p, q)).collect())
        };
        Ok(self.push(shape, value, op))
    }

    /// Reverse sweep from a single-element output.
    pub fn backward(&self, output: Var<'_>) -> Res<Gradients> {
        let nodes = self.nodes.borrow();
        if nodes[output.id].value.len() != 1 {
            return Err(NumericsError::shape("backward", format!("output has shape {:?}", nodes[output.id].shape)));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.id + 1];
        grads[output.id] = Some(vec![1.0]);

        for id in (0..=output.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            let len = |i: usize| nodes[i].value.len();
            match &node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    for (d, x) in acc(&mut grads[*a], len(*a)).iter_mut().zip(&g) {
                        *d += x;
                    }
                    for (d, x) in acc(&mut grads[*b], len(*b)).iter_mut().zip(&g) {
                        *d += x;
                    }
                }
                Op::Sub(a, b) => {
                    for (d, x) in acc(&mut grads[*a], len(*a)).iter_mut().zip(&g) {
                        *d += x;
                    }
                    for (d, x) in acc(&mut grads[*b], len(*b)).iter_mut().zip(&g) {
                        *d -= x;
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                    let da = acc(&mut grads[*a], va.len());
                    for i in 0..g.len() {
                        da[i] += g[i] * vb[i];
                    }
                    let db = acc(&mut grads[*b], vb.len());
                    for i in 0..g.len() {
                        db[i] += g[i] * va[i];
                    }
                }
                Op::AddRows(m, v) => {
                    let width = len(*v);
                    for (d, x) in acc(&mut grads[*m], len(*m)).iter_mut().zip(&g) {
                        *d += x;
                    }
                    let dv = acc(&mut grads[*v], width);
                    for row in g.chunks(width) {
                        for (d, x) in dv.iter_mut().zip(row) {
                            *d += x;
                        }
                    }
                }
                Op::MulScalarVar(a, s) => {
                    let sv = nodes[*s].value[0];
                    let va = &nodes[*a].value;
                    let da = acc(&mut grads[*a], va.len());
                    for i in 0..g.len() {
                        da[i] += g[i] * sv;
                    }
                    let ds: f64 = g.iter().zip(va).map(|(x, y)| x * y).sum();
                    acc(&mut grads[*s], 1)[0] += ds;
                }
                Op::Scale(a, c) => {
                    for (d, x) in acc(&mut grads[*a], len(*a)).iter_mut().zip(&g) {
                        *d += c * x;
                    }
                }
                Op::Offset(a) | Op::Reshape(a) => {
                    for (d, x) in acc(&mut grads[*a], len(*a)).iter_mut().zip(&g) {
                        *d += x;
                    }
                }
                Op::MatMul { a, b, m, k, n } => {
                    let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                    gemm_nt_acc(acc(&mut grads[*a], va.len()), &g, vb, *m, *k, *n);
                    gemm_tn_acc(acc(&mut grads[*b], vb.len()), va, &g, *m, *k, *n);
                }
                Op::Concat { inputs, outer, inners } => {
                    let total: usize = inners.iter().sum();
                    let mut offset = 0;
                    for (&input, &inner) in inputs.iter().zip(inners) {
                        let d = acc(&mut grads[input], outer * inner);
                        for o in 0..*outer {
                            for i in 0..inner {
                                d[o * inner + i] += g[o * total + offset + i];
                            }
                        }
                        offset += inner;
                    }
                }
                Op::Slice { input, outer, dim, inner, start, len: l } => {
                    let d = acc(&mut grads[*input], outer * dim * inner);
                    for o in 0..*outer {
                        for j in 0..*l {
                            for i in 0..*inner {
                                d[(o * dim + start + j) * inner + i] += g[(o * l + j) * inner + i];
                            }
                        }
                    }
                }
                Op::Softmax { input, outer, dim, inner } => {
                    let y = &node.value;
                    let d = acc(&mut grads[*input], y.len());
                    for o in 0..*outer {
                        for i in 0..*inner {
                            let at = |j: usize| (o * dim + j) * inner + i;
                            let dot: f64 = (0..*dim).map(|j| g[at(j)] * y[at(j)]).sum();
                            for j in 0..*dim {
                                d[at(j)] += y[at(j)] * (g[at(j)] - dot);
                            }
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let d = acc(&mut grads[*a], y.len());
                    for i in 0..g.len() {
                        d[i] += g[i] * y[i] * (1.0 - y[i]);
                    }
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let d = acc(&mut grads[*a], y.len());
                    for i in 0..g.len() {
                        d[i] += g[i] * (1.0 - y[i] * y[i]);
                    }
                }
                Op::Exp(a) => {
                    let y = &node.value;
                    let d = acc(&mut grads[*a], y.len());
                    for i in 0..g.len() {
                        d[i] += g[i] * y[i];
                    }
                }
                Op::Ln(a) => {
                    let x = &nodes[*a].value;
                    let d = acc(&mut grads[*a], x.len());
                    for i in 0..g.len() {
                        d[i] += g[i] / x[i];
                    }
                }
                Op::Sum(a) => {
                    for d in acc(&mut grads[*a], len(*a)).iter_mut() {
                        *d += g[0];
                    }
                }
                Op::Mean(a) => {
                    let n = len(*a);
                    for d in acc(&mut grads[*a], n).iter_mut() {
                        *d += g[0] / n as f64;
                    }
                }
                Op::Gather { input, rows, width } => {
                    let d = acc(&mut grads[*input], len(*input));
                    for (k, &r) in rows.iter().enumerate() {
                        for i in 0..*width {
                            d[r * width + i] += g[k * width + i];
                        }
                    }
                }
                Op::Scatter { input, index } => {
                    let d = acc(&mut grads[*input], index.len());
                    for (k, &t) in index.iter().enumerate() {
                        d[k] += g[t];
                    }
                }
                Op::Minimum(a, b) => {
                    let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                    let mut da = vec![0.0; va.len()];
                    let mut db = vec![0.0; vb.len()];
                    for i in 0..g.len() {
                        if va[i] <= vb[i] {
                            da[i] = g[i];
                        } else {
                            db[i] = g[i];
                        }
                    }
                    for (d, x) in acc(&mut grads[*a], va.len()).iter_mut().zip(&da) {
                        *d += x;
                    }
                    for (d, x) in acc(&mut grads[*b], vb.len()).iter_mut().zip(&db) {
                        *d += x;
                    }
                }
                Op::Clamp { input, lo, hi } => {
                    let x = &nodes[*input].value;
                    let d = acc(&mut grads[*input], x.len());
                    for i in 0..g.len() {
                        if x[i] >= *lo && x[i] <= *hi {
                            d[i] += g[i];
                        }
                    }
                }
                Op::Mask { input, mask } => {
                    let d = acc(&mut grads[*input], mask.len());
                    for i in 0..g.len() {
                        d[i] += g[i] * mask[i];
                    }
                }
            }
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

#[allow(clippy::should_implement_trait)]
impl<'t> Var<'t> {
    pub fn id(self) -> usize {
        self.id
    }

    pub fn tape(self) -> &'t Tape {
        self.tape
    }

    pub fn shape(self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].shape.clone()
    }

    pub fn numel(self) -> usize {
        self.tape.nodes.borrow()[self.id].value.len()
    }

    pub fn value(self) -> Vec<f64> {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn tensor(self) -> Tensor {
        let nodes = self.tape.nodes.borrow();
        let n = &nodes[self.id];
        Tensor::new(n.shape.clone(), n.value.clone()).expect("tape values match their shapes")
    }

    /// The single element of a one-element value.
    pub fn item(self) -> f64 {
        self.tape.nodes.borrow()[self.id].value[0]
    }

    pub fn add(self, other: Var<'t>) -> Res<Var<'t>> {
        self.tape.binary("add", self, other, |a, b| a + b, Op::Add(self.id, other.id))
    }

    pub fn sub(self, other: Var<'t>) -> Res<Var<'t>> {
        self.tape.binary("sub", self, other, |a, b| a - b, Op::Sub(self.id, other.id))
    }

    pub fn mul(self, other: Var<'t>) -> Res<Var<'t>> {
        self.tape.binary("mul", self, other, |a, b| a * b, Op::Mul(self.id, other.id))
    }

    pub fn minimum(self, other: Var<'t>) -> Res<Var<'t>> {
        self.tape.binary("minimum", self, other, f64::min, Op::Minimum(self.id, other.id))
    }

    /// Adds a vector to every row of a matrix (or to a vector of the same length).
    pub fn add_rows(self, v: Var<'t>) -> Res<Var<'t>> {
        let (shape, value) = {
            let nodes = self.tape.nodes.borrow();
            let (m, b) = (&nodes[self.id], &nodes[v.id]);
            let width = b.value.len();
            if b.shape.len() != 1 || m.shape.last() != Some(&width) {
                return Err(NumericsError::shape("add_rows", format!("{:?} + {:?}", m.shape, b.shape)));
            }
            let value = m.value.chunks(width).flat_map(|row| row.iter().zip(&b.value).map(|(x, y)| x + y)).collect();
            (m.shape.clone(), value)
        };
        Ok(self.tape.push(shape, value, Op::AddRows(self.id, v.id)))
    }

    /// Multiplies every element by a one-element value.
    pub fn mul_scalar(self, s: Var<'t>) -> Res<Var<'t>> {
        let (shape, value) = {
            let nodes = self.tape.nodes.borrow();
            let (a, c) = (&nodes[self.id], &nodes[s.id]);
            if c.value.len() != 1 {
                return Err(NumericsError::shape("mul_scalar", format!("scalar operand has shape {:?}", c.shape)));
            }
            (a.shape.clone(), a.value.iter().map(|x| x * c.value[0]).collect())
        };
        Ok(self.tape.push(shape, value, Op::MulScalarVar(self.id, s.id)))
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        self.tape.unary(self, |x| c * x, Op::Scale(self.id, c))
    }

    pub fn offset(self, c: f64) -> Var<'t> {
        self.tape.unary(self, |x| x + c, Op::Offset(self.id))
    }

    pub fn neg(self) -> Var<'t> {
        self.scale(-1.0)
    }

    /// `[m×k]·[k×n]` or `[m×k]·[k]`; a vector left operand is treated as one row.
    pub fn matmul(self, other: Var<'t>) -> Res<Var<'t>> {
        let (shape, value, m, k, n) = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id], &nodes[other.id]);
            let (m, k, a_vec) = match a.shape[..] {
                [m, k] => (m, k, false),
                [k] => (1, k, true),
                _ => return Err(NumericsError::shape("matmul", format!("left operand {:?}", a.shape))),
            };
            let (kb, n, b_vec) = match b.shape[..] {
                [kb, n] => (kb, n, false),
                [kb] => (kb, 1, true),
                _ => return Err(NumericsError::shape("matmul", format!("right operand {:?}", b.shape))),
            };
            if k != kb {
                return Err(NumericsError::shape("matmul", format!("{:?} x {:?}", a.shape, b.shape)));
            }
            let mut out = vec![0.0; m * n];
            gemm_acc(&mut out, &a.value, &b.value, m, k, n);
            let shape = match (a_vec, b_vec) {
                (false, false) => vec![m, n],
                (false, true) => vec![m],
                (true, false) => vec![n],
                (true, true) => vec![],
            };
            (shape, out, m, k, n)
        };
        Ok(self.tape.push(shape, value, Op::MatMul { a: self.id, b: other.id, m, k, n }))
    }

    pub fn concat(parts: &[Var<'t>], axis: usize) -> Res<Var<'t>> {
        let first = parts.first().ok_or_else(|| NumericsError::shape("concat", "no inputs"))?;
        let tape = first.tape;
        let (shape, value, outer, inners) = {
            let nodes = tape.nodes.borrow();
            let base = &nodes[first.id].shape;
            if axis >= base.len() {
                return Err(NumericsError::shape("concat", format!("axis {axis} out of range for {base:?}")));
            }
            let mut shape = base.clone();
            shape[axis] = 0;
            let outer = numel(&base[..axis]);
            let mut inners = Vec::with_capacity(parts.len());
            for p in parts {
                let s = &nodes[p.id].shape;
                if s.len() != base.len() || s[..axis] != base[..axis] || s[axis + 1..] != base[axis + 1..] {
                    return Err(NumericsError::shape("concat", format!("{base:?} vs {s:?} on axis {axis}")));
                }
                shape[axis] += s[axis];
                inners.push(numel(&s[axis..]));
            }
            let mut value = Vec::with_capacity(numel(&shape));
            for o in 0..outer {
                for (p, &inner) in parts.iter().zip(&inners) {
                    value.extend_from_slice(&nodes[p.id].value[o * inner..(o + 1) * inner]);
                }
            }
            (shape, value, outer, inners)
        };
        let inputs = parts.iter().map(|p| p.id).collect();
        Ok(tape.push(shape, value, Op::Concat { inputs, outer, inners }))
    }

    pub fn slice(self, axis: usize, start: usize, len: usize) -> Res<Var<'t>> {
        let (shape, value, outer, dim, inner) = {
            let nodes = self.tape.nodes.borrow();
            let a = &nodes[self.id];
            let (outer, dim, inner) = axis_split("slice", &a.shape, axis)?;
            if start + len > dim {
                return Err(NumericsError::shape("slice", format!("{start}..{} exceeds {dim}", start + len)));
            }
            let mut shape = a.shape.clone();
            shape[axis] = len;
            let mut value = Vec::with_capacity(outer * len * inner);
            for o in 0..outer {
                value.extend_from_slice(&a.value[(o * dim + start) * inner..(o * dim + start + len) * inner]);
            }
            (shape, value, outer, dim, inner)
        };
        Ok(self.tape.push(shape, value, Op::Slice { input: self.id, outer, dim, inner, start, len }))
    }

    /// Splits along `axis` into consecutive pieces of the given sizes.
    pub fn split(self, axis: usize, sizes: &[usize]) -> Res<Vec<Var<'t>>> {
        let mut start = 0;
        let mut out = Vec::with_capacity(sizes.len());
        for &s in sizes {
            out.push(self.slice(axis, start, s)?);
            start += s;
        }
        let dim = self.shape().get(axis).copied().unwrap_or(0);
        if start != dim {
            return Err(NumericsError::shape("split", format!("sizes sum to {start}, axis has {dim}")));
        }
        Ok(out)
    }

    pub fn reshape(self, shape: &[usize]) -> Res<Var<'t>> {
        let value = {
            let nodes = self.tape.nodes.borrow();
            let a = &nodes[self.id];
            if numel(shape) != a.value.len() {
                return Err(NumericsError::shape("reshape", format!("{:?} -> {shape:?}", a.shape)));
            }
            a.value.clone()
        };
        Ok(self.tape.push(shape.to_vec(), value, Op::Reshape(self.id)))
    }

    pub fn softmax(self, axis: usize) -> Res<Var<'t>> {
        let (shape, value, outer, dim, inner) = {
            let nodes = self.tape.nodes.borrow();
            let a = &nodes[self.id];
            let (outer, dim, inner) = axis_split("softmax", &a.shape, axis)?;
            let mut y = vec![0.0; a.value.len()];
            for o in 0..outer {
                for i in 0..inner {
                    let at = |j: usize| (o * dim + j) * inner + i;
                    let max = (0..dim).map(|j| a.value[at(j)]).fold(f64::NEG_INFINITY, f64::max);
                    let mut total = 0.0;
                    for j in 0..dim {
                        let e = (a.value[at(j)] - max).exp();
                        y[at(j)] = e;
                        total += e;
                    }
                    for j in 0..dim {
                        y[at(j)] /= total;
                    }
                }
            }
            (a.shape.clone(), y, outer, dim, inner)
        };
        Ok(self.tape.push(shape, value, Op::Softmax { input: self.id, outer, dim, inner }))
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.tape.unary(self, |x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid(self.id))
    }

    pub fn tanh(self) -> Var<'t> {
        self.tape.unary(self, f64::tanh, Op::Tanh(self.id))
    }

    pub fn exp(self) -> Var<'t> {
        self.tape.unary(self, f64::exp, Op::Exp(self.id))
    }

    pub fn ln(self) -> Var<'t> {
        self.tape.unary(self, f64::ln, Op::Ln(self.id))
    }

    pub fn clamp(self, lo: f64, hi: f64) -> Var<'t> {
        self.tape.unary(self, |x| x.clamp(lo, hi), Op::Clamp { input: self.id, lo, hi })
    }

    /// Elementwise product with a constant mask (dropout).
    pub fn mask(self, mask: Vec<f64>) -> Res<Var<'t>> {
        if mask.len() != self.numel() {
            return Err(NumericsError::shape("mask", format!("{} values for {:?}", mask.len(), self.shape())));
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            nodes[self.id].value.iter().zip(&mask).map(|(x, m)| x * m).collect()
        };
        Ok(self.tape.push(self.shape(), value, Op::Mask { input: self.id, mask }))
    }

    pub fn sum(self) -> Var<'t> {
        let s = self.tape.nodes.borrow()[self.id].value.iter().sum();
        self.tape.push(vec![], vec![s], Op::Sum(self.id))
    }

    pub fn mean(self) -> Var<'t> {
        let s = {
            let nodes = self.tape.nodes.borrow();
            let v = &nodes[self.id].value;
            v.iter().sum::<f64>() / v.len() as f64
        };
        self.tape.push(vec![], vec![s], Op::Mean(self.id))
    }

    /// Picks rows of a matrix (or elements of a vector) by index.
    pub fn gather_rows(self, rows: &[usize]) -> Res<Var<'t>> {
        let (shape, value, width) = {
            let nodes = self.tape.nodes.borrow();
            let a = &nodes[self.id];
            let (n, width) = match a.shape[..] {
                [n, w] => (n, w),
                [n] => (n, 1),
                _ => return Err(NumericsError::shape("gather_rows", format!("input {:?}", a.shape))),
            };
            let mut value = Vec::with_capacity(rows.len() * width);
            for &r in rows {
                if r >= n {
                    return Err(NumericsError::shape("gather_rows", format!("row {r} of {n}")));
                }
                value.extend_from_slice(&a.value[r * width..(r + 1) * width]);
            }
            let shape = if a.shape.len() == 2 { vec![rows.len(), width] } else { vec![rows.len()] };
            (shape, value, width)
        };
        Ok(self.tape.push(shape, value, Op::Gather { input: self.id, rows: rows.to_vec(), width }))
    }

    /// `out[index[k]] += self[k]` into a zero vector of length `len`.
    pub fn scatter_add(self, index: &[usize], len: usize) -> Res<Var<'t>> {
        let value = {
            let nodes = self.tape.nodes.borrow();
            let a = &nodes[self.id];
            if a.value.len() != index.len() {
                return Err(NumericsError::shape("scatter_add", format!("{} values, {} indices", a.value.len(), index.len())));
            }
            let mut out = vec![0.0; len];
            for (&x, &t) in a.value.iter().zip(index) {
                if t >= len {
                    return Err(NumericsError::shape("scatter_add", format!("index {t} of {len}")));
                }
                out[t] += x;
            }
            out
        };
        Ok(self.tape.push(vec![len], value, Op::Scatter { input: self.id, index: index.to_vec() }))
    }
}
