//! Define-by-run reverse-mode differentiation over dense vectors.
//!
//! A [`Tape`] is built fresh for every forward pass. Each operation appends a
//! node whose value lives in a single arena; [`Tape::backward`] walks the
//! nodes in reverse and routes adjoints back to the parameters that were
//! pulled onto the tape with [`Tape::param`].

use std::fmt;

use crate::compute::{Gradients, ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Copy, PartialEq, Eq)]
struct Shape {
    rows: usize,
    cols: usize,
    matrix: bool,
}

impl Shape {
    fn vector(n: usize) -> Self {
        Shape { rows: n, cols: 1, matrix: false }
    }

    fn len(self) -> usize {
        self.rows * self.cols
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.matrix {
            write!(f, "[{}, {}]", self.rows, self.cols)
        } else {
            write!(f, "[{}]", self.rows)
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param,
    Affine { w: Var, x: Var, b: Option<Var> },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Concat(Vec<Var>),
    Slice { src: Var, start: usize },
    Softmax(Var),
    Dot(Var, Var),
    WeightedSum { weights: Var, items: Vec<Var> },
    Sum(Var),
    AddN(Vec<Var>),
    CrossEntropy { logits: Var, target: usize },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param => "param",
            Op::Affine { .. } => "affine",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Concat(_) => "concat",
            Op::Slice { .. } => "slice",
            Op::Softmax(_) => "softmax",
            Op::Dot(..) => "dot",
            Op::WeightedSum { .. } => "weighted_sum",
            Op::Sum(_) => "sum",
            Op::AddN(_) => "add_n",
            Op::CrossEntropy { .. } => "cross_entropy",
        }
    }
}

struct Node {
    op: Op,
    offset: usize,
    shape: Shape,
}

pub struct Tape<'p> {
    params: &'p ParamSet,
    param_nodes: Vec<Option<Var>>,
    nodes: Vec<Node>,
    values: Vec<f64>,
}

/// Numerically stable softmax written into `out`.
pub fn softmax_into(input: &[f64], out: &mut [f64]) {
    let max = input.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(input) {
        *o = (x - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Softmax of a plain slice.
pub fn softmax(input: &[f64]) -> Result<Vec<f64>> {
    if input.is_empty() {
        return Err(Error::Domain("softmax of an empty vector".into()));
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("softmax input is not finite".into()));
    }
    let mut out = vec![0.0; input.len()];
    softmax_into(input, &mut out);
    Ok(out)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Tape {
            params,
            param_nodes: vec![None; params.len()],
            nodes: Vec::with_capacity(256),
            values: Vec::with_capacity(4096),
        }
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let n = &self.nodes[v.0];
        &self.values[n.offset..n.offset + n.shape.len()]
    }

    pub fn len_of(&self, v: Var) -> usize {
        self.nodes[v.0].shape.len()
    }

    /// Value of a single-element node.
    pub fn scalar(&self, v: Var) -> Result<f64> {
        let vals = self.value(v);
        if vals.len() != 1 {
            return Err(Error::Contract(format!(
                "expected a scalar, node has {} elements",
                vals.len()
            )));
        }
        Ok(vals[0])
    }

    fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].shape
    }

    /// Appends a node whose value is produced by `fill`, rejecting non-finite
    /// results so that NaN never propagates silently.
    fn push<F>(&mut self, op: Op, shape: Shape, fill: F) -> Result<Var>
    where
        F: FnOnce(&[f64], &mut [f64]),
    {
        let offset = self.values.len();
        let n = shape.len();
        self.values.resize(offset + n, 0.0);
        let (before, out) = self.values.split_at_mut(offset);
        fill(before, out);
        let id = self.nodes.len();
        if out.iter().any(|v| !v.is_finite()) {
            self.values.truncate(offset);
            return Err(Error::Numeric { node: id, op: op.name() });
        }
        self.nodes.push(Node { op, offset, shape });
        Ok(Var(id))
    }

    fn expect_vector(&self, op: &'static str, v: Var) -> Result<usize> {
        let s = self.shape(v);
        if s.matrix {
            return Err(Error::dim(op, s, "a vector"));
        }
        Ok(s.rows)
    }

    fn same_len(&self, op: &'static str, a: Var, b: Var) -> Result<usize> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != sb.len() || sa.matrix || sb.matrix {
            return Err(Error::dim(op, sa, sb));
        }
        Ok(sa.rows)
    }

    pub fn input(&mut self, data: &[f64]) -> Result<Var> {
        if data.is_empty() {
            return Err(Error::Domain("empty input vector".into()));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite input at index {pos}")));
        }
        self.push(Op::Input, Shape::vector(data.len()), |_, out| out.copy_from_slice(data))
    }

    pub fn input_tensor(&mut self, t: &Tensor) -> Result<Var> {
        match t.shape() {
            [_] => self.input(t.data()),
            [r, c] => {
                let (r, c) = (*r, *c);
                let shape = Shape { rows: r, cols: c, matrix: true };
                self.push(Op::Input, shape, |_, out| out.copy_from_slice(t.data()))
            }
            s => Err(Error::Domain(format!("tape supports rank 1 and 2, got {s:?}"))),
        }
    }

    /// Pulls a parameter onto the tape. Repeated calls return the same node so
    /// that gradients over shared weights accumulate in one place.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        let p = self.params.get(id);
        let shape = match p.value.shape() {
            [n] => Shape::vector(*n),
            [r, c] => Shape { rows: *r, cols: *c, matrix: true },
            other => panic!("parameter `{}` has unsupported rank {other:?}", p.name),
        };
        let data = p.value.data();
        let v = self
            .push(Op::Param, shape, |_, out| out.copy_from_slice(data))
            .expect("parameter tensors are finite by construction");
        self.param_nodes[id.0] = Some(v);
        v
    }

    /// `W·x + b` for `W` of shape `[m, n]`, `x` of length `n`, `b` of length `m`.
    pub fn affine(&mut self, w: Var, x: Var, b: Option<Var>) -> Result<Var> {
        let sw = self.shape(w);
        let sx = self.shape(x);
        if !sw.matrix || sx.matrix || sw.cols != sx.rows {
            return Err(Error::dim("affine", sw, sx));
        }
        if let Some(b) = b {
            let sb = self.shape(b);
            if sb.matrix || sb.rows != sw.rows {
                return Err(Error::dim("affine bias", sw, sb));
            }
        }
        let (m, n) = (sw.rows, sw.cols);
        let (wo, xo) = (self.nodes[w.0].offset, self.nodes[x.0].offset);
        let bo = b.map(|b| self.nodes[b.0].offset);
        self.push(Op::Affine { w, x, b }, Shape::vector(m), |vals, out| {
            let xs = &vals[xo..xo + n];
            for (i, o) in out.iter_mut().enumerate() {
                let row = &vals[wo + i * n..wo + (i + 1) * n];
                let mut acc = bo.map_or(0.0, |bo| vals[bo + i]);
                for (wij, xj) in row.iter().zip(xs) {
                    acc += wij * xj;
                }
                *o = acc;
            }
        })
    }

    fn binary(&mut self, op: Op, a: Var, b: Var, f: fn(f64, f64) -> f64) -> Result<Var> {
        let n = self.same_len(op.name(), a, b)?;
        let (ao, bo) = (self.nodes[a.0].offset, self.nodes[b.0].offset);
        self.push(op, Shape::vector(n), |vals, out| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = f(vals[ao + i], vals[bo + i]);
            }
        })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Add(a, b), a, b, |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Sub(a, b), a, b, |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Mul(a, b), a, b, |x, y| x * y)
    }

    fn unary(&mut self, op: Op, a: Var, f: impl Fn(f64) -> f64) -> Result<Var> {
        let n = self.expect_vector(op.name(), a)?;
        let ao = self.nodes[a.0].offset;
        self.push(op, Shape::vector(n), |vals, out| {
            for (o, &x) in out.iter_mut().zip(&vals[ao..ao + n]) {
                *o = f(x);
            }
        })
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        self.unary(Op::Scale(a, factor), a, |x| x * factor)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.unary(Op::Sigmoid(a), a, sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.unary(Op::Tanh(a), a, f64::tanh)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.unary(Op::Relu(a), a, |x| x.max(0.0))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let n = self.expect_vector("softmax", a)?;
        let ao = self.nodes[a.0].offset;
        self.push(Op::Softmax(a), Shape::vector(n), |vals, out| {
            softmax_into(&vals[ao..ao + n], out)
        })
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Domain("concat of zero parts".into()));
        }
        let mut total = 0;
        for &p in parts {
            total += self.expect_vector("concat", p)?;
        }
        let spans: Vec<(usize, usize)> = parts
            .iter()
            .map(|p| (self.nodes[p.0].offset, self.nodes[p.0].shape.len()))
            .collect();
        self.push(Op::Concat(parts.to_vec()), Shape::vector(total), |vals, out| {
            let mut at = 0;
            for (off, len) in spans {
                out[at..at + len].copy_from_slice(&vals[off..off + len]);
                at += len;
            }
        })
    }

    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Result<Var> {
        let n = self.expect_vector("slice", src)?;
        if len == 0 || start + len > n {
            return Err(Error::dim("slice", Shape::vector(n), format!("{start}..{}", start + len)));
        }
        let so = self.nodes[src.0].offset + start;
        self.push(Op::Slice { src, start }, Shape::vector(len), |vals, out| {
            out.copy_from_slice(&vals[so..so + len])
        })
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let n = self.same_len("dot", a, b)?;
        let (ao, bo) = (self.nodes[a.0].offset, self.nodes[b.0].offset);
        self.push(Op::Dot(a, b), Shape::vector(1), |vals, out| {
            out[0] = (0..n).map(|i| vals[ao + i] * vals[bo + i]).sum();
        })
    }

    /// `Σ_t weights[t] · items[t]` over equally sized vectors.
    pub fn weighted_sum(&mut self, weights: Var, items: &[Var]) -> Result<Var> {
        let t = self.expect_vector("weighted_sum", weights)?;
        if t != items.len() || items.is_empty() {
            return Err(Error::dim("weighted_sum", Shape::vector(t), format!("{} items", items.len())));
        }
        let width = self.expect_vector("weighted_sum", items[0])?;
        for &it in items {
            if self.shape(it) != Shape::vector(width) {
                return Err(Error::dim("weighted_sum", Shape::vector(width), self.shape(it)));
            }
        }
        let wo = self.nodes[weights.0].offset;
        let offs: Vec<usize> = items.iter().map(|v| self.nodes[v.0].offset).collect();
        self.push(
            Op::WeightedSum { weights, items: items.to_vec() },
            Shape::vector(width),
            |vals, out| {
                for (k, off) in offs.iter().enumerate() {
                    let w = vals[wo + k];
                    for (o, x) in out.iter_mut().zip(&vals[*off..off + width]) {
                        *o += w * x;
                    }
                }
            },
        )
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let n = self.expect_vector("sum", a)?;
        let ao = self.nodes[a.0].offset;
        self.push(Op::Sum(a), Shape::vector(1), |vals, out| {
            out[0] = vals[ao..ao + n].iter().sum();
        })
    }

    /// Elementwise sum of equally sized vectors.
    pub fn add_n(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| Error::Domain("add_n of zero parts".into()))?;
        let n = self.expect_vector("add_n", first)?;
        for &p in parts {
            self.same_len("add_n", first, p)?;
        }
        let offs: Vec<usize> = parts.iter().map(|v| self.nodes[v.0].offset).collect();
        self.push(Op::AddN(parts.to_vec()), Shape::vector(n), |vals, out| {
            for off in offs {
                for (o, x) in out.iter_mut().zip(&vals[off..off + n]) {
                    *o += x;
                }
            }
        })
    }

    /// `-log softmax(logits)[target]`, computed with log-sum-exp.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let n = self.expect_vector("cross_entropy", logits)?;
        if target >= n {
            return Err(Error::dim("cross_entropy", Shape::vector(n), format!("target {target}")));
        }
        let lo = self.nodes[logits.0].offset;
        self.push(Op::CrossEntropy { logits, target }, Shape::vector(1), |vals, out| {
            let z = &vals[lo..lo + n];
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            out[0] = lse - z[target];
        })
    }

    /// Reverse sweep from a scalar `loss`. Parameters never reached get zero
    /// gradient.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let ls = self.shape(loss);
        if ls.len() != 1 {
            return Err(Error::Contract(format!("backward needs a scalar loss, got shape {ls}")));
        }
        let mut adj = vec![0.0; self.values.len()];
        adj[self.nodes[loss.0].offset] = 1.0;
        let vals = &self.values;

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            let off = node.offset;
            let len = node.shape.len();
            let (lower, upper) = adj.split_at_mut(off);
            let g = &upper[..len];
            if g.iter().all(|&x| x == 0.0) {
                continue;
            }
            if g.iter().any(|x: &f64| !x.is_finite()) {
                return Err(Error::Numeric { node: idx, op: node.op.name() });
            }
            let at = |v: &Var| self.nodes[v.0].offset;
            let y = &vals[off..off + len];
            match &node.op {
                Op::Input | Op::Param => {}
                Op::Affine { w, x, b } => {
                    let n = self.nodes[x.0].shape.len();
                    let (wo, xo) = (at(w), at(x));
                    for (i, &gi) in g.iter().enumerate() {
                        if gi == 0.0 {
                            continue;
                        }
                        let row = wo + i * n;
                        for j in 0..n {
                            lower[row + j] += gi * vals[xo + j];
                            lower[xo + j] += gi * vals[row + j];
                        }
                    }
                    if let Some(b) = b {
                        let bo = at(b);
                        for (i, &gi) in g.iter().enumerate() {
                            lower[bo + i] += gi;
                        }
                    }
                }
                Op::Add(a, b) => {
                    let (ao, bo) = (at(a), at(b));
                    for (i, &gi) in g.iter().enumerate() {
                        lower[ao + i] += gi;
                        lower[bo + i] += gi;
                    }
                }
                Op::Sub(a, b) => {
                    let (ao, bo) = (at(a), at(b));
                    for (i, &gi) in g.iter().enumerate() {
                        lower[ao + i] += gi;
                        lower[bo + i] -= gi;
                    }
                }
                Op::Mul(a, b) => {
                    let (ao, bo) = (at(a), at(b));
                    for (i, &gi) in g.iter().enumerate() {
                        let (va, vb) = (vals[ao + i], vals[bo + i]);
                        lower[ao + i] += gi * vb;
                        lower[bo + i] += gi * va;
                    }
                }
                Op::Scale(a, c) => {
                    let ao = at(a);
                    for (i, &gi) in g.iter().enumerate() {
                        lower[ao + i] += gi * c;
                    }
                }
                Op::Sigmoid(a) => {
                    let ao = at(a);
                    for (i, &gi) in g.iter().enumerate() {
                        lower[ao + i] += gi * y[i] * (1.0 - y[i]);
                    }
                }
                Op::Tanh(a) => {
                    let ao = at(a);
                    for (i, &gi) in g.iter().enumerate() {
                        lower[ao + i] += gi * (1.0 - y[i] * y[i]);
                    }
                }
                Op::Relu(a) => {
                    let ao = at(a);
                    for (i, &gi) in g.iter().enumerate() {
                        if vals[ao + i] > 0.0 {
                            lower[ao + i] += gi;
                        }
                    }
                }
                Op::Concat(parts) => {
                    let mut pos = 0;
                    for p in parts {
                        let (po, pl) = (at(p), self.nodes[p.0].shape.len());
                        for k in 0..pl {
                            lower[po + k] += g[pos + k];
                        }
                        pos += pl;
                    }
                }
                Op::Slice { src, start } => {
                    let so = at(src) + start;
                    for (k, &gk) in g.iter().enumerate() {
                        lower[so + k] += gk;
                    }
                }
                Op::Softmax(a) => {
                    let ao = at(a);
                    let inner: f64 = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                    for i in 0..len {
                        lower[ao + i] += y[i] * (g[i] - inner);
                    }
                }
                Op::Dot(a, b) => {
                    let (ao, bo) = (at(a), at(b));
                    let n = self.nodes[a.0].shape.len();
                    for i in 0..n {
                        let (va, vb) = (vals[ao + i], vals[bo + i]);
                        lower[ao + i] += g[0] * vb;
                        lower[bo + i] += g[0] * va;
                    }
                }
                Op::WeightedSum { weights, items } => {
                    let wo = at(weights);
                    for (k, it) in items.iter().enumerate() {
                        let io = at(it);
                        let w = vals[wo + k];
                        let mut dw = 0.0;
                        for i in 0..len {
                            dw += g[i] * vals[io + i];
                            lower[io + i] += w * g[i];
                        }
                        lower[wo + k] += dw;
                    }
                }
                Op::Sum(a) => {
                    let ao = at(a);
                    let n = self.nodes[a.0].shape.len();
                    for i in 0..n {
                        lower[ao + i] += g[0];
                    }
                }
                Op::AddN(parts) => {
                    for p in parts {
                        let po = at(p);
                        for (i, &gi) in g.iter().enumerate() {
                            lower[po + i] += gi;
                        }
                    }
                }
                Op::CrossEntropy { logits, target } => {
                    let lo = at(logits);
                    let n = self.nodes[logits.0].shape.len();
                    let mut p = vec![0.0; n];
                    softmax_into(&vals[lo..lo + n], &mut p);
                    for (i, pi) in p.iter().enumerate() {
                        let onehot = if i == *target { 1.0 } else { 0.0 };
                        lower[lo + i] += g[0] * (pi - onehot);
                    }
                }
            }
        }

        let mut grads = self.params.zero_gradients();
        for (pid, node) in self.param_nodes.iter().enumerate() {
            if let Some(v) = node {
                let n = &self.nodes[v.0];
                let src = &adj[n.offset..n.offset + n.shape.len()];
                if src.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Numeric { node: v.0, op: "param" });
                }
                grads.grads[pid].copy_from_slice(src);
            }
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_with(entries: &[(&str, Tensor)]) -> (ParamSet, Vec<ParamId>) {
        let mut ps = ParamSet::new();
        let ids = entries
            .iter()
            .map(|(n, t)| ps.add(*n, t.clone()).unwrap())
            .collect();
        (ps, ids)
    }

    #[test]
    fn affine_identity_and_hand_multiply() {
        let (ps, ids) = set_with(&[
            ("eye", Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap()),
            ("zero", Tensor::vector(vec![0.0, 0.0]).unwrap()),
            ("w", Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()),
            ("b", Tensor::vector(vec![1.0, 1.0]).unwrap()),
        ]);
        let mut tape = Tape::new(&ps);
        let x = tape.input(&[3.0, -1.0]).unwrap();
        let (eye, zero) = (tape.param(ids[0]), tape.param(ids[1]));
        let y = tape.affine(eye, x, Some(zero)).unwrap();
        assert_eq!(tape.value(y), &[3.0, -1.0]);

        let ones = tape.input(&[1.0, 1.0]).unwrap();
        let (w, b) = (tape.param(ids[2]), tape.param(ids[3]));
        let y = tape.affine(w, ones, Some(b)).unwrap();
        // [1+2+1, 3+4+1]
        assert_eq!(tape.value(y), &[4.0, 8.0]);

        let bad = tape.input(&[1.0, 2.0, 3.0]).unwrap();
        let err = tape.affine(w, bad, Some(b)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 2]") && msg.contains("[3]"), "{msg}");
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let p = softmax(&[0.0, 3f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        let a = softmax(&[0.3, -1.2, 2.0]).unwrap();
        let b = softmax(&[100.3, 98.8, 102.0]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(matches!(softmax(&[]), Err(Error::Domain(_))));
        // large magnitudes stay finite thanks to max subtraction
        let big = softmax(&[1000.0, 0.0]).unwrap();
        assert_eq!(big, vec![1.0, 0.0]);
    }

    #[test]
    fn sum_of_leaf_gives_ones() {
        let (ps, ids) = set_with(&[
            ("x", Tensor::vector(vec![0.5, -2.0, 7.0]).unwrap()),
            ("unused", Tensor::vector(vec![1.0]).unwrap()),
        ]);
        let mut tape = Tape::new(&ps);
        let x = tape.param(ids[0]);
        let _ = tape.param(ids[1]);
        let loss = tape.sum(x).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(ids[0]), &[1.0, 1.0, 1.0]);
        assert_eq!(g.get(ids[1]), &[0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let x = tape.input(&[1.0, 2.0]).unwrap();
        assert!(matches!(tape.backward(x), Err(Error::Contract(_))));
    }

    #[test]
    fn overflow_is_reported_as_numeric_error() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let x = tape.input(&[1e300, 1e300]).unwrap();
        let err = tape.dot(x, x).unwrap_err();
        assert!(matches!(err, Error::Numeric { node: 1, op: "dot" }), "{err}");
    }

    #[test]
    fn cross_entropy_matches_log_softmax() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let z = tape.input(&[0.0, 3f64.ln()]).unwrap();
        let l = tape.cross_entropy(z, 1).unwrap();
        assert!((tape.scalar(l).unwrap() + 0.75f64.ln()).abs() < 1e-14);
    }
}
