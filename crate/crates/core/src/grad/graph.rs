use super::tensor::{matmul_acc, matmul_at_acc, matmul_bt_acc, Tensor};
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A scalar field sampled on a regular grid of cell centers.
///
/// Cell `(ix, iy)` has its center at `((ix + 0.5) * resolution, (iy + 0.5) * resolution)`.
#[derive(Clone, Copy, Debug)]
pub struct FieldRef<'a> {
    pub data: &'a [f64],
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Concat(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    Reshape(Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Mean(Var),
    Sum(Var),
    Mse(Var, Var),
    Clip01(Var),
    CumsumRows(Var),
    /// Per-sample partial derivatives of the interpolated value w.r.t. (x, y).
    Bilinear(Var, Vec<[f64; 2]>),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Tape of eagerly evaluated operations. Nodes are appended in topological
/// order, so the reverse pass is a single backwards sweep.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    clamped_samples: usize,
}

/// Gradients produced by [`Graph::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.get_mut(var.0).and_then(|g| g.take())
    }
}

fn broadcast_ok(a: &Tensor, b: &Tensor) -> bool {
    a.len() == b.len() || (b.rows() == 1 && b.cols() == a.cols())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drop every node from index `len` on. Vars created before the cut stay valid.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
    }

    /// Number of bilinear samples that fell outside the field and were clamped.
    pub fn clamped_samples(&self) -> usize {
        self.clamped_samples
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A trainable leaf; its gradient is reported by `backward`.
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(Op::Leaf, t, true)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Op::Leaf, t, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        if tb.rows() != k {
            return Err(Error::shape("matmul", format!("{:?} x {:?}", ta.shape(), tb.shape())));
        }
        let mut out = vec![0.0; m * n];
        matmul_acc(ta.data(), tb.data(), &mut out, m, k, n);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::MatMul(a, b), Tensor::matrix(m, n, out)?, rg))
    }

    fn binary(&mut self, name: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !broadcast_ok(ta, tb) {
            return Err(Error::shape(name, format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let mut out = ta.clone();
        if ta.len() == tb.len() {
            for (o, &y) in out.data_mut().iter_mut().zip(tb.data()) {
                *o = f(*o, y);
            }
        } else {
            let c = tb.cols();
            for (i, o) in out.data_mut().iter_mut().enumerate() {
                *o = f(*o, tb.data()[i % c]);
            }
        }
        Ok(out)
    }

    /// Elementwise sum. `b` may also be a single row broadcast over the rows of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary("add", a, b, |x, y| x + y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Add(a, b), out, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary("sub", a, b, |x, y| x - y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Sub(a, b), out, rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).len() != self.value(b).len() {
            return Err(Error::shape(
                "mul",
                format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        let out = self.binary("mul", a, b, |x, y| x * y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Mul(a, b), out, rg))
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let mut out = self.value(a).clone();
        out.data_mut().iter_mut().for_each(|v| *v = f(*v));
        let rg = self.rg(a);
        self.push(op, out, rg)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Scale(a, c), |x| x * c)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::AddScalar(a), |x| x + c)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), |x| 1.0 / (1.0 + (-x).exp()))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    /// Clamp to `[0, 1]`; gradient passes only strictly inside the interval.
    pub fn clip01(&mut self, a: Var) -> Var {
        self.unary(a, Op::Clip01(a), |x| x.clamp(0.0, 1.0))
    }

    /// Concatenate along the last dimension.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(Error::Empty("concat"))?;
        let rows = self.value(first).rows();
        let mut cols = 0;
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(Error::shape(
                    "concat",
                    format!("row counts {} vs {}", rows, self.value(p).rows()),
                ));
            }
            cols += self.value(p).cols();
        }
        let mut out = vec![0.0; rows * cols];
        let mut offset = 0;
        for &p in parts {
            let t = self.value(p);
            let c = t.cols();
            for r in 0..rows {
                out[r * cols + offset..r * cols + offset + c].copy_from_slice(t.row_slice(r));
            }
            offset += c;
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Op::Concat(parts.to_vec()), Tensor::matrix(rows, cols, out)?, rg))
    }

    /// Columns `start..end` of every row.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let t = self.value(a);
        if start >= end || end > t.cols() {
            return Err(Error::shape("slice", format!("cols {start}..{end} of {:?}", t.shape())));
        }
        let (rows, w) = (t.rows(), end - start);
        let mut out = Vec::with_capacity(rows * w);
        for r in 0..rows {
            out.extend_from_slice(&t.row_slice(r)[start..end]);
        }
        let rg = self.rg(a);
        Ok(self.push(Op::SliceCols(a, start), Tensor::matrix(rows, w, out)?, rg))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let t = self.value(a);
        if start >= end || end > t.rows() {
            return Err(Error::shape("slice", format!("rows {start}..{end} of {:?}", t.shape())));
        }
        let c = t.cols();
        let out = t.data()[start * c..end * c].to_vec();
        let rg = self.rg(a);
        Ok(self.push(Op::SliceRows(a, start), Tensor::matrix(end - start, c, out)?, rg))
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let out = self.value(a).clone().reshaped(shape)?;
        let rg = self.rg(a);
        Ok(self.push(Op::Reshape(a), out, rg))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let m = t.data().iter().sum::<f64>() / t.len() as f64;
        let rg = self.rg(a);
        self.push(Op::Mean(a), Tensor::scalar(m), rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum::<f64>();
        let rg = self.rg(a);
        self.push(Op::Sum(a), Tensor::scalar(s), rg)
    }

    /// Mean squared difference over all elements.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.len() != tb.len() {
            return Err(Error::shape("mse", format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let s: f64 = ta.data().iter().zip(tb.data()).map(|(x, y)| (x - y) * (x - y)).sum();
        let m = s / ta.len() as f64;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Mse(a, b), Tensor::scalar(m), rg))
    }

    /// Running sum down the rows: `out[i] = sum_{r <= i} a[r]`.
    pub fn cumsum_rows(&mut self, a: Var) -> Var {
        let mut out = self.value(a).clone();
        let c = out.cols();
        let d = out.data_mut();
        for i in c..d.len() {
            d[i] += d[i - c];
        }
        let rg = self.rg(a);
        self.push(Op::CumsumRows(a), out, rg)
    }

    /// Bilinear interpolation of `field` at the K points in `xy` (shape `[K, 2]`,
    /// meters). Returns `[K, 1]`. Points outside the lattice of cell centers are
    /// clamped to the border, get zero positional gradient, and are counted in
    /// [`Graph::clamped_samples`].
    pub fn bilinear_sample(&mut self, field: FieldRef<'_>, xy: Var) -> Result<Var> {
        let t = self.value(xy);
        if t.cols() != 2 {
            return Err(Error::shape("bilinear_sample", format!("{:?}", t.shape())));
        }
        if field.width == 0 || field.height == 0 || field.data.len() != field.width * field.height {
            return Err(Error::shape("bilinear_sample", "empty or inconsistent field"));
        }
        let k = t.rows();
        let mut values = Vec::with_capacity(k);
        let mut partials = Vec::with_capacity(k);
        let mut clamped = 0;
        for r in 0..k {
            let (v, d, c) = bilinear(&field, t.get(r, 0), t.get(r, 1));
            values.push(v);
            partials.push(d);
            clamped += c as usize;
        }
        self.clamped_samples += clamped;
        let rg = self.rg(xy);
        Ok(self.push(Op::Bilinear(xy, partials), Tensor::matrix(k, 1, values)?, rg))
    }

    /// Reverse sweep from a scalar `loss`. Gradients are freshly zeroed for
    /// every call.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if !lt.is_scalar() {
            return Err(Error::NonScalarLoss(lt.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(lt.shape().to_vec(), 1.0));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let g = match &grads[i] {
                Some(g) => g.clone(),
                None => continue,
            };
            self.propagate(node, &g, &mut grads);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, delta: Tensor) {
        if !self.rg(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn with_grad(&self, v: Var) -> Tensor {
        Tensor::zeros(self.value(v).shape().to_vec())
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                if self.rg(*a) {
                    let mut da = self.with_grad(*a);
                    matmul_bt_acc(g.data(), tb.data(), da.data_mut(), m, k, n);
                    self.accumulate(grads, *a, da);
                }
                if self.rg(*b) {
                    let mut db = self.with_grad(*b);
                    matmul_at_acc(ta.data(), g.data(), db.data_mut(), m, k, n);
                    self.accumulate(grads, *b, db);
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                self.accumulate(grads, *a, g.clone().reshaped(self.value(*a).shape().to_vec()).unwrap());
                if self.rg(*b) {
                    let mut db = self.with_grad(*b);
                    let c = db.cols();
                    let n = db.len();
                    for (i, &gv) in g.data().iter().enumerate() {
                        db.data_mut()[if n == g.len() { i } else { i % c }] += sign * gv;
                    }
                    self.accumulate(grads, *b, db);
                }
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                if self.rg(*a) {
                    let mut da = self.with_grad(*a);
                    for ((d, &gv), &y) in da.data_mut().iter_mut().zip(g.data()).zip(tb.data()) {
                        *d = gv * y;
                    }
                    self.accumulate(grads, *a, da);
                }
                if self.rg(*b) {
                    let mut db = self.with_grad(*b);
                    for ((d, &gv), &x) in db.data_mut().iter_mut().zip(g.data()).zip(ta.data()) {
                        *d = gv * x;
                    }
                    self.accumulate(grads, *b, db);
                }
            }
            Op::Scale(a, c) => {
                let mut d = g.clone();
                d.data_mut().iter_mut().for_each(|v| *v *= c);
                self.accumulate(grads, *a, d);
            }
            Op::AddScalar(a) | Op::Reshape(a) => {
                let d = g.clone().reshaped(self.value(*a).shape().to_vec()).unwrap();
                self.accumulate(grads, *a, d);
            }
            Op::Concat(parts) => {
                let cols = out.cols();
                let rows = out.rows();
                let mut offset = 0;
                for &p in parts {
                    let c = self.value(p).cols();
                    if self.rg(p) {
                        let mut d = self.with_grad(p);
                        for r in 0..rows {
                            d.data_mut()[r * c..(r + 1) * c]
                                .copy_from_slice(&g.data()[r * cols + offset..r * cols + offset + c]);
                        }
                        self.accumulate(grads, p, d);
                    }
                    offset += c;
                }
            }
            Op::SliceCols(a, start) => {
                let mut d = self.with_grad(*a);
                let (w, src_cols) = (out.cols(), d.cols());
                for r in 0..out.rows() {
                    d.data_mut()[r * src_cols + start..r * src_cols + start + w].copy_from_slice(g.row_slice(r));
                }
                self.accumulate(grads, *a, d);
            }
            Op::SliceRows(a, start) => {
                let mut d = self.with_grad(*a);
                let c = d.cols();
                d.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                self.accumulate(grads, *a, d);
            }
            Op::Tanh(a) => {
                let mut d = g.clone();
                for (dv, &y) in d.data_mut().iter_mut().zip(out.data()) {
                    *dv *= 1.0 - y * y;
                }
                self.accumulate(grads, *a, d);
            }
            Op::Sigmoid(a) => {
                let mut d = g.clone();
                for (dv, &y) in d.data_mut().iter_mut().zip(out.data()) {
                    *dv *= y * (1.0 - y);
                }
                self.accumulate(grads, *a, d);
            }
            Op::Exp(a) => {
                let mut d = g.clone();
                for (dv, &y) in d.data_mut().iter_mut().zip(out.data()) {
                    *dv *= y;
                }
                self.accumulate(grads, *a, d);
            }
            Op::Clip01(a) => {
                let mut d = g.clone();
                for (dv, &x) in d.data_mut().iter_mut().zip(self.value(*a).data()) {
                    if !(x > 0.0 && x < 1.0) {
                        *dv = 0.0;
                    }
                }
                self.accumulate(grads, *a, d);
            }
            Op::Mean(a) | Op::Sum(a) => {
                let n = self.value(*a).len() as f64;
                let scale = if matches!(node.op, Op::Mean(_)) { 1.0 / n } else { 1.0 };
                let d = Tensor::full(self.value(*a).shape().to_vec(), g.item() * scale);
                self.accumulate(grads, *a, d);
            }
            Op::Mse(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let k = 2.0 * g.item() / ta.len() as f64;
                let mut da = self.with_grad(*a);
                for ((d, &x), &y) in da.data_mut().iter_mut().zip(ta.data()).zip(tb.data()) {
                    *d = k * (x - y);
                }
                if self.rg(*b) {
                    let mut db = da.clone().reshaped(tb.shape().to_vec()).unwrap();
                    db.data_mut().iter_mut().for_each(|v| *v = -*v);
                    self.accumulate(grads, *b, db);
                }
                self.accumulate(grads, *a, da);
            }
            Op::CumsumRows(a) => {
                let mut d = g.clone();
                let c = d.cols();
                let data = d.data_mut();
                for i in (0..data.len().saturating_sub(c)).rev() {
                    data[i] += data[i + c];
                }
                self.accumulate(grads, *a, d);
            }
            Op::Bilinear(xy, partials) => {
                let mut d = self.with_grad(*xy);
                for (r, p) in partials.iter().enumerate() {
                    let gv = g.data()[r];
                    d.data_mut()[2 * r] = gv * p[0];
                    d.data_mut()[2 * r + 1] = gv * p[1];
                }
                self.accumulate(grads, *xy, d);
            }
        }
    }
}

fn axis(coord: f64, resolution: f64, n: usize) -> (usize, usize, f64, bool) {
    let u = coord / resolution - 0.5;
    let max = (n - 1) as f64;
    let clamped = !(0.0..=max).contains(&u) || !u.is_finite();
    let u = if u.is_finite() { u.clamp(0.0, max) } else { 0.0 };
    if n == 1 {
        return (0, 0, 0.0, clamped);
    }
    let i0 = (u.floor() as usize).min(n - 2);
    (i0, i0 + 1, u - i0 as f64, clamped)
}

/// Value, (d/dx, d/dy), and whether the point was clamped.
pub(crate) fn bilinear(field: &FieldRef<'_>, x: f64, y: f64) -> (f64, [f64; 2], bool) {
    let (x0, x1, fx, cx) = axis(x, field.resolution, field.width);
    let (y0, y1, fy, cy) = axis(y, field.resolution, field.height);
    let at = |ix: usize, iy: usize| field.data[iy * field.width + ix];
    let (f00, f10, f01, f11) = (at(x0, y0), at(x1, y0), at(x0, y1), at(x1, y1));
    let v = (1.0 - fx) * (1.0 - fy) * f00 + fx * (1.0 - fy) * f10 + (1.0 - fx) * fy * f01 + fx * fy * f11;
    let clamped = cx || cy;
    let d = if clamped {
        [0.0, 0.0]
    } else {
        [
            ((1.0 - fy) * (f10 - f00) + fy * (f11 - f01)) / field.resolution,
            ((1.0 - fx) * (f01 - f00) + fx * (f11 - f10)) / field.resolution,
        ]
    };
    (v, d, clamped)
}
