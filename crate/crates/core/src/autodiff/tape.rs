use ndarray::{Array2, Axis, Zip};

use super::params::{ParamId, ParamStore};
use super::AutodiffError;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    ScaleBy(Var, Var),
    ScaleRows(Var, Var),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    RowSoftmax(Var),
    SegmentSoftmax(Var, Vec<usize>, usize),
    LeakyRelu(Var, f64),
    Relu(Var),
    Tanh(Var),
    SegmentSum(Var, Vec<usize>),
    SegmentMean(Var, Vec<usize>, Vec<usize>),
    GatherRows(Var, Vec<usize>),
    L2Norm(Var),
    Sum(Var),
    Mean(Var),
    SoftmaxCrossEntropy(Var, Vec<usize>, Array2<f64>),
    Mse(Var, Array2<f64>),
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

/// Records a computation for reverse-mode differentiation. One tape per
/// forward pass; drop it afterwards.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients from one backward pass, indexed by parameter and by variable.
#[derive(Debug)]
pub struct Gradients {
    params: Vec<Option<Array2<f64>>>,
    vars: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn param(&self, id: ParamId) -> Option<&Array2<f64>> {
        self.params.get(id.index()).and_then(|g| g.as_ref())
    }

    pub fn var(&self, v: Var) -> Option<&Array2<f64>> {
        self.vars.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }
}

fn shape(a: &Array2<f64>) -> (usize, usize) {
    a.dim()
}

fn check_finite(op: &'static str, a: &Array2<f64>) -> Result<(), AutodiffError> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(AutodiffError::NonFinite { op })
    }
}

fn check_index(op: &'static str, idx: &[usize], len: usize) -> Result<(), AutodiffError> {
    match idx.iter().find(|&&i| i >= len) {
        Some(&index) => Err(AutodiffError::Index { op, index, len }),
        None => Ok(()),
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

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// The single entry of a 1×1 value.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    fn push(&mut self, op_name: &'static str, value: Array2<f64>, op: Op) -> Result<Var, AutodiffError> {
        check_finite(op_name, &value)?;
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    /// A value that receives a gradient but is not a parameter.
    pub fn leaf(&mut self, value: Array2<f64>) -> Result<Var, AutodiffError> {
        self.push("leaf", value, Op::Leaf)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let value = store.get(id).clone();
        self.nodes.push(Node {
            value,
            op: Op::Param(id),
        });
        Var(self.nodes.len() - 1)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), AutodiffError> {
        let (sa, sb) = (shape(self.value(a)), shape(self.value(b)));
        if sa != sb {
            return Err(AutodiffError::Shape { op, lhs: sa, rhs: sb });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (sa, sb) = (shape(self.value(a)), shape(self.value(b)));
        if sa.1 != sb.0 {
            return Err(AutodiffError::Shape {
                op: "matmul",
                lhs: sa,
                rhs: sb,
            });
        }
        let value = self.value(a).dot(self.value(b));
        self.push("matmul", value, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("add", a, b)?;
        let value = self.value(a) + self.value(b);
        self.push("add", value, Op::Add(a, b))
    }

    /// Adds a 1×c row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, AutodiffError> {
        let (sa, sr) = (shape(self.value(a)), shape(self.value(row)));
        if sr.0 != 1 || sr.1 != sa.1 {
            return Err(AutodiffError::Shape {
                op: "add_row",
                lhs: sa,
                rhs: sr,
            });
        }
        let value = self.value(a) + self.value(row);
        self.push("add_row", value, Op::AddRow(a, row))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a) - self.value(b);
        self.push("sub", value, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a) * self.value(b);
        self.push("mul", value, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var, AutodiffError> {
        let value = self.value(a) * c;
        self.push("scale", value, Op::Scale(a, c))
    }

    /// Multiplies `a` by the 1×1 value `s`.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var, AutodiffError> {
        let ss = shape(self.value(s));
        if ss != (1, 1) {
            return Err(AutodiffError::Shape {
                op: "scale_by",
                lhs: shape(self.value(a)),
                rhs: ss,
            });
        }
        let value = self.value(a) * self.value(s)[[0, 0]];
        self.push("scale_by", value, Op::ScaleBy(a, s))
    }

    /// Scales column block `h` of row `i` of `x` by `w[i, h]`. `x` has `H·k`
    /// columns for an `n×H` weight matrix `w`.
    pub fn scale_rows(&mut self, x: Var, w: Var) -> Result<Var, AutodiffError> {
        let (sx, sw) = (shape(self.value(x)), shape(self.value(w)));
        if sx.0 != sw.0 || sw.1 == 0 || sx.1 % sw.1 != 0 {
            return Err(AutodiffError::Shape {
                op: "scale_rows",
                lhs: sx,
                rhs: sw,
            });
        }
        let block = sx.1 / sw.1;
        let mut value = self.value(x).clone();
        let wv = self.value(w);
        for (i, mut row) in value.axis_iter_mut(Axis(0)).enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v *= wv[[i, j / block]];
            }
        }
        self.push("scale_rows", value, Op::ScaleRows(x, w))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = ndarray::concatenate(Axis(0), &views).map_err(|_| AutodiffError::Shape {
            op: "concat_rows",
            lhs: shape(self.value(parts[0])),
            rhs: parts.get(1).map_or((0, 0), |&p| shape(self.value(p))),
        })?;
        self.push("concat_rows", value, Op::ConcatRows(parts.to_vec()))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = ndarray::concatenate(Axis(1), &views).map_err(|_| AutodiffError::Shape {
            op: "concat_cols",
            lhs: shape(self.value(parts[0])),
            rhs: parts.get(1).map_or((0, 0), |&p| shape(self.value(p))),
        })?;
        self.push("concat_cols", value, Op::ConcatCols(parts.to_vec()))
    }

    pub fn row_softmax(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let mut value = self.value(a).clone();
        for mut row in value.axis_iter_mut(Axis(0)) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|x| (x - max).exp());
            let sum = row.sum();
            row.mapv_inplace(|x| x / sum);
        }
        self.push("row_softmax", value, Op::RowSoftmax(a))
    }

    /// Softmax over the rows sharing a segment id, independently per column.
    pub fn segment_softmax(
        &mut self,
        a: Var,
        segments: &[usize],
        n_segments: usize,
    ) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        let (rows, cols) = x.dim();
        if segments.len() != rows {
            return Err(AutodiffError::Shape {
                op: "segment_softmax",
                lhs: (rows, cols),
                rhs: (segments.len(), 1),
            });
        }
        check_index("segment_softmax", segments, n_segments)?;
        let mut max = Array2::from_elem((n_segments, cols), f64::NEG_INFINITY);
        for (r, &s) in segments.iter().enumerate() {
            for c in 0..cols {
                max[[s, c]] = max[[s, c]].max(x[[r, c]]);
            }
        }
        let mut value = Array2::zeros((rows, cols));
        let mut sum = Array2::<f64>::zeros((n_segments, cols));
        for (r, &s) in segments.iter().enumerate() {
            for c in 0..cols {
                let e = (x[[r, c]] - max[[s, c]]).exp();
                value[[r, c]] = e;
                sum[[s, c]] += e;
            }
        }
        for (r, &s) in segments.iter().enumerate() {
            for c in 0..cols {
                value[[r, c]] /= sum[[s, c]];
            }
        }
        self.push(
            "segment_softmax",
            value,
            Op::SegmentSoftmax(a, segments.to_vec(), n_segments),
        )
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var, AutodiffError> {
        let value = self.value(a).mapv(|x| if x > 0.0 { x } else { slope * x });
        self.push("leaky_relu", value, Op::LeakyRelu(a, slope))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let value = self.value(a).mapv(|x| x.max(0.0));
        self.push("relu", value, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let value = self.value(a).mapv(f64::tanh);
        self.push("tanh", value, Op::Tanh(a))
    }

    /// Row `r` of `a` is added into output row `segments[r]`.
    pub fn segment_sum(
        &mut self,
        a: Var,
        segments: &[usize],
        n_segments: usize,
    ) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        if segments.len() != x.nrows() {
            return Err(AutodiffError::Shape {
                op: "segment_sum",
                lhs: x.dim(),
                rhs: (segments.len(), 1),
            });
        }
        check_index("segment_sum", segments, n_segments)?;
        let mut value = Array2::zeros((n_segments, x.ncols()));
        for (r, &s) in segments.iter().enumerate() {
            let mut out = value.row_mut(s);
            out += &x.row(r);
        }
        self.push("segment_sum", value, Op::SegmentSum(a, segments.to_vec()))
    }

    /// Like [`Tape::segment_sum`] but divided by segment size; empty
    /// segments give zero rows.
    pub fn segment_mean(
        &mut self,
        a: Var,
        segments: &[usize],
        n_segments: usize,
    ) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        if segments.len() != x.nrows() {
            return Err(AutodiffError::Shape {
                op: "segment_mean",
                lhs: x.dim(),
                rhs: (segments.len(), 1),
            });
        }
        check_index("segment_mean", segments, n_segments)?;
        let mut counts = vec![0usize; n_segments];
        for &s in segments {
            counts[s] += 1;
        }
        let mut value = Array2::zeros((n_segments, x.ncols()));
        for (r, &s) in segments.iter().enumerate() {
            let mut out = value.row_mut(s);
            out.scaled_add(1.0 / counts[s] as f64, &x.row(r));
        }
        self.push(
            "segment_mean",
            value,
            Op::SegmentMean(a, segments.to_vec(), counts),
        )
    }

    pub fn gather_rows(&mut self, a: Var, index: &[usize]) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        check_index("gather_rows", index, x.nrows())?;
        let value = x.select(Axis(0), index);
        self.push("gather_rows", value, Op::GatherRows(a, index.to_vec()))
    }

    /// Frobenius norm as a 1×1 value.
    pub fn l2_norm(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let n = self.value(a).iter().map(|x| x * x).sum::<f64>().sqrt();
        self.push("l2_norm", Array2::from_elem((1, 1), n), Op::L2Norm(a))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let s = self.value(a).sum();
        self.push("sum", Array2::from_elem((1, 1), s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        let m = x.sum() / x.len().max(1) as f64;
        self.push("mean", Array2::from_elem((1, 1), m), Op::Mean(a))
    }

    /// Mean softmax cross-entropy of the rows of `logits` against class indices.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        targets: &[usize],
    ) -> Result<Var, AutodiffError> {
        let x = self.value(logits);
        let (n, k) = x.dim();
        if targets.len() != n || n == 0 {
            return Err(AutodiffError::Shape {
                op: "softmax_cross_entropy",
                lhs: (n, k),
                rhs: (targets.len(), 1),
            });
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= k) {
            return Err(AutodiffError::InvalidTarget { index: t, classes: k });
        }
        let mut probs = x.clone();
        let mut loss = 0.0;
        for (mut row, &t) in probs.axis_iter_mut(Axis(0)).zip(targets) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - row[t];
            row.mapv_inplace(|v| (v - lse).exp());
        }
        let value = Array2::from_elem((1, 1), loss / n as f64);
        self.push(
            "softmax_cross_entropy",
            value,
            Op::SoftmaxCrossEntropy(logits, targets.to_vec(), probs),
        )
    }

    /// Mean squared error against a constant target of the same shape.
    pub fn mse(&mut self, pred: Var, target: Array2<f64>) -> Result<Var, AutodiffError> {
        let x = self.value(pred);
        if x.dim() != target.dim() || x.is_empty() {
            return Err(AutodiffError::Shape {
                op: "mse",
                lhs: x.dim(),
                rhs: target.dim(),
            });
        }
        let m = (x - &target).mapv(|d| d * d).sum() / x.len() as f64;
        self.push("mse", Array2::from_elem((1, 1), m), Op::Mse(pred, target))
    }

    /// Reverse pass from a 1×1 loss. Accumulation follows tape order, so the
    /// result is deterministic.
    pub fn backward(&self, loss: Var, n_params: usize) -> Result<Gradients, AutodiffError> {
        let ls = shape(self.value(loss));
        if ls != (1, 1) {
            return Err(AutodiffError::NotScalar { shape: ls });
        }
        let mut grads: Vec<Option<Array2<f64>>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(Array2::ones((1, 1)));
        let mut params: Vec<Option<Array2<f64>>> = Vec::new();
        params.resize_with(n_params, || None);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => {
                    if id.index() >= params.len() {
                        params.resize_with(id.index() + 1, || None);
                    }
                    accumulate(&mut params[id.index()], &g);
                }
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    accumulate_owned(&mut grads[a.0], ga);
                    accumulate_owned(&mut grads[b.0], gb);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[a.0], &g);
                    accumulate(&mut grads[b.0], &g);
                }
                Op::AddRow(a, r) => {
                    accumulate(&mut grads[a.0], &g);
                    accumulate_owned(&mut grads[r.0], g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads[a.0], &g);
                    accumulate_owned(&mut grads[b.0], -&g);
                }
                Op::Mul(a, b) => {
                    accumulate_owned(&mut grads[a.0], &g * self.value(*b));
                    accumulate_owned(&mut grads[b.0], &g * self.value(*a));
                }
                Op::Scale(a, c) => accumulate_owned(&mut grads[a.0], &g * *c),
                Op::ScaleBy(a, s) => {
                    let sv = self.value(*s)[[0, 0]];
                    let gs = (&g * self.value(*a)).sum();
                    accumulate_owned(&mut grads[a.0], &g * sv);
                    accumulate_owned(&mut grads[s.0], Array2::from_elem((1, 1), gs));
                }
                Op::ScaleRows(x, w) => {
                    let xv = self.value(*x);
                    let wv = self.value(*w);
                    let block = xv.ncols() / wv.ncols();
                    let mut gx = g.clone();
                    let mut gw = Array2::zeros(wv.dim());
                    for i in 0..xv.nrows() {
                        for j in 0..xv.ncols() {
                            let h = j / block;
                            gw[[i, h]] += g[[i, j]] * xv[[i, j]];
                            gx[[i, j]] *= wv[[i, h]];
                        }
                    }
                    accumulate_owned(&mut grads[x.0], gx);
                    accumulate_owned(&mut grads[w.0], gw);
                }
                Op::ConcatRows(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let rows = self.value(*p).nrows();
                        let slice = g.slice(ndarray::s![start..start + rows, ..]).to_owned();
                        accumulate_owned(&mut grads[p.0], slice);
                        start += rows;
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let cols = self.value(*p).ncols();
                        let slice = g.slice(ndarray::s![.., start..start + cols]).to_owned();
                        accumulate_owned(&mut grads[p.0], slice);
                        start += cols;
                    }
                }
                Op::RowSoftmax(a) => {
                    let y = &node.value;
                    let mut ga = &g * y;
                    for (mut row, yrow) in ga.axis_iter_mut(Axis(0)).zip(y.axis_iter(Axis(0))) {
                        let dot = row.sum();
                        Zip::from(&mut row).and(&yrow).for_each(|r, &yy| *r -= yy * dot);
                    }
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::SegmentSoftmax(a, segments, n_segments) => {
                    let y = &node.value;
                    let cols = y.ncols();
                    let gy = &g * y;
                    let mut dots = Array2::<f64>::zeros((*n_segments, cols));
                    for (r, &s) in segments.iter().enumerate() {
                        for c in 0..cols {
                            dots[[s, c]] += gy[[r, c]];
                        }
                    }
                    let mut ga = gy;
                    for (r, &s) in segments.iter().enumerate() {
                        for c in 0..cols {
                            ga[[r, c]] -= y[[r, c]] * dots[[s, c]];
                        }
                    }
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::LeakyRelu(a, slope) => {
                    let mut ga = g.clone();
                    Zip::from(&mut ga)
                        .and(self.value(*a))
                        .for_each(|d, &x| {
                            if x <= 0.0 {
                                *d *= slope
                            }
                        });
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::Relu(a) => {
                    let mut ga = g.clone();
                    Zip::from(&mut ga)
                        .and(self.value(*a))
                        .for_each(|d, &x| {
                            if x <= 0.0 {
                                *d = 0.0
                            }
                        });
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::Tanh(a) => {
                    let mut ga = g.clone();
                    Zip::from(&mut ga)
                        .and(&node.value)
                        .for_each(|d, &y| *d *= 1.0 - y * y);
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::SegmentSum(a, segments) => {
                    let ga = g.select(Axis(0), segments);
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::SegmentMean(a, segments, counts) => {
                    let mut ga = g.select(Axis(0), segments);
                    for (mut row, &s) in ga.axis_iter_mut(Axis(0)).zip(segments) {
                        row /= counts[s] as f64;
                    }
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::GatherRows(a, index) => {
                    let mut ga = Array2::zeros(self.value(*a).dim());
                    for (r, &i) in index.iter().enumerate() {
                        let mut row = ga.row_mut(i);
                        row += &g.row(r);
                    }
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::L2Norm(a) => {
                    let n = node.value[[0, 0]];
                    let ga = if n > 0.0 {
                        self.value(*a) * (g[[0, 0]] / n)
                    } else {
                        Array2::zeros(self.value(*a).dim())
                    };
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::Sum(a) => {
                    let ga = Array2::from_elem(self.value(*a).dim(), g[[0, 0]]);
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::Mean(a) => {
                    let dim = self.value(*a).dim();
                    let ga = Array2::from_elem(dim, g[[0, 0]] / (dim.0 * dim.1).max(1) as f64);
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::SoftmaxCrossEntropy(a, targets, probs) => {
                    let n = targets.len() as f64;
                    let mut ga = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        ga[[r, t]] -= 1.0;
                    }
                    ga *= g[[0, 0]] / n;
                    accumulate_owned(&mut grads[a.0], ga);
                }
                Op::Mse(a, target) => {
                    let x = self.value(*a);
                    let ga = (x - target) * (2.0 * g[[0, 0]] / x.len() as f64);
                    accumulate_owned(&mut grads[a.0], ga);
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            params,
            vars: grads,
        })
    }
}

fn accumulate(slot: &mut Option<Array2<f64>>, g: &Array2<f64>) {
    match slot {
        Some(acc) => *acc += g,
        None => *slot = Some(g.clone()),
    }
}

fn accumulate_owned(slot: &mut Option<Array2<f64>>, g: Array2<f64>) {
    match slot {
        Some(acc) => *acc += &g,
        None => *slot = Some(g),
    }
}
