//! Reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! A tape holds one expression DAG; operations append nodes that reference
//! earlier nodes, and [`Tape::backward`] walks the tape in reverse
//! accumulating adjoints. The op set is exactly what the graph encoder,
//! the masked action heads and the loss functions need — nothing more.

use ndarray::{concatenate, Array2, Axis};

use super::params::ParamSet;

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// Row-broadcast bias add: (n x m) + (1 x m).
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    AddConst(Var, f64),
    /// Elementwise product with a 1x1 scalar node.
    MulScalar(Var, Var),
    MulElem(Var, Var),
    Relu(Var),
    Exp(Var),
    Softplus(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    BroadcastRows(Var, usize),
    /// Sum rows into segments: out[seg[r]] += in[r].
    SegmentSum(Var, Vec<usize>, usize),
    /// Log-softmax over the flattened array restricted to unmasked slots;
    /// masked slots hold -inf.
    MaskedLogSoftmax(Var, Vec<bool>),
    /// Shannon entropy of the masked softmax; 1x1 output.
    MaskedEntropy(Var, Vec<bool>),
    /// One flattened element as a 1x1 node.
    PickFlat(Var, usize),
    SumAll(Var),
    ClipConst(Var, f64, f64),
    Min(Var, Var),
    Max(Var, Var),
}

pub struct Tape {
    values: Vec<Array2<f64>>,
    ops: Vec<Op>,
    /// Parameter slot a leaf is bound to, if any.
    params: Vec<Option<usize>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn masked_probs(logits: &Array2<f64>, mask: &[bool]) -> (Vec<f64>, f64) {
    let flat: Vec<f64> = logits.iter().copied().collect();
    debug_assert_eq!(flat.len(), mask.len());
    let mut mx = f64::NEG_INFINITY;
    for (v, m) in flat.iter().zip(mask) {
        if *m && *v > mx {
            mx = *v;
        }
    }
    let mut z = 0.0;
    for (v, m) in flat.iter().zip(mask) {
        if *m {
            z += (v - mx).exp();
        }
    }
    let lse = mx + z.ln();
    let probs: Vec<f64> = flat
        .iter()
        .zip(mask)
        .map(|(v, m)| if *m { (v - lse).exp() } else { 0.0 })
        .collect();
    (probs, lse)
}

impl Tape {
    pub fn new() -> Tape {
        Tape { values: Vec::new(), ops: Vec::new(), params: Vec::new() }
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.values.push(value);
        self.ops.push(op);
        self.params.push(None);
        Var(self.values.len() - 1)
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Leaf bound to a named parameter; its adjoint lands in the matching
    /// gradient slot.
    pub fn param(&mut self, ps: &ParamSet, name: &str) -> Var {
        let slot = ps.slot(name);
        let v = self.push(ps.values()[slot].clone(), Op::Leaf);
        self.params[v.0] = Some(slot);
        v
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.values[v.0]
    }

    pub fn scalar(&self, v: Var) -> f64 {
        debug_assert_eq!(self.values[v.0].len(), 1);
        self.values[v.0][[0, 0]]
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.values[a.0].dot(&self.values[b.0]);
        self.push(value, Op::MatMul(a, b))
    }

    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        debug_assert_eq!(self.values[bias.0].nrows(), 1);
        let value = &self.values[a.0] + &self.values[bias.0];
        self.push(value, Op::AddRow(a, bias))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = &self.values[a.0] + &self.values[b.0];
        self.push(value, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = &self.values[a.0] - &self.values[b.0];
        self.push(value, Op::Sub(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = &self.values[a.0] * c;
        self.push(value, Op::Scale(a, c))
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let value = &self.values[a.0] + c;
        self.push(value, Op::AddConst(a, c))
    }

    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Var {
        debug_assert_eq!(self.values[s.0].len(), 1);
        let sv = self.values[s.0][[0, 0]];
        let value = &self.values[a.0] * sv;
        self.push(value, Op::MulScalar(a, s))
    }

    pub fn mul_elem(&mut self, a: Var, b: Var) -> Var {
        let value = &self.values[a.0] * &self.values[b.0];
        self.push(value, Op::MulElem(a, b))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.values[a.0].mapv(|x| x.max(0.0));
        self.push(value, Op::Relu(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.values[a.0].mapv(f64::exp);
        self.push(value, Op::Exp(a))
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let value = self.values[a.0].mapv(|x| {
            if x > 30.0 {
                x
            } else {
                x.exp().ln_1p()
            }
        });
        self.push(value, Op::Softplus(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|v| self.values[v.0].view()).collect();
        let value = concatenate(Axis(1), &views).expect("column concat");
        self.push(value, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|v| self.values[v.0].view()).collect();
        let value = concatenate(Axis(0), &views).expect("row concat");
        self.push(value, Op::ConcatRows(parts.to_vec()))
    }

    pub fn gather_rows(&mut self, a: Var, rows: Vec<usize>) -> Var {
        let src = &self.values[a.0];
        let mut value = Array2::zeros((rows.len(), src.ncols()));
        for (i, &r) in rows.iter().enumerate() {
            value.row_mut(i).assign(&src.row(r));
        }
        self.push(value, Op::GatherRows(a, rows))
    }

    pub fn broadcast_rows(&mut self, a: Var, n: usize) -> Var {
        debug_assert_eq!(self.values[a.0].nrows(), 1);
        let row = self.values[a.0].row(0).to_owned();
        let value = Array2::from_shape_fn((n, row.len()), |(_, j)| row[j]);
        self.push(value, Op::BroadcastRows(a, n))
    }

    pub fn segment_sum(&mut self, a: Var, segments: Vec<usize>, n_segments: usize) -> Var {
        let src = &self.values[a.0];
        debug_assert_eq!(src.nrows(), segments.len());
        let mut value = Array2::zeros((n_segments, src.ncols()));
        for (r, &s) in segments.iter().enumerate() {
            let row = src.row(r);
            let mut dst = value.row_mut(s);
            dst += &row;
        }
        self.push(value, Op::SegmentSum(a, segments, n_segments))
    }

    pub fn masked_log_softmax(&mut self, logits: Var, mask: &[bool]) -> Var {
        let (probs, _) = masked_probs(&self.values[logits.0], mask);
        let src = &self.values[logits.0];
        let shape = (src.nrows(), src.ncols());
        let mut value = Array2::from_elem(shape, f64::NEG_INFINITY);
        for (i, v) in value.iter_mut().enumerate() {
            if mask[i] {
                *v = probs[i].ln();
            }
        }
        self.push(value, Op::MaskedLogSoftmax(logits, mask.to_vec()))
    }

    pub fn masked_entropy(&mut self, logits: Var, mask: &[bool]) -> Var {
        let (probs, _) = masked_probs(&self.values[logits.0], mask);
        let h: f64 = probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        let value = Array2::from_elem((1, 1), h);
        self.push(value, Op::MaskedEntropy(logits, mask.to_vec()))
    }

    pub fn pick_flat(&mut self, a: Var, idx: usize) -> Var {
        let v = self.values[a.0].iter().nth(idx).copied().expect("in range");
        let value = Array2::from_elem((1, 1), v);
        self.push(value, Op::PickFlat(a, idx))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let value = Array2::from_elem((1, 1), self.values[a.0].sum());
        self.push(value, Op::SumAll(a))
    }

    pub fn clip_const(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let value = self.values[a.0].mapv(|x| x.clamp(lo, hi));
        self.push(value, Op::ClipConst(a, lo, hi))
    }

    pub fn min(&mut self, a: Var, b: Var) -> Var {
        let value = ndarray::Zip::from(&self.values[a.0])
            .and(&self.values[b.0])
            .map_collect(|x, y| x.min(*y));
        self.push(value, Op::Min(a, b))
    }

    pub fn max(&mut self, a: Var, b: Var) -> Var {
        let value = ndarray::Zip::from(&self.values[a.0])
            .and(&self.values[b.0])
            .map_collect(|x, y| x.max(*y));
        self.push(value, Op::Max(a, b))
    }

    /// Reverse pass from a scalar root; adjoints of parameter-bound leaves
    /// are accumulated into `grads` (aligned with the `ParamSet` the
    /// leaves were bound from).
    pub fn backward(&self, root: Var, grads: &mut [Array2<f64>]) {
        debug_assert_eq!(self.values[root.0].len(), 1, "root must be scalar");
        let mut adj: Vec<Option<Array2<f64>>> = vec![None; self.values.len()];
        adj[root.0] = Some(Array2::from_elem((1, 1), 1.0));

        for i in (0..=root.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            match &self.ops[i] {
                Op::Leaf => {
                    if let Some(slot) = self.params[i] {
                        grads[slot] += &g;
                    }
                }
                Op::MatMul(a, b) => {
                    let da = g.dot(&self.values[b.0].t());
                    let db = self.values[a.0].t().dot(&g);
                    acc(&mut adj, a.0, da);
                    acc(&mut adj, b.0, db);
                }
                Op::AddRow(a, bias) => {
                    let db = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut adj, a.0, g.clone());
                    acc(&mut adj, bias.0, db);
                }
                Op::Add(a, b) => {
                    acc(&mut adj, a.0, g.clone());
                    acc(&mut adj, b.0, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut adj, a.0, g.clone());
                    acc(&mut adj, b.0, -g);
                }
                Op::Scale(a, c) => acc(&mut adj, a.0, &g * *c),
                Op::AddConst(a, _) => acc(&mut adj, a.0, g),
                Op::MulScalar(a, s) => {
                    let sv = self.values[s.0][[0, 0]];
                    let ds = (&g * &self.values[a.0]).sum();
                    acc(&mut adj, a.0, &g * sv);
                    acc(&mut adj, s.0, Array2::from_elem((1, 1), ds));
                }
                Op::MulElem(a, b) => {
                    acc(&mut adj, a.0, &g * &self.values[b.0]);
                    acc(&mut adj, b.0, &g * &self.values[a.0]);
                }
                Op::Relu(a) => {
                    let da = ndarray::Zip::from(&g)
                        .and(&self.values[a.0])
                        .map_collect(|gv, av| if *av > 0.0 { *gv } else { 0.0 });
                    acc(&mut adj, a.0, da);
                }
                Op::Exp(a) => acc(&mut adj, a.0, &g * &self.values[i]),
                Op::Softplus(a) => {
                    let da = ndarray::Zip::from(&g)
                        .and(&self.values[a.0])
                        .map_collect(|gv, av| gv / (1.0 + (-av).exp()));
                    acc(&mut adj, a.0, da);
                }
                Op::ConcatCols(parts) => {
                    let mut col = 0;
                    for p in parts {
                        let w = self.values[p.0].ncols();
                        let slice = g.slice(ndarray::s![.., col..col + w]).to_owned();
                        acc(&mut adj, p.0, slice);
                        col += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut row = 0;
                    for p in parts {
                        let h = self.values[p.0].nrows();
                        let slice = g.slice(ndarray::s![row..row + h, ..]).to_owned();
                        acc(&mut adj, p.0, slice);
                        row += h;
                    }
                }
                Op::GatherRows(a, rows) => {
                    let mut da = Array2::zeros(self.values[a.0].raw_dim());
                    for (r, &src_row) in rows.iter().enumerate() {
                        let mut dst = da.row_mut(src_row);
                        dst += &g.row(r);
                    }
                    acc(&mut adj, a.0, da);
                }
                Op::BroadcastRows(a, _) => {
                    let da = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut adj, a.0, da);
                }
                Op::SegmentSum(a, segments, _) => {
                    let mut da = Array2::zeros(self.values[a.0].raw_dim());
                    for (r, &s) in segments.iter().enumerate() {
                        let mut dst = da.row_mut(r);
                        dst += &g.row(s);
                    }
                    acc(&mut adj, a.0, da);
                }
                Op::MaskedLogSoftmax(a, mask) => {
                    let (probs, _) = masked_probs(&self.values[a.0], mask);
                    let gsum: f64 = g
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| mask[*j])
                        .map(|(_, v)| *v)
                        .sum();
                    let mut da = Array2::zeros(self.values[a.0].raw_dim());
                    for (j, dv) in da.iter_mut().enumerate() {
                        if mask[j] {
                            let gj = g.iter().nth(j).copied().unwrap();
                            *dv = gj - probs[j] * gsum;
                        }
                    }
                    acc(&mut adj, a.0, da);
                }
                Op::MaskedEntropy(a, mask) => {
                    let (probs, lse) = masked_probs(&self.values[a.0], mask);
                    let h = self.values[i][[0, 0]];
                    let gs = g[[0, 0]];
                    let logits = &self.values[a.0];
                    let mut da = Array2::zeros(logits.raw_dim());
                    for (j, dv) in da.iter_mut().enumerate() {
                        if mask[j] && probs[j] > 0.0 {
                            let lp = logits.iter().nth(j).unwrap() - lse;
                            *dv = -gs * probs[j] * (lp + h);
                        }
                    }
                    acc(&mut adj, a.0, da);
                }
                Op::PickFlat(a, idx) => {
                    let mut da = Array2::zeros(self.values[a.0].raw_dim());
                    *da.iter_mut().nth(*idx).unwrap() = g[[0, 0]];
                    acc(&mut adj, a.0, da);
                }
                Op::SumAll(a) => {
                    let da = Array2::from_elem(self.values[a.0].raw_dim(), g[[0, 0]]);
                    acc(&mut adj, a.0, da);
                }
                Op::ClipConst(a, lo, hi) => {
                    let da = ndarray::Zip::from(&g)
                        .and(&self.values[a.0])
                        .map_collect(|gv, av| if *av > *lo && *av < *hi { *gv } else { 0.0 });
                    acc(&mut adj, a.0, da);
                }
                Op::Min(a, b) => {
                    let va = &self.values[a.0];
                    let vb = &self.values[b.0];
                    let da = ndarray::Zip::from(&g).and(va).and(vb).map_collect(
                        |gv, x, y| if x <= y { *gv } else { 0.0 },
                    );
                    let db = ndarray::Zip::from(&g).and(va).and(vb).map_collect(
                        |gv, x, y| if x > y { *gv } else { 0.0 },
                    );
                    acc(&mut adj, a.0, da);
                    acc(&mut adj, b.0, db);
                }
                Op::Max(a, b) => {
                    let va = &self.values[a.0];
                    let vb = &self.values[b.0];
                    let da = ndarray::Zip::from(&g).and(va).and(vb).map_collect(
                        |gv, x, y| if x >= y { *gv } else { 0.0 },
                    );
                    let db = ndarray::Zip::from(&g).and(va).and(vb).map_collect(
                        |gv, x, y| if x < y { *gv } else { 0.0 },
                    );
                    acc(&mut adj, a.0, da);
                    acc(&mut adj, b.0, db);
                }
            }
        }
    }
}

fn acc(adj: &mut [Option<Array2<f64>>], idx: usize, delta: Array2<f64>) {
    match &mut adj[idx] {
        Some(a) => *a += &delta,
        slot @ None => *slot = Some(delta),
    }
}
