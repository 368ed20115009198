//! Tape-based reverse-mode automatic differentiation over dense f64 tensors.
//!
//! A `Graph` records every forward operation together with a backward rule.
//! Calling [`Graph::backward`] on a scalar loss replays the tape in reverse
//! and accumulates gradients for every node that (transitively) depends on a
//! parameter leaf. One graph corresponds to one document's forward pass.

use rand::Rng;

use crate::error::{Error, Result};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

struct Node {
    shape: Vec<usize>,
    values: Vec<f64>,
    requires_grad: bool,
}

type BackwardFn = Box<dyn Fn(&[Node], &mut [Vec<f64>])>;

struct OpRecord {
    out: usize,
    backward: BackwardFn,
}

/// Gradients produced by a backward pass, indexed by node.
pub struct Gradients {
    grads: Vec<Vec<f64>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. `v`, if `v` participates in the trace.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        let g = &self.grads[v.0];
        if g.is_empty() {
            None
        } else {
            Some(g)
        }
    }
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    ops: Vec<OpRecord>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].values
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        debug_assert_eq!(self.nodes[v.0].values.len(), 1);
        self.nodes[v.0].values[0]
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    fn push(&mut self, shape: Vec<usize>, values: Vec<f64>, requires_grad: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        self.nodes.push(Node {
            shape,
            values,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn record(&mut self, out: Var, backward: BackwardFn) {
        if self.nodes[out.0].requires_grad {
            self.ops.push(OpRecord {
                out: out.0,
                backward,
            });
        }
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Constant leaf; receives no gradient.
    pub fn constant(&mut self, shape: Vec<usize>, values: Vec<f64>) -> Var {
        self.push(shape, values, false)
    }

    /// Trainable leaf; gradients accumulate over every use.
    pub fn param(&mut self, shape: Vec<usize>, values: Vec<f64>) -> Var {
        self.push(shape, values, true)
    }

    pub fn scalar(&mut self, v: f64) -> Var {
        self.constant(vec![1], vec![v])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::ShapeMismatch {
                op: "add",
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        let values: Vec<f64> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        let rg = self.any_grad(&[a, b]);
        let out = self.push(self.nodes[a.0].shape.clone(), values, rg);
        let (ai, bi, oi) = (a.0, b.0, out.0);
        self.record(
            out,
            Box::new(move |_nodes, grads| {
                let g = std::mem::take(&mut grads[oi]);
                for id in [ai, bi] {
                    if !grads[id].is_empty() {
                        for (d, s) in grads[id].iter_mut().zip(&g) {
                            *d += s;
                        }
                    }
                }
                grads[oi] = g;
            }),
        );
        Ok(out)
    }

    pub fn add_n(&mut self, parts: &[Var]) -> Result<Var> {
        let mut acc = parts[0];
        for &p in &parts[1..] {
            acc = self.add(acc, p)?;
        }
        Ok(acc)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::ShapeMismatch {
                op: "mul",
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        let values: Vec<f64> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .collect();
        let rg = self.any_grad(&[a, b]);
        let out = self.push(self.nodes[a.0].shape.clone(), values, rg);
        let (ai, bi, oi) = (a.0, b.0, out.0);
        self.record(
            out,
            Box::new(move |nodes, grads| {
                let g = std::mem::take(&mut grads[oi]);
                if !grads[ai].is_empty() {
                    for ((d, s), y) in grads[ai].iter_mut().zip(&g).zip(&nodes[bi].values) {
                        *d += s * y;
                    }
                }
                if !grads[bi].is_empty() {
                    for ((d, s), x) in grads[bi].iter_mut().zip(&g).zip(&nodes[ai].values) {
                        *d += s * x;
                    }
                }
                grads[oi] = g;
            }),
        );
        Ok(out)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let values: Vec<f64> = self.value(a).iter().map(|x| x * c).collect();
        let rg = self.nodes[a.0].requires_grad;
        let out = self.push(self.nodes[a.0].shape.clone(), values, rg);
        let (ai, oi) = (a.0, out.0);
        self.record(
            out,
            Box::new(move |_nodes, grads| {
                let g = std::mem::take(&mut grads[oi]);
                if !grads[ai].is_empty() {
                    for (d, s) in grads[ai].iter_mut().zip(&g) {
                        *d += s * c;
                    }
                }
                grads[oi] = g;
            }),
        );
        out
    }

    /// Matrix product of `a: [m,k]` and `b: [k,n]`.
    /// Backward accumulates dA = dC·Bᵀ and dB = Aᵀ·dC.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: sa,
                right: sb,
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let av = self.value(a);
        let bv = self.value(b);
        let mut values = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let x = av[i * k + p];
                if x == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                let crow = &mut values[i * n..(i + 1) * n];
                for (c, y) in crow.iter_mut().zip(brow) {
                    *c += x * y;
                }
            }
        }
        let rg = self.any_grad(&[a, b]);
        let out = self.push(vec![m, n], values, rg);
        let (ai, bi, oi) = (a.0, b.0, out.0);
        self.record(
            out,
            Box::new(move |nodes, grads| {
                let g = std::mem::take(&mut grads[oi]);
                if !grads[ai].is_empty() {
                    let bv = &nodes[bi].values;
                    let da = &mut grads[ai];
                    for i in 0..m {
                        for p in 0..k {
                            let mut acc = 0.0;
                            let grow = &g[i * n..(i + 1) * n];
                            let brow = &bv[p * n..(p + 1) * n];
                            for (gy, by) in grow.iter().zip(brow) {
                                acc += gy * by;
                            }
                            da[i * k + p] += acc;
                        }
                    }
                }
                if !grads[bi].is_empty() {
                    let av = &nodes[ai].values;
                    let db = &mut grads[bi];
                    for i in 0..m {
                        for p in 0..k {
                            let x = av[i * k + p];
                            if x == 0.0 {
                                continue;
                            }
                            let grow = &g[i * n..(i + 1) * n];
                            let drow = &mut db[p * n..(p + 1) * n];
                            for (d, gy) in drow.iter_mut().zip(grow) {
                                *d += x * gy;
                            }
                        }
                    }
                }
                grads[oi] = g;
            }),
        );
        Ok(out)
    }

    /// `w: [m,k]` times vector `x: [k]` giving `[m]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (sw, sx) = (self.shape(w).to_vec(), self.shape(x).to_vec());
        if sw.len() != 2 || sx.len() != 1 || sw[1] != sx[0] {
            return Err(Error::ShapeMismatch {
                op: "matvec",
                left: sw,
                right: sx,
            });
        }
        let (m, k) = (sw[0], sw[1]);
        let wv = self.value(w);
        let xv = self.value(x);
        let mut values = vec![0.0; m];
        for i in 0..m {
            let row = &wv[i * k..(i + 1) * k];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(xv) {
                acc += a * b;
            }
            values[i] = acc;
        }
        let rg = self.any_grad(&[w, x]);
        let out = self.push(vec![m], values, rg);
        let (wi, xi, oi) = (w.0, x.0, out.0);
        self.record(
            out,
            Box::new(move |nodes, grads| {
                let g = std::mem::take(&mut grads[oi]);
                if !grads[wi].is_empty() {
                    let xv = &nodes[xi].values;
                    let dw = &mut grads[wi];
                    for i in 0..m {
                        let gi = g[i];
                        if gi == 0.0 {
                            continue;
                        }
                        let drow = &mut dw[i * k..(i + 1) * k];
                        for (d, xj) in drow.iter_mut().zip(xv) {
                            *d += gi * xj;
                        }
                    }
                }
                if !grads[xi].is_empty() {
                    let wv = &nodes[wi].values;
                    let dx = &mut grads[xi];
                    for i in 0..m {
                        let gi = g[i];
                        if gi == 0.0 {
                            continue;
                        }
                        let row = &wv[i * k..(i + 1) * k];
                        for (d, wj) in dx.iter_mut().zip(row) {
                            *d += gi * wj;
                        }
                    }
                }
                grads[oi] = g;
            }),
        );
        Ok(out)
    }

    /// Row vector `x: [k]` times `a: [k,n]` giving `[n]`.
    pub fn vecmat(&mut self, x: Var, a: Var) -> Result<Var> {
        let (sx, sa) = (self.shape(x).to_vec(), self.shape(a).to_vec());
        if sx.len() != 1 || sa.len() != 2 || sx[0] != sa[0] {
            return Err(Error::ShapeMismatch {
                op: "vecmat",
                left: sx,
                right: sa,
            });
        }
        let (k, n) = (sa[0], sa[1]);
        let xv = self.value(x);
        let av = self.value(a);
        let mut values = vec![0.0; n];
        for p in 0..k {
            let xp = xv[p];
            if xp == 0.0 {
                continue;
            }
            let row = &av[p * n..(p + 1) * n];
            for (v, y) in values.iter_mut().zip(row) {
                *v += xp * y;
            }
        }
        let rg = self.any_grad(&[x, a]);
        let out = self.push(vec![n], values, rg);
        let (xi, ai, oi) = (x.0, a.0, out.0);
        self.record(
            out,
            Box::new(move |nodes, grads| {
                let g = std::mem::take(&mut grads[oi]);
                if !grads[xi].is_empty() {
                    let av = &nodes[ai].values;
                    let dx = &mut grads[xi];
                    for p in 0..k {
                        let row = &av[p * n..(p + 1) * n];
                        let mut acc = 0.0;
                        for (gy, ay) in g.iter().zip(row) {
                            acc += gy * ay;
                        }
                        dx[p] += acc;
                    }
                }
                if !grads[ai].is_empty() {
                    let xv = &nodes[xi].values;
                    let da = &mut grads[ai];
                    for p in 0..k {
                        let xp = xv[p];
                        if xp == 0.0 {
                            continue;
                        }
                        let drow = &mut da[p * n..(p + 1) * n];
                        for (d, gy) in drow.iter_mut().zip(&g) {
                            *d += xp * gy;
                        }
                    }
                }
                grads[oi] = g;
            }),
        );
        Ok(out)
    }

    /// Inner product of two equal-length vectors, producing a scalar.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) || self.shape(a).len() != 1 {
            return Err(Error::ShapeMismatch {
                op: "dot",
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        let v: f64 = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .sum();
        let rg = self.any_grad(&[a, b]);
        let out = self.push(vec![1], vec![v], rg);
        let (ai, bi, oi) = (a.0, b.0, out.0);
        self.record(
            out,
            Box::new(move |nodes, grads| {
                let g = grads[oi][0];
                if !grads[ai].is_empty() {
                    let bv = nodes[bi].values.clone();
                    for (d, y) in grads[ai].iter_mut().zip(&bv) {
                        *d += g * y;
                    }
                }
                if !grads[bi].is_empty() {
                    let av = nodes[ai].values.clone();
                    for (d, x) in grads[bi].iter_mut().zip(&av) {
                        *d += g * x;
                    }
                }
            }),
        );
        Ok(out)
    }

    fn unary(
        &mut self,
        x: Var,
        f: impl Fn(f64) -> f64,
        // derivative as a function of (input, output)
        df: impl Fn(f64, f64) -> f64 + 'static,
    ) -> Var {
        let values: Vec<f64> = self.value(x).iter().map(|&v| f(v)).collect();
        let rg = self.nodes[x.0].requires_grad;
        let out = self.push(self.nodes[x.0].shape.clone(), values, rg);
        let (xi, oi) = (x.0, out.0);
        self.record(
            out,
            Box::new(move |nodes, grads| {
                if grads[xi].is_empty() {
                    return;
                }
                let g = std::mem::take(&mut grads[oi]);
                {
                    let xin = &nodes[xi].values;
                    let xout = &nodes[oi].values;
                    let dx = &mut grads[xi];
                    for i in 0..g.len() {
                        dx[i] += g[i] * df(xin[i], xout[i]);
                    }
                }
                grads[oi] = g;
            }),
        );
        out
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, |_, y| y * (1.0 - y))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, f64::tanh, |_, y| 1.0 - y * y)
    }

    /// ReLU; the subgradient at exactly 0 is 0.
    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.max(0.0), |x, _| if x > 0.0 { 1.0 } else { 0.0 })
    }

    /// Concatenate 1-D vectors into one 1-D vector.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        for &p in parts {
            if self.shape(p).len() != 1 {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    left: self.shape(parts[0]).to_vec(),
                    right: self.shape(p).to_vec(),
                });
            }
        }
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        let mut values = Vec::new();
        for &p in parts {
            values.extend_from_slice(self.value(p));
        }
        let total = values.len();
        let rg = self.any_grad(parts);
        let out = self.push(vec![total], values, rg);
        let ids: Vec<(usize, usize)> = parts
            .iter()
            .map(|&p| (p.0, self.nodes[p.0].values.len()))
            .collect();
        let oi = out.0;
        self.record(
            out,
            Box::new(move |_nodes, grads| {
                let g = std::mem::take(&mut grads[oi]);
                let mut off = 0;
                for &(id, len) in &ids {
                    if !grads[id].is_empty() {
                        for (d, s) in grads[id].iter_mut().zip(&g[off..off + len]) {
                            *d += s;
                        }
                    }
                    off += len;
                }
                grads[oi] = g;
            }),
        );
        Ok(out)
    }

    /// Stack equal-length 1-D vectors as the rows of a `[k,d]` matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let d = self.value(rows[0]).len();
        for &r in rows {
            if self.shape(r).len() != 1 || self.value(r).len() != d {
                return Err(Error::ShapeMismatch {
                    op: "stack_rows",
                    left: vec![d],
                    right: self.shape(r).to_vec(),
                });
            }
        }
        let mut values = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            values.extend_from_slice(self.value(r));
        }
        let rg = self.any_grad(rows);
        let out = self.push(vec![rows.len(), d], values, rg);
        let ids: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let oi = out.0;
        self.record(
            out,
            Box::new(move |_nodes, grads| {
                let g = std::mem::take(&mut grads[oi]);
                for (i, &id) in ids.iter().enumerate() {
                    if !grads[id].is_empty() {
                        for (dst, s) in grads[id].iter_mut().zip(&g[i * d..(i + 1) * d]) {
                            *dst += s;
                        }
                    }
                }
                grads[oi] = g;
            }),
        );
        Ok(out)
    }

    /// Gather flat elements of `x` into a new tensor; backward scatter-adds.
    pub fn gather(&mut self, x: Var, indices: Vec<usize>, out_shape: Vec<usize>) -> Var {
        debug_assert_eq!(indices.len(), out_shape.iter().product::<usize>());
        let xv = self.value(x);
        let values: Vec<f64> = indices.iter().map(|&i| xv[i]).collect();
        let rg = self.nodes[x.0].requires_grad;
        let out = self.push(out_shape, values, rg);
        let (xi, oi) = (x.0, out.0);
        self.record(
            out,
            Box::new(move |_nodes, grads| {
                if grads[xi].is_empty() {
                    return;
                }
                let g = std::mem::take(&mut grads[oi]);
                for (pos, &src) in indices.iter().enumerate() {
                    grads[xi][src] += g[pos];
                }
                grads[oi] = g;
            }),
        );
        out
    }

    /// Select rows `idxs` from a `[n,d]` table, producing `[k,d]`.
    pub fn rows(&mut self, table: Var, idxs: &[usize]) -> Var {
        let d = self.shape(table)[1];
        let mut flat = Vec::with_capacity(idxs.len() * d);
        for &i in idxs {
            flat.extend((i * d)..(i + 1) * d);
        }
        self.gather(table, flat, vec![idxs.len(), d])
    }

    /// Select a single row from a `[n,d]` table as a vector `[d]`.
    pub fn row(&mut self, table: Var, idx: usize) -> Var {
        let d = self.shape(table)[1];
        self.gather(table, ((idx * d)..(idx + 1) * d).collect(), vec![d])
    }

    /// Contiguous 1-D slice.
    pub fn slice1d(&mut self, x: Var, start: usize, len: usize) -> Var {
        self.gather(x, (start..start + len).collect(), vec![len])
    }

    /// Sum of all elements, producing a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let v: f64 = self.value(x).iter().sum();
        let rg = self.nodes[x.0].requires_grad;
        let out = self.push(vec![1], vec![v], rg);
        let (xi, oi) = (x.0, out.0);
        self.record(
            out,
            Box::new(move |_nodes, grads| {
                if grads[xi].is_empty() {
                    return;
                }
                let g = grads[oi][0];
                for d in grads[xi].iter_mut() {
                    *d += g;
                }
            }),
        );
        out
    }

    /// Softmax over the unmasked entries of a 1-D vector. Masked entries get
    /// probability exactly 0. Uses max-subtraction for overflow safety.
    pub fn masked_softmax(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let xv = self.value(x);
        assert_eq!(xv.len(), mask.len(), "mask length must match input");
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyMask);
        }
        let max = xv
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut values: Vec<f64> = xv
            .iter()
            .zip(mask)
            .map(|(&v, &m)| if m { (v - max).exp() } else { 0.0 })
            .collect();
        let z: f64 = values.iter().sum();
        for v in values.iter_mut() {
            *v /= z;
        }
        let rg = self.nodes[x.0].requires_grad;
        let out = self.push(vec![xv.len()], values, rg);
        let (xi, oi) = (x.0, out.0);
        self.record(
            out,
            Box::new(move |nodes, grads| {
                if grads[xi].is_empty() {
                    return;
                }
                let g = std::mem::take(&mut grads[oi]);
                {
                    let y = &nodes[oi].values;
                    let inner: f64 = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                    let dx = &mut grads[xi];
                    for i in 0..g.len() {
                        dx[i] += y[i] * (g[i] - inner);
                    }
                }
                grads[oi] = g;
            }),
        );
        Ok(out)
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let mask = vec![true; self.value(x).len()];
        self.masked_softmax(x, &mask)
    }

    /// log Σ exp(x) over a 1-D vector, producing a scalar; stabilized.
    pub fn logsumexp(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let max = xv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = xv.iter().map(|&v| (v - max).exp()).sum();
        let value = max + z.ln();
        let rg = self.nodes[x.0].requires_grad;
        let out = self.push(vec![1], vec![value], rg);
        let (xi, oi) = (x.0, out.0);
        self.record(
            out,
            Box::new(move |nodes, grads| {
                if grads[xi].is_empty() {
                    return;
                }
                let g = grads[oi][0];
                let lse = nodes[oi].values[0];
                let xv = nodes[xi].values.clone();
                for (d, &v) in grads[xi].iter_mut().zip(&xv) {
                    *d += g * (v - lse).exp();
                }
            }),
        );
        out
    }

    /// Column-wise max over a `[p,k]` matrix, producing `[k]`. Backward routes
    /// to the first argmax row per column.
    pub fn max_axis0(&mut self, x: Var) -> Var {
        let shape = self.shape(x).to_vec();
        assert_eq!(shape.len(), 2, "max_axis0 expects a matrix");
        let (p, k) = (shape[0], shape[1]);
        let xv = self.value(x);
        let mut values = vec![f64::NEG_INFINITY; k];
        let mut arg = vec![0usize; k];
        for r in 0..p {
            for c in 0..k {
                let v = xv[r * k + c];
                if v > values[c] {
                    values[c] = v;
                    arg[c] = r;
                }
            }
        }
        let rg = self.nodes[x.0].requires_grad;
        let out = self.push(vec![k], values, rg);
        let (xi, oi) = (x.0, out.0);
        self.record(
            out,
            Box::new(move |_nodes, grads| {
                if grads[xi].is_empty() {
                    return;
                }
                let g = std::mem::take(&mut grads[oi]);
                for c in 0..k {
                    grads[xi][arg[c] * k + c] += g[c];
                }
                grads[oi] = g;
            }),
        );
        out
    }

    /// Inverted dropout: training mode zeroes each element with probability
    /// `rate` and scales survivors by 1/(1-rate); inference returns `x`.
    pub fn dropout(
        &mut self,
        x: Var,
        rate: f64,
        training: bool,
        rng: &mut impl Rng,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidDropoutRate(rate));
        }
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 - rate;
        let mask: Vec<f64> = self
            .value(x)
            .iter()
            .map(|_| {
                if rng.gen::<f64>() < rate {
                    0.0
                } else {
                    1.0 / keep
                }
            })
            .collect();
        let values: Vec<f64> = self
            .value(x)
            .iter()
            .zip(&mask)
            .map(|(v, m)| v * m)
            .collect();
        let rg = self.nodes[x.0].requires_grad;
        let out = self.push(self.nodes[x.0].shape.clone(), values, rg);
        let (xi, oi) = (x.0, out.0);
        self.record(
            out,
            Box::new(move |_nodes, grads| {
                if grads[xi].is_empty() {
                    return;
                }
                let g = std::mem::take(&mut grads[oi]);
                for ((d, s), m) in grads[xi].iter_mut().zip(&g).zip(&mask) {
                    *d += s * m;
                }
                grads[oi] = g;
            }),
        );
        Ok(out)
    }

    /// Binary cross-entropy through a sigmoid: returns the (nonpositive)
    /// log-likelihood y·log ŷ + (1-y)·log(1-ŷ) with ŷ = sigmoid(logit)
    /// clamped to [1e-12, 1-1e-12].
    pub fn sigmoid_bce(&mut self, logit: Var, y: f64) -> Var {
        debug_assert_eq!(self.value(logit).len(), 1);
        let p = sigmoid(self.value(logit)[0]).clamp(1e-12, 1.0 - 1e-12);
        let value = y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        let rg = self.nodes[logit.0].requires_grad;
        let out = self.push(vec![1], vec![value], rg);
        let (xi, oi) = (logit.0, out.0);
        self.record(
            out,
            Box::new(move |_nodes, grads| {
                if grads[xi].is_empty() {
                    return;
                }
                let g = grads[oi][0];
                grads[xi][0] += g * (y - p);
            }),
        );
        out
    }

    /// Reverse pass from a scalar loss. Gradients accumulate (sum) over all
    /// uses of a node; constant leaves are skipped.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.nodes[loss.0].values.len() != 1 {
            return Err(Error::NonScalarLoss(self.nodes[loss.0].shape.clone()));
        }
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| {
                if n.requires_grad {
                    vec![0.0; n.values.len()]
                } else {
                    Vec::new()
                }
            })
            .collect();
        if grads[loss.0].is_empty() {
            // loss does not depend on any parameter
            return Ok(Gradients { grads });
        }
        grads[loss.0][0] = 1.0;
        for op in self.ops.iter().rev() {
            if grads[op.out].is_empty() {
                continue;
            }
            (op.backward)(&self.nodes, &mut grads);
        }
        Ok(Gradients { grads })
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
