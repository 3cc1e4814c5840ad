use crate::autodiff::graph::{Graph, Var};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Operation kinds recorded on the tape.
#[derive(Clone, Debug)]
pub(crate) enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    AddConst,
    MulConst(f64),
    MatMul,
    BiasAdd,
    Conv1d { dilation: usize },
    Relu,
    Elu,
    Sigmoid,
    Sin,
    Cos,
    Ln,
    Sqrt,
    Clamp { lo: f64, hi: f64 },
    MaxRows,
    Mean,
    ChunkMean { sizes: Vec<usize> },
    RowSum,
    Reshape,
    Index(usize),
    GatherRows(Vec<usize>),
    StackCols,
    ConcatRows,
}

fn broadcast_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<Vec<usize>> {
    if a.shape() == b.shape() {
        Ok(a.shape().to_vec())
    } else if a.is_scalar() {
        Ok(b.shape().to_vec())
    } else if b.is_scalar() {
        Ok(a.shape().to_vec())
    } else {
        Err(Error::ShapeMismatch { op, lhs: a.shape().to_vec(), rhs: b.shape().to_vec() })
    }
}

fn binary_map(a: &Tensor, b: &Tensor, shape: Vec<usize>, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let n: usize = shape.iter().product();
    let mut out = Vec::with_capacity(n);
    match (a.is_scalar() && n != 1, b.is_scalar() && n != 1) {
        (true, _) => {
            let av = a.item();
            out.extend(b.data().iter().map(|&bv| f(av, bv)));
        }
        (_, true) => {
            let bv = b.item();
            out.extend(a.data().iter().map(|&av| f(av, bv)));
        }
        _ => out.extend(a.data().iter().zip(b.data()).map(|(&av, &bv)| f(av, bv))),
    }
    Tensor::new(shape, out).expect("broadcast shape")
}

impl Graph {
    fn unary(&mut self, op: Op, v: Var, f: impl Fn(f64) -> f64) -> Var {
        let input = self.value(v);
        let data = input.data().iter().map(|&x| f(x)).collect();
        let value = Tensor::new(input.shape().to_vec(), data).expect("unary shape");
        let rg = self.requires_grad(v);
        self.push(op, vec![v], value, rg)
    }

    fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn any_requires_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.requires_grad(*v))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = broadcast_shape("add", self.value(a), self.value(b))?;
        let value = binary_map(self.value(a), self.value(b), shape, |x, y| x + y);
        let rg = self.any_requires_grad(&[a, b]);
        Ok(self.push(Op::Add, vec![a, b], value, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = broadcast_shape("sub", self.value(a), self.value(b))?;
        let value = binary_map(self.value(a), self.value(b), shape, |x, y| x - y);
        let rg = self.any_requires_grad(&[a, b]);
        Ok(self.push(Op::Sub, vec![a, b], value, rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = broadcast_shape("mul", self.value(a), self.value(b))?;
        let value = binary_map(self.value(a), self.value(b), shape, |x, y| x * y);
        let rg = self.any_requires_grad(&[a, b]);
        Ok(self.push(Op::Mul, vec![a, b], value, rg))
    }

    pub fn add_const(&mut self, v: Var, c: f64) -> Var {
        self.unary(Op::AddConst, v, |x| x + c)
    }

    pub fn mul_const(&mut self, v: Var, c: f64) -> Var {
        self.unary(Op::MulConst(c), v, |x| x * c)
    }

    pub fn neg(&mut self, v: Var) -> Var {
        self.mul_const(v, -1.0)
    }

    /// `[n,k] @ [k,m] -> [n,m]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if !av.is_matrix() || !bv.is_matrix() || av.cols() != bv.rows() {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: av.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let (n, k, m) = (av.rows(), av.cols(), bv.cols());
        let mut out = Tensor::zeros(vec![n, m]);
        matmul_into(av.data(), n, k, bv.data(), m, out.data_mut());
        let rg = self.any_requires_grad(&[a, b]);
        Ok(self.push(Op::MatMul, vec![a, b], out, rg))
    }

    /// `[n,m] + [m]`, broadcasting the bias over rows.
    pub fn bias_add(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(b));
        if !xv.is_matrix() || bv.shape().len() != 1 || xv.cols() != bv.len() {
            return Err(Error::ShapeMismatch {
                op: "bias_add",
                lhs: xv.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let (n, m) = (xv.rows(), xv.cols());
        let mut data = Vec::with_capacity(n * m);
        for row in xv.data().chunks_exact(m) {
            data.extend(row.iter().zip(bv.data()).map(|(&a, &c)| a + c));
        }
        let value = Tensor::new(vec![n, m], data)?;
        let rg = self.any_requires_grad(&[x, b]);
        Ok(self.push(Op::BiasAdd, vec![x, b], value, rg))
    }

    /// 1-D convolution along rows: `x [l,cin]`, `w [k,cin,cout] -> [l,cout]`.
    /// Zero padding of `dilation * (k-1) / 2` on both ends preserves length.
    pub fn conv1d(&mut self, x: Var, w: Var, dilation: usize) -> Result<Var> {
        let (xv, wv) = (self.value(x), self.value(w));
        let bad = !xv.is_matrix()
            || wv.shape().len() != 3
            || wv.shape()[0] % 2 == 0
            || wv.shape()[1] != xv.cols()
            || dilation == 0;
        if bad {
            return Err(Error::ShapeMismatch {
                op: "conv1d",
                lhs: xv.shape().to_vec(),
                rhs: wv.shape().to_vec(),
            });
        }
        let (l, cin) = (xv.rows(), xv.cols());
        let (taps, cout) = (wv.shape()[0], wv.shape()[2]);
        let mut out = Tensor::zeros(vec![l, cout]);
        conv1d_forward(xv.data(), l, cin, wv.data(), taps, cout, dilation, out.data_mut());
        let rg = self.any_requires_grad(&[x, w]);
        Ok(self.push(Op::Conv1d { dilation }, vec![x, w], out, rg))
    }

    pub fn relu(&mut self, v: Var) -> Var {
        self.unary(Op::Relu, v, |x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn elu(&mut self, v: Var) -> Var {
        self.unary(Op::Elu, v, |x| if x > 0.0 { x } else { x.exp() - 1.0 })
    }

    pub fn sigmoid(&mut self, v: Var) -> Var {
        self.unary(Op::Sigmoid, v, |x| 1.0 / (1.0 + (-x).exp()))
    }

    pub fn sin(&mut self, v: Var) -> Var {
        self.unary(Op::Sin, v, f64::sin)
    }

    pub fn cos(&mut self, v: Var) -> Var {
        self.unary(Op::Cos, v, f64::cos)
    }

    pub fn ln(&mut self, v: Var) -> Var {
        self.unary(Op::Ln, v, f64::ln)
    }

    pub fn sqrt(&mut self, v: Var) -> Var {
        self.unary(Op::Sqrt, v, f64::sqrt)
    }

    pub fn clamp(&mut self, v: Var, lo: f64, hi: f64) -> Var {
        self.unary(Op::Clamp { lo, hi }, v, |x| x.clamp(lo, hi))
    }

    /// Global max-pool over the row (point) axis: `[n,c] -> [c]`.
    pub fn max_rows(&mut self, v: Var) -> Result<Var> {
        let xv = self.value(v);
        if !xv.is_matrix() || xv.rows() == 0 {
            return Err(Error::InvalidArgument {
                op: "max_rows",
                msg: format!("need a non-empty matrix, got shape {:?}", xv.shape()),
            });
        }
        let (n, c) = (xv.rows(), xv.cols());
        let mut out = vec![f64::NEG_INFINITY; c];
        for row in xv.data().chunks_exact(c) {
            for (o, &x) in out.iter_mut().zip(row) {
                if x > *o {
                    *o = x;
                }
            }
        }
        let _ = n;
        let value = Tensor::vector(out);
        let rg = self.requires_grad(v);
        Ok(self.push(Op::MaxRows, vec![v], value, rg))
    }

    /// Mean over every element: `[*] -> [1]`.
    pub fn mean(&mut self, v: Var) -> Result<Var> {
        let xv = self.value(v);
        if xv.is_empty() {
            return Err(Error::InvalidArgument { op: "mean", msg: "empty tensor".into() });
        }
        let m = xv.data().iter().sum::<f64>() / xv.len() as f64;
        let rg = self.requires_grad(v);
        Ok(self.push(Op::Mean, vec![v], Tensor::scalar(m), rg))
    }

    /// Per-chunk means over a flat vector: `[sum(sizes)] -> [len(sizes)]`.
    pub fn chunk_mean(&mut self, v: Var, sizes: Vec<usize>) -> Result<Var> {
        let xv = self.value(v);
        let total: usize = sizes.iter().sum();
        if xv.shape().len() != 1 || total != xv.len() || sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument {
                op: "chunk_mean",
                msg: format!("sizes {sizes:?} incompatible with shape {:?}", xv.shape()),
            });
        }
        let mut out = Vec::with_capacity(sizes.len());
        let mut offset = 0;
        for &s in &sizes {
            let chunk = &xv.data()[offset..offset + s];
            out.push(chunk.iter().sum::<f64>() / s as f64);
            offset += s;
        }
        let rg = self.requires_grad(v);
        Ok(self.push(Op::ChunkMean { sizes }, vec![v], Tensor::vector(out), rg))
    }

    /// Sum across each row: `[n,c] -> [n]`.
    pub fn row_sum(&mut self, v: Var) -> Result<Var> {
        let xv = self.value(v);
        if !xv.is_matrix() {
            return Err(Error::InvalidArgument {
                op: "row_sum",
                msg: format!("need a matrix, got shape {:?}", xv.shape()),
            });
        }
        let c = xv.cols();
        let out: Vec<f64> = xv.data().chunks_exact(c).map(|r| r.iter().sum()).collect();
        let rg = self.requires_grad(v);
        Ok(self.push(Op::RowSum, vec![v], Tensor::vector(out), rg))
    }

    pub fn reshape(&mut self, v: Var, shape: Vec<usize>) -> Result<Var> {
        let xv = self.value(v);
        if shape.iter().product::<usize>() != xv.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: xv.shape().to_vec(),
                rhs: shape,
            });
        }
        let value = Tensor::new(shape, xv.data().to_vec())?;
        let rg = self.requires_grad(v);
        Ok(self.push(Op::Reshape, vec![v], value, rg))
    }

    /// Extract one element by flat index: `[*] -> [1]`.
    pub fn index(&mut self, v: Var, i: usize) -> Result<Var> {
        let xv = self.value(v);
        if i >= xv.len() {
            return Err(Error::InvalidArgument {
                op: "index",
                msg: format!("index {i} out of range for shape {:?}", xv.shape()),
            });
        }
        let value = Tensor::scalar(xv.data()[i]);
        let rg = self.requires_grad(v);
        Ok(self.push(Op::Index(i), vec![v], value, rg))
    }

    /// Select rows by index (duplicates allowed): `[n,c] -> [len(idx),c]`.
    pub fn gather_rows(&mut self, v: Var, indices: Vec<usize>) -> Result<Var> {
        let xv = self.value(v);
        if !xv.is_matrix() || indices.iter().any(|&i| i >= xv.rows()) {
            return Err(Error::InvalidArgument {
                op: "gather_rows",
                msg: format!("indices out of range for shape {:?}", xv.shape()),
            });
        }
        let c = xv.cols();
        let mut data = Vec::with_capacity(indices.len() * c);
        for &i in &indices {
            data.extend_from_slice(&xv.data()[i * c..(i + 1) * c]);
        }
        let value = Tensor::new(vec![indices.len(), c], data)?;
        let rg = self.requires_grad(v);
        Ok(self.push(Op::GatherRows(indices), vec![v], value, rg))
    }

    /// Pair two equal-length vectors into a two-column matrix: `([n],[n]) -> [n,2]`.
    pub fn stack_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape().len() != 1 || av.shape() != bv.shape() {
            return Err(Error::ShapeMismatch {
                op: "stack_cols",
                lhs: av.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let n = av.len();
        let mut data = Vec::with_capacity(2 * n);
        for (&x, &y) in av.data().iter().zip(bv.data()) {
            data.push(x);
            data.push(y);
        }
        let value = Tensor::new(vec![n, 2], data)?;
        let rg = self.any_requires_grad(&[a, b]);
        Ok(self.push(Op::StackCols, vec![a, b], value, rg))
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn concat_rows(&mut self, vars: &[Var]) -> Result<Var> {
        if vars.is_empty() {
            return Err(Error::InvalidArgument { op: "concat_rows", msg: "no inputs".into() });
        }
        let c = self.value(vars[0]).cols();
        let mut rows = 0;
        for v in vars {
            let t = self.value(*v);
            if !t.is_matrix() || t.cols() != c {
                return Err(Error::ShapeMismatch {
                    op: "concat_rows",
                    lhs: self.value(vars[0]).shape().to_vec(),
                    rhs: t.shape().to_vec(),
                });
            }
            rows += t.rows();
        }
        let mut data = Vec::with_capacity(rows * c);
        for v in vars {
            data.extend_from_slice(self.value(*v).data());
        }
        let value = Tensor::new(vec![rows, c], data)?;
        let rg = self.any_requires_grad(vars);
        Ok(self.push(Op::ConcatRows, vars.to_vec(), value, rg))
    }
}

impl Op {
    /// Add the gradient contribution flowing to `inputs[slot]` into `gin`.
    pub(crate) fn accumulate_input_grad(
        &self,
        slot: usize,
        inputs: &[&Tensor],
        output: &Tensor,
        gout: &Tensor,
        gin: &mut Tensor,
    ) {
        match self {
            Op::Leaf => {}
            Op::Add => accumulate_broadcast(gin, gout, 1.0),
            Op::Sub => {
                let sign = if slot == 0 { 1.0 } else { -1.0 };
                accumulate_broadcast(gin, gout, sign);
            }
            Op::Mul => {
                let other = inputs[1 - slot];
                if gin.is_scalar() && !gout.is_scalar() {
                    // broadcasted scalar input: reduce over all uses
                    let s: f64 =
                        gout.data().iter().zip(other.data()).map(|(&g, &o)| g * o).sum();
                    gin.data_mut()[0] += s;
                } else if other.is_scalar() && !gout.is_scalar() {
                    let ov = other.item();
                    for (gi, &g) in gin.data_mut().iter_mut().zip(gout.data()) {
                        *gi += g * ov;
                    }
                } else {
                    for ((gi, &g), &o) in
                        gin.data_mut().iter_mut().zip(gout.data()).zip(other.data())
                    {
                        *gi += g * o;
                    }
                }
            }
            Op::AddConst => accumulate_broadcast(gin, gout, 1.0),
            Op::MulConst(c) => accumulate_broadcast(gin, gout, *c),
            Op::MatMul => {
                let (a, b) = (inputs[0], inputs[1]);
                let (n, k, m) = (a.rows(), a.cols(), b.cols());
                if slot == 0 {
                    matmul_bt_into(gout.data(), n, m, b.data(), k, gin.data_mut());
                } else {
                    matmul_at_into(a.data(), n, k, gout.data(), m, gin.data_mut());
                }
            }
            Op::BiasAdd => {
                let m = inputs[0].cols();
                if slot == 0 {
                    for (gi, &g) in gin.data_mut().iter_mut().zip(gout.data()) {
                        *gi += g;
                    }
                } else {
                    for row in gout.data().chunks_exact(m) {
                        for (gi, &g) in gin.data_mut().iter_mut().zip(row) {
                            *gi += g;
                        }
                    }
                }
            }
            Op::Conv1d { dilation } => {
                let (x, w) = (inputs[0], inputs[1]);
                let (l, cin) = (x.rows(), x.cols());
                let (taps, cout) = (w.shape()[0], w.shape()[2]);
                if slot == 0 {
                    conv1d_grad_input(
                        gout.data(), l, cout, w.data(), taps, cin, *dilation,
                        gin.data_mut(),
                    );
                } else {
                    conv1d_grad_weight(
                        x.data(), l, cin, gout.data(), cout, taps, *dilation,
                        gin.data_mut(),
                    );
                }
            }
            Op::Relu => {
                for ((gi, &g), &x) in
                    gin.data_mut().iter_mut().zip(gout.data()).zip(inputs[0].data())
                {
                    if x > 0.0 {
                        *gi += g;
                    }
                }
            }
            Op::Elu => {
                for ((gi, &g), (&x, &y)) in gin
                    .data_mut()
                    .iter_mut()
                    .zip(gout.data())
                    .zip(inputs[0].data().iter().zip(output.data()))
                {
                    *gi += if x > 0.0 { g } else { g * (y + 1.0) };
                }
            }
            Op::Sigmoid => {
                for ((gi, &g), &y) in
                    gin.data_mut().iter_mut().zip(gout.data()).zip(output.data())
                {
                    *gi += g * y * (1.0 - y);
                }
            }
            Op::Sin => {
                for ((gi, &g), &x) in
                    gin.data_mut().iter_mut().zip(gout.data()).zip(inputs[0].data())
                {
                    *gi += g * x.cos();
                }
            }
            Op::Cos => {
                for ((gi, &g), &x) in
                    gin.data_mut().iter_mut().zip(gout.data()).zip(inputs[0].data())
                {
                    *gi -= g * x.sin();
                }
            }
            Op::Ln => {
                for ((gi, &g), &x) in
                    gin.data_mut().iter_mut().zip(gout.data()).zip(inputs[0].data())
                {
                    *gi += g / x;
                }
            }
            Op::Sqrt => {
                for ((gi, &g), &y) in
                    gin.data_mut().iter_mut().zip(gout.data()).zip(output.data())
                {
                    *gi += g * 0.5 / y.max(1e-12);
                }
            }
            Op::Clamp { lo, hi } => {
                for ((gi, &g), &x) in
                    gin.data_mut().iter_mut().zip(gout.data()).zip(inputs[0].data())
                {
                    if x >= *lo && x <= *hi {
                        *gi += g;
                    }
                }
            }
            Op::MaxRows => {
                // Route each column's gradient to the first row attaining the max.
                let x = inputs[0];
                let c = x.cols();
                for (j, (&g, &m)) in gout.data().iter().zip(output.data()).enumerate() {
                    for row in 0..x.rows() {
                        if x.data()[row * c + j] == m {
                            gin.data_mut()[row * c + j] += g;
                            break;
                        }
                    }
                }
            }
            Op::Mean => {
                let scale = gout.item() / inputs[0].len() as f64;
                for gi in gin.data_mut() {
                    *gi += scale;
                }
            }
            Op::ChunkMean { sizes } => {
                let mut offset = 0;
                for (&s, &g) in sizes.iter().zip(gout.data()) {
                    let scale = g / s as f64;
                    for gi in &mut gin.data_mut()[offset..offset + s] {
                        *gi += scale;
                    }
                    offset += s;
                }
            }
            Op::RowSum => {
                let c = inputs[0].cols();
                for (row, &g) in gout.data().iter().enumerate() {
                    for gi in &mut gin.data_mut()[row * c..(row + 1) * c] {
                        *gi += g;
                    }
                }
            }
            Op::Reshape => {
                for (gi, &g) in gin.data_mut().iter_mut().zip(gout.data()) {
                    *gi += g;
                }
            }
            Op::Index(i) => {
                gin.data_mut()[*i] += gout.item();
            }
            Op::GatherRows(indices) => {
                let c = inputs[0].cols();
                for (row, &i) in indices.iter().enumerate() {
                    let src = &gout.data()[row * c..(row + 1) * c];
                    for (gi, &g) in gin.data_mut()[i * c..(i + 1) * c].iter_mut().zip(src) {
                        *gi += g;
                    }
                }
            }
            Op::StackCols => {
                for (row, gi) in gin.data_mut().iter_mut().enumerate() {
                    *gi += gout.data()[row * 2 + slot];
                }
            }
            Op::ConcatRows => {
                let c = inputs[0].cols();
                let offset: usize = inputs[..slot].iter().map(|t| t.rows() * c).sum();
                let n = gin.len();
                for (gi, &g) in gin.data_mut().iter_mut().zip(&gout.data()[offset..offset + n]) {
                    *gi += g;
                }
            }
        }
    }
}

/// `gin += scale * gout`, reducing to a scalar slot when the input was broadcast.
fn accumulate_broadcast(gin: &mut Tensor, gout: &Tensor, scale: f64) {
    if gin.is_scalar() && !gout.is_scalar() {
        gin.data_mut()[0] += scale * gout.data().iter().sum::<f64>();
    } else {
        for (gi, &g) in gin.data_mut().iter_mut().zip(gout.data()) {
            *gi += scale * g;
        }
    }
}

/// `out[n,m] += a[n,k] @ b[k,m]`.
pub(crate) fn matmul_into(a: &[f64], n: usize, k: usize, b: &[f64], m: usize, out: &mut [f64]) {
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * m..(i + 1) * m];
        for (kk, &aik) in arow.iter().enumerate() {
            let brow = &b[kk * m..kk * m + m];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
}

/// `out[n,k] += g[n,m] @ b[k,m]^T`.
fn matmul_bt_into(g: &[f64], n: usize, m: usize, b: &[f64], k: usize, out: &mut [f64]) {
    for i in 0..n {
        let grow = &g[i * m..(i + 1) * m];
        let orow = &mut out[i * k..(i + 1) * k];
        for (kk, o) in orow.iter_mut().enumerate() {
            let brow = &b[kk * m..kk * m + m];
            let mut s = 0.0;
            for (&gv, &bv) in grow.iter().zip(brow) {
                s += gv * bv;
            }
            *o += s;
        }
    }
}

/// `out[k,m] += a[n,k]^T @ g[n,m]`.
fn matmul_at_into(a: &[f64], n: usize, k: usize, g: &[f64], m: usize, out: &mut [f64]) {
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let grow = &g[i * m..(i + 1) * m];
        for (kk, &aik) in arow.iter().enumerate() {
            let orow = &mut out[kk * m..kk * m + m];
            for (o, &gv) in orow.iter_mut().zip(grow) {
                *o += aik * gv;
            }
        }
    }
}

/// Valid output range for one tap so that `l + offset` stays inside `[0, len)`.
fn tap_range(len: usize, offset: isize) -> (usize, usize) {
    let start = if offset < 0 { (-offset) as usize } else { 0 };
    let end = if offset > 0 { len.saturating_sub(offset as usize) } else { len };
    (start.min(len), end)
}

fn conv1d_forward(
    x: &[f64],
    l: usize,
    cin: usize,
    w: &[f64],
    taps: usize,
    cout: usize,
    dilation: usize,
    out: &mut [f64],
) {
    let half = (taps - 1) / 2;
    for tap in 0..taps {
        let offset = (tap as isize - half as isize) * dilation as isize;
        let (start, end) = tap_range(l, offset);
        let wtap = &w[tap * cin * cout..(tap + 1) * cin * cout];
        for li in start..end {
            let xi = (li as isize + offset) as usize;
            let xrow = &x[xi * cin..(xi + 1) * cin];
            let orow = &mut out[li * cout..(li + 1) * cout];
            for (i, &xv) in xrow.iter().enumerate() {
                let wrow = &wtap[i * cout..(i + 1) * cout];
                for (o, &wv) in orow.iter_mut().zip(wrow) {
                    *o += xv * wv;
                }
            }
        }
    }
}

fn conv1d_grad_input(
    gout: &[f64],
    l: usize,
    cout: usize,
    w: &[f64],
    taps: usize,
    cin: usize,
    dilation: usize,
    gx: &mut [f64],
) {
    let half = (taps - 1) / 2;
    for tap in 0..taps {
        let offset = (tap as isize - half as isize) * dilation as isize;
        let (start, end) = tap_range(l, offset);
        let wtap = &w[tap * cin * cout..(tap + 1) * cin * cout];
        for li in start..end {
            let xi = (li as isize + offset) as usize;
            let grow = &gout[li * cout..(li + 1) * cout];
            let gxrow = &mut gx[xi * cin..(xi + 1) * cin];
            for (i, gxv) in gxrow.iter_mut().enumerate() {
                let wrow = &wtap[i * cout..(i + 1) * cout];
                let mut s = 0.0;
                for (&gv, &wv) in grow.iter().zip(wrow) {
                    s += gv * wv;
                }
                *gxv += s;
            }
        }
    }
}

fn conv1d_grad_weight(
    x: &[f64],
    l: usize,
    cin: usize,
    gout: &[f64],
    cout: usize,
    taps: usize,
    dilation: usize,
    gw: &mut [f64],
) {
    let half = (taps - 1) / 2;
    for tap in 0..taps {
        let offset = (tap as isize - half as isize) * dilation as isize;
        let (start, end) = tap_range(l, offset);
        let gwtap = &mut gw[tap * cin * cout..(tap + 1) * cin * cout];
        for li in start..end {
            let xi = (li as isize + offset) as usize;
            let xrow = &x[xi * cin..(xi + 1) * cin];
            let grow = &gout[li * cout..(li + 1) * cout];
            for (i, &xv) in xrow.iter().enumerate() {
                let gwrow = &mut gwtap[i * cout..(i + 1) * cout];
                for (o, &gv) in gwrow.iter_mut().zip(grow) {
                    *o += xv * gv;
                }
            }
        }
    }
}
