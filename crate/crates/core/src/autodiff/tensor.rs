use crate::scalar::Scalar;

/// Dense row-major 2D array. The value type flowing through the tape; also
/// used directly for gradient-free evaluation passes.
#[derive(Clone, PartialEq)]
pub struct Tensor<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "tensor data length {} does not fill {}x{}",
            data.len(),
            rows,
            cols
        );
        Tensor { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        assert!(!rows.is_empty(), "tensor needs at least one row");
        let (nrows, cols) = (rows.len(), rows[0].len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows.into_iter().flatten().collect();
        Tensor { rows: nrows, cols, data }
    }

    /// 1x1 tensor holding a single value.
    pub fn scalar(v: S) -> Self {
        Tensor { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// The single value of a 1x1 tensor.
    pub fn item(&self) -> S {
        assert_eq!(self.shape(), (1, 1), "item() on non-scalar tensor {}x{}", self.rows, self.cols);
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self · rhs` (ikj order keeps the inner loop contiguous).
    pub fn matmul(&self, rhs: &Tensor<S>) -> Tensor<S> {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} · {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![S::zero(); m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (p, &aip) in arow.iter().enumerate() {
                let brow = &rhs.data[p * n..(p + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += aip * b;
                }
            }
        }
        Tensor { rows: m, cols: n, data: out }
    }

    /// `selfᵀ · rhs` without materializing the transpose (backward of matmul).
    pub fn matmul_tn(&self, rhs: &Tensor<S>) -> Tensor<S> {
        assert_eq!(
            self.rows, rhs.rows,
            "matmul_tn shape mismatch: ({}x{})ᵀ · {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let (m, k, n) = (self.cols, self.rows, rhs.cols);
        let mut out = vec![S::zero(); m * n];
        for p in 0..k {
            let arow = &self.data[p * m..(p + 1) * m];
            let brow = &rhs.data[p * n..(p + 1) * n];
            for (i, &a) in arow.iter().enumerate() {
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Tensor { rows: m, cols: n, data: out }
    }

    /// `self · rhsᵀ` without materializing the transpose (backward of matmul).
    pub fn matmul_nt(&self, rhs: &Tensor<S>) -> Tensor<S> {
        assert_eq!(
            self.cols, rhs.cols,
            "matmul_nt shape mismatch: {}x{} · ({}x{})ᵀ",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let (m, k, n) = (self.rows, self.cols, rhs.rows);
        let mut out = vec![S::zero(); m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            for j in 0..n {
                let brow = &rhs.data[j * k..(j + 1) * k];
                let mut acc = S::zero();
                for (&a, &b) in arow.iter().zip(brow) {
                    acc += a * b;
                }
                out[i * n + j] = acc;
            }
        }
        Tensor { rows: m, cols: n, data: out }
    }

    pub fn transpose(&self) -> Tensor<S> {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Add a 1xN bias to every row.
    pub fn add_rowwise(&self, bias: &Tensor<S>) -> Tensor<S> {
        assert_eq!(
            (1, self.cols),
            bias.shape(),
            "add_rowwise shape mismatch: {}x{} + {}x{}",
            self.rows,
            self.cols,
            bias.rows,
            bias.cols
        );
        let mut out = self.clone();
        for r in 0..out.rows {
            let row = &mut out.data[r * out.cols..(r + 1) * out.cols];
            for (o, &b) in row.iter_mut().zip(&bias.data) {
                *o += b;
            }
        }
        out
    }

    pub fn relu(&self) -> Tensor<S> {
        let mut out = self.clone();
        for v in &mut out.data {
            if *v < S::zero() {
                *v = S::zero();
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Tensor<S>) {
        assert_eq!(
            self.shape(),
            other.shape(),
            "add_assign shape mismatch: {}x{} += {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        for (o, &v) in self.data.iter_mut().zip(&other.data) {
            *o += v;
        }
    }

    pub fn add(&self, other: &Tensor<S>) -> Tensor<S> {
        assert_eq!(
            self.shape(),
            other.shape(),
            "add shape mismatch: {}x{} + {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let mut out = self.clone();
        for (o, &v) in out.data.iter_mut().zip(&other.data) {
            *o += v;
        }
        out
    }

    pub fn scale(&self, s: S) -> Tensor<S> {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn sum(&self) -> S {
        self.data.iter().copied().sum()
    }

    /// Row-wise argmax over a two-column logit matrix; ties resolve to 0.
    pub fn argmax2(&self) -> Vec<u8> {
        assert_eq!(self.cols, 2, "argmax2 expects 2 columns, got {}", self.cols);
        (0..self.rows).map(|r| u8::from(self.get(r, 1) > self.get(r, 0))).collect()
    }

    /// FNV-1a over the raw bit patterns (widened to f64, which is lossless);
    /// used to audit that frozen parameter groups stay bit-identical through
    /// a step.
    pub fn bit_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for v in &self.data {
            for b in v.to64().to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }
}

impl<S: Scalar> std::fmt::Debug for Tensor<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tensor[{}x{}]", self.rows, self.cols)?;
        if self.data.len() <= 8 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}
