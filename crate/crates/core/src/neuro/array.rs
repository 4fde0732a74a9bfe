use std::fmt;

use super::NeuroError;

/// Dense row-major matrix of `f64`.
///
/// Column vectors are `n x 1` matrices; every activation in the network is
/// carried as one.
#[derive(Clone, PartialEq)]
pub struct Array2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Array2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Array2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("data", &self.data)
            .finish()
    }
}

impl Array2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Array2 {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out.data[i * n + i] = 1.0;
        }
        out
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NeuroError> {
        if data.len() != rows * cols {
            return Err(NeuroError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Array2 { rows, cols, data })
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        Array2 {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn scalar(value: f64) -> Self {
        Array2 {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// The single value of a `1 x 1` array.
    pub fn item(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn sq_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Array2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, NeuroError> {
        if self.shape() != other.shape() {
            return Err(NeuroError::shape(op, self.shape(), other.shape()));
        }
        Ok(Array2 {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, NeuroError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, NeuroError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn elementwise_mul(&self, other: &Self) -> Result<Self, NeuroError> {
        self.zip_with(other, "elementwise_mul", |a, b| a * b)
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    /// In-place `self += other`; shapes must match.
    pub fn add_assign(&mut self, other: &Self) -> Result<(), NeuroError> {
        if self.shape() != other.shape() {
            return Err(NeuroError::shape("add_assign", self.shape(), other.shape()));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, NeuroError> {
        if self.cols != other.rows {
            return Err(NeuroError::shape("matmul", self.shape(), other.shape()));
        }
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * p];
        for i in 0..n {
            let a_row = &self.data[i * m..(i + 1) * m];
            let out_row = &mut out[i * p..(i + 1) * p];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * p..(k + 1) * p];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Array2 {
            rows: n,
            cols: p,
            data: out,
        })
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Self) -> Result<Self, NeuroError> {
        if self.rows != other.rows {
            return Err(NeuroError::shape("t_matmul", self.shape(), other.shape()));
        }
        let (m, n, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * p];
        for k in 0..m {
            let a_row = &self.data[k * n..(k + 1) * n];
            let b_row = &other.data[k * p..(k + 1) * p];
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out[i * p..(i + 1) * p];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Array2 {
            rows: n,
            cols: p,
            data: out,
        })
    }

    /// `self · otherᵀ` without materializing the transpose.
    pub fn matmul_t(&self, other: &Self) -> Result<Self, NeuroError> {
        if self.cols != other.cols {
            return Err(NeuroError::shape("matmul_t", self.shape(), other.shape()));
        }
        let (n, m, p) = (self.rows, self.cols, other.rows);
        let mut out = vec![0.0; n * p];
        for i in 0..n {
            let a_row = &self.data[i * m..(i + 1) * m];
            for j in 0..p {
                let b_row = &other.data[j * m..(j + 1) * m];
                out[i * p + j] = a_row.iter().zip(b_row).map(|(a, b)| a * b).sum();
            }
        }
        Ok(Array2 {
            rows: n,
            cols: p,
            data: out,
        })
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Stack arrays with equal column counts on top of each other.
    pub fn concat_rows(parts: &[&Array2]) -> Result<Self, NeuroError> {
        let Some(first) = parts.first() else {
            return Err(NeuroError::Empty("concat_rows"));
        };
        let cols = first.cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.cols != cols {
                return Err(NeuroError::shape("concat_rows", first.shape(), p.shape()));
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(Array2 { rows, cols, data })
    }

    /// Place arrays with equal row counts side by side.
    pub fn concat_cols(parts: &[&Array2]) -> Result<Self, NeuroError> {
        let Some(first) = parts.first() else {
            return Err(NeuroError::Empty("concat_cols"));
        };
        let rows = first.rows;
        for p in parts {
            if p.rows != rows {
                return Err(NeuroError::shape("concat_cols", first.shape(), p.shape()));
            }
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(r));
            }
        }
        Ok(Array2 { rows, cols, data })
    }

    pub fn tanh(&self) -> Self {
        self.map(f64::tanh)
    }

    pub fn sigmoid(&self) -> Self {
        self.map(sigmoid)
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.data.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, _)| i)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matmul_is_noop() {
        let a = Array2::from_vec(3, 2, vec![1.0, -2.0, 0.5, 4.0, 3.0, 7.0]).unwrap();
        assert_eq!(Array2::identity(3).matmul(&a).unwrap(), a);
    }

    #[test]
    fn transposed_products_agree_with_explicit_transpose() {
        let a = Array2::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Array2::from_vec(2, 2, vec![0.5, -1.0, 2.0, 0.25]).unwrap();
        assert_eq!(a.t_matmul(&b).unwrap(), a.transpose().matmul(&b).unwrap());
        let c = Array2::from_vec(4, 3, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(a.matmul_t(&c).unwrap(), a.matmul(&c.transpose()).unwrap());
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let a = Array2::zeros(2, 3);
        let b = Array2::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err().to_string();
        assert!(err.contains("2x3"), "{err}");
        assert!(a.add(&Array2::zeros(3, 2)).is_err());
    }

    #[test]
    fn activations_at_zero() {
        assert_eq!(Array2::scalar(0.0).sigmoid().item(), Some(0.5));
        assert_eq!(Array2::scalar(0.0).tanh().item(), Some(0.0));
        assert!(sigmoid(-800.0).is_finite() && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn concat_layouts() {
        let a = Array2::column(&[1.0, 2.0]);
        let b = Array2::column(&[3.0]);
        assert_eq!(Array2::concat_rows(&[&a, &b]).unwrap().data(), &[1.0, 2.0, 3.0]);
        let c = Array2::column(&[5.0, 6.0]);
        let m = Array2::concat_cols(&[&a, &c]).unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m.data(), &[1.0, 5.0, 2.0, 6.0]);
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(Array2::column(&[0.2, 0.4, 0.4]).argmax(), Some(1));
    }
}
