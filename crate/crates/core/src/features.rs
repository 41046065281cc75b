//! Dense row-major feature matrices used by the nuisance learners.

/// Row-major `rows x cols` matrix of covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Features {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "feature buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged feature rows");
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> Features {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Features::new(idx.len(), self.cols, data)
    }

    /// Appends `extra` as trailing columns.
    pub fn hstack(&self, extra: &Features) -> Features {
        assert_eq!(self.rows, extra.rows);
        let cols = self.cols + extra.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(extra.row(i));
        }
        Features::new(self.rows, cols, data)
    }

    /// Appends a single trailing column.
    pub fn with_column(&self, col: &[f64]) -> Features {
        assert_eq!(self.rows, col.len());
        self.hstack(&Features::new(col.len(), 1, col.to_vec()))
    }

    /// Same matrix with column `j` replaced by `values`.
    pub fn replace_column(&self, j: usize, values: &[f64]) -> Features {
        assert_eq!(self.rows, values.len());
        let mut out = self.clone();
        for (i, &v) in values.iter().enumerate() {
            out.data[i * self.cols + j] = v;
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
