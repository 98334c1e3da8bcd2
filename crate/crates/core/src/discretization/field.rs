//! Complex nodal vectors stored as stacked real pairs.

/// Complex coefficient vector on the interior nodes, stored as `[re; im]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    data: Vec<f64>,
}

impl FieldVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            data: vec![0.0; 2 * n],
        }
    }

    pub fn from_parts(re: &[f64], im: &[f64]) -> Self {
        assert_eq!(re.len(), im.len(), "re and im must have equal length");
        let mut data = Vec::with_capacity(2 * re.len());
        data.extend_from_slice(re);
        data.extend_from_slice(im);
        Self { data }
    }

    /// Wraps a stacked `[re; im]` vector.
    pub fn from_stacked(data: Vec<f64>) -> Self {
        assert!(data.len().is_multiple_of(2), "stacked vector must have even length");
        Self { data }
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.data.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.data[..self.len()]
    }

    pub fn im(&self) -> &[f64] {
        &self.data[self.len()..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Multiplication by the imaginary unit: `(re, im) -> (-im, re)`.
    pub fn times_i(&self) -> Self {
        let n = self.len();
        let mut data = Vec::with_capacity(2 * n);
        data.extend(self.im().iter().map(|v| -v));
        data.extend_from_slice(self.re());
        Self { data }
    }

    /// Multiplication by `e^{iω}`.
    pub fn rotate_phase(&self, omega: f64) -> Self {
        let (s, c) = omega.sin_cos();
        let n = self.len();
        let (re, im) = (self.re(), self.im());
        let mut data = vec![0.0; 2 * n];
        for k in 0..n {
            data[k] = c * re[k] - s * im[k];
            data[n + k] = s * re[k] + c * im[k];
        }
        Self { data }
    }

    pub fn conj(&self) -> Self {
        let n = self.len();
        let mut data = self.data.clone();
        for v in &mut data[n..] {
            *v = -*v;
        }
        Self { data }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &FieldVector) -> Self {
        assert_eq!(self.data.len(), other.data.len());
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    /// Euclidean dot product of the stacked coefficient vectors.
    pub fn dot(&self, other: &[f64]) -> f64 {
        crate::linalg::dot(&self.data, other)
    }

    /// Nodal modulus squared.
    pub fn modulus_sq(&self) -> Vec<f64> {
        self.re()
            .iter()
            .zip(self.im())
            .map(|(a, b)| a * a + b * b)
            .collect()
    }
}

impl From<Vec<f64>> for FieldVector {
    fn from(data: Vec<f64>) -> Self {
        Self::from_stacked(data)
    }
}
