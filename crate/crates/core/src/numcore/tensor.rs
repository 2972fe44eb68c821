use std::fmt;

use super::NumError;

/// Dense row-major tensor of `f64` values.
///
/// Every extent is positive and every value is finite. Public constructors
/// reject violations; values produced internally by graph operations are
/// re-checked in debug builds.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NumError> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(NumError::InvalidShape { shape });
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NumError::LengthMismatch {
                shape,
                expected,
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumError::NonFinite {
                op: "Tensor::new",
                index,
            });
        }
        Ok(Self { shape, data })
    }

    /// Builds a tensor without validation. Callers guarantee the shape/data
    /// agreement; finiteness is verified by the graph in debug builds.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        assert!(value.is_finite(), "fill value must be finite");
        assert!(!shape.is_empty() && shape.iter().all(|&d| d > 0));
        let n = shape.iter().product();
        Self::from_parts(shape.to_vec(), vec![value; n])
    }

    pub fn scalar(value: f64) -> Result<Self, NumError> {
        Self::new(vec![1], vec![value])
    }

    pub fn vector(values: Vec<f64>) -> Result<Self, NumError> {
        Self::new(vec![values.len()], values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
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

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Returns a copy with a new shape of identical element count.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self, NumError> {
        Self::new(shape.to_vec(), self.data.clone())
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn add_assign_scaled(&mut self, other: &Tensor, factor: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const PREVIEW: usize = 8;
        let head: Vec<_> = self.data.iter().take(PREVIEW).collect();
        write!(f, "Tensor{:?} {:?}", self.shape, head)?;
        if self.data.len() > PREVIEW {
            write!(f, " …(+{})", self.data.len() - PREVIEW)?;
        }
        Ok(())
    }
}
