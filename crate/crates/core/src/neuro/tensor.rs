use crate::error::{Error, Result};
use crate::neuro::scalar::{dot, Scalar};

/// Dense row-major tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Argument(format!("tensor shape {shape:?} has a zero dimension")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::dim("tensor construction", n, data.len()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); n],
        }
    }

    pub fn vector(data: Vec<T>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    /// Builds a matrix from nested rows, e.g. `[[1, 0], [0, 1]]`.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Argument("ragged matrix rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.iter().map(|&v| T::lit(v))).collect();
        Self::matrix(rows.len(), cols, data)
    }

    pub fn from_f64(data: &[f64]) -> Self {
        Self::vector(data.iter().map(|&v| T::lit(v)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of rows when viewed as a matrix (first dimension).
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Row width when viewed as a matrix (product of trailing dimensions).
    pub fn cols(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, i: usize) -> &[T] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|&v| U::from_f64(v.to_f64_lossy()).unwrap_or_else(U::nan))
                .collect(),
        }
    }

    /// Matrix-vector product for a 2-D tensor.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if self.shape.len() != 2 || self.cols() != x.len() {
            return Err(Error::dim("matvec", format!("{:?} x [{}]", self.shape, self.cols()), format!("[{}]", x.len())));
        }
        Ok((0..self.rows()).map(|r| dot(self.row(r), x)).collect())
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax_slice<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::Argument("softmax of an empty vector".into()));
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    Ok(Tensor::vector(softmax_slice(logits.data())?))
}

/// `-w[target] * ln(probs[target])`, with uniform weights when none given.
pub fn cross_entropy<T: Scalar>(probs: &Tensor<T>, target: usize, class_weights: Option<&Tensor<T>>) -> Result<T> {
    let p = probs.data();
    if target >= p.len() {
        return Err(Error::index("cross_entropy target", target, p.len()));
    }
    let w = match class_weights {
        Some(w) if w.len() != p.len() => return Err(Error::dim("cross_entropy class weights", p.len(), w.len())),
        Some(w) => w.data()[target],
        None => T::one(),
    };
    Ok(-w * p[target].ln())
}

/// Index of the first maximal element; ties resolve to the lowest index.
pub fn argmax<T: Scalar>(v: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &x) in v.iter().enumerate() {
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}
