use num_complex::Complex64;

use super::sum::kahan_sum;
use crate::error::{Error, Result};

/// Scalar types a [`Grid2`] can hold.
pub trait Element: Copy + Send + Sync + std::fmt::Debug + 'static {
    fn is_finite_value(&self) -> bool;
    fn magnitude_sq(&self) -> f64;
}

impl Element for f64 {
    #[inline]
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn magnitude_sq(&self) -> f64 {
        self * self
    }
}

impl Element for Complex64 {
    #[inline]
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn magnitude_sq(&self) -> f64 {
        self.norm_sqr()
    }
}

/// Dense row-major 2D array with at least one row and one column.
///
/// Every constructor rejects non-finite values, so a `Grid2` in hand is
/// always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type Grid2C = Grid2<Complex64>;
pub type Grid2R = Grid2<f64>;

pub(crate) fn checked_len(rows: usize, cols: usize) -> Result<usize> {
    if rows == 0 || cols == 0 {
        return Err(Error::Param(format!(
            "grid dimensions must be >= 1, got {rows} x {cols}"
        )));
    }
    let n = rows
        .checked_mul(cols)
        .ok_or(Error::SizeOverflow { rows, cols })?;
    // Keep byte sizes of complex payloads addressable as well.
    if n.checked_mul(16).map_or(true, |b| b > isize::MAX as usize) {
        return Err(Error::SizeOverflow { rows, cols });
    }
    Ok(n)
}

impl<T> Grid2<T> {
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

impl<T: Element> Grid2<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        let n = checked_len(rows, cols)?;
        if data.len() != n {
            return Err(Error::Param(format!(
                "data length {} does not match {rows} x {cols}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite_value()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Result<Self> {
        let n = checked_len(rows, cols)?;
        Self::from_vec(rows, cols, vec![value; n])
    }

    /// Builds a grid from `f(row, col)`, evaluated in row-major order.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let n = checked_len(rows, cols)?;
        let mut data = Vec::with_capacity(n);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    /// Wraps data already known to be finite and correctly sized.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|v| v.is_finite_value()));
        Self { rows, cols, data }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false: grids have at least one element.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Sum of squared magnitudes, compensated, in row-major order.
    pub fn energy(&self) -> f64 {
        kahan_sum(self.data.iter().map(|v| v.magnitude_sq()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.magnitude_sq().sqrt())
            .fold(0.0, f64::max)
    }

    /// Applies `f` elementwise; fails if `f` produces a non-finite value.
    pub fn try_map<U: Element>(&self, f: impl Fn(T) -> U) -> Result<Grid2<U>> {
        Grid2::from_vec(
            self.rows,
            self.cols,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn ensure_same_shape<U>(&self, other: &Grid2<U>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    /// Copies the `h x w` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, h: usize, w: usize) -> Result<Self> {
        if h == 0 || w == 0 || r0 + h > self.rows || c0 + w > self.cols {
            return Err(Error::Param(format!(
                "block {h}x{w} at ({r0},{c0}) outside {}x{}",
                self.rows, self.cols
            )));
        }
        let mut data = Vec::with_capacity(h * w);
        for r in r0..r0 + h {
            data.extend_from_slice(&self.data[r * self.cols + c0..r * self.cols + c0 + w]);
        }
        Ok(Self::from_raw(h, w, data))
    }
}

impl Grid2C {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::filled(rows, cols, Complex64::new(0.0, 0.0))
    }

    pub fn from_real(g: &Grid2R) -> Self {
        Self::from_raw(
            g.rows,
            g.cols,
            g.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn abs(&self) -> Grid2R {
        Grid2::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v.norm()).collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Result<Self> {
        self.try_map(|v| v * s)
    }
}

impl Grid2R {
    pub fn to_complex(&self) -> Grid2C {
        Grid2C::from_real(self)
    }
}
