//! Dense integer matrix with the arithmetic semantics the rest of the
//! crate is built on: 32-bit storage and accumulation, truncation-toward-
//! zero division, inclusive clamping, and seeded uniform fill.
//!
//! Values carrying "8-bit semantics" (weights, biases, activations) stay
//! within [-127, 127] by contract of the code that produces them; the
//! storage width is uniformly 32-bit.
//!
//! With the `checked` feature (default) any intermediate outside the
//! 32-bit range raises [`Error::Overflow`]; without it the arithmetic
//! wraps. The saturating variants used by the instrumented
//! backpropagation mode clamp at the 32-bit bounds and count every
//! saturation event instead of failing.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Truncating integer division, rounding toward zero (so `-7/2 = -3`).
pub fn trunc_div(a: i32, b: i32) -> Result<i32> {
    if b == 0 {
        return Err(Error::DivisionByZero);
    }
    narrow(a as i64 / b as i64, || "trunc_div(i32::MIN, -1)".into())
}

/// Narrows an exact 64-bit intermediate to 32 bits. Checked builds fail,
/// unchecked builds wrap (two's complement truncation).
#[inline]
fn narrow(v: i64, context: impl FnOnce() -> String) -> Result<i32> {
    if (i32::MIN as i64..=i32::MAX as i64).contains(&v) {
        return Ok(v as i32);
    }
    #[cfg(feature = "checked")]
    {
        Err(Error::Overflow { context: context() })
    }
    #[cfg(not(feature = "checked"))]
    {
        let _ = context;
        Ok(v as i32)
    }
}

/// Clamps a 64-bit intermediate to the 32-bit range, counting each
/// saturation. Used by the instrumented BP mode, which must observe
/// overflow rather than fail on it.
#[inline]
fn saturate(v: i64, counter: &mut u64) -> i32 {
    if v > i32::MAX as i64 {
        *counter += 1;
        i32::MAX
    } else if v < i32::MIN as i64 {
        *counter += 1;
        i32::MIN
    } else {
        v as i32
    }
}

/// Dense row-major matrix of 32-bit signed integers.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i32>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<IntMatrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension(format!("{rows}x{cols}")));
        }
        Ok(IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<i32>) -> Result<IntMatrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension(format!("{rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidDimension(format!(
                "{rows}x{cols} needs {} elements, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows<R: AsRef<[i32]>>(rows: &[R]) -> Result<IntMatrix> {
        if rows.is_empty() || rows[0].as_ref().is_empty() {
            return Err(Error::InvalidDimension("empty row list".into()));
        }
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidDimension(format!(
                    "ragged rows: {} vs {}",
                    r.len(),
                    cols
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Result<IntMatrix> {
        let mut m = IntMatrix::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        Ok(m)
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

    pub fn as_slice(&self) -> &[i32] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> i32 {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i32) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        self.data[r * self.cols + c] = v;
    }

    pub fn fill(&mut self, v: i32) {
        self.data.fill(v);
    }

    pub fn row(&self, r: usize) -> &[i32] {
        assert!(r < self.rows, "row {r} out of bounds");
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Largest absolute element value (exact even for `i32::MIN`).
    pub fn max_abs(&self) -> i64 {
        self.data
            .iter()
            .map(|&v| (v as i64).abs())
            .max()
            .unwrap_or(0)
    }

    /// Matrix product with 32-bit accumulation.
    ///
    /// When the worst-case bound `max|a|·max|b|·inner` fits in 32 bits no
    /// intermediate can overflow and a branch-light kernel runs; otherwise
    /// every step is narrowed individually.
    pub fn matmul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut data = vec![0i32; m * n];
        let bound = self.max_abs() * other.max_abs() * k as i64;
        if bound <= i32::MAX as i64 {
            for i in 0..m {
                let arow = &self.data[i * k..(i + 1) * k];
                let out = &mut data[i * n..(i + 1) * n];
                for (kk, &av) in arow.iter().enumerate() {
                    if av == 0 {
                        continue;
                    }
                    let brow = &other.data[kk * n..(kk + 1) * n];
                    for (o, &bv) in out.iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
        } else {
            for i in 0..m {
                for j in 0..n {
                    let mut acc = 0i32;
                    for kk in 0..k {
                        let prod = narrow(
                            self.data[i * k + kk] as i64 * other.data[kk * n + j] as i64,
                            || format!("matmul product at ({i},{j}) step {kk}"),
                        )?;
                        acc = narrow(acc as i64 + prod as i64, || {
                            format!("matmul sum at ({i},{j}) step {kk}")
                        })?;
                    }
                    data[i * n + j] = acc;
                }
            }
        }
        Ok(IntMatrix {
            rows: m,
            cols: n,
            data,
        })
    }

    /// Matrix product where every multiply and add saturates at the
    /// 32-bit bounds; `counter` is incremented once per saturation.
    pub fn matmul_saturating(&self, other: &IntMatrix, counter: &mut u64) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut data = vec![0i32; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0i32;
                for kk in 0..k {
                    let prod = saturate(
                        self.data[i * k + kk] as i64 * other.data[kk * n + j] as i64,
                        counter,
                    );
                    acc = saturate(acc as i64 + prod as i64, counter);
                }
                data[i * n + j] = acc;
            }
        }
        Ok(IntMatrix {
            rows: m,
            cols: n,
            data,
        })
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut data = vec![0i32; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        IntMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "hadamard {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| narrow(a as i64 * b as i64, || "hadamard".into()))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Elementwise sum. A 1-row `other` with matching width broadcasts
    /// across all rows (bias addition).
    pub fn add(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if other.rows == 1 && self.cols == other.cols && self.rows != 1 {
            let mut data = Vec::with_capacity(self.data.len());
            for i in 0..self.rows {
                for j in 0..self.cols {
                    data.push(narrow(
                        self.data[i * self.cols + j] as i64 + other.data[j] as i64,
                        || "broadcast add".into(),
                    )?);
                }
            }
            return Ok(IntMatrix {
                rows: self.rows,
                cols: self.cols,
                data,
            });
        }
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "add {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| narrow(a as i64 + b as i64, || "add".into()))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Elementwise difference (no broadcasting).
    pub fn sub(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "sub {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| narrow(a as i64 - b as i64, || "sub".into()))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Elementwise difference with 32-bit saturation counting.
    pub fn sub_saturating(&self, other: &IntMatrix, counter: &mut u64) -> Result<IntMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "sub {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| saturate(a as i64 - b as i64, counter))
            .collect();
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Elementwise truncating division by a scalar.
    pub fn scalar_trunc_div(&self, d: i32) -> Result<IntMatrix> {
        if d == 0 {
            return Err(Error::DivisionByZero);
        }
        self.scalar_trunc_div_i64(d as i64)
    }

    /// Elementwise truncating division by a 64-bit scalar; the update
    /// divisor `lr_inverse × batch_div` can exceed 32 bits.
    pub fn scalar_trunc_div_i64(&self, d: i64) -> Result<IntMatrix> {
        if d == 0 {
            return Err(Error::DivisionByZero);
        }
        let data = self
            .data
            .iter()
            .map(|&v| narrow(v as i64 / d, || "scalar_trunc_div".into()))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Limits every element to the inclusive range `[lo, hi]`.
    pub fn clamp(&self, lo: i32, hi: i32) -> Result<IntMatrix> {
        if lo > hi {
            return Err(Error::InvalidRange { lo, hi });
        }
        let data = self.data.iter().map(|&v| v.clamp(lo, hi)).collect();
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Fills every element with an independent uniform draw from the
    /// inclusive range `[lo, hi]`.
    pub fn random_fill(&mut self, rng: &mut Rng, lo: i32, hi: i32) -> Result<()> {
        if lo > hi {
            return Err(Error::InvalidRange { lo, hi });
        }
        for v in &mut self.data {
            *v = rng.uniform_i32(lo, hi);
        }
        Ok(())
    }

    /// Index of the row's maximum; ties break toward the lowest index.
    pub fn argmax_row(&self, row: usize) -> Result<usize> {
        if row >= self.rows {
            return Err(Error::IndexOutOfBounds(format!(
                "row {row} of {}",
                self.rows
            )));
        }
        let r = self.row(row);
        let mut best = 0;
        for (j, &v) in r.iter().enumerate() {
            if v > r[best] {
                best = j;
            }
        }
        Ok(best)
    }

    /// Per-column sums as a 1×cols matrix.
    pub fn column_sums(&self) -> Result<IntMatrix> {
        let mut data = vec![0i64; self.cols];
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                data[j] += v as i64;
            }
        }
        let data = data
            .into_iter()
            .map(|v| narrow(v, || "column_sums".into()))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMatrix {
            rows: 1,
            cols: self.cols,
            data,
        })
    }

    /// Per-column sums with 32-bit saturation counting.
    pub fn column_sums_saturating(&self, counter: &mut u64) -> IntMatrix {
        let mut data = vec![0i32; self.cols];
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                data[j] = saturate(data[j] as i64 + v as i64, counter);
            }
        }
        IntMatrix {
            rows: 1,
            cols: self.cols,
            data,
        }
    }
}
