//! Small dense complex linear algebra kernel.
//!
//! Only what the beamformer needs: element-wise and outer products, a
//! Hermitian positive-definite Cholesky factorization with triangular
//! solves, and the dominant eigenpair of the pencil `A⁻¹B` (A Hermitian PD,
//! B Hermitian PSD) computed through the whitened matrix `L⁻¹BL⁻ᴴ`.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Relative tolerance for the Hermitian check on factorization inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Pivots below this fraction of the largest diagonal entry are rejected.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Self {
        ComplexVector(entries)
    }

    pub fn zeros(n: usize) -> Self {
        ComplexVector(vec![ZERO; n])
    }

    pub fn from_real(values: &[f64]) -> Self {
        ComplexVector(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product `selfᴴ·other`.
    pub fn dot(&self, other: &ComplexVector) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: C64) -> ComplexVector {
        ComplexVector(self.0.iter().map(|z| z * s).collect())
    }

    /// Unit-norm copy; returns `None` for the zero vector.
    pub fn normalized(&self) -> Option<ComplexVector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            None
        } else {
            Some(self.scale(C64::new(1.0 / n, 0.0)))
        }
    }

    /// Rotates the global phase so the largest-magnitude entry (first one
    /// on ties) is real and positive.
    pub fn phase_normalized(&self) -> ComplexVector {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (i, z) in self.0.iter().enumerate() {
            let a = z.norm();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if best_abs <= 0.0 {
            return self.clone();
        }
        let rot = self.0[best].conj() / best_abs;
        let mut out = self.scale(rot);
        out.0[best] = C64::new(best_abs, 0.0);
        out
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl From<Vec<C64>> for ComplexVector {
    fn from(v: Vec<C64>) -> Self {
        ComplexVector(v)
    }
}

impl FromIterator<C64> for ComplexVector {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        ComplexVector(iter.into_iter().collect())
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Builds a matrix from real-valued rows; panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Largest entry of `|A − Aᴴ|`; infinite for non-square input.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERMITIAN_TOL * self.max_abs()
    }

    /// Replaces the matrix with `(A + Aᴴ)/2`.
    pub fn symmetrize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            self[(i, i)] = C64::new(self[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(other, "matrix add")?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &ComplexMatrix) -> Result<()> {
        self.check_same_shape(other, "matrix add")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(other, "matrix sub")?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `diag(s)·A·diag(s)` for a real scaling vector.
    pub fn congruence_diag(&self, s: &[f64]) -> Result<ComplexMatrix> {
        if !self.is_square() || s.len() != self.rows {
            return Err(Error::Dimension {
                context: "diagonal congruence",
                expected: self.rows,
                found: s.len(),
            });
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)] * (s[i] * s[j])
        }))
    }

    pub fn mul_vec(&self, x: &ComplexVector) -> Result<ComplexVector> {
        if x.len() != self.cols {
            return Err(Error::Dimension {
                context: "matrix-vector product",
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x.iter())
                    .map(|(a, b)| a * b)
                    .sum::<C64>()
            })
            .collect())
    }

    pub fn mul_mat(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if other.rows != self.cols {
            return Err(Error::Dimension {
                context: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Hermitian form `xᴴ·A·x`, real part only.
    pub fn quadratic_form(&self, x: &ComplexVector) -> Result<f64> {
        let ax = self.mul_vec(x)?;
        Ok(x.dot(&ax).re)
    }

    fn check_same_shape(&self, other: &ComplexMatrix, context: &'static str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension {
                context,
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn hadamard(a: &ComplexVector, b: &ComplexVector) -> Result<ComplexVector> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "hadamard product",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x * y).collect())
}

/// `a·bᴴ`, entry (i, j) = a_i·conj(b_j).
pub fn outer(a: &ComplexVector, b: &ComplexVector) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

/// Lower-triangular factor `L` with `L·Lᴴ = A` and a real positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    l: ComplexMatrix,
}

impl CholeskyFactor {
    pub fn l(&self) -> &ComplexMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// `L·Lᴴ`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.l
            .mul_mat(&self.l.conj_transpose())
            .expect("square factor")
    }

    /// Solves `L·y = b`.
    pub fn forward(&self, b: &ComplexVector) -> Result<ComplexVector> {
        let n = self.dim();
        self.check_len(b.len())?;
        let mut y = b.clone();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= self.l[(i, k)] * y[k];
            }
            y[i] = acc / self.l[(i, i)].re;
        }
        Ok(y)
    }

    /// Solves `Lᴴ·x = y`.
    pub fn backward(&self, y: &ComplexVector) -> Result<ComplexVector> {
        let n = self.dim();
        self.check_len(y.len())?;
        let mut x = y.clone();
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in (i + 1)..n {
                acc -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = acc / self.l[(i, i)].re;
        }
        Ok(x)
    }

    /// Solves `(L·Lᴴ)·x = b`.
    pub fn solve_vec(&self, b: &ComplexVector) -> Result<ComplexVector> {
        self.backward(&self.forward(b)?)
    }

    /// Column-wise `(L·Lᴴ)⁻¹·B`.
    pub fn solve_mat(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_len(b.rows())?;
        let cols: Vec<ComplexVector> = (0..b.cols())
            .map(|j| self.solve_vec(&b.column(j)))
            .collect::<Result<_>>()?;
        Ok(ComplexMatrix::from_fn(b.rows(), b.cols(), |i, j| cols[j][i]))
    }

    /// Column-wise `L⁻¹·B`.
    fn forward_mat(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let cols: Vec<ComplexVector> = (0..b.cols())
            .map(|j| self.forward(&b.column(j)))
            .collect::<Result<_>>()?;
        Ok(ComplexMatrix::from_fn(b.rows(), b.cols(), |i, j| cols[j][i]))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Dimension {
                context: "triangular solve",
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }
}

pub fn cholesky(a: &ComplexMatrix) -> Result<CholeskyFactor> {
    if !a.is_square() {
        return Err(Error::Dimension {
            context: "cholesky",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL * a.max_abs() {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    let n = a.rows();
    let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let floor = PIVOT_TOL * max_diag;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > floor) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(CholeskyFactor { l })
}

/// Hermitian PSD right-hand side of the pencil; the rank-one form
/// `u·uᴴ` enables the closed-form eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub enum PsdOperand {
    Dense(ComplexMatrix),
    RankOne(ComplexVector),
}

impl PsdOperand {
    pub fn dim(&self) -> usize {
        match self {
            PsdOperand::Dense(m) => m.rows(),
            PsdOperand::RankOne(u) => u.len(),
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        match self {
            PsdOperand::Dense(m) => m.clone(),
            PsdOperand::RankOne(u) => outer(u, u),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: ComplexVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Relative change of the eigenvalue between iterations.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

// Power iterations between squarings of the iteration operator.
const SQUARING_PERIOD: usize = 32;

/// Principal eigenpair of `A⁻¹·B`, with `A` given by its Cholesky factor.
///
/// Dense `B` goes through the whitened Hermitian matrix `C = L⁻¹·B·L⁻ᴴ`
/// (same spectrum as `A⁻¹B`); the eigenvector of `A⁻¹B` is `L⁻ᴴ·v_C`,
/// returned with unit Euclidean norm and its largest entry real positive.
/// When the iteration has not settled after a block of steps the operator is
/// replaced by its normalized square, which keeps the fixed point and widens
/// the gap between the two leading eigenvalues.
pub fn dominant_eigenpair(
    a_factor: &CholeskyFactor,
    b: &PsdOperand,
    opts: EigenOptions,
) -> Result<EigenPair> {
    let n = a_factor.dim();
    if b.dim() != n {
        return Err(Error::Dimension {
            context: "dominant eigenpair",
            expected: n,
            found: b.dim(),
        });
    }
    match b {
        PsdOperand::RankOne(u) => Ok(rank_one_eigenpair(a_factor, u)?),
        PsdOperand::Dense(bm) => whitened_power_iteration(a_factor, bm, opts),
    }
}

fn start_vector(n: usize) -> ComplexVector {
    ComplexVector(vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n])
}

fn rank_one_eigenpair(a_factor: &CholeskyFactor, u: &ComplexVector) -> Result<EigenPair> {
    let y = a_factor.solve_vec(u)?;
    let value = u.dot(&y).re.max(0.0);
    let vector = match y.normalized() {
        Some(v) => v.phase_normalized(),
        None => a_factor
            .backward(&start_vector(u.len()))?
            .normalized()
            .unwrap_or_else(|| start_vector(u.len()))
            .phase_normalized(),
    };
    Ok(EigenPair { value, vector })
}

fn whitened_power_iteration(
    a_factor: &CholeskyFactor,
    b: &ComplexMatrix,
    opts: EigenOptions,
) -> Result<EigenPair> {
    let n = a_factor.dim();
    if n == 0 {
        return Ok(EigenPair {
            value: 0.0,
            vector: ComplexVector::zeros(0),
        });
    }
    // C = L⁻¹·B·L⁻ᴴ = L⁻¹·(L⁻¹·B)ᴴ for Hermitian B.
    let y = a_factor.forward_mat(b)?;
    let mut c = a_factor.forward_mat(&y.conj_transpose())?;
    c.symmetrize();
    let c_norm = c.frobenius_norm();

    let finish = |v_c: &ComplexVector, value: f64| -> Result<EigenPair> {
        let x = a_factor.backward(v_c)?;
        let vector = x
            .normalized()
            .unwrap_or_else(|| start_vector(n))
            .phase_normalized();
        Ok(EigenPair {
            value: value.max(0.0),
            vector,
        })
    };

    if c_norm == 0.0 {
        return finish(&start_vector(n), 0.0);
    }

    let mut v = start_vector(n);
    let stall_floor = 1e-14 * c_norm;
    if c.mul_vec(&v)?.norm() <= stall_floor {
        v[0] += 1e-6;
        v = v.normalized().expect("nonzero start");
        if c.mul_vec(&v)?.norm() <= stall_floor {
            // start still in the null space: use the heaviest column of C
            let j = (0..n)
                .max_by(|&p, &q| c.column(p).norm().total_cmp(&c.column(q).norm()))
                .unwrap_or(0);
            v = c.column(j).normalized().expect("nonzero column");
        }
    }

    let residual_tol = opts.tol * c_norm;
    let mut op = c.clone();
    let mut prev = f64::NAN;
    let mut value = 0.0;
    for iter in 1..=opts.max_iter {
        let w = op.mul_vec(&v)?;
        v = match w.normalized() {
            Some(w) => w,
            None => break,
        };
        let cv = c.mul_vec(&v)?;
        value = v.dot(&cv).re;
        let residual = cv
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b * value).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if (value - prev).abs() <= opts.tol * value.abs() && residual <= residual_tol {
            return finish(&v, value);
        }
        prev = value;
        if iter % SQUARING_PERIOD == 0 {
            let mut sq = op.mul_mat(&op)?;
            sq.symmetrize();
            let s = sq.frobenius_norm();
            if s > 0.0 && s.is_finite() {
                op = sq.scale(1.0 / s);
            }
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        value,
        vector: v,
    })
}
