//! Dense complex linear algebra.
//!
//! Matrices are row-major `f64` complex arrays. The sizes handled here are
//! small (at most 32x32 for the circuits this crate targets), so nothing is
//! blocked or sparse.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative residual norm below which a column counts as linearly dependent
/// on the columns before it.
pub const DEPENDENCE_THRESHOLD: f64 = 1e-12;

/// Size of the perturbation added to a dependent column, scaled by
/// `max(1, |column|)`.
pub const RESCUE_EPSILON: f64 = 1e-8;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Build from row-major data. Rejects wrong lengths and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "from_vec",
                format!("{} entries for a {rows}x{cols} matrix", data.len()),
            ));
        }
        if let Some(index) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("from_rows", "ragged rows"));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    /// Build from real-valued rows; convenient for permutation and rotation
    /// matrices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Complex matrix with independent standard normal real and imaginary parts.
    pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        ComplexMatrix { rows, cols, data }
    }

    /// Assemble a square matrix from its columns.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::shape("from_columns", "ragged columns"));
        }
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, &z) in col.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        Ok(m)
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                format!(
                    "{}x{} times {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &StateVector) -> Result<StateVector> {
        if self.cols != v.dim() {
            return Err(Error::shape(
                "mul_vec",
                format!("{}x{} times vector of length {}", self.rows, self.cols, v.dim()),
            ));
        }
        let amplitudes = (0..self.rows)
            .map(|i| dot_u(self.row(i), v.as_slice()))
            .collect();
        Ok(StateVector::new(amplitudes))
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        op: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(
                op,
                format!(
                    "{}x{} vs {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        Ok(ComplexMatrix {
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

    /// `self - alpha * other` in place.
    pub fn sub_scaled_assign(&mut self, alpha: f64, other: &ComplexMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape("sub_scaled_assign", "operand shapes differ"));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a -= b * alpha;
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn determinant(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(Error::shape("determinant", "matrix is not square"));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = ONE;
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap_or(k);
            if a[pivot * n + k] == ZERO {
                return Ok(ZERO);
            }
            if pivot != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[k * n + k];
            det *= p;
            for i in k + 1..n {
                let f = a[i * n + k] / p;
                if f == ZERO {
                    continue;
                }
                for j in k..n {
                    let v = a[k * n + j];
                    a[i * n + j] -= f * v;
                }
            }
        }
        Ok(det)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Amplitude vector of a pure state (or any complex vector of length `2^n`).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        StateVector { amplitudes }
    }

    pub fn zeros(dim: usize) -> Self {
        StateVector::new(vec![ZERO; dim])
    }

    /// Computational basis state `|index>` of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = StateVector::zeros(dim);
        v.amplitudes[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn is_normalized(&self, tolerance: f64) -> bool {
        (self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() <= tolerance
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for z in &mut self.amplitudes {
                *z /= n;
            }
        }
        self
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        dot(&self.amplitudes, &other.amplitudes)
    }

    pub fn scale(&self, s: Complex64) -> StateVector {
        StateVector::new(self.amplitudes.iter().map(|&z| z * s).collect())
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl Index<usize> for StateVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.amplitudes[i]
    }
}

/// Conjugated inner product `sum conj(a_i) b_i`.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Unconjugated product `sum a_i b_i`.
pub(crate) fn dot_u(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of `m^† m - I`.
pub fn unitarity_error(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::shape(
            "unitarity_error",
            format!("{}x{} is not square", m.rows(), m.cols()),
        ));
    }
    let n = m.rows();
    let mut sum = 0.0;
    // (m^† m)_{ij} = <col_i, col_j>
    let cols: Vec<Vec<Complex64>> = (0..n).map(|j| m.column(j)).collect();
    for i in 0..n {
        for j in 0..n {
            let mut g = dot(&cols[i], &cols[j]);
            if i == j {
                g -= ONE;
            }
            sum += g.norm_sqr();
        }
    }
    Ok(sum.sqrt())
}

/// Add `epsilon` to the first nonzero component of `v`, or to component 0 when
/// `v` is the zero vector.
pub fn rescue_dependent_column(v: &StateVector, epsilon: f64) -> StateVector {
    let index = v.as_slice().iter().position(|z| *z != ZERO).unwrap_or(0);
    perturb_component(v.as_slice(), index, epsilon)
}

fn perturb_component(v: &[Complex64], index: usize, epsilon: f64) -> StateVector {
    let mut out = v.to_vec();
    if let Some(z) = out.get_mut(index) {
        *z += epsilon;
    }
    StateVector::new(out)
}

/// Orthonormalise the columns of a square matrix with modified Gram-Schmidt.
///
/// Each column is swept twice against the finished columns, which keeps the
/// output orthonormal to working precision even for nearly dependent input.
/// A column whose first-sweep residual falls below
/// `DEPENDENCE_THRESHOLD * |column|` is perturbed with
/// [`rescue_dependent_column`] and orthogonalised again. If adding the
/// perturbation to the first nonzero component does not break the dependence
/// (that coordinate direction already lies in the span), the remaining
/// coordinates are tried in turn.
pub fn gram_schmidt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::shape(
            "gram_schmidt",
            format!("{}x{} is not square", m.rows(), m.cols()),
        ));
    }
    let n = m.rows();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for k in 0..n {
        let original = m.column(k);
        let col_norm = norm(&original);
        let epsilon = RESCUE_EPSILON * col_norm.max(1.0);

        let u = match orthonormalize_against(&original, &basis) {
            Some(u) => u,
            None => {
                let first = rescue_dependent_column(&StateVector::new(original.clone()), epsilon);
                let start = original.iter().position(|z| *z != ZERO).unwrap_or(0);
                std::iter::once(first)
                    .chain((1..n).map(|p| perturb_component(&original, (start + p) % n, epsilon)))
                    .find_map(|candidate| orthonormalize_against(candidate.as_slice(), &basis))
                    .unwrap_or_else(|| best_completion(&basis, n))
            }
        };
        basis.push(u);
    }
    ComplexMatrix::from_columns(&basis)
}

/// Two modified Gram-Schmidt sweeps over `basis`, then normalisation.
/// `None` when the first-sweep residual marks `v` as dependent.
fn orthonormalize_against(v: &[Complex64], basis: &[Vec<Complex64>]) -> Option<Vec<Complex64>> {
    let scale = norm(v);
    let mut r = v.to_vec();
    project_out(&mut r, basis);
    let residual = norm(&r);
    if residual.is_nan() || residual <= DEPENDENCE_THRESHOLD * scale {
        return None;
    }
    project_out(&mut r, basis);
    let residual = norm(&r);
    if residual == 0.0 {
        return None;
    }
    for z in &mut r {
        *z /= residual;
    }
    Some(r)
}

fn project_out(r: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for u in basis {
        let c = dot(u, r);
        for (x, &b) in r.iter_mut().zip(u) {
            *x -= c * b;
        }
    }
}

// Coordinate vector farthest from the current span. Only reached if every
// perturbed candidate failed, which cannot happen while basis.len() < n.
fn best_completion(basis: &[Vec<Complex64>], n: usize) -> Vec<Complex64> {
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for p in 0..n {
        let mut r = StateVector::basis(n, p).into_vec();
        project_out(&mut r, basis);
        project_out(&mut r, basis);
        let len = norm(&r);
        if best.as_ref().is_none_or(|(b, _)| len > *b) {
            best = Some((len, r));
        }
    }
    let (len, mut r) = best.expect("n > 0");
    for z in &mut r {
        *z /= len;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hadamard() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]]).unwrap()
    }

    #[test]
    fn identity_is_left_neutral() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 2.0), c(-3.0, 0.5)], vec![c(0.0, 1.0), c(4.0, -4.0)]])
            .unwrap();
        assert_eq!(ComplexMatrix::identity(2).matmul(&m).unwrap(), m);
    }

    #[test]
    fn pauli_x_flips_basis_state() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let out = x.mul_vec(&StateVector::basis(2, 0)).unwrap();
        assert_eq!(out, StateVector::basis(2, 1));
    }

    #[test]
    fn hadamard_squares_to_identity() {
        let h = hadamard();
        let hh = h.matmul(&h).unwrap();
        assert!(hh.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Shape { .. })));
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        let r = ComplexMatrix::from_vec(1, 2, vec![ONE, c(f64::NAN, 0.0)]);
        assert!(matches!(r, Err(Error::NonFinite { index: 1 })));
    }

    #[test]
    fn conj_transpose_cases() {
        let sym = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 5.0]]).unwrap();
        assert_eq!(sym.conj_transpose(), sym);

        let m = ComplexMatrix::from_rows(&[vec![ZERO, c(0.0, 1.0)], vec![ZERO, ZERO]]).unwrap();
        let expected = ComplexMatrix::from_rows(&[vec![ZERO, ZERO], vec![c(0.0, -1.0), ZERO]]).unwrap();
        assert_eq!(m.conj_transpose(), expected);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = ComplexMatrix::random_gaussian(4, 4, &mut rng);
        assert_eq!(u.conj_transpose().conj_transpose(), u);
    }

    #[test]
    fn unitarity_error_cases() {
        assert_eq!(unitarity_error(&ComplexMatrix::identity(4)).unwrap(), 0.0);
        // (2I)^†(2I) - I = 3I, Frobenius norm sqrt(9 + 9)
        let two = ComplexMatrix::identity(2).scale(c(2.0, 0.0));
        let e = unitarity_error(&two).unwrap();
        assert!((e - 18f64.sqrt()).abs() < 1e-15, "{e}");
        assert!(matches!(
            unitarity_error(&ComplexMatrix::zeros(2, 3)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn gram_schmidt_identity_and_hand_case() {
        let i4 = ComplexMatrix::identity(4);
        assert_eq!(gram_schmidt(&i4).unwrap(), i4);

        // columns (1,0) and (1,1)
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let q = gram_schmidt(&m).unwrap();
        assert!(q.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn gram_schmidt_rejects_non_square() {
        assert!(gram_schmidt(&ComplexMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn gram_schmidt_rescues_scaled_column() {
        // column 1 = 2 * column 0
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.3, 0.1), c(0.6, 0.2)],
            vec![c(-0.5, 0.7), c(-1.0, 1.4)],
        ])
        .unwrap();
        let q = gram_schmidt(&m).unwrap();
        assert!(unitarity_error(&q).unwrap() <= 1e-8);
    }

    #[test]
    fn rescue_adds_to_first_nonzero_component() {
        let v = StateVector::new(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let r = rescue_dependent_column(&v, 1e-8);
        assert_eq!(r.as_slice(), &[c(1.0 + 1e-8, 0.0), c(2.0, 0.0)]);

        let v = StateVector::new(vec![ZERO, c(0.0, 3.0)]);
        assert_eq!(rescue_dependent_column(&v, 0.5).as_slice(), &[ZERO, c(0.5, 3.0)]);

        let z = StateVector::zeros(3);
        assert_eq!(rescue_dependent_column(&z, 1e-8).as_slice(), &[c(1e-8, 0.0), ZERO, ZERO]);
    }

    #[test]
    fn rescue_handles_coordinate_already_in_span() {
        // [e1, 2 e1]: perturbing component 0 of the second column keeps it in
        // span{e1}, so a later coordinate has to be used.
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]])
            .unwrap();
        let q = gram_schmidt(&m).unwrap();
        assert!(unitarity_error(&q).unwrap() <= 1e-10);
    }

    #[test]
    fn zero_matrix_becomes_unitary() {
        let q = gram_schmidt(&ComplexMatrix::zeros(4, 4)).unwrap();
        assert!(unitarity_error(&q).unwrap() <= 1e-10);
    }

    #[test]
    fn determinant_matches_hand_values() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 1.0), c(2.0, 0.0)], vec![c(0.0, 3.0), c(4.0, -1.0)]])
            .unwrap();
        // (1+i)(4-i) - 2*3i = 5 + 3i - 6i
        let d = m.determinant().unwrap();
        assert!((d - c(5.0, -3.0)).norm() < 1e-14);
        let swap = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!((swap.determinant().unwrap() + ONE).norm() < 1e-15);
        assert_eq!(ComplexMatrix::zeros(3, 3).determinant().unwrap(), ZERO);
    }
}
