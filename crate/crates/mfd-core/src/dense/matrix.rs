use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

pub type C64 = Complex64;

/// Dense square complex matrix, row-major storage.
///
/// Serializes as `{ "n": n, "e": [[re, im], ...] }` with entries row-major, so
/// files stay readable and round-trip bit-exactly.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    n: usize,
    entries: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    n: usize,
    e: Vec<[f64; 2]>,
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            n: m.n,
            e: m.entries.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = String;

    fn try_from(r: MatrixRepr) -> std::result::Result<Self, String> {
        if r.e.len() != r.n * r.n {
            return Err(format!(
                "matrix payload has {} entries, expected {}",
                r.e.len(),
                r.n * r.n
            ));
        }
        let entries: Vec<C64> = r.e.iter().map(|&[re, im]| C64::new(re, im)).collect();
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err("matrix payload contains non-finite entries".into());
        }
        Ok(Matrix { n: r.n, entries })
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            entries: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Build from nested rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::SizeMismatch("rows of unequal length".into()));
        }
        let entries: Vec<C64> = rows.iter().flatten().copied().collect();
        Ok(Matrix { n, entries })
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Real diagonal convenience (labels of Hermitian decompositions).
    pub fn diag_re(values: &[f64]) -> Self {
        Self::diag(&values.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "matrix product dimension mismatch");
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// `self * v` for a column vector.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.n, v.len(), "matrix-vector dimension mismatch");
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix {
            n: self.n,
            entries: self.entries.iter().map(|a| a * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Matrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn commutator(&self, other: &Matrix) -> Matrix {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Determinant by LU with partial pivoting; used only for certificates on
    /// small matrices (windings, degree counts).
    pub fn det(&self) -> C64 {
        let n = self.n;
        if n == 0 {
            return C64::new(1.0, 0.0);
        }
        let mut lu = self.clone();
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let (pivot_row, pivot_mag) = (col..n)
                .map(|r| (r, lu.get(r, col).norm()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            if pivot_mag == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if pivot_row != col {
                for j in 0..n {
                    let a = lu.get(col, j);
                    let b = lu.get(pivot_row, j);
                    lu.set(col, j, b);
                    lu.set(pivot_row, j, a);
                }
                det = -det;
            }
            let pivot = lu.get(col, col);
            det *= pivot;
            for r in col + 1..n {
                let factor = lu.get(r, col) / pivot;
                if factor.norm_sqr() == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = lu.get(r, j) - factor * lu.get(col, j);
                    lu.set(r, j, v);
                }
            }
        }
        det
    }

    pub fn fro_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value by power iteration on `A* A`.
    ///
    /// Fixed budget of 200 steps with relative tolerance 1e-12 and a
    /// deterministic start vector. Error bar: for matrices whose top two
    /// singular values are separated by a relative gap `g`, the returned value
    /// is exact to ~`(1-g)^400`; for (near-)degenerate tops the iterate lands
    /// inside the top cluster, so the result is still correct to within the
    /// cluster spread. All certified bounds in this crate use tolerances far
    /// above both effects.
    pub fn op_norm(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        // Deterministic, structure-free start vector.
        let mut v: Vec<C64> = (0..n)
            .map(|i| {
                C64::new(
                    1.0 + ((i * 2654435761) % 97) as f64 / 97.0,
                    0.25 + ((i * 40503 + 11) % 89) as f64 / 89.0,
                )
            })
            .collect();
        normalize(&mut v);
        let at = self.adjoint();
        let mut lambda = 0.0f64;
        for _ in 0..200 {
            let mut w = self.mul_vec(&v);
            w = at.mul_vec(&w);
            let new_lambda = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>();
            let norm = normalize(&mut w);
            if norm == 0.0 {
                return 0.0;
            }
            v = w;
            if (new_lambda - lambda).abs() <= 1e-12 * new_lambda.abs().max(1e-300) {
                lambda = new_lambda;
                break;
            }
            lambda = new_lambda;
        }
        lambda.max(0.0).sqrt()
    }

    pub fn hermitian_part(&self) -> Matrix {
        self.add(&self.adjoint()).scale_re(0.5)
    }

    /// `(A - A*) / 2i`, the Hermitian matrix `K` with `A = H + iK`.
    pub fn antihermitian_part(&self) -> Matrix {
        self.sub(&self.adjoint()).scale(C64::new(0.0, -0.5))
    }

    /// Deviation from Hermitian symmetry, `max |A_ij - conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Deviation from unitarity, `‖A* A - I‖` (operator norm).
    pub fn unitary_deviation(&self) -> f64 {
        self.adjoint()
            .mul(self)
            .sub(&Matrix::identity(self.n))
            .op_norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_deviation() <= tol
    }

    /// Deviation from normality, `‖[A, A*]‖` (operator norm).
    pub fn normal_deviation(&self) -> f64 {
        self.commutator(&self.adjoint()).op_norm()
    }

    pub fn is_normal(&self, tol: f64) -> bool {
        self.normal_deviation() <= tol
    }

    /// Exact symmetrization `(A + A*)/2`; cheap guard against 1e-16 drift
    /// before feeding a matrix to the Hermitian eigensolver.
    pub fn hermitized(&self) -> Matrix {
        self.hermitian_part()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        assert_eq!(col.len(), self.n);
        for i in 0..self.n {
            self.set(i, j, col[i]);
        }
    }

    /// New matrix whose column `k` is column `order[k]` of `self`.
    pub fn select_columns(&self, order: &[usize]) -> Matrix {
        assert_eq!(order.len(), self.n);
        Matrix::from_fn(self.n, |i, k| self.get(i, order[k]))
    }

    /// Rank-one projection onto column `j` (assumed unit norm).
    pub fn column_projection(&self, j: usize) -> Matrix {
        let col = self.column(j);
        Matrix::from_fn(self.n, |i, k| col[i] * col[k].conj())
    }
}

fn normalize(v: &mut [C64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

/// Inner product `<a, b> = Σ conj(a_i) b_i` (conjugate-linear in the first
/// argument, matching the physics convention used by the link products).
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
