use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, C64};
use crate::error::Error;
use crate::Result;

/// Eigendecomposition `A = V · diag(labels) · V*`.
///
/// `frame` is unitary with one eigenvector per column, in label order. Labels
/// of Hermitian inputs are real and ascending; normal decompositions sort by
/// (real, imaginary) with the original index as a stable tie-break. Column
/// phases are normalized so each column's largest-magnitude entry (lowest
/// index on ties) is real and positive, which makes frames reproducible.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralDecomp {
    #[serde(with = "crate::field::io::c64vec")]
    pub labels: Vec<C64>,
    pub frame: Matrix,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let d = Matrix::diag(&self.labels);
        self.frame.mul(&d).mul(&self.frame.adjoint())
    }

    /// Rank-one projection onto the `i`-th eigenvector.
    pub fn projection(&self, i: usize) -> Matrix {
        self.frame.column_projection(i)
    }

    /// `‖V*V - I‖` — how far the frame is from unitary.
    pub fn frame_deviation(&self) -> f64 {
        self.frame.unitary_deviation()
    }

    /// Check the decomposition invariants against the matrix it came from:
    /// frame unitary within 1e-12 and reconstruction within
    /// `1e-10 · (1 + ‖A‖)`.
    pub fn validate_against(&self, a: &Matrix) -> Result<()> {
        if self.labels.len() != a.dim() || self.frame.dim() != a.dim() {
            return Err(Error::SizeMismatch(
                "decomposition does not match matrix dimension".into(),
            ));
        }
        let fd = self.frame_deviation();
        if fd > 1e-12 {
            return Err(Error::DegenerateFrame(format!(
                "frame unitarity deviation {fd:.3e} exceeds 1e-12"
            )));
        }
        let err = self.reconstruct().sub(a).op_norm();
        let bound = 1e-10 * (1.0 + a.op_norm());
        if err > bound {
            return Err(Error::ValidationFailed(format!(
                "reconstruction error {err:.3e} exceeds {bound:.3e}"
            )));
        }
        Ok(())
    }
}

/// Normalize eigenvector phases in place: scale each column so its
/// largest-magnitude entry (lowest index on ties) becomes real positive.
pub(crate) fn normalize_column_phases(frame: &mut Matrix) {
    let n = frame.dim();
    for j in 0..n {
        let col = frame.column(j);
        let mut best = 0usize;
        let mut best_mag = -1.0f64;
        for (i, z) in col.iter().enumerate() {
            let m = z.norm();
            // Strict comparison: on ties the lowest index wins.
            if m > best_mag {
                best = i;
                best_mag = m;
            }
        }
        let pivot = col[best];
        if pivot.norm() > 0.0 {
            let phase = pivot / pivot.norm();
            let adjusted: Vec<C64> = col.iter().map(|z| z / phase).collect();
            frame.set_column(j, &adjusted);
        }
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Sweeps all index pairs in lexicographic order, zeroing each off-diagonal
/// entry with a complex Givens rotation, until the off-diagonal Frobenius
/// mass falls below `1e-15 · ‖A‖_F`. Quadratic convergence makes the 40-sweep
/// budget generous; exceeding it reports [`Error::NoConvergence`].
///
/// Requires `A` Hermitian within `1e-10 · (1 + max|A_ij|)`.
pub fn hermitian_eig(a: &Matrix) -> Result<SpectralDecomp> {
    let n = a.dim();
    if !a.is_finite() {
        return Err(Error::ValidationFailed("matrix has non-finite entries".into()));
    }
    let dev = a.hermitian_deviation();
    if dev > 1e-10 * (1.0 + a.max_abs()) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let mut m = a.hermitized();
    let mut v = Matrix::identity(n);
    let scale = m.fro_norm();
    if scale == 0.0 || n <= 1 {
        let labels = (0..n).map(|i| C64::new(m.get(i, i).re, 0.0)).collect();
        return Ok(SpectralDecomp { labels, frame: v });
    }
    let target = 1e-15 * scale;
    let mut converged = false;
    let mut last_off = f64::INFINITY;
    for _sweep in 0..40 {
        let off = off_diag_mass(&m);
        if off <= target {
            converged = true;
            break;
        }
        last_off = off;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate_pair(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged && off_diag_mass(&m) > target {
        return Err(Error::NoConvergence {
            achieved: last_off.min(off_diag_mass(&m)),
            target,
        });
    }

    let mut labels: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| (labels[i], i).partial_cmp(&(labels[j], j)).unwrap());
    labels = order.iter().map(|&i| labels[i]).collect();
    let mut frame = v.select_columns(&order);
    normalize_column_phases(&mut frame);
    Ok(SpectralDecomp {
        labels: labels.into_iter().map(|x| C64::new(x, 0.0)).collect(),
        frame,
    })
}

pub(crate) fn off_diag_mass(m: &Matrix) -> f64 {
    let n = m.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m.get(i, j).norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation zeroing `m[p][q]` (and `m[q][p]`).
fn rotate_pair(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m.get(p, q);
    let r = apq.norm();
    if r <= 1e-300 {
        return;
    }
    let app = m.get(p, p).re;
    let aqq = m.get(q, q).re;
    let phase = apq / r; // e^{i·arg(apq)}
    // Zeroing condition: r·cos2θ + (aqq - app)/2 · sin2θ·(-1)... derived from
    // U = [[c, -s·phase], [s·conj(phase), c]]: off' ∝ r(c²-s²) + cs(aqq-app).
    let tau = (app - aqq) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = m.dim();
    // Column rotation: A ← A·U with U[p,p]=c, U[q,p]=s·conj(phase),
    // U[p,q]=-s·phase, U[q,q]=c.
    for k in 0..n {
        let x = m.get(k, p);
        let y = m.get(k, q);
        m.set(k, p, x * c + y * s * phase.conj());
        m.set(k, q, y * c - x * s * phase);
    }
    // Row rotation: A ← U*·A.
    for k in 0..n {
        let x = m.get(p, k);
        let y = m.get(q, k);
        m.set(p, k, x * c + y * s * phase);
        m.set(q, k, y * c - x * s * phase.conj());
    }
    // The rotation zeroes the pair exactly in exact arithmetic; pin it.
    m.set(p, q, C64::new(0.0, 0.0));
    m.set(q, p, C64::new(0.0, 0.0));
    let dpp = m.get(p, p);
    let dqq = m.get(q, q);
    m.set(p, p, C64::new(dpp.re, 0.0));
    m.set(q, q, C64::new(dqq.re, 0.0));
    // Accumulate the frame: V ← V·U.
    for k in 0..n {
        let x = v.get(k, p);
        let y = v.get(k, q);
        v.set(k, p, x * c + y * s * phase.conj());
        v.set(k, q, y * c - x * s * phase);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_decomposes_trivially() {
        let d = hermitian_eig(&Matrix::identity(3)).unwrap();
        for l in &d.labels {
            assert!((l - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
        assert!(d.frame.sub(&Matrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn pauli_x_eigensystem() {
        let x = Matrix::from_fn(2, |i, j| {
            if i != j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let d = hermitian_eig(&x).unwrap();
        assert!((d.labels[0].re + 1.0).abs() < 1e-14);
        assert!((d.labels[1].re - 1.0).abs() < 1e-14);
        let s = 0.5f64.sqrt();
        // Phase normalization pins the first entry of each column positive.
        assert!((d.frame.get(0, 0) - C64::new(s, 0.0)).norm() < 1e-12);
        assert!((d.frame.get(1, 0) - C64::new(-s, 0.0)).norm() < 1e-12);
        assert!((d.frame.get(0, 1) - C64::new(s, 0.0)).norm() < 1e-12);
        assert!((d.frame.get(1, 1) - C64::new(s, 0.0)).norm() < 1e-12);
        d.validate_against(&x).unwrap();
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = Matrix::zeros(2);
        m.set(0, 1, C64::new(1.0, 0.0));
        assert!(matches!(
            hermitian_eig(&m),
            Err(Error::NotHermitian { .. })
        ));
    }
}
