use super::eig::hermitian_eig;
use super::matrix::Matrix;
use crate::error::Error;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapMode {
    /// Nearest orthogonal projection (input Hermitian with spectrum near
    /// `{0, 1}`).
    Projection,
    /// Nearest unitary — the polar factor (input invertible).
    Unitary,
}

/// Snap a matrix to the exact structure it almost has.
///
/// * `Projection`: requires `A` Hermitian with spectrum within `0.3` of
///   `{0, 1}`. Eigenvalues round to the nearer of 0 and 1 in the frame of
///   `A`, so `‖P − A‖` equals the largest rounding distance (in particular
///   `≤ 2 · dist(sp A, {0,1})`). An eigenvalue within `1e-6` of the decision
///   boundary `1/2` reports [`Error::SpectrumStraddle`] rather than guessing.
/// * `Unitary`: the polar factor `A (A*A)^{-1/2}`, computed through the
///   Hermitian eigensolver and polished by a Newton–Schulz step; the result
///   satisfies `‖U*U − I‖ ≤ 1e-12`. Singular (or numerically singular) input
///   reports [`Error::Singular`].
pub fn snap(a: &Matrix, mode: SnapMode) -> Result<Matrix> {
    match mode {
        SnapMode::Projection => snap_projection(a),
        SnapMode::Unitary => snap_unitary(a),
    }
}

fn snap_projection(a: &Matrix) -> Result<Matrix> {
    let decomp = hermitian_eig(a)?;
    let mut rounded = Vec::with_capacity(a.dim());
    for l in &decomp.labels {
        let x = l.re;
        if (x - 0.5).abs() < 1e-6 {
            return Err(Error::SpectrumStraddle { value: x });
        }
        let near = if x >= 0.5 { 1.0 } else { 0.0 };
        if (x - near).abs() > 0.3 {
            // Outside the promised neighbourhood of {0, 1}: refuse to snap.
            return Err(Error::SpectrumStraddle { value: x });
        }
        rounded.push(near);
    }
    let p = decomp
        .frame
        .mul(&Matrix::diag_re(&rounded))
        .mul(&decomp.frame.adjoint())
        .hermitized();
    Ok(p)
}

fn snap_unitary(a: &Matrix) -> Result<Matrix> {
    let n = a.dim();
    let gram = a.adjoint().mul(a);
    let decomp = hermitian_eig(&gram)?;
    let op = a.op_norm();
    let floor = (1e-12 * (1.0 + op)).powi(2);
    let mut inv_sqrt = Vec::with_capacity(n);
    for l in &decomp.labels {
        if l.re <= floor {
            return Err(Error::Singular(format!(
                "smallest singular value² = {:.3e}",
                l.re
            )));
        }
        inv_sqrt.push(1.0 / l.re.sqrt());
    }
    let mut u = a.mul(
        &decomp
            .frame
            .mul(&Matrix::diag_re(&inv_sqrt))
            .mul(&decomp.frame.adjoint()),
    );
    // Newton–Schulz polish: U ← U·(3I − U*U)/2 squares the unitarity error.
    for _ in 0..3 {
        if u.unitary_deviation() <= 1e-13 {
            break;
        }
        let correction = Matrix::identity(n)
            .scale_re(3.0)
            .sub(&u.adjoint().mul(&u))
            .scale_re(0.5);
        u = u.mul(&correction);
    }
    let dev = u.unitary_deviation();
    if dev > 1e-12 {
        return Err(Error::NoConvergence {
            achieved: dev,
            target: 1e-12,
        });
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn rounds_near_projection() {
        let a = Matrix::diag_re(&[0.9, 0.1]);
        let p = snap(&a, SnapMode::Projection).unwrap();
        assert!(p.sub(&Matrix::diag_re(&[1.0, 0.0])).max_abs() < 1e-14);
        assert!(p.sub(&a).op_norm() <= 2.0 * 0.1 + 1e-12);
    }

    #[test]
    fn straddling_eigenvalue_is_refused() {
        let a = Matrix::diag_re(&[0.5, 0.0]);
        assert!(matches!(
            snap(&a, SnapMode::Projection),
            Err(Error::SpectrumStraddle { .. })
        ));
        let b = Matrix::diag_re(&[1.4, 0.0]);
        assert!(matches!(
            snap(&b, SnapMode::Projection),
            Err(Error::SpectrumStraddle { .. })
        ));
    }

    #[test]
    fn polar_factor_of_a_scaled_rotation() {
        // 1.1 × rotation: polar factor recovers the rotation.
        let c = (0.4f64).cos();
        let s = (0.4f64).sin();
        let rot = Matrix::from_rows(&[
            vec![C64::new(c, 0.0), C64::new(-s, 0.0)],
            vec![C64::new(s, 0.0), C64::new(c, 0.0)],
        ])
        .unwrap();
        let u = snap(&rot.scale_re(1.1), SnapMode::Unitary).unwrap();
        assert!(u.sub(&rot).max_abs() < 1e-12);
        assert!(u.unitary_deviation() <= 1e-12);
    }

    #[test]
    fn singular_input_is_refused() {
        let a = Matrix::diag_re(&[1.0, 0.0]);
        assert!(matches!(snap(&a, SnapMode::Unitary), Err(Error::Singular(_))));
    }
}
