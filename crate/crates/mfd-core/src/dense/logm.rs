use std::f64::consts::PI;

use super::matrix::{Matrix, C64};
use super::normal_decompose;
use crate::error::Error;
use crate::Result;

/// Hermitian logarithm of a unitary together with its spectral data, so
/// callers can evaluate `exp(i·s·h)` along a path without re-decomposing.
#[derive(Clone, Debug)]
pub struct UnitaryLog {
    /// Hermitian `h` with `exp(i h) = u`.
    pub h: Matrix,
    /// Frame diagonalizing `u` (and `h`).
    pub frame: Matrix,
    /// Eigenphases of `u` on the chosen branch, one per frame column.
    pub phases: Vec<f64>,
    /// Length of the largest spectrum-free arc on the unit circle.
    pub gap: f64,
}

impl UnitaryLog {
    /// `exp(i·s·h)`, evaluated through the stored spectral data.
    pub fn exp_scaled(&self, s: f64) -> Matrix {
        let d: Vec<C64> = self.phases.iter().map(|&t| C64::from_polar(1.0, s * t)).collect();
        self.frame
            .mul(&Matrix::diag(&d))
            .mul(&self.frame.adjoint())
    }

    /// `‖h‖` — the largest absolute eigenphase, which is also the length of
    /// the path `s ↦ exp(i·s·h)`.
    pub fn norm(&self) -> f64 {
        self.phases.iter().fold(0.0f64, |m, &t| m.max(t.abs()))
    }
}

/// Hermitian logarithm of a unitary with the branch cut placed in the middle
/// of the largest spectral gap.
///
/// The eigenphases of `u` leave at least one arc of length `≥ 2π/n` free; the
/// cut goes at the midpoint of the largest such arc and phases are taken in
/// the length-2π window centered on the cut's antipode. Every phase then
/// keeps distance `gap/2` from the cut, giving `‖h‖ ≤ 2π − gap/2 ≤ 2π` and
/// making the logarithm stable under perturbations of `u` that do not close
/// the gap.
pub fn unitary_log_gap(u: &Matrix) -> Result<Matrix> {
    Ok(unitary_log_gap_full(u)?.h)
}

/// As [`unitary_log_gap`] but returning the spectral data as well.
pub fn unitary_log_gap_full(u: &Matrix) -> Result<UnitaryLog> {
    let dev = u.unitary_deviation();
    if dev > 1e-10 {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let decomp = normal_decompose(u)?;
    let n = u.dim();
    let raw: Vec<f64> = decomp.labels.iter().map(|l| l.arg()).collect();

    // Largest spectrum-free arc. With a single distinct phase this is the
    // full circle minus a point (gap 2π); ties resolve to the first gap in
    // sorted order, which is deterministic.
    let mut sorted = raw.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut gap = 0.0f64;
    let mut gap_start = sorted[0];
    for i in 0..n {
        let a = sorted[i];
        let b = if i + 1 < n { sorted[i + 1] } else { sorted[0] + 2.0 * PI };
        let len = b - a;
        if len > gap {
            gap = len;
            gap_start = a;
        }
    }
    // Cut at the gap midpoint; represent phases in the 2π-window centered on
    // the cut's antipode (taken in principal value, so a spectrum balanced
    // around +1 yields the principal logarithm).
    let cut = gap_start + gap / 2.0;
    // Antipode of the cut in principal value (−π, π].
    let mut center = (cut + PI).rem_euclid(2.0 * PI);
    if center > PI {
        center -= 2.0 * PI;
    }
    let phases: Vec<f64> = raw
        .iter()
        .map(|&t| {
            let mut w = t - center;
            w -= 2.0 * PI * (w / (2.0 * PI)).round();
            center + w
        })
        .collect();

    let h = decomp
        .frame
        .mul(&Matrix::diag_re(&phases))
        .mul(&decomp.frame.adjoint())
        .hermitized();
    let log = UnitaryLog {
        h,
        frame: decomp.frame,
        phases,
        gap,
    };
    let err = log.exp_scaled(1.0).sub(u).op_norm();
    if err > 1e-9 {
        return Err(Error::ValidationFailed(format!(
            "exp(ih) misses u by {err:.3e} (tolerance 1e-9)"
        )));
    }
    Ok(log)
}
