use super::eig::{hermitian_eig, normalize_column_phases, off_diag_mass};
use super::matrix::{Matrix, C64};
use crate::error::Error;
use crate::Result;

/// Outcome of [`joint_diagonalize`].
#[derive(Clone, Debug)]
pub struct JointDiagResult {
    /// Common unitary frame `V`; `V* A_j V` is near-diagonal for every member.
    pub frame: Matrix,
    /// Total off-diagonal Frobenius mass `sqrt(Σ_j off(V* A_j V)²)` in the
    /// returned frame.
    pub residual: f64,
    /// Largest pairwise commutator `max ‖[A_i, A_j]‖` measured on input.
    pub max_commutator: f64,
    /// Off-diagonal mass after each completed sweep (non-increasing).
    pub sweeps: Vec<f64>,
}

/// Jacobi-style joint diagonalization of a family of Hermitian matrices.
///
/// Each pair rotation maximizes the family's diagonal energy, which never
/// increases the total off-diagonal mass; the identity rotation is always
/// admissible, so progress is monotone sweep over sweep (asserted). Iteration
/// stops when the off-diagonal mass drops below `tol · Σ ‖A_j‖_F` or the
/// budget of `100·n²` rotations runs out, whichever comes first. For an
/// exactly commuting family the plateau sits at numerical noise,
/// `≤ 1e-10 · Σ ‖A_j‖_F`; for almost-commuting families it sits near the
/// commutator mass, and a target below that plateau reports
/// [`Error::NoConvergence`].
///
/// Frame columns come out in the deterministic track order: sorted by the
/// label tuple (real, imaginary per member in family order), stable in the
/// original index, with column phases normalized.
pub fn joint_diagonalize(family: &[Matrix], tol: f64) -> Result<JointDiagResult> {
    if family.is_empty() {
        return Err(Error::BadParam("empty family".into()));
    }
    let n = family[0].dim();
    if family.iter().any(|a| a.dim() != n) {
        return Err(Error::SizeMismatch(
            "family members have different dimensions".into(),
        ));
    }
    for a in family {
        if !a.is_finite() {
            return Err(Error::ValidationFailed("family member has non-finite entries".into()));
        }
        let dev = a.hermitian_deviation();
        if dev > 1e-10 * (1.0 + a.max_abs()) {
            return Err(Error::NotHermitian { deviation: dev });
        }
    }
    let mut max_commutator = 0.0f64;
    for i in 0..family.len() {
        for j in (i + 1)..family.len() {
            max_commutator = max_commutator.max(family[i].commutator(&family[j]).op_norm());
        }
    }

    let mut work: Vec<Matrix> = family.iter().map(|a| a.hermitized()).collect();
    let mut v = Matrix::identity(n);
    let scale: f64 = work.iter().map(|a| a.fro_norm()).sum();
    let target = tol * scale;
    let mut sweeps = Vec::new();

    if n <= 1 || scale == 0.0 {
        return finish(work, v, max_commutator, sweeps);
    }

    let budget = 100 * n * n;
    let per_sweep = n * (n - 1) / 2;
    let mut used = 0usize;
    let mut prev_mass = total_off_mass(&work);
    loop {
        if prev_mass <= target {
            break;
        }
        if used + per_sweep > budget {
            return Err(Error::NoConvergence {
                achieved: prev_mass,
                target,
            });
        }
        let skip = (1e-15 * scale) * (1e-15 * scale);
        for p in 0..n {
            for q in (p + 1)..n {
                rotate_pair_family(&mut work, &mut v, p, q, skip);
            }
        }
        used += per_sweep;
        let mass = total_off_mass(&work);
        // Monotone by construction; allow float-level slack.
        debug_assert!(
            mass <= prev_mass + 1e-12 * scale,
            "off-diagonal mass increased: {prev_mass} -> {mass}"
        );
        sweeps.push(mass);
        if mass <= target {
            break;
        }
        // Plateau detection: no meaningful progress over a full sweep.
        if mass >= prev_mass * (1.0 - 1e-12) && mass > target {
            return Err(Error::NoConvergence {
                achieved: mass,
                target,
            });
        }
        prev_mass = mass;
    }
    finish(work, v, max_commutator, sweeps)
}

fn finish(
    work: Vec<Matrix>,
    v: Matrix,
    max_commutator: f64,
    sweeps: Vec<f64>,
) -> Result<JointDiagResult> {
    let n = v.dim();
    // Deterministic track order: sort by the tuple of diagonal labels.
    let keys: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            work.iter()
                .flat_map(|a| {
                    let d = a.get(i, i);
                    [d.re, d.im]
                })
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        keys[i]
            .iter()
            .chain(std::iter::once(&(i as f64)))
            .partial_cmp(keys[j].iter().chain(std::iter::once(&(j as f64))))
            .unwrap()
    });
    let mut frame = v.select_columns(&order);
    normalize_column_phases(&mut frame);
    let residual = work
        .iter()
        .map(|a| off_diag_mass(a).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(JointDiagResult {
        frame,
        residual,
        max_commutator,
        sweeps,
    })
}

fn total_off_mass(family: &[Matrix]) -> f64 {
    family
        .iter()
        .map(|a| off_diag_mass(a).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Optimal joint rotation on the pair `(p, q)`.
///
/// For Hermitian members the objective reduces to maximizing `vᵀ G v` over
/// unit vectors `v = (cos 2θ, sin 2θ cos φ, sin 2θ sin φ)` where
/// `G = Σ_j g_j g_jᵀ` and `g_j = (a_pp - a_qq, 2 Re a_pq, 2 Im a_pq)`.
/// The maximizer is the top eigenvector of the 3×3 real symmetric `G`; the
/// sign convention `x ≥ 0` keeps `|θ| ≤ π/4`, so an already-diagonal pair is
/// left untouched.
fn rotate_pair_family(family: &mut [Matrix], v: &mut Matrix, p: usize, q: usize, skip: f64) {
    let mut g = [[0.0f64; 3]; 3];
    for a in family.iter() {
        let apq = a.get(p, q);
        let gv = [a.get(p, p).re - a.get(q, q).re, 2.0 * apq.re, 2.0 * apq.im];
        for r in 0..3 {
            for c in 0..3 {
                g[r][c] += gv[r] * gv[c];
            }
        }
    }
    // A vanishing objective means the pair is jointly degenerate; any rotation
    // is then spurious, so leave the frame alone.
    if g[0][0] + g[1][1] + g[2][2] <= skip {
        return;
    }
    let gm = Matrix::from_fn(3, |i, j| C64::new(g[i][j], 0.0));
    let Ok(decomp) = hermitian_eig(&gm) else {
        return;
    };
    // Labels ascend, so the top eigenvector is the last column.
    let top = decomp.frame.column(2);
    let (mut x, mut y, mut z) = (top[0].re, top[1].re, top[2].re);
    if x < 0.0 {
        x = -x;
        y = -y;
        z = -z;
    }
    let r = (x * x + y * y + z * z).sqrt();
    if r <= 0.0 || (x + r) <= 0.0 {
        return;
    }
    let c = ((x + r) / (2.0 * r)).sqrt();
    let s = C64::new(y, -z) / (2.0 * r * (x + r)).sqrt();
    if s.norm() <= 1e-18 {
        return; // rotation is numerically the identity
    }
    // Givens update with J = [[c, -conj(s)], [s, c]] acting on columns (p, q):
    // A ← J* A J, V ← V J.
    let n = v.dim();
    for a in family.iter_mut() {
        for k in 0..n {
            let xk = a.get(k, p);
            let yk = a.get(k, q);
            a.set(k, p, xk * c + yk * s);
            a.set(k, q, yk * c - xk * s.conj());
        }
        for k in 0..n {
            let xk = a.get(p, k);
            let yk = a.get(q, k);
            a.set(p, k, xk * c + yk * s.conj());
            a.set(q, k, yk * c - xk * s);
        }
    }
    for k in 0..n {
        let xk = v.get(k, p);
        let yk = v.get(k, q);
        v.set(k, p, xk * c + yk * s);
        v.set(k, q, yk * c - xk * s.conj());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_family_is_a_fixed_point() {
        let d1 = Matrix::diag_re(&[1.0, 2.0]);
        let r = joint_diagonalize(&[d1], 1e-12).unwrap();
        assert!(r.frame.sub(&Matrix::identity(2)).max_abs() < 1e-14);
        assert!(r.residual < 1e-14);
    }

    #[test]
    fn repeated_member_shares_the_single_matrix_frame() {
        let x = Matrix::from_fn(2, |i, j| {
            if i != j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let r = joint_diagonalize(&[x.clone(), x.clone()], 1e-12).unwrap();
        assert!(r.residual <= 1e-12 * 2.0 * x.fro_norm());
        let rot = r.frame.adjoint().mul(&x).mul(&r.frame);
        assert!(off_diag_mass(&rot) < 1e-12);
    }

    #[test]
    fn non_commuting_family_reports_no_convergence() {
        let x = Matrix::from_fn(2, |i, j| {
            if i != j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let z = Matrix::diag_re(&[1.0, -1.0]);
        match joint_diagonalize(&[x, z], 1e-12) {
            Err(Error::NoConvergence { achieved, .. }) => assert!(achieved > 0.1),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
