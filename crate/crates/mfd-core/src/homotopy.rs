//! Contracting an almost-commuting unitary field to the identity.
//!
//! Given a diagonalized field over an interval and a unitary field `u` that
//! nearly commutes with it, this module builds a discrete path `U(s)` from
//! `u` down to the constant identity that never commutes much worse than `u`
//! itself did. The construction is in two halves: first rotate `u` onto its
//! best approximant inside the commutant of the frames (a sum of phased
//! projections `Σ βᵢpᵢ`), then contract each phase `βᵢ` to `1` along its
//! shorter arc. The first half is the only part that can fail — it needs a
//! branch of the logarithm — and the only part that moves the commutators;
//! the second half stays inside the commutant by construction.

use rayon::prelude::*;

use crate::dense::{unitary_log_gap_full, Matrix, UnitaryLog, C64};
use crate::error::Error;
use crate::field::{evaluate_hom, DiagonalFrameField, FunctionDictionary, JointDecomp};
use crate::Result;

/// Endpoint pinning for [`basic_homotopy`]: pinned ends must stay inside the
/// commutant of their vertex decomposition for every `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pinned {
    None,
    Left,
    Both,
}

/// A discretized unitary path `U(s)`, one matrix per `(s, vertex)` pair.
///
/// `U(s_0)` is the input field bit for bit, `U(s_last)` is the constant
/// identity, and every intermediate sample is unitary to working precision.
#[derive(Clone, Debug)]
pub struct HomotopyPath {
    /// Path parameter samples, uniformly spaced over `[0, 1]`.
    pub s_grid: Vec<f64>,
    /// `u[k][v]` is the unitary at parameter `s_grid[k]` and vertex `v`.
    pub u: Vec<Vec<Matrix>>,
    /// `commutator_profile[k][f]` is the largest `‖[U(s_k), Σf(αᵢ)pᵢ]‖`
    /// over the domain, per dictionary member `f`.
    pub commutator_profile: Vec<Vec<f64>>,
    /// Largest `‖a‖` of the first-half rotation generators across vertices.
    pub log_norm: f64,
    /// Measured input commutator: the profile of `U(0) = u` itself.
    pub delta_in: f64,
}

impl HomotopyPath {
    /// All unitaries at parameter index `k`.
    pub fn sample(&self, k: usize) -> &[Matrix] {
        &self.u[k]
    }

    /// Worst commutator anywhere on the path.
    pub fn max_commutator(&self) -> f64 {
        self.commutator_profile
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// The first-half rotation generator at one vertex. Exact zeros and
/// commutant-compressed generators (for pinned endpoints) are kept symbolic
/// so the corresponding invariants hold by construction, not by rounding.
enum Rotor {
    Zero(usize),
    Log(UnitaryLog),
    /// `exp(i·t·a)` with `a = F·diag(d)·F*`: commutes with every projection
    /// of the frame `F` exactly.
    Commutant { frame: Matrix, phases: Vec<f64> },
}

impl Rotor {
    fn exp_scaled(&self, t: f64) -> Matrix {
        match self {
            Rotor::Zero(n) => Matrix::identity(*n),
            Rotor::Log(log) => log.exp_scaled(t),
            Rotor::Commutant { frame, phases } => {
                let d: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, t * p)).collect();
                frame.mul(&Matrix::diag(&d)).mul(&frame.adjoint())
            }
        }
    }

    fn norm(&self) -> f64 {
        match self {
            Rotor::Zero(_) => 0.0,
            Rotor::Log(log) => log.norm(),
            Rotor::Commutant { phases, .. } => {
                phases.iter().map(|p| p.abs()).fold(0.0, f64::max)
            }
        }
    }
}

struct VertexPlan {
    decomp: JointDecomp,
    rotor: Rotor,
    /// Phase angles of the commutant approximant `Σβᵢpᵢ`, contracted to 0
    /// during the second half.
    thetas: Vec<f64>,
    /// `‖1 − u*·Σβᵢpᵢ‖`, the distance from `u` to its commutant model.
    dist_to_model: f64,
}

/// Check that the frame field is shaped like a swept interval: vertices
/// `0..m` chained by transports `[i, i+1]`.
fn check_interval_shape(frames: &DiagonalFrameField) -> Result<()> {
    let m = frames.vertex_count();
    if m == 0 {
        return Err(Error::FramesInvalid("no vertex decompositions".into()));
    }
    if frames.transports.len() + 1 != m {
        return Err(Error::FramesInvalid(format!(
            "{} vertices need {} chained transports, found {}",
            m,
            m - 1,
            frames.transports.len()
        )));
    }
    for (i, t) in frames.transports.iter().enumerate() {
        if t.edge != [i, i + 1] {
            return Err(Error::FramesInvalid(format!(
                "transport {i} covers edge {:?}, expected [{i}, {}]",
                t.edge,
                i + 1
            )));
        }
    }
    Ok(())
}

/// Build the path `U(s)` from `u` to the identity over a diagonalized
/// interval.
///
/// First half: `U(s) = u·exp(i·2s·a)` with `a` the gap-branch logarithm of
/// `u*·Σβᵢpᵢ`, where `βᵢ` is the phase of `u` compressed onto the `i`-th
/// frame column. Second half: the phases `βᵢ` contract to `1` along their
/// shorter arcs (antipodal phases contract from `+π`). The grid starts at 32
/// segments and doubles until no per-step increment exceeds a 0.1 rotation.
///
/// `eps` is the commutation budget the caller believes `u` satisfies; when
/// the measured distance to the commutant model is below `eps/2`, the
/// first-half generator provably has `‖a‖ ≤ 2·arcsin(eps/4)` and this is
/// checked. Pinned endpoints require `u` to commute with the endpoint
/// decomposition to `1e−10` on input — otherwise pinning contradicts
/// `U(0) = u` — and are driven by commutant-compressed generators so they
/// stay in the commutant for every `s`.
pub fn basic_homotopy(
    frames: &DiagonalFrameField,
    u: &[Matrix],
    eps: f64,
    pinned: Pinned,
) -> Result<HomotopyPath> {
    check_interval_shape(frames)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::BadParam(format!(
            "commutation budget eps = {eps} must be positive"
        )));
    }
    let m = frames.vertex_count();
    let n = frames.n;
    if u.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "unitary field has {} samples, domain has {m} vertices",
            u.len()
        )));
    }
    for (v, uv) in u.iter().enumerate() {
        if uv.dim() != n {
            return Err(Error::ShapeMismatch(format!(
                "unitary at vertex {v} is {}×{}, decompositions are {n}×{n}",
                uv.dim(),
                uv.dim()
            )));
        }
        let dev = uv.unitary_deviation();
        if dev > 1e-8 {
            return Err(Error::NotUnitary { deviation: dev });
        }
    }

    let pin_left = matches!(pinned, Pinned::Left | Pinned::Both);
    let pin_right = matches!(pinned, Pinned::Both);
    let plans: Vec<VertexPlan> = (0..m)
        .map(|v| {
            let pin = (pin_left && v == 0) || (pin_right && v == m - 1);
            vertex_plan(&frames.decomp_at(v), &u[v], pin, v)
        })
        .collect::<Result<Vec<_>>>()?;

    let log_norm = plans.iter().map(|p| p.rotor.norm()).fold(0.0, f64::max);
    let dist = plans.iter().map(|p| p.dist_to_model).fold(0.0, f64::max);
    if dist < eps / 2.0 && eps <= 4.0 {
        let bound = 2.0 * (eps / 4.0).asin();
        if log_norm > bound + 1e-12 {
            return Err(Error::ValidationFailed(format!(
                "rotation generator norm {log_norm:.6e} exceeds the \
                 2·arcsin(eps/4) = {bound:.6e} budget"
            )));
        }
    }

    // Uniform grid, doubled until consecutive samples differ by at most a
    // 0.1 rotation everywhere.
    let mut segments = 32usize;
    let (s_grid, path) = loop {
        let grid: Vec<f64> = (0..=segments)
            .map(|k| k as f64 / segments as f64)
            .collect();
        let path: Vec<Vec<Matrix>> = grid
            .par_iter()
            .enumerate()
            .map(|(k, &s)| sample_at(&plans, u, s, k, segments))
            .collect();
        let worst_step = path
            .windows(2)
            .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| a.sub(b).op_norm()))
            .fold(0.0, f64::max);
        if worst_step <= 0.1 || segments >= 4096 {
            break (grid, path);
        }
        segments *= 2;
    };

    let dict = FunctionDictionary::new(2, frames.g)?;
    let models: Vec<Vec<Matrix>> = plans
        .iter()
        .map(|p| {
            dict.members
                .iter()
                .map(|f| evaluate_hom(&p.decomp, f))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let commutator_profile: Vec<Vec<f64>> = path
        .par_iter()
        .map(|sample| {
            (0..dict.members.len())
                .map(|fi| {
                    sample
                        .iter()
                        .zip(&models)
                        .map(|(uv, mv)| uv.commutator(&mv[fi]).op_norm())
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect();
    let delta_in = commutator_profile[0].iter().copied().fold(0.0, f64::max);

    for sample in &path {
        for uv in sample {
            let dev = uv.unitary_deviation();
            if dev > 1e-10 {
                return Err(Error::ValidationFailed(format!(
                    "path sample drifted off the unitary group by {dev:.3e}"
                )));
            }
        }
    }

    Ok(HomotopyPath {
        s_grid,
        u: path,
        commutator_profile,
        log_norm,
        delta_in,
    })
}

fn sample_at(
    plans: &[VertexPlan],
    input: &[Matrix],
    s: f64,
    k: usize,
    segments: usize,
) -> Vec<Matrix> {
    plans
        .iter()
        .zip(input)
        .map(|(plan, uv)| {
            if k == 0 {
                uv.clone()
            } else if k == segments {
                Matrix::identity(uv.dim())
            } else if s < 0.5 {
                uv.mul(&plan.rotor.exp_scaled(2.0 * s))
            } else {
                let d: Vec<C64> = plan
                    .thetas
                    .iter()
                    .map(|&t| C64::from_polar(1.0, t * (2.0 - 2.0 * s)))
                    .collect();
                plan.decomp
                    .frame
                    .mul(&Matrix::diag(&d))
                    .mul(&plan.decomp.frame.adjoint())
            }
        })
        .collect()
}

fn vertex_plan(decomp: &JointDecomp, u: &Matrix, pin: bool, v: usize) -> Result<VertexPlan> {
    let n = decomp.n();
    let frame = &decomp.frame;

    if pin {
        let worst = (0..n)
            .map(|i| u.commutator(&decomp.projection(i)).op_norm())
            .fold(0.0, f64::max);
        if worst > 1e-10 {
            return Err(Error::ValidationFailed(format!(
                "pinned endpoint {v}: u commutes with the decomposition only \
                 to {worst:.3e}, pinning needs 1e-10"
            )));
        }
    }

    // βᵢ: the phase of u compressed onto the i-th frame column. A vanishing
    // compression means u throws that column (nearly) orthogonal to itself —
    // there is no phase to read and no branch with margin.
    let mut betas = Vec::with_capacity(n);
    for i in 0..n {
        let col = frame.column(i);
        let z = crate::dense::inner(&col, &u.mul_vec(&col));
        if z.norm() < 1e-9 {
            return Err(Error::GapCollapse {
                gap: z.norm(),
                min_gap: 1e-9,
            });
        }
        betas.push(z / z.norm());
    }
    let thetas: Vec<f64> = betas.iter().map(|b| b.arg()).collect();

    let model = frame.mul(&Matrix::diag(&betas)).mul(&frame.adjoint());
    let w = u.adjoint().mul(&model);
    let dist_to_model = Matrix::identity(n).sub(&w).op_norm();

    let rotor = if Matrix::identity(n).sub(&w).max_abs() <= 1e-13 {
        // u is (numerically) already in the commutant; keep the generator an
        // exact zero so log_norm and the constant-path invariants are exact.
        Rotor::Zero(n)
    } else {
        let log = unitary_log_gap_full(&w)?;
        if log.gap < 1e-6 {
            return Err(Error::GapCollapse {
                gap: log.gap,
                min_gap: 1e-6,
            });
        }
        if pin {
            // Keep the pinned endpoint inside the commutant exactly: compress
            // the generator to the frame's diagonal. u commutes to 1e-10, so
            // the dropped off-diagonal part is of that same order.
            let a_in_frame = frame.adjoint().mul(&log.h).mul(frame);
            let phases: Vec<f64> = (0..n).map(|i| a_in_frame.get(i, i).re).collect();
            Rotor::Commutant {
                frame: frame.clone(),
                phases,
            }
        } else {
            Rotor::Log(log)
        }
    };

    Ok(VertexPlan {
        decomp: decomp.clone(),
        rotor,
        thetas,
        dist_to_model,
    })
}
