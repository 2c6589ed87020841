//! Residual evaluation: how far a diagonal model sits from the field it
//! claims to diagonalize.
//!
//! At every vertex and for every dictionary member `f` we measure
//! `‖φ(f)(v) − Σ f(αᵢ(v))pᵢ(v)‖` in operator norm. When the model carries
//! continuity witnesses we also sample them: every interior transport step
//! is compared against the nearer edge endpoint, and every interior fill
//! sample against its anchor vertex. The overall max is what verdicts and
//! refinement decisions are based on, so it deliberately includes those
//! interior samples — a model is only as good as its worst point, and the
//! worst point of a transported frame lies between vertices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::error::Error;
use crate::field::dict::{DictMember, FunctionDictionary};
use crate::field::frames::{evaluate_hom, DiagonalFrameField, TransportStep};
use crate::field::generator::GeneratorField;
use crate::Result;

/// Outcome of a residual evaluation. `max` ranges over every sampled
/// location (vertices, transport interiors, fill interiors); the per-vertex
/// table is kept in full for reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Tolerance the report was requested at.
    pub eps: f64,
    pub max: f64,
    pub mean: f64,
    /// `max ≤ eps`.
    pub verdict: bool,
    /// Worst per-step label/frame movement over all transports.
    pub continuity_modulus: f64,
    /// `vertex_member[v][k]`: residual of dictionary member `k` at vertex `v`.
    pub vertex_member: Vec<Vec<f64>>,
    /// Display names of the dictionary members, aligned with the columns of
    /// `vertex_member`.
    pub member_names: Vec<String>,
    /// Worst residual over interior transport steps (0 when no transports).
    pub edge_interior_max: f64,
    /// Worst residual over interior fill samples (0 when no fills).
    pub fill_interior_max: f64,
    /// Worst projection completeness/orthogonality defect over vertices.
    pub projection_defect: f64,
    /// Number of (location, member) pairs that entered `max`/`mean`.
    pub sample_count: usize,
}

impl ResidualReport {
    pub fn per_vertex_max(&self) -> Vec<f64> {
        self.vertex_member
            .iter()
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    pub fn per_member_max(&self) -> Vec<f64> {
        let members = self.member_names.len();
        (0..members)
            .map(|k| {
                self.vertex_member
                    .iter()
                    .map(|row| row[k])
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// The field value of a dictionary member at a vertex: matrix functional
/// calculus on the generator samples (`z^a·conj(z)^b ↦ A^a·(A*)^b`).
fn phi_member(field: &GeneratorField, v: usize, f: &DictMember) -> Matrix {
    match *f {
        DictMember::One => Matrix::identity(field.n),
        DictMember::Monomial { generator, a, b } => {
            let m = &field.generators[generator].samples[v];
            let adj = m.adjoint();
            let mut acc = Matrix::identity(field.n);
            for _ in 0..a {
                acc = acc.mul(m);
            }
            for _ in 0..b {
                acc = acc.mul(&adj);
            }
            acc
        }
    }
}

/// Residuals of one transported/filled sample against the field value at a
/// reference vertex, for every member.
fn step_residuals(
    field: &GeneratorField,
    reference_vertex: usize,
    step: &TransportStep,
    dict: &FunctionDictionary,
) -> Vec<f64> {
    let decomp = step.decomp();
    dict.members
        .iter()
        .map(|f| {
            let phi = phi_member(field, reference_vertex, f);
            let model = evaluate_hom(&decomp, f).expect("validated shapes");
            phi.sub(&model).op_norm()
        })
        .collect()
}

/// Evaluate the full residual report for a model against its field.
pub fn residual_report(
    field: &GeneratorField,
    frames: &DiagonalFrameField,
    dict: &FunctionDictionary,
    eps: f64,
) -> Result<ResidualReport> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::BadParam(format!("eps = {eps} must be positive")));
    }
    frames.check_against(field)?;
    frames.validate(&field.domain)?;
    if dict.generators != field.g() {
        return Err(Error::ShapeMismatch(format!(
            "dictionary over {} generators, field has {}",
            dict.generators,
            field.g()
        )));
    }

    let v_count = field.domain.vertex_count();
    let vertex_member: Vec<Vec<f64>> = (0..v_count)
        .into_par_iter()
        .map(|v| {
            let decomp = frames.decomp_at(v);
            dict.members
                .iter()
                .map(|f| {
                    let phi = phi_member(field, v, f);
                    let model = evaluate_hom(&decomp, f).expect("validated shapes");
                    phi.sub(&model).op_norm()
                })
                .collect()
        })
        .collect();

    let edge_rows: Vec<Vec<f64>> = frames
        .transports
        .par_iter()
        .map(|t| {
            let [a, b] = t.edge;
            let last = t.steps.len() - 1;
            let mut acc: Vec<f64> = Vec::new();
            for (s, step) in t.steps.iter().enumerate().skip(1).take(last.saturating_sub(1)) {
                let reference = if 2 * s <= last { a } else { b };
                acc.extend(step_residuals(field, reference, step, dict));
            }
            acc
        })
        .collect();

    let fill_rows: Vec<Vec<f64>> = frames
        .fills
        .par_iter()
        .map(|fill| {
            let mut acc: Vec<f64> = Vec::new();
            for d in 1..fill.d_steps.saturating_sub(1) {
                for j in 0..fill.theta_steps {
                    let r = step_residuals(field, fill.anchor, fill.sample(d, j), dict);
                    acc.extend(r);
                }
            }
            acc
        })
        .collect();

    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for row in &vertex_member {
        for &x in row {
            max = max.max(x);
            sum += x;
            count += 1;
        }
    }
    let mut edge_interior_max = 0.0f64;
    for row in &edge_rows {
        for &x in row {
            edge_interior_max = edge_interior_max.max(x);
            sum += x;
            count += 1;
        }
    }
    let mut fill_interior_max = 0.0f64;
    for row in &fill_rows {
        for &x in row {
            fill_interior_max = fill_interior_max.max(x);
            sum += x;
            count += 1;
        }
    }
    max = max.max(edge_interior_max).max(fill_interior_max);

    let projection_defect = (0..v_count)
        .into_par_iter()
        .map(|v| {
            let d = frames.decomp_at(v);
            let projections: Vec<Matrix> = (0..frames.n).map(|i| d.projection(i)).collect();
            let mut defect = projections
                .iter()
                .fold(Matrix::zeros(frames.n), |acc, p| acc.add(p))
                .sub(&Matrix::identity(frames.n))
                .op_norm();
            for (i, p) in projections.iter().enumerate() {
                for (j, q) in projections.iter().enumerate() {
                    let prod = p.mul(q);
                    let expect = if i == j { p.clone() } else { Matrix::zeros(frames.n) };
                    defect = defect.max(prod.sub(&expect).op_norm());
                }
            }
            defect
        })
        .reduce(|| 0.0, f64::max);

    Ok(ResidualReport {
        eps,
        max,
        mean: if count > 0 { sum / count as f64 } else { 0.0 },
        verdict: max <= eps,
        continuity_modulus: frames.continuity_modulus(),
        vertex_member,
        member_names: dict.members.iter().map(|m| m.to_string()).collect(),
        edge_interior_max,
        fill_interior_max,
        projection_defect,
        sample_count: count,
    })
}
