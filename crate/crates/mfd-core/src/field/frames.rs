//! Diagonal models: joint decompositions at vertices, transported frames
//! along edges, and interior patches over triangles.
//!
//! A [`JointDecomp`] is the pointwise output of the whole machine: one
//! unitary frame whose columns carry rank-one projections, and one label in
//! `C^g` per column. [`DiagonalFrameField`] assembles these over a domain
//! together with the edge transports and triangle fills that certify the
//! continuity of the assembly. The transport and fill types are plain data
//! here; the drivers that construct them live in the 1-D and 2-D modules.

use serde::{Deserialize, Serialize};

use crate::dense::{joint_diagonalize, Matrix, C64};
use crate::error::Error;
use crate::field::dict::DictMember;
use crate::field::domain::SimplicialDomain;
use crate::field::generator::{GeneratorField, GeneratorKind};
use crate::matching::{LabelPoint, MatchingPlan};
use crate::Result;

/// A joint spectral decomposition: shared unitary frame, one `C^g` label per
/// column.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointDecomp {
    pub frame: Matrix,
    #[serde(with = "crate::field::io::c64vecvec")]
    pub labels: Vec<LabelPoint>,
}

impl JointDecomp {
    pub fn n(&self) -> usize {
        self.frame.dim()
    }

    /// Number of generators (components per label).
    pub fn g(&self) -> usize {
        self.labels.first().map_or(0, |l| l.len())
    }

    /// Rank-one projection onto the i-th frame column.
    pub fn projection(&self, i: usize) -> Matrix {
        self.frame.column_projection(i)
    }

    /// The diagonal model of generator `gen`: `frame·diag(λ_gen)·frame*`.
    pub fn model(&self, gen: usize) -> Matrix {
        let d: Vec<C64> = self.labels.iter().map(|l| l[gen]).collect();
        self.frame.mul(&Matrix::diag(&d)).mul(&self.frame.adjoint())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.labels.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for an n = {n} frame",
                self.labels.len()
            )));
        }
        let g = self.g();
        if self.labels.iter().any(|l| l.len() != g) {
            return Err(Error::ShapeMismatch("ragged label components".into()));
        }
        let dev = self.frame.unitary_deviation();
        if dev > 1e-10 {
            return Err(Error::FramesInvalid(format!(
                "frame unitarity deviation {dev:.3e}"
            )));
        }
        Ok(())
    }
}

/// Apply a dictionary member through a joint decomposition:
/// `frame·diag(f(λ₁),…,f(λₙ))·frame*`.
pub fn evaluate_hom(decomp: &JointDecomp, f: &DictMember) -> Result<Matrix> {
    if decomp.labels.len() != decomp.n() {
        return Err(Error::FrameMismatch(
            "label count does not match the frame".into(),
        ));
    }
    if let DictMember::Monomial { generator, .. } = *f {
        if generator >= decomp.g() {
            return Err(Error::FrameMismatch(format!(
                "member uses generator {generator}, decomposition has {}",
                decomp.g()
            )));
        }
    }
    let d: Vec<C64> = decomp.labels.iter().map(|l| f.evaluate(l)).collect();
    Ok(decomp
        .frame
        .mul(&Matrix::diag(&d))
        .mul(&decomp.frame.adjoint()))
}

/// Jointly diagonalize one vertex's generator samples. The Hermitian and
/// anti-Hermitian parts of every generator enter one simultaneous Jacobi
/// sweep; labels are read off the diagonal of the conjugated generators.
/// Tolerances adapt to the measured commutator mass, mirroring the single
/// normal-matrix path.
pub(crate) fn joint_decompose(samples: &[&Matrix]) -> Result<JointDecomp> {
    if samples.is_empty() {
        return Err(Error::BadParam("no generators to decompose".into()));
    }
    let mut family = Vec::with_capacity(2 * samples.len());
    for a in samples {
        family.push(a.hermitian_part());
        family.push(a.antihermitian_part());
    }
    let scale: f64 = family.iter().map(Matrix::op_norm).sum::<f64>().max(1e-300);
    let mut comm = 0.0f64;
    for i in 0..family.len() {
        for j in (i + 1)..family.len() {
            comm = comm.max(family[i].commutator(&family[j]).op_norm());
        }
    }
    let n = samples[0].dim();
    let tol = (1e-12 * scale + 4.0 * n as f64 * comm) / scale;
    let joint = joint_diagonalize(&family, tol)?;
    let labels: Vec<LabelPoint> = (0..n)
        .map(|i| {
            samples
                .iter()
                .map(|a| {
                    let col = joint.frame.column(i);
                    let av = a.mul_vec(&col);
                    crate::dense::inner(&col, &av)
                })
                .collect()
        })
        .collect();
    let decomp = JointDecomp {
        frame: joint.frame,
        labels,
    };
    decomp.validate()?;
    Ok(decomp)
}

/// Rebuild an exactly commuting tuple from a joint decomposition, snapping
/// each label component to its generator kind (real part for Hermitian
/// generators, unit modulus for unitary ones, untouched for normal ones).
/// Returns the snapped decomposition and the rebuilt generator matrices.
pub(crate) fn resnap_tuple(
    samples: &[&Matrix],
    kinds: &[GeneratorKind],
) -> Result<(JointDecomp, Vec<Matrix>)> {
    if samples.len() != kinds.len() {
        return Err(Error::ShapeMismatch(
            "one kind tag per generator sample required".into(),
        ));
    }
    let mut decomp = joint_decompose(samples)?;
    for label in &mut decomp.labels {
        for (z, kind) in label.iter_mut().zip(kinds) {
            match kind {
                GeneratorKind::Hermitian => *z = C64::new(z.re, 0.0),
                GeneratorKind::Unitary => {
                    let r = z.norm();
                    if r < 0.5 {
                        return Err(Error::Singular(format!(
                            "unitary label collapsed to modulus {r:.3}"
                        )));
                    }
                    *z /= r;
                }
                GeneratorKind::Normal => {}
            }
        }
    }
    let rebuilt: Vec<Matrix> = (0..kinds.len())
        .map(|gidx| {
            let m = decomp.model(gidx);
            match kinds[gidx] {
                GeneratorKind::Hermitian => m.hermitized(),
                _ => m,
            }
        })
        .collect();
    Ok((decomp, rebuilt))
}

/// One sample of a transported decomposition: labels and frame at a single
/// path parameter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportStep {
    #[serde(with = "crate::field::io::c64vecvec")]
    pub labels: Vec<LabelPoint>,
    pub frame: Matrix,
}

impl TransportStep {
    pub fn decomp(&self) -> JointDecomp {
        JointDecomp {
            frame: self.frame.clone(),
            labels: self.labels.clone(),
        }
    }
}

/// Discretized frame continuation along one edge.
///
/// Step 0 reproduces the start vertex bit-for-bit; the last step reproduces
/// the end vertex up to the track permutation in `plan`. In between the
/// labels interpolate the matched pairs linearly and the frame rotates by
/// `exp(i·s·h)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeTransport {
    /// The domain edge this transport runs along, in traversal direction.
    pub edge: [usize; 2],
    pub plan: MatchingPlan,
    /// Hermitian generator of the frame rotation.
    pub h: Matrix,
    pub steps: Vec<TransportStep>,
    /// Per step: largest commutator of the rotation against the start
    /// vertex's diagonal models, in operator norm.
    pub commutator_profile: Vec<f64>,
    /// Set when the rotation spectrum left no comfortable branch gap and the
    /// path was emitted as two stacked half-rotations.
    pub two_segment: bool,
}

impl EdgeTransport {
    pub fn start(&self) -> &TransportStep {
        self.steps.first().expect("transport has at least two steps")
    }

    pub fn end(&self) -> &TransportStep {
        self.steps.last().expect("transport has at least two steps")
    }

    /// Largest movement of any single label between consecutive steps.
    pub fn max_label_step(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| {
                w[0].labels
                    .iter()
                    .zip(&w[1].labels)
                    .map(|(a, b)| crate::matching::label_dist(a, b))
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest frame movement between consecutive steps (operator norm).
    pub fn max_frame_step(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| w[1].frame.sub(&w[0].frame).op_norm())
            .fold(0.0, f64::max)
    }
}

/// Interior frame patch over one triangle, on a fixed reference grid.
///
/// Rows index the contraction depth `d` (row 0 is the upper boundary path,
/// the last row the lower edge); columns index the loop parameter. Boundary
/// rows are stored bit-exactly as handed in.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriangleFill {
    pub triangle: [usize; 3],
    /// Vertex id the interior labels are anchored to.
    pub anchor: usize,
    pub theta_steps: usize,
    pub d_steps: usize,
    /// Row-major: `samples[d * theta_steps + j]`.
    pub samples: Vec<TransportStep>,
    /// Boundary oscillation this fill was built from.
    pub oscillation: f64,
}

impl TriangleFill {
    pub fn sample(&self, d: usize, j: usize) -> &TransportStep {
        &self.samples[d * self.theta_steps + j]
    }
}

/// A diagonal model over a whole domain: per-vertex labels and frames plus
/// the continuity witnesses (transports, fills).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagonalFrameField {
    pub n: usize,
    /// Generator count (label components).
    pub g: usize,
    /// Matching resolution the field was built at.
    pub eta: f64,
    #[serde(with = "crate::field::io::c64vecvecvec")]
    pub labels: Vec<Vec<LabelPoint>>,
    pub frames: Vec<Matrix>,
    /// One per domain edge when present (parallel to `domain.edges`).
    pub transports: Vec<EdgeTransport>,
    /// One per domain triangle when present (parallel to `domain.triangles`).
    pub fills: Vec<TriangleFill>,
}

impl DiagonalFrameField {
    /// Assemble from bare per-vertex decompositions (no continuity data).
    pub fn from_vertex_decomps(eta: f64, decomps: Vec<JointDecomp>) -> Result<DiagonalFrameField> {
        let first = decomps
            .first()
            .ok_or_else(|| Error::BadParam("no vertices".into()))?;
        let (n, g) = (first.n(), first.g());
        let mut labels = Vec::with_capacity(decomps.len());
        let mut frames = Vec::with_capacity(decomps.len());
        for d in decomps {
            d.validate()?;
            if d.n() != n || d.g() != g {
                return Err(Error::ShapeMismatch(
                    "vertex decompositions of mixed shape".into(),
                ));
            }
            labels.push(d.labels);
            frames.push(d.frame);
        }
        Ok(DiagonalFrameField {
            n,
            g,
            eta,
            labels,
            frames,
            transports: vec![],
            fills: vec![],
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.frames.len()
    }

    pub fn decomp_at(&self, v: usize) -> JointDecomp {
        JointDecomp {
            frame: self.frames[v].clone(),
            labels: self.labels[v].clone(),
        }
    }

    /// Shape compatibility against the field this model claims to diagonalize.
    pub fn check_against(&self, field: &GeneratorField) -> Result<()> {
        if self.n != field.n {
            return Err(Error::SchemaError(format!(
                "frames have n = {}, field has n = {}",
                self.n, field.n
            )));
        }
        if self.g != field.generators.len() {
            return Err(Error::SchemaError(format!(
                "frames carry {} label components, field has {} generators",
                self.g,
                field.generators.len()
            )));
        }
        if self.vertex_count() != field.domain.vertex_count() {
            return Err(Error::SchemaError(format!(
                "frames cover {} vertices, domain has {}",
                self.vertex_count(),
                field.domain.vertex_count()
            )));
        }
        Ok(())
    }

    /// Full structural validation against a domain: per-vertex frame
    /// unitarity and projection completeness, transport endpoint exactness
    /// (bit-equality up to the recorded track permutation), and label
    /// continuity along every transport.
    pub fn validate(&self, domain: &SimplicialDomain) -> Result<()> {
        if self.vertex_count() != domain.vertex_count() || self.labels.len() != self.frames.len() {
            return Err(Error::SchemaError(format!(
                "{} frames / {} label sets over {} vertices",
                self.frames.len(),
                self.labels.len(),
                domain.vertex_count()
            )));
        }
        for v in 0..self.vertex_count() {
            let d = self.decomp_at(v);
            if d.n() != self.n || d.g() != self.g {
                return Err(Error::ShapeMismatch(format!("vertex {v}: wrong shape")));
            }
            d.validate()
                .map_err(|e| Error::FramesInvalid(format!("vertex {v}: {e}")))?;
            // Σpᵢ − I in operator norm; follows from unitarity but is part
            // of the contract, so measure it directly.
            let sum = (0..self.n)
                .map(|i| d.projection(i))
                .fold(Matrix::zeros(self.n), |acc, p| acc.add(&p));
            let defect = sum.sub(&Matrix::identity(self.n)).op_norm();
            if defect > 1e-9 {
                return Err(Error::FramesInvalid(format!(
                    "vertex {v}: projection completeness defect {defect:.3e}"
                )));
            }
        }
        if !self.transports.is_empty() {
            if self.transports.len() != domain.edges.len() {
                return Err(Error::SchemaError(format!(
                    "{} transports over {} edges",
                    self.transports.len(),
                    domain.edges.len()
                )));
            }
            for (idx, t) in self.transports.iter().enumerate() {
                self.validate_transport(idx, t, domain)?;
            }
        }
        if !self.fills.is_empty() {
            if self.fills.len() != domain.triangles.len() {
                return Err(Error::SchemaError(format!(
                    "{} fills over {} triangles",
                    self.fills.len(),
                    domain.triangles.len()
                )));
            }
        }
        Ok(())
    }

    fn validate_transport(
        &self,
        idx: usize,
        t: &EdgeTransport,
        domain: &SimplicialDomain,
    ) -> Result<()> {
        let fail = |msg: String| Err(Error::FramesInvalid(format!("transport {idx}: {msg}")));
        if t.edge != domain.edges[idx] {
            return fail(format!(
                "edge {:?} does not match domain edge {:?}",
                t.edge, domain.edges[idx]
            ));
        }
        if t.steps.len() < 2 {
            return fail("fewer than two steps".into());
        }
        let [a, b] = t.edge;
        if !bit_equal_matrix(&t.start().frame, &self.frames[a])
            || !bit_equal_labels(&t.start().labels, &self.labels[a])
        {
            return fail("start step is not bit-equal to the start vertex".into());
        }
        let end = t.end();
        let perm = &t.plan.perm;
        if perm.len() != self.n {
            return fail("plan permutation has wrong length".into());
        }
        for i in 0..self.n {
            let col_end = end.frame.column(i);
            let col_vertex = self.frames[b].column(perm[i]);
            if col_end
                .iter()
                .zip(&col_vertex)
                .any(|(x, y)| !bit_equal_c64(*x, *y))
                || end.labels[i]
                    .iter()
                    .zip(&self.labels[b][perm[i]])
                    .any(|(x, y)| !bit_equal_c64(*x, *y))
            {
                return fail("end step is not bit-equal to the end vertex".into());
            }
        }
        for step in &t.steps {
            let dev = step.frame.unitary_deviation();
            if dev > 1e-10 {
                return fail(format!("interior frame unitarity deviation {dev:.3e}"));
            }
        }
        // Linear label interpolation moves each label by at most the
        // matched distance split over the steps.
        let segments = (t.steps.len() - 1) as f64;
        let bound = t.plan.bottleneck_cost / segments * if t.two_segment { 2.0 } else { 1.0 };
        let step = t.max_label_step();
        if step > bound + 1e-12 {
            return fail(format!("label step {step:.3e} exceeds bound {bound:.3e}"));
        }
        Ok(())
    }

    /// Worst per-step movement over all transports (labels and frames),
    /// the continuity modulus quoted in reports.
    pub fn continuity_modulus(&self) -> f64 {
        self.transports
            .iter()
            .map(|t| t.max_label_step().max(t.max_frame_step()))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn bit_equal_c64(x: C64, y: C64) -> bool {
    x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
}

pub(crate) fn bit_equal_matrix(a: &Matrix, b: &Matrix) -> bool {
    a.dim() == b.dim()
        && a.entries()
            .iter()
            .zip(b.entries())
            .all(|(x, y)| bit_equal_c64(*x, *y))
}

pub(crate) fn bit_equal_labels(a: &[LabelPoint], b: &[LabelPoint]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.len() == y.len() && x.iter().zip(y).all(|(u, v)| bit_equal_c64(*u, *v)))
}
