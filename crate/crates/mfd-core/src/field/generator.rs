//! Discretized generator fields: the input side of every driver.
//!
//! A `GeneratorField` samples finitely many generators of a commutative
//! C*-algebra at every vertex of a carrier. Validation is strict and runs on
//! load: samples must pairwise commute and be normal within the tolerances
//! the file itself declares, and each generator's kind tag (Hermitian,
//! unitary, plain normal) is checked at every vertex. A field that fails
//! validation never reaches a driver.

use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::error::Error;
use crate::field::domain::{DomainKind, SimplicialDomain};
use crate::field::frames::resnap_tuple;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    Hermitian,
    Unitary,
    Normal,
}

impl std::fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GeneratorKind::Hermitian => "hermitian",
            GeneratorKind::Unitary => "unitary",
            GeneratorKind::Normal => "normal",
        };
        f.write_str(s)
    }
}

/// One named generator: a kind tag and one sample matrix per vertex.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub kind: GeneratorKind,
    pub samples: Vec<Matrix>,
    /// Declared bound on the sample's variation per unit of domain distance,
    /// if the producer knows one.
    pub lipschitz_hint: Option<f64>,
}

/// A generator field over a carrier: the discretized homomorphism.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorField {
    pub domain: SimplicialDomain,
    pub n: usize,
    /// Commutator tolerance, relative to `(1+‖A‖)(1+‖B‖)`.
    pub tol_commute: f64,
    /// Normality/kind tolerance, relative to `1+‖A‖` (squared for the
    /// normality commutator).
    pub tol_normal: f64,
    pub generators: Vec<Generator>,
}

impl GeneratorField {
    /// Assemble and validate.
    pub fn new(
        domain: SimplicialDomain,
        n: usize,
        generators: Vec<Generator>,
    ) -> Result<GeneratorField> {
        let field = GeneratorField {
            domain,
            n,
            tol_commute: 1e-8,
            tol_normal: 1e-8,
            generators,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn g(&self) -> usize {
        self.generators.len()
    }

    /// All generator samples at one vertex, in generator order.
    pub fn vertex_tuple(&self, v: usize) -> Vec<&Matrix> {
        self.generators.iter().map(|g| &g.samples[v]).collect()
    }

    pub fn kinds(&self) -> Vec<GeneratorKind> {
        self.generators.iter().map(|g| g.kind).collect()
    }

    /// Largest sample operator norm over all generators and vertices; the
    /// radius used for dictionary Lipschitz bounds.
    pub fn spectral_radius_bound(&self) -> f64 {
        self.generators
            .iter()
            .flat_map(|g| g.samples.iter())
            .map(Matrix::op_norm)
            .fold(0.0, f64::max)
    }

    /// Shape, finiteness, kind tags, normality, and pairwise commutation at
    /// every vertex.
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let v_count = self.domain.vertex_count();
        if self.generators.is_empty() {
            return Err(Error::SchemaError("field has no generators".into()));
        }
        if !(self.tol_commute > 0.0 && self.tol_normal > 0.0) {
            return Err(Error::SchemaError("tolerances must be positive".into()));
        }
        for gen in &self.generators {
            if gen.samples.len() != v_count {
                return Err(Error::SchemaError(format!(
                    "generator '{}' has {} samples over {} vertices",
                    gen.name,
                    gen.samples.len(),
                    v_count
                )));
            }
            for (v, a) in gen.samples.iter().enumerate() {
                if a.dim() != self.n {
                    return Err(Error::SchemaError(format!(
                        "generator '{}' vertex {v}: matrix is {}×{0}, field declares n = {}",
                        gen.name,
                        a.dim(),
                        self.n
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::ValidationFailed(format!(
                        "generator '{}' vertex {v}: non-finite entries",
                        gen.name
                    )));
                }
                let scale = 1.0 + a.op_norm();
                let kind_ok = match gen.kind {
                    GeneratorKind::Hermitian => a.hermitian_deviation() <= self.tol_normal * scale,
                    GeneratorKind::Unitary => a.unitary_deviation() <= self.tol_normal * scale,
                    GeneratorKind::Normal => true,
                };
                if !kind_ok {
                    return Err(Error::ValidationFailed(format!(
                        "generator '{}' vertex {v}: sample is not {} within tolerance",
                        gen.name, gen.kind
                    )));
                }
                let normal_dev = a.commutator(&a.adjoint()).op_norm();
                if normal_dev > self.tol_normal * scale * scale {
                    return Err(Error::ValidationFailed(format!(
                        "generator '{}' vertex {v}: normality deviation {normal_dev:.3e}",
                        gen.name
                    )));
                }
            }
        }
        for v in 0..v_count {
            for i in 0..self.generators.len() {
                for j in (i + 1)..self.generators.len() {
                    let a = &self.generators[i].samples[v];
                    let b = &self.generators[j].samples[v];
                    let comm = a.commutator(b).op_norm();
                    let bound =
                        self.tol_commute * (1.0 + a.op_norm()) * (1.0 + b.op_norm());
                    if comm > bound {
                        return Err(Error::ValidationFailed(format!(
                            "vertex {v}: generators '{}' and '{}' commute only to {comm:.3e}",
                            self.generators[i].name, self.generators[j].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest per-edge movement of any generator, in operator norm — the
    /// discrete modulus of continuity of the field.
    pub fn edge_motion(&self) -> f64 {
        self.domain
            .edges
            .iter()
            .flat_map(|&[a, b]| {
                self.generators
                    .iter()
                    .map(move |g| g.samples[a].sub(&g.samples[b]).op_norm())
            })
            .fold(0.0, f64::max)
    }
}

/// One round of mesh refinement: subdivide the domain, fill each new vertex
/// with the midpoint of its parents' samples, then snap the midpoint tuple
/// back to an exactly commuting tuple of the declared kinds. Original
/// vertices keep their samples bit-for-bit.
pub fn refine_field(field: &GeneratorField) -> Result<GeneratorField> {
    let (domain, origins) = field.domain.subdivided()?;
    let kinds = field.kinds();
    let old_count = field.domain.vertex_count();
    // Interval refinement renumbers into parameter order (old vertex i →
    // 2i, i-th midpoint → 2i+1); the other kinds append midpoints after the
    // existing ids.
    let interval = matches!(field.domain.kind, DomainKind::Interval { .. });
    let old_id = |i: usize| if interval { 2 * i } else { i };
    let new_id = |k: usize| if interval { 2 * k + 1 } else { old_count + k };

    let mut all: Vec<Vec<Matrix>> = field
        .generators
        .iter()
        .map(|_| vec![Matrix::zeros(field.n); domain.vertex_count()])
        .collect();
    for (gi, gen) in field.generators.iter().enumerate() {
        for (v, sample) in gen.samples.iter().enumerate() {
            all[gi][old_id(v)] = sample.clone();
        }
    }
    for (k, &[a, b]) in origins.iter().enumerate() {
        let mids: Vec<Matrix> = field
            .generators
            .iter()
            .map(|g| g.samples[a].add(&g.samples[b]).scale_re(0.5))
            .collect();
        let refs: Vec<&Matrix> = mids.iter().collect();
        let (_, rebuilt) = resnap_tuple(&refs, &kinds)?;
        for (gi, m) in rebuilt.into_iter().enumerate() {
            all[gi][new_id(k)] = m;
        }
    }
    let generators = field
        .generators
        .iter()
        .zip(all)
        .map(|(g, samples)| Generator {
            name: g.name.clone(),
            kind: g.kind,
            samples,
            lipschitz_hint: g.lipschitz_hint,
        })
        .collect();
    let refined = GeneratorField {
        domain,
        n: field.n,
        tol_commute: field.tol_commute,
        tol_normal: field.tol_normal,
        generators,
    };
    refined.validate()?;
    Ok(refined)
}
