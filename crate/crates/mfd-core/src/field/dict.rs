//! The finite test-function dictionary.
//!
//! Residuals are always measured against a finite set of functions of the
//! generators. We standardize on monomials `z^a·conj(z)^b` per generator up
//! to a configurable total degree, plus the constant. Degree 2 is the
//! default everywhere: it contains the identity (so the generators
//! themselves are reproduced), the conjugate (so adjoints are exercised),
//! and the quadratics that detect frame misalignment invisible to linear
//! functions.

use serde::{Deserialize, Serialize};

use crate::dense::C64;
use crate::error::Error;
use crate::matching::LabelPoint;
use crate::Result;

/// One dictionary member: a scalar function of the joint label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DictMember {
    /// The constant function 1.
    One,
    /// `z_g^a · conj(z_g)^b` applied to generator `g`'s label component.
    Monomial { generator: usize, a: u32, b: u32 },
}

impl DictMember {
    /// Evaluate at a joint label in `C^g`.
    pub fn evaluate(&self, label: &LabelPoint) -> C64 {
        match *self {
            DictMember::One => C64::new(1.0, 0.0),
            DictMember::Monomial { generator, a, b } => {
                let z = label[generator];
                z.powi(a as i32) * z.conj().powi(b as i32)
            }
        }
    }

    /// Lipschitz constant on the ball `|z_g| ≤ radius` (in each component).
    pub fn lipschitz_bound(&self, radius: f64) -> f64 {
        match *self {
            DictMember::One => 0.0,
            DictMember::Monomial { a, b, .. } => {
                let total = (a + b) as f64;
                if a + b <= 1 {
                    total
                } else {
                    total * radius.powi((a + b - 1) as i32)
                }
            }
        }
    }

    pub fn total_degree(&self) -> u32 {
        match *self {
            DictMember::One => 0,
            DictMember::Monomial { a, b, .. } => a + b,
        }
    }

    /// Pointwise product, when it is again a monomial (same generator or one
    /// side constant).
    pub fn product(&self, other: &DictMember) -> Option<DictMember> {
        match (*self, *other) {
            (DictMember::One, f) | (f, DictMember::One) => Some(f),
            (
                DictMember::Monomial { generator: g1, a: a1, b: b1 },
                DictMember::Monomial { generator: g2, a: a2, b: b2 },
            ) if g1 == g2 => Some(DictMember::Monomial {
                generator: g1,
                a: a1 + a2,
                b: b1 + b2,
            }),
            _ => None,
        }
    }
}

impl std::fmt::Display for DictMember {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            DictMember::One => write!(f, "1"),
            DictMember::Monomial { generator, a, b } => {
                let mut parts = Vec::new();
                match a {
                    0 => {}
                    1 => parts.push(format!("z{generator}")),
                    _ => parts.push(format!("z{generator}^{a}")),
                }
                match b {
                    0 => {}
                    1 => parts.push(format!("conj(z{generator})")),
                    _ => parts.push(format!("conj(z{generator})^{b}")),
                }
                write!(f, "{}", parts.join("*"))
            }
        }
    }
}

/// All monomials up to a total degree, for a fixed number of generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionDictionary {
    pub degree: u32,
    pub generators: usize,
    pub members: Vec<DictMember>,
}

impl FunctionDictionary {
    /// The constant plus, per generator, every `z^a·conj(z)^b` with
    /// `1 ≤ a+b ≤ degree`. Members are ordered: constant first, then by
    /// generator, total degree, and ascending conjugate power.
    pub fn new(degree: u32, generators: usize) -> Result<FunctionDictionary> {
        if degree < 1 {
            return Err(Error::BadParam("dictionary degree must be ≥ 1".into()));
        }
        if generators == 0 {
            return Err(Error::BadParam("dictionary needs ≥ 1 generator".into()));
        }
        let mut members = vec![DictMember::One];
        for g in 0..generators {
            for total in 1..=degree {
                for b in 0..=total {
                    members.push(DictMember::Monomial {
                        generator: g,
                        a: total - b,
                        b,
                    });
                }
            }
        }
        Ok(FunctionDictionary {
            degree,
            generators,
            members,
        })
    }

    /// Largest member Lipschitz constant on `|z| ≤ radius`.
    pub fn lipschitz_bound(&self, radius: f64) -> f64 {
        self.members
            .iter()
            .map(|m| m.lipschitz_bound(radius))
            .fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}
