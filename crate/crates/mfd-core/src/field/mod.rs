//! Data model shared by every driver: simplicial carriers, discretized
//! generator fields, diagonal frame fields, the test-function dictionary,
//! residual evaluation, and the on-disk format.

pub mod dict;
pub mod domain;
pub mod frames;
pub mod generator;
pub mod io;
pub mod residual;

pub use dict::{DictMember, FunctionDictionary};
pub use domain::{build_domain, DomainKind, SimplicialDomain};
pub use frames::{
    evaluate_hom, DiagonalFrameField, EdgeTransport, JointDecomp, TransportStep, TriangleFill,
};
pub use generator::{refine_field, Generator, GeneratorField, GeneratorKind};
pub use io::{load, save};
pub use residual::{residual_report, ResidualReport};
