pub mod dense;
pub mod diag1d;
pub mod disk2d;
pub mod error;
pub mod examples;
pub mod field;
pub mod homotopy;
pub mod matching;
pub mod obstruction;

pub use dense::{
    hermitian_eig, joint_diagonalize, normal_decompose, snap, unitary_log_gap, JointDiagResult,
    Matrix, SnapMode, SpectralDecomp, C64,
};
pub use diag1d::{
    cycle_monodromy, diagonalize_cycle, diagonalize_path, edge_transport, suggest_eta,
    DiagOutcome, MonodromyResult,
};
pub use disk2d::{
    boundary_align, diagonalize_complex2, extend_triangle, snap_vertex_homomorphism,
    triangle_boundary, BoundaryData, VertexSnap,
};
pub use error::Error;
pub use field::{
    build_domain, evaluate_hom, refine_field, residual_report, DiagonalFrameField, DomainKind,
    FunctionDictionary, GeneratorField, ResidualReport, SimplicialDomain,
};
pub use homotopy::{basic_homotopy, HomotopyPath, Pinned};
pub use matching::{
    bottleneck_match, cluster_by_radius, frame_alignment_unitary, spectra_hausdorff,
    ClusterPartition, MatchingPlan,
};
pub use obstruction::{
    chern_number, degree3, det_winding, gen_example, link_chern_certificates, ExampleKind,
    ObstructionKind, ObstructionReport, ObstructionValue,
};

pub type Result<T> = std::result::Result<T, Error>;
