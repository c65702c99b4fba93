//! Projective model spaces of constant curvature and their degenerate limits.
//!
//! Forms, projective distance via cross-ratio, convex duality, geometric
//! transition, degenerate connections, infinitesimal Pogorelov maps and surface
//! embedding data.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod connections;
pub mod duality;
pub mod error;
pub mod forms;
pub mod hull;
pub mod numeric;
pub mod pogorelov;
pub mod projective;
pub mod surfaces;
pub mod transition;

pub use connections::{
    co_connection, connection_report, connection_transition_gap, geodesic_residual, levi_civita, volume_form,
    volume_transition_gap, Connection, ConnectionKind, ConnectionReport, FieldFamily, PolyField, VectorField,
    VolumeForm,
};
pub use duality::{
    body_from_support, cylinder_transform, dual_body, dual_cone, dual_hyperplane, dual_point, dual_support,
    support_from_body, truncation_dual, ConeRep, Flavor, GridSpec, Hyperplane, PolyCone, SupportFunction,
};
pub use error::{GeomError, Result};
pub use forms::{AmbientVector, BilinearForm, Signature, VectorClass};
pub use pogorelov::{
    chart_metric_eval, contraction_gap, deformation_residual, infinitesimal_pogorelov, killing_residual, lambda,
    operator_l, rigidity_transport, weyl_gap, ChartKind, ChartMetric, KillingField, Patch, PatchMap,
};
pub use projective::{
    absolute_points, classify_line, cross_ratio, line_through, projective_distance, pseudo_distance_lift, AbsolutePair,
    ExtComplex, LineType, ModelSpace, ProjLine, ProjPoint, SpaceName,
};
pub use surfaces::{
    canonical_patch, dual_embedding_data, embedding_data, embedding_data_co, gauss_codazzi_residual,
    immersion_from_data_co, normalized_graph_family, recover_support_from_shape, shape_from_support,
    shape_from_support_coe, shape_from_support_comin, surface_transition, Base, EmbeddingData, Grid, SupportGraph,
    SupportSpec, SurfaceFamily, SurfacePatch,
};
pub use transition::{
    conjugate_isometry, conjugate_path_limit, duality_transition_check, limit_group_membership, rescaled_point_limit,
    FamilyKind, IsometryPath, PointPath, RescalingFamily, TargetGroup, Transition,
};
