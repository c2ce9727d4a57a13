//! Deterministic simulation of disk-coverage cells that cooperatively
//! compute the Cech complex of their network, locate coverage-hole
//! boundary cycles, and reduce transmission power while preserving the
//! Betti numbers beta_0 and beta_1.
//!
//! The crate is organized around six modules:
//!
//! - [`geometry`]: epsilon-resolved predicates on planar disks
//! - [`homology`]: GF(2) chain complexes, ranks and Betti numbers
//! - [`cech`]: centralized and per-cell Cech complex construction
//! - [`simnet`]: the deterministic discrete-event harness
//! - [`protocol`]: the per-cell agent (discovery, exchange, hole
//!   detection, downhill power optimization)
//! - [`oracle`]: grid-sampled ground truth and the Rips comparison
//!
//! Bulk operations (grid fills, clique expansion) run on rayon when the
//! default `parallel` feature is enabled and fall back to sequential
//! iterators otherwise; results are identical either way.

pub mod cech;
pub mod geometry;
pub mod homology;
pub mod oracle;
pub mod protocol;
pub mod simnet;

pub use cech::{
    build_cech_centralized, build_cech_centralized_seq, complex_to_text, local_simplices,
    merge_views, random_cells, right_hand_precedes, Cell, CellId, LocalView,
};
pub use geometry::{
    circle_intersection_points, common_intersection_nonempty, disks_overlap,
    intersection_clearance, side_of_edge, Disk, Point2, Side, Tolerance,
};
pub use homology::{betti, boundary_matrix, rank_gf2, Simplex, SimplicialComplex};
pub use oracle::{count_holes_grid, grid_common_intersection, overlap_components, rips_complex};
pub use protocol::{
    canonical_cycle, detect_cover_edges, CellAgent, Phase, ProtocolParams, ReductionStatus,
    RunMode,
};
pub use simnet::{Agent, Message, SimConfig, SimCtx, SimError, Simulator, Tick, TimerHandle, Trace};
