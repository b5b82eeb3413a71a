//! MST-based diagnostics for clusterings of high-dimensional data.
//!
//! The minimum spanning tree of the original data is used to summarize how
//! clusters connect (simplified medoid subtree), to compare such summaries
//! (a normalized Robinson-Foulds distance), to test whether two groups are
//! separated (a crossing-count test with a simulated unimodal null), and to
//! lay out the tree path between two groups in the plane (PCA followed by a
//! ridge CCA against a polynomial in the path index).

pub mod crossing;
pub mod data;
pub mod error;
pub mod experiments;
pub mod extras;
pub mod kde;
pub mod linalg;
pub mod mst;
pub mod nulltheory;
pub mod projection;
pub mod rf;
pub mod session;
pub mod tree;

pub use crossing::{crossing_count, simplify_group_subtree, CrossingStatistic, GroupSelection, Mediator};
pub use data::{load_session, Clustering, CsvSources, Dataset, Embedding, MetaColumn, MetaTable, MetaValues, SessionInputs};
pub use error::{Error, Result};
pub use extras::{heatmap_spec, meta_summary, ColumnSummary, FiveNumber, HeatmapSpec, MetaSummary};
pub use kde::{kde2d, mode_count, DensitySurface};
pub use linalg::global_pca;
pub use mst::{build_mst, medoid_subtree, medoids, simplified_medoid_tree, simplify_medoid_subtree, MedoidSet};
pub use mst_test::{estimate_group_density, mst_test, simulate_null, GroupDensity, TestConfig, TestResult};
pub use nulltheory::{minimal_crossing_density, NullCase, NullSolution, NullTheoryProblem, PiecewiseDensity};
pub use projection::{cv_select_lambda, pca_rcca_project, polynomial_design, PathMatrix, ProjectionConfig, ProjectionResult};
pub use rf::{rf_distance, stability_experiment, RfResult, StabilityReport};
pub use session::{GroupsRequest, Session};
pub use tree::{Edge, WeightedTree};
