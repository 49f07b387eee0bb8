//! An embedded data lake for mixed textual and tabular corpora: a metadata
//! catalog, refined representations, inverted indexes, semantic resources
//! and content analytics over one on-disk directory.

pub mod analytics;
pub mod catalog;
pub mod docstore;
pub mod error;
pub mod fixture;
pub mod indexer;
pub mod ingest;
pub mod lake;
pub mod semantics;
pub mod stats;
pub mod tablestore;
pub mod textproc;
pub mod workload;

pub use analytics::{
    Analysis, ClusterAssignment, GroupComparison, KeywordRanking, Method, Projection2D, TupleComparison,
};
pub use catalog::{Catalog, ColumnId, GroupExpr, GroupId, GroupingId, ObjectId, ObjectKind, ObjectNode, PropValue};
pub use error::{LakeError, Result};
pub use indexer::{IndexName, MatchMode, ScoredObject, Snippet, Target, TermQuery};
pub use ingest::{IngestFailure, IngestReport, SidecarPolicy};
pub use lake::Lake;
pub use stats::LakeStats;
pub use tablestore::{DataType, RelTable, Value};
pub use textproc::Language;
pub use workload::{run_workload, WorkloadResult};
