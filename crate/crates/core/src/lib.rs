//! Fragment vocabulary learning and Q-table guided molecule generation.

pub mod decompose;
pub mod config;
mod error;
pub mod fragment;
pub mod generator;
pub mod membership;
pub mod metrics;
pub mod objective;
pub mod proxies;
pub mod session;
pub mod training;
pub mod tuning;
pub mod qtable;

pub use error::{CoreError, Result};
pub use fragment::{apply_cuts, assemble, cuttable_bonds, fragment_vocabulary, AttachmentSite, ConnectionRecord, Decomposition, Fragment, Link};
pub use qtable::{ConnectionKey, QEntry, QParams, QTable, UpdateMode};
pub use decompose::{decompose, mfr_score, DecompositionConfig, ScoreAggregate};
pub use generator::{generate_batch, generate_one, GeneratedMolecule, GenerationConfig, SamplingIndex, Strategy};
pub use objective::{ObjectiveSpec, ObjectiveTerm, Property, Scorer, TermKind};
pub use proxies::{PropertyProvider, ProxyProvider};
pub use metrics::{evaluate, EvaluationReport, MetricsConfig};
pub use config::RunConfig;
pub use tuning::{FeedbackItem, FeedbackRecord, KnowledgeBase, LoopMode, Reasoner};
pub use training::{EpochMetrics, RunState, Trainer};
pub use session::{Round, RoundStatus, Session};
