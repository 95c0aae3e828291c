//! Rips and splitting induction, the unfolding driver, and trace diagnostics.

pub mod graph;
pub mod rips;
pub mod split;
pub mod trace;

use thiserror::Error;

use crate::forest::{Direction, Embedding, MetricForest, Point};
use crate::scalar::Scalar;
use crate::system::{Letter, SystemError, SystemOfIsometries};

pub use graph::{generalized_edges, incidence, GeneralizedEdge, GraphMap};
pub use rips::rips_step;
pub use split::{find_splitting_partitions, split_step, SplittingPartition};
pub use trace::{unfold, InductionStep, Policy, StopReason, Trace, UnfoldOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InductionError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("graph has a vertex of valence one ({0})")]
    ValenceOne(usize),
    #[error("induction produced a disconnected graph")]
    Disconnected,
    #[error("invalid splitting partition: {0}")]
    InvalidPartition(String),
    #[error("input system is not reduced: {0}")]
    NotReduced(String),
    #[error("{0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Rips,
    Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepEvent {
    Rips { removed_length: Scalar, noop: bool },
    Split { x: Point, left: Vec<Direction>, right: Vec<Direction>, a0: Letter },
}

/// Successor system of one move together with the graph map back.
#[derive(Debug, Clone)]
pub struct Move {
    pub kind: StepKind,
    pub next: SystemOfIsometries,
    pub tau: GraphMap,
    /// For each new component, its isometric embedding into the old forest.
    pub embeddings: Vec<Embedding>,
    pub event: StepEvent,
}

impl Move {
    pub fn is_noop(&self) -> bool {
        matches!(self.event, StepEvent::Rips { noop: true, .. })
    }

    /// Position in the old forest of a point of the new forest.
    pub fn embed(&self, old: &MetricForest, p: &Point) -> Point {
        self.next.forest().embed_point(old, &self.embeddings[p.comp], p)
    }
}

pub(crate) fn identity_embeddings(f: &MetricForest) -> Vec<Embedding> {
    (0..f.component_count())
        .map(|c| Embedding {
            comp: c,
            vertex_images: (0..f.tree(c).vertex_count()).map(|v| Point::vertex(c, v)).collect(),
        })
        .collect()
}

/// Smallest `base{k}` not already taken, where `base` drops trailing digits.
pub(crate) fn fresh_name(old: &str, taken: &[String]) -> String {
    let trimmed = old.trim_end_matches(|c: char| c.is_ascii_digit());
    let base = if trimmed.is_empty() { old } else { trimmed };
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded search")
}
