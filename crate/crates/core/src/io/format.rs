//! JSON documents for systems of isometries and induction traces.
//!
//! Both documents carry `"format": 1`. Scalars use the exact text grammar
//! (`"1/2"`, `"-1/2+1/2*sqrt(5)"`). Points are written as
//! `{"component": c, "vertex": v}` or
//! `{"component": c, "edge": e, "offset": "t"}`.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{ElementaryMatrix, Matrix};
use crate::forest::{Direction, Edge, Embedding, Germ, MetricForest, Point, Pos, Tree};
use crate::induction::{GraphMap, InductionError, Move, StepEvent, StepKind, StopReason, Trace};
use crate::scalar::{FieldSpec, Scalar};
use crate::system::{Isometry, Letter, PartialIsometry, SystemError, SystemOfIsometries};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Induction(#[from] InductionError),
    #[error("trace is inconsistent at step {step}: {what}")]
    Inconsistent { step: usize, what: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointDesc {
    pub component: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Scalar>,
}

impl PointDesc {
    pub fn from_point(p: &Point) -> Self {
        match &p.pos {
            Pos::Vertex(v) => PointDesc { component: p.comp, vertex: Some(*v), edge: None, offset: None },
            Pos::Edge(e, t) => PointDesc { component: p.comp, vertex: None, edge: Some(*e), offset: Some(t.clone()) },
        }
    }

    pub fn to_point(&self, f: &MetricForest, field: FieldSpec) -> Result<Point, FormatError> {
        if self.component >= f.component_count() {
            return Err(FormatError::Schema(format!("component {} does not exist", self.component)));
        }
        let pos = match (self.vertex, self.edge, &self.offset) {
            (Some(v), None, None) => Pos::Vertex(v),
            (None, Some(e), Some(t)) => {
                check_field(t, field)?;
                Pos::Edge(e, t.clone())
            }
            _ => return Err(FormatError::Schema("a point needs `vertex`, or `edge` with `offset`".into())),
        };
        f.make_point(self.component, pos).map_err(|e| FormatError::System(e.into()))
    }
}

fn check_field(x: &Scalar, field: FieldSpec) -> Result<(), FormatError> {
    if field.contains(x) {
        Ok(())
    } else {
        Err(FormatError::Schema(format!("{x} is not in {field}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentDesc {
    pub vertices: usize,
    #[serde(default)]
    pub edges: Vec<(usize, usize, Scalar)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsometryDesc {
    pub letter: String,
    pub anchors: Vec<(PointDesc, PointDesc)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDescription {
    pub format: u32,
    pub field: FieldSpec,
    pub components: Vec<ComponentDesc>,
    pub isometries: Vec<IsometryDesc>,
}

impl SystemDescription {
    pub fn from_system(s: &SystemOfIsometries) -> Self {
        let f = s.forest();
        let components = f
            .trees()
            .iter()
            .map(|t| ComponentDesc {
                vertices: t.vertex_count(),
                edges: t.edges().iter().map(|e| (e.tail, e.head, e.length.clone())).collect(),
            })
            .collect();
        let isometries = s
            .letters()
            .iter()
            .map(|l| IsometryDesc {
                letter: l.name.clone(),
                anchors: l.map.anchors().iter().map(|(p, q)| (PointDesc::from_point(p), PointDesc::from_point(q))).collect(),
            })
            .collect();
        SystemDescription { format: FORMAT_VERSION, field: s.field(), components, isometries }
    }

    /// Validates and builds the system: field membership, tree shape,
    /// distance-preserving anchors and a connected graph.
    pub fn to_system(&self) -> Result<SystemOfIsometries, FormatError> {
        if self.format != FORMAT_VERSION {
            return Err(FormatError::Version(self.format));
        }
        self.field.validate().map_err(|e| FormatError::Schema(e.to_string()))?;
        if self.components.is_empty() {
            return Err(FormatError::Schema("no components".into()));
        }
        let mut trees = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let mut edges = Vec::with_capacity(c.edges.len());
            for (tail, head, length) in &c.edges {
                check_field(length, self.field)?;
                edges.push(Edge { tail: *tail, head: *head, length: length.clone() });
            }
            trees.push(Tree::new(c.vertices, edges).map_err(|e| FormatError::System(e.into()))?);
        }
        let forest = MetricForest::new(trees);
        let mut letters = Vec::with_capacity(self.isometries.len());
        for iso in &self.isometries {
            if !valid_letter_name(&iso.letter) {
                return Err(FormatError::Schema(format!("letter name `{}` must be a lowercase ASCII identifier", iso.letter)));
            }
            let anchors = iso
                .anchors
                .iter()
                .map(|(p, q)| Ok((p.to_point(&forest, self.field)?, q.to_point(&forest, self.field)?)))
                .collect::<Result<Vec<_>, FormatError>>()?;
            let map = PartialIsometry::from_anchors(&forest, &anchors)
                .map_err(|why| SystemError::NotIsometry(iso.letter.clone(), why))?;
            letters.push(Isometry { name: iso.letter.clone(), map });
        }
        Ok(SystemOfIsometries::new(self.field, forest, letters)?)
    }
}

fn valid_letter_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '\'')
}

pub fn parse_system_str(text: &str) -> Result<SystemOfIsometries, FormatError> {
    let desc: SystemDescription = serde_json::from_str(text)?;
    desc.to_system()
}

pub fn parse_system(path: &Path) -> Result<SystemOfIsometries, FormatError> {
    parse_system_str(&fs::read_to_string(path)?)
}

pub fn system_to_json(s: &SystemOfIsometries) -> String {
    serde_json::to_string_pretty(&SystemDescription::from_system(s)).expect("serializable")
}

/// Writes through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), FormatError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| FormatError::Schema(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GermDesc {
    Edge(usize),
    Tail,
    Head,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionDesc {
    pub base: PointDesc,
    pub germ: GermDesc,
}

impl DirectionDesc {
    fn from_direction(d: &Direction) -> Self {
        let germ = match d.germ {
            Germ::Edge(e) => GermDesc::Edge(e),
            Germ::TowardTail => GermDesc::Tail,
            Germ::TowardHead => GermDesc::Head,
        };
        DirectionDesc { base: PointDesc::from_point(&d.base), germ }
    }

    fn to_direction(&self, f: &MetricForest, field: FieldSpec) -> Result<Direction, FormatError> {
        let germ = match self.germ {
            GermDesc::Edge(e) => Germ::Edge(e),
            GermDesc::Tail => Germ::TowardTail,
            GermDesc::Head => Germ::TowardHead,
        };
        Ok(Direction { base: self.base.to_point(f, field)?, germ })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LetterDesc {
    pub id: usize,
    pub inverse: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventDesc {
    Rips { removed_length: Scalar, noop: bool },
    Split { x: PointDesc, left: Vec<DirectionDesc>, right: Vec<DirectionDesc>, a0: LetterDesc },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingDesc {
    pub component: usize,
    pub vertex_images: Vec<PointDesc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape")]
pub enum FactorDesc {
    A { d: usize, i: usize },
    B { d: usize, j: usize },
    At { d: usize, i: usize },
    Bt { d: usize, j: usize },
    Perm { perm: Vec<usize> },
}

impl From<&ElementaryMatrix> for FactorDesc {
    fn from(e: &ElementaryMatrix) -> Self {
        match e {
            ElementaryMatrix::A { d, i } => FactorDesc::A { d: *d, i: *i },
            ElementaryMatrix::B { d, j } => FactorDesc::B { d: *d, j: *j },
            ElementaryMatrix::At { d, i } => FactorDesc::At { d: *d, i: *i },
            ElementaryMatrix::Bt { d, j } => FactorDesc::Bt { d: *d, j: *j },
            ElementaryMatrix::Perm { perm } => FactorDesc::Perm { perm: perm.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMapDesc {
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
}

/// Per-step summary recomputed on replay and compared byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub step: usize,
    pub kind: String,
    pub components: usize,
    pub letters: usize,
    pub euler_characteristic: i64,
    pub rank: i64,
    pub generalized_edges: usize,
    pub running_min: usize,
    pub branch_points: usize,
    pub total_length: Scalar,
    /// Largest entry of `M_0 ⋯ M_n`, as decimal text.
    pub max_coefficient: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub kind: String,
    pub system: SystemDescription,
    pub tau: GraphMapDesc,
    pub embeddings: Vec<EmbeddingDesc>,
    pub event: EventDesc,
    /// Rows of `M_n` as decimal text.
    pub matrix: Vec<Vec<String>>,
    pub factors: Vec<FactorDesc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum StopDesc {
    Budget,
    NoSplittingPartition { surface_type: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceFile {
    pub format: u32,
    pub policy: String,
    pub budget: usize,
    pub stop: StopDesc,
    pub initial: SystemDescription,
    pub steps: Vec<StepRecord>,
    pub diagnostics: Vec<Diagnostics>,
}

fn kind_name(k: StepKind) -> &'static str {
    match k {
        StepKind::Rips => "rips",
        StepKind::Split => "split",
    }
}

fn matrix_text(m: &Matrix) -> Vec<Vec<String>> {
    m.to_rows().iter().map(|r| r.iter().map(BigInt::to_string).collect()).collect()
}

/// Diagnostics for every step of `trace`, step 0 included.
pub fn diagnostics(trace: &Trace) -> Vec<Diagnostics> {
    let branch = trace.branch_point_counts();
    (0..=trace.len())
        .map(|n| {
            let s = trace.system(n);
            let g = s.graph();
            Diagnostics {
                step: n,
                kind: if n == 0 { "initial".into() } else { kind_name(trace.steps[n - 1].kind).into() },
                components: g.vertex_count,
                letters: s.letter_count(),
                euler_characteristic: g.euler_characteristic(),
                rank: g.rank(),
                generalized_edges: trace.ge_counts[n],
                running_min: trace.running_min[n],
                branch_points: branch[n],
                total_length: s.forest().total_length(),
                max_coefficient: if n == 0 { "1".into() } else { trace.max_coefficient[n - 1].to_string() },
            }
        })
        .collect()
}

impl TraceFile {
    pub fn from_trace(trace: &Trace, budget: usize) -> Self {
        let steps = trace
            .steps
            .iter()
            .enumerate()
            .map(|(n, st)| {
                let system = trace.system(n + 1);
                let event = match &st.event {
                    StepEvent::Rips { removed_length, noop } => {
                        EventDesc::Rips { removed_length: removed_length.clone(), noop: *noop }
                    }
                    StepEvent::Split { x, left, right, a0 } => EventDesc::Split {
                        x: PointDesc::from_point(x),
                        left: left.iter().map(DirectionDesc::from_direction).collect(),
                        right: right.iter().map(DirectionDesc::from_direction).collect(),
                        a0: LetterDesc { id: a0.id, inverse: a0.inv },
                    },
                };
                StepRecord {
                    kind: kind_name(st.kind).into(),
                    system: SystemDescription::from_system(system),
                    tau: GraphMapDesc { vertex_map: st.tau.vertex_map.clone(), edge_map: st.tau.edge_map.clone() },
                    embeddings: st
                        .embeddings
                        .iter()
                        .map(|e| EmbeddingDesc {
                            component: e.comp,
                            vertex_images: e.vertex_images.iter().map(PointDesc::from_point).collect(),
                        })
                        .collect(),
                    event,
                    matrix: matrix_text(&st.matrix),
                    factors: st.factors.iter().map(FactorDesc::from).collect(),
                }
            })
            .collect();
        let stop = match trace.stop {
            StopReason::Budget => StopDesc::Budget,
            StopReason::NoSplittingPartition { surface_type } => StopDesc::NoSplittingPartition { surface_type },
        };
        TraceFile {
            format: FORMAT_VERSION,
            policy: "rips-first".into(),
            budget,
            stop,
            initial: SystemDescription::from_system(trace.system(0)),
            steps,
            diagnostics: diagnostics(trace),
        }
    }

    /// Rebuilds the trace from the recorded moves and checks the recorded
    /// matrices and factorizations against the rebuilt ones.
    pub fn to_trace(&self) -> Result<Trace, FormatError> {
        if self.format != FORMAT_VERSION {
            return Err(FormatError::Version(self.format));
        }
        let mut trace = Trace::start(self.initial.to_system()?)?;
        for (n, rec) in self.steps.iter().enumerate() {
            let bad = |what: String| FormatError::Inconsistent { step: n, what };
            let next = rec.system.to_system()?;
            let old = trace.last().clone();
            let (of, ofield) = (old.forest(), old.field());
            let kind = match rec.kind.as_str() {
                "rips" => StepKind::Rips,
                "split" => StepKind::Split,
                other => return Err(bad(format!("unknown step kind `{other}`"))),
            };
            let event = match &rec.event {
                EventDesc::Rips { removed_length, noop } => {
                    StepEvent::Rips { removed_length: removed_length.clone(), noop: *noop }
                }
                EventDesc::Split { x, left, right, a0 } => {
                    if a0.id >= old.letter_count() {
                        return Err(bad(format!("letter {} out of range", a0.id)));
                    }
                    let dirs = |v: &[DirectionDesc]| {
                        v.iter().map(|d| d.to_direction(of, ofield)).collect::<Result<Vec<_>, _>>()
                    };
                    StepEvent::Split {
                        x: x.to_point(of, ofield)?,
                        left: dirs(left)?,
                        right: dirs(right)?,
                        a0: Letter { id: a0.id, inv: a0.inverse },
                    }
                }
            };
            let tau = GraphMap { vertex_map: rec.tau.vertex_map.clone(), edge_map: rec.tau.edge_map.clone() };
            let g_new = next.graph();
            if tau.vertex_map.len() != g_new.vertex_count
                || tau.edge_map.len() != next.letter_count()
                || tau.vertex_map.iter().any(|&v| v >= of.component_count())
                || tau.edge_map.iter().any(|&e| e >= old.letter_count())
            {
                return Err(bad("graph map does not fit the systems".into()));
            }
            if rec.embeddings.len() != next.forest().component_count() {
                return Err(bad("one embedding per component expected".into()));
            }
            let mut embeddings = Vec::with_capacity(rec.embeddings.len());
            for (c, e) in rec.embeddings.iter().enumerate() {
                if e.vertex_images.len() != next.forest().tree(c).vertex_count() {
                    return Err(bad(format!("embedding of component {c} has the wrong size")));
                }
                let vertex_images = e
                    .vertex_images
                    .iter()
                    .map(|p| p.to_point(of, ofield))
                    .collect::<Result<Vec<_>, _>>()?;
                embeddings.push(Embedding { comp: e.component, vertex_images });
            }
            trace.push(Move { kind, next, tau, embeddings, event })?;
            let st = trace.steps.last().expect("just pushed");
            if matrix_text(&st.matrix) != rec.matrix {
                return Err(bad(format!("recorded matrix differs from {}", st.matrix)));
            }
            let factors: Vec<FactorDesc> = st.factors.iter().map(FactorDesc::from).collect();
            if factors != rec.factors {
                return Err(bad("recorded factorization differs".into()));
            }
        }
        trace.stop = match self.stop {
            StopDesc::Budget => StopReason::Budget,
            StopDesc::NoSplittingPartition { surface_type } => StopReason::NoSplittingPartition { surface_type },
        };
        Ok(trace)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_atomic(path, &self.to_json())
    }
}

/// Outcome of replaying a trace file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub steps: usize,
    pub recorded: String,
    pub recomputed: String,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        self.recorded == self.recomputed
    }
}

/// Rebuilds the trace and recomputes its diagnostics; the two renderings
/// are compared as text.
pub fn replay(file: &TraceFile) -> Result<(Trace, ReplayReport), FormatError> {
    let trace = file.to_trace()?;
    let render = |d: &[Diagnostics]| serde_json::to_string_pretty(d).expect("serializable");
    let report = ReplayReport {
        steps: trace.len(),
        recorded: render(&file.diagnostics),
        recomputed: render(&diagnostics(&trace)),
    };
    Ok((trace, report))
}
