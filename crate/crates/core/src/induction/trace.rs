//! The unfolding driver and diagnostics over a finished trace.

use num_bigint::BigInt;

use crate::cone::{elementary_factors, ElementaryMatrix, Matrix};
use crate::forest::{Embedding, Point, Subtree};
use crate::scalar::Scalar;
use crate::system::{reduce, SystemOfIsometries, Word};

use super::graph::{generalized_edges, incidence, GeneralizedEdge, GraphMap};
use super::rips::{doubly_covered, rips_step};
use super::split::{find_splitting_partitions, split_step};
use super::{InductionError, Move, StepEvent, StepKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Rips when it changes the system, otherwise the first splitting partition.
    #[default]
    RipsFirst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnfoldOptions {
    pub budget: usize,
    pub policy: Policy,
    /// Word length for the reducedness precondition; `None` skips it.
    pub reduced_depth: Option<usize>,
}

impl UnfoldOptions {
    pub const DEFAULT_REDUCED_DEPTH: usize = 4;

    pub fn new(budget: usize) -> Self {
        UnfoldOptions { budget, policy: Policy::RipsFirst, reduced_depth: Some(Self::DEFAULT_REDUCED_DEPTH) }
    }

    pub fn without_reduced_check(mut self) -> Self {
        self.reduced_depth = None;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    /// Rips was a no-op and no splitting partition exists.
    NoSplittingPartition { surface_type: bool },
}

#[derive(Debug, Clone)]
pub struct InductionStep {
    pub kind: StepKind,
    pub tau: GraphMap,
    pub embeddings: Vec<Embedding>,
    pub event: StepEvent,
    /// Rows index the generalized edges before the step, columns after.
    pub matrix: Matrix,
    pub factors: Vec<ElementaryMatrix>,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub systems: Vec<SystemOfIsometries>,
    pub ges: Vec<Vec<GeneralizedEdge>>,
    pub steps: Vec<InductionStep>,
    /// `d_k`, the generalized-edge count of each system.
    pub ge_counts: Vec<usize>,
    /// Running minimum of `d_k`.
    pub running_min: Vec<usize>,
    /// Entry `k` is the largest coefficient of `M_0 ⋯ M_k`.
    pub max_coefficient: Vec<BigInt>,
    /// Level-0 letter id of each letter of each system.
    pub ancestors: Vec<Vec<usize>>,
    pub stop: StopReason,
    prefix: Matrix,
}

impl Trace {
    pub fn start(s0: SystemOfIsometries) -> Result<Trace, InductionError> {
        let g = s0.graph();
        if !g.is_connected() {
            return Err(InductionError::Disconnected);
        }
        let ges = generalized_edges(&g)?;
        let d = ges.len();
        Ok(Trace {
            ancestors: vec![(0..s0.letter_count()).collect()],
            systems: vec![s0],
            ges: vec![ges],
            steps: Vec::new(),
            ge_counts: vec![d],
            running_min: vec![d],
            max_coefficient: Vec::new(),
            stop: StopReason::Budget,
            prefix: Matrix::identity(d),
        })
    }

    /// Appends a move made from the last system.
    pub fn push(&mut self, mv: Move) -> Result<(), InductionError> {
        let before = self.ges.last().expect("trace has a system");
        let after = generalized_edges(&mv.next.graph())?;
        let counts = incidence(before, &after, &mv.tau);
        let matrix = Matrix::from_rows(&counts);
        let factors = elementary_factors(&matrix).map_err(|e| InductionError::Precondition(e.to_string()))?;
        self.prefix = self.prefix.checked_mul(&matrix).expect("consecutive shapes agree");
        self.max_coefficient.push(self.prefix.max_entry());
        let prev_anc = self.ancestors.last().expect("trace has a system");
        self.ancestors.push(mv.tau.edge_map.iter().map(|&e| prev_anc[e]).collect());
        let d = after.len();
        self.ge_counts.push(d);
        self.running_min.push(d.min(*self.running_min.last().expect("nonempty")));
        self.ges.push(after);
        self.systems.push(mv.next);
        self.steps.push(InductionStep {
            kind: mv.kind,
            tau: mv.tau,
            embeddings: mv.embeddings,
            event: mv.event,
            matrix,
            factors,
        });
        Ok(())
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn system(&self, n: usize) -> &SystemOfIsometries {
        &self.systems[n]
    }

    pub fn last(&self) -> &SystemOfIsometries {
        self.systems.last().expect("trace has a system")
    }

    pub fn matrix(&self, n: usize) -> &Matrix {
        &self.steps[n].matrix
    }

    /// Rank of the fundamental group of `Γ_0`.
    pub fn rank(&self) -> i64 {
        self.systems[0].graph().rank()
    }

    /// `D`, the minimum generalized-edge count over the whole trace.
    pub fn min_ge_count(&self) -> usize {
        *self.running_min.last().expect("nonempty")
    }

    /// `M_{n0} ⋯ M_{n1−1}`; the identity when `n0 == n1`.
    pub fn product(&self, n0: usize, n1: usize) -> Option<Matrix> {
        if n0 > n1 || n1 > self.len() {
            return None;
        }
        (n0..n1).try_fold(Matrix::identity(self.ge_counts[n0]), |acc, k| acc.checked_mul(&self.steps[k].matrix))
    }

    /// Reduced image in `Γ_0` of a word of `Γ_n`.
    pub fn level0_word(&self, n: usize, w: &[crate::system::Letter]) -> Word {
        let anc = &self.ancestors[n];
        reduce(&w.iter().map(|l| crate::system::Letter { id: anc[l.id], inv: l.inv }).collect::<Vec<_>>())
    }

    /// Level-0 image words of the generalized edges of `Γ_n`.
    pub fn level0_images(&self, n: usize) -> Vec<Word> {
        self.ges[n].iter().map(|g| self.level0_word(n, &g.path)).collect()
    }

    /// Position in the forest of `S_n` of a point of `S_{n+1}`.
    pub fn embed(&self, n: usize, p: &Point) -> Point {
        let next = self.systems[n + 1].forest();
        next.embed_point(self.systems[n].forest(), &self.steps[n].embeddings[p.comp], p)
    }

    pub fn branch_point_counts(&self) -> Vec<usize> {
        self.systems.iter().map(|s| s.graph().branch_points().len()).collect()
    }
}

/// The next move under `policy`, or `None` when Rips is a no-op and no
/// splitting partition exists.
pub fn next_move(s: &SystemOfIsometries, policy: Policy) -> Result<Option<Move>, InductionError> {
    match policy {
        Policy::RipsFirst => {
            let r = rips_step(s)?;
            if !r.is_noop() {
                return Ok(Some(r));
            }
            match find_splitting_partitions(s).first() {
                Some(p) => split_step(s, p).map(Some),
                None => Ok(None),
            }
        }
    }
}

pub fn unfold(s0: &SystemOfIsometries, opts: &UnfoldOptions) -> Result<Trace, InductionError> {
    if let Some(depth) = opts.reduced_depth {
        let rep = s0.check_reduced(depth)?;
        if !rep.passes() {
            return Err(InductionError::NotReduced(format!("{rep:?}")));
        }
    }
    let mut trace = Trace::start(s0.clone())?;
    while trace.len() < opts.budget {
        match next_move(trace.last(), opts.policy)? {
            Some(mv) => trace.push(mv)?,
            None => {
                trace.stop = StopReason::NoSplittingPartition { surface_type: trace.last().is_surface_type().surface_type };
                break;
            }
        }
    }
    Ok(trace)
}

/// A maximal chain of components `v_n` with `τ_n(v_{n+1}) = v_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexChain {
    pub vertices: Vec<usize>,
    pub diameters: Vec<Scalar>,
}

/// One chain per component of the last system, traced back to step 0.
pub fn nested_vertex_diameters(trace: &Trace) -> Vec<VertexChain> {
    let last = trace.systems.len() - 1;
    (0..trace.last().forest().component_count())
        .map(|v| {
            let mut vertices = vec![v];
            for n in (0..last).rev() {
                let cur = *vertices.last().expect("nonempty");
                vertices.push(trace.steps[n].tau.vertex_map[cur]);
            }
            vertices.reverse();
            let diameters =
                vertices.iter().enumerate().map(|(n, &c)| trace.systems[n].forest().component_diameter(c)).collect();
            VertexChain { vertices, diameters }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreComponent {
    pub letters: Vec<usize>,
    pub vertices: Vec<usize>,
    pub rank: i64,
    pub vertex_diameters: Vec<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreReport {
    pub window: usize,
    /// Index of the system the subgraph lives in.
    pub step: usize,
    pub components: Vec<CoreComponent>,
}

impl CoreReport {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Whether step `n` maps component `c` of `S_{n+1}` onto a whole component of
/// `S_n` that has no other preimage.
fn component_fixed(trace: &Trace, n: usize, c: usize) -> bool {
    let step = &trace.steps[n];
    let old = trace.systems[n].forest();
    let target = step.tau.vertex_map[c];
    if step.tau.vertex_map.iter().filter(|&&v| v == target).count() != 1 {
        return false;
    }
    let emb = &step.embeddings[c];
    emb.comp == target && old.hull(&emb.vertex_images) == old.component_subtree(target)
}

/// Whether step `n` restricts to the identity on letter `f` of `S_{n+1}`.
fn letter_fixed(trace: &Trace, n: usize, f: usize) -> bool {
    let step = &trace.steps[n];
    let e = step.tau.edge_map[f];
    if step.tau.edge_map.iter().filter(|&&x| x == e).count() != 1 {
        return false;
    }
    let new = &trace.systems[n + 1];
    let m = &new.letters()[f].map;
    if !component_fixed(trace, n, m.domain().comp()) || !component_fixed(trace, n, m.image().comp()) {
        return false;
    }
    let mut embedded: Vec<(Point, Point)> =
        m.anchors().iter().map(|(p, q)| (trace.embed(n, p), trace.embed(n, q))).collect();
    embedded.sort();
    let mut old: Vec<(Point, Point)> = trace.systems[n].letters()[e].map.anchors().to_vec();
    old.sort();
    embedded == old
}

/// Largest subgraph of the last graph on which the last `window` steps act as
/// the identity, with valence-one vertices pruned.
pub fn detect_core_subgraph(trace: &Trace, window: usize) -> Result<CoreReport, InductionError> {
    if window < 2 || window > trace.len() {
        return Err(InductionError::Precondition(format!(
            "window {window} must lie in [2, {}]",
            trace.len()
        )));
    }
    let last = trace.len();
    let s = trace.last();
    let graph = s.graph();
    let mut alive: Vec<bool> = (0..s.letter_count())
        .map(|f| {
            let mut cur = f;
            for n in (last - window..last).rev() {
                if !letter_fixed(trace, n, cur) {
                    return false;
                }
                cur = trace.steps[n].tau.edge_map[cur];
            }
            true
        })
        .collect();
    loop {
        let mut valence = vec![0usize; graph.vertex_count];
        for e in graph.edges.iter().filter(|e| alive[e.letter]) {
            valence[e.from] += 1;
            valence[e.to] += 1;
        }
        let mut changed = false;
        for e in &graph.edges {
            if alive[e.letter] && (valence[e.from] == 1 || valence[e.to] == 1) {
                alive[e.letter] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut comp_of: Vec<Option<usize>> = vec![None; graph.vertex_count];
    let mut components: Vec<CoreComponent> = Vec::new();
    for start in graph.edges.iter().filter(|e| alive[e.letter]) {
        if comp_of[start.from].is_some() {
            continue;
        }
        let idx = components.len();
        let mut stack = vec![start.from];
        comp_of[start.from] = Some(idx);
        let mut vertices = Vec::new();
        while let Some(v) = stack.pop() {
            vertices.push(v);
            for e in graph.edges.iter().filter(|e| alive[e.letter]) {
                for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                    if a == v && comp_of[b].is_none() {
                        comp_of[b] = Some(idx);
                        stack.push(b);
                    }
                }
            }
        }
        vertices.sort();
        let letters: Vec<usize> =
            graph.edges.iter().filter(|e| alive[e.letter] && comp_of[e.from] == Some(idx)).map(|e| e.letter).collect();
        let rank = letters.len() as i64 - vertices.len() as i64 + 1;
        let vertex_diameters = vertices.iter().map(|&v| s.forest().component_diameter(v)).collect();
        components.push(CoreComponent { letters, vertices, rank, vertex_diameters });
    }
    Ok(CoreReport { window, step: last, components })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartitionReport {
    pub words_checked: usize,
    pub lifts_checked: usize,
    pub failures: Vec<String>,
}

impl PartitionReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks that the lifts through step `n` of each admissible word of `S_n` of
/// length at most `depth` tile its domain. Split steps use regular words on
/// both sides; Rips steps compare against the set of points whose orbit under
/// every prefix stays in the doubly covered part.
pub fn check_cylinder_partition(trace: &Trace, n: usize, depth: usize) -> PartitionReport {
    let s = &trace.systems[n];
    let next = &trace.systems[n + 1];
    let step = &trace.steps[n];
    let f = s.forest();
    let rips = step.kind == StepKind::Rips;
    let kept: Vec<Subtree> = if rips {
        (0..f.component_count()).flat_map(|c| doubly_covered(s, c)).collect()
    } else {
        Vec::new()
    };
    let in_kept = |p: &Point| kept.iter().any(|k| f.subtree_contains(k, p));

    let below = s.admissible_words_upto(depth);
    let above = next.admissible_words_upto(depth);
    let mut rep = PartitionReport::default();
    for (len_idx, words) in below.iter().enumerate() {
        for w in words {
            if !rips && w.domain().is_point() {
                continue;
            }
            rep.words_checked += 1;
            let lifts: Vec<Subtree> = above[len_idx]
                .iter()
                .filter(|w2| w2.word.iter().zip(&w.word).all(|(a, b)| step.tau.edge_map[a.id] == b.id && a.inv == b.inv))
                .filter(|w2| rips || !w2.domain().is_point())
                .map(|w2| {
                    let pts: Vec<Point> = w2.domain().extremal().iter().map(|p| trace.embed(n, p)).collect();
                    f.hull(&pts)
                })
                .collect();
            rep.lifts_checked += lifts.len();
            let label = s.format_word(&w.word);
            for i in 0..lifts.len() {
                for j in i + 1..lifts.len() {
                    if let Some(k) = f.intersect(&lifts[i], &lifts[j]) {
                        if rips || !k.is_point() {
                            rep.failures.push(format!("step {n}: lifts of {label} overlap"));
                        }
                    }
                }
            }
            let mut keys: Vec<Point> = w.domain().extremal().to_vec();
            keys.extend(lifts.iter().flat_map(|l| l.extremal().iter().cloned()));
            let prefixes: Vec<_> = (1..=w.word.len())
                .map(|k| s.word_map(&w.word[..k]).ok().flatten().expect("prefix of admissible word"))
                .collect();
            if rips {
                for pm in &prefixes {
                    let back = pm.inverse();
                    for k in kept.iter().filter(|k| k.comp() == pm.image().comp()) {
                        keys.extend(k.extremal().iter().filter_map(|q| back.apply(f, q)));
                    }
                }
            }
            let expected = |p: &Point| {
                f.subtree_contains(w.domain(), p)
                    && (!rips
                        || (in_kept(p) && prefixes.iter().all(|pm| pm.apply(f, p).is_some_and(|q| in_kept(&q)))))
            };
            let comp = w.domain().comp();
            let refinement = f.refine(comp, &keys);
            let cells_ok = refinement.cells.iter().all(|cell| {
                let hits = lifts.iter().filter(|l| f.subtree_contains(l, &cell.mid)).count();
                hits == usize::from(expected(&cell.mid))
            });
            let keys_ok =
                refinement.keys.iter().all(|p| lifts.iter().any(|l| f.subtree_contains(l, p)) == expected(p));
            if !cells_ok || !keys_ok {
                rep.failures.push(format!("step {n}: lifts of {label} do not tile its domain"));
            }
        }
    }
    rep
}
