//! Compact forests made of finite simplicial metric trees.
//!
//! Points are kept in a canonical form (vertex form whenever the offset
//! hits an endpoint) so that point equality is structural equality.
//! Subtrees are convex hulls, stored by their sorted extremal points.

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    #[error("points lie in different components ({0} and {1})")]
    DifferentComponents(usize, usize),
    #[error("unknown component {0}")]
    UnknownComponent(usize),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("empty point set")]
    EmptyPointSet,
    #[error("point is extremal in its component")]
    ExtremalPoint,
    #[error("not a partition of the directions: {0}")]
    InvalidPartition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub length: Scalar,
}

/// Position inside one tree. `Edge(e, t)` always has `0 < t < length(e)`,
/// measured from the tail of `e`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pos {
    Vertex(usize),
    Edge(usize, Scalar),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub comp: usize,
    pub pos: Pos,
}

impl Point {
    pub fn vertex(comp: usize, v: usize) -> Self {
        Point { comp, pos: Pos::Vertex(v) }
    }
}

/// Germ of a direction at a point: an incident edge at a vertex, or one of
/// the two sides at an edge-interior point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Germ {
    Edge(usize),
    TowardTail,
    TowardHead,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    pub base: Point,
    pub germ: Germ,
}

/// A finite metric tree with cached vertex distances and routing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    vertices: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    vdist: Vec<Vec<Scalar>>,
    /// `hop[u][v]`: first edge on the path from `u` to `v`.
    hop: Vec<Vec<usize>>,
}

impl Tree {
    pub fn point_tree() -> Self {
        Tree::new(1, Vec::new()).expect("single vertex")
    }

    pub fn segment(length: Scalar) -> Result<Self, ForestError> {
        Tree::new(2, vec![Edge { tail: 0, head: 1, length }])
    }

    pub fn new(vertices: usize, edges: Vec<Edge>) -> Result<Self, ForestError> {
        if vertices == 0 {
            return Err(ForestError::InvalidTree("no vertices".into()));
        }
        if edges.len() + 1 != vertices {
            return Err(ForestError::InvalidTree(format!(
                "{} vertices need {} edges, got {}",
                vertices,
                vertices - 1,
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); vertices];
        for (i, e) in edges.iter().enumerate() {
            if e.tail >= vertices || e.head >= vertices || e.tail == e.head {
                return Err(ForestError::InvalidTree(format!("bad endpoints on edge {i}")));
            }
            if !e.length.is_positive() {
                return Err(ForestError::InvalidTree(format!("edge {i} has non-positive length")));
            }
            adj[e.tail].push(i);
            adj[e.head].push(i);
        }
        let mut vdist = vec![vec![Scalar::zero(); vertices]; vertices];
        let mut hop = vec![vec![usize::MAX; vertices]; vertices];
        for s in 0..vertices {
            let mut seen = vec![false; vertices];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &ei in &adj[u] {
                    let e = &edges[ei];
                    let w = if e.tail == u { e.head } else { e.tail };
                    if !seen[w] {
                        seen[w] = true;
                        vdist[s][w] = &vdist[s][u] + &e.length;
                        hop[s][w] = if u == s { ei } else { hop[s][u] };
                        queue.push_back(w);
                    }
                }
            }
            if seen.iter().any(|x| !x) {
                return Err(ForestError::InvalidTree("not connected".into()));
            }
        }
        Ok(Tree { vertices, edges, adj, vdist, hop })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn valence(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn total_length(&self) -> Scalar {
        self.edges.iter().fold(Scalar::zero(), |acc, e| acc + &e.length)
    }

    fn other_end(&self, e: usize, v: usize) -> usize {
        let edge = &self.edges[e];
        if edge.tail == v {
            edge.head
        } else {
            edge.tail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ArcPiece {
    edge: usize,
    forward: bool,
    /// Offsets along `edge` covered by the piece.
    lo: Scalar,
    hi: Scalar,
    /// Arc parameter is `base + offset` going forward, `base − offset` otherwise.
    base: Scalar,
    /// Arc parameter where the piece ends.
    end: Scalar,
}

/// A geodesic arc with its edge pieces precomputed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    comp: usize,
    start: Point,
    length: Scalar,
    vertices: Vec<(usize, Scalar)>,
    pieces: Vec<ArcPiece>,
}

impl Arc {
    pub fn length(&self) -> &Scalar {
        &self.length
    }

    /// Distance from the start when `x` lies on the arc.
    pub fn locate(&self, x: &Point) -> Option<Scalar> {
        if x.comp != self.comp {
            return None;
        }
        match &x.pos {
            Pos::Vertex(v) => self.vertices.iter().find(|(u, _)| u == v).map(|(_, s)| s.clone()),
            Pos::Edge(e, t) => {
                if self.pieces.is_empty() {
                    return (*x == self.start).then(Scalar::zero);
                }
                let piece = self.pieces.iter().find(|pc| pc.edge == *e)?;
                if *t < piece.lo || *t > piece.hi {
                    return None;
                }
                Some(if piece.forward { &piece.base + t } else { &piece.base - t })
            }
        }
    }

    /// The point at distance `s` from the start, `0 ≤ s ≤ length`.
    pub fn point_at(&self, forest: &MetricForest, s: &Scalar) -> Point {
        if s.is_zero() {
            return self.start.clone();
        }
        let piece = self.pieces.iter().find(|pc| *s <= pc.end).expect("parameter within the arc");
        let off = if piece.forward { s - &piece.base } else { &piece.base - s };
        forest.canonical(self.comp, Pos::Edge(piece.edge, off))
    }
}

/// Disjoint union of metric trees indexed by component id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricForest {
    trees: Vec<Tree>,
}

/// A subtree given by its extremal points (sorted, minimal).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subtree {
    comp: usize,
    ext: Vec<Point>,
}

impl Subtree {
    pub fn point(p: Point) -> Self {
        Subtree { comp: p.comp, ext: vec![p] }
    }

    pub fn comp(&self) -> usize {
        self.comp
    }

    pub fn extremal(&self) -> &[Point] {
        &self.ext
    }

    pub fn is_point(&self) -> bool {
        self.ext.len() == 1
    }
}

/// Result of intersecting two subtrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Intersection {
    NonEmpty(Subtree),
    Disjoint,
    DifferentComponents,
}

impl Intersection {
    pub fn into_option(self) -> Option<Subtree> {
        match self {
            Intersection::NonEmpty(k) => Some(k),
            _ => None,
        }
    }
}

/// Isometric embedding of a freshly built tree into a component of an
/// older forest, given by the images of its vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub comp: usize,
    pub vertex_images: Vec<Point>,
}

/// Open arc between two adjacent key points of a [`Refinement`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub ends: (usize, usize),
    pub mid: Point,
}

/// A component cut at finitely many points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    pub keys: Vec<Point>,
    pub cells: Vec<Cell>,
}

/// Which copy of the split point a mapped point should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

/// Outcome of cutting one component at an interior point.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub forest: MetricForest,
    pub x: Point,
    pub x_left: Point,
    pub x_right: Point,
    pub left: Vec<Direction>,
    pub right: Vec<Direction>,
    /// Component index of the right piece (the left piece keeps the old index).
    pub right_comp: usize,
    pub left_embedding: Embedding,
    pub right_embedding: Embedding,
}

impl SplitOutcome {
    /// Image of an old point. Points of the cut component are sent to the
    /// piece holding them; `x` itself goes to the copy on `side`.
    pub fn map_point(&self, old: &MetricForest, p: &Point, side: Side) -> Point {
        if p.comp != self.x.comp {
            return p.clone();
        }
        if *p == self.x {
            return match side {
                Side::Left => self.x_left.clone(),
                Side::Right => self.x_right.clone(),
            };
        }
        match self.side_of(old, p) {
            Side::Left => locate(old, &self.forest, &self.left_embedding, self.x.comp, p),
            Side::Right => locate(old, &self.forest, &self.right_embedding, self.right_comp, p),
        }
    }

    /// Side of a point `p != x` of the cut component.
    pub fn side_of(&self, old: &MetricForest, p: &Point) -> Side {
        let dir = old.direction_of(&self.x, p).expect("p differs from x");
        if self.left.contains(&dir) {
            Side::Left
        } else {
            Side::Right
        }
    }
}

/// Position of the old point `p` inside the new component `new_comp` whose
/// tree embeds into `old` via `emb`.
pub fn locate(old: &MetricForest, new: &MetricForest, emb: &Embedding, new_comp: usize, p: &Point) -> Point {
    if let Some(i) = emb.vertex_images.iter().position(|q| q == p) {
        return Point::vertex(new_comp, i);
    }
    let tree = new.tree(new_comp);
    for (ei, e) in tree.edges.iter().enumerate() {
        let a = &emb.vertex_images[e.tail];
        let b = &emb.vertex_images[e.head];
        if old.on_arc(a, b, p) {
            let t = old.dist(a, p);
            return new.canonical(new_comp, Pos::Edge(ei, t));
        }
    }
    panic!("point {p:?} is not inside the embedded tree");
}

impl MetricForest {
    pub fn new(trees: Vec<Tree>) -> Self {
        MetricForest { trees }
    }

    pub fn component_count(&self) -> usize {
        self.trees.len()
    }

    pub fn tree(&self, c: usize) -> &Tree {
        &self.trees[c]
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn total_length(&self) -> Scalar {
        self.trees.iter().fold(Scalar::zero(), |acc, t| acc + t.total_length())
    }

    /// Canonical form: endpoint offsets collapse to vertices.
    pub fn canonical(&self, comp: usize, pos: Pos) -> Point {
        match pos {
            Pos::Vertex(v) => Point::vertex(comp, v),
            Pos::Edge(e, t) => {
                let edge = &self.trees[comp].edges[e];
                if t.is_zero() {
                    Point::vertex(comp, edge.tail)
                } else if t == edge.length {
                    Point::vertex(comp, edge.head)
                } else {
                    Point { comp, pos: Pos::Edge(e, t) }
                }
            }
        }
    }

    /// Builds a validated point from raw data.
    pub fn make_point(&self, comp: usize, pos: Pos) -> Result<Point, ForestError> {
        let tree = self.trees.get(comp).ok_or(ForestError::UnknownComponent(comp))?;
        match &pos {
            Pos::Vertex(v) if *v < tree.vertices => Ok(Point::vertex(comp, *v)),
            Pos::Vertex(v) => Err(ForestError::InvalidPoint(format!("vertex {v} out of range"))),
            Pos::Edge(e, t) => {
                let edge = tree
                    .edges
                    .get(*e)
                    .ok_or_else(|| ForestError::InvalidPoint(format!("edge {e} out of range")))?;
                if t.is_negative() || *t > edge.length {
                    return Err(ForestError::InvalidPoint(format!("offset {t} outside edge {e}")));
                }
                Ok(self.canonical(comp, pos))
            }
        }
    }

    /// Vertex anchors of a point with the distance to each.
    fn anchors(&self, p: &Point) -> Vec<(usize, Scalar)> {
        match &p.pos {
            Pos::Vertex(v) => vec![(*v, Scalar::zero())],
            Pos::Edge(e, t) => {
                let edge = &self.trees[p.comp].edges[*e];
                vec![(edge.tail, t.clone()), (edge.head, &edge.length - t)]
            }
        }
    }

    pub fn distance(&self, p: &Point, q: &Point) -> Result<Scalar, ForestError> {
        if p.comp != q.comp {
            return Err(ForestError::DifferentComponents(p.comp, q.comp));
        }
        Ok(self.dist(p, q))
    }

    /// Distance within one component (panics across components).
    pub fn dist(&self, p: &Point, q: &Point) -> Scalar {
        assert_eq!(p.comp, q.comp, "distance across components");
        if let (Pos::Edge(e, t), Pos::Edge(f, s)) = (&p.pos, &q.pos) {
            if e == f {
                return (t - s).abs();
            }
        }
        self.route(p, q).0
    }

    /// Shortest route between the vertex anchors of `p` and `q`.
    fn route(&self, p: &Point, q: &Point) -> (Scalar, usize, usize) {
        let tree = &self.trees[p.comp];
        let mut best: Option<(Scalar, usize, usize)> = None;
        for (a, da) in self.anchors(p) {
            for (b, db) in self.anchors(q) {
                let d = &da + &tree.vdist[a][b] + &db;
                if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
                    best = Some((d, a, b));
                }
            }
        }
        best.expect("anchors are nonempty")
    }

    /// Gromov product `(q|r)_p`.
    pub fn gromov(&self, p: &Point, q: &Point, r: &Point) -> Scalar {
        (self.dist(p, q) + self.dist(p, r) - self.dist(q, r)).half()
    }

    /// Whether `r` lies on the arc `[p, q]`.
    pub fn on_arc(&self, p: &Point, q: &Point, r: &Point) -> bool {
        p.comp == r.comp && p.comp == q.comp && self.dist(p, r) + self.dist(r, q) == self.dist(p, q)
    }

    /// Offset of a point along edge `e`, if it lies on the closed edge.
    fn offset_on_edge(&self, p: &Point, e: usize) -> Option<Scalar> {
        let edge = &self.trees[p.comp].edges[e];
        match &p.pos {
            Pos::Vertex(v) if *v == edge.tail => Some(Scalar::zero()),
            Pos::Vertex(v) if *v == edge.head => Some(edge.length.clone()),
            Pos::Edge(f, t) if *f == e => Some(t.clone()),
            _ => None,
        }
    }

    /// Waypoints of the arc `[p, q]`: consecutive entries share a closed edge.
    fn waypoints(&self, p: &Point, q: &Point) -> Vec<Point> {
        if let (Pos::Edge(e, _), Pos::Edge(f, _)) = (&p.pos, &q.pos) {
            if e == f {
                return vec![p.clone(), q.clone()];
            }
        }
        let tree = &self.trees[p.comp];
        let (_, a, b) = self.route(p, q);
        let mut out = vec![p.clone()];
        let va = Point::vertex(p.comp, a);
        if va != *p {
            out.push(va);
        }
        let mut u = a;
        while u != b {
            u = tree.other_end(tree.hop[u][b], u);
            out.push(Point::vertex(p.comp, u));
        }
        if out.last() != Some(q) {
            out.push(q.clone());
        }
        out
    }

    fn common_edge(&self, a: &Point, b: &Point) -> usize {
        let tree = &self.trees[a.comp];
        match (&a.pos, &b.pos) {
            (Pos::Edge(e, _), _) | (_, Pos::Edge(e, _)) => *e,
            (Pos::Vertex(u), Pos::Vertex(v)) => tree.hop[*u][*v],
        }
    }

    /// The point of `[p, q]` at distance `t` from `p` (`0 <= t <= d(p,q)`).
    pub fn point_along(&self, p: &Point, q: &Point, t: &Scalar) -> Point {
        assert_eq!(p.comp, q.comp);
        if t.is_zero() {
            return p.clone();
        }
        let mut rest = t.clone();
        let wps = self.waypoints(p, q);
        for pair in wps.windows(2) {
            let seg = self.dist(&pair[0], &pair[1]);
            if rest <= seg {
                if rest == seg {
                    return pair[1].clone();
                }
                let e = self.common_edge(&pair[0], &pair[1]);
                let o1 = self.offset_on_edge(&pair[0], e).expect("waypoint on edge");
                let o2 = self.offset_on_edge(&pair[1], e).expect("waypoint on edge");
                let off = if o2 > o1 { o1 + &rest } else { o1 - &rest };
                return self.canonical(p.comp, Pos::Edge(e, off));
            }
            rest = rest - seg;
        }
        panic!("point_along: distance exceeds arc length");
    }

    /// Unpacks `[p, q]` for repeated [`Arc::locate`] and [`Arc::point_at`].
    pub fn arc(&self, p: &Point, q: &Point) -> Arc {
        assert_eq!(p.comp, q.comp);
        let mut arc = Arc { comp: p.comp, start: p.clone(), length: Scalar::zero(), vertices: Vec::new(), pieces: Vec::new() };
        let wps = self.waypoints(p, q);
        let mut cum = Scalar::zero();
        for (i, w) in wps.iter().enumerate() {
            if let Pos::Vertex(v) = w.pos {
                arc.vertices.push((v, cum.clone()));
            }
            let Some(next) = wps.get(i + 1) else { break };
            if next == w {
                continue;
            }
            let e = self.common_edge(w, next);
            let o1 = self.offset_on_edge(w, e).expect("waypoint on edge");
            let o2 = self.offset_on_edge(next, e).expect("waypoint on edge");
            let forward = o2 > o1;
            let seg = if forward { &o2 - &o1 } else { &o1 - &o2 };
            let end = &cum + &seg;
            let base = if forward { &cum - &o1 } else { &cum + &o1 };
            let (lo, hi) = if forward { (o1, o2) } else { (o2, o1) };
            arc.pieces.push(ArcPiece { edge: e, forward, lo, hi, base, end: end.clone() });
            cum = end;
        }
        arc.length = cum;
        arc
    }

    pub fn subtree_contains(&self, k: &Subtree, r: &Point) -> bool {
        if r.comp != k.comp {
            return false;
        }
        let e0 = &k.ext[0];
        if k.ext.len() == 1 {
            return e0 == r;
        }
        k.ext[1..].iter().any(|ej| self.on_arc(e0, ej, r))
    }

    /// `inner ⊆ outer`.
    pub fn subtree_within(&self, inner: &Subtree, outer: &Subtree) -> bool {
        inner.ext.iter().all(|p| self.subtree_contains(outer, p))
    }

    pub fn convex_hull(&self, pts: &[Point]) -> Result<Subtree, ForestError> {
        let first = pts.first().ok_or(ForestError::EmptyPointSet)?;
        if let Some(p) = pts.iter().find(|p| p.comp != first.comp) {
            return Err(ForestError::DifferentComponents(first.comp, p.comp));
        }
        let mut kept: Vec<Point> = pts.to_vec();
        kept.sort();
        kept.dedup();
        let mut i = 0;
        while i < kept.len() && kept.len() > 1 {
            let others: Vec<Point> = kept.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
            let hull = Subtree { comp: first.comp, ext: others };
            if self.subtree_contains(&hull, &kept[i]) {
                kept.remove(i);
            } else {
                i += 1;
            }
        }
        Ok(Subtree { comp: first.comp, ext: kept })
    }

    pub fn hull(&self, pts: &[Point]) -> Subtree {
        self.convex_hull(pts).expect("hull of points in one component")
    }

    /// Whole component as a subtree.
    pub fn component_subtree(&self, c: usize) -> Subtree {
        let tree = &self.trees[c];
        let pts: Vec<Point> = (0..tree.vertices)
            .filter(|&v| tree.valence(v) <= 1)
            .map(|v| Point::vertex(c, v))
            .collect();
        Subtree { comp: c, ext: pts }
    }

    /// Nearest point of `k` to `p` (same component).
    pub fn project(&self, k: &Subtree, p: &Point) -> Point {
        let e0 = &k.ext[0];
        let reach = k.ext[1..]
            .iter()
            .map(|ej| self.gromov(e0, p, ej))
            .fold(Scalar::zero(), Scalar::max);
        self.point_along(e0, p, &reach)
    }

    pub fn subtree_intersect(&self, a: &Subtree, b: &Subtree) -> Intersection {
        if a.comp != b.comp {
            return Intersection::DifferentComponents;
        }
        if !self.subtree_contains(a, &self.project(b, &a.ext[0])) {
            return Intersection::Disjoint;
        }
        let proj: Vec<Point> = a.ext.iter().map(|p| self.project(b, p)).collect();
        Intersection::NonEmpty(self.hull(&proj))
    }

    pub fn intersect(&self, a: &Subtree, b: &Subtree) -> Option<Subtree> {
        self.subtree_intersect(a, b).into_option()
    }

    pub fn diameter(&self, k: &Subtree) -> Scalar {
        let mut best = Scalar::zero();
        for (i, p) in k.ext.iter().enumerate() {
            for q in &k.ext[i + 1..] {
                best = best.max(self.dist(p, q));
            }
        }
        best
    }

    pub fn component_diameter(&self, c: usize) -> Scalar {
        self.diameter(&self.component_subtree(c))
    }

    fn probe(&self, p: &Point, germ: Germ) -> Point {
        let tree = &self.trees[p.comp];
        match (germ, &p.pos) {
            (Germ::Edge(e), Pos::Vertex(v)) => Point::vertex(p.comp, tree.other_end(e, *v)),
            (Germ::TowardTail, Pos::Edge(e, _)) => Point::vertex(p.comp, tree.edges[*e].tail),
            (Germ::TowardHead, Pos::Edge(e, _)) => Point::vertex(p.comp, tree.edges[*e].head),
            _ => panic!("germ does not match point"),
        }
    }

    pub fn directions_at(&self, p: &Point) -> Vec<Direction> {
        let germs: Vec<Germ> = match &p.pos {
            Pos::Vertex(v) => self.trees[p.comp].adj[*v].iter().map(|&e| Germ::Edge(e)).collect(),
            Pos::Edge(..) => vec![Germ::TowardTail, Germ::TowardHead],
        };
        let mut dirs: Vec<Direction> = germs.into_iter().map(|germ| Direction { base: p.clone(), germ }).collect();
        dirs.sort();
        dirs
    }

    /// Number of directions at `p`.
    pub fn valence_at(&self, p: &Point) -> usize {
        match &p.pos {
            Pos::Vertex(v) => self.trees[p.comp].valence(*v),
            Pos::Edge(..) => 2,
        }
    }

    /// Direction at `p` containing `q`; `None` when `q == p` or in another component.
    pub fn direction_of(&self, p: &Point, q: &Point) -> Option<Direction> {
        if p == q || p.comp != q.comp {
            return None;
        }
        self.directions_at(p)
            .into_iter()
            .find(|d| self.gromov(p, q, &self.probe(p, d.germ)).is_positive())
    }

    /// Directions at `p` met by the subtree `k` (assumed to contain `p`).
    pub fn directions_met(&self, p: &Point, k: &Subtree) -> Vec<Direction> {
        let mut out: Vec<Direction> = k.ext.iter().filter_map(|e| self.direction_of(p, e)).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Builds `k` as a standalone tree: vertices are the extremal and branch
    /// points of `k`, ordered by distance from vertex 0 of its component.
    pub fn extract(&self, k: &Subtree) -> (Tree, Embedding) {
        let c = k.comp;
        let tree = &self.trees[c];
        let mut keys: Vec<Point> = k.ext.clone();
        for v in 0..tree.vertices {
            let pv = Point::vertex(c, v);
            if !keys.contains(&pv) && self.subtree_contains(k, &pv) && self.directions_met(&pv, k).len() >= 3 {
                keys.push(pv);
            }
        }
        let root = Point::vertex(c, 0);
        keys.sort_by(|a, b| match self.dist(&root, a).cmp(&self.dist(&root, b)) {
            Ordering::Equal => a.cmp(b),
            o => o,
        });
        let mut edges = Vec::new();
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                let blocked = keys
                    .iter()
                    .enumerate()
                    .any(|(m, r)| m != i && m != j && self.on_arc(&keys[i], &keys[j], r));
                if !blocked {
                    edges.push(Edge { tail: i, head: j, length: self.dist(&keys[i], &keys[j]) });
                }
            }
        }
        let new_tree = Tree::new(keys.len(), edges).expect("extracted subtree is a tree");
        (new_tree, Embedding { comp: c, vertex_images: keys })
    }

    /// Cuts the component of `x` into the closures of the `left` and `right`
    /// direction sets, with distinct copies `x_left` and `x_right` of `x`.
    pub fn split_component(
        &self,
        x: &Point,
        left: &[Direction],
        right: &[Direction],
    ) -> Result<SplitOutcome, ForestError> {
        let all = self.directions_at(x);
        if all.len() < 2 {
            return Err(ForestError::ExtremalPoint);
        }
        let mut l: Vec<Direction> = left.to_vec();
        let mut r: Vec<Direction> = right.to_vec();
        l.sort();
        l.dedup();
        r.sort();
        r.dedup();
        if l.is_empty() || r.is_empty() {
            return Err(ForestError::InvalidPartition("both sides must be nonempty".into()));
        }
        if l.iter().any(|d| r.contains(d)) {
            return Err(ForestError::InvalidPartition("sides overlap".into()));
        }
        let mut joined: Vec<Direction> = l.iter().chain(r.iter()).cloned().collect();
        joined.sort();
        if joined != all {
            return Err(ForestError::InvalidPartition("sides do not cover the directions at x".into()));
        }
        let c = x.comp;
        let tree = &self.trees[c];
        let leaves: Vec<Point> = (0..tree.vertices)
            .filter(|&v| tree.valence(v) == 1)
            .map(|v| Point::vertex(c, v))
            .filter(|p| p != x)
            .collect();
        let side_hull = |dirs: &[Direction]| {
            let mut pts = vec![x.clone()];
            pts.extend(leaves.iter().filter(|p| dirs.contains(&self.direction_of(x, p).unwrap())).cloned());
            self.hull(&pts)
        };
        let (lt, le) = self.extract(&side_hull(&l));
        let (rt, re) = self.extract(&side_hull(&r));
        let mut trees = self.trees.clone();
        trees[c] = lt;
        trees.push(rt);
        let right_comp = trees.len() - 1;
        let forest = MetricForest::new(trees);
        let x_left = Point::vertex(c, le.vertex_images.iter().position(|p| p == x).unwrap());
        let x_right = Point::vertex(right_comp, re.vertex_images.iter().position(|p| p == x).unwrap());
        Ok(SplitOutcome {
            forest,
            x: x.clone(),
            x_left,
            x_right,
            left: l,
            right: r,
            right_comp,
            left_embedding: le,
            right_embedding: re,
        })
    }

    /// Maps a point of an embedded tree back into the older forest.
    pub fn embed_point(&self, old: &MetricForest, emb: &Embedding, p: &Point) -> Point {
        match &p.pos {
            Pos::Vertex(v) => emb.vertex_images[*v].clone(),
            Pos::Edge(e, t) => {
                let edge = &self.trees[p.comp].edges[*e];
                old.point_along(&emb.vertex_images[edge.tail], &emb.vertex_images[edge.head], t)
            }
        }
    }

    /// Cuts component `comp` at the given points and at all its vertices.
    /// Cells are the open arcs between adjacent key points.
    pub fn refine(&self, comp: usize, pts: &[Point]) -> Refinement {
        let tree = &self.trees[comp];
        let mut keys: Vec<Point> = (0..tree.vertices).map(|v| Point::vertex(comp, v)).collect();
        keys.extend(pts.iter().filter(|p| p.comp == comp).cloned());
        keys.sort();
        keys.dedup();
        let mut cells = Vec::new();
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                let blocked = keys
                    .iter()
                    .enumerate()
                    .any(|(m, r)| m != i && m != j && self.on_arc(&keys[i], &keys[j], r));
                if !blocked {
                    let mid = self.point_along(&keys[i], &keys[j], &self.dist(&keys[i], &keys[j]).half());
                    cells.push(Cell { ends: (i, j), mid });
                }
            }
        }
        Refinement { keys, cells }
    }

    /// Every key point and cell midpoint of a refinement, in one list.
    pub fn samples(&self, r: &Refinement) -> Vec<Point> {
        r.keys.iter().cloned().chain(r.cells.iter().map(|c| c.mid.clone())).collect()
    }

}
