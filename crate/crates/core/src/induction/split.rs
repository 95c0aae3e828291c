//! Splitting induction: cut a component at a point crossed by exactly one
//! partial isometry and split that isometry in two.

use crate::forest::{Direction, Embedding, Point, Side, SplitOutcome, Subtree};
use crate::system::{Isometry, Letter, PartialIsometry, SystemOfIsometries};

use super::{fresh_name, identity_embeddings, GraphMap, InductionError, Move, StepEvent, StepKind};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SplittingPartition {
    pub x: Point,
    pub a0: Letter,
    pub left: Vec<Direction>,
    pub right: Vec<Direction>,
}

/// Interior extremal points of domains plus branch points, per component.
fn candidates(s: &SystemOfIsometries) -> Vec<Point> {
    let f = s.forest();
    let mut out = Vec::new();
    for c in 0..f.component_count() {
        let tree = f.tree(c);
        out.extend(s.singular_points(c).into_iter().filter(|p| f.valence_at(p) >= 2));
        out.extend((0..tree.vertex_count()).filter(|&v| tree.valence(v) >= 3).map(|v| Point::vertex(c, v)));
    }
    out.sort();
    out.dedup();
    out
}

/// Letters defined at `x` with the directions their domains meet.
fn active(s: &SystemOfIsometries, x: &Point) -> Vec<(Letter, Vec<Direction>)> {
    let f = s.forest();
    s.oriented_letters()
        .filter(|&l| f.subtree_contains(s.iso(l).domain(), x))
        .map(|l| (l, f.directions_met(x, s.iso(l).domain())))
        .collect()
}

/// The unique crossing letter if `(x, left, right)` is a splitting partition.
fn crossing_letter(
    act: &[(Letter, Vec<Direction>)],
    left: &[Direction],
    right: &[Direction],
) -> Option<Letter> {
    let crossing: Vec<Letter> = act
        .iter()
        .filter(|(_, met)| met.iter().any(|d| left.contains(d)) && met.iter().any(|d| right.contains(d)))
        .map(|(l, _)| *l)
        .collect();
    let [a0] = crossing[..] else { return None };
    let covered = left
        .iter()
        .chain(right)
        .all(|d| act.iter().any(|(l, met)| *l != a0 && met.contains(d)));
    covered.then_some(a0)
}

/// All splitting partitions over the candidate points, sorted by
/// `(component, point, a0)`. The left side always holds the first direction.
pub fn find_splitting_partitions(s: &SystemOfIsometries) -> Vec<SplittingPartition> {
    let f = s.forest();
    let mut out = Vec::new();
    for x in candidates(s) {
        let dirs = f.directions_at(&x);
        let act = active(s, &x);
        let k = dirs.len();
        for mask in 1u64..(1u64 << k) {
            if mask & 1 == 0 || mask == (1u64 << k) - 1 {
                continue;
            }
            let (left, right): (Vec<_>, Vec<_>) =
                dirs.iter().enumerate().partition(|(i, _)| mask >> i & 1 == 1);
            let left: Vec<Direction> = left.into_iter().map(|(_, d)| d.clone()).collect();
            let right: Vec<Direction> = right.into_iter().map(|(_, d)| d.clone()).collect();
            if let Some(a0) = crossing_letter(&act, &left, &right) {
                out.push(SplittingPartition { x: x.clone(), a0, left, right });
            }
        }
    }
    out.sort();
    out
}

/// Side of the cut holding `k`; a subtree reduced to `{x}` goes left.
fn side_of(s: &SystemOfIsometries, cut: &SplitOutcome, k: &Subtree) -> Side {
    if k.comp() != cut.x.comp {
        return Side::Left;
    }
    k.extremal()
        .iter()
        .find(|p| **p != cut.x)
        .map_or(Side::Left, |p| cut.side_of(s.forest(), p))
}

fn relocate(s: &SystemOfIsometries, cut: &SplitOutcome, m: &PartialIsometry) -> PartialIsometry {
    let old = s.forest();
    let ds = side_of(s, cut, m.domain());
    let is = side_of(s, cut, m.image());
    let anchors: Vec<(Point, Point)> = m
        .anchors()
        .iter()
        .map(|(p, q)| (cut.map_point(old, p, ds), cut.map_point(old, q, is)))
        .collect();
    PartialIsometry::from_anchors(&cut.forest, &anchors).expect("relocation preserves distances")
}

pub fn split_step(s: &SystemOfIsometries, part: &SplittingPartition) -> Result<Move, InductionError> {
    let old = s.forest();
    let cut = old
        .split_component(&part.x, &part.left, &part.right)
        .map_err(|e| InductionError::InvalidPartition(e.to_string()))?;
    match crossing_letter(&active(s, &part.x), &cut.left, &cut.right) {
        Some(a0) if a0 == part.a0 => {}
        _ => return Err(InductionError::InvalidPartition("conditions fail at this point".into())),
    }
    let a0 = part.a0;
    let m0 = s.iso(a0);
    let piece = |dirs: &[Direction]| {
        let mut pts = vec![part.x.clone()];
        pts.extend(m0.domain().extremal().iter().filter(|p| {
            old.direction_of(&part.x, p).is_some_and(|d| dirs.contains(&d))
        }).cloned());
        m0.restrict(old, &old.hull(&pts))
    };
    let orient = |m: PartialIsometry| if a0.inv { m.inverse() } else { m };
    let left_piece = orient(relocate(s, &cut, &piece(&cut.left)));
    let right_piece = orient(relocate(s, &cut, &piece(&cut.right)));

    let mut letters: Vec<Isometry> = Vec::with_capacity(s.letter_count() + 1);
    for (id, l) in s.letters().iter().enumerate() {
        let map = if id == a0.id { left_piece.clone() } else { relocate(s, &cut, &l.map) };
        letters.push(Isometry { name: l.name.clone(), map });
    }
    let taken: Vec<String> = letters.iter().map(|l| l.name.clone()).collect();
    letters.push(Isometry { name: fresh_name(&s.letters()[a0.id].name, &taken), map: right_piece });

    let comps = old.component_count();
    let mut embeddings: Vec<Embedding> = identity_embeddings(old);
    embeddings[part.x.comp] = cut.left_embedding.clone();
    embeddings.push(cut.right_embedding.clone());
    let mut vertex_map: Vec<usize> = (0..comps).collect();
    vertex_map.push(part.x.comp);
    let mut edge_map: Vec<usize> = (0..s.letter_count()).collect();
    edge_map.push(a0.id);

    let next = SystemOfIsometries::new_unchecked(s.field(), cut.forest.clone(), letters)?;
    if !next.graph().is_connected() {
        return Err(InductionError::Disconnected);
    }
    Ok(Move {
        kind: StepKind::Split,
        next,
        tau: GraphMap { vertex_map, edge_map },
        embeddings,
        event: StepEvent::Split { x: part.x.clone(), left: cut.left.clone(), right: cut.right.clone(), a0 },
    })
}
