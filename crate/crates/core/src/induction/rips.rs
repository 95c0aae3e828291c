//! Rips induction: keep the doubly covered part and restrict the letters.

use crate::forest::{locate, MetricForest, Point, Subtree, Tree};
use crate::system::{Isometry, PartialIsometry, SystemOfIsometries};

use super::{fresh_name, identity_embeddings, GraphMap, InductionError, Move, StepEvent, StepKind};

/// Components of `F′` inside component `c`, sorted.
pub fn doubly_covered(s: &SystemOfIsometries, c: usize) -> Vec<Subtree> {
    let f = s.forest();
    let doms: Vec<&Subtree> = s
        .oriented_letters()
        .map(|l| s.iso(l).domain())
        .filter(|d| d.comp() == c)
        .collect();
    let mut pieces: Vec<Subtree> = Vec::new();
    for i in 0..doms.len() {
        for j in i + 1..doms.len() {
            if let Some(k) = f.intersect(doms[i], doms[j]) {
                pieces.push(k);
            }
        }
    }
    let mut parent: Vec<usize> = (0..pieces.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            if f.intersect(&pieces[i], &pieces[j]).is_some() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut clusters: Vec<(usize, Vec<Point>)> = Vec::new();
    for (i, piece) in pieces.iter().enumerate() {
        let r = find(&mut parent, i);
        match clusters.iter_mut().find(|(root, _)| *root == r) {
            Some((_, pts)) => pts.extend(piece.extremal().iter().cloned()),
            None => clusters.push((r, piece.extremal().to_vec())),
        }
    }
    let mut out: Vec<Subtree> = clusters.into_iter().map(|(_, pts)| f.hull(&pts)).collect();
    out.sort();
    out
}

pub fn rips_step(s: &SystemOfIsometries) -> Result<Move, InductionError> {
    let f = s.forest();
    let mut parts: Vec<Subtree> = Vec::new();
    for c in 0..f.component_count() {
        parts.extend(doubly_covered(s, c));
    }
    let unchanged_forest = parts.len() == f.component_count()
        && parts.iter().enumerate().all(|(c, k)| k.comp() == c && *k == f.component_subtree(c));

    let mut trees: Vec<Tree> = Vec::new();
    let mut embeddings = Vec::new();
    for k in &parts {
        let (t, e) = f.extract(k);
        trees.push(t);
        embeddings.push(e);
    }
    let nf = MetricForest::new(trees);

    let mut letters: Vec<Isometry> = Vec::new();
    let mut edge_map = Vec::new();
    let mut restriction_counts = vec![0usize; s.letter_count()];
    let mut identical = true;
    for (id, letter) in s.letters().iter().enumerate() {
        let a = &letter.map;
        for (i, ci) in parts.iter().enumerate() {
            let Some(k) = f.intersect(a.domain(), ci) else { continue };
            let img = a.map_subtree(f, &k);
            for (j, cj) in parts.iter().enumerate() {
                let Some(jk) = f.intersect(&img, cj) else { continue };
                let dom = a.inverse().map_subtree(f, &jk);
                let piece = a.restrict(f, &dom);
                identical &= piece == *a;
                let anchors: Vec<(Point, Point)> = piece
                    .anchors()
                    .iter()
                    .map(|(p, q)| (locate(f, &nf, &embeddings[i], i, p), locate(f, &nf, &embeddings[j], j, q)))
                    .collect();
                let map = PartialIsometry::from_anchors(&nf, &anchors).expect("restriction is an isometry");
                restriction_counts[id] += 1;
                let taken: Vec<String> = letters.iter().map(|l| l.name.clone()).collect();
                let name = if restriction_counts[id] == 1 && !taken.contains(&letter.name) {
                    letter.name.clone()
                } else {
                    fresh_name(&letter.name, &taken)
                };
                letters.push(Isometry { name, map });
                edge_map.push(id);
            }
        }
    }
    let noop = unchanged_forest && identical && restriction_counts.iter().all(|&n| n == 1);
    if noop {
        return Ok(Move {
            kind: StepKind::Rips,
            next: s.clone(),
            tau: GraphMap::identity(f.component_count(), s.letter_count()),
            embeddings: identity_embeddings(f),
            event: StepEvent::Rips { removed_length: crate::scalar::Scalar::zero(), noop: true },
        });
    }
    if letters.is_empty() {
        return Err(InductionError::Disconnected);
    }
    let removed_length = f.total_length() - nf.total_length();
    let next = SystemOfIsometries::new_unchecked(s.field(), nf, letters)?;
    if !next.graph().is_connected() {
        return Err(InductionError::Disconnected);
    }
    let vertex_map = parts.iter().map(|k| k.comp()).collect();
    Ok(Move {
        kind: StepKind::Rips,
        next,
        tau: GraphMap { vertex_map, edge_map },
        embeddings,
        event: StepEvent::Rips { removed_length, noop: false },
    })
}
