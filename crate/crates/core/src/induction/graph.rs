//! Generalized edges of a system graph and incidence counts under a graph map.

use crate::system::{reduce, Letter, SystemGraph, Word};

use super::InductionError;

/// A maximal path whose interior vertices all have valence two. The path is
/// oriented so that its smallest edge (the representative) is traversed
/// forward; cyclic paths start at that edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizedEdge {
    pub path: Word,
    pub representative: usize,
    pub cyclic: bool,
}

impl GeneralizedEdge {
    pub fn contains(&self, edge: usize) -> bool {
        self.path.iter().any(|l| l.id == edge)
    }
}

/// Simplicial map between system graphs, new → old; edges map forward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMap {
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
}

impl GraphMap {
    pub fn identity(vertices: usize, edges: usize) -> Self {
        GraphMap { vertex_map: (0..vertices).collect(), edge_map: (0..edges).collect() }
    }

    pub fn map_word(&self, w: &[Letter]) -> Word {
        reduce(&w.iter().map(|l| Letter { id: self.edge_map[l.id], inv: l.inv }).collect::<Vec<_>>())
    }

    pub fn is_identity(&self) -> bool {
        self.vertex_map.iter().enumerate().all(|(i, &v)| i == v) && self.edge_map.iter().enumerate().all(|(i, &e)| i == e)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum End {
    Tail,
    Head,
}

pub fn generalized_edges(g: &SystemGraph) -> Result<Vec<GeneralizedEdge>, InductionError> {
    let mut ends: Vec<Vec<(usize, End)>> = vec![Vec::new(); g.vertex_count];
    for e in &g.edges {
        ends[e.from].push((e.letter, End::Tail));
        ends[e.to].push((e.letter, End::Head));
    }
    if let Some(v) = (0..g.vertex_count).find(|&v| ends[v].len() == 1) {
        return Err(InductionError::ValenceOne(v));
    }
    let by_id = |id: usize| g.edges.iter().find(|e| e.letter == id).expect("edge present");
    let other_end = |v: usize, came: (usize, End)| -> Option<(usize, End)> {
        if ends[v].len() != 2 {
            return None;
        }
        let i = ends[v].iter().position(|&x| x == came).expect("arrival end at vertex");
        Some(ends[v][1 - i])
    };

    let mut ids: Vec<usize> = g.edges.iter().map(|e| e.letter).collect();
    ids.sort();
    let mut used = vec![false; ids.last().map_or(0, |m| m + 1)];
    let mut out = Vec::new();
    for &start in &ids {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut path: Vec<Letter> = vec![Letter::pos(start)];
        let mut cyclic = false;
        // Forward from the head of `start`.
        let mut v = by_id(start).to;
        let mut came = (start, End::Head);
        while let Some((f, end)) = other_end(v, came) {
            if f == start {
                cyclic = true;
                break;
            }
            used[f] = true;
            let e = by_id(f);
            if end == End::Tail {
                path.push(Letter::pos(f));
                v = e.to;
                came = (f, End::Head);
            } else {
                path.push(Letter::neg(f));
                v = e.from;
                came = (f, End::Tail);
            }
        }
        if !cyclic {
            // Backward from the tail of `start`.
            let mut v = by_id(start).from;
            let mut came = (start, End::Tail);
            while let Some((f, end)) = other_end(v, came) {
                used[f] = true;
                let e = by_id(f);
                if end == End::Head {
                    path.insert(0, Letter::pos(f));
                    v = e.from;
                    came = (f, End::Tail);
                } else {
                    path.insert(0, Letter::neg(f));
                    v = e.to;
                    came = (f, End::Head);
                }
            }
        }
        out.push(GeneralizedEdge { path, representative: start, cyclic });
    }
    Ok(out)
}

/// Occurrences of edge `e` in `w`, ignoring orientation.
pub fn edge_occurrences(w: &[Letter], e: usize) -> u64 {
    w.iter().filter(|l| l.id == e).count() as u64
}

/// `M(ê, ê′)`: occurrences of the representative of `ê` in the reduced
/// image of `ê′`.
pub fn incidence(before: &[GeneralizedEdge], after: &[GeneralizedEdge], tau: &GraphMap) -> Vec<Vec<u64>> {
    let images: Vec<Word> = after.iter().map(|g| tau.map_word(&g.path)).collect();
    before
        .iter()
        .map(|ge| images.iter().map(|img| edge_occurrences(img, ge.representative)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::GraphEdge;

    fn graph(v: usize, edges: &[(usize, usize)]) -> SystemGraph {
        SystemGraph {
            vertex_count: v,
            edges: edges.iter().enumerate().map(|(i, &(from, to))| GraphEdge { letter: i, from, to }).collect(),
        }
    }

    #[test]
    fn rose() {
        let ges = generalized_edges(&graph(1, &[(0, 0), (0, 0), (0, 0)])).unwrap();
        assert_eq!(ges.len(), 3);
        assert!(ges.iter().all(|g| g.path.len() == 1));
    }

    #[test]
    fn theta() {
        let ges = generalized_edges(&graph(2, &[(0, 1), (0, 1), (1, 0)])).unwrap();
        assert_eq!(ges.len(), 3);
    }

    #[test]
    fn subdivided_circle_with_loop() {
        // Circle 0 -> 1 -> 2 -> 0 plus a loop at 0.
        let ges = generalized_edges(&graph(3, &[(0, 1), (1, 2), (2, 0), (0, 0)])).unwrap();
        assert_eq!(ges.len(), 2);
        assert_eq!(ges[0].path, vec![Letter::pos(0), Letter::pos(1), Letter::pos(2)]);
        assert!(!ges[0].cyclic);
        assert_eq!(ges[1].path, vec![Letter::pos(3)]);
    }

    #[test]
    fn orientation_follows_representative() {
        // 1 --e0--> 0 <--e1-- 2 with loops at 1 and 2; vertex 0 has valence 2.
        let ges = generalized_edges(&graph(3, &[(1, 0), (2, 0), (1, 1), (2, 2)])).unwrap();
        assert_eq!(ges[0].path, vec![Letter::pos(0), Letter::neg(1)]);
        assert_eq!(ges[0].representative, 0);
    }

    #[test]
    fn pure_cycle() {
        let ges = generalized_edges(&graph(2, &[(0, 1), (0, 1)])).unwrap();
        assert_eq!(ges.len(), 1);
        assert!(ges[0].cyclic);
        assert_eq!(ges[0].path, vec![Letter::pos(0), Letter::neg(1)]);
    }

    #[test]
    fn valence_one_rejected() {
        assert_eq!(generalized_edges(&graph(2, &[(0, 0), (0, 1)])), Err(InductionError::ValenceOne(1)));
    }

    #[test]
    fn identity_incidence() {
        let g = graph(1, &[(0, 0), (0, 0)]);
        let ges = generalized_edges(&g).unwrap();
        let m = incidence(&ges, &ges, &GraphMap::identity(1, 2));
        assert_eq!(m, vec![vec![1, 0], vec![0, 1]]);
    }
}
