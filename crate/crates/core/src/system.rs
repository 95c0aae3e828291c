//! Systems of isometries, their graphs, words, and structural checks.
//!
//! Words act left to right: `w = w1 w2 … wk` first applies `w1`.

use std::fmt;

use thiserror::Error;

use crate::forest::{ForestError, MetricForest, Point, Subtree};
use crate::scalar::{FieldSpec, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("letter `{0}` is not an isometry: {1}")]
    NotIsometry(String, String),
    #[error("system has no partial isometries")]
    NoLetters,
    #[error("graph of the system is disconnected")]
    DisconnectedGraph,
    #[error("duplicate letter name `{0}`")]
    DuplicateLetter(String),
    #[error("point is outside the domain of {0}")]
    OutsideDomain(String),
    #[error("word is not reduced")]
    NonReducedWord,
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("{0}")]
    Precondition(String),
}

/// A generator (`inv = false`) or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub id: usize,
    pub inv: bool,
}

impl Letter {
    pub fn pos(id: usize) -> Self {
        Letter { id, inv: false }
    }

    pub fn neg(id: usize) -> Self {
        Letter { id, inv: true }
    }

    pub fn inverse(self) -> Self {
        Letter { id: self.id, inv: !self.inv }
    }

    fn slot(self) -> usize {
        2 * self.id + usize::from(self.inv)
    }
}

pub type Word = Vec<Letter>;

pub fn inverse_word(w: &[Letter]) -> Word {
    w.iter().rev().map(|l| l.inverse()).collect()
}

pub fn is_reduced(w: &[Letter]) -> bool {
    w.windows(2).all(|p| p[1] != p[0].inverse())
}

/// Free reduction of a word.
pub fn reduce(w: &[Letter]) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for &l in w {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// A bijective isometry between two subtrees, stored as the images of the
/// domain's extremal points (sorted by domain point).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialIsometry {
    domain: Subtree,
    image: Subtree,
    anchors: Vec<(Point, Point)>,
}

impl PartialIsometry {
    /// Validates pairwise distances and keeps only the anchors at extremal
    /// points of the domain.
    pub fn from_anchors(forest: &MetricForest, anchors: &[(Point, Point)]) -> Result<Self, String> {
        if anchors.is_empty() {
            return Err("no anchors".into());
        }
        for (i, (p, q)) in anchors.iter().enumerate() {
            for (p2, q2) in &anchors[i + 1..] {
                if p.comp != p2.comp || q.comp != q2.comp {
                    return Err("anchors span several components".into());
                }
                if forest.dist(p, p2) != forest.dist(q, q2) {
                    return Err("anchor distances are not preserved".into());
                }
            }
        }
        let src: Vec<Point> = anchors.iter().map(|(p, _)| p.clone()).collect();
        let domain = forest.hull(&src);
        let kept: Vec<(Point, Point)> = domain
            .extremal()
            .iter()
            .map(|e| anchors.iter().find(|(p, _)| p == e).cloned().expect("extremal point is an anchor"))
            .collect();
        Ok(Self::from_extremal(forest, domain, kept))
    }

    fn from_extremal(forest: &MetricForest, domain: Subtree, anchors: Vec<(Point, Point)>) -> Self {
        let targets: Vec<Point> = anchors.iter().map(|(_, q)| q.clone()).collect();
        let image = forest.hull(&targets);
        PartialIsometry { domain, image, anchors }
    }

    pub fn domain(&self) -> &Subtree {
        &self.domain
    }

    pub fn image(&self) -> &Subtree {
        &self.image
    }

    pub fn anchors(&self) -> &[(Point, Point)] {
        &self.anchors
    }

    pub fn apply(&self, forest: &MetricForest, p: &Point) -> Option<Point> {
        if !forest.subtree_contains(&self.domain, p) {
            return None;
        }
        let (e0, f0) = &self.anchors[0];
        if self.anchors.len() == 1 {
            return Some(f0.clone());
        }
        let (_, fj) = self.anchors[1..].iter().find(|(ej, _)| forest.on_arc(e0, ej, p))?;
        Some(forest.point_along(f0, fj, &forest.dist(e0, p)))
    }

    pub fn inverse(&self) -> Self {
        let mut anchors: Vec<(Point, Point)> = self.anchors.iter().map(|(p, q)| (q.clone(), p.clone())).collect();
        anchors.sort();
        PartialIsometry { domain: self.image.clone(), image: self.domain.clone(), anchors }
    }

    /// Restriction to a subtree of the domain.
    pub fn restrict(&self, forest: &MetricForest, k: &Subtree) -> Self {
        let anchors = k
            .extremal()
            .iter()
            .map(|e| (e.clone(), self.apply(forest, e).expect("restriction inside the domain")))
            .collect();
        Self::from_extremal(forest, k.clone(), anchors)
    }

    pub fn map_subtree(&self, forest: &MetricForest, k: &Subtree) -> Subtree {
        let pts: Vec<Point> = k.extremal().iter().map(|e| self.apply(forest, e).expect("inside domain")).collect();
        forest.hull(&pts)
    }

    /// `self` followed by `next`; `None` when the composite is empty.
    pub fn then(&self, forest: &MetricForest, next: &PartialIsometry) -> Option<Self> {
        let j = forest.intersect(&self.image, &next.domain)?;
        let back = self.inverse();
        let mut anchors: Vec<(Point, Point)> = j
            .extremal()
            .iter()
            .map(|y| (back.apply(forest, y).expect("in image"), next.apply(forest, y).expect("in domain")))
            .collect();
        anchors.sort();
        let src: Vec<Point> = anchors.iter().map(|(p, _)| p.clone()).collect();
        let domain = forest.hull(&src);
        Some(Self::from_extremal(forest, domain, anchors))
    }

    /// Whether some point of the domain is fixed.
    pub fn has_fixed_point(&self, forest: &MetricForest) -> bool {
        if self.domain.comp() != self.image.comp() {
            return false;
        }
        let (e0, f0) = &self.anchors[0];
        let m = forest.point_along(e0, f0, &forest.dist(e0, f0).half());
        self.apply(forest, &m).is_some_and(|fm| fm == m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isometry {
    pub name: String,
    pub map: PartialIsometry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphEdge {
    pub letter: usize,
    pub from: usize,
    pub to: usize,
}

/// Components as vertices, letters as edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemGraph {
    pub vertex_count: usize,
    pub edges: Vec<GraphEdge>,
}

impl SystemGraph {
    pub fn valence(&self, v: usize) -> usize {
        self.edges.iter().map(|e| usize::from(e.from == v) + usize::from(e.to == v)).sum()
    }

    pub fn rank(&self) -> i64 {
        self.edges.len() as i64 - self.vertex_count as i64 + 1
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64
    }

    pub fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.vertex_count).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        (0..self.vertex_count).all(|v| find(&mut parent, v) == root)
    }

    /// Vertices of valence at least three.
    pub fn branch_points(&self) -> Vec<usize> {
        (0..self.vertex_count).filter(|&v| self.valence(v) >= 3).collect()
    }
}

/// A maximal region covered by at most one domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowCover {
    /// Closure of the region.
    pub region: Subtree,
    /// Extremal points of the closure that belong to the region.
    pub closed_at: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceReport {
    pub surface_type: bool,
    pub witnesses: Vec<LowCover>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedReport {
    pub depth: usize,
    pub graph_connected: bool,
    pub independent_generators_up_to_depth: bool,
    pub every_point_has_infinite_path_up_to_depth: bool,
    pub extremal_points_doubly_covered: bool,
    /// Largest domain diameter over admissible words of length `depth`.
    pub max_diameter_at_depth: Scalar,
}

impl ReducedReport {
    pub fn passes(&self) -> bool {
        self.graph_connected
            && self.independent_generators_up_to_depth
            && self.every_point_has_infinite_path_up_to_depth
            && self.extremal_points_doubly_covered
    }
}

/// A nonempty admissible word with its composite partial isometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordMap {
    pub word: Word,
    pub map: PartialIsometry,
}

impl WordMap {
    pub fn domain(&self) -> &Subtree {
        self.map.domain()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibleWord {
    pub word: Word,
    pub domain: WordDomain,
}

/// Domain of a word: everything for the empty word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordDomain {
    Everything,
    Empty,
    Subtree(Subtree),
}

/// `S = (F, A)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemOfIsometries {
    field: FieldSpec,
    forest: MetricForest,
    letters: Vec<Isometry>,
    /// Indexed by `2 * id + inv`.
    oriented: Vec<PartialIsometry>,
}

impl SystemOfIsometries {
    pub fn new(field: FieldSpec, forest: MetricForest, letters: Vec<Isometry>) -> Result<Self, SystemError> {
        let s = Self::new_unchecked(field, forest, letters)?;
        if !s.graph().is_connected() {
            return Err(SystemError::DisconnectedGraph);
        }
        Ok(s)
    }

    /// Builds without the connectivity check.
    pub fn new_unchecked(field: FieldSpec, forest: MetricForest, letters: Vec<Isometry>) -> Result<Self, SystemError> {
        if letters.is_empty() {
            return Err(SystemError::NoLetters);
        }
        for (i, l) in letters.iter().enumerate() {
            if letters[..i].iter().any(|m| m.name == l.name) {
                return Err(SystemError::DuplicateLetter(l.name.clone()));
            }
        }
        let oriented = letters
            .iter()
            .flat_map(|l| [l.map.clone(), l.map.inverse()])
            .collect();
        Ok(SystemOfIsometries { field, forest, letters, oriented })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn forest(&self) -> &MetricForest {
        &self.forest
    }

    pub fn letters(&self) -> &[Isometry] {
        &self.letters
    }

    pub fn letter_count(&self) -> usize {
        self.letters.len()
    }

    pub fn iso(&self, l: Letter) -> &PartialIsometry {
        &self.oriented[l.slot()]
    }

    /// `A^{±1}` ordered by id then sign.
    pub fn oriented_letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.letters.len()).flat_map(|i| [Letter::pos(i), Letter::neg(i)])
    }

    pub fn letter_name(&self, l: Letter) -> String {
        let name = &self.letters[l.id].name;
        match (l.inv, name.chars().count() == 1 && name.chars().all(|c| c.is_lowercase())) {
            (false, _) => name.clone(),
            (true, true) => name.to_uppercase(),
            (true, false) => format!("{name}^-1"),
        }
    }

    pub fn format_word(&self, w: &[Letter]) -> String {
        w.iter().map(|&l| self.letter_name(l)).collect::<Vec<_>>().join(if self.short_names() { "" } else { " " })
    }

    fn short_names(&self) -> bool {
        self.letters.iter().all(|l| l.name.chars().count() == 1)
    }

    /// Lowercase character for a generator, uppercase for its inverse.
    pub fn parse_word(&self, text: &str) -> Result<Word, SystemError> {
        text.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                let lower = c.to_lowercase().to_string();
                let id = self
                    .letters
                    .iter()
                    .position(|l| l.name == lower)
                    .ok_or_else(|| SystemError::UnknownLetter(c.to_string()))?;
                Ok(Letter { id, inv: c.is_uppercase() })
            })
            .collect()
    }

    pub fn apply(&self, l: Letter, p: &Point) -> Result<Point, SystemError> {
        self.iso(l).apply(&self.forest, p).ok_or_else(|| SystemError::OutsideDomain(self.letter_name(l)))
    }

    /// Composite partial isometry of a nonempty reduced word.
    pub fn word_map(&self, w: &[Letter]) -> Result<Option<PartialIsometry>, SystemError> {
        if !is_reduced(w) {
            return Err(SystemError::NonReducedWord);
        }
        let Some((&first, rest)) = w.split_first() else {
            return Err(SystemError::Precondition("empty word has no finite map".into()));
        };
        let mut cur = self.iso(first).clone();
        for &l in rest {
            match cur.then(&self.forest, self.iso(l)) {
                Some(next) => cur = next,
                None => return Ok(None),
            }
        }
        Ok(Some(cur))
    }

    pub fn domain_of_word(&self, w: &[Letter]) -> Result<WordDomain, SystemError> {
        if w.is_empty() {
            return Ok(WordDomain::Everything);
        }
        Ok(match self.word_map(w)? {
            Some(m) => WordDomain::Subtree(m.domain().clone()),
            None => WordDomain::Empty,
        })
    }

    pub fn graph(&self) -> SystemGraph {
        SystemGraph {
            vertex_count: self.forest.component_count(),
            edges: self
                .letters
                .iter()
                .enumerate()
                .map(|(i, l)| GraphEdge { letter: i, from: l.map.domain().comp(), to: l.map.image().comp() })
                .collect(),
        }
    }

    pub fn system_graph(&self) -> Result<SystemGraph, SystemError> {
        let g = self.graph();
        if g.is_connected() {
            Ok(g)
        } else {
            Err(SystemError::DisconnectedGraph)
        }
    }

    /// Number of oriented letters whose domain contains `p`.
    pub fn coverage(&self, p: &Point) -> usize {
        self.oriented.iter().filter(|m| self.forest.subtree_contains(m.domain(), p)).count()
    }

    /// Extremal points of every oriented domain in component `c`.
    pub fn singular_points(&self, c: usize) -> Vec<Point> {
        let mut pts: Vec<Point> = self
            .oriented
            .iter()
            .filter(|m| m.domain().comp() == c)
            .flat_map(|m| m.domain().extremal().iter().cloned())
            .collect();
        pts.sort();
        pts.dedup();
        pts
    }

    pub fn is_surface_type(&self) -> SurfaceReport {
        let mut witnesses = Vec::new();
        for c in 0..self.forest.component_count() {
            let r = self.forest.refine(c, &self.singular_points(c));
            let low_key: Vec<bool> = r.keys.iter().map(|p| self.coverage(p) <= 1).collect();
            let low_cell: Vec<bool> = r.cells.iter().map(|cell| self.coverage(&cell.mid) <= 1).collect();
            // Union-find over low keys and low cells touching them.
            let n = r.keys.len();
            let mut parent: Vec<usize> = (0..n + r.cells.len()).collect();
            fn find(p: &mut [usize], x: usize) -> usize {
                let mut r = x;
                while p[r] != r {
                    r = p[r];
                }
                p[x] = r;
                r
            }
            for (ci, cell) in r.cells.iter().enumerate() {
                if !low_cell[ci] {
                    continue;
                }
                for k in [cell.ends.0, cell.ends.1] {
                    if low_key[k] {
                        let (a, b) = (find(&mut parent, n + ci), find(&mut parent, k));
                        parent[a] = b;
                    }
                }
            }
            let mut groups: Vec<(usize, Vec<Point>, Vec<Point>)> = Vec::new();
            let members = (0..n)
                .filter(|&k| low_key[k])
                .map(|k| (k, vec![r.keys[k].clone()], vec![r.keys[k].clone()]))
                .chain((0..r.cells.len()).filter(|&ci| low_cell[ci]).map(|ci| {
                    let (a, b) = r.cells[ci].ends;
                    (n + ci, vec![r.keys[a].clone(), r.keys[b].clone()], Vec::new())
                }));
            for (id, pts, closed) in members {
                let root = find(&mut parent, id);
                match groups.iter_mut().find(|g| g.0 == root) {
                    Some(g) => {
                        g.1.extend(pts);
                        g.2.extend(closed);
                    }
                    None => groups.push((root, pts, closed)),
                }
            }
            for (_, pts, closed) in groups {
                let region = self.forest.hull(&pts);
                let closed_at =
                    region.extremal().iter().filter(|e| closed.contains(e)).cloned().collect();
                witnesses.push(LowCover { region, closed_at });
            }
        }
        SurfaceReport { surface_type: witnesses.is_empty(), witnesses }
    }

    /// All admissible reduced words of exactly `length`, lexicographic.
    pub fn admissible_words(&self, length: usize) -> Vec<AdmissibleWord> {
        if length == 0 {
            return vec![AdmissibleWord { word: Vec::new(), domain: WordDomain::Everything }];
        }
        let mut out = Vec::new();
        for l in self.oriented_letters() {
            self.extend_words(vec![l], self.iso(l).clone(), length, &mut out);
        }
        out.into_iter()
            .map(|wm| AdmissibleWord { word: wm.word, domain: WordDomain::Subtree(wm.map.domain().clone()) })
            .collect()
    }

    /// Admissible words of every length in `1..=max_len`, grouped by length.
    pub fn admissible_words_upto(&self, max_len: usize) -> Vec<Vec<WordMap>> {
        let mut levels: Vec<Vec<WordMap>> = Vec::new();
        if max_len == 0 {
            return levels;
        }
        levels.push(
            self.oriented_letters()
                .map(|l| WordMap { word: vec![l], map: self.iso(l).clone() })
                .collect(),
        );
        while levels.len() < max_len {
            let prev = levels.last().unwrap();
            let mut next = Vec::new();
            for aw in prev {
                let last = *aw.word.last().unwrap();
                for l in self.oriented_letters() {
                    if l == last.inverse() {
                        continue;
                    }
                    if let Some(m) = aw.map.then(&self.forest, self.iso(l)) {
                        let mut word = aw.word.clone();
                        word.push(l);
                        next.push(WordMap { word, map: m });
                    }
                }
            }
            levels.push(next);
        }
        levels
    }

    fn extend_words(&self, word: Word, map: PartialIsometry, length: usize, out: &mut Vec<WordMap>) {
        if word.len() == length {
            out.push(WordMap { word, map });
            return;
        }
        let last = *word.last().unwrap();
        for l in self.oriented_letters() {
            if l == last.inverse() {
                continue;
            }
            if let Some(m) = map.then(&self.forest, self.iso(l)) {
                let mut w = word.clone();
                w.push(l);
                self.extend_words(w, m, length, out);
            }
        }
    }

    /// Exact for conditions (1) and (4); the other two are checked on words
    /// of length `depth` only.
    pub fn check_reduced(&self, depth: usize) -> Result<ReducedReport, SystemError> {
        if depth == 0 {
            return Err(SystemError::Precondition("depth must be at least 1".into()));
        }
        let f = &self.forest;
        let levels = self.admissible_words_upto(depth);
        let max_diam = |words: &[WordMap]| {
            words.iter().map(|w| f.diameter(w.domain())).fold(Scalar::zero(), Scalar::max)
        };
        let at_depth = max_diam(&levels[depth - 1]);
        let reference = if depth == 1 {
            (0..f.component_count()).map(|c| f.component_diameter(c)).fold(Scalar::zero(), Scalar::max)
        } else {
            max_diam(&levels[depth.div_ceil(2) - 1])
        };
        let independent = at_depth < reference;

        let mut covered = true;
        for c in 0..f.component_count() {
            let doms: Vec<&Subtree> =
                levels[depth - 1].iter().map(|w| w.domain()).filter(|d| d.comp() == c).collect();
            let pts: Vec<Point> = doms.iter().flat_map(|d| d.extremal().iter().cloned()).collect();
            let r = f.refine(c, &pts);
            if !f.samples(&r).iter().all(|p| doms.iter().any(|d| f.subtree_contains(d, p))) {
                covered = false;
                break;
            }
        }

        let doubly = self
            .oriented
            .iter()
            .all(|m| m.domain().extremal().iter().all(|p| self.coverage(p) >= 2));

        Ok(ReducedReport {
            depth,
            graph_connected: self.graph().is_connected(),
            independent_generators_up_to_depth: independent,
            every_point_has_infinite_path_up_to_depth: covered,
            extremal_points_doubly_covered: doubly,
            max_diameter_at_depth: at_depth,
        })
    }

    /// Shortest cyclically reduced regular word (domain with more than one
    /// point) whose composite has a fixed point.
    pub fn detect_periodic_leaf(&self, max_period: usize) -> Result<Option<Word>, SystemError> {
        if max_period == 0 {
            return Err(SystemError::Precondition("max_period must be at least 1".into()));
        }
        for level in self.admissible_words_upto(max_period) {
            for aw in level {
                let w = &aw.word;
                let cyclic = w.len() == 1 || w[0] != w[w.len() - 1].inverse();
                let regular = !aw.domain().is_point();
                if cyclic && regular && aw.map.has_fixed_point(&self.forest) {
                    return Ok(Some(aw.word));
                }
            }
        }
        Ok(None)
    }
}

impl fmt::Display for SystemOfIsometries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "field {}, {} components", self.field, self.forest.component_count())?;
        for l in &self.letters {
            writeln!(f, "  {}: {:?} -> {:?}", l.name, l.map.domain(), l.map.image())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::Pos;
    use crate::io::builders::{self, phi, seg_point};

    fn l(c: char) -> Letter {
        let id = (c.to_ascii_lowercase() as u8 - b'a') as usize;
        Letter { id, inv: c.is_uppercase() }
    }

    fn w(s: &str) -> Word {
        s.chars().map(l).collect()
    }

    fn interval(s: &SystemOfIsometries, lo: &Scalar, hi: &Scalar) -> Subtree {
        let f = s.forest();
        f.hull(&[seg_point(f, 0, lo), seg_point(f, 0, hi)])
    }

    #[test]
    fn apply_golden() {
        let g = builders::golden();
        let f = g.forest();
        let psi = Scalar::one() - phi();
        assert_eq!(g.apply(l('a'), &Point::vertex(0, 0)).unwrap(), seg_point(f, 0, &psi));
        let p = seg_point(f, 0, &Scalar::from_ratio(9, 10));
        let back = g.apply(l('A'), &p).unwrap();
        assert_eq!(g.apply(l('a'), &back).unwrap(), p);
        assert!(matches!(g.apply(l('a'), &Point::vertex(0, 1)), Err(SystemError::OutsideDomain(_))));
    }

    #[test]
    fn word_domains() {
        let g = builders::golden();
        let phi = phi();
        assert_eq!(g.domain_of_word(&[]).unwrap(), WordDomain::Everything);
        assert_eq!(g.domain_of_word(&w("a")).unwrap(), WordDomain::Subtree(interval(&g, &Scalar::zero(), &phi)));
        let two_phi_minus_one = &phi + &phi - Scalar::one();
        assert_eq!(
            g.domain_of_word(&w("aa")).unwrap(),
            WordDomain::Subtree(interval(&g, &Scalar::zero(), &two_phi_minus_one))
        );
        assert_eq!(g.domain_of_word(&w("aaa")).unwrap(), WordDomain::Empty);
        assert_eq!(g.domain_of_word(&w("aA")), Err(SystemError::NonReducedWord));
    }

    #[test]
    fn graphs() {
        let g = builders::golden().system_graph().unwrap();
        assert_eq!((g.vertex_count, g.edges.len(), g.rank()), (1, 2, 2));
        let t = builders::toy().system_graph().unwrap();
        assert_eq!((t.vertex_count, t.edges.len(), t.rank()), (2, 2, 1));
        let s = builders::single_letter().system_graph().unwrap();
        assert_eq!((s.vertex_count, s.edges.len(), s.rank()), (1, 1, 1));
    }

    #[test]
    fn disconnected_rejected() {
        let t = builders::toy();
        let mut trees = t.forest().trees().to_vec();
        trees.push(crate::forest::Tree::point_tree());
        let f = MetricForest::new(trees);
        let err = SystemOfIsometries::new(t.field(), f, t.letters().to_vec()).unwrap_err();
        assert_eq!(err, SystemError::DisconnectedGraph);
    }

    #[test]
    fn surface_type() {
        assert!(builders::golden().is_surface_type().surface_type);
        let t = builders::toy();
        let rep = t.is_surface_type();
        assert!(!rep.surface_type);
        let f = t.forest();
        let half = f.make_point(1, Pos::Edge(0, Scalar::from_ratio(1, 2))).unwrap();
        let three = Point::vertex(1, 1);
        let expected = LowCover { region: f.hull(&[half, three.clone()]), closed_at: vec![three] };
        assert!(rep.witnesses.contains(&expected), "{:?}", rep.witnesses);
        assert!(!builders::single_letter().is_surface_type().surface_type);
    }

    const DEEP: usize = 12;

    #[test]
    fn reducedness() {
        let g = builders::golden();
        let rep = g.check_reduced(10).unwrap();
        assert!(rep.passes(), "{rep:?}");
        let phi2 = phi() * phi();
        assert_eq!(rep.max_diameter_at_depth, &phi2 * &phi2);
        let deeper = g.check_reduced(DEEP).unwrap();
        assert!(deeper.passes());
        assert!(deeper.max_diameter_at_depth < Scalar::from_ratio(1, 10));
        let s = builders::single_letter().check_reduced(3).unwrap();
        assert!(!s.extremal_points_doubly_covered);
        assert!(g.check_reduced(0).is_err());
    }

    /// Golden letters as `(lo, hi, shift)` on `[0,1]`.
    fn golden_intervals() -> Vec<(Letter, Scalar, Scalar, Scalar)> {
        let phi = phi();
        let psi = Scalar::one() - &phi;
        vec![
            (l('a'), Scalar::zero(), phi.clone(), psi.clone()),
            (l('A'), psi.clone(), Scalar::one(), -psi.clone()),
            (l('b'), Scalar::zero(), psi.clone(), phi.clone()),
            (l('B'), phi.clone(), Scalar::one(), -phi.clone()),
        ]
    }

    /// Independent interval enumeration of admissible words with domains.
    fn interval_oracle(len: usize) -> Vec<(Word, Scalar, Scalar)> {
        let letters = golden_intervals();
        let mut cur: Vec<(Word, Scalar, Scalar, Scalar)> = vec![(Vec::new(), Scalar::zero(), Scalar::one(), Scalar::zero())];
        for _ in 0..len {
            let mut next = Vec::new();
            for (word, lo, hi, shift) in &cur {
                for (x, xlo, xhi, xs) in &letters {
                    if word.last() == Some(&x.inverse()) {
                        continue;
                    }
                    // Points p in [lo,hi] with p + shift in [xlo,xhi].
                    let nlo = lo.clone().max(xlo - shift);
                    let nhi = hi.clone().min(xhi - shift);
                    if nlo <= nhi {
                        let mut nw = word.clone();
                        nw.push(*x);
                        next.push((nw, nlo, nhi, shift + xs));
                    }
                }
            }
            cur = next;
        }
        let mut out: Vec<(Word, Scalar, Scalar)> = cur.into_iter().map(|(w, lo, hi, _)| (w, lo, hi)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    #[test]
    fn admissible_words_match_interval_oracle() {
        let g = builders::golden();
        assert_eq!(g.admissible_words(0).len(), 1);
        let ones: Vec<Word> = g.admissible_words(1).into_iter().map(|a| a.word).collect();
        assert_eq!(ones, vec![w("a"), w("A"), w("b"), w("B")]);
        for len in [2, 5, 10] {
            let got = g.admissible_words(len);
            let want = interval_oracle(len);
            assert_eq!(got.len(), want.len(), "length {len}");
            for (aw, (word, lo, hi)) in got.iter().zip(&want) {
                assert_eq!(&aw.word, word);
                assert_eq!(aw.domain, WordDomain::Subtree(interval(&g, lo, hi)));
            }
        }
        let max10 = interval_oracle(10).iter().map(|(_, lo, hi)| hi - lo).max().unwrap();
        assert_eq!(g.check_reduced(10).unwrap().max_diameter_at_depth, max10);
    }

    #[test]
    fn subword_closure_and_inverse_coherence() {
        let g = builders::golden();
        let f = g.forest();
        let four: Vec<Word> = g.admissible_words(4).into_iter().map(|a| a.word).collect();
        for aw in g.admissible_words_upto(5).pop().unwrap() {
            assert!(four.contains(&aw.word[1..].to_vec()));
            assert!(four.contains(&aw.word[..4].to_vec()));
            let inv = g.word_map(&inverse_word(&aw.word)).unwrap().unwrap();
            assert_eq!(inv.domain(), &aw.map.map_subtree(f, aw.domain()));
            let shorter = g.word_map(&aw.word[..4]).unwrap().unwrap();
            assert!(f.subtree_within(aw.domain(), shorter.domain()));
        }
    }

    #[test]
    fn periodic_leaves() {
        assert_eq!(builders::golden().detect_periodic_leaf(12).unwrap(), None);
        assert_eq!(builders::identity_letter().detect_periodic_leaf(3).unwrap(), Some(w("a")));
        assert!(builders::rational_three_iet().detect_periodic_leaf(6).unwrap().is_some());
        assert!(builders::golden().detect_periodic_leaf(0).is_err());
    }

    #[test]
    fn word_text() {
        let g = builders::golden();
        assert_eq!(g.parse_word("aBb").unwrap(), w("aBb"));
        assert_eq!(g.format_word(&w("aBA")), "aBA");
        assert!(g.parse_word("z").is_err());
        assert_eq!(reduce(&w("abBa")), w("aa"));
    }
}
