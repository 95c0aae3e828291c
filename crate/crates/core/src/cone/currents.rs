//! Measure vectors on generalized edges, cylinder estimates and empirical
//! frequency vectors.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forest::{Arc, MetricForest, Point};
use crate::induction::{generalized_edges, GeneralizedEdge, Trace};
use crate::scalar::Scalar;
use crate::system::{inverse_word, Letter, SystemOfIsometries, Word};

use super::ConeError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureVector {
    pub step: usize,
    pub entries: Vec<BigRational>,
}

impl MeasureVector {
    pub fn total(&self) -> BigRational {
        self.entries.iter().sum()
    }

    /// Scaled to sum one; unchanged if the total is zero.
    pub fn normalized(&self) -> MeasureVector {
        let t = self.total();
        if t.is_zero() {
            return self.clone();
        }
        MeasureVector { step: self.step, entries: self.entries.iter().map(|x| x / &t).collect() }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderEstimate {
    pub word: Word,
    pub step: usize,
    pub lower: BigRational,
    pub upper: BigRational,
    pub error: BigRational,
}

impl CylinderEstimate {
    pub fn gap(&self) -> BigRational {
        &self.upper - &self.lower
    }
}

/// Occurrences of `w` and of `w^{-1}` as factors of `word`.
pub fn count_occurrences(word: &[Letter], w: &[Letter]) -> u64 {
    if w.is_empty() || w.len() > word.len() {
        return 0;
    }
    let inv = inverse_word(w);
    let count = |pat: &[Letter]| word.windows(pat.len()).filter(|win| *win == pat).count() as u64;
    count(w) + count(&inv)
}

/// `⟨ê|w⟩` for generalized edge `ge` of `Γ_n`.
pub fn occurrence_count(trace: &Trace, n: usize, ge: usize, w: &[Letter]) -> u64 {
    count_occurrences(&trace.level0_word(n, &trace.ges[n][ge].path), w)
}

/// The family `μ_n = M_n μ_{n+1}` for `n ≤ top`, from `top_vector` at `top`.
pub fn pushed_family(trace: &Trace, top: usize, top_vector: Vec<BigRational>) -> Result<Vec<MeasureVector>, ConeError> {
    if top > trace.len() {
        return Err(ConeError::OutOfRange { index: top, len: trace.len() });
    }
    if top_vector.len() != trace.ge_counts[top] {
        return Err(ConeError::Shape(format!("vector of length {} at step {top}", top_vector.len())));
    }
    let mut family = vec![MeasureVector { step: top, entries: top_vector }];
    for n in (0..top).rev() {
        let next = &family.last().expect("nonempty").entries;
        family.push(MeasureVector { step: n, entries: apply(trace.matrix(n), next) });
    }
    family.reverse();
    Ok(family)
}

fn apply(m: &super::Matrix, v: &[BigRational]) -> Vec<BigRational> {
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .zip(v)
                .filter(|(a, _)| !a.is_zero())
                .map(|(a, x)| BigRational::from_integer(a.clone()) * x)
                .sum()
        })
        .collect()
}

fn ends(ge: &GeneralizedEdge, s: &SystemOfIsometries) -> Option<(usize, usize)> {
    if ge.cyclic {
        return None;
    }
    let g = s.graph();
    let endpoint = |l: Letter, head: bool| {
        let e = g.edges.iter().find(|e| e.letter == l.id).expect("edge present");
        if head != l.inv { e.to } else { e.from }
    };
    Some((endpoint(ge.path[0], false), endpoint(*ge.path.last().expect("nonempty"), true)))
}

/// `μ(v)` bounded by the sum of the incident generalized-edge masses, for
/// every branch vertex of `Γ_n`.
pub fn vertex_masses(trace: &Trace, n: usize, mu: &[BigRational]) -> Vec<(usize, BigRational)> {
    let s = &trace.systems[n];
    let branch = s.graph().branch_points();
    branch
        .into_iter()
        .map(|v| {
            let mut m = BigRational::zero();
            for (ge, x) in trace.ges[n].iter().zip(mu) {
                if let Some((a, b)) = ends(ge, s) {
                    if a == v {
                        m += x;
                    }
                    if b == v {
                        m += x;
                    }
                }
            }
            (v, m)
        })
        .collect()
}

/// Lower bound `Σ ⟨ê|w⟩ μ(ê)` and upper bound plus the vertex error term,
/// with `μ` scaled so that `Σ |ê| μ(ê) = 1`.
pub fn cylinder_measure(trace: &Trace, ray: &MeasureVector, w: &[Letter]) -> Result<CylinderEstimate, ConeError> {
    let n = ray.step;
    if n > trace.len() || ray.entries.len() != trace.ge_counts[n] {
        return Err(ConeError::Shape(format!("ray does not match the generalized edges of step {n}")));
    }
    let mass: BigRational = trace.ges[n]
        .iter()
        .zip(&ray.entries)
        .map(|(g, x)| BigRational::from_integer(BigInt::from(g.path.len())) * x)
        .sum();
    if !mass.is_positive() {
        return Err(ConeError::Precondition("ray has zero mass".into()));
    }
    let mu: Vec<BigRational> = ray.entries.iter().map(|x| x / &mass).collect();
    if w.is_empty() {
        return Ok(CylinderEstimate {
            word: Vec::new(),
            step: n,
            lower: BigRational::one(),
            upper: BigRational::one(),
            error: BigRational::zero(),
        });
    }
    let images = trace.level0_images(n);
    let lower: BigRational = images
        .iter()
        .zip(&mu)
        .map(|(img, x)| BigRational::from_integer(BigInt::from(count_occurrences(img, w))) * x)
        .sum();
    let rank = trace.rank();
    let max_v = vertex_masses(trace, n, &mu).into_iter().map(|(_, m)| m).max().unwrap_or_else(BigRational::zero);
    let len = w.len() as i64;
    let factor = BigInt::from(len - 1) * BigInt::from(2 * rank - 1).pow(w.len() as u32) * BigInt::from(2 * rank - 2);
    let error = BigRational::from_integer(factor) * max_v;
    Ok(CylinderEstimate { word: w.to_vec(), step: n, upper: &lower + &error, lower, error })
}

/// Estimates along a compatible family with the running intersection of the
/// intervals: the lower bound never drops and the upper bound never rises.
pub fn cylinder_envelope(trace: &Trace, family: &[MeasureVector], w: &[Letter]) -> Result<Vec<CylinderEstimate>, ConeError> {
    let mut out: Vec<CylinderEstimate> = Vec::with_capacity(family.len());
    for mv in family {
        let mut e = cylinder_measure(trace, mv, w)?;
        if let Some(prev) = out.last() {
            if prev.lower > e.lower {
                e.lower = prev.lower.clone();
            }
            if prev.upper < e.upper {
                e.upper = prev.upper.clone();
            }
            e.error = &e.upper - &e.lower;
        }
        out.push(e);
    }
    Ok(out)
}

/// Frequencies of generalized-edge traversals along a walk following the
/// orbit of a seeded point. Each traversal of an edge of `ê` counts
/// `1/|ê|`; the result is normalized to sum one.
pub fn empirical_current(s: &SystemOfIsometries, length: usize, seed: u64) -> Result<MeasureVector, ConeError> {
    if length == 0 {
        return Err(ConeError::Precondition("length must be positive".into()));
    }
    let ges = generalized_edges(&s.graph()).map_err(|e| ConeError::Precondition(e.to_string()))?;
    let mut ge_of = vec![0usize; s.letter_count()];
    for (i, g) in ges.iter().enumerate() {
        for l in &g.path {
            ge_of[l.id] = i;
        }
    }
    let f = s.forest();
    let walkers: Vec<Walker> = s.oriented_letters().map(|l| Walker::new(s, l)).collect();
    let by_comp: Vec<Vec<usize>> = (0..f.component_count())
        .map(|c| (0..walkers.len()).filter(|&i| walkers[i].comp == c).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start_letter = s
        .oriented_letters()
        .find(|&l| !s.iso(l).domain().is_point())
        .ok_or_else(|| ConeError::Precondition("every domain is a point".into()))?;
    let dom = s.iso(start_letter).domain();
    let (p, q) = (&dom.extremal()[0], &dom.extremal()[1]);
    let t = Scalar::from_ratio(rng.gen_range(1..(1i64 << 20)), 1i64 << 20);
    let mut x: Point = f.point_along(p, q, &(&t * &f.dist(p, q)));

    let mut counts = vec![0u64; ges.len()];
    let mut prev: Option<Letter> = None;
    let mut cands: Vec<(usize, usize, Scalar)> = Vec::new();
    for _ in 0..length {
        cands.clear();
        for &i in &by_comp[x.comp] {
            let w = &walkers[i];
            if Some(w.letter.inverse()) == prev {
                continue;
            }
            if let Some((j, d0)) = w.locate(&x) {
                cands.push((i, j, d0));
            }
        }
        if cands.is_empty() {
            return Err(ConeError::Precondition("walk found no admissible extension".into()));
        }
        let pick = if cands.len() == 1 { 0 } else { rng.gen_range(0..cands.len()) };
        let (i, j, d0) = &cands[pick];
        let w = &walkers[*i];
        x = w.image(f, *j, d0);
        counts[ge_of[w.letter.id]] += 1;
        prev = Some(w.letter);
    }
    let raw = MeasureVector {
        step: 0,
        entries: counts
            .iter()
            .zip(&ges)
            .map(|(&c, g)| BigRational::new(BigInt::from(c), BigInt::from(g.path.len())))
            .collect(),
    };
    Ok(raw.normalized())
}

/// A partial isometry unpacked for repeated application along a walk.
struct Walker {
    letter: Letter,
    comp: usize,
    /// Domain arcs `[e0, e_j]` paired with image arcs `[f0, f_j]`.
    arms: Vec<(Arc, Arc)>,
}

impl Walker {
    fn new(s: &SystemOfIsometries, letter: Letter) -> Self {
        let f = s.forest();
        let m = s.iso(letter);
        let (e0, f0) = &m.anchors()[0];
        let arms = if m.anchors().len() == 1 {
            vec![(f.arc(e0, e0), f.arc(f0, f0))]
        } else {
            m.anchors()[1..].iter().map(|(e, g)| (f.arc(e0, e), f.arc(f0, g))).collect()
        };
        Walker { letter, comp: e0.comp, arms }
    }

    /// Arm holding `x` and `d(e0, x)`, if `x` is in the domain.
    fn locate(&self, x: &Point) -> Option<(usize, Scalar)> {
        self.arms.iter().enumerate().find_map(|(j, (dom, _))| dom.locate(x).map(|d| (j, d)))
    }

    fn image(&self, f: &MetricForest, arm: usize, d0: &Scalar) -> Point {
        self.arms[arm].1.point_at(f, d0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResidual {
    pub step: usize,
    /// `μ_n = M_n μ_{n+1}` holds exactly.
    pub exact: bool,
    /// Largest `|u_i − v_i| / u_i` after normalizing both sides to sum one.
    pub max_relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub steps: Vec<StepResidual>,
    pub max_relative: f64,
    pub exact: bool,
}

pub fn check_current_consistency(trace: &Trace, family: &[MeasureVector]) -> Result<ConsistencyReport, ConeError> {
    let mut steps = Vec::new();
    for pair in family.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.step != a.step + 1 || b.step > trace.len() {
            return Err(ConeError::Shape(format!("steps {} and {} are not consecutive", a.step, b.step)));
        }
        let m = trace.matrix(a.step);
        if m.rows() != a.entries.len() || m.cols() != b.entries.len() {
            return Err(ConeError::Shape(format!(
                "matrix {}×{} against vectors of length {} and {}",
                m.rows(),
                m.cols(),
                a.entries.len(),
                b.entries.len()
            )));
        }
        let pushed = MeasureVector { step: a.step, entries: apply(m, &b.entries) };
        let exact = pushed == *a;
        let u = a.normalized();
        let v = pushed.normalized();
        let max_relative = u
            .entries
            .iter()
            .zip(&v.entries)
            .map(|(x, y)| {
                let diff = (x - y).abs();
                if x.is_zero() {
                    if diff.is_zero() { 0.0 } else { f64::INFINITY }
                } else {
                    (diff / x).to_f64().unwrap_or(f64::INFINITY)
                }
            })
            .fold(0.0, f64::max);
        steps.push(StepResidual { step: a.step, exact, max_relative });
    }
    let max_relative = steps.iter().map(|s| s.max_relative).fold(0.0, f64::max);
    let exact = steps.iter().all(|s| s.exact);
    Ok(ConsistencyReport { steps, max_relative, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::induction::{unfold, UnfoldOptions};
    use crate::io::builders;

    fn word(s: &SystemOfIsometries, text: &str) -> Word {
        s.parse_word(text).unwrap()
    }

    #[test]
    fn occurrences_ignore_orientation() {
        let g = builders::golden();
        let img = word(&g, "aba");
        assert_eq!(count_occurrences(&img, &word(&g, "a")), 2);
        assert_eq!(count_occurrences(&img, &word(&g, "bb")), 0);
        assert_eq!(count_occurrences(&word(&g, "aBA"), &word(&g, "ab")), 1);
        assert_eq!(count_occurrences(&img, &word(&g, "abab")), 0);
    }

    #[test]
    fn pushed_family_has_zero_residual() {
        let t = unfold(&builders::golden(), &UnfoldOptions::new(8)).unwrap();
        let ones = vec![BigRational::one(); t.ge_counts[8]];
        let fam = pushed_family(&t, 8, ones).unwrap();
        let rep = check_current_consistency(&t, &fam).unwrap();
        assert!(rep.exact);
        assert_eq!(rep.max_relative, 0.0);
    }

    #[test]
    fn mismatched_family_rejected() {
        let t = unfold(&builders::golden(), &UnfoldOptions::new(2)).unwrap();
        let bad = vec![
            MeasureVector { step: 0, entries: vec![BigRational::one(); 5] },
            MeasureVector { step: 1, entries: vec![BigRational::one(); 2] },
        ];
        assert!(check_current_consistency(&t, &bad).is_err());
    }

    #[test]
    fn length_one_walk_is_an_indicator() {
        let g = builders::golden();
        let v = empirical_current(&g, 1, 7).unwrap();
        assert_eq!(v.entries.iter().filter(|x| x.is_zero()).count(), 1);
        assert_eq!(v.total(), BigRational::one());
    }

    #[test]
    fn empty_word_has_total_mass() {
        let t = unfold(&builders::golden(), &UnfoldOptions::new(4)).unwrap();
        let fam = pushed_family(&t, 4, vec![BigRational::one(); t.ge_counts[4]]).unwrap();
        let e = cylinder_measure(&t, &fam[4], &[]).unwrap();
        assert_eq!((e.lower.clone(), e.upper.clone()), (BigRational::one(), BigRational::one()));
    }

    #[test]
    fn long_word_has_no_occurrences() {
        let t = unfold(&builders::golden(), &UnfoldOptions::new(2)).unwrap();
        let fam = pushed_family(&t, 2, vec![BigRational::one(); t.ge_counts[2]]).unwrap();
        let w = word(t.system(0), "abababababababababab");
        let e = cylinder_measure(&t, &fam[2], &w).unwrap();
        assert!(e.lower.is_zero());
        assert!(e.error.is_positive());
    }

    #[test]
    fn golden_letter_frequencies() {
        // μ(a) : μ(b) = |dom a| : |dom b| = φ : 1−φ for the rotation.
        let g = builders::golden();
        let v = empirical_current(&g, 20_000, 3).unwrap().to_f64();
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        assert!((v[0] / v[1] - phi / (1.0 - phi)).abs() < 0.01, "{v:?}");
    }
}
