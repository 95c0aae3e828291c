//! Constructors for interval exchanges and the standard fixtures.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forest::{MetricForest, Point, Pos, Tree};
use crate::scalar::{FieldSpec, Scalar};
use crate::system::{Isometry, PartialIsometry, SystemError, SystemOfIsometries};

/// The golden ratio conjugate `(√5 − 1)/2`.
pub fn phi() -> Scalar {
    crate::scalar::parse_scalar_any("-1/2 + 1/2*sqrt(5)").expect("valid literal")
}

fn letter_name(i: usize) -> String {
    assert!(i < 26, "at most 26 generated letter names");
    ((b'a' + i as u8) as char).to_string()
}

/// Point at coordinate `t` of a segment component whose left end is vertex 0.
pub fn seg_point(f: &MetricForest, comp: usize, t: &Scalar) -> Point {
    f.make_point(comp, Pos::Edge(0, t.clone())).expect("coordinate inside the segment")
}

/// Translation `[s, s+len] -> [t, t+len]` between two segment components.
pub fn translation(f: &MetricForest, from: (usize, &Scalar), to: (usize, &Scalar), len: &Scalar) -> PartialIsometry {
    let anchors = [
        (seg_point(f, from.0, from.1), seg_point(f, to.0, to.1)),
        (seg_point(f, from.0, &(from.1 + len)), seg_point(f, to.0, &(to.1 + len))),
    ];
    PartialIsometry::from_anchors(f, &anchors).expect("translation is an isometry")
}

fn field_of(values: &[Scalar]) -> FieldSpec {
    values
        .iter()
        .find(|x| !x.is_rational())
        .map_or(FieldSpec::Rational, |x| FieldSpec::Quadratic { d: x.radicand() })
}

/// Interval exchange on `[0, Σ lengths]`: interval `i` lands at position
/// `permutation[i]` of the image order.
pub fn build_from_iet(lengths: &[Scalar], permutation: &[usize]) -> Result<SystemOfIsometries, SystemError> {
    let n = lengths.len();
    if n == 0 || permutation.len() != n {
        return Err(SystemError::Precondition("lengths and permutation must have equal nonzero size".into()));
    }
    let mut seen = vec![false; n];
    for &p in permutation {
        if p >= n || seen[p] {
            return Err(SystemError::Precondition("permutation is not a bijection".into()));
        }
        seen[p] = true;
    }
    if lengths.iter().any(|l| !l.is_positive()) {
        return Err(SystemError::Precondition("interval lengths must be positive".into()));
    }
    let total = lengths.iter().fold(Scalar::zero(), |a, l| a + l);
    let forest = MetricForest::new(vec![Tree::segment(total).expect("positive length")]);
    let mut starts = Vec::with_capacity(n);
    let mut acc = Scalar::zero();
    for l in lengths {
        starts.push(acc.clone());
        acc = acc + l;
    }
    let letters = (0..n)
        .map(|i| {
            let target = (0..n)
                .filter(|&j| permutation[j] < permutation[i])
                .fold(Scalar::zero(), |a, j| a + &lengths[j]);
            Isometry {
                name: letter_name(i),
                map: translation(&forest, (0, &starts[i]), (0, &target), &lengths[i]),
            }
        })
        .collect();
    SystemOfIsometries::new(field_of(lengths), forest, letters)
}

/// `F = [0,1]`, `a: [0,φ] → [1−φ,1]`, `b: [0,1−φ] → [φ,1]`.
pub fn golden() -> SystemOfIsometries {
    let phi = phi();
    let psi = Scalar::one() - &phi;
    let f = MetricForest::new(vec![Tree::segment(Scalar::one()).unwrap()]);
    let zero = Scalar::zero();
    let a = translation(&f, (0, &zero), (0, &psi), &phi);
    let b = translation(&f, (0, &zero), (0, &phi), &psi);
    SystemOfIsometries::new(
        FieldSpec::Quadratic { d: 5 },
        f,
        vec![Isometry { name: "a".into(), map: a }, Isometry { name: "b".into(), map: b }],
    )
    .unwrap()
}

/// `F = [0,1] ⊔ [2,3]`, `a: [0,1] → [2,3]`, `b: [0,1/2] → [2,5/2]`.
/// Coordinates on the second component are offsets from 2.
pub fn toy() -> SystemOfIsometries {
    let f = MetricForest::new(vec![Tree::segment(Scalar::one()).unwrap(), Tree::segment(Scalar::one()).unwrap()]);
    let zero = Scalar::zero();
    let a = translation(&f, (0, &zero), (1, &zero), &Scalar::one());
    let b = translation(&f, (0, &zero), (1, &zero), &Scalar::from_ratio(1, 2));
    SystemOfIsometries::new(
        FieldSpec::Rational,
        f,
        vec![Isometry { name: "a".into(), map: a }, Isometry { name: "b".into(), map: b }],
    )
    .unwrap()
}

/// Golden system plus a point component `{5}` carrying a loop `d` and an
/// edge `c: {5} → {0}`.
pub fn decomposable() -> SystemOfIsometries {
    let g = golden();
    let mut trees = g.forest().trees().to_vec();
    trees.push(Tree::point_tree());
    let f = MetricForest::new(trees);
    let five = Point::vertex(1, 0);
    let zero = Point::vertex(0, 0);
    let c = PartialIsometry::from_anchors(&f, &[(five.clone(), zero)]).unwrap();
    let d = PartialIsometry::from_anchors(&f, &[(five.clone(), five)]).unwrap();
    let mut letters = g.letters().to_vec();
    letters.push(Isometry { name: "c".into(), map: c });
    letters.push(Isometry { name: "d".into(), map: d });
    SystemOfIsometries::new(FieldSpec::Quadratic { d: 5 }, f, letters).unwrap()
}

/// Rotation by 1/3 written as a 3-interval exchange.
pub fn rational_three_iet() -> SystemOfIsometries {
    let third = Scalar::from_ratio(1, 3);
    build_from_iet(&[third.clone(), third.clone(), third], &[1, 2, 0]).unwrap()
}

/// Single letter acting as the identity on `[0,1]`.
pub fn identity_letter() -> SystemOfIsometries {
    let f = MetricForest::new(vec![Tree::segment(Scalar::one()).unwrap()]);
    let zero = Scalar::zero();
    let a = translation(&f, (0, &zero), (0, &zero), &Scalar::one());
    SystemOfIsometries::new(FieldSpec::Rational, f, vec![Isometry { name: "a".into(), map: a }]).unwrap()
}

/// Single letter `a: [0,1/2] → [1/2,1]` on `[0,1]`.
pub fn single_letter() -> SystemOfIsometries {
    let f = MetricForest::new(vec![Tree::segment(Scalar::one()).unwrap()]);
    let half = Scalar::from_ratio(1, 2);
    let a = translation(&f, (0, &Scalar::zero()), (0, &half), &half);
    SystemOfIsometries::new(FieldSpec::Rational, f, vec![Isometry { name: "a".into(), map: a }]).unwrap()
}

/// Whether no proper prefix `{0..k}` is mapped onto itself.
pub fn is_irreducible(permutation: &[usize]) -> bool {
    (1..permutation.len()).all(|k| permutation[..k].iter().any(|&p| p >= k))
}

/// Interval exchange with 3 or 4 intervals, an irreducible permutation, and
/// lengths `r + s·√d` with small random rationals. Deterministic in `seed`.
pub fn random_iet(seed: u64) -> SystemOfIsometries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=4);
    let d = *[2u32, 3, 5].choose(&mut rng).unwrap();
    let perm = loop {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(&mut rng);
        if is_irreducible(&p) {
            break p;
        }
    };
    let lengths: Vec<Scalar> = (0..n)
        .map(|_| loop {
            let r = Scalar::from_ratio(rng.gen_range(1..20), rng.gen_range(1..10));
            let s = Scalar::from_ratio(rng.gen_range(-9..10), rng.gen_range(1..10));
            let x = r + s * Scalar::sqrt(d);
            if x.is_positive() {
                break x;
            }
        })
        .collect();
    build_from_iet(&lengths, &perm).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Letter;

    #[test]
    fn iet_golden_matches_fixture() {
        let phi = phi();
        let iet = build_from_iet(&[phi.clone(), Scalar::one() - &phi], &[1, 0]).unwrap();
        let g = golden();
        assert_eq!(iet.iso(Letter::pos(0)), g.iso(Letter::pos(0)));
        assert_eq!(iet.iso(Letter::pos(1)), g.iso(Letter::neg(1)));
    }

    #[test]
    fn iet_errors() {
        let one = Scalar::one();
        assert!(build_from_iet(&[one.clone(), one.clone()], &[0, 0]).is_err());
        assert!(build_from_iet(&[one.clone(), Scalar::zero()], &[1, 0]).is_err());
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&[1, 0]));
        assert!(!is_irreducible(&[0, 1]));
        assert!(is_irreducible(&[1, 2, 0]));
        assert!(!is_irreducible(&[1, 0, 2]));
    }

    #[test]
    fn random_iets_are_deterministic() {
        assert_eq!(random_iet(7), random_iet(7));
        assert_eq!(random_iet(3).graph().rank(), random_iet(3).letter_count() as i64);
    }
}
