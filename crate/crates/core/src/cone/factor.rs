//! Factorization of incidence matrices into elementary subdivision and
//! deletion matrices.
//!
//! A product `F_1 F_2 ⋯ F_k` is read as a sequence of column operations on
//! the identity: `A_d^i` appends a copy of column `i`, its transpose adds the
//! last column into column `i` and drops it, `B_d^j` drops column `j`, its
//! transpose inserts a zero column at `j`, and a permutation reorders.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};

use super::matrix::Matrix;
use super::ConeError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ElementaryMatrix {
    /// `d × (d+1)`, `(I_d | C_d^i)` with `i ∈ [1, d]`.
    A { d: usize, i: usize },
    /// `(d+1) × d`, identity blocks `I_j` and `I_{d−j}` around a zero row.
    B { d: usize, j: usize },
    /// Transpose of `A_d^i`.
    At { d: usize, i: usize },
    /// Transpose of `B_d^j`.
    Bt { d: usize, j: usize },
    /// Square permutation with a 1 at `(q, perm[q])`.
    Perm { perm: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ShapeCounts {
    pub a: usize,
    pub b: usize,
    pub at: usize,
    pub bt: usize,
    pub perm: usize,
}

impl ShapeCounts {
    pub fn max_per_shape(&self) -> usize {
        self.a.max(self.b).max(self.at).max(self.bt)
    }
}

impl ElementaryMatrix {
    pub fn to_matrix(&self) -> Matrix {
        match *self {
            ElementaryMatrix::A { d, i } => {
                let mut m = Matrix::zeros(d, d + 1);
                for k in 0..d {
                    m.set(k, k, BigInt::one());
                }
                m.set(i - 1, d, BigInt::one());
                m
            }
            ElementaryMatrix::B { d, j } => {
                let mut m = Matrix::zeros(d + 1, d);
                for k in 0..d {
                    let row = if k < j { k } else { k + 1 };
                    m.set(row, k, BigInt::one());
                }
                m
            }
            ElementaryMatrix::At { d, i } => ElementaryMatrix::A { d, i }.to_matrix().transpose(),
            ElementaryMatrix::Bt { d, j } => ElementaryMatrix::B { d, j }.to_matrix().transpose(),
            ElementaryMatrix::Perm { ref perm } => {
                let n = perm.len();
                let mut m = Matrix::zeros(n, n);
                for (q, &t) in perm.iter().enumerate() {
                    m.set(q, t, BigInt::one());
                }
                m
            }
        }
    }
}

pub fn shape_counts(factors: &[ElementaryMatrix]) -> ShapeCounts {
    let mut c = ShapeCounts::default();
    for f in factors {
        match f {
            ElementaryMatrix::A { .. } => c.a += 1,
            ElementaryMatrix::B { .. } => c.b += 1,
            ElementaryMatrix::At { .. } => c.at += 1,
            ElementaryMatrix::Bt { .. } => c.bt += 1,
            ElementaryMatrix::Perm { .. } => c.perm += 1,
        }
    }
    c
}

/// Product of the factors, starting from `I_rows`.
pub fn factor_product(rows: usize, factors: &[ElementaryMatrix]) -> Option<Matrix> {
    factors.iter().try_fold(Matrix::identity(rows), |acc, f| acc.checked_mul(&f.to_matrix()))
}

/// Maximum matching of rows to columns through positive entries.
fn max_matching(m: &[Vec<u64>], cols: usize) -> Vec<Option<usize>> {
    fn augment(m: &[Vec<u64>], i: usize, seen: &mut [bool], col_owner: &mut [Option<usize>]) -> bool {
        for j in 0..seen.len() {
            if m[i][j] == 0 || seen[j] {
                continue;
            }
            seen[j] = true;
            if col_owner[j].is_none_or(|o| augment(m, o, seen, col_owner)) {
                col_owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    let mut col_owner: Vec<Option<usize>> = vec![None; cols];
    for i in 0..m.len() {
        let mut seen = vec![false; cols];
        augment(m, i, &mut seen, &mut col_owner);
    }
    let mut row_match = vec![None; m.len()];
    for (j, o) in col_owner.iter().enumerate() {
        if let Some(i) = o {
            row_match[*i] = Some(j);
        }
    }
    row_match
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Seed(usize),
    Target(usize),
}

/// Elementary factors whose product is `m`. The shape counts are
/// `#A = #Aᵀ = Σm − |matching|`, `#B = rows − |matching|` and
/// `#Bᵀ = cols − |matching|`, plus at most one permutation.
pub fn elementary_factors(m: &Matrix) -> Result<Vec<ElementaryMatrix>, ConeError> {
    let (r, c) = m.shape();
    if r == 0 {
        return Err(ConeError::Factorization("empty matrix".into()));
    }
    let counts: Vec<Vec<u64>> = (0..r)
        .map(|i| {
            m.row(i)
                .iter()
                .map(|x| x.to_u64().ok_or_else(|| ConeError::Factorization(format!("entry {x} is not a small nonnegative integer"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let row_match = max_matching(&counts, c);
    let mut matched_cols = vec![false; c];
    for j in row_match.iter().flatten() {
        matched_cols[*j] = true;
    }

    let mut out = Vec::new();
    let mut slots: Vec<Slot> = (0..r).map(Slot::Seed).collect();
    let holder = |slots: &[Slot], j: usize| {
        slots
            .iter()
            .position(|s| match *s {
                Slot::Seed(i) => row_match[i] == Some(j),
                Slot::Target(t) => t == j,
            })
            .expect("every column has a holder")
    };

    for j in (0..c).filter(|&j| !matched_cols[j]) {
        out.push(ElementaryMatrix::Bt { d: slots.len(), j: slots.len() });
        slots.push(Slot::Target(j));
    }
    let base = slots.len();
    let mut pending = Vec::new();
    for j in 0..c {
        for (i, row) in counts.iter().enumerate() {
            let extra = row[j] - u64::from(row_match[i] == Some(j));
            for _ in 0..extra {
                out.push(ElementaryMatrix::A { d: base + pending.len(), i: i + 1 });
                pending.push(holder(&slots, j));
            }
        }
    }
    while let Some(p) = pending.pop() {
        out.push(ElementaryMatrix::At { d: base + pending.len(), i: p + 1 });
    }
    for q in (0..slots.len()).rev() {
        if let Slot::Seed(i) = slots[q] {
            if row_match[i].is_none() {
                out.push(ElementaryMatrix::B { d: slots.len() - 1, j: q });
                slots.remove(q);
            }
        }
    }
    let perm: Vec<usize> = slots
        .iter()
        .map(|s| match *s {
            Slot::Seed(i) => row_match[i].expect("unmatched seeds removed"),
            Slot::Target(t) => t,
        })
        .collect();
    if perm.iter().enumerate().any(|(q, &t)| q != t) {
        out.push(ElementaryMatrix::Perm { perm });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn displayed_elementary_matrices() {
        assert_eq!(ElementaryMatrix::A { d: 2, i: 1 }.to_matrix(), Matrix::from_rows(&[vec![1, 0, 1], vec![0, 1, 0]]));
        assert_eq!(ElementaryMatrix::B { d: 2, j: 1 }.to_matrix(), Matrix::from_rows(&[vec![1, 0], vec![0, 0], vec![0, 1]]));
    }

    #[test]
    fn identity_has_no_factors() {
        assert!(elementary_factors(&Matrix::identity(3)).unwrap().is_empty());
    }

    #[test]
    fn fold_matrix() {
        let m = Matrix::from_rows(&[vec![1, 0, 1], vec![0, 1, 0]]);
        let fs = elementary_factors(&m).unwrap();
        assert_eq!(factor_product(2, &fs).unwrap(), m);
        let c = shape_counts(&fs);
        assert_eq!((c.a, c.at, c.b, c.bt), (1, 1, 0, 1));
    }

    #[test]
    fn column_needing_units_without_seed() {
        // Column 1 can only be matched through row 0, which column 0 needs.
        let m = Matrix::from_rows(&[vec![1, 2], vec![0, 0]]);
        let fs = elementary_factors(&m).unwrap();
        assert_eq!(factor_product(2, &fs).unwrap(), m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn product_reproduces_matrix(r in 1usize..5, c in 1usize..5, seed in prop::collection::vec(0u64..4, 25)) {
            let rows: Vec<Vec<u64>> = (0..r).map(|i| (0..c).map(|j| seed[i * 5 + j]).collect()).collect();
            let m = Matrix::from_rows(&rows);
            let fs = elementary_factors(&m).unwrap();
            prop_assert_eq!(factor_product(r, &fs).unwrap(), m);
        }
    }
}
