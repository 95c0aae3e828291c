//! Exact phase-one simplex for feasibility of `A λ = b, λ ≥ 0`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Whether some `λ ≥ 0` solves `A λ = b`. `a` is given by rows. Uses Bland's
/// rule, so it terminates.
pub fn feasible(a: &[Vec<BigRational>], b: &[BigRational]) -> bool {
    let m = a.len();
    if m == 0 {
        return true;
    }
    let n = a[0].len();
    // Tableau over [x (n) | artificial (m) | rhs], rows with b ≥ 0.
    let width = n + m + 1;
    let mut t: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let flip = b[i].is_negative();
            let mut row: Vec<BigRational> = Vec::with_capacity(width);
            row.extend(a[i].iter().map(|x| if flip { -x.clone() } else { x.clone() }));
            row.extend((0..m).map(|k| if k == i { BigRational::one() } else { BigRational::zero() }));
            row.push(if flip { -b[i].clone() } else { b[i].clone() });
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Reduced costs of minimizing the sum of artificials.
    let objective = |t: &[Vec<BigRational>], basis: &[usize], col: usize| -> BigRational {
        let c = |k: usize| if k >= n && k < n + m { BigRational::one() } else { BigRational::zero() };
        let mut z = c(col);
        for (i, &bk) in basis.iter().enumerate() {
            z -= c(bk) * &t[i][col];
        }
        z
    };
    loop {
        let entering = (0..n + m).find(|&k| !basis.contains(&k) && objective(&t, &basis, k).is_negative());
        let Some(e) = entering else { break };
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..m {
            if t[i][e].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][e];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { break };
        let pivot = t[r][e].clone();
        for x in t[r].iter_mut() {
            *x /= &pivot;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[e].is_zero() {
                let factor = row[e].clone();
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= &factor * p;
                }
            }
        }
        basis[r] = e;
    }
    basis
        .iter()
        .enumerate()
        .all(|(i, &k)| k < n || t[i][width - 1].is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn convex_combination_detected() {
        // (1,1) = ½(2,0) + ½(0,2) with weights summing to one.
        let a = vec![vec![q(2), q(0)], vec![q(0), q(2)], vec![q(1), q(1)]];
        assert!(feasible(&a, &[q(1), q(1), q(1)]));
        assert!(!feasible(&a, &[q(3), q(0), q(1)]));
    }

    #[test]
    fn negative_right_hand_side() {
        let a = vec![vec![q(-1), q(1)]];
        assert!(feasible(&a, &[q(-2)]));
        let a = vec![vec![q(1), q(1)]];
        assert!(!feasible(&a, &[q(-1)]));
    }
}
