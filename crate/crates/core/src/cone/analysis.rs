//! Products of incidence matrices: Hilbert-metric contraction, unique
//! ergodicity windows and extremal rays of the limiting cone.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::induction::Trace;
use crate::scalar::ratio_to_f64;

use super::matrix::Matrix;
use super::simplex::feasible;
use super::ConeError;

/// Norm above which `‖M_0 ⋯ M_n‖ → ∞` is taken as witnessed.
pub fn default_norm_threshold() -> BigInt {
    BigInt::from(1_000_000u32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSummary {
    pub n0: usize,
    pub n1: usize,
    pub product: Matrix,
    pub norm: BigInt,
    /// Hilbert-metric diameter of the image of the positive orthant;
    /// `None` when infinite.
    pub diameter: Option<f64>,
    /// Minimum generalized-edge count over the trace.
    pub d: usize,
    /// `D − 1`, always valid.
    pub dimension_bound: usize,
    /// `D − 2`, when the norm exceeds the threshold.
    pub conditional_bound: Option<usize>,
    /// `3N − 6`, reported only.
    pub theorem_bound: i64,
}

/// `log max (x_i y_j)/(x_j y_i)` over a pair of columns.
pub fn hilbert_distance(x: &[BigInt], y: &[BigInt]) -> Option<f64> {
    let mut worst = BigRational::one();
    for i in 0..x.len() {
        for j in 0..x.len() {
            let num = &x[i] * &y[j];
            let den = &x[j] * &y[i];
            if den.is_zero() {
                if num.is_zero() {
                    continue;
                }
                return None;
            }
            let r = BigRational::new(num, den);
            if r > worst {
                worst = r;
            }
        }
    }
    let excess = worst - BigRational::one();
    Some(ratio_to_f64(&excess).ln_1p())
}

/// Largest pairwise Hilbert distance between the columns of `p`.
pub fn projective_diameter(p: &Matrix) -> Option<f64> {
    let cols: Vec<Vec<BigInt>> = (0..p.cols()).map(|j| p.column(j)).collect();
    let mut best = 0.0f64;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            best = best.max(hilbert_distance(&cols[i], &cols[j])?);
        }
    }
    Some(best)
}

pub fn cone_summary(trace: &Trace, n0: usize, n1: usize, threshold: &BigInt) -> Result<ConeSummary, ConeError> {
    if n0 >= n1 || n1 > trace.len() {
        return Err(ConeError::OutOfRange { index: n1, len: trace.len() });
    }
    let product = trace.product(n0, n1).ok_or_else(|| ConeError::Shape("inconsistent trace".into()))?;
    let norm = product.max_entry();
    let d = trace.min_ge_count();
    let dimension_bound = d.saturating_sub(1);
    let conditional_bound = (norm > *threshold).then(|| d.saturating_sub(2));
    Ok(ConeSummary {
        n0,
        n1,
        diameter: projective_diameter(&product),
        norm,
        product,
        d,
        dimension_bound,
        conditional_bound,
        theorem_bound: 3 * trace.rank() - 6,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UeVerdict {
    HoldsOnWindow,
    NotObserved,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UeReport {
    pub window: usize,
    pub d: usize,
    /// Steps `n` with `d_n = d_{n+L} = D` and `M_n ⋯ M_{n+L−1}` positive.
    pub witnesses: Vec<usize>,
    /// Steps `n` with `d_n = d_{n+L} = D`, positive or not.
    pub candidates: Vec<usize>,
    pub verdict: UeVerdict,
}

pub fn ue_criterion(trace: &Trace, window: usize) -> Result<UeReport, ConeError> {
    if window == 0 || window >= trace.len() {
        return Err(ConeError::Precondition(format!(
            "window {window} must lie in [1, {})",
            trace.len()
        )));
    }
    let d = trace.min_ge_count();
    let candidates: Vec<usize> = (0..=trace.len() - window)
        .filter(|&n| trace.ge_counts[n] == d && trace.ge_counts[n + window] == d)
        .collect();
    let witnesses: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&n| trace.product(n, n + window).is_some_and(|p| p.is_positive()))
        .collect();
    let verdict = if witnesses.is_empty() { UeVerdict::NotObserved } else { UeVerdict::HoldsOnWindow };
    Ok(UeReport { window, d, witnesses, candidates, verdict })
}

/// Reports for every window length in `1..=max_window` that fits the trace.
pub fn ue_scan(trace: &Trace, max_window: usize) -> Vec<UeReport> {
    (1..=max_window.min(trace.len().saturating_sub(1))).filter_map(|l| ue_criterion(trace, l).ok()).collect()
}

/// Vertices of `M_0 ⋯ M_{n1−1}` applied to the standard simplex, each
/// normalized to sum one.
pub fn extremal_rays(trace: &Trace, n1: usize) -> Result<Vec<Vec<BigRational>>, ConeError> {
    if n1 > trace.len() {
        return Err(ConeError::OutOfRange { index: n1, len: trace.len() });
    }
    let p = trace.product(0, n1).ok_or_else(|| ConeError::Shape("inconsistent trace".into()))?;
    let mut cols: Vec<Vec<BigRational>> = Vec::new();
    for j in 0..p.cols() {
        let col = p.column(j);
        let total: BigInt = col.iter().sum();
        if total.is_zero() {
            continue;
        }
        let v: Vec<BigRational> = col.into_iter().map(|x| BigRational::new(x, total.clone())).collect();
        if !cols.contains(&v) {
            cols.push(v);
        }
    }
    let rows = p.rows();
    let keep: Vec<bool> = (0..cols.len())
        .map(|j| {
            let others: Vec<&Vec<BigRational>> = cols.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, c)| c).collect();
            if others.is_empty() {
                return true;
            }
            let mut a: Vec<Vec<BigRational>> =
                (0..rows).map(|i| others.iter().map(|c| c[i].clone()).collect()).collect();
            a.push(vec![BigRational::one(); others.len()]);
            let mut b = cols[j].clone();
            b.push(BigRational::one());
            !feasible(&a, &b)
        })
        .collect();
    Ok(cols.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect())
}

/// Largest Hilbert distance between normalized rays; zero for one ray.
pub fn ray_spread(rays: &[Vec<BigRational>]) -> Option<f64> {
    let mut best = 0.0f64;
    for i in 0..rays.len() {
        for j in i + 1..rays.len() {
            let mut worst = BigRational::one();
            for a in 0..rays[i].len() {
                for b in 0..rays[i].len() {
                    let num = &rays[i][a] * &rays[j][b];
                    let den = &rays[i][b] * &rays[j][a];
                    if den.is_zero() {
                        if num.is_zero() {
                            continue;
                        }
                        return None;
                    }
                    worst = worst.max(num / den);
                }
            }
            best = best.max(ratio_to_f64(&(worst - BigRational::one())).ln_1p());
        }
    }
    Some(best)
}

/// `|det|` of a square product, or `None` when not square.
pub fn abs_determinant(p: &Matrix) -> Option<BigInt> {
    p.determinant().map(|d| d.abs())
}

/// Steps `n0 < n1` with `d = D` at both ends.
pub fn minimal_pairs(trace: &Trace) -> Vec<(usize, usize)> {
    let d = trace.min_ge_count();
    let at: Vec<usize> = (0..=trace.len()).filter(|&n| trace.ge_counts[n] == d).collect();
    let mut out = Vec::new();
    for (i, &a) in at.iter().enumerate() {
        for &b in &at[i + 1..] {
            out.push((a, b));
        }
    }
    out
}

pub fn to_f64_vec(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}
