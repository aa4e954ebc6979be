//! Proximal operators of the group penalties and the projections behind them.

use nalgebra::DVector;
use thiserror::Error;

use crate::model::{l2_norm, ModelError, Penalty, Problem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProxError {
    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("projection radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_positive(t: f64, err: fn(f64) -> ProxError) -> Result<(), ProxError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(err(t))
    }
}

/// Block soft-thresholding `T(d, t) = d / ||d|| * max(0, ||d|| - t)`, the prox of `t ||.||_2`.
pub fn block_soft_threshold(d: &[f64], t: f64) -> Result<Vec<f64>, ProxError> {
    check_positive(t, ProxError::InvalidThreshold)?;
    let mut out = d.to_vec();
    shrink_l2_in_place(&mut out, t);
    Ok(out)
}

/// Euclidean projection of `v` onto `{z >= 0, sum z = radius}`.
///
/// Sort-based: with `u` sorted descending, the support size `k` is the largest index with
/// `u_k > (sum_{i<=k} u_i - radius) / k`, and `z = max(v - theta, 0)` for the matching
/// `theta`.
pub fn project_simplex(v: &[f64], radius: f64) -> Result<Vec<f64>, ProxError> {
    check_positive(radius, ProxError::InvalidRadius)?;
    let mut out = v.to_vec();
    project_simplex_in_place(&mut out, radius);
    Ok(out)
}

/// Euclidean projection of `c` onto the l1 ball of the given radius.
pub fn project_l1_ball(c: &[f64], radius: f64) -> Result<Vec<f64>, ProxError> {
    check_positive(radius, ProxError::InvalidRadius)?;
    let mut out = c.to_vec();
    project_l1_ball_in_place(&mut out, radius);
    Ok(out)
}

/// Prox of `t ||.||_inf`: `c - P(c)` with `P` the projection onto the l1 ball of radius `t`.
pub fn prox_linf(c: &[f64], t: f64) -> Result<Vec<f64>, ProxError> {
    check_positive(t, ProxError::InvalidThreshold)?;
    let mut out = c.to_vec();
    shrink_linf_in_place(&mut out, t);
    Ok(out)
}

/// Groupwise prox of `t * Omega~` on a replicated vector; group `s` uses threshold `t * w_s`.
///
/// The problem's `lambda` is not applied here: callers pass the full scale, e.g.
/// `mu * lambda`.
pub fn prox_penalty(d: &DVector<f64>, t: f64, problem: &Problem) -> Result<DVector<f64>, ProxError> {
    check_positive(t, ProxError::InvalidThreshold)?;
    let expected = problem.groups().replicated_len();
    if d.len() != expected {
        return Err(ModelError::DimensionMismatch {
            expected,
            got: d.len(),
        }
        .into());
    }
    let mut out = d.clone();
    prox_penalty_in_place(&mut out, t, problem);
    Ok(out)
}

pub(crate) fn prox_penalty_in_place(d: &mut DVector<f64>, t: f64, problem: &Problem) {
    let map = problem.map();
    let penalty = problem.penalty();
    let data = d.as_mut_slice();
    for (s, &w) in problem.groups().weights().iter().enumerate() {
        let threshold = t * w;
        if threshold <= 0.0 {
            continue;
        }
        let block = &mut data[map.group_range(s)];
        match penalty {
            Penalty::L1L2 => shrink_l2_in_place(block, threshold),
            Penalty::L1Inf => shrink_linf_in_place(block, threshold),
        }
    }
}

pub(crate) fn shrink_l2_in_place(block: &mut [f64], t: f64) {
    let norm = l2_norm(block);
    if norm <= t {
        block.iter_mut().for_each(|v| *v = 0.0);
    } else {
        let scale = 1.0 - t / norm;
        block.iter_mut().for_each(|v| *v *= scale);
    }
}

pub(crate) fn shrink_linf_in_place(block: &mut [f64], t: f64) {
    let l1: f64 = block.iter().map(|v| v.abs()).sum();
    if l1 <= t {
        block.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let mut proj = block.to_vec();
    project_l1_ball_in_place(&mut proj, t);
    for (b, p) in block.iter_mut().zip(proj) {
        *b -= p;
    }
}

fn project_l1_ball_in_place(c: &mut [f64], radius: f64) {
    let l1: f64 = c.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return;
    }
    let mut mags: Vec<f64> = c.iter().map(|v| v.abs()).collect();
    project_simplex_in_place(&mut mags, radius);
    for (ci, z) in c.iter_mut().zip(mags) {
        *ci = if *ci < 0.0 { -z } else if *ci > 0.0 { z } else { 0.0 };
    }
}

fn project_simplex_in_place(v: &mut [f64], radius: f64) {
    if v.is_empty() {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if u > candidate {
            theta = candidate;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroupStructure;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    // Independent oracle: solve sum_i max(v_i - theta, 0) = radius by bisection.
    fn simplex_by_bisection(v: &[f64], radius: f64) -> Vec<f64> {
        let mass = |theta: f64| v.iter().map(|x| (x - theta).max(0.0)).sum::<f64>();
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let (mut lo, mut hi) = (max - radius - 1.0, max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        v.iter().map(|x| (x - theta).max(0.0)).collect()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(block_soft_threshold(&[3.0, 4.0], 5.0).unwrap(), vec![0.0, 0.0]);
        let y = block_soft_threshold(&[3.0, 4.0], 2.5).unwrap();
        assert_relative_eq!(y[0], 1.5, epsilon = 1e-15);
        assert_relative_eq!(y[1], 2.0, epsilon = 1e-15);
        assert_eq!(block_soft_threshold(&[0.0, 0.0], 1.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(
            block_soft_threshold(&[1.0], 0.0),
            Err(ProxError::InvalidThreshold(0.0))
        );
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(project_simplex(&[3.0, 1.0], 2.0).unwrap(), vec![2.0, 0.0]);
        assert_eq!(project_simplex(&[1.0, 1.0], 2.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(project_simplex(&[5.0], 2.0).unwrap(), vec![2.0]);
        assert!(project_simplex(&[1.0], -1.0).is_err());
    }

    #[test]
    fn l1_ball_examples() {
        assert_eq!(project_l1_ball(&[0.5, -0.5], 2.0).unwrap(), vec![0.5, -0.5]);
        assert_eq!(project_l1_ball(&[3.0, 1.0], 2.0).unwrap(), vec![2.0, 0.0]);
        assert_eq!(project_l1_ball(&[-3.0, 1.0], 2.0).unwrap(), vec![-2.0, 0.0]);
    }

    #[test]
    fn linf_prox_examples() {
        assert_eq!(prox_linf(&[3.0, 1.0], 2.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(prox_linf(&[0.5, -1.0], 2.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(prox_linf(&[5.0], 2.0).unwrap(), vec![3.0]);
        assert!(prox_linf(&[5.0], f64::NAN).is_err());
    }

    fn problem_with(groups: Vec<Vec<usize>>, m: usize, penalty: Penalty) -> Problem {
        let gs = GroupStructure::new(groups, m).unwrap();
        Problem::new(DMatrix::identity(m, m), DVector::zeros(m), 1.0, penalty, gs).unwrap()
    }

    #[test]
    fn prox_penalty_on_zero_and_singletons() {
        let p = problem_with(vec![vec![0, 1], vec![1, 2]], 3, Penalty::L1L2);
        assert_eq!(prox_penalty(&DVector::zeros(4), 0.7, &p).unwrap(), DVector::zeros(4));

        let p = problem_with(vec![vec![0], vec![1], vec![2]], 3, Penalty::L1L2);
        let d = DVector::from_vec(vec![2.0, -0.5, -3.0]);
        let y = prox_penalty(&d, 1.0, &p).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 0.0, -2.0]);
        assert!(prox_penalty(&DVector::zeros(2), 1.0, &p).is_err());
    }

    #[test]
    fn zero_weight_groups_are_left_alone() {
        let gs = GroupStructure::with_weights(vec![vec![0], vec![1]], vec![0.0, 1.0], 2).unwrap();
        let p = Problem::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            1.0,
            Penalty::L1L2,
            gs,
        )
        .unwrap();
        let y = prox_penalty(&DVector::from_vec(vec![0.3, 0.3]), 1.0, &p).unwrap();
        assert_eq!(y.as_slice(), &[0.3, 0.0]);
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 1..12)
    }

    proptest! {
        #[test]
        fn simplex_matches_bisection(v in prop::collection::vec(0.0f64..5.0, 1..10), r in 0.1f64..6.0) {
            let z = project_simplex(&v, r).unwrap();
            let oracle = simplex_by_bisection(&v, r);
            prop_assert!(z.iter().all(|&x| x >= 0.0));
            prop_assert!((z.iter().sum::<f64>() - r).abs() < 1e-10);
            for (a, b) in z.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn moreau_decomposition(c in vec_strategy(), t in 0.01f64..10.0) {
            let p = prox_linf(&c, t).unwrap();
            let q = project_l1_ball(&c, t).unwrap();
            for i in 0..c.len() {
                prop_assert!((p[i] + q[i] - c[i]).abs() <= 1e-12);
            }
        }

        #[test]
        fn soft_threshold_zero_iff_inside(d in vec_strategy(), t in 0.01f64..10.0) {
            let y = block_soft_threshold(&d, t).unwrap();
            let zero = y.iter().all(|&v| v == 0.0);
            prop_assert_eq!(zero, l2_norm(&d) <= t);
        }

        #[test]
        fn prox_is_nonexpansive(a in prop::collection::vec(-5.0f64..5.0, 6), b in prop::collection::vec(-5.0f64..5.0, 6), t in 0.01f64..5.0) {
            for penalty in [Penalty::L1L2, Penalty::L1Inf] {
                let p = problem_with(vec![vec![0, 1, 2], vec![2, 3], vec![4]], 5, penalty);
                let da = DVector::from_vec(a.clone());
                let db = DVector::from_vec(b.clone());
                let pa = prox_penalty(&da, t, &p).unwrap();
                let pb = prox_penalty(&db, t, &p).unwrap();
                prop_assert!((pa - pb).norm() <= (da - db).norm() + 1e-12);
            }
        }

        #[test]
        fn linf_prox_levels_maximal_entries(c in vec_strategy(), t in 0.01f64..10.0) {
            let y = prox_linf(&c, t).unwrap();
            let l1: f64 = c.iter().map(|v| v.abs()).sum();
            if l1 > t {
                let top = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                prop_assert!(top > 0.0);
                // every clipped coordinate sits exactly at the common level
                for (yi, ci) in y.iter().zip(&c) {
                    if (ci.abs() - yi.abs()) > 1e-12 {
                        prop_assert!((yi.abs() - top).abs() < 1e-10);
                    }
                }
            }
        }
    }
}
