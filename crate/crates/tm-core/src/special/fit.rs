//! Least-squares extraction of expansion coefficients.
//!
//! Fits `y ~ sum_i c_i x^(+-p_i)` through scaled normal equations and
//! reports the conditioning, so callers can reject ill-posed power sets
//! instead of silently trusting garbage coefficients.

use crate::error::{CoreError, Result};
use serde::Serialize;

/// Whether the basis functions are `x^{-p}` (asymptotic tails in a large
/// variable) or `x^{+p}` (expansions in a small variable).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerDirection {
    Inverse,
    Direct,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesFit {
    pub powers: Vec<i32>,
    pub coefficients: Vec<f64>,
    /// Fitted slope of `ln |residual|` against `ln x`.
    pub residual_slope: f64,
    /// 1-norm condition estimate of the scaled Gram matrix.
    pub condition_estimate: f64,
}

/// Solve a small dense SPD-ish system by Gauss elimination with partial
/// pivoting; returns None on a vanishing pivot.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for (row, arow) in a.iter().enumerate().skip(col + 1) {
            if arow[col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (head, tail) = a.split_at_mut(row);
            let pivot_row = &head[col];
            for (dst, src) in tail[0].iter_mut().zip(pivot_row).skip(col) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

fn norm1(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    (0..n)
        .map(|j| (0..n).map(|i| m[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn fit_series(samples: &[(f64, f64)], powers: &[i32], direction: PowerDirection) -> Result<SeriesFit> {
    let k = powers.len();
    if k == 0 {
        return Err(CoreError::Domain("empty power set".into()));
    }
    if samples.len() < k + 2 {
        return Err(CoreError::Domain(format!(
            "need at least {} samples for {} powers, got {}",
            k + 2,
            k,
            samples.len()
        )));
    }
    if samples.iter().any(|s| !(s.0 > 0.0)) {
        return Err(CoreError::Domain("sample abscissae must be positive".into()));
    }
    {
        let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).any(|w| w[0] == w[1]) {
            return Err(CoreError::Domain("sample abscissae must be distinct".into()));
        }
    }
    let mut seen = powers.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(CoreError::RankDeficient {
            powers: powers.to_vec(),
        });
    }

    let m = samples.len();
    let sign = match direction {
        PowerDirection::Inverse => -1.0,
        PowerDirection::Direct => 1.0,
    };
    let design: Vec<Vec<f64>> = samples
        .iter()
        .map(|&(x, _)| powers.iter().map(|&p| x.powf(sign * p as f64)).collect())
        .collect();

    // column scaling to unit max-norm
    let scales: Vec<f64> = (0..k)
        .map(|j| {
            (0..m)
                .map(|i| design[i][j].abs())
                .fold(0.0f64, f64::max)
                .max(1e-300)
        })
        .collect();

    let mut gram = vec![vec![0.0f64; k]; k];
    let mut rhs = vec![0.0f64; k];
    for i in 0..m {
        for p in 0..k {
            let ap = design[i][p] / scales[p];
            rhs[p] += ap * samples[i].1;
            for q in 0..k {
                gram[p][q] += ap * design[i][q] / scales[q];
            }
        }
    }

    let gram_copy = gram.clone();
    let mut rhs_solve = rhs.clone();
    let scaled = solve_dense(&mut gram, &mut rhs_solve).ok_or(CoreError::RankDeficient {
        powers: powers.to_vec(),
    })?;

    // condition estimate from the explicit inverse (k is tiny here)
    let mut inv_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut a = gram_copy.clone();
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        match solve_dense(&mut a, &mut e) {
            Some(col) => inv_cols.push(col),
            None => {
                return Err(CoreError::RankDeficient {
                    powers: powers.to_vec(),
                })
            }
        }
    }
    let inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| inv_cols[j][i]).collect())
        .collect();
    let condition_estimate = norm1(&gram_copy) * norm1(&inv);

    let coefficients: Vec<f64> = scaled.iter().zip(&scales).map(|(c, s)| c / s).collect();

    // residual slope in log-log coordinates
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (i, &(x, y)) in samples.iter().enumerate() {
        let fit: f64 = (0..k).map(|j| coefficients[j] * design[i][j]).sum();
        let r = (y - fit).abs().max(1e-308);
        pts.push((x.ln(), r.ln()));
    }
    let residual_slope = slope(&pts);

    Ok(SeriesFit {
        powers: powers.to_vec(),
        coefficients,
        residual_slope,
        condition_estimate,
    })
}

/// Ordinary least-squares slope of `y` against `x`.
fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Fitted slope of `ln y` vs `ln x`; pairs with non-positive `y` are
/// clamped to the floating-point floor.
pub fn log_log_slope(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(x, y)| (x.ln(), y.abs().max(1e-308).ln()))
        .collect();
    slope(&pts)
}
