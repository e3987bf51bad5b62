use std::collections::HashSet;

use serde::Serialize;

use super::LocusError;

pub const MIN_POINTS: usize = 50;
pub const DEFAULT_SCALES: usize = 8;
pub const DEFAULT_RATIO: f64 = 2.0;

/// Scales whose box count exceeds `points / SATURATION` are dropped from the
/// fit: at those resolutions most occupied boxes hold a single sample and the
/// count measures the sample size rather than the set.
const SATURATION: f64 = 4.0;

/// Clouds narrower than this (relative to their coordinate magnitude) are
/// treated as a single point.
const RESOLUTION_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub estimate: f64,
    pub fit_r2: f64,
    /// `(ε, N(ε))` for every scale of the ladder.
    pub per_scale_counts: Vec<(f64, usize)>,
    /// How many of the scales entered the least-squares fit.
    pub scales_used: usize,
}

/// The default ladder: `count` scales with ratio `ratio`, the coarsest being a
/// quarter of the cloud's largest extent.
pub fn default_scales(extent: f64) -> Vec<f64> {
    (0..DEFAULT_SCALES).map(|k| extent / 4.0 / DEFAULT_RATIO.powi(k as i32)).collect()
}

/// Grid offsets, as fractions of `ε` along the diagonal, tried at each scale.
const OFFSETS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

fn count_boxes(points: &[Vec<f64>], origin: &[f64], eps: f64) -> usize {
    OFFSETS
        .iter()
        .map(|shift| {
            let mut seen: HashSet<Vec<i64>> = HashSet::with_capacity(points.len());
            for p in points {
                let key = p.iter().zip(origin).map(|(v, o)| ((v - o) / eps + shift).floor() as i64).collect();
                seen.insert(key);
            }
            seen.len()
        })
        .min()
        .unwrap_or(0)
}

/// Least-squares slope and coefficient of determination.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, 1.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// Box-counting dimension: the slope of `log N(ε)` against `log(1/ε)`.
///
/// `N(ε)` is the smallest occupied-box count over a few shifted grids.
/// `scales` defaults to [`default_scales`] of the cloud's bounding-box extent.
/// Scales at which the count saturates towards the sample size are excluded
/// from the fit (at least the two coarsest scales are always kept).
pub fn box_counting_dimension(points: &[Vec<f64>], scales: Option<&[f64]>) -> Result<DimensionEstimate, LocusError> {
    if points.len() < MIN_POINTS {
        return Err(LocusError::TooFewPoints { got: points.len(), needed: MIN_POINTS });
    }
    let dim = points[0].len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let mut magnitude: f64 = 1.0;
    for p in points {
        for (k, &v) in p.iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
            magnitude = magnitude.max(v.abs());
        }
    }
    let extent = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);

    let ladder: Vec<f64> = match scales {
        Some(s) => s.to_vec(),
        None if extent <= RESOLUTION_FLOOR * magnitude => {
            return Ok(DimensionEstimate { estimate: 0.0, fit_r2: 1.0, per_scale_counts: Vec::new(), scales_used: 0 });
        }
        None => default_scales(extent),
    };

    let counts: Vec<(f64, usize)> = ladder.iter().map(|&eps| (eps, count_boxes(points, &lo, eps))).collect();
    let limit = points.len() as f64 / SATURATION;
    let mut used: Vec<(f64, usize)> = counts.iter().copied().filter(|&(_, c)| c as f64 <= limit).collect();
    if used.len() < 2 {
        used = counts.iter().copied().take(2).collect();
    }
    let xs: Vec<f64> = used.iter().map(|(e, _)| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|(_, c)| (*c as f64).ln()).collect();
    let (slope, r2) = if xs.len() >= 2 { linear_fit(&xs, &ys) } else { (0.0, 1.0) };
    Ok(DimensionEstimate { estimate: slope, fit_r2: r2, per_scale_counts: counts, scales_used: used.len() })
}
