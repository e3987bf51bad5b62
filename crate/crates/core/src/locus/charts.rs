use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{LocusError, LocusSample, PhiSystem};

/// A strictly increasing choice of `m` component indices out of `2m`
/// (stored zero-based, displayed one-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChartIndex(Vec<usize>);

impl ChartIndex {
    pub fn new(indices: Vec<usize>, dim: usize) -> Option<Self> {
        let increasing = indices.windows(2).all(|w| w[0] < w[1]);
        let in_range = indices.iter().all(|&i| i < dim);
        (increasing && in_range && !indices.is_empty()).then_some(ChartIndex(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for ChartIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str(")")
    }
}

impl Serialize for ChartIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `m`-subsets of `{0, …, 2m-1}` in lexicographic order.
pub fn enumerate_charts(m: usize) -> Vec<ChartIndex> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<ChartIndex>) {
        if left == 0 {
            out.push(ChartIndex(cur.clone()));
            return;
        }
        for i in start..=n - left {
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(2 * m, m));
    if m > 0 {
        rec(0, 2 * m, m, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

/// Bitmask of `charts` over the lexicographic enumeration of `m`-subsets.
/// `None` when the enumeration does not fit in 128 bits.
pub fn chart_mask(charts: &[ChartIndex], m: usize) -> Option<u128> {
    let all = enumerate_charts(m);
    if all.len() > 128 {
        return None;
    }
    let mut mask = 0u128;
    for c in charts {
        let pos = all.iter().position(|a| a == c)?;
        mask |= 1u128 << pos;
    }
    Some(mask)
}

/// Inverse of [`chart_mask`].
pub fn charts_from_mask(mask: u128, m: usize) -> Vec<ChartIndex> {
    enumerate_charts(m)
        .into_iter()
        .enumerate()
        .filter(|(k, _)| *k < 128 && mask >> k & 1 == 1)
        .map(|(_, c)| c)
        .collect()
}

/// Number of singular values above `tol · σ_max` (zero for the zero matrix).
pub fn rank_with_tolerance(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Charts `α` whose rows of `dphi` have numerical rank `m`: the `m`-th singular
/// value of the row block must exceed `tol_rank` times the largest singular
/// value of the whole `dphi`.
pub fn charts_for_jacobian(dphi: &DMatrix<f64>, m: usize, tol_rank: f64) -> Vec<ChartIndex> {
    let reference = dphi.clone().singular_values().max();
    if reference <= 0.0 || !reference.is_finite() {
        return Vec::new();
    }
    enumerate_charts(m)
        .into_iter()
        .filter(|alpha| {
            let rows: Vec<_> = alpha.indices().iter().map(|&i| dphi.row(i)).collect();
            let block = DMatrix::from_rows(&rows);
            let mut sv: Vec<f64> = block.singular_values().iter().copied().collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            sv.get(m - 1).is_some_and(|&s| s > tol_rank * reference)
        })
        .collect()
}

/// Chart memberships of a point on the locus.
pub fn chart_memberships(
    phi: &PhiSystem,
    x: &DVector<f64>,
    tol_rank: f64,
    tol_residual: f64,
) -> Result<Vec<ChartIndex>, LocusError> {
    let phi_norm = phi.phi(x)?.norm();
    if phi_norm > tol_residual {
        return Err(LocusError::NotOnLocus { phi_norm, tol_residual });
    }
    Ok(charts_for_jacobian(&phi.jacobian(x)?, phi.half_dim(), tol_rank))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverReport {
    pub sample_count: usize,
    pub certified_count: usize,
    /// Samples on the locus with a nonzero obstruction but no chart.
    pub uncovered_count: usize,
    pub charts_used: usize,
    pub chart_bound: usize,
    pub per_chart_counts: BTreeMap<String, usize>,
    pub passed: bool,
}

/// Tallies chart usage over certified samples and counts obstructed locus
/// points that no chart covers.
pub fn verify_cover(samples: &[LocusSample], m: usize) -> CoverReport {
    let mut per_chart: BTreeMap<ChartIndex, usize> = BTreeMap::new();
    let mut certified = 0;
    let mut uncovered = 0;
    for s in samples {
        if s.certified {
            certified += 1;
            for c in &s.charts {
                *per_chart.entry(c.clone()).or_default() += 1;
            }
        } else if s.on_locus && s.obstructed && s.charts.is_empty() {
            uncovered += 1;
        }
    }
    let bound = binomial(2 * m, m);
    let charts_used = per_chart.len();
    CoverReport {
        sample_count: samples.len(),
        certified_count: certified,
        uncovered_count: uncovered,
        charts_used,
        chart_bound: bound,
        per_chart_counts: per_chart.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        passed: uncovered == 0 && charts_used <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn chart_enumeration() {
        assert_eq!(binomial(2, 1), 2);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(6, 3), 20);
        let c = enumerate_charts(2);
        let shown: Vec<String> = c.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, ["(1,2)", "(1,3)", "(1,4)", "(2,3)", "(2,4)", "(3,4)"]);
        assert_eq!(enumerate_charts(3).len(), 20);
        assert!(enumerate_charts(0).is_empty());
        assert!(ChartIndex::new(vec![1, 0], 4).is_none());
        assert!(ChartIndex::new(vec![0, 4], 4).is_none());
    }

    #[test]
    fn masks_round_trip() {
        let all = enumerate_charts(2);
        let pick = vec![all[0].clone(), all[5].clone()];
        let mask = chart_mask(&pick, 2).unwrap();
        assert_eq!(mask, 0b100001);
        assert_eq!(charts_from_mask(mask, 2), pick);
        assert_eq!(chart_mask(&[], 1), Some(0));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_with_tolerance(&DMatrix::identity(4, 4), 1e-6), 4);
        assert_eq!(rank_with_tolerance(&DMatrix::zeros(3, 3), 1e-6), 0);
        assert_eq!(rank_with_tolerance(&dmatrix![1.0, 0.0; 0.0, 1e-14], 1e-6), 1);
    }

    #[test]
    fn charts_of_hand_jacobians() {
        let top = dmatrix![0.0, -2.0; 0.0, 0.0];
        assert_eq!(charts_for_jacobian(&top, 1, 1e-6), vec![ChartIndex(vec![0])]);
        let bottom = dmatrix![0.0, 0.0; 2.0, 0.0];
        assert_eq!(charts_for_jacobian(&bottom, 1, 1e-6), vec![ChartIndex(vec![1])]);
        // a row at rounding level is not a chart
        let noisy = dmatrix![1e-13, -2e-13; 2.0, 0.0];
        assert_eq!(charts_for_jacobian(&noisy, 1, 1e-6), vec![ChartIndex(vec![1])]);
        assert!(charts_for_jacobian(&DMatrix::zeros(2, 2), 1, 1e-6).is_empty());

        let plane = dmatrix![
            0.0, 0.0, 1.0, 0.0;
            0.0, 0.0, 0.0, 1.0;
            0.0, 0.0, 0.0, 0.0;
            0.0, 0.0, 0.0, 0.0
        ];
        assert_eq!(charts_for_jacobian(&plane, 2, 1e-6), vec![ChartIndex(vec![0, 1])]);
    }

    #[test]
    fn empty_cover_is_vacuous() {
        let r = verify_cover(&[], 2);
        assert!(r.passed);
        assert_eq!(r.certified_count, 0);
        assert_eq!(r.chart_bound, 6);
    }
}
