use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run, ScenarioConfig};
use crate::error::{Error, Result};
use crate::plant::InitialProfile;
use crate::scalar::Real;

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram<T> {
    /// `bins + 1` ascending edges.
    pub edges: Vec<T>,
    pub counts: Vec<usize>,
}

impl<T: Real> Histogram<T> {
    /// Bins `values` over their observed range. A zero-width range puts
    /// everything into a single bin of width one.
    pub fn new(values: &[T], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Argument("histogram needs at least one bin".into()));
        }
        if values.is_empty() {
            return Err(Error::Argument("histogram of an empty sample".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("histogram sample contains non-finite values".into()));
        }
        let lo = values.iter().copied().fold(T::infinity(), T::min);
        let mut hi = values.iter().copied().fold(T::neg_infinity(), T::max);
        if hi <= lo {
            hi = lo + T::one();
        }
        let width = (hi - lo) / T::from_usize_lossy(bins);
        let edges = (0..=bins).map(|k| lo + width * T::from_usize_lossy(k)).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = ((v - lo) / width).floor().to_usize().unwrap_or(0).min(bins - 1);
            counts[k] += 1;
        }
        Ok(Self { edges, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn center(&self, k: usize) -> T {
        (self.edges[k] + self.edges[k + 1]) * T::lit(0.5)
    }

    /// Center of the fullest bin (first one on ties).
    pub fn mode(&self) -> T {
        let mut best = 0;
        for (k, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = k;
            }
        }
        self.center(best)
    }
}

/// `u0 = x² sin(n̄πx)`, `ζ0 = zeta0` for `n̄ = 1..=members`.
pub fn x2_sin_family<T: Real>(base: &ScenarioConfig<T>, members: u32, zeta0: T) -> Vec<ScenarioConfig<T>> {
    (1..=members)
        .map(|n| {
            let mut cfg = base.clone();
            cfg.initial.u0 = InitialProfile::X2Sin { n };
            cfg.initial.zeta0 = zeta0;
            cfg
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome<T> {
    /// Pooled inter-event times of the successful members, in member order.
    pub dwells: Vec<T>,
    pub histogram: Histogram<T>,
    pub members: usize,
    /// `(member index, error message)` for excluded members.
    pub failures: Vec<(usize, String)>,
}

/// Runs every member concurrently, pools the dwells and bins them.
pub fn run_batch<T: Real>(members: &[ScenarioConfig<T>], bins: usize) -> Result<BatchOutcome<T>> {
    let results: Vec<_> = members
        .par_iter()
        .map(|cfg| run(cfg).map(|(log, _)| log.events.iter().map(|e| e.dwell).collect::<Vec<_>>()))
        .collect();
    let mut dwells = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(d) => dwells.extend(d),
            Err(e) => {
                log::warn!("batch member {k} excluded: {e}");
                failures.push((k, e.to_string()));
            }
        }
    }
    let histogram = Histogram::new(&dwells, bins)?;
    Ok(BatchOutcome { dwells, histogram, members: members.len(), failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let v = [0.1f64, 0.2, 0.2, 0.3, 0.9];
        let h = Histogram::new(&v, 4).unwrap();
        assert_eq!(h.total(), 5);
        assert_eq!(h.counts, vec![4, 0, 0, 1]);
        assert!((h.mode() - 0.2).abs() < 1e-12);
        assert_eq!(h.edges.len(), 5);
        assert!((h.edges[4] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn degenerate_range() {
        let h = Histogram::new(&[1.2, 1.2], 50).unwrap();
        assert_eq!(h.counts[0], 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Histogram::<f64>::new(&[], 3).is_err());
        assert!(Histogram::new(&[1.0], 0).is_err());
        assert!(Histogram::new(&[f64::NAN], 3).is_err());
    }

    #[test]
    fn family_shapes() {
        let f = x2_sin_family(&ScenarioConfig::<f64>::paper_vi(), 3, 0.2);
        assert_eq!(f.len(), 3);
        assert_eq!(f[2].initial.u0, InitialProfile::X2Sin { n: 3 });
        assert_eq!(f[0].initial.zeta0, 0.2);
    }
}
