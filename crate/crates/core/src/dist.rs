//! Bucketed laws on `N* = N ∪ {∞}` and the distances between them.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Buckets `1..=cap`, then `gt-cap`, then `inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    cap: usize,
    masses: Vec<f64>,
    /// `None` for laws computed exactly rather than sampled.
    trials: Option<u64>,
}

/// Integer bucket counts; merging two histograms is exact, so parallel and
/// sequential accumulation agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    cap: usize,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(cap: usize) -> Self {
        Self { cap, counts: vec![0; cap + 2] }
    }

    pub fn record_value(&mut self, v: u64) {
        let idx = if v >= 1 && v <= self.cap as u64 { v as usize - 1 } else { self.cap };
        self.counts[idx] += 1;
    }

    pub fn record_infinity(&mut self) {
        self.counts[self.cap + 1] += 1;
    }

    pub fn merge(mut self, other: &Histogram) -> Histogram {
        assert_eq!(self.cap, other.cap);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn into_dist(self) -> Result<EmpiricalDist> {
        EmpiricalDist::from_counts(self.cap, &self.counts)
    }
}

impl EmpiricalDist {
    pub fn from_counts(cap: usize, counts: &[u64]) -> Result<Self> {
        if cap == 0 {
            return Err(Error::TooSmall { what: "cap", min: 1, got: 0 });
        }
        if counts.len() != cap + 2 {
            return Err(Error::BucketMismatch(format!("expected {} counts, got {}", cap + 2, counts.len())));
        }
        let trials: u64 = counts.iter().sum();
        if trials == 0 {
            return Err(Error::TooSmall { what: "trials", min: 1, got: 0 });
        }
        let masses = counts.iter().map(|&c| c as f64 / trials as f64).collect();
        Ok(Self { cap, masses, trials: Some(trials) })
    }

    /// An exactly known law; `masses` covers `1..=cap`, `gt-cap`, `inf`.
    pub fn from_masses(cap: usize, masses: Vec<f64>) -> Result<Self> {
        if cap == 0 {
            return Err(Error::TooSmall { what: "cap", min: 1, got: 0 });
        }
        if masses.len() != cap + 2 {
            return Err(Error::BucketMismatch(format!("expected {} masses, got {}", cap + 2, masses.len())));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 || masses.iter().any(|m| *m < 0.0) {
            return Err(Error::BucketMismatch(format!("masses do not form a probability vector (sum {total})")));
        }
        Ok(Self { cap, masses, trials: None })
    }

    /// Point mass on a single bucket index (`cap` = gt-cap, `cap + 1` = inf).
    pub fn point_mass(cap: usize, bucket: usize) -> Result<Self> {
        let mut masses = vec![0.0; cap + 2];
        *masses
            .get_mut(bucket)
            .ok_or_else(|| Error::BucketMismatch(format!("bucket {bucket} outside 0..{}", cap + 2)))? = 1.0;
        Self::from_masses(cap, masses)
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn trials(&self) -> Option<u64> {
        self.trials
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Mass of the finite value `v` (0 outside `1..=cap`).
    pub fn mass_of(&self, v: usize) -> f64 {
        if (1..=self.cap).contains(&v) {
            self.masses[v - 1]
        } else {
            0.0
        }
    }

    pub fn above_cap(&self) -> f64 {
        self.masses[self.cap]
    }

    pub fn infinity(&self) -> f64 {
        self.masses[self.cap + 1]
    }

    pub fn labels(&self) -> Vec<String> {
        (1..=self.cap)
            .map(|v| v.to_string())
            .chain(["gt-cap".to_string(), "inf".to_string()])
            .collect()
    }

    /// `1..=cap` followed by one tail bucket holding `gt-cap + inf`. Large
    /// finite values are close to ∞ in `N*`, so this is the bucketing on
    /// which finite-n laws are compared with limit laws.
    pub fn merged_tail(&self) -> Vec<f64> {
        let mut out = self.masses[..self.cap].to_vec();
        out.push(self.above_cap() + self.infinity());
        out
    }

    /// Standard error of the estimate in each bucket (0 for exact laws).
    pub fn standard_errors(&self) -> Vec<f64> {
        match self.trials {
            None => vec![0.0; self.masses.len()],
            Some(t) => self.masses.iter().map(|&p| (p * (1.0 - p) / t as f64).sqrt()).collect(),
        }
    }
}

/// `(1/2) Σ |p - q|` over `1..=cap` plus the merged tail.
pub fn tv_distance(p: &EmpiricalDist, q: &EmpiricalDist) -> Result<f64> {
    if p.cap != q.cap {
        return Err(Error::BucketMismatch(format!("cap {} vs cap {}", p.cap, q.cap)));
    }
    Ok(tv_of_vectors(&p.merged_tail(), &q.merged_tail()))
}

/// Half the L1 distance of two probability vectors of equal length.
pub fn tv_of_vectors(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Pearson statistic `Σ (observed - n p)^2 / (n p)` over cells with `p > 0`.
pub fn chi_square_statistic(observed: &[u64], probabilities: &[f64]) -> f64 {
    assert_eq!(observed.len(), probabilities.len());
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(probabilities)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

/// Upper `level` quantile of chi-square with `df` degrees of freedom.
pub fn chi_square_critical(df: u64, level: f64) -> f64 {
    if df == 0 {
        return 0.0;
    }
    ChiSquared::new(df as f64).expect("df > 0").inverse_cdf(level)
}
