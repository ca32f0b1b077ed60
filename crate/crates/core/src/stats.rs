//! Reported metrics: end-of-access summaries, vehicle-to-capacity ratios and
//! replication confidence intervals.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::allocation::AllocationResult;
use crate::scenario::{AllRedPolicy, LaneConfig, Mode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("empty sample set")]
    EmptySamples,
    #[error("need ≥2 replications for a confidence interval, got {0}")]
    TooFewReplications(usize),
    #[error("replications disagree on (c, lane, mode)")]
    MismatchedReplications,
}

/// Running counts of end-of-access samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleTally {
    pub count: u64,
    pub zeros: u64,
    pub sum: u64,
}

impl SampleTally {
    #[inline]
    pub fn push(&mut self, queue: u64) {
        self.count += 1;
        self.zeros += (queue == 0) as u64;
        self.sum += queue;
    }

    pub fn summary(&self, c: u32) -> Result<QueueSummary, StatsError> {
        if self.count == 0 {
            return Err(StatsError::EmptySamples);
        }
        let n = self.count as f64;
        let mean_queue = self.sum as f64 / n;
        Ok(QueueSummary {
            p_empty: self.zeros as f64 / n,
            mean_queue,
            mean_queue_norm: mean_queue / (c as f64).sqrt(),
            samples: self.count,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueSummary {
    pub p_empty: f64,
    pub mean_queue: f64,
    /// `mean_queue / √c`.
    pub mean_queue_norm: f64,
    pub samples: u64,
}

/// Fraction of empty samples, mean, and mean over √c. Warm-up must already
/// be removed.
pub fn summarize(samples: &[u64], c: u32) -> Result<QueueSummary, StatsError> {
    let mut tally = SampleTally::default();
    samples.iter().for_each(|&q| tally.push(q));
    tally.summary(c)
}

/// Per-lane ratios λc/g and their λ-weighted average.
pub fn rho(lanes: &[LaneConfig], alloc: &AllocationResult) -> (Vec<f64>, f64) {
    let c = alloc.cycle_length as f64;
    let per_lane: Vec<f64> = lanes.iter().zip(&alloc.per_lane_green).map(|(l, &g)| l.lambda() * c / g as f64).collect();
    let total: f64 = lanes.iter().map(LaneConfig::lambda).sum();
    let weighted =
        if total > 0.0 { lanes.iter().zip(&per_lane).map(|(l, r)| l.lambda() / total * r).sum() } else { 0.0 };
    (per_lane, weighted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub c: u32,
    pub lane: u32,
    pub mode: Mode,
    pub replication: u32,
    pub summary: QueueSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub c: u32,
    pub lane: u32,
    pub mode: Mode,
    pub p_empty: f64,
    pub p_empty_ci: f64,
    pub mean_queue: f64,
    pub mean_queue_ci: f64,
    pub mean_queue_norm: f64,
    pub replications: usize,
}

/// 0.975 quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64).expect("positive degrees of freedom").inverse_cdf(0.975)
}

/// Sample mean and 95% t halfwidth; values are sorted first so the result
/// does not depend on input order.
pub fn mean_and_halfwidth(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    // shifted by the first value so that identical inputs give exactly zero
    let shift = v[0];
    let (s1, s2) = v.iter().fold((0.0, 0.0), |(s1, s2), x| (s1 + (x - shift), s2 + (x - shift).powi(2)));
    let var = ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0);
    (mean, t_quantile_975(v.len() - 1) * (var / n).sqrt())
}

/// Mean over replications with 95% t-based halfwidths.
pub fn aggregate_replications(reps: &[ReplicationSummary]) -> Result<Aggregate, StatsError> {
    if reps.len() < 2 {
        return Err(StatsError::TooFewReplications(reps.len()));
    }
    let first = &reps[0];
    if reps.iter().any(|r| (r.c, r.lane, r.mode) != (first.c, first.lane, first.mode)) {
        return Err(StatsError::MismatchedReplications);
    }
    let column = |f: fn(&QueueSummary) -> f64| reps.iter().map(|r| f(&r.summary)).collect::<Vec<_>>();
    let (p_empty, p_empty_ci) = mean_and_halfwidth(&column(|s| s.p_empty));
    let (mean_queue, mean_queue_ci) = mean_and_halfwidth(&column(|s| s.mean_queue));
    let (mean_queue_norm, _) = mean_and_halfwidth(&column(|s| s.mean_queue_norm));
    Ok(Aggregate {
        c: first.c,
        lane: first.lane,
        mode: first.mode,
        p_empty,
        p_empty_ci,
        mean_queue,
        mean_queue_ci,
        mean_queue_norm,
        replications: reps.len(),
    })
}

/// One output row per (c, lane, mode).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub c: u32,
    pub lane: u32,
    pub mode: Mode,
    pub all_red_policy: AllRedPolicy,
    /// Lane budget `g_{i,c}`.
    pub g: u32,
    /// Budget of the lane's (first) phase.
    pub g_phase: u32,
    pub rho_lane: f64,
    pub rho_weighted: f64,
    pub p_empty: f64,
    pub p_empty_ci: f64,
    pub mean_queue: f64,
    pub mean_queue_ci: f64,
    pub mean_queue_norm: f64,
    pub replications: usize,
    pub cycles: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ArrivalDistribution;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn summarize_examples() {
        let s = summarize(&[0, 0, 2, 1], 4).unwrap();
        assert_eq!((s.p_empty, s.mean_queue, s.mean_queue_norm), (0.5, 0.75, 0.375));
        let s = summarize(&[0; 10], 9).unwrap();
        assert_eq!((s.p_empty, s.mean_queue, s.mean_queue_norm), (1.0, 0.0, 0.0));
        let s = summarize(&[3; 10], 9).unwrap();
        assert_eq!((s.p_empty, s.mean_queue, s.mean_queue_norm), (0.0, 3.0, 1.0));
        assert_eq!(summarize(&[], 9), Err(StatsError::EmptySamples));
    }

    #[test]
    fn rho_example_1a() {
        let lanes: Vec<_> =
            (1..=4).map(|i| LaneConfig::new(i, ArrivalDistribution::poisson(i as f64 / 11.0), 0.1)).collect();
        let alloc = AllocationResult {
            cycle_length: 110,
            per_lane_green: vec![11, 21, 31, 41],
            per_phase_budget: vec![11, 21, 31, 41],
            all_red: 6,
        };
        let (per_lane, weighted) = rho(&lanes, &alloc);
        for (i, r) in per_lane.iter().enumerate() {
            let k = 10.0 * (i + 1) as f64;
            assert_abs_diff_eq!(*r, k / (k + 1.0), epsilon = 1e-12);
        }
        let expected = 0.1 * 10.0 / 11.0 + 0.2 * 20.0 / 21.0 + 0.3 * 30.0 / 31.0 + 0.4 * 40.0 / 41.0;
        assert_abs_diff_eq!(weighted, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(weighted, 0.9620, epsilon = 5e-5);
    }

    #[test]
    fn rho_single_lane_and_boundary() {
        let lanes = [LaneConfig::new(1, ArrivalDistribution::poisson(0.5), 0.1)];
        let alloc =
            AllocationResult { cycle_length: 10, per_lane_green: vec![5], per_phase_budget: vec![5], all_red: 5 };
        let (per_lane, weighted) = rho(&lanes, &alloc);
        assert_eq!(per_lane, vec![1.0]);
        assert_eq!(weighted, per_lane[0]);
    }

    fn rep(p_empty: f64, mean_queue: f64, replication: u32) -> ReplicationSummary {
        ReplicationSummary {
            c: 110,
            lane: 1,
            mode: Mode::Actuated,
            replication,
            summary: QueueSummary { p_empty, mean_queue, mean_queue_norm: mean_queue / 110f64.sqrt(), samples: 100 },
        }
    }

    #[test]
    fn identical_replications_have_zero_halfwidth() {
        let a = aggregate_replications(&[rep(0.7, 2.0, 0), rep(0.7, 2.0, 1), rep(0.7, 2.0, 2)]).unwrap();
        assert_eq!(a.p_empty_ci, 0.0);
        assert_eq!(a.mean_queue_ci, 0.0);
    }

    #[test]
    fn two_replication_interval() {
        let a = aggregate_replications(&[rep(0.6, 1.0, 0), rep(0.8, 1.0, 1)]).unwrap();
        assert_abs_diff_eq!(a.p_empty, 0.7, epsilon = 1e-12);
        // t(0.975, 1) · s / √2 with s = 0.1414…
        let expected = 12.706204736174698 * (0.02f64).sqrt() / 2f64.sqrt();
        assert_abs_diff_eq!(a.p_empty_ci, expected, epsilon = 1e-6);
        assert_abs_diff_eq!(a.p_empty_ci, 1.27, epsilon = 5e-3);
    }

    #[test]
    fn aggregation_guards() {
        assert_eq!(aggregate_replications(&[rep(0.5, 1.0, 0)]), Err(StatsError::TooFewReplications(1)));
        let mut other = rep(0.5, 1.0, 1);
        other.lane = 2;
        assert_eq!(aggregate_replications(&[rep(0.5, 1.0, 0), other]), Err(StatsError::MismatchedReplications));
    }

    #[test]
    fn t_quantiles() {
        assert_abs_diff_eq!(t_quantile_975(1), 12.7062, epsilon = 1e-3);
        assert_abs_diff_eq!(t_quantile_975(3), 3.1824, epsilon = 1e-3);
        assert_abs_diff_eq!(t_quantile_975(7), 2.3646, epsilon = 1e-3);
    }

    proptest! {
        #[test]
        fn empty_and_positive_fractions_sum_to_one(samples in prop::collection::vec(0u64..20, 1..500)) {
            let s = summarize(&samples, 16).unwrap();
            let positive = samples.iter().filter(|&&q| q > 0).count() as f64 / samples.len() as f64;
            prop_assert_eq!(s.p_empty + positive, 1.0);
        }

        #[test]
        fn aggregation_is_permutation_invariant(
            values in prop::collection::vec((0.0f64..1.0, 0.0f64..50.0), 2..10),
            seed in any::<u64>(),
        ) {
            let reps: Vec<_> = values.iter().enumerate().map(|(i, &(p, m))| rep(p, m, i as u32)).collect();
            let mut shuffled = reps.clone();
            // deterministic Fisher–Yates driven by the seed
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(aggregate_replications(&reps).unwrap(), aggregate_replications(&shuffled).unwrap());
        }
    }
}
