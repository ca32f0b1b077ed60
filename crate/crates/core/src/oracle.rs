//! Exact stationary analysis of the single-lane FCTL queue.
//!
//! The queue length at the start of green is a Markov chain. Its transition is
//! applied to whole distributions by convolving with the per-slot arrival pmf,
//! truncated at `q_max`, and iterated to a fixed point.

use thiserror::Error;

use crate::scenario::ArrivalDistribution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("unstable: green {g} does not exceed the mean arrivals per cycle {load}")]
    Unstable { g: u32, load: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("truncation overflow: {lost:e} of mass beyond q_max={q_max}; increase q_max")]
    Truncation { lost: f64, q_max: usize },
    #[error("no convergence after {iterations} iterations (total variation {tv:e})")]
    NonConvergence { iterations: usize, tv: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub q_max: usize,
    /// Largest mass allowed to fall beyond `q_max` in one transition.
    pub tail_tolerance: f64,
    /// Total-variation distance between iterates that counts as converged.
    pub convergence: f64,
    pub max_iterations: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { q_max: 512, tail_tolerance: 1e-10, convergence: 1e-12, max_iterations: 200_000 }
    }
}

/// A distribution on `0..=q_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub probabilities: Vec<f64>,
    /// Mass lost past `q_max` in the last transition.
    pub tail_mass_bound: f64,
}

impl ExactDistribution {
    pub fn point_mass(at: usize, q_max: usize) -> Self {
        let mut probabilities = vec![0.0; q_max + 1];
        probabilities[at] = 1.0;
        ExactDistribution { probabilities, tail_mass_bound: 0.0 }
    }

    pub fn q_max(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    fn normalize(&mut self) {
        let total = self.total();
        self.probabilities.iter_mut().for_each(|p| *p /= total);
    }
}

/// Per-slot arrival pmf, cut where the remaining mass is below 1e-18.
pub fn arrival_pmf(d: &ArrivalDistribution) -> Vec<f64> {
    match *d {
        ArrivalDistribution::Bernoulli { mean } => vec![1.0 - mean, mean],
        ArrivalDistribution::Poisson { mean } => {
            let mut pmf = vec![(-mean).exp()];
            let mut acc = pmf[0];
            let mut k = 0;
            while 1.0 - acc > 1e-18 && k < 10_000 {
                k += 1;
                let next = pmf[k - 1] * mean / k as f64;
                if next == 0.0 && k as f64 > mean {
                    break;
                }
                acc += next;
                pmf.push(next);
            }
            pmf
        }
    }
}

fn push_slot(from: &[f64], green: bool, pmf: &[f64], to: &mut [f64]) {
    to.iter_mut().for_each(|p| *p = 0.0);
    let q_max = to.len() - 1;
    for (x, &px) in from.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        if green && x == 0 {
            to[0] += px;
            continue;
        }
        let base = if green { x - 1 } else { x };
        for (a, &pa) in pmf.iter().enumerate() {
            let y = base + a;
            if y > q_max {
                break;
            }
            to[y] += px * pa;
        }
    }
}

fn push_slots(dist: &mut Vec<f64>, scratch: &mut Vec<f64>, green: bool, n: u32, pmf: &[f64]) {
    for _ in 0..n {
        push_slot(dist, green, pmf, scratch);
        std::mem::swap(dist, scratch);
    }
}

/// One FCTL cycle (`green` green slots then `red` red slots) applied to a
/// distribution of the queue length at cycle start.
pub fn fctl_transition(
    pi: &ExactDistribution,
    green: u32,
    red: u32,
    d: &ArrivalDistribution,
    tail_tolerance: f64,
) -> Result<ExactDistribution, OracleError> {
    let pmf = arrival_pmf(d);
    transition_with_pmf(pi, green, red, &pmf, tail_tolerance)
}

fn transition_with_pmf(
    pi: &ExactDistribution,
    green: u32,
    red: u32,
    pmf: &[f64],
    tail_tolerance: f64,
) -> Result<ExactDistribution, OracleError> {
    let mut dist = pi.probabilities.clone();
    let mut scratch = vec![0.0; dist.len()];
    push_slots(&mut dist, &mut scratch, true, green, pmf);
    push_slots(&mut dist, &mut scratch, false, red, pmf);
    let lost = (pi.total() - dist.iter().sum::<f64>()).max(0.0);
    if lost > tail_tolerance {
        return Err(OracleError::Truncation { lost, q_max: pi.q_max() });
    }
    Ok(ExactDistribution { probabilities: dist, tail_mass_bound: lost })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FctlStationary {
    /// Queue length at the start of green.
    pub cycle_start: ExactDistribution,
    /// Queue length at the end of green.
    pub end_of_green: ExactDistribution,
    pub p_empty: f64,
    pub mean: f64,
    pub iterations: usize,
}

/// Stationary end-of-green metrics of the FCTL queue with cycle `c` and
/// `green` green slots.
pub fn fctl_stationary(
    c: u32,
    green: u32,
    d: &ArrivalDistribution,
    settings: OracleSettings,
) -> Result<FctlStationary, OracleError> {
    if green == 0 || green > c {
        return Err(OracleError::InvalidSchedule(format!("need 1 ≤ g ≤ c, got g={green}, c={c}")));
    }
    let load = d.mean() * c as f64;
    if green as f64 <= load {
        return Err(OracleError::Unstable { g: green, load });
    }
    let red = c - green;
    let pmf = arrival_pmf(d);
    let mut pi = ExactDistribution::point_mass(0, settings.q_max);
    let mut tv = f64::INFINITY;
    for iteration in 1..=settings.max_iterations {
        let mut next = transition_with_pmf(&pi, green, red, &pmf, settings.tail_tolerance)?;
        next.normalize();
        tv = 0.5 * next.probabilities.iter().zip(&pi.probabilities).map(|(a, b)| (a - b).abs()).sum::<f64>();
        pi = next;
        if tv < settings.convergence {
            let mut end = pi.probabilities.clone();
            let mut scratch = vec![0.0; end.len()];
            push_slots(&mut end, &mut scratch, true, green, &pmf);
            let end_of_green = ExactDistribution { probabilities: end, tail_mass_bound: pi.tail_mass_bound };
            return Ok(FctlStationary {
                p_empty: end_of_green.probabilities[0],
                mean: end_of_green.mean(),
                cycle_start: pi,
                end_of_green,
                iterations: iteration,
            });
        }
    }
    Err(OracleError::NonConvergence { iterations: settings.max_iterations, tv })
}
