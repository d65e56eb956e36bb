//! Outer color-coding loop: per-coloring scaling and median-of-means.

use alloc::vec::Vec;

use crate::hash::iteration_seed;
use crate::{Error, Result};

/// `max(1, ceil(factor * e^k * ln(1/delta) / epsilon^2))`.
pub fn compute_niter_with_factor(epsilon: f64, delta: f64, k: usize, factor: f64) -> usize {
    let n = factor * libm::exp(k as f64) * libm::log(1.0 / delta) / (epsilon * epsilon);
    let n = libm::ceil(n);
    if n.is_nan() || n < 1.0 {
        1
    } else if n >= usize::MAX as f64 {
        usize::MAX
    } else {
        n as usize
    }
}

pub fn compute_niter(epsilon: f64, delta: f64, k: usize) -> usize {
    compute_niter_with_factor(epsilon, delta, k, 1.0)
}

/// `k^k / k!`, the inverse probability that a fixed copy is colorful.
pub fn colorful_scale(k: usize) -> f64 {
    (1..=k).map(|i| k as f64 / i as f64).product()
}

pub fn scale_colorful(raw: f64, k: usize) -> f64 {
    raw * colorful_scale(k)
}

/// Group means and their median.
///
/// Groups have `n / t` values each, the first `n % t` groups one more, in
/// the order given.
pub fn median_of_means(values: &[f64], t: usize) -> Result<(Vec<f64>, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("no values to aggregate"));
    }
    if t == 0 || t > values.len() {
        return Err(Error::invalid("group count must be in 1..=number of values"));
    }
    let base = values.len() / t;
    let extra = values.len() % t;
    let mut means = Vec::with_capacity(t);
    let mut start = 0;
    for j in 0..t {
        let len = base + usize::from(j < extra);
        let group = &values[start..start + len];
        means.push(group.iter().sum::<f64>() / len as f64);
        start += len;
    }
    let mut sorted = means.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if t % 2 == 1 {
        sorted[t / 2]
    } else {
        (sorted[t / 2 - 1] + sorted[t / 2]) / 2.0
    };
    Ok((means, median))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    epsilon: f64,
    delta: f64,
    k: usize,
    niter: usize,
    groups: usize,
    seed: u64,
}

impl EstimatorConfig {
    /// Iteration count from the error target and `t = ceil(ln(1/delta))`.
    pub fn new(epsilon: f64, delta: f64, k: usize, seed: u64) -> Result<EstimatorConfig> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("epsilon must be in (0, 1)"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid("delta must be in (0, 1)"));
        }
        if k == 0 {
            return Err(Error::invalid("template must have at least one vertex"));
        }
        let niter = compute_niter(epsilon, delta, k);
        let mut config = EstimatorConfig {
            epsilon,
            delta,
            k,
            niter,
            groups: 1,
            seed,
        };
        config.groups = config.default_groups();
        Ok(config)
    }

    fn default_groups(&self) -> usize {
        let t = libm::ceil(libm::log(1.0 / self.delta)).max(1.0) as usize;
        t.min(self.niter)
    }

    /// Overrides the iteration count; the group count is re-capped.
    pub fn with_niter(mut self, niter: usize) -> Result<EstimatorConfig> {
        if niter == 0 {
            return Err(Error::invalid("iteration count must be at least 1"));
        }
        self.niter = niter;
        self.groups = self.default_groups();
        Ok(self)
    }

    pub fn with_groups(mut self, groups: usize) -> Result<EstimatorConfig> {
        if groups == 0 || groups > self.niter {
            return Err(Error::invalid("group count must be in 1..=iterations"));
        }
        self.groups = groups;
        Ok(self)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn niter(&self) -> usize {
        self.niter
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Coloring seed of iteration `i`, derivable on every worker.
    pub fn iteration_seed(&self, i: usize) -> u64 {
        iteration_seed(self.seed, i as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Scaled per-coloring estimates `C^(j)`.
    pub values: Vec<f64>,
    pub group_means: Vec<f64>,
    pub value: f64,
}

/// Runs `colorful(iteration, seed)` for every iteration, scales each result
/// and aggregates.
pub fn estimate<F>(config: &EstimatorConfig, mut colorful: F) -> Result<Estimate>
where
    F: FnMut(usize, u64) -> Result<f64>,
{
    let mut values = Vec::with_capacity(config.niter());
    for i in 0..config.niter() {
        let raw = colorful(i, config.iteration_seed(i))?;
        values.push(scale_colorful(raw, config.k()));
    }
    let (group_means, value) = median_of_means(&values, config.groups())?;
    Ok(Estimate {
        values,
        group_means,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn niter_formula() {
        assert_eq!(compute_niter(0.5, 0.1, 3), 185);
        assert_eq!(compute_niter(0.5, 0.999_999, 1), 1);
    }

    #[test]
    fn halving_epsilon_quadruples() {
        let a = compute_niter(0.4, 0.05, 4) as f64;
        let b = compute_niter(0.2, 0.05, 4) as f64;
        assert!((b / a - 4.0).abs() < 4.0 / a + 1e-9);
    }

    #[test]
    fn scaling() {
        assert_eq!(scale_colorful(6.0, 3), 27.0);
        assert!((colorful_scale(5) - 3125.0 / 120.0).abs() < 1e-12);
        assert_eq!(scale_colorful(0.0, 7), 0.0);
    }

    #[test]
    fn median_of_means_cases() {
        assert_eq!(median_of_means(&[3.0; 7], 3).unwrap().1, 3.0);
        assert_eq!(median_of_means(&[0.0, 0.0, 0.0, 100.0], 4).unwrap().1, 0.0);
        assert_eq!(median_of_means(&[1.0, 2.0, 6.0], 1).unwrap().1, 3.0);
        assert!(median_of_means(&[], 1).is_err());
        assert!(median_of_means(&[1.0], 2).is_err());
    }

    #[test]
    fn remainder_goes_to_front_groups() {
        let (means, _) = median_of_means(&[1.0, 3.0, 5.0, 10.0, 20.0], 2).unwrap();
        assert_eq!(means, [3.0, 15.0]);
    }

    #[test]
    fn config_defaults() {
        let c = EstimatorConfig::new(0.5, 0.1, 3, 7).unwrap();
        assert_eq!(c.niter(), 185);
        assert_eq!(c.groups(), 3);
        let c = c.with_niter(2).unwrap();
        assert_eq!(c.groups(), 2);
        assert!(EstimatorConfig::new(1.0, 0.1, 3, 0).is_err());
        assert!(EstimatorConfig::new(0.1, 0.0, 3, 0).is_err());
    }

    #[test]
    fn estimate_is_reproducible() {
        let c = EstimatorConfig::new(0.5, 0.5, 2, 11).unwrap().with_niter(5).unwrap();
        let run = || estimate(&c, |_, seed| Ok((seed % 7) as f64)).unwrap();
        assert_eq!(run(), run());
    }
}
