/// One-pass mean / variance / extrema (Welford).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the running mean.
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for RunningStats {
    fn default() -> Self {
        RunningStats {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn population_variance(&self) -> Option<f64> {
        (self.count > 0).then(|| (self.m2 / self.count as f64).max(0.0))
    }

    pub fn population_std(&self) -> Option<f64> {
        self.population_variance().map(f64::sqrt)
    }

    /// Coefficient of variation; needs two samples and a positive mean.
    pub fn cov(&self) -> Option<f64> {
        if self.count < 2 || self.mean <= 0.0 {
            return None;
        }
        self.population_std().map(|s| s / self.mean)
    }

    /// `(max - min) / min`.
    pub fn norm_range(&self) -> Option<f64> {
        (self.count > 0 && self.min > 0.0).then(|| (self.max - self.min) / self.min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn of(xs: &[f64]) -> RunningStats {
        let mut s = RunningStats::default();
        xs.iter().for_each(|&x| s.push(x));
        s
    }

    #[test]
    fn constant_series() {
        let s = of(&[0.010, 0.010, 0.010]);
        assert!((s.mean - 0.010).abs() < 1e-15);
        assert_eq!(s.population_variance(), Some(0.0));
        assert_eq!((s.min, s.max), (0.010, 0.010));
        assert_eq!(s.cov(), Some(0.0));
    }

    #[test]
    fn three_point_series() {
        let s = of(&[0.020, 0.030, 0.040]);
        let batch_std = ((0.01f64.powi(2) * 2.0) / 3.0).sqrt();
        assert!((s.mean - 0.030).abs() < 1e-15);
        assert!((s.population_std().unwrap() - batch_std).abs() < 1e-15);
        assert!((batch_std - 0.008165).abs() < 1e-6);
        assert_eq!(s.norm_range(), Some(1.0));
    }

    #[test]
    fn single_sample_is_guarded() {
        let s = of(&[0.050]);
        assert_eq!(s.cov(), None);
        assert_eq!(s.norm_range(), Some(0.0));
        assert_eq!(RunningStats::default().norm_range(), None);
    }

    proptest! {
        #[test]
        fn ordering_of_summary(xs in proptest::collection::vec(0.001f64..2.0, 1..200)) {
            let s = of(&xs);
            prop_assert!(s.min <= s.mean + 1e-12 && s.mean <= s.max + 1e-12);
            prop_assert!(s.m2 >= -1e-12);
        }
    }
}
