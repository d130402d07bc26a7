//! Exact minimization of `phi(a) = max_k (slope_k * a + intercept_k)` over an
//! interval, via the upper envelope of the lines.

/// Upper envelope of a set of lines, slopes strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperEnvelope {
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
}

impl UpperEnvelope {
    /// Builds the envelope of `slopes[k] * a + intercepts[k]` in `O(K log K)`.
    pub fn new(slopes: &[f64], intercepts: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..slopes.len()).collect();
        idx.sort_by(|&a, &b| slopes[a].total_cmp(&slopes[b]).then(intercepts[a].total_cmp(&intercepts[b])));
        let mut s: Vec<f64> = Vec::with_capacity(idx.len());
        let mut c: Vec<f64> = Vec::with_capacity(idx.len());
        for k in idx {
            let (m, b) = (slopes[k], intercepts[k]);
            // equal slopes: the later one has the larger intercept
            if s.last() == Some(&m) {
                s.pop();
                c.pop();
            }
            while s.len() >= 2 {
                let j = s.len();
                let (m1, b1, m2, b2) = (s[j - 2], c[j - 2], s[j - 1], c[j - 1]);
                // line 2 is hidden if line 3 overtakes line 1 no later than line 2 does
                if (b1 - b) * (m2 - m1) <= (b1 - b2) * (m - m1) {
                    s.pop();
                    c.pop();
                } else {
                    break;
                }
            }
            s.push(m);
            c.push(b);
        }
        Self { slopes: s, intercepts: c }
    }

    pub fn len(&self) -> usize {
        self.slopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }

    pub fn max_slope(&self) -> f64 {
        *self.slopes.last().unwrap_or(&f64::NAN)
    }

    /// Abscissae where consecutive envelope lines meet, increasing.
    pub fn breakpoints(&self) -> Vec<f64> {
        (1..self.len())
            .map(|k| (self.intercepts[k - 1] - self.intercepts[k]) / (self.slopes[k] - self.slopes[k - 1]))
            .collect()
    }

    /// `phi(a)` by direct maximization over the envelope lines.
    pub fn eval(&self, a: f64) -> f64 {
        self.slopes.iter().zip(&self.intercepts).map(|(m, b)| m * a + b).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimizer and minimum of `phi` over `[lo, hi]` (`hi` may be infinite).
    /// Returns `None` when `phi` is unbounded below on the interval.
    pub fn minimize(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        if self.is_empty() {
            return None;
        }
        if hi.is_infinite() && self.max_slope() < 0.0 {
            return None;
        }
        let mut best = (lo, self.eval(lo));
        let mut consider = |a: f64| {
            let v = self.eval(a);
            if v < best.1 {
                best = (a, v);
            }
        };
        if hi.is_finite() {
            consider(hi);
        }
        for a in self.breakpoints() {
            if a > lo && a < hi {
                consider(a);
            }
        }
        Some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_pair() {
        // Z = (2, -1), X = (1, -0.5): lines 2a - 1 and -a + 0.5
        let env = UpperEnvelope::new(&[2.0, -1.0], &[-1.0, 0.5]);
        let (a, v) = env.minimize(0.0, 1.0).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn hidden_lines_removed() {
        let env = UpperEnvelope::new(&[-1.0, 0.0, 1.0], &[0.0, -5.0, 0.0]);
        assert_eq!(env.len(), 2);
        assert_eq!(env.breakpoints(), vec![0.0]);
    }

    #[test]
    fn unbounded_cone() {
        let env = UpperEnvelope::new(&[-1.0, -2.0], &[0.0, 1.0]);
        assert!(env.minimize(0.0, f64::INFINITY).is_none());
        assert!(env.minimize(0.0, 1.0).is_some());
    }

    #[test]
    fn flat_tail() {
        let env = UpperEnvelope::new(&[-1.0, 0.0], &[3.0, 1.0]);
        let (a, v) = env.minimize(0.0, f64::INFINITY).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(a, 2.0);
    }

    #[test]
    fn envelope_equals_pointwise_max() {
        let slopes = [0.3, -1.2, 2.0, 0.3, 0.9, -0.4, 2.0];
        let inter = [0.1, 0.5, -2.0, 0.4, -0.3, 0.0, -1.0];
        let env = UpperEnvelope::new(&slopes, &inter);
        for k in 0..=400 {
            let a = -2.0 + 0.01 * k as f64;
            let direct = slopes.iter().zip(&inter).map(|(m, b)| m * a + b).fold(f64::NEG_INFINITY, f64::max);
            assert!((env.eval(a) - direct).abs() < 1e-12);
        }
    }
}
