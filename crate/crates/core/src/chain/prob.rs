use crate::error::{Error, Result};
use crate::real::{log_sum_exp, Real};

/// Distribution over chain states, kept in the log domain with a normalized
/// linear view alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector<T> {
    log_probs: Vec<T>,
    probs: Vec<T>,
}

impl<T: Real> ProbVector<T> {
    /// Normalizes arbitrary log weights.
    pub fn from_log_weights(mut log_w: Vec<T>) -> Self {
        let z = log_sum_exp(&log_w);
        for x in &mut log_w {
            *x -= z;
        }
        let probs = log_w.iter().map(|x| x.exp()).collect();
        Self {
            log_probs: log_w,
            probs,
        }
    }

    /// Normalizes nonnegative linear weights.
    pub fn from_weights(w: &[T]) -> Result<Self> {
        if w.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
            return Err(Error::OutOfRange {
                what: "probability weight",
                detail: "weights must be finite and nonnegative".into(),
            });
        }
        let total: T = w.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::Degenerate("all weights are zero".into()));
        }
        let probs: Vec<T> = w.iter().map(|&x| x / total).collect();
        let log_probs = probs.iter().map(|x| x.ln()).collect();
        Ok(Self { log_probs, probs })
    }

    pub fn point_mass(len: usize, at: usize) -> Result<Self> {
        if at >= len {
            return Err(Error::OutOfRange {
                what: "state index",
                detail: format!("{at} >= {len}"),
            });
        }
        let mut log_probs = vec![T::neg_infinity(); len];
        log_probs[at] = T::zero();
        let mut probs = vec![T::zero(); len];
        probs[at] = T::one();
        Ok(Self { log_probs, probs })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    #[inline]
    pub fn log_probs(&self) -> &[T] {
        &self.log_probs
    }

    /// Mass of the index range `lo..=hi`.
    pub fn mass(&self, lo: usize, hi: usize) -> T {
        self.probs[lo..=hi.min(self.len() - 1)].iter().copied().sum()
    }

    /// Total-variation distance `½ Σ |a - b|`.
    pub fn tv(&self, other: &[T]) -> T {
        total_variation(&self.probs, other)
    }
}

pub(crate) fn total_variation<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let s: T = a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum();
    (T::of(0.5) * s).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_log_weights() {
        let v = ProbVector::from_log_weights(vec![1000.0f64, 1000.0 + 2f64.ln()]);
        assert!((v.probs()[0] - 1.0 / 3.0).abs() < 1e-12, "{:?}", v.probs());
        assert!((v.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(ProbVector::<f64>::from_weights(&[1.0, -1.0]).is_err());
        assert!(ProbVector::<f64>::from_weights(&[0.0, 0.0]).is_err());
        assert!(ProbVector::<f64>::point_mass(3, 3).is_err());
    }

    #[test]
    fn tv_of_disjoint_point_masses_is_one() {
        let a = ProbVector::<f64>::point_mass(4, 0).unwrap();
        let b = ProbVector::<f64>::point_mass(4, 3).unwrap();
        assert_eq!(a.tv(b.probs()), 1.0);
        assert_eq!(a.tv(a.probs()), 0.0);
    }
}
