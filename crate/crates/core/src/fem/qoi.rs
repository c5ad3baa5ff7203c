use std::fmt;
use std::sync::Arc;

/// Smooth bump `ϑ(t) = exp(-1 / (1 - 4(t - 1/2)²))` on `(0, 1)`, zero outside.
pub fn bump(t: f64) -> f64 {
    let s = 4.0 * (t - 0.5) * (t - 0.5);
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

type Weight = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Weight `q` of the linear functional `Q(u) = ∫_U q·u`.
#[derive(Clone)]
pub struct QoISpec {
    weight: Weight,
}

impl QoISpec {
    /// `q(x) = ϑ(x1)·ϑ(2·x2)` on the undeformed lower half, zero above.
    pub fn experiment() -> Self {
        QoISpec::custom(|x| {
            if x[1] < 0.5 {
                bump(x[0]) * bump(2.0 * x[1])
            } else {
                0.0
            }
        })
    }

    pub fn zero() -> Self {
        QoISpec::custom(|_| 0.0)
    }

    pub fn custom(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        QoISpec {
            weight: Arc::new(f),
        }
    }

    #[inline]
    pub fn weight(&self, x: [f64; 2]) -> f64 {
        (self.weight)(x)
    }
}

impl Default for QoISpec {
    fn default() -> Self {
        Self::experiment()
    }
}

impl fmt::Debug for QoISpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("QoISpec")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        assert_eq!(bump(0.0), 0.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-0.3), 0.0);
        assert!((bump(0.5) - (-1f64).exp()).abs() < 1e-16);
        assert!((bump(0.2) - bump(0.8)).abs() < 1e-16);
    }

    #[test]
    fn weight_vanishes_on_upper_half_and_sides() {
        let q = QoISpec::experiment();
        assert_eq!(q.weight([0.5, 0.5]), 0.0);
        assert_eq!(q.weight([0.5, 0.75]), 0.0);
        assert_eq!(q.weight([0.0, 0.25]), 0.0);
        assert_eq!(q.weight([1.0, 0.25]), 0.0);
        assert!(q.weight([0.5, 0.25]) > 0.0);
    }
}
