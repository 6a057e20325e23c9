//! Small floating-point helpers shared by the exact modules.

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator, ascending in whatever order it yields.
pub fn stable_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `e^{-x} - (1 - x)` without cancellation for small `x`.
pub fn exp_neg_excess(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // Alternating series x^2/2 - x^3/6 + ...; terms drop below 1e-17
        // relative well within 30 terms for |x| < 0.5.
        let mut term = x * x / 2.0;
        let mut acc = CompensatedSum::new();
        for k in 3..32 {
            acc.add(term);
            term *= -x / k as f64;
            if term == 0.0 {
                break;
            }
        }
        acc.value()
    } else {
        (-x).exp_m1() + x
    }
}
