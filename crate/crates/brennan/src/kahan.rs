//! Compensated (Neumaier) summation.
//!
//! Shell sums mix millions of terms spanning many orders of magnitude;
//! carrying the running compensation bounds the accumulation error
//! independently of the term count.

/// Neumaier variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Merges another accumulator; used for the deterministic reduction
    /// over subtree totals in a fixed order.
    pub fn merge(&mut self, other: &Compensated) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
