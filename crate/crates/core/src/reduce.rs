//! Ordered reductions.
//!
//! Every parallel evaluation in this crate collects per-node values in index
//! order before reducing them, so results never depend on thread scheduling.
//! Setting the reproducible flag additionally switches reductions to
//! Neumaier-compensated summation, which makes results insensitive to the
//! platform's rounding of long naive sums.

use std::sync::atomic::{AtomicBool, Ordering};

static REPRODUCIBLE: AtomicBool = AtomicBool::new(false);

/// Selects compensated summation for all subsequent reductions.
pub fn set_reproducible(on: bool) {
    REPRODUCIBLE.store(on, Ordering::Relaxed);
}

pub fn reproducible() -> bool {
    REPRODUCIBLE.load(Ordering::Relaxed)
}

/// Sums `values` in iteration order.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    if reproducible() {
        compensated_sum(values)
    } else {
        values.into_iter().sum()
    }
}

/// Component-wise sum of equally sized vectors.
pub fn sum_vectors<'a, I>(dim: usize, vectors: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if reproducible() {
        let mut acc = vec![Neumaier::default(); dim];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(v) {
                a.add(*x);
            }
        }
        acc.into_iter().map(Neumaier::value).collect()
    } else {
        let mut acc = vec![0.0; dim];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Neumaier::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    correction: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.correction += (self.sum - t) + x;
        } else {
            self.correction += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.correction
    }
}
