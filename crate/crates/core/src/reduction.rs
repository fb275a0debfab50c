//! Identity-to-uniformity reduction.
//!
//! Maps samples of `p` on `[n]` to samples on `[6n]` using only the explicit
//! reference distribution `q`:
//!
//! 1. mix: keep the sample with probability 1/2, otherwise replace it by a
//!    uniform element, so the reference becomes `(q + U_n)/2` and every
//!    element carries mass at least `1/(2n)`;
//! 2. grain: element `i` owns `floor(6n * qbar_i) >= 3` cells;
//! 3. spread: element `i` lands uniformly in its own cells with probability
//!    `cells_i / (6n * qbar_i)`, otherwise uniformly in the overflow cells
//!    that no element owns.
//!
//! When `p = q` the output is exactly uniform on `[6n]`; when `p` is
//! `eps`-far from `q` the output is at least `eps/3`-far from uniform.

use rand::Rng;

use crate::dist::Pmf;

#[derive(Debug, Clone)]
pub struct IdentityReduction {
    n: usize,
    /// `6n * qbar_i`.
    scaled: Vec<f64>,
    /// First cell owned by each element.
    start: Vec<usize>,
    cells: Vec<usize>,
    overflow_start: usize,
}

impl IdentityReduction {
    pub fn new(q: &Pmf) -> Self {
        let n = q.n();
        let nf = n as f64;
        // 6n * (q_i + 1/n) / 2, written so that q_i = 0 gives exactly 3.
        let scaled: Vec<f64> = q.probs().iter().map(|&qi| 3.0 * (nf * qi + 1.0)).collect();
        let cells: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
        let mut start = Vec::with_capacity(n);
        let mut next = 0usize;
        for &c in &cells {
            start.push(next);
            next += c;
        }
        assert!(next <= 6 * n, "cell allocation exceeds the output domain");
        Self {
            n,
            scaled,
            start,
            cells,
            overflow_start: next,
        }
    }

    /// Input domain size.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Output domain size, `6n`.
    pub fn output_n(&self) -> usize {
        6 * self.n
    }

    pub fn cells(&self, i: usize) -> std::ops::Range<usize> {
        self.start[i]..self.start[i] + self.cells[i]
    }

    pub fn overflow(&self) -> std::ops::Range<usize> {
        self.overflow_start..self.output_n()
    }

    /// Probability that mixed element `i` stays in its own cells.
    pub fn stay_probability(&self, i: usize) -> f64 {
        (self.cells[i] as f64 / self.scaled[i]).min(1.0)
    }

    /// Maps one sample `i` of `[n]` to a cell of `[6n]`.
    pub fn reduce<R: Rng + ?Sized>(&self, sample: usize, rng: &mut R) -> usize {
        let i = if rng.random::<bool>() {
            sample
        } else {
            rng.random_range(0..self.n)
        };
        let overflow = self.overflow();
        let stay = rng.random::<f64>() < self.stay_probability(i);
        if stay || overflow.is_empty() {
            rng.random_range(self.cells(i))
        } else {
            rng.random_range(overflow)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, Role};

    #[test]
    fn uniform_reference_has_no_overflow() {
        let r = IdentityReduction::new(&Pmf::uniform(2).unwrap());
        assert_eq!(r.output_n(), 12);
        assert_eq!(r.cells(0), 0..6);
        assert_eq!(r.cells(1), 6..12);
        assert!(r.overflow().is_empty());
        assert_eq!(r.stay_probability(0), 1.0);
    }

    #[test]
    fn single_element_spreads_over_six_cells() {
        let r = IdentityReduction::new(&Pmf::new(vec![1.0]).unwrap());
        let mut rng = derive_stream(1, 0, 0, Role::Sample);
        let mut seen = [0u32; 6];
        for _ in 0..6000 {
            seen[r.reduce(0, &mut rng)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 850 && c < 1150), "{seen:?}");
    }

    #[test]
    fn every_element_owns_at_least_three_cells() {
        let q = Pmf::new(vec![0.0, 0.0, 0.7, 0.3]).unwrap();
        let r = IdentityReduction::new(&q);
        for i in 0..4 {
            assert!(r.cells(i).len() >= 3);
            assert!(r.stay_probability(i) <= 1.0 && r.stay_probability(i) >= 2.0 / 3.0);
        }
        assert!(r.overflow().end == 24);
    }

    #[test]
    fn outputs_stay_in_range() {
        let q = Pmf::new(vec![0.125, 0.375, 0.5]).unwrap();
        let r = IdentityReduction::new(&q);
        let mut rng = derive_stream(2, 0, 0, Role::Sample);
        for k in 0..3000 {
            assert!(r.reduce(k % 3, &mut rng) < 18);
        }
    }
}
