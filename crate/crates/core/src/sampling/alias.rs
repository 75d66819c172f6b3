use crate::error::{Error, Result};

use super::RngStream;

/// Walker/Vose alias table for O(1) categorical draws.
#[derive(Debug, Clone)]
pub struct AliasTable {
    threshold: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Builds the table from a normalized probability vector.
    pub fn new(probs: &[f64]) -> Result<Self> {
        let n = probs.len();
        if n == 0 {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
        let mut threshold = vec![1.0; n];
        let mut alias: Vec<usize> = (0..n).collect();

        let mut small = Vec::new();
        let mut large = Vec::new();
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&l), Some(&g)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            threshold[l] = scaled[l];
            alias[l] = g;
            scaled[g] = (scaled[g] + scaled[l]) - 1.0;
            if scaled[g] < 1.0 {
                small.push(g);
            } else {
                large.push(g);
            }
        }
        // Leftovers on either list are full columns up to round-off.
        Ok(AliasTable { threshold, alias })
    }

    pub fn len(&self) -> usize {
        self.threshold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.threshold.is_empty()
    }

    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let column = rng.next_index(self.threshold.len());
        let coin = rng.next_f64();
        if coin < self.threshold[column] {
            column
        } else {
            self.alias[column]
        }
    }

    /// Probability mass the table assigns to each index; reconstructs the
    /// input distribution up to round-off.
    pub fn implied_probs(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut p = vec![0.0; self.len()];
        for (i, (&t, &a)) in self.threshold.iter().zip(&self.alias).enumerate() {
            p[i] += t / n;
            p[a] += (1.0 - t) / n;
        }
        p
    }
}
