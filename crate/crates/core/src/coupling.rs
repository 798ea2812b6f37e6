//! Pulse coupling matrices.
//!
//! Entry `(i, j)` is the pulse strength an oscillator `i` receives when
//! oscillator `j` fires. All entries are non-negative and every row sum
//! must stay below the threshold gap, which rules out self-sustained
//! avalanches of unbounded size.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    // row-major: eps[i * n + j] = strength j -> i
    eps: Vec<f64>,
}

impl CouplingMatrix {
    /// All-to-all coupling of strength `eps` without self-interaction.
    pub fn homogeneous(n: usize, eps: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                requirement: "n >= 1",
            });
        }
        let mut m = vec![eps; n * n];
        for i in 0..n {
            m[i * n + i] = 0.0;
        }
        Self::from_raw(n, m)
    }

    /// Meta-oscillator reduction of a homogeneous network: cluster `i`
    /// of size `sizes[i]` sends `sizes[i] * eps` to every other cluster
    /// and `(sizes[i] - 1) * eps` to itself.
    pub fn meta(sizes: &[usize], eps: f64) -> Result<Self> {
        let n = sizes.len();
        if n == 0 || sizes.iter().any(|&a| a == 0) {
            return Err(Error::InvalidParameter {
                name: "sizes",
                value: n as f64,
                requirement: "non-empty, all sizes >= 1",
            });
        }
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = if i == j {
                    (sizes[i] as f64 - 1.0) * eps
                } else {
                    sizes[j] as f64 * eps
                };
            }
        }
        Self::from_raw(n, m)
    }

    /// Independent entries uniform on `[eps_min, eps_max]`, zero diagonal.
    pub fn random_uniform<R: Rng + ?Sized>(
        n: usize,
        eps_min: f64,
        eps_max: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0 <= eps_min && eps_min <= eps_max) {
            return Err(Error::InvalidParameter {
                name: "eps_min",
                value: eps_min,
                requirement: "0 <= eps_min <= eps_max",
            });
        }
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m[i * n + j] = rng.random_range(eps_min..=eps_max);
                }
            }
        }
        Self::from_raw(n, m)
    }

    /// Builds from explicit rows, validating non-negativity and the
    /// safety bound.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut m = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::InvalidParameter {
                    name: "rows",
                    value: row.len() as f64,
                    requirement: "square matrix",
                });
            }
            m.extend_from_slice(row);
        }
        Self::from_raw(n, m)
    }

    fn from_raw(n: usize, eps: Vec<f64>) -> Result<Self> {
        for (k, &e) in eps.iter().enumerate() {
            if !us_finite_nonneg(e) {
                return Err(Error::InvalidParameter {
                    name: "eps",
                    value: e,
                    requirement: "finite and >= 0",
                });
            }
            let _ = k;
        }
        for i in 0..n {
            let sum: f64 = eps[i * n..(i + 1) * n].iter().sum();
            if sum >= 1.0 {
                return Err(Error::CouplingUnsafe { row: i, sum });
            }
        }
        Ok(CouplingMatrix { n, eps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, receiver: usize, sender: usize) -> f64 {
        self.eps[receiver * self.n + sender]
    }

    pub fn row_sum(&self, receiver: usize) -> f64 {
        self.eps[receiver * self.n..(receiver + 1) * self.n]
            .iter()
            .sum()
    }

    /// Total input `receiver` collects when every member of `senders` fires.
    pub fn input_from(&self, receiver: usize, senders: &[usize]) -> f64 {
        senders.iter().map(|&j| self.get(receiver, j)).sum()
    }

    /// For meta/homogeneous matrices the strength a firing oscillator
    /// delivers to others is the same for every receiver; returns it, or
    /// `None` when the column is not constant off the diagonal.
    pub fn sender_strength(&self, sender: usize) -> Option<f64> {
        let mut val = None;
        for i in 0..self.n {
            if i == sender {
                continue;
            }
            let e = self.get(i, sender);
            match val {
                None => val = Some(e),
                Some(v) if (v - e).abs() > 1e-15 => return None,
                _ => {}
            }
        }
        // single-oscillator networks have no receivers
        val.or(Some(0.0))
    }
}

fn us_finite_nonneg(e: f64) -> bool {
    e.is_finite() && e >= 0.0
}
