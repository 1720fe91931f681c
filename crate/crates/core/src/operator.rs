//! Eventually periodic Jacobi matrices: a finite head followed by a
//! periodic tail.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::periodic::{band_set, discriminant, BandSet, PeriodicBlock, PeriodicError};

/// Tolerance for deciding that a head entry already agrees with the tail
/// pattern. Exact comparison would misread rounding noise in reconstructed
/// coefficients as a genuine perturbation.
pub const CLASS_INDEX_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("head_a has {a} entries but head_b has {b}")]
    HeadLength { a: usize, b: usize },
    #[error("head entry {index} is invalid: {reason}")]
    HeadEntry { index: usize, reason: String },
}

/// `J` with `(a_n, b_n)` given explicitly for `n ≤ s` and by the tail block,
/// repeated with period `p`, for `n > s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct EventuallyPeriodicOperator {
    head_a: Vec<f64>,
    head_b: Vec<f64>,
    tail: PeriodicBlock,
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    head_a: Vec<f64>,
    head_b: Vec<f64>,
    tail: PeriodicBlock,
}

impl TryFrom<OperatorRepr> for EventuallyPeriodicOperator {
    type Error = OperatorError;
    fn try_from(r: OperatorRepr) -> Result<Self, Self::Error> {
        EventuallyPeriodicOperator::new(r.head_a, r.head_b, r.tail)
    }
}

impl From<EventuallyPeriodicOperator> for OperatorRepr {
    fn from(op: EventuallyPeriodicOperator) -> Self {
        OperatorRepr {
            head_a: op.head_a,
            head_b: op.head_b,
            tail: op.tail,
        }
    }
}

/// Class index `k` together with the effective head length it was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassIndex {
    pub k: usize,
    pub head_len: usize,
}

impl EventuallyPeriodicOperator {
    pub fn new(
        head_a: Vec<f64>,
        head_b: Vec<f64>,
        tail: PeriodicBlock,
    ) -> Result<Self, OperatorError> {
        if head_a.len() != head_b.len() {
            return Err(OperatorError::HeadLength {
                a: head_a.len(),
                b: head_b.len(),
            });
        }
        for (i, (&a, &b)) in head_a.iter().zip(&head_b).enumerate() {
            if !(a.is_finite() && a > 0.0) {
                return Err(OperatorError::HeadEntry {
                    index: i + 1,
                    reason: format!("a = {a} is not positive"),
                });
            }
            if !b.is_finite() {
                return Err(OperatorError::HeadEntry {
                    index: i + 1,
                    reason: format!("b = {b} is not finite"),
                });
            }
        }
        Ok(EventuallyPeriodicOperator {
            head_a,
            head_b,
            tail,
        })
    }

    /// The free Jacobi matrix `a_n = 1`, `b_n = 0`.
    pub fn free() -> Self {
        Self::periodic(PeriodicBlock::free())
    }

    pub fn periodic(tail: PeriodicBlock) -> Self {
        EventuallyPeriodicOperator {
            head_a: Vec::new(),
            head_b: Vec::new(),
            tail,
        }
    }

    pub fn head_a(&self) -> &[f64] {
        &self.head_a
    }

    pub fn head_b(&self) -> &[f64] {
        &self.head_b
    }

    pub fn tail(&self) -> &PeriodicBlock {
        &self.tail
    }

    /// Stored head length `s`.
    pub fn s(&self) -> usize {
        self.head_a.len()
    }

    pub fn p(&self) -> usize {
        self.tail.p()
    }

    /// `(a_n, b_n)` for `n ≥ 1`.
    pub fn coefficient(&self, n: usize) -> (f64, f64) {
        assert!(n >= 1, "coefficients are indexed from 1");
        let s = self.s();
        if n <= s {
            (self.head_a[n - 1], self.head_b[n - 1])
        } else {
            let j = (n - s - 1) % self.p();
            (self.tail.a()[j], self.tail.b()[j])
        }
    }

    /// First `n` coefficients as `(a, b)` vectors.
    pub fn coefficients(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        (1..=n).map(|k| self.coefficient(k)).unzip()
    }

    /// Coefficients for every integer index, with the tail pattern continued
    /// periodically to `n ≤ 0`.
    pub fn two_sided_coefficient(&self, n: i64) -> (f64, f64) {
        if n >= 1 {
            return self.coefficient(n as usize);
        }
        let p = self.p() as i64;
        let j = (n - self.s() as i64 - 1).rem_euclid(p) as usize;
        (self.tail.a()[j], self.tail.b()[j])
    }

    /// Number of head entries that actually differ from the periodic
    /// continuation, within `tol`.
    pub fn effective_head_len(&self, tol: f64) -> usize {
        let p = self.p();
        let mut s = self.s();
        while s > 0 {
            let (a, b) = self.coefficient(s);
            let (ap, bp) = self.coefficient(s + p);
            if (a - ap).abs() <= tol && (b - bp).abs() <= tol {
                s -= 1;
            } else {
                break;
            }
        }
        s
    }

    /// Class index with the default tolerance.
    pub fn class_index(&self) -> ClassIndex {
        self.class_index_with(CLASS_INDEX_TOL)
    }

    /// `k = 0` for a periodic matrix; otherwise `2s` when `a_s` breaks the
    /// pattern and `2s - 1` when only `b_s` does, with `s` the effective
    /// head length.
    pub fn class_index_with(&self, tol: f64) -> ClassIndex {
        let s = self.effective_head_len(tol);
        let k = if s == 0 {
            0
        } else {
            let (a, _) = self.coefficient(s);
            let (ap, _) = self.coefficient(s + self.p());
            if (a - ap).abs() > tol {
                2 * s
            } else {
                2 * s - 1
            }
        };
        ClassIndex { k, head_len: s }
    }

    /// Same matrix with redundant head entries moved into the tail.
    pub fn normalized(&self, tol: f64) -> Self {
        let s = self.effective_head_len(tol);
        let p = self.p();
        let (ta, tb) = (s + 1..=s + p).map(|n| self.coefficient(n)).unzip();
        EventuallyPeriodicOperator {
            head_a: self.head_a[..s].to_vec(),
            head_b: self.head_b[..s].to_vec(),
            tail: PeriodicBlock::new(ta, tb).expect("entries come from a valid block"),
        }
    }

    /// Essential spectrum of the matrix, shared with its periodic tail.
    pub fn bands(&self) -> Result<BandSet, PeriodicError> {
        band_set(&discriminant(&self.tail))
    }
}
