//! Transition matrices, the delay ↔ mode bijection and mode sampling.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::DelayVector;

/// Allowed deviation of a TPM row sum from 1.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A chain mode, numbered `1..=s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mode(usize);

impl Mode {
    /// Mode with 1-based number `i`. Range is checked against a chain by
    /// the operations that take a mode.
    pub const fn new(i: usize) -> Self {
        Self(i)
    }

    pub(crate) fn from_index(index: usize) -> Self {
        Self(index + 1)
    }

    /// 1-based mode number.
    pub fn number(self) -> usize {
        self.0
    }

    /// 0-based position in the TPM and alphabet.
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A validated row-stochastic matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tpm {
    rows: Vec<Vec<f64>>,
}

impl Tpm {
    /// Checks squareness, entries in `[0, 1]` and unit row sums.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let s = rows.len();
        if s == 0 {
            return Err(Error::InvalidTpm {
                row: 0,
                reason: "matrix is empty".into(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            let row_no = i + 1;
            if row.len() != s {
                return Err(Error::InvalidTpm {
                    row: row_no,
                    reason: format!("has {} entries, expected {s}", row.len()),
                });
            }
            if let Some(&bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidTpm {
                    row: row_no,
                    reason: format!("entry {bad} outside [0, 1]"),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidTpm {
                    row: row_no,
                    reason: format!("row sums to {sum}"),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(s: usize) -> Self {
        let rows = (0..s)
            .map(|i| (0..s).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { rows }
    }

    /// `[[p, 1−p], [1−q, q]]`.
    pub fn two_state(p: f64, q: f64) -> Result<Self> {
        Self::new(vec![vec![p, 1.0 - p], vec![1.0 - q, q]])
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// `p_ij` for 0-based indices.
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// The bijection `H` between the delay alphabet and the modes: the delay
/// at alphabet position `i` (1-based) is mode `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayBijection {
    alphabet: Vec<DelayVector>,
}

impl DelayBijection {
    pub fn new(alphabet: Vec<DelayVector>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidModel("delay alphabet is empty".into()));
        }
        for (pos, d) in alphabet.iter().enumerate() {
            if let Some(first) = alphabet[..pos].iter().position(|e| e == d) {
                return Err(Error::DuplicateDelay {
                    delay: d.entries().to_vec(),
                    first,
                    second: pos,
                });
            }
        }
        Ok(Self { alphabet })
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &[DelayVector] {
        &self.alphabet
    }

    /// `H(δ)`.
    pub fn mode_of(&self, delay: &DelayVector) -> Option<Mode> {
        self.alphabet
            .iter()
            .position(|d| d == delay)
            .map(Mode::from_index)
    }

    /// `H⁻¹(i)`.
    pub fn delay_of(&self, mode: Mode) -> Result<&DelayVector> {
        self.check(mode)?;
        Ok(&self.alphabet[mode.index()])
    }

    pub fn check(&self, mode: Mode) -> Result<()> {
        if mode.number() == 0 || mode.number() > self.size() {
            return Err(Error::ModeOutOfRange {
                mode: mode.number(),
                modes: self.size(),
            });
        }
        Ok(())
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> {
        (0..self.size()).map(Mode::from_index)
    }
}

/// A TPM paired with the delay bijection.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovDelayChain {
    tpm: Tpm,
    bijection: DelayBijection,
}

impl MarkovDelayChain {
    pub fn new(tpm: Tpm, bijection: DelayBijection) -> Result<Self> {
        if tpm.size() != bijection.size() {
            return Err(Error::InvalidModel(format!(
                "TPM has {} modes but the delay alphabet has {} entries",
                tpm.size(),
                bijection.size()
            )));
        }
        Ok(Self { tpm, bijection })
    }

    pub fn tpm(&self) -> &Tpm {
        &self.tpm
    }

    pub fn bijection(&self) -> &DelayBijection {
        &self.bijection
    }

    pub fn modes(&self) -> usize {
        self.tpm.size()
    }

    /// `ℰ(D) = {(δᵢ, δⱼ) : p_ij > 0}`.
    pub fn edge_set(&self) -> BTreeSet<(DelayVector, DelayVector)> {
        let alphabet = self.bijection.alphabet();
        let mut edges = BTreeSet::new();
        for (i, di) in alphabet.iter().enumerate() {
            for (j, dj) in alphabet.iter().enumerate() {
                if self.tpm.prob(i, j) > 0.0 {
                    edges.insert((di.clone(), dj.clone()));
                }
            }
        }
        edges
    }

    /// Draws `η(k+1)` given `η(k) = mode` by inversion over the cumulative
    /// row. One uniform is consumed per call.
    pub fn sample_next<R: Rng + ?Sized>(&self, mode: Mode, rng: &mut R) -> Result<Mode> {
        self.bijection.check(mode)?;
        let u: f64 = rng.random();
        Ok(Mode::from_index(invert_row(self.tpm.row(mode.index()), u)))
    }
}

/// First column whose cumulative sum reaches `u`; zero-probability columns
/// are never selected.
pub(crate) fn invert_row(row: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (j, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_positive = j;
        if u <= cumulative {
            return j;
        }
    }
    last_positive
}
