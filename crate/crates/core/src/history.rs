//! History-space states and the lifted one-step map.
//!
//! A [`History`] is a segment `φ: {−Δ,…,0} → ℝⁿ`. The public API indexes
//! slots by `θ ∈ {−Δ,…,0}` (an `isize`); storage is a dense row-major
//! buffer where slot `θ` lives at row `Δ + θ`, so the oldest value comes
//! first and `φ(0)` is the last row.
//!
//! [`DelayModel::lift_step`] realizes the map `F(φ, d)`: the new history
//! is `φ` shifted one slot towards the past with `f(φ(0), φ(−d₁), …, φ(−d_r))`
//! appended as the new `φ(0)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance for the `f(0,…,0) = 0` check at model construction.
pub const ZERO_FIXED_POINT_TOL: f64 = 1e-12;

/// A finite state segment `φ` over `{−Δ,…,0}`.
#[derive(Clone, PartialEq)]
pub struct History {
    delta: usize,
    dim: usize,
    data: Vec<f64>,
}

impl History {
    /// Builds a history from slots ordered oldest first (`θ = −Δ, …, 0`).
    pub fn from_slots(slots: &[Vec<f64>]) -> Result<Self> {
        let first = slots
            .first()
            .ok_or_else(|| Error::InvalidModel("a history needs at least one slot".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidModel(
                "state dimension must be positive".into(),
            ));
        }
        let mut data = Vec::with_capacity(slots.len() * dim);
        for (row, slot) in slots.iter().enumerate() {
            if slot.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "history slot",
                    index: row,
                    expected: dim,
                    found: slot.len(),
                });
            }
            data.extend_from_slice(slot);
        }
        Ok(Self {
            delta: slots.len() - 1,
            dim,
            data,
        })
    }

    /// Scalar (`n = 1`) history from values ordered oldest first.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        let slots: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Self::from_slots(&slots)
    }

    pub fn zeros(delta: usize, dim: usize) -> Self {
        assert!(dim > 0, "state dimension must be positive");
        Self {
            delta,
            dim,
            data: vec![0.0; (delta + 1) * dim],
        }
    }

    /// Every slot equal to `value`.
    pub fn constant(delta: usize, value: &[f64]) -> Self {
        assert!(!value.is_empty(), "state dimension must be positive");
        let mut data = Vec::with_capacity((delta + 1) * value.len());
        for _ in 0..=delta {
            data.extend_from_slice(value);
        }
        Self {
            delta,
            dim: value.len(),
            data,
        }
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Storage row of slot `θ`. Panics if `θ ∉ {−Δ,…,0}`.
    pub fn row_of(&self, theta: isize) -> usize {
        assert!(
            theta <= 0 && theta.unsigned_abs() <= self.delta,
            "theta {theta} outside {{-{},…,0}}",
            self.delta
        );
        (self.delta as isize + theta) as usize
    }

    /// `φ(θ)` for `θ ∈ {−Δ,…,0}`.
    pub fn at(&self, theta: isize) -> &[f64] {
        self.row(self.row_of(theta))
    }

    /// `φ(−lag)`, the value `lag` steps in the past.
    pub fn lagged(&self, lag: usize) -> &[f64] {
        assert!(
            lag <= self.delta,
            "lag {lag} exceeds max delay {}",
            self.delta
        );
        self.row(self.delta - lag)
    }

    /// `φ(0)`.
    pub fn current(&self) -> &[f64] {
        self.row(self.delta)
    }

    fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Slots ordered oldest first.
    pub fn slots(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// `‖φ‖∞ = max_θ ‖φ(θ)‖` with the Euclidean norm on each slot.
    pub fn sup_norm(&self) -> f64 {
        self.slots().map(norm).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Flat storage, oldest slot first.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

impl fmt::Debug for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.slots()).finish()
    }
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Delay vector `(d₁, …, d_r)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DelayVector(Vec<usize>);

impl DelayVector {
    pub fn new(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn scalar(d: usize) -> Self {
        Self(vec![d])
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for DelayVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "{:?}", self.0)
        }
    }
}

/// The right-hand side `f: (ℝⁿ)^(r+1) → ℝⁿ`.
///
/// `args[0]` is `x(k)` and `args[i]` is `x(k − dᵢ)`. The result is written
/// into `out` (length `n`).
pub trait Dynamics: Send + Sync {
    fn eval(&self, args: &[&[f64]], out: &mut [f64]);
}

impl<F> Dynamics for F
where
    F: Fn(&[&[f64]], &mut [f64]) + Send + Sync,
{
    fn eval(&self, args: &[&[f64]], out: &mut [f64]) {
        self(args, out)
    }
}

/// A delay system `x(k+1) = f(x(k), x(k−d₁(k)), …, x(k−d_r(k)))` together
/// with its admissible delay alphabet.
#[derive(Clone)]
pub struct DelayModel {
    name: String,
    n: usize,
    r: usize,
    delta: usize,
    dynamics: Arc<dyn Dynamics>,
    alphabet: Vec<DelayVector>,
}

impl fmt::Debug for DelayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DelayModel")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("r", &self.r)
            .field("delta", &self.delta)
            .field("alphabet", &self.alphabet)
            .finish()
    }
}

impl DelayModel {
    /// Validates dimensions and the alphabet and checks `f(0,…,0) = 0`.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        r: usize,
        delta: usize,
        dynamics: Arc<dyn Dynamics>,
        alphabet: Vec<DelayVector>,
    ) -> Result<Self> {
        if n == 0 || r == 0 {
            return Err(Error::InvalidModel(format!(
                "n and r must be positive (n = {n}, r = {r})"
            )));
        }
        if alphabet.is_empty() {
            return Err(Error::InvalidModel("delay alphabet is empty".into()));
        }
        for (pos, d) in alphabet.iter().enumerate() {
            if d.len() != r {
                return Err(Error::DimensionMismatch {
                    what: "delay vector",
                    index: pos,
                    expected: r,
                    found: d.len(),
                });
            }
            if let Some(&bad) = d.entries().iter().find(|&&e| e > delta) {
                return Err(Error::InvalidModel(format!(
                    "alphabet entry {pos} has delay {bad} > max delay {delta}"
                )));
            }
            if let Some(first) = alphabet[..pos].iter().position(|e| e == d) {
                return Err(Error::DuplicateDelay {
                    delay: d.entries().to_vec(),
                    first,
                    second: pos,
                });
            }
        }

        let model = Self {
            name: name.into(),
            n,
            r,
            delta,
            dynamics,
            alphabet,
        };
        let zero = vec![0.0; n];
        let args = vec![zero.as_slice(); r + 1];
        let mut out = vec![0.0; n];
        model.dynamics.eval(&args, &mut out);
        let at_zero = norm(&out);
        if !(at_zero <= ZERO_FIXED_POINT_TOL) {
            return Err(Error::InvalidModel(format!(
                "f(0,…,0) must vanish, got norm {at_zero:e}"
            )));
        }
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn alphabet(&self) -> &[DelayVector] {
        &self.alphabet
    }

    pub fn contains(&self, d: &DelayVector) -> bool {
        self.alphabet.contains(d)
    }

    fn check(&self, history: &History, d: &DelayVector) -> Result<()> {
        if history.dim() != self.n {
            return Err(Error::DimensionMismatch {
                what: "history state dimension",
                index: 0,
                expected: self.n,
                found: history.dim(),
            });
        }
        if history.delta() != self.delta {
            return Err(Error::DimensionMismatch {
                what: "history length (Δ+1)",
                index: 0,
                expected: self.delta + 1,
                found: history.delta() + 1,
            });
        }
        if !self.contains(d) {
            return Err(Error::AlphabetViolation {
                delay: d.entries().to_vec(),
            });
        }
        Ok(())
    }

    fn eval_into(&self, history: &History, d: &DelayVector, out: &mut [f64]) -> Result<()> {
        let mut args: Vec<&[f64]> = Vec::with_capacity(self.r + 1);
        args.push(history.current());
        args.extend(d.entries().iter().map(|&lag| history.lagged(lag)));
        self.dynamics.eval(&args, out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFault {
                context: format!("f of model `{}` with delay {d}", self.name),
            });
        }
        Ok(())
    }

    /// `f(φ(0), φ(−d₁), …, φ(−d_r))`.
    pub fn raw_step(&self, history: &History, d: &DelayVector) -> Result<Vec<f64>> {
        self.check(history, d)?;
        let mut out = vec![0.0; self.n];
        self.eval_into(history, d, &mut out)?;
        Ok(out)
    }

    /// `F(φ, d)`: shift by one slot and append `f(…)` as the new `φ(0)`.
    pub fn lift_step(&self, phi: &History, d: &DelayVector) -> Result<History> {
        let mut next = phi.clone();
        self.lift_step_into(phi, d, &mut next)?;
        Ok(next)
    }

    /// Buffer-reusing form of [`lift_step`](Self::lift_step). `out` must have
    /// the same shape as `phi`; it is fully overwritten.
    pub fn lift_step_into(&self, phi: &History, d: &DelayVector, out: &mut History) -> Result<()> {
        self.check(phi, d)?;
        if out.dim != phi.dim || out.delta != phi.delta {
            return Err(Error::DimensionMismatch {
                what: "output history",
                index: 0,
                expected: phi.data.len(),
                found: out.data.len(),
            });
        }
        let n = self.n;
        let mut head = vec![0.0; n];
        self.eval_into(phi, d, &mut head)?;
        out.data[..phi.data.len() - n].copy_from_slice(&phi.data[n..]);
        let tail = out.data.len() - n;
        out.data[tail..].copy_from_slice(&head);
        Ok(())
    }
}
