//! One- and two-spin density matrices.
//!
//! Basis ordering: index 0 is `|↑⟩`, index 1 is `|↓⟩`. Two-spin states use
//! `|q1 q2⟩` ordering, i.e. `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_probability, Error, Result};

pub(crate) const C0: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const C1: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const CI: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance for accepting a state as physical.
pub const STATE_TOLERANCE: f64 = 1e-10;
const TRACE_SILENT: f64 = 1e-12;
const TRACE_FATAL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Spin::Up => "up",
            Spin::Down => "down",
        }
    }
}

/// Which spin of a two-spin register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Qubit {
    First,
    Second,
}

impl Qubit {
    pub fn index(self) -> usize {
        match self {
            Qubit::First => 0,
            Qubit::Second => 1,
        }
    }

    pub fn label(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn other(self) -> Qubit {
        match self {
            Qubit::First => Qubit::Second,
            Qubit::Second => Qubit::First,
        }
    }
}

impl TryFrom<u8> for Qubit {
    type Error = Error;

    fn try_from(label: u8) -> Result<Self> {
        match label {
            1 => Ok(Qubit::First),
            2 => Ok(Qubit::Second),
            other => Err(Error::param("qubit", format!("must be 1 or 2, got {other}"))),
        }
    }
}

impl From<Qubit> for u8 {
    fn from(q: Qubit) -> u8 {
        q.label()
    }
}

/// Density matrix of one or two spin-½ particles.
#[derive(Debug, Clone, PartialEq)]
pub enum SpinState {
    Single(Matrix2<Complex64>),
    Pair(Matrix4<Complex64>),
}

/// Magnetization vector of a single spin; `(0, 0, 1)` is `|↑⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector {
        mx: 0.0,
        my: 0.0,
        mz: 0.0,
    };

    pub fn new(mx: f64, my: f64, mz: f64) -> Self {
        BlochVector { mx, my, mz }
    }

    pub fn norm(&self) -> f64 {
        (self.mx * self.mx + self.my * self.my + self.mz * self.mz).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.mx, self.my, self.mz]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        BlochVector::new(v[0], v[1], v[2])
    }
}

/// Affine map `m -> A m + b` on the Bloch vector: the general form of a
/// single-spin quantum channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochMap {
    pub linear: [[f64; 3]; 3],
    pub offset: [f64; 3],
}

impl BlochMap {
    pub const IDENTITY: BlochMap = BlochMap {
        linear: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        offset: [0.0; 3],
    };

    pub fn apply_vector(&self, v: BlochVector) -> BlochVector {
        let m = v.as_array();
        let mut out = self.offset;
        for (i, row) in self.linear.iter().enumerate() {
            out[i] += row[0] * m[0] + row[1] * m[1] + row[2] * m[2];
        }
        BlochVector::from_array(out)
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &BlochMap) -> BlochMap {
        let mut linear = [[0.0; 3]; 3];
        let mut offset = self.offset;
        for i in 0..3 {
            for j in 0..3 {
                linear[i][j] = (0..3).map(|k| self.linear[i][k] * first.linear[k][j]).sum();
                offset[i] += self.linear[i][j] * first.offset[j];
            }
        }
        BlochMap { linear, offset }
    }

    /// 4×4 Pauli transfer matrix acting on `(1, mx, my, mz)`.
    fn transfer_matrix(&self) -> [[f64; 4]; 4] {
        let mut t = [[0.0; 4]; 4];
        t[0][0] = 1.0;
        for i in 0..3 {
            t[i + 1][0] = self.offset[i];
            for j in 0..3 {
                t[i + 1][j + 1] = self.linear[i][j];
            }
        }
        t
    }
}

fn paulis() -> [Matrix2<Complex64>; 4] {
    [
        Matrix2::new(C1, C0, C0, C1),
        Matrix2::new(C0, C1, C1, C0),
        Matrix2::new(C0, -CI, CI, C0),
        Matrix2::new(C1, C0, C0, -C1),
    ]
}

pub(crate) fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

impl SpinState {
    pub fn pure_up() -> Self {
        Self::basis(Spin::Up)
    }

    pub fn pure_down() -> Self {
        Self::basis(Spin::Down)
    }

    pub fn basis(spin: Spin) -> Self {
        let mut m = Matrix2::zeros();
        m[(spin.index(), spin.index())] = C1;
        SpinState::Single(m)
    }

    /// Diagonal single-spin state `diag(p_up, 1 - p_up)`.
    pub fn mixed(p_up: f64) -> Result<Self> {
        require_probability("p_up", p_up)?;
        Ok(SpinState::Single(Matrix2::new(
            Complex64::from(p_up),
            C0,
            C0,
            Complex64::from(1.0 - p_up),
        )))
    }

    pub fn maximally_mixed() -> Self {
        SpinState::Single(Matrix2::identity() * Complex64::from(0.5))
    }

    /// Two-spin singlet `(|↑↓⟩ - |↓↑⟩)/√2`.
    pub fn singlet() -> Self {
        let mut m = Matrix4::zeros();
        m[(1, 1)] = Complex64::from(0.5);
        m[(2, 2)] = Complex64::from(0.5);
        m[(1, 2)] = Complex64::from(-0.5);
        m[(2, 1)] = Complex64::from(-0.5);
        SpinState::Pair(m)
    }

    /// Projector onto a normalized pure state vector of length 2 or 4.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::param("amplitudes", format!("norm² = {norm}, expected 1")));
        }
        match amplitudes.len() {
            2 => Ok(SpinState::Single(Matrix2::from_fn(|r, c| {
                amplitudes[r] * amplitudes[c].conj()
            }))),
            4 => Ok(SpinState::Pair(Matrix4::from_fn(|r, c| {
                amplitudes[r] * amplitudes[c].conj()
            }))),
            n => Err(Error::DimensionMismatch { expected: 4, got: n }),
        }
    }

    /// Build from a raw 2×2 matrix, enforcing the state invariants.
    pub fn from_single_matrix(m: Matrix2<Complex64>) -> Result<Self> {
        SpinState::Single(m).sanitized()
    }

    pub fn from_pair_matrix(m: Matrix4<Complex64>) -> Result<Self> {
        SpinState::Pair(m).sanitized()
    }

    pub fn dims(&self) -> usize {
        match self {
            SpinState::Single(_) => 2,
            SpinState::Pair(_) => 4,
        }
    }

    pub fn is_single(&self) -> bool {
        matches!(self, SpinState::Single(_))
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self {
            SpinState::Single(m) => m[(row, col)],
            SpinState::Pair(m) => m[(row, col)],
        }
    }

    pub fn trace(&self) -> Complex64 {
        match self {
            SpinState::Single(m) => m.trace(),
            SpinState::Pair(m) => m.trace(),
        }
    }

    pub fn single_matrix(&self) -> Result<&Matrix2<Complex64>> {
        match self {
            SpinState::Single(m) => Ok(m),
            SpinState::Pair(_) => Err(Error::DimensionMismatch { expected: 2, got: 4 }),
        }
    }

    pub fn pair_matrix(&self) -> Result<&Matrix4<Complex64>> {
        match self {
            SpinState::Pair(m) => Ok(m),
            SpinState::Single(_) => Err(Error::DimensionMismatch { expected: 4, got: 2 }),
        }
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        match self {
            SpinState::Single(m) => (m * m).trace().re,
            SpinState::Pair(m) => (m * m).trace().re,
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = match self {
            SpinState::Single(m) => m.symmetric_eigenvalues().iter().copied().collect(),
            SpinState::Pair(m) => m.symmetric_eigenvalues().iter().copied().collect(),
        };
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dims();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                worst = worst.max((self.entry(r, c) - self.entry(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Check trace, Hermiticity and positivity without modifying the state.
    pub fn check_invariants(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_SILENT || tr.im.abs() > TRACE_SILENT {
            return Err(Error::Numeric(format!("trace {tr} differs from 1")));
        }
        let herm = self.hermiticity_error();
        if herm > TRACE_SILENT {
            return Err(Error::Numeric(format!("not Hermitian (deviation {herm:e})")));
        }
        let min_ev = self.eigenvalues()[0];
        if min_ev < -STATE_TOLERANCE {
            return Err(Error::Numeric(format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(())
    }

    /// Symmetrize, renormalize small trace drift, and reject anything that
    /// looks like an integration bug.
    pub fn sanitized(self) -> Result<Self> {
        let tr = self.trace();
        if !tr.re.is_finite() || (tr.re - 1.0).abs() > TRACE_FATAL || tr.im.abs() > TRACE_FATAL {
            return Err(Error::Numeric(format!("trace drifted to {tr}")));
        }
        let herm = self.hermiticity_error();
        if herm > TRACE_FATAL {
            return Err(Error::Numeric(format!("Hermiticity lost (deviation {herm:e})")));
        }
        let scale = if (tr.re - 1.0).abs() > TRACE_SILENT {
            Complex64::from(1.0 / tr.re)
        } else {
            C1
        };
        let out = match self {
            SpinState::Single(m) => SpinState::Single((m + m.adjoint()) * (Complex64::from(0.5) * scale)),
            SpinState::Pair(m) => SpinState::Pair((m + m.adjoint()) * (Complex64::from(0.5) * scale)),
        };
        let min_ev = out.eigenvalues()[0];
        if min_ev < -STATE_TOLERANCE {
            return Err(Error::Numeric(format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(out)
    }

    /// Product state `a ⊗ b` of two single spins.
    pub fn tensor(a: &SpinState, b: &SpinState) -> Result<Self> {
        Ok(SpinState::Pair(kron2(a.single_matrix()?, b.single_matrix()?)))
    }

    /// Reduced state of `keep`, tracing out the other spin.
    pub fn partial_trace(&self, keep: Qubit) -> Result<SpinState> {
        let m = self.pair_matrix()?;
        let mut out = Matrix2::zeros();
        for r in 0..2 {
            for c in 0..2 {
                out[(r, c)] = (0..2)
                    .map(|k| match keep {
                        Qubit::First => m[(2 * r + k, 2 * c + k)],
                        Qubit::Second => m[(2 * k + r, 2 * k + c)],
                    })
                    .sum();
            }
        }
        Ok(SpinState::Single(out))
    }

    /// Probability of finding `qubit` in `|↑⟩` (for single states the qubit
    /// argument is ignored).
    pub fn probability_up(&self, qubit: Qubit) -> f64 {
        match self {
            SpinState::Single(m) => m[(0, 0)].re,
            SpinState::Pair(m) => match qubit {
                Qubit::First => m[(0, 0)].re + m[(1, 1)].re,
                Qubit::Second => m[(0, 0)].re + m[(2, 2)].re,
            },
        }
    }

    pub fn probability_down(&self, qubit: Qubit) -> f64 {
        1.0 - self.probability_up(qubit)
    }

    pub fn to_bloch(&self) -> Result<BlochVector> {
        let m = self.single_matrix()?;
        Ok(BlochVector {
            mx: 2.0 * m[(1, 0)].re,
            my: 2.0 * m[(1, 0)].im,
            mz: (m[(0, 0)] - m[(1, 1)]).re,
        })
    }

    pub fn from_bloch(v: BlochVector) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n > 1.0 + STATE_TOLERANCE {
            return Err(Error::param("bloch", format!("norm {n} exceeds 1")));
        }
        let half = 0.5;
        Ok(SpinState::Single(Matrix2::new(
            Complex64::from(half * (1.0 + v.mz)),
            Complex64::new(half * v.mx, -half * v.my),
            Complex64::new(half * v.mx, half * v.my),
            Complex64::from(half * (1.0 - v.mz)),
        )))
    }

    /// Apply a single-spin channel to `target` (ignored for single states).
    pub fn apply_bloch_map(&self, map: &BlochMap, target: Qubit) -> Result<SpinState> {
        match self {
            SpinState::Single(_) => SpinState::from_bloch_unchecked(map.apply_vector(self.to_bloch()?)),
            SpinState::Pair(m) => {
                let p = paulis();
                // c[mu][nu] = Tr(rho σ_mu ⊗ σ_nu)
                let mut coeff = [[0.0; 4]; 4];
                for (mu, row) in coeff.iter_mut().enumerate() {
                    for (nu, slot) in row.iter_mut().enumerate() {
                        *slot = (m * kron2(&p[mu], &p[nu])).trace().re;
                    }
                }
                let t = map.transfer_matrix();
                let mut mapped = [[0.0; 4]; 4];
                for mu in 0..4 {
                    for nu in 0..4 {
                        mapped[mu][nu] = match target {
                            Qubit::First => (0..4).map(|k| t[mu][k] * coeff[k][nu]).sum(),
                            Qubit::Second => (0..4).map(|k| t[nu][k] * coeff[mu][k]).sum(),
                        };
                    }
                }
                let mut out = Matrix4::zeros();
                for mu in 0..4 {
                    for nu in 0..4 {
                        if mapped[mu][nu] != 0.0 {
                            out += kron2(&p[mu], &p[nu]) * Complex64::from(0.25 * mapped[mu][nu]);
                        }
                    }
                }
                SpinState::Pair(out).sanitized()
            }
        }
    }

    fn from_bloch_unchecked(v: BlochVector) -> Result<SpinState> {
        let n = v.norm();
        if !n.is_finite() || n > 1.0 + 1e-6 {
            return Err(Error::Numeric(format!("Bloch vector norm {n} exceeds 1")));
        }
        let scale = if n > 1.0 { 1.0 / n } else { 1.0 };
        SpinState::from_bloch(BlochVector::new(v.mx * scale, v.my * scale, v.mz * scale))
    }

    /// Project `qubit` onto `spin`. Returns the outcome probability and the
    /// normalized post-measurement state, or `None` if the outcome is impossible.
    pub fn project(&self, qubit: Qubit, spin: Spin) -> Result<(f64, Option<SpinState>)> {
        let p = match spin {
            Spin::Up => self.probability_up(qubit),
            Spin::Down => self.probability_down(qubit),
        };
        if p <= 0.0 {
            return Ok((0.0, None));
        }
        let out = match self {
            SpinState::Single(_) => SpinState::basis(spin),
            SpinState::Pair(m) => {
                let keep = |i: usize| -> bool {
                    let bit = match qubit {
                        Qubit::First => i / 2,
                        Qubit::Second => i % 2,
                    };
                    bit == spin.index()
                };
                let scale = Complex64::from(1.0 / p);
                SpinState::Pair(Matrix4::from_fn(|r, c| {
                    if keep(r) && keep(c) {
                        m[(r, c)] * scale
                    } else {
                        C0
                    }
                }))
                .sanitized()?
            }
        };
        Ok((p, Some(out)))
    }

    /// Replace `qubit` by `fresh`, keeping the partner's reduced state.
    pub fn replace_qubit(&self, qubit: Qubit, fresh: &SpinState) -> Result<SpinState> {
        fresh.single_matrix()?;
        match self {
            SpinState::Single(_) => Ok(fresh.clone()),
            SpinState::Pair(_) => {
                let partner = self.partial_trace(qubit.other())?;
                match qubit {
                    Qubit::First => SpinState::tensor(fresh, &partner),
                    Qubit::Second => SpinState::tensor(&partner, fresh),
                }
            }
        }
    }

    /// Entanglement of a two-spin state (Wootters concurrence).
    pub fn concurrence(&self) -> Result<f64> {
        let rho = self.pair_matrix()?;
        let sy = paulis()[2];
        let flip = kron2(&sy, &sy);
        let rho_tilde = flip * rho.conjugate() * flip;
        let sqrt_rho = hermitian_sqrt(rho);
        let r = sqrt_rho * rho_tilde * sqrt_rho;
        let r = (r + r.adjoint()) * Complex64::from(0.5);
        let mut lambdas: Vec<f64> = r
            .symmetric_eigenvalues()
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .collect();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
    }

    /// Debug form with real and imaginary parts in row-major order.
    pub fn to_debug(&self) -> StateDebug {
        let n = self.dims();
        StateDebug {
            dims: n,
            re: (0..n).map(|r| (0..n).map(|c| self.entry(r, c).re).collect()).collect(),
            im: (0..n).map(|r| (0..n).map(|c| self.entry(r, c).im).collect()).collect(),
        }
    }

    pub fn from_debug(d: &StateDebug) -> Result<Self> {
        let get = |r: usize, c: usize| -> Result<Complex64> {
            let re = d.re.get(r).and_then(|row| row.get(c));
            let im = d.im.get(r).and_then(|row| row.get(c));
            match (re, im) {
                (Some(&re), Some(&im)) => Ok(Complex64::new(re, im)),
                _ => Err(Error::Config(format!("state matrix missing entry ({r}, {c})"))),
            }
        };
        match d.dims {
            2 => {
                let mut m = Matrix2::zeros();
                for r in 0..2 {
                    for c in 0..2 {
                        m[(r, c)] = get(r, c)?;
                    }
                }
                SpinState::from_single_matrix(m)
            }
            4 => {
                let mut m = Matrix4::zeros();
                for r in 0..4 {
                    for c in 0..4 {
                        m[(r, c)] = get(r, c)?;
                    }
                }
                SpinState::from_pair_matrix(m)
            }
            n => Err(Error::DimensionMismatch { expected: 2, got: n }),
        }
    }

    /// Elementwise maximum absolute difference.
    pub fn max_abs_diff(&self, other: &SpinState) -> f64 {
        if self.dims() != other.dims() {
            return f64::INFINITY;
        }
        let n = self.dims();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                worst = worst.max((self.entry(r, c) - other.entry(r, c)).norm());
            }
        }
        worst
    }
}

fn hermitian_sqrt(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let eig = m.symmetric_eigen();
    let mut out = Matrix4::zeros();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        out += v * v.adjoint() * Complex64::from(l.max(0.0).sqrt());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDebug {
    pub dims: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_single(theta: f64, phi: f64, r: f64) -> SpinState {
        SpinState::from_bloch(BlochVector::new(
            r * theta.sin() * phi.cos(),
            r * theta.sin() * phi.sin(),
            r * theta.cos(),
        ))
        .unwrap()
    }

    #[test]
    fn basis_states() {
        let up = SpinState::pure_up();
        assert_eq!(up.entry(0, 0), C1);
        assert_eq!(up.entry(1, 1), C0);
        assert_eq!(up.trace(), C1);
        let down = SpinState::pure_down();
        assert_eq!(down.entry(1, 1), C1);
        assert_eq!(down.entry(0, 0), C0);
    }

    #[test]
    fn mixed_examples() {
        assert_eq!(SpinState::mixed(1.0).unwrap(), SpinState::pure_up());
        let half = SpinState::mixed(0.5).unwrap();
        assert_eq!(half.to_bloch().unwrap(), BlochVector::ZERO);
        let thermal = crate::device::thermal_up_probability(0.44, 5.0, 0.3).unwrap();
        let s = SpinState::mixed(thermal).unwrap();
        assert!((s.probability_up(Qubit::First) - 0.9928).abs() < 5e-4);
        assert!(SpinState::mixed(1.1).is_err());
        assert!(SpinState::mixed(-0.1).is_err());
    }

    #[test]
    fn tensor_and_partial_trace() {
        let s = SpinState::tensor(&SpinState::pure_up(), &SpinState::pure_down()).unwrap();
        assert_eq!(s.entry(1, 1), C1);
        assert_eq!(s.trace(), C1);
        assert_eq!(s.partial_trace(Qubit::First).unwrap(), SpinState::pure_up());
        assert_eq!(s.partial_trace(Qubit::Second).unwrap(), SpinState::pure_down());
        assert!(SpinState::tensor(&s, &SpinState::pure_up()).is_err());
        assert!(SpinState::pure_up().partial_trace(Qubit::First).is_err());
    }

    #[test]
    fn singlet_marginals_are_maximally_mixed() {
        let s = SpinState::singlet();
        let half = SpinState::mixed(0.5).unwrap();
        assert!(s.partial_trace(Qubit::First).unwrap().max_abs_diff(&half) < 1e-15);
        assert!(s.partial_trace(Qubit::Second).unwrap().max_abs_diff(&half) < 1e-15);
        assert!((s.concurrence().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bloch_x_is_plus_state() {
        let s = SpinState::from_bloch(BlochVector::new(1.0, 0.0, 0.0)).unwrap();
        let a = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
        let plus = SpinState::from_pure(&[a, a]).unwrap();
        assert!(s.max_abs_diff(&plus) < 1e-15);
        assert_eq!(SpinState::pure_up().to_bloch().unwrap(), BlochVector::new(0.0, 0.0, 1.0));
        assert!(SpinState::from_bloch(BlochVector::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn sanitize_renormalizes_small_drift_and_rejects_large() {
        let m = Matrix2::new(Complex64::from(0.5 + 1e-9), C0, C0, Complex64::from(0.5));
        let s = SpinState::from_single_matrix(m).unwrap();
        assert!((s.trace().re - 1.0).abs() < 1e-15);
        let m = Matrix2::new(Complex64::from(0.6), C0, C0, Complex64::from(0.5));
        assert!(SpinState::from_single_matrix(m).unwrap_err().is_numeric());
        let m = Matrix2::new(Complex64::from(1.5), C0, C0, Complex64::from(-0.5));
        assert!(SpinState::from_single_matrix(m).is_err());
    }

    #[test]
    fn projection_on_pair() {
        let s = SpinState::tensor(&SpinState::pure_up(), &SpinState::mixed(0.25).unwrap()).unwrap();
        let (p, post) = s.project(Qubit::Second, Spin::Down).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
        let post = post.unwrap();
        assert_eq!(post.probability_up(Qubit::Second), 0.0);
        assert_eq!(post.probability_up(Qubit::First), 1.0);
        let (p, post) = s.project(Qubit::First, Spin::Down).unwrap();
        assert_eq!(p, 0.0);
        assert!(post.is_none());
    }

    #[test]
    fn bloch_map_on_pair_matches_single() {
        // Amplitude damping towards |↑⟩ combined with a rotation.
        let map = BlochMap {
            linear: [[0.0, -0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.25]],
            offset: [0.0, 0.0, 0.75],
        };
        let a = random_single(1.1, 0.4, 0.9);
        let b = random_single(2.0, -1.0, 0.7);
        let pair = SpinState::tensor(&a, &b).unwrap();
        let mapped = pair.apply_bloch_map(&map, Qubit::Second).unwrap();
        let expected = SpinState::tensor(&a, &b.apply_bloch_map(&map, Qubit::First).unwrap()).unwrap();
        assert!(mapped.max_abs_diff(&expected) < 1e-14);
        let mapped = pair.apply_bloch_map(&map, Qubit::First).unwrap();
        let expected = SpinState::tensor(&a.apply_bloch_map(&map, Qubit::First).unwrap(), &b).unwrap();
        assert!(mapped.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn debug_form_round_trips() {
        let s = SpinState::tensor(&random_single(0.3, 0.2, 1.0), &random_single(2.0, 1.0, 0.5)).unwrap();
        let text = serde_json::to_string(&s.to_debug()).unwrap();
        let back: StateDebug = serde_json::from_str(&text).unwrap();
        let restored = SpinState::from_debug(&back).unwrap();
        assert!(restored.max_abs_diff(&s) < 1e-15);
    }

    proptest! {
        #[test]
        fn bloch_round_trip(theta in 0.0f64..std::f64::consts::PI, phi in -3.2f64..3.2, r in 0.0f64..1.0) {
            let s = random_single(theta, phi, r);
            let v = s.to_bloch().unwrap();
            let back = SpinState::from_bloch(v).unwrap();
            prop_assert!(back.max_abs_diff(&s) < 1e-12);
            prop_assert!(v.norm() <= 1.0 + 1e-10);
            s.check_invariants().unwrap();
        }

        #[test]
        fn tensor_marginals_recover_factors(
            t1 in 0.0f64..std::f64::consts::PI, p1 in -3.2f64..3.2, r1 in 0.0f64..1.0,
            t2 in 0.0f64..std::f64::consts::PI, p2 in -3.2f64..3.2, r2 in 0.0f64..1.0,
        ) {
            let a = random_single(t1, p1, r1);
            let b = random_single(t2, p2, r2);
            let pair = SpinState::tensor(&a, &b).unwrap();
            pair.check_invariants().unwrap();
            prop_assert!(pair.partial_trace(Qubit::First).unwrap().max_abs_diff(&a) < 1e-14);
            prop_assert!(pair.partial_trace(Qubit::Second).unwrap().max_abs_diff(&b) < 1e-14);
            let up = pair.probability_up(Qubit::First);
            prop_assert!((up + pair.probability_down(Qubit::First) - 1.0).abs() == 0.0);
        }

        #[test]
        fn pure_state_norm_is_one(theta in 0.0f64..std::f64::consts::PI, phi in -3.2f64..3.2) {
            let v = random_single(theta, phi, 1.0).to_bloch().unwrap();
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }
}
