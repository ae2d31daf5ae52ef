use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gates::{GateOp, Mat2};
use crate::error::{Error, Result};

/// Pure n-qubit state. Qubit `q` is bit `q` of the basis index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0>
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "a register needs at least one qubit");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// Wraps raw amplitudes; the length must be a power of two and the
    /// vector normalized within 1e-9.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Encoding(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let state = Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Encoding(format!("state norm^2 {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn apply_gate(&self, gate: &GateOp) -> Result<Self> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    pub fn apply_gate_mut(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let block = gate.block()?;
        self.apply_block(gate, &block);
        Ok(())
    }

    /// Applies `block` in place of the gate's own matrix, keeping the gate's
    /// wiring. Targets must already be validated.
    pub(crate) fn apply_block(&mut self, gate: &GateOp, block: &Mat2) {
        if gate.kind.is_controlled() {
            apply_controlled(&mut self.amps, gate.targets[0], gate.targets[1], block);
        } else {
            apply_single(&mut self.amps, gate.targets[0], block);
        }
    }

    /// Like [`apply_block`] but zeroes the control=|0> subspace for
    /// controlled gates, i.e. applies `|1><1| ⊗ block`.
    pub(crate) fn apply_projected_block(&mut self, gate: &GateOp, block: &Mat2) {
        if gate.kind.is_controlled() {
            let cbit = 1usize << gate.targets[0];
            for (i, a) in self.amps.iter_mut().enumerate() {
                if i & cbit == 0 {
                    *a = Complex64::new(0.0, 0.0);
                }
            }
        }
        self.apply_block(gate, block);
    }

    /// <Z_q> = Σ_i |a_i|² · (±1 by bit q of i)
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// <Z_q> for every qubit in one pass.
    pub fn expect_z_all(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n_qubits];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, zq) in z.iter_mut().enumerate() {
                if i >> q & 1 == 0 {
                    *zq += p;
                } else {
                    *zq -= p;
                }
            }
        }
        z
    }

    /// <self|other>
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }
}

/// |<a|b>|²
pub fn state_fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

pub(crate) fn apply_single(amps: &mut [Complex64], target: usize, m: &Mat2) {
    let stride = 1usize << target;
    for base in (0..amps.len()).step_by(stride << 1) {
        for i in base..base + stride {
            let j = i | stride;
            let (a, b) = (amps[i], amps[j]);
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[j] = m[1][0] * a + m[1][1] * b;
        }
    }
}

pub(crate) fn apply_controlled(amps: &mut [Complex64], control: usize, target: usize, m: &Mat2) {
    let cbit = 1usize << control;
    let stride = 1usize << target;
    for base in (0..amps.len()).step_by(stride << 1) {
        for i in base..base + stride {
            if i & cbit == 0 {
                continue;
            }
            let j = i | stride;
            let (a, b) = (amps[i], amps[j]);
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[j] = m[1][0] * a + m[1][1] * b;
        }
    }
}
