use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::channel::KrausChannel;
use super::gates::{GateOp, Mat2};
use super::state::{apply_controlled, apply_single, StateVector};
use crate::error::{Error, Result};

/// Mixed n-qubit state stored row-major as a dense 2^n x 2^n matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// |0...0><0...0|
    pub fn zero(n_qubits: usize) -> Self {
        Self::from_pure(&StateVector::zero(n_qubits))
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let amps = state.amplitudes();
        let dim = amps.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in amps {
            for c in amps {
                data.push(r * c.conj());
            }
        }
        Self {
            n_qubits: state.n_qubits(),
            data,
        }
    }

    /// Real diagonal density matrix; entries must sum to 1 and be >= 0.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let dim = probs.len();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (i, &p) in probs.iter().enumerate() {
            data[i * dim + i] = Complex64::new(p, 0.0);
        }
        Self::from_entries(data)
    }

    /// Validates Hermiticity, unit trace and positivity within 1e-9.
    pub fn from_entries(data: Vec<Complex64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Format(format!(
                "{} entries do not form a 2^n x 2^n matrix",
                data.len()
            )));
        }
        let dm = Self {
            n_qubits: dim.trailing_zeros() as usize,
            data,
        };
        if dm.hermiticity_error() > 1e-9 {
            return Err(Error::Format("matrix is not Hermitian".into()));
        }
        if (dm.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::Format(format!("trace {} is not 1", dm.trace())));
        }
        if dm.min_eigenvalue() < -1e-9 {
            return Err(Error::Format("matrix is not positive semidefinite".into()));
        }
        Ok(dm)
    }

    /// Equal-weight mixture of pure states.
    pub fn mixture(states: &[StateVector]) -> Result<Self> {
        let first = states.first().ok_or(Error::Empty("state list"))?;
        let dim = first.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        let w = 1.0 / states.len() as f64;
        for s in states {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
            let amps = s.amplitudes();
            for (r, ar) in amps.iter().enumerate() {
                let row = &mut data[r * dim..(r + 1) * dim];
                for (cell, ac) in row.iter_mut().zip(amps) {
                    *cell += ar * ac.conj() * w;
                }
            }
        }
        Ok(Self {
            n_qubits: first.n_qubits(),
            data,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entry(i, i).re).sum()
    }

    /// max |ρ_ij − conj(ρ_ji)|
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.entry(r, c) - self.entry(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |r, c| self.entry(r, c));
        // symmetrize to absorb rounding-level anti-Hermitian parts
        let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let mut vals: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    /// max |ρ_ij − σ_ij|
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
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

    /// ρ → UρU†
    pub fn apply_gate(&self, gate: &GateOp) -> Result<Self> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    pub fn apply_gate_mut(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let block = gate.block()?;
        let (control, target) = if gate.kind.is_controlled() {
            (Some(gate.targets[0]), gate.targets[1])
        } else {
            (None, gate.targets[0])
        };
        self.conjugate_by(control, target, &block);
        Ok(())
    }

    /// Two passes: rows combined pairwise by `m` (left product), then every
    /// row transformed by conj(m) over its column index (right product with m†).
    fn conjugate_by(&mut self, control: Option<usize>, target: usize, m: &Mat2) {
        let d = self.dim();
        let stride = 1usize << target;
        let cmask = control.map_or(0, |c| 1usize << c);
        for base in (0..d).step_by(stride << 1) {
            for i in base..base + stride {
                if i & cmask != cmask {
                    continue;
                }
                let j = i | stride;
                let (head, tail) = self.data.split_at_mut(j * d);
                let row_i = &mut head[i * d..(i + 1) * d];
                let row_j = &mut tail[..d];
                for (a, b) in row_i.iter_mut().zip(row_j.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = m[0][0] * x + m[0][1] * y;
                    *b = m[1][0] * x + m[1][1] * y;
                }
            }
        }
        let mc = [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]];
        for row in self.data.chunks_exact_mut(d) {
            match control {
                Some(c) => apply_controlled(row, c, target, &mc),
                None => apply_single(row, target, &mc),
            }
        }
    }

    /// ρ → Σ_k E_k ρ E_k† on one qubit.
    pub fn apply_channel(&self, channel: &KrausChannel, qubit: usize) -> Result<Self> {
        let mut out = self.clone();
        out.apply_channel_mut(channel, qubit)?;
        Ok(out)
    }

    pub fn apply_channel_mut(&mut self, channel: &KrausChannel, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let ops = channel.operators();
        if ops.len() == 1 {
            self.conjugate_by(None, qubit, &ops[0]);
            return Ok(());
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); self.data.len()];
        for op in ops {
            let mut term = self.clone();
            term.conjugate_by(None, qubit, op);
            for (a, t) in acc.iter_mut().zip(&term.data) {
                *a += t;
            }
        }
        self.data = acc;
        Ok(())
    }

    /// Tr(Z_q ρ)
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok((0..self.dim())
            .map(|i| {
                let p = self.entry(i, i).re;
                if i & bit == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum())
    }

    pub fn expect_z_all(&self) -> Vec<f64> {
        (0..self.n_qubits)
            .map(|q| self.expect_z(q).expect("qubit in range"))
            .collect()
    }

    /// <ψ|ρ|ψ> = Tr(ρ |ψ><ψ|)
    pub fn overlap_with(&self, state: &StateVector) -> Result<f64> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.dim(),
            });
        }
        let amps = state.amplitudes();
        let d = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, ar) in amps.iter().enumerate() {
            let row = &self.data[r * d..(r + 1) * d];
            let rho_psi: Complex64 = row.iter().zip(amps).map(|(x, a)| x * a).sum();
            acc += ar.conj() * rho_psi;
        }
        Ok(acc.re)
    }
}
