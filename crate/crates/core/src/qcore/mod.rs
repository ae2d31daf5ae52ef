//! Exact state-vector and density-matrix simulation for small registers.
//!
//! Qubit `q` corresponds to bit `q` of a computational-basis index, so
//! `|q1 q0>` with `q0` the least-significant bit. Rotations use the
//! half-angle convention `R_P(θ) = exp(-iθP/2)`. Gates are applied by
//! in-place strided kernels; a density matrix is updated by a left pass over
//! row pairs followed by a right pass over each row.

mod channel;
mod circuit;
mod density;
mod gates;
mod state;

pub use channel::{make_amplitude_damping, make_depolarizing, ChannelLabel, KrausChannel};
pub use circuit::{run_circuit, CircuitSpec, NoisePolicy, SimMode, SimState};
pub use density::DensityMatrix;
pub use gates::{
    adjoint, matmul, native_decomposition, rx_matrix, ry_matrix, rz_matrix, GateKind, GateOp, Mat2, IDENTITY, PAULI_X,
    PAULI_Y, PAULI_Z,
};
pub use state::{state_fidelity, StateVector};

pub(crate) use circuit::{run_mixed, run_pure};

use crate::error::Result;

pub fn apply_gate(state: &StateVector, gate: &GateOp) -> Result<StateVector> {
    state.apply_gate(gate)
}

pub fn apply_gate_dm(dm: &DensityMatrix, gate: &GateOp) -> Result<DensityMatrix> {
    dm.apply_gate(gate)
}

pub fn apply_channel(dm: &DensityMatrix, channel: &KrausChannel, qubit: usize) -> Result<DensityMatrix> {
    dm.apply_channel(channel, qubit)
}
