use serde::{Deserialize, Serialize};

use super::channel::KrausChannel;
use super::density::DensityMatrix;
use super::gates::{native_decomposition, GateOp};
use super::state::StateVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub enum NoisePolicy {
    #[default]
    None,
    /// Channels applied, in order, to every target qubit of every gate
    /// right after the gate.
    PerGate(Vec<KrausChannel>),
    /// Each gate is first rewritten over {RX, RZ, X, CX} and the channels
    /// follow every native gate instead.
    NativeBasis(Vec<KrausChannel>),
}

impl NoisePolicy {
    pub fn is_none(&self) -> bool {
        match self {
            NoisePolicy::None => true,
            NoisePolicy::PerGate(chs) | NoisePolicy::NativeBasis(chs) => chs.is_empty(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl SimState {
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        match self {
            SimState::Pure(s) => s.expect_z(qubit),
            SimState::Mixed(d) => d.expect_z(qubit),
        }
    }

    pub fn expect_z_all(&self) -> Vec<f64> {
        match self {
            SimState::Pure(s) => s.expect_z_all(),
            SimState::Mixed(d) => d.expect_z_all(),
        }
    }

    pub fn into_pure(self) -> Option<StateVector> {
        match self {
            SimState::Pure(s) => Some(s),
            SimState::Mixed(_) => None,
        }
    }

    pub fn into_mixed(self) -> Option<DensityMatrix> {
        match self {
            SimState::Mixed(d) => Some(d),
            SimState::Pure(_) => None,
        }
    }
}

/// Ordered gate list over `n_qubits`, optionally starting from a prepared
/// state instead of |0...0>.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub initial: Option<StateVector>,
    pub ops: Vec<GateOp>,
    pub noise: NoisePolicy,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            initial: None,
            ops: Vec::new(),
            noise: NoisePolicy::None,
        }
    }

    pub fn with_ops(n_qubits: usize, ops: Vec<GateOp>) -> Self {
        Self {
            ops,
            ..Self::new(n_qubits)
        }
    }

    pub fn push(&mut self, op: GateOp) {
        self.ops.push(op);
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::Config("circuit needs at least one qubit".into()));
        }
        if let Some(init) = &self.initial {
            if init.n_qubits() != self.n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: self.n_qubits,
                    got: init.n_qubits(),
                });
            }
        }
        self.ops.iter().try_for_each(|op| op.validate(self.n_qubits))
    }

    fn initial_state(&self) -> StateVector {
        self.initial.clone().unwrap_or_else(|| StateVector::zero(self.n_qubits))
    }
}

pub fn run_circuit(circuit: &CircuitSpec, mode: SimMode) -> Result<SimState> {
    circuit.validate()?;
    match mode {
        SimMode::Pure => {
            if !circuit.noise.is_none() {
                return Err(Error::NoiseInPureMode);
            }
            run_pure(circuit).map(SimState::Pure)
        }
        SimMode::Mixed => run_mixed(circuit).map(SimState::Mixed),
    }
}

pub(crate) fn run_pure(circuit: &CircuitSpec) -> Result<StateVector> {
    let mut state = circuit.initial_state();
    for op in &circuit.ops {
        state.apply_gate_mut(op)?;
    }
    Ok(state)
}

pub(crate) fn run_mixed(circuit: &CircuitSpec) -> Result<DensityMatrix> {
    let mut dm = DensityMatrix::from_pure(&circuit.initial_state());
    let (channels, native): (&[KrausChannel], bool) = match &circuit.noise {
        NoisePolicy::None => (&[], false),
        NoisePolicy::PerGate(chs) => (chs, false),
        NoisePolicy::NativeBasis(chs) => (chs, true),
    };
    let step = |dm: &mut DensityMatrix, op: &GateOp| -> Result<()> {
        dm.apply_gate_mut(op)?;
        for &q in &op.targets {
            for ch in channels {
                dm.apply_channel_mut(ch, q)?;
            }
        }
        Ok(())
    };
    for op in &circuit.ops {
        if native && !channels.is_empty() {
            for n in native_decomposition(op) {
                step(&mut dm, &n)?;
            }
        } else {
            step(&mut dm, op)?;
        }
    }
    Ok(dm)
}
