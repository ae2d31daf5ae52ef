//! Circuits whose rotation angles are tied to trainable parameters or input
//! features, with exact gradients of Σ_q w_q <Z_q>.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use crate::error::{Error, Result};
use crate::qcore::{adjoint, run_mixed, run_pure, CircuitSpec, GateKind, NoisePolicy, StateVector};

/// Where a gate's angle comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSource {
    Fixed,
    Param(usize),
    /// angle = scale · x[index]
    Feature {
        index: usize,
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradMethod {
    /// Single backward sweep over the tape.
    #[default]
    Adjoint,
    /// Shift rules: two terms for single-qubit rotations, four for CRX.
    ParameterShift,
}

#[derive(Debug, Clone)]
pub struct ParamCircuit {
    pub circuit: CircuitSpec,
    pub sources: Vec<AngleSource>,
    pub n_params: usize,
    pub n_features: usize,
    /// Raw (unnormalized) features when the initial state is amplitude-encoded.
    pub amplitude_input: Option<Vec<f64>>,
}

/// Gradients of Σ_q w_q <Z_q> with respect to everything the tape depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct TapeGrad {
    pub params: Vec<f64>,
    pub features: Vec<f64>,
}

impl ParamCircuit {
    pub fn new(n_qubits: usize, n_params: usize, n_features: usize) -> Self {
        Self {
            circuit: CircuitSpec::new(n_qubits),
            sources: Vec::new(),
            n_params,
            n_features,
            amplitude_input: None,
        }
    }

    pub fn push(&mut self, op: crate::qcore::GateOp, source: AngleSource) {
        self.circuit.push(op);
        self.sources.push(source);
    }

    pub fn n_qubits(&self) -> usize {
        self.circuit.n_qubits
    }

    /// <Z_q> for every qubit; Mixed when `noise` is given.
    pub fn expectations(&self, noise: Option<&NoisePolicy>) -> Result<Vec<f64>> {
        match noise {
            None => Ok(run_pure(&self.circuit)?.expect_z_all()),
            Some(policy) => {
                let mut c = self.circuit.clone();
                c.noise = policy.clone();
                Ok(run_mixed(&c)?.expect_z_all())
            }
        }
    }

    pub fn gradient(&self, weights: &[f64], method: GradMethod) -> Result<TapeGrad> {
        if weights.len() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                got: weights.len(),
            });
        }
        self.circuit.validate()?;
        match method {
            GradMethod::Adjoint => Ok(self.adjoint_gradient(weights)),
            GradMethod::ParameterShift => self.shift_gradient(weights),
        }
    }

    fn adjoint_gradient(&self, weights: &[f64]) -> TapeGrad {
        let (mut grad, lambda) = self.backward(weights);
        self.add_amplitude_part(&mut grad, &lambda);
        grad
    }

    fn add_amplitude_part(&self, grad: &mut TapeGrad, lambda: &StateVector) {
        if let Some(x) = &self.amplitude_input {
            // λ holds V†OVψ0 here; d<O>/dψ0_j = 2 Re λ_j for real ψ0
            let amp_grad: Vec<f64> = lambda.amplitudes().iter().map(|l| 2.0 * l.re).collect();
            for (acc, v) in grad.features.iter_mut().zip(amplitude_chain(x, &amp_grad)) {
                *acc += v;
            }
        }
    }

    /// Gradient over angle sources plus the fully back-propagated costate.
    fn backward(&self, weights: &[f64]) -> (TapeGrad, StateVector) {
        let mut grad = TapeGrad {
            params: vec![0.0; self.n_params],
            features: vec![0.0; self.n_features],
        };
        let mut psi = run_pure(&self.circuit).expect("validated circuit");
        let mut lambda = psi.clone();
        for (i, a) in lambda.amps_mut().iter_mut().enumerate() {
            let w: f64 = weights
                .iter()
                .enumerate()
                .map(|(q, wq)| if i >> q & 1 == 0 { *wq } else { -*wq })
                .sum();
            *a *= w;
        }
        for (op, src) in self.circuit.ops.iter().zip(&self.sources).rev() {
            let block = op.block().expect("validated gate");
            let inv = adjoint(&block);
            psi.apply_block(op, &inv);
            if *src != AngleSource::Fixed {
                let mut mu = psi.clone();
                mu.apply_projected_block(op, &op.block_derivative().expect("rotation gate"));
                let g = 2.0 * lambda.inner(&mu).expect("same register").re;
                match *src {
                    AngleSource::Param(j) => grad.params[j] += g,
                    AngleSource::Feature { index, scale } => grad.features[index] += scale * g,
                    AngleSource::Fixed => unreachable!(),
                }
            }
            lambda.apply_block(op, &inv);
        }
        (grad, lambda)
    }

    fn weighted_z(&self, circuit: &CircuitSpec, weights: &[f64]) -> Result<f64> {
        let z = run_pure(circuit)?.expect_z_all();
        Ok(z.iter().zip(weights).map(|(a, b)| a * b).sum())
    }

    fn shift_gradient(&self, weights: &[f64]) -> Result<TapeGrad> {
        let mut grad = TapeGrad {
            params: vec![0.0; self.n_params],
            features: vec![0.0; self.n_features],
        };
        let mut shifted = self.circuit.clone();
        for (k, src) in self.sources.iter().enumerate() {
            if *src == AngleSource::Fixed {
                continue;
            }
            let base = self.circuit.ops[k]
                .angle
                .ok_or(Error::MissingAngle(self.circuit.ops[k].kind))?;
            let mut eval = |delta: f64| -> Result<f64> {
                shifted.ops[k].angle = Some(base + delta);
                let v = self.weighted_z(&shifted, weights);
                shifted.ops[k].angle = Some(base);
                v
            };
            let d = if self.circuit.ops[k].kind == GateKind::Crx {
                // generator (|1><1| ⊗ X)/2 has eigenvalues {0, ±1/2}
                let c_plus = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
                let c_minus = (SQRT_2 - 1.0) / (4.0 * SQRT_2);
                c_plus * (eval(FRAC_PI_2)? - eval(-FRAC_PI_2)?)
                    - c_minus * (eval(3.0 * FRAC_PI_2)? - eval(-3.0 * FRAC_PI_2)?)
            } else {
                0.5 * (eval(FRAC_PI_2)? - eval(-FRAC_PI_2)?)
            };
            match *src {
                AngleSource::Param(j) => grad.params[j] += d,
                AngleSource::Feature { index, scale } => grad.features[index] += scale * d,
                AngleSource::Fixed => unreachable!(),
            }
        }
        if self.amplitude_input.is_some() {
            // no shift rule for state preparation; use the analytic route
            let (_, lambda) = self.backward(weights);
            self.add_amplitude_part(&mut grad, &lambda);
        }
        Ok(grad)
    }
}

/// Backpropagates dL/da through a = pad(x)/‖x‖.
pub(crate) fn amplitude_chain(x: &[f64], amp_grad: &[f64]) -> Vec<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let a: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let dot: f64 = a.iter().zip(amp_grad).map(|(ai, gi)| ai * gi).sum();
    a.iter().zip(amp_grad).map(|(ai, gi)| (gi - ai * dot) / norm).collect()
}

/// Pure initial state for amplitude-encoded inputs.
pub(crate) fn amplitude_initial(x: &[f64], n_qubits: usize) -> Result<StateVector> {
    crate::encode::amplitude_encode(x, n_qubits)
}
