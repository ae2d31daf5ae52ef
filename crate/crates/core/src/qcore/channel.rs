use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gates::{adjoint, matmul, max_abs_diff, scale, Mat2, IDENTITY, PAULI_X, PAULI_Y, PAULI_Z};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelLabel {
    Depolarizing(f64),
    AmplitudeDamping(f64),
    Custom,
}

/// Single-qubit CPTP map given by its Kraus operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausChannel {
    operators: Vec<Mat2>,
    label: ChannelLabel,
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Probability(p));
    }
    Ok(())
}

impl KrausChannel {
    /// Rejects operator sets violating Σ E_k†E_k = I by more than 1e-9.
    pub fn new(operators: Vec<Mat2>) -> Result<Self> {
        let ch = Self {
            operators,
            label: ChannelLabel::Custom,
        };
        if ch.completeness_error() > 1e-9 {
            return Err(Error::Config("Kraus operators are not complete".into()));
        }
        Ok(ch)
    }

    /// {√(1−p)·I, √(p/3)·X, √(p/3)·Y, √(p/3)·Z}
    pub fn depolarizing(p: f64) -> Result<Self> {
        check_probability(p)?;
        let k0 = (1.0 - p).sqrt();
        let k = (p / 3.0).sqrt();
        Ok(Self {
            operators: vec![
                scale(&IDENTITY, k0),
                scale(&PAULI_X, k),
                scale(&PAULI_Y, k),
                scale(&PAULI_Z, k),
            ],
            label: ChannelLabel::Depolarizing(p),
        })
    }

    /// E0 = [[1,0],[0,√(1−γ)]], E1 = [[0,√γ],[0,0]]
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_probability(gamma)?;
        let z = Complex64::new(0.0, 0.0);
        let r = |v: f64| Complex64::new(v, 0.0);
        Ok(Self {
            operators: vec![
                [[r(1.0), z], [z, r((1.0 - gamma).sqrt())]],
                [[z, r(gamma.sqrt())], [z, z]],
            ],
            label: ChannelLabel::AmplitudeDamping(gamma),
        })
    }

    pub fn operators(&self) -> &[Mat2] {
        &self.operators
    }

    pub fn label(&self) -> ChannelLabel {
        self.label
    }

    /// max |Σ E_k†E_k − I|
    pub fn completeness_error(&self) -> f64 {
        let mut sum = [[Complex64::new(0.0, 0.0); 2]; 2];
        for e in &self.operators {
            let term = matmul(&adjoint(e), e);
            for r in 0..2 {
                for c in 0..2 {
                    sum[r][c] += term[r][c];
                }
            }
        }
        max_abs_diff(&sum, &IDENTITY)
    }
}

/// Convenience wrappers matching the free-function names used elsewhere.
pub fn make_depolarizing(p: f64) -> Result<KrausChannel> {
    KrausChannel::depolarizing(p)
}

pub fn make_amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    KrausChannel::amplitude_damping(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{DensityMatrix, GateOp, StateVector};

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p).unwrap()
    }

    #[test]
    fn depolarizing_three_quarters_is_fully_mixing() {
        let ch = make_depolarizing(0.75).unwrap();
        let out = DensityMatrix::zero(1).apply_channel(&ch, 0).unwrap();
        assert!(out.max_abs_diff(&diag(&[0.5, 0.5])) < 1e-12);
    }

    #[test]
    fn depolarizing_small_p_closed_form() {
        let p = 0.01;
        let ch = make_depolarizing(p).unwrap();
        let out = DensityMatrix::zero(1).apply_channel(&ch, 0).unwrap();
        let want = diag(&[1.0 - 2.0 * p / 3.0, 2.0 * p / 3.0]);
        assert!(out.max_abs_diff(&want) < 1e-12);
        assert!((out.entry(0, 0).re - 0.993_333_333_333_333_3).abs() < 1e-12);
    }

    #[test]
    fn zero_strength_channels_are_identity() {
        let s = StateVector::zero(1)
            .apply_gate(&GateOp::ry(0, 1.1))
            .unwrap()
            .apply_gate(&GateOp::rz(0, 0.3))
            .unwrap();
        let dm = DensityMatrix::from_pure(&s);
        for ch in [make_depolarizing(0.0).unwrap(), make_amplitude_damping(0.0).unwrap()] {
            assert!(dm.apply_channel(&ch, 0).unwrap().max_abs_diff(&dm) < 1e-15);
        }
    }

    #[test]
    fn amplitude_damping_examples() {
        let one = diag(&[0.0, 1.0]);
        let full = one.apply_channel(&make_amplitude_damping(1.0).unwrap(), 0).unwrap();
        assert!(full.max_abs_diff(&diag(&[1.0, 0.0])) < 1e-12);
        let half = one.apply_channel(&make_amplitude_damping(0.5).unwrap(), 0).unwrap();
        assert!(half.max_abs_diff(&diag(&[0.5, 0.5])) < 1e-12);
        let part = one.apply_channel(&make_amplitude_damping(0.3).unwrap(), 0).unwrap();
        assert!(part.max_abs_diff(&diag(&[0.3, 0.7])) < 1e-12);
    }

    #[test]
    fn channel_acts_on_one_qubit_only() {
        let ch = make_depolarizing(0.75).unwrap();
        let out = DensityMatrix::zero(2).apply_channel(&ch, 0).unwrap();
        // (I/2) ⊗ |0><0| with qubit 0 as the low bit: diag(0.5, 0.5, 0, 0)
        assert!(out.max_abs_diff(&diag(&[0.5, 0.5, 0.0, 0.0])) < 1e-12);
    }

    #[test]
    fn identity_kraus_is_noop() {
        let ch = KrausChannel::new(vec![IDENTITY]).unwrap();
        let dm = DensityMatrix::zero(2).apply_gate(&GateOp::h(1)).unwrap();
        assert!(dm.apply_channel(&ch, 1).unwrap().max_abs_diff(&dm) < 1e-15);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(make_depolarizing(1.2), Err(Error::Probability(_))));
        assert!(matches!(make_amplitude_damping(-0.1), Err(Error::Probability(_))));
        assert!(DensityMatrix::zero(1)
            .apply_channel(&make_depolarizing(0.1).unwrap(), 1)
            .is_err());
        assert!(KrausChannel::new(vec![scale(&IDENTITY, 0.5)]).is_err());
    }
}
