//! Classical-to-quantum feature maps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{run_pure, CircuitSpec, GateOp, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    /// One RY(x_i) per qubit.
    Angle,
    /// Features written directly into normalized amplitudes.
    Amplitude,
    /// Two features per qubit: RZ(a), RX(b), RZ(a/2), RX(b/2).
    DenseAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub kind: EncodingKind,
    pub n_qubits: usize,
    /// Range features are rescaled into before encoding.
    pub input_range: (f64, f64),
}

impl EncodingSpec {
    pub fn angle(n_qubits: usize) -> Self {
        Self {
            kind: EncodingKind::Angle,
            n_qubits,
            input_range: (0.0, std::f64::consts::PI),
        }
    }

    pub fn amplitude(n_qubits: usize) -> Self {
        Self {
            kind: EncodingKind::Amplitude,
            n_qubits,
            input_range: (0.0, 1.0),
        }
    }

    pub fn dense_angle(n_qubits: usize) -> Self {
        Self {
            kind: EncodingKind::DenseAngle,
            n_qubits,
            input_range: (-std::f64::consts::PI, std::f64::consts::PI),
        }
    }

    /// Largest feature count this encoding accepts.
    pub fn max_features(&self) -> usize {
        match self.kind {
            EncodingKind::Angle => self.n_qubits,
            EncodingKind::Amplitude => 1 << self.n_qubits,
            EncodingKind::DenseAngle => 2 * self.n_qubits,
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        let ok = match self.kind {
            EncodingKind::DenseAngle => len == 2 * self.n_qubits,
            _ => len >= 1 && len <= self.max_features(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Encoding(format!(
                "{len} features do not fit {:?} encoding on {} qubits",
                self.kind, self.n_qubits
            )))
        }
    }

    /// State produced by the encoder alone, starting from |0...0>.
    pub fn prepare_state(&self, x: &[f64]) -> Result<StateVector> {
        match self.kind {
            EncodingKind::Amplitude => amplitude_encode(x, self.n_qubits),
            EncodingKind::Angle => {
                let ops = angle_encode(x, self)?;
                run_pure(&CircuitSpec::with_ops(self.n_qubits, ops))
            }
            EncodingKind::DenseAngle => {
                let ops = dense_angle_encode(x, self.n_qubits)?;
                run_pure(&CircuitSpec::with_ops(self.n_qubits, ops))
            }
        }
    }
}

/// One RY(x_i) on qubit i; qubits past the feature count are left alone.
pub fn angle_encode(x: &[f64], spec: &EncodingSpec) -> Result<Vec<GateOp>> {
    if x.len() > spec.n_qubits {
        return Err(Error::Encoding(format!(
            "{} features exceed {} qubits",
            x.len(),
            spec.n_qubits
        )));
    }
    Ok(x.iter().enumerate().map(|(q, &v)| GateOp::ry(q, v)).collect())
}

/// Per qubit i with pair (a, b) = (x[2i], x[2i+1]): RZ(a), RX(b), RZ(a/2), RX(b/2).
pub fn dense_angle_encode(x: &[f64], n_qubits: usize) -> Result<Vec<GateOp>> {
    if x.len() != 2 * n_qubits {
        return Err(Error::Encoding(format!(
            "dense angle encoding needs exactly {} features, got {}",
            2 * n_qubits,
            x.len()
        )));
    }
    let mut ops = Vec::with_capacity(4 * n_qubits);
    for (q, pair) in x.chunks_exact(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        ops.push(GateOp::rz(q, a));
        ops.push(GateOp::rx(q, b));
        ops.push(GateOp::rz(q, 0.5 * a));
        ops.push(GateOp::rx(q, 0.5 * b));
    }
    Ok(ops)
}

/// Zero-pads `x` to 2^n entries and L2-normalizes. Signs are kept.
pub fn amplitude_encode(x: &[f64], n_qubits: usize) -> Result<StateVector> {
    let dim = 1usize << n_qubits;
    if x.len() > dim {
        return Err(Error::Encoding(format!("{} features exceed {dim} amplitudes", x.len())));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Encoding("amplitude encoding of a zero-norm vector".into()));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for (a, v) in amps.iter_mut().zip(x) {
        *a = Complex64::new(v / norm, 0.0);
    }
    StateVector::from_amplitudes(amps)
}

/// Per-dimension [min, max] observed on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds(pub Vec<(f64, f64)>);

impl FeatureBounds {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("feature matrix"))?;
        let mut bounds: Vec<(f64, f64)> = first.iter().map(|&v| (v, v)).collect();
        for row in rows {
            if row.len() != bounds.len() {
                return Err(Error::DimensionMismatch {
                    expected: bounds.len(),
                    got: row.len(),
                });
            }
            for (b, &v) in bounds.iter_mut().zip(row) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        Ok(Self(bounds))
    }

    pub fn apply(&self, x: &[f64], to_range: (f64, f64)) -> Vec<f64> {
        rescale(x, &self.0, to_range)
    }
}

/// Affine per-dimension map of [min, max] onto [lo, hi]. Constant dimensions
/// go to the midpoint. Values outside the fitted bounds extrapolate.
pub fn rescale(x: &[f64], from_bounds: &[(f64, f64)], to_range: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = to_range;
    x.iter()
        .zip(from_bounds)
        .map(|(&v, &(min, max))| {
            let span = max - min;
            if span <= 0.0 {
                0.5 * (lo + hi)
            } else {
                lo + (v - min) / span * (hi - lo)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{matmul, run_circuit, rx_matrix, rz_matrix, SimMode};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn expect_z_after(ops: Vec<GateOp>, n: usize, q: usize) -> f64 {
        run_circuit(&CircuitSpec::with_ops(n, ops), SimMode::Pure)
            .unwrap()
            .expect_z(q)
            .unwrap()
    }

    #[test]
    fn angle_encode_examples() {
        let spec = EncodingSpec::angle(1);
        let ops = angle_encode(&[0.0], &spec).unwrap();
        assert_eq!(ops, vec![GateOp::ry(0, 0.0)]);
        assert!((expect_z_after(ops, 1, 0) - 1.0).abs() < 1e-15);
        let ops = angle_encode(&[FRAC_PI_2], &spec).unwrap();
        assert!(expect_z_after(ops, 1, 0).abs() < 1e-12);
        assert!(angle_encode(&[0.1; 10], &EncodingSpec::angle(9)).is_err());
    }

    #[test]
    fn angle_encode_grid_matches_cosine() {
        let spec = EncodingSpec::angle(3);
        for k in 0..100 {
            let x = [PI * k as f64 / 99.0, 0.3, 2.0 - 0.01 * k as f64];
            let ops = angle_encode(&x, &spec).unwrap();
            let s = run_pure(&CircuitSpec::with_ops(3, ops)).unwrap();
            for (q, &xi) in x.iter().enumerate() {
                assert!((s.expect_z(q).unwrap() - xi.cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_angle_zero_is_ground_state() {
        let ops = dense_angle_encode(&[0.0, 0.0], 1).unwrap();
        assert_eq!(ops.len(), 4);
        assert!((expect_z_after(ops, 1, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dense_angle_matches_matrix_product() {
        for &(a, b) in &[(0.0, PI), (0.7, -1.3), (-2.5, 2.9)] {
            let ops = dense_angle_encode(&[a, b], 1).unwrap();
            // RX(b/2)·RZ(a/2)·RX(b)·RZ(a) applied to |0>
            let u = matmul(
                &rx_matrix(0.5 * b),
                &matmul(&rz_matrix(0.5 * a), &matmul(&rx_matrix(b), &rz_matrix(a))),
            );
            let (c0, c1) = (u[0][0], u[1][0]);
            let want = c0.norm_sqr() - c1.norm_sqr();
            assert!((expect_z_after(ops, 1, 0) - want).abs() < 1e-12);
        }
        // a=0, b=π: total X rotation 3π/2
        let ops = dense_angle_encode(&[0.0, PI], 1).unwrap();
        assert!((expect_z_after(ops, 1, 0) - (1.5 * PI).cos()).abs() < 1e-12);
    }

    #[test]
    fn dense_angle_length_errors() {
        assert!(dense_angle_encode(&[0.0; 5], 4).is_err());
        assert!(dense_angle_encode(&[0.0; 6], 4).is_err());
    }

    #[test]
    fn amplitude_examples() {
        let s = amplitude_encode(&[3.0, 4.0], 1).unwrap();
        assert!((s.amplitudes()[0].re - 0.6).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - 0.8).abs() < 1e-15);
        let s = amplitude_encode(&[1.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(s, StateVector::zero(2));
        assert!(amplitude_encode(&[0.0, 0.0], 1).is_err());
        assert!(amplitude_encode(&[1.0; 5], 2).is_err());
    }

    #[test]
    fn rescale_examples() {
        let to = (0.0, PI);
        assert!((rescale(&[5.0], &[(0.0, 10.0)], to)[0] - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(rescale(&[0.0], &[(0.0, 10.0)], to)[0], 0.0);
        assert_eq!(rescale(&[10.0], &[(0.0, 10.0)], to)[0], PI);
        assert_eq!(rescale(&[42.0], &[(3.0, 3.0)], to)[0], FRAC_PI_2);
    }

    #[test]
    fn bounds_fit_and_apply() {
        let rows = vec![vec![0.0, 5.0], vec![2.0, 5.0], vec![1.0, 5.0]];
        let b = FeatureBounds::fit(&rows).unwrap();
        assert_eq!(b.0, vec![(0.0, 2.0), (5.0, 5.0)]);
        assert_eq!(b.apply(&[1.0, 5.0], (0.0, 1.0)), vec![0.5, 0.5]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn amplitude_output_normalized(x in prop::collection::vec(-10.0f64..10.0, 1..=8)) {
                prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
                let s = amplitude_encode(&x, 3).unwrap();
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn rescale_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0, lo in -3.0f64..0.0, span in 0.1f64..4.0) {
                let bounds = [(-5.0, 5.0)];
                let (ra, rb) = (rescale(&[a], &bounds, (lo, lo + span))[0], rescale(&[b], &bounds, (lo, lo + span))[0]);
                prop_assert_eq!(a <= b, ra <= rb || (a - b).abs() < 1e-12);
            }

            #[test]
            fn rescale_identity_bounds(v in -2.0f64..3.0) {
                let out = rescale(&[v], &[(-2.0, 3.0)], (-2.0, 3.0))[0];
                prop_assert!((out - v).abs() < 1e-12);
            }
        }
    }
}
