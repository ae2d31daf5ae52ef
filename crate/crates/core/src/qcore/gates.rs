use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Row-major 2x2 complex matrix.
pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub const IDENTITY: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
pub const PAULI_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];
pub const PAULI_Y: Mat2 = [[ZERO, Complex64::new(0.0, -1.0)], [I, ZERO]];
pub const PAULI_Z: Mat2 = [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Rx,
    Ry,
    Rz,
    Cx,
    Crx,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Crx)
    }

    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::Cx | GateKind::Crx)
    }

    pub fn arity(self) -> usize {
        if self.is_controlled() {
            2
        } else {
            1
        }
    }
}

/// A single gate application. Controlled gates list `[control, target]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub angle: Option<f64>,
    pub targets: SmallVec<[usize; 2]>,
}

impl GateOp {
    pub fn fixed(kind: GateKind, qubit: usize) -> Self {
        Self {
            kind,
            angle: None,
            targets: smallvec![qubit],
        }
    }

    pub fn x(q: usize) -> Self {
        Self::fixed(GateKind::X, q)
    }
    pub fn y(q: usize) -> Self {
        Self::fixed(GateKind::Y, q)
    }
    pub fn z(q: usize) -> Self {
        Self::fixed(GateKind::Z, q)
    }
    pub fn h(q: usize) -> Self {
        Self::fixed(GateKind::H, q)
    }

    pub fn rotation(kind: GateKind, qubit: usize, angle: f64) -> Self {
        Self {
            kind,
            angle: Some(angle),
            targets: smallvec![qubit],
        }
    }

    pub fn rx(q: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Rx, q, angle)
    }
    pub fn ry(q: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Ry, q, angle)
    }
    pub fn rz(q: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Rz, q, angle)
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cx,
            angle: None,
            targets: smallvec![control, target],
        }
    }

    pub fn crx(control: usize, target: usize, angle: f64) -> Self {
        Self {
            kind: GateKind::Crx,
            angle: Some(angle),
            targets: smallvec![control, target],
        }
    }

    /// Checks arity, index range, distinct targets and angle presence.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let expected = self.kind.arity();
        if self.targets.len() != expected {
            return Err(Error::TargetArity {
                kind: self.kind,
                expected,
                got: self.targets.len(),
            });
        }
        for &q in &self.targets {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
        }
        if expected == 2 && self.targets[0] == self.targets[1] {
            return Err(Error::DuplicateTarget(self.targets[0]));
        }
        if self.kind.is_rotation() && self.angle.is_none() {
            return Err(Error::MissingAngle(self.kind));
        }
        Ok(())
    }

    /// The 2x2 block acting on the target qubit (on the control=|1> subspace
    /// for controlled kinds).
    pub fn block(&self) -> Result<Mat2> {
        let angle = || self.angle.ok_or(Error::MissingAngle(self.kind));
        Ok(match self.kind {
            GateKind::X | GateKind::Cx => PAULI_X,
            GateKind::Y => PAULI_Y,
            GateKind::Z => PAULI_Z,
            GateKind::H => {
                let f = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[f, f], [f, -f]]
            }
            GateKind::Rx | GateKind::Crx => rx_matrix(angle()?),
            GateKind::Ry => ry_matrix(angle()?),
            GateKind::Rz => rz_matrix(angle()?),
        })
    }

    /// d(block)/d(angle) for rotation kinds.
    pub fn block_derivative(&self) -> Result<Mat2> {
        let theta = self.angle.ok_or(Error::MissingAngle(self.kind))?;
        let (s, c) = (0.5 * theta).sin_cos();
        let h = |v: f64| Complex64::new(0.5 * v, 0.0);
        let hi = |v: f64| Complex64::new(0.0, 0.5 * v);
        Ok(match self.kind {
            GateKind::Rx | GateKind::Crx => [[h(-s), hi(-c)], [hi(-c), h(-s)]],
            GateKind::Ry => [[h(-s), h(-c)], [h(c), h(-s)]],
            GateKind::Rz => [
                [Complex64::new(-0.5 * s, -0.5 * c), ZERO],
                [ZERO, Complex64::new(-0.5 * s, 0.5 * c)],
            ],
            kind => return Err(Error::Config(format!("{kind:?} has no angle derivative"))),
        })
    }
}

/// Rewrites `op` as a sequence over {RX, RZ, X, CX}, in application order,
/// equal to `op` up to a global phase.
pub fn native_decomposition(op: &GateOp) -> Vec<GateOp> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let q = op.targets[0];
    let ry = |q: usize, theta: f64| {
        [
            GateOp::rz(q, -FRAC_PI_2),
            GateOp::rx(q, theta),
            GateOp::rz(q, FRAC_PI_2),
        ]
    };
    match op.kind {
        GateKind::X | GateKind::Rx | GateKind::Rz | GateKind::Cx => vec![op.clone()],
        GateKind::Z => vec![GateOp::rz(q, PI)],
        GateKind::Y => vec![GateOp::rz(q, PI), GateOp::x(q)],
        GateKind::H => vec![
            GateOp::rz(q, FRAC_PI_2),
            GateOp::rx(q, FRAC_PI_2),
            GateOp::rz(q, FRAC_PI_2),
        ],
        GateKind::Ry => ry(q, op.angle.unwrap_or(0.0)).to_vec(),
        GateKind::Crx => {
            // RZ(−π/2)·CRY(θ)·RZ(π/2) on the target, CRY via two CX
            let (c, t) = (op.targets[0], op.targets[1]);
            let theta = op.angle.unwrap_or(0.0);
            let mut out = vec![GateOp::rz(t, FRAC_PI_2)];
            out.extend(ry(t, theta / 2.0));
            out.push(GateOp::cx(c, t));
            out.extend(ry(t, -theta / 2.0));
            out.push(GateOp::cx(c, t));
            out.push(GateOp::rz(t, -FRAC_PI_2));
            out
        }
    }
}

pub fn rx_matrix(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ]
}

pub fn ry_matrix(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

pub fn rz_matrix(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]]
}

pub fn adjoint(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn scale(m: &Mat2, k: f64) -> Mat2 {
    [[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]]
}

/// max |(A - B)_ij|
pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max((a[r][c] - b[r][c]).norm());
        }
    }
    worst
}
