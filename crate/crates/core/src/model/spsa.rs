use rand::Rng;

use crate::error::{Error, Result};

/// Two-evaluation SPSA estimate of ∇L at `params`:
/// ĝ_i = (L(θ + cΔ) − L(θ − cΔ)) / (2c) · Δ_i with Δ_i uniform on {−1, +1}.
pub fn spsa_grad<F>(params: &[f64], c: f64, rng: &mut impl Rng, mut loss: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(c > 0.0) {
        return Err(Error::Config(format!("SPSA perturbation must be positive, got {c}")));
    }
    let delta: Vec<f64> = (0..params.len())
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let shifted = |sign: f64| -> Vec<f64> { params.iter().zip(&delta).map(|(p, d)| p + sign * c * d).collect() };
    let plus = loss(&shifted(1.0))?;
    let minus = loss(&shifted(-1.0))?;
    let scale = (plus - minus) / (2.0 * c);
    Ok(delta.iter().map(|d| scale * d).collect())
}
