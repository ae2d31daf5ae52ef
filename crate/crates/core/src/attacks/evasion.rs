use rand::Rng;
use rayon::prelude::*;

use super::check_epsilon;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::rng::{substream, Stream};
use crate::train::{one_hot, CrossEntropy};

/// Sign with sign(±0) = 0.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn loss_sign<M: Model + ?Sized>(model: &M, x: &[f64], y: usize) -> Result<Vec<f64>> {
    let target = one_hot(y, model.n_classes());
    Ok(model
        .input_grad(x, &target, &CrossEntropy)?
        .into_iter()
        .map(sign)
        .collect())
}

/// x' = clamp(x + ε·sign(∇ₓL), bounds)
pub fn fgsm<M: Model + ?Sized>(model: &M, x: &[f64], y: usize, epsilon: f64, bounds: (f64, f64)) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    let s = loss_sign(model, x, y)?;
    Ok(x.iter()
        .zip(&s)
        .map(|(xi, si)| (xi + epsilon * si).clamp(bounds.0, bounds.1))
        .collect())
}

/// Iterated signed-gradient ascent projected onto the L∞ ε-ball around `x`
/// and then onto `bounds`. With `rng`, starts from a uniform point in the
/// ball.
#[allow(clippy::too_many_arguments)]
pub fn pgd<M: Model + ?Sized, R: Rng>(
    model: &M,
    x: &[f64],
    y: usize,
    epsilon: f64,
    step: f64,
    iters: usize,
    bounds: (f64, f64),
    rng: Option<&mut R>,
) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    if !(step > 0.0) {
        return Err(Error::Config(format!("PGD step {step} must be positive")));
    }
    let project = |v: f64, x0: f64| v.clamp(x0 - epsilon, x0 + epsilon).clamp(bounds.0, bounds.1);
    let mut cur: Vec<f64> = match rng {
        Some(rng) if epsilon > 0.0 => x
            .iter()
            .map(|&x0| project(x0 + rng.random_range(-epsilon..=epsilon), x0))
            .collect(),
        _ => x.to_vec(),
    };
    for _ in 0..iters {
        let s = loss_sign(model, &cur, y)?;
        for ((c, si), &x0) in cur.iter_mut().zip(&s).zip(x) {
            *c = project(*c + step * si, x0);
        }
    }
    Ok(cur)
}

pub fn fgsm_dataset<M: Model + ?Sized>(
    model: &M,
    features: &[Vec<f64>],
    labels: &[usize],
    epsilon: f64,
    bounds: (f64, f64),
) -> Result<Vec<Vec<f64>>> {
    features
        .par_iter()
        .zip(labels.par_iter())
        .map(|(x, &y)| fgsm(model, x, y, epsilon, bounds))
        .collect()
}

/// PGD over a whole set; sample `i` draws its random start from its own
/// sub-stream of `seed` when `random_start` is set.
#[allow(clippy::too_many_arguments)]
pub fn pgd_dataset<M: Model + ?Sized>(
    model: &M,
    features: &[Vec<f64>],
    labels: &[usize],
    epsilon: f64,
    step: f64,
    iters: usize,
    bounds: (f64, f64),
    random_start: Option<u64>,
) -> Result<Vec<Vec<f64>>> {
    features
        .par_iter()
        .zip(labels.par_iter())
        .enumerate()
        .map(|(i, (x, &y))| match random_start {
            Some(seed) => {
                let mut rng = substream(seed, Stream::Attack, i as u64);
                pgd(model, x, y, epsilon, step, iters, bounds, Some(&mut rng))
            }
            None => pgd::<M, crate::rng::Rng>(model, x, y, epsilon, step, iters, bounds, None),
        })
        .collect()
}
