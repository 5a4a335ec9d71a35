use super::{MagChain, ProbVector};
use crate::error::{Error, Result};
use crate::real::Real;

/// `Q(α)`: smallest state `i` with `π({0..=i}) >= α`.
pub fn quantile_state<T: Real>(pi: &ProbVector<T>, alpha: T) -> Result<usize> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::OutOfRange {
            what: "alpha",
            detail: format!("{alpha} not in (0, 1)"),
        });
    }
    let mut cum = T::zero();
    for (i, &p) in pi.probs().iter().enumerate() {
        cum += p;
        if cum >= alpha {
            return Ok(i);
        }
    }
    // Rounding can leave the total a hair below alpha close to 1.
    Ok(pi.len() - 1)
}

/// `E_π |S|^r`.
pub fn stationary_moment<T: Real>(chain: &MagChain<T>, pi: &ProbVector<T>, r: T) -> Result<T> {
    if !(r >= T::one()) {
        return Err(Error::OutOfRange {
            what: "moment order",
            detail: format!("{r} < 1"),
        });
    }
    Ok(pi
        .probs()
        .iter()
        .enumerate()
        .map(|(i, &p)| p * chain.magnetization(i).abs().powf(r))
        .sum())
}

/// `Var_π(S)`.
pub fn stationary_variance<T: Real>(chain: &MagChain<T>, pi: &ProbVector<T>) -> T {
    let mean: T = pi
        .probs()
        .iter()
        .enumerate()
        .map(|(i, &p)| p * chain.magnetization(i))
        .sum();
    pi.probs()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let d = chain.magnetization(i) - mean;
            p * d * d
        })
        .sum()
}
