
use crate::error::{Error, Result};

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Tempered softmax `exp(z_i/T) / sum_j exp(z_j/T)`, max-subtracted.
pub fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|z| ((z - max) / temperature).exp()).collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    p
}

/// Index of the largest entry; the lowest index wins exact ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Draws an index from a probability vector by inverse CDF.
pub fn sample_index(probs: &[f64], rng: &mut impl rand::Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` just under 1; fall back to the last supported index.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Samples an action index from tempered softmax probabilities.
pub fn softmax_sample(logits: &[f64], temperature: f64, rng: &mut impl rand::Rng) -> Result<usize> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::config(format!("temperature must be positive, got {temperature}")));
    }
    if logits.is_empty() || logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(sample_index(&softmax(logits, temperature), rng))
}

/// Shannon entropy in nats, with `0 log 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    // Subtracting from zero avoids a negative zero for point masses.
    0.0 - probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}
