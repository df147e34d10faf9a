#![allow(dead_code)]

/// Minimizer of `Σ σ_i f_i − γ ρ(σ)`, `ρ` the entropy, over the open
/// simplex, by damped Newton iteration on the KKT system
///
/// ```text
/// f_i + γ (ln σ_i + 1) + ν = 0,   Σ σ_i = 1.
/// ```
///
/// Steps are cut so no coordinate loses more than half its mass at once,
/// which keeps the iterate interior.
pub fn simplex_argmin(f: &[f64], gamma: f64) -> Vec<f64> {
    let n = f.len();
    let mut sigma = vec![1.0 / n as f64; n];
    let mut nu = -f.iter().map(|fi| fi + gamma * (sigma[0].ln() + 1.0)).sum::<f64>() / n as f64;
    for _ in 0..20_000 {
        let r: Vec<f64> = (0..n).map(|i| f[i] + gamma * (sigma[i].ln() + 1.0) + nu).collect();
        let c = sigma.iter().sum::<f64>() - 1.0;
        let mass: f64 = sigma.iter().sum();
        let weighted: f64 = sigma.iter().zip(&r).map(|(s, ri)| s * ri).sum();
        let d_nu = (gamma * c - weighted) / mass;
        let d_sigma: Vec<f64> = (0..n).map(|i| -sigma[i] * (r[i] + d_nu) / gamma).collect();
        let mut t: f64 = 1.0;
        for i in 0..n {
            if d_sigma[i] < 0.0 {
                t = t.min(0.5 * sigma[i] / -d_sigma[i]);
            }
        }
        let mut biggest = 0.0f64;
        for i in 0..n {
            sigma[i] += t * d_sigma[i];
            biggest = biggest.max((t * d_sigma[i]).abs());
        }
        nu += t * d_nu;
        if t == 1.0 && biggest < 1e-16 {
            break;
        }
    }
    sigma
}

/// The objective of the smoothed problem, for sanity checks on the oracle.
pub fn perturbed_cost(sigma: &[f64], f: &[f64], gamma: f64) -> f64 {
    sigma
        .iter()
        .zip(f)
        .map(|(s, fi)| s * fi + if *s > 0.0 { gamma * s * s.ln() } else { 0.0 })
        .sum()
}
