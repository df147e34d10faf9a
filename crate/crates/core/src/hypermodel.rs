//! The hidden regime process.
//!
//! A generator `Q` drives a slow discrete chain with transition matrix
//! `P = I + εQ` for simulation, and a continuous-time chain with the same
//! generator for the limit ODE. Algorithms never see the regime; only the
//! harness and diagnostics do.
//!
//! Generators are validated rather than rescaled. A generator with entries
//! larger than one can be brought into range by dividing by `q_max` and
//! multiplying `ε` by the same factor.

use crate::error::{Error, Result};
use crate::rng::{uniform, RandomSource};

const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::config("generator", "must have at least one regime"));
        }
        let mut entries = Vec::with_capacity(size * size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(Error::config(
                    "generator",
                    format!("row {i} has {} entries, expected {size}", row.len()),
                ));
            }
            entries.extend(row);
        }
        Self::from_row_major(size, entries)
    }

    pub fn from_row_major(size: usize, entries: Vec<f64>) -> Result<Self> {
        if size == 0 || entries.len() != size * size {
            return Err(Error::config(
                "generator",
                format!("expected {size}x{size} entries, got {}", entries.len()),
            ));
        }
        for i in 0..size {
            let row = &entries[i * size..(i + 1) * size];
            for (j, &q) in row.iter().enumerate() {
                if !q.is_finite() {
                    return Err(Error::config("generator", format!("entry ({i},{j}) is not finite")));
                }
                if q.abs() > 1.0 {
                    return Err(Error::config(
                        "generator",
                        format!("entry ({i},{j}) = {q} exceeds 1 in magnitude; rescale Q and ε"),
                    ));
                }
                if i != j && q < 0.0 {
                    return Err(Error::config(
                        "generator",
                        format!("off-diagonal entry ({i},{j}) = {q} is negative"),
                    ));
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > ROW_SUM_TOLERANCE {
                return Err(Error::config("generator", format!("row {i} sums to {sum}, not 0")));
            }
        }
        let g = GeneratorMatrix { size, entries };
        if !g.is_irreducible() {
            return Err(Error::config("generator", "is not irreducible"));
        }
        Ok(g)
    }

    pub fn num_regimes(&self) -> usize {
        self.size
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.size + to]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    /// Total leaving rate `|q_ii|`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rate(i, i)
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.size).map(|i| self.exit_rate(i)).fold(0.0, f64::max)
    }

    /// Strong connectivity of the off-diagonal support graph.
    pub fn is_irreducible(&self) -> bool {
        let n = self.size;
        let reach_all = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    let q = if forward { self.rate(i, j) } else { self.rate(j, i) };
                    if i != j && q > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach_all(true) && reach_all(false)
    }
}

#[derive(Debug, Clone)]
pub struct Hypermodel {
    generator: GeneratorMatrix,
    epsilon: f64,
    transition: Vec<f64>,
    initial_dist: Vec<f64>,
    current: usize,
}

impl Hypermodel {
    /// `initial_dist` defaults to uniform over regimes. The chain starts in
    /// regime 0 until [`Hypermodel::reset`] draws an initial regime.
    pub fn new(generator: GeneratorMatrix, epsilon: f64, initial_dist: Option<Vec<f64>>) -> Result<Self> {
        let n = generator.num_regimes();
        let max_rate = generator.max_exit_rate();
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::config("epsilon", format!("must be non-negative, got {epsilon}")));
        }
        if max_rate > 0.0 && epsilon > 1.0 / max_rate {
            return Err(Error::config(
                "epsilon",
                format!("{epsilon} exceeds 1/max|q_ii| = {}; I + εQ would not be stochastic", 1.0 / max_rate),
            ));
        }
        let initial_dist = match initial_dist {
            Some(d) => {
                if d.len() != n {
                    return Err(Error::config(
                        "initial_dist",
                        format!("has {} entries for {n} regimes", d.len()),
                    ));
                }
                let total: f64 = d.iter().sum();
                if d.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::config("initial_dist", "is not a probability vector"));
                }
                d
            }
            None => vec![1.0 / n as f64; n],
        };
        let mut transition = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                transition.push(id + epsilon * generator.rate(i, j));
            }
        }
        Ok(Hypermodel {
            generator,
            epsilon,
            transition,
            initial_dist,
            current: 0,
        })
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn num_regimes(&self) -> usize {
        self.generator.num_regimes()
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn set_current(&mut self, regime: usize) -> Result<()> {
        if regime >= self.num_regimes() {
            return Err(Error::InvalidInput(format!("regime {regime} out of range")));
        }
        self.current = regime;
        Ok(())
    }

    /// Draws the initial regime from the initial distribution.
    pub fn reset(&mut self, rng: &mut RandomSource) -> usize {
        self.current = inverse_cdf(&self.initial_dist, uniform(rng));
        self.current
    }

    /// `I + εQ` as rows.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        self.transition
            .chunks(self.num_regimes())
            .map(|r| r.to_vec())
            .collect()
    }

    /// Advances one step; consumes one uniform variate.
    pub fn step(&mut self, rng: &mut RandomSource) -> usize {
        let n = self.num_regimes();
        let row = &self.transition[self.current * n..(self.current + 1) * n];
        let u = uniform(rng);
        if self.epsilon > 0.0 {
            self.current = inverse_cdf(row, u);
        }
        self.current
    }
}

fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc && p > 0.0 {
            return i;
        }
    }
    last_positive
}

/// Piecewise-constant continuous-time regime path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CtmcPath {
    /// `starts[0] = 0`; segment `k` covers `[starts[k], starts[k+1])`.
    starts: Vec<f64>,
    regimes: Vec<usize>,
    horizon: f64,
}

impl CtmcPath {
    pub fn constant(regime: usize, horizon: f64) -> Self {
        CtmcPath {
            starts: vec![0.0],
            regimes: vec![regime],
            horizon,
        }
    }

    /// Builds a path from `(start_time, regime)` segments.
    pub fn from_segments(segments: Vec<(f64, usize)>, horizon: f64) -> Result<Self> {
        if segments.first().map(|s| s.0) != Some(0.0) {
            return Err(Error::InvalidInput("path must start at time 0".into()));
        }
        if segments.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidInput("segment start times must increase".into()));
        }
        let (starts, regimes) = segments.into_iter().unzip();
        Ok(CtmcPath {
            starts,
            regimes,
            horizon,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn regime_at(&self, t: f64) -> usize {
        let k = self.starts.partition_point(|&s| s <= t);
        self.regimes[k.saturating_sub(1)]
    }

    /// Jump times in `(0, horizon)`.
    pub fn jump_times(&self) -> &[f64] {
        &self.starts[1..]
    }

    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        (0..self.regimes.len()).map(move |k| {
            let end = self.starts.get(k + 1).copied().unwrap_or(self.horizon);
            (self.starts[k], end, self.regimes[k])
        })
    }

    /// Time spent in each regime over `[0, horizon]`, as fractions.
    pub fn occupation(&self, num_regimes: usize) -> Vec<f64> {
        let mut occ = vec![0.0; num_regimes];
        for (a, b, r) in self.segments() {
            occ[r] += b - a;
        }
        for o in &mut occ {
            *o /= self.horizon;
        }
        occ
    }
}

/// Exponential holding times with rate `|q_θθ|`, jumps to `θ' ≠ θ` with
/// probability `q_θθ' / |q_θθ|`.
pub fn sample_ctmc_path(
    generator: &GeneratorMatrix,
    horizon: f64,
    initial: usize,
    rng: &mut RandomSource,
) -> Result<CtmcPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    if initial >= generator.num_regimes() {
        return Err(Error::InvalidInput(format!("initial regime {initial} out of range")));
    }
    let mut starts = vec![0.0];
    let mut regimes = vec![initial];
    let mut t = 0.0;
    let mut current = initial;
    loop {
        let rate = generator.exit_rate(current);
        if rate <= 0.0 {
            break;
        }
        // 1 - u lies in (0, 1]
        let hold = -(1.0 - uniform(rng)).ln() / rate;
        t += hold;
        if t >= horizon {
            break;
        }
        let u = uniform(rng) * rate;
        let mut acc = 0.0;
        let mut next = current;
        for j in 0..generator.num_regimes() {
            if j == current {
                continue;
            }
            acc += generator.rate(current, j);
            next = j;
            if u < acc {
                break;
            }
        }
        current = next;
        starts.push(t);
        regimes.push(current);
    }
    Ok(CtmcPath {
        starts,
        regimes,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedScheme, StreamKind};

    fn example2() -> GeneratorMatrix {
        GeneratorMatrix::new(vec![vec![-0.5, 0.5], vec![0.5, -0.5]]).unwrap()
    }

    fn rng(k: u64) -> RandomSource {
        SeedScheme::new(2024).stream(k, StreamKind::Hypermodel)
    }

    #[test]
    fn rejects_invalid_generators() {
        assert!(GeneratorMatrix::new(vec![vec![-0.5, 0.4], vec![0.5, -0.5]]).is_err());
        assert!(GeneratorMatrix::new(vec![vec![0.5, -0.5], vec![0.5, -0.5]]).is_err());
        assert!(GeneratorMatrix::new(vec![vec![-2.0, 2.0], vec![0.5, -0.5]]).is_err());
        // reducible: regime 2 is absorbing
        let r = GeneratorMatrix::new(vec![
            vec![-0.5, 0.5, 0.0],
            vec![0.2, -0.4, 0.2],
            vec![0.0, 0.0, 0.0],
        ]);
        assert!(r.is_err());
        assert!(GeneratorMatrix::new(vec![vec![0.0]]).is_ok());
    }

    #[test]
    fn transition_matrix_examples() {
        let h = Hypermodel::new(example2(), 0.0, None).unwrap();
        assert_eq!(h.transition_matrix(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let h = Hypermodel::new(example2(), 0.01, None).unwrap();
        let p = h.transition_matrix();
        assert!((p[0][0] - 0.995).abs() < 1e-15 && (p[0][1] - 0.005).abs() < 1e-15);
        assert!((p[1][0] - 0.005).abs() < 1e-15 && (p[1][1] - 0.995).abs() < 1e-15);
        assert!(Hypermodel::new(example2(), 2.5, None).is_err());
    }

    #[test]
    fn zero_epsilon_never_moves() {
        let mut h = Hypermodel::new(example2(), 0.0, None).unwrap();
        h.set_current(1).unwrap();
        let mut r = rng(0);
        for _ in 0..1000 {
            assert_eq!(h.step(&mut r), 1);
        }
    }

    #[test]
    fn sojourn_length_is_geometric() {
        let mut h = Hypermodel::new(example2(), 0.01, None).unwrap();
        let mut r = rng(1);
        let mut sojourns = Vec::new();
        let mut run = 0u64;
        let mut in_first = h.current() == 0;
        while sojourns.len() < 10_000 {
            let next = h.step(&mut r);
            if in_first {
                run += 1;
                if next != 0 {
                    sojourns.push(run as f64);
                    run = 0;
                }
            }
            in_first = next == 0;
        }
        let mean = sojourns.iter().sum::<f64>() / sojourns.len() as f64;
        assert!((mean / 200.0 - 1.0).abs() < 0.05, "mean sojourn {mean}");
    }

    #[test]
    fn single_regime_path_is_constant() {
        let g = GeneratorMatrix::new(vec![vec![0.0]]).unwrap();
        let p = sample_ctmc_path(&g, 50.0, 0, &mut rng(2)).unwrap();
        assert!(p.jump_times().is_empty());
        assert_eq!(p.regime_at(49.0), 0);
    }

    #[test]
    fn ctmc_holding_times_and_counts() {
        let g = example2();
        let mut r = rng(3);
        let p = sample_ctmc_path(&g, 20_000.0, 0, &mut r).unwrap();
        let segs: Vec<_> = p.segments().collect();
        // drop the censored final segment
        let holds: Vec<f64> = segs[..segs.len() - 1].iter().map(|(a, b, _)| b - a).collect();
        assert!(holds.len() >= 9_000);
        let mean = holds.iter().sum::<f64>() / holds.len() as f64;
        assert!((mean / 2.0 - 1.0).abs() < 0.05, "mean hold {mean}");

        // jumps over [0, T] are Poisson(0.5 T) for a symmetric chain
        let t = 40.0;
        let n_paths = 2000;
        let counts: Vec<f64> = (0..n_paths)
            .map(|_| sample_ctmc_path(&g, t, 0, &mut r).unwrap().jump_times().len() as f64)
            .collect();
        let m = counts.iter().sum::<f64>() / n_paths as f64;
        let se = (0.5 * t / n_paths as f64).sqrt();
        assert!((m - 0.5 * t).abs() < 3.0 * se, "mean count {m}");
        let var = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (n_paths - 1) as f64;
        assert!((var / (0.5 * t) - 1.0).abs() < 0.15, "count variance {var}");
    }

    #[test]
    fn discrete_chain_matches_ctmc_occupation() {
        let g = example2();
        let horizon = 4000.0;
        for &eps in &[0.1, 0.01] {
            let mut h = Hypermodel::new(g.clone(), eps, None).unwrap();
            let mut r = rng(4);
            h.set_current(0).unwrap();
            let steps = (horizon / eps) as usize;
            let mut in_zero = 0usize;
            for _ in 0..steps {
                if h.step(&mut r) == 0 {
                    in_zero += 1;
                }
            }
            let discrete = in_zero as f64 / steps as f64;
            let path = sample_ctmc_path(&g, horizon, 0, &mut rng(5)).unwrap();
            let cont = path.occupation(2)[0];
            assert!((discrete - cont).abs() < 0.05, "eps {eps}: {discrete} vs {cont}");
        }
    }

    #[test]
    fn long_run_occupation_is_half() {
        let mut h = Hypermodel::new(example2(), 0.01, None).unwrap();
        let mut r = rng(6);
        h.reset(&mut r);
        let n = 1_000_000;
        let zeros = (0..n).filter(|_| h.step(&mut r) == 0).count();
        // Autocorrelated samples: standard error inflates by sqrt((1+ρ)/(1-ρ)),
        // ρ = 1 - 2 · 0.005 = 0.99 for this chain.
        let rho: f64 = 0.99;
        let se = (0.25 / n as f64 * (1.0 + rho) / (1.0 - rho)).sqrt();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn path_lookup() {
        let p = CtmcPath::from_segments(vec![(0.0, 0), (1.5, 1), (4.0, 0)], 10.0).unwrap();
        assert_eq!(p.regime_at(0.0), 0);
        assert_eq!(p.regime_at(1.49), 0);
        assert_eq!(p.regime_at(1.5), 1);
        assert_eq!(p.regime_at(9.9), 0);
        let occ = p.occupation(2);
        assert!((occ[1] - 0.25).abs() < 1e-15);
    }
}
