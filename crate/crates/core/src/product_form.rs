//! Product-form state probabilities for multiprogrammed upstreams.
//!
//! With per-station relative demands `D_k` and population `N`, a state
//! `(n_1, .., n_m)` summing to `N` has probability
//! `Π D_k^{n_k} / G(N)`. The normalizing constants `G(0..N)` come from the
//! convolution fold, which visits each station once instead of enumerating
//! every state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THETA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductFormModel {
    pub demands: Vec<f64>,
    pub population: u64,
    /// `G(0..=population)`.
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateVector {
    pub counts: Vec<u64>,
}

impl StateVector {
    pub fn population(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpawnPlan {
    pub target_station: usize,
    pub thread_count: u64,
    pub zeroed_station: usize,
}

fn check_demands(demands: &[f64]) -> Result<()> {
    if demands.is_empty() {
        return Err(Error::Empty("demands"));
    }
    if let Some((i, d)) = demands.iter().enumerate().find(|(_, d)| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::invalid(format!("demands[{i}]"), format!("{d} must be > 0")));
    }
    Ok(())
}

/// `G(0..=population)` by the convolution fold
/// `g[n] += D_k · g[n-1]`, ascending in `n`, once per station.
pub fn normalizing_constant(demands: &[f64], population: u64) -> Result<Vec<f64>> {
    check_demands(demands)?;
    let n = population as usize;
    let mut g = vec![0.0; n + 1];
    g[0] = 1.0;
    for &d in demands {
        for i in 1..=n {
            g[i] += d * g[i - 1];
        }
    }
    Ok(g)
}

impl ProductFormModel {
    pub fn new(demands: Vec<f64>, population: u64) -> Result<Self> {
        let g = normalizing_constant(&demands, population)?;
        Ok(ProductFormModel { demands, population, g })
    }

    pub fn normalizing_constant(&self) -> f64 {
        self.g[self.population as usize]
    }
}

pub fn state_probability(model: &ProductFormModel, state: &StateVector) -> Result<f64> {
    if state.counts.len() != model.demands.len() {
        return Err(Error::Mismatch {
            what: "state stations vs demands",
            left: state.counts.len(),
            right: model.demands.len(),
        });
    }
    let got = state.population();
    if got != model.population {
        return Err(Error::PopulationMismatch {
            got,
            expected: model.population,
        });
    }
    let weight: f64 = model
        .demands
        .iter()
        .zip(&state.counts)
        .map(|(d, &c)| d.powf(c as f64))
        .product();
    Ok(weight / model.normalizing_constant())
}

/// Every composition of `population` into `stations` non-negative parts, in
/// lexicographic order.
pub fn enumerate_states(stations: usize, population: u64) -> Vec<StateVector> {
    fn fill(prefix: &mut Vec<u64>, left: u64, slots: usize, out: &mut Vec<StateVector>) {
        if slots == 1 {
            prefix.push(left);
            out.push(StateVector { counts: prefix.clone() });
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            fill(prefix, left - c, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if stations > 0 {
        fill(&mut Vec::with_capacity(stations), population, stations, &mut out);
    }
    out
}

/// `j` dominates `i` when its growth value is at least `theta` times larger,
/// and strictly larger, so nothing dominates a zero with a zero.
pub fn dominates(q_i: u64, q_j: u64, theta: f64) -> bool {
    q_j > q_i && q_j as f64 >= theta * q_i as f64
}

/// Threads for a triggered spawn: `prob · q_i` rounded half up, and at least
/// one whenever the product is positive.
pub fn spawn_threads(prob: f64, q_i: u64) -> u64 {
    let prob = if prob.is_finite() { prob.clamp(0.0, 1.0) } else { 0.0 };
    let product = prob * q_i as f64;
    if product <= 0.0 {
        return 0;
    }
    ((product + 0.5).floor() as u64).clamp(1, q_i)
}

/// Scales growth values to a state of the given population, largest
/// remainder first (ties to the lowest index). All-zero values put the whole
/// population on the first station.
pub fn scale_to_population(values: &[u64], population: u64) -> StateVector {
    let total: u128 = values.iter().map(|&v| v as u128).sum();
    if values.is_empty() {
        return StateVector { counts: vec![] };
    }
    if total == 0 {
        let mut counts = vec![0; values.len()];
        counts[0] = population;
        return StateVector { counts };
    }
    let n = population as u128;
    let mut counts: Vec<u64> = values.iter().map(|&v| (v as u128 * n / total) as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<(usize, u128)> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| (i, (v as u128 * n) % total))
        .collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(i, _) in order.iter().take((population - assigned) as usize) {
        counts[i] += 1;
    }
    StateVector { counts }
}

/// Spawn plans for one multiprogramming level.
///
/// The population is `level`. Each dominated station is zeroed once, with
/// its work spawned onto the largest station dominating it (lowest index on
/// ties). That station is never itself dominated, so no plan targets a
/// station another plan zeroes. Thread counts use the probability of the
/// observed growth values scaled to the population.
pub fn apply_multiprogram(level: u64, growth_values: &[u64], demands: &[f64], theta: f64) -> Result<Vec<SpawnPlan>> {
    if level == 0 {
        return Err(Error::invalid("d_m", "degree of multiprogramming must be >= 1"));
    }
    if growth_values.len() != demands.len() {
        return Err(Error::Mismatch {
            what: "growth values vs demands",
            left: growth_values.len(),
            right: demands.len(),
        });
    }
    if !(theta.is_finite() && theta > 1.0) {
        return Err(Error::invalid("theta", format!("{theta} must be > 1")));
    }
    let model = ProductFormModel::new(demands.to_vec(), level)?;
    let state = scale_to_population(growth_values, level);
    let prob = state_probability(&model, &state)?;

    let mut plans = Vec::new();
    for (i, &q_i) in growth_values.iter().enumerate() {
        let target = growth_values
            .iter()
            .enumerate()
            .filter(|&(j, &q_j)| j != i && dominates(q_i, q_j, theta))
            .fold(None, |best: Option<(usize, u64)>, (j, &q_j)| match best {
                Some((_, bq)) if bq >= q_j => best,
                _ => Some((j, q_j)),
            });
        if let Some((j, _)) = target {
            plans.push(SpawnPlan {
                target_station: j,
                thread_count: spawn_threads(prob, q_i),
                zeroed_station: i,
            });
        }
    }
    Ok(plans)
}

/// Growth values after applying plans: every zeroed station drops to 0.
pub fn zero_dominated(growth_values: &[u64], plans: &[SpawnPlan]) -> Vec<u64> {
    let mut out = growth_values.to_vec();
    for p in plans {
        out[p.zeroed_station] = 0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sum of demand products over every state, by enumeration.
    fn brute_g(demands: &[f64], n: u64) -> f64 {
        enumerate_states(demands.len(), n)
            .iter()
            .map(|s| {
                demands
                    .iter()
                    .zip(&s.counts)
                    .map(|(d, &c)| d.powi(c as i32))
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn g_examples() {
        assert_eq!(normalizing_constant(&[1.0, 1.0], 2).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(normalizing_constant(&[1.0, 2.0], 2).unwrap()[2], 7.0);
        assert_eq!(brute_g(&[1.0, 2.0], 2), 7.0);
        let g = normalizing_constant(&[1.5], 4).unwrap();
        assert!((g[4] - 1.5f64.powi(4)).abs() < 1e-12);
        assert_eq!(normalizing_constant(&[0.5, 3.0], 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn g_rejects_non_positive() {
        assert!(normalizing_constant(&[1.0, 0.0], 2).is_err());
        assert!(normalizing_constant(&[-1.0], 2).is_err());
        assert!(normalizing_constant(&[], 2).is_err());
    }

    #[test]
    fn probability_examples() {
        let m = ProductFormModel::new(vec![1.0, 1.0], 2).unwrap();
        let p = state_probability(&m, &StateVector { counts: vec![1, 1] }).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-12);

        let m = ProductFormModel::new(vec![1.0, 2.0], 2).unwrap();
        let p = state_probability(&m, &StateVector { counts: vec![0, 2] }).unwrap();
        assert!((p - 4.0 / 7.0).abs() < 1e-12);

        let m = ProductFormModel::new(vec![3.0], 5).unwrap();
        assert!((state_probability(&m, &StateVector { counts: vec![5] }).unwrap() - 1.0).abs() < 1e-12);

        assert!(matches!(
            state_probability(&m, &StateVector { counts: vec![4] }),
            Err(Error::PopulationMismatch { .. })
        ));
    }

    #[test]
    fn enumeration_order() {
        let s: Vec<Vec<u64>> = enumerate_states(2, 2).into_iter().map(|s| s.counts).collect();
        assert_eq!(s, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(enumerate_states(3, 0), vec![StateVector { counts: vec![0, 0, 0] }]);
        assert_eq!(enumerate_states(1, 5), vec![StateVector { counts: vec![5] }]);
    }

    #[test]
    fn dominance() {
        assert!(dominates(3, 8, 2.0));
        assert!(!dominates(3, 5, 2.0));
        assert!(!dominates(0, 0, 2.0));
        assert!(dominates(0, 1, 2.0));
    }

    #[test]
    fn spawn_counts() {
        assert_eq!(spawn_threads(0.25, 8), 2);
        assert_eq!(spawn_threads(0.0, 8), 0);
        assert_eq!(spawn_threads(1.0, 5), 5);
        assert_eq!(spawn_threads(0.01, 5), 1);
        assert_eq!(spawn_threads(0.3, 5), 2); // 1.5 rounds up
    }

    #[test]
    fn scaling_largest_remainder() {
        assert_eq!(scale_to_population(&[2, 8], 2).counts, vec![0, 2]);
        assert_eq!(scale_to_population(&[1, 1, 1], 2).counts, vec![1, 1, 0]);
        assert_eq!(scale_to_population(&[0, 0], 3).counts, vec![3, 0]);
        assert_eq!(scale_to_population(&[5, 3], 8).counts, vec![5, 3]);
    }

    #[test]
    fn multiprogram_examples() {
        assert!(apply_multiprogram(1, &[4, 4, 4], &[1.0, 1.0, 1.0], DEFAULT_THETA)
            .unwrap()
            .is_empty());

        let plans = apply_multiprogram(2, &[2, 8], &[1.0, 1.0], DEFAULT_THETA).unwrap();
        // state (0, 2) has probability 1/3; 1/3 · 2 rounds to 1
        assert_eq!(
            plans,
            vec![SpawnPlan {
                target_station: 1,
                thread_count: 1,
                zeroed_station: 0
            }]
        );
        assert_eq!(zero_dominated(&[2, 8], &plans), vec![0, 8]);

        assert!(apply_multiprogram(0, &[2, 8], &[1.0, 1.0], DEFAULT_THETA).is_err());
        assert!(apply_multiprogram(2, &[2, 8], &[1.0], DEFAULT_THETA).is_err());
    }

    #[test]
    fn chains_never_target_a_zeroed_station() {
        let plans = apply_multiprogram(3, &[1, 2, 4, 8], &[1.0, 1.0, 1.0, 1.0], DEFAULT_THETA).unwrap();
        assert_eq!(plans.len(), 3);
        for p in &plans {
            assert_eq!(p.target_station, 3);
            assert!(plans.iter().all(|q| q.zeroed_station != p.target_station));
        }
    }
}
