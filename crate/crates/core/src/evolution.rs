//! Firm strategy learning: rolling performance memory, a four-part fitness
//! score, hill-climbing Gaussian mutation, and replacement of failed firms
//! by mutated offspring of surviving ones.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::agents::{Firm, LimitingFactor, StrategyGenome};
use crate::error::{Error, Result};

pub const MEMORY_WINDOW: usize = 10;
pub const MUTATION_INTERVAL: u32 = 5;
pub const MUTATION_PROBABILITY: f64 = 0.30;

pub const SIGMA_IMPROVED: f64 = 0.025;
pub const SIGMA_INITIAL: f64 = 0.05;
pub const SIGMA_DECLINED: f64 = 0.10;

pub const WEIGHT_GROWTH: f64 = 0.4;
pub const WEIGHT_STABILITY: f64 = 0.3;
pub const WEIGHT_SURVIVAL: f64 = 0.2;
pub const WEIGHT_BALANCE: f64 = 0.1;
/// Age at which the survival component saturates.
pub const SURVIVAL_HORIZON: u32 = 20;
const GROWTH_EPS: f64 = 1e-6;

pub const MIN_SURVIVAL_MONEY: f64 = 1.0;
pub const DECLINE_LOOKBACK: usize = 5;
pub const DECLINE_FRACTION: f64 = 0.5;
pub const ESTABLISHMENT_STEPS: u32 = 5;
pub const REPLACEMENT_CAP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub money: f64,
    pub production: f64,
    pub capital: f64,
    pub limiting: LimitingFactor,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerformanceMemory {
    pub window: VecDeque<StepRecord>,
    pub fitness_history: VecDeque<f64>,
}

impl PerformanceMemory {
    pub fn record(&mut self, rec: StepRecord) {
        if self.window.len() == MEMORY_WINDOW {
            self.window.pop_front();
        }
        self.window.push_back(rec);
    }

    pub fn push_fitness(&mut self, f: f64) {
        if self.fitness_history.len() == 2 {
            self.fitness_history.pop_front();
        }
        self.fitness_history.push_back(f);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationState {
    pub sigma: f64,
    pub last_fitness: Option<f64>,
}

impl Default for MutationState {
    fn default() -> Self {
        MutationState {
            sigma: SIGMA_INITIAL,
            last_fitness: None,
        }
    }
}

/// Fitness components, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessParts {
    pub growth: f64,
    pub stability: f64,
    pub survival: f64,
    pub balance: f64,
}

impl FitnessParts {
    pub fn score(&self) -> f64 {
        WEIGHT_GROWTH * self.growth
            + WEIGHT_STABILITY * self.stability
            + WEIGHT_SURVIVAL * self.survival
            + WEIGHT_BALANCE * self.balance
    }
}

pub fn fitness_parts(memory: &PerformanceMemory, age: u32) -> Result<FitnessParts> {
    let w = &memory.window;
    let (Some(first), Some(last)) = (w.front(), w.back()) else {
        return Err(Error::NoPerformanceData);
    };

    let rate = (last.money - first.money) / first.money.max(GROWTH_EPS);
    let growth = rate.max(0.0).tanh();

    let n = w.len() as f64;
    let mean = w.iter().map(|r| r.production).sum::<f64>() / n;
    let stability = if mean > 0.0 {
        let var = w.iter().map(|r| (r.production - mean).powi(2)).sum::<f64>() / n;
        (1.0 - var.sqrt() / mean).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let survival = (f64::from(age) / f64::from(SURVIVAL_HORIZON)).min(1.0);

    let mut counts = [0usize; 3];
    for r in w {
        match r.limiting {
            LimitingFactor::Labor => counts[0] += 1,
            LimitingFactor::Capital => counts[1] += 1,
            LimitingFactor::Input => counts[2] += 1,
            LimitingFactor::None => {}
        }
    }
    let total: usize = counts.iter().sum();
    let balance = if total == 0 {
        0.0
    } else {
        let h: f64 = counts
            .iter()
            .filter(|c| **c > 0)
            .map(|c| {
                let p = *c as f64 / total as f64;
                -p * p.ln()
            })
            .sum();
        (h / 3f64.ln()).clamp(0.0, 1.0)
    };

    Ok(FitnessParts {
        growth,
        stability,
        survival,
        balance,
    })
}

/// Weighted sum of money growth, production stability, longevity and
/// bottleneck diversity over the memory window.
pub fn fitness(memory: &PerformanceMemory, age: u32) -> Result<f64> {
    fitness_parts(memory, age).map(|p| p.score())
}

/// Per-parameter mutation mask. Only every fifth step is eligible; the rng
/// is not touched otherwise.
pub fn should_mutate<R: Rng + ?Sized>(step: u32, rng: &mut R) -> [bool; 6] {
    let mut mask = [false; 6];
    if step % MUTATION_INTERVAL != 0 {
        return mask;
    }
    for m in &mut mask {
        *m = rng.gen_bool(MUTATION_PROBABILITY);
    }
    mask
}

/// Hill-climbing step size: small after improvement, large after decline.
pub fn select_sigma(state: &mut MutationState, current_fitness: f64) -> f64 {
    state.sigma = match state.last_fitness {
        None => SIGMA_INITIAL,
        Some(last) if current_fitness > last => SIGMA_IMPROVED,
        Some(last) if current_fitness < last => SIGMA_DECLINED,
        Some(_) => state.sigma,
    };
    state.last_fitness = Some(current_fitness);
    state.sigma
}

/// Multiplies each selected parameter by `1 + N(0, sigma)`, clamps to
/// bounds and puts the budget weights back on the simplex.
pub fn mutate<R: Rng + ?Sized>(
    genome: &StrategyGenome,
    mask: &[bool; 6],
    sigma: f64,
    rng: &mut R,
) -> StrategyGenome {
    if !mask.iter().any(|m| *m) {
        return *genome;
    }
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let mut p = genome.to_array();
    for (v, selected) in p.iter_mut().zip(mask) {
        if *selected {
            *v *= 1.0 + noise.sample(rng);
        }
    }
    let bounds = StrategyGenome::upper_bounds();
    for (i, v) in p.iter_mut().enumerate() {
        if mask[i] {
            *v = v.clamp(0.0, bounds[i]);
        }
    }
    if mask[..3].iter().any(|m| *m) {
        StrategyGenome::from_array(p).sanitized()
    } else {
        StrategyGenome::from_array(p)
    }
}

/// Below the survival threshold, or lost more than half its money over
/// the last five recorded steps.
pub fn is_failed(firm: &Firm) -> bool {
    if firm.money < MIN_SURVIVAL_MONEY {
        return true;
    }
    let w = &firm.memory.window;
    if w.len() >= DECLINE_LOOKBACK {
        let then = w[w.len() - DECLINE_LOOKBACK].money;
        return firm.money < DECLINE_FRACTION * then;
    }
    false
}

/// What a newly founded firm starts with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryEndowment {
    pub money: f64,
    pub capital: f64,
}

impl Default for EntryEndowment {
    fn default() -> Self {
        EntryEndowment {
            money: 10.0,
            capital: 5.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplacementOutcome {
    /// Firms classified as failed this step, in id order.
    pub failed: Vec<usize>,
    /// `(replaced slot, parent slot)` pairs.
    pub replaced: Vec<(usize, usize)>,
    /// Money injected as entry endowments.
    pub entry_money: f64,
    /// Money held by removed firms, which leaves the economy with them.
    pub removed_money: f64,
}

/// Classifies failures and swaps up to a quarter of the population for
/// offspring of fitness-proportionally chosen survivors. Nothing is
/// replaced during the establishment period or when no survivor exists.
/// Offspring keep the dead firm's slot, id, place in the network and
/// monitoring radius, and take the parent's genome (mutated), price and wage.
pub fn replace_failed<R: Rng + ?Sized>(
    firms: &mut [Firm],
    step: u32,
    endowment: &EntryEndowment,
    rng: &mut R,
) -> ReplacementOutcome {
    let failed: Vec<usize> = (0..firms.len()).filter(|i| is_failed(&firms[*i])).collect();
    let mut out = ReplacementOutcome {
        failed: failed.clone(),
        ..Default::default()
    };
    if step <= ESTABLISHMENT_STEPS || failed.is_empty() {
        return out;
    }
    let parents: Vec<usize> = (0..firms.len()).filter(|i| !failed.contains(i)).collect();
    if parents.is_empty() {
        return out;
    }
    let fit = |f: &Firm| fitness(&f.memory, f.age).unwrap_or(0.0);

    let mut queue: Vec<(f64, usize)> = failed.iter().map(|i| (fit(&firms[*i]), *i)).collect();
    queue.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let cap = (REPLACEMENT_CAP * firms.len() as f64).floor() as usize;

    let weights: Vec<f64> = parents.iter().map(|i| fit(&firms[*i])).collect();
    let total: f64 = weights.iter().sum();

    for &(_, slot) in queue.iter().take(cap) {
        let parent = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = parents[parents.len() - 1];
            for (p, w) in parents.iter().zip(&weights) {
                if r < *w {
                    pick = *p;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            parents[rng.gen_range(0..parents.len())]
        };
        let (genome, price, wage) = {
            let p = &firms[parent];
            (p.genome, p.price, p.wage)
        };
        let child_genome = mutate(&genome, &[true; 6], SIGMA_INITIAL, rng);

        let dead = &firms[slot];
        out.removed_money += dead.money;
        let mut child = Firm::new(
            dead.id,
            dead.location,
            dead.sector,
            dead.suppliers.clone(),
            endowment.money,
            endowment.capital,
            0.0,
            price,
            wage,
            dead.monitoring_radius,
            child_genome,
        );
        child.trophic_level = dead.trophic_level;
        out.entry_money += endowment.money;
        firms[slot] = child;
        out.replaced.push((slot, parent));
    }
    out
}
