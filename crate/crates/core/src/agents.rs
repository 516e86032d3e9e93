//! Household and firm state and the per-agent transitions: damage,
//! recovery, Leontief production, budgeting, risk-driven capital targets,
//! relocation, employer choice and consumption planning.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::evolution::{MutationState, PerformanceMemory};
use crate::hazard::{neighborhood_peak, Cell, HazardField, HazardGrid};

/// Productivity never drops below this after damage.
pub const PRODUCTIVITY_FLOOR: f64 = 0.01;
/// Normalised intensity above which households move away.
pub const RELOCATION_THRESHOLD: f64 = 0.1;
pub const RELOCATION_ATTEMPTS: usize = 100;
/// Monetary units per unit of capital.
pub const CAPITAL_PRICE: f64 = 1.0;
pub const MIN_RADIUS: usize = 1;
pub const MAX_RADIUS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FirmId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HouseholdId(pub usize);

impl fmt::Display for FirmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "firm#{}", self.0)
    }
}

impl fmt::Display for HouseholdId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "household#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    Commodity,
    Manufacturer,
}

impl Sector {
    pub fn name(self) -> &'static str {
        match self {
            Sector::Commodity => "commodity",
            Sector::Manufacturer => "manufacturer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LimitingFactor {
    Labor,
    Capital,
    Input,
    None,
}

/// The six evolvable strategy parameters of a firm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyGenome {
    pub labor_weight: f64,
    pub input_weight: f64,
    pub capital_weight: f64,
    pub risk_sensitivity: f64,
    pub price_responsiveness: f64,
    pub wage_sensitivity: f64,
}

impl StrategyGenome {
    pub const N_PARAMS: usize = 6;
    pub const RISK_MAX: f64 = 10.0;
    pub const PRICE_MAX: f64 = 1.0;
    pub const WAGE_MAX: f64 = 1.0;

    /// Equal budget weights, every other parameter at the middle of its range.
    pub fn balanced() -> Self {
        StrategyGenome {
            labor_weight: 1.0 / 3.0,
            input_weight: 1.0 / 3.0,
            capital_weight: 1.0 / 3.0,
            risk_sensitivity: Self::RISK_MAX / 2.0,
            price_responsiveness: Self::PRICE_MAX / 2.0,
            wage_sensitivity: Self::WAGE_MAX / 2.0,
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.labor_weight,
            self.input_weight,
            self.capital_weight,
            self.risk_sensitivity,
            self.price_responsiveness,
            self.wage_sensitivity,
        ]
    }

    pub fn from_array(p: [f64; 6]) -> Self {
        StrategyGenome {
            labor_weight: p[0],
            input_weight: p[1],
            capital_weight: p[2],
            risk_sensitivity: p[3],
            price_responsiveness: p[4],
            wage_sensitivity: p[5],
        }
    }

    /// Upper bound of each parameter, in array order. Lower bounds are 0.
    pub fn upper_bounds() -> [f64; 6] {
        [1.0, 1.0, 1.0, Self::RISK_MAX, Self::PRICE_MAX, Self::WAGE_MAX]
    }

    /// Clamps every parameter into bounds and renormalises the budget
    /// weights onto the simplex. All-zero weights reset to equal thirds.
    pub fn sanitized(self) -> Self {
        let mut p = self.to_array();
        for (v, hi) in p.iter_mut().zip(Self::upper_bounds()) {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, hi) };
        }
        let sum = p[0] + p[1] + p[2];
        if sum > 0.0 {
            p[0] /= sum;
            p[1] /= sum;
            p[2] = (1.0 - p[0] - p[1]).max(0.0);
        } else {
            p[0] = 1.0 / 3.0;
            p[1] = 1.0 / 3.0;
            p[2] = 1.0 / 3.0;
        }
        Self::from_array(p)
    }

    pub fn is_valid(&self) -> bool {
        let p = self.to_array();
        let in_bounds = p
            .iter()
            .zip(Self::upper_bounds())
            .all(|(v, hi)| (0.0..=hi).contains(v));
        in_bounds && (p[0] + p[1] + p[2] - 1.0).abs() <= 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeontiefCoefficients {
    pub a_labor: f64,
    pub a_capital: f64,
    pub a_input: f64,
}

impl Default for LeontiefCoefficients {
    fn default() -> Self {
        LeontiefCoefficients {
            a_labor: 1.0,
            a_capital: 1.0,
            a_input: 1.0,
        }
    }
}

impl LeontiefCoefficients {
    pub fn is_valid(&self) -> bool {
        [self.a_labor, self.a_capital, self.a_input]
            .iter()
            .all(|a| *a > 0.0 && a.is_finite())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub labor: f64,
    pub input: f64,
    pub capital: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Firm {
    pub id: FirmId,
    pub location: Cell,
    pub sector: Sector,
    pub trophic_level: u32,
    pub money: f64,
    pub capital: f64,
    pub capital_target: f64,
    pub output_inventory: f64,
    /// Input stock per supplier good, keyed by the supplying firm.
    pub input_inventory: BTreeMap<FirmId, f64>,
    pub suppliers: Vec<FirmId>,
    pub price: f64,
    pub wage: f64,
    pub productivity_multiplier: f64,
    pub recovery_steps_left: u32,
    pub monitoring_radius: usize,
    pub genome: StrategyGenome,
    pub age: u32,
    pub memory: PerformanceMemory,
    pub mutation: MutationState,
    pub labor_hired: f64,
    pub limiting_factor: LimitingFactor,

    // per-step bookkeeping
    pub budget: Budget,
    pub labor_budget_left: f64,
    pub production: f64,
    pub units_sold: f64,
    pub sales_history: VecDeque<f64>,
    pub last_damage: f64,
    /// Failed and waiting for replacement; produces nothing meanwhile.
    pub inactive: bool,
}

impl Firm {
    /// A fresh firm with empty memory and full productivity.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: FirmId,
        location: Cell,
        sector: Sector,
        suppliers: Vec<FirmId>,
        money: f64,
        capital: f64,
        inventory: f64,
        price: f64,
        wage: f64,
        monitoring_radius: usize,
        genome: StrategyGenome,
    ) -> Self {
        let trophic_level = match sector {
            Sector::Commodity => 1,
            Sector::Manufacturer => 2,
        };
        let input_inventory = suppliers.iter().map(|s| (*s, inventory)).collect();
        Firm {
            id,
            location,
            sector,
            trophic_level,
            money,
            capital,
            capital_target: capital,
            output_inventory: inventory,
            input_inventory,
            suppliers,
            price,
            wage,
            productivity_multiplier: 1.0,
            recovery_steps_left: 0,
            monitoring_radius,
            genome,
            age: 0,
            memory: PerformanceMemory::default(),
            mutation: MutationState::default(),
            labor_hired: 0.0,
            limiting_factor: LimitingFactor::None,
            budget: Budget::default(),
            labor_budget_left: 0.0,
            production: 0.0,
            units_sold: 0.0,
            sales_history: VecDeque::with_capacity(SALES_WINDOW),
            last_damage: 0.0,
            inactive: false,
        }
    }

    /// Trailing mean of units sold, floored at 1.
    pub fn target_inventory(&self) -> f64 {
        if self.sales_history.is_empty() {
            return 1.0;
        }
        let mean = self.sales_history.iter().sum::<f64>() / self.sales_history.len() as f64;
        mean.max(1.0)
    }

    pub(crate) fn close_sales_period(&mut self) {
        if self.sales_history.len() == SALES_WINDOW {
            self.sales_history.pop_front();
        }
        self.sales_history.push_back(self.units_sold);
    }

    pub(crate) fn reset_step(&mut self) {
        self.labor_hired = 0.0;
        self.budget = Budget::default();
        self.labor_budget_left = 0.0;
        self.production = 0.0;
        self.units_sold = 0.0;
        self.limiting_factor = LimitingFactor::None;
        self.last_damage = 0.0;
    }
}

pub(crate) const SALES_WINDOW: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Household {
    pub id: HouseholdId,
    pub location: Cell,
    pub sector: Sector,
    pub money: f64,
    pub employer: Option<FirmId>,
    pub monitoring_radius: usize,
    pub consumption_levels: BTreeSet<u32>,
    pub labor_supplied: f64,
    /// Wage-equivalent cost per cell of commute distance.
    pub distance_cost: f64,
}

/// Applies capital, productivity and inventory damage. Money is untouched.
pub fn apply_damage(firm: &mut Firm, d: f64, recovery_steps: u32) {
    debug_assert!((0.0..=1.0).contains(&d));
    if !(d > 0.0) {
        return;
    }
    let keep = 1.0 - d;
    firm.capital *= keep;
    firm.output_inventory *= keep;
    for v in firm.input_inventory.values_mut() {
        *v *= keep;
    }
    firm.productivity_multiplier = firm.productivity_multiplier.min(keep).max(PRODUCTIVITY_FLOOR);
    firm.recovery_steps_left = recovery_steps;
    if recovery_steps == 0 {
        firm.productivity_multiplier = 1.0;
    }
    firm.last_damage = firm.last_damage.max(d);
}

/// Moves productivity linearly back to 1 over the remaining recovery steps.
pub fn recover_productivity(firm: &mut Firm) {
    if firm.recovery_steps_left == 0 {
        firm.productivity_multiplier = 1.0;
        return;
    }
    let gap = 1.0 - firm.productivity_multiplier;
    firm.productivity_multiplier += gap / f64::from(firm.recovery_steps_left);
    firm.recovery_steps_left -= 1;
    if firm.recovery_steps_left == 0 {
        firm.productivity_multiplier = 1.0;
    }
}

/// Fixed-proportions production. Consumes inputs, adds to output
/// inventory, and records the binding constraint (ties go Labor, then
/// Capital, then Input).
pub fn leontief_output(firm: &mut Firm, coeffs: &LeontiefCoefficients) -> (f64, LimitingFactor) {
    let mut q_raw = firm.labor_hired / coeffs.a_labor;
    let mut limiting = LimitingFactor::Labor;
    let from_capital = firm.capital / coeffs.a_capital;
    if from_capital < q_raw {
        q_raw = from_capital;
        limiting = LimitingFactor::Capital;
    }
    let uses_inputs = firm.sector == Sector::Manufacturer && !firm.suppliers.is_empty();
    if uses_inputs {
        let from_inputs = firm
            .suppliers
            .iter()
            .map(|s| firm.input_inventory.get(s).copied().unwrap_or(0.0) / coeffs.a_input)
            .fold(f64::INFINITY, f64::min);
        if from_inputs < q_raw {
            q_raw = from_inputs;
            limiting = LimitingFactor::Input;
        }
    }
    let q_raw = q_raw.max(0.0);
    if uses_inputs && q_raw > 0.0 {
        let used = q_raw * coeffs.a_input;
        for s in &firm.suppliers {
            let v = firm.input_inventory.entry(*s).or_insert(0.0);
            *v = (*v - used).max(0.0);
        }
    }
    let q = q_raw * firm.productivity_multiplier;
    firm.output_inventory += q;
    firm.production = q;
    firm.limiting_factor = limiting;
    (q, limiting)
}

/// Splits money by the genome's budget weights; the capital budget takes
/// the remainder so the three sum to `money` exactly.
pub fn allocate_budget(firm: &Firm) -> Budget {
    let g = &firm.genome;
    let labor = firm.money * g.labor_weight;
    let input = firm.money * g.input_weight;
    let capital = firm.money - labor - input;
    Budget {
        labor,
        input,
        capital,
    }
}

/// Raises the capital requirement in proportion to nearby hazard.
pub fn update_capital_target(firm: &mut Firm, local_hazard: f64) {
    if local_hazard > 0.0 {
        let grown = firm.capital_target * (1.0 + firm.genome.risk_sensitivity * local_hazard);
        firm.capital_target = grown.min(MAX_CAPITAL_TARGET);
    }
}

/// Keeps repeated ratcheting finite.
pub const MAX_CAPITAL_TARGET: f64 = 1e12;

/// Spends up to the capital budget closing the gap to the capital target.
/// Returns the money spent, which leaves the economy.
pub fn purchase_capital(firm: &mut Firm) -> f64 {
    let gap = (firm.capital_target - firm.capital).max(0.0);
    let spend = (gap * CAPITAL_PRICE)
        .min(firm.budget.capital.max(0.0))
        .min(firm.money);
    if !(spend > 0.0) {
        return 0.0;
    }
    firm.money -= spend;
    firm.capital += spend / CAPITAL_PRICE;
    spend
}

/// Moves a household out of a hazardous neighbourhood to a random cell
/// whose own normalised intensity is at most the threshold. Gives up after
/// a fixed number of rejected draws. Returns whether it moved.
pub fn household_maybe_relocate<R: Rng + ?Sized>(
    h: &mut Household,
    field: &HazardField,
    grid: &HazardGrid,
    rng: &mut R,
) -> bool {
    if neighborhood_peak(field, h.location, h.monitoring_radius, grid) <= RELOCATION_THRESHOLD {
        return false;
    }
    for _ in 0..RELOCATION_ATTEMPTS {
        let idx = rng.gen_range(0..grid.n_cells());
        let cell = grid.cell(idx);
        if field.normalized_at(grid, cell) <= RELOCATION_THRESHOLD {
            h.location = cell;
            h.employer = None;
            return true;
        }
    }
    false
}

/// What a household needs to know about a prospective employer.
#[derive(Debug, Clone, Copy)]
pub struct JobOffer {
    pub firm: FirmId,
    pub wage: f64,
    pub location: Cell,
}

/// Best wage net of commuting cost; `None` unless strictly positive.
/// Ties go to the lowest firm id.
pub fn choose_employer(h: &Household, candidates: impl IntoIterator<Item = JobOffer>) -> Option<FirmId> {
    let mut best: Option<(f64, FirmId)> = None;
    for offer in candidates {
        let score = offer.wage - h.distance_cost * h.location.chebyshev(offer.location) as f64;
        let better = match best {
            None => true,
            Some((s, id)) => score > s || (score == s && offer.firm < id),
        };
        if better {
            best = Some((score, offer.firm));
        }
    }
    best.filter(|(s, _)| *s > 0.0).map(|(_, id)| id)
}

/// Spending budget per targeted trophic level.
pub fn consumption_demand(h: &Household, spend_fraction: f64) -> BTreeMap<u32, f64> {
    let n = h.consumption_levels.len();
    if n == 0 {
        return BTreeMap::new();
    }
    let each = h.money * spend_fraction / n as f64;
    h.consumption_levels.iter().map(|l| (*l, each)).collect()
}
