//! Sequential market clearing in seeded random agent order: labour,
//! inter-firm inputs, household goods, then price and wage updates.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{choose_employer, consumption_demand, Firm, FirmId, Household, HouseholdId, JobOffer};

pub const MIN_PRICE: f64 = 0.01;
pub const MAX_PRICE: f64 = 1e6;
/// Labour a household can sell per step.
pub const LABOR_ENDOWMENT: f64 = 1.0;
/// Vacancy ratio at which wages hold steady.
pub const WAGE_BALANCE_POINT: f64 = 0.5;
/// Budgets below this are treated as spent.
const DUST: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentId {
    Firm(FirmId),
    Household(HouseholdId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Good {
    Labor,
    Capital,
    TrophicGood(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub buyer: AgentId,
    pub seller: AgentId,
    pub good: Good,
    pub quantity: f64,
    pub unit_price: f64,
    /// Money that changed hands.
    pub amount: f64,
    pub step: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LaborOutcome {
    pub transactions: Vec<Transaction>,
    pub unemployment: f64,
}

/// Matches each household (in shuffled order) to its best same-sector
/// firm that still has labour budget. A hire is one unit, or whatever
/// fraction of a unit the remaining budget affords.
///
/// Firms must have `labor_budget_left` set beforehand; inactive firms are
/// never offered.
pub fn clear_labor_market<R: Rng + ?Sized>(
    households: &mut [Household],
    firms: &mut [Firm],
    step: u32,
    rng: &mut R,
) -> LaborOutcome {
    let mut order: Vec<usize> = (0..households.len()).collect();
    order.shuffle(rng);
    let mut transactions = Vec::new();
    for h in households.iter_mut() {
        h.labor_supplied = 0.0;
    }
    for hi in order {
        let h = &mut households[hi];
        let offers = firms
            .iter()
            .filter(|f| !f.inactive && f.sector == h.sector && f.labor_budget_left > DUST)
            .map(|f| JobOffer {
                firm: f.id,
                wage: f.wage,
                location: f.location,
            });
        let Some(chosen) = choose_employer(h, offers) else {
            h.employer = None;
            continue;
        };
        let f = firms
            .iter_mut()
            .find(|f| f.id == chosen)
            .expect("offer came from this firm list");
        let affordable = f.labor_budget_left / f.wage;
        let (quantity, amount) = if affordable >= LABOR_ENDOWMENT {
            (LABOR_ENDOWMENT, f.wage * LABOR_ENDOWMENT)
        } else {
            (affordable, f.labor_budget_left)
        };
        let amount = amount.min(f.money);
        f.money -= amount;
        f.labor_budget_left -= amount;
        if f.labor_budget_left <= DUST {
            f.labor_budget_left = 0.0;
        }
        f.labor_hired += quantity;
        h.money += amount;
        h.labor_supplied += quantity;
        h.employer = Some(f.id);
        transactions.push(Transaction {
            buyer: AgentId::Firm(f.id),
            seller: AgentId::Household(h.id),
            good: Good::Labor,
            quantity,
            unit_price: f.wage,
            amount,
            step,
        });
    }
    let unemployment = if households.is_empty() {
        0.0
    } else {
        households.iter().filter(|h| h.labor_supplied == 0.0).count() as f64 / households.len() as f64
    };
    LaborOutcome {
        transactions,
        unemployment,
    }
}

/// One firm buys inputs from its suppliers, splitting its input budget
/// equally across them. `firms` is indexed by firm id.
pub fn procure_inputs(buyer: usize, firms: &mut [Firm], step: u32) -> Vec<Transaction> {
    let n = firms[buyer].suppliers.len();
    if n == 0 || firms[buyer].inactive {
        return Vec::new();
    }
    let share = firms[buyer].budget.input.max(0.0) / n as f64;
    let suppliers = firms[buyer].suppliers.clone();
    let mut out = Vec::new();
    for s in suppliers {
        let (price, stock) = (firms[s.0].price, firms[s.0].output_inventory);
        if !(stock > 0.0) || !(share > 0.0) {
            continue;
        }
        let wanted = share / price;
        let (quantity, amount) = if wanted < stock {
            (wanted, share)
        } else {
            (stock, stock * price)
        };
        let amount = amount.min(firms[buyer].money);
        if !(amount > 0.0) {
            continue;
        }
        {
            let b = &mut firms[buyer];
            b.money -= amount;
            *b.input_inventory.entry(s).or_insert(0.0) += quantity;
        }
        let seller = &mut firms[s.0];
        seller.money += amount;
        seller.output_inventory = (seller.output_inventory - quantity).max(0.0);
        seller.units_sold += quantity;
        out.push(Transaction {
            buyer: AgentId::Firm(firms[buyer].id),
            seller: AgentId::Firm(s),
            good: Good::TrophicGood(firms[s.0].trophic_level),
            quantity,
            unit_price: price,
            amount,
            step,
        });
    }
    out
}

/// Input procurement for every firm with suppliers, lowest trophic level
/// first, shuffled within a level.
pub fn clear_input_market<R: Rng + ?Sized>(firms: &mut [Firm], step: u32, rng: &mut R) -> Vec<Transaction> {
    let mut buyers: Vec<usize> = (0..firms.len()).filter(|i| !firms[*i].suppliers.is_empty()).collect();
    buyers.shuffle(rng);
    buyers.sort_by_key(|i| firms[*i].trophic_level);
    let mut out = Vec::new();
    for b in buyers {
        out.extend(procure_inputs(b, firms, step));
    }
    out
}

/// Households (in shuffled order) spend their per-level budgets on the
/// cheapest available goods of each targeted trophic level.
pub fn clear_goods_market<R: Rng + ?Sized>(
    households: &mut [Household],
    firms: &mut [Firm],
    spend_fraction: f64,
    step: u32,
    rng: &mut R,
) -> Vec<Transaction> {
    let mut order: Vec<usize> = (0..households.len()).collect();
    order.shuffle(rng);
    let mut out = Vec::new();
    for hi in order {
        let h = &mut households[hi];
        for (level, mut budget) in consumption_demand(h, spend_fraction) {
            let mut sellers: Vec<usize> = (0..firms.len())
                .filter(|i| firms[*i].trophic_level == level && firms[*i].output_inventory > 0.0)
                .collect();
            sellers.sort_by(|a, b| firms[*a].price.total_cmp(&firms[*b].price).then(a.cmp(b)));
            for si in sellers {
                if budget <= DUST || h.money <= 0.0 {
                    break;
                }
                let f = &mut firms[si];
                let wanted = budget / f.price;
                let (quantity, amount) = if wanted < f.output_inventory {
                    (wanted, budget)
                } else {
                    (f.output_inventory, f.output_inventory * f.price)
                };
                let amount = amount.min(h.money);
                h.money -= amount;
                budget -= amount;
                f.money += amount;
                f.output_inventory = (f.output_inventory - quantity).max(0.0);
                f.units_sold += quantity;
                out.push(Transaction {
                    buyer: AgentId::Household(h.id),
                    seller: AgentId::Firm(f.id),
                    good: Good::TrophicGood(level),
                    quantity,
                    unit_price: f.price,
                    amount,
                    step,
                });
            }
        }
    }
    out
}

/// Raises the price when stock is short of target and cuts it on a glut.
///
/// The inventory gap is taken relative to the larger of target and stock,
/// so a single adjustment moves the price by at most `responsiveness`.
pub fn adjust_price(price: f64, responsiveness: f64, output_inventory: f64, target_inventory: f64) -> f64 {
    debug_assert!(target_inventory > 0.0);
    let gap = (target_inventory - output_inventory) / target_inventory.max(output_inventory);
    (price * (1.0 + responsiveness * gap)).clamp(MIN_PRICE, MAX_PRICE)
}

/// Raises wages when labour budget goes unspent and cuts them when fully staffed.
pub fn adjust_wage(wage: f64, sensitivity: f64, vacancy_ratio: f64) -> f64 {
    let pressure = (vacancy_ratio - WAGE_BALANCE_POINT) * 2.0;
    (wage * (1.0 + sensitivity * pressure)).clamp(MIN_PRICE, MAX_PRICE)
}
