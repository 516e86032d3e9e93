//! World construction, the fixed per-step phase schedule, and scenario runs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use log::{info, warn};
use rand::seq::index::sample;
use rand::Rng;

use crate::agents::{
    allocate_budget, apply_damage, household_maybe_relocate, leontief_output, purchase_capital,
    recover_productivity, update_capital_target, Firm, FirmId, Household, HouseholdId, Sector,
    StrategyGenome, CAPITAL_PRICE, MAX_RADIUS, MIN_RADIUS,
};
use crate::config::{load_inputs, HazardSchedule, ScenarioConfig};
use crate::error::{Error, Result};
use crate::evolution::{
    fitness, is_failed, mutate, replace_failed, select_sigma, should_mutate, StepRecord, MUTATION_INTERVAL, SIGMA_INITIAL,
};
use crate::hazard::{damage_ratio, neighborhood_peak, sample_step_hazard, HazardField, HazardGrid, ImpactCurve};
use crate::markets::{
    adjust_price, adjust_wage, clear_goods_market, clear_input_market, clear_labor_market, AgentId, Good,
    Transaction,
};
use crate::metrics::{MetricsFrame, StepFlows};
use crate::rng::RngStreams;

/// Absolute per-step tolerance of the money audit.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;
/// Return period used to rank cells for firm placement.
pub const PLACEMENT_RETURN_PERIOD: f64 = 100.0;
pub const DISTANCE_COST_RANGE: (f64, f64) = (0.01, 0.1);

#[derive(Debug, Clone)]
pub struct World {
    pub config: ScenarioConfig,
    pub hazard: HazardSchedule,
    pub curve: ImpactCurve,
    pub step: u32,
    pub firms: Vec<Firm>,
    pub households: Vec<Household>,
    pub rngs: RngStreams,
    /// Transactions of the most recent step.
    pub ledger: Vec<Transaction>,
    pub metrics: Vec<MetricsFrame>,
    pub last_field: Option<HazardField>,
}

/// Cells eligible for firm placement: the top decile by RP-100 depth,
/// widened to the top quartile and then the whole grid when too small.
/// A zero grid places uniformly.
pub fn placement_pool(grid: &HazardGrid, n_firms: usize) -> Vec<usize> {
    let n = grid.n_cells();
    if grid.is_zero() {
        return (0..n).collect();
    }
    let mut ranked: Vec<(f64, usize)> = (0..n)
        .map(|i| (grid.intensity_at(i, PLACEMENT_RETURN_PERIOD), i))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let decile = n.div_ceil(10);
    let quartile = n.div_ceil(4);
    let take = if decile >= n_firms {
        decile
    } else if quartile >= n_firms {
        warn!("top decile has {decile} cells for {n_firms} firms; placing in top quartile");
        quartile
    } else {
        warn!("top quartile has {quartile} cells for {n_firms} firms; placing anywhere");
        n
    };
    ranked.truncate(take);
    ranked.into_iter().map(|(_, i)| i).collect()
}

impl World {
    /// Builds the initial world. With hazards disabled the world is built
    /// and run against an all-zero copy of the hazard schedule.
    pub fn new(config: ScenarioConfig, hazard: HazardSchedule, curve: ImpactCurve) -> Result<Self> {
        config.validate()?;
        let hazard = if config.hazard_enabled {
            hazard
        } else {
            hazard.zeroed()
        };
        let mut rngs = RngStreams::new(config.seed);
        let rng = &mut rngs.init;
        let grid = hazard.base();

        if grid.n_cells() < config.n_firms {
            return Err(Error::InvalidConfig(format!(
                "{} firms do not fit on a {}x{} grid",
                config.n_firms,
                grid.width(),
                grid.height()
            )));
        }
        let pool = placement_pool(grid, config.n_firms);
        let cells: Vec<usize> = sample(rng, pool.len(), config.n_firms)
            .into_iter()
            .map(|k| pool[k])
            .collect();

        let (n_com, _) = config.sector_split();
        let commodity_ids: Vec<FirmId> = (0..n_com).map(FirmId).collect();
        let mut firms = Vec::with_capacity(config.n_firms);
        for (i, cell) in cells.into_iter().enumerate() {
            let sector = if i < n_com {
                Sector::Commodity
            } else {
                Sector::Manufacturer
            };
            let suppliers = match sector {
                Sector::Commodity => Vec::new(),
                Sector::Manufacturer => {
                    let k = config.suppliers_per_manufacturer.min(n_com);
                    let mut s: Vec<FirmId> = sample(rng, n_com, k)
                        .into_iter()
                        .map(|j| commodity_ids[j])
                        .collect();
                    s.sort();
                    s
                }
            };
            let base = StrategyGenome::balanced();
            let genome = mutate(&base, &[true, true, true, false, false, false], SIGMA_INITIAL, rng);
            let radius = rng.gen_range(MIN_RADIUS..=MAX_RADIUS);
            firms.push(Firm::new(
                FirmId(i),
                grid.cell(cell),
                sector,
                suppliers,
                config.firm_money,
                config.firm_capital,
                config.firm_inventory,
                config.firm_price,
                config.firm_wage,
                radius,
                genome,
            ));
        }

        let levels: Vec<u32> = firms
            .iter()
            .map(|f| f.trophic_level)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n_com_households = ((config.n_households * n_com) as f64 / config.n_firms as f64).round() as usize;
        let mut households = Vec::with_capacity(config.n_households);
        for i in 0..config.n_households {
            let location = grid.cell(rng.gen_range(0..grid.n_cells()));
            let sector = if i < n_com_households {
                Sector::Commodity
            } else {
                Sector::Manufacturer
            };
            let monitoring_radius = rng.gen_range(MIN_RADIUS..=MAX_RADIUS);
            let distance_cost = rng.gen_range(DISTANCE_COST_RANGE.0..=DISTANCE_COST_RANGE.1);
            let size = if levels.len() >= 3 {
                rng.gen_range(2..=3)
            } else {
                levels.len()
            };
            let consumption_levels = sample(rng, levels.len(), size)
                .into_iter()
                .map(|k| levels[k])
                .collect();
            households.push(Household {
                id: HouseholdId(i),
                location,
                sector,
                money: config.household_money,
                employer: None,
                monitoring_radius,
                consumption_levels,
                labor_supplied: 0.0,
                distance_cost,
            });
        }

        Ok(World {
            config,
            hazard,
            curve,
            step: 0,
            firms,
            households,
            rngs,
            ledger: Vec::new(),
            metrics: Vec::new(),
            last_field: None,
        })
    }

    pub fn total_money(&self) -> f64 {
        self.firms.iter().map(|f| f.money).sum::<f64>() + self.households.iter().map(|h| h.money).sum::<f64>()
    }

    /// Advances one step through the fixed phase order and appends its
    /// metrics. Fails if the money audit does not balance.
    pub fn step(&mut self) -> Result<&MetricsFrame> {
        self.step += 1;
        let t = self.step;
        let cfg = &self.config;
        let money_before = self.total_money();
        let mut flows = StepFlows::default();
        self.ledger.clear();
        for f in &mut self.firms {
            f.reset_step();
        }

        // 1. hazard realisation
        let grid = self.hazard.grid_for(t);
        let field = if cfg.hazard_enabled {
            sample_step_hazard(grid, cfg.dt_years, t, &mut self.rngs.hazard)
        } else {
            HazardField::zeros(grid, t)
        };

        // 2-3. damage, then recovery
        for f in &mut self.firms {
            let d = damage_ratio(&self.curve, field.at(grid, f.location));
            if d > 0.0 {
                apply_damage(f, d, cfg.recovery_steps);
                flows.damaged_firms += 1;
            }
            recover_productivity(f);
        }

        // 4. household relocation
        for h in &mut self.households {
            if household_maybe_relocate(h, &field, grid, &mut self.rngs.hazard) {
                flows.relocated_households += 1;
            }
        }

        // 5-6. risk response and budgets
        for f in self.firms.iter_mut().filter(|f| !f.inactive) {
            let local = neighborhood_peak(&field, f.location, f.monitoring_radius, grid);
            update_capital_target(f, local);
            f.budget = allocate_budget(f);
            f.labor_budget_left = f.budget.labor;
        }

        // 7-10. labour, inputs, production, goods
        let labor = clear_labor_market(&mut self.households, &mut self.firms, t, &mut self.rngs.markets);
        flows.unemployment = labor.unemployment;
        self.ledger.extend(labor.transactions);
        let inputs = clear_input_market(&mut self.firms, t, &mut self.rngs.markets);
        self.ledger.extend(inputs);
        let coeffs = cfg.leontief();
        for f in self.firms.iter_mut().filter(|f| !f.inactive) {
            leontief_output(f, &coeffs);
        }
        let goods = clear_goods_market(
            &mut self.households,
            &mut self.firms,
            cfg.spend_fraction,
            t,
            &mut self.rngs.markets,
        );
        self.ledger.extend(goods);

        // 11. capital purchases leave the economy
        for f in self.firms.iter_mut().filter(|f| !f.inactive) {
            let spent = purchase_capital(f);
            if spent > 0.0 {
                flows.capital_purchases += spent;
                self.ledger.push(Transaction {
                    buyer: AgentId::Firm(f.id),
                    seller: AgentId::Firm(f.id),
                    good: Good::Capital,
                    quantity: spent / CAPITAL_PRICE,
                    unit_price: CAPITAL_PRICE,
                    amount: spent,
                    step: t,
                });
            }
        }

        // 12. prices and wages
        for f in &mut self.firms {
            f.close_sales_period();
            if f.inactive {
                continue;
            }
            let target = f.target_inventory();
            f.price = adjust_price(f.price, f.genome.price_responsiveness, f.output_inventory, target);
            let vacancy = if f.budget.labor > 0.0 {
                (f.labor_budget_left / f.budget.labor).clamp(0.0, 1.0)
            } else {
                0.0
            };
            f.wage = adjust_wage(f.wage, f.genome.wage_sensitivity, vacancy);
        }

        // 13. performance memory and mutation
        for f in &mut self.firms {
            f.memory.record(StepRecord {
                money: f.money,
                production: f.production,
                capital: f.capital,
                limiting: f.limiting_factor,
            });
            f.age += 1;
            if !cfg.evolution_enabled || f.inactive || t % MUTATION_INTERVAL != 0 {
                continue;
            }
            let mask = should_mutate(t, &mut self.rngs.evolution);
            let score = fitness(&f.memory, f.age)?;
            f.memory.push_fitness(score);
            let sigma = select_sigma(&mut f.mutation, score);
            f.genome = mutate(&f.genome, &mask, sigma, &mut self.rngs.evolution);
        }

        // 14. failure and replacement
        let failed: Vec<usize> = if cfg.evolution_enabled {
            let out = replace_failed(
                &mut self.firms,
                t,
                &cfg.entry_endowment(),
                &mut self.rngs.evolution,
            );
            flows.replaced_firms = out.replaced.len();
            flows.entry_endowments = out.entry_money;
            flows.removed_money = out.removed_money;
            let replaced: Vec<usize> = out.replaced.iter().map(|(s, _)| *s).collect();
            out.failed.into_iter().filter(|i| !replaced.contains(i)).collect()
        } else {
            (0..self.firms.len()).filter(|i| is_failed(&self.firms[*i])).collect()
        };
        flows.failed_firms = failed.len() + flows.replaced_firms;
        for (i, f) in self.firms.iter_mut().enumerate() {
            f.inactive = failed.contains(&i);
        }

        // 15. metrics and money audit
        let money_after = self.total_money();
        let expected = money_before + flows.entry_endowments - flows.capital_purchases - flows.removed_money;
        flows.total_money = money_after;
        flows.ledger_imbalance = money_after - expected;
        if !(flows.ledger_imbalance.abs() <= CONSERVATION_TOLERANCE) {
            return Err(Error::Conservation {
                step: t,
                imbalance: flows.ledger_imbalance,
                dump: self.diagnostic_dump(money_before, &flows),
            });
        }
        let year = cfg.start_year + f64::from(t) * cfg.dt_years;
        self.metrics
            .push(MetricsFrame::collect(t, year, &self.firms, &self.households, &flows));
        self.last_field = Some(field);
        Ok(self.metrics.last().expect("just pushed"))
    }

    fn diagnostic_dump(&self, money_before: f64, flows: &StepFlows) -> String {
        let mut s = format!(
            "money before {money_before}, after {}, entry {}, capital sink {}, removed {}\n",
            flows.total_money, flows.entry_endowments, flows.capital_purchases, flows.removed_money
        );
        for f in &self.firms {
            let _ = writeln!(
                s,
                "  {} {:?} money {} capital {} inventory {} inactive {}",
                f.id, f.sector, f.money, f.capital, f.output_inventory, f.inactive
            );
        }
        let _ = writeln!(s, "  households hold {}", self.households.iter().map(|h| h.money).sum::<f64>());
        let _ = writeln!(s, "  {} transactions this step", self.ledger.len());
        s
    }
}

/// Result of a complete scenario run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Vec<MetricsFrame>,
    pub world: World,
}

/// Runs `config.steps` steps from an already-loaded hazard schedule.
pub fn run_with(config: ScenarioConfig, hazard: HazardSchedule, curve: ImpactCurve) -> Result<RunOutput> {
    let steps = config.n_steps();
    let mut world = World::new(config, hazard, curve)?;
    let tick = (steps / 10).max(1);
    for _ in 0..steps {
        world.step()?;
        if world.step % tick == 0 || world.step == steps {
            info!(
                "seed {} step {}/{} ({}%)",
                world.config.seed,
                world.step,
                steps,
                u64::from(world.step) * 100 / u64::from(steps)
            );
        }
    }
    Ok(RunOutput {
        metrics: world.metrics.clone(),
        world,
    })
}

/// Loads the config's inputs and runs the scenario.
pub fn run(config: ScenarioConfig) -> Result<RunOutput> {
    let (hazard, curve) = load_inputs(&config)?;
    run_with(config, hazard, curve)
}
