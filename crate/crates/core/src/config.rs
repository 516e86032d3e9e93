//! Scenario configuration: a flat TOML file with strict keys.
//!
//! ```toml
//! hazard_grid = "grids/rcp85.txt"   # required
//! seed = 42                         # required
//! steps = 320
//! hazard_epochs = [{ start_step = 160, path = "grids/rcp85_2060.txt" }]
//! ```
//!
//! Every other key is optional; see [`ScenarioConfig`] for defaults.
//! Relative paths are resolved against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::LeontiefCoefficients;
use crate::error::{Error, Result};
use crate::evolution::EntryEndowment;
use crate::hazard::{load_hazard_dataset, load_impact_curve, HazardGrid, ImpactCurve};

/// A hazard dataset that takes over from `start_step` onward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardEpoch {
    pub start_step: u32,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Hazard dataset active from the first step.
    pub hazard_grid: PathBuf,
    /// Later datasets, switched in at their start steps.
    #[serde(default)]
    pub hazard_epochs: Vec<HazardEpoch>,
    /// Depth-damage curve file; the built-in linear 0-6 m curve when absent.
    #[serde(default)]
    pub impact_curve: Option<PathBuf>,
    pub seed: u64,

    #[serde(default = "defaults::steps")]
    pub steps: i64,
    #[serde(default = "defaults::dt_years")]
    pub dt_years: f64,
    #[serde(default = "defaults::start_year")]
    pub start_year: f64,
    #[serde(default = "defaults::n_firms")]
    pub n_firms: usize,
    #[serde(default = "defaults::n_households")]
    pub n_households: usize,
    #[serde(default = "defaults::commodity_fraction")]
    pub commodity_fraction: f64,
    #[serde(default = "defaults::suppliers_per_manufacturer")]
    pub suppliers_per_manufacturer: usize,
    #[serde(default = "defaults::yes")]
    pub hazard_enabled: bool,
    #[serde(default = "defaults::yes")]
    pub evolution_enabled: bool,

    #[serde(default = "defaults::one")]
    pub labor_coefficient: f64,
    #[serde(default = "defaults::one")]
    pub capital_coefficient: f64,
    #[serde(default = "defaults::input_coefficient")]
    pub input_coefficient: f64,

    #[serde(default = "defaults::firm_money")]
    pub firm_money: f64,
    #[serde(default = "defaults::firm_capital")]
    pub firm_capital: f64,
    #[serde(default = "defaults::firm_inventory")]
    pub firm_inventory: f64,
    #[serde(default = "defaults::one")]
    pub firm_price: f64,
    #[serde(default = "defaults::one")]
    pub firm_wage: f64,
    #[serde(default = "defaults::household_money")]
    pub household_money: f64,

    #[serde(default = "defaults::recovery_steps")]
    pub recovery_steps: u32,
    #[serde(default = "defaults::spend_fraction")]
    pub spend_fraction: f64,
    #[serde(default = "defaults::entry_money")]
    pub entry_money: f64,
    #[serde(default = "defaults::entry_capital")]
    pub entry_capital: f64,

    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

mod defaults {
    pub fn steps() -> i64 {
        320
    }
    pub fn dt_years() -> f64 {
        0.25
    }
    pub fn start_year() -> f64 {
        2020.0
    }
    pub fn n_firms() -> usize {
        15
    }
    pub fn n_households() -> usize {
        75
    }
    pub fn commodity_fraction() -> f64 {
        0.4
    }
    pub fn suppliers_per_manufacturer() -> usize {
        2
    }
    pub fn yes() -> bool {
        true
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn input_coefficient() -> f64 {
        0.5
    }
    pub fn firm_money() -> f64 {
        20.0
    }
    pub fn firm_capital() -> f64 {
        10.0
    }
    pub fn firm_inventory() -> f64 {
        5.0
    }
    pub fn household_money() -> f64 {
        10.0
    }
    pub fn recovery_steps() -> u32 {
        4
    }
    pub fn spend_fraction() -> f64 {
        0.8
    }
    pub fn entry_money() -> f64 {
        10.0
    }
    pub fn entry_capital() -> f64 {
        5.0
    }
}

impl ScenarioConfig {
    /// Defaults everywhere except the two required keys.
    pub fn with_grid(hazard_grid: impl Into<PathBuf>, seed: u64) -> Self {
        let text = format!("hazard_grid = {:?}\nseed = {seed}\n", "");
        let mut cfg: ScenarioConfig = toml::from_str(&text).expect("defaults parse");
        cfg.hazard_grid = hazard_grid.into();
        cfg
    }

    /// Parses TOML text; relative paths are joined onto `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> std::result::Result<Self, String> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| e.message().to_string() + &span_hint(text, &e))?;
        cfg.resolve_paths(base_dir);
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.hazard_grid);
        for e in &mut self.hazard_epochs {
            fix(&mut e.path);
        }
        if let Some(p) = &mut self.impact_curve {
            fix(p);
        }
        if let Some(p) = &mut self.output_dir {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.steps < 0 {
            return bad(format!("steps must be non-negative, got {}", self.steps));
        }
        if self.steps > i64::from(u32::MAX) {
            return bad(format!("steps too large: {}", self.steps));
        }
        if !(self.dt_years > 0.0) || !self.dt_years.is_finite() {
            return bad(format!("dt_years must be positive, got {}", self.dt_years));
        }
        if self.n_firms < 2 {
            return bad(format!("n_firms must be at least 2, got {}", self.n_firms));
        }
        if !(0.0..=1.0).contains(&self.commodity_fraction) {
            return bad(format!(
                "commodity_fraction must lie in [0, 1], got {}",
                self.commodity_fraction
            ));
        }
        let (com, man) = self.sector_split();
        if com < 1 || man < 1 {
            return bad(format!(
                "need at least one commodity firm and one manufacturer, got {com} and {man}"
            ));
        }
        if self.suppliers_per_manufacturer < 1 {
            return bad("suppliers_per_manufacturer must be at least 1".into());
        }
        if !self.leontief().is_valid() {
            return bad("Leontief coefficients must be positive".into());
        }
        let endowments = [
            ("firm_money", self.firm_money),
            ("firm_capital", self.firm_capital),
            ("firm_inventory", self.firm_inventory),
            ("household_money", self.household_money),
            ("entry_money", self.entry_money),
            ("entry_capital", self.entry_capital),
        ];
        for (k, v) in endowments {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{k} must be non-negative, got {v}"));
            }
        }
        for (k, v) in [("firm_price", self.firm_price), ("firm_wage", self.firm_wage)] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{k} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.spend_fraction) {
            return bad(format!("spend_fraction must lie in [0, 1], got {}", self.spend_fraction));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u32 {
        self.steps.clamp(0, i64::from(u32::MAX)) as u32
    }

    /// Commodity firms get the floor of their share; the rest manufacture.
    pub fn sector_split(&self) -> (usize, usize) {
        let com = ((self.n_firms as f64) * self.commodity_fraction).floor() as usize;
        let com = com.min(self.n_firms);
        (com, self.n_firms - com)
    }

    pub fn leontief(&self) -> LeontiefCoefficients {
        LeontiefCoefficients {
            a_labor: self.labor_coefficient,
            a_capital: self.capital_coefficient,
            a_input: self.input_coefficient,
        }
    }

    pub fn entry_endowment(&self) -> EntryEndowment {
        EntryEndowment {
            money: self.entry_money,
            capital: self.entry_capital,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn span_hint(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].lines().count().max(1);
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    ScenarioConfig::from_toml_str(&text, base).map_err(|message| Error::Config {
        path: path.to_path_buf(),
        message,
    })
}

/// Hazard datasets ordered by the step they become active.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardSchedule {
    epochs: Vec<(u32, HazardGrid)>,
}

impl HazardSchedule {
    pub fn single(grid: HazardGrid) -> Self {
        HazardSchedule {
            epochs: vec![(0, grid)],
        }
    }

    /// `first` is active from step 0; the rest from their start steps.
    pub fn new(first: HazardGrid, mut later: Vec<(u32, HazardGrid)>) -> Result<Self> {
        later.sort_by_key(|(s, _)| *s);
        for (s, g) in &later {
            if !g.same_shape(&first) {
                return Err(Error::InvalidGrid(format!(
                    "epoch starting at step {s} is {}x{}, base grid is {}x{}",
                    g.width(),
                    g.height(),
                    first.width(),
                    first.height()
                )));
            }
        }
        let mut epochs = vec![(0, first)];
        epochs.extend(later);
        Ok(HazardSchedule { epochs })
    }

    pub fn base(&self) -> &HazardGrid {
        &self.epochs[0].1
    }

    pub fn grid_for(&self, step: u32) -> &HazardGrid {
        let k = self.epochs.partition_point(|(s, _)| *s <= step);
        &self.epochs[k.saturating_sub(1)].1
    }

    pub fn epochs(&self) -> &[(u32, HazardGrid)] {
        &self.epochs
    }

    /// The same schedule with every intensity set to zero.
    pub fn zeroed(&self) -> Self {
        let epochs = self
            .epochs
            .iter()
            .map(|(s, g)| {
                let z = HazardGrid::zeros(g.width(), g.height(), g.return_periods().to_vec())
                    .expect("shape of a valid grid");
                (*s, z)
            })
            .collect();
        HazardSchedule { epochs }
    }
}

/// Loads the hazard datasets and impact curve a config points at.
pub fn load_inputs(config: &ScenarioConfig) -> Result<(HazardSchedule, ImpactCurve)> {
    let base = load_hazard_dataset(&config.hazard_grid)?;
    let later = config
        .hazard_epochs
        .iter()
        .map(|e| load_hazard_dataset(&e.path).map(|g| (e.start_step, g)))
        .collect::<Result<Vec<_>>>()?;
    let schedule = HazardSchedule::new(base, later)?;
    let curve = match &config.impact_curve {
        Some(p) => load_impact_curve(p)?,
        None => ImpactCurve::default(),
    };
    Ok((schedule, curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> std::result::Result<ScenarioConfig, String> {
        ScenarioConfig::from_toml_str(text, Path::new("/data"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse("hazard_grid = \"g.txt\"\nseed = 7\n").unwrap();
        assert_eq!((c.steps, c.n_firms, c.n_households), (320, 15, 75));
        assert_eq!(c.dt_years, 0.25);
        assert_eq!(c.hazard_grid, PathBuf::from("/data/g.txt"));
        assert!(c.hazard_enabled && c.evolution_enabled);
        assert_eq!(c.sector_split(), (6, 9));
        assert_eq!(c, ScenarioConfig { hazard_grid: "/data/g.txt".into(), ..ScenarioConfig::with_grid("", 7) });
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse("hazard_grid = \"g.txt\"\nseed = 7\nn_frms = 3\n").unwrap_err();
        assert!(err.contains("n_frms"), "{err}");
    }

    #[test]
    fn negative_steps_rejected() {
        let err = parse("hazard_grid = \"g.txt\"\nseed = 7\nsteps = -1\n").unwrap_err();
        assert!(err.contains("steps"), "{err}");
    }

    #[test]
    fn missing_required_key() {
        let err = parse("seed = 7\n").unwrap_err();
        assert!(err.contains("hazard_grid"), "{err}");
    }

    #[test]
    fn sector_invariants() {
        assert!(parse("hazard_grid = \"g\"\nseed = 1\nn_firms = 1\n").is_err());
        assert!(parse("hazard_grid = \"g\"\nseed = 1\ncommodity_fraction = 0.0\n").is_err());
        assert!(parse("hazard_grid = \"g\"\nseed = 1\ncommodity_fraction = 1.0\n").is_err());
        assert!(parse("hazard_grid = \"g\"\nseed = 1\nfirm_money = -2.0\n").is_err());
        assert!(parse("hazard_grid = \"g\"\nseed = 1\ninput_coefficient = 0.0\n").is_err());
    }

    #[test]
    fn epochs_and_absolute_paths() {
        let c = parse(
            "hazard_grid = \"/abs/g.txt\"\nseed = 1\nhazard_epochs = [{ start_step = 100, path = \"late.txt\" }]\n",
        )
        .unwrap();
        assert_eq!(c.hazard_grid, PathBuf::from("/abs/g.txt"));
        assert_eq!(c.hazard_epochs[0].path, PathBuf::from("/data/late.txt"));
    }

    #[test]
    fn toml_snapshot_round_trips() {
        let c = parse("hazard_grid = \"g.txt\"\nseed = 7\nimpact_curve = \"c.txt\"\n").unwrap();
        let back: ScenarioConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn schedule_switches_epochs() {
        let a = HazardGrid::zeros(2, 2, vec![10.0]).unwrap();
        let b = HazardGrid::new(2, 2, vec![10.0], vec![vec![1.0; 4]]).unwrap();
        let s = HazardSchedule::new(a.clone(), vec![(50, b.clone())]).unwrap();
        assert_eq!(s.grid_for(1), &a);
        assert_eq!(s.grid_for(49), &a);
        assert_eq!(s.grid_for(50), &b);
        assert!(s.zeroed().grid_for(60).is_zero());
        let c = HazardGrid::zeros(3, 2, vec![10.0]).unwrap();
        assert!(HazardSchedule::new(a, vec![(5, c)]).is_err());
    }
}
