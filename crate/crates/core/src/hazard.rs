//! Gridded return-period hazard data, per-step event sampling, and
//! intensity-to-damage vulnerability curves.
//!
//! A [`HazardGrid`] stores one flood-depth raster per return period. Each
//! step, every cell draws an independent uniform variate `u`; an event occurs
//! when `u <= dt / min_rp`, and its implied return period is `dt / u`. The
//! realised depth is read off the cell's return-period curve by log-linear
//! interpolation, so the per-step probability of meeting or exceeding the
//! RP-`T` depth is `dt / T`.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A grid cell, `x` is the column and `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Flood-depth rasters indexed by return period.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardGrid {
    width: usize,
    height: usize,
    return_periods: Vec<f64>,
    /// One row-major raster per return period.
    layers: Vec<Vec<f64>>,
    max_intensity: f64,
}

impl HazardGrid {
    /// Builds a validated grid from row-major layers, one per return period.
    pub fn new(
        width: usize,
        height: usize,
        return_periods: Vec<f64>,
        layers: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if return_periods.is_empty() {
            return Err(Error::InvalidGrid("no return periods".into()));
        }
        if let Some(rp) = return_periods.iter().find(|rp| !(**rp > 0.0) || !rp.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "return periods must be positive and finite, got {rp}"
            )));
        }
        if let Some(w) = return_periods.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "return periods must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if layers.len() != return_periods.len() {
            return Err(Error::InvalidGrid(format!(
                "{} layers for {} return periods",
                layers.len(),
                return_periods.len()
            )));
        }
        let n = width * height;
        for (k, layer) in layers.iter().enumerate() {
            if layer.len() != n {
                return Err(Error::InvalidGrid(format!(
                    "layer {k} (RP {}) has {} cells, expected {n}",
                    return_periods[k],
                    layer.len()
                )));
            }
            if let Some(i) = layer.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "layer {k} (RP {}) cell {}: intensity {} is not a finite non-negative depth",
                    return_periods[k],
                    Cell::new(i % width, i / width),
                    layer[i]
                )));
            }
        }
        for k in 1..layers.len() {
            for i in 0..n {
                if layers[k][i] < layers[k - 1][i] {
                    return Err(Error::InvalidGrid(format!(
                        "non-monotone intensity at cell {}: RP {} has {} but RP {} has {}",
                        Cell::new(i % width, i / width),
                        return_periods[k - 1],
                        layers[k - 1][i],
                        return_periods[k],
                        layers[k][i]
                    )));
                }
            }
        }
        let max_intensity = layers
            .iter()
            .flat_map(|l| l.iter().copied())
            .fold(0.0, f64::max);
        Ok(HazardGrid {
            width,
            height,
            return_periods,
            layers,
            max_intensity,
        })
    }

    /// An all-zero grid with the given shape and return periods.
    pub fn zeros(width: usize, height: usize, return_periods: Vec<f64>) -> Result<Self> {
        let layers = vec![vec![0.0; width * height]; return_periods.len()];
        HazardGrid::new(width, height, return_periods, layers)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn return_periods(&self) -> &[f64] {
        &self.return_periods
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        &self.layers[k]
    }

    pub fn max_intensity(&self) -> f64 {
        self.max_intensity
    }

    pub fn is_zero(&self) -> bool {
        self.max_intensity == 0.0
    }

    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        cell.y * self.width + cell.x
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    /// The (return period, intensity) curve at one cell.
    pub fn cell_curve(&self, index: usize) -> Vec<(f64, f64)> {
        self.return_periods
            .iter()
            .zip(&self.layers)
            .map(|(rp, layer)| (*rp, layer[index]))
            .collect()
    }

    /// Intensity at a cell for return period `t`, interpolated in `ln t`.
    pub fn intensity_at(&self, index: usize, t: f64) -> f64 {
        interpolate_return_period_with(
            self.return_periods.len(),
            |k| (self.return_periods[k], self.layers[k][index]),
            t,
        )
    }

    pub fn same_shape(&self, other: &HazardGrid) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Reads a hazard grid file.
///
/// Layout: `width height n_rps` on the first line, the `n_rps` return
/// periods on the second, then one raster block per return period with
/// `height` rows of `width` whitespace-separated depths in meters. Blank
/// lines and lines starting with `#` are ignored.
pub fn load_hazard_dataset(path: impl AsRef<Path>) -> Result<HazardGrid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hazard_grid(&text).map_err(|message| Error::HazardFormat {
        path: path.to_path_buf(),
        message,
    })
}

/// Parses the hazard grid text format. Errors carry the offending
/// line, layer, row or cell.
pub fn parse_hazard_grid(text: &str) -> std::result::Result<HazardGrid, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (lineno, header) = lines.next().ok_or("empty file")?;
    let header: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("line {lineno}: bad header: {e}"))?;
    let [width, height, n_rps] = header[..] else {
        return Err(format!(
            "line {lineno}: header must be `width height n_rps`, got {} fields",
            header.len()
        ));
    };

    let (lineno, rp_line) = lines.next().ok_or("missing return period line")?;
    let return_periods: Vec<f64> = rp_line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("line {lineno}: bad return period: {e}"))?;
    if return_periods.len() != n_rps {
        return Err(format!(
            "line {lineno}: header declares {n_rps} return periods, found {}",
            return_periods.len()
        ));
    }

    let mut layers = Vec::with_capacity(n_rps);
    for (k, rp) in return_periods.iter().enumerate() {
        let mut layer = Vec::with_capacity(width * height);
        for row in 0..height {
            let (lineno, line) = lines.next().ok_or_else(|| {
                format!("layer {k} (RP {rp}): missing row {row}, file ended early")
            })?;
            let before = layer.len();
            for (col, tok) in line.split_whitespace().enumerate() {
                let v: f64 = tok.parse().map_err(|e| {
                    format!("line {lineno}: layer {k} (RP {rp}) cell ({col}, {row}): {e}")
                })?;
                layer.push(v);
            }
            let got = layer.len() - before;
            if got != width {
                return Err(format!(
                    "line {lineno}: layer {k} (RP {rp}) row {row} has {got} values, expected {width}"
                ));
            }
        }
        layers.push(layer);
    }
    if let Some((lineno, _)) = lines.next() {
        return Err(format!(
            "line {lineno}: trailing data after {n_rps} layers of {width}x{height}"
        ));
    }

    HazardGrid::new(width, height, return_periods, layers).map_err(|e| match e {
        Error::InvalidGrid(m) => m,
        other => other.to_string(),
    })
}

/// Writes a grid in the text format read by [`load_hazard_dataset`].
pub fn format_hazard_grid(grid: &HazardGrid) -> String {
    let mut out = format!(
        "{} {} {}\n",
        grid.width,
        grid.height,
        grid.return_periods.len()
    );
    let rps: Vec<String> = grid.return_periods.iter().map(|r| r.to_string()).collect();
    out.push_str(&rps.join(" "));
    out.push('\n');
    for layer in &grid.layers {
        for row in layer.chunks(grid.width) {
            let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Log-linear interpolation of intensity over return period.
///
/// `t_star` is clamped into the knot range; the result is exact at knots.
pub fn interpolate_return_period(cell_curve: &[(f64, f64)], t_star: f64) -> f64 {
    interpolate_return_period_with(cell_curve.len(), |k| cell_curve[k], t_star)
}

fn interpolate_return_period_with(n: usize, knot: impl Fn(usize) -> (f64, f64), t_star: f64) -> f64 {
    debug_assert!(n > 0);
    let (t_lo, i_lo) = knot(0);
    if !(t_star > t_lo) {
        return i_lo;
    }
    let (t_hi, i_hi) = knot(n - 1);
    if t_star >= t_hi {
        return i_hi;
    }
    // first knot with rp >= t_star; exists and is > 0 after the clamps above
    let mut k = 1;
    while knot(k).0 < t_star {
        k += 1;
    }
    let (t1, v1) = knot(k);
    if t1 == t_star {
        return v1;
    }
    let (t0, v0) = knot(k - 1);
    if v0 == v1 {
        return v0;
    }
    let w = (t_star.ln() - t0.ln()) / (t1.ln() - t0.ln());
    v0 + w * (v1 - v0)
}

/// Realised intensities for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardField {
    pub intensities: Vec<f64>,
    pub step_index: u32,
}

impl HazardField {
    pub fn zeros(grid: &HazardGrid, step_index: u32) -> Self {
        HazardField {
            intensities: vec![0.0; grid.n_cells()],
            step_index,
        }
    }

    pub fn at(&self, grid: &HazardGrid, cell: Cell) -> f64 {
        self.intensities[grid.index(cell)]
    }

    /// Intensity at `cell` divided by the grid's maximum; 0 for a zero grid.
    pub fn normalized_at(&self, grid: &HazardGrid, cell: Cell) -> f64 {
        if grid.max_intensity() > 0.0 {
            self.at(grid, cell) / grid.max_intensity()
        } else {
            0.0
        }
    }

    pub fn is_zero(&self) -> bool {
        self.intensities.iter().all(|v| *v == 0.0)
    }
}

/// Intensity realised at one cell for a uniform draw `u` in `[0, 1)`.
pub fn sample_cell(grid: &HazardGrid, index: usize, dt_years: f64, u: f64) -> f64 {
    let min_rp = grid.return_periods[0];
    if u > dt_years / min_rp {
        return 0.0;
    }
    // u == 0 gives an infinite return period, clamped to the top knot
    let t_star = dt_years / u;
    grid.intensity_at(index, t_star)
}

/// Draws one independent event per cell in row-major order.
pub fn sample_step_hazard<R: Rng + ?Sized>(
    grid: &HazardGrid,
    dt_years: f64,
    step_index: u32,
    rng: &mut R,
) -> HazardField {
    debug_assert!(dt_years > 0.0);
    let intensities = (0..grid.n_cells())
        .map(|i| {
            let u: f64 = rng.gen();
            sample_cell(grid, i, dt_years, u)
        })
        .collect();
    HazardField {
        intensities,
        step_index,
    }
}

/// Maximum normalised intensity within Chebyshev distance `radius` of `center`.
pub fn neighborhood_peak(field: &HazardField, center: Cell, radius: usize, grid: &HazardGrid) -> f64 {
    let max = grid.max_intensity();
    if max <= 0.0 {
        return 0.0;
    }
    let x0 = center.x.saturating_sub(radius);
    let x1 = (center.x + radius).min(grid.width() - 1);
    let y0 = center.y.saturating_sub(radius);
    let y1 = (center.y + radius).min(grid.height() - 1);
    let mut peak = 0.0f64;
    for y in y0..=y1 {
        let row = &field.intensities[y * grid.width()..(y + 1) * grid.width()];
        for v in &row[x0..=x1] {
            peak = peak.max(*v);
        }
    }
    (peak / max).min(1.0)
}

/// Piecewise-linear depth-damage curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactCurve {
    points: Vec<(f64, f64)>,
}

impl Default for ImpactCurve {
    /// Linear from no damage at 0 m to total loss at 6 m.
    fn default() -> Self {
        ImpactCurve {
            points: vec![(0.0, 0.0), (6.0, 1.0)],
        }
    }
}

impl ImpactCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let Some(&(i0, r0)) = points.first() else {
            return Err(Error::InvalidCurve("no knots".into()));
        };
        if i0 != 0.0 || r0 != 0.0 {
            return Err(Error::InvalidCurve(format!(
                "first knot must be (0, 0), got ({i0}, {r0})"
            )));
        }
        for (k, (i, r)) in points.iter().enumerate() {
            if !i.is_finite() || !(0.0..=1.0).contains(r) {
                return Err(Error::InvalidCurve(format!(
                    "knot {k} ({i}, {r}): ratio must lie in [0, 1]"
                )));
            }
        }
        for (k, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidCurve(format!(
                    "knot {}: intensities must be strictly increasing",
                    k + 1
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidCurve(format!(
                    "knot {}: damage ratios must be non-decreasing",
                    k + 1
                )));
            }
        }
        Ok(ImpactCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// Reads `intensity damage_ratio` pairs, one per line.
pub fn load_impact_curve(path: impl AsRef<Path>) -> Result<ImpactCurve> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let fail = |message: String| Error::CurveFormat {
        path: path.to_path_buf(),
        message,
    };
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| fail(format!("line {}: {e}", i + 1)))?;
        let [a, b] = vals[..] else {
            return Err(fail(format!(
                "line {}: expected `intensity damage_ratio`",
                i + 1
            )));
        };
        points.push((a, b));
    }
    ImpactCurve::new(points).map_err(|e| fail(e.to_string()))
}

/// Damage ratio for a flood depth, clamped to the last knot above the curve.
pub fn damage_ratio(curve: &ImpactCurve, intensity: f64) -> f64 {
    let pts = &curve.points;
    if !(intensity > 0.0) {
        return pts[0].1;
    }
    let last = pts[pts.len() - 1];
    if intensity >= last.0 {
        return last.1;
    }
    let k = pts.partition_point(|(i, _)| *i <= intensity);
    let (x0, y0) = pts[k - 1];
    let (x1, y1) = pts[k];
    (y0 + (intensity - x0) / (x1 - x0) * (y1 - y0)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_rp_grid(lo: f64, hi: f64) -> HazardGrid {
        HazardGrid::new(1, 1, vec![10.0, 100.0], vec![vec![lo], vec![hi]]).unwrap()
    }

    #[test]
    fn zero_grid_has_zero_max() {
        let text = "2 2 2\n10 100\n0 0\n0 0\n0 0\n0 0\n";
        let g = parse_hazard_grid(text).unwrap();
        assert_eq!(g.max_intensity(), 0.0);
        assert!(g.is_zero());
    }

    #[test]
    fn non_monotone_layers_rejected() {
        let text = "2 1 2\n10 100\n3.0 0\n2.0 0\n";
        let err = parse_hazard_grid(text).unwrap_err();
        assert!(err.contains("non-monotone"), "{err}");
        assert!(err.contains("(0, 0)"), "{err}");
    }

    #[test]
    fn max_intensity_over_layers() {
        let text = "# four return periods\n1 1 4\n10 50 100 500\n0.5\n1.0\n2.0\n4.0\n";
        let g = parse_hazard_grid(text).unwrap();
        assert_eq!(g.max_intensity(), 4.0);
    }

    #[test]
    fn short_row_reports_location() {
        let text = "2 2 1\n10\n0 0\n0\n";
        let err = parse_hazard_grid(text).unwrap_err();
        assert!(err.contains("row 1 has 1 values, expected 2"), "{err}");
    }

    #[test]
    fn missing_layer_and_trailing_data() {
        let err = parse_hazard_grid("1 1 2\n10 100\n0\n").unwrap_err();
        assert!(err.contains("layer 1"), "{err}");
        let err = parse_hazard_grid("1 1 1\n10\n0\n5\n").unwrap_err();
        assert!(err.contains("trailing"), "{err}");
        let err = parse_hazard_grid("1 1 2\n10\n0\n0\n").unwrap_err();
        assert!(err.contains("declares 2"), "{err}");
    }

    #[test]
    fn format_round_trips() {
        let g = HazardGrid::new(
            3,
            2,
            vec![2.0, 100.0],
            vec![vec![0.0, 0.5, 1.0, 0.0, 0.0, 0.25], vec![1.0, 2.5, 3.0, 0.0, 0.125, 0.5]],
        )
        .unwrap();
        assert_eq!(parse_hazard_grid(&format_hazard_grid(&g)).unwrap(), g);
    }

    #[test]
    fn interpolation_examples() {
        let knots = [(10.0, 1.0), (100.0, 2.0)];
        assert_eq!(interpolate_return_period(&knots, 10.0), 1.0);
        assert_eq!(interpolate_return_period(&knots, 1000.0), 2.0);
        assert_eq!(interpolate_return_period(&knots, 1.0), 1.0);
        assert_relative_eq!(
            interpolate_return_period(&knots, 31.6227766),
            1.5,
            epsilon = 1e-8
        );
    }

    #[test]
    fn sampling_rule_by_hand() {
        let g = HazardGrid::new(
            1,
            1,
            vec![2.0, 10.0, 100.0, 1000.0],
            vec![vec![0.1], vec![0.7], vec![1.9], vec![3.2]],
        )
        .unwrap();
        // 0.25 / 2 = 0.125 < 0.5: no event
        assert_eq!(sample_cell(&g, 0, 0.25, 0.5), 0.0);
        // T* = 0.25 / 0.0025 = 100
        assert_eq!(sample_cell(&g, 0, 0.25, 0.0025), 1.9);
        assert_eq!(sample_cell(&g, 0, 0.25, 0.0), 3.2);
    }

    #[test]
    fn zero_grid_samples_zero_field() {
        let g = HazardGrid::zeros(4, 3, vec![2.0, 100.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for step in 0..50 {
            assert!(sample_step_hazard(&g, 0.25, step, &mut rng).is_zero());
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let g = two_rp_grid(1.0, 2.0);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200)
                .map(|s| sample_step_hazard(&g, 5.0, s, &mut rng).intensities[0])
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn damage_examples() {
        let c = ImpactCurve::default();
        assert_eq!(damage_ratio(&c, 0.0), 0.0);
        assert_eq!(damage_ratio(&c, 3.0), 0.5);
        assert_eq!(damage_ratio(&c, 10.0), 1.0);
        assert_eq!(damage_ratio(&c, 6.0), 1.0);
    }

    #[test]
    fn multi_knot_curve() {
        let c = ImpactCurve::new(vec![(0.0, 0.0), (0.5, 0.25), (2.0, 0.5), (6.0, 0.9)]).unwrap();
        assert_relative_eq!(damage_ratio(&c, 0.25), 0.125);
        assert_relative_eq!(damage_ratio(&c, 0.5), 0.25);
        assert_relative_eq!(damage_ratio(&c, 1.25), 0.375);
        assert_relative_eq!(damage_ratio(&c, 7.0), 0.9);
    }

    #[test]
    fn invalid_curves() {
        assert!(ImpactCurve::new(vec![]).is_err());
        assert!(ImpactCurve::new(vec![(0.5, 0.0), (1.0, 1.0)]).is_err());
        assert!(ImpactCurve::new(vec![(0.0, 0.0), (1.0, 0.5), (1.0, 0.6)]).is_err());
        assert!(ImpactCurve::new(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(ImpactCurve::new(vec![(0.0, 0.0), (1.0, 1.5)]).is_err());
    }

    #[test]
    fn curve_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("curve.txt");
        fs::write(&p, "# depth ratio\n0 0\n1 0.4\n4 1\n").unwrap();
        let c = load_impact_curve(&p).unwrap();
        assert_eq!(c.points(), &[(0.0, 0.0), (1.0, 0.4), (4.0, 1.0)]);
        fs::write(&p, "0 0\n1\n").unwrap();
        assert!(load_impact_curve(&p).unwrap_err().to_string().contains("line 2"));
    }

    #[test]
    fn neighborhood_examples() {
        let mut layer = vec![0.0; 25];
        layer[2 * 5 + 2] = 4.0;
        let g = HazardGrid::new(5, 5, vec![100.0], vec![layer.clone()]).unwrap();
        let zero = HazardField::zeros(&g, 0);
        assert_eq!(neighborhood_peak(&zero, Cell::new(0, 0), 3, &g), 0.0);

        let field = HazardField {
            intensities: layer,
            step_index: 0,
        };
        // (4, 4) is at distance 2 from (2, 2)
        assert_eq!(neighborhood_peak(&field, Cell::new(4, 4), 2, &g), 1.0);
        assert_eq!(neighborhood_peak(&field, Cell::new(4, 4), 1, &g), 0.0);
        assert_eq!(neighborhood_peak(&field, Cell::new(0, 2), 1, &g), 0.0);
        assert_eq!(neighborhood_peak(&field, Cell::new(0, 2), 2, &g), 1.0);
    }

    #[test]
    fn zero_grid_peak_is_zero() {
        let g = HazardGrid::zeros(3, 3, vec![10.0]).unwrap();
        let f = HazardField {
            intensities: vec![0.0; 9],
            step_index: 0,
        };
        assert_eq!(neighborhood_peak(&f, Cell::new(1, 1), 50, &g), 0.0);
    }

    fn arb_curve() -> impl Strategy<Value = ImpactCurve> {
        prop::collection::vec((0.01f64..3.0, 0.0f64..0.5), 1..6).prop_map(|steps| {
            let mut pts = vec![(0.0, 0.0)];
            let (mut x, mut y) = (0.0, 0.0);
            for (dx, dy) in steps {
                x += dx;
                y = (y + dy).min(1.0);
                pts.push((x, y));
            }
            ImpactCurve::new(pts).unwrap()
        })
    }

    proptest! {
        #[test]
        fn damage_monotone_and_bounded(c in arb_curve(), a in 0.0f64..20.0, b in 0.0f64..20.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (dlo, dhi) = (damage_ratio(&c, lo), damage_ratio(&c, hi));
            prop_assert!((0.0..=1.0).contains(&dlo));
            prop_assert!((0.0..=1.0).contains(&dhi));
            prop_assert!(dlo <= dhi + 1e-15);
        }

        #[test]
        fn interpolation_monotone_in_t(
            incs in prop::collection::vec(0.0f64..2.0, 1..8),
            a in 0.5f64..3000.0,
            b in 0.5f64..3000.0,
        ) {
            let rps = [2.0, 5.0, 10.0, 25.0, 50.0, 100.0, 250.0, 500.0];
            let mut v = 0.0;
            let knots: Vec<(f64, f64)> = incs.iter().zip(rps).map(|(d, rp)| { v += d; (rp, v) }).collect();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(
                interpolate_return_period(&knots, lo) <= interpolate_return_period(&knots, hi) + 1e-12
            );
        }
    }
}
