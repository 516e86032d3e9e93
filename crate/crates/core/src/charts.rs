//! Static SVG line charts of baseline and hazard trajectories.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::MetricsFrame;

/// A labelled metrics series, e.g. `"B"` for baseline or `"H"` for hazard.
#[derive(Debug, Clone, Copy)]
pub struct ChartSeries<'a> {
    pub tag: &'a str,
    pub frames: &'a [MetricsFrame],
}

type Pick = fn(&MetricsFrame) -> f64;

struct Panel {
    file: &'static str,
    title: &'static str,
    y_label: &'static str,
    /// `(line name, value)`; the scenario tag is appended to the name.
    lines: &'static [(&'static str, Pick)],
}

const SECTOR_PANELS: &[Panel] = &[
    Panel {
        file: "a_production.svg",
        title: "Mean firm production",
        y_label: "units per firm",
        lines: &[
            ("Com", |f| f.mean_production_commodity),
            ("Man", |f| f.mean_production_manufacturer),
        ],
    },
    Panel {
        file: "b_firm_money.svg",
        title: "Mean firm wealth",
        y_label: "money per firm",
        lines: &[
            ("Com", |f| f.mean_firm_money_commodity),
            ("Man", |f| f.mean_firm_money_manufacturer),
        ],
    },
    Panel {
        file: "c_labor.svg",
        title: "Mean labour supplied",
        y_label: "units per household",
        lines: &[("Labour", |f| f.mean_labor_supplied)],
    },
    Panel {
        file: "d_prices.svg",
        title: "Mean goods price",
        y_label: "price",
        lines: &[
            ("Com", |f| f.mean_price_commodity),
            ("Man", |f| f.mean_price_manufacturer),
        ],
    },
    Panel {
        file: "e_wages.svg",
        title: "Mean wage",
        y_label: "wage",
        lines: &[
            ("Com", |f| f.mean_wage_commodity),
            ("Man", |f| f.mean_wage_manufacturer),
        ],
    },
    Panel {
        file: "f_unemployment.svg",
        title: "Unemployment rate",
        y_label: "fraction of households",
        lines: &[("Unemployed", |f| f.unemployment_rate)],
    },
    Panel {
        file: "g_household_wealth.svg",
        title: "Mean household wealth",
        y_label: "money per household",
        lines: &[("Households", |f| f.mean_household_money)],
    },
];

const BOTTLENECK_LINES: &[(&str, Pick)] = &[
    ("Labour", |f| f.share_labor_limited),
    ("Capital", |f| f.share_capital_limited),
    ("Input", |f| f.share_input_limited),
];

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

/// Writes one chart per panel into `dir`: seven overlay panels (a-g) and
/// one bottleneck-share panel per input series (h for the first, i for
/// the second). Returns the written paths.
pub fn emit_charts(series: &[ChartSeries<'_>], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if series.is_empty() || series.iter().any(|s| s.frames.is_empty()) {
        return Err(Error::EmptySeries);
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    for panel in SECTOR_PANELS {
        let mut lines = Vec::new();
        for s in series {
            for (name, pick) in panel.lines {
                lines.push((format!("{name}-{}", s.tag), points(s.frames, *pick)));
            }
        }
        let path = dir.join(panel.file);
        draw(&path, panel.title, panel.y_label, &lines)?;
        written.push(path);
    }

    for (s, (file, which)) in series.iter().zip([("h_bottleneck.svg", "first"), ("i_bottleneck.svg", "second")]) {
        let lines: Vec<_> = BOTTLENECK_LINES
            .iter()
            .map(|(name, pick)| (name.to_string(), points(s.frames, *pick)))
            .collect();
        let title = format!("Production bottleneck shares ({}, {which} series)", s.tag);
        let path = dir.join(file);
        draw(&path, &title, "share of producing firms", &lines)?;
        written.push(path);
    }
    Ok(written)
}

fn points(frames: &[MetricsFrame], pick: Pick) -> Vec<(f64, f64)> {
    frames
        .iter()
        .map(|f| (f.year, pick(f)))
        .filter(|(_, y)| y.is_finite())
        .collect()
}

fn draw(path: &Path, title: &str, y_label: &str, lines: &[(String, Vec<(f64, f64)>)]) -> Result<()> {
    let chart_err = |e: &dyn std::fmt::Display| Error::Chart(format!("{}: {e}", path.display()));
    let all = lines.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, 0.0f64, f64::MIN);
    for (x, y) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if x0 > x1 {
        return Err(Error::EmptySeries);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pad = (y1 - y0) * 0.05;

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| chart_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..(y1 + pad))
        .map_err(|e| chart_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("year")
        .y_desc(y_label)
        .draw()
        .map_err(|e| chart_err(&e))?;
    for (k, (name, pts)) in lines.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(|e| chart_err(&e))?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| chart_err(&e))?;
    root.present().map_err(|e| chart_err(&e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::StepFlows;

    fn series(n: u32, scale: f64) -> Vec<MetricsFrame> {
        (1..=n)
            .map(|t| {
                let mut f = MetricsFrame::collect(t, 2020.0 + f64::from(t) * 0.25, &[], &[], &StepFlows::default());
                f.mean_production_commodity = scale * f64::from(t);
                f.share_labor_limited = 0.7;
                f.share_capital_limited = 0.3;
                f
            })
            .collect()
    }

    #[test]
    fn single_series_gives_eight_panels() {
        let dir = tempfile::tempdir().unwrap();
        let b = series(12, 1.0);
        let files = emit_charts(&[ChartSeries { tag: "B", frames: &b }], dir.path()).unwrap();
        assert_eq!(files.len(), 8);
        let svg = std::fs::read_to_string(&files[0]).unwrap();
        assert!(svg.contains("Com-B"));
        assert!(!svg.contains("Com-H"));
    }

    #[test]
    fn pair_gives_nine_panels() {
        let dir = tempfile::tempdir().unwrap();
        let (b, h) = (series(12, 1.0), series(12, 0.5));
        let files = emit_charts(
            &[ChartSeries { tag: "B", frames: &b }, ChartSeries { tag: "H", frames: &h }],
            dir.path(),
        )
        .unwrap();
        assert_eq!(files.len(), 9);
        assert!(files.iter().all(|p| p.exists()));
        let svg = std::fs::read_to_string(&files[0]).unwrap();
        assert!(svg.contains("Com-B") && svg.contains("Man-H"));
    }

    #[test]
    fn empty_series_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit_charts(&[ChartSeries { tag: "B", frames: &[] }], dir.path()).unwrap_err();
        assert_eq!(err.to_string(), "empty series");
        assert!(matches!(emit_charts(&[], dir.path()), Err(Error::EmptySeries)));
    }
}
