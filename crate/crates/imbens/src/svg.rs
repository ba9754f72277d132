//! Minimal self-contained SVG renderings of visualizer outputs: faceted line
//! charts for long-format performance tables (one facet per metric, one
//! series per model/dataset pair) and annotated confusion heatmaps (one cell
//! per truth/predicted pair, cell text = count). Linear scales, fixed
//! palette, no external assets; equal inputs render to identical bytes.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::visualizer::{HeatmapData, PerformanceRow};

const PALETTE: [&str; 8] = [
    "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951", "#ff8ab7", "#a463f2", "#9c6b4e",
];

const PLOT_W: f64 = 320.0;
const PLOT_H: f64 = 160.0;
const MARGIN_LEFT: f64 = 56.0;
const FACET_HEAD: f64 = 30.0;
const FACET_GAP: f64 = 22.0;

fn svg_open(out: &mut String, width: f64, height: f64) {
    write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\">\n\
         <style>text {{ font-family: monospace; font-size: 11px; fill: #333; }}</style>\n\
         <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>\n"
    )
    .expect("writing to a String cannot fail");
}

/// Faceted line chart of a long-format performance table: one facet per
/// metric (sorted), one polyline per (model, dataset) series, shared x-range
/// and legend. The y-scale covers at least [0, 1].
pub fn render_lineplot_svg(rows: &[PerformanceRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    let metrics: Vec<&String> = rows
        .iter()
        .map(|r| &r.metric)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let series: Vec<(&String, &String)> = rows
        .iter()
        .map(|r| (&r.model, &r.dataset))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let x_min = rows.iter().map(|r| r.prefix_size).min().unwrap() as f64;
    let x_max = rows.iter().map(|r| r.prefix_size).max().unwrap() as f64;
    let y_min = rows.iter().map(|r| r.value).fold(0.0f64, f64::min);
    let y_max = rows.iter().map(|r| r.value).fold(1.0f64, f64::max);

    let longest_label = series
        .iter()
        .map(|(m, d)| m.chars().count() + d.chars().count() + 3)
        .max()
        .unwrap();
    let legend_w = 40.0 + 7.0 * longest_label as f64;
    let width = MARGIN_LEFT + PLOT_W + 24.0 + legend_w;
    let height = 12.0 + metrics.len() as f64 * (FACET_HEAD + PLOT_H + FACET_GAP);

    let map_x = |p: f64| -> f64 {
        if x_max > x_min {
            MARGIN_LEFT + (p - x_min) / (x_max - x_min) * PLOT_W
        } else {
            MARGIN_LEFT + PLOT_W / 2.0
        }
    };

    let mut out = String::new();
    svg_open(&mut out, width, height);
    for (f, metric) in metrics.iter().enumerate() {
        let top = 12.0 + f as f64 * (FACET_HEAD + PLOT_H + FACET_GAP);
        let y0 = top + FACET_HEAD;
        let map_y = |v: f64| -> f64 { y0 + PLOT_H - (v - y_min) / (y_max - y_min) * PLOT_H };
        write!(
            out,
            "<text class=\"facet-title\" x=\"{MARGIN_LEFT:.2}\" y=\"{:.2}\" font-weight=\"bold\">{metric}</text>\n\
             <line class=\"axis\" x1=\"{MARGIN_LEFT:.2}\" y1=\"{y0:.2}\" x2=\"{MARGIN_LEFT:.2}\" y2=\"{:.2}\" stroke=\"#888\"/>\n\
             <line class=\"axis\" x1=\"{MARGIN_LEFT:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#888\"/>\n",
            top + 16.0,
            y0 + PLOT_H,
            y0 + PLOT_H,
            MARGIN_LEFT + PLOT_W,
            y0 + PLOT_H,
        )
        .expect("writing to a String cannot fail");
        for tick in [y_min, (y_min + y_max) / 2.0, y_max] {
            write!(
                out,
                "<text class=\"tick\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{tick:.2}</text>\n",
                MARGIN_LEFT - 6.0,
                map_y(tick) + 4.0,
            )
            .expect("writing to a String cannot fail");
        }
        for tick in [x_min, x_max] {
            write!(
                out,
                "<text class=\"tick\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{tick:.0}</text>\n",
                map_x(tick),
                y0 + PLOT_H + 16.0,
            )
            .expect("writing to a String cannot fail");
        }
        for (s, (model, dataset)) in series.iter().enumerate() {
            let mut points: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.metric == **metric && r.model == **model && r.dataset == **dataset)
                .map(|r| (r.prefix_size, r.value))
                .collect();
            if points.is_empty() {
                continue;
            }
            points.sort_by(|a, b| a.0.cmp(&b.0));
            let coords: Vec<String> = points
                .iter()
                .map(|&(p, v)| format!("{:.2},{:.2}", map_x(p as f64), map_y(v)))
                .collect();
            write!(
                out,
                "<polyline class=\"series\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                PALETTE[s % PALETTE.len()],
                coords.join(" "),
            )
            .expect("writing to a String cannot fail");
        }
    }
    let legend_x = MARGIN_LEFT + PLOT_W + 24.0;
    for (s, (model, dataset)) in series.iter().enumerate() {
        let y = 24.0 + s as f64 * 18.0;
        write!(
            out,
            "<rect class=\"legend-swatch\" x=\"{legend_x:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n\
             <text class=\"legend-label\" x=\"{:.2}\" y=\"{:.2}\">{model} / {dataset}</text>\n",
            y - 9.0,
            PALETTE[s % PALETTE.len()],
            legend_x + 16.0,
            y,
        )
        .expect("writing to a String cannot fail");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Annotated confusion heatmap: one shaded rectangle and one count label per
/// (truth, predicted) cell, class names on both axes.
pub fn render_heatmap_svg(data: &HeatmapData) -> Result<String> {
    let k = data.matrix.n_classes();
    if k == 0 {
        return Err(Error::EmptyData);
    }
    if data.class_names.len() != k {
        return Err(Error::ShapeMismatch {
            expected: format!("{k} class names"),
            got: format!("{}", data.class_names.len()),
        });
    }
    let cell_w = 64.0;
    let cell_h = 44.0;
    let left = 40.0 + 7.0 * data.class_names.iter().map(|n| n.chars().count()).max().unwrap() as f64;
    let top = 56.0;
    let width = left + k as f64 * cell_w + 16.0;
    let height = top + k as f64 * cell_h + 16.0;
    let max_count = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| data.matrix.get(i, j))
        .max()
        .unwrap();

    let mut out = String::new();
    svg_open(&mut out, width, height);
    write!(
        out,
        "<text class=\"axis-title\" x=\"{:.2}\" y=\"16\" text-anchor=\"middle\" font-weight=\"bold\">predicted</text>\n\
         <text class=\"axis-title\" x=\"12\" y=\"{:.2}\" font-weight=\"bold\" transform=\"rotate(-90 12 {:.2})\" text-anchor=\"middle\">truth</text>\n",
        left + k as f64 * cell_w / 2.0,
        top + k as f64 * cell_h / 2.0,
        top + k as f64 * cell_h / 2.0,
    )
    .expect("writing to a String cannot fail");
    for (j, name) in data.class_names.iter().enumerate() {
        write!(
            out,
            "<text class=\"col-label\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{name}</text>\n",
            left + (j as f64 + 0.5) * cell_w,
            top - 10.0,
        )
        .expect("writing to a String cannot fail");
    }
    for (i, name) in data.class_names.iter().enumerate() {
        write!(
            out,
            "<text class=\"row-label\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{name}</text>\n",
            left - 8.0,
            top + (i as f64 + 0.5) * cell_h + 4.0,
        )
        .expect("writing to a String cannot fail");
    }
    for i in 0..k {
        for j in 0..k {
            let count = data.matrix.get(i, j);
            let opacity = if max_count == 0 {
                0.0
            } else {
                count as f64 / max_count as f64
            };
            let x = left + j as f64 * cell_w;
            let y = top + i as f64 * cell_h;
            write!(
                out,
                "<rect class=\"cell\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell_w:.0}\" height=\"{cell_h:.0}\" \
                 fill=\"#4269d0\" fill-opacity=\"{opacity:.3}\" stroke=\"#bbb\"/>\n\
                 <text class=\"count\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{count}</text>\n",
                x + cell_w / 2.0,
                y + cell_h / 2.0 + 4.0,
            )
            .expect("writing to a String cannot fail");
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ConfusionMatrix;

    fn row(model: &str, dataset: &str, prefix: usize, metric: &str, value: f64) -> PerformanceRow {
        PerformanceRow {
            model: model.to_string(),
            dataset: dataset.to_string(),
            prefix_size: prefix,
            metric: metric.to_string(),
            value,
        }
    }

    #[test]
    fn single_series_renders_one_polyline_with_all_vertices() {
        let rows: Vec<PerformanceRow> = (0..6)
            .map(|i| row("M", "test", 1 + i * 2, "accuracy", 0.5 + i as f64 * 0.05))
            .collect();
        let svg = render_lineplot_svg(&rows).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let points = svg.split("points=\"").nth(1).unwrap();
        let points = &points[..points.find('"').unwrap()];
        assert_eq!(points.split(' ').count(), 6);
        assert_eq!(svg, render_lineplot_svg(&rows).unwrap());
    }

    #[test]
    fn facets_multiply_series_by_metrics() {
        let mut rows = Vec::new();
        for metric in ["accuracy", "balanced_acc"] {
            for model in ["A", "B"] {
                for prefix in [1, 5, 10] {
                    rows.push(row(model, "test", prefix, metric, 0.7));
                }
            }
        }
        let svg = render_lineplot_svg(&rows).unwrap();
        // 2 metrics × 2 (model, dataset) series.
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches("class=\"facet-title\"").count(), 2);
        assert_eq!(svg.matches("class=\"legend-label\"").count(), 2);
    }

    #[test]
    fn empty_table_is_rejected() {
        assert!(matches!(render_lineplot_svg(&[]), Err(Error::EmptyData)));
    }

    #[test]
    fn two_by_two_heatmap_has_four_cells_and_counts() {
        let data = HeatmapData {
            matrix: ConfusionMatrix::from_counts(&[vec![1, 1], vec![0, 2]]).unwrap(),
            class_names: vec!["no".to_string(), "yes".to_string()],
        };
        let svg = render_heatmap_svg(&data).unwrap();
        assert_eq!(svg.matches("class=\"cell\"").count(), 4);
        assert_eq!(svg.matches("class=\"count\"").count(), 4);
        assert!(svg.contains(">2</text>"));
        assert!(svg.contains(">no</text>"));
        assert_eq!(svg, render_heatmap_svg(&data).unwrap());
    }

    #[test]
    fn heatmap_requires_matching_class_names() {
        let data = HeatmapData {
            matrix: ConfusionMatrix::from_counts(&[vec![1, 0], vec![0, 1]]).unwrap(),
            class_names: vec!["only".to_string()],
        };
        assert!(render_heatmap_svg(&data).is_err());
    }
}
