//! `ddplot`: depth-versus-depth scatter over the decision regions of a
//! classifier, as SVG, plus the grid predictions as CSV.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use ddg_core::ddg::DepthFeatureMatrix;
use ddg_core::fdata::format_scalar;
use ndarray::Array2;

use crate::commands::{fit_saved, select_columns, ClassifierArgs, SavedModel};
use crate::error::{CliError, CliResult};
use crate::inputs::{read_features, read_json, read_labels, write_file};

#[derive(Debug, Args)]
pub struct DdplotArgs {
    /// Training features the classifier is fitted on.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// The two feature columns to plot (comma-separated).
    #[arg(long)]
    pub columns: Vec<String>,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Use a model saved by `train` instead of fitting one.
    #[arg(long, conflicts_with = "classifier")]
    pub model: Option<PathBuf>,
    /// Points to draw (default: the training features).
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long)]
    pub points_labels: Option<PathBuf>,
    /// Decision grid resolution per axis.
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Grid predictions (`x,y,class`); default: the SVG path with `.csv`.
    #[arg(long)]
    pub grid_csv: Option<PathBuf>,
}

/// Reduces `features` to the two plotted columns.
fn plotted(features: DepthFeatureMatrix<f64>, columns: &[String]) -> CliResult<DepthFeatureMatrix<f64>> {
    let chosen = select_columns(features, columns)?;
    match chosen.n_cols() {
        2 => Ok(chosen),
        n if n > 2 && !columns.is_empty() => {
            log::warn!("{n} columns selected; plotting the first two");
            Ok(chosen.select_columns(&[0, 1]))
        }
        n => Err(CliError::Core(ddg_core::Error::Parameter(format!(
            "the DD-plot needs two feature columns, got {n}; choose them with --columns"
        )))),
    }
}

/// Side of the square window from 0 to slightly beyond the largest depth;
/// 0 when there is nothing to show.
fn window(sets: &[&Array2<f64>]) -> f64 {
    sets.iter().flat_map(|a| a.iter()).fold(0.0f64, |m, &v| m.max(v)) * 1.05
}

/// Cell centers of an `r x r` grid on `[0, side]^2`, row-major from the
/// bottom-left corner.
pub fn grid_points(side: f64, r: usize) -> Array2<f64> {
    let step = side / r as f64;
    Array2::from_shape_fn((r * r, 2), |(i, c)| {
        let (row, col) = (i / r, i % r);
        (if c == 0 { col } else { row } as f64 + 0.5) * step
    })
}

const REGION: [&str; 6] = ["#e6e6e6", "#a6a6a6", "#cfd8e3", "#e3d4cf", "#d4e3cf", "#dcd0e3"];
const POINT: [&str; 6] = ["#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#17202a"];

pub fn ddplot(args: &DdplotArgs) -> CliResult<()> {
    if args.resolution == 0 {
        return Err(CliError::usage("--resolution must be positive"));
    }
    let (saved, train) = match &args.model {
        Some(path) => {
            let saved: SavedModel = read_json(path)?;
            if saved.feature_names.len() != 2 {
                return Err(CliError::Core(ddg_core::Error::Parameter(format!(
                    "the saved model uses {} features; a DD-plot needs 2",
                    saved.feature_names.len()
                ))));
            }
            (saved, None)
        }
        None => {
            let fpath = args.features.as_ref().ok_or_else(|| CliError::usage("--features or --model is required"))?;
            let lpath = args.labels.as_ref().ok_or_else(|| CliError::usage("--labels is required"))?;
            let features = plotted(read_features(fpath)?, &args.columns)?;
            let labels = read_labels(lpath)?;
            (fit_saved(&features, &labels, &args.classifier)?, Some((features, labels)))
        }
    };
    let train_top = train.as_ref().map_or(0.0, |(f, _)| window(&[f.values()]));
    let (points, point_labels) = match &args.points {
        Some(p) => {
            let f = saved.align(&read_features(p)?)?;
            let l = match &args.points_labels {
                Some(l) => read_labels(l)?,
                None => vec![0; f.n_rows()],
            };
            if l.len() != f.n_rows() {
                return Err(CliError::usage(format!("{} labels for {} points", l.len(), f.n_rows())));
            }
            (f, l)
        }
        None => train.ok_or_else(|| CliError::usage("--points is required with --model"))?,
    };
    let side = if points.n_rows() > 0 { window(&[points.values()]).max(train_top) } else if train_top > 0.0 { train_top } else { 1.0 };
    let r = args.resolution;
    let grid = grid_points(side, r);
    let classes = saved.classifier.predict(grid.view())?;
    let csv_path = args.grid_csv.clone().unwrap_or_else(|| args.out.with_extension("csv"));
    write_file(&csv_path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "class"])?;
        for (p, c) in grid.rows().into_iter().zip(&classes) {
            w.write_record([format_scalar(p[0]), format_scalar(p[1]), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let svg = render(&saved.feature_names, side, r, &classes, &points, &point_labels);
    write_file(&args.out, |out| Ok(out.write_all(svg.as_bytes())?))?;
    println!("{} ({} points), grid {}", args.out.display(), points.n_rows(), csv_path.display());
    Ok(())
}

fn render(
    names: &[String],
    side: f64,
    r: usize,
    classes: &[usize],
    points: &DepthFeatureMatrix<f64>,
    labels: &[usize],
) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 60.0;
    let px = |v: f64| MARGIN + v / side * SIZE;
    let py = |v: f64| MARGIN + SIZE - v / side * SIZE;
    let cell = SIZE / r as f64;
    let total = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{total}" height="{total}" fill="white"/>"#);
    // background: runs of equal class along each grid row
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for row in 0..r {
        let mut col = 0;
        while col < r {
            let c = classes[row * r + col];
            let start = col;
            while col < r && classes[row * r + col] == c {
                col += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                MARGIN + start as f64 * cell,
                MARGIN + SIZE - (row + 1) as f64 * cell,
                (col - start) as f64 * cell,
                cell,
                REGION[c % REGION.len()]
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="black" stroke-dasharray="4 3"/>"#,
        px(0.0),
        py(0.0),
        px(side),
        py(side)
    );
    for (p, &l) in points.values().rows().into_iter().zip(labels) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="2.5" fill="{}" fill-opacity="0.8"/>"#,
            px(p[0]),
            py(p[1]),
            POINT[l % POINT.len()]
        );
    }
    let _ = writeln!(s, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let v = side * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{v:.3}</text>"#, px(v), MARGIN + SIZE + 18.0);
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{v:.3}</text>"#, MARGIN - 6.0, py(v) + 4.0);
    }
    let escape = |t: &str| t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#, MARGIN + SIZE / 2.0, total - 16.0, escape(&names[0]));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.3}" text-anchor="middle" transform="rotate(-90 18 {:.3})">{}</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0,
        escape(&names[1])
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_centers() {
        let g = grid_points(2.0, 4);
        assert_eq!(g.nrows(), 16);
        assert_eq!((g[[0, 0]], g[[0, 1]]), (0.25, 0.25));
        assert_eq!((g[[1, 0]], g[[1, 1]]), (0.75, 0.25));
        assert_eq!((g[[15, 0]], g[[15, 1]]), (1.75, 1.75));
    }
}
