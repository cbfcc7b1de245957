//! Gnuplot scripts for log-log rate plots with a reference line of the target
//! slope. Scripts read their CSV by relative path and are run from the output
//! directory.

use std::path::{Path, PathBuf};

use crate::convergence::{ConvergenceReport, GapReport, RemainderReport};
use crate::error::Result;
use crate::io::atomic_write;

#[derive(Clone, Debug, PartialEq)]
pub struct RatePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// CSV file next to the script.
    pub csv: String,
    /// Gnuplot `using` expressions for the two axes.
    pub x_expr: String,
    pub y_expr: String,
    /// Positive `(x, y)` pairs; other points are dropped.
    pub points: Vec<(f64, f64)>,
    /// Slope of the reference line.
    pub slope: f64,
}

impl RatePlot {
    pub fn from_convergence(r: &ConvergenceReport) -> Self {
        let (x_label, x_expr) = if r.family == "alpha" {
            ("1/alpha", "(1/$1)")
        } else {
            ("epsilon", "1")
        };
        RatePlot {
            title: format!("{} sweep, {} norm, h = {}", r.family, r.norm_flavor, r.h),
            x_label: x_label.into(),
            y_label: format!("{} difference, s = {}", r.norm_flavor, r.s),
            csv: format!("rate_{}_h{}.csv", r.family, r.h),
            x_expr: x_expr.into(),
            y_expr: "2".into(),
            points: r
                .points
                .iter()
                .filter_map(|p| p.error.map(|e| (p.small, e)))
                .collect(),
            slope: r.h,
        }
    }

    pub fn from_gap(r: &GapReport) -> Self {
        RatePlot {
            title: "order parameter gap".into(),
            x_label: "1/alpha".into(),
            y_label: "L1 gap".into(),
            csv: "gap.csv".into(),
            x_expr: "(1/$1)".into(),
            y_expr: "3".into(),
            points: r.gaps.iter().map(|g| (1.0 / g.alpha, g.integral_norm)).collect(),
            slope: r.threshold,
        }
    }

    pub fn from_remainder(r: &RemainderReport) -> Self {
        RatePlot {
            title: format!("capillary remainder, h = {}", r.h),
            x_label: "epsilon".into(),
            y_label: "normalized remainder".into(),
            csv: format!("remainder_h{}.csv", r.h),
            x_expr: "1".into(),
            y_expr: "2".into(),
            points: r.epsilons.iter().cloned().zip(r.normalized.iter().cloned()).collect(),
            slope: r.h,
        }
    }

    fn usable(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .cloned()
            .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
            .collect()
    }

    /// Gnuplot source, or `None` when no point can be drawn on log axes.
    pub fn script(&self) -> Option<String> {
        let pts = self.usable();
        let &(x0, y0) = pts.first()?;
        let mut s = String::new();
        s.push_str(&format!("set title \"{}\"\n", self.title));
        s.push_str("set logscale xy\n");
        s.push_str(&format!("set xlabel \"{}\"\n", self.x_label));
        s.push_str(&format!("set ylabel \"{}\"\n", self.y_label));
        s.push_str("set key left top\n");
        s.push_str("set format xy \"%g\"\n");
        s.push_str("set datafile separator \",\"\n");
        s.push_str(&format!("slope = {}\n", self.slope));
        s.push_str(&format!("anchor = {:.17e} / {:.17e}**slope\n", y0, x0));
        s.push_str(&format!(
            "plot \"{}\" skip 2 using {}:{} with linespoints pt 7 title \"measured\", \\\n     \
             anchor * x**slope with lines dashtype 2 title sprintf(\"slope %g\", slope)\n",
            self.csv, self.x_expr, self.y_expr
        ));
        Some(s)
    }
}

/// Writes `<dir>/<name>.gp`; an empty plot is skipped with a warning.
pub fn emit_plot(plot: &RatePlot, dir: &Path, name: &str) -> Result<Option<PathBuf>> {
    match plot.script() {
        Some(src) => {
            let path = dir.join(format!("{name}.gp"));
            atomic_write(&path, src.as_bytes())?;
            Ok(Some(path))
        }
        None => {
            log::warn!("no plottable points for {name}; script not written");
            Ok(None)
        }
    }
}
