use std::fmt::Write as _;
use std::str::FromStr;

use super::sweep::SweepResult;

/// Threshold marker styling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PlotStyle {
    /// Dashed black lower bound, solid black upper bound, red Hessian
    /// descent, dotted blue two-phase.
    #[default]
    Fig1,
    /// Every marker a thin grey line.
    Plain,
}

impl FromStr for PlotStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig1" => Ok(PlotStyle::Fig1),
            "plain" => Ok(PlotStyle::Plain),
            _ => Err(format!("unknown plot style `{s}` (fig1|plain)")),
        }
    }
}

/// Gnuplot script for a phase-diagram CSV written next to it as
/// `csv_name`. One vertical marker per finite threshold. The schema line is
/// a comment and the column header is declared as such, so every data row
/// is plotted.
pub fn emit_plot_script(result: &SweepResult, style: PlotStyle, csv_name: &str, png_name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{png_name}'");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile missing 'NaN'");
    let _ = writeln!(s, "set datafile columnheaders");
    let _ = writeln!(s, "set xlabel 'alpha = n/d'");
    let _ = writeln!(s, "set ylabel 'energy per equation'");
    let _ = writeln!(s, "set key top left");
    let _ = writeln!(s, "set yrange [0:*]");
    if let Some(row) = result.rows.first() {
        let t = row.thresholds;
        let styles = match style {
            PlotStyle::Fig1 => ["dt 2 lc rgb 'black'", "dt 1 lc rgb 'black'", "dt 1 lc rgb 'red'", "dt 3 lc rgb 'blue'"],
            PlotStyle::Plain => ["lc rgb 'grey'"; 4],
        };
        let marks = [
            (t.alpha_lb, styles[0], "lower bound"),
            (t.alpha_ub1, styles[1], "upper bound"),
            (t.alpha_hd, styles[2], "alpha_HD"),
            (t.alpha_tp, styles[3], "alpha_TP"),
        ];
        for (i, (a, style, _)) in marks.iter().enumerate() {
            if a.is_finite() {
                let _ = writeln!(s, "set arrow {} from {a}, graph 0 to {a}, graph 1 nohead {style}", i + 1);
            }
        }
        let labels: Vec<String> = marks
            .iter()
            .filter(|m| m.0.is_finite())
            .map(|(a, _, name)| format!("{name} {a:.4}"))
            .collect();
        if !labels.is_empty() {
            let _ = writeln!(s, "set title '{}'", labels.join(", "));
        }
        let _ = writeln!(
            s,
            "plot '{csv_name}' using 1:5:6 with yerrorbars pt 7 title 'mean final energy', \\\n     '{csv_name}' using 1:7 with lines lw 2 title 'prediction'"
        );
    } else {
        // nothing measured: axes only
        let _ = writeln!(s, "set xrange [0:1]");
        let _ = writeln!(s, "plot NaN notitle");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_sweep, ExperimentConfig};
    use crate::model::MixtureXi;

    #[test]
    fn empty_sweep_draws_axes_only() {
        let c = ExperimentConfig::new(MixtureXi::parse("1,0,1").unwrap(), 5);
        let r = run_sweep(&c).unwrap();
        let s = emit_plot_script(&r, PlotStyle::Fig1, "p.csv", "p.png");
        assert!(s.contains("plot NaN"));
        assert!(!s.contains("set arrow"));
    }

    #[test]
    fn finite_thresholds_become_markers() {
        let mut c = ExperimentConfig::new(MixtureXi::parse("1,0,0,0,1").unwrap(), 8);
        c.alpha_grid = vec![0.2];
        c.delta = 0.1;
        let r = run_sweep(&c).unwrap();
        let s = emit_plot_script(&r, PlotStyle::Fig1, "p.csv", "p.png");
        assert!(s.contains("columnheaders") && s.contains("using 1:5:6"));
        assert!(s.contains("lc rgb 'red'"));
        assert!(s.contains("dt 2"));
        let arrows = s.matches("set arrow").count();
        let finite = [r.rows[0].thresholds.alpha_lb, r.rows[0].thresholds.alpha_ub1, r.rows[0].thresholds.alpha_hd, r.rows[0].thresholds.alpha_tp]
            .iter()
            .filter(|a| a.is_finite())
            .count();
        assert_eq!(arrows, finite);
        let plain = emit_plot_script(&r, "plain".parse().unwrap(), "p.csv", "p.png");
        assert!(!plain.contains("'red'"));
    }
}
