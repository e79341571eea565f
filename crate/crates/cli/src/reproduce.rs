use std::path::PathBuf;

use anyhow::{Context, Result};
use storalloc::dynamics::SimConfig;
use storalloc::io::GeneratorKind;
use storalloc::presets::{self, Preset};

use crate::horizon::eval_horizon;
use crate::runs::{aggregate, run_replications, thread_pool, Aggregate};
use crate::{RunFlags, Verdict};

pub const DEFAULT_REPLICATIONS: u64 = 25;

/// One compared cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub column: &'static str,
    pub metric: &'static str,
    pub reference: f64,
    pub measured: Option<f64>,
    pub band: f64,
}

impl Cell {
    pub fn deviation(&self) -> Option<f64> {
        self.measured.map(|m| m - self.reference)
    }

    pub fn within(&self) -> bool {
        self.deviation().is_some_and(|d| d.abs() <= self.band)
    }
}

/// Tolerance for a cell: +-0.01 for fill and satisfaction values that the
/// capacities force when there is no aggregation, otherwise the larger of 10%
/// and 0.05.
pub fn band(metric: &str, k_a: f64, reference: f64) -> f64 {
    let forced = metric == "lambda_mean" || (metric.starts_with('c') && metric.ends_with("_mean"));
    if k_a == 0.0 && forced {
        0.01
    } else {
        (0.1 * reference.abs()).max(0.05)
    }
}

fn title(table: u8, preset: &Preset) -> String {
    let g = preset.instance.generator.as_ref().expect("presets use generators");
    let graph = match g.kind {
        GeneratorKind::Complete => "complete graph".to_string(),
        GeneratorKind::Line => "line".to_string(),
        GeneratorKind::RandomRegular => format!("random {}-regular graph", g.d.unwrap_or(0)),
    };
    format!("table {table}: {graph}")
}

pub fn run(table: u8, flags: &RunFlags, out: Option<PathBuf>, threads: Option<usize>) -> Result<Verdict> {
    let presets = presets::table(table)?;
    let pool = thread_pool(threads)?;
    let replications = flags.replications.unwrap_or(DEFAULT_REPLICATIONS);
    println!("{}, {replications} replications per column", title(table, &presets[0]));
    let mut cells = Vec::new();
    for preset in &presets {
        let inst = preset.build_instance()?;
        let standard = preset.config(&inst, flags.seed.unwrap_or(0));
        let config = SimConfig {
            schedule: flags.schedule(standard.schedule),
            variant: flags.variant().unwrap_or(standard.variant),
            horizon: match &flags.horizon {
                Some(h) => eval_horizon(h, &inst)?,
                None => standard.horizon,
            },
            record_trace: false,
            ..standard
        };
        let records = run_replications(&pool, &inst, &config, replications)?;
        let agg = aggregate(&records);
        let column = compare(preset, &agg);
        print_column(preset, &agg, &column);
        cells.extend(column);
    }
    let outside = cells.iter().filter(|c| !c.within()).count();
    println!("{} of {} cells within tolerance", cells.len() - outside, cells.len());
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("table{table}.csv"));
        write_csv(&path, &cells).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(Verdict::Positive)
}

fn compare(preset: &Preset, agg: &Aggregate) -> Vec<Cell> {
    preset
        .reference
        .values
        .iter()
        .map(|&(metric, reference)| Cell {
            column: preset.reference.label,
            metric,
            reference,
            measured: agg.get(metric),
            band: band(metric, preset.params.k_a, reference),
        })
        .collect()
}

fn print_column(preset: &Preset, agg: &Aggregate, cells: &[Cell]) {
    println!();
    println!("[{}] {} of {} runs completed", preset.reference.label, agg.completed, agg.runs);
    println!("{:<14} {:>11} {:>11} {:>11} {:>9}", "metric", "reference", "measured", "deviation", "band");
    for c in cells {
        let measured = c.measured.map_or("-".to_string(), |m| format!("{m:.4}"));
        let dev = c.deviation().map_or("-".to_string(), |d| format!("{d:+.4}"));
        let flag = if c.within() { "" } else { "  outside" };
        println!(
            "{:<14} {:>11.4} {:>11} {:>11} {:>9.4}{flag}",
            c.metric, c.reference, measured, dev, c.band
        );
    }
}

fn write_csv(path: &std::path::Path, cells: &[Cell]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["column", "metric", "reference", "measured", "deviation", "band", "within"])?;
    for c in cells {
        w.write_record([
            c.column.to_string(),
            c.metric.to_string(),
            c.reference.to_string(),
            c.measured.map(|m| m.to_string()).unwrap_or_default(),
            c.deviation().map(|d| d.to_string()).unwrap_or_default(),
            c.band.to_string(),
            c.within().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands() {
        assert_eq!(band("lambda_mean", 0.0, 0.6667), 0.01);
        assert_eq!(band("c2_mean", 0.0, 1.0), 0.01);
        assert_eq!(band("c2_var", 0.0, 0.0), 0.05);
        assert!((band("d_out", 0.45, 6.37) - 0.637).abs() < 1e-12);
        assert_eq!(band("lambda_mean", 0.45, 0.6606), 0.06606);
    }

    #[test]
    fn cells() {
        let c = Cell {
            column: "x",
            metric: "d_out",
            reference: 6.0,
            measured: Some(5.5),
            band: 0.6,
        };
        assert!(c.within());
        assert_eq!(c.deviation(), Some(-0.5));
        let missing = Cell { measured: None, ..c };
        assert!(!missing.within());
    }
}
