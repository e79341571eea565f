//! Replicated runs, aggregation and result files.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use storalloc::analysis::{compute_metrics, partition_by_reliability, welfare_optimum, FieldValue, MetricsReport};
use storalloc::dynamics::{run, write_trace, SimConfig, TraceEvent};
use storalloc::io::Snapshot;
use storalloc::{GameParams, Instance};

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub completed: bool,
    pub steps: u64,
    pub steps_to_completion: Option<u64>,
    /// `None` when the run did not complete.
    pub metrics: Option<MetricsReport>,
    pub final_state: Snapshot,
    #[serde(skip)]
    pub trace: Option<Vec<TraceEvent>>,
}

/// Mean of every numeric metric over the completed runs, in field order.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    pub completed: usize,
    pub means: Vec<(String, f64)>,
}

impl Aggregate {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.means.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("building worker pool")
}

/// Runs seeds `base .. base + replications` of `template` on the pool. The
/// returned records are in seed order whatever the scheduling.
pub fn run_replications(
    pool: &rayon::ThreadPool,
    inst: &Instance,
    template: &SimConfig,
    replications: u64,
) -> Result<Vec<RunRecord>> {
    let params: GameParams = template.params;
    let classes = partition_by_reliability(inst);
    let optimum = welfare_optimum(inst, &params);
    pool.install(|| {
        (0..replications)
            .into_par_iter()
            .map(|i| {
                let seed = template.seed.wrapping_add(i);
                let config = SimConfig {
                    seed,
                    ..template.clone()
                };
                let result = run(inst, &config)?;
                let metrics = result
                    .completed
                    .then(|| compute_metrics(inst, &params, &result, &classes, optimum.as_ref(), false))
                    .transpose()?;
                Ok(RunRecord {
                    seed,
                    completed: result.completed,
                    steps: result.steps,
                    steps_to_completion: result.steps_to_completion,
                    metrics,
                    final_state: Snapshot::capture(inst, &result.final_state),
                    trace: result.trace,
                })
            })
            .collect()
    })
}

pub fn aggregate(records: &[RunRecord]) -> Aggregate {
    let mut sums: Vec<(String, f64)> = Vec::new();
    let mut completed = 0;
    for m in records.iter().filter_map(|r| r.metrics.as_ref()) {
        completed += 1;
        for (k, v) in m.fields() {
            let FieldValue::Num(x) = v else { continue };
            match sums.iter_mut().find(|(key, _)| *key == k) {
                Some(entry) => entry.1 += x,
                None => sums.push((k, x)),
            }
        }
    }
    Aggregate {
        runs: records.len(),
        completed,
        means: sums.into_iter().map(|(k, v)| (k, v / completed as f64)).collect(),
    }
}

/// Writes `runs/seed-<s>.json`, `summary.csv`, `aggregate.json` and, for runs
/// with a trace, `traces/seed-<s>.csv` under `dir`.
pub fn write_results(dir: &Path, header: &impl Serialize, records: &[RunRecord], agg: &Aggregate) -> Result<()> {
    let runs_dir = dir.join("runs");
    fs::create_dir_all(&runs_dir).with_context(|| format!("creating {}", runs_dir.display()))?;
    for r in records {
        let path = runs_dir.join(format!("seed-{}.json", r.seed));
        fs::write(&path, serde_json::to_string_pretty(r)? + "\n").with_context(|| format!("writing {}", path.display()))?;
        if let Some(trace) = &r.trace {
            let traces = dir.join("traces");
            fs::create_dir_all(&traces)?;
            let path = traces.join(format!("seed-{}.csv", r.seed));
            let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
            write_trace(BufWriter::new(file), trace)?;
        }
    }
    write_summary(&dir.join("summary.csv"), records)?;
    #[derive(Serialize)]
    struct Doc<'a, H> {
        experiment: &'a H,
        runs: usize,
        completed: usize,
        means: serde_json::Map<String, serde_json::Value>,
    }
    let doc = Doc {
        experiment: header,
        runs: agg.runs,
        completed: agg.completed,
        means: agg.means.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect(),
    };
    fs::write(dir.join("aggregate.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}

fn write_summary(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let keys: Vec<String> = records
        .iter()
        .find_map(|r| r.metrics.as_ref())
        .map(|m| m.fields().into_iter().map(|(k, _)| k).collect())
        .unwrap_or_default();
    let mut header = vec!["seed".to_string(), "completed".into(), "steps_to_completion".into()];
    header.extend(keys.iter().cloned());
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.seed.to_string(),
            r.completed.to_string(),
            r.steps_to_completion.map(|s| s.to_string()).unwrap_or_default(),
        ];
        match &r.metrics {
            Some(m) => row.extend(m.fields().into_iter().map(|(_, v)| v.to_string())),
            None => row.extend(keys.iter().map(|_| String::new())),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
