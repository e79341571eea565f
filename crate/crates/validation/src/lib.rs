//! Shared pieces of the acceptance suite: criterion outcomes and replicated
//! runs of the standard protocol.

use storalloc::analysis::{compute_metrics, partition_by_reliability, welfare_optimum, FieldValue};
use storalloc::dynamics::{run, MoveVariant, SimConfig};
use storalloc::{GameParams, Instance};

pub const VARIANTS: [MoveVariant; 2] = [MoveVariant::Proportional, MoveVariant::AllocateFirst];

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

pub fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

pub fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

/// Means over the completed runs of a replicated experiment.
pub struct Aggregate {
    pub means: Vec<(String, f64)>,
    pub min_rho: f64,
    pub incomplete: usize,
}

impl Aggregate {
    /// NaN for a metric no run produced.
    pub fn get(&self, key: &str) -> f64 {
        self.means.iter().find(|(k, _)| k == key).map(|&(_, v)| v).unwrap_or(f64::NAN)
    }
}

/// Runs seeds `0..replications` of the standard protocol.
pub fn replicate(inst: &Instance, params: GameParams, replications: u64) -> Aggregate {
    let classes = partition_by_reliability(inst);
    let optimum = welfare_optimum(inst, &params);
    let mut sums: Vec<(String, f64)> = Vec::new();
    let mut min_rho = f64::INFINITY;
    let mut incomplete = 0;
    let mut counted = 0.0;
    for seed in 0..replications {
        let result = run(inst, &SimConfig::standard(inst, params, seed)).expect("standard config is valid");
        let Ok(m) = compute_metrics(inst, &params, &result, &classes, optimum.as_ref(), false) else {
            incomplete += 1;
            continue;
        };
        counted += 1.0;
        if let Some(r) = m.rho {
            min_rho = min_rho.min(r.value);
        }
        for (k, v) in m.fields() {
            if let FieldValue::Num(x) = v {
                match sums.iter_mut().find(|(key, _)| *key == k) {
                    Some(entry) => entry.1 += x,
                    None => sums.push((k, x)),
                }
            }
        }
    }
    Aggregate {
        means: sums.into_iter().map(|(k, v)| (k, v / counted)).collect(),
        min_rho,
        incomplete,
    }
}
