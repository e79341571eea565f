use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use storalloc::feasibility::{check_feasible_flow, check_strict, hall_sums};
use storalloc::io::load_instance;
use storalloc::{Instance, UnitId};

use crate::Verdict;

#[derive(Debug, Serialize)]
struct Witness {
    units: Vec<UnitId>,
    neighborhood: Vec<UnitId>,
    demand: u64,
    capacity: u64,
}

impl Witness {
    fn new(inst: &Instance, units: Vec<UnitId>) -> Self {
        let (demand, capacity) = hall_sums(inst, &units);
        Witness {
            neighborhood: inst.topology().neighborhood_of_set(&units),
            units,
            demand,
            capacity,
        }
    }
}

#[derive(Debug, Serialize)]
struct Report {
    verdict: &'static str,
    feasible: bool,
    strict: bool,
    /// Set whose demand exceeds the capacity of its neighborhood.
    witness: Option<Witness>,
    /// For feasible but not strictly feasible instances: a set whose demand
    /// uses up its neighborhood.
    tight_set: Option<Witness>,
}

pub fn run(path: &Path) -> Result<Verdict> {
    let inst = load_instance(path).with_context(|| format!("loading {}", path.display()))?;
    let plain = check_feasible_flow(&inst);
    let strict = check_strict(&inst);
    let report = Report {
        verdict: match (plain.feasible, strict.feasible) {
            (true, true) => "strict-feasible",
            (true, false) => "feasible",
            _ => "infeasible",
        },
        feasible: plain.feasible,
        strict: strict.feasible,
        witness: plain.witness.map(|w| Witness::new(&inst, w)),
        tight_set: if plain.feasible {
            strict.witness.map(|w| Witness::new(&inst, w))
        } else {
            None
        },
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if plain.feasible { Verdict::Positive } else { Verdict::Negative })
}
