use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;
use storalloc::dynamics::{GammaSchedule, MoveVariant, SimConfig};
use storalloc::feasibility::check_feasible_flow;
use storalloc::io::fingerprint;
use storalloc::GameParams;

use crate::horizon::eval_horizon;
use crate::runs::{aggregate, run_replications, thread_pool, write_results};
use crate::spec::ExperimentSpec;
use crate::{RunFlags, Verdict};

const DEFAULT_OUT: &str = "storalloc-out";

/// Settings actually used, echoed into `aggregate.json`.
#[derive(Debug, Serialize)]
struct Header {
    instance_fingerprint: String,
    n: usize,
    sum_alpha: u64,
    feasible: bool,
    params: GameParams,
    schedule: GammaSchedule,
    variant: MoveVariant,
    horizon: u64,
    seed: u64,
    replications: u64,
}

pub fn run(spec_path: &Path, flags: &RunFlags, out: Option<PathBuf>, threads: Option<usize>) -> Result<Verdict> {
    let mut spec = ExperimentSpec::load(spec_path)?;
    if let Some(h) = &flags.horizon {
        spec.horizon = h.clone();
    }
    spec.replications = flags.replications.unwrap_or(spec.replications);
    spec.seed = flags.seed.unwrap_or(spec.seed);
    spec.variant = flags.variant().unwrap_or(spec.variant);
    spec.schedule = flags.schedule(spec.schedule);
    spec.output.trace |= flags.trace;
    spec.validate()?;

    let inst = spec.build_instance()?;
    let feasible = check_feasible_flow(&inst).feasible;
    if !feasible {
        eprintln!("warning: the instance is infeasible; the allocation cannot complete and metrics will be missing.");
    }
    let horizon = eval_horizon(&spec.horizon, &inst)?;
    let config = SimConfig {
        params: spec.params,
        schedule: spec.schedule,
        variant: spec.variant,
        horizon,
        seed: spec.seed,
        record_trace: spec.output.trace,
        initial: None,
    };
    let pool = thread_pool(threads)?;
    let records = run_replications(&pool, &inst, &config, spec.replications)?;
    let agg = aggregate(&records);
    let dir = out
        .or(spec.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let header = Header {
        instance_fingerprint: fingerprint(&inst),
        n: inst.len(),
        sum_alpha: inst.total_alpha(),
        feasible,
        params: spec.params,
        schedule: spec.schedule,
        variant: spec.variant,
        horizon,
        seed: spec.seed,
        replications: spec.replications,
    };
    write_results(&dir, &header, &records, &agg)?;

    println!(
        "{} of {} runs completed; results in {}",
        agg.completed,
        agg.runs,
        dir.display()
    );
    for (k, v) in &agg.means {
        println!("  {k:<16} {v:.6}");
    }
    Ok(Verdict::Positive)
}
