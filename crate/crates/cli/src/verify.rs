use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use storalloc::analysis::*;
use storalloc::dynamics::MoveVariant;
use storalloc::feasibility::{check_feasible_flow, check_strict};
use storalloc::io::{load_instance, Snapshot};
use storalloc::{AllocationState, GameParams, Gamma, Instance};

use crate::Verdict;

const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance file (TOML).
    instance: PathBuf,
    /// Inverse noise: a positive number, or "inf" for pure best response.
    #[arg(long, default_value = "1", value_parser = parse_gamma)]
    gamma: GammaArg,
    #[arg(long, default_value = "allocate-first", value_parser = ["proportional", "allocate-first"])]
    variant: String,
    #[arg(long, default_value_t = 1.0)]
    k_c: f64,
    #[arg(long, default_value_t = 0.0)]
    k_a: f64,
    /// Steps to sample for the occupancy test (0 skips it).
    #[arg(long, default_value_t = 0)]
    samples: u64,
    #[arg(long, default_value_t = 1000)]
    burn_in: u64,
    /// Largest total variation accepted by the occupancy test.
    #[arg(long, default_value_t = 0.02)]
    tv_threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start of the completion analysis: a state snapshot (JSON) instead of the empty state.
    #[arg(long, value_name = "SNAPSHOT")]
    start: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy)]
struct GammaArg(Gamma);

fn parse_gamma(s: &str) -> Result<GammaArg, String> {
    if matches!(s, "inf" | "infinity" | "∞") {
        return Ok(GammaArg(Gamma::Infinite));
    }
    match s.parse::<f64>() {
        Ok(g) if g > 0.0 && g.is_finite() => Ok(GammaArg(Gamma::Finite(g))),
        _ => Err(format!("expected a positive number or 'inf', got '{s}'")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Serialize)]
struct Check {
    property: &'static str,
    status: Status,
    detail: String,
}

#[derive(Debug, Serialize)]
struct Report {
    full_states: Option<usize>,
    partial_states: Option<usize>,
    checks: Vec<Check>,
}

impl Report {
    fn push(&mut self, property: &'static str, status: Status, detail: impl Into<String>) {
        self.checks.push(Check {
            property,
            status,
            detail: detail.into(),
        });
    }
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

pub fn run(args: &VerifyArgs) -> Result<Verdict> {
    let inst = load_instance(&args.instance).with_context(|| format!("loading {}", args.instance.display()))?;
    let params = GameParams::new(args.k_c, args.k_a)?;
    let variant: MoveVariant = args.variant.parse()?;
    if inst.total_alpha() == 0 {
        anyhow::bail!("every unit has zero demand; there is nothing to verify");
    }
    let start = match &args.start {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Snapshot::from_json(&text)?.restore(&inst)?
        }
        None => AllocationState::empty(inst.len()),
    };
    let mut report = Report {
        full_states: None,
        partial_states: None,
        checks: Vec::new(),
    };
    if let Gamma::Finite(g) = args.gamma.0 {
        verify_law(&inst, &params, g, variant, args, &mut report)?;
    } else {
        report.push(
            "stationary law",
            Status::Skip,
            "best response has no Gibbs law; only completion is checked",
        );
    }
    verify_completion(&inst, &params, args.gamma.0, variant, &start, &mut report)?;

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        if let Some(k) = report.full_states {
            println!("full states: {k}");
        }
        if let Some(k) = report.partial_states {
            println!("partial states: {k}");
        }
        for c in &report.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            println!("{tag} {}: {}", c.property, c.detail);
        }
    }
    let failed = report.checks.iter().any(|c| c.status == Status::Fail);
    Ok(if failed { Verdict::Negative } else { Verdict::Positive })
}

fn verify_law(
    inst: &Instance,
    params: &GameParams,
    gamma: f64,
    variant: MoveVariant,
    args: &VerifyArgs,
    report: &mut Report,
) -> Result<()> {
    let estimate = estimate_state_count(inst, SpaceKind::Full);
    let space = enumerate_states(inst, SpaceKind::Full, STATE_SPACE_LIMIT)
        .with_context(|| format!("full state space, estimated at most {estimate} states"))?;
    report.full_states = Some(space.len());
    if space.is_empty() {
        let why = "the instance is infeasible: no full state exists";
        for p in ["row sums", "detailed balance", "stationarity", "ergodicity"] {
            report.push(p, Status::Skip, why);
        }
        return Ok(());
    }
    let p = build_transition_matrix(inst, params, &space, Gamma::Finite(gamma), variant)?;
    let law = stationary_exact(inst, params, &space, gamma)?;
    let rows = p.row_sum_error();
    report.push("row sums", pass_if(rows <= 1e-12), format!("max |row sum - 1| = {rows:.3e}"));
    let balance = detailed_balance_residual(&law.mu, &p);
    report.push(
        "detailed balance",
        pass_if(balance <= RESIDUAL_TOLERANCE),
        format!("max |mu_i P_ij - mu_j P_ji| = {balance:.3e}"),
    );
    let stat = stationarity_residual(&law.mu, &p);
    report.push(
        "stationarity",
        pass_if(stat <= RESIDUAL_TOLERANCE),
        format!("max |mu P - mu| = {stat:.3e}"),
    );
    if law.strict {
        let irreducible = is_irreducible(&p);
        report.push(
            "ergodicity",
            pass_if(irreducible),
            if irreducible {
                "chain on full states is irreducible".to_string()
            } else {
                format!("chain is reducible; support graph has {} components", oracle::support_components(&p).iter().max().map_or(0, |m| m + 1))
            },
        );
    } else {
        let w = check_strict(inst).witness.unwrap_or_default();
        report.push(
            "ergodicity",
            Status::Skip,
            format!("strict condition fails on units {w:?}, so irreducibility is not guaranteed"),
        );
    }
    if args.samples > 0 {
        let emp = empirical_distribution(inst, params, &space, &law.mu, gamma, args.burn_in, args.samples, args.seed)?;
        report.push(
            "occupancy",
            pass_if(emp.total_variation < args.tv_threshold),
            format!(
                "total variation {:.4} over {} samples ({} states unvisited)",
                emp.total_variation, args.samples, emp.unvisited
            ),
        );
    }
    Ok(())
}

fn verify_completion(
    inst: &Instance,
    params: &GameParams,
    gamma: Gamma,
    variant: MoveVariant,
    start: &AllocationState,
    report: &mut Report,
) -> Result<()> {
    let estimate = estimate_state_count(inst, SpaceKind::Partial);
    let space = match enumerate_states(inst, SpaceKind::Partial, STATE_SPACE_LIMIT) {
        Ok(space) => space,
        Err(e) if matches!(gamma, Gamma::Finite(_)) => {
            report.push("completion", Status::Skip, format!("partial state space too large: {e}"));
            return Ok(());
        }
        Err(e) => return Err(e).with_context(|| format!("partial state space, estimated at most {estimate} states")),
    };
    report.partial_states = Some(space.len());
    let p = build_transition_matrix(inst, params, &space, gamma, variant)?;
    let analysis = completion_analysis(inst, &space, &p, start)?;
    let detail = if analysis.can_deadlock() {
        let example = &space.states()[analysis.stuck[0]];
        let kind = if check_feasible_flow(inst).feasible {
            "deadlock"
        } else {
            "infeasible instance"
        };
        format!(
            "{kind}: {} of {} reachable states can never complete, e.g. {:?}",
            analysis.stuck.len(),
            analysis.reachable,
            example.triples()
        )
    } else {
        format!("all {} reachable states can complete", analysis.reachable)
    };
    report.push("completion", pass_if(!analysis.can_deadlock()), detail);
    Ok(())
}
