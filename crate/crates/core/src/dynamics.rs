//! Discrete-time asynchronous noisy best-response dynamics.
//!
//! At every step one unit is drawn with probability proportional to its demand.
//! It makes an allocation move (place a new atom) or a distribution move (pick
//! one of its placed atoms with probability proportional to the counts, lift it,
//! and re-place it), choosing the destination by the Gibbs rule. A unit with no
//! available resource idles; the step is still consumed.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{gibbs_weights, AllocationState, GameParams, Gamma, Move};
use crate::topology::{Instance, UnitId};

/// How `gamma` evolves with the step counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaSchedule {
    Fixed { gamma: f64 },
    /// `gamma(t) = gamma0 + t * increment`; a missing increment means
    /// `1 / (100 * lambda_max)`.
    Annealed { gamma0: f64, increment: Option<f64> },
    Infinite,
}

impl Default for GammaSchedule {
    fn default() -> Self {
        GammaSchedule::Annealed {
            gamma0: 1.0,
            increment: None,
        }
    }
}

impl GammaSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GammaSchedule::Fixed { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::invalid(format!("fixed gamma must be positive, got {gamma}")))
            }
            GammaSchedule::Annealed { gamma0, increment } => {
                if !(gamma0 > 0.0 && gamma0.is_finite()) {
                    return Err(Error::invalid(format!("gamma0 must be positive, got {gamma0}")));
                }
                match increment {
                    Some(inc) if !(inc >= 0.0 && inc.is_finite()) => {
                        Err(Error::invalid(format!("gamma increment must be >= 0, got {inc}")))
                    }
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

/// The default annealing step, `1 / (100 * lambda_max)`; zero when every
/// reliability is zero.
pub fn default_increment(lambda_max: f64) -> f64 {
    if lambda_max > 0.0 {
        1.0 / (lambda_max * 100.0)
    } else {
        0.0
    }
}

pub fn gamma_schedule_value(schedule: &GammaSchedule, t: u64, lambda_max: f64) -> Gamma {
    match *schedule {
        GammaSchedule::Fixed { gamma } => Gamma::Finite(gamma),
        GammaSchedule::Annealed { gamma0, increment } => {
            let inc = increment.unwrap_or_else(|| default_increment(lambda_max));
            Gamma::Finite(gamma0 + t as f64 * inc)
        }
        GammaSchedule::Infinite => Gamma::Infinite,
    }
}

/// Rule choosing between an allocation and a distribution move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveVariant {
    /// Allocate with probability `(alpha_x - W^x) / alpha_x`.
    Proportional,
    /// Allocate whenever something is left to allocate.
    #[default]
    AllocateFirst,
}

impl std::str::FromStr for MoveVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proportional" => Ok(MoveVariant::Proportional),
            "allocate-first" => Ok(MoveVariant::AllocateFirst),
            other => Err(Error::invalid(format!("unknown move variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: GameParams,
    pub schedule: GammaSchedule,
    pub variant: MoveVariant,
    pub horizon: u64,
    pub seed: u64,
    pub record_trace: bool,
    /// Starting state; empty when `None`.
    pub initial: Option<AllocationState>,
}

impl SimConfig {
    /// Allocate-first, default annealing, horizon `2 * sum(alpha)`.
    pub fn standard(inst: &Instance, params: GameParams, seed: u64) -> Self {
        SimConfig {
            params,
            schedule: GammaSchedule::default(),
            variant: MoveVariant::AllocateFirst,
            horizon: 2 * inst.total_alpha(),
            seed,
            record_trace: false,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Allocation,
    Distribution,
    Blocked,
}

/// One consumed step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub unit: UnitId,
    pub kind: EventKind,
    pub source: Option<UnitId>,
    pub dest: Option<UnitId>,
    /// `f64::INFINITY` for pure best response.
    pub gamma: f64,
}

impl TraceEvent {
    fn new(step: u64, unit: UnitId, outcome: Option<Move>, gamma: Gamma) -> Self {
        let gamma = match gamma {
            Gamma::Finite(g) => g,
            Gamma::Infinite => f64::INFINITY,
        };
        let (kind, source, dest) = match outcome {
            None => (EventKind::Blocked, None, None),
            Some(Move::Allocation { dest, .. }) => (EventKind::Allocation, None, Some(dest)),
            Some(Move::Distribution { source, dest, .. }) => (EventKind::Distribution, Some(source), Some(dest)),
        };
        TraceEvent {
            step,
            unit,
            kind,
            source,
            dest,
            gamma,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: AllocationState,
    pub completed: bool,
    /// Number of steps after which every atom was placed.
    pub steps_to_completion: Option<u64>,
    /// Moves that changed the state (allocations plus relocations), per unit.
    pub moves_per_unit: Vec<u64>,
    /// Distribution moves that put the atom back where it was, per unit.
    pub stays_per_unit: Vec<u64>,
    /// Activations with no available resource, per unit.
    pub blocked_per_unit: Vec<u64>,
    pub steps: u64,
    pub trace: Option<Vec<TraceEvent>>,
}

/// Activation probabilities `alpha_x / sum(alpha)`.
pub fn activation_distribution(inst: &Instance) -> Result<Vec<f64>> {
    let total = inst.total_alpha();
    if total == 0 {
        return Err(Error::DegenerateInstance);
    }
    Ok(inst.alpha().iter().map(|&a| a as f64 / total as f64).collect())
}

/// `(P_all, P_dis)` for unit `x`.
pub fn move_kind_probabilities(inst: &Instance, state: &AllocationState, x: UnitId, variant: MoveVariant) -> (f64, f64) {
    let alpha = inst.alpha()[x];
    let placed = state.allocated(x);
    if alpha == 0 || placed >= alpha {
        return (0.0, 1.0);
    }
    match variant {
        MoveVariant::Proportional => {
            let p = (alpha - placed) as f64 / alpha as f64;
            (p, 1.0 - p)
        }
        MoveVariant::AllocateFirst => (1.0, 0.0),
    }
}

/// Draws a destination for one atom of `x` by the Gibbs rule, with the atom on
/// `lifted` (if any) taken off first. `None` when nothing is available.
#[allow(clippy::too_many_arguments)]
fn choose_destination<R: Rng>(
    rng: &mut R,
    inst: &Instance,
    params: &GameParams,
    state: &AllocationState,
    x: UnitId,
    lifted: Option<UnitId>,
    gamma: Gamma,
    scratch: &mut Scratch,
) -> Option<UnitId> {
    scratch.candidates.clear();
    scratch.utilities.clear();
    for &y in inst.topology().out_neighbors(x) {
        let back = (lifted == Some(y)) as u32;
        let load = state.load(y) - back;
        if load >= inst.beta()[y] {
            continue;
        }
        let own = state.get(x, y) - back;
        let u = inst.lambda()[y] - params.k_c * (load + 1) as f64 / inst.beta()[y] as f64 + params.k_a * (own + 1) as f64;
        scratch.candidates.push(y);
        scratch.utilities.push(u);
    }
    if scratch.candidates.is_empty() {
        return None;
    }
    gibbs_weights(&scratch.utilities, gamma, &mut scratch.weights);
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &w) in scratch.weights.iter().enumerate() {
        acc += w;
        if r < acc {
            return Some(scratch.candidates[i]);
        }
    }
    // rounding: fall back to the last candidate with positive weight
    let last = scratch.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    Some(scratch.candidates[last])
}

#[derive(Debug, Default)]
struct Scratch {
    candidates: Vec<UnitId>,
    utilities: Vec<f64>,
    weights: Vec<f64>,
}

/// Allocation move for `x`: destination drawn by Gibbs over the available
/// resources. `Ok(None)` when `x` is saturated.
pub fn allocation_move<R: Rng>(
    rng: &mut R,
    inst: &Instance,
    params: &GameParams,
    state: &AllocationState,
    x: UnitId,
    gamma: Gamma,
) -> Result<Option<Move>> {
    if state.allocated(x) >= inst.alpha()[x] {
        return Err(Error::InvalidCall(format!("unit {x} has nothing left to allocate")));
    }
    let mut scratch = Scratch::default();
    Ok(choose_destination(rng, inst, params, state, x, None, gamma, &mut scratch)
        .map(|dest| Move::Allocation { unit: x, dest }))
}

fn draw_source<R: Rng>(rng: &mut R, inst: &Instance, state: &AllocationState, x: UnitId) -> UnitId {
    let mut r = rng.gen_range(0..state.allocated(x));
    for &y in inst.topology().out_neighbors(x) {
        let c = state.get(x, y);
        if r < c {
            return y;
        }
        r -= c;
    }
    unreachable!("row sum cache disagrees with entries")
}

/// Distribution move for `x`: source drawn proportionally to the atom counts,
/// destination by Gibbs at the state with that atom removed (so the source
/// itself is always a candidate).
pub fn distribution_move<R: Rng>(
    rng: &mut R,
    inst: &Instance,
    params: &GameParams,
    state: &AllocationState,
    x: UnitId,
    gamma: Gamma,
) -> Result<Move> {
    if state.allocated(x) == 0 {
        return Err(Error::InvalidCall(format!("unit {x} has no placed atom")));
    }
    let mut scratch = Scratch::default();
    let source = draw_source(rng, inst, state, x);
    let dest = choose_destination(rng, inst, params, state, x, Some(source), gamma, &mut scratch)
        .expect("lifted source is always available");
    Ok(Move::Distribution { unit: x, source, dest })
}

/// Stateful driver for one run: owns the generator and the scratch buffers.
pub struct Simulator<'a> {
    inst: &'a Instance,
    config: &'a SimConfig,
    rng: ChaCha8Rng,
    cumulative: Vec<u64>,
    lambda_max: f64,
    scratch: Scratch,
}

/// What one step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub unit: UnitId,
    /// `None` when the unit was blocked.
    pub performed: Option<Move>,
    pub gamma: Gamma,
}

impl<'a> Simulator<'a> {
    pub fn new(inst: &'a Instance, config: &'a SimConfig) -> Result<Self> {
        config.schedule.validate()?;
        let mut acc = 0u64;
        let cumulative = inst
            .alpha()
            .iter()
            .map(|&a| {
                acc += a as u64;
                acc
            })
            .collect();
        Ok(Simulator {
            inst,
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            cumulative,
            lambda_max: inst.lambda_max(),
            scratch: Scratch::default(),
        })
    }

    fn draw_unit(&mut self) -> UnitId {
        let total = *self.cumulative.last().expect("nonempty instance");
        let r = self.rng.gen_range(0..total);
        self.cumulative.partition_point(|&c| c <= r)
    }

    /// Executes step `t` on `state`. Requires `sum(alpha) > 0`.
    pub fn step(&mut self, state: &mut AllocationState, t: u64) -> StepOutcome {
        let inst = self.inst;
        let gamma = gamma_schedule_value(&self.config.schedule, t, self.lambda_max);
        let x = self.draw_unit();
        let alpha = inst.alpha()[x];
        let placed = state.allocated(x);
        let allocate = placed < alpha
            && match self.config.variant {
                MoveVariant::AllocateFirst => true,
                MoveVariant::Proportional => self.rng.gen_range(0..alpha) < alpha - placed,
            };
        let params = &self.config.params;
        let performed = if allocate {
            choose_destination(&mut self.rng, inst, params, state, x, None, gamma, &mut self.scratch).map(|dest| {
                state.inc(x, dest);
                Move::Allocation { unit: x, dest }
            })
        } else {
            let source = draw_source(&mut self.rng, inst, state, x);
            let dest = choose_destination(&mut self.rng, inst, params, state, x, Some(source), gamma, &mut self.scratch)
                .expect("lifted source is always available");
            if dest != source {
                state.dec(x, source);
                state.inc(x, dest);
            }
            Some(Move::Distribution { unit: x, source, dest })
        };
        debug_assert!(state.allocated(x) <= alpha);
        debug_assert!(performed.is_none_or(|m| state.load(m.dest()) <= inst.beta()[m.dest()]));
        StepOutcome {
            unit: x,
            performed,
            gamma,
        }
    }
}

/// Runs `config.horizon` steps from the configured initial state.
pub fn run(inst: &Instance, config: &SimConfig) -> Result<RunResult> {
    let n = inst.len();
    let mut state = match &config.initial {
        Some(s) => {
            s.validate(inst)?;
            s.clone()
        }
        None => AllocationState::empty(n),
    };
    let target = inst.total_alpha();
    let mut result = RunResult {
        final_state: AllocationState::empty(n),
        completed: false,
        steps_to_completion: None,
        moves_per_unit: vec![0; n],
        stays_per_unit: vec![0; n],
        blocked_per_unit: vec![0; n],
        steps: config.horizon,
        trace: config.record_trace.then(Vec::new),
    };
    if state.total_allocated() == target {
        result.steps_to_completion = Some(0);
    }
    if target > 0 {
        let mut sim = Simulator::new(inst, config)?;
        let mut placed = state.total_allocated();
        for t in 0..config.horizon {
            let out = sim.step(&mut state, t);
            match out.performed {
                None => result.blocked_per_unit[out.unit] += 1,
                Some(mv) if mv.relocates() => result.moves_per_unit[out.unit] += 1,
                Some(_) => result.stays_per_unit[out.unit] += 1,
            }
            if let Some(Move::Allocation { .. }) = out.performed {
                placed += 1;
                if placed == target {
                    result.steps_to_completion = Some(t + 1);
                }
            }
            if let Some(trace) = result.trace.as_mut() {
                trace.push(TraceEvent::new(t, out.unit, out.performed, out.gamma));
            }
        }
    }
    result.completed = state.is_full(inst);
    result.final_state = state;
    Ok(result)
}

pub const TRACE_HEADER: &str = "step,unit,kind,source,destination,gamma";

/// Writes trace rows as comma-separated text with [`TRACE_HEADER`]. Missing
/// source/destination fields are empty; gamma is `inf` for best response.
pub fn write_trace<W: Write>(mut out: W, events: &[TraceEvent]) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for e in events {
        let kind = match e.kind {
            EventKind::Allocation => "allocation",
            EventKind::Distribution => "distribution",
            EventKind::Blocked => "blocked",
        };
        let opt = |v: Option<UnitId>| v.map(|u| u.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{},{}", e.step, e.unit, kind, opt(e.source), opt(e.dest), e.gamma)?;
    }
    Ok(())
}
