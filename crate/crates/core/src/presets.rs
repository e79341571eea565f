//! Standard experiment settings: two reliability classes on 50 (or more)
//! units with demand around 45 atoms and capacity 50, and the four-unit line
//! used for the best-response deadlock.

use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::game::{AllocationState, GameParams};
use crate::io::{GeneratorKind, GeneratorSpec, InstanceSpec, PerUnit};
use crate::topology::Instance;

/// Reliability of the untrusted and trusted halves of the units.
pub const CLASS_RELIABILITY: [f64; 2] = [0.5, 0.8];
pub const STANDARD_ALPHA: u32 = 45;
pub const STANDARD_BETA: u32 = 50;
pub const STANDARD_K_C: f64 = 1.0;
pub const REGULAR_DEGREE: usize = 10;
/// Seed of the random regular graph used by the presets.
pub const GRAPH_SEED: u64 = 1;
pub const AGGREGATION_LEVELS: [f64; 3] = [0.0, 0.25, 0.45];
pub const MIXED_ALPHA_GROUPS: [u32; 5] = [35, 40, 45, 50, 55];
pub const SCALING_SIZES: [usize; 3] = [50, 100, 1000];

/// One column of a reference table: metric key and reference value.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceColumn {
    pub label: &'static str,
    pub values: &'static [(&'static str, f64)],
}

impl ReferenceColumn {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| *k == key).map(|&(_, v)| v)
    }
}

/// One experiment: instance, parameters and the values it is compared with.
#[derive(Debug, Clone)]
pub struct Preset {
    pub table: u8,
    pub instance: InstanceSpec,
    pub params: GameParams,
    pub reference: ReferenceColumn,
}

impl Preset {
    pub fn build_instance(&self) -> Result<Instance> {
        self.instance.build()
    }

    /// Standard protocol: empty start, allocate-first, default annealing,
    /// horizon `2 * sum(alpha)`.
    pub fn config(&self, inst: &Instance, seed: u64) -> SimConfig {
        SimConfig::standard(inst, self.params, seed)
    }
}

fn spec(kind: GeneratorKind, n: usize, alpha: PerUnit<u32>) -> InstanceSpec {
    let d = (kind == GeneratorKind::RandomRegular).then_some(REGULAR_DEGREE);
    InstanceSpec {
        n: None,
        edges: None,
        alpha,
        beta: PerUnit::One(STANDARD_BETA),
        lambda: PerUnit::Blocks {
            blocks: CLASS_RELIABILITY.to_vec(),
        },
        generator: Some(GeneratorSpec {
            kind,
            n,
            d,
            seed: d.map(|_| GRAPH_SEED),
        }),
    }
}

fn params(k_a: f64) -> GameParams {
    GameParams {
        k_c: STANDARD_K_C,
        k_a,
    }
}

pub const COMPLETE_GRAPH_REFERENCE: [ReferenceColumn; 3] = [
    ReferenceColumn {
        label: "k_a=0",
        values: &[
            ("nu_moves", 1.6271),
            ("lambda_mean", 0.6667),
            ("lambda_var", 6.4818e-4),
            ("c1_mean", 0.8),
            ("c1_var", 9.5680e-4),
            ("c2_mean", 1.0),
            ("c2_var", 0.0),
            ("d_out", 44.846),
            ("d_in_1", 43.928),
            ("d_in_2", 45.764),
            ("rho", 0.9787),
        ],
    },
    ReferenceColumn {
        label: "k_a=0.25",
        values: &[
            ("nu_moves", 1.3068),
            ("lambda_mean", 0.6592),
            ("lambda_var", 0.0119),
            ("c1_mean", 0.845),
            ("c1_var", 0.1149),
            ("c2_mean", 0.955),
            ("c2_var", 0.028),
            ("d_out", 9.542),
            ("d_in_1", 9.172),
            ("d_in_2", 9.912),
            ("rho", 0.6812),
        ],
    },
    ReferenceColumn {
        label: "k_a=0.45",
        values: &[
            ("nu_moves", 1.2548),
            ("lambda_mean", 0.6593),
            ("lambda_var", 0.0122),
            ("c1_mean", 0.8442),
            ("c1_var", 0.1195),
            ("c2_mean", 0.9558),
            ("c2_var", 0.0261),
            ("d_out", 9.672),
            ("d_in_1", 9.128),
            ("d_in_2", 10.216),
            ("rho", 0.6796),
        ],
    },
];

pub const REGULAR_GRAPH_REFERENCE: [ReferenceColumn; 3] = [
    ReferenceColumn {
        label: "k_a=0",
        values: &[
            ("nu_moves", 1.4187),
            ("lambda_mean", 0.6667),
            ("lambda_var", 0.0019),
            ("c1_mean", 0.8),
            ("c1_var", 0.0011),
            ("c2_mean", 1.0),
            ("c2_var", 0.0),
            ("d_out", 9.956),
            ("d_in_1", 9.924),
            ("d_in_2", 9.988),
            ("rho", 0.9784),
        ],
    },
    ReferenceColumn {
        label: "k_a=0.25",
        values: &[
            ("nu_moves", 1.2185),
            ("lambda_mean", 0.6596),
            ("lambda_var", 0.0136),
            ("c1_mean", 0.8422),
            ("c1_var", 0.1214),
            ("c2_mean", 0.9578),
            ("c2_var", 0.0261),
            ("d_out", 6.258),
            ("d_in_1", 5.94),
            ("d_in_2", 6.576),
            ("rho", 0.8872),
        ],
    },
    REGULAR_K045,
];

const REGULAR_K045: ReferenceColumn = ReferenceColumn {
    label: "k_a=0.45",
    values: &[
        ("nu_moves", 1.1714),
        ("lambda_mean", 0.6606),
        ("lambda_var", 0.0143),
        ("c1_mean", 0.8364),
        ("c1_var", 0.135),
        ("c2_mean", 0.9636),
        ("c2_var", 0.0251),
        ("d_out", 6.37),
        ("d_in_1", 6.252),
        ("d_in_2", 6.488),
        ("rho", 0.9297),
    ],
};

pub const MIXED_ALPHA_REFERENCE: ReferenceColumn = ReferenceColumn {
    label: "alpha=35..55",
    values: &[
        ("nu_moves", 1.1552),
        ("lambda_mean", 0.6613),
        ("lambda_var", 0.0138),
        ("c1_mean", 0.8387),
        ("c1_var", 0.1464),
        ("c2_mean", 0.9613),
        ("c2_var", 0.0328),
        ("d_out", 6.404),
        ("d_in_1", 6.12),
        ("d_in_2", 6.688),
    ],
};

pub const SCALING_REFERENCE: [ReferenceColumn; 3] = [
    ReferenceColumn {
        label: "n=50",
        values: &[
            ("nu_moves", 1.1714),
            ("lambda_mean", 0.6606),
            ("lambda_var", 0.0143),
            ("c1_mean", 0.8364),
            ("c1_var", 0.135),
            ("c2_mean", 0.9636),
            ("c2_var", 0.0251),
            ("d_out", 6.37),
            ("d_in_1", 6.252),
            ("d_in_2", 6.488),
        ],
    },
    ReferenceColumn {
        label: "n=100",
        values: &[
            ("nu_moves", 1.149),
            ("lambda_mean", 0.6605),
            ("lambda_var", 0.0146),
            ("c1_mean", 0.837),
            ("c1_var", 0.1262),
            ("c2_mean", 0.963),
            ("c2_var", 0.0183),
            ("d_out", 6.284),
            ("d_in_1", 5.938),
            ("d_in_2", 6.63),
        ],
    },
    ReferenceColumn {
        label: "n=1000",
        values: &[
            ("nu_moves", 1.1304),
            ("lambda_mean", 0.6566),
            ("lambda_var", 0.0114),
            ("c1_mean", 0.8604),
            ("c1_var", 0.1068),
            ("c2_mean", 0.9396),
            ("c2_var", 0.0616),
            ("d_out", 6.1902),
            ("d_in_1", 6.0004),
            ("d_in_2", 6.38),
        ],
    },
];

/// Columns of reference table `table` (1 to 4).
pub fn table(table: u8) -> Result<Vec<Preset>> {
    let alpha = || PerUnit::One(STANDARD_ALPHA);
    let presets = match table {
        1 | 2 => {
            let (kind, refs) = if table == 1 {
                (GeneratorKind::Complete, &COMPLETE_GRAPH_REFERENCE)
            } else {
                (GeneratorKind::RandomRegular, &REGULAR_GRAPH_REFERENCE)
            };
            AGGREGATION_LEVELS
                .iter()
                .zip(refs)
                .map(|(&k_a, &reference)| Preset {
                    table,
                    instance: spec(kind, 50, alpha()),
                    params: params(k_a),
                    reference,
                })
                .collect()
        }
        3 => vec![Preset {
            table,
            instance: spec(
                GeneratorKind::RandomRegular,
                50,
                PerUnit::Blocks {
                    blocks: MIXED_ALPHA_GROUPS.to_vec(),
                },
            ),
            params: params(0.45),
            reference: MIXED_ALPHA_REFERENCE,
        }],
        4 => SCALING_SIZES
            .iter()
            .zip(&SCALING_REFERENCE)
            .map(|(&n, &reference)| Preset {
                table,
                instance: spec(GeneratorKind::RandomRegular, n, alpha()),
                params: params(0.45),
                reference,
            })
            .collect(),
        other => return Err(Error::invalid(format!("no reference table {other}; expected 1 to 4"))),
    };
    Ok(presets)
}

/// Four units on a line with unit demand and capacity; unit 1 has reliability
/// 3, the others 1. Played with `k_c = 1`, `k_a = 0`.
pub fn line_deadlock_instance() -> Instance {
    let topo = crate::topology::build_line(4).expect("n = 4 is valid");
    Instance::new(topo, vec![1; 4], vec![1; 4], vec![1.0, 3.0, 1.0, 1.0]).expect("valid instance")
}

pub fn line_deadlock_params() -> GameParams {
    params(0.0)
}

/// Units 1, 2, 3 store on 0, 1, 2 respectively; unit 0 is left with its only
/// neighbor full.
pub fn line_deadlock_state(inst: &Instance) -> AllocationState {
    AllocationState::from_triples(inst, &[(1, 0, 1), (2, 1, 1), (3, 2, 1)]).expect("valid state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{check_feasible_flow, check_strict};

    #[test]
    fn table_shapes() {
        assert_eq!(table(1).unwrap().len(), 3);
        assert_eq!(table(2).unwrap().len(), 3);
        assert_eq!(table(3).unwrap().len(), 1);
        assert_eq!(table(4).unwrap().len(), 3);
        assert!(table(5).is_err());
    }

    #[test]
    fn standard_instances() {
        let p = &table(1).unwrap()[0];
        let inst = p.build_instance().unwrap();
        assert_eq!(inst.len(), 50);
        assert_eq!(inst.total_alpha(), 2250);
        assert!(check_feasible_flow(&inst).feasible);
        assert!(check_strict(&inst).feasible);
        assert_eq!(p.reference.get("lambda_mean"), Some(0.6667));
        let mixed = table(3).unwrap()[0].build_instance().unwrap();
        assert_eq!(mixed.total_alpha(), 2250);
        assert!(check_feasible_flow(&mixed).feasible);
    }

    #[test]
    fn deadlock_state_is_partial() {
        let inst = line_deadlock_instance();
        let s = line_deadlock_state(&inst);
        assert_eq!(s.total_allocated(), 3);
        assert!(!s.is_full(&inst));
        assert!(crate::game::available_resources(&inst, &s, 0).is_empty());
    }
}
