//! Run-level performance indices.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::analysis::welfare::{welfare_ratio, OptimumTag, WelfareOptimum};
use crate::dynamics::RunResult;
use crate::error::{Error, Result};
use crate::game::{global_utility, AllocationState, GameParams};
use crate::topology::{Instance, UnitId};

/// Groups units by reliability, lowest class first.
pub fn partition_by_reliability(inst: &Instance) -> Vec<Vec<UnitId>> {
    let mut levels: Vec<f64> = inst.lambda().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
        .iter()
        .map(|&l| (0..inst.len()).filter(|&y| inst.lambda()[y] == l).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    /// Fill fraction of the class: total load over total capacity.
    pub congestion_mean: f64,
    /// Population variance of `W_y / beta_y` over the class.
    pub congestion_var: f64,
    /// Mean number of distinct users per resource of the class.
    pub d_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rho {
    pub value: f64,
    pub tag: OptimumTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub nu_moves: f64,
    pub lambda_mean: f64,
    pub lambda_var: f64,
    pub classes: Vec<ClassMetrics>,
    pub d_out: f64,
    pub global_utility: f64,
    pub rho: Option<Rho>,
}

impl MetricsReport {
    /// Flat `(key, value)` view. Class indices are 1-based (`c1_mean`, `d_in_1`, ...).
    pub fn fields(&self) -> Vec<(String, FieldValue)> {
        let mut out = vec![
            ("nu_moves".to_string(), FieldValue::Num(self.nu_moves)),
            ("lambda_mean".to_string(), FieldValue::Num(self.lambda_mean)),
            ("lambda_var".to_string(), FieldValue::Num(self.lambda_var)),
        ];
        for (i, c) in self.classes.iter().enumerate() {
            out.push((format!("c{}_mean", i + 1), FieldValue::Num(c.congestion_mean)));
            out.push((format!("c{}_var", i + 1), FieldValue::Num(c.congestion_var)));
        }
        out.push(("d_out".to_string(), FieldValue::Num(self.d_out)));
        for (i, c) in self.classes.iter().enumerate() {
            out.push((format!("d_in_{}", i + 1), FieldValue::Num(c.d_in)));
        }
        out.push(("global_utility".to_string(), FieldValue::Num(self.global_utility)));
        match self.rho {
            Some(r) => {
                out.push(("rho".to_string(), FieldValue::Num(r.value)));
                let tag = match r.tag {
                    OptimumTag::Exact => "exact",
                    OptimumTag::Surrogate => "surrogate",
                };
                out.push(("rho_tag".to_string(), FieldValue::Text(tag.to_string())));
            }
            None => {
                out.push(("rho".to_string(), FieldValue::Missing));
                out.push(("rho_tag".to_string(), FieldValue::Missing));
            }
        }
        out
    }

    /// Numeric field by key.
    pub fn get(&self, key: &str) -> Option<f64> {
        self.fields().into_iter().find(|(k, _)| k == key).and_then(|(_, v)| match v {
            FieldValue::Num(x) => Some(x),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Num(f64),
    Text(String),
    Missing,
}

impl std::fmt::Display for FieldValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldValue::Num(x) => write!(f, "{x}"),
            FieldValue::Text(s) => f.write_str(s),
            FieldValue::Missing => Ok(()),
        }
    }
}

impl Serialize for MetricsReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let fields = self.fields();
        let mut map = serializer.serialize_map(Some(fields.len()))?;
        for (k, v) in &fields {
            match v {
                FieldValue::Num(x) => map.serialize_entry(k, x)?,
                FieldValue::Text(s) => map.serialize_entry(k, s)?,
                FieldValue::Missing => map.serialize_entry(k, &Option::<f64>::None)?,
            }
        }
        map.end()
    }
}

/// Computes every index from the final state and the move counters. Averages
/// over units run over units with positive demand. Fails on incomplete runs
/// unless `allow_partial` is set.
pub fn compute_metrics(
    inst: &Instance,
    params: &GameParams,
    result: &RunResult,
    classes: &[Vec<UnitId>],
    optimum: Option<&WelfareOptimum>,
    allow_partial: bool,
) -> Result<MetricsReport> {
    if !result.completed && !allow_partial {
        return Err(Error::MetricsOnPartial);
    }
    let w = &result.final_state;
    let n = inst.len();
    let users: Vec<UnitId> = (0..n).filter(|&x| inst.alpha()[x] > 0).collect();
    let m = users.len().max(1) as f64;

    let nu_moves = users
        .iter()
        .map(|&x| result.moves_per_unit[x] as f64 / inst.alpha()[x] as f64)
        .sum::<f64>()
        / m;

    let satisfaction: Vec<f64> = users.iter().map(|&x| unit_satisfaction(inst, w, x)).collect();
    let lambda_mean = satisfaction.iter().sum::<f64>() / m;
    let lambda_var = satisfaction.iter().map(|s| (s - lambda_mean).powi(2)).sum::<f64>() / m;

    let d_out = users
        .iter()
        .map(|&x| inst.topology().out_neighbors(x).iter().filter(|&&y| w.get(x, y) > 0).count() as f64)
        .sum::<f64>()
        / m;

    let classes = classes.iter().map(|class| class_metrics(inst, w, class)).collect();

    let f = global_utility(inst, params, w);
    let rho = optimum.map(|opt| Rho {
        value: welfare_ratio(f, opt.value),
        tag: opt.tag,
    });

    Ok(MetricsReport {
        nu_moves,
        lambda_mean,
        lambda_var,
        classes,
        d_out,
        global_utility: f,
        rho,
    })
}

/// `sum_y (W_xy / alpha_x) lambda_y`.
pub fn unit_satisfaction(inst: &Instance, w: &AllocationState, x: UnitId) -> f64 {
    let alpha = inst.alpha()[x] as f64;
    inst.topology()
        .out_neighbors(x)
        .iter()
        .map(|&y| w.get(x, y) as f64 / alpha * inst.lambda()[y])
        .sum()
}

fn class_metrics(inst: &Instance, w: &AllocationState, class: &[UnitId]) -> ClassMetrics {
    let k = class.len().max(1) as f64;
    let load: u64 = class.iter().map(|&y| w.load(y) as u64).sum();
    let cap: u64 = class.iter().map(|&y| inst.beta()[y] as u64).sum();
    let congestion_mean = if cap == 0 { 0.0 } else { load as f64 / cap as f64 };
    let congestion_var = class
        .iter()
        .map(|&y| {
            let fill = if inst.beta()[y] == 0 {
                0.0
            } else {
                w.load(y) as f64 / inst.beta()[y] as f64
            };
            (fill - congestion_mean).powi(2)
        })
        .sum::<f64>()
        / k;
    let d_in = class
        .iter()
        .map(|&y| inst.topology().in_neighbors(y).iter().filter(|&&x| w.get(x, y) > 0).count() as f64)
        .sum::<f64>()
        / k;
    ClassMetrics {
        congestion_mean,
        congestion_var,
        d_in,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_complete;

    fn finished(inst: &Instance, triples: &[(UnitId, UnitId, u32)], moves: Vec<u64>) -> RunResult {
        let state = AllocationState::from_triples(inst, triples).unwrap();
        let n = inst.len();
        RunResult {
            completed: state.is_full(inst),
            final_state: state,
            steps_to_completion: Some(0),
            moves_per_unit: moves,
            stays_per_unit: vec![0; n],
            blocked_per_unit: vec![0; n],
            steps: 0,
            trace: None,
        }
    }

    #[test]
    fn one_resource_per_unit() {
        let inst = Instance::new(build_complete(4).unwrap(), vec![2; 4], vec![4; 4], vec![0.5, 0.5, 0.8, 0.8]).unwrap();
        let r = finished(&inst, &[(0, 2, 2), (1, 3, 2), (2, 3, 2), (3, 0, 2)], vec![2, 2, 3, 2]);
        let classes = partition_by_reliability(&inst);
        assert_eq!(classes, vec![vec![0, 1], vec![2, 3]]);
        let m = compute_metrics(&inst, &GameParams::new(1.0, 0.0).unwrap(), &r, &classes, None, false).unwrap();
        assert_eq!(m.d_out, 1.0);
        assert!((m.nu_moves - 9.0 / 8.0).abs() < 1e-12);
        assert!((m.lambda_mean - (0.8 * 3.0 + 0.5) / 4.0).abs() < 1e-12);
        assert!((m.classes[0].congestion_mean - 2.0 / 8.0).abs() < 1e-12);
        assert!((m.classes[1].congestion_mean - 6.0 / 8.0).abs() < 1e-12);
        // d_in: resource 0 has 1 user, 1 has 0, 2 has 1, 3 has 2
        assert_eq!(m.classes[0].d_in, 0.5);
        assert_eq!(m.classes[1].d_in, 1.5);
        let weighted: f64 = m.classes.iter().map(|c| c.congestion_mean * 8.0).sum::<f64>() / 16.0;
        assert!((weighted - 8.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn partial_run_needs_opt_in() {
        let inst = Instance::uniform(build_complete(3).unwrap(), 2, 2, 1.0).unwrap();
        let r = finished(&inst, &[(0, 1, 1)], vec![1, 0, 0]);
        let p = GameParams::new(1.0, 0.0).unwrap();
        let classes = partition_by_reliability(&inst);
        assert!(matches!(
            compute_metrics(&inst, &p, &r, &classes, None, false),
            Err(Error::MetricsOnPartial)
        ));
        assert!(compute_metrics(&inst, &p, &r, &classes, None, true).is_ok());
    }

    #[test]
    fn field_names() {
        let inst = Instance::new(build_complete(4).unwrap(), vec![2; 4], vec![4; 4], vec![0.5, 0.5, 0.8, 0.8]).unwrap();
        let r = finished(&inst, &[(0, 2, 2), (1, 3, 2), (2, 3, 2), (3, 0, 2)], vec![2; 4]);
        let classes = partition_by_reliability(&inst);
        let opt = WelfareOptimum {
            value: 1.0,
            tag: OptimumTag::Exact,
        };
        let m = compute_metrics(&inst, &GameParams::new(1.0, 0.0).unwrap(), &r, &classes, Some(&opt), false).unwrap();
        let keys: Vec<String> = m.fields().into_iter().map(|(k, _)| k).collect();
        assert_eq!(
            keys,
            [
                "nu_moves",
                "lambda_mean",
                "lambda_var",
                "c1_mean",
                "c1_var",
                "c2_mean",
                "c2_var",
                "d_out",
                "d_in_1",
                "d_in_2",
                "global_utility",
                "rho",
                "rho_tag"
            ]
        );
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.starts_with("{\"nu_moves\":"));
        assert!(json.ends_with("\"rho_tag\":\"exact\"}"));
    }
}
