//! Browser bindings. Each export takes plain values and returns a JSON string.
//! The `*_json` functions hold the logic so they can be tested natively.

use std::str::FromStr;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qwalk_core::circuit::count_gates;
use qwalk_core::experiment::{count_table, fitted_constant, growth_ratios, Experiment, Family};
use qwalk_core::kernel::{frobenius_distance, from_rows, unitarity_defect, C64};
use qwalk_core::noise::NoiseConfig;
use qwalk_core::su3::{decompose_u3, params_to_circuit, reconstruct_su3};
use qwalk_core::walk::{uniform_coin, CoinClass, CoinSpec, WalkGraph};

/// Largest graph and run the page accepts, to keep the tab responsive.
pub const MAX_VERTICES: usize = 243;
pub const MAX_STEPS: usize = 2000;
pub const MAX_COUNT_N: usize = 5;

type Out = Result<String, String>;

fn json<T: Serialize>(v: &T) -> Out {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Su3Report {
    alpha: f64,
    angles: Vec<(&'static str, f64)>,
    residual: f64,
    circuit: String,
}

pub fn synth_su3_json(matrix: &str) -> Out {
    let rows: Vec<Vec<C64>> = matrix
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.split_whitespace().map(|t| C64::from_str(t).map_err(|_| format!("not a complex number: {t:?}"))).collect())
        .collect::<Result<_, _>>()?;
    if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
        return Err("expected 3 rows of 3 entries".into());
    }
    let u = from_rows(&rows);
    let defect = unitarity_defect(&u);
    if defect > 1e-10 {
        return Err(format!("matrix is not unitary (defect {defect:.3e})"));
    }
    let d = decompose_u3(&u).map_err(|e| e.to_string())?;
    let p = d.su3;
    let residual = frobenius_distance(&(reconstruct_su3(&p) * C64::from_polar(1.0, d.alpha)), &u);
    let angles = vec![
        ("theta1", p.theta1),
        ("phi1", p.phi1),
        ("psi1", p.psi1),
        ("theta2", p.theta2),
        ("psi2", p.psi2),
        ("theta3", p.theta3),
        ("phi3", p.phi3),
        ("psi3", p.psi3),
    ];
    json(&Su3Report { alpha: d.alpha, angles, residual, circuit: params_to_circuit(&p, 1, 1).to_string() })
}

#[derive(Serialize)]
struct WalkReport {
    labels: Vec<String>,
    average: Vec<f64>,
    last: Vec<f64>,
    max_leaked: f64,
    gates_per_step: usize,
}

fn coin_spec(coin: &str, theta: f64) -> Result<CoinSpec, String> {
    Ok(match coin {
        "grover" => CoinSpec::grover(),
        "x" => CoinSpec::class(CoinClass::X, theta),
        "y" => CoinSpec::class(CoinClass::Y, theta),
        "z" => CoinSpec::class(CoinClass::Z, theta),
        "w" => CoinSpec::class(CoinClass::W, theta),
        _ => return Err(format!("unknown coin {coin:?}")),
    })
}

/// Noiseless walk from `start` with coin state `|0>` (`"zero"`) or the uniform superposition.
#[allow(clippy::too_many_arguments)]
pub fn walk_json(
    graph: &str,
    vertices: usize,
    liveliness: usize,
    coin: &str,
    theta: f64,
    coin_state: &str,
    start: usize,
    steps: usize,
) -> Out {
    if vertices > MAX_VERTICES || steps > MAX_STEPS {
        return Err(format!("demo limits: N <= {MAX_VERTICES}, steps <= {MAX_STEPS}"));
    }
    let g = match graph {
        "cycle" => WalkGraph::cycle(vertices, liveliness),
        "dihedral" => WalkGraph::dihedral(vertices),
        _ => return Err(format!("unknown graph {graph:?}")),
    }
    .map_err(|e| e.to_string())?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let coin_state = match coin_state {
        "zero" => [one, zero, zero],
        "uniform" => uniform_coin(),
        _ => return Err(format!("unknown coin state {coin_state:?}")),
    };
    let e = Experiment {
        graph: g,
        coin: coin_spec(coin, theta)?,
        coin_state,
        vertex: start,
        steps,
        noise: NoiseConfig::noiseless(),
        include_t0: false,
    };
    let layer = e.layer().map_err(|x| x.to_string())?;
    let run = e.run().map_err(|x| x.to_string())?;
    json(&WalkReport {
        labels: (0..g.vertex_count()).map(|v| g.vertex_label(v)).collect(),
        average: run.average.avg.probs.clone(),
        last: run.per_step.last().map(|d| d.probs.clone()).unwrap_or_default(),
        max_leaked: run.per_step.iter().map(|d| d.leaked).fold(0.0, f64::max),
        gates_per_step: count_gates(&layer).total(),
    })
}

#[derive(Serialize)]
struct CountReport {
    family: String,
    rows: Vec<CountRowOut>,
    ratios: Vec<f64>,
    fitted_two_qutrit: Option<f64>,
    fitted_rotations: Option<f64>,
}

#[derive(Serialize)]
struct CountRowOut {
    n: usize,
    two_qutrit: usize,
    rotations: usize,
}

pub fn gate_counts_json(family: &str, liveliness: usize, n_max: usize) -> Out {
    let f = match family {
        "mcx-target-last" => Family::McxTargetLast,
        "mcx-target-first" => Family::McxTargetFirst,
        "dihedral" => Family::Dihedral,
        "cycle" => Family::Cycle { a: liveliness },
        "blockdiag" => Family::BlockDiag,
        _ => return Err(format!("unknown family {family:?}")),
    };
    if n_max < f.min_n() || n_max > MAX_COUNT_N {
        return Err(format!("n must lie within {}..={MAX_COUNT_N}", f.min_n()));
    }
    let rows = count_table(f, f.min_n()..=n_max, 0).map_err(|e| e.to_string())?;
    json(&CountReport {
        family: f.name(),
        rows: rows
            .iter()
            .map(|r| CountRowOut { n: r.n, two_qutrit: r.counts.two_qutrit_controlled, rotations: r.counts.one_qutrit_rotation })
            .collect(),
        ratios: growth_ratios(&rows),
        fitted_two_qutrit: fitted_constant(&rows, false),
        fitted_rotations: fitted_constant(&rows, true),
    })
}

fn js(r: Out) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn synth_su3(matrix: &str) -> Result<String, JsError> {
    js(synth_su3_json(matrix))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn walk(
    graph: &str,
    vertices: usize,
    liveliness: usize,
    coin: &str,
    theta: f64,
    coin_state: &str,
    start: usize,
    steps: usize,
) -> Result<String, JsError> {
    js(walk_json(graph, vertices, liveliness, coin, theta, coin_state, start, steps))
}

#[wasm_bindgen]
pub fn gate_counts(family: &str, liveliness: usize, n_max: usize) -> Result<String, JsError> {
    js(gate_counts_json(family, liveliness, n_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn su3_roundtrip_and_errors() {
        let v: Value = serde_json::from_str(&synth_su3_json("0 1 0\n0 0 1\n1 0 0").unwrap()).unwrap();
        assert!(v["residual"].as_f64().unwrap() < 1e-10);
        assert!(v["circuit"].as_str().unwrap().starts_with("WIDTH 1"));
        assert!(synth_su3_json("2 0 0\n0 1 0\n0 0 1").unwrap_err().contains("not unitary"));
        assert!(synth_su3_json("1 0\n0 1").is_err());
    }

    #[test]
    fn walk_report() {
        let v: Value = serde_json::from_str(&walk_json("dihedral", 27, 0, "grover", 0.0, "zero", 27, 300).unwrap()).unwrap();
        let avg: Vec<f64> = serde_json::from_value(v["average"].clone()).unwrap();
        let top = avg.iter().enumerate().fold(0, |b, (i, p)| if *p > avg[b] { i } else { b });
        let label = v["labels"][top].as_str().unwrap();
        assert!(label == "(1,0)" || label == "(0,0)", "{label}");
        assert_eq!(v["max_leaked"].as_f64().unwrap(), 0.0);
        assert!(walk_json("torus", 3, 0, "grover", 0.0, "zero", 0, 1).is_err());
        assert!(walk_json("cycle", 3, 0, "grover", 0.0, "zero", 0, MAX_STEPS + 1).is_err());
    }

    #[test]
    fn counts_report() {
        let v: Value = serde_json::from_str(&gate_counts_json("blockdiag", 0, 3).unwrap()).unwrap();
        assert_eq!(v["rows"][0]["two_qutrit"], 36);
        assert_eq!(v["ratios"].as_array().unwrap().len(), 1);
        assert!(gate_counts_json("dihedral", 0, 6).is_err());
    }
}
