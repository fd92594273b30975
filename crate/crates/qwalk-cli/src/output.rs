//! Walk CSV files and atomic writes.
//!
//! A walk CSV starts with `# key = value` metadata lines, then the header
//! `t,vertex,probability,leaked`. Rows with `t = avg` hold the time average.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qwalk_core::analysis::{Distribution, DEFAULT_KL_FLOOR};
use qwalk_core::experiment::{Experiment, RunOutput};
use qwalk_core::noise::{IdleKind, IdleScope};
use qwalk_core::walk::{coin_matrix, WalkGraph};

pub const HEADER: [&str; 4] = ["t", "vertex", "probability", "leaked"];
pub const AVERAGE_TAG: &str = "avg";

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: String,
    vertex: String,
    probability: f64,
    leaked: f64,
}

fn idle_name(k: IdleKind) -> &'static str {
    match k {
        IdleKind::None => "none",
        IdleKind::Amplitude => "amplitude",
        IdleKind::Phase => "phase",
    }
}

/// Every input that shapes the numbers, in a fixed order.
pub fn metadata(e: &Experiment) -> Vec<(String, String)> {
    let mut m: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| m.push((k.to_string(), v));
    put("format", "qwalk-walk-1".into());
    match &e.graph {
        WalkGraph::Cycle { vertices, liveliness } => {
            put("graph", "cycle".into());
            put("vertices", vertices.to_string());
            put("liveliness", liveliness.to_string());
        }
        WalkGraph::Dihedral { rotations } => {
            put("graph", "dihedral".into());
            put("vertices", rotations.to_string());
        }
    }
    put("coin_class", format!("{:?}", e.coin.class).to_lowercase());
    put("coin_theta", e.coin.theta.to_string());
    if let Ok(c) = coin_matrix(&e.coin) {
        let entries: Vec<String> = c.transpose().iter().map(|z| format!("{}{:+}i", z.re, z.im)).collect();
        put("coin_matrix", entries.join(" "));
    }
    let amps: Vec<String> = e.coin_state.iter().map(|z| format!("{}{:+}i", z.re, z.im)).collect();
    put("coin_state", amps.join(" "));
    put("start_vertex", e.graph.vertex_label(e.vertex));
    put("steps", e.steps.to_string());
    put("average", if e.include_t0 { "t=0..T" } else { "t=1..T" }.into());
    let n = &e.noise;
    put("seed", n.seed.to_string());
    put("gate_noise", n.gate_noise.to_string());
    put("idle_kind", idle_name(n.idle_kind).into());
    put("idle_scope", if n.idle_scope == IdleScope::All { "all" } else { "untouched" }.into());
    put("epsilon", n.epsilon.map_or("none".into(), |x| x.to_string()));
    put("p1", n.p1.to_string());
    put("r1", n.r1.to_string());
    put("r2", n.r2.to_string());
    put("t_idle", n.t_idle.to_string());
    put("kl_floor", DEFAULT_KL_FLOOR.to_string());
    put("leaked", "excluded and renormalized before KL and TVD".into());
    m
}

/// Serializes a run. Identical inputs give byte-identical output.
pub fn walk_csv(e: &Experiment, run: &RunOutput) -> Result<String> {
    let mut out = String::new();
    for (k, v) in metadata(e) {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut push = |t: String, d: &Distribution| -> Result<()> {
        for (v, p) in d.probs.iter().enumerate() {
            // rounding can leave a certain outcome at 1 + 2^-52
            let probability = p.clamp(0.0, 1.0);
            w.serialize(Row { t: t.clone(), vertex: e.graph.vertex_label(v), probability, leaked: d.leaked.clamp(0.0, 1.0) })?;
        }
        Ok(())
    };
    for (t, d) in run.per_step.iter().enumerate() {
        push(t.to_string(), d)?;
    }
    push(AVERAGE_TAG.into(), &run.average.avg)?;
    out.push_str(std::str::from_utf8(&w.into_inner()?)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTable {
    pub meta: BTreeMap<String, String>,
    /// Distributions keyed by the `t` column, in file order.
    pub steps: Vec<(String, Vec<String>, Distribution)>,
}

impl WalkTable {
    /// The `avg` rows, or the last step when a file has none.
    pub fn summary(&self) -> Result<(&[String], &Distribution)> {
        let (_, labels, d) = self
            .steps
            .iter()
            .find(|(t, _, _)| t == AVERAGE_TAG)
            .or_else(|| self.steps.last())
            .context("no rows")?;
        Ok((labels, d))
    }
}

pub fn read_walk_csv(text: &str) -> Result<WalkTable> {
    let mut meta = BTreeMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').split_once('=') {
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        bail!("expected header {:?}, found {:?}", HEADER.join(","), header.join(","));
    }
    let mut steps: Vec<(String, Vec<String>, Distribution)> = Vec::new();
    for (i, rec) in r.deserialize::<Row>().enumerate() {
        let row = rec.with_context(|| format!("data row {}", i + 1))?;
        if !(0.0..=1.0).contains(&row.probability) {
            bail!("data row {}: probability {} outside [0, 1]", i + 1, row.probability);
        }
        match steps.last_mut() {
            Some((t, labels, d)) if *t == row.t => {
                labels.push(row.vertex);
                d.probs.push(row.probability);
            }
            _ => {
                if steps.iter().any(|(t, _, _)| *t == row.t) {
                    bail!("data row {}: rows for t = {} are not contiguous", i + 1, row.t);
                }
                steps.push((row.t, vec![row.vertex], Distribution::new(vec![row.probability], row.leaked)));
            }
        }
    }
    if steps.is_empty() {
        bail!("no data rows");
    }
    Ok(WalkTable { meta, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn reads_hand_built_files() {
        let t = read_walk_csv("# graph = cycle\nt,vertex,probability,leaked\n0,0,1,0\n0,1,0,0\n").unwrap();
        assert_eq!(t.meta["graph"], "cycle");
        let (labels, d) = t.summary().unwrap();
        assert_eq!(labels, ["0", "1"]);
        assert_eq!(d.probs, vec![1.0, 0.0]);
        assert!(read_walk_csv("a,b\n1,2\n").is_err());
        assert!(read_walk_csv("t,vertex,probability,leaked\n0,0,1.5,0\n").is_err());
        assert!(read_walk_csv("t,vertex,probability,leaked\n0,0,1,0\n1,0,1,0\n0,1,0,0\n").is_err());
    }
}
