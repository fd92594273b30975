//! Shared drivers: walk runs (pure or noisy) and gate-count tables.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{density_distribution, state_distribution, Distribution, TimeAveraged, TimeAverager};
use crate::blockdiag::{
    blockdiag_synthesize, compile_mc_x_target_first, compile_mc_x_target_last, lower_to_elementary,
    BlockDiagUnitary,
};
use crate::circuit::{apply_state, count_gates, Circuit, GateCounts};
use crate::kernel::{pow3, XKind, C64};
use crate::noise::{simulate_noisy_walk, DensityMatrix, NoiseConfig};
use crate::su3::random_su3;
use crate::walk::{build_layer, build_layer_cycle, build_layer_dihedral, initial_state, lower_layer, CoinSpec, WalkGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub graph: WalkGraph,
    pub coin: CoinSpec,
    pub coin_state: [C64; 3],
    pub vertex: usize,
    pub steps: usize,
    pub noise: NoiseConfig,
    /// Average over `t = 0..=T` instead of `t = 1..=T`.
    pub include_t0: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Distributions for `t = 0..=steps`.
    pub per_step: Vec<Distribution>,
    pub average: TimeAveraged,
    /// Largest `|tr(rho) - 1|` seen (zero for pure runs).
    pub max_trace_error: f64,
}

impl Experiment {
    /// Checks every precondition before any simulation work.
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        crate::walk::coin_matrix(&self.coin)?;
        self.noise.validate()?;
        if self.steps == 0 {
            return Err(Error::OutOfRange("steps must be positive".into()));
        }
        initial_state(&self.graph, &self.coin_state, self.vertex)?;
        Ok(())
    }

    pub fn layer(&self) -> Result<Circuit> {
        build_layer(&self.graph, &self.coin)
    }

    pub fn run(&self) -> Result<RunOutput> {
        self.run_with(|_, _| {})
    }

    /// Runs the walk, calling `observer(t, dist)` for `t = 0..=steps`.
    pub fn run_with(&self, mut observer: impl FnMut(usize, &Distribution)) -> Result<RunOutput> {
        self.validate()?;
        let g = &self.graph;
        let layer = self.layer()?;
        let psi0 = initial_state(g, &self.coin_state, self.vertex)?;
        let mut per_step = Vec::with_capacity(self.steps + 1);
        let d0 = state_distribution(&psi0, g)?;
        observer(0, &d0);
        per_step.push(d0);
        let mut max_trace_error: f64 = 0.0;
        if self.noise.is_noiseless() {
            let mut psi = psi0;
            for t in 1..=self.steps {
                psi = apply_state(&layer, &psi)?;
                let d = state_distribution(&psi, g)?;
                observer(t, &d);
                per_step.push(d);
            }
        } else {
            let rho0 = DensityMatrix::from_pure(&psi0, g.width())?;
            let mut err = None;
            simulate_noisy_walk(&layer, rho0, self.steps, &self.noise, |t, rho| {
                max_trace_error = max_trace_error.max((rho.trace() - C64::new(1.0, 0.0)).norm());
                match density_distribution(rho, g) {
                    Ok(d) => {
                        observer(t, &d);
                        per_step.push(d);
                    }
                    Err(e) => err = Some(e),
                }
            })?;
            if let Some(e) = err {
                return Err(e);
            }
        }
        let mut acc = TimeAverager::new();
        let skip = if self.include_t0 { 0 } else { 1 };
        for d in &per_step[skip..] {
            acc.push(d)?;
        }
        Ok(RunOutput { per_step, average: acc.finish()?, max_trace_error })
    }
}

/// Circuit families with gate-count bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Multi-controlled `X+1` on `n` qutrits, target last, controls on 2.
    McxTargetLast,
    /// Multi-controlled `X+1` on `n` qutrits, target first, controls on 2.
    McxTargetFirst,
    /// One dihedral layer for `N = 3^n`, Grover coin.
    Dihedral,
    /// One cycle layer for `N = 3^n` with the given liveliness, Grover coin.
    Cycle { a: usize },
    /// Random block-diagonal unitary on `n` qutrits.
    BlockDiag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRow {
    pub n: usize,
    pub counts: GateCounts,
    /// Two-qutrit bound form evaluated at `n` (without its constant).
    pub two_qutrit_form: f64,
    pub rotation_form: f64,
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::McxTargetLast => "mcx-target-last".into(),
            Family::McxTargetFirst => "mcx-target-first".into(),
            Family::Dihedral => "dihedral".into(),
            Family::Cycle { a } => format!("cycle-a{a}"),
            Family::BlockDiag => "blockdiag".into(),
        }
    }

    /// Smallest `n` the family is defined for.
    pub fn min_n(&self) -> usize {
        match self {
            Family::McxTargetLast | Family::McxTargetFirst | Family::BlockDiag => 2,
            _ => 1,
        }
    }

    /// Fully lowered circuit for size `n`.
    pub fn circuit(&self, n: usize, seed: u64) -> Result<Circuit> {
        if n < self.min_n() {
            return Err(Error::OutOfRange(format!("{} needs n >= {}", self.name(), self.min_n())));
        }
        let grover = CoinSpec::grover();
        Ok(match *self {
            Family::McxTargetLast => lower_to_elementary(&compile_mc_x_target_last(n, 2, XKind::Xplus1)?),
            Family::McxTargetFirst => lower_to_elementary(&compile_mc_x_target_first(n, 2, XKind::Xplus1)?),
            Family::Dihedral => lower_layer(&build_layer_dihedral(pow3(n), &grover)?),
            Family::Cycle { a } => lower_layer(&build_layer_cycle(pow3(n), &grover, a)?),
            Family::BlockDiag => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let blocks = (0..pow3(n - 1)).map(|_| random_su3(&mut rng)).collect();
                blockdiag_synthesize(&BlockDiagUnitary::new(blocks)?)?
            }
        })
    }

    /// Asymptotic forms `(two-qutrit, rotation)` of the published bounds.
    pub fn forms(&self, n: usize) -> (f64, f64) {
        let p = |k: usize| pow3(k) as f64;
        let nf = n as f64;
        match *self {
            Family::McxTargetLast | Family::McxTargetFirst => (4.0 * p(n - 1), 2.0 * p(n - 1)),
            Family::Dihedral => (8.0 * nf * p(n + 1) + 2.0, 4.0 * p(n + 1)),
            Family::Cycle { a } => {
                let af = a as f64;
                ((8.0 * nf + 4.0 * nf * af) * p(n), 4.0 * nf * af * p(n))
            }
            Family::BlockDiag => (2.0 * p(n + 1), p(n + 1)),
        }
    }

    pub fn count(&self, n: usize, seed: u64) -> Result<CountRow> {
        let c = self.circuit(n, seed)?;
        let (two_qutrit_form, rotation_form) = self.forms(n);
        Ok(CountRow { n, counts: count_gates(&c), two_qutrit_form, rotation_form })
    }
}

pub fn count_table(family: Family, ns: std::ops::RangeInclusive<usize>, seed: u64) -> Result<Vec<CountRow>> {
    ns.map(|n| family.count(n, seed)).collect()
}

/// `count(n+1) / count(n)` for consecutive rows, two-qutrit gates.
pub fn growth_ratios(rows: &[CountRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| w[1].counts.two_qutrit_controlled as f64 / w[0].counts.two_qutrit_controlled as f64)
        .collect()
}

/// Largest `count / form` over the rows: the fitted constant of the bound.
pub fn fitted_constant(rows: &[CountRow], rotations: bool) -> Option<f64> {
    rows.iter()
        .filter_map(|r| {
            let (c, f) = if rotations {
                (r.counts.one_qutrit_rotation as f64, r.rotation_form)
            } else {
                (r.counts.two_qutrit_controlled as f64, r.two_qutrit_form)
            };
            (f > 0.0).then_some(c / f)
        })
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
}

/// Least-squares slope of `log3(count)` against `n`.
pub fn growth_exponent(rows: &[CountRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.counts.two_qutrit_controlled > 0)
        .map(|r| (r.n as f64, (r.counts.two_qutrit_controlled as f64).log(3.0)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(num / den)
}
