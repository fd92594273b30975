//! Kraus channels and density-matrix evolution of walk layers.
//!
//! A `width`-qutrit density matrix is held as a `2*width`-qutrit vector whose
//! first `width` trits index rows. A gate `G` on wire `t` then acts as `G` on
//! wire `t` and `conj(G)` on wire `width + t`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{apply_op, for_each_offset, Circuit, Control, Gate};
use crate::kernel::{kron, pow3, x_matrix, z3_matrix, ComplexMatrix, XKind, C64, ZERO};
use crate::walk::lower_layer;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<ComplexMatrix>,
    qutrits: usize,
}

impl KrausChannel {
    /// Validates shapes and completeness `sum K^dagger K = I` within 1e-10.
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::Empty("channel without operators".into()))?;
        let d = first.nrows();
        let mut k = 0;
        while pow3(k) < d {
            k += 1;
        }
        if pow3(k) != d || k == 0 {
            return Err(Error::DimensionMismatch { expected: pow3(k.max(1)), found: d });
        }
        if let Some(bad) = operators.iter().find(|m| m.shape() != (d, d)) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.nrows() });
        }
        let ch = KrausChannel { operators, qutrits: k };
        let defect = ch.completeness_defect();
        if defect > 1e-10 {
            return Err(Error::OutOfRange(format!("Kraus completeness defect {defect:.3e}")));
        }
        Ok(ch)
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// Number of qutrits acted on.
    pub fn arity(&self) -> usize {
        self.qutrits
    }

    pub fn completeness_defect(&self) -> f64 {
        let d = pow3(self.qutrits);
        let sum = self.operators.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        (sum - ComplexMatrix::identity(d, d)).norm()
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{name} = {v} must be finite and non-negative")))
    }
}

/// Weyl operators `X+1^a Z3^b` tensored over `k` qutrits, in lexicographic order of
/// `(a1, b1, a2, b2, ...)`.
pub fn weyl_operators(k: usize) -> Vec<ComplexMatrix> {
    let x = x_matrix(XKind::Xplus1);
    let z = z3_matrix();
    let single: Vec<ComplexMatrix> = (0..9)
        .map(|i| {
            let (a, b) = (i / 3, i % 3);
            let xa = (0..a).fold(ComplexMatrix::identity(3, 3), |m, _| &x * m);
            let zb = (0..b).fold(ComplexMatrix::identity(3, 3), |m, _| &z * m);
            xa * zb
        })
        .collect();
    let mut out = vec![ComplexMatrix::identity(1, 1)];
    for _ in 0..k {
        out = out.iter().flat_map(|m| single.iter().map(move |s| kron(m, s))).collect();
    }
    out
}

/// `{sqrt(1 - 9^k p1) I} ∪ {sqrt(p1) W}` over all `9^k` Weyl operators.
pub fn depolarizing_channel(k: usize, p1: f64) -> Result<KrausChannel> {
    if k == 0 {
        return Err(Error::OutOfRange("depolarizing channel on zero qutrits".into()));
    }
    let terms = pow3(2 * k) as f64;
    if !(0.0..=1.0 / terms).contains(&p1) {
        return Err(Error::OutOfRange(format!("p1 = {p1} outside [0, 3^-{}]", 2 * k)));
    }
    let d = pow3(k);
    let id = ComplexMatrix::identity(d, d);
    if p1 == 0.0 {
        return KrausChannel::new(vec![id]);
    }
    let mut ops = vec![id * C64::new((1.0 - terms * p1).max(0.0).sqrt(), 0.0)];
    ops.extend(weyl_operators(k).into_iter().map(|w| w * C64::new(p1.sqrt(), 0.0)));
    KrausChannel::new(ops)
}

pub fn amplitude_damping_channel(r1: f64, r2: f64, t: f64) -> Result<KrausChannel> {
    check_rate("r1", r1)?;
    check_rate("r2", r2)?;
    check_rate("t", t)?;
    let (e1, e2) = ((-r1 * t).exp(), (-r2 * t).exp());
    let mut k0 = ComplexMatrix::identity(3, 3);
    k0[(1, 1)] = C64::new(e1.sqrt(), 0.0);
    k0[(2, 2)] = C64::new(e2.sqrt(), 0.0);
    let mut k1 = ComplexMatrix::zeros(3, 3);
    k1[(0, 1)] = C64::new((1.0 - e1).sqrt(), 0.0);
    let mut k2 = ComplexMatrix::zeros(3, 3);
    k2[(0, 2)] = C64::new((1.0 - e2).sqrt(), 0.0);
    KrausChannel::new(vec![k0, k1, k2])
}

pub fn phase_damping_channel(r1: f64, t: f64) -> Result<KrausChannel> {
    check_rate("r1", r1)?;
    check_rate("t", t)?;
    let e = (-r1 * t).exp();
    KrausChannel::new(vec![
        ComplexMatrix::identity(3, 3) * C64::new(e.sqrt(), 0.0),
        z3_matrix() * C64::new((1.0 - e).sqrt(), 0.0),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdleKind {
    None,
    Amplitude,
    Phase,
}

/// Which wires receive the idle channel after each layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdleScope {
    Untouched,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub gate_noise: bool,
    pub p1: f64,
    pub idle_kind: IdleKind,
    pub r1: f64,
    pub r2: f64,
    pub t_idle: f64,
    pub idle_scope: IdleScope,
    pub epsilon: Option<f64>,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::noiseless()
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        NoiseConfig {
            gate_noise: false,
            p1: 0.0,
            idle_kind: IdleKind::None,
            r1: 0.0,
            r2: 0.0,
            t_idle: 1.0,
            idle_scope: IdleScope::All,
            epsilon: None,
            seed: 0,
        }
    }

    /// Draws `p1, r1, r2` uniformly below `10^-eps` from a seeded stream. The
    /// same seed gives the same uniform fractions for every `eps`. `p1` is also
    /// capped at `1/81`, the largest value valid for two-qutrit gate noise.
    pub fn from_epsilon(eps: f64, seed: u64, gate_noise: bool, idle_kind: IdleKind) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 10f64.powf(-eps);
        let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        NoiseConfig {
            gate_noise,
            p1: u1 * scale.min(1.0 / 81.0),
            idle_kind,
            r1: u2 * scale,
            r2: u3 * scale,
            epsilon: Some(eps),
            seed,
            ..NoiseConfig::noiseless()
        }
    }

    pub fn is_noiseless(&self) -> bool {
        (!self.gate_noise || self.p1 == 0.0) && self.idle_kind == IdleKind::None
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0 / 81.0).contains(&self.p1) {
            return Err(Error::OutOfRange(format!("p1 = {} outside [0, 1/81]", self.p1)));
        }
        check_rate("r1", self.r1)?;
        check_rate("r2", self.r2)?;
        check_rate("t_idle", self.t_idle)
    }

    pub fn idle_channel(&self) -> Result<Option<KrausChannel>> {
        match self.idle_kind {
            IdleKind::None => Ok(None),
            IdleKind::Amplitude => amplitude_damping_channel(self.r1, self.r2, self.t_idle).map(Some),
            IdleKind::Phase => phase_damping_channel(self.r1, self.t_idle).map(Some),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    width: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &[C64], width: usize) -> Result<Self> {
        let d = pow3(width);
        if psi.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: psi.len() });
        }
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = psi[i] * psi[j].conj();
            }
        }
        Ok(DensityMatrix { width, data })
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        let d = m.nrows();
        let mut width = 0;
        while pow3(width) < d {
            width += 1;
        }
        if pow3(width) != d || !m.is_square() {
            return Err(Error::DimensionMismatch { expected: pow3(width), found: d });
        }
        let data = (0..d * d).map(|x| m[(x / d, x % d)]).collect();
        Ok(DensityMatrix { width, data })
    }

    pub fn maximally_mixed(width: usize) -> Self {
        let d = pow3(width);
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            data[i * d + i] = C64::new(1.0 / d as f64, 0.0);
        }
        DensityMatrix { width, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        pow3(self.width)
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    /// Real parts of the diagonal (basis-state populations).
    pub fn diagonal(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i].re).collect()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.data[i * d + j])
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.to_matrix().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `rho -> G rho G^dagger`.
    pub fn apply_gate(&mut self, g: &Gate) {
        let w = self.width;
        let op = g.kind.op();
        apply_op(&mut self.data, 2 * w, g.target, &g.controls, &op);
        let mirrored: Vec<Control> = g.controls.iter().map(|c| Control::new(c.wire + w, c.value)).collect();
        apply_op(&mut self.data, 2 * w, g.target + w, &mirrored, &op.conj());
    }

    pub fn apply_circuit(&mut self, c: &Circuit) -> Result<()> {
        if c.width() != self.width {
            return Err(Error::DimensionMismatch { expected: self.width, found: c.width() });
        }
        c.gates().iter().for_each(|g| self.apply_gate(g));
        Ok(())
    }

    /// Row offsets, column offsets and free-wire strides for a block on `wires`.
    fn block_layout(&self, wires: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let w = self.width;
        let big = 2 * w;
        let stride = |wire: usize| pow3(big - wire);
        let k = wires.len();
        let offsets = |shift: usize| -> Vec<usize> {
            (0..pow3(k))
                .map(|a| {
                    let digits = crate::kernel::trits(a, k);
                    wires.iter().zip(digits).map(|(&wr, v)| v * stride(wr + shift)).sum()
                })
                .collect()
        };
        let mut used = vec![false; big + 1];
        for &wr in wires {
            used[wr] = true;
            used[wr + w] = true;
        }
        let free = (1..=big).filter(|&x| !used[x]).map(stride).collect();
        (offsets(0), offsets(w), free)
    }

    /// Calls `f` on every `d x d` block indexed by `wires` on both sides.
    fn for_each_block(&mut self, wires: &[usize], mut f: impl FnMut(&mut [C64])) {
        let (rows, cols, free) = self.block_layout(wires);
        let d = rows.len();
        let mut block = vec![ZERO; d * d];
        let data = &mut self.data;
        for_each_offset(0, &free, |base| {
            for a in 0..d {
                for b in 0..d {
                    block[a * d + b] = data[base + rows[a] + cols[b]];
                }
            }
            f(&mut block);
            for a in 0..d {
                for b in 0..d {
                    data[base + rows[a] + cols[b]] = block[a * d + b];
                }
            }
        });
    }

    /// `rho -> rho + c (I ⊗ Tr_wires rho)`, touching only block diagonals.
    fn add_traced_identity(&mut self, wires: &[usize], c: f64) {
        let (rows, cols, free) = self.block_layout(wires);
        let diag: Vec<usize> = rows.iter().zip(&cols).map(|(r, c)| r + c).collect();
        let data = &mut self.data;
        for_each_offset(0, &free, |base| {
            let tr: C64 = diag.iter().map(|&o| data[base + o]).sum();
            let add = tr * c;
            diag.iter().for_each(|&o| data[base + o] += add);
        });
    }

    /// Depolarizes with strength `q < 1` up to the global factor `1 - q`,
    /// which the caller must apply.
    fn depolarize_lazy(&mut self, wires: &[usize], q: f64) {
        let d = pow3(wires.len()) as f64;
        self.add_traced_identity(wires, q / ((1.0 - q) * d));
    }

    fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    fn check_wires(&self, wires: &[usize]) -> Result<()> {
        for (i, &x) in wires.iter().enumerate() {
            if x == 0 || x > self.width || wires[..i].contains(&x) {
                return Err(Error::InvalidWire(format!("channel wire {x} in {wires:?}")));
            }
        }
        Ok(())
    }

    /// `rho -> sum_j K_j rho K_j^dagger` on `wires`.
    pub fn apply_channel(&mut self, ch: &KrausChannel, wires: &[usize]) -> Result<()> {
        self.check_wires(wires)?;
        if wires.len() != ch.arity() {
            return Err(Error::DimensionMismatch { expected: ch.arity(), found: wires.len() });
        }
        let d = pow3(wires.len());
        let ks: Vec<Vec<C64>> =
            ch.operators().iter().map(|m| (0..d * d).map(|x| m[(x / d, x % d)]).collect()).collect();
        let mut tmp = vec![ZERO; d * d];
        let mut acc = vec![ZERO; d * d];
        self.for_each_block(wires, |blk| {
            acc.iter_mut().for_each(|z| *z = ZERO);
            for k in &ks {
                // tmp = K B
                for a in 0..d {
                    for b in 0..d {
                        tmp[a * d + b] = (0..d).map(|c| k[a * d + c] * blk[c * d + b]).sum();
                    }
                }
                // acc += tmp K^dagger
                for a in 0..d {
                    for b in 0..d {
                        acc[a * d + b] += (0..d).map(|c| tmp[a * d + c] * k[b * d + c].conj()).sum::<C64>();
                    }
                }
            }
            blk.copy_from_slice(&acc);
        });
        Ok(())
    }

    /// Depolarizing channel on `wires` in closed form:
    /// `(1-q) rho + q (I/d ⊗ Tr_wires rho)` with `q = 9^k p1`.
    pub fn depolarize(&mut self, wires: &[usize], p1: f64) -> Result<()> {
        self.check_wires(wires)?;
        let k = wires.len();
        let q = pow3(2 * k) as f64 * p1;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::OutOfRange(format!("p1 = {p1} outside [0, 3^-{}]", 2 * k)));
        }
        if q == 0.0 {
            return Ok(());
        }
        if q == 1.0 {
            let d = pow3(k);
            self.for_each_block(wires, |blk| {
                let tr: C64 = (0..d).map(|a| blk[a * d + a]).sum();
                blk.iter_mut().for_each(|z| *z = ZERO);
                (0..d).for_each(|a| blk[a * d + a] = tr / d as f64);
            });
            return Ok(());
        }
        self.depolarize_lazy(wires, q);
        self.scale(1.0 - q);
        Ok(())
    }
}

/// Wires a gate acts on: target first, then controls.
pub fn gate_wires(g: &Gate) -> Vec<usize> {
    std::iter::once(g.target).chain(g.controls.iter().map(|c| c.wire)).collect()
}

/// Runs `steps` noisy layers starting from `rho0`. With gate noise enabled the
/// layer is first lowered to one- and two-qutrit gates, and every gate is followed
/// by depolarizing noise on its wires. After each layer the idle channel acts on
/// the wires selected by `idle_scope`. `observer` sees `(t, rho_t)` for `t = 1..=steps`.
pub fn simulate_noisy_walk(
    layer: &Circuit,
    rho0: DensityMatrix,
    steps: usize,
    noise: &NoiseConfig,
    mut observer: impl FnMut(usize, &DensityMatrix),
) -> Result<DensityMatrix> {
    noise.validate()?;
    if layer.width() != rho0.width() {
        return Err(Error::DimensionMismatch { expected: rho0.width(), found: layer.width() });
    }
    let gate_noise = noise.gate_noise && noise.p1 > 0.0;
    let circuit = if gate_noise { lower_layer(layer) } else { layer.clone() };
    let wires: Vec<Vec<usize>> = circuit.gates().iter().map(gate_wires).collect();
    if gate_noise {
        if let Some(w) = wires.iter().find(|w| pow3(2 * w.len()) as f64 * noise.p1 > 1.0) {
            return Err(Error::OutOfRange(format!("p1 = {} too large for a {}-qutrit gate", noise.p1, w.len())));
        }
    }
    let idle = noise.idle_channel()?;
    let idle_wires: Vec<usize> = match noise.idle_scope {
        IdleScope::All => (1..=layer.width()).collect(),
        IdleScope::Untouched => {
            (1..=layer.width()).filter(|x| !wires.iter().any(|w| w.contains(x))).collect()
        }
    };
    let mut rho = rho0;
    for t in 1..=steps {
        // depolarizing is applied as `(1-q)` times an unnormalized update; the
        // accumulated factor is folded back in once per layer
        let mut factor = 1.0;
        for (g, w) in circuit.gates().iter().zip(&wires) {
            rho.apply_gate(g);
            if gate_noise {
                let q = pow3(2 * w.len()) as f64 * noise.p1;
                if q < 1.0 {
                    rho.depolarize_lazy(w, q);
                    factor *= 1.0 - q;
                } else {
                    rho.depolarize(w, noise.p1)?;
                }
                if factor < 1e-150 {
                    rho.scale(factor);
                    factor = 1.0;
                }
            }
        }
        if factor != 1.0 {
            rho.scale(factor);
        }
        if let Some(ch) = &idle {
            for &x in &idle_wires {
                rho.apply_channel(ch, &[x])?;
            }
        }
        observer(t, &rho);
    }
    Ok(rho)
}

/// `|psi><psi|` convenience for a unit vector given as amplitudes.
pub fn pure(psi: &[C64]) -> Result<DensityMatrix> {
    let d = psi.len();
    let mut w = 0;
    while pow3(w) < d {
        w += 1;
    }
    DensityMatrix::from_pure(psi, w)
}
