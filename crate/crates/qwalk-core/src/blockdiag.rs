//! Multi-controlled rotations, block-diagonal SU(3) synthesis and the
//! compilation of multi-controlled gates into gates with at most one control.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::circuit::{Circuit, Control, Gate, GateKind};
use crate::error::{Error, Result};
use crate::kernel::{pow3, rotation_matrix, x_matrix, Axis, ComplexMatrix, Pair, RotationAxis, XKind};
use crate::su3::{decompose_diagonal, decompose_su3, decompose_u3, Su3Params};

/// `F_n(R_a(psi_1..psi_{3^{n-1}}))`: controls on wires `1..n-1`, target `n`,
/// block `j` (base-3 value of the control wires) rotated by `angles[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MCRotation {
    pub width: usize,
    pub axis: RotationAxis,
    pub angles: Vec<f64>,
}

impl MCRotation {
    pub fn new(width: usize, axis: RotationAxis, angles: Vec<f64>) -> Result<Self> {
        if width == 0 {
            return Err(Error::OutOfRange("multi-controlled rotation needs width >= 1".into()));
        }
        if angles.len() != pow3(width - 1) {
            return Err(Error::DimensionMismatch { expected: pow3(width - 1), found: angles.len() });
        }
        Ok(MCRotation { width, axis, angles })
    }
}

pub fn mc_rotation_matrix(m: &MCRotation) -> ComplexMatrix {
    let dim = pow3(m.width);
    let mut u = ComplexMatrix::zeros(dim, dim);
    for (j, &t) in m.angles.iter().enumerate() {
        let r = rotation_matrix(m.axis, t);
        u.view_mut((3 * j, 3 * j), (3, 3)).copy_from(&r);
    }
    u
}

/// Self-inverse single-qutrit gate `K` with `K R_a(x) K = R_a(-x)`.
fn negating_gate(axis: RotationAxis) -> GateKind {
    match (axis.axis, axis.pair) {
        (Axis::X, Pair::P12) => GateKind::Rotation(RotationAxis::new(Axis::Z, Pair::P02), PI),
        (Axis::X, _) => GateKind::Rotation(RotationAxis::new(Axis::Z, Pair::P12), PI),
        (_, p) => GateKind::X(p.swap_gate()),
    }
}

/// Uniformly controlled rotation on `target`: when the wires `controls`
/// (most significant first) hold pattern `j`, rotate by `angles[j]`.
/// Emits `3^k` rotations and `2(3^k - 1)` singly-controlled gates.
pub fn uniformly_controlled_rotation(
    controls: &[usize],
    target: usize,
    axis: RotationAxis,
    angles: &[f64],
    out: &mut Vec<Gate>,
) {
    debug_assert_eq!(angles.len(), pow3(controls.len()));
    let Some((&c1, rest)) = controls.split_first() else {
        out.push(Gate::new(GateKind::Rotation(axis, angles[0]), target));
        return;
    };
    let m = angles.len() / 3;
    let (pa, pb, pc) = (&angles[..m], &angles[m..2 * m], &angles[2 * m..]);
    let theta: Vec<f64> = (0..m).map(|j| (pb[j] + pc[j]) / 2.0).collect();
    let phi: Vec<f64> = (0..m).map(|j| (pa[j] - pb[j]) / 2.0).collect();
    let gamma: Vec<f64> = (0..m).map(|j| (pa[j] - pc[j]) / 2.0).collect();
    let k = negating_gate(axis);
    let conj = |v: usize| Gate::new(k.clone(), target).ctrl(c1, v);
    out.push(conj(2));
    uniformly_controlled_rotation(rest, target, axis, &gamma, out);
    out.push(conj(2));
    out.push(conj(1));
    uniformly_controlled_rotation(rest, target, axis, &phi, out);
    out.push(conj(1));
    uniformly_controlled_rotation(rest, target, axis, &theta, out);
}

pub fn mc_rotation_expand(m: &MCRotation) -> Circuit {
    let mut gates = Vec::new();
    let controls: Vec<usize> = (1..m.width).collect();
    uniformly_controlled_rotation(&controls, m.width, m.axis, &m.angles, &mut gates);
    let mut c = Circuit::new(m.width);
    gates.into_iter().for_each(|g| c.add(g));
    c
}

/// Rotation applied only when every control holds its value.
fn single_slot_rotation(controls: &[Control], target: usize, axis: RotationAxis, theta: f64, out: &mut Vec<Gate>) {
    if controls.len() <= 1 {
        out.push(Gate::new(GateKind::Rotation(axis, theta), target).with_controls(controls));
        return;
    }
    let wires: Vec<usize> = controls.iter().map(|c| c.wire).collect();
    let slot = controls.iter().fold(0, |acc, c| acc * 3 + c.value);
    let mut angles = vec![0.0; pow3(controls.len())];
    angles[slot] = theta;
    uniformly_controlled_rotation(&wires, target, axis, &angles, out);
}

/// Global phase `e^{i theta}` applied when every control holds its value,
/// realised as a diagonal on the last control wire.
fn controlled_phase(controls: &[Control], theta: f64, out: &mut Vec<Gate>) {
    let (last, rest) = controls.split_last().expect("controlled phase needs a control");
    push_level_phase(rest, last.wire, last.value, theta, out);
}

/// `e^{i theta}` on level `v` of `wire` only, controlled by `controls`.
fn push_level_phase(controls: &[Control], wire: usize, v: usize, theta: f64, out: &mut Vec<Gate>) {
    let mut ph = [0.0; 3];
    ph[v] = theta;
    let d = decompose_diagonal(ph[0], ph[1], ph[2]);
    single_slot_rotation(controls, wire, RotationAxis::new(Axis::Z, Pair::P12), d.r12, out);
    single_slot_rotation(controls, wire, RotationAxis::new(Axis::Z, Pair::P01), d.r01, out);
    if controls.is_empty() {
        out.push(Gate::phase(d.phase, wire));
    } else {
        controlled_phase(controls, d.phase, out);
    }
}

/// Stages (temporal order) of rotations whose product is `X+1` / `X+2` exactly.
fn xplus_stages(kind: XKind) -> Option<Vec<(RotationAxis, f64)>> {
    let r = |a, p, t| (RotationAxis::new(a, p), t);
    match kind {
        XKind::Xplus1 => Some(vec![r(Axis::Y, Pair::P12, -FRAC_PI_2), r(Axis::Y, Pair::P01, -FRAC_PI_2)]),
        // inverse of the X+1 pair, also exact
        XKind::Xplus2 => Some(vec![r(Axis::Y, Pair::P01, FRAC_PI_2), r(Axis::Y, Pair::P12, FRAC_PI_2)]),
        _ => None,
    }
}

/// Rewrites one gate into gates with at most one control.
pub fn lower_gate(g: &Gate, out: &mut Vec<Gate>) {
    if g.controls.len() <= 1 {
        out.push(g.clone());
        return;
    }
    match &g.kind {
        GateKind::Rotation(ax, t) => single_slot_rotation(&g.controls, g.target, *ax, *t, out),
        GateKind::Phase(t) => controlled_phase(&g.controls, *t, out),
        GateKind::X(k) if xplus_stages(*k).is_some() => {
            for (ax, t) in xplus_stages(*k).unwrap() {
                single_slot_rotation(&g.controls, g.target, ax, t, out);
            }
        }
        other => {
            let m = match other {
                GateKind::X(k) => x_matrix(*k),
                GateKind::Custom { matrix, .. } => matrix.clone(),
                _ => unreachable!(),
            };
            let d = decompose_u3(&m).expect("gate matrices are validated as unitary");
            for (ax, t) in d.su3.rotations() {
                single_slot_rotation(&g.controls, g.target, ax, t, out);
            }
            controlled_phase(&g.controls, d.alpha, out);
        }
    }
}

/// Every gate with two or more controls rewritten into one- and two-qutrit gates.
pub fn lower_to_elementary(c: &Circuit) -> Circuit {
    let mut out = Vec::new();
    for g in c.gates() {
        lower_gate(g, &mut out);
    }
    let mut r = Circuit::new(c.width());
    out.into_iter().for_each(|g| r.add(g));
    r
}

/// Control values 0 and 1 rewritten as value-2 controls with `X+1`/`X+2`
/// conjugation of the control wire.
pub fn lower_controls(c: &Circuit) -> Circuit {
    let mut r = Circuit::new(c.width());
    for g in c.gates() {
        let (pre, post): (Vec<Gate>, Vec<Gate>) = g
            .controls
            .iter()
            .filter(|ct| ct.value != 2)
            .map(|ct| {
                // value v -> 2 needs X+(2-v); undo with its inverse
                let k = if ct.value == 0 { XKind::Xplus2 } else { XKind::Xplus1 };
                (Gate::x(k, ct.wire), Gate::x(k.inverse(), ct.wire))
            })
            .unzip();
        pre.into_iter().for_each(|x| r.add(x));
        let mut h = g.clone();
        h.controls.iter_mut().for_each(|ct| ct.value = 2);
        r.add(h);
        post.into_iter().for_each(|x| r.add(x));
    }
    r
}

/// `3^{n-1}` blocks of size 3 with determinant one.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagUnitary {
    blocks: Vec<ComplexMatrix>,
    width: usize,
}

impl BlockDiagUnitary {
    pub fn new(blocks: Vec<ComplexMatrix>) -> Result<Self> {
        let k = blocks.len();
        let mut width = 1;
        while pow3(width - 1) < k {
            width += 1;
        }
        if k == 0 || pow3(width - 1) != k {
            return Err(Error::DimensionMismatch { expected: pow3(width - 1), found: k });
        }
        for b in &blocks {
            decompose_su3(b)?;
        }
        Ok(BlockDiagUnitary { blocks, width })
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let dim = pow3(self.width);
        let mut u = ComplexMatrix::zeros(dim, dim);
        for (j, b) in self.blocks.iter().enumerate() {
            u.view_mut((3 * j, 3 * j), (3, 3)).copy_from(b);
        }
        u
    }
}

type StageFn = fn(&Su3Params) -> [(RotationAxis, f64); 3];

/// Three stages (12, 01, 02 in temporal order), each a Z, Y, Z multi-controlled
/// rotation with one angle per block, all expanded to elementary gates.
pub fn blockdiag_synthesize(u: &BlockDiagUnitary) -> Result<Circuit> {
    let params: Vec<Su3Params> = u.blocks.iter().map(decompose_su3).collect::<Result<_>>()?;
    let n = u.width;
    let controls: Vec<usize> = (1..n).collect();
    let mut gates = Vec::new();
    let stages: [StageFn; 3] = [Su3Params::stage12, Su3Params::stage01, Su3Params::stage02];
    for stage in stages {
        let per_block: Vec<[(RotationAxis, f64); 3]> = params.iter().map(stage).collect();
        for k in 0..3 {
            let axis = per_block[0][k].0;
            let angles: Vec<f64> = per_block.iter().map(|s| s[k].1).collect();
            uniformly_controlled_rotation(&controls, n, axis, &angles, &mut gates);
        }
    }
    let mut c = Circuit::new(n);
    gates.into_iter().for_each(|g| c.add(g));
    Ok(c)
}

fn check_xplus(x: XKind) -> Result<()> {
    match x {
        XKind::Xplus1 | XKind::Xplus2 => Ok(()),
        k => Err(Error::Unsupported(format!("multi-controlled {} (expected X+1 or X+2)", k.name()))),
    }
}

/// `x` on wire `n` when wires `1..n-1` all hold `a`, in gates with at most one control.
/// The rotation stages multiply to `x` exactly, so no phase compensation is needed.
pub fn compile_mc_x_target_last(n: usize, a: usize, x: XKind) -> Result<Circuit> {
    check_xplus(x)?;
    if n < 2 || a > 2 {
        return Err(Error::OutOfRange(format!("n={n}, a={a}")));
    }
    let g = Gate::x(x, n).with_controls(&(1..n).map(|w| Control::new(w, a)).collect::<Vec<_>>());
    let mut c = Circuit::new(n);
    c.add(g);
    Ok(lower_to_elementary(&c))
}

/// Qutrit SWAP restricted to levels `{p, q}`: three X_pq gates controlled on value `q`.
pub fn swap_levels_circuit(p: usize, q: usize, w1: usize, w2: usize, width: usize) -> Circuit {
    let pair = match (p.min(q), p.max(q)) {
        (0, 1) => Pair::P01,
        (0, 2) => Pair::P02,
        (1, 2) => Pair::P12,
        _ => panic!("levels {p},{q} do not form a pair"),
    };
    let x = pair.swap_gate();
    let hi = p.max(q);
    let mut c = Circuit::new(width);
    c.add(Gate::x(x, w2).ctrl(w1, hi));
    c.add(Gate::x(x, w1).ctrl(w2, hi));
    c.add(Gate::x(x, w2).ctrl(w1, hi));
    c
}

/// The two-qutrit permutation exchanging basis indices 2<->7 and 5<->6, on wires `(w1, w2)`.
pub fn p_gate_on(w1: usize, w2: usize, width: usize) -> Circuit {
    let mut c = Circuit::new(width);
    c.add(Gate::x(XKind::X01, w2).ctrl(w1, 2));
    c.add(Gate::x(XKind::X01, w1).ctrl(w2, 2));
    c.append(&swap_levels_circuit(1, 2, w1, w2, width));
    c.append(&swap_levels_circuit(0, 2, w1, w2, width));
    c
}

pub fn p_gate_circuit() -> Circuit {
    p_gate_on(1, 2, 2)
}

/// `x` on wire 1 when wires `2..n` all hold `a`, via the nested P ladder.
/// The inner gate kind equals `x` for odd `n` and its inverse for even `n`.
pub fn compile_mc_x_target_first(n: usize, a: usize, x: XKind) -> Result<Circuit> {
    check_xplus(x)?;
    if n < 2 {
        return Err(Error::OutOfRange(format!("n={n}")));
    }
    if a != 0 && a != 2 {
        return Err(Error::Unsupported(format!("target-first ladder with control value {a}")));
    }
    let inner = if n % 2 == 1 { x } else { x.inverse() };
    let mut c = Circuit::new(n);
    if a == 0 {
        (2..=n).for_each(|w| c.add(Gate::x(XKind::Xplus2, w)));
    }
    for k in 1..n {
        c.append(&p_gate_on(k, k + 1, n));
    }
    let mut mid = Circuit::new(n);
    mid.add(Gate::x(inner, n).with_controls(&(1..n).map(|w| Control::new(w, 2)).collect::<Vec<_>>()));
    c.append(&lower_to_elementary(&mid));
    for k in (1..n).rev() {
        c.append(&p_gate_on(k, k + 1, n));
    }
    if a == 0 {
        (2..=n).for_each(|w| c.add(Gate::x(XKind::Xplus1, w)));
    }
    Ok(c)
}
