//! Circuit IR: value-controlled single-qutrit gates on numbered wires.
//!
//! Wires are 1-based. Gate order is temporal: the unitary of a circuit with
//! gates `G1..Gk` is `Gk ... G2 G1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::{
    phase_matrix, pow3, rotation_matrix, unitarity_defect, x_matrix, Axis, ComplexMatrix, Pair,
    RotationAxis, XKind, C64, ONE, ZERO,
};

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    Rotation(RotationAxis, f64),
    X(XKind),
    Phase(f64),
    Custom { matrix: ComplexMatrix, label: String },
}

impl GateKind {
    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            GateKind::Rotation(ax, t) => rotation_matrix(*ax, *t),
            GateKind::X(k) => x_matrix(*k),
            GateKind::Phase(t) => phase_matrix(*t),
            GateKind::Custom { matrix, .. } => matrix.clone(),
        }
    }

    pub fn inverse(&self) -> GateKind {
        match self {
            GateKind::Rotation(ax, t) => GateKind::Rotation(*ax, -t),
            GateKind::X(k) => GateKind::X(k.inverse()),
            GateKind::Phase(t) => GateKind::Phase(-t),
            GateKind::Custom { matrix, label } => GateKind::Custom {
                matrix: matrix.adjoint(),
                label: format!("{label}^-1"),
            },
        }
    }

    /// Sparse form used by the simulation kernel.
    pub fn op(&self) -> Op3 {
        match self {
            GateKind::X(k) => Op3::Perm([k.map(0), k.map(1), k.map(2)]),
            GateKind::Phase(t) => {
                let z = C64::from_polar(1.0, *t);
                Op3::Diag([z, z, z])
            }
            GateKind::Rotation(ax, t) if ax.axis == Axis::Z => {
                let (p, q) = ax.pair.levels();
                let mut d = [ONE; 3];
                d[p] = C64::from_polar(1.0, *t);
                d[q] = C64::from_polar(1.0, -*t);
                Op3::Diag(d)
            }
            other => Op3::dense(&other.matrix()),
        }
    }
}

/// A 3x3 operator specialised by structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op3 {
    /// `|v> -> |perm[v]>`.
    Perm([usize; 3]),
    Diag([C64; 3]),
    Dense([[C64; 3]; 3]),
}

impl Op3 {
    pub fn dense(m: &ComplexMatrix) -> Op3 {
        let mut a = [[ZERO; 3]; 3];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = m[(i, j)];
            }
        }
        Op3::Dense(a)
    }

    /// Entrywise complex conjugate (the column-side action on a vectorised density matrix).
    pub fn conj(&self) -> Op3 {
        match self {
            Op3::Perm(p) => Op3::Perm(*p),
            Op3::Diag(d) => Op3::Diag([d[0].conj(), d[1].conj(), d[2].conj()]),
            Op3::Dense(a) => {
                let mut b = *a;
                for row in b.iter_mut() {
                    for e in row.iter_mut() {
                        *e = e.conj();
                    }
                }
                Op3::Dense(b)
            }
        }
    }

    #[inline]
    fn apply(&self, v: [C64; 3]) -> [C64; 3] {
        match self {
            Op3::Perm(p) => {
                let mut o = [ZERO; 3];
                for k in 0..3 {
                    o[p[k]] = v[k];
                }
                o
            }
            Op3::Diag(d) => [d[0] * v[0], d[1] * v[1], d[2] * v[2]],
            Op3::Dense(a) => [
                a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
                a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
                a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub wire: usize,
    pub value: usize,
}

impl Control {
    pub const fn new(wire: usize, value: usize) -> Self {
        Control { wire, value }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn new(kind: GateKind, target: usize) -> Self {
        Gate { kind, target, controls: Vec::new() }
    }

    pub fn rot(axis: Axis, pair: Pair, theta: f64, target: usize) -> Self {
        Gate::new(GateKind::Rotation(RotationAxis::new(axis, pair), theta), target)
    }

    pub fn x(kind: XKind, target: usize) -> Self {
        Gate::new(GateKind::X(kind), target)
    }

    pub fn phase(theta: f64, target: usize) -> Self {
        Gate::new(GateKind::Phase(theta), target)
    }

    pub fn custom(matrix: ComplexMatrix, label: impl Into<String>, target: usize) -> Self {
        Gate::new(GateKind::Custom { matrix, label: label.into() }, target)
    }

    pub fn ctrl(mut self, wire: usize, value: usize) -> Self {
        self.controls.push(Control::new(wire, value));
        self
    }

    pub fn with_controls(mut self, controls: &[Control]) -> Self {
        self.controls.extend_from_slice(controls);
        self
    }

    pub fn inverse(&self) -> Gate {
        Gate { kind: self.kind.inverse(), target: self.target, controls: self.controls.clone() }
    }

    pub fn validate(&self, width: usize) -> Result<()> {
        let bad = |w: usize| w == 0 || w > width;
        if bad(self.target) {
            return Err(Error::InvalidWire(format!("target {} outside 1..={width}", self.target)));
        }
        for (i, c) in self.controls.iter().enumerate() {
            if bad(c.wire) {
                return Err(Error::InvalidWire(format!("control {} outside 1..={width}", c.wire)));
            }
            if c.wire == self.target {
                return Err(Error::InvalidWire(format!("control on target wire {}", c.wire)));
            }
            if c.value > 2 {
                return Err(Error::OutOfRange(format!("control value {}", c.value)));
            }
            if self.controls[..i].iter().any(|d| d.wire == c.wire) {
                return Err(Error::InvalidWire(format!("duplicate control wire {}", c.wire)));
            }
        }
        if let GateKind::Custom { matrix, label } = &self.kind {
            if matrix.shape() != (3, 3) {
                return Err(Error::DimensionMismatch { expected: 3, found: matrix.nrows() });
            }
            let defect = unitarity_defect(matrix);
            if defect > 1e-10 {
                return Err(Error::NotUnitary { defect });
            }
            if label.is_empty() || label.chars().any(char::is_whitespace) {
                return Err(Error::OutOfRange(format!("custom label {label:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateCounts {
    pub one_qutrit_rotation: usize,
    pub one_qutrit_other: usize,
    pub two_qutrit_controlled: usize,
    pub multi_controlled: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.one_qutrit_rotation + self.one_qutrit_other + self.two_qutrit_controlled + self.multi_controlled
    }
}

impl fmt::Display for GateCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rotations={} other_1q={} two_qutrit={} multi_controlled={}",
            self.one_qutrit_rotation, self.one_qutrit_other, self.two_qutrit_controlled, self.multi_controlled
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        assert!(width >= 1, "circuit width must be positive");
        Circuit { width, gates: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.width)?;
        self.gates.push(g);
        Ok(())
    }

    /// Push for builders whose wire arithmetic is correct by construction.
    pub(crate) fn add(&mut self, g: Gate) {
        debug_assert!(g.validate(self.width).is_ok(), "{g:?} invalid for width {}", self.width);
        self.gates.push(g);
    }

    /// Appends `other` (same width) after the current gates.
    pub fn append(&mut self, other: &Circuit) {
        assert_eq!(self.width, other.width, "width mismatch in append");
        self.gates.extend(other.gates.iter().cloned());
    }

    /// Appends `sub` with its wire `k` relabelled to `map[k-1]`, adding `controls`
    /// to every gate (a controlled sequence equals the sequence of controlled gates).
    pub fn append_mapped(&mut self, sub: &Circuit, map: &[usize], controls: &[Control]) {
        assert_eq!(map.len(), sub.width, "wire map length");
        for g in &sub.gates {
            let mut h = g.clone();
            h.target = map[g.target - 1];
            for c in h.controls.iter_mut() {
                c.wire = map[c.wire - 1];
            }
            h.controls.extend_from_slice(controls);
            self.add(h);
        }
    }

    pub fn from_gates(width: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(width);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }
}

fn stride(width: usize, wire: usize) -> usize {
    pow3(width - wire)
}

/// Applies `op` to `target` of a `width`-qutrit state when every control holds
/// its value. `targets` and `controls` use 1-based wires.
pub fn apply_op(state: &mut [C64], width: usize, target: usize, controls: &[Control], op: &Op3) {
    debug_assert_eq!(state.len(), pow3(width));
    let ts = stride(width, target);
    let mut base = 0;
    let mut fixed = vec![false; width + 1];
    fixed[target] = true;
    for c in controls {
        base += c.value * stride(width, c.wire);
        fixed[c.wire] = true;
    }
    let free: Vec<usize> = (1..=width).filter(|&w| !fixed[w]).map(|w| stride(width, w)).collect();
    match op {
        Op3::Perm(p) => for_each_offset(base, &free, |b| {
            let v = [state[b], state[b + ts], state[b + 2 * ts]];
            for k in 0..3 {
                state[b + p[k] * ts] = v[k];
            }
        }),
        Op3::Diag(d) => for_each_offset(base, &free, |b| {
            state[b] *= d[0];
            state[b + ts] *= d[1];
            state[b + 2 * ts] *= d[2];
        }),
        Op3::Dense(_) => for_each_offset(base, &free, |b| {
            let o = op.apply([state[b], state[b + ts], state[b + 2 * ts]]);
            state[b] = o[0];
            state[b + ts] = o[1];
            state[b + 2 * ts] = o[2];
        }),
    }
}

/// Calls `f` with `base + sum_i d_i * strides[i]` for every digit vector `d` in `{0,1,2}^k`.
/// Adjacent wires (`strides[i] == 3 * strides[i+1]`) are merged into single runs.
pub(crate) fn for_each_offset(base: usize, strides: &[usize], mut f: impl FnMut(usize)) {
    // (stride, count) runs
    let mut runs: Vec<(usize, usize)> = Vec::with_capacity(strides.len());
    for &s in strides {
        match runs.last_mut() {
            Some((st, n)) if *st == 3 * s => {
                *st = s;
                *n *= 3;
            }
            _ => runs.push((s, 3)),
        }
    }
    let Some(&(inner_stride, inner_len)) = runs.last() else {
        f(base);
        return;
    };
    let outer = &runs[..runs.len() - 1];
    let mut digits = vec![0usize; outer.len()];
    let mut off = base;
    loop {
        for i in 0..inner_len {
            f(off + i * inner_stride);
        }
        let mut i = outer.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            digits[i] += 1;
            off += outer[i].0;
            if digits[i] < outer[i].1 {
                break;
            }
            digits[i] = 0;
            off -= outer[i].1 * outer[i].0;
        }
    }
}

pub fn apply_gate(state: &mut [C64], width: usize, g: &Gate) {
    apply_op(state, width, g.target, &g.controls, &g.kind.op());
}

/// Gate-by-gate application of `c` to `psi`.
pub fn apply_state(c: &Circuit, psi: &[C64]) -> Result<Vec<C64>> {
    let dim = pow3(c.width);
    if psi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: psi.len() });
    }
    let mut s = psi.to_vec();
    for g in &c.gates {
        apply_gate(&mut s, c.width, g);
    }
    Ok(s)
}

pub fn embed_gate(width: usize, g: &Gate) -> Result<ComplexMatrix> {
    g.validate(width)?;
    let mut c = Circuit::new(width);
    c.gates.push(g.clone());
    Ok(circuit_unitary(&c))
}

/// `G_k ... G_1` as a dense matrix.
pub fn circuit_unitary(c: &Circuit) -> ComplexMatrix {
    let dim = pow3(c.width);
    let ops: Vec<Op3> = c.gates.iter().map(|g| g.kind.op()).collect();
    let mut u = ComplexMatrix::zeros(dim, dim);
    let mut col = vec![ZERO; dim];
    for j in 0..dim {
        col.iter_mut().for_each(|e| *e = ZERO);
        col[j] = ONE;
        for (g, op) in c.gates.iter().zip(&ops) {
            apply_op(&mut col, c.width, g.target, &g.controls, op);
        }
        for (i, e) in col.iter().enumerate() {
            u[(i, j)] = *e;
        }
    }
    u
}

pub fn inverse(c: &Circuit) -> Circuit {
    Circuit { width: c.width, gates: c.gates.iter().rev().map(Gate::inverse).collect() }
}

pub fn count_gates(c: &Circuit) -> GateCounts {
    let mut n = GateCounts::default();
    for g in &c.gates {
        match (g.controls.len(), &g.kind) {
            (0, GateKind::Rotation(..)) => n.one_qutrit_rotation += 1,
            (0, _) => n.one_qutrit_other += 1,
            (1, _) => n.two_qutrit_controlled += 1,
            _ => n.multi_controlled += 1,
        }
    }
    n
}

// ---------------------------------------------------------------------------
// Text format
//
//   WIDTH <n>
//   GATE rot <RX01|..|RZ12> <theta> target=<w> controls=<w:v,...>
//   GATE x <X01|X12|X02|X+1|X+2> target=<w> controls=<...>
//   GATE phase <theta> target=<w> controls=<...>
//   GATE custom <label> <re00> <im00> ... <re22> <im22> target=<w> controls=<...>
//
// Blank lines and lines starting with '#' are ignored. Angles and entries are
// printed with Rust's shortest round-trip float formatting.

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GATE ")?;
        match &self.kind {
            GateKind::Rotation(ax, t) => write!(f, "rot {ax} {t:?}")?,
            GateKind::X(k) => write!(f, "x {}", k.name())?,
            GateKind::Phase(t) => write!(f, "phase {t:?}")?,
            GateKind::Custom { matrix, label } => {
                write!(f, "custom {label}")?;
                for i in 0..3 {
                    for j in 0..3 {
                        let e = matrix[(i, j)];
                        write!(f, " {:?} {:?}", e.re, e.im)?;
                    }
                }
            }
        }
        write!(f, " target={} controls=", self.target)?;
        let cs: Vec<String> = self.controls.iter().map(|c| format!("{}:{}", c.wire, c.value)).collect();
        write!(f, "{}", cs.join(","))
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "WIDTH {}", self.width)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

fn parse_axis(s: &str) -> Option<RotationAxis> {
    let b = s.strip_prefix('R')?;
    let axis = match b.get(..1)? {
        "X" => Axis::X,
        "Y" => Axis::Y,
        "Z" => Axis::Z,
        _ => return None,
    };
    let pair = match b.get(1..)? {
        "01" => Pair::P01,
        "02" => Pair::P02,
        "12" => Pair::P12,
        _ => return None,
    };
    Some(RotationAxis::new(axis, pair))
}

fn parse_gate_line(line: &str, lineno: usize) -> Result<Gate> {
    let err = |msg: String| Error::Parse { line: lineno, msg };
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.first() != Some(&"GATE") || toks.len() < 4 {
        return Err(err(format!("expected `GATE <kind> ... target=<w> controls=<..>`, got {line:?}")));
    }
    let n = toks.len();
    let target = toks[n - 2]
        .strip_prefix("target=")
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| err(format!("bad target field {:?}", toks[n - 2])))?;
    let cfield = toks[n - 1]
        .strip_prefix("controls=")
        .ok_or_else(|| err(format!("bad controls field {:?}", toks[n - 1])))?;
    let mut controls = Vec::new();
    if !cfield.is_empty() {
        for part in cfield.split(',') {
            let (w, v) = part.split_once(':').ok_or_else(|| err(format!("bad control {part:?}")))?;
            let w = w.parse().map_err(|_| err(format!("bad control wire {w:?}")))?;
            let v = v.parse().map_err(|_| err(format!("bad control value {v:?}")))?;
            controls.push(Control::new(w, v));
        }
    }
    let body = &toks[1..n - 2];
    let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
    let kind = match (body[0], body.len()) {
        ("rot", 3) => {
            let ax = parse_axis(body[1]).ok_or_else(|| err(format!("bad rotation axis {:?}", body[1])))?;
            GateKind::Rotation(ax, num(body[2])?)
        }
        ("x", 2) => {
            let k = XKind::ALL
                .into_iter()
                .find(|k| k.name() == body[1])
                .ok_or_else(|| err(format!("bad X kind {:?}", body[1])))?;
            GateKind::X(k)
        }
        ("phase", 2) => GateKind::Phase(num(body[1])?),
        ("custom", 20) => {
            let mut m = ComplexMatrix::zeros(3, 3);
            for k in 0..9 {
                m[(k / 3, k % 3)] = C64::new(num(body[2 + 2 * k])?, num(body[3 + 2 * k])?);
            }
            GateKind::Custom { matrix: m, label: body[1].to_string() }
        }
        (k, _) => return Err(err(format!("unknown gate kind or arity: {k:?}"))),
    };
    Ok(Gate { kind, target, controls })
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut width = None;
        let mut gates = Vec::new();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(w) = line.strip_prefix("WIDTH") {
                let w: usize = w
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse { line: i + 1, msg: format!("bad width {w:?}") })?;
                if w == 0 || width.is_some() {
                    return Err(Error::Parse { line: i + 1, msg: "invalid or repeated WIDTH".into() });
                }
                width = Some(w);
                continue;
            }
            let g = parse_gate_line(line, i + 1)?;
            gates.push((i + 1, g));
        }
        let width = width.ok_or_else(|| Error::Parse { line: 0, msg: "missing WIDTH line".into() })?;
        let mut c = Circuit::new(width);
        for (line, g) in gates {
            c.push(g).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        }
        Ok(c)
    }
}
