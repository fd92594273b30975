//! Walk circuits on the cycle `Cay(Z_N, {1,-1})` and the dihedral graph
//! `Cay(D_N, {a,b})`, plus dense reference operators for cross-checking.
//!
//! Register layouts (wires are 1-based, wire 1 is the most significant trit):
//! * dihedral: coin, reflection, then `n` rotation trits;
//! * cycle: coin, then `n` rotation trits.
//!
//! Vertex numbering: a cycle vertex is `m`; a dihedral vertex `(s, r)` is `s*N + r`.

use std::f64::consts::PI;

use crate::blockdiag::lower_to_elementary;
use crate::circuit::{apply_state, Circuit, Control, Gate, GateKind};
use crate::kernel::{pow3, real, trits, unitarity_defect, ComplexMatrix, Pair, XKind, C64, ONE, ZERO};
use crate::su3::decompose_u3;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkGraph {
    Cycle { vertices: usize, liveliness: usize },
    Dihedral { rotations: usize },
}

/// Smallest `n >= 1` with `count <= 3^n`.
pub fn trits_for(count: usize) -> usize {
    let mut n = 1;
    while pow3(n) < count {
        n += 1;
    }
    n
}

impl WalkGraph {
    pub fn cycle(vertices: usize, liveliness: usize) -> Result<Self> {
        let g = WalkGraph::Cycle { vertices, liveliness };
        g.validate()?;
        Ok(g)
    }

    pub fn dihedral(rotations: usize) -> Result<Self> {
        let g = WalkGraph::Dihedral { rotations };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.count();
        if n < 2 {
            return Err(Error::OutOfRange(format!("graph size {n} must be at least 2")));
        }
        if let WalkGraph::Cycle { liveliness, .. } = *self {
            if liveliness > n / 2 {
                return Err(Error::OutOfRange(format!("liveliness {liveliness} exceeds floor({n}/2)")));
            }
        }
        Ok(())
    }

    /// `N`: cycle length or number of rotations.
    pub fn count(&self) -> usize {
        match *self {
            WalkGraph::Cycle { vertices, .. } => vertices,
            WalkGraph::Dihedral { rotations } => rotations,
        }
    }

    pub fn liveliness(&self) -> usize {
        match *self {
            WalkGraph::Cycle { liveliness, .. } => liveliness,
            WalkGraph::Dihedral { .. } => 0,
        }
    }

    /// Number of rotation trits.
    pub fn trits(&self) -> usize {
        trits_for(self.count())
    }

    pub fn width(&self) -> usize {
        self.layout().width
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            WalkGraph::Cycle { .. } => self.count(),
            WalkGraph::Dihedral { .. } => 2 * self.count(),
        }
    }

    pub fn is_dihedral(&self) -> bool {
        matches!(self, WalkGraph::Dihedral { .. })
    }

    pub fn layout(&self) -> WalkState {
        let n = self.trits();
        match self {
            WalkGraph::Cycle { .. } => WalkState {
                coin_wire: 1,
                reflection_wire: None,
                rotation_wires: (2..=n + 1).collect(),
                width: n + 1,
            },
            WalkGraph::Dihedral { .. } => WalkState {
                coin_wire: 1,
                reflection_wire: Some(2),
                rotation_wires: (3..=n + 2).collect(),
                width: n + 2,
            },
        }
    }

    /// Index in the dense reference space `coin ⊗ vertex`.
    pub fn reference_index(&self, coin: usize, vertex: usize) -> usize {
        coin * self.vertex_count() + vertex
    }

    /// Index of `|coin>|vertex>` in the circuit register.
    pub fn circuit_index(&self, coin: usize, vertex: usize) -> usize {
        let n = self.trits();
        let big = pow3(n);
        match self {
            WalkGraph::Cycle { .. } => coin * big + vertex,
            WalkGraph::Dihedral { rotations } => {
                let (s, r) = (vertex / rotations, vertex % rotations);
                coin * 3 * big + s * big + r
            }
        }
    }

    /// Vertex of a circuit basis state, `None` for states outside the graph.
    pub fn vertex_of(&self, index: usize) -> Option<usize> {
        let big = pow3(self.trits());
        let n = self.count();
        match self {
            WalkGraph::Cycle { .. } => {
                let r = index % big;
                (r < n).then_some(r)
            }
            WalkGraph::Dihedral { .. } => {
                let rest = index % (3 * big);
                let (s, r) = (rest / big, rest % big);
                (s < 2 && r < n).then_some(s * n + r)
            }
        }
    }

    pub fn vertex_label(&self, vertex: usize) -> String {
        match self {
            WalkGraph::Cycle { .. } => vertex.to_string(),
            WalkGraph::Dihedral { rotations } => format!("({},{})", vertex / rotations, vertex % rotations),
        }
    }
}

/// Register layout for a walk graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkState {
    pub coin_wire: usize,
    pub reflection_wire: Option<usize>,
    pub rotation_wires: Vec<usize>,
    pub width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoinClass {
    X,
    Y,
    Z,
    W,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoinSpec {
    pub class: CoinClass,
    pub theta: f64,
    pub matrix: Option<ComplexMatrix>,
}

impl CoinSpec {
    pub fn class(class: CoinClass, theta: f64) -> Self {
        CoinSpec { class, theta, matrix: None }
    }

    /// The order-3 Grover coin, the X class at `theta = pi`.
    pub fn grover() -> Self {
        CoinSpec::class(CoinClass::X, PI)
    }

    pub fn custom(matrix: ComplexMatrix) -> Self {
        CoinSpec { class: CoinClass::Custom, theta: 0.0, matrix: Some(matrix) }
    }
}

pub fn coin_matrix(spec: &CoinSpec) -> Result<ComplexMatrix> {
    let (s, c) = spec.theta.sin_cos();
    let r3 = 3f64.sqrt();
    let (d, off) = match spec.class {
        CoinClass::X | CoinClass::Z => ((2.0 * c + 1.0) / 3.0, (1.0 - c) / 3.0),
        CoinClass::Y | CoinClass::W => ((2.0 * c - 1.0) / 3.0, (-1.0 - c) / 3.0),
        CoinClass::Custom => {
            let m = spec.matrix.as_ref().ok_or_else(|| Error::Empty("custom coin without a matrix".into()))?;
            if m.shape() != (3, 3) {
                return Err(Error::DimensionMismatch { expected: 3, found: m.nrows() });
            }
            let defect = unitarity_defect(m);
            if defect > 1e-10 {
                return Err(Error::NotUnitary { defect });
            }
            return Ok(m.clone());
        }
    };
    let (p, q) = (off + s / r3, off - s / r3);
    let rows = match spec.class {
        CoinClass::X | CoinClass::Y => [[d, p, q], [q, d, p], [p, q, d]],
        _ => [[d, p, q], [p, q, d], [q, d, p]],
    };
    Ok(real(&rows))
}

fn check_liveliness(count: usize, a: usize) -> Result<()> {
    if count < 2 {
        return Err(Error::OutOfRange(format!("graph size {count} must be at least 2")));
    }
    if a > count / 2 {
        return Err(Error::OutOfRange(format!("liveliness {a} exceeds floor({count}/2)")));
    }
    Ok(())
}

/// Cycle shift on `coin ⊗ vertex` (index `l*N + m`).
pub fn shift_cycle(count: usize, a: usize) -> Result<ComplexMatrix> {
    check_liveliness(count, a)?;
    let n = count;
    let mut s = ComplexMatrix::zeros(3 * n, 3 * n);
    for m in 0..n {
        s[(m, (m + 1) % n)] = ONE;
        s[(n + (m + 1) % n, n + m)] = ONE;
        s[(2 * n + (m + a) % n, 2 * n + m)] = ONE;
    }
    Ok(s)
}

/// Dihedral shift on `coin ⊗ reflection ⊗ rotation` (index `l*2N + s*N + r`).
pub fn shift_dihedral(count: usize) -> Result<ComplexMatrix> {
    if count < 2 {
        return Err(Error::OutOfRange(format!("graph size {count} must be at least 2")));
    }
    let n = count;
    let v = 2 * n;
    let mut s = ComplexMatrix::zeros(3 * v, 3 * v);
    for r in 0..n {
        s[((r + 1) % n, r)] = ONE;
        s[(n + r, n + (r + 1) % n)] = ONE;
        s[(v + r, v + r)] = ONE;
        s[(v + n + r, v + n + r)] = ONE;
        s[(2 * v + n + r, 2 * v + r)] = ONE;
        s[(2 * v + r, 2 * v + n + r)] = ONE;
    }
    Ok(s)
}

/// One dense walk step `S (C ⊗ I)`.
pub fn reference_step_unitary(g: &WalkGraph, coin: &CoinSpec) -> Result<ComplexMatrix> {
    g.validate()?;
    let c = coin_matrix(coin)?;
    let s = match *g {
        WalkGraph::Cycle { vertices, liveliness } => shift_cycle(vertices, liveliness)?,
        WalkGraph::Dihedral { rotations } => shift_dihedral(rotations)?,
    };
    let v = g.vertex_count();
    Ok(s * c.kronecker(&ComplexMatrix::identity(v, v)))
}

/// `|r> -> |r+1 mod 3^n>` on `n` wires.
pub fn build_increment(n: usize) -> Circuit {
    ladder(n, XKind::Xplus1, 2)
}

/// `|r> -> |r-1 mod 3^n>` on `n` wires.
pub fn build_decrement(n: usize) -> Circuit {
    ladder(n, XKind::Xplus2, 0)
}

fn ladder(n: usize, kind: XKind, carry: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for j in 1..=n {
        let controls: Vec<Control> = (j + 1..=n).map(|w| Control::new(w, carry)).collect();
        c.add(Gate::x(kind, j).with_controls(&controls));
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Inc,
    Dec,
}

fn check_count(count: usize, n: usize) -> Result<()> {
    if n == 0 || count < 2 || count > pow3(n) || count < pow3(n - 1) {
        return Err(Error::OutOfRange(format!("size {count} needs 3^(n-1) <= N <= 3^n with n = {n}")));
    }
    Ok(())
}

/// Correction applied after the base-3 ladder so that the pair acts as
/// `+-1 mod N` on `0..N` and fixes `N..3^n`.
pub fn build_boundary_remap(count: usize, n: usize, dir: Direction) -> Result<Circuit> {
    check_count(count, n)?;
    let big = pow3(n);
    let mut c = Circuit::new(n);
    if count == big {
        return Ok(c);
    }
    let step = |x: usize, m: usize| match dir {
        Direction::Inc => (x + 1) % m,
        Direction::Dec => (x + m - 1) % m,
    };
    let base_inv = |y: usize| match dir {
        Direction::Inc => (y + big - 1) % big,
        Direction::Dec => (y + 1) % big,
    };
    let target = |x: usize| if x < count { step(x, count) } else { x };
    let perm: Vec<usize> = (0..big).map(|y| target(base_inv(y))).collect();

    let mut seen = vec![false; big];
    for start in 0..big {
        if seen[start] || perm[start] == start {
            continue;
        }
        let mut cyc = vec![start];
        seen[start] = true;
        let mut x = perm[start];
        while x != start {
            seen[x] = true;
            cyc.push(x);
            x = perm[x];
        }
        // pick the rotation of the cycle with the fewest Hamming steps
        let best = (0..cyc.len())
            .min_by_key(|&k| {
                let c0 = cyc[k];
                (1..cyc.len()).map(|i| 2 * hamming(c0, cyc[(k + i) % cyc.len()], n) - 1).sum::<usize>()
            })
            .unwrap();
        cyc.rotate_left(best);
        for &ci in &cyc[1..] {
            push_transposition(cyc[0], ci, n, &mut c);
        }
    }
    Ok(c)
}

fn hamming(x: usize, y: usize, n: usize) -> usize {
    trits(x, n).iter().zip(trits(y, n)).filter(|(a, b)| **a != *b).count()
}

/// Exchanges basis states `x` and `y` through a chain of Hamming-1 swaps.
fn push_transposition(x: usize, y: usize, n: usize, out: &mut Circuit) {
    let ty = trits(y, n);
    let mut cur = trits(x, n);
    let mut path = vec![cur.clone()];
    for k in 0..n {
        if cur[k] != ty[k] {
            cur[k] = ty[k];
            path.push(cur.clone());
        }
    }
    let steps: Vec<Gate> = path.windows(2).map(|w| hamming_swap(&w[0], &w[1])).collect();
    for g in &steps {
        out.add(g.clone());
    }
    for g in steps.iter().rev().skip(1) {
        out.add(g.clone());
    }
}

fn hamming_swap(a: &[usize], b: &[usize]) -> Gate {
    let k = (0..a.len()).find(|&k| a[k] != b[k]).expect("distinct states");
    let pair = match (a[k].min(b[k]), a[k].max(b[k])) {
        (0, 1) => Pair::P01,
        (0, 2) => Pair::P02,
        _ => Pair::P12,
    };
    let controls: Vec<Control> = (0..a.len()).filter(|&j| j != k).map(|j| Control::new(j + 1, a[j])).collect();
    Gate::x(pair.swap_gate(), k + 1).with_controls(&controls)
}

/// `|r> -> |r +- 1 mod N>` on `n` wires: ladder followed by its boundary remap.
pub fn build_modular_step(count: usize, n: usize, dir: Direction) -> Result<Circuit> {
    let mut c = match dir {
        Direction::Inc => build_increment(n),
        Direction::Dec => build_decrement(n),
    };
    c.append(&build_boundary_remap(count, n, dir)?);
    Ok(c)
}

/// `|r> -> |r + a mod N>`: `a` copies of the modular increment.
pub fn build_rc(count: usize, n: usize, a: usize) -> Result<Circuit> {
    let step = build_modular_step(count, n, Direction::Inc)?;
    let mut c = Circuit::new(n);
    for _ in 0..a {
        c.append(&step);
    }
    Ok(c)
}

pub fn build_layer_dihedral(count: usize, coin: &CoinSpec) -> Result<Circuit> {
    let g = WalkGraph::dihedral(count)?;
    let c = coin_matrix(coin)?;
    let n = g.trits();
    let rot = g.layout().rotation_wires;
    let mut out = Circuit::new(g.width());
    out.add(Gate::custom(c.clone(), "C", 1));
    out.add(Gate::custom(c.adjoint(), "C*", 1).ctrl(2, 2));
    out.add(Gate::x(XKind::X01, 2).ctrl(1, 2));
    let inc = build_modular_step(count, n, Direction::Inc)?;
    let dec = build_modular_step(count, n, Direction::Dec)?;
    out.append_mapped(&inc, &rot, &[Control::new(1, 0), Control::new(2, 0)]);
    out.append_mapped(&dec, &rot, &[Control::new(1, 0), Control::new(2, 1)]);
    Ok(out)
}

pub fn build_layer_cycle(count: usize, coin: &CoinSpec, a: usize) -> Result<Circuit> {
    let g = WalkGraph::cycle(count, a)?;
    let c = coin_matrix(coin)?;
    let n = g.trits();
    let rot = g.layout().rotation_wires;
    let mut out = Circuit::new(g.width());
    out.add(Gate::custom(c, "C", 1));
    out.append_mapped(&build_modular_step(count, n, Direction::Dec)?, &rot, &[Control::new(1, 0)]);
    out.append_mapped(&build_modular_step(count, n, Direction::Inc)?, &rot, &[Control::new(1, 1)]);
    out.append_mapped(&build_rc(count, n, a)?, &rot, &[Control::new(1, 2)]);
    Ok(out)
}

pub fn build_layer(g: &WalkGraph, coin: &CoinSpec) -> Result<Circuit> {
    match *g {
        WalkGraph::Cycle { vertices, liveliness } => build_layer_cycle(vertices, coin, liveliness),
        WalkGraph::Dihedral { rotations } => build_layer_dihedral(rotations, coin),
    }
}

/// Custom gates expanded into rotations and a phase, then every gate with two
/// or more controls lowered to one- and two-qutrit gates.
pub fn lower_layer(c: &Circuit) -> Circuit {
    let mut expanded = Circuit::new(c.width());
    for g in c.gates() {
        match &g.kind {
            GateKind::Custom { matrix, .. } => {
                let d = decompose_u3(matrix).expect("custom gates are validated as unitary");
                for (ax, t) in d.su3.rotations().into_iter().filter(|(_, t)| t.abs() > 1e-14) {
                    expanded.add(Gate::new(GateKind::Rotation(ax, t), g.target).with_controls(&g.controls));
                }
                if d.alpha.abs() > 1e-14 {
                    expanded.add(Gate::phase(d.alpha, g.target).with_controls(&g.controls));
                }
            }
            _ => expanded.add(g.clone()),
        }
    }
    lower_to_elementary(&expanded)
}

/// Circuit register state `|coin_amps> ⊗ |vertex>`.
pub fn initial_state(g: &WalkGraph, coin_amps: &[C64; 3], vertex: usize) -> Result<Vec<C64>> {
    if vertex >= g.vertex_count() {
        return Err(Error::OutOfRange(format!("vertex {vertex} outside 0..{}", g.vertex_count())));
    }
    let norm: f64 = coin_amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Empty("coin state is zero".into()));
    }
    let mut psi = vec![ZERO; pow3(g.width())];
    for (l, a) in coin_amps.iter().enumerate() {
        psi[g.circuit_index(l, vertex)] = a / norm;
    }
    Ok(psi)
}

/// Maps a reference-space state into the circuit register.
pub fn embed_reference(g: &WalkGraph, psi: &[C64]) -> Vec<C64> {
    let v = g.vertex_count();
    let mut out = vec![ZERO; pow3(g.width())];
    for l in 0..3 {
        for x in 0..v {
            out[g.circuit_index(l, x)] = psi[g.reference_index(l, x)];
        }
    }
    out
}

/// `|(|0>+|1>+|2>)/sqrt3>` coin at the given vertex.
pub fn uniform_coin() -> [C64; 3] {
    let a = C64::new(1.0 / 3f64.sqrt(), 0.0);
    [a; 3]
}

/// The basis permutation a circuit realises, `None` if it is not one.
pub fn basis_permutation(c: &Circuit) -> Option<Vec<usize>> {
    let dim = pow3(c.width());
    let mut out = Vec::with_capacity(dim);
    for x in 0..dim {
        let mut e = vec![ZERO; dim];
        e[x] = ONE;
        let y = apply_state(c, &e).ok()?;
        let hit = y.iter().position(|a| (a - ONE).norm() < 1e-9)?;
        let rest: f64 = y.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0;
        if rest.abs() > 1e-9 {
            return None;
        }
        out.push(hit);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_unitary;
    use crate::kernel::{frobenius_distance, from_trits, is_unitary};

    fn basis(c: &Circuit, digits: &[usize]) -> Vec<usize> {
        let p = basis_permutation(c).unwrap();
        trits(p[from_trits(digits)], c.width())
    }

    #[test]
    fn coin_examples() {
        let g = coin_matrix(&CoinSpec::grover()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { -1.0 / 3.0 } else { 2.0 / 3.0 };
                assert!((g[(i, j)] - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
        let id = coin_matrix(&CoinSpec::class(CoinClass::X, 0.0)).unwrap();
        assert!(frobenius_distance(&id, &ComplexMatrix::identity(3, 3)) < 1e-15);
        for class in [CoinClass::X, CoinClass::Y, CoinClass::Z, CoinClass::W] {
            for t in [-2.0, -0.3, PI / 2.0, 1.1, PI] {
                let m = coin_matrix(&CoinSpec::class(class, t)).unwrap();
                assert!(unitarity_defect(&m) < 1e-12, "{class:?} {t}");
                assert!(m.iter().all(|z| z.im == 0.0));
            }
        }
        let y = coin_matrix(&CoinSpec::class(CoinClass::Y, PI / 2.0)).unwrap();
        assert!((y[(0, 0)].re + 1.0 / 3.0).abs() < 1e-15);
        assert!((y[(0, 1)].re - (-1.0 / 3.0 + 1.0 / 3f64.sqrt())).abs() < 1e-15);
        let bad = CoinSpec::custom(ComplexMatrix::identity(3, 3) * C64::new(2.0, 0.0));
        assert!(matches!(coin_matrix(&bad), Err(Error::NotUnitary { .. })));
    }

    fn is_permutation(m: &ComplexMatrix) -> bool {
        let n = m.nrows();
        (0..n).all(|i| {
            let r: C64 = m.row(i).iter().sum();
            let c: C64 = m.column(i).iter().sum();
            (r - ONE).norm() < 1e-15 && (c - ONE).norm() < 1e-15
        }) && m.iter().all(|z| *z == ZERO || *z == ONE)
    }

    #[test]
    fn shift_examples() {
        let s = shift_cycle(3, 0).unwrap();
        let block = s.view((6, 6), (3, 3)).into_owned();
        assert_eq!(block, ComplexMatrix::identity(3, 3));
        let s = shift_cycle(4, 1).unwrap();
        for m in 0..4 {
            assert_eq!(s[(8 + (m + 1) % 4, 8 + m)], ONE);
        }
        assert!(is_permutation(&s));
        assert!(shift_cycle(4, 3).is_err());
        let d = shift_dihedral(5).unwrap();
        assert!(is_permutation(&d));
        assert_eq!(d.view((10, 10), (10, 10)).into_owned(), ComplexMatrix::identity(10, 10));
        for r in 0..5 {
            assert_eq!(d[(25 + r, 20 + r)], ONE);
            assert_eq!(d[(20 + r, 25 + r)], ONE);
        }
    }

    #[test]
    fn reference_step() {
        let g = WalkGraph::cycle(3, 0).unwrap();
        let u = reference_step_unitary(&g, &CoinSpec::class(CoinClass::X, 0.0)).unwrap();
        assert_eq!(u, shift_cycle(3, 0).unwrap());
        let u = reference_step_unitary(&WalkGraph::dihedral(3).unwrap(), &CoinSpec::grover()).unwrap();
        assert_eq!(u.shape(), (18, 18));
        assert!(is_unitary(&u, 1e-12));
    }

    #[test]
    fn increment_and_decrement() {
        assert_eq!(basis(&build_increment(3), &[0, 0, 2]), vec![0, 1, 0]);
        assert_eq!(basis(&build_increment(3), &[2, 2, 2]), vec![0, 0, 0]);
        assert_eq!(basis(&build_decrement(2), &[0, 0]), vec![2, 2]);
        let inc = basis_permutation(&build_increment(3)).unwrap();
        let dec = basis_permutation(&build_decrement(3)).unwrap();
        for r in 0..27 {
            assert_eq!(inc[r], (r + 1) % 27);
            assert_eq!(dec[r], (r + 26) % 27);
            assert_eq!(dec[inc[r]], r);
        }
    }

    #[test]
    fn remap_n25() {
        assert!(build_boundary_remap(27, 3, Direction::Inc).unwrap().is_empty());
        for dir in [Direction::Inc, Direction::Dec] {
            let p = basis_permutation(&build_modular_step(25, 3, dir).unwrap()).unwrap();
            assert_eq!(p[25], 25);
            assert_eq!(p[26], 26);
            for (r, &got) in p.iter().enumerate().take(25) {
                let want = if dir == Direction::Inc { (r + 1) % 25 } else { (r + 24) % 25 };
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn remap_all_sizes() {
        for n in 1..=3 {
            for count in pow3(n - 1).max(2)..=pow3(n) {
                for dir in [Direction::Inc, Direction::Dec] {
                    let p = basis_permutation(&build_modular_step(count, n, dir).unwrap()).unwrap();
                    for (r, &got) in p.iter().enumerate() {
                        let want = match (r < count, dir) {
                            (false, _) => r,
                            (true, Direction::Inc) => (r + 1) % count,
                            (true, Direction::Dec) => (r + count - 1) % count,
                        };
                        assert_eq!(got, want, "N={count} n={n} {dir:?}");
                    }
                }
            }
        }
        assert!(build_boundary_remap(8, 3, Direction::Inc).is_err());
    }

    #[test]
    fn rc_examples() {
        assert!(build_rc(9, 2, 0).unwrap().is_empty());
        let p = basis_permutation(&build_rc(9, 2, 2).unwrap()).unwrap();
        assert!((0..9).all(|r| p[r] == (r + 2) % 9));
        assert_eq!(build_rc(27, 3, 1).unwrap(), build_increment(3));
    }

    fn run(c: &Circuit, psi: Vec<C64>, steps: usize) -> Vec<C64> {
        (0..steps).fold(psi, |s, _| apply_state(c, &s).unwrap())
    }

    fn amp(psi: &[C64], digits: &[usize]) -> C64 {
        psi[from_trits(digits)]
    }

    #[test]
    fn dihedral_worked_examples() {
        let coin = CoinSpec::grover();
        let c = coin_matrix(&coin).unwrap();
        let cc = |i: usize, j: usize| c[(i - 1, j - 1)];
        let g = WalkGraph::dihedral(27).unwrap();
        let layer = build_layer_dihedral(27, &coin).unwrap();
        let psi0 = initial_state(&g, &[ONE, ZERO, ZERO], 0).unwrap();
        let psi1 = run(&layer, psi0.clone(), 1);
        let mut want = vec![ZERO; 243];
        want[from_trits(&[0, 0, 0, 0, 1])] = cc(1, 1);
        want[from_trits(&[1, 0, 0, 0, 0])] = cc(2, 1);
        want[from_trits(&[2, 1, 0, 0, 0])] = cc(3, 1);
        assert!(psi1.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-12));
        let psi2 = run(&layer, psi0.clone(), 2);
        let p00: f64 = (0..3).map(|l| amp(&psi2, &[l, 0, 0, 0, 0]).norm_sqr()).sum();
        let expect = (cc(2, 2) * cc(2, 1)).norm_sqr() + (cc(3, 1) * cc(3, 3)).norm_sqr();
        assert!((p00 - expect).abs() < 1e-12);

        // N = 25: the decrement of 0 lands on 24 = |2,2,0>
        let layer = build_layer_dihedral(25, &coin).unwrap();
        let g = WalkGraph::dihedral(25).unwrap();
        let psi2 = run(&layer, initial_state(&g, &[ONE, ZERO, ZERO], 0).unwrap(), 2);
        let terms = [
            ([0, 0, 0, 0, 2], cc(1, 1) * cc(1, 1) + ZERO),
            ([1, 0, 0, 0, 1], cc(1, 1) * cc(2, 1)),
            ([2, 1, 0, 0, 1], cc(1, 1) * cc(3, 1)),
            ([0, 0, 0, 0, 1], cc(1, 2) * cc(2, 1)),
            ([1, 0, 0, 0, 0], cc(2, 2) * cc(2, 1)),
            ([2, 1, 0, 0, 0], cc(3, 2) * cc(2, 1)),
            ([0, 1, 2, 2, 0], cc(3, 1) * cc(1, 3)),
            ([1, 1, 0, 0, 0], cc(3, 1) * cc(2, 3)),
            ([2, 0, 0, 0, 0], cc(3, 1) * cc(3, 3)),
        ];
        let mut want = vec![ZERO; 243];
        for (d, a) in terms {
            want[from_trits(&d)] += a;
        }
        assert!(psi2.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn reflection_two_is_fixed() {
        for count in [3, 7, 9] {
            let layer = build_layer_dihedral(count, &CoinSpec::class(CoinClass::Z, 0.4)).unwrap();
            let w = layer.width();
            let big = pow3(w - 2);
            for l in 0..3 {
                for r in 0..big {
                    let x = l * 3 * big + 2 * big + r;
                    let mut e = vec![ZERO; pow3(w)];
                    e[x] = ONE;
                    let y = apply_state(&layer, &e).unwrap();
                    assert!(y.iter().enumerate().all(|(i, a)| (a - e[i]).norm() < 1e-12));
                }
            }
        }
    }

    fn compare_with_reference(g: WalkGraph, coin: &CoinSpec, steps: usize) {
        let layer = build_layer(&g, coin).unwrap();
        let u = reference_step_unitary(&g, coin).unwrap();
        let v = g.vertex_count();
        let mut r = nalgebra::DVector::from_element(3 * v, ZERO);
        r[g.reference_index(0, 0)] = ONE;
        let mut psi = embed_reference(&g, r.as_slice());
        for _ in 0..steps {
            r = &u * r;
            psi = apply_state(&layer, &psi).unwrap();
            let want = embed_reference(&g, r.as_slice());
            let d: f64 = psi.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(d < 1e-10, "{g:?}: {d}");
        }
    }

    #[test]
    fn layers_match_reference() {
        for count in [2, 3, 5, 9, 10] {
            compare_with_reference(WalkGraph::dihedral(count).unwrap(), &CoinSpec::grover(), 12);
            for a in 0..=count / 2 {
                compare_with_reference(WalkGraph::cycle(count, a).unwrap(), &CoinSpec::class(CoinClass::W, 0.9), 12);
            }
        }
    }

    #[test]
    fn cycle_coin_two_branch() {
        let layer = build_layer_cycle(9, &CoinSpec::class(CoinClass::X, 0.0), 3).unwrap();
        let p = basis_permutation(&layer).unwrap();
        for r in 0..9 {
            assert_eq!(p[18 + r], 18 + (r + 3) % 9);
        }
        let layer = build_layer_cycle(27, &CoinSpec::class(CoinClass::X, 0.0), 0).unwrap();
        let p = basis_permutation(&layer).unwrap();
        assert!((0..27).all(|r| p[54 + r] == 54 + r));
    }

    #[test]
    fn lowered_layers_match() {
        for (g, coin) in [
            (WalkGraph::dihedral(3).unwrap(), CoinSpec::grover()),
            (WalkGraph::dihedral(2).unwrap(), CoinSpec::class(CoinClass::Y, 0.7)),
            (WalkGraph::cycle(9, 2).unwrap(), CoinSpec::class(CoinClass::Z, -1.3)),
            (WalkGraph::cycle(7, 3).unwrap(), CoinSpec::grover()),
        ] {
            let layer = build_layer(&g, &coin).unwrap();
            let low = lower_layer(&layer);
            assert!(low.gates().iter().all(|x| x.controls.len() <= 1));
            let d = frobenius_distance(&circuit_unitary(&layer), &circuit_unitary(&low));
            assert!(d < 1e-9, "{g:?}: {d}");
        }
    }
}
