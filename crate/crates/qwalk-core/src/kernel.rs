//! Dense complex matrices and the elementary single-qutrit gates.
//!
//! Basis ordering for an `n`-qutrit register: the index of `|q1 q2 .. qn>` is
//! `sum_j q_j * 3^(n-j)`, so wire 1 is the most significant trit.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Two-level subspace a rotation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pair {
    P01,
    P02,
    P12,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::P01, Pair::P02, Pair::P12];

    /// The two basis levels `(p, q)` with `p < q`.
    pub fn levels(self) -> (usize, usize) {
        match self {
            Pair::P01 => (0, 1),
            Pair::P02 => (0, 2),
            Pair::P12 => (1, 2),
        }
    }

    /// The transposition gate exchanging the two levels.
    pub fn swap_gate(self) -> XKind {
        match self {
            Pair::P01 => XKind::X01,
            Pair::P02 => XKind::X02,
            Pair::P12 => XKind::X12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RotationAxis {
    pub axis: Axis,
    pub pair: Pair,
}

impl RotationAxis {
    pub const fn new(axis: Axis, pair: Pair) -> Self {
        RotationAxis { axis, pair }
    }

    pub fn all() -> impl Iterator<Item = RotationAxis> {
        [Axis::X, Axis::Y, Axis::Z]
            .into_iter()
            .flat_map(|a| Pair::ALL.into_iter().map(move |p| RotationAxis::new(a, p)))
    }
}

impl fmt::Display for RotationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.axis {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        };
        let p = match self.pair {
            Pair::P01 => "01",
            Pair::P02 => "02",
            Pair::P12 => "12",
        };
        write!(f, "R{a}{p}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XKind {
    X01,
    X12,
    X02,
    Xplus1,
    Xplus2,
}

impl XKind {
    pub const ALL: [XKind; 5] = [XKind::X01, XKind::X12, XKind::X02, XKind::Xplus1, XKind::Xplus2];

    /// Image of basis level `v`.
    pub fn map(self, v: usize) -> usize {
        match self {
            XKind::X01 => [1, 0, 2][v],
            XKind::X12 => [0, 2, 1][v],
            XKind::X02 => [2, 1, 0][v],
            XKind::Xplus1 => (v + 1) % 3,
            XKind::Xplus2 => (v + 2) % 3,
        }
    }

    pub fn inverse(self) -> XKind {
        match self {
            XKind::Xplus1 => XKind::Xplus2,
            XKind::Xplus2 => XKind::Xplus1,
            k => k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            XKind::X01 => "X01",
            XKind::X12 => "X12",
            XKind::X02 => "X02",
            XKind::Xplus1 => "X+1",
            XKind::Xplus2 => "X+2",
        }
    }
}

pub fn rotation_matrix(ax: RotationAxis, theta: f64) -> ComplexMatrix {
    let (p, q) = ax.pair.levels();
    let (s, c) = theta.sin_cos();
    let mut m = ComplexMatrix::identity(3, 3);
    match ax.axis {
        Axis::X => {
            m[(p, p)] = C64::new(c, 0.0);
            m[(q, q)] = C64::new(c, 0.0);
            m[(p, q)] = C64::new(0.0, s);
            m[(q, p)] = C64::new(0.0, s);
        }
        Axis::Y => {
            m[(p, p)] = C64::new(c, 0.0);
            m[(q, q)] = C64::new(c, 0.0);
            m[(p, q)] = C64::new(s, 0.0);
            m[(q, p)] = C64::new(-s, 0.0);
        }
        Axis::Z => {
            m[(p, p)] = C64::new(c, s);
            m[(q, q)] = C64::new(c, -s);
        }
    }
    m
}

pub fn x_matrix(kind: XKind) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3, 3);
    for v in 0..3 {
        m[(kind.map(v), v)] = ONE;
    }
    m
}

/// `S(theta) = e^{i theta} I`.
pub fn phase_matrix(theta: f64) -> ComplexMatrix {
    ComplexMatrix::from_diagonal_element(3, 3, C64::from_polar(1.0, theta))
}

/// `Z3 = diag(1, w, w^2)` with `w = e^{2 pi i / 3}`.
pub fn z3_matrix() -> ComplexMatrix {
    let w = |k: f64| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k / 3.0);
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, w(1.0), w(2.0)]))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `||m m^dagger - I||_F <= tol`. Panics on non-square input.
pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    unitarity_defect(m) <= tol
}

pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    assert!(m.is_square(), "unitarity check on a {}x{} matrix", m.nrows(), m.ncols());
    let n = m.nrows();
    (m * m.adjoint() - ComplexMatrix::identity(n, n)).norm()
}

/// Frobenius norm of `a - b`. Panics on shape mismatch.
pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in frobenius_distance");
    (a - b).norm()
}

pub fn det(m: &ComplexMatrix) -> C64 {
    m.clone().determinant()
}

/// Builds a matrix from row-major nested arrays of `(re, im)` pairs.
pub fn from_rows(rows: &[Vec<C64>]) -> ComplexMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    ComplexMatrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn real(m: &[[f64; 3]; 3]) -> ComplexMatrix {
    ComplexMatrix::from_fn(3, 3, |i, j| C64::new(m[i][j], 0.0))
}

/// Digits of `index` in base 3, most significant first.
pub fn trits(index: usize, width: usize) -> Vec<usize> {
    let mut out = vec![0; width];
    let mut x = index;
    for k in (0..width).rev() {
        out[k] = x % 3;
        x /= 3;
    }
    out
}

pub fn from_trits(digits: &[usize]) -> usize {
    digits.iter().fold(0, |acc, &d| acc * 3 + d)
}

pub fn pow3(n: usize) -> usize {
    3usize.pow(n as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        frobenius_distance(a, b) <= tol
    }

    #[test]
    fn y01_zero_is_identity() {
        let m = rotation_matrix(RotationAxis::new(Axis::Y, Pair::P01), 0.0);
        assert!(close(&m, &ComplexMatrix::identity(3, 3), 1e-15));
    }

    #[test]
    fn z02_is_diagonal_with_middle_one() {
        let t = 0.37;
        let m = rotation_matrix(RotationAxis::new(Axis::Z, Pair::P02), t);
        let want = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from_polar(1.0, t),
            ONE,
            C64::from_polar(1.0, -t),
        ]));
        assert!(close(&m, &want, 1e-15));
    }

    #[test]
    fn y01_quarter_turn() {
        let m = rotation_matrix(RotationAxis::new(Axis::Y, Pair::P01), FRAC_PI_2);
        let want = real(&[[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(close(&m, &want, 1e-15));
    }

    #[test]
    fn x_gates() {
        let xp1 = x_matrix(XKind::Xplus1);
        assert_eq!(xp1[(1, 0)], ONE);
        let x01 = x_matrix(XKind::X01);
        assert!(close(&(&x01 * &x01), &ComplexMatrix::identity(3, 3), 0.0));
        assert_eq!(x_matrix(XKind::Xplus2), xp1.transpose());
        assert!(close(&(&xp1 * x_matrix(XKind::Xplus2)), &ComplexMatrix::identity(3, 3), 0.0));
        for k in XKind::ALL {
            let d = det(&x_matrix(k));
            let want = if matches!(k, XKind::Xplus1 | XKind::Xplus2) { 1.0 } else { -1.0 };
            assert!((d - C64::new(want, 0.0)).norm() < 1e-12, "{k:?}");
        }
    }

    #[test]
    fn phase_values() {
        assert!(close(&phase_matrix(0.0), &ComplexMatrix::identity(3, 3), 0.0));
        assert!(close(&phase_matrix(PI), &(-ComplexMatrix::identity(3, 3)), 1e-15));
        assert!(close(&phase_matrix(FRAC_PI_2), &(ComplexMatrix::identity(3, 3) * I), 1e-15));
    }

    #[test]
    fn kron_examples() {
        let i3 = ComplexMatrix::identity(3, 3);
        assert_eq!(kron(&i3, &i3), ComplexMatrix::identity(9, 9));
        let k = kron(&x_matrix(XKind::Xplus1), &i3);
        // |0>|2> = index 2 maps to |1>|2> = index 5
        assert_eq!(k[(5, 2)], ONE);
        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE * 2.0, ONE * 3.0]));
        let k = kron(&d, &ComplexMatrix::identity(2, 2));
        for i in 0..6 {
            assert_eq!(k[(i, i)], ONE * (1 + i / 2) as f64);
        }
    }

    #[test]
    fn unitarity_and_distance() {
        let i3 = ComplexMatrix::identity(3, 3);
        assert!(is_unitary(&i3, 1e-12));
        assert!(is_unitary(&rotation_matrix(RotationAxis::new(Axis::Y, Pair::P12), 0.7), 1e-12));
        assert!(!is_unitary(&(i3.clone() * C64::new(2.0, 0.0)), 1e-12));
        assert_eq!(frobenius_distance(&i3, &i3), 0.0);
        assert!((frobenius_distance(&i3, &(-i3.clone())) - 12f64.sqrt()).abs() < 1e-15);
        let d = frobenius_distance(&x_matrix(XKind::Xplus1), &x_matrix(XKind::Xplus2));
        assert!((d - 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn non_square_unitarity_panics() {
        is_unitary(&ComplexMatrix::zeros(2, 3), 1e-12);
    }

    #[test]
    fn trit_roundtrip() {
        assert_eq!(trits(25, 3), vec![2, 2, 1]);
        assert_eq!(from_trits(&[2, 2, 1]), 25);
    }
}
