//! Nine-rotation factorisation of SU(3) and diagonal decompositions.
//!
//! The factorisation used throughout, as a matrix product, is
//!
//! ```text
//! RZ02((-f1+p1)/2) RY02(-t1) RZ02((-f1-p1)/2) . RZ01(p2/2) RY01(-t2) RZ01(-p2/2)
//!   . RZ12((-f3+p3)/2) RY12(-t3) RZ12((-f3-p3)/2)
//! ```
//!
//! with `t* = theta*`, `f* = phi*`, `p* = psi*`. Its first column is
//! `(cos t1 cos t2 e^{-i f1}, sin t2 e^{-i p2}, sin t1 cos t2 e^{-i p1})`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::kernel::{det, rotation_matrix, unitarity_defect, Axis, ComplexMatrix, Pair, RotationAxis, C64};

const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Su3Params {
    pub theta1: f64,
    pub phi1: f64,
    pub psi1: f64,
    pub theta2: f64,
    pub psi2: f64,
    pub theta3: f64,
    pub phi3: f64,
    pub psi3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct U3Decomposition {
    pub alpha: f64,
    pub su3: Su3Params,
}

impl U3Decomposition {
    pub fn matrix(&self) -> ComplexMatrix {
        reconstruct_su3(&self.su3) * C64::from_polar(1.0, self.alpha)
    }
}

fn rz(p: Pair, t: f64) -> (RotationAxis, f64) {
    (RotationAxis::new(Axis::Z, p), t)
}

fn ry(p: Pair, t: f64) -> (RotationAxis, f64) {
    (RotationAxis::new(Axis::Y, p), t)
}

impl Su3Params {
    /// The 02 stage in temporal order.
    pub fn stage02(&self) -> [(RotationAxis, f64); 3] {
        let (f, p) = (self.phi1, self.psi1);
        [rz(Pair::P02, (-f - p) / 2.0), ry(Pair::P02, -self.theta1), rz(Pair::P02, (-f + p) / 2.0)]
    }

    /// The 01 stage in temporal order.
    pub fn stage01(&self) -> [(RotationAxis, f64); 3] {
        let p = self.psi2;
        [rz(Pair::P01, -p / 2.0), ry(Pair::P01, -self.theta2), rz(Pair::P01, p / 2.0)]
    }

    /// The 12 stage in temporal order.
    pub fn stage12(&self) -> [(RotationAxis, f64); 3] {
        let (f, p) = (self.phi3, self.psi3);
        [rz(Pair::P12, (-f - p) / 2.0), ry(Pair::P12, -self.theta3), rz(Pair::P12, (-f + p) / 2.0)]
    }

    /// All nine rotations in temporal order (12 stage first).
    pub fn rotations(&self) -> Vec<(RotationAxis, f64)> {
        let mut v = Vec::with_capacity(9);
        v.extend(self.stage12());
        v.extend(self.stage01());
        v.extend(self.stage02());
        v
    }
}

fn product(rots: &[(RotationAxis, f64)]) -> ComplexMatrix {
    rots.iter().fold(ComplexMatrix::identity(3, 3), |acc, (ax, t)| rotation_matrix(*ax, *t) * acc)
}

pub fn reconstruct_su3(p: &Su3Params) -> ComplexMatrix {
    product(&p.rotations())
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    if u.shape() != (3, 3) {
        return Err(Error::DimensionMismatch { expected: 3, found: u.nrows() });
    }
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotUnitary { defect: f64::INFINITY });
    }
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Recovers the eight angles of a determinant-one unitary.
///
/// The first column fixes the 02 and 01 stages; the 12 stage is read off the
/// remainder `B^-1 A^-1 U`, which is `1 (+) SU(2)`. When `|u21| = 1` the 02
/// stage is taken as the identity.
pub fn decompose_su3(u: &ComplexMatrix) -> Result<Su3Params> {
    check_unitary(u)?;
    let d = (det(u) - C64::new(1.0, 0.0)).norm();
    if d > UNITARY_TOL {
        return Err(Error::NotSpecial { defect: d });
    }
    let (u11, u21, u31) = (u[(0, 0)], u[(1, 0)], u[(2, 0)]);
    let mut p = Su3Params {
        theta2: u21.norm().atan2(u11.norm().hypot(u31.norm())),
        psi2: -u21.arg(),
        theta1: u31.norm().atan2(u11.norm()),
        phi1: -u11.arg(),
        psi1: -u31.arg(),
        ..Default::default()
    };
    let a = product(&p.stage02());
    let b = product(&p.stage01());
    let rest = b.adjoint() * a.adjoint() * u;
    let (x, y) = (rest[(1, 1)], rest[(1, 2)]);
    p.theta3 = y.norm().atan2(x.norm());
    p.phi3 = -x.arg();
    // psi3 only matters when sin(theta3) != 0
    p.psi3 = if y.norm() > 0.0 { (-y).arg() } else { 0.0 };
    Ok(p)
}

/// Nine rotation gates on `wire` realising `reconstruct_su3(p)`.
pub fn params_to_circuit(p: &Su3Params, wire: usize, width: usize) -> Circuit {
    let mut c = Circuit::new(width);
    for (ax, t) in p.rotations() {
        c.add(Gate::new(GateKind::Rotation(ax, t), wire));
    }
    c
}

/// `u = e^{i alpha} reconstruct_su3(su3)` with `alpha = arg(det u) / 3`.
pub fn decompose_u3(u: &ComplexMatrix) -> Result<U3Decomposition> {
    check_unitary(u)?;
    let alpha = det(u).arg() / 3.0;
    let su3 = decompose_su3(&(u * C64::from_polar(1.0, -alpha)))?;
    Ok(U3Decomposition { alpha, su3 })
}

/// `diag(e^{ia}, e^{ib}, e^{iz}) = e^{i phase} RZ01(r01) RZ12(r12)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalDecomposition {
    pub phase: f64,
    pub r01: f64,
    pub r12: f64,
}

impl DiagonalDecomposition {
    pub fn matrix(&self) -> ComplexMatrix {
        rotation_matrix(RotationAxis::new(Axis::Z, Pair::P01), self.r01)
            * rotation_matrix(RotationAxis::new(Axis::Z, Pair::P12), self.r12)
            * C64::from_polar(1.0, self.phase)
    }
}

pub fn decompose_diagonal(alpha: f64, beta: f64, zeta: f64) -> DiagonalDecomposition {
    DiagonalDecomposition {
        phase: (alpha + beta + zeta) / 3.0,
        r01: (2.0 * alpha - beta - zeta) / 3.0,
        r12: (alpha + beta - 2.0 * zeta) / 3.0,
    }
}

/// Two Z rotations whose matrix product is `diag(e^{ia}, e^{ib}, e^{-i(a+b)})`,
/// returned left factor first.
pub fn decompose_special_diagonal(alpha: f64, beta: f64, variant: u8) -> Result<[(RotationAxis, f64); 2]> {
    Ok(match variant {
        1 => [rz(Pair::P01, alpha), rz(Pair::P12, alpha + beta)],
        2 => [rz(Pair::P02, alpha), rz(Pair::P12, beta)],
        3 => [rz(Pair::P02, alpha + beta), rz(Pair::P01, -beta)],
        v => return Err(Error::OutOfRange(format!("special diagonal variant {v} (expected 1, 2 or 3)"))),
    })
}

pub fn diag_phases(a: f64, b: f64, z: f64) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::from_polar(1.0, a),
        C64::from_polar(1.0, b),
        C64::from_polar(1.0, z),
    ]))
}

/// Haar-random unitary of size `n` (Gaussian matrix, QR, phase-fixed R diagonal).
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar-random SU(3) element.
pub fn random_su3(rng: &mut impl Rng) -> ComplexMatrix {
    let u = random_unitary(rng, 3);
    let a = det(&u).arg() / 3.0;
    u * C64::from_polar(1.0, -a)
}
