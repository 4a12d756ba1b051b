//! Dense-matrix reference implementations shared by the integration tests.
#![allow(dead_code)]

use irsdet::detector::{DesignPoint, TransmitCovariance};
use irsdet::scene::{channel_g, path_loss, steering, ComplexMatrix, ComplexVector, SceneParams};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub const TAU: f64 = std::f64::consts::TAU;

pub fn alpha(s: &SceneParams) -> Complex64 {
    s.rcs * path_loss(s.d2, s).unwrap()
}

/// `e^T(θ0, N) A Φ` as a row.
pub fn coupling_row(d: &DesignPoint) -> ComplexMatrix {
    let s = &d.scene;
    let e0 = steering(s.theta0, s.n).unwrap();
    let a_phi = DMatrix::from_diagonal(&DVector::from_iterator(
        s.n,
        d.amp
            .iter()
            .zip(&d.phases)
            .map(|(a, p)| Complex64::from_polar(*a, *p)),
    ));
    let row = e0.transpose() * a_phi;
    DMatrix::from_row_slice(1, s.n, row.as_slice())
}

/// Reflected symbols from the dense channel matrix.
pub fn dense_symbols(d: &DesignPoint, x: &ComplexMatrix) -> Vec<Complex64> {
    let row = coupling_row(d) * channel_g(&d.scene).unwrap() * x;
    row.iter().copied().collect()
}

/// Stacked deterministic echo `u₁`, length `Mr·T`.
pub fn dense_u1(d: &DesignPoint, x: &ComplexMatrix) -> ComplexVector {
    let s = &d.scene;
    let er = steering(s.theta0, s.mr).unwrap();
    let a = alpha(s);
    let sym = dense_symbols(d, x);
    DVector::from_fn(s.mr * s.t, |k, _| a * er[k % s.mr] * sym[k / s.mr])
}

/// Reflection-noise covariance `C` of the stacked echo.
pub fn dense_covariance(d: &DesignPoint) -> ComplexMatrix {
    let s = &d.scene;
    let er = steering(s.theta0, s.mr).unwrap();
    let scale = s.sigmaz2 * alpha(s).norm_sqr() * d.amp.iter().map(|a| a * a).sum::<f64>();
    let block = &er * er.adjoint() * Complex64::from(scale);
    let mut c = DMatrix::zeros(s.mr * s.t, s.mr * s.t);
    for t in 0..s.t {
        c.view_mut((t * s.mr, t * s.mr), (s.mr, s.mr))
            .copy_from(&block);
    }
    c
}

fn stack(y: &ComplexMatrix) -> ComplexVector {
    DVector::from_column_slice(y.as_slice())
}

/// `ỹ^H (1/σ²) C (C+σ²I)⁻¹ ỹ + 2 Re{u₁^H (C+σ²I)⁻¹ ỹ}` by explicit inversion.
pub fn dense_np_statistic(y: &ComplexMatrix, d: &DesignPoint, x: &ComplexMatrix) -> f64 {
    let s = &d.scene;
    let yv = stack(y);
    let c = dense_covariance(d);
    let dim = c.nrows();
    let inv = (&c + DMatrix::identity(dim, dim) * Complex64::from(s.sigma2))
        .try_inverse()
        .unwrap();
    let quad = (yv.adjoint() * &c * &inv * &yv)[0] / s.sigma2;
    let lin = (dense_u1(d, x).adjoint() * &inv * &yv)[0];
    quad.re + 2.0 * lin.re
}

/// `u₁^H (C+σ²I)⁻¹ u₁`.
pub fn dense_deflection(d: &DesignPoint, x: &ComplexMatrix) -> f64 {
    let s = &d.scene;
    let c = dense_covariance(d);
    let dim = c.nrows();
    let inv = (&c + DMatrix::identity(dim, dim) * Complex64::from(s.sigma2))
        .try_inverse()
        .unwrap();
    let u = dense_u1(d, x);
    (u.adjoint() * inv * &u)[0].re
}

/// `L(d₁) |e^T(θ0) A Φ e(θ2)|² e^T(θ1) R_x e*(θ1)` from dense matrices.
pub fn dense_beam_power(d: &DesignPoint) -> f64 {
    let s = &d.scene;
    let e2 = steering(s.theta2, s.n).unwrap();
    let e1 = steering(s.theta1, s.mt).unwrap();
    let r = d.tx.to_dense(s.mt);
    let refl = (coupling_row(d) * e2)[0].norm_sqr();
    let tx = (e1.transpose() * r * e1.map(|z| z.conj()))[0].re;
    path_loss(s.d1, s).unwrap() * refl * tx
}

pub fn random_unit_vector<R: Rng>(rng: &mut R, k: usize) -> ComplexVector {
    let v = DVector::from_fn(k, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let n = v.norm();
    v / Complex64::from(n)
}

/// A random scene around the defaults with reflection noise strong enough
/// for the quadratic term to matter.
pub fn random_scene<R: Rng>(rng: &mut R) -> SceneParams {
    SceneParams {
        mr: rng.random_range(1..=8),
        n: rng.random_range(1..=24),
        t: rng.random_range(1..=8),
        theta0: rng.random_range(-1.2..1.2),
        theta1: rng.random_range(-1.2..1.2),
        theta2: rng.random_range(-1.2..1.2),
        sigmaz2: 10f64.powf(rng.random_range(-6.0..2.0)),
        rcs: Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..TAU)),
        ..SceneParams::default()
    }
}

pub fn random_design<R: Rng>(rng: &mut R, s: &SceneParams) -> DesignPoint {
    let amp = (0..s.n).map(|_| rng.random_range(0.1..s.amax)).collect();
    let phases = (0..s.n).map(|_| rng.random_range(0.0..TAU)).collect();
    let tx = if rng.random_bool(0.2) {
        TransmitCovariance::Isotropic {
            power: rng.random_range(0.1..1.0),
        }
    } else {
        TransmitCovariance::RankOne {
            direction: random_unit_vector(rng, s.mt),
            power: rng.random_range(0.1..1.0),
        }
    };
    DesignPoint::new(s.clone(), phases, amp, tx).unwrap()
}

pub fn random_block<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale
    })
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
