//! Forward scattering for the x-equation (Lax1) of the Lax pair: integrate
//! the 2×2 linear system across the soliton, read off the transfer matrix
//! against the free solution exp((i/4)kσ₃x), and verify that U_n is a
//! reflectionless potential whose a(λ) does not drift in y.

use num_complex::Complex64 as C;

use crate::config::{SgError, SolitonConfig};
use crate::tau::TauEngine;

/// One scattering measurement at real spectral parameter λ on the line y.
#[derive(Debug, Clone)]
pub struct ScatteringSample {
    pub lambda: f64,
    pub y: f64,
    pub a: C,
    pub b: C,
    /// k(λ) = λ − 1/λ
    pub k: f64,
    pub x_max: f64,
    pub step: f64,
}

/// Column-major-free tiny dense 2×2 complex matrix: [m11, m12, m21, m22].
pub type Mat2 = [C; 4];

pub const MAT2_ID: Mat2 = [C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn mat_det(a: &Mat2) -> C {
    a[0] * a[3] - a[1] * a[2]
}

fn mat_inv(a: &Mat2) -> Mat2 {
    let d = mat_det(a);
    [a[3] / d, -a[1] / d, -a[2] / d, a[0] / d]
}

fn mat_norm(a: &Mat2) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Coefficient matrix of (Lax1) from the potential data at one point:
/// ½((iλ/2 + cos u/(2iλ))σ₃ − (i/2)(u_x+iu_y)σ₂ − (i sin u/(2λ))σ₁).
fn lax1_matrix(lambda: f64, cos_u: f64, sin_u: f64, w: C) -> Mat2 {
    let i = C::new(0.0, 1.0);
    let c3 = i * (0.5 * lambda - cos_u / (2.0 * lambda));
    let s1 = -i * sin_u / (2.0 * lambda);
    // σ₂ contributes −w/2 above and +w/2 below the diagonal
    [
        0.5 * c3,
        0.5 * (-0.5 * w + s1),
        0.5 * (0.5 * w + s1),
        -0.5 * c3,
    ]
}

/// Free solution E(x) = exp((i/4)kσ₃x).
fn free_solution(k: f64, x: f64) -> Mat2 {
    let ph = C::new(0.0, 0.25 * k * x).exp();
    [ph, C::new(0.0, 0.0), C::new(0.0, 0.0), ph.conj()]
}

fn check_lambda(lambda: f64) -> Result<(), SgError> {
    if !(0.05..=20.0).contains(&lambda.abs()) {
        return Err(SgError::Invariant(format!(
            "spectral parameter |λ| = {} outside [0.05, 20]",
            lambda.abs()
        )));
    }
    Ok(())
}

/// Classical RK4 transfer-matrix integration of Φ' = M(x)Φ from x0 to x1
/// with Φ(x0) given; `pot(x)` supplies (cos u, sin u, u_x + i·u_y).
/// Fails with StepTooCoarse when step·max|M| exceeds 0.1 anywhere.
pub fn integrate_lax_with<F>(
    pot: F,
    lambda: f64,
    x0: f64,
    x1: f64,
    step: f64,
    phi0: Mat2,
) -> Result<Mat2, SgError>
where
    F: Fn(f64) -> (f64, f64, C),
{
    check_lambda(lambda)?;
    let steps = ((x1 - x0) / step).round() as usize;
    let h = (x1 - x0) / steps as f64;
    let mut phi = phi0;
    let mut m_left = {
        let (c, s, w) = pot(x0);
        lax1_matrix(lambda, c, s, w)
    };
    for istep in 0..steps {
        let x = x0 + istep as f64 * h;
        let (c, s, w) = pot(x + 0.5 * h);
        let m_mid = lax1_matrix(lambda, c, s, w);
        let (c, s, w) = pot(x + h);
        let m_right = lax1_matrix(lambda, c, s, w);
        let coef = mat_norm(&m_left).max(mat_norm(&m_mid)).max(mat_norm(&m_right));
        if step * coef > 0.1 {
            return Err(SgError::StepTooCoarse(step * coef));
        }
        let k1 = mat_mul(&m_left, &phi);
        let half = C::new(0.5 * h, 0.0);
        let p2: Mat2 = std::array::from_fn(|i| phi[i] + half * k1[i]);
        let k2 = mat_mul(&m_mid, &p2);
        let p3: Mat2 = std::array::from_fn(|i| phi[i] + half * k2[i]);
        let k3 = mat_mul(&m_mid, &p3);
        let hh = C::new(h, 0.0);
        let p4: Mat2 = std::array::from_fn(|i| phi[i] + hh * k3[i]);
        let k4 = mat_mul(&m_right, &p4);
        let sixth = h / 6.0;
        for i in 0..4 {
            phi[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        m_left = m_right;
    }
    Ok(phi)
}

/// Transfer matrix T = E(X)⁻¹Φ(X) for the left-normalized solution
/// Φ(−X) = E(−X) across the soliton line y.
pub fn integrate_lax(
    config: &SolitonConfig,
    y: f64,
    lambda: f64,
    x_max: f64,
    step: f64,
) -> Result<Mat2, SgError> {
    check_lambda(lambda)?;
    let eng = TauEngine::new(config)?;
    let k = lambda - 1.0 / lambda;
    let pot = |x: f64| {
        let (c, s) = eng.cos_sin(x, y);
        let jet = eng.eval_jet(x, y);
        (c, s, C::new(jet.d_x, jet.d_y))
    };
    // X must reach the free region: coefficient within 1e-10 of (i/4)kσ₃
    let free = lax1_matrix(lambda, 1.0, 0.0, C::new(0.0, 0.0));
    for xe in [-x_max, x_max] {
        let (c, s, w) = pot(xe);
        let m = lax1_matrix(lambda, c, s, w);
        let dev: f64 = (0..4).map(|i| (m[i] - free[i]).norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(SgError::Invariant(format!(
                "X = {x_max} too small: coefficient deviates by {dev:.3e} at x = {xe}"
            )));
        }
    }
    let phi0 = free_solution(k, -x_max);
    let phi = integrate_lax_with(pot, lambda, -x_max, x_max, step, phi0)?;
    let e_inv = free_solution(k, -x_max); // E(X)⁻¹ = E(−X) (diagonal unitary)
    Ok(mat_mul(&e_inv, &phi))
}

/// Scattering data from the transfer matrix. Φ₊ = Φ₋·S fixes S = T⁻¹ for
/// the left-normalized T; the orientation is pinned by the free-potential
/// identity (u ≡ 0 gives T = I, hence a = 1, b = 0) and the kink run.
pub fn scattering_coeffs(
    config: &SolitonConfig,
    y: f64,
    lambda: f64,
    x_max: f64,
    step: f64,
) -> Result<ScatteringSample, SgError> {
    let t = integrate_lax(config, y, lambda, x_max, step)?;
    let s = mat_inv(&t);
    let det_dev = (mat_det(&s) - C::new(1.0, 0.0)).norm();
    if det_dev > 1e-6 {
        return Err(SgError::Invariant(format!(
            "scattering matrix not unimodular: |det S - 1| = {det_dev:.3e}"
        )));
    }
    Ok(ScatteringSample {
        lambda,
        y,
        a: s[0],
        b: s[1],
        k: lambda - 1.0 / lambda,
        x_max,
        step,
    })
}

/// (|a(λ,y₁) − a(λ,y₂)|, |b(λ,y₁)| + |b(λ,y₂)|); both ≤ 1e−6 for U_n by the
/// y-evolution laws of the scattering data.
pub fn evolution_check(
    config: &SolitonConfig,
    lambda: f64,
    y1: f64,
    y2: f64,
    x_max: f64,
    step: f64,
) -> Result<(f64, f64), SgError> {
    let s1 = scattering_coeffs(config, y1, lambda, x_max, step)?;
    let s2 = scattering_coeffs(config, y2, lambda, x_max, step)?;
    Ok(((s1.a - s2.a).norm(), s1.b.norm() + s2.b.norm()))
}

/// Standard real-λ verification grid from the reflectionlessness property.
pub const LAMBDA_GRID: [f64; 8] = [-3.0, -1.5, -0.5, -0.2, 0.2, 0.5, 1.5, 3.0];

/// max |b| over the λ grid at fixed y (X = 40, step = 0.005 per contract).
pub fn max_reflection(config: &SolitonConfig, y: f64) -> Result<f64, SgError> {
    let mut worst = 0.0f64;
    for &l in &LAMBDA_GRID {
        let s = scattering_coeffs(config, y, l, 40.0, 0.005)?;
        worst = worst.max(s.b.norm());
    }
    Ok(worst)
}
