//! Hirota tau-function machinery: subset sums, normalized evaluation,
//! analytic jets, PDE residuals and the explicit kernel elements.
//!
//! All solution values are derived from the complex combination F = f + ig:
//! U_n = 4 arg F, sin U_n = Im(F^4)/|F|^4, and derivatives of U_n are
//! imaginary parts of ratios of derivative sums over F. Every formula is a
//! ratio of sums sharing one exponent offset, so the power-of-two
//! normalization cancels exactly.

use crate::config::{HyperbolicConfig, SgError, SolitonConfig, WaveVector};
use num_complex::Complex64;

/// α(j,l) for elliptic parameters: |k_j − k_l|² / |k_j + k_l|².
pub fn alpha_elliptic(kj: WaveVector, kl: WaveVector) -> Result<f64, SgError> {
    let num = (kj.p - kl.p).powi(2) + (kj.q - kl.q).powi(2);
    let den = (kj.p + kl.p).powi(2) + (kj.q + kl.q).powi(2);
    if den < 1e-20 {
        return Err(SgError::ConfigDegenerate(
            "alpha_elliptic: opposite wave vectors".into(),
        ));
    }
    Ok(num / den)
}

/// α(j,l) for hyperbolic parameters: ((ΔP)² − (ΔQ)²) / ((ΣP)² − (ΣQ)²).
/// Negative for real distinct rapidities (equals −((k_j−k_l)/(k_j+k_l))²).
pub fn alpha_hyperbolic(pj: f64, qj: f64, pl: f64, ql: f64) -> Result<f64, SgError> {
    let num = (pj - pl).powi(2) - (qj - ql).powi(2);
    let den = (pj + pl).powi(2) - (qj + ql).powi(2);
    if den.abs() < 1e-20 {
        return Err(SgError::ConfigDegenerate(
            "alpha_hyperbolic: denominator vanishes".into(),
        ));
    }
    Ok(num / den)
}

/// a(subset) = product of pairwise α over the subset; 1 for size 0 or 1.
pub fn hirota_coefficient(config: &SolitonConfig, subset: &[usize]) -> Result<f64, SgError> {
    for (i, &a) in subset.iter().enumerate() {
        if a >= config.n() {
            return Err(SgError::Invariant(format!("subset index {a} out of range")));
        }
        if subset[i + 1..].contains(&a) {
            return Err(SgError::Invariant("subset indices must be distinct".into()));
        }
    }
    let mut prod = 1.0;
    for (i, &a) in subset.iter().enumerate() {
        for &b in &subset[i + 1..] {
            prod *= alpha_elliptic(config.waves[a], config.waves[b])?;
        }
    }
    Ok(prod)
}

/// Normalized Hirota pair: f = e^offset · f_hat, g = e^offset · g_hat,
/// with max(|f_hat|,|g_hat|) in [1,2) after a power-of-two rescale that
/// leaves the ratio g/f bit-identical.
#[derive(Debug, Clone, Copy)]
pub struct TauPair {
    pub f_hat: f64,
    pub g_hat: f64,
    pub exponent_offset: f64,
}

/// Value and partial derivatives through second order at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet2 {
    pub value: f64,
    pub d_x: f64,
    pub d_y: f64,
    pub d_xx: f64,
    pub d_xy: f64,
    pub d_yy: f64,
}

/// One Hirota summand: sign·exp(px·x + qy·y + c), with the membership mask
/// kept for η°-derivatives.
#[derive(Debug, Clone, Copy)]
struct Term {
    px: f64,
    qy: f64,
    c: f64,
    sign: f64,
    mask: u16,
    odd: bool,
}

/// All six complex derivative sums F^(a,b) = Σ sign·exp(e)·px^a·qy^b of
/// F = f + ig, sharing one exponent offset.
#[derive(Debug, Clone, Copy)]
struct FJet {
    v: Complex64,
    x: Complex64,
    y: Complex64,
    xx: Complex64,
    xy: Complex64,
    yy: Complex64,
}

/// Precomputed subset table for one configuration. Construction walks the
/// subsets in Gray-code order so the running exponent data update in O(n)
/// per subset instead of O(n²).
#[derive(Debug, Clone)]
pub struct TauEngine {
    n: usize,
    terms: Vec<Term>,
}

impl TauEngine {
    pub fn new(config: &SolitonConfig) -> Result<Self, SgError> {
        let n = config.n();
        let mut ln_alpha = vec![0.0; n * n];
        for j in 0..n {
            for l in j + 1..n {
                let a = alpha_elliptic(config.waves[j], config.waves[l])?;
                if a <= 0.0 {
                    return Err(SgError::ConfigDegenerate(
                        "coincident wave vectors give alpha = 0".into(),
                    ));
                }
                ln_alpha[j * n + l] = a.ln();
                ln_alpha[l * n + j] = ln_alpha[j * n + l];
            }
        }
        let mut terms = Vec::with_capacity(1usize << n);
        let mut in_set = vec![false; n];
        let (mut px, mut qy, mut c) = (0.0f64, 0.0f64, 0.0f64);
        let mut mask: u16 = 0;
        let mut count = 0usize;
        for m in 0..(1usize << n) {
            if m > 0 {
                let gray = m ^ (m >> 1);
                let prev = (m - 1) ^ ((m - 1) >> 1);
                let j = (gray ^ prev).trailing_zeros() as usize;
                let entering = !in_set[j];
                let s = if entering { 1.0 } else { -1.0 };
                in_set[j] = entering;
                for l in 0..n {
                    if l != j && in_set[l] {
                        c += s * ln_alpha[j * n + l];
                    }
                }
                px += s * config.waves[j].p;
                qy -= s * config.waves[j].q;
                c -= s * config.phases[j];
                mask ^= 1 << j;
                count = if entering { count + 1 } else { count - 1 };
            }
            terms.push(Term { px, qy, c, sign: 1.0, mask, odd: count % 2 == 1 });
        }
        Ok(Self { n, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn max_exponent(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.px * x + t.qy * y + t.c)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// (f, g) offset by the largest subset exponent only (no power-of-two
    /// rescale); the intermediate the normalization acts on.
    pub fn tau_pair_unnormalized(&self, x: f64, y: f64) -> TauPair {
        let m = self.max_exponent(x, y);
        let (mut f, mut g) = (0.0f64, 0.0f64);
        for t in &self.terms {
            let e = t.sign * (t.px * x + t.qy * y + t.c - m).exp();
            if t.odd {
                g += e;
            } else {
                f += e;
            }
        }
        TauPair { f_hat: f, g_hat: g, exponent_offset: m }
    }

    /// Normalized (f, g) at a point.
    pub fn tau_pair(&self, x: f64, y: f64) -> TauPair {
        let raw = self.tau_pair_unnormalized(x, y);
        // Rescale by an exact power of two into [1,2); the ratio g/f is
        // unchanged bit-for-bit.
        let big = raw.f_hat.abs().max(raw.g_hat.abs());
        let k = big.log2().floor();
        let s = (-k).exp2();
        TauPair {
            f_hat: raw.f_hat * s,
            g_hat: raw.g_hat * s,
            exponent_offset: raw.exponent_offset + k * std::f64::consts::LN_2,
        }
    }

    fn fjet(&self, x: f64, y: f64) -> FJet {
        let m = self.max_exponent(x, y);
        let zero = Complex64::new(0.0, 0.0);
        let (mut v, mut dx, mut dy, mut dxx, mut dxy, mut dyy) =
            (zero, zero, zero, zero, zero, zero);
        for t in &self.terms {
            let e = t.sign * (t.px * x + t.qy * y + t.c - m).exp();
            let w = if t.odd { Complex64::new(0.0, e) } else { Complex64::new(e, 0.0) };
            v += w;
            dx += w * t.px;
            dy += w * t.qy;
            dxx += w * (t.px * t.px);
            dxy += w * (t.px * t.qy);
            dyy += w * (t.qy * t.qy);
        }
        FJet { v, x: dx, y: dy, xx: dxx, xy: dxy, yy: dyy }
    }

    /// η°_j-derivative sums (each term picks up −1 if j belongs to the subset).
    fn gjet(&self, j: usize, x: f64, y: f64) -> FJet {
        let m = self.max_exponent(x, y);
        let bit = 1u16 << j;
        let zero = Complex64::new(0.0, 0.0);
        let (mut v, mut dx, mut dy, mut dxx, mut dxy, mut dyy) =
            (zero, zero, zero, zero, zero, zero);
        for t in &self.terms {
            if t.mask & bit == 0 {
                continue;
            }
            let e = -t.sign * (t.px * x + t.qy * y + t.c - m).exp();
            let w = if t.odd { Complex64::new(0.0, e) } else { Complex64::new(e, 0.0) };
            v += w;
            dx += w * t.px;
            dy += w * t.qy;
            dxx += w * (t.px * t.px);
            dxy += w * (t.px * t.qy);
            dyy += w * (t.qy * t.qy);
        }
        FJet { v, x: dx, y: dy, xx: dxx, xy: dxy, yy: dyy }
    }

    /// U_n(x,y) = 4 atan2(g, f) ∈ (0, 2π).
    pub fn eval_solution(&self, x: f64, y: f64) -> f64 {
        let t = self.tau_pair(x, y);
        4.0 * t.g_hat.atan2(t.f_hat)
    }

    /// The shifted solution U_n − π ∈ (−π, π), the |u| < π solution of (SG).
    pub fn eval_shifted(&self, x: f64, y: f64) -> f64 {
        self.eval_solution(x, y) - std::f64::consts::PI
    }

    /// cos U_n = Re(F⁴)/|F|⁴ and sin U_n = Im(F⁴)/|F|⁴ without any arctan.
    pub fn cos_sin(&self, x: f64, y: f64) -> (f64, f64) {
        let t = self.tau_pair(x, y);
        let u = Complex64::new(t.f_hat, t.g_hat);
        let w = (u / u.norm()).powi(4);
        (w.re, w.im)
    }

    /// Analytic jet of U_n through second order.
    pub fn eval_jet(&self, x: f64, y: f64) -> Jet2 {
        let fj = self.fjet(x, y);
        let r1x = fj.x / fj.v;
        let r1y = fj.y / fj.v;
        Jet2 {
            value: 4.0 * fj.v.im.atan2(fj.v.re),
            d_x: 4.0 * r1x.im,
            d_y: 4.0 * r1y.im,
            d_xx: 4.0 * (fj.xx / fj.v - r1x * r1x).im,
            d_xy: 4.0 * (fj.xy / fj.v - r1x * r1y).im,
            d_yy: 4.0 * (fj.yy / fj.v - r1y * r1y).im,
        }
    }

    /// Δ U_n − sin U_n from analytic derivatives.
    pub fn pde_residual(&self, x: f64, y: f64) -> f64 {
        let j = self.eval_jet(x, y);
        let (_, s) = self.cos_sin(x, y);
        j.d_xx + j.d_yy - s
    }

    /// φ_j = ∂_{η_j°} U_n, the j-th explicit kernel element of −Δ + cos U_n.
    pub fn kernel_element(&self, j: usize, x: f64, y: f64) -> f64 {
        assert!(j < self.n, "kernel index out of range");
        let fj = self.fjet(x, y);
        let gj = self.gjet(j, x, y);
        4.0 * (gj.v / fj.v).im
    }

    /// Full jet of φ_j (quotient-rule expansion of ∂(G/F)).
    pub fn kernel_jet(&self, j: usize, x: f64, y: f64) -> Jet2 {
        assert!(j < self.n, "kernel index out of range");
        let fj = self.fjet(x, y);
        let gj = self.gjet(j, x, y);
        let g0 = gj.v / fj.v;
        let gx = gj.x / fj.v;
        let gy = gj.y / fj.v;
        let rx = fj.x / fj.v;
        let ry = fj.y / fj.v;
        let rxx = fj.xx / fj.v;
        let rxy = fj.xy / fj.v;
        let ryy = fj.yy / fj.v;
        Jet2 {
            value: 4.0 * g0.im,
            d_x: 4.0 * (gx - g0 * rx).im,
            d_y: 4.0 * (gy - g0 * ry).im,
            d_xx: 4.0 * (gj.xx / fj.v - 2.0 * gx * rx - g0 * rxx + 2.0 * g0 * rx * rx).im,
            d_xy: 4.0 * (gj.xy / fj.v - gx * ry - gy * rx - g0 * rxy + 2.0 * g0 * rx * ry).im,
            d_yy: 4.0 * (gj.yy / fj.v - 2.0 * gy * ry - g0 * ryy + 2.0 * g0 * ry * ry).im,
        }
    }

    /// Residual of the kernel equation Δφ_j = φ_j cos U_n.
    pub fn kernel_residual(&self, j: usize, x: f64, y: f64) -> f64 {
        let kj = self.kernel_jet(j, x, y);
        let (c, _) = self.cos_sin(x, y);
        kj.d_xx + kj.d_yy - kj.value * c
    }
}

/// Convenience wrappers constructing a throwaway engine.
pub fn tau_pair(config: &SolitonConfig, x: f64, y: f64) -> Result<TauPair, SgError> {
    Ok(TauEngine::new(config)?.tau_pair(x, y))
}

pub fn eval_solution(config: &SolitonConfig, x: f64, y: f64) -> Result<f64, SgError> {
    Ok(TauEngine::new(config)?.eval_solution(x, y))
}

pub fn eval_jet(config: &SolitonConfig, x: f64, y: f64) -> Result<Jet2, SgError> {
    Ok(TauEngine::new(config)?.eval_jet(x, y))
}

pub fn pde_residual(config: &SolitonConfig, x: f64, y: f64) -> Result<f64, SgError> {
    Ok(TauEngine::new(config)?.pde_residual(x, y))
}

pub fn kernel_element(config: &SolitonConfig, j: usize, x: f64, y: f64) -> Result<f64, SgError> {
    Ok(TauEngine::new(config)?.kernel_element(j, x, y))
}

/// H(x) = 4 arctan eˣ − π, the heteroclinic profile of the pendulum equation.
pub fn heteroclinic(x: f64) -> f64 {
    // 4 atan(e^x) − π == 4 atan2(e^{x/2}, e^{-x/2}): stable at both ends.
    4.0 * (0.5 * x).exp().atan2((-0.5 * x).exp()) - std::f64::consts::PI
}

/// φ_{p,q}(x,y) = 4 arctan(p cosh(qy)/(q cosh(px))) − π.
pub fn four_end_closed_form(p: f64, q: f64, x: f64, y: f64) -> Result<f64, SgError> {
    if q <= 0.0 || p <= 0.0 || (p * p + q * q - 1.0).abs() > 1e-12 {
        return Err(SgError::ConfigDegenerate(
            "four_end_closed_form needs a unit vector with p, q > 0".into(),
        ));
    }
    // cosh ratios via exponent-shifted forms to stay finite at large |x|,|y|.
    let m = (q * y.abs()).max(p * x.abs());
    let ch = |a: f64| ((a - m).exp() + (-a - m).exp()) * 0.5;
    Ok(4.0 * (p * ch(q * y)).atan2(q * ch(p * x)) - std::f64::consts::PI)
}

/// Hyperbolic n-soliton engine for Eq. (csg): φ_xx − φ_zz = sin φ,
/// η_j = P_j x + Q_j z + η_j°. The interaction coefficients α are negative
/// for real rapidities, so f may vanish; values are still defined through
/// F = f + ig wherever F ≠ 0.
#[derive(Debug, Clone)]
pub struct HyperbolicEngine {
    terms: Vec<Term>,
}

impl HyperbolicEngine {
    pub fn new(config: &HyperbolicConfig) -> Result<Self, SgError> {
        let n = config.n();
        let mut alpha = vec![0.0; n * n];
        for j in 0..n {
            for l in j + 1..n {
                let a = alpha_hyperbolic(config.pp[j], config.qq[j], config.pp[l], config.qq[l])?;
                alpha[j * n + l] = a;
                alpha[l * n + j] = a;
            }
        }
        let mut terms = Vec::with_capacity(1usize << n);
        for m in 0..(1usize << n) {
            let mask = (m ^ (m >> 1)) as u16;
            let mut idx = Vec::new();
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    idx.push(j);
                }
            }
            let mut a = 1.0f64;
            for (i, &ja) in idx.iter().enumerate() {
                for &jb in &idx[i + 1..] {
                    a *= alpha[ja * n + jb];
                }
            }
            let px: f64 = idx.iter().map(|&j| config.pp[j]).sum();
            let qz: f64 = idx.iter().map(|&j| config.qq[j]).sum();
            let e0: f64 = idx.iter().map(|&j| config.phases[j]).sum();
            terms.push(Term {
                px,
                qy: qz,
                c: a.abs().max(f64::MIN_POSITIVE).ln() + e0,
                sign: if a < 0.0 { -1.0 } else { 1.0 },
                mask,
                odd: idx.len() % 2 == 1,
            });
        }
        Ok(Self { terms })
    }

    fn fjet(&self, x: f64, z: f64) -> FJet {
        let m = self
            .terms
            .iter()
            .map(|t| t.px * x + t.qy * z + t.c)
            .fold(f64::NEG_INFINITY, f64::max);
        let zero = Complex64::new(0.0, 0.0);
        let (mut v, mut dx, mut dz, mut dxx, mut dxz, mut dzz) =
            (zero, zero, zero, zero, zero, zero);
        for t in &self.terms {
            let e = t.sign * (t.px * x + t.qy * z + t.c - m).exp();
            let w = if t.odd { Complex64::new(0.0, e) } else { Complex64::new(e, 0.0) };
            v += w;
            dx += w * t.px;
            dz += w * t.qy;
            dxx += w * (t.px * t.px);
            dxz += w * (t.px * t.qy);
            dzz += w * (t.qy * t.qy);
        }
        FJet { v, x: dx, y: dz, xx: dxx, xy: dxz, yy: dzz }
    }

    /// φ(x,z) = 4 atan2(g, f), branch-continuous through f = 0.
    pub fn eval(&self, x: f64, z: f64) -> f64 {
        let fj = self.fjet(x, z);
        4.0 * fj.v.im.atan2(fj.v.re)
    }

    /// Residual of φ_xx − φ_zz = sin φ.
    pub fn residual(&self, x: f64, z: f64) -> f64 {
        let fj = self.fjet(x, z);
        let rx = fj.x / fj.v;
        let rz = fj.y / fj.v;
        let pxx = 4.0 * (fj.xx / fj.v - rx * rx).im;
        let pzz = 4.0 * (fj.yy / fj.v - rz * rz).im;
        let s = (fj.v / fj.v.norm()).powi(4).im;
        pxx - pzz - s
    }

    /// Raw subset sums (f, g) without normalization, for term-by-term
    /// comparison against hand expansions (small n, moderate points only).
    pub fn raw_fg(&self, x: f64, z: f64) -> (f64, f64) {
        let (mut f, mut g) = (0.0, 0.0);
        for t in &self.terms {
            let e = t.sign * (t.px * x + t.qy * z + t.c).exp();
            if t.odd {
                g += e;
            } else {
                f += e;
            }
        }
        (f, g)
    }
}

pub fn eval_hyperbolic(config: &HyperbolicConfig, x: f64, z: f64) -> Result<f64, SgError> {
    Ok(HyperbolicEngine::new(config)?.eval(x, z))
}
