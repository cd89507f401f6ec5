//! Complex gauge representation (f̃, g̃, γ, τ), Hirota D-operators, the
//! bilinear Bäcklund identities, the singular set S, the fields Γ and ξ,
//! and the linearized-kernel lift.
//!
//! Conventions (each pinned by direct numerical verification):
//! - elliptic η̃_j = η_j − ξ_j with e^{ξ_j} the alternating product of
//!   (k_l ± k_j) ratios; hyperbolic η̃_j = P_j x + Q_j z + η̃_j° with no shift;
//! - light-cone derivatives ∂_s = ∂_x − i∂_y, ∂_t = ∂_x + i∂_y, so
//!   ∂_s η̃_j = k_j and ∂_t η̃_j = 1/k_j;
//! - Lemma Back holds with the two constants paired as
//!   D_s G·F = −(k_n/2) Ḡ F̄ and D_t G·F̄ = −1/(2k_n) Ḡ F (the printed lemma
//!   swaps them);
//! - Eq. (uv) holds with k_n and k̄_n interchanged relative to the printed
//!   system, and this conjugation swap propagates to Γ, ξ and the linearized
//!   system;
//! - Γ = 2k_n(fγ−gτ)²/((f²+g²)(γ²+τ²)) tends to 0 as x → +∞ and to 2k_n as
//!   x → −∞; ξ is the convergent normalization
//!   ln ξ = p_n x − q_n y + ∫_{−∞}^x (Re Γ − 2p_n) ds.

use crate::config::{HyperbolicConfig, SgError, SolitonConfig};
use crate::tau::{Jet2, TauEngine};
use num_complex::Complex64;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// e^{ξ_j} = ∏_{l<j}(k_l+k_j)/(k_l−k_j) · ∏_{l>j}(k_j+k_l)/(k_j−k_l).
pub fn xi_weights(config: &SolitonConfig) -> Result<Vec<C>, SgError> {
    let n = config.n();
    let k: Vec<C> = config.waves.iter().map(|w| w.k()).collect();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = c(1.0, 0.0);
        for l in 0..n {
            let (num, den) = if l < j {
                (k[l] + k[j], k[l] - k[j])
            } else if l > j {
                (k[j] + k[l], k[j] - k[l])
            } else {
                continue;
            };
            if den.norm() < 1e-12 {
                return Err(SgError::ConfigDegenerate(
                    "xi_weights: coincident wave vectors".into(),
                ));
            }
            v *= num / den;
        }
        out.push(v);
    }
    Ok(out)
}

/// Values of the four gauge sums at a point with a shared exponent offset.
#[derive(Debug, Clone, Copy)]
pub struct GaugeQuad {
    pub f_tilde: C,
    pub g_tilde: C,
    pub gamma: C,
    pub tau: C,
    pub exponent_offset: C,
    /// |γ²+τ²| / (|γ|²+|τ|²): 0 exactly on S, O(1) away from it.
    pub s_proximity: f64,
    pub near_singular: bool,
}

/// Light-cone jet of one complex quantity: value and D-operator derivatives
/// through mixed order (1,1).
#[derive(Debug, Clone, Copy, Default)]
pub struct CJet {
    pub v: C,
    pub d_s: C,
    pub d_t: C,
    pub d_st: C,
}

/// Hirota bilinear derivative D_s^a D_t^b F·G for a, b ≤ 1, from jets.
pub fn hirota_d(f: &CJet, g: &CJet, a: u32, b: u32) -> C {
    match (a, b) {
        (0, 0) => f.v * g.v,
        (1, 0) => f.d_s * g.v - f.v * g.d_s,
        (0, 1) => f.d_t * g.v - f.v * g.d_t,
        (1, 1) => f.d_st * g.v - f.d_s * g.d_t - f.d_t * g.d_s + f.v * g.d_st,
        _ => panic!("hirota_d supports multi-order <= (1,1)"),
    }
}

/// One summand of a gauge sum: u·e^c · exp(mx·x + my·y) with the derivative
/// multipliers for x, y, s, t attached.
#[derive(Debug, Clone, Copy)]
struct GTerm {
    mx: f64,
    my: f64,
    c: f64,
    u: C,
    ms: C,
    mt: C,
}

/// Full derivative data of one gauge sum at a point.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaugeJet {
    pub v: C,
    pub d_x: C,
    pub d_y: C,
    pub d_s: C,
    pub d_t: C,
    pub d_st: C,
}

impl GaugeJet {
    pub fn cjet(&self) -> CJet {
        CJet { v: self.v, d_s: self.d_s, d_t: self.d_t, d_st: self.d_st }
    }
}

/// η̃_j = ax·x + ay·y + cc (cc collects −η° − ξ, or the hyperbolic phase).
struct LinForm {
    ax: f64,
    ay: f64,
    cc: C,
}

fn build_sum(ks: &[C], lin: &[LinForm], parity: i32, phase_quarters: i32) -> Vec<GTerm> {
    let m = ks.len();
    let mut terms = Vec::new();
    for bits in 0..(1u32 << m) {
        let eps: Vec<f64> = (0..m)
            .map(|j| if bits & (1 << j) != 0 { -1.0 } else { 1.0 })
            .collect();
        let prod: f64 = eps.iter().product();
        if prod as i32 != parity {
            continue;
        }
        // exp(Σ (ε_j/2)(η̃_j + πi/2) + phase·πi/4), constants folded in
        let sum_eps: f64 = eps.iter().sum();
        let phase = (sum_eps + phase_quarters as f64) * std::f64::consts::FRAC_PI_4;
        let mut a = C::from_polar(1.0, phase);
        for mm in 0..m {
            for j in mm + 1..m {
                a *= ks[mm] - eps[mm] * eps[j] * ks[j];
            }
        }
        let const_exp: C = (0..m).map(|j| lin[j].cc * (eps[j] * 0.5)).sum();
        a *= const_exp.exp();
        let mx: f64 = (0..m).map(|j| eps[j] * lin[j].ax * 0.5).sum();
        let my: f64 = (0..m).map(|j| eps[j] * lin[j].ay * 0.5).sum();
        let ms: C = (0..m).map(|j| ks[j] * (eps[j] * 0.5)).sum();
        let mt: C = (0..m).map(|j| ks[j].inv() * (eps[j] * 0.5)).sum();
        let mag = a.norm();
        terms.push(GTerm { mx, my, c: mag.ln(), u: a / mag, ms, mt });
    }
    terms
}

/// Precomputed gauge-sum tables for one configuration (elliptic or
/// hyperbolic). Index order: f̃, g̃, γ, τ.
pub struct GaugeEngine {
    sums: [Vec<GTerm>; 4],
    pub k_n: C,
}

impl GaugeEngine {
    pub fn new_elliptic(config: &SolitonConfig) -> Result<Self, SgError> {
        let n = config.n();
        let k: Vec<C> = config.waves.iter().map(|w| w.k()).collect();
        let xi: Vec<C> = xi_weights(config)?.iter().map(|w| w.ln()).collect();
        let lin: Vec<LinForm> = (0..n)
            .map(|j| LinForm {
                ax: config.waves[j].p,
                ay: -config.waves[j].q,
                cc: c(-config.phases[j], 0.0) - xi[j],
            })
            .collect();
        Ok(Self::build(&k, &lin, n))
    }

    pub fn new_hyperbolic(config: &HyperbolicConfig) -> Result<Self, SgError> {
        let n = config.n();
        let k: Vec<C> = (0..n).map(|j| c(config.k(j), 0.0)).collect();
        for kk in &k {
            if kk.norm() < 1e-12 {
                return Err(SgError::ConfigDegenerate("hyperbolic k_j vanishes".into()));
            }
        }
        let lin: Vec<LinForm> = (0..n)
            .map(|j| LinForm { ax: config.pp[j], ay: config.qq[j], cc: c(config.phases[j], 0.0) })
            .collect();
        Ok(Self::build(&k, &lin, n))
    }

    fn build(k: &[C], lin: &[LinForm], n: usize) -> Self {
        let sgn = |e: i32| if e % 2 == 0 { 1 } else { -1 };
        let ni = n as i32;
        let sums = [
            build_sum(k, lin, sgn(ni), ni),
            build_sum(k, lin, sgn(ni + 1), ni - 2),
            build_sum(&k[..n - 1], &lin[..n - 1], sgn(ni - 1), ni - 1),
            build_sum(&k[..n - 1], &lin[..n - 1], sgn(ni), ni - 3),
        ];
        Self { sums, k_n: k[n - 1] }
    }

    /// Jets of (f̃, g̃, γ, τ) sharing one exponent offset, returned with it.
    pub fn eval(&self, x: f64, y: f64) -> ([GaugeJet; 4], f64) {
        let mut m = f64::NEG_INFINITY;
        for s in &self.sums {
            for t in s {
                m = m.max(t.mx * x + t.my * y + t.c);
            }
        }
        let mut out = [GaugeJet::default(); 4];
        for (o, s) in out.iter_mut().zip(&self.sums) {
            for t in s {
                let w = t.u * (t.mx * x + t.my * y + t.c - m).exp();
                o.v += w;
                o.d_x += w * t.mx;
                o.d_y += w * t.my;
                o.d_s += w * t.ms;
                o.d_t += w * t.mt;
                o.d_st += w * (t.ms * t.mt);
            }
        }
        (out, m)
    }

    pub fn quad(&self, x: f64, y: f64) -> GaugeQuad {
        let (j, m) = self.eval(x, y);
        let (gamma, tau) = (j[2].v, j[3].v);
        let prox_den = gamma.norm_sqr() + tau.norm_sqr();
        let s_proximity = if prox_den > 0.0 {
            (gamma * gamma + tau * tau).norm() / prox_den
        } else {
            0.0
        };
        GaugeQuad {
            f_tilde: j[0].v,
            g_tilde: j[1].v,
            gamma,
            tau,
            exponent_offset: c(m, 0.0),
            s_proximity,
            near_singular: s_proximity < 1e-3,
        }
    }
}

pub fn gauge_quad(config: &SolitonConfig, x: f64, y: f64) -> Result<GaugeQuad, SgError> {
    Ok(GaugeEngine::new_elliptic(config)?.quad(x, y))
}

/// Both residuals of the bilinear Bäcklund system of Lemma Back, each
/// normalized by the larger side's magnitude. G = f̃ + ig̃ (n variables),
/// F = γ + iτ (n−1 variables), bars are the formal f̃ − ig̃ / γ − iτ.
pub fn lemma_back_residual(config: &HyperbolicConfig, x: f64, z: f64) -> Result<(C, C), SgError> {
    let eng = GaugeEngine::new_hyperbolic(config)?;
    let (j, _) = eng.eval(x, z);
    let i = c(0.0, 1.0);
    let comb = |a: &GaugeJet, b: &GaugeJet, w: C| CJet {
        v: a.v + w * b.v,
        d_s: a.d_s + w * b.d_s,
        d_t: a.d_t + w * b.d_t,
        d_st: a.d_st + w * b.d_st,
    };
    let g = comb(&j[0], &j[1], i);
    let gb = comb(&j[0], &j[1], -i);
    let f = comb(&j[2], &j[3], i);
    let fb = comb(&j[2], &j[3], -i);
    let kn = eng.k_n;
    let lhs1 = hirota_d(&g, &f, 1, 0);
    let rhs1 = -kn / 2.0 * gb.v * fb.v;
    let lhs2 = hirota_d(&g, &fb, 0, 1);
    let rhs2 = -(kn * 2.0).inv() * gb.v * f.v;
    let s1 = lhs1.norm().max(rhs1.norm()).max(1e-300);
    let s2 = lhs2.norm().max(rhs2.norm()).max(1e-300);
    Ok(((lhs1 - rhs1) / s1, (lhs2 - rhs2) / s2))
}

/// Workbench tying a configuration's real tau sums and gauge sums together:
/// Eq. (uv), Γ, ξ, the singular set and the kernel lift all live here.
pub struct BacklundLab {
    pub config: SolitonConfig,
    pub tau: TauEngine,
    pub gauge: GaugeEngine,
}

/// A detected point of S = {γ² + τ² = 0}.
#[derive(Debug, Clone, Copy)]
pub struct SingularPoint {
    pub x: f64,
    pub y: f64,
    /// |γ²+τ²| relative to |γ|²+|τ|² after refinement.
    pub residual: f64,
    pub component_id: usize,
}

impl BacklundLab {
    pub fn new(config: &SolitonConfig) -> Result<Self, SgError> {
        Ok(Self {
            config: config.clone(),
            tau: TauEngine::new(config)?,
            gauge: GaugeEngine::new_elliptic(config)?,
        })
    }

    /// h(x,y) = |τ/γ|² − 1; vanishes exactly on S because τ/γ is imaginary.
    pub fn s_indicator(&self, x: f64, y: f64) -> f64 {
        let (j, _) = self.gauge.eval(x, y);
        let r = j[3].v / j[2].v;
        r.norm_sqr() - 1.0
    }

    /// cos((u+v)/2) computed rationally from the two tau pairs (complex).
    fn cos_half_sum(&self, x: f64, y: f64) -> C {
        let t = self.tau.tau_pair(x, y);
        let (j, _) = self.gauge.eval(x, y);
        let (gamma, tau) = (j[2].v, j[3].v);
        let g2t2 = gamma * gamma + tau * tau;
        let cv = (gamma * gamma - tau * tau) / g2t2;
        let sv = 2.0 * gamma * tau / g2t2;
        let den = t.f_hat * t.f_hat + t.g_hat * t.g_hat;
        let cu = (t.f_hat * t.f_hat - t.g_hat * t.g_hat) / den;
        let su = 2.0 * t.f_hat * t.g_hat / den;
        cv * cu - sv * su
    }

    /// Γ(x,y) = 2k_n(fγ − gτ)²/((f²+g²)(γ²+τ²)), evaluated in the
    /// scale-invariant ratio form 2k_n(1−ρσ)²/((1+ρ²)(1+σ²)).
    pub fn gamma_field(&self, x: f64, y: f64) -> C {
        let t = self.tau.tau_pair(x, y);
        let rho = t.g_hat / t.f_hat;
        let (j, _) = self.gauge.eval(x, y);
        let sigma = j[3].v / j[2].v;
        let one = c(1.0, 0.0);
        let num = one - sigma * rho;
        2.0 * self.gauge.k_n * num * num / ((1.0 + rho * rho) * (one + sigma * sigma))
    }

    /// C_R + iC_I = Γ − k_n = k_n cos((u+v)/2): the coefficient field of the
    /// linearized system and of ∇ ln ξ.
    pub fn c_field(&self, x: f64, y: f64) -> C {
        self.gauge.k_n * self.cos_half_sum(x, y)
    }

    /// cos v from the γ, τ ratio (real up to roundoff for real parameters).
    pub fn cos_v(&self, x: f64, y: f64) -> C {
        let (j, _) = self.gauge.eval(x, y);
        let (gamma, tau) = (j[2].v, j[3].v);
        let a = gamma * gamma - tau * tau;
        let b = 2.0 * gamma * tau;
        (a * a - b * b) / ((gamma * gamma + tau * tau) * (gamma * gamma + tau * tau))
    }

    /// Residuals of the two equations of Eq. (uv) (k-swapped form):
    /// R1 = u_x + i v_y − k_n sin((u+v)/2) − k̄_n sin((u−v)/2),
    /// R2 = i u_y + v_x + k_n sin((u+v)/2) − k̄_n sin((u−v)/2).
    pub fn elliptic_backlund_residual(&self, x: f64, y: f64) -> Result<(C, C), SgError> {
        let (j, _) = self.gauge.eval(x, y);
        let (gamma, tau) = (j[2].v, j[3].v);
        let g2t2 = gamma * gamma + tau * tau;
        if (g2t2.norm()) < 0.05 * (gamma.norm_sqr() + tau.norm_sqr()) {
            return Err(SgError::NearSingular(0.1));
        }
        let uj = self.tau.eval_jet(x, y);
        let t = self.tau.tau_pair(x, y);
        let den = t.f_hat * t.f_hat + t.g_hat * t.g_hat;
        let cu = (t.f_hat * t.f_hat - t.g_hat * t.g_hat) / den;
        let su = 2.0 * t.f_hat * t.g_hat / den;
        let cv = (gamma * gamma - tau * tau) / g2t2;
        let sv = 2.0 * gamma * tau / g2t2;
        let vx = 4.0 * (gamma * j[3].d_x - tau * j[2].d_x) / g2t2;
        let vy = 4.0 * (gamma * j[3].d_y - tau * j[2].d_y) / g2t2;
        let spl = su * cv + sv * cu;
        let smi = su * cv - sv * cu;
        let kn = self.gauge.k_n;
        let knb = kn.conj();
        let i = c(0.0, 1.0);
        let r1 = uj.d_x + i * vy - kn * spl - knb * smi;
        let r2 = i * uj.d_y + vx + kn * spl - knb * smi;
        Ok((r1, r2))
    }

    /// Scan a window for S, refining sign changes of the indicator h along
    /// horizontal lines by bisection; points are clustered into components
    /// by proximity and returned sorted by (y, x).
    pub fn singular_set_scan(
        &self,
        window: (f64, f64, f64, f64),
        step: f64,
    ) -> Result<Vec<SingularPoint>, SgError> {
        let (x0, x1, y0, y1) = window;
        if step > 0.1 {
            return Err(SgError::Invariant("singular_set_scan needs step <= 0.1".into()));
        }
        let mut pts: Vec<(f64, f64, f64)> = Vec::new();
        let ny = ((y1 - y0) / step).ceil() as usize;
        let nx = ((x1 - x0) / step).ceil() as usize;
        for iy in 0..=ny {
            let y = y0 + (y1 - y0) * iy as f64 / ny.max(1) as f64;
            let mut prev = self.s_indicator(x0, y);
            for ix in 1..=nx {
                let x = x0 + (x1 - x0) * ix as f64 / nx as f64;
                let h = self.s_indicator(x, y);
                if prev.is_finite() && h.is_finite() && prev * h < 0.0 {
                    let (mut a, mut b) = (x - (x1 - x0) / nx as f64, x);
                    let mut ha = prev;
                    for _ in 0..80 {
                        let mid = 0.5 * (a + b);
                        let hm = self.s_indicator(mid, y);
                        if ha * hm <= 0.0 {
                            b = mid;
                        } else {
                            a = mid;
                            ha = hm;
                        }
                    }
                    let xs = 0.5 * (a + b);
                    let q = self.gauge.quad(xs, y);
                    pts.push((xs, y, q.s_proximity));
                }
                prev = h;
            }
        }
        // proximity clustering: same component if within 3 scan steps
        let mut comp = vec![usize::MAX; pts.len()];
        let mut next = 0usize;
        let link = 3.0 * step;
        pts.sort_by(|a, b| (a.1, a.0).partial_cmp(&(b.1, b.0)).unwrap());
        for i in 0..pts.len() {
            for j in 0..i {
                let d = (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
                if d < link + 1e-12 {
                    comp[i] = comp[j];
                    break;
                }
            }
            if comp[i] == usize::MAX {
                comp[i] = next;
                next += 1;
            }
        }
        Ok(pts
            .into_iter()
            .zip(comp)
            .map(|((x, y, residual), component_id)| SingularPoint { x, y, residual, component_id })
            .collect())
    }

    /// S crossings on the horizontal segment [a, b] × {y}.
    pub fn s_crossings_on_line(&self, y: f64, a: f64, b: f64, step: f64) -> Vec<f64> {
        let n = ((b - a) / step).ceil().max(1.0) as usize;
        let mut out = Vec::new();
        let mut prev = self.s_indicator(a, y);
        for i in 1..=n {
            let x = a + (b - a) * i as f64 / n as f64;
            let h = self.s_indicator(x, y);
            if prev.is_finite() && h.is_finite() && prev * h < 0.0 {
                let (mut lo, mut hi) = (a + (b - a) * (i - 1) as f64 / n as f64, x);
                let mut hlo = prev;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let hm = self.s_indicator(mid, y);
                    if hlo * hm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        hlo = hm;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            prev = h;
        }
        out
    }

    /// Leftmost abscissa where the −∞ tail is reached on the line {y}:
    /// |Γ − 2k_n| < tol there.
    fn tail_start(&self, x: f64, y: f64, tol: f64) -> Result<f64, SgError> {
        let two_kn = 2.0 * self.gauge.k_n;
        let mut x0 = x.min(0.0) - 20.0;
        for _ in 0..15 {
            if (self.gamma_field(x0, y) - two_kn).norm() < tol {
                return Ok(x0);
            }
            x0 -= 20.0;
        }
        Err(SgError::QuadratureFailure(tol))
    }

    /// ξ(x,y) ≥ 0 via ln ξ = p_n x − q_n y + ∫_{−∞}^x (Re Γ − 2p_n) ds.
    /// Re Γ has simple poles with residue exactly 1 at S crossings; each pole
    /// is handled in a window [s₀−d, s₀+d] where the log term is integrated
    /// analytically and the regular part is Richardson-extrapolated from
    /// symmetric samples, so ξ vanishes to first order on S and the adaptive
    /// quadrature only ever sees a smooth integrand.
    pub fn xi_eval(&self, x: f64, y: f64) -> Result<f64, SgError> {
        let pn = self.gauge.k_n.re;
        let qn = self.gauge.k_n.im;
        let x_lo = self.tail_start(x, y, 1e-10)?;
        let f = |s: f64| self.gamma_field(s, y).re - 2.0 * pn;
        let d = 0.05f64;
        let poles = self.s_crossings_on_line(y, x_lo, x + d, 0.05);
        for w in poles.windows(2) {
            if w[1] - w[0] < 2.0 * d {
                return Err(SgError::QuadratureFailure(1e-6));
            }
        }
        let mut ln_xi = pn * x - qn * y;
        let mut a = x_lo;
        for &s0 in &poles {
            let (wa, wb) = ((s0 - d).max(x_lo), (s0 + d).min(x));
            if wb <= a {
                continue;
            }
            // smooth stretch before the window
            if wa > a {
                ln_xi += adaptive_simpson(&f, a, wa, 1e-9, 30)
                    .ok_or(SgError::QuadratureFailure(1e-6))?;
            }
            // regular part w(s) = f(s) − 1/(s−s0) = c0 + c2(s−s0)² + ... ;
            // the pole cancels exactly in the symmetric sample sum, the odd
            // terms drop with it, and Richardson removes c2
            let wreg = |dd: f64| 0.5 * (f(s0 - dd) + f(s0 + dd));
            let (w1, w2) = (wreg(d), wreg(0.5 * d));
            let c0 = (4.0 * w2 - w1) / 3.0;
            let c2 = (w1 - w2) / (0.75 * d * d);
            let cube = |t: f64| t * t * t / 3.0;
            if (x - s0).abs() < 1e-13 {
                return Ok(0.0); // on S: first-order zero of xi
            }
            ln_xi += (wb - s0).abs().ln() - (wa - s0).abs().ln();
            ln_xi += c0 * (wb - wa) + c2 * (cube(wb - s0) - cube(wa - s0));
            a = wb;
        }
        if x > a {
            ln_xi +=
                adaptive_simpson(&f, a, x, 1e-9, 30).ok_or(SgError::QuadratureFailure(1e-6))?;
        }
        Ok(ln_xi.exp())
    }

    /// The lift of Eq. (fi): given η in the kernel at u (with jets), produce
    /// ψ with φ = iψ solving the linearized Bäcklund system, by integrating
    /// ∂_x ψ = −C_R ψ − (∂_y η + C_I η) from the decaying −∞ tail (the
    /// integrating-factor form ψ = ξ⁻¹ ∫ ξ·(−∂_yη − C_Iη) ds).
    /// Refuses lines passing within 0.5 of S.
    pub fn lift_kernel<F>(&self, eta: &F, x: f64, y: f64) -> Result<f64, SgError>
    where
        F: Fn(f64, f64) -> Jet2,
    {
        Ok(self.lift_on_line(eta, y, &[x])?[0])
    }

    /// Same lift evaluated at several abscissae on one line, reusing a single
    /// ODE integration.
    pub fn lift_on_line<F>(&self, eta: &F, y: f64, xs: &[f64]) -> Result<Vec<f64>, SgError>
    where
        F: Fn(f64, f64) -> Jet2,
    {
        let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let x_lo = self.tail_start(x_max, y, 1e-9)?;
        // refuse lines grazing S: scan a strip of half-width 0.5 around the line
        let strip = self.singular_set_scan((x_lo, x_max + 0.5, y - 0.5, y + 0.5), 0.1)?;
        if !strip.is_empty() {
            return Err(SgError::NearSingular(0.5));
        }
        let step = 0.005f64;
        // the ODE coefficient is bounded by ~2|k_n| = 2 off S, so step·max|C|
        // stays far below the 0.1 contract; assert it anyway
        let cmax = 2.0;
        if step * cmax > 0.1 {
            return Err(SgError::StepTooCoarse(step * cmax));
        }
        let rhs = |s: f64, psi: f64| {
            let cc = self.c_field(s, y);
            let ej = eta(s, y);
            -cc.re * psi - ej.d_y - cc.im * ej.value
        };
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
        let mut out = vec![0.0f64; xs.len()];
        let mut s = x_lo;
        let mut psi = 0.0f64;
        for &idx in &order {
            let target = xs[idx];
            while s < target - 1e-12 {
                let h = step.min(target - s);
                let k1 = rhs(s, psi);
                let k2 = rhs(s + 0.5 * h, psi + 0.5 * h * k1);
                let k3 = rhs(s + 0.5 * h, psi + 0.5 * h * k2);
                let k4 = rhs(s + h, psi + h * k3);
                psi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                s += h;
            }
            out[idx] = psi;
        }
        Ok(out)
    }
}

/// Adaptive Simpson quadrature; returns None if the recursion depth is
/// exhausted before the local error estimate meets the tolerance.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Option<f64> {
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        let l = rec(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)?;
        let r = rec(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)?;
        Some(l + r)
    }
    if a == b {
        return Some(0.0);
    }
    // seed with a fixed split so narrow features are not missed outright
    let pieces = 32usize;
    let mut total = 0.0;
    for i in 0..pieces {
        let aa = a + (b - a) * i as f64 / pieces as f64;
        let bb = a + (b - a) * (i + 1) as f64 / pieces as f64;
        let m = 0.5 * (aa + bb);
        let (fa, fm, fb) = (f(aa), f(m), f(bb));
        let whole = simpson(aa, bb, fa, fm, fb);
        total += rec(f, aa, bb, fa, fm, fb, whole, tol / pieces as f64, depth)?;
    }
    Some(total)
}
