//! Parameter sets defining the elliptic and hyperbolic soliton families.

use num_complex::Complex64;
use thiserror::Error;

/// Hard cap on the number of wave vectors: evaluation cost is O(2^n) per point.
pub const MAX_N: usize = 12;

const UNIT_TOL: f64 = 1e-12;
const DISTINCT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SgError {
    #[error("degenerate configuration: {0}")]
    ConfigDegenerate(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("evaluation point within {0} of the singular set S")]
    NearSingular(f64),
    #[error("quadrature failed to reach {0:.1e} relative accuracy")]
    QuadratureFailure(f64),
    #[error("factorization breakdown at pivot {0}")]
    FactorizationBreakdown(usize),
    #[error("integration step too coarse: step*max|coefficient| = {0:.3e} > 0.1")]
    StepTooCoarse(f64),
    #[error("traced {found} nodal arcs, expected {expected}")]
    CountMismatch { found: usize, expected: usize },
    #[error("transverse slice has no zero crossing")]
    NoZeroCrossing,
}

/// Unit wave vector k = p + iq with p^2 + q^2 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    pub p: f64,
    pub q: f64,
}

impl WaveVector {
    pub fn new(p: f64, q: f64) -> Result<Self, SgError> {
        let r = p * p + q * q - 1.0;
        if r.abs() > UNIT_TOL {
            return Err(SgError::Invariant(format!(
                "|p^2+q^2-1| = {:.3e} exceeds {UNIT_TOL:.0e} for (p,q)=({p},{q})",
                r.abs()
            )));
        }
        Ok(Self { p, q })
    }

    pub fn from_theta(theta: f64) -> Self {
        Self { p: theta.cos(), q: theta.sin() }
    }

    pub fn k(&self) -> Complex64 {
        Complex64::new(self.p, self.q)
    }
}

/// Parameters of the 2n-end solution U_n: wave vectors k_j and phases eta_j^0,
/// entering through eta_j = p_j x - q_j y - eta_j^0.
#[derive(Debug, Clone)]
pub struct SolitonConfig {
    pub waves: Vec<WaveVector>,
    pub phases: Vec<f64>,
}

impl SolitonConfig {
    pub fn new(waves: Vec<WaveVector>, phases: Vec<f64>) -> Result<Self, SgError> {
        if waves.is_empty() || waves.len() != phases.len() {
            return Err(SgError::Invariant(format!(
                "need matching nonempty waves/phases, got {}/{}",
                waves.len(),
                phases.len()
            )));
        }
        if waves.len() > MAX_N {
            return Err(SgError::Invariant(format!(
                "n = {} exceeds the cap {MAX_N}",
                waves.len()
            )));
        }
        for (j, a) in waves.iter().enumerate() {
            for b in waves.iter().skip(j + 1) {
                let same = (a.p - b.p).hypot(a.q - b.q);
                let opp = (a.p + b.p).hypot(a.q + b.q);
                if same < DISTINCT_TOL || opp < DISTINCT_TOL {
                    return Err(SgError::ConfigDegenerate(format!(
                        "wave vectors ({},{}) and ({},{}) coincide or are opposite",
                        a.p, a.q, b.p, b.q
                    )));
                }
            }
        }
        Ok(Self { waves, phases })
    }

    pub fn n(&self) -> usize {
        self.waves.len()
    }

    /// The single kink: k = (1,0), eta^0 = 0 unless given.
    pub fn kink(eta0: f64) -> Self {
        Self::new(vec![WaveVector { p: 1.0, q: 0.0 }], vec![eta0]).unwrap()
    }

    /// The four-end family phi_{p,q}: n = 2 with k = (p, +-q), eta^0 = ln(q/p).
    ///
    /// The paper states eta^0 = ln(p/q); the closed form
    /// 4 arctan(p cosh(qy) / (q cosh(px))) is reproduced only with ln(q/p)
    /// (checked by direct evaluation), so that sign is used here.
    pub fn four_end(p: f64, q: f64) -> Result<Self, SgError> {
        if q <= 0.0 || p <= 0.0 {
            return Err(SgError::ConfigDegenerate("four_end needs p > 0, q > 0".into()));
        }
        let e0 = (q / p).ln();
        Ok(Self::new(
            vec![WaveVector::new(p, q)?, WaveVector::new(p, -q)?],
            vec![e0, e0],
        )?)
    }

    /// The saddle solution: four_end with p = q = sqrt(2)/2.
    pub fn saddle() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::four_end(s, s).unwrap()
    }
}

/// Parameters of the hyperbolic n-soliton: P_j^2 - Q_j^2 = 1,
/// eta_j = P_j x + Q_j z + eta_j^0 (all real; the Lemma Back hypothesis).
#[derive(Debug, Clone)]
pub struct HyperbolicConfig {
    pub pp: Vec<f64>,
    pub qq: Vec<f64>,
    pub phases: Vec<f64>,
}

impl HyperbolicConfig {
    pub fn new(pp: Vec<f64>, qq: Vec<f64>, phases: Vec<f64>) -> Result<Self, SgError> {
        let n = pp.len();
        if n == 0 || qq.len() != n || phases.len() != n {
            return Err(SgError::Invariant("mismatched parameter lists".into()));
        }
        if n > MAX_N {
            return Err(SgError::Invariant(format!("n = {n} exceeds the cap {MAX_N}")));
        }
        for j in 0..n {
            if (pp[j] * pp[j] - qq[j] * qq[j] - 1.0).abs() > UNIT_TOL {
                return Err(SgError::Invariant(format!(
                    "|P^2-Q^2-1| violated at index {j}"
                )));
            }
        }
        for j in 0..n {
            for l in j + 1..n {
                let den = (pp[j] + pp[l]).powi(2) - (qq[j] + qq[l]).powi(2);
                if den.abs() < 1e-14 {
                    return Err(SgError::ConfigDegenerate(format!(
                        "alpha({j},{l}) denominator vanishes"
                    )));
                }
            }
        }
        Ok(Self { pp, qq, phases })
    }

    /// Build from rapidities: P = cosh(theta), Q = sinh(theta).
    pub fn from_rapidities(thetas: &[f64], phases: Vec<f64>) -> Result<Self, SgError> {
        Self::new(
            thetas.iter().map(|t| t.cosh()).collect(),
            thetas.iter().map(|t| t.sinh()).collect(),
            phases,
        )
    }

    pub fn n(&self) -> usize {
        self.pp.len()
    }

    /// k_j = P_j + Q_j (positive real).
    pub fn k(&self, j: usize) -> f64 {
        self.pp[j] + self.qq[j]
    }
}
