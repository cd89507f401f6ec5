//! End geometry: predicted asymptotic directions, nodal-set tracing on a
//! circular band, nearest-angle matching, and transverse profile comparison
//! against the heteroclinic H(t) = 4 arctan eᵗ − π.

use crate::config::{SgError, SolitonConfig};
use crate::tau::TauEngine;

/// One measured end of U_n − π.
#[derive(Debug, Clone)]
pub struct EndDescriptor {
    pub index: usize,
    /// measured outward unit direction of the fitted asymptotic line
    pub direction: [f64; 2],
    pub measured_angle: f64,
    pub predicted_angle: f64,
    /// foot of the perpendicular from the origin to the fitted line
    /// (fitted offset, reported without a correctness claim)
    pub line_point: [f64; 2],
    pub profile_error: f64,
}

/// The 2n unit end directions {±(q_j, p_j)}: each phase η_j = const runs
/// along (q_j, p_j).
pub fn predicted_ends(config: &SolitonConfig) -> Result<Vec<[f64; 2]>, SgError> {
    let mut dirs: Vec<[f64; 2]> = Vec::new();
    for w in &config.waves {
        dirs.push([w.q, w.p]);
        dirs.push([-w.q, -w.p]);
    }
    for i in 0..dirs.len() {
        for l in i + 1..dirs.len() {
            let dot = dirs[i][0] * dirs[l][0] + dirs[i][1] * dirs[l][1];
            if dot > 1.0 - 1e-12 {
                return Err(SgError::ConfigDegenerate(format!(
                    "ends {i} and {l} are parallel; the tracer does not support parallel ends"
                )));
            }
        }
    }
    Ok(dirs)
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d = std::f64::consts::TAU - d;
    }
    d
}

/// Zero crossings of U_n − π on the circle of radius r, as angles.
fn circle_crossings(eng: &TauEngine, r: f64, samples: usize) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let val = |th: f64| eng.eval_solution(r * th.cos(), r * th.sin()) - std::f64::consts::PI;
    let mut crossings = Vec::new();
    let mut prev = val(0.0);
    for i in 1..=samples {
        let th = i as f64 * tau / samples as f64;
        let cur = val(th);
        if prev == 0.0 {
            crossings.push((i - 1) as f64 * tau / samples as f64);
        } else if prev * cur < 0.0 {
            let (mut a, mut b) = ((i - 1) as f64 * tau / samples as f64, th);
            let mut fa = prev;
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                let fm = val(mid);
                if fa * fm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            crossings.push(0.5 * (a + b));
        }
        prev = cur;
    }
    crossings
}

/// Trace the nodal set of U_n − π on circles spanning a band of the given
/// width around r_trace, cluster the crossings into arcs, fit a line per
/// arc, and match fitted angles to the predictions.
pub fn trace_nodal(
    config: &SolitonConfig,
    r_trace: f64,
    band: f64,
) -> Result<Vec<EndDescriptor>, SgError> {
    if r_trace < 25.0 {
        return Err(SgError::Invariant("trace radius must be >= 25".into()));
    }
    let predictions = predicted_ends(config)?;
    let expected = predictions.len();
    let eng = TauEngine::new(config)?;
    let circles = 5usize;
    let samples = 4096usize;
    let radii: Vec<f64> = (0..circles)
        .map(|i| r_trace - 0.5 * band + band * i as f64 / (circles - 1) as f64)
        .collect();
    let per_circle: Vec<Vec<f64>> =
        radii.iter().map(|&r| circle_crossings(&eng, r, samples)).collect();
    for (c, angles) in per_circle.iter().enumerate() {
        if angles.len() != expected {
            return Err(SgError::CountMismatch { found: angles.len(), expected });
        }
        let _ = c;
    }

    // cluster by nearest angle to the middle circle's crossings
    let reference = &per_circle[circles / 2];
    let mut arcs: Vec<Vec<[f64; 2]>> = vec![Vec::new(); expected];
    for (ci, angles) in per_circle.iter().enumerate() {
        for &th in angles {
            let (best, d) = reference
                .iter()
                .enumerate()
                .map(|(bi, &rt)| (bi, angle_diff(th, rt)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            if d > 0.2 {
                return Err(SgError::Invariant(format!(
                    "crossing at angle {th:.4} on circle {ci} matches no arc (gap {d:.4})"
                )));
            }
            arcs[best].push([radii[ci] * th.cos(), radii[ci] * th.sin()]);
        }
    }

    // total least squares line through each arc
    let mut fitted: Vec<(f64, [f64; 2], [f64; 2])> = Vec::new(); // (angle, dir, foot)
    for pts in &arcs {
        if pts.len() != circles {
            return Err(SgError::CountMismatch { found: pts.len(), expected: circles });
        }
        let n = pts.len() as f64;
        let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in pts {
            let (dx, dy) = (p[0] - cx, p[1] - cy);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        // principal eigenvector of [[sxx,sxy],[sxy,syy]]
        let tr = sxx + syy;
        let det = sxx * syy - sxy * sxy;
        let lam = 0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt();
        let (mut dx, mut dy) = if sxy.abs() > 1e-300 {
            (lam - syy, sxy)
        } else if sxx >= syy {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let norm = (dx * dx + dy * dy).sqrt();
        dx /= norm;
        dy /= norm;
        // orient outward: along the centroid
        if dx * cx + dy * cy < 0.0 {
            dx = -dx;
            dy = -dy;
        }
        // foot of perpendicular from the origin to the fitted line
        let t = cx * dx + cy * dy;
        let foot = [cx - t * dx, cy - t * dy];
        fitted.push((dy.atan2(dx), [dx, dy], foot));
    }

    // nearest-angle assignment, smallest differences first
    let pred_angles: Vec<f64> = predictions.iter().map(|d| d[1].atan2(d[0])).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (fi, f) in fitted.iter().enumerate() {
        for (pi, &pa) in pred_angles.iter().enumerate() {
            pairs.push((angle_diff(f.0, pa), fi, pi));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut fit_used = vec![false; expected];
    let mut pred_used = vec![false; expected];
    let mut assignment = vec![usize::MAX; expected]; // fit index -> prediction
    for (_, fi, pi) in pairs {
        if !fit_used[fi] && !pred_used[pi] {
            fit_used[fi] = true;
            pred_used[pi] = true;
            assignment[fi] = pi;
        }
    }

    let mut out = Vec::with_capacity(expected);
    for (fi, &(angle, dir, foot)) in fitted.iter().enumerate() {
        let pi = assignment[fi];
        let mut end = EndDescriptor {
            index: pi,
            direction: dir,
            measured_angle: angle,
            predicted_angle: pred_angles[pi],
            line_point: foot,
            profile_error: f64::NAN,
        };
        end.profile_error = end_profile_error(config, &end, r_trace)?;
        out.push(end);
    }
    out.sort_by_key(|e| e.index);
    Ok(out)
}

/// Heteroclinic profile with odd symmetry: H(−∞) = −π, H(0) = 0, H(∞) = π.
pub fn h_profile(t: f64) -> f64 {
    crate::tau::heteroclinic(t)
}

/// sup over the transverse segment of half-length 10 at arclength s of
/// |(U_n − π) − σH(t − t₀)|, with t₀ fitted from the zero crossing and the
/// sign σ chosen to minimize the error.
pub fn end_profile_error(
    config: &SolitonConfig,
    end: &EndDescriptor,
    s: f64,
) -> Result<f64, SgError> {
    if s < 25.0 {
        return Err(SgError::Invariant("profile arclength must be >= 25".into()));
    }
    let eng = TauEngine::new(config)?;
    let d = end.direction;
    let normal = [-d[1], d[0]];
    let center = [end.line_point[0] + s * d[0], end.line_point[1] + s * d[1]];
    let slice = |t: f64| {
        eng.eval_solution(center[0] + t * normal[0], center[1] + t * normal[1])
            - std::f64::consts::PI
    };
    let half = 10.0;
    let step = 0.05;
    let m = (2.0 * half / step) as usize;
    // zero crossing by scan + bisection
    let mut t0 = None;
    let mut prev_t = -half;
    let mut prev_v = slice(prev_t);
    for i in 1..=m {
        let t = -half + i as f64 * step;
        let v = slice(t);
        if prev_v == 0.0 {
            t0 = Some(prev_t);
            break;
        }
        if prev_v * v < 0.0 {
            let (mut a, mut b, mut fa) = (prev_t, t, prev_v);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                let fm = slice(mid);
                if fa * fm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            t0 = Some(0.5 * (a + b));
            break;
        }
        prev_t = t;
        prev_v = v;
    }
    let t0 = t0.ok_or(SgError::NoZeroCrossing)?;
    let mut err_plus = 0.0f64;
    let mut err_minus = 0.0f64;
    for i in 0..=m {
        let t = -half + i as f64 * step;
        let v = slice(t);
        let h = h_profile(t - t0);
        err_plus = err_plus.max((v - h).abs());
        err_minus = err_minus.max((v + h).abs());
    }
    Ok(err_plus.min(err_minus))
}
