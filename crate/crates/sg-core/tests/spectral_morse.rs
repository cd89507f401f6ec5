//! Inertia counting, shift-invert Lanczos cross-checks, and Morse index
//! certification for the linearized operator −Δ + cos U_n.

use sg_core::*;

#[test]
fn grid_spec_validation() {
    assert!(GridSpec::new(30.0, 0.25).is_ok());
    // R/h not an integer
    assert!(GridSpec::new(30.0, 0.23).is_err());
    // h too coarse
    assert!(GridSpec::new(31.0, 0.31).is_err());
    // box too small
    assert!(GridSpec::new(10.0, 0.25).is_err());
    let g = GridSpec::new(30.0, 0.25).unwrap();
    assert_eq!(g.interior(), 239);
    assert!((g.node(0) - (-29.75)).abs() < 1e-12);
    assert!((g.node(238) - 29.75).abs() < 1e-12);
}

// [TRIVIAL] diagonal inertia examples pinned by the contract
#[test]
fn diagonal_inertia_examples() {
    let a = BandMatrix::from_diag(&[-1.0, 2.0, 3.0]);
    assert_eq!(count_negative_matrix(&a, 0.1).unwrap(), 1);
    let id = BandMatrix::from_diag(&[1.0; 7]);
    assert_eq!(count_negative_matrix(&id, 0.1).unwrap(), 0);
}

// [TRIVIAL] far-field diagonal entries and exact symmetry of the assembled band
#[test]
fn assembled_operator_structure() {
    let m = 6usize;
    let h = 0.25;
    let cosu = vec![1.0; m * m]; // far-field potential limit
    let a = BandMatrix::from_operator(&cosu, m, h, 0.0);
    assert_eq!(a.n, m * m);
    assert_eq!(a.bw, m);
    let ld = a.bw + 1;
    let inv_h2 = 1.0 / (h * h);
    // expand to dense and check symmetry is exact plus stencil values
    let n = a.n;
    let mut dense = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..=a.bw.min(n - 1 - j) {
            let v = a.cols[j * ld + k];
            dense[(j + k) * n + j] = v;
            dense[j * n + (j + k)] = v;
        }
    }
    for i in 0..n {
        for j in 0..n {
            assert_eq!(dense[i * n + j], dense[j * n + i]);
        }
        assert_eq!(dense[i * n + i], 4.0 * inv_h2 + 1.0);
    }
    // interior node (2,2): four neighbours at -1/h²
    let idx = 2 * m + 2;
    assert_eq!(dense[idx * n + idx - 1], -inv_h2);
    assert_eq!(dense[idx * n + idx + 1], -inv_h2);
    assert_eq!(dense[idx * n + idx - m], -inv_h2);
    assert_eq!(dense[idx * n + idx + m], -inv_h2);
    // row-end node (1, m-1): no right neighbour
    let idx = m + (m - 1);
    assert_eq!(dense[idx * n + idx + 1], 0.0);
}

// [DERIVED] 1D discrete Laplacian on (0,π): eigenvalues (2/h²)(1−cos kh),
// k = 1..n, close to k² for small k
#[test]
fn sturm_and_inertia_agree_on_1d_laplacian() {
    let m = 99usize;
    let h = std::f64::consts::PI / 100.0;
    let diag = 2.0 / (h * h);
    let off = -1.0 / (h * h);
    let alpha = vec![diag; m];
    let beta = vec![off; m - 1];
    let mut cols = vec![0.0; m * 2];
    for j in 0..m {
        cols[j * 2] = diag;
        if j + 1 < m {
            cols[j * 2 + 1] = off;
        }
    }
    for thresh in [0.5, 10.25, 30.0, 120.0] {
        let band = BandMatrix { n: m, bw: 1, cols: cols.clone() };
        let inertia = count_negative_matrix(&band, -thresh).unwrap();
        assert_eq!(inertia, sturm_count(&alpha, &beta, thresh));
    }
    // eigenvalues below 10.25 are ~1, 4, 9
    let eigs = tridiag_eigenvalues(&alpha, &beta);
    assert!((eigs[0] - 1.0).abs() < 1e-3);
    assert!((eigs[1] - 4.0).abs() < 5e-3);
    assert!((eigs[2] - 9.0).abs() < 2e-2);
}

// [TRIVIAL] 2x2 tridiagonal with known eigenvalues 1 and 3
#[test]
fn tridiag_eigenvalues_small() {
    let eigs = tridiag_eigenvalues(&[2.0, 2.0], &[1.0]);
    assert!((eigs[0] - 1.0).abs() < 1e-10);
    assert!((eigs[1] - 3.0).abs() < 1e-10);
}

// [DERIVED] LDLᵀ solve against a direct band multiply on a diagonally
// dominant random banded matrix
#[test]
fn ldlt_solve_roundtrip() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let n = 60usize;
    let bw = 5usize;
    let ld = bw + 1;
    let mut cols = vec![0.0; n * ld];
    for j in 0..n {
        for k in 1..=bw.min(n - 1 - j) {
            cols[j * ld + k] = rng.gen_range(-1.0..1.0);
        }
        cols[j * ld] = 2.0 * (2.0 * bw as f64); // dominance => SPD
    }
    let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // b = A x via the symmetric band
    let mut b = vec![0.0; n];
    for j in 0..n {
        for k in 0..=bw.min(n - 1 - j) {
            let v = cols[j * ld + k];
            b[j + k] += v * x_true[j];
            if k > 0 {
                b[j] += v * x_true[j + k];
            }
        }
    }
    let mut a = BandMatrix { n, bw, cols };
    let negs = a.ldlt_inertia_in_place().unwrap();
    assert_eq!(negs, 0);
    a.ldlt_solve(&mut b);
    for (xa, xb) in b.iter().zip(&x_true) {
        assert!((xa - xb).abs() < 1e-10);
    }
}

// [DERIVED] 1D sanity from the contract: −d²/dx² + cos(4 arctan eˣ) on
// [−30,30], h=0.05, has exactly one eigenvalue below 0.5 and none below
// −1e−3 (translation kernel sits at 0)
#[test]
fn one_dimensional_kink_sanity() {
    let r = 30.0;
    let h = 0.05;
    let m = (2.0 * r / h) as usize - 1;
    let inv_h2 = 1.0 / (h * h);
    let alpha: Vec<f64> = (0..m)
        .map(|i| {
            let x = -r + (i + 1) as f64 * h;
            let u = 4.0 * x.exp().atan();
            2.0 * inv_h2 + u.cos()
        })
        .collect();
    let beta = vec![-inv_h2; m - 1];
    assert_eq!(sturm_count(&alpha, &beta, 0.5), 1);
    assert_eq!(sturm_count(&alpha, &beta, -1e-3), 0);
}

// [PAPER] §6: the Morse index of the n=2 saddle is 1; inertia count on the
// contract's pinned grid
#[test]
fn saddle_count_negative_paper_grid() {
    let config = SolitonConfig::saddle();
    let grid = GridSpec::new(30.0, 0.25).unwrap();
    let cosu = sample_cos_u(&config, &grid).unwrap();
    let c = count_negative(&cosu, grid.interior(), grid.h, 0.02).unwrap();
    assert_eq!(c, 1);
}

// Dual route: the iterative count must reproduce the inertia count, never be
// derived from it. Also checks the kernel cluster and the spectral gap.
#[test]
fn saddle_lanczos_agrees_with_inertia() {
    let config = SolitonConfig::saddle();
    let grid = GridSpec::new(30.0, 0.25).unwrap();
    let delta = 0.02;
    let cosu = sample_cos_u(&config, &grid).unwrap();
    let inertia = count_negative(&cosu, grid.interior(), grid.h, delta).unwrap();
    let survey = lanczos_survey(&cosu, grid.interior(), grid.h, -delta / 2.0, 240).unwrap();
    let iterative = survey.below.iter().filter(|&&l| l < -delta).count();
    assert_eq!(inertia, iterative);
    assert_eq!(inertia, 1);
    // kernel cluster: n = 2 eigenvalues within 5e-3 of zero
    let cluster = survey.near_zero.iter().filter(|l| l.abs() < 5e-3).count();
    assert!(cluster >= 2, "cluster {:?}", survey.near_zero);
    // no eigenvalue below -1.1
    for &l in &survey.below {
        assert!(l >= -1.1);
    }
    // gap between negatives and the near-zero cluster
    let top = survey.below.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(top < -10.0 * delta, "gap violated: top negative {top}");
}

// [PAPER] Theorem Main2 with n=1: Morse index 0; light schedule keeps the
// unit test fast, the default schedule runs in acceptance
#[test]
fn kink_morse_index_zero() {
    let config = SolitonConfig::kink(0.0);
    let schedule = [GridSpec::new(20.0, 0.25).unwrap(), GridSpec::new(30.0, 0.2).unwrap()];
    let rep = morse_index(&config, &schedule, 0.02).unwrap();
    assert_eq!(rep.morse_index, MorseVerdict::Index(0));
    assert_eq!(rep.count_below_minus_delta, 0);
    assert_eq!(rep.count_below_minus_half_delta, 0);
    assert_eq!(rep.lanczos_count, 0);
    assert_eq!(rep.kernel_residual_norms.len(), 1);
    // kernel cluster present and everything above -1.1
    assert!(rep.smallest_eigenvalues.iter().any(|l| l.abs() < 5e-3));
    assert!(rep.smallest_eigenvalues.iter().all(|&l| l >= -1.1));
}

// [PAPER] §6 n=2 case on a light schedule
#[test]
fn saddle_morse_index_one() {
    let config = SolitonConfig::saddle();
    let schedule = [GridSpec::new(20.0, 0.25).unwrap(), GridSpec::new(30.0, 0.2).unwrap()];
    let rep = morse_index(&config, &schedule, 0.02).unwrap();
    assert_eq!(rep.morse_index, MorseVerdict::Index(1));
    assert!(rep.gap >= 10.0 * rep.delta, "gap {}", rep.gap);
    for &r in &rep.kernel_residual_norms {
        assert!(r < 5e-2, "kernel residual ratio {r}");
    }
}

#[test]
fn morse_schedule_validation() {
    let config = SolitonConfig::kink(0.0);
    let g = GridSpec::new(20.0, 0.25).unwrap();
    assert!(morse_index(&config, &[g], 0.02).is_err());
    // non-decreasing h rejected
    let bad = [GridSpec::new(30.0, 0.2).unwrap(), GridSpec::new(30.0, 0.25).unwrap()];
    assert!(morse_index(&config, &bad, 0.02).is_err());
}

// [DERIVED] Richardson: halving h divides the kernel stencil residual by ~4
#[test]
fn kernel_residual_second_order() {
    let config = SolitonConfig::kink(0.0);
    let coarse = GridSpec::new(30.0, 0.25).unwrap();
    let fine = GridSpec::new(30.0, 0.125).unwrap();
    let rc = kernel_residual_norm(&config, &coarse, 0).unwrap();
    let rf = kernel_residual_norm(&config, &fine, 0).unwrap();
    let ratio = rc / rf;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

// [DERIVED] saddle kernel elements satisfy the discrete equation to < 1e-2
// at h = 0.125, while a non-kernel probe does not (non-vacuousness)
#[test]
fn kernel_residual_saddle_and_probe() {
    let config = SolitonConfig::saddle();
    let grid = GridSpec::new(30.0, 0.125).unwrap();
    for j in 0..2 {
        let r = kernel_residual_norm(&config, &grid, j).unwrap();
        assert!(r < 1e-2, "kernel {j} residual {r}");
    }
    // probe with U_n itself on the coarser grid (cheap, still decisive)
    let coarse = GridSpec::new(30.0, 0.25).unwrap();
    let eng = TauEngine::new(&config).unwrap();
    let probe = probe_residual_norm(
        &coarse,
        |x, y| eng.eval_solution(x, y),
        |x, y| eng.cos_sin(x, y).0,
    );
    assert!(probe > 0.1, "probe residual {probe}");
}
