//! Assembly and solution of the constrained matting energy
//!
//! ```text
//! J(a) = a^T L a + lambda (a - beta)^T D (a - beta) + (a - A)^T G C (a - A)
//! ```
//!
//! with `D` the known-pixel indicator, `G = diag(gamma)` and
//! `C = diag(confidence)`. The minimiser solves
//! `(L + lambda D + G C) a = lambda D beta + G C A`.

use log::debug;

use crate::constraints::ConstraintField;
use crate::error::{MattingError, Result};
use crate::imaging::{AlphaMatte, Trimap};
use crate::sparse::{dot, norm, CsrMatrix};

#[derive(Debug, Clone)]
pub struct MattingSystem {
    pub width: usize,
    pub height: usize,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub lambda: f64,
    /// Constant term of `J`, so that `J(a) = a^T A a - 2 b^T a + energy_offset`.
    pub energy_offset: f64,
}

impl MattingSystem {
    pub fn energy(&self, alpha: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec(alpha);
        dot(alpha, &ax) - 2.0 * dot(&self.rhs, alpha) + self.energy_offset
    }

    /// Plain-text right-hand side, one value per line.
    pub fn write_rhs<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.rhs {
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }
}

/// Adds the data terms to `laplacian`. `constraints: None` gives the plain
/// closed-form system.
pub fn assemble_system(
    laplacian: CsrMatrix,
    tri: &Trimap,
    constraints: Option<&ConstraintField>,
    lambda: f64,
) -> Result<MattingSystem> {
    let n = tri.pixel_count();
    if laplacian.dim() != n {
        return Err(MattingError::DimensionMismatch(format!(
            "laplacian is {0}x{0}, trimap has {n} pixels",
            laplacian.dim()
        )));
    }
    if let Some(c) = constraints {
        if c.len() != n {
            return Err(MattingError::DimensionMismatch(format!(
                "constraint field has {} pixels, trimap has {n}",
                c.len()
            )));
        }
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(MattingError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }

    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut offset = 0.0;
    for (i, label) in tri.labels().iter().enumerate() {
        if label.is_known() {
            let beta = label.beta();
            diag[i] = lambda;
            rhs[i] = lambda * beta;
            offset += lambda * beta * beta;
        }
        if let Some(c) = constraints {
            let w = c.gamma[i] * c.confidence[i];
            diag[i] += w;
            rhs[i] += w * c.a_init[i];
            offset += w * c.a_init[i] * c.a_init[i];
        }
    }
    let mut matrix = laplacian;
    matrix.add_diagonal(&diag);
    Ok(MattingSystem {
        width: tri.width(),
        height: tri.height(),
        matrix,
        rhs,
        lambda,
        energy_offset: offset,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target `|A x - b| / |b|`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// Unclamped solution.
    pub alpha: Vec<f64>,
    pub iterations: usize,
    /// Final true relative residual.
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradient from a zero start.
///
/// Convergence is confirmed on the true residual `b - A x`; if the
/// recurrence drifted, the iteration restarts from the current iterate.
pub fn solve_raw(sys: &MattingSystem, opts: &SolverOptions) -> Result<SolveOutcome> {
    let a = &sys.matrix;
    let b = &sys.rhs;
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(SolveOutcome {
            alpha: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let target = opts.tolerance * b_norm;

    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    loop {
        if iterations >= opts.max_iterations {
            let res = true_residual(a, b, &x, &mut ap) / b_norm;
            return Err(MattingError::NotConverged {
                iterations,
                residual: res,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Exact solution reached or matrix not positive definite along p.
            let res = true_residual(a, b, &x, &mut ap);
            if res <= target {
                break;
            }
            return Err(MattingError::NotConverged {
                iterations,
                residual: res / b_norm,
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        iterations += 1;

        if norm(&r) <= target {
            let res = true_residual(a, b, &x, &mut ap);
            if res <= target {
                break;
            }
            // Recurrence drift: restart from the true residual.
            for i in 0..n {
                r[i] = b[i] - ap[i];
                z[i] = r[i] * inv_diag[i];
                p[i] = z[i];
            }
            rz = dot(&r, &z);
            continue;
        }

        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let res = true_residual(a, b, &x, &mut ap) / b_norm;
    debug!("pcg converged in {iterations} iterations, relative residual {res:e}");
    Ok(SolveOutcome {
        alpha: x,
        iterations,
        relative_residual: res,
    })
}

/// `|b - A x|`, leaving `A x` in `scratch`.
fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64], scratch: &mut [f64]) -> f64 {
    a.mul_vec_into(x, scratch);
    let diff: Vec<f64> = b.iter().zip(scratch.iter()).map(|(b, ax)| b - ax).collect();
    norm(&diff)
}

/// Solves and clamps the result to `[0, 1]`.
pub fn solve(sys: &MattingSystem) -> Result<AlphaMatte> {
    solve_with(sys, &SolverOptions::default())
}

pub fn solve_with(sys: &MattingSystem, opts: &SolverOptions) -> Result<AlphaMatte> {
    let out = solve_raw(sys, opts)?;
    Ok(AlphaMatte::new(sys.width, sys.height, out.alpha)?.clamped())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Source;
    use crate::imaging::{Label, RgbImage};
    use crate::laplacian::{build_laplacian, LaplacianParams};

    fn image(w: usize, h: usize) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let t = x as f64 / (w - 1) as f64;
            [
                0.9 * (1.0 - t) + 0.1 * t,
                0.2 + 0.01 * y as f64,
                0.1 * (1.0 - t) + 0.8 * t,
            ]
        })
        .unwrap()
    }

    fn split_trimap(w: usize, h: usize) -> Trimap {
        Trimap::from_fn(w, h, |x, _| {
            if x < 2 {
                Label::Foreground
            } else if x >= w - 2 {
                Label::Background
            } else {
                Label::Unknown
            }
        })
        .unwrap()
    }

    fn laplacian(img: &RgbImage) -> CsrMatrix {
        build_laplacian(img, &LaplacianParams::default()).unwrap()
    }

    #[test]
    fn all_known_matches_dense_solve() {
        let img = image(6, 5);
        let tri = Trimap::from_fn(6, 5, |x, y| {
            if (x + y) % 3 == 0 {
                Label::Foreground
            } else {
                Label::Background
            }
        })
        .unwrap();
        let lap = laplacian(&img);
        let n = lap.dim();
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (i, j, v) in lap.triplets() {
            dense[(i, j)] = v;
        }
        let beta: Vec<f64> = tri.labels().iter().map(|l| l.beta()).collect();
        for i in 0..n {
            dense[(i, i)] += 100.0;
        }
        let rhs = nalgebra::DVector::from_iterator(n, beta.iter().map(|b| 100.0 * b));
        let expected = dense.lu().solve(&rhs).unwrap();

        let sys = assemble_system(lap, &tri, None, 100.0).unwrap();
        let out = solve_raw(&sys, &SolverOptions::default()).unwrap();
        for i in 0..n {
            assert!((out.alpha[i] - expected[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let img = image(5, 5);
        let tri = Trimap::new(5, 5, vec![Label::Background; 25]).unwrap();
        let sys = assemble_system(laplacian(&img), &tri, None, 100.0).unwrap();
        let out = solve_raw(&sys, &SolverOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.alpha.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn zero_gamma_matches_plain_system() {
        let img = image(7, 6);
        let tri = split_trimap(7, 6);
        let field = ConstraintField {
            width: 7,
            height: 6,
            a_init: vec![0.3; 42],
            confidence: vec![0.8; 42],
            gamma: vec![0.0; 42],
            source: vec![Source::Classifier; 42],
        };
        let a = assemble_system(laplacian(&img), &tri, Some(&field), 100.0).unwrap();
        let b = assemble_system(laplacian(&img), &tri, None, 100.0).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn residual_contract_and_energy() {
        let img = image(8, 8);
        let tri = split_trimap(8, 8);
        let field = ConstraintField {
            width: 8,
            height: 8,
            a_init: (0..64).map(|i| (i % 8) as f64 / 7.0).collect(),
            confidence: vec![0.5; 64],
            gamma: tri
                .labels()
                .iter()
                .map(|l| if l.is_known() { 0.0 } else { 0.1 })
                .collect(),
            source: vec![Source::Classifier; 64],
        };
        let sys = assemble_system(laplacian(&img), &tri, Some(&field), 100.0).unwrap();
        let out = solve_raw(
            &sys,
            &SolverOptions {
                tolerance: 1e-6,
                max_iterations: 10_000,
            },
        )
        .unwrap();
        assert!(out.relative_residual <= 1e-6);
        assert!(sys.energy(&out.alpha) <= sys.energy(&field.a_init));
    }

    #[test]
    fn iteration_budget_reports_residual() {
        let img = image(8, 8);
        let tri = split_trimap(8, 8);
        let sys = assemble_system(laplacian(&img), &tri, None, 100.0).unwrap();
        let err = solve_raw(
            &sys,
            &SolverOptions {
                tolerance: 1e-12,
                max_iterations: 2,
            },
        )
        .unwrap_err();
        match err {
            MattingError::NotConverged {
                iterations,
                residual,
            } => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mirror_symmetry() {
        // Image and trimap are both mirror-symmetric about the vertical centre line.
        let (w, h) = (10, 6);
        let img = RgbImage::from_fn(w, h, |x, y| {
            let m = x.min(w - 1 - x) as f64;
            [0.1 + 0.08 * m, 0.3 + 0.02 * y as f64, 0.5]
        })
        .unwrap();
        let tri = Trimap::from_fn(w, h, |x, _| {
            if x == 0 || x == w - 1 {
                Label::Foreground
            } else if x == 4 || x == 5 {
                Label::Background
            } else {
                Label::Unknown
            }
        })
        .unwrap();
        let sys = assemble_system(laplacian(&img), &tri, None, 100.0).unwrap();
        let matte = solve(&sys).unwrap();
        for y in 0..h {
            for x in 0..w {
                let (a, b) = (matte.alpha[y * w + x], matte.alpha[y * w + (w - 1 - x)]);
                assert!((a - b).abs() < 1e-6, "({x},{y}) {a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let img = image(5, 5);
        let tri = split_trimap(5, 4);
        assert!(assemble_system(laplacian(&img), &tri, None, 100.0).is_err());
        let tri = split_trimap(5, 5);
        assert!(assemble_system(laplacian(&img), &tri, None, 0.0).is_err());
    }
}
