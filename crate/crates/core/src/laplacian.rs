//! Closed-form matting Laplacian.
//!
//! For every `(2r+1)^2` window `w_k` fully inside the image, with color mean
//! `mu_k` and covariance `S_k`, each pixel pair `(i, j)` in the window
//! receives
//!
//! ```text
//! delta_ij - (1 + (I_i - mu_k)^T (S_k + eps/|w| Id)^-1 (I_j - mu_k)) / |w|
//! ```
//!
//! and `L_ij` sums this over all windows containing both pixels.
//!
//! Rows are assembled independently, each accumulating its windows in
//! ascending window order with a bilinear form that is symmetric term by
//! term, so `L_ij` and `L_ji` come out bit-identical.

use rayon::prelude::*;

use crate::error::{MattingError, Result};
use crate::imaging::RgbImage;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianParams {
    pub window_radius: usize,
    pub epsilon_reg: f64,
}

impl Default for LaplacianParams {
    fn default() -> Self {
        Self {
            window_radius: 1,
            epsilon_reg: 1e-7,
        }
    }
}

impl LaplacianParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_radius == 0 || self.epsilon_reg.is_nan() || self.epsilon_reg <= 0.0 {
            return Err(MattingError::InvalidParameter(format!(
                "laplacian needs window_radius >= 1 and epsilon_reg > 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Window statistics: color mean and the regularised inverse covariance,
/// stored as `[m00, m11, m22, m01, m02, m12]`.
#[derive(Debug, Clone, Copy)]
struct WindowStats {
    mean: [f64; 3],
    inv: [f64; 6],
}

impl WindowStats {
    /// Symmetric bilinear form `a^T M b`; swapping `a` and `b` gives the same bits.
    #[inline]
    fn form(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let m = &self.inv;
        m[0] * (a[0] * b[0])
            + m[1] * (a[1] * b[1])
            + m[2] * (a[2] * b[2])
            + m[3] * (a[0] * b[1] + a[1] * b[0])
            + m[4] * (a[0] * b[2] + a[2] * b[0])
            + m[5] * (a[1] * b[2] + a[2] * b[1])
    }
}

fn invert_sym3(s: [[f64; 3]; 3]) -> [f64; 6] {
    let c00 = s[1][1] * s[2][2] - s[1][2] * s[2][1];
    let c01 = s[0][2] * s[2][1] - s[0][1] * s[2][2];
    let c02 = s[0][1] * s[1][2] - s[0][2] * s[1][1];
    let c11 = s[0][0] * s[2][2] - s[0][2] * s[2][0];
    let c12 = s[0][2] * s[1][0] - s[0][0] * s[1][2];
    let c22 = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let det = s[0][0] * c00 + s[0][1] * c01 + s[0][2] * c02;
    [
        c00 / det,
        c11 / det,
        c22 / det,
        c01 / det,
        c02 / det,
        c12 / det,
    ]
}

fn window_stats(img: &RgbImage, cx: usize, cy: usize, params: &LaplacianParams) -> WindowStats {
    let r = params.window_radius;
    let count = ((2 * r + 1) * (2 * r + 1)) as f64;
    let mut mean = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for y in cy - r..=cy + r {
        for x in cx - r..=cx + r {
            let c = img.pixel(x, y);
            for p in 0..3 {
                mean[p] += c[p];
                for q in 0..3 {
                    second[p][q] += c[p] * c[q];
                }
            }
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut cov = [[0.0; 3]; 3];
    for p in 0..3 {
        for q in 0..3 {
            cov[p][q] = second[p][q] / count - mean[p] * mean[q];
        }
        cov[p][p] += params.epsilon_reg / count;
    }
    // Enforce exact symmetry before inversion.
    for (p, q) in [(0, 1), (0, 2), (1, 2)] {
        let avg = 0.5 * (cov[p][q] + cov[q][p]);
        cov[p][q] = avg;
        cov[q][p] = avg;
    }
    WindowStats {
        mean,
        inv: invert_sym3(cov),
    }
}

pub fn build_laplacian(img: &RgbImage, params: &LaplacianParams) -> Result<CsrMatrix> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    let r = params.window_radius;
    let side = 2 * r + 1;
    if w < side || h < side {
        return Err(MattingError::ImageTooSmall {
            width: w,
            height: h,
            window: side,
        });
    }
    let count = (side * side) as f64;

    // Window centres cover [r, w - r) x [r, h - r).
    let (ww, wh) = (w - 2 * r, h - 2 * r);
    let stats: Vec<WindowStats> = (0..ww * wh)
        .into_par_iter()
        .map(|k| window_stats(img, k % ww + r, k / ww + r, params))
        .collect();

    let reach = 2 * r;
    let span = 2 * reach + 1;
    let rows: Vec<Vec<(u32, f64)>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let ci = img.color(i);
            let mut acc = vec![0.0; span * span];
            let mut touched = vec![false; span * span];
            let cy_lo = y.saturating_sub(r).max(r);
            let cy_hi = (y + r).min(h - 1 - r);
            let cx_lo = x.saturating_sub(r).max(r);
            let cx_hi = (x + r).min(w - 1 - r);
            for cy in cy_lo..=cy_hi {
                for cx in cx_lo..=cx_hi {
                    let st = &stats[(cy - r) * ww + (cx - r)];
                    let a = [ci[0] - st.mean[0], ci[1] - st.mean[1], ci[2] - st.mean[2]];
                    for jy in cy - r..=cy + r {
                        for jx in cx - r..=cx + r {
                            let j = jy * w + jx;
                            let cj = img.color(j);
                            let b = [cj[0] - st.mean[0], cj[1] - st.mean[1], cj[2] - st.mean[2]];
                            let delta = if i == j { 1.0 } else { 0.0 };
                            let v = delta - (1.0 + st.form(&a, &b)) / count;
                            let slot = (jy + reach - y) * span + (jx + reach - x);
                            acc[slot] += v;
                            touched[slot] = true;
                        }
                    }
                }
            }
            let mut row = Vec::with_capacity(span * span);
            for dy in 0..span {
                for dx in 0..span {
                    let slot = dy * span + dx;
                    if touched[slot] {
                        let j = (y + dy - reach) * w + (x + dx - reach);
                        row.push((j as u32, acc[slot]));
                    }
                }
            }
            row
        })
        .collect();
    Ok(CsrMatrix::from_rows(rows))
}
