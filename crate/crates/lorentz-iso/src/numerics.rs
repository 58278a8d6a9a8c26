//! Small numerical utilities: adaptive quadrature, monotone cubic
//! interpolation, and finite-difference weights on uniform grids.

use crate::{Error, Result};

/// Adaptive Simpson quadrature of `f` over `[a, b]` to the given absolute
/// tolerance (with the usual 1/15 Richardson error estimate).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Monotone cubic Hermite interpolant (Fritsch–Carlson limited slopes) for
/// strictly monotone data; used to invert reparameterization tables.
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` strictly increasing, `ys` monotone (non-decreasing or
    /// non-increasing).
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len());
        let n = xs.len();
        let mut d = vec![0.0; n - 1];
        for k in 0..n - 1 {
            d[k] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        }
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for k in 1..n - 1 {
            m[k] = if d[k - 1] * d[k] <= 0.0 { 0.0 } else { 0.5 * (d[k - 1] + d[k]) };
        }
        // Fritsch–Carlson limiter keeps the interpolant monotone.
        for k in 0..n - 1 {
            if d[k] == 0.0 {
                m[k] = 0.0;
                m[k + 1] = 0.0;
            } else {
                let a = m[k] / d[k];
                let b = m[k + 1] / d[k];
                let s = a * a + b * b;
                if s > 9.0 {
                    let t = 3.0 / s.sqrt();
                    m[k] = t * a * d[k];
                    m[k + 1] = t * b * d[k];
                }
            }
        }
        MonotoneCubic { xs, ys, slopes: m }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

/// Finite-difference weights by Fornberg's recurrence: weights `w[k]` so that
/// `Σ w[k] f(nodes[k]) ≈ f^{(m)}(x0)`, exact on polynomials of degree
/// `nodes.len() − 1`.
pub fn fd_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > m, "need more than m+1 nodes for the m-th derivative");
    // c[j][k]: weight of node j for derivative order k (flattened).
    let mut c = vec![0.0; n * (m + 1)];
    c[0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i * (m + 1) + k] =
                        c1 * (k as f64 * c[(i - 1) * (m + 1) + k - 1] - c5 * c[(i - 1) * (m + 1) + k]) / c2;
                }
                c[i * (m + 1)] = -c1 * c5 * c[(i - 1) * (m + 1)] / c2;
            }
            for k in (1..=mn).rev() {
                c[j * (m + 1) + k] = (c4 * c[j * (m + 1) + k] - k as f64 * c[j * (m + 1) + k - 1]) / c3;
            }
            c[j * (m + 1)] = c4 * c[j * (m + 1)] / c3;
        }
        c1 = c2;
    }
    (0..n).map(|j| c[j * (m + 1) + m]).collect()
}

/// Index window of a 1-D stencil for the `m`-th derivative at node `i` of a
/// grid with `n` nodes, wide enough for O(h²) accuracy everywhere: a centered
/// odd window in the interior, a one-point-wider one-sided window at the
/// boundary. Returns the first index of the window and its width, or `None`
/// when the grid is too small.
pub fn stencil_window(i: usize, n: usize, m: usize) -> Option<(usize, usize)> {
    let centered = if m % 2 == 1 { m + 2 } else { m + 1 }; // odd width
    let sided = (m + 2).min(n); // near the boundary; shrinks on tiny grids
    if n < m + 1 || sided < m + 1 || n < centered {
        return None;
    }
    let half = centered / 2;
    if i >= half && i + half < n {
        Some((i - half, centered))
    } else if i < half {
        Some((0, sided))
    } else {
        Some((n - sided, sided))
    }
}

/// Per-axis finite-difference plan: for each node and derivative order `m`,
/// the source indices (wrapped on periodic axes), Fornberg weights, and
/// whether the window is one-sided.
pub type AxisPlan = Vec<Vec<(Vec<usize>, Vec<f64>, bool)>>;

/// Build the stencil plan for one grid axis with `n` nodes, spacing `h`, and
/// derivatives up to `order`. Periodic axes always get centered wrapped
/// stencils; otherwise boundary nodes fall back to one-sided windows.
pub fn axis_plan(n: usize, h: f64, periodic: bool, order: usize) -> Result<AxisPlan> {
    let mut plan = Vec::with_capacity(n);
    for i in 0..n {
        let mut per_m = Vec::with_capacity(order + 1);
        for m in 0..=order {
            if m == 0 {
                per_m.push((vec![i], vec![1.0], false));
                continue;
            }
            if periodic {
                let width = if m % 2 == 1 { m + 2 } else { m + 1 };
                if n < width {
                    return Err(Error::Grid(format!(
                        "periodic axis with {n} nodes cannot support order-{m} stencils"
                    )));
                }
                let half = (width / 2) as isize;
                let mut idxs = Vec::with_capacity(width);
                let mut pos = Vec::with_capacity(width);
                for k in -half..=half {
                    idxs.push((i as isize + k).rem_euclid(n as isize) as usize);
                    pos.push(k as f64 * h);
                }
                per_m.push((idxs, fd_weights(0.0, &pos, m), false));
            } else {
                let (start, width) = stencil_window(i, n, m).ok_or_else(|| {
                    Error::Grid(format!(
                        "axis with {n} nodes cannot support order-{m} stencils"
                    ))
                })?;
                let idxs: Vec<usize> = (start..start + width).collect();
                let pos: Vec<f64> = idxs.iter().map(|&p| (p as f64 - i as f64) * h).collect();
                let centered = if m % 2 == 1 { m + 2 } else { m + 1 };
                let sided = !(width == centered && start + centered / 2 == i);
                per_m.push((idxs, fd_weights(0.0, &pos, m), sided));
            }
        }
        plan.push(per_m);
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_matches_closed_forms() {
        let got = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert_relative_eq!(got, 1f64.exp() - 1.0, epsilon = 1e-11);
        let got = adaptive_simpson(&|x: f64| (1.0 + x * x).sqrt() / x, 1.0, 2.0, 1e-12);
        // ∫ sqrt(1+x²)/x dx = sqrt(1+x²) − asinh(1/x)
        let prim = |x: f64| (1.0 + x * x).sqrt() - (1.0 / x).asinh();
        assert_relative_eq!(got, prim(2.0) - prim(1.0), epsilon = 1e-11);
    }

    #[test]
    fn monotone_cubic_interpolates_and_stays_monotone() {
        let xs: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x * x * x + 0.2 * x).collect();
        let interp = MonotoneCubic::new(xs.clone(), ys.clone());
        for k in 0..xs.len() {
            assert_relative_eq!(interp.eval(xs[k]), ys[k], epsilon = 1e-14);
        }
        let mut prev = interp.eval(0.0);
        for k in 1..=200 {
            let cur = interp.eval(k as f64 / 200.0);
            assert!(cur >= prev - 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn fornberg_reproduces_standard_stencils() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 1);
        assert_relative_eq!(w[0], -0.5, epsilon = 1e-14);
        assert_relative_eq!(w[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(w[2], 0.5, epsilon = 1e-14);
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(w[1], -2.0, epsilon = 1e-14);
        assert_relative_eq!(w[2], 1.0, epsilon = 1e-14);
        // One-sided first derivative: (−3f0 + 4f1 − f2)/2.
        let w = fd_weights(0.0, &[0.0, 1.0, 2.0], 1);
        assert_relative_eq!(w[0], -1.5, epsilon = 1e-14);
        assert_relative_eq!(w[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(w[2], -0.5, epsilon = 1e-14);
        // Five-point fourth-order first derivative.
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn stencil_windows_fit_grid() {
        for n in [3usize, 5, 8] {
            for m in 1..=2 {
                for i in 0..n {
                    let (s, w) = stencil_window(i, n, m).unwrap();
                    assert!(s + w <= n);
                    assert!(w >= m + 1);
                }
            }
        }
        assert!(stencil_window(0, 2, 2).is_none());
    }
}
