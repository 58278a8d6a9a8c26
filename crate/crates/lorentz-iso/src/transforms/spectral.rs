//! The spectral family of an isothermic chart.
//!
//! Shifting the Schwarzian by a real constant, `s → s + c`, while keeping
//! `λ₁, λ₂, α` fixed leaves the frame system integrable precisely when the
//! chart is isothermic (real Hopf pair in the pinned gauge). Integrating the
//! deformed system from a base point produces the transformed frame — and in
//! particular the new surface `Y^c` and its left normal `L^c` — over the
//! whole grid. Flatness shows up numerically as path independence; the
//! Lorentzian Gram of the frame is conserved along the flow and its drift
//! measures integration quality.

use nalgebra::{Matrix6, Vector6};

use super::{integrate_paths, rk4_edge, step_index, substeps_for, Axis, PathOrder};
use crate::conformal_frame::{FrameField, FrameNode};
use crate::grid::{Grid, Summary};
use crate::jet::RJet;
use crate::pseudo_euclidean::PseudoVector;
use crate::surface_model::{JetPoint, SurfaceChart};
use crate::{Error, Result};

/// Result of one spectral transform.
#[derive(Clone, Debug)]
pub struct SpectralTransform {
    pub c: f64,
    pub base: (usize, usize),
    /// Transported frames (columns `Y, Y_u, Y_v, N, L, R`), base-first path.
    pub frames: Grid<Matrix6<f64>>,
    /// Node-jet chart of the transformed surface `[Y^c]`.
    pub y_chart: SurfaceChart,
    /// Node-jet chart of its left normal `[L^c]`.
    pub l_chart: SurfaceChart,
    /// Relative Frobenius distance between the two path orders per node.
    pub path_residual: Grid<f64>,
    /// Deviation of the transported frame's Gram matrix from the base,
    /// relative to the local frame magnitude.  Hyperbolic deformations grow
    /// the frame exponentially across the grid, so only the relative
    /// deviation measures flow fidelity once roundoff dominates.
    pub gram_drift: Grid<f64>,
}

impl SpectralTransform {
    pub fn y_values(&self) -> Grid<PseudoVector> {
        self.frames.map(|g| column_vector(g, 0))
    }

    pub fn l_values(&self) -> Grid<PseudoVector> {
        self.frames.map(|g| column_vector(g, 4))
    }

    pub fn path_summary(&self) -> Summary {
        crate::grid::summarize(&self.path_residual, None)
    }

    pub fn gram_summary(&self) -> Summary {
        crate::grid::summarize(&self.gram_drift, None)
    }
}

fn column_vector(g: &Matrix6<f64>, col: usize) -> PseudoVector {
    PseudoVector {
        coords: g.column(col).iter().copied().collect(),
        sig: crate::pseudo_euclidean::Signature::R4_2,
    }
}

/// The two 6×6 real connection matrices at one node, as jets (row-major).
struct NodeConnection {
    mu: Vec<RJet>,
    mv: Vec<RJet>,
}

/// Realify the complex structure equations into `∂_u G = G·M_u`,
/// `∂_v G = G·M_v` for the frame columns `{Y, Y_u, Y_v, N, L, R}`, with the
/// Schwarzian shifted by `c`.
fn node_connection(node: &FrameNode, c: f64, order: usize) -> NodeConnection {
    let inv = &node.inv;
    let t = |j: &RJet| j.truncated(order.min(j.order()));
    let s_re = t(&(&inv.s.re_part() + &RJet::constant(c, inv.s.order())));
    let s_im = t(&inv.s.im_part());
    let beta2 = t(&inv.beta.scale(2.0));
    let l1_re = t(&inv.l1.re_part());
    let l1_im = t(&inv.l1.im_part());
    let l2_re = t(&inv.l2.re_part());
    let l2_im = t(&inv.l2.im_part());
    let a_re = t(&inv.alpha.re_part());
    let a_im = t(&inv.alpha.im_part());
    let g1_re = t(&inv.gamma1.re_part());
    let g1_im = t(&inv.gamma1.im_part());
    let g2_re = t(&inv.gamma2.re_part());
    let g2_im = t(&inv.gamma2.im_part());
    let one = RJet::constant(1.0, order);
    let mut mu = vec![RJet::zeros(order); 36];
    let mut mv = vec![RJet::zeros(order); 36];
    let set = |m: &mut Vec<RJet>, row: usize, col: usize, jet: RJet| {
        m[row * 6 + col] = jet;
    };

    // ∂_u Y = Y_u ; ∂_v Y = Y_v.
    set(&mut mu, 1, 0, one.clone());
    set(&mut mv, 2, 0, one.clone());
    // ∂_u Y_u = (2β − Re s) Y + N + 2Reλ₁ L + 2Reλ₂ R.
    set(&mut mu, 0, 1, &beta2 - &s_re);
    set(&mut mu, 3, 1, one.clone());
    set(&mut mu, 4, 1, l1_re.scale(2.0));
    set(&mut mu, 5, 1, l2_re.scale(2.0));
    // ∂_u Y_v = ∂_v Y_u = Im s · Y − 2Imλ₁ L − 2Imλ₂ R.
    set(&mut mu, 0, 2, s_im.clone());
    set(&mut mu, 4, 2, l1_im.scale(-2.0));
    set(&mut mu, 5, 2, l2_im.scale(-2.0));
    set(&mut mv, 0, 1, s_im.clone());
    set(&mut mv, 4, 1, l1_im.scale(-2.0));
    set(&mut mv, 5, 1, l2_im.scale(-2.0));
    // ∂_v Y_v = (2β + Re s) Y + N − 2Reλ₁ L − 2Reλ₂ R.
    set(&mut mv, 0, 2, &beta2 + &s_re);
    set(&mut mv, 3, 2, one);
    set(&mut mv, 4, 2, l1_re.scale(-2.0));
    set(&mut mv, 5, 2, l2_re.scale(-2.0));
    // ∂_u N = (2β − Re s) Y_u + Im s · Y_v + 4Reγ₁ L + 4Reγ₂ R.
    set(&mut mu, 1, 3, &beta2 - &s_re);
    set(&mut mu, 2, 3, s_im.clone());
    set(&mut mu, 4, 3, g1_re.scale(4.0));
    set(&mut mu, 5, 3, g2_re.scale(4.0));
    // ∂_v N = Im s · Y_u + (2β + Re s) Y_v − 4Imγ₁ L − 4Imγ₂ R.
    set(&mut mv, 1, 3, s_im);
    set(&mut mv, 2, 3, &beta2 + &s_re);
    set(&mut mv, 4, 3, g1_im.scale(-4.0));
    set(&mut mv, 5, 3, g2_im.scale(-4.0));
    // ∂_u L = −4Reγ₂ Y + 2Reλ₂ Y_u − 2Imλ₂ Y_v + 2Reα L.
    set(&mut mu, 0, 4, g2_re.scale(-4.0));
    set(&mut mu, 1, 4, l2_re.scale(2.0));
    set(&mut mu, 2, 4, l2_im.scale(-2.0));
    set(&mut mu, 4, 4, a_re.scale(2.0));
    // ∂_v L = 4Imγ₂ Y − 2Imλ₂ Y_u − 2Reλ₂ Y_v − 2Imα L.
    set(&mut mv, 0, 4, g2_im.scale(4.0));
    set(&mut mv, 1, 4, l2_im.scale(-2.0));
    set(&mut mv, 2, 4, l2_re.scale(-2.0));
    set(&mut mv, 4, 4, a_im.scale(-2.0));
    // ∂_u R = −4Reγ₁ Y + 2Reλ₁ Y_u − 2Imλ₁ Y_v − 2Reα R.
    set(&mut mu, 0, 5, g1_re.scale(-4.0));
    set(&mut mu, 1, 5, l1_re.scale(2.0));
    set(&mut mu, 2, 5, l1_im.scale(-2.0));
    set(&mut mu, 5, 5, a_re.scale(-2.0));
    // ∂_v R = 4Imγ₁ Y − 2Imλ₁ Y_u − 2Reλ₁ Y_v + 2Imα R.
    set(&mut mv, 0, 5, g1_im.scale(4.0));
    set(&mut mv, 1, 5, l1_im.scale(-2.0));
    set(&mut mv, 2, 5, l1_re.scale(-2.0));
    set(&mut mv, 5, 5, a_im.scale(2.0));

    NodeConnection { mu, mv }
}

fn eval_connection(entries: &[RJet], du: f64, dv: f64) -> Matrix6<f64> {
    Matrix6::from_fn(|r, c| entries[r * 6 + c].eval_offset(du, dv))
}

/// Real frame columns at a node.
fn frame_matrix(node: &FrameNode) -> Matrix6<f64> {
    let y = &node.frame.y;
    let cols = [
        y.real_value(),
        y.du().real_value(),
        y.dv().real_value(),
        node.frame.n.real_value(),
        node.frame.l.real_value(),
        node.frame.r.real_value(),
    ];
    let vecs: Vec<Vector6<f64>> =
        cols.iter().map(|p| Vector6::from_column_slice(&p.coords)).collect();
    Matrix6::from_columns(&vecs)
}

fn signature_matrix() -> Matrix6<f64> {
    Matrix6::from_diagonal(&Vector6::new(1.0, 1.0, 1.0, 1.0, -1.0, -1.0))
}

/// Fill a 6×6 jet matrix around a node from its value and the connection
/// jets, degree by degree: `u`-recursion for coefficients with `i ≥ 1`,
/// `v`-recursion for the `(0, j)` line.
fn frame_jets(value: &Matrix6<f64>, conn: &NodeConnection, order: usize) -> Vec<RJet> {
    let mut g: Vec<RJet> = (0..36)
        .map(|k| RJet::constant(value[(k / 6, k % 6)], order))
        .collect();
    let matmul = |a: &[RJet], b: &[RJet]| -> Vec<RJet> {
        let mut out = vec![RJet::zeros(order); 36];
        for r in 0..6 {
            for col in 0..6 {
                let mut acc = RJet::zeros(order);
                for k in 0..6 {
                    acc = &acc + &a[r * 6 + k].mul_jet(&b[k * 6 + col]);
                }
                out[r * 6 + col] = acc;
            }
        }
        out
    };
    for degree in 0..order {
        let pu = matmul(&g, &conn.mu);
        let pv = matmul(&g, &conn.mv);
        for i in 0..=degree + 1 {
            let j = degree + 1 - i;
            for k in 0..36 {
                let coeff = if i >= 1 {
                    pu[k].coeff(i - 1, j) / i as f64
                } else {
                    pv[k].coeff(0, j - 1) / j as f64
                };
                g[k].set_coeff(i, j, coeff);
            }
        }
    }
    g
}

/// Integrate the spectral deformation with parameter `c` from `base`
/// (grid indices). Requires a jet-based field of source order ≥ 5.
pub fn spectral_transform(
    field: &FrameField,
    c: f64,
    base: (usize, usize),
) -> Result<SpectralTransform> {
    if field.sampled_alpha || field.source_order < 5 {
        return Err(Error::JetOrder(
            "spectral transform needs a jet-based field of source order >= 5".into(),
        ));
    }
    if base.0 >= field.spec.nu || base.1 >= field.spec.nv {
        return Err(Error::Grid(format!(
            "base point ({}, {}) is outside the {}x{} grid",
            base.0, base.1, field.spec.nu, field.spec.nv
        )));
    }
    let spec = field.spec.clone();
    let alpha_order = field.nodes.at(0, 0).inv.alpha.order();
    let conn_order = alpha_order.min(3);
    let connections = Grid::from_fn_parallel(spec.nu, spec.nv, |iu, iv| {
        node_connection(field.nodes.at(iu, iv), c, conn_order)
    });

    let g0 = frame_matrix(field.nodes.at(base.0, base.1));
    let (hu, hv) = (spec.h_u(), spec.h_v());
    // Each edge is integrated in two halves so Taylor offsets never exceed
    // half a grid step: the first half evaluates the connection tables of the
    // departure node, the second half those of the arrival node.
    let edge = |state: &Matrix6<f64>, from: (usize, usize), axis: Axis, dir: i64| {
        let to = step_index(from, axis, dir);
        let h = match axis {
            Axis::U => hu,
            Axis::V => hv,
        };
        let delta = dir as f64 * h;
        let half = delta / 2.0;
        // The deformed connection carries entries of size |s + c|, so halve
        // the generic substep to keep the Gram certificate well inside
        // tolerance for |c| up to a few units.
        let n = 2 * substeps_for(h);
        let n1 = n.div_ceil(2);
        let n2 = (n - n1).max(1);
        let entries_at = |node: (usize, usize)| {
            let conn = connections.at(node.0, node.1);
            match axis {
                Axis::U => &conn.mu,
                Axis::V => &conn.mv,
            }
        };
        let eval = |entries: &[RJet], off: f64| match axis {
            Axis::U => eval_connection(entries, off, 0.0),
            Axis::V => eval_connection(entries, 0.0, off),
        };
        let mid = rk4_edge(*state, n1, |sigma, g| {
            g * eval(entries_at(from), sigma * half) * half
        });
        rk4_edge(mid, n2, |sigma, g| {
            g * eval(entries_at(to), (sigma - 1.0) * half) * half
        })
    };

    let frames_a = integrate_paths(&spec, base, g0, PathOrder::UThenV, edge);
    let frames_b = integrate_paths(&spec, base, g0, PathOrder::VThenU, edge);

    let path_residual = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
        let a = frames_a.at(iu, iv);
        let b = frames_b.at(iu, iv);
        (a - b).amax() / (1.0 + a.amax())
    });
    let sig = signature_matrix();
    let gram0 = g0.transpose() * sig * g0;
    let gram_drift = frames_a.map(|g| {
        let gram = g.transpose() * sig * g;
        let scale = g.amax();
        (gram - gram0).amax() / (1.0 + scale * scale)
    });

    let jet_order = conn_order + 1;
    let charts = Grid::from_fn_parallel(spec.nu, spec.nv, |iu, iv| {
        let jets = frame_jets(frames_a.at(iu, iv), connections.at(iu, iv), jet_order);
        let column = |col: usize| -> JetPoint {
            JetPoint::new((0..6).map(|r| jets[r * 6 + col].clone()).collect())
                .expect("six components")
        };
        (column(0), column(4))
    });
    let y_jets = charts.map(|(y, _)| y.clone());
    let l_jets = charts.map(|(_, l)| l.clone());
    let y_chart = SurfaceChart::from_node_jets(
        spec.clone(),
        y_jets,
        format!("{}:spectral{c}", field.label),
    )?;
    let l_chart = SurfaceChart::from_node_jets(
        spec.clone(),
        l_jets,
        format!("{}:spectral{c}:polar-left", field.label),
    )?;

    Ok(SpectralTransform {
        c,
        base,
        frames: frames_a,
        y_chart,
        l_chart,
        path_residual,
        gram_drift,
    })
}
