//! Transforms of spacelike isothermic charts: polar, spectral, Darboux.
//!
//! All transforms consume a [`FrameField`] (the gauged frame pipeline output)
//! and produce new charts plus the residual data needed to certify the
//! transform's defining properties numerically.

pub mod darboux;
pub mod spectral;

use num_complex::Complex64;

use crate::conformal_frame::FrameField;
use crate::grid::{Grid, GridSpec, Summary};
use crate::pseudo_euclidean::PseudoVector;
use crate::surface_model::{JetPoint, SurfaceChart};
use crate::{Error, Result};

pub use darboux::{darboux_transform, darboux_transform_with_init, DarbouxTransform};
pub use spectral::{spectral_transform, SpectralTransform};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Which null normal direction a polar transform follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolarSide {
    /// The surface `[L]`; spacelike wherever `λ₂ ≠ 0`.
    Left,
    /// The surface `[R]`; spacelike wherever `λ₁ ≠ 0`.
    Right,
}

impl PolarSide {
    pub fn label_suffix(self) -> &'static str {
        match self {
            PolarSide::Left => ":polar-left",
            PolarSide::Right => ":polar-right",
        }
    }

    /// The side whose polar undoes this one (left and right are mutually
    /// inverse on non-degenerate charts).
    pub fn opposite(self) -> PolarSide {
        match self {
            PolarSide::Left => PolarSide::Right,
            PolarSide::Right => PolarSide::Left,
        }
    }
}

/// A polar transform as a chart: the (gauged) null normal field of the
/// source, sampled as node jets. The projective class is gauge-independent;
/// downstream pipelines re-canonicalize the lift anyway.
#[derive(Clone, Debug)]
pub struct PolarChart {
    pub side: PolarSide,
    pub chart: SurfaceChart,
    pub lift_values: Grid<PseudoVector>,
}

/// Take the polar transform on `side` of a frame field.
///
/// Fails with [`Error::DegenerateTransform`] if the transform degenerates
/// anywhere on the grid: `[L]` needs `λ₂ ≠ 0` (its induced metric is
/// `2|λ₂|² |dz|²`), `[R]` needs `λ₁ ≠ 0`.
pub fn polar_chart(field: &FrameField, side: PolarSide) -> Result<PolarChart> {
    let threshold = 1e-8 * field.kappa_median;
    let bad = field
        .nodes
        .iter_indexed()
        .filter(|(_, _, node)| {
            let lam = match side {
                PolarSide::Left => node.inv.l2.value(),
                PolarSide::Right => node.inv.l1.value(),
            };
            lam.norm() < threshold
        })
        .count();
    if bad > 0 {
        let which = match side {
            PolarSide::Left => "λ₂",
            PolarSide::Right => "λ₁",
        };
        return Err(Error::DegenerateTransform(format!(
            "polar transform degenerates at {bad} node(s): {which} vanishes there"
        )));
    }
    let jets = Grid::from_fn(field.spec.nu, field.spec.nv, |iu, iv| {
        let frame = &field.nodes.at(iu, iv).frame;
        let source = match side {
            PolarSide::Left => &frame.l,
            PolarSide::Right => &frame.r,
        };
        JetPoint::new(source.components().iter().map(|comp| comp.re_part()).collect())
            .expect("frame vectors have six components")
    });
    let lift_values = jets.map(|jp| jp.value());
    let label = format!("{}{}", field.label, side.label_suffix());
    let chart = SurfaceChart::from_node_jets(field.spec.clone(), jets, label)?;
    Ok(PolarChart { side, chart, lift_values })
}

/// Closed-form invariants of the left polar surface, read off the source
/// field without running a second pipeline: the Schwarzian of `[L]` is
/// `s − 4α_z` and its free Hopf component is `ᾱ_z + λ₁` (the other is pinned
/// to ½ by the same gauge policy the pipeline uses).
#[derive(Clone, Debug)]
pub struct LeftPolarClosedForm {
    pub schwarzian: Grid<Complex64>,
    pub hopf_free: Grid<Complex64>,
    /// Max |Im| of the predicted free Hopf component (isothermic indicator).
    pub hopf_imag_max: f64,
}

/// Evaluate the closed forms. Requires a jet-based field in the `λ₂ ≡ ½`
/// gauge with α-jets of order ≥ 1 (source order ≥ 5).
pub fn left_polar_closed_form(field: &FrameField) -> Result<LeftPolarClosedForm> {
    require_half_gauge(field, 5)?;
    let schwarzian = field.nodes.map(|node| {
        node.inv.s.value() - 4.0 * node.inv.alpha.dz().value()
    });
    let hopf_free = field.nodes.map(|node| {
        node.inv.alpha.dzbar().value().conj() + node.inv.l1.value()
    });
    let mut hopf_imag_max = 0.0_f64;
    for (_, _, h) in hopf_free.iter_indexed() {
        hopf_imag_max = hopf_imag_max.max(h.im.abs());
    }
    Ok(LeftPolarClosedForm { schwarzian, hopf_free, hopf_imag_max })
}

/// The second-iteration lift in closed form: applying the left polar twice
/// lands on
///
/// ```text
/// Ŷ = N + 2αY_z̄ + 2ᾱY_z + 2|α|²Y − 2(α_z − α² − s/2)L
/// ```
///
/// (in the `λ₂ ≡ ½` gauge). Returns the real lift values plus the worst
/// imaginary contamination of the complex combination, which vanishes for
/// isothermic sources.
#[derive(Clone, Debug)]
pub struct DoublePolarLift {
    pub values: Grid<PseudoVector>,
    pub imag_max: f64,
}

pub fn double_polar_lift(field: &FrameField) -> Result<DoublePolarLift> {
    require_half_gauge(field, 5)?;
    let mut imag_max = 0.0_f64;
    let mut vals = Vec::with_capacity(field.spec.len());
    for iu in 0..field.spec.nu {
        for iv in 0..field.spec.nv {
            let node = field.nodes.at(iu, iv);
            let (frame, inv) = (&node.frame, &node.inv);
            let a = inv.alpha.value();
            let coeff_l = -2.0
                * (inv.alpha.dz().value() - a * a - 0.5 * inv.s.value());
            let y = &frame.y;
            let hat = frame
                .n
                .add(&y.dzbar().scale(2.0 * a))
                .add(&y.dz().scale(2.0 * a.conj()))
                .add(&y.scale(c(2.0 * a.norm_sqr())))
                .add(&frame.l.scale(coeff_l));
            let value = hat.value();
            for comp in &value.coords {
                imag_max = imag_max.max(comp.im.abs());
            }
            vals.push(value.re_part());
        }
    }
    Ok(DoublePolarLift {
        values: Grid::from_vec(field.spec.nu, field.spec.nv, vals),
        imag_max,
    })
}

fn require_half_gauge(field: &FrameField, min_order: usize) -> Result<()> {
    if field.gauge != crate::conformal_frame::GaugeChoice::LambdaTwoHalf {
        return Err(Error::HypothesisFailure(
            "closed-form polar data needs the λ₂ ≡ ½ gauge".into(),
        ));
    }
    if field.sampled_alpha || field.source_order < min_order {
        return Err(Error::JetOrder(format!(
            "closed-form polar data needs jet-based fields of source order >= {min_order}"
        )));
    }
    Ok(())
}

/// Pointwise projective distance between two lift grids.
pub fn projective_distance_grid(
    a: &Grid<PseudoVector>,
    b: &Grid<PseudoVector>,
) -> Result<Grid<f64>> {
    if a.nu != b.nu || a.nv != b.nv {
        return Err(Error::DimensionMismatch(format!(
            "grids are {}x{} vs {}x{}",
            a.nu, a.nv, b.nu, b.nv
        )));
    }
    let mut vals = Vec::with_capacity(a.nu * a.nv);
    for iu in 0..a.nu {
        for iv in 0..a.nv {
            vals.push(crate::pseudo_euclidean::projective_distance(
                a.at(iu, iv),
                b.at(iu, iv),
            )?);
        }
    }
    Ok(Grid::from_vec(a.nu, a.nv, vals))
}

/// Summary of a projective comparison.
pub fn projective_agreement(
    a: &Grid<PseudoVector>,
    b: &Grid<PseudoVector>,
) -> Result<Summary> {
    Ok(crate::grid::summarize(&projective_distance_grid(a, b)?, None))
}

// ---------------------------------------------------------------------------
// Path integration over the grid (shared by the spectral and Darboux flows).

/// Which axis an edge step moves along.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Axis {
    U,
    V,
}

/// Order in which the two grid axes are traversed from the base point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum PathOrder {
    UThenV,
    VThenU,
}

/// Index of the node one edge away from `from` along `axis` in direction
/// `dir = ±1`.
pub(crate) fn step_index(from: (usize, usize), axis: Axis, dir: i64) -> (usize, usize) {
    match axis {
        Axis::U => ((from.0 as i64 + dir) as usize, from.1),
        Axis::V => (from.0, (from.1 as i64 + dir) as usize),
    }
}

/// Propagate a state over the whole grid from `base`, one lattice edge at a
/// time, taking the axis named first in `order` along the base row/column
/// and the other axis from there. `edge_step(state, from, axis, dir)`
/// integrates one edge to the neighbor `dir = ±1` along `axis`.
pub(crate) fn integrate_paths<S, F>(
    spec: &GridSpec,
    base: (usize, usize),
    init: S,
    order: PathOrder,
    edge_step: F,
) -> Grid<S>
where
    S: Clone,
    F: Fn(&S, (usize, usize), Axis, i64) -> S,
{
    assert!(base.0 < spec.nu && base.1 < spec.nv, "base point is outside the grid");
    let mut slots: Vec<Option<S>> = vec![None; spec.len()];
    let idx = |iu: usize, iv: usize| iu * spec.nv + iv;
    slots[idx(base.0, base.1)] = Some(init);

    let sweep_u = |slots: &mut Vec<Option<S>>, iv: usize, f: &F| {
        for iu in (base.0 + 1)..spec.nu {
            let prev = slots[idx(iu - 1, iv)].clone().expect("previous node filled");
            slots[idx(iu, iv)] = Some(f(&prev, (iu - 1, iv), Axis::U, 1));
        }
        for iu in (0..base.0).rev() {
            let prev = slots[idx(iu + 1, iv)].clone().expect("previous node filled");
            slots[idx(iu, iv)] = Some(f(&prev, (iu + 1, iv), Axis::U, -1));
        }
    };
    let sweep_v = |slots: &mut Vec<Option<S>>, iu: usize, f: &F| {
        for iv in (base.1 + 1)..spec.nv {
            let prev = slots[idx(iu, iv - 1)].clone().expect("previous node filled");
            slots[idx(iu, iv)] = Some(f(&prev, (iu, iv - 1), Axis::V, 1));
        }
        for iv in (0..base.1).rev() {
            let prev = slots[idx(iu, iv + 1)].clone().expect("previous node filled");
            slots[idx(iu, iv)] = Some(f(&prev, (iu, iv + 1), Axis::V, -1));
        }
    };

    match order {
        PathOrder::UThenV => {
            sweep_u(&mut slots, base.1, &edge_step);
            for iu in 0..spec.nu {
                sweep_v(&mut slots, iu, &edge_step);
            }
        }
        PathOrder::VThenU => {
            sweep_v(&mut slots, base.0, &edge_step);
            for iv in 0..spec.nv {
                sweep_u(&mut slots, iv, &edge_step);
            }
        }
    }
    Grid::from_vec(
        spec.nu,
        spec.nv,
        slots.into_iter().map(|s| s.expect("all nodes reached")).collect(),
    )
}

/// Number of Runge–Kutta substeps for an edge of length `h` (targets a fixed
/// substep length so coarse grids are not under-integrated).
pub(crate) fn substeps_for(h: f64) -> usize {
    ((h.abs() / 0.005).ceil() as usize).max(8)
}

/// Classical RK4 over one edge, `n` substeps. `deriv(sigma, state)` is the
/// derivative with respect to the edge parameter `sigma ∈ [0, 1]`.
pub(crate) fn rk4_edge<S, D>(init: S, n: usize, deriv: D) -> S
where
    S: Clone
        + std::ops::Add<S, Output = S>
        + std::ops::Mul<f64, Output = S>,
    D: Fn(f64, &S) -> S,
{
    let h = 1.0 / n as f64;
    let mut state = init;
    for k in 0..n {
        let t = k as f64 * h;
        let k1 = deriv(t, &state);
        let s2 = state.clone() + k1.clone() * (h / 2.0);
        let k2 = deriv(t + h / 2.0, &s2);
        let s3 = state.clone() + k2.clone() * (h / 2.0);
        let k3 = deriv(t + h / 2.0, &s3);
        let s4 = state.clone() + k3.clone() * h;
        let k4 = deriv(t + h, &s4);
        state = state
            + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal_frame::{FrameField, GaugeChoice};
    use crate::integrability::isothermic_check;
    use crate::jet::RJet;
    use crate::surface_model::{embed_flat_jets, homogeneous_torus, AnalyticEvaluator};
    use std::sync::Arc;

    fn torus_field(n: usize, order: usize) -> FrameField {
        let chart = homogeneous_torus(2.0, n, n).unwrap();
        FrameField::compute(&chart, order).unwrap()
    }

    #[test]
    fn left_normal_satisfies_its_derivative_relation() {
        // In the λ₂ ≡ ½ gauge: L_z = αL + ᾱY + Y_z̄.
        let field = torus_field(9, 6);
        assert_eq!(field.gauge, GaugeChoice::LambdaTwoHalf);
        for &(iu, iv) in &[(0usize, 0usize), (3, 6), (8, 8)] {
            let node = field.nodes.at(iu, iv);
            let frame = &node.frame;
            let resid = frame
                .l
                .dz()
                .sub(&frame.l.scale_jet(&node.inv.alpha))
                .sub(&frame.y.scale_jet(&node.inv.alpha.conj_jet()))
                .sub(&frame.y.dzbar());
            let worst = resid.value().coords.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "L_z relation residual {worst:e}");
        }
    }

    #[test]
    fn polar_charts_of_the_torus_are_isothermic() {
        let field = torus_field(9, 7);
        for side in [PolarSide::Left, PolarSide::Right] {
            let polar = polar_chart(&field, side).unwrap();
            let pfield = FrameField::compute(&polar.chart, 4).unwrap();
            let report = isothermic_check(&pfield, 1e-8).unwrap();
            assert!(report.passes, "{side:?} imag hopf {:?}", report.imag_hopf);
        }
    }

    #[test]
    fn left_polar_invariants_match_the_closed_form() {
        let field = torus_field(9, 7);
        let closed = left_polar_closed_form(&field).unwrap();
        assert!(closed.hopf_imag_max < 1e-10);

        let polar = polar_chart(&field, PolarSide::Left).unwrap();
        let pfield = FrameField::compute(&polar.chart, 4).unwrap();
        for &(iu, iv) in &[(2usize, 2usize), (5, 7)] {
            let inv = &pfield.nodes.at(iu, iv).inv;
            let s_expected = closed.schwarzian.at(iu, iv);
            assert!(
                (inv.s.value() - s_expected).norm() < 1e-8,
                "s_L = {} vs {}",
                inv.s.value(),
                s_expected
            );
            assert!((inv.l2.value() - c(0.5)).norm() < 1e-12);
            assert!((inv.l1.value() - closed.hopf_free.at(iu, iv)).norm() < 1e-8);
        }
    }

    #[test]
    fn polar_transforms_are_mutually_inverse() {
        let field = torus_field(9, 7);
        let source_values = field.nodes.map(|n| n.frame.y.real_value());

        let left = polar_chart(&field, PolarSide::Left).unwrap();
        let lfield = FrameField::compute(&left.chart, 4).unwrap();
        let back_right = polar_chart(&lfield, PolarSide::Right).unwrap();
        let d1 = projective_agreement(&back_right.lift_values, &source_values).unwrap();
        assert!(d1.max < 1e-8, "right∘left distance {:?}", d1);

        let right = polar_chart(&field, PolarSide::Right).unwrap();
        let rfield = FrameField::compute(&right.chart, 4).unwrap();
        let back_left = polar_chart(&rfield, PolarSide::Left).unwrap();
        let d2 = projective_agreement(&back_left.lift_values, &source_values).unwrap();
        assert!(d2.max < 1e-8, "left∘right distance {:?}", d2);
    }

    #[test]
    fn double_left_polar_matches_the_closed_form_lift() {
        let field = torus_field(9, 7);
        let hat = double_polar_lift(&field).unwrap();
        assert!(hat.imag_max < 1e-10);

        // The closed form for this family reduces to N + 2αY_z̄ + 2ᾱY_z + Y/6.
        let node = field.nodes.at(4, 4);
        let a = node.inv.alpha.value();
        let y = &node.frame.y;
        let direct = node
            .frame
            .n
            .add(&y.dzbar().scale(2.0 * a))
            .add(&y.dz().scale(2.0 * a.conj()))
            .add(&y.scale(c(1.0 / 6.0)))
            .real_value();
        let diff: f64 = direct
            .coords
            .iter()
            .zip(&hat.values.at(4, 4).coords)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10);

        // Ŷ is a null lift paired to −1 against Y, like N.
        let hat_c = crate::pseudo_euclidean::PseudoVector {
            coords: hat.values.at(4, 4).coords.clone(),
            sig: crate::pseudo_euclidean::Signature::R4_2,
        };
        assert!(hat_c.norm_sqr().abs() < 1e-10);
        assert!((hat_c.inner(&y.real_value()) + 1.0).abs() < 1e-10);

        // And it agrees with actually iterating the transform.
        let left = polar_chart(&field, PolarSide::Left).unwrap();
        let lfield = FrameField::compute(&left.chart, 4).unwrap();
        let second = polar_chart(&lfield, PolarSide::Left).unwrap();
        let dist = projective_agreement(&second.lift_values, &hat.values).unwrap();
        assert!(dist.max < 1e-7, "two-step vs closed form {:?}", dist);
    }

    #[test]
    fn polar_degenerates_where_the_hopf_component_vanishes() {
        let eval: AnalyticEvaluator = Arc::new(|u: &RJet, v: &RJet| {
            let f = &u.mul_jet(u) * u;
            embed_flat_jets(&[u.clone(), v.clone(), f.clone(), f])
        });
        let spec = GridSpec::new((0.5, 1.5, -0.5, 0.5), 9, 9);
        let chart = SurfaceChart::analytic(spec, "null-graph", eval);
        let field = FrameField::compute(&chart, 5).unwrap();
        // One side must degenerate, the other must work.
        let results = [
            polar_chart(&field, PolarSide::Left),
            polar_chart(&field, PolarSide::Right),
        ];
        let degenerate = results
            .iter()
            .filter(|r| matches!(r, Err(Error::DegenerateTransform(_))))
            .count();
        let fine = results.iter().filter(|r| r.is_ok()).count();
        assert_eq!((degenerate, fine), (1, 1), "exactly one side must degenerate");
    }

    #[test]
    fn path_engine_reaches_every_node_along_both_orders() {
        let spec = GridSpec::new((0.0, 1.0, 0.0, 1.0), 5, 4);
        // Trivial flow: count edges walked; both orders must agree with the
        // Manhattan distance from the base.
        for order in [PathOrder::UThenV, PathOrder::VThenU] {
            let steps = integrate_paths(&spec, (2, 1), 0usize, order, |s, _, _, _| s + 1);
            for iu in 0..5usize {
                for iv in 0..4usize {
                    let expected = iu.abs_diff(2) + iv.abs_diff(1);
                    assert_eq!(*steps.at(iu, iv), expected);
                }
            }
        }
    }

    #[test]
    fn rk4_integrates_a_known_exponential() {
        // y' = y on [0,1] from 1: e. With 200 substeps the classical scheme
        // carries a theoretical error near 1.4e-11.
        let y = rk4_edge(1.0_f64, substeps_for(1.0), |_, s| *s);
        assert!((y - f64::exp(1.0)).abs() < 1e-10);
    }
}
