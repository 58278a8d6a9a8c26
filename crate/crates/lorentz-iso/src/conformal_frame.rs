//! Canonical lifts, adapted moving frames, and conformal invariants.
//!
//! For a spacelike chart `Y(u,v)` on the light cone, the pipeline is:
//! rescale to the canonical lift (`⟨Y_z,Y_z̄⟩ = ½`), complete `{Y, Y_z, Y_z̄}`
//! with the fourth basis vector `N` of the tangent 4-space
//! (`⟨N,Y⟩ = −1`, `⟨N,N⟩ = ⟨N,Y_z⟩ = 0`) and a null basis `{L, R}` of the
//! Lorentzian normal plane (`⟨L,R⟩ = −1`, orientation-normalized), then read
//! off the invariants
//!
//! * Schwarzian `s = 2⟨Y_zz, N⟩`,
//! * Hopf components `λ₁ = −⟨Y_zz, R⟩`, `λ₂ = −⟨Y_zz, L⟩`,
//! * normal connection `α = −⟨L_z, R⟩`,
//! * derived `β = λ₁λ̄₂ + λ₂λ̄₁`, `γ₁ = λ₁,z̄ + λ₁ᾱ`, `γ₂ = λ₂,z̄ − λ₂ᾱ`.
//!
//! The normal frame carries the gauge freedom `(L,R) → (εe^g L, εe^{−g} R)`;
//! the default field-level policy rescales so that `λ₂ ≡ ½` (falling back to
//! `λ₁ ≡ ½` when the left component degenerates), which pins the frame
//! uniquely and makes per-node constructions agree with a single smooth
//! global frame.

use num_complex::Complex64;

use crate::grid::{median, summarize, Grid, GridSpec, Summary};
use crate::jet::{jet_linsolve, CJet, RJet};
use crate::numerics::axis_plan;
use crate::pseudo_euclidean::orientation_det;
use crate::surface_model::{jets_from_samples, JetPoint, JetVec, SurfaceChart};
use crate::{Error, Result};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Rescale a light-cone jet to the canonical lift with `⟨Y_z,Y_z̄⟩ = ½`.
///
/// Costs one jet order (the conformal factor uses first derivatives).
/// Rejects charts that are off the cone, not spacelike, or grossly
/// non-conformal; small conformality defects (finite-difference noise) pass
/// and surface in the residual certificates instead.
pub fn canonical_lift(jet: &JetPoint) -> Result<JetVec> {
    let n = jet.order();
    if n < 1 {
        return Err(Error::JetOrder("canonical lift needs jets of order >= 1".into()));
    }
    let y0 = jet.to_complex();
    let scale = y0
        .components()
        .iter()
        .map(|comp| comp.value().norm_sqr())
        .sum::<f64>()
        .max(1e-300);
    let yy = y0.inner(&y0).value().norm();
    if yy > 1e-8 * scale {
        return Err(Error::Causality(format!(
            "chart point is not on the light cone: <Y,Y>/|Y|^2 = {:e}",
            yy / scale
        )));
    }
    let (yu, yv) = (y0.du(), y0.dv());
    let guu = yu.inner(&yu).value().re;
    let gvv = yv.inner(&yv).value().re;
    let guv = yu.inner(&yv).value().re;
    let trace = guu + gvv;
    if !(trace > 0.0) {
        return Err(Error::Causality(format!(
            "chart is not spacelike: <Y_u,Y_u> + <Y_v,Y_v> = {trace:e}"
        )));
    }
    if (guu - gvv).abs() + 2.0 * guv.abs() > 0.25 * trace {
        return Err(Error::Conformality(format!(
            "chart coordinates are not conformal: metric ({guu:e}, {guv:e}, {gvv:e})"
        )));
    }
    // σ = ⟨Y_z,Y_z̄⟩ as a real jet; Y ← (2σ)^{−1/2} · Y.
    let sigma = (&yu.inner(&yu).re_part() + &yv.inner(&yv).re_part()).scale(0.25);
    let factor = sigma.scale(2.0).sqrt_jet().recip().to_complex();
    Ok(y0.truncated(n - 1).scale_jet(&factor))
}

/// The adapted frame at a point, as jets. `y` is the canonical lift; `n` the
/// fourth tangent-space vector; `l`, `r` the null normal pair.
#[derive(Clone, Debug)]
pub struct MovingFrame {
    pub y: JetVec,
    pub n: JetVec,
    pub l: JetVec,
    pub r: JetVec,
}

/// Null basis of the Lorentzian plane spanned by two jet vectors, with
/// `⟨A,B⟩ = −1`. Uses the stable quadratic-root split of the pair's Gram
/// form; errors if the plane fails to be Lorentzian.
fn null_pair(w1: &JetVec, w2: &JetVec) -> Result<(JetVec, JetVec)> {
    let a = w1.inner(w1);
    let b = w1.inner(w2);
    let cc = w2.inner(w2);
    let disc = &b.mul_jet(&b) - &a.mul_jet(&cc);
    let size = a.value().norm() + b.value().norm() + cc.value().norm();
    if disc.value().re <= 1e-12 * size * size || disc.value().re <= 0.0 {
        return Err(Error::DegenerateSurface(format!(
            "normal plane is not Lorentzian: discriminant = {:e}",
            disc.value().re
        )));
    }
    let root = disc.sqrt_jet();
    let (base, dir, lead, other) = if cc.value().norm() >= a.value().norm() {
        (w1, w2, cc, a)
    } else {
        (w2, w1, a, cc)
    };
    let sgn = if b.value().re >= 0.0 { 1.0 } else { -1.0 };
    let q = (&b + &root.scale(c(sgn))).scale(c(-1.0));
    let t1 = q.div_jet(&lead);
    let t2 = other.div_jet(&q);
    let va = base.add_scaled_jet(&t1, dir);
    let mut vb = base.add_scaled_jet(&t2, dir);
    let mut g = va.inner(&vb);
    if g.value().re > 0.0 {
        vb = vb.scale(c(-1.0));
        g = g.scale(c(-1.0));
    }
    let k = g.scale(c(-1.0)).sqrt_jet().recip();
    Ok((va.scale_jet(&k), vb.scale_jet(&k)))
}

/// Complete a canonical lift jet to the adapted moving frame (pre-gauge).
///
/// `N` is found by a 3×3 jet solve against the computed pairings (so it stays
/// exactly conjugate to the numerical `Y_z` even on sampled charts), `L`/`R`
/// by projecting the ambient basis onto the normal plane and splitting it
/// into null directions; the pair is ordered so that
/// `det(Y, Y_u, Y_v, N, R, L) > 0`.
pub fn moving_frame(y: &JetVec) -> Result<MovingFrame> {
    let m = y.order();
    if m < 2 {
        return Err(Error::JetOrder("moving frame needs canonical jets of order >= 2".into()));
    }
    let mo = m - 2;
    let yz = y.dz();
    let yzb = y.dzbar();
    let yzzb = yz.dzbar();

    // N₀ = a·Y_z + b·Y_z̄ + c·Y_zz̄ with ⟨N₀,Y⟩ = −1, ⟨N₀,Y_z⟩ = ⟨N₀,Y_z̄⟩ = 0.
    let span = [&yz, &yzb, &yzzb];
    let constraints = [y, &yz, &yzb];
    let mut a_rows = Vec::with_capacity(3);
    for constraint in constraints {
        let row: Vec<CJet> = span
            .iter()
            .map(|basis| basis.inner(constraint).truncated(mo))
            .collect();
        a_rows.push(row);
    }
    let rhs = vec![
        vec![CJet::constant(c(-1.0), mo)],
        vec![CJet::constant(c(0.0), mo)],
        vec![CJet::constant(c(0.0), mo)],
    ];
    let coeffs = jet_linsolve(a_rows, rhs);
    let n0 = yz
        .scale_jet(&coeffs[0][0])
        .add(&yzb.scale_jet(&coeffs[1][0]))
        .add(&yzzb.scale_jet(&coeffs[2][0]));
    let nn = n0.inner(&n0);
    let nvec = n0.add_scaled_jet(&nn.scale(c(0.5)), y);

    // Project the ambient basis onto span{Y, Y_z, Y_z̄, N} and keep the two
    // residuals with the most independent normal-plane Gram.
    let basis = [y, &yz, &yzb, &nvec];
    let mut gram = Vec::with_capacity(4);
    for bi in basis {
        let row: Vec<CJet> = basis.iter().map(|bj| bi.inner(bj).truncated(mo)).collect();
        gram.push(row);
    }
    // ⟨e_k, b⟩ = ε_k b_k, so the right-hand sides are just signed components.
    let mut rhs_cols = Vec::with_capacity(4);
    for bi in basis {
        let row: Vec<CJet> = (0..6)
            .map(|k| {
                let sign = crate::pseudo_euclidean::Signature::R4_2.sign(k);
                bi.component(k).scale(c(sign)).truncated(mo)
            })
            .collect();
        rhs_cols.push(row);
    }
    let proj = jet_linsolve(gram, rhs_cols);
    let mut residuals = Vec::with_capacity(6);
    for k in 0..6 {
        let mut comps: Vec<CJet> = vec![CJet::zeros(mo); 6];
        comps[k] = CJet::constant(c(1.0), mo);
        let mut w = JetVec::from_components(comps).expect("six components");
        for (i, bi) in basis.iter().enumerate() {
            w = w.sub(&bi.scale_jet(&proj[i][k]));
        }
        residuals.push(w);
    }
    let mut best = (0usize, 1usize, -1.0_f64);
    for i in 0..6 {
        for j in (i + 1)..6 {
            let gii = residuals[i].inner(&residuals[i]).value();
            let gjj = residuals[j].inner(&residuals[j]).value();
            let gij = residuals[i].inner(&residuals[j]).value();
            let det = (gii * gjj - gij * gij).norm();
            if det > best.2 {
                best = (i, j, det);
            }
        }
    }
    let (l0, r0) = null_pair(&residuals[best.0], &residuals[best.1])?;

    let y_val = y.real_value();
    let yu_val = y.du().real_value();
    let yv_val = y.dv().real_value();
    let n_val = nvec.real_value();
    let l_val = l0.real_value();
    let r_val = r0.real_value();
    let det = orientation_det(&[&y_val, &yu_val, &yv_val, &n_val, &r_val, &l_val]);
    if det.abs() < 1e-12 {
        return Err(Error::DegenerateSurface(format!(
            "frame orientation is degenerate: det = {det:e}"
        )));
    }
    let (l, r) = if det > 0.0 { (l0, r0) } else { (r0, l0) };
    // Keep y at full order: the invariants need Y_zz two orders above N.
    Ok(MovingFrame { y: y.clone(), n: nvec, l, r })
}

/// The scalar invariants at a point, as jets. With a canonical lift of order
/// `m`, `s`/`λ` have order `m−2` and `α`/`γ` order `m−3`; when `m = 2`
/// (value-level sampled pipeline) `α` and `γ` are zero-initialized and filled
/// by field differencing in [`FrameField::compute_sampled`].
#[derive(Clone, Debug)]
pub struct InvariantJets {
    pub s: CJet,
    pub l1: CJet,
    pub l2: CJet,
    pub alpha: CJet,
    pub beta: RJet,
    pub gamma1: CJet,
    pub gamma2: CJet,
}

/// Read the invariants off a frame.
pub fn invariants(frame: &MovingFrame) -> InvariantJets {
    let yzz = frame.y.dz().dz();
    let s = yzz.inner(&frame.n).scale(c(2.0));
    let l1 = yzz.inner(&frame.r).scale(c(-1.0));
    let l2 = yzz.inner(&frame.l).scale(c(-1.0));
    let beta = (&l1.mul_jet(&l2.conj_jet()) + &l2.mul_jet(&l1.conj_jet())).re_part();
    let (alpha, gamma1, gamma2) = if frame.y.order() >= 3 {
        let alpha = frame.l.dz().inner(&frame.r).scale(c(-1.0));
        let ac = alpha.conj_jet();
        let gamma1 = &l1.dzbar() + &l1.mul_jet(&ac);
        let gamma2 = &l2.dzbar() - &l2.mul_jet(&ac);
        (alpha, gamma1, gamma2)
    } else {
        (CJet::zeros(0), CJet::zeros(0), CJet::zeros(0))
    };
    InvariantJets { s, l1, l2, alpha, beta, gamma1, gamma2 }
}

/// Apply the normal gauge `(L,R) → (ε e^g L, ε e^{−g} R)` (`ε = ±1`, `g` a
/// real jet) to a frame, pushing the invariants through their covariance
/// rules: `λ₁ → ε e^{−g} λ₁`, `λ₂ → ε e^g λ₂`, `α → α + g_z`,
/// `γ₁ → ε e^{−g} γ₁`, `γ₂ → ε e^g γ₂`; `s` and `β` are invariant.
pub fn gauge_transform(
    frame: &MovingFrame,
    inv: &InvariantJets,
    eps: f64,
    g: &RJet,
) -> (MovingFrame, InvariantJets) {
    let eg = g.exp_jet().to_complex();
    let emg = g.scale(-1.0).exp_jet().to_complex();
    let l = frame.l.scale_jet(&eg).scale(c(eps));
    let r = frame.r.scale_jet(&emg).scale(c(eps));
    let alpha = if g.order() >= 1 {
        &inv.alpha + &g.to_complex().dz()
    } else {
        inv.alpha.clone()
    };
    let out_inv = InvariantJets {
        s: inv.s.clone(),
        l1: inv.l1.mul_jet(&emg).scale(c(eps)),
        l2: inv.l2.mul_jet(&eg).scale(c(eps)),
        alpha,
        beta: inv.beta.clone(),
        gamma1: inv.gamma1.mul_jet(&emg).scale(c(eps)),
        gamma2: inv.gamma2.mul_jet(&eg).scale(c(eps)),
    };
    let out_frame = MovingFrame { y: frame.y.clone(), n: frame.n.clone(), l, r };
    (out_frame, out_inv)
}

/// Worst value-level deviation of a frame's pairings from the canonical Gram
/// table (`⟨Y,Y⟩ = 0`, `⟨Y_z,Y_z̄⟩ = ½`, `⟨Y,N⟩ = ⟨L,R⟩ = −1`, all else 0).
pub fn frame_gram_deviation(frame: &MovingFrame) -> f64 {
    let yz = frame.y.dz();
    let yzb = frame.y.dzbar();
    let pairs: [(&JetVec, &JetVec, f64); 14] = [
        (&frame.y, &frame.y, 0.0),
        (&frame.y, &yz, 0.0),
        (&yz, &yz, 0.0),
        (&yz, &yzb, 0.5),
        (&frame.y, &frame.n, -1.0),
        (&frame.n, &frame.n, 0.0),
        (&frame.n, &yz, 0.0),
        (&frame.l, &frame.l, 0.0),
        (&frame.r, &frame.r, 0.0),
        (&frame.l, &frame.r, -1.0),
        (&frame.l, &frame.y, 0.0),
        (&frame.l, &yz, 0.0),
        (&frame.r, &frame.y, 0.0),
        (&frame.r, &yz, 0.0),
    ];
    let mut worst = 0.0_f64;
    for (a, b, target) in pairs {
        worst = worst.max((a.inner(b).value() - c(target)).norm());
    }
    // L and R must also be normal to N.
    worst = worst.max(frame.l.inner(&frame.n).value().norm());
    worst = worst.max(frame.r.inner(&frame.n).value().norm());
    worst
}

/// Which λ-component the field-level gauge pinned to ½.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeChoice {
    /// `λ₂ ≡ ½` (default).
    LambdaTwoHalf,
    /// `λ₁ ≡ ½` (fallback when λ₂ degenerates).
    LambdaOneHalf,
    /// No gauge applied (both components degenerate on most of the grid).
    Raw,
}

/// Frame and invariants at one grid node, with degeneracy flags.
#[derive(Clone, Debug)]
pub struct FrameNode {
    pub frame: MovingFrame,
    pub inv: InvariantJets,
    /// `|λ₁| + |λ₂|` vanished relative to the grid median.
    pub umbilic: bool,
    /// The gauge's λ-component vanished here; the node keeps its raw frame.
    pub degenerate: bool,
    /// `|λ₁| + |λ₂|` exploded relative to the grid median: the immersion's
    /// conformal factor collapses here (an isolated singular point of the
    /// surface), so the frame and invariants carry no meaning.
    pub singular: bool,
}

/// The frame pipeline applied over a whole chart.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub spec: GridSpec,
    pub label: String,
    /// Jet order requested from the chart.
    pub source_order: usize,
    pub gauge: GaugeChoice,
    pub nodes: Grid<FrameNode>,
    /// Median of the pre-gauge `|λ₁| + |λ₂|` values (degeneracy scale).
    pub kappa_median: f64,
    /// True when α/γ were produced by field-level differencing (sampled
    /// charts) rather than per-node jets.
    pub sampled_alpha: bool,
}

fn modulus_jet(l: &CJet) -> RJet {
    l.mul_jet(&l.conj_jet()).re_part().sqrt_jet()
}

struct GaugePlan {
    choice: GaugeChoice,
    kappa_median: f64,
    threshold: f64,
}

fn plan_gauge(raw: &Grid<(MovingFrame, InvariantJets)>) -> Result<GaugePlan> {
    let kappa = raw.map(|(_, inv)| inv.l1.value().norm() + inv.l2.value().norm());
    let kappa_median = median(&kappa);
    // Umbilic means λ vanishes *relative to the second fundamental data*:
    // in the canonical gauge the frame vectors are O(1), so the Hessian
    // coefficients |s|/2, |λ|, |β| set the scale.
    let hessian = raw.map(|(_, inv)| {
        0.5 * inv.s.value().norm()
            + inv.l1.value().norm()
            + inv.l2.value().norm()
            + inv.beta.value().abs()
    });
    let hessian_median = median(&hessian).max(1e-300);
    if kappa_median <= 1e-10 * hessian_median {
        return Err(Error::DegenerateSurface(
            "surface is totally umbilic: both Hopf components vanish".into(),
        ));
    }
    let threshold = 1e-8 * kappa_median;
    let med_l2 = median(&raw.map(|(_, inv)| inv.l2.value().norm()));
    let med_l1 = median(&raw.map(|(_, inv)| inv.l1.value().norm()));
    let choice = if med_l2 > threshold {
        GaugeChoice::LambdaTwoHalf
    } else if med_l1 > threshold {
        GaugeChoice::LambdaOneHalf
    } else {
        GaugeChoice::Raw
    };
    Ok(GaugePlan { choice, kappa_median, threshold })
}

fn gauge_node(
    frame: MovingFrame,
    inv: InvariantJets,
    plan: &GaugePlan,
) -> FrameNode {
    let umbilic = inv.l1.value().norm() + inv.l2.value().norm() < plan.threshold;
    let chosen = match plan.choice {
        GaugeChoice::LambdaTwoHalf => Some(&inv.l2),
        GaugeChoice::LambdaOneHalf => Some(&inv.l1),
        GaugeChoice::Raw => None,
    };
    let degenerate = match chosen {
        Some(l) => l.value().norm() < plan.threshold,
        None => true,
    };
    if umbilic || degenerate {
        return FrameNode { frame, inv, umbilic, degenerate: true, singular: false };
    }
    let lam = chosen.expect("degenerate handled above");
    let eps = if lam.value().re >= 0.0 { 1.0 } else { -1.0 };
    // e^{±g} = 1/(2|λ|) so the chosen component becomes ½ exactly.
    let ln2l = modulus_jet(lam).scale(2.0).ln_jet();
    let g = match plan.choice {
        GaugeChoice::LambdaTwoHalf => ln2l.scale(-1.0),
        _ => ln2l,
    };
    let (frame, inv) = gauge_transform(&frame, &inv, eps, &g);
    FrameNode { frame, inv, umbilic, degenerate: false, singular: false }
}

/// Flag immersion singularities: the gauged Hopf components are pinned to a
/// common scale (`λ₂ ≡ ½`), so nodes whose `|λ₁| + |λ₂|` sits orders of
/// magnitude above the grid median mean the conformal factor collapsed there
/// (an isolated singular point of the surface), not that it bends fast.
fn mark_singular(nodes: &mut Grid<FrameNode>) {
    let kappa = nodes.map(|n| n.inv.l1.value().norm() + n.inv.l2.value().norm());
    let ceiling = 1e3 * median(&kappa);
    for iu in 0..nodes.nu {
        for iv in 0..nodes.nv {
            if *kappa.at(iu, iv) > ceiling {
                nodes.at_mut(iu, iv).singular = true;
            }
        }
    }
}

impl FrameField {
    /// Run the full jet pipeline over a chart. `order` is the jet order
    /// requested per node (≥ 4: α needs three derivative levels above the
    /// canonical lift). Use [`FrameField::compute_sampled`] for order-2
    /// (finite-difference) charts.
    pub fn compute(chart: &SurfaceChart, order: usize) -> Result<FrameField> {
        if order < 4 {
            return Err(Error::JetOrder(
                "frame pipeline needs source jets of order >= 4 (see compute_sampled)".into(),
            ));
        }
        if let Some(max) = chart.max_order() {
            if order > max {
                return Err(Error::JetOrder(format!(
                    "chart provides order {max} but order {order} was requested"
                )));
            }
        }
        let spec = chart.spec().clone();
        let raw_results = Grid::from_fn_parallel(spec.nu, spec.nv, |iu, iv| -> Result<_> {
            let jet = chart.jet_at_node(iu, iv, order)?;
            let y = canonical_lift(&jet)?;
            let frame = moving_frame(&y)?;
            let inv = invariants(&frame);
            Ok((frame, inv))
        });
        let mut raw_nodes = Vec::with_capacity(spec.len());
        for (_, _, node) in raw_results.iter_indexed() {
            match node {
                Ok(pair) => raw_nodes.push(pair.clone()),
                Err(e) => {
                    return Err(Error::DegenerateSurface(format!(
                        "frame construction failed: {e}"
                    )))
                }
            }
        }
        let raw = Grid::from_vec(spec.nu, spec.nv, raw_nodes);
        let plan = plan_gauge(&raw)?;
        let nodes = Grid::from_fn_parallel(spec.nu, spec.nv, |iu, iv| {
            let (frame, inv) = raw.at(iu, iv).clone();
            gauge_node(frame, inv, &plan)
        });
        let mut nodes = nodes;
        mark_singular(&mut nodes);
        Ok(FrameField {
            spec,
            label: chart.label().to_string(),
            source_order: order,
            gauge: plan.choice,
            nodes,
            kappa_median: plan.kappa_median,
            sampled_alpha: false,
        })
    }

    /// Value-level pipeline for sampled charts.
    ///
    /// Jets come from order-2 finite differences of the node values; the
    /// canonical rescale happens on the value grid (then re-differenced) so
    /// no jet order is lost; `α` and `γ` are produced by differencing the
    /// gauged frame and invariant fields with the same stencils. Everything
    /// inherits the stencils' O(h²) accuracy.
    pub fn compute_sampled(chart: &SurfaceChart) -> Result<FrameField> {
        let spec = chart.spec().clone();
        let values = chart.value_grid();
        let base = jets_from_samples(&spec, &values, 2)?;

        // Canonical rescale at value level, then re-difference.
        let mut rescaled = Vec::with_capacity(spec.len());
        for iu in 0..spec.nu {
            for iv in 0..spec.nv {
                let jet = base.jet_at_node(iu, iv, 2)?;
                let y = jet.to_complex();
                let (yu, yv) = (y.du(), y.dv());
                let guu = yu.inner(&yu).value().re;
                let gvv = yv.inner(&yv).value().re;
                let sigma = 0.25 * (guu + gvv);
                if !(sigma > 0.0) {
                    return Err(Error::Causality(format!(
                        "sampled chart is not spacelike at node ({iu},{iv})"
                    )));
                }
                rescaled.push(values.at(iu, iv).scale(1.0 / (2.0 * sigma).sqrt()));
            }
        }
        let canonical_values = Grid::from_vec(spec.nu, spec.nv, rescaled);
        let canonical = jets_from_samples(&spec, &canonical_values, 2)?;

        let raw_results = Grid::from_fn_parallel(spec.nu, spec.nv, |iu, iv| -> Result<_> {
            let jet = canonical.jet_at_node(iu, iv, 2)?;
            // Already canonical to O(h²); skip the jet rescale (it would
            // truncate the jets below what the frame needs).
            let frame = moving_frame(&jet.to_complex())?;
            let inv = invariants(&frame);
            Ok((frame, inv))
        });
        let mut raw_nodes = Vec::with_capacity(spec.len());
        for (_, _, node) in raw_results.iter_indexed() {
            match node {
                Ok(pair) => raw_nodes.push(pair.clone()),
                Err(e) => {
                    return Err(Error::DegenerateSurface(format!(
                        "frame construction failed: {e}"
                    )))
                }
            }
        }
        let raw = Grid::from_vec(spec.nu, spec.nv, raw_nodes);
        let plan = plan_gauge(&raw)?;
        let mut nodes_grid = Grid::from_fn_parallel(spec.nu, spec.nv, |iu, iv| {
            let (frame, inv) = raw.at(iu, iv).clone();
            gauge_node(frame, inv, &plan)
        });

        // α = −⟨L_z, R⟩ by differencing the gauged L field.
        let mut l_dz_comps = Vec::with_capacity(6);
        for k in 0..6 {
            let comp = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
                nodes_grid.at(iu, iv).frame.l.component(k).value()
            });
            l_dz_comps.push(fd_dz_field(&spec, &comp)?);
        }
        let alpha = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
            let node = nodes_grid.at(iu, iv);
            let mut acc = c(0.0);
            for k in 0..6 {
                let sign = crate::pseudo_euclidean::Signature::R4_2.sign(k);
                acc += c(sign) * l_dz_comps[k].at(iu, iv) * node.frame.r.component(k).value();
            }
            -acc
        });
        // γ from the λ fields and α.
        let l1_field = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
            nodes_grid.at(iu, iv).inv.l1.value()
        });
        let l2_field = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
            nodes_grid.at(iu, iv).inv.l2.value()
        });
        let l1_dzb = fd_dzbar_field(&spec, &l1_field)?;
        let l2_dzb = fd_dzbar_field(&spec, &l2_field)?;
        for iu in 0..spec.nu {
            for iv in 0..spec.nv {
                let a = *alpha.at(iu, iv);
                let node = nodes_grid.at_mut(iu, iv);
                node.inv.alpha = CJet::constant(a, 0);
                node.inv.gamma1 =
                    CJet::constant(l1_dzb.at(iu, iv) + node.inv.l1.value() * a.conj(), 0);
                node.inv.gamma2 =
                    CJet::constant(l2_dzb.at(iu, iv) - node.inv.l2.value() * a.conj(), 0);
            }
        }

        mark_singular(&mut nodes_grid);
        Ok(FrameField {
            spec,
            label: chart.label().to_string(),
            source_order: 2,
            gauge: plan.choice,
            nodes: nodes_grid,
            kappa_median: plan.kappa_median,
            sampled_alpha: true,
        })
    }

    /// Nodes excluded from residual summaries (umbilic, gauge-degenerate,
    /// or immersion-singular).
    pub fn mask(&self) -> Grid<bool> {
        self.nodes.map(|n| n.umbilic || n.degenerate || n.singular)
    }

    /// Imaginary part of the gauged Hopf components per node, normalized by
    /// the local Hopf magnitude. The normalization keeps the certificate
    /// meaningful near chart points where the conformal factor degenerates
    /// and the component moduli (hence their round-off noise) blow up.
    pub fn imag_hopf(&self) -> Grid<f64> {
        self.nodes.map(|n| {
            let l1 = n.inv.l1.value();
            let l2 = n.inv.l2.value();
            let imag = l1.im.abs().max(l2.im.abs());
            imag / (1.0 + l1.norm().max(l2.norm()))
        })
    }

    pub fn imag_hopf_summary(&self) -> Summary {
        summarize(&self.imag_hopf(), Some(&self.mask()))
    }

    /// Worst frame Gram deviation over the grid.
    pub fn gram_summary(&self) -> Summary {
        let devs = self.nodes.map(|n| frame_gram_deviation(&n.frame));
        summarize(&devs, None)
    }

    /// Invariant values as CSV (`u,v,Re_s,Im_s,Re_l1,Im_l1,Re_l2,Im_l2,
    /// Re_alpha,Im_alpha,beta`), v-inner row-major, LF endings.
    pub fn invariants_csv(&self) -> String {
        let mut out = String::with_capacity(64 + 200 * self.spec.len());
        out.push_str("u,v,Re_s,Im_s,Re_l1,Im_l1,Re_l2,Im_l2,Re_alpha,Im_alpha,beta\n");
        for iu in 0..self.spec.nu {
            for iv in 0..self.spec.nv {
                let inv = &self.nodes.at(iu, iv).inv;
                let (s, l1, l2, al) =
                    (inv.s.value(), inv.l1.value(), inv.l2.value(), inv.alpha.value());
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    self.spec.u_at(iu),
                    self.spec.v_at(iv),
                    s.re, s.im, l1.re, l1.im, l2.re, l2.im, al.re, al.im,
                    inv.beta.value(),
                ));
            }
        }
        out
    }
}

/// Wirtinger z-derivative of a complex scalar field by finite differences
/// (same stencils as the sampled-jet pathway; wraps on periodic axes).
pub(crate) fn fd_dz_field(spec: &GridSpec, vals: &Grid<Complex64>) -> Result<Grid<Complex64>> {
    fd_wirtinger(spec, vals, false)
}

/// Wirtinger z̄-derivative, ditto.
pub(crate) fn fd_dzbar_field(spec: &GridSpec, vals: &Grid<Complex64>) -> Result<Grid<Complex64>> {
    fd_wirtinger(spec, vals, true)
}

fn fd_wirtinger(spec: &GridSpec, vals: &Grid<Complex64>, bar: bool) -> Result<Grid<Complex64>> {
    let plan_u = axis_plan(spec.nu, spec.h_u(), spec.periodic_u, 1)?;
    let plan_v = axis_plan(spec.nv, spec.h_v(), spec.periodic_v, 1)?;
    let i_unit = Complex64::new(0.0, if bar { 1.0 } else { -1.0 });
    Ok(Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
        let (ui, uw, _) = &plan_u[iu][1];
        let (vi, vw, _) = &plan_v[iv][1];
        let mut du = c(0.0);
        for (p, &w) in uw.iter().enumerate() {
            du += c(w) * vals.at(ui[p], iv);
        }
        let mut dv = c(0.0);
        for (q, &w) in vw.iter().enumerate() {
            dv += c(w) * vals.at(iu, vi[q]);
        }
        (du + i_unit * dv) * 0.5
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;
    use crate::surface_model::{homogeneous_torus, rotational_surface, ProfileCurve};
    use crate::surface_model::{embed_flat_jets, AnalyticEvaluator};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn torus_field(order: usize) -> FrameField {
        let chart = homogeneous_torus(2.0, 9, 9).unwrap();
        FrameField::compute(&chart, order).unwrap()
    }

    /// Spacelike graph `x = (u, v, u³, u³)` inside a degenerate hyperplane of
    /// flat R³₊¹: one null normal direction is the constant `e₄ + e₅`, so one
    /// Hopf component vanishes identically.
    fn null_graph_chart() -> SurfaceChart {
        let eval: AnalyticEvaluator = Arc::new(|u: &RJet, v: &RJet| {
            let f = &u.mul_jet(u) * u;
            embed_flat_jets(&[u.clone(), v.clone(), f.clone(), f])
        });
        let spec = crate::grid::GridSpec::new((0.5, 1.5, -0.5, 0.5), 9, 9);
        SurfaceChart::analytic(spec, "null-graph", eval)
    }

    #[test]
    fn torus_invariants_match_closed_form() {
        let field = torus_field(6);
        assert_eq!(field.gauge, GaugeChoice::LambdaTwoHalf);
        let expected_re_alpha = 1.0 / (2.0 * 6.0_f64.sqrt());
        for &(iu, iv) in &[(0usize, 0usize), (4, 7), (8, 3)] {
            let inv = &field.nodes.at(iu, iv).inv;
            let s = inv.s.value();
            assert!((s - Complex64::new(0.0, 1.0 / 6.0)).norm() < 1e-10, "s = {s}");
            assert!((inv.l1.value() - c(-1.0 / 3.0)).norm() < 1e-10);
            assert!((inv.l2.value() - c(0.5)).norm() < 1e-12);
            assert_relative_eq!(inv.beta.value(), -1.0 / 3.0, epsilon = 1e-10);
            let a = inv.alpha.value();
            assert!((a * a - Complex64::new(0.0, -1.0 / 12.0)).norm() < 1e-10, "alpha^2 = {}", a * a);
            assert_relative_eq!(a.re.abs(), expected_re_alpha, epsilon = 1e-9);
            assert_relative_eq!(a.im.abs(), expected_re_alpha, epsilon = 1e-9);
            // γ₁ = λ₁ᾱ and γ₂ = −λ₂ᾱ for this family.
            assert!((inv.gamma1.value() - inv.l1.value() * a.conj()).norm() < 1e-9);
            assert!((inv.gamma2.value() + inv.l2.value() * a.conj()).norm() < 1e-9);
            // The invariants are constant: first-order jet coefficients vanish.
            assert!(inv.s.coeff(1, 0).norm() < 1e-9);
            assert!(inv.l1.coeff(0, 1).norm() < 1e-9);
            assert!(!field.nodes.at(iu, iv).umbilic);
        }
    }

    #[test]
    fn frame_gram_is_canonical_to_roundoff() {
        let field = torus_field(5);
        let gram = field.gram_summary();
        assert!(gram.max < 1e-10, "gram deviation {:?}", gram);
    }

    #[test]
    fn canonical_lift_is_scale_invariant() {
        let chart = homogeneous_torus(2.0, 9, 9).unwrap();
        let jet = chart.jet_at_node(3, 4, 5).unwrap();
        let lift = canonical_lift(&jet).unwrap();

        let h = Jet::linear(0.3, 0.2, -0.1, 5).exp_jet();
        let scaled =
            JetPoint::new(jet.components().iter().map(|comp| comp.mul_jet(&h)).collect())
                .unwrap();
        let lift2 = canonical_lift(&scaled).unwrap();
        for k in 0..6 {
            let diff = lift.component(k) - lift2.component(k);
            for i in 0..=4usize {
                for j in 0..=4 - i {
                    assert!(diff.coeff(i, j).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gauge_covariance_matches_recomputment_from_frame() {
        let field = torus_field(6);
        let node = field.nodes.at(2, 5);
        let g = Jet::linear(0.12, -0.4, 0.25, node.inv.alpha.order() + 1);
        let (gauged_frame, pushed) = gauge_transform(&node.frame, &node.inv, -1.0, &g);
        let recomputed = invariants(&gauged_frame);
        let order = pushed.alpha.order().min(recomputed.alpha.order());
        for (a, b) in [
            (&pushed.s, &recomputed.s),
            (&pushed.l1, &recomputed.l1),
            (&pushed.l2, &recomputed.l2),
            (&pushed.alpha, &recomputed.alpha),
            (&pushed.gamma1, &recomputed.gamma1),
            (&pushed.gamma2, &recomputed.gamma2),
        ] {
            for i in 0..=order {
                for j in 0..=order - i {
                    let d = (a.coeff(i, j) - b.coeff(i, j)).norm();
                    assert!(d < 1e-9, "coeff ({i},{j}) differs by {d:e}");
                }
            }
        }
        let dev = frame_gram_deviation(&gauged_frame);
        assert!(dev < 1e-10);
    }

    #[test]
    fn beta_agrees_with_its_two_definitions() {
        let field = torus_field(5);
        for &(iu, iv) in &[(1usize, 1usize), (6, 2)] {
            let node = field.nodes.at(iu, iv);
            // β also shows up as −⟨Y_zz̄, N⟩.
            let yzzb = node.frame.y.dz().dzbar();
            let other = yzzb.inner(&node.frame.n).scale(c(-1.0));
            assert!((node.inv.beta.value() - other.value().re).abs() < 1e-10);
            assert!(other.value().im.abs() < 1e-10);
        }
    }

    #[test]
    fn rotational_surface_is_isothermic_in_its_chart() {
        let profile = ProfileCurve::parabolic((1.0, 2.0)).unwrap();
        let chart = rotational_surface(&profile, 12, 12).unwrap();
        let field = FrameField::compute(&chart, 5).unwrap();
        let imag = field.imag_hopf_summary();
        assert!(imag.max < 1e-8, "imag Hopf {:?}", imag);
        assert!(field.gram_summary().max < 1e-8);
    }

    #[test]
    fn rotated_coordinate_breaks_hopf_reality() {
        let chart = homogeneous_torus(2.0, 9, 9).unwrap();
        let rotated = chart.rotated(std::f64::consts::FRAC_PI_4).unwrap();
        let field = FrameField::compute(&rotated, 5).unwrap();
        let imag = field.imag_hopf_summary();
        assert!(imag.max > 0.1, "rotated chart should have imaginary Hopf, got {:?}", imag);
    }

    #[test]
    fn degenerate_hopf_side_falls_back_cleanly() {
        let field = FrameField::compute(&null_graph_chart(), 5).unwrap();
        // One component vanished identically; the gauge pinned the other.
        let (pinned, dead): (Vec<f64>, Vec<f64>) = match field.gauge {
            GaugeChoice::LambdaTwoHalf => (
                field.nodes.iter_indexed().map(|(_, _, n)| (n.inv.l2.value() - c(0.5)).norm()).collect(),
                field.nodes.iter_indexed().map(|(_, _, n)| n.inv.l1.value().norm()).collect(),
            ),
            GaugeChoice::LambdaOneHalf => (
                field.nodes.iter_indexed().map(|(_, _, n)| (n.inv.l1.value() - c(0.5)).norm()).collect(),
                field.nodes.iter_indexed().map(|(_, _, n)| n.inv.l2.value().norm()).collect(),
            ),
            GaugeChoice::Raw => panic!("gauge should not be raw"),
        };
        for d in pinned {
            assert!(d < 1e-12);
        }
        for d in dead {
            assert!(d < 1e-10 * field.kappa_median.max(1.0));
        }
        let masked = field.mask();
        assert!(masked.iter_indexed().all(|(_, _, &m)| !m));
    }

    #[test]
    fn sampled_pipeline_approximates_analytic_invariants() {
        let chart = homogeneous_torus(2.0, 33, 33).unwrap();
        let field = FrameField::compute_sampled(&chart).unwrap();
        assert!(field.sampled_alpha);
        assert_eq!(field.gauge, GaugeChoice::LambdaTwoHalf);
        let node = field.nodes.at(16, 16);
        let s = node.inv.s.value();
        assert!((s - Complex64::new(0.0, 1.0 / 6.0)).norm() < 0.05, "s = {s}");
        assert!((node.inv.l1.value() - c(-1.0 / 3.0)).norm() < 0.05);
        // Modulus normalization is exact even at value level.
        assert!((node.inv.l2.value().norm() - 0.5).abs() < 1e-13);
        let a = node.inv.alpha.value();
        assert!((a * a - Complex64::new(0.0, -1.0 / 12.0)).norm() < 0.05, "alpha^2 = {}", a * a);
        let g1 = node.inv.gamma1.value();
        assert!((g1 - node.inv.l1.value() * a.conj()).norm() < 0.05);
    }

    #[test]
    fn frame_rejects_insufficient_orders() {
        let chart = homogeneous_torus(2.0, 9, 9).unwrap();
        assert!(matches!(
            FrameField::compute(&chart, 3),
            Err(Error::JetOrder(_))
        ));
        let jet = chart.jet_at_node(0, 0, 2).unwrap();
        let y = canonical_lift(&jet).unwrap();
        assert!(matches!(moving_frame(&y), Err(Error::JetOrder(_))));
    }
}
