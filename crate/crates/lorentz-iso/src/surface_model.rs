//! Surfaces in the projectivized light cone of R⁴₊² presented as jet-valued
//! charts over a parameter rectangle.
//!
//! A chart stores, for every grid node, the truncated Taylor expansion of a
//! light-cone lift `Y(u,v) ∈ R⁴₊²`. Analytic charts evaluate closed-form jets
//! on demand (to any order); sampled charts hold finite-difference jets built
//! from node values. The two example families shipped here are the
//! homogeneous-torus family and profile-curve rotational surfaces; arbitrary
//! grids can be loaded from CSV.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::grid::{Grid, GridSpec};
use crate::jet::{CJet, Jet1, RJet};
use crate::numerics::{adaptive_simpson, axis_plan, MonotoneCubic};
use crate::pseudo_euclidean::{ComplexPseudoVector, PseudoVector, Signature};
use crate::{Error, Result};

/// A light-cone lift value with all partials to some order: six real jets.
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoint {
    comps: Vec<RJet>,
}

impl JetPoint {
    pub fn new(comps: Vec<RJet>) -> Result<Self> {
        if comps.len() != 6 {
            return Err(Error::DimensionMismatch(format!(
                "a chart jet needs 6 components, got {}",
                comps.len()
            )));
        }
        let order = comps[0].order();
        if comps.iter().any(|c| c.order() != order) {
            return Err(Error::DimensionMismatch(
                "chart jet components have mixed orders".into(),
            ));
        }
        Ok(JetPoint { comps })
    }

    pub fn order(&self) -> usize {
        self.comps[0].order()
    }

    pub fn component(&self, k: usize) -> &RJet {
        &self.comps[k]
    }

    pub fn components(&self) -> &[RJet] {
        &self.comps
    }

    pub fn truncated(&self, order: usize) -> JetPoint {
        JetPoint { comps: self.comps.iter().map(|c| c.truncated(order)).collect() }
    }

    pub fn value(&self) -> PseudoVector {
        PseudoVector::r42([
            self.comps[0].value(),
            self.comps[1].value(),
            self.comps[2].value(),
            self.comps[3].value(),
            self.comps[4].value(),
            self.comps[5].value(),
        ])
    }

    pub fn to_complex(&self) -> JetVec {
        JetVec { comps: self.comps.iter().map(|c| c.to_complex()).collect() }
    }
}

/// A complexified 6-vector of bivariate jets with the R⁴₊² bilinear pairing.
///
/// The pairing does not conjugate either argument; callers write conjugation
/// explicitly where a Hermitian quantity is intended.
#[derive(Clone, Debug)]
pub struct JetVec {
    comps: Vec<CJet>,
}

impl JetVec {
    pub fn zeros(order: usize) -> Self {
        JetVec { comps: vec![CJet::zeros(order); 6] }
    }

    pub fn from_components(comps: Vec<CJet>) -> Result<Self> {
        if comps.len() != 6 {
            return Err(Error::DimensionMismatch(format!(
                "a frame vector needs 6 components, got {}",
                comps.len()
            )));
        }
        Ok(JetVec { comps })
    }

    pub fn order(&self) -> usize {
        self.comps[0].order()
    }

    pub fn component(&self, k: usize) -> &CJet {
        &self.comps[k]
    }

    pub fn components(&self) -> &[CJet] {
        &self.comps
    }

    pub fn map<F: Fn(&CJet) -> CJet>(&self, f: F) -> JetVec {
        JetVec { comps: self.comps.iter().map(f).collect() }
    }

    pub fn add(&self, other: &JetVec) -> JetVec {
        JetVec {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &JetVec) -> JetVec {
        JetVec {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> JetVec {
        self.map(|c| c.scale(s))
    }

    pub fn scale_jet(&self, s: &CJet) -> JetVec {
        self.map(|c| c.mul_jet(s))
    }

    /// `self + s·other`, the workhorse for frame combinations.
    pub fn add_scaled(&self, s: Complex64, other: &JetVec) -> JetVec {
        self.add(&other.scale(s))
    }

    pub fn add_scaled_jet(&self, s: &CJet, other: &JetVec) -> JetVec {
        self.add(&other.scale_jet(s))
    }

    /// Bilinear pairing `Σ εₖ aₖ bₖ` with the (+,+,+,+,−,−) signs.
    pub fn inner(&self, other: &JetVec) -> CJet {
        let order = self.order().min(other.order());
        let mut acc = CJet::zeros(order);
        for k in 0..6 {
            let term = self.comps[k].mul_jet(&other.comps[k]);
            let signed = term.scale(Complex64::new(Signature::R4_2.sign(k), 0.0));
            acc = &acc + &signed;
        }
        acc
    }

    pub fn conj(&self) -> JetVec {
        self.map(|c| c.conj_jet())
    }

    pub fn dz(&self) -> JetVec {
        self.map(|c| c.dz())
    }

    pub fn dzbar(&self) -> JetVec {
        self.map(|c| c.dzbar())
    }

    pub fn du(&self) -> JetVec {
        self.map(|c| c.du())
    }

    pub fn dv(&self) -> JetVec {
        self.map(|c| c.dv())
    }

    pub fn truncated(&self, order: usize) -> JetVec {
        self.map(|c| c.truncated(order))
    }

    pub fn value(&self) -> ComplexPseudoVector {
        let mut out = ComplexPseudoVector::zeros(Signature::R4_2);
        for k in 0..6 {
            out.coords[k] = self.comps[k].value();
        }
        out
    }

    /// Real part of the value, as a vector in R⁴₊².
    pub fn real_value(&self) -> PseudoVector {
        self.value().re_part()
    }
}

/// The three Lorentzian space forms that share the conformal boundary model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceForm {
    /// Flat R³₊¹ (last coordinate timelike).
    Flat,
    /// The unit pseudo-sphere in R⁴₊¹.
    Sphere,
    /// The unit pseudo-hyperbolic space in R³₊².
    Hyperbolic,
}

/// Embed a space-form point as a null vector of R⁴₊².
pub fn embed_space_form(form: SpaceForm, x: &PseudoVector) -> Result<PseudoVector> {
    match form {
        SpaceForm::Flat => {
            if x.sig != Signature::R3_1 {
                return Err(Error::Signature(
                    "flat embedding expects a point of R^{3,1}".into(),
                ));
            }
            let q = x.norm_sqr();
            Ok(PseudoVector::r42([
                (q - 1.0) / 2.0,
                x.coords[0],
                x.coords[1],
                x.coords[2],
                x.coords[3],
                (q + 1.0) / 2.0,
            ]))
        }
        SpaceForm::Sphere => {
            if x.sig != Signature::R4_1 {
                return Err(Error::Signature(
                    "spherical embedding expects a point of R^{4,1}".into(),
                ));
            }
            let q = x.norm_sqr();
            if (q - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "point is not on the unit pseudo-sphere: <x,x> = {q}"
                )));
            }
            let mut coords = [0.0; 6];
            coords[..5].copy_from_slice(&x.coords);
            coords[5] = 1.0;
            Ok(PseudoVector::r42(coords))
        }
        SpaceForm::Hyperbolic => {
            if x.sig != Signature::R3_2 {
                return Err(Error::Signature(
                    "hyperbolic embedding expects a point of R^{3,2}".into(),
                ));
            }
            let q = x.norm_sqr();
            if (q + 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "point is not on the unit pseudo-hyperbolic space: <x,x> = {q}"
                )));
            }
            let mut coords = [0.0; 6];
            coords[1..].copy_from_slice(&x.coords);
            coords[0] = 1.0;
            Ok(PseudoVector::r42(coords))
        }
    }
}

/// Jet-level flat embedding: `x ∈ R³₊¹` (as four jets, last timelike) to the
/// null lift in R⁴₊². Exact in jet arithmetic, so `⟨Y,Y⟩ ≡ 0` to round-off.
pub fn embed_flat_jets(x: &[RJet; 4]) -> Vec<RJet> {
    let q = &(&(&x[0] * &x[0]) + &(&x[1] * &x[1])) + &(&(&x[2] * &x[2]) - &(&x[3] * &x[3]));
    let order = q.order();
    let one = RJet::constant(1.0, order);
    vec![
        (&q - &one).scale(0.5),
        x[0].clone(),
        x[1].clone(),
        x[2].clone(),
        x[3].clone(),
        (&q + &one).scale(0.5),
    ]
}

/// Closure type for analytic charts. The arguments are jet-valued coordinates
/// (not bare numbers) so that precomposition with coordinate changes — e.g.
/// rotations — stays exact; implementations must use jet arithmetic
/// throughout.
pub type AnalyticEvaluator = Arc<dyn Fn(&RJet, &RJet) -> Vec<RJet> + Send + Sync>;

/// How a chart produces jets.
#[derive(Clone)]
pub enum ChartKind {
    /// Closed-form jets at any order.
    Analytic(AnalyticEvaluator),
    /// Stored node jets (finite differences or transform output).
    SampledJets { jets: Grid<JetPoint>, one_sided: Grid<bool> },
}

impl fmt::Debug for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartKind::Analytic(_) => f.write_str("Analytic"),
            ChartKind::SampledJets { .. } => f.write_str("SampledJets"),
        }
    }
}

/// A surface presented over a parameter rectangle with jet access at nodes.
#[derive(Clone, Debug)]
pub struct SurfaceChart {
    spec: GridSpec,
    kind: ChartKind,
    max_order: Option<usize>,
    label: String,
}

impl SurfaceChart {
    pub fn analytic(spec: GridSpec, label: impl Into<String>, eval: AnalyticEvaluator) -> Self {
        SurfaceChart { spec, kind: ChartKind::Analytic(eval), max_order: None, label: label.into() }
    }

    /// Wrap precomputed node jets (e.g. a transform output) as a chart.
    pub fn from_node_jets(
        spec: GridSpec,
        jets: Grid<JetPoint>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if jets.nu != spec.nu || jets.nv != spec.nv {
            return Err(Error::Grid(format!(
                "node-jet grid is {}x{} but the spec says {}x{}",
                jets.nu, jets.nv, spec.nu, spec.nv
            )));
        }
        if spec.is_empty() {
            return Err(Error::Grid("empty grid".into()));
        }
        let order = jets.at(0, 0).order();
        if jets.iter_indexed().any(|(_, _, j)| j.order() != order) {
            return Err(Error::Grid("node jets have mixed orders".into()));
        }
        let one_sided = Grid::from_fn(spec.nu, spec.nv, |_, _| false);
        Ok(SurfaceChart {
            spec,
            kind: ChartKind::SampledJets { jets, one_sided },
            max_order: Some(order),
            label: label.into(),
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Highest jet order the chart can produce (`None`: unlimited).
    pub fn max_order(&self) -> Option<usize> {
        self.max_order
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.kind, ChartKind::Analytic(_))
    }

    /// The lift's jet at grid node `(iu, iv)`, truncated to `order`.
    pub fn jet_at_node(&self, iu: usize, iv: usize, order: usize) -> Result<JetPoint> {
        if iu >= self.spec.nu || iv >= self.spec.nv {
            return Err(Error::Grid(format!(
                "node ({iu},{iv}) outside a {}x{} grid",
                self.spec.nu, self.spec.nv
            )));
        }
        match &self.kind {
            ChartKind::Analytic(eval) => {
                let u = RJet::linear(self.spec.u_at(iu), 1.0, 0.0, order);
                let v = RJet::linear(self.spec.v_at(iv), 0.0, 1.0, order);
                JetPoint::new(eval(&u, &v))
            }
            ChartKind::SampledJets { jets, .. } => {
                let stored = jets.at(iu, iv);
                if stored.order() < order {
                    return Err(Error::JetOrder(format!(
                        "chart stores order-{} jets but order {} was requested",
                        stored.order(),
                        order
                    )));
                }
                Ok(stored.truncated(order))
            }
        }
    }

    /// Whether the node's jets involved one-sided (boundary) stencils.
    pub fn one_sided(&self, iu: usize, iv: usize) -> bool {
        match &self.kind {
            ChartKind::Analytic(_) => false,
            ChartKind::SampledJets { one_sided, .. } => *one_sided.at(iu, iv),
        }
    }

    pub fn value_at(&self, iu: usize, iv: usize) -> Result<PseudoVector> {
        Ok(self.jet_at_node(iu, iv, 0)?.value())
    }

    /// Evaluate the lift at arbitrary parameters (analytic charts only).
    pub fn value_at_params(&self, u: f64, v: f64) -> Result<PseudoVector> {
        match &self.kind {
            ChartKind::Analytic(eval) => {
                let uj = RJet::constant(u, 0);
                let vj = RJet::constant(v, 0);
                JetPoint::new(eval(&uj, &vj)).map(|p| p.value())
            }
            ChartKind::SampledJets { .. } => Err(Error::InvalidParameter(
                "off-node evaluation needs an analytic chart".into(),
            )),
        }
    }

    pub fn value_grid(&self) -> Grid<PseudoVector> {
        match &self.kind {
            ChartKind::Analytic(eval) => {
                let spec = self.spec.clone();
                let eval = eval.clone();
                Grid::from_fn_parallel(spec.nu, spec.nv, move |iu, iv| {
                    let uj = RJet::constant(spec.u_at(iu), 0);
                    let vj = RJet::constant(spec.v_at(iv), 0);
                    let comps = eval(&uj, &vj);
                    PseudoVector::r42([
                        comps[0].value(),
                        comps[1].value(),
                        comps[2].value(),
                        comps[3].value(),
                        comps[4].value(),
                        comps[5].value(),
                    ])
                })
            }
            ChartKind::SampledJets { jets, .. } => jets.map(|j| j.value()),
        }
    }

    /// Same surface re-sampled on a new grid (analytic charts only).
    pub fn with_grid(&self, spec: GridSpec) -> Result<SurfaceChart> {
        match &self.kind {
            ChartKind::Analytic(eval) => Ok(SurfaceChart {
                spec,
                kind: ChartKind::Analytic(eval.clone()),
                max_order: None,
                label: self.label.clone(),
            }),
            ChartKind::SampledJets { .. } => Err(Error::InvalidParameter(
                "cannot re-grid a sampled chart".into(),
            )),
        }
    }

    /// Precompose the chart with the coordinate rotation
    /// `(u,v) ↦ (u cosθ − v sinθ, u sinθ + v cosθ)`, i.e. `z ↦ e^{iθ} z`.
    ///
    /// Used as a negative control: rotating an adapted coordinate by π/4
    /// multiplies the Hopf differential by `i` and breaks its reality.
    pub fn rotated(&self, angle: f64) -> Result<SurfaceChart> {
        match &self.kind {
            ChartKind::Analytic(eval) => {
                let eval = eval.clone();
                let (sin, cos) = angle.sin_cos();
                let rotated: AnalyticEvaluator = Arc::new(move |u: &RJet, v: &RJet| {
                    let up = &u.scale(cos) - &v.scale(sin);
                    let vp = &u.scale(sin) + &v.scale(cos);
                    eval(&up, &vp)
                });
                let mut spec = self.spec.clone();
                spec.periodic_u = false;
                spec.periodic_v = false;
                Ok(SurfaceChart {
                    spec,
                    kind: ChartKind::Analytic(rotated),
                    max_order: None,
                    label: format!("{}+rot{:.4}", self.label, angle),
                })
            }
            ChartKind::SampledJets { .. } => Err(Error::InvalidParameter(
                "cannot precompose a sampled chart with a rotation".into(),
            )),
        }
    }
}

/// The flat homogeneous torus family in the conformal 4-space, `t² > 1`.
///
/// The chart coordinate is pre-rotated by π/4 relative to the product-angle
/// coordinates so that the Hopf differential is real: with
/// `θ = (u−v)/√2`, `φ = (u+v)/√2` the lift is
/// `(cos(tψ)cosφ, cos(tψ)sinφ, sin(tψ)cosφ, sin(tψ)sinφ, cosψ, sinψ)`,
/// `ψ = θ/√(t²−1)`. The product angles are an isometric coordinate pair but
/// not adapted; the π/4 rotation fixes that and is baked in here.
pub fn homogeneous_torus(t: f64, nu: usize, nv: usize) -> Result<SurfaceChart> {
    if !(t * t > 1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "homogeneous torus needs t^2 > 1, got t = {t}"
        )));
    }
    let c = 1.0 / (t * t - 1.0).sqrt();
    let eval: AnalyticEvaluator = Arc::new(move |u: &RJet, v: &RJet| {
        let theta = &u.scale(FRAC_1_SQRT_2) - &v.scale(FRAC_1_SQRT_2);
        let phi = &u.scale(FRAC_1_SQRT_2) + &v.scale(FRAC_1_SQRT_2);
        let psi = theta.scale(c);
        let tpsi = theta.scale(t * c);
        let (ct, st) = (tpsi.cos_jet(), tpsi.sin_jet());
        let (cp, sp) = (phi.cos_jet(), phi.sin_jet());
        vec![&ct * &cp, &ct * &sp, &st * &cp, &st * &sp, psi.cos_jet(), psi.sin_jet()]
    });
    let spec = GridSpec::new((0.0, 2.0 * PI, 0.0, 2.0 * PI), nu, nv);
    Ok(SurfaceChart::analytic(spec, format!("torus:t={t}"), eval))
}

/// Univariate profile function given as a jet evaluator: for an input jet `x`
/// centered at `x₀`, return the jet of `f` at `x₀` (use jet arithmetic, as
/// with [`AnalyticEvaluator`]).
pub type ProfileFn = Arc<dyn Fn(&Jet1<f64>) -> Jet1<f64> + Send + Sync>;

/// A profile curve `γ(u) = (f(u), g(u), h(u))` generating a rotational
/// surface `(f cos v, f sin v, g, h)` in flat R³₊¹ (`h` along the timelike
/// axis). Regularity is enforced on the stated interval when a chart is
/// built: `f > 0`, `f′ ≠ 0`, and spacelike speed `f′² + g′² − h′² > 0`.
#[derive(Clone)]
pub struct ProfileCurve {
    pub label: String,
    pub u0: f64,
    pub u1: f64,
    pub f: ProfileFn,
    pub g: ProfileFn,
    pub h: ProfileFn,
}

impl fmt::Debug for ProfileCurve {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("ProfileCurve")
            .field("label", &self.label)
            .field("u0", &self.u0)
            .field("u1", &self.u1)
            .finish()
    }
}

fn polynomial_profile_fn(coeffs: Vec<f64>) -> ProfileFn {
    Arc::new(move |x: &Jet1<f64>| {
        let n = x.order();
        let mut acc = Jet1::constant(*coeffs.last().unwrap_or(&0.0), n);
        for k in (0..coeffs.len().saturating_sub(1)).rev() {
            acc = acc.mul_jet(x);
            acc.set_coeff(0, acc.coeff(0) + coeffs[k]);
        }
        acc
    })
}

impl ProfileCurve {
    pub fn new(
        label: impl Into<String>,
        interval: (f64, f64),
        f: ProfileFn,
        g: ProfileFn,
        h: ProfileFn,
    ) -> Result<Self> {
        let (u0, u1) = interval;
        if !(u1 > u0 + 1e-12) || !u0.is_finite() || !u1.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "profile interval [{u0}, {u1}] is empty or not finite"
            )));
        }
        Ok(ProfileCurve { label: label.into(), u0, u1, f, g, h })
    }

    /// Profile with polynomial `f`, `g`, `h` (coefficients lowest-first).
    pub fn polynomial(
        label: impl Into<String>,
        interval: (f64, f64),
        f: &[f64],
        g: &[f64],
        h: &[f64],
    ) -> Result<Self> {
        ProfileCurve::new(
            label,
            interval,
            polynomial_profile_fn(f.to_vec()),
            polynomial_profile_fn(g.to_vec()),
            polynomial_profile_fn(h.to_vec()),
        )
    }

    /// `f = u`, `g = u²/2`, `h = 0`: the reference rotational profile.
    pub fn parabolic(interval: (f64, f64)) -> Result<Self> {
        ProfileCurve::polynomial(
            "parabolic",
            interval,
            &[0.0, 1.0],
            &[0.0, 0.0, 0.5],
            &[0.0],
        )
    }

    fn jets_at(&self, u: f64, order: usize) -> (Jet1<f64>, Jet1<f64>, Jet1<f64>) {
        let x = Jet1::variable(u, order);
        ((self.f)(&x), (self.g)(&x), (self.h)(&x))
    }
}

struct RotationalGuts {
    profile: ProfileCurve,
    us: Vec<f64>,
    cum: Vec<f64>,
    inverse: MonotoneCubic,
}

impl RotationalGuts {
    /// `dũ/du = √(f′²+g′²−h′²)/f`.
    fn rho(&self, u: f64) -> f64 {
        let (f, g, h) = self.profile.jets_at(u, 1);
        let (fp, gp, hp) = (f.coeff(1), g.coeff(1), h.coeff(1));
        (fp * fp + gp * gp - hp * hp).sqrt() / f.coeff(0)
    }

    /// Arc-parameter value `ũ(u)`: nearest table node plus a local quadrature.
    fn utilde(&self, u: f64) -> f64 {
        let n = self.us.len();
        let du = (self.us[n - 1] - self.us[0]) / (n - 1) as f64;
        let k = (((u - self.us[0]) / du).floor() as isize).clamp(0, n as isize - 1) as usize;
        self.cum[k] + adaptive_simpson(&|x| self.rho(x), self.us[k], u, 1e-13)
    }

    /// Invert `ũ ↦ u`: monotone-spline seed plus Newton polish.
    fn invert(&self, ut: f64) -> f64 {
        let mut u = self.inverse.eval(ut);
        for _ in 0..3 {
            u -= (self.utilde(u) - ut) / self.rho(u);
        }
        u
    }

    fn eval(&self, uj: &RJet, vj: &RJet) -> Vec<RJet> {
        let n = uj.order();
        let ustar = self.invert(uj.value());

        // Profile germs at u*, one order deep enough for the speed jets.
        let (fj, gj, hj) = self.profile.jets_at(ustar, n + 1);
        let (fp, gp, hp) = (fj.deriv(), gj.deriv(), hj.deriv());
        let speed2 = fp
            .mul_jet(&fp)
            .add_jet(&gp.mul_jet(&gp))
            .sub_jet(&hp.mul_jet(&hp));
        // du/dũ as a function of u, expanded at u*.
        let w = fj.truncated(n).mul_jet(&speed2.sqrt_jet().recip());

        // Taylor coefficients of u(ũ) at ũ* from the flow u' = w(u).
        let mut u_of_ut = Jet1::constant(ustar, n);
        for k in 0..n {
            let w_along = u_of_ut.truncated(k).compose(&w);
            u_of_ut.set_coeff(k + 1, w_along.coeff(k) / (k + 1) as f64);
        }

        // Promote to bivariate jets through the incoming coordinate jet.
        let u_bi = uj.compose_series(u_of_ut.coeffs());
        let f_bi = u_bi.compose_series(fj.truncated(n).coeffs());
        let g_bi = u_bi.compose_series(gj.truncated(n).coeffs());
        let h_bi = u_bi.compose_series(hj.truncated(n).coeffs());
        let (cv, sv) = (vj.cos_jet(), vj.sin_jet());

        embed_flat_jets(&[&f_bi * &cv, &f_bi * &sv, g_bi, h_bi])
    }
}

/// Build a rotational-surface chart in conformal parameters `(ũ, v)`.
///
/// The profile parameter is re-scaled by quadrature so the first fundamental
/// form becomes `f²(dũ² + dv²)`; `v` is the rotation angle, periodic with
/// period 2π. Jets in `ũ` come from the inverse flow `du/dũ = f/√(f′²+g′²−h′²)`,
/// so the chart behaves like an analytic one at any order.
pub fn rotational_surface(profile: &ProfileCurve, nu: usize, nv: usize) -> Result<SurfaceChart> {
    // Regularity scan over the stated interval.
    let scan = 801;
    for k in 0..scan {
        let u = profile.u0 + (profile.u1 - profile.u0) * k as f64 / (scan - 1) as f64;
        let (f, g, h) = profile.jets_at(u, 1);
        let (fv, fp, gp, hp) = (f.coeff(0), f.coeff(1), g.coeff(1), h.coeff(1));
        if !(fv > 1e-9) {
            return Err(Error::InvalidProfile(format!(
                "profile radius must stay positive: f({u}) = {fv}"
            )));
        }
        if fp.abs() <= 1e-9 {
            return Err(Error::InvalidProfile(format!(
                "profile needs f' != 0: f'({u}) = {fp}"
            )));
        }
        let s2 = fp * fp + gp * gp - hp * hp;
        if !(s2 > 1e-10) {
            return Err(Error::InvalidProfile(format!(
                "profile speed must be spacelike: f'^2+g'^2-h'^2 = {s2} at u = {u}"
            )));
        }
    }

    // Cumulative arc parameter over a dense table.
    let m = 513;
    let mut us = Vec::with_capacity(m);
    let mut cum = Vec::with_capacity(m);
    let mut acc = 0.0;
    for k in 0..m {
        us.push(profile.u0 + (profile.u1 - profile.u0) * k as f64 / (m - 1) as f64);
    }
    cum.push(0.0);
    let guts_probe = |u: f64| {
        let (f, g, h) = profile.jets_at(u, 1);
        let (fp, gp, hp) = (f.coeff(1), g.coeff(1), h.coeff(1));
        (fp * fp + gp * gp - hp * hp).sqrt() / f.coeff(0)
    };
    for k in 1..m {
        acc += adaptive_simpson(&guts_probe, us[k - 1], us[k], 1e-13);
        cum.push(acc);
    }
    let ut_max = acc;

    let inverse = MonotoneCubic::new(cum.clone(), us.clone());
    let guts = Arc::new(RotationalGuts { profile: profile.clone(), us, cum, inverse });
    let eval: AnalyticEvaluator = {
        let guts = guts.clone();
        Arc::new(move |u: &RJet, v: &RJet| guts.eval(u, v))
    };
    let mut spec = GridSpec::new((0.0, ut_max, 0.0, 2.0 * PI), nu, nv);
    spec.periodic_v = true;
    Ok(SurfaceChart::analytic(
        spec,
        format!("rotational:{}", profile.label),
        eval,
    ))
}

/// Build a sampled chart by finite-differencing node values.
///
/// Interior nodes get centered stencils of order-2 accuracy per derivative;
/// periodic axes wrap around; non-periodic boundaries fall back to one-sided
/// stencils and are flagged via [`SurfaceChart::one_sided`].
pub fn jets_from_samples(
    spec: &GridSpec,
    values: &Grid<PseudoVector>,
    order: usize,
) -> Result<SurfaceChart> {
    if values.nu != spec.nu || values.nv != spec.nv {
        return Err(Error::Grid(format!(
            "value grid is {}x{} but the spec says {}x{}",
            values.nu, values.nv, spec.nu, spec.nv
        )));
    }
    if values
        .iter_indexed()
        .any(|(_, _, x)| x.sig != Signature::R4_2)
    {
        return Err(Error::Signature(
            "chart samples must be vectors of R^{4,2}".into(),
        ));
    }
    let plan_u = Arc::new(axis_plan(spec.nu, spec.h_u(), spec.periodic_u, order)?);
    let plan_v = Arc::new(axis_plan(spec.nv, spec.h_v(), spec.periodic_v, order)?);

    let mut inv_fact = vec![1.0_f64; order + 1];
    for k in 1..=order {
        inv_fact[k] = inv_fact[k - 1] / k as f64;
    }

    let jets = {
        let (plan_u, plan_v, inv_fact) = (plan_u.clone(), plan_v.clone(), inv_fact.clone());
        Grid::from_fn_parallel(spec.nu, spec.nv, move |iu, iv| {
            let mut comps = vec![RJet::zeros(order); 6];
            for a in 0..=order {
                let (ui, uw, _) = &plan_u[iu][a];
                for b in 0..=order - a {
                    let (vi, vw, _) = &plan_v[iv][b];
                    let mut deriv = [0.0_f64; 6];
                    for (p, &wu) in uw.iter().enumerate() {
                        for (q, &wv) in vw.iter().enumerate() {
                            let x = values.at(ui[p], vi[q]);
                            let w = wu * wv;
                            for (dk, c) in deriv.iter_mut().zip(&x.coords) {
                                *dk += w * c;
                            }
                        }
                    }
                    let scale = inv_fact[a] * inv_fact[b];
                    for k in 0..6 {
                        comps[k].set_coeff(a, b, deriv[k] * scale);
                    }
                }
            }
            JetPoint { comps }
        })
    };
    let one_sided = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
        plan_u[iu].iter().any(|e| e.2) || plan_v[iv].iter().any(|e| e.2)
    });
    Ok(SurfaceChart {
        spec: spec.clone(),
        kind: ChartKind::SampledJets { jets, one_sided },
        max_order: Some(order),
        label: format!("sampled:order{order}"),
    })
}

/// Serialize a value grid in the chart CSV format: header
/// `u,v,x1,x2,x3,x4,x5,x6`, rows in v-inner (row-major) order, LF endings,
/// floats at full round-trip precision.
pub fn chart_csv_string(spec: &GridSpec, values: &Grid<PseudoVector>) -> String {
    let mut out = String::with_capacity(32 + 160 * spec.len());
    out.push_str("u,v,x1,x2,x3,x4,x5,x6\n");
    for iu in 0..spec.nu {
        for iv in 0..spec.nv {
            let x = values.at(iu, iv);
            out.push_str(&format!("{:.16e},{:.16e}", spec.u_at(iu), spec.v_at(iv)));
            for c in &x.coords {
                out.push_str(&format!(",{c:.16e}"));
            }
            out.push('\n');
        }
    }
    out
}

fn csv_err(line: usize, message: impl Into<String>) -> Error {
    Error::CsvParse { line, message: message.into() }
}

/// Parse a chart CSV (see [`chart_csv_string`]) back into a grid of null
/// vectors. Validates the header, rectangular v-inner layout, uniform
/// spacing, and per-row nullity, reporting 1-based line numbers on failure.
pub fn read_chart_csv(text: &str) -> Result<(GridSpec, Grid<PseudoVector>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| csv_err(1, "empty file"))?;
    if header.trim_end_matches('\r') != "u,v,x1,x2,x3,x4,x5,x6" {
        return Err(csv_err(1, "header must be exactly 'u,v,x1,x2,x3,x4,x5,x6'"));
    }

    let mut rows: Vec<(usize, f64, f64, [f64; 6])> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(csv_err(line_no, format!("expected 8 fields, got {}", fields.len())));
        }
        let mut nums = [0.0_f64; 8];
        for (k, field) in fields.iter().enumerate() {
            nums[k] = field.trim().parse::<f64>().map_err(|_| {
                csv_err(line_no, format!("field {} is not a number: '{field}'", k + 1))
            })?;
            if !nums[k].is_finite() {
                return Err(csv_err(line_no, format!("field {} is not finite", k + 1)));
            }
        }
        let x: [f64; 6] = nums[2..8].try_into().unwrap();
        let q = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - x[4] * x[4] - x[5] * x[5];
        let scale = x.iter().map(|c| c * c).sum::<f64>().max(1.0);
        if q.abs() > 1e-8 * scale {
            return Err(csv_err(
                line_no,
                format!("point is not on the light cone: <x,x> = {q:e}"),
            ));
        }
        rows.push((line_no, nums[0], nums[1], x));
    }
    if rows.len() < 4 {
        return Err(csv_err(rows.last().map_or(1, |r| r.0), "need at least a 2x2 grid"));
    }

    let u0 = rows[0].1;
    let u_tol = 1e-12 * (1.0 + u0.abs());
    let nv = rows
        .iter()
        .take_while(|r| (r.1 - u0).abs() <= u_tol)
        .count();
    if nv < 2 || rows.len() % nv != 0 {
        return Err(csv_err(
            rows[0].0,
            format!("rows do not form a rectangular v-inner grid (v-block {nv}, total {})", rows.len()),
        ));
    }
    let nu = rows.len() / nv;
    if nu < 2 {
        return Err(csv_err(rows[0].0, "need at least 2 distinct u values"));
    }

    let vs: Vec<f64> = rows[..nv].iter().map(|r| r.2).collect();
    let us: Vec<f64> = (0..nu).map(|i| rows[i * nv].1).collect();
    let span_u = us[nu - 1] - us[0];
    let span_v = vs[nv - 1] - vs[0];
    if !(span_u > 0.0) || !(span_v > 0.0) {
        return Err(csv_err(rows[0].0, "u and v must be strictly increasing"));
    }
    let (h_u, h_v) = (span_u / (nu - 1) as f64, span_v / (nv - 1) as f64);
    for (i, r) in rows.iter().enumerate() {
        let (iu, iv) = (i / nv, i % nv);
        let ue = us[0] + h_u * iu as f64;
        let ve = vs[0] + h_v * iv as f64;
        if (r.1 - ue).abs() > 1e-9 * (1.0 + ue.abs()) || (r.2 - ve).abs() > 1e-9 * (1.0 + ve.abs())
        {
            return Err(csv_err(
                r.0,
                format!("node ({},{}) is off the uniform grid: got ({}, {})", iu, iv, r.1, r.2),
            ));
        }
    }

    let spec = GridSpec::new((us[0], us[nu - 1], vs[0], vs[nv - 1]), nu, nv);
    let data = rows.iter().map(|r| PseudoVector::r42(r.3)).collect();
    Ok((spec, Grid::from_vec(nu, nv, data)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn torus_chart() -> SurfaceChart {
        homogeneous_torus(2.0, 9, 9).unwrap()
    }

    #[test]
    fn flat_embedding_matches_reference_values() {
        let origin = PseudoVector::new(vec![0.0; 4], Signature::R3_1).unwrap();
        let y = embed_space_form(SpaceForm::Flat, &origin).unwrap();
        assert_eq!(y.coords, vec![-0.5, 0.0, 0.0, 0.0, 0.0, 0.5]);

        let x = PseudoVector::new(vec![1.0, 2.0, 0.5, 0.25], Signature::R3_1).unwrap();
        let yx = embed_space_form(SpaceForm::Flat, &x).unwrap();
        assert!(yx.norm_sqr().abs() < 1e-14);

        // Light-cone pairing encodes half the squared flat distance.
        let x2 = PseudoVector::new(vec![0.0, 1.0, -1.0, 2.0], Signature::R3_1).unwrap();
        let y2 = embed_space_form(SpaceForm::Flat, &x2).unwrap();
        let d2 = x.sub(&x2).norm_sqr();
        assert_relative_eq!(yx.inner(&y2), -d2 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn curved_embeddings_validate_their_quadric() {
        let h = PseudoVector::new(vec![0.0, 0.0, 0.0, 1.0, 0.0], Signature::R3_2).unwrap();
        let yh = embed_space_form(SpaceForm::Hyperbolic, &h).unwrap();
        assert_eq!(yh.coords, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

        let s = PseudoVector::new(vec![1.0, 0.0, 0.0, 0.0, 0.0], Signature::R4_1).unwrap();
        let ys = embed_space_form(SpaceForm::Sphere, &s).unwrap();
        assert!(ys.norm_sqr().abs() < 1e-14);

        let off = PseudoVector::new(vec![2.0, 0.0, 0.0, 0.0, 0.0], Signature::R4_1).unwrap();
        assert!(matches!(
            embed_space_form(SpaceForm::Sphere, &off),
            Err(Error::InvalidParameter(_))
        ));
        let wrong_sig = PseudoVector::new(vec![0.0; 4], Signature::R3_1).unwrap();
        assert!(matches!(
            embed_space_form(SpaceForm::Sphere, &wrong_sig),
            Err(Error::Signature(_))
        ));
    }

    #[test]
    fn torus_chart_is_null_and_isometric() {
        let chart = torus_chart();
        for &(iu, iv) in &[(0usize, 0usize), (3, 5), (8, 2)] {
            let jet = chart.jet_at_node(iu, iv, 4).unwrap();
            let y = jet.to_complex();
            let yy = y.inner(&y);
            for i in 0..=4usize {
                for j in 0..=4 - i {
                    let c = yy.coeff(i, j);
                    assert!(c.norm() < 1e-12, "<Y,Y> coeff ({i},{j}) = {c}");
                }
            }
            let (yu, yv) = (y.du(), y.dv());
            assert_relative_eq!(yu.inner(&yu).value().re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(yv.inner(&yv).value().re, 1.0, epsilon = 1e-12);
            assert!(yu.inner(&yv).value().norm() < 1e-12);
        }
        let base = chart.value_at(0, 0).unwrap();
        assert_relative_eq!(base.coords[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(base.coords[4], 1.0, epsilon = 1e-14);
        assert!(base.coords[1].abs() + base.coords[2].abs() + base.coords[3].abs() < 1e-14);
    }

    #[test]
    fn torus_closes_along_its_period_lattice() {
        // For t = 2 the lift closes after one period 2π√3 in the first
        // product angle, which is the diagonal (T/√2, −T/√2) in chart
        // coordinates.
        let chart = torus_chart();
        let t = 2.0 * PI * 3.0_f64.sqrt();
        for &(u, v) in &[(0.3, -0.7), (1.1, 2.4), (-2.0, 0.05)] {
            let a = chart.value_at_params(u, v).unwrap();
            let b = chart
                .value_at_params(u + t * FRAC_1_SQRT_2, v - t * FRAC_1_SQRT_2)
                .unwrap();
            for k in 0..6 {
                assert_relative_eq!(a.coords[k], b.coords[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn torus_needs_t_squared_above_one() {
        assert!(matches!(homogeneous_torus(1.0, 8, 8), Err(Error::InvalidParameter(_))));
        assert!(matches!(homogeneous_torus(0.5, 8, 8), Err(Error::InvalidParameter(_))));
        assert!(homogeneous_torus(-2.0, 8, 8).is_ok());
    }

    #[test]
    fn rotated_chart_still_lies_on_the_cone() {
        let chart = torus_chart().rotated(PI / 4.0).unwrap();
        let jet = chart.jet_at_node(4, 4, 3).unwrap();
        let y = jet.to_complex();
        assert!(y.inner(&y).value().norm() < 1e-12);
        let (yu, yv) = (y.du(), y.dv());
        // Rotations preserve the isometric property of the coordinates.
        assert_relative_eq!(yu.inner(&yu).value().re, 1.0, epsilon = 1e-12);
        assert!(yu.inner(&yv).value().norm() < 1e-12);
        // ... but move the actual points.
        let plain = torus_chart().value_at(4, 4).unwrap();
        let rotated = chart.value_at(4, 4).unwrap();
        assert!(plain.sub(&rotated).euclidean_norm() > 1e-3);
    }

    #[test]
    fn rotational_chart_is_conformal_with_factor_f() {
        let profile = ProfileCurve::parabolic((1.0, 2.0)).unwrap();
        let chart = rotational_surface(&profile, 17, 16).unwrap();
        assert!(chart.spec().periodic_v);
        for &(iu, iv) in &[(0usize, 0usize), (8, 5), (16, 15)] {
            let jet = chart.jet_at_node(iu, iv, 3).unwrap();
            let y = jet.to_complex();
            let yy = y.inner(&y);
            assert!(yy.value().norm() < 1e-12);
            assert!(yy.coeff(1, 0).norm() < 1e-10);
            let (yu, yv) = (y.du(), y.dv());
            let guu = yu.inner(&yu).value().re;
            let gvv = yv.inner(&yv).value().re;
            let guv = yu.inner(&yv).value().re;
            assert_relative_eq!(guu, gvv, epsilon = 1e-9);
            assert!(guv.abs() < 1e-9);
            // Conformal factor is the profile radius squared: f² = x₁² + x₂².
            let f2 = jet.component(1).value().powi(2) + jet.component(2).value().powi(2);
            assert_relative_eq!(gvv, f2, epsilon = 1e-9);
        }
    }

    #[test]
    fn parabolic_arc_parameter_has_closed_form_length() {
        // ∫₁² √(1+u²)/u du = √5 − ln((1+√5)/2) − √2 + ln(1+√2).
        let profile = ProfileCurve::parabolic((1.0, 2.0)).unwrap();
        let chart = rotational_surface(&profile, 9, 8).unwrap();
        let expected = 5.0_f64.sqrt() - ((1.0 + 5.0_f64.sqrt()) / 2.0).ln() - 2.0_f64.sqrt()
            + (1.0 + 2.0_f64.sqrt()).ln();
        assert_relative_eq!(chart.spec().u1, expected, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_profiles_are_rejected() {
        // f' = 0 everywhere.
        let constant = ProfileCurve::polynomial("cylinder", (0.0, 1.0), &[1.0], &[0.0, 1.0], &[0.0])
            .unwrap();
        assert!(matches!(
            rotational_surface(&constant, 8, 8),
            Err(Error::InvalidProfile(_))
        ));
        // f crosses zero inside the interval.
        let crossing = ProfileCurve::parabolic((-1.0, 1.0)).unwrap();
        assert!(matches!(
            rotational_surface(&crossing, 8, 8),
            Err(Error::InvalidProfile(_))
        ));
        // Timelike speed: h' dominates.
        let timelike =
            ProfileCurve::polynomial("fast", (1.0, 2.0), &[0.0, 1.0], &[0.0], &[0.0, 3.0]).unwrap();
        assert!(matches!(
            rotational_surface(&timelike, 8, 8),
            Err(Error::InvalidProfile(_))
        ));
    }

    #[test]
    fn sampled_jets_are_exact_on_linear_data() {
        let spec = GridSpec::new((0.0, 1.0, -1.0, 1.0), 9, 11);
        let values = Grid::from_fn(9, 11, |iu, iv| {
            let (u, v) = (spec.u_at(iu), spec.v_at(iv));
            PseudoVector::r42([
                1.0 + 2.0 * u - v,
                u,
                3.0 * v,
                0.25 * u + 0.5 * v,
                -u + v,
                2.0 - v,
            ])
        });
        let chart = jets_from_samples(&spec, &values, 2).unwrap();
        for &(iu, iv) in &[(0usize, 0usize), (4, 5), (8, 10), (0, 10)] {
            let jet = chart.jet_at_node(iu, iv, 2).unwrap();
            let c0 = jet.component(0);
            assert_relative_eq!(c0.partial(1, 0), 2.0, epsilon = 1e-9);
            assert_relative_eq!(c0.partial(0, 1), -1.0, epsilon = 1e-9);
            assert!(c0.partial(2, 0).abs() < 1e-8);
            assert!(c0.partial(1, 1).abs() < 1e-8);
            assert!((jet.component(4).partial(1, 0) + 1.0).abs() < 1e-9);
        }
        assert!(chart.one_sided(0, 0));
        assert!(!chart.one_sided(4, 5));
    }

    #[test]
    fn sampled_jets_converge_at_second_order() {
        let analytic = torus_chart();
        let mut errs = Vec::new();
        for n in [17usize, 33] {
            let spec = analytic.spec().with_resolution(n, n);
            let fine = analytic.with_grid(spec.clone()).unwrap();
            let sampled = jets_from_samples(&spec, &fine.value_grid(), 2).unwrap();
            let center = n / 2;
            let fd = sampled.jet_at_node(center, center, 2).unwrap();
            let exact = fine.jet_at_node(center, center, 2).unwrap();
            let mut err: f64 = 0.0;
            for k in 0..6 {
                err = err.max((fd.component(k).partial(1, 1) - exact.component(k).partial(1, 1)).abs());
            }
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (2.8..=5.6).contains(&ratio),
            "expected O(h^2) convergence, got errors {errs:?}"
        );
    }

    #[test]
    fn sampled_jets_reject_too_small_grids() {
        let spec = GridSpec::new((0.0, 1.0, 0.0, 1.0), 2, 2);
        let values = Grid::from_fn(2, 2, |_, _| PseudoVector::r42([0.5, 0.0, 0.0, 0.0, 0.0, 0.5]));
        assert!(matches!(
            jets_from_samples(&spec, &values, 4),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn chart_csv_round_trips() {
        let chart = homogeneous_torus(2.0, 9, 8).unwrap();
        let values = chart.value_grid();
        let text = chart_csv_string(chart.spec(), &values);
        assert!(text.starts_with("u,v,x1,x2,x3,x4,x5,x6\n"));
        assert!(!text.contains('\r'));
        let (spec, parsed) = read_chart_csv(&text).unwrap();
        assert_eq!(spec.nu, 9);
        assert_eq!(spec.nv, 8);
        assert_relative_eq!(spec.u1, chart.spec().u1, epsilon = 1e-12);
        for (iu, iv, x) in parsed.iter_indexed() {
            assert!(x.sub(values.at(iu, iv)).euclidean_norm() < 1e-12);
        }
    }

    #[test]
    fn chart_csv_diagnoses_bad_rows_by_line() {
        let chart = homogeneous_torus(2.0, 8, 8).unwrap();
        let mut text = chart_csv_string(chart.spec(), &chart.value_grid());
        // Corrupt the 3rd data row (line 4): push the point off the cone.
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        let mut fields: Vec<String> = lines[3].split(',').map(str::to_owned).collect();
        fields[2] = "9.9e0".into();
        lines[3] = fields.join(",");
        text = lines.join("\n");
        match read_chart_csv(&text) {
            Err(Error::CsvParse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("light cone"), "message: {message}");
            }
            other => panic!("expected a line-4 parse error, got {other:?}"),
        }

        assert!(matches!(
            read_chart_csv("not,a,header\n"),
            Err(Error::CsvParse { line: 1, .. })
        ));
        let ragged = "u,v,x1,x2,x3,x4,x5,x6\n0,0,1,2\n";
        assert!(matches!(
            read_chart_csv(ragged),
            Err(Error::CsvParse { line: 2, .. })
        ));
    }

    #[test]
    fn node_jet_charts_enforce_order_and_bounds() {
        let chart = torus_chart();
        assert!(chart.jet_at_node(20, 0, 2).is_err());

        let spec = chart.spec().clone();
        let jets = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
            chart.jet_at_node(iu, iv, 3).unwrap()
        });
        let stored = SurfaceChart::from_node_jets(spec, jets, "snapshot").unwrap();
        assert_eq!(stored.max_order(), Some(3));
        assert!(stored.jet_at_node(1, 1, 3).is_ok());
        assert!(matches!(
            stored.jet_at_node(1, 1, 4),
            Err(Error::JetOrder(_))
        ));
        assert!(stored.rotated(0.1).is_err());
        assert!(stored.value_at_params(0.0, 0.0).is_err());
    }
}
