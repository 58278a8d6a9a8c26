//! Residual certificates: structure equations, integrability conditions, and
//! the isothermic test.
//!
//! The adapted frame `{Y, Y_z, Y_z̄, N, L, R}` with invariants
//! `(s, λ₁, λ₂, α, β, γ₁, γ₂)` satisfies the first-order system
//!
//! ```text
//! Y_zz  = −(s/2) Y + λ₁ L + λ₂ R
//! Y_zz̄ =  β Y + ½ N
//! N_z   =  2β Y_z − s Y_z̄ + 2γ₁ L + 2γ₂ R
//! L_z   =  α L − 2γ₂ Y + 2λ₂ Y_z̄
//! R_z   = −α R − 2γ₁ Y + 2λ₁ Y_z̄
//! ```
//!
//! whose compatibility reduces to four scalar conditions (Gauss/Codazzi/Ricci
//! analogues). Every function here evaluates those equations as *residuals*
//! over a whole [`FrameField`] and returns grid summaries, so agreement is a
//! measured certificate rather than an assumption.

use num_complex::Complex64;

use crate::conformal_frame::{fd_dz_field, fd_dzbar_field, FrameField};
use crate::grid::{summarize, Grid, Summary};
use crate::surface_model::JetVec;
use crate::{Error, Result};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// One residual quantity over the grid, with its summary.
#[derive(Clone, Debug)]
pub struct ResidualField {
    pub name: &'static str,
    pub values: Grid<f64>,
    pub summary: Summary,
}

impl ResidualField {
    fn new(name: &'static str, values: Grid<f64>) -> ResidualField {
        let summary = summarize(&values, None);
        ResidualField { name, values, summary }
    }
}

/// Residuals of the five frame structure equations.
#[derive(Clone, Debug)]
pub struct StructureResiduals {
    pub fields: Vec<ResidualField>,
}

impl StructureResiduals {
    /// Largest max across the five equations.
    pub fn worst(&self) -> f64 {
        self.fields.iter().fold(0.0, |acc, f| acc.max(f.summary.max))
    }
}

/// Residuals of the four integrability conditions, plus the size of the
/// normal-curvature source term `2(λ₁λ̄₂ − λ₂λ̄₁)` (which vanishes exactly
/// when the Hopf pair can be simultaneously made real).
#[derive(Clone, Debug)]
pub struct IntegrabilityResiduals {
    pub fields: Vec<ResidualField>,
    pub ricci_source: ResidualField,
}

impl IntegrabilityResiduals {
    pub fn worst(&self) -> f64 {
        self.fields.iter().fold(0.0, |acc, f| acc.max(f.summary.max))
    }
}

fn vec_norm(v: &JetVec) -> f64 {
    v.value().coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Evaluate the five structure equations over the field.
///
/// On jet-based fields everything is read from the per-node jets; on sampled
/// fields the frame derivatives come from the same finite-difference stencils
/// that produced the field, so residuals converge at the stencil order.
pub fn structure_residuals(field: &FrameField) -> Result<StructureResiduals> {
    let spec = &field.spec;
    let names = [
        "lift-hessian",
        "mixed-hessian",
        "tangent-normal",
        "left-normal",
        "right-normal",
    ];
    let mut grids: Vec<Grid<f64>> = Vec::with_capacity(5);
    if field.sampled_alpha {
        // Field-level z-derivatives of N, L, R.
        let mut n_dz = Vec::with_capacity(6);
        let mut l_dz = Vec::with_capacity(6);
        let mut r_dz = Vec::with_capacity(6);
        for k in 0..6 {
            let nk = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
                field.nodes.at(iu, iv).frame.n.component(k).value()
            });
            let lk = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
                field.nodes.at(iu, iv).frame.l.component(k).value()
            });
            let rk = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
                field.nodes.at(iu, iv).frame.r.component(k).value()
            });
            n_dz.push(fd_dz_field(spec, &nk)?);
            l_dz.push(fd_dz_field(spec, &lk)?);
            r_dz.push(fd_dz_field(spec, &rk)?);
        }
        for eq in 0..5 {
            grids.push(Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
                let node = field.nodes.at(iu, iv);
                let (frame, inv) = (&node.frame, &node.inv);
                let y = &frame.y;
                let yz = y.dz();
                let yzb = y.dzbar();
                let beta = Complex64::new(inv.beta.value(), 0.0);
                let grab = |store: &Vec<Grid<Complex64>>| -> Vec<Complex64> {
                    (0..6).map(|k| *store[k].at(iu, iv)).collect()
                };
                let resid = match eq {
                    0 => yz
                        .dz()
                        .add(&y.scale_jet(&inv.s.scale(c(0.5))))
                        .sub(&frame.l.scale_jet(&inv.l1))
                        .sub(&frame.r.scale_jet(&inv.l2))
                        .value()
                        .coords,
                    1 => yz
                        .dzbar()
                        .sub(&y.scale(beta))
                        .sub(&frame.n.scale(c(0.5)))
                        .value()
                        .coords,
                    2 => {
                        let ndz = grab(&n_dz);
                        (0..6)
                            .map(|k| {
                                ndz[k] - beta * 2.0 * yz.component(k).value()
                                    + inv.s.value() * yzb.component(k).value()
                                    - 2.0 * inv.gamma1.value() * frame.l.component(k).value()
                                    - 2.0 * inv.gamma2.value() * frame.r.component(k).value()
                            })
                            .collect()
                    }
                    3 => {
                        let ldz = grab(&l_dz);
                        (0..6)
                            .map(|k| {
                                ldz[k] - inv.alpha.value() * frame.l.component(k).value()
                                    + 2.0 * inv.gamma2.value() * y.component(k).value()
                                    - 2.0 * inv.l2.value() * yzb.component(k).value()
                            })
                            .collect()
                    }
                    _ => {
                        let rdz = grab(&r_dz);
                        (0..6)
                            .map(|k| {
                                rdz[k] + inv.alpha.value() * frame.r.component(k).value()
                                    + 2.0 * inv.gamma1.value() * y.component(k).value()
                                    - 2.0 * inv.l1.value() * yzb.component(k).value()
                            })
                            .collect()
                    }
                };
                resid.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            }));
        }
    } else {
        if field.source_order < 4 {
            return Err(Error::JetOrder(
                "structure residuals need source jets of order >= 4".into(),
            ));
        }
        for eq in 0..5 {
            grids.push(field.nodes.map(|node| {
                let (frame, inv) = (&node.frame, &node.inv);
                let y = &frame.y;
                let yz = y.dz();
                let yzb = y.dzbar();
                let beta = inv.beta.to_complex();
                let resid = match eq {
                    0 => yz
                        .dz()
                        .add(&y.scale_jet(&inv.s.scale(c(0.5))))
                        .sub(&frame.l.scale_jet(&inv.l1))
                        .sub(&frame.r.scale_jet(&inv.l2)),
                    1 => yz
                        .dzbar()
                        .sub(&y.scale_jet(&beta))
                        .sub(&frame.n.scale(c(0.5))),
                    2 => frame
                        .n
                        .dz()
                        .sub(&yz.scale_jet(&beta.scale(c(2.0))))
                        .add(&yzb.scale_jet(&inv.s))
                        .sub(&frame.l.scale_jet(&inv.gamma1.scale(c(2.0))))
                        .sub(&frame.r.scale_jet(&inv.gamma2.scale(c(2.0)))),
                    3 => frame
                        .l
                        .dz()
                        .sub(&frame.l.scale_jet(&inv.alpha))
                        .add(&y.scale_jet(&inv.gamma2.scale(c(2.0))))
                        .sub(&yzb.scale_jet(&inv.l2.scale(c(2.0)))),
                    _ => frame
                        .r
                        .dz()
                        .add(&frame.r.scale_jet(&inv.alpha))
                        .add(&y.scale_jet(&inv.gamma1.scale(c(2.0))))
                        .sub(&yzb.scale_jet(&inv.l1.scale(c(2.0)))),
                };
                vec_norm(&resid)
            }));
        }
    }
    let fields = names
        .into_iter()
        .zip(grids)
        .map(|(name, values)| ResidualField::new(name, values))
        .collect();
    Ok(StructureResiduals { fields })
}

/// Evaluate the four integrability conditions over the field.
pub fn integrability_residuals(field: &FrameField) -> Result<IntegrabilityResiduals> {
    let spec = &field.spec;
    let names = [
        "schwarzian-compatibility",
        "left-codazzi-reality",
        "right-codazzi-reality",
        "normal-curvature",
    ];
    let ricci_vals;
    let mut grids: Vec<Grid<f64>> = Vec::with_capacity(4);
    if field.sampled_alpha {
        let take = |f: &dyn Fn(&crate::conformal_frame::FrameNode) -> Complex64| {
            Grid::from_fn(spec.nu, spec.nv, |iu, iv| f(field.nodes.at(iu, iv)))
        };
        let s_grid = take(&|n| n.inv.s.value());
        let b_grid = take(&|n| Complex64::new(n.inv.beta.value(), 0.0));
        let a_grid = take(&|n| n.inv.alpha.value());
        let g1_grid = take(&|n| n.inv.gamma1.value());
        let g2_grid = take(&|n| n.inv.gamma2.value());
        let s_dzb = fd_dzbar_field(spec, &s_grid)?;
        let b_dz = fd_dz_field(spec, &b_grid)?;
        let a_dzb = fd_dzbar_field(spec, &a_grid)?;
        let g1_dzb = fd_dzbar_field(spec, &g1_grid)?;
        let g2_dzb = fd_dzbar_field(spec, &g2_grid)?;
        let at = |iu: usize, iv: usize| field.nodes.at(iu, iv);
        grids.push(Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
            let inv = &at(iu, iv).inv;
            (s_dzb.at(iu, iv) + 2.0 * b_dz.at(iu, iv)
                + 4.0 * inv.l1.value() * inv.gamma2.value().conj()
                + 4.0 * inv.l2.value() * inv.gamma1.value().conj())
            .norm()
        }));
        grids.push(Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
            let inv = &at(iu, iv).inv;
            (g1_dzb.at(iu, iv)
                + inv.gamma1.value() * inv.alpha.value().conj()
                + 0.5 * inv.s.value().conj() * inv.l1.value())
            .im
            .abs()
        }));
        grids.push(Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
            let inv = &at(iu, iv).inv;
            (g2_dzb.at(iu, iv) - inv.gamma2.value() * inv.alpha.value().conj()
                + 0.5 * inv.s.value().conj() * inv.l2.value())
            .im
            .abs()
        }));
        grids.push(Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
            let inv = &at(iu, iv).inv;
            let azb = *a_dzb.at(iu, iv);
            let source =
                inv.l1.value() * inv.l2.value().conj() - inv.l2.value() * inv.l1.value().conj();
            (azb - azb.conj() - 2.0 * source).norm()
        }));
        ricci_vals = Grid::from_fn(spec.nu, spec.nv, |iu, iv| {
            let inv = &at(iu, iv).inv;
            (2.0 * (inv.l1.value() * inv.l2.value().conj()
                - inv.l2.value() * inv.l1.value().conj()))
            .norm()
        });
    } else {
        if field.source_order < 5 {
            return Err(Error::JetOrder(
                "integrability residuals need source jets of order >= 5".into(),
            ));
        }
        let node_residual = |eq: usize| {
            field.nodes.map(move |node| {
                let inv = &node.inv;
                match eq {
                    0 => (&(&inv.s.dzbar() + &inv.beta.to_complex().dz().scale(c(2.0)))
                        + &(&inv.l1.mul_jet(&inv.gamma2.conj_jet())
                            + &inv.l2.mul_jet(&inv.gamma1.conj_jet()))
                            .scale(c(4.0)))
                        .value()
                        .norm(),
                    1 => (&(&inv.gamma1.dzbar() + &inv.gamma1.mul_jet(&inv.alpha.conj_jet()))
                        + &inv.s.conj_jet().mul_jet(&inv.l1).scale(c(0.5)))
                        .value()
                        .im
                        .abs(),
                    2 => (&(&inv.gamma2.dzbar() - &inv.gamma2.mul_jet(&inv.alpha.conj_jet()))
                        + &inv.s.conj_jet().mul_jet(&inv.l2).scale(c(0.5)))
                        .value()
                        .im
                        .abs(),
                    _ => {
                        let azb = inv.alpha.dzbar();
                        let source = &inv.l1.mul_jet(&inv.l2.conj_jet())
                            - &inv.l2.mul_jet(&inv.l1.conj_jet());
                        (&(&azb - &inv.alpha.conj_jet().dz()) - &source.scale(c(2.0)))
                            .value()
                            .norm()
                    }
                }
            })
        };
        for eq in 0..4 {
            grids.push(node_residual(eq));
        }
        ricci_vals = field.nodes.map(|node| {
            let inv = &node.inv;
            (2.0 * (inv.l1.value() * inv.l2.value().conj()
                - inv.l2.value() * inv.l1.value().conj()))
            .norm()
        });
    }
    let fields: Vec<ResidualField> = names
        .into_iter()
        .zip(grids)
        .map(|(name, values)| ResidualField::new(name, values))
        .collect();
    let ricci_source = ResidualField::new("normal-curvature-source", ricci_vals);
    Ok(IntegrabilityResiduals { fields, ricci_source })
}

/// Certificate that a chart is (spacelike) isothermic: in the pinned gauge
/// both Hopf components must be real, so the largest imaginary part over the
/// grid is the failure measure.
#[derive(Clone, Debug)]
pub struct IsothermicReport {
    pub imag_hopf: Summary,
    pub umbilic_nodes: usize,
    pub degenerate_nodes: usize,
    pub singular_nodes: usize,
    pub tolerance: f64,
    pub passes: bool,
}

/// Test a frame field for the isothermic property at tolerance `tol`.
///
/// Umbilic, gauge-degenerate, and immersion-singular nodes are excluded
/// (and counted); if *every* node is excluded there is nothing to certify
/// and the chart is degenerate.
pub fn isothermic_check(field: &FrameField, tol: f64) -> Result<IsothermicReport> {
    let mask = field.mask();
    let umbilic_nodes = field.nodes.iter_indexed().filter(|(_, _, n)| n.umbilic).count();
    let degenerate_nodes =
        field.nodes.iter_indexed().filter(|(_, _, n)| n.degenerate).count();
    let singular_nodes =
        field.nodes.iter_indexed().filter(|(_, _, n)| n.singular).count();
    let imag = summarize(&field.imag_hopf(), Some(&mask));
    if imag.counted == 0 {
        return Err(Error::DegenerateSurface(
            "isothermic test is vacuous: every node is umbilic or degenerate".into(),
        ));
    }
    Ok(IsothermicReport {
        passes: imag.max < tol,
        imag_hopf: imag,
        umbilic_nodes,
        degenerate_nodes,
        singular_nodes,
        tolerance: tol,
    })
}

/// Max of `values` over the central index window (fractions `frac..1−frac`
/// of each axis), skipping masked nodes. Used for grid-convergence ratios,
/// where boundary stencils would otherwise dominate.
pub fn window_max(values: &Grid<f64>, mask: Option<&Grid<bool>>, frac: f64) -> f64 {
    let lo_u = (values.nu as f64 * frac).floor() as usize;
    let hi_u = (values.nu as f64 * (1.0 - frac)).ceil() as usize;
    let lo_v = (values.nv as f64 * frac).floor() as usize;
    let hi_v = (values.nv as f64 * (1.0 - frac)).ceil() as usize;
    let mut worst = 0.0_f64;
    for iu in lo_u..hi_u.min(values.nu) {
        for iv in lo_v..hi_v.min(values.nv) {
            if let Some(m) = mask {
                if *m.at(iu, iv) {
                    continue;
                }
            }
            worst = worst.max(values.at(iu, iv).abs());
        }
    }
    worst
}
