//! Linear algebra over pseudo-Euclidean spaces R^n_s, specialized to R⁶₂.
//!
//! The inner product of signature `(p, q)` is
//! `⟨x,y⟩ = Σ_{i<p} x_i y_i − Σ_{i≥p} x_i y_i`. The complex inner product is
//! the *bilinear* (non-conjugating) extension; conjugation is written
//! explicitly by callers where a formula demands it.

use crate::{Error, Result};
use nalgebra::Matrix6;
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
}

impl Signature {
    pub const fn new(plus: usize, minus: usize) -> Self {
        Signature { plus, minus }
    }

    /// R⁶₂, the ambient space of the light-cone model.
    pub const R4_2: Signature = Signature::new(4, 2);
    /// R⁴₁, flat Lorentzian 4-space (one timelike axis, the last).
    pub const R3_1: Signature = Signature::new(3, 1);
    /// R⁵₁, the ambient space of the de Sitter space form.
    pub const R4_1: Signature = Signature::new(4, 1);
    /// R⁵₂, the ambient space of the anti-de Sitter space form.
    pub const R3_2: Signature = Signature::new(3, 2);

    pub const fn dim(&self) -> usize {
        self.plus + self.minus
    }

    /// Metric sign of the `i`-th coordinate axis.
    pub fn sign(&self, i: usize) -> f64 {
        if i < self.plus {
            1.0
        } else {
            -1.0
        }
    }
}

/// Causal type of a vector relative to the indefinite metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    Lightlike,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudoVector {
    pub coords: Vec<f64>,
    pub sig: Signature,
}

impl PseudoVector {
    pub fn new(coords: Vec<f64>, sig: Signature) -> Result<Self> {
        if coords.len() != sig.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for a {}-dimensional signature",
                coords.len(),
                sig.dim()
            )));
        }
        Ok(PseudoVector { coords, sig })
    }

    pub fn zeros(sig: Signature) -> Self {
        PseudoVector { coords: vec![0.0; sig.dim()], sig }
    }

    pub fn basis(sig: Signature, i: usize) -> Self {
        let mut v = Self::zeros(sig);
        v.coords[i] = 1.0;
        v
    }

    /// Convenience constructor for the main ambient space R⁶₂.
    pub fn r42(coords: [f64; 6]) -> Self {
        PseudoVector { coords: coords.to_vec(), sig: Signature::R4_2 }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Indefinite inner product ⟨self, other⟩.
    pub fn inner(&self, other: &PseudoVector) -> f64 {
        assert_eq!(self.sig, other.sig, "signature mismatch in inner product");
        let mut acc = 0.0;
        for i in 0..self.coords.len() {
            acc += self.sig.sign(i) * self.coords[i] * other.coords[i];
        }
        acc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self)
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        PseudoVector { coords: self.coords.iter().map(|x| x * s).collect(), sig: self.sig }
    }

    pub fn add(&self, other: &PseudoVector) -> Self {
        assert_eq!(self.sig, other.sig);
        PseudoVector {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
            sig: self.sig,
        }
    }

    pub fn sub(&self, other: &PseudoVector) -> Self {
        assert_eq!(self.sig, other.sig);
        PseudoVector {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect(),
            sig: self.sig,
        }
    }

    /// Causal character with a tolerance on |⟨x,x⟩| relative to the squared
    /// Euclidean norm.
    pub fn causal_character(&self, tol: f64) -> CausalCharacter {
        let q = self.norm_sqr();
        let scale = self.coords.iter().map(|x| x * x).sum::<f64>().max(1e-300);
        if q.abs() <= tol * scale {
            CausalCharacter::Lightlike
        } else if q > 0.0 {
            CausalCharacter::Spacelike
        } else {
            CausalCharacter::Timelike
        }
    }

    pub fn to_complex(&self) -> ComplexPseudoVector {
        ComplexPseudoVector {
            coords: self.coords.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            sig: self.sig,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPseudoVector {
    pub coords: Vec<Complex64>,
    pub sig: Signature,
}

impl ComplexPseudoVector {
    pub fn zeros(sig: Signature) -> Self {
        ComplexPseudoVector { coords: vec![Complex64::new(0.0, 0.0); sig.dim()], sig }
    }

    /// Bilinear inner product (no conjugation), so that ⟨Y_z, Y_z⟩ = 0
    /// expresses conformality exactly as in the complexified geometry.
    pub fn inner(&self, other: &ComplexPseudoVector) -> Complex64 {
        assert_eq!(self.sig, other.sig, "signature mismatch in inner product");
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.coords.len() {
            acc += self.sig.sign(i) * self.coords[i] * other.coords[i];
        }
        acc
    }

    pub fn conj(&self) -> Self {
        ComplexPseudoVector { coords: self.coords.iter().map(|z| z.conj()).collect(), sig: self.sig }
    }

    pub fn re_part(&self) -> PseudoVector {
        PseudoVector { coords: self.coords.iter().map(|z| z.re).collect(), sig: self.sig }
    }

    pub fn im_part(&self) -> PseudoVector {
        PseudoVector { coords: self.coords.iter().map(|z| z.im).collect(), sig: self.sig }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.sig, other.sig);
        ComplexPseudoVector {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
            sig: self.sig,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexPseudoVector { coords: self.coords.iter().map(|z| z * s).collect(), sig: self.sig }
    }
}

/// Null basis (A, B) of the Lorentzian plane spanned by `b1`, `b2`:
/// ⟨A,A⟩ = ⟨B,B⟩ = 0 and ⟨A,B⟩ = −1. The plane must have signature (1,1),
/// certified by Gram determinant < −tol². The output is one valid choice;
/// orientation and scaling conventions are the caller's business.
pub fn null_basis_of_lorentzian_plane(
    b1: &PseudoVector,
    b2: &PseudoVector,
    tol: f64,
) -> Result<(PseudoVector, PseudoVector)> {
    let a = b1.inner(b1);
    let b = b1.inner(b2);
    let c = b2.inner(b2);
    let disc = b * b - a * c;
    if disc <= tol * tol {
        return Err(Error::Signature(format!(
            "span is not a Lorentzian plane (Gram determinant {:.3e} not < -tol^2)",
            a * c - b * b
        )));
    }
    // Null directions b_first + t·b_second with the better-conditioned
    // quadratic; the stable-root form keeps t accurate when b dominates.
    let (w1, w2, qa, qb, qc) = if c.abs() >= a.abs() {
        (b1, b2, c, b, a) // qc + 2 qb t + qa t² = 0 in t along w2
    } else {
        (b2, b1, a, b, c)
    };
    let sqrt_disc = disc.sqrt();
    let sgn = if qb >= 0.0 { 1.0 } else { -1.0 };
    let q = -(qb + sgn * sqrt_disc);
    let t1 = q / qa;
    let t2 = qc / q;
    let a_vec = w1.add(&w2.scale(t1));
    let mut b_vec = w1.add(&w2.scale(t2));
    let mut g = a_vec.inner(&b_vec);
    if g > 0.0 {
        b_vec = b_vec.scale(-1.0);
        g = -g;
    }
    if g.abs() <= tol * tol {
        return Err(Error::DegenerateInput(
            "null directions in the plane are numerically collinear".into(),
        ));
    }
    let s = 1.0 / (-g).sqrt();
    Ok((a_vec.scale(s), b_vec.scale(s)))
}

/// Determinant of the 6×6 matrix whose columns are the given vectors in the
/// standard basis of R⁶₂; its sign is the orientation class of the frame.
pub fn orientation_det(vectors: &[&PseudoVector; 6]) -> f64 {
    let m = Matrix6::from_fn(|r, c| vectors[c].coords[r]);
    m.determinant()
}

/// Sine of the angle between the real lines spanned by `x` and `y` in the
/// Euclidean metric on coordinates: 0 iff projectively equal, 1 iff
/// perpendicular as lines.
pub fn projective_distance(x: &PseudoVector, y: &PseudoVector) -> Result<f64> {
    let nx = x.coords.iter().map(|t| t * t).sum::<f64>().sqrt();
    let ny = y.coords.iter().map(|t| t * t).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::DegenerateInput("projective point needs a nonzero representative".into()));
    }
    // Chordal form: m = min(|u - v|, |u + v|) = 2 sin(theta/2) for unit u, v,
    // so sin(theta) = m sqrt(1 - m^2/4).  Unlike sqrt(1 - cos^2), this does
    // not cancel for nearly equal lines (m <= sqrt(2), so 1 - m^2/4 >= 1/2).
    let mut diff_sq = 0.0;
    let mut sum_sq = 0.0;
    for (a, b) in x.coords.iter().zip(&y.coords) {
        let (ua, ub) = (a / nx, b / ny);
        diff_sq += (ua - ub) * (ua - ub);
        sum_sq += (ua + ub) * (ua + ub);
    }
    let m_sq = diff_sq.min(sum_sq);
    Ok((m_sq * (1.0 - m_sq / 4.0).max(0.5)).sqrt().min(1.0))
}
