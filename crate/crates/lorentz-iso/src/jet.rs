//! Truncated Taylor-series ("jet") arithmetic in one and two variables.
//!
//! A [`Jet`] stores the Taylor coefficients `c[i,j] = ∂_u^i ∂_v^j f / (i! j!)`
//! of a function at a point, truncated at a total degree `order`. Arithmetic
//! on jets is exact polynomial arithmetic modulo degree `order + 1`, so a
//! pipeline built from jet operations yields machine-precision derivatives of
//! its result — no finite differencing is involved. Coefficients are generic
//! over `f64` and `Complex<f64>`.
//!
//! Binary operations on jets of different orders truncate to the smaller
//! order: a jet's order tracks how many derivatives of it are trustworthy.

use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Scalar types usable as jet coefficients.
pub trait JetScalar:
    Copy
    + std::fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_re(x: f64) -> Self;
    /// Squared absolute value (used for pivot selection).
    fn norm2(self) -> f64;
    fn conjugate(self) -> Self;
    fn invert(self) -> Self;
    fn sqrt_val(self) -> Self;
    fn exp_val(self) -> Self;
    fn ln_val(self) -> Self;
    fn sin_val(self) -> Self;
    fn cos_val(self) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
}

impl JetScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn norm2(self) -> f64 {
        self * self
    }
    fn conjugate(self) -> Self {
        self
    }
    fn invert(self) -> Self {
        1.0 / self
    }
    fn sqrt_val(self) -> Self {
        self.sqrt()
    }
    fn exp_val(self) -> Self {
        self.exp()
    }
    fn ln_val(self) -> Self {
        self.ln()
    }
    fn sin_val(self) -> Self {
        self.sin()
    }
    fn cos_val(self) -> Self {
        self.cos()
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
}

impl JetScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn norm2(self) -> f64 {
        self.norm_sqr()
    }
    fn conjugate(self) -> Self {
        self.conj()
    }
    fn invert(self) -> Self {
        self.inv()
    }
    fn sqrt_val(self) -> Self {
        self.sqrt()
    }
    fn exp_val(self) -> Self {
        self.exp()
    }
    fn ln_val(self) -> Self {
        self.ln()
    }
    fn sin_val(self) -> Self {
        self.sin()
    }
    fn cos_val(self) -> Self {
        self.cos()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
}

#[inline]
fn tri(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Number of coefficients of a bivariate jet of the given total order.
#[inline]
pub fn jet_len(order: usize) -> usize {
    tri(order + 1)
}

/// Bivariate jet: Taylor coefficients at a point, truncated at total degree
/// `order`. Layout is degree-graded: degree `d` occupies positions
/// `d(d+1)/2 .. d(d+1)/2 + d`, with `(i,j)` (where `i+j=d`) at offset `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<S> {
    order: usize,
    c: Vec<S>,
}

pub type RJet = Jet<f64>;
pub type CJet = Jet<Complex64>;

impl<S: JetScalar> Jet<S> {
    pub fn zeros(order: usize) -> Self {
        Jet { order, c: vec![S::zero(); jet_len(order)] }
    }

    pub fn constant(value: S, order: usize) -> Self {
        let mut j = Self::zeros(order);
        j.c[0] = value;
        j
    }

    /// Jet of the linear function `value + du·(u-u0) + dv·(v-v0)`.
    pub fn linear(value: S, du: S, dv: S, order: usize) -> Self {
        let mut j = Self::zeros(order);
        j.c[0] = value;
        if order >= 1 {
            j.c[1] = du;
            j.c[2] = dv;
        }
        j
    }

    /// Jet of the first coordinate `u` around `u0`.
    pub fn variable_u(u0: S, order: usize) -> Self {
        Self::linear(u0, S::one(), S::zero(), order)
    }

    /// Jet of the second coordinate `v` around `v0`.
    pub fn variable_v(v0: S, order: usize) -> Self {
        Self::linear(v0, S::zero(), S::one(), order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Value of the underlying function at the expansion point.
    pub fn value(&self) -> S {
        self.c[0]
    }

    /// Taylor coefficient of the `(i,j)` monomial (zero above the order).
    pub fn coeff(&self, i: usize, j: usize) -> S {
        if i + j > self.order {
            S::zero()
        } else {
            self.c[tri(i + j) + j]
        }
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, val: S) {
        assert!(i + j <= self.order, "coefficient outside jet order");
        self.c[tri(i + j) + j] = val;
    }

    /// Partial derivative value `∂_u^i ∂_v^j f` at the expansion point.
    pub fn partial(&self, i: usize, j: usize) -> S {
        let mut f = 1.0;
        for k in 2..=i {
            f *= k as f64;
        }
        for k in 2..=j {
            f *= k as f64;
        }
        self.coeff(i, j) * S::from_re(f)
    }

    pub fn truncated(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Jet { order, c: self.c[..jet_len(order)].to_vec() }
    }

    /// ∂/∂u as a jet of one lower order.
    pub fn du(&self) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.order - 1;
        let mut out = Self::zeros(n);
        for d in 0..=n {
            for j in 0..=d {
                let i = d - j;
                out.c[tri(d) + j] = self.c[tri(d + 1) + j] * S::from_re((i + 1) as f64);
            }
        }
        out
    }

    /// ∂/∂v as a jet of one lower order.
    pub fn dv(&self) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.order - 1;
        let mut out = Self::zeros(n);
        for d in 0..=n {
            for j in 0..=d {
                out.c[tri(d) + j] = self.c[tri(d + 1) + j + 1] * S::from_re((j + 1) as f64);
            }
        }
        out
    }

    pub fn scale(&self, s: S) -> Self {
        let mut out = self.clone();
        for v in &mut out.c {
            *v *= s;
        }
        out
    }

    /// Evaluate the truncated Taylor polynomial at offset `(du, dv)` from the
    /// expansion point.
    pub fn eval_offset(&self, du: S, dv: S) -> S {
        // Work degree by degree from the top: acc_d(u,v) row reduction.
        // Direct monomial evaluation with running powers.
        let n = self.order;
        let mut pow_u = vec![S::one(); n + 1];
        let mut pow_v = vec![S::one(); n + 1];
        for k in 1..=n {
            pow_u[k] = pow_u[k - 1] * du;
            pow_v[k] = pow_v[k - 1] * dv;
        }
        let mut acc = S::zero();
        for d in 0..=n {
            for j in 0..=d {
                let i = d - j;
                acc += self.c[tri(d) + j] * pow_u[i] * pow_v[j];
            }
        }
        acc
    }

    fn binary_order(&self, rhs: &Self) -> usize {
        self.order.min(rhs.order)
    }

    pub fn mul_jet(&self, rhs: &Self) -> Self {
        let n = self.binary_order(rhs);
        let mut out = Self::zeros(n);
        for d1 in 0..=n {
            for j1 in 0..=d1 {
                let a = self.c[tri(d1) + j1];
                if a.norm2() == 0.0 {
                    continue;
                }
                for d2 in 0..=(n - d1) {
                    let base_out = tri(d1 + d2) + j1;
                    let base_rhs = tri(d2);
                    for j2 in 0..=d2 {
                        out.c[base_out + j2] += a * rhs.c[base_rhs + j2];
                    }
                }
            }
        }
        out
    }

    /// Compose with a power series: returns `Σ_k series[k]·(self - self(0))^k`.
    ///
    /// `series[k]` must be `φ^{(k)}(value)/k!` for the function `φ` being
    /// applied; the nilpotency of `self - value` truncates the sum exactly.
    pub fn compose_series(&self, series: &[S]) -> Self {
        let n = self.order;
        assert!(series.len() >= n + 1, "need order+1 series coefficients");
        let mut delta = self.clone();
        delta.c[0] = S::zero();
        let mut acc = Self::constant(series[n], n);
        for k in (0..n).rev() {
            acc = acc.mul_jet(&delta);
            acc.c[0] += series[k];
        }
        acc
    }

    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        assert!(a0.norm2() > 0.0, "reciprocal of a jet with zero value");
        let inv = a0.invert();
        let mut series = Vec::with_capacity(self.order + 1);
        let mut p = inv;
        for k in 0..=self.order {
            series.push(p);
            if k < self.order {
                p = -p * inv;
            }
        }
        self.compose_series(&series)
    }

    pub fn div_jet(&self, rhs: &Self) -> Self {
        self.mul_jet(&rhs.recip())
    }

    pub fn sqrt_jet(&self) -> Self {
        let a0 = self.c[0];
        let r = a0.sqrt_val();
        // series[k] = binom(1/2, k) a0^(1/2 - k)
        let mut series = Vec::with_capacity(self.order + 1);
        let mut coef = S::one();
        let inv = a0.invert();
        let mut p = r;
        for k in 0..=self.order {
            series.push(coef * p);
            let kf = k as f64;
            coef *= S::from_re((0.5 - kf) / (kf + 1.0));
            p = p * inv;
        }
        self.compose_series(&series)
    }

    pub fn exp_jet(&self) -> Self {
        let e = self.c[0].exp_val();
        let mut series = Vec::with_capacity(self.order + 1);
        let mut f = 1.0;
        for k in 0..=self.order {
            if k > 1 {
                f *= k as f64;
            }
            series.push(e * S::from_re(1.0 / f));
        }
        self.compose_series(&series)
    }

    pub fn ln_jet(&self) -> Self {
        let a0 = self.c[0];
        let inv = a0.invert();
        let mut series = Vec::with_capacity(self.order + 1);
        series.push(a0.ln_val());
        let mut p = inv;
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(p * S::from_re(sign / k as f64));
            p = p * inv;
        }
        self.compose_series(&series)
    }

    pub fn sin_jet(&self) -> Self {
        let (s0, c0) = (self.c[0].sin_val(), self.c[0].cos_val());
        self.compose_series(&trig_series(s0, c0, self.order, true))
    }

    pub fn cos_jet(&self) -> Self {
        let (s0, c0) = (self.c[0].sin_val(), self.c[0].cos_val());
        self.compose_series(&trig_series(s0, c0, self.order, false))
    }
}

fn trig_series<S: JetScalar>(s0: S, c0: S, order: usize, sin: bool) -> Vec<S> {
    // Derivatives of sin cycle through (sin, cos, -sin, -cos).
    let cycle = [s0, c0, -s0, -c0];
    let start = if sin { 0 } else { 1 };
    let mut out = Vec::with_capacity(order + 1);
    let mut f = 1.0;
    for k in 0..=order {
        if k > 1 {
            f *= k as f64;
        }
        out.push(cycle[(start + k) % 4] * S::from_re(1.0 / f));
    }
    out
}

impl RJet {
    pub fn to_complex(&self) -> CJet {
        Jet { order: self.order, c: self.c.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }
}

impl CJet {
    /// Coefficient-wise complex conjugate. Because the jet variables (u,v)
    /// are real, this is the jet of the conjugated function.
    pub fn conj_jet(&self) -> CJet {
        Jet { order: self.order, c: self.c.iter().map(|z| z.conj()).collect() }
    }

    pub fn re_part(&self) -> RJet {
        Jet { order: self.order, c: self.c.iter().map(|z| z.re).collect() }
    }

    pub fn im_part(&self) -> RJet {
        Jet { order: self.order, c: self.c.iter().map(|z| z.im).collect() }
    }

    /// Wirtinger derivative ∂_z = (∂_u - i ∂_v)/2.
    pub fn dz(&self) -> CJet {
        let i = Complex64::new(0.0, 1.0);
        (self.du() - self.dv().scale(i)).scale(Complex64::new(0.5, 0.0))
    }

    /// Wirtinger derivative ∂_z̄ = (∂_u + i ∂_v)/2.
    pub fn dzbar(&self) -> CJet {
        let i = Complex64::new(0.0, 1.0);
        (self.du() + self.dv().scale(i)).scale(Complex64::new(0.5, 0.0))
    }
}

impl<S: JetScalar> Add for &Jet<S> {
    type Output = Jet<S>;
    fn add(self, rhs: Self) -> Jet<S> {
        let n = self.binary_order(rhs);
        let mut out = Jet::zeros(n);
        for k in 0..jet_len(n) {
            out.c[k] = self.c[k] + rhs.c[k];
        }
        out
    }
}

impl<S: JetScalar> Sub for &Jet<S> {
    type Output = Jet<S>;
    fn sub(self, rhs: Self) -> Jet<S> {
        let n = self.binary_order(rhs);
        let mut out = Jet::zeros(n);
        for k in 0..jet_len(n) {
            out.c[k] = self.c[k] - rhs.c[k];
        }
        out
    }
}

impl<S: JetScalar> Neg for &Jet<S> {
    type Output = Jet<S>;
    fn neg(self) -> Jet<S> {
        let mut out = self.clone();
        for v in &mut out.c {
            *v = -*v;
        }
        out
    }
}

macro_rules! forward_owned {
    ($trait_:ident, $method:ident) => {
        impl<S: JetScalar> $trait_ for Jet<S> {
            type Output = Jet<S>;
            fn $method(self, rhs: Self) -> Jet<S> {
                (&self).$method(&rhs)
            }
        }
        impl<S: JetScalar> $trait_<&Jet<S>> for Jet<S> {
            type Output = Jet<S>;
            fn $method(self, rhs: &Jet<S>) -> Jet<S> {
                (&self).$method(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);

impl<S: JetScalar> Mul for &Jet<S> {
    type Output = Jet<S>;
    fn mul(self, rhs: Self) -> Jet<S> {
        self.mul_jet(rhs)
    }
}
forward_owned!(Mul, mul);

impl<S: JetScalar> Neg for Jet<S> {
    type Output = Jet<S>;
    fn neg(self) -> Jet<S> {
        -(&self)
    }
}

/// Univariate jet (Taylor coefficients in one variable), used for profile
/// curves of rotational surfaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet1<S> {
    pub c: Vec<S>,
}

impl<S: JetScalar> Jet1<S> {
    pub fn zeros(order: usize) -> Self {
        Jet1 { c: vec![S::zero(); order + 1] }
    }

    pub fn constant(value: S, order: usize) -> Self {
        let mut j = Self::zeros(order);
        j.c[0] = value;
        j
    }

    pub fn variable(x0: S, order: usize) -> Self {
        let mut j = Self::zeros(order);
        j.c[0] = x0;
        if order >= 1 {
            j.c[1] = S::one();
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> S {
        self.c[0]
    }

    /// Derivative value `f^{(k)}` at the expansion point.
    pub fn coeffs(&self) -> &[S] {
        &self.c
    }

    pub fn coeff(&self, k: usize) -> S {
        if k < self.c.len() {
            self.c[k]
        } else {
            S::zero()
        }
    }

    pub fn set_coeff(&mut self, k: usize, val: S) {
        self.c[k] = val;
    }

    pub fn partial(&self, k: usize) -> S {
        if k >= self.c.len() {
            return S::zero();
        }
        let mut f = 1.0;
        for m in 2..=k {
            f *= m as f64;
        }
        self.c[k] * S::from_re(f)
    }

    pub fn mul_jet(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        let mut out = Self::zeros(n);
        for a in 0..=n {
            for b in 0..=(n - a) {
                out.c[a + b] += self.c[a] * rhs.c[b];
            }
        }
        out
    }

    pub fn add_jet(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        let mut out = Self::zeros(n);
        for k in 0..=n {
            out.c[k] = self.c[k] + rhs.c[k];
        }
        out
    }

    pub fn sub_jet(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        let mut out = Self::zeros(n);
        for k in 0..=n {
            out.c[k] = self.c[k] - rhs.c[k];
        }
        out
    }

    pub fn scale(&self, s: S) -> Self {
        Jet1 { c: self.c.iter().map(|&x| x * s).collect() }
    }

    pub fn deriv(&self) -> Self {
        let n = self.order();
        assert!(n >= 1);
        let mut out = Self::zeros(n - 1);
        for k in 0..n {
            out.c[k] = self.c[k + 1] * S::from_re((k + 1) as f64);
        }
        out
    }

    /// Compose `outer ∘ self` where `outer` holds Taylor coefficients of the
    /// outer function at `self.value()`.
    pub fn compose(&self, outer: &Jet1<S>) -> Self {
        let n = self.order().min(outer.order());
        let mut delta = self.truncated(n);
        delta.c[0] = S::zero();
        let mut acc = Jet1::constant(outer.c[n], n);
        for k in (0..n).rev() {
            acc = acc.mul_jet(&delta);
            acc.c[0] += outer.c[k];
        }
        acc
    }

    pub fn truncated(&self, order: usize) -> Self {
        let order = order.min(self.order());
        Jet1 { c: self.c[..=order].to_vec() }
    }

    pub fn recip(&self) -> Self {
        let n = self.order();
        let a0 = self.c[0];
        assert!(a0.norm2() > 0.0);
        let inv = a0.invert();
        let mut outer = Jet1::zeros(n);
        let mut p = inv;
        for k in 0..=n {
            outer.c[k] = p;
            p = -p * inv;
        }
        self.compose(&outer)
    }

    pub fn sqrt_jet(&self) -> Self {
        let n = self.order();
        let a0 = self.c[0];
        let mut outer = Jet1::zeros(n);
        let inv = a0.invert();
        let mut coef = S::one();
        let mut p = a0.sqrt_val();
        for k in 0..=n {
            outer.c[k] = coef * p;
            let kf = k as f64;
            coef *= S::from_re((0.5 - kf) / (kf + 1.0));
            p = p * inv;
        }
        self.compose(&outer)
    }

    /// Promote to a bivariate jet depending on the first variable only.
    pub fn into_bivariate_u(&self, order: usize) -> Jet<S> {
        let mut out = Jet::zeros(order);
        for k in 0..=order.min(self.order()) {
            out.set_coeff(k, 0, self.c[k]);
        }
        out
    }
}

/// Solve `A X = B` by Gaussian elimination over the jet ring, pivoting on the
/// largest constant term. `a` is n×n, `b` is n×m (both row-major vectors of
/// rows). Panics if a pivot's constant term vanishes (callers guard with
/// nondegeneracy checks first).
pub fn jet_linsolve<S: JetScalar>(
    mut a: Vec<Vec<Jet<S>>>,
    mut b: Vec<Vec<Jet<S>>>,
) -> Vec<Vec<Jet<S>>> {
    let n = a.len();
    let m = b[0].len();
    for col in 0..n {
        // Pivot: row with the largest |constant term| in this column.
        let mut best = col;
        let mut best_mag = a[col][col].value().norm2();
        for r in (col + 1)..n {
            let mag = a[r][col].value().norm2();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        assert!(best_mag > 0.0, "singular jet system (zero pivot)");
        a.swap(col, best);
        b.swap(col, best);
        let pinv = a[col][col].recip();
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col].mul_jet(&pinv);
            if factor.value().norm2() == 0.0 && factor.c.iter().all(|x| x.norm2() == 0.0) {
                continue;
            }
            for c in col..n {
                let t = factor.mul_jet(&a[col][c]);
                a[r][c] = &a[r][c] - &t;
            }
            for c in 0..m {
                let t = factor.mul_jet(&b[col][c]);
                b[r][c] = &b[r][c] - &t;
            }
        }
    }
    for r in 0..n {
        let pinv = a[r][r].recip();
        for c in 0..m {
            b[r][c] = b[r][c].mul_jet(&pinv);
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_jet(order: usize) -> RJet {
        // f(u,v) = exp(0.3 u) * sin(v + 0.2) + u*v^2 around (u,v) = (0.4, -0.7)
        let u = RJet::variable_u(0.4, order);
        let v = RJet::variable_v(-0.7, order);
        let term1 = u.scale(0.3).exp_jet().mul_jet(&(&v + &RJet::constant(0.2, order)).sin_jet());
        let term2 = u.mul_jet(&v.mul_jet(&v));
        &term1 + &term2
    }

    #[test]
    fn partials_match_closed_form() {
        let j = sample_jet(5);
        let (u, v) = (0.4_f64, -0.7_f64);
        // Closed-form partial derivatives of f.
        let f = (0.3 * u).exp() * (v + 0.2).sin() + u * v * v;
        let fu = 0.3 * (0.3 * u).exp() * (v + 0.2).sin() + v * v;
        let fv = (0.3 * u).exp() * (v + 0.2).cos() + 2.0 * u * v;
        let fuv = 0.3 * (0.3 * u).exp() * (v + 0.2).cos() + 2.0 * v;
        let fuuv = 0.09 * (0.3 * u).exp() * (v + 0.2).cos();
        let fvvv = -(0.3 * u).exp() * (v + 0.2).cos();
        assert_relative_eq!(j.partial(0, 0), f, max_relative = 1e-14);
        assert_relative_eq!(j.partial(1, 0), fu, max_relative = 1e-14);
        assert_relative_eq!(j.partial(0, 1), fv, max_relative = 1e-14);
        assert_relative_eq!(j.partial(1, 1), fuv, max_relative = 1e-14);
        assert_relative_eq!(j.partial(2, 1), fuuv, max_relative = 1e-13);
        assert_relative_eq!(j.partial(0, 3), fvvv, max_relative = 1e-13);
    }

    #[test]
    fn derivative_operators_commute() {
        let j = sample_jet(6);
        let a = j.du().dv();
        let b = j.dv().du();
        for i in 0..=4 {
            for jj in 0..=(4 - i) {
                assert_relative_eq!(a.coeff(i, jj), b.coeff(i, jj), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn eval_offset_matches_function() {
        let j = sample_jet(9);
        let (du, dv) = (0.02_f64, -0.015_f64);
        let (u, v) = (0.4_f64 + du, -0.7_f64 + dv);
        let exact = (0.3 * u).exp() * (v + 0.2).sin() + u * v * v;
        // Order-9 Taylor at offset ~0.02 is exact to far below 1e-15 relative.
        assert_relative_eq!(j.eval_offset(du, dv), exact, max_relative = 1e-13);
    }

    #[test]
    fn algebraic_inverses_roundtrip() {
        let j = sample_jet(6);
        let shifted = &j + &RJet::constant(3.0, 6); // keep value positive
        let one = shifted.mul_jet(&shifted.recip());
        let id = shifted.sqrt_jet().mul_jet(&shifted.sqrt_jet());
        let log_exp = shifted.ln_jet().exp_jet();
        for k in 0..jet_len(6) {
            assert_relative_eq!(one.c[k], if k == 0 { 1.0 } else { 0.0 }, epsilon = 1e-12);
            assert_relative_eq!(id.c[k], shifted.c[k], epsilon = 1e-12);
            assert_relative_eq!(log_exp.c[k], shifted.c[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn wirtinger_conjugation() {
        let j = sample_jet(5).to_complex();
        let a = j.dz().conj_jet();
        let b = j.conj_jet().dzbar();
        for i in 0..=4 {
            for jj in 0..=(4 - i) {
                let d = a.coeff(i, jj) - b.coeff(i, jj);
                assert!(d.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn jet_linear_solver_roundtrip() {
        // Build an invertible 3x3 jet matrix and verify A * solve(A, B) = B.
        let n = 4;
        let u = RJet::variable_u(0.1, n);
        let v = RJet::variable_v(0.2, n);
        let e = |k: f64| RJet::constant(k, n);
        let a = vec![
            vec![&e(2.0) + &u, v.clone(), e(0.3)],
            vec![u.mul_jet(&v), &e(1.5) - &v, u.clone()],
            vec![e(0.1), u.scale(0.5), &e(3.0) + &v.mul_jet(&v)],
        ];
        let b = vec![
            vec![u.sin_jet(), e(1.0)],
            vec![v.cos_jet(), u.clone()],
            vec![e(0.7), (&u + &v).exp_jet()],
        ];
        let x = jet_linsolve(a.clone(), b.clone());
        for r in 0..3 {
            for c in 0..2 {
                let mut acc = RJet::zeros(n);
                for k in 0..3 {
                    acc = &acc + &a[r][k].mul_jet(&x[k][c]);
                }
                for idx in 0..jet_len(n) {
                    assert_relative_eq!(acc.c[idx], b[r][c].c[idx], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn univariate_composition() {
        // g(x) = sqrt(1 + x^2) at x0 = 0.6, then f(g) with f = 1/g.
        let n = 6;
        let x = Jet1::<f64>::variable(0.6, n);
        let g = x.mul_jet(&x).add_jet(&Jet1::constant(1.0, n)).sqrt_jet();
        let h = g.recip();
        // h(x) = (1+x^2)^(-1/2); h'(x) = -x (1+x^2)^(-3/2)
        let x0 = 0.6_f64;
        let q = 1.0 + x0 * x0;
        assert_relative_eq!(h.value(), q.powf(-0.5), max_relative = 1e-14);
        assert_relative_eq!(h.partial(1), -x0 * q.powf(-1.5), max_relative = 1e-13);
        assert_relative_eq!(
            h.partial(2),
            (2.0 * x0 * x0 - 1.0) * q.powf(-2.5),
            max_relative = 1e-12
        );
    }
}
