//! Rectangular parameter grids: storage, coordinates, parallel maps with
//! deterministic (index-ordered) collection, and masked residual summaries.

use rayon::prelude::*;

/// Parameter rectangle with node counts and optional axis periods.
///
/// Nodes are `u_i = u0 + i·h_u` for `i < nu` (similarly in v). For a periodic
/// axis the stated domain covers one period and `h = period / n` so that the
/// wrap-around neighbor of the last node is the first node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
    pub nu: usize,
    pub nv: usize,
    pub periodic_u: bool,
    pub periodic_v: bool,
}

impl GridSpec {
    pub fn new(domain: (f64, f64, f64, f64), nu: usize, nv: usize) -> Self {
        GridSpec {
            u0: domain.0,
            u1: domain.1,
            v0: domain.2,
            v1: domain.3,
            nu,
            nv,
            periodic_u: false,
            periodic_v: false,
        }
    }

    pub fn h_u(&self) -> f64 {
        let denom = if self.periodic_u { self.nu } else { self.nu - 1 };
        (self.u1 - self.u0) / denom as f64
    }

    pub fn h_v(&self) -> f64 {
        let denom = if self.periodic_v { self.nv } else { self.nv - 1 };
        (self.v1 - self.v0) / denom as f64
    }

    pub fn u_at(&self, i: usize) -> f64 {
        self.u0 + self.h_u() * i as f64
    }

    pub fn v_at(&self, j: usize) -> f64 {
        self.v0 + self.h_v() * j as f64
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same rectangle re-sampled at a different resolution.
    pub fn with_resolution(&self, nu: usize, nv: usize) -> Self {
        GridSpec { nu, nv, ..self.clone() }
    }
}

/// Dense row-major grid (`v` fastest: index = iu·nv + iv).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub nu: usize,
    pub nv: usize,
    pub data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_vec(nu: usize, nv: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), nu * nv, "grid data length mismatch");
        Grid { nu, nv, data }
    }

    #[inline]
    pub fn idx(&self, iu: usize, iv: usize) -> usize {
        debug_assert!(iu < self.nu && iv < self.nv);
        iu * self.nv + iv
    }

    #[inline]
    pub fn at(&self, iu: usize, iv: usize) -> &T {
        &self.data[iu * self.nv + iv]
    }

    #[inline]
    pub fn at_mut(&mut self, iu: usize, iv: usize) -> &mut T {
        &mut self.data[iu * self.nv + iv]
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Grid<U> {
        Grid { nu: self.nu, nv: self.nv, data: self.data.iter().map(f).collect() }
    }

    pub fn iter_indexed(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let nv = self.nv;
        self.data.iter().enumerate().map(move |(k, t)| (k / nv, k % nv, t))
    }
}

impl<T: Send> Grid<T> {
    /// Build a grid by evaluating `f(iu, iv)` at every node in parallel.
    /// Collection is index-ordered, so results are independent of thread
    /// count and scheduling.
    pub fn from_fn_parallel<F>(nu: usize, nv: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> T + Sync,
    {
        crate::init_parallelism();
        let data: Vec<T> = (0..nu * nv)
            .into_par_iter()
            .map(|k| f(k / nv, k % nv))
            .collect();
        Grid { nu, nv, data }
    }

    pub fn from_fn<F>(nu: usize, nv: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> T,
    {
        let mut data = Vec::with_capacity(nu * nv);
        for iu in 0..nu {
            for iv in 0..nv {
                data.push(f(iu, iv));
            }
        }
        Grid { nu, nv, data }
    }
}

/// Max / mean / l2 summary of a nonnegative residual grid. Masked nodes are
/// excluded; `counted` reports how many nodes participated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub max: f64,
    pub mean: f64,
    pub l2: f64,
    pub counted: usize,
}

impl Summary {
    pub fn empty() -> Self {
        Summary { max: 0.0, mean: 0.0, l2: 0.0, counted: 0 }
    }
}

/// Sequential (deterministic) summary of `values`, skipping nodes where
/// `mask` is true.
pub fn summarize(values: &Grid<f64>, mask: Option<&Grid<bool>>) -> Summary {
    let mut max = 0.0_f64;
    let mut sum = 0.0_f64;
    let mut sum_sq = 0.0_f64;
    let mut counted = 0usize;
    for (k, &v) in values.data.iter().enumerate() {
        if let Some(m) = mask {
            if m.data[k] {
                continue;
            }
        }
        max = max.max(v.abs());
        sum += v.abs();
        sum_sq += v * v;
        counted += 1;
    }
    if counted == 0 {
        return Summary::empty();
    }
    Summary { max, mean: sum / counted as f64, l2: (sum_sq / counted as f64).sqrt(), counted }
}

/// Median of the finite values in a grid (used for relative degeneracy
/// thresholds); 0 when no finite values exist.
pub fn median(values: &Grid<f64>) -> f64 {
    let mut v: Vec<f64> = values.data.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
