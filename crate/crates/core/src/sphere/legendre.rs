//! Fully normalized associated Legendre functions without the Condon-Shortley phase.
//!
//! `P̄_l^m(cos t)` is normalized so that `√2 P̄_l^m cos(mφ)` (m > 0) and
//! `P̄_l^0` are orthonormal on S^2.

use std::f64::consts::PI;

/// Values and polar-angle derivatives of `P̄_l^m(cos t)` for `0 <= m <= l <= lmax`.
#[derive(Clone, Debug)]
pub(crate) struct LegendreTable {
    lmax: usize,
    values: Vec<f64>,
    dtheta: Vec<f64>,
}

impl LegendreTable {
    /// `x = cos t`, `s = sin t >= 0`. Derivatives are only filled when `s > 0`.
    pub(crate) fn new(lmax: usize, x: f64, s: f64) -> Self {
        let n = lmax + 1;
        let mut values = vec![0.0; n * n];
        let mut dtheta = vec![0.0; n * n];
        let mut pmm = 1.0 / (4.0 * PI).sqrt();
        for m in 0..=lmax {
            if m > 0 {
                let mf = m as f64;
                pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
            }
            let row = m * n;
            values[row + m] = pmm;
            if m < lmax {
                values[row + m + 1] = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
            }
            let mf = m as f64;
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                values[row + l] = a * (x * values[row + l - 1] - b * values[row + l - 2]);
            }
            if s > 0.0 {
                for l in m..=lmax {
                    let lf = l as f64;
                    let prev = if l > m { values[row + l - 1] } else { 0.0 };
                    let f = ((2.0 * lf + 1.0) * (lf - mf) * (lf + mf) / (2.0 * lf - 1.0)).sqrt();
                    dtheta[row + l] = (lf * x * values[row + l] - f * prev) / s;
                }
            }
        }
        LegendreTable {
            lmax,
            values,
            dtheta,
        }
    }

    #[inline]
    pub(crate) fn value(&self, l: usize, m: usize) -> f64 {
        self.values[m * (self.lmax + 1) + l]
    }

    #[inline]
    pub(crate) fn dtheta(&self, l: usize, m: usize) -> f64 {
        self.dtheta[m * (self.lmax + 1) + l]
    }
}

/// `max_t |P̄_l^m(cos t)|`, located by dense sampling and golden-section refinement.
pub(crate) fn sup_abs(l: usize, m: usize) -> f64 {
    if m == 0 {
        return ((2.0 * l as f64 + 1.0) / (4.0 * PI)).sqrt();
    }
    let eval = |t: f64| LegendreTable::new(l, t.cos(), t.sin()).value(l, m).abs();
    const SAMPLES: usize = 4096;
    let half = PI / 2.0;
    let step = half / SAMPLES as f64;
    let (mut best, mut best_val) = (0usize, 0.0f64);
    for j in 0..=SAMPLES {
        let v = eval(j as f64 * step);
        if v > best_val {
            best_val = v;
            best = j;
        }
    }
    let mut lo = (best as f64 - 1.0).max(0.0) * step;
    let mut hi = (best as f64 + 1.0).min(SAMPLES as f64) * step;
    let ratio = (5.0f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if eval(a) > eval(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    eval(0.5 * (lo + hi)).max(best_val)
}
