use rand::Rng;
use thiserror::Error;

use crate::streams::design_rng;

/// Summary views clamp indices into this range; raw values are kept alongside.
pub const INDEX_CLAMP: (f64, f64) = (0.0, 1.5);

const DESIGN_PURPOSE: u64 = 0x5A17;

/// Saltelli design: base matrices `A`, `B` and the column swaps `AB_i`.
///
/// Evaluation points are numbered `A` rows first, then `B` rows, then
/// `AB_1 .. AB_p`, for `n_s * (p + 2)` points in total.
#[derive(Debug, Clone, PartialEq)]
pub struct SaltelliDesign {
    pub p: usize,
    pub n_s: usize,
    pub seed: u64,
    /// Row-major `n_s x p`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SaltelliDesign {
    /// Entries are `2u - 1` with `u` uniform on `[0, 1)` from the design stream,
    /// filling `A` row by row and then `B`.
    pub fn new(p: usize, n_s: usize, seed: u64) -> Self {
        let mut rng = design_rng(seed, DESIGN_PURPOSE);
        let mut draw = |len| -> Vec<f64> { (0..len).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect() };
        let a = draw(n_s * p);
        let b = draw(n_s * p);
        Self { p, n_s, seed, a, b }
    }

    pub fn n_points(&self) -> usize {
        self.n_s * (self.p + 2)
    }

    pub fn a_row(&self, r: usize) -> &[f64] {
        &self.a[r * self.p..(r + 1) * self.p]
    }

    pub fn b_row(&self, r: usize) -> &[f64] {
        &self.b[r * self.p..(r + 1) * self.p]
    }

    /// Row `r` of `AB_i`: `A` with column `i` taken from `B`.
    pub fn ab_row(&self, i: usize, r: usize) -> Vec<f64> {
        let mut row = self.a_row(r).to_vec();
        row[i] = self.b[r * self.p + i];
        row
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        let n = self.n_s;
        match k / n {
            0 => self.a_row(k).to_vec(),
            1 => self.b_row(k - n).to_vec(),
            block => self.ab_row(block - 2, k % n),
        }
    }

    /// Split values listed in point order into `(fA, fB, [fAB_i])`.
    pub fn split<'a>(&self, values: &'a [f64]) -> (&'a [f64], &'a [f64], Vec<&'a [f64]>) {
        assert_eq!(values.len(), self.n_points(), "one value per design point");
        let n = self.n_s;
        let fab = (0..self.p).map(|i| &values[(2 + i) * n..(3 + i) * n]).collect();
        (&values[..n], &values[n..2 * n], fab)
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("degenerate QoI: all samples are identical, indices are undefined")]
pub struct Degenerate;

/// First-order and total Sobol' indices of one QoI.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolEstimate {
    /// Raw first-order estimates `S_i`.
    pub first_order: Vec<f64>,
    /// Raw total-effect estimates `T_i`.
    pub total: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub n_s: usize,
}

fn clamp(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.clamp(INDEX_CLAMP.0, INDEX_CLAMP.1)).collect()
}

impl SobolEstimate {
    pub fn first_order_clamped(&self) -> Vec<f64> {
        clamp(&self.first_order)
    }

    pub fn total_clamped(&self) -> Vec<f64> {
        clamp(&self.total)
    }
}

/// Jansen total-effect and Saltelli first-order estimators.
///
/// `V` is the sample variance of `fA ++ fB`. The first-order sum uses `fB`
/// centred by the pooled mean; this leaves the estimator unbiased (the
/// differences `fAB_i - fA` have mean zero) but removes the `mean^2` term
/// that otherwise dominates its variance when `|mean|` is large.
pub fn estimate_indices(fa: &[f64], fb: &[f64], fab: &[&[f64]]) -> Result<SobolEstimate, Degenerate> {
    let n = fa.len();
    assert!(n >= 2 && fb.len() == n, "fA and fB need the same length >= 2");
    assert!(fab.iter().all(|f| f.len() == n), "every fAB_i needs length N_s");

    let first = fa[0];
    let constant = fa.iter().chain(fb).chain(fab.iter().flat_map(|f| f.iter())).all(|&x| x == first);
    let pooled = || fa.iter().chain(fb);
    let mean = pooled().sum::<f64>() / (2 * n) as f64;
    let variance = pooled().map(|x| (x - mean).powi(2)).sum::<f64>() / (2 * n - 1) as f64;
    if constant || variance <= 0.0 || !variance.is_finite() {
        return Err(Degenerate);
    }

    let nf = n as f64;
    let mut first_order = Vec::with_capacity(fab.len());
    let mut total = Vec::with_capacity(fab.len());
    for f in fab {
        let mut s = 0.0;
        let mut t = 0.0;
        for r in 0..n {
            s += (fb[r] - mean) * (f[r] - fa[r]);
            t += (fa[r] - f[r]).powi(2);
        }
        first_order.push(s / nf / variance);
        total.push(t / (2.0 * nf) / variance);
    }
    Ok(SobolEstimate {
        first_order,
        total,
        mean,
        variance,
        n_s: n,
    })
}

/// Percentile of `sorted` at probability `prob` by linear interpolation between
/// order statistics (`h = (n - 1) prob`).
pub fn percentile(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evaluate(design: &SaltelliDesign, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..design.n_points()).map(|k| f(&design.point(k))).collect()
    }

    #[test]
    fn design_shape_and_construction() {
        let d = SaltelliDesign::new(2, 4, 9);
        assert_eq!(d.n_points(), 16);
        assert_eq!(SaltelliDesign::new(16, 1000, 1).n_points(), 18_000);
        for r in 0..4 {
            let ab = d.ab_row(0, r);
            assert_eq!(ab[0], d.b_row(r)[0]);
            assert_eq!(ab[1], d.a_row(r)[1]);
            assert_eq!(d.point(8 + r), ab);
            assert_eq!(d.point(4 + r), d.b_row(r));
        }
        assert!(d.a.iter().chain(&d.b).all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(d, SaltelliDesign::new(2, 4, 9));
        assert_ne!(d, SaltelliDesign::new(2, 4, 10));
    }

    #[test]
    fn additive_model() {
        let d = SaltelliDesign::new(2, 4096, 11);
        let vals = evaluate(&d, |t| t[0] + 2.0 * t[1]);
        let (fa, fb, fab) = d.split(&vals);
        let e = estimate_indices(fa, fb, &fab).unwrap();
        for (got, want) in e.first_order.iter().chain(&e.total).zip([0.2, 0.8, 0.2, 0.8]) {
            assert!((got - want).abs() < 0.05, "{e:?}");
        }
        assert!((e.variance - 5.0 / 3.0).abs() < 0.1);
    }

    #[test]
    fn pure_interaction() {
        let d = SaltelliDesign::new(2, 4096, 12);
        let vals = evaluate(&d, |t| t[0] * t[1]);
        let (fa, fb, fab) = d.split(&vals);
        let e = estimate_indices(fa, fb, &fab).unwrap();
        for i in 0..2 {
            assert!(e.first_order[i].abs() < 0.05, "{e:?}");
            assert!((e.total[i] - 1.0).abs() < 0.1, "{e:?}");
        }
    }

    #[test]
    fn large_offset_does_not_swamp_first_order() {
        let d = SaltelliDesign::new(2, 2048, 13);
        let vals = evaluate(&d, |t| 1e3 + t[0] + 2.0 * t[1]);
        let (fa, fb, fab) = d.split(&vals);
        let e = estimate_indices(fa, fb, &fab).unwrap();
        assert!((e.first_order[0] - 0.2).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn constant_qoi_is_degenerate() {
        let d = SaltelliDesign::new(3, 8, 1);
        let vals = vec![4.2; d.n_points()];
        let (fa, fb, fab) = d.split(&vals);
        assert_eq!(estimate_indices(fa, fb, &fab), Err(Degenerate));
    }

    #[test]
    fn type7_percentiles() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&x, 0.0), 1.0);
        assert_eq!(percentile(&x, 1.0), 5.0);
        assert_eq!(percentile(&x, 0.5), 3.0);
        assert!((percentile(&x, 0.05) - 1.2).abs() < 1e-12);
        assert!((percentile(&x, 0.95) - 4.8).abs() < 1e-12);
        assert_eq!(percentile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn clamping_is_a_view() {
        let e = SobolEstimate {
            first_order: vec![-0.1, 0.3],
            total: vec![1.7, 0.2],
            mean: 0.0,
            variance: 1.0,
            n_s: 2,
        };
        assert_eq!(e.first_order_clamped(), vec![0.0, 0.3]);
        assert_eq!(e.total_clamped(), vec![1.5, 0.2]);
        assert_eq!(e.total[0], 1.7);
    }
}
