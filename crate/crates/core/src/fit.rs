//! Bayesian line fits of log logical error rate against the square root of
//! the qubit count, and teraquop extrapolation.
//!
//! A hypothesis `Y = m X + b` with `X = sqrt(q)` predicts a per-shot error
//! rate `exp(Y)`. Points are scored by the binomial likelihood of their
//! error counts. Hypotheses within a factor of 1000 of the best one form the
//! likelihood region.

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

/// Points with a higher raw error rate are dropped before fitting.
pub const DISCARD_RATE: f64 = 0.4;
/// Error count above which a point is rescaled to this many errors.
pub const CLAMP_ERRORS: u64 = 10;
/// Likelihood ratio bounding the region.
pub const REGION_RATIO: f64 = 1000.0;
/// Target per-shot logical error rate for footprints.
pub const TERAQUOP_RATE: f64 = 1e-12;

/// Hypothesis search domain: slope, intercept, grid resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub m_min: f64,
    pub m_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            m_min: -2.0,
            m_max: 0.0,
            b_min: -5.0,
            b_max: 5.0,
            steps: 400,
        }
    }
}

impl Grid {
    fn m(&self, i: usize) -> f64 {
        self.m_min + (self.m_max - self.m_min) * i as f64 / (self.steps - 1) as f64
    }

    fn b(&self, j: usize) -> f64 {
        self.b_min + (self.b_max - self.b_min) * j as f64 / (self.steps - 1) as f64
    }

    pub fn dm(&self) -> f64 {
        (self.m_max - self.m_min) / (self.steps - 1) as f64
    }

    pub fn db(&self) -> f64 {
        (self.b_max - self.b_min) / (self.steps - 1) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitPoint {
    /// Square root of the qubit count.
    pub x: f64,
    pub shots: u64,
    pub errors: u64,
    pub raw_shots: u64,
    pub raw_errors: u64,
}

impl FitPoint {
    pub fn new(qubits: usize, shots: u64, errors: u64) -> FitPoint {
        FitPoint {
            x: (qubits as f64).sqrt(),
            shots,
            errors,
            raw_shots: shots,
            raw_errors: errors,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("insufficient points: {0} survive the discard, at least 2 needed")]
    InsufficientPoints(usize),
    #[error("non-decreasing fit (slope {0}); no intercept")]
    NonDecreasing(f64),
}

/// Rescales points with more than `CLAMP_ERRORS` errors to
/// `(ceil(s * 10 / e), 10)`, capping the weight any one point carries.
pub fn clamp(points: &[FitPoint]) -> Vec<FitPoint> {
    points
        .iter()
        .map(|p| {
            if p.errors > CLAMP_ERRORS {
                let s = (p.shots as u128 * CLAMP_ERRORS as u128).div_ceil(p.errors as u128) as u64;
                FitPoint {
                    shots: s,
                    errors: CLAMP_ERRORS,
                    ..*p
                }
            } else {
                *p
            }
        })
        .collect()
}

/// Drops points whose raw error rate exceeds `DISCARD_RATE`.
pub fn discard(points: &[FitPoint]) -> Vec<FitPoint> {
    points
        .iter()
        .filter(|p| p.raw_shots > 0 && (p.raw_errors as f64) <= DISCARD_RATE * p.raw_shots as f64)
        .copied()
        .collect()
}

/// Natural log of the binomial coefficient.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    if k <= 1000 {
        (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
    } else {
        ln_binomial(n, k)
    }
}

/// Binomial log-likelihood of all points under `Y = m X + b`. Negative
/// infinity when a predicted rate is not in (0, 1).
pub fn log_likelihood(m: f64, b: f64, points: &[FitPoint]) -> f64 {
    let mut total = 0.0;
    for p in points {
        let y = m * p.x + b;
        if !(y < 0.0) || y == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let fail = (-y.exp()).ln_1p();
        total += ln_choose(p.shots, p.errors) + p.errors as f64 * y + (p.shots - p.errors) as f64 * fail;
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub m: f64,
    pub b: f64,
    pub log_likelihood: f64,
    /// Grid hypotheses `(m, b)` within the likelihood ratio of the best.
    pub region: Vec<(f64, f64)>,
    pub grid: Grid,
    /// True when the best hypothesis sits on the edge of the grid.
    pub on_edge: bool,
}

/// Golden-section maximisation of `f` on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) / 2.0
}

/// Maximum-likelihood line after discarding and clamping.
pub fn fit(points: &[FitPoint]) -> Result<LineFit, FitError> {
    fit_with(points, Grid::default(), REGION_RATIO)
}

pub fn fit_with(points: &[FitPoint], grid: Grid, ratio: f64) -> Result<LineFit, FitError> {
    let pts = clamp(&discard(points));
    if pts.len() < 2 {
        return Err(FitError::InsufficientPoints(pts.len()));
    }
    let n = grid.steps;
    let ll: Vec<f64> = (0..n * n)
        .map(|k| log_likelihood(grid.m(k / n), grid.b(k % n), &pts))
        .collect();
    let (best, &best_ll) = ll
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .unwrap();
    let (bi, bj) = (best / n, best % n);
    let (mut m, mut b) = (grid.m(bi), grid.b(bj));
    // Coordinate-wise golden-section refinement within one grid cell.
    for _ in 0..20 {
        let nm = golden_max(|x| log_likelihood(x, b, &pts), (m - grid.dm()).max(grid.m_min), (m + grid.dm()).min(grid.m_max));
        let nb = golden_max(|y| log_likelihood(nm, y, &pts), (b - grid.db()).max(grid.b_min), (b + grid.db()).min(grid.b_max));
        if log_likelihood(nm, nb, &pts) >= log_likelihood(m, b, &pts) {
            m = nm;
            b = nb;
        }
    }
    let mut mle_ll = log_likelihood(m, b, &pts);
    if mle_ll < best_ll {
        (m, b, mle_ll) = (grid.m(bi), grid.b(bj), best_ll);
    }
    let cut = mle_ll - ratio.ln();
    let region = (0..n * n)
        .filter(|&k| ll[k] >= cut)
        .map(|k| (grid.m(k / n), grid.b(k % n)))
        .collect();
    Ok(LineFit {
        m,
        b,
        log_likelihood: mle_ll,
        region,
        grid,
        on_edge: bi == 0 || bj == 0 || bi == n - 1 || bj == n - 1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Footprint {
    pub q_low: f64,
    pub q_mle: f64,
    pub q_high: f64,
}

/// Qubit count where the line reaches `TERAQUOP_RATE`.
pub fn intercept(m: f64, b: f64) -> Option<f64> {
    if m >= 0.0 {
        return None;
    }
    let x = (TERAQUOP_RATE.ln() - b) / m;
    (x > 0.0).then(|| x * x)
}

/// Teraquop footprint for the best line and the range over the region.
/// Region hypotheses that never reach the target stretch the upper end to
/// infinity.
pub fn teraquop_intercept(f: &LineFit) -> Result<Footprint, FitError> {
    let q_mle = intercept(f.m, f.b).ok_or(FitError::NonDecreasing(f.m))?;
    let (mut lo, mut hi) = (q_mle, q_mle);
    for &(m, b) in &f.region {
        let q = intercept(m, b).unwrap_or(f64::INFINITY);
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok(Footprint {
        q_low: lo,
        q_mle,
        q_high: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, s: u64, e: u64) -> FitPoint {
        FitPoint {
            x,
            shots: s,
            errors: e,
            raw_shots: s,
            raw_errors: e,
        }
    }

    #[test]
    fn clamp_examples() {
        let c = clamp(&[pt(1.0, 1_000_000, 4000), pt(1.0, 1_000_000, 10), pt(1.0, 1_000_000, 11)]);
        assert_eq!((c[0].shots, c[0].errors), (2500, 10));
        assert_eq!((c[0].raw_shots, c[0].raw_errors), (1_000_000, 4000));
        assert_eq!((c[1].shots, c[1].errors), (1_000_000, 10));
        assert_eq!((c[2].shots, c[2].errors), (909_091, 10));
    }

    #[test]
    fn discard_above_forty_percent() {
        let kept = discard(&[pt(1.0, 100, 40), pt(2.0, 100, 41), pt(3.0, 100, 50)]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].x, 1.0);
    }

    #[test]
    fn discarded_point_never_influences_fit() {
        let base = vec![pt(3.0, 100_000, 900), pt(5.0, 100_000, 80), pt(7.0, 100_000, 7)];
        let mut with = base.clone();
        with.push(pt(2.0, 1000, 500));
        assert_eq!(fit(&base).unwrap(), fit(&with).unwrap());
    }

    /// ln of a big integer from its top bits.
    fn ln_big(n: &BigUint) -> f64 {
        let bits = n.bits();
        let shift = bits.saturating_sub(64);
        let top: BigUint = n >> shift;
        let top = top.iter_u64_digits().next().unwrap_or(0) as f64;
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }

    fn oracle_ll(m: f64, b: f64, pts: &[FitPoint]) -> f64 {
        pts.iter()
            .map(|p| {
                let k = p.errors.min(p.shots - p.errors);
                let mut num = BigUint::from(1u32);
                let mut den = BigUint::from(1u32);
                for i in 0..k {
                    num *= p.shots - i;
                    den *= i + 1;
                }
                let c = ln_big(&(num / den));
                let y = m * p.x + b;
                c + p.errors as f64 * y + (p.shots - p.errors) as f64 * (-y.exp()).ln_1p()
            })
            .sum()
    }

    #[test]
    fn log_likelihood_matches_exact_binomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pts: Vec<FitPoint> = (0..rng.gen_range(1..6))
                .map(|_| {
                    let s = rng.gen_range(1..200_000u64);
                    pt(rng.gen_range(2.0..15.0), s, rng.gen_range(0..=s.min(3000)))
                })
                .collect();
            let (m, b) = (rng.gen_range(-1.5..-0.1), rng.gen_range(-3.0..0.0));
            let got = log_likelihood(m, b, &pts);
            let want = oracle_ll(m, b, &pts);
            assert!(((got - want) / want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn ln_choose_branches_agree() {
        for (n, k) in [(5000u64, 1001u64), (100_000, 2500), (3000, 1500)] {
            let direct: f64 = (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum();
            assert!((ln_choose(n, k) - direct).abs() / direct < 1e-12);
        }
        assert_eq!(ln_choose(10, 0), 0.0);
        assert_eq!(ln_choose(10, 10), 0.0);
    }

    #[test]
    fn invalid_rates_are_impossible() {
        assert_eq!(log_likelihood(0.0, 0.0, &[pt(1.0, 10, 1)]), f64::NEG_INFINITY);
        assert_eq!(log_likelihood(1.0, 0.5, &[pt(1.0, 10, 1)]), f64::NEG_INFINITY);
    }

    #[test]
    fn single_point_maximised_at_its_rate() {
        let p = [pt(4.0, 1000, 20)];
        let at = |y: f64| log_likelihood(0.0, y, &p);
        let y0 = 0.02f64.ln();
        assert!(at(y0) > at(y0 + 0.01));
        assert!(at(y0) > at(y0 - 0.01));
    }

    #[test]
    fn collinear_points_recovered() {
        let (m, b) = (-0.8, -1.0);
        let pts: Vec<FitPoint> = [3.0, 5.0]
            .iter()
            .map(|&x| pt(x, (10.0 / f64::exp(m * x + b)).round() as u64, 10))
            .collect();
        let f = fit(&pts).unwrap();
        assert!((f.m - m).abs() < 0.02, "{}", f.m);
        assert!((f.b - b).abs() < 0.1, "{}", f.b);
    }

    #[test]
    fn synthetic_line_recovered_with_many_points() {
        let (m, b) = (-0.6, -2.0);
        let pts: Vec<FitPoint> = (3..10)
            .map(|k| {
                let x = k as f64;
                let s = 1_000_000_000u64;
                pt(x, s, (f64::exp(m * x + b) * s as f64).round() as u64)
            })
            .collect();
        let f = fit(&pts).unwrap();
        let g = Grid::default();
        assert!((f.m - m).abs() <= 2.0 * g.dm());
        assert!((f.b - b).abs() <= 2.0 * g.db());
        assert!(f.region.iter().any(|&(rm, rb)| (rm - f.m).abs() <= g.dm() && (rb - f.b).abs() <= g.db()));
    }

    #[test]
    fn region_contains_mle_neighbourhood() {
        let pts = [pt(4.0, 100_000, 300), pt(6.0, 100_000, 30), pt(8.0, 100_000, 2)];
        let f = fit(&pts).unwrap();
        let cut = f.log_likelihood - REGION_RATIO.ln();
        assert!(!f.region.is_empty());
        for &(m, b) in &f.region {
            assert!(log_likelihood(m, b, &clamp(&pts)) >= cut);
        }
        let ms: Vec<f64> = f.region.iter().map(|r| r.0).collect();
        let bs: Vec<f64> = f.region.iter().map(|r| r.1).collect();
        let (lo, hi) = (ms.iter().cloned().fold(f64::MAX, f64::min), ms.iter().cloned().fold(f64::MIN, f64::max));
        assert!(lo <= f.m && f.m <= hi);
        let (lo, hi) = (bs.iter().cloned().fold(f64::MAX, f64::min), bs.iter().cloned().fold(f64::MIN, f64::max));
        assert!(lo <= f.b && f.b <= hi);
    }

    #[test]
    fn duplicate_points_same_argmax() {
        let pts = vec![pt(4.0, 50_000, 9), pt(6.0, 80_000, 3), pt(8.0, 100_000, 0)];
        let mut twice = pts.clone();
        twice.extend(pts.clone());
        let (a, b) = (fit(&pts).unwrap(), fit(&twice).unwrap());
        assert!((a.m - b.m).abs() < 1e-6 && (a.b - b.b).abs() < 1e-6);
        assert!((2.0 * a.log_likelihood - b.log_likelihood).abs() < 1e-6 * b.log_likelihood.abs());
    }

    #[test]
    fn zero_error_point_tightens_upper_envelope() {
        let pts = vec![pt(4.0, 100_000, 9), pt(6.0, 100_000, 2)];
        let mut more = pts.clone();
        more.push(pt(9.0, 1_000_000, 0));
        let top = |f: &LineFit| f.region.iter().map(|&(m, b)| m * 9.0 + b).fold(f64::MIN, f64::max);
        assert!(top(&fit(&more).unwrap()) < top(&fit(&pts).unwrap()));
    }

    #[test]
    fn smaller_ratio_never_enlarges_region() {
        let pts = [pt(4.0, 100_000, 40), pt(6.0, 100_000, 5)];
        let g = Grid::default();
        let wide = fit_with(&pts, g, 1000.0).unwrap();
        let narrow = fit_with(&pts, g, 500.0).unwrap();
        assert!(narrow.region.len() <= wide.region.len());
        assert!(narrow.region.iter().all(|r| wide.region.contains(r)));
    }

    #[test]
    fn insufficient_points() {
        assert_eq!(fit(&[pt(1.0, 10, 9), pt(2.0, 100, 1)]), Err(FitError::InsufficientPoints(1)));
    }

    #[test]
    fn intercept_closed_form() {
        let m = 0.1f64.ln();
        let b = TERAQUOP_RATE.ln() - 30.0 * m;
        assert!((intercept(m, b).unwrap() - 900.0).abs() < 1e-9);
        assert_eq!(intercept(0.0, -1.0), None);
        let f = LineFit {
            m,
            b,
            log_likelihood: 0.0,
            region: vec![(m * 1.1, b), (m * 0.9, b)],
            grid: Grid::default(),
            on_edge: false,
        };
        let fp = teraquop_intercept(&f).unwrap();
        assert!(fp.q_low <= fp.q_mle && fp.q_mle <= fp.q_high);
        let flat = LineFit { m: 0.0, ..f };
        assert_eq!(teraquop_intercept(&flat), Err(FitError::NonDecreasing(0.0)));
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(s in 1u64..10_000_000, e in 0u64..10_000) {
            let e = e.min(s);
            let once = clamp(&[pt(1.0, s, e)]);
            prop_assert_eq!(clamp(&once), once.clone());
            prop_assert!(once[0].errors <= CLAMP_ERRORS);
        }
    }
}
