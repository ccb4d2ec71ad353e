//! Adaptive Gauss–Kronrod integration of `exp(h(x))` carried out in log
//! space.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{observed_information, LogLikelihood, MixtureLogDensity, MixtureMethod, Support};
use crate::error::{Error, Result};

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_subdivisions: 4000,
        }
    }
}

/// How a unit parameter `t ∈ [0, 1]` maps onto a piece of the domain.
#[derive(Debug, Clone, Copy)]
enum Piece {
    /// `x = a + (b − a) t`.
    Linear { a: f64, b: f64 },
    /// `x = a + (b − a)(3t² − 2t³)`; flattens algebraic endpoint singularities.
    Smooth { a: f64, b: f64 },
    /// `x = a + dir · t/(1 − t)`, a half-line.
    Tail { a: f64, dir: f64 },
}

impl Piece {
    /// Returns `(x, dx/dt)`.
    fn map(&self, t: f64) -> (f64, f64) {
        match *self {
            Piece::Linear { a, b } => (a + (b - a) * t, b - a),
            Piece::Smooth { a, b } => (a + (b - a) * t * t * (3.0 - 2.0 * t), 6.0 * (b - a) * t * (1.0 - t)),
            Piece::Tail { a, dir } => {
                let u = 1.0 - t;
                (a + dir * t / u, 1.0 / (u * u))
            }
        }
    }
}

struct Segment {
    piece: usize,
    t0: f64,
    t1: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Integrator<'a, H> {
    h: &'a H,
    pieces: Vec<Piece>,
    shift: f64,
    max_seen: f64,
}

impl<H: Fn(f64) -> f64> Integrator<'_, H> {
    fn eval(&mut self, piece: usize, t: f64) -> Result<f64> {
        let (x, jac) = self.pieces[piece].map(t);
        if jac == 0.0 {
            return Ok(0.0);
        }
        let v = (self.h)(x);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::NonFinite { at: x });
        }
        if v > self.max_seen {
            self.max_seen = v;
        }
        let out = (v - self.shift).exp() * jac;
        if !out.is_finite() {
            return Err(Error::NonFinite { at: x });
        }
        Ok(out)
    }

    fn gk15(&mut self, piece: usize, t0: f64, t1: f64) -> Result<(f64, f64)> {
        let c = 0.5 * (t0 + t1);
        let hw = 0.5 * (t1 - t0);
        let fc = self.eval(piece, c)?;
        let mut kronrod = fc * WGK[7];
        let mut gauss = fc * WG[3];
        for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
            let f1 = self.eval(piece, c - hw * x)?;
            let f2 = self.eval(piece, c + hw * x)?;
            kronrod += wk * (f1 + f2);
            if j % 2 == 1 {
                gauss += WG[j / 2] * (f1 + f2);
            }
        }
        Ok((kronrod * hw, ((kronrod - gauss) * hw).abs()))
    }

    fn run(&mut self, opts: &QuadratureOptions) -> Result<(f64, f64)> {
        let mut heap = BinaryHeap::new();
        let (mut total, mut total_err) = (0.0, 0.0);
        for piece in 0..self.pieces.len() {
            let (value, error) = self.gk15(piece, 0.0, 1.0)?;
            total += value;
            total_err += error;
            heap.push(Segment {
                piece,
                t0: 0.0,
                t1: 1.0,
                value,
                error,
            });
        }
        let mut splits = 0;
        while total_err > opts.rel_tol * total.abs() && splits < opts.max_subdivisions {
            let Some(seg) = heap.pop() else { break };
            let mid = 0.5 * (seg.t0 + seg.t1);
            let (v1, e1) = self.gk15(seg.piece, seg.t0, mid)?;
            let (v2, e2) = self.gk15(seg.piece, mid, seg.t1)?;
            total += v1 + v2 - seg.value;
            total_err += e1 + e2 - seg.error;
            heap.push(Segment {
                piece: seg.piece,
                t0: seg.t0,
                t1: mid,
                value: v1,
                error: e1,
            });
            heap.push(Segment {
                piece: seg.piece,
                t0: mid,
                t1: seg.t1,
                value: v2,
                error: e2,
            });
            splits += 1;
        }
        // Re-sum to shed the drift of the running updates.
        let total: f64 = heap.iter().map(|s| s.value).sum();
        let total_err: f64 = heap.iter().map(|s| s.error).sum();
        Ok((total, total_err))
    }
}

/// `ln ∫ exp(h(x)) dx` over `domain`.
///
/// `center` and `scale` locate the bulk of the integrand; breakpoints are
/// laid at `center ± {½, 1, 2, …, 64}·scale` so narrow peaks are never
/// missed. Infinite ends are handled by mapping half-lines onto `[0, 1)`.
/// Values are shifted by the largest observed `h` before exponentiating.
pub fn integrate_log(
    h: impl Fn(f64) -> f64,
    domain: Support,
    center: f64,
    scale: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let center = center.clamp(domain.lo, domain.hi);
    let mut points = vec![center];
    for k in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        points.push(center - k * scale);
        points.push(center + k * scale);
    }
    points.retain(|p| p.is_finite() && *p > domain.lo && *p < domain.hi);
    points.sort_by(f64::total_cmp);
    points.dedup();
    if points.is_empty() {
        points.push(if domain.is_bounded() {
            0.5 * (domain.lo + domain.hi)
        } else {
            0.0
        });
    }

    let mut pieces = Vec::with_capacity(points.len() + 1);
    let first = points[0];
    let last = *points.last().unwrap_or(&first);
    if domain.lo.is_finite() {
        pieces.push(Piece::Smooth { a: domain.lo, b: first });
    } else {
        pieces.push(Piece::Tail { a: first, dir: -1.0 });
    }
    for w in points.windows(2) {
        pieces.push(Piece::Linear { a: w[0], b: w[1] });
    }
    if domain.hi.is_finite() {
        pieces.push(Piece::Smooth { a: last, b: domain.hi });
    } else {
        pieces.push(Piece::Tail { a: last, dir: 1.0 });
    }

    let mut shift = points
        .iter()
        .map(|&x| h(x))
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::NonFinite { at: center });
    }
    // A second pass is needed only if the integrand peaks well above every
    // breakpoint value.
    for _ in 0..3 {
        let mut it = Integrator {
            h: &h,
            pieces: pieces.clone(),
            shift,
            max_seen: f64::NEG_INFINITY,
        };
        let (value, error) = it.run(opts)?;
        if it.max_seen - shift > 30.0 {
            shift = it.max_seen;
            continue;
        }
        if value.is_nan() || value <= 0.0 {
            return Err(Error::NonFinite { at: center });
        }
        if error > opts.rel_tol * value {
            return Err(Error::ToleranceNotMet {
                estimate: shift + value.ln(),
                error: error / value,
            });
        }
        return Ok(shift + value.ln());
    }
    Err(Error::NonFinite { at: center })
}

/// `ln ∫ p_n(y; θ) π(θ) dθ` by adaptive quadrature to relative tolerance
/// `1e−8`.
pub fn quadrature_log_mixture<L: LogLikelihood>(
    loglik: &L,
    weight_ln_pdf: impl Fn(f64) -> f64,
    domain: Support,
) -> Result<MixtureLogDensity> {
    let center = loglik.mle();
    let scale = loglik
        .scale_hint()
        .or_else(|| {
            let j = observed_information(loglik, center);
            (j.is_finite() && j > 0.0).then(|| j.sqrt().recip())
        })
        .filter(|s| s.is_finite() && *s > 0.0)
        .unwrap_or(if domain.is_bounded() {
            (domain.hi - domain.lo) / 100.0
        } else {
            1.0
        });
    let value = integrate_log(
        |x| loglik.ln_lik(x) + weight_ln_pdf(x),
        domain,
        center,
        scale,
        &QuadratureOptions::default(),
    )?;
    Ok(MixtureLogDensity {
        value,
        method: MixtureMethod::Quadrature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::FnLogLikelihood;
    use crate::special::{ln_beta, normal_ln_pdf, xlogy};
    use crate::weight::{BetaWeight, NormalWeight};

    #[test]
    fn normal_mixture_matches_closed_form() {
        let (n, ybar) = (100.0, 0.37);
        let v = 1.0 / n;
        let w = NormalWeight::new(0.5, 2.0).unwrap();
        let ll = FnLogLikelihood::new(move |t: f64| normal_ln_pdf(ybar, t, v), ybar).with_scale(v.sqrt());
        let q = quadrature_log_mixture(&ll, |t| w.ln_pdf(t), Support::REAL_LINE).unwrap();
        let exact = normal_ln_pdf(ybar, 0.5, 2.0 + v);
        assert!(((q.value - exact) / exact).abs() < 1e-8);
        assert_eq!(q.method, MixtureMethod::Quadrature);
    }

    #[test]
    fn bernoulli_mixture_matches_beta_binomial() {
        for (n, s, a, b) in [
            (10u32, 3u32, 0.5, 0.5),
            (200, 80, 1.0, 1.0),
            (50, 0, 0.5, 0.5),
            (40, 40, 5.0, 2.0),
        ] {
            let (nf, sf) = (n as f64, s as f64);
            let w = BetaWeight::new(a, b).unwrap();
            let ll = FnLogLikelihood::new(move |t: f64| xlogy(sf, t) + xlogy(nf - sf, 1.0 - t), sf / nf)
                .with_support(Support::UNIT)
                .with_scale(((sf + 0.5) * (nf - sf + 0.5)).sqrt() / nf.powf(1.5));
            let q = quadrature_log_mixture(&ll, |t| w.ln_pdf(t), Support::UNIT).unwrap();
            let exact = ln_beta(sf + a, nf - sf + b) - ln_beta(a, b);
            assert!(
                ((q.value - exact) / exact).abs() < 1e-8,
                "n={n} s={s}: {} vs {exact}",
                q.value
            );
        }
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = integrate_log(
            |x| if x > 0.5 { f64::NAN } else { -x * x },
            Support::REAL_LINE,
            0.0,
            1.0,
            &QuadratureOptions::default(),
        );
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }
}
