//! Tame interface polymer: i.i.d. integer increments with law proportional
//! to `exp(-2 beta |k| + beta H k)`, a difference of two geometrics. Exact
//! pmf by convolution, closed-form moments, LCLT bracket checks, and
//! slope-to-tilt inversion.

use crate::rng::{Purpose, RandomnessSource};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct PolymerParams {
    pub beta: f64,
    pub tilt: f64,
    /// e^{-beta(2-H)}, the up-step geometric ratio
    pub a: f64,
    /// e^{-beta(2+H)}, the down-step geometric ratio
    pub b: f64,
    /// increment normalizer 1 + a/(1-a) + b/(1-b)
    pub z: f64,
}

impl PolymerParams {
    pub fn new(beta: f64, tilt: f64) -> Result<Self> {
        assert!(beta > 0.0 && beta.is_finite());
        if tilt.abs() >= 2.0 {
            return Err(Error::DivergentTilt);
        }
        let a = (-beta * (2.0 - tilt)).exp();
        let b = (-beta * (2.0 + tilt)).exp();
        let z = 1.0 + a / (1.0 - a) + b / (1.0 - b);
        Ok(PolymerParams {
            beta,
            tilt,
            a,
            b,
            z,
        })
    }

    /// Smallest K with both geometric tails beyond K below 1e-14 of mass.
    pub fn truncation(&self) -> i64 {
        let cut = |r: f64| -> i64 {
            if r <= 0.0 {
                return 1;
            }
            // tail mass past K is r^{K+1}/((1-r) z)
            let k = ((1e-14 * (1.0 - r) * self.z).ln() / r.ln()).ceil() as i64;
            k.max(1)
        };
        cut(self.a).max(cut(self.b))
    }
}

/// `P(X = k) = e^{-2 beta |k| + beta H k} / z`.
pub fn increment_pmf(params: &PolymerParams, k: i64) -> f64 {
    let kf = k as f64;
    (-2.0 * params.beta * kf.abs() + params.beta * params.tilt * kf).exp() / params.z
}

/// Closed-form mean and variance of one increment.
pub fn moments(params: &PolymerParams) -> (f64, f64) {
    let (a, b) = (params.a, params.b);
    let m = a / (1.0 - a) - b / (1.0 - b);
    let d = a / ((1.0 - a) * (1.0 - a)) + b / ((1.0 - b) * (1.0 - b));
    (m, d)
}

/// Pmf on a contiguous integer support.
#[derive(Debug, Clone)]
pub struct WalkPmf {
    /// value of the first entry
    pub offset: i64,
    pub probs: Vec<f64>,
    /// number of probabilities flushed to zero for falling below 1e-300
    pub flushed: usize,
}

impl WalkPmf {
    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 || i as usize >= self.probs.len() {
            0.0
        } else {
            self.probs[i as usize]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.offset + i as i64) as f64 * p)
            .sum()
    }

    pub fn mode(&self) -> (i64, f64) {
        let (i, &p) = self
            .probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        (self.offset + i as i64, p)
    }

    fn convolve(&self, other: &WalkPmf) -> WalkPmf {
        let mut probs = vec![0.0; self.probs.len() + other.probs.len() - 1];
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, &q) in other.probs.iter().enumerate() {
                probs[i + j] += p * q;
            }
        }
        let mut flushed = self.flushed + other.flushed;
        for p in &mut probs {
            if *p != 0.0 && *p < 1e-300 {
                *p = 0.0;
                flushed += 1;
            }
        }
        WalkPmf {
            offset: self.offset + other.offset,
            probs,
            flushed,
        }
    }
}

/// Exact pmf of the N-step walk: truncated increment law convolved with
/// itself by binary doubling. Memory-guarded at 2^26 support points.
pub fn exact_walk_pmf(params: &PolymerParams, n: u64) -> Result<WalkPmf> {
    assert!(n >= 1);
    let k = params.truncation();
    if (n as i64 * k) as u64 > 1 << 25 {
        return Err(Error::CapacityExceeded(format!(
            "walk support {} points",
            n as i64 * 2 * k + 1
        )));
    }
    let base = WalkPmf {
        offset: -k,
        probs: (-k..=k).map(|j| increment_pmf(params, j)).collect(),
        flushed: 0,
    };
    let mut acc: Option<WalkPmf> = None;
    let mut sq = base;
    let mut rem = n;
    while rem > 0 {
        if rem & 1 == 1 {
            acc = Some(match acc {
                None => sq.clone(),
                Some(a) => a.convolve(&sq),
            });
        }
        rem >>= 1;
        if rem > 0 {
            sq = sq.convolve(&sq);
        }
    }
    Ok(acc.unwrap())
}

/// LCLT bracket report for the N-step walk.
#[derive(Debug, Clone, Copy)]
pub struct LcltReport {
    pub n: u64,
    pub mode: i64,
    pub mode_mass: f64,
    /// mass at the integer(s) nearest N M_H, the LCLT target point
    pub near_mean_mass: f64,
    pub lower: f64,
    pub upper: f64,
    pub log_concave: bool,
    pub holds: bool,
}

/// Checks the log-concave LCLT bracket
/// `e^{-1}/sqrt(1+12 N D) <= pmf near the mean` and
/// `max pmf <= 2/sqrt(1+4 N D)`, plus log-concavity of the pmf itself.
pub fn lclt_bounds_check(params: &PolymerParams, n: u64) -> Result<LcltReport> {
    let pmf = exact_walk_pmf(params, n)?;
    let (m, d) = moments(params);
    let nd = n as f64 * d;
    let lower = (-1.0f64).exp() / (1.0 + 12.0 * nd).sqrt();
    let upper = 2.0 / (1.0 + 4.0 * nd).sqrt();
    let (mode, mode_mass) = pmf.mode();
    let target = n as f64 * m;
    let near_mean_mass = pmf.get(target.floor() as i64).max(pmf.get(target.ceil() as i64));
    let mut log_concave = true;
    for w in pmf.probs.windows(3) {
        if w[0] > 0.0 && w[2] > 0.0 && w[1] * w[1] < w[0] * w[2] * (1.0 - 1e-12) {
            log_concave = false;
        }
    }
    Ok(LcltReport {
        n,
        mode,
        mode_mass,
        near_mean_mass,
        lower,
        upper,
        log_concave,
        holds: near_mean_mass >= lower && mode_mass <= upper && log_concave,
    })
}

/// Largest tilt the paper's regime admits at this beta.
pub fn max_tilt(beta: f64) -> f64 {
    2.0 - 1.0 / (10.0 * beta)
}

/// Inverts the strictly increasing map H -> M_H by bisection to 1e-10,
/// restricted to |H| <= 2 - 1/(10 beta).
pub fn solve_tilt_for_slope(beta: f64, slope: f64) -> Result<f64> {
    assert!(slope.is_finite());
    let hmax = max_tilt(beta);
    let m_at = |h: f64| moments(&PolymerParams::new(beta, h).unwrap()).0;
    if slope.abs() > m_at(hmax) {
        return Err(Error::OutOfRange(format!(
            "slope {} unreachable with |H| <= {}",
            slope, hmax
        )));
    }
    let (mut lo, mut hi) = (-hmax, hmax);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if m_at(mid) < slope {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One increment by inverse CDF over the truncated support.
pub fn sample_increment(params: &PolymerParams, u: f64) -> i64 {
    let k = params.truncation();
    let mut acc = 0.0;
    for j in -k..=k {
        acc += increment_pmf(params, j);
        if u < acc {
            return j;
        }
    }
    k
}

/// N-step walk endpoint driven by the keyed source: step i consumes the
/// uniform at vertex (i, 0), counter `counter`.
pub fn sample_walk(params: &PolymerParams, src: &RandomnessSource, n: u64, counter: u64) -> i64 {
    (0..n)
        .map(|i| {
            let u = src.uniform(Purpose::EventUniform, (i as i64, 0), counter);
            sample_increment(params, u)
        })
        .sum()
}
