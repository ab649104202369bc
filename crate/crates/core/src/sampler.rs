//! Initial-condition samplers: product Rad(p) overlays, exact Gibbs samples
//! via monotone coupling from the past, and the torus plus phase by sign
//! symmetrization.
//!
//! The sequential conditional construction of the time-zero monotone
//! coupling is intractable (it needs exact conditional marginals), so exact
//! stationary samples are drawn by monotone CFTP instead, driven by the
//! same keyed randomness. This preserves the two properties the rest of the
//! machinery relies on: exactness of the sample, and pointwise monotonicity
//! in the boundary condition / field for a fixed seed.
//!
//! CFTP epochs double backwards: epoch 0 covers past time `[-1, 0)`, epoch
//! e covers `[-2^e, -2^{e-1})`. Each epoch's randomness is keyed by
//! `(seed, epoch, vertex, counter)`, so extending further into the past
//! never changes values already consumed by shallower epochs.

use crate::engine::{heat_bath_update, ModelParams};
use crate::lattice::{BoundaryCondition, Domain, SpinConfig};
use crate::rng::{Purpose, RandomnessSource};
use crate::{Error, Result};

/// Product of Rademacher(p) spins: +1 where the vertex's time-zero uniform
/// `u_q` is at most `p`. Monotone in `p` for a fixed seed.
pub fn sample_rad(src: &RandomnessSource, domain: &Domain, p: f64) -> SpinConfig {
    assert!((0.0..=1.0).contains(&p));
    SpinConfig::from_fn(domain, |v| {
        if src.init_uniforms(v).1 <= p {
            1
        } else {
            -1
        }
    })
}

/// Streams the merged, time-ordered clock rings of one CFTP epoch without
/// materializing them. Times are relative to the epoch start; ties broken
/// by vertex order. Odd counters drive interarrivals, even counters the
/// update uniforms, so one keyed stream serves both.
struct EpochStream<'a> {
    src: &'a RandomnessSource,
    domain: &'a Domain,
    purpose: Purpose,
    len: f64,
    // min-heap of (next time, site index, next counter)
    heap: std::collections::BinaryHeap<std::cmp::Reverse<(ordered::F64, u32, u64)>>,
}

mod ordered {
    /// f64 with total order, for heap keys (no NaNs reach it).
    #[derive(Clone, Copy, PartialEq)]
    pub struct F64(pub f64);
    impl Eq for F64 {}
    impl PartialOrd for F64 {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for F64 {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }
}

impl<'a> EpochStream<'a> {
    fn new(src: &'a RandomnessSource, domain: &'a Domain, epoch: u32) -> Self {
        let len = if epoch == 0 { 1.0 } else { (1u64 << (epoch - 1)) as f64 };
        let purpose = Purpose::CftpEpoch(epoch);
        let mut heap = std::collections::BinaryHeap::with_capacity(domain.site_count());
        for (i, &v) in domain.sites().iter().enumerate() {
            let u_gap = src.uniform(purpose, v, 1);
            let t = -(1.0 - u_gap).ln();
            heap.push(std::cmp::Reverse((ordered::F64(t), i as u32, 1)));
        }
        EpochStream {
            src,
            domain,
            purpose,
            len,
            heap,
        }
    }
}

impl Iterator for EpochStream<'_> {
    /// (site index, update uniform)
    type Item = (u32, f64);

    fn next(&mut self) -> Option<(u32, f64)> {
        loop {
            let std::cmp::Reverse((t, site, c)) = self.heap.pop()?;
            if t.0 > self.len {
                // this vertex's stream is exhausted for the epoch; once the
                // minimum exceeds the epoch length, all are
                return None;
            }
            let v = self.domain.site(site as usize);
            let u = self.src.uniform(self.purpose, v, 2 * c);
            let gap = -(1.0 - self.src.uniform(self.purpose, v, 2 * c + 1)).ln();
            self.heap
                .push(std::cmp::Reverse((ordered::F64(t.0 + gap), site, c + 1)));
            return Some((site, u));
        }
    }
}

/// One CFTP attempt from `-2^start_epoch`: evolve the all-plus and
/// all-minus chains through the shared epoch randomness and report the
/// top chain's state at time 0 plus whether the pair coalesced.
fn cftp_attempt(
    src: &RandomnessSource,
    domain: &Domain,
    bc: &BoundaryCondition,
    params: &ModelParams,
    start_epoch: u32,
) -> (SpinConfig, bool) {
    let mut top = SpinConfig::all_plus(domain);
    let mut bottom = SpinConfig::all_minus(domain);
    let mut coalesced = false;
    for epoch in (0..=start_epoch).rev() {
        for (site, u) in EpochStream::new(src, domain, epoch) {
            let new_top = heat_bath_update(domain, &top, bc, site, u, params);
            top.set(site, new_top);
            if coalesced {
                continue;
            }
            let new_bottom = heat_bath_update(domain, &bottom, bc, site, u, params);
            bottom.set(site, new_bottom);
        }
        if !coalesced && top == bottom {
            coalesced = true;
        }
    }
    if !coalesced {
        coalesced = top == bottom;
    }
    (top, coalesced)
}

/// Exact sample from the Gibbs measure on `domain` with boundary `bc` by
/// monotone coupling from the past. Epochs double backwards until the
/// extremal chains coalesce; `epoch_doubling_limit` caps the lookback at
/// `2^limit` time units.
pub fn sample_stationary_cftp(
    src: &RandomnessSource,
    domain: &Domain,
    bc: &BoundaryCondition,
    params: &ModelParams,
    epoch_doubling_limit: u32,
) -> Result<SpinConfig> {
    for start in 0..=epoch_doubling_limit {
        let (state, coalesced) = cftp_attempt(src, domain, bc, params, start);
        if coalesced {
            return Ok(state);
        }
    }
    Err(Error::NonCoalesced {
        limit: epoch_doubling_limit,
    })
}

/// Sample from the torus Gibbs measure conditioned on nonnegative
/// magnetization: unconditioned CFTP, then a global spin flip when the sum
/// is negative, with rejection of exact ties (impossible for odd site
/// counts).
pub fn sample_torus_plus_phase(
    src: &RandomnessSource,
    n: i64,
    params: &ModelParams,
    epoch_doubling_limit: u32,
) -> Result<SpinConfig> {
    let domain = Domain::new_torus(n)?;
    let bc = BoundaryCondition::free(&domain);
    for attempt in 0..64u64 {
        let attempt_src = if attempt == 0 {
            *src
        } else {
            src.substream(0xF11A + attempt)
        };
        let cfg = sample_stationary_cftp(&attempt_src, &domain, &bc, params, epoch_doubling_limit)?;
        let sum: i64 = cfg.spins().iter().map(|&s| s as i64).sum();
        if sum > 0 {
            return Ok(cfg);
        }
        if sum < 0 {
            return Ok(SpinConfig::from_spins(
                cfg.spins().iter().map(|&s| -s).collect(),
            ));
        }
        // tie: reject and redraw
    }
    Err(Error::Setup("tie rejection failed to terminate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    #[test]
    fn rad_endpoints_and_monotonicity() {
        let d = Domain::new_box((0, 0), 10, 10).unwrap();
        let src = RandomnessSource::new(11);
        assert!(sample_rad(&src, &d, 1.0).spins().iter().all(|&s| s == 1));
        assert!(sample_rad(&src, &d, 0.0).spins().iter().all(|&s| s == -1));
        let lo = sample_rad(&src, &d, 0.3);
        let hi = sample_rad(&src, &d, 0.7);
        assert!(lo.le(&hi));
    }

    #[test]
    fn rad_density() {
        let d = Domain::new_box((0, 0), 100, 100).unwrap();
        let src = RandomnessSource::new(77);
        let cfg = sample_rad(&src, &d, 0.9);
        let frac = cfg.spins().iter().filter(|&&s| s == 1).count() as f64 / 1e4;
        assert!((frac - 0.9).abs() < 0.012, "plus fraction {}", frac);
    }

    #[test]
    fn cftp_single_site_marginal() {
        let d = Domain::new_box((0, 0), 1, 1).unwrap();
        let bc = BoundaryCondition::all_plus(&d);
        let params = ModelParams::new(1.0);
        let mut plus = 0u64;
        let n = 100_000u64;
        for seed in 0..n {
            let src = RandomnessSource::new(seed);
            let cfg = sample_stationary_cftp(&src, &d, &bc, &params, 20).unwrap();
            if cfg.get(0) == 1 {
                plus += 1;
            }
        }
        let p = plus as f64 / n as f64;
        assert!((p - 0.9996646498695336).abs() < 5e-4, "marginal {}", p);
    }

    #[test]
    fn cftp_two_by_two_matches_enumeration() {
        let d = Domain::new_box((0, 0), 2, 2).unwrap();
        let bc = BoundaryCondition::all_plus(&d);
        let params = ModelParams::new(1.0);
        let exact = oracle::enumerate_gibbs(&d, &bc, &params);
        let mut counts = [0u64; 16];
        let n = 100_000u64;
        for seed in 0..n {
            let src = RandomnessSource::new(31 * seed + 5);
            let cfg = sample_stationary_cftp(&src, &d, &bc, &params, 20).unwrap();
            let mut idx = 0;
            for i in 0..4 {
                if cfg.get(i) == 1 {
                    idx |= 1 << i;
                }
            }
            counts[idx] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&exact)
            .map(|(&c, &p)| (c as f64 / n as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "tv {}", tv);
    }

    #[test]
    fn cftp_monotone_in_boundary() {
        let d = Domain::new_box((0, 0), 4, 4).unwrap();
        let params = ModelParams::new(2.0);
        for seed in 0..30 {
            let src = RandomnessSource::new(seed);
            let hi = sample_stationary_cftp(&src, &d, &BoundaryCondition::all_plus(&d), &params, 24)
                .unwrap();
            let lo =
                sample_stationary_cftp(&src, &d, &BoundaryCondition::all_minus(&d), &params, 24)
                    .unwrap();
            assert!(lo.le(&hi), "seed {}", seed);
        }
    }

    #[test]
    fn cftp_output_independent_of_detection_epoch() {
        let d = Domain::new_box((0, 0), 3, 3).unwrap();
        let bc = BoundaryCondition::all_plus(&d);
        let params = ModelParams::new(1.0);
        for seed in 0..20 {
            let src = RandomnessSource::new(1000 + seed);
            // find the first coalescing epoch, then start deeper: output
            // must be identical
            let mut first = None;
            for start in 0..24 {
                let (state, ok) = cftp_attempt(&src, &d, &bc, &params, start);
                if ok {
                    first = Some((start, state));
                    break;
                }
            }
            let (start, state) = first.expect("no coalescence");
            let (deeper, ok) = cftp_attempt(&src, &d, &bc, &params, start + 3);
            assert!(ok);
            assert_eq!(state, deeper, "seed {}", seed);
            // and the public api reproduces it
            let api = sample_stationary_cftp(&src, &d, &bc, &params, 30).unwrap();
            assert_eq!(api, state);
        }
    }

    #[test]
    fn torus_plus_phase_support() {
        // mildly supercritical: the minus chain crosses the phase barrier
        // quickly, so coalescence stays within a shallow epoch
        let params = ModelParams::new(0.6);
        let mut mags = 0.0;
        for seed in 0..100 {
            let src = RandomnessSource::new(seed);
            let cfg = sample_torus_plus_phase(&src, 5, &params, 24).unwrap();
            let sum: i64 = cfg.spins().iter().map(|&s| s as i64).sum();
            assert!(sum > 0); // odd site count: ties impossible
            mags += sum as f64 / 25.0;
        }
        assert!(mags / 100.0 > 0.5);
    }

    #[test]
    fn torus_three_matches_conditioned_enumeration() {
        let d = Domain::new_torus(3).unwrap();
        let bc = BoundaryCondition::free(&d);
        let params = ModelParams::new(0.5);
        let exact = oracle::enumerate_gibbs_nonneg(&d, &bc, &params);
        let mut counts = vec![0u64; 512];
        let n = 30_000u64;
        for seed in 0..n {
            let src = RandomnessSource::new(seed * 7 + 3);
            let cfg = sample_torus_plus_phase(&src, 3, &params, 24).unwrap();
            let mut idx = 0usize;
            for i in 0..9 {
                if cfg.get(i) == 1 {
                    idx |= 1 << i;
                }
            }
            counts[idx] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&exact)
            .map(|(&c, &p)| (c as f64 / n as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.05, "tv {}", tv);
    }
}
