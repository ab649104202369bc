//! Event-driven advancement of coupled Glauber chains.
//!
//! All chains of an ensemble consume one merged stream of clock rings from
//! the shared [`RandomnessSource`]; each chain applies an event only if the
//! ring's vertex lies in its own domain. Heat-bath updates at finite beta,
//! majority-rule updates at beta = infinity. Updates within an ensemble are
//! order-dependent, so an ensemble advances single-threaded; distinct
//! ensembles share nothing mutable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::lattice::{neighbor_sum, BoundaryCondition, Domain, Spin, SpinConfig};
use crate::rng::{ClockCursor, ClockEvent, RandomnessSource};
use crate::{Error, Result};

/// Model parameters. `beta = f64::INFINITY` selects majority dynamics.
#[derive(Clone, Copy, Debug)]
pub struct ModelParams {
    pub beta: f64,
    /// External field; enters the heat-bath exponent as +2h.
    pub h: f64,
}

impl ModelParams {
    pub fn new(beta: f64) -> Self {
        assert!(beta >= 0.0, "beta must be nonnegative (may be infinite)");
        ModelParams { beta, h: 0.0 }
    }

    pub fn with_field(beta: f64, h: f64) -> Self {
        assert!(beta > 0.0 && h.is_finite());
        ModelParams { beta, h }
    }

    pub fn zero_temperature() -> Self {
        ModelParams {
            beta: f64::INFINITY,
            h: 0.0,
        }
    }
}

/// P(new spin = +1 | neighbor sum S) for the heat-bath rule: the
/// conditional Gibbs probability exp(bS+h)/(exp(bS+h)+exp(-bS-h)).
#[inline(always)]
pub fn plus_threshold(params: &ModelParams, s: i32) -> f64 {
    if params.beta.is_infinite() {
        return match s.cmp(&0) {
            Ordering::Greater => 1.0,
            Ordering::Equal => 0.5,
            Ordering::Less => 0.0,
        };
    }
    1.0 / (1.0 + (-2.0 * params.beta * s as f64 - 2.0 * params.h).exp())
}

/// Heat-bath resampling of site `v` given the update uniform `u`.
#[inline(always)]
pub fn heat_bath_update(
    domain: &Domain,
    cfg: &SpinConfig,
    bc: &BoundaryCondition,
    v: u32,
    u: f64,
    params: &ModelParams,
) -> Spin {
    let s = neighbor_sum(domain, cfg, bc, v);
    if u <= plus_threshold(params, s) {
        1
    } else {
        -1
    }
}

/// Zero-temperature rule: majority of the neighbors, fair coin on ties.
#[inline(always)]
pub fn majority_update(
    domain: &Domain,
    cfg: &SpinConfig,
    bc: &BoundaryCondition,
    v: u32,
    u: f64,
) -> Spin {
    let s = neighbor_sum(domain, cfg, bc, v);
    match s.cmp(&0) {
        Ordering::Greater => 1,
        Ordering::Less => -1,
        Ordering::Equal => {
            if u < 0.5 {
                1
            } else {
                -1
            }
        }
    }
}

/// One Glauber chain: a domain, frozen boundary, configuration, and clock.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub domain: Arc<Domain>,
    pub bc: BoundaryCondition,
    pub cfg: SpinConfig,
    pub now: f64,
    spin_sum: i64,
}

impl ChainState {
    pub fn new(domain: Arc<Domain>, bc: BoundaryCondition, cfg: SpinConfig) -> Self {
        assert_eq!(cfg.len(), domain.site_count());
        let spin_sum = cfg.spins().iter().map(|&s| s as i64).sum();
        ChainState {
            domain,
            bc,
            cfg,
            now: 0.0,
            spin_sum,
        }
    }

    pub fn magnetization(&self) -> f64 {
        self.spin_sum as f64 / self.cfg.len() as f64
    }

    pub fn spin_sum(&self) -> i64 {
        self.spin_sum
    }

    pub fn is_constant(&self, s: Spin) -> bool {
        self.spin_sum == s as i64 * self.cfg.len() as i64
    }
}

/// Exact symmetric-difference support of two chains on one domain.
pub fn disagreement_set(a: &ChainState, b: &ChainState) -> Result<Vec<(i64, i64)>> {
    if !Arc::ptr_eq(&a.domain, &b.domain) && a.domain.bounds() != b.domain.bounds() {
        return Err(Error::IncompatibleChains(
            "disagreement_set requires a common domain".into(),
        ));
    }
    Ok((0..a.cfg.len() as u32)
        .filter(|&i| a.cfg.get(i) != b.cfg.get(i))
        .map(|i| a.domain.site(i as usize))
        .collect())
}

#[derive(PartialEq)]
struct HeapEntry {
    time: f64,
    vertex: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap via reversal; ties broken by vertex id, which follows
        // the lexicographic order of the sorted vertex list
        other
            .time
            .total_cmp(&self.time)
            .then(other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Several chains advanced in lockstep over the merged clock stream of the
/// union of their domains.
pub struct CoupledEnsemble {
    pub chains: Vec<ChainState>,
    src: RandomnessSource,
    params: ModelParams,
    horizon: f64,
    vertices: Vec<(i64, i64)>,
    cursors: Vec<ClockCursor>,
    /// per merged vertex: (chain index, site index) pairs
    participants: Vec<Vec<(u32, u32)>>,
    heap: BinaryHeap<HeapEntry>,
}

impl CoupledEnsemble {
    pub fn new(chains: Vec<ChainState>, src: RandomnessSource, params: ModelParams) -> Self {
        Self::with_start(chains, src, params, 0.0)
    }

    /// Ensemble whose merged stream starts strictly after `t0` (chains'
    /// `now` must equal `t0`).
    pub fn with_start(
        chains: Vec<ChainState>,
        src: RandomnessSource,
        params: ModelParams,
        t0: f64,
    ) -> Self {
        assert!(chains.iter().all(|c| c.now == t0));
        let mut map: std::collections::BTreeMap<(i64, i64), Vec<(u32, u32)>> =
            std::collections::BTreeMap::new();
        for (ci, c) in chains.iter().enumerate() {
            for (si, &p) in c.domain.sites().iter().enumerate() {
                map.entry(p).or_default().push((ci as u32, si as u32));
            }
        }
        let mut vertices = Vec::with_capacity(map.len());
        let mut participants = Vec::with_capacity(map.len());
        let mut cursors = Vec::with_capacity(map.len());
        let mut heap = BinaryHeap::with_capacity(map.len());
        for (vid, (p, parts)) in map.into_iter().enumerate() {
            let cur = ClockCursor::start(&src, p, t0);
            heap.push(HeapEntry {
                time: cur.peek_time(),
                vertex: vid as u32,
            });
            vertices.push(p);
            participants.push(parts);
            cursors.push(cur);
        }
        CoupledEnsemble {
            chains,
            src,
            params,
            horizon: t0,
            vertices,
            cursors,
            participants,
            heap,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn source(&self) -> &RandomnessSource {
        &self.src
    }

    /// Merged global vertex set, lexicographically ordered; index matches
    /// the vertex id reported in [`ClockEvent`]s.
    pub fn vertices(&self) -> &[(i64, i64)] {
        &self.vertices
    }

    /// Process every merged clock event in `(horizon, until]`.
    pub fn evolve(&mut self, until: f64) {
        self.evolve_with(until, |_, _| {});
    }

    /// As [`evolve`](Self::evolve), invoking `observer` after each applied
    /// event with the post-update chain states.
    pub fn evolve_with(&mut self, until: f64, mut observer: impl FnMut(&[ChainState], ClockEvent)) {
        assert!(until >= self.horizon, "cannot evolve backwards");
        while let Some(top) = self.heap.peek() {
            if top.time > until {
                break;
            }
            let vid = self.heap.pop().unwrap().vertex as usize;
            let ev = self.cursors[vid].advance(&self.src);
            self.heap.push(HeapEntry {
                time: self.cursors[vid].peek_time(),
                vertex: vid as u32,
            });
            for &(ci, si) in &self.participants[vid] {
                let c = &mut self.chains[ci as usize];
                let new = if self.params.beta.is_infinite() {
                    majority_update(&c.domain, &c.cfg, &c.bc, si, ev.u)
                } else {
                    heat_bath_update(&c.domain, &c.cfg, &c.bc, si, ev.u, &self.params)
                };
                let old = c.cfg.get(si);
                if new != old {
                    c.cfg.set(si, new);
                    c.spin_sum += (new - old) as i64;
                }
                c.now = ev.time;
            }
            observer(&self.chains, ev);
        }
        for c in &mut self.chains {
            c.now = until;
        }
        self.horizon = until;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Rect;
    use crate::oracle;

    fn box_chain(n: i64, bc_spin: Spin, init: Spin) -> ChainState {
        let d = Arc::new(Domain::new_box((0, 0), n, n).unwrap());
        let bc = if bc_spin == 1 {
            BoundaryCondition::all_plus(&d)
        } else {
            BoundaryCondition::all_minus(&d)
        };
        let cfg = SpinConfig::constant(&d, init);
        ChainState::new(d, bc, cfg)
    }

    #[test]
    fn heat_bath_thresholds() {
        let d = Domain::new_box((0, 0), 3, 3).unwrap();
        let bc = BoundaryCondition::all_plus(&d);
        let p1 = ModelParams::new(1.0);

        // balanced site: threshold 1/2
        let chk = SpinConfig::from_fn(&d, |(x, _)| if x == 0 { 1 } else { -1 });
        let v = d.index_of((1, 1)).unwrap();
        // neighbors (0,1)=+1, (2,1)=-1, (1,0)=-1, (1,2)=-1 -> S=-2; build S=0 instead
        let mixed = SpinConfig::from_fn(&d, |(x, y)| if (x, y) == (0, 1) || (x, y) == (2, 1) { 1 } else { -1 });
        assert_eq!(neighbor_sum(&d, &mixed, &bc, v), 0);
        assert_eq!(heat_bath_update(&d, &mixed, &bc, v, 0.4999, &p1), 1);
        assert_eq!(heat_bath_update(&d, &mixed, &bc, v, 0.5001, &p1), -1);
        let _ = chk;

        // S=+4 at beta=1: threshold 1/(1+e^{-8})
        assert!((plus_threshold(&p1, 4) - 1.0 / (1.0 + (-8.0f64).exp())).abs() < 1e-15);
        // S=-2 at beta=0.5: threshold 1/(1+e^{2})
        let p05 = ModelParams::new(0.5);
        assert!((plus_threshold(&p05, -2) - 0.11920292202211755).abs() < 1e-12);
    }

    #[test]
    fn majority_rule() {
        let d = Domain::new_box((0, 0), 3, 3).unwrap();
        let bc = BoundaryCondition::all_minus(&d);
        let v = d.index_of((1, 1)).unwrap();
        let cfg = SpinConfig::from_fn(&d, |(x, y)| if (x, y) == (0, 1) { 1 } else { -1 });
        assert_eq!(neighbor_sum(&d, &cfg, &bc, v), -2);
        for u in [0.0, 0.3, 0.9] {
            assert_eq!(majority_update(&d, &cfg, &bc, v, u), -1);
        }
        let tie = SpinConfig::from_fn(&d, |(x, y)| if (x, y) == (0, 1) || (x, y) == (2, 1) { 1 } else { -1 });
        assert_eq!(majority_update(&d, &tie, &bc, v, 0.3), 1);
        assert_eq!(majority_update(&d, &tie, &bc, v, 0.7), -1);
    }

    #[test]
    fn beta_infinity_agrees_with_large_beta_heat_bath() {
        let d = Domain::new_box((0, 0), 3, 3).unwrap();
        let bc = BoundaryCondition::all_plus(&d);
        let big = ModelParams::new(20.0);
        let v = d.index_of((1, 1)).unwrap();
        for seed in 0..200u64 {
            let src = RandomnessSource::new(seed);
            let u = src.event_uniform((1, 1), 1);
            let cfg = SpinConfig::from_fn(&d, |(x, y)| if (x + y + seed as i64) % 2 == 0 { 1 } else { -1 });
            let s = neighbor_sum(&d, &cfg, &bc, v);
            if s != 0 {
                assert_eq!(
                    heat_bath_update(&d, &cfg, &bc, v, u, &big),
                    majority_update(&d, &cfg, &bc, v, u)
                );
            }
        }
        // threshold gap from {0,1} at most e^{-2 beta} for S != 0
        for beta in [2.0, 4.0, 8.0] {
            let p = ModelParams::new(beta);
            for s in [-4, -2, 2, 4] {
                let t = plus_threshold(&p, s);
                let gap = if s > 0 { 1.0 - t } else { t };
                assert!(gap <= (-2.0 * beta).exp(), "beta {} s {} gap {}", beta, s, gap);
            }
        }
    }

    #[test]
    fn evolve_empty_window_is_identity() {
        let src = RandomnessSource::new(1);
        let mut ens = CoupledEnsemble::new(vec![box_chain(4, 1, 1)], src, ModelParams::new(1.0));
        let before = ens.chains[0].cfg.clone();
        ens.evolve(0.0);
        assert_eq!(ens.chains[0].cfg, before);
    }

    #[test]
    fn identical_chains_stay_identical() {
        let src = RandomnessSource::new(42);
        let mut ens = CoupledEnsemble::new(
            vec![box_chain(6, 1, -1), box_chain(6, 1, -1)],
            src,
            ModelParams::new(1.0),
        );
        ens.evolve(20.0);
        assert_eq!(ens.chains[0].cfg, ens.chains[1].cfg);
    }

    #[test]
    fn replay_gives_identical_trajectory() {
        let run = |until: f64| {
            let src = RandomnessSource::new(7);
            let mut ens = CoupledEnsemble::new(vec![box_chain(5, 1, -1)], src, ModelParams::new(0.8));
            ens.evolve(until);
            ens.chains[0].cfg.clone()
        };
        assert_eq!(run(15.0), run(15.0));
        // two-stage evolution matches one-stage
        let src = RandomnessSource::new(7);
        let mut ens = CoupledEnsemble::new(vec![box_chain(5, 1, -1)], src, ModelParams::new(0.8));
        ens.evolve(7.0);
        ens.evolve(15.0);
        assert_eq!(ens.chains[0].cfg, run(15.0));
    }

    #[test]
    fn monotone_coupling_plus_minus_starts() {
        // chains from all-plus and all-minus init under plus bc stay ordered
        for seed in 0..20u64 {
            let src = RandomnessSource::new(seed);
            let mut ens = CoupledEnsemble::new(
                vec![box_chain(8, 1, -1), box_chain(8, 1, 1)],
                src,
                ModelParams::new(3.0),
            );
            let mut ok = true;
            ens.evolve_with(50.0, |chains, _| {
                ok &= chains[0].cfg.le(&chains[1].cfg);
            });
            assert!(ok, "order violated at seed {}", seed);
        }
    }

    #[test]
    fn low_temperature_coalescence_frequency() {
        // measured oracle experiment from the spec: at beta=3 with plus bc
        // the extremal chains coalesce by t=200 in >= 95% of seeds
        let mut coalesced = 0;
        for seed in 0..50u64 {
            let src = RandomnessSource::new(1000 + seed);
            let mut ens = CoupledEnsemble::new(
                vec![box_chain(8, 1, -1), box_chain(8, 1, 1)],
                src,
                ModelParams::new(3.0),
            );
            ens.evolve(200.0);
            assert!(ens.chains[0].cfg.le(&ens.chains[1].cfg));
            if ens.chains[0].cfg == ens.chains[1].cfg {
                coalesced += 1;
            }
        }
        assert!(coalesced >= 48, "only {}/50 coalesced", coalesced);
    }

    #[test]
    fn disagreement_sets() {
        let a = box_chain(4, 1, 1);
        let mut b = box_chain(4, 1, 1);
        assert!(disagreement_set(&a, &b).unwrap().is_empty());
        b.cfg.set(5, -1);
        let d = disagreement_set(&a, &b).unwrap();
        assert_eq!(d, vec![a.domain.site(5)]);
        let c = box_chain(4, 1, -1);
        assert_eq!(disagreement_set(&a, &c).unwrap().len(), 16);
        let other = box_chain(5, 1, 1);
        assert!(disagreement_set(&a, &other).is_err());
    }

    #[test]
    fn locality_single_update() {
        let d = Arc::new(Domain::new_box((0, 0), 4, 4).unwrap());
        let src = RandomnessSource::new(3);
        let mut ens = CoupledEnsemble::new(
            vec![ChainState::new(
                d.clone(),
                BoundaryCondition::all_plus(&d),
                SpinConfig::all_minus(&d),
            )],
            src,
            ModelParams::new(1.0),
        );
        let mut prev = ens.chains[0].cfg.clone();
        ens.evolve_with(5.0, |chains, ev| {
            let cur = &chains[0].cfg;
            let vi = chains[0].domain.index_of(ev.vertex).unwrap();
            for i in 0..cur.len() as u32 {
                if i != vi {
                    assert_eq!(cur.get(i), prev.get(i), "nonlocal change at event {:?}", ev);
                }
            }
            prev = cur.clone();
        });
    }

    #[test]
    fn stationarity_two_by_two_box() {
        // dynamics-visited states vs exact enumeration, modest sample size
        let d = Arc::new(Domain::new_box((0, 0), 2, 2).unwrap());
        let bc = BoundaryCondition::all_plus(&d);
        let params = ModelParams::new(1.0);
        let exact = oracle::enumerate_gibbs(&d, &bc, &params);

        let src = RandomnessSource::new(99);
        let mut ens = CoupledEnsemble::new(
            vec![ChainState::new(d.clone(), bc, SpinConfig::all_minus(&d))],
            src,
            params,
        );
        ens.evolve(1000.0); // burn-in
        let mut counts = [0u64; 16];
        let samples = 200_000;
        for k in 0..samples {
            ens.evolve(1000.0 + (k + 1) as f64);
            let cfg = &ens.chains[0].cfg;
            let mut idx = 0usize;
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
            .map(|(&c, &p)| (c as f64 / samples as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "tv {}", tv);
    }

    #[test]
    fn chains_on_different_domains_share_randomness() {
        // nested boxes: the small box sees exactly the same updates on its
        // own sites as the big box does, when boundary influence is absent
        let big = Arc::new(Domain::new_torus(8).unwrap());
        let small = Arc::new(Domain::new_box((2, 2), 3, 3).unwrap());
        let src = RandomnessSource::new(5);
        let params = ModelParams::new(1.0);
        let mut ens = CoupledEnsemble::new(
            vec![
                ChainState::new(big.clone(), BoundaryCondition::free(&big), SpinConfig::all_plus(&big)),
                ChainState::new(
                    small.clone(),
                    BoundaryCondition::all_plus(&small),
                    SpinConfig::all_plus(&small),
                ),
            ],
            src,
            params,
        );
        // both chains receive events for the shared vertices; merged stream
        // covers the union
        let shared = Rect::new(2, 2, 4, 4);
        let mut n_shared = 0;
        ens.evolve_with(3.0, |_, ev| {
            if shared.contains(ev.vertex) {
                n_shared += 1;
            }
        });
        assert!(n_shared > 0);
    }
}
