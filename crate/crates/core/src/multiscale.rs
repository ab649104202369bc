//! Multiscale spacetime diagnostics: scale schedules, block grids, the
//! propagating-chain detector, the bad-block covering algorithm, sandwich
//! and nested-stationarity event checkers, and the dominating field with
//! its per-block provenance.

use std::collections::HashMap;
use std::sync::Arc;

use crate::engine::{ChainState, CoupledEnsemble, ModelParams};
use crate::lattice::{enlarge, BoundaryCondition, Domain, Rect, SpinConfig};
use crate::rng::{ClockEvent, RandomnessSource};
use crate::sampler::{sample_rad, sample_stationary_cftp};
use crate::{Error, Result};

/// How the spatial scales grow.
///
/// Paper growth (`log l_k = (log l_{k-1})^M`) overflows any feasible
/// lattice by level 1, so it is exposed in log-domain arithmetic only;
/// simulations use the polynomial practical schedule `l_k = ceil(l_{k-1}^g)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleMode {
    Paper,
    Practical { gamma: f64 },
}

#[derive(Clone, Debug)]
pub struct ScaleSchedule {
    pub ell0: u64,
    pub m: f64,
    pub mode: ScheduleMode,
}

/// Per-level scale values. All levels carry natural-log representations;
/// only the practical mode fills the linear fields.
#[derive(Clone, Copy, Debug)]
pub struct LevelScales {
    pub k: u32,
    pub log_ell: f64,
    pub log_t: f64,
    /// log of T_k = sum_{i=1..k} t_i; -inf at k = 0
    pub log_cap_t: f64,
    pub log_q: f64,
    /// s_k = log l_{k+3}
    pub s: f64,
    pub ell: Option<u64>,
    pub t: Option<f64>,
    pub cap_t: Option<f64>,
    pub q: Option<f64>,
}

impl ScaleSchedule {
    pub fn new_paper(ell0: u64, m: f64) -> Result<Self> {
        if ell0 < 2 || !(m >= 2.0) {
            return Err(Error::Precondition(format!(
                "schedule needs ell0 >= 2 and M >= 2, got {} and {}",
                ell0, m
            )));
        }
        Ok(ScaleSchedule {
            ell0,
            m,
            mode: ScheduleMode::Paper,
        })
    }

    pub fn new_practical(ell0: u64, gamma: f64, m: f64) -> Result<Self> {
        if ell0 < 2 || !(m >= 2.0) || !(gamma > 1.0) {
            return Err(Error::Precondition(format!(
                "schedule needs ell0 >= 2, M >= 2, gamma > 1, got {}, {}, {}",
                ell0, m, gamma
            )));
        }
        Ok(ScaleSchedule {
            ell0,
            m,
            mode: ScheduleMode::Practical { gamma },
        })
    }

    /// Paper mode: log l_j for j = 0..=j_max, failing with the largest
    /// representable level if the iteration overflows f64 range.
    fn paper_logs(&self, j_max: u32) -> Result<Vec<f64>> {
        let mut logs = vec![self.ell0 as f64];
        for j in 1..=j_max {
            let next = logs[j as usize - 1].powf(self.m);
            if !next.is_finite() {
                return Err(Error::OutOfRange(format!(
                    "paper schedule overflows at level {}; largest representable level is {}",
                    j,
                    j - 1
                )));
            }
            logs.push(next);
        }
        Ok(logs)
    }

    /// Practical mode: integer l_j for j = 0..=j_max.
    fn practical_ells(&self, j_max: u32, gamma: f64) -> Result<Vec<u64>> {
        let mut ells = vec![self.ell0];
        for j in 1..=j_max {
            let next = (ells[j as usize - 1] as f64).powf(gamma).ceil();
            if !(next < (1u64 << 62) as f64) {
                return Err(Error::OutOfRange(format!(
                    "practical schedule overflows at level {}; largest representable level is {}",
                    j,
                    j - 1
                )));
            }
            ells.push(next as u64);
        }
        Ok(ells)
    }

    pub fn level(&self, k: u32) -> Result<LevelScales> {
        match self.mode {
            ScheduleMode::Paper => {
                let logs = self.paper_logs(k + 3)?;
                let log_t: Vec<f64> = logs.iter().map(|l| l - self.m.ln()).collect();
                // log-sum-exp over t_1..t_k, stabilized by the largest term
                let log_cap_t = if k == 0 {
                    f64::NEG_INFINITY
                } else {
                    let mx = log_t[1..=k as usize]
                        .iter()
                        .cloned()
                        .fold(f64::NEG_INFINITY, f64::max);
                    mx + log_t[1..=k as usize]
                        .iter()
                        .map(|l| (l - mx).exp())
                        .sum::<f64>()
                        .ln()
                };
                Ok(LevelScales {
                    k,
                    log_ell: logs[k as usize],
                    log_t: log_t[k as usize],
                    log_cap_t,
                    log_q: -logs[(k + 3) as usize],
                    s: logs[(k + 3) as usize],
                    ell: None,
                    t: None,
                    cap_t: None,
                    q: None,
                })
            }
            ScheduleMode::Practical { gamma } => {
                let ells = self.practical_ells(k + 3, gamma)?;
                let t: Vec<f64> = ells.iter().map(|&l| l as f64 / self.m).collect();
                let cap_t: f64 = t[1..=k as usize].iter().sum();
                let ell = ells[k as usize];
                let q = 1.0 / ells[(k + 3) as usize] as f64;
                Ok(LevelScales {
                    k,
                    log_ell: (ell as f64).ln(),
                    log_t: t[k as usize].ln(),
                    log_cap_t: if k == 0 { f64::NEG_INFINITY } else { cap_t.ln() },
                    log_q: q.ln(),
                    s: (ells[(k + 3) as usize] as f64).ln(),
                    ell: Some(ell),
                    t: Some(t[k as usize]),
                    cap_t: Some(cap_t),
                    q: Some(q),
                })
            }
        }
    }

    /// Integer side length at level `k` (practical mode only).
    pub fn ell(&self, k: u32) -> Result<u64> {
        self.level(k)?.ell.ok_or_else(|| {
            Error::Precondition("paper-mode schedules are log-domain only".into())
        })
    }
}

/// Paper-mode scale values at level `k` for a schedule with `log l_0 = ell0`.
pub fn schedule_values(ell0: u64, m: f64, k: u32) -> Result<LevelScales> {
    ScaleSchedule::new_paper(ell0, m)?.level(k)
}

/// Disjoint tiling of `ambient` by scale-`k` squares, anchored at the
/// ambient origin; the last row/column is clipped. The paper centers blocks
/// on `l_k Z^2`; anchoring at the origin is the same grid translated by
/// `l_k/2`.
#[derive(Clone, Debug)]
pub struct BlockGrid {
    pub level: u32,
    pub ell: i64,
    pub ambient: Rect,
    nx: i64,
    ny: i64,
}

impl BlockGrid {
    pub fn new(schedule: &ScaleSchedule, level: u32, ambient: Rect) -> Result<BlockGrid> {
        let ell = schedule.ell(level)? as i64;
        if ell > ambient.width() || ell > ambient.height() {
            return Err(Error::OutOfRange(format!(
                "level {} block side {} exceeds ambient {}x{}",
                level,
                ell,
                ambient.width(),
                ambient.height()
            )));
        }
        Ok(BlockGrid {
            level,
            ell,
            ambient,
            nx: (ambient.width() + ell - 1) / ell,
            ny: (ambient.height() + ell - 1) / ell,
        })
    }

    pub fn len(&self) -> usize {
        (self.nx * self.ny) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn block(&self, i: usize) -> Rect {
        let bx = i as i64 % self.nx;
        let by = i as i64 / self.nx;
        Rect::new(
            self.ambient.x0 + bx * self.ell,
            self.ambient.y0 + by * self.ell,
            (self.ambient.x0 + (bx + 1) * self.ell - 1).min(self.ambient.x1),
            (self.ambient.y0 + (by + 1) * self.ell - 1).min(self.ambient.y1),
        )
    }

    pub fn blocks(&self) -> impl Iterator<Item = Rect> + '_ {
        (0..self.len()).map(|i| self.block(i))
    }
}

/// Result of scanning for an (L,T)-propagating chain.
#[derive(Clone, Debug)]
pub struct ChainDetection {
    pub max_len: usize,
    /// event indices of one maximal chain, time-ordered
    pub witness: Option<Vec<usize>>,
    pub detected: bool,
}

/// Longest time-ordered sequence of clock rings on pairwise-adjacent
/// vertices of `region`, by dynamic programming over the time-sorted
/// events: the chain value of an event is one more than the best value
/// seen so far on any lattice neighbor.
pub fn detect_propagating_chain(
    events: &[ClockEvent],
    region: impl Fn((i64, i64)) -> bool,
    l: usize,
    t: f64,
) -> Result<ChainDetection> {
    for w in events.windows(2) {
        if w[0].time > w[1].time {
            return Err(Error::Precondition("events not sorted by time".into()));
        }
    }
    if events.iter().any(|e| e.time < 0.0 || e.time > t) {
        return Err(Error::Precondition("event time outside [0, T]".into()));
    }
    // per vertex: (best chain length ending here, index of that event)
    let mut best_at: HashMap<(i64, i64), (usize, usize)> = HashMap::new();
    let mut parent: Vec<Option<usize>> = vec![None; events.len()];
    let mut best = (0usize, usize::MAX);
    for (i, e) in events.iter().enumerate() {
        if !region(e.vertex) {
            continue;
        }
        let (x, y) = e.vertex;
        let mut val = 1usize;
        for nb in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
            if let Some(&(len, idx)) = best_at.get(&nb) {
                if len + 1 > val {
                    val = len + 1;
                    parent[i] = Some(idx);
                }
            }
        }
        let cur = best_at.entry(e.vertex).or_insert((0, usize::MAX));
        if val > cur.0 {
            *cur = (val, i);
        }
        if val > best.0 {
            best = (val, i);
        }
    }
    let witness = (best.0 > 0).then(|| {
        let mut path = Vec::with_capacity(best.0);
        let mut at = Some(best.1);
        while let Some(i) = at {
            path.push(i);
            at = parent[i];
        }
        path.reverse();
        path
    });
    Ok(ChainDetection {
        max_len: best.0,
        witness,
        detected: best.0 >= l,
    })
}

/// Cover a set of scale-(k-1) blocks by well-separated squares: starting
/// from the blocks themselves, repeatedly replace any two squares within
/// l-infinity distance `10 ell_prev` by the smallest square covering both.
pub fn cover_bad_blocks(d: &[Rect], ell_prev: i64, s_k: f64) -> Result<Vec<Rect>> {
    if d.len() as f64 > s_k {
        return Err(Error::CapacityExceeded(format!(
            "{} bad blocks exceed s_k = {:.3}",
            d.len(),
            s_k
        )));
    }
    let mut rs: Vec<Rect> = d.to_vec();
    'merge: loop {
        for i in 0..rs.len() {
            for j in i + 1..rs.len() {
                if rs[i].linf_distance(&rs[j]) < 10 * ell_prev {
                    let h = rs[i].hull(&rs[j]);
                    let side = h.width().max(h.height());
                    let sq = Rect::new(h.x0, h.y0, h.x0 + side - 1, h.y0 + side - 1);
                    rs.swap_remove(j);
                    rs[i] = sq;
                    continue 'merge;
                }
            }
        }
        return Ok(rs);
    }
}

/// Which clause of the sandwich event failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SandwichClause {
    /// the all-plus and all-minus chains on E_{+4}(R) did not coalesce
    Coalescence,
    /// the inside and outside stationary chains disagreed on the buffer
    /// E_{+2}(R) \ E_{+1}(R) at some event
    Buffer,
}

#[derive(Clone, Copy, Debug)]
pub struct SandwichOutcome {
    pub holds: bool,
    pub failed: Option<SandwichClause>,
}

/// Initial states for the four V-processes. `r_pi` and `out_pi` live at the
/// window start; `r_top`/`r_bottom` are the locally restarted pair.
pub struct SandwichInits {
    pub r_pi: SpinConfig,
    pub out_pi: SpinConfig,
    pub r_top: SpinConfig,
    pub r_bottom: SpinConfig,
}

fn chain_at(
    domain: Arc<Domain>,
    bc: BoundaryCondition,
    cfg: SpinConfig,
    t0: f64,
) -> ChainState {
    let mut c = ChainState::new(domain, bc, cfg);
    c.now = t0;
    c
}

fn buffer_agrees(
    chains: &[ChainState],
    buffer_outer: &Rect,
    buffer_inner: &Rect,
) -> bool {
    let d_in = &chains[0].domain;
    let d_out = &chains[1].domain;
    for p in buffer_outer.iter_sites() {
        if buffer_inner.contains(p) {
            continue;
        }
        if let (Some(i), Some(j)) = (d_in.index_of(p), d_out.index_of(p)) {
            if chains[0].cfg.get(i) != chains[1].cfg.get(j) {
                return false;
            }
        }
    }
    true
}

/// Evaluates Sandwich(B, R) over `window`: the all-plus and all-minus
/// chains on E_{+4}(R) must coalesce by the window end, while the
/// stationary chains inside E_{+4}(R) and outside R (minus boundary on R)
/// agree on the buffer E_{+2}(R) \ E_{+1}(R) at the window endpoints and
/// after every clock event in the buffer.
pub fn check_sandwich_with_inits(
    src: &RandomnessSource,
    params: &ModelParams,
    big: Rect,
    r: Rect,
    ell_prev: i64,
    window: (f64, f64),
    inits: SandwichInits,
) -> Result<SandwichOutcome> {
    let (er4, _) = enlarge(r, ell_prev, 4, None);
    let (er2, _) = enlarge(r, ell_prev, 2, None);
    let (er1, _) = enlarge(r, ell_prev, 1, None);
    let d_r = Arc::new(Domain::from_rect(er4)?);
    let d_out = Arc::new(Domain::new_annulus(
        (big.x0, big.y0),
        big.width(),
        big.height(),
        r,
    )?);
    let bc_plus = BoundaryCondition::all_plus(&d_r);
    let bc_out = BoundaryCondition::mixed_annulus(&d_out)?;
    for (cfg, d) in [(&inits.r_pi, &d_r), (&inits.r_top, &d_r), (&inits.r_bottom, &d_r)] {
        if cfg.len() != d.site_count() {
            return Err(Error::Setup("sandwich init on wrong domain".into()));
        }
    }
    if inits.out_pi.len() != d_out.site_count() {
        return Err(Error::Setup("sandwich init on wrong domain".into()));
    }
    let chains = vec![
        chain_at(d_r.clone(), bc_plus.clone(), inits.r_pi, window.0),
        chain_at(d_out, bc_out, inits.out_pi, window.0),
        chain_at(d_r.clone(), bc_plus.clone(), inits.r_top, window.0),
        chain_at(d_r, bc_plus, inits.r_bottom, window.0),
    ];
    let mut ens = CoupledEnsemble::with_start(chains, *src, *params, window.0);
    let mut buffer_ok = buffer_agrees(&ens.chains, &er2, &er1);
    ens.evolve_with(window.1, |chains, ev| {
        if buffer_ok && er2.contains(ev.vertex) && !er1.contains(ev.vertex) {
            buffer_ok = buffer_agrees(chains, &er2, &er1);
        }
    });
    if buffer_ok {
        buffer_ok = buffer_agrees(&ens.chains, &er2, &er1);
    }
    let coalesced = ens.chains[2].cfg == ens.chains[3].cfg;
    let failed = if !buffer_ok {
        Some(SandwichClause::Buffer)
    } else if !coalesced {
        Some(SandwichClause::Coalescence)
    } else {
        None
    };
    Ok(SandwichOutcome {
        holds: failed.is_none(),
        failed,
    })
}

/// As [`check_sandwich_with_inits`], drawing the stationary initial states
/// by coupling from the past (at the window start) and restarting the
/// local pair from all-plus and all-minus.
pub fn check_sandwich(
    src: &RandomnessSource,
    params: &ModelParams,
    big: Rect,
    r: Rect,
    ell_prev: i64,
    window: (f64, f64),
    cftp_limit: u32,
) -> Result<SandwichOutcome> {
    let (er4, _) = enlarge(r, ell_prev, 4, None);
    let d_r = Domain::from_rect(er4)?;
    let d_out = Domain::new_annulus((big.x0, big.y0), big.width(), big.height(), r)?;
    let bc_out = BoundaryCondition::mixed_annulus(&d_out)?;
    let stationary = |d: &Domain, bc: &BoundaryCondition| {
        sample_stationary_cftp(src, d, bc, params, cftp_limit).map_err(|e| match e {
            Error::NonCoalesced { limit } => Error::Setup(format!(
                "stationary sample unavailable: no coalescence within 2^{} time units",
                limit
            )),
            other => other,
        })
    };
    let inits = SandwichInits {
        r_pi: stationary(&d_r, &BoundaryCondition::all_plus(&d_r))?,
        out_pi: stationary(&d_out, &bc_out)?,
        r_top: SpinConfig::all_plus(&d_r),
        r_bottom: SpinConfig::all_minus(&d_r),
    };
    check_sandwich_with_inits(src, params, big, r, ell_prev, window, inits)
}

/// Why a block's dominating bit is 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailedClause {
    /// level 0: the overlay Q has a -1 inside the block
    MinusSeen,
    /// more than s_k disagreeing sub-blocks
    DisOverflow,
    /// a sub-block failed nested stationarity or its own InfProp
    BadNonempty,
    /// an (l_k/10, T_k)-propagating chain crossed E_{+4}(B)
    InfPropFail,
    /// a covering square failed its sandwich event
    LocCoupFail,
}

#[derive(Clone, Debug)]
pub struct BlockRecord {
    pub rect: Rect,
    pub bit: bool,
    pub failed: Option<FailedClause>,
    /// Prop-2.12-style verification: did the biased-start and stationary
    /// local chains agree on the block at T_k? Populated when the audit
    /// runs coupling checks.
    pub coupling_agrees: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct DominatingField {
    pub level: u32,
    pub blocks: Vec<BlockRecord>,
}

impl DominatingField {
    pub fn ones(&self) -> usize {
        self.blocks.iter().filter(|b| b.bit).count()
    }
}

pub struct AuditOptions {
    pub max_level: u32,
    pub cftp_limit: u32,
    /// run the U-process agreement verification on every block of levels >= 1
    pub check_coupling: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            max_level: 1,
            cftp_limit: 28,
            check_coupling: true,
        }
    }
}

/// Whether the overlay Q drawn from the shared time-zero randomness is -1
/// at `v` under plus-density `p`.
pub fn overlay_is_minus(src: &RandomnessSource, v: (i64, i64), p: f64) -> bool {
    src.init_uniforms(v).1 > p
}

fn stationary_or_setup(
    src: &RandomnessSource,
    d: &Domain,
    bc: &BoundaryCondition,
    params: &ModelParams,
    limit: u32,
) -> Result<SpinConfig> {
    sample_stationary_cftp(src, d, bc, params, limit).map_err(|e| match e {
        Error::NonCoalesced { limit } => Error::Setup(format!(
            "stationary sample unavailable: no coalescence within 2^{} time units",
            limit
        )),
        other => other,
    })
}

/// Shared per-run state so stationary samples on repeated domains are
/// drawn once.
struct AuditContext<'a> {
    src: &'a RandomnessSource,
    params: &'a ModelParams,
    p: f64,
    cftp_limit: u32,
    stationary_cache: HashMap<Rect, SpinConfig>,
}

impl AuditContext<'_> {
    fn stationary_box(&mut self, rect: Rect) -> Result<SpinConfig> {
        if let Some(cfg) = self.stationary_cache.get(&rect) {
            return Ok(cfg.clone());
        }
        let d = Domain::from_rect(rect)?;
        let bc = BoundaryCondition::all_plus(&d);
        let cfg = stationary_or_setup(self.src, &d, &bc, self.params, self.cftp_limit)?;
        self.stationary_cache.insert(rect, cfg.clone());
        Ok(cfg)
    }
}

/// All clock rings on `rect` within `(0, t]`, merged and time-sorted.
pub fn events_in(src: &RandomnessSource, rect: Rect, t: f64) -> Vec<ClockEvent> {
    let mut events = Vec::new();
    for v in rect.iter_sites() {
        events.extend(src.clock_events(v, 0.0, t));
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.vertex.cmp(&b.vertex)));
    events
}

/// StatEquiv_{k-1}(B') against one enclosing block B'': the two stationary
/// plus-boundary chains must agree on E_{+3}(B') at every event there over
/// `[0, horizon]` and at the endpoints.
fn stat_equiv_pair(
    ctx: &mut AuditContext,
    b_prime: Rect,
    ell_prev: i64,
    b_outer: Rect,
    ell_outer: i64,
    horizon: f64,
) -> Result<bool> {
    let (inner_dom_rect, _) = enlarge(b_prime, ell_prev, 4, None);
    let (outer_dom_rect, _) = enlarge(b_outer, ell_outer, 4, None);
    let (watch, _) = enlarge(b_prime, ell_prev, 3, None);
    let inner_init = ctx.stationary_box(inner_dom_rect)?;
    let outer_init = ctx.stationary_box(outer_dom_rect)?;
    let d_in = Arc::new(Domain::from_rect(inner_dom_rect)?);
    let d_out = Arc::new(Domain::from_rect(outer_dom_rect)?);
    let agree = |a: &ChainState, b: &ChainState| -> bool {
        watch.iter_sites().all(|p| {
            match (a.domain.index_of(p), b.domain.index_of(p)) {
                (Some(i), Some(j)) => a.cfg.get(i) == b.cfg.get(j),
                _ => true,
            }
        })
    };
    let chains = vec![
        ChainState::new(d_in.clone(), BoundaryCondition::all_plus(&d_in), inner_init),
        ChainState::new(d_out.clone(), BoundaryCondition::all_plus(&d_out), outer_init),
    ];
    let mut ens = CoupledEnsemble::new(chains, *ctx.src, *ctx.params);
    let mut ok = agree(&ens.chains[0], &ens.chains[1]);
    if horizon > 0.0 {
        ens.evolve_with(horizon, |chains, ev| {
            if ok && watch.contains(ev.vertex) {
                ok = agree(&chains[0], &chains[1]);
            }
        });
    }
    Ok(ok)
}

/// Prop-2.12 verification for one block: run the stationary chain and the
/// overlay-lowered chain on E_{+4}(B) to T_k and compare them on B.
fn coupling_agreement(
    ctx: &mut AuditContext,
    block: Rect,
    ell: i64,
    cap_t: f64,
) -> Result<bool> {
    let (dom_rect, _) = enlarge(block, ell, 4, None);
    let (e1, _) = enlarge(block, ell, 1, None);
    let d = Arc::new(Domain::from_rect(dom_rect)?);
    let bc = BoundaryCondition::all_plus(&d);
    let u0 = ctx.stationary_box(dom_rect)?;
    let q = sample_rad(ctx.src, &d, ctx.p);
    let lowered = u0.min_overlay(&d, &q, &e1)?;
    let chains = vec![
        ChainState::new(d.clone(), bc.clone(), u0),
        ChainState::new(d.clone(), bc, lowered),
    ];
    let mut ens = CoupledEnsemble::new(chains, *ctx.src, *ctx.params);
    ens.evolve(cap_t);
    Ok(block.iter_sites().all(|p| match d.index_of(p) {
        Some(i) => ens.chains[0].cfg.get(i) == ens.chains[1].cfg.get(i),
        None => true,
    }))
}

/// Builds the dominating fields for levels `0..=max_level` over `ambient`.
///
/// The block grids are anchored at the ambient origin; the U- and
/// V-processes live on enlarged boxes of the plane (the keyed randomness
/// is defined everywhere, so enlargements never clip).
pub fn compute_dominating_field(
    src: &RandomnessSource,
    schedule: &ScaleSchedule,
    ambient: Rect,
    params: &ModelParams,
    p: f64,
    opts: &AuditOptions,
) -> Result<Vec<DominatingField>> {
    let mut ctx = AuditContext {
        src,
        params,
        p,
        cftp_limit: opts.cftp_limit,
        stationary_cache: HashMap::new(),
    };
    let mut fields: Vec<DominatingField> = Vec::new();

    let grid0 = BlockGrid::new(schedule, 0, ambient)?;
    let mut blocks0 = Vec::with_capacity(grid0.len());
    for b in grid0.blocks() {
        let bit = b.iter_sites().any(|v| overlay_is_minus(src, v, p));
        blocks0.push(BlockRecord {
            rect: b,
            bit,
            failed: bit.then_some(FailedClause::MinusSeen),
            // at T_0 = 0 the two local chains agree on B exactly when no
            // overlay minus sits in B, which is the bit itself
            coupling_agrees: Some(!bit),
        });
    }
    fields.push(DominatingField {
        level: 0,
        blocks: blocks0,
    });

    for k in 1..=opts.max_level {
        let grid = BlockGrid::new(schedule, k, ambient)?;
        let lv = schedule.level(k)?;
        let lv_prev = schedule.level(k - 1)?;
        let ell = lv.ell.unwrap() as i64;
        let ell_prev = lv_prev.ell.unwrap() as i64;
        let cap_t = lv.cap_t.unwrap();
        let cap_t_prev = lv_prev.cap_t.unwrap_or(0.0);
        let prev_grid = BlockGrid::new(schedule, k - 1, ambient)?;
        let prev_field = &fields[(k - 1) as usize];
        let mut blocks = Vec::with_capacity(grid.len());
        for b in grid.blocks() {
            let (e2, _) = enlarge(b, ell, 2, None);
            let (e3, _) = enlarge(b, ell, 3, None);
            let (e4, _) = enlarge(b, ell, 4, None);

            let dis: Vec<Rect> = prev_grid
                .blocks()
                .enumerate()
                .filter(|(i, r)| e2.contains_rect(r) && prev_field.blocks[*i].bit)
                .map(|(_, r)| r)
                .collect();

            let mut failed = None;
            if dis.len() as f64 > lv.s {
                failed = Some(FailedClause::DisOverflow);
            }

            if failed.is_none() {
                // Bad set: sub-blocks of E_{+3}(B) failing their own
                // InfProp (vacuous when T_{k-1} = 0) or nested
                // stationarity against enclosing level-k blocks
                'bad: for sub in prev_grid.blocks().filter(|r| e3.contains_rect(r)) {
                    if cap_t_prev > 0.0 {
                        let (sub_e4, _) = enlarge(sub, ell_prev, 4, None);
                        let evs = events_in(src, sub_e4, cap_t_prev);
                        let l_prev = ((ell_prev / 10).max(1)) as usize;
                        let det = detect_propagating_chain(
                            &evs,
                            |v| sub_e4.contains(v),
                            l_prev,
                            cap_t_prev,
                        )?;
                        if det.detected {
                            failed = Some(FailedClause::BadNonempty);
                            break 'bad;
                        }
                    }
                    let (sub_e3, _) = enlarge(sub, ell_prev, 3, None);
                    for outer in grid.blocks() {
                        let (outer_e3, _) = enlarge(outer, ell, 3, None);
                        if !outer_e3.contains_rect(&sub_e3) {
                            continue;
                        }
                        if !stat_equiv_pair(&mut ctx, sub, ell_prev, outer, ell, cap_t_prev)? {
                            failed = Some(FailedClause::BadNonempty);
                            break 'bad;
                        }
                    }
                }
            }

            if failed.is_none() {
                let evs = events_in(src, e4, cap_t);
                let l = ((ell / 10).max(1)) as usize;
                let det = detect_propagating_chain(&evs, |v| e4.contains(v), l, cap_t)?;
                if det.detected {
                    failed = Some(FailedClause::InfPropFail);
                }
            }

            if failed.is_none() {
                match cover_bad_blocks(&dis, ell_prev, lv.s) {
                    Err(_) => failed = Some(FailedClause::DisOverflow),
                    Ok(cover) => {
                        for r in cover {
                            let out = check_sandwich(
                                src,
                                params,
                                e4,
                                r,
                                ell_prev,
                                (cap_t_prev, cap_t),
                                opts.cftp_limit,
                            )?;
                            if !out.holds {
                                failed = Some(FailedClause::LocCoupFail);
                                break;
                            }
                        }
                    }
                }
            }

            let coupling_agrees = if opts.check_coupling {
                Some(coupling_agreement(&mut ctx, b, ell, cap_t)?)
            } else {
                None
            };

            blocks.push(BlockRecord {
                rect: b,
                bit: failed.is_some(),
                failed,
                coupling_agrees,
            });
        }
        fields.push(DominatingField { level: k, blocks });
    }
    Ok(fields)
}
