//! Reproducible experiment drivers behind the CLI subcommands. Each driver
//! consumes an [`ExperimentConfig`], writes its artifacts through
//! [`OutputWriter`], and reports hard assertion violations separately from
//! setup errors.

use std::sync::Arc;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, LatticeKind};
use crate::engine::{ChainState, CoupledEnsemble, ModelParams};
use crate::interface::{axis_two_point_profile, extract_interface, fit_decay_rate, max_height_statistics};
use crate::lattice::{BoundaryCondition, Domain, Rect, SpinConfig};
use crate::multiscale::{
    compute_dominating_field, detect_propagating_chain, events_in, AuditOptions, FailedClause,
    ScaleSchedule,
};
use crate::oracle::spontaneous_magnetization;
use crate::output::OutputWriter;
use crate::polymer::{lclt_bounds_check, moments, sample_increment, PolymerParams};
use crate::rng::{Purpose, RandomnessSource};
use crate::sampler::{sample_rad, sample_torus_plus_phase};
use crate::stats::wilson_interval;
use crate::surface::{alpha_theta, angle_value, dual_beta, tau, SurfaceTensionParams};
use crate::{Error, Result, BETA_C};

/// One-sided coupling estimate of a total-variation distance: the
/// disagreement indicator across replicas with its Wilson 95% interval.
#[derive(Clone, Copy, Debug)]
pub struct TvEstimate {
    pub disagree: u64,
    pub trials: u64,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TvEstimate {
    pub fn from_counts(disagree: u64, trials: u64) -> TvEstimate {
        let (lo, hi) = wilson_interval(disagree, trials);
        TvEstimate {
            disagree,
            trials,
            p: disagree as f64 / trials as f64,
            lo,
            hi,
        }
    }
}

/// Outcome of a driver: informational summary lines plus any hard
/// assertion violations (violations map to CLI exit code 2).
#[derive(Debug, Default)]
pub struct RunReport {
    pub summary: Vec<String>,
    pub violations: Vec<String>,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn note(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    fn violation(&mut self, s: impl Into<String>) {
        self.violations.push(s.into());
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    match cfg.experiment {
        ExperimentKind::PhaseOrder => run_phase_order(cfg),
        ExperimentKind::CoupleBias => run_couple_bias(cfg),
        ExperimentKind::InfoProp => run_info_prop(cfg),
        ExperimentKind::SurfaceTension => run_surface_tension(cfg),
        ExperimentKind::PolymerLclt => run_polymer_lclt(cfg),
        ExperimentKind::InterfaceFluct => run_interface_fluct(cfg),
        ExperimentKind::TwoPoint => run_two_point(cfg),
        ExperimentKind::ZeroTemp => run_zero_temp(cfg),
        ExperimentKind::MultiscaleAudit => run_multiscale_audit(cfg),
    }
}

fn torus_side(cfg: &ExperimentConfig) -> Result<i64> {
    let lat = cfg.lattice_spec()?;
    if lat.kind != LatticeKind::Torus {
        return Err(Error::Setup(format!(
            "{} requires a torus lattice",
            cfg.experiment.name()
        )));
    }
    Ok(lat.n)
}

fn fmt(x: f64) -> String {
    format!("{:.6}", x)
}

/// Geometric time grid t0 * 2^j clipped and capped at t_final.
fn time_grid(t0: f64, t_final: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut t = t0;
    while t < t_final {
        grid.push(t);
        t *= 2.0;
    }
    grid.push(t_final);
    grid
}

pub fn run_phase_order(cfg: &ExperimentConfig) -> Result<RunReport> {
    let n = torus_side(cfg)?;
    let beta = cfg.params.beta;
    let p = cfg.params.p;
    let mut report = RunReport::default();
    if beta <= BETA_C {
        report.note(format!(
            "warning: beta {} <= beta_c {:.6}; no phase ordering expected (exploratory run)",
            beta, BETA_C
        ));
    }
    let params = ModelParams::with_field(beta, cfg.params.h);
    let grid = time_grid(cfg.run.t0.unwrap_or(0.5), cfg.run.t_final.unwrap_or(500.0));
    let domain = Arc::new(Domain::new_torus(n)?);
    let bc = BoundaryCondition::free(&domain);
    let src = RandomnessSource::new(cfg.seed);
    let mut w = OutputWriter::new(&cfg.out, cfg)?;

    let traces: Vec<Vec<(f64, f64, SpinConfig)>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let sub = src.substream(r as u64);
            let q = sample_rad(&sub, &domain, p);
            let chains = vec![ChainState::new(domain.clone(), bc.clone(), q)];
            let mut ens = CoupledEnsemble::new(chains, sub, params);
            let mut out = Vec::with_capacity(grid.len());
            for &t in &grid {
                ens.evolve(t);
                out.push((t, ens.chains[0].magnetization(), ens.chains[0].cfg.clone()));
            }
            out
        })
        .collect();

    let mut rows = Vec::new();
    for (r, trace) in traces.iter().enumerate() {
        for (t, m, _) in trace {
            rows.push(vec![r.to_string(), fmt(*t), fmt(*m)]);
        }
    }
    w.write_csv("magnetization.csv", &["replica", "t", "m"], &rows)?;
    for (j, (t, _, cfgt)) in traces[0].iter().enumerate() {
        let _ = t;
        w.write_pgm(&format!("snap_{:02}.pgm", j), &domain, cfgt)?;
    }

    let m_star = if beta > BETA_C {
        spontaneous_magnetization(beta)
    } else {
        0.0
    };
    let finals: Vec<f64> = traces.iter().map(|t| t.last().unwrap().1).collect();
    let hits = finals.iter().filter(|&&m| (m - m_star).abs() <= 0.02).count();
    report.note(format!(
        "final magnetization within 0.02 of m* = {:.5} in {}/{} replicas",
        m_star,
        hits,
        traces.len()
    ));
    w.write_csv(
        "final.csv",
        &["replica", "m_final", "m_star"],
        &finals
            .iter()
            .enumerate()
            .map(|(r, m)| vec![r.to_string(), fmt(*m), fmt(m_star)])
            .collect::<Vec<_>>(),
    )?;
    w.finish()?;
    Ok(report)
}

/// Stationary plus-phase initialization: exact CFTP on small tori, audited
/// burn-in from all-plus elsewhere (phase-barrier coalescence times rule
/// CFTP out beyond toy sizes).
fn plus_phase_init(
    src: &RandomnessSource,
    domain: &Arc<Domain>,
    n: i64,
    params: &ModelParams,
) -> Result<(SpinConfig, String)> {
    if n <= 8 && params.beta < 0.7 {
        let cfgv = sample_torus_plus_phase(src, n, params, 24)?;
        return Ok((cfgv, "cftp".into()));
    }
    let bc = BoundaryCondition::free(domain);
    let t_burn = (2 * n) as f64 + 200.0;
    let chains = vec![ChainState::new(
        domain.clone(),
        bc,
        SpinConfig::all_plus(domain),
    )];
    let mut ens = CoupledEnsemble::new(chains, *src, *params);
    ens.evolve(t_burn);
    let m = ens.chains[0].magnetization();
    let m_star = spontaneous_magnetization(params.beta);
    Ok((
        ens.chains[0].cfg.clone(),
        format!(
            "burn-in t={} from all-plus, m = {:.5} vs m* = {:.5}",
            t_burn, m, m_star
        ),
    ))
}

pub fn run_couple_bias(cfg: &ExperimentConfig) -> Result<RunReport> {
    let n = torus_side(cfg)?;
    let beta = cfg.params.beta;
    let p = cfg.params.p;
    let params = ModelParams::with_field(beta, cfg.params.h);
    let domain = Arc::new(Domain::new_torus(n)?);
    let bc = BoundaryCondition::free(&domain);
    let grid = time_grid(cfg.run.t0.unwrap_or(0.5), cfg.run.t_final.unwrap_or(200.0));
    let src = RandomnessSource::new(cfg.seed);
    let mut report = RunReport::default();
    let mut w = OutputWriter::new(&cfg.out, cfg)?;

    // observation window: center block, at most 32x32
    let side = n.min(32);
    let c0 = (n - side) / 2;
    let center = Rect::new(c0, c0, c0 + side - 1, c0 + side - 1);

    struct Replica {
        audit: String,
        sandwich_violations: u64,
        // per grid time: (any disagreement on center, site fraction on torus)
        dis: Vec<(bool, f64)>,
    }

    let replicas: Vec<Result<Replica>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let sub = src.substream(r as u64);
            let (pi, audit) = plus_phase_init(&sub.substream(0xB), &domain, n, &params)?;
            let full = domain.bounds();
            let q = sample_rad(&sub, &domain, p);
            let pi_and_q = pi.min_overlay(&domain, &q, &full)?;
            let chains = vec![
                ChainState::new(domain.clone(), bc.clone(), pi_and_q), // X^{pi^Q}
                ChainState::new(domain.clone(), bc.clone(), q),        // X^Q
                ChainState::new(domain.clone(), bc.clone(), SpinConfig::all_plus(&domain)),
                ChainState::new(domain.clone(), bc.clone(), pi), // X^pi
            ];
            let mut ens = CoupledEnsemble::new(chains, sub.substream(0xA), params);
            let mut sandwich_violations = 0u64;
            let mut dis = Vec::with_capacity(grid.len());
            for &t in &grid {
                ens.evolve_with(t, |chains, ev| {
                    let i = chains[0].domain.index_of(ev.vertex).unwrap();
                    let (a, b, c) = (
                        chains[0].cfg.get(i),
                        chains[1].cfg.get(i),
                        chains[2].cfg.get(i),
                    );
                    if a > b || b > c {
                        sandwich_violations += 1;
                    }
                });
                let mut center_dis = false;
                let mut count = 0u64;
                for i in 0..ens.chains[0].cfg.len() as u32 {
                    if ens.chains[0].cfg.get(i) != ens.chains[3].cfg.get(i) {
                        count += 1;
                        if center.contains(domain.site(i as usize)) {
                            center_dis = true;
                        }
                    }
                }
                dis.push((center_dis, count as f64 / domain.site_count() as f64));
            }
            Ok(Replica {
                audit,
                sandwich_violations,
                dis,
            })
        })
        .collect();
    let replicas: Vec<Replica> = replicas.into_iter().collect::<Result<_>>()?;

    let total_sandwich: u64 = replicas.iter().map(|r| r.sandwich_violations).sum();
    if total_sandwich > 0 {
        report.violation(format!(
            "sandwich ordering pi^Q <= Q <= + violated {} times",
            total_sandwich
        ));
    } else {
        report.note("sandwich ordering held at every event");
    }
    report.note(format!("stationary init: {}", replicas[0].audit));

    let mut rows = Vec::new();
    for (j, &t) in grid.iter().enumerate() {
        let disagree = replicas.iter().filter(|r| r.dis[j].0).count() as u64;
        let est = TvEstimate::from_counts(disagree, replicas.len() as u64);
        let mean_frac: f64 =
            replicas.iter().map(|r| r.dis[j].1).sum::<f64>() / replicas.len() as f64;
        rows.push(vec![
            fmt(t),
            est.disagree.to_string(),
            est.trials.to_string(),
            fmt(est.p),
            fmt(est.lo),
            fmt(est.hi),
            fmt(mean_frac),
        ]);
    }
    w.write_csv(
        "tv.csv",
        &[
            "t",
            "center_disagree",
            "trials",
            "p_hat",
            "wilson_lo",
            "wilson_hi",
            "site_fraction",
        ],
        &rows,
    )?;
    let last = grid.len() - 1;
    let final_frac: f64 =
        replicas.iter().map(|r| r.dis[last].1).sum::<f64>() / replicas.len() as f64;
    report.note(format!(
        "final-time site disagreement fraction {:.5}, center-block disagreement {}/{}",
        final_frac,
        replicas.iter().filter(|r| r.dis[last].0).count(),
        replicas.len()
    ));
    w.finish()?;
    Ok(report)
}

pub fn run_info_prop(cfg: &ExperimentConfig) -> Result<RunReport> {
    let lat = cfg.lattice_spec()?;
    let n = lat.n;
    let region = Rect::new(0, 0, n - 1, n - 1);
    let t = cfg.run.t_final.unwrap_or(1.0);
    let l = ((n / 10).max(2)) as usize;
    let src = RandomnessSource::new(cfg.seed);
    let mut w = OutputWriter::new(&cfg.out, cfg)?;
    let mut report = RunReport::default();

    let results: Vec<Result<(usize, bool)>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let sub = src.substream(r as u64);
            let evs = events_in(&sub, region, t);
            let det = detect_propagating_chain(&evs, |v| region.contains(v), l, t)?;
            Ok((det.max_len, det.detected))
        })
        .collect();
    let results: Vec<(usize, bool)> = results.into_iter().collect::<Result<_>>()?;

    let rows: Vec<Vec<String>> = results
        .iter()
        .enumerate()
        .map(|(r, (m, d))| vec![r.to_string(), m.to_string(), (*d as u8).to_string()])
        .collect();
    w.write_csv("chains.csv", &["replica", "max_len", "detected"], &rows)?;
    let det = results.iter().filter(|(_, d)| *d).count() as u64;
    let est = TvEstimate::from_counts(det, results.len() as u64);
    report.note(format!(
        "({}, {:.3})-chain detected in {}/{} replicas (Wilson [{:.4}, {:.4}])",
        l, t, est.disagree, est.trials, est.lo, est.hi
    ));
    w.finish()?;
    Ok(report)
}

pub fn run_surface_tension(cfg: &ExperimentConfig) -> Result<RunReport> {
    let beta = cfg.params.beta;
    let p = SurfaceTensionParams::new(beta)?;
    let mut w = OutputWriter::new(&cfg.out, cfg)?;
    let mut report = RunReport::default();
    let mut rows = Vec::new();
    let grid = 181;
    for i in 0..grid {
        let theta = -std::f64::consts::FRAC_PI_4
            + std::f64::consts::FRAC_PI_2 * i as f64 / (grid - 1) as f64;
        let v = angle_value(&p, theta);
        if (v.stiffness - (v.tau + v.tau_second)).abs() > 1e-9 * v.stiffness.abs() {
            report.violation(format!(
                "stiffness identity broken at theta = {:.4}",
                theta
            ));
        }
        rows.push(vec![
            fmt(theta),
            fmt(v.alpha_theta),
            fmt(v.tau),
            fmt(v.tau_second),
            fmt(v.stiffness),
        ]);
    }
    w.write_csv(
        "surface_tension.csv",
        &["theta", "alpha", "tau", "tau_second", "stiffness"],
        &rows,
    )?;
    report.note(format!(
        "beta = {}: tau(0) = {:.6}, alpha_0 = {:.6}, dual beta = {:.6}",
        beta,
        tau(&p, 0.0),
        alpha_theta(&p, 0.0),
        dual_beta(beta)
    ));
    w.finish()?;
    Ok(report)
}

pub fn run_polymer_lclt(cfg: &ExperimentConfig) -> Result<RunReport> {
    let params = PolymerParams::new(cfg.params.beta, cfg.params.h)?;
    let mut w = OutputWriter::new(&cfg.out, cfg)?;
    let mut report = RunReport::default();
    let (m, d) = moments(&params);
    report.note(format!(
        "beta = {}, H = {}: M = {:.6}, D = {:.6}",
        cfg.params.beta, cfg.params.h, m, d
    ));
    let mut rows = Vec::new();
    for n in [1u64, 10, 100, 1000] {
        let rep = lclt_bounds_check(&params, n)?;
        if !rep.holds {
            report.violation(format!("LCLT bracket fails at N = {}", n));
        }
        rows.push(vec![
            n.to_string(),
            rep.mode.to_string(),
            format!("{:.9}", rep.mode_mass),
            format!("{:.9}", rep.near_mean_mass),
            format!("{:.9}", rep.lower),
            format!("{:.9}", rep.upper),
            (rep.log_concave as u8).to_string(),
            (rep.holds as u8).to_string(),
        ]);
    }
    w.write_csv(
        "lclt.csv",
        &[
            "n",
            "mode",
            "mode_mass",
            "near_mean_mass",
            "lower",
            "upper",
            "log_concave",
            "holds",
        ],
        &rows,
    )?;
    w.finish()?;
    Ok(report)
}

pub fn run_interface_fluct(cfg: &ExperimentConfig) -> Result<RunReport> {
    let beta = cfg.params.beta;
    if beta <= BETA_C {
        return Err(Error::Setup(format!(
            "interface fluctuations need beta > beta_c, got {}",
            beta
        )));
    }
    let widths = cfg.run.widths.clone().unwrap_or_else(|| vec![64, 128]);
    let samples = cfg.run.samples.unwrap_or(120);
    let params = ModelParams::new(beta);
    let src = RandomnessSource::new(cfg.seed);
    let mut w = OutputWriter::new(&cfg.out, cfg)?;
    let mut report = RunReport::default();
    let mut medians = Vec::new();
    for (wi, &ell) in widths.iter().enumerate() {
        let scale = (-beta).exp() * ((ell as f64) * (ell as f64).ln()).sqrt();
        let hh = ((1.6 * scale).ceil() as i64 + 4).max(6);
        let burn = cfg.run.burn.unwrap_or(4.0 * ell as f64);
        let sub = src.substream(wi as u64);
        let ens = sample_interface_ensemble_burn(&sub, ell, hh, &params, samples, burn)?;
        let mut heights = Vec::with_capacity(ens.configs.len());
        for c in &ens.configs {
            heights.push(extract_interface(&ens.domain, c, &ens.bc)?.max_height());
        }
        let tail = max_height_statistics(&heights)?;
        let rows: Vec<Vec<String>> = tail
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.h.to_string(),
                    r.count.to_string(),
                    fmt(r.p),
                    fmt(r.lo),
                    fmt(r.hi),
                ]
            })
            .collect();
        w.write_csv(
            &format!("tail_l{}.csv", ell),
            &["h", "count", "p", "wilson_lo", "wilson_hi"],
            &rows,
        )?;
        report.note(format!(
            "l = {}: median max height {:.2}, reference scale e^-beta sqrt(l ln l) = {:.3}",
            ell, tail.median, scale
        ));
        medians.push((ell, tail.median, scale));
    }
    w.write_csv(
        "medians.csv",
        &["l", "median_max_height", "scale"],
        &medians
            .iter()
            .map(|(l, m, s)| vec![l.to_string(), fmt(*m), fmt(*s)])
            .collect::<Vec<_>>(),
    )?;
    w.finish()?;
    Ok(report)
}

/// Interface ensemble as independent replicas: each configuration comes
/// from its own substream, initialized from a tame-polymer bridge (iid
/// difference-of-geometrics increments, linearly recentered to pin both
/// endpoints at the baseline) and then burned for `burn` time units.
///
/// The bridge already carries the equilibrium global interface shape, so
/// the burn only has to thermalize the bulk phases and the local contour
/// roughness, which relax on an O(width) scale rather than the O(width^2)
/// scale a flat or extremal start would need. A single long trajectory is
/// not an option at desk scale: the max-height autocorrelation time grows
/// like width^2, so time-series samples at any affordable gap collapse to
/// a handful of effective samples and their median is pure noise.
fn sample_interface_ensemble_burn(
    src: &RandomnessSource,
    width: i64,
    half_height: i64,
    params: &ModelParams,
    n: usize,
    burn: f64,
) -> Result<crate::interface::InterfaceEnsemble> {
    let d = Arc::new(Domain::new_strip(
        (0, 1 - half_height),
        width,
        2 * half_height,
    )?);
    let bc = BoundaryCondition::dobrushin(&d);
    let poly = PolymerParams::new(params.beta, 0.0)?;
    let mut configs = Vec::with_capacity(n);
    for r in 0..n {
        let sub = src.substream(r as u64);
        let bridge_src = sub.substream(0x11f);
        let mut s = Vec::with_capacity(width as usize + 1);
        s.push(0i64);
        for i in 0..width {
            let u = bridge_src.uniform(Purpose::EventUniform, (i, 0), 0);
            s.push(s[i as usize] + sample_increment(&poly, u));
        }
        let drift = s[width as usize];
        let cap = half_height - 2;
        let h: Vec<i64> = (0..width)
            .map(|x| {
                let b = s[x as usize]
                    - ((x as f64) * (drift as f64) / (width as f64)).round() as i64;
                b.clamp(-cap, cap)
            })
            .collect();
        let init = SpinConfig::from_fn(&d, |(x, y)| {
            if y >= 1 + h[x as usize] {
                1
            } else {
                -1
            }
        });
        let chains = vec![ChainState::new(d.clone(), bc.clone(), init)];
        let mut ens = CoupledEnsemble::new(chains, sub, *params);
        ens.evolve(burn);
        configs.push(ens.chains[0].cfg.clone());
    }
    Ok(crate::interface::InterfaceEnsemble {
        domain: d,
        bc,
        configs,
        coalesce_time: burn,
    })
}

pub fn run_two_point(cfg: &ExperimentConfig) -> Result<RunReport> {
    let lat = cfg.lattice_spec()?;
    let beta_star = match cfg.params.beta_prime {
        Some(b) => b,
        None if cfg.params.beta > BETA_C => dual_beta(cfg.params.beta),
        None => {
            return Err(Error::Setup(
                "two-point needs beta-prime, or a supercritical beta to dualize".into(),
            ))
        }
    };
    let height = lat.height.unwrap_or(lat.n / 2 + 1);
    let domain = Arc::new(Domain::new_strip((0, 0), lat.n, height)?);
    let distances = cfg
        .run
        .distances
        .clone()
        .unwrap_or_else(|| vec![6, 8, 10, 12, 14, 16]);
    let samples = cfg.run.samples.unwrap_or(20_000);
    let src = RandomnessSource::new(cfg.seed);
    let mut w = OutputWriter::new(&cfg.out, cfg)?;
    let mut report = RunReport::default();
    let prof = axis_two_point_profile(&src, beta_star, &domain, &distances, samples)?;
    let rows: Vec<Vec<String>> = prof
        .iter()
        .map(|(r, e)| vec![r.to_string(), fmt(e.mean), fmt(e.half_width)])
        .collect();
    w.write_csv("two_point.csv", &["r", "estimate", "ci_half_width"], &rows)?;
    let rate = fit_decay_rate(&prof)?;
    report.note(format!(
        "beta* = {:.6}: fitted OZ-corrected decay rate {:.5}",
        beta_star, rate
    ));
    if cfg.params.beta > BETA_C {
        let target = tau(&SurfaceTensionParams::new(cfg.params.beta)?, 0.0);
        report.note(format!(
            "dual consistency: tau_beta(0) = {:.5}, relative gap {:.3}",
            target,
            (rate - target).abs() / target
        ));
    }
    w.finish()?;
    Ok(report)
}

pub fn run_zero_temp(cfg: &ExperimentConfig) -> Result<RunReport> {
    let n = torus_side(cfg)?;
    let p = cfg.params.p;
    let params = ModelParams::zero_temperature();
    let domain = Arc::new(Domain::new_torus(n)?);
    let bc = BoundaryCondition::free(&domain);
    // horizon: 20 n^2 (log n)^2 total events = 20 (log n)^2 time units
    let horizon = 20.0 * (n as f64).ln().powi(2);
    let src = RandomnessSource::new(cfg.seed);
    let mut w = OutputWriter::new(&cfg.out, cfg)?;
    let mut report = RunReport::default();

    let results: Vec<(bool, f64)> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let sub = src.substream(r as u64);
            let q = sample_rad(&sub, &domain, p);
            let chains = vec![ChainState::new(domain.clone(), bc.clone(), q)];
            if chains[0].is_constant(1) {
                return (true, 0.0);
            }
            let mut ens = CoupledEnsemble::new(chains, sub, params);
            let step = (horizon / 64.0).max(1.0);
            let mut t = 0.0;
            loop {
                t = (t + step).min(horizon);
                ens.evolve(t);
                if ens.chains[0].is_constant(1) {
                    // bisect the step for a tighter absorption time bound
                    return (true, t);
                }
                if ens.chains[0].is_constant(-1) || t >= horizon {
                    return (false, t);
                }
            }
        })
        .collect();

    let rows: Vec<Vec<String>> = results
        .iter()
        .enumerate()
        .map(|(r, (a, t))| vec![r.to_string(), (*a as u8).to_string(), fmt(*t)])
        .collect();
    w.write_csv("absorption.csv", &["replica", "absorbed", "t"], &rows)?;
    let absorbed = results.iter().filter(|(a, _)| *a).count();
    report.note(format!(
        "{}/{} replicas absorbed to all-plus within horizon {:.1} (events budget 20 n^2 (ln n)^2)",
        absorbed,
        results.len(),
        horizon
    ));
    w.finish()?;
    Ok(report)
}

pub fn run_multiscale_audit(cfg: &ExperimentConfig) -> Result<RunReport> {
    let n = torus_side(cfg)?;
    let sch = cfg.schedule_spec()?;
    if sch.mode == "paper" {
        return Err(Error::Setup(
            "paper-mode schedules grow as exp(l0^(M^k)) and exceed any feasible lattice; \
             simulation requires mode = \"practical\""
                .into(),
        ));
    }
    let gamma = sch
        .gamma
        .ok_or_else(|| Error::Config("practical schedule needs gamma".into()))?;
    let schedule = ScaleSchedule::new_practical(sch.ell0, gamma, sch.m)?;
    let ambient = Rect::new(0, 0, n - 1, n - 1);
    let params = ModelParams::with_field(cfg.params.beta, cfg.params.h);
    let opts = AuditOptions {
        max_level: sch.max_level,
        cftp_limit: 26,
        check_coupling: true,
    };
    let src = RandomnessSource::new(cfg.seed);
    let mut w = OutputWriter::new(&cfg.out, cfg)?;
    let mut report = RunReport::default();

    let fields: Vec<Result<_>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let sub = src.substream(r as u64);
            compute_dominating_field(&sub, &schedule, ambient, &params, cfg.params.p, &opts)
        })
        .collect();
    let fields: Vec<_> = fields.into_iter().collect::<Result<_>>()?;

    let clause_name = |f: Option<FailedClause>| match f {
        None => "",
        Some(FailedClause::MinusSeen) => "minus-seen",
        Some(FailedClause::DisOverflow) => "dis-overflow",
        Some(FailedClause::BadNonempty) => "bad-nonempty",
        Some(FailedClause::InfPropFail) => "inf-prop",
        Some(FailedClause::LocCoupFail) => "loc-coup",
    };

    let mut checks = 0u64;
    for level in 0..=opts.max_level {
        let mut rows = Vec::new();
        let mut ones = 0u64;
        let mut total = 0u64;
        for (r, run_fields) in fields.iter().enumerate() {
            let field = &run_fields[level as usize];
            for (bi, b) in field.blocks.iter().enumerate() {
                total += 1;
                if b.bit {
                    ones += 1;
                }
                if let Some(agrees) = b.coupling_agrees {
                    checks += 1;
                    if !b.bit && !agrees {
                        report.violation(format!(
                            "implementation error: level {} block {} of replica {} has bit 0 \
                             but the biased and stationary chains disagree on it",
                            level, bi, r
                        ));
                    }
                }
                rows.push(vec![
                    r.to_string(),
                    bi.to_string(),
                    format!(
                        "[{},{}]x[{},{}]",
                        b.rect.x0, b.rect.x1, b.rect.y0, b.rect.y1
                    ),
                    (b.bit as u8).to_string(),
                    clause_name(b.failed).to_string(),
                    b.coupling_agrees
                        .map(|a| (a as u8).to_string())
                        .unwrap_or_default(),
                ]);
            }
        }
        w.write_csv(
            &format!("field_level{}.csv", level),
            &["replica", "block", "rect", "bit", "failed_clause", "coupling_agrees"],
            &rows,
        )?;
        let est = TvEstimate::from_counts(ones, total);
        report.note(format!(
            "level {}: q-hat = {:.4} ({} of {} blocks, Wilson [{:.4}, {:.4}])",
            level, est.p, ones, total, est.lo, est.hi
        ));
    }
    report.note(format!("{} (replica x block) coupling checks", checks));
    w.finish()?;
    Ok(report)
}
