//! Open interface contours of Dobrushin-type configurations, their height
//! statistics, and Monte Carlo dual two-point functions.
//!
//! Dual vertices are stored in doubled coordinates: the dual vertex at
//! `(x + 1/2, y + 1/2)` is the integer pair `(2x + 1, 2y + 1)`. The
//! Dobrushin baseline is the dual row `y = 1/2`, doubled `1`, and heights
//! count dual rows above it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::engine::{disagreement_set, ChainState, CoupledEnsemble, ModelParams};
use crate::lattice::{BoundaryCondition, Domain, Spin, SpinConfig};
use crate::rng::RandomnessSource;
use crate::sampler::sample_rad;
use crate::stats::{batch_means, quantile, wilson_interval};
use crate::{Error, Result, BETA_C};

type DualVertex = (i64, i64);

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceContour {
    /// traversal order, each edge as (from, to) in doubled dual coordinates
    pub edges: Vec<(DualVertex, DualVertex)>,
    /// the two odd-degree dual vertices, traversal start first
    pub endpoints: [DualVertex; 2],
    /// doubled dual column -> maximum doubled dual row visited
    pub height_profile: BTreeMap<i64, i64>,
}

impl InterfaceContour {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of dual rows the contour reaches above the baseline `y = 1/2`;
    /// 0 for the flat ground-state contour.
    pub fn max_height(&self) -> i64 {
        self.height_profile
            .values()
            .map(|&y| (y - 1) / 2)
            .max()
            .unwrap_or(0)
    }
}

fn spin_at(
    domain: &Domain,
    cfg: &SpinConfig,
    ghost_spins: &HashMap<(i64, i64), Spin>,
    p: (i64, i64),
) -> Spin {
    match domain.index_of(p) {
        Some(i) => cfg.get(i),
        None => ghost_spins.get(&p).copied().unwrap_or(0),
    }
}

/// Extracts the unique open ± contour induced by a Dobrushin-type boundary
/// condition, walking it from its lexicographically smaller endpoint.
/// Degree-4 dual vertices are resolved by a fixed chirality: the south and
/// east dual edges pair into one strand, the north and west edges into the
/// other.
pub fn extract_interface(
    domain: &Domain,
    cfg: &SpinConfig,
    bc: &BoundaryCondition,
) -> Result<InterfaceContour> {
    let ghost_spins: HashMap<(i64, i64), Spin> = domain
        .ghosts()
        .iter()
        .enumerate()
        .map(|(g, &p)| (p, bc.ghost_spin(g as u32)))
        .collect();
    let spin = |p: (i64, i64)| spin_at(domain, cfg, &ghost_spins, p);

    // separating dual edges; site-site primal edges from the smaller side
    // only, site-ghost edges from the site side in all four directions
    let mut adj: HashMap<DualVertex, Vec<DualVertex>> = HashMap::new();
    let mut add = |a: DualVertex, b: DualVertex| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    for &(x, y) in domain.sites() {
        let s = spin((x, y));
        for (nx, ny) in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
            let q = domain.canonical(nx, ny);
            if domain.contains(q) && (q.0, q.1) < (x, y) {
                continue;
            }
            let t = spin(q);
            if t == 0 || s == t {
                continue;
            }
            // the crossing dual edge, oriented by the primal edge direction
            if ny == y {
                let mx = x.min(nx);
                add((2 * mx + 1, 2 * y - 1), (2 * mx + 1, 2 * y + 1));
            } else {
                let my = y.min(ny);
                add((2 * x - 1, 2 * my + 1), (2 * x + 1, 2 * my + 1));
            }
        }
    }

    let mut odd: Vec<DualVertex> = adj
        .iter()
        .filter(|(_, es)| es.len() % 2 == 1)
        .map(|(&v, _)| v)
        .collect();
    odd.sort();
    if odd.len() != 2 {
        return Err(Error::DegenerateConfiguration(format!(
            "{} odd-degree dual vertices (need 2) on {:?}; odd set {:?}, magnetization {:.4}",
            odd.len(),
            domain.bounds(),
            &odd[..odd.len().min(8)],
            cfg.magnetization()
        )));
    }

    let canonical_edge =
        |a: DualVertex, b: DualVertex| if a < b { (a, b) } else { (b, a) };
    let mut used: HashSet<(DualVertex, DualVertex)> = HashSet::new();
    let start = odd[0];
    let mut edges = Vec::new();
    let mut profile: BTreeMap<i64, i64> = BTreeMap::new();
    let mut touch = |v: DualVertex| {
        let e = profile.entry(v.0).or_insert(i64::MIN);
        *e = (*e).max(v.1);
    };
    touch(start);

    let mut cur = start;
    let mut dir: Option<(i64, i64)> = None;
    loop {
        let incident = &adj[&cur];
        let next = if incident.len() == 4 && dir.is_some() {
            // fixed chirality: strand {south, east} and strand {north, west}
            let d = dir.unwrap();
            let out = match d {
                (0, 2) => (2, 0),
                (2, 0) => (0, 2),
                (0, -2) => (-2, 0),
                (-2, 0) => (0, -2),
                _ => unreachable!(),
            };
            let cand = (cur.0 + out.0, cur.1 + out.1);
            if !incident.contains(&cand) || used.contains(&canonical_edge(cur, cand)) {
                return Err(Error::DegenerateConfiguration(format!(
                    "splitting rule has no free edge at dual vertex {:?}",
                    cur
                )));
            }
            cand
        } else {
            match incident
                .iter()
                .filter(|&&n| !used.contains(&canonical_edge(cur, n)))
                .min()
            {
                Some(&n) => n,
                None => {
                    return Err(Error::DegenerateConfiguration(format!(
                        "contour stalls at dual vertex {:?}",
                        cur
                    )))
                }
            }
        };
        used.insert(canonical_edge(cur, next));
        edges.push((cur, next));
        dir = Some((next.0 - cur.0, next.1 - cur.1));
        touch(next);
        cur = next;
        if cur == odd[1] && adj[&cur].len() % 2 == 1 {
            // arrived at the far endpoint with an odd number of free edges
            // remaining there, i.e., all its strands are resolved
            let free = adj[&cur]
                .iter()
                .filter(|&&n| !used.contains(&canonical_edge(cur, n)))
                .count();
            if free % 2 == 0 {
                break;
            }
        }
        if edges.len() > 8 * adj.len() {
            return Err(Error::DegenerateConfiguration(
                "contour traversal failed to terminate".into(),
            ));
        }
    }

    Ok(InterfaceContour {
        edges,
        endpoints: [odd[0], odd[1]],
        height_profile: profile,
    })
}

/// Every contour edge must separate opposite spins; used by tests and the
/// extraction audit.
pub fn contour_separates(
    domain: &Domain,
    cfg: &SpinConfig,
    bc: &BoundaryCondition,
    contour: &InterfaceContour,
) -> bool {
    let ghost_spins: HashMap<(i64, i64), Spin> = domain
        .ghosts()
        .iter()
        .enumerate()
        .map(|(g, &p)| (p, bc.ghost_spin(g as u32)))
        .collect();
    contour.edges.iter().all(|&(a, b)| {
        // the primal edge crossed by dual edge (a, b)
        let (p, q) = if a.0 == b.0 {
            // vertical dual edge crosses a horizontal primal edge
            let y = (a.1.max(b.1) - 1) / 2;
            (((a.0 - 1) / 2, y), ((a.0 + 1) / 2, y))
        } else {
            let x = (a.0.max(b.0) - 1) / 2;
            ((x, (a.1 - 1) / 2), (x, (a.1 + 1) / 2))
        };
        let s = spin_at(domain, cfg, &ghost_spins, p);
        let t = spin_at(domain, cfg, &ghost_spins, q);
        s != 0 && t != 0 && s != t
    })
}

#[derive(Clone, Debug)]
pub struct TailRow {
    pub h: i64,
    pub count: u64,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug)]
pub struct HeightTail {
    pub n: usize,
    pub rows: Vec<TailRow>,
    pub median: f64,
}

/// Empirical tail P(max height >= h) with Wilson intervals over an
/// ensemble of per-configuration maximum heights.
pub fn max_height_statistics(heights: &[i64]) -> Result<HeightTail> {
    if heights.len() < 100 {
        return Err(Error::InsufficientSamples(format!(
            "{} interface samples, need at least 100",
            heights.len()
        )));
    }
    let n = heights.len() as u64;
    let h_max = heights.iter().copied().max().unwrap();
    let rows = (0..=h_max)
        .map(|h| {
            let count = heights.iter().filter(|&&x| x >= h).count() as u64;
            let (lo, hi) = wilson_interval(count, n);
            TailRow {
                h,
                count,
                p: count as f64 / n as f64,
                lo,
                hi,
            }
        })
        .collect();
    let mut sorted: Vec<f64> = heights.iter().map(|&h| h as f64).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(HeightTail {
        n: heights.len(),
        rows,
        median: quantile(&sorted, 0.5),
    })
}

/// Equilibrium Dobrushin-strip samples by audited burn-in: the extremal
/// all-plus and all-minus chains run grand-coupled until they coalesce
/// (the audit), then the merged chain is subsampled every `t_gap`.
pub struct InterfaceEnsemble {
    pub domain: Arc<Domain>,
    pub bc: BoundaryCondition,
    pub configs: Vec<SpinConfig>,
    pub coalesce_time: f64,
}

pub fn sample_interface_ensemble(
    src: &RandomnessSource,
    width: i64,
    half_height: i64,
    params: &ModelParams,
    n: usize,
    t_max_burn: f64,
    t_gap: f64,
) -> Result<InterfaceEnsemble> {
    if width < 2 || half_height < 1 {
        return Err(Error::InvalidGeometry(format!(
            "interface strip needs width >= 2 and half height >= 1, got {}x{}",
            width, half_height
        )));
    }
    // rows 1-half_height ..= half_height, baseline between rows 0 and 1
    let d = Arc::new(Domain::new_strip(
        (0, 1 - half_height),
        width,
        2 * half_height,
    )?);
    let bc = BoundaryCondition::dobrushin(&d);
    let chains = vec![
        ChainState::new(d.clone(), bc.clone(), SpinConfig::all_plus(&d)),
        ChainState::new(d.clone(), bc.clone(), SpinConfig::all_minus(&d)),
    ];
    let mut ens = CoupledEnsemble::new(chains, *src, *params);
    let mut t = 0.0;
    let coalesce_time = loop {
        let step = 8.0f64.min(t_max_burn - t).max(0.0);
        if step == 0.0 {
            return Err(Error::Setup(format!(
                "burn-in audit failed: extremal chains still disagree at t = {}",
                t_max_burn
            )));
        }
        t += step;
        ens.evolve(t);
        if disagreement_set(&ens.chains[0], &ens.chains[1])?.is_empty() {
            break t;
        }
    };
    let mut configs = Vec::with_capacity(n);
    while configs.len() < n {
        t += t_gap;
        ens.evolve(t);
        configs.push(ens.chains[0].cfg.clone());
    }
    Ok(InterfaceEnsemble {
        domain: d,
        bc,
        configs,
        coalesce_time,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct TwoPointEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: usize,
}

fn check_subcritical(beta_star: f64) -> Result<()> {
    if beta_star >= BETA_C {
        return Err(Error::NotSubcritical(beta_star));
    }
    Ok(())
}

fn equilibrium_series(
    src: &RandomnessSource,
    domain: &Arc<Domain>,
    beta_star: f64,
    samples: usize,
    mut record: impl FnMut(&SpinConfig),
) {
    let params = ModelParams::new(beta_star);
    let bc = BoundaryCondition::free(domain);
    let init = sample_rad(src, domain, 0.5);
    let chains = vec![ChainState::new(domain.clone(), bc, init)];
    let mut ens = CoupledEnsemble::new(chains, *src, params);
    let burn = 30.0;
    ens.evolve(burn);
    for i in 1..=samples {
        ens.evolve(burn + i as f64);
        record(&ens.chains[0].cfg);
    }
}

/// Monte Carlo estimate of the subcritical two-point function
/// `<sigma_x sigma_y>` on `domain` with free boundary, with a batch-means
/// 95% confidence half-width.
pub fn two_point_mc(
    src: &RandomnessSource,
    beta_star: f64,
    domain: &Arc<Domain>,
    x: (i64, i64),
    y: (i64, i64),
    samples: usize,
) -> Result<TwoPointEstimate> {
    check_subcritical(beta_star)?;
    let (ix, iy) = match (domain.index_of(x), domain.index_of(y)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidRegion(format!(
                "{:?} or {:?} outside {:?}",
                x,
                y,
                domain.bounds()
            )))
        }
    };
    if ix == iy {
        return Ok(TwoPointEstimate {
            mean: 1.0,
            half_width: 0.0,
            samples: 0,
        });
    }
    if samples < 40 {
        return Err(Error::InsufficientSamples(format!(
            "{} sweeps, need at least 40 for batch means",
            samples
        )));
    }
    let mut series = Vec::with_capacity(samples);
    equilibrium_series(src, domain, beta_star, samples, |cfg| {
        series.push((cfg.get(ix) as i32 * cfg.get(iy) as i32) as f64);
    });
    let (mean, half_width) = batch_means(&series, 20);
    Ok(TwoPointEstimate {
        mean,
        half_width,
        samples,
    })
}

/// Axis two-point profile `<sigma_0 sigma_(r,0)>` for several distances at
/// once, averaged over all horizontal translates on the middle rows of the
/// strip (shared sweeps, much lower variance than per-pair estimation).
pub fn axis_two_point_profile(
    src: &RandomnessSource,
    beta_star: f64,
    domain: &Arc<Domain>,
    distances: &[i64],
    samples: usize,
) -> Result<Vec<(i64, TwoPointEstimate)>> {
    check_subcritical(beta_star)?;
    if samples < 40 {
        return Err(Error::InsufficientSamples(format!(
            "{} sweeps, need at least 40 for batch means",
            samples
        )));
    }
    let b = domain.bounds();
    if distances.iter().any(|&r| r < 1 || r >= b.width()) {
        return Err(Error::InvalidRegion(
            "distances must lie in [1, width)".into(),
        ));
    }
    // middle third of the rows, away from the free boundary
    let y_lo = b.y0 + b.height() / 3;
    let y_hi = b.y1 - b.height() / 3;
    let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(samples); distances.len()];
    equilibrium_series(src, domain, beta_star, samples, |cfg| {
        for (di, &r) in distances.iter().enumerate() {
            let mut acc = 0i64;
            let mut cnt = 0i64;
            for yy in y_lo..=y_hi {
                for xx in b.x0..=b.x1 - r {
                    let i = domain.index_of((xx, yy)).unwrap();
                    let j = domain.index_of((xx + r, yy)).unwrap();
                    acc += (cfg.get(i) as i64) * (cfg.get(j) as i64);
                    cnt += 1;
                }
            }
            series[di].push(acc as f64 / cnt as f64);
        }
    });
    Ok(distances
        .iter()
        .zip(series)
        .map(|(&r, s)| {
            let (mean, half_width) = batch_means(&s, 20);
            (
                r,
                TwoPointEstimate {
                    mean,
                    half_width,
                    samples,
                },
            )
        })
        .collect())
}

/// Least-squares exponential decay rate of an Ornstein-Zernike corrected
/// profile: fits `ln c(r) + ln(r)/2 = a - rate * r`, each point weighted by
/// the inverse variance of its log (delta method, `sigma_ln = hw / mean`)
/// so that far distances whose estimates sit at the noise floor do not
/// swamp the fit. Points with nonpositive means carry no log and are
/// dropped; at least two usable points are required.
pub fn fit_decay_rate(profile: &[(i64, TwoPointEstimate)]) -> Result<f64> {
    let pts: Vec<(f64, f64, f64)> = profile
        .iter()
        .filter(|(_, e)| e.mean > 0.0)
        .map(|&(r, e)| {
            let sigma = (e.half_width / e.mean).max(1e-9);
            (
                r as f64,
                e.mean.ln() + 0.5 * (r as f64).ln(),
                1.0 / (sigma * sigma),
            )
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{} usable distances ({} supplied); increase samples",
            pts.len(),
            profile.len()
        )));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let sx: f64 = pts.iter().map(|p| p.2 * p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.2 * p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.2 * p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * p.0 * p.1).sum();
    Ok(-(sw * sxy - sx * sy) / (sw * sxx - sx * sx))
}
