//! Finite lattice domains, boundary conditions as frozen ghost spins, and
//! rectangular block geometry.
//!
//! Box conventions: the paper's half-integer boxes `[-R/2, R/2]` are stored
//! with integer corners, fixing floor on the left/bottom edge and ceil on the
//! right/top edge. A torus simply has no ghosts, so the update code path is
//! identical for every domain kind.

use crate::{Error, Result};

pub type Spin = i8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Box,
    Torus,
    StripSegment,
    Annulus,
}

/// Closed integer rectangle `[x0,x1] x [y0,y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl Rect {
    pub fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// The paper's `[-L/2, L/2]` box centered at `c`: floor on the left
    /// corner, ceil on the right.
    pub fn centered(c: (i64, i64), side: i64) -> Self {
        let lo = -side / 2; // floor for nonnegative side
        let hi = side - 1 + lo;
        Rect::new(c.0 + lo, c.1 + lo, c.0 + hi, c.1 + hi)
    }

    pub fn width(&self) -> i64 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> i64 {
        self.y1 - self.y0 + 1
    }

    pub fn contains(&self, p: (i64, i64)) -> bool {
        self.x0 <= p.0 && p.0 <= self.x1 && self.y0 <= p.1 && p.1 <= self.y1
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        self.x0 <= r.x0 && r.x1 <= self.x1 && self.y0 <= r.y0 && r.y1 <= self.y1
    }

    pub fn intersects(&self, r: &Rect) -> bool {
        self.x0 <= r.x1 && r.x0 <= self.x1 && self.y0 <= r.y1 && r.y0 <= self.y1
    }

    /// Smallest rectangle covering both.
    pub fn hull(&self, r: &Rect) -> Rect {
        Rect::new(
            self.x0.min(r.x0),
            self.y0.min(r.y0),
            self.x1.max(r.x1),
            self.y1.max(r.y1),
        )
    }

    /// l-infinity distance between the two rectangles (0 if they meet).
    pub fn linf_distance(&self, r: &Rect) -> i64 {
        let dx = (r.x0 - self.x1).max(self.x0 - r.x1).max(0);
        let dy = (r.y0 - self.y1).max(self.y0 - r.y1).max(0);
        dx.max(dy)
    }

    pub fn iter_sites(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (x0, x1, y0) = (self.x0, self.x1, self.y0);
        (y0..=self.y1).flat_map(move |y| (x0..=x1).map(move |x| (x, y)))
    }
}

/// Grow a rectangle by `j * scale_len / 10` in every direction, the block
/// enlargement `E_{+j}`. Rounding of `scale_len * j / 10` is down (the paper
/// drops all rounding). Returns the enlarged rectangle and whether it had to
/// be clipped against `ambient`.
pub fn enlarge(b: Rect, scale_len: i64, j: i64, ambient: Option<Rect>) -> (Rect, bool) {
    let r = scale_len * j / 10;
    let grown = Rect::new(b.x0 - r, b.y0 - r, b.x1 + r, b.y1 + r);
    match ambient {
        Some(a) if !a.contains_rect(&grown) => (
            Rect::new(
                grown.x0.max(a.x0),
                grown.y0.max(a.y0),
                grown.x1.min(a.x1),
                grown.y1.min(a.y1),
            ),
            true,
        ),
        _ => (grown, false),
    }
}

/// Neighbor of a site: another site, a frozen ghost spin, or (conceptually)
/// nothing under free boundary conditions — free ghosts carry spin 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Site(u32),
    Ghost(u32),
}

/// A finite domain with canonical row-major site enumeration and a
/// precomputed neighbor table. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Domain {
    kind: DomainKind,
    bounds: Rect,
    hole: Option<Rect>,
    sites: Vec<(i64, i64)>,
    ghosts: Vec<(i64, i64)>,
    neighbors: Vec<[Neighbor; 4]>,
    // grid over `bounds`, u32::MAX marks non-sites (annulus hole)
    grid: Vec<u32>,
}

impl Domain {
    pub fn new_box(origin: (i64, i64), width: i64, height: i64) -> Result<Domain> {
        Self::build(DomainKind::Box, origin, width, height, None)
    }

    /// A wide, short box used for interface studies; geometry is identical
    /// to a box, the kind only selects boundary presets in configs.
    pub fn new_strip(origin: (i64, i64), width: i64, height: i64) -> Result<Domain> {
        Self::build(DomainKind::StripSegment, origin, width, height, None)
    }

    pub fn new_torus(n: i64) -> Result<Domain> {
        if n < 3 {
            return Err(Error::InvalidGeometry(format!(
                "torus side {} < 3 would self-adjoin neighborhoods",
                n
            )));
        }
        Self::build(DomainKind::Torus, (0, 0), n, n, None)
    }

    /// Outer box minus an inner rectangular hole; ghosts ring both
    /// boundaries.
    pub fn new_annulus(origin: (i64, i64), width: i64, height: i64, hole: Rect) -> Result<Domain> {
        let outer = Rect::new(origin.0, origin.1, origin.0 + width - 1, origin.1 + height - 1);
        if !outer.contains_rect(&hole) {
            return Err(Error::InvalidGeometry("annulus hole exceeds outer box".into()));
        }
        Self::build(DomainKind::Annulus, origin, width, height, Some(hole))
    }

    /// Box over an explicit rectangle.
    pub fn from_rect(r: Rect) -> Result<Domain> {
        Self::new_box((r.x0, r.y0), r.width(), r.height())
    }

    fn build(
        kind: DomainKind,
        origin: (i64, i64),
        width: i64,
        height: i64,
        hole: Option<Rect>,
    ) -> Result<Domain> {
        if width <= 0 || height <= 0 {
            return Err(Error::InvalidGeometry(format!(
                "nonpositive extent {}x{}",
                width, height
            )));
        }
        let bounds = Rect::new(origin.0, origin.1, origin.0 + width - 1, origin.1 + height - 1);
        let in_hole = |p: (i64, i64)| hole.map_or(false, |h| h.contains(p));

        let mut sites = Vec::new();
        let mut grid = vec![u32::MAX; (width * height) as usize];
        for y in bounds.y0..=bounds.y1 {
            for x in bounds.x0..=bounds.x1 {
                if in_hole((x, y)) {
                    continue;
                }
                let idx = sites.len() as u32;
                sites.push((x, y));
                grid[((y - bounds.y0) * width + (x - bounds.x0)) as usize] = idx;
            }
        }
        if sites.is_empty() {
            return Err(Error::InvalidGeometry("empty domain".into()));
        }

        let mut dom = Domain {
            kind,
            bounds,
            hole,
            sites,
            ghosts: Vec::new(),
            neighbors: Vec::new(),
            grid,
        };

        let mut ghost_index: std::collections::HashMap<(i64, i64), u32> =
            std::collections::HashMap::new();
        let mut neighbors = Vec::with_capacity(dom.sites.len());
        for i in 0..dom.sites.len() {
            let (x, y) = dom.sites[i];
            let mut row = [Neighbor::Site(0); 4];
            for (slot, (nx, ny)) in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
                .into_iter()
                .enumerate()
            {
                let p = dom.canonical(nx, ny);
                row[slot] = match dom.index_of(p) {
                    Some(j) => Neighbor::Site(j),
                    None => {
                        let g = *ghost_index.entry(p).or_insert_with(|| {
                            dom.ghosts.push(p);
                            (dom.ghosts.len() - 1) as u32
                        });
                        Neighbor::Ghost(g)
                    }
                };
            }
            neighbors.push(row);
        }
        dom.neighbors = neighbors;
        Ok(dom)
    }

    /// Wrap coordinates on a torus; identity elsewhere.
    pub fn canonical(&self, x: i64, y: i64) -> (i64, i64) {
        if self.kind == DomainKind::Torus {
            let w = self.bounds.width();
            let h = self.bounds.height();
            (
                (x - self.bounds.x0).rem_euclid(w) + self.bounds.x0,
                (y - self.bounds.y0).rem_euclid(h) + self.bounds.y0,
            )
        } else {
            (x, y)
        }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn hole(&self) -> Option<Rect> {
        self.hole
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn ghost_count(&self) -> usize {
        self.ghosts.len()
    }

    pub fn sites(&self) -> &[(i64, i64)] {
        &self.sites
    }

    pub fn ghosts(&self) -> &[(i64, i64)] {
        &self.ghosts
    }

    pub fn site(&self, i: usize) -> (i64, i64) {
        self.sites[i]
    }

    pub fn neighbors_of(&self, i: usize) -> &[Neighbor; 4] {
        &self.neighbors[i]
    }

    /// Site index of a (canonical) coordinate, if it lies in the domain.
    pub fn index_of(&self, p: (i64, i64)) -> Option<u32> {
        if !self.bounds.contains(p) {
            return None;
        }
        let w = self.bounds.width();
        let idx = self.grid[((p.1 - self.bounds.y0) * w + (p.0 - self.bounds.x0)) as usize];
        (idx != u32::MAX).then_some(idx)
    }

    pub fn contains(&self, p: (i64, i64)) -> bool {
        self.index_of(p).is_some()
    }
}

/// Frozen ghost spins implementing a boundary condition. Spin 0 marks a free
/// (absent) ghost so that free boundaries share the same update path.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition {
    spins: Vec<Spin>,
}

impl BoundaryCondition {
    pub fn from_fn(domain: &Domain, f: impl Fn((i64, i64)) -> Spin) -> Self {
        BoundaryCondition {
            spins: domain.ghosts().iter().map(|&g| f(g)).collect(),
        }
    }

    pub fn all_plus(domain: &Domain) -> Self {
        Self::from_fn(domain, |_| 1)
    }

    pub fn all_minus(domain: &Domain) -> Self {
        Self::from_fn(domain, |_| -1)
    }

    pub fn free(domain: &Domain) -> Self {
        Self::from_fn(domain, |_| 0)
    }

    /// Dobrushin interface conditions: minus at and below the global row
    /// `y = 0`, plus above it. The induced interface baseline sits at dual
    /// height 1/2.
    pub fn dobrushin(domain: &Domain) -> Self {
        Self::from_fn(domain, |(_, y)| if y >= 1 { 1 } else { -1 })
    }

    /// `(-,-,+,-)`: all-plus on the south side, all-minus on the other
    /// three sides.
    pub fn three_minus_one_plus(domain: &Domain) -> Self {
        let b = domain.bounds();
        Self::from_fn(domain, |(_, y)| if y < b.y0 { 1 } else { -1 })
    }

    /// `(-,+,Delta)`: minus on the north boundary and on the interval
    /// `delta` (given as inclusive x-range on the south side), plus
    /// elsewhere.
    pub fn minus_plus_delta(domain: &Domain, delta: (i64, i64)) -> Self {
        let b = domain.bounds();
        Self::from_fn(domain, |(x, y)| {
            if y > b.y1 {
                -1
            } else if y < b.y0 && delta.0 <= x && x <= delta.1 {
                -1
            } else {
                1
            }
        })
    }

    /// Mixed annulus conditions: plus on the outer ghost ring, minus on the
    /// ghosts ringing the hole.
    pub fn mixed_annulus(domain: &Domain) -> Result<Self> {
        let hole = domain
            .hole()
            .ok_or_else(|| Error::InvalidGeometry("mixed_annulus requires an annulus".into()))?;
        Ok(Self::from_fn(domain, |g| if hole.contains(g) { -1 } else { 1 }))
    }

    #[inline(always)]
    pub fn ghost_spin(&self, g: u32) -> Spin {
        self.spins[g as usize]
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    /// Pointwise partial order on assigned (non-free) ghosts.
    pub fn le(&self, other: &BoundaryCondition) -> bool {
        self.spins
            .iter()
            .zip(&other.spins)
            .all(|(a, b)| a <= b)
    }
}

/// Plus/minus assignment over a domain's sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinConfig {
    spins: Vec<Spin>,
}

impl SpinConfig {
    pub fn constant(domain: &Domain, s: Spin) -> Self {
        assert!(s == 1 || s == -1);
        SpinConfig {
            spins: vec![s; domain.site_count()],
        }
    }

    pub fn all_plus(domain: &Domain) -> Self {
        Self::constant(domain, 1)
    }

    pub fn all_minus(domain: &Domain) -> Self {
        Self::constant(domain, -1)
    }

    pub fn from_fn(domain: &Domain, f: impl Fn((i64, i64)) -> Spin) -> Self {
        let spins: Vec<Spin> = domain.sites().iter().map(|&p| f(p)).collect();
        assert!(spins.iter().all(|&s| s == 1 || s == -1));
        SpinConfig { spins }
    }

    pub fn from_spins(spins: Vec<Spin>) -> Self {
        assert!(spins.iter().all(|&s| s == 1 || s == -1));
        SpinConfig { spins }
    }

    #[inline(always)]
    pub fn get(&self, i: u32) -> Spin {
        self.spins[i as usize]
    }

    #[inline(always)]
    pub fn set(&mut self, i: u32, s: Spin) {
        self.spins[i as usize] = s;
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| s as i64).sum::<i64>() as f64 / self.spins.len() as f64
    }

    pub fn le(&self, other: &SpinConfig) -> bool {
        self.spins.iter().zip(&other.spins).all(|(a, b)| a <= b)
    }

    /// Pointwise minimum with `q` on `region`, unchanged elsewhere.
    pub fn min_overlay(&self, domain: &Domain, q: &SpinConfig, region: &Rect) -> Result<SpinConfig> {
        if self.len() != domain.site_count() || q.len() != domain.site_count() {
            return Err(Error::InvalidRegion("overlay configs on different domains".into()));
        }
        if !domain.bounds().contains_rect(region) && domain.kind() != DomainKind::Torus {
            return Err(Error::InvalidRegion("overlay region outside domain".into()));
        }
        let mut out = self.clone();
        for p in region.iter_sites() {
            let p = domain.canonical(p.0, p.1);
            if let Some(i) = domain.index_of(p) {
                out.set(i, self.get(i).min(q.get(i)));
            }
        }
        Ok(out)
    }
}

/// Sum of the 4 neighbor spins of site `i`; ghosts contribute their frozen
/// value, free ghosts contribute 0.
#[inline(always)]
pub fn neighbor_sum(domain: &Domain, cfg: &SpinConfig, bc: &BoundaryCondition, i: u32) -> i32 {
    let mut s = 0i32;
    for nb in domain.neighbors_of(i as usize) {
        s += match *nb {
            Neighbor::Site(j) => cfg.get(j) as i32,
            Neighbor::Ghost(g) => bc.ghost_spin(g) as i32,
        };
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_counts() {
        let d = Domain::new_box((0, 0), 4, 4).unwrap();
        assert_eq!(d.site_count(), 16);
        assert_eq!(d.ghost_count(), 16); // perimeter without corners
    }

    #[test]
    fn torus_has_no_ghosts() {
        let d = Domain::new_torus(8).unwrap();
        assert_eq!(d.site_count(), 64);
        assert_eq!(d.ghost_count(), 0);
        for i in 0..d.site_count() {
            for nb in d.neighbors_of(i) {
                assert!(matches!(nb, Neighbor::Site(_)));
            }
        }
    }

    #[test]
    fn strip_counts() {
        let d = Domain::new_strip((0, 0), 3, 2).unwrap();
        assert_eq!(d.site_count(), 6);
        assert_eq!(d.ghost_count(), 10);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Domain::new_box((0, 0), 0, 4).is_err());
        assert!(Domain::new_box((0, 0), 4, -1).is_err());
        assert!(Domain::new_torus(2).is_err());
    }

    #[test]
    fn neighbor_relation_symmetric_and_enumeration_bijective() {
        for d in [
            Domain::new_box((-3, 2), 5, 7).unwrap(),
            Domain::new_torus(5).unwrap(),
            Domain::new_annulus((0, 0), 9, 9, Rect::new(3, 3, 5, 5)).unwrap(),
        ] {
            let mut seen = std::collections::HashSet::new();
            for i in 0..d.site_count() {
                assert!(seen.insert(d.site(i)));
                assert_eq!(d.index_of(d.site(i)), Some(i as u32));
                for nb in d.neighbors_of(i) {
                    if let Neighbor::Site(j) = *nb {
                        let back = d
                            .neighbors_of(j as usize)
                            .iter()
                            .any(|n| matches!(n, Neighbor::Site(k) if *k == i as u32));
                        assert!(back, "asymmetric neighbor {} -> {}", i, j);
                    }
                }
            }
        }
    }

    #[test]
    fn neighbor_sum_examples() {
        let d = Domain::new_box((0, 0), 4, 4).unwrap();
        let plus = BoundaryCondition::all_plus(&d);
        let cfg = SpinConfig::all_plus(&d);
        let center = d.index_of((1, 1)).unwrap();
        assert_eq!(neighbor_sum(&d, &cfg, &plus, center), 4);

        // checkerboard: a +1 site has all four neighbors -1
        let chk = SpinConfig::from_fn(&d, |(x, y)| if (x + y) % 2 == 0 { 1 } else { -1 });
        let bc = BoundaryCondition::from_fn(&d, |(x, y)| if (x + y).rem_euclid(2) == 0 { 1 } else { -1 });
        let v = d.index_of((2, 2)).unwrap();
        assert_eq!(chk.get(v), 1);
        assert_eq!(neighbor_sum(&d, &chk, &bc, v), -4);

        // corner with all-minus bc: 2 ghosts (-1) + 2 interior (+1)
        let minus = BoundaryCondition::all_minus(&d);
        let corner = d.index_of((0, 0)).unwrap();
        assert_eq!(neighbor_sum(&d, &cfg, &minus, corner), 0);
    }

    #[test]
    fn neighbor_sum_range() {
        let d = Domain::new_torus(6).unwrap();
        let bc = BoundaryCondition::free(&d);
        let cfg = SpinConfig::from_fn(&d, |(x, y)| if (x * 31 + y * 17) % 3 == 0 { 1 } else { -1 });
        for i in 0..d.site_count() as u32 {
            let s = neighbor_sum(&d, &cfg, &bc, i);
            assert!([-4, -2, 0, 2, 4].contains(&s));
        }
    }

    #[test]
    fn enlarge_examples() {
        let b = Rect::centered((0, 0), 10);
        let (e, clipped) = enlarge(b, 10, 4, None);
        assert_eq!(e.width(), 18);
        assert!(!clipped);
        let (e0, _) = enlarge(b, 10, 0, None);
        assert_eq!(e0, b);
        let b20 = Rect::centered((0, 0), 20);
        let (e1, _) = enlarge(b20, 20, 1, None);
        assert_eq!(e1.width(), 24);
    }

    #[test]
    fn enlarge_monotone_and_nested() {
        let b = Rect::new(0, 0, 9, 9);
        let inner = Rect::new(2, 2, 7, 7);
        for j in 0..5 {
            let (ej, _) = enlarge(b, 10, j, None);
            let (ej1, _) = enlarge(b, 10, j + 1, None);
            assert!(ej1.contains_rect(&ej));
            let (ij, _) = enlarge(inner, 10, j, None);
            assert!(ej.contains_rect(&ij));
        }
    }

    #[test]
    fn enlarge_clips_against_ambient() {
        let b = Rect::new(0, 0, 9, 9);
        let ambient = Rect::new(-2, -2, 11, 11);
        let (e, clipped) = enlarge(b, 10, 4, Some(ambient));
        assert!(clipped);
        assert_eq!(e, ambient);
    }

    #[test]
    fn min_overlay_identities() {
        let d = Domain::new_box((0, 0), 4, 4).unwrap();
        let base = SpinConfig::all_plus(&d);
        let q_plus = SpinConfig::all_plus(&d);
        let all = d.bounds();
        assert_eq!(base.min_overlay(&d, &q_plus, &all).unwrap(), base);

        let minus = SpinConfig::all_minus(&d);
        assert_eq!(minus.min_overlay(&d, &q_plus, &all).unwrap(), minus);

        let mut q = SpinConfig::all_plus(&d);
        q.set(d.index_of((2, 1)).unwrap(), -1);
        let out = base.min_overlay(&d, &q, &all).unwrap();
        for i in 0..d.site_count() as u32 {
            let expect = if d.site(i as usize) == (2, 1) { -1 } else { 1 };
            assert_eq!(out.get(i), expect);
        }

        let outside = Rect::new(10, 10, 12, 12);
        assert!(base.min_overlay(&d, &q, &outside).is_err());
    }
}
