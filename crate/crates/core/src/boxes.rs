//! Laminar boxes around previously chosen centers.
//!
//! Every distinct center starts with a cube of half-side `h0`. Rounds double
//! all active boxes away from their representatives, then meld intersecting
//! pairs into their bounding box (keeping the first representative). An
//! active box that is melded for the first time in the round it was doubled
//! is frozen at its pre-doubling shape. When one active box remains, the
//! whole space is frozen with its representative.
//!
//! Frozen boxes are half-open on their upper faces, so boxes that only touch
//! are disjoint and the forest partitions space unambiguously.

use crate::relational::{squared_distance, BoxRect, Point};

/// One frozen box with its representative site.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestEntry {
    pub rect: BoxRect,
    pub site: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// The frozen boxes as a tree rooted at the whole space.
///
/// Centers at identical coordinates share one site; `alias[i]` is the site
/// of center `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarForest {
    sites: Vec<Point>,
    site_center: Vec<usize>,
    alias: Vec<usize>,
    entries: Vec<ForestEntry>,
    root: usize,
    base_half_side: f64,
}

/// Active boxes at the end of one round's melding.
#[derive(Debug, Clone)]
pub struct RoundSnapshot {
    pub round: u32,
    pub boxes: Vec<(BoxRect, usize)>,
}

#[derive(Debug, Clone)]
struct Active {
    site: usize,
    below: Vec<f64>,
    above: Vec<f64>,
    fresh: bool,
}

impl Active {
    fn rect(&self, y: &[f64]) -> BoxRect {
        BoxRect::half_open(
            y.iter().zip(&self.below).map(|(c, v)| c - v).collect(),
            y.iter().zip(&self.above).map(|(c, w)| c + w).collect(),
        )
    }

    fn scaled(&self, factor: f64) -> Active {
        Active {
            site: self.site,
            below: self.below.iter().map(|v| v * factor).collect(),
            above: self.above.iter().map(|w| w * factor).collect(),
            fresh: self.fresh,
        }
    }
}

/// Collapses duplicate centers: returns distinct sites (first-appearance
/// order), the first center index of each site, and the site of every center.
pub(crate) fn dedupe(centers: &[Point]) -> (Vec<Point>, Vec<usize>, Vec<usize>) {
    let mut sites: Vec<Point> = Vec::new();
    let mut site_center = Vec::new();
    let mut alias = Vec::with_capacity(centers.len());
    for (i, c) in centers.iter().enumerate() {
        match sites.iter().position(|s| s.iter().zip(c).all(|(a, b)| a.to_bits() == b.to_bits() || a == b)) {
            Some(s) => alias.push(s),
            None => {
                sites.push(c.clone());
                site_center.push(i);
                alias.push(sites.len() - 1);
            }
        }
    }
    (sites, site_center, alias)
}

/// Largest power of two not exceeding a quarter of the minimum pairwise
/// L∞ distance between sites.
fn base_half_side(sites: &[Point]) -> f64 {
    let mut delta = f64::INFINITY;
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            let d = sites[i].iter().zip(&sites[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            delta = delta.min(d);
        }
    }
    if !delta.is_finite() {
        return 1.0;
    }
    let quarter = delta / 4.0;
    let mut h = quarter.log2().floor().exp2();
    while h > quarter {
        h /= 2.0;
    }
    h
}

pub fn build_boxes(centers: &[Point]) -> LaminarForest {
    build_boxes_traced(centers).0
}

/// [`build_boxes`] plus the active boxes after every round.
pub fn build_boxes_traced(centers: &[Point]) -> (LaminarForest, Vec<RoundSnapshot>) {
    assert!(!centers.is_empty(), "box construction needs at least one center");
    let dim = centers[0].len();
    let (sites, site_center, alias) = dedupe(centers);
    let h0 = base_half_side(&sites);

    let mut active: Vec<Active> = (0..sites.len())
        .map(|s| Active { site: s, below: vec![h0; dim], above: vec![h0; dim], fresh: false })
        .collect();
    let mut frozen: Vec<(BoxRect, usize)> = Vec::new();
    let mut trace = Vec::new();
    let mut round = 0u32;

    while active.len() > 1 {
        round += 1;
        for a in active.iter_mut() {
            *a = a.scaled(2.0);
            a.fresh = true;
        }
        // `active` stays in id order: melded boxes get fresh ids and go to the back
        while let Some((i, j)) = first_intersecting_pair(&active, &sites) {
            let second = active.remove(j);
            let first = active.remove(i);
            for b in [&first, &second] {
                if b.fresh {
                    frozen.push((b.scaled(0.5).rect(&sites[b.site]), b.site));
                }
            }
            active.push(meld(&first, &second, &sites));
        }
        trace.push(RoundSnapshot {
            round,
            boxes: active.iter().map(|a| (a.rect(&sites[a.site]), a.site)).collect(),
        });
    }
    frozen.push((BoxRect::whole_space(dim), active[0].site));

    let entries = link(frozen);
    let root = entries.len() - 1;
    let forest = LaminarForest { sites, site_center, alias, entries, root, base_half_side: h0 };
    (forest, trace)
}

fn first_intersecting_pair(active: &[Active], sites: &[Point]) -> Option<(usize, usize)> {
    let rects: Vec<BoxRect> = active.iter().map(|a| a.rect(&sites[a.site])).collect();
    for i in 0..rects.len() {
        for j in i + 1..rects.len() {
            if rects[i].intersects(&rects[j]) {
                return Some((i, j));
            }
        }
    }
    None
}

fn meld(first: &Active, second: &Active, sites: &[Point]) -> Active {
    let y = &sites[first.site];
    let a = first.rect(y);
    let b = second.rect(&sites[second.site]);
    let below = (0..y.len()).map(|k| y[k] - a.low[k].min(b.low[k])).collect();
    let above = (0..y.len()).map(|k| a.high[k].max(b.high[k]) - y[k]).collect();
    Active { site: first.site, below, above, fresh: false }
}

/// Parent of each box is the earliest later-frozen box containing it; a
/// strictly larger nested box is always frozen later.
fn link(frozen: Vec<(BoxRect, usize)>) -> Vec<ForestEntry> {
    let n = frozen.len();
    let mut entries: Vec<ForestEntry> =
        frozen.into_iter().map(|(rect, site)| ForestEntry { rect, site, parent: None, children: Vec::new() }).collect();
    for e in 0..n - 1 {
        let p = (e + 1..n).find(|&q| entries[q].rect.contains_box(&entries[e].rect)).unwrap_or(n - 1);
        entries[e].parent = Some(p);
        entries[p].children.push(e);
    }
    entries
}

impl LaminarForest {
    pub fn entries(&self) -> &[ForestEntry] {
        &self.entries
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn site_point(&self, site: usize) -> &[f64] {
        &self.sites[site]
    }

    /// Lowest original center index located at `site`.
    pub fn site_center(&self, site: usize) -> usize {
        self.site_center[site]
    }

    pub fn alias(&self) -> &[usize] {
        &self.alias
    }

    pub fn base_half_side(&self) -> f64 {
        self.base_half_side
    }

    pub fn representative(&self, entry: usize) -> &[f64] {
        &self.sites[self.entries[entry].site]
    }

    /// Index of the inclusion-minimal box containing `p`.
    pub fn smallest_containing(&self, p: &[f64]) -> usize {
        let mut at = self.root;
        'descend: loop {
            for &c in &self.entries[at].children {
                if self.entries[c].rect.contains(p) {
                    at = c;
                    continue 'descend;
                }
            }
            return at;
        }
    }

    /// `R(p)`: squared distance from `p` to the representative of its smallest box.
    pub fn assignment_cost(&self, p: &[f64]) -> f64 {
        squared_distance(p, self.representative(self.smallest_containing(p)))
    }

    /// Any two boxes are nested or disjoint.
    pub fn is_laminar(&self) -> bool {
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                let nested = a.rect.contains_box(&b.rect) || b.rect.contains_box(&a.rect);
                if !nested && a.rect.intersects(&b.rect) {
                    return false;
                }
            }
        }
        true
    }
}

/// Convenience wrapper returning the box and its representative point.
pub fn smallest_containing_box<'a>(forest: &'a LaminarForest, p: &[f64]) -> (&'a BoxRect, &'a [f64]) {
    let e = forest.smallest_containing(p);
    (&forest.entries[e].rect, forest.representative(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair_forest() -> LaminarForest {
        build_boxes(&[vec![0.0], vec![16.0]])
    }

    #[test]
    fn two_centers_on_a_line() {
        let f = pair_forest();
        let got: Vec<(f64, f64, usize)> = f.entries().iter().map(|e| (e.rect.low[0], e.rect.high[0], e.site)).collect();
        assert_eq!(
            got,
            vec![(-8.0, 8.0, 0), (8.0, 24.0, 1), (f64::NEG_INFINITY, f64::INFINITY, 0)]
        );
        assert_eq!(f.entries()[0].parent, Some(2));
        assert_eq!(f.entries()[1].parent, Some(2));
    }

    #[test]
    fn smallest_box_lookups() {
        let f = pair_forest();
        let (b, y) = smallest_containing_box(&f, &[9.0]);
        assert_eq!((b.low[0], b.high[0], y[0]), (8.0, 24.0, 16.0));
        assert_eq!(f.assignment_cost(&[9.0]), 49.0);
        let (b, y) = smallest_containing_box(&f, &[7.0]);
        assert_eq!((b.low[0], b.high[0], y[0]), (-8.0, 8.0, 0.0));
        assert_eq!(f.assignment_cost(&[7.0]), 49.0);
        let (b, y) = smallest_containing_box(&f, &[-100.0]);
        assert!(b.is_whole_space());
        assert_eq!(y[0], 0.0);
        assert_eq!(f.assignment_cost(&[-100.0]), 1e4);
    }

    #[test]
    fn single_center_is_whole_space() {
        let f = build_boxes(&[vec![3.0, 4.0]]);
        assert_eq!(f.entries().len(), 1);
        assert!(f.entries()[0].rect.is_whole_space());
        assert_eq!(f.representative(0), &[3.0, 4.0]);
    }

    #[test]
    fn identical_centers_collapse() {
        let f = build_boxes(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(f.entries().len(), 1);
        assert_eq!(f.alias(), &[0, 0]);
        assert_eq!(f.site_center(0), 0);
        let f = build_boxes(&[vec![5.0], vec![1.0], vec![5.0]]);
        assert_eq!(f.alias(), &[0, 1, 0]);
        assert_eq!(f.sites().len(), 2);
    }

    #[test]
    fn random_forests_are_laminar_and_cover_centers() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let d = rng.random_range(1..=4);
            let n = rng.random_range(1..=20);
            let centers: Vec<Point> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-50..50) as f64).collect()).collect();
            let f = build_boxes(&centers);
            assert!(f.is_laminar());
            assert!(f.entries().len() <= 2 * f.sites().len());
            for (s, site) in f.sites().iter().enumerate() {
                assert!(f.entries().iter().any(|e| e.site == s));
                // a center's smallest box is its own
                assert_eq!(f.entries()[f.smallest_containing(site)].site, s);
                assert_eq!(f.assignment_cost(site), 0.0);
            }
            for e in f.entries() {
                assert!(e.rect.contains(f.site_point(e.site)));
            }
        }
    }
}
