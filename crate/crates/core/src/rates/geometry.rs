//! Rectangle families and the overlapping-pair splitting.
//!
//! Level k works at scale l_k = (2-eps)^(k/d). The family F_k consists of all
//! lattice rectangles whose sorted side lengths fit, slot by slot, inside
//! [0, l_{k+1}] x ... x [0, l_{k+d}]. A rectangle that is in F_k but not in
//! F_{k-1} can be written as a slightly overlapping union of two rectangles
//! of F_{k-1} in s_k = floor(l_k^(1/3)) different ways whose overlaps are
//! pairwise disjoint and whose complements stay delta_k = (eps/4) sqrt(l_k)
//! apart. Cuts are placed orthogonally to the longest axis, uniformly spread;
//! every constructed family is re-verified on output.

use crate::error::{Error, Result};
use crate::model::region::{Region, Site, MAX_DIM};

/// Scale data for one level of the recursion.
#[derive(Clone, Copy, Debug)]
pub struct GeometryLevel {
    pub k: u32,
    pub dim: u32,
    pub eps: f64,
    /// l_k = (2 - eps)^(k/d)
    pub scale_length: f64,
    /// s_k = floor(l_k^(1/3)): number of overlapping pairs at this level.
    pub pair_count: u32,
    /// delta_k = (eps/4) sqrt(l_k): required complement separation.
    pub separation: f64,
}

/// Builds the level data; errors when eps is outside (0, 1) or d is invalid.
pub fn geometry_level(k: u32, dim: u32, eps: f64) -> Result<GeometryLevel> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    if dim == 0 || dim as usize > MAX_DIM {
        return Err(Error::invalid(format!("dimension must be in 1..={MAX_DIM}, got {dim}")));
    }
    let scale_length = scale(k as i64, dim, eps);
    Ok(GeometryLevel {
        k,
        dim,
        eps,
        scale_length,
        pair_count: scale_length.powf(1.0 / 3.0).floor() as u32,
        separation: eps / 4.0 * scale_length.sqrt(),
    })
}

/// l_k for possibly negative k (used by membership tests at level -1).
fn scale(k: i64, dim: u32, eps: f64) -> f64 {
    (2.0 - eps).powf(k as f64 / dim as f64)
}

/// Smallest level k whose family contains the cube [-L, L]^d, i.e. the
/// smallest k with 2L <= l_{k+1}.
pub fn level_for_cube(half_side: u64, dim: u32, eps: f64) -> Result<u32> {
    if half_side == 0 {
        return Err(Error::invalid("cube half side must be at least 1"));
    }
    geometry_level(0, dim, eps)?; // validates eps and dim
    let target = 2.0 * half_side as f64;
    let mut k = 0u32;
    while scale(k as i64 + 1, dim, eps) < target {
        k += 1;
        if k > 100_000 {
            return Err(Error::invalid("level search did not terminate"));
        }
    }
    Ok(k)
}

/// An axis-aligned box of lattice sites, corners inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    pub dim: u32,
    pub lo: [i64; 3],
    pub hi: [i64; 3],
}

impl LatticeBox {
    pub fn new(dim: u32, lo: [i64; 3], hi: [i64; 3]) -> Result<Self> {
        if dim == 0 || dim as usize > MAX_DIM {
            return Err(Error::invalid("box dimension out of range"));
        }
        for a in 0..dim as usize {
            if lo[a] > hi[a] {
                return Err(Error::invalid("box has empty side"));
            }
        }
        let mut lo = lo;
        let mut hi = hi;
        for a in dim as usize..3 {
            lo[a] = 0;
            hi[a] = 0;
        }
        Ok(LatticeBox { dim, lo, hi })
    }

    /// Geometric side length per axis (sites minus one).
    pub fn side_lengths(&self) -> Vec<f64> {
        (0..self.dim as usize).map(|a| (self.hi[a] - self.lo[a]) as f64).collect()
    }

    pub fn site_count(&self) -> u64 {
        (0..self.dim as usize).map(|a| (self.hi[a] - self.lo[a] + 1) as u64).product()
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        (0..self.dim as usize).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }

    /// Membership in the family F_k: sorted side lengths fit the sorted
    /// slot bounds l_{k+1} .. l_{k+d}. Uses real thresholds with a tiny
    /// floating slack.
    pub fn in_family(&self, k: i64, eps: f64) -> bool {
        let mut lengths = self.side_lengths();
        lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lengths.iter().enumerate().all(|(i, &m)| {
            let bound = scale(k + i as i64 + 1, self.dim, eps);
            m <= bound * (1.0 + 1e-12) + 1e-12
        })
    }

    /// Minimal Euclidean distance between the site sets of two boxes.
    pub fn distance_to(&self, other: &LatticeBox) -> f64 {
        let mut sq = 0i64;
        for a in 0..self.dim as usize {
            let gap = (other.lo[a] - self.hi[a]).max(self.lo[a] - other.hi[a]).max(0);
            sq += gap * gap;
        }
        (sq as f64).sqrt()
    }

    pub fn intersect(&self, other: &LatticeBox) -> Option<LatticeBox> {
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for a in 0..self.dim as usize {
            lo[a] = self.lo[a].max(other.lo[a]);
            hi[a] = self.hi[a].min(other.hi[a]);
            if lo[a] > hi[a] {
                return None;
            }
        }
        Some(LatticeBox { dim: self.dim, lo, hi })
    }

    /// Materialise as a site region (tests and exhaustive scans only).
    pub fn to_region(&self) -> Result<Region> {
        Region::rectangle(self.dim as usize, self.lo, self.hi)
    }

    pub fn sites(&self) -> Vec<Site> {
        self.to_region().map(|r| r.sites().to_vec()).unwrap_or_default()
    }
}

/// The largest integer rectangle of the family F_k: floor(l_{k+i}) + 1 sites
/// along axis i.
pub fn max_family_box(k: u32, dim: u32, eps: f64) -> Result<LatticeBox> {
    geometry_level(k, dim, eps)?;
    let mut hi = [0i64; 3];
    for a in 0..dim as usize {
        hi[a] = scale(k as i64 + a as i64 + 1, dim, eps).floor() as i64;
    }
    LatticeBox::new(dim, [0; 3], hi)
}

/// Site count of the largest integer rectangle in F_k.
pub fn max_family_volume(k: u32, dim: u32, eps: f64) -> Result<u64> {
    Ok(max_family_box(k, dim, eps)?.site_count())
}

/// One splitting of a parent rectangle into two overlapping halves.
/// At small scales the integer snap can force the overlap to be empty
/// (`None`); separation then equals 1, which still meets delta_k <= 1.
#[derive(Clone, Debug)]
pub struct RectanglePair {
    pub parent: LatticeBox,
    pub first: LatticeBox,
    pub second: LatticeBox,
    pub overlap: Option<LatticeBox>,
    pub cut_axis: usize,
}

impl RectanglePair {
    /// Complement separation d(parent \ first, parent \ second); infinite
    /// when one complement is empty.
    pub fn complement_separation(&self) -> f64 {
        let a = self.cut_axis;
        // parent \ first: coordinates above the first half; parent \ second: below.
        let above_lo = self.first.hi[a] + 1;
        let below_hi = self.second.lo[a] - 1;
        if above_lo > self.parent.hi[a] || below_hi < self.parent.lo[a] {
            return f64::INFINITY;
        }
        (above_lo - below_hi) as f64
    }

    fn verify(&self, level: &GeometryLevel) -> Result<()> {
        let k = level.k;
        let fail = |reason: String| Err(Error::GeometryInfeasible { k, reason });
        // (i) the two halves cover the parent
        let a = self.cut_axis;
        let covers = self.parent.contains_box(&self.first)
            && self.parent.contains_box(&self.second)
            && self.first.lo[a] == self.parent.lo[a]
            && self.second.hi[a] == self.parent.hi[a]
            && self.second.lo[a] <= self.first.hi[a] + 1;
        if !covers {
            return fail("halves do not cover the parent".into());
        }
        // (ii) complements separated by at least delta_k
        if self.complement_separation() < level.separation {
            return fail(format!(
                "complement separation {} below required {}",
                self.complement_separation(),
                level.separation
            ));
        }
        // halves belong to the previous family
        if !self.first.in_family(k as i64 - 1, level.eps)
            || !self.second.in_family(k as i64 - 1, level.eps)
        {
            return fail("half does not belong to the previous family".into());
        }
        Ok(())
    }
}

/// Splits `parent` (which must lie in F_k but not F_{k-1}) into s_k
/// overlapping pairs satisfying the level-k geometry.
pub fn construct_overlap_pairs(
    parent: &LatticeBox,
    k: u32,
    eps: f64,
) -> Result<Vec<RectanglePair>> {
    let level = geometry_level(k, parent.dim, eps)?;
    if !parent.in_family(k as i64, eps) || parent.in_family(k as i64 - 1, eps) {
        return Err(Error::invalid(format!(
            "parent box must lie in F_{k} but not F_{}",
            k as i64 - 1
        )));
    }
    let lengths = parent.side_lengths();
    let cut_axis = lengths
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();

    // Largest cut-side length a half may have while staying in F_{k-1}.
    let mut others: Vec<f64> =
        (0..parent.dim as usize).filter(|&a| a != cut_axis).map(|a| lengths[a]).collect();
    others.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cap = max_cut_length(&others, k as i64 - 1, parent.dim, eps).ok_or_else(|| {
        Error::GeometryInfeasible { k, reason: "non-cut sides do not fit the previous family".into() }
    })?;
    let cap = cap.floor() as i64;

    // Overlap width: w + 1 >= delta_k keeps the complements separated. Prefer
    // a genuine overlap; when the scale is too tight and delta_k <= 1, an
    // empty overlap (separation exactly 1) still satisfies the geometry.
    let w_wanted = (level.separation.ceil() as i64 - 1).max(1);
    let mut attempt = place_pairs(parent, &level, cut_axis, cap, w_wanted);
    if attempt.is_err() && w_wanted == 1 && level.separation <= 1.0 {
        attempt = place_pairs(parent, &level, cut_axis, cap, 0);
    }
    let pairs = attempt?;

    // (iii) distinct pairs have disjoint overlaps
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if let (Some(a), Some(b)) = (&pairs[i].overlap, &pairs[j].overlap) {
                if a.intersect(b).is_some() {
                    return Err(Error::GeometryInfeasible {
                        k,
                        reason: format!("overlaps of pairs {i} and {j} intersect"),
                    });
                }
            }
        }
    }
    Ok(pairs)
}

/// Places s_k cut positions with overlap width `w`, uniformly spread, and
/// verifies each resulting pair.
fn place_pairs(
    parent: &LatticeBox,
    level: &GeometryLevel,
    cut_axis: usize,
    cap: i64,
    w: i64,
) -> Result<Vec<RectanglePair>> {
    let k = level.k;
    let s = level.pair_count.max(1) as i64;
    let n = parent.hi[cut_axis] - parent.lo[cut_axis] + 1; // sites along the cut

    // Offsets o (relative to parent.lo) of the second half's start: the
    // halves are [0, o+w-1] and [o, n-1]; both must respect the cap and both
    // complements must be nonempty.
    let o_min = 1.max(n - 1 - cap);
    let o_max = (n - 1 - w).min(cap - w + 1);
    let spacing = w.max(1);
    if o_max < o_min || (s - 1) * spacing > o_max - o_min {
        return Err(Error::GeometryInfeasible {
            k,
            reason: format!(
                "cannot host {s} disjoint overlaps of width {w} in offsets [{o_min}, {o_max}]"
            ),
        });
    }

    let slack = (o_max - o_min) - (s - 1) * spacing;
    let mut pairs = Vec::with_capacity(s as usize);
    for i in 0..s {
        let spread = if s == 1 { slack / 2 } else { i * slack / (s - 1) };
        let o = o_min + i * spacing + spread;
        let lo_cut = parent.lo[cut_axis];
        let mut first = *parent;
        first.hi[cut_axis] = lo_cut + o + w - 1;
        let mut second = *parent;
        second.lo[cut_axis] = lo_cut + o;
        let overlap = if w == 0 { None } else { first.intersect(&second) };
        if w > 0 && overlap.is_none() {
            return Err(Error::GeometryInfeasible {
                k,
                reason: "constructed halves do not overlap".into(),
            });
        }
        let pair = RectanglePair { parent: *parent, first, second, overlap, cut_axis };
        pair.verify(level)?;
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Largest cut-side length that, together with the given sorted side lengths,
/// still fits the family at level `k`. None when the other sides alone do
/// not fit.
fn max_cut_length(others_sorted: &[f64], k: i64, dim: u32, eps: f64) -> Option<f64> {
    let slots: Vec<f64> = (0..dim as usize).map(|i| scale(k + i as i64 + 1, dim, eps)).collect();
    let fits = |m: f64, bound: f64| m <= bound * (1.0 + 1e-12) + 1e-12;
    // Try to reserve slot j for the cut side, largest bound first.
    for j in (0..slots.len()).rev() {
        let mut ok = true;
        let mut oi = 0;
        for (si, &bound) in slots.iter().enumerate() {
            if si == j {
                continue;
            }
            if oi < others_sorted.len() {
                if fits(others_sorted[oi], bound) {
                    oi += 1;
                } else {
                    ok = false;
                    break;
                }
            }
        }
        if ok && oi == others_sorted.len() {
            return Some(slots[j]);
        }
    }
    None
}
