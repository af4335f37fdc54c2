//! Multi-tiling grid feature encoder.
//!
//! A [`TilingGroup`] lays `num_tilings` grids over a subset of the input
//! variables. Tiling `t` is displaced by `t / num_tilings` of a tile width
//! along every dimension. Each tiling activates exactly one tile, so a
//! group always contributes `num_tilings` active features, and the tiles of
//! different tilings and groups occupy disjoint index ranges.
//!
//! Tile indices come from one of three schemes: dense mixed-radix
//! arithmetic, a seeded hash into a fixed number of buckets per tiling, or
//! a lookup table built from sample inputs (collision-free, with one
//! overflow slot per tiling for tiles never seen while building).

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Sorted active feature indices of a binary feature vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SparseFeatures {
    active: Vec<usize>,
    len: usize,
}

impl SparseFeatures {
    /// Panics unless `active` is strictly increasing and below `len`.
    pub fn new(active: Vec<usize>, len: usize) -> Self {
        assert!(
            active.windows(2).all(|w| w[0] < w[1]),
            "active indices must be strictly increasing"
        );
        assert!(active.last().is_none_or(|&i| i < len), "index out of range");
        SparseFeatures { active, len }
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of active indices the two vectors have in common.
    pub fn shared(&self, other: &SparseFeatures) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.active.len() && j < other.active.len() {
            match self.active[i].cmp(&other.active[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

#[derive(Clone, Debug)]
pub enum TileIndex {
    Dense,
    Hashed { buckets: usize, seed: u64 },
    Lookup(Arc<LookupTable>),
}

/// Interned tile coordinates, one map per tiling.
#[derive(Debug)]
pub struct LookupTable {
    maps: Vec<HashMap<Box<[i64]>, usize>>,
    /// Slots per tiling: the largest map plus one overflow slot.
    stride: usize,
}

impl LookupTable {
    pub fn entries(&self) -> usize {
        self.maps.iter().map(HashMap::len).sum()
    }
}

#[derive(Clone, Debug)]
pub struct TilingGroup {
    inputs: Vec<usize>,
    num_tilings: usize,
    widths: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    tiles_per_dim: Vec<usize>,
    index: TileIndex,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl TilingGroup {
    /// A group over the raw variables `inputs`, each clamped to
    /// `[lower, upper]` and cut into tiles of the matching width.
    ///
    /// Panics if the per-dimension slices disagree in length, if a width is
    /// not positive, or if `num_tilings` is zero.
    pub fn new(
        inputs: Vec<usize>,
        num_tilings: usize,
        widths: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        index: TileIndex,
    ) -> Self {
        let d = inputs.len();
        assert!(d > 0 && widths.len() == d && lower.len() == d && upper.len() == d);
        assert!(num_tilings > 0, "a group needs at least one tiling");
        assert!(widths.iter().all(|&w| w > 0.0 && w.is_finite()));
        assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        let tiles_per_dim = (0..d)
            .map(|j| {
                let span = upper[j] - lower[j];
                let max_offset = widths[j] * (num_tilings - 1) as f64 / num_tilings as f64;
                ((span + max_offset) / widths[j]).floor() as usize + 1
            })
            .collect();
        if let TileIndex::Hashed { buckets, .. } = index {
            assert!(buckets > 0);
        }
        TilingGroup {
            inputs,
            num_tilings,
            widths,
            lower,
            upper,
            tiles_per_dim,
            index,
        }
    }

    /// Same geometry for every dimension.
    pub fn uniform(
        inputs: Vec<usize>,
        num_tilings: usize,
        width: f64,
        lower: f64,
        upper: f64,
        index: TileIndex,
    ) -> Self {
        let d = inputs.len();
        Self::new(
            inputs,
            num_tilings,
            vec![width; d],
            vec![lower; d],
            vec![upper; d],
            index,
        )
    }

    /// Replaces the index scheme with a lookup table holding every tile any
    /// of `samples` (group-local input vectors) activates.
    pub fn with_lookup<'a>(mut self, samples: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut seen: Vec<BTreeSet<Vec<i64>>> = vec![BTreeSet::new(); self.num_tilings];
        let mut coords = Vec::new();
        for sample in samples {
            for (t, set) in seen.iter_mut().enumerate() {
                self.coords(sample, t, &mut coords);
                if !set.contains(coords.as_slice()) {
                    set.insert(coords.clone());
                }
            }
        }
        let stride = seen.iter().map(BTreeSet::len).max().unwrap_or(0) + 1;
        let maps = seen
            .into_iter()
            .map(|set| {
                set.into_iter()
                    .enumerate()
                    .map(|(i, c)| (c.into_boxed_slice(), i))
                    .collect()
            })
            .collect();
        self.index = TileIndex::Lookup(Arc::new(LookupTable { maps, stride }));
        self
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn num_tilings(&self) -> usize {
        self.num_tilings
    }

    pub fn dims(&self) -> usize {
        self.inputs.len()
    }

    pub fn index(&self) -> &TileIndex {
        &self.index
    }

    fn tiles_per_tiling(&self) -> usize {
        match &self.index {
            TileIndex::Dense => self.tiles_per_dim.iter().product(),
            TileIndex::Hashed { buckets, .. } => *buckets,
            TileIndex::Lookup(table) => table.stride,
        }
    }

    /// Number of features this group spans.
    pub fn size(&self) -> usize {
        self.num_tilings * self.tiles_per_tiling()
    }

    /// Tile coordinates of `input` in tiling `t`. Returns whether any value
    /// had to be clamped.
    fn coords(&self, input: &[f64], t: usize, out: &mut Vec<i64>) -> bool {
        out.clear();
        let mut clamped = false;
        let frac = t as f64 / self.num_tilings as f64;
        for (j, &raw) in input[..self.inputs.len()].iter().enumerate() {
            let mut x = raw;
            if !(x >= self.lower[j] && x <= self.upper[j]) {
                clamped = true;
                x = if x.is_nan() {
                    self.lower[j]
                } else {
                    x.clamp(self.lower[j], self.upper[j])
                };
            }
            let w = self.widths[j];
            out.push(((x - self.lower[j] + frac * w) / w).floor() as i64);
        }
        clamped
    }

    /// Pushes the group-local index of the active tile of every tiling,
    /// given the group's own input vector. Returns whether anything was
    /// clamped.
    pub fn tiles(&self, input: &[f64], out: &mut Vec<usize>) -> bool {
        debug_assert_eq!(input.len(), self.inputs.len());
        let per = self.tiles_per_tiling();
        let mut coords = Vec::with_capacity(input.len());
        let mut clamped = false;
        for t in 0..self.num_tilings {
            clamped |= self.coords(input, t, &mut coords);
            let local = match &self.index {
                TileIndex::Dense => coords
                    .iter()
                    .zip(&self.tiles_per_dim)
                    .fold(0usize, |acc, (&c, &n)| acc * n + c as usize),
                TileIndex::Hashed { buckets, seed } => {
                    let h = coords
                        .iter()
                        .fold(splitmix(seed ^ t as u64), |h, &c| splitmix(h ^ c as u64));
                    (h % *buckets as u64) as usize
                }
                TileIndex::Lookup(table) => table.maps[t]
                    .get(coords.as_slice())
                    .copied()
                    .unwrap_or(table.stride - 1),
            };
            out.push(t * per + local);
        }
        clamped
    }
}

/// A list of tiling groups laid side by side in one feature space.
#[derive(Debug)]
pub struct TileCoder {
    groups: Vec<TilingGroup>,
    offsets: Vec<usize>,
    len: usize,
    clamped: AtomicU64,
}

impl Clone for TileCoder {
    fn clone(&self) -> Self {
        TileCoder {
            groups: self.groups.clone(),
            offsets: self.offsets.clone(),
            len: self.len,
            clamped: AtomicU64::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl TileCoder {
    pub fn new(groups: Vec<TilingGroup>) -> Self {
        let mut offsets = Vec::with_capacity(groups.len());
        let mut len = 0;
        for g in &groups {
            offsets.push(len);
            len += g.size();
        }
        TileCoder {
            groups,
            offsets,
            len,
            clamped: AtomicU64::new(0),
        }
    }

    pub fn groups(&self) -> &[TilingGroup] {
        &self.groups
    }

    /// First feature index of group `g`.
    pub fn offset(&self, g: usize) -> usize {
        self.offsets[g]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn active_per_encoding(&self) -> usize {
        self.groups.iter().map(TilingGroup::num_tilings).sum()
    }

    /// How many encodings so far had at least one value clamped into range.
    pub fn clamped_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    /// Appends the global active indices for `raw` to `out`, in increasing
    /// order.
    pub fn encode_into(&self, raw: &[f64], out: &mut Vec<usize>) {
        let mut input = Vec::new();
        let mut clamped = false;
        for (g, offset) in self.groups.iter().zip(&self.offsets) {
            input.clear();
            input.extend(g.inputs.iter().map(|&i| raw[i]));
            let start = out.len();
            clamped |= g.tiles(&input, out);
            out[start..].iter_mut().for_each(|i| *i += offset);
        }
        if clamped {
            self.clamped.fetch_add(1, Ordering::Relaxed);
        }
    }

    /// Panics if `raw` does not cover every group's inputs.
    pub fn encode(&self, raw: &[f64]) -> SparseFeatures {
        let mut active = Vec::with_capacity(self.active_per_encoding());
        self.encode_into(raw, &mut active);
        SparseFeatures::new(active, self.len)
    }
}

/// Min-max normalization into `[0, 1]`; a constant vector maps to 0.5.
///
/// Panics on an empty slice.
pub fn normalize_group(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    normalize_in_place(&mut out);
    out
}

pub fn normalize_in_place(values: &mut [f64]) {
    assert!(!values.is_empty(), "cannot normalize an empty group");
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    if span > 0.0 && span.is_finite() {
        values
            .iter_mut()
            .for_each(|v| *v = ((*v - lo) / span).clamp(0.0, 1.0));
    } else {
        values.iter_mut().for_each(|v| *v = 0.5);
    }
}
