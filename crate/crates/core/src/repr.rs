//! Features of curriculum states: what the learner knows, encoded for the
//! curriculum agent's linear value function.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cmdp::{Cmdp, CurriculumState};
use crate::learner::FeatureMap;
use crate::tilecoder::{normalize_in_place, SparseFeatures, TileCoder, TileIndex, TilingGroup};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ReprKind {
    /// One tiling group per target ground state over its normalized action
    /// values.
    FiniteState,
    /// One tiling group per weight, normalized within its feature group.
    Continuous,
    /// The ordered list of source tasks trained so far, at most `cap` long.
    Naive { cap: usize },
}

impl FromStr for ReprKind {
    type Err = Error;

    /// `finite-state`, `continuous` or `naive:CAP` with CAP in 1..=3.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finite-state" => Ok(ReprKind::FiniteState),
            "continuous" => Ok(ReprKind::Continuous),
            _ => {
                let cap = s
                    .strip_prefix("naive:")
                    .and_then(|c| c.parse().ok())
                    .filter(|c| (1..=3).contains(c))
                    .ok_or_else(|| Error::config(format!("unknown representation {s:?}")))?;
                Ok(ReprKind::Naive { cap })
            }
        }
    }
}

impl fmt::Display for ReprKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReprKind::FiniteState => f.write_str("finite-state"),
            ReprKind::Continuous => f.write_str("continuous"),
            ReprKind::Naive { cap } => write!(f, "naive:{cap}"),
        }
    }
}

impl TryFrom<String> for ReprKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ReprKind> for String {
    fn from(k: ReprKind) -> String {
        k.to_string()
    }
}

/// Tiling of normalized values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReprParams {
    pub tile_width: f64,
    pub num_tilings: usize,
    /// Hash buckets per tiling for the finite-state groups.
    pub buckets: usize,
}

impl Default for ReprParams {
    fn default() -> Self {
        ReprParams {
            tile_width: 0.25,
            num_tilings: 4,
            buckets: 128,
        }
    }
}

impl ReprParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tile_width > 0.0 && self.tile_width <= 1.0)
            || self.num_tilings == 0
            || self.buckets == 0
        {
            return Err(Error::config(
                "tile_width must lie in (0, 1]; num_tilings and buckets must be positive",
            ));
        }
        Ok(())
    }

    fn unit_group(&self, inputs: Vec<usize>, index: TileIndex) -> TilingGroup {
        TilingGroup::uniform(inputs, self.num_tilings, self.tile_width, 0.0, 1.0, index)
    }
}

/// Ordered lists of at most `cap` items drawn from `n`, numbered shortest
/// first and lexicographically within a length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ListCodec {
    pub n: usize,
    pub cap: usize,
}

impl ListCodec {
    /// Number of lists of length `len`.
    fn count(&self, len: usize) -> usize {
        self.n.pow(len as u32)
    }

    /// Number of distinct lists.
    pub fn size(&self) -> usize {
        (0..=self.cap).map(|l| self.count(l)).sum()
    }

    /// Panics if the list is longer than `cap` or an item is out of range.
    pub fn encode(&self, list: &[usize]) -> usize {
        assert!(
            list.len() <= self.cap,
            "list of {} exceeds cap {}",
            list.len(),
            self.cap
        );
        let base: usize = (0..list.len()).map(|l| self.count(l)).sum();
        base + list.iter().fold(0, |acc, &x| {
            assert!(x < self.n, "item {x} out of range");
            acc * self.n + x
        })
    }

    pub fn decode(&self, mut id: usize) -> Vec<usize> {
        let mut len = 0;
        while id >= self.count(len) {
            id -= self.count(len);
            len += 1;
            assert!(len <= self.cap, "id out of range");
        }
        let mut list = vec![0; len];
        for slot in list.iter_mut().rev() {
            *slot = id % self.n;
            id /= self.n;
        }
        list
    }
}

#[derive(Debug)]
enum Encoder {
    FiniteState {
        coder: TileCoder,
        actions: usize,
    },
    Continuous {
        unit: TilingGroup,
        groups: Vec<Vec<Range<usize>>>,
    },
    Naive {
        codec: ListCodec,
        sources: Vec<usize>,
        target: usize,
    },
}

/// Maps curriculum states to sparse features.
#[derive(Debug)]
pub struct Representation {
    kind: ReprKind,
    encoder: Encoder,
    dim: usize,
}

impl Representation {
    pub fn new(kind: ReprKind, params: &ReprParams, cmdp: &Cmdp) -> Result<Self> {
        params.validate()?;
        let (encoder, dim) = match kind {
            ReprKind::FiniteState => {
                let ground = cmdp.ground_states(cmdp.target());
                let actions = cmdp.features().actions().len();
                let groups = (0..ground.len())
                    .map(|s| {
                        let index = TileIndex::Hashed {
                            buckets: params.buckets,
                            seed: s as u64,
                        };
                        params.unit_group((s * actions..(s + 1) * actions).collect(), index)
                    })
                    .collect();
                let coder = TileCoder::new(groups);
                let dim = coder.len();
                (Encoder::FiniteState { coder, actions }, dim)
            }
            ReprKind::Continuous => {
                let unit = params.unit_group(vec![0], TileIndex::Dense);
                let groups = cmdp.features().weight_groups().to_vec();
                let weights: usize = groups.iter().flatten().map(|r| r.len()).sum();
                let dim = weights * unit.size();
                (Encoder::Continuous { unit, groups }, dim)
            }
            ReprKind::Naive { cap } => {
                let target = cmdp.target();
                let sources: Vec<usize> = (0..cmdp.num_tasks()).filter(|&t| t != target).collect();
                let codec = ListCodec {
                    n: sources.len(),
                    cap,
                };
                // Every list again with the target appended.
                let dim = 2 * codec.size();
                (
                    Encoder::Naive {
                        codec,
                        sources,
                        target,
                    },
                    dim,
                )
            }
        };
        Ok(Representation { kind, encoder, dim })
    }

    pub fn kind(&self) -> ReprKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Active features per encoding.
    pub fn active(&self, cmdp: &Cmdp) -> usize {
        match &self.encoder {
            Encoder::FiniteState { coder, .. } => coder.active_per_encoding(),
            Encoder::Continuous { unit, .. } => cmdp.features().dim() * unit.num_tilings(),
            Encoder::Naive { .. } => 1,
        }
    }

    pub fn encode(&self, state: &CurriculumState, cmdp: &Cmdp) -> SparseFeatures {
        let mut active = Vec::new();
        match &self.encoder {
            Encoder::FiniteState { coder, actions } => {
                let mut values = Vec::new();
                cmdp.ground_states(cmdp.target())
                    .action_values(state.knowledge(), &mut values);
                values.chunks_mut(*actions).for_each(normalize_in_place);
                coder.encode_into(&values, &mut active);
            }
            Encoder::Continuous { unit, groups } => {
                let weights = state.knowledge();
                let size = unit.size();
                let mut local = Vec::new();
                let mut slice = Vec::new();
                for g in groups {
                    slice.clear();
                    for r in g {
                        slice.extend_from_slice(&weights[r.clone()]);
                    }
                    normalize_in_place(&mut slice);
                    for (i, &x) in g.iter().flat_map(|r| r.clone()).zip(&slice) {
                        local.clear();
                        unit.tiles(&[x], &mut local);
                        active.extend(local.iter().map(|&t| i * size + t));
                    }
                }
                active.sort_unstable();
            }
            Encoder::Naive { codec, .. } => {
                let (list, in_target) = self.naive_list(state).expect("naive encoder");
                let id = codec.encode(&list) + if in_target { codec.size() } else { 0 };
                active.push(id);
            }
        }
        SparseFeatures::new(active, self.dim)
    }

    /// Source positions (among non-target tasks) chosen before the target,
    /// and whether the target has been chosen.
    fn naive_list(&self, state: &CurriculumState) -> Option<(Vec<usize>, bool)> {
        let Encoder::Naive {
            sources, target, ..
        } = &self.encoder
        else {
            return None;
        };
        let mut list = Vec::new();
        for &t in &state.tasks_so_far {
            if t == *target {
                return Some((list, true));
            }
            list.push(sources.iter().position(|&s| s == t).expect("task in suite"));
        }
        Some((list, false))
    }

    /// Tasks the curriculum agent may choose in `state`; `None` means all.
    /// The naive representation forces the target once the list is full or
    /// the target has been chosen.
    pub fn legal_actions(&self, state: &CurriculumState, num_tasks: usize) -> Option<Vec<bool>> {
        let Encoder::Naive { codec, target, .. } = &self.encoder else {
            return None;
        };
        let (list, in_target) = self.naive_list(state)?;
        if in_target || list.len() >= codec.cap {
            Some((0..num_tasks).map(|t| t == *target).collect())
        } else {
            None
        }
    }
}
