//! Shipping input tuples through a split tree to their destinations.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{reach_above, reach_below, BandSpec, Relation, RelationTag};
use crate::hashing::hash_words;
use crate::optimizer::{LeafMode, SplitTree};

/// A partition a tuple is copied to: a leaf, plus the 1-Bucket cell for small
/// leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Destination {
    pub leaf: usize,
    /// `(row, column)`; present iff the leaf is small.
    pub cell: Option<(u32, u32)>,
}

impl Destination {
    /// Dense ordering key: leaf in the high bits, row-major cell index below.
    pub fn key(&self, cols: u32) -> u128 {
        let cell = self.cell.map_or(0, |(r, c)| r as u64 * cols as u64 + c as u64);
        ((self.leaf as u128) << 64) | cell as u128
    }

    pub fn from_key(key: u128, tree: &SplitTree) -> Self {
        let leaf = (key >> 64) as usize;
        let cell = key as u64;
        let cell = match tree.leaf(leaf).mode {
            LeafMode::Regular => None,
            LeafMode::Small { cols, .. } => Some(((cell / cols as u64) as u32, (cell % cols as u64) as u32)),
        };
        Self { leaf, cell }
    }
}

const SALT_S: u64 = 0x5353_5353;
const SALT_T: u64 = 0x5454_5454;

/// Seeded uniform choice in `0..n` for a tuple of relation `tag` within
/// `scope` (a leaf id or plan id). Independent of routing order.
pub fn bucket_choice(id: u64, tag: RelationTag, scope: u64, seed: u64, n: u32) -> u32 {
    let salt = match tag {
        RelationTag::S => SALT_S,
        RelationTag::T => SALT_T,
    };
    (hash_words(&[id, salt, scope, seed]) % n as u64) as u32
}

/// Appends the 1-Bucket cells of an `rows x cols` grid a tuple goes to:
/// a row and every column for `S`, a column and every row for `T`.
pub fn grid_cells(id: u64, tag: RelationTag, scope: u64, seed: u64, rows: u32, cols: u32, out: &mut Vec<(u32, u32)>) {
    match tag {
        RelationTag::S => {
            let r = bucket_choice(id, tag, scope, seed, rows);
            out.extend((0..cols).map(|c| (r, c)));
        }
        RelationTag::T => {
            let c = bucket_choice(id, tag, scope, seed, cols);
            out.extend((0..rows).map(|r| (r, c)));
        }
    }
}

/// All destinations of one tuple.
pub fn assign_input(coords: &[f64], id: u64, tag: RelationTag, tree: &SplitTree, spec: &BandSpec, seed: u64) -> Vec<Destination> {
    assert_eq!(coords.len(), tree.dims(), "tuple dimension does not match the split tree");
    let lo: Vec<f64> = coords.iter().zip(spec.eps()).map(|(x, e)| reach_below(*x, *e)).collect();
    let hi: Vec<f64> = coords.iter().zip(spec.eps()).map(|(x, e)| reach_above(*x, *e)).collect();
    let mut leaves = Vec::new();
    tree.leaves_for(coords, &lo, &hi, tag, &mut leaves);
    let mut out = Vec::new();
    let mut cells = Vec::new();
    for leaf in leaves {
        match tree.leaf(leaf).mode {
            LeafMode::Regular => out.push(Destination { leaf, cell: None }),
            LeafMode::Small { rows, cols } => {
                cells.clear();
                grid_cells(id, tag, leaf as u64, seed, rows, cols, &mut cells);
                out.extend(cells.iter().map(|&c| Destination { leaf, cell: Some(c) }));
            }
        }
    }
    out
}

/// Tuples (as indices into `S` and `T`) grouped by destination.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Shuffle {
    /// Destination keys in ascending order; only destinations that receive at
    /// least one tuple are present.
    pub keys: Vec<u128>,
    pub s: Vec<Vec<u32>>,
    pub t: Vec<Vec<u32>>,
}

impl Shuffle {
    /// Total number of tuple copies shipped.
    pub fn total_input(&self) -> u64 {
        self.s.iter().chain(&self.t).map(|v| v.len() as u64).sum()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Collects `(destination key, tuple index)` pairs and groups them.
#[derive(Debug, Default)]
pub struct ShuffleBuilder {
    s: Vec<(u128, u32)>,
    t: Vec<(u128, u32)>,
}

impl ShuffleBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, tag: RelationTag, key: u128, index: u32) {
        match tag {
            RelationTag::S => self.s.push((key, index)),
            RelationTag::T => self.t.push((key, index)),
        }
    }

    pub fn finish(mut self) -> Shuffle {
        self.s.sort_unstable();
        self.t.sort_unstable();
        let mut keys: Vec<u128> = self.s.iter().chain(&self.t).map(|p| p.0).collect();
        keys.sort_unstable();
        keys.dedup();
        let group = |pairs: &[(u128, u32)]| {
            let mut lists = vec![Vec::new(); keys.len()];
            let mut k = 0;
            for &(key, idx) in pairs {
                while keys[k] != key {
                    k += 1;
                }
                lists[k].push(idx);
            }
            lists
        };
        let (s, t) = (group(&self.s), group(&self.t));
        Shuffle { keys, s, t }
    }
}

/// Routes both relations through `tree`.
pub fn route_all(s: &Relation, t: &Relation, tree: &SplitTree, spec: &BandSpec, seed: u64) -> Shuffle {
    let d = spec.dims();
    let mut builder = ShuffleBuilder::new();
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    let mut leaves = Vec::new();
    let mut cells = Vec::new();
    for (rel, tag) in [(s, RelationTag::S), (t, RelationTag::T)] {
        for (i, (c, id)) in rel.iter().enumerate() {
            for k in 0..d {
                lo[k] = reach_below(c[k], spec.eps()[k]);
                hi[k] = reach_above(c[k], spec.eps()[k]);
            }
            tree.leaves_for(c, &lo, &hi, tag, &mut leaves);
            for &leaf in &leaves {
                match tree.leaf(leaf).mode {
                    LeafMode::Regular => builder.push(tag, Destination { leaf, cell: None }.key(1), i as u32),
                    LeafMode::Small { rows, cols } => {
                        cells.clear();
                        grid_cells(id, tag, leaf as u64, seed, rows, cols, &mut cells);
                        for &cell in &cells {
                            builder.push(tag, Destination { leaf, cell: Some(cell) }.key(cols), i as u32);
                        }
                    }
                }
            }
        }
    }
    builder.finish()
}
