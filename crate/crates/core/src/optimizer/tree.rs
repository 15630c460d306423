//! Split trees: binary space partitionings whose leaves are join partitions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{is_small, BandSpec, Rect, RelationTag};
use crate::sampling::PartitionStats;
use crate::{Error, Result};

/// Which relation an inner node partitions cleanly.
///
/// A T-split sends each `S`-tuple to the one child containing it and copies
/// every `T`-tuple to all children its ε-range reaches. An S-split does the
/// opposite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SplitKind {
    T,
    S,
}

impl SplitKind {
    /// The relation whose tuples may be copied to both children.
    pub fn duplicated(self) -> RelationTag {
        match self {
            SplitKind::T => RelationTag::T,
            SplitKind::S => RelationTag::S,
        }
    }
}

/// How a leaf distributes its tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafMode {
    /// One partition.
    Regular,
    /// An internal `rows x cols` 1-Bucket grid: each `S`-tuple picks a row and
    /// goes to every column, each `T`-tuple picks a column and goes to every row.
    Small { rows: u32, cols: u32 },
}

impl LeafMode {
    /// Number of partitions the leaf contributes.
    pub fn cells(self) -> usize {
        match self {
            LeafMode::Regular => 1,
            LeafMode::Small { rows, cols } => rows as usize * cols as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub id: usize,
    pub rect: Rect,
    pub mode: LeafMode,
    /// Estimates recorded at optimization time; zero for hand-built trees.
    pub stats: PartitionStats,
}

/// Inner node; `left` receives the points with `x[dim] < value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inner {
    pub dim: usize,
    pub value: f64,
    pub kind: SplitKind,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Inner(Inner),
    Leaf(Leaf),
}

/// A validated split tree stored as an arena with the root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTree {
    dims: usize,
    nodes: Vec<Node>,
    leaf_nodes: Vec<usize>,
}

impl SplitTree {
    /// A tree with a single regular leaf covering the whole space.
    pub fn single_leaf(dims: usize) -> Self {
        let leaf = Leaf { id: 0, rect: Rect::root(dims), mode: LeafMode::Regular, stats: PartitionStats::default() };
        Self { dims, nodes: vec![Node::Leaf(leaf)], leaf_nodes: vec![0] }
    }

    /// Checks structure and geometry: every node but the root has exactly one
    /// parent, children rects are the split halves of their parent, split
    /// values lie strictly inside the parent rect, leaf ids are `0..leaves`.
    pub fn from_nodes(dims: usize, nodes: Vec<Node>) -> Result<Self> {
        if dims == 0 || nodes.is_empty() {
            return Err(Error::InvalidPlan("split tree needs at least one node and one dimension".into()));
        }
        let mut seen = vec![false; nodes.len()];
        let mut leaf_nodes = vec![usize::MAX; nodes.len()];
        let mut leaf_count = 0usize;
        let mut stack = vec![(0usize, Rect::root(dims))];
        seen[0] = true;
        while let Some((n, rect)) = stack.pop() {
            match &nodes[n] {
                Node::Leaf(leaf) => {
                    if leaf.rect != rect {
                        return Err(Error::InvalidPlan(format!("leaf {} rect does not match its position in the tree", leaf.id)));
                    }
                    if leaf.id >= nodes.len() || leaf_nodes[leaf.id] != usize::MAX {
                        return Err(Error::InvalidPlan(format!("leaf id {} is out of range or repeated", leaf.id)));
                    }
                    if let LeafMode::Small { rows, cols } = leaf.mode {
                        if rows == 0 || cols == 0 {
                            return Err(Error::InvalidPlan(format!("leaf {} has an empty 1-Bucket grid", leaf.id)));
                        }
                    }
                    leaf_nodes[leaf.id] = n;
                    leaf_count += 1;
                }
                Node::Inner(inner) => {
                    if inner.dim >= dims || !(rect.lo[inner.dim] < inner.value && inner.value < rect.hi[inner.dim]) {
                        return Err(Error::InvalidPlan(format!("node {n} splits outside its rect")));
                    }
                    for child in [inner.left, inner.right] {
                        if child >= nodes.len() || seen[child] {
                            return Err(Error::InvalidPlan(format!("node {n} has an invalid or shared child {child}")));
                        }
                        seen[child] = true;
                    }
                    let (l, r) = rect.split(inner.dim, inner.value);
                    stack.push((inner.right, r));
                    stack.push((inner.left, l));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidPlan("tree contains unreachable nodes".into()));
        }
        leaf_nodes.truncate(leaf_count);
        if leaf_nodes.iter().any(|n| *n == usize::MAX) {
            return Err(Error::InvalidPlan("leaf ids are not contiguous from 0".into()));
        }
        Ok(Self { dims, nodes, leaf_nodes })
    }

    /// Additionally checks that 1-Bucket leaves are small under `spec`.
    pub fn validate_for(&self, spec: &BandSpec) -> Result<()> {
        if spec.dims() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, got: spec.dims() });
        }
        for leaf in self.leaves() {
            if matches!(leaf.mode, LeafMode::Small { .. }) && !is_small(&leaf.rect, spec) {
                return Err(Error::InvalidPlan(format!("leaf {} uses a 1-Bucket grid but is not small", leaf.id)));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Node> {
        self.nodes
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_nodes.len()
    }

    pub fn leaf(&self, id: usize) -> &Leaf {
        match &self.nodes[self.leaf_nodes[id]] {
            Node::Leaf(l) => l,
            Node::Inner(_) => unreachable!("leaf index points at an inner node"),
        }
    }

    /// Leaves in id order.
    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> + '_ {
        (0..self.num_leaves()).map(move |i| self.leaf(i))
    }

    /// Number of inner nodes.
    pub fn num_splits(&self) -> usize {
        self.nodes.len() - self.num_leaves()
    }

    /// Leaf ids a tuple of relation `tag` is sent to. `lo`/`hi` are the
    /// tuple's ε-range bounds (see [`crate::geometry::eps_range`]).
    pub fn leaves_for(&self, coords: &[f64], lo: &[f64], hi: &[f64], tag: RelationTag, out: &mut Vec<usize>) {
        out.clear();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            match &self.nodes[n] {
                Node::Leaf(leaf) => out.push(leaf.id),
                Node::Inner(inner) => {
                    if inner.kind.duplicated() == tag {
                        // Push right first so leaves come out left to right.
                        if hi[inner.dim] >= inner.value {
                            stack.push(inner.right);
                        }
                        if lo[inner.dim] < inner.value {
                            stack.push(inner.left);
                        }
                    } else if coords[inner.dim] < inner.value {
                        stack.push(inner.left);
                    } else {
                        stack.push(inner.right);
                    }
                }
            }
        }
    }

    /// The single leaf that receives both tuples of a joining pair.
    pub fn leaf_of_pair(&self, s: &[f64], t: &[f64]) -> usize {
        let mut n = 0;
        loop {
            match &self.nodes[n] {
                Node::Leaf(leaf) => return leaf.id,
                Node::Inner(inner) => {
                    // The partitioned side decides; the duplicated side follows it.
                    let x = match inner.kind {
                        SplitKind::T => s[inner.dim],
                        SplitKind::S => t[inner.dim],
                    };
                    n = if x < inner.value { inner.left } else { inner.right };
                }
            }
        }
    }

    /// The leaf whose rect contains `x`.
    pub fn leaf_containing(&self, x: &[f64]) -> usize {
        let mut n = 0;
        loop {
            match &self.nodes[n] {
                Node::Leaf(leaf) => return leaf.id,
                Node::Inner(inner) => n = if x[inner.dim] < inner.value { inner.left } else { inner.right },
            }
        }
    }
}
