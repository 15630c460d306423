//! JSON plan files.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! plan read back routes every tuple the same way as the plan that was
//! written. Split-tree leaf rectangles are not stored; they are rebuilt from
//! the split values.

use std::path::Path;

use anyhow::{bail, Context};
use bandjoin_core::baselines::{GridPlan, OneBucketPlan, QuantilePlan};
use bandjoin_core::optimizer::{Inner, Leaf, LeafMode, Node, SplitKind, SplitTree};
use bandjoin_core::sampling::PartitionStats;
use bandjoin_core::{Plan, Rect};
use serde::{Deserialize, Serialize};

use crate::config::{Eps, Method};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub format_version: u32,
    pub method: Method,
    pub workers: usize,
    pub eps: Vec<Eps>,
    pub plan: PlanDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlanDoc {
    SplitTree { dims: usize, nodes: Vec<NodeDoc> },
    OneBucket { rows: u32, cols: u32 },
    Grid { multiplier: u32, anchor: Vec<f64>, width: Vec<f64>, cells: Vec<u64> },
    Quantile { size_per_block: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NodeDoc {
    Inner { dim: usize, value: f64, split: SplitDoc, left: usize, right: usize },
    Leaf { id: usize, mode: ModeDoc, est_s: f64, est_t: f64, est_o: f64, load: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitDoc {
    T,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModeDoc {
    Regular,
    Small { rows: u32, cols: u32 },
}

impl PlanDoc {
    pub fn from_plan(plan: &Plan) -> Self {
        match plan {
            Plan::SplitTree(tree) => PlanDoc::SplitTree { dims: tree.dims(), nodes: tree.nodes().iter().map(node_doc).collect() },
            Plan::OneBucket(p) => PlanDoc::OneBucket { rows: p.rows, cols: p.cols },
            Plan::Grid(g) => PlanDoc::Grid { multiplier: g.multiplier, anchor: g.anchor.clone(), width: g.width.clone(), cells: g.cells.clone() },
            Plan::Quantile(q) => PlanDoc::Quantile { size_per_block: q.size_per_block },
        }
    }

    pub fn to_plan(&self) -> anyhow::Result<Plan> {
        Ok(match self {
            PlanDoc::SplitTree { dims, nodes } => Plan::SplitTree(build_tree(*dims, nodes)?),
            PlanDoc::OneBucket { rows, cols } => Plan::OneBucket(OneBucketPlan { rows: *rows, cols: *cols }),
            PlanDoc::Grid { multiplier, anchor, width, cells } => {
                Plan::Grid(GridPlan { multiplier: *multiplier, anchor: anchor.clone(), width: width.clone(), cells: cells.clone() })
            }
            PlanDoc::Quantile { size_per_block } => Plan::Quantile(QuantilePlan { size_per_block: *size_per_block }),
        })
    }
}

fn node_doc(node: &Node) -> NodeDoc {
    match node {
        Node::Inner(i) => NodeDoc::Inner {
            dim: i.dim,
            value: i.value,
            split: match i.kind {
                SplitKind::T => SplitDoc::T,
                SplitKind::S => SplitDoc::S,
            },
            left: i.left,
            right: i.right,
        },
        Node::Leaf(l) => NodeDoc::Leaf {
            id: l.id,
            mode: match l.mode {
                LeafMode::Regular => ModeDoc::Regular,
                LeafMode::Small { rows, cols } => ModeDoc::Small { rows, cols },
            },
            est_s: l.stats.est_s,
            est_t: l.stats.est_t,
            est_o: l.stats.est_o,
            load: l.stats.load,
        },
    }
}

fn build_tree(dims: usize, docs: &[NodeDoc]) -> anyhow::Result<SplitTree> {
    if dims == 0 || docs.is_empty() {
        bail!("split tree needs at least one node and one dimension");
    }
    // Rects follow from the splits on the path from the root; `from_nodes`
    // then checks the structure.
    let mut rects: Vec<Option<Rect>> = vec![None; docs.len()];
    rects[0] = Some(Rect::root(dims));
    let mut stack = vec![0usize];
    let mut visited = 0usize;
    while let Some(n) = stack.pop() {
        visited += 1;
        if visited > docs.len() {
            bail!("split tree contains a cycle");
        }
        if let NodeDoc::Inner { dim, value, left, right, .. } = &docs[n] {
            let rect = rects[n].clone().expect("visited nodes have rects");
            if *dim >= dims || *left >= docs.len() || *right >= docs.len() || !(rect.lo[*dim] < *value && *value < rect.hi[*dim]) {
                bail!("node {n} has an invalid split or child index");
            }
            let (l, r) = rect.split(*dim, *value);
            rects[*left] = Some(l);
            rects[*right] = Some(r);
            stack.push(*right);
            stack.push(*left);
        }
    }
    let mut nodes = Vec::with_capacity(docs.len());
    for (n, doc) in docs.iter().enumerate() {
        nodes.push(match *doc {
            NodeDoc::Inner { dim, value, split, left, right } => Node::Inner(Inner {
                dim,
                value,
                kind: match split {
                    SplitDoc::T => SplitKind::T,
                    SplitDoc::S => SplitKind::S,
                },
                left,
                right,
            }),
            NodeDoc::Leaf { id, mode, est_s, est_t, est_o, load } => Node::Leaf(Leaf {
                id,
                rect: rects[n].clone().with_context(|| format!("node {n} is unreachable"))?,
                mode: match mode {
                    ModeDoc::Regular => LeafMode::Regular,
                    ModeDoc::Small { rows, cols } => LeafMode::Small { rows, cols },
                },
                stats: PartitionStats { est_s, est_t, est_o, load },
            }),
        });
    }
    Ok(SplitTree::from_nodes(dims, nodes)?)
}

impl PlanFile {
    pub fn new(method: Method, workers: usize, eps: &[f64], plan: &Plan) -> Self {
        Self { format_version: FORMAT_VERSION, method, workers, eps: eps.iter().map(|e| Eps::from_value(*e)).collect(), plan: PlanDoc::from_plan(plan) }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let file: PlanFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            bail!("unsupported plan format version {} (expected {FORMAT_VERSION})", file.format_version);
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_json()).with_context(|| format!("cannot write plan {}", path.display()))
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read plan {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid plan file {}", path.display()))
    }
}
