//! Tuples, band conditions and boxes in the join-attribute space.
//!
//! Partition boxes ([`Rect`]) are half-open, `[lo, hi)` in every dimension, so a
//! coordinate equal to a split value belongs to the upper child. The ε-range
//! around a tuple ([`EpsRange`]) is closed because the join predicate uses `≤`.
//!
//! ε-range endpoints are not computed as `x ± ε` directly. They are the
//! smallest and largest `f64` values `y` for which `|x - y| ≤ ε` holds when
//! evaluated in floating point, so that "`b` lies in the ε-range of `a`" and
//! [`joins`] agree bit for bit. Routing decisions made against these endpoints
//! can therefore never lose a result pair to rounding.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Join condition and load weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    eps: Vec<f64>,
    beta2: f64,
    beta3: f64,
}

impl BandSpec {
    pub fn new(eps: Vec<f64>, beta2: f64, beta3: f64) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::InvalidSpec("at least one join attribute is required".into()));
        }
        if let Some(i) = eps.iter().position(|e| e.is_nan() || *e < 0.0) {
            return Err(Error::InvalidSpec(format!("band width {} of dimension {i} is negative", eps[i])));
        }
        if !(beta2 >= 0.0 && beta2.is_finite()) || !(beta3 >= 0.0 && beta3.is_finite()) {
            return Err(Error::InvalidSpec("load weights must be finite and non-negative".into()));
        }
        if beta2 == 0.0 && beta3 == 0.0 {
            return Err(Error::InvalidSpec("load weights cannot both be zero".into()));
        }
        Ok(Self { eps, beta2, beta3 })
    }

    /// Unit load weights; handy in tests that only care about the join condition.
    pub fn uniform(eps: Vec<f64>) -> Result<Self> {
        Self::new(eps, 1.0, 1.0)
    }

    pub fn dims(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn beta3(&self) -> f64 {
        self.beta3
    }

    /// `β₂·input + β₃·output`.
    pub fn load(&self, input: f64, output: f64) -> f64 {
        self.beta2 * input + self.beta3 * output
    }

    pub fn with_weights(&self, beta2: f64, beta3: f64) -> Result<Self> {
        Self::new(self.eps.clone(), beta2, beta3)
    }

    /// True if any band width is zero.
    pub fn has_zero_band(&self) -> bool {
        self.eps.iter().any(|e| *e == 0.0)
    }
}

/// Which input relation a tuple comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationTag {
    S,
    T,
}

impl RelationTag {
    pub fn other(self) -> Self {
        match self {
            RelationTag::S => RelationTag::T,
            RelationTag::T => RelationTag::S,
        }
    }
}

/// An owned input tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Tuple {
    pub coords: Vec<f64>,
    pub id: u64,
}

impl Tuple {
    pub fn new(coords: Vec<f64>, id: u64) -> Self {
        Self { coords, id }
    }
}

/// A relation stored column-interleaved: tuple `i` occupies
/// `coords[i*dims .. (i+1)*dims]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Relation {
    dims: usize,
    coords: Vec<f64>,
    ids: Vec<u64>,
}

impl Relation {
    pub fn new(dims: usize) -> Self {
        Self { dims, coords: Vec::new(), ids: Vec::new() }
    }

    pub fn with_capacity(dims: usize, n: usize) -> Self {
        Self { dims, coords: Vec::with_capacity(dims * n), ids: Vec::with_capacity(n) }
    }

    pub fn from_parts(dims: usize, coords: Vec<f64>, ids: Vec<u64>) -> Result<Self> {
        if dims == 0 || coords.len() != dims * ids.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not form {} tuples of dimension {dims}",
                coords.len(),
                ids.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("relation coordinates must be finite".into()));
        }
        Ok(Self { dims, coords, ids })
    }

    /// Builds a relation from tuples; ids are taken from the tuples.
    pub fn from_tuples(dims: usize, tuples: &[Tuple]) -> Result<Self> {
        let mut rel = Self::with_capacity(dims, tuples.len());
        for t in tuples {
            rel.try_push(&t.coords, t.id)?;
        }
        Ok(rel)
    }

    /// One-dimensional relation with ids `0..values.len()`.
    pub fn from_values_1d(values: &[f64]) -> Self {
        Self { dims: 1, coords: values.to_vec(), ids: (0..values.len() as u64).collect() }
    }

    pub fn try_push(&mut self, coords: &[f64], id: u64) -> Result<()> {
        if coords.len() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, got: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("relation coordinates must be finite".into()));
        }
        self.coords.extend_from_slice(coords);
        self.ids.push(id);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, coords: &[f64], id: u64) {
        debug_assert_eq!(coords.len(), self.dims);
        self.coords.extend_from_slice(coords);
        self.ids.push(id);
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn coords(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }

    #[inline]
    pub fn coord(&self, i: usize, dim: usize) -> f64 {
        self.coords[i * self.dims + dim]
    }

    #[inline]
    pub fn id(&self, i: usize) -> u64 {
        self.ids[i]
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn raw_coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn tuple(&self, i: usize) -> Tuple {
        Tuple { coords: self.coords(i).to_vec(), id: self.ids[i] }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], u64)> + '_ {
        self.coords.chunks_exact(self.dims.max(1)).zip(self.ids.iter().copied())
    }

    /// Relation made of the tuples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Self::with_capacity(self.dims, indices.len());
        for &i in indices {
            out.push_unchecked(self.coords(i), self.ids[i]);
        }
        out
    }

    /// Per-dimension `(min, max)`, or `None` when empty.
    pub fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = self.coords(0).to_vec();
        let mut hi = lo.clone();
        for (c, _) in self.iter() {
            for k in 0..self.dims {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        Some((lo, hi))
    }
}

/// The band predicate `|a_i − b_i| ≤ ε_i` for every dimension.
///
/// Panics if either tuple does not have `spec.dims()` coordinates.
pub fn joins(a: &[f64], b: &[f64], spec: &BandSpec) -> bool {
    assert!(
        a.len() == spec.dims() && b.len() == spec.dims(),
        "tuple dimension does not match band specification"
    );
    joins_unchecked(a, b, spec.eps())
}

#[inline]
pub(crate) fn joins_unchecked(a: &[f64], b: &[f64], eps: &[f64]) -> bool {
    a.iter().zip(b).zip(eps).all(|((x, y), e)| (x - y).abs() <= *e)
}

/// Smallest `y` with `|x − y| ≤ eps` in floating point.
pub fn reach_below(x: f64, eps: f64) -> f64 {
    if eps == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    // Rounded subtraction is monotone in `y`, so the predicate flips once.
    let (mut lo, mut hi) = (order_key(f64::NEG_INFINITY), order_key(x));
    while lo < hi {
        let mid = ((lo as i128 + hi as i128) >> 1) as i64;
        if x - from_order_key(mid) <= eps {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    from_order_key(lo)
}

/// Largest `y` with `|x − y| ≤ eps` in floating point.
pub fn reach_above(x: f64, eps: f64) -> f64 {
    if eps == f64::INFINITY {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (order_key(x), order_key(f64::INFINITY));
    while lo < hi {
        let mid = ((lo as i128 + hi as i128 + 1) >> 1) as i64;
        if from_order_key(mid) - x <= eps {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    from_order_key(lo)
}

// Integer key ordered like the floats it encodes (-0.0 sorts just below +0.0).
#[inline]
fn order_key(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

#[inline]
fn from_order_key(k: i64) -> f64 {
    f64::from_bits((if k < 0 { k ^ i64::MAX } else { k }) as u64)
}

/// Closed box `∏ [lo_i, hi_i]` of all points joining a given tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsRange {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl EpsRange {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.lo.iter().zip(&self.hi).zip(x).all(|((l, h), v)| *l <= *v && *v <= *h)
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }
}

/// The ε-range around `t`.
pub fn eps_range(t: &[f64], spec: &BandSpec) -> EpsRange {
    assert_eq!(t.len(), spec.dims(), "tuple dimension does not match band specification");
    EpsRange {
        lo: t.iter().zip(spec.eps()).map(|(x, e)| reach_below(*x, *e)).collect(),
        hi: t.iter().zip(spec.eps()).map(|(x, e)| reach_above(*x, *e)).collect(),
    }
}

/// Half-open box `∏ [lo_i, hi_i)`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    /// The whole space, `(−∞, +∞)` in every dimension.
    pub fn root(dims: usize) -> Self {
        Self { lo: vec![f64::NEG_INFINITY; dims], hi: vec![f64::INFINITY; dims] }
    }

    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidArgument("rect needs lo < hi in every dimension".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.lo.iter().zip(&self.hi).zip(x).all(|((l, h), v)| *l <= *v && *v < *h)
    }

    pub fn extent(&self, dim: usize) -> f64 {
        self.hi[dim] - self.lo[dim]
    }

    /// Children for the predicate `x[dim] < value`: `(satisfying, rest)`.
    pub fn split(&self, dim: usize, value: f64) -> (Rect, Rect) {
        debug_assert!(self.lo[dim] < value && value < self.hi[dim]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[dim] = value;
        right.lo[dim] = value;
        (left, right)
    }
}

/// Whether a half-open partition box and a closed ε-range overlap.
///
/// A range touching the partition's lower edge intersects it; a range touching
/// only its upper edge does not, since that boundary point belongs to the
/// neighbor.
pub fn rect_intersects(rect: &Rect, range: &EpsRange) -> bool {
    (0..rect.dims()).all(|i| range.hi[i] >= rect.lo[i] && range.lo[i] < rect.hi[i])
}

/// Whether `rect` is narrower than `2ε_dim` in dimension `dim`.
///
/// A dimension with zero band width is never small.
pub fn is_small_in(rect: &Rect, spec: &BandSpec, dim: usize) -> bool {
    let eps = spec.eps()[dim];
    eps > 0.0 && rect.extent(dim) < 2.0 * eps
}

/// Whether `rect` is small in every dimension.
pub fn is_small(rect: &Rect, spec: &BandSpec) -> bool {
    (0..spec.dims()).all(|d| is_small_in(rect, spec, d))
}
