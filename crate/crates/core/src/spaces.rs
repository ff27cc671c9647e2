//! Exemplar Ahlfors-regular spaces with explicit dyadic decompositions: the
//! unit interval, low-dimensional cubes under the sup metric, and the ternary
//! Cantor set with its natural measure. Provides the weight pi_s, the map
//! from tree rays to points with measure transport both ways, continuous
//! kernels and energies, set discretization, and graph predecessor sets.

use crate::error::{Error, Result};
use crate::tree::{conjugate, BoundarySet, NodeId, TreeMeasure, TreeRecord, WeightedTree};

/// Ambient point; unused coordinates stay 0.
pub type Point = [f64; 3];

/// Convenience constructor for 1-D points.
pub fn pt1(x: f64) -> Point {
    [x, 0.0, 0.0]
}

/// Absolute snapping tolerance for exact cell-boundary membership queries.
const SNAP_TOL: f64 = 1e-12;

/// Hard cap on the number of tree nodes a space may allocate.
const NODE_CAP: u64 = 1 << 22;

/// Cap on quadrature grid cells (the energy loop is quadratic in this).
const GRID_CAP: u64 = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Interval,
    /// Euclidean cube of dimension q (1..=3) under the sup metric.
    Cube(u8),
    /// Middle-thirds Cantor set with its uniform measure, Q = log 2 / log 3.
    Cantor,
}

impl SpaceKind {
    pub fn dim(self) -> usize {
        match self {
            SpaceKind::Interval => 1,
            SpaceKind::Cube(q) => q as usize,
            SpaceKind::Cantor => 1,
        }
    }

    /// Scale ratio of one subdivision step.
    pub fn delta(self) -> f64 {
        match self {
            SpaceKind::Interval | SpaceKind::Cube(_) => 0.5,
            SpaceKind::Cantor => 1.0 / 3.0,
        }
    }

    /// Ahlfors regularity dimension.
    pub fn dim_q(self) -> f64 {
        match self {
            SpaceKind::Interval => 1.0,
            SpaceKind::Cube(q) => q as f64,
            SpaceKind::Cantor => std::f64::consts::LN_2 / 3f64.ln(),
        }
    }

    /// Children per cell.
    pub fn arity(self) -> u64 {
        match self {
            SpaceKind::Interval | SpaceKind::Cantor => 2,
            SpaceKind::Cube(q) => 1 << q,
        }
    }
}

/// Plain-data space configuration, as read from the CLI config format.
#[derive(Debug, Clone, Copy)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    pub depth: u32,
    /// Optional ratio; must match the kind's canonical value when given.
    pub delta: Option<f64>,
}

/// Dyadic decomposition of an exemplar space down to a fixed depth. Cell k
/// of level l has node id `level_off[l] + k`; the underlying tree uses the
/// same ids with unit weights.
#[derive(Debug, Clone)]
pub struct DyadicSpace {
    kind: SpaceKind,
    depth: u32,
    level_off: Vec<u64>,
    tree: WeightedTree,
    mass: Vec<f64>,
    cell_lo: Vec<Point>,
    cell_hi: Vec<Point>,
}

pub fn make_space(config: SpaceConfig) -> Result<DyadicSpace> {
    let kind = config.kind;
    if let SpaceKind::Cube(q) = kind {
        if !(1..=3).contains(&q) {
            return Err(Error::InvalidSpace(format!(
                "cube dimension {q} not in 1..=3"
            )));
        }
    }
    if let Some(d) = config.delta {
        if d.is_nan() || d <= 0.0 || d >= 1.0 {
            return Err(Error::InvalidSpace(format!("delta {d} outside (0,1)")));
        }
        if (d - kind.delta()).abs() > 1e-12 {
            return Err(Error::InvalidSpace(format!(
                "delta {d} does not match the canonical ratio {} of the space kind",
                kind.delta()
            )));
        }
    }
    let depth = config.depth;
    let arity = kind.arity();
    let mut level_off = Vec::with_capacity(depth as usize + 2);
    let mut total: u64 = 0;
    let mut count: u64 = 1;
    for _ in 0..=depth {
        level_off.push(total);
        total = total
            .checked_add(count)
            .ok_or(Error::NodeBudget {
                requested: u64::MAX,
                cap: NODE_CAP,
            })?;
        count = count.saturating_mul(arity);
        if total > NODE_CAP {
            return Err(Error::NodeBudget {
                requested: total,
                cap: NODE_CAP,
            });
        }
    }
    level_off.push(total);

    let n = total as usize;
    let mut records = Vec::with_capacity(n);
    let mut mass = Vec::with_capacity(n);
    let mut cell_lo = Vec::with_capacity(n);
    let mut cell_hi = Vec::with_capacity(n);
    let q = kind.dim();
    for level in 0..=depth {
        let cells = cells_at_level(kind, level);
        let scale = kind.delta().powi(level as i32);
        let m_cell = match kind {
            SpaceKind::Interval => scale,
            SpaceKind::Cube(qq) => scale.powi(qq as i32),
            SpaceKind::Cantor => 0.5f64.powi(level as i32),
        };
        for idx in 0..cells {
            let id = level_off[level as usize] + idx;
            let parent =
                (level > 0).then(|| level_off[level as usize - 1] + parent_index(kind, level, idx));
            records.push(TreeRecord {
                id,
                parent,
                weight: 1.0,
            });
            mass.push(m_cell);
            match kind {
                SpaceKind::Interval | SpaceKind::Cube(_) => {
                    let side = 1u64 << level;
                    let mut lo = [0.0; 3];
                    let mut hi = [0.0; 3];
                    let mut rest = idx;
                    for d in 0..q {
                        let j = rest % side;
                        rest /= side;
                        lo[d] = j as f64 * scale;
                        hi[d] = (j + 1) as f64 * scale;
                    }
                    cell_lo.push(lo);
                    cell_hi.push(hi);
                }
                SpaceKind::Cantor => {
                    // bits of idx, most significant first, select left/right
                    let mut num: u64 = 0;
                    for b in (0..level).rev() {
                        num *= 3;
                        if idx >> b & 1 == 1 {
                            num += 2;
                        }
                    }
                    let len = 3f64.powi(-(level as i32));
                    let lo = num as f64 * len;
                    cell_lo.push(pt1(lo));
                    cell_hi.push(pt1(lo + len));
                }
            }
        }
    }
    let tree = WeightedTree::from_records(&records, Some(kind.delta()))?;
    Ok(DyadicSpace {
        kind,
        depth,
        level_off,
        tree,
        mass,
        cell_lo,
        cell_hi,
    })
}

fn cells_at_level(kind: SpaceKind, level: u32) -> u64 {
    kind.arity().pow(level)
}

/// Cell index of the parent one level up; cube cells are laid out
/// row-major per level, so the parent halves each axis coordinate.
fn parent_index(kind: SpaceKind, level: u32, idx: u64) -> u64 {
    match kind {
        SpaceKind::Interval | SpaceKind::Cantor => idx / 2,
        SpaceKind::Cube(q) => {
            let side = 1u64 << level;
            let half = side >> 1;
            let mut rest = idx;
            let mut parent = 0u64;
            let mut stride = 1u64;
            for _ in 0..q {
                let c = rest % side;
                rest /= side;
                parent += (c / 2) * stride;
                stride *= half;
            }
            parent
        }
    }
}

/// Cell indices of the children one level down, in deterministic order.
fn child_indices(kind: SpaceKind, level: u32, idx: u64) -> Vec<u64> {
    match kind {
        SpaceKind::Interval | SpaceKind::Cantor => vec![2 * idx, 2 * idx + 1],
        SpaceKind::Cube(q) => {
            let side = 1u64 << level;
            let double = side << 1;
            let mut coords = [0u64; 3];
            let mut rest = idx;
            for d in 0..q as usize {
                coords[d] = rest % side;
                rest /= side;
            }
            let mut out = vec![0u64];
            let mut stride = 1u64;
            for d in 0..q as usize {
                let mut next = Vec::with_capacity(out.len() * 2);
                for &b in &out {
                    for bit in 0..2u64 {
                        next.push(b + (2 * coords[d] + bit) * stride);
                    }
                }
                out = next;
                stride *= double;
            }
            out.sort_unstable();
            out
        }
    }
}

impl DyadicSpace {
    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn delta(&self) -> f64 {
        self.kind.delta()
    }

    pub fn dim_q(&self) -> f64 {
        self.kind.dim_q()
    }

    pub fn tree(&self) -> &WeightedTree {
        &self.tree
    }

    pub fn node(&self, level: u32, idx: u64) -> NodeId {
        debug_assert!(idx < self.n_cells(level), "cell index out of range");
        NodeId((self.level_off[level as usize] + idx) as u32)
    }

    pub fn level_of(&self, v: NodeId) -> u32 {
        self.tree.depth(v)
    }

    pub fn index_of(&self, v: NodeId) -> u64 {
        v.index() as u64 - self.level_off[self.tree.depth(v) as usize]
    }

    pub fn n_cells(&self, level: u32) -> u64 {
        cells_at_level(self.kind, level)
    }

    /// m(cell); cells of one level share it for the exemplar kinds.
    pub fn mass(&self, v: NodeId) -> f64 {
        self.mass[v.index()]
    }

    pub fn cell_lo(&self, v: NodeId) -> Point {
        self.cell_lo[v.index()]
    }

    pub fn cell_hi(&self, v: NodeId) -> Point {
        self.cell_hi[v.index()]
    }

    pub fn cell_diam(&self, v: NodeId) -> f64 {
        let lo = self.cell_lo(v);
        let hi = self.cell_hi(v);
        (0..self.kind.dim()).fold(0.0f64, |acc, d| acc.max(hi[d] - lo[d]))
    }

    /// Quadrature representative: cube/interval midpoints, Cantor left
    /// endpoints (which belong to the set).
    pub fn cell_rep(&self, v: NodeId) -> Point {
        let lo = self.cell_lo(v);
        let hi = self.cell_hi(v);
        match self.kind {
            SpaceKind::Cantor => lo,
            _ => {
                let mut p = [0.0; 3];
                for d in 0..self.kind.dim() {
                    p[d] = 0.5 * (lo[d] + hi[d]);
                }
                p
            }
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        match self.kind {
            SpaceKind::Interval => (-SNAP_TOL..=1.0 + SNAP_TOL).contains(&x[0]),
            SpaceKind::Cube(q) => {
                (0..q as usize).all(|d| (-SNAP_TOL..=1.0 + SNAP_TOL).contains(&x[d]))
            }
            SpaceKind::Cantor => cantor_contains(x[0]),
        }
    }

    /// Metric of the space: Euclidean on the line, sup metric on cubes.
    pub fn dist(&self, x: Point, y: Point) -> f64 {
        (0..self.kind.dim()).fold(0.0f64, |acc, d| acc.max((x[d] - y[d]).abs()))
    }

    /// Mass of the metric ball B(x, r), boundary-clipped.
    pub fn ball_mass(&self, x: Point, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self.kind {
            SpaceKind::Interval => ((x[0] + r).min(1.0) - (x[0] - r).max(0.0)).max(0.0),
            SpaceKind::Cube(q) => (0..q as usize)
                .map(|d| ((x[d] + r).min(1.0) - (x[d] - r).max(0.0)).max(0.0))
                .product(),
            SpaceKind::Cantor => cantor_cdf(x[0] + r) - cantor_cdf(x[0] - r),
        }
    }

    /// Cells at `level` whose closure contains `x`, with boundary membership
    /// decided up to the snapping tolerance. The second value reports
    /// whether snapping was needed (x within tolerance of a cell boundary
    /// without lying on it exactly).
    pub fn containing_cells(&self, x: Point, level: u32) -> (Vec<u64>, bool) {
        let mut snapped = false;
        match self.kind {
            SpaceKind::Interval | SpaceKind::Cube(_) => {
                let q = self.kind.dim();
                let side = 1u64 << level;
                let scale = 0.5f64.powi(level as i32);
                let mut axis_sets: Vec<Vec<u64>> = Vec::with_capacity(q);
                for d in 0..q {
                    let mut set = Vec::new();
                    let t = x[d] / scale;
                    let base = t.floor() as i64;
                    for j in base - 1..=base + 1 {
                        if j < 0 || j as u64 >= side {
                            continue;
                        }
                        let lo = j as f64 * scale;
                        let hi = (j + 1) as f64 * scale;
                        if x[d] >= lo - SNAP_TOL && x[d] <= hi + SNAP_TOL {
                            set.push(j as u64);
                            if (x[d] != lo && (x[d] - lo).abs() <= SNAP_TOL)
                                || (x[d] != hi && (x[d] - hi).abs() <= SNAP_TOL)
                            {
                                snapped = true;
                            }
                        }
                    }
                    axis_sets.push(set);
                }
                let mut cells = vec![0u64];
                for (d, set) in axis_sets.iter().enumerate() {
                    let stride = side.pow(d as u32);
                    let mut next = Vec::with_capacity(cells.len() * set.len());
                    for &c in &cells {
                        for &j in set {
                            next.push(c + j * stride);
                        }
                    }
                    cells = next;
                }
                cells.sort_unstable();
                (cells, snapped)
            }
            SpaceKind::Cantor => {
                let mut found = Vec::new();
                let mut stack = vec![(0u32, 0u64)];
                while let Some((l, idx)) = stack.pop() {
                    let v = self.node(l, idx);
                    let lo = self.cell_lo(v)[0];
                    let hi = self.cell_hi(v)[0];
                    if x[0] < lo - SNAP_TOL || x[0] > hi + SNAP_TOL {
                        continue;
                    }
                    if (x[0] != lo && (x[0] - lo).abs() <= SNAP_TOL)
                        || (x[0] != hi && (x[0] - hi).abs() <= SNAP_TOL)
                    {
                        snapped = true;
                    }
                    if l == level {
                        found.push(idx);
                    } else {
                        stack.push((l + 1, 2 * idx));
                        stack.push((l + 1, 2 * idx + 1));
                    }
                }
                found.sort_unstable();
                (found, snapped)
            }
        }
    }
}

/// Cantor measure distribution function (devil's staircase), clipped.
pub fn cantor_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let mut t = t;
    let mut value = 0.0;
    let mut scale = 0.5;
    for _ in 0..64 {
        t *= 3.0;
        if t < 1.0 {
            // left third
        } else if t <= 2.0 {
            return value + scale; // gap plateau
        } else {
            value += scale;
            t -= 2.0;
        }
        scale *= 0.5;
        if scale == 0.0 {
            break;
        }
    }
    value
}

/// Membership in the ternary Cantor set up to the snapping tolerance.
pub fn cantor_contains(x: f64) -> bool {
    if !(-SNAP_TOL..=1.0 + SNAP_TOL).contains(&x) {
        return false;
    }
    let mut t = x.clamp(0.0, 1.0);
    let mut width = 1.0;
    for _ in 0..48 {
        width /= 3.0;
        if width < SNAP_TOL {
            return true;
        }
        t *= 3.0;
        if t < 1.0 {
        } else if t < 2.0 {
            // inside the open middle third; allow tolerance at its edges
            let dist_edge = (t - 1.0).min(2.0 - t) * width * 3.0;
            return dist_edge <= SNAP_TOL;
        } else {
            t -= 2.0;
        }
    }
    true
}

// ---- weights ----------------------------------------------------------------

/// Tree weight pi_s(cell) = m(cell)^((s p' - 1)/(p' - 1)) transporting the
/// kernel parameter s; s p' = 1 gives the unweighted tree.
pub fn weight_pi_s(space: &DyadicSpace, s: f64, p: f64) -> Result<WeightedTree> {
    if s.is_nan() || s <= 0.0 || s >= 1.0 {
        return Err(Error::InvalidKernelParam(s));
    }
    let pp = conjugate(p)?;
    let expo = (s * pp - 1.0) / (pp - 1.0);
    let weights: Vec<f64> = space
        .tree
        .nodes()
        .map(|v| space.mass(v).powf(expo))
        .collect();
    space.tree.with_weights(weights)
}

// ---- set descriptors and discretization --------------------------------------

/// Compact subsets of the ambient space used as capacity targets.
#[derive(Debug, Clone)]
pub enum SetDescriptor {
    /// Finite union of closed boxes (intervals when the dimension is 1).
    Boxes(Vec<(Point, Point)>),
    /// Attractor of an iterated function system x -> r x + t on `[0,1]`.
    Ifs(Vec<(f64, f64)>),
    Points(Vec<Point>),
}

impl SetDescriptor {
    /// Text format: `interval a b [a b ...]`, `box lo.. hi.. ...`,
    /// `ifs r1 t1 r2 t2 ...`, `points x1 x2 ...` (1-D) or grouped by dim.
    pub fn parse(text: &str, dim: usize) -> Result<SetDescriptor> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.is_empty() {
            return Err(Error::EmptySetDescriptor);
        }
        let nums: Result<Vec<f64>> = toks[1..]
            .iter()
            .map(|t| {
                parse_number(t).ok_or_else(|| Error::Parse(format!("bad number `{t}` in set")))
            })
            .collect();
        let nums = nums?;
        match toks[0] {
            "interval" | "box" => {
                let stride = 2 * dim;
                if nums.is_empty() || nums.len() % stride != 0 {
                    return Err(Error::Parse(format!(
                        "expected groups of {stride} numbers for `{}`",
                        toks[0]
                    )));
                }
                let mut boxes = Vec::new();
                for chunk in nums.chunks(stride) {
                    let mut lo = [0.0; 3];
                    let mut hi = [0.0; 3];
                    lo[..dim].copy_from_slice(&chunk[..dim]);
                    hi[..dim].copy_from_slice(&chunk[dim..2 * dim]);
                    boxes.push((lo, hi));
                }
                Ok(SetDescriptor::Boxes(boxes))
            }
            "ifs" => {
                if nums.is_empty() || nums.len() % 2 != 0 {
                    return Err(Error::Parse("ifs needs ratio/translation pairs".into()));
                }
                let maps: Vec<(f64, f64)> =
                    nums.chunks(2).map(|c| (c[0], c[1])).collect();
                for &(r, _) in &maps {
                    if r.is_nan() || r <= 0.0 || r >= 1.0 {
                        return Err(Error::Parse(format!("ifs ratio {r} outside (0,1)")));
                    }
                }
                Ok(SetDescriptor::Ifs(maps))
            }
            "points" => {
                if nums.is_empty() || nums.len() % dim != 0 {
                    return Err(Error::Parse(format!(
                        "expected groups of {dim} numbers for points"
                    )));
                }
                let pts = nums
                    .chunks(dim)
                    .map(|c| {
                        let mut p = [0.0; 3];
                        p[..dim].copy_from_slice(c);
                        p
                    })
                    .collect();
                Ok(SetDescriptor::Points(pts))
            }
            other => Err(Error::Parse(format!("unknown set descriptor `{other}`"))),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            SetDescriptor::Boxes(b) => b.is_empty(),
            SetDescriptor::Ifs(m) => m.is_empty(),
            SetDescriptor::Points(p) => p.is_empty(),
        }
    }
}

/// Fraction strings like `1/3` are accepted next to plain decimals.
fn parse_number(t: &str) -> Option<f64> {
    if let Some((a, b)) = t.split_once('/') {
        let num: f64 = a.parse().ok()?;
        let den: f64 = b.parse().ok()?;
        (den != 0.0).then(|| num / den)
    } else {
        t.parse().ok()
    }
}

/// Antichain of all `depth`-level cells whose closed cell meets the closed
/// set described by `sd`.
pub fn discretize_set(space: &DyadicSpace, sd: &SetDescriptor, depth: u32) -> Result<BoundarySet> {
    if sd.is_empty() {
        return Err(Error::EmptySetDescriptor);
    }
    if depth > space.depth() {
        return Err(Error::DepthTooLarge {
            depth,
            max: space.depth(),
        });
    }
    let dim = space.kind.dim();
    let mut hits = Vec::new();
    // Depth-first descent pruning cells that already miss the set.
    let mut stack = vec![(0u32, 0u64)];
    while let Some((level, idx)) = stack.pop() {
        let v = space.node(level, idx);
        let lo = space.cell_lo(v);
        let hi = space.cell_hi(v);
        if !set_meets_cell(sd, lo, hi, dim) {
            continue;
        }
        if level == depth {
            hits.push(v);
            continue;
        }
        for c in child_indices(space.kind, level, idx) {
            stack.push((level + 1, c));
        }
    }
    BoundarySet::normalize(space.tree(), &hits)
}

/// Intersection semantics for discretization. Cells at one level tile the
/// space with m-null overlap, so a box selects a cell only when it meets
/// the cell's interior (a shared boundary face does not count); point sets
/// and IFS attractors carry no interior and are tested against closed
/// cells instead.
fn set_meets_cell(sd: &SetDescriptor, lo: Point, hi: Point, dim: usize) -> bool {
    match sd {
        SetDescriptor::Boxes(boxes) => boxes.iter().any(|&(blo, bhi)| {
            (0..dim).all(|d| bhi[d].max(blo[d]) > lo[d] && blo[d].min(bhi[d]) < hi[d])
        }),
        SetDescriptor::Points(pts) => pts
            .iter()
            .any(|p| (0..dim).all(|d| p[d] >= lo[d] && p[d] <= hi[d])),
        SetDescriptor::Ifs(maps) => attractor_meets_interval(maps, lo[0], hi[0], 1.0, 0.0, 72),
    }
}

/// Does the IFS attractor meet the closed interval [a, b]? Recursion over
/// nested pieces f_w([0,1]) tracked as affine compositions (scale, offset);
/// a piece inside [a, b] certifies intersection, a disjoint piece is
/// pruned, and ties finer than f64 resolution count as touching.
fn attractor_meets_interval(
    maps: &[(f64, f64)],
    a: f64,
    b: f64,
    scale: f64,
    offset: f64,
    fuel: u32,
) -> bool {
    let (plo, phi) = (offset, offset + scale);
    if phi < a || plo > b {
        return false;
    }
    if plo >= a && phi <= b {
        return true;
    }
    if fuel == 0 || scale <= f64::EPSILON {
        return true; // piece straddles the boundary at sub-resolution scale
    }
    maps.iter().any(|&(r, t)| {
        attractor_meets_interval(maps, a, b, scale * r, offset + scale * t, fuel - 1)
    })
}

// ---- kernel and energy --------------------------------------------------------

/// Riesz-type kernel K(x,y) = [m(B(x, d(x,y))) + m(B(y, d(x,y)))]^(-s);
/// +infinity on the diagonal.
pub fn kernel_k(space: &DyadicSpace, x: Point, y: Point, s: f64) -> Result<f64> {
    if s.is_nan() || s <= 0.0 || s >= 1.0 {
        return Err(Error::InvalidKernelParam(s));
    }
    for p in [x, y] {
        if !space.contains(p) {
            return Err(Error::PointOutsideSpace(p[0]));
        }
    }
    let r = space.dist(x, y);
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((space.ball_mass(x, r) + space.ball_mass(y, r)).powf(-s))
}

/// Measures on the ambient space handled by the transport operations.
#[derive(Debug, Clone)]
pub enum SpaceMeasure {
    /// total * (normalized base measure of the space).
    UniformDensity { total: f64 },
    /// Mass spread uniformly (w.r.t. the base measure) over each cell.
    CellUniform(Vec<(NodeId, f64)>),
    Atoms(Vec<(Point, f64)>),
}

impl SpaceMeasure {
    pub fn total(&self) -> f64 {
        match self {
            SpaceMeasure::UniformDensity { total } => *total,
            SpaceMeasure::CellUniform(cells) => cells.iter().map(|&(_, m)| m).sum(),
            SpaceMeasure::Atoms(atoms) => atoms.iter().map(|&(_, m)| m).sum(),
        }
    }

    pub fn scaled(&self, c: f64) -> SpaceMeasure {
        match self {
            SpaceMeasure::UniformDensity { total } => SpaceMeasure::UniformDensity {
                total: c * total,
            },
            SpaceMeasure::CellUniform(cells) => {
                SpaceMeasure::CellUniform(cells.iter().map(|&(v, m)| (v, c * m)).collect())
            }
            SpaceMeasure::Atoms(atoms) => {
                SpaceMeasure::Atoms(atoms.iter().map(|&(p, m)| (p, c * m)).collect())
            }
        }
    }
}

/// Push a tree measure forward to the space: each antichain mass becomes a
/// uniform mass on its cell. Total mass is preserved.
pub fn push_forward(space: &DyadicSpace, nu: &TreeMeasure) -> Result<SpaceMeasure> {
    nu.check_tree(space.tree())?;
    Ok(SpaceMeasure::CellUniform(nu.support().to_vec()))
}

/// Push a tree measure forward through completed rays: each support node's
/// mass becomes an atom at the lambda image of the ray through it.
pub fn push_forward_completed(
    space: &DyadicSpace,
    nu: &TreeMeasure,
    continuation: Continuation,
) -> Result<SpaceMeasure> {
    nu.check_tree(space.tree())?;
    let atoms = nu
        .support()
        .iter()
        .map(|&(v, m)| (lambda_map(space, v, continuation), m))
        .collect();
    Ok(SpaceMeasure::Atoms(atoms))
}

/// Continuation rule completing a finite ray to a boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuation {
    AllLeft,
    AllRight,
}

/// Image of the (completed) ray through `node`: the unique point in the
/// intersection of the closed cells along the ray.
pub fn lambda_map(space: &DyadicSpace, node: NodeId, continuation: Continuation) -> Point {
    match continuation {
        Continuation::AllLeft => space.cell_lo(node),
        Continuation::AllRight => {
            let hi = space.cell_hi(node);
            let mut p = [0.0; 3];
            p[..space.kind.dim()].copy_from_slice(&hi[..space.kind.dim()]);
            p
        }
    }
}

/// Result of pulling an atomic measure back onto depth-level cells.
#[derive(Debug, Clone)]
pub struct PullBack {
    pub measure: TreeMeasure,
    /// Indices of atoms whose cell membership needed boundary snapping.
    pub snapped_atoms: Vec<usize>,
}

/// Pull an atomic measure back to the tree: each atom's mass splits equally
/// among the N(x) depth-level cells whose closure contains the point.
pub fn pull_back_atomic(
    space: &DyadicSpace,
    atoms: &[(Point, f64)],
    depth: u32,
) -> Result<PullBack> {
    if depth > space.depth() {
        return Err(Error::DepthTooLarge {
            depth,
            max: space.depth(),
        });
    }
    let mut masses: std::collections::BTreeMap<NodeId, f64> = std::collections::BTreeMap::new();
    let mut snapped_atoms = Vec::new();
    for (i, &(x, m)) in atoms.iter().enumerate() {
        if !space.contains(x) {
            return Err(Error::PointOutsideSpace(x[0]));
        }
        let (cells, snapped) = space.containing_cells(x, depth);
        if cells.is_empty() {
            return Err(Error::PointOutsideSpace(x[0]));
        }
        if snapped {
            snapped_atoms.push(i);
        }
        let share = m / cells.len() as f64;
        for idx in cells {
            *masses.entry(space.node(depth, idx)).or_insert(0.0) += share;
        }
    }
    let list: Vec<(NodeId, f64)> = masses.into_iter().collect();
    Ok(PullBack {
        measure: TreeMeasure::from_masses(space.tree(), &list)?,
        snapped_atoms,
    })
}

/// Pull a space measure back onto the tree: cell-uniform pieces return to
/// their nodes, the base measure lands on depth-level cells, and atoms
/// split by the N(x) rule. Left inverse of [`push_forward`] on the classes
/// it handles.
pub fn pull_back(space: &DyadicSpace, omega: &SpaceMeasure, depth: u32) -> Result<TreeMeasure> {
    match omega {
        SpaceMeasure::UniformDensity { total } => {
            let masses: Vec<(NodeId, f64)> = (0..space.n_cells(depth))
                .map(|j| {
                    let v = space.node(depth, j);
                    (v, total * space.mass(v))
                })
                .collect();
            Ok(TreeMeasure::from_masses(space.tree(), &masses)?)
        }
        SpaceMeasure::CellUniform(cells) => Ok(TreeMeasure::from_masses(space.tree(), cells)?),
        SpaceMeasure::Atoms(atoms) => Ok(pull_back_atomic(space, atoms, depth)?.measure),
    }
}

/// omega(closed cell of `node`) for a space measure, counting atoms on cell
/// boundaries with their N(x) split.
pub fn cell_measure(space: &DyadicSpace, omega: &SpaceMeasure, node: NodeId) -> f64 {
    match omega {
        SpaceMeasure::UniformDensity { total } => total * space.mass(node),
        SpaceMeasure::CellUniform(cells) => {
            let tree = space.tree();
            cells
                .iter()
                .map(|&(piece, m)| {
                    if tree.is_ancestor_or_equal(node, piece) {
                        m
                    } else if tree.is_ancestor_or_equal(piece, node) {
                        m * space.mass(node) / space.mass(piece)
                    } else {
                        0.0
                    }
                })
                .sum()
        }
        SpaceMeasure::Atoms(atoms) => {
            let level = space.level_of(node);
            let idx = space.index_of(node);
            atoms
                .iter()
                .map(|&(x, m)| {
                    let (cells, _) = space.containing_cells(x, level);
                    if cells.binary_search(&idx).is_ok() {
                        m / cells.len() as f64
                    } else {
                        0.0
                    }
                })
                .sum()
        }
    }
}

/// The same cell mass for a tree measure pushed forward to the space:
/// descendant support counts fully, ancestor support contributes its
/// proportional share.
pub fn pushed_cell_mass(space: &DyadicSpace, mu: &TreeMeasure, node: NodeId) -> f64 {
    let mut total = mu.istar(node);
    let tree = space.tree();
    let mut cur = tree.parent(node);
    while let Some(v) = cur {
        let m = mu.mass_at(v);
        if m > 0.0 {
            total += m * space.mass(node) / space.mass(v);
        }
        cur = tree.parent(v);
    }
    total
}

/// Midpoint-rule quadrature of the continuous p-energy
/// E(omega) = integral of (K omega)^(p') dm, at grid level `resolution`.
/// The diagonal band uses a cell-averaged kernel; atoms are regularized to
/// the grid scale first.
pub fn continuous_energy(
    space: &DyadicSpace,
    omega: &SpaceMeasure,
    s: f64,
    p: f64,
    resolution: u32,
) -> Result<f64> {
    if s.is_nan() || s <= 0.0 || s >= 1.0 {
        return Err(Error::InvalidKernelParam(s));
    }
    let pp = conjugate(p)?;
    if resolution < 1 {
        return Err(Error::ResolutionTooCoarse {
            resolution,
            needed: 1,
        });
    }
    if let SpaceMeasure::CellUniform(cells) = omega {
        let max_level = cells
            .iter()
            .map(|&(v, _)| space.level_of(v))
            .max()
            .unwrap_or(0);
        if resolution < max_level + 1 {
            return Err(Error::ResolutionTooCoarse {
                resolution,
                needed: max_level + 1,
            });
        }
    }
    let ncells = cells_at_level(space.kind, resolution);
    if ncells > GRID_CAP {
        return Err(Error::NodeBudget {
            requested: ncells,
            cap: GRID_CAP,
        });
    }
    let grid = Grid::build(space, resolution);
    let weights = grid.measure_weights(space, omega, resolution)?;
    if weights.iter().all(|&w| w == 0.0) {
        return Ok(0.0);
    }

    let n = grid.rep.len();
    let mut energy = 0.0;
    for i in 0..n {
        let mut k_omega = 0.0;
        for j in 0..n {
            if weights[j] == 0.0 {
                continue;
            }
            let k = if grid.in_band(space, i, j) {
                grid.avg_kernel(space, i, j, s)
            } else {
                kernel_value(space, grid.rep[i], grid.rep[j], s)
            };
            k_omega += k * weights[j];
        }
        energy += grid.mass[i] * k_omega.powf(pp);
    }
    Ok(energy)
}

fn kernel_value(space: &DyadicSpace, x: Point, y: Point, s: f64) -> f64 {
    let r = space.dist(x, y);
    if r == 0.0 {
        return f64::INFINITY;
    }
    (space.ball_mass(x, r) + space.ball_mass(y, r)).powf(-s)
}

struct Grid {
    rep: Vec<Point>,
    lo: Vec<Point>,
    hi: Vec<Point>,
    mass: Vec<f64>,
    level: u32,
}

impl Grid {
    fn build(space: &DyadicSpace, level: u32) -> Grid {
        let n = cells_at_level(space.kind, level) as usize;
        let q = space.kind.dim();
        let mut rep = Vec::with_capacity(n);
        let mut lo_v = Vec::with_capacity(n);
        let mut hi_v = Vec::with_capacity(n);
        let mut mass = Vec::with_capacity(n);
        match space.kind {
            SpaceKind::Interval | SpaceKind::Cube(_) => {
                let side = 1u64 << level;
                let h = 0.5f64.powi(level as i32);
                for idx in 0..n as u64 {
                    let mut lo = [0.0; 3];
                    let mut hi = [0.0; 3];
                    let mut mid = [0.0; 3];
                    let mut rest = idx;
                    for d in 0..q {
                        let j = rest % side;
                        rest /= side;
                        lo[d] = j as f64 * h;
                        hi[d] = (j + 1) as f64 * h;
                        mid[d] = (j as f64 + 0.5) * h;
                    }
                    rep.push(mid);
                    lo_v.push(lo);
                    hi_v.push(hi);
                    mass.push(h.powi(q as i32));
                }
            }
            SpaceKind::Cantor => {
                let len = 3f64.powi(-(level as i32));
                let m = 0.5f64.powi(level as i32);
                for idx in 0..n as u64 {
                    let mut num: u64 = 0;
                    for b in (0..level).rev() {
                        num *= 3;
                        if idx >> b & 1 == 1 {
                            num += 2;
                        }
                    }
                    let a = num as f64 * len;
                    rep.push(pt1(a));
                    lo_v.push(pt1(a));
                    hi_v.push(pt1(a + len));
                    mass.push(m);
                }
            }
        }
        Grid {
            rep,
            lo: lo_v,
            hi: hi_v,
            mass,
            level,
        }
    }

    /// omega-mass per grid cell.
    fn measure_weights(
        &self,
        space: &DyadicSpace,
        omega: &SpaceMeasure,
        level: u32,
    ) -> Result<Vec<f64>> {
        let n = self.rep.len();
        let mut w = vec![0.0; n];
        match omega {
            SpaceMeasure::UniformDensity { total } => {
                for i in 0..n {
                    w[i] = total * self.mass[i];
                }
            }
            SpaceMeasure::CellUniform(cells) => {
                for &(piece, m) in cells {
                    let plevel = space.level_of(piece);
                    let pidx = space.index_of(piece);
                    let arity = space.kind.arity();
                    let fan = arity.pow(level - plevel);
                    let share = m / fan as f64;
                    let start = match space.kind {
                        SpaceKind::Interval | SpaceKind::Cube(_) => {
                            grid_start_index(space, plevel, pidx, level)
                        }
                        SpaceKind::Cantor => pidx * fan,
                    };
                    match space.kind {
                        SpaceKind::Cube(q) if q > 1 => {
                            // multi-axis fan-out
                            let side_p = 1u64 << plevel;
                            let side_g = 1u64 << level;
                            let f = 1u64 << (level - plevel);
                            let mut coords_p = [0u64; 3];
                            let mut rest = pidx;
                            for d in 0..q as usize {
                                coords_p[d] = rest % side_p;
                                rest /= side_p;
                            }
                            let mut offsets = vec![0u64];
                            for d in 0..q as usize {
                                let stride = side_g.pow(d as u32);
                                let basis = coords_p[d] * f;
                                let mut next =
                                    Vec::with_capacity(offsets.len() * f as usize);
                                for &o in &offsets {
                                    for jj in 0..f {
                                        next.push(o + (basis + jj) * stride);
                                    }
                                }
                                offsets = next;
                            }
                            for o in offsets {
                                w[o as usize] += share;
                            }
                        }
                        _ => {
                            for k in 0..fan {
                                w[(start + k) as usize] += share;
                            }
                        }
                    }
                }
            }
            SpaceMeasure::Atoms(atoms) => {
                for &(x, m) in atoms {
                    if !space.contains(x) {
                        return Err(Error::PointOutsideSpace(x[0]));
                    }
                    let (cells, _) = space.containing_cells(x, level);
                    if cells.is_empty() {
                        return Err(Error::PointOutsideSpace(x[0]));
                    }
                    let share = m / cells.len() as f64;
                    for idx in cells {
                        w[idx as usize] += share;
                    }
                }
            }
        }
        Ok(w)
    }

    fn in_band(&self, space: &DyadicSpace, i: usize, j: usize) -> bool {
        match space.kind {
            SpaceKind::Interval | SpaceKind::Cantor => i.abs_diff(j) <= 1,
            SpaceKind::Cube(q) => {
                let side = 1u64 << self.level;
                let (mut a, mut b) = (i as u64, j as u64);
                for _ in 0..q {
                    let (ca, cb) = (a % side, b % side);
                    if ca.abs_diff(cb) > 1 {
                        return false;
                    }
                    a /= side;
                    b /= side;
                }
                true
            }
        }
    }

    /// Average of K(x_i, .) over grid cell j with respect to the base
    /// measure, normalized by the cell's base mass.
    fn avg_kernel(&self, space: &DyadicSpace, i: usize, j: usize, s: f64) -> f64 {
        let x = self.rep[i];
        match space.kind {
            SpaceKind::Interval => {
                let (a, b) = (self.lo[j][0], self.hi[j][0]);
                avg_kernel_interval(space, x, a, b, s) / (b - a)
            }
            SpaceKind::Cantor => {
                avg_kernel_cantor(space, x[0], self.lo[j][0], self.hi[j][0], s, 14)
            }
            SpaceKind::Cube(q) => {
                // two-level sub-midpoint average; crude but bounded
                let sub = 4u64;
                let mut acc = 0.0;
                let mut cnt = 0u64;
                let mut idx = vec![0u64; q as usize];
                loop {
                    let mut y = [0.0; 3];
                    for d in 0..q as usize {
                        let h = self.hi[j][d] - self.lo[j][d];
                        y[d] = self.lo[j][d] + (idx[d] as f64 + 0.5) * h / sub as f64;
                    }
                    let v = kernel_value(space, x, y, s);
                    if v.is_finite() {
                        acc += v;
                        cnt += 1;
                    }
                    // advance odometer
                    let mut d = 0;
                    loop {
                        if d == q as usize {
                            return if cnt > 0 { acc / cnt as f64 } else { 0.0 };
                        }
                        idx[d] += 1;
                        if idx[d] < sub {
                            break;
                        }
                        idx[d] = 0;
                        d += 1;
                    }
                }
            }
        }
    }
}

fn grid_start_index(space: &DyadicSpace, plevel: u32, pidx: u64, glevel: u32) -> u64 {
    match space.kind {
        SpaceKind::Interval | SpaceKind::Cantor => pidx << (glevel - plevel),
        SpaceKind::Cube(_) => pidx, // handled separately for q > 1
    }
}

/// integral over [a,b] of K(x, y) dy, splitting at x and removing the
/// endpoint singularity with the substitution t = u^(1/(1-s)).
fn avg_kernel_interval(space: &DyadicSpace, x: Point, a: f64, b: f64, s: f64) -> f64 {
    let xx = x[0];
    if xx <= a || xx >= b {
        // regular: 16-point midpoint, still fine near a touching endpoint
        let n = 16;
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let y = a + (k as f64 + 0.5) * h;
            let v = kernel_value(space, x, pt1(y), s);
            if v.is_finite() {
                acc += v * h;
            }
        }
        return acc;
    }
    singular_side_integral(space, xx, xx - a, -1.0, s)
        + singular_side_integral(space, xx, b - xx, 1.0, s)
}

/// integral over 0..len of K(x, x + sign t) dt via the u-substitution.
fn singular_side_integral(space: &DyadicSpace, x: f64, len: f64, sign: f64, s: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let q = 1.0 - s;
    let umax = len.powf(q);
    let n = 16;
    let hu = umax / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        let u = (k as f64 + 0.5) * hu;
        let t = u.powf(1.0 / q);
        let y = x + sign * t;
        let v = kernel_value(space, pt1(x), pt1(y), s);
        if v.is_finite() {
            acc += v * (1.0 / q) * u.powf(s / q) * hu;
        }
    }
    acc
}

/// Average of K(x, .) over a Cantor piece with respect to the normalized
/// Cantor measure of the piece; splits recursively toward the singularity.
fn avg_kernel_cantor(space: &DyadicSpace, x: f64, lo: f64, hi: f64, s: f64, fuel: u32) -> f64 {
    let len = hi - lo;
    if x < lo - len || x > hi + len || fuel == 0 {
        // far from the singularity (or out of fuel): sample the two
        // grandchildren representatives
        if x >= lo && x <= hi && fuel == 0 {
            // dropped sliver around the singularity: bound by the kernel at
            // the piece scale
            let v = kernel_value(space, pt1(x), pt1(if x - lo > hi - x { lo } else { hi }), s);
            return if v.is_finite() { v } else { 0.0 };
        }
        let third = len / 3.0;
        let reps = [lo, lo + 2.0 * third];
        let mut acc = 0.0;
        for r in reps {
            let v = kernel_value(space, pt1(x), pt1(r + 0.5 * third), s);
            if v.is_finite() {
                acc += 0.5 * v;
            }
        }
        return acc;
    }
    let third = len / 3.0;
    0.5 * avg_kernel_cantor(space, x, lo, lo + third, s, fuel - 1)
        + 0.5 * avg_kernel_cantor(space, x, hi - third, hi, s, fuel - 1)
}

// ---- graph predecessor sets ---------------------------------------------------

/// For each level k <= depth: the cells whose closure contains x together
/// with the level-k cells at distance at most delta^k from one of those.
pub fn graph_predecessor_set(space: &DyadicSpace, x: Point, depth: u32) -> Result<Vec<NodeId>> {
    if !space.contains(x) {
        return Err(Error::PointOutsideSpace(x[0]));
    }
    if depth > space.depth() {
        return Err(Error::DepthTooLarge {
            depth,
            max: space.depth(),
        });
    }
    let mut out = Vec::new();
    for level in 0..=depth {
        let (containing, _) = space.containing_cells(x, level);
        match space.kind {
            SpaceKind::Interval => {
                let side = 1u64 << level;
                for &c in &containing {
                    // cells within index distance 2 sit within delta^k
                    let lo = c.saturating_sub(2);
                    let hi = (c + 2).min(side - 1);
                    for j in lo..=hi {
                        out.push(space.node(level, j));
                    }
                }
            }
            SpaceKind::Cube(q) => {
                let side = 1u64 << level;
                for &c in &containing {
                    let mut coords = [0u64; 3];
                    let mut rest = c;
                    for d in 0..q as usize {
                        coords[d] = rest % side;
                        rest /= side;
                    }
                    let mut cells = vec![0u64];
                    for d in 0..q as usize {
                        let stride = side.pow(d as u32);
                        let jlo = coords[d].saturating_sub(2);
                        let jhi = (coords[d] + 2).min(side - 1);
                        let mut next = Vec::with_capacity(cells.len() * 5);
                        for &cell in &cells {
                            for j in jlo..=jhi {
                                next.push(cell + j * stride);
                            }
                        }
                        cells = next;
                    }
                    out.extend(cells.into_iter().map(|j| space.node(level, j)));
                }
            }
            SpaceKind::Cantor => {
                let radius = 3f64.powi(-(level as i32));
                for &c in &containing {
                    let node = space.node(level, c);
                    let (clo, chi) = (space.cell_lo(node)[0], space.cell_hi(node)[0]);
                    // collect level pieces meeting [clo - radius, chi + radius]
                    let mut stack = vec![(0u32, 0u64)];
                    while let Some((l, idx)) = stack.pop() {
                        let v = space.node(l, idx);
                        let lo = space.cell_lo(v)[0];
                        let hi = space.cell_hi(v)[0];
                        if hi < clo - radius - SNAP_TOL || lo > chi + radius + SNAP_TOL {
                            continue;
                        }
                        if l == level {
                            out.push(v);
                        } else {
                            stack.push((l + 1, 2 * idx));
                            stack.push((l + 1, 2 * idx + 1));
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

// ---- ball capacity ------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct BallEstimate {
    pub value: f64,
    /// Dyadic level k with delta^k closest to r.
    pub level: u32,
    /// s < 1/p': singletons carry positive capacity in this regime.
    pub point_mass_regime: bool,
}

/// Two-sided capacity estimate for a ball of radius r: (log 1/r)-type decay
/// k^(1-p) in the unweighted case s = 1/p', and the power law
/// delta^(Q k p (s - 1/p')) otherwise.
pub fn ball_capacity_estimate(
    space: &DyadicSpace,
    r: f64,
    s: f64,
    p: f64,
) -> Result<BallEstimate> {
    if r.is_nan() || r <= 0.0 || r > 1.0 {
        return Err(Error::InvalidSpace(format!("radius {r} outside (0,1]")));
    }
    if s.is_nan() || s <= 0.0 || s >= 1.0 {
        return Err(Error::InvalidKernelParam(s));
    }
    let pp = conjugate(p)?;
    let delta = space.delta();
    let k = ((1.0 / r).ln() / (1.0 / delta).ln()).round().max(0.0) as u32;
    let sp_gap = s - 1.0 / pp;
    let unweighted = sp_gap.abs() <= 1e-12;
    let (value, level) = if unweighted {
        let k = k.max(1);
        ((k as f64).powf(1.0 - p), k)
    } else {
        (
            delta.powf(space.dim_q() * k as f64 * p * sp_gap),
            k,
        )
    };
    Ok(BallEstimate {
        value,
        level,
        point_mass_regime: sp_gap < -1e-12,
    })
}
