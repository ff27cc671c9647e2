//! Exact tree capacity by bottom-up recursion on the spanning subtree,
//! equilibrium function/measure reconstruction, and two independent
//! convex-optimization oracles realizing the primal and dual definitions.

use crate::error::{Error, Result};
use crate::potential::carleson_norm;
use crate::tree::{conjugate, BoundarySet, NodeFunction, NodeId, TreeMeasure, WeightedTree};

/// Capacity of the single point `zeta` of the closed tree:
/// Cap({zeta}) = d_pi(zeta)^(1-p).
pub fn capacity_point(tree: &WeightedTree, zeta: NodeId, p: f64) -> Result<f64> {
    conjugate(p)?;
    Ok(tree.d_pi(zeta, p)?.powf(1.0 - p))
}

/// Nodes of the minimal subtree spanning `e` and the root, sorted by
/// (depth, id) ascending.
fn spanning_nodes(tree: &WeightedTree, e: &BoundarySet) -> Vec<NodeId> {
    let mut marked = vec![false; tree.node_count()];
    for &a in e.nodes() {
        let mut cur = Some(a);
        while let Some(v) = cur {
            if marked[v.index()] {
                break;
            }
            marked[v.index()] = true;
            cur = tree.parent(v);
        }
    }
    let mut nodes: Vec<NodeId> = tree.nodes().filter(|v| marked[v.index()]).collect();
    nodes.sort_by_key(|&v| (tree.depth(v), v));
    nodes
}

/// One combine step of the recursion: relative capacity at a node with
/// weight `w` whose children subtrees contribute the sum `s`.
fn combine(s: f64, w: f64, p: f64, pp: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    s / (1.0 + w.powf(1.0 - pp) * s.powf(pp - 1.0)).powf(p - 1.0)
}

/// Relative capacities over the spanning subtree; `rel[v]` is the capacity,
/// with respect to the subtree rooted at v, of the part of `e` below v.
fn relative_capacities(
    tree: &WeightedTree,
    e: &BoundarySet,
    p: f64,
    spanning: &[NodeId],
) -> Result<Vec<f64>> {
    let pp = conjugate(p)?;
    let mut rel = vec![0.0; tree.node_count()];
    let mut acc = vec![0.0; tree.node_count()];
    for &v in spanning.iter().rev() {
        let value = if e.contains(v) {
            tree.weight(v)
        } else {
            combine(acc[v.index()], tree.weight(v), p, pp)
        };
        rel[v.index()] = value;
        if let Some(par) = tree.parent(v) {
            acc[par.index()] += value;
        }
    }
    Ok(rel)
}

/// Exact p-capacity of the cylinder union encoded by the antichain `e`:
/// the admissibility constraint is If >= 1 at every antichain node.
/// Returns 0 for the empty set.
pub fn capacity(tree: &WeightedTree, e: &BoundarySet, p: f64) -> Result<f64> {
    conjugate(p)?;
    if e.is_empty() {
        return Ok(0.0);
    }
    let spanning = spanning_nodes(tree, e);
    let rel = relative_capacities(tree, e, p, &spanning)?;
    Ok(rel[tree.root().index()])
}

/// Extremal pair attaining the capacity of `e`, with diagnostics.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub capacity: f64,
    /// The extremal function; zero off the spanning subtree.
    pub phi: NodeFunction,
    /// The extremal measure, carried by the antichain of `e`.
    pub mu: TreeMeasure,
    /// max |I phi - 1| over the antichain nodes.
    pub constraint_residual: f64,
    /// Carleson testing norm of `mu`; equals 1 for the true equilibrium.
    pub carleson_norm_mu: f64,
}

/// Equilibrium function and measure for a nonempty antichain, reconstructed
/// top-down from the relative capacities: phi(o) = (Cap/pi(o))^(p'-1), and
/// each subtree solves its own problem with target rescaled by 1 - I phi at
/// the parent.
pub fn equilibrium(tree: &WeightedTree, e: &BoundarySet, p: f64) -> Result<EquilibriumResult> {
    let pp = conjugate(p)?;
    if e.is_empty() {
        return Err(Error::EmptyBoundarySet);
    }
    let spanning = spanning_nodes(tree, e);
    let rel = relative_capacities(tree, e, p, &spanning)?;
    let cap = rel[tree.root().index()];

    let mut phi = NodeFunction::zeros(tree);
    let mut iphi = vec![0.0; tree.node_count()];
    let mut remaining = vec![0.0; tree.node_count()];
    for &v in &spanning {
        let (r_in, iphi_up) = match tree.parent(v) {
            Some(par) => (remaining[par.index()], iphi[par.index()]),
            None => (1.0, 0.0),
        };
        let phi_rel = (rel[v.index()] / tree.weight(v)).powf(pp - 1.0);
        let value = r_in * phi_rel;
        phi.set(v, value);
        iphi[v.index()] = iphi_up + value;
        remaining[v.index()] = r_in - value;
    }

    let mut residual = 0.0f64;
    let mut masses = Vec::with_capacity(e.len());
    for &a in e.nodes() {
        residual = residual.max((iphi[a.index()] - 1.0).abs());
        masses.push((a, tree.weight(a) * phi.get(a).powf(p - 1.0)));
    }
    let mu = TreeMeasure::from_masses(tree, &masses)?;
    let norm = carleson_norm(tree, &mu, p)?;
    Ok(EquilibriumResult {
        capacity: cap,
        phi,
        mu,
        constraint_residual: residual,
        carleson_norm_mu: norm,
    })
}

// ---- oracles ----------------------------------------------------------------

/// Options shared by both optimization oracles.
#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Target relative error, certified before returning.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            tol: 1e-8,
            max_iters: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOutcome {
    pub value: f64,
    /// Certified relative error bound at termination.
    pub gap: f64,
    pub iters: usize,
}

struct SpanningProblem {
    /// Spanning nodes by (depth, id) ascending.
    nodes: Vec<NodeId>,
    /// Position of each node's parent in `nodes`.
    parent_pos: Vec<Option<usize>>,
    weight: Vec<f64>,
    /// For each antichain node: the positions along its root geodesic.
    paths: Vec<Vec<u32>>,
    /// Position of each antichain node.
    atom_pos: Vec<usize>,
}

impl SpanningProblem {
    fn build(tree: &WeightedTree, e: &BoundarySet) -> SpanningProblem {
        let nodes = spanning_nodes(tree, e);
        let mut pos = vec![u32::MAX; tree.node_count()];
        for (i, &v) in nodes.iter().enumerate() {
            pos[v.index()] = i as u32;
        }
        let parent_pos = nodes
            .iter()
            .map(|&v| tree.parent(v).map(|p| pos[p.index()] as usize))
            .collect();
        let weight = nodes.iter().map(|&v| tree.weight(v)).collect();
        let mut paths = Vec::with_capacity(e.len());
        let mut atom_pos = Vec::with_capacity(e.len());
        for &a in e.nodes() {
            let mut path: Vec<u32> = tree
                .path_from_root(a)
                .into_iter()
                .map(|v| pos[v.index()])
                .collect();
            path.sort_unstable();
            atom_pos.push(*path.last().unwrap() as usize);
            paths.push(path);
        }
        SpanningProblem {
            nodes,
            parent_pos,
            weight,
            paths,
            atom_pos,
        }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// sum of pi phi^p over the spanning subtree.
    fn objective(&self, phi: &[f64], p: f64) -> f64 {
        phi.iter()
            .zip(&self.weight)
            .map(|(&x, &w)| w * x.powf(p))
            .sum()
    }

    fn path_sum(&self, phi: &[f64], k: usize) -> f64 {
        self.paths[k].iter().map(|&i| phi[i as usize]).sum()
    }

    fn min_path_sum(&self, phi: &[f64]) -> f64 {
        (0..self.paths.len())
            .map(|k| self.path_sum(phi, k))
            .fold(f64::INFINITY, f64::min)
    }

    /// Energy of a measure with masses `m` at the antichain atoms.
    fn atom_energy(&self, m: &[f64], pp: f64) -> f64 {
        let istar = self.atom_istar(m);
        istar
            .iter()
            .zip(&self.weight)
            .map(|(&is, &w)| {
                if is > 0.0 {
                    w.powf(1.0 - pp) * is.powf(pp)
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn atom_istar(&self, m: &[f64]) -> Vec<f64> {
        let mut istar = vec![0.0; self.len()];
        for (k, &pos) in self.atom_pos.iter().enumerate() {
            istar[pos] = m[k];
        }
        for i in (0..self.len()).rev() {
            if let Some(par) = self.parent_pos[i] {
                istar[par] += istar[i];
            }
        }
        istar
    }

    /// Wolff potentials at the atoms: gradient of the energy is p' * V.
    fn atom_potentials(&self, m: &[f64], pp: f64) -> Vec<f64> {
        let istar = self.atom_istar(m);
        let mut v = vec![0.0; self.len()];
        for i in 0..self.len() {
            let up = self.parent_pos[i].map_or(0.0, |par| v[par]);
            let is = istar[i];
            let term = if is > 0.0 {
                self.weight[i].powf(1.0 - pp) * is.powf(pp - 1.0)
            } else {
                0.0
            };
            v[i] = up + term;
        }
        self.atom_pos.iter().map(|&pos| v[pos]).collect()
    }

    /// Lower bound on the capacity from the measure with atom masses `m`,
    /// via the dual ratio mass^p / energy^(p-1).
    fn dual_value(&self, m: &[f64], p: f64, pp: f64) -> f64 {
        let total: f64 = m.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        let en = self.atom_energy(m, pp);
        if en <= 0.0 {
            return 0.0;
        }
        total.powf(p) / en.powf(p - 1.0)
    }
}

/// Minimizes sum pi phi^p over phi >= 0 subject to I phi >= 1 at every
/// antichain node, by projected gradient with backtracking; the projection
/// onto the constraint polytope is computed with Dykstra's alternating
/// scheme. Termination is certified by a primal-dual gap.
pub fn capacity_primal_oracle(
    tree: &WeightedTree,
    e: &BoundarySet,
    p: f64,
    opts: OracleOptions,
) -> Result<OracleOutcome> {
    let pp = conjugate(p)?;
    if e.is_empty() {
        return Ok(OracleOutcome {
            value: 0.0,
            gap: 0.0,
            iters: 0,
        });
    }
    let prob = SpanningProblem::build(tree, e);
    let n = prob.len();

    // Uniform feasible start: constant 1/L with L the shortest constraint path.
    let min_len = prob.paths.iter().map(|p| p.len()).min().unwrap() as f64;
    let mut phi = vec![1.0 / min_len; n];
    let mut step = 0.25 * min_len / prob.weight.iter().fold(0.0f64, |a, &w| a.max(w)).max(1e-300);
    let mut value = prob.objective(&phi, p);
    let mut best = certified(&prob, &phi, p, pp);
    if best.1 <= opts.tol {
        return Ok(OracleOutcome {
            value: best.0,
            gap: best.1,
            iters: 0,
        });
    }

    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    for iter in 1..=opts.max_iters {
        for i in 0..n {
            grad[i] = p * prob.weight[i] * phi[i].powf(p - 1.0);
        }
        let mut accepted = false;
        for _ in 0..50 {
            for i in 0..n {
                trial[i] = phi[i] - step * grad[i];
            }
            dykstra_project(&prob, &mut trial);
            let tval = prob.objective(&trial, p);
            if tval <= value {
                phi.copy_from_slice(&trial);
                value = tval;
                step *= 1.25;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        let cert = certified(&prob, &phi, p, pp);
        if cert.1 < best.1 {
            best = cert;
        }
        if best.1 <= opts.tol {
            return Ok(OracleOutcome {
                value: best.0,
                gap: best.1,
                iters: iter,
            });
        }
        if !accepted {
            // Step collapse: the gap certificate did not reach tol.
            return Err(Error::NonConvergence {
                iters: iter,
                residual: best.1,
            });
        }
    }
    Err(Error::NonConvergence {
        iters: opts.max_iters,
        residual: best.1,
    })
}

/// Feasible primal value together with a certified relative error bound:
/// rescale to exact feasibility, then compare against the dual value of the
/// measure read off the KKT relation mass = pi phi^(p-1).
fn certified(prob: &SpanningProblem, phi: &[f64], p: f64, pp: f64) -> (f64, f64) {
    let m = prob.min_path_sum(phi);
    if m <= 0.0 || m.is_nan() {
        return (f64::INFINITY, f64::INFINITY);
    }
    let scaled: Vec<f64> = phi.iter().map(|&x| (x / m).max(0.0)).collect();
    let primal = prob.objective(&scaled, p);
    let masses: Vec<f64> = prob
        .atom_pos
        .iter()
        .map(|&i| prob.weight[i] * scaled[i].powf(p - 1.0))
        .collect();
    let dual = prob.dual_value(&masses, p, pp);
    if dual <= 0.0 {
        return (primal, f64::INFINITY);
    }
    let gap = ((primal - dual) / primal).max(0.0);
    (primal, gap)
}

/// Dykstra's alternating projection onto the intersection of the positive
/// orthant and the halfspaces {sum over path >= 1}.
fn dykstra_project(prob: &SpanningProblem, x: &mut [f64]) {
    let k = prob.paths.len();
    let mut corrections: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let mut orthant_corr = vec![0.0; x.len()];
    for path in &prob.paths {
        corrections.push(vec![0.0; path.len()]);
    }
    for _sweep in 0..400 {
        let mut shift = 0.0f64;
        // Halfspace passes.
        for (ci, path) in prob.paths.iter().enumerate() {
            let corr = &mut corrections[ci];
            let mut dot = 0.0;
            for (j, &i) in path.iter().enumerate() {
                x[i as usize] += corr[j];
                dot += x[i as usize];
            }
            let deficit = (1.0 - dot).max(0.0) / path.len() as f64;
            for (j, &i) in path.iter().enumerate() {
                let before = x[i as usize];
                let after = before + deficit;
                corr[j] = -deficit;
                x[i as usize] = after;
                shift = shift.max(deficit.abs());
            }
        }
        // Orthant pass.
        for i in 0..x.len() {
            let y = x[i] + orthant_corr[i];
            let proj = y.max(0.0);
            orthant_corr[i] = y - proj;
            shift = shift.max((proj - x[i]).abs());
            x[i] = proj;
        }
        if shift <= 1e-14 {
            break;
        }
    }
    // Guarantee feasibility within roundoff after truncated sweeps.
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let m = prob.min_path_sum(x);
    if m > 0.0 && m < 1.0 {
        for v in x.iter_mut() {
            *v /= m;
        }
    }
}

/// Maximizes mass(E)^p / energy^(p-1) over measures on the antichain by
/// normalizing the total mass to 1 and minimizing the energy over the
/// simplex with projected gradient steps; termination is certified by the
/// Frank-Wolfe gap.
pub fn capacity_dual_oracle(
    tree: &WeightedTree,
    e: &BoundarySet,
    p: f64,
    opts: OracleOptions,
) -> Result<OracleOutcome> {
    let pp = conjugate(p)?;
    if e.is_empty() {
        return Ok(OracleOutcome {
            value: 0.0,
            gap: 0.0,
            iters: 0,
        });
    }
    let prob = SpanningProblem::build(tree, e);
    let k = prob.paths.len();
    let mut m = vec![1.0 / k as f64; k];
    let mut en = prob.atom_energy(&m, pp);
    if k == 1 {
        return Ok(OracleOutcome {
            value: prob.dual_value(&m, p, pp),
            gap: 0.0,
            iters: 0,
        });
    }
    let mut step = 0.5 / en.max(1e-300);
    let mut trial = vec![0.0; k];
    for iter in 1..=opts.max_iters {
        let pot = prob.atom_potentials(&m, pp);
        let grad: Vec<f64> = pot.iter().map(|&v| pp * v).collect();
        // Frank-Wolfe gap certifies E(m) - E* <= gap_fw.
        let gdotm: f64 = grad.iter().zip(&m).map(|(&g, &x)| g * x).sum();
        let gmin = grad.iter().cloned().fold(f64::INFINITY, f64::min);
        let gap_fw = gdotm - gmin;
        let rel = (p - 1.0) * gap_fw / en.max(1e-300);
        if rel <= opts.tol {
            return Ok(OracleOutcome {
                value: prob.dual_value(&m, p, pp),
                gap: rel.max(0.0),
                iters: iter,
            });
        }
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..k {
                trial[i] = m[i] - step * grad[i];
            }
            project_simplex(&mut trial);
            let ten = prob.atom_energy(&trial, pp);
            if ten < en {
                m.copy_from_slice(&trial);
                en = ten;
                step *= 1.25;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iters: iter,
                residual: rel,
            });
        }
    }
    let pot = prob.atom_potentials(&m, pp);
    let grad: Vec<f64> = pot.iter().map(|&v| pp * v).collect();
    let gdotm: f64 = grad.iter().zip(&m).map(|(&g, &x)| g * x).sum();
    let gmin = grad.iter().cloned().fold(f64::INFINITY, f64::min);
    let rel = (p - 1.0) * (gdotm - gmin) / en.max(1e-300);
    Err(Error::NonConvergence {
        iters: opts.max_iters,
        residual: rel,
    })
}

/// Euclidean projection onto the probability simplex (Duchi et al.).
fn project_simplex(v: &mut [f64]) {
    let n = v.len();
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cssv = 0.0;
    let mut rho = 0usize;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cssv += ui;
        let t = (cssv - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            rho = i + 1;
            theta = t;
        }
    }
    if rho == 0 {
        let (max_idx, _) = v
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .unwrap();
        for x in v.iter_mut() {
            *x = 0.0;
        }
        v[max_idx] = 1.0;
        return;
    }
    let _ = n;
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Direct stationarity solve for p = 2: the equilibrium masses satisfy the
/// linear system G m = 1 with Gram kernel `G[i][j] = d_pi(confluent(a_i, a_j))`,
/// and the capacity is the total mass. Independent cross-check route.
pub fn capacity_p2_direct(tree: &WeightedTree, e: &BoundarySet) -> Result<f64> {
    if e.is_empty() {
        return Ok(0.0);
    }
    let atoms = e.nodes();
    let n = atoms.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let c = tree.confluent(atoms[i], atoms[j])?;
            let v = tree.d_pi(c, 2.0)?;
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    let rhs = vec![1.0; n];
    let masses = cholesky_solve(&mut g, n, &rhs)?;
    Ok(masses.iter().sum())
}

/// In-place Cholesky factorization and solve for a symmetric positive
/// definite system.
fn cholesky_solve(a: &mut [f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return Err(Error::NonConvergence {
                iters: j,
                residual: d,
            });
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= a[i * n + k] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= a[k * n + i] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    Ok(y)
}
