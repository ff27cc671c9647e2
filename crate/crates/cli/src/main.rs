//! Batch front-end: capacities, equilibrium reports, Ahlfors-space
//! estimation sweeps, ball-capacity sweeps, comparison-theorem checks, and
//! the selftest suite.
//!
//! Exit codes: 0 success, 1 malformed input, 2 check failure (an asserted
//! constant violated), 3 oracle non-convergence.

mod config;
mod output;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::Config;
use output::{num, Format, Table};
use treecap::lab;
use treecap::spaces::{self, DyadicSpace, SetDescriptor, SpaceConfig, SpaceKind, SpaceMeasure};
use treecap::tree::{BoundarySet, NodeId, TreeMeasure, TreeSpec, WeightRule, WeightedTree};
use treecap::{acceptance, capacity, equilibrium, instances, potential, rng::SplitMix64};

#[derive(Parser)]
#[command(
    name = "treecap",
    version,
    about = "Nonlinear p-capacities on weighted trees and dyadic capacity estimation"
)]
struct Cli {
    /// Output format: human, csv or records
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct TreeArgs {
    /// Tree file path, `file:PATH`, or generator `binary:H`, `binary:2:H`,
    /// `homogeneous:B:H`, `chain:H`
    #[arg(long)]
    tree: String,
    /// Boundary set: `leaves`, `depth:K`, or `ids:A,B,C`
    #[arg(long)]
    set: String,
    /// Integrability exponent p > 1
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact p-capacity of a boundary antichain, with optional oracle runs
    Cap {
        #[command(flatten)]
        tree: TreeArgs,
        /// Also run the primal/dual optimization oracles and report them
        #[arg(long)]
        oracles: bool,
    },
    /// Equilibrium function and measure with diagnostics
    Equilibrium {
        #[command(flatten)]
        tree: TreeArgs,
    },
    /// Per-depth capacity estimates of a continuous set in an exemplar space
    Estimate {
        /// Space kind: interval, cube2, cube3, cantor
        #[arg(long)]
        space: String,
        /// Set descriptor: `interval a b ...`, `ifs r t ...`, `points x ...`
        #[arg(long)]
        set: String,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        /// Depth sweep `A..B` (inclusive)
        #[arg(long)]
        depths: Option<String>,
    },
    /// Ball capacity estimates over a radius sweep r = delta^k
    Ball {
        #[arg(long)]
        space: String,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        /// Level sweep `A..B` for r = delta^level
        #[arg(long)]
        levels: Option<String>,
    },
    /// Run one lab check: mww, cmcap, monotonicity, trace, shadow, energy
    Check {
        #[arg(long)]
        name: String,
        #[arg(long)]
        tree: Option<String>,
        #[arg(long)]
        space: Option<String>,
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        depths: Option<String>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Measure family for mww/energy: `lebesgue` or `atom:X[:MASS]`
        #[arg(long)]
        measure: Option<String>,
    },
    /// Run the full acceptance suite and exit with its status
    Selftest,
}

fn main() {
    std::process::exit(run());
}

/// Write to stdout, exiting quietly when the reader has gone away
/// (`treecap ... | head` must not panic on the broken pipe).
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(err) = out.write_all(text.as_bytes()) {
        if err.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap would exit 2 on its own; the exit contract wants 1
            let is_help = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if is_help { 0 } else { 1 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            classify(&err)
        }
    }
}

/// Map library errors onto the exit-code contract.
fn classify(err: &anyhow::Error) -> i32 {
    if let Some(treecap::Error::NonConvergence { .. }) = err.downcast_ref::<treecap::Error>() {
        3
    } else {
        1
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let cfg = Config::load()?;
    let format = resolve_format(&cfg, cli.format.as_deref())?;
    match cli.command {
        Command::Cap { tree, oracles } => cmd_cap(&cfg, format, &tree, oracles),
        Command::Equilibrium { tree } => cmd_equilibrium(&cfg, format, &tree),
        Command::Estimate {
            space,
            set,
            s,
            p,
            depths,
        } => cmd_estimate(&cfg, format, &space, &set, s, p, depths.as_deref()),
        Command::Ball { space, s, p, levels } => {
            cmd_ball(&cfg, format, &space, s, p, levels.as_deref())
        }
        Command::Check {
            name,
            tree,
            space,
            set,
            s,
            p,
            q,
            depth,
            depths,
            samples,
            seed,
            measure,
        } => cmd_check(
            &cfg,
            format,
            CheckArgs {
                name,
                tree,
                space,
                set,
                s,
                p,
                q,
                depth,
                depths,
                samples,
                seed,
                measure,
            },
        ),
        Command::Selftest => cmd_selftest(format),
    }
}

fn resolve_format(cfg: &Config, flag: Option<&str>) -> Result<Format> {
    let name = flag.or_else(|| cfg.get("format")).unwrap_or("human");
    Format::parse(name).ok_or_else(|| anyhow!("unknown format `{name}`"))
}

// ---- input parsing -------------------------------------------------------------

fn parse_tree(spec: &str) -> Result<WeightedTree> {
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        return Ok(WeightedTree::parse(&text)?);
    }
    if std::path::Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
        return Ok(WeightedTree::parse(&text)?);
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let unit = WeightRule::Constant(1.0);
    let tree = match parts.as_slice() {
        ["binary", h] => WeightedTree::build(TreeSpec::Homogeneous {
            branching: 2,
            height: h.parse().context("binary height")?,
            weight: unit,
            delta: None,
        })?,
        ["binary", b, h] => {
            let b: u32 = b.parse().context("binary branching")?;
            if b != 2 {
                bail!("`binary` means branching 2; use homogeneous:{b}:{h}");
            }
            WeightedTree::build(TreeSpec::Homogeneous {
                branching: 2,
                height: h.parse().context("binary height")?,
                weight: unit,
                delta: None,
            })?
        }
        ["homogeneous", b, h] => WeightedTree::build(TreeSpec::Homogeneous {
            branching: b.parse().context("branching")?,
            height: h.parse().context("height")?,
            weight: unit,
            delta: None,
        })?,
        ["chain", h] => WeightedTree::build(TreeSpec::Chain {
            height: h.parse().context("chain height")?,
            weight: unit,
        })?,
        _ => bail!("`{spec}` is neither a readable tree file nor a generator"),
    };
    Ok(tree)
}

fn parse_set(tree: &WeightedTree, spec: &str) -> Result<BoundarySet> {
    if spec == "leaves" {
        return Ok(BoundarySet::from_antichain(tree, &tree.leaves())?);
    }
    if let Some(k) = spec.strip_prefix("depth:") {
        let k: u32 = k.parse().context("set depth")?;
        let nodes: Vec<NodeId> = tree.nodes().filter(|&v| tree.depth(v) == k).collect();
        if nodes.is_empty() {
            bail!("tree has no nodes at depth {k}");
        }
        return Ok(BoundarySet::from_antichain(tree, &nodes)?);
    }
    if let Some(ids) = spec.strip_prefix("ids:") {
        let mut nodes = Vec::new();
        for tok in ids.split(',') {
            let label: u64 = tok.trim().parse().context("set node id")?;
            let v = tree
                .node_by_label(label)
                .ok_or_else(|| anyhow!("no node with id {label}"))?;
            nodes.push(v);
        }
        return Ok(BoundarySet::normalize(tree, &nodes)?);
    }
    bail!("unknown set spec `{spec}`; use `leaves`, `depth:K` or `ids:A,B,...`")
}

fn parse_space(cfg: &Config, name: &str, depth: u32) -> Result<DyadicSpace> {
    let kind = match name {
        "interval" => SpaceKind::Interval,
        "cantor" => SpaceKind::Cantor,
        "cube1" => SpaceKind::Cube(1),
        "cube2" => SpaceKind::Cube(2),
        "cube3" => SpaceKind::Cube(3),
        other => bail!("unknown space kind `{other}`"),
    };
    let delta = match cfg.get("delta") {
        Some(text) => Some(text.parse::<f64>().context("config key `delta`")?),
        None => None,
    };
    Ok(spaces::make_space(SpaceConfig { kind, depth, delta })?)
}

fn parse_range(text: &str) -> Result<(u32, u32)> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| anyhow!("range must look like `4..10`"))?;
    let lo: u32 = a.trim().parse().context("range start")?;
    let hi: u32 = b.trim().trim_start_matches('=').parse().context("range end")?;
    if hi < lo {
        bail!("empty range {lo}..{hi}");
    }
    Ok((lo, hi))
}

// ---- subcommands ----------------------------------------------------------------

fn cmd_cap(cfg: &Config, format: Format, args: &TreeArgs, oracles: bool) -> Result<i32> {
    let p = cfg.f64_or("p", args.p, 2.0)?;
    let tree = parse_tree(&args.tree)?;
    let set = parse_set(&tree, &args.set)?;
    let cap = capacity(&tree, &set, p)?;
    let mut table = Table::new(
        "capacity",
        vec!["tree", "set", "p", "nodes", "antichain", "capacity"],
    );
    table.push(vec![
        args.tree.clone(),
        args.set.clone(),
        num(p),
        tree.node_count().to_string(),
        set.len().to_string(),
        num(cap),
    ]);
    emit(&table.render(format));
    if oracles {
        let tol = cfg.f64_or("tol", None, 1e-8)?;
        let iters = cfg.u64_or("max_iters", None, 100_000)? as usize;
        let opts = treecap::OracleOptions {
            tol,
            max_iters: iters,
        };
        let primal = treecap::capacity_primal_oracle(&tree, &set, p, opts)?;
        let dual = treecap::capacity_dual_oracle(&tree, &set, p, opts)?;
        let mut otab = Table::new("oracles", vec!["route", "value", "certified_gap", "iters"]);
        otab.push(vec![
            "primal".into(),
            num(primal.value),
            num(primal.gap),
            primal.iters.to_string(),
        ]);
        otab.push(vec![
            "dual".into(),
            num(dual.value),
            num(dual.gap),
            dual.iters.to_string(),
        ]);
        emit(&otab.render(format));
    }
    Ok(0)
}

fn cmd_equilibrium(cfg: &Config, format: Format, args: &TreeArgs) -> Result<i32> {
    let p = cfg.f64_or("p", args.p, 2.0)?;
    let tree = parse_tree(&args.tree)?;
    let set = parse_set(&tree, &args.set)?;
    let eq = equilibrium(&tree, &set, p)?;
    let mut summary = Table::new(
        "equilibrium",
        vec!["capacity", "constraint_residual", "carleson_norm"],
    );
    summary.push(vec![
        num(eq.capacity),
        num(eq.constraint_residual),
        num(eq.carleson_norm_mu),
    ]);
    emit(&summary.render(format));
    let iphi = potential::hardy_all(&tree, &eq.phi);
    let mut nodes = Table::new(
        "equilibrium nodes",
        vec!["node", "depth", "weight", "phi", "iphi", "mass"],
    );
    for v in tree.nodes() {
        let phi = eq.phi.get(v);
        let mass = eq.mu.mass_at(v);
        if phi == 0.0 && mass == 0.0 {
            continue;
        }
        nodes.push(vec![
            tree.label(v).to_string(),
            tree.depth(v).to_string(),
            num(tree.weight(v)),
            num(phi),
            num(iphi.get(v)),
            num(mass),
        ]);
    }
    emit(&nodes.render(format));
    Ok(0)
}

fn cmd_estimate(
    cfg: &Config,
    format: Format,
    space_name: &str,
    set_text: &str,
    s: Option<f64>,
    p: Option<f64>,
    depths: Option<&str>,
) -> Result<i32> {
    let s = cfg.f64_or("s", s, 0.5)?;
    let p = cfg.f64_or("p", p, 2.0)?;
    let (lo, hi) = match depths.or_else(|| cfg.get("depths")) {
        Some(text) => parse_range(text)?,
        None => (3, 8),
    };
    let space = parse_space(cfg, space_name, hi)?;
    let sd = SetDescriptor::parse(set_text, space.kind().dim())?;
    let tree = spaces::weight_pi_s(&space, s, p)?;
    let mut table = Table::new(
        format!("capacity estimate: {space_name} `{set_text}` s={s} p={p}"),
        vec!["depth", "cells", "capacity", "ratio_prev"],
    );
    let mut prev: Option<f64> = None;
    for d in lo..=hi {
        let set = spaces::discretize_set(&space, &sd, d)?;
        let cap = capacity(&tree, &set, p)?;
        let ratio = prev.map_or("-".to_string(), |q| num(cap / q));
        table.push(vec![d.to_string(), set.len().to_string(), num(cap), ratio]);
        prev = Some(cap);
    }
    emit(&table.render(format));
    Ok(0)
}

fn cmd_ball(
    cfg: &Config,
    format: Format,
    space_name: &str,
    s: Option<f64>,
    p: Option<f64>,
    levels: Option<&str>,
) -> Result<i32> {
    let s = cfg.f64_or("s", s, 0.5)?;
    let p = cfg.f64_or("p", p, 2.0)?;
    let (lo, hi) = match levels {
        Some(text) => parse_range(text)?,
        None => (2, 10),
    };
    let space = parse_space(cfg, space_name, 2)?;
    let mut table = Table::new(
        format!("ball capacity estimates: {space_name} s={s} p={p}"),
        vec!["r", "level", "estimate", "point_mass_regime"],
    );
    for k in lo..=hi {
        let r = space.delta().powi(k as i32);
        let est = spaces::ball_capacity_estimate(&space, r, s, p)?;
        table.push(vec![
            num(r),
            est.level.to_string(),
            num(est.value),
            est.point_mass_regime.to_string(),
        ]);
    }
    emit(&table.render(format));
    Ok(0)
}

struct CheckArgs {
    name: String,
    tree: Option<String>,
    space: Option<String>,
    set: Option<String>,
    s: Option<f64>,
    p: Option<f64>,
    q: Option<f64>,
    depth: Option<u32>,
    depths: Option<String>,
    samples: Option<u64>,
    seed: Option<u64>,
    measure: Option<String>,
}

fn report_table(reports: &[lab::CheckReport]) -> Table {
    let mut table = Table::new(
        "check reports",
        vec![
            "check",
            "instance",
            "left",
            "right",
            "ratio",
            "bound",
            "empirical",
            "pass",
            "seed",
            "notes",
        ],
    );
    for r in reports {
        table.push(vec![
            r.check.to_string(),
            r.instance.clone(),
            num(r.left),
            num(r.right),
            num(r.ratio),
            r.bound.map_or("-".into(), num),
            r.empirical.map_or("-".into(), num),
            r.pass.to_string(),
            r.seed.map_or("-".into(), |s| s.to_string()),
            r.notes.trim_end().to_string(),
        ]);
    }
    table
}

fn parse_measure(space: &DyadicSpace, text: Option<&str>, depth: u32) -> Result<TreeMeasure> {
    match text.unwrap_or("lebesgue") {
        "lebesgue" => {
            let masses: Vec<(NodeId, f64)> = (0..space.n_cells(depth))
                .map(|j| {
                    let v = space.node(depth, j);
                    (v, space.mass(v))
                })
                .collect();
            Ok(TreeMeasure::from_masses(space.tree(), &masses)?)
        }
        other => {
            let mut parts = other.split(':');
            if parts.next() != Some("atom") {
                bail!("unknown measure `{other}`; use `lebesgue` or `atom:X[:MASS]`");
            }
            let x: f64 = parts
                .next()
                .ok_or_else(|| anyhow!("atom needs a position"))?
                .parse()
                .context("atom position")?;
            let mass: f64 = match parts.next() {
                Some(m) => m.parse().context("atom mass")?,
                None => 1.0,
            };
            Ok(spaces::pull_back_atomic(space, &[(spaces::pt1(x), mass)], depth)?.measure)
        }
    }
}

fn cmd_check(cfg: &Config, format: Format, args: CheckArgs) -> Result<i32> {
    let p = cfg.f64_or("p", args.p, 2.0)?;
    let s = cfg.f64_or("s", args.s, 0.5)?;
    let seed = cfg.u64_or("seed", args.seed, 42)?;
    let samples = cfg.u64_or("samples", args.samples, 50)? as usize;
    let reports: Vec<lab::CheckReport> = match args.name.as_str() {
        "mww" => {
            let q = cfg.f64_or("q", args.q, 2.0)?;
            let depth = cfg.u32_or("depth", args.depth, 8)?;
            let space = parse_space(cfg, args.space.as_deref().unwrap_or("interval"), depth)?;
            let mu = parse_measure(&space, args.measure.as_deref(), depth)?;
            vec![lab::check_mww(&space, &mu, s, q, depth)?]
        }
        "cmcap" => {
            let tree = parse_tree(args.tree.as_deref().unwrap_or("binary:3"))?;
            let set = parse_set(&tree, args.set.as_deref().unwrap_or("leaves"))?;
            vec![lab::check_cmcap(&tree, &set, p, samples, seed)?]
        }
        "monotonicity" => {
            let tree = parse_tree(args.tree.as_deref().unwrap_or("binary:3"))?;
            let mut rng = SplitMix64::new(seed);
            let mu = instances::random_measure(&mut rng, &tree, 2.0);
            let lambda = instances::random_node_function(&mut rng, &tree, 0.0, 1.0);
            let mut rep = lab::check_monotonicity(&tree, &mu, &lambda, p)?;
            rep.seed = Some(seed);
            vec![rep]
        }
        "trace" => {
            let tree = parse_tree(args.tree.as_deref().unwrap_or("binary:3"))?;
            let mut rng = SplitMix64::new(seed);
            let mu = instances::random_measure(&mut rng, &tree, 2.0);
            let family: Vec<BoundarySet> = (0..4)
                .map(|_| instances::random_antichain(&mut rng, &tree, 0.3))
                .collect();
            vec![lab::check_trace_conditions(
                &tree, &mu, p, &family, samples, seed,
            )?]
        }
        "shadow" => {
            let tree = parse_tree(args.tree.as_deref().unwrap_or("binary:3"))?;
            let set = parse_set(&tree, args.set.as_deref().unwrap_or("depth:1"))?;
            vec![lab::check_shadow(&tree, &set, p)?]
        }
        "energy" => {
            let (lo, hi) = match args.depths.as_deref().or_else(|| cfg.get("depths")) {
                Some(text) => parse_range(text)?,
                None => (4, 8),
            };
            let space = parse_space(cfg, args.space.as_deref().unwrap_or("interval"), hi + 1)?;
            let omega = match args.measure.as_deref().unwrap_or("lebesgue") {
                "lebesgue" => SpaceMeasure::UniformDensity { total: 1.0 },
                other => {
                    let mut parts = other.split(':');
                    if parts.next() != Some("atom") {
                        bail!("unknown measure `{other}`");
                    }
                    let x: f64 = parts
                        .next()
                        .ok_or_else(|| anyhow!("atom needs a position"))?
                        .parse()
                        .context("atom position")?;
                    SpaceMeasure::Atoms(vec![(spaces::pt1(x), 1.0)])
                }
            };
            let sweep = lab::check_energy_equivalence(&space, &omega, s, p, lo..=hi)?;
            let mut reports = sweep.per_depth;
            if let Some(last) = reports.last_mut() {
                last.notes.push_str(&format!(
                    "sweep slope {:+.4}, window [{}, {}]; ",
                    sweep.slope,
                    num(sweep.window.0),
                    num(sweep.window.1)
                ));
                last.pass &= sweep.pass;
            }
            reports
        }
        other => bail!("unknown check `{other}`"),
    };
    emit(&report_table(&reports).render(format));
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(if all_pass { 0 } else { 2 })
}

fn cmd_selftest(format: Format) -> Result<i32> {
    let results = acceptance::run_all();
    match format {
        Format::Human => {
            for r in &results {
                emit(&format!("{}\n", r.line()));
                eprintln!("  [criterion {} took {:.2}s]", r.id, r.runtime.as_secs_f64());
            }
        }
        _ => {
            let mut table = Table::new("selftest", vec!["id", "name", "passed", "details"]);
            for r in &results {
                table.push(vec![
                    r.id.to_string(),
                    r.name.to_string(),
                    r.passed.to_string(),
                    r.details.clone(),
                ]);
            }
            emit(&table.render(format));
        }
    }
    Ok(acceptance::exit_code(&results))
}
