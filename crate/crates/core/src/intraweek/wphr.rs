//! Weekly slow plan with hour-by-hour recourse on a scenario tree.
//!
//! Only tractable on toy instances: for every slow plan the fast units and
//! storage are optimised by backward induction over the tree, carrying the
//! previous-hour fast commitment as state and the value as a general
//! (nonconvex) piecewise-linear function of the stock.

use super::continuous::{storage_cost_curve, ConvexPwl, Seg, SupplyCurve};
use super::CostToGo;
use crate::error::{Error, Result};
use crate::pwl::DOMAIN_TOL;
use crate::system_model::{HourlyUncertainty, SystemModel};

pub const WPHR_MAX_HOURS: usize = 3;
pub const WPHR_MAX_BRANCHING: usize = 3;
pub const WPHR_MAX_UNITS: usize = 2;

const MERGE_TOL: f64 = 1e-12;

/// Hourly realisation with its probability conditional on the parent.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub probability: f64,
    pub uncertainty: HourlyUncertainty,
    pub children: Vec<TreeNode>,
}

/// Hour-by-hour uncertainty of one week; `roots` are the hour-0 outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    roots: Vec<TreeNode>,
    depth: usize,
}

impl ScenarioTree {
    pub fn new(roots: Vec<TreeNode>) -> Result<Self> {
        fn check(nodes: &[TreeNode], level: usize, depth: &mut Option<usize>) -> Result<()> {
            if nodes.is_empty() {
                match depth {
                    Some(d) if *d != level => {
                        return Err(Error::InvalidModel(
                            "scenario tree leaves at different depths".into(),
                        ))
                    }
                    _ => *depth = Some(level),
                }
                return Ok(());
            }
            let total: f64 = nodes.iter().map(|n| n.probability).sum();
            if nodes
                .iter()
                .any(|n| n.probability.is_nan() || n.probability < 0.0)
                || (total - 1.0).abs() > 1e-9
            {
                return Err(Error::InvalidModel(format!(
                    "child probabilities at depth {level} sum to {total}"
                )));
            }
            for n in nodes {
                check(&n.children, level + 1, depth)?;
            }
            Ok(())
        }
        if roots.is_empty() {
            return Err(Error::InvalidModel("empty scenario tree".into()));
        }
        let mut depth = None;
        check(&roots, 0, &mut depth)?;
        Ok(Self {
            roots,
            depth: depth.unwrap_or(0),
        })
    }

    /// Tree whose root-to-leaf paths are the given equally likely blocks;
    /// identical prefixes share nodes.
    pub fn from_scenarios(blocks: &[Vec<HourlyUncertainty>]) -> Result<Self> {
        fn build(blocks: &[&Vec<HourlyUncertainty>], h: usize) -> Vec<TreeNode> {
            let mut groups: Vec<(HourlyUncertainty, Vec<&Vec<HourlyUncertainty>>)> = Vec::new();
            for b in blocks {
                if h >= b.len() {
                    continue;
                }
                match groups.iter_mut().find(|(u, _)| *u == b[h]) {
                    Some((_, members)) => members.push(b),
                    None => groups.push((b[h].clone(), vec![b])),
                }
            }
            let total = blocks.len() as f64;
            groups
                .into_iter()
                .map(|(uncertainty, members)| TreeNode {
                    probability: members.len() as f64 / total,
                    uncertainty,
                    children: build(&members, h + 1),
                })
                .collect()
        }
        let refs: Vec<&Vec<HourlyUncertainty>> = blocks.iter().collect();
        Self::new(build(&refs, 0))
    }

    pub fn roots(&self) -> &[TreeNode] {
        &self.roots
    }

    /// Number of hours.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Root-to-leaf paths with their probabilities.
    pub fn scenarios(&self) -> Vec<(f64, Vec<HourlyUncertainty>)> {
        fn walk(
            nodes: &[TreeNode],
            prob: f64,
            path: &mut Vec<HourlyUncertainty>,
            out: &mut Vec<(f64, Vec<HourlyUncertainty>)>,
        ) {
            for n in nodes {
                path.push(n.uncertainty.clone());
                if n.children.is_empty() {
                    out.push((prob * n.probability, path.clone()));
                } else {
                    walk(&n.children, prob * n.probability, path, out);
                }
                path.pop();
            }
        }
        let mut out = Vec::new();
        walk(&self.roots, 1.0, &mut Vec::new(), &mut out);
        out
    }

    fn max_branching(&self) -> usize {
        fn walk(nodes: &[TreeNode]) -> usize {
            nodes
                .iter()
                .map(|n| walk(&n.children))
                .fold(nodes.len(), usize::max)
        }
        walk(&self.roots)
    }
}

/// Breakpoint list of a continuous piecewise-linear function (possibly a
/// single point).
#[derive(Debug, Clone)]
struct Pts {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Pts {
    fn from_convex(f: &ConvexPwl) -> Self {
        let (xs, ys) = f.points().into_iter().unzip();
        Self { xs, ys }.dedup()
    }

    fn dedup(self) -> Self {
        let mut xs: Vec<f64> = Vec::with_capacity(self.xs.len());
        let mut ys: Vec<f64> = Vec::with_capacity(self.ys.len());
        for (x, y) in self.xs.into_iter().zip(self.ys) {
            match xs.last() {
                Some(&last) if x - last <= MERGE_TOL => {
                    let k = ys.len() - 1;
                    ys[k] = ys[k].min(y);
                }
                _ => {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        Self { xs, ys }
    }

    fn lo(&self) -> f64 {
        self.xs[0]
    }

    fn hi(&self) -> f64 {
        *self.xs.last().expect("non-empty")
    }

    fn covers(&self, a: f64, b: f64) -> bool {
        self.lo() <= a + DOMAIN_TOL && self.hi() >= b - DOMAIN_TOL
    }

    fn eval(&self, x: f64) -> Option<f64> {
        if x < self.lo() - DOMAIN_TOL || x > self.hi() + DOMAIN_TOL {
            return None;
        }
        let k = self.xs.partition_point(|&b| b < x);
        if k == 0 {
            return Some(self.ys[0]);
        }
        if k == self.xs.len() {
            return Some(*self.ys.last().expect("non-empty"));
        }
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let t = (x - x0) / (x1 - x0);
        Some(self.ys[k - 1] + t * (self.ys[k] - self.ys[k - 1]))
    }

    fn shifted(mut self, c: f64) -> Self {
        for y in &mut self.ys {
            *y += c;
        }
        self
    }
}

/// Pointwise minimum of `pieces` on `[lo, hi]`, whose domains jointly cover it.
fn lower_envelope(pieces: &[Pts], lo: f64, hi: f64) -> Result<Pts> {
    let mut cand: Vec<f64> = vec![lo, hi];
    for p in pieces {
        cand.extend(p.xs.iter().copied().filter(|&x| x > lo && x < hi));
    }
    cand.sort_by(f64::total_cmp);
    cand.dedup_by(|b, a| *b - *a <= MERGE_TOL);

    let mut extra = Vec::new();
    for w in cand.windows(2) {
        let (a, b) = (w[0], w[1]);
        let active: Vec<(f64, f64)> = pieces
            .iter()
            .filter(|p| p.covers(a, b))
            .filter_map(|p| Some((p.eval(a)?, p.eval(b)?)))
            .collect();
        for (i, &(fa, fb)) in active.iter().enumerate() {
            for &(ga, gb) in &active[i + 1..] {
                let (da, db) = (fa - ga, fb - gb);
                if da * db < 0.0 {
                    extra.push(a + (b - a) * da / (da - db));
                }
            }
        }
    }
    cand.extend(extra);
    cand.sort_by(f64::total_cmp);
    cand.dedup_by(|b, a| *b - *a <= MERGE_TOL);

    let mut ys = Vec::with_capacity(cand.len());
    for &x in &cand {
        let v = pieces
            .iter()
            .filter_map(|p| p.eval(x))
            .fold(f64::INFINITY, f64::min);
        if !v.is_finite() {
            return Err(Error::solver(format!(
                "recourse value undefined at stock {x}"
            )));
        }
        ys.push(v);
    }
    Ok(Pts { xs: cand, ys })
}

/// `s ↦ min_q φ(q) + f(s + q)` on `[lo, hi]` for convex `φ`.
fn inf_conv_general(f: &Pts, phi: &ConvexPwl, lo: f64, hi: f64) -> Result<Pts> {
    let reflected = phi.reflected();
    let mut pieces = Vec::with_capacity(f.xs.len());
    let seg_count = f.xs.len().saturating_sub(1).max(1);
    for k in 0..seg_count {
        let piece = if f.xs.len() == 1 {
            ConvexPwl::point(f.xs[0], f.ys[0])
        } else {
            let len = f.xs[k + 1] - f.xs[k];
            ConvexPwl {
                start: f.xs[k],
                start_value: f.ys[k],
                segs: vec![Seg {
                    len,
                    slope: (f.ys[k + 1] - f.ys[k]) / len,
                }],
            }
        };
        if let Some(r) = piece.inf_conv(&reflected).restrict(lo, hi) {
            pieces.push(Pts::from_convex(&r));
        }
    }
    lower_envelope(&pieces, lo, hi)
}

/// `Σ w_k f_k` on the union of breakpoints.
fn weighted_sum(terms: &[(f64, Pts)]) -> Pts {
    let mut xs: Vec<f64> = terms
        .iter()
        .flat_map(|(_, f)| f.xs.iter().copied())
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|b, a| *b - *a <= MERGE_TOL);
    let ys = xs
        .iter()
        .map(|&x| {
            terms
                .iter()
                .map(|(w, f)| w * f.eval(x).unwrap_or(f64::INFINITY))
                .sum()
        })
        .collect();
    Pts { xs, ys }
}

struct Toy<'a> {
    model: &'a SystemModel,
    fast: Vec<usize>,
    /// `[hour][unit]` on/off of the slow units in the plan under evaluation.
    slow_on: Vec<Vec<bool>>,
    terminal: Pts,
    hours: usize,
}

impl Toy<'_> {
    fn fast_on(&self, mask: usize, unit: usize) -> bool {
        self.fast
            .iter()
            .position(|&i| i == unit)
            .is_some_and(|k| mask >> k & 1 == 1)
    }

    fn startups(&self, prev: usize, now: usize) -> f64 {
        self.fast
            .iter()
            .enumerate()
            .filter(|&(k, _)| now >> k & 1 == 1 && prev >> k & 1 == 0)
            .map(|(_, &i)| self.model.units[i].startup_cost)
            .sum()
    }

    fn hour_curve(&self, h: usize, mask: usize, unc: &HourlyUncertainty) -> ConvexPwl {
        let mut fixed = 0.0;
        let mut min_output = 0.0;
        let mut blocks = Vec::new();
        for (i, unit) in self.model.units.iter().enumerate() {
            let on = if unit.is_slow() {
                self.slow_on[h][i]
            } else {
                self.fast_on(mask, i)
            };
            if on && unc.availability[i] {
                fixed += unit.variable_cost * unit.p_min;
                min_output += unit.p_min;
                blocks.push(Seg {
                    len: unit.p_max - unit.p_min,
                    slope: unit.variable_cost,
                });
            }
        }
        let supply = SupplyCurve::new(fixed, min_output, blocks, self.model.ens_penalty);
        storage_cost_curve(&supply, unc.residual_demand, &self.model.storage)
    }

    /// Value from the start of hour `h`, by previous fast commitment.
    fn values(&self, nodes: &[TreeNode], h: usize) -> Result<Vec<Pts>> {
        let masks = 1usize << self.fast.len();
        let (lo, hi) = (self.model.storage.x_min, self.model.storage.x_max);
        // conv[c][u]: cost of hour h in child c with fast pattern u, then onwards
        let mut conv: Vec<Vec<Pts>> = Vec::with_capacity(nodes.len());
        for node in nodes {
            let next = if h + 1 == self.hours {
                vec![self.terminal.clone(); masks]
            } else {
                self.values(&node.children, h + 1)?
            };
            let row = (0..masks)
                .map(|u| {
                    inf_conv_general(&next[u], &self.hour_curve(h, u, &node.uncertainty), lo, hi)
                })
                .collect::<Result<Vec<_>>>()?;
            conv.push(row);
        }
        (0..masks)
            .map(|prev| {
                let terms = nodes
                    .iter()
                    .zip(&conv)
                    .map(|(node, row)| {
                        let options: Vec<Pts> = (0..masks)
                            .map(|u| row[u].clone().shifted(self.startups(prev, u)))
                            .collect();
                        Ok((node.probability, lower_envelope(&options, lo, hi)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(weighted_sum(&terms))
            })
            .collect()
    }
}

/// Expected week value when the slow plan is fixed for the week and the
/// fast units and storage react hour by hour to the tree.
pub fn wphr_week_toy(
    x: f64,
    tree: &ScenarioTree,
    ctg: &CostToGo,
    model: &SystemModel,
) -> Result<f64> {
    let hours = tree.depth();
    if hours == 0 || hours > WPHR_MAX_HOURS {
        return Err(Error::GuardExceeded(format!(
            "tree depth {hours} outside 1..={WPHR_MAX_HOURS}"
        )));
    }
    if tree.max_branching() > WPHR_MAX_BRANCHING {
        return Err(Error::GuardExceeded(format!(
            "tree branching above {WPHR_MAX_BRANCHING}"
        )));
    }
    if model.num_units() > WPHR_MAX_UNITS {
        return Err(Error::GuardExceeded(format!(
            "{} units above {WPHR_MAX_UNITS}",
            model.num_units()
        )));
    }
    for (_, path) in tree.scenarios() {
        super::check_inputs(x, &path, ctg, model)?;
    }
    let x = x.clamp(model.storage.x_min, model.storage.x_max);
    let slow = model.slow_units();
    let terminal = Pts {
        xs: ctg.breakpoints().to_vec(),
        ys: ctg.values().to_vec(),
    };
    let mut best = f64::INFINITY;
    for plan in 0..1usize << (slow.len() * hours) {
        let on = |k: usize, h: usize| plan >> (k * hours + h) & 1 == 1;
        let mut slow_on = vec![vec![false; model.num_units()]; hours];
        let mut startups = 0.0;
        for (k, &i) in slow.iter().enumerate() {
            for (h, row) in slow_on.iter_mut().enumerate() {
                row[i] = on(k, h);
                if on(k, h) && (h == 0 || !on(k, h - 1)) {
                    startups += model.units[i].startup_cost;
                }
            }
        }
        let toy = Toy {
            model,
            fast: model.fast_units(),
            slow_on,
            terminal: terminal.clone(),
            hours,
        };
        let root = toy.values(tree.roots(), 0)?;
        let v = root[0]
            .eval(x)
            .ok_or_else(|| Error::solver("initial stock outside the value domain"))?;
        best = best.min(startups + v);
    }
    Ok(best)
}
