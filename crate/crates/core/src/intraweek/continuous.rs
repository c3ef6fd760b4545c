//! Exact continuous dispatch for a fixed commitment pattern.
//!
//! With commitments frozen, the cheapest way to cover a net requirement `r`
//! in one hour is a convex piecewise-linear function of `r` (fixed minimum
//! output, then merit-order increments, then unserved energy). Expressed in
//! the hour's net storage change `q`, the hourly cost stays convex, so the
//! cheapest cost of reaching each end-of-hour stock is obtained by
//! inf-convolution (merging segments by slope) and clipping to the storage
//! box. The nonconvex cost-to-go is then minimised exactly by scanning the
//! breakpoints of both functions.

use crate::pwl::PiecewiseLinear;
use crate::system_model::Storage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Seg {
    pub len: f64,
    pub slope: f64,
}

/// Convex piecewise-linear function on `[start, start + Σ len]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ConvexPwl {
    pub start: f64,
    pub start_value: f64,
    pub segs: Vec<Seg>,
}

impl ConvexPwl {
    pub fn point(x: f64, value: f64) -> Self {
        Self {
            start: x,
            start_value: value,
            segs: Vec::new(),
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.segs.iter().map(|s| s.len).sum::<f64>()
    }

    /// Value at `x`, clamped onto the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let mut pos = self.start;
        let mut val = self.start_value;
        if x <= pos {
            return val;
        }
        for s in &self.segs {
            if x <= pos + s.len {
                return val + s.slope * (x - pos);
            }
            pos += s.len;
            val += s.slope * s.len;
        }
        val
    }

    /// `(x, value)` at the domain start and after every segment.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.segs.len() + 1);
        let mut pos = self.start;
        let mut val = self.start_value;
        out.push((pos, val));
        for s in &self.segs {
            pos += s.len;
            val += s.slope * s.len;
            out.push((pos, val));
        }
        out
    }

    /// `(f □ g)(s) = min_{a+b=s} f(a) + g(b)`: segments merged by slope.
    pub fn inf_conv(&self, other: &ConvexPwl) -> ConvexPwl {
        let mut segs = Vec::with_capacity(self.segs.len() + other.segs.len());
        let (mut i, mut j) = (0, 0);
        while i < self.segs.len() || j < other.segs.len() {
            let take_self = j == other.segs.len()
                || (i < self.segs.len() && self.segs[i].slope <= other.segs[j].slope);
            if take_self {
                segs.push(self.segs[i]);
                i += 1;
            } else {
                segs.push(other.segs[j]);
                j += 1;
            }
        }
        ConvexPwl {
            start: self.start + other.start,
            start_value: self.start_value + other.start_value,
            segs,
        }
    }

    /// The function restricted to `[lo, hi]`; `None` when the domains are disjoint.
    pub fn restrict(&self, lo: f64, hi: f64) -> Option<ConvexPwl> {
        let end = self.end();
        if lo > end || hi < self.start {
            return None;
        }
        let new_start = lo.max(self.start);
        let new_end = hi.min(end);
        let start_value = self.eval(new_start);
        let mut segs = Vec::with_capacity(self.segs.len());
        let mut pos = self.start;
        for s in &self.segs {
            let a = pos.max(new_start);
            let b = (pos + s.len).min(new_end);
            if b > a {
                segs.push(Seg {
                    len: b - a,
                    slope: s.slope,
                });
            }
            pos += s.len;
            if pos >= new_end {
                break;
            }
        }
        Some(ConvexPwl {
            start: new_start,
            start_value,
            segs,
        })
    }

    /// `x ↦ f(−x)`.
    pub fn reflected(&self) -> ConvexPwl {
        let end = self.end();
        ConvexPwl {
            start: -end,
            start_value: self.eval(end),
            segs: self
                .segs
                .iter()
                .rev()
                .map(|s| Seg {
                    len: s.len,
                    slope: -s.slope,
                })
                .collect(),
        }
    }
}

/// Cheapest thermal + unserved-energy cost of covering a requirement `r`.
///
/// Flat at `fixed_cost` up to `min_output` (surplus is allowed), then follows
/// `increments` in slope order; the last increment is unbounded.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SupplyCurve {
    pub fixed_cost: f64,
    pub min_output: f64,
    /// Sorted by slope; the final entry has infinite length.
    pub increments: Vec<Seg>,
}

impl SupplyCurve {
    /// Build from capacity blocks `(len, slope)` plus the unbounded penalty block.
    pub fn new(fixed_cost: f64, min_output: f64, mut blocks: Vec<Seg>, penalty: f64) -> Self {
        blocks.retain(|b| b.len > 0.0);
        blocks.push(Seg {
            len: f64::INFINITY,
            slope: penalty,
        });
        // stable: equal slopes keep unit order, penalty last among equals
        blocks.sort_by(|a, b| a.slope.total_cmp(&b.slope));
        if let Some(k) = blocks.iter().position(|b| b.len.is_infinite()) {
            blocks.truncate(k + 1);
        }
        Self {
            fixed_cost,
            min_output,
            increments: blocks,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let mut val = self.fixed_cost;
        let mut pos = self.min_output;
        if r <= pos {
            return val;
        }
        for inc in &self.increments {
            if r <= pos + inc.len {
                return val + inc.slope * (r - pos);
            }
            pos += inc.len;
            val += inc.slope * inc.len;
        }
        val
    }

    /// Pieces of the curve over `[ra, rb]` as `(len, slope)`.
    fn pieces(&self, ra: f64, rb: f64) -> Vec<Seg> {
        let mut out = Vec::new();
        if rb <= ra {
            return out;
        }
        let mut push = |a: f64, b: f64, slope: f64| {
            let (a, b) = (a.max(ra), b.min(rb));
            if b > a {
                out.push(Seg { len: b - a, slope });
            }
        };
        push(f64::NEG_INFINITY, self.min_output, 0.0);
        let mut pos = self.min_output;
        for inc in &self.increments {
            let next = pos + inc.len;
            push(pos, next, inc.slope);
            if next >= rb {
                break;
            }
            pos = next;
        }
        out
    }
}

/// Hourly cost as a function of the net storage change `q`.
///
/// `q < 0` turbines `−q` (requirement `d + q`); `q > 0` pumps `q/η`
/// (requirement `d + q/η`). Simultaneous pumping and turbining never helps.
pub(crate) fn storage_cost_curve(
    supply: &SupplyCurve,
    demand: f64,
    storage: &Storage,
) -> ConvexPwl {
    let turb_part = supply.pieces(demand - storage.turb_max, demand);
    let mut segs = turb_part;
    if storage.eta > 0.0 && storage.pump_max > 0.0 {
        for p in supply.pieces(demand, demand + storage.pump_max) {
            segs.push(Seg {
                len: storage.eta * p.len,
                slope: p.slope / storage.eta,
            });
        }
    }
    ConvexPwl {
        start: -storage.turb_max,
        start_value: supply.eval(demand - storage.turb_max),
        segs,
    }
}

/// Split a net storage change into pumping and turbining.
pub(crate) fn split_storage_move(q: f64, storage: &Storage) -> (f64, f64) {
    if q > 0.0 && storage.eta > 0.0 {
        ((q / storage.eta).min(storage.pump_max), 0.0)
    } else if q < 0.0 {
        (0.0, (-q).min(storage.turb_max))
    } else {
        (0.0, 0.0)
    }
}

/// `min_s f(s) + g(s)` over `s ∈ dom f`, scanning the breakpoints of both.
/// Ties resolve to the `s` closest to `x`, then to the smaller one.
fn minimise_with_ctg(f: &ConvexPwl, ctg: &PiecewiseLinear, x: f64) -> (f64, f64) {
    let lo = f.start;
    let hi = f.end();
    let mut best_s = lo;
    let mut best = f64::INFINITY;
    let mut consider = |s: f64, v: f64| {
        let (d, bd) = ((s - x).abs(), (best_s - x).abs());
        if v < best || (v == best && (d < bd || (d == bd && s < best_s))) {
            best = v;
            best_s = s;
        }
    };
    if x > lo && x < hi {
        consider(x, f.eval(x) + ctg.eval_clamped(x));
    }
    for (s, v) in f.points() {
        consider(s, v + ctg.eval_clamped(s));
    }
    let xs = ctg.breakpoints();
    let first = xs.partition_point(|&b| b <= lo);
    for (&s, &g) in xs[first..].iter().zip(&ctg.values()[first..]) {
        if s >= hi {
            break;
        }
        consider(s, f.eval(s) + g);
    }
    (best, best_s)
}

/// Forward pass: reachable-stock cost after each hour.
fn reachable_costs(x: f64, hours: &[ConvexPwl], storage: &Storage) -> Option<Vec<ConvexPwl>> {
    let mut stages = Vec::with_capacity(hours.len() + 1);
    stages.push(ConvexPwl::point(x, 0.0));
    for phi in hours {
        let last = stages.last().expect("non-empty");
        let next = last.inf_conv(phi).restrict(storage.x_min, storage.x_max)?;
        stages.push(next);
    }
    Some(stages)
}

/// Optimal continuous cost: stage cost plus cost-to-go at the final stock.
pub(crate) fn continuous_value(
    x: f64,
    hours: &[ConvexPwl],
    ctg: &PiecewiseLinear,
    storage: &Storage,
) -> f64 {
    let mut acc = ConvexPwl::point(x, 0.0);
    for phi in hours {
        match acc.inf_conv(phi).restrict(storage.x_min, storage.x_max) {
            Some(next) => acc = next,
            None => return f64::INFINITY,
        }
    }
    minimise_with_ctg(&acc, ctg, x).0
}

/// Optimal value and one optimal sequence of hourly storage changes.
pub(crate) fn continuous_solve(
    x: f64,
    hours: &[ConvexPwl],
    ctg: &PiecewiseLinear,
    storage: &Storage,
) -> Option<(f64, Vec<f64>)> {
    let stages = reachable_costs(x, hours, storage)?;
    let (value, mut s) = minimise_with_ctg(stages.last().expect("non-empty"), ctg, x);
    let mut moves = vec![0.0; hours.len()];
    for h in (0..hours.len()).rev() {
        let prev = &stages[h];
        let phi = &hours[h];
        let q_lo = phi.start.max(s - prev.end());
        let q_hi = phi.end().min(s - prev.start);
        let mut candidates: Vec<f64> = vec![q_lo, q_hi, 0.0];
        candidates.extend(phi.points().into_iter().map(|p| p.0));
        candidates.extend(prev.points().into_iter().map(|p| s - p.0));
        candidates.retain(|&q| q >= q_lo && q <= q_hi);
        candidates.sort_by(f64::total_cmp);
        let mut best_q = q_lo;
        let mut best = f64::INFINITY;
        for q in candidates {
            let v = phi.eval(q) + prev.eval(s - q);
            // ties: smallest storage move
            if v < best || (v == best && q.abs() < best_q.abs()) {
                best = v;
                best_q = q;
            }
        }
        moves[h] = best_q;
        s -= best_q;
    }
    Some((value, moves))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(eta: f64, pump: f64, turb: f64) -> Storage {
        Storage {
            x_min: 0.0,
            x_max: 4.0,
            pump_max: pump,
            turb_max: turb,
            eta,
        }
    }

    #[test]
    fn inf_conv_merges_by_slope() {
        let f = ConvexPwl {
            start: 0.0,
            start_value: 1.0,
            segs: vec![
                Seg {
                    len: 1.0,
                    slope: -1.0,
                },
                Seg {
                    len: 1.0,
                    slope: 2.0,
                },
            ],
        };
        let g = ConvexPwl {
            start: -1.0,
            start_value: 0.0,
            segs: vec![Seg {
                len: 2.0,
                slope: 0.5,
            }],
        };
        let h = f.inf_conv(&g);
        // brute force on a fine grid
        for k in 0..=40 {
            let s = -1.0 + 4.0 * k as f64 / 40.0;
            let mut best = f64::INFINITY;
            for a in 0..=400 {
                let a = 2.0 * a as f64 / 400.0;
                let b = s - a;
                if (-1.0 - 1e-12..=1.0 + 1e-12).contains(&b) {
                    best = best.min(f.eval(a) + g.eval(b));
                }
            }
            assert!((h.eval(s) - best).abs() < 1e-9, "s={s}");
        }
    }

    #[test]
    fn restrict_and_reflect() {
        let f = ConvexPwl {
            start: -2.0,
            start_value: 3.0,
            segs: vec![
                Seg {
                    len: 2.0,
                    slope: -1.0,
                },
                Seg {
                    len: 3.0,
                    slope: 1.0,
                },
            ],
        };
        let r = f.restrict(-1.0, 2.0).unwrap();
        assert_eq!(r.start, -1.0);
        assert_eq!(r.end(), 2.0);
        for x in [-1.0, -0.5, 0.0, 1.0, 2.0] {
            assert!((r.eval(x) - f.eval(x)).abs() < 1e-12);
        }
        assert!(f.restrict(4.0, 5.0).is_none());
        let m = f.reflected();
        for x in [-3.0, -1.0, 0.0, 2.0] {
            assert!((m.eval(x) - f.eval(-x)).abs() < 1e-12);
        }
    }

    #[test]
    fn supply_curve_orders_blocks() {
        let c = SupplyCurve::new(
            10.0,
            1.0,
            vec![
                Seg {
                    len: 2.0,
                    slope: 30.0,
                },
                Seg {
                    len: 1.0,
                    slope: 10.0,
                },
            ],
            100.0,
        );
        assert_eq!(c.eval(-5.0), 10.0);
        assert_eq!(c.eval(1.0), 10.0);
        assert_eq!(c.eval(2.0), 20.0);
        assert_eq!(c.eval(4.0), 80.0);
        assert_eq!(c.eval(5.0), 180.0);
        // a block dearer than the penalty is never used
        let d = SupplyCurve::new(
            0.0,
            0.0,
            vec![Seg {
                len: 5.0,
                slope: 200.0,
            }],
            100.0,
        );
        assert_eq!(d.eval(2.0), 200.0);
    }

    #[test]
    fn storage_curve_matches_direct_enumeration() {
        let supply = SupplyCurve::new(
            5.0,
            1.0,
            vec![Seg {
                len: 1.0,
                slope: 10.0,
            }],
            1000.0,
        );
        let storage = st(0.5, 1.0, 2.0);
        let phi = storage_cost_curve(&supply, 1.5, &storage);
        assert_eq!(phi.start, -2.0);
        assert!((phi.end() - 0.5).abs() < 1e-12);
        for k in 0..=50 {
            let q = -2.0 + 2.5 * k as f64 / 50.0;
            // brute force over pump/turb pairs realising q
            let mut best = f64::INFINITY;
            for t in 0..=200 {
                let turb = 2.0 * t as f64 / 200.0;
                let pump = (q + turb) / 0.5;
                if (-1e-12..=1.0 + 1e-12).contains(&pump) {
                    best = best.min(supply.eval(1.5 + pump.max(0.0) - turb));
                }
            }
            assert!(
                (phi.eval(q) - best).abs() < 1e-9,
                "q={q}: {} vs {best}",
                phi.eval(q)
            );
        }
    }

    #[test]
    fn continuous_solve_recovers_consistent_moves() {
        let storage = st(1.0, 1.0, 1.0);
        let supply = SupplyCurve::new(
            0.0,
            0.0,
            vec![Seg {
                len: 2.0,
                slope: 10.0,
            }],
            100.0,
        );
        let hours: Vec<ConvexPwl> = [0.0, 3.0]
            .iter()
            .map(|&d| storage_cost_curve(&supply, d, &storage))
            .collect();
        let ctg = PiecewiseLinear::affine(0.0, 4.0, 0.0, -20.0).unwrap();
        let (value, moves) = continuous_solve(2.0, &hours, &ctg, &storage).unwrap();
        let mut s = 2.0;
        let mut cost = 0.0;
        for (h, &q) in moves.iter().enumerate() {
            cost += hours[h].eval(q);
            s += q;
            assert!((0.0..=4.0).contains(&s));
        }
        cost += ctg.eval(s).unwrap();
        assert!((cost - value).abs() < 1e-9);
        assert_eq!(value, continuous_value(2.0, &hours, &ctg, &storage));
    }

    #[test]
    fn split_respects_direction() {
        let storage = st(0.5, 2.0, 3.0);
        assert_eq!(split_storage_move(0.5, &storage), (1.0, 0.0));
        assert_eq!(split_storage_move(-2.0, &storage), (0.0, 2.0));
        assert_eq!(split_storage_move(0.0, &storage), (0.0, 0.0));
    }
}
