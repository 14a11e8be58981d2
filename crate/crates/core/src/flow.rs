//! Spectral flow by adaptive partition.
//!
//! On each segment of a partition of the parameter interval we pick a level
//! `mu` such that no eigenvalue crosses `+mu` or `-mu` anywhere on the
//! segment, and add
//!
//! ```text
//! dim Ran 1_[0, mu](D_end) - dim Ran 1_[0, mu](D_start)
//! ```
//!
//! Segments for which no level clears the guard band are bisected. Kernel
//! vectors at the path ends are counted (the window is closed at zero).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::operator::{
    eigh, ensure_same_dim, spectral_projection, window_indices, EigenDecomposition, GuardedEnds, HermitianOperator,
    Interval,
};
use crate::paths::{linear_segment, OperatorPath, OperatorRectangle, SmoothnessHint};
use crate::projection::{projection_index, Projection};

/// Bump scale the engine works at; every chosen level lies in `(0, 1/n)`.
pub const N_USED: u32 = 1;

/// Relative guard applied when [`FlowOptions::guard`] is unset.
pub const DEFAULT_RELATIVE_GUARD: f64 = 1e-6;

/// Parameters probed when checking invertibility preconditions.
const PRECONDITION_PROBES: usize = 129;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Parameters probed per segment, endpoints included. At least 3.
    pub probe_points: usize,
    /// Minimal distance between a level `+-mu` and the probed spectrum.
    /// `None` means `1e-6` times the spectral radius at the path ends.
    pub guard: Option<f64>,
    pub max_depth: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            probe_points: 9,
            guard: None,
            max_depth: 40,
        }
    }
}

impl FlowOptions {
    fn validate(&self) -> Result<()> {
        if self.probe_points < 3 {
            return Err(Error::Validation(format!(
                "probe_points must be at least 3, got {}",
                self.probe_points
            )));
        }
        if let Some(g) = self.guard {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::Validation(format!("guard must be non-negative, got {g}")));
            }
        }
        Ok(())
    }
}

/// One accepted segment of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub mu: f64,
    /// `dim Ran 1_[0, mu]` at the start and at the end of the segment.
    pub counts: (usize, usize),
    /// Distance from `+-mu` to everything the probed eigenvalues swept over.
    pub margin: f64,
    pub depth: usize,
}

impl Segment {
    pub fn contribution(&self) -> i64 {
        self.counts.1 as i64 - self.counts.0 as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFlowResult {
    pub value: i64,
    pub segments: Vec<Segment>,
    pub min_gap_seen: f64,
    pub subdivision_depth: usize,
    pub guard: f64,
}

impl SpectralFlowResult {
    /// `t_0 < t_1 < ... < t_k`.
    pub fn partition(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.segments.iter().map(|s| s.start).collect();
        if let Some(last) = self.segments.last() {
            p.push(last.end);
        }
        p
    }

    pub fn mu_per_segment(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.mu).collect()
    }

    pub fn counts(&self) -> Vec<(usize, usize)> {
        self.segments.iter().map(|s| s.counts).collect()
    }
}

/// Closed intervals of `|lambda|` values swept by eigenvalues between
/// consecutive probes, merged and sorted.
fn swept_set(probes: &[&EigenDecomposition], widen: f64) -> Vec<(f64, f64)> {
    let mut spans = Vec::new();
    for pair in probes.windows(2) {
        for (&a, &b) in pair[0].eigenvalues.iter().zip(&pair[1].eigenvalues) {
            let (lo, hi) = if (a < 0.0) == (b < 0.0) {
                (a.abs().min(b.abs()), a.abs().max(b.abs()))
            } else {
                (0.0, a.abs().max(b.abs()))
            };
            spans.push(((lo - widen).max(0.0), hi + widen));
        }
    }
    spans.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in spans {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

fn distance_to_set(mu: f64, set: &[(f64, f64)]) -> f64 {
    set.iter()
        .map(|&(lo, hi)| {
            if mu < lo {
                lo - mu
            } else if mu > hi {
                mu - hi
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Level in `(0, ceiling)` farthest from the swept set, with its margin.
/// Candidates are the midpoints of the free gaps; ties go to the smaller
/// level.
fn choose_level(swept: &[(f64, f64)], ceiling: f64) -> Option<(f64, f64)> {
    let mut walls = vec![0.0];
    for &(lo, hi) in swept {
        if lo >= ceiling {
            break;
        }
        walls.push(lo);
        walls.push(hi);
    }
    walls.push(ceiling);
    let mut best: Option<(f64, f64)> = None;
    for gap in walls.chunks(2) {
        let (lo, hi) = (gap[0], gap[1].min(ceiling));
        if hi <= lo {
            continue;
        }
        let mu = 0.5 * (lo + hi);
        if mu <= 0.0 || mu >= ceiling {
            continue;
        }
        let margin = distance_to_set(mu, swept).min(mu);
        if best.is_none_or(|(_, m)| margin > m) {
            best = Some((mu, margin));
        }
    }
    best
}

struct Engine<'a> {
    path: &'a OperatorPath,
    opts: FlowOptions,
    guard: f64,
    cache: HashMap<u64, EigenDecomposition>,
}

impl<'a> Engine<'a> {
    fn eig_at(&mut self, t: f64) -> Result<EigenDecomposition> {
        if let Some(e) = self.cache.get(&t.to_bits()) {
            return Ok(e.clone());
        }
        let e = eigh(&self.path.sample(t)?)?;
        self.cache.insert(t.to_bits(), e.clone());
        Ok(e)
    }

    fn run(&mut self, start: f64, end: f64, depth: usize, out: &mut Vec<Segment>) -> Result<()> {
        let n = self.opts.probe_points;
        let params: Vec<f64> = (0..n)
            .map(|j| {
                if j == n - 1 {
                    end
                } else {
                    start + (end - start) * j as f64 / (n - 1) as f64
                }
            })
            .collect();
        let eigs = params.iter().map(|&t| self.eig_at(t)).collect::<Result<Vec<_>>>()?;
        let widen = match self.path.hint() {
            SmoothnessHint::Lipschitz(l) => 0.5 * l * (end - start) / (n - 1) as f64,
            _ => 0.0,
        };
        let refs: Vec<&EigenDecomposition> = eigs.iter().collect();
        let swept = swept_set(&refs, widen);
        let ceiling = 1.0 / f64::from(N_USED);
        let level = choose_level(&swept, ceiling);

        match level {
            Some((mu, margin)) if margin >= self.guard && margin > 0.0 => {
                let window = Interval { lo: 0.0, hi: mu };
                let first = &eigs[0].eigenvalues;
                let last = &eigs[n - 1].eigenvalues;
                let c0 = window_indices(first, window, self.guard, GuardedEnds::UpperOnly)?.len();
                let c1 = window_indices(last, window, self.guard, GuardedEnds::UpperOnly)?.len();
                out.push(Segment {
                    start,
                    end,
                    mu,
                    counts: (c0, c1),
                    margin,
                    depth,
                });
                Ok(())
            }
            _ => {
                let margin = level.map_or(0.0, |(_, m)| m);
                let mid = 0.5 * (start + end);
                if depth >= self.opts.max_depth || mid <= start || mid >= end {
                    return Err(Error::SubdivisionFailure {
                        start,
                        end,
                        depth,
                        margin,
                        guard: self.guard,
                    });
                }
                self.run(start, mid, depth + 1, out)?;
                self.run(mid, end, depth + 1, out)
            }
        }
    }
}

/// Spectral flow of `path` by adaptive partition.
pub fn spectral_flow(path: &OperatorPath, opts: &FlowOptions) -> Result<SpectralFlowResult> {
    opts.validate()?;
    let (a, b) = path.interval();
    let mut engine = Engine {
        path,
        opts: *opts,
        guard: 0.0,
        cache: HashMap::new(),
    };
    let scale = engine
        .eig_at(a)?
        .spectral_radius()
        .max(engine.eig_at(b)?.spectral_radius());
    engine.guard = opts
        .guard
        .unwrap_or(DEFAULT_RELATIVE_GUARD * if scale > 0.0 { scale } else { 1.0 });

    let mut segments = Vec::new();
    engine.run(a, b, 0, &mut segments)?;
    let value = segments.iter().map(Segment::contribution).sum();
    let min_gap_seen = segments.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min);
    let subdivision_depth = segments.iter().map(|s| s.depth).max().unwrap_or(0);
    Ok(SpectralFlowResult {
        value,
        segments,
        min_gap_seen,
        subdivision_depth,
        guard: engine.guard,
    })
}

/// Eigenvalues closer than this (relative to the spectral scale) are treated
/// as one cluster by the oracle's resolution check.
const CLUSTER_TOL: f64 = 1e-12;

/// Independent crossing count: eigenvalues are paired in ascending order
/// across `samples` uniform parameters and every sign change of a tracked
/// eigenvalue is counted, upward `+1`, downward `-1`.
///
/// A step is accepted only if each eigenvalue changing sign moves by at most
/// half its distance to the nearest eigenvalue outside its cluster.
pub fn spectral_flow_oracle(path: &OperatorPath, samples: usize) -> Result<i64> {
    if samples < 2 {
        return Err(Error::Validation("oracle needs at least two samples".into()));
    }
    let (a, b) = path.interval();
    let param = |j: usize| {
        if j == samples - 1 {
            b
        } else {
            a + (b - a) * j as f64 / (samples - 1) as f64
        }
    };
    let mut prev = eigh(&path.sample(a)?)?.eigenvalues;
    let mut flow = 0_i64;
    for j in 1..samples {
        let next = eigh(&path.sample(param(j))?)?.eigenvalues;
        let scale = prev
            .iter()
            .chain(&next)
            .fold(0.0_f64, |m, l| m.max(l.abs()))
            .max(f64::MIN_POSITIVE);
        for k in 0..prev.len() {
            let (x, y) = (prev[k], next[k]);
            let up = x < 0.0 && y >= 0.0;
            let down = x >= 0.0 && y < 0.0;
            if !(up || down) {
                continue;
            }
            let half_gap = 0.5
                * prev
                    .iter()
                    .filter(|&&l| (l - x).abs() > CLUSTER_TOL * scale)
                    .map(|&l| (l - x).abs())
                    .fold(f64::INFINITY, f64::min);
            let step = (y - x).abs();
            if step > half_gap {
                return Err(Error::OracleResolution {
                    t0: param(j - 1),
                    t1: param(j),
                    samples,
                    step,
                    half_gap,
                });
            }
            flow += if up { 1 } else { -1 };
        }
        prev = next;
    }
    Ok(flow)
}

/// Spectral flow of `t -> t(2P - 1) + (1 - t)(2Q - 1)`; equals `ind(P, Q)`.
pub fn projection_pair_flow(p: &Projection, q: &Projection, opts: &FlowOptions) -> Result<i64> {
    ensure_same_dim(p.dim(), q.dim())?;
    let path = linear_segment(&q.involution(), &p.involution())?;
    Ok(spectral_flow(&path, opts)?.value)
}

/// Both sides of the relative-index identity for a path `D_t` and a
/// perturbation `K_t` making `D_t + K_t` invertible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelativeIndex {
    /// `spfl(D_t)`.
    pub lhs: i64,
    /// `ind(1_{>=0}(D_b), 1_{>=0}(D_b + K_b)) - ind(1_{>=0}(D_a), 1_{>=0}(D_a + K_a))`.
    pub rhs: i64,
}

fn nonnegative_projection(op: &HermitianOperator, guard: f64) -> Result<Projection> {
    let top = eigh(op)?.eigenvalues.last().copied().unwrap_or(0.0).max(0.0) + 1.0;
    spectral_projection(op, Interval { lo: 0.0, hi: top }, guard)
}

pub fn relative_index_check(
    path: &OperatorPath,
    perturbation: &OperatorPath,
    opts: &FlowOptions,
) -> Result<RelativeIndex> {
    ensure_same_dim(path.dim(), perturbation.dim())?;
    if path.interval() != perturbation.interval() {
        return Err(Error::Validation(format!(
            "interval mismatch: path {:?}, perturbation {:?}",
            path.interval(),
            perturbation.interval()
        )));
    }
    let (a, b) = path.interval();
    let (da, db) = (path.at_start()?, path.at_end()?);
    let scale = da.norm().max(db.norm());
    let guard = opts
        .guard
        .unwrap_or(DEFAULT_RELATIVE_GUARD * if scale > 0.0 { scale } else { 1.0 });

    for (t, d) in [(a, &da), (b, &db)] {
        let gap = eigh(d)?.min_abs_eigenvalue();
        if gap < guard {
            return Err(Error::Precondition {
                parameter: t,
                reason: format!("D is not invertible (smallest |eigenvalue| {gap:e} < guard {guard:e})"),
            });
        }
    }
    let mut perturbed_ends = Vec::with_capacity(2);
    for j in 0..PRECONDITION_PROBES {
        let t = if j == PRECONDITION_PROBES - 1 {
            b
        } else {
            a + (b - a) * j as f64 / (PRECONDITION_PROBES - 1) as f64
        };
        let sum = path.sample(t)?.combine(1.0, &perturbation.sample(t)?, 1.0)?;
        let gap = eigh(&sum)?.min_abs_eigenvalue();
        if gap < guard {
            return Err(Error::Precondition {
                parameter: t,
                reason: format!("D + K is not invertible (smallest |eigenvalue| {gap:e} < guard {guard:e})"),
            });
        }
        if j == 0 || j == PRECONDITION_PROBES - 1 {
            perturbed_ends.push(sum);
        }
    }

    let lhs = spectral_flow(path, opts)?.value;
    let ind_b = projection_index(
        &nonnegative_projection(&db, guard)?,
        &nonnegative_projection(&perturbed_ends[1], guard)?,
    )?;
    let ind_a = projection_index(
        &nonnegative_projection(&da, guard)?,
        &nonnegative_projection(&perturbed_ends[0], guard)?,
    )?;
    Ok(RelativeIndex {
        lhs,
        rhs: ind_b - ind_a,
    })
}

/// Alternating sum of the flows along the four edges of a rectangle:
/// `flow(s=0) + flow(t=b) - flow(s=1) - flow(t=a)`.
pub fn rectangle_defect(rect: &OperatorRectangle, opts: &FlowOptions) -> Result<i64> {
    let e = rect.boundary_edges()?;
    let f = |p: &OperatorPath| spectral_flow(p, opts).map(|r| r.value);
    Ok(f(&e.left)? + f(&e.top)? - f(&e.right)? - f(&e.bottom)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::paths::concatenate;

    fn diag(d: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(d).unwrap()
    }

    fn scalar_path(start: f64, end: f64) -> OperatorPath {
        OperatorPath::new(start, end, 1, SmoothnessHint::Lipschitz(2.0), |t| {
            crate::linalg::diagonal(&[c(2.0 * t - 1.0)])
        })
        .unwrap()
    }

    #[test]
    fn constant_path_has_zero_flow() {
        let p = OperatorPath::constant(diag(&[-1.0, 0.5, 3.0]));
        assert_eq!(spectral_flow(&p, &FlowOptions::default()).unwrap().value, 0);
        let z = OperatorPath::constant(HermitianOperator::zeros(2));
        assert_eq!(spectral_flow(&z, &FlowOptions::default()).unwrap().value, 0);
        assert_eq!(spectral_flow_oracle(&p, 10).unwrap(), 0);
    }

    #[test]
    fn scalar_crossing_counts_one() {
        let p = scalar_path(0.0, 1.0);
        let r = spectral_flow(&p, &FlowOptions::default()).unwrap();
        assert_eq!(r.value, 1);
        assert_eq!(spectral_flow_oracle(&p, 16).unwrap(), 1);
        assert_eq!(spectral_flow_oracle(&p.reversed(), 16).unwrap(), -1);
        for s in &r.segments {
            assert!(s.mu > 0.0 && s.mu < 1.0);
        }
        let partition = r.partition();
        assert_eq!(partition.first(), Some(&0.0));
        assert_eq!(partition.last(), Some(&1.0));
        assert!(partition.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn opposite_crossings_cancel() {
        let p = OperatorPath::new(0.0, 1.0, 2, SmoothnessHint::Analytic, |t| {
            crate::linalg::diagonal(&[c(2.0 * t - 1.0), c(1.0 - 2.0 * t)])
        })
        .unwrap();
        assert_eq!(spectral_flow(&p, &FlowOptions::default()).unwrap().value, 0);
        assert_eq!(spectral_flow_oracle(&p, 11).unwrap(), 0);
        assert_eq!(spectral_flow_oracle(&p, 10).unwrap(), 0);
    }

    #[test]
    fn kernel_at_right_endpoint_is_counted() {
        let left = scalar_path(0.0, 0.5);
        let right = scalar_path(0.5, 1.0);
        let opts = FlowOptions::default();
        // -1 is outside [0, mu] at t=0, 0 is inside at t=1/2
        assert_eq!(spectral_flow(&left, &opts).unwrap().value, 1);
        assert_eq!(spectral_flow(&right, &opts).unwrap().value, 0);
        let whole = concatenate(&left, &right).unwrap();
        assert_eq!(spectral_flow(&whole, &opts).unwrap().value, 1);
    }

    #[test]
    fn segment_contributions_sum_to_value() {
        let mut rng = crate::random::seeded(31);
        let p = crate::random::random_piecewise_linear(&mut rng, 6, 4, 2.0, 0.2);
        let r = spectral_flow(&p, &FlowOptions::default()).unwrap();
        assert_eq!(r.value, r.segments.iter().map(Segment::contribution).sum::<i64>());
        assert!(r.min_gap_seen >= r.guard);
        for w in r.segments.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn discontinuous_family_fails_subdivision() {
        let p = OperatorPath::new(0.0, 1.0, 1, SmoothnessHint::Unknown, |t| {
            crate::linalg::diagonal(&[c(if t < 0.3 { -0.5 } else { 2.0 })])
        })
        .unwrap();
        let opts = FlowOptions {
            max_depth: 12,
            ..Default::default()
        };
        match spectral_flow(&p, &opts) {
            Err(Error::SubdivisionFailure { start, end, depth, .. }) => {
                assert_eq!(depth, 12);
                assert!(start <= 0.3 && 0.3 <= end);
            }
            other => panic!("expected subdivision failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_options() {
        let p = scalar_path(0.0, 1.0);
        let opts = FlowOptions {
            probe_points: 2,
            ..Default::default()
        };
        assert!(spectral_flow(&p, &opts).is_err());
        assert!(spectral_flow_oracle(&p, 1).is_err());
    }

    #[test]
    fn oracle_flags_coarse_sampling() {
        // two eigenvalues swapping order near zero at high speed
        let p = OperatorPath::new(0.0, 1.0, 2, SmoothnessHint::Analytic, |t| {
            crate::linalg::diagonal(&[c(40.0 * t - 20.5), c(0.05)])
        })
        .unwrap();
        assert!(matches!(
            spectral_flow_oracle(&p, 3),
            Err(Error::OracleResolution { .. })
        ));
        assert_eq!(spectral_flow_oracle(&p, 4001).unwrap(), 1);
    }

    #[test]
    fn level_choice_prefers_widest_gap() {
        let swept = vec![(0.0, 0.1), (0.3, 0.35), (0.9, 2.0)];
        let (mu, margin) = choose_level(&swept, 1.0).unwrap();
        assert!((mu - 0.625).abs() < 1e-15);
        assert!((margin - 0.275).abs() < 1e-15);
        assert!(choose_level(&[(0.0, 5.0)], 1.0).is_none());
        let (mu, _) = choose_level(&[], 1.0).unwrap();
        assert_eq!(mu, 0.5);
    }

    #[test]
    fn swept_set_covers_zero_on_sign_change() {
        let e0 = EigenDecomposition {
            eigenvalues: vec![-0.2, 0.6],
            vectors: crate::linalg::identity(2),
        };
        let e1 = EigenDecomposition {
            eigenvalues: vec![0.1, 0.7],
            vectors: crate::linalg::identity(2),
        };
        let s = swept_set(&[&e0, &e1], 0.0);
        assert_eq!(s, vec![(0.0, 0.2), (0.6, 0.7)]);
    }

    #[test]
    fn projection_pair_examples() {
        let opts = FlowOptions::default();
        let p = Projection::coordinate(2, &[0]).unwrap();
        assert_eq!(projection_pair_flow(&p, &p, &opts).unwrap(), 0);
        assert_eq!(projection_pair_flow(&p, &Projection::zero(2), &opts).unwrap(), 1);
        assert_eq!(projection_pair_flow(&Projection::zero(2), &p, &opts).unwrap(), -1);
    }

    #[test]
    fn relative_index_scalar_example() {
        let d = scalar_path(0.0, 1.0);
        let k = OperatorPath::constant(diag(&[2.0]));
        let r = relative_index_check(&d, &k, &FlowOptions::default()).unwrap();
        assert_eq!(r, RelativeIndex { lhs: 1, rhs: 1 });
    }

    #[test]
    fn relative_index_with_zero_perturbation_on_invertible_path() {
        let d = OperatorPath::new(0.0, 1.0, 2, SmoothnessHint::Analytic, |t| {
            crate::linalg::diagonal(&[c(1.0 + t), c(-2.0 + t)])
        })
        .unwrap();
        let k = OperatorPath::constant(HermitianOperator::zeros(2));
        let r = relative_index_check(&d, &k, &FlowOptions::default()).unwrap();
        assert_eq!(r, RelativeIndex { lhs: 0, rhs: 0 });
    }

    #[test]
    fn relative_index_preconditions() {
        let d = scalar_path(0.0, 1.0);
        let small = OperatorPath::constant(diag(&[0.5]));
        match relative_index_check(&d, &small, &FlowOptions::default()) {
            Err(Error::Precondition { parameter, .. }) => assert!(parameter <= 0.25 + 1e-12),
            other => panic!("expected precondition error, got {other:?}"),
        }
        let degenerate = scalar_path(0.0, 0.5);
        let k = OperatorPath::constant(diag(&[2.0])).reparametrized(0.0, 0.5).unwrap();
        assert!(matches!(
            relative_index_check(&degenerate, &k, &FlowOptions::default()),
            Err(Error::Precondition { parameter, .. }) if parameter == 0.5
        ));
    }

    #[test]
    fn rectangle_examples() {
        let opts = FlowOptions::default();
        let m = diag(&[1.0, -1.0]).into_entries();
        let constant = OperatorRectangle::new(0.0, 1.0, 2, move |_, _| m.clone()).unwrap();
        assert_eq!(rectangle_defect(&constant, &opts).unwrap(), 0);

        let s_free = OperatorRectangle::new(0.0, 1.0, 1, |_, t| crate::linalg::diagonal(&[c(2.0 * t - 1.0)])).unwrap();
        assert_eq!(rectangle_defect(&s_free, &opts).unwrap(), 0);
    }
}
