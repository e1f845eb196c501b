//! Ideals of `C(X)` for a finite metric space `X`.
//!
//! Compact metric spaces are represented at desk scale by finite ones. The
//! ideal `I_F` consists of the functions vanishing on `F ⊆ X`, with D-norm
//! `D(f) = max{‖f‖_∞, L(ℜf), L(ℑf)}`. This module provides the Lipschitz
//! seminorm, the clamped McShane extension, the ε-repair that moves a
//! function vanishing on `F_n` into the unit ball of `I_F`, and distances
//! between the unit balls of two such ideals.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Tolerance on the triangle inequality and symmetry of a distance matrix.
pub const METRIC_TOL: f64 = 1e-12;
/// Values at most this in modulus count as zero for ideal membership.
pub const VANISH_TOL: f64 = 1e-12;
/// Slack on Lipschitz and sup-norm certificate checks.
pub const LIP_TOL: f64 = 1e-9;
/// Multiplicative guard turning a measured `H` into a strict `H < ε²`.
pub const STRICT_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceConfig", into = "SpaceConfig")]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
}

/// Space config as read from JSON: `{"labels": [...], "dist": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub labels: Vec<String>,
    pub dist: Vec<Vec<f64>>,
}

impl TryFrom<SpaceConfig> for FiniteMetricSpace {
    type Error = Error;
    fn try_from(c: SpaceConfig) -> Result<Self> {
        FiniteMetricSpace::new(c.labels, c.dist)
    }
}

impl From<FiniteMetricSpace> for SpaceConfig {
    fn from(s: FiniteMetricSpace) -> Self {
        SpaceConfig {
            labels: s.labels,
            dist: s.dist,
        }
    }
}

impl FiniteMetricSpace {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Empty("metric space"));
        }
        let bad = |m: String| Err(Error::Precondition(m));
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return bad(format!("distance matrix must be {n}x{n}"));
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return bad(format!("d({0},{0}) = {1} != 0", labels[i], dist[i][i]));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !d.is_finite() || d < 0.0 {
                    return bad(format!("d({},{}) = {d} is not a finite nonnegative number", labels[i], labels[j]));
                }
                if i != j && d <= 0.0 {
                    return bad(format!("distinct points {} and {} at distance 0", labels[i], labels[j]));
                }
                if (d - dist[j][i]).abs() > METRIC_TOL {
                    return bad(format!("d({},{}) != d({},{})", labels[i], labels[j], labels[j], labels[i]));
                }
                for k in 0..n {
                    if d > dist[i][k] + dist[k][j] + METRIC_TOL {
                        return bad(format!(
                            "triangle inequality fails for ({}, {}, {})",
                            labels[i], labels[k], labels[j]
                        ));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { labels, dist })
    }

    /// Points on the real line with `d(x, y) = |x − y|`.
    pub fn from_line(points: &[f64]) -> Result<Self> {
        let labels = points.iter().map(|p| format!("{p}")).collect();
        let dist = points
            .iter()
            .map(|a| points.iter().map(|b| (a - b).abs()).collect())
            .collect();
        Self::new(labels, dist)
    }

    /// Points in the plane with the Euclidean distance.
    pub fn from_planar(points: &[[f64; 2]]) -> Result<Self> {
        let labels = (0..points.len()).map(|i| format!("p{i}")).collect();
        let dist = points
            .iter()
            .map(|a| points.iter().map(|b| (a[0] - b[0]).hypot(a[1] - b[1])).collect())
            .collect();
        Self::new(labels, dist)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Resolves a list of labels to point indices.
    pub fn subset(&self, labels: &[String]) -> Result<BTreeSet<usize>> {
        labels
            .iter()
            .map(|l| {
                self.index_of(l)
                    .ok_or_else(|| Error::Precondition(format!("unknown point label {l:?}")))
            })
            .collect()
    }

    /// `d(x, S)`; infinite for empty `S`.
    pub fn dist_to_set(&self, x: usize, s: &BTreeSet<usize>) -> f64 {
        s.iter().map(|&y| self.dist[x][y]).fold(f64::INFINITY, f64::min)
    }

    fn check_subset(&self, s: &BTreeSet<usize>) -> Result<()> {
        match s.iter().find(|&&i| i >= self.len()) {
            Some(i) => Err(Error::Precondition(format!("point index {i} out of range"))),
            None => Ok(()),
        }
    }
}

/// A complex function on the points of a finite metric space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipFunction(pub Vec<Complex64>);

impl LipFunction {
    pub fn from_real(v: &[f64]) -> Self {
        LipFunction(v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_parts(re: &[f64], im: &[f64]) -> Self {
        LipFunction(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        LipFunction(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn re(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.im).collect()
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        LipFunction(self.0.iter().map(|z| z * c).collect())
    }

    pub fn sup_distance(&self, other: &LipFunction) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `I_F`, the functions vanishing on `F`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingIdeal {
    pub zero_set: BTreeSet<usize>,
}

impl VanishingIdeal {
    pub fn new(zero_set: BTreeSet<usize>) -> Self {
        VanishingIdeal { zero_set }
    }

    pub fn contains(&self, f: &LipFunction) -> bool {
        self.zero_set.iter().all(|&x| f.0[x].norm() <= VANISH_TOL)
    }
}

fn check_len(x: &FiniteMetricSpace, n: usize) -> Result<()> {
    if n != x.len() {
        return Err(Error::Precondition(format!(
            "function has {n} values on a space of {} points",
            x.len()
        )));
    }
    Ok(())
}

/// `max_{x≠y} |f(x) − f(y)| / d(x, y)`.
pub fn lipschitz_seminorm(x: &FiniteMetricSpace, f: &LipFunction) -> f64 {
    let v = &f.0;
    let mut best: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            best = best.max((v[i] - v[j]).norm() / x.d(i, j));
        }
    }
    best
}

pub fn lipschitz_seminorm_real(x: &FiniteMetricSpace, f: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            best = best.max((f[i] - f[j]).abs() / x.d(i, j));
        }
    }
    best
}

/// Lipschitz constant of `values` restricted to the points `domain`.
fn lipschitz_on(x: &FiniteMetricSpace, domain: &[usize], values: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for a in 0..domain.len() {
        for b in a + 1..domain.len() {
            best = best.max((values[a] - values[b]).abs() / x.d(domain[a], domain[b]));
        }
    }
    best
}

/// `D(f) = max{‖f‖_∞, L(ℜf), L(ℑf)}` for `f ∈ I_F`.
pub fn d_norm_comm(x: &FiniteMetricSpace, zero_set: &BTreeSet<usize>, f: &LipFunction) -> Result<f64> {
    check_len(x, f.0.len())?;
    x.check_subset(zero_set)?;
    if let Some(&p) = zero_set.iter().find(|&&p| f.0[p].norm() > VANISH_TOL) {
        return Err(Error::Precondition(format!(
            "function does not vanish at {} (|f| = {:e})",
            x.labels[p],
            f.0[p].norm()
        )));
    }
    Ok(f.sup_norm()
        .max(lipschitz_seminorm_real(x, &f.re()))
        .max(lipschitz_seminorm_real(x, &f.im())))
}

/// Hausdorff distance between two nonempty subsets.
pub fn hausdorff_sets(x: &FiniteMetricSpace, a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("hausdorff_sets needs nonempty subsets"));
    }
    x.check_subset(a)?;
    x.check_subset(b)?;
    let directed = |p: &BTreeSet<usize>, q: &BTreeSet<usize>| {
        p.iter().map(|&i| x.dist_to_set(i, q)).fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// Extends `values` (given on `domain`, in order) to all of `X` by
/// `g(x) = clamp(min_{y ∈ domain} (f(y) + L·d(x, y)), lo, hi)`.
///
/// The restriction to `domain` is exactly `values`; the Lipschitz constant
/// stays at most `lip`, and every value lies in `[lo, hi]`.
pub fn mcshane_extend(
    x: &FiniteMetricSpace,
    domain: &[usize],
    values: &[f64],
    lip: f64,
    clamp: (f64, f64),
) -> Result<Vec<f64>> {
    if domain.len() != values.len() {
        return Err(Error::Precondition("domain and values differ in length".into()));
    }
    if domain.is_empty() {
        return Err(Error::Empty("McShane extension needs a nonempty domain"));
    }
    let (lo, hi) = clamp;
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > vmin || hi < vmax {
        return Err(Error::Precondition(format!(
            "clamp [{lo}, {hi}] does not contain the data range [{vmin}, {vmax}]"
        )));
    }
    let measured = lipschitz_on(x, domain, values);
    if measured > lip * (1.0 + LIP_TOL) + LIP_TOL {
        return Err(Error::Precondition(format!(
            "data has Lipschitz constant {measured} > {lip} on the domain"
        )));
    }
    let mut g: Vec<f64> = (0..x.len())
        .map(|p| {
            domain
                .iter()
                .zip(values)
                .map(|(&y, &v)| v + lip * x.d(p, y))
                .fold(f64::INFINITY, f64::min)
                .clamp(lo, hi)
        })
        .collect();
    for (&y, &v) in domain.iter().zip(values) {
        g[y] = v;
    }
    Ok(g)
}

/// Checks of the repaired function `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairCertificate {
    /// `max_{x ∈ F ∪ F_n} |h(x)|`.
    pub vanishing: f64,
    pub lip_re: f64,
    pub lip_im: f64,
    pub sup_norm: f64,
    /// `‖f − h‖_∞`.
    pub sup_error: f64,
    /// `8ε`.
    pub error_bound: f64,
    pub failures: Vec<String>,
}

impl RepairCertificate {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairOutcome {
    pub h: LipFunction,
    pub certificate: RepairCertificate,
    /// ε actually used (after clamping below 1).
    pub epsilon: f64,
    pub hausdorff: f64,
    /// Points of `G_n = {x : d(x, F ∪ F_n) < ε}`.
    pub neighbourhood: BTreeSet<usize>,
    pub note: Option<String>,
}

/// Largest ε accepted; larger requests are clamped here.
pub const EPS_MAX: f64 = 1.0 - 1e-9;

/// Hausdorff distance with the conventions used by the repair: two empty
/// sets are at distance 0, an empty and a nonempty set at infinity.
fn zero_set_distance(x: &FiniteMetricSpace, a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> Result<f64> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Ok(0.0),
        (false, false) => hausdorff_sets(x, a, b),
        _ => Ok(f64::INFINITY),
    }
}

/// Moves `f` from the unit ball of `I_{F_n}` into the unit ball of `I_F`
/// with `‖f − h‖_∞ ≤ 8ε`, given `Haus(F_n, F) < ε²`.
///
/// With `G_n = {x : d(x, F ∪ F_n) < ε}`, the real part is set to 0 on
/// `F ∪ F_n` and to `ℜf/(1+ε)` off `G_n`, then extended by McShane with
/// constant 1 and clamped to `±‖f_1‖_∞`; likewise the imaginary part.
pub fn repair(
    x: &FiniteMetricSpace,
    f_n: &BTreeSet<usize>,
    f_lim: &BTreeSet<usize>,
    f: &LipFunction,
    epsilon: f64,
) -> Result<RepairOutcome> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon = {epsilon} must be positive")));
    }
    let (eps, note) = if epsilon > EPS_MAX {
        (EPS_MAX, Some(format!("epsilon {epsilon} clamped to {EPS_MAX}")))
    } else {
        (epsilon, None)
    };
    x.check_subset(f_n)?;
    x.check_subset(f_lim)?;
    let d = d_norm_comm(x, f_n, f)?;
    if d > 1.0 + LIP_TOL {
        return Err(Error::Precondition(format!("D(f) = {d} exceeds 1")));
    }
    let haus = zero_set_distance(x, f_n, f_lim)?;
    if !(haus < eps * eps) {
        return Err(Error::HausdorffPrecondition {
            measured: haus,
            required: eps * eps,
        });
    }

    let zeros: BTreeSet<usize> = f_n.union(f_lim).copied().collect();
    let neighbourhood: BTreeSet<usize> = (0..x.len())
        .filter(|&p| x.dist_to_set(p, &zeros) < eps)
        .collect();
    // F ∪ F_n ⊆ G_n, so the domain is F ∪ F_n ∪ G_n^c with the two parts disjoint
    let domain: Vec<usize> = (0..x.len())
        .filter(|p| zeros.contains(p) || !neighbourhood.contains(p))
        .collect();
    let shrink = 1.0 / (1.0 + eps);
    let part = |vals: &[f64]| -> Result<Vec<f64>> {
        let data: Vec<f64> = domain
            .iter()
            .map(|&p| if zeros.contains(&p) { 0.0 } else { vals[p] * shrink })
            .collect();
        let bound = data.iter().map(|v| v.abs()).fold(0.0, f64::max);
        mcshane_extend(x, &domain, &data, 1.0, (-bound, bound))
    };
    let g1 = part(&f.re())?;
    let g2 = part(&f.im())?;
    let h = LipFunction::from_parts(&g1, &g2);

    let vanishing = zeros.iter().map(|&p| h.0[p].norm()).fold(0.0, f64::max);
    let lip_re = lipschitz_seminorm_real(x, &g1);
    let lip_im = lipschitz_seminorm_real(x, &g2);
    let sup_norm = h.sup_norm();
    let sup_error = f.sup_distance(&h);
    let error_bound = 8.0 * eps;
    let mut failures = Vec::new();
    if vanishing > VANISH_TOL {
        failures.push(format!("h does not vanish on F and F_n (max |h| = {vanishing:e})"));
    }
    if lip_re > 1.0 + LIP_TOL {
        failures.push(format!("L(Re h) = {lip_re} > 1"));
    }
    if lip_im > 1.0 + LIP_TOL {
        failures.push(format!("L(Im h) = {lip_im} > 1"));
    }
    if sup_norm > 1.0 + LIP_TOL {
        failures.push(format!("|h| = {sup_norm} > 1"));
    }
    if sup_error > error_bound {
        failures.push(format!("|f - h| = {sup_error} > 8 eps = {error_bound}"));
    }
    Ok(RepairOutcome {
        h,
        certificate: RepairCertificate {
            vanishing,
            lip_re,
            lip_im,
            sup_norm,
            sup_error,
            error_bound,
            failures,
        },
        epsilon: eps,
        hausdorff: haus,
        neighbourhood,
        note,
    })
}

/// Smallest `t ≥ 0` such that some real `h` with `h|F = 0`, `L(h) ≤ 1`,
/// `|h| ≤ radius` satisfies `|f − h| ≤ t` pointwise.
///
/// Box-and-difference constraints on a metric are feasible iff
/// `lower_x ≤ upper_y + d(x, y)` for every pair, and each such condition is
/// linear in `t`, so the minimum is a maximum of thresholds.
fn real_ball_distance(x: &FiniteMetricSpace, zero_set: &BTreeSet<usize>, f: &[f64], radius: f64) -> f64 {
    let n = f.len();
    let mut t: f64 = 0.0;
    for i in 0..n {
        let i_zero = zero_set.contains(&i);
        for j in 0..n {
            let j_zero = zero_set.contains(&j);
            let d = x.d(i, j);
            // lower_i ∈ {−r, f_i − t, 0 if i ∈ F}, upper_j ∈ {r, f_j + t, 0 if j ∈ F}
            t = t.max(-radius - f[j] - d);
            t = t.max(f[i] - radius - d);
            t = t.max((f[i] - f[j] - d) / 2.0);
            if j_zero {
                t = t.max(f[i] - d);
            }
            if i_zero {
                t = t.max(-f[j] - d);
            }
        }
    }
    t
}

const MAX_CUT_ROUNDS: usize = 400;
const INITIAL_DIRECTIONS: usize = 8;
const CUT_SLACK: f64 = 1e-12;

fn lp_error(e: microlp::Error) -> Error {
    Error::Precondition(format!("linear program failed: {e}"))
}

/// Largest factor `s ≤ 1` such that `s·h` has both parts 1-Lipschitz and
/// modulus at most 1 everywhere.
fn shrink_into_ball(x: &FiniteMetricSpace, h: &[Complex64]) -> f64 {
    let re: Vec<f64> = h.iter().map(|z| z.re).collect();
    let im: Vec<f64> = h.iter().map(|z| z.im).collect();
    let worst = h
        .iter()
        .map(|z| z.norm())
        .fold(1.0, f64::max)
        .max(lipschitz_seminorm_real(x, &re))
        .max(lipschitz_seminorm_real(x, &im));
    1.0 / worst
}

/// Complex case: minimize `t` over the pair-slab polytope with the two discs
/// per point replaced by tangent cuts. Each LP optimum is a lower bound;
/// shrinking the LP point into the ball gives a feasible point and so an
/// upper bound. Violated discs get a new tangent cut until the bracket is
/// narrower than `tol`.
fn complex_ball_distance(
    x: &FiniteMetricSpace,
    zero_set: &BTreeSet<usize>,
    f: &[Complex64],
    lower: f64,
    upper: f64,
    tol: f64,
) -> Result<f64> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let n = f.len();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    // on F, h = 0 and the disc around f_i reduces to t ≥ |f_i|
    let floor = zero_set.iter().map(|&i| f[i].norm()).fold(0.0, f64::max);
    let t = p.add_var(1.0, (floor, f64::INFINITY));
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let b = if zero_set.contains(&i) { (0.0, 0.0) } else { (-1.0, 1.0) };
        u.push(p.add_var(0.0, b));
        v.push(p.add_var(0.0, b));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p.add_constraint(&[(u[i], 1.0), (u[j], -1.0)], ComparisonOp::Le, x.d(i, j));
                p.add_constraint(&[(v[i], 1.0), (v[j], -1.0)], ComparisonOp::Le, x.d(i, j));
            }
        }
    }
    for i in (0..n).filter(|i| !zero_set.contains(i)) {
        for k in 0..INITIAL_DIRECTIONS {
            let th = std::f64::consts::TAU * k as f64 / INITIAL_DIRECTIONS as f64;
            let (s, c) = th.sin_cos();
            p.add_constraint(&[(u[i], c), (v[i], s)], ComparisonOp::Le, 1.0);
            p.add_constraint(&[(u[i], c), (v[i], s), (t, -1.0)], ComparisonOp::Le, c * f[i].re + s * f[i].im);
        }
    }
    let mut sol = p
        .solve()
        .map_err(lp_error)?
        .into_solution()
        .map_err(|_| Error::NonConvergence { lo: lower, hi: upper })?;
    let mut lo = lower;
    let mut hi = upper;
    for _ in 0..MAX_CUT_ROUNDS {
        let tv = sol.var_value(t);
        lo = lo.max(tv.min(hi));
        let mut h: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(sol.var_value(u[i]), sol.var_value(v[i])))
            .collect();
        for &i in zero_set {
            h[i] = Complex64::new(0.0, 0.0);
        }
        let s = shrink_into_ball(x, &h);
        let up = f
            .iter()
            .zip(&h)
            .map(|(a, b)| (a - b * s).norm())
            .fold(0.0, f64::max);
        hi = hi.min(up);
        if hi - lo <= tol {
            return Ok(hi);
        }
        let mut cuts = Vec::new();
        for i in (0..n).filter(|i| !zero_set.contains(i)) {
            if h[i].norm() > 1.0 + CUT_SLACK {
                let d = h[i] / h[i].norm();
                cuts.push((i, d, false));
            }
            let r = h[i] - f[i];
            if r.norm() > tv + CUT_SLACK {
                cuts.push((i, r / r.norm(), true));
            }
        }
        if cuts.is_empty() {
            return Ok(hi);
        }
        for (i, d, around_f) in cuts {
            let outcome = if around_f {
                sol.add_constraint(
                    &[(u[i], d.re), (v[i], d.im), (t, -1.0)],
                    ComparisonOp::Le,
                    d.re * f[i].re + d.im * f[i].im,
                )
            } else {
                sol.add_constraint(&[(u[i], d.re), (v[i], d.im)], ComparisonOp::Le, 1.0)
            };
            sol = outcome
                .map_err(lp_error)?
                .into_solution()
                .map_err(|_| Error::NonConvergence { lo, hi })?;
        }
    }
    Err(Error::NonConvergence { lo, hi })
}

/// `min_{h ∈ B_F} ‖f − h‖_∞` within `tol`, where
/// `B_F = {h : h|F = 0, L(ℜh) ≤ 1, L(ℑh) ≤ 1, ‖h‖_∞ ≤ 1}`.
///
/// Real `f` is solved exactly. Complex `f` starts from the bracket given by
/// the real- and imaginary-part distances (below) and a product
/// construction (above), and is then narrowed by a cutting-plane linear
/// program; the returned value is attained by a member of `B_F`.
pub fn ball_distance(x: &FiniteMetricSpace, zero_set: &BTreeSet<usize>, f: &LipFunction, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tol = {tol} must be positive")));
    }
    check_len(x, f.0.len())?;
    x.check_subset(zero_set)?;
    let re = f.re();
    if f.is_real() {
        return Ok(real_ball_distance(x, zero_set, &re, 1.0));
    }
    let im = f.im();
    let lo = real_ball_distance(x, zero_set, &re, 1.0).max(real_ball_distance(x, zero_set, &im, 1.0));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let prod = real_ball_distance(x, zero_set, &re, r).hypot(real_ball_distance(x, zero_set, &im, r));
    let hi = f.sup_norm().min(prod).max(lo);
    if hi - lo <= tol {
        return Ok(hi);
    }
    complex_ball_distance(x, zero_set, &f.0, lo, hi, tol)
}

/// Sampled Hausdorff distance between the unit balls of `I_{F1}` and `I_{F2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallHausdorff {
    pub hausdorff_sets: f64,
    /// Max over candidates `g ∈ B_{F1}` of `d(g, B_{F2})`.
    pub directed_12: f64,
    pub directed_21: f64,
    pub estimate: f64,
    /// `ε* = √H (1 + 1e−6)`, when `H < 1`.
    pub epsilon_star: Option<f64>,
    /// `min{1, 8ε*}`, or 1 when `H ≥ 1`.
    pub bound: f64,
    pub candidates: usize,
    pub passed: bool,
}

/// `min{1, 8ε*}` with `ε* = √H·(1 + 1e−6)` for `H < 1`, else 1.
///
/// The clamp at 1 holds because both balls contain 0 and lie in the unit
/// sup-norm ball.
pub fn ball_hausdorff_bound(h: f64) -> (Option<f64>, f64) {
    if h < 1.0 {
        let eps = h.sqrt() * (1.0 + STRICT_GUARD);
        (Some(eps), (8.0 * eps).min(1.0))
    } else {
        (None, 1.0)
    }
}

/// A random real function in the unit ball of `I_F`: the target values are
/// uniform in `[−1, 1]`, pushed through the upper McShane envelope and then
/// pinned between `±d(·, F)` and clamped to `[−1, 1]`.
pub fn random_real_ball_function<R: Rng + ?Sized>(
    x: &FiniteMetricSpace,
    zero_set: &BTreeSet<usize>,
    rng: &mut R,
) -> Vec<f64> {
    let n = x.len();
    let target: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let steep = rng.random_bool(0.5);
    (0..n)
        .map(|p| {
            let env = (0..n)
                .map(|q| target[q] + x.d(p, q))
                .fold(f64::INFINITY, f64::min);
            let env = if steep {
                // lower envelope instead, for variety
                (0..n).map(|q| target[q] - x.d(p, q)).fold(f64::NEG_INFINITY, f64::max)
            } else {
                env
            };
            let dz = x.dist_to_set(p, zero_set);
            env.min(dz).max(-dz).clamp(-1.0, 1.0)
        })
        .collect()
}

/// A random complex function in the unit ball of `I_F`.
pub fn random_ball_function<R: Rng + ?Sized>(
    x: &FiniteMetricSpace,
    zero_set: &BTreeSet<usize>,
    rng: &mut R,
) -> LipFunction {
    let a = random_real_ball_function(x, zero_set, rng);
    let b = random_real_ball_function(x, zero_set, rng);
    let f = LipFunction::from_parts(&a, &b);
    let s = f.sup_norm();
    if s > 1.0 {
        f.scale(Complex64::new(1.0 / s, 0.0))
    } else {
        f
    }
}

/// Deterministic extreme candidates of `B_F` plus `count` random members.
pub fn ball_candidates(
    x: &FiniteMetricSpace,
    zero_set: &BTreeSet<usize>,
    count: usize,
    seed: u64,
    suite: &str,
) -> Vec<LipFunction> {
    let n = x.len();
    let bump: Vec<f64> = (0..n).map(|p| x.dist_to_set(p, zero_set).min(1.0)).collect();
    let bump = LipFunction::from_real(&bump);
    let rot = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let mut out = vec![
        LipFunction::zeros(n),
        bump.clone(),
        bump.scale(Complex64::new(-1.0, 0.0)),
        bump.scale(Complex64::new(0.0, 1.0)),
        bump.scale(rot),
    ];
    out.extend((0..count).map(|k| {
        let mut rng = stream_rng(seed, suite, k as u64);
        match k % 3 {
            0 | 1 => LipFunction::from_real(&random_real_ball_function(x, zero_set, &mut rng)),
            _ => random_ball_function(x, zero_set, &mut rng),
        }
    }));
    out
}

/// Estimates `Haus_∞(B_{F1}, B_{F2})` from sampled candidates on both sides
/// and compares it with `min{1, 8ε*}`.
pub fn ball_hausdorff(
    x: &FiniteMetricSpace,
    f1: &BTreeSet<usize>,
    f2: &BTreeSet<usize>,
    sample_count: usize,
    seed: u64,
    tol: f64,
) -> Result<BallHausdorff> {
    let h = hausdorff_sets(x, f1, f2)?;
    let (epsilon_star, bound) = ball_hausdorff_bound(h);
    let c1 = ball_candidates(x, f1, sample_count, seed, "ball_hausdorff/F1");
    let c2 = ball_candidates(x, f2, sample_count, seed, "ball_hausdorff/F2");
    let directed = |cands: &[LipFunction], target: &BTreeSet<usize>| -> Result<f64> {
        let d: Vec<f64> = cands
            .par_iter()
            .map(|g| ball_distance(x, target, g, tol))
            .collect::<Result<_>>()?;
        Ok(d.into_iter().fold(0.0, f64::max))
    };
    let directed_12 = directed(&c1, f2)?;
    let directed_21 = directed(&c2, f1)?;
    let estimate = directed_12.max(directed_21);
    Ok(BallHausdorff {
        hausdorff_sets: h,
        directed_12,
        directed_21,
        estimate,
        epsilon_star,
        bound,
        candidates: c1.len() + c2.len(),
        passed: estimate <= bound + tol,
    })
}

/// Random planar space of `n` points in a few clusters inside a square of
/// random side, so that small Hausdorff distances between subsets occur
/// often.
pub fn random_space<R: Rng + ?Sized>(n: usize, rng: &mut R) -> FiniteMetricSpace {
    loop {
        let clusters = rng.random_range(1..=n.clamp(1, 6));
        let side = 10f64.powf(rng.random_range(-0.3..0.7));
        let centres: Vec<[f64; 2]> = (0..clusters)
            .map(|_| [rng.random_range(0.0..side), rng.random_range(0.0..side)])
            .collect();
        let spread = side * 10f64.powf(rng.random_range(-2.5..-0.5));
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                let c = centres[rng.random_range(0..clusters)];
                [
                    c[0] + spread * rng.random_range(-1.0..1.0),
                    c[1] + spread * rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        if let Ok(s) = FiniteMetricSpace::from_planar(&pts) {
            return s;
        }
    }
}

/// Random nonempty `F_n` and `F` with `Haus(F_n, F) < ε²`.
pub fn random_subset_pair<R: Rng + ?Sized>(
    x: &FiniteMetricSpace,
    eps: f64,
    rng: &mut R,
) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let n = x.len();
    let target = eps * eps;
    loop {
        let f_n: BTreeSet<usize> = (0..n).filter(|_| rng.random_bool(0.25)).collect();
        if f_n.is_empty() {
            continue;
        }
        // each point of F_n keeps itself or moves to a neighbour within ε²
        let mut f: BTreeSet<usize> = BTreeSet::new();
        for &p in &f_n {
            let near: Vec<usize> = (0..n).filter(|&q| x.d(p, q) < target).collect();
            f.insert(near[rng.random_range(0..near.len())]);
            if rng.random_bool(0.3) {
                f.insert(near[rng.random_range(0..near.len())]);
            }
        }
        if hausdorff_sets(x, &f_n, &f).is_ok_and(|h| h < target) {
            return (f_n, f);
        }
    }
}
