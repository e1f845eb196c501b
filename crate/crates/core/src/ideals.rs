//! Ideals of a truncated AF tower and the module structure they carry.
//!
//! An ideal is specified by its set of top-level blocks. Its slice
//! `I_n = I ∩ A_n` is the set of level-`n` blocks whose every image in level
//! `n + 1` lies in the slice above; the unit of `I_n` is the central
//! projection `1_n` onto those blocks.
//!
//! The D-norm on `I` is
//! `D(ω) = max{ L_β(ω), ‖ω‖, max_n ‖ω − ω 1_n‖ / β(n) }`, and the unit ball
//! `B = {ω ∈ I : D(ω) ≤ 1}` is compared against its slices `B_n` through the
//! recovery map `b ↦ E_n(b 1_n) / x_n`.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{op_norm, Element};
use crate::error::{Error, Result};
use crate::quantum_metric::{l_seminorm, xn_factors};
use crate::rng::stream_rng;
use crate::tower::{BetaSequence, BratteliTower};

/// Blocks whose norm is at most this are treated as zero in membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-12;
/// Slack on the recovery certificate inequalities.
pub const CERTIFICATE_TOL: f64 = 1e-8;
/// Slack on the sampled imprint comparison.
pub const IMPRINT_TOL: f64 = 1e-6;
/// Slack when checking that a point lies in a D-ball.
pub const BALL_TOL: f64 = 1e-9;
/// Floor on the rescaling divisor for near-zero samples.
pub const EPS_DIV: f64 = 1e-14;

/// Ideal config as read from JSON: `{"top_support": [0]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealConfig {
    pub top_support: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct IdealSupport {
    tower: Arc<BratteliTower>,
    supports: Vec<BTreeSet<usize>>,
}

/// Derives the slices `S_n` from the top-level support.
pub fn derive_supports(tower: &Arc<BratteliTower>, top_support: &BTreeSet<usize>) -> Result<IdealSupport> {
    let top = tower.top_level();
    let nblocks = tower.top_shape().num_blocks();
    if let Some(&bad) = top_support.iter().find(|&&j| j >= nblocks) {
        return Err(Error::Precondition(format!(
            "top support names block {bad}, top level has {nblocks} blocks"
        )));
    }
    let mut supports = vec![BTreeSet::new(); top + 1];
    supports[top] = top_support.clone();
    for n in (0..top).rev() {
        let m = tower.mults(n);
        let above = &supports[n + 1];
        supports[n] = (0..tower.shape(n).num_blocks())
            .filter(|&i| m.iter().enumerate().all(|(j, row)| row[i] == 0 || above.contains(&j)))
            .collect();
    }
    Ok(IdealSupport {
        tower: Arc::clone(tower),
        supports,
    })
}

impl IdealSupport {
    pub fn from_config(tower: &Arc<BratteliTower>, cfg: &IdealConfig) -> Result<Self> {
        derive_supports(tower, &cfg.top_support.iter().copied().collect())
    }

    pub fn tower(&self) -> &Arc<BratteliTower> {
        &self.tower
    }

    pub fn support(&self, n: usize) -> &BTreeSet<usize> {
        &self.supports[n]
    }

    pub fn supports(&self) -> &[BTreeSet<usize>] {
        &self.supports
    }

    pub fn is_zero(&self) -> bool {
        self.supports.iter().all(|s| s.is_empty())
    }

    pub fn same_tower(&self, other: &IdealSupport) -> bool {
        Arc::ptr_eq(&self.tower, &other.tower) || *self.tower == *other.tower
    }

    /// Independent check of `i ∈ S_n, m[j][i] > 0 ⇒ j ∈ S_{n+1}`.
    pub fn is_edge_closed(&self) -> bool {
        (0..self.tower.top_level()).all(|n| {
            let m = self.tower.mults(n);
            self.supports[n].iter().all(|&i| {
                m.iter()
                    .enumerate()
                    .all(|(j, row)| row[i] == 0 || self.supports[n + 1].contains(&j))
            })
        })
    }

    /// `Err(NotInIdeal)` naming the first block outside `S_n` with nonzero norm.
    pub fn check_member(&self, n: usize, a: &Element) -> Result<()> {
        if a.shape() != self.tower.shape(n) {
            return Err(Error::ShapeMismatch {
                expected: self.tower.shape(n).dims().to_vec(),
                found: a.shape().dims().to_vec(),
            });
        }
        for (i, b) in a.blocks().iter().enumerate() {
            if self.supports[n].contains(&i) {
                continue;
            }
            let norm = crate::algebra::spectral_norm(b);
            if norm > MEMBERSHIP_TOL {
                return Err(Error::NotInIdeal { block: i, norm });
            }
        }
        Ok(())
    }

    pub fn contains(&self, n: usize, a: &Element) -> bool {
        self.check_member(n, a).is_ok()
    }

    /// Unit `1_n` of `I_n`, as a level-`n` element.
    pub fn unit_projection(&self, n: usize) -> Element {
        Element::block_projection(self.tower.shape(n), &self.supports[n])
    }

    /// `1_n` viewed in the top level.
    pub fn unit_in_top(&self, n: usize) -> Element {
        self.tower
            .embed_to_top(n, &self.unit_projection(n))
            .expect("unit has level shape")
    }

    pub fn to_config(&self) -> IdealConfig {
        IdealConfig {
            top_support: self.supports[self.tower.top_level()].iter().copied().collect(),
        }
    }
}

/// The three families entering the D-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DNormTerms {
    pub l_seminorm: f64,
    pub norm: f64,
    /// `max_n ‖ω − ω 1_n‖ / β(n)`.
    pub unit_term: f64,
}

impl DNormTerms {
    pub fn value(&self) -> f64 {
        self.l_seminorm.max(self.norm).max(self.unit_term)
    }
}

pub fn d_norm_terms(ideal: &IdealSupport, beta: &BetaSequence, omega: &Element) -> Result<DNormTerms> {
    let t = &ideal.tower;
    ideal.check_member(t.top_level(), omega)?;
    let l = l_seminorm(t, beta, omega)?;
    let b = beta.values();
    let mut unit_term: f64 = 0.0;
    for n in 0..t.top_level() {
        let w1 = omega.try_mul(&ideal.unit_in_top(n))?;
        unit_term = unit_term.max(op_norm(&omega.try_sub(&w1)?) / b[n]);
    }
    Ok(DNormTerms {
        l_seminorm: l,
        norm: op_norm(omega),
        unit_term,
    })
}

/// `D_I(ω)` for `ω` in the top level of the ideal.
pub fn d_norm_af(ideal: &IdealSupport, beta: &BetaSequence, omega: &Element) -> Result<f64> {
    Ok(d_norm_terms(ideal, beta, omega)?.value())
}

/// Points of `B = {ω ∈ I : D(ω) ≤ 1}`, drawn from `I_level` and embedded
/// in the top level.
///
/// The list starts with `0` and, when `I_level ≠ 0`, the rescaled unit
/// `1_level / D(1_level)`; then `count` Gaussian draws supported on
/// `S_level`, each divided by `max(D, EPS_DIV)`. Draw `i` comes from its own
/// stream, so the list depends only on `(seed, level, count)`.
pub fn ball_sample(
    ideal: &IdealSupport,
    beta: &BetaSequence,
    level: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Element>> {
    let t = &ideal.tower;
    if level > t.top_level() {
        return Err(Error::LevelOutOfRange {
            level,
            top: t.top_level(),
        });
    }
    if count == 0 {
        return Err(Error::Precondition("sample count must be at least 1".into()));
    }
    let zero = Element::zeros(t.top_shape());
    let support = ideal.support(level);
    if support.is_empty() {
        return Ok(vec![zero]);
    }
    let unit = ideal.unit_in_top(level);
    let d_unit = d_norm_af(ideal, beta, &unit)?;
    let mut out = vec![zero, unit.scale_real(1.0 / d_unit.max(EPS_DIV))];
    let suite = format!("ball_sample/level{level}");
    let draws: Vec<Element> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, &suite, i as u64);
            let a = Element::random_supported(t.shape(level), support, &mut rng);
            let top = t.embed_to_top(level, &a)?;
            let d = d_norm_af(ideal, beta, &top)?;
            Ok(top.scale_real(1.0 / d.max(EPS_DIV)))
        })
        .collect::<Result<_>>()?;
    out.extend(draws);
    Ok(out)
}

/// Checked recovery of a ball element from the level-`n` slice.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub level: usize,
    pub x_n: f64,
    /// `E_n(b 1_n) / x_n`, a level-`n` element.
    pub candidate: Element,
    /// `D(E_n(b 1_n))`, checked against `x_n`.
    pub d_expectation: f64,
    /// `D(candidate)`, checked against 1.
    pub d_candidate: f64,
    /// `‖b − E_n(b 1_n)‖`, at most `2β(n)` by the proof.
    pub recovery_gap: f64,
    /// `‖b − E_n(b 1_n) / x_n‖`.
    pub distance: f64,
    /// `(x_n − 1) + 2β(n)`.
    pub distance_bound: f64,
    /// `‖E_n(b 1_n) − E_n(b) 1_n‖`, zero for a conditional expectation.
    pub module_defect: f64,
    pub failures: Vec<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn recover_certificate(
    ideal: &IdealSupport,
    beta: &BetaSequence,
    b: &Element,
    n: usize,
) -> Result<Certificate> {
    let t = &ideal.tower;
    if n == 0 || n >= t.top_level() {
        return Err(Error::Precondition(format!(
            "recovery needs 1 <= n < {}, got {n}",
            t.top_level()
        )));
    }
    let d_b = d_norm_af(ideal, beta, b)?;
    if d_b > 1.0 + BALL_TOL {
        return Err(Error::Precondition(format!("D(b) = {d_b} exceeds 1")));
    }
    let xf = xn_factors(beta, n)?;
    let x = xf.x;
    let beta_n = beta.get(n)?;

    let unit_top = ideal.unit_in_top(n);
    let y = t.conditional_expectation(n, &b.try_mul(&unit_top)?)?;
    let y_top = t.embed_to_top(n, &y)?;
    let eb_unit = t
        .expectation_in_top(n, b)?
        .try_mul(&unit_top)?;
    let module_defect = op_norm(&y_top.try_sub(&eb_unit)?);

    let c = y.scale_real(1.0 / x);
    let c_top = y_top.scale_real(1.0 / x);
    let d_expectation = d_norm_af(ideal, beta, &y_top)?;
    let d_candidate = d_norm_af(ideal, beta, &c_top)?;
    let recovery_gap = op_norm(&b.try_sub(&y_top)?);
    let distance = op_norm(&b.try_sub(&c_top)?);
    let distance_bound = (x - 1.0) + 2.0 * beta_n;

    let mut failures = Vec::new();
    if d_expectation > x + CERTIFICATE_TOL {
        failures.push(format!("D(E_n(b 1_n)) = {d_expectation} > x_n = {x}"));
    }
    if d_candidate > 1.0 + CERTIFICATE_TOL {
        failures.push(format!("D(candidate) = {d_candidate} > 1"));
    }
    if distance > distance_bound + CERTIFICATE_TOL {
        failures.push(format!("distance {distance} > (x_n - 1) + 2 beta(n) = {distance_bound}"));
    }
    Ok(Certificate {
        level: n,
        x_n: x,
        candidate: c,
        d_expectation,
        d_candidate,
        recovery_gap,
        distance,
        distance_bound,
        module_defect,
        failures,
    })
}

const POWER_STEPS: usize = 4;

/// Lower estimate of `k_Ω(ω, ν) = sup_{ξ ∈ B} ‖ω*ξ − ν*ξ‖` over a sample of `B`.
pub fn k_modular_estimate(omega: &Element, nu: &Element, sample: &[Element]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Empty("ball sample"));
    }
    let ws = omega.adjoint();
    let vs = nu.adjoint();
    sample.iter().try_fold(0.0_f64, |acc, xi| {
        let d = ws.try_mul(xi)?.try_sub(&vs.try_mul(xi)?)?;
        Ok(acc.max(op_norm(&d)))
    })
}

/// Bridge quantities for the bridge from `Ω_{I_n}` to `Ω_I`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    pub level: usize,
    pub height: f64,
    pub basic_reach: f64,
    pub modular_reach: f64,
    /// Sampled directed Hausdorff distance from `B` to `B_n` in operator norm.
    pub imprint_estimate: f64,
    /// `(x_n − 1) + 2β(n)`.
    pub imprint_bound: f64,
    /// `max{β(n), x_n − 1}`.
    pub lambda_bound: f64,
    /// `max{height, basic_reach, modular_reach + imprint_bound}`.
    pub lambda_from_parts: f64,
    pub certificate_failures: Vec<String>,
}

impl BridgeReport {
    pub fn passed(&self) -> bool {
        self.certificate_failures.is_empty()
    }
}

/// Compares the sampled top ball against the sampled level-`n` ball.
///
/// The `B_n` sample is augmented with the recovery candidate of every top
/// sample; each candidate is kept only if its D-norm is at most `1 + BALL_TOL`.
/// Distances are operator-norm distances, which dominate `k_Ω`.
pub fn imprint_estimate(
    ideal: &IdealSupport,
    beta: &BetaSequence,
    n: usize,
    samples_n: &[Element],
    samples_top: &[Element],
) -> Result<BridgeReport> {
    let t = &ideal.tower;
    if samples_n.is_empty() || samples_top.is_empty() {
        return Err(Error::Empty("imprint samples"));
    }
    if n == 0 || n >= t.top_level() {
        return Err(Error::Precondition(format!(
            "imprint needs 1 <= n < {}, got {n}",
            t.top_level()
        )));
    }
    let xf = xn_factors(beta, n)?;
    let beta_n = beta.get(n)?;

    let witnesses: Vec<Option<Element>> = samples_top
        .par_iter()
        .map(|b| {
            let cert = recover_certificate(ideal, beta, b, n)?;
            if cert.d_candidate <= 1.0 + BALL_TOL {
                Ok(Some(t.embed_to_top(n, &cert.candidate)?))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;

    let mut pool: Vec<&Element> = samples_n.iter().collect();
    pool.extend(witnesses.iter().flatten());

    let directed = samples_top
        .par_iter()
        .enumerate()
        .map(|(k, b)| {
            // own witness first: usually the nearest point
            let mut best = match &witnesses[k] {
                Some(w) => op_norm(&b.try_sub(w)?),
                None => f64::INFINITY,
            };
            for c in &pool {
                if best == 0.0 {
                    break;
                }
                // both bounds sit below the norm, so skipping keeps the minimum
                if column_bound(b, c) >= best {
                    continue;
                }
                let diff = b.try_sub(c)?;
                if norm_lower_bound(&diff) < best {
                    best = best.min(op_norm(&diff));
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0_f64, f64::max);

    let imprint_bound = (xf.x - 1.0) + 2.0 * beta_n;
    let height = 0.0;
    let basic_reach = beta_n;
    let modular_reach = 0.0;
    let mut certificate_failures = Vec::new();
    if directed > imprint_bound + IMPRINT_TOL {
        certificate_failures.push(format!(
            "sampled imprint {directed} exceeds (x_n - 1) + 2 beta(n) = {imprint_bound}"
        ));
    }
    Ok(BridgeReport {
        level: n,
        height,
        basic_reach,
        modular_reach,
        imprint_estimate: directed,
        imprint_bound,
        lambda_bound: xf.bound,
        lambda_from_parts: height.max(basic_reach).max(modular_reach + imprint_bound),
        certificate_failures,
    })
}

// Largest column norm of a - b, without forming the difference.
fn column_bound(a: &Element, b: &Element) -> f64 {
    let mut bound = 0.0_f64;
    for (x, y) in a.blocks().iter().zip(b.blocks()) {
        for (cx, cy) in x.column_iter().zip(y.column_iter()) {
            let sq: f64 = cx.iter().zip(cy.iter()).map(|(p, q)| (p - q).norm_sqr()).sum();
            bound = bound.max(sq);
        }
    }
    bound.sqrt()
}

// A few power steps on A*A from the largest column; |Av|/|v| never exceeds
// the operator norm.
fn norm_lower_bound(a: &Element) -> f64 {
    a.blocks()
        .iter()
        .map(|m| {
            let Some((j, _)) = m
                .column_iter()
                .map(|c| c.norm_squared())
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(&y.1))
            else {
                return 0.0;
            };
            let mut v = m.column(j).clone_owned();
            let mut lower = 0.0_f64;
            for _ in 0..POWER_STEPS {
                let v_norm = v.norm();
                if v_norm == 0.0 {
                    break;
                }
                let w = m.ad_mul(&v);
                let w_norm = w.norm();
                if w_norm == 0.0 {
                    break;
                }
                // |A^* v| / |v| is a valid bound too
                lower = lower.max(w_norm / v_norm);
                v = m * w.unscale(w_norm);
                lower = lower.max(v.norm());
            }
            lower
        })
        .fold(0.0, f64::max)
}

/// Level-wise disagreement surrogate `2^(−first level where slices differ)`.
///
/// Zero when every slice agrees. Labeled a surrogate: it detects the
/// eventual level-wise agreement used for Fell convergence, nothing more.
pub fn fell_surrogate(i: &IdealSupport, j: &IdealSupport) -> Result<f64> {
    if !i.same_tower(j) {
        return Err(Error::TowerMismatch);
    }
    Ok(match first_disagreement(i, j) {
        Some(n) => 0.5_f64.powi(n as i32),
        None => 0.0,
    })
}

fn first_disagreement(i: &IdealSupport, j: &IdealSupport) -> Option<usize> {
    i.supports.iter().zip(&j.supports).position(|(a, b)| a != b)
}

/// Largest `N` such that the slices agree at every level `≤ N`.
pub fn agreement_level(i: &IdealSupport, j: &IdealSupport) -> Option<usize> {
    match first_disagreement(i, j) {
        None => Some(i.supports.len() - 1),
        Some(0) => None,
        Some(n) => Some(n - 1),
    }
}

/// One row of the Fell-to-propinquity table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub k: usize,
    /// `N_k`; `None` when even level 0 disagrees.
    pub agreement_level: Option<usize>,
    pub beta_n: Option<f64>,
    pub x_n: Option<f64>,
    /// `2 · max{β(N_k), x_{N_k} − 1}`.
    pub bound: Option<f64>,
    pub surrogate_distance: f64,
    pub note: Option<String>,
}

pub const NO_AGREEMENT_NOTE: &str = "no agreement level >= 1";

/// Upper bounds on `Λ^mod(Ω_{I^k}, Ω_{I^∞})` from level-wise agreement: for
/// each `k`, `N_k` is the last level where `I^k` and the limit agree, and the
/// bound is `2 · max{β(N_k), x_{N_k} − 1}`.
pub fn fell_to_propinquity_table(
    beta: &BetaSequence,
    sequence: &[IdealSupport],
    limit: &IdealSupport,
) -> Result<Vec<ConvergenceRow>> {
    sequence
        .iter()
        .enumerate()
        .map(|(k, ideal)| {
            if !ideal.same_tower(limit) {
                return Err(Error::TowerMismatch);
            }
            let surrogate_distance = fell_surrogate(ideal, limit)?;
            let n = agreement_level(ideal, limit);
            match n {
                Some(n) if n >= 1 => {
                    let xf = xn_factors(beta, n)?;
                    Ok(ConvergenceRow {
                        k,
                        agreement_level: Some(n),
                        beta_n: Some(beta.get(n)?),
                        x_n: Some(xf.x),
                        bound: Some(2.0 * xf.bound),
                        surrogate_distance,
                        note: None,
                    })
                }
                _ => Ok(ConvergenceRow {
                    k,
                    agreement_level: n,
                    beta_n: None,
                    x_n: None,
                    bound: None,
                    surrogate_distance,
                    note: Some(NO_AGREEMENT_NOTE.to_string()),
                }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, support};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t2() -> Arc<BratteliTower> {
        Arc::new(fixtures::t2_tower())
    }

    #[test]
    fn t2_proper_ideal_slices() {
        let t = t2();
        let i = derive_supports(&t, &support(&[0])).unwrap();
        assert_eq!(i.support(2), &support(&[0]));
        assert_eq!(i.support(1), &support(&[0]));
        assert!(i.support(0).is_empty());
        assert!(i.is_edge_closed());
    }

    #[test]
    fn full_and_zero_ideals() {
        let t = t2();
        let full = derive_supports(&t, &support(&[0, 1])).unwrap();
        for n in 0..=2 {
            assert_eq!(full.support(n).len(), t.shape(n).num_blocks());
            assert_eq!(full.unit_projection(n), Element::identity(t.shape(n)));
        }
        let zero = derive_supports(&t, &BTreeSet::new()).unwrap();
        assert!(zero.is_zero());
        assert!(derive_supports(&t, &support(&[2])).is_err());
    }

    #[test]
    fn rederiving_from_a_slice_agrees() {
        // supports of the truncated tower below level n are the same
        let t = Arc::new(fixtures::ladder_tower(4));
        for top in [vec![1, 3], vec![0], vec![2, 4], vec![1, 2, 3, 4]] {
            let i = derive_supports(&t, &support(&top)).unwrap();
            assert!(i.is_edge_closed());
            for n in 0..4 {
                let m = t.mults(n);
                for k in 0..t.shape(n).num_blocks() {
                    let closed = m
                        .iter()
                        .enumerate()
                        .all(|(j, row)| row[k] == 0 || i.support(n + 1).contains(&j));
                    assert_eq!(closed, i.support(n).contains(&k));
                }
            }
        }
    }

    #[test]
    fn unit_projection_examples() {
        let t = t2();
        let i = derive_supports(&t, &support(&[0])).unwrap();
        let u1 = i.unit_projection(1);
        assert_eq!(u1, Element::diagonal(t.shape(1), &[vec![1.0], vec![0.0]]).unwrap());
        assert!(i.unit_projection(0).is_zero(0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 0..=2 {
            let u = i.unit_projection(n);
            assert!(u.try_mul(&u).unwrap().approx_eq(&u, 1e-12));
            assert!(u.adjoint().approx_eq(&u, 1e-12));
            let a = Element::random(t.shape(n), &mut rng);
            let comm = a.try_mul(&u).unwrap().try_sub(&u.try_mul(&a).unwrap()).unwrap();
            assert!(comm.is_zero(1e-12));
            let w = Element::random_supported(t.shape(n), i.support(n), &mut rng);
            assert!(w.try_mul(&u).unwrap().approx_eq(&w, 1e-12));
        }
    }

    #[test]
    fn ideal_absorbs_products() {
        let t = Arc::new(fixtures::t2_extended_tower());
        let i = derive_supports(&t, &support(&[0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for n in 0..=t.top_level() {
            let a = Element::random(t.shape(n), &mut rng);
            let w = Element::random_supported(t.shape(n), i.support(n), &mut rng);
            assert!(i.contains(n, &a.try_mul(&w).unwrap()));
            assert!(i.contains(n, &w.try_mul(&a).unwrap()));
            // embedding a slice element stays inside the next slice
            if n < t.top_level() {
                assert!(i.contains(n + 1, &t.embed(n, &w).unwrap()));
            }
        }
    }

    #[test]
    fn d_norm_examples() {
        let t = t2();
        let beta = BetaSequence::new(vec![1.0, 1.0, 0.5]).unwrap();
        let i = derive_supports(&t, &support(&[0])).unwrap();
        let zero = Element::zeros(t.top_shape());
        assert_eq!(d_norm_af(&i, &beta, &zero).unwrap(), 0.0);

        let omega = Element::block_projection(t.top_shape(), &[0]);
        let terms = d_norm_terms(&i, &beta, &omega).unwrap();
        // 1_0 = 0, so the n = 0 unit term is ‖ω‖/β(0) = 1
        assert!((terms.unit_term - 1.0).abs() < 1e-12);
        let d = terms.value();
        assert!(d >= 1.0);
        let d2 = d_norm_af(&i, &beta, &omega.scale_real(2.0)).unwrap();
        assert!((d2 - 2.0 * d).abs() < 1e-12);

        let outside = Element::block_projection(t.top_shape(), &[1]);
        assert!(matches!(
            d_norm_af(&i, &beta, &outside),
            Err(Error::NotInIdeal { block: 1, .. })
        ));
    }

    #[test]
    fn ball_sample_contract() {
        let t = Arc::new(fixtures::t2_extended_tower());
        let beta = BetaSequence::factorial(5);
        let zero = derive_supports(&t, &BTreeSet::new()).unwrap();
        let s = ball_sample(&zero, &beta, 4, 10, 1).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s[0].is_zero(0.0));

        let i = derive_supports(&t, &support(&[0])).unwrap();
        let a = ball_sample(&i, &beta, 3, 25, 9).unwrap();
        let b = ball_sample(&i, &beta, 3, 25, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 27);
        for w in &a {
            let d = d_norm_af(&i, &beta, w).unwrap();
            assert!(d <= 1.0 + 1e-9);
            assert!(op_norm(w) <= d + 1e-12);
        }
        assert!(ball_sample(&i, &beta, 3, 0, 9).is_err());
    }

    #[test]
    fn certificate_examples() {
        let t = Arc::new(fixtures::t2_extended_tower());
        let beta = BetaSequence::factorial(5);
        let i = derive_supports(&t, &support(&[0])).unwrap();

        let zero = Element::zeros(t.top_shape());
        let c = recover_certificate(&i, &beta, &zero, 2).unwrap();
        assert!(c.passed());
        assert_eq!(c.distance, 0.0);

        // b already in I_n: the candidate is b / x_n
        let n = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let w = Element::random_supported(t.shape(n), i.support(n), &mut rng);
        let w_top = t.embed_to_top(n, &w).unwrap();
        let b = w_top.scale_real(1.0 / d_norm_af(&i, &beta, &w_top).unwrap());
        let c = recover_certificate(&i, &beta, &b, n).unwrap();
        assert!(c.passed(), "{:?}", c.failures);
        let expect = (1.0 - 1.0 / c.x_n) * op_norm(&b);
        assert!((c.distance - expect).abs() < 1e-10);
        assert!(c.distance <= c.x_n - 1.0);

        assert!(recover_certificate(&i, &beta, &b, 0).is_err());
        assert!(recover_certificate(&i, &beta, &b, 4).is_err());
        assert!(recover_certificate(&i, &beta, &b.scale_real(3.0), 2).is_err());
    }

    #[test]
    fn k_modular_examples() {
        let t = Arc::new(fixtures::car_tower(2));
        let beta = BetaSequence::factorial(3);
        let i = derive_supports(&t, &support(&[0])).unwrap();
        let sample = ball_sample(&i, &beta, 2, 20, 4).unwrap();
        let w = &sample[3];
        assert_eq!(k_modular_estimate(w, w, &sample).unwrap(), 0.0);
        let v = &sample[5];
        let k = k_modular_estimate(w, v, &sample).unwrap();
        assert!(k <= op_norm(&w.try_sub(v).unwrap()) + 1e-9);

        let zero = Element::zeros(t.top_shape());
        let k0 = k_modular_estimate(w, &zero, &sample).unwrap();
        let ww = w.adjoint().try_mul(w).unwrap();
        // w lies in the sample and D(w) = 1
        assert!(k0 >= op_norm(&ww) - 1e-12);
        assert!(k_modular_estimate(w, v, &[]).is_err());
    }

    #[test]
    fn norm_bounds_stay_below_the_norm() {
        let t = fixtures::car_tower(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = Element::random(t.top_shape(), &mut rng);
            let b = Element::random(t.top_shape(), &mut rng);
            let d = op_norm(&a.try_sub(&b).unwrap());
            assert!(column_bound(&a, &b) <= d * (1.0 + 1e-12));
            let lower = norm_lower_bound(&a.try_sub(&b).unwrap());
            assert!(lower <= d * (1.0 + 1e-12) && lower >= 0.5 * d);
        }
        assert_eq!(norm_lower_bound(&Element::zeros(t.top_shape())), 0.0);
    }

    #[test]
    fn imprint_examples() {
        let t = Arc::new(fixtures::car_tower(3));
        let beta = BetaSequence::factorial(4);
        let zero = derive_supports(&t, &BTreeSet::new()).unwrap();
        let s = ball_sample(&zero, &beta, 3, 5, 0).unwrap();
        let r = imprint_estimate(&zero, &beta, 2, &s, &s).unwrap();
        assert_eq!(r.imprint_estimate, 0.0);
        assert!(r.passed());

        let full = derive_supports(&t, &support(&[0])).unwrap();
        let sn = ball_sample(&full, &beta, 2, 40, 1).unwrap();
        let st = ball_sample(&full, &beta, 3, 40, 2).unwrap();
        let r = imprint_estimate(&full, &beta, 2, &sn, &st).unwrap();
        assert!((r.imprint_bound - 2.0).abs() < 1e-12);
        assert!(r.imprint_estimate <= 2.0);
        assert!(r.passed());
        assert_eq!((r.height, r.modular_reach), (0.0, 0.0));
        assert_eq!(r.basic_reach, 0.5);

        let t = Arc::new(fixtures::t2_extended_tower());
        let beta = BetaSequence::factorial(5);
        let i = derive_supports(&t, &support(&[0, 1])).unwrap();
        let s = ball_sample(&i, &beta, 3, 5, 3).unwrap();
        let r = imprint_estimate(&i, &beta, 3, &s, &s).unwrap();
        assert!((r.lambda_bound - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fell_surrogate_examples() {
        let t = t2();
        let proper = derive_supports(&t, &support(&[0])).unwrap();
        let full = derive_supports(&t, &support(&[0, 1])).unwrap();
        assert_eq!(fell_surrogate(&proper, &proper).unwrap(), 0.0);
        assert_eq!(fell_surrogate(&proper, &full).unwrap(), 1.0);

        let lt = Arc::new(fixtures::ladder_tower(4));
        let a = derive_supports(&lt, &support(&[1])).unwrap();
        let b = derive_supports(&lt, &support(&[1, 3])).unwrap();
        assert_eq!(fell_surrogate(&a, &b).unwrap(), 0.125);

        let other = derive_supports(&Arc::new(fixtures::car_tower(2)), &support(&[0])).unwrap();
        assert!(matches!(fell_surrogate(&a, &other), Err(Error::TowerMismatch)));
    }

    #[test]
    fn convergence_table_examples() {
        let t = t2();
        let beta = BetaSequence::factorial(3);
        let proper = derive_supports(&t, &support(&[0])).unwrap();
        let full = derive_supports(&t, &support(&[0, 1])).unwrap();
        let seq: Vec<IdealSupport> = (0..8)
            .map(|k| if k < 5 { full.clone() } else { proper.clone() })
            .collect();
        let rows = fell_to_propinquity_table(&beta, &seq, &proper).unwrap();
        for r in &rows[..5] {
            assert_eq!(r.bound, None);
            assert_eq!(r.note.as_deref(), Some(NO_AGREEMENT_NOTE));
        }
        let bound_m = xn_factors(&beta, 2).unwrap().bound;
        for r in &rows[5..] {
            assert_eq!(r.agreement_level, Some(2));
            assert_eq!(r.bound, Some(2.0 * bound_m));
            assert_eq!(r.surrogate_distance, 0.0);
        }
    }
}
