//! The L-seminorm `L_β(a) = max_n ‖a − E_n(a)‖ / β(n)` on a truncated AF
//! tower, the admissible functions that control its Leibniz behaviour, and
//! the explicit propinquity upper bounds attached to each level.
//!
//! On a tower truncated at level `M` the supremum over `n` is a finite
//! maximum over `n < M`: every element lives in `A_M`, where `E_n` is the
//! identity for `n ≥ M`. The value returned by [`l_seminorm`] is therefore
//! exact, not an estimate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{jordan_lie, op_norm, re_im_parts, Element};
use crate::error::{Error, Result};
use crate::tower::{BetaSequence, BratteliTower};

/// Which admissible triple `(F, G, H)` is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleCase {
    /// `F = 2(x1 x4 + x2 x3)`, `G(x,y,z) = F(x,y,z,z)`, `H(x,y) = F(x,x,y,y)`.
    Af,
    /// `F = x1 x4 + x2 x3`, `G(x,y,z) = F(x,z,y,z)`, `H(x,y) = F(x,y,x,y)`.
    Commutative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmissibleTriple {
    pub case: TripleCase,
}

impl AdmissibleTriple {
    pub const AF: AdmissibleTriple = AdmissibleTriple { case: TripleCase::Af };
    pub const COMMUTATIVE: AdmissibleTriple = AdmissibleTriple {
        case: TripleCase::Commutative,
    };

    pub fn f<T: Num + Clone>(&self, x1: T, x2: T, x3: T, x4: T) -> T {
        let s = x1 * x4 + x2 * x3;
        match self.case {
            TripleCase::Af => s.clone() + s,
            TripleCase::Commutative => s,
        }
    }

    pub fn g<T: Num + Clone>(&self, x: T, y: T, z: T) -> T {
        match self.case {
            TripleCase::Af => self.f(x, y, z.clone(), z),
            TripleCase::Commutative => self.f(x, z.clone(), y, z),
        }
    }

    pub fn h<T: Num + Clone>(&self, x: T, y: T) -> T {
        match self.case {
            TripleCase::Af => self.f(x.clone(), x, y.clone(), y),
            TripleCase::Commutative => self.f(x.clone(), y.clone(), x, y),
        }
    }
}

/// Result of sweeping one family of admissibility inequalities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityTally {
    pub case: TripleCase,
    pub inequality: &'static str,
    pub tuples: usize,
    pub failures: usize,
    /// Smallest observed `rhs − lhs`, rounded to f64 from the exact value.
    pub min_slack: f64,
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite sample")
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn sample_nonneg<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => rng.random_range(0.0..1e-6),
        _ => rng.random_range(0.0..10.0),
    }
}

struct Tally {
    name: &'static str,
    tuples: usize,
    failures: usize,
    min_slack: Option<BigRational>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            tuples: 0,
            failures: 0,
            min_slack: None,
        }
    }

    fn record(&mut self, lhs: BigRational, rhs: BigRational) {
        let slack = rhs - lhs;
        self.tuples += 1;
        if slack < BigRational::zero() {
            self.failures += 1;
        }
        if self.min_slack.as_ref().is_none_or(|m| &slack < m) {
            self.min_slack = Some(slack);
        }
    }

    fn finish(self, case: TripleCase) -> InequalityTally {
        InequalityTally {
            case,
            inequality: self.name,
            tuples: self.tuples,
            failures: self.failures,
            min_slack: self.min_slack.as_ref().map(to_f64).unwrap_or(0.0),
        }
    }
}

/// Checks monotonicity and the lower bounds `x1x4 + x2x3 ≤ F`,
/// `(x+y)z ≤ G`, `2xy ≤ H` on `count` random nonnegative tuples.
///
/// Inputs are random doubles; every comparison is done in exact rational
/// arithmetic, so no tolerance is involved.
pub fn check_triple(triple: AdmissibleTriple, count: usize, seed: u64) -> Vec<InequalityTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f_lower = Tally::new("x1*x4 + x2*x3 <= F");
    let mut g_lower = Tally::new("(x+y)*z <= G");
    let mut h_lower = Tally::new("2*x*y <= H");
    let mut f_mono = Tally::new("F monotone");
    let mut g_mono = Tally::new("G monotone");
    let mut h_mono = Tally::new("H monotone");
    let two = BigRational::from_integer(BigInt::from(2));

    for _ in 0..count {
        let x: [f64; 4] = std::array::from_fn(|_| sample_nonneg(&mut rng));
        let bump: [f64; 4] = std::array::from_fn(|_| {
            if rng.random_bool(0.3) {
                0.0
            } else {
                sample_nonneg(&mut rng)
            }
        });
        let y: [f64; 4] = std::array::from_fn(|i| x[i] + bump[i]);
        let xr = x.map(rat);
        let yr = y.map(rat);
        let [a, b, c, d] = xr.clone();

        let fx = triple.f(a.clone(), b.clone(), c.clone(), d.clone());
        f_lower.record(a.clone() * d.clone() + b.clone() * c.clone(), fx.clone());
        let fy = triple.f(yr[0].clone(), yr[1].clone(), yr[2].clone(), yr[3].clone());
        f_mono.record(fx, fy);

        let gx = triple.g(a.clone(), b.clone(), c.clone());
        g_lower.record((a.clone() + b.clone()) * c.clone(), gx.clone());
        let gy = triple.g(yr[0].clone(), yr[1].clone(), yr[2].clone());
        g_mono.record(gx, gy);

        let hx = triple.h(a.clone(), b.clone());
        h_lower.record(two.clone() * a * b, hx.clone());
        let hy = triple.h(yr[0].clone(), yr[1].clone());
        h_mono.record(hx, hy);
    }
    [f_lower, g_lower, h_lower, f_mono, g_mono, h_mono]
        .into_iter()
        .map(|t| t.finish(triple.case))
        .collect()
}

fn check_beta_len(t: &BratteliTower, beta: &BetaSequence) -> Result<()> {
    if beta.len() < t.top_level() {
        return Err(Error::InvalidBeta(format!(
            "need beta(0..{}) for a tower with top level {}, got {} values",
            t.top_level(),
            t.top_level(),
            beta.len()
        )));
    }
    Ok(())
}

/// `L_β(a) = max_{n < M} ‖a − E_n(a)‖ / β(n)` for `a` in the top level.
pub fn l_seminorm(t: &BratteliTower, beta: &BetaSequence, a: &Element) -> Result<f64> {
    Ok(l_seminorm_terms(t, beta, a)?.into_iter().fold(0.0, f64::max))
}

/// The individual terms `‖a − E_n(a)‖ / β(n)`, `n < M`.
pub fn l_seminorm_terms(t: &BratteliTower, beta: &BetaSequence, a: &Element) -> Result<Vec<f64>> {
    check_beta_len(t, beta)?;
    let b = beta.values();
    (0..t.top_level())
        .map(|n| {
            let e = t.expectation_in_top(n, a)?;
            Ok(op_norm(&a.try_sub(&e)?) / b[n])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeibnizSlack {
    /// `F(‖a‖, ‖b‖, L(a), L(b))`.
    pub bound: f64,
    pub jordan: f64,
    pub lie: f64,
}

/// `F(‖a‖,‖b‖,L(a),L(b)) − L(a∘b)` and `F(…) − L({a,b})` for the
/// self-adjoint parts of `a` and `b`.
pub fn quasi_leibniz_slack(
    t: &BratteliTower,
    beta: &BetaSequence,
    a: &Element,
    b: &Element,
) -> Result<LeibnizSlack> {
    let a = re_im_parts(a).0;
    let b = re_im_parts(b).0;
    let la = l_seminorm(t, beta, &a)?;
    let lb = l_seminorm(t, beta, &b)?;
    let bound = AdmissibleTriple::AF.f(op_norm(&a), op_norm(&b), la, lb);
    let (jordan, lie) = jordan_lie(&a, &b)?;
    Ok(LeibnizSlack {
        bound,
        jordan: bound - l_seminorm(t, beta, &jordan)?,
        lie: bound - l_seminorm(t, beta, &lie)?,
    })
}

/// `x'_n`, `x_n` and `max{β(n), x_n − 1}` for level `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XFactors {
    pub level: usize,
    pub x_prime: f64,
    pub x: f64,
    pub bound: f64,
}

pub fn xn_factors(beta: &BetaSequence, n: usize) -> Result<XFactors> {
    if n == 0 {
        return Err(Error::Precondition("x_n is undefined at n = 0 (empty max over m < n)".into()));
    }
    let bn = beta.get(n)?;
    let b = beta.values();
    let x_prime = (0..n)
        .map(|m| (2.0 * bn + b[m]) / b[m])
        .fold(f64::NEG_INFINITY, f64::max);
    let x = (1.0 + bn).max(x_prime);
    Ok(XFactors {
        level: n,
        x_prime,
        x,
        bound: bn.max(x - 1.0),
    })
}

/// Upper bound `β(n)` on the quantum propinquity between `(A_n, L_β)` and
/// `(A, L_β)`. Exposed as data only.
pub fn af_propinquity_bound(beta: &BetaSequence, n: usize) -> Result<f64> {
    beta.get(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::tower::BetaSequence;
    use rand::SeedableRng;

    #[test]
    fn triple_formulas() {
        let af = AdmissibleTriple::AF;
        assert_eq!(af.f(1.0, 2.0, 3.0, 4.0), 2.0 * (4.0 + 6.0));
        assert_eq!(af.g(1.0, 2.0, 3.0), af.f(1.0, 2.0, 3.0, 3.0));
        assert_eq!(af.h(1.0, 2.0), af.f(1.0, 1.0, 2.0, 2.0));
        let c = AdmissibleTriple::COMMUTATIVE;
        assert_eq!(c.f(1.0, 2.0, 3.0, 4.0), 10.0);
        assert_eq!(c.g(1.0, 2.0, 3.0), c.f(1.0, 3.0, 2.0, 3.0));
        assert_eq!(c.h(1.0, 2.0), c.f(1.0, 2.0, 1.0, 2.0));
    }

    #[test]
    fn triple_sweep_small() {
        for triple in [AdmissibleTriple::AF, AdmissibleTriple::COMMUTATIVE] {
            for tally in check_triple(triple, 500, 3) {
                assert_eq!(tally.failures, 0, "{tally:?}");
                assert_eq!(tally.tuples, 500);
                assert!(tally.min_slack >= 0.0);
            }
        }
    }

    #[test]
    fn l_seminorm_examples() {
        let t = fixtures::car_tower(3);
        let beta = BetaSequence::new(vec![1.0, 1.0, 0.5]).unwrap();
        let one = Element::identity(t.top_shape());
        assert!(l_seminorm(&t, &beta, &one).unwrap() < 1e-14);

        let a = Element::diagonal(t.shape(1), &[vec![1.0, -1.0]]).unwrap();
        let a = t.embed_to_top(1, &a).unwrap();
        assert!((l_seminorm(&t, &beta, &a).unwrap() - 1.0).abs() < 1e-12);
        let two_a = a.scale_real(2.0);
        assert!((l_seminorm(&t, &beta, &two_a).unwrap() - 2.0).abs() < 1e-12);

        let short = BetaSequence::new(vec![1.0, 1.0]).unwrap();
        assert!(l_seminorm(&t, &short, &a).is_err());
    }

    #[test]
    fn l_seminorm_adjoint_invariant() {
        let t = fixtures::t2_tower();
        let beta = BetaSequence::factorial(3);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let a = Element::random(t.top_shape(), &mut rng);
            let l = l_seminorm(&t, &beta, &a).unwrap();
            let ls = l_seminorm(&t, &beta, &a.adjoint()).unwrap();
            assert!((l - ls).abs() < 1e-10 * l.max(1.0));
        }
    }

    #[test]
    fn leibniz_examples() {
        let t = fixtures::car_tower(3);
        let beta = BetaSequence::factorial(4);
        let one = Element::identity(t.top_shape());
        let s = quasi_leibniz_slack(&t, &beta, &one, &one).unwrap();
        assert!(s.bound.abs() < 1e-12 && s.jordan.abs() < 1e-12 && s.lie.abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let b = Element::random(t.top_shape(), &mut rng);
        let scalar = one.scale_real(3.0);
        let s = quasi_leibniz_slack(&t, &beta, &scalar, &b).unwrap();
        assert!((s.lie - s.bound).abs() < 1e-9);
        assert!(s.jordan >= -1e-9);
    }

    #[test]
    fn xn_examples() {
        let beta = BetaSequence::factorial(12);
        let x1 = xn_factors(&beta, 1).unwrap();
        assert_eq!((x1.x_prime, x1.x, x1.bound), (3.0, 3.0, 2.0));
        let x3 = xn_factors(&beta, 3).unwrap();
        assert!((x3.x_prime - 5.0 / 3.0).abs() <= 1e-12);
        assert!((x3.x - 5.0 / 3.0).abs() <= 1e-12);
        assert!((x3.bound - 2.0 / 3.0).abs() <= 1e-12);
        for n in 2..=10 {
            let x = xn_factors(&beta, n).unwrap();
            assert!((x.x - (1.0 + 2.0 / n as f64)).abs() <= 1e-12, "n = {n}");
        }
        assert!(xn_factors(&beta, 0).is_err());
        assert!(xn_factors(&beta, 12).is_err());
    }

    #[test]
    fn propinquity_bound_reads_beta() {
        let beta = BetaSequence::factorial(5);
        assert_eq!(af_propinquity_bound(&beta, 2).unwrap(), 0.5);
        assert_eq!(af_propinquity_bound(&beta, 0).unwrap(), 1.0);
        let bounds: Vec<f64> = (0..5).map(|n| af_propinquity_bound(&beta, n).unwrap()).collect();
        assert!(bounds.windows(2).all(|w| w[1] <= w[0]));
    }
}
