//! Truncated AF towers `A_0 ⊂ A_1 ⊂ … ⊂ A_M` described by Bratteli data.
//!
//! Level `n` is a multi-matrix algebra with shape `levels[n]`. The matrix
//! `mults[n][j][i]` counts how many times block `i` of level `n` sits inside
//! block `j` of level `n + 1`. Copies are stacked along the diagonal in
//! lexicographic order of `(source block, copy index)`, which fixes every
//! embedding bit-for-bit.
//!
//! The trace is given on the top level and restricted downward. The
//! τ-preserving conditional expectation onto `A_n` is the orthogonal
//! projection onto the embedded image of `A_n` in the GNS inner product
//! `⟨x, y⟩ = τ(y* x)`; its orthonormal basis is built once per level and
//! cached.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{gns_inner, BlockShape, Element, TraceWeights, TRACE_NORMALIZATION_TOL};
use crate::error::{Error, Result};

/// Raw tower description as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerConfig {
    pub levels: Vec<Vec<usize>>,
    pub mults: Vec<Vec<Vec<i64>>>,
    pub top_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
}

/// Outcome of a single structural check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Offending index (level, or `(level, block)` flattened into text).
    pub location: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, location: Option<String>, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            location,
            detail,
        });
    }
}

/// Checks every structural invariant of a tower description.
pub fn validate_tower(cfg: &TowerConfig) -> ValidationReport {
    let mut r = ValidationReport::default();

    if cfg.levels.is_empty() {
        r.push("levels", false, None, "tower has no levels".into());
        return r;
    }
    let mut shapes_ok = true;
    for (n, dims) in cfg.levels.iter().enumerate() {
        if let Err(e) = BlockShape::new(dims.clone()) {
            shapes_ok = false;
            r.push("block shape", false, Some(format!("level {n}")), e.to_string());
        }
    }
    if shapes_ok {
        r.push("block shape", true, None, "all levels have positive block sizes".into());
    }

    let scalar_base = cfg.levels[0] == [1];
    r.push(
        "scalar base",
        scalar_base,
        (!scalar_base).then(|| "level 0".to_string()),
        if scalar_base {
            "A_0 = C·1".into()
        } else {
            format!("A_0 must be scalars, found shape {:?}", cfg.levels[0])
        },
    );

    let expected = cfg.levels.len() - 1;
    if cfg.mults.len() != expected {
        r.push(
            "multiplicity count",
            false,
            None,
            format!("{} multiplicity matrices for {} levels", cfg.mults.len(), cfg.levels.len()),
        );
        return r;
    }

    for (n, m) in cfg.mults.iter().enumerate() {
        let src = &cfg.levels[n];
        let dst = &cfg.levels[n + 1];
        let well_formed = m.len() == dst.len() && m.iter().all(|row| row.len() == src.len());
        if !well_formed {
            r.push(
                "multiplicity shape",
                false,
                Some(format!("level {n}")),
                format!("expected {}x{} matrix", dst.len(), src.len()),
            );
            continue;
        }
        let mut nonneg = true;
        for (j, row) in m.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v < 0 {
                    nonneg = false;
                    r.push(
                        "nonnegative multiplicities",
                        false,
                        Some(format!("level {n}, block {j}, source {i}")),
                        format!("multiplicity {v} < 0"),
                    );
                }
            }
        }
        if !nonneg {
            continue;
        }
        for (j, row) in m.iter().enumerate() {
            let stacked: i64 = row.iter().zip(src).map(|(&k, &d)| k * d as i64).sum();
            if stacked != dst[j] as i64 {
                r.push(
                    "unitality",
                    false,
                    Some(format!("level {}, block {j}", n + 1)),
                    format!("block size {} but embedded blocks fill {stacked}", dst[j]),
                );
            }
        }
        for i in 0..src.len() {
            if m.iter().all(|row| row[i] == 0) {
                r.push(
                    "reaches next level",
                    false,
                    Some(format!("level {n}, block {i}")),
                    "block has no image in the next level".into(),
                );
            }
        }
    }
    if !r.checks.iter().any(|c| {
        !c.passed
            && matches!(
                c.name.as_str(),
                "unitality" | "reaches next level" | "multiplicity shape" | "nonnegative multiplicities"
            )
    }) {
        r.push("unitality", true, None, "every embedding is unital".into());
    }

    let top = cfg.levels.last().unwrap();
    if cfg.top_trace.len() != top.len() {
        r.push(
            "top trace",
            false,
            None,
            format!("{} weights for {} top blocks", cfg.top_trace.len(), top.len()),
        );
    } else if let Some(i) = cfg.top_trace.iter().position(|&w| !(w > 0.0)) {
        r.push(
            "top trace",
            false,
            Some(format!("block {i}")),
            "trace weight must be strictly positive".into(),
        );
    } else {
        let total: f64 = cfg.top_trace.iter().zip(top).map(|(w, &d)| w * d as f64).sum();
        let ok = (total - 1.0).abs() <= TRACE_NORMALIZATION_TOL;
        r.push(
            "top trace",
            ok,
            None,
            format!("tau(1) = {total}"),
        );
    }

    if let Some(beta) = &cfg.beta {
        let ok = !beta.is_empty() && beta.iter().all(|b| *b > 0.0 && b.is_finite());
        r.push("beta", ok, None, format!("{} values, all positive: {ok}", beta.len()));
    }
    r
}

/// Orthonormal basis (in the τ inner product) of the image of `A_n` in the
/// top level, with each vector's coordinates over the matrix units of `A_n`.
#[derive(Debug)]
struct ProjectionBasis {
    vectors: Vec<Element>,
    /// `coords[k][u]` is the coefficient of matrix unit `u` in `vectors[k]`.
    coords: Vec<Vec<Complex64>>,
    units: Vec<(usize, usize, usize)>,
}

/// A validated truncated AF tower.
#[derive(Debug)]
pub struct BratteliTower {
    levels: Vec<BlockShape>,
    mults: Vec<Vec<Vec<usize>>>,
    traces: Vec<TraceWeights>,
    bases: Vec<OnceLock<ProjectionBasis>>,
}

impl PartialEq for BratteliTower {
    fn eq(&self, other: &Self) -> bool {
        self.levels == other.levels && self.mults == other.mults && self.traces == other.traces
    }
}

impl BratteliTower {
    pub fn from_config(cfg: &TowerConfig) -> Result<Self> {
        let report = validate_tower(cfg);
        if !report.passed() {
            return Err(Error::InvalidTower(
                report
                    .failures()
                    .map(|c| match &c.location {
                        Some(l) => format!("{} ({l}): {}", c.name, c.detail),
                        None => format!("{}: {}", c.name, c.detail),
                    })
                    .collect(),
            ));
        }
        let levels: Vec<BlockShape> = cfg
            .levels
            .iter()
            .map(|d| BlockShape::new(d.clone()))
            .collect::<Result<_>>()?;
        let mults: Vec<Vec<Vec<usize>>> = cfg
            .mults
            .iter()
            .map(|m| m.iter().map(|row| row.iter().map(|&v| v as usize).collect()).collect())
            .collect();
        let top = TraceWeights::new(levels.last().unwrap().clone(), cfg.top_trace.clone())?;
        let traces = induce(&levels, &mults, top)?;
        let bases = (0..levels.len()).map(|_| OnceLock::new()).collect();
        Ok(BratteliTower {
            levels,
            mults,
            traces,
            bases,
        })
    }

    pub fn new(levels: Vec<Vec<usize>>, mults: Vec<Vec<Vec<usize>>>, top_trace: Vec<f64>) -> Result<Self> {
        let cfg = TowerConfig {
            levels,
            mults: mults
                .into_iter()
                .map(|m| m.into_iter().map(|r| r.into_iter().map(|v| v as i64).collect()).collect())
                .collect(),
            top_trace,
            beta: None,
        };
        Self::from_config(&cfg)
    }

    pub fn to_config(&self) -> TowerConfig {
        TowerConfig {
            levels: self.levels.iter().map(|s| s.dims().to_vec()).collect(),
            mults: self
                .mults
                .iter()
                .map(|m| m.iter().map(|r| r.iter().map(|&v| v as i64).collect()).collect())
                .collect(),
            top_trace: self.traces.last().unwrap().weights().to_vec(),
            beta: None,
        }
    }

    /// Index `M` of the top level.
    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn shape(&self, n: usize) -> &BlockShape {
        &self.levels[n]
    }

    pub fn top_shape(&self) -> &BlockShape {
        self.levels.last().unwrap()
    }

    /// `mults(n)[j][i]`: copies of level-`n` block `i` in level-`n+1` block `j`.
    pub fn mults(&self, n: usize) -> &[Vec<usize>] {
        &self.mults[n]
    }

    /// Restriction of the top trace to level `n`.
    pub fn trace(&self, n: usize) -> &TraceWeights {
        &self.traces[n]
    }

    pub fn top_trace(&self) -> &TraceWeights {
        self.traces.last().unwrap()
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.top_level() {
            return Err(Error::LevelOutOfRange {
                level: n,
                top: self.top_level(),
            });
        }
        Ok(())
    }

    fn check_element(&self, n: usize, a: &Element) -> Result<()> {
        if a.shape() != &self.levels[n] {
            return Err(Error::ShapeMismatch {
                expected: self.levels[n].dims().to_vec(),
                found: a.shape().dims().to_vec(),
            });
        }
        Ok(())
    }

    /// Unital inclusion `A_n → A_{n+1}`.
    pub fn embed(&self, n: usize, a: &Element) -> Result<Element> {
        if n >= self.top_level() {
            return Err(Error::LevelOutOfRange {
                level: n + 1,
                top: self.top_level(),
            });
        }
        self.check_element(n, a)?;
        let dst = &self.levels[n + 1];
        let mut out = Element::zeros(dst);
        for (j, row) in self.mults[n].iter().enumerate() {
            let target = out.block_mut(j);
            let mut offset = 0;
            for (i, &copies) in row.iter().enumerate() {
                let src = a.block(i);
                let d = src.nrows();
                for _ in 0..copies {
                    target.view_mut((offset, offset), (d, d)).copy_from(src);
                    offset += d;
                }
            }
        }
        Ok(out)
    }

    /// Inclusion of `A_n` into `A_m` for `n ≤ m`.
    pub fn embed_to(&self, n: usize, m: usize, a: &Element) -> Result<Element> {
        self.check_level(m)?;
        if n > m {
            return Err(Error::LevelOutOfRange { level: n, top: m });
        }
        self.check_element(n, a)?;
        let mut cur = a.clone();
        for k in n..m {
            cur = self.embed(k, &cur)?;
        }
        Ok(cur)
    }

    pub fn embed_to_top(&self, n: usize, a: &Element) -> Result<Element> {
        self.embed_to(n, self.top_level(), a)
    }

    fn basis(&self, n: usize) -> &ProjectionBasis {
        self.bases[n].get_or_init(|| self.build_basis(n))
    }

    fn build_basis(&self, n: usize) -> ProjectionBasis {
        let shape = &self.levels[n];
        let tau = self.top_trace();
        let mut units = Vec::with_capacity(shape.algebra_dim());
        for (b, &d) in shape.dims().iter().enumerate() {
            for r in 0..d {
                for c in 0..d {
                    units.push((b, r, c));
                }
            }
        }
        let count = units.len();
        let mut vectors: Vec<Element> = Vec::with_capacity(count);
        let mut coords: Vec<Vec<Complex64>> = Vec::with_capacity(count);
        for (u, &(b, r, c)) in units.iter().enumerate() {
            let unit = Element::matrix_unit(shape, b, r, c);
            let mut v = self
                .embed_to_top(n, &unit)
                .expect("matrix unit has level shape");
            let mut coord = vec![Complex64::new(0.0, 0.0); count];
            coord[u] = Complex64::new(1.0, 0.0);
            // modified Gram-Schmidt, two passes
            for _ in 0..2 {
                for (q, qc) in vectors.iter().zip(&coords) {
                    let p = gns_inner(tau, &v, q).expect("top shape");
                    v = v.try_sub(&q.scale(p)).expect("top shape");
                    for (x, y) in coord.iter_mut().zip(qc) {
                        *x -= p * y;
                    }
                }
            }
            let norm = gns_inner(tau, &v, &v).expect("top shape").re.sqrt();
            let inv = 1.0 / norm;
            vectors.push(v.scale_real(inv));
            coords.push(coord.into_iter().map(|z| z * inv).collect());
        }
        ProjectionBasis {
            vectors,
            coords,
            units,
        }
    }

    /// The τ-preserving conditional expectation `E_n : A_M → A_n`.
    pub fn conditional_expectation(&self, n: usize, x: &Element) -> Result<Element> {
        self.check_level(n)?;
        self.check_element(self.top_level(), x)?;
        if n == self.top_level() {
            return Ok(x.clone());
        }
        let basis = self.basis(n);
        let tau = self.top_trace();
        let mut acc = vec![Complex64::new(0.0, 0.0); basis.units.len()];
        for (q, qc) in basis.vectors.iter().zip(&basis.coords) {
            let p = gns_inner(tau, x, q)?;
            for (a, c) in acc.iter_mut().zip(qc) {
                *a += p * c;
            }
        }
        let mut y = Element::zeros(&self.levels[n]);
        for (&(b, r, c), v) in basis.units.iter().zip(acc) {
            y.block_mut(b)[(r, c)] = v;
        }
        Ok(y)
    }

    /// `E_n(x)` viewed back inside the top level.
    pub fn expectation_in_top(&self, n: usize, x: &Element) -> Result<Element> {
        let y = self.conditional_expectation(n, x)?;
        self.embed_to_top(n, &y)
    }
}

fn induce(
    levels: &[BlockShape],
    mults: &[Vec<Vec<usize>>],
    top: TraceWeights,
) -> Result<Vec<TraceWeights>> {
    let mut out = vec![top];
    for n in (0..levels.len() - 1).rev() {
        let above = out.last().unwrap().weights();
        let w: Vec<f64> = (0..levels[n].num_blocks())
            .map(|i| {
                mults[n]
                    .iter()
                    .zip(above)
                    .map(|(row, &wj)| row[i] as f64 * wj)
                    .sum()
            })
            .collect();
        out.push(TraceWeights::new(levels[n].clone(), w)?);
    }
    out.reverse();
    Ok(out)
}

/// Weights of the trace restricted to each level, from level 0 up to the top.
pub fn induced_traces(t: &BratteliTower) -> Vec<TraceWeights> {
    t.traces.clone()
}

/// Ratio profile of a β sequence over its finite prefix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioProfile {
    /// `β(n)/β(n−1)` for `n ≥ 1`.
    pub ratios: Vec<f64>,
    pub all_below_one: bool,
    pub nonincreasing: bool,
}

/// Positive weights `β(0), β(1), …` of the L-seminorm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BetaSequence(Vec<f64>);

impl BetaSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidBeta("empty sequence".into()));
        }
        if let Some(i) = values.iter().position(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidBeta(format!("beta({i}) = {} is not positive", values[i])));
        }
        Ok(BetaSequence(values))
    }

    /// `β(n) = 1/n!` for `n < len`.
    pub fn factorial(len: usize) -> Self {
        let mut v = Vec::with_capacity(len);
        let mut f = 1.0;
        for n in 0..len {
            if n > 0 {
                f *= n as f64;
            }
            v.push(1.0 / f);
        }
        BetaSequence(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, n: usize) -> Result<f64> {
        self.0
            .get(n)
            .copied()
            .ok_or_else(|| Error::InvalidBeta(format!("beta({n}) not defined (length {})", self.0.len())))
    }

    pub fn ratio_profile(&self) -> RatioProfile {
        let ratios: Vec<f64> = self.0.windows(2).map(|w| w[1] / w[0]).collect();
        RatioProfile {
            all_below_one: ratios.iter().all(|&r| r < 1.0),
            nonincreasing: ratios.windows(2).all(|w| w[1] <= w[0]),
            ratios,
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[1] <= w[0])
    }
}

impl TryFrom<Vec<f64>> for BetaSequence {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        BetaSequence::new(v)
    }
}

impl From<BetaSequence> for Vec<f64> {
    fn from(b: BetaSequence) -> Self {
        b.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{op_norm, trace_state};
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn car_truncation_validates() {
        let cfg = fixtures::car_config(3);
        let r = validate_tower(&cfg);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn non_scalar_base_rejected() {
        let cfg = TowerConfig {
            levels: vec![vec![2], vec![4]],
            mults: vec![vec![vec![2]]],
            top_trace: vec![0.25],
            beta: None,
        };
        let r = validate_tower(&cfg);
        let bad: Vec<_> = r.failures().collect();
        assert_eq!(bad.len(), 1);
        assert!(bad[0].detail.contains("A_0 must be scalars"));
    }

    #[test]
    fn unitality_violation_reported() {
        let cfg = TowerConfig {
            levels: vec![vec![1], vec![3]],
            mults: vec![vec![vec![2]]],
            top_trace: vec![1.0 / 3.0],
            beta: None,
        };
        let r = validate_tower(&cfg);
        let bad: Vec<_> = r.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].name, "unitality");
        assert_eq!(bad[0].location.as_deref(), Some("level 1, block 0"));
        assert!(BratteliTower::from_config(&cfg).is_err());
    }

    #[test]
    fn zero_column_and_negative_entries_reported() {
        let cfg = TowerConfig {
            levels: vec![vec![1], vec![1, 1], vec![1]],
            mults: vec![vec![vec![1], vec![1]], vec![vec![1, 0]]],
            top_trace: vec![1.0],
            beta: None,
        };
        let r = validate_tower(&cfg);
        assert!(r.failures().any(|c| c.name == "reaches next level"));
        let cfg = TowerConfig {
            levels: vec![vec![1], vec![1]],
            mults: vec![vec![vec![-1]]],
            top_trace: vec![1.0],
            beta: None,
        };
        assert!(validate_tower(&cfg).failures().any(|c| c.name == "nonnegative multiplicities"));
    }

    #[test]
    fn embedding_examples() {
        let t = fixtures::car_tower(3);
        for n in 0..3 {
            let one = Element::identity(t.shape(n));
            assert_eq!(t.embed(n, &one).unwrap(), Element::identity(t.shape(n + 1)));
        }
        let a = Element::diagonal(t.shape(1), &[vec![1.0, -1.0]]).unwrap();
        let expect = Element::diagonal(t.shape(2), &[vec![1.0, -1.0, 1.0, -1.0]]).unwrap();
        assert_eq!(t.embed(1, &a).unwrap(), expect);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t2 = fixtures::t2_tower();
        let a = Element::random(t2.shape(1), &mut rng);
        let e = t2.embed(1, &a).unwrap();
        assert!((op_norm(&e) - op_norm(&a)).abs() < 1e-12);
        // block 0 of level 2 is diag(a_0, a_1), block 1 is a_1
        assert_eq!(e.block(0)[(0, 0)], a.block(0)[(0, 0)]);
        assert_eq!(e.block(0)[(1, 1)], a.block(1)[(0, 0)]);
        assert_eq!(e.block(1)[(0, 0)], a.block(1)[(0, 0)]);
        assert!(t2.embed(2, &e).is_err());
    }

    #[test]
    fn induced_trace_examples() {
        let t = fixtures::car_tower(3);
        let w: Vec<f64> = induced_traces(&t).iter().map(|tw| tw.weights()[0]).collect();
        assert_eq!(w, vec![1.0, 0.5, 0.25, 0.125]);

        let t2 = fixtures::t2_tower();
        let tr = induced_traces(&t2);
        assert!((tr[1].weights()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((tr[1].weights()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((tr[0].weights()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = fixtures::car_tower(2);
        let x = Element::random(t.top_shape(), &mut rng);
        let e0 = t.conditional_expectation(0, &x).unwrap();
        let tx = trace_state(t.top_trace(), &x).unwrap();
        assert!((e0.block(0)[(0, 0)] - tx).norm() < 1e-14);

        let d = Element::diagonal(t.top_shape(), &[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        let e1 = t.conditional_expectation(1, &d).unwrap();
        let expect = Element::diagonal(t.shape(1), &[vec![2.0, 3.0]]).unwrap();
        assert!(e1.approx_eq(&expect, 1e-14));

        let y = Element::random(t.shape(1), &mut rng);
        let x = t.embed_to_top(1, &y).unwrap();
        assert!(t.conditional_expectation(1, &x).unwrap().approx_eq(&y, 1e-13));
        assert!(t.conditional_expectation(3, &x).is_err());
    }

    #[test]
    fn expectation_matches_least_squares_oracle() {
        // oracle: average over the diagonal 2x2 sub-blocks for M_2 ⊂ M_4
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = fixtures::car_tower(2);
        let x = Element::random(t.top_shape(), &mut rng);
        let e1 = t.conditional_expectation(1, &x).unwrap();
        let xb = x.block(0);
        for r in 0..2 {
            for c in 0..2 {
                let avg = (xb[(r, c)] + xb[(r + 2, c + 2)]) * 0.5;
                assert!((e1.block(0)[(r, c)] - avg).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn beta_sequence() {
        let b = BetaSequence::factorial(5);
        assert_eq!(b.values(), &[1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0]);
        let p = b.ratio_profile();
        assert!(!p.all_below_one);
        assert!(p.nonincreasing);
        assert!(BetaSequence::new(vec![1.0, 0.0]).is_err());
        assert!(BetaSequence::new(vec![]).is_err());
        assert!(b.get(5).is_err());
    }
}
