//! Finite-dimensional multi-matrix C*-algebras.
//!
//! An algebra `M_{d_1} ⊕ … ⊕ M_{d_k}` is described by a [`BlockShape`]; its
//! members are [`Element`]s holding one complex square matrix per block.
//! Faithful tracial states are given by one positive weight per block
//! ([`TraceWeights`]), so that `τ(a) = Σ_i w_i · Tr(a_i)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for element equality (norm distance).
pub const ELEMENT_EQ_TOL: f64 = 1e-12;

/// Tolerance on `Σ w_i d_i = 1`.
pub const TRACE_NORMALIZATION_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Block sizes of a multi-matrix algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockShape(Vec<usize>);

impl BlockShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("no blocks".into()));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("block {i} has size 0")));
        }
        Ok(BlockShape(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn num_blocks(&self) -> usize {
        self.0.len()
    }

    /// Complex dimension of the algebra, `Σ d_i²`.
    pub fn algebra_dim(&self) -> usize {
        self.0.iter().map(|d| d * d).sum()
    }
}

impl TryFrom<Vec<usize>> for BlockShape {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        BlockShape::new(dims)
    }
}

impl From<BlockShape> for Vec<usize> {
    fn from(s: BlockShape) -> Self {
        s.0
    }
}

/// A block-diagonal complex matrix tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    shape: BlockShape,
    blocks: Vec<DMatrix<Complex64>>,
}

impl Element {
    pub fn from_blocks(shape: BlockShape, blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let found: Vec<usize> = blocks.iter().map(|b| b.nrows()).collect();
        let square = blocks.iter().all(|b| b.is_square());
        if !square || found != shape.dims() {
            return Err(Error::ShapeMismatch {
                expected: shape.dims().to_vec(),
                found,
            });
        }
        Ok(Element { shape, blocks })
    }

    pub fn zeros(shape: &BlockShape) -> Self {
        let blocks = shape.dims().iter().map(|&d| DMatrix::zeros(d, d)).collect();
        Element {
            shape: shape.clone(),
            blocks,
        }
    }

    pub fn identity(shape: &BlockShape) -> Self {
        let blocks = shape
            .dims()
            .iter()
            .map(|&d| DMatrix::identity(d, d))
            .collect();
        Element {
            shape: shape.clone(),
            blocks,
        }
    }

    /// Block-diagonal element whose blocks are diagonal with the given entries.
    pub fn diagonal(shape: &BlockShape, diag: &[Vec<f64>]) -> Result<Self> {
        let blocks = diag
            .iter()
            .map(|d| DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                d.len(),
                d.iter().map(|&x| Complex64::new(x, 0.0)),
            )))
            .collect();
        Element::from_blocks(shape.clone(), blocks)
    }

    /// The matrix unit `e_{row,col}` in block `block`.
    pub fn matrix_unit(shape: &BlockShape, block: usize, row: usize, col: usize) -> Self {
        let mut e = Element::zeros(shape);
        e.blocks[block][(row, col)] = ONE;
        e
    }

    /// Identity on the listed blocks, zero elsewhere.
    pub fn block_projection<'a>(shape: &BlockShape, blocks: impl IntoIterator<Item = &'a usize>) -> Self {
        let mut p = Element::zeros(shape);
        for &i in blocks {
            p.blocks[i].fill_with_identity();
        }
        p
    }

    /// Independent standard complex Gaussian entries.
    pub fn random<R: Rng + ?Sized>(shape: &BlockShape, rng: &mut R) -> Self {
        let blocks = shape
            .dims()
            .iter()
            .map(|&d| {
                DMatrix::from_fn(d, d, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im)
                })
            })
            .collect();
        Element {
            shape: shape.clone(),
            blocks,
        }
    }

    /// Gaussian entries on the listed blocks only.
    pub fn random_supported<R: Rng + ?Sized>(
        shape: &BlockShape,
        support: &std::collections::BTreeSet<usize>,
        rng: &mut R,
    ) -> Self {
        let mut a = Element::random(shape, rng);
        for (i, b) in a.blocks.iter_mut().enumerate() {
            if !support.contains(&i) {
                b.fill(ZERO);
            }
        }
        a
    }

    /// Random self-adjoint element, `(g + g*)/2` for Gaussian `g`.
    pub fn random_self_adjoint<R: Rng + ?Sized>(shape: &BlockShape, rng: &mut R) -> Self {
        re_im_parts(&Element::random(shape, rng)).0
    }

    pub fn shape(&self) -> &BlockShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[DMatrix<Complex64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &DMatrix<Complex64> {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut DMatrix<Complex64> {
        &mut self.blocks[i]
    }

    fn check_shape(&self, other: &Element) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.dims().to_vec(),
                found: other.shape.dims().to_vec(),
            });
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &Element,
        f: impl Fn(&DMatrix<Complex64>, &DMatrix<Complex64>) -> DMatrix<Complex64>,
    ) -> Result<Element> {
        self.check_shape(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(Element {
            shape: self.shape.clone(),
            blocks,
        })
    }

    fn map(&self, f: impl Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>) -> Element {
        Element {
            shape: self.shape.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn try_add(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn try_mul(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Element {
        self.map(|a| a * c)
    }

    pub fn scale_real(&self, c: f64) -> Element {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Conjugate transpose, block by block.
    pub fn adjoint(&self) -> Element {
        self.map(|a| a.adjoint())
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        op_norm(self) <= tol
    }

    /// Norm-distance equality; never bitwise.
    pub fn approx_eq(&self, other: &Element, tol: f64) -> bool {
        match self.try_sub(other) {
            Ok(d) => op_norm(&d) <= tol,
            Err(_) => false,
        }
    }

    /// Largest entry modulus of `a - a*`.
    pub fn hermitian_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all blocks of a self-adjoint element.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let h = (b + b.adjoint()) * Complex64::new(0.5, 0.0);
                h.symmetric_eigenvalues().min()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Binary and unary operations of the algebra, for table-driven callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Scale(Complex64),
    Adjoint,
}

/// Applies `op`; unary operations ignore `b`.
pub fn arithmetic(a: &Element, b: &Element, op: ArithOp) -> Result<Element> {
    match op {
        ArithOp::Add => a.try_add(b),
        ArithOp::Sub => a.try_sub(b),
        ArithOp::Mul => a.try_mul(b),
        ArithOp::Scale(c) => Ok(a.scale(c)),
        ArithOp::Adjoint => Ok(a.adjoint()),
    }
}

/// Largest singular value of a single matrix.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    m.singular_values().max()
}

/// C*-norm: max over blocks of the largest singular value.
pub fn op_norm(a: &Element) -> f64 {
    a.blocks.iter().map(spectral_norm).fold(0.0, f64::max)
}

/// A faithful tracial state on a multi-matrix algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceWeights {
    shape: BlockShape,
    weights: Vec<f64>,
}

impl TraceWeights {
    pub fn new(shape: BlockShape, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != shape.num_blocks() {
            return Err(Error::InvalidTrace(format!(
                "{} weights for {} blocks",
                weights.len(),
                shape.num_blocks()
            )));
        }
        if let Some(i) = weights.iter().position(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidTrace(format!(
                "weight {i} = {} is not strictly positive",
                weights[i]
            )));
        }
        let total: f64 = weights
            .iter()
            .zip(shape.dims())
            .map(|(w, &d)| w * d as f64)
            .sum();
        if (total - 1.0).abs() > TRACE_NORMALIZATION_TOL {
            return Err(Error::InvalidTrace(format!(
                "tau(1) = {total}, expected 1"
            )));
        }
        Ok(TraceWeights { shape, weights })
    }

    /// The normalized trace `Tr / Σ d_i` weighted by block size (uniform weights).
    pub fn uniform(shape: BlockShape) -> Self {
        let total: usize = shape.dims().iter().sum();
        let weights = vec![1.0 / total as f64; shape.num_blocks()];
        TraceWeights { shape, weights }
    }

    pub fn shape(&self) -> &BlockShape {
        &self.shape
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `τ(a) = Σ_i w_i Tr(a_i)`.
pub fn trace_state(tau: &TraceWeights, a: &Element) -> Result<Complex64> {
    if tau.shape != a.shape {
        return Err(Error::ShapeMismatch {
            expected: tau.shape.dims().to_vec(),
            found: a.shape.dims().to_vec(),
        });
    }
    Ok(a
        .blocks
        .iter()
        .zip(&tau.weights)
        .map(|(b, &w)| b.trace() * w)
        .sum())
}

/// GNS inner product `⟨a, b⟩ = τ(b* a)`, linear in `a`.
pub fn gns_inner(tau: &TraceWeights, a: &Element, b: &Element) -> Result<Complex64> {
    a.check_shape(b)?;
    if tau.shape != a.shape {
        return Err(Error::ShapeMismatch {
            expected: tau.shape.dims().to_vec(),
            found: a.shape.dims().to_vec(),
        });
    }
    // Tr(b* a) = Σ_{kl} conj(b_kl) a_kl
    Ok(a
        .blocks
        .iter()
        .zip(&b.blocks)
        .zip(&tau.weights)
        .map(|((x, y), &w)| {
            let s: Complex64 = x.iter().zip(y.iter()).map(|(p, q)| q.conj() * p).sum();
            s * w
        })
        .sum())
}

/// `(ℜa, ℑa)` with `ℜa = (a + a*)/2`, `ℑa = (a − a*)/(2i)`.
///
/// Entries are assembled so that both outputs are bitwise Hermitian.
pub fn re_im_parts(a: &Element) -> (Element, Element) {
    let mut re = Element::zeros(&a.shape);
    let mut im = Element::zeros(&a.shape);
    for (k, b) in a.blocks.iter().enumerate() {
        let d = b.nrows();
        for i in 0..d {
            for j in 0..d {
                let s = b[(i, j)] + b[(j, i)].conj();
                let t = b[(i, j)] - b[(j, i)].conj();
                re.blocks[k][(i, j)] = Complex64::new(s.re / 2.0, s.im / 2.0);
                // t / (2i) = (t.im / 2, -t.re / 2)
                im.blocks[k][(i, j)] = Complex64::new(t.im / 2.0, -t.re / 2.0);
            }
        }
    }
    (re, im)
}

/// Jordan product `(ab + ba)/2` and Lie product `(ab − ba)/(2i)`.
pub fn jordan_lie(a: &Element, b: &Element) -> Result<(Element, Element)> {
    let ab = a.try_mul(b)?;
    let ba = b.try_mul(a)?;
    let jordan = ab.try_add(&ba)?.scale_real(0.5);
    let lie = ab.try_sub(&ba)?.scale(Complex64::new(0.0, -0.5));
    Ok((jordan, lie))
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    dims: Vec<usize>,
    blocks: Vec<Vec<[f64; 2]>>,
}

impl Serialize for Element {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let d = b.nrows();
                let mut v = Vec::with_capacity(d * d);
                for i in 0..d {
                    for j in 0..d {
                        let z = b[(i, j)];
                        v.push([z.re, z.im]);
                    }
                }
                v
            })
            .collect();
        ElementRepr {
            dims: self.shape.dims().to_vec(),
            blocks,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ElementRepr::deserialize(d)?;
        let shape = BlockShape::new(repr.dims).map_err(D::Error::custom)?;
        if repr.blocks.len() != shape.num_blocks() {
            return Err(D::Error::custom(format!(
                "{} blocks for {} dims",
                repr.blocks.len(),
                shape.num_blocks()
            )));
        }
        let mut blocks = Vec::with_capacity(shape.num_blocks());
        for (k, (entries, &dim)) in repr.blocks.iter().zip(shape.dims()).enumerate() {
            if entries.len() != dim * dim {
                return Err(D::Error::custom(format!(
                    "block {k}: {} entries, expected {}",
                    entries.len(),
                    dim * dim
                )));
            }
            blocks.push(DMatrix::from_row_iterator(
                dim,
                dim,
                entries.iter().map(|&[re, im]| Complex64::new(re, im)),
            ));
        }
        Ok(Element { shape, blocks })
    }
}
