//! Parametric problem modeling, canonicalization, and parameter sampling.
//!
//! A [`ParametricProblem`] is a symbolic LP/QP template whose scalar data
//! (cost entries, constraint coefficients, right-hand sides, bounds) may
//! depend affinely on a parameter vector `θ`. Instantiating the template at a
//! concrete `θ` yields a [`CanonicalInstance`] in the layout
//!
//! ```text
//! minimize    ½ xᵀP x + qᵀx + r
//! subject to  aᵢᵀx ≤ bᵢ   or   aᵢᵀx = bᵢ      (canonical rows)
//!             x_I integer
//! ```
//!
//! where every variable bound is materialized as an explicit row, and every
//! max-of-affine cost term is replaced by one auxiliary epigraph variable plus
//! one row per branch. The row ordering is stable: user constraints in
//! declaration order, then epigraph rows (term-major, branch-minor), then
//! bound rows (variable-major, lower before upper). Strategy labels compare
//! tight sets across instances, so this ordering must never change.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Eigenvalue floor used by the positive-semidefiniteness check on `P(θ)`.
pub const PSD_EIG_FLOOR: f64 = -1e-9;

/// Slack admitted when testing support membership of a sampled `θ`.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamDimMismatch { expected: usize, got: usize },
    #[error("model references variable {index} but only {count} are declared")]
    BadVariableRef { index: usize, count: usize },
    #[error("model references parameter {index} but the space has dimension {dim}")]
    BadParamRef { index: usize, dim: usize },
    #[error("problem must declare at least one variable")]
    NoVariables,
    #[error("integer variable '{0}' must have finite lower and upper bounds")]
    IntegerUnbounded(String),
    #[error("max term {0} has no branches")]
    EmptyMaxTerm(usize),
    #[error("P(θ) is not positive semidefinite: min eigenvalue {0:.3e}")]
    NotPsd(f64),
    #[error("empty parameter support: {0}")]
    EmptySupport(String),
    #[error("sample count must be at least 1")]
    ZeroCount,
}

/// Scalar that depends affinely on the parameter vector:
/// `value(θ) = offset + Σ scaleₖ · θ[idxₖ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coeff {
    pub offset: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<(usize, f64)>,
}

impl Coeff {
    pub fn constant(v: f64) -> Self {
        Coeff { offset: v, terms: Vec::new() }
    }

    pub fn param(index: usize) -> Self {
        Coeff { offset: 0.0, terms: vec![(index, 1.0)] }
    }

    pub fn scaled_param(index: usize, scale: f64) -> Self {
        Coeff { offset: 0.0, terms: vec![(index, scale)] }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let mut v = self.offset;
        for &(idx, scale) in &self.terms {
            v += scale * theta[idx];
        }
        v
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    fn max_param_index(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Canonical row sense after `Ge` rows have been negated into `Le` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: Option<Coeff>,
    pub upper: Option<Coeff>,
    #[serde(default)]
    pub integer: bool,
}

impl Variable {
    pub fn free(name: impl Into<String>) -> Self {
        Variable { name: name.into(), lower: None, upper: None, integer: false }
    }

    pub fn bounded(name: impl Into<String>, lower: Coeff, upper: Coeff) -> Self {
        Variable { name: name.into(), lower: Some(lower), upper: Some(upper), integer: false }
    }

    pub fn nonneg(name: impl Into<String>) -> Self {
        Variable {
            name: name.into(),
            lower: Some(Coeff::constant(0.0)),
            upper: None,
            integer: false,
        }
    }

    pub fn integer(mut self) -> Self {
        self.integer = true;
        self
    }
}

/// One affine constraint row `Σ coeffᵢ·x_varᵢ  (≤ | ≥ | =)  rhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(usize, Coeff)>,
    pub sense: Sense,
    pub rhs: Coeff,
}

/// Affine expression used as one branch of a max-of-affine cost term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineExpr {
    pub terms: Vec<(usize, Coeff)>,
    #[serde(default = "zero_coeff")]
    pub constant: Coeff,
}

fn zero_coeff() -> Coeff {
    Coeff::constant(0.0)
}

/// Cost term `max over branches` to be epigraph-reformulated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxTerm {
    pub branches: Vec<AffineExpr>,
}

/// Quadratic cost contribution `coeff · x_i · x_j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadTerm {
    pub i: usize,
    pub j: usize,
    pub coeff: Coeff,
}

/// Which part of the user model a canonical row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowOrigin {
    UserConstraint(usize),
    Epigraph { term: usize, branch: usize },
    LowerBound(usize),
    UpperBound(usize),
}

/// Which part of the user model a canonical column came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColOrigin {
    UserVar(usize),
    EpigraphAux(usize),
}

/// Symbolic parametric problem. Immutable after construction; safe to share
/// across threads for concurrent canonicalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametricProblem {
    pub name: String,
    pub param_dim: usize,
    pub param_names: Vec<String>,
    pub variables: Vec<Variable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quad_cost: Vec<QuadTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lin_cost: Vec<(usize, Coeff)>,
    #[serde(default = "zero_coeff")]
    pub const_cost: Coeff,
    pub constraints: Vec<Constraint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub max_terms: Vec<MaxTerm>,
    #[serde(skip)]
    psd_once: OnceLock<Result<(), f64>>,
}

impl ParametricProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        param_dim: usize,
        param_names: Vec<String>,
        variables: Vec<Variable>,
        quad_cost: Vec<QuadTerm>,
        lin_cost: Vec<(usize, Coeff)>,
        const_cost: Coeff,
        constraints: Vec<Constraint>,
        max_terms: Vec<MaxTerm>,
    ) -> Result<Self, ProblemError> {
        let p = ParametricProblem {
            name: name.into(),
            param_dim,
            param_names,
            variables,
            quad_cost,
            lin_cost,
            const_cost,
            constraints,
            max_terms,
            psd_once: OnceLock::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.variables.len();
        if n == 0 {
            return Err(ProblemError::NoVariables);
        }
        let check_var = |index: usize| {
            if index >= n {
                Err(ProblemError::BadVariableRef { index, count: n })
            } else {
                Ok(())
            }
        };
        let check_coeff = |c: &Coeff| match c.max_param_index() {
            Some(i) if i >= self.param_dim => {
                Err(ProblemError::BadParamRef { index: i, dim: self.param_dim })
            }
            _ => Ok(()),
        };
        for v in &self.variables {
            if let Some(c) = &v.lower {
                check_coeff(c)?;
            }
            if let Some(c) = &v.upper {
                check_coeff(c)?;
            }
            if v.integer && (v.lower.is_none() || v.upper.is_none()) {
                return Err(ProblemError::IntegerUnbounded(v.name.clone()));
            }
        }
        for t in &self.quad_cost {
            check_var(t.i)?;
            check_var(t.j)?;
            check_coeff(&t.coeff)?;
        }
        for (i, c) in &self.lin_cost {
            check_var(*i)?;
            check_coeff(c)?;
        }
        check_coeff(&self.const_cost)?;
        for con in &self.constraints {
            for (i, c) in &con.terms {
                check_var(*i)?;
                check_coeff(c)?;
            }
            check_coeff(&con.rhs)?;
        }
        for (k, mt) in self.max_terms.iter().enumerate() {
            if mt.branches.is_empty() {
                return Err(ProblemError::EmptyMaxTerm(k));
            }
            for br in &mt.branches {
                for (i, c) in &br.terms {
                    check_var(*i)?;
                    check_coeff(c)?;
                }
                check_coeff(&br.constant)?;
            }
        }
        Ok(())
    }

    pub fn num_user_vars(&self) -> usize {
        self.variables.len()
    }

    /// Whether instantiation produces a mixed-integer problem.
    pub fn has_integers(&self) -> bool {
        self.variables.iter().any(|v| v.integer)
    }

    fn quad_is_constant(&self) -> bool {
        self.quad_cost.iter().all(|t| t.coeff.is_constant())
    }

    /// Instantiate the template at `theta`. Deterministic: identical `theta`
    /// yields bit-identical instances.
    pub fn canonicalize(&self, theta: &[f64]) -> Result<CanonicalInstance, ProblemError> {
        if theta.len() != self.param_dim {
            return Err(ProblemError::ParamDimMismatch {
                expected: self.param_dim,
                got: theta.len(),
            });
        }
        let n_user = self.variables.len();
        let n_aux = self.max_terms.len();
        let n_var = n_user + n_aux;

        let mut p_mat = DMatrix::<f64>::zeros(n_var, n_var);
        for t in &self.quad_cost {
            let v = t.coeff.value(theta);
            if t.i == t.j {
                p_mat[(t.i, t.i)] += 2.0 * v;
            } else {
                p_mat[(t.i, t.j)] += v;
                p_mat[(t.j, t.i)] += v;
            }
        }
        let has_quad = p_mat.iter().any(|&v| v != 0.0);
        if has_quad {
            let check = || -> Result<(), f64> {
                let min_eig = p_mat.clone().symmetric_eigen().eigenvalues.min();
                if min_eig < PSD_EIG_FLOOR {
                    Err(min_eig)
                } else {
                    Ok(())
                }
            };
            let outcome = if self.quad_is_constant() {
                *self.psd_once.get_or_init(check)
            } else {
                check()
            };
            if let Err(min_eig) = outcome {
                return Err(ProblemError::NotPsd(min_eig));
            }
        }

        let mut q = DVector::<f64>::zeros(n_var);
        for (i, c) in &self.lin_cost {
            q[*i] += c.value(theta);
        }
        for t in 0..n_aux {
            q[n_user + t] = 1.0;
        }
        let obj_const = self.const_cost.value(theta);

        let mut rows: Vec<(Vec<(usize, f64)>, f64, RowSense, RowOrigin)> = Vec::new();
        for (k, con) in self.constraints.iter().enumerate() {
            let sign = if con.sense == Sense::Ge { -1.0 } else { 1.0 };
            let sense = if con.sense == Sense::Eq { RowSense::Eq } else { RowSense::Le };
            let coeffs: Vec<(usize, f64)> = con
                .terms
                .iter()
                .map(|(i, c)| (*i, sign * c.value(theta)))
                .collect();
            rows.push((coeffs, sign * con.rhs.value(theta), sense, RowOrigin::UserConstraint(k)));
        }
        for (t, mt) in self.max_terms.iter().enumerate() {
            for (j, br) in mt.branches.iter().enumerate() {
                let mut coeffs: Vec<(usize, f64)> =
                    br.terms.iter().map(|(i, c)| (*i, c.value(theta))).collect();
                coeffs.push((n_user + t, -1.0));
                rows.push((
                    coeffs,
                    -br.constant.value(theta),
                    RowSense::Le,
                    RowOrigin::Epigraph { term: t, branch: j },
                ));
            }
        }
        let mut lower_row = vec![None; n_var];
        let mut upper_row = vec![None; n_var];
        for (i, v) in self.variables.iter().enumerate() {
            if let Some(lo) = &v.lower {
                lower_row[i] = Some(rows.len());
                rows.push((
                    vec![(i, -1.0)],
                    -lo.value(theta),
                    RowSense::Le,
                    RowOrigin::LowerBound(i),
                ));
            }
            if let Some(hi) = &v.upper {
                upper_row[i] = Some(rows.len());
                rows.push((vec![(i, 1.0)], hi.value(theta), RowSense::Le, RowOrigin::UpperBound(i)));
            }
        }

        let n_con = rows.len();
        let mut a = DMatrix::<f64>::zeros(n_con, n_var);
        let mut b = DVector::<f64>::zeros(n_con);
        let mut senses = Vec::with_capacity(n_con);
        let mut row_origin = Vec::with_capacity(n_con);
        for (r, (coeffs, rhs, sense, origin)) in rows.into_iter().enumerate() {
            for (i, v) in coeffs {
                a[(r, i)] += v;
            }
            b[r] = rhs;
            senses.push(sense);
            row_origin.push(origin);
        }

        let mut col_origin: Vec<ColOrigin> = (0..n_user).map(ColOrigin::UserVar).collect();
        col_origin.extend((0..n_aux).map(ColOrigin::EpigraphAux));

        let integers: Vec<usize> = self
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.integer)
            .map(|(i, _)| i)
            .collect();

        Ok(CanonicalInstance {
            n_var,
            n_con,
            n_user,
            p_mat,
            q,
            obj_const,
            a,
            b,
            senses,
            integers,
            row_origin,
            col_origin,
            lower_row,
            upper_row,
        })
    }

    /// User-level objective value at a user-variable point (max terms
    /// evaluated exactly, no epigraph variables involved).
    pub fn objective_at(&self, theta: &[f64], x_user: &[f64]) -> f64 {
        let mut obj = self.const_cost.value(theta);
        for t in &self.quad_cost {
            obj += t.coeff.value(theta) * x_user[t.i] * x_user[t.j];
        }
        for (i, c) in &self.lin_cost {
            obj += c.value(theta) * x_user[*i];
        }
        for mt in &self.max_terms {
            let mut best = f64::NEG_INFINITY;
            for br in &mt.branches {
                let mut v = br.constant.value(theta);
                for (i, c) in &br.terms {
                    v += c.value(theta) * x_user[*i];
                }
                best = best.max(v);
            }
            obj += best;
        }
        obj
    }
}

/// Concrete canonical data for one parameter value. Immutable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalInstance {
    pub n_var: usize,
    pub n_con: usize,
    /// Leading columns are user variables; the rest are epigraph auxiliaries.
    pub n_user: usize,
    pub p_mat: DMatrix<f64>,
    pub q: DVector<f64>,
    pub obj_const: f64,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub senses: Vec<RowSense>,
    /// Sorted indices of integer variables (always user variables).
    pub integers: Vec<usize>,
    pub row_origin: Vec<RowOrigin>,
    pub col_origin: Vec<ColOrigin>,
    /// Canonical row holding each variable's lower/upper bound, if declared.
    pub lower_row: Vec<Option<usize>>,
    pub upper_row: Vec<Option<usize>>,
}

impl CanonicalInstance {
    pub fn is_quadratic(&self) -> bool {
        self.p_mat.iter().any(|&v| v != 0.0)
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let px = &self.p_mat * x;
        0.5 * x.dot(&px) + self.q.dot(x) + self.obj_const
    }

    /// Per-row residual `aᵢᵀx − bᵢ`.
    pub fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    /// Largest constraint violation: positive part for `≤` rows, absolute
    /// value for `=` rows.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let res = self.residuals(x);
        let mut worst = 0.0_f64;
        for i in 0..self.n_con {
            let v = match self.senses[i] {
                RowSense::Le => res[i],
                RowSense::Eq => res[i].abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    /// User-variable slice of a canonical point (epigraph auxiliaries dropped).
    pub fn decanonicalize<'a>(&self, x: &'a DVector<f64>) -> &'a [f64] {
        &x.as_slice()[..self.n_user]
    }
}

/// One block of the parameter support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Block {
    /// Scalar coordinate distributed uniformly on `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Coordinate block distributed uniformly on the Euclidean ball
    /// `‖θ_block − center‖₂ ≤ radius`.
    Ball { center: Vec<f64>, radius: f64 },
}

impl Block {
    fn dim(&self) -> usize {
        match self {
            Block::Interval { .. } => 1,
            Block::Ball { center, .. } => center.len(),
        }
    }
}

/// Product of independent interval and ball blocks; `dim` is the sum of
/// block dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub blocks: Vec<Block>,
}

impl ParameterSpace {
    pub fn new(blocks: Vec<Block>) -> Self {
        ParameterSpace { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        for b in &self.blocks {
            match b {
                Block::Interval { lo, hi } => {
                    if lo > hi || !lo.is_finite() || !hi.is_finite() {
                        return Err(ProblemError::EmptySupport(format!(
                            "interval [{lo}, {hi}]"
                        )));
                    }
                }
                Block::Ball { center, radius } => {
                    if *radius < 0.0 || !radius.is_finite() || center.is_empty() {
                        return Err(ProblemError::EmptySupport(format!(
                            "ball of radius {radius} in dimension {}",
                            center.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.dim() {
            return false;
        }
        let mut off = 0;
        for b in &self.blocks {
            match b {
                Block::Interval { lo, hi } => {
                    let v = theta[off];
                    if v < lo - SUPPORT_TOL || v > hi + SUPPORT_TOL {
                        return false;
                    }
                    off += 1;
                }
                Block::Ball { center, radius } => {
                    let d = center.len();
                    let norm2: f64 = (0..d)
                        .map(|k| (theta[off + k] - center[k]).powi(2))
                        .sum();
                    if norm2.sqrt() > radius + SUPPORT_TOL {
                        return false;
                    }
                    off += d;
                }
            }
        }
        true
    }

    /// Draw one sample, appending coordinates to `out`.
    pub fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        for b in &self.blocks {
            match b {
                Block::Interval { lo, hi } => {
                    let u: f64 = rng.random();
                    out.push(lo + u * (hi - lo));
                }
                Block::Ball { center, radius } => {
                    let d = center.len();
                    if *radius == 0.0 {
                        out.extend_from_slice(center);
                        continue;
                    }
                    // Uniform on the ball: normalized Gaussian direction
                    // scaled by radius · U^(1/d).
                    let mut dir = vec![0.0_f64; d];
                    loop {
                        let mut norm2 = 0.0;
                        for v in dir.iter_mut() {
                            *v = rng.sample(StandardNormal);
                            norm2 += *v * *v;
                        }
                        if norm2 > 1e-300 {
                            let u: f64 = rng.random();
                            let scale = radius * u.powf(1.0 / d as f64) / norm2.sqrt();
                            for (k, v) in dir.iter().enumerate() {
                                out.push(center[k] + scale * v);
                            }
                            break;
                        }
                    }
                }
            }
        }
    }
}

/// Draw `count` i.i.d. samples from the space under a fixed seed.
pub fn sample_parameters(
    space: &ParameterSpace,
    seed: u64,
    count: usize,
) -> Result<Vec<Vec<f64>>, ProblemError> {
    if count == 0 {
        return Err(ProblemError::ZeroCount);
    }
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = space.dim();
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let mut theta = Vec::with_capacity(dim);
        space.sample_into(&mut rng, &mut theta);
        samples.push(theta);
    }
    Ok(samples)
}
