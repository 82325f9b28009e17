//! Seeded generators for the built-in problem families.
//!
//! Each family builds a `ParametricProblem` whose fixed data is drawn once
//! from the family's distribution under the spec seed, together with the
//! parameter space the samples come from. Generators are pure: the same spec
//! always yields identical data.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::{evaluate, EvaluationConfig, EvaluationReport, ReportContext};
use crate::explorer::{explore, ExplorationConfig, ExplorationResult};
use crate::learners::{
    render_tree, train_nn, train_oct, Dataset, NnGrid, OctGrid, SplitMode, TrainedPredictor,
};
use crate::problem::{
    AffineExpr, Block, Coeff, Constraint, MaxTerm, ParameterSpace, ParametricProblem, QuadTerm,
    Sense, Variable,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid size for {family}: {msg}")]
    InvalidSize { family: String, msg: String },
    #[error("could not draw feasible fixed data after {0} attempts")]
    FeasibilityRejection(usize),
    #[error("model construction failed: {0}")]
    Problem(#[from] crate::problem::ProblemError),
    #[error("exploration failed: {0}")]
    Explore(#[from] crate::explorer::ExploreError),
    #[error("training failed: {0}")]
    Learn(#[from] crate::learners::LearnError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] crate::evaluate::EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Inventory,
    Knapsack,
    /// Arbitrary-size extension of the knapsack family (random costs).
    KnapsackGen,
    Supplier,
    Transportation,
    Portfolio,
    Facility,
    Hybrid,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "inventory" => Some(Family::Inventory),
            "knapsack" => Some(Family::Knapsack),
            "knapsack-gen" => Some(Family::KnapsackGen),
            "supplier" => Some(Family::Supplier),
            "transportation" => Some(Family::Transportation),
            "portfolio" => Some(Family::Portfolio),
            "facility" => Some(Family::Facility),
            "hybrid" => Some(Family::Hybrid),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Inventory => "inventory",
            Family::Knapsack => "knapsack",
            Family::KnapsackGen => "knapsack-gen",
            Family::Supplier => "supplier",
            Family::Transportation => "transportation",
            Family::Portfolio => "portfolio",
            Family::Facility => "facility",
            Family::Hybrid => "hybrid",
        }
    }
}

/// Family plus size parameters. Interpretation of `n`/`m`/`horizon` is
/// family-specific; unset fields take the family's desk-scale default.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub family: Family,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub horizon: Option<usize>,
    pub seed: u64,
}

impl BenchmarkSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        BenchmarkSpec { family, n: None, m: None, horizon: None, seed }
    }

    pub fn label(&self) -> String {
        match self.family {
            Family::Inventory => format!("inventory-T{}", self.horizon.unwrap_or(30)),
            Family::Knapsack => "knapsack".into(),
            Family::KnapsackGen => format!("knapsack-gen-{}", self.n.unwrap_or(10)),
            Family::Supplier => "supplier".into(),
            Family::Transportation => {
                format!("transport-{}x{}", self.n.unwrap_or(5), self.m.unwrap_or(5))
            }
            Family::Portfolio => {
                format!("portfolio-{}x{}", self.n.unwrap_or(50), self.m.unwrap_or(10))
            }
            Family::Facility => {
                format!("facility-{}x{}", self.n.unwrap_or(10), self.m.unwrap_or(10))
            }
            Family::Hybrid => format!("hybrid-T{}", self.horizon.unwrap_or(10)),
        }
    }
}

/// Desired power profile for the hybrid-control family (first `T` entries
/// are used for horizon `T`, up to 40).
pub const HYBRID_POWER_PROFILE: [f64; 40] = [
    0.05, 0.30, 0.55, 0.80, 1.05, 1.30, 1.55, 1.80, 1.95, 1.70, 1.45, 1.20, 1.02, 1.12, 1.22,
    1.32, 1.42, 1.52, 1.62, 1.72, 1.73, 1.38, 1.03, 0.68, 0.33, -0.02, -0.37, -0.72, -0.94,
    -0.64, -0.34, -0.04, 0.18, 0.08, -0.02, -0.12, -0.22, -0.32, -0.42, -0.52,
];

/// Item values of the fixed-size knapsack family.
pub const KNAPSACK_COSTS: [f64; 10] = [0.42, 0.72, 0.0, 0.3, 0.15, 0.09, 0.19, 0.35, 0.4, 0.54];

/// Build the parametric problem and its sampling space for a spec.
pub fn generate(spec: &BenchmarkSpec) -> Result<(ParametricProblem, ParameterSpace), BenchError> {
    match spec.family {
        Family::Inventory => inventory(spec.horizon.unwrap_or(30)),
        Family::Knapsack => {
            if let Some(n) = spec.n {
                if n != 10 {
                    return Err(BenchError::InvalidSize {
                        family: "knapsack".into(),
                        msg: format!("fixed family has n=10 (got {n}); use knapsack-gen for other sizes"),
                    });
                }
            }
            knapsack()
        }
        Family::KnapsackGen => knapsack_gen(spec.n.unwrap_or(10), spec.seed),
        Family::Supplier => supplier(),
        Family::Transportation => {
            transportation(spec.n.unwrap_or(5), spec.m.unwrap_or(5), spec.seed)
        }
        Family::Portfolio => portfolio(spec.n.unwrap_or(50), spec.m.unwrap_or(10), spec.seed),
        Family::Facility => facility(spec.n.unwrap_or(10), spec.m.unwrap_or(10), spec.seed),
        Family::Hybrid => hybrid(spec.horizon.unwrap_or(10)),
    }
}

fn c(v: f64) -> Coeff {
    Coeff::constant(v)
}

/// Multi-period ordering: choose order quantities `u_t` to cover demand while
/// balancing holding and shortage costs on the inventory level `x_t`.
/// Parameters: demands `d_t ∈ [1,3]` and the initial level `x_init ∈ [7,13]`.
fn inventory(t_horizon: usize) -> Result<(ParametricProblem, ParameterSpace), BenchError> {
    if t_horizon == 0 {
        return Err(BenchError::InvalidSize {
            family: "inventory".into(),
            msg: "horizon must be at least 1".into(),
        });
    }
    let t_h = t_horizon;
    let (order_cost, holding, shortage, max_order) = (2.0, 1.0, 3.0, 3.0);
    // Variables: u_0..u_{T-1}, then x_0..x_T.
    let mut variables = Vec::new();
    for t in 0..t_h {
        variables.push(Variable::bounded(format!("u{t}"), c(0.0), c(max_order)));
    }
    for t in 0..=t_h {
        variables.push(Variable::free(format!("x{t}")));
    }
    let x = |t: usize| t_h + t;

    let mut constraints = Vec::new();
    // x_0 = x_init (parameter index T).
    constraints.push(Constraint {
        terms: vec![(x(0), c(1.0))],
        sense: Sense::Eq,
        rhs: Coeff::param(t_h),
    });
    // x_{t+1} - x_t - u_t = -d_t.
    for t in 0..t_h {
        constraints.push(Constraint {
            terms: vec![(x(t + 1), c(1.0)), (x(t), c(-1.0)), (t, c(-1.0))],
            sense: Sense::Eq,
            rhs: Coeff::scaled_param(t, -1.0),
        });
    }
    let mut max_terms = Vec::new();
    for t in 0..t_h {
        max_terms.push(MaxTerm {
            branches: vec![
                AffineExpr { terms: vec![(x(t), c(holding))], constant: c(0.0) },
                AffineExpr { terms: vec![(x(t), c(-shortage))], constant: c(0.0) },
            ],
        });
    }
    let lin_cost: Vec<(usize, Coeff)> = (0..t_h).map(|t| (t, c(order_cost))).collect();

    let mut param_names: Vec<String> = (0..t_h).map(|t| format!("d{t}")).collect();
    param_names.push("x_init".into());
    let problem = ParametricProblem::new(
        format!("inventory-T{t_h}"),
        t_h + 1,
        param_names,
        variables,
        vec![],
        lin_cost,
        c(0.0),
        constraints,
        max_terms,
    )?;
    let mut blocks: Vec<Block> = (0..t_h).map(|_| Block::Interval { lo: 1.0, hi: 3.0 }).collect();
    blocks.push(Block::Interval { lo: 7.0, hi: 13.0 });
    Ok((problem, ParameterSpace::new(blocks)))
}

/// Integer knapsack with parametric weights `a ∈ B((2,…,2), 1)` and order
/// caps `u ∈ B((2,…,2), 1)`; fixed item values, capacity 5.
fn knapsack() -> Result<(ParametricProblem, ParameterSpace), BenchError> {
    let n = 10;
    let variables: Vec<Variable> = (0..n)
        .map(|i| Variable::bounded(format!("x{i}"), c(0.0), Coeff::param(n + i)).integer())
        .collect();
    let capacity_row = Constraint {
        terms: (0..n).map(|i| (i, Coeff::param(i))).collect(),
        sense: Sense::Le,
        rhs: c(5.0),
    };
    let lin_cost: Vec<(usize, Coeff)> =
        (0..n).map(|i| (i, c(-KNAPSACK_COSTS[i]))).collect();
    let mut param_names: Vec<String> = (0..n).map(|i| format!("a{}", i + 1)).collect();
    param_names.extend((0..n).map(|i| format!("u{}", i + 1)));
    let problem = ParametricProblem::new(
        "knapsack",
        2 * n,
        param_names,
        variables,
        vec![],
        lin_cost,
        c(0.0),
        vec![capacity_row],
        vec![],
    )?;
    let space = ParameterSpace::new(vec![
        Block::Ball { center: vec![2.0; n], radius: 1.0 },
        Block::Ball { center: vec![2.0; n], radius: 1.0 },
    ]);
    Ok((problem, space))
}

/// Size-generalized knapsack variant (extension): random item values from
/// `U(0,1)` under the spec seed, capacity `n/2`.
fn knapsack_gen(n: usize, seed: u64) -> Result<(ParametricProblem, ParameterSpace), BenchError> {
    if n == 0 {
        return Err(BenchError::InvalidSize {
            family: "knapsack-gen".into(),
            msg: "n must be at least 1".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let variables: Vec<Variable> = (0..n)
        .map(|i| Variable::bounded(format!("x{i}"), c(0.0), Coeff::param(n + i)).integer())
        .collect();
    let capacity_row = Constraint {
        terms: (0..n).map(|i| (i, Coeff::param(i))).collect(),
        sense: Sense::Le,
        rhs: c(n as f64 / 2.0),
    };
    let lin_cost: Vec<(usize, Coeff)> = (0..n).map(|i| (i, c(-costs[i]))).collect();
    let mut param_names: Vec<String> = (0..n).map(|i| format!("a{}", i + 1)).collect();
    param_names.extend((0..n).map(|i| format!("u{}", i + 1)));
    let problem = ParametricProblem::new(
        format!("knapsack-gen-{n}"),
        2 * n,
        param_names,
        variables,
        vec![],
        lin_cost,
        c(0.0),
        vec![capacity_row],
        vec![],
    )?;
    let space = ParameterSpace::new(vec![
        Block::Ball { center: vec![2.0; n], radius: 1.0 },
        Block::Ball { center: vec![2.0; n], radius: 1.0 },
    ]);
    Ok((problem, space))
}

/// Binary supplier selection with shipment amounts: cover demand `d ∈ [1,3]`
/// at per-unit costs, paying a delay penalty through the slowest chosen
/// supplier (`τ ∈ B((2,3,2.5,5,1), 0.5)`).
fn supplier() -> Result<(ParametricProblem, ParameterSpace), BenchError> {
    let n = 5;
    let unit_cost = [0.42, 0.72, 0.0, 0.3, 0.15];
    let max_qty = [1.09, 1.19, 1.35, 1.4, 1.54];
    let gamma = 0.1;
    // Variables: x_1..x_5 binary, then u_1..u_5.
    let mut variables: Vec<Variable> = (0..n)
        .map(|i| Variable::bounded(format!("x{}", i + 1), c(0.0), c(1.0)).integer())
        .collect();
    for i in 0..n {
        variables.push(Variable::nonneg(format!("u{}", i + 1)));
    }
    let u = |i: usize| n + i;

    let mut constraints = Vec::new();
    // Σ u_i ≥ d.
    constraints.push(Constraint {
        terms: (0..n).map(|i| (u(i), c(1.0))).collect(),
        sense: Sense::Ge,
        rhs: Coeff::param(0),
    });
    // u_i ≤ m_i x_i.
    for i in 0..n {
        constraints.push(Constraint {
            terms: vec![(u(i), c(1.0)), (i, c(-max_qty[i]))],
            sense: Sense::Le,
            rhs: c(0.0),
        });
    }
    // Delay term: γ·max_i(τ_i x_i) with τ_i = θ_{1+i}.
    let max_terms = vec![MaxTerm {
        branches: (0..n)
            .map(|i| AffineExpr {
                terms: vec![(i, Coeff::scaled_param(1 + i, gamma))],
                constant: c(0.0),
            })
            .collect(),
    }];
    let lin_cost: Vec<(usize, Coeff)> = (0..n).map(|i| (u(i), c(unit_cost[i]))).collect();

    let mut param_names = vec!["d".to_string()];
    param_names.extend((0..n).map(|i| format!("tau{}", i + 1)));
    let problem = ParametricProblem::new(
        "supplier",
        1 + n,
        param_names,
        variables,
        vec![],
        lin_cost,
        c(0.0),
        constraints,
        max_terms,
    )?;
    let space = ParameterSpace::new(vec![
        Block::Interval { lo: 1.0, hi: 3.0 },
        Block::Ball { center: vec![2.0, 3.0, 2.5, 5.0, 1.0], radius: 0.5 },
    ]);
    Ok((problem, space))
}

/// Ship goods from `n` warehouses to `m` stores at fixed unit costs; supplies
/// are fixed draws, demands are the parameters (`d ∈ B(d̄, 0.75)`).
fn transportation(
    n: usize,
    m: usize,
    seed: u64,
) -> Result<(ParametricProblem, ParameterSpace), BenchError> {
    if n == 0 || m == 0 {
        return Err(BenchError::InvalidSize {
            family: "transportation".into(),
            msg: "need n ≥ 1 and m ≥ 1".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs: Vec<f64> = (0..n * m).map(|_| rng.random::<f64>() * 5.0).collect();
    let supplies: Vec<f64> = (0..n).map(|_| 3.0 + rng.random::<f64>() * 10.0).collect();
    let radius = 0.75;
    // Redraw the demand center until total supply covers worst-case demand;
    // the stated distributions make rejection vanishingly rare at desk sizes.
    let supply_total: f64 = supplies.iter().sum();
    let mut centers = Vec::new();
    let mut ok = false;
    for _ in 0..1000 {
        centers = (0..m)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                3.0 + z
            })
            .collect();
        let worst: f64 =
            centers.iter().map(|v: &f64| v.max(0.0)).sum::<f64>() + radius * (m as f64).sqrt();
        if supply_total >= worst + 0.5 {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(BenchError::FeasibilityRejection(1000));
    }

    let variables: Vec<Variable> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| Variable::nonneg(format!("x{i}_{j}")))
        .collect();
    let xv = |i: usize, j: usize| i * m + j;
    let mut constraints = Vec::new();
    for i in 0..n {
        constraints.push(Constraint {
            terms: (0..m).map(|j| (xv(i, j), c(1.0))).collect(),
            sense: Sense::Le,
            rhs: c(supplies[i]),
        });
    }
    for j in 0..m {
        constraints.push(Constraint {
            terms: (0..n).map(|i| (xv(i, j), c(1.0))).collect(),
            sense: Sense::Ge,
            rhs: Coeff::param(j),
        });
    }
    let lin_cost: Vec<(usize, Coeff)> =
        (0..n * m).map(|k| (k, c(costs[k]))).collect();
    let param_names: Vec<String> = (0..m).map(|j| format!("d{j}")).collect();
    let problem = ParametricProblem::new(
        format!("transport-{n}x{m}"),
        m,
        param_names,
        variables,
        vec![],
        lin_cost,
        c(0.0),
        constraints,
        vec![],
    )?;
    let space = ParameterSpace::new(vec![Block::Ball { center: centers, radius }]);
    Ok((problem, space))
}

/// Risk-adjusted asset allocation on the simplex: maximize `μᵀx − γ xᵀΣx`
/// with a factor-model covariance; expected returns `μ ∈ B(μ̄, 0.15)` are the
/// parameters.
fn portfolio(
    n: usize,
    factors: usize,
    seed: u64,
) -> Result<(ParametricProblem, ParameterSpace), BenchError> {
    if n == 0 || factors == 0 {
        return Err(BenchError::InvalidSize {
            family: "portfolio".into(),
            msg: "need n ≥ 1 assets and ≥ 1 factors".into(),
        });
    }
    let gamma = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Factor loading matrix: 50% dense, N(0,1) entries.
    let mut f = vec![0.0; n * factors];
    for v in f.iter_mut() {
        if rng.random::<f64>() < 0.5 {
            *v = rng.sample(StandardNormal);
        }
    }
    let d_diag: Vec<f64> =
        (0..n).map(|_| rng.random::<f64>() * (factors as f64).sqrt()).collect();
    let mu_bar: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

    // Σ = FFᵀ + D; objective carries γ·xᵀΣx.
    let mut quad_cost = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut sigma = 0.0;
            for k in 0..factors {
                sigma += f[i * factors + k] * f[j * factors + k];
            }
            if i == j {
                sigma += d_diag[i];
                quad_cost.push(QuadTerm { i, j, coeff: c(gamma * sigma) });
            } else if sigma != 0.0 {
                quad_cost.push(QuadTerm { i, j, coeff: c(2.0 * gamma * sigma) });
            }
        }
    }
    let variables: Vec<Variable> = (0..n).map(|i| Variable::nonneg(format!("x{i}"))).collect();
    let budget = Constraint {
        terms: (0..n).map(|i| (i, c(1.0))).collect(),
        sense: Sense::Eq,
        rhs: c(1.0),
    };
    let lin_cost: Vec<(usize, Coeff)> =
        (0..n).map(|i| (i, Coeff::scaled_param(i, -1.0))).collect();
    let param_names: Vec<String> = (0..n).map(|i| format!("mu{i}")).collect();
    let problem = ParametricProblem::new(
        format!("portfolio-{n}x{factors}"),
        n,
        param_names,
        variables,
        quad_cost,
        lin_cost,
        c(0.0),
        vec![budget],
        vec![],
    )?;
    let space = ParameterSpace::new(vec![Block::Ball { center: mu_bar, radius: 0.15 }]);
    Ok((problem, space))
}

/// Facility location: open facilities (binary) and route goods to meet
/// demands `d ∈ B(d̄, 0.25)`; capacities from `U(8,18)` keep every demand
/// draw coverable.
fn facility(
    n: usize,
    m: usize,
    seed: u64,
) -> Result<(ParametricProblem, ParameterSpace), BenchError> {
    if n == 0 || m == 0 {
        return Err(BenchError::InvalidSize {
            family: "facility".into(),
            msg: "need n ≥ 1 facilities and m ≥ 1 locations".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transport: Vec<f64> = (0..n * m).map(|_| rng.random::<f64>()).collect();
    let build: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
    let capacity: Vec<f64> = (0..n).map(|_| 8.0 + rng.random::<f64>() * 10.0).collect();
    let radius = 0.25;
    let capacity_total: f64 = capacity.iter().sum();
    let mut centers = Vec::new();
    let mut ok = false;
    for _ in 0..1000 {
        centers = (0..m)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                3.0 + z
            })
            .collect();
        let worst: f64 =
            centers.iter().map(|v: &f64| v.max(0.0)).sum::<f64>() + radius * (m as f64).sqrt();
        if capacity_total >= worst + 0.5 {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(BenchError::FeasibilityRejection(1000));
    }

    // Variables: x_ij shipments, then y_i binary open flags.
    let mut variables: Vec<Variable> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| Variable::nonneg(format!("x{i}_{j}")))
        .collect();
    for i in 0..n {
        variables.push(Variable::bounded(format!("y{i}"), c(0.0), c(1.0)).integer());
    }
    let xv = |i: usize, j: usize| i * m + j;
    let yv = |i: usize| n * m + i;

    let mut constraints = Vec::new();
    for j in 0..m {
        constraints.push(Constraint {
            terms: (0..n).map(|i| (xv(i, j), c(1.0))).collect(),
            sense: Sense::Ge,
            rhs: Coeff::param(j),
        });
    }
    for i in 0..n {
        let mut terms: Vec<(usize, Coeff)> = (0..m).map(|j| (xv(i, j), c(1.0))).collect();
        terms.push((yv(i), c(-capacity[i])));
        constraints.push(Constraint { terms, sense: Sense::Le, rhs: c(0.0) });
    }
    let mut lin_cost: Vec<(usize, Coeff)> =
        (0..n * m).map(|k| (k, c(transport[k]))).collect();
    for i in 0..n {
        lin_cost.push((yv(i), c(build[i])));
    }
    let param_names: Vec<String> = (0..m).map(|j| format!("d{j}")).collect();
    let problem = ParametricProblem::new(
        format!("facility-{n}x{m}"),
        m,
        param_names,
        variables,
        vec![],
        lin_cost,
        c(0.0),
        constraints,
        vec![],
    )?;
    let space = ParameterSpace::new(vec![Block::Ball { center: centers, radius }]);
    Ok((problem, space))
}

/// Hybrid vehicle control: split demanded power between a battery and an
/// engine with binary on/off state, quadratic fuel cost, and a switching
/// penalty. Parameters: initial charge `E₀ ∈ B(40, 0.5)` and the demanded
/// power profile `P^des ∈ B(P̄, 0.5)`.
fn hybrid(t_horizon: usize) -> Result<(ParametricProblem, ParameterSpace), BenchError> {
    if t_horizon == 0 || t_horizon > HYBRID_POWER_PROFILE.len() {
        return Err(BenchError::InvalidSize {
            family: "hybrid".into(),
            msg: format!("horizon must be in 1..={}", HYBRID_POWER_PROFILE.len()),
        });
    }
    let t_h = t_horizon;
    let tau = 4.0;
    let (alpha, beta, gamma, delta) = (1.0, 1.0, 1.0, 0.1);
    let eta = 1.0;
    let e_max = 50.0;
    let p_max = 1.0;

    // Variables: E_0..E_T, P_batt_0..T-1, P_eng_0..T-1, z_0..T-1.
    let mut variables = Vec::new();
    for t in 0..=t_h {
        variables.push(Variable::bounded(format!("E{t}"), c(0.0), c(e_max)));
    }
    for t in 0..t_h {
        variables.push(Variable::free(format!("Pb{t}")));
    }
    for t in 0..t_h {
        variables.push(Variable::nonneg(format!("Pe{t}")));
    }
    for t in 0..t_h {
        variables.push(Variable::bounded(format!("z{t}"), c(0.0), c(1.0)).integer());
    }
    let ev = |t: usize| t;
    let pb = |t: usize| t_h + 1 + t;
    let pe = |t: usize| 2 * t_h + 1 + t;
    let zv = |t: usize| 3 * t_h + 1 + t;

    let mut constraints = Vec::new();
    // E_0 = E_init (θ₀).
    constraints.push(Constraint {
        terms: vec![(ev(0), c(1.0))],
        sense: Sense::Eq,
        rhs: Coeff::param(0),
    });
    // E_{t+1} = E_t − τ·P_batt_t.
    for t in 0..t_h {
        constraints.push(Constraint {
            terms: vec![(ev(t + 1), c(1.0)), (ev(t), c(-1.0)), (pb(t), c(tau))],
            sense: Sense::Eq,
            rhs: c(0.0),
        });
    }
    // P_batt_t + P_eng_t ≥ P_des_t (θ_{1+t}).
    for t in 0..t_h {
        constraints.push(Constraint {
            terms: vec![(pb(t), c(1.0)), (pe(t), c(1.0))],
            sense: Sense::Ge,
            rhs: Coeff::param(1 + t),
        });
    }
    // Engine output only while on: P_eng_t ≤ P_max·z_t.
    for t in 0..t_h {
        constraints.push(Constraint {
            terms: vec![(pe(t), c(1.0)), (zv(t), c(-p_max))],
            sense: Sense::Le,
            rhs: c(0.0),
        });
    }

    // Cost: η(E_T − E_max)² + Σ α P_eng² + β P_eng + γ z_t + δ(z_t − z_{t−1})₊
    // with the engine initially off (z_{-1} = 0).
    let mut quad_cost = vec![QuadTerm { i: ev(t_h), j: ev(t_h), coeff: c(eta) }];
    let mut lin_cost = vec![(ev(t_h), c(-2.0 * eta * e_max))];
    for t in 0..t_h {
        quad_cost.push(QuadTerm { i: pe(t), j: pe(t), coeff: c(alpha) });
        lin_cost.push((pe(t), c(beta)));
        lin_cost.push((zv(t), c(gamma)));
    }
    let mut max_terms = Vec::new();
    for t in 0..t_h {
        let mut on_branch = vec![(zv(t), c(delta))];
        if t > 0 {
            on_branch.push((zv(t - 1), c(-delta)));
        }
        max_terms.push(MaxTerm {
            branches: vec![
                AffineExpr { terms: on_branch, constant: c(0.0) },
                AffineExpr { terms: vec![], constant: c(0.0) },
            ],
        });
    }

    let mut param_names = vec!["E_init".to_string()];
    param_names.extend((0..t_h).map(|t| format!("Pdes{t}")));
    let problem = ParametricProblem::new(
        format!("hybrid-T{t_h}"),
        1 + t_h,
        param_names,
        variables,
        quad_cost,
        lin_cost,
        c(eta * e_max * e_max),
        constraints,
        max_terms,
    )?;
    let space = ParameterSpace::new(vec![
        Block::Ball { center: vec![40.0], radius: 0.5 },
        Block::Ball { center: HYBRID_POWER_PROFILE[..t_h].to_vec(), radius: 0.5 },
    ]);
    Ok((problem, space))
}

// ---------------------------------------------------------------------------
// Pipeline orchestration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnerKind {
    Oct,
    OctH,
    Nn,
}

impl LearnerKind {
    pub fn parse(s: &str) -> Option<LearnerKind> {
        match s {
            "oct" => Some(LearnerKind::Oct),
            "oct-h" | "octh" => Some(LearnerKind::OctH),
            "nn" => Some(LearnerKind::Nn),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::Oct => "oct",
            LearnerKind::OctH => "oct-h",
            LearnerKind::Nn => "nn",
        }
    }
}

/// Train the requested learner on an exploration dataset.
pub fn train_learner(
    kind: LearnerKind,
    dataset: &Dataset,
    seed: u64,
) -> Result<TrainedPredictor, BenchError> {
    let predictor = match kind {
        LearnerKind::Oct => train_oct(
            dataset,
            &OctGrid::default(),
            SplitMode::Parallel,
            crate::learners::tree::DEFAULT_RESTARTS,
            crate::learners::tree::DEFAULT_ALPHA,
            seed,
        )?,
        LearnerKind::OctH => train_oct(
            dataset,
            &OctGrid::default(),
            SplitMode::Hyperplane,
            crate::learners::tree::DEFAULT_RESTARTS,
            crate::learners::tree::DEFAULT_ALPHA,
            seed,
        )?,
        LearnerKind::Nn => train_nn(dataset, &NnGrid::default(), seed)?,
    };
    Ok(predictor)
}

/// Build a training dataset from an exploration run.
pub fn dataset_from_exploration(result: &ExplorationResult, split_seed: u64) -> Dataset {
    let features: Vec<Vec<f64>> = result.samples.iter().map(|(t, _)| t.clone()).collect();
    let labels: Vec<u32> = result.samples.iter().map(|(_, l)| *l).collect();
    Dataset::with_split(features, labels, result.catalog.len() as u32, split_seed)
        .expect("exploration produces a consistent dataset")
}

/// Full pipeline output for one worked example.
pub struct ExampleRun {
    pub exploration: ExplorationResult,
    pub predictor: TrainedPredictor,
    pub tree_text: String,
    pub report: EvaluationReport,
}

/// Explore → train a parallel-split tree → evaluate on holdout samples.
/// Reproduces the small worked examples end to end.
pub fn reproduce_example(family: Family, seed: u64) -> Result<ExampleRun, BenchError> {
    let spec = BenchmarkSpec::new(family, seed);
    let (problem, space) = generate(&spec)?;
    let explore_cfg = ExplorationConfig { seed, ..ExplorationConfig::default() };
    let exploration = explore(&problem, &space, &explore_cfg)?;
    let dataset = dataset_from_exploration(&exploration, seed.wrapping_add(1));
    let predictor = train_learner(LearnerKind::Oct, &dataset, seed.wrapping_add(2))?;
    let tree_text = match &predictor.model {
        crate::learners::PredictorModel::Tree(t) => {
            render_tree(t, &problem.param_names)?
        }
        crate::learners::PredictorModel::Network(_) => String::new(),
    };
    let sample = problem.canonicalize(&crate::problem::sample_parameters(&space, seed, 1)?[0])?;
    let context = ReportContext {
        problem: spec.label(),
        learner: "oct".into(),
        n_var: sample.n_var,
        n_con: sample.n_con,
        n_train: exploration.n,
        good_turing: exploration.good_turing,
        n_strategies: exploration.catalog.len() as u32,
    };
    let eval_cfg = EvaluationConfig { seed: seed.wrapping_add(977), ..EvaluationConfig::default() };
    let report =
        evaluate(&predictor, &problem, &space, &exploration.catalog, context, &eval_cfg)?;
    Ok(ExampleRun { exploration, predictor, tree_text, report })
}

/// One row of the benchmark table; failures are recorded, not fatal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub problem: String,
    pub learner: String,
    pub report: Option<EvaluationReport>,
    pub error: Option<String>,
}

/// Run the full pipeline for every (spec, learner) pair. Exploration is
/// shared across learners of the same spec.
pub fn desk_table(specs: &[BenchmarkSpec], learners: &[LearnerKind], seed: u64) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for spec in specs {
        let prep = (|| -> Result<_, BenchError> {
            let (problem, space) = generate(spec)?;
            let explore_cfg = ExplorationConfig { seed: spec.seed, ..ExplorationConfig::default() };
            let exploration = explore(&problem, &space, &explore_cfg)?;
            let dataset = dataset_from_exploration(&exploration, seed);
            Ok((problem, space, exploration, dataset))
        })();
        match prep {
            Err(e) => {
                for kind in learners {
                    rows.push(TableRow {
                        problem: spec.label(),
                        learner: kind.name().into(),
                        report: None,
                        error: Some(e.to_string()),
                    });
                }
            }
            Ok((problem, space, exploration, dataset)) => {
                let sample_inst = crate::problem::sample_parameters(&space, spec.seed, 1)
                    .ok()
                    .and_then(|t| problem.canonicalize(&t[0]).ok());
                let (n_var, n_con) =
                    sample_inst.map(|i| (i.n_var, i.n_con)).unwrap_or((0, 0));
                for kind in learners {
                    let row = (|| -> Result<EvaluationReport, BenchError> {
                        let predictor = train_learner(*kind, &dataset, seed.wrapping_add(13))?;
                        let context = ReportContext {
                            problem: spec.label(),
                            learner: kind.name().into(),
                            n_var,
                            n_con,
                            n_train: exploration.n,
                            good_turing: exploration.good_turing,
                            n_strategies: exploration.catalog.len() as u32,
                        };
                        let eval_cfg = EvaluationConfig {
                            seed: spec.seed.wrapping_add(977),
                            ..EvaluationConfig::default()
                        };
                        Ok(evaluate(
                            &predictor,
                            &problem,
                            &space,
                            &exploration.catalog,
                            context,
                            &eval_cfg,
                        )?)
                    })();
                    match row {
                        Ok(report) => rows.push(TableRow {
                            problem: spec.label(),
                            learner: kind.name().into(),
                            report: Some(report),
                            error: None,
                        }),
                        Err(e) => rows.push(TableRow {
                            problem: spec.label(),
                            learner: kind.name().into(),
                            report: None,
                            error: Some(e.to_string()),
                        }),
                    }
                }
            }
        }
    }
    rows
}

/// Plain-text table over the collected rows.
pub fn render_table(rows: &[TableRow]) -> String {
    let mut out = crate::evaluate::table_header();
    for row in rows {
        match (&row.report, &row.error) {
            (Some(report), _) => out.push_str(&crate::evaluate::table_row(report)),
            (None, Some(err)) => {
                out.push_str(&format!("{:<18} {:<7} FAILED: {err}\n", row.problem, row.learner))
            }
            (None, None) => {}
        }
    }
    out
}

/// Comma-separated form of the same table.
pub fn render_table_csv(rows: &[TableRow]) -> String {
    let mut out =
        String::from("problem,n_var,n_con,learner,N,GT,n_strategies,accuracy_pct,t_ratio,p_bar,d_bar,error\n");
    for row in rows {
        match &row.report {
            Some(r) => {
                let c = &r.context;
                let a = &r.aggregates;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},\n",
                    c.problem,
                    c.n_var,
                    c.n_con,
                    c.learner,
                    c.n_train,
                    c.good_turing,
                    c.n_strategies,
                    a.accuracy_pct,
                    a.t_ratio,
                    a.p_bar,
                    a.d_bar
                ));
            }
            None => {
                out.push_str(&format!(
                    "{},,,{},,,,,,,,{}\n",
                    row.problem,
                    row.learner,
                    row.error.as_deref().unwrap_or("")
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knapsack_uses_fixed_cost_vector() {
        let (problem, space) = knapsack().unwrap();
        assert_eq!(problem.param_dim, 20);
        let inst = problem.canonicalize(&[2.0; 20]).unwrap();
        assert_eq!(inst.n_var, 10);
        assert_eq!(inst.n_con, 1 + 20);
        assert_eq!(inst.integers, (0..10).collect::<Vec<_>>());
        for i in 0..10 {
            assert_eq!(inst.q[i], -KNAPSACK_COSTS[i]);
        }
        assert_eq!(space.dim(), 20);
        // Paper-exact family rejects other sizes.
        let mut spec = BenchmarkSpec::new(Family::Knapsack, 0);
        spec.n = Some(12);
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn transportation_structural_counts() {
        let (problem, _) = transportation(4, 6, 3).unwrap();
        let inst = problem.canonicalize(&vec![3.0; 6]).unwrap();
        assert_eq!(inst.n_var, 24);
        // supply + demand + nonnegativity rows
        assert_eq!(inst.n_con, 4 + 6 + 24);
        assert!(inst.integers.is_empty());
    }

    #[test]
    fn inventory_canonical_expansion_counts() {
        // Independent count over the model description: variables are
        // T orders + (T+1) levels + T epigraph auxiliaries; rows are
        // (T+1) state equalities + 2T epigraph rows + 2T order bounds.
        let t = 30;
        let (problem, space) = inventory(t).unwrap();
        let theta = vec![2.0; t + 1];
        let inst = problem.canonicalize(&theta).unwrap();
        assert_eq!(inst.n_var, t + (t + 1) + t);
        assert_eq!(inst.n_var, 91);
        let eq_rows = inst.senses.iter().filter(|s| **s == crate::problem::RowSense::Eq).count();
        assert_eq!(eq_rows, t + 1);
        let epigraph_rows = inst
            .row_origin
            .iter()
            .filter(|o| matches!(o, crate::problem::RowOrigin::Epigraph { .. }))
            .count();
        assert_eq!(epigraph_rows, 2 * t);
        let bound_rows = inst
            .row_origin
            .iter()
            .filter(|o| {
                matches!(
                    o,
                    crate::problem::RowOrigin::LowerBound(_)
                        | crate::problem::RowOrigin::UpperBound(_)
                )
            })
            .count();
        assert_eq!(bound_rows, 2 * t);
        assert_eq!(inst.n_con, (t + 1) + 2 * t + 2 * t);
        assert_eq!(space.dim(), t + 1);
    }

    #[test]
    fn hybrid_uses_printed_power_profile() {
        let (_, space) = hybrid(40).unwrap();
        match &space.blocks[1] {
            Block::Ball { center, radius } => {
                assert_eq!(center.as_slice(), &HYBRID_POWER_PROFILE[..]);
                assert_eq!(*radius, 0.5);
            }
            _ => panic!("expected ball block"),
        }
        assert!(hybrid(41).is_err());
        assert!(hybrid(0).is_err());
    }

    #[test]
    fn portfolio_covariance_is_psd() {
        for seed in 0..5 {
            let (problem, _) = portfolio(20, 5, seed).unwrap();
            let inst = problem.canonicalize(&vec![0.0; 20]).unwrap();
            let min_eig = inst.p_mat.clone().symmetric_eigen().eigenvalues.min();
            assert!(min_eig >= -1e-9, "seed {seed}: min eigenvalue {min_eig}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        for family in [
            Family::Inventory,
            Family::Knapsack,
            Family::Supplier,
            Family::Transportation,
            Family::Portfolio,
            Family::Facility,
            Family::Hybrid,
        ] {
            let mut spec = BenchmarkSpec::new(family, 42);
            if family == Family::Inventory {
                spec.horizon = Some(6);
            }
            if family == Family::Hybrid {
                spec.horizon = Some(4);
            }
            if family == Family::Transportation || family == Family::Facility {
                spec.n = Some(3);
                spec.m = Some(3);
            }
            if family == Family::Portfolio {
                spec.n = Some(8);
                spec.m = Some(3);
            }
            let (p1, s1) = generate(&spec).unwrap();
            let (p2, s2) = generate(&spec).unwrap();
            let theta = crate::problem::sample_parameters(&s1, 7, 1).unwrap();
            let theta2 = crate::problem::sample_parameters(&s2, 7, 1).unwrap();
            assert_eq!(theta, theta2);
            let i1 = p1.canonicalize(&theta[0]).unwrap();
            let i2 = p2.canonicalize(&theta[0]).unwrap();
            assert_eq!(i1.a.as_slice(), i2.a.as_slice());
            assert_eq!(i1.b.as_slice(), i2.b.as_slice());
            assert_eq!(i1.q.as_slice(), i2.q.as_slice());
        }
    }
}
