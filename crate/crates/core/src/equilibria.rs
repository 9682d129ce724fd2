//! Social-welfare and competitive equilibria.
//!
//! The planner's problem is assembled over the variable vector
//! `[x (n) | e (n) | y (m)]` in minimization form (utilities negated):
//!
//! ```text
//! minimize   Σ ½θ₁ᵢxᵢ² − θ₂ᵢxᵢ
//! s.t.       Σ eᵢ = 0                 β
//!            eᵢ − Σₖ A_ik yₖ = 0      qᵢ
//!            eᵢ + xᵢ ≤ aᵢ             λᵢ ≥ 0
//!            yₖ ≤ uₖ                  ξₖ ≥ 0
//!            x ≥ 0, y ≥ 0
//! ```
//!
//! Stationarity in `eᵢ` gives `λᵢ + β + qᵢ = 0`, the posted-price identity.
//! The balance row is implied by the flow rows, so `(β, q)` is only fixed up
//! to a common shift `(β − c, q + c)`; we report the representative with
//! `Σ qᵢ = 0`, which makes `q` vanish whenever all prices agree.

use serde::{Deserialize, Serialize};

use crate::agents::{concavity_check, numeric_best_payoff, MarketInstance, UtilityFunction};
use crate::error::{Error, Result};
use crate::flownet::FlowNetwork;
use crate::qpcore::{max_slack_lp, solve, ConvexProgram, SolveOptions, SolveReport};

/// Largest tolerated `|λᵢ + β + qᵢ|` before the dual mapping is rejected.
const PRICE_IDENTITY_LIMIT: f64 = 1e-6;

/// Every primal and dual quantity of a competitive equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub x: Vec<f64>,
    pub e: Vec<f64>,
    pub y: Vec<f64>,
    pub beta: f64,
    pub q: Vec<f64>,
    pub xi: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl EquilibriumSolution {
    pub fn welfare(&self, inst: &MarketInstance) -> f64 {
        inst.agents()
            .iter()
            .zip(&self.x)
            .map(|(ag, &x)| ag.utility.value(x))
            .sum()
    }

    /// `maxᵢ |λᵢ + β + qᵢ|`.
    pub fn price_identity_residual(&self) -> f64 {
        self.lambda
            .iter()
            .zip(&self.q)
            .map(|(l, q)| (l + self.beta + q).abs())
            .fold(0.0, f64::max)
    }
}

/// Outcome of one condition of the competitive-equilibrium definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub passed: bool,
    pub residual: f64,
}

impl ConditionCheck {
    fn new(residual: f64, tol: f64) -> Self {
        ConditionCheck {
            passed: residual <= tol,
            residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeVerificationReport {
    /// (i) each `(xᵢ, eᵢ)` maximizes `fᵢ(xᵢ) + λᵢeᵢ` on its budget set.
    pub agent_optimality: ConditionCheck,
    /// (ii) `λᵢ = −(β + qᵢ)`.
    pub price_identity: ConditionCheck,
    /// (iii) `Σ eᵢ = 0`.
    pub trade_balance: ConditionCheck,
    /// (iv) `e = A·y`, `0 ≤ y ≤ u`.
    pub flow_balance: ConditionCheck,
    /// (v) `ξ ≥ 0`, `ξₖ(yₖ − uₖ) = 0`.
    pub capacity_slackness: ConditionCheck,
    /// (vi) optimality of `y` over `y ≥ 0`: the reduced cost
    /// `rₖ = ξₖ − Σᵢ qᵢA_ik` is nonnegative and `rₖ·yₖ = 0`.
    pub flow_stationarity: ConditionCheck,
    /// `maxₖ |rₖ|`. Zero only when no arc is stuck at zero flow behind a
    /// congested reverse arc; reported for inspection, not part of the verdict.
    pub reduced_cost_max: f64,
    pub passed: bool,
}

impl CeVerificationReport {
    pub fn conditions(&self) -> [(&'static str, ConditionCheck); 6] {
        [
            ("(i) agent optimality", self.agent_optimality),
            ("(ii) price identity", self.price_identity),
            ("(iii) trade balance", self.trade_balance),
            ("(iv) flow balance", self.flow_balance),
            ("(v) capacity slackness", self.capacity_slackness),
            ("(vi) flow stationarity", self.flow_stationarity),
        ]
    }

    pub fn worst_residual(&self) -> f64 {
        self.conditions()
            .iter()
            .map(|(_, c)| c.residual)
            .fold(0.0, f64::max)
    }
}

/// Planner's program in minimization form, variables `[x | e | y]`.
pub fn assemble_swe(inst: &MarketInstance) -> ConvexProgram {
    let net = inst.network();
    let (n, m) = (inst.n(), net.arc_count());
    let nv = 2 * n + m;

    let mut curvature = vec![0.0; nv];
    let mut linear = vec![0.0; nv];
    for (i, ag) in inst.agents().iter().enumerate() {
        curvature[i] = ag.utility.theta1();
        linear[i] = -ag.utility.theta2();
    }
    let mut p = ConvexProgram::new(curvature, linear).expect("curvatures are positive");

    let mut balance = vec![0.0; nv];
    balance[n..2 * n].iter_mut().for_each(|v| *v = 1.0);
    p.add_eq(balance, 0.0).expect("row length");
    for i in 0..n {
        let mut row = vec![0.0; nv];
        row[n + i] = 1.0;
        for (k, &(t, h)) in net.arcs().iter().enumerate() {
            if t == i {
                row[2 * n + k] -= 1.0;
            }
            if h == i {
                row[2 * n + k] += 1.0;
            }
        }
        p.add_eq(row, 0.0).expect("row length");
    }
    for (i, ag) in inst.agents().iter().enumerate() {
        let mut row = vec![0.0; nv];
        row[i] = 1.0;
        row[n + i] = 1.0;
        p.add_ineq(row, ag.a).expect("row length");
    }
    for (k, &u) in net.capacities().iter().enumerate() {
        let mut row = vec![0.0; nv];
        row[2 * n + k] = 1.0;
        p.add_ineq(row, u).expect("row length");
    }
    for j in (0..n).chain(2 * n..nv) {
        p.lower[j] = 0.0;
    }
    p
}

fn check_concave(inst: &MarketInstance) -> Result<()> {
    for (i, ag) in inst.agents().iter().enumerate() {
        let hi = 2.0 * ag.utility.bliss_point().max(ag.a).max(1.0);
        let grid: Vec<f64> = (0..=32).map(|k| hi * k as f64 / 32.0).collect();
        if !concavity_check(&ag.utility, &grid, 1e-9)? {
            return Err(Error::Precondition(format!(
                "utility of agent {} is not concave",
                i + 1
            )));
        }
    }
    Ok(())
}

pub fn solve_swe(inst: &MarketInstance, opts: &SolveOptions) -> Result<EquilibriumSolution> {
    solve_swe_detailed(inst, opts).map(|(sol, _)| sol)
}

/// [`solve_swe`] plus the raw solver report.
pub fn solve_swe_detailed(
    inst: &MarketInstance,
    opts: &SolveOptions,
) -> Result<(EquilibriumSolution, SolveReport)> {
    check_concave(inst)?;
    let program = assemble_swe(inst);
    let report = solve(&program, opts)?.require_optimal()?;
    let (n, m) = (inst.n(), inst.network().arc_count());
    let z = &report.primal;
    let duals = &report.duals;

    let mut beta = duals.eq[0];
    let mut q = duals.eq[1..=n].to_vec();
    let shift = q.iter().sum::<f64>() / n as f64;
    q.iter_mut().for_each(|v| *v -= shift);
    beta += shift;

    // `+ 0.0` turns the `-0.0` left by exact bound hits into `0.0`.
    let tidy = |v: &[f64]| v.iter().map(|x| x + 0.0).collect::<Vec<_>>();
    let sol = EquilibriumSolution {
        x: tidy(&z[..n]),
        e: tidy(&z[n..2 * n]),
        y: tidy(&z[2 * n..2 * n + m]),
        beta,
        q,
        xi: tidy(&duals.ineq[n..n + m]),
        lambda: tidy(&duals.ineq[..n]),
    };
    let identity = sol.price_identity_residual();
    if identity > PRICE_IDENTITY_LIMIT {
        return Err(Error::Precondition(format!(
            "dual mapping violates the price identity by {identity:e}"
        )));
    }
    Ok((sol, report))
}

/// Payoff shortfall of `(x, e)` against the best response at price `λ`,
/// for any concave utility. `search_hi` bounds the consumption search.
pub fn agent_optimality_gap<U: UtilityFunction + ?Sized>(
    u: &U,
    a: f64,
    lambda: f64,
    x: f64,
    e: f64,
    search_hi: f64,
) -> f64 {
    if lambda < 0.0 {
        return f64::INFINITY;
    }
    let infeasibility = (-x).max(e + x - a).max(0.0);
    let best = numeric_best_payoff(u, a, lambda, search_hi);
    let achieved = u.value(x.max(0.0)) + lambda * e;
    (best - achieved).max(0.0).max(infeasibility)
}

pub fn verify_ce(
    inst: &MarketInstance,
    sol: &EquilibriumSolution,
    tol: f64,
) -> Result<CeVerificationReport> {
    let net = inst.network();
    let (n, m) = (inst.n(), net.arc_count());
    for (what, len, expected) in [
        ("x", sol.x.len(), n),
        ("e", sol.e.len(), n),
        ("q", sol.q.len(), n),
        ("lambda", sol.lambda.len(), n),
        ("y", sol.y.len(), m),
        ("xi", sol.xi.len(), m),
    ] {
        if len != expected {
            return Err(Error::dim(what, expected, len));
        }
    }

    // (i) closed-form best response for the quadratic utilities.
    let mut optimality: f64 = 0.0;
    for (i, ag) in inst.agents().iter().enumerate() {
        let lambda = sol.lambda[i];
        let residual = if lambda < -tol {
            f64::INFINITY
        } else {
            let lambda = lambda.max(0.0);
            let (bx, be) = ag.utility.best_response(ag.a, lambda)?;
            let best = ag.utility.value(bx) + lambda * be;
            let (x, e) = (sol.x[i], sol.e[i]);
            let achieved = ag.utility.value(x.max(0.0)) + lambda * e;
            (best - achieved).max(0.0).max(-x).max(e + x - ag.a)
        };
        optimality = optimality.max(residual);
    }

    let identity = sol.price_identity_residual();
    let balance = sol.e.iter().sum::<f64>().abs();

    let flows = net.net_flow(&sol.y)?;
    let mut flow_res = flows
        .iter()
        .zip(&sol.e)
        .map(|(f, e)| (f - e).abs())
        .fold(0.0, f64::max);
    for (&y, &u) in sol.y.iter().zip(net.capacities()) {
        flow_res = flow_res.max(-y).max(y - u);
    }

    let slackness = sol
        .xi
        .iter()
        .zip(sol.y.iter().zip(net.capacities()))
        .map(|(&xi, (&y, &u))| (-xi).max((xi * (y - u)).abs()))
        .fold(0.0, f64::max);

    let reduced = net
        .transpose_apply(&sol.q)
        .iter()
        .zip(&sol.xi)
        .map(|(aq, xi)| xi - aq)
        .collect::<Vec<_>>();
    let stationarity = reduced
        .iter()
        .zip(&sol.y)
        .map(|(&r, &y)| (-r).max((r * y).abs()))
        .fold(0.0, f64::max);
    let reduced_cost_max = reduced.iter().fold(0.0, |acc: f64, r| acc.max(r.abs()));

    let mut report = CeVerificationReport {
        agent_optimality: ConditionCheck::new(optimality, tol),
        price_identity: ConditionCheck::new(identity, tol),
        trade_balance: ConditionCheck::new(balance, tol),
        flow_balance: ConditionCheck::new(flow_res, tol),
        capacity_slackness: ConditionCheck::new(slackness, tol),
        flow_stationarity: ConditionCheck::new(stationarity, tol),
        reduced_cost_max,
        passed: false,
    };
    report.passed = report.conditions().iter().all(|(_, c)| c.passed);
    Ok(report)
}

/// Equilibrium of the market without network constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardEquilibrium {
    pub x: Vec<f64>,
    pub e: Vec<f64>,
    pub lambda0: f64,
}

pub fn solve_standard_swe(
    inst: &MarketInstance,
    opts: &SolveOptions,
) -> Result<StandardEquilibrium> {
    check_concave(inst)?;
    let n = inst.n();
    let mut curvature = vec![0.0; 2 * n];
    let mut linear = vec![0.0; 2 * n];
    for (i, ag) in inst.agents().iter().enumerate() {
        curvature[i] = ag.utility.theta1();
        linear[i] = -ag.utility.theta2();
    }
    let mut p = ConvexProgram::new(curvature, linear)?;
    let mut balance = vec![0.0; 2 * n];
    balance[n..].iter_mut().for_each(|v| *v = 1.0);
    p.add_eq(balance, 0.0)?;
    for (i, ag) in inst.agents().iter().enumerate() {
        let mut row = vec![0.0; 2 * n];
        row[i] = 1.0;
        row[n + i] = 1.0;
        p.add_ineq(row, ag.a)?;
        p.lower[i] = 0.0;
    }
    let report = solve(&p, opts)?.require_optimal()?;
    Ok(StandardEquilibrium {
        x: report.primal[..n].to_vec(),
        e: report.primal[n..].to_vec(),
        lambda0: -report.duals.eq[0],
    })
}

/// Closed-form standard equilibrium for quadratic utilities:
/// `λ₀ = (Σ θ₂ᵢ/θ₁ᵢ − C) / Σ 1/θ₁ᵢ`, `xᵢ = max(0, (θ₂ᵢ − λ₀)/θ₁ᵢ)`,
/// `eᵢ = aᵢ − xᵢ`. Exact whenever every `xᵢ > 0`.
pub fn standard_ce_closed_form(inst: &MarketInstance) -> StandardEquilibrium {
    let agents = inst.agents();
    let ratio: f64 = agents.iter().map(|ag| ag.utility.bliss_point()).sum();
    let inv: f64 = agents.iter().map(|ag| 1.0 / ag.utility.theta1()).sum();
    let lambda0 = (ratio - inst.total_endowment()) / inv;
    let x: Vec<f64> = agents
        .iter()
        .map(|ag| ((ag.utility.theta2() - lambda0) / ag.utility.theta1()).max(0.0))
        .collect();
    let e = agents.iter().zip(&x).map(|(ag, x)| ag.a - x).collect();
    StandardEquilibrium { x, e, lambda0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateEquilibrium {
    pub x: Vec<f64>,
    pub e: Vec<f64>,
}

/// Infinite-capacity reduction with binding budgets:
/// maximize `Σ fᵢ(xᵢ)` subject to `Σ xᵢ = C`, `x ≥ 0`.
pub fn solve_degenerate_swe(
    inst: &MarketInstance,
    opts: &SolveOptions,
) -> Result<DegenerateEquilibrium> {
    check_concave(inst)?;
    let agents = inst.agents();
    let mut p = ConvexProgram::new(
        agents.iter().map(|ag| ag.utility.theta1()).collect(),
        agents.iter().map(|ag| -ag.utility.theta2()).collect(),
    )?;
    p.add_eq(vec![1.0; inst.n()], inst.total_endowment())?;
    p.lower.iter_mut().for_each(|l| *l = 0.0);
    let report = solve(&p, opts)?.require_optimal()?;
    let x = report.primal;
    let e = agents.iter().zip(&x).map(|(ag, x)| ag.a - x).collect();
    Ok(DegenerateEquilibrium { x, e })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorCheck {
    pub is_interior: bool,
    /// Witness flows strictly inside `(0, u)` when interior.
    pub flow: Option<Vec<f64>>,
    /// Largest uniform margin of any realizing flow from `0` and `u`.
    pub slack: f64,
}

/// Whether `e` can be realized by flows strictly inside `(0, u)`; interior
/// means the best uniform margin exceeds `tol`.
pub fn interior_check(
    net: &FlowNetwork,
    e: &[f64],
    tol: f64,
    opts: &SolveOptions,
) -> Result<InteriorCheck> {
    if e.len() != net.node_count() {
        return Err(Error::dim("trade vector", net.node_count(), e.len()));
    }
    let total: f64 = e.iter().sum();
    if total.abs() > tol {
        return Err(Error::Precondition(format!(
            "trades do not balance (sum {total:e})"
        )));
    }
    let mean = total / e.len() as f64;
    let balanced: Vec<f64> = e.iter().map(|v| v - mean).collect();
    let inc = net.incidence();
    let lp = max_slack_lp(&inc.a, &balanced, net.capacities(), opts)?;
    let is_interior = lp.slack > tol;
    Ok(InteriorCheck {
        is_interior,
        flow: is_interior.then_some(lp.flow),
        slack: lp.slack,
    })
}

/// Explicit interior flows on a canonical star. For leaf `k+1` the pair
/// `(yₖ, y_{n−1+k})` carries net flow `−e_{k+1}`; the common offset is the
/// midpoint of the admissible range, which maximizes the pair's margin.
pub fn star_flow_construct(net: &FlowNetwork, e: &[f64]) -> Result<Vec<f64>> {
    if !net.is_canonical_star() {
        return Err(Error::UnsupportedTopology(
            "expected a canonical star".into(),
        ));
    }
    let n = net.node_count();
    if e.len() != n {
        return Err(Error::dim("trade vector", n, e.len()));
    }
    let scale = 1.0 + e.iter().map(|v| v.abs()).sum::<f64>();
    let total: f64 = e.iter().sum();
    if total.abs() > 1e-9 * scale {
        return Err(Error::Precondition(format!(
            "trades do not balance (sum {total:e})"
        )));
    }
    for (i, &ei) in e.iter().enumerate() {
        let (lo, hi) = net.capacity_bounds(i)?;
        if !(lo < ei && ei < hi) {
            return Err(Error::Infeasible(format!(
                "trade {ei} of node {} is outside the open interval ({lo}, {hi})",
                i + 1
            )));
        }
    }
    let leaves = n - 1;
    let u = net.capacities();
    let mut y = vec![0.0; 2 * leaves];
    for k in 0..leaves {
        let d = -e[k + 1];
        let (out_cap, back_cap) = (u[k], u[leaves + k]);
        let w_lo = (-d).max(0.0);
        let w_hi = back_cap.min(out_cap - d);
        let w = 0.5 * (w_lo + w_hi);
        y[k] = d + w;
        y[leaves + k] = w;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceSpread {
    pub max_spread: f64,
    pub min_price: f64,
    pub all_equal: bool,
    pub all_positive: bool,
}

pub fn equal_price_check(sol: &EquilibriumSolution, tol: f64) -> PriceSpread {
    price_spread(&sol.lambda, tol)
}

pub fn price_spread(lambda: &[f64], tol: f64) -> PriceSpread {
    let max = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let max_spread = if lambda.is_empty() { 0.0 } else { max - min };
    PriceSpread {
        max_spread,
        min_price: min,
        all_equal: max_spread <= tol,
        all_positive: min > tol,
    }
}
