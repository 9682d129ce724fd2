//! Utility shaping for equal prices.
//!
//! A market designer restricts agents to quadratic utilities whose parameters
//! lie in a [`ParamBox`]. On star networks [`sstar_membership`] decides
//! whether every profile in the box yields equal positive prices; elsewhere
//! [`algorithm1_enumerate`] approves boxes by sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{draw, AgentProfile, MarketInstance};
use crate::equilibria::{
    equal_price_check, solve_standard_swe, solve_swe, standard_ce_closed_form, StandardEquilibrium,
};
use crate::error::{Error, Result};
use crate::qpcore::{max_slack_lp, SolveOptions};
use crate::rng::{self, stream};

/// Ranges for `θ₁` (curvature) and `θ₂` (marginal utility at zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxWire", into = "BoxWire")]
pub struct ParamBox {
    theta1_min: f64,
    theta1_max: f64,
    theta2_min: f64,
    theta2_max: f64,
}

#[derive(Serialize, Deserialize)]
struct BoxWire {
    theta1_min: f64,
    theta1_max: f64,
    theta2_min: f64,
    theta2_max: f64,
}

impl TryFrom<BoxWire> for ParamBox {
    type Error = Error;

    fn try_from(w: BoxWire) -> Result<Self> {
        ParamBox::new(w.theta1_min, w.theta1_max, w.theta2_min, w.theta2_max)
    }
}

impl From<ParamBox> for BoxWire {
    fn from(b: ParamBox) -> Self {
        BoxWire {
            theta1_min: b.theta1_min,
            theta1_max: b.theta1_max,
            theta2_min: b.theta2_min,
            theta2_max: b.theta2_max,
        }
    }
}

impl ParamBox {
    pub fn new(theta1_min: f64, theta1_max: f64, theta2_min: f64, theta2_max: f64) -> Result<Self> {
        let all = [theta1_min, theta1_max, theta2_min, theta2_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("box bounds must be finite".into()));
        }
        if theta1_min <= 0.0 || theta1_min > theta1_max {
            return Err(Error::Domain(format!(
                "theta1 range [{theta1_min}, {theta1_max}] must be positive and ordered"
            )));
        }
        if theta2_min < 0.0 || theta2_min > theta2_max {
            return Err(Error::Domain(format!(
                "theta2 range [{theta2_min}, {theta2_max}] must be nonnegative and ordered"
            )));
        }
        Ok(ParamBox {
            theta1_min,
            theta1_max,
            theta2_min,
            theta2_max,
        })
    }

    pub fn theta1(&self) -> [f64; 2] {
        [self.theta1_min, self.theta1_max]
    }

    pub fn theta2(&self) -> [f64; 2] {
        [self.theta2_min, self.theta2_max]
    }

    pub fn contains(&self, theta1: f64, theta2: f64) -> bool {
        (self.theta1_min..=self.theta1_max).contains(&theta1)
            && (self.theta2_min..=self.theta2_max).contains(&theta2)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        (draw(rng, self.theta1()), draw(rng, self.theta2()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SStarCondition {
    /// `θ₂,min / θ₁,max > C / n`
    AveragePrice,
    /// `aᵢ − θ₂,max / θ₁,min − A⁻ᵢu ≥ 0` for every agent
    InflowCapacity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SStarDiagnostics {
    pub cond1_lhs: f64,
    pub cond1_rhs: f64,
    pub cond2_margins: Vec<f64>,
    /// `A⁺ᵢu − aᵢ`; positive when each agent could ship its whole endowment.
    pub endowment_margins: Vec<f64>,
    pub endowment_hypothesis: bool,
    pub failing: Vec<SStarCondition>,
    pub in_sstar: bool,
}

/// Exact membership test on a canonical star.
///
/// The verdict requires the strict average-price condition and the
/// non-strict inflow condition. The endowment margins are reported alongside
/// but do not enter the verdict.
pub fn sstar_membership(pbox: &ParamBox, inst: &MarketInstance) -> Result<SStarDiagnostics> {
    let net = inst.network();
    if !net.is_canonical_star() {
        return Err(Error::UnsupportedTopology(
            "S* is defined on canonical stars only".into(),
        ));
    }
    let n = inst.n();
    let cond1_lhs = pbox.theta2_min / pbox.theta1_max;
    let cond1_rhs = inst.total_endowment() / n as f64;
    let worst_bliss = pbox.theta2_max / pbox.theta1_min;

    let mut cond2_margins = Vec::with_capacity(n);
    let mut endowment_margins = Vec::with_capacity(n);
    for (i, ag) in inst.agents().iter().enumerate() {
        let (inflow, outflow) = net.capacity_bounds(i)?;
        cond2_margins.push(ag.a - worst_bliss - inflow);
        endowment_margins.push(outflow - ag.a);
    }

    let mut failing = Vec::new();
    if cond1_lhs <= cond1_rhs {
        failing.push(SStarCondition::AveragePrice);
    }
    if cond2_margins.iter().any(|&m| m < 0.0) {
        failing.push(SStarCondition::InflowCapacity);
    }
    Ok(SStarDiagnostics {
        cond1_lhs,
        cond1_rhs,
        endowment_hypothesis: endowment_margins.iter().all(|&m| m > 0.0),
        cond2_margins,
        endowment_margins,
        in_sstar: failing.is_empty(),
        failing,
    })
}

/// I.i.d. uniform `(θ₁, θ₂)` per agent.
pub fn sample_admissible(pbox: &ParamBox, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = rng::seeded(seed, stream::PARAMS);
    (0..n).map(|_| pbox.sample(&mut rng)).collect()
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    rng::seeded(seed, stream::TRIALS + index)
}

fn reshaped(template: &MarketInstance, thetas: &[(f64, f64)]) -> Result<MarketInstance> {
    let agents = template
        .agents()
        .iter()
        .zip(thetas)
        .map(|(ag, &(t1, t2))| AgentProfile::new(ag.a, t1, t2))
        .collect::<Result<Vec<_>>>()?;
    template.with_agents(agents)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTrial {
    pub trial: usize,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub lambda: Vec<f64>,
    pub spread: f64,
    pub min_price: f64,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualPriceReport {
    pub trials: Vec<PriceTrial>,
    pub passed: usize,
    pub pass_fraction: f64,
    pub worst_spread: f64,
    pub min_price: f64,
    /// Set when the box or network is outside the exact membership test,
    /// so a full pass is evidence rather than a guarantee.
    pub advisory: bool,
}

/// Samples `trials` utility profiles from the box and checks that each
/// welfare solution has equal, positive prices.
pub fn validate_equal_prices(
    pbox: &ParamBox,
    template: &MarketInstance,
    trials: usize,
    seed: u64,
    tol: f64,
    opts: &SolveOptions,
) -> EqualPriceReport {
    let advisory = !matches!(sstar_membership(pbox, template), Ok(d) if d.in_sstar);
    let n = template.n();
    let rows: Vec<PriceTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let thetas: Vec<(f64, f64)> = (0..n).map(|_| pbox.sample(&mut rng)).collect();
            let mut row = PriceTrial {
                trial: t,
                theta1: thetas.iter().map(|p| p.0).collect(),
                theta2: thetas.iter().map(|p| p.1).collect(),
                lambda: Vec::new(),
                spread: f64::INFINITY,
                min_price: f64::NAN,
                passed: false,
                error: None,
            };
            match reshaped(template, &thetas).and_then(|inst| solve_swe(&inst, opts)) {
                Ok(sol) => {
                    let s = equal_price_check(&sol, tol);
                    row.spread = s.max_spread;
                    row.min_price = s.min_price;
                    row.passed = s.all_equal && s.all_positive;
                    row.lambda = sol.lambda;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();

    let passed = rows.iter().filter(|r| r.passed).count();
    EqualPriceReport {
        passed,
        pass_fraction: if trials == 0 {
            0.0
        } else {
            passed as f64 / trials as f64
        },
        worst_spread: rows.iter().map(|r| r.spread).fold(0.0, f64::max),
        min_price: rows
            .iter()
            .map(|r| r.min_price)
            .fold(f64::INFINITY, f64::min),
        trials: rows,
        advisory,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxAssessment {
    pub param_box: ParamBox,
    pub approved: bool,
    pub samples: usize,
    /// Smallest max-slack value over the sampled trade vectors; negative
    /// means some trade vector cannot be carried by any feasible flow.
    pub worst_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Algorithm1Report {
    pub assessments: Vec<BoxAssessment>,
    pub approved: Vec<ParamBox>,
    pub caveat: String,
}

fn standard_trades(inst: &MarketInstance, opts: &SolveOptions) -> Result<StandardEquilibrium> {
    let closed = standard_ce_closed_form(inst);
    if closed.x.iter().all(|&x| x > 0.0) {
        Ok(closed)
    } else {
        solve_standard_swe(inst, opts)
    }
}

/// Sampling realization of the box-approval procedure: for every box, draw
/// `samples` profiles, compute the unconstrained equilibrium trades and
/// approve the box iff every trade vector is realizable by flows within
/// capacity.
pub fn algorithm1_enumerate(
    template: &MarketInstance,
    boxes: &[ParamBox],
    samples: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<Algorithm1Report> {
    let net = template.network();
    let inc = net.incidence();
    let n = template.n();
    let mut assessments = Vec::with_capacity(boxes.len());
    for (b, pbox) in boxes.iter().enumerate() {
        let mut worst_slack = f64::INFINITY;
        for s in 0..samples {
            let mut rng = trial_rng(seed, (b * samples + s) as u64);
            let thetas: Vec<(f64, f64)> = (0..n).map(|_| pbox.sample(&mut rng)).collect();
            let inst = reshaped(template, &thetas)?;
            let std = standard_trades(&inst, opts)?;
            let lp = max_slack_lp(&inc.a, &std.e, net.capacities(), opts)?;
            worst_slack = worst_slack.min(lp.slack);
        }
        assessments.push(BoxAssessment {
            param_box: *pbox,
            approved: samples > 0 && worst_slack >= -opts.tol.max(1e-9),
            samples,
            worst_slack,
        });
    }
    Ok(Algorithm1Report {
        approved: assessments
            .iter()
            .filter(|a| a.approved)
            .map(|a| a.param_box)
            .collect(),
        caveat: format!(
            "approved at {samples} samples per box: every sampled equilibrium trade is realizable, \
             which does not prove realizability for the whole box"
        ),
        assessments,
    })
}
