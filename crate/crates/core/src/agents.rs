//! Agent utilities, endowments and market instances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flownet::FlowNetwork;
use crate::rng;

/// A utility of consumption on `x ≥ 0`.
pub trait UtilityFunction {
    fn value(&self, x: f64) -> f64;
    fn marginal(&self, x: f64) -> f64;
}

/// `f(x) = −½·θ₁·x² + θ₂·x` with `θ₁ > 0`, `θ₂ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadraticWire", into = "QuadraticWire")]
pub struct QuadraticUtility {
    theta1: f64,
    theta2: f64,
}

#[derive(Serialize, Deserialize)]
struct QuadraticWire {
    theta1: f64,
    theta2: f64,
}

impl TryFrom<QuadraticWire> for QuadraticUtility {
    type Error = Error;
    fn try_from(w: QuadraticWire) -> Result<Self> {
        QuadraticUtility::new(w.theta1, w.theta2)
    }
}

impl From<QuadraticUtility> for QuadraticWire {
    fn from(u: QuadraticUtility) -> Self {
        QuadraticWire {
            theta1: u.theta1,
            theta2: u.theta2,
        }
    }
}

impl QuadraticUtility {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta1 > 0.0 && theta1.is_finite()) {
            return Err(Error::Domain(format!(
                "theta1 must be positive, got {theta1}"
            )));
        }
        if !(theta2 >= 0.0 && theta2.is_finite()) {
            return Err(Error::Domain(format!(
                "theta2 must be nonnegative, got {theta2}"
            )));
        }
        Ok(QuadraticUtility { theta1, theta2 })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    /// Satiation point `θ₂/θ₁`.
    pub fn bliss_point(&self) -> f64 {
        self.theta2 / self.theta1
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::Domain(format!(
                "consumption must be nonnegative, got {x}"
            )));
        }
        Ok(self.value(x))
    }

    /// Maximizes `f(x) + λ·e` over `e ≤ a − x`, `x ≥ 0`. The budget is taken
    /// binding, which is forced for `λ > 0` and a tie-break at `λ = 0`.
    pub fn best_response(&self, a: f64, lambda: f64) -> Result<(f64, f64)> {
        if lambda < 0.0 {
            return Err(Error::UnboundedPayoff(lambda));
        }
        let x = ((self.theta2 - lambda) / self.theta1).max(0.0);
        Ok((x, a - x))
    }
}

impl UtilityFunction for QuadraticUtility {
    fn value(&self, x: f64) -> f64 {
        -0.5 * self.theta1 * x * x + self.theta2 * x
    }

    fn marginal(&self, x: f64) -> f64 {
        self.theta2 - self.theta1 * x
    }
}

/// Sampled concavity test: every second difference on `grid` must be at most
/// `tol` (scaled by the local spacing).
pub fn concavity_check<U: UtilityFunction + ?Sized>(f: &U, grid: &[f64], tol: f64) -> Result<bool> {
    if grid.len() < 3 {
        return Err(Error::Precondition(
            "concavity check needs at least 3 grid points".into(),
        ));
    }
    if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition(
            "grid must be nonnegative and strictly increasing".into(),
        ));
    }
    let concave = grid.windows(3).all(|w| {
        let (x0, x1, x2) = (w[0], w[1], w[2]);
        let slope_left = (f.value(x1) - f.value(x0)) / (x1 - x0);
        let slope_right = (f.value(x2) - f.value(x1)) / (x2 - x1);
        slope_right - slope_left <= tol
    });
    Ok(concave)
}

/// Largest payoff `f(x) + λ(a − x)` over `x ∈ [0, x_hi]`, found by golden
/// section search. Used for utilities without a closed-form response.
pub fn numeric_best_payoff<U: UtilityFunction + ?Sized>(
    f: &U,
    a: f64,
    lambda: f64,
    x_hi: f64,
) -> f64 {
    let payoff = |x: f64| f.value(x) + lambda * (a - x);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, x_hi.max(0.0));
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (payoff(c), payoff(d));
    for _ in 0..200 {
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = payoff(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = payoff(d);
        }
    }
    [payoff(0.0), payoff(x_hi.max(0.0)), payoff(0.5 * (lo + hi))]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub a: f64,
    #[serde(flatten)]
    pub utility: QuadraticUtility,
}

impl AgentProfile {
    pub fn new(a: f64, theta1: f64, theta2: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!(
                "endowment must be nonnegative, got {a}"
            )));
        }
        Ok(AgentProfile {
            a,
            utility: QuadraticUtility::new(theta1, theta2)?,
        })
    }
}

/// A network plus one agent per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceWire")]
pub struct MarketInstance {
    network: FlowNetwork,
    agents: Vec<AgentProfile>,
}

#[derive(Deserialize)]
struct InstanceWire {
    network: FlowNetwork,
    agents: Vec<AgentProfile>,
}

impl TryFrom<InstanceWire> for MarketInstance {
    type Error = Error;
    fn try_from(w: InstanceWire) -> Result<Self> {
        MarketInstance::new(w.network, w.agents)
    }
}

impl MarketInstance {
    pub fn new(network: FlowNetwork, agents: Vec<AgentProfile>) -> Result<Self> {
        if agents.len() != network.node_count() {
            return Err(Error::dim("agent list", network.node_count(), agents.len()));
        }
        if let Some(i) = agents.iter().position(|ag| !(ag.a >= 0.0)) {
            return Err(Error::Domain(format!(
                "agent {} has a negative endowment",
                i + 1
            )));
        }
        Ok(MarketInstance { network, agents })
    }

    pub fn network(&self) -> &FlowNetwork {
        &self.network
    }

    pub fn agents(&self) -> &[AgentProfile] {
        &self.agents
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    /// System resource capacity `C = Σ aᵢ`.
    pub fn total_endowment(&self) -> f64 {
        self.agents.iter().map(|ag| ag.a).sum()
    }

    pub fn with_network(&self, network: FlowNetwork) -> Result<Self> {
        MarketInstance::new(network, self.agents.clone())
    }

    pub fn with_agents(&self, agents: Vec<AgentProfile>) -> Result<Self> {
        MarketInstance::new(self.network.clone(), agents)
    }
}

/// Uniform sampling ranges for random agent populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentRanges {
    pub a: [f64; 2],
    pub theta1: [f64; 2],
    pub theta2: [f64; 2],
}

pub(crate) fn draw<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// i.i.d. agents, deterministic per seed. Drawn from a stream independent of
/// the network stream so both can be varied separately.
pub fn random_agents(n: usize, ranges: &AgentRanges, seed: u64) -> Result<Vec<AgentProfile>> {
    let mut rng = rng::seeded(seed, rng::stream::AGENTS);
    (0..n)
        .map(|_| {
            let a = draw(&mut rng, ranges.a);
            let t1 = draw(&mut rng, ranges.theta1);
            let t2 = draw(&mut rng, ranges.theta2);
            AgentProfile::new(a, t1, t2)
        })
        .collect()
}
