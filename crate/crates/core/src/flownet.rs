//! Directed capacitated flow networks.
//!
//! Nodes are 0-based in memory and 1-based on the wire. Arc order is fixed
//! at construction: flow, capacity and congestion-dual vectors all align to it.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Maximum number of Erdős–Rényi draws before giving up on connectivity.
pub const ER_RETRY_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkWire", into = "NetworkWire")]
pub struct FlowNetwork {
    n: usize,
    arcs: Vec<(usize, usize)>,
    capacities: Vec<f64>,
}

/// JSON shape: `{"n": 3, "arcs": [[1,2],[2,3]], "u": [1.0, 2.0]}`.
#[derive(Serialize, Deserialize)]
struct NetworkWire {
    n: usize,
    arcs: Vec<[usize; 2]>,
    u: Vec<f64>,
}

impl TryFrom<NetworkWire> for FlowNetwork {
    type Error = Error;

    fn try_from(w: NetworkWire) -> Result<Self> {
        let mut arcs = Vec::with_capacity(w.arcs.len());
        for [tail, head] in w.arcs {
            if tail == 0 || head == 0 {
                return Err(Error::InvalidNetwork(
                    "node indices are 1-based on the wire".into(),
                ));
            }
            arcs.push((tail - 1, head - 1));
        }
        FlowNetwork::new(w.n, arcs, w.u)
    }
}

impl From<FlowNetwork> for NetworkWire {
    fn from(net: FlowNetwork) -> Self {
        NetworkWire {
            n: net.n,
            arcs: net.arcs.iter().map(|&(t, h)| [t + 1, h + 1]).collect(),
            u: net.capacities,
        }
    }
}

/// Node-arc incidence matrix and its sign-split parts.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceSet {
    /// +1 at the tail row, −1 at the head row of each column.
    pub a: DMatrix<f64>,
    pub a_plus: DMatrix<f64>,
    pub a_minus: DMatrix<f64>,
}

impl FlowNetwork {
    /// Builds a network from 0-based arcs, checking positivity of
    /// capacities, absence of self-loops and connectivity.
    pub fn new(n: usize, arcs: Vec<(usize, usize)>, capacities: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidNetwork(
                "network needs at least one node".into(),
            ));
        }
        if arcs.len() != capacities.len() {
            return Err(Error::dim("capacity vector", arcs.len(), capacities.len()));
        }
        for (k, &(t, h)) in arcs.iter().enumerate() {
            if t >= n || h >= n {
                return Err(Error::NodeIndex { index: t.max(h), n });
            }
            if t == h {
                return Err(Error::InvalidNetwork(format!(
                    "arc {} is a self-loop",
                    k + 1
                )));
            }
        }
        if let Some(k) = capacities
            .iter()
            .position(|&u| !(u > 0.0) || !u.is_finite())
        {
            return Err(Error::InvalidNetwork(format!(
                "arc {} has non-positive capacity {}",
                k + 1,
                capacities[k]
            )));
        }
        if !undirected_connected(n, &arcs) {
            return Err(Error::InvalidNetwork(
                "underlying graph is not connected".into(),
            ));
        }
        Ok(FlowNetwork {
            n,
            arcs,
            capacities,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// 0-based `(tail, head)` pairs.
    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    /// Same topology with a different capacity vector.
    pub fn with_capacities(&self, capacities: Vec<f64>) -> Result<Self> {
        FlowNetwork::new(self.n, self.arcs.clone(), capacities)
    }

    /// Same topology with every capacity set to `u`.
    pub fn with_uniform_capacity(&self, u: f64) -> Result<Self> {
        self.with_capacities(vec![u; self.arcs.len()])
    }

    pub fn incidence(&self) -> IncidenceSet {
        build_incidence(self)
    }

    /// Net outflow per node, `e = A·y`.
    pub fn net_flow(&self, y: &[f64]) -> Result<Vec<f64>> {
        net_flow(self, y)
    }

    /// `(A⁻ᵢ·u, A⁺ᵢ·u)`: minus total incoming capacity, total outgoing capacity.
    pub fn capacity_bounds(&self, i: usize) -> Result<(f64, f64)> {
        capacity_bounds(self, i)
    }

    /// `Σᵢ qᵢ A_ik` for every arc, i.e. `q_tail − q_head`.
    pub fn transpose_apply(&self, q: &[f64]) -> Vec<f64> {
        self.arcs.iter().map(|&(t, h)| q[t] - q[h]).collect()
    }

    /// True when node 0 is the center and arcs follow the canonical star
    /// order: `k ↦ (0, k+1)` for the first `n−1`, then `n−1+k ↦ (k+1, 0)`.
    pub fn is_canonical_star(&self) -> bool {
        let leaves = self.n.saturating_sub(1);
        if self.n < 2 || self.arcs.len() != 2 * leaves {
            return false;
        }
        (0..leaves).all(|k| self.arcs[k] == (0, k + 1) && self.arcs[leaves + k] == (k + 1, 0))
    }
}

pub fn build_incidence(net: &FlowNetwork) -> IncidenceSet {
    let (n, m) = (net.n, net.arcs.len());
    let mut a_plus = DMatrix::zeros(n, m);
    let mut a_minus = DMatrix::zeros(n, m);
    for (k, &(t, h)) in net.arcs.iter().enumerate() {
        a_plus[(t, k)] = 1.0;
        a_minus[(h, k)] = -1.0;
    }
    IncidenceSet {
        a: &a_plus + &a_minus,
        a_plus,
        a_minus,
    }
}

pub fn net_flow(net: &FlowNetwork, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != net.arcs.len() {
        return Err(Error::dim("flow vector", net.arcs.len(), y.len()));
    }
    let mut e = vec![0.0; net.n];
    for (&(t, h), &yk) in net.arcs.iter().zip(y) {
        e[t] += yk;
        e[h] -= yk;
    }
    Ok(e)
}

pub fn capacity_bounds(net: &FlowNetwork, i: usize) -> Result<(f64, f64)> {
    if i >= net.n {
        return Err(Error::NodeIndex { index: i, n: net.n });
    }
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (&(t, h), &u) in net.arcs.iter().zip(&net.capacities) {
        if t == i {
            upper += u;
        }
        if h == i {
            lower -= u;
        }
    }
    Ok((lower, upper))
}

/// G(n, M) Erdős–Rényi network: exactly `edges` undirected edges, each
/// realized as two antiparallel arcs with independent capacities drawn
/// uniformly from `[cap_low, cap_high)`. Redraws the topology until it is
/// connected.
pub fn generate_er(
    n: usize,
    edges: usize,
    cap_low: f64,
    cap_high: f64,
    seed: u64,
) -> Result<FlowNetwork> {
    if n == 0 || edges + 1 < n {
        return Err(Error::InfeasibleConnectivity { n, edges });
    }
    let pairs = n * (n - 1) / 2;
    if edges > pairs {
        return Err(Error::Precondition(format!(
            "{edges} edges exceed the {pairs} node pairs of a simple graph"
        )));
    }
    if !(cap_high > cap_low && cap_low >= 0.0) {
        return Err(Error::Precondition(format!(
            "capacity range [{cap_low}, {cap_high}] must satisfy 0 <= low < high"
        )));
    }

    let mut rng = rng::seeded(seed, rng::stream::NETWORK);
    for _ in 0..ER_RETRY_LIMIT {
        let mut chosen = index::sample(&mut rng, pairs, edges).into_vec();
        chosen.sort_unstable();
        let mut arcs = Vec::with_capacity(2 * edges);
        for idx in chosen {
            let (i, j) = pair_from_index(n, idx);
            arcs.push((i, j));
            arcs.push((j, i));
        }
        if !undirected_connected(n, &arcs) {
            continue;
        }
        let capacities = (0..arcs.len())
            .map(|_| loop {
                let u = rng.gen_range(cap_low..cap_high);
                if u > 0.0 {
                    break u;
                }
            })
            .collect();
        return FlowNetwork::new(n, arcs, capacities);
    }
    Err(Error::GenerationFailed {
        attempts: ER_RETRY_LIMIT,
    })
}

/// Canonical star: node 0 is the center, arc `k` runs center → leaf `k+1`
/// and arc `n−1+k` runs leaf `k+1` → center.
pub fn star_graph(n: usize, capacities: Vec<f64>) -> Result<FlowNetwork> {
    if n < 2 {
        return Err(Error::InvalidNetwork(
            "a star needs at least two nodes".into(),
        ));
    }
    let leaves = n - 1;
    if capacities.len() != 2 * leaves {
        return Err(Error::dim(
            "star capacity vector",
            2 * leaves,
            capacities.len(),
        ));
    }
    let arcs = (1..n)
        .map(|leaf| (0, leaf))
        .chain((1..n).map(|leaf| (leaf, 0)))
        .collect();
    FlowNetwork::new(n, arcs, capacities)
}

// Row-major enumeration of pairs i < j.
fn pair_from_index(n: usize, mut idx: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if idx < row {
            return (i, i + 1 + idx);
        }
        idx -= row;
        i += 1;
    }
}

pub(crate) fn undirected_connected(n: usize, arcs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(t, h) in arcs {
        adj[t].push(h);
        adj[h].push(t);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}
