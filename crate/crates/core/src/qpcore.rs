//! Convex quadratic programs with diagonal curvature.
//!
//! ```text
//! minimize    ½·Σ hⱼ zⱼ² + cᵀz + c₀
//! subject to  A z  = b         (dual ν, free)
//!             G z ≤ h          (dual λ ≥ 0)
//!             l ≤ z ≤ u        (duals μₗ, μᵤ ≥ 0)
//! ```
//!
//! Multipliers follow `L = f(z) + νᵀ(Az − b) + λᵀ(Gz − h) + μₗᵀ(l − z) + μᵤᵀ(z − u)`.
//!
//! [`solve`] is a Mehrotra predictor-corrector primal-dual interior-point
//! method on dense matrices. Linearly dependent equality rows are detected
//! up front; consistent ones are dropped and get a zero multiplier.
//! [`brute_force_qp`] is an independent lattice-search oracle for small
//! programs and never touches the interior-point code.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexProgram {
    /// Diagonal of the Hessian, entrywise ≥ 0.
    pub curvature: Vec<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub eq: Vec<LinearConstraint>,
    /// Rows read as `coeffs·z ≤ rhs`.
    pub ineq: Vec<LinearConstraint>,
    /// `-inf` when absent.
    pub lower: Vec<f64>,
    /// `+inf` when absent.
    pub upper: Vec<f64>,
}

impl ConvexProgram {
    pub fn new(curvature: Vec<f64>, linear: Vec<f64>) -> Result<Self> {
        if curvature.len() != linear.len() {
            return Err(Error::dim("linear term", curvature.len(), linear.len()));
        }
        if let Some(j) = curvature.iter().position(|&h| !(h >= 0.0)) {
            return Err(Error::InvalidProgram(format!(
                "curvature of variable {j} is {} (must be >= 0)",
                curvature[j]
            )));
        }
        let nv = curvature.len();
        Ok(ConvexProgram {
            curvature,
            linear,
            constant: 0.0,
            eq: Vec::new(),
            ineq: Vec::new(),
            lower: vec![f64::NEG_INFINITY; nv],
            upper: vec![f64::INFINITY; nv],
        })
    }

    /// Pure linear objective.
    pub fn linear(linear: Vec<f64>) -> Self {
        let nv = linear.len();
        ConvexProgram::new(vec![0.0; nv], linear).expect("zero curvature is valid")
    }

    pub fn num_vars(&self) -> usize {
        self.curvature.len()
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::dim("equality row", self.num_vars(), coeffs.len()));
        }
        self.eq.push(LinearConstraint { coeffs, rhs });
        Ok(())
    }

    pub fn add_ineq(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::dim("inequality row", self.num_vars(), coeffs.len()));
        }
        self.ineq.push(LinearConstraint { coeffs, rhs });
        Ok(())
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) -> Result<()> {
        if j >= self.num_vars() {
            return Err(Error::InvalidProgram(format!("no variable {j}")));
        }
        if lower > upper {
            return Err(Error::InvalidProgram(format!(
                "bounds [{lower}, {upper}] are empty"
            )));
        }
        self.lower[j] = lower;
        self.upper[j] = upper;
        Ok(())
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        self.constant
            + z.iter()
                .zip(&self.curvature)
                .zip(&self.linear)
                .map(|((&zj, &h), &c)| 0.5 * h * zj * zj + c * zj)
                .sum::<f64>()
    }

    /// Copy with the objective multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.curvature.iter_mut().for_each(|h| *h *= factor);
        p.linear.iter_mut().for_each(|c| *c *= factor);
        p.constant *= factor;
        p
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.num_vars();
        if self.linear.len() != nv {
            return Err(Error::dim("linear term", nv, self.linear.len()));
        }
        if self.lower.len() != nv || self.upper.len() != nv {
            return Err(Error::dim(
                "bound vector",
                nv,
                self.lower.len().min(self.upper.len()),
            ));
        }
        if self.curvature.iter().any(|&h| !(h >= 0.0)) {
            return Err(Error::InvalidProgram("negative curvature".into()));
        }
        for row in self.eq.iter().chain(&self.ineq) {
            if row.coeffs.len() != nv {
                return Err(Error::dim("constraint row", nv, row.coeffs.len()));
            }
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidProgram("empty variable bounds".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Duals {
    pub eq: Vec<f64>,
    pub ineq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Max-norm KKT residuals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub eq_violation: f64,
    pub ineq_violation: f64,
    /// Largest `|multiplier × slack|` over inequalities and bounds.
    pub complementarity: f64,
    /// Smallest sign-constrained multiplier (should be ≥ 0).
    pub min_dual: f64,
    /// Sum of all complementarity products.
    pub gap: f64,
}

impl KktResiduals {
    pub fn worst(&self) -> f64 {
        self.stationarity
            .max(self.eq_violation)
            .max(self.ineq_violation)
            .max(self.complementarity)
            .max(-self.min_dual)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub duals: Duals,
    pub objective_value: f64,
    pub kkt: KktResiduals,
    pub iterations: usize,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Errors unless the status is optimal.
    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            status => Err(Error::SolverStatus { status }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Starting primal point; `None` uses a least-squares start.
    pub start: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 200,
            start: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolveOptions {
            tol,
            ..Default::default()
        }
    }
}

pub fn kkt_residuals(p: &ConvexProgram, z: &[f64], duals: &Duals) -> Result<KktResiduals> {
    let nv = p.num_vars();
    if z.len() != nv {
        return Err(Error::dim("primal", nv, z.len()));
    }
    if duals.eq.len() != p.eq.len() {
        return Err(Error::dim("equality duals", p.eq.len(), duals.eq.len()));
    }
    if duals.ineq.len() != p.ineq.len() {
        return Err(Error::dim(
            "inequality duals",
            p.ineq.len(),
            duals.ineq.len(),
        ));
    }
    if duals.lower.len() != nv || duals.upper.len() != nv {
        return Err(Error::dim(
            "bound duals",
            nv,
            duals.lower.len().min(duals.upper.len()),
        ));
    }

    let mut grad: Vec<f64> = (0..nv)
        .map(|j| p.curvature[j] * z[j] + p.linear[j])
        .collect();
    let mut r = KktResiduals {
        min_dual: f64::INFINITY,
        ..Default::default()
    };

    for (row, &nu) in p.eq.iter().zip(&duals.eq) {
        axpy(&mut grad, nu, &row.coeffs);
        r.eq_violation = r.eq_violation.max((dot(&row.coeffs, z) - row.rhs).abs());
    }
    for (row, &lam) in p.ineq.iter().zip(&duals.ineq) {
        axpy(&mut grad, lam, &row.coeffs);
        let viol = dot(&row.coeffs, z) - row.rhs;
        r.ineq_violation = r.ineq_violation.max(viol);
        let prod = (lam * viol).abs();
        r.complementarity = r.complementarity.max(prod);
        r.gap += prod;
        r.min_dual = r.min_dual.min(lam);
    }
    for j in 0..nv {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        let (ml, mu) = (duals.lower[j], duals.upper[j]);
        grad[j] += mu - ml;
        if lo.is_finite() {
            r.ineq_violation = r.ineq_violation.max(lo - z[j]);
            let prod = (ml * (z[j] - lo)).abs();
            r.complementarity = r.complementarity.max(prod);
            r.gap += prod;
            r.min_dual = r.min_dual.min(ml);
        } else {
            r.stationarity = r.stationarity.max(ml.abs());
        }
        if hi.is_finite() {
            r.ineq_violation = r.ineq_violation.max(z[j] - hi);
            let prod = (mu * (hi - z[j])).abs();
            r.complementarity = r.complementarity.max(prod);
            r.gap += prod;
            r.min_dual = r.min_dual.min(mu);
        } else {
            r.stationarity = r.stationarity.max(mu.abs());
        }
    }
    r.stationarity = grad.iter().fold(r.stationarity, |acc, g| acc.max(g.abs()));
    if !r.min_dual.is_finite() {
        r.min_dual = 0.0;
    }
    Ok(r)
}

/// Wolfe dual value `−½ zᵀHz − bᵀν − hᵀλ − uᵀμᵤ + lᵀμₗ + c₀`, equal to the
/// primal objective at a KKT point.
pub fn dual_objective(p: &ConvexProgram, z: &[f64], duals: &Duals) -> f64 {
    let quad: f64 = z
        .iter()
        .zip(&p.curvature)
        .map(|(&zj, &h)| 0.5 * h * zj * zj)
        .sum();
    let eq: f64 = p.eq.iter().zip(&duals.eq).map(|(r, &nu)| r.rhs * nu).sum();
    let ineq: f64 = p
        .ineq
        .iter()
        .zip(&duals.ineq)
        .map(|(r, &lam)| r.rhs * lam)
        .sum();
    let bounds: f64 = (0..p.num_vars())
        .map(|j| {
            let lo = if p.lower[j].is_finite() {
                p.lower[j] * duals.lower[j]
            } else {
                0.0
            };
            let hi = if p.upper[j].is_finite() {
                p.upper[j] * duals.upper[j]
            } else {
                0.0
            };
            lo - hi
        })
        .sum();
    p.constant - quad - eq - ineq + bounds
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[derive(Debug, Clone, Copy)]
enum EqOrigin {
    Row(usize),
    Fixed(usize),
}

#[derive(Debug, Clone, Copy)]
enum IneqOrigin {
    Row(usize),
    Lower(usize),
    Upper(usize),
}

/// Internal form `A z = b`, `G z ≤ h` with independent equality rows.
struct StandardForm {
    hess: DVector<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    eq_origin: Vec<EqOrigin>,
    ineq_origin: Vec<IneqOrigin>,
}

type Step = (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>);

enum Reduction {
    Ready(Box<StandardForm>),
    Inconsistent,
}

fn standard_form(p: &ConvexProgram) -> Reduction {
    let nv = p.num_vars();
    let mut rows: Vec<(Vec<f64>, f64, EqOrigin)> =
        p.eq.iter()
            .enumerate()
            .map(|(i, r)| (r.coeffs.clone(), r.rhs, EqOrigin::Row(i)))
            .collect();
    for j in 0..nv {
        if p.lower[j] == p.upper[j] {
            let mut e = vec![0.0; nv];
            e[j] = 1.0;
            rows.push((e, p.lower[j], EqOrigin::Fixed(j)));
        }
    }

    // Incremental orthonormal basis of kept rows (Gram–Schmidt, twice).
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped: Vec<usize> = Vec::new();
    for (idx, (coeffs, _, _)) in rows.iter().enumerate() {
        let norm = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            dropped.push(idx);
            continue;
        }
        let mut v: Vec<f64> = coeffs.iter().map(|x| x / norm).collect();
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(q, &v);
                axpy(&mut v, -proj, q);
            }
        }
        let rem = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rem <= 1e-9 {
            dropped.push(idx);
        } else {
            v.iter_mut().for_each(|x| *x /= rem);
            basis.push(v);
            kept.push(idx);
        }
    }

    let a = DMatrix::from_fn(kept.len(), nv, |r, j| rows[kept[r]].0[j]);
    let b = DVector::from_iterator(kept.len(), kept.iter().map(|&k| rows[k].1));
    if !dropped.is_empty() {
        let at = a.transpose();
        let svd = at.clone().svd(true, true);
        for &d in &dropped {
            let (coeffs, rhs, _) = &rows[d];
            let target = DVector::from_column_slice(coeffs);
            let combo = if kept.is_empty() {
                DVector::zeros(0)
            } else {
                match svd.solve(&target, 1e-12) {
                    Ok(c) => c,
                    Err(_) => return Reduction::Inconsistent,
                }
            };
            let implied = if kept.is_empty() { 0.0 } else { combo.dot(&b) };
            let scale = 1.0
                + rhs.abs()
                + combo
                    .iter()
                    .zip(b.iter())
                    .map(|(c, b)| (c * b).abs())
                    .sum::<f64>();
            if (implied - rhs).abs() > 1e-9 * scale {
                return Reduction::Inconsistent;
            }
        }
    }

    let mut g_rows: Vec<Vec<f64>> = Vec::new();
    let mut h_vals = Vec::new();
    let mut ineq_origin = Vec::new();
    for (i, r) in p.ineq.iter().enumerate() {
        g_rows.push(r.coeffs.clone());
        h_vals.push(r.rhs);
        ineq_origin.push(IneqOrigin::Row(i));
    }
    for j in 0..nv {
        if p.lower[j] == p.upper[j] {
            continue;
        }
        if p.lower[j].is_finite() {
            let mut e = vec![0.0; nv];
            e[j] = -1.0;
            g_rows.push(e);
            h_vals.push(-p.lower[j]);
            ineq_origin.push(IneqOrigin::Lower(j));
        }
        if p.upper[j].is_finite() {
            let mut e = vec![0.0; nv];
            e[j] = 1.0;
            g_rows.push(e);
            h_vals.push(p.upper[j]);
            ineq_origin.push(IneqOrigin::Upper(j));
        }
    }
    let g = DMatrix::from_fn(g_rows.len(), nv, |r, j| g_rows[r][j]);

    Reduction::Ready(Box::new(StandardForm {
        hess: DVector::from_column_slice(&p.curvature),
        c: DVector::from_column_slice(&p.linear),
        a,
        b,
        g,
        h: DVector::from_vec(h_vals),
        eq_origin: kept.iter().map(|&k| rows[k].2).collect(),
        ineq_origin,
    }))
}

fn map_duals(p: &ConvexProgram, sf: &StandardForm, nu: &DVector<f64>, lam: &DVector<f64>) -> Duals {
    let nv = p.num_vars();
    let mut d = Duals {
        eq: vec![0.0; p.eq.len()],
        ineq: vec![0.0; p.ineq.len()],
        lower: vec![0.0; nv],
        upper: vec![0.0; nv],
    };
    for (k, origin) in sf.eq_origin.iter().enumerate() {
        match *origin {
            EqOrigin::Row(i) => d.eq[i] = nu[k],
            EqOrigin::Fixed(j) => {
                d.upper[j] = nu[k].max(0.0);
                d.lower[j] = (-nu[k]).max(0.0);
            }
        }
    }
    for (k, origin) in sf.ineq_origin.iter().enumerate() {
        match *origin {
            IneqOrigin::Row(i) => d.ineq[i] = lam[k],
            IneqOrigin::Lower(j) => d.lower[j] = lam[k],
            IneqOrigin::Upper(j) => d.upper[j] = lam[k],
        }
    }
    d
}

/// Solves `[K Aᵀ; A 0] [dz; dν] = [r1; r2]` with full-pivot LU and one step
/// of iterative refinement.
fn solve_augmented(
    k: &DMatrix<f64>,
    a: &DMatrix<f64>,
    r1: &DVector<f64>,
    r2: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let (nv, p) = (k.nrows(), a.nrows());
    let mut m = DMatrix::zeros(nv + p, nv + p);
    m.view_mut((0, 0), (nv, nv)).copy_from(k);
    m.view_mut((0, nv), (nv, p)).copy_from(&a.transpose());
    m.view_mut((nv, 0), (p, nv)).copy_from(a);
    let mut rhs = DVector::zeros(nv + p);
    rhs.rows_mut(0, nv).copy_from(r1);
    rhs.rows_mut(nv, p).copy_from(r2);

    let lu = m.clone().full_piv_lu();
    let mut x = lu.solve(&rhs)?;
    for _ in 0..2 {
        let res = &rhs - &m * &x;
        if let Some(dx) = lu.solve(&res) {
            x += dx;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((x.rows(0, nv).into_owned(), x.rows(nv, p).into_owned()))
}

/// Proximal weight of the crossover solve; keeps directions the active
/// set leaves undetermined (circulations, free trades) at the interior point.
const CROSSOVER_PROX: f64 = 1e-10;

/// Guesses the active set from an interior iterate, solves the equality
/// constrained problem on it and retries with violated rows added or
/// negative multipliers dropped.
fn crossover(
    sf: &StandardForm,
    z0: &DVector<f64>,
    s0: &DVector<f64>,
    l0: &DVector<f64>,
    tol: f64,
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let (nv, ne, mi) = (sf.hess.len(), sf.a.nrows(), sf.g.nrows());
    let mut active: Vec<bool> = (0..mi).map(|i| s0[i] <= l0[i]).collect();
    let k = DMatrix::from_diagonal(&sf.hess.add_scalar(CROSSOVER_PROX));
    let r1 = -&sf.c + CROSSOVER_PROX * z0;
    for _ in 0..4 {
        let rows: Vec<usize> = (0..mi).filter(|&i| active[i]).collect();
        let mut a = DMatrix::zeros(ne + rows.len(), nv);
        let mut b = DVector::zeros(ne + rows.len());
        a.view_mut((0, 0), (ne, nv)).copy_from(&sf.a);
        b.rows_mut(0, ne).copy_from(&sf.b);
        for (r, &i) in rows.iter().enumerate() {
            a.row_mut(ne + r).copy_from(&sf.g.row(i));
            b[ne + r] = sf.h[i];
        }
        let (z, mult) = solve_augmented(&k, &a, &r1, &b)?;
        let mut lam = DVector::zeros(mi);
        for (r, &i) in rows.iter().enumerate() {
            lam[i] = mult[ne + r];
        }
        let slack = &sf.h - &sf.g * &z;
        let mut changed = false;
        for i in 0..mi {
            let scale = 1.0 + sf.h[i].abs();
            if active[i] && lam[i] < -tol {
                active[i] = false;
                changed = true;
            } else if !active[i] && slack[i] < -tol * scale {
                active[i] = true;
                changed = true;
            }
        }
        if !changed {
            lam.iter_mut().for_each(|v| *v = v.max(0.0));
            return Some((z, mult.rows(0, ne).into_owned(), lam));
        }
    }
    None
}

/// Complementarity gap below which each iterate is also tried as an
/// active-set guess.
const CROSSOVER_GAP: f64 = 1e-2;

/// Gap, relative to the requested tolerance, at which iteration stops.
const POLISH_GAP: f64 = 1e-6;

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

pub fn solve(p: &ConvexProgram, opts: &SolveOptions) -> Result<SolveReport> {
    p.validate()?;
    let nv = p.num_vars();
    let sf = match standard_form(p) {
        Reduction::Ready(sf) => *sf,
        Reduction::Inconsistent => {
            return Ok(terminal(p, SolveStatus::Infeasible, vec![0.0; nv], 0))
        }
    };
    let (ne, mi) = (sf.a.nrows(), sf.g.nrows());
    let tol = opts.tol;

    // Starting point.
    let mut z = match &opts.start {
        Some(start) => {
            if start.len() != nv {
                return Err(Error::dim("start point", nv, start.len()));
            }
            DVector::from_column_slice(start)
        }
        None => {
            let k = DMatrix::from_diagonal(&sf.hess) + sf.g.transpose() * &sf.g;
            let r1 = -&sf.c + sf.g.transpose() * &sf.h;
            solve_augmented(&k, &sf.a, &r1, &sf.b)
                .map(|(z, _)| z)
                .unwrap_or_else(|| DVector::zeros(nv))
        }
    };
    let mut nu = DVector::zeros(ne);
    let mut s = DVector::from_fn(mi, |i, _| {
        (sf.h[i] - sf.g.row(i).dot(&z.transpose())).max(1.0)
    });
    let mut lam = DVector::from_element(mi, 1.0);

    let report_at = |z: &DVector<f64>,
                     nu: &DVector<f64>,
                     lam: &DVector<f64>,
                     status,
                     iters|
     -> Result<SolveReport> {
        let duals = map_duals(p, &sf, nu, lam);
        let primal: Vec<f64> = z.iter().copied().collect();
        let kkt = kkt_residuals(p, &primal, &duals)?;
        Ok(SolveReport {
            status,
            objective_value: p.objective(&primal),
            primal,
            duals,
            kkt,
            iterations: iters,
        })
    };

    let mut stalled = 0;
    let mut accepted: Option<SolveReport> = None;
    for iter in 0..opts.max_iter {
        let hz = sf.hess.component_mul(&z);
        let r_d = &hz + &sf.c + sf.a.transpose() * &nu + sf.g.transpose() * &lam;
        let r_e = &sf.a * &z - &sf.b;
        let r_i = &sf.g * &z + &s - &sf.h;
        let mu = if mi > 0 { s.dot(&lam) / mi as f64 } else { 0.0 };

        // Once within tolerance keep going toward a much smaller gap so that
        // degenerate vertices (zero multiplier on an active bound) are
        // resolved to more than √tol in the primal.
        let candidate = report_at(&z, &nu, &lam, SolveStatus::Optimal, iter)?;
        if candidate.kkt.gap <= CROSSOVER_GAP {
            if let Some((zc, nuc, lc)) = crossover(&sf, &z, &s, &lam, tol) {
                let polished = report_at(&zc, &nuc, &lc, SolveStatus::Optimal, iter)?;
                if polished.kkt.within(tol) && polished.kkt.gap <= tol {
                    return Ok(polished);
                }
            }
        }
        if candidate.kkt.within(tol) && candidate.kkt.gap <= tol {
            let done = candidate.kkt.gap <= POLISH_GAP * tol;
            accepted = Some(candidate);
            if done {
                break;
            }
        } else if accepted.is_some() {
            break;
        }

        // Divergence checks.
        let dual_scale = inf_norm(&nu).max(inf_norm(&lam));
        if dual_scale > 1e8 && infeasibility_certificate(&sf, &nu, &lam) {
            return report_at(&z, &nu, &lam, SolveStatus::Infeasible, iter);
        }
        if inf_norm(&z) > 1e9 && unbounded_direction(&sf, &z) {
            return report_at(&z, &nu, &lam, SolveStatus::Unbounded, iter);
        }

        let w = lam.component_div(&s);
        let mut k = DMatrix::from_diagonal(&sf.hess);
        if mi > 0 {
            let gw = DMatrix::from_fn(mi, nv, |i, j| sf.g[(i, j)] * w[i]);
            k += sf.g.transpose() * gw;
        }

        let newton = |r_c: &DVector<f64>| -> Option<Step> {
            let corr = (lam.component_mul(&r_i) - r_c).component_div(&s);
            let r1 = -&r_d - sf.g.transpose() * &corr;
            let r2 = -&r_e;
            let (dz, dnu) = solve_augmented(&k, &sf.a, &r1, &r2)?;
            let ds = -&r_i - &sf.g * &dz;
            let dlam = -(r_c + lam.component_mul(&ds)).component_div(&s);
            Some((dz, dnu, ds, dlam))
        };

        // Predictor.
        let r_c_aff = s.component_mul(&lam);
        let Some((dz_a, _, ds_a, dl_a)) = newton(&r_c_aff) else {
            break;
        };
        let alpha_aff = 1f64.min(max_step(&s, &ds_a)).min(max_step(&lam, &dl_a));
        let sigma = if mi > 0 && mu > 0.0 {
            let mu_aff = (&s + alpha_aff * &ds_a).dot(&(&lam + alpha_aff * &dl_a)) / mi as f64;
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };
        let _ = dz_a;

        // Corrector.
        let r_c = &r_c_aff + ds_a.component_mul(&dl_a) - DVector::from_element(mi, sigma * mu);
        let Some((dz, dnu, ds, dlam)) = newton(&r_c) else {
            break;
        };
        let alpha_max = max_step(&s, &ds).min(max_step(&lam, &dlam));
        let alpha = if alpha_max.is_finite() {
            (0.99 * alpha_max).min(1.0)
        } else {
            1.0
        };

        z += alpha * &dz;
        nu += alpha * &dnu;
        s += alpha * &ds;
        lam += alpha * &dlam;

        if alpha < 1e-10 {
            stalled += 1;
            if stalled > 5 {
                break;
            }
        } else {
            stalled = 0;
        }
    }

    if let Some(report) = accepted {
        return Ok(report);
    }
    let dual_scale = inf_norm(&nu).max(inf_norm(&lam));
    let status = if dual_scale > 1e6 && infeasibility_certificate(&sf, &nu, &lam) {
        SolveStatus::Infeasible
    } else if inf_norm(&z) > 1e6 && unbounded_direction(&sf, &z) {
        SolveStatus::Unbounded
    } else {
        SolveStatus::MaxIter
    };
    report_at(&z, &nu, &lam, status, opts.max_iter)
}

fn terminal(
    p: &ConvexProgram,
    status: SolveStatus,
    primal: Vec<f64>,
    iterations: usize,
) -> SolveReport {
    let nv = p.num_vars();
    SolveReport {
        status,
        objective_value: p.objective(&primal),
        primal,
        duals: Duals {
            eq: vec![0.0; p.eq.len()],
            ineq: vec![0.0; p.ineq.len()],
            lower: vec![0.0; nv],
            upper: vec![0.0; nv],
        },
        kkt: KktResiduals::default(),
        iterations,
    }
}

// Farkas: normalized (ν, λ ≥ 0) with Aᵀν + Gᵀλ ≈ 0 and bᵀν + hᵀλ < 0.
fn infeasibility_certificate(sf: &StandardForm, nu: &DVector<f64>, lam: &DVector<f64>) -> bool {
    let scale = nu.amax().max(lam.amax());
    if scale == 0.0 {
        return false;
    }
    let (nu, lam) = (nu / scale, lam / scale);
    let combo = sf.a.transpose() * &nu + sf.g.transpose() * &lam;
    let value = sf.b.dot(&nu) + sf.h.dot(&lam);
    inf_norm(&combo) <= 1e-6 && value < -1e-8
}

// Recession direction: H d ≈ 0, A d ≈ 0, G d ≤ 0, cᵀd < 0.
fn unbounded_direction(sf: &StandardForm, z: &DVector<f64>) -> bool {
    let d = z / z.amax();
    let hd = sf.hess.component_mul(&d);
    let ad = &sf.a * &d;
    let gd = &sf.g * &d;
    inf_norm(&hd) <= 1e-6
        && inf_norm(&ad) <= 1e-6
        && gd.iter().all(|&v| v <= 1e-6)
        && sf.c.dot(&d) < -1e-9
}

/// Best point found by [`brute_force_qp`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub point: Vec<f64>,
    pub objective: f64,
    pub evaluated: usize,
}

/// Most free coordinates the grid oracle will enumerate.
pub const GRID_MAX_FREE_VARS: usize = 6;

/// Lattice-search oracle. Equality constraints are eliminated by Gauss–Jordan
/// elimination; the remaining free coordinates (at most
/// [`GRID_MAX_FREE_VARS`], each with finite bounds) are enumerated on the
/// lattice `k·step`. The search starts on a coarse lattice over the whole box
/// and halves the step down to `grid_step`, each time scanning a window of
/// ±3 lattice points around the incumbent. Points violating any constraint by
/// more than `1e-9` are discarded.
pub fn brute_force_qp(p: &ConvexProgram, grid_step: f64) -> Result<GridOptimum> {
    p.validate()?;
    if !(grid_step > 0.0) {
        return Err(Error::Precondition("grid step must be positive".into()));
    }
    let nv = p.num_vars();
    let elim = eliminate_equalities(p)?;
    let free = &elim.free;
    if free.len() > GRID_MAX_FREE_VARS {
        return Err(Error::Precondition(format!(
            "{} free variables exceed the grid oracle limit of {GRID_MAX_FREE_VARS}",
            free.len()
        )));
    }
    let boxes: Vec<(f64, f64)> = free.iter().map(|&j| (p.lower[j], p.upper[j])).collect();
    if boxes.iter().any(|(l, u)| !l.is_finite() || !u.is_finite()) {
        return Err(Error::Precondition(
            "grid oracle needs finite bounds on free variables".into(),
        ));
    }

    let extent = boxes.iter().map(|(l, u)| u - l).fold(0.0, f64::max);
    let mut step = grid_step;
    while extent / step > 8.0 {
        step *= 2.0;
    }

    let evaluate = |free_vals: &[f64], z: &mut Vec<f64>| -> Option<f64> {
        elim.expand(free_vals, z);
        feasible(p, z).then(|| p.objective(z))
    };

    let mut z = vec![0.0; nv];
    let mut evaluated = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;

    // Coarse phase: whole box, refine until something feasible shows up.
    loop {
        let ranges: Vec<(i64, i64)> = boxes
            .iter()
            .map(|&(l, u)| {
                (
                    (l / step - 1e-9).ceil() as i64,
                    (u / step + 1e-9).floor() as i64,
                )
            })
            .collect();
        let count: f64 = ranges
            .iter()
            .map(|(a, b)| (b - a + 1).max(0) as f64)
            .product();
        if count > 2e7 {
            return Err(Error::Precondition(
                "grid too large for exhaustive search".into(),
            ));
        }
        scan(&ranges, step, &mut |vals| {
            evaluated += 1;
            if let Some(obj) = evaluate(vals, &mut z) {
                if best.as_ref().is_none_or(|(_, b)| obj < *b) {
                    best = Some((vals.to_vec(), obj));
                }
            }
        });
        if best.is_some() || step <= grid_step {
            break;
        }
        step = (step / 2.0).max(grid_step);
    }
    let Some((mut incumbent, mut best_obj)) = best else {
        return Err(Error::EmptyFeasibleGrid);
    };

    // Refinement phase.
    while step > grid_step {
        step = (step / 2.0).max(grid_step);
        let ranges: Vec<(i64, i64)> = incumbent
            .iter()
            .zip(&boxes)
            .map(|(&c, &(l, u))| {
                let centre = (c / step).round() as i64;
                let lo = ((l / step - 1e-9).ceil() as i64).max(centre - 3);
                let hi = ((u / step + 1e-9).floor() as i64).min(centre + 3);
                (lo, hi)
            })
            .collect();
        let mut next = incumbent.clone();
        scan(&ranges, step, &mut |vals| {
            evaluated += 1;
            if let Some(obj) = evaluate(vals, &mut z) {
                if obj < best_obj {
                    best_obj = obj;
                    next = vals.to_vec();
                }
            }
        });
        incumbent = next;
    }

    elim.expand(&incumbent, &mut z);
    Ok(GridOptimum {
        objective: p.objective(&z),
        point: z,
        evaluated,
    })
}

fn scan(ranges: &[(i64, i64)], step: f64, visit: &mut dyn FnMut(&[f64])) {
    if ranges.iter().any(|(a, b)| b < a) {
        return;
    }
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut vals: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
    loop {
        visit(&vals);
        let mut d = 0;
        loop {
            if d == idx.len() {
                return;
            }
            if idx[d] < ranges[d].1 {
                idx[d] += 1;
                vals[d] = idx[d] as f64 * step;
                break;
            }
            idx[d] = ranges[d].0;
            vals[d] = idx[d] as f64 * step;
            d += 1;
        }
    }
}

fn feasible(p: &ConvexProgram, z: &[f64]) -> bool {
    let slack = |rhs: f64| 1e-9 * (1.0 + rhs.abs());
    z.iter()
        .zip(p.lower.iter().zip(&p.upper))
        .all(|(&v, (&l, &u))| v >= l - slack(l) && v <= u + slack(u))
        && p.ineq
            .iter()
            .all(|r| dot(&r.coeffs, z) <= r.rhs + slack(r.rhs))
}

/// `z_dep = offset − coupling · z_free` from reduced row echelon form.
struct Elimination {
    free: Vec<usize>,
    dependent: Vec<usize>,
    offset: Vec<f64>,
    coupling: Vec<Vec<f64>>,
}

impl Elimination {
    fn expand(&self, free_vals: &[f64], z: &mut [f64]) {
        for (&j, &v) in self.free.iter().zip(free_vals) {
            z[j] = v;
        }
        for (r, &j) in self.dependent.iter().enumerate() {
            z[j] = self.offset[r] - dot(&self.coupling[r], free_vals);
        }
    }
}

fn eliminate_equalities(p: &ConvexProgram) -> Result<Elimination> {
    let nv = p.num_vars();
    let mut rows: Vec<Vec<f64>> =
        p.eq.iter()
            .map(|r| {
                let mut row = r.coeffs.clone();
                row.push(r.rhs);
                row
            })
            .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..nv {
        let Some(best) = (rank..rows.len())
            .max_by(|&a, &b| rows[a][col].abs().partial_cmp(&rows[b][col].abs()).unwrap())
        else {
            break;
        };
        if rows[best][col].abs() <= 1e-12 {
            continue;
        }
        rows.swap(rank, best);
        let pivot = rows[rank][col];
        rows[rank].iter_mut().for_each(|v| *v /= pivot);
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[col] != 0.0 {
                let factor = row[col];
                row.iter_mut()
                    .zip(&pivot_row)
                    .for_each(|(v, p)| *v -= factor * p);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r[nv].abs() > 1e-9) {
        return Err(Error::Infeasible(
            "inconsistent equality constraints".into(),
        ));
    }
    let free: Vec<usize> = (0..nv).filter(|j| !pivots.contains(j)).collect();
    Ok(Elimination {
        offset: (0..rank).map(|r| rows[r][nv]).collect(),
        coupling: (0..rank)
            .map(|r| free.iter().map(|&j| rows[r][j]).collect())
            .collect(),
        dependent: pivots,
        free,
    })
}

/// Result of [`max_slack_lp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaxSlack {
    /// Optimal `t`: the largest uniform margin of `y` from both `0` and `u`.
    pub slack: f64,
    pub flow: Vec<f64>,
}

impl MaxSlack {
    /// Whether `0 ≤ y ≤ u` can realize the target at all.
    pub fn realizable(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

/// `maximize t  s.t.  A_eq·y = b_eq,  t ≤ y_k ≤ u_k − t`.
///
/// `t` is free, so the program is feasible whenever `A_eq·y = b_eq` is; a
/// negative optimum means no `y` in `[0, u]` realizes `b_eq`.
pub fn max_slack_lp(
    a_eq: &DMatrix<f64>,
    b_eq: &[f64],
    upper: &[f64],
    opts: &SolveOptions,
) -> Result<MaxSlack> {
    let m = a_eq.ncols();
    if upper.len() != m {
        return Err(Error::dim("capacity vector", m, upper.len()));
    }
    if b_eq.len() != a_eq.nrows() {
        return Err(Error::dim("right-hand side", a_eq.nrows(), b_eq.len()));
    }
    if upper.iter().any(|&u| !(u > 0.0)) {
        return Err(Error::Precondition("upper bounds must be positive".into()));
    }
    // Variables: y_0..y_{m-1}, t.
    let mut linear = vec![0.0; m + 1];
    linear[m] = -1.0;
    let mut lp = ConvexProgram::linear(linear);
    for (i, &b) in b_eq.iter().enumerate() {
        let mut row: Vec<f64> = a_eq.row(i).iter().copied().collect();
        row.push(0.0);
        lp.add_eq(row, b)?;
    }
    for (k, &u) in upper.iter().enumerate() {
        let mut low = vec![0.0; m + 1];
        low[k] = -1.0;
        low[m] = 1.0;
        lp.add_ineq(low, 0.0)?;
        let mut high = vec![0.0; m + 1];
        high[k] = 1.0;
        high[m] = 1.0;
        lp.add_ineq(high, u)?;
    }
    let report = solve(&lp, opts)?;
    match report.status {
        SolveStatus::Optimal => Ok(MaxSlack {
            slack: report.primal[m],
            flow: report.primal[..m].to_vec(),
        }),
        SolveStatus::Infeasible => Err(Error::Infeasible("flow equations have no solution".into())),
        status => Err(Error::SolverStatus { status }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn above_one() -> ConvexProgram {
        // minimize z² s.t. −z ≤ −1
        let mut p = ConvexProgram::new(vec![2.0], vec![0.0]).unwrap();
        p.add_ineq(vec![-1.0], -1.0).unwrap();
        p
    }

    fn no_duals(p: &ConvexProgram) -> Duals {
        Duals {
            eq: vec![0.0; p.eq.len()],
            ineq: vec![0.0; p.ineq.len()],
            lower: vec![0.0; p.num_vars()],
            upper: vec![0.0; p.num_vars()],
        }
    }

    #[test]
    fn squared_above_one() {
        let r = solve(&above_one(), &SolveOptions::default()).unwrap();
        assert!(r.is_optimal());
        assert!((r.primal[0] - 1.0).abs() < 1e-8);
        assert!((r.duals.ineq[0] - 2.0).abs() < 1e-7);
        assert!(r.kkt.within(1e-8));
    }

    #[test]
    fn vacuous_objective_with_equality() {
        let mut p = ConvexProgram::linear(vec![0.0]);
        p.add_eq(vec![1.0], 5.0).unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert!(r.is_optimal());
        assert!((r.primal[0] - 5.0).abs() < 1e-10);
        assert!(r.duals.eq[0].abs() < 1e-10);
    }

    fn degenerate_two_agent() -> ConvexProgram {
        // maximize −½x₁² + 4x₁ − ½x₂² + 2x₂ s.t. x₁ + x₂ = 2, x ≥ 0
        let mut p = ConvexProgram::new(vec![1.0, 1.0], vec![-4.0, -2.0]).unwrap();
        p.add_eq(vec![1.0, 1.0], 2.0).unwrap();
        for j in 0..2 {
            p.set_bounds(j, 0.0, 10.0).unwrap();
        }
        p
    }

    #[test]
    fn degenerate_instance_matches_grid_oracle() {
        let p = degenerate_two_agent();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert!(r.is_optimal());
        assert!((r.primal[0] - 2.0).abs() < 1e-7 && r.primal[1].abs() < 1e-7);
        let g = brute_force_qp(&p, 0.01).unwrap();
        assert!((g.point[0] - 2.0).abs() <= 0.01 && g.point[1].abs() <= 0.01);
    }

    #[test]
    fn kkt_at_exact_point_is_zero() {
        let p = above_one();
        let mut d = no_duals(&p);
        d.ineq[0] = 2.0;
        let r = kkt_residuals(&p, &[1.0], &d).unwrap();
        assert_eq!(r.worst(), 0.0);
    }

    #[test]
    fn stationarity_grows_linearly_with_perturbation() {
        let p = above_one();
        let mut d = no_duals(&p);
        d.ineq[0] = 2.0;
        for &delta in &[1e-4, 1e-3, 1e-2, 1e-1] {
            let r = kkt_residuals(&p, &[1.0 + delta], &d).unwrap();
            // d/dz of z² is 2z, so the residual is 2δ.
            assert!((r.stationarity / delta - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_point_shows_primal_violation() {
        let p = above_one();
        let r = kkt_residuals(&p, &[0.25], &no_duals(&p)).unwrap();
        assert!((r.ineq_violation - 0.75).abs() < 1e-15);
        assert!(kkt_residuals(&p, &[0.0, 1.0], &no_duals(&p)).is_err());
    }

    #[test]
    fn grid_oracle_examples() {
        let mut p = above_one();
        p.set_bounds(0, -5.0, 5.0).unwrap();
        let g = brute_force_qp(&p, 0.01).unwrap();
        assert!((0.99..=1.01).contains(&g.point[0]));

        let mut flat = ConvexProgram::linear(vec![0.0, 0.0]);
        flat.constant = 3.5;
        flat.set_bounds(0, 0.0, 1.0).unwrap();
        flat.set_bounds(1, 0.0, 1.0).unwrap();
        flat.add_ineq(vec![1.0, 1.0], 1.0).unwrap();
        let g = brute_force_qp(&flat, 0.01).unwrap();
        assert_eq!(g.objective, 3.5);
        assert!(g.point[0] + g.point[1] <= 1.0 + 1e-9);
    }

    #[test]
    fn grid_oracle_errors() {
        let mut p = ConvexProgram::linear(vec![1.0]);
        p.set_bounds(0, 0.0, 1.0).unwrap();
        p.add_ineq(vec![1.0], -1.0).unwrap();
        assert!(matches!(
            brute_force_qp(&p, 0.01),
            Err(Error::EmptyFeasibleGrid)
        ));
        let unbounded = ConvexProgram::linear(vec![1.0]);
        assert!(matches!(
            brute_force_qp(&unbounded, 0.01),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn detects_infeasible_program() {
        let mut p = ConvexProgram::new(vec![1.0], vec![0.0]).unwrap();
        p.add_ineq(vec![1.0], 0.0).unwrap();
        p.add_ineq(vec![-1.0], -1.0).unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);

        let mut q = ConvexProgram::linear(vec![0.0, 0.0]);
        q.add_eq(vec![1.0, 1.0], 1.0).unwrap();
        q.add_eq(vec![2.0, 2.0], 3.0).unwrap();
        let r = solve(&q, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded_program() {
        let mut p = ConvexProgram::linear(vec![-1.0]);
        p.set_bounds(0, 0.0, f64::INFINITY).unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
        assert!(r.require_optimal().is_err());
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut p = ConvexProgram::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        p.add_eq(vec![1.0, 1.0], 2.0).unwrap();
        p.add_eq(vec![2.0, 2.0], 4.0).unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert!(r.is_optimal());
        assert!((r.primal[0] - 1.0).abs() < 1e-8);
        assert_eq!(r.duals.eq[1], 0.0);
    }

    #[test]
    fn fixed_variable_bounds() {
        let mut p = ConvexProgram::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        p.set_bounds(1, 2.0, 2.0).unwrap();
        p.set_bounds(0, -1.0, 1.0).unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert!(r.is_optimal());
        assert!((r.primal[1] - 2.0).abs() < 1e-10);
        assert!((r.duals.lower[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn max_slack_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let r = max_slack_lp(&a, &[0.0, 0.0], &[1.0, 1.0], &SolveOptions::default()).unwrap();
        assert!((r.slack - 0.5).abs() < 1e-8);
        assert!((r.flow[0] - 0.5).abs() < 1e-6 && (r.flow[1] - 0.5).abs() < 1e-6);

        let single = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let r = max_slack_lp(&single, &[1.0, -1.0], &[1.0], &SolveOptions::default()).unwrap();
        assert!(r.slack.abs() < 1e-8);
        assert!(r.realizable(1e-8));

        let r = max_slack_lp(&single, &[2.0, -2.0], &[1.0], &SolveOptions::default()).unwrap();
        assert!(!r.realizable(1e-8));

        let err = max_slack_lp(&single, &[1.0, 0.0], &[1.0], &SolveOptions::default());
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }
}
