//! Log-barrier interior-point solver for small dense concave maximization
//! under affine inequality constraints.
//!
//! Solves `maximize f(x) subject to A x <= b` for smooth concave `f`
//! (including the linear case) with a path-following barrier method:
//! damped Newton centering of `t f(x) + sum_j ln(b_j - a_j x)` and a
//! geometric increase of `t` until the duality-gap bound `m/t` and the
//! KKT stationarity residual drop below the requested tolerance.
//!
//! Every instance in this crate has at most a few dozen variables, so all
//! linear algebra is dense.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{conv, conv_usize, Real};

/// Objective oracle for [`solve_concave_affine`]: value, gradient and
/// Hessian of a concave function.
pub trait ConcaveOracle<T: Real> {
    fn value(&self, x: &DVector<T>) -> T;
    fn gradient(&self, x: &DVector<T>) -> DVector<T>;
    fn hessian(&self, x: &DVector<T>) -> DMatrix<T>;
}

/// `sum_k log2(c_k . x + d_k) + lin . x + constant`.
///
/// Concave whenever every logarithm argument is positive; with no log terms
/// this is the plain linear objective (LP mode).
#[derive(Debug, Clone)]
pub struct LogAffineObjective<T: Real> {
    pub terms: Vec<(DVector<T>, T)>,
    pub linear: DVector<T>,
    pub constant: T,
}

impl<T: Real> LogAffineObjective<T> {
    pub fn linear_only(linear: DVector<T>) -> Self {
        Self {
            terms: Vec::new(),
            linear,
            constant: T::zero(),
        }
    }
}

impl<T: Real> ConcaveOracle<T> for LogAffineObjective<T> {
    fn value(&self, x: &DVector<T>) -> T {
        let mut acc = self.linear.dot(x) + self.constant;
        for (c, d) in &self.terms {
            let arg = c.dot(x) + *d;
            if !(arg > T::zero()) {
                return -T::max_value().unwrap_or_else(T::one);
            }
            acc += arg.ln() / T::ln_2();
        }
        acc
    }

    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        let mut g = self.linear.clone();
        for (c, d) in &self.terms {
            let arg = c.dot(x) + *d;
            g += c * (T::one() / (arg * T::ln_2()));
        }
        g
    }

    fn hessian(&self, x: &DVector<T>) -> DMatrix<T> {
        let n = x.len();
        let mut h = DMatrix::zeros(n, n);
        for (c, d) in &self.terms {
            let arg = c.dot(x) + *d;
            let w = -T::one() / (arg * arg * T::ln_2());
            h.ger(w, c, c, T::one()); // h += w c c^T
        }
        h
    }
}

/// Affine inequality system `A x <= b`.
#[derive(Debug, Clone)]
pub struct AffineIneqs<T: Real> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
}

impl<T: Real> AffineIneqs<T> {
    pub fn new(a: DMatrix<T>, b: DVector<T>) -> Self {
        debug_assert_eq!(a.nrows(), b.len());
        Self { a, b }
    }

    /// Box constraints `lower <= x <= upper` as inequality rows.
    pub fn from_box(lower: &DVector<T>, upper: &DVector<T>) -> Self {
        let n = lower.len();
        let mut a = DMatrix::zeros(2 * n, n);
        let mut b = DVector::zeros(2 * n);
        for i in 0..n {
            a[(i, i)] = -T::one();
            b[i] = -lower[i];
            a[(n + i, i)] = T::one();
            b[n + i] = upper[i];
        }
        Self { a, b }
    }

    /// Appends the rows of `other`.
    pub fn stacked(&self, other: &AffineIneqs<T>) -> Self {
        let n = self.a.ncols();
        debug_assert_eq!(n, other.a.ncols());
        let m = self.a.nrows() + other.a.nrows();
        let mut a = DMatrix::zeros(m, n);
        let mut b = DVector::zeros(m);
        a.view_mut((0, 0), (self.a.nrows(), n)).copy_from(&self.a);
        a.view_mut((self.a.nrows(), 0), (other.a.nrows(), n))
            .copy_from(&other.a);
        b.rows_mut(0, self.b.len()).copy_from(&self.b);
        b.rows_mut(self.b.len(), other.b.len()).copy_from(&other.b);
        Self { a, b }
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn slacks(&self, x: &DVector<T>) -> DVector<T> {
        &self.b - &self.a * x
    }

    pub fn is_strictly_feasible(&self, x: &DVector<T>) -> bool {
        self.slacks(x).iter().all(|&s| s > T::zero())
    }

    /// Largest violation `max_j (a_j x - b_j)` (negative when interior).
    pub fn max_violation(&self, x: &DVector<T>) -> T {
        self.slacks(x)
            .iter()
            .fold(-T::max_value().unwrap_or_else(T::one), |acc, &s| acc.max(-s))
    }
}

/// KKT residuals of a returned point (maximization convention).
#[derive(Debug, Clone, Copy)]
pub struct KktReport<T> {
    /// `|| grad f - A^T mu ||_inf`.
    pub stationarity: T,
    /// `max(0, max_j (a_j x - b_j))`.
    pub primal: T,
    /// `max_j mu_j (b_j - a_j x)`.
    pub comp_slack: T,
}

impl<T: Real> KktReport<T> {
    pub fn max(&self) -> T {
        self.stationarity.max(self.primal).max(self.comp_slack)
    }
}

#[derive(Debug, Clone)]
pub struct Solution<T: Real> {
    pub x: DVector<T>,
    /// Barrier dual estimates for the inequality rows.
    pub dual: DVector<T>,
    pub objective: T,
    pub kkt: KktReport<T>,
    pub newton_steps: usize,
}

// Barrier pieces take the current slack vector explicitly: slacks are
// tracked incrementally through the line search (s <- s - alpha A delta)
// because recomputing b - A x near an active constraint cancels away most
// of the digits the stationarity test needs.

fn barrier_value<T: Real>(
    oracle: &dyn ConcaveOracle<T>,
    x: &DVector<T>,
    s: &DVector<T>,
    t: T,
) -> T {
    let mut acc = oracle.value(x) * t;
    for &si in s.iter() {
        if !(si > T::zero()) {
            return -T::max_value().unwrap_or_else(T::one);
        }
        acc += si.ln();
    }
    acc
}

fn barrier_gradient<T: Real>(
    oracle: &dyn ConcaveOracle<T>,
    a: &DMatrix<T>,
    x: &DVector<T>,
    s: &DVector<T>,
    t: T,
) -> DVector<T> {
    let inv_s = DVector::from_fn(s.len(), |j, _| T::one() / s[j]);
    oracle.gradient(x) * t - a.transpose() * inv_s
}

/// Negated barrier Hessian (positive definite on feasible interiors).
fn barrier_neg_hessian<T: Real>(
    oracle: &dyn ConcaveOracle<T>,
    a: &DMatrix<T>,
    x: &DVector<T>,
    s: &DVector<T>,
    t: T,
) -> DMatrix<T> {
    let mut h = -oracle.hessian(x) * t;
    for j in 0..s.len() {
        let w = T::one() / (s[j] * s[j]);
        let row = a.row(j).transpose();
        h.ger(w, &row, &row, T::one());
    }
    h
}

fn solve_spd_with_ridge<T: Real>(h: &DMatrix<T>, g: &DVector<T>) -> Option<DVector<T>> {
    if let Some(chol) = Cholesky::new(h.clone()) {
        return Some(chol.solve(g));
    }
    let scale = (T::one() + h.diagonal().amax()) * conv::<T>(1e-12);
    let mut ridge = scale;
    for _ in 0..4 {
        let mut hr = h.clone();
        for i in 0..h.nrows() {
            hr[(i, i)] += ridge;
        }
        if let Some(chol) = Cholesky::new(hr) {
            return Some(chol.solve(g));
        }
        ridge *= conv::<T>(1e4);
    }
    h.clone().lu().solve(g)
}

/// Maximizes a smooth concave objective over `A x <= b`.
///
/// `x0` must be strictly feasible. The returned point satisfies the KKT
/// conditions to `tol` in the infinity norm (duality-gap bound `m/t <= tol`,
/// stationarity through the barrier dual estimates).
pub fn solve_concave_affine<T: Real>(
    oracle: &dyn ConcaveOracle<T>,
    ineqs: &AffineIneqs<T>,
    x0: &DVector<T>,
    tol: T,
) -> Result<Solution<T>> {
    let mut s = ineqs.slacks(x0);
    if s.iter().any(|&si| !(si > T::zero())) {
        return Err(Error::NotStrictlyFeasible);
    }
    let m = ineqs.num_rows();
    let m_t = conv_usize::<T>(m.max(1));

    let mut x = x0.clone();
    let mut t = T::one();
    let mu = conv::<T>(30.0);
    let budget = 200usize;
    let mut steps = 0usize;
    let mut final_attempts = 0usize;

    loop {
        let final_stage = m_t / t <= tol;
        // Newton centering at the current barrier weight.
        for _ in 0..80 {
            let g = barrier_gradient(oracle, &ineqs.a, &x, &s, t);
            if final_stage && g.amax() <= conv::<T>(0.5) * tol * t {
                break;
            }
            let h = barrier_neg_hessian(oracle, &ineqs.a, &x, &s, t);
            let Some(delta) = solve_spd_with_ridge(&h, &g) else {
                break;
            };
            let decrement = g.dot(&delta);
            if decrement <= conv(1e-18) || (!final_stage && decrement <= conv(1e-3)) {
                break;
            }
            let fx = barrier_value(oracle, &x, &s, t);
            let a_delta = &ineqs.a * &delta;
            // Inside the quadratic region (Newton decrement below the
            // self-concordance threshold) the barrier value cannot resolve
            // per-step improvements at large t; take plain Newton steps
            // there and reserve the Armijo test for the damped phase.
            let quad_mode = decrement <= conv::<T>(0.0625);
            let mut alpha = T::one();
            let slope = conv::<T>(0.25) * decrement;
            let mut moved = false;
            for _ in 0..60 {
                let st = &s - &a_delta * alpha;
                if st.iter().all(|&v| v > T::zero()) {
                    let xt = &x + &delta * alpha;
                    let ok = quad_mode || barrier_value(oracle, &xt, &st, t) >= fx + slope * alpha;
                    if ok {
                        x = xt;
                        s = st;
                        moved = true;
                        break;
                    }
                }
                alpha *= conv::<T>(0.5);
            }
            steps += 1;
            if steps > budget {
                return Err(Error::MaxIterations("solve_concave_affine"));
            }
            if !moved {
                break; // line search stalled at numerical precision
            }
        }

        if final_stage {
            let g = barrier_gradient(oracle, &ineqs.a, &x, &s, t);
            // Accept the achieved precision after a few refinement stages;
            // the report carries the actual residuals.
            if g.amax() / t <= tol || final_attempts >= 2 {
                break;
            }
            final_attempts += 1;
        }
        if t > conv::<T>(1e18) {
            return Err(Error::MaxIterations("solve_concave_affine (barrier weight)"));
        }
        t *= mu;
    }

    let dual = DVector::from_fn(m, |j, _| T::one() / (t * s[j]));
    let grad_f = oracle.gradient(&x);
    let stationarity = (&grad_f - ineqs.a.transpose() * &dual).amax();
    let comp_slack = (0..m).fold(T::zero(), |acc, j| acc.max(dual[j] * s[j]));
    Ok(Solution {
        objective: oracle.value(&x),
        dual,
        kkt: KktReport {
            stationarity,
            primal: ineqs.max_violation(&x).max(T::zero()),
            comp_slack,
        },
        newton_steps: steps,
        x,
    })
}

/// Phase-I: finds a strictly feasible point of `A x <= b`, starting the
/// search from `x_guess`.
///
/// Rows already strictly satisfied at `x_guess` are kept hard; the rest are
/// relaxed with a shared slack variable whose maximum violation is then
/// minimized. Returns `Error::Infeasible` when the system has no strictly
/// feasible point within reach of the relaxation.
pub fn strictly_feasible_point<T: Real>(
    ineqs: &AffineIneqs<T>,
    x_guess: &DVector<T>,
) -> Result<DVector<T>> {
    if ineqs.is_strictly_feasible(x_guess) {
        return Ok(x_guess.clone());
    }
    let n = ineqs.a.ncols();
    let m = ineqs.num_rows();
    let slacks = ineqs.slacks(x_guess);
    let margin = conv::<T>(1e-10);
    let relax: Vec<bool> = (0..m)
        .map(|j| slacks[j] <= margin * (T::one() + ineqs.b[j].abs()))
        .collect();

    let viol = ineqs.max_violation(x_guess);
    let s0 = viol.max(T::zero()) + T::one();

    // Augmented system over (x, s).
    let mut a = DMatrix::zeros(m + 1, n + 1);
    let mut b = DVector::zeros(m + 1);
    for j in 0..m {
        for i in 0..n {
            a[(j, i)] = ineqs.a[(j, i)];
        }
        if relax[j] {
            a[(j, n)] = -T::one();
        }
        b[j] = ineqs.b[j];
    }
    a[(m, n)] = T::one(); // cap: s <= s0 + 1
    b[m] = s0 + T::one();

    let mut lin = DVector::zeros(n + 1);
    lin[n] = -T::one(); // maximize -s
    let objective = LogAffineObjective::linear_only(lin);

    let mut y0 = DVector::zeros(n + 1);
    y0.rows_mut(0, n).copy_from(x_guess);
    y0[n] = s0;
    let aug = AffineIneqs::new(a, b);
    if !aug.is_strictly_feasible(&y0) {
        // Hard rows are strict at x_guess by construction; this only
        // triggers on pathological scaling.
        return Err(Error::NotStrictlyFeasible);
    }
    let sol = solve_concave_affine(&objective, &aug, &y0, conv(1e-9))?;
    let x = sol.x.rows(0, n).into_owned();
    if ineqs.is_strictly_feasible(&x) {
        Ok(x)
    } else {
        Err(Error::Infeasible(
            "phase-I could not reach a strictly feasible point".into(),
        ))
    }
}
