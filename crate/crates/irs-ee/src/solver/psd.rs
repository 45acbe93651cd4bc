//! Barrier solver for concave maximization over a unit-diagonal Hermitian
//! matrix `W` and an auxiliary vector `v`, subject to affine trace
//! inequalities, `W >= 0`, and the Schur block `[[W, v], [v^H, 1]] >= 0`.
//!
//! The unit diagonal and the Hermitian structure are eliminated by
//! parameterizing the free real coordinates directly:
//!
//! ```text
//! x = [Re W(p,q) | p>q,  Im W(p,q) | p>q,  Re v,  Im v,  extras]
//! ```
//!
//! so every equality constraint holds by construction and the barrier
//! subproblems are unconstrained Newton solves. `-ln det` terms for both
//! PSD blocks are evaluated through the real lifting of [`super::realify`];
//! their gradients and Hessians reduce to O(1) combinations of inverse
//! entries because each coordinate moves a single Hermitian element pair.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{conv, conv_usize, CMatrix, CVector, Real};
use crate::solver::affine::{AffineIneqs, ConcaveOracle, LogAffineObjective};
use crate::solver::realify::{hermitian_cholesky, hermitian_inverse, hermitian_logdet};

/// Coordinate bookkeeping for the packed real variable vector.
#[derive(Debug, Clone, Copy)]
pub struct PsdLayout {
    /// Order of the Hermitian block `W`.
    pub n: usize,
    /// Number of appended scalar coordinates (used by phase-I).
    pub extra: usize,
}

impl PsdLayout {
    pub fn new(n: usize, extra: usize) -> Self {
        Self { n, extra }
    }

    pub fn num_pairs(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn dim(&self) -> usize {
        self.n * (self.n - 1) + 2 * self.n + self.extra
    }

    /// Flat index of the strictly-lower pair (p, q), p > q.
    fn pair_index(&self, p: usize, q: usize) -> usize {
        debug_assert!(p > q && p < self.n);
        q * (self.n - 1) - q * (q.saturating_sub(1)) / 2 + (p - q - 1)
    }

    pub fn re_index(&self, p: usize, q: usize) -> usize {
        self.pair_index(p, q)
    }

    pub fn im_index(&self, p: usize, q: usize) -> usize {
        self.num_pairs() + self.pair_index(p, q)
    }

    pub fn bar_re_index(&self, k: usize) -> usize {
        2 * self.num_pairs() + k
    }

    pub fn bar_im_index(&self, k: usize) -> usize {
        2 * self.num_pairs() + self.n + k
    }

    pub fn extra_index(&self, i: usize) -> usize {
        2 * self.num_pairs() + 2 * self.n + i
    }

    pub fn pack<T: Real>(&self, w: &CMatrix<T>, bar: &CVector<T>, extra: &[T]) -> DVector<T> {
        let mut x = DVector::zeros(self.dim());
        for q in 0..self.n {
            for p in (q + 1)..self.n {
                x[self.re_index(p, q)] = w[(p, q)].re;
                x[self.im_index(p, q)] = w[(p, q)].im;
            }
        }
        for k in 0..self.n {
            x[self.bar_re_index(k)] = bar[k].re;
            x[self.bar_im_index(k)] = bar[k].im;
        }
        for (i, &e) in extra.iter().enumerate() {
            x[self.extra_index(i)] = e;
        }
        x
    }

    /// Unit-diagonal Hermitian `W` from the packed coordinates.
    pub fn unpack_w<T: Real>(&self, x: &DVector<T>) -> CMatrix<T> {
        let mut w = CMatrix::from_diagonal_element(self.n, self.n, Complex::new(T::one(), T::zero()));
        for q in 0..self.n {
            for p in (q + 1)..self.n {
                let c = Complex::new(x[self.re_index(p, q)], x[self.im_index(p, q)]);
                w[(p, q)] = c;
                w[(q, p)] = c.conj();
            }
        }
        w
    }

    pub fn unpack_bar<T: Real>(&self, x: &DVector<T>) -> CVector<T> {
        CVector::from_fn(self.n, |k, _| {
            Complex::new(x[self.bar_re_index(k)], x[self.bar_im_index(k)])
        })
    }

    pub fn unpack_extra<T: Real>(&self, x: &DVector<T>) -> Vec<T> {
        (0..self.extra).map(|i| x[self.extra_index(i)]).collect()
    }

    /// Schur block `[[W, v], [v^H, 1]]`, order n+1.
    pub fn schur<T: Real>(&self, x: &DVector<T>) -> CMatrix<T> {
        let n = self.n;
        let w = self.unpack_w(x);
        let bar = self.unpack_bar(x);
        let mut s = CMatrix::zeros(n + 1, n + 1);
        s.view_mut((0, 0), (n, n)).copy_from(&w);
        for k in 0..n {
            s[(k, n)] = bar[k];
            s[(n, k)] = bar[k].conj();
        }
        s[(n, n)] = Complex::new(T::one(), T::zero());
        s
    }

    /// Affine representation of `tr(W(x) B)` for Hermitian `B`:
    /// returns `(c, d)` with `tr(W(x) B) = c . x + d`.
    pub fn trace_coeffs<T: Real>(&self, b: &CMatrix<T>) -> (DVector<T>, T) {
        let two = conv::<T>(2.0);
        let mut c = DVector::zeros(self.dim());
        let mut d = T::zero();
        for i in 0..self.n {
            d += b[(i, i)].re;
        }
        for q in 0..self.n {
            for p in (q + 1)..self.n {
                c[self.re_index(p, q)] = two * b[(p, q)].re;
                c[self.im_index(p, q)] = two * b[(p, q)].im;
            }
        }
        (c, d)
    }
}

/// Hermitian elementary direction `u e_p e_q^H + conj(u) e_q e_p^H`.
type Elem<T> = (usize, usize, Complex<T>);

/// Per-coordinate elementary directions inside `W` and inside the Schur
/// block (None for coordinates that do not enter the block).
fn coordinate_elems<T: Real>(layout: &PsdLayout) -> Vec<(Option<Elem<T>>, Option<Elem<T>>)> {
    let n = layout.n;
    let one = Complex::new(T::one(), T::zero());
    let i_unit = Complex::new(T::zero(), T::one());
    let mut elems = vec![(None, None); layout.dim()];
    for q in 0..n {
        for p in (q + 1)..n {
            elems[layout.re_index(p, q)] = (Some((p, q, one)), Some((p, q, one)));
            elems[layout.im_index(p, q)] = (Some((p, q, i_unit)), Some((p, q, i_unit)));
        }
    }
    for k in 0..n {
        elems[layout.bar_re_index(k)] = (None, Some((k, n, one)));
        elems[layout.bar_im_index(k)] = (None, Some((k, n, i_unit)));
    }
    elems
}

/// `tr(A E) = 2 Re(u A[q,p])` for Hermitian `A` and elementary `E`.
fn elem_trace<T: Real>(a: &CMatrix<T>, e: &Elem<T>) -> T {
    let (p, q, u) = *e;
    let two = conv::<T>(2.0);
    (u * a[(q, p)]).re * two
}

/// `tr(A E_i A E_j)` for Hermitian `A` and elementary pair directions.
fn pair_trace<T: Real>(a: &CMatrix<T>, ei: &Elem<T>, ej: &Elem<T>) -> T {
    let (p, q, u) = *ei;
    let (r, s, v) = *ej;
    let t1 = u * v * a[(q, r)] * a[(s, p)];
    let t2 = u * v.conj() * a[(q, s)] * a[(r, p)];
    let two = conv::<T>(2.0);
    (t1 + t2).re * two
}

/// Concave maximization problem over `(W, v, extras)`.
pub struct PsdConcaveProblem<'a, T: Real> {
    /// Order of the Hermitian block.
    pub n: usize,
    /// Number of appended scalar coordinates.
    pub extra: usize,
    /// Concave objective over the packed coordinates.
    pub objective: &'a dyn ConcaveOracle<T>,
    /// Affine trace inequalities `a . x <= b`.
    pub ineqs: AffineIneqs<T>,
    /// Strictly feasible packed start.
    pub start: DVector<T>,
}

#[derive(Debug, Clone)]
pub struct PsdSolution<T: Real> {
    pub w: CMatrix<T>,
    pub w_bar: CVector<T>,
    pub extra: Vec<T>,
    pub x: DVector<T>,
    pub objective: T,
    /// `|| grad_x (objective - barrier duals) ||_inf`.
    pub kkt_stationarity: T,
    /// Duality-gap bound from the barrier parameter.
    pub gap_bound: T,
    pub newton_steps: usize,
}

struct PsdBarrier<'a, T: Real> {
    layout: PsdLayout,
    elems: Vec<(Option<Elem<T>>, Option<Elem<T>>)>,
    objective: &'a dyn ConcaveOracle<T>,
    ineqs: &'a AffineIneqs<T>,
}

impl<'a, T: Real> PsdBarrier<'a, T> {
    /// Barrier value from the tracked row slacks; `None` outside the domain.
    fn value(&self, x: &DVector<T>, slacks: &DVector<T>, t: T) -> Option<T> {
        if slacks.iter().any(|&s| !(s > T::zero())) {
            return None;
        }
        let w = self.layout.unpack_w(x);
        let s = self.layout.schur(x);
        let ld_w = hermitian_logdet(&w)?;
        let ld_s = hermitian_logdet(&s)?;
        let mut acc = self.objective.value(x) * t + ld_w + ld_s;
        for &si in slacks.iter() {
            acc += si.ln();
        }
        Some(acc)
    }

    fn gradient(
        &self,
        x: &DVector<T>,
        slacks: &DVector<T>,
        inv_w: &CMatrix<T>,
        inv_s: &CMatrix<T>,
        t: T,
    ) -> DVector<T> {
        let mut g = self.objective.gradient(x) * t;
        for (i, (we, se)) in self.elems.iter().enumerate() {
            if let Some(e) = we {
                g[i] += elem_trace(inv_w, e);
            }
            if let Some(e) = se {
                g[i] += elem_trace(inv_s, e);
            }
        }
        for j in 0..self.ineqs.num_rows() {
            let w = T::one() / slacks[j];
            for i in 0..x.len() {
                g[i] -= self.ineqs.a[(j, i)] * w;
            }
        }
        g
    }

    fn neg_hessian(
        &self,
        x: &DVector<T>,
        slacks: &DVector<T>,
        inv_w: &CMatrix<T>,
        inv_s: &CMatrix<T>,
        t: T,
    ) -> DMatrix<T> {
        let d = x.len();
        let mut h = -self.objective.hessian(x) * t;
        for i in 0..d {
            for j in 0..=i {
                let mut acc = T::zero();
                if let (Some(ei), Some(ej)) = (&self.elems[i].0, &self.elems[j].0) {
                    acc += pair_trace(inv_w, ei, ej);
                }
                if let (Some(ei), Some(ej)) = (&self.elems[i].1, &self.elems[j].1) {
                    acc += pair_trace(inv_s, ei, ej);
                }
                h[(i, j)] += acc;
                if i != j {
                    h[(j, i)] += acc;
                }
            }
        }
        for j in 0..self.ineqs.num_rows() {
            let w = T::one() / (slacks[j] * slacks[j]);
            let row = self.ineqs.a.row(j).transpose();
            h.ger(w, &row, &row, T::one());
        }
        h
    }
}

fn solve_spd_with_ridge<T: Real>(h: &DMatrix<T>, g: &DVector<T>) -> Option<DVector<T>> {
    if let Some(chol) = nalgebra::Cholesky::new(h.clone()) {
        return Some(chol.solve(g));
    }
    let scale = (T::one() + h.diagonal().amax()) * conv::<T>(1e-12);
    let mut ridge = scale;
    for _ in 0..4 {
        let mut hr = h.clone();
        for i in 0..h.nrows() {
            hr[(i, i)] += ridge;
        }
        if let Some(chol) = nalgebra::Cholesky::new(hr) {
            return Some(chol.solve(g));
        }
        ridge *= conv::<T>(1e4);
    }
    h.clone().lu().solve(g)
}

/// Maximizes the problem objective; the start must be strictly feasible
/// (both PSD blocks positive definite, all rows strict).
pub fn solve_psd_concave<T: Real>(p: &PsdConcaveProblem<T>, tol: T) -> Result<PsdSolution<T>> {
    let layout = PsdLayout::new(p.n, p.extra);
    if p.ineqs.a.ncols() != layout.dim() || p.start.len() != layout.dim() {
        return Err(Error::DimensionMismatch(
            "PSD problem rows/start must match the packed dimension".into(),
        ));
    }
    let barrier = PsdBarrier {
        layout,
        elems: coordinate_elems::<T>(&layout),
        objective: p.objective,
        ineqs: &p.ineqs,
    };
    let mut slacks = p.ineqs.slacks(&p.start);
    if barrier.value(&p.start, &slacks, T::one()).is_none() {
        return Err(Error::NotStrictlyFeasible);
    }

    // Barrier parameter: n and n+1 for the PSD blocks, 1 per affine row.
    let nu = conv_usize::<T>(p.n + (p.n + 1) + p.ineqs.num_rows());
    let mut x = p.start.clone();
    let mut t = T::one();
    let mu = conv::<T>(30.0);
    let budget = 500usize;
    let mut steps = 0usize;
    let mut final_attempts = 0usize;

    loop {
        let final_stage = nu / t <= tol;
        for _ in 0..80 {
            let w = layout.unpack_w(&x);
            let s = layout.schur(&x);
            let (Some(inv_w), Some(inv_s)) = (hermitian_inverse(&w), hermitian_inverse(&s))
            else {
                break;
            };
            let g = barrier.gradient(&x, &slacks, &inv_w, &inv_s, t);
            if final_stage && g.amax() <= conv::<T>(0.5) * tol * t {
                break;
            }
            let h = barrier.neg_hessian(&x, &slacks, &inv_w, &inv_s, t);
            let Some(delta) = solve_spd_with_ridge(&h, &g) else {
                break;
            };
            let decrement = g.dot(&delta);
            if decrement <= conv(1e-18) || (!final_stage && decrement <= conv(1e-3)) {
                break;
            }
            let fx = barrier
                .value(&x, &slacks, t)
                .expect("current point in domain");
            let a_delta = &p.ineqs.a * &delta;
            // Plain Newton inside the quadratic region (see the affine
            // solver for why Armijo cannot be used there).
            let quad_mode = decrement <= conv::<T>(0.0625);
            let mut alpha = T::one();
            let slope = conv::<T>(0.25) * decrement;
            let mut moved = false;
            for _ in 0..60 {
                let st = &slacks - &a_delta * alpha;
                let xt = &x + &delta * alpha;
                if let Some(ft) = barrier.value(&xt, &st, t) {
                    if quad_mode || ft >= fx + slope * alpha {
                        x = xt;
                        slacks = st;
                        moved = true;
                        break;
                    }
                }
                alpha *= conv::<T>(0.5);
            }
            steps += 1;
            if steps > budget {
                return Err(Error::MaxIterations("solve_psd_concave"));
            }
            if !moved {
                break;
            }
        }

        if final_stage {
            let w = layout.unpack_w(&x);
            let s = layout.schur(&x);
            if let (Some(inv_w), Some(inv_s)) = (hermitian_inverse(&w), hermitian_inverse(&s)) {
                let g = barrier.gradient(&x, &slacks, &inv_w, &inv_s, t);
                if g.amax() / t <= tol || final_attempts >= 2 {
                    break;
                }
            }
            final_attempts += 1;
        }
        if t > conv::<T>(1e18) {
            return Err(Error::MaxIterations("solve_psd_concave (barrier weight)"));
        }
        t *= mu;
    }

    let w = layout.unpack_w(&x);
    let s = layout.schur(&x);
    let (inv_w, inv_s) = (
        hermitian_inverse(&w).expect("interior"),
        hermitian_inverse(&s).expect("interior"),
    );
    let g = barrier.gradient(&x, &slacks, &inv_w, &inv_s, t);
    Ok(PsdSolution {
        w_bar: layout.unpack_bar(&x),
        extra: layout.unpack_extra(&x),
        objective: p.objective.value(&x),
        kkt_stationarity: g.amax() / t,
        gap_bound: nu / t,
        newton_steps: steps,
        w,
        x,
    })
}

/// Phase-I for the PSD problem: from a start whose PSD blocks are strictly
/// feasible but whose affine rows may be violated, returns a fully strictly
/// feasible packed point (without extras), or `Error::Infeasible`.
pub fn strictly_feasible_psd<T: Real>(
    n: usize,
    ineqs: &AffineIneqs<T>,
    start: &DVector<T>,
) -> Result<DVector<T>> {
    let layout = PsdLayout::new(n, 0);
    if ineqs.is_strictly_feasible(start) {
        return Ok(start.clone());
    }
    let aug_layout = PsdLayout::new(n, 1);
    let d = layout.dim();
    let m = ineqs.num_rows();
    let slacks = ineqs.slacks(start);
    let margin = conv::<T>(1e-10);

    let viol = ineqs.max_violation(start);
    let s0 = viol.max(T::zero()) + T::one();

    let mut a = DMatrix::zeros(m + 1, d + 1);
    let mut b = DVector::zeros(m + 1);
    for j in 0..m {
        for i in 0..d {
            a[(j, i)] = ineqs.a[(j, i)];
        }
        if slacks[j] <= margin * (T::one() + ineqs.b[j].abs()) {
            a[(j, d)] = -T::one();
        }
        b[j] = ineqs.b[j];
    }
    a[(m, d)] = T::one();
    b[m] = s0 + T::one();

    let mut lin = DVector::zeros(d + 1);
    lin[d] = -T::one();
    let objective = LogAffineObjective::linear_only(lin);

    let mut x0 = DVector::zeros(d + 1);
    x0.rows_mut(0, d).copy_from(start);
    x0[d] = s0;

    let problem = PsdConcaveProblem {
        n,
        extra: 1,
        objective: &objective,
        ineqs: AffineIneqs::new(a, b),
        start: x0,
    };
    let sol = solve_psd_concave(&problem, conv(1e-9))?;
    let x = sol.x.rows(0, d).into_owned();
    let ok = ineqs.is_strictly_feasible(&x)
        && hermitian_cholesky(&aug_layout.unpack_w(&sol.x)).is_some();
    if ok {
        Ok(x)
    } else {
        Err(Error::Infeasible(
            "PSD phase-I could not reach a strictly feasible point".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    type C = Complex<f64>;

    fn blend_start(layout: &PsdLayout, alpha: f64) -> DVector<f64> {
        // (1-alpha) * (all-ones rank-one) + alpha * I, v = (1-alpha) * ones.
        let n = layout.n;
        let ones = CVector::from_element(n, C::new(1.0, 0.0));
        let mut w = &ones * ones.adjoint();
        w *= C::new(1.0 - alpha, 0.0);
        for i in 0..n {
            w[(i, i)] += C::new(alpha, 0.0);
        }
        let bar = ones.map(|c| c * C::new(1.0 - alpha, 0.0));
        layout.pack(&w, &bar, &[])
    }

    #[test]
    fn layout_pack_unpack_round_trip() {
        let layout = PsdLayout::new(4, 2);
        let mut rng = StdRng::seed_from_u64(1);
        let a = CMatrix::from_fn(4, 4, |_, _| {
            C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let mut w = (&a + a.adjoint()) * C::new(0.5, 0.0);
        for i in 0..4 {
            w[(i, i)] = C::new(1.0, 0.0);
        }
        let bar = CVector::from_fn(4, |i, _| C::new(0.1 * i as f64, -0.2));
        let x = layout.pack(&w, &bar, &[3.0, -4.0]);
        assert_eq!(x.len(), layout.dim());
        assert!((layout.unpack_w(&x) - &w).norm() < 1e-15);
        assert!((layout.unpack_bar(&x) - &bar).norm() < 1e-15);
        assert_eq!(layout.unpack_extra(&x), vec![3.0, -4.0]);
        // Schur block embeds both.
        let s = layout.schur(&x);
        assert_eq!(s[(4, 4)], C::new(1.0, 0.0));
        assert_eq!(s[(0, 4)], bar[0]);
        assert_eq!(s[(4, 0)], bar[0].conj());
    }

    #[test]
    fn trace_coeffs_match_direct_trace() {
        let layout = PsdLayout::new(3, 0);
        let mut rng = StdRng::seed_from_u64(2);
        let a = CMatrix::from_fn(3, 3, |_, _| {
            C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = &a * a.adjoint();
        let (c, d) = layout.trace_coeffs(&h);
        let x = blend_start(&layout, 0.3);
        let w = layout.unpack_w(&x);
        let direct = (&w * &h).trace();
        assert!(direct.im.abs() < 1e-12);
        let affine = c.dot(&x) + d;
        assert!((direct.re - affine).abs() < 1e-12);
    }

    #[test]
    fn n1_degenerate_returns_unit_w() {
        let layout = PsdLayout::new(1, 0);
        let objective = LogAffineObjective::linear_only(DVector::zeros(layout.dim()));
        let start = layout.pack(
            &CMatrix::from_element(1, 1, C::new(1.0, 0.0)),
            &CVector::from_element(1, C::new(0.3, 0.1)),
            &[],
        );
        let problem = PsdConcaveProblem {
            n: 1,
            extra: 0,
            objective: &objective,
            ineqs: AffineIneqs::new(DMatrix::zeros(0, layout.dim()), DVector::zeros(0)),
            start,
        };
        let sol = solve_psd_concave(&problem, 1e-8).unwrap();
        assert_eq!(sol.w[(0, 0)], C::new(1.0, 0.0));
        assert!(sol.w_bar[0].norm() < 1.0);
        // Constant objective: the barrier pulls v toward the analytic
        // center at the origin (any interior point is KKT-optimal).
        assert!(sol.w_bar[0].norm() < 1e-2, "{}", sol.w_bar[0].norm());
    }

    #[test]
    fn constant_objective_returns_strictly_feasible_center() {
        let layout = PsdLayout::new(3, 0);
        let mut rng = StdRng::seed_from_u64(3);
        let a = CMatrix::from_fn(3, 3, |_, _| {
            C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = &a * a.adjoint();
        let (c, d) = layout.trace_coeffs(&h);
        // One active-ish trace row: tr(W H) <= d + 1.
        let ineqs = AffineIneqs::new(
            DMatrix::from_fn(1, layout.dim(), |_, j| c[j]),
            DVector::from_element(1, 1.0 + 0.0 * d),
        );
        let objective = LogAffineObjective::linear_only(DVector::zeros(layout.dim()));
        let start = blend_start(&layout, 1.0); // W = I, v = 0
        let problem = PsdConcaveProblem {
            n: 3,
            extra: 0,
            objective: &objective,
            ineqs,
            start,
        };
        let sol = solve_psd_concave(&problem, 1e-6).unwrap();
        assert!(hermitian_cholesky(&sol.w).is_some());
        let s = PsdLayout::new(3, 0).schur(&sol.x);
        assert!(hermitian_cholesky(&s).is_some());
        for i in 0..3 {
            assert!((sol.w[(i, i)] - C::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(problem.ineqs.is_strictly_feasible(&sol.x));
    }

    #[test]
    fn n2_single_log_term_matches_grid() {
        // maximize log2(tr(W H) + sigma2). Feasible W: unit diagonal, 2x2,
        // off-diagonal z with |z| <= 1. Optimum: tr = H00 + H11 + 2 |H01|.
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..5 {
            let a = CMatrix::from_fn(2, 2, |_, _| {
                C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let h = &a * a.adjoint();
            let sigma2 = 0.5;
            let layout = PsdLayout::new(2, 0);
            let (c, d) = layout.trace_coeffs(&h);
            let objective = LogAffineObjective {
                terms: vec![(c, d + sigma2)],
                linear: DVector::zeros(layout.dim()),
                constant: 0.0,
            };
            let problem = PsdConcaveProblem {
                n: 2,
                extra: 0,
                objective: &objective,
                ineqs: AffineIneqs::new(DMatrix::zeros(0, layout.dim()), DVector::zeros(0)),
                start: blend_start(&layout, 0.5),
            };
            let sol = solve_psd_concave(&problem, 1e-7).unwrap();

            // Dense grid over the two free parameters of W (disk |z| <= 1).
            let mut grid_best = f64::NEG_INFINITY;
            let steps = 400;
            for ia in 0..=steps {
                for ib in 0..=steps {
                    let re = -1.0 + 2.0 * ia as f64 / steps as f64;
                    let im = -1.0 + 2.0 * ib as f64 / steps as f64;
                    if re * re + im * im > 1.0 {
                        continue;
                    }
                    let tr = h[(0, 0)].re
                        + h[(1, 1)].re
                        + 2.0 * (re * h[(1, 0)].re + im * h[(1, 0)].im);
                    grid_best = grid_best.max((tr + sigma2).log2());
                }
            }
            let analytic = (h[(0, 0)].re + h[(1, 1)].re + 2.0 * h[(1, 0)].norm() + sigma2).log2();
            assert!(
                (sol.objective - grid_best).abs() <= 1e-3 * grid_best.abs().max(1.0),
                "solver {} vs grid {grid_best}",
                sol.objective
            );
            assert!(sol.objective <= analytic + 1e-9);
        }
    }

    #[test]
    fn phase_one_restores_row_feasibility() {
        // Row requiring Re W(1,0) >= 0.8: violated at the identity start.
        let layout = PsdLayout::new(2, 0);
        let mut a = DMatrix::zeros(1, layout.dim());
        a[(0, layout.re_index(1, 0))] = -1.0;
        let ineqs = AffineIneqs::new(a, DVector::from_element(1, -0.8));
        let start = blend_start(&layout, 1.0); // W = I: Re W(1,0) = 0
        assert!(!ineqs.is_strictly_feasible(&start));
        let x = strictly_feasible_psd(2, &ineqs, &start).unwrap();
        assert!(ineqs.is_strictly_feasible(&x));
        assert!(hermitian_cholesky(&layout.unpack_w(&x)).is_some());
    }

    #[test]
    fn phase_one_detects_impossible_rows() {
        // Re W(1,0) >= 1.5 is impossible for a PSD unit-diagonal W.
        let layout = PsdLayout::new(2, 0);
        let mut a = DMatrix::zeros(1, layout.dim());
        a[(0, layout.re_index(1, 0))] = -1.0;
        let ineqs = AffineIneqs::new(a, DVector::from_element(1, -1.5));
        let start = blend_start(&layout, 1.0);
        assert!(matches!(
            strictly_feasible_psd(2, &ineqs, &start),
            Err(Error::Infeasible(_))
        ));
    }
}
