//! Passive beamforming at the surface for fixed powers and beamformers:
//! maximize the sum rate over the unit-modulus coefficient vector under the
//! per-user SINR floors.
//!
//! The quadratic coupling is lifted to a unit-diagonal PSD matrix
//! `W = w w^H`; the rank-one constraint is relaxed to the Schur block
//! `[[W, v], [v^H, 1]] >= 0`. The relaxed objective is a difference of
//! concave trace-log terms, driven upward by successive linearization of
//! the subtracted term, each step solved by the PSD barrier kernel.
//! Unit-modulus candidates are recovered by Gaussian randomization around
//! the relaxed solution and accepted only when they do not lower the
//! energy efficiency of the incumbent.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    hadamard_channel, noise_power, BeamformerSet, ChannelSet, PhaseVector, PowerAllocation,
    SystemConfig,
};
use crate::scalar::{conv, log2, CMatrix, CVector, Real};
use crate::solver::psd::PsdLayout;
use crate::solver::{
    hermitian_logdet, solve_psd_concave, strictly_feasible_psd, AffineIneqs, LogAffineObjective,
    PsdConcaveProblem,
};

/// Lifted phase-optimization data: weighted outer products of the
/// Hadamard-compressed channels, per-user noise powers and SINR floors.
#[derive(Debug, Clone)]
pub struct LiftedProblem<T: Real> {
    /// `pair_outer[k][i] = P_i hhat_{k,i} hhat_{k,i}^H` (Hermitian PSD,
    /// rank at most one).
    pub pair_outer: Vec<Vec<CMatrix<T>>>,
    /// `sigma2[k] = N0 B ||v_k||^2`.
    pub sigma2: DVector<T>,
    pub gamma_min: DVector<T>,
    sum_all: Vec<CMatrix<T>>,
    sum_interf: Vec<CMatrix<T>>,
}

impl<T: Real> LiftedProblem<T> {
    pub fn num_users(&self) -> usize {
        self.pair_outer.len()
    }

    pub fn num_elements(&self) -> usize {
        self.sum_all.first().map_or(0, |m| m.nrows())
    }

    /// `sum_i pair_outer[k][i]`.
    pub fn sum_all(&self, k: usize) -> &CMatrix<T> {
        &self.sum_all[k]
    }

    /// `sum_{i != k} pair_outer[k][i]`.
    pub fn sum_interference(&self, k: usize) -> &CMatrix<T> {
        &self.sum_interf[k]
    }
}

/// Builds the lifted problem from the physical quantities.
pub fn build_lifted<T: Real>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    beams: &BeamformerSet<T>,
    power: &PowerAllocation<T>,
) -> Result<LiftedProblem<T>> {
    let k_users = config.num_users;
    let n = config.num_irs_elements;
    let mut pair_outer = Vec::with_capacity(k_users);
    let mut sigma2 = DVector::zeros(k_users);
    for k in 0..k_users {
        let v = beams.user(k);
        sigma2[k] = noise_power(config, &v);
        if !(sigma2[k] > T::zero()) {
            return Err(Error::ZeroBeamformer(k));
        }
        let mut row = Vec::with_capacity(k_users);
        for i in 0..k_users {
            let hhat = hadamard_channel(&v, &channels.irs_to_bs, &channels.user_to_irs[i])?;
            let mut outer = CMatrix::zeros(n, n);
            outer.gerc(
                Complex::new(power.p[i], T::zero()),
                &hhat,
                &hhat,
                Complex::new(T::zero(), T::zero()),
            );
            row.push(outer);
        }
        pair_outer.push(row);
    }
    let sum_all: Vec<CMatrix<T>> = (0..k_users)
        .map(|k| {
            let mut acc = CMatrix::zeros(n, n);
            for i in 0..k_users {
                acc += &pair_outer[k][i];
            }
            acc
        })
        .collect();
    let sum_interf: Vec<CMatrix<T>> = (0..k_users)
        .map(|k| {
            let mut acc = CMatrix::zeros(n, n);
            for i in 0..k_users {
                if i != k {
                    acc += &pair_outer[k][i];
                }
            }
            acc
        })
        .collect();
    Ok(LiftedProblem {
        pair_outer,
        sigma2,
        gamma_min: config.min_sinr.clone(),
        sum_all,
        sum_interf,
    })
}

fn real_trace<T: Real>(w: &CMatrix<T>, h: &CMatrix<T>) -> T {
    let mut acc = T::zero();
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            acc += (w[(i, j)] * h[(j, i)]).re;
        }
    }
    acc
}

/// The two concave pieces of the relaxed sum-rate objective:
///
/// - first: `sum_k log2(tr(W sum_i H_ki) + sigma2_k)`
/// - second: `sum_k log2(tr(W sum_{i!=k} H_ki) + sigma2_k)` (interference)
///
/// Their difference equals the sum rate whenever `W = w w^H`.
pub fn rate_dc_terms<T: Real>(w: &CMatrix<T>, lifted: &LiftedProblem<T>) -> Result<(T, T)> {
    let mut full = T::zero();
    let mut interf = T::zero();
    for k in 0..lifted.num_users() {
        let arg_all = real_trace(w, lifted.sum_all(k)) + lifted.sigma2[k];
        let arg_rest = real_trace(w, lifted.sum_interference(k)) + lifted.sigma2[k];
        if !(arg_all > T::zero() && arg_rest > T::zero()) {
            return Err(Error::NonPositiveLog);
        }
        full += log2(arg_all);
        interf += log2(arg_rest);
    }
    Ok((full, interf))
}

/// Partial derivatives of the interference term of [`rate_dc_terms`] with
/// respect to the real and imaginary parts of the strictly-lower entries
/// of `W`. Entries on and above the diagonal are zero.
pub fn interference_partials<T: Real>(
    w: &CMatrix<T>,
    lifted: &LiftedProblem<T>,
) -> (DMatrix<T>, DMatrix<T>) {
    let n = w.nrows();
    let two = conv::<T>(2.0);
    let mut d_re = DMatrix::zeros(n, n);
    let mut d_im = DMatrix::zeros(n, n);
    for k in 0..lifted.num_users() {
        let b = lifted.sum_interference(k);
        let denom = (real_trace(w, b) + lifted.sigma2[k]) * T::ln_2();
        for p in 0..n {
            for q in 0..p {
                d_re[(p, q)] += two * b[(p, q)].re / denom;
                d_im[(p, q)] += two * b[(p, q)].im / denom;
            }
        }
    }
    (d_re, d_im)
}

/// Relaxed iterate: the PSD matrix block and the Schur auxiliary vector.
#[derive(Debug, Clone)]
pub struct LiftedIterate<T: Real> {
    pub w_mat: CMatrix<T>,
    pub w_bar: CVector<T>,
}

/// Solver options for the phase subproblem.
#[derive(Debug, Clone, Copy)]
pub struct PhaseSolveOptions<T: Real> {
    pub dc_max_iters: usize,
    pub dc_rel_tol: T,
    pub kkt_tol: T,
}

impl<T: Real> Default for PhaseSolveOptions<T> {
    fn default() -> Self {
        Self {
            dc_max_iters: 30,
            dc_rel_tol: conv(1e-6),
            kkt_tol: conv(1e-6),
        }
    }
}

/// QoS trace rows over the packed coordinates.
///
/// Rows with a zero SINR floor are dropped: `tr(W H) >= 0` already holds
/// for PSD factors.
fn qos_rows<T: Real>(layout: &PsdLayout, lifted: &LiftedProblem<T>) -> AffineIneqs<T> {
    let mut rows: Vec<DVector<T>> = Vec::new();
    let mut rhs: Vec<T> = Vec::new();
    for k in 0..lifted.num_users() {
        let gamma = lifted.gamma_min[k];
        if gamma <= T::zero() {
            continue;
        }
        let (c_b, d_b) = layout.trace_coeffs(lifted.sum_interference(k));
        let (c_h, d_h) = layout.trace_coeffs(&lifted.pair_outer[k][k]);
        rows.push(&c_b * gamma - &c_h);
        rhs.push(d_h - gamma * (d_b + lifted.sigma2[k]));
    }
    if rows.is_empty() {
        return AffineIneqs::new(DMatrix::zeros(0, layout.dim()), DVector::zeros(0));
    }
    AffineIneqs::new(
        DMatrix::from_fn(rows.len(), layout.dim(), |j, i| rows[j][i]),
        DVector::from_iterator(rhs.len(), rhs),
    )
}

/// Strictly feasible packed start: blends the (possibly rank-one) seed
/// toward the identity until both PSD blocks are strict, then restores the
/// QoS rows with phase-I if needed.
fn feasible_start<T: Real>(
    layout: &PsdLayout,
    w0: &CMatrix<T>,
    bar0: &CVector<T>,
    ineqs: &AffineIneqs<T>,
) -> Result<DVector<T>> {
    let n = layout.n;
    for &alpha in &[1e-2, 5e-2, 0.2, 0.5, 1.0] {
        let a = conv::<T>(alpha);
        let keep = T::one() - a;
        let mut w = w0.map(|c| c.scale(keep));
        for i in 0..n {
            w[(i, i)] = Complex::new(T::one(), T::zero());
        }
        let bar = bar0.map(|c| c.scale(keep));
        let x = layout.pack(&w, &bar, &[]);
        let blocks_ok = hermitian_logdet(&layout.unpack_w(&x)).is_some()
            && hermitian_logdet(&layout.schur(&x)).is_some();
        if !blocks_ok {
            continue;
        }
        if ineqs.is_strictly_feasible(&x) {
            return Ok(x);
        }
        if alpha == 1.0 {
            return strictly_feasible_psd(n, ineqs, &x);
        }
    }
    Err(Error::NotStrictlyFeasible)
}

/// DC ascent on the relaxed problem, linearizing the interference term.
///
/// `w0`/`bar0` seed both the first linearization point and (blended inward)
/// the barrier start. Returns `Error::Infeasible` when the SINR floors
/// admit no relaxed solution at the current powers and beams, in which
/// case the caller keeps its incumbent phases.
pub fn dc_sdp_solve<T: Real>(
    lifted: &LiftedProblem<T>,
    w0: &CMatrix<T>,
    bar0: &CVector<T>,
) -> Result<LiftedIterate<T>> {
    dc_sdp_solve_with(lifted, w0, bar0, &PhaseSolveOptions::default())
}

pub fn dc_sdp_solve_with<T: Real>(
    lifted: &LiftedProblem<T>,
    w0: &CMatrix<T>,
    bar0: &CVector<T>,
    opts: &PhaseSolveOptions<T>,
) -> Result<LiftedIterate<T>> {
    let n = lifted.num_elements();
    let layout = PsdLayout::new(n, 0);
    let ineqs = qos_rows(&layout, lifted);
    let mut x_warm = feasible_start(&layout, w0, bar0, &ineqs)?;

    let mut lin_point = w0.clone();
    let mut iterate = LiftedIterate {
        w_mat: w0.clone(),
        w_bar: bar0.clone(),
    };
    let (f3, f4) = rate_dc_terms(w0, lifted)?;
    let mut value = f3 - f4;

    // Objective terms for f3 are fixed across iterations.
    let f3_terms: Vec<(DVector<T>, T)> = (0..lifted.num_users())
        .map(|k| {
            let (c, d) = layout.trace_coeffs(lifted.sum_all(k));
            (c, d + lifted.sigma2[k])
        })
        .collect();

    for _ in 0..opts.dc_max_iters {
        let (d_re, d_im) = interference_partials(&lin_point, lifted);
        let mut linear = DVector::zeros(layout.dim());
        for q in 0..n {
            for p in (q + 1)..n {
                linear[layout.re_index(p, q)] = -d_re[(p, q)];
                linear[layout.im_index(p, q)] = -d_im[(p, q)];
            }
        }
        let objective = LogAffineObjective {
            terms: f3_terms.clone(),
            linear,
            constant: T::zero(),
        };
        let problem = PsdConcaveProblem {
            n,
            extra: 0,
            objective: &objective,
            ineqs: ineqs.clone(),
            start: x_warm.clone(),
        };
        let sol = solve_psd_concave(&problem, opts.kkt_tol)?;
        let (f3_new, f4_new) = rate_dc_terms(&sol.w, lifted)?;
        let new_value = f3_new - f4_new;
        if new_value < value - conv::<T>(1e-12) * (T::one() + value.abs()) {
            break; // DC ascent exhausted within solver precision
        }
        let improved = new_value - value;
        x_warm = sol.x.clone();
        lin_point = sol.w.clone();
        iterate = LiftedIterate {
            w_mat: sol.w,
            w_bar: sol.w_bar,
        };
        value = new_value;
        if improved <= opts.dc_rel_tol * (T::one() + value.abs()) {
            break;
        }
    }
    Ok(iterate)
}

/// Quadratic form `Re(w^H H w)` of a candidate coefficient vector.
fn coupling<T: Real>(w: &CVector<T>, h: &CMatrix<T>) -> T {
    w.dotc(&(h * w)).re
}

/// Sum rate (bit/s/Hz) of a unit-modulus candidate under the lifted data.
pub fn sum_rate<T: Real>(phases: &PhaseVector<T>, lifted: &LiftedProblem<T>) -> T {
    let w = phases.coefficients();
    let mut acc = T::zero();
    for k in 0..lifted.num_users() {
        let signal = coupling(w, &lifted.pair_outer[k][k]);
        let interf = coupling(w, lifted.sum_interference(k));
        acc += log2(T::one() + signal / (interf + lifted.sigma2[k]));
    }
    acc
}

/// True when a candidate meets every SINR floor (1e-9 relative slack).
pub fn qos_satisfied<T: Real>(phases: &PhaseVector<T>, lifted: &LiftedProblem<T>) -> bool {
    let w = phases.coefficients();
    let slack = T::one() - conv::<T>(1e-9);
    (0..lifted.num_users()).all(|k| {
        let signal = coupling(w, &lifted.pair_outer[k][k]);
        let interf = coupling(w, lifted.sum_interference(k));
        signal >= lifted.gamma_min[k] * (interf + lifted.sigma2[k]) * slack
    })
}

/// Gaussian randomization: draws `q` candidates around the relaxed iterate,
/// projects each element to unit modulus, and returns the QoS-feasible
/// candidate with the highest sum rate.
pub fn gaussian_randomization<T: Real, R: Rng>(
    lifted: &LiftedProblem<T>,
    iterate: &LiftedIterate<T>,
    q: usize,
    rng: &mut R,
) -> Result<PhaseVector<T>> {
    if q == 0 {
        return Err(Error::InvalidConfig("randomization needs q >= 1".into()));
    }
    let n = lifted.num_elements();
    let mut cov = iterate.w_mat.clone();
    cov.gerc(
        Complex::new(-T::one(), T::zero()),
        &iterate.w_bar,
        &iterate.w_bar,
        Complex::new(T::one(), T::zero()),
    );
    // Hermitian eigendecomposition with negative eigenvalues clipped at 0.
    let eig = SymmetricEigen::new(cov);
    let factor = {
        let mut f = eig.eigenvectors.clone();
        for j in 0..n {
            let scale = eig.eigenvalues[j].max(T::zero()).sqrt();
            f.column_mut(j).scale_mut(scale);
        }
        f
    };

    let mut best: Option<(T, PhaseVector<T>)> = None;
    let tiny = conv::<T>(1e-12);
    for _ in 0..q {
        let z = CVector::from_fn(n, |_, _| crate::channel::standard_complex_unit(rng));
        let sample = &iterate.w_bar + &factor * z;
        let w = CVector::from_iterator(
            n,
            sample.iter().map(|&e| {
                let m = e.modulus();
                if m < tiny {
                    Complex::new(T::one(), T::zero())
                } else {
                    e.unscale(m)
                }
            }),
        );
        let candidate = PhaseVector::new(w)?;
        if !qos_satisfied(&candidate, lifted) {
            continue;
        }
        let rate = sum_rate(&candidate, lifted);
        if best.as_ref().map_or(true, |(r, _)| rate > *r) {
            best = Some((rate, candidate));
        }
    }
    best.map(|(_, c)| c).ok_or(Error::NoFeasibleCandidate)
}

/// Full phase-optimization step: lift, DC-SDP, randomize, and accept the
/// candidate only if it does not reduce the energy efficiency (equivalently
/// the sum rate, since the power cost is fixed here).
///
/// Infeasibility anywhere falls back to the incumbent.
pub fn optimize_phases<T: Real, R: Rng>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    beams: &BeamformerSet<T>,
    power: &PowerAllocation<T>,
    incumbent: &PhaseVector<T>,
    q: usize,
    rng: &mut R,
) -> Result<PhaseVector<T>> {
    optimize_phases_with(
        config,
        channels,
        beams,
        power,
        incumbent,
        q,
        rng,
        &PhaseSolveOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn optimize_phases_with<T: Real, R: Rng>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    beams: &BeamformerSet<T>,
    power: &PowerAllocation<T>,
    incumbent: &PhaseVector<T>,
    q: usize,
    rng: &mut R,
    opts: &PhaseSolveOptions<T>,
) -> Result<PhaseVector<T>> {
    if q == 0 {
        return Ok(incumbent.clone());
    }
    let lifted = build_lifted(config, channels, beams, power)?;
    let incumbent_rate = sum_rate(incumbent, &lifted);

    let w_inc = incumbent.coefficients();
    let mut w0 = CMatrix::zeros(w_inc.len(), w_inc.len());
    w0.gerc(
        Complex::new(T::one(), T::zero()),
        w_inc,
        w_inc,
        Complex::new(T::zero(), T::zero()),
    );

    let iterate = match dc_sdp_solve_with(&lifted, &w0, w_inc, opts) {
        Ok(it) => it,
        Err(e) if e.is_infeasibility() => return Ok(incumbent.clone()),
        Err(e) => return Err(e),
    };
    match gaussian_randomization(&lifted, &iterate, q, rng) {
        Ok(candidate) => {
            if sum_rate(&candidate, &lifted) >= incumbent_rate {
                Ok(candidate)
            } else {
                Ok(incumbent.clone())
            }
        }
        Err(e) if e.is_infeasibility() => Ok(incumbent.clone()),
        Err(e) => Err(e),
    }
}
