//! Transmit power control for fixed beamformers and phases: maximize
//! energy efficiency over the per-user powers under SINR floors and power
//! caps.
//!
//! The fractional objective is handled with Dinkelbach's method: a sequence
//! of subtractive problems `maximize rate(P) - lambda * cost(P)` whose
//! parameter is updated to the achieved ratio. Each subtractive problem is
//! a difference of concave functions and is driven to a stationary point by
//! successively linearizing the subtracted (interference) term and solving
//! the resulting smooth concave program with the barrier kernel.
//!
//! Rates here are in bit/s/Hz (no bandwidth factor), so the returned ratio
//! is energy efficiency per hertz; multiply by the bandwidth for bit/J.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    effective_channel, noise_power, BeamformerSet, ChannelSet, PhaseVector, PowerAllocation,
    SystemConfig,
};
use crate::scalar::{conv, log2, Real};
use crate::solver::{
    solve_concave_affine, strictly_feasible_point, AffineIneqs, LogAffineObjective,
};

/// Normalized channel gains `g[k][i] = |v_k^H G Phi h_i|^2 / (N0 B ||v_k||^2)`.
///
/// With these gains the SINR of user `k` is
/// `P_k g[k][k] / (sum_{i != k} P_i g[k][i] + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable<T: Real> {
    pub gains: DMatrix<T>,
}

impl<T: Real> GainTable<T> {
    pub fn new(gains: DMatrix<T>) -> Self {
        debug_assert_eq!(gains.nrows(), gains.ncols());
        Self { gains }
    }

    pub fn num_users(&self) -> usize {
        self.gains.nrows()
    }

    pub fn is_all_zero(&self) -> bool {
        self.gains.iter().all(|&g| g == T::zero())
    }
}

/// Builds the normalized gain table for the current beams and phases.
pub fn build_gain_table<T: Real>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    phases: &PhaseVector<T>,
    beams: &BeamformerSet<T>,
) -> Result<GainTable<T>> {
    let k_users = config.num_users;
    let effective: Vec<_> = (0..k_users)
        .map(|i| effective_channel(&channels.irs_to_bs, phases, &channels.user_to_irs[i]))
        .collect::<Result<Vec<_>>>()?;
    let mut gains = DMatrix::zeros(k_users, k_users);
    for k in 0..k_users {
        let v = beams.user(k);
        let sigma2 = noise_power(config, &v);
        if !(sigma2 > T::zero()) {
            return Err(Error::ZeroBeamformer(k));
        }
        for i in 0..k_users {
            gains[(k, i)] = v.dotc(&effective[i]).modulus_squared() / sigma2;
        }
    }
    Ok(GainTable::new(gains))
}

/// Per-user SINR implied by a gain table.
pub fn sinr_from_gains<T: Real>(p: &DVector<T>, table: &GainTable<T>) -> DVector<T> {
    let k_users = table.num_users();
    DVector::from_fn(k_users, |k, _| {
        let mut interference = T::zero();
        for i in 0..k_users {
            if i != k {
                interference += table.gains[(k, i)] * p[i];
            }
        }
        table.gains[(k, k)] * p[k] / (interference + T::one())
    })
}

/// Sum rate in bit/s/Hz implied by a gain table.
pub fn rate_sum_from_gains<T: Real>(p: &DVector<T>, table: &GainTable<T>) -> T {
    sinr_from_gains(p, table)
        .iter()
        .fold(T::zero(), |acc, &g| acc + log2(T::one() + g))
}

/// Energy-efficiency ratio per hertz: `rate_sum / (psi sum P + Pc)`.
pub fn ee_ratio<T: Real>(p: &DVector<T>, table: &GainTable<T>, config: &SystemConfig<T>) -> T {
    let cost = config.amp_inefficiency * p.iter().fold(T::zero(), |a, &b| a + b)
        + config.circuit_power;
    rate_sum_from_gains(p, table) / cost
}

/// The two concave pieces of the subtractive objective at parameter
/// `lambda`:
///
/// - first: `sum_k log2(sum_i P_i g[k][i] + 1) - lambda (psi sum P + Pc)`
/// - second: `sum_k log2(sum_{i != k} P_i g[k][i] + 1)` (interference term)
///
/// Their difference is the subtractive Dinkelbach objective.
pub fn dc_terms<T: Real>(
    p: &DVector<T>,
    table: &GainTable<T>,
    lambda: T,
    config: &SystemConfig<T>,
) -> (T, T) {
    let k_users = table.num_users();
    let mut full = T::zero();
    let mut interf = T::zero();
    for k in 0..k_users {
        let mut all = T::one();
        let mut rest = T::one();
        for i in 0..k_users {
            let c = table.gains[(k, i)] * p[i];
            all += c;
            if i != k {
                rest += c;
            }
        }
        full += log2(all);
        interf += log2(rest);
    }
    let cost = config.amp_inefficiency * p.iter().fold(T::zero(), |a, &b| a + b)
        + config.circuit_power;
    (full - lambda * cost, interf)
}

/// Gradient of the interference term of [`dc_terms`].
pub fn interference_gradient<T: Real>(p: &DVector<T>, table: &GainTable<T>) -> DVector<T> {
    let k_users = table.num_users();
    let mut grad = DVector::zeros(k_users);
    for k in 0..k_users {
        let mut rest = T::one();
        for i in 0..k_users {
            if i != k {
                rest += table.gains[(k, i)] * p[i];
            }
        }
        let denom = rest * T::ln_2();
        for i in 0..k_users {
            if i != k {
                grad[i] += table.gains[(k, i)] / denom;
            }
        }
    }
    grad
}

/// Solver options for the power subproblem.
#[derive(Debug, Clone, Copy)]
pub struct PowerSolveOptions<T: Real> {
    pub dc_max_iters: usize,
    pub dc_rel_tol: T,
    pub dinkelbach_max_iters: usize,
    pub dinkelbach_tol: T,
    pub kkt_tol: T,
}

impl<T: Real> Default for PowerSolveOptions<T> {
    fn default() -> Self {
        Self {
            dc_max_iters: 50,
            dc_rel_tol: conv(1e-8),
            dinkelbach_max_iters: 30,
            dinkelbach_tol: conv(1e-6),
            kkt_tol: conv(1e-8),
        }
    }
}

/// One Dinkelbach iteration record.
#[derive(Debug, Clone)]
pub struct DinkelbachState<T: Real> {
    /// Ratio parameter after the update (non-decreasing across iterations).
    pub lambda: T,
    /// Value of the subtractive problem at the previous parameter
    /// (non-increasing across iterations).
    pub epsilon: T,
    pub iter: usize,
    pub p_current: PowerAllocation<T>,
}

/// QoS rows and power box as one inequality system.
///
/// QoS row `k`: `gamma_k (sum_{i!=k} g[k][i] P_i + 1) - g[k][k] P_k <= 0`.
/// Rows that reduce to `0 <= 0` (zero gain, zero floor) are dropped.
fn power_constraints<T: Real>(table: &GainTable<T>, config: &SystemConfig<T>) -> AffineIneqs<T> {
    let k_users = table.num_users();
    let box_rows = AffineIneqs::from_box(&DVector::zeros(k_users), &config.max_power);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for k in 0..k_users {
        let gamma = config.min_sinr[k];
        let mut row = DVector::zeros(k_users);
        for i in 0..k_users {
            row[i] = if i == k {
                -table.gains[(k, k)]
            } else {
                gamma * table.gains[(k, i)]
            };
        }
        if row.iter().all(|&c| c == T::zero()) && gamma <= T::zero() {
            continue;
        }
        rows.push(row);
        rhs.push(-gamma);
    }
    if rows.is_empty() {
        return box_rows;
    }
    let qos = AffineIneqs::new(
        DMatrix::from_fn(rows.len(), k_users, |j, i| rows[j][i]),
        DVector::from_iterator(rhs.len(), rhs.iter().cloned()),
    );
    box_rows.stacked(&qos)
}

/// Minimum-power QoS-feasible allocation, or `Error::Infeasible` when the
/// SINR floors cannot be met within the caps.
///
/// Solves the LP `min sum P` over the QoS polytope with the barrier kernel;
/// the returned point is strictly interior, so it can seed the DC loop
/// directly.
pub fn qos_feasible_init<T: Real>(
    table: &GainTable<T>,
    config: &SystemConfig<T>,
) -> Result<PowerAllocation<T>> {
    let ineqs = power_constraints(table, config);
    let guess = config.max_power.map(|p| p * conv::<T>(0.5));
    let x0 = strictly_feasible_point(&ineqs, &guess)?;
    let k_users = table.num_users();
    let objective =
        LogAffineObjective::linear_only(DVector::from_element(k_users, -T::one()));
    let sol = solve_concave_affine(&objective, &ineqs, &x0, conv(1e-8))?;
    Ok(PowerAllocation::new(sol.x))
}

/// DC ascent on the subtractive objective at fixed `lambda`, from the
/// feasible start `p0`.
///
/// Each iteration linearizes the interference term at the incumbent and
/// maximizes the resulting smooth concave surrogate; the true objective is
/// non-decreasing across iterations and the returned point is feasible.
pub fn dc_inner_solve<T: Real>(
    table: &GainTable<T>,
    lambda: T,
    config: &SystemConfig<T>,
    p0: &PowerAllocation<T>,
) -> Result<PowerAllocation<T>> {
    dc_inner_solve_with(table, lambda, config, p0, &PowerSolveOptions::default())
}

pub fn dc_inner_solve_with<T: Real>(
    table: &GainTable<T>,
    lambda: T,
    config: &SystemConfig<T>,
    p0: &PowerAllocation<T>,
    opts: &PowerSolveOptions<T>,
) -> Result<PowerAllocation<T>> {
    let ineqs = power_constraints(table, config);
    let feas_tol = conv::<T>(1e-9);
    if ineqs.max_violation(&p0.p) > feas_tol * (T::one() + config.max_power.amax()) {
        return Err(Error::Infeasible("DC start point violates constraints".into()));
    }
    let warm = if ineqs.is_strictly_feasible(&p0.p) {
        p0.p.clone()
    } else {
        strictly_feasible_point(&ineqs, &p0.p)?
    };

    // DC ascent only reaches a stationary point; a second run from the
    // high-power corner covers the basin the warm start can miss.
    let mut starts = vec![warm];
    let high = config.max_power.map(|p| p * conv::<T>(0.98));
    if let Ok(xh) = strictly_feasible_point(&ineqs, &high) {
        if (&xh - &starts[0]).amax() > conv::<T>(1e-6) * config.max_power.amax() {
            starts.push(xh);
        }
    }

    let mut best: Option<(DVector<T>, T)> = None;
    for start in starts {
        let (p, value) = dc_ascend(table, lambda, config, &ineqs, start, opts)?;
        if best.as_ref().map_or(true, |(_, v)| value > *v) {
            best = Some((p, value));
        }
    }
    let (p, _) = best.expect("at least the warm start ran");
    Ok(PowerAllocation::new(p))
}

/// One complete DC ascent from `start`; returns the final point and its
/// objective value. The value sequence is non-decreasing across iterates.
fn dc_ascend<T: Real>(
    table: &GainTable<T>,
    lambda: T,
    config: &SystemConfig<T>,
    ineqs: &AffineIneqs<T>,
    start: DVector<T>,
    opts: &PowerSolveOptions<T>,
) -> Result<(DVector<T>, T)> {
    let k_users = table.num_users();
    let objective_value = |p: &DVector<T>| {
        let (f1, f2) = dc_terms(p, table, lambda, config);
        f1 - f2
    };
    let mut p = start;
    let mut value = objective_value(&p);

    for _ in 0..opts.dc_max_iters {
        let grad2 = interference_gradient(&p, table);
        let (_, f2_p) = dc_terms(&p, table, lambda, config);
        // Surrogate: f1(P) - f2(P_l) - <grad f2(P_l), P - P_l>.
        let mut linear = DVector::from_element(
            k_users,
            -lambda * config.amp_inefficiency,
        );
        linear -= &grad2;
        let terms = (0..k_users)
            .map(|k| (table.gains.row(k).transpose(), T::one()))
            .collect();
        let objective = LogAffineObjective {
            terms,
            linear,
            constant: -lambda * config.circuit_power - f2_p + grad2.dot(&p),
        };
        let sol = solve_concave_affine(&objective, ineqs, &p, opts.kkt_tol)?;
        let new_value = objective_value(&sol.x);
        if new_value < value - conv::<T>(1e-12) * (T::one() + value.abs()) {
            break; // keep the incumbent; surrogate gain was below solver noise
        }
        let improved = new_value - value;
        p = sol.x;
        value = new_value;
        if improved <= opts.dc_rel_tol * (T::one() + value.abs()) {
            break;
        }
    }
    Ok((p, value))
}

/// Dinkelbach's method over the gain table, warm-started from `p_init`
/// (which must be feasible).
///
/// Returns the final allocation and ratio parameter (bit/s/Hz per watt).
/// The lambda sequence is non-decreasing; on termination the subtractive
/// optimum satisfies `|epsilon| <= tol * (1 + |lambda| Pc)`. The returned
/// allocation never has a lower EE ratio than `p_init`.
pub fn dinkelbach_solve<T: Real>(
    table: &GainTable<T>,
    config: &SystemConfig<T>,
    p_init: &PowerAllocation<T>,
) -> Result<(PowerAllocation<T>, T)> {
    let (p, lambda, _) =
        dinkelbach_solve_with(table, config, p_init, &PowerSolveOptions::default())?;
    Ok((p, lambda))
}

/// As [`dinkelbach_solve`], also returning the per-iteration trace.
pub fn dinkelbach_solve_with<T: Real>(
    table: &GainTable<T>,
    config: &SystemConfig<T>,
    p_init: &PowerAllocation<T>,
    opts: &PowerSolveOptions<T>,
) -> Result<(PowerAllocation<T>, T, Vec<DinkelbachState<T>>)> {
    let k_users = table.num_users();
    if table.is_all_zero() {
        // No signal reaches the receiver: EE is zero for every allocation.
        if config.min_sinr.iter().any(|&g| g > T::zero()) {
            return Err(Error::Infeasible(
                "positive SINR floor with an all-zero gain table".into(),
            ));
        }
        return Ok((PowerAllocation::zeros(k_users), T::zero(), Vec::new()));
    }

    let ee_init = ee_ratio(&p_init.p, table, config);
    let mut p = p_init.clone();
    let mut lambda = T::zero();
    let mut states = Vec::new();

    for iter in 1..=opts.dinkelbach_max_iters {
        let p_new = dc_inner_solve_with(table, lambda, config, &p, opts)?;
        let rate = rate_sum_from_gains(&p_new.p, table);
        let cost = config.amp_inefficiency * p_new.total() + config.circuit_power;
        let epsilon = rate - lambda * cost;
        let lambda_new = rate / cost;
        states.push(DinkelbachState {
            lambda: lambda_new,
            epsilon,
            iter,
            p_current: p_new.clone(),
        });
        p = p_new;
        lambda = lambda_new;
        if epsilon.abs() <= opts.dinkelbach_tol * (T::one() + lambda.abs() * config.circuit_power)
        {
            break;
        }
    }

    // Warm-started DC solves are local: never hand back something worse
    // than the incumbent the caller provided.
    if ee_ratio(&p.p, table, config) < ee_init {
        return Ok((p_init.clone(), ee_init, states));
    }
    Ok((p, lambda, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_sinr, BeamformerSet, ChannelSet, PhaseVector};
    use crate::scalar::dbm_to_watts;
    use nalgebra::Complex;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    type C = Complex<f64>;

    fn config_with(k: usize, gamma_min: f64) -> SystemConfig<f64> {
        SystemConfig::new(k, 2, 2, 1e6, dbm_to_watts(-174.0), 0.05, 0.35, 0.1, gamma_min)
    }

    fn random_gains(rng: &mut StdRng, k: usize) -> GainTable<f64> {
        let mut g = DMatrix::zeros(k, k);
        for a in 0..k {
            let diag = 10f64.powf(rng.gen_range(1.5..3.5));
            for b in 0..k {
                g[(a, b)] = if a == b {
                    diag
                } else {
                    diag * rng.gen_range(0.01..0.25)
                };
            }
        }
        GainTable::new(g)
    }

    fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        for _ in 0..300 {
            if f(c) > f(d) {
                b = d;
                d = c;
                c = b - phi * (b - a);
            } else {
                a = c;
                c = d;
                d = a + phi * (b - a);
            }
        }
        let x = 0.5 * (a + b);
        (x, f(x))
    }

    #[test]
    fn gain_table_orthogonal_beam_gives_zero() {
        let config = config_with(2, 0.0);
        let g = identity_cmatrix2();
        // h_0 maps to e_0, h_1 maps to e_1; v_0 = e_1 is orthogonal to
        // the effective channel of user 0.
        let channels = ChannelSet {
            irs_to_bs: g,
            user_to_irs: vec![
                cvector(vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]),
                cvector(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]),
            ],
            d_bs_irs: 30.0,
            d_irs_user: vec![40.0, 50.0],
        };
        let phases = PhaseVector::identity(2);
        let beams = BeamformerSet::new(nalgebra::DMatrix::from_columns(&[
            cvector(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]),
            cvector(vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]),
        ]));
        let table = build_gain_table(&config, &channels, &phases, &beams).unwrap();
        assert_eq!(table.gains[(0, 0)], 0.0);
        assert_eq!(table.gains[(1, 1)], 0.0);
        assert!(table.gains[(0, 1)] > 0.0);
    }

    fn identity_cmatrix2() -> crate::scalar::CMatrix<f64> {
        nalgebra::DMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        })
    }

    fn cvector(v: Vec<C>) -> crate::scalar::CVector<f64> {
        nalgebra::DVector::from_vec(v)
    }

    #[test]
    fn gain_table_invariant_to_beam_scaling() {
        let config = config_with(2, 0.0);
        let mut rng = StdRng::seed_from_u64(1);
        let channels = ChannelSet {
            irs_to_bs: nalgebra::DMatrix::from_fn(2, 2, |_, _| {
                C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }),
            user_to_irs: vec![
                nalgebra::DVector::from_fn(2, |_, _| {
                    C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }),
                nalgebra::DVector::from_fn(2, |_, _| {
                    C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }),
            ],
            d_bs_irs: 30.0,
            d_irs_user: vec![40.0, 50.0],
        };
        let phases = PhaseVector::identity(2);
        let beams = BeamformerSet::new(nalgebra::DMatrix::from_fn(2, 2, |_, _| {
            C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }));
        let scaled = BeamformerSet::new(&beams.columns * C::new(0.0, 3.0));
        let t1 = build_gain_table(&config, &channels, &phases, &beams).unwrap();
        let t2 = build_gain_table(&config, &channels, &phases, &scaled).unwrap();
        assert!((&t1.gains - &t2.gains).amax() < 1e-9 * t1.gains.amax());
    }

    #[test]
    fn gain_table_matches_scalar_oracle() {
        // Term-by-term arithmetic for K=2.
        let config = config_with(2, 0.0);
        let mut rng = StdRng::seed_from_u64(2);
        let rc = |rng: &mut StdRng| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let channels = ChannelSet {
            irs_to_bs: nalgebra::DMatrix::from_fn(2, 2, |_, _| rc(&mut rng)),
            user_to_irs: vec![
                nalgebra::DVector::from_fn(2, |_, _| rc(&mut rng)),
                nalgebra::DVector::from_fn(2, |_, _| rc(&mut rng)),
            ],
            d_bs_irs: 30.0,
            d_irs_user: vec![40.0, 50.0],
        };
        let angles: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let phases = PhaseVector::from_angles(&angles);
        let beams =
            BeamformerSet::new(nalgebra::DMatrix::from_fn(2, 2, |_, _| rc(&mut rng)));
        let table = build_gain_table(&config, &channels, &phases, &beams).unwrap();

        for k in 0..2 {
            let v = beams.user(k);
            let sigma2 = config.noise_floor() * v.norm_squared();
            for i in 0..2 {
                let mut acc = C::new(0.0, 0.0);
                for a in 0..2 {
                    for j in 0..2 {
                        acc += v[a].conj()
                            * channels.irs_to_bs[(a, j)]
                            * phases.coefficients()[j].conj()
                            * channels.user_to_irs[i][j];
                    }
                }
                let expect = acc.norm_sqr() / sigma2;
                let got = table.gains[(k, i)];
                assert!((got - expect).abs() <= 1e-9 * expect.max(1e-30));
            }
        }
    }

    #[test]
    fn dc_terms_zero_power() {
        let config = config_with(3, 0.0);
        let mut rng = StdRng::seed_from_u64(3);
        let table = random_gains(&mut rng, 3);
        let p = DVector::zeros(3);
        let lambda = 7.0;
        let (f1, f2) = dc_terms(&p, &table, lambda, &config);
        assert!((f1 + lambda * config.circuit_power).abs() < 1e-12);
        assert_eq!(f2, 0.0);
    }

    #[test]
    fn dc_terms_single_user_no_interference() {
        let config = config_with(1, 0.0);
        let table = GainTable::new(DMatrix::from_element(1, 1, 100.0));
        for &pv in &[0.0, 0.05, 0.1] {
            let p = DVector::from_element(1, pv);
            let (_, f2) = dc_terms(&p, &table, 3.0, &config);
            assert_eq!(f2, 0.0);
        }
    }

    #[test]
    fn dc_terms_cross_module_consistency() {
        // f1 - f2 must equal sum log2(1+sinr) - lambda cost with the SINR
        // computed through the full channel model.
        let config = config_with(3, 0.0);
        let mut rng = StdRng::seed_from_u64(4);
        let rc = |rng: &mut StdRng| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let channels = ChannelSet {
            irs_to_bs: nalgebra::DMatrix::from_fn(2, 2, |_, _| rc(&mut rng)),
            user_to_irs: (0..3)
                .map(|_| nalgebra::DVector::from_fn(2, |_, _| rc(&mut rng)))
                .collect(),
            d_bs_irs: 30.0,
            d_irs_user: vec![40.0, 50.0, 60.0],
        };
        let angles: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let phases = PhaseVector::from_angles(&angles);
        let beams =
            BeamformerSet::new(nalgebra::DMatrix::from_fn(2, 3, |_, _| rc(&mut rng)));
        let table = build_gain_table(&config, &channels, &phases, &beams).unwrap();
        let p = PowerAllocation::new(DVector::from_vec(vec![0.02, 0.05, 0.08]));
        let lambda = 11.0;

        let sinr = compute_sinr(&config, &channels, &phases, &p, &beams).unwrap();
        let rate: f64 = sinr.iter().map(|&g| (1.0 + g).log2()).sum();
        let cost = 0.35 * p.total() + 0.05;
        let expect = rate - lambda * cost;

        let (f1, f2) = dc_terms(&p.p, &table, lambda, &config);
        assert!(
            ((f1 - f2) - expect).abs() <= 1e-9 * expect.abs().max(1.0),
            "{} vs {expect}",
            f1 - f2
        );
    }

    #[test]
    fn interference_gradient_single_user_zero() {
        let table = GainTable::new(DMatrix::from_element(1, 1, 50.0));
        let g = interference_gradient(&DVector::from_element(1, 0.05), &table);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn interference_gradient_no_cross_gains_zero() {
        let mut gm = DMatrix::zeros(3, 3);
        for i in 0..3 {
            gm[(i, i)] = 100.0;
        }
        let table = GainTable::new(gm);
        let g = interference_gradient(&DVector::from_element(3, 0.05), &table);
        assert!(g.amax() == 0.0);
    }

    #[test]
    fn interference_gradient_matches_finite_differences() {
        let config = config_with(3, 0.0);
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let table = random_gains(&mut rng, 3);
            let p = DVector::from_fn(3, |_, _| rng.gen_range(0.001..0.1));
            let grad = interference_gradient(&p, &table);
            let f2 = |p: &DVector<f64>| dc_terms(p, &table, 0.0, &config).1;
            for i in 0..3 {
                let h = 1e-6 * p[i].max(1e-3);
                let mut pp = p.clone();
                pp[i] += h;
                let mut pm = p.clone();
                pm[i] -= h;
                let fd = (f2(&pp) - f2(&pm)) / (2.0 * h);
                let denom = fd.abs().max(1e-8);
                assert!(
                    (grad[i] - fd).abs() / denom < 1e-5,
                    "grad {} vs fd {fd}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn dc_inner_lambda_zero_uses_full_power() {
        // Single user, lambda = 0: the objective is increasing in P, so the
        // optimum sits at the cap.
        let config = config_with(1, 0.0);
        let table = GainTable::new(DMatrix::from_element(1, 1, 1e4));
        let p0 = PowerAllocation::new(DVector::from_element(1, 0.01));
        let p = dc_inner_solve(&table, 0.0, &config, &p0).unwrap();
        assert!((p.p[0] - 0.1).abs() < 1e-6 * 0.1, "{}", p.p[0]);
    }

    #[test]
    fn dc_inner_large_lambda_sits_at_qos_floor() {
        // K=1, gamma_min = 1, g = 1e4: the QoS bound is P >= 1e-4. With a
        // large lambda the objective decreases in P, so the optimum is the
        // bound. Oracle: dense 1-D scan.
        let config = config_with(1, 1.0);
        let g = 1e4;
        let table = GainTable::new(DMatrix::from_element(1, 1, g));
        let lambda = 1e5;
        let p0 = PowerAllocation::new(DVector::from_element(1, 0.05));
        let p = dc_inner_solve(&table, lambda, &config, &p0).unwrap();

        let objective = |pv: f64| (1.0 + g * pv).log2() - lambda * (0.35 * pv + 0.05);
        let lo = 1.0 / g;
        let mut best = (f64::NEG_INFINITY, lo);
        for i in 0..10_000 {
            let pv = lo + (0.1 - lo) * i as f64 / 9_999.0;
            let v = objective(pv);
            if v > best.0 {
                best = (v, pv);
            }
        }
        assert!(
            (p.p[0] - best.1).abs() <= 1e-4 * best.1,
            "{} vs scan {}",
            p.p[0],
            best.1
        );
    }

    #[test]
    fn dc_inner_matches_2d_grid() {
        let mut rng = StdRng::seed_from_u64(6);
        for trial in 0..10 {
            let config = config_with(2, 0.2);
            let table = random_gains(&mut rng, 2);
            let lambda = rng.gen_range(0.0..50.0);
            let Ok(p0) = qos_feasible_init(&table, &config) else {
                continue;
            };
            let p = dc_inner_solve(&table, lambda, &config, &p0).unwrap();
            let value = {
                let (f1, f2) = dc_terms(&p.p, &table, lambda, &config);
                f1 - f2
            };

            let mut grid_best = f64::NEG_INFINITY;
            let steps = 200;
            for i in 0..=steps {
                for j in 0..=steps {
                    let pv = DVector::from_vec(vec![
                        0.1 * i as f64 / steps as f64,
                        0.1 * j as f64 / steps as f64,
                    ]);
                    let s = sinr_from_gains(&pv, &table);
                    if s[0] < 0.2 || s[1] < 0.2 {
                        continue;
                    }
                    let (f1, f2) = dc_terms(&pv, &table, lambda, &config);
                    grid_best = grid_best.max(f1 - f2);
                }
            }
            assert!(
                value >= grid_best - 1e-3 * grid_best.abs().max(1.0),
                "trial {trial}: dc {value} vs grid {grid_best}"
            );
        }
    }

    #[test]
    fn qos_init_zero_floor_is_zero_power() {
        let config = config_with(3, 0.0);
        let mut rng = StdRng::seed_from_u64(7);
        let table = random_gains(&mut rng, 3);
        let p = qos_feasible_init(&table, &config).unwrap();
        assert!(p.p.amax() <= 1e-6 * 0.1, "{:?}", p.p.as_slice());
    }

    #[test]
    fn qos_init_single_user_closed_form() {
        let config = config_with(1, 0.5);
        let g = 100.0;
        let table = GainTable::new(DMatrix::from_element(1, 1, g));
        let p = qos_feasible_init(&table, &config).unwrap();
        let expect = 0.5 / g;
        assert!((p.p[0] - expect).abs() <= 1e-4 * expect, "{}", p.p[0]);

        // Floor above the cap: infeasible.
        let config_hard = config_with(1, 0.5);
        let weak = GainTable::new(DMatrix::from_element(1, 1, 1.0)); // needs 0.5 W > 0.1 W
        assert!(matches!(
            qos_feasible_init(&weak, &config_hard),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn qos_init_matches_grid_feasibility() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..20 {
            let gamma = rng.gen_range(0.1..2.0);
            let config = config_with(2, gamma);
            let table = random_gains(&mut rng, 2);
            let lp = qos_feasible_init(&table, &config);

            let steps = 200;
            let mut grid_feasible = false;
            for i in 0..=steps {
                for j in 0..=steps {
                    let pv = DVector::from_vec(vec![
                        0.1 * i as f64 / steps as f64,
                        0.1 * j as f64 / steps as f64,
                    ]);
                    let s = sinr_from_gains(&pv, &table);
                    if s[0] >= gamma * 1.0000001 && s[1] >= gamma * 1.0000001 {
                        grid_feasible = true;
                    }
                }
            }
            match lp {
                Ok(p) => {
                    let s = sinr_from_gains(&p.p, &table);
                    assert!(s[0] >= gamma * (1.0 - 1e-6) && s[1] >= gamma * (1.0 - 1e-6));
                }
                Err(_) => assert!(
                    !grid_feasible,
                    "LP says infeasible but the grid found a feasible point"
                ),
            }
        }
    }

    #[test]
    fn dinkelbach_single_user_matches_golden_section() {
        // lambda* = max over P of log2(1+gP)/(psi P + Pc).
        let config = config_with(1, 1.0);
        let g = 1e9;
        let table = GainTable::new(DMatrix::from_element(1, 1, g));
        let p_init = qos_feasible_init(&table, &config).unwrap();
        let (p, lambda) = dinkelbach_solve(&table, &config, &p_init).unwrap();

        let ee = |pv: f64| (1.0 + g * pv).log2() / (0.35 * pv + 0.05);
        let (_, oracle) = golden_section_max(ee, 1.0 / g, 0.1);
        assert!(
            (lambda - oracle).abs() <= 1e-4 * oracle,
            "lambda {lambda} vs oracle {oracle}"
        );
        assert!(p.p[0] > 0.0 && p.p[0] <= 0.1);
    }

    #[test]
    fn dinkelbach_zero_gains_zero_everything() {
        let config = config_with(2, 0.0);
        let table = GainTable::new(DMatrix::zeros(2, 2));
        let p_init = PowerAllocation::new(DVector::from_element(2, 0.05));
        let (p, lambda) = dinkelbach_solve(&table, &config, &p_init).unwrap();
        assert_eq!(lambda, 0.0);
        assert_eq!(p.p.amax(), 0.0);
    }

    #[test]
    fn dinkelbach_monotone_lambda_and_small_final_epsilon() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..30 {
            let k = rng.gen_range(1..=3);
            let gamma = rng.gen_range(0.0..0.5);
            let config = config_with(k, gamma);
            let table = random_gains(&mut rng, k);
            let Ok(p_init) = qos_feasible_init(&table, &config) else {
                continue;
            };
            let (p, lambda, states) =
                dinkelbach_solve_with(&table, &config, &p_init, &PowerSolveOptions::default())
                    .unwrap();
            for w in states.windows(2) {
                assert!(
                    w[1].lambda >= w[0].lambda - 1e-9 * w[0].lambda.abs().max(1.0),
                    "lambda not monotone"
                );
                assert!(
                    w[1].epsilon <= w[0].epsilon + 1e-9 * w[0].epsilon.abs().max(1.0),
                    "epsilon not non-increasing"
                );
            }
            let last = states.last().unwrap();
            assert!(last.epsilon.abs() <= 1e-6 * (1.0 + lambda * 0.05) + 1e-12);
            // Feasibility of the returned allocation.
            let s = sinr_from_gains(&p.p, &table);
            for i in 0..k {
                assert!(s[i] >= gamma * (1.0 - 1e-6));
                assert!(p.p[i] <= 0.1 + 1e-12 && p.p[i] >= 0.0);
            }
            // Never worse than the starting point.
            assert!(
                ee_ratio(&p.p, &table, &config)
                    >= ee_ratio(&p_init.p, &table, &config) - 1e-9
            );
        }
    }

    #[test]
    fn dc_inner_rejects_infeasible_start() {
        let config = config_with(1, 1.0);
        let table = GainTable::new(DMatrix::from_element(1, 1, 100.0));
        // QoS requires P >= 0.01; start far below it.
        let p0 = PowerAllocation::new(DVector::from_element(1, 1e-4));
        assert!(matches!(
            dc_inner_solve(&table, 1.0, &config, &p0),
            Err(Error::Infeasible(_))
        ));
    }
}
