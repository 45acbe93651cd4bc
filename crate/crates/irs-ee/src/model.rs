//! System model shared by every solver block: effective channels, SINR,
//! per-user rates and the energy-efficiency objective.
//!
//! Conventions:
//! - all powers are stored in watts; dBm appears only at I/O boundaries;
//! - the surface coefficient vector `w` stores the conjugates of the
//!   diagonal phase-shift entries, so the applied phase matrix is
//!   `diag(conj(w))`;
//! - the noise seen through a beamformer `v` is the expectation
//!   `N0 * B * ||v||^2` (rates are computed analytically, not simulated at
//!   symbol level).

use nalgebra::{Complex, ComplexField, DVector};

use crate::error::{Error, Result};
use crate::scalar::{conv, log2, CMatrix, CVector, Real};

/// Static system parameters: array sizes, bandwidth, noise and power model.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T: Real> {
    /// Number of single-antenna users K.
    pub num_users: usize,
    /// Number of base-station antennas M.
    pub num_bs_antennas: usize,
    /// Number of reflecting elements N.
    pub num_irs_elements: usize,
    /// Bandwidth in Hz.
    pub bandwidth: T,
    /// Noise power spectral density in W/Hz (linear).
    pub noise_psd: T,
    /// Fixed circuit power consumption in W.
    pub circuit_power: T,
    /// Power-amplifier inefficiency factor applied to transmit powers.
    pub amp_inefficiency: T,
    /// Per-user maximum transmit power in W.
    pub max_power: DVector<T>,
    /// Per-user minimum SINR (linear).
    pub min_sinr: DVector<T>,
}

impl<T: Real> SystemConfig<T> {
    /// Uniform per-user caps and SINR floors.
    pub fn new(
        num_users: usize,
        num_bs_antennas: usize,
        num_irs_elements: usize,
        bandwidth: T,
        noise_psd: T,
        circuit_power: T,
        amp_inefficiency: T,
        max_power: T,
        min_sinr: T,
    ) -> Self {
        Self {
            num_users,
            num_bs_antennas,
            num_irs_elements,
            bandwidth,
            noise_psd,
            circuit_power,
            amp_inefficiency,
            max_power: DVector::from_element(num_users, max_power),
            min_sinr: DVector::from_element(num_users, min_sinr),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: T| x > T::zero();
        if self.num_users == 0 || self.num_bs_antennas == 0 || self.num_irs_elements == 0 {
            return Err(Error::InvalidConfig("array sizes must be >= 1".into()));
        }
        if !(pos(self.bandwidth) && pos(self.noise_psd) && pos(self.circuit_power)) {
            return Err(Error::InvalidConfig(
                "bandwidth, noise PSD and circuit power must be positive".into(),
            ));
        }
        if !pos(self.amp_inefficiency) {
            return Err(Error::InvalidConfig(
                "amplifier inefficiency must be positive".into(),
            ));
        }
        if self.max_power.len() != self.num_users || self.min_sinr.len() != self.num_users {
            return Err(Error::DimensionMismatch(
                "per-user vectors must have length K".into(),
            ));
        }
        if self.max_power.iter().any(|&p| !(p > T::zero())) {
            return Err(Error::InvalidConfig("max power must be positive".into()));
        }
        if self.min_sinr.iter().any(|&g| g < T::zero()) {
            return Err(Error::InvalidConfig("min SINR must be >= 0".into()));
        }
        Ok(())
    }

    /// Total noise power through a unit-norm beamformer: `N0 * B` in W.
    pub fn noise_floor(&self) -> T {
        self.noise_psd * self.bandwidth
    }
}

/// One random channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T: Real> {
    /// IRS-to-BS channel matrix, M x N, linear amplitude including path loss.
    pub irs_to_bs: CMatrix<T>,
    /// Per-user user-to-IRS channel vectors, each N x 1.
    pub user_to_irs: Vec<CVector<T>>,
    /// BS-IRS distance in meters.
    pub d_bs_irs: T,
    /// Per-user IRS-user distances in meters.
    pub d_irs_user: Vec<T>,
}

impl<T: Real> ChannelSet<T> {
    pub fn validate(&self, config: &SystemConfig<T>) -> Result<()> {
        let (m, n) = self.irs_to_bs.shape();
        if m != config.num_bs_antennas || n != config.num_irs_elements {
            return Err(Error::DimensionMismatch(format!(
                "IRS-to-BS matrix is {m}x{n}, expected {}x{}",
                config.num_bs_antennas, config.num_irs_elements
            )));
        }
        if self.user_to_irs.len() != config.num_users || self.d_irs_user.len() != config.num_users
        {
            return Err(Error::DimensionMismatch(
                "per-user channel count must be K".into(),
            ));
        }
        for h in &self.user_to_irs {
            if h.len() != config.num_irs_elements {
                return Err(Error::DimensionMismatch(
                    "user-to-IRS vector must have length N".into(),
                ));
            }
        }
        let finite = |c: &Complex<T>| c.re.is_finite() && c.im.is_finite();
        if !self.irs_to_bs.iter().all(finite)
            || !self.user_to_irs.iter().all(|h| h.iter().all(finite))
        {
            return Err(Error::InvalidConfig("channel entries must be finite".into()));
        }
        Ok(())
    }
}

/// Unit-modulus reflection coefficients of the surface, in vector form.
///
/// Entry `j` holds the conjugate of the `j`-th diagonal phase-shift element.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector<T: Real> {
    w: CVector<T>,
}

impl<T: Real> PhaseVector<T> {
    /// Modulus tolerance: what the spec allows, widened for low-precision scalars.
    fn modulus_tol() -> T {
        conv::<T>(1e-9).max(T::default_epsilon() * conv(64.0))
    }

    /// Wraps a coefficient vector, checking each entry has unit modulus.
    pub fn new(w: CVector<T>) -> Result<Self> {
        let tol = Self::modulus_tol();
        for (j, c) in w.iter().enumerate() {
            if (c.modulus() - T::one()).abs() > tol {
                return Err(Error::InvalidConfig(format!(
                    "phase coefficient {j} does not have unit modulus"
                )));
            }
        }
        Ok(Self { w })
    }

    /// All-ones coefficients (identity phase matrix).
    pub fn identity(n: usize) -> Self {
        Self {
            w: CVector::from_element(n, Complex::new(T::one(), T::zero())),
        }
    }

    /// Builds coefficients from phase angles in radians: `w_j = e^{i a_j}`.
    pub fn from_angles(angles: &[T]) -> Self {
        Self {
            w: CVector::from_iterator(
                angles.len(),
                angles.iter().map(|&a| Complex::new(a.cos(), a.sin())),
            ),
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.len() == 0
    }

    /// The stored coefficient vector `w` (conjugate of the diagonal entries).
    pub fn coefficients(&self) -> &CVector<T> {
        &self.w
    }

    /// The applied per-element phase shifts, i.e. `conj(w)`.
    pub fn applied_shifts(&self) -> CVector<T> {
        self.w.map(|c| c.conj())
    }
}

/// Per-user transmit powers in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation<T: Real> {
    pub p: DVector<T>,
}

impl<T: Real> PowerAllocation<T> {
    pub fn new(p: DVector<T>) -> Self {
        Self { p }
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            p: DVector::zeros(k),
        }
    }

    pub fn total(&self) -> T {
        self.p.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn validate(&self, config: &SystemConfig<T>) -> Result<()> {
        if self.p.len() != config.num_users {
            return Err(Error::DimensionMismatch("power vector must be K".into()));
        }
        for k in 0..self.p.len() {
            if !(self.p[k] >= T::zero() && self.p[k] <= config.max_power[k]) {
                return Err(Error::InvalidConfig(format!(
                    "power {k} outside [0, Pmax]"
                )));
            }
        }
        Ok(())
    }
}

/// Receive beamforming vectors at the BS, one column per user (M x K).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet<T: Real> {
    pub columns: CMatrix<T>,
}

impl<T: Real> BeamformerSet<T> {
    pub fn new(columns: CMatrix<T>) -> Self {
        Self { columns }
    }

    pub fn user(&self, k: usize) -> CVector<T> {
        self.columns.column(k).into_owned()
    }

    pub fn num_users(&self) -> usize {
        self.columns.ncols()
    }
}

/// Effective user-to-BS channel through the surface: `G diag(conj(w)) h`.
pub fn effective_channel<T: Real>(
    irs_to_bs: &CMatrix<T>,
    phases: &PhaseVector<T>,
    user_to_irs: &CVector<T>,
) -> Result<CVector<T>> {
    let (_, n) = irs_to_bs.shape();
    if phases.len() != n || user_to_irs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "effective channel: G has {n} columns, w has {}, h has {}",
            phases.len(),
            user_to_irs.len()
        )));
    }
    let shifted = CVector::from_iterator(
        n,
        phases
            .coefficients()
            .iter()
            .zip(user_to_irs.iter())
            .map(|(w, h)| w.conj() * h),
    );
    Ok(irs_to_bs * shifted)
}

/// Expected noise power through beamformer `v`: `N0 * B * ||v||^2` in W.
pub fn noise_power<T: Real>(config: &SystemConfig<T>, v: &CVector<T>) -> T {
    config.noise_floor() * v.norm_squared()
}

/// Per-user SINR for the given powers, beamformers and phases.
pub fn compute_sinr<T: Real>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    phases: &PhaseVector<T>,
    power: &PowerAllocation<T>,
    beams: &BeamformerSet<T>,
) -> Result<DVector<T>> {
    let k_users = config.num_users;
    let effective: Vec<CVector<T>> = (0..k_users)
        .map(|i| effective_channel(&channels.irs_to_bs, phases, &channels.user_to_irs[i]))
        .collect::<Result<_>>()?;

    let mut sinr = DVector::zeros(k_users);
    for k in 0..k_users {
        let v = beams.user(k);
        if v.norm_squared() == T::zero() {
            return Err(Error::ZeroBeamformer(k));
        }
        let mut signal = T::zero();
        let mut interference = T::zero();
        for i in 0..k_users {
            let coupling = v.dotc(&effective[i]).modulus_squared() * power.p[i];
            if i == k {
                signal = coupling;
            } else {
                interference += coupling;
            }
        }
        sinr[k] = signal / (interference + noise_power(config, &v));
    }
    Ok(sinr)
}

/// Energy efficiency in bit/J: `B * sum log2(1+g_k) / (psi * sum P + Pc)`.
pub fn compute_ee<T: Real>(config: &SystemConfig<T>, sinr: &DVector<T>, power: &PowerAllocation<T>) -> T {
    let rate_sum = sinr
        .iter()
        .fold(T::zero(), |acc, &g| acc + log2(T::one() + g));
    let consumed = config.amp_inefficiency * power.total() + config.circuit_power;
    config.bandwidth * rate_sum / consumed
}

/// Element-wise product of the row vector `v^H G` with `h`, as an N-vector.
///
/// Satisfies `|w^H out|^2 = |v^H G diag(conj(w)) h|^2` for every unit-modulus
/// coefficient vector `w`.
pub fn hadamard_channel<T: Real>(
    v: &CVector<T>,
    irs_to_bs: &CMatrix<T>,
    user_to_irs: &CVector<T>,
) -> Result<CVector<T>> {
    let (m, n) = irs_to_bs.shape();
    if v.len() != m || user_to_irs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "hadamard channel: G is {m}x{n}, v has {}, h has {}",
            v.len(),
            user_to_irs.len()
        )));
    }
    let row = v.adjoint() * irs_to_bs; // 1 x N
    Ok(CVector::from_iterator(
        n,
        (0..n).map(|j| row[(0, j)] * user_to_irs[j]),
    ))
}

/// Snapshot of one optimized configuration plus its quality metrics.
#[derive(Debug, Clone)]
pub struct SolutionState<T: Real> {
    pub power: PowerAllocation<T>,
    pub beams: BeamformerSet<T>,
    pub phases: PhaseVector<T>,
    /// Per-user SINR, linear.
    pub sinr: DVector<T>,
    /// Per-user rate in bit/s.
    pub rate: DVector<T>,
    /// Energy efficiency in bit/J.
    pub ee: T,
    /// True when every user meets its SINR floor (with 1e-6 relative slack).
    pub feasible: bool,
    /// Energy efficiency recorded after every optimization step.
    pub trace: Vec<T>,
}

impl<T: Real> SolutionState<T> {
    /// Evaluates SINRs, rates, EE and the feasibility flag for a
    /// configuration. The trace starts empty.
    pub fn evaluate(
        config: &SystemConfig<T>,
        channels: &ChannelSet<T>,
        power: PowerAllocation<T>,
        beams: BeamformerSet<T>,
        phases: PhaseVector<T>,
    ) -> Result<Self> {
        let sinr = compute_sinr(config, channels, &phases, &power, &beams)?;
        let rate = sinr.map(|g| config.bandwidth * log2(T::one() + g));
        let ee = compute_ee(config, &sinr, &power);
        let slack = T::one() - conv::<T>(1e-6);
        let feasible = (0..config.num_users).all(|k| sinr[k] >= config.min_sinr[k] * slack);
        Ok(Self {
            power,
            beams,
            phases,
            sinr,
            rate,
            ee,
            feasible,
            trace: Vec::new(),
        })
    }
}
