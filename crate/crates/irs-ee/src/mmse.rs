//! Closed-form MMSE receive beamforming at the BS for fixed powers and
//! phases.
//!
//! For each user the beamformer is
//! `v_k = (sigma^2 I_M + sum_{i!=k} P_i hbar_i hbar_i^H)^{-1} hbar_k`
//! with `sigma^2 = N0 B`; it maximizes that user's output SINR. The
//! interference-plus-noise matrix is Hermitian positive definite, so the
//! solve goes through a Cholesky factorization rather than an explicit
//! inverse.

use nalgebra::{Cholesky, ComplexField, DVector};

use crate::error::{Error, Result};
use crate::model::{effective_channel, BeamformerSet, ChannelSet, PhaseVector, PowerAllocation, SystemConfig};
use crate::scalar::{CMatrix, CVector, Real};

fn effective_channels<T: Real>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    phases: &PhaseVector<T>,
) -> Result<Vec<CVector<T>>> {
    (0..config.num_users)
        .map(|i| effective_channel(&channels.irs_to_bs, phases, &channels.user_to_irs[i]))
        .collect()
}

/// Interference-plus-noise covariance for user `k`.
fn inf_noise_matrix<T: Real>(
    config: &SystemConfig<T>,
    effective: &[CVector<T>],
    power: &PowerAllocation<T>,
    k: usize,
) -> CMatrix<T> {
    let m = config.num_bs_antennas;
    let sigma2 = config.noise_floor();
    let mut cov = CMatrix::from_diagonal_element(m, m, nalgebra::Complex::new(sigma2, T::zero()));
    for (i, h) in effective.iter().enumerate() {
        if i != k {
            let scaled = h * nalgebra::Complex::new(power.p[i].sqrt(), T::zero());
            cov.gerc(nalgebra::Complex::new(T::one(), T::zero()), &scaled, &scaled, nalgebra::Complex::new(T::one(), T::zero()));
        }
    }
    cov
}

/// MMSE beamformers for all users.
pub fn mmse_receiver<T: Real>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    phases: &PhaseVector<T>,
    power: &PowerAllocation<T>,
) -> Result<BeamformerSet<T>> {
    let effective = effective_channels(config, channels, phases)?;
    let m = config.num_bs_antennas;
    let mut columns = CMatrix::zeros(m, config.num_users);
    for k in 0..config.num_users {
        if effective[k].norm_squared() == T::zero() {
            return Err(Error::DegenerateChannel(k));
        }
        let cov = inf_noise_matrix(config, &effective, power, k);
        let chol = Cholesky::new(cov).ok_or(Error::DegenerateChannel(k))?;
        let v = chol.solve(&effective[k]);
        columns.column_mut(k).copy_from(&v);
    }
    Ok(BeamformerSet::new(columns))
}

/// Output SINR of the MMSE receiver, evaluated directly:
/// `gamma_k = P_k hbar_k^H (sigma^2 I + sum_{i!=k} P_i hbar_i hbar_i^H)^{-1} hbar_k`.
pub fn mmse_output_sinr<T: Real>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    phases: &PhaseVector<T>,
    power: &PowerAllocation<T>,
) -> Result<DVector<T>> {
    let effective = effective_channels(config, channels, phases)?;
    let mut sinr = DVector::zeros(config.num_users);
    for k in 0..config.num_users {
        if effective[k].norm_squared() == T::zero() {
            return Err(Error::DegenerateChannel(k));
        }
        let cov = inf_noise_matrix(config, &effective, power, k);
        let chol = Cholesky::new(cov).ok_or(Error::DegenerateChannel(k))?;
        let solved = chol.solve(&effective[k]);
        let quad = effective[k].dotc(&solved);
        sinr[k] = power.p[k] * quad.real();
    }
    Ok(sinr)
}
