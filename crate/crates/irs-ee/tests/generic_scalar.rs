//! The numerical core is generic over the real scalar; exercise the f32
//! instantiation end to end at correspondingly loose tolerances.

use nalgebra::{Complex, DMatrix, DVector};

use irs_ee::mmse::{mmse_output_sinr, mmse_receiver};
use irs_ee::model::{compute_ee, compute_sinr, PhaseVector, PowerAllocation, SystemConfig};
use irs_ee::power::{dc_inner_solve_with, GainTable, PowerSolveOptions};
use irs_ee::channel::{generate_realization, ChannelParams};
use irs_ee::{ChannelSet32, SystemConfig32};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Unit-noise configuration keeps f32 comfortably in range.
fn config32(k: usize, m: usize, n: usize) -> SystemConfig32 {
    SystemConfig::new(k, m, n, 1e6, 1e-6f32, 0.05, 0.35, 0.1, 0.0)
}

#[test]
fn f32_channel_and_model_pipeline() {
    let cfg = config32(2, 3, 4);
    let params = ChannelParams::<f32>::default();
    let channels: ChannelSet32 =
        generate_realization(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    channels.validate(&cfg).unwrap();

    let phases = PhaseVector::<f32>::from_angles(&[0.3, 1.1, 2.0, 4.5]);
    let power = PowerAllocation::new(DVector::from_vec(vec![0.05f32, 0.08]));
    let beams = mmse_receiver(&cfg, &channels, &phases, &power).unwrap();
    let sinr = compute_sinr(&cfg, &channels, &phases, &power, &beams).unwrap();
    let direct = mmse_output_sinr(&cfg, &channels, &phases, &power).unwrap();
    for k in 0..2 {
        assert!(sinr[k] >= 0.0);
        assert!(
            (sinr[k] - direct[k]).abs() <= 1e-3 * direct[k].max(1e-6),
            "{} vs {}",
            sinr[k],
            direct[k]
        );
    }
    let ee = compute_ee(&cfg, &sinr, &power);
    assert!(ee.is_finite() && ee >= 0.0);
}

#[test]
fn f32_power_solver_at_loose_tolerance() {
    // Single user, lambda = 0: optimum at the cap.
    let cfg = config32(1, 2, 2);
    let table = GainTable::new(DMatrix::from_element(1, 1, 500.0f32));
    let opts = PowerSolveOptions::<f32> {
        kkt_tol: 1e-3,
        dc_rel_tol: 1e-4,
        dinkelbach_tol: 1e-3,
        ..PowerSolveOptions::default()
    };
    let p0 = PowerAllocation::new(DVector::from_element(1, 0.02f32));
    let p = dc_inner_solve_with(&table, 0.0, &cfg, &p0, &opts).unwrap();
    assert!((p.p[0] - 0.1).abs() < 1e-3, "{}", p.p[0]);
}

#[test]
fn f32_phase_vector_modulus_tolerance() {
    // Unit-modulus validation must accept f32 rounding.
    let w = DVector::from_fn(8, |j, _| {
        let a = 0.7f32 * j as f32;
        Complex::new(a.cos(), a.sin())
    });
    PhaseVector::<f32>::new(w).unwrap();
}
