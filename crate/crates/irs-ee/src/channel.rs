//! Seeded random generation of channel realizations.
//!
//! The BS-IRS link is Rician fading, the IRS-user links are Rayleigh, both
//! scaled by a log-distance path loss. Distances are drawn uniformly from
//! configurable ranges. All draws come from a ChaCha8 stream cipher RNG, so
//! realizations are a pure function of a 64-bit seed and are reproducible
//! across platforms and thread schedules; Monte-Carlo sweeps derive one
//! sub-seed per trial with [`sub_seed`].
//!
//! Draw order within a realization is fixed (distances, then the BS-IRS
//! matrix, then the user vectors) so that sweeps over array sizes reuse the
//! same distances for a given trial.

use nalgebra::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelSet, SystemConfig};
use crate::scalar::{conv, CMatrix, CVector, Real};

/// Log-distance path loss: `offset_db + slope * log10(d)` dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel<T: Real> {
    pub offset_db: T,
    pub slope: T,
}

impl<T: Real> PathLossModel<T> {
    pub fn new(offset_db: T, slope: T) -> Self {
        Self { offset_db, slope }
    }
}

/// Statistical parameters of the channel model.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams<T: Real> {
    /// Rician K-factor of the BS-IRS link (linear).
    pub rician_k_factor: T,
    pub pathloss_bs_irs: PathLossModel<T>,
    pub pathloss_irs_user: PathLossModel<T>,
    /// Uniform range for the BS-IRS distance, meters.
    pub d_bs_irs_range: (T, T),
    /// Uniform range for each IRS-user distance, meters.
    pub d_irs_user_range: (T, T),
    /// Master seed for trial sub-seed derivation.
    pub rng_seed: u64,
}

impl<T: Real> Default for ChannelParams<T> {
    fn default() -> Self {
        Self {
            rician_k_factor: conv(5.0),
            pathloss_bs_irs: PathLossModel::new(conv(30.0), conv(24.0)),
            pathloss_irs_user: PathLossModel::new(conv(30.0), conv(28.0)),
            d_bs_irs_range: (conv(20.0), conv(50.0)),
            d_irs_user_range: (conv(20.0), conv(100.0)),
            rng_seed: 0,
        }
    }
}

impl<T: Real> ChannelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.rician_k_factor < T::zero() {
            return Err(Error::InvalidConfig("Rician K-factor must be >= 0".into()));
        }
        if !(self.pathloss_bs_irs.slope > T::zero() && self.pathloss_irs_user.slope > T::zero()) {
            return Err(Error::InvalidConfig("path-loss slopes must be > 0".into()));
        }
        for (lo, hi) in [self.d_bs_irs_range, self.d_irs_user_range] {
            if !(lo > T::zero() && hi >= lo) {
                return Err(Error::InvalidConfig(
                    "distance ranges must be positive and ordered".into(),
                ));
            }
        }
        Ok(())
    }

    /// RNG for trial `index`, derived from the master seed.
    pub fn rng_for_trial(&self, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(sub_seed(self.rng_seed, index))
    }
}

/// SplitMix64 finalizer; decorrelates consecutive integers.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the sub-seed for trial `index` from `master`.
///
/// Distinct indices map to decorrelated streams, so parallel trial
/// scheduling never changes which randomness a trial sees.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// Linear amplitude-squared attenuation: `10^(-(offset + slope log10 d)/10)`.
pub fn path_loss_linear<T: Real>(offset_db: T, slope: T, d: T) -> Result<T> {
    if !(d > T::zero()) {
        return Err(Error::InvalidConfig(
            "path loss requires a positive distance".into(),
        ));
    }
    let loss_db = offset_db + slope * d.log10();
    Ok(conv::<T>(10.0).powf(-loss_db / conv(10.0)))
}

/// One circularly-symmetric complex Gaussian draw with unit variance.
///
/// Sampling is done in `f64` and converted, so the stream is identical for
/// every scalar type.
pub(crate) fn standard_complex_unit<T: Real, R: Rng>(rng: &mut R) -> Complex<T> {
    // Box-Muller; explicit so draws do not depend on rand_distr internals.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-u1.ln()).sqrt(); // magnitude for variance 1/2 per component
    let angle = std::f64::consts::TAU * u2;
    Complex::new(conv(r * angle.cos()), conv(r * angle.sin()))
}

/// Unit-modulus random phase, `e^{i U(0, 2pi)}`.
fn random_unit_phase<T: Real, R: Rng>(rng: &mut R) -> Complex<T> {
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex::new(conv(a.cos()), conv(a.sin()))
}

/// Rician fading matrix with unit per-entry second moment.
///
/// The line-of-sight part is the outer product of unit-modulus vectors with
/// per-element angles drawn once per call; the scattered part is i.i.d.
/// CN(0,1).
pub fn sample_rician<T: Real, R: Rng>(
    rows: usize,
    cols: usize,
    k_factor: T,
    rng: &mut R,
) -> CMatrix<T> {
    let row_phases: Vec<Complex<T>> = (0..rows).map(|_| random_unit_phase(rng)).collect();
    let col_phases: Vec<Complex<T>> = (0..cols).map(|_| random_unit_phase(rng)).collect();
    let scattered = CMatrix::from_fn(rows, cols, |_, _| standard_complex_unit(rng));

    let los_w = (k_factor / (T::one() + k_factor)).sqrt();
    let nlos_w = (T::one() / (T::one() + k_factor)).sqrt();
    CMatrix::from_fn(rows, cols, |i, j| {
        let los = row_phases[i] * col_phases[j].conj();
        los.scale(los_w) + scattered[(i, j)].scale(nlos_w)
    })
}

/// Rayleigh fading vector: i.i.d. CN(0,1) entries.
pub fn sample_rayleigh<T: Real, R: Rng>(n: usize, rng: &mut R) -> CVector<T> {
    CVector::from_fn(n, |_, _| standard_complex_unit(rng))
}

fn uniform_in<T: Real, R: Rng>(range: (T, T), rng: &mut R) -> T {
    let lo = range.0.to_f64().expect("range representable");
    let hi = range.1.to_f64().expect("range representable");
    if hi > lo {
        conv(rng.gen_range(lo..=hi))
    } else {
        range.0
    }
}

/// Draws one full channel realization for the configured system.
pub fn generate_realization<T: Real, R: Rng>(
    config: &SystemConfig<T>,
    params: &ChannelParams<T>,
    rng: &mut R,
) -> Result<ChannelSet<T>> {
    params.validate()?;
    config.validate()?;

    // Distances first: size sweeps keep them identical for a given seed.
    let d_bs_irs = uniform_in(params.d_bs_irs_range, rng);
    let d_irs_user: Vec<T> = (0..config.num_users)
        .map(|_| uniform_in(params.d_irs_user_range, rng))
        .collect();

    let pl_bs = path_loss_linear(
        params.pathloss_bs_irs.offset_db,
        params.pathloss_bs_irs.slope,
        d_bs_irs,
    )?;
    let amp_bs = pl_bs.sqrt();
    let rician = sample_rician(
        config.num_bs_antennas,
        config.num_irs_elements,
        params.rician_k_factor,
        rng,
    );
    let irs_to_bs = rician.map(|c| c.scale(amp_bs));

    let mut user_to_irs = Vec::with_capacity(config.num_users);
    for &d in &d_irs_user {
        let pl = path_loss_linear(
            params.pathloss_irs_user.offset_db,
            params.pathloss_irs_user.slope,
            d,
        )?;
        let amp = pl.sqrt();
        let ray = sample_rayleigh(config.num_irs_elements, rng);
        user_to_irs.push(ray.map(|c| c.scale(amp)));
    }

    Ok(ChannelSet {
        irs_to_bs,
        user_to_irs,
        d_bs_irs,
        d_irs_user,
    })
}

// --- fixture export/import -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ComplexEntry {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct ChannelSetFile {
    description: String,
    num_bs_antennas: usize,
    num_irs_elements: usize,
    num_users: usize,
    d_bs_irs_m: f64,
    d_irs_user_m: Vec<f64>,
    /// Row-major M x N.
    irs_to_bs: Vec<Vec<ComplexEntry>>,
    user_to_irs: Vec<Vec<ComplexEntry>>,
}

fn to_entry<T: Real>(c: &Complex<T>) -> ComplexEntry {
    ComplexEntry {
        re: c.re.to_f64().expect("finite"),
        im: c.im.to_f64().expect("finite"),
    }
}

/// Serializes a realization as self-describing JSON (complex entries as
/// re/im pairs), for regression fixtures.
pub fn write_fixture<T: Real, W: std::io::Write>(set: &ChannelSet<T>, mut out: W) -> Result<()> {
    let (m, n) = set.irs_to_bs.shape();
    let file = ChannelSetFile {
        description: "IRS uplink channel realization".to_string(),
        num_bs_antennas: m,
        num_irs_elements: n,
        num_users: set.user_to_irs.len(),
        d_bs_irs_m: set.d_bs_irs.to_f64().expect("finite"),
        d_irs_user_m: set
            .d_irs_user
            .iter()
            .map(|d| d.to_f64().expect("finite"))
            .collect(),
        irs_to_bs: (0..m)
            .map(|i| (0..n).map(|j| to_entry(&set.irs_to_bs[(i, j)])).collect())
            .collect(),
        user_to_irs: set
            .user_to_irs
            .iter()
            .map(|h| h.iter().map(to_entry).collect())
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Reads a realization previously written by [`write_fixture`].
pub fn read_fixture<T: Real, R: std::io::Read>(mut input: R) -> Result<ChannelSet<T>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let file: ChannelSetFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let m = file.num_bs_antennas;
    let n = file.num_irs_elements;
    if file.irs_to_bs.len() != m
        || file.irs_to_bs.iter().any(|r| r.len() != n)
        || file.user_to_irs.len() != file.num_users
        || file.user_to_irs.iter().any(|h| h.len() != n)
        || file.d_irs_user_m.len() != file.num_users
    {
        return Err(Error::Parse("fixture dimensions are inconsistent".into()));
    }
    let from_entry = |e: &ComplexEntry| Complex::new(conv::<T>(e.re), conv::<T>(e.im));
    Ok(ChannelSet {
        irs_to_bs: CMatrix::from_fn(m, n, |i, j| from_entry(&file.irs_to_bs[i][j])),
        user_to_irs: file
            .user_to_irs
            .iter()
            .map(|h| CVector::from_iterator(n, h.iter().map(from_entry)))
            .collect(),
        d_bs_irs: conv(file.d_bs_irs_m),
        d_irs_user: file.d_irs_user_m.iter().map(|&d| conv(d)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemConfig;
    use crate::scalar::dbm_to_watts;

    fn config(k: usize, m: usize, n: usize) -> SystemConfig<f64> {
        SystemConfig::new(k, m, n, 1e6, dbm_to_watts(-174.0), 0.05, 0.35, 0.1, 0.41)
    }

    #[test]
    fn path_loss_reference_values() {
        // d = 100 with 30 + 24 log10(d): 78 dB.
        let pl = path_loss_linear(30.0, 24.0, 100.0).unwrap();
        assert!((pl - 10f64.powf(-7.8)).abs() < 1e-12);
        // d = 1: 30 dB.
        let pl1: f64 = path_loss_linear(30.0, 24.0, 1.0).unwrap();
        assert!((pl1 - 1e-3).abs() < 1e-15);
        // d = 100 with 30 + 28 log10(d): 86 dB.
        let pl2 = path_loss_linear(30.0, 28.0, 100.0).unwrap();
        assert!((pl2 - 10f64.powf(-8.6)).abs() < 1e-14);
    }

    #[test]
    fn path_loss_rejects_nonpositive_distance() {
        assert!(path_loss_linear(30.0, 24.0, 0.0).is_err());
        assert!(path_loss_linear(30.0, 24.0, -3.0).is_err());
    }

    #[test]
    fn rician_zero_k_is_rayleigh() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..100 {
            let m = sample_rician::<f64, _>(10, 10, 0.0, &mut rng);
            acc += m.iter().map(|c| c.norm_sqr()).sum::<f64>();
            count += 100;
        }
        let var = acc / count as f64;
        assert!((var - 1.0).abs() < 0.05, "sample variance {var}");
    }

    #[test]
    fn rician_large_k_is_unit_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = sample_rician::<f64, _>(8, 8, 1e9, &mut rng);
        for c in m.iter() {
            assert!((c.norm() - 1.0).abs() < 1e-4, "modulus {}", c.norm());
        }
    }

    #[test]
    fn rician_k5_unit_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..100 {
            let m = sample_rician::<f64, _>(10, 10, 5.0, &mut rng);
            acc += m.iter().map(|c| c.norm_sqr()).sum::<f64>();
            count += 100;
        }
        let moment = acc / count as f64;
        assert!((moment - 1.0).abs() < 0.05, "second moment {moment}");
    }

    #[test]
    fn rayleigh_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = sample_rayleigh::<f64, _>(10_000, &mut rng);
        let mean = v.iter().fold(Complex::new(0.0, 0.0), |a, c| a + c) / 10_000.0;
        assert!(mean.norm() < 0.05, "mean {}", mean.norm());
        let second: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>() / 10_000.0;
        assert!((second - 1.0).abs() < 0.05, "E|x|^2 = {second}");
        let var_re: f64 = v.iter().map(|c| c.re * c.re).sum::<f64>() / 10_000.0;
        let var_im: f64 = v.iter().map(|c| c.im * c.im).sum::<f64>() / 10_000.0;
        assert!((var_re - 0.5).abs() < 0.03, "Re variance {var_re}");
        assert!((var_im - 0.5).abs() < 0.03, "Im variance {var_im}");
    }

    #[test]
    fn realization_deterministic_under_seed() {
        let cfg = config(3, 4, 4);
        let params = ChannelParams::default();
        let a = generate_realization(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate_realization(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        // Bit-identical, not just close.
        assert!(a
            .irs_to_bs
            .iter()
            .zip(b.irs_to_bs.iter())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        for (ha, hb) in a.user_to_irs.iter().zip(&b.user_to_irs) {
            assert!(ha
                .iter()
                .zip(hb.iter())
                .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        }
        assert_eq!(a.d_bs_irs.to_bits(), b.d_bs_irs.to_bits());
    }

    #[test]
    fn realization_distances_within_ranges() {
        let cfg = config(3, 4, 4);
        let params = ChannelParams::default();
        for seed in 0..200 {
            let set =
                generate_realization(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(set.d_bs_irs >= 20.0 && set.d_bs_irs <= 50.0);
            for &d in &set.d_irs_user {
                assert!((20.0..=100.0).contains(&d));
            }
            set.validate(&cfg).unwrap();
        }
    }

    #[test]
    fn user_link_second_moment_matches_path_loss() {
        // Pin the distance by a degenerate range and check E||h||^2 / N.
        let cfg = config(1, 2, 4);
        let params = ChannelParams {
            d_irs_user_range: (60.0, 60.0),
            ..ChannelParams::default()
        };
        let pl = path_loss_linear(30.0, 28.0, 60.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut acc = 0.0;
        let trials = 10_000;
        for _ in 0..trials {
            let set = generate_realization(&cfg, &params, &mut rng).unwrap();
            acc += set.user_to_irs[0].norm_squared() / 4.0;
        }
        let est = acc / trials as f64;
        assert!(
            (est - pl).abs() < 0.05 * pl,
            "estimated {est:e}, expected {pl:e}"
        );
    }

    #[test]
    fn sub_seed_distinct_trials_decorrelated() {
        let s: Vec<u64> = (0..64).map(|i| sub_seed(42, i)).collect();
        for i in 0..s.len() {
            for j in 0..i {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_ne!(sub_seed(42, 0), sub_seed(43, 0));
    }

    #[test]
    fn fixture_round_trip() {
        let cfg = config(2, 3, 4);
        let params = ChannelParams::default();
        let set =
            generate_realization(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mut buf = Vec::new();
        write_fixture(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"re\":") && text.contains("\"im\":"));
        let back: ChannelSet<f64> = read_fixture(buf.as_slice()).unwrap();
        assert_eq!(set, back);
    }
}
