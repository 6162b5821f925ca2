//! Finite-antenna Monte Carlo rate engines.
//!
//! Each trial draws one attenuation realization and one set of fast-fading
//! matrices from counter-based substreams keyed by the trial index, so results
//! are identical whether trials run serially or in parallel. All engines
//! consume the channel substream in the same order (one N x K matrix per cell
//! per trial), which makes cross-scheme comparisons on a common seed
//! common-random-number comparisons.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::network::{
    generate_attenuation_indexed, noise_floor, AttenuationDraw, NetworkConfig, ScenarioSpec,
};
use crate::rng::{complex_gaussian, substream, Domain};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Interference-handling scheme identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Joint decoding per cell, intercell interference treated as noise.
    Ian,
    /// Every base station decodes all users in the network.
    Sd,
    /// Cells transmit in disjoint time intervals.
    Td,
    /// Optimized hybrid of the other three.
    Os,
    /// Separate linear decoding, matched filter.
    LinearMf,
    /// Separate linear decoding, regularized MMSE filter.
    LinearMmse,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Ian => "ian",
            Scheme::Sd => "sd",
            Scheme::Td => "td",
            Scheme::Os => "os",
            Scheme::LinearMf => "linear_mf",
            Scheme::LinearMmse => "linear_mmse",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Configuration echo attached to every report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub config: NetworkConfig,
    pub scenario: ScenarioSpec,
    pub seed: u64,
}

/// Per-scheme spectral efficiency (average ergodic rate per user per symbol,
/// pilot overhead included) with a Monte Carlo error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRateReport {
    pub scheme: Scheme,
    pub se_bits: f64,
    pub std_error: f64,
    pub trials: usize,
    pub metadata: RunMetadata,
}

// ---------------------------------------------------------------------------
// Aggregate diagonals
// ---------------------------------------------------------------------------

/// Per-cell diagonals of the aggregate matrices feeding the log-determinants:
/// `a_net` and `a_int` for the interference-as-noise pair and `a_td(zeta)`
/// for time division.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateMatrices {
    pub a_net: Vec<Vec<f64>>,
    pub a_int: Vec<Vec<f64>>,
    pub a_td: Vec<Vec<f64>>,
}

/// Build the aggregate diagonals from one attenuation realization.
///
/// `zetas` only affects `a_td` (through the `zeta * noise_power` term of its
/// noise floor).
pub fn aggregate_matrices(
    draw: &AttenuationDraw,
    noise_power: f64,
    zetas: &[f64],
) -> Result<AggregateMatrices> {
    let cells = draw.cells();
    let users = draw.users();
    if zetas.len() != cells {
        return Err(Error::config("zetas length must equal the number of cells"));
    }
    let all: Vec<usize> = (0..cells).collect();
    let t = noise_floor(draw, &all, noise_power, 1.0)?;
    let mut a_net = vec![vec![0.0; users]; cells];
    let mut a_int = vec![vec![0.0; users]; cells];
    let mut a_td = vec![vec![0.0; users]; cells];
    for k in 0..cells {
        let own_floor: f64 =
            (0..users).map(|m| (1.0 - draw.b(k, k, m)) * draw.d2(k, k, m)).sum::<f64>()
                + zetas[k] * noise_power;
        for m in 0..users {
            let lead = draw.b(k, k, m) / draw.d2(k, k, m);
            let mut sum4 = 0.0;
            let mut cross4 = 0.0;
            for l in 0..cells {
                let q = draw.d2(k, l, m);
                sum4 += q * q;
                if l != k {
                    cross4 += q * q;
                }
            }
            a_net[k][m] = lead * sum4 / t[k];
            a_int[k][m] = lead * cross4 / t[k];
            a_td[k][m] = draw.b(k, k, m) * draw.d2(k, k, m) / own_floor;
        }
    }
    Ok(AggregateMatrices { a_net, a_int, a_td })
}

// ---------------------------------------------------------------------------
// Log-determinant Monte Carlo kernel
// ---------------------------------------------------------------------------

/// Fast-fading matrix shared by the log-determinants of one (trial, cell).
/// Uses the K x K Gram form when K <= N, the direct N x N form otherwise.
struct TrialChannel {
    m: CMat,
    gram: Option<CMat>,
}

impl TrialChannel {
    fn draw<R: rand::Rng>(n: usize, k: usize, rng: &mut R) -> Self {
        let m = CMat::from_fn(n, k, |_, _| complex_gaussian(rng));
        let gram = if k <= n { Some(linalg::gram(&m)) } else { None };
        TrialChannel { m, gram }
    }

    fn logdet2(&self, diag: &[f64]) -> Result<f64> {
        match &self.gram {
            Some(p) => linalg::logdet2_i_plus_scaled(p, diag),
            None => {
                let (n, k) = (self.m.rows(), self.m.cols());
                let mut ma = self.m.clone();
                for j in 0..k {
                    ma.scale_col(j, diag[j]);
                }
                let mh = CMat::from_fn(k, n, |i, j| self.m[(j, i)].conj());
                linalg::logdet2_i_plus(&linalg::mul(&ma, &mh))
            }
        }
    }
}

/// Sample mean and standard error of log2 |I_N + M diag(a) M^H| over fresh
/// draws of M, with per-trial diagonal entries supplied by `diag_entries`.
pub fn logdet_mc<F>(
    diag_entries: F,
    n_antennas: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(u64) -> Vec<f64> + Sync,
{
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    if n_antennas == 0 {
        return Err(Error::config("n_antennas must be at least 1"));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let diag = diag_entries(t);
            if diag.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
                return Err(Error::config("diagonal entries must be finite and nonnegative"));
            }
            let mut rng = substream(seed, Domain::Channel, t);
            let ch = TrialChannel::draw(n_antennas, diag.len(), &mut rng);
            ch.logdet2(&diag)
                .map_err(|e| Error::numerical(format!("trial {t}: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_and_std_error(&values))
}

fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

// ---------------------------------------------------------------------------
// Scheme engines
// ---------------------------------------------------------------------------

fn equal_zetas(cells: usize) -> Vec<f64> {
    vec![1.0 / cells as f64; cells]
}

fn validate_zetas(zetas: &[f64], cells: usize) -> Result<()> {
    if zetas.len() != cells {
        return Err(Error::config("zetas length must equal the number of cells"));
    }
    if zetas.iter().any(|&z| !(z > 0.0 && z <= 1.0)) {
        return Err(Error::config("every zeta must lie in (0, 1]"));
    }
    let sum: f64 = zetas.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("zetas must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Per-trial, per-cell log-determinants used by the three joint-decoding
/// schemes. `net`/`int` use T_k; `td` uses the own-cell floor with the given
/// zeta.
struct SchemeTrial {
    net: Vec<f64>,
    int: Vec<f64>,
    td: Vec<f64>,
}

fn scheme_trial(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    zetas: &[f64],
    seed: u64,
    trial: u64,
    want_int: bool,
    want_td: bool,
) -> Result<SchemeTrial> {
    let draw = generate_attenuation_indexed(config, scenario, seed, trial)?;
    let agg = aggregate_matrices(&draw, config.noise_power, zetas)?;
    let cells = config.cells;
    let mut rng = substream(seed, Domain::Channel, trial);
    let mut out = SchemeTrial {
        net: vec![0.0; cells],
        int: vec![0.0; cells],
        td: vec![0.0; cells],
    };
    for k in 0..cells {
        let ch = TrialChannel::draw(config.antennas, config.users_per_cell, &mut rng);
        out.net[k] = ch
            .logdet2(&agg.a_net[k])
            .map_err(|e| Error::numerical(format!("trial {trial}, cell {k}: {e}")))?;
        if want_int {
            out.int[k] = ch
                .logdet2(&agg.a_int[k])
                .map_err(|e| Error::numerical(format!("trial {trial}, cell {k}: {e}")))?;
        }
        if want_td {
            out.td[k] = ch
                .logdet2(&agg.a_td[k])
                .map_err(|e| Error::numerical(format!("trial {trial}, cell {k}: {e}")))?;
        }
    }
    Ok(out)
}

fn run_trials(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    zetas: &[f64],
    trials: usize,
    seed: u64,
    want_int: bool,
    want_td: bool,
) -> Result<Vec<SchemeTrial>> {
    config.validate()?;
    scenario.validate(config.cells)?;
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|t| scheme_trial(config, scenario, zetas, seed, t, want_int, want_td))
        .collect()
}

fn report(
    scheme: Scheme,
    se_bits: f64,
    std_error: f64,
    trials: usize,
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    seed: u64,
) -> SchemeRateReport {
    SchemeRateReport {
        scheme,
        se_bits,
        std_error,
        trials,
        metadata: RunMetadata { config: config.clone(), scenario: scenario.clone(), seed },
    }
}

/// Interference-as-noise rate: per cell, the difference of the expected
/// log-determinants with the network and interference-only diagonals, both
/// evaluated on the same fast-fading draw.
pub fn rate_ian_finite(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    trials: usize,
    seed: u64,
) -> Result<SchemeRateReport> {
    let zetas = equal_zetas(config.cells);
    let data = run_trials(config, scenario, &zetas, trials, seed, true, false)?;
    let pref = config.overhead_factor()
        / (config.cells as f64 * config.users_per_cell as f64);
    let per_trial: Vec<f64> = data
        .iter()
        .map(|t| t.net.iter().zip(&t.int).map(|(n, i)| n - i).sum::<f64>())
        .collect();
    let (mean, se) = mean_and_std_error(&per_trial);
    Ok(report(Scheme::Ian, pref * mean, pref * se, trials, config, scenario, seed))
}

/// Simultaneous-decoding rate: estimate each cell's expected log-determinant
/// first, then take the minimum over cells. The reported standard error is
/// that of the minimizing cell's estimate.
pub fn rate_sd_finite(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    trials: usize,
    seed: u64,
) -> Result<SchemeRateReport> {
    let zetas = equal_zetas(config.cells);
    let data = run_trials(config, scenario, &zetas, trials, seed, false, false)?;
    let pref = config.overhead_factor()
        / (config.cells as f64 * config.users_per_cell as f64);
    let (means, ses) = per_cell_stats(&data, config.cells, |t, k| t.net[k]);
    let (argmin, min) = means
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    Ok(report(Scheme::Sd, pref * min, pref * ses[argmin], trials, config, scenario, seed))
}

fn per_cell_stats(
    data: &[SchemeTrial],
    cells: usize,
    get: impl Fn(&SchemeTrial, usize) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut means = Vec::with_capacity(cells);
    let mut ses = Vec::with_capacity(cells);
    for k in 0..cells {
        let vals: Vec<f64> = data.iter().map(|t| get(t, k)).collect();
        let (m, s) = mean_and_std_error(&vals);
        means.push(m);
        ses.push(s);
    }
    (means, ses)
}

/// Time-division rate for a given interval split `zetas` (entries in (0, 1]
/// summing to 1). Each cell's log-determinant is weighted by its share of the
/// data phase.
pub fn rate_td_finite(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    zetas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<SchemeRateReport> {
    validate_zetas(zetas, config.cells)?;
    let data = run_trials(config, scenario, zetas, trials, seed, false, true)?;
    let pref = config.overhead_factor()
        / (config.cells as f64 * config.users_per_cell as f64);
    let per_trial: Vec<f64> = data
        .iter()
        .map(|t| t.td.iter().zip(zetas).map(|(v, z)| v * z).sum::<f64>())
        .collect();
    let (mean, se) = mean_and_std_error(&per_trial);
    Ok(report(Scheme::Td, pref * mean, pref * se, trials, config, scenario, seed))
}

/// Expose the per-cell expected log-determinants behind `rate_sd_finite`
/// (useful for symmetry diagnostics).
pub fn sd_per_cell(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    trials: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let zetas = equal_zetas(config.cells);
    let data = run_trials(config, scenario, &zetas, trials, seed, false, false)?;
    Ok(per_cell_stats(&data, config.cells, |t, k| t.net[k]))
}

// ---------------------------------------------------------------------------
// Separate linear decoding baseline
// ---------------------------------------------------------------------------

/// Linear receiver used by the separate-decoding baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearReceiver {
    MatchedFilter,
    Mmse,
}

/// Separate linear decoding: per realization, build the filter from channel
/// estimates only, then evaluate the SINR against the true channels. The MMSE
/// filter is regularized with c_k = T_k, the residual power of the modeled
/// uncorrelated noise.
pub fn rate_linear_finite(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    receiver: LinearReceiver,
    trials: usize,
    seed: u64,
) -> Result<SchemeRateReport> {
    config.validate()?;
    scenario.validate(config.cells)?;
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let per_trial: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let sinrs = linear_trial_sinrs(config, scenario, receiver, seed, t)?;
            let sum: f64 = sinrs.iter().map(|g| (1.0 + g).log2()).sum();
            Ok(sum / sinrs.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let pref = config.overhead_factor();
    let (mean, se) = mean_and_std_error(&per_trial);
    let scheme = match receiver {
        LinearReceiver::MatchedFilter => Scheme::LinearMf,
        LinearReceiver::Mmse => Scheme::LinearMmse,
    };
    Ok(report(scheme, pref * mean, pref * se, trials, config, scenario, seed))
}

/// SINRs of all (cell, user) pairs for one realization.
pub(crate) fn linear_trial_sinrs(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    receiver: LinearReceiver,
    seed: u64,
    trial: u64,
) -> Result<Vec<f64>> {
    let (cells, users, n) = (config.cells, config.users_per_cell, config.antennas);
    let sigma2 = config.noise_power;
    let draw = generate_attenuation_indexed(config, scenario, seed, trial)?;
    let all: Vec<usize> = (0..cells).collect();
    let t_floor = noise_floor(&draw, &all, sigma2, 1.0)?;

    let mut rng_h = substream(seed, Domain::Channel, trial);
    let mut rng_w = substream(seed, Domain::PilotNoise, trial);
    // Equivalent pilot observation: P_k = sum_l G_{k,l} + Wtilde_k with
    // Wtilde entries CN(0, sigma^2 / tau); the MMSE estimate of G_{k,l} is
    // then the per-user scaling by b_{k,l,m}.
    let pilot_noise_std = (sigma2 / config.pilot_symbols as f64).sqrt();

    let mut gammas = Vec::with_capacity(cells * users);
    for k in 0..cells {
        // True channels G_{k,l} for every transmitting cell l.
        let g: Vec<CMat> = (0..cells)
            .map(|l| {
                let mut h = CMat::from_fn(n, users, |_, _| complex_gaussian(&mut rng_h));
                for m in 0..users {
                    h.scale_col(m, draw.d(k, l, m));
                }
                h
            })
            .collect();
        let mut pk = CMat::from_fn(n, users, |_, _| complex_gaussian(&mut rng_w));
        for v in pk.data_mut() {
            *v *= pilot_noise_std;
        }
        for gl in &g {
            pk = pk.add(gl);
        }
        let mut g_hat = pk;
        for m in 0..users {
            g_hat.scale_col(m, draw.b(k, k, m));
        }

        let p_hat = linalg::gram(&g_hat);
        let cross: Vec<CMat> = (0..cells).map(|l| linalg::conj_t_mul(&g_hat, &g[l])).collect();
        // Own-estimate cross term Ghat^H Ghat is p_hat itself.
        match receiver {
            LinearReceiver::MatchedFilter => {
                for m in 0..users {
                    let sig = p_hat[(m, m)].re;
                    let mut interf = 0.0;
                    for cl in &cross {
                        for j in 0..users {
                            interf += cl[(m, j)].norm_sqr();
                        }
                    }
                    interf -= cross[k][(m, m)].norm_sqr();
                    let err = (cross[k][(m, m)] - p_hat[(m, m)]).norm_sqr();
                    let noise = sigma2 * sig;
                    gammas.push(sig * sig / (interf + err + noise));
                }
            }
            LinearReceiver::Mmse => {
                // Filters q_m = Ghat (Ghat^H Ghat + T_k I)^{-1} e_m applied in
                // the K x K domain: rows of W X with W = (P + cI)^{-1}.
                let mut reg = p_hat.clone();
                for j in 0..users {
                    reg[(j, j)] += t_floor[k];
                }
                linalg::cholesky_in_place(&mut reg).map_err(|e| {
                    Error::numerical(format!("trial {trial}, cell {k}: {e}"))
                })?;
                let mut sw = p_hat.clone();
                linalg::cholesky_solve_in_place(&reg, &mut sw);
                let mut w_full = CMat::from_fn(users, users, |i, j| {
                    if i == j { Complex64::ONE } else { Complex64::ZERO }
                });
                linalg::cholesky_solve_in_place(&reg, &mut w_full);
                let wcross: Vec<CMat> = cross
                    .iter()
                    .map(|c| {
                        let mut x = c.clone();
                        linalg::cholesky_solve_in_place(&reg, &mut x);
                        x
                    })
                    .collect();
                for m in 0..users {
                    let sig = sw[(m, m)].norm_sqr();
                    let mut interf = 0.0;
                    for wc in &wcross {
                        for j in 0..users {
                            interf += wc[(m, j)].norm_sqr();
                        }
                    }
                    interf -= wcross[k][(m, m)].norm_sqr();
                    let err = (wcross[k][(m, m)] - sw[(m, m)]).norm_sqr();
                    // ||q_m||^2 = (W P W)_{mm}, real nonnegative.
                    let mut qn = 0.0;
                    for j in 0..users {
                        qn += (sw[(m, j)] * w_full[(m, j)].conj()).re;
                    }
                    let noise = sigma2 * qn.max(0.0);
                    gammas.push(sig / (interf + err + noise));
                }
            }
        }
    }
    Ok(gammas)
}

// ---------------------------------------------------------------------------
// Explicit pilot-phase estimator
// ---------------------------------------------------------------------------

/// Full fast-fading state of one realization: per-(k, l) channel matrices and
/// per-cell pilot-phase receiver noise.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub cells: usize,
    pub users: usize,
    pub antennas: usize,
    /// H_{k,l}, index k * cells + l, each N x K with i.i.d. CN(0, 1) entries.
    pub h: Vec<CMat>,
    /// Pilot-phase noise W_k, one N x tau matrix per cell, entries
    /// CN(0, noise_power).
    pub pilot_noise: Vec<CMat>,
}

/// Draw the fast-fading state for realization `realization`.
pub fn draw_channel(config: &NetworkConfig, seed: u64, realization: u64) -> ChannelRealization {
    let (cells, users, n) = (config.cells, config.users_per_cell, config.antennas);
    let mut rng_h = substream(seed, Domain::Channel, realization);
    let h: Vec<CMat> = (0..cells * cells)
        .map(|_| CMat::from_fn(n, users, |_, _| complex_gaussian(&mut rng_h)))
        .collect();
    let mut rng_w = substream(seed, Domain::PilotNoise, realization);
    let noise_std = config.noise_power.sqrt();
    let pilot_noise: Vec<CMat> = (0..cells)
        .map(|_| {
            let mut w = CMat::from_fn(n, config.pilot_symbols, |_, _| complex_gaussian(&mut rng_w));
            for v in w.data_mut() {
                *v *= noise_std;
            }
            w
        })
        .collect();
    ChannelRealization { cells, users, antennas: n, h, pilot_noise }
}

/// Output of the explicit pilot-phase MMSE estimator.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    /// True channels G_{k,l} = H_{k,l} D_{k,l}.
    pub g: Vec<CMat>,
    /// MMSE estimates Ghat_{k,l}.
    pub g_hat: Vec<CMat>,
    /// Estimation errors Gtilde_{k,l} = G_{k,l} - Ghat_{k,l}.
    pub g_err: Vec<CMat>,
}

/// Rows of the K x tau pilot matrix: s_m[i] = exp(-2 pi j m i / tau), which
/// satisfies S S^H = tau I for tau >= K.
pub fn dft_pilots(users: usize, tau: usize) -> CMat {
    CMat::from_fn(users, tau, |m, i| {
        let phase = -2.0 * std::f64::consts::PI * (m * i % tau) as f64 / tau as f64;
        Complex64::new(phase.cos(), phase.sin())
    })
}

/// Simulate the pilot phase Y_k = sum_l G_{k,l} S + W_k and apply the linear
/// MMSE estimator Ghat_{k,l} = tau^{-1} Y_k S^H B_{k,l}.
pub fn estimate_channel_explicit(
    pilots: &CMat,
    draw: &AttenuationDraw,
    channel: &ChannelRealization,
) -> Result<ChannelEstimate> {
    let (cells, users) = (draw.cells(), draw.users());
    let tau = pilots.cols();
    if pilots.rows() != users {
        return Err(Error::config("pilot matrix must have one row per user"));
    }
    if tau < users {
        return Err(Error::config("pilot length must be at least the number of users"));
    }
    if channel.cells != cells || channel.users != users {
        return Err(Error::config("channel realization does not match the attenuation draw"));
    }
    if channel.pilot_noise[0].cols() != tau {
        return Err(Error::config("pilot noise length does not match the pilot matrix"));
    }
    // Orthogonality check: S S^H = tau I.
    let ssh = linalg::mul(pilots, &adjoint(pilots));
    for i in 0..users {
        for j in 0..users {
            let expect = if i == j { tau as f64 } else { 0.0 };
            if (ssh[(i, j)] - expect).norm() > 1e-8 * tau as f64 {
                return Err(Error::config("pilot rows are not orthogonal with S S^H = tau I"));
            }
        }
    }

    let s_h = adjoint(pilots);
    let mut g = Vec::with_capacity(cells * cells);
    let mut g_hat = Vec::with_capacity(cells * cells);
    let mut g_err = Vec::with_capacity(cells * cells);
    for k in 0..cells {
        let gk: Vec<CMat> = (0..cells)
            .map(|l| {
                let mut m = channel.h[k * cells + l].clone();
                for u in 0..users {
                    m.scale_col(u, draw.d(k, l, u));
                }
                m
            })
            .collect();
        let mut y = channel.pilot_noise[k].clone();
        for gl in &gk {
            y = y.add(&linalg::mul(gl, pilots));
        }
        // Sufficient statistic tau^{-1} Y S^H, then per-(l, user) scaling.
        let mut u = linalg::mul(&y, &s_h);
        let inv_tau = 1.0 / tau as f64;
        for v in u.data_mut() {
            *v *= inv_tau;
        }
        for l in 0..cells {
            let mut hat = u.clone();
            for m in 0..users {
                hat.scale_col(m, draw.b(k, l, m));
            }
            let err = gk[l].sub(&hat);
            g_hat.push(hat);
            g_err.push(err);
        }
        g.extend(gk);
    }
    Ok(ChannelEstimate { g, g_hat, g_err })
}

fn adjoint(a: &CMat) -> CMat {
    CMat::from_fn(a.cols(), a.rows(), |i, j| a[(j, i)].conj())
}
