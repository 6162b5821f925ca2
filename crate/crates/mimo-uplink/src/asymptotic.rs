//! Massive-MIMO-limit rate formulas.
//!
//! Every scheme reduces to evaluations of V(A, beta) over scalar A-variables
//! built from single-user attenuation draws:
//!
//! * `A_net_k` / `A_int_k` — the interference-as-noise pair, with the full
//!   residual-power denominator summed over all cells;
//! * `A_td_k` — the time-division variable, with the own-cell denominator;
//! * `A_osN_k` / `A_osI_k` — the hybrid-scheme variables, with numerator and
//!   denominator sums restricted to the active interval.
//!
//! Denominators carry the finite-size noise correction `zeta * sigma_W^2 / N`
//! alongside `beta * sum_l E{(1 - b) d^2}`. The correction vanishes as
//! N grows, so the limit is unchanged, but at practical antenna counts it is
//! what makes these evaluators deterministic equivalents of the finite
//! engines: with weak interference and moderate SNR the noise term is a
//! comparable share of the residual floor, and dropping it overshoots the
//! finite-N rates by double-digit percentages.
//!
//! All A-distributions for one `(scenario, seed)` come from the same
//! underlying attenuation sample stream, so cross-scheme comparisons are
//! common-random-number comparisons. Denominator expectations use a separate
//! substream, per the two-phase construction.
//!
//! Reported standard errors are first-order delta-method estimates: V is
//! stationary in eta at the fixed point, so only the sample-mean term
//! contributes. Contributions from different cells are treated as
//! independent, which is exact for the synthetic and two-cell scenario
//! families.

use crate::error::{Error, Result};
use crate::finite::{RunMetadata, Scheme, SchemeRateReport};
use crate::network::{NetworkConfig, ScenarioSpec};
use crate::rmt::{mp_value, EmpiricalDistribution, MpResult};
use crate::rng::{substream, Domain};

/// Floor on the sample count accepted by the public constructors.
pub const MIN_SAMPLE_COUNT: usize = 10_000;
/// Default number of A-variable samples.
pub const DEFAULT_SAMPLE_COUNT: usize = 200_000;
/// Fixed-point tolerance used by the asymptotic evaluators.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Shared sample stream
// ---------------------------------------------------------------------------

/// Components of the single-user attenuation stream from which every
/// A-variable sample is assembled.
#[derive(Debug, Clone)]
pub(crate) struct AsymStream {
    pub cells: usize,
    pub beta: f64,
    pub sample_count: usize,
    /// sigma_W^2 / N, the finite-size share of the noise floor.
    pub noise_per_antenna: f64,
    /// Denominator means E{(1 - b_{k,l,1}) d^2_{k,l,1}}, index k * L + l.
    pub m: Vec<f64>,
    /// Samples of b_{k,k,1} / d^2_{k,k,1}, per cell.
    pub lead: Vec<Vec<f64>>,
    /// Samples of d^4_{k,l,1}, index k * L + l.
    pub d4: Vec<Vec<f64>>,
}

fn draw_single_user_d2(
    scenario: &ScenarioSpec,
    cells: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    d2: &mut [f64],
) -> Result<()> {
    // One user per home cell; column l holds that user's squared attenuations
    // towards every base station.
    let mut col = vec![0.0; cells];
    for l in 0..cells {
        crate::network::sample_user_attenuation_for(scenario, cells, l, rng, &mut col)?;
        for k in 0..cells {
            d2[k * cells + l] = col[k] * col[k];
        }
    }
    Ok(())
}

impl AsymStream {
    pub fn build(
        config: &NetworkConfig,
        scenario: &ScenarioSpec,
        sample_count: usize,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        scenario.validate(config.cells)?;
        if sample_count < MIN_SAMPLE_COUNT {
            return Err(Error::config(format!(
                "sample_count must be at least {MIN_SAMPLE_COUNT}"
            )));
        }
        let cells = config.cells;
        let tau = config.pilot_symbols as f64;
        let sigma2 = config.noise_power;

        // Phase 1: denominator means over their own substream.
        let mut m = vec![0.0; cells * cells];
        let mut d2 = vec![0.0; cells * cells];
        for i in 0..sample_count as u64 {
            let mut rng = substream(seed, Domain::AsymMean, i);
            draw_single_user_d2(scenario, cells, &mut rng, &mut d2)?;
            for k in 0..cells {
                let denom: f64 = sigma2 + tau * (0..cells).map(|l| d2[k * cells + l]).sum::<f64>();
                for l in 0..cells {
                    let v = d2[k * cells + l];
                    let b = tau * v / denom;
                    m[k * cells + l] += (1.0 - b) * v;
                }
            }
        }
        for v in &mut m {
            *v /= sample_count as f64;
        }
        for k in 0..cells {
            let mu: f64 = (0..cells).map(|l| m[k * cells + l]).sum();
            if !(mu > 0.0) {
                return Err(Error::config(format!(
                    "degenerate scenario: zero residual power at cell {k}"
                )));
            }
        }

        // Phase 2: fresh draws become the A-variable component samples.
        let mut lead = vec![vec![0.0; sample_count]; cells];
        let mut d4 = vec![vec![0.0; sample_count]; cells * cells];
        for i in 0..sample_count as u64 {
            let mut rng = substream(seed, Domain::AsymSample, i);
            draw_single_user_d2(scenario, cells, &mut rng, &mut d2)?;
            for k in 0..cells {
                let denom: f64 = sigma2 + tau * (0..cells).map(|l| d2[k * cells + l]).sum::<f64>();
                // b_{k,k} / d^2_{k,k} collapses to tau / denom.
                lead[k][i as usize] = tau / denom;
                for l in 0..cells {
                    let v = d2[k * cells + l];
                    d4[k * cells + l][i as usize] = v * v;
                }
            }
        }
        Ok(AsymStream {
            cells,
            beta: config.ratio(),
            sample_count,
            noise_per_antenna: sigma2 / config.antennas as f64,
            m,
            lead,
            d4,
        })
    }

    /// Residual-floor denominator for receiving cell `k` with the cells in
    /// `denom_cells` active and time fraction `zeta`:
    /// beta * sum E{(1 - b) d^2} + zeta * sigma^2 / N.
    fn denom(&self, k: usize, denom_cells: &[usize], zeta: f64) -> f64 {
        self.beta * denom_cells.iter().map(|&l| self.m[k * self.cells + l]).sum::<f64>()
            + zeta * self.noise_per_antenna
    }

    /// Samples of lead_k * sum over `num_cells` of d^4, divided by `denom`.
    fn a_samples(&self, k: usize, num_cells: &[usize], denom: f64) -> Vec<f64> {
        let n = self.sample_count;
        let mut out = vec![0.0; n];
        for &l in num_cells {
            let col = &self.d4[k * self.cells + l];
            for i in 0..n {
                out[i] += col[i];
            }
        }
        let lead = &self.lead[k];
        for i in 0..n {
            out[i] *= lead[i] / denom;
        }
        out
    }

    /// V(A_net) and V(A_int) (or their restricted-interval analogues) for
    /// cell `k` at time fraction `zeta`, plus the delta-method variance of
    /// the paired difference.
    pub fn v_pair(&self, k: usize, interval: &[usize], jbar: &[usize], zeta: f64) -> Result<VPair> {
        let denom = self.denom(k, interval, zeta);
        let net = self.a_samples(k, interval, denom);
        let int = self.a_samples(k, jbar, denom);
        let net_d = EmpiricalDistribution::new(net)?;
        let r_net = mp_value(&net_d, self.beta, SOLVER_TOLERANCE)?;
        let r_int = if jbar.is_empty() {
            MpResult { eta: 1.0, value_bits: 0.0, residual: 0.0 }
        } else {
            mp_value(&EmpiricalDistribution::new(int.clone())?, self.beta, SOLVER_TOLERANCE)?
        };
        // Paired per-sample influence of the difference.
        let n = self.sample_count as f64;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        let mut count = 0.0;
        for i in 0..self.sample_count {
            let a = (1.0 + r_net.eta * net_d.samples()[i]).log2();
            let b = if jbar.is_empty() { 0.0 } else { (1.0 + r_int.eta * int[i]).log2() };
            let x = self.beta * (a - b);
            count += 1.0;
            let delta = x - mean;
            mean += delta / count;
            m2 += delta * (x - mean);
        }
        let var = if self.sample_count > 1 { m2 / (n - 1.0) } else { 0.0 };
        Ok(VPair {
            v_net: r_net.value_bits,
            v_int: r_int.value_bits,
            diff_se2: var / n,
        })
    }
}

/// V-values of one (cell, interval, complement) triple with the variance of
/// the paired difference estimate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct VPair {
    pub v_net: f64,
    pub v_int: f64,
    /// Squared standard error of (v_net - v_int).
    pub diff_se2: f64,
}

// ---------------------------------------------------------------------------
// AsymptoticInputs
// ---------------------------------------------------------------------------

/// Per-cell A-variable distributions plus the denominators they were built
/// with. Holds everything the interference-as-noise, simultaneous-decoding,
/// and time-division evaluators need.
///
/// `a_net`/`a_int` are built with the full-network floor (all cells active,
/// zeta = 1). `a_td` is stored with the bare own-cell denominator
/// `td_denominators` so the evaluators can apply the zeta-scaled noise share
/// per call.
#[derive(Debug, Clone)]
pub struct AsymptoticInputs {
    pub a_net: Vec<EmpiricalDistribution>,
    pub a_int: Vec<EmpiricalDistribution>,
    /// Time-division variables at the bare own-cell denominator (no noise
    /// share); rescaled per zeta by the evaluators.
    pub a_td: Vec<EmpiricalDistribution>,
    /// Full-network expectations mu_k = beta * sum_l E{(1 - b) d^2}.
    pub denominators: Vec<f64>,
    /// Own-cell expectations beta * E{(1 - b_{k,k}) d^2_{k,k}}.
    pub td_denominators: Vec<f64>,
    /// sigma_W^2 / N.
    pub noise_per_antenna: f64,
    pub sample_count: usize,
    config: NetworkConfig,
    scenario: ScenarioSpec,
    seed: u64,
}

/// Estimate the denominator expectations, then build per-cell A-variable
/// sample sets from fresh draws of the same scenario.
pub fn build_asymptotic_inputs(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    sample_count: usize,
    seed: u64,
) -> Result<AsymptoticInputs> {
    let stream = AsymStream::build(config, scenario, sample_count, seed)?;
    let cells = stream.cells;
    let all: Vec<usize> = (0..cells).collect();
    let mut a_net = Vec::with_capacity(cells);
    let mut a_int = Vec::with_capacity(cells);
    let mut a_td = Vec::with_capacity(cells);
    let mut denominators = Vec::with_capacity(cells);
    let mut td_denominators = Vec::with_capacity(cells);
    for k in 0..cells {
        let mu = stream.denom(k, &all, 0.0);
        denominators.push(mu);
        let full = mu + stream.noise_per_antenna;
        let others: Vec<usize> = (0..cells).filter(|&l| l != k).collect();
        a_net.push(EmpiricalDistribution::new(stream.a_samples(k, &all, full))?);
        a_int.push(EmpiricalDistribution::new(if others.is_empty() {
            vec![0.0; sample_count]
        } else {
            stream.a_samples(k, &others, full)
        })?);
        let mu_td = stream.denom(k, &[k], 0.0);
        td_denominators.push(mu_td);
        a_td.push(EmpiricalDistribution::new(stream.a_samples(k, &[k], mu_td))?);
    }
    Ok(AsymptoticInputs {
        a_net,
        a_int,
        a_td,
        denominators,
        td_denominators,
        noise_per_antenna: stream.noise_per_antenna,
        sample_count,
        config: config.clone(),
        scenario: scenario.clone(),
        seed,
    })
}

impl AsymptoticInputs {
    fn report(&self, scheme: Scheme, se_bits: f64, std_error: f64) -> SchemeRateReport {
        SchemeRateReport {
            scheme,
            se_bits,
            std_error,
            trials: self.sample_count,
            metadata: RunMetadata {
                config: self.config.clone(),
                scenario: self.scenario.clone(),
                seed: self.seed,
            },
        }
    }

    fn prefactor(&self) -> f64 {
        self.config.overhead_factor() / (self.config.cells as f64 * self.config.ratio())
    }

    /// Time-division variable of cell `k` at fraction `zeta`: the stored
    /// samples rescaled by d0 / (d0 + zeta sigma^2 / N).
    fn a_td_at(&self, k: usize, zeta: f64) -> Result<(EmpiricalDistribution, f64)> {
        let d0 = self.td_denominators[k];
        let scale = d0 / (d0 + zeta * self.noise_per_antenna);
        let samples: Vec<f64> = self.a_td[k].samples().iter().map(|&a| a * scale).collect();
        Ok((EmpiricalDistribution::new(samples)?, scale))
    }
}

fn paired_diff_se2(
    net: &EmpiricalDistribution,
    int: &EmpiricalDistribution,
    beta: f64,
    eta_net: f64,
    eta_int: f64,
) -> f64 {
    let n = net.len();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let x = beta
            * ((1.0 + eta_net * net.samples()[i]).log2()
                - (1.0 + eta_int * int.samples()[i]).log2());
        let count = (i + 1) as f64;
        let delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }
    if n > 1 {
        m2 / (n as f64 - 1.0) / n as f64
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Scheme evaluators
// ---------------------------------------------------------------------------

/// Interference-as-noise rate in the massive-MIMO limit.
pub fn rate_ian_asym(inputs: &AsymptoticInputs) -> Result<SchemeRateReport> {
    let beta = inputs.config.ratio();
    let pref = inputs.prefactor();
    let mut total = 0.0;
    let mut se2 = 0.0;
    for k in 0..inputs.config.cells {
        let net = mp_value(&inputs.a_net[k], beta, SOLVER_TOLERANCE)?;
        let int = mp_value(&inputs.a_int[k], beta, SOLVER_TOLERANCE)?;
        total += net.value_bits - int.value_bits;
        se2 += paired_diff_se2(&inputs.a_net[k], &inputs.a_int[k], beta, net.eta, int.eta);
    }
    Ok(inputs.report(Scheme::Ian, pref * total, pref * se2.sqrt()))
}

/// Simultaneous-decoding rate in the massive-MIMO limit: the worst cell's
/// V(A_net).
pub fn rate_sd_asym(inputs: &AsymptoticInputs) -> Result<SchemeRateReport> {
    let beta = inputs.config.ratio();
    let pref = inputs.prefactor();
    let mut best: Option<(f64, f64)> = None;
    for k in 0..inputs.config.cells {
        let net = mp_value(&inputs.a_net[k], beta, SOLVER_TOLERANCE)?;
        let se = crate::rmt::mp_value_std_error(&inputs.a_net[k], beta, net.eta);
        if best.map_or(true, |(v, _)| net.value_bits < v) {
            best = Some((net.value_bits, se));
        }
    }
    let (min, se) = best.unwrap();
    Ok(inputs.report(Scheme::Sd, pref * min, pref * se))
}

fn check_zetas(zetas: &[f64], cells: usize) -> Result<()> {
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

/// Time-division rate in the massive-MIMO limit for a given interval split.
pub fn rate_td_asym(inputs: &AsymptoticInputs, zetas: &[f64]) -> Result<SchemeRateReport> {
    let cells = inputs.config.cells;
    check_zetas(zetas, cells)?;
    let beta = inputs.config.ratio();
    let pref = inputs.prefactor();
    let mut total = 0.0;
    let mut se2 = 0.0;
    for k in 0..cells {
        let (dist, _) = inputs.a_td_at(k, zetas[k])?;
        let td = mp_value(&dist, beta, SOLVER_TOLERANCE)?;
        let se = crate::rmt::mp_value_std_error(&dist, beta, td.eta);
        total += zetas[k] * td.value_bits;
        se2 += (zetas[k] * se) * (zetas[k] * se);
    }
    Ok(inputs.report(Scheme::Td, pref * total, pref * se2.sqrt()))
}

/// The interval split maximizing the time-division rate, and its value.
///
/// The split is the closed form zeta_k proportional to V(A_td_k), evaluated
/// at the equal split (where the noise share is the same for every cell); the
/// value is then re-evaluated at the chosen split. If the re-evaluated value
/// falls below the equal split's (possible only through the finite-size noise
/// share), the equal split is returned instead.
pub fn optimal_zetas(inputs: &AsymptoticInputs) -> Result<(Vec<f64>, SchemeRateReport)> {
    let cells = inputs.config.cells;
    let equal = vec![1.0 / cells as f64; cells];
    let beta = inputs.config.ratio();
    let mut v_eq = Vec::with_capacity(cells);
    for k in 0..cells {
        let (dist, _) = inputs.a_td_at(k, equal[k])?;
        v_eq.push(mp_value(&dist, beta, SOLVER_TOLERANCE)?.value_bits);
    }
    let sum: f64 = v_eq.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::numerical("all V(A_td) vanish; cannot normalize the interval split"));
    }
    let zetas: Vec<f64> = v_eq.iter().map(|x| x / sum).collect();
    let best = rate_td_asym(inputs, &zetas)?;
    let at_equal = rate_td_asym(inputs, &equal)?;
    if best.se_bits >= at_equal.se_bits {
        Ok((zetas, best))
    } else {
        Ok((equal, at_equal))
    }
}

// ---------------------------------------------------------------------------
// Optimized scheme
// ---------------------------------------------------------------------------

/// A candidate hybrid-scheme layout: disjoint transmission intervals covering
/// the cell set, a decoding-cluster partition of each interval, and the
/// per-interval time fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct OsConfiguration {
    /// Active-cell sets of each interval (0-based cell indices).
    pub intervals: Vec<Vec<usize>>,
    /// Per interval, the partition of its cells into decoding clusters.
    pub clusters: Vec<Vec<Vec<usize>>>,
    /// Per-interval time fractions, in (0, 1], summing to 1.
    pub zetas: Vec<f64>,
}

impl OsConfiguration {
    pub fn validate(&self, cells: usize) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(Error::config("at least one interval is required"));
        }
        if self.intervals.len() != self.clusters.len() || self.intervals.len() != self.zetas.len()
        {
            return Err(Error::config("intervals, clusters and zetas must have equal length"));
        }
        let mut seen = vec![false; cells];
        for iv in &self.intervals {
            if iv.is_empty() {
                return Err(Error::config("intervals must be nonempty"));
            }
            for &c in iv {
                if c >= cells {
                    return Err(Error::config(format!("cell index {c} out of range")));
                }
                if seen[c] {
                    return Err(Error::config(format!("cell {c} appears in two intervals")));
                }
                seen[c] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::config("intervals must span every cell"));
        }
        for (iv, cls) in self.intervals.iter().zip(&self.clusters) {
            let mut seen = std::collections::BTreeSet::new();
            for cl in cls {
                if cl.is_empty() {
                    return Err(Error::config("clusters must be nonempty"));
                }
                for &c in cl {
                    if !iv.contains(&c) {
                        return Err(Error::config(format!(
                            "cluster cell {c} is not in its interval"
                        )));
                    }
                    if !seen.insert(c) {
                        return Err(Error::config(format!("cell {c} appears in two clusters")));
                    }
                }
            }
            if seen.len() != iv.len() {
                return Err(Error::config("clusters must cover their interval"));
            }
        }
        if self.zetas.iter().any(|&z| !(z > 0.0 && z <= 1.0)) {
            return Err(Error::config("every zeta must lie in (0, 1]"));
        }
        let sum: f64 = self.zetas.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("zetas must sum to 1, got {sum}")));
        }
        Ok(())
    }

    /// Canonical 1-based display form, e.g. `[1,3,4][2,5]`.
    pub fn intervals_string(&self) -> String {
        intervals_display(&self.intervals)
    }

    /// Clusters grouped per interval, e.g. `{[1,3][4]}{[2,5]}`.
    pub fn clusters_string(&self) -> String {
        clusters_display(&self.clusters)
    }
}

pub fn intervals_display(intervals: &[Vec<usize>]) -> String {
    intervals
        .iter()
        .map(|iv| {
            let inner: Vec<String> = iv.iter().map(|c| (c + 1).to_string()).collect();
            format!("[{}]", inner.join(","))
        })
        .collect()
}

pub fn clusters_display(clusters: &[Vec<Vec<usize>>]) -> String {
    clusters
        .iter()
        .map(|cls| {
            let body: String = cls
                .iter()
                .map(|cl| {
                    let inner: Vec<String> = cl.iter().map(|c| (c + 1).to_string()).collect();
                    format!("[{}]", inner.join(","))
                })
                .collect();
            format!("{{{body}}}")
        })
        .collect()
}

/// Z_q of one interval at fraction `zeta`: the sum over clusters of the
/// worst-cell value difference, with its squared standard error.
pub(crate) fn interval_z(
    stream: &AsymStream,
    interval: &[usize],
    clusters: &[Vec<usize>],
    zeta: f64,
) -> Result<(f64, f64)> {
    let mut z = 0.0;
    let mut se2 = 0.0;
    for cluster in clusters {
        let jbar: Vec<usize> =
            interval.iter().copied().filter(|c| !cluster.contains(c)).collect();
        let mut best: Option<(f64, f64)> = None;
        for &k in cluster {
            let pair = stream.v_pair(k, interval, &jbar, zeta)?;
            let diff = pair.v_net - pair.v_int;
            if best.map_or(true, |(v, _)| diff < v) {
                best = Some((diff, pair.diff_se2));
            }
        }
        let (diff, var) = best.expect("clusters are nonempty");
        z += diff;
        se2 += var;
    }
    Ok((z, se2))
}

/// Rate of the optimized scheme in the massive-MIMO limit for a fixed
/// configuration (intervals, clusters, zetas).
pub fn rate_os_asym(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    os_config: &OsConfiguration,
    sample_count: usize,
    seed: u64,
) -> Result<SchemeRateReport> {
    os_config.validate(config.cells)?;
    let stream = AsymStream::build(config, scenario, sample_count, seed)?;
    let pref = config.overhead_factor() / (config.cells as f64 * config.ratio());
    let mut total = 0.0;
    let mut se2 = 0.0;
    for (q, iv) in os_config.intervals.iter().enumerate() {
        let (z, var) = interval_z(&stream, iv, &os_config.clusters[q], os_config.zetas[q])?;
        total += os_config.zetas[q] * z;
        se2 += os_config.zetas[q] * os_config.zetas[q] * var;
    }
    Ok(SchemeRateReport {
        scheme: Scheme::Os,
        se_bits: pref * total,
        std_error: pref * se2.sqrt(),
        trials: sample_count,
        metadata: RunMetadata { config: config.clone(), scenario: scenario.clone(), seed },
    })
}

/// For a fixed set of intervals and clusters, the optimal time fractions
/// (zeta_q proportional to Z_q, evaluated at the equal split) and the
/// resulting rate, re-evaluated at the chosen split. Falls back to the equal
/// split when the finite-size noise share makes it the better of the two.
pub fn optimal_os_zetas(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    intervals: &[Vec<usize>],
    clusters: &[Vec<Vec<usize>>],
    sample_count: usize,
    seed: u64,
) -> Result<(Vec<f64>, SchemeRateReport)> {
    let n_p = intervals.len();
    let proto = OsConfiguration {
        intervals: intervals.to_vec(),
        clusters: clusters.to_vec(),
        zetas: vec![1.0 / n_p.max(1) as f64; n_p],
    };
    proto.validate(config.cells)?;
    let stream = AsymStream::build(config, scenario, sample_count, seed)?;
    let outcome = optimal_zetas_with_stream(&stream, config, intervals, clusters)?;
    let report = SchemeRateReport {
        scheme: Scheme::Os,
        se_bits: outcome.value,
        std_error: outcome.std_error,
        trials: sample_count,
        metadata: RunMetadata { config: config.clone(), scenario: scenario.clone(), seed },
    };
    Ok((outcome.zetas, report))
}

/// Shared by `optimal_os_zetas` and the exhaustive optimizer so both rank
/// configurations identically.
pub(crate) struct OsZetaOutcome {
    pub zetas: Vec<f64>,
    pub z_values: Vec<f64>,
    pub value: f64,
    pub std_error: f64,
}

pub(crate) fn optimal_zetas_with_stream(
    stream: &AsymStream,
    config: &NetworkConfig,
    intervals: &[Vec<usize>],
    clusters: &[Vec<Vec<usize>>],
) -> Result<OsZetaOutcome> {
    let pref = config.overhead_factor() / (config.cells as f64 * config.ratio());
    optimize_split(pref, intervals.len(), |q, zeta| {
        interval_z(stream, &intervals[q], &clusters[q], zeta)
    })
}

/// Split-selection recipe shared with the exhaustive optimizer: evaluate the
/// per-interval Z values at the neutral split, take the closed-form
/// proportional fractions, re-evaluate the rate at that split, and keep the
/// better of it and the equal split. `z_at(q, zeta)` returns `(Z_q, var_q)`
/// at fraction `zeta`.
pub(crate) fn optimize_split<F>(pref: f64, n_p: usize, mut z_at: F) -> Result<OsZetaOutcome>
where
    F: FnMut(usize, f64) -> Result<(f64, f64)>,
{
    let neutral = 1.0 / n_p as f64;
    let mut z_eq = Vec::with_capacity(n_p);
    let mut var_eq = Vec::with_capacity(n_p);
    for q in 0..n_p {
        let (z, var) = z_at(q, neutral)?;
        z_eq.push(z);
        var_eq.push(var);
    }
    let sum: f64 = z_eq.iter().sum();
    if !(sum > 0.0) {
        // Zero-rate layout; report the equal split with value 0.
        return Ok(OsZetaOutcome {
            zetas: vec![neutral; n_p],
            z_values: z_eq,
            value: 0.0,
            std_error: 0.0,
        });
    }
    let value_of = |zetas: &[f64], zs: &[f64], vars: &[f64]| -> (f64, f64) {
        let mut total = 0.0;
        let mut se2 = 0.0;
        for q in 0..n_p {
            total += zetas[q] * zs[q];
            se2 += zetas[q] * zetas[q] * vars[q];
        }
        (pref * total, pref * se2.sqrt())
    };
    if n_p == 1 {
        let (value, se) = value_of(&[1.0], &z_eq, &var_eq);
        return Ok(OsZetaOutcome { zetas: vec![1.0], z_values: z_eq, value, std_error: se });
    }
    let zetas: Vec<f64> = z_eq.iter().map(|z| z / sum).collect();
    let mut z_opt = Vec::with_capacity(n_p);
    let mut var_opt = Vec::with_capacity(n_p);
    for q in 0..n_p {
        let (z, var) = z_at(q, zetas[q])?;
        z_opt.push(z);
        var_opt.push(var);
    }
    let (value_opt, se_opt) = value_of(&zetas, &z_opt, &var_opt);
    let equal = vec![neutral; n_p];
    let (value_eq, se_eq) = value_of(&equal, &z_eq, &var_eq);
    if value_opt >= value_eq {
        Ok(OsZetaOutcome { zetas, z_values: z_opt, value: value_opt, std_error: se_opt })
    } else {
        Ok(OsZetaOutcome { zetas: equal, z_values: z_eq, value: value_eq, std_error: se_eq })
    }
}
