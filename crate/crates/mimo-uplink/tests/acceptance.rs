//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS/FAIL` line (run with `--nocapture` to see the lines for
//! passing tests). Criteria with several sub-assertions print one sub-line
//! each before the verdict.
//!
//! Three sub-assertions are KNOWN RED and fail deliberately; the analysis
//! lives with the project maintainers' notes:
//! * criterion 4: the two baseline-gap magnitude bands (the empirical
//!   linear-receiver baseline is structurally different from the external
//!   closed form those magnitudes came from);
//! * criterion 6: the moderate-profile winner structure (the exhaustive
//!   search finds pure interference-as-noise decisively ahead at high sample
//!   counts, for every shadowing level);
//! * criterion 7: the weak-regime time-division bound (the exact weak-limit
//!   ratio is 2 A, giving |R_TD - R_SD| / R_SD ~ 0.114 > 0.10).

use mimo_uplink::asymptotic::{
    build_asymptotic_inputs, optimal_zetas, rate_ian_asym, rate_os_asym, rate_sd_asym,
    rate_td_asym, OsConfiguration,
};
use mimo_uplink::finite::{
    draw_channel, dft_pilots, estimate_channel_explicit, logdet_mc, rate_ian_finite,
    rate_linear_finite, rate_sd_finite, rate_td_finite, LinearReceiver,
};
use mimo_uplink::network::{generate_attenuation, NetworkConfig, ScenarioSpec};
use mimo_uplink::optimizer::{configuration_count, enumerate_configurations, optimize_os};
use mimo_uplink::rmt::{mp_value, solve_eta, EmpiricalDistribution};

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

/// Record one sub-check; prints its own line.
struct Criterion {
    name: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion { name, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        println!("  [{}] {}", if ok { "ok" } else { "FAIL" }, detail);
        if !ok {
            self.failures.push(detail);
        }
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("criterion {}: PASS", self.name);
        } else {
            println!("criterion {}: FAIL — {}", self.name, self.failures.join("; "));
            panic!("criterion {}: FAIL — {}", self.name, self.failures.join("; "));
        }
    }
}

/// Closed-form fixed point for a point mass A = a: positive root of
/// a eta^2 + (a (beta - 1) + 1) eta - 1 = 0.
fn eta_point_mass(a: f64, beta: f64) -> f64 {
    let b = a * (beta - 1.0) + 1.0;
    (-b + (b * b + 4.0 * a).sqrt()) / (2.0 * a)
}

fn v_point_mass(a: f64, beta: f64) -> f64 {
    let eta = eta_point_mass(a, beta);
    beta * (1.0 + eta * a).log2() - eta.log2() + (eta - 1.0) * std::f64::consts::LOG2_E
}

fn combined_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

const WEAK: f64 = 3.0;
const MODERATE: f64 = 0.25;
const STRONG: f64 = -1.0;

// ---------------------------------------------------------------------------
// 1. Fixed-point exactness
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_fixed_point_exactness() {
    let mut c = Criterion::new("1 (fixed-point exactness)");
    for &a in &[1.0, 10.0] {
        for &beta in &[0.5, 1.0] {
            let dist = EmpiricalDistribution::point_mass(a).unwrap();
            let eta = solve_eta(&dist, beta, 1e-12).unwrap();
            let expect = eta_point_mass(a, beta);
            c.check(
                (eta - expect).abs() <= 1e-9,
                format!("eta(A={a}, beta={beta}): |{eta} - {expect}| <= 1e-9"),
            );
            let v = mp_value(&dist, beta, 1e-12).unwrap().value_bits;
            let v_expect = v_point_mass(a, beta);
            c.check(
                (v - v_expect).abs() <= 1e-8,
                format!("V(A={a}, beta={beta}): |{v} - {v_expect}| <= 1e-8"),
            );
        }
    }
    c.finish();
}

// ---------------------------------------------------------------------------
// 2. Convergence of the finite log-determinant to the limit functional
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_limit_convergence() {
    let mut c = Criterion::new("2 (log-det convergence to the limit)");
    let beta = 0.2;
    let v = v_point_mass(1.0, beta);
    for (n, tol) in [(500usize, 0.02), (1000, 0.015), (2000, 0.01)] {
        let k = (beta * n as f64).round() as usize;
        let diag = vec![1.0 / n as f64; k];
        let (mean, _) = logdet_mc(|_| diag.clone(), n, 200, 41).unwrap();
        let rel = (mean / n as f64 - v).abs() / v;
        c.check(rel <= tol, format!("N={n}: relative error {rel:.5} <= {tol}"));
    }
    c.finish();
}

// ---------------------------------------------------------------------------
// 3. Finite vs asymptotic agreement at N = 200
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_finite_asymptotic_agreement() {
    let mut c = Criterion::new("3 (finite vs asymptotic at N = 200)");
    let seed = 71;
    let trials = 2000;
    let config = NetworkConfig::new(5, 40, 200, 1000, 100, 1.0).unwrap();
    let equal = vec![0.2; 5];
    for (label, alpha) in [("weak", WEAK), ("moderate", MODERATE)] {
        let scenario = ScenarioSpec::synthetic(alpha);
        let inputs = build_asymptotic_inputs(&config, &scenario, 200_000, seed).unwrap();
        let pairs = [
            ("ian", rate_ian_finite(&config, &scenario, trials, seed).unwrap(),
                rate_ian_asym(&inputs).unwrap()),
            ("sd", rate_sd_finite(&config, &scenario, trials, seed).unwrap(),
                rate_sd_asym(&inputs).unwrap()),
            ("td", rate_td_finite(&config, &scenario, &equal, trials, seed).unwrap(),
                rate_td_asym(&inputs, &equal).unwrap()),
        ];
        for (scheme, fin, asym) in pairs {
            let rel = (fin.se_bits - asym.se_bits).abs() / asym.se_bits;
            c.check(
                rel <= 0.03,
                format!(
                    "{label} {scheme}: finite {:.4} vs asymptotic {:.4}, rel {rel:.4} <= 0.03",
                    fin.se_bits, asym.se_bits
                ),
            );
        }
    }
    c.finish();
}

// ---------------------------------------------------------------------------
// 4. Weak-interference orderings at high SNR
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_weak_interference_orderings() {
    let mut c = Criterion::new("4 (weak-interference orderings at 30 dB)");
    let seed = 2024;
    let config = NetworkConfig::new(5, 40, 200, 1000, 100, 1e-3).unwrap();
    let scenario = ScenarioSpec::synthetic(WEAK);

    let ian = rate_ian_finite(&config, &scenario, 400, seed).unwrap();
    let mmse =
        rate_linear_finite(&config, &scenario, LinearReceiver::Mmse, 400, seed).unwrap();
    let mf = rate_linear_finite(&config, &scenario, LinearReceiver::MatchedFilter, 400, seed)
        .unwrap();
    c.check(
        ian.se_bits >= mmse.se_bits - 2.0 * combined_se(ian.std_error, mmse.std_error),
        format!("ian {:.4} >= linear_mmse {:.4}", ian.se_bits, mmse.se_bits),
    );
    c.check(
        mmse.se_bits >= mf.se_bits - 2.0 * combined_se(mmse.std_error, mf.std_error),
        format!("linear_mmse {:.4} >= linear_mf {:.4}", mmse.se_bits, mf.se_bits),
    );

    let inputs = build_asymptotic_inputs(&config, &scenario, 200_000, seed).unwrap();
    let ian_a = rate_ian_asym(&inputs).unwrap();
    let sd_a = rate_sd_asym(&inputs).unwrap();
    let ratio = ian_a.se_bits / sd_a.se_bits;
    c.check(
        (4.0..=6.0).contains(&ratio),
        format!("ian/sd ratio {ratio:.3} in [4, 6]"),
    );

    let outcome = optimize_os(&config, &scenario, 200_000, seed).unwrap();
    let winner = &outcome.best;
    let pure_ian = winner.intervals.len() == 1
        && winner.clusters[0].iter().all(|cl| cl.len() == 1);
    c.check(
        pure_ian,
        format!(
            "optimizer winner is pure interference-as-noise (got intervals {} clusters {})",
            winner.intervals_string(),
            winner.clusters_string()
        ),
    );

    // Baseline gap magnitudes, pinned to the stated +/-50% bands. KNOWN RED:
    // the empirical per-realization baseline is near-optimal for MMSE and
    // interference-limited for MF at K/N = 0.2, so the reference magnitudes
    // (2.2 and 0.45 bits, from a closed-form baseline model this empirical
    // construction replaces) do not transfer.
    let gap_mf = ian.se_bits - mf.se_bits;
    let gap_mmse = ian.se_bits - mmse.se_bits;
    c.check(gap_mf > 0.0 && gap_mmse >= -2.0 * combined_se(ian.std_error, mmse.std_error),
        format!("gap signs: ian-mf {gap_mf:.3} > 0, ian-mmse {gap_mmse:.3} >= 0"));
    c.check(
        (1.1..=3.3).contains(&gap_mf),
        format!("gap to matched filter {gap_mf:.3} in [1.1, 3.3]"),
    );
    c.check(
        (0.225..=0.675).contains(&gap_mmse),
        format!("gap to linear MMSE {gap_mmse:.3} in [0.225, 0.675]"),
    );
    c.finish();
}

// ---------------------------------------------------------------------------
// 5. Strong-interference regime
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_strong_interference_regime() {
    let mut c = Criterion::new("5 (strong-interference regime at 0 dB)");
    let seed = 1105;
    let config = NetworkConfig::new(5, 40, 200, 1000, 100, 1.0).unwrap();
    let scenario = ScenarioSpec::synthetic(STRONG);

    let inputs = build_asymptotic_inputs(&config, &scenario, 200_000, seed).unwrap();
    let sd = rate_sd_asym(&inputs).unwrap();
    let ian = rate_ian_asym(&inputs).unwrap();
    let outcome = optimize_os(&config, &scenario, 200_000, seed).unwrap();
    let best = outcome.best_report.se_bits;

    let agree = (best - sd.se_bits).abs() / sd.se_bits;
    c.check(
        agree <= 0.05,
        format!("optimizer {best:.4} agrees with sd {:.4} within 5% (rel {agree:.4})", sd.se_bits),
    );
    for (label, v) in [("sd", sd.se_bits), ("optimizer", best)] {
        c.check(
            (0.44..=0.66).contains(&v),
            format!("{label} value {v:.4} in [0.44, 0.66]"),
        );
    }
    c.check(ian.se_bits <= 0.05, format!("ian {:.5} <= 0.05", ian.se_bits));

    let mf = rate_linear_finite(&config, &scenario, LinearReceiver::MatchedFilter, 300, seed)
        .unwrap();
    let mmse =
        rate_linear_finite(&config, &scenario, LinearReceiver::Mmse, 300, seed).unwrap();
    c.check(mf.se_bits <= 0.05, format!("linear_mf {:.5} <= 0.05", mf.se_bits));
    c.check(mmse.se_bits <= 0.05, format!("linear_mmse {:.5} <= 0.05", mmse.se_bits));
    c.finish();
}

// ---------------------------------------------------------------------------
// 6. Moderate-profile optimizer structure
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_moderate_optimizer_structure() {
    let mut c = Criterion::new("6 (moderate-profile optimizer structure)");
    let seed = 606;
    // Full-scale network: K = 80, N = 800, 30 dB.
    let config = NetworkConfig::new(5, 80, 800, 1000, 100, 1e-3).unwrap();
    let scenario = ScenarioSpec::synthetic(MODERATE);
    let outcome = optimize_os(&config, &scenario, 200_000, seed).unwrap();
    let inputs = build_asymptotic_inputs(&config, &scenario, 200_000, seed).unwrap();
    let ian = rate_ian_asym(&inputs).unwrap();
    let winner = &outcome.best;
    println!(
        "  winner: {} {} zetas {:?} value {:.5} (runner-up {:.5}); ian {:.5}",
        winner.intervals_string(),
        winner.clusters_string(),
        winner.zetas,
        outcome.best_report.se_bits,
        outcome.table[1].se_bits,
        ian.se_bits,
    );

    // KNOWN RED: at high sample counts the exhaustive search finds pure
    // interference-as-noise ahead of every split for this profile, at every
    // shadowing level; a two-interval winner shows up only as sampling noise
    // at small sample counts.
    let two_intervals = winner.intervals.len() == 2;
    c.check(two_intervals, format!("winner has n_p = 2 (got {})", winner.intervals.len()));
    let three_cell = winner.intervals.iter().find(|iv| iv.len() == 3);
    c.check(three_cell.is_some(), "winner has a 3-cell interval".to_string());
    if let Some(iv) = three_cell {
        let q = winner.intervals.iter().position(|x| x == iv).unwrap();
        let zeta = winner.zetas[q];
        c.check(
            (0.55..=0.75).contains(&zeta),
            format!("3-cell interval share {zeta:.3} in [0.55, 0.75]"),
        );
    }
    let margin = outcome.best_report.se_bits - ian.se_bits;
    let se = combined_se(outcome.best_report.std_error, ian.std_error);
    c.check(
        margin >= 2.0 * se,
        format!("optimizer beats ian by {margin:.5} >= 2 x {se:.5}"),
    );
    c.finish();
}

// ---------------------------------------------------------------------------
// 7. Two-cell extreme-regime properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_two_cell_regime_properties() {
    let mut c = Criterion::new("7 (two-cell extreme regimes)");
    let seed = 707;
    let samples = 400_000;
    let config = NetworkConfig::new(2, 40, 200, 1000, 100, 1e-6).unwrap();

    // Weak regime: own-cell squared attenuation on [100, 200], cross on
    // [0.5, 1].
    let scenario = ScenarioSpec::two_cell(100.0, 200.0, 0.5, 1.0);
    let inputs = build_asymptotic_inputs(&config, &scenario, samples, seed).unwrap();
    let ian = rate_ian_asym(&inputs).unwrap().se_bits;
    let sd = rate_sd_asym(&inputs).unwrap().se_bits;
    let (_, td) = optimal_zetas(&inputs).unwrap();
    let td = td.se_bits;
    let r1 = (ian - 2.0 * sd).abs() / ian;
    c.check(r1 <= 0.1, format!("weak: |ian - 2 sd| / ian = {r1:.4} <= 0.1"));
    // KNOWN RED: the exact weak-limit of the time-division variable is twice
    // the network variable (one- vs two-term residual denominators), putting
    // this ratio at ~0.114.
    let r2 = (td - sd).abs() / sd;
    c.check(r2 <= 0.1, format!("weak: |td - sd| / sd = {r2:.4} <= 0.1"));

    // Strong regime: supports swapped.
    let scenario = ScenarioSpec::two_cell(0.5, 1.0, 100.0, 200.0);
    let inputs = build_asymptotic_inputs(&config, &scenario, samples, seed).unwrap();
    let ian = rate_ian_asym(&inputs).unwrap().se_bits;
    let sd = rate_sd_asym(&inputs).unwrap().se_bits;
    let (_, td) = optimal_zetas(&inputs).unwrap();
    let td = td.se_bits;
    c.check(
        ian <= 0.05 * sd,
        format!("strong: ian {ian:.5} <= 0.05 x sd {sd:.4}"),
    );
    c.check(td < sd, format!("strong: td {td:.4} < sd {sd:.4}"));
    c.finish();
}

// ---------------------------------------------------------------------------
// 8. Specialization triangle
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_specialization_triangle() {
    let mut c = Criterion::new("8 (hybrid-scheme specializations)");
    let samples = 20_000;
    // Five scenarios spanning the families; seeds vary per scenario.
    let cases: Vec<(NetworkConfig, ScenarioSpec, u64)> = vec![
        (NetworkConfig::new(3, 12, 60, 1000, 100, 1.0).unwrap(),
            ScenarioSpec::synthetic(WEAK), 81),
        (NetworkConfig::new(3, 12, 60, 1000, 100, 0.1).unwrap(),
            ScenarioSpec::synthetic(MODERATE), 82),
        (NetworkConfig::new(4, 8, 80, 1000, 50, 1.0).unwrap(),
            ScenarioSpec::synthetic(STRONG), 83),
        (NetworkConfig::new(2, 10, 50, 1000, 40, 0.01).unwrap(),
            ScenarioSpec::two_cell(2.0, 5.0, 0.5, 1.5), 84),
        (NetworkConfig::new(2, 16, 40, 500, 30, 1.0).unwrap(),
            ScenarioSpec::two_cell(0.5, 1.0, 3.0, 9.0), 85),
    ];
    for (config, scenario, seed) in cases {
        let cells = config.cells;
        let inputs = build_asymptotic_inputs(&config, &scenario, samples, seed).unwrap();
        let all: Vec<usize> = (0..cells).collect();

        // Single interval, singleton clusters -> interference as noise.
        let cfg = OsConfiguration {
            intervals: vec![all.clone()],
            clusters: vec![all.iter().map(|&k| vec![k]).collect()],
            zetas: vec![1.0],
        };
        let os = rate_os_asym(&config, &scenario, &cfg, samples, seed).unwrap();
        let ian = rate_ian_asym(&inputs).unwrap();
        let tol = 2.0 * combined_se(os.std_error, ian.std_error) + 1e-9;
        c.check(
            (os.se_bits - ian.se_bits).abs() <= tol,
            format!("L={cells} seed={seed}: singleton clusters -> ian ({:.5} vs {:.5})",
                os.se_bits, ian.se_bits),
        );

        // Single interval, one all-cell cluster -> simultaneous decoding.
        let cfg = OsConfiguration {
            intervals: vec![all.clone()],
            clusters: vec![vec![all.clone()]],
            zetas: vec![1.0],
        };
        let os = rate_os_asym(&config, &scenario, &cfg, samples, seed).unwrap();
        let sd = rate_sd_asym(&inputs).unwrap();
        let tol = 2.0 * combined_se(os.std_error, sd.std_error) + 1e-9;
        c.check(
            (os.se_bits - sd.se_bits).abs() <= tol,
            format!("L={cells} seed={seed}: all-cell cluster -> sd ({:.5} vs {:.5})",
                os.se_bits, sd.se_bits),
        );

        // Singleton intervals -> time division with the same zetas.
        let zetas: Vec<f64> = {
            let base = 1.0 / cells as f64;
            let mut z = vec![base; cells];
            z[0] += 0.1 * base;
            z[1] -= 0.1 * base;
            z
        };
        let cfg = OsConfiguration {
            intervals: all.iter().map(|&k| vec![k]).collect(),
            clusters: all.iter().map(|&k| vec![vec![k]]).collect(),
            zetas: zetas.clone(),
        };
        let os = rate_os_asym(&config, &scenario, &cfg, samples, seed).unwrap();
        let td = rate_td_asym(&inputs, &zetas).unwrap();
        let tol = 2.0 * combined_se(os.std_error, td.std_error) + 1e-9;
        c.check(
            (os.se_bits - td.se_bits).abs() <= tol,
            format!("L={cells} seed={seed}: singleton intervals -> td ({:.5} vs {:.5})",
                os.se_bits, td.se_bits),
        );
    }
    c.finish();
}

// ---------------------------------------------------------------------------
// 9. Pilot-phase estimator validation
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_estimator_validation() {
    let mut c = Criterion::new("9 (pilot-phase estimator)");
    let config = NetworkConfig::new(2, 2, 8, 200, 12, 0.5).unwrap();
    let scenario = ScenarioSpec::synthetic(MODERATE);
    let seed = 909;
    let draw = generate_attenuation(&config, &scenario, seed).unwrap();
    let pilots = dft_pilots(2, 12);

    // Reconstruction and contamination alignment on one realization.
    let channel = draw_channel(&config, seed, 0);
    let est = estimate_channel_explicit(&pilots, &draw, &channel).unwrap();
    let mut max_recon = 0.0f64;
    for idx in 0..4 {
        let diff = est.g_hat[idx].add(&est.g_err[idx]).sub(&est.g[idx]).frobenius_norm()
            / est.g[idx].frobenius_norm();
        max_recon = max_recon.max(diff);
    }
    c.check(max_recon <= 1e-12, format!("estimate + error = channel (rel {max_recon:.2e})"));

    let mut max_align = 0.0f64;
    for k in 0..2 {
        for l in 0..2 {
            let own = &est.g_hat[k * 2 + k];
            let hat = &est.g_hat[k * 2 + l];
            for m in 0..2 {
                let ratio = draw.d2(k, l, m) / draw.d2(k, k, m);
                for i in 0..8 {
                    let expect = own[(i, m)] * ratio;
                    let scale = 1.0 + expect.norm();
                    max_align = max_align.max((hat[(i, m)] - expect).norm() / scale);
                }
            }
        }
    }
    c.check(
        max_align <= 1e-10,
        format!("contamination alignment holds to 1e-10 (max {max_align:.2e})"),
    );

    // Moment match against the distributional model over 10^4 draws at fixed
    // attenuations: E|entry|^2 of the estimate is b d^2 entry-wise.
    let draws = 10_000usize;
    let mut sums = vec![0.0f64; 2 * 2 * 2]; // (k, l, user)
    for r in 0..draws {
        let channel = draw_channel(&config, seed, r as u64);
        let est = estimate_channel_explicit(&pilots, &draw, &channel).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                for m in 0..2 {
                    let col = est.g_hat[k * 2 + l].col(m);
                    let mean_sq: f64 =
                        col.iter().map(|z| z.norm_sqr()).sum::<f64>() / col.len() as f64;
                    sums[(k * 2 + l) * 2 + m] += mean_sq;
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        for l in 0..2 {
            for m in 0..2 {
                let got = sums[(k * 2 + l) * 2 + m] / draws as f64;
                let expect = draw.b(k, l, m) * draw.d2(k, l, m);
                // |entry|^2 of a complex Gaussian has variance equal to its
                // squared mean; 8 antennas x draws samples.
                let se = expect / ((draws * 8) as f64).sqrt();
                worst = worst.max((got - expect).abs() / se);
            }
        }
    }
    c.check(worst <= 3.0, format!("second moments within 3 SE (worst {worst:.2})"));
    c.finish();
}

// ---------------------------------------------------------------------------
// 10. Pilot sweep behavior
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_pilot_sweep() {
    let mut c = Criterion::new("10 (pilot sweep)");
    let seed = 1010;
    let samples = 100_000;
    let taus: Vec<usize> = (0..9).map(|i| 80 + 40 * i).collect();
    let mut per_scheme: Vec<Vec<f64>> = vec![Vec::new(); 4];
    // High SNR: the overhead factor (1 - tau/T) dominates and the decrease is
    // linear. At 0 dB the time-division scheme genuinely gains from extra
    // pilots at small tau (its own-cell floor shrinks like sigma^2/tau),
    // which bends the start of its curve.
    for &tau in &taus {
        let config = NetworkConfig::new(5, 80, 800, 1000, tau, 1e-3).unwrap();
        let scenario = ScenarioSpec::synthetic(WEAK);
        let inputs = build_asymptotic_inputs(&config, &scenario, samples, seed).unwrap();
        per_scheme[0].push(rate_ian_asym(&inputs).unwrap().se_bits);
        per_scheme[1].push(rate_sd_asym(&inputs).unwrap().se_bits);
        per_scheme[2].push(optimal_zetas(&inputs).unwrap().1.se_bits);
        per_scheme[3]
            .push(optimize_os(&config, &scenario, samples, seed).unwrap().best_report.se_bits);
    }
    let names = ["ian", "sd", "td", "os"];
    for (name, values) in names.iter().zip(&per_scheme) {
        let monotone = values.windows(2).all(|w| w[1] < w[0]);
        c.check(monotone, format!("{name} strictly decreasing over tau: {values:?}"));
        // Least-squares linear fit R^2.
        let n = values.len() as f64;
        let xs: Vec<f64> = taus.iter().map(|&t| t as f64).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = values.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(values.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let syy: f64 = values.iter().map(|y| (y - my) * (y - my)).sum();
        let r2 = sxy * sxy / (sxx * syy);
        c.check(r2 >= 0.98, format!("{name} linear fit R^2 = {r2:.4} >= 0.98"));
    }
    c.finish();
}

// ---------------------------------------------------------------------------
// 11. Enumeration counts
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_enumeration_counts() {
    let mut c = Criterion::new("11 (configuration enumeration counts)");

    // Independent recursive oracle: choose the block containing the largest
    // element (size j), partition it into clusters (Bell(j) ways), recurse.
    fn bell_oracle(n: usize) -> u128 {
        // Bell numbers by the triangle.
        let mut bell = vec![1u128; n + 1];
        let mut row = vec![1u128];
        for i in 1..=n {
            let mut next = vec![*row.last().unwrap()];
            for j in 0..row.len() {
                let v = next[j] + row[j];
                next.push(v);
            }
            bell[i] = next[0];
            row = next;
        }
        let mut binom = vec![vec![0u128; n + 1]; n + 1];
        for i in 0..=n {
            binom[i][0] = 1;
            for j in 1..=i {
                binom[i][j] = binom[i - 1][j - 1] + binom[i - 1][j];
            }
        }
        let mut a = vec![0u128; n + 1];
        a[0] = 1;
        for m in 1..=n {
            a[m] = (1..=m).map(|j| binom[m - 1][j - 1] * bell[j] * a[m - j]).sum();
        }
        a[n]
    }

    for (l, expect) in [(1usize, 1u128), (2, 3), (3, 12)] {
        let got = enumerate_configurations(l).unwrap().count() as u128;
        c.check(got == expect, format!("L={l}: {got} configurations (expect {expect})"));
    }
    for l in 1..=6usize {
        let enumerated = enumerate_configurations(l).unwrap().count() as u128;
        let oracle = bell_oracle(l);
        let library = configuration_count(l);
        c.check(
            enumerated == oracle && library == oracle,
            format!("L={l}: enumerated {enumerated}, oracle {oracle}, count fn {library}"),
        );
    }
    c.finish();
}

// ---------------------------------------------------------------------------
// 12. Determinism, serial vs parallel
// ---------------------------------------------------------------------------

#[test]
fn criterion_12_determinism() {
    let mut c = Criterion::new("12 (determinism, serial vs parallel)");
    let config = NetworkConfig::new(3, 8, 32, 400, 20, 0.5).unwrap();
    let scenario = ScenarioSpec::synthetic(MODERATE);
    let seed = 1212;

    let serial_pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide_pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();

    // Finite engines.
    let a = wide_pool
        .install(|| rate_ian_finite(&config, &scenario, 64, seed).unwrap());
    let b = wide_pool
        .install(|| rate_ian_finite(&config, &scenario, 64, seed).unwrap());
    let s = serial_pool
        .install(|| rate_ian_finite(&config, &scenario, 64, seed).unwrap());
    c.check(
        a.se_bits == b.se_bits && a.std_error == b.std_error,
        "finite ian: repeated runs identical".to_string(),
    );
    c.check(
        a.se_bits == s.se_bits && a.std_error == s.std_error,
        "finite ian: serial equals parallel".to_string(),
    );

    let a = wide_pool.install(|| {
        rate_linear_finite(&config, &scenario, LinearReceiver::Mmse, 32, seed).unwrap()
    });
    let s = serial_pool.install(|| {
        rate_linear_finite(&config, &scenario, LinearReceiver::Mmse, 32, seed).unwrap()
    });
    c.check(a.se_bits == s.se_bits, "linear baseline: serial equals parallel".to_string());

    // Asymptotic pipeline and the exhaustive search.
    let a = wide_pool.install(|| optimize_os(&config, &scenario, 10_000, seed).unwrap());
    let s = serial_pool.install(|| optimize_os(&config, &scenario, 10_000, seed).unwrap());
    c.check(
        a.best_report.se_bits == s.best_report.se_bits
            && a.best == s.best
            && a.table.len() == s.table.len(),
        "optimizer: serial equals parallel, identical winner".to_string(),
    );
    let ia = build_asymptotic_inputs(&config, &scenario, 10_000, seed).unwrap();
    let ib = build_asymptotic_inputs(&config, &scenario, 10_000, seed).unwrap();
    c.check(
        ia.a_net.iter().zip(&ib.a_net).all(|(x, y)| x.samples() == y.samples()),
        "asymptotic inputs bitwise reproducible".to_string(),
    );
    c.finish();
}
