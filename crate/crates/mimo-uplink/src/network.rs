//! Network parameters, attenuation-realization generators, and the
//! pilot-estimation coefficients consumed by every rate engine.
//!
//! Cell and user indices are 0-based throughout the API; user-facing strings
//! (CLI output) are 1-based.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{lognormal_shadow, substream, Domain};

// ---------------------------------------------------------------------------
// NetworkConfig
// ---------------------------------------------------------------------------

/// Static network parameters.
///
/// The user/antenna ratio is derived as `users_per_cell / antennas`; it is not
/// an independent knob.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub cells: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    pub coherence_symbols: usize,
    pub pilot_symbols: usize,
    pub noise_power: f64,
}

impl NetworkConfig {
    pub fn new(
        cells: usize,
        users_per_cell: usize,
        antennas: usize,
        coherence_symbols: usize,
        pilot_symbols: usize,
        noise_power: f64,
    ) -> Result<Self> {
        let cfg = NetworkConfig {
            cells,
            users_per_cell,
            antennas,
            coherence_symbols,
            pilot_symbols,
            noise_power,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 || self.users_per_cell == 0 || self.antennas == 0 {
            return Err(Error::config("cells, users_per_cell and antennas must be positive"));
        }
        if self.pilot_symbols < self.users_per_cell {
            return Err(Error::config(format!(
                "pilot_symbols ({}) must be at least users_per_cell ({})",
                self.pilot_symbols, self.users_per_cell
            )));
        }
        if self.pilot_symbols >= self.coherence_symbols {
            return Err(Error::config(format!(
                "pilot_symbols ({}) must be smaller than coherence_symbols ({})",
                self.pilot_symbols, self.coherence_symbols
            )));
        }
        if !(self.noise_power > 0.0) || !self.noise_power.is_finite() {
            return Err(Error::config("noise_power must be positive and finite"));
        }
        Ok(())
    }

    /// User/antenna ratio beta = K / N.
    pub fn ratio(&self) -> f64 {
        self.users_per_cell as f64 / self.antennas as f64
    }

    /// Data symbols per coherence interval, T_d = T_coh - tau.
    pub fn data_symbols(&self) -> usize {
        self.coherence_symbols - self.pilot_symbols
    }

    /// Pilot-overhead prefactor T_d / T_coh carried by every reported rate.
    pub fn overhead_factor(&self) -> f64 {
        self.data_symbols() as f64 / self.coherence_symbols as f64
    }
}

// ---------------------------------------------------------------------------
// ScenarioSpec
// ---------------------------------------------------------------------------

/// Attenuation scenario family.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioVariant {
    /// Ring-structured synthetic ranges: C^2 = exp(alpha * ((k - l) mod L)) * U
    /// with U ~ Uniform[1, 2]. alpha = 3, 0.25, -1 give the weak / moderate /
    /// strong interference profiles.
    Synthetic { alpha: f64 },
    /// Square deployment: one base station at the center, the rest equally
    /// spaced on a circle. Users are uniform over the square and attach to the
    /// nearest base station with probability `p`, otherwise uniformly to one of
    /// the others. C is the Euclidean distance, clamped below by
    /// `min_distance_m`.
    Geometric { p: f64, circle_radius_m: f64, area_side_m: f64, min_distance_m: f64 },
    /// Two cells with bounded-support squared attenuations: d^2 ~ Uniform on
    /// [x_min, x_max] inside the serving cell and on [y_min, y_max] across
    /// cells. No shadowing.
    TwoCellBounded { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
}

/// Scenario plus the shadowing level shared by the synthetic and geometric
/// families.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub variant: ScenarioVariant,
    /// Standard deviation of the log-normal amplitude shadowing, in dB.
    pub shadowing_std_db: f64,
}

pub const DEFAULT_SHADOWING_STD_DB: f64 = 8.0;
pub const DEFAULT_MIN_DISTANCE_M: f64 = 10.0;

impl ScenarioSpec {
    pub fn synthetic(alpha: f64) -> Self {
        ScenarioSpec {
            variant: ScenarioVariant::Synthetic { alpha },
            shadowing_std_db: DEFAULT_SHADOWING_STD_DB,
        }
    }

    pub fn two_cell(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        ScenarioSpec {
            variant: ScenarioVariant::TwoCellBounded { x_min, x_max, y_min, y_max },
            shadowing_std_db: 0.0,
        }
    }

    pub fn validate(&self, cells: usize) -> Result<()> {
        if !(self.shadowing_std_db >= 0.0) {
            return Err(Error::config("shadowing_std_db must be nonnegative"));
        }
        match self.variant {
            ScenarioVariant::Synthetic { alpha } => {
                if !alpha.is_finite() {
                    return Err(Error::config("synthetic alpha must be finite"));
                }
            }
            ScenarioVariant::Geometric { p, circle_radius_m, area_side_m, min_distance_m } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::config("geometric p must lie in [0, 1]"));
                }
                if !(circle_radius_m > 0.0) || !(area_side_m > 0.0) || !(min_distance_m > 0.0) {
                    return Err(Error::config("geometric lengths must be positive"));
                }
                if circle_radius_m >= area_side_m / 2.0 {
                    return Err(Error::config(
                        "circle_radius_m must be smaller than half the area side",
                    ));
                }
            }
            ScenarioVariant::TwoCellBounded { x_min, x_max, y_min, y_max } => {
                if cells != 2 {
                    return Err(Error::config("TwoCellBounded requires exactly 2 cells"));
                }
                if !(0.0 < x_min && x_min <= x_max) || !(0.0 < y_min && y_min <= y_max) {
                    return Err(Error::config(
                        "TwoCellBounded supports need 0 < min <= max on both axes",
                    ));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// AttenuationDraw
// ---------------------------------------------------------------------------

/// One realization of all attenuation coefficients d_{k,l,m} (receiving cell
/// k, transmitting cell l, user m) and the derived estimation-quality
/// coefficients b_{k,l,m}.
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationDraw {
    cells: usize,
    users: usize,
    /// Amplitude attenuations, index ((k * L) + l) * K + m.
    d: Vec<f64>,
    /// Estimation coefficients in [0, 1), same index layout.
    b: Vec<f64>,
}

impl AttenuationDraw {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn users(&self) -> usize {
        self.users
    }

    #[inline]
    fn idx(&self, k: usize, l: usize, m: usize) -> usize {
        (k * self.cells + l) * self.users + m
    }

    #[inline]
    pub fn d(&self, k: usize, l: usize, m: usize) -> f64 {
        self.d[self.idx(k, l, m)]
    }

    #[inline]
    pub fn d2(&self, k: usize, l: usize, m: usize) -> f64 {
        let v = self.d[self.idx(k, l, m)];
        v * v
    }

    #[inline]
    pub fn b(&self, k: usize, l: usize, m: usize) -> f64 {
        self.b[self.idx(k, l, m)]
    }

    pub fn d_flat(&self) -> &[f64] {
        &self.d
    }

    pub fn b_flat(&self) -> &[f64] {
        &self.b
    }
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Single-user sampling kernel shared with the asymptotic input builder.
pub(crate) fn sample_user_attenuation_for<R: Rng>(
    scenario: &ScenarioSpec,
    cells: usize,
    home_cell: usize,
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    sample_user_attenuation(scenario, cells, home_cell, rng, out)
}

/// Attenuations of one user homed in `home_cell` towards every base station,
/// written into `out[k]`. Consumes the RNG in a fixed order so draws are
/// reproducible.
fn sample_user_attenuation<R: Rng>(
    scenario: &ScenarioSpec,
    cells: usize,
    home_cell: usize,
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    match scenario.variant {
        ScenarioVariant::Synthetic { alpha } => {
            for (k, slot) in out.iter_mut().enumerate() {
                // C^2 = exp(alpha * ((k - l) mod L)) * U, d = Z / C^2.
                let modulo = (k + cells - home_cell) % cells;
                let u: f64 = 1.0 + rng.random::<f64>();
                let c2 = (alpha * modulo as f64).exp() * u;
                let z = lognormal_shadow(rng, scenario.shadowing_std_db);
                *slot = z / c2;
            }
        }
        ScenarioVariant::Geometric { p, circle_radius_m, area_side_m, min_distance_m } => {
            let bs = bs_positions(cells, circle_radius_m, area_side_m);
            let (ux, uy) = sample_user_position(p, area_side_m, home_cell, &bs, rng)?;
            for (k, slot) in out.iter_mut().enumerate() {
                let dist = ((ux - bs[k].0).powi(2) + (uy - bs[k].1).powi(2))
                    .sqrt()
                    .max(min_distance_m);
                let z = lognormal_shadow(rng, scenario.shadowing_std_db);
                *slot = z / (dist * dist);
            }
        }
        ScenarioVariant::TwoCellBounded { x_min, x_max, y_min, y_max } => {
            for (k, slot) in out.iter_mut().enumerate() {
                let (lo, hi) = if k == home_cell { (x_min, x_max) } else { (y_min, y_max) };
                let d2 = lo + (hi - lo) * rng.random::<f64>();
                *slot = d2.sqrt();
            }
        }
    }
    Ok(())
}

/// Base-station coordinates: index 0 at the area center, the rest equally
/// spaced on the circle.
pub fn bs_positions(cells: usize, circle_radius_m: f64, area_side_m: f64) -> Vec<(f64, f64)> {
    let c = area_side_m / 2.0;
    let mut pos = vec![(c, c)];
    let ring = cells.saturating_sub(1);
    for j in 0..ring {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / ring as f64;
        pos.push((c + circle_radius_m * theta.cos(), c + circle_radius_m * theta.sin()));
    }
    pos
}

/// Rejection-sample a position uniform over the square conditioned on the
/// association rule assigning the user to `home_cell`.
fn sample_user_position<R: Rng>(
    p: f64,
    area_side_m: f64,
    home_cell: usize,
    bs: &[(f64, f64)],
    rng: &mut R,
) -> Result<(f64, f64)> {
    let cells = bs.len();
    const MAX_REJECTS: u32 = 1_000_000;
    for _ in 0..MAX_REJECTS {
        let x = rng.random::<f64>() * area_side_m;
        let y = rng.random::<f64>() * area_side_m;
        let nearest = (0..cells)
            .min_by(|&a, &b| {
                let da = (x - bs[a].0).powi(2) + (y - bs[a].1).powi(2);
                let db = (x - bs[b].0).powi(2) + (y - bs[b].1).powi(2);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        let assigned = if cells == 1 {
            nearest
        } else {
            let u: f64 = rng.random();
            if u < p {
                nearest
            } else {
                // Uniform among the other cells; reuse the residual of u.
                let t = ((u - p) / (1.0 - p) * (cells - 1) as f64) as usize;
                let t = t.min(cells - 2);
                (0..cells).filter(|&c| c != nearest).nth(t).unwrap()
            }
        };
        if assigned == home_cell {
            return Ok((x, y));
        }
    }
    Err(Error::config(format!(
        "association rule never assigned a user to cell {home_cell}; \
         check p and the geometry"
    )))
}

/// Generate a full attenuation realization. Deterministic given
/// `(seed, config, scenario)`; realization index 0.
pub fn generate_attenuation(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    seed: u64,
) -> Result<AttenuationDraw> {
    generate_attenuation_indexed(config, scenario, seed, 0)
}

/// Realization `realization` of the substream family derived from `seed`.
/// Distinct indices use disjoint RNG substreams, so realizations can be
/// generated concurrently in any order.
pub fn generate_attenuation_indexed(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    seed: u64,
    realization: u64,
) -> Result<AttenuationDraw> {
    config.validate()?;
    scenario.validate(config.cells)?;
    let (cells, users) = (config.cells, config.users_per_cell);
    let mut rng = substream(seed, Domain::Attenuation, realization);
    let mut d = vec![0.0; cells * cells * users];
    let mut col = vec![0.0; cells];
    for l in 0..cells {
        for m in 0..users {
            sample_user_attenuation(scenario, cells, l, &mut rng, &mut col)?;
            for k in 0..cells {
                d[(k * cells + l) * users + m] = col[k];
            }
        }
    }
    let b = compute_b(&d, cells, users, config.pilot_symbols, config.noise_power)?;
    Ok(AttenuationDraw { cells, users, d, b })
}

/// Elementwise estimation coefficients
/// b_{k,l,m} = tau d^2_{k,l,m} / (sigma_W^2 + tau sum_{l'} d^2_{k,l',m}).
///
/// `d` has index layout ((k * cells) + l) * users + m. Zero attenuations are
/// tolerated (they yield b = 0); negative entries are a domain error.
pub fn compute_b(
    d: &[f64],
    cells: usize,
    users: usize,
    tau: usize,
    noise_power: f64,
) -> Result<Vec<f64>> {
    if d.len() != cells * cells * users {
        return Err(Error::config(format!(
            "attenuation tensor has length {}, expected {}",
            d.len(),
            cells * cells * users
        )));
    }
    if tau == 0 {
        return Err(Error::config("tau must be at least 1"));
    }
    if !(noise_power > 0.0) {
        return Err(Error::config("noise_power must be positive"));
    }
    if d.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::config("attenuation entries must be finite and nonnegative"));
    }
    let tau = tau as f64;
    let mut b = vec![0.0; d.len()];
    for k in 0..cells {
        for m in 0..users {
            let mut denom = noise_power;
            for l in 0..cells {
                let v = d[(k * cells + l) * users + m];
                denom += tau * v * v;
            }
            for l in 0..cells {
                let idx = (k * cells + l) * users + m;
                b[idx] = tau * d[idx] * d[idx] / denom;
            }
        }
    }
    Ok(b)
}

/// Residual-power noise floor for each receiving cell in `active_cells`:
/// sum over active transmitting cells of Tr((I - B_{k,l}) D^2_{k,l}) plus
/// `zeta * noise_power`. With all cells active and zeta = 1 this is T_k.
pub fn noise_floor(
    draw: &AttenuationDraw,
    active_cells: &[usize],
    noise_power: f64,
    zeta: f64,
) -> Result<Vec<f64>> {
    if active_cells.is_empty() {
        return Err(Error::config("active_cells must be nonempty"));
    }
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::config("zeta must lie in (0, 1]"));
    }
    for &k in active_cells {
        if k >= draw.cells() {
            return Err(Error::config(format!("cell index {k} out of range")));
        }
    }
    Ok(active_cells
        .iter()
        .map(|&k| {
            let mut acc = zeta * noise_power;
            for &l in active_cells {
                for m in 0..draw.users() {
                    acc += (1.0 - draw.b(k, l, m)) * draw.d2(k, l, m);
                }
            }
            acc
        })
        .collect())
}
