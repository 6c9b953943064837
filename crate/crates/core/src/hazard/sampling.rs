use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::{HazardConfig, HazardError, LoadPerturbation};
use crate::hazard::FragilityCurve;
use crate::network::{Network, PoleOption};

/// `[line][pole option][step]`, 1 = damaged.
pub type Zeta = Vec<Vec<Vec<u8>>>;
/// `[line][pole option]` dollars.
pub type RepairCosts = Vec<Vec<f64>>;
/// `[bus][step]`.
pub type LoadProfile = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq)]
pub struct HazardProfile {
    pub horizon_steps: usize,
    pub dt_hours: f64,
    /// Wind speed per step, m/s.
    pub wind: Vec<f64>,
}

/// Independent random streams of one scenario.
#[derive(Clone, Copy, Debug)]
pub enum Stream {
    Wind = 0,
    Damage = 1,
    Load = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of `stream` for the scenario at position `scenario`.
pub fn child_seed(master: u64, scenario: usize, stream: Stream) -> u64 {
    let tag = (scenario as u64) << 2 | stream as u64;
    splitmix64(master ^ splitmix64(tag))
}

fn envelope(t: usize, steps: usize, peak_step: usize) -> f64 {
    if steps == 1 {
        return 1.0;
    }
    if t <= peak_step {
        if peak_step == 0 {
            1.0
        } else {
            t as f64 / peak_step as f64
        }
    } else {
        (steps - 1 - t) as f64 / (steps - 1 - peak_step) as f64
    }
}

pub fn sample_wind(seed: u64, config: &HazardConfig) -> Result<HazardProfile, HazardError> {
    if config.horizon_steps == 0 {
        return Err(HazardError::NonPositiveHorizon);
    }
    let steps = config.horizon_steps;
    let multiplier = if config.peak_sigma > 0.0 {
        let dist = LogNormal::new(0.0, config.peak_sigma)
            .map_err(|e| HazardError::InvalidConfig(e.to_string()))?;
        dist.sample(&mut ChaCha8Rng::seed_from_u64(seed))
    } else {
        1.0
    };
    let peak = (config.peak_wind_ms * multiplier).clamp(config.peak_min_ms, config.peak_max_ms);
    let peak_step = (config.peak_position * (steps - 1) as f64).round() as usize;
    let base = config.base_wind_ms;
    let wind = (0..steps)
        .map(|t| base + (peak - base) * envelope(t, steps, peak_step))
        .collect();
    Ok(HazardProfile {
        horizon_steps: steps,
        dt_hours: config.dt_hours,
        wind,
    })
}

pub(super) fn resolve_curves(net: &Network) -> Result<Vec<&FragilityCurve>, HazardError> {
    net.pole_catalog
        .iter()
        .enumerate()
        .map(|(option, opt)| {
            net.fragility(&opt.fragility)
                .ok_or_else(|| HazardError::MissingFragility {
                    option,
                    id: opt.fragility.clone(),
                })
        })
        .collect()
}

/// Draws line damage for every pole option from one uniform number per
/// line and step, shared by all options. A line is damaged under option `k`
/// from the first step where its draw falls below the option's failure
/// probability, and stays damaged for the rest of the window.
pub fn sample_damage(
    profile: &HazardProfile,
    net: &Network,
    seed: u64,
) -> Result<Zeta, HazardError> {
    let curves = resolve_curves(net)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = profile.wind.len();
    let probs: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| profile.wind.iter().map(|&w| c.probability(w)).collect())
        .collect();
    let mut zeta = Vec::with_capacity(net.num_lines());
    for _ in 0..net.num_lines() {
        let draws: Vec<f64> = (0..steps).map(|_| rng.random::<f64>()).collect();
        let per_option = probs
            .iter()
            .map(|p| {
                let mut damaged = 0u8;
                draws
                    .iter()
                    .zip(p)
                    .map(|(u, p)| {
                        if u < p {
                            damaged = 1;
                        }
                        damaged
                    })
                    .collect()
            })
            .collect();
        zeta.push(per_option);
    }
    Ok(zeta)
}

/// Repair bill per line and option: the option's unit cost if the line is
/// damaged at the end of the window, else zero.
pub fn sample_repair_costs(zeta: &Zeta, catalog: &[PoleOption]) -> RepairCosts {
    zeta.iter()
        .map(|line| {
            line.iter()
                .zip(catalog)
                .map(|(steps, opt)| match steps.last() {
                    Some(1) => opt.repair_unit_cost,
                    _ => 0.0,
                })
                .collect()
        })
        .collect()
}

/// Scales base loads by multipliers uniform on `[1 - range, 1 + range]`.
/// Active and reactive demand share the multiplier.
pub fn perturb_loads(
    net: &Network,
    range: f64,
    steps: usize,
    mode: LoadPerturbation,
    seed: u64,
) -> Result<(LoadProfile, LoadProfile), HazardError> {
    if !(0.0..1.0).contains(&range) {
        return Err(HazardError::PerturbRange(range));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        if range == 0.0 {
            1.0
        } else {
            rng.random_range(1.0 - range..=1.0 + range)
        }
    };
    let mut p = Vec::with_capacity(net.num_buses());
    let mut q = Vec::with_capacity(net.num_buses());
    for bus in &net.buses {
        let event = draw();
        let mut prow = Vec::with_capacity(steps);
        let mut qrow = Vec::with_capacity(steps);
        for t in 0..steps {
            let m = match mode {
                LoadPerturbation::PerStep if t == 0 => event,
                LoadPerturbation::PerStep => draw(),
                LoadPerturbation::PerEvent => event,
            };
            prow.push(bus.base_p_load.at(t) * m);
            qrow.push(bus.base_q_load.at(t) * m);
        }
        p.push(prow);
        q.push(qrow);
    }
    Ok((p, q))
}
