//! Bitline charge sharing, sense amplification and process variation.
//!
//! Voltages are fractions of Vdd and capacitances are relative to a nominal
//! cell. A cell contributes `c = weight * efficiency * capacitance` to a
//! capacitive divider whose other leg is the bitline (`ratio * 1.0`), and
//! the sense amplifier resolves `V_BL - 0.5` against a reliability margin.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Shape of the capacitance / efficiency variation draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VariationKind {
    /// `1 ± pct` uniformly.
    #[default]
    Uniform,
    /// Normal with sigma `pct / 3`, truncated to `1 ± pct`.
    Gaussian,
}

/// Delay-dependent charge-sharing advantage of the first activated row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstRowWeight {
    /// `t1 + t2` below which the weight is exactly one.
    pub onset_ns: f64,
    /// Weight gained per nanosecond above the onset.
    pub slope_per_ns: f64,
    pub max: f64,
}

impl FirstRowWeight {
    pub fn at(&self, t_sum: f64) -> f64 {
        (1.0 + self.slope_per_ns * (t_sum - self.onset_ns).max(0.0)).min(self.max)
    }
}

/// Probability that a newly raised wordline fails to connect a cell when the
/// APA sequence is very short.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Underdrive {
    /// `t1 + t2` at or above which no cell is lost.
    pub below_ns: f64,
    /// Width of the quadratic ramp below `below_ns`.
    pub ramp_ns: f64,
    /// Probability reached at `below_ns - ramp_ns` and under.
    pub max_prob: f64,
}

impl Underdrive {
    pub fn prob(&self, t_sum: f64) -> f64 {
        if self.ramp_ns <= 0.0 {
            return if t_sum < self.below_ns { self.max_prob } else { 0.0 };
        }
        let x = ((self.below_ns - t_sum) / self.ramp_ns).clamp(0.0, 1.0);
        self.max_prob * x * x
    }
}

/// Fixed sense-amplifier bias of some chip families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenseBias {
    /// Bit the amplifier leans toward.
    pub toward: bool,
    /// Offset magnitude in Vdd units.
    pub magnitude: f64,
}

impl SenseBias {
    #[inline]
    fn signed(&self) -> f64 {
        if self.toward {
            self.magnitude
        } else {
            -self.magnitude
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalogParams {
    pub bitline_ratio: f64,
    pub sensing_margin: f64,
    /// Per-sense offset noise, redrawn on every sense.
    pub sense_offset_sigma: f64,
    /// Static sense-amplifier mismatch sigma per unit of fractional variation.
    pub offset_variation_gain: f64,
    pub variation_pct: f64,
    pub variation_kind: VariationKind,
    /// Spread of neutral-row charge around Vdd/2, per unit of variation.
    pub frac_spread: f64,
    pub first_row_weight: FirstRowWeight,
    pub underdrive: Underdrive,
    /// Per-field probability that a second predecoder value fails to latch
    /// when `t2` is under `latch_setup_ns`.
    pub latch_fail_prob: f64,
    pub latch_setup_ns: f64,
    pub temperature_efficiency_slope: f64,
    pub vpp_efficiency_slope: f64,
    /// Restore strength; write-back fidelity is `min(1, efficiency * gain)`.
    pub restore_gain: f64,
    /// Weak-cell fraction that droops while many rows restore ones.
    pub ones_restore_droop: f64,
    pub mfr_m_bias: Option<SenseBias>,
}

impl Default for AnalogParams {
    fn default() -> Self {
        Self {
            bitline_ratio: 6.0,
            sensing_margin: 0.03,
            sense_offset_sigma: 0.005,
            offset_variation_gain: 0.04,
            variation_pct: 10.0,
            variation_kind: VariationKind::Uniform,
            frac_spread: 1.25,
            first_row_weight: FirstRowWeight {
                onset_ns: 4.5,
                slope_per_ns: 4.5,
                max: 16.0,
            },
            underdrive: Underdrive {
                below_ns: 6.0,
                ramp_ns: 3.0,
                max_prob: 0.2,
            },
            latch_fail_prob: 0.01,
            latch_setup_ns: 3.0,
            temperature_efficiency_slope: 0.0005,
            vpp_efficiency_slope: 0.025,
            restore_gain: 2.0,
            ones_restore_droop: 0.008,
            mfr_m_bias: None,
        }
    }
}

impl AnalogParams {
    /// Noise-free, variation-free, equal-weight parameters.
    pub fn ideal() -> Self {
        Self {
            sense_offset_sigma: 0.0,
            offset_variation_gain: 0.0,
            variation_pct: 0.0,
            frac_spread: 0.0,
            first_row_weight: FirstRowWeight {
                onset_ns: 3.0,
                slope_per_ns: 0.0,
                max: 1.0,
            },
            underdrive: Underdrive {
                below_ns: 6.0,
                ramp_ns: 3.0,
                max_prob: 0.0,
            },
            latch_fail_prob: 0.0,
            ones_restore_droop: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProfile(m.to_string()));
        if self.bitline_ratio.is_nan() || self.bitline_ratio <= 0.0 {
            return bad("bitline_ratio must be positive");
        }
        if !(self.sensing_margin > 0.0 && self.sensing_margin < 0.5) {
            return bad("sensing_margin must lie in (0, 0.5)");
        }
        if self.sense_offset_sigma < 0.0 || self.offset_variation_gain < 0.0 {
            return bad("offset sigma terms must be non-negative");
        }
        if !(0.0..100.0).contains(&self.variation_pct) {
            return bad("variation_pct must lie in [0, 100)");
        }
        for (name, p) in [
            ("underdrive.max_prob", self.underdrive.max_prob),
            ("latch_fail_prob", self.latch_fail_prob),
            ("ones_restore_droop", self.ones_restore_droop),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProfile(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.first_row_weight.max < 1.0 || self.first_row_weight.slope_per_ns < 0.0 {
            return bad("first_row_weight must be >= 1 and non-decreasing");
        }
        if self.frac_spread < 0.0 || self.restore_gain <= 0.0 {
            return bad("frac_spread must be >= 0 and restore_gain > 0");
        }
        if let Some(b) = self.mfr_m_bias {
            if !(0.0..0.5).contains(&b.magnitude) {
                return bad("mfr_m_bias.magnitude must lie in [0, 0.5)");
            }
        }
        Ok(())
    }

    #[inline]
    pub fn variation_fraction(&self) -> f64 {
        self.variation_pct / 100.0
    }

    /// Sigma of the fixed per-column sense-amplifier mismatch.
    #[inline]
    pub fn mismatch_sigma(&self) -> f64 {
        self.offset_variation_gain * self.variation_fraction()
    }

    /// Sigma of a fresh column's total offset (mismatch plus noise).
    #[inline]
    pub fn offset_sigma(&self) -> f64 {
        self.sense_offset_sigma.hypot(self.mismatch_sigma())
    }

    /// Charge of a neutral cell with spread draw `u ∈ [0,1)`.
    #[inline]
    pub fn neutral_charge(&self, u: f64) -> f64 {
        (0.5 + self.frac_spread * self.variation_fraction() * (2.0 * u - 1.0)).clamp(0.0, 1.0)
    }

    /// Fraction of the gap to the rail closed by a restore or write.
    #[inline]
    pub fn restore_fidelity(&self, efficiency: f64) -> f64 {
        (efficiency * self.restore_gain).min(1.0)
    }
}

/// One cell taking part in charge sharing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareCell {
    pub charge: f64,
    pub capacitance: f64,
    pub efficiency: f64,
    pub weight: f64,
}

impl ShareCell {
    pub fn ideal(charge: f64) -> Self {
        Self {
            charge,
            capacitance: 1.0,
            efficiency: 1.0,
            weight: 1.0,
        }
    }

    #[inline]
    fn effective(&self) -> f64 {
        self.weight * self.efficiency * self.capacitance
    }
}

/// Running divider sums; lets callers avoid materializing cell lists.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Divider {
    pub sum_c: f64,
    pub sum_cq: f64,
}

impl Divider {
    #[inline]
    pub fn add(&mut self, c: f64, q: f64) {
        self.sum_c += c;
        self.sum_cq += c * q;
    }

    /// Perturbation of a bitline that starts at `v0` with capacitance `c_b`.
    #[inline]
    pub fn perturbation(&self, c_b: f64, v0: f64) -> f64 {
        (c_b * v0 + self.sum_cq) / (c_b + self.sum_c) - 0.5
    }
}

/// Bitline perturbation after the given cells share charge with a bitline
/// precharged to Vdd/2.
pub fn charge_share(cells: &[ShareCell], params: &AnalogParams) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::EmptyCellList);
    }
    let mut d = Divider::default();
    for cell in cells {
        d.add(cell.effective(), cell.charge);
    }
    Ok(d.perturbation(params.bitline_ratio, 0.5))
}

/// Result of sensing one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseOutcome {
    pub value: bool,
    pub reliable: bool,
}

/// Resolve a perturbation against a known offset (noise already drawn).
pub fn sense_with_offset(perturbation: f64, offset: f64, params: &AnalogParams) -> SenseOutcome {
    let bias = params.mfr_m_bias.map_or(0.0, |b| b.signed());
    let adjusted = perturbation - offset + bias;
    let value = if adjusted == 0.0 {
        params.mfr_m_bias.is_some_and(|b| b.toward)
    } else {
        adjusted > 0.0
    };
    SenseOutcome {
        value,
        reliable: adjusted.abs() >= params.sensing_margin,
    }
}

/// Resolve a perturbation with a fresh offset draw.
pub fn sense<R: Rng + ?Sized>(perturbation: f64, params: &AnalogParams, rng: &mut R) -> SenseOutcome {
    let offset = draw_offset(params.offset_sigma(), rng);
    sense_with_offset(perturbation, offset, params)
}

#[inline]
pub(crate) fn draw_offset<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

/// Per-cell variation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellVariation {
    pub capacitance: f64,
    pub efficiency: f64,
}

impl CellVariation {
    pub const NOMINAL: Self = Self {
        capacitance: 1.0,
        efficiency: 1.0,
    };
}

/// Map two uniforms in `[0,1)` onto a variation sample.
pub fn variation_from_uniforms(pct: f64, kind: VariationKind, u1: f64, u2: f64) -> CellVariation {
    let p = pct / 100.0;
    if p == 0.0 {
        return CellVariation::NOMINAL;
    }
    let spread = |u: f64| match kind {
        VariationKind::Uniform => p * (2.0 * u - 1.0),
        VariationKind::Gaussian => {
            // Inverse-CDF via the logistic approximation keeps this a pure map.
            let z = (u.clamp(1e-12, 1.0 - 1e-12) / (1.0 - u.clamp(1e-12, 1.0 - 1e-12))).ln() / 1.702;
            (z * p / 3.0).clamp(-p, p)
        }
    };
    CellVariation {
        capacitance: (1.0 + spread(u1)).max(1e-3),
        efficiency: (1.0 + spread(u2)).clamp(1e-3, 1.0),
    }
}

/// Draw one cell's variation.
pub fn sample_variation<R: Rng + ?Sized>(params: &AnalogParams, rng: &mut R) -> CellVariation {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    variation_from_uniforms(params.variation_pct, params.variation_kind, u1, u2)
}

/// Operating point of the chip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub temperature_c: f64,
    pub vpp: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            temperature_c: 50.0,
            vpp: 2.5,
        }
    }
}

pub const TEMPERATURE_RANGE: (f64, f64) = (50.0, 90.0);
pub const VPP_RANGE: (f64, f64) = (2.1, 2.5);

impl Environment {
    pub fn validate(&self) -> Result<()> {
        let check = |knob, value: f64, (min, max): (f64, f64)| {
            if (min..=max).contains(&value) {
                Ok(())
            } else {
                Err(Error::EnvironmentOutOfRange { knob, value, min, max })
            }
        };
        check("temperature_c", self.temperature_c, TEMPERATURE_RANGE)?;
        check("vpp", self.vpp, VPP_RANGE)
    }
}

/// Analog parameters resolved for one environment and one APA timing pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveAnalog {
    pub params: AnalogParams,
    /// Multiplier on every cell's transfer efficiency.
    pub efficiency_scale: f64,
    pub first_row_weight: f64,
    pub underdrive_prob: f64,
    pub latch_fail_prob: f64,
}

impl EffectiveAnalog {
    #[inline]
    pub fn efficiency(&self, raw: f64) -> f64 {
        (raw * self.efficiency_scale).clamp(1e-3, 1.0)
    }
}

/// Fold the temperature/Vpp knobs and APA timings into effective parameters.
pub fn apply_environment(params: &AnalogParams, env: Environment, t1: f64, t2: f64) -> Result<EffectiveAnalog> {
    env.validate()?;
    let t_sum = t1 + t2;
    let efficiency_scale = (1.0 + params.temperature_efficiency_slope * (env.temperature_c - TEMPERATURE_RANGE.0))
        * (1.0 - params.vpp_efficiency_slope * (VPP_RANGE.1 - env.vpp));
    Ok(EffectiveAnalog {
        params: params.clone(),
        efficiency_scale,
        first_row_weight: params.first_row_weight.at(t_sum),
        underdrive_prob: params.underdrive.prob(t_sum),
        latch_fail_prob: if t2 < params.latch_setup_ns {
            params.latch_fail_prob
        } else {
            0.0
        },
    })
}

/// A single bitline column for Monte-Carlo study: each entry is a stored bit,
/// or `None` for a neutral cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnModel {
    pub cells: Vec<Option<bool>>,
    pub expected: bool,
}

impl ColumnModel {
    /// Operands replicated `⌊n/X⌋` times with `n mod X` neutral cells.
    pub fn replicated_majority(operands: &[bool], n: usize) -> Result<Self> {
        let x = operands.len();
        if x == 0 || x.is_multiple_of(2) || n < x {
            return Err(Error::InvalidReplication(format!("X={x}, N={n}")));
        }
        let copies = n / x;
        let mut cells: Vec<Option<bool>> = Vec::with_capacity(n);
        for _ in 0..copies {
            cells.extend(operands.iter().map(|&b| Some(b)));
        }
        cells.resize(n, None);
        let ones = operands.iter().filter(|&&b| b).count();
        Ok(Self {
            cells,
            expected: 2 * ones > x,
        })
    }
}

/// Monte-Carlo summary over independent variation draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub trials: usize,
    /// Fraction of trials sensed correctly and reliably.
    pub success: f64,
    pub mean_abs_perturbation: f64,
}

/// Each trial redraws every cell's variation, neutral charge and the sense
/// offset, then checks the sensed bit. Trials run in parallel on sub-seeds
/// derived from `seed`, so the result does not depend on thread count.
pub fn monte_carlo_success(model: &ColumnModel, params: &AnalogParams, trials: usize, seed: u64) -> McSummary {
    let trials = trials.max(1);
    let (ok, abs_sum) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng_for(seed, &[t as u64]);
            let mut d = Divider::default();
            for cell in &model.cells {
                let v = sample_variation(params, &mut rng);
                let q = match cell {
                    Some(true) => 1.0,
                    Some(false) => 0.0,
                    None => params.neutral_charge(rng.random()),
                };
                d.add(v.capacitance * v.efficiency, q);
            }
            let p = d.perturbation(params.bitline_ratio, 0.5);
            let out = sense(p, params, &mut rng);
            let good = out.value == model.expected && out.reliable;
            (good as usize, p.abs())
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    McSummary {
        trials,
        success: ok as f64 / trials as f64,
        mean_abs_perturbation: abs_sum / trials as f64,
    }
}
