//! Command-level bank state machine.
//!
//! Commands are applied in order; each carries the delay until the next one,
//! so `t1` and `t2` of an APA fall out of the issue times. A PRE is held
//! pending until the next command shows how long the precharge actually
//! ran, and only then is the outcome decided with `classify_timing`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analog::{
    apply_environment, draw_offset, sense_with_offset, AnalogParams, Divider, EffectiveAnalog, Environment,
};
use crate::cells::{DataPattern, SubarrayState};
use crate::decoder::{join_address, split_address, LatchState, RowDecoder};
use crate::error::{Error, Result};
use crate::profile::{CrossSubarrayPolicy, DeviceProfile};
use crate::seed::derive;
use crate::timing::{classify_timing, on_grid, ActivationMode, SenseMode, TimingRegime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CommandKind {
    Act,
    Pre,
    Wr,
    Rd,
    Ref,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            Self::Act => "ACT",
            Self::Pre => "PRE",
            Self::Wr => "WR",
            Self::Rd => "RD",
            Self::Ref => "REF",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub kind: CommandKind,
    /// Bank row address (ACT only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<u32>,
    /// One bit per column (WR only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_data: Option<Vec<bool>>,
    /// Nanoseconds until the next command.
    pub delay_after: f64,
}

impl Command {
    pub fn act(row: u32, delay_after: f64) -> Self {
        Self {
            kind: CommandKind::Act,
            row: Some(row),
            column_data: None,
            delay_after,
        }
    }

    pub fn pre(delay_after: f64) -> Self {
        Self::bare(CommandKind::Pre, delay_after)
    }

    pub fn rd(delay_after: f64) -> Self {
        Self::bare(CommandKind::Rd, delay_after)
    }

    pub fn refresh(delay_after: f64) -> Self {
        Self::bare(CommandKind::Ref, delay_after)
    }

    pub fn wr(data: Vec<bool>, delay_after: f64) -> Self {
        Self {
            kind: CommandKind::Wr,
            row: None,
            column_data: Some(data),
            delay_after,
        }
    }

    fn bare(kind: CommandKind, delay_after: f64) -> Self {
        Self {
            kind,
            row: None,
            column_data: None,
            delay_after,
        }
    }
}

/// Ordered, timing-annotated commands.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommandSequence {
    pub commands: Vec<Command>,
}

impl CommandSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, cmd: Command) -> &mut Self {
        self.commands.push(cmd);
        self
    }

    /// ACT(first) –t1– PRE –t2– ACT(second), then `hold` before the next command.
    pub fn apa(first: u32, second: u32, t1: f64, t2: f64, hold: f64) -> Self {
        Self {
            commands: vec![Command::act(first, t1), Command::pre(t2), Command::act(second, hold)],
        }
    }

    /// ACT, WR, PRE with manufacturer timings.
    pub fn nominal_write(row: u32, data: Vec<bool>, profile: &DeviceProfile) -> Self {
        let t = &profile.timing;
        Self {
            commands: vec![
                Command::act(row, t.t_ras),
                Command::wr(data, t.granularity),
                Command::pre(t.t_rp),
            ],
        }
    }

    /// ACT, RD, PRE with manufacturer timings.
    pub fn nominal_read(row: u32, profile: &DeviceProfile) -> Self {
        let t = &profile.timing;
        Self {
            commands: vec![
                Command::act(row, t.t_ras),
                Command::rd(t.granularity),
                Command::pre(t.t_rp),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Precharged,
    /// Wordlines raised, amplifier not yet resolved.
    Sensing,
    /// Bitlines driven to the rails.
    Activated,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Self::Precharged => "Precharged",
            Self::Sensing => "Sensing",
            Self::Activated => "Activated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingPrecharge {
    pub issued_at: f64,
    /// ACT-to-PRE delay of the precharge.
    pub t1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankState {
    pub phase: Phase,
    pub open_subarray: Option<u32>,
    pub latch_state: Option<LatchState>,
    /// Local rows of the open subarray, ascending.
    pub activated_rows: Vec<u32>,
    pub first_row: Option<u32>,
    /// Bitline voltage per column (fraction of Vdd).
    pub bitlines: Vec<f64>,
    pub sense_latched: Vec<bool>,
    /// Whether each column's last sense cleared the margin.
    pub reliable: Vec<bool>,
    pub elapsed: f64,
    pub last_act_at: f64,
    pub pending_precharge: Option<PendingPrecharge>,
    /// Cells that failed to connect in the current activation.
    pub disconnected: BTreeMap<u32, Vec<bool>>,
}

impl BankState {
    fn precharged(columns: usize) -> Self {
        Self {
            phase: Phase::Precharged,
            open_subarray: None,
            latch_state: None,
            activated_rows: Vec::new(),
            first_row: None,
            bitlines: vec![0.5; columns],
            sense_latched: vec![false; columns],
            reliable: vec![true; columns],
            elapsed: 0.0,
            last_act_at: 0.0,
            pending_precharge: None,
            disconnected: BTreeMap::new(),
        }
    }

    fn connected(&self, row: u32, col: usize) -> bool {
        self.disconnected.get(&row).is_none_or(|m| !m[col])
    }
}

/// What one command did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub index: usize,
    pub at_ns: f64,
    pub kind: CommandKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<TimingRegime>,
    /// Bank rows open after the command.
    pub activated: Vec<u32>,
    /// Columns sensed as one / as unreliable, when the command sensed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensed_ones: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unreliable: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub read: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub state: BankState,
    pub events: Vec<TraceEvent>,
}

impl TraceResult {
    /// Data returned by each RD, in order.
    pub fn reads(&self) -> Vec<&Vec<bool>> {
        self.events.iter().filter_map(|e| e.read.as_ref()).collect()
    }
}

/// Fraction of the way to the rail the amplifier gets in `t1`.
fn drive_fraction(t1: f64, profile: &DeviceProfile) -> f64 {
    (t1 / profile.timing.t_ras).clamp(0.0, 1.0)
}

/// Charge left in a restored one-cell that drooped.
const DROOPED_CHARGE: f64 = 0.55;

/// One bank: state machine, lazily created subarrays and a noise stream.
#[derive(Debug, Clone)]
pub struct Bank {
    profile: DeviceProfile,
    analog: AnalogParams,
    decoder: RowDecoder,
    env: Environment,
    nominal: EffectiveAnalog,
    pattern: DataPattern,
    data_seed: u64,
    variation_seed: u64,
    subarrays: BTreeMap<u32, SubarrayState>,
    state: BankState,
    rng: ChaCha8Rng,
}

impl Bank {
    /// Random data, variation and noise all derived from `seed`.
    pub fn new(profile: DeviceProfile, seed: u64) -> Result<Self> {
        Self::with_seeds(
            profile,
            DataPattern::Random,
            derive(seed, &[1]),
            derive(seed, &[2]),
            derive(seed, &[3]),
        )
    }

    pub fn with_seeds(
        profile: DeviceProfile,
        pattern: DataPattern,
        data_seed: u64,
        variation_seed: u64,
        noise_seed: u64,
    ) -> Result<Self> {
        profile.validate()?;
        let analog = profile.analog.clone();
        let env = Environment::default();
        let nominal = apply_environment(&analog, env, profile.timing.t_ras, profile.timing.t_rp)?;
        Ok(Self {
            decoder: RowDecoder::from_profile(&profile),
            state: BankState::precharged(profile.columns),
            analog,
            env,
            nominal,
            pattern,
            data_seed,
            variation_seed,
            subarrays: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(noise_seed),
            profile,
        })
    }

    pub fn profile(&self) -> &DeviceProfile {
        &self.profile
    }

    pub fn analog(&self) -> &AnalogParams {
        &self.analog
    }

    pub fn decoder(&self) -> &RowDecoder {
        &self.decoder
    }

    pub fn state(&self) -> &BankState {
        &self.state
    }

    pub fn environment(&self) -> Environment {
        self.env
    }

    pub fn set_environment(&mut self, env: Environment) -> Result<()> {
        self.nominal = apply_environment(&self.analog, env, self.profile.timing.t_ras, self.profile.timing.t_rp)?;
        self.env = env;
        Ok(())
    }

    /// Override analog parameters (variation included) and drop cell state.
    pub fn set_analog(&mut self, analog: AnalogParams) -> Result<()> {
        analog.validate()?;
        self.nominal = apply_environment(&analog, self.env, self.profile.timing.t_ras, self.profile.timing.t_rp)?;
        self.analog = analog;
        self.subarrays.clear();
        Ok(())
    }

    /// Reseed the sense-noise stream.
    pub fn reseed_noise(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Reload every subarray with a pattern and precharge the bank. Cell
    /// variation is kept.
    pub fn refill(&mut self, pattern: DataPattern, data_seed: u64) {
        self.pattern = pattern.clone();
        self.data_seed = data_seed;
        for s in self.subarrays.values_mut() {
            s.refill(pattern.clone(), data_seed);
        }
        let elapsed = self.state.elapsed;
        self.state = BankState::precharged(self.profile.columns);
        self.state.elapsed = elapsed;
    }

    pub fn subarray(&self, index: u32) -> Option<&SubarrayState> {
        self.subarrays.get(&index)
    }

    pub fn subarray_mut(&mut self, index: u32) -> &mut SubarrayState {
        let (profile, analog, pattern, ds, vs) = (
            &self.profile,
            &self.analog,
            &self.pattern,
            self.data_seed,
            self.variation_seed,
        );
        self.subarrays.entry(index).or_insert_with(|| {
            SubarrayState::with_analog(profile, analog, index, pattern.clone(), ds, vs)
                .expect("pattern validated at bank creation")
        })
    }

    /// Stored logic values of a row, bypassing the sense amplifier.
    pub fn peek_row(&mut self, row: u32) -> Result<Vec<bool>> {
        let (sa, local) = split_address(row, &self.profile)?;
        Ok(self.subarray_mut(sa).row_bits(local))
    }

    pub fn peek_charges(&mut self, row: u32) -> Result<Vec<f64>> {
        let (sa, local) = split_address(row, &self.profile)?;
        Ok(self.subarray_mut(sa).row_charges(local))
    }

    /// Host-side preload of a row, bypassing commands.
    pub fn load_row(&mut self, row: u32, bits: &[bool]) -> Result<()> {
        let (sa, local) = split_address(row, &self.profile)?;
        self.subarray_mut(sa).set_row_bits(local, bits)
    }

    /// Apply one command and report what happened.
    pub fn apply_command(&mut self, cmd: &Command) -> Result<TraceEvent> {
        if !on_grid(cmd.delay_after, &self.profile) {
            return Err(Error::BadDelay(cmd.delay_after));
        }
        let now = self.state.elapsed;
        let mut event = TraceEvent {
            index: 0,
            at_ns: now,
            kind: cmd.kind,
            row: cmd.row,
            regime: None,
            activated: Vec::new(),
            sensed_ones: None,
            unreliable: None,
            read: None,
        };
        match cmd.kind {
            CommandKind::Act => {
                let row = cmd.row.ok_or(Error::IllegalCommand {
                    command: "ACT without row",
                    phase: self.state.phase.name(),
                })?;
                event.regime = self.activate(row, now)?;
            }
            CommandKind::Pre => self.precharge(now),
            CommandKind::Rd => {
                self.require_open(CommandKind::Rd)?;
                event.read = Some(self.state.bitlines.iter().map(|&v| v > 0.5).collect());
            }
            CommandKind::Wr => {
                let data = cmd.column_data.as_ref().ok_or(Error::IllegalCommand {
                    command: "WR without data",
                    phase: self.state.phase.name(),
                })?;
                if data.len() != self.profile.columns {
                    return Err(Error::WidthMismatch {
                        expected: self.profile.columns,
                        got: data.len(),
                    });
                }
                self.require_open(CommandKind::Wr)?;
                self.overdrive(data);
            }
            CommandKind::Ref => {
                if self.state.pending_precharge.is_some() {
                    self.finish_precharge();
                }
                if self.state.phase != Phase::Precharged {
                    return Err(Error::IllegalCommand {
                        command: "REF",
                        phase: self.state.phase.name(),
                    });
                }
            }
        }
        if matches!(cmd.kind, CommandKind::Act | CommandKind::Rd | CommandKind::Wr)
            && self.state.phase == Phase::Activated
        {
            event.sensed_ones = Some(self.state.bitlines.iter().filter(|&&v| v > 0.5).count());
            event.unreliable = Some(self.state.reliable.iter().filter(|&&r| !r).count());
        }
        event.activated = self.open_bank_rows();
        self.state.elapsed = now + cmd.delay_after;
        Ok(event)
    }

    /// Run a whole sequence, stopping at the first error.
    pub fn execute_sequence(&mut self, seq: &CommandSequence) -> Result<TraceResult> {
        let mut events = Vec::with_capacity(seq.commands.len());
        for (i, cmd) in seq.commands.iter().enumerate() {
            let mut e = self.apply_command(cmd)?;
            e.index = i;
            events.push(e);
        }
        Ok(TraceResult {
            state: self.state.clone(),
            events,
        })
    }

    /// Bank addresses of the rows currently open.
    pub fn open_bank_rows(&self) -> Vec<u32> {
        match self.state.open_subarray {
            Some(sa) => self
                .state
                .activated_rows
                .iter()
                .map(|&l| join_address(sa, l, &self.profile))
                .collect(),
            None => Vec::new(),
        }
    }

    fn require_open(&mut self, kind: CommandKind) -> Result<()> {
        if self.state.pending_precharge.is_some() {
            self.finish_precharge();
        }
        match self.state.phase {
            Phase::Precharged => Err(Error::IllegalCommand {
                command: kind.name(),
                phase: Phase::Precharged.name(),
            }),
            Phase::Sensing => {
                self.resolve_sense();
                Ok(())
            }
            Phase::Activated => Ok(()),
        }
    }

    fn activate(&mut self, row: u32, now: f64) -> Result<Option<TimingRegime>> {
        let (sa, local) = split_address(row, &self.profile)?;
        let Some(pending) = self.state.pending_precharge else {
            if self.state.phase != Phase::Precharged {
                return Err(Error::IllegalCommand {
                    command: "ACT",
                    phase: self.state.phase.name(),
                });
            }
            self.open(sa, local, now);
            return Ok(None);
        };
        let t1 = pending.t1;
        let t2 = now - pending.issued_at;
        let regime = classify_timing(t1, t2, &self.profile);
        let open_sa = self
            .state
            .open_subarray
            .expect("pending precharge implies an open subarray");
        if regime.activation_mode != ActivationMode::Nominal && open_sa != sa {
            if self.profile.cross_subarray == CrossSubarrayPolicy::Reject {
                let first = self
                    .state
                    .first_row
                    .map_or(0, |l| join_address(open_sa, l, &self.profile));
                return Err(Error::CrossSubarray { first, second: row });
            }
            self.finish_precharge();
            self.open(sa, local, now);
            return Ok(Some(regime));
        }
        self.state.pending_precharge = None;
        match regime.activation_mode {
            ActivationMode::Nominal => {
                self.finish_precharge_with(t1);
                self.open(sa, local, now);
            }
            ActivationMode::ConsecutiveTwoRow => self.consecutive(local, t1, t2, now),
            ActivationMode::SimultaneousUnion => self.union(local, t1, t2, regime.sense_mode)?,
        }
        Ok(Some(regime))
    }

    fn open(&mut self, sa: u32, local: u32, now: f64) {
        let mut v = self
            .decoder
            .predecode(local)
            .expect("split_address bounds the local row");
        v.subarray = Some(sa);
        let cols = self.profile.columns;
        let st = &mut self.state;
        st.phase = Phase::Sensing;
        st.open_subarray = Some(sa);
        st.latch_state = Some(LatchState::from(&v));
        st.activated_rows = vec![local];
        st.first_row = Some(local);
        st.bitlines = vec![0.5; cols];
        st.sense_latched = vec![false; cols];
        st.reliable = vec![true; cols];
        st.disconnected.clear();
        st.last_act_at = now;
        self.subarray_mut(sa);
    }

    fn precharge(&mut self, now: f64) {
        if self.state.pending_precharge.is_some() {
            self.finish_precharge();
        }
        if self.state.phase == Phase::Precharged {
            return;
        }
        let t1 = now - self.state.last_act_at;
        if self.state.phase == Phase::Sensing && t1 >= self.profile.timing.t_ras {
            self.resolve_sense();
        }
        self.state.pending_precharge = Some(PendingPrecharge { issued_at: now, t1 });
    }

    fn finish_precharge(&mut self) {
        let t1 = self
            .state
            .pending_precharge
            .map_or(self.state.elapsed - self.state.last_act_at, |p| p.t1);
        self.finish_precharge_with(t1);
    }

    /// Complete a precharge; an unresolved activation leaves its cells at the
    /// partially amplified bitline level.
    fn finish_precharge_with(&mut self, t1: f64) {
        if self.state.phase == Phase::Sensing {
            self.partial_resolve(t1);
        }
        let mut fresh = BankState::precharged(self.profile.columns);
        fresh.elapsed = self.state.elapsed;
        fresh.last_act_at = self.state.last_act_at;
        self.state = fresh;
    }

    /// Share and partly amplify the open rows, leaving cells and bitlines at
    /// the intermediate level. Returns the per-column level.
    fn partial_resolve(&mut self, t1: f64) -> Vec<f64> {
        let sa = self.state.open_subarray.expect("sensing implies open subarray");
        let rows: Vec<(u32, f64)> = self.state.activated_rows.iter().map(|&r| (r, 1.0)).collect();
        let d = drive_fraction(t1, &self.profile);
        let eff = self.nominal.clone();
        let cols = self.profile.columns;
        let mut levels = Vec::with_capacity(cols);
        for col in 0..cols {
            let div = self.divider(sa, &rows, col, &eff);
            let v = 0.5 + div.perturbation(eff.params.bitline_ratio, 0.5);
            let rail = if v > 0.5 { 1.0 } else { 0.0 };
            levels.push(v + d * (rail - v));
        }
        let st_rows: Vec<u32> = self.state.activated_rows.clone();
        for &r in &st_rows {
            let conn: Vec<bool> = (0..cols).map(|c| self.state.connected(r, c)).collect();
            let row = self.subarray_mut(sa).row_mut(r);
            for ((cell, &level), _) in row.iter_mut().zip(&levels).zip(&conn).filter(|(_, &c)| c) {
                *cell = level;
            }
        }
        self.state.bitlines.clone_from(&levels);
        levels
    }

    /// Full sense of the open rows at nominal timing.
    fn resolve_sense(&mut self) {
        let sa = self.state.open_subarray.expect("sensing implies open subarray");
        let rows: Vec<(u32, f64)> = self.state.activated_rows.iter().map(|&r| (r, 1.0)).collect();
        let eff = self.nominal.clone();
        let start = vec![(0.5, eff.params.bitline_ratio); self.profile.columns];
        self.sense_and_restore(sa, &rows, &start, &eff);
    }

    fn divider(&mut self, sa: u32, rows: &[(u32, f64)], col: usize, eff: &EffectiveAnalog) -> Divider {
        let mut d = Divider::default();
        for &(r, w) in rows {
            if !self.state.connected(r, col) {
                continue;
            }
            let s = self.subarrays.get(&sa).expect("open subarray exists");
            let cell = s.cell(r, col);
            let c = w * eff.efficiency(cell.variation.efficiency) * cell.variation.capacitance;
            d.add(c, s.charge(r, col));
        }
        d
    }

    /// Share `rows` onto bitlines starting at `(v0, c_b)` per column, sense,
    /// then drive rails and restore every open row.
    fn sense_and_restore(&mut self, sa: u32, rows: &[(u32, f64)], start: &[(f64, f64)], eff: &EffectiveAnalog) {
        let cols = self.profile.columns;
        let noise = eff.params.sense_offset_sigma;
        let mismatch = eff.params.mismatch_sigma();
        let mut bits = Vec::with_capacity(cols);
        let mut reliable = Vec::with_capacity(cols);
        for (col, &(v0, cb)) in start.iter().enumerate().take(cols) {
            let d = self.divider(sa, rows, col, eff);
            let p = d.perturbation(cb, v0);
            let z = self.subarrays.get(&sa).expect("open subarray exists").sense_amp_z(col);
            let offset = mismatch * z + draw_offset(noise, &mut self.rng);
            let out = sense_with_offset(p, offset, &eff.params);
            bits.push(out.value);
            reliable.push(out.reliable);
        }
        self.state.reliable = reliable;
        self.drive_rails(sa, &bits, eff);
    }

    /// Latch the rails and write them back into every connected open cell.
    fn drive_rails(&mut self, sa: u32, bits: &[bool], eff: &EffectiveAnalog) {
        let cols = self.profile.columns;
        self.state.bitlines = bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        self.state.sense_latched = vec![true; cols];
        self.state.phase = Phase::Activated;
        let open = self.state.activated_rows.len();
        let ones = bits.iter().filter(|&&b| b).count() as f64 / cols as f64;
        let load = ((open.saturating_sub(1)) as f64 / 31.0).min(1.0) * ones.powi(8);
        let droop = eff.params.ones_restore_droop * load;
        let rows = self.state.activated_rows.clone();
        for r in rows {
            let conn: Vec<bool> = (0..cols).map(|c| self.state.connected(r, c)).collect();
            let params: Vec<_> = {
                let s = self.subarrays.get(&sa).expect("open subarray exists");
                (0..cols).map(|c| s.cell(r, c)).collect()
            };
            let row = self.subarray_mut(sa).row_mut(r);
            for col in 0..cols {
                if !conn[col] {
                    continue;
                }
                let cell = params[col];
                let rail = if bits[col] { 1.0 } else { 0.0 };
                let f = eff.params.restore_fidelity(eff.efficiency(cell.variation.efficiency));
                let mut q = row[col] + f * (rail - row[col]);
                if bits[col] && cell.weak_u < droop {
                    q = q.min(DROOPED_CHARGE);
                }
                row[col] = q;
            }
        }
    }

    fn overdrive(&mut self, data: &[bool]) {
        let sa = self.state.open_subarray.expect("open bank");
        let eff = self.nominal.clone();
        self.state.reliable = vec![true; data.len()];
        self.drive_rails(sa, data, &eff);
    }

    fn consecutive(&mut self, local: u32, t1: f64, t2: f64, now: f64) {
        let sa = self
            .state
            .open_subarray
            .expect("pending precharge implies open subarray");
        let cols = self.profile.columns;
        let start: Vec<(f64, f64)> = if self.state.phase == Phase::Activated {
            Vec::new()
        } else {
            let levels = self.partial_resolve(t1);
            let decay = (t2 / self.profile.timing.t_rp).clamp(0.0, 1.0);
            levels
                .iter()
                .map(|&v| (v + decay * (0.5 - v), self.analog.bitline_ratio))
                .collect()
        };
        let mut v = self.decoder.predecode(local).expect("bounded local row");
        v.subarray = Some(sa);
        let st = &mut self.state;
        st.latch_state = Some(LatchState::from(&v));
        st.activated_rows = vec![local];
        st.disconnected.clear();
        st.last_act_at = now;
        st.first_row = Some(local);
        let eff = self.nominal.clone();
        if start.is_empty() {
            let bits: Vec<bool> = self.state.bitlines.iter().map(|&b| b > 0.5).collect();
            self.drive_rails(sa, &bits, &eff);
        } else {
            debug_assert_eq!(start.len(), cols);
            self.sense_and_restore(sa, &[(local, 1.0)], &start, &eff);
        }
    }

    fn union(&mut self, local: u32, t1: f64, t2: f64, mode: SenseMode) -> Result<()> {
        let sa = self
            .state
            .open_subarray
            .expect("pending precharge implies open subarray");
        let eff = apply_environment(&self.analog, self.env, t1, t2)?;
        let cols = self.profile.columns;
        let second = self.decoder.predecode(local).expect("bounded local row");
        let mut latch = self.state.latch_state.clone().expect("open bank has latches");
        for (set, &value) in latch.sets.iter_mut().zip(&second.values) {
            if let Err(pos) = set.binary_search(&value) {
                if eff.latch_fail_prob > 0.0 && self.rng.random::<f64>() < eff.latch_fail_prob {
                    continue;
                }
                set.insert(pos, value);
            }
        }
        let rows = self.decoder.expand(&latch);
        let previous = std::mem::take(&mut self.state.activated_rows);
        if eff.underdrive_prob > 0.0 {
            for &r in rows.iter().filter(|r| previous.binary_search(r).is_err()) {
                let s = self.subarrays.get(&sa).expect("open subarray exists");
                let mask: Vec<bool> = (0..cols).map(|c| s.cell(r, c).drive_u < eff.underdrive_prob).collect();
                if mask.iter().any(|&m| m) {
                    self.state.disconnected.insert(r, mask);
                }
            }
        }
        self.state.latch_state = Some(latch);
        self.state.activated_rows = rows.clone();

        let latched = self.state.phase == Phase::Activated;
        if latched || mode == SenseMode::FullyLatched {
            if !latched {
                self.state.activated_rows = previous;
                self.resolve_sense();
                self.state.activated_rows = rows;
            }
            let bits: Vec<bool> = self.state.bitlines.iter().map(|&b| b > 0.5).collect();
            self.drive_rails(sa, &bits, &eff);
            return Ok(());
        }
        let first = self.state.first_row.expect("open bank has a first row");
        match mode {
            SenseMode::ChargeSharing => {
                let weighted: Vec<(u32, f64)> = rows
                    .iter()
                    .map(|&r| (r, if r == first { eff.first_row_weight } else { 1.0 }))
                    .collect();
                let start = vec![(0.5, eff.params.bitline_ratio); cols];
                self.sense_and_restore(sa, &weighted, &start, &eff);
            }
            SenseMode::Underdriven => {
                // The first row has already merged with its bitline and been
                // pushed partway to a rail; the rest join that node.
                let saved = std::mem::replace(&mut self.state.activated_rows, vec![first]);
                let levels = self.partial_resolve(t1);
                self.state.activated_rows = saved;
                let start: Vec<(f64, f64)> = (0..cols)
                    .map(|col| {
                        let d = self.divider(sa, &[(first, 1.0)], col, &eff);
                        (levels[col], eff.params.bitline_ratio + d.sum_c)
                    })
                    .collect();
                let others: Vec<(u32, f64)> = rows.iter().filter(|&&r| r != first).map(|&r| (r, 1.0)).collect();
                if others.is_empty() {
                    let bits: Vec<bool> = levels.iter().map(|&v| v > 0.5).collect();
                    self.drive_rails(sa, &bits, &eff);
                } else {
                    self.sense_and_restore(sa, &others, &start, &eff);
                }
            }
            SenseMode::FullyLatched => unreachable!("handled above"),
        }
        Ok(())
    }
}
