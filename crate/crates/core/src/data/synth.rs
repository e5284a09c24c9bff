//! Seeded synthetic rover logs.
//!
//! Each terrain class drives the sensors through a class-specific signature:
//! wheel-leg impacts ring a damped resonator, a gait term adds low-frequency
//! sinusoids, and an AR(1) process adds surface roughness. Rock (class 0)
//! rings at a high, lightly damped frequency with strong impacts and
//! anti-persistent roughness; sand (class 1) is heavily damped, low
//! frequency and smooth. Idle segments hold the rover still.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{Channel, ChannelGroup, DataError, Result, TimeSeriesLog, IMU_CHANNELS, JOINT_CHANNELS};
use crate::kv::{KvDoc, KvError, KvSection};
use crate::rng::{self, Rng};

const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSignature {
    /// Gait oscillation frequencies.
    pub gait_freqs_hz: Vec<f64>,
    pub amplitude: f64,
    /// AR(1) coefficient of the roughness process, in (-1, 1).
    pub roughness: f64,
    pub roughness_std: f64,
    pub noise_std: f64,
    pub resonance_hz: f64,
    /// Damping ratio of the impact resonator, in (0, 1).
    pub damping: f64,
    pub impact_rate_hz: f64,
    pub impact_gain: f64,
    /// Mean wheel effort while driving.
    pub effort: f64,
}

impl ClassSignature {
    pub fn rock() -> Self {
        Self {
            gait_freqs_hz: vec![1.2, 2.4],
            amplitude: 0.4,
            roughness: -0.3,
            roughness_std: 0.3,
            noise_std: 0.15,
            resonance_hz: 17.0,
            damping: 0.08,
            impact_rate_hz: 3.0,
            impact_gain: 2.0,
            effort: 1.0,
        }
    }

    pub fn sand() -> Self {
        Self {
            gait_freqs_hz: vec![1.2, 2.4],
            amplitude: 0.5,
            roughness: 0.95,
            roughness_std: 0.08,
            noise_std: 0.08,
            resonance_hz: 5.0,
            damping: 0.35,
            impact_rate_hz: 3.0,
            impact_gain: 0.8,
            effort: 1.5,
        }
    }

    fn validate(&self, rate: f64) -> Result<()> {
        let bad = |m: &str| Err(DataError::InvalidSpec(m.to_string()));
        if !(self.roughness.abs() < 1.0) {
            return bad("roughness must lie in (-1, 1)");
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return bad("damping must lie in (0, 1)");
        }
        if !(self.resonance_hz > 0.0 && self.resonance_hz < rate / 2.0) {
            return bad("resonance must lie below the Nyquist frequency");
        }
        let nonneg = [self.amplitude, self.roughness_std, self.noise_std, self.impact_rate_hz, self.impact_gain, self.effort];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || self.gait_freqs_hz.iter().any(|f| !(*f > 0.0)) {
            return bad("signature magnitudes must be finite and non-negative");
        }
        Ok(())
    }

    fn to_kv(&self, name: &str) -> KvSection {
        let mut s = KvSection::named(name);
        s.push("gait_freqs_hz", join(&self.gait_freqs_hz));
        s.push("amplitude", self.amplitude);
        s.push("roughness", self.roughness);
        s.push("roughness_std", self.roughness_std);
        s.push("noise_std", self.noise_std);
        s.push("resonance_hz", self.resonance_hz);
        s.push("damping", self.damping);
        s.push("impact_rate_hz", self.impact_rate_hz);
        s.push("impact_gain", self.impact_gain);
        s.push("effort", self.effort);
        s
    }

    fn from_kv(s: &KvSection, default: Self) -> Result<Self> {
        s.check_keys(&[
            "gait_freqs_hz", "amplitude", "roughness", "roughness_std", "noise_std", "resonance_hz", "damping",
            "impact_rate_hz", "impact_gain", "effort",
        ])
        .map_err(spec_err)?;
        let gait_freqs_hz = match s.get("gait_freqs_hz") {
            Some(v) => split_floats(v)?,
            None => default.gait_freqs_hz.clone(),
        };
        let f = |k: &str, d: f64| s.parse_or(k, d).map_err(spec_err);
        Ok(Self {
            gait_freqs_hz,
            amplitude: f("amplitude", default.amplitude)?,
            roughness: f("roughness", default.roughness)?,
            roughness_std: f("roughness_std", default.roughness_std)?,
            noise_std: f("noise_std", default.noise_std)?,
            resonance_hz: f("resonance_hz", default.resonance_hz)?,
            damping: f("damping", default.damping)?,
            impact_rate_hz: f("impact_rate_hz", default.impact_rate_hz)?,
            impact_gain: f("impact_gain", default.impact_gain)?,
            effort: f("effort", default.effort)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub class: u8,
    pub duration_s: f64,
    /// Rover stationary on this terrain.
    pub idle: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub log_id: String,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub segments: Vec<Segment>,
    /// Signatures for class 0 (rock) and class 1 (sand).
    pub classes: [ClassSignature; 2],
    pub joints: bool,
    /// Spread of the per-segment log-normal jitter on impact and roughness
    /// strength; larger values make the classes overlap.
    pub variability: f64,
    pub speed_mps: f64,
}

impl SynthSpec {
    /// One rock then one sand segment with default signatures.
    pub fn two_segment(seed: u64, rock_s: f64, sand_s: f64) -> Self {
        Self {
            log_id: format!("synth_{seed}"),
            seed,
            sample_rate_hz: 100.0,
            duration_s: rock_s + sand_s,
            segments: vec![
                Segment { class: 0, duration_s: rock_s, idle: false },
                Segment { class: 1, duration_s: sand_s, idle: false },
            ],
            classes: [ClassSignature::rock(), ClassSignature::sand()],
            joints: true,
            variability: 0.0,
            speed_mps: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DataError::InvalidSpec(m));
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return bad(format!("sample rate {} must be positive", self.sample_rate_hz));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration {} must be positive", self.duration_s));
        }
        if self.segments.is_empty() {
            return bad("no segments".into());
        }
        if let Some(s) = self.segments.iter().find(|s| !(s.duration_s > 0.0) || s.class > 1) {
            return bad(format!("segment {s:?} needs positive duration and class 0 or 1"));
        }
        let total: f64 = self.segments.iter().map(|s| s.duration_s).sum();
        if (total - self.duration_s).abs() > 1e-6 * self.duration_s.max(1.0) {
            return bad(format!("segments sum to {total} s, expected {} s", self.duration_s));
        }
        if self.classes[0] == self.classes[1] {
            return bad("class signatures must differ".into());
        }
        if !(self.variability >= 0.0 && self.speed_mps > 0.0) {
            return bad("variability must be >= 0 and speed > 0".into());
        }
        if self.segments.iter().all(|s| s.idle) {
            return bad("every segment is idle".into());
        }
        for c in &self.classes {
            c.validate(self.sample_rate_hz)?;
        }
        Ok(())
    }
}

/// Two-pole resonator excited by impulses, normalized so an isolated unit
/// impulse peaks near 1.
#[derive(Debug, Clone, Default)]
struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn step(&mut self, input: f64, freq_hz: f64, damping: f64, dt: f64) -> f64 {
        let theta = 2.0 * PI * freq_hz * dt;
        let r = (-damping * 2.0 * PI * freq_hz * dt).exp();
        let y = 2.0 * r * theta.cos() * self.y1 - r * r * self.y2 + input * theta.sin();
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn synth_generate(spec: &SynthSpec) -> Result<TimeSeriesLog> {
    spec.validate()?;
    let rate = spec.sample_rate_hz;
    let dt = 1.0 / rate;
    let total = (spec.duration_s * rate).round() as usize;
    let mut rng = rng::stream(spec.seed, "synth", 0);

    let imu_n = IMU_CHANNELS.len();
    let joint_n = if spec.joints { JOINT_CHANNELS.len() } else { 0 };
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(total); imu_n + joint_n];
    let mut labels = Vec::with_capacity(total);

    // Per-axis impact weights (x, y, z) and phases are properties of the rover.
    let axis_weight = [0.6, 0.4, 1.0];
    let phases: Vec<f64> = (0..imu_n + 4).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    let mut resonators = vec![Resonator::default(); imu_n];
    let mut ar = [0.0; 6];
    let mut effort_ar = [0.0; 4];
    let mut prev_speed = [0.0; 4];

    let mut cum = 0.0;
    for seg in &spec.segments {
        let start = (cum * rate).round() as usize;
        cum += seg.duration_s;
        let end = ((cum * rate).round() as usize).min(total);
        let sig = &spec.classes[usize::from(seg.class)];
        let jitter = |rng: &mut Rng| (spec.variability * normal(rng)).exp();
        let impact_gain = sig.impact_gain * jitter(&mut rng);
        let rough_std = sig.roughness_std * jitter(&mut rng);
        let speed = spec.speed_mps * (0.8 + 0.4 * rng.random::<f64>());
        let impact_p = sig.impact_rate_hz * dt * speed / spec.speed_mps;

        for i in start..end {
            let t = i as f64 * dt;
            labels.push(seg.class);
            if seg.idle {
                for (a, col) in values.iter_mut().take(3).enumerate() {
                    col.push(if a == 2 { GRAVITY } else { 0.0 } + 0.01 * normal(&mut rng));
                }
                for col in values.iter_mut().skip(3).take(3) {
                    col.push(0.002 * normal(&mut rng));
                }
                for w in 0..joint_n / 3 {
                    let base = imu_n + 3 * w;
                    values[base].push(0.001 * normal(&mut rng));
                    values[base + 1].push(0.005 * normal(&mut rng));
                    values[base + 2].push(0.05 * sig.effort + 0.01 * normal(&mut rng));
                    prev_speed[w] = 0.0;
                }
                continue;
            }
            let impact = if rng.random::<f64>() < impact_p { impact_gain * (0.5 + rng.random::<f64>()) } else { 0.0 };
            let gait: f64 = sig.gait_freqs_hz.iter().map(|f| (2.0 * PI * f * t).sin()).sum::<f64>();
            for ch in 0..imu_n {
                let axis = ch % 3;
                let gyro = ch >= 3;
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let ring = resonators[ch].step(impact * axis_weight[axis] * sign, sig.resonance_hz, sig.damping, dt);
                ar[ch] = sig.roughness * ar[ch] + rough_std * normal(&mut rng);
                let gait_term = sig.amplitude
                    * sig.gait_freqs_hz.iter().map(|f| (2.0 * PI * f * t + phases[ch]).sin()).sum::<f64>();
                let v = ring + gait_term + ar[ch] + sig.noise_std * normal(&mut rng);
                values[ch].push(if gyro { 0.25 * v } else if axis == 2 { GRAVITY + v } else { v });
            }
            for w in 0..joint_n / 3 {
                let base = imu_n + 3 * w;
                let s = speed * (1.0 + 0.03 * (gait + phases[imu_n + w]).sin()) + 0.02 * resonators[2].y1
                    + 0.005 * normal(&mut rng);
                let accel = (s - prev_speed[w]) * rate * 0.1 + 0.01 * normal(&mut rng);
                prev_speed[w] = s;
                effort_ar[w] = sig.roughness * effort_ar[w] + 0.5 * rough_std * normal(&mut rng);
                values[base].push(s);
                values[base + 1].push(accel);
                values[base + 2].push(sig.effort * (1.0 + 0.1 * effort_ar[w]) + 0.05 * normal(&mut rng));
            }
        }
    }
    debug_assert_eq!(labels.len(), total);

    let names = IMU_CHANNELS.iter().chain(JOINT_CHANNELS.iter().take(joint_n));
    let log = TimeSeriesLog {
        log_id: spec.log_id.clone(),
        sample_rate_hz: rate,
        channels: names
            .zip(values)
            .map(|(n, v)| Channel { name: n.to_string(), group: ChannelGroup::of(n).unwrap(), values: v })
            .collect(),
        labels,
    };
    log.validate()?;
    Ok(log)
}

/// A multi-log generation plan, read from a generator spec file.
///
/// Root keys describe automatically laid out logs; `[class0]`/`[class1]`
/// sections override signatures; each `[log]` section adds an explicit log
/// (`id`, `seed`, `segments = 0:60,1:60` with an optional `:idle` suffix).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPlan {
    pub seed: u64,
    pub logs: usize,
    pub log_duration_s: f64,
    pub sample_rate_hz: f64,
    pub segments_per_log: usize,
    /// Probability that a segment is sand.
    pub class_balance: f64,
    pub idle_probability: f64,
    pub idle_s: f64,
    pub joints: bool,
    pub variability: f64,
    pub speed_mps: f64,
    pub classes: [ClassSignature; 2],
    pub explicit: Vec<SynthSpec>,
}

impl Default for GeneratorPlan {
    /// Twenty 30-second logs: ten minutes of driving data.
    fn default() -> Self {
        Self {
            seed: 1,
            logs: 20,
            log_duration_s: 30.0,
            sample_rate_hz: 100.0,
            segments_per_log: 2,
            class_balance: 0.5,
            idle_probability: 0.3,
            idle_s: 3.0,
            joints: true,
            variability: 0.35,
            speed_mps: 0.3,
            classes: [ClassSignature::rock(), ClassSignature::sand()],
            explicit: Vec::new(),
        }
    }
}

const PLAN_KEYS: [&str; 11] = [
    "seed", "logs", "log_duration_s", "sample_rate_hz", "segments_per_log", "class_balance", "idle_probability",
    "idle_s", "joints", "variability", "speed_mps",
];

fn spec_err(e: KvError) -> DataError {
    DataError::InvalidSpec(e.to_string())
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn split_floats(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| DataError::InvalidSpec(format!("bad number `{x}`"))))
        .collect()
}

impl GeneratorPlan {
    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let d = Self::default();
        let root = doc.root();
        root.check_keys(&PLAN_KEYS).map_err(spec_err)?;
        let f = |k: &str, v: f64| root.parse_or(k, v).map_err(spec_err);
        let mut plan = Self {
            seed: root.parse_or("seed", d.seed).map_err(spec_err)?,
            logs: root.parse_or("logs", d.logs).map_err(spec_err)?,
            log_duration_s: f("log_duration_s", d.log_duration_s)?,
            sample_rate_hz: f("sample_rate_hz", d.sample_rate_hz)?,
            segments_per_log: root.parse_or("segments_per_log", d.segments_per_log).map_err(spec_err)?,
            class_balance: f("class_balance", d.class_balance)?,
            idle_probability: f("idle_probability", d.idle_probability)?,
            idle_s: f("idle_s", d.idle_s)?,
            joints: root.parse_or("joints", d.joints).map_err(spec_err)?,
            variability: f("variability", d.variability)?,
            speed_mps: f("speed_mps", d.speed_mps)?,
            classes: d.classes.clone(),
            explicit: Vec::new(),
        };
        for (i, name) in ["class0", "class1"].iter().enumerate() {
            if let Some(s) = doc.named(name).next() {
                plan.classes[i] = ClassSignature::from_kv(s, d.classes[i].clone())?;
            }
        }
        for s in &doc.sections[1..] {
            match s.name.as_deref() {
                Some("class0" | "class1") => {}
                Some("log") => plan.explicit.push(plan.explicit_log(s)?),
                other => return Err(DataError::InvalidSpec(format!("unknown section {other:?}"))),
            }
        }
        Ok(plan)
    }

    fn explicit_log(&self, s: &KvSection) -> Result<SynthSpec> {
        s.check_keys(&["id", "seed", "segments"]).map_err(spec_err)?;
        let id = s.require("id").map_err(spec_err)?.to_string();
        let seed = s.parse_or("seed", rng::derive_seed(self.seed, &id, 0)).map_err(spec_err)?;
        let mut segments = Vec::new();
        for part in s.require("segments").map_err(spec_err)?.split(',') {
            let fields: Vec<&str> = part.trim().split(':').collect();
            let parsed = match fields.as_slice() {
                [c, d] => c.parse().ok().zip(d.parse().ok()).map(|(class, duration_s)| Segment { class, duration_s, idle: false }),
                [c, d, "idle"] => c.parse().ok().zip(d.parse().ok()).map(|(class, duration_s)| Segment { class, duration_s, idle: true }),
                _ => None,
            };
            segments.push(parsed.ok_or_else(|| DataError::InvalidSpec(format!("bad segment `{part}`")))?);
        }
        Ok(SynthSpec {
            log_id: id,
            seed,
            sample_rate_hz: self.sample_rate_hz,
            duration_s: segments.iter().map(|s| s.duration_s).sum(),
            segments,
            classes: self.classes.clone(),
            joints: self.joints,
            variability: self.variability,
            speed_mps: self.speed_mps,
        })
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut root = KvSection::default();
        root.push("seed", self.seed);
        root.push("logs", self.logs);
        root.push("log_duration_s", self.log_duration_s);
        root.push("sample_rate_hz", self.sample_rate_hz);
        root.push("segments_per_log", self.segments_per_log);
        root.push("class_balance", self.class_balance);
        root.push("idle_probability", self.idle_probability);
        root.push("idle_s", self.idle_s);
        root.push("joints", self.joints);
        root.push("variability", self.variability);
        root.push("speed_mps", self.speed_mps);
        let mut doc = KvDoc::from(root);
        doc.sections.push(self.classes[0].to_kv("class0"));
        doc.sections.push(self.classes[1].to_kv("class1"));
        for log in &self.explicit {
            let mut s = KvSection::named("log");
            s.push("id", &log.log_id);
            s.push("seed", log.seed);
            let segs: Vec<String> = log
                .segments
                .iter()
                .map(|g| format!("{}:{}{}", g.class, g.duration_s, if g.idle { ":idle" } else { "" }))
                .collect();
            s.push("segments", segs.join(","));
            doc.sections.push(s);
        }
        doc
    }

    /// Expands the plan into one spec per log.
    pub fn expand(&self) -> Result<Vec<SynthSpec>> {
        let bad = |m: &str| Err(DataError::InvalidSpec(m.to_string()));
        if self.logs + self.explicit.len() == 0 {
            return bad("plan produces no logs");
        }
        if self.logs > 0 {
            if !(self.log_duration_s > 0.0) {
                return bad("log_duration_s must be positive");
            }
            if self.segments_per_log == 0 {
                return bad("segments_per_log must be at least 1");
            }
            if !(0.0..=1.0).contains(&self.class_balance) || !(0.0..=1.0).contains(&self.idle_probability) {
                return bad("class_balance and idle_probability must lie in [0, 1]");
            }
            if !(self.idle_s >= 0.0 && self.idle_s < self.log_duration_s) {
                return bad("idle_s must lie in [0, log_duration_s)");
            }
        }
        let mut specs = Vec::with_capacity(self.logs + self.explicit.len());
        for k in 0..self.logs {
            let mut rng = rng::stream(self.seed, "layout", k as u64);
            let mut segments = Vec::new();
            let mut moving = self.log_duration_s;
            let class_of = |rng: &mut Rng| u8::from(rng.random::<f64>() < self.class_balance);
            if self.idle_s > 0.0 && rng.random::<f64>() < self.idle_probability {
                segments.push(Segment { class: class_of(&mut rng), duration_s: self.idle_s, idle: true });
                moving -= self.idle_s;
            }
            // Segment lengths: uniform weights in [1, 2), normalized.
            let weights: Vec<f64> = (0..self.segments_per_log).map(|_| 1.0 + rng.random::<f64>()).collect();
            let wsum: f64 = weights.iter().sum();
            let mut used = 0.0;
            for (j, w) in weights.iter().enumerate() {
                let d = if j + 1 == weights.len() { moving - used } else { (moving * w / wsum * 100.0).round() / 100.0 };
                used += d;
                segments.push(Segment { class: class_of(&mut rng), duration_s: d, idle: false });
            }
            specs.push(SynthSpec {
                log_id: format!("log_{k:03}"),
                seed: rng::derive_seed(self.seed, "log", k as u64),
                sample_rate_hz: self.sample_rate_hz,
                duration_s: self.log_duration_s,
                segments,
                classes: self.classes.clone(),
                joints: self.joints,
                variability: self.variability,
                speed_mps: self.speed_mps,
            });
        }
        specs.extend(self.explicit.iter().cloned());
        for s in &specs {
            s.validate()?;
        }
        Ok(specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power of `x` above `cutoff_hz`, by direct DFT.
    fn band_power_above(x: &[f64], rate: f64, cutoff_hz: f64) -> f64 {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let mut p = 0.0;
        for k in 1..=n / 2 {
            if (k as f64) * rate / n as f64 <= cutoff_hz {
                continue;
            }
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let a = -2.0 * PI * (k * t) as f64 / n as f64;
                re += (v - mean) * a.cos();
                im += (v - mean) * a.sin();
            }
            p += re * re + im * im;
        }
        p / (n * n) as f64
    }

    #[test]
    fn deterministic_and_sized() {
        let spec = SynthSpec::two_segment(11, 60.0, 60.0);
        let a = synth_generate(&spec).unwrap();
        let b = synth_generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12_000);
        assert_eq!(a.channel_count(), 18);
        assert_eq!(a.labels[5999], 0);
        assert_eq!(a.labels[6000], 1);
        assert_ne!(a, synth_generate(&SynthSpec { seed: 12, ..spec }).unwrap());
    }

    #[test]
    fn rock_has_more_high_frequency_power() {
        let spec = SynthSpec::two_segment(3, 20.0, 20.0);
        let log = synth_generate(&spec).unwrap();
        for name in ["acc_x", "acc_y", "acc_z"] {
            let v = &log.channel(name).unwrap().values;
            let rock = band_power_above(&v[..2000], 100.0, 10.0);
            let sand = band_power_above(&v[2000..], 100.0, 10.0);
            assert!(rock >= 2.0 * sand, "{name}: rock {rock} sand {sand}");
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = SynthSpec::two_segment(1, 1.0, 1.0);
        s.duration_s = 0.0;
        assert!(matches!(synth_generate(&s), Err(DataError::InvalidSpec(_))));
        let mut s = SynthSpec::two_segment(1, 1.0, 1.0);
        s.duration_s = 3.0;
        assert!(matches!(synth_generate(&s), Err(DataError::InvalidSpec(_))));
        let mut s = SynthSpec::two_segment(1, 1.0, 1.0);
        s.classes[1] = s.classes[0].clone();
        assert!(matches!(synth_generate(&s), Err(DataError::InvalidSpec(_))));
    }

    #[test]
    fn idle_segments_are_quiet() {
        let mut s = SynthSpec::two_segment(2, 5.0, 5.0);
        s.segments.insert(0, Segment { class: 1, duration_s: 2.0, idle: true });
        s.duration_s = 12.0;
        let log = synth_generate(&s).unwrap();
        let act = crate::data::activity(&log);
        assert!(act[..200].iter().all(|&a| a < 0.01));
        assert!(act[200..].iter().all(|&a| a > 0.1));
        assert_eq!(crate::data::trim_idle(&log, 0.05, 1.0).unwrap().len(), 1000);
    }

    #[test]
    fn plan_roundtrip_and_expand() {
        let mut plan = GeneratorPlan::default();
        plan.explicit.push(SynthSpec { log_id: "custom".into(), ..SynthSpec::two_segment(9, 4.0, 6.0) });
        let doc = KvDoc::parse(&plan.to_kv().render()).unwrap();
        let back = GeneratorPlan::from_kv(&doc).unwrap();
        assert_eq!(back.logs, plan.logs);
        assert_eq!(back.explicit[0].segments, plan.explicit[0].segments);
        let specs = back.expand().unwrap();
        assert_eq!(specs.len(), 21);
        for s in &specs[..20] {
            assert!((s.segments.iter().map(|g| g.duration_s).sum::<f64>() - 30.0).abs() < 1e-9);
        }
        let zero = GeneratorPlan { log_duration_s: 0.0, ..GeneratorPlan::default() };
        assert!(matches!(zero.expand(), Err(DataError::InvalidSpec(_))));
    }
}
