//! Per-timestep latency instrumentation.
//!
//! A monotonic timestamp is taken at every timestep boundary; the gap
//! between consecutive stamps is one sample, booked under one of four cycle
//! classes (training or inference,
//! presentation or silence). Spike encoding happens once per image and is
//! timed separately.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::encoder::PRESENTATION_STEPS;
use crate::error::{Error, Result};
use crate::mnist::LabeledImage;
use crate::network::Network;
use crate::plasticity::TrainingEpisode;
use crate::trainer::training_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    Train,
    Infer,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Mode::Train),
            "infer" => Ok(Mode::Infer),
            other => Err(Error::Usage(format!(
                "mode must be train or infer, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleClass {
    TrainPresentation,
    TrainSilence,
    InferPresentation,
    InferSilence,
}

impl CycleClass {
    pub const ALL: [CycleClass; 4] = [
        CycleClass::TrainPresentation,
        CycleClass::TrainSilence,
        CycleClass::InferPresentation,
        CycleClass::InferSilence,
    ];

    fn of(mode: Mode, step: usize) -> Self {
        match (mode, step < PRESENTATION_STEPS) {
            (Mode::Train, true) => CycleClass::TrainPresentation,
            (Mode::Train, false) => CycleClass::TrainSilence,
            (Mode::Infer, true) => CycleClass::InferPresentation,
            (Mode::Infer, false) => CycleClass::InferSilence,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CycleClass::TrainPresentation => "train_presentation",
            CycleClass::TrainSilence => "train_silence",
            CycleClass::InferPresentation => "infer_presentation",
            CycleClass::InferSilence => "infer_silence",
        }
    }
}

impl fmt::Display for CycleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CycleClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CycleClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown cycle class {s:?}")))
    }
}

/// Summary of one class of samples, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassStats {
    pub class: CycleClass,
    pub count: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
    pub max_us: f64,
    pub min_us: f64,
}

impl ClassStats {
    fn from_nanos(class: CycleClass, samples: &mut [u64]) -> Self {
        let s = summarize(samples);
        Self {
            class,
            count: s.count,
            mean_us: s.mean_us,
            p50_us: s.p50_us,
            p95_us: s.p95_us,
            max_us: s.max_us,
            min_us: s.min_us,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
    pub max_us: f64,
    pub min_us: f64,
}

/// Nearest-rank percentiles; sorts `samples` in place.
pub fn summarize(samples: &mut [u64]) -> Summary {
    if samples.is_empty() {
        return Summary {
            count: 0,
            mean_us: 0.0,
            p50_us: 0.0,
            p95_us: 0.0,
            max_us: 0.0,
            min_us: 0.0,
        };
    }
    samples.sort_unstable();
    let n = samples.len();
    let rank = |p: f64| samples[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
    let us = |ns: u64| ns as f64 / 1_000.0;
    let mean = samples.iter().map(|&x| x as f64).sum::<f64>() / n as f64 / 1_000.0;
    Summary {
        count: n,
        mean_us: mean,
        p50_us: us(rank(0.50)),
        p95_us: us(rank(0.95)),
        max_us: us(samples[n - 1]),
        min_us: us(samples[0]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub classes: Vec<ClassStats>,
    /// Per-image spike encoding, not part of any cycle class.
    pub encode: Summary,
    pub host: String,
    pub pinned: bool,
}

impl LatencyReport {
    pub fn get(&self, class: CycleClass) -> Option<&ClassStats> {
        self.classes.iter().find(|c| c.class == class)
    }

    /// Concatenates the classes of two reports (e.g. a train and an infer run).
    pub fn merge(mut self, other: LatencyReport) -> LatencyReport {
        for c in other.classes {
            match self.classes.iter_mut().find(|x| x.class == c.class) {
                Some(slot) => *slot = c,
                None => self.classes.push(c),
            }
        }
        self.classes
            .sort_by_key(|c| CycleClass::ALL.iter().position(|&k| k == c.class));
        self.pinned &= other.pinned;
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle_class,count,mean_us,p50_us,p95_us,max_us\n");
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{},{},{:?},{:?},{:?},{:?}",
                c.class, c.count, c.mean_us, c.p50_us, c.p95_us, c.max_us
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!("host: {}\npinned: {}\n", self.host, self.pinned);
        let _ = writeln!(
            out,
            "{:<20}{:>9}{:>11}{:>11}{:>11}{:>11}",
            "cycle class", "count", "mean us", "p50 us", "p95 us", "max us"
        );
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:<20}{:>9}{:>11.3}{:>11.3}{:>11.3}{:>11.3}",
                c.class.name(),
                c.count,
                c.mean_us,
                c.p50_us,
                c.p95_us,
                c.max_us
            );
        }
        let _ = writeln!(
            out,
            "encode per image: n={} mean {:.3} us, p95 {:.3} us",
            self.encode.count, self.encode.mean_us, self.encode.p95_us
        );
        out
    }
}

/// Parsed CSV row, for consumers of emitted reports.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub class: CycleClass,
    pub count: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
    pub max_us: f64,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("cycle_class,count,mean_us,p50_us,p95_us,max_us") => {}
        other => {
            return Err(Error::Format(format!(
                "unexpected latency CSV header {other:?}"
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Format(format!("bad latency CSV row {line:?}")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad number {s:?}")))
            };
            Ok(CsvRow {
                class: f[0].parse()?,
                count: f[1]
                    .parse()
                    .map_err(|_| Error::Format(format!("bad count {:?}", f[1])))?,
                mean_us: num(f[2])?,
                p50_us: num(f[3])?,
                p95_us: num(f[4])?,
                max_us: num(f[5])?,
            })
        })
        .collect()
}

/// Writes `<path>` as CSV and `<path>.txt` as the readable summary.
pub fn emit_report(report: &LatencyReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
    let mut txt = path.as_os_str().to_owned();
    txt.push(".txt");
    std::fs::write(&txt, report.summary()).map_err(|e| Error::io(txt, e))
}

/// Times every timestep of every image. `warmup` images (cycling through
/// `images`) run first and are discarded. Training runs on a private copy of
/// `net` with the seed's training rng.
pub fn bench_run(
    net: &Network,
    images: &[LabeledImage],
    mode: Mode,
    warmup: usize,
) -> Result<LatencyReport> {
    if images.is_empty() {
        return Err(Error::Usage("bench needs at least one image".into()));
    }
    let pinned = pin_current_thread();
    let mut presentation = Vec::with_capacity(images.len() * PRESENTATION_STEPS);
    let mut silence = Vec::with_capacity(images.len() * PRESENTATION_STEPS);
    let mut encode = Vec::with_capacity(images.len());

    match mode {
        Mode::Train => {
            let mut net = net.clone();
            let mut rng = training_rng(net.config().seed);
            let mut run = |img: &LabeledImage, record: bool| -> Result<()> {
                let t0 = Instant::now();
                let mut episode = TrainingEpisode::begin(&mut net, img);
                let mut last = Instant::now();
                let enc = (last - t0).as_nanos() as u64;
                while !episode.is_done() {
                    let step = episode.current_step();
                    episode.step(&mut net, &mut rng)?;
                    let now = Instant::now();
                    if record {
                        book(
                            step,
                            (now - last).as_nanos() as u64,
                            &mut presentation,
                            &mut silence,
                        );
                    }
                    last = now;
                }
                if record {
                    encode.push(enc);
                }
                Ok(())
            };
            for img in images.iter().cycle().take(warmup) {
                run(img, false)?;
            }
            for img in images {
                run(img, true)?;
            }
        }
        Mode::Infer => {
            let mut run = |img: &LabeledImage, record: bool| {
                let t0 = Instant::now();
                let mut inference = net.inference(img.pixels());
                let mut last = Instant::now();
                let enc = (last - t0).as_nanos() as u64;
                loop {
                    let step = inference.current_step();
                    let more = inference.step();
                    let now = Instant::now();
                    if record {
                        book(
                            step,
                            (now - last).as_nanos() as u64,
                            &mut presentation,
                            &mut silence,
                        );
                    }
                    last = now;
                    if !more {
                        break;
                    }
                }
                if record {
                    encode.push(enc);
                }
                std::hint::black_box(inference.counts());
            };
            for img in images.iter().cycle().take(warmup) {
                run(img, false);
            }
            for img in images {
                run(img, true);
            }
        }
    }

    Ok(LatencyReport {
        classes: vec![
            ClassStats::from_nanos(CycleClass::of(mode, 0), &mut presentation),
            ClassStats::from_nanos(CycleClass::of(mode, PRESENTATION_STEPS), &mut silence),
        ],
        encode: summarize(&mut encode),
        host: host_description(),
        pinned,
    })
}

fn book(step: usize, ns: u64, presentation: &mut Vec<u64>, silence: &mut Vec<u64>) {
    if step < PRESENTATION_STEPS {
        presentation.push(ns);
    } else {
        silence.push(ns);
    }
}

/// Mean per-sample cost of the timing loop itself, in microseconds: the
/// same chained-timestamp bookkeeping as [`bench_run`] around a no-op step.
pub fn timer_overhead_us(samples: usize) -> f64 {
    let mut presentation = Vec::with_capacity(samples);
    let mut silence = Vec::with_capacity(samples);
    let mut last = Instant::now();
    for k in 0..samples {
        std::hint::black_box(k);
        let now = Instant::now();
        book(
            k % 20,
            (now - last).as_nanos() as u64,
            &mut presentation,
            &mut silence,
        );
        last = now;
    }
    let total: u64 = presentation.iter().chain(&silence).sum();
    total as f64 / samples.max(1) as f64 / 1_000.0
}

pub fn host_description() -> String {
    let cpus = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!(
        "{}-{} {} cpus{}",
        std::env::consts::ARCH,
        std::env::consts::OS,
        cpus,
        cpu_model().map(|m| format!(" ({m})")).unwrap_or_default()
    )
}

fn cpu_model() -> Option<String> {
    let info = std::fs::read_to_string("/proc/cpuinfo").ok()?;
    info.lines()
        .find(|l| l.starts_with("model name") || l.starts_with("Model"))
        .and_then(|l| l.split_once(':'))
        .map(|(_, v)| v.trim().to_string())
}

#[cfg(target_os = "linux")]
fn pin_current_thread() -> bool {
    // SAFETY: plain syscalls on a zeroed cpu_set_t owned by this frame.
    unsafe {
        let cpu = libc::sched_getcpu();
        if cpu < 0 {
            return false;
        }
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu as usize, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) == 0
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_current_thread() -> bool {
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnist::PIXELS;
    use crate::network::NetworkConfig;

    fn images(n: usize) -> Vec<LabeledImage> {
        (0..n)
            .map(|k| {
                let px = (0..PIXELS)
                    .map(|i| ((i * 7 + k * 13) % 256) as u8)
                    .collect();
                LabeledImage::new(px, (k % 10) as u8).unwrap()
            })
            .collect()
    }

    #[test]
    fn one_image_train_counts() {
        let net = Network::new(NetworkConfig::default()).unwrap();
        let rep = bench_run(&net, &images(1), Mode::Train, 0).unwrap();
        assert_eq!(rep.get(CycleClass::TrainPresentation).unwrap().count, 10);
        assert_eq!(rep.get(CycleClass::TrainSilence).unwrap().count, 10);
        assert_eq!(rep.encode.count, 1);
        assert!(rep.get(CycleClass::InferSilence).is_none());
    }

    #[test]
    fn hundred_images_with_warmup_excluded() {
        let net = Network::new(NetworkConfig::default()).unwrap();
        let imgs = images(100);
        let rep = bench_run(&net, &imgs, Mode::Infer, 7).unwrap();
        let p = rep.get(CycleClass::InferPresentation).unwrap();
        let s = rep.get(CycleClass::InferSilence).unwrap();
        assert_eq!(p.count + s.count, 2_000);
        assert_eq!(p.count, 1_000);
        for c in &rep.classes {
            assert!(c.min_us <= c.mean_us && c.mean_us <= c.max_us);
            assert!(c.p50_us <= c.p95_us && c.p95_us <= c.max_us);
        }
    }

    #[test]
    fn training_bench_leaves_network_alone() {
        let net = Network::new(NetworkConfig::default()).unwrap();
        let before = net.to_checkpoint_bytes();
        bench_run(&net, &images(3), Mode::Train, 2).unwrap();
        assert_eq!(net.to_checkpoint_bytes(), before);
    }

    #[test]
    fn empty_image_list_is_usage_error() {
        let net = Network::new(NetworkConfig::default()).unwrap();
        assert!(matches!(
            bench_run(&net, &[], Mode::Infer, 0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn percentiles_nearest_rank() {
        let mut xs: Vec<u64> = (1..=100).rev().map(|x| x * 1000).collect();
        let s = summarize(&mut xs);
        assert_eq!(
            (s.count, s.p50_us, s.p95_us, s.max_us, s.min_us),
            (100, 50.0, 95.0, 100.0, 1.0)
        );
        assert_eq!(s.mean_us, 50.5);
    }

    #[test]
    fn csv_round_trip() {
        let net = Network::new(NetworkConfig::default()).unwrap();
        let imgs = images(4);
        let rep = bench_run(&net, &imgs, Mode::Train, 0)
            .unwrap()
            .merge(bench_run(&net, &imgs, Mode::Infer, 0).unwrap());
        assert_eq!(rep.classes.len(), 4);
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 5);
        let rows = parse_csv(&csv).unwrap();
        for (row, c) in rows.iter().zip(&rep.classes) {
            assert_eq!(row.class, c.class);
            assert_eq!(row.count, c.count);
            assert_eq!(
                (row.mean_us, row.p50_us, row.p95_us, row.max_us),
                (c.mean_us, c.p50_us, c.p95_us, c.max_us)
            );
        }
    }

    #[test]
    fn emit_to_unwritable_path_fails() {
        let net = Network::new(NetworkConfig::default()).unwrap();
        let rep = bench_run(&net, &images(1), Mode::Infer, 0).unwrap();
        let err = emit_report(&rep, "/nonexistent-dir/latency.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("latency.csv");
        emit_report(&rep, &path).unwrap();
        assert!(dir.path().join("latency.csv.txt").exists());
    }
}
