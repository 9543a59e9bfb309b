//! `hybridphy`: modulate packets, simulate hybrid runs and reproduce the
//! experiment suite from the command line.
//!
//! Exit status: 0 on success, 1 on domain errors (bad configs, missing
//! files, failed verification), 2 on usage errors.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hybridphy::experiments::{
    export_results, min_buffer_points, pn9_packet, power_law_fit, read_points_csv, retrofit_run, single_block_segments,
    MinBuffer, RetrofitScenario, Tables, BUNDLED_FIG7_SYNTHETIC, DEFAULT_PACKET_LEN,
    MIN_BUFFER_CAP, SWEEP_BUFFERS,
};
use hybridphy::hybrid::{split_execute, write_ndjson, HybridError, SplitPlan};
use hybridphy::io::{bundled_manifest, parse_packet_hex, read_packet, verify_golden, write_iq, IqFormat};
use hybridphy::phy::BlockKind;
use hybridphy::pipeline::{load_presets, rate_profile, standard_presets, PresetEntry, StandardPreset, STAGE_COUNT};
use hybridphy::stream::Stream;
use hybridphy::timing::{gated_sweep, phase_report, rate_rows, simulate, CostModel, DEFAULT_DAC_RING};

use manifest::Manifest;

/// An error caused by the invocation rather than by the inputs' content.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "hybridphy", version, about = "Hybrid hardware/software IEEE 802.15.4 transmit PHY simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Modulate one packet and write an IQ file.
    Modulate(ModulateArgs),
    /// Run one timed hybrid simulation and write its report.
    Simulate(SimulateArgs),
    /// Sweep gated fraction over software blocks and buffer sizes.
    Sweep(SweepArgs),
    /// Search the minimum buffer per (preset, block) and fit the power law.
    Minbuf(MinbufArgs),
    /// Fit size = k * rate^m to a two-column CSV.
    Fit(FitArgs),
    /// Run the retrofit scenarios: each modulation's unique blocks in software.
    Retrofit(RetrofitArgs),
    /// Check the modulator against the golden IQ corpus.
    Verify(VerifyArgs),
}

/// Software segment given as 1-based unified stage indices, `a..b` or `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Segment {
    first: usize,
    last: usize,
}

impl std::str::FromStr for Segment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once("..").unwrap_or((s, s));
        let num = |t: &str| -> Result<usize, String> {
            let v: usize = t.trim().parse().map_err(|_| format!("{t:?} is not a stage index"))?;
            if !(1..=STAGE_COUNT).contains(&v) {
                return Err(format!("stage index {v} outside 1..={STAGE_COUNT}"));
            }
            Ok(v - 1)
        };
        let (first, last) = (num(a)?, num(b)?);
        if first > last {
            return Err(format!("segment {s} runs backwards"));
        }
        Ok(Segment { first, last })
    }
}

impl Segment {
    fn pair(self) -> (usize, usize) {
        (self.first, self.last)
    }
}

fn parse_seed(s: &str) -> Result<u16, String> {
    let v = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u16::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("{s:?}: {e}"))?;
    if v == 0 || v > 0x1ff {
        return Err(format!("seed {v:#x} outside 0x001..=0x1ff"));
    }
    Ok(v)
}

#[derive(Args)]
struct PacketArgs {
    /// Packet file: raw bytes, or hex text when the name ends in `.hex`.
    #[arg(long, conflicts_with = "packet_hex")]
    packet: Option<PathBuf>,
    /// Packet bytes as hex.
    #[arg(long)]
    packet_hex: Option<String>,
    /// Length of the generated packet when none is given.
    #[arg(long, default_value_t = DEFAULT_PACKET_LEN)]
    packet_len: usize,
    /// PN9 seed of the generated packet.
    #[arg(long, default_value = "0x0a5", value_parser = parse_seed)]
    seed: u16,
}

impl PacketArgs {
    fn load(&self) -> Result<Vec<u8>> {
        let p = if let Some(path) = &self.packet {
            read_packet(path)?
        } else if let Some(h) = &self.packet_hex {
            parse_packet_hex(h).map_err(|e| usage(e.to_string()))?
        } else {
            if self.packet_len == 0 {
                return Err(usage("--packet-len must be at least 1"));
            }
            pn9_packet(self.packet_len, self.seed)?
        };
        Ok(p)
    }

    fn describe(&self, packet: &[u8]) -> serde_json::Value {
        json!({
            "source": match (&self.packet, &self.packet_hex) {
                (Some(p), _) => p.display().to_string(),
                (None, Some(_)) => "hex".to_string(),
                (None, None) => format!("pn9 seed {:#05x}", self.seed),
            },
            "len": packet.len(),
            "hex": hex_string(packet),
        })
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Args)]
struct ConfigArgs {
    /// Preset definitions (TOML); the bundled six presets when omitted.
    #[arg(long)]
    presets: Option<PathBuf>,
    /// Cost model (TOML); the bundled defaults when omitted.
    #[arg(long)]
    cost: Option<PathBuf>,
    /// DAC ring capacity in samples.
    #[arg(long, default_value_t = DEFAULT_DAC_RING)]
    dac_ring: usize,
}

impl ConfigArgs {
    fn presets(&self) -> Result<Vec<StandardPreset>> {
        match &self.presets {
            Some(p) => Ok(load_presets(p)?),
            None => Ok(standard_presets()),
        }
    }

    fn preset(&self, id: u8) -> Result<StandardPreset> {
        self.presets()?
            .into_iter()
            .find(|p| p.id == id)
            .ok_or_else(|| usage(format!("no preset with id {id}")))
    }

    fn cost(&self) -> Result<CostModel> {
        match &self.cost {
            Some(p) => Ok(CostModel::load(p)?),
            None => Ok(CostModel::default()),
        }
    }

    fn ring(&self) -> Result<usize> {
        if self.dac_ring == 0 {
            return Err(usage("--dac-ring must be at least 1"));
        }
        Ok(self.dac_ring)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ModulateArgs {
    #[arg(long, default_value_t = 1)]
    preset: u8,
    #[arg(long, default_value = "cf32")]
    format: IqFormat,
    /// Run this segment in software (1-based, `a..b`).
    #[arg(long)]
    sw: Option<Segment>,
    /// Interposer buffer in bus words, used with --sw.
    #[arg(long, default_value_t = 256)]
    buffer: usize,
    /// Also write the interposer event log as NDJSON.
    #[arg(long)]
    events: bool,
    #[command(flatten)]
    packet: PacketArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    preset: u8,
    /// Software segment (1-based, `a..b`); pure hardware when omitted.
    #[arg(long)]
    sw: Option<Segment>,
    /// Interposer buffer in bus words.
    #[arg(long, default_value_t = 256)]
    buffer: usize,
    /// Raise the read interrupt after this many words instead of a full buffer.
    #[arg(long)]
    irq_threshold: Option<usize>,
    /// Also write the timed event log as NDJSON.
    #[arg(long)]
    events: bool,
    #[command(flatten)]
    packet: PacketArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 1)]
    preset: u8,
    /// Buffer sizes in words, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = SWEEP_BUFFERS)]
    buffers: Vec<usize>,
    /// Segments to sweep (repeatable); every single enabled block when omitted.
    #[arg(long)]
    sw: Vec<Segment>,
    /// Run simulations on all cores.
    #[arg(long)]
    parallel: bool,
    #[command(flatten)]
    packet: PacketArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct MinbufArgs {
    /// Presets to include (repeatable); all when omitted.
    #[arg(long)]
    preset: Vec<u8>,
    /// Search only this segment instead of every single block.
    #[arg(long)]
    sw: Option<Segment>,
    /// Largest buffer tried, in words.
    #[arg(long, default_value_t = MIN_BUFFER_CAP)]
    cap: usize,
    #[command(flatten)]
    packet: PacketArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with a header row and `rate,size` columns; the bundled synthetic set when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Also write fit.json and a manifest here.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RetrofitArgs {
    /// Presets to retrofit (repeatable).
    #[arg(long, default_values_t = [1u8, 4, 6])]
    preset: Vec<u8>,
    #[arg(long, value_delimiter = ',', default_values_t = SWEEP_BUFFERS)]
    buffers: Vec<usize>,
    #[command(flatten)]
    packet: PacketArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Golden manifest; the bundled corpus when omitted.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Preset definitions to verify (TOML); the bundled presets when omitted.
    #[arg(long)]
    presets: Option<PathBuf>,
    /// Also write verify.json and a manifest here.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

/// The error chain, skipping causes the outer message already quotes.
fn render(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let c = cause.to_string();
        if !msg.contains(&c) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&c);
        }
    }
    msg
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Modulate(a) => modulate(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Minbuf(a) => minbuf(a),
        Command::Fit(a) => fit(a),
        Command::Retrofit(a) => retrofit(a),
        Command::Verify(a) => verify(a),
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Builds a plan and maps segment problems to usage errors.
fn plan_for(preset: &StandardPreset, sw: Option<Segment>, buffer: usize, threshold: Option<usize>) -> Result<SplitPlan> {
    let Some(seg) = sw else {
        return Ok(SplitPlan::hardware());
    };
    let mut plan = SplitPlan::software(seg.first, seg.last, buffer);
    if let Some(t) = threshold {
        plan = plan.with_irq_threshold(t);
    }
    plan.validate(&preset.pipeline).map_err(|e| match e {
        HybridError::DisabledStage(k) => usage(format!(
            "--sw: stage {} ({k}) is not used by preset {}",
            k.index() + 1,
            preset.id
        )),
        e @ (HybridError::ZeroBuffer | HybridError::BadThreshold { .. }) => usage(e.to_string()),
        e => anyhow!(e),
    })?;
    Ok(plan)
}

fn preset_config(p: &StandardPreset) -> serde_json::Value {
    serde_json::to_value(PresetEntry::from_preset(p)).unwrap_or(serde_json::Value::Null)
}

fn modulate(a: ModulateArgs) -> Result<()> {
    let preset = a.config.preset(a.preset)?;
    let packet = a.packet.load()?;
    let plan = plan_for(&preset, a.sw, a.buffer, None)?;
    out_dir(&a.out.out)?;
    let run = split_execute(&preset.pipeline, &plan, &packet)?;
    let Stream::Iq(iq) = run.output else {
        bail!("preset {} does not end in IQ samples", preset.id);
    };
    let name = format!("preset{}.{}.iq", preset.id, a.format);
    write_iq(&a.out.out.join(&name), &iq, a.format, u16::from(preset.id), preset.sample_rate)?;
    let mut outputs = vec![name];
    if a.events {
        let f = fs::File::create(a.out.out.join("events.ndjson"))?;
        write_ndjson(&run.events, std::io::BufWriter::new(f))?;
        outputs.push("events.ndjson".into());
    }
    Manifest::new("modulate")
        .config(json!({
            "preset": preset_config(&preset),
            "plan": plan,
            "format": a.format,
            "packet": a.packet.describe(&packet),
            "samples": iq.len(),
            "digest": hybridphy::stream::iq_digest(&iq),
        }))
        .outputs(outputs)
        .write(&a.out.out)?;
    println!("{} samples -> {}", iq.len(), a.out.out.join(format!("preset{}.{}.iq", preset.id, a.format)).display());
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let preset = a.config.preset(a.preset)?;
    let cost = a.config.cost()?;
    let ring = a.config.ring()?;
    let packet = a.packet.load()?;
    let plan = plan_for(&preset, a.sw, a.buffer, a.irq_threshold)?;
    out_dir(&a.out.out)?;
    let report = simulate(&preset, &plan, &packet, &cost, ring)?;
    write_json(&a.out.out.join("report.json"), &report)?;
    write_json(&a.out.out.join("phases.json"), &phase_report(&report))?;
    let mut outputs = vec!["report.json".to_string(), "phases.json".to_string()];
    if a.events {
        let f = fs::File::create(a.out.out.join("events.ndjson"))?;
        write_ndjson(&report.events, std::io::BufWriter::new(f))?;
        outputs.push("events.ndjson".into());
    }
    Manifest::new("simulate")
        .config(json!({
            "preset": preset_config(&preset),
            "plan": plan,
            "cost": cost,
            "dac_ring": ring,
            "packet": a.packet.describe(&packet),
        }))
        .outputs(outputs)
        .write(&a.out.out)?;
    println!(
        "gated {:.4} (after init {:.4}), underrun {}, {} cycles",
        report.gated_fraction, report.gated_fraction_after_init, report.underrun, report.total_cycles
    );
    Ok(())
}

fn check_buffers(buffers: &[usize]) -> Result<()> {
    if buffers.is_empty() || buffers.contains(&0) {
        return Err(usage("--buffers needs positive sizes"));
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let preset = a.config.preset(a.preset)?;
    let cost = a.config.cost()?;
    let ring = a.config.ring()?;
    let packet = a.packet.load()?;
    check_buffers(&a.buffers)?;
    let segments: Vec<(usize, usize)> = if a.sw.is_empty() {
        single_block_segments(&preset)
    } else {
        for s in &a.sw {
            plan_for(&preset, Some(*s), 1, None)?;
        }
        a.sw.iter().map(|s| s.pair()).collect()
    };
    out_dir(&a.out.out)?;
    let rows = gated_sweep(&preset, &a.buffers, &segments, &packet, &cost, ring, a.parallel)?;
    let rates = rate_rows(&rate_profile(&preset.pipeline, &preset)?);
    let tables = Tables {
        sweep: rows.clone(),
        rates: vec![(preset.id, rates)],
        ..Tables::default()
    };
    let files = export_results(&tables, &a.out.out)?;
    write_json(&a.out.out.join("sweep.json"), &rows)?;
    let mut outputs = file_names(&files);
    outputs.push("sweep.json".into());
    Manifest::new("sweep")
        .config(json!({
            "preset": preset_config(&preset),
            "buffers": a.buffers,
            "segments": segments.iter().map(|s| format!("{}..{}", s.0 + 1, s.1 + 1)).collect::<Vec<_>>(),
            "cost": cost,
            "dac_ring": ring,
            "packet": a.packet.describe(&packet),
        }))
        .outputs(outputs)
        .write(&a.out.out)?;
    for r in &rows {
        let seg = r.segment.map_or("hardware".to_string(), |s| seg_label(s));
        println!(
            "{seg:>16} buffer {:>6}  gated {:.4}  underrun {}",
            r.buffer_words, r.gated_fraction, r.underrun
        );
    }
    Ok(())
}

fn seg_label(s: (usize, usize)) -> String {
    let k = |i: usize| BlockKind::ALL[i].name();
    if s.0 == s.1 {
        k(s.0).to_string()
    } else {
        format!("{}-{}", k(s.0), k(s.1))
    }
}

fn file_names(files: &[PathBuf]) -> Vec<String> {
    files
        .iter()
        .filter_map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect()
}

fn minbuf(a: MinbufArgs) -> Result<()> {
    let cost = a.config.cost()?;
    let ring = a.config.ring()?;
    let packet = a.packet.load()?;
    if a.cap == 0 {
        return Err(usage("--cap must be at least 1"));
    }
    let all = a.config.presets()?;
    let presets: Vec<StandardPreset> = if a.preset.is_empty() {
        all
    } else {
        a.preset
            .iter()
            .map(|id| {
                all.iter()
                    .find(|p| p.id == *id)
                    .cloned()
                    .ok_or_else(|| usage(format!("no preset with id {id}")))
            })
            .collect::<Result<_>>()?
    };
    let mut grid = Vec::new();
    for p in &presets {
        match a.sw {
            Some(s) => {
                plan_for(p, Some(s), 1, None)?;
                grid.push((p.clone(), s.pair()));
            }
            None => grid.extend(single_block_segments(p).into_iter().map(|s| (p.clone(), s))),
        }
    }
    out_dir(&a.out.out)?;
    let points = min_buffer_points(&grid, &packet, &cost, ring, a.cap)?;
    // Thresholds at the one-word floor are censored; fit only the bracketed ones.
    let fit_pts: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.min_buffer.found().filter(|b| *b > 1).map(|b| (p.boundary_rate, b as f64)))
        .collect();
    let fit = power_law_fit(&fit_pts).ok();
    let tables = Tables {
        min_buffers: points.clone(),
        fit: fit.clone(),
        ..Tables::default()
    };
    let files = export_results(&tables, &a.out.out)?;
    write_json(
        &a.out.out.join("minbuf.json"),
        &json!({ "points": points, "fit": fit, "fit_points": fit_pts.len() }),
    )?;
    let mut outputs = file_names(&files);
    outputs.push("minbuf.json".into());
    Manifest::new("minbuf")
        .config(json!({
            "presets": presets.iter().map(preset_config).collect::<Vec<_>>(),
            "grid": grid.iter().map(|(p, s)| format!("p{}:{}..{}", p.id, s.0 + 1, s.1 + 1)).collect::<Vec<_>>(),
            "cap": a.cap,
            "fit_excludes": "points with minimum buffer 1 (censored at the floor)",
            "cost": cost,
            "dac_ring": ring,
            "packet": a.packet.describe(&packet),
        }))
        .outputs(outputs)
        .write(&a.out.out)?;
    for p in &points {
        let b = match p.min_buffer {
            MinBuffer::Found(b) => b.to_string(),
            MinBuffer::CannotKeepUp { cap } => format!(">{cap} (cannot keep up)"),
        };
        println!("{:<16} rate {:>12.1} words/s  min buffer {b}", p.label(), p.boundary_rate);
    }
    match &fit {
        Some(f) => println!("fit: m={} k={} r2={}", sig(f.m), sig(f.k), sig(f.r2)),
        None => eprintln!("note: fewer than 3 bracketed points, no fit"),
    }
    Ok(())
}

/// Six significant digits, printed in shortest form.
fn sig(x: f64) -> String {
    let r: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    format!("{r}")
}

fn fit(a: FitArgs) -> Result<()> {
    let (text, source) = match &a.input {
        Some(p) => (
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            p.display().to_string(),
        ),
        None => (BUNDLED_FIG7_SYNTHETIC.to_string(), "bundled synthetic dataset".to_string()),
    };
    let pts = read_points_csv(&text).map_err(|e| anyhow!("{source}: {e}"))?;
    let f = power_law_fit(&pts)?;
    println!("m={} k={} r2={} points={}", sig(f.m), sig(f.k), sig(f.r2), pts.len());
    if let Some(dir) = &a.out {
        out_dir(dir)?;
        write_json(&dir.join("fit.json"), &f)?;
        Manifest::new("fit")
            .config(json!({ "input": source }))
            .outputs(vec!["fit.json".into()])
            .write(dir)?;
    }
    Ok(())
}

fn retrofit(a: RetrofitArgs) -> Result<()> {
    let cost = a.config.cost()?;
    let ring = a.config.ring()?;
    let packet = a.packet.load()?;
    check_buffers(&a.buffers)?;
    let mut rows = Vec::new();
    let mut presets = Vec::new();
    for id in &a.preset {
        let p = a.config.preset(*id)?;
        let scenario = RetrofitScenario::standard(p.clone());
        rows.extend(retrofit_run(&scenario, &a.buffers, &packet, &cost, ring)?);
        presets.push(p);
    }
    out_dir(&a.out.out)?;
    let tables = Tables {
        retrofit: rows.clone(),
        ..Tables::default()
    };
    let files = export_results(&tables, &a.out.out)?;
    write_json(&a.out.out.join("retrofit.json"), &rows)?;
    let mut outputs = file_names(&files);
    outputs.push("retrofit.json".into());
    Manifest::new("retrofit")
        .config(json!({
            "presets": presets.iter().map(preset_config).collect::<Vec<_>>(),
            "buffers": a.buffers,
            "cost": cost,
            "dac_ring": ring,
            "packet": a.packet.describe(&packet),
        }))
        .outputs(outputs)
        .write(&a.out.out)?;
    for r in &rows {
        println!(
            "preset {} sw {}..{} buffer {:>6}  gated {:.4} (hardware {:.4}, delta {:.4})  iq identical {}",
            r.preset_id,
            r.sw_first + 1,
            r.sw_last + 1,
            r.buffer_words,
            r.retrofit_gated,
            r.baseline_gated,
            r.delta,
            r.iq_identical
        );
    }
    if let Some(r) = rows.iter().find(|r| !r.iq_identical) {
        bail!("preset {}: retrofit output differs from hardware", r.preset_id);
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let manifest = a.manifest.clone().unwrap_or_else(bundled_manifest);
    let presets = match &a.presets {
        Some(p) => load_presets(p)?,
        None => standard_presets(),
    };
    let report = verify_golden(&manifest, &presets)?;
    for r in &report.results {
        println!(
            "{} {:<28} samples {:>6}  max-abs {:.3e}{}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.samples,
            r.max_abs_error,
            r.detail.as_deref().map(|d| format!("  ({d})")).unwrap_or_default()
        );
    }
    if let Some(dir) = &a.out {
        out_dir(dir)?;
        write_json(&dir.join("verify.json"), &report)?;
        Manifest::new("verify")
            .config(json!({ "manifest": manifest.display().to_string() }))
            .outputs(vec!["verify.json".into()])
            .write(dir)?;
    }
    let failed = report.results.iter().filter(|r| !r.passed).count();
    if failed > 0 || report.results.is_empty() {
        bail!("{failed} of {} golden vectors failed", report.results.len());
    }
    Ok(())
}
