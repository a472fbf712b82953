use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fhdos_core::addr::SourceMacStrategy;
use fhdos_core::campaign::{
    emit_report, guard_destination, run_extended_matrix, run_tifg_722, verify_tool_compliance, Backend, CampaignConfig,
    ReportFormat, Suite, VerifyOptions,
};
use fhdos_core::codec::{dissect, view_frame, wire_len_of, FhMessage, FrameClass, MacAddress, VlanTag};
use fhdos_core::forge::{build_attack_pcap, default_template, synthesize_template, EditSet, FrameTemplate, VlanEdit};
use fhdos_core::pcap::{read_pcap, write_pcap, PacketRecord};
use fhdos_core::rx::{meter, meter_raw, Meter, MeterReport};
use fhdos_core::tx::{
    loopback, run_attack, Clock, PortKind, RateMode, RateSchedule, RawLinkPort, TxOptions, TxPort, TxStats,
    LOOPBACK_QUEUE_BATCHES,
};
use log::{info, warn};

#[derive(Parser)]
#[command(name = "fhdos", version, about = "O-RAN fronthaul C/U-Plane DoS test tool")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build an attack capture of a given volume.
    Forge(ForgeArgs),
    /// Decode the fronthaul frames in a capture.
    Dissect(DissectArgs),
    /// Replay frames at a paced rate on a port.
    Attack(AttackArgs),
    /// Per-second traffic report from a live port or a capture.
    Meter(MeterArgs),
    /// Self-check the transmit path over loopback.
    Verify(VerifyArgs),
    /// Run a PASS/FAIL campaign.
    Matrix(MatrixArgs),
}

#[derive(Args)]
struct FrameSource {
    /// Frames to replay, read from a capture.
    #[arg(long, conflicts_with = "template")]
    pcap: Option<PathBuf>,
    /// Synthesized frame as <class>[:<wire bytes>], e.g. cplane-dl:64.
    #[arg(long)]
    template: Option<String>,
}

#[derive(Args)]
struct EditArgs {
    /// spoof:<mac> | random[:seed] | broadcast | same-as-dst | fixed:<mac>
    #[arg(long)]
    src: Option<SourceMacStrategy>,
    #[arg(long)]
    dst: Option<MacAddress>,
    /// Set or replace the 802.1Q tag.
    #[arg(long, conflicts_with = "strip_vlan")]
    vlan: Option<u16>,
    #[arg(long)]
    vlan_pcp: Option<u8>,
    #[arg(long)]
    strip_vlan: bool,
    /// Addresses random sources must avoid.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<MacAddress>,
}

#[derive(Args)]
struct ForgeArgs {
    #[command(flatten)]
    source: FrameSource,
    #[command(flatten)]
    edits: EditArgs,
    /// Volume in Mbit; frames are added until it is reached.
    #[arg(long, default_value_t = 10.0)]
    volume: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct DissectArgs {
    pcap: PathBuf,
    /// One JSON record per frame.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    source: FrameSource,
    #[command(flatten)]
    edits: EditArgs,
    /// Constant rate in Mbps.
    #[arg(long, conflicts_with = "ramp", required_unless_present = "ramp")]
    rate: Option<f64>,
    /// Incremental rate as <start>:<step> Mbps.
    #[arg(long)]
    ramp: Option<String>,
    #[arg(long, default_value_t = 30)]
    duration: u32,
    /// `loopback` or an interface name.
    #[arg(long, default_value = "loopback")]
    port: String,
    /// Pace against the wall clock (default on interfaces).
    #[arg(long)]
    realtime: bool,
    /// Loopback only: write the receive-side meter report here.
    #[arg(long)]
    meter_out: Option<PathBuf>,
    /// Required to transmit on a real interface.
    #[arg(long)]
    i_am_authorized: bool,
    /// Permit group destination addresses on a real interface.
    #[arg(long)]
    allow_broadcast_dst: bool,
}

#[derive(Args)]
struct MeterArgs {
    /// Interface to capture from.
    #[arg(long, conflicts_with = "pcap", required_unless_present = "pcap")]
    port: Option<String>,
    /// Meter a capture file instead, using its timestamps.
    #[arg(long)]
    pcap: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    duration: u32,
    /// Structured report, one record per second per class.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    track_sources: bool,
    #[arg(long, default_value_t = fhdos_core::rx::DEFAULT_DROP_FRACTION)]
    drop_fraction: f64,
    #[arg(long, default_value_t = fhdos_core::rx::DEFAULT_BASELINE_SECONDS)]
    baseline: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Length of each tier check in seconds.
    #[arg(long, default_value_t = 30)]
    tier_seconds: u32,
    #[arg(long, value_delimiter = ',', default_values_t = fhdos_core::attack::TIERS_MBPS)]
    tiers: Vec<u32>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long, default_value = "extended")]
    suite: Suite,
    /// sim:<calibration> or port:<ifname>
    #[arg(long, default_value = "sim:topology1")]
    backend: String,
    /// Directory for matrix.txt and matrix.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sim only: rerun each cell with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    repeats: u32,
    /// Add the broadcast-source column (no reference outcome).
    #[arg(long)]
    include_broadcast: bool,
    #[arg(long, default_value_t = fhdos_core::attack::DEFAULT_ATTACK_SECONDS)]
    attack_seconds: u32,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    odu_mac: Option<MacAddress>,
    #[arg(long)]
    oru_mac: Option<MacAddress>,
    #[arg(long)]
    i_am_authorized: bool,
    #[arg(long)]
    allow_broadcast_dst: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Forge(a) => forge(a),
        Cmd::Dissect(a) => dissect_cmd(a),
        Cmd::Attack(a) => attack(a),
        Cmd::Meter(a) => meter_cmd(a),
        Cmd::Verify(a) => return verify(a),
        Cmd::Matrix(a) => matrix(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        // output piped into a pager or `head` that exited early
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_template(spec: &str) -> Result<FrameTemplate> {
    let (class, size) = match spec.split_once(':') {
        Some((c, s)) => (c, Some(s.parse::<usize>().with_context(|| format!("bad size in '{spec}'"))?)),
        None => (spec, None),
    };
    let class: FrameClass = class.parse().map_err(anyhow::Error::msg)?;
    Ok(match size {
        Some(n) => synthesize_template(class, n)?,
        None => default_template(class)?,
    })
}

fn load_frames(src: &FrameSource) -> Result<Vec<FrameTemplate>> {
    if let Some(p) = &src.pcap {
        let recs = read_pcap(p).with_context(|| format!("reading {}", p.display()))?;
        let frames: Vec<_> = recs.into_iter().filter_map(|r| FrameTemplate::from_record(r).ok()).collect();
        if frames.is_empty() {
            bail!("{} holds no fronthaul frames", p.display());
        }
        Ok(frames)
    } else {
        Ok(vec![parse_template(src.template.as_deref().unwrap_or("cplane-dl"))?])
    }
}

fn edit_set(a: &EditArgs) -> Result<EditSet> {
    let mut e = EditSet { exclude: a.exclude.clone(), ..Default::default() };
    if let Some(s) = a.src {
        e = e.with_src(s);
    }
    if let Some(d) = a.dst {
        e = e.with_dst(d);
        e.exclude.push(d);
    }
    if a.strip_vlan {
        e = e.with_vlan(VlanEdit::Strip);
    } else if let Some(vid) = a.vlan {
        let tag = VlanTag::new(vid)?.with_pcp(a.vlan_pcp.unwrap_or(0));
        e = e.with_vlan(VlanEdit::Set(tag));
    }
    Ok(e)
}

fn forge(a: ForgeArgs) -> Result<()> {
    let frames = load_frames(&a.source)?;
    if frames.len() > 1 {
        warn!("capture holds {} frames; using the first as template", frames.len());
    }
    let recs = build_attack_pcap(&frames[0], a.volume, &edit_set(&a.edits)?)?;
    write_pcap(&a.out, &recs).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "{} frames of {} ({} wire bytes) for {} Mbit -> {}",
        recs.len(),
        frames[0].class,
        frames[0].wire_len,
        a.volume,
        a.out.display()
    );
    Ok(())
}

fn message_summary(m: &FhMessage) -> String {
    match m {
        FhMessage::CPlane(c) => {
            let t = c.header.timing;
            let ext = c.sections.iter().filter(|s| s.ext.is_some()).count();
            format!(
                "frame {} sf {} slot {} sym {} sections {} ext1 {}",
                t.frame_id,
                t.subframe_id,
                t.slot_id,
                t.symbol_id,
                c.sections.len(),
                ext
            )
        }
        FhMessage::UPlane(u) => {
            let t = u.header.timing;
            let prbs: u32 = u.sections.iter().map(|s| s.num_prbu as u32).sum();
            format!(
                "frame {} sf {} slot {} sym {} sections {} prbs {}",
                t.frame_id,
                t.subframe_id,
                t.slot_id,
                t.symbol_id,
                u.sections.len(),
                prbs
            )
        }
    }
}

fn dissect_cmd(a: DissectArgs) -> Result<()> {
    let recs = read_pcap(&a.pcap).with_context(|| format!("reading {}", a.pcap.display()))?;
    let out = io::stdout();
    let mut w = BufWriter::new(out.lock());
    for (i, rec) in recs.iter().enumerate() {
        let wire = wire_len_of(&rec.data);
        let class = fhdos_core::codec::classify_bytes(&rec.data);
        let decoded = dissect(&rec.data);
        if a.json {
            let v = match &decoded {
                Ok((f, m)) => serde_json::json!({
                    "index": i, "ts_us": rec.timestamp_micros(), "wire_len": wire, "class": class.as_str(),
                    "dst": f.dst.to_string(), "src": f.src.to_string(), "vlan": f.vlan, "message": m,
                }),
                Err(e) => serde_json::json!({
                    "index": i, "ts_us": rec.timestamp_micros(), "wire_len": wire, "class": class.as_str(),
                    "error": e.to_string(),
                }),
            };
            writeln!(w, "{v}")?;
            continue;
        }
        match decoded {
            Ok((f, m)) => {
                let vlan = f.vlan.map_or(String::new(), |t| format!(" vlan {}", t.vid));
                let seq = m.seq();
                writeln!(
                    w,
                    "{i:>6} {class:<9} {wire:>5}B {} -> {}{vlan} eaxc {:#06x} seq {} {}",
                    f.src,
                    f.dst,
                    m.eaxc_id(),
                    seq.sequence_id,
                    message_summary(&m)
                )?;
            }
            Err(e) => {
                let addrs = view_frame(&rec.data).map(|v| format!("{} -> {}", v.src, v.dst)).unwrap_or_default();
                writeln!(w, "{i:>6} {class:<9} {wire:>5}B {addrs} undecodable: {e}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn print_tx(stats: &TxStats, schedule: &RateSchedule) {
    for s in &stats.per_second {
        println!(
            "second {:>4}: {:>9} frames {:>10.3} Mbps (scheduled {})",
            s.second,
            s.frames,
            s.bytes as f64 * 8.0 / 1e6,
            s.scheduled_frames
        );
    }
    println!("{schedule}: sent {} frames ({} scheduled)", stats.total_frames, stats.scheduled_frames);
    if stats.shortfall_frames > 0 {
        warn!("host fell behind the schedule by {} frames", stats.shortfall_frames);
    }
}

fn attack(a: AttackArgs) -> Result<()> {
    let frames = load_frames(&a.source)?;
    let edits = edit_set(&a.edits)?;
    let mode: RateMode = match (&a.rate, &a.ramp) {
        (Some(r), _) => RateMode::Constant { mbps: *r },
        (None, Some(r)) => r.parse()?,
        (None, None) => unreachable!("clap requires one of --rate/--ramp"),
    };
    let schedule = RateSchedule { mode, duration_seconds: a.duration };
    schedule.validate()?;
    let bytes: Vec<Vec<u8>> = frames.iter().map(|f| f.record.data.clone()).collect();

    match a.port.parse::<PortKind>()? {
        PortKind::Loopback => {
            let clock = if a.realtime { Clock::RealTime } else { Clock::Simulated };
            let (mut port, rx) = loopback(LOOPBACK_QUEUE_BATCHES);
            let track = a.meter_out.is_some();
            let duration = a.duration;
            let h = std::thread::spawn(move || meter(&rx, duration, track));
            let stats = run_attack(&bytes, &schedule, &edits, &mut port, &TxOptions { clock, progress: None })?;
            drop(port);
            let rep = h.join().map_err(|_| anyhow::anyhow!("meter thread panicked"))?;
            print_tx(&stats, &schedule);
            println!("loopback received {} frames", rep.total_frames());
            if let Some(p) = a.meter_out {
                write_meter(&rep, &p)?;
            }
        }
        PortKind::RawLink(ifname) => {
            if !a.i_am_authorized {
                bail!("transmitting on '{ifname}' needs --i-am-authorized");
            }
            let dst = a.edits.dst.context("--dst is required on a live interface")?;
            guard_destination(dst, a.allow_broadcast_dst)?;
            if a.meter_out.is_some() {
                warn!("--meter-out applies to loopback only; run `meter` on the receiving side");
            }
            let mut port = RawLinkPort::open(&ifname)?;
            info!("sending on {ifname} toward {dst}: {schedule}");
            let stats = run_attack(
                &bytes,
                &schedule,
                &edits,
                &mut port as &mut dyn TxPort,
                &TxOptions { clock: Clock::RealTime, progress: None },
            )?;
            print_tx(&stats, &schedule);
        }
    }
    Ok(())
}

fn write_meter(rep: &MeterReport, path: &Path) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    rep.write_structured(&mut w)?;
    w.flush()?;
    Ok(())
}

fn meter_pcap(recs: &[PacketRecord], duration: u32, track: bool) -> MeterReport {
    let mut m = Meter::new(duration);
    if track {
        m = m.track_sources();
    }
    let t0 = recs.iter().map(PacketRecord::timestamp_micros).min().unwrap_or(0);
    for r in recs {
        m.observe((r.timestamp_micros() - t0) * 1000, &r.data);
    }
    m.finish()
}

fn meter_cmd(a: MeterArgs) -> Result<()> {
    let mut rep = if let Some(p) = &a.pcap {
        let recs = read_pcap(p).with_context(|| format!("reading {}", p.display()))?;
        meter_pcap(&recs, a.duration, a.track_sources)
    } else {
        let ifname = a.port.as_deref().expect("clap requires --port or --pcap");
        let mut port = RawLinkPort::open(ifname)?;
        info!("metering {ifname} for {} s", a.duration);
        meter_raw(&mut port, a.duration, a.track_sources)?
    };
    rep.detect(&[FrameClass::UPlaneDL, FrameClass::UPlaneUL], a.baseline, a.drop_fraction);
    rep.write_text(io::stdout().lock())?;
    if let Some(p) = &a.out {
        write_meter(&rep, p)?;
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> ExitCode {
    let r = verify_tool_compliance(&VerifyOptions { tier_seconds: a.tier_seconds, tiers: a.tiers });
    let out = io::stdout();
    let written = if a.json {
        serde_json::to_writer_pretty(out.lock(), &r).map_err(io::Error::from).and_then(|_| writeln!(out.lock()))
    } else {
        r.write_text(out.lock())
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if r.all_passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} compliance check(s) failed", r.failures().count());
        ExitCode::FAILURE
    }
}

fn matrix(a: MatrixArgs) -> Result<()> {
    let mut backend = Backend::parse(&a.backend)?;
    if let Backend::Port(live) = &mut backend {
        live.odu_mac = a.odu_mac.context("--odu-mac is required for a port backend")?;
        live.oru_mac = a.oru_mac.context("--oru-mac is required for a port backend")?;
        live.authorized = a.i_am_authorized;
        live.allow_broadcast_dst = a.allow_broadcast_dst;
        live.authorize()?;
    }
    let cfg = CampaignConfig {
        seed: a.seed,
        repeats: a.repeats,
        include_broadcast: a.include_broadcast,
        attack_seconds: a.attack_seconds,
        parallel: !a.sequential,
        ..CampaignConfig::new(backend)
    };
    let report = match a.suite {
        Suite::Tifg722 => run_tifg_722(&cfg)?,
        Suite::Extended => run_extended_matrix(&cfg)?,
    };
    emit_report(&report, ReportFormat::Text, io::stdout().lock())?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, fmt) in [("matrix.txt", ReportFormat::Text), ("matrix.jsonl", ReportFormat::Structured)] {
            let path = dir.join(name);
            let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
            emit_report(&report, fmt, &mut w)?;
            w.flush()?;
        }
        info!("wrote {}", dir.display());
    }
    Ok(())
}
