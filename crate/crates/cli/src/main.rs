//! Command-line frontend: scenario configs in, CSV results and manifests out.

mod manifest;
mod reference;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use manifest::ManifestBuilder;
use scersim::analysis::{
    clock_masking_time, osnma_symbol_budget, time_to_detect, KeyAssumption, OsnmaConfig,
    TimingAnalysis,
};
use scersim::calibration::{rayleigh_scale_r3, rayleigh_threshold, ThresholdSet};
use scersim::campaign::{
    calibrate_thresholds, estimate_pd, pd_curve, required_symbols, PdCurve, RequiredSymbols,
    SearchParams, ThresholdSpec,
};
use scersim::channel::{coherence_time, ChannelKind, L1_CARRIER_HZ};
use scersim::detector::Detector;
use scersim::Scenario64;

#[derive(Parser)]
#[command(
    name = "scersim",
    version,
    about = "Zero-delay SCER replay attacks on GNSS signals: simulation, detection and timing analysis"
)]
struct Cli {
    /// Worker threads for the Monte Carlo engine (results do not depend on
    /// this; it only changes wall time).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate detection thresholds from H0 trials and write them to a file.
    Calibrate(CalibrateArgs),
    /// Estimate detection probability over a grid of symbol counts.
    PdCurve(PdCurveArgs),
    /// Search for the smallest symbol count reaching a target Pd.
    Required(RequiredArgs),
    /// Closed-form timing and protocol-budget calculators.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Args)]
struct CalibrateArgs {
    /// Scenario config: a JSON path, or @case_id for a bundled reference.
    #[arg(long)]
    config: String,
    /// Target false-alarm probability.
    #[arg(long, default_value_t = 0.02)]
    pfa: f64,
    /// Number of H0 calibration trials.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Output threshold file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PdCurveArgs {
    #[arg(long)]
    config: String,
    /// Symbol-count grid: `start:stop:step` (inclusive) or a comma list.
    #[arg(long)]
    grid: String,
    /// H1 trials per grid point.
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    #[arg(long, default_value_t = 0.02)]
    pfa: f64,
    /// Pre-calibrated thresholds (fingerprint must match every grid point).
    #[arg(long, conflicts_with = "auto_calibrate")]
    thresholds: Option<PathBuf>,
    /// Recalibrate thresholds per grid point.
    #[arg(long)]
    auto_calibrate: bool,
    /// H0 trials per calibration when auto-calibrating.
    #[arg(long, default_value_t = 10_000)]
    cal_trials: u64,
    /// Threshold method when auto-calibrating.
    #[arg(long, value_enum, default_value_t = MethodArg::Empirical)]
    method: MethodArg,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also write a gnuplot companion script next to the CSV.
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Args)]
struct RequiredArgs {
    /// Scenario config (omit with --batch).
    #[arg(long, required_unless_present = "batch")]
    config: Option<String>,
    /// Detector to search (r1..r5).
    #[arg(long, default_value = "r3")]
    detector: String,
    #[arg(long, default_value_t = 0.9)]
    target_pd: f64,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    #[arg(long, default_value_t = 0.02)]
    pfa: f64,
    /// Largest symbol count before reporting not_reached.
    #[arg(long, default_value_t = 1000)]
    cap: usize,
    /// Final search resolution in symbols.
    #[arg(long, default_value_t = 10)]
    resolution: usize,
    /// auto = closed-form Rayleigh for R3 under AWGN, empirical otherwise.
    #[arg(long, value_enum, default_value_t = BatchMethodArg::Auto)]
    method: BatchMethodArg,
    #[arg(long, default_value_t = 10_000)]
    cal_trials: u64,
    /// Case label for the CSV row (defaults to the config file stem).
    #[arg(long)]
    case_id: Option<String>,
    /// Run every bundled representative case instead of one config.
    #[arg(long)]
    batch: bool,
    /// With --batch: print the case list without running anything.
    #[arg(long)]
    list_only: bool,
    #[arg(long, required_unless_present = "list_only")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Empirical,
    Rayleigh,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BatchMethodArg {
    Auto,
    Empirical,
    Rayleigh,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Spoofer estimation time and clock-stability masking budget.
    Timing {
        /// C/N0 of the real signal at the spoofer, dB-Hz.
        #[arg(long)]
        cn0: f64,
        /// Symbol error probability the spoofer accepts, in (0, 0.5).
        #[arg(long)]
        pe: f64,
        /// Victim clock fractional stability (e.g. 1e-7 for a TCXO).
        #[arg(long, default_value_t = 1e-7)]
        stability: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Channel coherence time c/(v*fc).
    Coherence {
        #[arg(long, conflicts_with = "speed_mps")]
        speed_kmh: Option<f64>,
        #[arg(long)]
        speed_mps: Option<f64>,
        #[arg(long, default_value_t = L1_CARRIER_HZ)]
        carrier_hz: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// OSNMA unpredictable-symbol budget and time-to-detect.
    Osnma {
        /// Signal duration in seconds (multiple of the block period).
        #[arg(long)]
        duration: u64,
        /// Count the first 64 TESLA key bits as unpredictable.
        #[arg(long)]
        key_unpredictable: bool,
        #[arg(long, default_value_t = 2)]
        mack_blocks: u64,
        #[arg(long, default_value_t = 20)]
        mac_bits: u64,
        #[arg(long, default_value_t = 4)]
        macs_per_block: u64,
        #[arg(long, default_value_t = 96)]
        key_bits: u64,
        /// Also report the time to accumulate this many symbols.
        #[arg(long)]
        required: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool not yet initialized");
    }
    let result = match cli.command {
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::PdCurve(args) => cmd_pd_curve(args),
        Command::Required(args) => cmd_required(args),
        Command::Analyze(cmd) => cmd_analyze(cmd),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

/// Resolve an output path against SCERSIM_OUT_DIR for relative paths.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("SCERSIM_OUT_DIR") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Load a scenario from a JSON file or a bundled `@case_id` reference.
fn load_config(spec: &str) -> Result<(Scenario64, serde_json::Value, String)> {
    let (text, label) = if let Some(case_id) = spec.strip_prefix('@') {
        let case = reference::find(case_id)
            .ok_or_else(|| anyhow!("unknown reference case `{case_id}`"))?;
        (case.json.to_string(), case_id.to_string())
    } else {
        let path = Path::new(spec);
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        (
            fs::read_to_string(path).with_context(|| format!("reading config {spec}"))?,
            label,
        )
    };
    let config: Scenario64 =
        serde_json::from_str(&text).with_context(|| format!("parsing config {spec}"))?;
    config
        .validate()
        .map_err(|e| anyhow!("config {spec}: {e}"))?;
    let echo = serde_json::to_value(&config)?;
    Ok((config, echo, label))
}

fn write_output(path: &Path, contents: &str, manifest: &mut ManifestBuilder) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    manifest.record_output(path);
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let (config, echo, _) = load_config(&args.config)?;
    if !(args.pfa > 0.0 && args.pfa < 1.0) {
        bail!("pfa must be in (0, 1), got {}", args.pfa);
    }
    let mut manifest = ManifestBuilder::start().with_config(echo, config.master_seed);
    let set = calibrate_thresholds(
        &config,
        args.pfa,
        ThresholdSpec::Empirical {
            calibration_trials: args.trials,
        },
    )?;

    println!(
        "calibrated thresholds (pfa={}, {} H0 trials, fingerprint {:#018x})",
        args.pfa,
        args.trials,
        config.h0_fingerprint()
    );
    for d in Detector::ALL {
        if let Some(e) = set.get(d) {
            println!("  {d}: gamma = {:.6e}", e.gamma);
        }
    }
    // Closed-form comparison for R3 where it applies.
    if config.channel.kind == ChannelKind::Awgn && !config.channel.noise_bypass {
        let n = config.begin_window().sample_count(config.sample_rate_f64());
        if n == config.end_window().sample_count(config.sample_rate_f64()) {
            let scale = rayleigh_scale_r3(config.noise_variance(), n, config.n_symbols);
            let closed = rayleigh_threshold(scale, args.pfa);
            let emp = set.get(Detector::R3).expect("r3 calibrated").gamma;
            println!(
                "  r3 closed-form (Rayleigh): {closed:.6e}  (empirical/closed = {:.4})",
                emp / closed
            );
        }
    }

    let out = resolve_out(&args.out);
    write_output(&out, &set.to_text(), &mut manifest)?;
    let mpath = manifest.finish(None)?;
    println!("wrote {} and {}", out.display(), mpath.display());
    Ok(())
}

/// Parse `start:stop:step` (inclusive) or a comma-separated list.
fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    let grid: Vec<usize> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("grid must be start:stop:step, got `{spec}`");
        }
        let (start, stop, step): (usize, usize, usize) =
            (parts[0].parse()?, parts[1].parse()?, parts[2].parse()?);
        if step == 0 || start == 0 || stop < start {
            bail!("grid must be positive with stop >= start");
        }
        (start..=stop).step_by(step).collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(Into::into))
            .collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        bail!("grid must be non-empty and strictly increasing");
    }
    Ok(grid)
}

fn cmd_pd_curve(args: PdCurveArgs) -> Result<()> {
    let (config, echo, _) = load_config(&args.config)?;
    let grid = parse_grid(&args.grid)?;
    let mut manifest = ManifestBuilder::start().with_config(echo, config.master_seed);

    let curve: PdCurve = if let Some(tpath) = &args.thresholds {
        let text = fs::read_to_string(tpath)
            .with_context(|| format!("reading thresholds {}", tpath.display()))?;
        // Every grid point must carry the thresholds' fingerprint; without
        // --auto-calibrate a mismatch is an error, per the threshold model
        // (statistic distributions depend on N_b).
        let mut rows = Vec::new();
        for &n_b in &grid {
            let cfg = config.with_n_symbols(n_b);
            let set = ThresholdSet::<f64>::from_text_for_config(&text, &cfg)
                .map_err(|e| anyhow!("{e}; rerun with --auto-calibrate to recalibrate per n_b"))?;
            let est = estimate_pd(&cfg, &set, args.trials)?;
            for d in Detector::ALL {
                if let Some(p) = est.get(d) {
                    rows.push(scersim::campaign::PdCurveRow {
                        detector: d,
                        n_b,
                        pd: p.pd,
                        ci_low: p.ci_low,
                        ci_high: p.ci_high,
                        trials: p.trials,
                    });
                }
            }
        }
        PdCurve {
            rows,
            trials_per_point: args.trials,
            pfa: args.pfa,
        }
    } else {
        if !args.auto_calibrate {
            bail!("provide --thresholds FILE or set --auto-calibrate");
        }
        let spec = match args.method {
            MethodArg::Empirical => ThresholdSpec::Empirical {
                calibration_trials: args.cal_trials,
            },
            MethodArg::Rayleigh => ThresholdSpec::RayleighR3,
        };
        pd_curve(&config, &grid, args.trials, args.pfa, spec)?
    };

    let out = resolve_out(&args.out);
    write_output(&out, &curve.to_csv(), &mut manifest)?;
    if args.gnuplot {
        let gp = gnuplot_script(&out);
        let gp_path = out.with_extension("gp");
        write_output(&gp_path, &gp, &mut manifest)?;
    }
    let mpath = manifest.finish(None)?;
    println!("wrote {} and {}", out.display(), mpath.display());
    Ok(())
}

fn gnuplot_script(csv: &Path) -> String {
    let name = csv
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!(
        "set datafile separator ','\n\
         set key left top\n\
         set xlabel 'unpredictable symbols N_b'\n\
         set ylabel 'detection probability'\n\
         set yrange [0:1]\n\
         plot for [d in \"r1 r2 r3 r4 r5\"] '{name}' \
         using 2:(strcol(1) eq d ? $3 : 1/0) with linespoints title d\n"
    )
}

const REQUIRED_CSV_HEADER: &str = "case_id,detector,n_b_required,target_pd,grid_resolution";

fn required_row(case_id: &str, res: &RequiredSymbols) -> String {
    let n_b = res
        .n_b_required
        .map(|n| n.to_string())
        .unwrap_or_else(|| "not_reached".to_string());
    format!(
        "{case_id},{},{n_b},{},{}",
        res.detector, res.target_pd, res.grid_resolution
    )
}

fn threshold_spec_for(
    method: BatchMethodArg,
    detector: Detector,
    config: &Scenario64,
    cal_trials: u64,
) -> Result<ThresholdSpec> {
    let rayleigh_ok = detector == Detector::R3
        && config.channel.kind == ChannelKind::Awgn
        && !config.channel.noise_bypass;
    Ok(match method {
        BatchMethodArg::Empirical => ThresholdSpec::Empirical {
            calibration_trials: cal_trials,
        },
        BatchMethodArg::Rayleigh => {
            if !rayleigh_ok {
                bail!("closed-form Rayleigh thresholds only apply to r3 under AWGN");
            }
            ThresholdSpec::RayleighR3
        }
        BatchMethodArg::Auto => {
            if rayleigh_ok {
                ThresholdSpec::RayleighR3
            } else {
                ThresholdSpec::Empirical {
                    calibration_trials: cal_trials,
                }
            }
        }
    })
}

fn cmd_required(args: RequiredArgs) -> Result<()> {
    let detector = Detector::parse(&args.detector).ok_or_else(|| {
        anyhow!(
            "unknown detector `{}`; valid names: r1, r2, r3, r4, r5",
            args.detector
        )
    })?;

    if args.batch {
        if args.list_only {
            for case in &reference::TABLE_CASES {
                println!("{}", case.case_id);
            }
            return Ok(());
        }
        let out = resolve_out(args.out.as_deref().expect("clap enforces --out"));
        let mut manifest = ManifestBuilder::start();
        let mut csv = String::from(REQUIRED_CSV_HEADER);
        csv.push('\n');
        for case in &reference::TABLE_CASES {
            let (config, _, _) = load_config(&format!("@{}", case.case_id))?;
            let spec = threshold_spec_for(args.method, detector, &config, args.cal_trials)?;
            let params = SearchParams {
                target_pd: args.target_pd,
                trials_per_point: args.trials,
                pfa: args.pfa,
                cap: args.cap,
                resolution: args.resolution,
                threshold_spec: spec,
            };
            let res = required_symbols(&config, detector, &params)?;
            eprintln!(
                "{}: {} (published ~{})",
                case.case_id,
                res.n_b_required
                    .map(|n| n.to_string())
                    .unwrap_or_else(|| "not_reached".into()),
                case.published_n_b
                    .map(|n| n.to_string())
                    .unwrap_or_default()
            );
            csv.push_str(&required_row(case.case_id, &res));
            csv.push('\n');
        }
        write_output(&out, &csv, &mut manifest)?;
        let mpath = manifest.finish(None)?;
        println!("wrote {} and {}", out.display(), mpath.display());
        return Ok(());
    }

    let config_spec = args.config.as_deref().expect("clap enforces --config");
    let (config, echo, label) = load_config(config_spec)?;
    let case_id = args.case_id.clone().unwrap_or(label);
    let spec = threshold_spec_for(args.method, detector, &config, args.cal_trials)?;
    let params = SearchParams {
        target_pd: args.target_pd,
        trials_per_point: args.trials,
        pfa: args.pfa,
        cap: args.cap,
        resolution: args.resolution,
        threshold_spec: spec,
    };
    let res = required_symbols(&config, detector, &params)?;

    println!(
        "{case_id}: detector {} reaches Pd >= {} at N_b = {}",
        detector,
        args.target_pd,
        res.n_b_required
            .map(|n| n.to_string())
            .unwrap_or_else(|| "not_reached".into())
    );
    if let Some(x) = res.interpolated_crossing {
        println!("  interpolated crossing: {x:.1}");
    }
    for p in &res.trace {
        println!(
            "  n_b {:4}: pd {:.3} [{:.3}, {:.3}]",
            p.n_b, p.pd, p.ci_low, p.ci_high
        );
    }

    let mut manifest = ManifestBuilder::start().with_config(echo, config.master_seed);
    let out = resolve_out(args.out.as_deref().expect("clap enforces --out"));
    let csv = format!("{REQUIRED_CSV_HEADER}\n{}\n", required_row(&case_id, &res));
    write_output(&out, &csv, &mut manifest)?;
    let mpath = manifest.finish(None)?;
    println!("wrote {} and {}", out.display(), mpath.display());
    Ok(())
}

fn cmd_analyze(cmd: AnalyzeCommand) -> Result<()> {
    match cmd {
        AnalyzeCommand::Timing {
            cn0,
            pe,
            stability,
            out,
        } => {
            let ta = TimingAnalysis::new(cn0, pe, stability)?;
            println!("spoofer decision time: t = erfc_inv(2*pe)^2 / cn0_linear");
            println!("  cn0 = {cn0} dB-Hz, pe = {pe}");
            println!("  t_spof = {:.4} us", ta.t_spof * 1e6);
            println!(
                "  masking time at clock stability {stability:e}: {:.1} s (= t_spof / stability)",
                ta.masking_time
            );
            if let Some(out) = out {
                let csv = format!(
                    "cn0_dbhz,pe,t_spof_s,clock_stability,masking_time_s\n{cn0},{pe},{:e},{stability:e},{:e}\n",
                    ta.t_spof, ta.masking_time
                );
                write_csv_with_manifest(&out, &csv)?;
            }
        }
        AnalyzeCommand::Coherence {
            speed_kmh,
            speed_mps,
            carrier_hz,
            out,
        } => {
            let v = match (speed_kmh, speed_mps) {
                (Some(kmh), None) => kmh / 3.6,
                (None, Some(mps)) => mps,
                (None, None) => bail!("provide --speed-kmh or --speed-mps"),
                _ => unreachable!("clap conflicts_with"),
            };
            if v < 0.0 {
                bail!("speed must be non-negative");
            }
            let tc = coherence_time(v, carrier_hz);
            println!("coherence time: T_c = c / (v * f_c)");
            println!("  v = {v:.3} m/s, f_c = {carrier_hz:e} Hz");
            if tc.is_infinite() {
                println!("  T_c = infinite (static receiver)");
            } else {
                println!("  T_c = {:.3} ms", tc * 1e3);
            }
            if let Some(out) = out {
                let csv =
                    format!("speed_mps,carrier_hz,coherence_time_s\n{v},{carrier_hz:e},{tc:e}\n");
                write_csv_with_manifest(&out, &csv)?;
            }
        }
        AnalyzeCommand::Osnma {
            duration,
            key_unpredictable,
            mack_blocks,
            mac_bits,
            macs_per_block,
            key_bits,
            required,
            out,
        } => {
            let cfg = OsnmaConfig {
                mack_blocks_per_30s: mack_blocks,
                mac_bits,
                macs_per_block,
                key_bits,
                key_assumption: if key_unpredictable {
                    KeyAssumption::First64Unpredictable
                } else {
                    KeyAssumption::Predictable
                },
                block_period_s: 30 / mack_blocks.max(1),
            };
            let budget = osnma_symbol_budget(&cfg, duration)?;
            println!(
                "unpredictable symbols in {duration} s: {budget} ({} per {} s block, key {})",
                cfg.symbols_per_block(),
                cfg.block_period_s,
                if key_unpredictable {
                    "first 64 bits unpredictable"
                } else {
                    "predictable"
                }
            );
            let mut extra = String::new();
            if let Some(req) = required {
                let ttd = time_to_detect(req, &cfg)?;
                println!("time to accumulate {req} symbols: {ttd} s");
                // reference masking budget for a TCXO-grade clock
                let masking = clock_masking_time(26e-6, 1e-7);
                println!(
                    "  (compare: masking a 26 us delay at 1e-7 stability needs {masking:.0} s)"
                );
                extra = format!(",{req},{ttd}");
            }
            if let Some(out) = out {
                let key = if key_unpredictable {
                    "first_64_unpredictable"
                } else {
                    "predictable"
                };
                let header = if required.is_some() {
                    "duration_s,key_assumption,unpredictable_symbols,required_symbols,time_to_detect_s"
                } else {
                    "duration_s,key_assumption,unpredictable_symbols"
                };
                let csv = format!("{header}\n{duration},{key},{budget}{extra}\n");
                write_csv_with_manifest(&out, &csv)?;
            }
        }
    }
    Ok(())
}

fn write_csv_with_manifest(out: &Path, csv: &str) -> Result<()> {
    let out = resolve_out(out);
    let mut manifest = ManifestBuilder::start();
    write_output(&out, csv, &mut manifest)?;
    let mpath = manifest.finish(None)?;
    println!("wrote {} and {}", out.display(), mpath.display());
    Ok(())
}
