mod args;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use log::{info, warn};
use rayon::prelude::*;

use swapsim::experiment::{report_row, run, Scenario};
use swapsim::export::{write_report_csv, write_trace_csv, write_trace_json, ReportRow};
use swapsim::model::{normalized_intensity, zoo, HardwareProfile, NnSpec, DEFAULT_EPSILON_FRAC};
use swapsim::sim::ScheduleTrace;

use args::{
    secs_to_ns, size_label, Cli, Command, HardwareArgs, SimulateArgs, SweepArgs, ValidateArgs,
};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SWAPSIM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_network(spec: &str) -> Result<NnSpec> {
    let path = Path::new(spec);
    if path.exists() {
        return NnSpec::from_path(path).with_context(|| format!("loading {}", path.display()));
    }
    zoo::by_name(spec).ok_or_else(|| {
        anyhow!(
            "`{spec}` is neither a file nor a built-in network ({})",
            zoo::NAMES.join(", ")
        )
    })
}

fn load_hardware(args: &HardwareArgs) -> Result<HardwareProfile> {
    let mut hw = match &args.hw {
        Some(p) => {
            HardwareProfile::from_path(p).with_context(|| format!("loading {}", p.display()))?
        }
        None => zoo::stm32f746(),
    };
    if let Some(sec) = args.io_overhead {
        hw.io_fixed_overhead_sec = sec;
        hw.validate()?;
    }
    Ok(hw)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_trace(path: &Path, trace: &ScheduleTrace, nn: &NnSpec) -> Result<()> {
    let out = create(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        write_trace_csv(trace, out)?;
    } else {
        let names: Vec<String> = nn.layers.iter().map(|l| l.name.clone()).collect();
        write_trace_json(trace, &names, out)?;
    }
    info!("wrote trace {}", path.display());
    Ok(())
}

fn emit_rows(rows: &[ReportRow], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            write_report_csv(rows, &mut w)?;
            w.flush()?;
            info!("wrote {} report row(s) to {}", rows.len(), p.display());
        }
        None => write_report_csv(rows, io::stdout().lock())?,
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let nn = load_network(&a.nn)?;
    let hw = load_hardware(&a.hardware)?;
    let mut s = Scenario::new(nn, hw, a.buffer, a.frames);
    if let Some(sram) = a.sram {
        s = s.with_sram(sram);
    }
    s.arrival_interval_ns = secs_to_ns(a.arrival_interval)?;
    let outcome = run(&s)?;
    info!(
        "{}: {} tasks, makespan {:.3} s",
        s.nn.name,
        outcome.graph.len(),
        outcome.report.makespan_sec
    );
    if let Some(path) = &a.trace {
        write_trace(path, &outcome.trace, &s.nn)?;
    }
    emit_rows(&[report_row(&s, &outcome)], a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let hw = load_hardware(&a.hardware)?;
    let networks =
        a.nn.iter()
            .map(|n| load_network(n))
            .collect::<Result<Vec<_>>>()?;
    let interval = secs_to_ns(a.arrival_interval)?;
    if a.trace && a.out.is_none() {
        bail!("--trace in a sweep needs --out <directory>");
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let mut grid = Vec::new();
    let mut skipped = 0;
    for nn in &networks {
        for &sram in &a.sram {
            for &buffer in &a.buffer {
                if sram < 4 * buffer {
                    warn!(
                        "skipping {} at {} SRAM: four {} buffers do not fit",
                        nn.name,
                        size_label(sram),
                        size_label(buffer)
                    );
                    skipped += 1;
                    continue;
                }
                let mut s = Scenario::new(nn.clone(), hw.clone(), buffer, a.frames).with_sram(sram);
                s.arrival_interval_ns = interval;
                grid.push(s);
            }
        }
    }

    let trace_dir: Option<PathBuf> = a.out.clone().filter(|_| a.trace);
    let rows: Vec<Result<ReportRow>> = grid
        .par_iter()
        .map(|s| {
            let o = run(s).with_context(|| {
                format!(
                    "{} at {}/{}",
                    s.nn.name,
                    size_label(s.sram_bytes),
                    size_label(s.buffer_bytes)
                )
            })?;
            if let Some(dir) = &trace_dir {
                let name = format!(
                    "{}-{}-{}.trace.json",
                    s.nn.name,
                    size_label(s.sram_bytes),
                    size_label(s.buffer_bytes)
                );
                write_trace(&dir.join(name), &o.trace, &s.nn)?;
            }
            info!(
                "{} {}/{} done",
                s.nn.name,
                size_label(s.sram_bytes),
                size_label(s.buffer_bytes)
            );
            Ok(report_row(s, &o))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let report = a.out.as_ref().map(|d| d.join("report.csv"));
    emit_rows(&rows, report.as_deref())?;
    if skipped > 0 {
        eprintln!("{skipped} grid point(s) skipped: SRAM must hold at least four buffers");
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(a: ValidateArgs) -> Result<ExitCode> {
    let hw = match &a.hw {
        Some(p) => {
            HardwareProfile::from_path(p).with_context(|| format!("loading {}", p.display()))?
        }
        None => zoo::stm32f746(),
    };
    let mut failures = 0;
    for path in &a.paths {
        match validate_file(path, &hw) {
            Ok(text) => print!("{text}"),
            Err(e) => {
                failures += 1;
                eprintln!("{}: {e:#}", path.display());
            }
        }
    }
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn validate_file(path: &Path, hw: &HardwareProfile) -> Result<String> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if !text.contains("\"layers\"") {
        let profile = HardwareProfile::from_json(&text)?;
        return Ok(format!(
            "{}: hardware `{}`: {:.0} MOPS, {:.1} MB/s, {:.1} ms per IO, {} SRAM\n",
            path.display(),
            profile.name,
            profile.cpu_ops_per_sec / 1e6,
            profile.io_bytes_per_sec / 1e6,
            profile.io_fixed_overhead_sec * 1e3,
            size_label(profile.sram_bytes)
        ));
    }
    let nn = NnSpec::from_json(&text)?;
    let classes = nn.classify(hw, DEFAULT_EPSILON_FRAC)?;
    let mut out = String::new();
    out.push_str(&format!(
        "{}: network `{}`: {} layers, footprint {:.2} MB, weights {:.2} MB\n",
        path.display(),
        nn.name,
        nn.layers.len(),
        nn.footprint_bytes() as f64 / 1e6,
        nn.weight_bytes() as f64 / 1e6
    ));
    out.push_str(&format!(
        "  {:<16} {:<15} {:>12} {:>12} {:>12} {:>14} {:>9}  class\n",
        "layer", "kind", "input", "weight", "output", "ops", "N"
    ));
    for (l, class) in nn.layers.iter().zip(&classes) {
        out.push_str(&format!(
            "  {:<16} {:<15} {:>12} {:>12} {:>12} {:>14} {:>9.3}  {}\n",
            l.name,
            l.kind.to_string(),
            l.input_bytes,
            l.weight_bytes,
            l.output_bytes,
            l.ops,
            normalized_intensity(l, hw)?,
            class
        ));
    }
    let c = nn.class_counts(hw, DEFAULT_EPSILON_FRAC)?;
    out.push_str(&format!(
        "  {} compute-bound / {} IO-bound / {} insignificant\n",
        c.compute_bound, c.io_bound, c.insignificant
    ));
    Ok(out)
}
