mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use nodal_core::experiments::{
    bracketed_spectrum, certificate_from, competition_flip, eps_sweep, merged_spectrum, sector_competition,
    spec_hash, theorem_verdict, ExperimentError, Preset,
};
use nodal_core::geometry::{quarter_boundary, reflect_full};
use nodal_core::nodal::write_segments_csv;
use nodal_core::render::{render_svg, Panel};
use nodal_core::DomainSpec;
use thiserror::Error;

use config::{Experiment, Overrides, Resolved};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("no domain given; pass --config PATH or --preset NAME")]
    MissingDomain,
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::MissingDomain | CliError::Io(_) => 2,
            CliError::Experiment(ExperimentError::Argument(_) | ExperimentError::Geometry(_)) => 2,
            CliError::Experiment(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nodal", version, about = "Eigenvalues and nodal lines of a rectangle with thin attached tubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// theorem-i or theorem-ii; `render` accepts a comma-separated list.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Comma-separated tube widths.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, global = true, value_name = "N")]
    kmax: Option<usize>,
    /// Output directory [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long = "target-h", global = true, value_name = "X")]
    target_h: Option<f64>,
    /// Truncation of the tubes at |x2| = L.
    #[arg(long = "L", global = true, value_name = "X")]
    trunc: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run the experiment named in the config file.
    Run,
    /// Merged spectrum of all four parity sectors.
    Spectrum,
    /// Dirichlet/Neumann bounds for the merged spectrum.
    Bracket,
    /// Spectra along a list of tube widths.
    EpsSweep,
    /// Which sector owns the second eigenvalue.
    Sectors,
    /// Nodal-line verdict for the second eigenfunction.
    Verdict,
    /// Domain outline with the nodal line of the second eigenfunction.
    Render,
}

struct Outcome {
    summary: String,
    passed: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(o) => {
            println!("{}", o.summary);
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::MissingDomain) {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        eps: c.eps.clone(),
        kmax: c.kmax,
        out: c.out.clone(),
        seed: c.seed,
        target_h: c.target_h,
        trunc: c.trunc,
    }
}

fn parse_preset(name: &str) -> Result<Preset, CliError> {
    Preset::parse(name.trim())
        .ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}; expected theorem-i or theorem-ii")))
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let c = &cli.common;
    let ov = overrides(c);
    let config = c.config.as_deref().map(config::load).transpose()?;
    let experiment = match cli.command {
        Command::Render => {
            let presets = match &c.preset {
                Some(list) => list.split(',').map(|p| parse_preset(p).map(Some)).collect::<Result<Vec<_>, _>>()?,
                None => vec![None],
            };
            let runs = presets
                .into_iter()
                .map(|p| config::resolve(config.clone(), p, &ov))
                .collect::<Result<Vec<_>, _>>()?;
            return render(&runs);
        }
        Command::Run => {
            let Some(cfg) = &config else {
                return Err(CliError::MissingDomain);
            };
            cfg.experiment
                .ok_or_else(|| CliError::Usage("config has no \"experiment\" field".into()))?
        }
        Command::Spectrum => Experiment::Spectrum,
        Command::Bracket => Experiment::Bracket,
        Command::EpsSweep => Experiment::EpsSweep,
        Command::Sectors => Experiment::Sectors,
        Command::Verdict => Experiment::Verdict,
    };
    let preset = c.preset.as_deref().map(parse_preset).transpose()?;
    let run = config::resolve(config, preset, &ov)?;
    execute(experiment, &run)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_with(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", dir.join(name).display())))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    write_with(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn execute(experiment: Experiment, run: &Resolved) -> Result<Outcome, CliError> {
    let (spec, num, dir) = (&run.spec, &run.numerics, run.output_dir.as_path());
    write_json(dir, "spec.json", spec)?;
    let tag = format!("{} {} [{}]", experiment.name(), run.label, spec_hash(spec));
    let summary = match experiment {
        Experiment::Spectrum => {
            let res = merged_spectrum(spec, num, run.kmax.unwrap_or(6))?;
            write_with(dir, "spectrum.csv", |w| res.table.write_csv(w))?;
            let rows = &res.table.rows;
            format!(
                "{tag}: {} eigenvalues, lambda_1 = {:.6}, lambda_{} = {:.6}",
                rows.len(),
                rows[0].lambda,
                rows.len(),
                rows[rows.len() - 1].lambda
            )
        }
        Experiment::Bracket => {
            let res = bracketed_spectrum(spec, num, run.kmax.unwrap_or(6))?;
            let cert = certificate_from(spec, &res.table);
            write_with(dir, "bracket.csv", |w| res.table.write_csv(w))?;
            write_json(dir, "bracket.json", &cert)?;
            let max_gap = cert.intervals.iter().map(|i| i.gap).fold(0.0, f64::max);
            format!(
                "{tag}: {}/{} intervals certified, max gap {max_gap:.3e}",
                cert.certified().count(),
                cert.intervals.len()
            )
        }
        Experiment::EpsSweep => {
            let eps = run
                .eps
                .as_deref()
                .ok_or_else(|| CliError::Usage("eps-sweep needs --eps LIST or an \"eps\" config field".into()))?;
            let kmax = run.kmax.unwrap_or(3);
            let table = eps_sweep(spec, eps, kmax, num)?;
            write_with(dir, "sweep.csv", |w| table.write_csv(w))?;
            let devs: Vec<String> = table.column(kmax.min(2)).iter().map(|r| format!("{:.2e}", r.deviation)).collect();
            format!("{tag}: {} rows, deviation k={} [{}]", table.rows.len(), kmax.min(2), devs.join(", "))
        }
        Experiment::Sectors => match run.eps.as_deref() {
            Some(list) if list.len() > 1 => {
                let scan = competition_flip(spec, list, num)?;
                write_json(dir, "sectors.json", &scan)?;
                let flip = scan
                    .flip
                    .map_or("none".to_string(), |(lo, hi)| format!("between eps {lo} and {hi}"));
                format!("{tag}: {} points, owner change {flip}", scan.points.len())
            }
            other => {
                let spec = DomainSpec {
                    eps: other.map_or(spec.eps, |l| l[0]),
                    ..*spec
                };
                let comp = sector_competition(&spec, num)?;
                write_json(dir, "sectors.json", &comp)?;
                format!(
                    "{tag}: lambda_2 = {:.6} owned by {}, nodal set {}",
                    comp.lambda2,
                    comp.owner,
                    comp.measured.map_or("unclassified", |c| c.as_str())
                )
            }
        },
        Experiment::Verdict => {
            let v = theorem_verdict(spec, num, &run.lengths)?;
            write_json(dir, "verdict.json", &v)?;
            let segments = render_panels(std::slice::from_ref(run), dir)?;
            let line = format!(
                "{tag}: case {} {}, nodal {} ({segments} segments), min_dist {:.4e}, touches {}",
                v.case,
                if v.passed { "PASS" } else { "FAIL" },
                v.nodal_classification.map_or("unclassified", |c| c.as_str()),
                v.min_dist,
                v.touches_boundary
            );
            return Ok(Outcome {
                summary: if v.passed {
                    line
                } else {
                    format!("{line}; {}", v.failures.join("; "))
                },
                passed: v.passed,
            });
        }
    };
    Ok(Outcome { summary, passed: true })
}

/// Writes `domain.svg` and `nodal.csv` (first panel) into `dir`; returns
/// the segment count of the first panel.
fn render_panels(runs: &[Resolved], dir: &Path) -> Result<usize, CliError> {
    let mut boundaries = Vec::new();
    let mut nodal = Vec::new();
    for run in runs {
        let res = merged_spectrum(&run.spec, &run.numerics, 2)?;
        nodal.push(res.nodal(2)?.segments);
        boundaries.push(reflect_full(&quarter_boundary(&run.spec).map_err(ExperimentError::from)?));
    }
    let panels: Vec<Panel> = runs
        .iter()
        .zip(&boundaries)
        .zip(&nodal)
        .map(|((run, b), n)| Panel {
            title: format!("{}: h {}, eps = {}, L = {}", run.label, run.spec.profile, run.spec.eps, run.spec.trunc),
            boundary: b,
            nodal: n,
        })
        .collect();
    let svg = render_svg(&panels);
    write_with(dir, "domain.svg", |w| w.write_all(svg.as_bytes()))?;
    write_with(dir, "nodal.csv", |w| write_segments_csv(w, &nodal[0]))?;
    Ok(nodal[0].len())
}

fn render(runs: &[Resolved]) -> Result<Outcome, CliError> {
    let dir = runs[0].output_dir.as_path();
    let segments = render_panels(runs, dir)?;
    let labels: Vec<&str> = runs.iter().map(|r| r.label.as_str()).collect();
    Ok(Outcome {
        summary: format!(
            "render {}: {} panel(s), {segments} nodal segment(s) in the first -> {}",
            labels.join(","),
            runs.len(),
            dir.join("domain.svg").display()
        ),
        passed: true,
    })
}
