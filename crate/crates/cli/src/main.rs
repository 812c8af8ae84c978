use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qubit_corr_core::criteria::{pairwise_feasible, GridConfig, MeasurementClass, PairwiseReport};
use qubit_corr_core::entanglement::{entanglement_verdict, EntanglementConfig, SeparabilityVerdict};
use qubit_corr_core::inference::{infer_report, scan_boundary, sm_boundary, InferenceReport, ScanConfig, Slice};
use qubit_corr_core::io;
use qubit_corr_core::oracle::{sample_achievable, SampleConfig};
use qubit_corr_core::scenarios::{bell_to_conditional, Family, Party, QPM_LABELS};
use qubit_corr_core::witnesses::{bqb_det, npa_arcsin, svw_witness, witness_curve, WitnessKind, WitnessValue};
use qubit_corr_core::{BellCorrelation, PmRecordSet};

const AFTER_HELP: &str = "\
Exit codes: 0 feasible, 1 infeasible, 2 input error (entangle: 3 inconclusive).

CSV columns:
  boundary          x,y_star,margin   (or x_star,y,margin with --slice x)
  boundary  *.sm    theta,x,y,r
  boundary  *.overlay  curve,x,y      (curve = sm | svw | npa | bqb)
  sample            x,y,residual";

#[derive(Parser)]
#[command(name = "qubit-corr", version, about = "Qubit feasibility, inference and entanglement checks for correlation data", after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunConfig {
    /// Numerical tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Coarse offset grid points per axis (at least 11).
    #[arg(long, global = true, default_value_t = 101)]
    grid: usize,
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1000)]
    samples: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include per-cell detail in reports.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Pvm,
    Povm,
}

impl From<Mode> for MeasurementClass {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Pvm => MeasurementClass::Pvm,
            Mode::Povm => MeasurementClass::Povm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Pm,
    Bell,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Qbell,
    Qpm,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Qbell => Family::QBell,
            FamilyArg::Qpm => Family::QPM,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SliceArg {
    /// Largest feasible y for each x.
    Y,
    /// Largest feasible x for each y.
    X,
}

#[derive(Subcommand)]
enum Command {
    /// Decide qubit feasibility of a record file.
    Check {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Povm)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Scenario::Pm)]
        scenario: Scenario,
    },
    /// Infer measurement parameters and states.
    Infer {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Scenario::Pm)]
        scenario: Scenario,
    },
    /// Scan the feasibility boundary of a parametric family.
    Boundary {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_enum, default_value_t = Mode::Povm)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = SliceArg::Y)]
        slice: SliceArg,
        /// Abscissae in [0, 1].
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Evaluate the reference dimension witnesses.
    Witness {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Scenario::Bell)]
        scenario: Scenario,
        /// Comma-separated state labels for the determinant witness.
        #[arg(long, value_delimiter = ',')]
        states: Option<Vec<String>>,
        /// Convert expectations to outcome-0 probabilities first.
        #[arg(long)]
        probabilities: bool,
    },
    /// Certify entanglement of a Bell table.
    Entangle { input: PathBuf },
    /// Sample achievable points of a family from random qubit realizations.
    Sample {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_enum, default_value_t = Mode::Pvm)]
        mode: Mode,
    },
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            bail!("--tol must be positive, got {}", self.tol);
        }
        if self.grid < 11 {
            bail!("--grid must be at least 11, got {}", self.grid);
        }
        Ok(())
    }

    fn grid(&self) -> GridConfig {
        GridConfig::default().with_coarse(self.grid).with_tol(self.tol)
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> Result<()> {
        self.emit(&io::to_json(value)?)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_bell(path: &Path) -> Result<BellCorrelation> {
    io::read_bell(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_pm(path: &Path) -> Result<PmRecordSet> {
    io::read_pm(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// Conditional record sets of both parties.
fn conditionals(corr: &BellCorrelation) -> Result<Vec<(Party, PmRecordSet)>> {
    [Party::A, Party::B]
        .into_iter()
        .map(|p| Ok((p, bell_to_conditional(corr, p)?.records)))
        .collect()
}

fn status(feasible: bool) -> ExitCode {
    ExitCode::from(if feasible { 0 } else { 1 })
}

#[derive(Serialize)]
struct PartyReport<T> {
    party: Party,
    #[serde(flatten)]
    report: T,
}

fn cmd_check(cfg: &RunConfig, input: &Path, mode: Mode, scenario: Scenario) -> Result<ExitCode> {
    let grid = cfg.grid();
    #[derive(Serialize)]
    struct Out {
        feasible: bool,
        mode: MeasurementClass,
        parties: Vec<PartyReport<PairwiseReport>>,
    }
    let sets = match scenario {
        Scenario::Pm => vec![(Party::A, read_pm(input)?)],
        Scenario::Bell => conditionals(&read_bell(input)?)?,
    };
    let mut parties = Vec::new();
    for (party, rec) in sets {
        parties.push(PartyReport { party, report: pairwise_feasible(&rec, mode.into(), &grid)? });
    }
    let feasible = parties.iter().all(|p| p.report.feasible);
    cfg.emit_json(&Out { feasible, mode: mode.into(), parties })?;
    Ok(status(feasible))
}

fn cmd_infer(cfg: &RunConfig, input: &Path, scenario: Scenario) -> Result<ExitCode> {
    let grid = cfg.grid();
    let sets = match scenario {
        Scenario::Pm => vec![(Party::A, read_pm(input)?)],
        Scenario::Bell => conditionals(&read_bell(input)?)?,
    };
    #[derive(Serialize)]
    struct Out {
        party: Party,
        pairs: Vec<InferenceReport>,
    }
    let mut out = Vec::new();
    for (party, rec) in sets {
        let m = rec.n_measurements();
        let mut reports = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                reports.push(infer_report(&rec, i, j, &grid, cfg.verbose > 0)?);
            }
        }
        out.push(Out { party, pairs: reports });
    }
    let feasible = out.iter().flat_map(|p| &p.pairs).all(|r| r.feasible);
    cfg.emit_json(&out)?;
    Ok(status(feasible))
}

fn linspace(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

fn cmd_boundary(cfg: &RunConfig, family: FamilyArg, mode: Mode, slice: SliceArg, points: usize) -> Result<ExitCode> {
    let slice = match slice {
        SliceArg::Y => Slice::YOfX,
        SliceArg::X => Slice::XOfY,
    };
    let scan = ScanConfig { grid: cfg.grid(), slice, ..Default::default() };
    let abscissae = linspace(points);
    let curve = scan_boundary(family.into(), mode.into(), &abscissae, &scan);
    let sm: Vec<_> = (1..points.max(2))
        .filter_map(|k| sm_boundary(k as f64 * std::f64::consts::FRAC_PI_2 / points.max(2) as f64).ok())
        .collect();
    let overlays: Vec<(&str, Vec<(f64, f64)>)> = std::iter::once(("sm", sm.iter().map(|p| (p.x, p.y)).collect()))
        .chain(WitnessKind::ALL.iter().map(|&k| (k.name(), witness_curve(k, &abscissae, 1e-3))))
        .collect();
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            io::write_scan_csv(&mut buf, slice, &curve)?;
            cfg.emit(std::str::from_utf8(&buf)?)?;
            if let Some(out) = &cfg.out {
                let sm_path = sibling(out, "sm");
                io::write_sm_csv(fs::File::create(&sm_path).with_context(|| format!("cannot write {}", sm_path.display()))?, &sm)?;
                let ov_path = sibling(out, "overlay");
                io::write_overlay_csv(fs::File::create(&ov_path).with_context(|| format!("cannot write {}", ov_path.display()))?, &overlays)?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                family: Family,
                mode: MeasurementClass,
                boundary: &'a [qubit_corr_core::inference::BoundaryPoint],
                sm: &'a [qubit_corr_core::inference::SmPoint],
                overlays: std::collections::BTreeMap<&'a str, &'a [(f64, f64)]>,
            }
            let overlays = overlays.iter().map(|(k, v)| (*k, v.as_slice())).collect();
            cfg.emit_json(&Out { family: family.into(), mode: mode.into(), boundary: &curve, sm: &sm, overlays })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_witness(cfg: &RunConfig, input: &Path, scenario: Scenario, states: Option<Vec<String>>, probabilities: bool) -> Result<ExitCode> {
    #[derive(Serialize)]
    struct Entry {
        witness: &'static str,
        #[serde(flatten)]
        value: Option<WitnessValue>,
        #[serde(skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    }
    let entry = |witness, r: qubit_corr_core::Result<WitnessValue>| match r {
        Ok(v) => Entry { witness, value: Some(v), error: None },
        Err(e) => Entry { witness, value: None, error: Some(e.to_string()) },
    };
    let entries = match scenario {
        Scenario::Bell => {
            let corr = read_bell(input)?;
            vec![entry("svw", Ok(svw_witness(&corr))), entry("npa", npa_arcsin(&corr))]
        }
        Scenario::Pm => {
            let mut rec = read_pm(input)?;
            if probabilities {
                rec = rec.to_outcome0_probabilities();
            }
            let labels: Vec<String> = match states {
                Some(s) => s,
                None if rec.rows().iter().zip(QPM_LABELS).all(|(r, l)| r.label == l) => {
                    QPM_LABELS.iter().map(|s| s.to_string()).collect()
                }
                None => rec.rows().iter().take(4).map(|r| r.label.clone()).collect(),
            };
            let Ok(arr) = <[&str; 4]>::try_from(labels.iter().map(String::as_str).collect::<Vec<_>>()) else {
                bail!("the determinant witness needs exactly 4 states, got {}", labels.len());
            };
            vec![entry("bqb", bqb_det(&rec, arr))]
        }
    };
    let excluded = entries.iter().any(|e| e.value.is_some_and(|v| v.excluded));
    cfg.emit_json(&entries)?;
    Ok(status(!excluded))
}

fn cmd_entangle(cfg: &RunConfig, input: &Path) -> Result<ExitCode> {
    let corr = read_bell(input)?;
    let ecfg = EntanglementConfig { grid: cfg.grid(), ..Default::default() }.with_seed(cfg.seed);
    let report = entanglement_verdict(&corr, &ecfg)?;
    cfg.emit_json(&report)?;
    Ok(ExitCode::from(match report.verdict {
        SeparabilityVerdict::SeparableFeasible => 0,
        SeparabilityVerdict::Entangled => 1,
        SeparabilityVerdict::Inconclusive => 3,
    }))
}

fn cmd_sample(cfg: &RunConfig, family: FamilyArg, mode: Mode) -> Result<ExitCode> {
    let scfg = SampleConfig { projective: matches!(mode, Mode::Pvm), ..Default::default() };
    let pts = sample_achievable(family.into(), cfg.samples, cfg.seed, &scfg);
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            io::write_samples_csv(&mut buf, &pts)?;
            cfg.emit(std::str::from_utf8(&buf)?)?;
        }
        Format::Json => cfg.emit_json(&pts)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = &cli.run;
    cfg.validate()?;
    match cli.command {
        Command::Check { input, mode, scenario } => cmd_check(cfg, &input, mode, scenario),
        Command::Infer { input, scenario } => cmd_infer(cfg, &input, scenario),
        Command::Boundary { family, mode, slice, points } => cmd_boundary(cfg, family, mode, slice, points),
        Command::Witness { input, scenario, states, probabilities } => cmd_witness(cfg, &input, scenario, states, probabilities),
        Command::Entangle { input } => cmd_entangle(cfg, &input),
        Command::Sample { family, mode } => cmd_sample(cfg, family, mode),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
