use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use irs6d::config::Experiment;
use irs6d::runner::{
    export_results, run_scheme, sweep_elements, sweep_gamma, write_traces, ResultTable, Scheme,
};
use irs6d::{Error, Result};

#[derive(Parser)]
#[command(name = "irs6d", about = "6D-movable IRS ISAC optimizer and sweep runner")]
struct Cli {
    /// Write per-round optimizer traces as JSON lines next to the CSV output.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one scheme once.
    Run {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// pbf-only | orient-pbf | 6d-pbf-r1 | 6d-pbf-r2
        #[arg(long)]
        scheme: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the surface size with N_x = N_y.
    SweepElements {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// `a..b` (inclusive), `a..b:step` or a comma list.
        #[arg(long, default_value = "4..16:4")]
        nx: String,
        /// Replicates per cell.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated scheme names; all four by default.
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the communication SNR floor at fixed optimized surfaces.
    SweepGamma {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// `a..b:step` (inclusive) or a comma list, in dB.
        #[arg(long, default_value = "-10..40:2", allow_hyphen_values = true)]
        gamma: String,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the reference scenario as JSON.
    DefaultScenario,
}

fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("cannot parse range `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (num(hi)?, num(step)?),
            None => (num(rest)?, 1.0),
        };
        let lo = num(lo)?;
        if !(step > 0.0) || hi < lo {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| lo + step * k as f64).collect())
    } else {
        text.split(',').map(num).collect()
    }
}

fn load(path: &Option<PathBuf>) -> Result<Experiment> {
    match path {
        Some(p) => Experiment::load(p),
        None => Ok(Experiment::reference()),
    }
}

fn schemes(e: &Experiment, names: &Option<String>) -> Result<Vec<Scheme>> {
    match names {
        None => Ok(e.all_schemes()),
        Some(list) => list.split(',').map(|n| e.scheme(n.trim())).collect(),
    }
}

fn finish(table: &ResultTable, out: &Path, verbose: bool) -> Result<()> {
    export_results(&table.rows(), out)?;
    if verbose {
        let mut trace = out.as_os_str().to_owned();
        trace.push(".trace.jsonl");
        write_traces(table, Path::new(&trace))?;
    }
    for (scheme, nx, g) in table.cells() {
        println!(
            "{scheme:>10}  N_x={nx:<3} Gamma0={g:>6.1} dB  median snr_s={:>8.3} dB  median rho={:.4}",
            table.median(&scheme, nx, g, |r| r.snr_s_db),
            table.median(&scheme, nx, g, |r| r.rho),
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, scheme, seed, out } => {
            let e = load(&scenario)?;
            let s = e.scheme(&scheme)?;
            let r = run_scheme(&e.scenario, &s, seed, &e.settings)?;
            let scheme = s.name();
            let table = ResultTable::new(vec![(r, 0)], vec![scheme]);
            finish(&table, &out, cli.verbose)
        }
        Command::SweepElements { scenario, nx, seeds, seed, schemes: names, out } => {
            let e = load(&scenario)?;
            let nx: Vec<usize> = parse_range(&nx)?
                .into_iter()
                .map(|x| if x >= 1.0 && x.fract() == 0.0 { Ok(x as usize) } else { Err(Error::InvalidConfig(format!("bad N_x {x}"))) })
                .collect::<Result<_>>()?;
            let table = sweep_elements(&e, &schemes(&e, &names)?, &nx, seeds, seed)?;
            finish(&table, &out, cli.verbose)
        }
        Command::SweepGamma { scenario, gamma, seeds, seed, schemes: names, out } => {
            let e = load(&scenario)?;
            let table = sweep_gamma(&e, &schemes(&e, &names)?, &parse_range(&gamma)?, seeds, seed)?;
            finish(&table, &out, cli.verbose)
        }
        Command::DefaultScenario => {
            let text = serde_json::to_string_pretty(&Experiment::reference().to_file())
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
