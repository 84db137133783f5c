//! Command-line front end: Monte Carlo experiments, closed-form tables and
//! two-process sessions.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hardy_ot::adversary::{detection_rate, DetectionReport, Strategy};
use hardy_ot::harness::{monte_carlo, replay_file, run_remote, ExperimentSpec, OutputPaths, TranscriptError};
use hardy_ot::protocol::{Party, ProtocolConfig, SessionError};
use hardy_ot::qcore::{ch_lhs, golden_alpha_sq, hardy_q, werner_state, BasisParam, Outcome, ProbTable, Setting};
use hardy_ot::stats::{figure1_curve, min_runs, min_visibility, q_max, write_curve_csv};

const SEED_ENV: &str = "HARDY_OT_SEED";

const EXIT_ABORT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TRANSPORT: u8 = 3;

#[derive(Parser)]
#[command(name = "hardy-ot", version, about = "Hardy-paradox oblivious transfer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run many seeded sessions and print aggregate statistics as JSON.
    Simulate(SimulateArgs),
    /// Print the four joint-outcome tables and the CH value of the Werner state.
    HardyTest {
        #[arg(long, default_value = "golden")]
        alpha2: String,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
    /// CSV of the CH value against visibility.
    NoiseSweep {
        #[arg(long, default_value = "golden")]
        alpha2: String,
        #[arg(long, default_value_t = 0.8)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
    },
    /// Required run counts for a list of visibilities.
    SampleSize {
        #[arg(long, num_args = 1.., required = true)]
        eta: Vec<f64>,
        /// `max` or a numeric success probability.
        #[arg(long, default_value = "max")]
        q: String,
    },
    /// Estimate detection rates of cheating strategies.
    AdversaryEval {
        #[arg(long = "strategy", num_args = 1.., required = true)]
        strategies: Vec<Strategy>,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[command(flatten)]
        config: ConfigArgs,
        /// JSON output (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Additional CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Minimal visibility against run count as `n_runs,eta_min` CSV.
    Figure1 {
        #[arg(long, default_value = "max")]
        q: String,
        /// Range `MIN:MAX`; either end may use exponent notation.
        #[arg(long, default_value = "4428:1e8")]
        n: String,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play Alice against a peer over TCP.
    ServeAlice(ServeArgs),
    /// Play Bob against a peer over TCP.
    ServeBob(ServeArgs),
    /// Re-run a recorded transcript and compare.
    Replay { transcript: PathBuf },
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// `alpha^2`, or `golden` for the maximal Hardy success probability.
    #[arg(long, default_value = "golden")]
    alpha2: String,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 20_000)]
    n_runs: usize,
    #[arg(long, default_value_t = 0.10)]
    frac_s2a: f64,
    #[arg(long, default_value_t = 0.25)]
    frac_s3a: f64,
    #[arg(long, default_value_t = 0.25)]
    frac_s4a: f64,
    #[arg(long, default_value_t = 0.25)]
    frac_s5a: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 3.0)]
    z: f64,
    /// Master seed; the HARDY_OT_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    bit: Option<u8>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 100)]
    sessions: usize,
    #[arg(long, default_value = "honest")]
    strategy: Strategy,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Aggregate statistics JSON (stdout always gets a copy).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-session results as JSON lines.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Directory for per-session transcripts.
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "honest")]
    strategy: Strategy,
    /// Accept one connection on this address.
    #[arg(long, conflicts_with = "connect", required_unless_present = "connect")]
    listen: Option<String>,
    /// Connect to a listening peer.
    #[arg(long)]
    connect: Option<String>,
    /// Where to write this party's transcript.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Where to write this party's report as JSON (stdout when absent).
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Transport(anyhow::Error),
    Other(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Other(e.into())
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn parse_alpha(s: &str) -> Result<BasisParam> {
    let a2 = if s == "golden" {
        golden_alpha_sq()
    } else {
        s.parse::<f64>().with_context(|| format!("bad alpha^2 `{s}`"))?
    };
    Ok(BasisParam::from_alpha_sq(a2)?)
}

fn parse_q(s: &str) -> Result<f64> {
    if s == "max" {
        Ok(q_max())
    } else {
        s.parse::<f64>().with_context(|| format!("bad q `{s}`"))
    }
}

impl ConfigArgs {
    fn build(&self) -> Result<ProtocolConfig> {
        let seed = match std::env::var(SEED_ENV) {
            Ok(v) => v.parse().with_context(|| format!("{SEED_ENV}={v} is not an integer"))?,
            Err(_) => self.seed,
        };
        let cfg = ProtocolConfig {
            alpha: parse_alpha(&self.alpha2)?,
            eta: self.eta,
            n_runs: self.n_runs,
            frac_s2a: self.frac_s2a,
            frac_s3a: self.frac_s3a,
            frac_s4a: self.frac_s4a,
            frac_s5a: self.frac_s5a,
            epsilon: self.epsilon,
            detection_z: self.z,
            seed,
            bit: self.bit,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| p.display().to_string())?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn simulate(a: SimulateArgs) -> Result<u8, Failure> {
    let config = a.config.build().map_err(usage)?;
    let spec = ExperimentSpec {
        config,
        sessions: a.sessions,
        strategy: a.strategy,
        parallelism: a.parallelism,
        outputs: OutputPaths {
            stats: a.out,
            results: a.results,
            transcripts: a.transcripts,
        },
    };
    let stats = monte_carlo(&spec)?;
    writeln!(io::stdout().lock(), "{}", serde_json::to_string_pretty(&stats)?)?;
    Ok(0)
}

fn hardy_test(alpha2: &str, eta: f64) -> Result<u8, Failure> {
    let p = parse_alpha(alpha2).map_err(usage)?;
    let t = ProbTable::from_state(&werner_state(p, eta).map_err(usage)?, p);
    let mut w = io::stdout().lock();
    writeln!(w, "alpha^2 = {:.6}  eta = {eta}  q = {:.8}", p.alpha_sq(), hardy_q(p))?;
    for sa in Setting::ALL {
        for sb in Setting::ALL {
            writeln!(w, "({sa},{sb})   b=+1        b=-1")?;
            for a in Outcome::ALL {
                let (plus, minus) = (t.p(a, Outcome::Plus, sa, sb), t.p(a, Outcome::Minus, sa, sb));
                writeln!(w, "  a={a}  {plus:.8}  {minus:.8}")?;
            }
        }
    }
    writeln!(w, "ch_lhs = {:.8}", ch_lhs(&t))?;
    Ok(0)
}

fn noise_sweep(alpha2: &str, from: f64, to: f64, steps: usize) -> Result<u8, Failure> {
    let p = parse_alpha(alpha2).map_err(usage)?;
    if steps < 2 || !(0.0..=1.0).contains(&from) || !(0.0..=1.0).contains(&to) {
        return Err(usage(anyhow!("need 0 <= from, to <= 1 and at least two steps")));
    }
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["eta", "ch_lhs"])?;
    for i in 0..steps {
        let eta = from + (to - from) * i as f64 / (steps - 1) as f64;
        let t = ProbTable::from_state(&werner_state(p, eta)?, p);
        w.write_record([format!("{eta:.6}"), format!("{:.10}", ch_lhs(&t))])?;
    }
    w.flush()?;
    Ok(0)
}

fn sample_size(etas: &[f64], q: &str) -> Result<u8, Failure> {
    let q = parse_q(q).map_err(usage)?;
    let threshold = min_visibility(q).map_err(usage)?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["eta", "n_runs"])?;
    for &eta in etas {
        let n = match min_runs(eta, q) {
            Ok(n) => n.to_string(),
            Err(_) => format!("infeasible (eta <= {threshold:.6})"),
        };
        w.write_record([eta.to_string(), n])?;
    }
    w.flush()?;
    Ok(0)
}

fn parse_count(s: &str) -> Result<u64> {
    let v: f64 = s.trim().parse().with_context(|| format!("bad run count `{s}`"))?;
    if !(v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
        bail!("run count `{s}` must be a positive integer");
    }
    Ok(v as u64)
}

fn figure1(q: &str, n: &str, steps: usize, out: &Option<PathBuf>) -> Result<u8, Failure> {
    let q = parse_q(q).map_err(usage)?;
    let (lo, hi) = n.split_once(':').ok_or_else(|| usage(anyhow!("--n expects MIN:MAX")))?;
    let (lo, hi) = (parse_count(lo).map_err(usage)?, parse_count(hi).map_err(usage)?);
    let curve = figure1_curve(q, lo, hi, steps).map_err(usage)?;
    write_curve_csv(&curve, output(out)?)?;
    Ok(0)
}

fn adversary_eval(
    strategies: &[Strategy],
    trials: usize,
    config: &ConfigArgs,
    out: &Option<PathBuf>,
    csv_out: &Option<PathBuf>,
) -> Result<u8, Failure> {
    let cfg = config.build().map_err(usage)?;
    if trials == 0 {
        return Err(usage(anyhow!("--trials must be at least 1")));
    }
    let reports = strategies
        .iter()
        .map(|&s| detection_rate(s, &cfg, trials))
        .collect::<Result<Vec<DetectionReport>, _>>()?;
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, &reports)?;
    writeln!(w)?;
    if let Some(path) = csv_out {
        DetectionReport::write_csv(&reports, File::create(path)?)?;
    }
    Ok(0)
}

fn serve(party: Party, a: ServeArgs) -> Result<u8, Failure> {
    let cfg = a.config.build().map_err(usage)?;
    let stream = match (&a.listen, &a.connect) {
        (Some(addr), _) => {
            let listener = TcpListener::bind(addr).map_err(|e| Failure::Transport(e.into()))?;
            eprintln!("{party} listening on {}", listener.local_addr()?);
            listener.accept().map_err(|e| Failure::Transport(e.into()))?.0
        }
        (None, Some(addr)) => TcpStream::connect(addr).map_err(|e| Failure::Transport(e.into()))?,
        (None, None) => return Err(usage(anyhow!("one of --listen or --connect is required"))),
    };
    let outcome = run_remote(party, &cfg, a.strategy, stream).map_err(|e| match e {
        SessionError::Transport(_) => Failure::Transport(e.into()),
        other => Failure::Other(other.into()),
    })?;
    if let Some(path) = &a.transcript {
        outcome.transcript.save(path)?;
    }
    let mut w = output(&a.report)?;
    serde_json::to_writer_pretty(&mut w, &outcome.report)?;
    writeln!(w)?;
    Ok(if outcome.report.abort.is_some() { EXIT_ABORT } else { 0 })
}

fn replay_cmd(path: &std::path::Path) -> Result<u8, Failure> {
    let report = replay_file(path).map_err(|e| match e {
        TranscriptError::Io(_) | TranscriptError::Schema { .. } | TranscriptError::Empty => usage(e),
        other => Failure::Other(other.into()),
    })?;
    writeln!(io::stdout().lock(), "{}", serde_json::to_string_pretty(&report.result)?)?;
    match report.first_divergence {
        Some(seq) => {
            eprintln!("transcript diverges at seq {seq}");
            Ok(EXIT_ABORT)
        }
        None if !report.result_matches => {
            eprintln!("messages match but the recorded result differs");
            Ok(EXIT_ABORT)
        }
        None => {
            eprintln!("replay matches the recording");
            Ok(0)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::HardyTest { alpha2, eta } => hardy_test(&alpha2, eta),
        Command::NoiseSweep { alpha2, from, to, steps } => noise_sweep(&alpha2, from, to, steps),
        Command::SampleSize { eta, q } => sample_size(&eta, &q),
        Command::AdversaryEval {
            strategies,
            trials,
            config,
            out,
            csv,
        } => adversary_eval(&strategies, trials, &config, &out, &csv),
        Command::Figure1 { q, n, steps, out } => figure1(&q, &n, steps, &out),
        Command::ServeAlice(a) => serve(Party::Alice, a),
        Command::ServeBob(a) => serve(Party::Bob, a),
        Command::Replay { transcript } => replay_cmd(&transcript),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Transport(e)) => {
            eprintln!("transport error: {e:#}");
            ExitCode::from(EXIT_TRANSPORT)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ABORT)
        }
    }
}
