//! `fstsup`: learn attacker transducers from recorded attacks, synthesize a
//! supervisor against them, and check it both symbolically and in the loop.
//!
//! Results go to stdout, diagnostics to stderr. Exit codes: 0 success or
//! resilient, 1 negative verdict or data that does not support learning,
//! 2 usage, parse or I/O error, 3 resource guard.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use fst_resilience::fst::shortest_difference;
use fst_resilience::hankel::{self, closedness_residuals, format_grid, numeric_rank};
use fst_resilience::linalg::{TOL_BINARY, TOL_RANK};
use fst_resilience::sim::{self, LoopConfig, SampleMode};
use fst_resilience::spectral::{self, Intermediates, LearnOptions};
use fst_resilience::supervisor::{self, SynthesisResult};
use fst_resilience::{Error, Fst, SampleSet, Symbol};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fstsup",
    version,
    about = "Resilient supervisors from recorded attacks"
)]
pub struct Cli {
    /// Relative singular-value cutoff for numeric rank.
    #[arg(long, global = true, default_value_t = TOL_RANK, value_parser = positive)]
    pub tol_rank: f64,

    /// Distance from 0 or 1 within which entries are snapped.
    #[arg(long, global = true, default_value_t = TOL_BINARY, value_parser = positive)]
    pub tol_binary: f64,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write intermediate matrices and machines to this directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub dump_intermediates: Option<PathBuf>,

    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a transducer from a dataset of recorded words.
    Learn {
        #[arg(long)]
        data: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        mask: MaskArgs,
    },
    /// Print the mask and Hankel matrices built from a dataset.
    Hankel {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        mask: MaskArgs,
    },
    /// Synthesize a supervisor from the desired language and attacker models.
    Synth {
        #[command(flatten)]
        k: DesiredArgs,
        #[command(flatten)]
        attackers: AttackerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether a supervisor confines the plant to the desired language.
    Verify {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        supervisor: PathBuf,
        #[command(flatten)]
        k: DesiredArgs,
        #[command(flatten)]
        attackers: AttackerArgs,
    },
    /// Run the clocked control loop once and print its trace.
    Simulate {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        supervisor: PathBuf,
        #[command(flatten)]
        attackers: AttackerArgs,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Trace file; stdout when omitted.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Record attacks by sampling an attacker machine.
    Sample {
        #[arg(long)]
        attacker: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Random)]
        mode: Mode,
        /// Number of random walks.
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the languages of two machines.
    Equiv { a: PathBuf, b: PathBuf },
    /// Learn both attackers, synthesize and verify in one run.
    Pipeline {
        #[arg(long)]
        sensor_data: PathBuf,
        #[arg(long)]
        actuator_data: PathBuf,
        #[arg(long)]
        plant: PathBuf,
        #[command(flatten)]
        k: DesiredArgs,
        #[command(flatten)]
        mask: MaskArgs,
        /// Supervisor output; written only when it is resilient.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Longest prefix or suffix considered for the mask.
    #[arg(long)]
    pub max_mask_len: Option<usize>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct DesiredArgs {
    /// Machine accepting the desired plant language.
    #[arg(long)]
    pub k: Option<PathBuf>,
    /// Pattern such as `((a1:s2)(a2:s2))*`, closed under prefixes.
    #[arg(long)]
    pub k_pattern: Option<String>,
}

#[derive(Debug, Args)]
pub struct AttackerArgs {
    /// Sensor attacker; identity channel when omitted.
    #[arg(long)]
    pub sensor_attacker: Option<PathBuf>,
    /// Actuator attacker; identity channel when omitted.
    #[arg(long)]
    pub actuator_attacker: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Random,
    Exhaustive,
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err("must be a positive number".into())
    }
}

/// A failed command: exit code plus message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Resource { .. } => EXIT_RESOURCE,
        Error::Parse { .. } | Error::Io(_) | Error::UnknownLetter(_) | Error::Precondition(_) => {
            EXIT_USAGE
        }
        _ => EXIT_NEGATIVE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure {
            code: exit_code(&e),
            msg: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: format!("{}: {e}", path.display()),
    }
}

fn with_path(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |e| Failure {
        code: exit_code(&e),
        msg: format!("{}: {e}", path.display()),
    }
}

type CmdResult = Result<i32, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn read_fst(path: &Path) -> Result<Fst, Failure> {
    Fst::from_text(&read(path)?).map_err(with_path(path))
}

fn read_data(path: &Path) -> Result<SampleSet, Failure> {
    SampleSet::parse(&read(path)?).map_err(with_path(path))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write(p, text),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure {
            code: EXIT_USAGE,
            msg: format!("stdout: {e}"),
        }),
    }
}

fn say(w: &mut dyn Write, line: impl fmt::Display) {
    // a closed pipe is not worth failing the analysis over
    let _ = writeln!(w, "{line}");
}

fn desired(k: &DesiredArgs) -> Result<Fst, Failure> {
    match (&k.k, &k.k_pattern) {
        (Some(path), _) => read_fst(path),
        (None, Some(p)) => Ok(supervisor::desired_from_pattern(p)?),
        (None, None) => unreachable!("clap enforces one of --k and --k-pattern"),
    }
}

fn named(symbols: impl IntoIterator<Item = Symbol>) -> Vec<Symbol> {
    symbols.into_iter().filter(|s| !s.is_eps()).collect()
}

/// Attacker machines, falling back to identity channels over the given
/// actuator and sensor symbols.
fn attackers(
    a: &AttackerArgs,
    actuator_syms: Vec<Symbol>,
    sensor_syms: Vec<Symbol>,
) -> Result<(Fst, Fst), Failure> {
    let a_s = match &a.sensor_attacker {
        Some(p) => read_fst(p)?,
        None => Fst::identity(sensor_syms),
    };
    let a_a = match &a.actuator_attacker {
        Some(p) => read_fst(p)?,
        None => Fst::identity(actuator_syms),
    };
    Ok((a_s, a_a))
}

struct Ctx<'a> {
    cli: &'a Cli,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn learn_options(&self, mask: &MaskArgs) -> LearnOptions {
        LearnOptions {
            max_mask_len: mask.max_mask_len,
            tol_rank: self.cli.tol_rank,
            tol_binary: self.cli.tol_binary,
            ..LearnOptions::default()
        }
    }

    fn dump(&self, sub: &str, trace: &Intermediates) -> Result<(), Failure> {
        if let Some(dir) = &self.cli.dump_intermediates {
            let dir = if sub.is_empty() {
                dir.clone()
            } else {
                dir.join(sub)
            };
            trace.dump(&dir).map_err(|e| Failure {
                code: EXIT_USAGE,
                msg: format!("{}: {e}", dir.display()),
            })?;
        }
        Ok(())
    }

    fn dump_file(&self, name: &str, text: &str) -> Result<(), Failure> {
        if let Some(dir) = &self.cli.dump_intermediates {
            std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            write(&dir.join(name), text)?;
        }
        Ok(())
    }

    fn learn(&mut self, data: &Path, out: Option<&Path>, mask: &MaskArgs) -> CmdResult {
        let d = read_data(data)?;
        let mut trace = Intermediates::default();
        let result = spectral::learn_traced(&d, &self.learn_options(mask), &mut trace);
        self.dump("", &trace)?;
        let fst = result?;
        say(
            self.err,
            format_args!(
                "learned {}-state model from {} words",
                fst.num_states(),
                d.len()
            ),
        );
        emit(self.out, out, &fst.to_text())?;
        Ok(EXIT_OK)
    }

    fn hankel(&mut self, data: &Path, mask: &MaskArgs) -> CmdResult {
        let d = read_data(data)?;
        let max_len = mask
            .max_mask_len
            .unwrap_or_else(|| hankel::default_mask_len(&d));
        let m = hankel::find_basis_with_tol(&d, max_len, self.cli.tol_rank);
        let hz = hankel::build_hankel_set(&d, &m);
        let rank = numeric_rank(&hz.h_theta, self.cli.tol_rank);
        let mut text = String::new();
        text += &format_grid("H_theta", &hz.h_theta, m.prefixes(), m.suffixes());
        for (l, h) in hz.alphabet.iter().zip(&hz.h_chi) {
            text += "\n";
            text += &format_grid(&format!("H[{l}]"), h, m.prefixes(), m.suffixes());
        }
        text += &format!("\nrank {rank}\n");
        let residuals = closedness_residuals(&hz);
        let closed = residuals.iter().all(|&(_, r)| r < self.cli.tol_binary);
        for (l, r) in &residuals {
            text += &format!("residual {l} {r:e}\n");
        }
        text += if closed { "closed\n" } else { "not closed\n" };
        self.dump(
            "",
            &Intermediates {
                mask: Some(m),
                hankel: Some(hz),
                rank: Some(rank),
                ..Intermediates::default()
            },
        )?;
        emit(self.out, None, &text)?;
        Ok(if closed { EXIT_OK } else { EXIT_NEGATIVE })
    }

    fn synth(&mut self, k: &DesiredArgs, a: &AttackerArgs, out: Option<&Path>) -> CmdResult {
        let m_k = desired(k)?;
        let (a_s, a_a) = attackers(a, named(m_k.inputs()), named(m_k.outputs()))?;
        let s = supervisor::synthesize(&m_k, &a_s, &a_a);
        say(
            self.err,
            format_args!("supervisor has {} states", s.num_states()),
        );
        emit(self.out, out, &s.to_text())?;
        Ok(EXIT_OK)
    }

    fn verify(&mut self, plant: &Path, sup: &Path, k: &DesiredArgs, a: &AttackerArgs) -> CmdResult {
        let p = read_fst(plant)?;
        let s = read_fst(sup)?;
        let m_k = desired(k)?;
        let act = named(p.inputs().into_iter().chain(m_k.inputs()));
        let sen = named(p.outputs().into_iter().chain(m_k.outputs()));
        let (a_s, a_a) = attackers(a, act, sen)?;
        let r = supervisor::verify_resilient(&p, &s, &a_s, &a_a, &m_k)?;
        self.dump_file(
            "supervised.fst",
            &supervisor::supervised_language(&p, &s, &a_s, &a_a).to_text(),
        )?;
        Ok(self.verdict(&r))
    }

    fn verdict(&mut self, r: &SynthesisResult) -> i32 {
        say(self.out, r.verdict_line());
        if r.resilient {
            EXIT_OK
        } else {
            EXIT_NEGATIVE
        }
    }

    fn simulate(
        &mut self,
        plant: &Path,
        sup: &Path,
        a: &AttackerArgs,
        steps: usize,
        trace_out: Option<&Path>,
    ) -> CmdResult {
        let p = read_fst(plant)?;
        let s = read_fst(sup)?;
        let (a_s, a_a) = attackers(a, named(p.inputs()), named(p.outputs()))?;
        let cfg = LoopConfig {
            plant: p,
            supervisor: s,
            sensor_attacker: a_s,
            actuator_attacker: a_a,
            max_steps: steps,
            seed: self.cli.seed,
        };
        let trace = sim::run(&cfg);
        if let Some(stuck) = &trace.stuck {
            say(
                self.err,
                format_args!("deadlock: {} has no eligible transition", stuck.machine),
            );
        }
        emit(self.out, trace_out, &trace.to_text())?;
        Ok(EXIT_OK)
    }

    fn sample(
        &mut self,
        attacker: &Path,
        mode: Mode,
        n: usize,
        max_len: usize,
        out: Option<&Path>,
    ) -> CmdResult {
        let a = read_fst(attacker)?;
        let mode = match mode {
            Mode::Random => SampleMode::Random {
                n_words: n,
                seed: self.cli.seed,
            },
            Mode::Exhaustive => SampleMode::Exhaustive,
        };
        let d = sim::sample_attacker(&a, mode, max_len)?;
        say(self.err, format_args!("{} words", d.len()));
        emit(self.out, out, &d.to_text())?;
        Ok(EXIT_OK)
    }

    fn equiv(&mut self, a: &Path, b: &Path) -> CmdResult {
        let fa = read_fst(a)?;
        let fb = read_fst(b)?;
        match shortest_difference(&fa, &fb)? {
            None => {
                say(self.out, "EQUIVALENT");
                Ok(EXIT_OK)
            }
            Some(w) => {
                say(self.out, format_args!("DIFFERENT witness={w}"));
                Ok(EXIT_NEGATIVE)
            }
        }
    }

    fn learn_stage(&mut self, role: &str, data: &Path, mask: &MaskArgs) -> Result<Fst, Failure> {
        let d = read_data(data)?;
        if d.is_empty() {
            return Err(Failure {
                code: EXIT_USAGE,
                msg: format!("{}: dataset is empty", data.display()),
            });
        }
        let mut trace = Intermediates::default();
        let result = spectral::learn_traced(&d, &self.learn_options(mask), &mut trace);
        self.dump(role, &trace)?;
        match result {
            Ok(f) => {
                say(
                    self.err,
                    format_args!(
                        "{role}: learned {}-state model from {} words (rank {})",
                        f.num_states(),
                        d.len(),
                        trace.rank.unwrap_or(0)
                    ),
                );
                Ok(f)
            }
            Err(e) => {
                let stage = e.stage().map_or("input".to_string(), |s| s.to_string());
                Err(Failure {
                    code: exit_code(&e),
                    msg: format!(
                        "pipeline failed at stage {role}-learn/{stage}: {}",
                        e.root()
                    ),
                })
            }
        }
    }

    fn pipeline(
        &mut self,
        sensor_data: &Path,
        actuator_data: &Path,
        plant: &Path,
        k: &DesiredArgs,
        mask: &MaskArgs,
        out: Option<&Path>,
    ) -> CmdResult {
        let p = read_fst(plant)?;
        let m_k = desired(k)?;
        let a_s = self.learn_stage("sensor", sensor_data, mask)?;
        let a_a = self.learn_stage("actuator", actuator_data, mask)?;
        let s = supervisor::synthesize(&m_k, &a_s, &a_a);
        self.dump_file("supervisor.fst", &s.to_text())?;
        let r = supervisor::verify_resilient(&p, &s, &a_s, &a_a, &m_k)?;
        self.dump_file(
            "supervised.fst",
            &supervisor::supervised_language(&p, &s, &a_s, &a_a).to_text(),
        )?;
        let code = self.verdict(&r);
        if r.resilient {
            if let Some(path) = out {
                write(path, &s.to_text())?;
            }
        } else {
            say(
                self.err,
                "pipeline failed at stage verify: supervised plant leaves the desired language",
            );
        }
        Ok(code)
    }

    fn run(&mut self) -> CmdResult {
        let cli = self.cli;
        match &cli.command {
            Command::Learn { data, out, mask } => self.learn(data, out.as_deref(), mask),
            Command::Hankel { data, mask } => self.hankel(data, mask),
            Command::Synth { k, attackers, out } => self.synth(k, attackers, out.as_deref()),
            Command::Verify {
                plant,
                supervisor,
                k,
                attackers,
            } => self.verify(plant, supervisor, k, attackers),
            Command::Simulate {
                plant,
                supervisor,
                attackers,
                steps,
                trace_out,
            } => self.simulate(plant, supervisor, attackers, *steps, trace_out.as_deref()),
            Command::Sample {
                attacker,
                mode,
                n,
                max_len,
                out,
            } => self.sample(attacker, *mode, *n, *max_len, out.as_deref()),
            Command::Equiv { a, b } => self.equiv(a, b),
            Command::Pipeline {
                sensor_data,
                actuator_data,
                plant,
                k,
                mask,
                out,
            } => self.pipeline(sensor_data, actuator_data, plant, k, mask, out.as_deref()),
        }
    }
}

fn parse<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> Result<Cli, i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map_err(|e| {
        let code = e.exit_code();
        let text = e.render().to_string();
        let _ = if code == 0 {
            out.write_all(text.as_bytes())
        } else {
            err.write_all(text.as_bytes())
        };
        code
    })
}

/// Runs an already parsed command line. Returns the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut ctx = Ctx { cli, out, err };
    match ctx.run() {
        Ok(code) => code,
        Err(f) => {
            say(ctx.err, format_args!("error: {f}"));
            f.code
        }
    }
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse(args, out, err) {
        Ok(cli) => execute(&cli, out, err),
        Err(code) => code,
    }
}

/// Entry point for the binary: process streams, logging level from `-v`.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let cli = match parse(args, &mut out, &mut err) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();
    execute(&cli, &mut out, &mut err)
}
