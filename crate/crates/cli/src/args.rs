use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use arthur_core::magic_test::{MerlinState, Mode, TestParams};
use arthur_core::StateVector;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

#[derive(Debug, Parser)]
#[command(
    name = "arthur",
    about = "Magic state test and Clifford-verifier protocol experiments",
    version = env!("ARTHUR_VERSION")
)]
pub struct Cli {
    /// Worker threads for trial loops (defaults to all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive test parameters, threshold and guarantees
    Params(ParamsArgs),
    /// Run an experiment and print a JSON report
    #[command(subcommand)]
    Run(RunCommand),
    /// Replace T gates of a Clifford+T circuit by injection gadgets
    Compile(CompileArgs),
    /// Write the built-in one-qubit instance as BASE.circ and BASE.json
    Toy(ToyArgs),
}

#[derive(Debug, Subcommand)]
pub enum RunCommand {
    /// Magic state test trials for one prover strategy
    Test(TestArgs),
    /// Full protocol: test, then the verifier on the surviving states
    Protocol(ProtocolArgs),
    /// Random-instance check of the fidelity maximizer
    Lemma2(Lemma2Args),
    /// Channel equivalence of compiled circuits and tableau/dense agreement
    Equiv(EquivArgs),
    /// Tableau gate throughput
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ParamArgs {
    /// Number of magic states the verifier consumes [default: 1]
    #[arg(long)]
    pub s: Option<usize>,
    /// Witness qubits [default: 0]
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub delta1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = Mode::DeskRelaxed)]
    pub mode: Mode,
    /// Replace the derived sample count r (desk-relaxed only)
    #[arg(long)]
    pub r_override: Option<u64>,
    /// Replace the derived padding l (desk-relaxed only)
    #[arg(long)]
    pub l_override: Option<u128>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ParamsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Confidence parameter for the significance level
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// honest | zeros | boundary | iid:PX,PZ | ghz:K
    #[arg(long, default_value = "honest")]
    pub strategy: StrategySpec,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Master seed (drawn from the clock when omitted)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-trial CSV output
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweep the i.i.d. +1 probability and write q, empirical, exact as CSV
    #[arg(long)]
    pub emit_curve: Option<PathBuf>,
    #[arg(long, default_value_t = 11)]
    pub curve_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessSpec {
    /// Top eigenvector of the acceptance operator
    Optimal,
    /// Bottom eigenvector of the acceptance operator
    Worst,
    /// All-zero witness
    Zero,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProtocolArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Instance base path (reads BASE.circ and BASE.json); the toy instance when omitted
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value = "honest")]
    pub strategy: StrategySpec,
    #[arg(long, value_enum, default_value_t = WitnessSpec::Optimal)]
    pub witness: WitnessSpec,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-trial CSV output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Lemma2Args {
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    /// Instances that also get random competitor states
    #[arg(long, default_value_t = 20)]
    pub sampled: usize,
    /// Competitors per sampled instance
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EquivArgs {
    #[arg(long, default_value_t = 50)]
    pub circuits: usize,
    #[arg(long, default_value_t = 3)]
    pub qubits: usize,
    #[arg(long, default_value_t = 4)]
    pub max_t: usize,
    /// Random measured Clifford circuits for the tableau/dense comparison
    #[arg(long, default_value_t = 100)]
    pub tableau_circuits: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1024)]
    pub qubits: usize,
    /// Wall-clock budget for the gate loop
    #[arg(long, default_value_t = 1.0)]
    pub seconds: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompileArgs {
    /// Clifford+T circuit in text form
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ToyArgs {
    #[arg(long)]
    pub out: PathBuf,
}

/// What the prover puts on the test positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategySpec {
    Honest,
    Zeros,
    Boundary,
    Iid { px: f64, pz: f64 },
    Ghz(usize),
}

impl StrategySpec {
    pub fn build(&self, tp: &TestParams, witness: StateVector) -> arthur_core::Result<MerlinState> {
        match *self {
            StrategySpec::Honest => Ok(MerlinState::honest(witness)),
            StrategySpec::Zeros => Ok(MerlinState::zeros(witness)),
            StrategySpec::Boundary => MerlinState::boundary(tp, witness),
            StrategySpec::Iid { px, pz } => MerlinState::iid_probs(px, pz, witness),
            StrategySpec::Ghz(k) => MerlinState::ghz((0..k).collect(), witness),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::Honest => f.write_str("honest"),
            StrategySpec::Zeros => f.write_str("zeros"),
            StrategySpec::Boundary => f.write_str("boundary"),
            StrategySpec::Iid { px, pz } => write!(f, "iid:{px},{pz}"),
            StrategySpec::Ghz(k) => write!(f, "ghz:{k}"),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        Ok(match (head, tail) {
            ("honest", None) => StrategySpec::Honest,
            ("zeros", None) => StrategySpec::Zeros,
            ("boundary", None) => StrategySpec::Boundary,
            ("iid", Some(t)) => {
                let (px, pz) = t.split_once(',').context("iid needs two probabilities: iid:PX,PZ")?;
                StrategySpec::Iid {
                    px: px.trim().parse().context("iid PX")?,
                    pz: pz.trim().parse().context("iid PZ")?,
                }
            }
            ("ghz", Some(t)) => StrategySpec::Ghz(t.trim().parse().context("ghz block size")?),
            _ => bail!("unknown strategy `{s}` (expected honest, zeros, boundary, iid:PX,PZ or ghz:K)"),
        })
    }
}

impl Serialize for StrategySpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
