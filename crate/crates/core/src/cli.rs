//! Command-line front end. Every command writes CSV (or a single value
//! line for `exact`) to stdout or `--out`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::exact::{default_phi_cap, MemoTable, MinimaxSolver, SolverConfig};
use crate::potential::{
    c_preset, certify, concavity_shortcut_check, f_c, f_opt, precise_upper_bound, upper_bound,
    CPreset, Certification, ConstantPotential, ExactLossPotential, LinearPotential, LogPotential,
    OptimizedLogPotential, PerfectExpertPotential, Potential, PotentialParams, Witness,
};
use crate::scalar::{decimal, LossScalar};
use crate::sim::{monte_carlo, play_game, trial_seed};
use crate::states::{phi, ChoiceSet, MistakeBudget, State};
use crate::strategies::{
    lower_bound, mw_loss_bound, Adversary, EvenSplitAdversary, Forecaster, MajorityOfLeaders,
    MultiplicativeWeights, OptimalAdversary, PotentialForecaster, RandomLeader, UniformAdversary,
};

#[derive(Debug, Parser)]
#[command(name = "expert-minimax", version, about = "Minimax loss of prediction with expert advice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact minimax loss from the start state (n, 0, …, 0).
    Exact(ExactArgs),
    /// Grid of l(i, j, 0, …, 0).
    Surface(SurfaceArgs),
    /// The 40×16 grid: surface with imax = 39, jmax = 15.
    Table(TableArgs),
    /// Lower bound, exact value, f_opt and the closed-form upper bounds.
    Bounds(BoundsArgs),
    /// Monte Carlo games between a forecaster and an adversary.
    Simulate(SimulateArgs),
    /// Certify a potential on every state up to a phi cap.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Number of choices.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Largest phi the solver may visit (default depends on b).
    #[arg(long)]
    pub phi_cap: Option<u64>,
    /// Worker threads for the solver.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Only consider adversary subsets of size two.
    #[arg(long)]
    pub pairs_only: bool,
    /// Load the memo table from this file if it exists and save it after.
    #[arg(long)]
    pub memo: Option<PathBuf>,
}

impl SolverArgs {
    fn config(&self, budget: MistakeBudget) -> SolverConfig {
        SolverConfig::new(budget)
            .with_d(self.d)
            .with_phi_cap(self.phi_cap.unwrap_or_else(|| default_phi_cap(budget)))
            .with_threads(self.threads)
            .pairs_only(self.pairs_only)
    }

    fn solver(&self, budget: MistakeBudget) -> Result<MinimaxSolver<BigRational>> {
        let mut solver = MinimaxSolver::new(budget, self.config(budget))?;
        if let Some(path) = &self.memo {
            if path.exists() {
                solver.load_memo(MemoTable::load(path)?)?;
            }
        }
        Ok(solver)
    }

    fn persist(&self, solver: &MinimaxSolver<BigRational>) -> Result<()> {
        if let Some(path) = &self.memo {
            solver.to_memo().save(path)?;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 0)]
    pub b: u32,
    /// Also list the optimal adversary move of every solved state.
    #[arg(long)]
    pub moves: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long, default_value_t = 80)]
    pub imax: u32,
    #[arg(long, default_value_t = 80)]
    pub jmax: u32,
    #[arg(long, default_value_t = 1)]
    pub b: u32,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, default_value_t = 1)]
    pub b: u32,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Single n; overrides the range.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub n_min: u64,
    #[arg(long, default_value_t = 32)]
    pub n_max: u64,
    #[arg(long, default_value_t = 1)]
    pub b: u32,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// potential:fc:<c>, potential:opt, mw:<eta>, majority or random-leader.
    #[arg(long)]
    pub forecaster: String,
    /// even-split, optimal or uniform:<A> with A like 1,2.
    #[arg(long)]
    pub adversary: String,
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 0)]
    pub b: u32,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub max_rounds: usize,
    /// Write the first game's transcript here.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// fc:<c>, opt, const:<v>, exact, perfect or linear.
    #[arg(long)]
    pub potential: String,
    #[arg(long, default_value_t = 1)]
    pub b: u32,
    #[arg(long, default_value_t = 6)]
    pub phi_cap: u64,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Use the uniform-split check for concave potentials.
    #[arg(long)]
    pub shortcut: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    execute(&cli.command, stdout)
}

/// Process entry point; returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli.command, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Exact(a) => with_output(&a.out, stdout, |w| cmd_exact(a, w)),
        Command::Surface(a) => with_output(&a.out, stdout, |w| {
            cmd_surface(a.imax, a.jmax, a.b, &a.solver, w)
        }),
        Command::Table(a) => with_output(&a.out, stdout, |w| cmd_surface(39, 15, a.b, &a.solver, w)),
        Command::Bounds(a) => with_output(&a.out, stdout, |w| cmd_bounds(a, w)),
        Command::Simulate(a) => with_output(&a.out, stdout, |w| cmd_simulate(a, w)),
        Command::Verify(a) => with_output(&a.out, stdout, |w| cmd_verify(a, w)),
    }
}

fn with_output(
    path: &Option<PathBuf>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            body(stdout)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn cmd_exact(a: &ExactArgs, w: &mut dyn Write) -> Result<()> {
    let budget = MistakeBudget(a.b);
    let start = State::start(a.n, budget)?;
    let mut solver = a.solver.solver(budget)?;
    let value = solver.minimax_loss(&start)?;
    writeln!(w, "{} ({})", value.render_ratio(), decimal(&value))?;
    if a.moves {
        writeln!(w)?;
        let mut out = csv::Writer::from_writer(&mut *w);
        out.write_record(["state", "A", "dec", "loss_decimal", "loss_rational"])?;
        let states: Vec<State> = solver.entries().into_iter().map(|(s, _)| s.clone()).collect();
        for s in states {
            let v = solver.minimax_loss(&s)?;
            let (choices, dec) = if s.is_absorbing() {
                (String::new(), String::new())
            } else {
                let mv = solver.optimal_adversary_move(&s)?;
                (mv.choices.to_string(), mv.dec.to_part_string())
            };
            out.write_record([
                s.to_colon_string(),
                choices,
                dec,
                decimal(&v),
                v.render_ratio(),
            ])?;
        }
        out.flush()?;
    }
    a.solver.persist(&solver)
}

fn cell_state(i: u32, j: u32, budget: MistakeBudget) -> Option<State> {
    let mut counts = vec![0; budget.levels()];
    counts[0] = i;
    counts[1] = j;
    State::from_counts(counts)
}

fn cmd_surface(imax: u32, jmax: u32, b: u32, args: &SolverArgs, w: &mut dyn Write) -> Result<()> {
    if b < 1 {
        return Err(Error::Config("surface needs b >= 1".into()));
    }
    let budget = MistakeBudget(b);
    let mut solver = args.solver(budget)?;
    if let Some(corner) = cell_state(imax, jmax, budget) {
        solver.solve(&corner)?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["i", "j", "loss_decimal", "loss_rational"])?;
    for i in 0..=imax {
        for j in 0..=jmax {
            match cell_state(i, j, budget) {
                None => out.write_record([i.to_string(), j.to_string(), String::new(), String::new()])?,
                Some(s) => {
                    let v = solver.minimax_loss(&s)?;
                    out.write_record([i.to_string(), j.to_string(), decimal(&v), v.render_ratio()])?;
                }
            }
        }
    }
    out.flush()?;
    args.persist(&solver)
}

fn na(e: &Error) -> String {
    match e {
        Error::Domain(msg) => format!("n/a: {msg}"),
        Error::ResourceLimit { phi, cap } => format!("n/a: phi {phi} > cap {cap}"),
        other => format!("n/a: {other}"),
    }
}

fn cmd_bounds(a: &BoundsArgs, w: &mut dyn Write) -> Result<()> {
    let budget = MistakeBudget(a.b);
    let (lo, hi) = match a.n {
        Some(n) => (n, n),
        None => (a.n_min, a.n_max),
    };
    if lo == 0 || lo > hi {
        return Err(Error::Config(format!("invalid n range {lo}..={hi}")));
    }
    let mut solver = a.solver.solver(budget)?;
    let cap = solver.config().phi_cap;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "n",
        "b",
        "lower_bound",
        "exact_decimal",
        "exact_rational",
        "f_opt",
        "c_opt",
        "f_c_figure",
        "upper_bound",
        "precise_upper_bound",
        "mw_bound",
    ])?;
    for n in lo..=hi {
        let n32 = u32::try_from(n).map_err(|_| Error::Domain(format!("n = {n} too large")))?;
        let start = State::start(n32, budget)?;
        let lower = lower_bound(n, budget)
            .map_err(|_| Error::Domain("b > floor(log2 n)/5".into()));
        let exact = if phi(&start) <= cap {
            solver.minimax_loss(&start)
        } else {
            Err(Error::ResourceLimit {
                phi: phi(&start),
                cap,
            })
        };
        let opt = f_opt(&start);
        let figure = c_preset(CPreset::Figure, n, budget)
            .and_then(PotentialParams::new)
            .map(|p| f_c(&start, &p));
        let upper = upper_bound(n, budget)?;
        let precise = precise_upper_bound(n, budget)
            .map_err(|_| Error::Domain("needs 1 <= b < ln(n)/2".into()));
        let mw = mw_loss_bound(n, budget)?.0;

        // lower <= exact <= f_opt <= each closed form
        let mut chain: Vec<(&str, f64)> = Vec::new();
        if let Ok(l) = &lower {
            chain.push(("lower_bound", *l));
        }
        if let Ok(e) = &exact {
            chain.push(("exact", e.approx()));
        }
        chain.push(("f_opt", opt.value));
        for pair in chain.windows(2) {
            check_order(n, pair[0], pair[1])?;
        }
        check_order(n, ("f_opt", opt.value), ("upper_bound", upper))?;
        if let Ok(p) = &precise {
            check_order(n, ("f_opt", opt.value), ("precise_upper_bound", *p))?;
        }

        let fmt = |r: &Result<f64>| r.as_ref().map_or_else(na, |v| format!("{v:.6}"));
        let (exact_dec, exact_rat) = match &exact {
            Ok(v) => (decimal(v), v.render_ratio()),
            Err(e) => (na(e), na(e)),
        };
        out.write_record([
            n.to_string(),
            a.b.to_string(),
            fmt(&lower),
            exact_dec,
            exact_rat,
            format!("{:.6}", opt.value),
            format!("{:.6}", opt.c),
            fmt(&figure),
            format!("{upper:.6}"),
            fmt(&precise),
            format!("{mw:.6}"),
        ])?;
    }
    out.flush()?;
    a.solver.persist(&solver)
}

fn check_order(n: u64, lo: (&str, f64), hi: (&str, f64)) -> Result<()> {
    if lo.1 > hi.1 + 1e-9 {
        return Err(Error::Internal(format!(
            "n = {n}: {} = {} exceeds {} = {}",
            lo.0, lo.1, hi.0, hi.1
        )));
    }
    Ok(())
}

/// Forecaster named on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum ForecasterSpec {
    LogPotential(f64),
    OptimizedPotential,
    MultiplicativeWeights(f64),
    Majority,
    RandomLeader,
}

fn parse_f64(text: &str, what: &str) -> Result<f64> {
    text.parse()
        .map_err(|e| Error::Config(format!("bad {what} {text:?}: {e}")))
}

impl ForecasterSpec {
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(c) = text.strip_prefix("potential:fc:") {
            return Ok(Self::LogPotential(parse_f64(c, "c")?));
        }
        if let Some(eta) = text.strip_prefix("mw:") {
            return Ok(Self::MultiplicativeWeights(parse_f64(eta, "eta")?));
        }
        match text {
            "potential:opt" => Ok(Self::OptimizedPotential),
            "majority" => Ok(Self::Majority),
            "random-leader" => Ok(Self::RandomLeader),
            _ => Err(Error::Config(format!("unknown forecaster {text:?}"))),
        }
    }

    pub fn build(&self, d: usize) -> Result<Box<dyn Forecaster>> {
        Ok(match self {
            Self::LogPotential(c) => Box::new(PotentialForecaster::new(
                Arc::new(LogPotential::new(*c)?),
                d,
            )?),
            Self::OptimizedPotential => {
                Box::new(PotentialForecaster::new(Arc::new(OptimizedLogPotential), d)?)
            }
            Self::MultiplicativeWeights(eta) => Box::new(MultiplicativeWeights::new(*eta)?),
            Self::Majority => Box::new(MajorityOfLeaders),
            Self::RandomLeader => Box::new(RandomLeader),
        })
    }
}

/// Adversary named on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum AdversarySpec {
    EvenSplit,
    Optimal,
    Uniform(ChoiceSet),
}

impl AdversarySpec {
    pub fn parse(text: &str, d: usize) -> Result<Self> {
        if let Some(set) = text.strip_prefix("uniform:") {
            return Ok(Self::Uniform(ChoiceSet::parse(set, d)?));
        }
        match text {
            "even-split" => Ok(Self::EvenSplit),
            "optimal" => Ok(Self::Optimal),
            _ => Err(Error::Config(format!("unknown adversary {text:?}"))),
        }
    }
}

fn cmd_simulate(a: &SimulateArgs, w: &mut dyn Write) -> Result<()> {
    let budget = MistakeBudget(a.b);
    let d = a.solver.d;
    let start = State::start(a.n, budget)?;
    let fspec = ForecasterSpec::parse(&a.forecaster)?;
    let aspec = AdversarySpec::parse(&a.adversary, d)?;
    fspec.build(d)?;
    let solver = match aspec {
        AdversarySpec::Optimal => {
            let mut s = a.solver.solver(budget)?;
            s.solve(&start)?;
            a.solver.persist(&s)?;
            Some(Arc::new(s))
        }
        AdversarySpec::EvenSplit => {
            EvenSplitAdversary::new(d)?;
            None
        }
        AdversarySpec::Uniform(_) => None,
    };
    let make_adversary = || -> Result<Box<dyn Adversary>> {
        Ok(match &aspec {
            AdversarySpec::EvenSplit => Box::new(EvenSplitAdversary::new(d)?),
            AdversarySpec::Optimal => Box::new(OptimalAdversary::from_solver(
                solver.clone().expect("solved above"),
            )),
            AdversarySpec::Uniform(set) => Box::new(UniformAdversary::new(set.clone())),
        })
    };
    if let Some(path) = &a.transcript {
        let mut f = fspec.build(d)?;
        let mut adv = make_adversary()?;
        let t = play_game(f.as_mut(), adv.as_mut(), &start, a.max_rounds, trial_seed(a.seed, 0))?;
        t.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let summary = monte_carlo(
        || fspec.build(d),
        make_adversary,
        &start,
        a.trials,
        a.max_rounds,
        a.seed,
    )?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "forecaster",
        "adversary",
        "n",
        "b",
        "d",
        "trials",
        "seed",
        "mean_loss",
        "std_error",
        "mean_expected_loss",
        "expected_std_error",
        "censored",
    ])?;
    out.write_record([
        a.forecaster.clone(),
        a.adversary.clone(),
        a.n.to_string(),
        a.b.to_string(),
        d.to_string(),
        a.trials.to_string(),
        a.seed.to_string(),
        format!("{:.6}", summary.mean_loss),
        format!("{:.6}", summary.std_error),
        format!("{:.6}", summary.mean_expected_loss),
        format!("{:.6}", summary.expected_std_error),
        summary.censored.to_string(),
    ])?;
    out.flush()?;
    Ok(())
}

const VERIFY_HEADER: [&str; 11] = [
    "potential",
    "b",
    "d",
    "phi_cap",
    "result",
    "states",
    "witness_state",
    "witness_A",
    "witness_dec",
    "lhs",
    "rhs",
];

fn certification_row<S: LossScalar>(
    name: &str,
    a: &VerifyArgs,
    cert: &Certification<S>,
) -> [String; 11] {
    let head = [name.to_string(), a.b.to_string(), a.d.to_string(), a.phi_cap.to_string()];
    let tail: [String; 7] = match cert {
        Certification::Certified { states, .. } => [
            "certified".into(),
            states.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ],
        Certification::Refuted(Witness::Boundary { value }) => [
            "refuted".into(),
            String::new(),
            State::absorbing(MistakeBudget(a.b)).to_colon_string(),
            String::new(),
            String::new(),
            decimal(value),
            "0.000000".into(),
        ],
        Certification::Refuted(Witness::Decomposition {
            state,
            choices,
            dec,
            lhs,
            rhs,
        }) => [
            "refuted".into(),
            String::new(),
            state.to_colon_string(),
            choices.to_string(),
            dec.to_part_string(),
            decimal(lhs),
            decimal(rhs),
        ],
    };
    let mut row: [String; 11] = Default::default();
    for (slot, v) in row.iter_mut().zip(head.into_iter().chain(tail)) {
        *slot = v;
    }
    row
}

fn cmd_verify(a: &VerifyArgs, w: &mut dyn Write) -> Result<()> {
    let budget = MistakeBudget(a.b);
    let spec = a.potential.as_str();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(VERIFY_HEADER)?;
    if a.shortcut {
        let report = if let Some(c) = spec.strip_prefix("fc:") {
            concavity_shortcut_check(&LogPotential::new(parse_f64(c, "c")?)?, budget, a.phi_cap, a.d)?
        } else if spec == "linear" {
            concavity_shortcut_check(&LinearPotential, budget, a.phi_cap, a.d)?
        } else {
            return Err(Error::Config(format!(
                "the shortcut needs a concave potential (fc:<c> or linear), got {spec:?}"
            )));
        };
        let (state, lhs, rhs, choices) = report.witness.as_ref().map_or_else(
            || (String::new(), String::new(), String::new(), String::new()),
            |wit| {
                (
                    wit.state.to_colon_string(),
                    format!("{:.6}", wit.lhs),
                    format!("{:.6}", wit.rhs),
                    wit.a.to_string(),
                )
            },
        );
        out.write_record([
            format!("{spec} (shortcut)"),
            a.b.to_string(),
            a.d.to_string(),
            a.phi_cap.to_string(),
            if report.passed { "certified" } else { "refuted" }.into(),
            String::new(),
            state,
            choices,
            String::new(),
            lhs,
            rhs,
        ])?;
        out.flush()?;
        return Ok(());
    }
    let row = if spec == "exact" {
        let cfg = SolverConfig::new(budget)
            .with_d(a.d)
            .with_phi_cap(a.phi_cap.max(default_phi_cap(budget)));
        let f = ExactLossPotential::new(budget, cfg)?;
        let cert: Certification<BigRational> = certify(&f, budget, a.phi_cap, a.d)?;
        certification_row(spec, a, &cert)
    } else {
        let f: Box<dyn Potential<f64>> = if let Some(c) = spec.strip_prefix("fc:") {
            Box::new(LogPotential::new(parse_f64(c, "c")?)?)
        } else if let Some(v) = spec.strip_prefix("const:") {
            Box::new(ConstantPotential(parse_f64(v, "constant")?))
        } else {
            match spec {
                "opt" => Box::new(OptimizedLogPotential),
                "perfect" => Box::new(PerfectExpertPotential),
                "linear" => Box::new(LinearPotential),
                _ => return Err(Error::Config(format!("unknown potential {spec:?}"))),
            }
        };
        let cert = certify(f.as_ref(), budget, a.phi_cap, a.d)?;
        certification_row(spec, a, &cert)
    };
    out.write_record(row)?;
    out.flush()?;
    Ok(())
}

/// Convenience for tests and scripts: runs a command line and returns
/// stdout as a string.
pub fn run_to_string(args: &[&str]) -> Result<String> {
    let mut buf = Vec::new();
    let mut full = vec!["expert-minimax"];
    full.extend_from_slice(args);
    run_with(full, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_command_values() {
        assert_eq!(run_to_string(&["exact", "--n", "4", "--b", "0"]).unwrap(), "1/1 (1.000000)\n");
        assert_eq!(run_to_string(&["exact", "--n", "1", "--b", "1"]).unwrap(), "1/1 (1.000000)\n");
        assert_eq!(run_to_string(&["exact", "--n", "2", "--b", "1"]).unwrap(), "7/4 (1.750000)\n");
    }

    #[test]
    fn exact_moves_block() {
        let text = run_to_string(&["exact", "--n", "2", "--b", "0", "--moves"]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("1/2 (0.500000)"));
        assert_eq!(lines.next(), Some(""));
        assert_eq!(lines.next(), Some("state,A,dec,loss_decimal,loss_rational"));
        assert_eq!(lines.next(), Some("1,,,0.000000,0/1"));
        assert_eq!(lines.next(), Some("2,\"1,2\",1|1,0.500000,1/2"));
    }

    #[test]
    fn specs_parse() {
        assert_eq!(ForecasterSpec::parse("potential:fc:2").unwrap(), ForecasterSpec::LogPotential(2.0));
        assert_eq!(ForecasterSpec::parse("mw:0.5").unwrap(), ForecasterSpec::MultiplicativeWeights(0.5));
        assert!(ForecasterSpec::parse("potential:fc:x").is_err());
        assert!(ForecasterSpec::parse("oracle").is_err());
        assert_eq!(
            AdversarySpec::parse("uniform:1,3", 3).unwrap(),
            AdversarySpec::Uniform(ChoiceSet::parse("1,3", 3).unwrap())
        );
        assert!(AdversarySpec::parse("uniform:4", 3).is_err());
    }

    #[test]
    fn error_exit_codes() {
        let cap = run_to_string(&["exact", "--n", "5", "--b", "2", "--phi-cap", "4"]).unwrap_err();
        assert_eq!(cap.exit_code(), 3);
        let domain = run_to_string(&["exact", "--n", "0", "--b", "1"]).unwrap_err();
        assert_eq!(domain.exit_code(), 2);
    }
}
