use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use sumfree_lab::caps::Caps;
use sumfree_lab::cayley::{build_cayley, edge_bounds_check, edge_count_formula};
use sumfree_lab::config::{manifest_json, run_sweep, Format, RunConfig, Subcommand as Sub};
use sumfree_lab::error::{Error, Result};
use sumfree_lab::experiments::{compute_profile, csv_string, Experiment};
use sumfree_lab::group::{stats_of_indices, AbelianGroup};
use sumfree_lab::hypergeom::{select_b, HypergeomContext};
use sumfree_lab::index2::{compute_w, enumerate_index2_subgroups, is_nice};
use sumfree_lab::parse::{parse_elements, parse_group_spec, parse_set, parse_subgroup};
use sumfree_lab::set::ElementSet;
use sumfree_lab::solver::max_sum_free;
use sumfree_lab::sumfree::{is_sum_free, Safety};
use sumfree_lab::verify::{verify_all_with, Level, Mutation};

#[derive(Parser)]
#[command(
    name = "sumfree-lab",
    version,
    about = "Sum-free subsets of random subsets of even-order abelian groups"
)]
struct Cli {
    /// Output format where a command supports both.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical form, n, r(G) and the threshold profile.
    Group {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// One row per index-2 subgroup.
    Subgroups {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Edge count and degrees of G_S, with the closed-form checks.
    Cayley {
        #[arg(long)]
        group: String,
        #[arg(long)]
        subgroup: String,
        #[arg(long)]
        gens: String,
    },
    /// Maximum sum-free subsets of a set.
    Solve {
        #[arg(long)]
        group: String,
        #[arg(long)]
        set: String,
        #[arg(long)]
        enumerate: bool,
    },
    /// Hypergeometric tails and pair probabilities.
    Hypergeom {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        k: i64,
        #[arg(long)]
        pair: bool,
        /// With --group, also pick the smallest b with E[X_b] <= n^gamma.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        group: Option<String>,
    },
    /// Monte Carlo sweep over a grid of densities.
    Sweep(SweepArgs),
    /// Built-in check batteries; exits with 4 when one fails.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Plants a known defect so the batteries can be seen to catch it.
        #[arg(long, hide = true)]
        mutation: Option<MutationArg>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MutationArg {
    EdgeFormulaOffByOne,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ExperimentArg {
    Zero,
    One,
    Concentration,
    Nicemax,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SafetyArg {
    Strict,
    Independence,
}

#[derive(Args)]
struct SweepArgs {
    /// A JSON run configuration; replaces every other sweep flag.
    #[arg(long, conflicts_with_all = ["group", "experiment", "p_grid"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    group: Option<String>,
    #[arg(long, value_enum, required_unless_present = "config")]
    experiment: Option<ExperimentArg>,
    #[arg(long, required_unless_present = "config")]
    p_grid: Option<String>,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 3.0)]
    omega: f64,
    #[arg(long, default_value_t = 2)]
    k_max: usize,
    #[arg(long)]
    subgroup: Option<String>,
    #[arg(long, value_enum, default_value = "strict")]
    safety: SafetyArg,
    /// Output file; the manifest goes next to it as `<out>.manifest.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn caps() -> Result<Caps> {
    Caps::from_env()
}

fn group_of(spec: &str, caps: &Caps) -> Result<AbelianGroup> {
    parse_group_spec(spec, caps.elements)
}

fn cmd_group(spec: &str, delta: f64) -> Result<String> {
    // Nothing here materializes the group, so the element cap does not apply.
    let g = group_of(
        spec,
        &Caps {
            elements: u64::MAX,
            ..caps()?
        },
    )?;
    Ok(to_json(&json!({
        "group": spec,
        "canonical": g.canonical_name(),
        "order": g.order(),
        "n": g.n(),
        "r": g.r(),
        "rank2": g.rank2(),
        "even_exponents": g.even_exponents(),
        "odd_moduli": g.odd_moduli(),
        "profile": compute_profile(&g, delta)?,
    })))
}

fn cmd_subgroups(spec: &str, delta: f64, format: Format) -> Result<String> {
    let caps = caps()?;
    let g = group_of(spec, &caps)?;
    let subs = enumerate_index2_subgroups(&g, &caps)?;
    let rows: Vec<(String, u64, u64, usize, bool)> = subs
        .iter()
        .map(|s| {
            (
                s.label(),
                s.r_even(),
                s.r_odd(),
                compute_w(s).len(),
                is_nice(&g, s, delta),
            )
        })
        .collect();
    match format {
        Format::Json => Ok(to_json(
            &rows
                .iter()
                .map(|(i, re, ro, w, nice)| json!({"I": i, "rE": re, "rO": ro, "W": w, "nice": nice}))
                .collect::<Vec<_>>(),
        )),
        Format::Csv => {
            let mut out = String::from("I,rE,rO,W,nice\n");
            for (i, re, ro, w, nice) in rows {
                out.push_str(&format!("{i},{re},{ro},{w},{nice}\n"));
            }
            Ok(out)
        }
    }
}

fn cmd_cayley(spec: &str, subgroup: &str, gens: &str) -> Result<String> {
    let caps = caps()?;
    let g = group_of(spec, &caps)?;
    let sub = parse_subgroup(&g, subgroup)?;
    let s = parse_elements(&g, gens)?;
    let graph = build_cayley(&sub, &s)?;
    let mut report = json!({
        "group": g.canonical_name(),
        "subgroup": sub.label(),
        "generators": s.iter().map(|&x| g.format_element(x)).collect::<Vec<_>>(),
        "edges": graph.edge_count,
        "max_degree": graph.max_degree(),
        "degree_histogram": graph.degree_histogram(),
    });
    if let [x] = s[..] {
        if x != g.zero() {
            let formula = edge_count_formula(&sub, x)?;
            report["formula"] = json!(formula);
            report["formula_agrees"] = json!(formula == graph.edge_count);
        }
    }
    if !s.is_empty() && !s.contains(&g.zero()) && stats_of_indices(&g, &s).m_count == 0 {
        report["bounds"] = serde_json::to_value(edge_bounds_check(&sub, &s, 0.0)?).expect("serializable");
    }
    Ok(to_json(&report))
}

fn cmd_solve(spec: &str, set: &str, enumerate: bool) -> Result<String> {
    let caps = caps()?;
    let g = group_of(spec, &caps)?;
    let a = ElementSet::from_indices(g.size(), parse_set(&g, set)?);
    let best = max_sum_free(&g, &a, enumerate, &caps)?;
    let maximizers: Vec<Value> = best
        .maximizers
        .iter()
        .map(|b| {
            let cert = is_sum_free(&g, &ElementSet::from_indices(g.size(), b.iter().copied()));
            json!({
                "elements": b.iter().map(|&x| g.format_element(x)).collect::<Vec<_>>(),
                "sum_free": cert.sum_free,
            })
        })
        .collect();
    Ok(to_json(&json!({
        "group": g.canonical_name(),
        "set": a.iter().map(|x| g.format_element(x)).collect::<Vec<_>>(),
        "size": best.size,
        "count": if enumerate { json!(best.maximizers.len()) } else { Value::Null },
        "maximizers": maximizers,
    })))
}

fn cmd_hypergeom(n: u64, m: u64, k: i64, pair: bool, gamma: Option<f64>, group: Option<&str>) -> Result<String> {
    let ctx = HypergeomContext::new(n, m, k)?;
    let (exact, asymptotic) = (ctx.tail_exact(), ctx.tail_asymptotic());
    let mut report = json!({
        "n": n, "m": m, "k": k,
        "exact": exact,
        "asymptotic": asymptotic,
        "ratio": asymptotic / exact,
    });
    if pair {
        report["pair"] = serde_json::to_value(ctx.moments()?).expect("serializable");
    }
    if let Some(gamma) = gamma {
        let spec = group.ok_or_else(|| Error::Config("--gamma needs --group".into()))?;
        let g = group_of(spec, &caps()?)?;
        report["b"] = json!(select_b(&g, m, gamma)?);
    }
    Ok(to_json(&report))
}

fn sweep_config(args: &SweepArgs, format: Format) -> Result<RunConfig> {
    if let Some(path) = &args.config {
        return RunConfig::from_json(&fs::read_to_string(path)?);
    }
    let experiment = match args.experiment.expect("required by clap") {
        ExperimentArg::Zero => Experiment::Zero,
        ExperimentArg::One => Experiment::One,
        ExperimentArg::Concentration => Experiment::Concentration,
        ExperimentArg::Nicemax => Experiment::Nicemax,
    };
    Ok(RunConfig {
        subcommand: Sub::Sweep,
        group: args.group.clone().expect("required by clap"),
        experiment: Some(experiment),
        subgroup: args.subgroup.clone(),
        law: None,
        p_grid: args.p_grid.clone(),
        seed: args.seed,
        trials: args.trials,
        delta: args.delta,
        omega: args.omega,
        k_max: args.k_max,
        safety: match args.safety {
            SafetyArg::Strict => Safety::Strict,
            SafetyArg::Independence => Safety::Independence,
        },
        output: args.out.as_ref().map(|p| p.display().to_string()),
        format,
    })
}

fn cmd_sweep(args: &SweepArgs, format: Option<Format>) -> Result<String> {
    let mut config = sweep_config(args, format.unwrap_or_default())?;
    if let Some(f) = format {
        config.format = f;
    }
    let (result, manifest) = run_sweep(&config, &caps()?)?;
    let body = match config.format {
        Format::Csv => csv_string(&result)?,
        Format::Json => to_json(&result),
    };
    match &config.output {
        Some(path) => {
            fs::write(path, &body)?;
            fs::write(format!("{path}.manifest.json"), manifest_json(&manifest))?;
            Ok(String::new())
        }
        None => Ok(body),
    }
}

fn run(cli: Cli) -> Result<(String, bool)> {
    let format = cli.format.map(|f| match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    });
    let out = match &cli.command {
        Command::Group { group, delta } => cmd_group(group, *delta)?,
        Command::Subgroups { group, delta } => cmd_subgroups(group, *delta, format.unwrap_or(Format::Csv))?,
        Command::Cayley { group, subgroup, gens } => cmd_cayley(group, subgroup, gens)?,
        Command::Solve { group, set, enumerate } => cmd_solve(group, set, *enumerate)?,
        Command::Hypergeom {
            n,
            m,
            k,
            pair,
            gamma,
            group,
        } => cmd_hypergeom(*n, *m, *k, *pair, *gamma, group.as_deref())?,
        Command::Sweep(args) => cmd_sweep(args, format)?,
        Command::Verify { level, seed, mutation } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let mutation = match mutation {
                Some(MutationArg::EdgeFormulaOffByOne) => Mutation::EdgeFormulaOffByOne,
                None => Mutation::None,
            };
            let report = verify_all_with(level, *seed, mutation);
            return Ok((to_json(&report), report.all_passed()));
        }
    };
    Ok((out, true))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, passed)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
