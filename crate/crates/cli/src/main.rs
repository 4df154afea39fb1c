use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use thickfam::io::{self, ChallengeFile, GeodesicFile, WitnessFile};
use thickfam::oracle::brute_force_alpha;
use thickfam::rational::int;
use thickfam::{
    challenge_respond, dyadic_bush_with_budget, gauge_renorm, parse_rational, random_bush,
    random_pasted_geodesic, truncated_family, validate_bush, validate_witness, Bush, Error, Label,
    LineTree, NumberFormat, Rational, Real, Vector, DEFAULT_DEPTH_BUDGET,
};

#[derive(Parser)]
#[command(name = "thickfam", version, about = "Thick families of geodesics from epsilon-bushes")]
struct Cli {
    /// Largest depth any bush, line or family may reach
    #[arg(long, global = true, env = "THICKFAM_DEPTH_BUDGET", default_value_t = DEFAULT_DEPTH_BUDGET)]
    depth_budget: usize,

    /// Write the JSON report to a file instead of stdout
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    /// How numbers are written in reports and tables
    #[arg(long, global = true, value_enum, default_value_t = Format::Rational)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Rational,
    Decimal,
}

impl From<Format> for NumberFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Rational => NumberFormat::Rational,
            Format::Decimal => NumberFormat::Decimal,
        }
    }
}

#[derive(Args)]
struct BushArg {
    /// Bush document
    #[arg(long, default_value = "bush.json")]
    bush: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dyadic or a seeded random bush
    BushGen {
        /// Dyadic bush of this depth
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        dyadic: Option<usize>,
        /// Random bush from this seed
        #[arg(long)]
        random: Option<u64>,
        /// Depth of the random bush
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(short, long, default_value = "bush.json")]
        output: PathBuf,
    },
    /// Check the bush axioms
    BushValidate {
        #[command(flatten)]
        bush: BushArg,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
        /// Only the bush axioms, without the normalization checks
        #[arg(long)]
        raw: bool,
    },
    /// Build one broken line and optionally export its vertex table
    LineBuild {
        #[command(flatten)]
        bush: BushArg,
        /// Binary label; empty, "-" or "∅" for the root
        #[arg(long, default_value = "")]
        label: String,
        /// The intermediate line instead of the line itself
        #[arg(long)]
        intermediate: bool,
        /// CSV export; without a value the file is named after the label
        #[arg(long, num_args = 0..=1)]
        export: Option<Option<PathBuf>>,
    },
    /// Deviation between the two children of a line
    DeviationReport {
        #[command(flatten)]
        bush: BushArg,
        #[arg(long, default_value = "")]
        label: String,
        /// Restrict to these gap indices (0-based, comma separated)
        #[arg(long, value_delimiter = ',')]
        gaps: Option<Vec<usize>>,
    },
    /// Answer a challenge and write the witness
    Challenge {
        #[command(flatten)]
        bush: BushArg,
        /// Challenge document; without it one is drawn from --seed
        #[arg(long, required_unless_present = "seed")]
        challenge: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of challenge points drawn with --seed
        #[arg(long, default_value_t = 2)]
        points: usize,
        #[arg(short, long, default_value = "witness.json")]
        output: PathBuf,
        /// Required deviation; defaults to a quarter of epsilon
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
    /// Check a witness against a challenge
    WitnessValidate {
        #[command(flatten)]
        bush: BushArg,
        #[arg(long)]
        challenge: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
    /// Exhaustive thickness bound over a truncated family
    AlphaBruteforce {
        #[command(flatten)]
        bush: BushArg,
        #[arg(long, default_value_t = 2)]
        family_depth: usize,
        #[arg(long, default_value_t = 1)]
        n_max: usize,
        /// Grid of vertices of the all-zero line of this depth
        #[arg(long)]
        grid_depth: Option<usize>,
    },
    /// Gauge of the convex hull of the bush and its negatives
    GaugeEval {
        #[command(flatten)]
        bush: BushArg,
        /// Comma separated coordinates
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
    /// Write the bush and every line up to a depth into a directory
    Export {
        #[command(flatten)]
        bush: BushArg,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Input(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_budget() {
            Failure::Budget(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome = Result<(bool, Value), Failure>;

struct Ctx {
    budget: usize,
    fmt: NumberFormat,
}

impl Ctx {
    fn q(&self, q: &Rational) -> String {
        self.fmt.render(q)
    }

    fn r(&self, r: &Real) -> String {
        match r.exact() {
            Some(q) => self.q(q),
            None => r.to_string_repr(),
        }
    }

    fn qs(&self, qs: &[Rational]) -> Vec<String> {
        qs.iter().map(|q| self.q(q)).collect()
    }

    fn tree(&self, path: &Path) -> Result<LineTree, Failure> {
        let b = load_bush(path)?;
        Ok(LineTree::with_budget(Arc::new(b), self.budget)?)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_bush(path: &Path) -> Result<Bush, Failure> {
    Ok(io::read_bush(&read(path)?)?)
}

fn parse_label(s: &str) -> Result<Label, Failure> {
    Ok(Label::parse(s.trim())?)
}

fn label_name(l: &Label) -> String {
    if l.is_empty() {
        "root".into()
    } else {
        l.to_bit_string()
    }
}

fn alpha_or_default(tree: &LineTree, alpha: &Option<String>) -> Result<Rational, Failure> {
    match alpha {
        Some(a) => Ok(parse_rational(a)?),
        None => Ok(tree.bush().epsilon() / int(4)),
    }
}

fn budget_check(depth: usize, budget: usize) -> Result<(), Failure> {
    if depth > budget {
        return Err(Error::Depth {
            requested: depth,
            available: budget,
            reason: "depth budget",
        }
        .into());
    }
    Ok(())
}

fn bush_gen(ctx: &Ctx, dyadic: Option<usize>, random: Option<u64>, depth: usize, output: &Path) -> Outcome {
    let b = match (dyadic, random) {
        (Some(n), _) => dyadic_bush_with_budget(n, ctx.budget)?,
        (None, Some(seed)) => {
            budget_check(depth, ctx.budget)?;
            random_bush(seed, depth)?
        }
        (None, None) => return Err(Failure::Input("one of --dyadic or --random is required".into())),
    };
    write(output, &io::write_bush(&b)?)?;
    Ok((
        true,
        json!({
            "command": "bush-gen",
            "output": output.display().to_string(),
            "depth": b.depth(),
            "dimension": b.space().dimension(),
            "norm": b.space().kind().tag(),
            "epsilon": ctx.q(b.epsilon()),
            "level_sizes": b.level_sizes(),
        }),
    ))
}

fn bush_validate(ctx: &Ctx, path: &Path, tol: f64, raw: bool) -> Outcome {
    if tol < 0.0 {
        return Err(Failure::Input("tolerance must be nonnegative".into()));
    }
    let b = load_bush(path)?;
    let rep = validate_bush(&b, tol);
    let pass = if raw { rep.is_bush() } else { rep.is_normalized() };
    Ok((
        pass,
        json!({
            "command": "bush-validate",
            "depth": rep.depth,
            "level_sizes": rep.level_sizes,
            "epsilon": ctx.q(&rep.epsilon),
            "lambda_max": ctx.q(&rep.lambda_max),
            "checks": {
                "weights_nonnegative": rep.weights_nonnegative,
                "weight_sums": rep.weight_sums,
                "convexity": rep.convexity,
                "separation": rep.separation,
                "blocks_nontrivial": rep.blocks_nontrivial,
                "unit_norms": rep.unit_norms,
                "functional_values": rep.functional_values,
                "functional_norm_one": rep.functional_norm_one,
                "lambda_bound": rep.lambda_bound,
            },
            "min_separation": rep.min_separation.as_ref().map(|r| ctx.r(r)),
            "max_norm": ctx.r(&rep.max_norm),
            "functional_norm": ctx.r(&rep.functional_norm),
            "is_bush": rep.is_bush(),
            "normalized": rep.is_normalized(),
            "failures": rep.failures,
            "warnings": rep.warnings,
        }),
    ))
}

fn line_build(
    ctx: &Ctx,
    path: &Path,
    label: &str,
    intermediate: bool,
    export: &Option<Option<PathBuf>>,
) -> Outcome {
    let tree = ctx.tree(path)?;
    let label = parse_label(label)?;
    let line = if intermediate {
        tree.intermediate(&label)?
    } else {
        tree.line(&label)?
    };
    let exported = match export {
        None => None,
        Some(p) => {
            let p = p.clone().unwrap_or_else(|| {
                let suffix = if intermediate { "_intermediate" } else { "" };
                PathBuf::from(format!("line_{}{suffix}.csv", label_name(&label)))
            });
            write(&p, &io::write_line_table(&tree, &line, ctx.fmt))?;
            Some(p.display().to_string())
        }
    };
    Ok((
        true,
        json!({
            "command": "line-build",
            "label": label.to_string(),
            "intermediate": intermediate,
            "terms": line.terms().len(),
            "vertices": line.vertex_count(),
            "total_length": ctx.q(&line.total_length()),
            "max_gap": ctx.q(&line.max_gap()),
            "max_level": line.max_level(),
            "export": exported,
        }),
    ))
}

fn deviation_report(ctx: &Ctx, path: &Path, label: &str, gaps: &Option<Vec<usize>>) -> Outcome {
    let tree = ctx.tree(path)?;
    let label = parse_label(label)?;
    let dev = tree.sibling_deviation(&label, gaps.as_deref())?;
    let pass = dev.total.at_least(&dev.guaranteed, 0.0);
    let gap_rows: Vec<Value> = dev
        .gaps
        .iter()
        .map(|g| {
            json!({
                "gap": g.gap,
                "start": ctx.q(&g.start),
                "length": ctx.q(&g.length),
                "midpoint": ctx.q(&g.midpoint),
                "deviation": ctx.r(&g.deviation),
                "lower_bound": ctx.q(&g.lower_bound),
            })
        })
        .collect();
    Ok((
        pass,
        json!({
            "command": "deviation-report",
            "label": dev.label.to_string(),
            "total": ctx.r(&dev.total),
            "selected_length": ctx.q(&dev.selected_length),
            "guaranteed": ctx.q(&dev.guaranteed),
            "empty_selection": dev.empty_selection,
            "gaps": gap_rows,
        }),
    ))
}

fn random_challenge(tree: &LineTree, seed: u64, points: usize) -> Result<ChallengeFile, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = tree.max_depth().min(3);
    let g = random_pasted_geodesic(tree, &mut rng, 3, depth)?;
    let denom = 64i64;
    let mut t: Vec<Rational> = (0..points)
        .map(|_| Rational::new(rng.gen_range(0..=denom).into(), denom.into()))
        .collect();
    t.sort();
    t.dedup();
    Ok(ChallengeFile::new(&g, &t))
}

fn witness_json(ctx: &Ctx, rep: &thickfam::WitnessReport) -> Value {
    json!({
        "containment": rep.containment,
        "interleaving": rep.interleaving,
        "common_points": rep.common_points,
        "deviation": rep.deviation,
        "challenge_images": rep.challenge_images,
        "honest_total": rep.honest_total,
        "achieved": ctx.r(&rep.achieved),
        "alpha": ctx.q(&rep.alpha),
        "depth": rep.depth,
        "failures": rep.failures,
    })
}

#[allow(clippy::too_many_arguments)]
fn challenge(
    ctx: &Ctx,
    path: &Path,
    file: &Option<PathBuf>,
    seed: Option<u64>,
    points: usize,
    output: &Path,
    alpha: &Option<String>,
    tol: f64,
) -> Outcome {
    let tree = ctx.tree(path)?;
    let chal = match (file, seed) {
        (Some(f), _) => io::from_json::<ChallengeFile>(&read(f)?, "challenge")?,
        (None, Some(s)) => random_challenge(&tree, s, points)?,
        (None, None) => return Err(Failure::Input("one of --challenge or --seed is required".into())),
    };
    let g = chal.geodesic.to_geodesic(&tree)?;
    let t = chal.points()?;
    let alpha = alpha_or_default(&tree, alpha)?;
    let resp = challenge_respond(&tree, &g, &t)?;
    let rep = validate_witness(&tree, &g, &resp.g_tilde, &t, &resp.witness, &alpha, tol);
    write(output, &io::to_json(&WitnessFile::from_response(&resp))?)?;
    let levels: Vec<usize> = resp.pieces.iter().map(|p| p.level).collect();
    Ok((
        rep.passed(),
        json!({
            "command": "challenge",
            "challenge": serde_json::to_value(&chal).map_err(|e| Failure::Input(e.to_string()))?,
            "output": output.display().to_string(),
            "levels": levels,
            "deviation_total": ctx.r(&resp.witness.deviation_total),
            "validation": witness_json(ctx, &rep),
        }),
    ))
}

fn witness_validate(
    ctx: &Ctx,
    path: &Path,
    chal: &Path,
    witness: &Path,
    alpha: &Option<String>,
    tol: f64,
) -> Outcome {
    if tol < 0.0 {
        return Err(Failure::Input("tolerance must be nonnegative".into()));
    }
    let tree = ctx.tree(path)?;
    let chal: ChallengeFile = io::from_json(&read(chal)?, "challenge")?;
    let wf: WitnessFile = io::from_json(&read(witness)?, "witness")?;
    let g = chal.geodesic.to_geodesic(&tree)?;
    let response = wf
        .response
        .as_ref()
        .ok_or_else(|| Failure::Input("witness has no response geodesic".into()))?;
    let g_tilde = response.geodesic.to_geodesic(&tree)?;
    let w = wf.to_witness()?;
    let alpha = alpha_or_default(&tree, alpha)?;
    let rep = validate_witness(&tree, &g, &g_tilde, &chal.points()?, &w, &alpha, tol);
    let mut report = witness_json(ctx, &rep);
    report["command"] = json!("witness-validate");
    Ok((rep.passed(), report))
}

fn alpha_bruteforce(
    ctx: &Ctx,
    path: &Path,
    family_depth: usize,
    n_max: usize,
    grid_depth: Option<usize>,
) -> Outcome {
    let tree = ctx.tree(path)?;
    let family = truncated_family(&tree, family_depth)?;
    let grid_depth = grid_depth.unwrap_or(family_depth);
    let grid = tree.line(&Label::from_bits(&vec![0; grid_depth])?)?.arclengths().to_vec();
    let rep = brute_force_alpha(&tree, &family, n_max, &grid)?;
    let worst = rep.worst.as_ref().map(|w| {
        json!({
            "geodesic_index": w.geodesic,
            "challenge": ctx.qs(&w.challenge),
            "response_index": w.response,
        })
    });
    let pieces = |i: usize| serde_json::to_value(GeodesicFile::from_geodesic(&family[i])).ok();
    Ok((
        true,
        json!({
            "command": "alpha-bruteforce",
            "bound": ctx.r(&rep.bound),
            "family_depth": family_depth,
            "family_size": rep.family_size,
            "grid_depth": grid_depth,
            "grid_size": rep.grid_size,
            "n_max": rep.n_max,
            "challenges": rep.challenges,
            "worst": worst,
            "worst_geodesic": rep.worst.as_ref().and_then(|w| pieces(w.geodesic)),
            "worst_response": rep.worst.as_ref().and_then(|w| w.response.and_then(pieces)),
        }),
    ))
}

fn parse_vector(s: &str) -> Result<Vector, Failure> {
    let coords = s
        .split(',')
        .map(|c| parse_rational(c.trim()))
        .collect::<thickfam::Result<Vec<_>>>()?;
    Ok(Vector::from_dense(coords))
}

fn gauge_eval(ctx: &Ctx, path: &Path, vector: &str) -> Outcome {
    let b = load_bush(path)?;
    let v = parse_vector(vector)?;
    let space = b.space();
    let gauge = gauge_renorm(space, &b.all_vectors(), &v)?;
    let norm = space.norm(&v)?;
    let functional = b.functional().eval(&v)?;
    let abs_f = if functional < Rational::from_integer(0.into()) {
        -functional.clone()
    } else {
        functional.clone()
    };
    let tol = if gauge.is_exact() && norm.is_exact() { 0.0 } else { 1e-9 };
    let within = gauge.at_least(&abs_f, tol) && gauge.to_f64() <= norm.to_f64() + tol;
    Ok((
        within,
        json!({
            "command": "gauge-eval",
            "vector": ctx.qs(&v.to_dense()),
            "gauge": ctx.r(&gauge),
            "exact": gauge.is_exact(),
            "norm": ctx.r(&norm),
            "functional": ctx.q(&functional),
            "within_bounds": within,
        }),
    ))
}

fn export(ctx: &Ctx, path: &Path, depth: usize, out: &Path) -> Outcome {
    let tree = ctx.tree(path)?;
    budget_check(depth, tree.max_depth())?;
    let lines_dir = out.join("lines");
    fs::create_dir_all(&lines_dir).map_err(|e| Failure::Input(format!("{}: {e}", lines_dir.display())))?;
    write(&out.join("bush.json"), &io::write_bush(tree.bush())?)?;
    let mut files = Vec::new();
    for n in 0..=depth {
        for label in Label::all_of_length(n) {
            let line = tree.line(&label)?;
            let name = format!("{}.csv", label_name(&label));
            write(&lines_dir.join(&name), &io::write_line_table(&tree, &line, ctx.fmt))?;
            files.push(json!({
                "label": label.to_string(),
                "file": format!("lines/{name}"),
                "vertices": line.vertex_count(),
            }));
        }
    }
    let index = json!({ "depth": depth, "format": ctx.fmt.tag(), "lines": files });
    write(&out.join("index.json"), &pretty(&index))?;
    Ok((
        true,
        json!({
            "command": "export",
            "out": out.display().to_string(),
            "depth": depth,
            "files": files.len() + 2,
        }),
    ))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Outcome {
    let ctx = Ctx {
        budget: cli.depth_budget,
        fmt: cli.format.into(),
    };
    match &cli.command {
        Command::BushGen { dyadic, random, depth, output } => bush_gen(&ctx, *dyadic, *random, *depth, output),
        Command::BushValidate { bush, tol, raw } => bush_validate(&ctx, &bush.bush, *tol, *raw),
        Command::LineBuild { bush, label, intermediate, export: e } => {
            line_build(&ctx, &bush.bush, label, *intermediate, e)
        }
        Command::DeviationReport { bush, label, gaps } => deviation_report(&ctx, &bush.bush, label, gaps),
        Command::Challenge { bush, challenge: c, seed, points, output, alpha, tol } => {
            challenge(&ctx, &bush.bush, c, *seed, *points, output, alpha, *tol)
        }
        Command::WitnessValidate { bush, challenge: c, witness, alpha, tol } => {
            witness_validate(&ctx, &bush.bush, c, witness, alpha, *tol)
        }
        Command::AlphaBruteforce { bush, family_depth, n_max, grid_depth } => {
            alpha_bruteforce(&ctx, &bush.bush, *family_depth, *n_max, *grid_depth)
        }
        Command::GaugeEval { bush, vector } => gauge_eval(&ctx, &bush.bush, vector),
        Command::Export { bush, depth, out } => export(&ctx, &bush.bush, *depth, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (code, report) = match run(&cli) {
        Ok((pass, mut report)) => {
            report["status"] = json!(if pass { "pass" } else { "fail" });
            (if pass { 0 } else { 1 }, report)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            (2, json!({ "status": "input-error", "error": msg }))
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            (3, json!({ "status": "budget-error", "error": msg }))
        }
    };
    let text = pretty(&report);
    match &cli.report {
        Some(p) => {
            if let Err(e) = fs::write(p, &text) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
