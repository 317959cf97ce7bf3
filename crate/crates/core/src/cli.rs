//! The `villadsen` command line: argument parsing, JSON I/O and exit codes.
//!
//! Every command writes one canonical JSON document (sorted keys, no extra
//! whitespace) to stdout. Failures write an `{"error": ...}` document to
//! stdout and a one-line diagnostic to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::fingerprint::{discriminate, fingerprint, Fingerprint, Verdict};
use crate::invariants::{invariant_report, lambda_enclosure, Precision, TwoSeed};
use crate::k0::{
    af_transition, apply_transition, canonical_automorphisms, cone_contains, cone_preservation_witness,
    default_y_grid, gamma_image, state_eval, verify_divisibility, ConeVerdict, GroupAutomorphism, K0Element,
    OrderedGroupModel, WitnessSearch,
};
use crate::numerics::{int, parse_rational, Enclosure, Rational};
use crate::synth::{synthesize_family, BetaSelection, FamilyMember, FamilyRequest, GrowthPolicy};
use crate::system::{
    compute_levels, verify_construction, verify_simplicity_hypotheses, verify_two_seed_hypotheses,
    SystemDescriptor, Truth,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;
pub const EXIT_PARSE: i32 = 4;

const DEFAULT_DEPTH: &str = "120";
const DEFAULT_EPS: &str = "1/1000000000";

#[derive(Debug, Parser)]
#[command(
    name = "villadsen",
    version,
    about = "Exact invariants of multiseed Villadsen direct systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build family members realizing radius of comparison ω.
    Synthesize(SynthesizeArgs),
    /// Level data r(n), s(n), r′(n) of a descriptor.
    Levels(LevelsArgs),
    /// Enclosures of κ, λ, κ₁′ and the radii of comparison.
    Invariants(InvariantsArgs),
    /// Ordered K₀ group operations.
    K0 {
        #[command(subcommand)]
        op: K0Command,
    },
    /// Run every hypothesis verifier on a descriptor.
    Verify(VerifyArgs),
    /// Invariant fingerprint of a family member.
    Fingerprint(FingerprintArgs),
    /// Decide whether two fingerprints are distinguishable.
    Discriminate(DiscriminateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Halving,
    Minimal,
}

impl From<PolicyArg> for GrowthPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Halving => GrowthPolicy::Halving,
            PolicyArg::Minimal => GrowthPolicy::Minimal,
        }
    }
}

#[derive(Debug, Args)]
struct PrecisionArgs {
    /// Depth budget in levels.
    #[arg(long, default_value = DEFAULT_DEPTH)]
    depth: usize,
    /// Target enclosure width, as p/q.
    #[arg(long, default_value = DEFAULT_EPS, value_parser = rational_arg)]
    eps: Rational,
}

impl PrecisionArgs {
    fn precision(&self) -> Result<Precision> {
        Precision::new(self.eps.clone(), self.depth)
    }
}

#[derive(Debug, Args)]
struct SynthesizeArgs {
    #[arg(long, value_parser = rational_arg)]
    omega: Rational,
    /// Number of members with default β values.
    #[arg(long, conflicts_with = "beta")]
    count: Option<usize>,
    /// Explicit β value; may be repeated.
    #[arg(long, value_parser = rational_arg)]
    beta: Vec<Rational>,
    #[arg(long, value_enum, default_value = "halving")]
    policy: PolicyArg,
    /// Also write each member to `member-<i>.json` in this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    precision: PrecisionArgs,
}

#[derive(Debug, Args)]
struct LevelsArgs {
    /// Descriptor or member JSON (`-` for stdin).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = DEFAULT_DEPTH)]
    depth: usize,
}

#[derive(Debug, Args)]
struct InvariantsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    precision: PrecisionArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    precision: PrecisionArgs,
}

#[derive(Debug, Args)]
struct FingerprintArgs {
    /// Member, array of members, or fingerprint JSON.
    #[arg(long = "in")]
    input: PathBuf,
    /// Emit the image under σ, which exchanges the corner classes.
    #[arg(long)]
    sigma: bool,
    #[command(flatten)]
    precision: PrecisionArgs,
}

#[derive(Debug, Args)]
struct DiscriminateArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

/// Where the cone parameter comes from: a descriptor, or given directly.
#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long = "in", conflicts_with_all = ["lambda", "lambda_lo"])]
    input: Option<PathBuf>,
    /// Exact λ.
    #[arg(long, value_parser = rational_arg, conflicts_with = "lambda_lo")]
    lambda: Option<Rational>,
    /// Certified lower end of λ.
    #[arg(long, value_parser = rational_arg, requires = "lambda_hi")]
    lambda_lo: Option<Rational>,
    #[arg(long, value_parser = rational_arg, requires = "lambda_lo")]
    lambda_hi: Option<Rational>,
    /// Order unit (N, 0); defaults to the member's amplification, else 1.
    #[arg(long)]
    unit: Option<u64>,
    #[command(flatten)]
    precision: PrecisionArgs,
}

#[derive(Debug, Args)]
struct ElementArgs {
    #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
    x: Rational,
    #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
    y: Rational,
}

impl ElementArgs {
    fn element(&self) -> K0Element {
        K0Element::new(self.x.clone(), self.y.clone())
    }
}

#[derive(Debug, Subcommand)]
enum K0Command {
    /// Decide membership of (x, y) in the positive cone.
    Cone {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        element: ElementArgs,
    },
    /// Evaluate the state x + t·λ·y.
    State {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        element: ElementArgs,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        t: Rational,
    },
    /// Image of (m₁, m₂) at level n, and of its transition to level n + 1.
    Gamma {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long, allow_hyphen_values = true)]
        m1: BigInt,
        #[arg(long, allow_hyphen_values = true)]
        m2: BigInt,
    },
    /// Order-unit-preserving automorphisms, and a cone violation for `--q`.
    Autos {
        #[command(flatten)]
        model: ModelArgs,
        /// Candidate matrix `a,b,c,d` (row-major).
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
        #[arg(long, default_value = "64")]
        n_max: u32,
    },
    /// Least levels n, n′ with k | r(n) and k | r′(n′), for k ≤ max-k.
    Divisibility {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "50")]
        max_k: u64,
        #[arg(long, default_value = DEFAULT_DEPTH)]
        depth: usize,
    },
}

fn rational_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| match e {
        Error::Parse(msg) => msg,
        other => other.to_string(),
    })
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn data(code: i32, doc: Value) -> Self {
        Outcome {
            code,
            stdout: canonical_json(&doc),
            stderr: String::new(),
        }
    }

    fn error(err: &Error) -> Self {
        let doc = json!({ "error": { "kind": error_kind(err), "message": err.to_string() } });
        Outcome {
            code: exit_code(err),
            stdout: canonical_json(&doc),
            stderr: format!("villadsen: {err}\n"),
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) => EXIT_PARSE,
        Error::Unknown(_) => EXIT_UNKNOWN,
        _ => EXIT_PRECONDITION,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Domain(_) => "domain",
        Error::Descriptor(_) => "descriptor",
        Error::Precondition(_) => "precondition",
        Error::Unknown(_) => "unknown",
        Error::Unsupported(_) => "unsupported",
        Error::Contract(_) => "contract",
        Error::Parse(_) => "parse",
    }
}

/// Serializes with object keys sorted at every level, followed by a newline.
pub fn canonical_json(value: &Value) -> String {
    let mut out = serde_json::to_string(&sorted(value)).expect("JSON values serialize");
    out.push('\n');
    out
}

fn sorted(value: &Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<_> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k.clone(), sorted(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.iter().map(sorted).collect()),
        other => other.clone(),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: EXIT_OK,
                    stdout: e.to_string(),
                    stderr: String::new(),
                },
                _ => {
                    let rendered = e.render().to_string();
                    let first = rendered.lines().next().unwrap_or_default();
                    let msg = first.strip_prefix("error: ").unwrap_or(first).to_string();
                    let mut out = Outcome::error(&Error::Parse(msg));
                    out.stderr = e.render().to_string();
                    out
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok((code, doc)) => Outcome::data(code, doc),
        Err(err) => Outcome::error(&err),
    }
}

fn dispatch(command: Command) -> Result<(i32, Value)> {
    match command {
        Command::Synthesize(args) => synthesize(args),
        Command::Levels(args) => {
            let (desc, _) = read_descriptor(&args.input)?;
            let levels = compute_levels(&desc, args.depth)?;
            Ok((EXIT_OK, json!({ "depth": levels.len() - 1, "levels": levels })))
        }
        Command::Invariants(args) => {
            let (desc, _) = read_descriptor(&args.input)?;
            let report = invariant_report(&desc, &args.precision.precision()?)?;
            Ok((EXIT_OK, to_value(&report)))
        }
        Command::Verify(args) => verify(args),
        Command::Fingerprint(args) => fingerprint_cmd(args),
        Command::Discriminate(args) => {
            let f1: Fingerprint = read_json(&args.a)?;
            let f2: Fingerprint = read_json(&args.b)?;
            let d = discriminate(&f1, &f2);
            let code = if d.verdict == Verdict::Unknown { EXIT_UNKNOWN } else { EXIT_OK };
            Ok((code, to_value(&d)))
        }
        Command::K0 { op } => k0(op),
    }
}

fn synthesize(args: SynthesizeArgs) -> Result<(i32, Value)> {
    let betas = match (args.count, args.beta.is_empty()) {
        (Some(k), _) => BetaSelection::Count(k),
        (None, false) => BetaSelection::Values(args.beta),
        (None, true) => return Err(Error::Parse("one of --count or --beta is required".into())),
    };
    let req = FamilyRequest {
        omega: args.omega,
        betas,
        precision: args.precision.precision()?,
        policy: args.policy.into(),
    };
    let members = synthesize_family(&req)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        for (i, m) in members.iter().enumerate() {
            let path = dir.join(format!("member-{}.json", i + 1));
            fs::write(&path, canonical_json(&to_value(m))).map_err(|e| io_error(&path, e))?;
        }
    }
    Ok((EXIT_OK, to_value(&members)))
}

fn verify(args: VerifyArgs) -> Result<(i32, Value)> {
    let (desc, _) = read_descriptor(&args.input)?;
    let precision = args.precision.precision()?;
    let construction = verify_construction(&desc, args.precision.depth);
    let simplicity = verify_simplicity_hypotheses(&desc, args.precision.depth);
    let two_seed = if desc.is_symmetric_two_seed() {
        let ts = TwoSeed::from_descriptor(&desc)?;
        Some(verify_two_seed_hypotheses(&ts, args.precision.depth, &precision)?)
    } else {
        None
    };
    let truths: Vec<Truth> = std::iter::once(simplicity.holds)
        .chain(two_seed.as_ref().map(|r| r.holds))
        .collect();
    let code = if !construction.violations.is_empty() || truths.contains(&Truth::False) {
        EXIT_PRECONDITION
    } else if truths.contains(&Truth::Unknown) {
        EXIT_UNKNOWN
    } else {
        EXIT_OK
    };
    let mut doc = json!({ "construction": construction, "simplicity": simplicity });
    if let Some(r) = two_seed {
        doc["two_seed"] = to_value(&r);
    }
    Ok((code, doc))
}

fn fingerprint_cmd(args: FingerprintArgs) -> Result<(i32, Value)> {
    let precision = args.precision.precision()?;
    let doc = read_value(&args.input)?;
    let one = |v: Value| -> Result<Value> {
        let fp = if v.get("descriptor").is_some() {
            let member: FamilyMember = from_value(v)?;
            fingerprint(&member, &precision)?
        } else {
            from_value::<Fingerprint>(v)?
        };
        Ok(to_value(&if args.sigma { fp.sigma_image() } else { fp }))
    };
    let out = match doc {
        Value::Array(items) => {
            // Members are independent; evaluate them side by side and keep
            // the input order.
            let results: Vec<Result<Value>> = std::thread::scope(|scope| {
                let handles: Vec<_> = items.into_iter().map(|v| scope.spawn(|| one(v))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("fingerprint worker panicked"))
                    .collect()
            });
            Value::Array(results.into_iter().collect::<Result<_>>()?)
        }
        v => one(v)?,
    };
    Ok((EXIT_OK, out))
}

/// The ordered group model described by `--in` or the `--lambda*` flags,
/// plus a refinement hook when λ comes from a descriptor.
struct ModelSource {
    model: OrderedGroupModel,
    two_seed: Option<(TwoSeed, Precision)>,
}

impl ModelSource {
    fn refine(&self, k: usize) -> Option<Enclosure> {
        let (ts, p) = self.two_seed.as_ref()?;
        let eps = &p.eps / Rational::from_integer(BigInt::from(1u8) << (16 * k));
        let finer = Precision::new(eps, p.max_depth * (k + 1)).ok()?;
        let bits = finer.report_bits();
        lambda_enclosure(ts, &finer).ok().map(|l| l.round_outward(bits))
    }
}

fn model_source(args: &ModelArgs) -> Result<ModelSource> {
    let precision = args.precision.precision()?;
    let (lambda, amplification, two_seed) = if let Some(path) = &args.input {
        let (desc, member) = read_descriptor(path)?;
        let ts = TwoSeed::from_descriptor(&desc)?;
        let lambda = lambda_enclosure(&ts, &precision)?.round_outward(precision.report_bits());
        (lambda, member.map(|m| m.amplification), Some((ts, precision)))
    } else if let Some(l) = &args.lambda {
        (Enclosure::exact(l.clone()), None, None)
    } else if let (Some(lo), Some(hi)) = (&args.lambda_lo, &args.lambda_hi) {
        (Enclosure::certified(lo.clone(), hi.clone())?, None, None)
    } else {
        return Err(Error::Parse(
            "one of --in, --lambda or --lambda-lo/--lambda-hi is required".into(),
        ));
    };
    let unit = args.unit.or(amplification).unwrap_or(1);
    let model = OrderedGroupModel::new(lambda, K0Element::new(Rational::from_integer(unit.into()), int(0)))?;
    Ok(ModelSource { model, two_seed })
}

fn k0(op: K0Command) -> Result<(i32, Value)> {
    match op {
        K0Command::Cone { model, element } => {
            let src = model_source(&model)?;
            let g = element.element();
            let refine = |k: usize| src.refine(k);
            let hook: Option<&dyn Fn(usize) -> Option<Enclosure>> =
                if src.two_seed.is_some() { Some(&refine) } else { None };
            let decision = cone_contains(&src.model, &g, hook, 4);
            let code = if decision.decision == ConeVerdict::Unknown { EXIT_UNKNOWN } else { EXIT_OK };
            Ok((
                code,
                json!({
                    "element": g,
                    "lambda": src.model.lambda,
                    "decision": decision.decision,
                    "margin": decision.margin,
                }),
            ))
        }
        K0Command::State { model, element, t } => {
            let src = model_source(&model)?;
            let g = element.element();
            let value = state_eval(&src.model, &t, &g)?;
            Ok((
                EXIT_OK,
                json!({
                    "element": g,
                    "t": crate::numerics::format_rational(&t),
                    "lambda": src.model.lambda,
                    "value": value,
                }),
            ))
        }
        K0Command::Gamma { input, level, m1, m2 } => {
            let (desc, _) = read_descriptor(&input)?;
            let ts = TwoSeed::from_descriptor(&desc)?;
            let image = gamma_image(&ts, level, &m1, &m2)?;
            let t = af_transition(&ts, level)?;
            let (n1, n2) = apply_transition(&t, &m1, &m2);
            let next = gamma_image(&ts, level + 1, &n1, &n2)?;
            Ok((
                EXIT_OK,
                json!({
                    "level": level,
                    "m": [m1.to_string(), m2.to_string()],
                    "image": image,
                    "next_m": [n1.to_string(), n2.to_string()],
                    "next_image": next,
                }),
            ))
        }
        K0Command::Autos { model, q, n_max } => {
            let src = model_source(&model)?;
            let canonical = canonical_automorphisms(&src.model)?;
            let mut doc = json!({ "lambda": src.model.lambda, "canonical": canonical });
            let mut code = EXIT_OK;
            if let Some(q) = q {
                let q = parse_matrix(&q)?;
                let grid = default_y_grid(src.model.lambda.hi());
                let search = cone_preservation_witness(&src.model, &q, &grid, n_max)?;
                if search == WitnessSearch::Exhausted {
                    code = EXIT_UNKNOWN;
                }
                doc["q"] = to_value(&q);
                doc["witness"] = to_value(&search);
            }
            Ok((code, doc))
        }
        K0Command::Divisibility { input, max_k, depth } => {
            let (desc, _) = read_descriptor(&input)?;
            let ts = TwoSeed::from_descriptor(&desc)?;
            let rows = verify_divisibility(&ts, max_k, depth)?;
            let code = if rows.iter().all(|r| r.found()) { EXIT_OK } else { EXIT_UNKNOWN };
            Ok((code, json!({ "depth": depth, "rows": rows })))
        }
    }
}

fn parse_matrix(s: &str) -> Result<GroupAutomorphism> {
    let entries = s
        .split(',')
        .map(parse_rational)
        .collect::<Result<Vec<_>>>()?;
    let [a, b, c, d]: [Rational; 4] = entries
        .try_into()
        .map_err(|_| Error::Parse(format!("`{s}` is not a 2×2 matrix a,b,c,d")))?;
    GroupAutomorphism::new([[a, b], [c, d]])
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Precondition(format!("{}: {e}", path.display()))
}

fn read_value(path: &Path) -> Result<Value> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| io_error(path, e))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| io_error(path, e))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn from_value<T: DeserializeOwned>(v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_value(read_value(path)?).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Accepts a bare descriptor or a family member wrapping one.
fn read_descriptor(path: &Path) -> Result<(SystemDescriptor, Option<FamilyMember>)> {
    let v = read_value(path)?;
    if v.get("descriptor").is_some() {
        let member: FamilyMember = from_value(v)?;
        Ok((member.descriptor.clone(), Some(member)))
    } else {
        Ok((from_value(v)?, None))
    }
}

