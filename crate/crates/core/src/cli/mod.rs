//! The `gevrey` command line.

mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Rational;
use serde_json::{json, Value};

use crate::analysis::{min_positive_slope, newton_polygon, Slope};
use crate::borel::{
    borel_normalize, delta_on_grid, growth_fit, independent_basis, radius_estimate, semigroup_generators,
    sigma_map, support_generators, weighted_norm, GevreyDiagnostics, LogGamma, NormValue, SemigroupBasis,
};
use crate::error::{Error, Result};
use crate::gps::{format_rational, parse_rational, BigComplex, Coefficient, FloatContext, GPSeries, GaussianRational};
use crate::ode::{parse_equation, PolyOde};
use crate::solver::{
    choose_mu, extend_solution, recombine, reduce_equation, reduced_extend, MuChoice, ReducedEquation, Solution,
    ROOT_MARGIN,
};

pub use svg::polygon_svg;

#[derive(Parser, Debug)]
#[command(name = "gevrey", version, about = "Formal series solutions of polynomial ODEs and their Gevrey growth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Print the canonical form of an equation.
    Parse(Flags),
    /// Extend a seed to a formal solution up to the horizon.
    Solve(Flags),
    /// Leading data of the linearized operator along the solution.
    Linearize(Flags),
    /// Newton polygon of the linearized operator.
    Polygon(Flags),
    /// Choose mu and reduce the equation.
    Reduce(Flags),
    /// Exponent semigroup of the reduced equation and an independent basis.
    Semigroup(Flags),
    /// Gamma-normalized coefficient diagnostics.
    Borel(Flags),
    /// Run every consistency check of the pipeline.
    Verify(Flags),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Float,
}

#[derive(Args, Debug, Clone)]
struct Flags {
    #[arg(long, value_name = "PATH")]
    eq: PathBuf,
    #[arg(long, value_name = "PATH")]
    seed: Option<PathBuf>,
    /// Real-part bound of the computed exponents.
    #[arg(long, value_name = "RATIONAL", default_value = "10")]
    horizon: String,
    #[arg(long, value_name = "auto|RATIONAL|inf", default_value = "auto")]
    k: String,
    #[arg(long, value_name = "auto|INT", default_value = "auto")]
    mu: String,
    /// Bits of float precision.
    #[arg(long, default_value_t = 256)]
    precision: u32,
    #[arg(long, value_enum, default_value = "exact")]
    backend: Backend,
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

/// Validated flags of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: &'static str,
    pub eq: PathBuf,
    pub seed: Option<PathBuf>,
    pub horizon: Rational,
    /// `None` means the least positive slope of the polygon.
    pub k: Option<Slope>,
    pub mu: Option<usize>,
    pub precision: u32,
    pub backend: Backend,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Parse(_) => "parse",
            Command::Solve(_) => "solve",
            Command::Linearize(_) => "linearize",
            Command::Polygon(_) => "polygon",
            Command::Reduce(_) => "reduce",
            Command::Semigroup(_) => "semigroup",
            Command::Borel(_) => "borel",
            Command::Verify(_) => "verify",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Parse(f)
            | Command::Solve(f)
            | Command::Linearize(f)
            | Command::Polygon(f)
            | Command::Reduce(f)
            | Command::Semigroup(f)
            | Command::Borel(f)
            | Command::Verify(f) => f,
        }
    }
}

fn config(cmd: &Command) -> Result<RunConfig> {
    let f = cmd.flags();
    let horizon = parse_rational(&f.horizon)
        .filter(|h| h.cmp0().is_gt())
        .ok_or_else(|| Error::Usage(format!("--horizon must be a positive rational, got {:?}", f.horizon)))?;
    let k = match f.k.as_str() {
        "auto" => None,
        s => match Slope::parse(s) {
            Some(Slope::Finite(r)) if r.cmp0().is_le() => {
                return Err(Error::Usage(format!("--k must be positive, got {:?}", s)))
            }
            Some(k) => Some(k),
            None => return Err(Error::Usage(format!("--k expects auto, a rational or inf, got {:?}", s))),
        },
    };
    let mu = match f.mu.as_str() {
        "auto" => None,
        s => Some(
            s.parse::<usize>()
                .map_err(|_| Error::Usage(format!("--mu expects auto or a nonnegative integer, got {:?}", s)))?,
        ),
    };
    if f.precision < 64 {
        return Err(Error::Usage(format!("--precision must be at least 64, got {}", f.precision)));
    }
    let name = cmd.name();
    if f.svg.is_some() && !matches!(name, "polygon" | "borel") {
        return Err(Error::Usage(format!("--svg is not supported by {}", name)));
    }
    Ok(RunConfig {
        command: name,
        eq: f.eq.clone(),
        seed: f.seed.clone(),
        horizon,
        k,
        mu,
        precision: f.precision,
        backend: f.backend,
        json: f.json.clone(),
        svg: f.svg.clone(),
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json(path: &Path, text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Invalid(format!("{}: {}", path.display(), e)))
}

/// Reads an equation: canonical JSON for `.json` files, text otherwise.
pub fn load_equation(path: &Path) -> Result<PolyOde> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(PolyOde::from_json(&parse_json(path, &text)?)?)
    } else {
        Ok(parse_equation(&text)?)
    }
}

/// The seed named on the command line, else `<stem>.seed.json` next to the
/// equation.
pub fn seed_path(cfg: &RunConfig) -> Result<PathBuf> {
    if let Some(p) = &cfg.seed {
        return Ok(p.clone());
    }
    let stem = cfg.eq.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let sibling = cfg.eq.with_file_name(format!("{}.seed.json", stem));
    if sibling.exists() {
        Ok(sibling)
    } else {
        Err(Error::Usage(format!(
            "no seed given and {} does not exist; pass --seed",
            sibling.display()
        )))
    }
}

pub fn load_seed(path: &Path) -> Result<GPSeries<GaussianRational>> {
    let v = parse_json(path, &read(path)?)?;
    Ok(GPSeries::from_json(&v)?)
}

/// What a command produced: the JSON document, an optional drawing, a
/// one-line summary and, for `verify`, the failure to report afterwards.
pub struct Output {
    pub json: Value,
    pub svg: Option<String>,
    pub summary: String,
    pub failure: Option<Error>,
}

impl Output {
    fn new(json: Value, summary: String) -> Self {
        Output {
            json,
            svg: None,
            summary,
            failure: None,
        }
    }
}

/// Runs one command on validated flags.
pub fn execute(cfg: &RunConfig) -> Result<Output> {
    let eq = load_equation(&cfg.eq)?;
    if cfg.command == "parse" {
        let summary = format!("order {}, {} monomials: {}", eq.order(), eq.monomials().len(), eq.to_text());
        return Ok(Output::new(eq.to_json(), summary));
    }
    let seed = load_seed(&seed_path(cfg)?)?;
    let mut out = match cfg.backend {
        Backend::Exact => Pipeline::new(cfg, &eq, &seed)?.run()?,
        Backend::Float => {
            let ctx = FloatContext::new(cfg.precision);
            let seed = seed.convert(ctx, |c| BigComplex::from_exact(c, &ctx));
            Pipeline::new(cfg, &eq, &seed)?.run()?
        }
    };
    // fractional z-powers go beyond the integer-power setting of the theory
    if eq.has_fractional_powers() {
        out.json = merge(out.json, json!({"input": "extended input"}));
        out.summary.push_str(" [extended input]");
    }
    Ok(out)
}

struct Pipeline<'a, C: Coefficient> {
    cfg: &'a RunConfig,
    eq: &'a PolyOde,
    solution: Solution<C>,
    /// Least positive slope from the linearization.
    slope: Slope,
    /// The slope used downstream, after `--k`.
    k: Slope,
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn exponent_json(e: &crate::gps::Exponent) -> Value {
    serde_json::to_value(e).expect("exponent")
}

struct Reduction<C: Coefficient> {
    choice: Option<MuChoice>,
    red: ReducedEquation<C>,
}

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

impl<'a, C: Coefficient> Pipeline<'a, C> {
    fn new(cfg: &'a RunConfig, eq: &'a PolyOde, seed: &GPSeries<C>) -> Result<Self> {
        let solution = extend_solution(eq, seed, &cfg.horizon)?;
        let slope = min_positive_slope(&solution.linearization)?;
        let k = cfg.k.clone().unwrap_or_else(|| slope.clone());
        Ok(Pipeline {
            cfg,
            eq,
            solution,
            slope,
            k,
        })
    }

    fn phi(&self) -> &GPSeries<C> {
        &self.solution.series
    }

    fn run(&self) -> Result<Output> {
        match self.cfg.command {
            "solve" => self.solve(),
            "linearize" => self.linearize(),
            "polygon" => self.polygon(),
            "reduce" => self.reduce_cmd(),
            "semigroup" => self.semigroup_cmd(),
            "borel" => self.borel(),
            "verify" => Ok(self.verify()),
            other => Err(Error::Usage(format!("unknown command {}", other))),
        }
    }

    fn reduction(&self) -> Result<Reduction<C>> {
        let rep = &self.solution.linearization;
        let (choice, mu) = match self.cfg.mu {
            Some(mu) => (None, mu),
            None => {
                let c = choose_mu(rep, self.phi(), &self.k, ROOT_MARGIN, self.cfg.precision)?;
                let mu = c.mu;
                (Some(c), mu)
            }
        };
        let red = reduce_equation(self.eq, self.phi(), rep, &self.k, mu, ROOT_MARGIN, self.cfg.precision)?;
        Ok(Reduction { choice, red })
    }

    /// `ψ` with `z^{s_μ}ψ` covering the same horizon as `φ`.
    fn tail(&self, red: &ReducedEquation<C>) -> Result<GPSeries<C>> {
        let target = Rational::from(&self.cfg.horizon - red.s_mu.re());
        if target.cmp0().is_le() {
            return Ok(GPSeries::zero(crate::gps::Horizon::Finite(target), red.ctx.clone()));
        }
        Ok(reduced_extend(red, &target)?)
    }

    fn semigroup(&self, red: Option<&ReducedEquation<C>>) -> Result<(SemigroupBasis, &'static str)> {
        match red {
            Some(r) => Ok((independent_basis(&semigroup_generators(r))?, "reduced equation")),
            None => Ok((independent_basis(&support_generators(self.phi()))?, "solution support")),
        }
    }

    fn solve(&self) -> Result<Output> {
        let mu = match &self.k {
            Slope::Finite(_) => self.reduction().ok().map(|r| r.red.mu),
            Slope::Infinite => None,
        };
        let json = merge(
            self.phi().to_json(),
            json!({
                "k": self.k.to_string(),
                "mu": mu,
                "residual_val": self.solution.residual_valuation.as_ref().map(exponent_json),
            }),
        );
        let summary = format!(
            "{} terms up to Re s = {}, k = {}",
            self.phi().len(),
            format_rational(&self.cfg.horizon),
            self.k
        );
        Ok(Output::new(json, summary))
    }

    fn linearize(&self) -> Result<Output> {
        let rep = &self.solution.linearization;
        let json = merge(rep.to_json(), json!({"k": self.slope.to_string()}));
        let summary = format!("lambda = {}, p = {}, k = {}", rep.lambda, rep.p, self.slope);
        Ok(Output::new(json, summary))
    }

    fn polygon(&self) -> Result<Output> {
        let poly = newton_polygon(&self.solution.linearization.points())?;
        let summary = format!("{} vertices, k = {}", poly.vertices.len(), poly.k);
        let mut out = Output::new(poly.to_json(), summary);
        if self.cfg.svg.is_some() {
            out.svg = Some(polygon_svg(&poly));
        }
        Ok(out)
    }

    fn reduce_cmd(&self) -> Result<Output> {
        let r = self.reduction()?;
        let json = json!({
            "mu": r.red.mu,
            "checks": r.choice.as_ref().map(|c| c.checks.iter().map(|m| m.to_json()).collect::<Vec<_>>()),
            "reduced": r.red.to_json(),
        });
        let summary = format!(
            "mu = {}, s_mu = {}, nu = {}, {} L' terms, {} N terms",
            r.red.mu,
            r.red.s_mu,
            r.red.nu,
            r.red.lprime.len(),
            r.red.nterms.len()
        );
        Ok(Output::new(json, summary))
    }

    fn semigroup_cmd(&self) -> Result<Output> {
        let r = match &self.k {
            Slope::Finite(_) => Some(self.reduction()?),
            Slope::Infinite => None,
        };
        let (basis, source) = self.semigroup(r.as_ref().map(|r| &r.red))?;
        let summary = format!(
            "basis [{}] from {} generators of the {}",
            basis.basis.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(", "),
            basis.generators.len(),
            source
        );
        let json = merge(basis.to_json(), json!({"source": source, "verified": basis.verify()}));
        Ok(Output::new(json, summary))
    }

    fn diagnostics(&self, lg: &LogGamma) -> Result<(GevreyDiagnostics, Vec<String>)> {
        let table = borel_normalize(self.phi(), &self.k, lg)?;
        let radius = radius_estimate(&table);
        let growth = self.k.as_finite().map(|_| growth_fit(&table));
        let mut warnings = Vec::new();
        let mut basis = None;
        let mut norms = Vec::new();
        if let Slope::Finite(k) = &self.k {
            match self.reduction().and_then(|r| {
                let psi = self.tail(&r.red)?;
                let (b, _) = self.semigroup(Some(&r.red))?;
                let grid = sigma_map(&psi, &b)?;
                let mut out = Vec::new();
                for j in [0u32, 1] {
                    for scale in [1.0, 0.5] {
                        out.push(NormValue {
                            j,
                            scale,
                            value: weighted_norm(&grid, j, k, scale, lg)?,
                        });
                    }
                }
                Ok((b, out))
            }) {
                Ok((b, n)) => {
                    basis = Some(b);
                    norms = n;
                }
                Err(e) => warnings.push(format!("no grid diagnostics: {}", e)),
            }
        }
        Ok((
            GevreyDiagnostics {
                k: self.k.clone(),
                basis,
                table,
                radius,
                growth,
                norms,
            },
            warnings,
        ))
    }

    fn borel(&self) -> Result<Output> {
        let lg = LogGamma::new(self.cfg.precision);
        let (diag, warnings) = self.diagnostics(&lg)?;
        let radius = match &diag.radius {
            Ok(r) => format!("{}{:.6}", if r.lower_bound { ">= " } else { "" }, r.estimate),
            Err(e) => e.to_string(),
        };
        let summary = format!("k = {}, {} terms, radius {}", self.k, diag.table.terms.len(), radius);
        let mut out = Output::new(merge(diag.to_json(), json!({"warnings": warnings})), summary);
        if self.cfg.svg.is_some() {
            out.svg = Some(diag.to_svg());
        }
        Ok(out)
    }

    fn verify(&self) -> Output {
        let mut checks: Vec<(&str, Status)> = Vec::new();
        let rep = &self.solution.linearization;

        let next = self
            .solution
            .residual_valuation
            .as_ref()
            .map(|v| Rational::from(v.re() - rep.lambda.re()));
        checks.push((
            "residual",
            match &next {
                None => Status::Pass("the partial sum solves the equation exactly".into()),
                Some(n) if *n > self.cfg.horizon => Status::Pass(format!(
                    "residual valuation {} lies beyond the horizon",
                    self.solution.residual_valuation.as_ref().map(|v| v.to_string()).unwrap_or_default()
                )),
                Some(n) => Status::Fail(format!("next exponent {} is within the horizon", format_rational(n))),
            },
        ));
        checks.push((
            "stable",
            if rep.stable {
                Status::Pass("leading data agrees at half the horizon".into())
            } else {
                Status::Fail("leading data changes with the horizon".into())
            },
        ));
        checks.push((
            "slope",
            match newton_polygon(&rep.points()) {
                Ok(p) if p.k == self.slope => Status::Pass(format!("formula and hull both give k = {}", p.k)),
                Ok(p) => Status::Fail(format!("formula gives {}, hull gives {}", self.slope, p.k)),
                Err(e) => Status::Fail(e.to_string()),
            },
        ));

        let lg = LogGamma::new(self.cfg.precision);
        checks.push(("growth_flip", self.growth_flip(&lg)));
        checks.push(("growth_bound", self.growth_bound(&lg)));

        let reduction = match &self.k {
            Slope::Finite(_) => Some(self.reduction()),
            Slope::Infinite => None,
        };
        let (red_status, dual, semi) = match &reduction {
            None => {
                let why = "k is infinite; the solution needs no reduction".to_string();
                (Status::Skip(why.clone()), Status::Skip(why.clone()), self.semigroup_status(None))
            }
            Some(Err(e)) => {
                let why = format!("reduction failed: {}", e);
                (Status::Fail(why.clone()), Status::Skip(why.clone()), Status::Skip(why))
            }
            Some(Ok(r)) => {
                let inv = match r.red.check_invariants() {
                    Ok(()) => Status::Pass(format!("mu = {}, nu = {}", r.red.mu, r.red.nu)),
                    Err(e) => Status::Fail(e.to_string()),
                };
                let dual = match self.tail(&r.red) {
                    Ok(psi) if recombine(self.phi(), &r.red, &psi).agrees_with(self.phi()) => {
                        Status::Pass(format!("{} terms of the tail recombine to the solution", psi.len()))
                    }
                    Ok(_) => Status::Fail("the reduced solution does not recombine to the solution".into()),
                    Err(e) => Status::Fail(e.to_string()),
                };
                (inv, dual, self.semigroup_status(Some(&r.red)))
            }
        };
        checks.push(("reduction", red_status));
        checks.push(("dual_engine", dual));
        checks.push(("semigroup", semi));

        let failed: Vec<&str> = checks
            .iter()
            .filter(|(_, s)| matches!(s, Status::Fail(_)))
            .map(|(n, _)| *n)
            .collect();
        let json = json!({
            "ok": failed.is_empty(),
            "k": self.k.to_string(),
            "checks": checks.iter().map(|(name, s)| {
                let (status, detail) = match s {
                    Status::Pass(d) => ("pass", d),
                    Status::Fail(d) => ("fail", d),
                    Status::Skip(d) => ("skip", d),
                };
                json!({"name": name, "status": status, "detail": detail})
            }).collect::<Vec<_>>(),
        });
        let summary = if failed.is_empty() {
            format!("all {} checks passed or skipped", checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        };
        let mut out = Output::new(json, summary);
        if !failed.is_empty() {
            out.failure = Some(Error::VerificationFailed(failed.join(", ")));
        }
        out
    }

    /// Growth fit succeeds at `k` and fails at `2k`.
    fn growth_flip(&self, lg: &LogGamma) -> Status {
        let Slope::Finite(k) = &self.k else {
            return Status::Skip("k is infinite".into());
        };
        let fit = |k: Rational| borel_normalize(self.phi(), &Slope::Finite(k), lg).map_err(Error::from).and_then(|t| Ok(growth_fit(&t)?));
        match (fit(k.clone()), fit(Rational::from(k * 2u32))) {
            (Ok(a), Ok(b)) if !a.failure && b.failure => {
                Status::Pass(format!("fit holds at k = {} and fails at 2k", format_rational(k)))
            }
            (Ok(a), Ok(b)) => Status::Fail(format!(
                "failure flag is {} at k and {} at 2k",
                a.failure, b.failure
            )),
            (Err(e), _) | (_, Err(e)) => Status::Skip(e.to_string()),
        }
    }

    /// `|c_n| ≤ A·B^{Re s_n}·|Γ(1+s_n/k)|` on every computed term.
    fn growth_bound(&self, lg: &LogGamma) -> Status {
        let Slope::Finite(_) = &self.k else {
            return Status::Skip("k is infinite".into());
        };
        let table = match borel_normalize(self.phi(), &self.k, lg) {
            Ok(t) => t,
            Err(e) => return Status::Fail(e.to_string()),
        };
        match growth_fit(&table) {
            Ok(fit) => {
                let worst = table
                    .terms
                    .iter()
                    .map(|t| t.ln_abs_c - (fit.ln_a + fit.ln_b * t.x() + t.ln_gamma))
                    .fold(f64::NEG_INFINITY, f64::max);
                if worst <= 1e-9 {
                    Status::Pass(format!("A = {:.6}, B = {:.6}", fit.a(), fit.b()))
                } else {
                    Status::Fail(format!("bound exceeded by a factor exp({:.3e})", worst))
                }
            }
            Err(e) => Status::Skip(e.to_string()),
        }
    }

    fn semigroup_status(&self, red: Option<&ReducedEquation<C>>) -> Status {
        let (basis, _) = match self.semigroup(red) {
            Ok(b) => b,
            Err(e) => return Status::Fail(e.to_string()),
        };
        if !basis.verify() {
            return Status::Fail("expansion table does not reproduce the generators".into());
        }
        let series = match red {
            Some(r) => match self.tail(r) {
                Ok(psi) => psi,
                Err(e) => return Status::Fail(e.to_string()),
            },
            None => self.phi().clone(),
        };
        let series = match red {
            Some(_) => series,
            // the constant term of a convergent solution lies outside the grid
            None => GPSeries::from_terms(
                series.terms().filter(|(e, _)| !e.is_zero()).map(|(e, c)| (e.clone(), c.clone())),
                series.horizon().clone(),
                series.context().clone(),
            ),
        };
        match (sigma_map(&series, &basis), sigma_map(&series.delta(), &basis)) {
            (Ok(g), Ok(dg)) if delta_on_grid(&g) == dg => Status::Pass(format!(
                "basis of {} element(s); {} grid terms; Delta commutes with sigma",
                basis.dims(),
                g.len()
            )),
            (Ok(_), Ok(_)) => Status::Fail("Delta(sigma(psi)) differs from sigma(delta psi)".into()),
            (Err(e), _) | (_, Err(e)) => Status::Fail(e.to_string()),
        }
    }
}

fn envelope(err: &Error, context: Value) -> String {
    let v = json!({
        "code": err.code(),
        "message": err.to_string(),
        "context": context,
    });
    serde_json::to_string(&v).expect("error envelope") + "\n"
}

/// Parses `argv`, runs the command and returns the exit status. JSON goes
/// to standard output unless `--json` names a file, in which case a one-line
/// summary is printed instead; errors go to standard error as
/// `{code, message, context}`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e);
                return 0;
            }
            let err = Error::Usage(e.to_string().lines().next().unwrap_or("invalid arguments").to_string());
            let _ = stderr.write_all(envelope(&err, json!({})).as_bytes());
            return err.exit_code();
        }
    };
    let context = json!({"command": cli.command.name(), "eq": cli.command.flags().eq.display().to_string()});
    let result = config(&cli.command).and_then(|cfg| {
        let out = execute(&cfg)?;
        let text = serde_json::to_string_pretty(&out.json).expect("json") + "\n";
        match &cfg.json {
            Some(p) => {
                write(p, &text)?;
                let _ = writeln!(stdout, "{}", out.summary);
            }
            None => {
                let _ = stdout.write_all(text.as_bytes());
            }
        }
        if let (Some(p), Some(svg)) = (&cfg.svg, &out.svg) {
            write(p, svg)?;
        }
        match out.failure {
            Some(e) => Err(e),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(err) => {
            let _ = stderr.write_all(envelope(&err, context).as_bytes());
            err.exit_code()
        }
    }
}
