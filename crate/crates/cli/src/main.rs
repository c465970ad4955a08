//! `npm-tool`: generators and checkers for geometric phases, null phase
//! curves and null phase manifolds.
//!
//! Exit status is 0 when every check passes, 1 when a check fails (the
//! report carries a witness) and 2 on usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use raygeom::bargmann::{delta3, delta_n};
use raygeom::curves::{dynamical_phase_series, geometric_phase_with, length, uniform_grid, Estimator, SampledCurve};
use raygeom::gaussian::{
    embed_gaussian, gaussian_chart, gaussian_overlap, single_translate_residual, GaussianMixture, GaussianState,
    QuadratureGrid,
};
use raygeom::geodesics::{geodesic, geodesic_triangle_phase};
use raygeom::nullphase::{
    adapted_basis, chart_anchors, hull_extend, hull_membership, is_npc_with, is_npm_with, isotropy_check,
    isotropy_check_with, nonnegative_span_member, npc_between, npc_from_sphere_path, npc_general,
    positive_sphere_chart, subarc_max_phase, totally_geodesic_check, verify_npm_characterization,
    CharacterizationOptions, ChartedManifold, GeneralNpcSpec, HullModel, SphereTrajectory, TripleReport,
};
use raygeom::statespace::{angle_gap, random_state, random_state_with, seeded_rng};
use raygeom::suite::{bloch_chart, dipping_general_spec, octant_rays, random_spd, run_criterion, standard_basis, CRITERIA};
use raygeom::tolerance::{TOL_HULL, TOL_NPC};
use raygeom::{HilbertPoint, Ray, StateVector};

#[derive(Parser, Serialize)]
#[command(name = "npm-tool", version, about = "Geometric phases, null phase curves and null phase manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn positive_float(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

#[derive(Args, Serialize, Clone, Debug)]
struct Common {
    /// Input file (JSON).
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    /// Output file for the generated artifact.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per curve or per side.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(3..=1_000_000))]
    mesh: u64,
    #[arg(long, value_parser = positive_float)]
    tol: Option<f64>,
    /// Hilbert-space dimension, or N for Gaussian commands.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=64))]
    dim: u64,
    /// Sampled triples when a check is not exhaustive.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..=10_000_000))]
    triples: u64,
    /// Nodes per chart axis for chart presets.
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(3..=101))]
    nodes: u64,
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EstimatorArg {
    DiscreteBargmann,
    Quadrature,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Membership {
    /// Inside the non-negative hull of the chart states.
    Hull,
    /// Inside the non-negative real span of the standard basis.
    PositiveSpan,
    /// A single Gaussian translate (Gaussian charts only).
    Translate,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Haar-random unit state.
    RandState(Common),
    /// Sampled geodesic between two random (or given) states.
    Geodesic(Common),
    /// Total, dynamical and geometric phase of a curve.
    Phase {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = EstimatorArg::DiscreteBargmann)]
        estimator: EstimatorArg,
        /// Write the accumulated phases against s as CSV.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Bargmann invariant of a list of states.
    Bargmann {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=1000))]
        count: u64,
    },
    /// Geodesic triangle phase against the Bargmann invariant.
    TriangleCheck(Common),
    /// Generate a null phase curve from a sphere path or a general spec.
    NpcGen {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        bulge: f64,
    },
    /// Null-phase test of a sampled curve.
    NpcCheck(Common),
    /// Null-phase test of a chart.
    NpmCheck(Common),
    /// Isotropy of a chart.
    Isotropy(Common),
    /// Totally-geodesic test of a chart against a membership rule.
    TgCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        membership: Option<Membership>,
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..=10_000))]
        pairs: u64,
    },
    /// Build the non-negative hull of a chart or of a list of anchors.
    HullExtend(Common),
    /// Membership of a state in a hull.
    HullMember {
        #[command(flatten)]
        common: Common,
        /// State to test; defaults to the equal-weight hull member.
        #[arg(long, value_name = "PATH")]
        state: Option<PathBuf>,
    },
    /// Full characterization of a null phase manifold.
    Characterize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        membership: Option<Membership>,
    },
    /// Closed-form overlap of two Gaussians, with a quadrature cross-check for N <= 2.
    GaussianOverlap(Common),
    /// Gaussian family chart: null-phase and isotropy checks.
    GaussianNpm(Common),
    /// Run the acceptance criteria.
    Suite {
        #[command(flatten)]
        common: Common,
        /// Run a single criterion.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=11))]
        criterion: Option<u8>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::RandState(_) => "rand-state",
            Command::Geodesic(_) => "geodesic",
            Command::Phase { .. } => "phase",
            Command::Bargmann { .. } => "bargmann",
            Command::TriangleCheck(_) => "triangle-check",
            Command::NpcGen { .. } => "npc-gen",
            Command::NpcCheck(_) => "npc-check",
            Command::NpmCheck(_) => "npm-check",
            Command::Isotropy(_) => "isotropy",
            Command::TgCheck { .. } => "tg-check",
            Command::HullExtend(_) => "hull-extend",
            Command::HullMember { .. } => "hull-member",
            Command::Characterize { .. } => "characterize",
            Command::GaussianOverlap(_) => "gaussian-overlap",
            Command::GaussianNpm(_) => "gaussian-npm",
            Command::Suite { .. } => "suite",
        }
    }
}

/// Usage or input problem; exit status 2.
#[derive(Debug)]
struct Usage(String);

impl From<raygeom::Error> for Usage {
    fn from(e: raygeom::Error) -> Self {
        Usage(e.to_string())
    }
}

type Res<T> = Result<T, Usage>;

struct Report {
    ok: bool,
    witness: Value,
    values: Value,
}

impl Report {
    fn pass(values: Value) -> Self {
        Report { ok: true, witness: Value::Null, values }
    }
}

/// What a handler produced: a report and possibly a generated artifact.
struct Outcome {
    report: Report,
    artifact: Option<String>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome { report, artifact: None }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn read_value(path: &Path) -> Res<Value> {
    let text = fs::read_to_string(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn parse<T: DeserializeOwned>(path: &Path, v: Value) -> Res<T> {
    serde_json::from_value(v).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn load<T: DeserializeOwned>(path: &Path) -> Res<T> {
    parse(path, read_value(path)?)
}

fn required_input(c: &Common) -> Res<&Path> {
    c.input.as_deref().ok_or_else(|| Usage("--in is required".into()))
}

fn write_file(path: &Path, text: &str) -> Res<()> {
    fs::write(path, text).map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))
}

fn state_dim(c: &Common) -> Res<usize> {
    if c.dim < 2 {
        return Err(Usage(format!("--dim must be at least 2 here, got {}", c.dim)));
    }
    Ok(c.dim as usize)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Res<Vec<f64>> {
    Ok(uniform_grid(lo, hi, n)?)
}

fn mixture_like(v: &Value) -> bool {
    v.get("components").is_some()
}

enum AnyChart {
    Vector(ChartedManifold),
    Gaussian(ChartedManifold<GaussianMixture>),
}

impl AnyChart {
    fn to_json(&self) -> String {
        match self {
            AnyChart::Vector(c) => to_json(c),
            AnyChart::Gaussian(c) => to_json(c),
        }
    }
}

/// Chart from `--in`, or built from `--preset`.
fn chart_from(c: &Common) -> Res<AnyChart> {
    if let Some(path) = &c.input {
        let v = read_value(path)?;
        let gaussian = v.get("states").and_then(|s| s.get(0)).is_some_and(mixture_like);
        return Ok(if gaussian { AnyChart::Gaussian(parse(path, v)?) } else { AnyChart::Vector(parse(path, v)?) });
    }
    let n = c.nodes as usize;
    let preset = c.preset.as_deref().unwrap_or("positive-sphere");
    Ok(match preset {
        "positive-sphere" => AnyChart::Vector(positive_sphere_chart(&standard_basis(state_dim(c)?)?, 0.2, 1.3, n)?),
        "bloch" => AnyChart::Vector(bloch_chart(n)?),
        "npc" => {
            let dim = state_dim(c)?.max(3);
            let basis = standard_basis(dim)?.into_iter().take(3).collect();
            let curve = npc_from_sphere_path(&SphereTrajectory::bulged(1.0, 0.6, n, basis)?)?;
            AnyChart::Vector(ChartedManifold::new(vec![curve.params().to_vec()], curve.states().to_vec())?)
        }
        "gaussian-translates" => {
            let axis = linspace(-1.0, 1.0, n)?;
            AnyChart::Gaussian(gaussian_chart(&vec![axis; c.dim as usize], &[])?.chart)
        }
        other => {
            return Err(Usage(format!(
                "unknown chart preset `{other}` (expected positive-sphere, bloch, npc or gaussian-translates)"
            )))
        }
    })
}

/// Chart-consuming checks built from a preset write the chart to `--out`.
fn chart_outcome(c: &Common, chart: &AnyChart, report: Report) -> Outcome {
    let artifact = if c.input.is_none() && c.out.is_some() { Some(chart.to_json()) } else { None };
    Outcome { report, artifact }
}

fn triple_witness(r: &TripleReport) -> Value {
    if r.ok {
        Value::Null
    } else {
        json!({ "triple": r.worst_triple, "arg": r.worst_arg, "orthogonal_pair": r.orthogonal_pair })
    }
}

fn two_random_states(c: &Common) -> Res<(StateVector, StateVector)> {
    let dim = state_dim(c)?;
    let mut rng = seeded_rng(c.seed);
    Ok((random_state_with(dim, &mut rng)?, random_state_with(dim, &mut rng)?))
}

fn rand_state(c: &Common) -> Res<Outcome> {
    let psi = random_state(state_dim(c)?, c.seed)?;
    let report = Report::pass(json!({ "dim": psi.dim() }));
    Ok(Outcome { report, artifact: Some(to_json(&psi)) })
}

fn geodesic_cmd(c: &Common) -> Res<Outcome> {
    let (a, b) = match &c.input {
        Some(path) => {
            let states: Vec<StateVector> = load(path)?;
            match <[StateVector; 2]>::try_from(states) {
                Ok([a, b]) => (a, b),
                Err(v) => return Err(Usage(format!("{}: expected 2 states, found {}", path.display(), v.len()))),
            }
        }
        None => two_random_states(c)?,
    };
    let curve = geodesic(&Ray::new(&a), &Ray::new(&b), c.mesh as usize)?;
    let distance = a.inner(&b)?.norm().min(1.0).acos();
    let phase = geometric_phase_with(&curve, Estimator::DiscreteBargmann)?;
    let report = Report::pass(json!({
        "samples": curve.len(),
        "length": length(&curve)?,
        "distance": distance,
        "geometric_phase": phase.geometric,
    }));
    Ok(Outcome { report, artifact: Some(to_json(&curve)) })
}

fn phase_cmd(c: &Common, est: EstimatorArg, csv_path: Option<&Path>) -> Res<Outcome> {
    let curve: SampledCurve = load(required_input(c)?)?;
    let estimator = match est {
        EstimatorArg::DiscreteBargmann => Estimator::DiscreteBargmann,
        EstimatorArg::Quadrature => Estimator::Quadrature,
    };
    let phase = geometric_phase_with(&curve, estimator)?;
    if let Some(path) = csv_path {
        let mut w = csv::Writer::from_path(path).map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))?;
        let io = |e: csv::Error| Usage(format!("cannot write {}: {e}", path.display()));
        w.write_record(["s", "dynamical", "geometric"]).map_err(io)?;
        let first = curve.first();
        for (k, (s, dynamical)) in dynamical_phase_series(&curve).into_iter().enumerate() {
            let total = first.inner(&curve.states()[k])?.arg();
            w.write_record([s.to_string(), dynamical.to_string(), (total - dynamical).to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(Report::pass(to_value(&phase)).into())
}

fn bargmann_cmd(c: &Common, count: usize) -> Res<Outcome> {
    let states: Vec<StateVector> = match &c.input {
        Some(path) => load(path)?,
        None => {
            let dim = state_dim(c)?;
            let mut rng = seeded_rng(c.seed);
            (0..count).map(|_| random_state_with(dim, &mut rng)).collect::<raygeom::Result<_>>()?
        }
    };
    let b = delta_n(&states)?;
    Ok(Report::pass(json!({
        "re": b.value.re,
        "im": b.value.im,
        "modulus": b.value.norm(),
        "arg": b.arg(),
        "order": b.order,
        "min_link_modulus": b.min_link_modulus,
    }))
    .into())
}

fn triangle_check(c: &Common) -> Res<Outcome> {
    let rays: [Ray; 3] = match c.preset.as_deref() {
        Some("octant") => octant_rays()?,
        Some(other) => return Err(Usage(format!("unknown triangle preset `{other}` (expected octant)"))),
        None => {
            let dim = state_dim(c)?;
            let mut rng = seeded_rng(c.seed);
            let mut draw = || random_state_with(dim, &mut rng).map(|s| Ray::new(&s));
            [draw()?, draw()?, draw()?]
        }
    };
    let [a, b, r3] = &rays;
    let phase = geodesic_triangle_phase(a, b, r3, c.mesh as usize)?;
    let arg = delta3(a.representative(), b.representative(), r3.representative())?.arg();
    let residual = angle_gap(phase, -arg);
    let tol = c.tol.unwrap_or(1e-6);
    let ok = residual < tol;
    let witness = if ok { Value::Null } else { json!({ "residual": residual, "tol": tol }) };
    Ok(Report { ok, witness, values: json!({ "phase": phase, "arg_delta3": arg, "residual": residual }) }.into())
}

fn npc_gen(c: &Common, bulge: f64) -> Res<Outcome> {
    let mesh = c.mesh as usize;
    let curve = match c.preset.as_deref().unwrap_or("sphere-path") {
        "sphere-path" => match &c.input {
            Some(path) => npc_from_sphere_path(&load::<SphereTrajectory>(path)?)?,
            None => {
                let (a, b) = two_random_states(&Common { dim: c.dim.max(3), ..c.clone() })?;
                npc_between(&Ray::new(&a), &Ray::new(&b), bulge, mesh, c.seed)?
            }
        },
        "general" => {
            let (spec, basis) = match &c.input {
                Some(path) => {
                    let spec: GeneralNpcSpec = load(path)?;
                    let m = 2 + spec.chi.first().map_or(0, Vec::len);
                    let dim = (c.dim as usize).max(m);
                    (spec, standard_basis(dim)?.into_iter().take(m).collect())
                }
                None => {
                    let (a, b) = two_random_states(&Common { dim: c.dim.max(3), ..c.clone() })?;
                    (dipping_general_spec(mesh), adapted_basis(&Ray::new(&a), &Ray::new(&b), 3, c.seed)?.0)
                }
            };
            npc_general(&spec, &basis)?
        }
        other => return Err(Usage(format!("unknown npc preset `{other}` (expected sphere-path or general)"))),
    };
    let check = is_npc_with(&curve, TOL_NPC, c.triples as usize, c.seed);
    let report = Report::pass(json!({
        "samples": curve.len(),
        "dim": curve.dim(),
        "length": length(&curve)?,
        "worst_triple_arg": check.worst_arg,
    }));
    Ok(Outcome { report, artifact: Some(to_json(&curve)) })
}

fn npc_check(c: &Common) -> Res<Outcome> {
    let curve: SampledCurve = load(required_input(c)?)?;
    let r = is_npc_with(&curve, c.tol.unwrap_or(TOL_NPC), c.triples as usize, c.seed);
    let values = json!({
        "samples": curve.len(),
        "triples_checked": r.triples_checked,
        "exhaustive": r.exhaustive,
        "worst_arg": r.worst_arg,
        "worst_imag_ratio": r.worst_imag_ratio,
        "subarc_max_phase": subarc_max_phase(&curve),
    });
    Ok(Report { ok: r.ok, witness: triple_witness(&r), values }.into())
}

fn npm_check(c: &Common) -> Res<Outcome> {
    let chart = chart_from(c)?;
    let tol = c.tol.unwrap_or(TOL_NPC);
    let r = match &chart {
        AnyChart::Vector(m) => is_npm_with(m, tol, c.triples as usize, c.seed),
        AnyChart::Gaussian(m) => is_npm_with(m, tol, c.triples as usize, c.seed),
    };
    let report = Report { ok: r.ok, witness: triple_witness(&r), values: to_value(&r) };
    Ok(chart_outcome(c, &chart, report))
}

fn isotropy_cmd(c: &Common) -> Res<Outcome> {
    let chart = chart_from(c)?;
    let r = match (&chart, c.tol) {
        (AnyChart::Vector(m), None) => isotropy_check(m)?,
        (AnyChart::Vector(m), Some(t)) => isotropy_check_with(m, t)?,
        (AnyChart::Gaussian(m), None) => isotropy_check(m)?,
        (AnyChart::Gaussian(m), Some(t)) => isotropy_check_with(m, t)?,
    };
    let ok = r.passes();
    let witness = if ok {
        Value::Null
    } else {
        json!({ "index": r.worst_index, "axes": r.worst_axes, "omega": r.max_abs_omega, "regular": r.regular })
    };
    let report = Report { ok, witness, values: to_value(&r) };
    Ok(chart_outcome(c, &chart, report))
}

/// Membership predicate for vector charts.
fn vector_membership(chart: &ChartedManifold, rule: Membership, tol: f64) -> Res<Box<dyn Fn(&StateVector) -> bool>> {
    Ok(match rule {
        Membership::Hull => {
            let hull = hull_extend(chart_anchors(chart)?)?;
            Box::new(move |p| hull_membership(&hull, p, tol).member)
        }
        Membership::PositiveSpan => {
            let basis = standard_basis(chart.states()[0].dim())?;
            Box::new(move |p| nonnegative_span_member(&basis, p, tol))
        }
        Membership::Translate => return Err(Usage("--membership translate needs a Gaussian chart".into())),
    })
}

fn gaussian_membership(rule: Membership, tol: f64) -> Res<Box<dyn Fn(&GaussianMixture) -> bool>> {
    match rule {
        Membership::Translate => Ok(Box::new(move |m| single_translate_residual(m).is_ok_and(|r| r < tol))),
        _ => Err(Usage("Gaussian charts support --membership translate only".into())),
    }
}

fn tg_check(c: &Common, membership: Option<Membership>, pairs: usize) -> Res<Outcome> {
    let chart = chart_from(c)?;
    let r = match &chart {
        AnyChart::Vector(m) => {
            let f = vector_membership(m, membership.unwrap_or(Membership::Hull), c.tol.unwrap_or(TOL_HULL))?;
            totally_geodesic_check(m, f, pairs, c.seed)
        }
        AnyChart::Gaussian(m) => {
            let f = gaussian_membership(membership.unwrap_or(Membership::Translate), c.tol.unwrap_or(1e-6))?;
            totally_geodesic_check(m, f, pairs, c.seed)
        }
    };
    let witness = r.failure.as_ref().map_or(Value::Null, to_value);
    let report = Report { ok: r.ok, witness, values: json!({ "pairs_checked": r.pairs_checked, "points_checked": r.points_checked }) };
    Ok(chart_outcome(c, &chart, report))
}

fn hull_values<P: HilbertPoint>(hull: &HullModel<P>) -> Value {
    let min_gram = hull.gram().iter().flatten().copied().fold(f64::INFINITY, f64::min);
    json!({ "anchors": hull.len(), "min_gram": min_gram, "tol": hull.tol() })
}

fn hull_extend_cmd(c: &Common) -> Res<Outcome> {
    let from_list = match &c.input {
        Some(path) => {
            let v = read_value(path)?;
            if v.is_array() {
                let gaussian = v.get(0).is_some_and(mixture_like);
                Some(if gaussian {
                    let hull = hull_extend(parse::<Vec<GaussianMixture>>(path, v)?)?;
                    (hull_values(&hull), to_json(&hull))
                } else {
                    let hull = hull_extend(parse::<Vec<StateVector>>(path, v)?)?;
                    (hull_values(&hull), to_json(&hull))
                })
            } else {
                None
            }
        }
        None => None,
    };
    let (values, artifact) = match from_list {
        Some(x) => x,
        None => match chart_from(c)? {
            AnyChart::Vector(m) => {
                let hull = hull_extend(chart_anchors(&m)?)?;
                (hull_values(&hull), to_json(&hull))
            }
            AnyChart::Gaussian(m) => {
                let hull = hull_extend(chart_anchors(&m)?)?;
                (hull_values(&hull), to_json(&hull))
            }
        },
    };
    Ok(Outcome { report: Report::pass(values), artifact: Some(artifact) })
}

fn member_report<P: HilbertPoint + DeserializeOwned>(hull: HullModel<P>, state: Option<&Path>, tol: Option<f64>) -> Res<Report> {
    let target = match state {
        Some(path) => load::<P>(path)?,
        None => hull.member(&vec![1.0; hull.len()])?,
    };
    let m = hull_membership(&hull, &target, tol.unwrap_or(hull.tol()));
    let witness = if m.member { Value::Null } else { json!({ "residual": m.residual }) };
    Ok(Report { ok: m.member, witness, values: to_value(&m) })
}

fn hull_member(c: &Common, state: Option<&Path>) -> Res<Outcome> {
    let path = required_input(c)?;
    let v = read_value(path)?;
    let gaussian = v.get("anchors").and_then(|a| a.get(0)).is_some_and(mixture_like);
    let report = if gaussian {
        member_report(parse::<HullModel<GaussianMixture>>(path, v)?, state, c.tol)?
    } else {
        member_report(parse::<HullModel>(path, v)?, state, c.tol)?
    };
    Ok(report.into())
}

fn characterize(c: &Common, membership: Option<Membership>) -> Res<Outcome> {
    let chart = chart_from(c)?;
    let opts = CharacterizationOptions {
        tol: c.tol.unwrap_or(TOL_NPC),
        triples: c.triples as usize,
        seed: c.seed,
        ..CharacterizationOptions::default()
    };
    let r = match &chart {
        AnyChart::Vector(m) => {
            let rule = membership.unwrap_or(if c.preset.as_deref() == Some("npc") { Membership::Hull } else { Membership::PositiveSpan });
            let f = vector_membership(m, rule, 1e-10)?;
            verify_npm_characterization(m, &opts, Some(&*f))?
        }
        AnyChart::Gaussian(m) => {
            let f = gaussian_membership(membership.unwrap_or(Membership::Translate), 1e-6)?;
            verify_npm_characterization(m, &opts, Some(&*f))?
        }
    };
    let witness = if r.ok {
        Value::Null
    } else {
        json!({
            "npm": r.npm.ok,
            "members": r.members.as_ref().map(|m| m.ok),
            "totally_geodesic": r.totally_geodesic.as_ref().map(|t| to_value(t)),
            "isotropy": r.isotropy.as_ref().map(|i| i.passes()),
            "hull_npm": r.hull_npm,
        })
    };
    let report = Report { ok: r.ok, witness, values: to_value(&r) };
    Ok(chart_outcome(c, &chart, report))
}

fn gaussian_overlap_cmd(c: &Common) -> Res<Outcome> {
    let (a, b) = match &c.input {
        Some(path) => {
            let gs: Vec<GaussianState> = load(path)?;
            match <[GaussianState; 2]>::try_from(gs) {
                Ok([a, b]) => (a, b),
                Err(v) => return Err(Usage(format!("{}: expected 2 Gaussian states, found {}", path.display(), v.len()))),
            }
        }
        None => {
            let n = c.dim as usize;
            if n > 8 {
                return Err(Usage(format!("--dim for Gaussians must be at most 8, got {n}")));
            }
            let mut rng = seeded_rng(c.seed);
            let mut draw = || -> Res<GaussianState> {
                let y = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
                Ok(GaussianState::new(y, random_spd(&mut rng, n))?)
            };
            (draw()?, draw()?)
        }
    };
    if a.n() != b.n() {
        return Err(Usage(format!("Gaussians have N = {} and N = {}", a.n(), b.n())));
    }
    let overlap = gaussian_overlap(&a, &b)?;
    let n = a.n();
    if n > 2 {
        return Ok(Report::pass(json!({ "N": n, "overlap": overlap })).into());
    }
    let reach = |g: &GaussianState| g.y().iter().fold(0.0f64, |m, v| m.max(v.abs())) + 8.0 * g.widest_sigma();
    let grid = QuadratureGrid::cube(n, reach(&a).max(reach(&b)) + 1.0, if n == 1 { 4001 } else { 401 });
    let quadrature = embed_gaussian(&a, &grid)?.inner(&embed_gaussian(&b, &grid)?)?.re;
    let difference = (overlap - quadrature).abs();
    let tol = c.tol.unwrap_or(1e-8);
    let ok = difference < tol;
    let witness = if ok { Value::Null } else { json!({ "difference": difference, "tol": tol }) };
    Ok(Report { ok, witness, values: json!({ "N": n, "overlap": overlap, "quadrature": quadrature, "difference": difference }) }.into())
}

fn gaussian_npm(c: &Common) -> Res<Outcome> {
    let n = c.dim as usize;
    let nodes = c.nodes as usize;
    let axis = linspace(-1.0, 1.0, nodes)?;
    let fam = match c.preset.as_deref().unwrap_or("translates") {
        "translates" => {
            if n > 3 {
                return Err(Usage(format!("translate charts support N <= 3, got {n}")));
            }
            gaussian_chart(&vec![axis; n], &[])?
        }
        "general" => {
            if n != 1 {
                return Err(Usage("the general (y, U) chart is available for N = 1".into()));
            }
            gaussian_chart(&[axis], &[linspace(0.6, 1.6, nodes)?])?
        }
        other => return Err(Usage(format!("unknown Gaussian preset `{other}` (expected translates or general)"))),
    };
    let npm = is_npm_with(&fam.chart, c.tol.unwrap_or(TOL_NPC), c.triples as usize, c.seed);
    let iso = isotropy_check(&fam.chart)?;
    let ok = npm.ok && iso.passes();
    let witness = if ok { Value::Null } else { json!({ "npm": triple_witness(&npm), "isotropy": to_value(&iso) }) };
    let min_gram = fam.gram.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let values = json!({
        "points": fam.chart.len(),
        "parameter_count": fam.parameter_count,
        "min_gram": min_gram,
        "npm_worst_arg": npm.worst_arg,
        "isotropy_max_omega": iso.max_abs_omega,
        "isotropy_condition": iso.max_condition,
    });
    let artifact = c.out.as_ref().map(|_| to_json(&fam.chart));
    Ok(Outcome { report: Report { ok, witness, values }, artifact })
}

fn suite_cmd(criterion: Option<u8>) -> Res<Outcome> {
    let ids: Vec<u8> = criterion.map_or_else(|| CRITERIA.to_vec(), |k| vec![k]);
    let outcomes: Vec<_> = ids.iter().filter_map(|&k| run_criterion(k)).collect();
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let ok = failed.is_empty();
    let witness = if ok { Value::Null } else { json!({ "failed": failed }) };
    Ok(Report { ok, witness, values: json!({ "criteria": outcomes }) }.into())
}

fn dispatch(cmd: &Command) -> Res<Outcome> {
    match cmd {
        Command::RandState(c) => rand_state(c),
        Command::Geodesic(c) => geodesic_cmd(c),
        Command::Phase { common, estimator, csv } => phase_cmd(common, *estimator, csv.as_deref()),
        Command::Bargmann { common, count } => bargmann_cmd(common, *count as usize),
        Command::TriangleCheck(c) => triangle_check(c),
        Command::NpcGen { common, bulge } => npc_gen(common, *bulge),
        Command::NpcCheck(c) => npc_check(c),
        Command::NpmCheck(c) => npm_check(c),
        Command::Isotropy(c) => isotropy_cmd(c),
        Command::TgCheck { common, membership, pairs } => tg_check(common, *membership, *pairs as usize),
        Command::HullExtend(c) => hull_extend_cmd(c),
        Command::HullMember { common, state } => hull_member(common, state.as_deref()),
        Command::Characterize { common, membership } => characterize(common, *membership),
        Command::GaussianOverlap(c) => gaussian_overlap_cmd(c),
        Command::GaussianNpm(c) => gaussian_npm(c),
        Command::Suite { criterion, .. } => suite_cmd(*criterion),
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::RandState(c)
        | Command::Geodesic(c)
        | Command::TriangleCheck(c)
        | Command::NpcCheck(c)
        | Command::NpmCheck(c)
        | Command::Isotropy(c)
        | Command::HullExtend(c)
        | Command::GaussianOverlap(c)
        | Command::GaussianNpm(c) => c,
        Command::Phase { common, .. }
        | Command::Bargmann { common, .. }
        | Command::NpcGen { common, .. }
        | Command::TgCheck { common, .. }
        | Command::HullMember { common, .. }
        | Command::Characterize { common, .. }
        | Command::Suite { common, .. } => common,
    }
}

fn run(cli: &Cli) -> Res<bool> {
    let outcome = dispatch(&cli.command)?;
    let c = common(&cli.command);
    let report = json!({
        "command": cli.command.name(),
        "ok": outcome.report.ok,
        "witness": outcome.report.witness,
        "values": outcome.report.values,
        "config": to_value(&cli.command),
    });
    match (outcome.artifact, &c.out) {
        (Some(text), Some(path)) => {
            write_file(path, &text)?;
            print!("{}", to_json(&report));
        }
        // Generators without --out stream the artifact itself.
        (Some(text), None) => print!("{text}"),
        (None, _) => print!("{}", to_json(&report)),
    }
    Ok(outcome.report.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Usage(msg)) => {
            eprintln!("npm-tool {}: {msg}", cli.command.name());
            ExitCode::from(2)
        }
    }
}
