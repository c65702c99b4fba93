//! Command-line front end for the `modelspace` kernel.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod scene;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use modelspace::connections::random_locus_point;
use modelspace::pogorelov::sample_cloud;
use modelspace::surfaces::{codazzi_defect, dual_space, gauss_rhs, gaussian_curvature, FdOrder};
use modelspace::{
    absolute_points, classify_line, conjugate_path_limit, connection_report, dual_embedding_data, dual_support,
    embedding_data, embedding_data_co, infinitesimal_pogorelov, killing_residual, line_through,
    normalized_graph_family, projective_distance, surface_transition, Base, ChartKind, ChartMetric, Connection,
    EmbeddingData, FamilyKind, Flavor, GridSpec, IsometryPath, KillingField, LineType, ModelSpace, PolyField,
    ProjPoint, SpaceName, TargetGroup, Transition,
};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use scene::{matrix, parse_vector, Entity, PatchSpec, Scene};

/// Exit code for validation errors (bad input, failed preconditions).
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for numeric tolerance breaches.
pub const EXIT_TOLERANCE: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {}", m),
            CliError::Tolerance(m) => write!(f, "tolerance failure: {}", m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("I/O: {}", e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(format!("CSV: {}", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    Euclidean,
    Minkowski,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Euclidean => Flavor::Euclidean,
            FlavorArg::Minkowski => Flavor::Minkowski,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Point,
    Hyperplane,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Point => FamilyKind::BlowUpPoint,
            FamilyArg::Hyperplane => FamilyKind::BlowUpHyperplane,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "modelspace", version, about = "Projective model spaces, duality, transition and surfaces")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub emit: Emit,
    /// Random seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Grid size for duality and surface computations.
    #[arg(long, global = true, env = "MODELSPACE_GRID", default_value_t = 64)]
    pub grid: usize,
    /// Tolerance; a breach exits with status 3.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-ratio distance between two points, e.g. `--space Ell2 --x "[1,0,0]" --y "[0,1,0]"`.
    Distance {
        #[arg(long)]
        space: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Type of the line through two points and its absolute points.
    ClassifyLine {
        #[arg(long)]
        space: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Support function of the dual of a body. CSV columns: index, direction..., value.
    Dualize {
        #[arg(long, value_enum)]
        flavor: FlavorArg,
        #[arg(long)]
        body: PathBuf,
    },
    /// Conjugacy limits of isometry paths: a `path` entity, or random paths.
    Transition {
        /// Source space, e.g. `Hyp3`.
        #[arg(long)]
        space: String,
        #[arg(long, value_enum, default_value = "point")]
        family: FamilyArg,
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Residuals of the connection of a space on `field` entities or random fields.
    CheckConnection {
        #[arg(long)]
        space: String,
        #[arg(long)]
        fields: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Infinitesimal Pogorelov map of Killing fields of `Hyp3` or `AdS3`.
    Pogorelov {
        #[arg(long)]
        space: String,
        /// Scene with `generator` entities; random generators otherwise.
        #[arg(long)]
        generators: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
    /// Embedding data of a patch. CSV columns: u, v, E, F, G, B11, B12, B21, B22, K_I, det_B.
    CheckSurface {
        #[arg(long)]
        space: String,
        #[arg(long)]
        patch: PathBuf,
    },
    /// Embedding data of the dual surface, with the same CSV columns.
    DualSurface {
        #[arg(long)]
        space: String,
        #[arg(long)]
        patch: PathBuf,
    },
    /// Limit of a graph family under a plane blow-up of the source space.
    TransitionSurface {
        /// Source space, e.g. `Ell3`.
        #[arg(long)]
        space: String,
        /// Scene with a graph `patch` entity describing u.
        #[arg(long)]
        patch: PathBuf,
    },
    /// Runs the acceptance criteria and prints one PASS/FAIL line each.
    Acceptance {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<u8>,
    },
}

fn space_arg(s: &str) -> Result<ModelSpace, CliError> {
    s.parse::<ModelSpace>().map_err(CliError::from)
}

fn point(space: &ModelSpace, s: &str) -> Result<ProjPoint, CliError> {
    let v = parse_vector(s)?;
    if v.len() != space.form.dim() {
        return Err(CliError::Validation(format!("expected {} coordinates, got {}", space.form.dim(), v.len())));
    }
    Ok(ProjPoint::new(v)?)
}

/// Fails with a worst-offender report when `value` is not below `--tol`.
fn tolerance(cli: &Cli, what: &str, value: f64, worst: &str) -> Result<(), CliError> {
    match cli.tol {
        Some(t) if !(value < t) => {
            Err(CliError::Tolerance(format!("{} = {:e} exceeds {:e}; worst offender: {}", what, value, t, worst)))
        }
        _ => Ok(()),
    }
}

fn json<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| CliError::Validation(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn rng(cli: &Cli) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cli.seed)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Distance { space, x, y } => distance(cli, out, space, x, y),
        Command::ClassifyLine { space, x, y } => classify(cli, out, space, x, y),
        Command::Dualize { flavor, body } => dualize(cli, out, (*flavor).into(), body),
        Command::Transition { space, family, path, samples } => {
            transition(cli, out, space, (*family).into(), path.as_deref(), *samples)
        }
        Command::CheckConnection { space, fields, samples } => {
            check_connection(cli, out, space, fields.as_deref(), *samples)
        }
        Command::Pogorelov { space, generators, samples } => {
            pogorelov(cli, out, space, generators.as_deref(), *samples)
        }
        Command::CheckSurface { space, patch } => check_surface(cli, out, space, patch, false),
        Command::DualSurface { space, patch } => check_surface(cli, out, space, patch, true),
        Command::TransitionSurface { space, patch } => transition_surface(cli, out, space, patch),
        Command::Acceptance { only } => run_acceptance(cli, out, *only),
    }
}

#[derive(Serialize)]
struct DistanceOut {
    distance: f64,
    line: LineType,
}

fn distance(cli: &Cli, out: &mut dyn Write, space: &str, x: &str, y: &str) -> Result<(), CliError> {
    let s = space_arg(space)?;
    let (px, py) = (point(&s, x)?, point(&s, y)?);
    let d = projective_distance(&s, &px, &py)?;
    let line = classify_line(&s, &line_through(&px, &py)?);
    match cli.emit {
        Emit::Json => json(out, &DistanceOut { distance: d, line }),
        Emit::Csv => Ok(writeln!(out, "distance,line\n{},{}", d, line)?),
        Emit::Text => Ok(writeln!(out, "{}\n{}", d, line)?),
    }
}

#[derive(Serialize)]
struct LineOut {
    line: LineType,
    /// Absolute points in ambient coordinates, as (re, im) pairs.
    absolute: Vec<Vec<(f64, f64)>>,
}

fn classify(cli: &Cli, out: &mut dyn Write, space: &str, x: &str, y: &str) -> Result<(), CliError> {
    let s = space_arg(space)?;
    let l = line_through(&point(&s, x)?, &point(&s, y)?)?;
    let line = classify_line(&s, &l);
    let abs = absolute_points(&s, &l);
    let [p, q] = l.basis();
    let absolute = abs
        .roots
        .iter()
        .map(|r| p.iter().zip(q.iter()).map(|(a, b)| r[0] * *a + r[1] * *b).map(|c| (c.re, c.im)).collect())
        .collect();
    let o = LineOut { line, absolute };
    match cli.emit {
        Emit::Json => json(out, &o),
        _ => {
            writeln!(out, "{}", o.line)?;
            for (k, r) in o.absolute.iter().enumerate() {
                let c: Vec<String> = r.iter().map(|(a, b)| format!("{}{:+}i", a, b)).collect();
                writeln!(out, "absolute point {}: [{}]", k + 1, c.join(", "))?;
            }
            Ok(())
        }
    }
}

fn dualize(cli: &Cli, out: &mut dyn Write, flavor: Flavor, body: &std::path::Path) -> Result<(), CliError> {
    let scene = Scene::load(body)?;
    let spec = GridSpec { m: cli.grid, ..GridSpec::default() };
    let h = scene.find("body", |e| scene::support_of(e, flavor, spec))??;
    let d = dual_support(&h)?;
    let values: Vec<f64> = (0..d.grid.len()).map(|k| d.h(k)).collect();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    match cli.emit {
        Emit::Json => json(out, &d),
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let n = d.direction(0).len();
            let mut head = vec!["index".to_string()];
            head.extend((0..n).map(|i| format!("d{}", i)));
            head.push("support".into());
            w.write_record(&head)?;
            for (k, v) in values.iter().enumerate() {
                let mut row = vec![k.to_string()];
                row.extend(d.direction(k).iter().map(|c| c.to_string()));
                row.push(v.to_string());
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(())
        }
        Emit::Text => {
            writeln!(out, "dual support over {} directions: min {} max {}", values.len(), lo, hi)?;
            if hi - lo < 1e-12 * hi.abs().max(1.0) {
                // Round away the last few ulps of quadrature noise.
                writeln!(out, "support constant {}", (lo * 1e12).round() / 1e12)?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TransitionOut {
    target: String,
    paths: usize,
    block_defect: f64,
    in_target: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duality_gap: Option<f64>,
}

fn transition(
    cli: &Cli,
    out: &mut dyn Write,
    space: &str,
    kind: FamilyKind,
    path: Option<&std::path::Path>,
    samples: usize,
) -> Result<(), CliError> {
    let s = space_arg(space)?;
    let name = s.name.ok_or_else(|| CliError::Validation("named source space required".into()))?;
    let tr = Transition::adapted(name, kind, s.n())?;
    let mut o = TransitionOut {
        target: tr.target.space().label().to_string(),
        paths: 0,
        block_defect: 0.0,
        in_target: true,
        limit: None,
        duality_gap: None,
    };
    let (mut worst_path, mut worst_point_path) = (0, 0);
    if let Some(p) = path {
        let scene = Scene::load(p)?;
        let (a, h0) = scene.find("path", |e| match e {
            Entity::Path { generator, start } => Some((generator.clone(), start.clone())),
            _ => None,
        })?;
        let (a, h0) = (matrix(&a)?, matrix(&h0)?);
        let iso = IsometryPath::orbit(a, h0);
        if !iso.preserves(tr.form(), 1e-8) {
            return Err(CliError::Validation("path does not preserve the adapted form of the source".into()));
        }
        let (m, _) = conjugate_path_limit(&iso, &tr.family);
        o.paths = 1;
        o.block_defect = acceptance::block_defect(&m, tr.form(), tr.target);
        o.limit = Some(m.row_iter().map(|r| r.iter().copied().collect()).collect());
    } else {
        let mut r = rng(cli);
        for k in 0..samples {
            let (p, _) = tr.random_isometry_path(&mut r, 0.8);
            let (m, _) = conjugate_path_limit(&p, &tr.family);
            let d = acceptance::block_defect(&m, tr.form(), tr.target);
            if !(d <= o.block_defect) {
                (o.block_defect, worst_path) = (d, k);
            }
        }
        o.paths = samples;
        if kind == FamilyKind::BlowUpPoint {
            let star = tr.dual()?;
            let mut gap: f64 = 0.0;
            for k in 0..samples {
                let path = tr.random_point_path(&mut r, 0.7);
                let g = modelspace::transition::duality_transition_gap(&path, tr.form(), &tr.family, &star.family)?;
                if !(g <= gap) {
                    (gap, worst_point_path) = (g, k);
                }
            }
            o.duality_gap = Some(gap);
        }
    }
    o.in_target = o.block_defect < cli.tol.unwrap_or(1e-6);
    match cli.emit {
        Emit::Json => json(out, &o)?,
        Emit::Csv => {
            writeln!(out, "target,paths,block_defect,duality_gap")?;
            writeln!(
                out,
                "{},{},{},{}",
                o.target,
                o.paths,
                o.block_defect,
                o.duality_gap.map_or(String::new(), |g| g.to_string())
            )?;
        }
        Emit::Text => {
            writeln!(out, "target group: Isom({})", o.target)?;
            if let Some(m) = &o.limit {
                for row in m {
                    writeln!(out, "  {}", row.iter().map(|x| format!("{:12.8}", x)).collect::<Vec<_>>().join(" "))?;
                }
            }
            writeln!(out, "paths: {}  worst block-pattern defect: {:e}", o.paths, o.block_defect)?;
            if let Some(g) = o.duality_gap {
                writeln!(out, "worst duality diagram gap: {:e}", g)?;
            }
        }
    }
    tolerance(cli, "block-pattern defect", o.block_defect, &format!("isometry path #{}", worst_path))?;
    if let Some(g) = o.duality_gap {
        tolerance(cli, "duality diagram gap", g, &format!("point path #{}", worst_point_path))?;
    }
    Ok(())
}

fn check_connection(
    cli: &Cli,
    out: &mut dyn Write,
    space: &str,
    fields: Option<&std::path::Path>,
    samples: usize,
) -> Result<(), CliError> {
    let s = space_arg(space)?;
    let conn = Connection::for_space(&s)?;
    let mut r = rng(cli);
    let d = s.form.dim();
    let polys: Vec<PolyField> = match fields {
        Some(p) => Scene::load(p)?.all(|e| match e {
            Entity::Field { field } => Some(field.clone()),
            _ => None,
        }),
        None => (0..4).map(|_| PolyField::random(&mut r, d, 1.0)).collect(),
    };
    for f in &polys {
        f.validate()?;
        if f.dim() != d {
            return Err(CliError::Validation(format!("field of dimension {} in a space of dimension {}", f.dim(), d)));
        }
    }
    let vf: Vec<_> = polys.iter().map(|p| p.field()).collect();
    let points: Vec<_> = (0..samples).map(|_| random_locus_point(&mut r, &s)).collect();
    let rep = connection_report(&conn, &vf, &points)?;
    match cli.emit {
        Emit::Json => json(out, &rep)?,
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.serialize(&rep)?;
            w.flush()?;
        }
        Emit::Text => {
            writeln!(out, "{} connection on {}", if s.is_degenerate() { "co-space" } else { "Levi-Civita" }, s)?;
            writeln!(out, "symmetry          {:e}", rep.symmetry)?;
            writeln!(out, "compatibility     {:e}", rep.compatibility)?;
            writeln!(out, "parallel volume   {:e}", rep.parallel_volume)?;
            writeln!(out, "geodesic (lines)  {:e}", rep.geodesic)?;
            if let Some(t) = rep.parallel_t {
                writeln!(out, "parallel T        {:e}", t)?;
            }
            if let Some(p) = rep.plane {
                writeln!(out, "plane preservation {:e}", p)?;
            }
        }
    }
    let named = [
        ("symmetry", rep.symmetry),
        ("compatibility", rep.compatibility),
        ("parallel volume", rep.parallel_volume),
        ("geodesic", rep.geodesic),
        ("parallel T", rep.parallel_t.unwrap_or(0.0)),
        ("plane preservation", rep.plane.unwrap_or(0.0)),
    ];
    let (name, worst) = named.into_iter().fold(("symmetry", 0.0), |a, b| if !(b.1 <= a.1) { b } else { a });
    tolerance(cli, "connection residual", worst, name)
}

#[derive(Serialize)]
struct PogorelovRow {
    index: usize,
    source_residual: f64,
    image_residual: f64,
}

fn pogorelov(
    cli: &Cli,
    out: &mut dyn Write,
    space: &str,
    generators: Option<&std::path::Path>,
    samples: usize,
) -> Result<(), CliError> {
    let (src, dst) = match space {
        "Hyp3" | "hyp3" => (ChartMetric::new(ChartKind::HypKlein, 3), ChartMetric::new(ChartKind::EucFlat, 3)),
        "AdS3" | "ads3" => (ChartMetric::new(ChartKind::AdSChart, 3), ChartMetric::new(ChartKind::MinFlat, 3)),
        other => return Err(CliError::Validation(format!("pogorelov needs Hyp3 or AdS3, got {}", other))),
    };
    let form = src.ambient_form();
    let mut r = rng(cli);
    let fields: Vec<KillingField> = match generators {
        Some(p) => Scene::load(p)?
            .all(|e| match e {
                Entity::Generator { matrix: m } => {
                    Some(matrix(m).and_then(|m| Ok(KillingField::new(m, form.clone())?)))
                }
                _ => None,
            })
            .into_iter()
            .collect::<Result<_, _>>()?,
        None => (0..samples).map(|_| KillingField::random(&mut r, &form, 1.0)).collect(),
    };
    let cloud = sample_cloud(&src);
    let mut rows = Vec::new();
    for (index, k) in fields.iter().enumerate() {
        let kf = k.chart_field();
        let source_residual = killing_residual(&src, &kf, &cloud)?;
        let p = infinitesimal_pogorelov(&kf, &src, &dst)?;
        rows.push(PogorelovRow { index, source_residual, image_residual: killing_residual(&dst, &p, &cloud)? });
    }
    match cli.emit {
        Emit::Json => json(out, &rows)?,
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Emit::Text => {
            writeln!(out, "generator  source residual  image residual")?;
            for row in &rows {
                writeln!(out, "{:9}  {:15.3e}  {:14.3e}", row.index, row.source_residual, row.image_residual)?;
            }
        }
    }
    match rows.iter().max_by(|a, b| a.image_residual.total_cmp(&b.image_residual)) {
        Some(w) => tolerance(
            cli,
            "image Killing residual",
            w.image_residual,
            &format!("generator #{} (source residual {:e})", w.index, w.source_residual),
        ),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct SurfaceSummary {
    space: String,
    nodes: usize,
    gauss_residual: f64,
    codazzi_residual: f64,
    mean_k_intrinsic: f64,
    mean_det_b: f64,
}

fn load_patch(path: &std::path::Path) -> Result<PatchSpec, CliError> {
    Scene::load(path)?.find("patch", |e| match e {
        Entity::Patch { patch } => Some(patch.clone()),
        _ => None,
    })
}

fn surface_data(s: &ModelSpace, spec: &PatchSpec, n: usize) -> Result<EmbeddingData, CliError> {
    let patch = spec.patch()?;
    Ok(if s.name.is_some_and(|k| matches!(k, SpaceName::CoEuc | SpaceName::CoMin)) {
        embedding_data_co(&patch, s, n)?
    } else {
        embedding_data(&patch, s, n)?
    })
}

/// Shortest round-trip form of a float, with `-0` printed as `0`.
fn num(x: f64) -> String {
    format!("{:?}", x + 0.0)
}

fn emit_surface(cli: &Cli, out: &mut dyn Write, d: &EmbeddingData) -> Result<(), CliError> {
    let k = gaussian_curvature(&d.grid, &d.first, FdOrder::Fourth);
    let dets = d.extrinsic_curvature();
    let res: Vec<Option<f64>> =
        k.iter().zip(&dets).map(|(k, &b)| k.map(|k| (k - gauss_rhs(d.space, b)).abs())).collect();
    let (worst_node, g) =
        res.iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|r| (i, r)))
            .fold((0, 0.0), |a, b| if !(b.1 <= a.1) { b } else { a });
    let c = codazzi_defect(&d.grid, &d.first, &d.shape, FdOrder::Fourth);
    let ks: Vec<f64> = k.iter().flatten().copied().collect();
    let summary = SurfaceSummary {
        space: d.space.label().to_string(),
        nodes: d.grid.len(),
        gauss_residual: g,
        codazzi_residual: c,
        mean_k_intrinsic: ks.iter().sum::<f64>() / ks.len().max(1) as f64,
        mean_det_b: dets.iter().sum::<f64>() / dets.len().max(1) as f64,
    };
    match cli.emit {
        Emit::Json => json(out, &serde_json::json!({ "summary": summary, "data": d }))?,
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["u", "v", "E", "F", "G", "B11", "B12", "B21", "B22", "K_I", "det_B", "gauss_residual"])?;
            for (idx, (u, v)) in d.grid.nodes().into_iter().enumerate() {
                let (i, b) = (&d.first[idx], &d.shape[idx]);
                let row = [u, v, i[(0, 0)], i[(0, 1)], i[(1, 1)], b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]];
                let mut rec: Vec<String> = row.iter().map(|&x| num(x)).collect();
                rec.push(k[idx].map_or(String::new(), num));
                rec.push(num(dets[idx]));
                rec.push(res[idx].map_or(String::new(), num));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Emit::Text => {
            writeln!(out, "space {}  nodes {}", summary.space, summary.nodes)?;
            writeln!(out, "mean K_I          {}", summary.mean_k_intrinsic)?;
            writeln!(out, "mean det B        {}", summary.mean_det_b)?;
            writeln!(out, "gauss residual    {:e}", g)?;
            writeln!(out, "codazzi residual  {:e}", c)?;
        }
    }
    let (u, v) = d.grid.nodes()[worst_node];
    tolerance(cli, "gauss residual", g, &format!("node ({}, {})", u, v))?;
    tolerance(cli, "codazzi residual", c, "interior stencil")
}

fn check_surface(
    cli: &Cli,
    out: &mut dyn Write,
    space: &str,
    patch: &std::path::Path,
    dual: bool,
) -> Result<(), CliError> {
    let s = space_arg(space)?;
    if s.n() != 3 {
        return Err(CliError::Validation("surfaces live in 3-dimensional spaces".into()));
    }
    let spec = load_patch(patch)?;
    let d = surface_data(&s, &spec, cli.grid)?;
    if dual {
        let dd = dual_embedding_data(&d)?;
        debug_assert_eq!(dd.space, dual_space(d.space));
        emit_surface(cli, out, &dd)
    } else {
        emit_surface(cli, out, &d)
    }
}

#[derive(Serialize)]
struct SurfaceTransitionOut {
    target: String,
    shape_gap: f64,
    metric_gap: f64,
    extrapolation_error: f64,
}

fn transition_surface(cli: &Cli, out: &mut dyn Write, space: &str, patch: &std::path::Path) -> Result<(), CliError> {
    let s = space_arg(space)?;
    let name = s.name.ok_or_else(|| CliError::Validation("named source space required".into()))?;
    let tr = Transition::adapted(name, FamilyKind::BlowUpHyperplane, 3)?;
    let spec = load_patch(patch)?;
    let graph = spec.graph().ok_or_else(|| CliError::Validation("transition-surface needs a graph patch".into()))?;
    let want = if tr.target == TargetGroup::IsomCoEuc { Base::Sphere } else { Base::Hyperbolic };
    if graph.base != want {
        return Err(CliError::Validation(format!("the limit of {} lives over {:?}", name.label(), want)));
    }
    let n = cli.grid.min(33);
    let fam = normalized_graph_family(&tr, graph.u.clone(), None)?;
    let st = surface_transition(&fam, &tr, graph.a, graph.b, n)?;
    let co = embedding_data_co(&graph.patch(), &ModelSpace::named(want.space(), 3), n)?;
    let o = SurfaceTransitionOut {
        target: want.space().label().to_string(),
        shape_gap: st.data.shape_gap(&co),
        metric_gap: st.data.first.iter().zip(&co.first).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max),
        extrapolation_error: st.error,
    };
    match cli.emit {
        Emit::Json => json(out, &serde_json::json!({ "summary": o, "limit": st.data }))?,
        Emit::Csv => emit_surface(cli, out, &st.data)?,
        Emit::Text => {
            writeln!(out, "limit in {} over a {}x{} grid", o.target, n, n)?;
            writeln!(out, "shape gap to co-space data   {:e}", o.shape_gap)?;
            writeln!(out, "metric gap to co-space data  {:e}", o.metric_gap)?;
            writeln!(out, "extrapolation error          {:e}", o.extrapolation_error)?;
        }
    }
    let (what, gap) =
        if o.shape_gap >= o.metric_gap { ("shape operator", o.shape_gap) } else { ("first form", o.metric_gap) };
    tolerance(cli, "surface transition gap", gap, what)
}

fn run_acceptance(cli: &Cli, out: &mut dyn Write, only: Option<u8>) -> Result<(), CliError> {
    let cfg = acceptance::Config { seed: cli.seed, grid: cli.grid };
    let ids: Vec<u8> = match only {
        Some(i) if (1..=9).contains(&i) => vec![i],
        Some(i) => return Err(CliError::Validation(format!("criteria are numbered 1 to 9, got {}", i))),
        None => (1..=9).collect(),
    };
    let mut failed = Vec::new();
    for id in ids {
        let o = acceptance::run(id, &cfg);
        writeln!(out, "{}", o)?;
        out.flush()?;
        if !o.pass() {
            failed.push(id.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!("criteria {} failed", failed.join(", "))))
    }
}

/// A point vector from a `point` entity, for scripting.
pub fn point_entity(e: &Entity) -> Option<DVector<f64>> {
    match e {
        Entity::Point { coords } => Some(DVector::from_vec(coords.clone())),
        _ => None,
    }
}
