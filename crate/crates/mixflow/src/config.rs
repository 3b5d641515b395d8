//! TOML run configuration.
//!
//! Unknown keys are rejected. Every expression is parsed and every segment
//! reference checked against the mesh before any numerics run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use mixflow_core::data::{MatrixFn, ScalarFn, VectorFn};
use mixflow_core::evolution::{PicardStart, Scheme, SolveConfig};
use mixflow_core::geometry::{generate_mesh, SegmentPlan, Shape};
use mixflow_core::{Datum, Mesh, ProblemData, ProblemSpec, Segment, TimeGrid, Variant};
use serde::Deserialize;

use crate::error::{io_err, CliError, Result};
use crate::expr::Expr;
use crate::meshio::read_mesh;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Src {
    Text(String),
    Int(i64),
    Float(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DatumSrc {
    Vector([Src; 2]),
    Scalar(Src),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mesh: Option<RawMesh>,
    problem: RawProblem,
    #[serde(default)]
    data: RawData,
    time: Option<RawTime>,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    compat: RawCompat,
    perturbation: Option<RawPerturbation>,
    #[serde(default)]
    study: RawStudy,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ShapeName {
    Square,
    Disk,
    Annulus,
    Channel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    generate: Option<ShapeName>,
    resolution: Option<usize>,
    sides: Option<Vec<i64>>,
    inner: Option<f64>,
    length: Option<f64>,
    file: Option<PathBuf>,
    #[serde(default)]
    refine: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
enum VariantName {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    variant: VariantName,
    nu: f64,
    alpha: Option<[[Src; 2]; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    f: Option<[Src; 2]>,
    phi2: Option<DatumSrc>,
    phi3: Option<DatumSrc>,
    phi4: Option<DatumSrc>,
    phi5: Option<DatumSrc>,
    phi6: Option<DatumSrc>,
    phi7: Option<DatumSrc>,
    h1: Option<[Src; 2]>,
    h4: Option<Src>,
    h5: Option<Src>,
    v0: Option<[Src; 2]>,
}

/// Perturbed data carries no essential traces.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerturbation {
    f: Option<[Src; 2]>,
    phi2: Option<DatumSrc>,
    phi3: Option<DatumSrc>,
    phi4: Option<DatumSrc>,
    phi5: Option<DatumSrc>,
    phi6: Option<DatumSrc>,
    phi7: Option<DatumSrc>,
    v0: Option<[Src; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_end: f64,
    steps: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SchemeName {
    ImplicitEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StartName {
    Previous,
    Zero,
    Lifting,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    scheme: Option<SchemeName>,
    picard_tol: Option<f64>,
    max_picard_iters: Option<usize>,
    linear_tol: Option<f64>,
    shift: Option<f64>,
    picard_start: Option<StartName>,
}

/// Which time levels get a field snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Snapshots {
    #[default]
    None,
    Final,
    All,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    #[serde(default)]
    snapshots: Snapshots,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompat {
    levels: Option<usize>,
    check: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    resolutions: Option<Vec<usize>>,
    dt_factor: Option<f64>,
    amplitude: Option<f64>,
    t_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Generated { shape: Shape, resolution: usize, plan: SegmentPlan },
    File { path: PathBuf, refine: usize },
}

#[derive(Debug, Clone)]
pub struct MeshConfig {
    pub source: MeshSource,
    pub mesh: Mesh,
}

impl MeshConfig {
    /// `levels` nested meshes starting from the configured one.
    pub fn family(&self, levels: usize) -> Result<Vec<Mesh>> {
        let mut out = Vec::with_capacity(levels);
        match &self.source {
            MeshSource::Generated { shape, resolution, plan } => {
                for l in 0..levels {
                    out.push(generate_mesh(*shape, resolution << l, plan).map_err(CliError::core("mesh generation"))?);
                }
            }
            MeshSource::File { .. } => {
                let mut m = self.mesh.clone();
                for l in 0..levels {
                    if l > 0 {
                        m = m.refine().map_err(CliError::core("mesh refinement"))?;
                    }
                    out.push(m.clone());
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub snapshots: Snapshots,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatConfig {
    pub levels: usize,
    /// Run the compatibility study before `solve` and `perturb`.
    pub check: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub resolutions: Vec<usize>,
    /// `Δt = dt_factor · h²`
    pub dt_factor: f64,
    pub amplitude: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    pub mesh: Option<MeshConfig>,
    pub spec: ProblemSpec,
    pub perturbation: Option<ProblemData>,
    pub solver: SolveConfig,
    pub output: OutputConfig,
    pub compat: CompatConfig,
    pub study: StudyConfig,
}

impl RunConfig {
    pub fn mesh(&self) -> Result<&MeshConfig> {
        self.mesh.as_ref().ok_or_else(|| CliError::field("mesh", "this command needs a [mesh] section"))
    }

    /// The problem whose data is the `[perturbation]` section.
    pub fn perturbation_spec(&self) -> Result<ProblemSpec> {
        let data = self.perturbation.clone().ok_or_else(|| CliError::field("perturbation", "this command needs a [perturbation] section"))?;
        Ok(ProblemSpec { data, ..self.spec.clone() })
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_config_str(&text, path)
}

/// Parses `text`; relative mesh paths resolve against the directory of `path`.
pub fn parse_config_str(text: &str, path: &Path) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string().trim_end().to_string() })?;
    let base = path.parent().unwrap_or(Path::new("."));

    let variant = match raw.problem.variant {
        VariantName::I => Variant::ProblemI,
        VariantName::II => Variant::ProblemII,
    };
    let time = match raw.time {
        Some(t) => TimeGrid::new(t.t_end, t.steps),
        None => TimeGrid::new(1.0, 10),
    };
    if !(time.t_end > 0.0) || time.steps == 0 {
        return Err(CliError::field("time", "t_end must be positive and steps at least 1"));
    }
    if !(raw.problem.nu > 0.0) {
        return Err(CliError::field("problem.nu", format!("viscosity must be positive, got {}", raw.problem.nu)));
    }
    let mut spec = ProblemSpec::new(variant, raw.problem.nu, time);
    if let Some(a) = &raw.problem.alpha {
        spec.alpha = Some(matrix_fn(a, "problem.alpha")?);
    }
    let d = raw.data;
    spec.data = build_data(
        "data",
        variant,
        [&d.phi2, &d.phi3, &d.phi4, &d.phi5, &d.phi6, &d.phi7],
        d.f.as_ref(),
        d.v0.as_ref(),
    )?;
    spec.data.h1 = d.h1.as_ref().map(|h| vector_fn(h, "data.h1")).transpose()?;
    spec.data.h4 = d.h4.as_ref().map(|h| scalar_fn(h, "data.h4")).transpose()?;
    spec.data.h5 = d.h5.as_ref().map(|h| scalar_fn(h, "data.h5")).transpose()?;

    let perturbation = match &raw.perturbation {
        Some(p) => Some(build_data(
            "perturbation",
            variant,
            [&p.phi2, &p.phi3, &p.phi4, &p.phi5, &p.phi6, &p.phi7],
            p.f.as_ref(),
            p.v0.as_ref(),
        )?),
        None => None,
    };

    let mesh = match raw.mesh {
        Some(m) => Some(build_mesh(m, base)?),
        None => None,
    };
    if let Some(m) = &mesh {
        check_against_mesh(&spec, &spec.data, "data", &m.mesh)?;
        if let Some(p) = &perturbation {
            check_against_mesh(&spec, p, "perturbation", &m.mesh)?;
        }
    }

    let s = raw.solver;
    let defaults = SolveConfig::default();
    let solver = SolveConfig {
        picard_tol: s.picard_tol.unwrap_or(defaults.picard_tol),
        max_picard_iters: s.max_picard_iters.unwrap_or(defaults.max_picard_iters),
        scheme: match s.scheme {
            Some(SchemeName::CrankNicolson) => Scheme::CrankNicolson,
            Some(SchemeName::ImplicitEuler) | None => Scheme::ImplicitEuler,
        },
        linear_tol: s.linear_tol.unwrap_or(defaults.linear_tol),
        shift_override: s.shift,
        picard_start: match s.picard_start {
            Some(StartName::Zero) => PicardStart::Zero,
            Some(StartName::Lifting) => PicardStart::Lifting,
            Some(StartName::Previous) | None => PicardStart::Previous,
        },
    };
    if !(solver.picard_tol > 0.0) {
        return Err(CliError::field("solver.picard_tol", "must be positive"));
    }
    if !(solver.linear_tol > 0.0) {
        return Err(CliError::field("solver.linear_tol", "must be positive"));
    }
    if solver.max_picard_iters == 0 {
        return Err(CliError::field("solver.max_picard_iters", "must be at least 1"));
    }
    if let Some(k) = solver.shift_override {
        if !k.is_finite() || k < 0.0 {
            return Err(CliError::field("solver.shift", "must be finite and non-negative"));
        }
    }

    let compat = CompatConfig { levels: raw.compat.levels.unwrap_or(3), check: raw.compat.check.unwrap_or(true) };
    if compat.levels < 2 {
        return Err(CliError::field("compat.levels", "a refinement study needs at least 2 levels"));
    }
    let st = raw.study;
    let study = StudyConfig {
        resolutions: st.resolutions.unwrap_or_else(|| vec![4, 8, 16]),
        dt_factor: st.dt_factor.unwrap_or(2.0),
        amplitude: st.amplitude.unwrap_or(1.0),
        t_end: st.t_end.unwrap_or(0.125),
    };
    if study.resolutions.len() < 2 || study.resolutions.iter().any(|&r| r == 0) {
        return Err(CliError::field("study.resolutions", "needs at least two positive resolutions"));
    }
    if !(study.dt_factor > 0.0) || !(study.t_end > 0.0) || !study.amplitude.is_finite() {
        return Err(CliError::field("study", "dt_factor and t_end must be positive and amplitude finite"));
    }
    let output = OutputConfig { dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("mixflow-out")), snapshots: raw.output.snapshots };

    Ok(RunConfig { path: path.to_path_buf(), mesh, spec, perturbation, solver, output, compat, study })
}

fn parse_src(src: &Src, field: &str) -> Result<Expr> {
    match src {
        Src::Text(s) => Expr::parse(s).map_err(|e| CliError::field(field, format!("expression '{s}': {e}"))),
        Src::Int(v) => Ok(Expr::Num(*v as f64)),
        Src::Float(v) => Ok(Expr::Num(*v)),
    }
}

fn scalar_fn(src: &Src, field: &str) -> Result<ScalarFn> {
    let e = parse_src(src, field)?;
    Ok(Arc::new(move |p, t| e.eval(p[0], p[1], t)))
}

fn vector_fn(src: &[Src; 2], field: &str) -> Result<VectorFn> {
    let a = parse_src(&src[0], &format!("{field}[0]"))?;
    let b = parse_src(&src[1], &format!("{field}[1]"))?;
    Ok(Arc::new(move |p, t| [a.eval(p[0], p[1], t), b.eval(p[0], p[1], t)]))
}

fn matrix_fn(src: &[[Src; 2]; 2], field: &str) -> Result<MatrixFn> {
    let mut e: Vec<Expr> = Vec::with_capacity(4);
    for (i, row) in src.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            let name = format!("{field}[{i}][{j}]");
            let x = parse_src(s, &name)?;
            if x.depends_on_time() {
                return Err(CliError::field(name, "the friction matrix may not depend on t"));
            }
            e.push(x);
        }
    }
    Ok(Arc::new(move |p| [[e[0].eval(p[0], p[1], 0.0), e[1].eval(p[0], p[1], 0.0)], [e[2].eval(p[0], p[1], 0.0), e[3].eval(p[0], p[1], 0.0)]]))
}

fn build_data(section: &str, variant: Variant, phis: [&Option<DatumSrc>; 6], f: Option<&[Src; 2]>, v0: Option<&[Src; 2]>) -> Result<ProblemData> {
    let mut data = ProblemData {
        f: f.map(|s| vector_fn(s, &format!("{section}.f"))).transpose()?,
        v0: v0.map(|s| vector_fn(s, &format!("{section}.v0"))).transpose()?,
        ..Default::default()
    };
    for (k, phi) in phis.iter().enumerate() {
        let Some(src) = phi else { continue };
        let seg = Segment::new(k as i64 + 2).expect("label in range");
        let field = format!("{section}.phi{}", seg.get());
        let scalar = mixflow_core::data::datum_is_scalar(variant, seg);
        let datum = match (src, scalar) {
            (_, None) => return Err(CliError::field(field, format!("segment {seg} carries no natural datum"))),
            (DatumSrc::Scalar(s), Some(true)) => Datum::Scalar(scalar_fn(s, &field)?),
            (DatumSrc::Vector(v), Some(false)) => Datum::Vector(vector_fn(v, &field)?),
            (DatumSrc::Vector(_), Some(true)) => return Err(CliError::field(field, format!("the datum on {seg} must be a scalar expression"))),
            (DatumSrc::Scalar(_), Some(false)) => return Err(CliError::field(field, format!("the datum on {seg} must be a pair of expressions"))),
        };
        data.set_phi(seg, datum);
    }
    Ok(data)
}

fn check_against_mesh(spec: &ProblemSpec, data: &ProblemData, section: &str, mesh: &Mesh) -> Result<()> {
    if spec.variant == Variant::ProblemII && mesh.has_segment(Segment::G6) {
        return Err(CliError::field("mesh", "Problem II requires Γ6 to be empty (together Γ6 = ∅)"));
    }
    for s in Segment::ALL {
        if data.phi(s).is_some() && !mesh.has_segment(s) {
            return Err(CliError::field(format!("{section}.phi{}", s.get()), format!("segment {s} is absent from the mesh")));
        }
    }
    let traces = [("h1", data.h1.is_some(), Segment::G1), ("h4", data.h4.is_some(), Segment::G4), ("h5", data.h5.is_some(), Segment::G5)];
    for (name, given, s) in traces {
        if given && !mesh.has_segment(s) {
            return Err(CliError::field(format!("{section}.{name}"), format!("segment {s} is absent from the mesh")));
        }
    }
    if spec.alpha.is_some() && !mesh.has_segment(Segment::G5) {
        return Err(CliError::field("problem.alpha", "friction needs a Γ5 segment"));
    }
    let probe = ProblemSpec { data: data.clone(), ..spec.clone() };
    probe.validate(mesh).map_err(|e| CliError::field(section, e.to_string()))
}

fn build_mesh(m: RawMesh, base: &Path) -> Result<MeshConfig> {
    match (m.generate, &m.file) {
        (Some(_), Some(_)) => Err(CliError::field("mesh", "give either `generate` or `file`, not both")),
        (None, None) => Err(CliError::field("mesh", "needs `generate` or `file`")),
        (None, Some(file)) => {
            if m.resolution.is_some() || m.sides.is_some() || m.inner.is_some() || m.length.is_some() {
                return Err(CliError::field("mesh", "`resolution`, `sides`, `inner` and `length` apply to generated meshes only"));
            }
            let path = base.join(file);
            let mut mesh = read_mesh(&path)?;
            for _ in 0..m.refine {
                mesh = mesh.refine().map_err(CliError::core("mesh refinement"))?;
            }
            Ok(MeshConfig { source: MeshSource::File { path, refine: m.refine }, mesh })
        }
        (Some(name), None) => {
            if m.refine != 0 {
                return Err(CliError::field("mesh.refine", "use `resolution` for generated meshes"));
            }
            let shape = match name {
                ShapeName::Square => Shape::UnitSquare,
                ShapeName::Disk => Shape::Disk,
                ShapeName::Annulus => Shape::Annulus { inner: m.inner.unwrap_or(0.5) },
                ShapeName::Channel => Shape::Channel { length: m.length.unwrap_or(1.0) },
            };
            if m.inner.is_some() && !matches!(name, ShapeName::Annulus) {
                return Err(CliError::field("mesh.inner", "applies to the annulus only"));
            }
            if m.length.is_some() && !matches!(name, ShapeName::Channel) {
                return Err(CliError::field("mesh.length", "applies to the channel only"));
            }
            if let Shape::Annulus { inner } = shape {
                if !(inner > 0.0 && inner < 1.0) {
                    return Err(CliError::field("mesh.inner", "must lie in (0, 1)"));
                }
            }
            let labels = m.sides.unwrap_or_else(|| vec![1]);
            let mut sides = Vec::with_capacity(labels.len());
            for l in labels {
                sides.push(Segment::new(l).map_err(|e| CliError::field("mesh.sides", e.to_string()))?);
            }
            let plan = SegmentPlan::sides(&sides);
            let resolution = m.resolution.unwrap_or(8);
            let mesh = generate_mesh(shape, resolution, &plan).map_err(|e| CliError::field("mesh", e.to_string()))?;
            Ok(MeshConfig { source: MeshSource::Generated { shape, resolution, plan }, mesh })
        }
    }
}
