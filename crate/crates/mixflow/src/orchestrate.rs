//! Subcommand pipelines: mesh, frames, spaces, coercivity, lifting,
//! compatibility and evolution, with all file outputs.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use mixflow_core::boundary_calculus::verify_suite;
use mixflow_core::coercivity::compute_shift;
use mixflow_core::compat::{compat_study, CompatibilityReport, Verdict};
use mixflow_core::discretization::Discretization;
use mixflow_core::evolution::{evolve, run_perturbation, Mode, RunOutput, Trajectory};
use mixflow_core::forms::velocity_errors;
use mixflow_core::lifting::{build_lifting, check_initial_compatibility, LiftingField};
use mixflow_core::manufactured::ChannelSolution;
use mixflow_core::math::Vec2;
use mixflow_core::{ProblemSpec, TimeGrid};

use crate::config::{RunConfig, Snapshots};
use crate::error::{io_err, CliError, Result};
use crate::meshio::format_mesh;
use crate::output::{format_coercivity, format_compat, format_flux, format_norms, format_snapshot, write_file};

/// Largest boundary-identity residual accepted by `verify-identities`.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Gauss samples per curve for `verify-identities`.
pub const IDENTITY_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyIdentities,
    Coercivity,
    /// `perturbation` selects the functional of the perturbation problem.
    Compat { perturbation: bool },
    Solve,
    Perturb,
    ConvergenceStudy,
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Overrides `[output] dir`.
    pub out: Option<PathBuf>,
    /// A `not_in_H` verdict becomes an error.
    pub strict: bool,
}

/// Runs `cmd`; the report goes to `stdout` and warnings to `stderr`.
pub fn orchestrate(cmd: Command, config: Option<&RunConfig>, opts: &Options, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut ctx = Ctx { opts, stdout, stderr };
    if cmd == Command::VerifyIdentities {
        return ctx.verify_identities();
    }
    let cfg = config.ok_or_else(|| CliError::Usage("this command needs a configuration file".into()))?;
    match cmd {
        Command::VerifyIdentities => unreachable!(),
        Command::Coercivity => ctx.coercivity(cfg),
        Command::Compat { perturbation } => ctx.compat(cfg, perturbation),
        Command::Solve => ctx.solve(cfg).map(|_| ()),
        Command::Perturb => ctx.perturb(cfg),
        Command::ConvergenceStudy => ctx.convergence(cfg),
    }
}

struct Ctx<'a> {
    opts: &'a Options,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn print(&mut self, text: &str) -> Result<()> {
        self.stdout.write_all(text.as_bytes()).map_err(io_err("<stdout>"))
    }

    fn warn(&mut self, text: &str) {
        let _ = writeln!(self.stderr, "warning: {text}");
    }

    fn out_dir(&self, cfg: &RunConfig) -> Result<PathBuf> {
        let dir = self.opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(dir)
    }

    fn verify_identities(&mut self) -> Result<()> {
        let rows = verify_suite(IDENTITY_SAMPLES).map_err(CliError::core("boundary identities"))?;
        let mut s = format!("{:<28} {:<18} {:<28} {}\n", "identity", "field", "curve", "max_residual");
        let mut failed = 0;
        for r in &rows {
            let _ = writeln!(s, "{:<28} {:<18} {:<28} {:.3e}", r.identity, r.field, r.curve, r.residual);
            if !(r.residual < IDENTITY_TOL) {
                failed += 1;
            }
        }
        let _ = writeln!(s, "checked = {}, failed = {}", rows.len(), failed);
        self.print(&s)?;
        if failed > 0 {
            return Err(CliError::IdentityFailure(failed));
        }
        Ok(())
    }

    fn discretize(&self, cfg: &RunConfig, spec: &ProblemSpec) -> Result<Discretization> {
        Discretization::new(cfg.mesh()?.mesh.clone(), spec).map_err(CliError::core("discretization"))
    }

    fn coercivity(&mut self, cfg: &RunConfig) -> Result<()> {
        let disc = self.discretize(cfg, &cfg.spec)?;
        let report = compute_shift(&disc.sys, &disc.map, None).map_err(CliError::core("coercivity"))?;
        let text = format_coercivity(&report);
        let dir = self.out_dir(cfg)?;
        write_file(&dir.join("coercivity.txt"), &text)?;
        self.print(&text)
    }

    /// Refinement study; `base` is `W(0)` for the perturbation functional.
    fn compat_report(&mut self, cfg: &RunConfig, perturbation: bool, shift_k: Option<f64>) -> Result<CompatibilityReport> {
        let meshes = cfg.mesh()?.family(cfg.compat.levels)?;
        let report = if perturbation {
            let spec = cfg.perturbation_spec()?;
            let w0 = cfg.spec.data.v0.clone();
            let base = move |p: Vec2| w0.as_ref().map_or([0.0, 0.0], |w| w(p, 0.0));
            compat_study(&meshes, &spec, shift_k, Some(&base))
        } else {
            compat_study(&meshes, &cfg.spec, shift_k, None)
        }
        .map_err(CliError::core("compatibility"))?;
        if report.verdict == Verdict::NotInH {
            if self.opts.strict {
                return Err(CliError::NotInH { functional: report.functional.name(), exponent: report.growth_exponent });
            }
            self.warn(&format!(
                "compatibility functional {} is not in H (growth exponent {:.4}); continuing",
                report.functional.name(),
                report.growth_exponent
            ));
        }
        Ok(report)
    }

    fn compat(&mut self, cfg: &RunConfig, perturbation: bool) -> Result<()> {
        let dir = self.out_dir(cfg)?;
        let report = self.compat_report(cfg, perturbation, cfg.solver.shift_override)?;
        let text = format_compat(&report, None);
        write_file(&dir.join("compat.txt"), &text)?;
        self.print(&text)
    }

    /// Standard run with the lifting, shift, compatibility and evolution stages.
    fn standard_run(&mut self, cfg: &RunConfig, disc: &Discretization, dir: &Path) -> Result<RunOutput> {
        let spec = &cfg.spec;
        let lifting = build_lifting(spec, &disc.mesh, &disc.frames, &disc.map, &disc.sys).map_err(CliError::core("lifting"))?;
        write_file(&dir.join("flux.csv"), &format_flux(&lifting.flux))?;
        let (k, coercivity) = match cfg.solver.shift_override {
            Some(k) => (k, None),
            None => {
                let r = compute_shift(&disc.sys, &disc.map, None).map_err(CliError::core("coercivity"))?;
                (r.shift_k, Some(r))
            }
        };
        if let Some(r) = &coercivity {
            write_file(&dir.join("coercivity.txt"), &format_coercivity(r))?;
        }
        if cfg.compat.check {
            let report = self.compat_report(cfg, false, Some(k))?;
            write_file(&dir.join("compat.txt"), &format_compat(&report, Some(k)))?;
        }
        let v0 = disc.initial_velocity(spec);
        let (ok, violation) = check_initial_compatibility(&lifting, &v0, &disc.map);
        if !ok {
            self.warn(&format!("initial velocity violates the essential boundary data by {violation:.3e}; its projection is used"));
        }
        let diff: Vec<f64> = v0.iter().zip(lifting.velocity(0)).map(|(a, b)| a - b).collect();
        let z0 = disc.project(&diff);
        let trajectory = evolve(disc, spec, &lifting, Mode::Standard, k, z0, &cfg.solver).map_err(CliError::core("evolution"))?;
        Ok(RunOutput { coercivity, lifting, trajectory })
    }

    fn snapshots(&self, cfg: &RunConfig, disc: &Discretization, dir: &Path, prefix: &str, fields: &[mixflow_core::Field]) -> Result<()> {
        let chosen: Vec<usize> = match cfg.output.snapshots {
            Snapshots::None => return Ok(()),
            Snapshots::Final => vec![fields.len() - 1],
            Snapshots::All => (0..fields.len()).collect(),
        };
        let sub = dir.join("snapshots");
        std::fs::create_dir_all(&sub).map_err(io_err(&sub))?;
        for k in chosen {
            write_file(&sub.join(format!("{prefix}_{k:05}.txt")), &format_snapshot(&disc.map, &fields[k]))?;
        }
        Ok(())
    }

    fn summary(&mut self, label: &str, out: &RunOutput, flux: bool, dir: &Path) -> Result<()> {
        let t = &out.trajectory;
        let last = t.records.last().expect("records include t = 0");
        let mut s = String::new();
        let _ = writeln!(s, "{label}.steps = {}", t.records.len() - 1);
        let _ = writeln!(s, "{label}.shift_k = {:.12e}", t.shift_k);
        let _ = writeln!(s, "{label}.final_t = {:.12e}", last.t);
        let _ = writeln!(s, "{label}.final_L2_velocity = {:.12e}", last.l2_velocity);
        let _ = writeln!(s, "{label}.final_H1_velocity = {:.12e}", last.h1_velocity);
        let _ = writeln!(s, "{label}.max_picard_iters = {}", t.records.iter().map(|r| r.picard_iters).max().unwrap_or(0));
        if let Some(f) = out.lifting.flux.first().filter(|_| flux) {
            let _ = writeln!(s, "{label}.inlet_inflow = {:.15e}", f.inflow);
            let _ = writeln!(s, "{label}.gamma1_flux = {:.15e}", f.gamma1_flux);
        }
        let _ = writeln!(s, "{label}.output = {}", dir.display());
        self.print(&s)
    }

    fn solve(&mut self, cfg: &RunConfig) -> Result<RunOutput> {
        let dir = self.out_dir(cfg)?;
        let disc = self.discretize(cfg, &cfg.spec)?;
        write_file(&dir.join("mesh.txt"), &format_mesh(&disc.mesh))?;
        let out = self.standard_run(cfg, &disc, &dir)?;
        write_file(&dir.join("norms.csv"), &format_norms(&out.trajectory.records))?;
        self.snapshots(cfg, &disc, &dir, "field", &out.trajectory.physical)?;
        self.summary("solve", &out, true, &dir)?;
        Ok(out)
    }

    fn perturb(&mut self, cfg: &RunConfig) -> Result<()> {
        let pspec = cfg.perturbation_spec()?;
        let dir = self.out_dir(cfg)?;
        let disc = self.discretize(cfg, &cfg.spec)?;
        write_file(&dir.join("mesh.txt"), &format_mesh(&disc.mesh))?;
        let base_out = self.standard_run(cfg, &disc, &dir)?;
        write_file(&dir.join("norms.csv"), &format_norms(&base_out.trajectory.records))?;
        let base = base_field(&disc, &base_out.trajectory)?;
        if cfg.compat.check {
            let report = self.compat_report(cfg, true, cfg.solver.shift_override)?;
            write_file(&dir.join("compat_perturbation.txt"), &format_compat(&report, None))?;
        }
        let out = run_perturbation(&disc, &base, &pspec, &cfg.solver).map_err(CliError::core("perturbation"))?;
        if let Some(r) = &out.coercivity {
            write_file(&dir.join("coercivity_perturbation.txt"), &format_coercivity(r))?;
        }
        write_file(&dir.join("perturbation_norms.csv"), &format_norms(&out.trajectory.records))?;
        self.snapshots(cfg, &disc, &dir, "perturbation", &out.trajectory.deviation)?;
        self.snapshots(cfg, &disc, &dir, "perturbed", &out.trajectory.physical)?;
        self.summary("base", &base_out, true, &dir)?;
        self.summary("perturbation", &out, false, &dir)
    }

    fn convergence(&mut self, cfg: &RunConfig) -> Result<()> {
        let dir = self.out_dir(cfg)?;
        let st = &cfg.study;
        let sol = ChannelSolution::new(cfg.spec.variant, cfg.spec.nu, st.amplitude);
        let mut rows: Vec<(f64, f64, f64, usize)> = Vec::new();
        for &n in &st.resolutions {
            let h = 1.0 / n as f64;
            let steps = ((st.t_end / (st.dt_factor * h * h)).ceil() as usize).max(1);
            let spec = sol.spec(TimeGrid::new(st.t_end, steps));
            let disc = Discretization::new(sol.mesh(n).map_err(CliError::core("mesh generation"))?, &spec).map_err(CliError::core("discretization"))?;
            let out = mixflow_core::evolution::run(&disc, &spec, &cfg.solver).map_err(CliError::core("evolution"))?;
            let v = &out.trajectory.physical.last().expect("final field").velocity;
            let t = st.t_end;
            let (l2, h1) = velocity_errors(&disc.sys, v, &|p| (sol.velocity(p, t), sol.gradient(p, t)));
            rows.push((h, l2, h1, steps));
        }
        let mut csv = String::from("h,steps,L2_error,L2_rate,H1_error,H1_rate\n");
        let mut table = format!("{:>10} {:>6} {:>14} {:>8} {:>14} {:>8}\n", "h", "steps", "L2_error", "rate", "H1_error", "rate");
        for (i, &(h, l2, h1, steps)) in rows.iter().enumerate() {
            let (r2, r1) = if i == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let (hp, l2p, h1p, _) = rows[i - 1];
                let q = (hp / h).ln();
                ((l2p / l2).ln() / q, (h1p / h1).ln() / q)
            };
            let _ = writeln!(csv, "{h:.12e},{steps},{l2:.12e},{r2:.6},{h1:.12e},{r1:.6}");
            let _ = writeln!(table, "{h:>10.6} {steps:>6} {l2:>14.6e} {r2:>8.3} {h1:>14.6e} {r1:>8.3}");
        }
        write_file(&dir.join("convergence.csv"), &csv)?;
        self.print(&table)
    }
}

/// Base solution `W` sampled on the time grid of the run.
fn base_field(disc: &Discretization, t: &Trajectory) -> Result<LiftingField> {
    let vel: Vec<Vec<f64>> = t.physical.iter().map(|f| f.velocity.clone()).collect();
    LiftingField::from_samples(&disc.map, &t.times, vel).map_err(CliError::core("base solution"))
}
