//! Time stepping of the rescaled problem.
//!
//! With `v = e^{kt} z + U` the unknown `z` satisfies
//!
//! ```text
//! M z′ + (P + kM + C₁(U) + C₂(U)) z + e^{kt} C₁(z) z + Bᵀq = F(t),
//! F(t) = e^{−kt} [d(t) − M U′ − P U − C₁(U) U],      B z = 0,
//! ```
//!
//! discretized by the θ-scheme. Each step is solved by Picard iteration with
//! the transport field of the quadratic term frozen at the previous iterate.
//! In perturbation mode `U` is replaced by the base solution `W` in the
//! linear terms and `F = e^{−kt} d(t)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::coercivity::{compute_shift, CoercivityReport};
use crate::data::ProblemSpec;
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::lifting::{build_lifting, LiftingField};
use crate::math::{abs, exp, norm_slice};
use crate::saddle::Saddle;
use crate::spaces::Field;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    CrankNicolson,
}

impl Scheme {
    pub fn theta(self) -> f64 {
        match self {
            Scheme::ImplicitEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

/// Initial guess of the Picard iteration at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PicardStart {
    /// The converged state of the previous step.
    #[default]
    Previous,
    Zero,
    /// The projected background field (lifting or base solution) at the new time.
    Lifting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub picard_tol: f64,
    pub max_picard_iters: usize,
    pub scheme: Scheme,
    pub linear_tol: f64,
    /// Use this shift instead of the computed one.
    pub shift_override: Option<f64>,
    pub picard_start: PicardStart,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            picard_tol: 1e-10,
            max_picard_iters: 50,
            scheme: Scheme::ImplicitEuler,
            linear_tol: 1e-12,
            shift_override: None,
            picard_start: PicardStart::Previous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Standard,
    Perturbation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub picard_iters: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    /// Norms of the reported field (`v`, or `z̄` in perturbation mode).
    pub l2_velocity: f64,
    pub h1_velocity: f64,
    /// `‖ε(·)‖²` of the reported field.
    pub strain_energy: f64,
    /// `|⟨(z·∇)z, z⟩|`, nonzero since the trilinear form is not skew here.
    pub skew_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mode: Mode,
    pub shift_k: f64,
    pub times: Vec<f64>,
    /// Rescaled unknown `z` per time.
    pub rescaled: Vec<Vec<f64>>,
    /// `z̄ = e^{kt} z` with pressure `e^{kt} q`.
    pub deviation: Vec<Field>,
    /// `v = z̄ + U` (or `z̄ + W`).
    pub physical: Vec<Field>,
    /// One record per time, including `t = 0` (zero iterations).
    pub records: Vec<StepRecord>,
}

struct Background {
    lin: CsrMatrix,
    rhs: Vec<f64>,
}

struct Stepper<'a> {
    disc: &'a Discretization,
    spec: &'a ProblemSpec,
    bg: &'a LiftingField,
    mode: Mode,
    k: f64,
    cfg: SolveConfig,
    saddle: Saddle,
}

impl Stepper<'_> {
    fn background(&self, idx: usize) -> Result<Background> {
        let sys = &self.disc.sys;
        let t = self.spec.time.time(idx);
        let u = self.bg.velocity(idx);
        let mut lin = CsrMatrix::combination(&[(1.0, &sys.principal), (self.k, &sys.mass)]);
        let d = sys.data_functional(&self.disc.mesh, &self.disc.frames, &self.disc.map, &self.spec.data, t)?;
        let w = exp(-self.k * t);
        let mut rhs: Vec<f64> = d.iter().map(|v| w * v).collect();
        if u.iter().any(|&x| x != 0.0) {
            let (c1, c2) = sys.convection(u);
            lin = CsrMatrix::combination(&[(1.0, &lin), (1.0, &c1), (1.0, &c2)]);
            if self.mode == Mode::Standard {
                let mu = sys.mass.mul_vec(&self.bg.derivatives[idx]);
                let pu = sys.principal.mul_vec(u);
                let cu = c1.mul_vec(u);
                for i in 0..rhs.len() {
                    rhs[i] -= w * (mu[i] + pu[i] + cu[i]);
                }
            }
        }
        Ok(Background { lin, rhs })
    }

    /// `N(t, z) = lin z + e^{kt} C₁(z) z`
    fn operator(&self, lin: &CsrMatrix, t: f64, z: &[f64]) -> Vec<f64> {
        let mut out = lin.mul_vec(z);
        let cz = self.disc.sys.convection_transport(z).mul_vec(z);
        let w = exp(self.k * t);
        out.iter_mut().zip(&cz).for_each(|(o, c)| *o += w * c);
        out
    }

    fn step(&self, m: usize, zm: &[f64], qm: &[f64], prev: &Background, next: &Background) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let sys = &self.disc.sys;
        let map = &self.disc.map;
        let dt = self.spec.time.dt();
        let theta = self.cfg.scheme.theta();
        let t0 = self.spec.time.time(m);
        let t1 = self.spec.time.time(m + 1);
        let mut rhs: Vec<f64> = sys.mass.mul_vec(zm).into_iter().map(|v| v / dt).collect();
        for (i, r) in rhs.iter_mut().enumerate() {
            *r += theta * next.rhs[i];
        }
        if theta < 1.0 {
            let n0 = self.operator(&prev.lin, t0, zm);
            for (i, r) in rhs.iter_mut().enumerate() {
                *r += (1.0 - theta) * (prev.rhs[i] - n0[i]);
            }
        }
        let rhs_red = map.restrict(&rhs);
        let scale = match norm_slice(&rhs_red) {
            s if s > 0.0 => s,
            _ => 1.0,
        };
        let mut z = match self.cfg.picard_start {
            PicardStart::Previous => zm.to_vec(),
            PicardStart::Zero => vec![0.0; zm.len()],
            PicardStart::Lifting => self.disc.project(self.bg.velocity(m + 1)),
        };
        let mut q = qm.to_vec();
        let base = CsrMatrix::combination(&[(1.0 / dt, &sys.mass), (theta, &next.lin)]);
        let weight = theta * exp(self.k * t1);
        let mut history = Vec::new();
        let mut growth = 0;
        for it in 0..=self.cfg.max_picard_iters {
            let c = sys.convection_transport(&z);
            let a = CsrMatrix::combination(&[(1.0, &base), (weight, &c)]);
            let a_red = map.reduce(&a);
            let r = map.restrict(&z);
            let mut res = a_red.mul_vec(&r);
            let bq = self.saddle.b_red.tr_mul_vec(&q);
            for i in 0..res.len() {
                res[i] += bq[i] - rhs_red[i];
            }
            let div = self.saddle.b_red.mul_vec(&r);
            let rel = (norm_slice(&res) + norm_slice(&div)) / scale;
            if let Some(&last) = history.last() {
                growth = if rel > last { growth + 1 } else { 0 };
            }
            history.push(rel);
            if rel <= self.cfg.picard_tol {
                return Ok((z, q, history));
            }
            if growth >= 5 || it == self.cfg.max_picard_iters || !rel.is_finite() {
                return Err(Error::PicardDivergence { step: m + 1, t: t1, iterations: it, residual: rel });
            }
            let factor = self.saddle.factor(&a_red)?;
            let (r_new, q_new) = factor.solve(&rhs_red, &vec![0.0; q.len()]);
            z = map.expand(&r_new, None);
            q = q_new;
        }
        unreachable!()
    }

    fn record(&self, idx: usize, z: &[f64], q: &[f64], iters: usize, history: Vec<f64>) -> (Field, Field, StepRecord) {
        let sys = &self.disc.sys;
        let t = self.spec.time.time(idx);
        let w = exp(self.k * t);
        let zbar = Field { velocity: z.iter().map(|v| w * v).collect(), pressure: q.iter().map(|v| w * v).collect() };
        let bgv = self.bg.velocity(idx);
        let phys = Field { velocity: zbar.velocity.iter().zip(bgv).map(|(a, b)| a + b).collect(), pressure: zbar.pressure.clone() };
        let shown = match self.mode {
            Mode::Standard => &phys.velocity,
            Mode::Perturbation => &zbar.velocity,
        };
        let skew = abs(sys.convection_transport(z).bilinear(z, z));
        let rec = StepRecord {
            t,
            picard_iters: iters,
            residual: history.last().copied().unwrap_or(0.0),
            residual_history: history,
            l2_velocity: sys.l2_norm(shown),
            h1_velocity: sys.h1_norm(shown),
            strain_energy: sys.strain_energy(shown),
            skew_defect: skew,
        };
        (zbar, phys, rec)
    }
}

/// Integrates from the rescaled initial state `z0` (constrained, full length).
pub fn evolve(disc: &Discretization, spec: &ProblemSpec, background: &LiftingField, mode: Mode, shift_k: f64, z0: Vec<f64>, config: &SolveConfig) -> Result<Trajectory> {
    let steps = spec.time.steps;
    if background.samples.len() != steps + 1 {
        return Err(Error::Dimension { expected: steps + 1, got: background.samples.len() });
    }
    if z0.len() != disc.map.n_velocity() {
        return Err(Error::Dimension { expected: disc.map.n_velocity(), got: z0.len() });
    }
    let mut saddle = Saddle::new(&disc.sys, &disc.map);
    saddle.linear_tol = config.linear_tol;
    let st = Stepper { disc, spec, bg: background, mode, k: shift_k, cfg: *config, saddle };
    let mut z = z0;
    let mut q = vec![0.0; disc.map.n_pressure()];
    let mut out = Trajectory { mode, shift_k, times: spec.time.times(), rescaled: Vec::new(), deviation: Vec::new(), physical: Vec::new(), records: Vec::new() };
    let (zb, ph, rec) = st.record(0, &z, &q, 0, Vec::new());
    out.rescaled.push(z.clone());
    out.deviation.push(zb);
    out.physical.push(ph);
    out.records.push(rec);
    let mut prev = st.background(0)?;
    for m in 0..steps {
        let next = st.background(m + 1)?;
        let (z1, q1, history) = st.step(m, &z, &q, &prev, &next)?;
        z = z1;
        q = q1;
        let iters = history.len() - 1;
        let (zb, ph, rec) = st.record(m + 1, &z, &q, iters, history);
        out.rescaled.push(z.clone());
        out.deviation.push(zb);
        out.physical.push(ph);
        out.records.push(rec);
        prev = next;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub coercivity: Option<CoercivityReport>,
    pub lifting: LiftingField,
    pub trajectory: Trajectory,
}

fn shift_for(disc: &Discretization, base: Option<&[f64]>, config: &SolveConfig) -> Result<(f64, Option<CoercivityReport>)> {
    match config.shift_override {
        Some(k) => Ok((k, None)),
        None => {
            let r = compute_shift(&disc.sys, &disc.map, base)?;
            Ok((r.shift_k, Some(r)))
        }
    }
}

/// Standard mode: lifting, shift, and integration from `v₀`.
pub fn run(disc: &Discretization, spec: &ProblemSpec, config: &SolveConfig) -> Result<RunOutput> {
    let lifting = build_lifting(spec, &disc.mesh, &disc.frames, &disc.map, &disc.sys)?;
    let (k, coercivity) = shift_for(disc, None, config)?;
    let v0 = disc.initial_velocity(spec);
    let diff: Vec<f64> = v0.iter().zip(lifting.velocity(0)).map(|(a, b)| a - b).collect();
    let z0 = disc.project(&diff);
    let trajectory = evolve(disc, spec, &lifting, Mode::Standard, k, z0, config)?;
    Ok(RunOutput { coercivity, lifting, trajectory })
}

/// Perturbation mode around the base solution `base`; `spec.data` holds the
/// perturbed data and `spec.data.v0` the initial perturbation `z̄(0)`.
pub fn run_perturbation(disc: &Discretization, base: &LiftingField, spec: &ProblemSpec, config: &SolveConfig) -> Result<RunOutput> {
    let (k, coercivity) = shift_for(disc, Some(base.velocity(0)), config)?;
    let z0 = disc.project(&disc.initial_velocity(spec));
    let trajectory = evolve(disc, spec, base, Mode::Perturbation, k, z0, config)?;
    Ok(RunOutput { coercivity, lifting: base.clone(), trajectory })
}
