//! Field snapshots, norm logs and key-value reports.
//!
//! Snapshot layout:
//!
//! ```text
//! field2d 1
//! velocity <n>       then n lines `x y vx vy`
//! pressure <m>       then m lines `x y p`
//! ```
//!
//! Floats are written in shortest round-trip scientific notation, so a
//! snapshot read back reproduces the coefficients bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use mixflow_core::coercivity::CoercivityReport;
use mixflow_core::compat::CompatibilityReport;
use mixflow_core::evolution::StepRecord;
use mixflow_core::lifting::FluxReport;
use mixflow_core::{DofMap, Field, Variant};

use crate::error::{io_err, CliError, Result};

pub fn format_snapshot(map: &DofMap, field: &Field) -> String {
    let mut s = String::from("field2d 1\n");
    let _ = writeln!(s, "velocity {}", map.n_nodes());
    for (i, p) in map.node_coords.iter().enumerate() {
        let v = field.node_velocity(i);
        let _ = writeln!(s, "{:e} {:e} {:e} {:e}", p[0], p[1], v[0], v[1]);
    }
    let _ = writeln!(s, "pressure {}", map.n_pressure());
    for (p, q) in map.node_coords.iter().zip(&field.pressure) {
        let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], q);
    }
    s
}

/// Rows of a snapshot: `(x, y, vx, vy)` and `(x, y, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub velocity: Vec<[f64; 4]>,
    pub pressure: Vec<[f64; 3]>,
}

pub fn parse_snapshot(text: &str, path: &Path) -> Result<Snapshot> {
    let err = |line: usize, message: String| CliError::Format { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "field2d 1")) => {}
        Some((n, _)) => return Err(err(n, "expected header 'field2d 1'".into())),
        None => return Err(err(1, "empty snapshot".into())),
    }
    fn section<const N: usize>(
        lines: &mut dyn Iterator<Item = (usize, &str)>,
        name: &str,
        err: &dyn Fn(usize, String) -> CliError,
    ) -> Result<Vec<[f64; N]>> {
        let (n, head) = lines.next().ok_or_else(|| err(0, format!("missing '{name}' section")))?;
        let count: usize = head
            .strip_prefix(name)
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| err(n, format!("expected '{name} <count>'")))?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = lines.next().ok_or_else(|| err(0, format!("truncated '{name}' section")))?;
            let vals: Vec<f64> = l.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| err(n, "invalid number".into()))?;
            let row: [f64; N] = vals.try_into().map_err(|_| err(n, format!("expected {N} values")))?;
            out.push(row);
        }
        Ok(out)
    }
    let velocity = section::<4>(&mut lines, "velocity", &err)?;
    let pressure = section::<3>(&mut lines, "pressure", &err)?;
    if let Some((n, _)) = lines.next() {
        return Err(err(n, "trailing content".into()));
    }
    Ok(Snapshot { velocity, pressure })
}

pub const NORMS_HEADER: &str = "t,L2_velocity,H1_velocity,picard_iters,residual";

/// Norm log with a fixed 12-digit scientific format.
pub fn format_norms(records: &[StepRecord]) -> String {
    let mut s = String::from(NORMS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{:.12e},{:.12e},{:.12e},{},{:.12e}", r.t, r.l2_velocity, r.h1_velocity, r.picard_iters, r.residual);
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::ProblemI => "I",
        Variant::ProblemII => "II",
    }
}

pub fn format_coercivity(r: &CoercivityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "variant = {}", variant_name(r.variant));
    let _ = writeln!(s, "korn_beta = {:.12e}", r.korn_beta);
    let _ = writeln!(s, "margin_delta = {:.12e}", r.margin_delta);
    let _ = writeln!(s, "shift_k = {:.12e}", r.shift_k);
    let _ = writeln!(s, "flat_shortcut = {}", r.flat_shortcut);
    let _ = writeln!(s, "korn_iterations = {}", r.korn_eig.iterations);
    let _ = writeln!(s, "korn_residual = {:.3e}", r.korn_eig.residual);
    if let Some(e) = &r.shift_eig {
        let _ = writeln!(s, "shift_eigenvalue = {:.12e}", e.value);
        let _ = writeln!(s, "shift_iterations = {}", e.iterations);
        let _ = writeln!(s, "shift_residual = {:.3e}", e.residual);
    }
    s
}

pub fn format_compat(r: &CompatibilityReport, shift_note: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "variant = {}", variant_name(r.variant));
    let _ = writeln!(s, "functional = {}", r.functional.name());
    let _ = writeln!(s, "levels = {}", r.levels.len());
    for (i, (h, n)) in r.levels.iter().enumerate() {
        let _ = writeln!(s, "level{i}.h = {h:.12e}");
        let _ = writeln!(s, "level{i}.norm = {n:.12e}");
    }
    let _ = writeln!(s, "growth_exponent = {:.6}", r.growth_exponent);
    let _ = writeln!(s, "verdict = {}", r.verdict);
    let _ = writeln!(s, "finest_norm = {:.12e}", r.finest_norm);
    if let Some(k) = shift_note {
        let _ = writeln!(s, "shift_k = {k:.12e}");
    }
    s
}

pub fn format_flux(reports: &[FluxReport]) -> String {
    let mut s = String::from("t,gamma1_flux,inflow,net_flux\n");
    for r in reports {
        let _ = writeln!(s, "{:.12e},{:.15e},{:.15e},{:.15e}", r.t, r.gamma1_flux, r.inflow, r.net_flux);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use mixflow_core::geometry::{build_frames, generate_mesh, SegmentPlan, Shape};
    use mixflow_core::Segment;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let mesh = generate_mesh(Shape::UnitSquare, 2, &SegmentPlan::uniform(Segment::G1)).unwrap();
        let frames = build_frames(&mesh).unwrap();
        let map = DofMap::build(&mesh, &frames, Variant::ProblemI).unwrap();
        let mut field = Field::zeros(&map);
        for (i, v) in field.velocity.iter_mut().enumerate() {
            *v = (i as f64 * 0.1).sin() / 3.0;
        }
        for (i, p) in field.pressure.iter_mut().enumerate() {
            *p = 1.0 / (i as f64 + 7.0);
        }
        let text = format_snapshot(&map, &field);
        let snap = parse_snapshot(&text, Path::new("s")).unwrap();
        assert_eq!(snap.velocity.len(), map.n_nodes());
        assert_eq!(snap.pressure.len(), map.n_pressure());
        for (i, row) in snap.velocity.iter().enumerate() {
            assert_eq!([row[2], row[3]], field.node_velocity(i));
        }
        for (row, p) in snap.pressure.iter().zip(&field.pressure) {
            assert_eq!(row[2], *p);
        }
    }

    #[test]
    fn norms_csv_layout() {
        let r = StepRecord {
            t: 0.5,
            picard_iters: 3,
            residual: 1e-12,
            residual_history: vec![],
            l2_velocity: 1.0,
            h1_velocity: 2.0,
            strain_energy: 0.0,
            skew_defect: 0.0,
        };
        assert_eq!(
            format_norms(&[r]),
            "t,L2_velocity,H1_velocity,picard_iters,residual\n5.000000000000e-1,1.000000000000e0,2.000000000000e0,3,1.000000000000e-12\n"
        );
    }
}
