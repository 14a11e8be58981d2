//! Executes a [`RunConfig`] and renders the CSV outputs.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::config::{Family, RunConfig, Task};
use crate::error::{Error, Result};
use crate::fixtures::{
    gaussian_log_weight, gaussian_test_vectors, multiplication_family, plateau, schrodinger_pair_family, tanh_profile,
    topology_diagnostic, Grid,
};
use crate::flow::{rectangle_defect, spectral_flow, spectral_flow_oracle};
use crate::linalg::{c, CMatrix};
use crate::operator::{eigh, HermitianOperator};
use crate::paths::{
    conjugate, linear_segment, parse_path_file, write_path_file, OperatorPath, OperatorRectangle, UnitaryPath,
};
use crate::projection::projection_index;
use crate::random::{random_projection, random_unitary, seeded};
use crate::scalar::NormalizingFunction;
use crate::winding::{exp_loop, generator_loop, winding_estimates};

/// Everything a run produces, before anything touches the file system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    /// `<prefix>_result.csv`.
    pub result: String,
    /// `<prefix>_eigentraj.csv`, when the family yields a sampled path.
    pub eigentraj: Option<String>,
    /// `<prefix>_eigentraj.path`: the trajectory as a diagonal matrix path
    /// file, written by the eigentraj task.
    pub trajectory_path_file: Option<String>,
}

impl RunOutput {
    pub fn write(&self, prefix: &str) -> Result<Vec<String>> {
        let mut written = Vec::new();
        if let Some(parent) = Path::new(prefix).parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut put = |suffix: &str, body: &str| -> Result<()> {
            let name = format!("{prefix}{suffix}");
            std::fs::write(&name, body)?;
            written.push(name);
            Ok(())
        };
        put("_result.csv", &self.result)?;
        if let Some(e) = &self.eigentraj {
            put("_eigentraj.csv", e)?;
        }
        if let Some(p) = &self.trajectory_path_file {
            put("_eigentraj.path", p)?;
        }
        Ok(written)
    }
}

struct Rows(String);

impl Rows {
    fn new() -> Self {
        Rows("quantity,value\n".to_string())
    }

    fn int(&mut self, name: &str, v: i64) {
        let _ = writeln!(self.0, "{name},{v}");
    }

    fn real(&mut self, name: &str, v: f64) {
        let _ = writeln!(self.0, "{name},{v:.16e}");
    }
}

fn build_path(config: &RunConfig, base_dir: &Path) -> Result<OperatorPath> {
    let grid = || {
        config
            .grid
            .ok_or_else(|| Error::Validation("family needs a [grid] section".into()))
    };
    match &config.family {
        Family::Multiplication => multiplication_family(Arc::new(tanh_profile), grid()?),
        Family::SchrodingerPair => {
            schrodinger_pair_family(Arc::new(gaussian_log_weight), Arc::new(plateau), grid()?)?.path()
        }
        Family::MatrixFile { path } => {
            let full = base_dir.join(path);
            let text = std::fs::read_to_string(&full).map_err(|e| Error::Io(format!("{}: {e}", full.display())))?;
            parse_path_file(&text)?.into_path()
        }
        Family::ProjectionPair { dim, rank_p, rank_q } => {
            let (p, q) = projection_pair(config.seed, *dim, *rank_p, *rank_q);
            linear_segment(&q.involution(), &p.involution())
        }
        Family::GeneratorLoop { dim } => Ok(generator_loop(*dim)?.path),
        Family::LinearSegment { start, end } => linear_segment(
            &HermitianOperator::from_real_diagonal(start)?,
            &HermitianOperator::from_real_diagonal(end)?,
        ),
    }
}

fn projection_pair(
    seed: u64,
    dim: usize,
    rank_p: usize,
    rank_q: usize,
) -> (crate::projection::Projection, crate::projection::Projection) {
    let mut rng = seeded(seed);
    let p = random_projection(&mut rng, dim, rank_p);
    let q = random_projection(&mut rng, dim, rank_q);
    (p, q)
}

/// Uniform parameters over the path interval, endpoints exact.
fn uniform(path: &OperatorPath, samples: usize) -> Vec<f64> {
    let (a, b) = path.interval();
    (0..samples)
        .map(|j| {
            if j == samples - 1 {
                b
            } else {
                a + (b - a) * j as f64 / (samples - 1) as f64
            }
        })
        .collect()
}

fn trajectory(path: &OperatorPath, params: &[f64]) -> Result<(String, Vec<Vec<f64>>)> {
    let dim = path.dim();
    let mut out = String::from("t");
    for k in 1..=dim {
        let _ = write!(out, ",lambda_{k}");
    }
    out.push('\n');
    let mut all = Vec::with_capacity(params.len());
    for &t in params {
        let eig = eigh(&path.sample(t)?)?;
        let _ = write!(out, "{t:.16e}");
        for l in &eig.eigenvalues {
            let _ = write!(out, ",{l:.16e}");
        }
        out.push('\n');
        all.push(eig.eigenvalues);
    }
    Ok((out, all))
}

/// Runs the configured task. Relative file paths in the configuration are
/// resolved against `base_dir`. Progress notes go to `progress`.
pub fn run(config: &RunConfig, base_dir: &Path, progress: &mut dyn FnMut(&str)) -> Result<RunOutput> {
    let mut rows = Rows::new();
    let opts = &config.solver.flow;

    if config.task == Task::Diagnostic {
        diagnostic(config, &mut rows, progress)?;
        return Ok(RunOutput {
            result: rows.0,
            eigentraj: None,
            trajectory_path_file: None,
        });
    }

    progress(&format!("building {} path", config.family.kind().name()));
    let path = build_path(config, base_dir)?;
    rows.int("dim", path.dim() as i64);

    match config.task {
        Task::Flow => {
            progress("computing spectral flow");
            let r = spectral_flow(&path, opts)?;
            rows.int("flow", r.value);
            if let Family::ProjectionPair { dim, rank_p, rank_q } = config.family {
                let (p, q) = projection_pair(config.seed, dim, rank_p, rank_q);
                rows.int("projection_index", projection_index(&p, &q)?);
            }
            if let Some(samples) = config.solver.oracle_samples {
                progress("running crossing oracle");
                rows.int("oracle", spectral_flow_oracle(&path, samples)?);
            }
            rows.int("segments", r.segments.len() as i64);
            rows.int("subdivision_depth", r.subdivision_depth as i64);
            rows.real("guard", r.guard);
            rows.real("min_gap_seen", r.min_gap_seen);
            for (k, t) in r.partition().iter().enumerate() {
                rows.real(&format!("partition_{k}"), *t);
            }
            for (k, s) in r.segments.iter().enumerate() {
                rows.real(&format!("mu_{k}"), s.mu);
                rows.int(&format!("count_start_{k}"), s.counts.0 as i64);
                rows.int(&format!("count_end_{k}"), s.counts.1 as i64);
            }
        }
        Task::Winding => {
            progress("computing spectral flow");
            let flow = spectral_flow(&path, opts)?.value;
            progress("computing winding number");
            let chi = NormalizingFunction::new(config.solver.chi_scale);
            let w = winding_estimates(&exp_loop(&path, chi)?, config.solver.quadrature_points)?;
            rows.int("flow", flow);
            rows.int("winding", w.value);
            rows.real("winding_trace", w.trace);
            rows.real("winding_determinant", w.determinant);
            rows.int("chi_scale", i64::from(config.solver.chi_scale));
        }
        Task::Rectangle => {
            progress("computing rectangle defect");
            let mut rng = seeded(config.seed ^ 0x5eed);
            let (a, b) = path.interval();
            let u: CMatrix = random_unitary(&mut rng, path.dim());
            let q = conjugate(&path, &UnitaryPath::constant(a, b, u)?)?;
            let rect = OperatorRectangle::interpolating(&path, &q)?;
            let edges = rect.boundary_edges()?;
            let f = |p: &OperatorPath| spectral_flow(p, opts).map(|r| r.value);
            rows.int("rectangle_defect", rectangle_defect(&rect, opts)?);
            rows.int("flow_left", f(&edges.left)?);
            rows.int("flow_top", f(&edges.top)?);
            rows.int("flow_right", f(&edges.right)?);
            rows.int("flow_bottom", f(&edges.bottom)?);
        }
        Task::Eigentraj => {}
        Task::Diagnostic => unreachable!("handled above"),
    }

    progress("sampling eigenvalue trajectory");
    let params = uniform(&path, config.solver.trajectory_samples);
    let (csv, values) = trajectory(&path, &params)?;
    let mut path_file = None;
    if config.task == Task::Eigentraj {
        rows.int("samples", params.len() as i64);
        let diagonals: Vec<CMatrix> = values
            .iter()
            .map(|v| crate::linalg::diagonal(&v.iter().map(|&l| c(l)).collect::<Vec<_>>()))
            .collect();
        let (a, b) = path.interval();
        path_file = Some(write_path_file(a, b, &diagonals));
    }
    Ok(RunOutput {
        result: rows.0,
        eigentraj: Some(csv),
        trajectory_path_file: path_file,
    })
}

fn diagnostic(config: &RunConfig, rows: &mut Rows, progress: &mut dyn FnMut(&str)) -> Result<()> {
    let grid: Grid = config
        .grid
        .ok_or_else(|| Error::Validation("diagnostic needs a [grid] section".into()))?;
    let d = &config.diagnostic;
    rows.real("half_width", grid.half_width);
    rows.int("points", grid.points as i64);
    rows.real("t0", d.t0);
    match config.family {
        Family::Multiplication => {
            progress("computing topology moduli");
            let path = multiplication_family(Arc::new(tanh_profile), grid)?;
            let vectors = gaussian_test_vectors(grid, d.test_vectors);
            let report = topology_diagnostic(&path, d.n, d.t0, &d.probes, &vectors)?;
            rows.int("n_used", i64::from(report.n_used));
            rows.real("gap_modulus", report.gap_modulus);
            rows.real("strong_modulus", report.strong_modulus);
            rows.real("phi_modulus", report.phi_modulus);
            for (k, p) in report.probes.iter().enumerate() {
                rows.real(&format!("probe_{k}_t"), p.t);
                rows.real(&format!("probe_{k}_gap"), p.gap);
                rows.real(&format!("probe_{k}_strong"), p.strong);
                rows.real(&format!("probe_{k}_phi"), p.phi);
            }
        }
        Family::SchrodingerPair => {
            progress("computing structured inverse norms");
            let pair = schrodinger_pair_family(Arc::new(gaussian_log_weight), Arc::new(plateau), grid)?;
            let base = pair.inverse_norm(d.t0);
            let mut sup = base;
            rows.real("inverse_norm_t0", base);
            for (k, &t) in d.probes.iter().enumerate() {
                let norm = pair.inverse_norm(t);
                sup = sup.max(norm);
                rows.real(&format!("probe_{k}_t"), t);
                rows.real(&format!("probe_{k}_inverse_norm"), norm);
                rows.real(&format!("probe_{k}_inverse_distance"), pair.inverse_distance(t, d.t0));
            }
            rows.real("sup_inverse_norm", sup);
            let sv = pair.inverse_singular_values(d.t0);
            rows.real("largest_singular_value_t0", sv[0]);
            rows.real("smallest_singular_value_t0", sv[sv.len() - 1]);
        }
        _ => {
            return Err(Error::Validation(format!(
                "diagnostic does not support family {}",
                config.family.kind().name()
            )))
        }
    }
    Ok(())
}

/// Renders an eigenvalue-trajectory CSV as a diagonal matrix path file.
/// Parameters must be uniformly spaced.
pub fn eigentraj_to_path_file(csv: &str) -> Result<String> {
    let mut offset = 0;
    let mut lines = csv.split_inclusive('\n');
    let header = lines.next().ok_or(Error::Ingestion {
        offset: 0,
        message: "empty trajectory file".into(),
    })?;
    let columns = header.trim_end().split(',').count();
    if columns < 2 || !header.starts_with("t,") {
        return Err(Error::Ingestion {
            offset: 0,
            message: "expected header `t,lambda_1,...`".into(),
        });
    }
    offset += header.len();
    let mut params = Vec::new();
    let mut diagonals = Vec::new();
    for line in lines {
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            offset += line.len();
            continue;
        }
        let mut values = Vec::with_capacity(columns);
        let mut field_offset = offset;
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Ingestion {
                offset: field_offset,
                message: format!("invalid number `{field}`"),
            })?;
            values.push(v);
            field_offset += field.len() + 1;
        }
        if values.len() != columns {
            return Err(Error::Ingestion {
                offset,
                message: format!("expected {columns} fields, found {}", values.len()),
            });
        }
        params.push(values[0]);
        diagonals.push(crate::linalg::diagonal(
            &values[1..].iter().map(|&l| c(l)).collect::<Vec<_>>(),
        ));
        offset += line.len();
    }
    if params.len() < 2 {
        return Err(Error::Ingestion {
            offset,
            message: "trajectory needs at least two samples".into(),
        });
    }
    let (a, b) = (params[0], params[params.len() - 1]);
    let step = (b - a) / (params.len() - 1) as f64;
    for (j, &t) in params.iter().enumerate() {
        if (t - (a + step * j as f64)).abs() > 1e-9 * (b - a).abs().max(1.0) {
            return Err(Error::Ingestion {
                offset: 0,
                message: format!("sample {j} at t = {t} breaks uniform spacing"),
            });
        }
    }
    Ok(write_path_file(a, b, &diagonals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    fn run_text(text: &str) -> Result<RunOutput> {
        run(&parse_config(text)?, Path::new("."), &mut |_| {})
    }

    #[test]
    fn generator_loop_winding_rows() {
        let out = run_text("task = winding\nfamily = generator_loop\n[family]\ndim = 4\n").unwrap();
        assert!(out.result.starts_with("quantity,value\n"));
        assert!(out.result.contains("\nflow,1\n"));
        assert!(out.result.contains("\nwinding,1\n"));
        assert!(out
            .eigentraj
            .unwrap()
            .starts_with("t,lambda_1,lambda_2,lambda_3,lambda_4\n"));
    }

    #[test]
    fn constant_family_has_zero_flow() {
        let out = run_text("task = flow\nfamily = linear_segment\n[family]\nstart = 1, -2\nend = 1, -2\n").unwrap();
        assert!(out.result.contains("\nflow,0\n"));
    }

    #[test]
    fn projection_pair_flow_matches_index() {
        let out =
            run_text("task = flow\nfamily = projection_pair\nseed = 3\n[family]\ndim = 6\nrank_p = 4\nrank_q = 1\n")
                .unwrap();
        assert!(out.result.contains("\nflow,3\n"));
        assert!(out.result.contains("\nprojection_index,3\n"));
    }

    #[test]
    fn multiplication_diagnostic_phi_is_zero() {
        let out =
            run_text("task = diagnostic\nfamily = multiplication\n[grid]\nhalf_width = 10\npoints = 160\n").unwrap();
        assert!(out.result.contains("\nphi_modulus,0.0000000000000000e0\n"));
        assert!(out.eigentraj.is_none());
    }

    #[test]
    fn rectangle_defect_row() {
        let out = run_text("task = rectangle\nfamily = generator_loop\nseed = 2\n[family]\ndim = 3\n").unwrap();
        assert!(out.result.contains("\nrectangle_defect,0\n"));
    }

    #[test]
    fn eigentraj_round_trip_in_memory() {
        let out = run_text("task = eigentraj\nfamily = generator_loop\n[family]\ndim = 3\n").unwrap();
        let converted = eigentraj_to_path_file(out.eigentraj.as_ref().unwrap()).unwrap();
        assert_eq!(Some(converted.clone()), out.trajectory_path_file);
        let path = parse_path_file(&converted).unwrap().into_path().unwrap();
        assert_eq!(spectral_flow(&path, &Default::default()).unwrap().value, 1);
    }

    #[test]
    fn converter_reports_offsets() {
        let bad = "t,lambda_1\n0,1\n0.5,x\n";
        match eigentraj_to_path_file(bad) {
            Err(Error::Ingestion { offset, .. }) => assert_eq!(&bad[offset..offset + 1], "x"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(eigentraj_to_path_file("t,lambda_1\n0,1\n0.3,1\n1,1\n").is_err());
    }

    #[test]
    fn missing_matrix_file_is_io_error() {
        let err = run_text("task = flow\nfamily = matrix_file\n[family]\npath = /nonexistent/x.path\n").unwrap_err();
        assert_eq!(err.module(), "cli");
    }
}
