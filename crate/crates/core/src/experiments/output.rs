use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certification::{Certificate, RateFit};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::{BlockProblem, PrimalDualPoint, ProblemDocument};
use crate::solvers::{ProximalPolicy, Status, Trace};

use super::generate::{LcqpInstance, ResourceAllocInstance};
use super::sweep::{SweepConfig, SweepTable};
use super::{ExperimentError, Result};

pub const TRACE_HEADER: &str = "k,dis,phi,primal_residual,elapsed_seconds";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Round-trip formatting (17 significant digits).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(w: W, trace: &Trace) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.k,
            format_opt(r.dis),
            format_opt(r.phi),
            format_f64(r.primal_residual_norm),
            format_f64(r.elapsed.as_secs_f64())
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &Trace) -> Result<()> {
    write_trace_csv(fs::File::create(path)?, trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub dis: Option<f64>,
    pub phi: Option<f64>,
    pub primal_residual: f64,
    pub elapsed_seconds: f64,
}

pub fn read_trace_csv<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| ExperimentError::Parse("empty trace file".into()))??;
    if header.trim_end() != TRACE_HEADER {
        return Err(ExperimentError::Parse(format!("unexpected trace header {header:?}")));
    }
    let opt = |s: &str, line: usize| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| ExperimentError::Parse(format!("line {line}: bad number {s:?}")))
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 2;
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 5 {
            return Err(ExperimentError::Parse(format!(
                "line {n}: expected 5 fields, got {}",
                f.len()
            )));
        }
        rows.push(TraceRow {
            k: f[0]
                .parse()
                .map_err(|_| ExperimentError::Parse(format!("line {n}: bad index {:?}", f[0])))?,
            dis: opt(f[1], n)?,
            phi: opt(f[2], n)?,
            primal_residual: opt(f[3], n)?
                .ok_or_else(|| ExperimentError::Parse(format!("line {n}: missing residual")))?,
            elapsed_seconds: opt(f[4], n)?.unwrap_or(0.0),
        });
    }
    Ok(rows)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRow>> {
    read_trace_csv(fs::File::open(path)?)
}

/// Instance JSON: the problem document plus the known optimum and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(flatten)]
    pub problem: ProblemDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xstar: Option<Vec<DenseVector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdastar: Option<DenseVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proximal: Option<Vec<DenseMatrix>>,
}

impl InstanceFile {
    pub fn from_problem(p: &BlockProblem) -> Result<Self> {
        Ok(Self {
            problem: ProblemDocument::from_problem(p)?,
            kind: None,
            seed: None,
            xstar: None,
            lambdastar: None,
            proximal: None,
        })
    }

    pub fn from_lcqp(inst: &LcqpInstance) -> Result<Self> {
        Ok(Self {
            kind: Some("lcqp".into()),
            seed: Some(inst.seed),
            xstar: Some(inst.xstar.clone()),
            lambdastar: Some(inst.lambdastar.clone()),
            proximal: Some(inst.proximal.clone()),
            ..Self::from_problem(&inst.problem)?
        })
    }

    pub fn from_resource_alloc(inst: &ResourceAllocInstance) -> Result<Self> {
        Ok(Self {
            kind: Some("ra".into()),
            seed: Some(inst.seed),
            ..Self::from_problem(&inst.problem)?
        })
    }

    pub fn to_problem(&self) -> Result<BlockProblem> {
        Ok(self.problem.to_problem()?)
    }

    /// The stored optimum, if present.
    pub fn optimum(&self) -> Option<PrimalDualPoint> {
        match (&self.xstar, &self.lambdastar) {
            (Some(x), Some(l)) => Some(PrimalDualPoint::new(x.clone(), l.clone())),
            _ => None,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| ExperimentError::Parse(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub rho: f64,
    pub gamma: f64,
    pub seed: u64,
    /// Trace CSV relative to the manifest, when a trace was produced.
    pub trace_file: Option<String>,
    pub status: Option<Status>,
    pub iterations: Option<usize>,
    pub final_dis: Option<f64>,
    pub policy: Option<ProximalPolicy>,
    pub tau_fallback: bool,
    pub certified: bool,
    pub certificate: Option<Certificate>,
    pub certificate_error: Option<String>,
    pub dis_rate: Option<RateFit>,
    pub phi_rate: Option<RateFit>,
    pub contraction_violations: Option<usize>,
    pub max_phi_ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SweepConfig,
    pub cells: Vec<ManifestCell>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::Parse(format!("{}: {e}", path.display())))
    }
}

/// Writes one trace CSV per cell plus `manifest.json` into `dir`.
pub fn write_sweep(dir: &Path, config: &SweepConfig, table: &SweepTable) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut cells = Vec::with_capacity(table.cells.len());
    for cell in &table.cells {
        let trace_file = match &cell.trace {
            Some(trace) => {
                let name = format!("{}.csv", cell.stem());
                write_trace_file(&dir.join(&name), trace)?;
                Some(name)
            }
            None => None,
        };
        cells.push(ManifestCell {
            rho: cell.rho,
            gamma: cell.gamma,
            seed: cell.seed,
            trace_file,
            status: cell.trace.as_ref().map(|t| t.status),
            iterations: cell.trace.as_ref().map(Trace::iterations),
            final_dis: cell.trace.as_ref().and_then(Trace::final_dis),
            policy: cell.policy.clone(),
            tau_fallback: cell.tau_fallback,
            certified: cell.certified(),
            certificate: cell.certificate.clone(),
            certificate_error: cell.certificate_error.clone(),
            dis_rate: cell.dis_fit,
            phi_rate: cell.phi_fit,
            contraction_violations: cell.contraction.as_ref().map(|c| c.violations.len()),
            max_phi_ratio: cell.contraction.as_ref().and_then(|c| c.max_ratio()),
            error: cell.error.clone(),
        });
    }
    let manifest = Manifest {
        config: config.clone(),
        cells,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
