//! On-disk formats.
//!
//! - Operator documents: JSON with `version`, `m`, `n`, `spectrum`,
//!   `right_stages`, `left_stages`, `p1`, `p2`. Uniform spectra carry their
//!   realized values so a reload is bit-exact.
//! - Instance files: the 8-byte magic `L1GENIN1`, a little-endian `u64`
//!   header length, a JSON header, then little-endian `f64` data: `b`
//!   (`m` values), `x*` as `nnz` pairs of (`u64` index, `f64` value), and for
//!   wide instances the extension block in column-major order.
//! - Trace CSV with columns `solver, iter, elapsed_s, objective, nnz_x,
//!   matvecs, extra`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{InstanceError, ProblemInstance, Provenance};
use crate::operator::{
    BlockOperator, DenseMatrix, Operator, OperatorError, OperatorSpec, PairOffset, Permutation, Rotation,
    RotationStage, Spectrum, SpectrumKind,
};
use crate::solution::{ConditioningReport, SolutionError, SparseSolution};
use crate::solvers::{SolverKind, SolverTrace, TraceSample};

pub const FORMAT_VERSION: u32 = 1;
pub const INSTANCE_MAGIC: &[u8; 8] = b"L1GENIN1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("not an instance file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpectrumDoc {
    Explicit {
        values: Vec<f64>,
    },
    Uniform {
        lo: f64,
        hi: f64,
        shift: f64,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
    },
    Alternating {
        n: usize,
        odd: f64,
        even: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StageDoc {
    Uniform { offset: u8, theta: f64 },
    Explicit { rotations: Vec<RotationDoc> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationDoc {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermutationDoc {
    Identity,
    Seed(u64),
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub version: u32,
    pub m: usize,
    pub n: usize,
    pub spectrum: SpectrumDoc,
    pub right_stages: Vec<StageDoc>,
    pub left_stages: Vec<StageDoc>,
    pub p1: PermutationDoc,
    pub p2: PermutationDoc,
}

impl OperatorDoc {
    pub fn from_spec(spec: &OperatorSpec) -> Self {
        let sp = spec.spectrum();
        let spectrum = match sp.kind() {
            SpectrumKind::Explicit => SpectrumDoc::Explicit {
                values: sp.values().to_vec(),
            },
            &SpectrumKind::Uniform { lo, hi, shift, seed } => SpectrumDoc::Uniform {
                lo,
                hi,
                shift,
                seed,
                values: Some(sp.values().to_vec()),
            },
            &SpectrumKind::Alternating { odd, even } => SpectrumDoc::Alternating { n: sp.len(), odd, even },
        };
        OperatorDoc {
            version: FORMAT_VERSION,
            m: spec.m(),
            n: spec.n(),
            spectrum,
            right_stages: spec.right_stages().iter().map(stage_doc).collect(),
            left_stages: spec.left_stages().iter().map(stage_doc).collect(),
            p1: permutation_doc(spec.p1()),
            p2: permutation_doc(spec.p2()),
        }
    }

    pub fn to_spec(&self) -> Result<OperatorSpec, FormatError> {
        if self.version != FORMAT_VERSION {
            return Err(FormatError::Version(self.version));
        }
        let spectrum = match &self.spectrum {
            SpectrumDoc::Explicit { values } => Spectrum::explicit(values.clone())?,
            &SpectrumDoc::Uniform {
                lo,
                hi,
                shift,
                seed,
                ref values,
            } => match values {
                Some(v) => {
                    if v.len() != self.n {
                        return Err(FormatError::Invalid(format!(
                            "spectrum has {} recorded values, expected {}",
                            v.len(),
                            self.n
                        )));
                    }
                    Spectrum::with_recorded_values(SpectrumKind::Uniform { lo, hi, shift, seed }, v.clone())?
                }
                None => Spectrum::uniform(self.n, lo, hi, shift, seed)?,
            },
            &SpectrumDoc::Alternating { n, odd, even } => Spectrum::alternating(n, odd, even)?,
        };
        let right = self
            .right_stages
            .iter()
            .map(|s| stage_from_doc(self.n, s))
            .collect::<Result<Vec<_>, _>>()?;
        let left = self
            .left_stages
            .iter()
            .map(|s| stage_from_doc(self.m, s))
            .collect::<Result<Vec<_>, _>>()?;
        let p1 = permutation_from_doc(self.m, &self.p1)?;
        let p2 = permutation_from_doc(self.m, &self.p2)?;
        Ok(OperatorSpec::new(self.m, right, left, p1, p2, spectrum)?)
    }
}

fn stage_doc(stage: &RotationStage) -> StageDoc {
    match stage.uniform_params() {
        Some((offset, theta)) => StageDoc::Uniform {
            offset: offset.index(),
            theta,
        },
        None => StageDoc::Explicit {
            rotations: stage
                .explicit_rotations()
                .unwrap_or_default()
                .iter()
                .map(|r| RotationDoc {
                    i: r.i,
                    j: r.j,
                    theta: r.theta,
                })
                .collect(),
        },
    }
}

fn stage_from_doc(n: usize, doc: &StageDoc) -> Result<RotationStage, FormatError> {
    match doc {
        &StageDoc::Uniform { offset, theta } => {
            let offset = PairOffset::from_index(offset)
                .ok_or_else(|| FormatError::Invalid(format!("stage offset must be 0 or 1, got {offset}")))?;
            Ok(RotationStage::uniform(n, offset, theta)?)
        }
        StageDoc::Explicit { rotations } => {
            let rots = rotations
                .iter()
                .map(|r| Rotation {
                    i: r.i,
                    j: r.j,
                    theta: r.theta,
                })
                .collect();
            Ok(RotationStage::explicit(n, rots)?)
        }
    }
}

fn permutation_doc(p: &Permutation) -> PermutationDoc {
    if p.is_identity() {
        return PermutationDoc::Identity;
    }
    match (p.seed(), p.mapping()) {
        (Some(seed), _) => PermutationDoc::Seed(seed),
        (None, Some(map)) => PermutationDoc::Explicit(map.to_vec()),
        (None, None) => PermutationDoc::Identity,
    }
}

fn permutation_from_doc(n: usize, doc: &PermutationDoc) -> Result<Permutation, FormatError> {
    let p = match doc {
        PermutationDoc::Identity => Permutation::identity(n),
        &PermutationDoc::Seed(seed) => Permutation::seeded(n, seed),
        PermutationDoc::Explicit(map) => Permutation::from_mapping(map.clone())?,
    };
    if p.n() != n {
        return Err(FormatError::Invalid(format!(
            "permutation has size {}, expected {n}",
            p.n()
        )));
    }
    Ok(p)
}

pub fn write_operator_json<W: Write>(spec: &OperatorSpec, writer: W) -> Result<(), FormatError> {
    serde_json::to_writer_pretty(writer, &OperatorDoc::from_spec(spec))?;
    Ok(())
}

pub fn read_operator_json<R: Read>(reader: R) -> Result<OperatorSpec, FormatError> {
    let doc: OperatorDoc = serde_json::from_reader(reader)?;
    doc.to_spec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningDoc {
    pub kappa_ata: f64,
    pub rho: f64,
    /// `null` stands for `+inf`.
    pub kappa_rho: Option<f64>,
}

impl From<ConditioningReport> for ConditioningDoc {
    fn from(c: ConditioningReport) -> Self {
        ConditioningDoc {
            kappa_ata: c.kappa_ata,
            rho: c.rho,
            kappa_rho: c.kappa_rho.is_finite().then_some(c.kappa_rho),
        }
    }
}

impl From<ConditioningDoc> for ConditioningReport {
    fn from(c: ConditioningDoc) -> Self {
        ConditioningReport {
            kappa_ata: c.kappa_ata,
            rho: c.rho,
            kappa_rho: c.kappa_rho.unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum OperatorSection {
    Factored { spec: OperatorDoc },
    Block { basis: OperatorDoc, extension_cols: usize },
}

/// JSON header of an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceHeader {
    pub version: u32,
    pub m: usize,
    pub n: usize,
    pub tau: f64,
    pub noise_norm: f64,
    pub generator: String,
    pub seeds: BTreeMap<String, u64>,
    pub conditioning: Option<ConditioningDoc>,
    pub x_nnz: usize,
    pub operator: OperatorSection,
}

impl InstanceHeader {
    pub fn of(inst: &ProblemInstance) -> Self {
        let operator = match &inst.op {
            Operator::Factored(spec) => OperatorSection::Factored {
                spec: OperatorDoc::from_spec(spec),
            },
            Operator::Block(block) => OperatorSection::Block {
                basis: OperatorDoc::from_spec(block.basis()),
                extension_cols: block.extension().cols(),
            },
        };
        InstanceHeader {
            version: FORMAT_VERSION,
            m: inst.m(),
            n: inst.n(),
            tau: inst.tau,
            noise_norm: inst.noise_norm,
            generator: inst.provenance.generator.clone(),
            seeds: inst.provenance.seeds.clone(),
            conditioning: inst.provenance.conditioning.map(Into::into),
            x_nnz: inst.x_star.nnz(),
            operator,
        }
    }
}

pub fn write_instance_to<W: Write>(inst: &ProblemInstance, mut w: W) -> Result<(), FormatError> {
    let header = serde_json::to_vec(&InstanceHeader::of(inst))?;
    w.write_all(INSTANCE_MAGIC)?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    for v in &inst.b {
        w.write_all(&v.to_le_bytes())?;
    }
    for (i, v) in inst.x_star.iter() {
        w.write_all(&(i as u64).to_le_bytes())?;
        w.write_all(&v.to_le_bytes())?;
    }
    if let Operator::Block(block) = &inst.op {
        for v in block.extension().as_col_major() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_f64s<R: Read>(r: &mut R, len: usize) -> io::Result<Vec<f64>> {
    (0..len).map(|_| read_f64(r)).collect()
}

/// Reads just the JSON header.
pub fn read_header_from<R: Read>(r: &mut R) -> Result<InstanceHeader, FormatError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != INSTANCE_MAGIC {
        return Err(FormatError::BadMagic);
    }
    let len = read_u64(r)?;
    let len = usize::try_from(len).map_err(|_| FormatError::Invalid("header length overflows".into()))?;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    let header: InstanceHeader = serde_json::from_slice(&buf)?;
    if header.version != FORMAT_VERSION {
        return Err(FormatError::Version(header.version));
    }
    Ok(header)
}

pub fn read_instance_from<R: Read>(mut r: R) -> Result<ProblemInstance, FormatError> {
    let header = read_header_from(&mut r)?;
    let b = read_f64s(&mut r, header.m)?;
    let mut pairs = Vec::with_capacity(header.x_nnz);
    for _ in 0..header.x_nnz {
        let i = read_u64(&mut r)? as usize;
        pairs.push((i, read_f64(&mut r)?));
    }
    let x_star = SparseSolution::from_pairs(header.n, pairs)?;
    let op: Operator = match &header.operator {
        OperatorSection::Factored { spec } => spec.to_spec()?.into(),
        OperatorSection::Block { basis, extension_cols } => {
            let basis = basis.to_spec()?;
            let data = read_f64s(&mut r, basis.m() * extension_cols)?;
            let ext = DenseMatrix::from_col_major(basis.m(), *extension_cols, data);
            BlockOperator::new(basis, ext)?.into()
        }
    };
    if op.nrows() != header.m || op.ncols() != header.n {
        return Err(FormatError::Invalid(format!(
            "header says {}x{}, operator section gives {}x{}",
            header.m,
            header.n,
            op.nrows(),
            op.ncols()
        )));
    }
    let mut inst = ProblemInstance::new(header.tau, op, b, x_star)?;
    inst.noise_norm = header.noise_norm;
    inst.provenance = Provenance {
        generator: header.generator,
        seeds: header.seeds,
        conditioning: header.conditioning.map(Into::into),
    };
    Ok(inst)
}

pub fn write_instance(inst: &ProblemInstance, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_instance_to(inst, BufWriter::new(File::create(path)?))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ProblemInstance, FormatError> {
    read_instance_from(BufReader::new(File::open(path)?))
}

pub fn read_instance_header(path: impl AsRef<Path>) -> Result<InstanceHeader, FormatError> {
    read_header_from(&mut BufReader::new(File::open(path)?))
}

/// One line of a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub solver: String,
    pub iter: usize,
    pub elapsed_s: f64,
    pub objective: f64,
    pub nnz_x: usize,
    pub matvecs: f64,
    pub extra: usize,
}

pub fn write_trace_csv<W: Write>(trace: &SolverTrace, writer: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(writer);
    for s in &trace.samples {
        w.serialize(TraceRow {
            solver: trace.solver.name().to_string(),
            iter: s.iter,
            elapsed_s: s.elapsed_s,
            objective: s.objective,
            nnz_x: s.nnz_x,
            matvecs: s.matvecs,
            extra: s.extra,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Samples of a trace CSV, with the solver named on its rows.
pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<(SolverKind, TraceSample)>, FormatError> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize::<TraceRow>()
        .map(|row| {
            let row = row?;
            let solver = row
                .solver
                .parse()
                .map_err(|_| FormatError::Invalid(format!("unknown solver '{}'", row.solver)))?;
            Ok((
                solver,
                TraceSample {
                    iter: row.iter,
                    elapsed_s: row.elapsed_s,
                    objective: row.objective,
                    nnz_x: row.nnz_x,
                    matvecs: row.matvecs,
                    extra: row.extra,
                },
            ))
        })
        .collect()
}
