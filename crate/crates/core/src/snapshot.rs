//! Field snapshot files: a single-line JSON header followed by raw
//! little-endian 64-bit float collocation values in the declared layout
//! (x fastest, then y, then z), one array per field in header order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::FlowState;
use crate::spectral::{DomainSpec, Grid, Parity, ScalarField, VectorField};

pub const FORMAT_NAME: &str = "vvlab-snapshot";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("header parse error: {0}")]
    Header(#[from] serde_json::Error),
    #[error("not a {FORMAT_NAME} file (format = {0})")]
    WrongFormat(String),
    #[error("unsupported snapshot version {0}")]
    WrongVersion(u32),
    #[error("payload truncated: expected {expected} values, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("snapshot kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: &'static str, found: String },
    #[error("snapshots live on different domains")]
    DomainMismatch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FieldMeta {
    name: String,
    parity: Parity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    kind: String,
    time: f64,
    domain: DomainSpec,
    endianness: String,
    layout: String,
    fields: Vec<FieldMeta>,
}

impl Header {
    fn new(kind: &str, time: f64, domain: DomainSpec, fields: Vec<FieldMeta>) -> Self {
        Header {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            kind: kind.to_string(),
            time,
            domain,
            endianness: "little".to_string(),
            layout: "x_fastest".to_string(),
            fields,
        }
    }
}

fn write_payload<W: Write>(w: &mut W, field: &ScalarField) -> Result<(), SnapshotError> {
    let values = field.to_values();
    // (nz, ny, nx) row-major iteration emits x fastest.
    for v in values.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_payload<R: Read>(
    r: &mut R,
    grid: &std::sync::Arc<Grid>,
    parity: Parity,
) -> Result<ScalarField, SnapshotError> {
    let n = grid.domain.len();
    let mut bytes = vec![0u8; n * 8];
    let mut filled = 0;
    while filled < bytes.len() {
        let got = r.read(&mut bytes[filled..])?;
        if got == 0 {
            return Err(SnapshotError::Truncated { expected: n, found: filled / 8 });
        }
        filled += got;
    }
    let (nz, ny, nx) = grid.shape();
    let mut values = ndarray::Array3::<f64>::zeros((nz, ny, nx));
    for (slot, chunk) in values.iter_mut().zip(bytes.chunks_exact(8)) {
        *slot = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok(ScalarField::from_values(grid, parity, values.view()).expect("shape matches grid"))
}

fn write_header<W: Write>(w: &mut W, header: &Header) -> Result<(), SnapshotError> {
    let line = serde_json::to_string(header)?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> Result<Header, SnapshotError> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let got = r.read(&mut byte)?;
        if got == 0 || byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
    }
    let header: Header = serde_json::from_slice(&line)?;
    if header.format != FORMAT_NAME {
        return Err(SnapshotError::WrongFormat(header.format));
    }
    if header.version != FORMAT_VERSION {
        return Err(SnapshotError::WrongVersion(header.version));
    }
    Ok(header)
}

/// Write a bundled FlowState snapshot (rho, u1, u2, u3).
pub fn write_flow_state(path: &Path, state: &FlowState) -> Result<(), SnapshotError> {
    let mut w = BufWriter::new(File::create(path)?);
    let fields = vec![
        FieldMeta { name: "rho".into(), parity: state.rho.parity() },
        FieldMeta { name: "u1".into(), parity: state.u.u1.parity() },
        FieldMeta { name: "u2".into(), parity: state.u.u2.parity() },
        FieldMeta { name: "u3".into(), parity: state.u.u3.parity() },
    ];
    let header =
        Header::new("flow_state", state.t, state.rho.grid().domain.clone(), fields);
    write_header(&mut w, &header)?;
    write_payload(&mut w, &state.rho)?;
    write_payload(&mut w, &state.u.u1)?;
    write_payload(&mut w, &state.u.u2)?;
    write_payload(&mut w, &state.u.u3)?;
    w.flush()?;
    Ok(())
}

/// Write a single ScalarField snapshot.
pub fn write_scalar(
    path: &Path,
    field: &ScalarField,
    name: &str,
    time: f64,
) -> Result<(), SnapshotError> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = Header::new(
        "scalar_field",
        time,
        field.grid().domain.clone(),
        vec![FieldMeta { name: name.into(), parity: field.parity() }],
    );
    write_header(&mut w, &header)?;
    write_payload(&mut w, field)?;
    w.flush()?;
    Ok(())
}

/// Any snapshot file content. One short-lived value per file read; the
/// variant size spread is harmless here.
#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Snapshot {
    FlowState(FlowState),
    Scalar { name: String, time: f64, field: ScalarField },
}

impl Snapshot {
    pub fn domain(&self) -> &DomainSpec {
        match self {
            Snapshot::FlowState(s) => &s.rho.grid().domain,
            Snapshot::Scalar { field, .. } => &field.grid().domain,
        }
    }
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    let grid = Grid::new(header.domain.clone());
    match header.kind.as_str() {
        "flow_state" => {
            let mut fields = Vec::with_capacity(header.fields.len());
            for meta in &header.fields {
                fields.push(read_payload(&mut r, &grid, meta.parity)?);
            }
            if fields.len() != 4 {
                return Err(SnapshotError::KindMismatch {
                    expected: "flow_state with 4 fields",
                    found: format!("{} fields", fields.len()),
                });
            }
            let u3 = fields.pop().unwrap();
            let u2 = fields.pop().unwrap();
            let u1 = fields.pop().unwrap();
            let rho = fields.pop().unwrap();
            let u = VectorField::from_parts_unchecked(u1, u2, u3);
            Ok(Snapshot::FlowState(FlowState::new(header.time, rho, u)))
        }
        "scalar_field" => {
            let meta = header.fields.first().ok_or(SnapshotError::KindMismatch {
                expected: "scalar_field with 1 field",
                found: "0 fields".into(),
            })?;
            let field = read_payload(&mut r, &grid, meta.parity)?;
            Ok(Snapshot::Scalar { name: meta.name.clone(), time: header.time, field })
        }
        other => Err(SnapshotError::KindMismatch { expected: "flow_state or scalar_field", found: other.into() }),
    }
}

/// H^s distance between two snapshot files of the same kind and domain.
pub fn snapshot_distance(a: &Snapshot, b: &Snapshot, order: u32) -> Result<f64, SnapshotError> {
    use crate::diagnostics::{sobolev_norm_sq, NormSpec};
    if a.domain() != b.domain() {
        return Err(SnapshotError::DomainMismatch);
    }
    let spec = NormSpec::full(order);
    match (a, b) {
        (Snapshot::FlowState(sa), Snapshot::FlowState(sb)) => {
            let mut total = sobolev_norm_sq(&sa.rho.sub(&sb.rho), spec)
                .map_err(|e| SnapshotError::KindMismatch { expected: "order <= 3", found: e.to_string() })?;
            for (ca, cb) in sa.u.components().iter().zip(sb.u.components()) {
                total += sobolev_norm_sq(&ca.sub(cb), spec)
                    .map_err(|e| SnapshotError::KindMismatch { expected: "order <= 3", found: e.to_string() })?;
            }
            Ok(total.sqrt())
        }
        (
            Snapshot::Scalar { field: fa, .. },
            Snapshot::Scalar { field: fb, .. },
        ) => {
            let d = fa.sub(fb);
            Ok(sobolev_norm_sq(&d, spec)
                .map_err(|e| SnapshotError::KindMismatch { expected: "order <= 3", found: e.to_string() })?
                .sqrt())
        }
        _ => Err(SnapshotError::KindMismatch {
            expected: "two snapshots of the same kind",
            found: "mixed kinds".into(),
        }),
    }
}
