//! File output: VTK legacy ASCII, MatrixMarket, binary vector snapshots,
//! CSV tables and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::SparseMatrix;

/// Magic header of the snapshot format.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"STOCPSNP";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Writes the mesh and vertex fields as an unstructured grid (time is the last coordinate).
pub fn write_vtk(path: &Path, mesh: &Mesh, fields: &[(&str, &[f64])]) -> Result<()> {
    let nv = mesh.num_vertices();
    for (name, vals) in fields {
        if vals.len() != nv {
            return Err(Error::DimensionMismatch(format!("field '{name}' has {} values for {nv} vertices", vals.len())));
        }
        if name.contains(char::is_whitespace) {
            return Err(Error::invalid(format!("field name '{name}' contains whitespace")));
        }
    }
    let n = mesh.st_dim();
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0\nstocp space-time mesh d={}\nASCII\nDATASET UNSTRUCTURED_GRID", mesh.dim())?;
    writeln!(out, "POINTS {nv} double")?;
    for v in mesh.vertices() {
        let c = v.coords;
        if n == 2 {
            writeln!(out, "{} {} 0", c[0], c[1])?;
        } else {
            writeln!(out, "{} {} {}", c[0], c[1], c[2])?;
        }
    }
    let ne = mesh.num_elements();
    writeln!(out, "CELLS {ne} {}", ne * (n + 2))?;
    for e in 0..ne {
        let ids = mesh.element_vertices(e);
        let mut line = format!("{}", n + 1);
        for id in ids {
            write!(line, " {id}").unwrap();
        }
        writeln!(out, "{line}")?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    let cell_type = if n == 2 { 5 } else { 10 };
    for _ in 0..ne {
        writeln!(out, "{cell_type}")?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {nv}")?;
        for (name, vals) in fields {
            writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
            for v in *vals {
                writeln!(out, "{v:e}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// MatrixMarket coordinate real general, one-based indices.
pub fn write_matrix_market(path: &Path, a: &SparseMatrix) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (j, v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {v:e}", i + 1, j + 1)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Format("empty MatrixMarket file".into()))?;
    if !header.starts_with("%%MatrixMarket matrix coordinate real general") {
        return Err(Error::Format(format!("unsupported MatrixMarket header '{header}'")));
    }
    let mut lines = lines.filter(|l| !l.starts_with('%'));
    let size: Vec<usize> = lines
        .next()
        .ok_or_else(|| Error::Format("missing size line".into()))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Format(format!("bad size entry '{s}'"))))
        .collect::<Result<_>>()?;
    if size.len() != 3 {
        return Err(Error::Format("size line needs three entries".into()));
    }
    let mut trip = Vec::with_capacity(size[2]);
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Format(format!("bad entry line '{line}'")));
        }
        let bad = |_| Error::Format(format!("bad entry line '{line}'"));
        let i: usize = parts[0].parse().map_err(bad)?;
        let j: usize = parts[1].parse().map_err(bad)?;
        let v: f64 = parts[2].parse().map_err(|_| Error::Format(format!("bad value in '{line}'")))?;
        if i == 0 || j == 0 {
            return Err(Error::Format("MatrixMarket indices are one-based".into()));
        }
        trip.push((i - 1, j - 1, v));
    }
    if trip.len() != size[2] {
        return Err(Error::Format(format!("expected {} entries, found {}", size[2], trip.len())));
    }
    SparseMatrix::from_triplets(size[0], size[1], &trip)
}

/// Binary snapshot: magic, version `u32`, length `u64`, then little-endian `f64` values.
pub fn write_snapshot(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 20 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(Error::Format("not a stocp snapshot".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let n = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let body = &bytes[20..];
    if body.len() != n * 8 {
        return Err(Error::Format(format!("snapshot declares {n} values but holds {} bytes", body.len())));
    }
    Ok(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Plain CSV table: header row, then one line per record.
#[derive(Clone, Debug, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        CsvTable { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::DimensionMismatch(format!("row has {} fields, header {}", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let line = |cells: &[String]| cells.iter().map(|c| escape(c)).collect::<Vec<_>>().join(",");
        s.push_str(&line(&self.header));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&line(r));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

fn escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Formats a float in shortest round-trip scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one run: configuration, its hash, seeds, mesh checksums and outputs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub mesh_checksums: Vec<String>,
    pub files: Vec<ManifestFile>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        let config_hash = sha256_hex(config.to_string().as_bytes());
        Manifest {
            tool: "stocp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            config_hash,
            seeds: Vec::new(),
            mesh_checksums: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Records a written file by its name relative to the manifest directory.
    pub fn add_file(&mut self, path: &Path) -> Result<()> {
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        self.files.push(ManifestFile { path: name, sha256: file_sha256(path)? });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Files whose current checksum differs from the recorded one.
    pub fn verify(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut bad = Vec::new();
        for f in &self.files {
            let p = dir.join(&f.path);
            if !p.exists() || file_sha256(&p)? != f.sha256 {
                bad.push(p);
            }
        }
        Ok(bad)
    }
}
