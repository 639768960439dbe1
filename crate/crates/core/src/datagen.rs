//! Synthetic inputs and file formats.
//!
//! All generators draw from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`).
//! Uniform scores are `(next_u32 >> 8) / 2^24`, so every generated uniform
//! entry is exactly representable as an `f32` and survives a round trip
//! through the binary matrix format unchanged.
//!
//! Binary matrix layout (`OTLM`, all little-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `b"OTLM"`                |
//! | 4      | 4    | version, `u32` = 1             |
//! | 8      | 8    | n, `u64`                       |
//! | 16     | 4    | k, `u32`                       |
//! | 20     | 4nk  | row-major `f32` payload        |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::balancer::{BalanceTrace, TraceEntry};
use crate::error::{Error, Result};
use crate::eval::FeatureMatrix;
use crate::matrix::{LabelVector, ScoreMatrix};
use crate::sinkhorn::ComparisonRecord;

pub const MAGIC: [u8; 4] = *b"OTLM";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 20;

const UNIT_24: f64 = 1.0 / (1u32 << 24) as f64;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if n == 0 || k < 2 {
        return Err(Error::invalid(format!(
            "generated matrices need n >= 1 and k >= 2, got n={n} k={k}"
        )));
    }
    Ok(())
}

fn fill_uniform(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| (rng.next_u32() >> 8) as f64 * UNIT_24)
        .collect()
}

/// i.i.d. uniform `[0, 1)` scores.
pub fn gen_uniform(n: usize, k: usize, seed: u64) -> Result<ScoreMatrix> {
    check_shape(n, k)?;
    let values = fill_uniform(&mut rng(seed), n * k);
    ScoreMatrix::new(n, k, values)
}

/// Uniform scores with `bias` added to one randomly chosen column, mimicking
/// an untrained network that sends most samples to the same cluster.
pub fn gen_skewed(n: usize, k: usize, seed: u64, bias: f64) -> Result<ScoreMatrix> {
    check_shape(n, k)?;
    if !bias.is_finite() || bias < 0.0 {
        return Err(Error::invalid(format!(
            "bias must be a finite value >= 0, got {bias}"
        )));
    }
    let mut rng = rng(seed);
    let mut values = fill_uniform(&mut rng, n * k);
    let hot = rng.random_range(0..k);
    for row in values.chunks_exact_mut(k) {
        row[hot] += bias;
    }
    ScoreMatrix::new(n, k, values)
}

/// Gaussian blobs with their generating centers.
#[derive(Clone, Debug, PartialEq)]
pub struct Blobs {
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub centers: FeatureMatrix,
}

/// Centers on the unit sphere, drawn from ChaCha8 stream 0 of `seed`.
pub fn blob_centers(dim: usize, n_centers: usize, seed: u64) -> Result<FeatureMatrix> {
    if dim == 0 || n_centers < 2 {
        return Err(Error::invalid(format!(
            "blobs need dim >= 1 and at least two centers, got dim={dim} centers={n_centers}"
        )));
    }
    let mut rng = rng(seed);
    rng.set_stream(0);
    let mut values = Vec::with_capacity(dim * n_centers);
    while values.len() < dim * n_centers {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.extend(v.iter().map(|x| x / norm));
        }
    }
    FeatureMatrix::new(n_centers, dim, values)
}

/// Smallest Euclidean distance between two distinct centers.
pub fn min_center_distance(centers: &FeatureMatrix) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..centers.n_rows() {
        for j in i + 1..centers.n_rows() {
            let d = centers
                .row(i)
                .iter()
                .zip(centers.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            best = best.min(d);
        }
    }
    best
}

/// `n` points, sample `i` belonging to class `i mod n_centers`, each drawn
/// isotropically around its center with standard deviation `spread`
/// (ChaCha8 stream 1).
pub fn gen_blobs(n: usize, dim: usize, n_centers: usize, spread: f64, seed: u64) -> Result<Blobs> {
    if !spread.is_finite() || spread < 0.0 {
        return Err(Error::invalid(format!(
            "spread must be finite and >= 0, got {spread}"
        )));
    }
    let centers = blob_centers(dim, n_centers, seed)?;
    let mut rng = rng(seed);
    rng.set_stream(1);
    let labels: Vec<usize> = (0..n).map(|i| i % n_centers).collect();
    let mut values = Vec::with_capacity(n * dim);
    for &c in &labels {
        for &x in centers.row(c) {
            let z: f64 = rng.sample(StandardNormal);
            values.push(x + spread * z);
        }
    }
    Ok(Blobs {
        features: FeatureMatrix::new(n, dim, values)?,
        labels,
        centers,
    })
}

pub fn write_matrix<W: Write>(mut w: W, matrix: &ScoreMatrix) -> std::io::Result<()> {
    let k = u32::try_from(matrix.n_clusters())
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "k exceeds u32"))?;
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(matrix.n_samples() as u64).to_le_bytes())?;
    w.write_all(&k.to_le_bytes())?;
    for (i, &v) in matrix.values().iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("entry {i} ({v}) does not fit in an f32"),
            ));
        }
        w.write_all(&f.to_le_bytes())?;
    }
    w.flush()
}

/// Writes `matrix` as `f32`. Entries are rounded to single precision.
pub fn save_matrix(path: impl AsRef<Path>, matrix: &ScoreMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix(BufWriter::new(file), matrix).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<ScoreMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&bytes).map_err(|(offset, reason)| Error::Format {
        path: path.to_path_buf(),
        offset,
        reason,
    })
}

/// Parses an `OTLM` buffer; errors carry the byte offset of the problem.
pub fn parse_matrix(bytes: &[u8]) -> std::result::Result<ScoreMatrix, (u64, String)> {
    let len = bytes.len() as u64;
    if len < HEADER_LEN {
        return Err((
            len,
            format!("truncated header: {len} of {HEADER_LEN} bytes"),
        ));
    }
    if bytes[0..4] != MAGIC {
        return Err((
            0,
            format!(
                "bad magic {:?}, expected \"OTLM\"",
                String::from_utf8_lossy(&bytes[0..4])
            ),
        ));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err((4, format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let k = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as u64;
    if n == 0 {
        return Err((8, "n must be at least 1".into()));
    }
    if k < 2 {
        return Err((16, format!("k must be at least 2, got {k}")));
    }
    let expected = n
        .checked_mul(k)
        .and_then(|c| c.checked_mul(4))
        .and_then(|p| p.checked_add(HEADER_LEN))
        .ok_or((8, "dimensions overflow".to_string()))?;
    if len < expected {
        return Err((
            len,
            format!("truncated payload: expected {expected} bytes, file ends at {len}"),
        ));
    }
    if len > expected {
        return Err((
            expected,
            format!("{} trailing bytes after payload", len - expected),
        ));
    }
    let mut values = Vec::with_capacity((n * k) as usize);
    for (i, chunk) in bytes[HEADER_LEN as usize..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            let offset = HEADER_LEN + 4 * i as u64;
            return Err((
                offset,
                format!(
                    "non-finite value {v} at row {}, column {}",
                    i as u64 / k,
                    i as u64 % k
                ),
            ));
        }
        values.push(v as f64);
    }
    ScoreMatrix::new(n as usize, k as usize, values).map_err(|e| (HEADER_LEN, e.to_string()))
}

/// Decimal text with 9 significant digits, trailing zeros trimmed.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Header `c0,...,c{k-1}`, one line per sample.
pub fn export_matrix_csv(path: impl AsRef<Path>, matrix: &ScoreMatrix) -> Result<()> {
    let header: Vec<String> = (0..matrix.n_clusters()).map(|i| format!("c{i}")).collect();
    write_rows(
        path.as_ref(),
        &header,
        matrix
            .rows()
            .map(|r| r.iter().map(|&v| format_sig9(v)).collect::<Vec<_>>()),
    )
}

/// Header `sample,label`.
pub fn export_labels_csv(path: impl AsRef<Path>, labels: &LabelVector) -> Result<()> {
    write_rows(
        path.as_ref(),
        &["sample".into(), "label".into()],
        labels
            .as_slice()
            .iter()
            .enumerate()
            .map(|(s, l)| [s.to_string(), l.to_string()]),
    )
}

/// Header `iteration,alpha,std,accepted`.
pub fn export_trace_csv(path: impl AsRef<Path>, trace: &BalanceTrace) -> Result<()> {
    write_rows(
        path.as_ref(),
        &["iteration", "alpha", "std", "accepted"].map(String::from),
        trace.entries().iter().map(|e: &TraceEntry| {
            [
                e.iteration.to_string(),
                format_sig9(e.alpha),
                format_sig9(e.std),
                e.accepted.to_string(),
            ]
        }),
    )
}

/// Header `n,k,std_otl,std_sk,iters_otl,iters_sk,wall_ms_otl,wall_ms_sk`.
pub fn export_comparison_csv(path: impl AsRef<Path>, records: &[ComparisonRecord]) -> Result<()> {
    write_rows(
        path.as_ref(),
        &[
            "n",
            "k",
            "std_otl",
            "std_sk",
            "iters_otl",
            "iters_sk",
            "wall_ms_otl",
            "wall_ms_sk",
        ]
        .map(String::from),
        records.iter().map(|r| {
            [
                r.n.to_string(),
                r.k.to_string(),
                format_sig9(r.std_otl),
                format_sig9(r.std_sk),
                r.iters_otl.to_string(),
                r.iters_sk.to_string(),
                format_sig9(r.wall_ms_otl),
                format_sig9(r.wall_ms_sk),
            ]
        }),
    )
}

fn csv_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    r.records()
        .collect::<std::result::Result<_, _>>()
        .map_err(wrap)
}

pub fn import_matrix_csv(path: impl AsRef<Path>) -> Result<ScoreMatrix> {
    let path = path.as_ref();
    let records = csv_records(path)?;
    let k = records.first().map(|r| r.len()).unwrap_or(0);
    let mut values = Vec::with_capacity(records.len() * k);
    for (line, rec) in records.iter().enumerate() {
        for field in rec {
            values.push(field.trim().parse::<f64>().map_err(|e| {
                Error::invalid(format!("{}: data row {}: {e}", path.display(), line + 1))
            })?);
        }
    }
    ScoreMatrix::new(records.len(), k, values)
}

/// Reads the `label` column of a `sample,label` file.
pub fn import_labels_csv(path: impl AsRef<Path>) -> Result<LabelVector> {
    let path = path.as_ref();
    let labels = csv_records(path)?
        .iter()
        .enumerate()
        .map(|(line, rec)| {
            rec.get(1)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "{}: data row {} has no label column",
                        path.display(),
                        line + 1
                    ))
                })?
                .trim()
                .parse::<usize>()
                .map_err(|e| {
                    Error::invalid(format!("{}: data row {}: {e}", path.display(), line + 1))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelVector::new(labels))
}
