//! Symmetric positive-definite operators accessed only through block products.
//!
//! Every realization carries a [`LoadMeter`]: one call to
//! [`SymmetricOperator::apply_block`] is one matrix-load, and each column of the
//! input block is one matrix-vector product. The cost model of the solvers is
//! expressed entirely in these two counters.
//!
//! Two realizations are provided: [`DenseOperator`] keeps the matrix in memory, and
//! [`ChunkedOperator`] streams row chunks from a file written by [`write_chunked`],
//! holding a single chunk in memory at a time.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Magic prefix of the chunked matrix file format.
pub const CHUNKED_MAGIC: &[u8; 8] = b"BKSPD1\0\0";

/// Header length in bytes: magic, `d`, `chunk_rows`.
pub const CHUNKED_HEADER_LEN: u64 = 24;

/// Snapshot of the cost counters of an operator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CostCounters {
    pub matrix_loads: u64,
    pub matvecs: u64,
}

impl CostCounters {
    pub fn since(self, earlier: CostCounters) -> CostCounters {
        CostCounters {
            matrix_loads: self.matrix_loads - earlier.matrix_loads,
            matvecs: self.matvecs - earlier.matvecs,
        }
    }
}

impl std::ops::Add for CostCounters {
    type Output = CostCounters;

    fn add(self, other: CostCounters) -> CostCounters {
        CostCounters {
            matrix_loads: self.matrix_loads + other.matrix_loads,
            matvecs: self.matvecs + other.matvecs,
        }
    }
}

/// Atomic matrix-load and matvec counters.
#[derive(Debug, Default)]
pub struct LoadMeter {
    loads: AtomicU64,
    matvecs: AtomicU64,
}

impl LoadMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, columns: usize) {
        self.loads.fetch_add(1, Ordering::Relaxed);
        self.matvecs.fetch_add(columns as u64, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CostCounters {
        CostCounters {
            matrix_loads: self.loads.load(Ordering::Relaxed),
            matvecs: self.matvecs.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.loads.store(0, Ordering::Relaxed);
        self.matvecs.store(0, Ordering::Relaxed);
    }
}

/// A symmetric positive-definite operator that can only be applied to blocks of vectors.
///
/// Implementors provide the raw product and the meter; callers go through
/// [`apply_block`](SymmetricOperator::apply_block), which validates the input and
/// charges exactly one matrix-load.
pub trait SymmetricOperator<T: Scalar> {
    /// Row (and column) dimension `d`.
    fn dim(&self) -> usize;

    /// Raw product `A X` without validation or accounting.
    fn product(&self, x: &DMatrix<T>) -> Result<DMatrix<T>>;

    fn meter(&self) -> &LoadMeter;

    /// Returns `A X`, charging one matrix-load and `X.ncols()` matvecs.
    fn apply_block(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        let d = self.dim();
        if x.nrows() != d || x.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                expected_rows: d,
                expected_cols: x.ncols().max(1),
                rows: x.nrows(),
                cols: x.ncols(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let out = self.product(x)?;
        self.meter().record(x.ncols());
        Ok(out)
    }

    fn counters(&self) -> CostCounters {
        self.meter().snapshot()
    }

    fn reset_counters(&self) {
        self.meter().reset()
    }
}

impl<T: Scalar, O: SymmetricOperator<T> + ?Sized> SymmetricOperator<T> for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn product(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        (**self).product(x)
    }
    fn meter(&self) -> &LoadMeter {
        (**self).meter()
    }
}

/// In-memory dense operator.
///
/// The matrix is reference counted, so [`with_fresh_counters`](Self::with_fresh_counters)
/// hands out cheap copies with private counters.
#[derive(Debug)]
pub struct DenseOperator<T: Scalar> {
    matrix: Arc<DMatrix<T>>,
    meter: LoadMeter,
}

impl<T: Scalar> DenseOperator<T> {
    /// Wraps a square matrix. Symmetry is the caller's responsibility.
    pub fn new(matrix: DMatrix<T>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected_rows: matrix.nrows(),
                expected_cols: matrix.nrows(),
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix: Arc::new(matrix),
            meter: LoadMeter::new(),
        })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn with_fresh_counters(&self) -> Self {
        Self {
            matrix: Arc::clone(&self.matrix),
            meter: LoadMeter::new(),
        }
    }
}

impl<T: Scalar> SymmetricOperator<T> for DenseOperator<T> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn product(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        Ok(&*self.matrix * x)
    }

    fn meter(&self) -> &LoadMeter {
        &self.meter
    }
}

/// `A + shift I`, charging loads to the wrapped operator.
#[derive(Debug)]
pub struct Shifted<'a, O: ?Sized> {
    inner: &'a O,
    shift: f64,
}

impl<'a, O: ?Sized> Shifted<'a, O> {
    pub fn new(inner: &'a O, shift: f64) -> Self {
        Self { inner, shift }
    }
}

impl<T: Scalar, O: SymmetricOperator<T> + ?Sized> SymmetricOperator<T> for Shifted<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn product(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        let mut y = self.inner.product(x)?;
        y += x * T::of(self.shift);
        Ok(y)
    }

    fn meter(&self) -> &LoadMeter {
        self.inner.meter()
    }
}

/// Row counts of the chunks covering `d` rows, `ceil(d / chunk_rows)` entries.
pub fn chunk_layout(d: usize, chunk_rows: usize) -> Vec<usize> {
    assert!(chunk_rows > 0, "chunk_rows must be positive");
    let mut rows = Vec::with_capacity(d.div_ceil(chunk_rows));
    let mut start = 0;
    while start < d {
        let r = chunk_rows.min(d - start);
        rows.push(r);
        start += r;
    }
    rows
}

/// Writes a symmetric matrix in the chunked on-disk format.
///
/// Symmetry is validated once here (relative tolerance `1e-12`); readers trust it.
pub fn write_chunked<T: Scalar>(
    a: &DMatrix<T>,
    chunk_rows: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let d = a.nrows();
    if d == 0 || a.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected_rows: d,
            expected_cols: d,
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if chunk_rows == 0 {
        return Err(Error::InvalidArgument(
            "chunk_rows must be at least 1".into(),
        ));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
    let mut asym = 0.0f64;
    for i in 0..d {
        for j in (i + 1)..d {
            asym = asym.max((a[(i, j)].as_f64() - a[(j, i)].as_f64()).abs());
        }
    }
    if asym > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric: max |a_ij - a_ji| = {asym:e} (scale {scale:e})"
        )));
    }

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHUNKED_MAGIC)?;
    w.write_all(&(d as u64).to_le_bytes())?;
    w.write_all(&(chunk_rows as u64).to_le_bytes())?;
    for i in 0..d {
        for j in 0..d {
            w.write_all(&a[(i, j)].as_f64().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_header(file: &mut File) -> Result<(usize, usize)> {
    let found = file.metadata()?.len();
    if found < CHUNKED_HEADER_LEN {
        return Err(Error::TruncatedFile {
            expected: CHUNKED_HEADER_LEN,
            found,
        });
    }
    let mut header = [0u8; CHUNKED_HEADER_LEN as usize];
    file.seek(SeekFrom::Start(0))?;
    file.read_exact(&mut header)?;
    if &header[..8] != CHUNKED_MAGIC {
        return Err(Error::CorruptFile("bad magic bytes".into()));
    }
    let d = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let chunk_rows = u64::from_le_bytes(header[16..24].try_into().unwrap());
    if d == 0 || chunk_rows == 0 {
        return Err(Error::CorruptFile(format!(
            "invalid header: d={d}, chunk_rows={chunk_rows}"
        )));
    }
    let expected = d
        .checked_mul(d)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(CHUNKED_HEADER_LEN))
        .ok_or_else(|| Error::CorruptFile(format!("dimension {d} overflows the file size")))?;
    if found < expected {
        return Err(Error::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(Error::CorruptFile(format!(
            "{} trailing bytes after byte offset {expected}",
            found - expected
        )));
    }
    Ok((d as usize, chunk_rows as usize))
}

/// Opens a chunked matrix file, validating its header and length.
pub fn open_chunked<T: Scalar>(path: impl AsRef<Path>) -> Result<ChunkedOperator<T>> {
    let path = path.as_ref().to_path_buf();
    let mut file = File::open(&path)?;
    let (dim, chunk_rows) = read_header(&mut file)?;
    Ok(ChunkedOperator {
        path,
        dim,
        chunk_rows,
        meter: LoadMeter::new(),
        _scalar: PhantomData,
    })
}

/// Reads a whole chunked file back as a dense `f64` matrix.
pub fn read_dense(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let mut file = File::open(path)?;
    let (d, _) = read_header(&mut file)?;
    let mut r = BufReader::new(file);
    let mut data = vec![0.0f64; d * d];
    let mut buf = [0u8; 8];
    for v in data.iter_mut() {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok(DMatrix::from_row_slice(d, d, &data))
}

/// Out-of-core operator streaming row chunks from disk.
#[derive(Debug)]
pub struct ChunkedOperator<T: Scalar> {
    path: PathBuf,
    dim: usize,
    chunk_rows: usize,
    meter: LoadMeter,
    _scalar: PhantomData<T>,
}

impl<T: Scalar> ChunkedOperator<T> {
    pub fn chunk_rows(&self) -> usize {
        self.chunk_rows
    }

    pub fn num_chunks(&self) -> usize {
        self.dim.div_ceil(self.chunk_rows)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl<T: Scalar> SymmetricOperator<T> for ChunkedOperator<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn product(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        let d = self.dim;
        let mut file = File::open(&self.path)?;
        file.seek(SeekFrom::Start(CHUNKED_HEADER_LEN))?;
        let mut reader = BufReader::new(file);
        let mut out = DMatrix::<T>::zeros(d, x.ncols());
        let mut bytes = vec![0u8; self.chunk_rows * d * 8];
        let mut start = 0;
        for rows in chunk_layout(d, self.chunk_rows) {
            let buf = &mut bytes[..rows * d * 8];
            reader.read_exact(buf).map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => Error::TruncatedFile {
                    expected: CHUNKED_HEADER_LEN + (d * d * 8) as u64,
                    found: CHUNKED_HEADER_LEN + (start * d * 8) as u64,
                },
                _ => Error::Io(e),
            })?;
            let chunk = DMatrix::<T>::from_row_iterator(
                rows,
                d,
                buf.chunks_exact(8)
                    .map(|b| T::of(f64::from_le_bytes(b.try_into().unwrap()))),
            );
            out.rows_mut(start, rows).copy_from(&(chunk * x));
            start += rows;
        }
        Ok(out)
    }

    fn meter(&self) -> &LoadMeter {
        &self.meter
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_block_counts() {
        let op = DenseOperator::new(DMatrix::<f64>::identity(3, 3)).unwrap();
        assert_eq!(op.counters(), CostCounters::default());
        let y = op.apply_block(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(y, DMatrix::identity(3, 3));
        assert_eq!(
            op.counters(),
            CostCounters {
                matrix_loads: 1,
                matvecs: 3
            }
        );
        op.reset_counters();
        assert_eq!(op.counters(), CostCounters::default());
    }

    #[test]
    fn diagonal_action() {
        let op = DenseOperator::new(DMatrix::from_diagonal(&nalgebra::dvector![4.0, 1.0])).unwrap();
        let y = op
            .apply_block(&DMatrix::from_column_slice(2, 1, &[1.0, 1.0]))
            .unwrap();
        assert_eq!(y.as_slice(), &[4.0, 1.0]);
    }

    #[test]
    fn seven_columns_one_load() {
        let op = DenseOperator::new(DMatrix::<f64>::identity(5, 5)).unwrap();
        op.apply_block(&DMatrix::from_element(5, 7, 1.0)).unwrap();
        assert_eq!(op.counters().matrix_loads, 1);
        assert_eq!(op.counters().matvecs, 7);
    }

    #[test]
    fn rejects_bad_input() {
        let op = DenseOperator::new(DMatrix::<f64>::identity(3, 3)).unwrap();
        let err = op.apply_block(&DMatrix::zeros(4, 1)).unwrap_err();
        assert!(err.to_string().contains("expected 3x1, got 4x1"), "{err}");
        let mut x = DMatrix::zeros(3, 1);
        x[1] = f64::NAN;
        assert!(matches!(op.apply_block(&x), Err(Error::NonFiniteInput)));
        assert_eq!(op.counters().matrix_loads, 0);
    }

    #[test]
    fn layout_is_ceiling() {
        assert_eq!(chunk_layout(10, 3), vec![3, 3, 3, 1]);
        assert_eq!(chunk_layout(4, 4), vec![4]);
        assert_eq!(chunk_layout(4, 9), vec![4]);
    }

    #[test]
    fn shifted_charges_inner() {
        let op = DenseOperator::new(DMatrix::<f64>::identity(2, 2)).unwrap();
        let sh = Shifted::new(&op, 0.5);
        let y = sh.apply_block(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(y, DMatrix::identity(2, 2) * 1.5);
        assert_eq!(op.counters().matrix_loads, 1);
    }

    #[test]
    fn single_chunk_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bkspd");
        let a = DMatrix::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        write_chunked(&a, 4, &path).unwrap();
        let op = open_chunked::<f64>(&path).unwrap();
        assert_eq!(op.num_chunks(), 1);
        let x = DMatrix::identity(4, 4);
        assert_eq!(op.apply_block(&x).unwrap(), a);
        assert_eq!(read_dense(&path).unwrap(), a);
    }

    #[test]
    fn rejects_asymmetric_write() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = DMatrix::<f64>::identity(3, 3);
        a[(0, 2)] = 1e-3;
        assert!(write_chunked(&a, 2, dir.path().join("x")).is_err());
        assert!(write_chunked(&DMatrix::<f64>::identity(3, 3), 0, dir.path().join("y")).is_err());
    }

    #[test]
    fn corrupt_and_truncated_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bkspd");
        write_chunked(&DMatrix::<f64>::identity(5, 5), 2, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();

        let truncated = dir.path().join("t.bkspd");
        std::fs::write(&truncated, &bytes[..bytes.len() - 3]).unwrap();
        match open_chunked::<f64>(&truncated) {
            Err(Error::TruncatedFile { expected, found }) => {
                assert_eq!(expected, 24 + 200);
                assert_eq!(found, 24 + 197);
            }
            other => panic!("unexpected {other:?}"),
        }

        bytes[0] = b'X';
        let corrupt = dir.path().join("c.bkspd");
        std::fs::write(&corrupt, &bytes).unwrap();
        assert!(matches!(
            open_chunked::<f64>(&corrupt),
            Err(Error::CorruptFile(_))
        ));

        let short = dir.path().join("s.bkspd");
        std::fs::write(&short, b"BKSPD1").unwrap();
        assert!(matches!(
            open_chunked::<f64>(&short),
            Err(Error::TruncatedFile { .. })
        ));
    }
}
