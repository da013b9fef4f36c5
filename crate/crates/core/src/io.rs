//! Matrix and vector files.
//!
//! The binary layout is an 8-byte header (`u32` rows, `u32` cols, little
//! endian) followed by `rows * cols` little-endian `f64` values in row-major
//! order. Vectors are stored as `n x 1` matrices. Small matrices may also be
//! read from headerless CSV, one row per line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn write_matrix_bin(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_to(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_to(w: &mut impl Write, m: &DMatrix<f64>) -> Result<()> {
    let (rows, cols) = m.shape();
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::Dimension(format!("{v} exceeds u32")));
    w.write_all(&dim(rows)?.to_le_bytes())?;
    w.write_all(&dim(cols)?.to_le_bytes())?;
    for i in 0..rows {
        for j in 0..cols {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_from(r: &mut impl Read) -> Result<DMatrix<f64>> {
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let rows = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u32::from_le_bytes(word) as usize;
    let mut data = vec![0u8; rows * cols * 8];
    r.read_exact(&mut data)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Invalid(format!("trailing bytes after {rows}x{cols} matrix")));
    }
    let values: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn read_matrix_bin(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    read_matrix_from(&mut BufReader::new(File::open(path)?))
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Invalid(format!("bad number `{s}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Dimension("ragged CSV matrix".into()));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

/// Reads by extension: `.csv` as CSV, anything else as the binary layout.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_matrix_csv(path)
    } else {
        read_matrix_bin(path)
    }
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let m = read_matrix(path)?;
    match m.shape() {
        (_, 1) => Ok(m.column(0).into_owned()),
        (1, _) => Ok(m.row(0).transpose()),
        s => Err(Error::Dimension(format!("expected a vector, got {s:?}"))),
    }
}

pub fn write_vector_bin(path: impl AsRef<Path>, v: &DVector<f64>) -> Result<()> {
    write_matrix_bin(path, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_round_trip(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
            let m = DMatrix::from_fn(rows, cols, |i, j| {
                let h = seed.wrapping_mul(6364136223846793005).wrapping_add((i * 31 + j) as u64);
                f64::from_bits(h >> 2) - 1.0
            });
            let mut buf = Vec::new();
            write_matrix_to(&mut buf, &m).unwrap();
            prop_assert_eq!(buf.len(), 8 + rows * cols * 8);
            let back = read_matrix_from(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn header_is_row_major_le() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, &m).unwrap();
        assert_eq!(&buf[..8], &[1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&buf[8..16], &1.0f64.to_le_bytes());
        assert_eq!(&buf[16..24], &2.0f64.to_le_bytes());
    }

    #[test]
    fn truncated_input_fails() {
        let buf = [2u8, 0, 0, 0, 2, 0, 0, 0, 1, 2, 3];
        assert!(read_matrix_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn csv_and_vectors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        std::fs::write(&p, "1, 2, 3\n4,5,6\n").unwrap();
        let m = read_matrix(&p).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let v = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let vp = dir.path().join("v.bin");
        write_vector_bin(&vp, &v).unwrap();
        assert_eq!(read_vector(&vp).unwrap(), v);
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_matrix(&p).is_err());
    }
}
