//! Feature-matrix import/export in two equivalent layouts.
//!
//! Text (`.csv` extension): a header line `d,N,K,n`, then `N` lines of
//! `d` comma-separated values, line `j` holding column `j` of the matrix.
//! Binary (any other extension): a 32-byte header of four little-endian
//! unsigned 64-bit integers `d, N, K, n`, then `d·N` little-endian 64-bit
//! floats in column-major order.
//!
//! Classifier weights ride in the same container transposed: a `K×d`
//! matrix `W` is stored as the `d×K` matrix `W^T` under the header
//! `d, K, K, 1`.

use std::path::Path;

use crate::dims::ProblemDims;
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Dimensions declared by a feature file header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureHeader {
    pub d: u64,
    pub cols: u64,
    pub k: u64,
    pub n: u64,
}

impl FeatureHeader {
    pub fn for_features(dims: &ProblemDims, d: usize) -> Self {
        FeatureHeader {
            d: d as u64,
            cols: dims.total() as u64,
            k: dims.k as u64,
            n: dims.n as u64,
        }
    }

    pub fn for_weights(k: usize, d: usize) -> Self {
        FeatureHeader {
            d: d as u64,
            cols: k as u64,
            k: k as u64,
            n: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.cols == 0 || self.k == 0 || self.n == 0 {
            return Err(Error::MalformedFile(
                "feature header dimensions must be positive".into(),
            ));
        }
        if self.cols != self.k * self.n {
            return Err(Error::MalformedFile(format!(
                "feature header declares {} columns but K*n = {}",
                self.cols,
                self.k * self.n
            )));
        }
        let elements = self.d.checked_mul(self.cols).ok_or_else(|| {
            Error::MalformedFile("feature header dimensions overflow".into())
        })?;
        if elements > (1 << 33) {
            return Err(Error::MalformedFile(
                "feature file too large to load".into(),
            ));
        }
        Ok(())
    }

    pub fn dims(&self) -> Result<ProblemDims> {
        ProblemDims::new(self.k as usize, self.d as usize, self.n as usize)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false)
}

/// Writes a matrix under the given header, choosing the text layout for
/// `.csv` paths and the binary layout otherwise.
pub fn write_matrix(path: &Path, m: &Mat, header: FeatureHeader) -> Result<()> {
    header.validate()?;
    if m.nrows() as u64 != header.d || m.ncols() as u64 != header.cols {
        return Err(Error::shape(
            "feature matrix vs header",
            (header.d as usize, header.cols as usize),
            m.dim(),
        ));
    }
    if is_csv(path) {
        let mut text = format!("{},{},{},{}\n", header.d, header.cols, header.k, header.n);
        for col in m.columns() {
            let fields: Vec<String> = col.iter().map(|x| super::trace_io::fmt_float(*x)).collect();
            text.push_str(&fields.join(","));
            text.push('\n');
        }
        std::fs::write(path, text)?;
    } else {
        let mut bytes =
            Vec::with_capacity(32 + 8 * (header.d as usize) * (header.cols as usize));
        for v in [header.d, header.cols, header.k, header.n] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for col in m.columns() {
            for x in col.iter() {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        std::fs::write(path, bytes)?;
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix`], returning it with its
/// header.
pub fn read_matrix(path: &Path) -> Result<(Mat, FeatureHeader)> {
    if is_csv(path) {
        let text = std::fs::read_to_string(path)?;
        read_csv_text(&text)
    } else {
        let bytes = std::fs::read(path)?;
        read_binary(&bytes)
    }
}

fn read_csv_text(text: &str) -> Result<(Mat, FeatureHeader)> {
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::MalformedFile("feature file is empty".into()))?;
    let parts: Vec<&str> = header_line.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::MalformedFile(
            "feature header must be 'd,N,K,n'".into(),
        ));
    }
    let nums = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|_| Error::MalformedFile(format!("bad header field {p:?}")))
        })
        .collect::<Result<Vec<u64>>>()?;
    let header = FeatureHeader {
        d: nums[0],
        cols: nums[1],
        k: nums[2],
        n: nums[3],
    };
    header.validate()?;
    let (d, cols) = (header.d as usize, header.cols as usize);
    let mut m = Mat::zeros((d, cols));
    let mut count = 0usize;
    for (j, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        if j >= cols {
            return Err(Error::MalformedFile(format!(
                "feature file has more than {cols} columns"
            )));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d {
            return Err(Error::MalformedFile(format!(
                "feature column {j} has {} entries, expected {d}",
                fields.len()
            )));
        }
        for (i, f) in fields.iter().enumerate() {
            m[[i, j]] = f
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::MalformedFile(format!("bad float {f:?}")))?;
        }
        count += 1;
    }
    if count != cols {
        return Err(Error::MalformedFile(format!(
            "feature file has {count} columns, header declares {cols}"
        )));
    }
    Ok((m, header))
}

fn read_binary(bytes: &[u8]) -> Result<(Mat, FeatureHeader)> {
    if bytes.len() < 32 {
        return Err(Error::MalformedFile(
            "binary feature file shorter than its 32-byte header".into(),
        ));
    }
    let mut nums = [0u64; 4];
    for (i, v) in nums.iter_mut().enumerate() {
        *v = u64::from_le_bytes(bytes[8 * i..8 * (i + 1)].try_into().expect("8 bytes"));
    }
    let header = FeatureHeader {
        d: nums[0],
        cols: nums[1],
        k: nums[2],
        n: nums[3],
    };
    header.validate()?;
    let (d, cols) = (header.d as usize, header.cols as usize);
    let expected = 32 + 8 * d * cols;
    if bytes.len() != expected {
        return Err(Error::MalformedFile(format!(
            "binary feature file is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut m = Mat::zeros((d, cols));
    let mut offset = 32;
    for j in 0..cols {
        for i in 0..d {
            m[[i, j]] = f64::from_le_bytes(
                bytes[offset..offset + 8].try_into().expect("8 bytes"),
            );
            offset += 8;
        }
    }
    Ok((m, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_matrix(d: usize, cols: usize) -> Mat {
        Mat::from_shape_fn((d, cols), |(i, j)| {
            ((i * cols + j) as f64 * 0.7312).sin() * 3.0
        })
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let dims = ProblemDims::new(3, 5, 4).unwrap();
        let m = sample_matrix(5, 12);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.bin");
        write_matrix(&path, &m, FeatureHeader::for_features(&dims, 5)).unwrap();
        let (back, header) = read_matrix(&path).unwrap();
        assert_eq!(header, FeatureHeader::for_features(&dims, 5));
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let dims = ProblemDims::new(2, 4, 3).unwrap();
        let m = sample_matrix(4, 6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        write_matrix(&path, &m, FeatureHeader::for_features(&dims, 4)).unwrap();
        let (back, header) = read_matrix(&path).unwrap();
        assert_eq!(header.cols, 6);
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_must_be_consistent() {
        assert!(FeatureHeader {
            d: 3,
            cols: 7,
            k: 2,
            n: 3
        }
        .validate()
        .is_err());
        assert!(FeatureHeader {
            d: 0,
            cols: 6,
            k: 2,
            n: 3
        }
        .validate()
        .is_err());
        assert!(FeatureHeader {
            d: 3,
            cols: 6,
            k: 2,
            n: 3
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn csv_rejects_wrong_column_counts() {
        let text = "2,2,2,1\n1.0,2.0\n3.0\n";
        assert!(read_csv_text(text).is_err());
        let text = "2,2,2,1\n1.0,2.0\n";
        assert!(read_csv_text(text).is_err());
        let text = "2,2,2,1\n1.0,2.0\n3.0,4.0\n5.0,6.0\n";
        assert!(read_csv_text(text).is_err());
    }

    #[test]
    fn binary_rejects_truncation_and_padding() {
        let dims = ProblemDims::new(2, 3, 2).unwrap();
        let m = sample_matrix(3, 4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.bin");
        write_matrix(&path, &m, FeatureHeader::for_features(&dims, 3)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        let truncated = dir.path().join("truncated.bin");
        std::fs::write(&truncated, &bytes).unwrap();
        assert!(read_matrix(&truncated).is_err());
        bytes.push(0);
        bytes.push(0);
        let padded = dir.path().join("padded.bin");
        std::fs::write(&padded, &bytes).unwrap();
        assert!(read_matrix(&padded).is_err());
    }

    #[test]
    fn weights_header_uses_single_sample_convention() {
        let header = FeatureHeader::for_weights(4, 20);
        assert_eq!(header.cols, 4);
        assert_eq!(header.n, 1);
        header.validate().unwrap();
    }
}
