//! Binary checkpoint layout (little-endian):
//!
//! ```text
//! "PSC1" | u32 d_in | u32 d | f64 log_t | f32[d_in*d] w_txt | f32[d_in*d] w_img | u64 step | f64 val_accuracy
//! ```
//!
//! Matrices are row-major. Weights are narrowed to `f32` on write.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{ScorerError, ScoringModel};

const MAGIC: &[u8; 4] = b"PSC1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub model: ScoringModel,
    /// No-tie validation accuracy in `[0, 1]`.
    pub val_accuracy: f64,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("checkpoint has trailing bytes")]
    TrailingBytes,
    #[error("checkpoint contents invalid: {0}")]
    Invalid(#[from] ScorerError),
}

pub fn write_checkpoint<W: Write>(mut out: W, checkpoint: &Checkpoint) -> io::Result<()> {
    let model = &checkpoint.model;
    out.write_all(MAGIC)?;
    out.write_all(&(model.d_in as u32).to_le_bytes())?;
    out.write_all(&(model.d as u32).to_le_bytes())?;
    out.write_all(&model.log_t.to_le_bytes())?;
    for w in model.w_txt.iter().chain(&model.w_img) {
        out.write_all(&(*w as f32).to_le_bytes())?;
    }
    out.write_all(&checkpoint.step.to_le_bytes())?;
    out.write_all(&checkpoint.val_accuracy.to_le_bytes())?;
    out.flush()
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Checkpoint, CheckpointError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let d_in = read_u32(&mut input)? as usize;
    let d = read_u32(&mut input)? as usize;
    let log_t = f64::from_le_bytes(read_array(&mut input)?);
    let read_matrix = |input: &mut R| -> io::Result<Vec<f64>> {
        (0..d_in * d)
            .map(|_| Ok(f32::from_le_bytes(read_array(input)?) as f64))
            .collect()
    };
    let w_txt = read_matrix(&mut input)?;
    let w_img = read_matrix(&mut input)?;
    let step = u64::from_le_bytes(read_array(&mut input)?);
    let val_accuracy = f64::from_le_bytes(read_array(&mut input)?);
    if input.read(&mut [0u8; 1])? != 0 {
        return Err(CheckpointError::TrailingBytes);
    }
    if !(0.0..=1.0).contains(&val_accuracy) {
        return Err(ScorerError::Config(format!("val_accuracy {val_accuracy} outside [0, 1]")).into());
    }
    let model = ScoringModel::from_parts(d_in, d, w_txt, w_img, log_t)?;
    Ok(Checkpoint {
        step,
        model,
        val_accuracy,
    })
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(input: &mut R) -> io::Result<u32> {
    Ok(u32::from_le_bytes(read_array(input)?))
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> io::Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), checkpoint)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checkpoint() -> Checkpoint {
        let model = ScoringModel::from_parts(
            2,
            3,
            vec![0.5, -0.25, 1.0, 2.0, 0.0, -1.5],
            vec![0.125, 0.25, 0.5, 1.0, 2.0, 4.0],
            10f64.ln(),
        )
        .unwrap();
        Checkpoint {
            step: 1200,
            model,
            val_accuracy: 0.875,
        }
    }

    #[test]
    fn byte_layout() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &checkpoint()).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 4 * 12 + 8 + 8);
        assert_eq!(&buf[..4], b"PSC1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(buf[12..20].try_into().unwrap()), 10f64.ln());
        assert_eq!(f32::from_le_bytes(buf[20..24].try_into().unwrap()), 0.5);
        // First entry of w_img follows the six entries of w_txt.
        assert_eq!(f32::from_le_bytes(buf[44..48].try_into().unwrap()), 0.125);
        assert_eq!(u64::from_le_bytes(buf[68..76].try_into().unwrap()), 1200);
    }

    #[test]
    fn round_trip_of_f32_exact_weights() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &checkpoint()).unwrap();
        assert_eq!(read_checkpoint(buf.as_slice()).unwrap(), checkpoint());
    }

    #[test]
    fn corrupt_files_rejected() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &checkpoint()).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_checkpoint(bad.as_slice()),
            Err(CheckpointError::BadMagic)
        ));
        assert!(matches!(
            read_checkpoint(&buf[..buf.len() - 3]),
            Err(CheckpointError::Io(_))
        ));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(
            read_checkpoint(long.as_slice()),
            Err(CheckpointError::TrailingBytes)
        ));
    }
}
