//! Per-utterance log-likelihood matrices and the `LOGF` file format.
//!
//! Layout: magic `LOGF`, then `version`, `num_frames` and `num_tokens` as
//! little-endian `u32`, then `num_frames * num_tokens` little-endian `f32`
//! values in frame-major order.

use std::io::{self, Read, Write};
use std::ops::Range;

use thiserror::Error;

pub const LOGF_MAGIC: &[u8; 4] = b"LOGF";
pub const LOGF_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogitsError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"LOGF\"")]
    Magic([u8; 4]),
    #[error("unsupported LOGF version {0}")]
    Version(u32),
    #[error("truncated data: expected {expected} values, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
}

/// Frame-major matrix of natural-log likelihoods.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLikelihoods {
    num_tokens: usize,
    data: Vec<f32>,
}

impl LogLikelihoods {
    pub fn new(num_tokens: usize, data: Vec<f32>) -> Result<Self, LogitsError> {
        if num_tokens == 0 {
            return Err(LogitsError::Shape("num_tokens must be positive".into()));
        }
        if !data.len().is_multiple_of(num_tokens) {
            return Err(LogitsError::Shape(format!(
                "{} values is not a multiple of {num_tokens} tokens",
                data.len()
            )));
        }
        Ok(LogLikelihoods { num_tokens, data })
    }

    pub fn empty(num_tokens: usize) -> Self {
        LogLikelihoods {
            num_tokens,
            data: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self, LogitsError> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(LogitsError::Shape("ragged rows".into()));
        }
        Self::new(width, rows.concat())
    }

    pub fn num_frames(&self) -> usize {
        self.data.len() / self.num_tokens
    }

    pub fn num_tokens(&self) -> usize {
        self.num_tokens
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.num_tokens..(t + 1) * self.num_tokens]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.num_tokens)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Copy of the frames in `range`.
    pub fn slice(&self, range: Range<usize>) -> LogLikelihoods {
        LogLikelihoods {
            num_tokens: self.num_tokens,
            data: self.data[range.start * self.num_tokens..range.end * self.num_tokens].to_vec(),
        }
    }

    /// Splits into consecutive chunks of at most `chunk_frames` frames.
    pub fn chunks(&self, chunk_frames: usize) -> Vec<LogLikelihoods> {
        assert!(chunk_frames > 0, "chunk size must be positive");
        (0..self.num_frames())
            .step_by(chunk_frames)
            .map(|start| self.slice(start..(start + chunk_frames).min(self.num_frames())))
            .collect()
    }

    pub fn read_from(mut reader: impl Read) -> Result<Self, LogitsError> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != LOGF_MAGIC {
            return Err(LogitsError::Magic(magic));
        }
        let mut word = [0u8; 4];
        let mut next_u32 = |r: &mut dyn Read| -> io::Result<u32> {
            r.read_exact(&mut word)?;
            Ok(u32::from_le_bytes(word))
        };
        let version = next_u32(&mut reader)?;
        if version != LOGF_VERSION {
            return Err(LogitsError::Version(version));
        }
        let num_frames = next_u32(&mut reader)? as usize;
        let num_tokens = next_u32(&mut reader)? as usize;
        let expected = num_frames * num_tokens;
        let mut bytes = Vec::with_capacity(expected * 4);
        reader.read_to_end(&mut bytes)?;
        if bytes.len() < expected * 4 {
            return Err(LogitsError::Truncated {
                expected,
                found: bytes.len() / 4,
            });
        }
        let data = bytes[..expected * 4]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Self::new(num_tokens.max(1), data)
    }

    pub fn write_to(&self, mut writer: impl Write) -> Result<(), LogitsError> {
        writer.write_all(LOGF_MAGIC)?;
        writer.write_all(&LOGF_VERSION.to_le_bytes())?;
        writer.write_all(&(self.num_frames() as u32).to_le_bytes())?;
        writer.write_all(&(self.num_tokens as u32).to_le_bytes())?;
        for v in &self.data {
            writer.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}
