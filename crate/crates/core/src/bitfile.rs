//! Run-length bit files.
//!
//! Layout: the magic bytes `GMA1`, then unsigned LEB128 values for the
//! format version and the bit length, then the alternating run lengths,
//! starting with the run of 0s (possibly empty). The runs sum to the length.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::numeric::SetPrefix;

pub const MAGIC: &[u8; 4] = b"GMA1";
pub const VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum BitFileError {
    #[error("not a bit file (bad magic)")]
    BadMagic,
    #[error("unsupported bit file version {0}")]
    UnsupportedVersion(u64),
    #[error("malformed LEB128 value")]
    BadVarint,
    #[error("runs sum to {actual} bits, header declares {declared}")]
    LengthMismatch { declared: u64, actual: u64 },
    #[error("raw dump contains {0:?}, expected only 0 and 1")]
    BadRawChar(char),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_bits<W: Write>(mut out: W, bits: &SetPrefix) -> Result<(), BitFileError> {
    out.write_all(MAGIC)?;
    leb128::write::unsigned(&mut out, VERSION)?;
    leb128::write::unsigned(&mut out, bits.len())?;
    for run in bits.runs() {
        leb128::write::unsigned(&mut out, run)?;
    }
    Ok(())
}

pub fn read_bits<R: Read>(mut input: R) -> Result<SetPrefix, BitFileError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(|_| BitFileError::BadMagic)?;
    if &magic != MAGIC {
        return Err(BitFileError::BadMagic);
    }
    let version = read_varint(&mut input)?.ok_or(BitFileError::BadVarint)?;
    if version != VERSION {
        return Err(BitFileError::UnsupportedVersion(version));
    }
    let declared = read_varint(&mut input)?.ok_or(BitFileError::BadVarint)?;
    let mut runs = Vec::new();
    let mut actual = 0u64;
    while let Some(run) = read_varint(&mut input)? {
        actual = actual.checked_add(run).ok_or(BitFileError::BadVarint)?;
        runs.push(run);
    }
    if actual != declared {
        return Err(BitFileError::LengthMismatch { declared, actual });
    }
    Ok(SetPrefix::from_runs(&runs))
}

/// `Ok(None)` at a clean end of input.
fn read_varint<R: Read>(input: &mut R) -> Result<Option<u64>, BitFileError> {
    let mut first = [0u8; 1];
    if input.read(&mut first)? == 0 {
        return Ok(None);
    }
    let mut chained = first.as_slice().chain(input);
    match leb128::read::unsigned(&mut chained) {
        Ok(v) => Ok(Some(v)),
        Err(leb128::read::Error::IoError(e)) if e.kind() == io::ErrorKind::UnexpectedEof => {
            Err(BitFileError::BadVarint)
        }
        Err(leb128::read::Error::IoError(e)) => Err(e.into()),
        Err(leb128::read::Error::Overflow) => Err(BitFileError::BadVarint),
    }
}

pub fn save(path: &Path, bits: &SetPrefix) -> Result<(), BitFileError> {
    let mut buf = Vec::new();
    write_bits(&mut buf, bits)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SetPrefix, BitFileError> {
    read_bits(io::BufReader::new(std::fs::File::open(path)?))
}

/// Raw dump: one ASCII `0`/`1` per bit and a trailing newline.
pub fn save_raw(path: &Path, bits: &SetPrefix) -> Result<(), BitFileError> {
    std::fs::write(path, bits.to_bit_string() + "\n")?;
    Ok(())
}

pub fn load_raw(path: &Path) -> Result<SetPrefix, BitFileError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = SetPrefix::new();
    for c in text.trim_end().chars() {
        match c {
            '0' => out.push(false),
            '1' => out.push(true),
            other => return Err(BitFileError::BadRawChar(other)),
        }
    }
    Ok(out)
}
