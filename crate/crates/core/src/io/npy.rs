//! Reading and writing the numpy `.npy` v1.0 single-array format.
//!
//! Layout: the magic `\x93NUMPY`, version bytes `01 00`, a little-endian u16
//! header length, then an ASCII dict literal such as
//! `{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }` padded with
//! spaces and terminated by `\n` so the payload starts on a 64-byte boundary.
//! The payload is the raw little-endian values in C order.
//!
//! Writing always produces `<f4`. Reading accepts the common little-endian
//! integer and float types and converts them to f32; Fortran order and ranks
//! other than 2 and 3 are rejected.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

/// Element types understood by the reader.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    F4,
    F8,
    U1,
    I1,
    U2,
    I2,
    U4,
    I4,
    U8,
    I8,
    Bool,
}

impl Dtype {
    pub fn parse(descr: &str) -> Result<Self> {
        Ok(match descr {
            "<f4" => Dtype::F4,
            "<f8" => Dtype::F8,
            "|u1" | "<u1" => Dtype::U1,
            "|i1" | "<i1" => Dtype::I1,
            "<u2" => Dtype::U2,
            "<i2" => Dtype::I2,
            "<u4" => Dtype::U4,
            "<i4" => Dtype::I4,
            "<u8" => Dtype::U8,
            "<i8" => Dtype::I8,
            "|b1" => Dtype::Bool,
            other => return Err(Error::Unsupported(format!("dtype {other:?}"))),
        })
    }

    /// Also accepts the plain names used by raw-blob sidecars (`float32`, ...).
    pub fn parse_name(name: &str) -> Result<Self> {
        Ok(match name {
            "float32" => Dtype::F4,
            "float64" => Dtype::F8,
            "uint8" => Dtype::U1,
            "int8" => Dtype::I1,
            "uint16" => Dtype::U2,
            "int16" => Dtype::I2,
            "uint32" => Dtype::U4,
            "int32" => Dtype::I4,
            "uint64" => Dtype::U8,
            "int64" => Dtype::I8,
            other => Self::parse(other)?,
        })
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::U1 | Dtype::I1 | Dtype::Bool => 1,
            Dtype::U2 | Dtype::I2 => 2,
            Dtype::F4 | Dtype::U4 | Dtype::I4 => 4,
            Dtype::F8 | Dtype::U8 | Dtype::I8 => 8,
        }
    }

    /// Decodes little-endian values to f32.
    pub fn decode(self, bytes: &[u8]) -> Vec<f32> {
        if self == Dtype::F4 {
            return bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
        }
        self.decode_f64(bytes)
            .into_iter()
            .map(|v| v as f32)
            .collect()
    }

    /// Decodes little-endian values to f64 (exact for every type except
    /// 64-bit integers beyond 2^53).
    pub fn decode_f64(self, bytes: &[u8]) -> Vec<f64> {
        let chunks = bytes.chunks_exact(self.size());
        macro_rules! conv {
            ($t:ty) => {
                chunks
                    .map(|c| <$t>::from_le_bytes(c.try_into().unwrap()) as f64)
                    .collect()
            };
        }
        match self {
            Dtype::F4 => conv!(f32),
            Dtype::F8 => conv!(f64),
            Dtype::U1 => conv!(u8),
            Dtype::I1 => conv!(i8),
            Dtype::U2 => conv!(u16),
            Dtype::I2 => conv!(i16),
            Dtype::U4 => conv!(u32),
            Dtype::I4 => conv!(i32),
            Dtype::U8 => conv!(u64),
            Dtype::I8 => conv!(i64),
            Dtype::Bool => chunks.map(|c| f64::from(u8::from(c[0] != 0))).collect(),
        }
    }
}

#[derive(Debug, PartialEq)]
pub struct Header {
    pub descr: String,
    pub fortran_order: bool,
    pub shape: Vec<usize>,
}

/// The header dict literal for a little-endian f32 C-order array.
fn header_dict(shape: &[usize]) -> String {
    let dims = match shape {
        [single] => format!("({single},)"),
        _ => format!(
            "({})",
            shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {dims}, }}")
}

/// Serializes a grid to `.npy` bytes.
pub fn encode_array(grid: &Grid) -> Vec<u8> {
    let mut header = header_dict(grid.shape());
    let unpadded = MAGIC.len() + 2 + 2 + header.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');

    let mut out = Vec::with_capacity(MAGIC.len() + 4 + header.len() + grid.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_array(grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_array(grid))?;
    Ok(())
}

/// Splits `.npy` bytes into the parsed header and the payload.
pub fn parse_header(bytes: &[u8]) -> Result<(Header, &[u8])> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::Format("missing \\x93NUMPY magic".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (len, start) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(Error::Format("truncated header length".into()));
            }
            (
                u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize,
                12,
            )
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "format version {major}.{minor}"
            )))
        }
    };
    let end = start + len;
    if bytes.len() < end {
        return Err(Error::Format("truncated header".into()));
    }
    let text = std::str::from_utf8(&bytes[start..end])
        .map_err(|_| Error::Format("header is not text".into()))?;
    Ok((parse_dict(text)?, &bytes[end..]))
}

/// Validated header plus payload of an array we can decode.
fn checked_payload(bytes: &[u8]) -> Result<(Vec<usize>, Dtype, &[u8])> {
    let (header, payload) = parse_header(bytes)?;
    if header.fortran_order {
        return Err(Error::Unsupported("fortran_order arrays".into()));
    }
    if !(2..=3).contains(&header.shape.len()) {
        return Err(Error::Unsupported(format!(
            "rank {} array",
            header.shape.len()
        )));
    }
    let dtype = Dtype::parse(&header.descr)?;
    let n: usize = header.shape.iter().product();
    if payload.len() != n * dtype.size() {
        return Err(Error::Format(format!(
            "payload is {} bytes, expected {}",
            payload.len(),
            n * dtype.size()
        )));
    }
    Ok((header.shape, dtype, payload))
}

/// Decodes `.npy` bytes into a grid.
pub fn decode_array(bytes: &[u8]) -> Result<Grid> {
    let (shape, dtype, payload) = checked_payload(bytes)?;
    Grid::new(shape, dtype.decode(payload))
        .map_err(|e| Error::Format(format!("invalid array contents: {e}")))
}

pub fn read_array(path: impl AsRef<Path>) -> Result<Grid> {
    decode_array(&fs::read(path)?)
}

/// Reads an array at full precision as `(shape, values)`, for metric
/// evaluation on float64 inputs.
pub fn read_array_f64(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<f64>)> {
    let bytes = fs::read(path)?;
    let (shape, dtype, payload) = checked_payload(&bytes)?;
    let data = dtype.decode_f64(payload);
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("array contains NaN or infinity".into()));
    }
    Ok((shape, data))
}

/// Minimal parser for the dict literal numpy writes.
struct Lexer<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, what: &str) -> Error {
        Error::Format(format!("header: {what} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {:?}", c as char)))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = self
            .peek()
            .filter(|&c| c == b'\'' || c == b'"')
            .ok_or_else(|| self.err("expected string"))?;
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != quote {
            self.pos += 1;
        }
        if self.pos == self.s.len() {
            return Err(self.err("unterminated string"));
        }
        let out = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(out)
    }

    fn word(&mut self) -> &'a [u8] {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
        {
            self.pos += 1;
        }
        &self.s[start..self.pos]
    }

    fn boolean(&mut self) -> Result<bool> {
        match self.word() {
            b"True" => Ok(true),
            b"False" => Ok(false),
            _ => Err(self.err("expected True or False")),
        }
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut dims = vec![];
        loop {
            if self.peek() == Some(b')') {
                self.pos += 1;
                return Ok(dims);
            }
            let w = self.word();
            let text = std::str::from_utf8(w).unwrap_or("");
            let text = text.strip_suffix('L').unwrap_or(text);
            dims.push(text.parse().map_err(|_| self.err("expected dimension"))?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {}
                _ => return Err(self.err("expected ',' or ')'")),
            }
        }
    }
}

fn parse_dict(text: &str) -> Result<Header> {
    let mut lx = Lexer {
        s: text.as_bytes(),
        pos: 0,
    };
    lx.expect(b'{')?;
    let (mut descr, mut fortran, mut shape) = (None, None, None);
    loop {
        if lx.peek() == Some(b'}') {
            lx.pos += 1;
            break;
        }
        let key = lx.string()?;
        lx.expect(b':')?;
        match key.as_str() {
            "descr" => descr = Some(lx.string()?),
            "fortran_order" => fortran = Some(lx.boolean()?),
            "shape" => shape = Some(lx.tuple()?),
            other => return Err(Error::Format(format!("unexpected header key {other:?}"))),
        }
        match lx.peek() {
            Some(b',') => lx.pos += 1,
            Some(b'}') => {}
            _ => return Err(lx.err("expected ',' or '}'")),
        }
    }
    if lx.peek().is_some() {
        return Err(lx.err("trailing bytes after header dict"));
    }
    let missing = |k: &str| Error::Format(format!("header lacks {k:?}"));
    Ok(Header {
        descr: descr.ok_or_else(|| missing("descr"))?,
        fortran_order: fortran.ok_or_else(|| missing("fortran_order"))?,
        shape: shape.ok_or_else(|| missing("shape"))?,
    })
}
