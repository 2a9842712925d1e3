//! Little-endian binary encoding helpers shared by the model and dataset
//! file formats. The reader tracks its byte offset so malformed files can
//! be reported precisely.

use crate::nn::NnError;

#[derive(Debug, Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        ByteWriter::default()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        self.buf.reserve(vs.len() * 8);
        for v in vs {
            self.f64(*v);
        }
    }

    pub fn len_prefixed(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.bytes(b);
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug)]
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn error(&self, message: impl Into<String>) -> NnError {
        NnError::Format { offset: self.pos, message: message.into() }
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], NnError> {
        if self.buf.len() - self.pos < n {
            return Err(self.error(format!(
                "truncated while reading {what}: need {n} bytes, {} left",
                self.buf.len() - self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn expect(&mut self, magic: &[u8]) -> Result<(), NnError> {
        let at = self.pos;
        let got = self.take(magic.len(), "magic")?;
        if got != magic {
            return Err(NnError::Format { offset: at, message: "bad magic bytes".into() });
        }
        Ok(())
    }

    pub fn u32(&mut self, what: &str) -> Result<u32, NnError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64, NnError> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64, NnError> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    /// Reads a finite f64; NaN or infinity is a format error at its offset.
    pub fn finite_f64(&mut self, what: &str) -> Result<f64, NnError> {
        let at = self.pos;
        let v = self.f64(what)?;
        if !v.is_finite() {
            return Err(NnError::Format { offset: at, message: format!("{what} is not finite") });
        }
        Ok(v)
    }

    pub fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, NnError> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| self.error(format!("{what}: length overflow")))?;
        let b = self.take(bytes, what)?;
        Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    pub fn len_prefixed(&mut self, what: &str) -> Result<&'a [u8], NnError> {
        let n = self.u32(what)? as usize;
        self.take(n, what)
    }

    pub fn finish(&self) -> Result<(), NnError> {
        if self.pos != self.buf.len() {
            return Err(self.error(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}
