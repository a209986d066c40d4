//! Length-prefixed string helpers shared by the store and index formats.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Result, SkqError};

pub(crate) fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

pub(crate) fn read_str<R: Read>(r: &mut R, what: &'static str) -> Result<String> {
    let bad = |message: String| SkqError::Format { what, message };
    let len = r
        .read_u32::<LittleEndian>()
        .map_err(|e| bad(e.to_string()))? as usize;
    let mut buf = Vec::with_capacity(len.min(1 << 16));
    r.take(len as u64)
        .read_to_end(&mut buf)
        .map_err(|e| bad(e.to_string()))?;
    if buf.len() != len {
        return Err(bad("truncated string".into()));
    }
    String::from_utf8(buf).map_err(|_| bad("string is not utf-8".into()))
}
