//! Detector click streams and their on-disk formats.
//!
//! Text format, one channel per file:
//!
//! ```text
//! # franson-clicks v1
//! # channel=signal
//! # span_ps=1000000000000
//! # seed=42
//! # config_hash=3f2a...
//! 1203
//! 98812
//! ```
//!
//! Binary format: the 8-byte magic `FRCLICK1`, then little-endian
//! `span_ps: i64`, `seed: u64`, `count: u64`, a `u16` channel-label length
//! and label bytes, a `u16` hash length and hash bytes, then `count`
//! little-endian `i64` timestamps.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BINARY_MAGIC: &[u8; 8] = b"FRCLICK1";
const TEXT_MAGIC: &str = "# franson-clicks v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickStream {
    pub channel: String,
    /// Ascending click times in picoseconds, all within `[0, span_ps)`.
    pub timestamps: Vec<i64>,
    pub span_ps: i64,
    pub true_clicks: u64,
    pub dark_clicks: u64,
}

impl ClickStream {
    pub fn empty(channel: &str, span_ps: i64) -> Self {
        Self {
            channel: channel.to_string(),
            timestamps: Vec::new(),
            span_ps,
            true_clicks: 0,
            dark_clicks: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn is_strictly_sorted(&self) -> bool {
        self.timestamps.windows(2).all(|w| w[0] < w[1])
    }

    pub fn within_span(&self) -> bool {
        self.timestamps
            .iter()
            .all(|&t| t >= 0 && t < self.span_ps.max(1))
    }

    pub fn span_s(&self) -> f64 {
        self.span_ps as f64 * 1e-12
    }
}

/// Provenance written into exported click files.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClickHeader {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickFormat {
    #[default]
    Text,
    Binary,
}

pub fn write_clicks(
    path: &Path,
    stream: &ClickStream,
    header: &ClickHeader,
    format: ClickFormat,
) -> Result<()> {
    let bytes = match format {
        ClickFormat::Text => encode_text(stream, header).into_bytes(),
        ClickFormat::Binary => encode_binary(stream, header),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_text(stream: &ClickStream, header: &ClickHeader) -> String {
    let mut out = String::with_capacity(16 * stream.len() + 128);
    out.push_str(TEXT_MAGIC);
    out.push('\n');
    out.push_str(&format!("# channel={}\n", stream.channel));
    out.push_str(&format!("# span_ps={}\n", stream.span_ps));
    out.push_str(&format!("# seed={}\n", header.seed));
    out.push_str(&format!("# config_hash={}\n", header.config_hash));
    for t in &stream.timestamps {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

pub fn encode_binary(stream: &ClickStream, header: &ClickHeader) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * stream.len() + 64);
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&stream.span_ps.to_le_bytes());
    out.extend_from_slice(&header.seed.to_le_bytes());
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for s in [stream.channel.as_bytes(), header.config_hash.as_bytes()] {
        out.extend_from_slice(&(s.len() as u16).to_le_bytes());
        out.extend_from_slice(s);
    }
    for t in &stream.timestamps {
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

/// Read a click file in either format (detected from its first bytes).
///
/// Dark/true diagnostics are not stored on disk and come back as zero.
pub fn read_clicks(path: &Path) -> Result<(ClickStream, ClickHeader)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(&bytes).map_err(|m| parse_error(path, 1, m))
    } else {
        decode_text(path, &bytes)
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column: 1,
        message: message.into(),
    }
}

fn decode_text(path: &Path, bytes: &[u8]) -> Result<(ClickStream, ClickHeader)> {
    let reader = BufReader::new(bytes);
    let mut stream = ClickStream::empty("", 0);
    let mut header = ClickHeader::default();
    let mut saw_magic = false;
    let mut saw_span = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e: io::Error| parse_error(path, lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 {
            if line != TEXT_MAGIC {
                return Err(parse_error(path, 1, "missing `# franson-clicks v1` header"));
            }
            saw_magic = true;
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.trim().split_once('=') else {
                continue;
            };
            let bad = |what: &str| parse_error(path, lineno, format!("invalid {what}: {value}"));
            match key.trim() {
                "channel" => stream.channel = value.trim().to_string(),
                "span_ps" => {
                    stream.span_ps = value.trim().parse().map_err(|_| bad("span_ps"))?;
                    saw_span = true;
                }
                "seed" => header.seed = value.trim().parse().map_err(|_| bad("seed"))?,
                "config_hash" => header.config_hash = value.trim().to_string(),
                _ => {}
            }
            continue;
        }
        let t: i64 = line
            .parse()
            .map_err(|_| parse_error(path, lineno, format!("expected integer timestamp, got `{line}`")))?;
        stream.timestamps.push(t);
    }
    if !saw_magic {
        return Err(parse_error(path, 1, "empty click file"));
    }
    if !saw_span {
        return Err(parse_error(path, 1, "missing span_ps header"));
    }
    Ok((stream, header))
}

fn decode_binary(bytes: &[u8]) -> std::result::Result<(ClickStream, ClickHeader), String> {
    let mut pos = BINARY_MAGIC.len();
    let mut take = |n: usize| -> std::result::Result<&[u8], String> {
        let slice = bytes
            .get(pos..pos + n)
            .ok_or_else(|| "truncated binary click file".to_string())?;
        pos += n;
        Ok(slice)
    };
    let span_ps = i64::from_le_bytes(take(8)?.try_into().unwrap());
    let seed = u64::from_le_bytes(take(8)?.try_into().unwrap());
    let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let mut strings = Vec::with_capacity(2);
    for _ in 0..2 {
        let len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let s = std::str::from_utf8(take(len)?).map_err(|e| e.to_string())?;
        strings.push(s.to_string());
    }
    let mut timestamps = Vec::with_capacity(count);
    for _ in 0..count {
        timestamps.push(i64::from_le_bytes(take(8)?.try_into().unwrap()));
    }
    let channel = strings.remove(0);
    let config_hash = strings.remove(0);
    Ok((
        ClickStream {
            channel,
            timestamps,
            span_ps,
            true_clicks: 0,
            dark_clicks: 0,
        },
        ClickHeader { seed, config_hash },
    ))
}

/// Write `stream` to any writer in the text format.
pub fn write_text<W: Write>(mut w: W, stream: &ClickStream, header: &ClickHeader) -> io::Result<()> {
    w.write_all(encode_text(stream, header).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> (ClickStream, ClickHeader) {
        (
            ClickStream {
                channel: "idler".into(),
                timestamps: vec![0, 5, 17, 1_000_000],
                span_ps: 2_000_000,
                true_clicks: 3,
                dark_clicks: 1,
            },
            ClickHeader {
                seed: 99,
                config_hash: "abc123".into(),
            },
        )
    }

    #[test]
    fn text_layout() {
        let (s, h) = sample();
        let text = encode_text(&s, &h);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TEXT_MAGIC);
        assert_eq!(lines[1], "# channel=idler");
        assert_eq!(lines[4], "# config_hash=abc123");
        assert_eq!(&lines[5..], &["0", "5", "17", "1000000"]);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.txt");
        fs::write(&p, "# franson-clicks v1\n# span_ps=10\n12\nfoo\n").unwrap();
        let err = read_clicks(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        fs::write(&p, "").unwrap();
        assert!(read_clicks(&p).is_err());
        fs::write(&p, b"FRCLICK1\x01\x02").unwrap();
        assert!(read_clicks(&p).is_err());
    }

    proptest! {
        #[test]
        fn both_formats_round_trip(mut ts in proptest::collection::vec(0i64..1_000_000_000, 0..200), seed in any::<u64>(), bin in any::<bool>()) {
            ts.sort_unstable();
            ts.dedup();
            let stream = ClickStream { channel: "signal".into(), timestamps: ts, span_ps: 1_000_000_000, true_clicks: 0, dark_clicks: 0 };
            let header = ClickHeader { seed, config_hash: "h".into() };
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("c");
            let fmt = if bin { ClickFormat::Binary } else { ClickFormat::Text };
            write_clicks(&p, &stream, &header, fmt).unwrap();
            let (back, hb) = read_clicks(&p).unwrap();
            prop_assert_eq!(back, stream);
            prop_assert_eq!(hb, header);
        }
    }
}
