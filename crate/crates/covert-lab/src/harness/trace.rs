//! Trace file I/O.
//!
//! Traces are CSV with the exact header `index,timestamp_s,source`: 1-based
//! index, timestamp in seconds with 17 significant digits (so the f64
//! round-trips bit-exactly), and source `jack` or `alice`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::renewal::{Packet, PacketStream, Source};

pub const TRACE_HEADER: &str = "index,timestamp_s,source";

/// Renders a stream in the trace format.
pub fn trace_to_string(stream: &PacketStream) -> String {
    let mut out = String::with_capacity(32 * stream.len() + 32);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (i, p) in stream.packets().iter().enumerate() {
        writeln!(out, "{},{:.16e},{}", i + 1, p.time, p.source).expect("string write");
    }
    out
}

/// Writes a stream to `path` in the trace format.
pub fn write_trace(stream: &PacketStream, path: &Path) -> Result<()> {
    fs::write(path, trace_to_string(stream)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses trace text; `origin` names the source in errors.
pub fn parse_trace(text: &str, origin: &str) -> Result<PacketStream> {
    let err = |line: usize, detail: String| Error::TraceParse {
        path: origin.to_string(),
        line,
        detail,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == TRACE_HEADER => {}
        Some((_, header)) => {
            return Err(err(1, format!("expected header `{TRACE_HEADER}`, got `{header}`")));
        }
        None => return Err(err(1, "empty file, expected header".into())),
    }
    let mut packets = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (index, time, source) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), Some(c), None) => (a, b, c),
            _ => return Err(err(line_no, "expected 3 comma-separated fields".into())),
        };
        let index: usize = index
            .parse()
            .map_err(|_| err(line_no, format!("bad index `{index}`")))?;
        if index != packets.len() + 1 {
            return Err(err(
                line_no,
                format!("index {index} out of order, expected {}", packets.len() + 1),
            ));
        }
        let time: f64 = time
            .parse()
            .map_err(|_| err(line_no, format!("bad timestamp `{time}`")))?;
        let source = match source {
            "jack" => Source::Jack,
            "alice" => Source::Alice,
            other => return Err(err(line_no, format!("bad source tag `{other}`"))),
        };
        packets.push(Packet { time, source });
    }
    PacketStream::new(packets, None).map_err(|e| match e {
        Error::UnorderedStream { index, detail } => err(index + 2, detail),
        other => other,
    })
}

/// Reads a trace file.
pub fn read_trace(path: &Path) -> Result<PacketStream> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trace(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{sample_stream, IpdDistribution, StopRule};

    #[test]
    fn round_trip_is_exact() {
        let d = IpdDistribution::gamma(2.0, 0.5).unwrap();
        let s = sample_stream(&d, StopRule::Count(500), 41).unwrap();
        let text = trace_to_string(&s);
        let back = parse_trace(&text, "mem").unwrap();
        // Bit-exact timestamps and identical tags.
        assert_eq!(back.packets(), s.packets());
    }

    #[test]
    fn header_only_is_empty_stream() {
        let s = parse_trace("index,timestamp_s,source\n", "mem").unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn malformed_source_names_line() {
        let text = "index,timestamp_s,source\n1,1.0,jack\n2,2.0,mallory\n";
        let e = parse_trace(text, "mem").unwrap_err();
        match e {
            Error::TraceParse { line, detail, .. } => {
                assert_eq!(line, 3);
                assert!(detail.contains("mallory"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_header_and_bad_index_rejected() {
        assert!(parse_trace("time,src\n", "mem").is_err());
        let text = "index,timestamp_s,source\n2,1.0,jack\n";
        assert!(matches!(
            parse_trace(text, "mem"),
            Err(Error::TraceParse { line: 2, .. })
        ));
    }

    #[test]
    fn disorder_is_reported_with_line() {
        let text = "index,timestamp_s,source\n1,2.0,jack\n2,1.0,jack\n";
        match parse_trace(text, "mem").unwrap_err() {
            Error::TraceParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let d = IpdDistribution::exponential(1.0).unwrap();
        let s = sample_stream(&d, StopRule::Horizon(50.0), 7).unwrap();
        write_trace(&s, &path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back.packets(), s.packets());
    }
}
