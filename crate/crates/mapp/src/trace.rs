//! Solution traces: newline-delimited JSON, one record per move, after a
//! header line `{"format":"mapp-trace","version":1}`.
//!
//! ```text
//! {"format":"mapp-trace","version":1}
//! {"step":1,"unit":0,"from":[0,1],"to":[1,1],"kind":"progress"}
//! ```
//!
//! `kind` is `progress`, `blank` (pushed by another unit's blank travel) or
//! `undo`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::engine::{Move, MoveKind};
use crate::error::ParseError;
use crate::grid::Loc;

pub const FORMAT: &str = "mapp-trace";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct Record {
    step: u32,
    unit: u32,
    from: (u32, u32),
    to: (u32, u32),
    kind: MoveKind,
}

pub fn write_trace<W: Write>(mut w: W, moves: &[Move]) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, &Header { format: FORMAT.into(), version: VERSION })?;
    w.write_all(b"\n")?;
    for m in moves {
        let r = Record { step: m.step, unit: m.unit, from: (m.from.x, m.from.y), to: (m.to.x, m.to.y), kind: m.kind };
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(r: R) -> Result<Vec<Move>, ParseError> {
    let mut moves = Vec::new();
    let mut header = false;
    for (i, line) in r.lines().enumerate() {
        let no = i + 1;
        let line = line.map_err(|e| ParseError::new(no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        if !header {
            let h: Header = serde_json::from_str(&line).map_err(|e| ParseError::new(no, format!("bad header: {e}")))?;
            if h.format != FORMAT || h.version != VERSION {
                return Err(ParseError::new(no, format!("unsupported trace {} v{}", h.format, h.version)));
            }
            header = true;
            continue;
        }
        let r: Record = serde_json::from_str(&line).map_err(|e| ParseError::new(no, e.to_string()))?;
        moves.push(Move { unit: r.unit, from: Loc::from(r.from), to: Loc::from(r.to), kind: r.kind, step: r.step });
    }
    if !header {
        return Err(ParseError::new(0, "missing trace header"));
    }
    Ok(moves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let moves = vec![
            Move { unit: 3, from: Loc::new(0, 1), to: Loc::new(1, 1), kind: MoveKind::Progress, step: 1 },
            Move { unit: 4, from: Loc::new(2, 1), to: Loc::new(2, 2), kind: MoveKind::BlankShift, step: 1 },
            Move { unit: 4, from: Loc::new(2, 2), to: Loc::new(2, 1), kind: MoveKind::Undo, step: 1 },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &moves).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"format\":\"mapp-trace\",\"version\":1}\n"));
        assert!(text.contains("{\"step\":1,\"unit\":3,\"from\":[0,1],\"to\":[1,1],\"kind\":\"progress\"}"));
        assert_eq!(read_trace(&buf[..]).unwrap(), moves);
    }

    #[test]
    fn header_is_required() {
        assert!(read_trace(&b""[..]).is_err());
        let err = read_trace(&b"{\"format\":\"other\",\"version\":1}\n"[..]).unwrap_err();
        assert_eq!(err.line, 1);
    }
}
