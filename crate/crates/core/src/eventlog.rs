//! Line-delimited JSON interchange for cascade events.
//!
//! One event object per line:
//! `{"event_id":..,"item_id":..,"group":[..],"votes":[{"user":..,"value":0|1,"ts":..}]}`

use std::io::{BufRead, Write};

use crate::cascade::CascadeEvent;
use crate::error::{Error, Result};

/// Writes events one per line. Nothing is written for an empty slice.
pub fn write_events<W: Write>(mut out: W, events: &[CascadeEvent]) -> Result<()> {
    for event in events {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn events_to_string(events: &[CascadeEvent]) -> String {
    let mut buf = Vec::new();
    write_events(&mut buf, events).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Reads and validates events; blank lines are skipped.
pub fn read_events<R: BufRead>(input: R) -> Result<Vec<CascadeEvent>> {
    let mut events = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: CascadeEvent =
            serde_json::from_str(&line).map_err(|source| Error::Parse { line: idx + 1, source })?;
        event.validate()?;
        events.push(event);
    }
    Ok(events)
}

pub fn parse_events(text: &str) -> Result<Vec<CascadeEvent>> {
    read_events(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"event_id":"e1","item_id":"i1","group":["a","b"],"votes":[{"user":"a","value":1,"ts":10},{"user":"b","value":0,"ts":20}]}"#;

    #[test]
    fn parses_and_reemits_identical_text() {
        let text = format!("{LINE}\n\n");
        let events = parse_events(&text).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events_to_string(&events), format!("{LINE}\n"));
    }

    #[test]
    fn empty_input_is_empty_log() {
        assert!(parse_events("").unwrap().is_empty());
        assert_eq!(events_to_string(&[]), "");
    }

    #[test]
    fn reports_line_numbers_and_invalid_order() {
        let err = parse_events(&format!("{LINE}\nnot json\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let swapped = LINE.replace("\"ts\":20", "\"ts\":5");
        assert!(matches!(parse_events(&swapped), Err(Error::InvalidEvent { .. })));
    }
}
