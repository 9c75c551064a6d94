//! Messages and their one-line text encoding.

use serde::{Deserialize, Serialize};
use xslice_core::{Allocation, KpmRecord, SliceSpec};

use crate::error::DecodeError;

/// Message variants understood by this version of the protocol.
pub const VARIANTS: [&str; 5] = ["subscribe", "kpm_report", "slice_command", "ack", "bye"];

/// One protocol message. On the wire it is a JSON object with a `type`
/// discriminator followed by the variant's fields in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum E2Message {
    /// Sent once by the xApp to start the report stream.
    Subscribe {
        period_ms: u64,
    },
    KpmReport {
        round: u64,
        records: Vec<KpmRecord>,
        /// Hex digest of the slice configuration the RAN runs with.
        slice_digest: String,
    },
    /// Answer to the report of the same round.
    SliceCommand {
        round: u64,
        allocation: Allocation,
    },
    Ack {
        round: u64,
    },
    Bye {},
}

impl E2Message {
    pub fn kind(&self) -> &'static str {
        match self {
            E2Message::Subscribe { .. } => "subscribe",
            E2Message::KpmReport { .. } => "kpm_report",
            E2Message::SliceCommand { .. } => "slice_command",
            E2Message::Ack { .. } => "ack",
            E2Message::Bye {} => "bye",
        }
    }

    pub fn round(&self) -> Option<u64> {
        match self {
            E2Message::KpmReport { round, .. }
            | E2Message::SliceCommand { round, .. }
            | E2Message::Ack { round } => Some(*round),
            _ => None,
        }
    }
}

/// FNV-1a over the JSON form of the slice specs, as 16 hex digits.
pub fn slice_digest(specs: &[SliceSpec]) -> String {
    let text = serde_json::to_string(specs).expect("slice specs serialize");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// One line of UTF-8 JSON terminated by `\n`.
pub fn encode(msg: &E2Message) -> Vec<u8> {
    let mut out = serde_json::to_vec(msg).expect("messages serialize");
    debug_assert!(!out.contains(&b'\n'));
    out.push(b'\n');
    out
}

/// Decodes one line; a single trailing `\n` (or `\r\n`) is accepted.
pub fn decode(bytes: &[u8]) -> Result<E2Message, DecodeError> {
    let line = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    if let Some(pos) = line.iter().position(|&b| b == b'\n') {
        return Err(DecodeError::Malformed {
            offset: pos,
            reason: "interior newline".into(),
        });
    }
    let value: serde_json::Value =
        serde_json::from_slice(line).map_err(|e| DecodeError::Malformed {
            offset: byte_offset(line, e.line(), e.column()),
            reason: e.to_string(),
        })?;
    if let Some(serde_json::Value::String(kind)) = value.get("type") {
        if !VARIANTS.contains(&kind.as_str()) {
            return Err(DecodeError::Unsupported(kind.clone()));
        }
    }
    // Well-formed JSON of the wrong shape: the whole object is at fault.
    serde_json::from_value(value).map_err(|e| DecodeError::Malformed {
        offset: 0,
        reason: e.to_string(),
    })
}

/// Converts serde_json's 1-based line/column into a byte offset.
fn byte_offset(line: &[u8], row: usize, col: usize) -> usize {
    if row <= 1 {
        return col.saturating_sub(1).min(line.len());
    }
    let mut seen = 1;
    for (i, b) in line.iter().enumerate() {
        if *b == b'\n' {
            seen += 1;
            if seen == row {
                return (i + col).min(line.len());
            }
        }
    }
    line.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ack_is_short_and_round_trips() {
        let bytes = encode(&E2Message::Ack { round: 0 });
        assert_eq!(bytes, b"{\"type\":\"ack\",\"round\":0}\n");
        assert_eq!(decode(&bytes).unwrap(), E2Message::Ack { round: 0 });
    }

    #[test]
    fn bye_has_no_fields() {
        let bytes = encode(&E2Message::Bye {});
        assert_eq!(bytes, b"{\"type\":\"bye\"}\n");
        assert_eq!(decode(&bytes).unwrap(), E2Message::Bye {});
    }

    #[test]
    fn unknown_fields_are_dropped() {
        let msg = decode(br#"{"type":"ack","round":4,"extra":[1,2]}"#).unwrap();
        assert_eq!(msg, E2Message::Ack { round: 4 });
        assert_eq!(encode(&msg), b"{\"type\":\"ack\",\"round\":4}\n");
    }

    #[test]
    fn unknown_variant_is_unsupported() {
        let err = decode(br#"{"type":"handover","round":1}"#).unwrap_err();
        assert!(matches!(err, DecodeError::Unsupported(ref k) if k == "handover"));
    }

    #[test]
    fn truncated_line_reports_offset() {
        let full = encode(&E2Message::SliceCommand {
            round: 3,
            allocation: Allocation::from_counts(&[10, 20]),
        });
        let cut = &full[..full.len() / 2];
        match decode(cut).unwrap_err() {
            DecodeError::Malformed { offset, .. } => assert!(offset <= cut.len()),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn syntax_error_points_into_the_line() {
        let line = br#"{"type":"ack","round":1x}"#;
        match decode(line).unwrap_err() {
            DecodeError::Malformed { offset, .. } => assert_eq!(offset, 23),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn wrong_field_type_is_malformed() {
        match decode(br#"{"type":"ack","round":"x"}"#).unwrap_err() {
            DecodeError::Malformed { offset, .. } => assert_eq!(offset, 0),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn digest_depends_on_specs() {
        let a = SliceSpec::new(0, 10.0, 100.0, 0.1, Default::default()).unwrap();
        let mut b = a.clone();
        b.throughput_mbps = 11.0;
        assert_eq!(slice_digest(std::slice::from_ref(&a)).len(), 16);
        assert_ne!(slice_digest(&[a]), slice_digest(&[b]));
    }
}
