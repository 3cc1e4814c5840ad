//! Flag-echo metadata. Every output file embeds a machine-readable record
//! of the command and its fully resolved flag set, so any artifact can be
//! traced back to the invocation that produced it.

use serde::Serialize;

/// Metadata as a JSON value, for embedding in JSON documents.
pub(crate) fn metadata_value<T: Serialize>(command: &str, flags: &T) -> serde_json::Value {
    serde_json::json!({ "command": command, "flags": flags })
}

/// Metadata as a single JSON line, for `#` comment headers in CSV and PGM
/// files.
pub(crate) fn metadata_line<T: Serialize>(command: &str, flags: &T) -> String {
    serde_json::to_string(&metadata_value(command, flags)).expect("flag metadata serializes")
}
