//! Token escaping shared by the TSV and embedding text formats.
//!
//! Whitespace and control characters cannot appear verbatim in a
//! whitespace- or tab-separated field, so they are written as `U+XXXX`
//! (at least four upper-case hex digits). Every other token is written
//! as-is.

/// Escape a single-character token for use in a text field.
pub fn escape_token(c: char) -> String {
    if c.is_whitespace() || c.is_control() {
        format!("U+{:04X}", c as u32)
    } else {
        c.to_string()
    }
}

/// Inverse of [`escape_token`]. Returns `None` unless the field denotes
/// exactly one Unicode scalar value.
pub fn unescape_token(field: &str) -> Option<char> {
    let mut chars = field.chars();
    let first = chars.next()?;
    if chars.next().is_none() {
        return Some(first);
    }
    let hex = field.strip_prefix("U+")?;
    if hex.len() < 4 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
}
