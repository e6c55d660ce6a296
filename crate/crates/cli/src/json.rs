//! Deterministic JSON emission: keys sorted, every float printed with 17
//! significant digits. Identical values serialize to identical bytes.

use std::io;

use serde::Serialize;

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        // 1 leading digit + 16 decimals = 17 significant digits.
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with sorted keys (via `serde_json::Value`, whose map is a
/// BTreeMap) and fixed float formatting.
pub fn to_deterministic_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let value = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}
