//! JSON serialization with 17-significant-digit floats.
//!
//! The default serializer prints shortest-round-trip numbers; reports here
//! pin the width instead so that every double is written with full
//! precision in scientific notation, e.g. `2.4935220799887082e-1`.

use serde::Serialize;
use serde_json::ser::Formatter;

struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{:.16e}", value as f64)
    }
}

/// Serialize to a JSON string with fixed-precision floats.
pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes valid UTF-8"))
}
