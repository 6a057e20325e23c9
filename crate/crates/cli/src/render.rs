//! Number formatting and the JSON/CSV emitters.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

/// Current JSON schema version.
pub const SCHEMA_VERSION: &str = "1";

/// Banner line naming the tool and version.
pub fn banner() -> String {
    format!("poisson-couple {}", env!("CARGO_PKG_VERSION"))
}

/// 17 significant digits: enough for any `f64` to round-trip.
pub fn machine(x: f64) -> String {
    format!("{x:.16e}")
}

/// 10 significant digits for human-facing tables.
pub fn human(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..10).contains(&exponent) {
        let decimals = (9 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.9e}")
    }
}

/// Compact JSON with every float written by [`machine`].
struct LosslessFloats;

impl Formatter for LosslessFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(machine(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` as one line of JSON, terminated by a newline.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, LosslessFloats);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Writes CSV rows with `\n` line endings.
pub fn to_csv<I, R>(header: &[&str], rows: I) -> csv::Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}
