use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

/// Compact JSON with every float written as `{:.16e}` (17 significant digits).
struct SciFloats;

impl Formatter for SciFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFloats);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v > 0.0 {
        "inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

/// CSV text: `# key: value` header lines, then the header row and records.
pub fn to_csv(comments: &[(String, String)], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (k, v) in comments {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields"));
    out
}
