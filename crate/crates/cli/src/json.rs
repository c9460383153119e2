//! JSON output with every float written to 17 significant digits.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub const SCHEMA_VERSION: u32 = 1;

/// Pretty-printing formatter that delegates everything except floats.
struct Precise<'a> {
    inner: PrettyFormatter<'a>,
}

fn write_precise<W: ?Sized + Write>(w: &mut W, v: f64) -> io::Result<()> {
    // serde_json turns NaN and infinities into null before reaching here
    write!(w, "{v:.16e}")
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_precise(w, v)
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_precise(w, f64::from(v))
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let fmt = Precise {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_file<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let text = to_string(value).map_err(io::Error::other)?;
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let text = to_string(&serde_json::json!({"x": 0.1, "y": [1.0, f64::NAN], "n": 3})).unwrap();
        assert!(text.contains("1.0000000000000001e-1"));
        assert!(text.contains("1.0000000000000000e0"));
        assert!(text.contains("null"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
        assert_eq!(back["n"].as_u64(), Some(3));
        let pretty = to_string(&serde_json::json!({"a": [2.5]})).unwrap();
        assert!(pretty.contains("2.5000000000000000e0"));
        assert!(pretty.contains('\n'));
    }
}
