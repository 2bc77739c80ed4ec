//! CSV and JSON emission. Every float is written with 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

/// Version of the summary JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text with a header row.
pub fn csv(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| float(c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Indented JSON with full-precision floats and a trailing newline.
pub fn json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, PrettyFull::default());
    value.serialize(&mut ser).expect("value serializes");
    let mut s = String::from_utf8(out).expect("UTF-8 JSON");
    s.push('\n');
    s
}

/// `PrettyFormatter` layout with [`FullPrecision`] floats.
#[derive(Default)]
struct PrettyFull {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(writer $(, $arg)*)
        })*
    };
}

impl Formatter for PrettyFull {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        FullPrecision.write_f64(writer, value)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}
