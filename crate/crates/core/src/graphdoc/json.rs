//! Byte-stable JSON: pretty layout, struct-order keys and six-digit floats.
//!
//! Floats print with six decimals (`0.250000`). Magnitudes that would lose all
//! significant digits that way (below 1e-4) or are very large print in scientific
//! form with a six-digit mantissa (`3.200000e-9`). Either form re-parses to a value
//! that prints identically, so parse → export is a fixed point.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub(crate) fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0.000000".to_string();
    }
    let sci = format!("{v:.6e}");
    let rounded: f64 = sci.parse().expect("formatted float parses");
    if (1e-4..1e9).contains(&rounded.abs()) {
        format!("{v:.6}")
    } else {
        sci
    }
}

struct FixedFloats {
    inner: PrettyFormatter<'static>,
}

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_key(w)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_stable_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        FixedFloats {
            inner: PrettyFormatter::new(),
        },
    );
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    out.push(b'\n');
    out
}
