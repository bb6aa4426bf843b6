//! Report and trajectory writers.
//!
//! Floats in JSON are written with 17 significant digits in exponent form so
//! that identical runs give byte-identical files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ckstab::dynamics::Trajectory;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

struct FixedDigits<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
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
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// CSV `t,x1,...,xd,norm` of the real parts (imaginary parts of real
/// systems vanish).
pub fn trajectory_csv(tr: &Trajectory) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=tr.dim()).map(|i| format!("x{i}")));
    header.push("norm".into());
    w.write_record(&header)?;
    for ((t, s), n) in tr.t_nodes.iter().zip(&tr.states).zip(tr.norms()) {
        let mut row = vec![format!("{t:.16e}")];
        row.extend(s.iter().map(|z| format!("{:.16e}", z.re)));
        row.push(format!("{n:.16e}"));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("CSV of ASCII numbers"))
}

/// `t,value` CSV.
pub fn series_csv(t: &[f64], v: &[f64], column: &str) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", column])?;
    for (t, v) in t.iter().zip(v) {
        w.write_record([format!("{t:.16e}"), format!("{v:.16e}")])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("CSV of ASCII numbers"))
}

/// Artifact directory: `CKSTAB_OUT` wins over `--out`; none means stdout only.
#[derive(Debug, Clone)]
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        let env = std::env::var_os("CKSTAB_OUT").filter(|v| !v.is_empty()).map(PathBuf::from);
        Self { dir: env.or(out) }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn write(&self, name: &str, contents: &str) -> io::Result<Option<PathBuf>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, contents)?;
        Ok(Some(path))
    }
}
