//! File formats.
//!
//! Fields are stored as a header `d, n, dx` followed by row-major complex
//! samples, either as CSV (`d,n,dx` line, then one `re,im` line per sample)
//! or little-endian binary (`u32 d`, `u32 n`, `f64 dx`, then `f64` pairs).
//! Time-frequency fields carry two headers: position grid, then frequency grid.
//! The format is chosen from the file extension: `.csv` or anything else for binary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Grid, SampledField};
use crate::norms::NormRecord;
use crate::tfa::TimeFrequencyField;

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Config(format!("malformed field file: {}", msg.into()))
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn csv_error(e: csv::Error) -> Error {
    parse_err(e.to_string())
}

fn read_csv_rows<R: Read>(r: R) -> Result<Vec<csv::StringRecord>> {
    csv_reader(r)
        .records()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_error)
}

fn grid_from_row(row: &csv::StringRecord) -> Result<Grid> {
    if row.len() != 3 {
        return Err(parse_err("grid header needs d,n,dx"));
    }
    let d = row[0].parse().map_err(|_| parse_err("d"))?;
    let n = row[1].parse().map_err(|_| parse_err("n"))?;
    let dx = row[2].parse().map_err(|_| parse_err("dx"))?;
    Grid::new(d, n, dx)
}

fn complex_rows(rows: &[csv::StringRecord]) -> Result<Vec<Complex64>> {
    rows.iter()
        .map(|r| {
            if r.len() != 2 {
                return Err(parse_err("sample rows need re,im"));
            }
            let re = r[0].parse().map_err(|_| parse_err(&r[0]))?;
            let im = r[1].parse().map_err(|_| parse_err(&r[1]))?;
            Ok(Complex64::new(re, im))
        })
        .collect()
}

fn write_csv_header<W: Write>(w: &mut W, g: &Grid) -> Result<()> {
    writeln!(w, "{},{},{}", g.d, g.n, g.dx)?;
    Ok(())
}

fn write_csv_values<W: Write>(w: &mut W, values: &[Complex64]) -> Result<()> {
    for v in values {
        // `{:?}` is the shortest exact round-trip form, `{}` spells out tiny values
        writeln!(w, "{:?},{:?}", v.re, v.im)?;
    }
    Ok(())
}

pub fn write_field_csv<W: Write>(mut w: W, f: &SampledField) -> Result<()> {
    write_csv_header(&mut w, &f.grid)?;
    write_csv_values(&mut w, &f.values)?;
    Ok(())
}

pub fn read_field_csv<R: Read>(r: R) -> Result<SampledField> {
    let rows = read_csv_rows(r)?;
    let (head, rest) = rows.split_first().ok_or_else(|| parse_err("empty file"))?;
    SampledField::new(grid_from_row(head)?, complex_rows(rest)?)
}

fn write_binary_header<W: Write>(w: &mut W, g: &Grid) -> Result<()> {
    w.write_all(&(g.d as u32).to_le_bytes())?;
    w.write_all(&(g.n as u32).to_le_bytes())?;
    w.write_all(&g.dx.to_le_bytes())?;
    Ok(())
}

fn write_binary_values<W: Write>(w: &mut W, values: &[Complex64]) -> Result<()> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_binary_header<R: Read>(r: &mut R) -> Result<Grid> {
    let d = read_u32(r)? as usize;
    let n = read_u32(r)? as usize;
    let dx = read_f64(r)?;
    Grid::new(d, n, dx)
}

fn read_binary_values<R: Read>(r: &mut R, count: usize) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        out.push(Complex64::new(re, im));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(parse_err("trailing bytes"));
    }
    Ok(out)
}

pub fn write_field_binary<W: Write>(mut w: W, f: &SampledField) -> Result<()> {
    write_binary_header(&mut w, &f.grid)?;
    write_binary_values(&mut w, &f.values)
}

pub fn read_field_binary<R: Read>(mut r: R) -> Result<SampledField> {
    let grid = read_binary_header(&mut r)?;
    let values = read_binary_values(&mut r, grid.len())?;
    SampledField::new(grid, values)
}

pub fn save_field(path: &Path, f: &SampledField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        write_field_csv(&mut w, f)?;
    } else {
        write_field_binary(&mut w, f)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<SampledField> {
    let r = BufReader::new(File::open(path)?);
    if is_csv(path) {
        read_field_csv(r)
    } else {
        read_field_binary(r)
    }
}

pub fn write_tf_csv<W: Write>(mut w: W, t: &TimeFrequencyField) -> Result<()> {
    write_csv_header(&mut w, &t.position_grid)?;
    write_csv_header(&mut w, &t.frequency_grid)?;
    write_csv_values(&mut w, &t.values)
}

pub fn read_tf_csv<R: Read>(r: R) -> Result<TimeFrequencyField> {
    let rows = read_csv_rows(r)?;
    if rows.len() < 2 {
        return Err(parse_err("missing grid headers"));
    }
    let pos = grid_from_row(&rows[0])?;
    let freq = grid_from_row(&rows[1])?;
    TimeFrequencyField::new(pos, freq, complex_rows(&rows[2..])?)
}

pub fn write_tf_binary<W: Write>(mut w: W, t: &TimeFrequencyField) -> Result<()> {
    write_binary_header(&mut w, &t.position_grid)?;
    write_binary_header(&mut w, &t.frequency_grid)?;
    write_binary_values(&mut w, &t.values)
}

pub fn read_tf_binary<R: Read>(mut r: R) -> Result<TimeFrequencyField> {
    let pos = read_binary_header(&mut r)?;
    let freq = read_binary_header(&mut r)?;
    let values = read_binary_values(&mut r, pos.len() * freq.len())?;
    TimeFrequencyField::new(pos, freq, values)
}

pub fn save_tf(path: &Path, t: &TimeFrequencyField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        write_tf_csv(&mut w, t)?;
    } else {
        write_tf_binary(&mut w, t)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_tf(path: &Path) -> Result<TimeFrequencyField> {
    let r = BufReader::new(File::open(path)?);
    if is_csv(path) {
        read_tf_csv(r)
    } else {
        read_tf_binary(r)
    }
}

/// Serializes flat records as CSV with a header row.
pub fn write_csv_records<W: Write, T: Serialize>(w: W, records: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Writes records as JSON (`.json`) or CSV (anything else).
pub fn save_norm_records(path: &Path, records: &[NormRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let json = path.extension().and_then(|e| e.to_str()) == Some("json");
    if json {
        write_json(&mut w, records)?;
    } else {
        write_csv_records(&mut w, records)?;
    }
    w.flush()?;
    Ok(())
}
