//! CSV readers and writers for point clouds, couplings and dual potentials.
//!
//! Point clouds have a header `x0,x1,...` with an optional trailing `weight`
//! column and one point per row. Couplings are rows `i,j,mass`; duals are rows
//! `side,index,value` with side `u` (source) or `v` (target). Numbers are
//! written in shortest round-trip form, so a write followed by a read
//! reproduces every value exactly.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::discrete_it::{Coupling, DualSolution};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

fn parse_f64(field: &str, line: u64, what: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Format(format!("line {line}: {what} {field:?} is not a number")))
}

fn parse_usize(field: &str, line: u64, what: &str) -> Result<usize> {
    field.trim().parse::<usize>().map_err(|_| Error::Format(format!("line {line}: {what} {field:?} is not an index")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Read a point cloud. Without a `weight` column every point gets mass `1/N`.
pub fn read_point_cloud<R: Read>(reader: R) -> Result<DiscreteMeasure> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let weighted = header.iter().next_back() == Some("weight");
    let dim = header.len() - usize::from(weighted);
    if dim == 0 {
        return Err(Error::Format("point cloud header has no coordinate columns".into()));
    }
    for (k, name) in header.iter().take(dim).enumerate() {
        if name != format!("x{k}") {
            return Err(Error::Format(format!("expected column x{k}, found {name:?}")));
        }
    }
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != header.len() {
            return Err(Error::Format(format!("line {line}: expected {} fields, found {}", header.len(), rec.len())));
        }
        for field in rec.iter().take(dim) {
            coords.push(parse_f64(field, line, "coordinate")?);
        }
        if weighted {
            weights.push(parse_f64(&rec[dim], line, "weight")?);
        }
    }
    let n = coords.len() / dim;
    if n == 0 {
        return Err(Error::EmptyInput("point cloud has no rows"));
    }
    if !weighted {
        weights = vec![1.0 / n as f64; n];
    }
    DiscreteMeasure::from_flat(dim, coords, weights)
}

pub fn load_point_cloud(path: &Path) -> Result<DiscreteMeasure> {
    read_point_cloud(std::fs::File::open(path)?)
}

fn header(dim: usize, weighted: bool) -> Vec<String> {
    let mut h: Vec<String> = (0..dim).map(|k| format!("x{k}")).collect();
    if weighted {
        h.push("weight".into());
    }
    h
}

/// Write a measure with its weights.
pub fn write_point_cloud<W: Write>(measure: &DiscreteMeasure, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(measure.dim(), true))?;
    for (p, m) in measure.points().zip(measure.weights()) {
        let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        row.push(m.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write bare points, one per row, without a weight column.
pub fn write_points<W: Write>(points: &Array2<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(points.ncols(), false))?;
    for r in points.rows() {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_point_cloud(measure: &DiscreteMeasure, path: &Path) -> Result<()> {
    write_point_cloud(measure, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn save_points(points: &Array2<f64>, path: &Path) -> Result<()> {
    write_points(points, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn write_coupling<W: Write>(cpl: &Coupling, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "mass"])?;
    for &(i, j, m) in &cpl.entries {
        w.write_record([i.to_string(), j.to_string(), m.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_coupling(cpl: &Coupling, path: &Path) -> Result<()> {
    write_coupling(cpl, std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Read `(i, j, mass)` triples. Masses must be finite and non-negative.
pub fn read_coupling<R: Read>(reader: R) -> Result<Vec<(usize, usize, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["i", "j", "mass"] {
        return Err(Error::Format(format!("coupling header must be i,j,mass, found {:?}", header.as_slice())));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(Error::Format(format!("line {line}: expected 3 fields, found {}", rec.len())));
        }
        let i = parse_usize(&rec[0], line, "row index")?;
        let j = parse_usize(&rec[1], line, "column index")?;
        let m = parse_f64(&rec[2], line, "mass")?;
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::Format(format!("line {line}: mass {m} must be finite and non-negative")));
        }
        out.push((i, j, m));
    }
    Ok(out)
}

pub fn load_coupling(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    read_coupling(std::fs::File::open(path)?)
}

pub fn write_dual<W: Write>(dual: &DualSolution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["side", "index", "value"])?;
    for (side, values) in [("u", &dual.u), ("v", &dual.v)] {
        for (k, val) in values.iter().enumerate() {
            w.write_record([side.to_string(), k.to_string(), val.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_dual(dual: &DualSolution, path: &Path) -> Result<()> {
    write_dual(dual, std::io::BufWriter::new(std::fs::File::create(path)?))
}
