//! CSV formats for kernel triangles, solver traces and snapshots.
//!
//! Floats are written with 17 significant digits so every file round-trips
//! bit for bit through the matching reader.

use std::io::{Read, Write};

use serde::Deserialize;

use crate::solvers::{GridFunction, SolverTrace, TraceRecord};
use crate::triangle::Triangle;
use crate::{Error, Result};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn flush<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
    Ok(())
}

/// `n,j,value` rows in lexicographic order.
pub fn write_triangle_csv<W: Write>(out: W, t: &Triangle) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "j", "value"]).map_err(csv_err)?;
    for (n, j, v) in t.entries() {
        w.write_record([n.to_string(), j.to_string(), fmt(v)]).map_err(csv_err)?;
    }
    flush(w)
}

/// `kind,n,j,value` rows, one block per named triangle.
pub fn write_kinded_csv<W: Write>(out: W, blocks: &[(&str, &Triangle)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "n", "j", "value"]).map_err(csv_err)?;
    for (kind, t) in blocks {
        for (n, j, v) in t.entries() {
            w.write_record([kind.to_string(), n.to_string(), j.to_string(), fmt(v)]).map_err(csv_err)?;
        }
    }
    flush(w)
}

#[derive(Deserialize)]
struct Entry {
    n: usize,
    j: usize,
    value: f64,
}

#[derive(Deserialize)]
struct KindedEntry {
    kind: String,
    n: usize,
    j: usize,
    value: f64,
}

/// Rebuild a triangle from lexicographically ordered, complete entries.
fn assemble(entries: &[(usize, usize, f64)]) -> Result<Triangle> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for &(n, j, v) in entries {
        if j == 0 {
            if n != rows.len() + 1 {
                return Err(Error::Parse(format!("row {n} out of order")));
            }
            rows.push(Vec::with_capacity(n));
        }
        let count = rows.len();
        match rows.last_mut() {
            Some(row) if count == n && row.len() == j => row.push(v),
            _ => return Err(Error::Parse(format!("unexpected entry ({n}, {j})"))),
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty triangle".into()));
    }
    Triangle::from_rows(rows)
}

pub fn read_triangle_csv<R: Read>(input: R) -> Result<Triangle> {
    let mut r = csv::Reader::from_reader(input);
    let entries = r
        .deserialize::<Entry>()
        .map(|e| e.map(|e| (e.n, e.j, e.value)).map_err(csv_err))
        .collect::<Result<Vec<_>>>()?;
    assemble(&entries)
}

/// Named triangles in order of first appearance.
pub fn read_kinded_csv<R: Read>(input: R) -> Result<Vec<(String, Triangle)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut groups: Vec<(String, Vec<(usize, usize, f64)>)> = Vec::new();
    for e in r.deserialize::<KindedEntry>() {
        let e = e.map_err(csv_err)?;
        match groups.iter_mut().find(|(k, _)| *k == e.kind) {
            Some((_, list)) => list.push((e.n, e.j, e.value)),
            None => groups.push((e.kind, vec![(e.n, e.j, e.value)])),
        }
    }
    groups.into_iter().map(|(k, list)| Ok((k, assemble(&list)?))).collect()
}

/// `n,t,linf,l2,energy,bound`; absent values are empty fields.
pub fn write_trace_csv<W: Write>(out: W, trace: &SolverTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "t", "linf", "l2", "energy", "bound"]).map_err(csv_err)?;
    for r in &trace.records {
        w.write_record([r.n.to_string(), fmt(r.t), fmt(r.linf), fmt(r.l2), fmt_opt(r.energy), fmt_opt(r.bound)])
            .map_err(csv_err)?;
    }
    flush(w)
}

#[derive(Deserialize)]
struct TraceRow {
    n: usize,
    t: f64,
    linf: f64,
    l2: f64,
    energy: Option<f64>,
    bound: Option<f64>,
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<TraceRow>()
        .map(|row| {
            let row = row.map_err(csv_err)?;
            Ok(TraceRecord { n: row.n, t: row.t, linf: row.linf, l2: row.l2, energy: row.energy, bound: row.bound })
        })
        .collect()
}

/// `n,i,u` for every state in the trace.
pub fn write_snapshots_csv<W: Write>(out: W, trace: &SolverTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "i", "u"]).map_err(csv_err)?;
    for (n, u) in trace.states.iter().enumerate() {
        for (i, v) in u.values().iter().enumerate() {
            w.write_record([n.to_string(), i.to_string(), fmt(*v)]).map_err(csv_err)?;
        }
    }
    flush(w)
}

#[derive(Deserialize)]
struct SnapshotRow {
    n: usize,
    i: usize,
    u: f64,
}

pub fn read_snapshots_csv<R: Read>(input: R) -> Result<Vec<GridFunction>> {
    let mut r = csv::Reader::from_reader(input);
    let mut states: Vec<Vec<f64>> = Vec::new();
    for row in r.deserialize::<SnapshotRow>() {
        let row = row.map_err(csv_err)?;
        if row.i == 0 {
            if row.n != states.len() {
                return Err(Error::Parse(format!("snapshot {} out of order", row.n)));
            }
            states.push(Vec::new());
        }
        let count = states.len();
        match states.last_mut() {
            Some(s) if count == row.n + 1 && s.len() == row.i => s.push(row.u),
            _ => return Err(Error::Parse(format!("unexpected snapshot entry ({}, {})", row.n, row.i))),
        }
    }
    Ok(states.into_iter().map(GridFunction).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_triangle() -> Triangle {
        Triangle::from_rows(vec![vec![0.1], vec![1.0 / 3.0, -2e-300], vec![std::f64::consts::PI, 0.0, -7.25]]).unwrap()
    }

    #[test]
    fn triangle_round_trip_is_exact() {
        let t = sample_triangle();
        let mut buf = Vec::new();
        write_triangle_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,j,value\n1,0,1.0000000000000001e-1\n"));
        assert_eq!(read_triangle_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn kinded_round_trip() {
        let a = sample_triangle();
        let b = Triangle::from_rows(vec![vec![2.0], vec![3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        write_kinded_csv(&mut buf, &[("a", &a), ("theta", &b)]).unwrap();
        let back = read_kinded_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![("a".to_string(), a), ("theta".to_string(), b)]);
    }

    #[test]
    fn malformed_triangle_rejected() {
        assert!(read_triangle_csv("n,j,value\n1,0,1.0\n2,1,1.0\n".as_bytes()).is_err());
        assert!(read_triangle_csv("n,j,value\n1,0,abc\n".as_bytes()).is_err());
        assert!(read_triangle_csv("n,j,value\n".as_bytes()).is_err());
    }

    #[test]
    fn trace_round_trip_with_missing_fields() {
        let trace = SolverTrace {
            records: vec![
                TraceRecord { n: 0, t: 0.0, linf: 1.0, l2: 0.5, energy: Some(0.25), bound: None },
                TraceRecord { n: 1, t: 0.1, linf: 0.9, l2: 0.4, energy: None, bound: Some(1.0 / 3.0) },
            ],
            states: vec![GridFunction(vec![1.0, -0.5, 0.25]), GridFunction(vec![0.9, -0.4, 1e-17])],
        };
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &trace).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("n,t,linf,l2,energy,bound\n"));
        assert_eq!(read_trace_csv(buf.as_slice()).unwrap(), trace.records);
        let mut snap = Vec::new();
        write_snapshots_csv(&mut snap, &trace).unwrap();
        assert_eq!(read_snapshots_csv(snap.as_slice()).unwrap(), trace.states);
    }
}
