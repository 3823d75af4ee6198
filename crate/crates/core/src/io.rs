//! Persistence: scattering data CSV with a JSON sidecar, the binary field
//! snapshot, trace and field-slice CSVs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eikonal::CharacteristicTrace;
use crate::error::{Error, Result};
use crate::geometry::MetricModel;
use crate::reduced_system::{GridFunction1D, ScatteringData};
use crate::wave_solver::{InitialData, RadialField};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("not a number: '{s}'")))
}

/// Exponent stored as a number, `"-inf"`, or `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StoredExponent {
    Finite(f64),
    Text(String),
}

impl StoredExponent {
    pub fn from_option(p: Option<f64>) -> Option<Self> {
        p.map(|p| {
            if p.is_finite() {
                Self::Finite(p)
            } else {
                Self::Text(format!("{p}"))
            }
        })
    }

    pub fn to_option(this: &Option<Self>) -> Result<Option<f64>> {
        match this {
            None => Ok(None),
            Some(Self::Finite(p)) => Ok(Some(*p)),
            Some(Self::Text(s)) => parse_f64(s).map(Some),
        }
    }
}

/// JSON sidecar of a scattering CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSidecar {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(rename = "R")]
    pub r_support: f64,
    pub tail_exponent: Option<StoredExponent>,
}

/// Writes `q,a_hat,a_raw,a1` on the nodes of `a_raw`; `a_hat` is left
/// empty below its own grid. The sidecar goes to `json_path`.
pub fn write_scattering(sd: &ScatteringData, csv_path: &Path, json_path: &Path) -> Result<()> {
    if sd.a1.q_grid() != sd.a_raw.q_grid() {
        return Err(Error::Format("a_raw and a1 must share a grid".into()));
    }
    let hat_nodes = sd.a_hat.q_grid();
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
    w.write_record(["q", "a_hat", "a_raw", "a1"])?;
    let mut k = 0;
    for (i, &q) in sd.a_raw.q_grid().iter().enumerate() {
        let hat = if k < hat_nodes.len() && hat_nodes[k] == q {
            k += 1;
            fmt_f64(sd.a_hat.values()[k - 1])
        } else {
            String::new()
        };
        w.write_record([
            fmt_f64(q),
            hat,
            fmt_f64(sd.a_raw.values()[i]),
            fmt_f64(sd.a1.values()[i]),
        ])?;
    }
    w.flush()?;
    if k != hat_nodes.len() {
        return Err(Error::Format("a_hat nodes are not a subset of the a_raw nodes".into()));
    }
    let side = ScatteringSidecar {
        epsilon: sd.epsilon,
        delta: sd.delta,
        r_support: sd.r_support,
        tail_exponent: StoredExponent::from_option(sd.a_hat.tail_exponent),
    };
    let mut f = BufWriter::new(File::create(json_path)?);
    serde_json::to_writer_pretty(&mut f, &side)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_scattering(csv_path: &Path, json_path: &Path) -> Result<ScatteringData> {
    let side: ScatteringSidecar = serde_json::from_reader(BufReader::new(File::open(json_path)?))?;
    let tail = StoredExponent::to_option(&side.tail_exponent)?;
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(csv_path)?));
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["q", "a_hat", "a_raw", "a1"] {
        return Err(Error::Format(format!("unexpected scattering header {header:?}")));
    }
    let (mut q, mut raw, mut a1, mut hq, mut hv) = (vec![], vec![], vec![], vec![], vec![]);
    for rec in r.records() {
        let rec = rec?;
        let x = parse_f64(&rec[0])?;
        q.push(x);
        if !rec[1].trim().is_empty() {
            hq.push(x);
            hv.push(parse_f64(&rec[1])?);
        }
        raw.push(parse_f64(&rec[2])?);
        a1.push(parse_f64(&rec[3])?);
    }
    let rs = side.r_support;
    Ok(ScatteringData {
        a_hat: GridFunction1D::new(hq, hv, tail, Some(rs))?,
        a_raw: GridFunction1D::new(q.clone(), raw, tail, Some(rs))?,
        a1: GridFunction1D::new(q, a1, None, None)?,
        epsilon: side.epsilon,
        delta: side.delta,
        r_support: rs,
    })
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"WNCSNAP1";

/// Everything in a [`RadialField`] except the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub metric: MetricModel,
    pub data: InitialData,
    pub epsilon: f64,
    pub r_support: f64,
    pub dr: f64,
    pub n_r: usize,
    pub dt: f64,
    pub stride: usize,
    pub n_t: usize,
    pub cfl: f64,
    pub max_courant: f64,
}

/// Magic, little-endian `u64` header length, JSON header, then `v` and
/// `v_t` as row-major little-endian `f64`.
pub fn write_snapshot(field: &RadialField, path: &Path) -> Result<()> {
    let header = SnapshotHeader {
        metric: field.metric.clone(),
        data: field.data,
        epsilon: field.epsilon,
        r_support: field.r_support,
        dr: field.dr,
        n_r: field.n_r,
        dt: field.dt,
        stride: field.stride,
        n_t: field.n_t,
        cfl: field.cfl,
        max_courant: field.max_courant,
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for table in [&field.v, &field.v_t] {
        for x in table.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_table(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn read_snapshot(path: &Path) -> Result<RadialField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("{} is not a field snapshot", path.display())));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let h: SnapshotHeader = serde_json::from_slice(&json)?;
    h.metric.validate()?;
    let n = h
        .n_t
        .checked_mul(h.n_r)
        .ok_or_else(|| Error::Format("snapshot dimensions overflow".into()))?;
    let v = read_table(&mut r, n)?;
    let v_t = read_table(&mut r, n)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes in snapshot", rest.len())));
    }
    Ok(RadialField {
        metric: h.metric,
        data: h.data,
        epsilon: h.epsilon,
        r_support: h.r_support,
        dr: h.dr,
        n_r: h.n_r,
        dt: h.dt,
        stride: h.stride,
        n_t: h.n_t,
        cfl: h.cfl,
        max_courant: h.max_courant,
        v,
        v_t,
    })
}

/// `q_label,t,r,q_r,mu,U` for every sample of every trace.
pub fn write_traces(traces: &[CharacteristicTrace], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["q_label", "t", "r", "q_r", "mu", "U"])?;
    for tr in traces {
        for s in &tr.samples {
            w.write_record([tr.q_label, s.t, s.r, s.q_r, s.mu, s.u].map(fmt_f64))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t,r,u,u_t,u_r` at every `(t, r)` of `times × radii`.
pub fn write_field_slices(field: &RadialField, times: &[f64], radii: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["t", "r", "u", "u_t", "u_r"])?;
    for &t in times {
        for &r in radii {
            let s = field.sample(t, r)?;
            w.write_record([t, r, s.u, s.u_t, s.u_r].map(fmt_f64))?;
        }
    }
    w.flush()?;
    Ok(())
}
