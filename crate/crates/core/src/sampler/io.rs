//! Persisting posterior draws as long-format CSV or a compact binary file.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{ChainAcceptance, PosteriorDraws};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"BBRDRAWS";
const VERSION: u32 = 1;

/// Writes `chain,iteration,parameter,value` rows. `iteration` counts from
/// the start of the chain, warmup included. Values use shortest
/// round-trip formatting so reading back is lossless.
pub fn write_draws_csv<W: Write>(draws: &PosteriorDraws, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["chain", "iteration", "parameter", "value"])?;
    for c in 0..draws.chains() {
        for t in 0..draws.draws_per_chain() {
            let iter = (draws.warmup() + t).to_string();
            let chain = c.to_string();
            for (name, v) in draws.parameter_names().iter().zip(draws.draw(c, t)) {
                w.write_record([chain.as_str(), iter.as_str(), name, &format!("{v:?}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_draws_csv`]. Rows must be grouped
/// by chain, then iteration, with parameters in a consistent order.
/// Acceptance rates are not stored in CSV and come back empty.
pub fn read_draws_csv<R: Read>(reader: R) -> Result<PosteriorDraws> {
    let mut r = csv::Reader::from_reader(reader);
    let fmt = |m: String| Error::DrawsFormat(m);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["chain", "iteration", "parameter", "value"] {
        return Err(fmt("expected header chain,iteration,parameter,value".into()));
    }
    let mut names: Vec<String> = Vec::new();
    let mut names_done = false;
    let mut values = Vec::new();
    let mut chains = 0usize;
    let mut first_iter: Option<usize> = None;
    let mut key: Option<(usize, usize)> = None;
    let mut pos = 0usize;
    let mut per_chain: Vec<usize> = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse_usize = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| fmt(format!("row {}: bad integer `{}`", row + 2, &rec[i])))
        };
        let (c, it) = (parse_usize(0)?, parse_usize(1)?);
        let name = &rec[2];
        let v: f64 = rec[3]
            .parse()
            .map_err(|_| fmt(format!("row {}: bad value `{}`", row + 2, &rec[3])))?;
        if key != Some((c, it)) {
            if key.is_some() {
                if !names_done {
                    names_done = true;
                } else if pos != names.len() {
                    return Err(fmt(format!("row {}: incomplete draw", row + 2)));
                }
            }
            match key {
                Some((pc, _)) if pc == c => *per_chain.last_mut().unwrap() += 1,
                _ => {
                    if c != chains {
                        return Err(fmt(format!("row {}: chains out of order", row + 2)));
                    }
                    chains += 1;
                    per_chain.push(1);
                    first_iter.get_or_insert(it);
                }
            }
            key = Some((c, it));
            pos = 0;
        }
        if names_done {
            if names.get(pos).map(String::as_str) != Some(name) {
                return Err(fmt(format!("row {}: unexpected parameter `{name}`", row + 2)));
            }
        } else {
            names.push(name.to_string());
        }
        pos += 1;
        values.push(v);
    }
    if key.is_none() {
        return Err(fmt("no draws".into()));
    }
    if pos != names.len() {
        return Err(fmt("incomplete final draw".into()));
    }
    let n = per_chain[0];
    if per_chain.iter().any(|&k| k != n) {
        return Err(fmt("chains have different lengths".into()));
    }
    PosteriorDraws::from_parts(names, chains, n, first_iter.unwrap_or(0), values, Vec::new())
}

pub fn write_draws_bin<W: Write>(draws: &PosteriorDraws, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    for n in [draws.chains(), draws.draws_per_chain(), draws.warmup(), draws.n_params()] {
        w.write_u64::<LittleEndian>(n as u64)?;
    }
    for name in draws.parameter_names() {
        w.write_u32::<LittleEndian>(name.len() as u32)?;
        w.write_all(name.as_bytes())?;
    }
    for &v in draws.values() {
        w.write_f64::<LittleEndian>(v)?;
    }
    w.write_u64::<LittleEndian>(draws.acceptance.len() as u64)?;
    for a in &draws.acceptance {
        for v in [a.theta, a.zeta, a.hyper, a.shift] {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Truncated input is reported as a format error rather than plain I/O.
pub fn read_draws_bin<R: Read>(r: R) -> Result<PosteriorDraws> {
    read_bin(r).map_err(|e| match e {
        Error::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::DrawsFormat("truncated draws file".into())
        }
        e => e,
    })
}

fn read_bin<R: Read>(mut r: R) -> Result<PosteriorDraws> {
    let fmt = |m: &str| Error::DrawsFormat(m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| fmt("truncated header"))?;
    if &magic != MAGIC {
        return Err(fmt("not a draws file"));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::DrawsFormat(format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = r.read_u64::<LittleEndian>()? as usize;
    }
    let [chains, per_chain, warmup, p] = dims;
    let total = chains
        .checked_mul(per_chain)
        .and_then(|x| x.checked_mul(p))
        .filter(|&t| t <= (1 << 34))
        .ok_or_else(|| fmt("implausible dimensions"))?;
    let mut names = Vec::with_capacity(p.min(1 << 20));
    for _ in 0..p {
        let len = r.read_u32::<LittleEndian>()? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        names.push(String::from_utf8(buf).map_err(|_| fmt("parameter name not UTF-8"))?);
    }
    let mut values = vec![0.0; total];
    r.read_f64_into::<LittleEndian>(&mut values)?;
    let n_acc = r.read_u64::<LittleEndian>()? as usize;
    if n_acc != 0 && n_acc != chains {
        return Err(fmt("acceptance block does not match chain count"));
    }
    let mut acceptance = Vec::with_capacity(n_acc);
    for _ in 0..n_acc {
        let mut a = [0.0; 4];
        r.read_f64_into::<LittleEndian>(&mut a)?;
        acceptance.push(ChainAcceptance { theta: a[0], zeta: a[1], hyper: a[2], shift: a[3] });
    }
    PosteriorDraws::from_parts(names, chains, per_chain, warmup, values, acceptance)
}
