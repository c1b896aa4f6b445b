//! Signal CSV: header `t,re,im`, one row per index.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::signal::{Signal, C64, ZERO};

/// Parse a signal. Indices may come in any order; gaps read as zero.
/// Duplicate indices are rejected.
pub fn read_signal_csv<R: Read>(reader: R) -> Result<Signal> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header_line = 1;
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(&e, header_line))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["t", "re", "im"] {
        return Err(Error::Csv {
            line: header_line,
            message: format!("expected header t,re,im, found {}", names.join(",")),
        });
    }
    let mut rows: BTreeMap<i64, C64> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e, 0))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize, name: &str| -> Result<&str> {
            record.get(i).ok_or_else(|| Error::Csv {
                line,
                message: format!("missing field {name}"),
            })
        };
        let t: i64 = field(0, "t")?.parse().map_err(|_| Error::Csv {
            line,
            message: format!("bad index {:?}", record.get(0).unwrap_or("")),
        })?;
        let parse = |i: usize, name: &str| -> Result<f64> {
            let s = field(i, name)?;
            let v: f64 = s.parse().map_err(|_| Error::Csv {
                line,
                message: format!("bad {name} value {s:?}"),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Csv {
                    line,
                    message: format!("non-finite {name} value"),
                })
            }
        };
        let z = C64::new(parse(1, "re")?, parse(2, "im")?);
        if rows.insert(t, z).is_some() {
            return Err(Error::Csv {
                line,
                message: format!("duplicate index {t}"),
            });
        }
    }
    let (Some((&lo, _)), Some((&hi, _))) = (rows.first_key_value(), rows.last_key_value()) else {
        return Ok(Signal::empty());
    };
    let mut values = vec![ZERO; (hi - lo + 1) as usize];
    for (t, z) in rows {
        values[(t - lo) as usize] = z;
    }
    Ok(Signal::new(lo, values))
}

fn csv_error(e: &csv::Error, fallback: u64) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback);
    Error::Csv {
        line,
        message: e.to_string(),
    }
}

/// Write every index of the stored support. Values use the shortest
/// round-tripping decimal form.
pub fn write_signal_csv<W: Write>(signal: &Signal, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["t", "re", "im"]).map_err(io)?;
    for (i, z) in signal.values().iter().enumerate() {
        let t = signal.start() + i as i64;
        w.write_record([t.to_string(), z.re.to_string(), z.im.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
