//! Weight snapshots.
//!
//! Binary layout (any extension other than `.csv`): the dimension as a
//! little-endian `u64`, then that many little-endian `f64` values.
//! CSV layout: the dimension on the first line, then one value per line.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn write_weights(path: &Path, weights: &[f64]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = if is_csv(path) {
        writeln!(w, "{}", weights.len())
            .and_then(|_| weights.iter().try_for_each(|v| writeln!(w, "{v:?}")))
    } else {
        w.write_all(&(weights.len() as u64).to_le_bytes())
            .and_then(|_| {
                weights
                    .iter()
                    .try_for_each(|v| w.write_all(&v.to_le_bytes()))
            })
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |msg: &str| Error::config(format!("{}: {msg}", path.display()));
    if is_csv(path) {
        let mut lines = r.lines();
        let dim: usize = lines
            .next()
            .ok_or_else(|| bad("empty snapshot"))?
            .map_err(|e| Error::io(path, e))?
            .trim()
            .parse()
            .map_err(|_| bad("bad dimension line"))?;
        let values = lines
            .map(|l| {
                let l = l.map_err(|e| Error::io(path, e))?;
                l.trim().parse::<f64>().map_err(|_| bad("bad value"))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dim {
            return Err(bad("value count does not match dimension"));
        }
        Ok(values)
    } else {
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(|e| Error::io(path, e))?;
        let dim = u64::from_le_bytes(word) as usize;
        let mut values = Vec::with_capacity(dim.min(1 << 24));
        for _ in 0..dim {
            r.read_exact(&mut word)
                .map_err(|_| bad("truncated snapshot"))?;
            values.push(f64::from_le_bytes(word));
        }
        if r.read(&mut word).map_err(|e| Error::io(path, e))? != 0 {
            return Err(bad("trailing bytes after snapshot"));
        }
        Ok(values)
    }
}
