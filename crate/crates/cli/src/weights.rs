//! Weight files: UTF-8 text with one decimal weight per line, or raw
//! little-endian f64 values when the extension is `.f64`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::CliError;

fn is_raw(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("f64"))
}

pub fn read_weights(path: &Path) -> Result<Vec<f64>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if is_raw(path) {
        if bytes.len() % 8 != 0 {
            return Err(CliError::Usage(format!(
                "{}: length {} is not a multiple of 8",
                path.display(),
                bytes.len()
            )));
        }
        return Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect());
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Usage(format!("{}: not valid UTF-8", path.display())))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| (i, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(i, line)| {
            line.parse::<f64>().map_err(|_| {
                CliError::Usage(format!("{}:{}: bad weight `{line}`", path.display(), i + 1))
            })
        })
        .collect()
}

pub fn write_weights(path: &Path, weights: &[f64]) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let written = if is_raw(path) {
        weights
            .iter()
            .try_for_each(|w| out.write_all(&w.to_le_bytes()))
    } else {
        // Shortest exponent form that parses back to the same value.
        weights.iter().try_for_each(|w| writeln!(out, "{w:e}"))
    };
    written
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(path, e))
}
