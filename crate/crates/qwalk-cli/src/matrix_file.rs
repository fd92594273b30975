//! Text matrices: one row per line, entries like `0.5-0.25i` separated by
//! whitespace. Blocks are separated by blank lines.

use std::str::FromStr;

use anyhow::{bail, Context, Result};
use qwalk_core::kernel::{from_rows, ComplexMatrix, C64};

pub fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim();
    // num-complex rejects a bare `i` / `-i`
    let t = match t {
        "i" | "+i" => "1i",
        "-i" => "-1i",
        _ => t,
    };
    C64::from_str(t).map_err(|_| anyhow::anyhow!("not a complex number: {s:?}"))
}

/// Parses consecutive 3x3 blocks. Lines starting with `#` are ignored.
pub fn parse_blocks(text: &str) -> Result<Vec<ComplexMatrix>> {
    let mut blocks = Vec::new();
    let mut rows: Vec<Vec<C64>> = Vec::new();
    let mut flush = |rows: &mut Vec<Vec<C64>>, line: usize| -> Result<()> {
        match rows.len() {
            0 => Ok(()),
            3 => {
                blocks.push(from_rows(rows));
                rows.clear();
                Ok(())
            }
            k => bail!("block ending before line {line} has {k} rows, expected 3"),
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            flush(&mut rows, i + 1)?;
            continue;
        }
        let row = line
            .split_whitespace()
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()
            .with_context(|| format!("line {}", i + 1))?;
        if row.len() != 3 {
            bail!("line {}: expected 3 entries, found {}", i + 1, row.len());
        }
        rows.push(row);
        if rows.len() > 3 {
            bail!("line {}: more than 3 rows in a block (separate blocks with a blank line)", i + 1);
        }
    }
    flush(&mut rows, text.lines().count() + 1)?;
    if blocks.is_empty() {
        bail!("no matrix found");
    }
    Ok(blocks)
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut blocks = parse_blocks(text)?;
    if blocks.len() != 1 {
        bail!("expected a single 3x3 matrix, found {} blocks", blocks.len());
    }
    Ok(blocks.remove(0))
}
