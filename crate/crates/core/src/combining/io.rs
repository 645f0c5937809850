//! Plain-text combiner files: an optional `#` header, then one line per row
//! of `E` with whitespace-separated entries written as `re+imj`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::{Combiner, CombinerKind};
use crate::numerics::{ComplexMatrix, C64};

pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}j", z.re, sign, z.im.abs())
}

pub fn parse_complex(token: &str) -> Option<C64> {
    let body = token.strip_suffix('j')?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split..].parse().ok()?;
    Some(C64::new(re, im))
}

pub fn write_combiner<W: Write>(combiner: &Combiner, mut out: W) -> Result<()> {
    let e = combiner.matrix();
    writeln!(out, "# kind={} rows={} cols={}", combiner.kind(), e.nrows(), e.ncols())?;
    for row in e.row_iter() {
        let line: Vec<String> = row.iter().map(|z| format_complex(*z)).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_combiner<R: BufRead>(input: R) -> Result<Combiner> {
    let mut kind = CombinerKind::Mmse;
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            for field in header.split_whitespace() {
                if let Some(k) = field.strip_prefix("kind=") {
                    kind = k.parse().map_err(|_| Error::Parse {
                        line: idx + 1,
                        message: format!("unknown combiner kind `{k}`"),
                    })?;
                }
            }
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                parse_complex(tok).ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: format!("bad complex entry `{tok}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {} entries, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no matrix rows".into(),
        });
    }
    let ncols = rows[0].len();
    let matrix = ComplexMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    Ok(Combiner::new(matrix, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_exponents_and_signs() {
        assert_eq!(parse_complex("1.5+0.25j"), Some(C64::new(1.5, 0.25)));
        assert_eq!(parse_complex("-1e-5-2.5e+3j"), Some(C64::new(-1e-5, -2500.0)));
        assert_eq!(parse_complex("0+0j"), Some(C64::new(0.0, 0.0)));
        assert_eq!(parse_complex("1.5"), None);
    }

    #[test]
    fn reports_ragged_rows() {
        let text = "# kind=mmse\n1+0j 2+0j\n3+0j\n";
        assert!(matches!(read_combiner(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }

    proptest! {
        #[test]
        fn roundtrip_is_exact(entries in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 12)) {
            let m = ComplexMatrix::from_fn(4, 3, |i, j| {
                let (re, im) = entries[i * 3 + j];
                C64::new(re, im)
            });
            let c = Combiner::new(m, CombinerKind::Averaging);
            let mut buf = Vec::new();
            write_combiner(&c, &mut buf).unwrap();
            let back = read_combiner(buf.as_slice()).unwrap();
            prop_assert_eq!(back.kind(), CombinerKind::Averaging);
            prop_assert_eq!(back.matrix(), c.matrix());
        }
    }
}
