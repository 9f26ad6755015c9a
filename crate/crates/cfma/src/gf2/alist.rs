//! alist parity-check matrix interchange format.
//!
//! Layout: line 1 `n m`; line 2 `max_col_deg max_row_deg`; line 3 the n
//! column degrees; line 4 the m row degrees; then n lines of 1-indexed check
//! indices per variable; then m lines of 1-indexed variable indices per
//! check. Zero entries are padding and are ignored on input. The writer
//! emits the canonical form: sorted indices, no padding, single spaces, LF.

use super::{CodeError, ParityCheckMatrix};

fn parse_err(line: usize, msg: impl Into<String>) -> CodeError {
    CodeError::AlistParse { line, msg: msg.into() }
}

fn parse_numbers(line: &str, lineno: usize) -> Result<Vec<usize>, CodeError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| parse_err(lineno, format!("expected an integer, found {tok:?}")))
        })
        .collect()
}

/// Parses alist text into a [`ParityCheckMatrix`].
pub fn parse_alist(text: &str) -> Result<ParityCheckMatrix, CodeError> {
    // Keep original line numbers for error reporting; blank lines are not
    // significant in the fixed-layout part, so track position separately.
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let mut pos = 0usize;
    let mut next_line = |expect: &str| -> Result<(usize, &str), CodeError> {
        let got = lines.get(pos).copied().ok_or_else(|| {
            parse_err(lines.last().map(|(no, _)| *no).unwrap_or(0), format!("unexpected end of input, expected {expect}"))
        })?;
        pos += 1;
        Ok(got)
    };

    let (no, header) = next_line("header `n m`")?;
    let dims = parse_numbers(header, no)?;
    if dims.len() != 2 {
        return Err(parse_err(no, "header must contain exactly `n m`"));
    }
    let (n, m) = (dims[0], dims[1]);
    if n == 0 || m == 0 {
        return Err(parse_err(no, "n and m must be positive"));
    }

    let (no, degs) = next_line("`max_col_deg max_row_deg`")?;
    let max_degs = parse_numbers(degs, no)?;
    if max_degs.len() != 2 {
        return Err(parse_err(no, "expected `max_col_deg max_row_deg`"));
    }

    let (no, col_deg_line) = next_line("column degree list")?;
    let col_degs = parse_numbers(col_deg_line, no)?;
    if col_degs.len() != n {
        return Err(parse_err(no, format!("expected {n} column degrees, found {}", col_degs.len())));
    }
    let (no, row_deg_line) = next_line("row degree list")?;
    let row_degs = parse_numbers(row_deg_line, no)?;
    if row_degs.len() != m {
        return Err(parse_err(no, format!("expected {m} row degrees, found {}", row_degs.len())));
    }

    let mut read_adjacency = |count: usize,
                              degs: &[usize],
                              limit: usize,
                              what: &str|
     -> Result<Vec<Vec<usize>>, CodeError> {
        let mut out = Vec::with_capacity(count);
        for (idx, &deg) in degs.iter().enumerate().take(count) {
            let (no, line) = next_line(&format!("{what} list {}", idx + 1))?;
            let mut entries = parse_numbers(line, no)?;
            entries.retain(|&e| e != 0); // drop padding
            if entries.len() != deg {
                return Err(parse_err(
                    no,
                    format!("{what} {} lists {} entries but degree {deg} was declared", idx + 1, entries.len()),
                ));
            }
            let mut adj = Vec::with_capacity(entries.len());
            for e in entries {
                if e > limit {
                    return Err(parse_err(no, format!("index {e} out of range 1..={limit}")));
                }
                adj.push(e - 1);
            }
            adj.sort_unstable();
            if adj.windows(2).any(|w| w[0] == w[1]) {
                return Err(parse_err(no, format!("duplicate index in {what} {}", idx + 1)));
            }
            out.push(adj);
        }
        Ok(out)
    };

    let var_lists = read_adjacency(n, &col_degs, m, "variable")?;
    let check_lists = read_adjacency(m, &row_degs, n, "check")?;

    if let Some(&(no, _)) = lines.get(pos) {
        return Err(parse_err(no, "unexpected trailing content"));
    }

    let h = ParityCheckMatrix::from_checks(n, check_lists)?;
    // The two adjacency halves must describe the same bipartite graph.
    for (v, col) in var_lists.iter().enumerate() {
        if h.var_col(v) != col.as_slice() {
            return Err(parse_err(
                0,
                format!("variable {} adjacency disagrees with the check lists", v + 1),
            ));
        }
    }
    Ok(h)
}

/// Writes the canonical alist form of `h`. Degree-0 adjacency lists come
/// out as a single padding zero so the positional layout survives.
pub fn write_alist(h: &ParityCheckMatrix) -> String {
    let mut out = String::new();
    let join = |idx: &[usize]| {
        if idx.is_empty() {
            "0".to_string()
        } else {
            idx.iter().map(|&i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
        }
    };
    out.push_str(&format!("{} {}\n", h.n(), h.num_checks()));
    out.push_str(&format!("{} {}\n", h.max_var_degree(), h.max_check_degree()));
    let col_degs: Vec<String> = h.var_cols().iter().map(|c| c.len().to_string()).collect();
    out.push_str(&col_degs.join(" "));
    out.push('\n');
    let row_degs: Vec<String> = h.check_rows().iter().map(|r| r.len().to_string()).collect();
    out.push_str(&row_degs.join(" "));
    out.push('\n');
    for col in h.var_cols() {
        out.push_str(&join(col));
        out.push('\n');
    }
    for row in h.check_rows() {
        out.push_str(&join(row));
        out.push('\n');
    }
    out
}
