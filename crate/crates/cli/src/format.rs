//! Text formats: instances, matrices, vector lists, and result documents.
//!
//! Every document starts with a versioned header such as
//! `# blockgraver instance v1`. Other lines starting with `#` and blank
//! lines are ignored. Integers are decimal; bounds may also be `-inf` or
//! `+inf`.

use std::fmt::Write as _;

use blockgraver::{Bound, Constraint, FourBlockSpec, IPInstance, SmallMatrix};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

struct Lines<'a> {
    lines: Vec<(usize, Vec<Token<'a>>)>,
    pos: usize,
    end: (usize, usize),
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        message: message.into(),
    }
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, kind: &str) -> Result<Self, ParseError> {
        let mut raw = text.lines().enumerate();
        let expected = format!("# blockgraver {kind} v1");
        match raw.next() {
            Some((_, h)) if h.trim_end() == expected => {}
            Some((_, h)) => {
                return Err(err(1, 1, format!("expected header `{expected}`, found `{h}`")))
            }
            None => return Err(err(1, 1, format!("empty document, expected `{expected}`"))),
        }
        let mut lines = Vec::new();
        let mut end = (1, 1);
        for (i, l) in raw {
            end = (i + 1, l.len() + 1);
            if l.trim_start().starts_with('#') || l.trim().is_empty() {
                continue;
            }
            let mut toks = Vec::new();
            let mut col = 0;
            for piece in l.split_whitespace() {
                let at = l[col..].find(piece).expect("piece of line") + col;
                toks.push(Token {
                    text: piece,
                    line: i + 1,
                    column: at + 1,
                });
                col = at + piece.len();
            }
            lines.push((i + 1, toks));
        }
        Ok(Lines { lines, pos: 0, end })
    }

    fn next(&mut self, what: &str) -> Result<&[Token<'a>], ParseError> {
        let (_, toks) = self
            .lines
            .get(self.pos)
            .ok_or_else(|| err(self.end.0, self.end.1, format!("unexpected end, expected {what}")))?;
        self.pos += 1;
        Ok(toks)
    }

    fn peek_key(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|(_, t)| t[0].text)
    }

    fn done(&self) -> bool {
        self.pos >= self.lines.len()
    }
}

fn int(t: &Token) -> Result<i64, ParseError> {
    t.text
        .parse()
        .map_err(|_| err(t.line, t.column, format!("expected an integer, found `{}`", t.text)))
}

fn count(t: &Token) -> Result<usize, ParseError> {
    t.text
        .parse()
        .map_err(|_| err(t.line, t.column, format!("expected a count, found `{}`", t.text)))
}

fn bound(t: &Token) -> Result<Bound, ParseError> {
    match t.text {
        "-inf" => Ok(Bound::NegInf),
        "+inf" | "inf" => Ok(Bound::PosInf),
        _ => int(t).map(Bound::Finite),
    }
}

fn keyed<'t, 'a>(toks: &'t [Token<'a>], key: &str) -> Result<&'t [Token<'a>], ParseError> {
    let t = &toks[0];
    if t.text != key {
        return Err(err(t.line, t.column, format!("expected `{key}`, found `{}`", t.text)));
    }
    Ok(&toks[1..])
}

fn ints(toks: &[Token]) -> Result<Vec<i64>, ParseError> {
    toks.iter().map(int).collect()
}

fn matrix(lines: &mut Lines, key: &str) -> Result<SmallMatrix, ParseError> {
    let head = lines.next(key)?;
    let first = head[0];
    let dims = keyed(head, key)?;
    if dims.len() != 2 {
        return Err(err(first.line, first.column, format!("`{key}` needs rows and columns")));
    }
    let (rows, cols) = (count(&dims[0])?, count(&dims[1])?);
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let row = lines.next("a matrix row")?;
        if row.len() != cols {
            return Err(err(
                row[0].line,
                row[0].column,
                format!("row of `{key}` has {} entries, expected {cols}", row.len()),
            ));
        }
        data.extend(ints(row)?);
    }
    SmallMatrix::new(rows, cols, data).map_err(|e| err(first.line, first.column, e.to_string()))
}

fn write_matrix(out: &mut String, key: &str, m: &SmallMatrix) {
    let _ = writeln!(out, "{key} {} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let _ = writeln!(out, "{}", join(m.row(r)));
    }
}

pub fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn bound_text(b: &Bound) -> String {
    match b {
        Bound::NegInf => "-inf".into(),
        Bound::PosInf => "+inf".into(),
        Bound::Finite(v) => v.to_string(),
    }
}

/// Parses `# blockgraver instance v1`.
///
/// Block instances list `n`, the blocks `A B C D`, then `b`, `lower`,
/// `upper`, `w`; a `three_block` line marks `C = 0`. An instance with a
/// single `M` block in place of `n` and the blocks is explicit.
pub fn parse_instance(text: &str) -> Result<IPInstance, ParseError> {
    let mut lines = Lines::new(text, "instance")?;
    let start = lines.lines.first().map(|(l, t)| (*l, t[0].column)).unwrap_or((1, 1));
    let constraint = if lines.peek_key() == Some("M") {
        Constraint::Explicit(matrix(&mut lines, "M")?)
    } else {
        let n = {
            let toks = lines.next("`n`")?;
            let rest = keyed(toks, "n")?;
            if rest.len() != 1 {
                return Err(err(toks[0].line, toks[0].column, "`n` takes one value"));
            }
            count(&rest[0])?
        };
        let three_block = if lines.peek_key() == Some("three_block") {
            let toks = lines.next("`three_block`")?;
            match toks.get(1).map(|t| t.text) {
                Some("true") | None => true,
                Some("false") => false,
                Some(_) => return Err(err(toks[1].line, toks[1].column, "expected true or false")),
            }
        } else {
            false
        };
        let a = matrix(&mut lines, "A")?;
        let b = matrix(&mut lines, "B")?;
        let c = matrix(&mut lines, "C")?;
        let d = matrix(&mut lines, "D")?;
        let spec = FourBlockSpec::new(a, b, c, d, n).map_err(|e| err(start.0, start.1, e.to_string()))?;
        Constraint::Block { spec, three_block }
    };
    let b = ints(keyed(lines.next("`b`")?, "b")?)?;
    let lower = keyed(lines.next("`lower`")?, "lower")?
        .iter()
        .map(bound)
        .collect::<Result<Vec<_>, _>>()?;
    let upper = keyed(lines.next("`upper`")?, "upper")?
        .iter()
        .map(bound)
        .collect::<Result<Vec<_>, _>>()?;
    let w = ints(keyed(lines.next("`w`")?, "w")?)?;
    if !lines.done() {
        let (l, t) = &lines.lines[lines.pos];
        return Err(err(*l, t[0].column, format!("unexpected `{}`", t[0].text)));
    }
    IPInstance::new(constraint, b, lower, upper, w).map_err(|e| err(start.0, start.1, e.to_string()))
}

pub fn write_instance(inst: &IPInstance) -> String {
    let mut out = String::from("# blockgraver instance v1\n");
    match &inst.constraint {
        Constraint::Explicit(m) => write_matrix(&mut out, "M", m),
        Constraint::Block { spec, three_block } => {
            let _ = writeln!(out, "n {}", spec.n);
            if *three_block {
                out.push_str("three_block true\n");
            }
            write_matrix(&mut out, "A", &spec.a);
            write_matrix(&mut out, "B", &spec.b);
            write_matrix(&mut out, "C", &spec.c);
            write_matrix(&mut out, "D", &spec.d);
        }
    }
    let line = |key: &str, v: Vec<String>| {
        if v.is_empty() {
            format!("{key}\n")
        } else {
            format!("{key} {}\n", v.join(" "))
        }
    };
    out.push_str(&line("b", inst.b.iter().map(|x| x.to_string()).collect()));
    out.push_str(&line("lower", inst.lower.iter().map(bound_text).collect()));
    out.push_str(&line("upper", inst.upper.iter().map(bound_text).collect()));
    out.push_str(&line("w", inst.w.iter().map(|x| x.to_string()).collect()));
    out
}

/// Parses `# blockgraver matrix v1`: one `M rows cols` block.
pub fn parse_matrix(text: &str) -> Result<SmallMatrix, ParseError> {
    let mut lines = Lines::new(text, "matrix")?;
    let m = matrix(&mut lines, "M")?;
    if !lines.done() {
        let (l, t) = &lines.lines[lines.pos];
        return Err(err(*l, t[0].column, format!("unexpected `{}`", t[0].text)));
    }
    Ok(m)
}

pub fn write_matrix_doc(m: &SmallMatrix) -> String {
    let mut out = String::from("# blockgraver matrix v1\n");
    write_matrix(&mut out, "M", m);
    out
}

/// Parses `# blockgraver vectors v1`: one vector per line, equal lengths.
pub fn parse_vectors(text: &str) -> Result<Vec<Vec<i64>>, ParseError> {
    let lines = Lines::new(text, "vectors")?;
    let mut out: Vec<Vec<i64>> = Vec::new();
    for (_, toks) in &lines.lines {
        let v = ints(toks)?;
        if let Some(first) = out.first() {
            if first.len() != v.len() {
                return Err(err(
                    toks[0].line,
                    toks[0].column,
                    format!("vector has {} entries, expected {}", v.len(), first.len()),
                ));
            }
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(err(lines.end.0, lines.end.1, "no vectors"));
    }
    Ok(out)
}

pub fn write_vectors(vs: &[Vec<i64>]) -> String {
    let mut out = String::from("# blockgraver vectors v1\n");
    for v in vs {
        let _ = writeln!(out, "{}", join(v));
    }
    out
}

/// Parses a comma- or space-separated integer list given on the command line.
pub fn parse_list(text: &str) -> Result<Vec<i64>, ParseError> {
    let mut out = Vec::new();
    for (i, piece) in text.split([',', ' ']).enumerate() {
        if piece.is_empty() {
            continue;
        }
        out.push(
            piece
                .parse()
                .map_err(|_| err(1, i + 1, format!("expected an integer, found `{piece}`")))?,
        );
    }
    Ok(out)
}

/// A result document under construction: `key value` lines plus `check`
/// verdicts.
#[derive(Debug, Default)]
pub struct Report {
    kind: &'static str,
    body: String,
    failed: Vec<String>,
}

impl Report {
    pub fn new(kind: &'static str) -> Self {
        Report {
            kind,
            ..Report::default()
        }
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.body, "{key} {value}");
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        let _ = writeln!(self.body, "check {name} {}", if ok { "ok" } else { "FAILED" });
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    pub fn failed(&self) -> &[String] {
        &self.failed
    }

    pub fn render(&self) -> String {
        format!("# blockgraver {} v1\n{}", self.kind, self.body)
    }
}
