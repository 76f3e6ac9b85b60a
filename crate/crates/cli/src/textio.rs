//! Line-oriented text formats: facts (`R(a,b)` per line), constraints
//! (`key`/`fd`/`dc` declarations), queries (one disjunct per line, `false`
//! for the identically-false query), and their serializers.
//!
//! Lexical rules: tokens beginning with `?` are variables, everything else is
//! a constant; `#` starts a comment; blank lines are ignored.

use std::collections::BTreeMap;

use repairkit::relational::{Atom, Constraint, Database, DcAtom, Disjunct, Fact, Query, Term};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{file}:{line}:{column}: {message}")]
pub struct ParseError {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(file: &str, line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            file: file.to_string(),
            line,
            column: column.max(1),
            message: message.into(),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Content lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Splits on commas at parenthesis depth zero.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts
}

fn parse_term(token: &str, file: &str, line: usize, column: usize) -> Result<Term, ParseError> {
    if let Some(name) = token.strip_prefix('?') {
        if name.is_empty() {
            return Err(ParseError::new(file, line, column, "empty variable name"));
        }
        Ok(Term::var(name))
    } else if token.is_empty() {
        Err(ParseError::new(file, line, column, "empty term"))
    } else {
        Ok(Term::constant(token))
    }
}

/// Parses `Name(t1,...,tn)` into a relation name and term list.
fn parse_atom_shape<'a>(
    s: &'a str,
    file: &str,
    line: usize,
) -> Result<(&'a str, Vec<&'a str>), ParseError> {
    let column = 1;
    let open = s
        .find('(')
        .ok_or_else(|| ParseError::new(file, line, column, format!("expected `(` in atom `{s}`")))?;
    if !s.ends_with(')') {
        return Err(ParseError::new(
            file,
            line,
            column,
            format!("expected `)` at the end of atom `{s}`"),
        ));
    }
    let name = s[..open].trim();
    if name.is_empty() {
        return Err(ParseError::new(file, line, column, "missing relation name"));
    }
    let inner = &s[open + 1..s.len() - 1];
    let args: Vec<&str> = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    if args.is_empty() {
        return Err(ParseError::new(
            file,
            line,
            column,
            format!("atom `{name}` has no arguments"),
        ));
    }
    Ok((name, args))
}

/// Parses a facts file. Duplicate lines collapse to one fact with a warning.
pub fn parse_database(text: &str, file: &str) -> Result<(Database, Vec<String>), ParseError> {
    let mut facts: Vec<Fact> = Vec::new();
    let mut arities: BTreeMap<String, usize> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (line_no, line) in content_lines(text) {
        let (name, args) = parse_atom_shape(line, file, line_no)?;
        for (i, a) in args.iter().enumerate() {
            if a.is_empty() {
                return Err(ParseError::new(
                    file,
                    line_no,
                    1,
                    format!("empty component {} in fact `{line}`", i + 1),
                ));
            }
            if a.starts_with('?') {
                return Err(ParseError::new(
                    file,
                    line_no,
                    1,
                    format!("facts must be ground, found variable `{a}`"),
                ));
            }
        }
        match arities.get(name) {
            Some(&ar) if ar != args.len() => {
                return Err(ParseError::new(
                    file,
                    line_no,
                    1,
                    format!(
                        "relation `{name}` used with arity {}, expected {ar}",
                        args.len()
                    ),
                ));
            }
            _ => {
                arities.insert(name.to_string(), args.len());
            }
        }
        let fact = Fact::new(name, args);
        if facts.contains(&fact) {
            warnings.push(format!("{file}:{line_no}: duplicate fact `{line}` ignored"));
        } else {
            facts.push(fact);
        }
    }
    let db = Database::new(facts)
        .map_err(|e| ParseError::new(file, 1, 1, e.to_string()))?;
    Ok((db, warnings))
}

fn parse_positions(s: &str, file: &str, line: usize) -> Result<Vec<usize>, ParseError> {
    let mut out = Vec::new();
    for tok in s.split_whitespace() {
        let p: usize = tok.parse().map_err(|_| {
            ParseError::new(file, line, 1, format!("`{tok}` is not a position number"))
        })?;
        if p == 0 {
            return Err(ParseError::new(file, line, 1, "positions are 1-based"));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(ParseError::new(file, line, 1, "expected at least one position"));
    }
    Ok(out)
}

/// Parses a constraints file: `key R : p...`, `fd R : p... -> q...`, or
/// `dc : atom {, atom | ?x = t | ?x != t}`.
pub fn parse_constraints(text: &str, file: &str) -> Result<Vec<Constraint>, ParseError> {
    let mut out = Vec::new();
    for (line_no, line) in content_lines(text) {
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match keyword {
            "key" => {
                let (relation, positions) = rest.split_once(':').ok_or_else(|| {
                    ParseError::new(file, line_no, 1, "expected `key R : positions`")
                })?;
                let relation = relation.trim();
                if relation.is_empty() {
                    return Err(ParseError::new(file, line_no, 1, "missing relation name"));
                }
                out.push(Constraint::key(
                    relation,
                    parse_positions(positions, file, line_no)?,
                ));
            }
            "fd" => {
                let (relation, rest) = rest.split_once(':').ok_or_else(|| {
                    ParseError::new(file, line_no, 1, "expected `fd R : lhs -> rhs`")
                })?;
                let relation = relation.trim();
                if relation.is_empty() {
                    return Err(ParseError::new(file, line_no, 1, "missing relation name"));
                }
                let (lhs, rhs) = rest.split_once("->").ok_or_else(|| {
                    ParseError::new(file, line_no, 1, "expected `->` between FD sides")
                })?;
                out.push(Constraint::fd(
                    relation,
                    parse_positions(lhs, file, line_no)?,
                    parse_positions(rhs, file, line_no)?,
                ));
            }
            "dc" => {
                let rest = rest.trim_start();
                let body = rest.strip_prefix(':').ok_or_else(|| {
                    ParseError::new(file, line_no, 1, "expected `dc : atoms`")
                })?;
                let mut atoms = Vec::new();
                for item in split_top_level(body) {
                    atoms.push(parse_dc_item(item, file, line_no)?);
                }
                let dc = Constraint::dc(atoms)
                    .map_err(|e| ParseError::new(file, line_no, 1, e.to_string()))?;
                out.push(dc);
            }
            other => {
                return Err(ParseError::new(
                    file,
                    line_no,
                    1,
                    format!("unknown constraint keyword `{other}`"),
                ));
            }
        }
    }
    Ok(out)
}

fn parse_dc_item(item: &str, file: &str, line: usize) -> Result<DcAtom, ParseError> {
    if let Some((lhs, rhs)) = item.split_once("!=") {
        let t = parse_term(lhs.trim(), file, line, 1)?;
        let u = parse_term(rhs.trim(), file, line, 1)?;
        return Ok(DcAtom::Neq(t, u));
    }
    // `=` only outside parentheses, so plain split is safe after the != check
    if !item.contains('(') {
        if let Some((lhs, rhs)) = item.split_once('=') {
            let t = parse_term(lhs.trim(), file, line, 1)?;
            let u = parse_term(rhs.trim(), file, line, 1)?;
            return Ok(DcAtom::Eq(t, u));
        }
    }
    let (name, args) = parse_atom_shape(item, file, line)?;
    let terms = args
        .iter()
        .map(|a| parse_term(a, file, line, 1))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DcAtom::Rel(Atom::new(name, terms)))
}

/// Parses a query file: one disjunct per line with comma-separated atoms and
/// inequalities; the single keyword `false` denotes the identically-false
/// query.
pub fn parse_query(text: &str, file: &str) -> Result<Query, ParseError> {
    let lines: Vec<(usize, &str)> = content_lines(text).collect();
    if lines.len() == 1 && lines[0].1 == "false" {
        return Ok(Query::False);
    }
    let mut disjuncts = Vec::new();
    for (line_no, line) in lines {
        if line == "false" {
            return Err(ParseError::new(
                file,
                line_no,
                1,
                "`false` must be the only line of a query file",
            ));
        }
        let mut atoms = Vec::new();
        let mut inequalities = Vec::new();
        for item in split_top_level(line) {
            if let Some((lhs, rhs)) = item.split_once("!=") {
                let t = parse_term(lhs.trim(), file, line_no, 1)?;
                let u = parse_term(rhs.trim(), file, line_no, 1)?;
                inequalities.push((t, u));
            } else {
                let (name, args) = parse_atom_shape(item, file, line_no)?;
                let terms = args
                    .iter()
                    .map(|a| parse_term(a, file, line_no, 1))
                    .collect::<Result<Vec<_>, _>>()?;
                atoms.push(Atom::new(name, terms));
            }
        }
        disjuncts.push(Disjunct::new(atoms, inequalities));
    }
    Query::union(disjuncts).map_err(|e| ParseError::new(file, 1, 1, e.to_string()))
}

pub fn serialize_database(db: &Database) -> String {
    let mut out = String::new();
    for f in db.facts() {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out
}

fn positions_text(positions: &std::collections::BTreeSet<usize>) -> String {
    positions
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn serialize_constraints(sigma: &[Constraint]) -> String {
    let mut out = String::new();
    for c in sigma {
        match c {
            Constraint::Key { relation, positions } => {
                out.push_str(&format!("key {relation} : {}\n", positions_text(positions)));
            }
            Constraint::Fd { relation, lhs, rhs } => {
                out.push_str(&format!(
                    "fd {relation} : {} -> {}\n",
                    positions_text(lhs),
                    positions_text(rhs)
                ));
            }
            Constraint::Dc { atoms } => {
                let items: Vec<String> = atoms
                    .iter()
                    .map(|a| match a {
                        DcAtom::Rel(atom) => atom.to_string(),
                        DcAtom::Eq(t, u) => format!("{t} = {u}"),
                        DcAtom::Neq(t, u) => format!("{t} != {u}"),
                    })
                    .collect();
                out.push_str(&format!("dc : {}\n", items.join(", ")));
            }
        }
    }
    out
}

pub fn serialize_query(q: &Query) -> String {
    match q {
        Query::False => "false\n".to_string(),
        Query::Union(disjuncts) => {
            let mut out = String::new();
            for d in disjuncts {
                let mut items: Vec<String> = d.atoms.iter().map(Atom::to_string).collect();
                items.extend(d.inequalities.iter().map(|(t, u)| format!("{t} != {u}")));
                out.push_str(&items.join(", "));
                out.push('\n');
            }
            out
        }
    }
}
