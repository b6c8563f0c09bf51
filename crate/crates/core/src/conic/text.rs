//! Sparse text serialization of [`ConicProblem`].
//!
//! ```text
//! CONIC 1
//! VARS <n>
//! ROWS <m>
//! OFFSET <float>
//! CONES <k>
//! <free|nonneg|soc|rsoc|psd> <size>      (k lines; psd size is the matrix side)
//! OBJ <nnz>
//! <var> <coeff>                          (nnz lines)
//! RHS <nnz>
//! <row> <value>
//! EQ <nnz>
//! <row> <var> <coeff>
//! NAMES <count>
//! <var> <name>
//! END
//! ```
//!
//! Indices are zero-based. Floats are written in shortest round-trip form, so
//! `read_problem(write_problem(p)) == p` holds exactly. Lines starting with `#` are
//! ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Cone, ConicError, ConicProblem};

pub fn write_problem(p: &ConicProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "CONIC 1");
    let _ = writeln!(out, "VARS {}", p.num_vars);
    let _ = writeln!(out, "ROWS {}", p.rhs.len());
    let _ = writeln!(out, "OFFSET {:?}", p.objective_offset);
    let _ = writeln!(out, "CONES {}", p.cones.len());
    for c in &p.cones {
        let _ = writeln!(out, "{} {}", c.keyword(), c.size_param());
    }
    let obj: Vec<(usize, f64)> =
        p.objective.iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
    let _ = writeln!(out, "OBJ {}", obj.len());
    for (j, c) in obj {
        let _ = writeln!(out, "{j} {c:?}");
    }
    let rhs: Vec<(usize, f64)> =
        p.rhs.iter().copied().enumerate().filter(|(_, b)| *b != 0.0).collect();
    let _ = writeln!(out, "RHS {}", rhs.len());
    for (i, b) in rhs {
        let _ = writeln!(out, "{i} {b:?}");
    }
    let _ = writeln!(out, "EQ {}", p.equalities.len());
    for &(i, j, a) in &p.equalities {
        let _ = writeln!(out, "{i} {j} {a:?}");
    }
    let _ = writeln!(out, "NAMES {}", p.var_map.len());
    for (name, j) in &p.var_map {
        let _ = writeln!(out, "{j} {name}");
    }
    let _ = writeln!(out, "END");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str, ConicError> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok(t);
            }
        }
        Err(self.err("unexpected end of input"))
    }

    fn err(&self, message: impl Into<String>) -> ConicError {
        ConicError::Parse { line: self.line, message: message.into() }
    }

    fn header(&mut self, key: &str) -> Result<&'a str, ConicError> {
        let l = self.next_line()?;
        let mut it = l.splitn(2, char::is_whitespace);
        if it.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(it.next().unwrap_or("").trim())
    }

    fn count(&mut self, key: &str) -> Result<usize, ConicError> {
        let v = self.header(key)?;
        v.parse().map_err(|_| self.err(format!("bad count for `{key}`")))
    }

    fn parse<T: std::str::FromStr>(&self, tok: Option<&str>) -> Result<T, ConicError> {
        tok.and_then(|t| t.parse().ok()).ok_or_else(|| self.err("bad field"))
    }
}

pub fn read_problem(text: &str) -> Result<ConicProblem, ConicError> {
    let mut r = Lines { inner: text.lines().enumerate(), line: 0 };
    if r.header("CONIC")? != "1" {
        return Err(r.err("unsupported version"));
    }
    let num_vars = r.count("VARS")?;
    let rows = r.count("ROWS")?;
    let offset_tok = r.header("OFFSET")?;
    let objective_offset: f64 = r.parse(Some(offset_tok))?;

    let k = r.count("CONES")?;
    let mut cones = Vec::with_capacity(k);
    for _ in 0..k {
        let l = r.next_line()?;
        let mut it = l.split_whitespace();
        let kw = it.next();
        let size: usize = r.parse(it.next())?;
        cones.push(match kw {
            Some("free") => Cone::Free(size),
            Some("nonneg") => Cone::Nonneg(size),
            Some("soc") => Cone::Soc(size),
            Some("rsoc") => Cone::RotatedSoc(size),
            Some("psd") => Cone::Psd(size),
            _ => return Err(r.err("unknown cone keyword")),
        });
    }

    let mut objective = vec![0.0; num_vars];
    for _ in 0..r.count("OBJ")? {
        let l = r.next_line()?;
        let mut it = l.split_whitespace();
        let j: usize = r.parse(it.next())?;
        let c: f64 = r.parse(it.next())?;
        *objective.get_mut(j).ok_or_else(|| r.err("objective index out of range"))? = c;
    }

    let mut rhs = vec![0.0; rows];
    for _ in 0..r.count("RHS")? {
        let l = r.next_line()?;
        let mut it = l.split_whitespace();
        let i: usize = r.parse(it.next())?;
        let b: f64 = r.parse(it.next())?;
        *rhs.get_mut(i).ok_or_else(|| r.err("rhs index out of range"))? = b;
    }

    let nnz = r.count("EQ")?;
    let mut equalities = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let l = r.next_line()?;
        let mut it = l.split_whitespace();
        let i: usize = r.parse(it.next())?;
        let j: usize = r.parse(it.next())?;
        let a: f64 = r.parse(it.next())?;
        equalities.push((i, j, a));
    }

    let mut var_map = BTreeMap::new();
    for _ in 0..r.count("NAMES")? {
        let l = r.next_line()?;
        let mut it = l.splitn(2, char::is_whitespace);
        let j: usize = r.parse(it.next())?;
        let name = it.next().map(str::trim).filter(|s| !s.is_empty()).ok_or_else(|| r.err("missing name"))?;
        if var_map.insert(name.to_string(), j).is_some() {
            return Err(ConicError::DuplicateName(name.to_string()));
        }
    }
    if r.next_line()? != "END" {
        return Err(r.err("expected `END`"));
    }

    let p = ConicProblem { num_vars, objective, objective_offset, equalities, rhs, cones, var_map };
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::ProblemBuilder;

    #[test]
    fn roundtrip_is_exact() {
        let mut b = ProblemBuilder::new();
        let x = b.block(Cone::Free(2));
        let s = b.block(Cone::Soc(3));
        let p = b.block(Cone::Psd(2));
        b.add_cost(x, 0.1);
        b.add_cost(s, 1.0 / 3.0);
        b.add_offset(-2.5e-17);
        b.equality(&[(x, 1.0), (x + 1, -1.0), (p + 1, std::f64::consts::PI)], 2.0);
        b.equality(&[(s + 2, 1e-300)], 0.0);
        b.name("x", x).unwrap();
        b.name("V[0,1] re", p + 1).unwrap();
        let prob = b.build();
        let text = write_problem(&prob);
        assert_eq!(read_problem(&text).unwrap(), prob);
    }

    #[test]
    fn rejects_cone_mismatch() {
        let text = "CONIC 1\nVARS 3\nROWS 0\nOFFSET 0.0\nCONES 1\nnonneg 2\nOBJ 0\nRHS 0\nEQ 0\nNAMES 0\nEND\n";
        assert!(matches!(read_problem(text), Err(ConicError::ConeMismatch { .. })));
    }
}
