//! Line-oriented problem files.
//!
//! ```text
//! # comment
//! vars: x y
//! minimize: x^2 + y^2
//! st: x + y >= 0.5
//! box: 0 1
//! box y: -1 2
//! binary: ...
//! ```

use std::fmt::Write as _;

use super::{ProblemInstance, VarKind};
use crate::error::{Error, Result};
use crate::polycore::Polynomial;

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Ge,
    Le,
    EqEq,
}

struct Lexed {
    toks: Vec<(Tok, usize)>,
    end_col: usize,
}

fn lex(text: &str, line: usize, col0: usize) -> Result<Lexed> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s
                .parse()
                .map_err(|_| err(line, col, format!("malformed number '{s}'")))?;
            if !v.is_finite() {
                return Err(err(line, col, format!("non-finite literal '{s}'")));
            }
            toks.push((Tok::Num(v), col));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, w) = match (c, two.as_str()) {
            (_, ">=") => (Tok::Ge, 2),
            (_, "<=") => (Tok::Le, 2),
            (_, "==") => (Tok::EqEq, 2),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('^', _) => (Tok::Caret, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            _ => return Err(err(line, col, format!("unexpected character '{c}'"))),
        };
        toks.push((tok, col));
        i += w;
    }
    Ok(Lexed {
        toks,
        end_col: col0 + chars.len(),
    })
}

struct ExprParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    end_col: usize,
    vars: &'a [String],
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn n(&self) -> usize {
        self.vars.len()
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.unary()?.scale(-1.0))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let col = self.col();
            match self.peek() {
                Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 0.0 && *v <= 64.0 => {
                    let e = *v as u32;
                    self.pos += 1;
                    return Ok(base.pow(e));
                }
                _ => return Err(err(self.line, col, "exponent must be a nonnegative integer")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Polynomial::constant(self.n(), v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let i = self
                    .vars
                    .iter()
                    .position(|v| *v == name)
                    .ok_or_else(|| err(self.line, col, format!("unknown variable {name}")))?;
                Ok(Polynomial::var(self.n(), i))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(err(self.line, self.col(), "expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(t) => Err(err(self.line, col, format!("unexpected token {t:?}"))),
            None => Err(err(self.line, col, "unexpected end of expression")),
        }
    }
}

fn parse_expr(text: &str, line: usize, col0: usize, vars: &[String]) -> Result<Polynomial> {
    let lexed = lex(text, line, col0)?;
    let mut p = ExprParser {
        toks: &lexed.toks,
        pos: 0,
        line,
        end_col: lexed.end_col,
        vars,
    };
    let out = p.expr()?;
    if p.pos != lexed.toks.len() {
        return Err(err(line, p.col(), "trailing input after expression"));
    }
    Ok(out)
}

fn parse_number(word: &str, line: usize, col: usize) -> Result<f64> {
    let v: f64 = word
        .parse()
        .map_err(|_| err(line, col, format!("expected a number, found '{word}'")))?;
    if !v.is_finite() {
        return Err(err(line, col, format!("non-finite literal '{word}'")));
    }
    Ok(v)
}

/// Splits `rest` into whitespace-separated words with their 1-based columns.
fn words(rest: &str, col0: usize) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in rest.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((&rest[s..i], col0 + rest[..s].chars().count()));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((&rest[s..], col0 + rest[..s].chars().count()));
    }
    out
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

pub fn parse_problem(text: &str) -> Result<ProblemInstance> {
    let mut vars: Option<Vec<String>> = None;
    let mut objective: Option<Polynomial> = None;
    let mut constraints = Vec::new();
    let mut default_box: Option<(f64, f64)> = None;
    let mut var_box: Vec<Option<(f64, f64)>> = Vec::new();
    let mut binary: Vec<bool> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(colon) = content.find(':') else {
            return Err(err(line, 1, "expected '<keyword>:'"));
        };
        let head = content[..colon].trim();
        let rest = &content[colon + 1..];
        let rest_col = content[..colon + 1].chars().count() + 1;

        if vars.is_none() && head != "vars" {
            return Err(err(line, 1, "the first line must declare 'vars:'"));
        }
        match head {
            "vars" => {
                if vars.is_some() {
                    return Err(err(line, 1, "duplicate 'vars:' line"));
                }
                let mut names: Vec<String> = Vec::new();
                for (w, col) in words(rest, rest_col) {
                    if !is_ident(w) {
                        return Err(err(line, col, format!("invalid variable name '{w}'")));
                    }
                    if names.iter().any(|n| n == w) {
                        return Err(err(line, col, format!("duplicate variable {w}")));
                    }
                    names.push(w.to_string());
                }
                if names.is_empty() {
                    return Err(err(line, rest_col, "no variables declared"));
                }
                var_box = vec![None; names.len()];
                binary = vec![false; names.len()];
                vars = Some(names);
            }
            "minimize" => {
                if objective.is_some() {
                    return Err(err(line, 1, "duplicate 'minimize:' line"));
                }
                let v = vars.as_deref().unwrap_or_default();
                objective = Some(parse_expr(rest, line, rest_col, v)?);
            }
            "st" => {
                let v = vars.as_deref().unwrap_or_default();
                let lexed = lex(rest, line, rest_col)?;
                let ops: Vec<usize> = lexed
                    .toks
                    .iter()
                    .enumerate()
                    .filter(|(_, (t, _))| matches!(t, Tok::Ge | Tok::Le | Tok::EqEq))
                    .map(|(i, _)| i)
                    .collect();
                if ops.len() != 1 {
                    return Err(err(line, rest_col, "expected exactly one of '>=', '<=', '=='"));
                }
                let op_idx = ops[0];
                let (op, op_col) = lexed.toks[op_idx].clone();
                let side = |toks: &[(Tok, usize)], end_col: usize| -> Result<Polynomial> {
                    let mut p = ExprParser {
                        toks,
                        pos: 0,
                        line,
                        end_col,
                        vars: v,
                    };
                    let out = p.expr()?;
                    if p.pos != toks.len() {
                        return Err(err(line, p.col(), "trailing input in constraint"));
                    }
                    Ok(out)
                };
                let lhs = side(&lexed.toks[..op_idx], op_col)?;
                let rhs = side(&lexed.toks[op_idx + 1..], lexed.end_col)?;
                match op {
                    Tok::Ge => constraints.push(lhs.sub(&rhs)),
                    Tok::Le => constraints.push(rhs.sub(&lhs)),
                    _ => {
                        let g = lhs.sub(&rhs);
                        let neg = g.scale(-1.0);
                        constraints.push(g);
                        constraints.push(neg);
                    }
                }
            }
            "binary" => {
                let v = vars.as_deref().unwrap_or_default();
                for (w, col) in words(rest, rest_col) {
                    let i = v
                        .iter()
                        .position(|n| n == w)
                        .ok_or_else(|| err(line, col, format!("unknown variable {w}")))?;
                    binary[i] = true;
                }
            }
            _ if head == "box" || head.starts_with("box ") || head.starts_with("box\t") => {
                let ws = words(rest, rest_col);
                if ws.len() != 2 {
                    return Err(err(line, rest_col, "box expects '<lo> <hi>'"));
                }
                let lo = parse_number(ws[0].0, line, ws[0].1)?;
                let hi = parse_number(ws[1].0, line, ws[1].1)?;
                if lo >= hi {
                    return Err(err(line, ws[0].1, format!("empty box [{lo}, {hi}]")));
                }
                let target = head[3..].trim();
                if target.is_empty() {
                    default_box = Some((lo, hi));
                } else {
                    let v = vars.as_deref().unwrap_or_default();
                    let i = v.iter().position(|n| n == target).ok_or_else(|| {
                        err(line, 5, format!("unknown variable {target}"))
                    })?;
                    var_box[i] = Some((lo, hi));
                }
            }
            other => return Err(err(line, 1, format!("unknown keyword '{other}'"))),
        }
    }

    let vars = vars.ok_or_else(|| err(1, 1, "missing 'vars:' line"))?;
    let objective = objective.ok_or_else(|| err(1, 1, "missing 'minimize:' line"))?;
    let kinds = (0..vars.len())
        .map(|i| {
            if binary[i] {
                VarKind::Binary
            } else if let Some((lo, hi)) = var_box[i].or(default_box) {
                VarKind::Box { lo, hi }
            } else {
                VarKind::Free
            }
        })
        .collect();
    ProblemInstance::new(vars, objective, constraints, kinds)
}

fn write_poly(out: &mut String, p: &Polynomial, names: &[String]) {
    if p.is_zero() {
        out.push('0');
        return;
    }
    for (i, (m, c)) in p.terms().enumerate() {
        let mag = if i == 0 {
            if c < 0.0 {
                out.push('-');
            }
            c.abs()
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
            c.abs()
        };
        write!(out, "{mag:?}").unwrap();
        for (v, &e) in m.exponents().iter().enumerate() {
            match e {
                0 => {}
                1 => write!(out, "*{}", names[v]).unwrap(),
                _ => write!(out, "*{}^{}", names[v], e).unwrap(),
            }
        }
    }
}

/// Writes the instance in the format read by [`parse_problem`]. Every
/// constraint is emitted as `... >= 0` and every box per variable.
pub fn serialize_problem(instance: &ProblemInstance) -> String {
    let names = &instance.var_names;
    let mut out = String::new();
    writeln!(out, "vars: {}", names.join(" ")).unwrap();
    out.push_str("minimize: ");
    write_poly(&mut out, &instance.objective, names);
    out.push('\n');
    for g in &instance.constraints {
        out.push_str("st: ");
        write_poly(&mut out, g, names);
        out.push_str(" >= 0\n");
    }
    let mut bin = Vec::new();
    for (name, kind) in names.iter().zip(&instance.kinds) {
        match kind {
            VarKind::Box { lo, hi } => writeln!(out, "box {name}: {lo:?} {hi:?}").unwrap(),
            VarKind::Binary => bin.push(name.as_str()),
            VarKind::Free => {}
        }
    }
    if !bin.is_empty() {
        writeln!(out, "binary: {}", bin.join(" ")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_univariate_square() {
        let p = parse_problem("vars: x\nminimize: 4*x^2 - 4*x + 1\nbox: 0 1").unwrap();
        assert_eq!(p.nvars(), 1);
        let expect = Polynomial::from_terms(1, [(vec![2], 4.0), (vec![1], -4.0), (vec![0], 1.0)]);
        assert_eq!(p.objective, expect);
        assert_eq!(p.kinds, vec![VarKind::Box { lo: 0.0, hi: 1.0 }]);
        assert!(p.constraints.is_empty());
    }

    #[test]
    fn unknown_variable_reports_position() {
        let e = parse_problem("vars: x\nminimize: y").unwrap_err();
        match e {
            Error::Parse {
                line,
                column,
                message,
            } => {
                assert_eq!(line, 2);
                assert_eq!(column, 11);
                assert_eq!(message, "unknown variable y");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors() {
        assert!(parse_problem("minimize: x\nvars: x").is_err());
        assert!(parse_problem("vars: x\nminimize: x +").is_err());
        assert!(parse_problem("vars: x\nminimize: x^1.5").is_err());
        assert!(parse_problem("vars: x\nminimize: 1e999*x").is_err());
        assert!(parse_problem("vars: x\nminimize: x\nst: x").is_err());
        assert!(parse_problem("vars: x\nminimize: x\nbox: 1 0").is_err());
    }

    #[test]
    fn constraints_comments_and_equalities() {
        let text = "# header\nvars: x y  # two\nminimize: (x - y)^2\nst: x + y >= 0.5\nst: x <= 0.75\nst: x - y == 0\nbox: 0 1\nbox y: -1 2\nbinary:\n";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.constraints.len(), 4);
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        assert_eq!(p.constraints[1], Polynomial::constant(2, 0.75).sub(&x));
        assert_eq!(p.constraints[2], x.sub(&y));
        assert_eq!(p.constraints[3], y.sub(&x));
        assert_eq!(p.kinds[1], VarKind::Box { lo: -1.0, hi: 2.0 });
    }

    #[test]
    fn convex_qp_round_trip() {
        let text = "vars: x1 x2\nminimize: x1^2 + x2^2\nst: x1 + x2 - 0.5 >= 0\nbox: 0 1\n";
        let p = parse_problem(text).unwrap();
        let again = parse_problem(&serialize_problem(&p)).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn binary_round_trip() {
        let text = "vars: a b c\nminimize: -a - b + 2*a*b\nbinary: a b c\n";
        let p = parse_problem(text).unwrap();
        assert!(p.is_all_binary());
        assert_eq!(parse_problem(&serialize_problem(&p)).unwrap(), p);
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(
            coeffs in proptest::collection::vec((-1e3f64..1e3, 0u32..3, 0u32..3), 1..6),
            lo in -5.0f64..0.0,
            width in 0.1f64..5.0,
        ) {
            let f = Polynomial::from_terms(2, coeffs.iter().map(|&(c, a, b)| (vec![a, b], c)));
            let g = f.scale(-0.5).add(&Polynomial::constant(2, 1.0 / 3.0));
            let inst = ProblemInstance::with_default_names(
                f,
                vec![g],
                vec![VarKind::Box { lo, hi: lo + width }, VarKind::Binary],
            ).unwrap();
            let text = serialize_problem(&inst);
            prop_assert_eq!(parse_problem(&text).unwrap(), inst);
        }
    }
}
