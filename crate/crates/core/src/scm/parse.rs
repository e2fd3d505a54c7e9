use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::expr::{BinOp, Expr, Func};
use super::{Distribution, DomainSpec, Scm, ScmError, Slot};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> ScmError {
    ScmError::Syntax { line, col, message: message.into() }
}

fn lex(src: &str, line: usize) -> Result<Vec<Token>, ScmError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
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
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(line, col, format!("malformed number `{text}`")))?;
            out.push(Token { tok: Tok::Num(v), col });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
        } else if "+-*/(),~=[]{}".contains(c) {
            out.push(Token { tok: Tok::Sym(c), col });
            i += 1;
        } else {
            return Err(syntax(line, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'t, F> {
    toks: &'t [Token],
    pos: usize,
    line: usize,
    end_col: usize,
    resolve: F,
}

impl<F> Parser<'_, F>
where
    F: FnMut(&str, usize, usize) -> Result<usize, ScmError>,
{
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn error(&self, message: impl Into<String>) -> ScmError {
        syntax(self.line, self.col(), message)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ScmError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize), ScmError> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let out = (name.clone(), self.col());
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn finish(&self) -> Result<(), ScmError> {
        if self.pos < self.toks.len() {
            Err(self.error("unexpected trailing input"))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Expr, ScmError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ScmError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ScmError> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<Expr, ScmError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let args = self.args()?;
                    self.call(&name, col, args)
                } else {
                    Ok(Expr::Var((self.resolve)(&name, self.line, col)?))
                }
            }
            _ => Err(self.error("expected an expression")),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, ScmError> {
        let mut args = Vec::new();
        if self.eat(')') {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(')') {
                return Ok(args);
            }
            self.expect(',')?;
        }
    }

    fn call(&self, name: &str, col: usize, mut args: Vec<Expr>) -> Result<Expr, ScmError> {
        let arity = match name {
            "normal" | "uniform" => 2,
            _ => match Func::from_name(name) {
                Some(f) => f.arity(),
                None => {
                    return Err(ScmError::UnknownFunction {
                        line: self.line,
                        col,
                        name: name.to_string(),
                    })
                }
            },
        };
        if args.len() != arity {
            return Err(syntax(
                self.line,
                col,
                format!("`{name}` takes {arity} argument(s), got {}", args.len()),
            ));
        }
        let noise = |a: Expr, b: Expr| -> Result<(Box<Expr>, Box<Expr>), ScmError> {
            if let (Some(x), Some(y)) = (constant(&a), constant(&b)) {
                let ok = if name == "normal" { y > 0.0 } else { x < y };
                if !ok || !x.is_finite() || !y.is_finite() {
                    return Err(ScmError::Invalid {
                        line: self.line,
                        message: format!("invalid parameters for `{name}`"),
                    });
                }
            }
            Ok((Box::new(a), Box::new(b)))
        };
        Ok(match name {
            "normal" | "uniform" => {
                let b = args.pop().unwrap_or(Expr::Num(0.0));
                let a = args.pop().unwrap_or(Expr::Num(0.0));
                let (a, b) = noise(a, b)?;
                if name == "normal" {
                    Expr::Normal(a, b)
                } else {
                    Expr::Uniform(a, b)
                }
            }
            _ => Expr::Call(Func::from_name(name).unwrap_or(Func::Exp), args),
        })
    }
}

/// Value of an expression with no variables and no noise.
fn constant(e: &Expr) -> Option<f64> {
    let mut refs = Vec::new();
    e.references(&mut refs);
    if !refs.is_empty() || e.is_stochastic() {
        return None;
    }
    Some(e.eval(&[], &mut super::NoRng))
}

/// Parses a standalone expression over the variables `names`; `Var(i)`
/// refers to `names[i]`.
pub fn parse_expr(src: &str, names: &[String]) -> Result<Expr, ScmError> {
    let toks = lex(src, 1)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        line: 1,
        end_col: src.chars().count() + 1,
        resolve: |name: &str, line, col| {
            names.iter().position(|n| n == name).ok_or_else(|| ScmError::Undeclared {
                line,
                col,
                name: name.to_string(),
            })
        },
    };
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses the line-oriented model language:
///
/// ```text
/// exo U ~ uniform(-1, 1)
/// X = U + normal(0, 0.1)
/// Y = cos(X)
/// domain X [-2, 2]
/// target Y
/// ```
///
/// Without a `target` line the last equation is the target.
pub fn parse_scm(text: &str) -> Result<Scm, ScmError> {
    let mut names: Vec<String> = Vec::new();
    let mut slots: Vec<Slot> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut domains: Vec<(usize, String, DomainSpec)> = Vec::new();
    let mut target: Option<(usize, String)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks = lex(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let end_col = raw.chars().count() + 1;
        let keyword = match (&toks[0].tok, toks.get(1).map(|t| &t.tok)) {
            (Tok::Ident(k), next) if next != Some(&Tok::Sym('=')) => Some(k.as_str()),
            _ => None,
        };
        let lookup = |index: &BTreeMap<String, usize>, lhs: Option<&str>| {
            let index = index.clone();
            let lhs = lhs.map(str::to_string);
            move |name: &str, line: usize, col: usize| {
                if lhs.as_deref() == Some(name) {
                    return Err(ScmError::SelfReference { line, name: name.to_string() });
                }
                index.get(name).copied().ok_or_else(|| ScmError::Undeclared {
                    line,
                    col,
                    name: name.to_string(),
                })
            }
        };
        let no_vars = |name: &str, line: usize, col: usize| -> Result<usize, ScmError> {
            Err(syntax(line, col, format!("`{name}`: only constants are allowed here")))
        };
        let mut p = Parser { toks: &toks, pos: 0, line, end_col, resolve: no_vars };
        match keyword {
            Some("exo") => {
                p.pos = 1;
                let (name, _) = p.ident("a variable name")?;
                p.expect('~')?;
                let (dist, col) = p.ident("`uniform` or `normal`")?;
                p.expect('(')?;
                let args = p.args()?;
                p.finish()?;
                let consts: Option<Vec<f64>> = args.iter().map(constant).collect();
                let consts = match consts {
                    Some(c) if c.len() == 2 => c,
                    _ => return Err(syntax(line, col, "expected two constant arguments")),
                };
                let distribution = match dist.as_str() {
                    "uniform" => Distribution::Uniform { lo: consts[0], hi: consts[1] },
                    "normal" => Distribution::Normal { mean: consts[0], sd: consts[1] },
                    _ => return Err(ScmError::UnknownFunction { line, col, name: dist }),
                };
                if !distribution.is_valid() {
                    return Err(ScmError::Invalid {
                        line,
                        message: format!("invalid parameters for `{dist}`"),
                    });
                }
                declare(&mut names, &mut slots, &mut index, line, name, Slot::Exogenous(distribution))?;
            }
            Some("domain") => {
                p.pos = 1;
                let (name, _) = p.ident("a variable name")?;
                let close = if p.eat('[') {
                    ']'
                } else if p.eat('{') {
                    '}'
                } else {
                    return Err(p.error("expected `[` or `{`"));
                };
                let mut values = Vec::new();
                loop {
                    let col = p.col();
                    let e = p.expr()?;
                    values.push(constant(&e).ok_or_else(|| syntax(line, col, "expected a constant"))?);
                    if p.eat(close) {
                        break;
                    }
                    p.expect(',')?;
                }
                p.finish()?;
                let spec = if close == ']' {
                    if values.len() != 2 {
                        return Err(syntax(line, 1, "a range needs exactly two bounds"));
                    }
                    DomainSpec::Continuous { lo: values[0], hi: values[1] }
                } else {
                    DomainSpec::Discrete { values }
                };
                if !spec.is_valid() {
                    return Err(ScmError::Invalid { line, message: format!("empty domain for `{name}`") });
                }
                if domains.iter().any(|(_, n, _)| *n == name) {
                    return Err(ScmError::Duplicate { line, name });
                }
                domains.push((line, name, spec));
            }
            Some("target") => {
                p.pos = 1;
                let (name, _) = p.ident("a variable name")?;
                p.finish()?;
                if target.is_some() {
                    return Err(ScmError::Invalid { line, message: "second `target` line".into() });
                }
                target = Some((line, name));
            }
            Some(_) => {
                let col = toks.get(1).map_or(end_col, |t| t.col);
                return Err(syntax(line, col, "expected `=`"));
            }
            None => {
                let (name, _) = match &toks[0].tok {
                    Tok::Ident(n) => (n.clone(), toks[0].col),
                    _ => return Err(syntax(line, toks[0].col, "expected a statement")),
                };
                let mut p = Parser {
                    toks: &toks,
                    pos: 2,
                    line,
                    end_col,
                    resolve: lookup(&index, Some(&name)),
                };
                let expr = p.expr()?;
                p.finish()?;
                declare(&mut names, &mut slots, &mut index, line, name, Slot::Endogenous(expr))?;
            }
        }
    }

    let endogenous = |name: &str| {
        index.get(name).is_some_and(|&s| matches!(slots[s], Slot::Endogenous(_)))
    };
    let target = match target {
        Some((line, name)) => {
            if !endogenous(&name) {
                return Err(ScmError::Invalid { line, message: format!("target `{name}` has no equation") });
            }
            index[&name]
        }
        None => match slots.iter().rposition(|s| matches!(s, Slot::Endogenous(_))) {
            Some(s) => s,
            None => return Err(ScmError::Invalid { line: 0, message: "no equations".into() }),
        },
    };
    let mut domain_map = BTreeMap::new();
    for (line, name, spec) in domains {
        if !endogenous(&name) {
            return Err(ScmError::Invalid { line, message: format!("domain for `{name}`, which has no equation") });
        }
        if index[&name] == target {
            return Err(ScmError::Invalid { line, message: "the target cannot be intervened on".into() });
        }
        domain_map.insert(name, spec);
    }
    Ok(Scm { names, slots, index, domains: domain_map, target })
}

fn declare(
    names: &mut Vec<String>,
    slots: &mut Vec<Slot>,
    index: &mut BTreeMap<String, usize>,
    line: usize,
    name: String,
    slot: Slot,
) -> Result<(), ScmError> {
    if index.contains_key(&name) {
        return Err(ScmError::Duplicate { line, name });
    }
    index.insert(name.clone(), names.len());
    names.push(name);
    slots.push(slot);
    Ok(())
}
