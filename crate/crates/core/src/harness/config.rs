//! Plain-text scenario config: tokenizer and value-tree parser.
//!
//! ```text
//! file   := (IDENT '=' value | IDENT record)*
//! value  := INT | INT '/' INT | STRING | IDENT | call | list | record
//! call   := IDENT '(' [arg (',' arg)*] ')'        arg := [IDENT '='] value
//! list   := '[' [value (',' value)*] ']'
//! record := '{' (IDENT '=' value | IDENT record) [','] ... '}'
//! ```
//!
//! Newlines are insignificant and `#` starts a comment.

use std::fmt;

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

pub fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, message: message.into() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Kind {
    Int(i64),
    Rat(Rational),
    Str(String),
    Ident(String),
    Call { name: String, args: Vec<Arg> },
    List(Vec<Value>),
    Record(Vec<(String, Value)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arg {
    pub key: Option<String>,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Value {
    pub line: usize,
    pub kind: Kind,
}

impl Value {
    fn what(&self) -> &'static str {
        match self.kind {
            Kind::Int(_) => "integer",
            Kind::Rat(_) => "rational",
            Kind::Str(_) => "string",
            Kind::Ident(_) => "identifier",
            Kind::Call { .. } => "call",
            Kind::List(_) => "list",
            Kind::Record(_) => "record",
        }
    }

    fn expected<T>(&self, what: &str) -> Result<T, ConfigError> {
        err(self.line, format!("expected {what}, found {} `{self}`", self.what()))
    }

    pub fn as_u64(&self) -> Result<u64, ConfigError> {
        match self.kind {
            Kind::Int(v) if v >= 0 => Ok(v as u64),
            _ => self.expected("a non-negative integer"),
        }
    }

    pub fn as_i64(&self) -> Result<i64, ConfigError> {
        match self.kind {
            Kind::Int(v) => Ok(v),
            _ => self.expected("an integer"),
        }
    }

    pub fn as_rat(&self) -> Result<Rational, ConfigError> {
        match self.kind {
            Kind::Int(v) => Ok(Rational::from_integer(v)),
            Kind::Rat(r) => Ok(r),
            _ => self.expected("a rational p/q"),
        }
    }

    pub fn as_bool(&self) -> Result<bool, ConfigError> {
        match self.ident() {
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            _ => self.expected("true or false"),
        }
    }

    /// Strings and bare identifiers.
    pub fn as_text(&self) -> Result<&str, ConfigError> {
        match &self.kind {
            Kind::Str(s) | Kind::Ident(s) => Ok(s),
            _ => self.expected("a name"),
        }
    }

    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            Kind::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Result<&[Value], ConfigError> {
        match &self.kind {
            Kind::List(v) => Ok(v),
            _ => self.expected("a list"),
        }
    }

    pub fn as_u64_list(&self) -> Result<Vec<u64>, ConfigError> {
        self.as_list()?.iter().map(Value::as_u64).collect()
    }

    pub fn as_record(&self) -> Result<Record<'_>, ConfigError> {
        match &self.kind {
            Kind::Record(entries) => Ok(Record::new(self.line, entries)),
            _ => self.expected("a record { ... }"),
        }
    }

    /// A call or a bare identifier (a call without arguments).
    pub fn as_call(&self) -> Result<Call<'_>, ConfigError> {
        match &self.kind {
            Kind::Ident(name) => Ok(Call { line: self.line, name, args: &[] }),
            Kind::Call { name, args } => Ok(Call { line: self.line, name, args }),
            _ => self.expected("a name or call"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Int(v) => write!(f, "{v}"),
            Kind::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Kind::Str(s) => write!(f, "{s:?}"),
            Kind::Ident(s) => f.write_str(s),
            Kind::Call { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    if let Some(k) = &a.key {
                        write!(f, "{k}=")?;
                    }
                    write!(f, "{}", a.value)?;
                }
                f.write_str(")")
            }
            Kind::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Kind::Record(entries) => {
                f.write_str("{ ")?;
                for (k, v) in entries {
                    write!(f, "{k} = {v} ")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Keyed view of a record that tracks which keys were read.
pub struct Record<'a> {
    pub line: usize,
    entries: &'a [(String, Value)],
    used: std::cell::RefCell<Vec<bool>>,
}

impl<'a> Record<'a> {
    fn new(line: usize, entries: &'a [(String, Value)]) -> Self {
        Self { line, entries, used: std::cell::RefCell::new(vec![false; entries.len()]) }
    }

    pub fn get(&self, key: &str) -> Option<&'a Value> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        self.used.borrow_mut()[pos] = true;
        Some(&self.entries[pos].1)
    }

    pub fn require(&self, key: &str) -> Result<&'a Value, ConfigError> {
        self.get(key).map_or_else(|| err(self.line, format!("missing key `{key}`")), Ok)
    }

    pub fn entries(&self) -> &'a [(String, Value)] {
        self.used.borrow_mut().iter_mut().for_each(|u| *u = true);
        self.entries
    }

    /// Rejects keys that were never read.
    pub fn finish(&self) -> Result<(), ConfigError> {
        let used = self.used.borrow();
        match self.entries.iter().zip(used.iter()).find(|(_, &u)| !u) {
            Some(((k, v), _)) => err(v.line, format!("unknown key `{k}`")),
            None => Ok(()),
        }
    }
}

/// Positional and keyword arguments of a call.
pub struct Call<'a> {
    pub line: usize,
    pub name: &'a str,
    args: &'a [Arg],
}

impl<'a> Call<'a> {
    pub fn positional(&self, i: usize) -> Option<&'a Value> {
        self.args.iter().filter(|a| a.key.is_none()).nth(i).map(|a| &a.value)
    }

    pub fn positional_count(&self) -> usize {
        self.args.iter().filter(|a| a.key.is_none()).count()
    }

    pub fn keyword(&self, key: &str) -> Option<&'a Value> {
        self.args.iter().find(|a| a.key.as_deref() == Some(key)).map(|a| &a.value)
    }

    /// Keyword `key`, else positional `i`.
    pub fn arg(&self, key: &str, i: usize) -> Option<&'a Value> {
        self.keyword(key).or_else(|| self.positional(i))
    }

    pub fn require(&self, key: &str, i: usize) -> Result<&'a Value, ConfigError> {
        self.arg(key, i).map_or_else(|| err(self.line, format!("`{}` needs argument `{key}`", self.name)), Ok)
    }

    /// Rejects unknown keywords and surplus positional arguments.
    pub fn check(&self, keys: &[&str], max_positional: usize) -> Result<(), ConfigError> {
        for a in self.args {
            if let Some(k) = &a.key {
                if !keys.contains(&k.as_str()) {
                    return err(a.value.line, format!("`{}` has no argument `{k}`", self.name));
                }
            }
        }
        if self.positional_count() > max_positional {
            return err(self.line, format!("`{}` takes at most {max_positional} positional arguments", self.name));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i64),
    Str(String),
    Ident(String),
    Sym(char),
    Eof,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ConfigError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '"' => {
                let start = line;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return err(start, "unterminated string"),
                        Some('"') => break,
                        Some('\\') if chars.get(i + 1) == Some(&'"') => {
                            s.push('"');
                            i += 1;
                        }
                        Some(&ch) => s.push(ch),
                    }
                    i += 1;
                }
                i += 1;
                out.push((Tok::Str(s), start));
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = text.parse().map_or_else(|_| err(line, format!("integer `{text}` out of range")), Ok)?;
                out.push((Tok::Int(v), line));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '-') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), line));
            }
            '=' | ',' | '(' | ')' | '[' | ']' | '{' | '}' | '/' => {
                out.push((Tok::Sym(c), line));
                i += 1;
            }
            other => return err(line, format!("unexpected character {other:?}")),
        }
    }
    out.push((Tok::Eof, line));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn line(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Int(v) => format!("`{v}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of file".into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ConfigError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            err(self.line(), format!("expected `{c}`, found {}", Self::describe(self.peek())))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// Entries up to `close` (`None` for end of file).
    fn entries(&mut self, close: Option<char>) -> Result<Vec<(String, Value)>, ConfigError> {
        let mut out: Vec<(String, Value)> = Vec::new();
        loop {
            match (self.peek().clone(), close) {
                (Tok::Eof, None) => return Ok(out),
                (Tok::Sym(c), Some(cl)) if c == cl => {
                    self.bump();
                    return Ok(out);
                }
                (Tok::Ident(key), _) => {
                    let line = self.line();
                    self.bump();
                    let value = if *self.peek() == Tok::Sym('{') {
                        self.value()?
                    } else {
                        self.expect('=')?;
                        self.value()?
                    };
                    if out.iter().any(|(k, _)| *k == key) {
                        return err(line, format!("duplicate key `{key}`"));
                    }
                    out.push((key, value));
                    self.eat(',');
                }
                (t, _) => return err(self.line(), format!("expected a key, found {}", Self::describe(&t))),
            }
        }
    }

    fn value(&mut self) -> Result<Value, ConfigError> {
        let line = self.line();
        let kind = match self.bump() {
            Tok::Int(p) => {
                if *self.peek() == Tok::Sym('/') {
                    self.bump();
                    match self.bump() {
                        Tok::Int(q) if q > 0 => Kind::Rat(Rational::new(p, q)),
                        _ => return err(line, "denominator must be a positive integer"),
                    }
                } else {
                    Kind::Int(p)
                }
            }
            Tok::Str(s) => Kind::Str(s),
            Tok::Ident(name) => {
                if *self.peek() == Tok::Sym('(') {
                    self.bump();
                    let mut args = Vec::new();
                    while !self.eat(')') {
                        let key = match (self.peek().clone(), self.peek2()) {
                            (Tok::Ident(k), Tok::Sym('=')) => {
                                self.bump();
                                self.bump();
                                Some(k)
                            }
                            _ => None,
                        };
                        let value = self.value()?;
                        args.push(Arg { key, value });
                        if !self.eat(',') {
                            self.expect(')')?;
                            break;
                        }
                    }
                    Kind::Call { name, args }
                } else {
                    Kind::Ident(name)
                }
            }
            Tok::Sym('[') => {
                let mut items = Vec::new();
                while !self.eat(']') {
                    items.push(self.value()?);
                    if !self.eat(',') {
                        self.expect(']')?;
                        break;
                    }
                }
                Kind::List(items)
            }
            Tok::Sym('{') => Kind::Record(self.entries(Some('}'))?),
            t => return err(line, format!("expected a value, found {}", Self::describe(&t))),
        };
        Ok(Value { line, kind })
    }
}

/// Parses a whole config file into its top-level record.
pub fn parse(src: &str) -> Result<Value, ConfigError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let entries = p.entries(None)?;
    Ok(Value { line: 1, kind: Kind::Record(entries) })
}

/// Parses a single value, e.g. a language expression.
pub fn parse_value(src: &str) -> Result<Value, ConfigError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let v = p.value()?;
    match p.peek() {
        Tok::Eof => Ok(v),
        t => err(p.line(), format!("trailing input {}", Parser::describe(t))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_values() {
        let v = parse("a = 3\nb = 1/4 # comment\nc { d = f(1, k=[2, 3]), e = \"s\" }\n").unwrap();
        let r = v.as_record().unwrap();
        assert_eq!(r.require("a").unwrap().as_u64().unwrap(), 3);
        assert_eq!(r.require("b").unwrap().as_rat().unwrap(), Rational::new(1, 4));
        let c = r.require("c").unwrap().as_record().unwrap();
        let call = c.require("d").unwrap().as_call().unwrap();
        assert_eq!(call.name, "f");
        assert_eq!(call.positional(0).unwrap().as_u64().unwrap(), 1);
        assert_eq!(call.keyword("k").unwrap().as_u64_list().unwrap(), vec![2, 3]);
        assert_eq!(c.require("e").unwrap().as_text().unwrap(), "s");
        assert!(r.finish().is_ok());
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(parse("a = 1\nb = [1, 2\nc = 3").unwrap_err().line, 3);
        assert_eq!(parse("a = 1\n\n  = 2").unwrap_err().line, 3);
        assert_eq!(parse("x = 1/0").unwrap_err().line, 1);
        assert_eq!(parse("a = 1\na = 2").unwrap_err().message, "duplicate key `a`");
        let v = parse("a = 1\nzz = 2").unwrap();
        let r = v.as_record().unwrap();
        r.get("a");
        assert_eq!(r.finish().unwrap_err().line, 2);
    }

    #[test]
    fn display_syntax_round_trips() {
        let src = "fep(mod=6, residues=[1,5], add=[4], remove=[7])";
        assert_eq!(parse_value(src).unwrap().to_string(), "fep(mod=6, residues=[1, 5], add=[4], remove=[7])");
    }
}
