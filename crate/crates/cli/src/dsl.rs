//! The `.pgts` program format: lexer, recursive-descent parser and printer.
//!
//! ```text
//! vars x, i;
//! init x = 1, i = 0;
//! assume i >= 0;
//! template i;
//! command x != 0 -> {x' = 0, i' = i + 1} @ 1/2 | {x' = 1, i' = i + 1} @ 1/2;
//! post i;
//! regions x = 0; x != 0;
//! ```
//!
//! After `vars`, clauses may appear in any order; `post` is mandatory and at
//! least one `command` is expected. Comments run from `#` or `//` to the end
//! of the line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use prexpect_core::guard::{CmpOp, Guard};
use prexpect_core::piecewise::{MinExpr, PiecewiseExpr};
use prexpect_core::rational::{self, Rational};
use prexpect_core::rva::{beta_abs, AbstractDomain};
use prexpect_core::{
    normalize, Assignment, CoreError, GuardedCommand, LinExpr, ProbBranch, Program, Region, Var,
};

/// A 1-based location in a source file.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ParseErrorKind {
    Syntax,
    PostMissing,
    ProbabilitySum,
    UndeclaredVariable,
    NonAffine,
    PostNotLinear,
    Invalid,
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
}

type PResult<T> = Result<T, ParseError>;

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Number(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
    length: usize,
}

const PUNCTS: [&str; 25] = [
    "->", "<=", ">=", "==", "!=", "&&", "||", ";", ",", "{", "}", "(", ")", "@", "'", "=", "<",
    ">", "|", "!", "+", "-", "*", "/", ":",
];

fn lex(file: &Arc<str>, src: &str) -> PResult<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            Tok::Number(chars[start..i].iter().collect())
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    i += p.len();
                    Tok::Punct(p)
                }
                None => {
                    return Err(ParseError {
                        kind: ParseErrorKind::Syntax,
                        span: SourceSpan {
                            file: file.clone(),
                            line,
                            column: col,
                            length: 1,
                        },
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        out.push(Token {
            tok,
            line,
            column: col,
            length: i - start,
        });
        col += i - start;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
        length: 1,
    });
    Ok(out)
}

const KEYWORDS: [&str; 8] = ["vars", "consts", "init", "assume", "template", "command", "post", "regions"];

struct Parser {
    file: Arc<str>,
    toks: Vec<Token>,
    pos: usize,
    /// Declared state variables; `None` while parsing free-standing expressions.
    declared: Option<BTreeSet<String>>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.span_at(self.pos)
    }

    fn span_at(&self, pos: usize) -> SourceSpan {
        let t = &self.toks[pos];
        SourceSpan {
            file: self.file.clone(),
            line: t.line,
            column: t.column,
            length: t.length.max(1),
        }
    }

    fn err<T>(&self, kind: ParseErrorKind, message: impl Into<String>) -> PResult<T> {
        Err(ParseError {
            kind,
            span: self.span(),
            message: message.into(),
        })
    }

    fn err_at<T>(&self, pos: usize, kind: ParseErrorKind, message: impl Into<String>) -> PResult<T> {
        Err(ParseError {
            kind,
            span: self.span_at(pos),
            message: message.into(),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(ParseErrorKind::Syntax, format!("expected `{p}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            t => self.err(ParseErrorKind::Syntax, format!("expected an identifier, found {t}")),
        }
    }

    fn variable(&mut self) -> PResult<Var> {
        let at = self.pos;
        let name = self.ident()?;
        if let Some(d) = &self.declared {
            if !d.contains(&name) {
                return self.err_at(
                    at,
                    ParseErrorKind::UndeclaredVariable,
                    format!("undeclared variable `{name}`"),
                );
            }
        }
        Ok(Var::new(&name))
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut out = vec![self.ident()?];
        while self.eat(",") || matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str())) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    // rational := int | int "/" posint | decimal
    fn rational(&mut self) -> PResult<Rational> {
        let at = self.pos;
        let num = self.number()?;
        if self.eat("/") {
            let den = self.number()?;
            if den.is_zero() {
                return self.err_at(at, ParseErrorKind::Syntax, "zero denominator");
            }
            return Ok(num / den);
        }
        Ok(num)
    }

    fn number(&mut self) -> PResult<Rational> {
        match self.peek().clone() {
            Tok::Number(s) => {
                self.pos += 1;
                Ok(rational::parse(&s).expect("lexer produces valid numbers"))
            }
            t => self.err(ParseErrorKind::Syntax, format!("expected a number, found {t}")),
        }
    }

    // linexpr := term (("+" | "-") term)*
    fn linexpr(&mut self) -> PResult<LinExpr> {
        let mut e = self.term()?;
        loop {
            if self.eat("+") {
                e = e + self.term()?;
            } else if self.eat("-") {
                e = e - self.term()?;
            } else {
                return Ok(e);
            }
        }
    }

    // term := factor (("*" | "/") factor)*
    fn term(&mut self) -> PResult<LinExpr> {
        let start = self.pos;
        let mut e = self.factor()?;
        loop {
            if self.eat("*") {
                let rhs = self.factor()?;
                e = if e.is_constant() {
                    rhs.scale(e.constant_term())
                } else if rhs.is_constant() {
                    e.scale(rhs.constant_term())
                } else {
                    return self.err_at(
                        start,
                        ParseErrorKind::NonAffine,
                        format!("product of non-constant expressions `{e}` and `{rhs}`"),
                    );
                };
            } else if self.eat("/") {
                let at = self.pos;
                let rhs = self.factor()?;
                if !rhs.is_constant() {
                    return self.err_at(at, ParseErrorKind::NonAffine, format!("division by `{rhs}`"));
                }
                if rhs.constant_term().is_zero() {
                    return self.err_at(at, ParseErrorKind::Syntax, "division by zero");
                }
                e = e.scale(&(Rational::one() / rhs.constant_term()));
            } else {
                return Ok(e);
            }
        }
    }

    // factor := number | ident | "(" linexpr ")" | "-" factor
    fn factor(&mut self) -> PResult<LinExpr> {
        match self.peek().clone() {
            Tok::Number(_) => Ok(LinExpr::constant(self.number()?)),
            Tok::Ident(_) => Ok(LinExpr::var(self.variable()?)),
            Tok::Punct("(") => {
                self.pos += 1;
                let e = self.linexpr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Punct("-") => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            t => self.err(ParseErrorKind::Syntax, format!("expected an expression, found {t}")),
        }
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct("=") | Tok::Punct("==") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            Tok::Punct(">=") => CmpOp::Ge,
            Tok::Punct(">") => CmpOp::Gt,
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    // pred := and ("||" and)*
    fn pred(&mut self) -> PResult<Guard> {
        let mut parts = vec![self.conj()?];
        while self.eat("||") {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().expect("one") } else { Guard::Or(parts) })
    }

    fn conj(&mut self) -> PResult<Guard> {
        let mut parts = vec![self.unary()?];
        while self.eat("&&") {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().expect("one") } else { Guard::And(parts) })
    }

    fn unary(&mut self) -> PResult<Guard> {
        if self.eat("!") {
            return Ok(Guard::not(self.unary()?));
        }
        if self.is_keyword("true") {
            self.pos += 1;
            return Ok(Guard::True);
        }
        if self.is_keyword("false") {
            self.pos += 1;
            return Ok(Guard::False);
        }
        if self.is_punct("(") {
            // Either a parenthesized predicate or the start of an arithmetic
            // operand; try the predicate first.
            let save = self.pos;
            self.pos += 1;
            if let Ok(g) = self.pred() {
                if self.eat(")") && !self.continues_arithmetic() {
                    return Ok(g);
                }
            }
            self.pos = save;
        }
        self.chain()
    }

    fn continues_arithmetic(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Punct("<" | "<=" | "=" | "==" | "!=" | ">=" | ">" | "+" | "-" | "*" | "/")
        )
    }

    // chain := linexpr op linexpr (op linexpr)*
    fn chain(&mut self) -> PResult<Guard> {
        let mut lhs = self.linexpr()?;
        let Some(op) = self.cmp_op() else {
            return self.err(
                ParseErrorKind::Syntax,
                format!("expected a comparison, found {}", self.peek()),
            );
        };
        let mut rhs = self.linexpr()?;
        let mut parts = vec![Guard::cmp(lhs.clone(), op, rhs.clone())];
        while let Some(op) = self.cmp_op() {
            lhs = rhs;
            rhs = self.linexpr()?;
            parts.push(Guard::cmp(lhs.clone(), op, rhs.clone()));
        }
        Ok(if parts.len() == 1 { parts.pop().expect("one") } else { Guard::And(parts) })
    }

    // minexpr := "min" "(" linexpr ("," linexpr)* ")" | linexpr
    fn minexpr(&mut self) -> PResult<MinExpr> {
        if self.is_keyword("min") && matches!(self.peek_at(1), Tok::Punct("(")) {
            self.pos += 2;
            let mut terms = vec![self.linexpr()?];
            while self.eat(",") {
                terms.push(self.linexpr()?);
            }
            self.expect(")")?;
            return Ok(MinExpr::new(terms));
        }
        Ok(MinExpr::single(self.linexpr()?))
    }

    // pwexpr := minexpr | "{" pred ":" minexpr ("," pred ":" minexpr)* "}"
    // Pieces are matched first to last; dominated `min` terms are pruned.
    fn pwexpr(&mut self) -> PResult<PiecewiseExpr> {
        if !self.eat("{") {
            let m = self.minexpr()?;
            return Ok(PiecewiseExpr::on_region(&Region::universe(), m).simplify());
        }
        let mut covered = Region::empty();
        let mut out = PiecewiseExpr::zero();
        loop {
            let at = self.pos;
            let g = self.pred()?;
            self.expect(":")?;
            let m = self.minexpr()?;
            let r = g.to_region().or_else(|e| self.err_at(at, ParseErrorKind::Invalid, e.to_string()))?;
            let fresh = r.subtract(&covered);
            covered = covered.union(&r);
            out = out.join_disjoint(&PiecewiseExpr::on_region(&fresh, m));
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(out.simplify())
    }

    // branch := "{" [update ("," update)*] "}" "@" rational
    fn branch(&mut self) -> PResult<ProbBranch> {
        self.expect("{")?;
        let mut updates = Vec::new();
        let mut seen = BTreeSet::new();
        if !self.is_punct("}") {
            loop {
                let at = self.pos;
                let v = self.variable()?;
                if !seen.insert(v.clone()) {
                    return self.err_at(at, ParseErrorKind::Syntax, format!("`{v}` is updated twice"));
                }
                self.expect("'")?;
                self.expect("=")?;
                updates.push((v, self.linexpr()?));
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("}")?;
        self.expect("@")?;
        let at = self.pos;
        let p = self.rational()?;
        if p <= Rational::zero() || p > Rational::one() {
            return self.err_at(at, ParseErrorKind::ProbabilitySum, format!("probability {p} is outside (0, 1]"));
        }
        Ok(ProbBranch::new(Assignment::new(updates), p))
    }

    fn command(&mut self) -> PResult<GuardedCommand> {
        let guard = self.pred()?;
        self.expect("->")?;
        let at = self.pos;
        let mut branches = vec![self.branch()?];
        while self.eat("|") {
            branches.push(self.branch()?);
        }
        let total: Rational = branches.iter().map(|b| b.probability.clone()).sum();
        if total > Rational::one() {
            return self.err_at(at, ParseErrorKind::ProbabilitySum, format!("branch probabilities sum to {total}"));
        }
        Ok(GuardedCommand::new(guard, branches))
    }

    fn program(&mut self) -> PResult<Program> {
        if !self.is_keyword("vars") {
            return self.err(ParseErrorKind::Syntax, format!("expected `vars`, found {}", self.peek()));
        }
        self.pos += 1;
        let variables = self.ident_list()?;
        self.expect(";")?;
        let mut declared: BTreeSet<String> = BTreeSet::new();
        for v in &variables {
            if !declared.insert(v.clone()) {
                return self.err(ParseErrorKind::Syntax, format!("`{v}` declared twice"));
            }
        }
        self.declared = Some(declared);
        let mut p = Program::new(variables.iter().map(|v| Var::new(v)).collect(), Vec::new(), PiecewiseExpr::zero());
        let mut post_at = None;
        loop {
            let at = self.pos;
            let Tok::Ident(kw) = self.peek().clone() else {
                if *self.peek() == Tok::Eof {
                    break;
                }
                return self.err(ParseErrorKind::Syntax, format!("expected a clause keyword, found {}", self.peek()));
            };
            self.pos += 1;
            match kw.as_str() {
                "consts" => {
                    for c in self.ident_list()? {
                        if !self.declared.as_mut().expect("declared").insert(c.clone()) {
                            return self.err_at(at, ParseErrorKind::Syntax, format!("`{c}` declared twice"));
                        }
                        p.consts.push(Var::new(&c));
                    }
                }
                "init" => {
                    let mut updates = Vec::new();
                    loop {
                        let v = self.variable()?;
                        self.expect("=")?;
                        updates.push((v, self.linexpr()?));
                        if !self.eat(",") {
                            break;
                        }
                    }
                    p.init = Some(Assignment::new(updates));
                }
                "assume" => p.assume = self.pred()?,
                "template" => {
                    let mut vars = vec![self.variable()?];
                    while self.eat(",") {
                        vars.push(self.variable()?);
                    }
                    p.template = Some(vars);
                }
                "command" => p.commands.push(self.command()?),
                "post" => {
                    post_at = Some(at);
                    p.post = self.pwexpr()?;
                }
                "regions" => {
                    let mut regions = vec![self.pred()?];
                    while self.eat(";") {
                        if matches!(self.peek(), Tok::Eof) || KEYWORDS.iter().any(|k| self.is_keyword(k)) {
                            self.pos -= 1;
                            break;
                        }
                        regions.push(self.pred()?);
                    }
                    p.regions = Some(regions);
                }
                _ => {
                    return self.err_at(at, ParseErrorKind::Syntax, format!("unknown clause `{kw}`"));
                }
            }
            self.expect(";")?;
        }
        let Some(post_at) = post_at else {
            return self.err(ParseErrorKind::PostMissing, "missing `post` clause");
        };
        if let Err(e) = p.validate() {
            return self.err_at(0, ParseErrorKind::Invalid, e.to_string());
        }
        // The post-expectation must be one affine function on each analysis region.
        if let Ok(np) = normalize(&p) {
            if let Ok(d) = AbstractDomain::from_program(&p, &np) {
                if let Err(CoreError::PostNotLinear { detail, .. }) = beta_abs(&Arc::new(d), &p.post) {
                    return self.err_at(post_at, ParseErrorKind::PostNotLinear, format!("post-expectation is not linear per region: {detail}"));
                }
            }
        }
        Ok(p)
    }
}

fn parser(file: &str, src: &str, declared: Option<BTreeSet<String>>) -> PResult<Parser> {
    let file: Arc<str> = Arc::from(file);
    let toks = lex(&file, src)?;
    Ok(Parser {
        file,
        toks,
        pos: 0,
        declared,
    })
}

fn finish<T>(p: &mut Parser, value: T) -> PResult<T> {
    if *p.peek() != Tok::Eof {
        return p.err(ParseErrorKind::Syntax, format!("unexpected {}", p.peek()));
    }
    Ok(value)
}

/// Parses a program; `file` is used only in diagnostics.
pub fn parse_program(file: &str, src: &str) -> PResult<Program> {
    let mut p = parser(file, src, None)?;
    let prog = p.program()?;
    finish(&mut p, prog)
}

/// Parses a free-standing expectation over the program's variables.
pub fn parse_pwexpr(program: &Program, file: &str, src: &str) -> PResult<PiecewiseExpr> {
    let declared = program.state_vars().iter().map(|v| v.name().to_string()).collect();
    let mut p = parser(file, src, Some(declared))?;
    let e = p.pwexpr()?;
    finish(&mut p, e)
}

/// Parses `x=1,i=0` style bindings.
pub fn parse_bindings(src: &str) -> PResult<BTreeMap<String, Rational>> {
    let mut p = parser("<bindings>", src, None)?;
    let mut out = BTreeMap::new();
    loop {
        let name = p.ident()?;
        p.expect("=")?;
        let value = p.linexpr()?;
        if !value.is_constant() {
            return p.err(ParseErrorKind::Syntax, "binding values must be numbers");
        }
        out.insert(name, value.constant_term().clone());
        if !p.eat(",") {
            break;
        }
    }
    finish(&mut p, out)
}

/// Prints a program in the input syntax.
pub fn print_program(p: &Program) -> String {
    let names = |vs: &[Var]| vs.iter().map(|v| v.name().to_string()).collect::<Vec<_>>().join(", ");
    let mut out = format!("vars {};\n", names(&p.variables));
    if !p.consts.is_empty() {
        out += &format!("consts {};\n", names(&p.consts));
    }
    if let Some(init) = &p.init {
        let parts: Vec<String> = init.updates().iter().map(|(v, e)| format!("{v} = {e}")).collect();
        out += &format!("init {};\n", parts.join(", "));
    }
    if p.assume != Guard::True {
        out += &format!("assume {};\n", p.assume);
    }
    if let Some(t) = &p.template {
        out += &format!("template {};\n", names(t));
    }
    for c in &p.commands {
        let branches: Vec<String> = c
            .branches
            .iter()
            .map(|b| format!("{} @ {}", b.assignment, b.probability))
            .collect();
        out += &format!("command {} -> {};\n", c.guard, branches.join(" | "));
    }
    out += &format!("post {};\n", p.post);
    if let Some(rs) = &p.regions {
        let parts: Vec<String> = rs.iter().map(|g| g.to_string()).collect();
        out += &format!("regions {};\n", parts.join("; "));
    }
    out
}
