//! Line-oriented problem description language.
//!
//! ```text
//! manifold dim 2
//! vars x y
//! distribution V = span(d/dy)
//! truncation 8
//! equation R order 1 on V: p[0,1] = x*p[1,0]
//! transversal N: y=0
//! section F order 2:
//!   maps R -> R
//!   map x = x + x^2
//!   phi x = x + x^2
//! end
//! ```

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Zero};
use spencer_core::{MultiIndex, Series, Q};

pub const DEFAULT_TRUNCATION: i32 = 8;
const MAX_EXPONENT: u64 = 1000;
const MAX_INDEX: u32 = 1000;
const MAX_DIM: usize = 16;
const MAX_ORDER: usize = 32;
const MAX_TRUNCATION: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for Diagnostic {}

type PResult<T> = Result<T, Diagnostic>;

/// Jet coordinate p^comp_alpha.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct JetCoord {
    pub comp: usize,
    pub alpha: MultiIndex,
}

/// A relation Σ c·p = 0 with combined, nonzero, sorted terms.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationDecl {
    pub terms: Vec<(JetCoord, Series)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquationDecl {
    pub name: String,
    pub order: usize,
    /// Empty means the full jet space over V.
    pub relations: Vec<RelationDecl>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub name: String,
    pub vars: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransversalDecl {
    pub name: String,
    pub vars: Vec<usize>,
}

/// Candidate isomorphism data for verify-iso.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionDecl {
    pub name: String,
    pub order: Option<usize>,
    pub maps: Option<(String, String)>,
    /// Target map by variable; unset components are the identity.
    pub base_map: BTreeMap<usize, Series>,
    /// Fiber jets overriding those of the holonomic lift of the base map.
    pub jets: BTreeMap<JetCoord, Series>,
    /// Expected map on the transversal; unset components are the identity.
    pub phi: BTreeMap<usize, Series>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionDecl {
    pub name: String,
    /// Order of the connection forms, one more than the sections acted on.
    pub order: usize,
    pub omega: BTreeMap<usize, BTreeMap<JetCoord, Series>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JetDecl {
    pub name: String,
    pub order: usize,
    pub entries: BTreeMap<JetCoord, Series>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub dim: usize,
    pub vars: Vec<String>,
    pub distribution: Distribution,
    pub truncation: i32,
    pub equations: Vec<EquationDecl>,
    pub transversal: Option<TransversalDecl>,
    pub sections: Vec<SectionDecl>,
    pub connections: Vec<ConnectionDecl>,
    pub jets: Vec<JetDecl>,
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    /// `name[i,j,…]`
    Indexed(String, Vec<u32>),
    Sym(char),
    Arrow,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
    text: String,
}

fn lex(line: &str, lno: usize) -> PResult<Vec<Token>> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| Diagnostic { line: lno, column: col + 1, message: msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut frac = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    frac.push(chars[i]);
                    i += 1;
                }
                if frac.is_empty() {
                    return Err(err(start, "non-rational literal: digits expected after '.'".into()));
                }
            }
            if i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '.') {
                    j += 1;
                }
                let text: String = chars[start..j].iter().collect();
                return Err(err(start, format!("non-rational literal '{text}'")));
            }
            let text: String = chars[start..i].iter().collect();
            let int: String = text.chars().filter(|c| *c != '.').collect();
            let num: BigInt = int.parse().expect("digits");
            let den = num::pow(BigInt::from(10), frac.len());
            out.push(Token { tok: Tok::Num(BigRational::new(num, den)), col: start + 1, text });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            if i < chars.len() && chars[i] == '[' {
                let close = chars[i..]
                    .iter()
                    .position(|&c| c == ']')
                    .map(|p| p + i)
                    .ok_or_else(|| err(i, "unclosed '['".into()))?;
                let inner: String = chars[i + 1..close].iter().collect();
                let mut idx = Vec::new();
                for part in inner.split(',') {
                    let part = part.trim();
                    let v: u32 = part
                        .parse()
                        .ok()
                        .filter(|v| *v <= MAX_INDEX)
                        .ok_or_else(|| err(i + 1, format!("bad multi-index entry '{part}'")))?;
                    idx.push(v);
                }
                i = close + 1;
                let text: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Indexed(name, idx), col: start + 1, text });
            } else {
                out.push(Token { tok: Tok::Ident(name.clone()), col: start + 1, text: name });
            }
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Token { tok: Tok::Arrow, col: start + 1, text: "->".into() });
            i += 2;
            continue;
        }
        if "+-*/^()=;,:".contains(c) {
            out.push(Token { tok: Tok::Sym(c), col: start + 1, text: c.to_string() });
            i += 1;
            continue;
        }
        return Err(err(start, format!("unexpected character {c:?}")));
    }
    Ok(out)
}

// ---------------------------------------------------------------- expressions

/// Affine form konst + Σ terms·p.
#[derive(Clone, Debug)]
struct Lin {
    konst: Series,
    terms: BTreeMap<JetCoord, Series>,
}

impl Lin {
    fn pure(s: Series) -> Self {
        Lin { konst: s, terms: BTreeMap::new() }
    }

    fn is_pure(&self) -> bool {
        self.terms.is_empty()
    }

    fn add(mut self, o: Lin, sign: bool) -> Lin {
        self.konst = if sign { &self.konst - &o.konst } else { &self.konst + &o.konst };
        for (c, s) in o.terms {
            let e = self.terms.entry(c).or_insert_with(|| Series::zero(s.n_vars(), s.trunc()));
            *e = if sign { &*e - &s } else { &*e + &s };
        }
        self
    }

    fn scale(self, f: &Series) -> Lin {
        Lin {
            konst: &self.konst * f,
            terms: self.terms.into_iter().map(|(c, s)| (c, &s * f)).collect(),
        }
    }
}

/// What the expression may refer to besides variables.
#[derive(Clone, Copy)]
enum CoordMode<'a> {
    None,
    /// Jet coordinates of order at most `order` on the components of V.
    Jets { order: usize, fiber: &'a [usize] },
}

struct Ctx<'a> {
    lno: usize,
    vars: &'a [String],
    trunc: i32,
}

impl Ctx<'_> {
    fn err(&self, col: usize, msg: impl Into<String>) -> Diagnostic {
        Diagnostic { line: self.lno, column: col, message: msg.into() }
    }

    fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    fn var_of(&self, t: &Token) -> PResult<usize> {
        match &t.tok {
            Tok::Ident(n) => self.var_index(n).ok_or_else(|| self.err(t.col, format!("unknown variable '{n}'"))),
            _ => Err(self.err(t.col, format!("expected a variable, found '{}'", t.text))),
        }
    }

    fn constant(&self, c: Q) -> Series {
        Series::constant(self.vars.len(), self.trunc, c)
    }

    /// Resolves `p[..]`, `p<var>[..]` or `<var>[..]` to a coordinate.
    fn coord(&self, t: &Token, bare_prefix: &str, fiber: Option<&[usize]>) -> PResult<JetCoord> {
        let Tok::Indexed(name, idx) = &t.tok else {
            return Err(self.err(t.col, format!("expected a jet coordinate, found '{}'", t.text)));
        };
        let rest = name
            .strip_prefix(bare_prefix)
            .ok_or_else(|| self.err(t.col, format!("unknown jet coordinate '{}'", t.text)))?;
        let comp = if rest.is_empty() {
            match fiber {
                Some(f) if f.len() == 1 => f[0],
                Some(_) => {
                    return Err(self.err(
                        t.col,
                        format!("'{}' is ambiguous with several fiber directions; write p<var>[..]", t.text),
                    ))
                }
                None => return Err(self.err(t.col, format!("'{}' needs a variable name", t.text))),
            }
        } else {
            self.var_index(rest)
                .ok_or_else(|| self.err(t.col, format!("unknown variable '{rest}' in '{}'", t.text)))?
        };
        if let Some(f) = fiber {
            if !f.contains(&comp) {
                return Err(self.err(
                    t.col,
                    format!("component '{}' of '{}' is not in the distribution", self.vars[comp], t.text),
                ));
            }
        }
        if idx.len() != self.vars.len() {
            return Err(self.err(
                t.col,
                format!("multi-index of '{}' has {} entries, expected {}", t.text, idx.len(), self.vars.len()),
            ));
        }
        Ok(JetCoord { comp, alpha: MultiIndex(idx.clone()) })
    }
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    ctx: &'a Ctx<'a>,
    mode: CoordMode<'a>,
    end_col: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == c)
    }

    fn col(&self) -> usize {
        self.peek().map(|t| t.col).unwrap_or(self.end_col)
    }

    fn expr(&mut self) -> PResult<Lin> {
        let mut acc = self.term()?;
        while self.peek_sym('+') || self.peek_sym('-') {
            let neg = self.peek_sym('-');
            self.pos += 1;
            let t = self.term()?;
            acc = acc.add(t, neg);
        }
        Ok(acc)
    }

    fn term(&mut self) -> PResult<Lin> {
        let mut acc = self.factor()?;
        while self.peek_sym('*') || self.peek_sym('/') {
            let div = self.peek_sym('/');
            let col = self.col();
            self.pos += 1;
            let f = self.factor()?;
            if !f.is_pure() {
                if div {
                    return Err(self.ctx.err(col, "division by a jet coordinate"));
                }
                if !acc.is_pure() {
                    return Err(self.ctx.err(col, "product of jet coordinates; relations must be linear"));
                }
                acc = f.scale(&acc.konst);
            } else if div {
                let inv = f
                    .konst
                    .reciprocal()
                    .map_err(|_| self.ctx.err(col, "division by a series that vanishes at the origin"))?;
                acc = acc.scale(&inv);
            } else {
                acc = acc.scale(&f.konst);
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<Lin> {
        if self.peek_sym('-') {
            self.pos += 1;
            let f = self.factor()?;
            return Ok(f.scale(&self.ctx.constant(-Q::one())));
        }
        if self.peek_sym('+') {
            self.pos += 1;
            return self.factor();
        }
        let base = self.atom()?;
        if self.peek_sym('^') {
            let col = self.col();
            self.pos += 1;
            let e = match self.peek() {
                Some(Token { tok: Tok::Num(n), col, .. }) => {
                    if !n.is_integer() || n.numer() > &BigInt::from(MAX_EXPONENT) {
                        return Err(self.ctx.err(*col, format!("exponent must be an integer in 0..={MAX_EXPONENT}")));
                    }
                    n.to_integer().to_string().parse::<u32>().unwrap()
                }
                _ => return Err(self.ctx.err(self.col(), "expected an integer exponent")),
            };
            self.pos += 1;
            if !base.is_pure() {
                return Err(self.ctx.err(col, "power of a jet coordinate; relations must be linear"));
            }
            return Ok(Lin::pure(base.konst.pow(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Lin> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.ctx.err(self.end_col, "unexpected end of expression"));
        };
        self.pos += 1;
        match &t.tok {
            Tok::Num(n) => Ok(Lin::pure(self.ctx.constant(n.clone()))),
            Tok::Ident(name) => {
                if self.peek_sym('(') {
                    return Err(self.ctx.err(t.col, format!("non-rational literal: function '{name}' is not supported")));
                }
                let i = self.ctx.var_of(&t)?;
                Ok(Lin::pure(Series::var(self.ctx.vars.len(), self.ctx.trunc, i)))
            }
            Tok::Indexed(..) => match self.mode {
                CoordMode::None => Err(self.ctx.err(t.col, format!("jet coordinate '{}' not allowed here", t.text))),
                CoordMode::Jets { order, fiber } => {
                    let c = self.ctx.coord(&t, "p", Some(fiber))?;
                    if c.alpha.order() as usize > order {
                        return Err(self.ctx.err(
                            t.col,
                            format!("'{}' has order {} above the declared order {order}", t.text, c.alpha.order()),
                        ));
                    }
                    let mut terms = BTreeMap::new();
                    terms.insert(c, self.ctx.constant(Q::one()));
                    Ok(Lin { konst: self.ctx.constant(Q::zero()), terms })
                }
            },
            Tok::Sym('(') => {
                let inner = self.expr()?;
                if !self.peek_sym(')') {
                    return Err(self.ctx.err(self.col(), "expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(self.ctx.err(t.col, format!("unexpected '{}'", t.text))),
        }
    }
}

fn parse_expr<'a>(ctx: &'a Ctx<'a>, toks: &'a [Token], mode: CoordMode<'a>, end_col: usize) -> PResult<Lin> {
    if toks.is_empty() {
        return Err(ctx.err(end_col, "expected an expression"));
    }
    let mut p = Parser { toks, pos: 0, ctx, mode, end_col };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ctx.err(t.col, format!("unexpected '{}'", t.text)));
    }
    Ok(e)
}

fn parse_series(ctx: &Ctx, toks: &[Token], end_col: usize) -> PResult<Series> {
    Ok(parse_expr(ctx, toks, CoordMode::None, end_col)?.konst)
}

fn split_on(toks: &[Token], c: char) -> Vec<&[Token]> {
    toks.split(|t| t.tok == Tok::Sym(c)).collect()
}

fn parse_relation(ctx: &Ctx, toks: &[Token], order: usize, fiber: &[usize], end_col: usize) -> PResult<RelationDecl> {
    let sides = split_on(toks, '=');
    let col0 = toks.first().map(|t| t.col).unwrap_or(end_col);
    if sides.len() != 2 {
        return Err(ctx.err(col0, "a relation needs exactly one '='"));
    }
    let mode = CoordMode::Jets { order, fiber };
    let eq_col = sides[1].first().map(|t| t.col).unwrap_or(end_col);
    let lhs = parse_expr(ctx, sides[0], mode, eq_col)?;
    let rhs = parse_expr(ctx, sides[1], mode, end_col)?;
    let lin = lhs.add(rhs, true);
    if !lin.konst.is_zero() {
        return Err(ctx.err(col0, "relation has a term without a jet coordinate"));
    }
    let terms: Vec<(JetCoord, Series)> = lin.terms.into_iter().filter(|(_, s)| !s.is_zero()).collect();
    if terms.is_empty() {
        return Err(ctx.err(col0, "relation is identically zero"));
    }
    Ok(RelationDecl { terms: sort_terms(terms) })
}

/// Coordinates by order, then multi-index, then component.
fn sort_terms(mut terms: Vec<(JetCoord, Series)>) -> Vec<(JetCoord, Series)> {
    terms.sort_by(|(a, _), (b, _)| {
        (a.alpha.order(), &a.alpha, a.comp).cmp(&(b.alpha.order(), &b.alpha, b.comp))
    });
    terms
}

/// `<var>[α] = <series>`; `order` bounds |α|.
fn parse_assignment(ctx: &Ctx, toks: &[Token], order: usize, end_col: usize) -> PResult<(JetCoord, Series)> {
    let col0 = toks.first().map(|t| t.col).unwrap_or(end_col);
    if toks.len() < 3 || toks[1].tok != Tok::Sym('=') {
        return Err(ctx.err(col0, "expected '<var>[index] = <series>'"));
    }
    let c = ctx.coord(&toks[0], "", None)?;
    if c.alpha.order() as usize > order {
        return Err(ctx.err(
            col0,
            format!("'{}' has order {} above the declared order {order}", toks[0].text, c.alpha.order()),
        ));
    }
    Ok((c, parse_series(ctx, &toks[2..], end_col)?))
}

// ---------------------------------------------------------------- file level

struct Line {
    no: usize,
    toks: Vec<Token>,
    end_col: usize,
}

fn ident(t: Option<&Token>) -> Option<&str> {
    match t {
        Some(Token { tok: Tok::Ident(s), .. }) => Some(s),
        _ => None,
    }
}

fn expect_kw(l: &Line, i: usize, kw: &str) -> PResult<()> {
    if ident(l.toks.get(i)) == Some(kw) {
        Ok(())
    } else {
        let col = l.toks.get(i).map(|t| t.col).unwrap_or(l.end_col);
        Err(Diagnostic { line: l.no, column: col, message: format!("expected '{kw}'") })
    }
}

fn expect_sym(l: &Line, i: usize, c: char) -> PResult<()> {
    match l.toks.get(i) {
        Some(t) if t.tok == Tok::Sym(c) => Ok(()),
        t => Err(Diagnostic {
            line: l.no,
            column: t.map(|t| t.col).unwrap_or(l.end_col),
            message: format!("expected '{c}'"),
        }),
    }
}

fn name_at(l: &Line, i: usize, what: &str) -> PResult<String> {
    ident(l.toks.get(i)).map(str::to_string).ok_or_else(|| Diagnostic {
        line: l.no,
        column: l.toks.get(i).map(|t| t.col).unwrap_or(l.end_col),
        message: format!("expected {what}"),
    })
}

fn order_at(l: &Line, i: usize) -> PResult<usize> {
    let k = count_at(l, i, "an order")?;
    if k > MAX_ORDER {
        return Err(Diagnostic { line: l.no, column: l.toks[i].col, message: format!("order above {MAX_ORDER}") });
    }
    Ok(k)
}

fn count_at(l: &Line, i: usize, what: &str) -> PResult<usize> {
    match l.toks.get(i) {
        Some(Token { tok: Tok::Num(n), .. }) if n.is_integer() && n >= &BigRational::zero() => n
            .to_integer()
            .to_string()
            .parse()
            .map_err(|_| Diagnostic { line: l.no, column: l.toks[i].col, message: format!("{what} is too large") }),
        t => Err(Diagnostic {
            line: l.no,
            column: t.map(|t| t.col).unwrap_or(l.end_col),
            message: format!("expected {what} (a non-negative integer)"),
        }),
    }
}

fn no_trailing(l: &Line, i: usize) -> PResult<()> {
    match l.toks.get(i) {
        Some(t) => Err(Diagnostic { line: l.no, column: t.col, message: format!("unexpected '{}'", t.text) }),
        None => Ok(()),
    }
}

/// `section|connection|jet NAME [order K]:` → (name, order)
fn block_header(l: &Line) -> PResult<(String, Option<usize>)> {
    let name = name_at(l, 1, "a block name")?;
    let mut i = 2;
    let mut order = None;
    if ident(l.toks.get(i)) == Some("order") {
        order = Some(order_at(l, i + 1)?);
        i += 2;
    }
    expect_sym(l, i, ':')?;
    no_trailing(l, i + 1)?;
    Ok((name, order))
}

#[derive(Default)]
struct Builder {
    dim: Option<usize>,
    vars: Option<Vec<String>>,
    distribution: Option<Distribution>,
    truncation: Option<i32>,
    equations: Vec<EquationDecl>,
    transversal: Option<TransversalDecl>,
    sections: Vec<SectionDecl>,
    connections: Vec<ConnectionDecl>,
    jets: Vec<JetDecl>,
}

pub fn parse_problem_file(text: &str) -> Result<ProblemSpec, Diagnostic> {
    parse_problem_file_with(text, None)
}

/// Parses with an optional truncation overriding the file's `truncation` line.
pub fn parse_problem_file_with(text: &str, truncation: Option<i32>) -> Result<ProblemSpec, Diagnostic> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let toks = lex(raw, i + 1)?;
        if !toks.is_empty() {
            lines.push(Line { no: i + 1, toks, end_col: raw.chars().count() + 1 });
        }
    }
    let mut b = Builder::default();
    // truncation applies to every series, wherever it is declared
    for l in &lines {
        if ident(l.toks.first()) == Some("truncation") {
            let t = count_at(l, 1, "a truncation order")?;
            no_trailing(l, 2)?;
            if t > MAX_TRUNCATION {
                return Err(Diagnostic {
                    line: l.no,
                    column: l.toks[1].col,
                    message: format!("truncation above {MAX_TRUNCATION}"),
                });
            }
            if b.truncation.is_some() {
                return Err(Diagnostic { line: l.no, column: 1, message: "duplicate truncation".into() });
            }
            b.truncation = Some(i32::try_from(t).map_err(|_| Diagnostic {
                line: l.no,
                column: l.toks[1].col,
                message: "truncation is too large".into(),
            })?);
        }
    }
    let trunc = truncation.or(b.truncation).unwrap_or(DEFAULT_TRUNCATION);
    b.truncation = Some(trunc);

    let mut i = 0;
    while i < lines.len() {
        let l = &lines[i];
        let kw = ident(l.toks.first()).ok_or_else(|| Diagnostic {
            line: l.no,
            column: l.toks[0].col,
            message: format!("expected a keyword, found '{}'", l.toks[0].text),
        })?;
        match kw {
            "manifold" => {
                expect_kw(l, 1, "dim")?;
                let n = count_at(l, 2, "a dimension")?;
                no_trailing(l, 3)?;
                if n == 0 || n > MAX_DIM {
                    return Err(Diagnostic {
                        line: l.no,
                        column: l.toks[2].col,
                        message: format!("dimension must be in 1..={MAX_DIM}"),
                    });
                }
                if b.dim.replace(n).is_some() {
                    return Err(Diagnostic { line: l.no, column: 1, message: "duplicate manifold declaration".into() });
                }
            }
            "vars" => {
                let dim = b.dim.ok_or_else(|| Diagnostic {
                    line: l.no,
                    column: 1,
                    message: "'manifold dim' must come before 'vars'".into(),
                })?;
                let mut names = Vec::new();
                for t in &l.toks[1..] {
                    match &t.tok {
                        Tok::Ident(n) if n != "p" && !names.contains(n) => names.push(n.clone()),
                        _ => {
                            return Err(Diagnostic {
                                line: l.no,
                                column: t.col,
                                message: format!("bad or repeated variable name '{}'", t.text),
                            })
                        }
                    }
                }
                if names.len() != dim {
                    return Err(Diagnostic {
                        line: l.no,
                        column: 1,
                        message: format!("{} variables declared for a manifold of dimension {dim}", names.len()),
                    });
                }
                if b.vars.replace(names).is_some() {
                    return Err(Diagnostic { line: l.no, column: 1, message: "duplicate vars declaration".into() });
                }
            }
            "truncation" => {}
            "distribution" => {
                let vars = need_vars(&b, l)?;
                let name = name_at(l, 1, "a distribution name")?;
                expect_sym(l, 2, '=')?;
                expect_kw(l, 3, "span")?;
                expect_sym(l, 4, '(')?;
                let mut dirs = Vec::new();
                let mut j = 5;
                loop {
                    match l.toks.get(j).map(|t| &t.tok) {
                        Some(Tok::Sym(')')) => break,
                        Some(Tok::Sym(',')) => j += 1,
                        Some(Tok::Ident(d)) if d == "d" => {
                            expect_sym(l, j + 1, '/')?;
                            let t = l.toks.get(j + 2);
                            let v = ident(t)
                                .and_then(|s| s.strip_prefix('d'))
                                .and_then(|s| vars.iter().position(|v| v == s))
                                .ok_or_else(|| Diagnostic {
                                    line: l.no,
                                    column: t.map(|t| t.col).unwrap_or(l.end_col),
                                    message: "expected d/d<var> with a declared variable".into(),
                                })?;
                            if dirs.contains(&v) {
                                return Err(Diagnostic { line: l.no, column: l.toks[j].col, message: "repeated direction".into() });
                            }
                            dirs.push(v);
                            j += 3;
                        }
                        _ => {
                            return Err(Diagnostic {
                                line: l.no,
                                column: l.toks.get(j).map(|t| t.col).unwrap_or(l.end_col),
                                message: "expected d/d<var> or ')'".into(),
                            })
                        }
                    }
                }
                no_trailing(l, j + 1)?;
                if dirs.is_empty() {
                    return Err(Diagnostic { line: l.no, column: l.toks[4].col, message: "empty distribution".into() });
                }
                dirs.sort();
                if b.distribution.replace(Distribution { name, vars: dirs }).is_some() {
                    return Err(Diagnostic { line: l.no, column: 1, message: "duplicate distribution".into() });
                }
            }
            "equation" => {
                let vars = need_vars(&b, l)?;
                let dist = b.distribution.clone().ok_or_else(|| Diagnostic {
                    line: l.no,
                    column: 1,
                    message: "'distribution' must come before equations".into(),
                })?;
                let name = name_at(l, 1, "an equation name")?;
                expect_kw(l, 2, "order")?;
                let order = order_at(l, 3)?;
                expect_kw(l, 4, "on")?;
                let on = name_at(l, 5, "a distribution name")?;
                if on != dist.name {
                    return Err(Diagnostic {
                        line: l.no,
                        column: l.toks[5].col,
                        message: format!("unknown distribution '{on}'"),
                    });
                }
                expect_sym(l, 6, ':')?;
                if b.equations.iter().any(|e| e.name == name) {
                    return Err(Diagnostic { line: l.no, column: l.toks[1].col, message: format!("duplicate equation '{name}'") });
                }
                let ctx = Ctx { lno: l.no, vars: &vars, trunc };
                let mut relations = Vec::new();
                for part in split_on(&l.toks[7..], ';') {
                    if part.is_empty() {
                        continue;
                    }
                    relations.push(parse_relation(&ctx, part, order, &dist.vars, l.end_col)?);
                }
                b.equations.push(EquationDecl { name, order, relations });
            }
            "transversal" => {
                let vars = need_vars(&b, l)?;
                let name = name_at(l, 1, "a transversal name")?;
                expect_sym(l, 2, ':')?;
                let mut tv = Vec::new();
                for part in split_on(&l.toks[3..], ',') {
                    let ok = part.len() == 3
                        && part[1].tok == Tok::Sym('=')
                        && part[2].tok == Tok::Num(BigRational::zero());
                    let col = part.first().map(|t| t.col).unwrap_or(l.end_col);
                    let v = ident(part.first()).and_then(|s| vars.iter().position(|v| v == s));
                    match (ok, v) {
                        (true, Some(v)) => tv.push(v),
                        (true, None) => {
                            return Err(Diagnostic { line: l.no, column: col, message: format!("unknown variable '{}'", part[0].text) })
                        }
                        _ => return Err(Diagnostic { line: l.no, column: col, message: "expected <var>=0".into() }),
                    }
                }
                tv.sort();
                tv.dedup();
                if b.transversal.replace(TransversalDecl { name, vars: tv }).is_some() {
                    return Err(Diagnostic { line: l.no, column: 1, message: "duplicate transversal".into() });
                }
            }
            "section" | "connection" | "jet" => {
                let vars = need_vars(&b, l)?;
                let (name, order) = block_header(l)?;
                let start = i;
                let mut body = Vec::new();
                i += 1;
                while i < lines.len() && ident(lines[i].toks.first()) != Some("end") {
                    body.push(&lines[i]);
                    i += 1;
                }
                if i == lines.len() {
                    return Err(Diagnostic { line: lines[start].no, column: 1, message: format!("block '{name}' has no 'end'") });
                }
                no_trailing(&lines[i], 1)?;
                let ctx_for = |l: &Line| (l.no, l.end_col);
                match kw {
                    "section" => {
                        let mut s = SectionDecl {
                            name,
                            order,
                            maps: None,
                            base_map: BTreeMap::new(),
                            jets: BTreeMap::new(),
                            phi: BTreeMap::new(),
                        };
                        for bl in body {
                            let (no, end) = ctx_for(bl);
                            let ctx = Ctx { lno: no, vars: &vars, trunc };
                            match ident(bl.toks.first()) {
                                Some("maps") => {
                                    let src = name_at(bl, 1, "an equation name")?;
                                    match bl.toks.get(2) {
                                        Some(t) if t.tok == Tok::Arrow => {}
                                        t => {
                                            return Err(ctx.err(t.map(|t| t.col).unwrap_or(end), "expected '->'"));
                                        }
                                    }
                                    let dst = name_at(bl, 3, "an equation name")?;
                                    no_trailing(bl, 4)?;
                                    s.maps = Some((src, dst));
                                }
                                Some(k @ ("map" | "phi")) => {
                                    let v = bl.toks.get(1).ok_or_else(|| ctx.err(end, "expected a variable"))?;
                                    let v = ctx.var_of(v)?;
                                    expect_sym(bl, 2, '=')?;
                                    let e = parse_series(&ctx, &bl.toks[3..], end)?;
                                    let target = if k == "map" { &mut s.base_map } else { &mut s.phi };
                                    if target.insert(v, e).is_some() {
                                        return Err(ctx.err(bl.toks[1].col, format!("duplicate {k} for '{}'", vars[v])));
                                    }
                                }
                                Some("jet") => {
                                    let (c, e) = parse_assignment(&ctx, &bl.toks[1..], usize::MAX, end)?;
                                    if c.alpha.order() == 0 {
                                        return Err(ctx.err(bl.toks[1].col, "order-zero jets come from 'map' lines"));
                                    }
                                    s.jets.insert(c, e);
                                }
                                _ => return Err(ctx.err(bl.toks[0].col, "expected 'maps', 'map', 'jet' or 'phi'")),
                            }
                        }
                        if let (Some(k), Some(c)) = (s.order, s.jets.keys().map(|c| c.alpha.order()).max()) {
                            if c as usize > k {
                                return Err(Diagnostic {
                                    line: lines[start].no,
                                    column: 1,
                                    message: format!("section '{}' sets jets of order {c} above its order {k}", s.name),
                                });
                            }
                        }
                        b.sections.push(s);
                    }
                    "connection" => {
                        let order = order.ok_or_else(|| Diagnostic {
                            line: lines[start].no,
                            column: 1,
                            message: "connection blocks need 'order K'".into(),
                        })?;
                        let mut omega = BTreeMap::new();
                        for bl in body {
                            let (no, end) = ctx_for(bl);
                            let ctx = Ctx { lno: no, vars: &vars, trunc };
                            if ident(bl.toks.first()) != Some("omega") {
                                return Err(ctx.err(bl.toks[0].col, "expected 'omega <var>: …'"));
                            }
                            let v = ctx.var_of(bl.toks.get(1).ok_or_else(|| ctx.err(end, "expected a variable"))?)?;
                            expect_sym(bl, 2, ':')?;
                            let mut entries = BTreeMap::new();
                            for part in split_on(&bl.toks[3..], ';') {
                                if part.is_empty() {
                                    continue;
                                }
                                let (c, e) = parse_assignment(&ctx, part, order, end)?;
                                entries.insert(c, e);
                            }
                            if omega.insert(v, entries).is_some() {
                                return Err(ctx.err(bl.toks[1].col, format!("duplicate omega for '{}'", vars[v])));
                            }
                        }
                        b.connections.push(ConnectionDecl { name, order, omega });
                    }
                    _ => {
                        let order = order.ok_or_else(|| Diagnostic {
                            line: lines[start].no,
                            column: 1,
                            message: "jet blocks need 'order K'".into(),
                        })?;
                        let mut entries = BTreeMap::new();
                        for bl in body {
                            let (no, end) = ctx_for(bl);
                            let ctx = Ctx { lno: no, vars: &vars, trunc };
                            let (c, e) = parse_assignment(&ctx, &bl.toks, order, end)?;
                            entries.insert(c, e);
                        }
                        b.jets.push(JetDecl { name, order, entries });
                    }
                }
            }
            "end" => return Err(Diagnostic { line: l.no, column: 1, message: "'end' outside a block".into() }),
            other => {
                return Err(Diagnostic { line: l.no, column: l.toks[0].col, message: format!("unknown keyword '{other}'") })
            }
        }
        i += 1;
    }

    let missing = |what: &str| Diagnostic { line: 1, column: 1, message: format!("missing '{what}' declaration") };
    let dim = b.dim.ok_or_else(|| missing("manifold dim"))?;
    let vars = b.vars.ok_or_else(|| missing("vars"))?;
    let distribution = b.distribution.ok_or_else(|| missing("distribution"))?;
    Ok(ProblemSpec {
        dim,
        vars,
        distribution,
        truncation: trunc,
        equations: b.equations,
        transversal: b.transversal,
        sections: b.sections,
        connections: b.connections,
        jets: b.jets,
    })
}

fn need_vars(b: &Builder, l: &Line) -> PResult<Vec<String>> {
    b.vars.clone().ok_or_else(|| Diagnostic {
        line: l.no,
        column: 1,
        message: "'vars' must be declared first".into(),
    })
}

// ---------------------------------------------------------------- printing

impl ProblemSpec {
    pub fn coord_name(&self, c: &JetCoord) -> String {
        let a: Vec<String> = c.alpha.0.iter().map(|x| x.to_string()).collect();
        if self.distribution.vars.len() == 1 {
            format!("p[{}]", a.join(","))
        } else {
            format!("p{}[{}]", self.vars[c.comp], a.join(","))
        }
    }

    pub fn series_string(&self, s: &Series) -> String {
        s.format_with(&self.vars)
    }

    /// `Σ c·p = 0` in a form the parser reads back.
    pub fn relation_string(&self, terms: &[(JetCoord, Series)]) -> String {
        let names: Vec<String> = terms.iter().map(|(c, _)| self.coord_name(c)).collect();
        linear_string(terms.iter().map(|(_, s)| s).zip(names.iter().map(String::as_str)), &self.vars) + " = 0"
    }

    fn jet_entry(&self, c: &JetCoord, s: &Series) -> String {
        let a: Vec<String> = c.alpha.0.iter().map(|x| x.to_string()).collect();
        format!("{}[{}] = {}", self.vars[c.comp], a.join(","), self.series_string(s))
    }

    /// Normalized source text.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        out += &format!("manifold dim {}\n", self.dim);
        out += &format!("vars {}\n", self.vars.join(" "));
        let dirs: Vec<String> = self.distribution.vars.iter().map(|&v| format!("d/d{}", self.vars[v])).collect();
        out += &format!("distribution {} = span({})\n", self.distribution.name, dirs.join(", "));
        out += &format!("truncation {}\n", self.truncation);
        for e in &self.equations {
            let rels: Vec<String> = e.relations.iter().map(|r| self.relation_string(&r.terms)).collect();
            let body = if rels.is_empty() { String::new() } else { format!(" {}", rels.join("; ")) };
            out += &format!("equation {} order {} on {}:{}\n", e.name, e.order, self.distribution.name, body);
        }
        if let Some(t) = &self.transversal {
            let eqs: Vec<String> = t.vars.iter().map(|&v| format!("{}=0", self.vars[v])).collect();
            out += &format!("transversal {}: {}\n", t.name, eqs.join(", "));
        }
        for s in &self.sections {
            match s.order {
                Some(k) => out += &format!("section {} order {k}:\n", s.name),
                None => out += &format!("section {}:\n", s.name),
            }
            if let Some((a, b)) = &s.maps {
                out += &format!("  maps {a} -> {b}\n");
            }
            for (v, e) in &s.base_map {
                out += &format!("  map {} = {}\n", self.vars[*v], self.series_string(e));
            }
            for (c, e) in &s.jets {
                out += &format!("  jet {}\n", self.jet_entry(c, e));
            }
            for (v, e) in &s.phi {
                out += &format!("  phi {} = {}\n", self.vars[*v], self.series_string(e));
            }
            out += "end\n";
        }
        for c in &self.connections {
            out += &format!("connection {} order {}:\n", c.name, c.order);
            for (v, entries) in &c.omega {
                let parts: Vec<String> = entries.iter().map(|(c, e)| self.jet_entry(c, e)).collect();
                out += &format!("  omega {}: {}\n", self.vars[*v], parts.join("; "));
            }
            out += "end\n";
        }
        for j in &self.jets {
            out += &format!("jet {} order {}:\n", j.name, j.order);
            for (c, e) in &j.entries {
                out += &format!("  {}\n", self.jet_entry(c, e));
            }
            out += "end\n";
        }
        out
    }
}

/// Σ c_i·name_i with signs folded into the joins; "0" when empty.
pub fn linear_string<'a>(terms: impl Iterator<Item = (&'a Series, &'a str)>, vars: &[String]) -> String {
    let mut out = String::new();
    for (s, name) in terms {
        if s.is_zero() {
            continue;
        }
        let coef = s.format_with(vars);
        let (neg, body) = if coef == "1" {
            (false, name.to_string())
        } else if coef == "-1" {
            (true, name.to_string())
        } else if !coef.chars().skip(1).any(|c| matches!(c, ' ' | '+' | '-')) {
            match coef.strip_prefix('-') {
                Some(c) => (true, format!("{c}*{name}")),
                None => (false, format!("{coef}*{name}")),
            }
        } else {
            (false, format!("({coef})*{name}"))
        };
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}
