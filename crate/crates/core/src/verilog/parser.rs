// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser with single-token lookahead. The first error
//! aborts; no recovery is attempted.

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::Span;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at {span}: expected {expected}, found {found}")]
pub struct ParseError {
    pub expected: String,
    pub found: String,
    pub span: Span,
}

/// A construct the parser recognises but which lies outside the subset.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported construct at {span}: {construct}")]
pub struct UnsupportedError {
    pub construct: String,
    pub span: Span,
}

#[derive(Debug)]
pub(crate) enum SyntaxError {
    Parse(ParseError),
    Unsupported(UnsupportedError),
}

impl From<SyntaxError> for super::FrontendError {
    fn from(e: SyntaxError) -> Self {
        match e {
            SyntaxError::Parse(p) => p.into(),
            SyntaxError::Unsupported(u) => u.into(),
        }
    }
}

type PResult<T> = Result<T, SyntaxError>;

pub(crate) fn parse_tokens(tokens: &[Token]) -> Result<SyntaxTree, SyntaxError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut modules = Vec::new();
    while !p.at_end() {
        modules.push(p.module()?);
    }
    let span = match (tokens.first(), tokens.last()) {
        (Some(a), Some(b)) => a.span.join(b.span),
        _ => Span::default(),
    };
    Ok(SyntaxTree { modules, span })
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

/// Keywords that open constructs deliberately left out of the subset.
const UNSUPPORTED_ITEMS: &[(&str, &str)] = &[
    ("initial", "initial blocks"),
    ("generate", "generate blocks"),
    ("genvar", "genvar declarations"),
    ("function", "functions"),
    ("task", "tasks"),
    ("integer", "integer variables"),
    ("real", "real variables"),
    ("time", "time variables"),
    ("event", "named events"),
    ("tri", "tri nets"),
    ("macromodule", "macromodule"),
];

const UNSUPPORTED_STMTS: &[(&str, &str)] = &[
    ("for", "for loops"),
    ("while", "while loops"),
    ("repeat", "repeat loops"),
    ("forever", "forever loops"),
    ("casez", "casez statements"),
    ("casex", "casex statements"),
];

fn describe(tok: Option<&Token>) -> String {
    match tok {
        Some(t) => format!("`{}`", t.lexeme),
        None => "end of input".to_string(),
    }
}

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + off)
    }

    fn eof_span(&self) -> Span {
        let end = self.tokens.last().map_or(0, |t| t.span.end);
        Span::new(end, end)
    }

    fn here(&self) -> Span {
        self.peek().map_or_else(|| self.eof_span(), |t| t.span)
    }

    fn prev_end(&self) -> usize {
        self.pos
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .map_or(0, |t| t.span.end)
    }

    fn span_from(&self, start: usize) -> Span {
        Span::new(start, self.prev_end().max(start))
    }

    fn error<T>(&self, expected: impl Into<String>) -> PResult<T> {
        Err(SyntaxError::Parse(ParseError {
            expected: expected.into(),
            found: describe(self.peek()),
            span: self.here(),
        }))
    }

    fn unsupported<T>(&self, construct: impl Into<String>, span: Span) -> PResult<T> {
        Err(SyntaxError::Unsupported(UnsupportedError {
            construct: construct.into(),
            span,
        }))
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn check_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn check_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn check_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.check_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.check_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.check_punct(p) {
            Ok(self.bump().span)
        } else {
            self.error(format!("`{p}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.check_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.error(format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                if t.lexeme.starts_with('$') {
                    return self.unsupported(format!("system task or function {}", t.lexeme), t.span);
                }
                self.pos += 1;
                Ok(Ident::new(t.lexeme.clone(), t.span))
            }
            _ => self.error("identifier"),
        }
    }

    fn reject_signed(&self) -> PResult<()> {
        if self.check_kw("signed") {
            return self.unsupported("signed declarations", self.here());
        }
        Ok(())
    }

    // ---- modules -------------------------------------------------------

    fn module(&mut self) -> PResult<ModuleDecl> {
        if self.check_kw("macromodule") {
            return self.unsupported("macromodule", self.here());
        }
        let start = self.expect_kw("module")?.start;
        let name = self.ident()?;
        let mut parameters = Vec::new();
        if self.eat_punct("#") {
            self.expect_punct("(")?;
            if !self.check_punct(")") {
                loop {
                    let local = if self.eat_kw("localparam") {
                        true
                    } else {
                        self.eat_kw("parameter");
                        false
                    };
                    let range = self.opt_range()?;
                    loop {
                        parameters.push(self.param_assignment(local, range.clone())?);
                        // `parameter A = 1, B = 2` or `parameter A = 1, parameter B = 2`
                        if !self.check_punct(",")
                            || self
                                .peek_at(1)
                                .is_some_and(|t| t.is_keyword("parameter") || t.is_keyword("localparam"))
                        {
                            break;
                        }
                        self.bump();
                    }
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
        }

        let mut ports = Vec::new();
        // Names listed in a non-ANSI header, resolved against body declarations.
        let mut header_names: Vec<Ident> = Vec::new();
        let mut ansi = true;
        if self.eat_punct("(") {
            if !self.check_punct(")") {
                if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
                    ansi = false;
                    loop {
                        header_names.push(self.ident()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                } else {
                    self.ansi_ports(&mut ports)?;
                }
            }
            self.expect_punct(")")?;
        }
        self.expect_punct(";")?;

        let mut items = Vec::new();
        // (port, span of reg redeclaration) gathered from a non-ANSI body.
        let mut body_ports: Vec<Port> = Vec::new();
        loop {
            let Some(tok) = self.peek() else {
                return self.error("`endmodule`");
            };
            if tok.is_keyword("endmodule") {
                self.bump();
                break;
            }
            if tok.is_keyword("input") || tok.is_keyword("output") || tok.is_keyword("inout") {
                if ansi && !ports.is_empty() {
                    return self.error("module item (ports were declared in the header)");
                }
                ansi = false;
                self.body_port_decl(&mut body_ports)?;
                continue;
            }
            if tok.is_keyword("parameter") || tok.is_keyword("localparam") {
                let local = tok.is_keyword("localparam");
                self.bump();
                self.reject_signed()?;
                let range = self.opt_range()?;
                loop {
                    parameters.push(self.param_assignment(local, range.clone())?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")?;
                continue;
            }
            self.module_item(&mut items)?;
        }

        if !ansi {
            ports = self.merge_non_ansi(header_names, body_ports, &mut items)?;
        }

        Ok(ModuleDecl {
            name,
            parameters,
            ports,
            items,
            span: self.span_from(start),
        })
    }

    fn param_assignment(&mut self, local: bool, range: Option<Range>) -> PResult<ParamDecl> {
        let name = self.ident()?;
        self.expect_punct("=")?;
        let value = self.expr()?;
        let start = range.as_ref().map_or(name.span.start, |r| r.span.start);
        Ok(ParamDecl {
            span: Span::new(start.min(name.span.start), value.span.end),
            name,
            local,
            range,
            value,
        })
    }

    fn direction(&mut self) -> Option<Direction> {
        let d = match self.peek() {
            Some(t) if t.is_keyword("input") => Direction::Input,
            Some(t) if t.is_keyword("output") => Direction::Output,
            Some(t) if t.is_keyword("inout") => Direction::Inout,
            _ => return None,
        };
        self.pos += 1;
        Some(d)
    }

    fn net_kind(&mut self) -> Option<NetKind> {
        if self.eat_kw("wire") {
            Some(NetKind::Wire)
        } else if self.eat_kw("reg") {
            Some(NetKind::Reg)
        } else {
            None
        }
    }

    fn ansi_ports(&mut self, ports: &mut Vec<Port>) -> PResult<()> {
        let mut current: Option<(Direction, NetKind, Option<Range>, usize)> = None;
        loop {
            let start = self.here().start;
            if let Some(dir) = self.direction() {
                let kind = self.net_kind().unwrap_or(NetKind::Wire);
                self.reject_signed()?;
                let range = self.opt_range()?;
                current = Some((dir, kind, range, start));
            } else if current.is_none() {
                return self.error("port direction");
            }
            let name = self.ident()?;
            if self.check_punct("[") {
                return self.unsupported("unpacked array ports", self.here());
            }
            let (dir, kind, range, decl_start) = current.clone().expect("direction set");
            ports.push(Port {
                direction: dir,
                kind,
                range,
                span: Span::new(decl_start, name.span.end),
                name,
            });
            if !self.eat_punct(",") {
                return Ok(());
            }
        }
    }

    fn body_port_decl(&mut self, out: &mut Vec<Port>) -> PResult<()> {
        let start = self.here().start;
        let dir = self.direction().expect("caller checked direction");
        let kind = self.net_kind().unwrap_or(NetKind::Wire);
        self.reject_signed()?;
        let range = self.opt_range()?;
        let mut names = Vec::new();
        loop {
            names.push(self.ident()?);
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        let span = self.span_from(start);
        for name in names {
            out.push(Port {
                direction: dir,
                kind,
                range: range.clone(),
                name,
                span,
            });
        }
        Ok(())
    }

    /// Orders body port declarations by header position and folds
    /// `output y; reg y;` pairs into a single reg port.
    fn merge_non_ansi(&self, header: Vec<Ident>, body: Vec<Port>, items: &mut Vec<Item>) -> PResult<Vec<Port>> {
        let mut ports = Vec::with_capacity(header.len());
        for h in &header {
            let mut decls = body.iter().filter(|p| p.name.name == h.name);
            let Some(decl) = decls.next() else {
                return Err(SyntaxError::Parse(ParseError {
                    expected: format!("direction declaration for port `{}`", h.name),
                    found: "none".into(),
                    span: h.span,
                }));
            };
            if let Some(dup) = decls.next() {
                return Err(SyntaxError::Parse(ParseError {
                    expected: "a single direction declaration per port".into(),
                    found: format!("second declaration of `{}`", h.name),
                    span: dup.span,
                }));
            }
            ports.push(decl.clone());
        }
        if let Some(extra) = body.iter().find(|p| !header.iter().any(|h| h.name == p.name.name)) {
            return Err(SyntaxError::Parse(ParseError {
                expected: "port listed in the module header".into(),
                found: format!("`{}`", extra.name.name),
                span: extra.name.span,
            }));
        }
        // `reg y;` (or `wire y;`) re-declaring a port
        let mut kept = Vec::with_capacity(items.len());
        for item in items.drain(..) {
            if let Item::Net(mut decl) = item {
                let mut rest = Vec::new();
                for nn in decl.names.drain(..) {
                    match ports.iter_mut().find(|p| p.name.name == nn.name.name) {
                        Some(port) if nn.init.is_none() && port.kind == NetKind::Wire => {
                            if port.range.is_none() {
                                port.range = decl.range.clone();
                            }
                            port.kind = decl.kind;
                        }
                        _ => rest.push(nn),
                    }
                }
                if !rest.is_empty() {
                    decl.names = rest;
                    kept.push(Item::Net(decl));
                }
            } else {
                kept.push(item);
            }
        }
        *items = kept;
        Ok(ports)
    }

    fn opt_range(&mut self) -> PResult<Option<Range>> {
        if !self.check_punct("[") {
            return Ok(None);
        }
        let start = self.bump().span.start;
        let msb = self.expr()?;
        self.expect_punct(":")?;
        let lsb = self.expr()?;
        self.expect_punct("]")?;
        Ok(Some(Range {
            msb,
            lsb,
            span: self.span_from(start),
        }))
    }

    fn module_item(&mut self, items: &mut Vec<Item>) -> PResult<()> {
        let tok = self.peek().expect("caller checked");
        if tok.kind == TokenKind::Keyword {
            if let Some((_, what)) = UNSUPPORTED_ITEMS.iter().find(|(k, _)| tok.lexeme == *k) {
                return self.unsupported(*what, tok.span);
            }
        }
        match tok.lexeme.as_str() {
            "wire" | "reg" if tok.kind == TokenKind::Keyword => {
                items.push(Item::Net(self.net_decl()?));
                Ok(())
            }
            "assign" if tok.kind == TokenKind::Keyword => self.continuous_assign(items),
            "always" if tok.kind == TokenKind::Keyword => {
                items.push(Item::Always(self.always_block()?));
                Ok(())
            }
            _ if tok.kind == TokenKind::Keyword && GATE_PRIMITIVES.contains(&tok.lexeme.as_str()) => {
                self.instantiation(items)
            }
            _ if tok.kind == TokenKind::Identifier => self.instantiation(items),
            _ => self.error("module item"),
        }
    }

    fn net_decl(&mut self) -> PResult<NetDecl> {
        let start = self.here().start;
        let kind = self.net_kind().expect("caller checked");
        self.reject_signed()?;
        let range = self.opt_range()?;
        let mut names = Vec::new();
        loop {
            let name = self.ident()?;
            if self.check_punct("[") {
                return self.unsupported("memories (unpacked arrays)", self.here());
            }
            let init = if self.eat_punct("=") {
                if kind == NetKind::Reg {
                    return self.unsupported("reg initializers", name.span);
                }
                Some(self.expr()?)
            } else {
                None
            };
            let end = init.as_ref().map_or(name.span.end, |e| e.span.end);
            names.push(NetName {
                span: Span::new(name.span.start, end),
                name,
                init,
            });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(NetDecl {
            kind,
            range,
            names,
            span: self.span_from(start),
        })
    }

    fn continuous_assign(&mut self, items: &mut Vec<Item>) -> PResult<()> {
        let start = self.bump().span.start;
        if self.check_punct("#") {
            return self.unsupported("delays", self.here());
        }
        let mut pairs = Vec::new();
        loop {
            let lhs = self.lvalue()?;
            self.expect_punct("=")?;
            let rhs = self.expr()?;
            pairs.push((lhs, rhs));
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        let span = self.span_from(start);
        items.extend(
            pairs
                .into_iter()
                .map(|(lhs, rhs)| Item::Assign(ContinuousAssign { lhs, rhs, span })),
        );
        Ok(())
    }

    fn always_block(&mut self) -> PResult<AlwaysBlock> {
        let start = self.bump().span.start;
        if self.check_punct("#") {
            return self.unsupported("delays", self.here());
        }
        if !self.eat_punct("@") {
            return self.unsupported("always without an event control", self.here());
        }
        let sensitivity = if self.check_op("*") {
            self.bump();
            Sensitivity::Star
        } else {
            self.expect_punct("(")?;
            let s = if self.check_op("*") {
                self.bump();
                Sensitivity::Star
            } else {
                self.event_list()?
            };
            self.expect_punct(")")?;
            s
        };
        let body = self.stmt()?;
        Ok(AlwaysBlock {
            sensitivity,
            body,
            span: self.span_from(start),
        })
    }

    fn event_list(&mut self) -> PResult<Sensitivity> {
        let mut edges = Vec::new();
        let mut signals = Vec::new();
        loop {
            let edge = if self.eat_kw("posedge") {
                Some(Edge::Posedge)
            } else if self.eat_kw("negedge") {
                Some(Edge::Negedge)
            } else {
                None
            };
            let signal = self.ident()?;
            if self.check_punct("[") {
                return self.unsupported("bit-selects in sensitivity lists", self.here());
            }
            match edge {
                Some(edge) => edges.push(EdgeEvent { edge, signal }),
                None => signals.push(signal),
            }
            if !(self.eat_kw("or") || self.eat_punct(",")) {
                break;
            }
        }
        match (edges.is_empty(), signals.is_empty()) {
            (false, true) => Ok(Sensitivity::Edges(edges)),
            (true, false) => Ok(Sensitivity::Signals(signals)),
            _ => self.unsupported("mixed edge and level sensitivity", self.here()),
        }
    }

    fn connections(&mut self) -> PResult<Connections> {
        self.expect_punct("(")?;
        if self.eat_punct(")") {
            return Ok(Connections::Positional(Vec::new()));
        }
        if self.check_punct(".") {
            let mut named = Vec::new();
            loop {
                let start = self.expect_punct(".")?.start;
                let port = self.ident()?;
                self.expect_punct("(")?;
                let expr = if self.check_punct(")") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_punct(")")?;
                named.push(NamedConnection {
                    port,
                    expr,
                    span: self.span_from(start),
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(")")?;
            Ok(Connections::Named(named))
        } else {
            let mut pos = Vec::new();
            loop {
                if self.check_punct(",") || self.check_punct(")") {
                    pos.push(None);
                } else {
                    pos.push(Some(self.expr()?));
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(")")?;
            Ok(Connections::Positional(pos))
        }
    }

    fn instantiation(&mut self, items: &mut Vec<Item>) -> PResult<()> {
        let start = self.here().start;
        let head = self.bump();
        let module = Ident::new(head.lexeme.clone(), head.span);
        if module.name.starts_with('$') {
            return self.unsupported(format!("system task {}", module.name), module.span);
        }
        let primitive = head.kind == TokenKind::Keyword;
        let parameters = if self.eat_punct("#") {
            if primitive {
                return self.unsupported("gate delays", self.here());
            }
            if !self.check_punct("(") {
                return self.unsupported("delays", self.here());
            }
            Some(self.connections()?)
        } else {
            None
        };
        let mut instances = Vec::new();
        loop {
            let instance = if primitive && self.check_punct("(") {
                None
            } else {
                if !primitive && !self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
                    return self.error("instance name");
                }
                let id = self.ident()?;
                if self.check_punct("[") {
                    return self.unsupported("instance arrays", self.here());
                }
                Some(id)
            };
            let connections = self.connections()?;
            instances.push((instance, connections));
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        let span = self.span_from(start);
        for (instance, connections) in instances {
            items.push(Item::Instance(Instantiation {
                module: module.clone(),
                parameters: parameters.clone(),
                instance,
                connections,
                span,
            }));
        }
        Ok(())
    }

    // ---- statements ----------------------------------------------------

    fn stmt(&mut self) -> PResult<Stmt> {
        let Some(tok) = self.peek() else {
            return self.error("statement");
        };
        let start = tok.span.start;
        if tok.kind == TokenKind::Keyword {
            if let Some((_, what)) = UNSUPPORTED_STMTS.iter().find(|(k, _)| tok.lexeme == *k) {
                return self.unsupported(*what, tok.span);
            }
        }
        if tok.is_punct("#") {
            return self.unsupported("delays", tok.span);
        }
        if tok.is_punct("@") {
            return self.unsupported("event controls inside statements", tok.span);
        }
        if tok.is_op("->") {
            return self.unsupported("event triggers", tok.span);
        }
        if tok.kind == TokenKind::Identifier && tok.lexeme.starts_with('$') {
            return self.unsupported(format!("system task {}", tok.lexeme), tok.span);
        }
        if tok.is_punct(";") {
            self.bump();
            return Ok(Stmt {
                kind: StmtKind::Null,
                span: tok.span,
            });
        }
        if tok.is_keyword("begin") {
            self.bump();
            if self.eat_punct(":") {
                self.ident()?;
            }
            let mut body = Vec::new();
            while !self.check_kw("end") {
                if self.at_end() {
                    return self.error("`end`");
                }
                if self.check_kw("reg") || self.check_kw("integer") || self.check_kw("wire") {
                    return self.unsupported("declarations inside blocks", self.here());
                }
                body.push(self.stmt()?);
            }
            self.bump();
            return Ok(Stmt {
                kind: StmtKind::Block(body),
                span: self.span_from(start),
            });
        }
        if tok.is_keyword("if") {
            self.bump();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then = Box::new(self.stmt()?);
            let otherwise = if self.eat_kw("else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(Stmt {
                kind: StmtKind::If { cond, then, otherwise },
                span: self.span_from(start),
            });
        }
        if tok.is_keyword("case") {
            return self.case_stmt();
        }
        if tok.kind == TokenKind::Keyword && !tok.is_keyword("begin") {
            return self.error("statement");
        }

        let lhs = self.lvalue()?;
        let blocking = if self.eat_punct("=") {
            true
        } else if self.check_op("<=") {
            self.bump();
            false
        } else {
            return self.error("`=` or `<=`");
        };
        if self.check_punct("#") || self.check_punct("@") {
            return self.unsupported("intra-assignment timing controls", self.here());
        }
        let rhs = self.expr()?;
        self.expect_punct(";")?;
        let kind = if blocking {
            StmtKind::Blocking { lhs, rhs }
        } else {
            StmtKind::NonBlocking { lhs, rhs }
        };
        Ok(Stmt {
            kind,
            span: self.span_from(start),
        })
    }

    fn case_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump().span.start;
        self.expect_punct("(")?;
        let subject = self.expr()?;
        self.expect_punct(")")?;
        let mut arms = Vec::new();
        let mut default = None;
        loop {
            let Some(tok) = self.peek() else {
                return self.error("`endcase`");
            };
            if tok.is_keyword("endcase") {
                self.bump();
                break;
            }
            if tok.is_keyword("default") {
                let dspan = self.bump().span;
                self.eat_punct(":");
                if default.is_some() {
                    return Err(SyntaxError::Parse(ParseError {
                        expected: "a single default arm".into(),
                        found: "second `default`".into(),
                        span: dspan,
                    }));
                }
                default = Some(Box::new(self.stmt()?));
                continue;
            }
            let arm_start = tok.span.start;
            let mut labels = Vec::new();
            loop {
                labels.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(":")?;
            let body = self.stmt()?;
            arms.push(CaseArm {
                labels,
                body,
                span: self.span_from(arm_start),
            });
        }
        if arms.is_empty() && default.is_none() {
            return Err(SyntaxError::Parse(ParseError {
                expected: "at least one case arm".into(),
                found: "`endcase`".into(),
                span: self.span_from(start),
            }));
        }
        Ok(Stmt {
            kind: StmtKind::Case { subject, arms, default },
            span: self.span_from(start),
        })
    }

    fn lvalue(&mut self) -> PResult<Expr> {
        let start = self.here();
        let e = if self.check_punct("{") {
            self.concat_or_replication()?
        } else {
            self.ident_with_selects()?
        };
        if !e.is_lvalue() {
            return Err(SyntaxError::Parse(ParseError {
                expected: "assignable target".into(),
                found: "expression".into(),
                span: start.join(e.span),
            }));
        }
        Ok(e)
    }

    // ---- expressions ---------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.check_op("?") {
            self.bump();
            let then = self.expr()?;
            self.expect_punct(":")?;
            let otherwise = self.expr()?;
            let span = cond.span.join(otherwise.span);
            return Ok(Expr::new(
                ExprKind::Ternary {
                    cond: Box::new(cond),
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                },
                span,
            ));
        }
        Ok(cond)
    }

    fn peek_binary(&self) -> Option<BinaryOp> {
        let t = self.peek()?;
        if t.kind != TokenKind::Operator {
            return None;
        }
        BinaryOp::from_symbol(&t.lexeme)
    }

    /// Precedence climbing; `**` is left-associative like the other
    /// binary operators.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binary() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            // `[base +: width]` is handled (rejected) by the select parser
            if matches!(op, BinaryOp::Add | BinaryOp::Sub) && self.peek_at(1).is_some_and(|t| t.is_punct(":")) {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Operator {
                if let Some(op) = UnaryOp::from_symbol(&t.lexeme) {
                    let start = self.bump().span;
                    let operand = self.unary()?;
                    let span = start.join(operand.span);
                    return Ok(Expr::new(
                        ExprKind::Unary {
                            op,
                            operand: Box::new(operand),
                        },
                        span,
                    ));
                }
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek() else {
            return self.error("expression");
        };
        match tok.kind {
            TokenKind::SizedLiteral | TokenKind::UnsizedLiteral => {
                if tok.lexeme.contains("'s") || tok.lexeme.contains("'S") {
                    return self.unsupported("signed literals", tok.span);
                }
                self.bump();
                let lit = parse_literal(&tok.lexeme).map_err(|msg| {
                    SyntaxError::Parse(ParseError {
                        expected: "well-formed literal".into(),
                        found: msg,
                        span: tok.span,
                    })
                })?;
                Ok(Expr::new(ExprKind::Literal(lit), tok.span))
            }
            TokenKind::StringLiteral => self.unsupported("string literals", tok.span),
            TokenKind::Identifier => {
                if self.peek_at(1).is_some_and(|t| t.is_punct("(")) {
                    return self.unsupported(format!("function call {}", tok.lexeme), tok.span);
                }
                self.ident_with_selects()
            }
            TokenKind::Punctuation if tok.lexeme == "(" => {
                let start = self.bump().span;
                let mut inner = self.expr()?;
                let end = self.expect_punct(")")?;
                // parentheses are not a node; widen the span so children nest
                inner.span = start.join(end);
                Ok(inner)
            }
            TokenKind::Punctuation if tok.lexeme == "{" => self.concat_or_replication(),
            _ => self.error("expression"),
        }
    }

    fn ident_with_selects(&mut self) -> PResult<Expr> {
        let id = self.ident()?;
        let mut e = Expr::new(ExprKind::Ident(id.name), id.span);
        if self.check_punct("[") {
            self.bump();
            let first = self.expr()?;
            if (self.check_op("+") || self.check_op("-")) && self.peek_at(1).is_some_and(|t| t.is_punct(":")) {
                return self.unsupported("indexed part-selects", self.here());
            }
            e = if self.eat_punct(":") {
                let lsb = self.expr()?;
                let end = self.expect_punct("]")?;
                Expr::new(
                    ExprKind::PartSelect {
                        base: Box::new(e),
                        msb: Box::new(first),
                        lsb: Box::new(lsb),
                    },
                    id.span.join(end),
                )
            } else {
                let end = self.expect_punct("]")?;
                Expr::new(
                    ExprKind::BitSelect {
                        base: Box::new(e),
                        index: Box::new(first),
                    },
                    id.span.join(end),
                )
            };
            if self.check_punct("[") {
                return self.unsupported("multi-dimensional selects", self.here());
            }
        }
        Ok(e)
    }

    fn concat_or_replication(&mut self) -> PResult<Expr> {
        let start = self.expect_punct("{")?;
        let first = self.expr()?;
        if self.check_punct("{") {
            self.bump();
            let mut parts = Vec::new();
            loop {
                parts.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct("}")?;
            let end = self.expect_punct("}")?;
            return Ok(Expr::new(
                ExprKind::Replication {
                    count: Box::new(first),
                    parts,
                },
                start.join(end),
            ));
        }
        let mut parts = vec![first];
        while self.eat_punct(",") {
            parts.push(self.expr()?);
        }
        let end = self.expect_punct("}")?;
        Ok(Expr::new(ExprKind::Concat(parts), start.join(end)))
    }
}

/// Decodes a literal lexeme such as `8'hFF`, `'b1x`, or `42`.
pub fn parse_literal(lexeme: &str) -> Result<Literal, String> {
    let Some((size, rest)) = lexeme.split_once('\'') else {
        let digits: String = lexeme.chars().filter(|&c| c != '_').collect();
        let value: u128 = digits
            .parse()
            .map_err(|_| format!("decimal literal `{lexeme}` out of range"))?;
        if value >> super::ast::UNSIZED_WIDTH != 0 {
            return Err(format!("literal `{lexeme}` does not fit in 32 bits"));
        }
        return Ok(Literal {
            width: None,
            base: None,
            digits,
            value,
            xz_mask: 0,
        });
    };
    let width = if size.is_empty() {
        None
    } else {
        let w: u32 = size
            .chars()
            .filter(|&c| c != '_')
            .collect::<String>()
            .parse()
            .map_err(|_| format!("bad width in `{lexeme}`"))?;
        if w == 0 {
            return Err(format!("zero width in `{lexeme}`"));
        }
        Some(w)
    };
    let rest = rest.trim_start_matches(['s', 'S']);
    let mut chars = rest.chars();
    let base = match chars.next().map(|c| c.to_ascii_lowercase()) {
        Some('b') => Base::Binary,
        Some('o') => Base::Octal,
        Some('d') => Base::Decimal,
        Some('h') => Base::Hex,
        _ => return Err(format!("bad base in `{lexeme}`")),
    };
    let digits: String = chars.filter(|&c| c != '_').map(|c| c.to_ascii_lowercase()).collect();
    if digits.is_empty() {
        return Err(format!("no digits in `{lexeme}`"));
    }
    let (value, xz_mask, natural_bits) = match base {
        Base::Decimal => {
            if digits.chars().all(|c| matches!(c, 'x' | 'z' | '?')) && digits.len() == 1 {
                let w = width.unwrap_or(super::ast::UNSIZED_WIDTH);
                let mask = if w >= 128 { u128::MAX } else { (1u128 << w) - 1 };
                (0, mask, w)
            } else {
                let v: u128 = digits
                    .parse()
                    .map_err(|_| format!("bad decimal digits in `{lexeme}`"))?;
                (v, 0, 128 - v.leading_zeros())
            }
        }
        _ => {
            let bits_per = match base {
                Base::Binary => 1,
                Base::Octal => 3,
                _ => 4,
            };
            let mut value: u128 = 0;
            let mut mask: u128 = 0;
            for c in digits.chars() {
                let (d, xz) = match c {
                    'x' | 'z' | '?' => (0, (1u128 << bits_per) - 1),
                    _ => {
                        let d = c
                            .to_digit(1 << bits_per)
                            .ok_or_else(|| format!("digit `{c}` invalid for base in `{lexeme}`"))?;
                        (d as u128, 0)
                    }
                };
                if value >> (128 - bits_per) != 0 || mask >> (128 - bits_per) != 0 {
                    return Err(format!("literal `{lexeme}` exceeds 128 bits"));
                }
                value = (value << bits_per) | d;
                mask = (mask << bits_per) | xz;
            }
            let significant = 128 - (value | mask).leading_zeros();
            (value, mask, significant)
        }
    };
    let limit = width.unwrap_or(super::ast::UNSIZED_WIDTH);
    if natural_bits > limit {
        return Err(format!("value of `{lexeme}` exceeds its {limit}-bit width"));
    }
    Ok(Literal {
        width,
        base: Some(base),
        digits,
        value,
        xz_mask,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{parse_source, FrontendError};
    use super::*;

    fn module(src: &str) -> ModuleDecl {
        parse_source(src).expect("parses").modules.remove(0)
    }

    #[test]
    fn literal_decoding() {
        let l = parse_literal("8'hFF").unwrap();
        assert_eq!((l.width, l.value), (Some(8), 255));
        let l = parse_literal("8'd255").unwrap();
        assert_eq!((l.width, l.value), (Some(8), 255));
        let l = parse_literal("4'b1_0x1").unwrap();
        assert_eq!((l.value, l.xz_mask), (0b1001, 0b0010));
        assert_eq!(parse_literal("12").unwrap().width, None);
        assert!(parse_literal("8'h1FF").is_err());
        assert!(parse_literal("0'b0").is_err());
        assert!(parse_literal("4'b102").is_err());
    }

    #[test]
    fn non_ansi_ports_merge_reg_redeclaration() {
        let m = module(
            "module c(clk, q); input clk; output [3:0] q; reg [3:0] q;
             always @(posedge clk) q <= q + 1; endmodule",
        );
        assert_eq!(m.ports.len(), 2);
        assert_eq!(m.ports[1].kind, NetKind::Reg);
        assert_eq!(m.ports[1].direction, Direction::Output);
        assert!(m.items.iter().all(|i| !matches!(i, Item::Net(_))));
    }

    #[test]
    fn header_parameters_and_body_parameters() {
        let m = module(
            "module p #(parameter W = 8, D = 2) (input [W-1:0] a, output [W-1:0] y);
             localparam H = W / 2; assign y = a; endmodule",
        );
        let names: Vec<_> = m.parameters.iter().map(|p| p.name.name.as_str()).collect();
        assert_eq!(names, ["W", "D", "H"]);
        assert!(m.parameters[2].local);
    }

    #[test]
    fn precedence_binds_and_tighter_than_or() {
        let m = module("module m(input a, b, c, output y); assign y = a | b & c; endmodule");
        let Item::Assign(a) = &m.items[0] else { panic!() };
        let ExprKind::Binary { op, rhs, .. } = &a.rhs.kind else {
            panic!()
        };
        assert_eq!(*op, BinaryOp::BitOr);
        assert!(matches!(
            rhs.kind,
            ExprKind::Binary {
                op: BinaryOp::BitAnd,
                ..
            }
        ));
    }

    #[test]
    fn case_and_always_forms() {
        let m = module(
            "module mux(input [1:0] s, input a, b, c, output reg y);
             always @(s or a or b or c) begin
               case (s) 2'd0: y = a; 2'd1, 2'd2: y = b; default: y = c; endcase
             end endmodule",
        );
        let Item::Always(blk) = &m.items[0] else { panic!() };
        assert!(matches!(blk.sensitivity, Sensitivity::Signals(ref s) if s.len() == 4));
        let StmtKind::Block(body) = &blk.body.kind else {
            panic!()
        };
        let StmtKind::Case { arms, default, .. } = &body[0].kind else {
            panic!()
        };
        assert_eq!(arms.len(), 2);
        assert_eq!(arms[1].labels.len(), 2);
        assert!(default.is_some());
    }

    #[test]
    fn empty_case_is_rejected() {
        let err = parse_source("module m(input a, output reg y); always @* case (a) endcase endmodule").unwrap_err();
        assert!(matches!(err, FrontendError::Parse(_)));
    }

    #[test]
    fn gate_primitives_and_multiple_instances() {
        let m = module("module ha(input a, b, output s, c); xor g1(s, a, b), g2(c, a, b); and (c, a, b); endmodule");
        assert_eq!(m.items.len(), 3);
        let Item::Instance(i) = &m.items[2] else { panic!() };
        assert!(i.is_primitive());
        assert!(i.instance.is_none());
    }

    #[test]
    fn unsupported_constructs_are_classified() {
        for src in [
            "module m(); initial begin end endmodule",
            "module m(input a); generate endgenerate endmodule",
            "module m(input a, output reg y); always @* for (y = 0; y < 1; y = y + 1) ; endmodule",
            "module m(input a, output reg y); always @* y = #1 a; endmodule",
            "module m(input a, output y); assign y = $signed(a); endmodule",
            "module m(input signed a, output y); assign y = a; endmodule",
            "module m(input [7:0] a, output [3:0] y); assign y = a[0 +: 4]; endmodule",
            "module m(input a); reg [7:0] mem [0:3]; endmodule",
            "module m(input a); function f; endfunction endmodule",
            "module m(input a, output reg y); always @* casez (a) 1'b1: y = 1; endcase endmodule",
        ] {
            match parse_source(src) {
                Err(FrontendError::Unsupported(_)) => {}
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn grammar_violations_are_parse_errors() {
        for src in [
            "module m(input a, output y) assign y = a; endmodule",
            "module m(input a, output y); assign y = ; endmodule",
            "module m(input a, output y); assign (y) = a; endmodule",
            "module m(input a, output y); assign y = a + 1 endmodule",
            "module m(input a, output y);",
        ] {
            match parse_source(src) {
                Err(FrontendError::Parse(_)) => {}
                other => panic!("{src}: {other:?}"),
            }
        }
    }
}
