// SPDX-License-Identifier: Apache-2.0

//! Tokenizer for the supported Verilog subset.
//!
//! Comments and whitespace are dropped. A leading `` `timescale `` directive
//! line is skipped; any other compiler directive is a lex error because the
//! preprocessor is not modelled.

use serde::Serialize;

use super::Span;

/// Reserved words the lexer recognises. Some of them only exist so the
/// parser can reject out-of-subset constructs with a precise message.
pub const KEYWORDS: &[&str] = &[
    "always",
    "and",
    "assign",
    "begin",
    "buf",
    "case",
    "casex",
    "casez",
    "default",
    "else",
    "end",
    "endcase",
    "endfunction",
    "endgenerate",
    "endmodule",
    "endtask",
    "event",
    "for",
    "forever",
    "function",
    "generate",
    "genvar",
    "if",
    "initial",
    "inout",
    "input",
    "integer",
    "localparam",
    "macromodule",
    "module",
    "nand",
    "negedge",
    "nor",
    "not",
    "or",
    "output",
    "parameter",
    "posedge",
    "real",
    "reg",
    "repeat",
    "signed",
    "task",
    "time",
    "tri",
    "while",
    "wire",
    "xnor",
    "xor",
];

/// Multi-character operators, longest first so greedy matching works.
const OPERATORS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "**", "<<", ">>", "==", "!=", "<=", ">=", "&&", "||", "~&", "~|", "~^", "^~", "->",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "?",
];

const PUNCTUATION: &[u8] = b"()[]{};,.@#:=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Keyword,
    Identifier,
    SizedLiteral,
    UnsizedLiteral,
    StringLiteral,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.is(TokenKind::Keyword, kw)
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.is(TokenKind::Punctuation, p)
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.is(TokenKind::Operator, op)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("lex error at {span}: {message}")]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

impl LexError {
    fn new(message: impl Into<String>, start: usize, end: usize) -> Self {
        LexError {
            message: message.into(),
            span: Span::new(start, end),
        }
    }
}

/// Tokenizes raw bytes. Invalid UTF-8 is reported at the first bad byte.
pub fn tokenize_bytes(source: &[u8]) -> Result<Vec<Token>, LexError> {
    match std::str::from_utf8(source) {
        Ok(text) => tokenize(text),
        Err(e) => {
            let at = e.valid_up_to();
            Err(LexError::new("invalid UTF-8", at, at + 1))
        }
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer {
        src: source.as_bytes(),
        text: source,
        pos: 0,
        tokens: Vec::new(),
    }
    .run()
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    tokens: Vec<Token>,
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

impl<'a> Lexer<'a> {
    fn peek(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        self.tokens.push(Token {
            kind,
            lexeme: self.text[start..self.pos].to_string(),
            span: Span::new(start, self.pos),
        });
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        while let Some(b) = self.peek(0) {
            let start = self.pos;
            match b {
                b' ' | b'\t' | b'\r' | b'\n' | 0x0c => self.pos += 1,
                b'/' if self.peek(1) == Some(b'/') => self.skip_line(),
                b'/' if self.peek(1) == Some(b'*') => self.skip_block_comment()?,
                b'`' => self.directive()?,
                b'"' => self.string()?,
                b'\\' => self.escaped_ident()?,
                b'$' => {
                    self.pos += 1;
                    while self.peek(0).is_some_and(is_ident_continue) {
                        self.pos += 1;
                    }
                    self.push(TokenKind::Identifier, start);
                }
                b'\'' => self.based_literal(start)?,
                b'0'..=b'9' => self.number()?,
                _ if is_ident_start(b) => {
                    while self.peek(0).is_some_and(is_ident_continue) {
                        self.pos += 1;
                    }
                    let word = &self.text[start..self.pos];
                    let kind = if KEYWORDS.contains(&word) {
                        TokenKind::Keyword
                    } else {
                        TokenKind::Identifier
                    };
                    self.push(kind, start);
                }
                _ => self.operator_or_punct()?,
            }
        }
        Ok(self.tokens)
    }

    fn skip_line(&mut self) {
        while let Some(b) = self.peek(0) {
            if b == b'\n' {
                break;
            }
            self.pos += 1;
        }
    }

    fn skip_block_comment(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        self.pos += 2;
        loop {
            match self.peek(0) {
                None => return Err(LexError::new("unterminated block comment", start, self.src.len())),
                Some(b'*') if self.peek(1) == Some(b'/') => {
                    self.pos += 2;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn directive(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        self.pos += 1;
        while self.peek(0).is_some_and(is_ident_continue) {
            self.pos += 1;
        }
        let name = &self.text[start + 1..self.pos];
        if name == "timescale" {
            self.skip_line();
            Ok(())
        } else {
            Err(LexError::new(
                format!("unsupported compiler directive `{name}"),
                start,
                self.pos,
            ))
        }
    }

    fn string(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek(0) {
                None | Some(b'\n') => return Err(LexError::new("unterminated string", start, self.pos)),
                Some(b'\\') => self.pos += 2,
                Some(b'"') => {
                    self.pos += 1;
                    self.push(TokenKind::StringLiteral, start);
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn escaped_ident(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        self.pos += 1;
        while self.peek(0).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        if self.pos == start + 1 {
            return Err(LexError::new("empty escaped identifier", start, self.pos));
        }
        self.push(TokenKind::Identifier, start);
        Ok(())
    }

    /// Decimal digits, optionally followed by a base marker (`8'hFF`).
    fn number(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        while self.peek(0).is_some_and(|b| b.is_ascii_digit() || b == b'_') {
            self.pos += 1;
        }
        if self.peek(0) == Some(b'\'') {
            return self.based_literal(start);
        }
        if self.peek(0) == Some(b'.') && self.peek(1).is_some_and(|b| b.is_ascii_digit()) {
            return Err(LexError::new("real literals are not supported", start, self.pos + 1));
        }
        self.push(TokenKind::UnsizedLiteral, start);
        Ok(())
    }

    /// `'` [s] base digits; `start` points at the size prefix if any.
    fn based_literal(&mut self, start: usize) -> Result<(), LexError> {
        let sized = self.pos > start;
        self.pos += 1;
        if matches!(self.peek(0), Some(b's' | b'S')) {
            self.pos += 1;
        }
        match self.peek(0) {
            Some(b'b' | b'B' | b'o' | b'O' | b'd' | b'D' | b'h' | b'H') => self.pos += 1,
            _ => {
                return Err(LexError::new(
                    "illegal character: expected base after '",
                    start,
                    self.pos + 1,
                ))
            }
        }
        while matches!(self.peek(0), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self
            .peek(0)
            .is_some_and(|b| b.is_ascii_hexdigit() || matches!(b, b'_' | b'x' | b'X' | b'z' | b'Z' | b'?'))
        {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(LexError::new("based literal without digits", start, self.pos));
        }
        let kind = if sized {
            TokenKind::SizedLiteral
        } else {
            TokenKind::UnsizedLiteral
        };
        self.tokens.push(Token {
            kind,
            lexeme: self.text[start..self.pos].split_whitespace().collect(),
            span: Span::new(start, self.pos),
        });
        Ok(())
    }

    fn operator_or_punct(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let rest = &self.src[self.pos..];
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(op.as_bytes())) {
            self.pos += op.len();
            self.push(TokenKind::Operator, start);
            return Ok(());
        }
        let b = rest[0];
        if PUNCTUATION.contains(&b) {
            self.pos += 1;
            self.push(TokenKind::Punctuation, start);
            return Ok(());
        }
        let ch = self.text[start..].chars().next().unwrap_or('?');
        Err(LexError::new(
            format!("illegal character {ch:?}"),
            start,
            start + ch.len_utf8(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.lexeme)).collect()
    }

    #[test]
    fn strips_line_comment() {
        assert_eq!(
            kinds("wire a; // tail"),
            vec![
                (TokenKind::Keyword, "wire".into()),
                (TokenKind::Identifier, "a".into()),
                (TokenKind::Punctuation, ";".into()),
            ]
        );
    }

    #[test]
    fn sized_literal_is_one_token() {
        assert_eq!(kinds("8'hFF"), vec![(TokenKind::SizedLiteral, "8'hFF".into())]);
        assert_eq!(kinds("'d7"), vec![(TokenKind::UnsizedLiteral, "'d7".into())]);
        assert_eq!(kinds("42"), vec![(TokenKind::UnsizedLiteral, "42".into())]);
    }

    #[test]
    fn assign_statement_has_seven_tokens() {
        let toks = tokenize("assign y = a & b;").unwrap();
        assert_eq!(toks.len(), 7);
        assert!(toks.last().unwrap().is_punct(";"));
        assert!(toks[4].is_op("&"));
    }

    #[test]
    fn nonblocking_and_compare_share_lexeme() {
        let toks = tokenize("q <= d; a <= b").unwrap();
        assert!(toks[1].is_op("<="));
    }

    #[test]
    fn block_comment_and_timescale_are_skipped() {
        let toks = tokenize("`timescale 1ns/1ps\n/* a\n b */ module").unwrap();
        assert_eq!(toks.len(), 1);
        assert!(toks[0].is_keyword("module"));
        assert_eq!(toks[0].span, Span::new(30, 36));
    }

    #[test]
    fn errors_carry_spans() {
        let e = tokenize("wire /* open").unwrap_err();
        assert_eq!(e.message, "unterminated block comment");
        assert_eq!(e.span.start, 5);

        let e = tokenize("x = \"abc").unwrap_err();
        assert_eq!(e.message, "unterminated string");

        let e = tokenize("a £ b").unwrap_err();
        assert!(e.message.starts_with("illegal character"));
        assert_eq!(e.span, Span::new(2, 4));

        assert!(tokenize("`define W 8").is_err());
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        let e = tokenize_bytes(b"wire \xff;").unwrap_err();
        assert_eq!(e.message, "invalid UTF-8");
        assert_eq!(e.span.start, 5);
    }

    #[test]
    fn spans_are_monotonic() {
        let toks = tokenize("module m(input a, output [3:0] y); assign y = {4{a}}; endmodule").unwrap();
        for w in toks.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
        }
    }
}
