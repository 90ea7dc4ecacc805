// SPDX-License-Identifier: Apache-2.0

//! Verilog-subset frontend: tokenizer, recursive-descent parser, identifier
//! resolution, pretty-printer and a generic node view used for JSON output
//! and structural comparison.

pub mod ast;
pub mod consteval;
pub mod lexer;
pub mod node;
pub mod parser;
pub mod printer;
pub mod resolve;
pub mod visit;

use std::fmt;

use serde::Serialize;

pub use ast::SyntaxTree;
pub use lexer::{tokenize, tokenize_bytes, LexError, Token, TokenKind};
pub use parser::{ParseError, UnsupportedError};
pub use resolve::ResolveError;

/// Half-open byte range `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    /// Smallest span covering both.
    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error(transparent)]
    Unsupported(#[from] UnsupportedError),
}

impl FrontendError {
    pub fn stage(&self) -> &'static str {
        match self {
            FrontendError::Lex(_) => "lex",
            FrontendError::Parse(_) => "parse",
            FrontendError::Resolve(_) => "resolve",
            FrontendError::Unsupported(_) => "unsupported",
        }
    }

    pub fn span(&self) -> Span {
        match self {
            FrontendError::Lex(e) => e.span,
            FrontendError::Parse(e) => e.span,
            FrontendError::Resolve(e) => e.span,
            FrontendError::Unsupported(e) => e.span,
        }
    }
}

/// Parses a token stream and runs the resolution pass over the result.
pub fn parse(tokens: &[Token]) -> Result<SyntaxTree, FrontendError> {
    let tree = parser::parse_tokens(tokens)?;
    resolve::resolve(&tree)?;
    Ok(tree)
}

pub fn parse_source(source: &str) -> Result<SyntaxTree, FrontendError> {
    let tokens = tokenize(source)?;
    parse(&tokens)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub stage: &'static str,
    pub message: String,
    pub span: Span,
}

impl From<&FrontendError> for Diagnostic {
    fn from(e: &FrontendError) -> Self {
        Diagnostic {
            stage: e.stage(),
            message: e.to_string(),
            span: e.span(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SyntaxVerdict {
    Pass(SyntaxTree),
    Fail(Vec<Diagnostic>),
}

impl SyntaxVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, SyntaxVerdict::Pass(_))
    }

    pub fn tree(&self) -> Option<&SyntaxTree> {
        match self {
            SyntaxVerdict::Pass(t) => Some(t),
            SyntaxVerdict::Fail(_) => None,
        }
    }

    pub fn into_tree(self) -> Option<SyntaxTree> {
        match self {
            SyntaxVerdict::Pass(t) => Some(t),
            SyntaxVerdict::Fail(_) => None,
        }
    }
}

/// Tokenize, parse and resolve; any failure becomes a `Fail` verdict.
pub fn check_syntax(source: &str) -> SyntaxVerdict {
    match parse_source(source) {
        Ok(tree) => SyntaxVerdict::Pass(tree),
        Err(e) => SyntaxVerdict::Fail(vec![Diagnostic::from(&e)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_module_passes() {
        let v = check_syntax("module m(input a, output y); assign y = a; endmodule");
        let tree = v.tree().expect("pass");
        assert_eq!(tree.modules.len(), 1);
        assert_eq!(tree.modules[0].ports.len(), 2);
        assert_eq!(tree.modules[0].items.len(), 1);
        assert!(matches!(tree.modules[0].items[0], ast::Item::Assign(_)));
    }

    #[test]
    fn truncated_module_fails_at_end_of_input() {
        let src = "module m(input a";
        match check_syntax(src) {
            SyntaxVerdict::Fail(d) => {
                assert_eq!(d[0].stage, "parse");
                assert_eq!(d[0].span, Span::new(src.len(), src.len()));
                assert!(d[0].message.contains("end of input"));
            }
            SyntaxVerdict::Pass(_) => panic!("truncated source must fail"),
        }
    }

    #[test]
    fn undeclared_net_names_identifier() {
        match check_syntax("module m(input a, output y); assign y = a & ghost; endmodule") {
            SyntaxVerdict::Fail(d) => {
                assert_eq!(d[0].stage, "resolve");
                assert!(d[0].message.contains("ghost"));
            }
            SyntaxVerdict::Pass(_) => panic!("undeclared identifier must fail"),
        }
    }

    #[test]
    fn initial_block_is_unsupported() {
        let err = parse_source("module m(); initial begin end endmodule").unwrap_err();
        assert!(matches!(err, FrontendError::Unsupported(_)), "{err:?}");
    }
}
