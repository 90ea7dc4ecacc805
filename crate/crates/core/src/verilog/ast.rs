// SPDX-License-Identifier: Apache-2.0

//! Syntax tree for the supported Verilog subset. Every node carries the
//! byte span it was parsed from; spans never take part in structural
//! comparison (see [`super::node`]).

use super::Span;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident {
            name: name.into(),
            span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxTree {
    pub modules: Vec<ModuleDecl>,
    pub span: Span,
}

impl SyntaxTree {
    pub fn module(&self, name: &str) -> Option<&ModuleDecl> {
        self.modules.iter().find(|m| m.name.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDecl {
    pub name: Ident,
    pub parameters: Vec<ParamDecl>,
    pub ports: Vec<Port>,
    pub items: Vec<Item>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: Ident,
    /// `localparam` cannot be overridden at instantiation.
    pub local: bool,
    pub range: Option<Range>,
    pub value: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Input,
    Output,
    Inout,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
            Direction::Inout => "inout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetKind {
    Wire,
    Reg,
}

impl NetKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NetKind::Wire => "wire",
            NetKind::Reg => "reg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub direction: Direction,
    pub kind: NetKind,
    pub range: Option<Range>,
    pub name: Ident,
    pub span: Span,
}

/// `[msb:lsb]` with constant expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Net(NetDecl),
    Assign(ContinuousAssign),
    Always(AlwaysBlock),
    Instance(Instantiation),
}

impl Item {
    pub fn span(&self) -> Span {
        match self {
            Item::Net(n) => n.span,
            Item::Assign(a) => a.span,
            Item::Always(a) => a.span,
            Item::Instance(i) => i.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetDecl {
    pub kind: NetKind,
    pub range: Option<Range>,
    pub names: Vec<NetName>,
    pub span: Span,
}

/// One declared name; wires may carry a declaration assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct NetName {
    pub name: Ident,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousAssign {
    pub lhs: Expr,
    pub rhs: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Posedge,
    Negedge,
}

impl Edge {
    pub fn keyword(self) -> &'static str {
        match self {
            Edge::Posedge => "posedge",
            Edge::Negedge => "negedge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEvent {
    pub edge: Edge,
    pub signal: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sensitivity {
    /// `@*` or `@(*)`
    Star,
    Edges(Vec<EdgeEvent>),
    Signals(Vec<Ident>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlwaysBlock {
    pub sensitivity: Sensitivity,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Connections {
    Positional(Vec<Option<Expr>>),
    Named(Vec<NamedConnection>),
}

impl Connections {
    pub fn len(&self) -> usize {
        match self {
            Connections::Positional(v) => v.len(),
            Connections::Named(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedConnection {
    pub port: Ident,
    pub expr: Option<Expr>,
    pub span: Span,
}

/// Gate primitives are instantiated with the keyword as the module name.
pub const GATE_PRIMITIVES: &[&str] = &["and", "nand", "or", "nor", "xor", "xnor", "not", "buf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Instantiation {
    pub module: Ident,
    pub parameters: Option<Connections>,
    /// Optional only for gate primitives.
    pub instance: Option<Ident>,
    pub connections: Connections,
    pub span: Span,
}

impl Instantiation {
    pub fn is_primitive(&self) -> bool {
        GATE_PRIMITIVES.contains(&self.module.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Blocking {
        lhs: Expr,
        rhs: Expr,
    },
    NonBlocking {
        lhs: Expr,
        rhs: Expr,
    },
    If {
        cond: Expr,
        then: Box<Stmt>,
        otherwise: Option<Box<Stmt>>,
    },
    Case {
        subject: Expr,
        arms: Vec<CaseArm>,
        default: Option<Box<Stmt>>,
    },
    Block(Vec<Stmt>),
    /// A lone `;`.
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Base {
    Binary,
    Octal,
    Decimal,
    Hex,
}

impl Base {
    pub fn letter(self) -> char {
        match self {
            Base::Binary => 'b',
            Base::Octal => 'o',
            Base::Decimal => 'd',
            Base::Hex => 'h',
        }
    }
}

/// Width of an unsized literal once resolved.
pub const UNSIZED_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    /// `None` is the unsized sentinel.
    pub width: Option<u32>,
    /// `None` for plain decimal numbers such as `42`.
    pub base: Option<Base>,
    /// Digits as written, underscores removed, lower-cased.
    pub digits: String,
    /// Numeric value; x/z digits contribute zero bits.
    pub value: u128,
    /// Bits written as x, z or ?.
    pub xz_mask: u128,
}

impl Literal {
    pub fn effective_width(&self) -> u32 {
        self.width.unwrap_or(UNSIZED_WIDTH)
    }

    /// Plain decimal literal of the given value and width.
    pub fn decimal(width: Option<u32>, value: u128) -> Self {
        Literal {
            width,
            base: width.map(|_| Base::Decimal),
            digits: value.to_string(),
            value,
            xz_mask: 0,
        }
    }

    pub fn spelling(&self) -> String {
        match (self.width, self.base) {
            (Some(w), Some(b)) => format!("{w}'{}{}", b.letter(), self.digits),
            (None, Some(b)) => format!("'{}{}", b.letter(), self.digits),
            (_, None) => self.digits.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Plus,
    Minus,
    LogicalNot,
    BitNot,
    ReduceAnd,
    ReduceNand,
    ReduceOr,
    ReduceNor,
    ReduceXor,
    ReduceXnor,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Plus => "+",
            UnaryOp::Minus => "-",
            UnaryOp::LogicalNot => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::ReduceAnd => "&",
            UnaryOp::ReduceNand => "~&",
            UnaryOp::ReduceOr => "|",
            UnaryOp::ReduceNor => "~|",
            UnaryOp::ReduceXor => "^",
            UnaryOp::ReduceXnor => "~^",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+" => UnaryOp::Plus,
            "-" => UnaryOp::Minus,
            "!" => UnaryOp::LogicalNot,
            "~" => UnaryOp::BitNot,
            "&" => UnaryOp::ReduceAnd,
            "~&" => UnaryOp::ReduceNand,
            "|" => UnaryOp::ReduceOr,
            "~|" => UnaryOp::ReduceNor,
            "^" => UnaryOp::ReduceXor,
            "~^" | "^~" => UnaryOp::ReduceXnor,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    Shl,
    Shr,
    AShl,
    AShr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    CaseEq,
    CaseNe,
    BitAnd,
    BitOr,
    BitXor,
    BitXnor,
    LogicalAnd,
    LogicalOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Pow => "**",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::AShl => "<<<",
            BinaryOp::AShr => ">>>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::CaseEq => "===",
            BinaryOp::CaseNe => "!==",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::BitXnor => "~^",
            BinaryOp::LogicalAnd => "&&",
            BinaryOp::LogicalOr => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Pow => 11,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 10,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Shl | BinaryOp::Shr | BinaryOp::AShl | BinaryOp::AShr => 8,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::CaseEq | BinaryOp::CaseNe => 6,
            BinaryOp::BitAnd => 5,
            BinaryOp::BitXor | BinaryOp::BitXnor => 4,
            BinaryOp::BitOr => 3,
            BinaryOp::LogicalAnd => 2,
            BinaryOp::LogicalOr => 1,
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Mod,
            "**" => BinaryOp::Pow,
            "<<" => BinaryOp::Shl,
            ">>" => BinaryOp::Shr,
            "<<<" => BinaryOp::AShl,
            ">>>" => BinaryOp::AShr,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "===" => BinaryOp::CaseEq,
            "!==" => BinaryOp::CaseNe,
            "&" => BinaryOp::BitAnd,
            "|" => BinaryOp::BitOr,
            "^" => BinaryOp::BitXor,
            "~^" | "^~" => BinaryOp::BitXnor,
            "&&" => BinaryOp::LogicalAnd,
            "||" => BinaryOp::LogicalOr,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    Literal(Literal),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Concat(Vec<Expr>),
    Replication {
        count: Box<Expr>,
        parts: Vec<Expr>,
    },
    BitSelect {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    PartSelect {
        base: Box<Expr>,
        msb: Box<Expr>,
        lsb: Box<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Calls `f` on every identifier reference in this expression.
    pub fn for_each_ident<'a>(&'a self, f: &mut impl FnMut(&'a str, Span)) {
        match &self.kind {
            ExprKind::Ident(name) => f(name, self.span),
            ExprKind::Literal(_) => {}
            ExprKind::Unary { operand, .. } => operand.for_each_ident(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.for_each_ident(f);
                rhs.for_each_ident(f);
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                cond.for_each_ident(f);
                then.for_each_ident(f);
                otherwise.for_each_ident(f);
            }
            ExprKind::Concat(parts) => parts.iter().for_each(|p| p.for_each_ident(f)),
            ExprKind::Replication { count, parts } => {
                count.for_each_ident(f);
                parts.iter().for_each(|p| p.for_each_ident(f));
            }
            ExprKind::BitSelect { base, index } => {
                base.for_each_ident(f);
                index.for_each_ident(f);
            }
            ExprKind::PartSelect { base, msb, lsb } => {
                base.for_each_ident(f);
                msb.for_each_ident(f);
                lsb.for_each_ident(f);
            }
        }
    }

    /// True for the shapes allowed on the left of an assignment.
    pub fn is_lvalue(&self) -> bool {
        match &self.kind {
            ExprKind::Ident(_) => true,
            ExprKind::BitSelect { base, .. } | ExprKind::PartSelect { base, .. } => {
                matches!(base.kind, ExprKind::Ident(_))
            }
            ExprKind::Concat(parts) => !parts.is_empty() && parts.iter().all(Expr::is_lvalue),
            _ => false,
        }
    }

    /// Names written when this expression is used as an lvalue.
    pub fn lvalue_targets(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Concat(parts) => parts.iter().flat_map(|p| p.lvalue_targets()).collect(),
            _ => vec![self],
        }
    }

    pub fn target_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(n) => Some(n),
            ExprKind::BitSelect { base, .. } | ExprKind::PartSelect { base, .. } => base.target_name(),
            _ => None,
        }
    }
}
