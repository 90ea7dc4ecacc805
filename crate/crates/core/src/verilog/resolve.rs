// SPDX-License-Identifier: Apache-2.0

//! Identifier resolution. Ports, nets, parameters and instance names share
//! one flat namespace per module.

use std::collections::HashMap;

use super::ast::*;
use super::Span;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("resolve error at {span}: {message}")]
pub struct ResolveError {
    pub message: String,
    pub identifier: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Port(Direction, NetKind),
    Net(NetKind),
    Param,
    Instance,
}

impl Symbol {
    fn describe(self) -> &'static str {
        match self {
            Symbol::Port(..) => "port",
            Symbol::Net(_) => "net",
            Symbol::Param => "parameter",
            Symbol::Instance => "instance",
        }
    }
}

pub type SymbolTable<'a> = HashMap<&'a str, Symbol>;

pub fn resolve(tree: &SyntaxTree) -> Result<(), ResolveError> {
    tree.modules.iter().try_for_each(resolve_module)
}

fn err(message: String, identifier: &str, span: Span) -> ResolveError {
    ResolveError {
        message,
        identifier: identifier.to_string(),
        span,
    }
}

/// Builds the module namespace, rejecting redeclarations.
pub fn symbols<'a>(module: &'a ModuleDecl) -> Result<SymbolTable<'a>, ResolveError> {
    let mut table: SymbolTable = HashMap::new();
    let mut declare = |name: &'a Ident, sym: Symbol| -> Result<(), ResolveError> {
        if let Some(prev) = table.insert(name.name.as_str(), sym) {
            return Err(err(
                format!("`{}` redeclared (previously a {})", name.name, prev.describe()),
                &name.name,
                name.span,
            ));
        }
        Ok(())
    };
    for p in &module.parameters {
        declare(&p.name, Symbol::Param)?;
    }
    for p in &module.ports {
        declare(&p.name, Symbol::Port(p.direction, p.kind))?;
    }
    for item in &module.items {
        match item {
            Item::Net(n) => {
                for nn in &n.names {
                    declare(&nn.name, Symbol::Net(n.kind))?;
                }
            }
            Item::Instance(inst) => {
                if let Some(name) = &inst.instance {
                    declare(name, Symbol::Instance)?;
                }
            }
            Item::Assign(_) | Item::Always(_) => {}
        }
    }
    Ok(table)
}

struct Checker<'a> {
    table: SymbolTable<'a>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Context {
    /// Parameters, ranges, replication counts.
    Constant,
    Value,
}

impl<'a> Checker<'a> {
    fn lookup(&self, name: &str, span: Span) -> Result<Symbol, ResolveError> {
        self.table
            .get(name)
            .copied()
            .ok_or_else(|| err(format!("undeclared identifier `{name}`"), name, span))
    }

    fn expr(&self, e: &Expr, ctx: Context) -> Result<(), ResolveError> {
        match &e.kind {
            ExprKind::Ident(name) => match (self.lookup(name, e.span)?, ctx) {
                (Symbol::Instance, _) => Err(err(format!("instance `{name}` used as a value"), name, e.span)),
                (Symbol::Param, _) | (_, Context::Value) => Ok(()),
                (_, Context::Constant) => Err(err(format!("`{name}` is not a constant"), name, e.span)),
            },
            ExprKind::Literal(_) => Ok(()),
            ExprKind::Unary { operand, .. } => self.expr(operand, ctx),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs, ctx)?;
                self.expr(rhs, ctx)
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                self.expr(cond, ctx)?;
                self.expr(then, ctx)?;
                self.expr(otherwise, ctx)
            }
            ExprKind::Concat(parts) => parts.iter().try_for_each(|p| self.expr(p, ctx)),
            ExprKind::Replication { count, parts } => {
                self.expr(count, Context::Constant)?;
                parts.iter().try_for_each(|p| self.expr(p, ctx))
            }
            ExprKind::BitSelect { base, index } => {
                self.expr(base, ctx)?;
                self.expr(index, ctx)
            }
            ExprKind::PartSelect { base, msb, lsb } => {
                self.expr(base, ctx)?;
                self.expr(msb, Context::Constant)?;
                self.expr(lsb, Context::Constant)
            }
        }
    }

    fn range(&self, r: &Option<Range>) -> Result<(), ResolveError> {
        if let Some(r) = r {
            self.expr(&r.msb, Context::Constant)?;
            self.expr(&r.lsb, Context::Constant)?;
        }
        Ok(())
    }

    /// `procedural` targets must be regs; continuous targets must be nets.
    fn lvalue(&self, e: &Expr, procedural: bool) -> Result<(), ResolveError> {
        self.expr(e, Context::Value)?;
        for target in e.lvalue_targets() {
            let name = target.target_name().expect("parser guarantees lvalue shape");
            let sym = self.lookup(name, target.span)?;
            let kind = match sym {
                Symbol::Port(Direction::Input, _) => {
                    return Err(err(format!("cannot assign to input port `{name}`"), name, target.span))
                }
                Symbol::Port(_, k) | Symbol::Net(k) => k,
                Symbol::Param | Symbol::Instance => {
                    return Err(err(
                        format!("cannot assign to {} `{name}`", sym.describe()),
                        name,
                        target.span,
                    ))
                }
            };
            match (procedural, kind) {
                (true, NetKind::Wire) => {
                    return Err(err(
                        format!("procedural assignment to wire `{name}`"),
                        name,
                        target.span,
                    ))
                }
                (false, NetKind::Reg) => {
                    return Err(err(format!("continuous assignment to reg `{name}`"), name, target.span))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn stmt(&self, s: &Stmt) -> Result<(), ResolveError> {
        match &s.kind {
            StmtKind::Blocking { lhs, rhs } | StmtKind::NonBlocking { lhs, rhs } => {
                self.lvalue(lhs, true)?;
                self.expr(rhs, Context::Value)
            }
            StmtKind::If { cond, then, otherwise } => {
                self.expr(cond, Context::Value)?;
                self.stmt(then)?;
                otherwise.as_deref().map_or(Ok(()), |o| self.stmt(o))
            }
            StmtKind::Case { subject, arms, default } => {
                self.expr(subject, Context::Value)?;
                for arm in arms {
                    arm.labels.iter().try_for_each(|l| self.expr(l, Context::Value))?;
                    self.stmt(&arm.body)?;
                }
                default.as_deref().map_or(Ok(()), |d| self.stmt(d))
            }
            StmtKind::Block(body) => body.iter().try_for_each(|s| self.stmt(s)),
            StmtKind::Null => Ok(()),
        }
    }

    fn sensitivity_signal(&self, id: &Ident) -> Result<(), ResolveError> {
        match self.lookup(&id.name, id.span)? {
            Symbol::Port(..) | Symbol::Net(_) => Ok(()),
            other => Err(err(
                format!("{} `{}` in sensitivity list", other.describe(), id.name),
                &id.name,
                id.span,
            )),
        }
    }
}

fn resolve_module(module: &ModuleDecl) -> Result<(), ResolveError> {
    let checker = Checker {
        table: symbols(module)?,
    };
    for p in &module.parameters {
        checker.range(&p.range)?;
        checker.expr(&p.value, Context::Constant)?;
    }
    for p in &module.ports {
        checker.range(&p.range)?;
    }
    for item in &module.items {
        match item {
            Item::Net(n) => {
                checker.range(&n.range)?;
                for nn in &n.names {
                    if let Some(init) = &nn.init {
                        checker.expr(init, Context::Value)?;
                    }
                }
            }
            Item::Assign(a) => {
                checker.lvalue(&a.lhs, false)?;
                checker.expr(&a.rhs, Context::Value)?;
            }
            Item::Always(blk) => {
                match &blk.sensitivity {
                    Sensitivity::Star => {}
                    Sensitivity::Edges(edges) => {
                        for e in edges {
                            checker.sensitivity_signal(&e.signal)?;
                        }
                    }
                    Sensitivity::Signals(sigs) => {
                        for s in sigs {
                            checker.sensitivity_signal(s)?;
                        }
                    }
                }
                checker.stmt(&blk.body)?;
            }
            Item::Instance(inst) => {
                if let Some(params) = &inst.parameters {
                    for e in connection_exprs(params) {
                        checker.expr(e, Context::Constant)?;
                    }
                }
                for e in connection_exprs(&inst.connections) {
                    checker.expr(e, Context::Value)?;
                }
            }
        }
    }
    Ok(())
}

fn connection_exprs(c: &Connections) -> Vec<&Expr> {
    match c {
        Connections::Positional(v) => v.iter().flatten().collect(),
        Connections::Named(v) => v.iter().filter_map(|n| n.expr.as_ref()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_source, FrontendError};

    fn resolve_err(src: &str) -> super::ResolveError {
        match parse_source(src) {
            Err(FrontendError::Resolve(e)) => e,
            other => panic!("expected resolve error for {src}: {other:?}"),
        }
    }

    #[test]
    fn redeclaration_is_rejected() {
        let e = resolve_err("module m(input a, output y); wire a; assign y = a; endmodule");
        assert_eq!(e.identifier, "a");
    }

    #[test]
    fn assignment_kinds_are_checked() {
        resolve_err("module m(input a, output y); always @* y = a; endmodule");
        resolve_err("module m(input a, output reg y); assign y = a; endmodule");
        resolve_err("module m(input a, output y); assign a = y; endmodule");
    }

    #[test]
    fn ranges_must_be_constant() {
        let e = resolve_err("module m(input [3:0] a, output [a:0] y); assign y = a; endmodule");
        assert_eq!(e.identifier, "a");
    }

    #[test]
    fn forward_references_resolve() {
        parse_source("module m(input a, output y); assign y = t; wire t; assign t = a; endmodule").unwrap();
    }

    #[test]
    fn instance_port_names_are_not_resolved_locally() {
        parse_source("module top(input x, output z); sub u0(.in(x), .out(z)); endmodule").unwrap();
        let e = resolve_err("module top(input x, output z); sub u0(.in(q), .out(z)); endmodule");
        assert_eq!(e.identifier, "q");
    }
}
