// SPDX-License-Identifier: Apache-2.0

//! Mutable identifier traversal. The visiting order is fixed and defines
//! "first occurrence" for canonical renaming.

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdentRole {
    /// The name of the module being visited.
    ModuleName,
    /// Port, net, parameter or instance name (declaration or reference).
    Local,
    /// Module named by an instantiation (never a gate primitive).
    InstantiatedModule,
    /// Port or parameter name of the instantiated module in a named
    /// connection.
    ForeignPort,
}

pub fn visit_module_idents(m: &mut ModuleDecl, f: &mut impl FnMut(IdentRole, &mut String)) {
    f(IdentRole::ModuleName, &mut m.name.name);
    for p in &mut m.parameters {
        f(IdentRole::Local, &mut p.name.name);
        visit_range(&mut p.range, f);
        visit_expr(&mut p.value, f);
    }
    for p in &mut m.ports {
        f(IdentRole::Local, &mut p.name.name);
        visit_range(&mut p.range, f);
    }
    for item in &mut m.items {
        visit_item(item, f);
    }
}

pub fn visit_item(item: &mut Item, f: &mut impl FnMut(IdentRole, &mut String)) {
    match item {
        Item::Net(d) => {
            visit_range(&mut d.range, f);
            for nn in &mut d.names {
                f(IdentRole::Local, &mut nn.name.name);
                if let Some(e) = &mut nn.init {
                    visit_expr(e, f);
                }
            }
        }
        Item::Assign(a) => {
            visit_expr(&mut a.lhs, f);
            visit_expr(&mut a.rhs, f);
        }
        Item::Always(b) => {
            match &mut b.sensitivity {
                Sensitivity::Star => {}
                Sensitivity::Edges(es) => {
                    for e in es {
                        f(IdentRole::Local, &mut e.signal.name);
                    }
                }
                Sensitivity::Signals(ss) => {
                    for s in ss {
                        f(IdentRole::Local, &mut s.name);
                    }
                }
            }
            visit_stmt(&mut b.body, f);
        }
        Item::Instance(i) => {
            let primitive = i.is_primitive();
            if !primitive {
                f(IdentRole::InstantiatedModule, &mut i.module.name);
            }
            if let Some(p) = &mut i.parameters {
                visit_connections(p, f);
            }
            if let Some(name) = &mut i.instance {
                f(IdentRole::Local, &mut name.name);
            }
            visit_connections(&mut i.connections, f);
        }
    }
}

fn visit_connections(c: &mut Connections, f: &mut impl FnMut(IdentRole, &mut String)) {
    match c {
        Connections::Positional(v) => {
            for e in v.iter_mut().flatten() {
                visit_expr(e, f);
            }
        }
        Connections::Named(v) => {
            for nc in v {
                f(IdentRole::ForeignPort, &mut nc.port.name);
                if let Some(e) = &mut nc.expr {
                    visit_expr(e, f);
                }
            }
        }
    }
}

fn visit_range(r: &mut Option<Range>, f: &mut impl FnMut(IdentRole, &mut String)) {
    if let Some(r) = r {
        visit_expr(&mut r.msb, f);
        visit_expr(&mut r.lsb, f);
    }
}

pub fn visit_stmt(s: &mut Stmt, f: &mut impl FnMut(IdentRole, &mut String)) {
    match &mut s.kind {
        StmtKind::Blocking { lhs, rhs } | StmtKind::NonBlocking { lhs, rhs } => {
            visit_expr(lhs, f);
            visit_expr(rhs, f);
        }
        StmtKind::If { cond, then, otherwise } => {
            visit_expr(cond, f);
            visit_stmt(then, f);
            if let Some(o) = otherwise {
                visit_stmt(o, f);
            }
        }
        StmtKind::Case { subject, arms, default } => {
            visit_expr(subject, f);
            for arm in arms {
                for l in &mut arm.labels {
                    visit_expr(l, f);
                }
                visit_stmt(&mut arm.body, f);
            }
            if let Some(d) = default {
                visit_stmt(d, f);
            }
        }
        StmtKind::Block(body) => {
            for s in body {
                visit_stmt(s, f);
            }
        }
        StmtKind::Null => {}
    }
}

pub fn visit_expr(e: &mut Expr, f: &mut impl FnMut(IdentRole, &mut String)) {
    match &mut e.kind {
        ExprKind::Ident(name) => f(IdentRole::Local, name),
        ExprKind::Literal(_) => {}
        ExprKind::Unary { operand, .. } => visit_expr(operand, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            visit_expr(lhs, f);
            visit_expr(rhs, f);
        }
        ExprKind::Ternary { cond, then, otherwise } => {
            visit_expr(cond, f);
            visit_expr(then, f);
            visit_expr(otherwise, f);
        }
        ExprKind::Concat(parts) => parts.iter_mut().for_each(|p| visit_expr(p, f)),
        ExprKind::Replication { count, parts } => {
            visit_expr(count, f);
            parts.iter_mut().for_each(|p| visit_expr(p, f));
        }
        ExprKind::BitSelect { base, index } => {
            visit_expr(base, f);
            visit_expr(index, f);
        }
        ExprKind::PartSelect { base, msb, lsb } => {
            visit_expr(base, f);
            visit_expr(msb, f);
            visit_expr(lsb, f);
        }
    }
}

/// Calls `f` on every literal in the module, including ranges and
/// parameter values.
pub fn visit_module_exprs(m: &mut ModuleDecl, f: &mut impl FnMut(&mut Expr)) {
    fn range(r: &mut Option<Range>, f: &mut impl FnMut(&mut Expr)) {
        if let Some(r) = r {
            f(&mut r.msb);
            f(&mut r.lsb);
        }
    }
    fn conns(c: &mut Connections, f: &mut impl FnMut(&mut Expr)) {
        match c {
            Connections::Positional(v) => v.iter_mut().flatten().for_each(f),
            Connections::Named(v) => v.iter_mut().filter_map(|n| n.expr.as_mut()).for_each(f),
        }
    }
    fn stmt(s: &mut Stmt, f: &mut impl FnMut(&mut Expr)) {
        match &mut s.kind {
            StmtKind::Blocking { lhs, rhs } | StmtKind::NonBlocking { lhs, rhs } => {
                f(lhs);
                f(rhs);
            }
            StmtKind::If { cond, then, otherwise } => {
                f(cond);
                stmt(then, f);
                if let Some(o) = otherwise {
                    stmt(o, f);
                }
            }
            StmtKind::Case { subject, arms, default } => {
                f(subject);
                for arm in arms {
                    arm.labels.iter_mut().for_each(&mut *f);
                    stmt(&mut arm.body, f);
                }
                if let Some(d) = default {
                    stmt(d, f);
                }
            }
            StmtKind::Block(body) => body.iter_mut().for_each(|s| stmt(s, f)),
            StmtKind::Null => {}
        }
    }
    for p in &mut m.parameters {
        range(&mut p.range, f);
        f(&mut p.value);
    }
    for p in &mut m.ports {
        range(&mut p.range, f);
    }
    for item in &mut m.items {
        match item {
            Item::Net(d) => {
                range(&mut d.range, f);
                d.names.iter_mut().filter_map(|n| n.init.as_mut()).for_each(&mut *f);
            }
            Item::Assign(a) => {
                f(&mut a.lhs);
                f(&mut a.rhs);
            }
            Item::Always(b) => stmt(&mut b.body, f),
            Item::Instance(i) => {
                if let Some(p) = &mut i.parameters {
                    conns(p, f);
                }
                conns(&mut i.connections, f);
            }
        }
    }
}

/// Applies `f` to every sub-expression, children before parents.
pub fn map_expr_bottom_up(e: &mut Expr, f: &mut impl FnMut(&mut Expr)) {
    match &mut e.kind {
        ExprKind::Ident(_) | ExprKind::Literal(_) => {}
        ExprKind::Unary { operand, .. } => map_expr_bottom_up(operand, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            map_expr_bottom_up(lhs, f);
            map_expr_bottom_up(rhs, f);
        }
        ExprKind::Ternary { cond, then, otherwise } => {
            map_expr_bottom_up(cond, f);
            map_expr_bottom_up(then, f);
            map_expr_bottom_up(otherwise, f);
        }
        ExprKind::Concat(parts) => parts.iter_mut().for_each(|p| map_expr_bottom_up(p, f)),
        ExprKind::Replication { count, parts } => {
            map_expr_bottom_up(count, f);
            parts.iter_mut().for_each(|p| map_expr_bottom_up(p, f));
        }
        ExprKind::BitSelect { base, index } => {
            map_expr_bottom_up(base, f);
            map_expr_bottom_up(index, f);
        }
        ExprKind::PartSelect { base, msb, lsb } => {
            map_expr_bottom_up(base, f);
            map_expr_bottom_up(msb, f);
            map_expr_bottom_up(lsb, f);
        }
    }
    f(e);
}

/// Renames module-local identifiers through `rename`; module names and
/// foreign port names are left untouched.
pub fn rename_locals(tree: &mut SyntaxTree, rename: &mut impl FnMut(&str) -> String) {
    for m in &mut tree.modules {
        visit_module_idents(m, &mut |role, name| {
            if role == IdentRole::Local {
                *name = rename(name);
            }
        });
    }
}
