// SPDX-License-Identifier: Apache-2.0

//! Pretty-printer. Output always uses ANSI port style and fully
//! parenthesised operator expressions, so reparsing yields the same tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_tree(tree: &SyntaxTree) -> String {
    let mut out = String::new();
    for (i, m) in tree.modules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_module(&mut out, m);
    }
    out
}

pub fn print_module(out: &mut String, m: &ModuleDecl) {
    let _ = write!(out, "module {}", m.name.name);
    let (header, body): (Vec<_>, Vec<_>) = m.parameters.iter().partition(|p| !p.local);
    if !header.is_empty() {
        out.push_str(" #(");
        for (i, p) in header.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str("parameter ");
            print_param_body(out, p);
        }
        out.push(')');
    }
    out.push_str(" (");
    for (i, p) in m.ports.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {} ", p.direction.keyword(), p.kind.keyword());
        print_range(out, &p.range);
        out.push_str(&p.name.name);
    }
    out.push_str(");\n");
    for p in body {
        out.push_str("  localparam ");
        print_param_body(out, p);
        out.push_str(";\n");
    }
    for item in &m.items {
        print_item(out, item);
    }
    out.push_str("endmodule\n");
}

fn print_param_body(out: &mut String, p: &ParamDecl) {
    print_range(out, &p.range);
    let _ = write!(out, "{} = {}", p.name.name, expr_to_string(&p.value));
}

fn print_range(out: &mut String, r: &Option<Range>) {
    if let Some(r) = r {
        let _ = write!(out, "[{}:{}] ", expr_to_string(&r.msb), expr_to_string(&r.lsb));
    }
}

pub fn print_item(out: &mut String, item: &Item) {
    match item {
        Item::Net(d) => {
            let _ = write!(out, "  {} ", d.kind.keyword());
            print_range(out, &d.range);
            for (i, nn) in d.names.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&nn.name.name);
                if let Some(e) = &nn.init {
                    let _ = write!(out, " = {}", expr_to_string(e));
                }
            }
            out.push_str(";\n");
        }
        Item::Assign(a) => {
            let _ = writeln!(out, "  assign {} = {};", expr_to_string(&a.lhs), expr_to_string(&a.rhs));
        }
        Item::Always(b) => {
            out.push_str("  always @");
            match &b.sensitivity {
                Sensitivity::Star => out.push_str("(*)"),
                Sensitivity::Edges(es) => {
                    let list: Vec<_> = es
                        .iter()
                        .map(|e| format!("{} {}", e.edge.keyword(), e.signal.name))
                        .collect();
                    let _ = write!(out, "({})", list.join(" or "));
                }
                Sensitivity::Signals(ss) => {
                    let list: Vec<_> = ss.iter().map(|s| s.name.as_str()).collect();
                    let _ = write!(out, "({})", list.join(" or "));
                }
            }
            out.push('\n');
            print_stmt(out, &b.body, 2);
        }
        Item::Instance(i) => {
            let _ = write!(out, "  {}", i.module.name);
            if let Some(p) = &i.parameters {
                let _ = write!(out, " #{}", connections_to_string(p));
            }
            if let Some(name) = &i.instance {
                let _ = write!(out, " {}", name.name);
            }
            let _ = writeln!(out, " {};", connections_to_string(&i.connections));
        }
    }
}

fn connections_to_string(c: &Connections) -> String {
    let parts: Vec<String> = match c {
        Connections::Positional(v) => v
            .iter()
            .map(|e| e.as_ref().map(expr_to_string).unwrap_or_default())
            .collect(),
        Connections::Named(v) => v
            .iter()
            .map(|n| {
                format!(
                    ".{}({})",
                    n.port.name,
                    n.expr.as_ref().map(expr_to_string).unwrap_or_default()
                )
            })
            .collect(),
    };
    format!("({})", parts.join(", "))
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

pub fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::Blocking { lhs, rhs } => {
            indent(out, level);
            let _ = writeln!(out, "{} = {};", expr_to_string(lhs), expr_to_string(rhs));
        }
        StmtKind::NonBlocking { lhs, rhs } => {
            indent(out, level);
            let _ = writeln!(out, "{} <= {};", expr_to_string(lhs), expr_to_string(rhs));
        }
        StmtKind::If { cond, then, otherwise } => {
            indent(out, level);
            let _ = writeln!(out, "if ({})", expr_to_string(cond));
            if otherwise.is_some() {
                print_as_block(out, then, level + 1);
            } else {
                print_stmt(out, then, level + 1);
            }
            if let Some(o) = otherwise {
                indent(out, level);
                out.push_str("else\n");
                print_stmt(out, o, level + 1);
            }
        }
        StmtKind::Case { subject, arms, default } => {
            indent(out, level);
            let _ = writeln!(out, "case ({})", expr_to_string(subject));
            for arm in arms {
                indent(out, level + 1);
                let labels: Vec<_> = arm.labels.iter().map(expr_to_string).collect();
                let _ = writeln!(out, "{}:", labels.join(", "));
                print_stmt(out, &arm.body, level + 2);
            }
            if let Some(d) = default {
                indent(out, level + 1);
                out.push_str("default:\n");
                print_stmt(out, d, level + 2);
            }
            indent(out, level);
            out.push_str("endcase\n");
        }
        StmtKind::Block(body) => {
            indent(out, level);
            out.push_str("begin\n");
            for s in body {
                print_stmt(out, s, level + 1);
            }
            indent(out, level);
            out.push_str("end\n");
        }
        StmtKind::Null => {
            indent(out, level);
            out.push_str(";\n");
        }
    }
}

fn print_as_block(out: &mut String, s: &Stmt, level: usize) {
    // a trailing else-less if would capture the following else
    if ends_with_open_if(s) {
        indent(out, level - 1);
        out.push_str("begin\n");
        print_stmt(out, s, level);
        indent(out, level - 1);
        out.push_str("end\n");
    } else {
        print_stmt(out, s, level);
    }
}

fn ends_with_open_if(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::If { otherwise: None, .. } => true,
        StmtKind::If { otherwise: Some(o), .. } => ends_with_open_if(o),
        _ => false,
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Ident(n) => n.clone(),
        ExprKind::Literal(l) => l.spelling(),
        ExprKind::Unary { op, operand } => format!("{}({})", op.symbol(), expr_to_string(operand)),
        ExprKind::Binary { op, lhs, rhs } => {
            format!("({} {} {})", expr_to_string(lhs), op.symbol(), expr_to_string(rhs))
        }
        ExprKind::Ternary { cond, then, otherwise } => format!(
            "({} ? {} : {})",
            expr_to_string(cond),
            expr_to_string(then),
            expr_to_string(otherwise)
        ),
        ExprKind::Concat(parts) => {
            let ps: Vec<_> = parts.iter().map(expr_to_string).collect();
            format!("{{{}}}", ps.join(", "))
        }
        ExprKind::Replication { count, parts } => {
            let ps: Vec<_> = parts.iter().map(expr_to_string).collect();
            format!("{{{}{{{}}}}}", expr_to_string(count), ps.join(", "))
        }
        ExprKind::BitSelect { base, index } => {
            format!("{}[{}]", expr_to_string(base), expr_to_string(index))
        }
        ExprKind::PartSelect { base, msb, lsb } => format!(
            "{}[{}:{}]",
            expr_to_string(base),
            expr_to_string(msb),
            expr_to_string(lsb)
        ),
    }
}
