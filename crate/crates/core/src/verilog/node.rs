// SPDX-License-Identifier: Apache-2.0

//! Uniform node view of a [`SyntaxTree`]: kind, string attributes, ordered
//! children and span. This is the stable JSON encoding (`ast/1`) and the
//! shape compared node-by-node for structural equality.

use std::collections::BTreeMap;

use serde::Serialize;

use super::ast::*;
use super::Span;

pub const AST_SCHEMA: &str = "ast/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<&'static str, String>,
    pub span: Span,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Node>,
}

impl Node {
    fn new(kind: &'static str, span: Span) -> Self {
        Node {
            kind,
            attrs: BTreeMap::new(),
            span,
            children: Vec::new(),
        }
    }

    fn attr(mut self, key: &'static str, value: impl ToString) -> Self {
        self.attrs.insert(key, value.to_string());
        self
    }

    fn child(mut self, c: Node) -> Self {
        self.children.push(c);
        self
    }

    fn children(mut self, cs: impl IntoIterator<Item = Node>) -> Self {
        self.children.extend(cs);
        self
    }

    /// Node-for-node equality ignoring spans.
    pub fn same_shape(&self, other: &Node) -> bool {
        self.first_difference(other).is_none()
    }

    /// Depth-first comparison ignoring spans; returns the path to the first
    /// differing node, e.g. `source/module[0]/items/assign[2]/binary`.
    pub fn first_difference(&self, other: &Node) -> Option<String> {
        fn walk(a: &Node, b: &Node, path: &mut Vec<String>) -> Option<String> {
            if a.kind != b.kind || a.attrs != b.attrs || a.children.len() != b.children.len() {
                let mut at = path.join("/");
                let detail = if a.kind != b.kind {
                    format!("kind {} vs {}", a.kind, b.kind)
                } else if a.attrs != b.attrs {
                    let key = a
                        .attrs
                        .keys()
                        .chain(b.attrs.keys())
                        .find(|k| a.attrs.get(*k) != b.attrs.get(*k))
                        .expect("attrs differ");
                    format!(
                        "{key}: {} vs {}",
                        a.attrs.get(key).map_or("-", String::as_str),
                        b.attrs.get(key).map_or("-", String::as_str)
                    )
                } else {
                    format!("{} vs {} children", a.children.len(), b.children.len())
                };
                if at.is_empty() {
                    at = a.kind.to_string();
                }
                return Some(format!("{at} ({detail})"));
            }
            for (i, (ca, cb)) in a.children.iter().zip(&b.children).enumerate() {
                path.push(format!("{}[{i}]", ca.kind));
                if let Some(d) = walk(ca, cb, path) {
                    return Some(d);
                }
                path.pop();
            }
            None
        }
        walk(self, other, &mut vec![self.kind.to_string()])
    }

    /// Span-free serialization used for hashing.
    pub fn write_shape(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.kind.as_bytes());
        out.push(b'{');
        for (k, v) in &self.attrs {
            out.extend_from_slice(k.as_bytes());
            out.push(b'=');
            out.extend_from_slice(&(v.len() as u64).to_le_bytes());
            out.extend_from_slice(v.as_bytes());
            out.push(b';');
        }
        out.extend_from_slice(&(self.children.len() as u64).to_le_bytes());
        for c in &self.children {
            c.write_shape(out);
        }
        out.push(b'}');
    }

    pub fn walk(&self, f: &mut impl FnMut(&Node, Option<&Node>)) {
        fn go<'a>(n: &'a Node, parent: Option<&'a Node>, f: &mut impl FnMut(&Node, Option<&Node>)) {
            f(n, parent);
            for c in &n.children {
                go(c, Some(n), f);
            }
        }
        go(self, None, f)
    }
}

#[derive(Serialize)]
struct Document<'a> {
    schema: &'static str,
    root: &'a Node,
}

/// Stable JSON encoding of a tree: `{"schema":"ast/1","root":{...}}`.
pub fn to_json(tree: &SyntaxTree) -> String {
    let node = tree_node(tree);
    serde_json::to_string_pretty(&Document {
        schema: AST_SCHEMA,
        root: &node,
    })
    .expect("node serialization cannot fail")
}

pub fn tree_node(tree: &SyntaxTree) -> Node {
    Node::new("source", tree.span).children(tree.modules.iter().map(module_node))
}

pub fn module_node(m: &ModuleDecl) -> Node {
    Node::new("module", m.span)
        .attr("name", &m.name.name)
        .child(Node::new("parameters", m.span).children(m.parameters.iter().map(param_node)))
        .child(Node::new("ports", m.span).children(m.ports.iter().map(port_node)))
        .child(Node::new("items", m.span).children(m.items.iter().map(item_node)))
}

fn opt_range(n: Node, r: &Option<Range>) -> Node {
    match r {
        Some(r) => n.attr("range", true).child(range_node(r)),
        None => n.attr("range", false),
    }
}

fn range_node(r: &Range) -> Node {
    Node::new("range", r.span)
        .child(expr_node(&r.msb))
        .child(expr_node(&r.lsb))
}

fn param_node(p: &ParamDecl) -> Node {
    let n = Node::new("parameter", p.span)
        .attr("name", &p.name.name)
        .attr("local", p.local);
    opt_range(n, &p.range).child(expr_node(&p.value))
}

fn port_node(p: &Port) -> Node {
    let n = Node::new("port", p.span)
        .attr("name", &p.name.name)
        .attr("direction", p.direction.keyword())
        .attr("kind", p.kind.keyword());
    opt_range(n, &p.range)
}

pub fn item_node(item: &Item) -> Node {
    match item {
        Item::Net(d) => {
            let n = Node::new("net", d.span).attr("kind", d.kind.keyword());
            opt_range(n, &d.range).children(d.names.iter().map(|nn| {
                let n = Node::new("net_name", nn.span).attr("name", &nn.name.name);
                match &nn.init {
                    Some(e) => n.attr("init", true).child(expr_node(e)),
                    None => n.attr("init", false),
                }
            }))
        }
        Item::Assign(a) => Node::new("assign", a.span)
            .child(expr_node(&a.lhs))
            .child(expr_node(&a.rhs)),
        Item::Always(b) => {
            let sens = match &b.sensitivity {
                Sensitivity::Star => Node::new("sensitivity", b.span).attr("style", "star"),
                Sensitivity::Edges(es) => {
                    Node::new("sensitivity", b.span)
                        .attr("style", "edges")
                        .children(es.iter().map(|e| {
                            Node::new("edge", e.signal.span)
                                .attr("edge", e.edge.keyword())
                                .attr("signal", &e.signal.name)
                        }))
                }
                Sensitivity::Signals(ss) => Node::new("sensitivity", b.span)
                    .attr("style", "signals")
                    .children(ss.iter().map(|s| Node::new("signal", s.span).attr("signal", &s.name))),
            };
            Node::new("always", b.span).child(sens).child(stmt_node(&b.body))
        }
        Item::Instance(i) => {
            let mut n = Node::new("instance", i.span).attr("module", &i.module.name);
            if let Some(name) = &i.instance {
                n = n.attr("instance", &name.name);
            }
            n = match &i.parameters {
                Some(p) => n
                    .attr("parameters", true)
                    .child(connections_node("parameter_overrides", p, i.span)),
                None => n.attr("parameters", false),
            };
            n.child(connections_node("connections", &i.connections, i.span))
        }
    }
}

fn connections_node(kind: &'static str, c: &Connections, span: Span) -> Node {
    match c {
        Connections::Positional(v) => Node::new(kind, span)
            .attr("style", "positional")
            .children(v.iter().map(|e| match e {
                Some(e) => Node::new("connection", e.span).child(expr_node(e)),
                None => Node::new("connection", span).attr("open", true),
            })),
        Connections::Named(v) => Node::new(kind, span)
            .attr("style", "named")
            .children(v.iter().map(|nc| {
                let n = Node::new("connection", nc.span).attr("port", &nc.port.name);
                match &nc.expr {
                    Some(e) => n.child(expr_node(e)),
                    None => n.attr("open", true),
                }
            })),
    }
}

pub fn stmt_node(s: &Stmt) -> Node {
    match &s.kind {
        StmtKind::Blocking { lhs, rhs } => Node::new("blocking", s.span)
            .child(expr_node(lhs))
            .child(expr_node(rhs)),
        StmtKind::NonBlocking { lhs, rhs } => Node::new("nonblocking", s.span)
            .child(expr_node(lhs))
            .child(expr_node(rhs)),
        StmtKind::If { cond, then, otherwise } => {
            let n = Node::new("if", s.span)
                .attr("else", otherwise.is_some())
                .child(expr_node(cond))
                .child(stmt_node(then));
            match otherwise {
                Some(o) => n.child(stmt_node(o)),
                None => n,
            }
        }
        StmtKind::Case { subject, arms, default } => {
            let n = Node::new("case", s.span)
                .attr("default", default.is_some())
                .child(expr_node(subject))
                .children(arms.iter().map(|a| {
                    Node::new("arm", a.span)
                        .attr("labels", a.labels.len())
                        .children(a.labels.iter().map(expr_node))
                        .child(stmt_node(&a.body))
                }));
            match default {
                Some(d) => n.child(stmt_node(d)),
                None => n,
            }
        }
        StmtKind::Block(body) => Node::new("block", s.span).children(body.iter().map(stmt_node)),
        StmtKind::Null => Node::new("null", s.span),
    }
}

pub fn expr_node(e: &Expr) -> Node {
    match &e.kind {
        ExprKind::Ident(name) => Node::new("ident", e.span).attr("name", name),
        ExprKind::Literal(l) => {
            let n = Node::new("literal", e.span)
                .attr(
                    "width",
                    l.width.map_or_else(|| "unsized".to_string(), |w| w.to_string()),
                )
                .attr("base", l.base.map_or('-', Base::letter))
                .attr("digits", &l.digits)
                .attr("value", l.value);
            if l.xz_mask != 0 {
                n.attr("xz", l.xz_mask)
            } else {
                n
            }
        }
        ExprKind::Unary { op, operand } => Node::new("unary", e.span)
            .attr("op", op.symbol())
            .child(expr_node(operand)),
        ExprKind::Binary { op, lhs, rhs } => Node::new("binary", e.span)
            .attr("op", op.symbol())
            .child(expr_node(lhs))
            .child(expr_node(rhs)),
        ExprKind::Ternary { cond, then, otherwise } => Node::new("ternary", e.span)
            .child(expr_node(cond))
            .child(expr_node(then))
            .child(expr_node(otherwise)),
        ExprKind::Concat(parts) => Node::new("concat", e.span).children(parts.iter().map(expr_node)),
        ExprKind::Replication { count, parts } => Node::new("replication", e.span)
            .child(expr_node(count))
            .children(parts.iter().map(expr_node)),
        ExprKind::BitSelect { base, index } => Node::new("bit_select", e.span)
            .child(expr_node(base))
            .child(expr_node(index)),
        ExprKind::PartSelect { base, msb, lsb } => Node::new("part_select", e.span)
            .child(expr_node(base))
            .child(expr_node(msb))
            .child(expr_node(lsb)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_source;
    use super::*;

    const SRC: &str = "module m(input [3:0] a, b, output reg [3:0] y);
        wire [3:0] t = a ^ b;
        always @(*) begin
            if (a[0]) y = {t[3:1], 1'b0};
            else y = {2{b[1:0]}};
        end
    endmodule";

    #[test]
    fn json_carries_schema_tag() {
        let tree = parse_source(SRC).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&tree)).unwrap();
        assert_eq!(v["schema"], "ast/1");
        assert_eq!(v["root"]["kind"], "source");
        assert_eq!(v["root"]["children"][0]["attrs"]["name"], "m");
    }

    #[test]
    fn child_spans_nest_inside_parent_spans() {
        let node = tree_node(&parse_source(SRC).unwrap());
        node.walk(&mut |n, parent| {
            if let Some(p) = parent {
                assert!(
                    p.span.contains(&n.span),
                    "{} {:?} outside {} {:?}",
                    n.kind,
                    n.span,
                    p.kind,
                    p.span
                );
            }
        });
    }

    #[test]
    fn first_difference_reports_path() {
        let a = tree_node(&parse_source("module m(input a, b, output y); assign y = a & b; endmodule").unwrap());
        let b = tree_node(&parse_source("module m(input a, b, output y); assign y = a | b; endmodule").unwrap());
        let d = a.first_difference(&b).unwrap();
        assert!(d.contains("assign[0]/binary[1]"), "{d}");
        assert!(d.contains("op: & vs |"), "{d}");
        assert!(a.same_shape(&a.clone()));
    }
}
