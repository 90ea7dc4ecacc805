// SPDX-License-Identifier: Apache-2.0

//! Structural equivalence of designs modulo superficial variation.
//!
//! A design is canonicalized by
//! 1. normalizing literals to `(width, value)` and folding literal-only
//!    parameter expressions,
//! 2. splitting multi-name net declarations and turning named connections
//!    to modules defined in the same source into positional ones,
//! 3. ordering module-level items by an identifier-blind hash refined with
//!    neighbouring identifier classes until the colouring stops splitting,
//! 4. ordering modules by depth in the instance hierarchy, then by their
//!    identifier-blind shape,
//! 5. renaming every identifier by first occurrence in the reordered tree.
//!
//! Statement order inside procedural blocks and port order are kept.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use sha2::{Digest as _, Sha256};

use crate::verilog::ast::*;
use crate::verilog::consteval::{self, Const};
use crate::verilog::node::{self, Node};
use crate::verilog::visit::{self, IdentRole};

/// SHA-256 of the span-free serialization of a canonical tree.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({self})")
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone)]
pub struct CanonicalForm {
    pub tree: SyntaxTree,
    pub digest: Digest,
    shape: Node,
}

impl CanonicalForm {
    /// Span-insensitive node view of the canonical tree.
    pub fn shape(&self) -> &Node {
        &self.shape
    }
}

impl PartialEq for CanonicalForm {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest && self.shape.same_shape(&other.shape)
    }
}

impl Eq for CanonicalForm {}

pub fn canonicalize(tree: &SyntaxTree) -> CanonicalForm {
    let mut t = tree.clone();
    let definitions: HashMap<String, ModuleInterface> = tree
        .modules
        .iter()
        .map(|m| (m.name.name.clone(), ModuleInterface::of(m)))
        .collect();
    for m in &mut t.modules {
        normalize_module(m, &definitions);
        order_items(m);
    }
    order_modules(&mut t);
    rename(&mut t);
    let shape = node::tree_node(&t);
    let mut bytes = Vec::new();
    shape.write_shape(&mut bytes);
    let digest = Digest(Sha256::digest(&bytes).into());
    CanonicalForm { tree: t, digest, shape }
}

/// Digest fast path, confirmed by depth-first node comparison.
pub fn structurally_equivalent(a: &SyntaxTree, b: &SyntaxTree) -> bool {
    canonicalize(a) == canonicalize(b)
}

/// Path to the first differing canonical node, `None` when equivalent.
pub fn explain_difference(a: &SyntaxTree, b: &SyntaxTree) -> Option<String> {
    let (ca, cb) = (canonicalize(a), canonicalize(b));
    ca.shape.first_difference(&cb.shape)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivClassPartition {
    pub classes: Vec<Vec<usize>>,
    pub representatives: Vec<usize>,
}

impl EquivClassPartition {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Class id of a candidate index.
    pub fn class_of(&self, index: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&index))
    }
}

pub fn partition(candidates: &[SyntaxTree]) -> EquivClassPartition {
    let forms: Vec<CanonicalForm> = candidates.iter().map(canonicalize).collect();
    partition_forms(&forms)
}

/// Groups by digest, confirming each bucket member by node comparison.
/// Classes are ordered by their first index; the representative is that
/// first index.
pub fn partition_forms(forms: &[CanonicalForm]) -> EquivClassPartition {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut buckets: HashMap<Digest, Vec<usize>> = HashMap::new();
    for (i, f) in forms.iter().enumerate() {
        let bucket = buckets.entry(f.digest).or_default();
        match bucket.iter().copied().find(|&c| forms[classes[c][0]] == *f) {
            Some(c) => classes[c].push(i),
            None => {
                bucket.push(classes.len());
                classes.push(vec![i]);
            }
        }
    }
    let representatives = classes.iter().map(|c| c[0]).collect();
    EquivClassPartition {
        classes,
        representatives,
    }
}

// ---- normalization ------------------------------------------------------

struct ModuleInterface {
    ports: Vec<String>,
    overridable: Vec<String>,
}

impl ModuleInterface {
    fn of(m: &ModuleDecl) -> Self {
        ModuleInterface {
            ports: m.ports.iter().map(|p| p.name.name.clone()).collect(),
            overridable: m
                .parameters
                .iter()
                .filter(|p| !p.local)
                .map(|p| p.name.name.clone())
                .collect(),
        }
    }
}

fn normalized_literal(width: u32, value: u128, xz: u128) -> Literal {
    if xz == 0 {
        return Literal::decimal(Some(width), value);
    }
    let digits = (0..width)
        .rev()
        .map(|b| {
            if (xz >> b) & 1 == 1 {
                'x'
            } else if (value >> b) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect();
    Literal {
        width: Some(width),
        base: Some(Base::Binary),
        digits,
        value,
        xz_mask: xz,
    }
}

fn normalize_literals(e: &mut Expr) {
    visit::map_expr_bottom_up(e, &mut |e| {
        if let ExprKind::Literal(l) = &e.kind {
            e.kind = ExprKind::Literal(normalized_literal(l.effective_width(), l.value, l.xz_mask));
        }
    });
}

fn fold_literal_only(e: &mut Expr) {
    visit::map_expr_bottom_up(e, &mut |e| {
        if matches!(e.kind, ExprKind::Literal(_)) || !consteval::is_literal_only(e) {
            return;
        }
        if let Ok(Const { value, width }) = consteval::eval(e, &|_| None) {
            e.kind = ExprKind::Literal(normalized_literal(width, value, 0));
        }
    });
}

fn to_positional(named: &[NamedConnection], order: &[String]) -> Option<Connections> {
    if named.iter().any(|nc| !order.contains(&nc.port.name)) {
        return None;
    }
    Some(Connections::Positional(
        order
            .iter()
            .map(|p| {
                named
                    .iter()
                    .find(|nc| nc.port.name == *p)
                    .and_then(|nc| nc.expr.clone())
            })
            .collect(),
    ))
}

fn normalize_connections(c: &mut Connections, order: Option<&[String]>) {
    if let Connections::Named(named) = c {
        match order.and_then(|o| to_positional(named, o)) {
            Some(pos) => *c = pos,
            None => named.sort_by(|a, b| a.port.name.cmp(&b.port.name)),
        }
    }
}

fn normalize_module(m: &mut ModuleDecl, defs: &HashMap<String, ModuleInterface>) {
    let mut items = Vec::with_capacity(m.items.len());
    for item in m.items.drain(..) {
        match item {
            Item::Net(decl) if decl.names.len() > 1 => {
                for nn in &decl.names {
                    items.push(Item::Net(NetDecl {
                        kind: decl.kind,
                        range: decl.range.clone(),
                        names: vec![nn.clone()],
                        span: decl.span,
                    }));
                }
            }
            Item::Instance(mut inst) => {
                let def = defs.get(&inst.module.name);
                if let Some(p) = &mut inst.parameters {
                    normalize_connections(p, def.map(|d| d.overridable.as_slice()));
                }
                normalize_connections(&mut inst.connections, def.map(|d| d.ports.as_slice()));
                items.push(Item::Instance(inst));
            }
            other => items.push(other),
        }
    }
    m.items = items;
    for p in &mut m.parameters {
        fold_literal_only(&mut p.value);
    }
    visit::visit_module_exprs(m, &mut normalize_literals);
}

// ---- canonical item order ----------------------------------------------

/// Deterministic 64-bit colour from a byte stream.
#[derive(Default)]
struct Color(Sha256);

impl Color {
    fn bytes(mut self, b: &[u8]) -> Self {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
        self
    }

    fn num(mut self, v: u64) -> Self {
        self.0.update(v.to_le_bytes());
        self
    }

    fn finish(self) -> u64 {
        let d = self.0.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("32-byte digest"))
    }
}

fn shape_color(n: &Node) -> u64 {
    let mut buf = Vec::new();
    n.write_shape(&mut buf);
    Color::default().bytes(&buf).finish()
}

fn blind_item_color(item: &Item) -> u64 {
    let mut blind = item.clone();
    visit::visit_item(&mut blind, &mut |role, name| {
        if matches!(role, IdentRole::Local | IdentRole::InstantiatedModule) {
            name.clear();
        }
    });
    shape_color(&node::item_node(&blind))
}

fn blind_range_color(r: &Option<Range>) -> u64 {
    let Some(r) = r else { return 0 };
    let mut r = r.clone();
    let mut f = |role: IdentRole, name: &mut String| {
        if role == IdentRole::Local {
            name.clear();
        }
    };
    visit::visit_expr(&mut r.msb, &mut f);
    visit::visit_expr(&mut r.lsb, &mut f);
    let mut buf = Vec::new();
    node::expr_node(&r.msb).write_shape(&mut buf);
    node::expr_node(&r.lsb).write_shape(&mut buf);
    Color::default().bytes(&buf).finish()
}

fn distinct<T: Ord + Copy>(v: impl Iterator<Item = T>) -> usize {
    let mut all: Vec<T> = v.collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

fn order_items(m: &mut ModuleDecl) {
    let n = m.items.len();
    if n < 2 {
        return;
    }
    // identifier -> initial colour
    let mut ident_color: BTreeMap<String, u64> = BTreeMap::new();
    for (i, p) in m.parameters.iter().enumerate() {
        ident_color.insert(
            p.name.name.clone(),
            Color::default()
                .bytes(b"param")
                .num(i as u64)
                .num(p.local as u64)
                .finish(),
        );
    }
    for (i, p) in m.ports.iter().enumerate() {
        ident_color.insert(
            p.name.name.clone(),
            Color::default()
                .bytes(b"port")
                .num(i as u64)
                .bytes(p.direction.keyword().as_bytes())
                .bytes(p.kind.keyword().as_bytes())
                .num(blind_range_color(&p.range))
                .finish(),
        );
    }

    let base: Vec<u64> = m.items.iter().map(blind_item_color).collect();
    let occurrences: Vec<Vec<String>> = m
        .items
        .iter_mut()
        .map(|item| {
            let mut occ = Vec::new();
            visit::visit_item(item, &mut |role, name| {
                if role == IdentRole::Local {
                    occ.push(name.clone());
                }
            });
            occ
        })
        .collect();
    for occ in &occurrences {
        for name in occ {
            ident_color
                .entry(name.clone())
                .or_insert_with(|| Color::default().bytes(b"local").finish());
        }
    }

    let mut item_color = base.clone();
    let mut classes = 0usize;
    for _ in 0..=(n + ident_color.len()) {
        item_color = occurrences
            .iter()
            .zip(&base)
            .map(|(occ, &b)| {
                occ.iter()
                    .fold(Color::default().num(b), |c, name| c.num(ident_color[name]))
                    .finish()
            })
            .collect();
        let mut contexts: BTreeMap<&str, Vec<(u64, u64)>> = BTreeMap::new();
        for (i, occ) in occurrences.iter().enumerate() {
            for (k, name) in occ.iter().enumerate() {
                contexts
                    .entry(name.as_str())
                    .or_default()
                    .push((item_color[i], k as u64));
            }
        }
        let mut next = ident_color.clone();
        for (name, mut ctx) in contexts {
            ctx.sort_unstable();
            let c = ctx
                .iter()
                .fold(Color::default().num(ident_color[name]), |c, &(ic, k)| c.num(ic).num(k))
                .finish();
            next.insert(name.to_string(), c);
        }
        ident_color = next;
        let now = distinct(item_color.iter().copied()) + distinct(ident_color.values().copied());
        if now <= classes {
            break;
        }
        classes = now;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (item_color[i], base[i], i));
    let mut old: Vec<Option<Item>> = m.items.drain(..).map(Some).collect();
    m.items = order
        .into_iter()
        .map(|i| old[i].take().expect("each index once"))
        .collect();
}

/// Longest instantiation path from a root decides depth; recursion is
/// capped at the module count.
fn order_modules(t: &mut SyntaxTree) {
    let n = t.modules.len();
    let index: HashMap<&str, usize> = t
        .modules
        .iter()
        .enumerate()
        .map(|(i, m)| (m.name.name.as_str(), i))
        .collect();
    let children: Vec<Vec<usize>> = t
        .modules
        .iter()
        .map(|m| {
            m.items
                .iter()
                .filter_map(|item| match item {
                    Item::Instance(inst) => index.get(inst.module.name.as_str()).copied(),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let mut depth = vec![0usize; n];
    for _ in 0..n {
        let mut changed = false;
        for p in 0..n {
            for &c in &children[p] {
                if depth[c] <= depth[p] && depth[p] + 1 < n {
                    depth[c] = depth[p] + 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let blind: Vec<Vec<u8>> = t
        .modules
        .iter()
        .map(|m| {
            let mut m = m.clone();
            let mut locals: HashMap<String, usize> = HashMap::new();
            visit::visit_module_idents(&mut m, &mut |role, name| match role {
                IdentRole::ModuleName | IdentRole::InstantiatedModule => *name = String::new(),
                IdentRole::Local => {
                    let next = locals.len();
                    *name = format!("n{}", locals.entry(std::mem::take(name)).or_insert(next));
                }
                IdentRole::ForeignPort => {}
            });
            let mut bytes = Vec::new();
            node::module_node(&m).write_shape(&mut bytes);
            bytes
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (depth[a], &blind[a], a).cmp(&(depth[b], &blind[b], b)));
    let mut old: Vec<Option<ModuleDecl>> = t.modules.drain(..).map(Some).collect();
    t.modules = order
        .into_iter()
        .map(|i| old[i].take().expect("each index once"))
        .collect();
}

fn rename(t: &mut SyntaxTree) {
    let mut modules: HashMap<String, String> = HashMap::new();
    let mut module_name = |name: &mut String| {
        let next = format!("m{}", modules.len());
        *name = modules.entry(std::mem::take(name)).or_insert(next).clone();
    };
    for m in &mut t.modules {
        let mut locals: HashMap<String, String> = HashMap::new();
        visit::visit_module_idents(m, &mut |role, name| match role {
            IdentRole::ModuleName | IdentRole::InstantiatedModule => module_name(name),
            IdentRole::Local => {
                let next = format!("n{}", locals.len());
                *name = locals.entry(std::mem::take(name)).or_insert(next).clone();
            }
            IdentRole::ForeignPort => {}
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verilog::parse_source;

    fn tree(src: &str) -> SyntaxTree {
        parse_source(src).unwrap_or_else(|e| panic!("{e}\n{src}"))
    }

    #[test]
    fn renamed_nets_share_a_digest() {
        let a = tree("module m(input a, b, output y); wire p; assign p = a & b; assign y = ~p; endmodule");
        let b = tree("module m(input a, b, output y); wire q; assign q = a & b; assign y = ~q; endmodule");
        assert_eq!(canonicalize(&a).digest, canonicalize(&b).digest);
    }

    #[test]
    fn reversed_module_items_share_a_digest() {
        let a = tree("module m(input a, b, output x, y); assign x = a & b; assign y = a | b; endmodule");
        let b = tree("module m(input a, b, output x, y); assign y = a | b; assign x = a & b; endmodule");
        assert_eq!(canonicalize(&a).digest, canonicalize(&b).digest);
    }

    #[test]
    fn literal_spelling_is_erased() {
        let a = tree("module m(input [7:0] a, output y); assign y = a == 8'hFF; endmodule");
        let b = tree("module m(input [7:0] a, output y); assign y = a == 8'd255; endmodule");
        let c = tree("module m(input [7:0] a, output y); assign y = a == 8'b1111_1111; endmodule");
        let d = tree("module m(input [7:0] a, output y); assign y = a == 8'd254; endmodule");
        assert_eq!(canonicalize(&a).digest, canonicalize(&b).digest);
        assert_eq!(canonicalize(&a).digest, canonicalize(&c).digest);
        assert_ne!(canonicalize(&a).digest, canonicalize(&d).digest);
    }

    #[test]
    fn module_declaration_order_is_ignored() {
        let a = tree(
            "module top(input x, output z); sub u(x, z); endmodule
             module sub(input i, output o); assign o = ~i; endmodule",
        );
        let b = tree(
            "module leaf(input i, output o); assign o = ~i; endmodule
             module root(input x, output z); leaf u(x, z); endmodule",
        );
        assert!(structurally_equivalent(&a, &b));
        let c = tree(
            "module root(input x, output z); leaf u(x, z); endmodule
             module leaf(input i, output o); assign o = i; endmodule",
        );
        assert!(!structurally_equivalent(&a, &c));
    }

    #[test]
    fn module_name_is_canonicalized_away() {
        let a = tree("module add(input a, output y); assign y = a; endmodule");
        let b = tree("module buffer(input a, output y); assign y = a; endmodule");
        assert!(structurally_equivalent(&a, &b));
    }

    #[test]
    fn port_order_is_significant() {
        let a = tree("module m(input a, b, output y); assign y = a & ~b; endmodule");
        let b = tree("module m(input b, a, output y); assign y = a & ~b; endmodule");
        assert!(!structurally_equivalent(&a, &b));
    }

    #[test]
    fn parameter_defaults_are_folded() {
        let a = tree("module m #(parameter W = 4 + 4) (input [W-1:0] a, output [W-1:0] y); assign y = a; endmodule");
        let b = tree("module m #(parameter W = 8) (input [W-1:0] a, output [W-1:0] y); assign y = a; endmodule");
        let c = tree("module m #(parameter W = 9) (input [W-1:0] a, output [W-1:0] y); assign y = a; endmodule");
        assert!(structurally_equivalent(&a, &b));
        assert!(!structurally_equivalent(&a, &c));
    }

    #[test]
    fn dependent_statement_swap_is_not_equivalent() {
        let a = tree("module m(input x, output reg a, output reg b); always @* begin a = x; b = a; end endmodule");
        let b = tree("module m(input x, output reg a, output reg b); always @* begin b = a; a = x; end endmodule");
        assert!(!structurally_equivalent(&a, &b));
        assert!(explain_difference(&a, &b).is_some());
    }

    #[test]
    fn named_connections_to_local_module_become_positional() {
        let a = tree(
            "module top(input x, output z); sub u(.i(x), .o(z)); endmodule
             module sub(input i, output o); assign o = ~i; endmodule",
        );
        let b = tree(
            "module top(input x, output z); sub u(.o(z), .i(x)); endmodule
             module sub(input i, output o); assign o = ~i; endmodule",
        );
        let c = tree(
            "module top(input x, output z); sub u(x, z); endmodule
             module sub(input i, output o); assign o = ~i; endmodule",
        );
        assert!(structurally_equivalent(&a, &b));
        assert!(structurally_equivalent(&a, &c));
    }

    #[test]
    fn split_declarations_match_combined() {
        let a = tree("module m(input a, output y); wire p, q; assign p = a; assign q = p; assign y = q; endmodule");
        let b =
            tree("module m(input a, output y); wire p; wire q; assign p = a; assign q = p; assign y = q; endmodule");
        assert!(structurally_equivalent(&a, &b));
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let t = tree(
            "module m(input clk, input [3:0] d, output reg [3:0] q, output z);
               wire [3:0] t; assign z = ^t; assign t = d ^ 4'hA;
               always @(posedge clk) q <= t; endmodule",
        );
        let once = canonicalize(&t);
        let twice = canonicalize(&once.tree);
        assert_eq!(once, twice);
        assert_eq!(once.digest, twice.digest);
    }

    #[test]
    fn partition_orders_classes_by_first_index() {
        let a = tree("module m(input a, b, output y); assign y = a & b; endmodule");
        let a2 = tree("module k(input p, q, output r); assign r = p & q; endmodule");
        let b = tree("module m(input a, b, output y); assign y = a | b; endmodule");
        let p = partition(&[b.clone(), a.clone(), a2, b]);
        assert_eq!(p.classes, vec![vec![0, 3], vec![1, 2]]);
        assert_eq!(p.representatives, vec![0, 1]);
        assert_eq!(p.class_of(2), Some(1));
    }
}
