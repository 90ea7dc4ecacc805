// SPDX-License-Identifier: Apache-2.0

//! Flattening of a resolved syntax tree into signals, combinational
//! processes (topologically ordered) and clocked processes.

use std::collections::{BTreeSet, HashMap};

use crate::verilog::ast::*;
use crate::verilog::consteval::{self, Const, ConstError, MAX_WIDTH};

use super::ir::*;

/// Instantiation nesting limit.
pub const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ElaborationError {
    #[error("no module named `{0}`")]
    UnknownTop(String),
    #[error("cannot pick a top module: candidates are {0:?}; name one explicitly")]
    AmbiguousTop(Vec<String>),
    #[error("the source defines no modules")]
    Empty,
    #[error("instantiation of undefined module `{module}` in `{parent}`")]
    UnresolvedInstance { module: String, parent: String },
    #[error("recursive instantiation of `{0}`")]
    Recursion(String),
    #[error("instantiation depth exceeds {MAX_DEPTH}")]
    DepthExceeded,
    #[error("combinational cycle through {0:?}")]
    CombinationalCycle(Vec<String>),
    #[error("`{0}` is wider than {MAX_WIDTH} bits")]
    TooWide(String),
    #[error("in `{module}`: {message}")]
    Connection { module: String, message: String },
    #[error("constant expression in `{module}`: {source}")]
    Constant { module: String, source: ConstError },
    #[error("{0} is not supported by the built-in simulator")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortInfo {
    pub name: String,
    pub direction: Direction,
    pub sig: SigId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockedProcess {
    pub events: Vec<(Edge, SigId)>,
    pub body: CStmt,
}

/// An elaborated, immutable simulation template.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDesign {
    pub(crate) top: String,
    pub(crate) signals: Vec<Signal>,
    pub(crate) widths: Vec<u32>,
    pub(crate) ports: Vec<PortInfo>,
    pub(crate) comb: Vec<CStmt>,
    pub(crate) clocked: Vec<ClockedProcess>,
}

impl SimDesign {
    pub fn top(&self) -> &str {
        &self.top
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn ports(&self) -> &[PortInfo] {
        &self.ports
    }

    pub fn port(&self, name: &str) -> Option<&PortInfo> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn combinational_count(&self) -> usize {
        self.comb.len()
    }

    pub fn clocked_count(&self) -> usize {
        self.clocked.len()
    }
}

/// Elaborates `top`, or the unique module no other module instantiates.
pub fn elaborate(tree: &SyntaxTree, top: Option<&str>) -> Result<SimDesign, ElaborationError> {
    let top_module = match top {
        Some(name) => tree
            .module(name)
            .ok_or_else(|| ElaborationError::UnknownTop(name.to_string()))?,
        None => pick_top(tree)?,
    };
    let mut b = Builder {
        tree,
        signals: Vec::new(),
        comb: Vec::new(),
        clocked: Vec::new(),
        stack: Vec::new(),
    };
    let ports = b.instantiate(top_module, "", &HashMap::new())?;
    let widths: Vec<u32> = b.signals.iter().map(|s| s.width).collect();
    let comb = order_comb(b.comb, &b.signals, &widths)?;
    Ok(SimDesign {
        top: top_module.name.name.clone(),
        signals: b.signals,
        widths,
        ports,
        comb,
        clocked: b.clocked,
    })
}

fn pick_top(tree: &SyntaxTree) -> Result<&ModuleDecl, ElaborationError> {
    let mut used = BTreeSet::new();
    for m in &tree.modules {
        for item in &m.items {
            if let Item::Instance(i) = item {
                used.insert(i.module.name.as_str());
            }
        }
    }
    let roots: Vec<&ModuleDecl> = tree
        .modules
        .iter()
        .filter(|m| !used.contains(m.name.name.as_str()))
        .collect();
    match roots.as_slice() {
        [one] => Ok(one),
        [] if tree.modules.is_empty() => Err(ElaborationError::Empty),
        [] => Err(ElaborationError::Recursion(tree.modules[0].name.name.clone())),
        many => Err(ElaborationError::AmbiguousTop(
            many.iter().map(|m| m.name.name.clone()).collect(),
        )),
    }
}

#[derive(Debug, Clone, Copy)]
enum Binding {
    Sig(SigId),
    Param(Const, IndexMap),
}

struct Scope<'a> {
    module: &'a str,
    names: HashMap<String, Binding>,
    maps: HashMap<SigId, IndexMap>,
}

struct Builder<'t> {
    tree: &'t SyntaxTree,
    signals: Vec<Signal>,
    comb: Vec<CStmt>,
    clocked: Vec<ClockedProcess>,
    stack: Vec<String>,
}

impl<'t> Builder<'t> {
    fn instantiate(
        &mut self,
        m: &'t ModuleDecl,
        prefix: &str,
        overrides: &HashMap<String, Const>,
    ) -> Result<Vec<PortInfo>, ElaborationError> {
        let mname = m.name.name.as_str();
        if self.stack.iter().any(|s| s == mname) {
            return Err(ElaborationError::Recursion(mname.to_string()));
        }
        if self.stack.len() >= MAX_DEPTH {
            return Err(ElaborationError::DepthExceeded);
        }
        self.stack.push(mname.to_string());

        let mut scope = Scope {
            module: mname,
            names: HashMap::new(),
            maps: HashMap::new(),
        };
        for p in &m.parameters {
            let range = p.range.as_ref().map(|r| scope.range(r)).transpose()?;
            let value = match overrides.get(&p.name.name) {
                Some(v) if !p.local => *v,
                _ => scope.constant(&p.value)?,
            };
            let value = match range {
                Some(r) => Const::new(value.value, r.width()),
                None => value,
            };
            let map = range.unwrap_or(IndexMap {
                msb: value.width as i64 - 1,
                lsb: 0,
            });
            scope.names.insert(p.name.name.clone(), Binding::Param(value, map));
        }

        let mut ports = Vec::new();
        for p in &m.ports {
            if p.direction == Direction::Inout {
                return Err(ElaborationError::Unsupported(format!("inout port `{}`", p.name.name)));
            }
            let sig = self.declare(&mut scope, prefix, &p.name.name, p.range.as_ref())?;
            ports.push(PortInfo {
                name: p.name.name.clone(),
                direction: p.direction,
                sig,
            });
        }
        for item in &m.items {
            if let Item::Net(d) = item {
                for nn in &d.names {
                    if !scope.names.contains_key(&nn.name.name) {
                        self.declare(&mut scope, prefix, &nn.name.name, d.range.as_ref())?;
                    }
                }
            }
        }

        for item in &m.items {
            match item {
                Item::Net(d) => {
                    for nn in &d.names {
                        if let Some(init) = &nn.init {
                            let lhs = Expr::new(ExprKind::Ident(nn.name.name.clone()), nn.name.span);
                            let stmt = scope.assign(&lhs, init, false)?;
                            self.comb.push(stmt);
                        }
                    }
                }
                Item::Assign(a) => {
                    let stmt = scope.assign(&a.lhs, &a.rhs, false)?;
                    self.comb.push(stmt);
                }
                Item::Always(b) => {
                    let body = scope.stmt(&b.body)?;
                    match &b.sensitivity {
                        Sensitivity::Star | Sensitivity::Signals(_) => self.comb.push(body),
                        Sensitivity::Edges(events) => {
                            let events = events
                                .iter()
                                .map(|e| match scope.names.get(&e.signal.name) {
                                    Some(Binding::Sig(s)) => Ok((e.edge, *s)),
                                    _ => Err(ElaborationError::Connection {
                                        module: mname.to_string(),
                                        message: format!("`{}` cannot be an event", e.signal.name),
                                    }),
                                })
                                .collect::<Result<_, _>>()?;
                            self.clocked.push(ClockedProcess { events, body });
                        }
                    }
                }
                Item::Instance(inst) if inst.is_primitive() => {
                    let stmt = scope.primitive(inst)?;
                    self.comb.push(stmt);
                }
                Item::Instance(inst) => self.submodule(&scope, prefix, inst)?,
            }
        }
        self.stack.pop();
        Ok(ports)
    }

    fn declare(
        &mut self,
        scope: &mut Scope<'_>,
        prefix: &str,
        name: &str,
        range: Option<&Range>,
    ) -> Result<SigId, ElaborationError> {
        let map = match range {
            Some(r) => scope.range(r)?,
            None => IndexMap { msb: 0, lsb: 0 },
        };
        let full = format!("{prefix}{name}");
        if map.width() > MAX_WIDTH {
            return Err(ElaborationError::TooWide(full));
        }
        let id = self.signals.len();
        self.signals.push(Signal {
            name: full,
            width: map.width(),
            range: map,
        });
        scope.names.insert(name.to_string(), Binding::Sig(id));
        scope.maps.insert(id, map);
        Ok(id)
    }

    fn submodule(&mut self, scope: &Scope<'_>, prefix: &str, inst: &Instantiation) -> Result<(), ElaborationError> {
        let child = self
            .tree
            .module(&inst.module.name)
            .ok_or_else(|| ElaborationError::UnresolvedInstance {
                module: inst.module.name.clone(),
                parent: scope.module.to_string(),
            })?;
        let conn_err = |message: String| ElaborationError::Connection {
            module: scope.module.to_string(),
            message,
        };
        let inst_name = inst.instance.as_ref().map(|i| i.name.as_str()).unwrap_or("_");

        let mut overrides = HashMap::new();
        if let Some(params) = &inst.parameters {
            let overridable: Vec<&ParamDecl> = child.parameters.iter().filter(|p| !p.local).collect();
            match params {
                Connections::Positional(v) => {
                    if v.len() > overridable.len() {
                        return Err(conn_err(format!(
                            "too many parameter overrides for `{}`",
                            child.name.name
                        )));
                    }
                    for (p, e) in overridable.iter().zip(v) {
                        if let Some(e) = e {
                            overrides.insert(p.name.name.clone(), scope.constant(e)?);
                        }
                    }
                }
                Connections::Named(v) => {
                    for nc in v {
                        if !overridable.iter().any(|p| p.name.name == nc.port.name) {
                            return Err(conn_err(format!(
                                "`{}` has no overridable parameter `{}`",
                                child.name.name, nc.port.name
                            )));
                        }
                        if let Some(e) = &nc.expr {
                            overrides.insert(nc.port.name.clone(), scope.constant(e)?);
                        }
                    }
                }
            }
        }

        let child_ports = self.instantiate(child, &format!("{prefix}{inst_name}."), &overrides)?;
        let pairs: Vec<(&PortInfo, &Expr)> = match &inst.connections {
            Connections::Positional(v) => {
                if v.len() > child_ports.len() {
                    return Err(conn_err(format!("too many connections to `{inst_name}`")));
                }
                child_ports
                    .iter()
                    .zip(v)
                    .filter_map(|(p, e)| e.as_ref().map(|e| (p, e)))
                    .collect()
            }
            Connections::Named(v) => {
                let mut out = Vec::new();
                for nc in v {
                    let port = child_ports
                        .iter()
                        .find(|p| p.name == nc.port.name)
                        .ok_or_else(|| conn_err(format!("`{}` has no port `{}`", child.name.name, nc.port.name)))?;
                    if let Some(e) = &nc.expr {
                        out.push((port, e));
                    }
                }
                out
            }
        };
        for (port, e) in pairs {
            let w = self.signals[port.sig].width;
            let stmt = match port.direction {
                Direction::Input => CStmt::Assign {
                    target: CLValue {
                        parts: vec![CTarget::Whole(port.sig)],
                        width: w,
                    },
                    value: scope.rvalue(e, w)?,
                    nonblocking: false,
                },
                Direction::Output => {
                    if !e.is_lvalue() {
                        return Err(conn_err(format!("output `{}` must connect to a net", port.name)));
                    }
                    let target = scope.lvalue(e)?;
                    let width = target.width.max(w);
                    CStmt::Assign {
                        target,
                        value: CExpr {
                            kind: CKind::Sig(port.sig),
                            width,
                        },
                        nonblocking: false,
                    }
                }
                Direction::Inout => unreachable!("rejected when the port was declared"),
            };
            self.comb.push(stmt);
        }
        Ok(())
    }
}

fn too_wide(what: &str) -> ElaborationError {
    ElaborationError::TooWide(what.to_string())
}

impl Scope<'_> {
    fn lookup_const(&self, name: &str) -> Option<Const> {
        match self.names.get(name) {
            Some(Binding::Param(c, _)) => Some(*c),
            _ => None,
        }
    }

    fn constant(&self, e: &Expr) -> Result<Const, ElaborationError> {
        consteval::eval(e, &|n| self.lookup_const(n)).map_err(|source| ElaborationError::Constant {
            module: self.module.to_string(),
            source,
        })
    }

    fn int(&self, e: &Expr) -> Result<i64, ElaborationError> {
        let c = self.constant(e)?;
        c.as_i64().ok_or_else(|| too_wide("constant index"))
    }

    fn range(&self, r: &Range) -> Result<IndexMap, ElaborationError> {
        Ok(IndexMap {
            msb: self.int(&r.msb)?,
            lsb: self.int(&r.lsb)?,
        })
    }

    fn base_map(&self, base: &Expr) -> Result<IndexMap, ElaborationError> {
        match &base.kind {
            ExprKind::Ident(n) => match self.names.get(n) {
                Some(Binding::Param(_, map)) => Ok(*map),
                _ => Err(ElaborationError::Unsupported(format!("select on `{n}`"))),
            },
            _ => {
                let w = self.self_width(base)?;
                Ok(IndexMap {
                    msb: w as i64 - 1,
                    lsb: 0,
                })
            }
        }
    }

    fn sig_or_map(&self, base: &Expr) -> Result<(Option<SigId>, IndexMap), ElaborationError> {
        if let ExprKind::Ident(n) = &base.kind {
            if let Some(Binding::Sig(s)) = self.names.get(n) {
                return Ok((Some(*s), IndexMap { msb: 0, lsb: 0 }));
            }
        }
        Ok((None, self.base_map(base)?))
    }

    fn part_bounds(&self, map: IndexMap, msb: &Expr, lsb: &Expr) -> Result<(u32, u32), ElaborationError> {
        let (h, l) = (self.int(msb)?, self.int(lsb)?);
        let (ph, pl) = match (map.position(h), map.position(l)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(ElaborationError::Connection {
                    module: self.module.to_string(),
                    message: format!("part-select [{h}:{l}] outside the declared range"),
                })
            }
        };
        Ok((ph.min(pl), ph.abs_diff(pl) + 1))
    }

    fn self_width(&self, e: &Expr) -> Result<u32, ElaborationError> {
        let w = match &e.kind {
            ExprKind::Ident(n) => match self.names.get(n) {
                Some(Binding::Sig(s)) => self.sig_map(*s).width(),
                Some(Binding::Param(c, _)) => c.width,
                None => return Err(ElaborationError::Unsupported(format!("reference to `{n}`"))),
            },
            ExprKind::Literal(l) => l.effective_width(),
            ExprKind::Unary { op, operand } => match op {
                UnaryOp::Plus | UnaryOp::Minus | UnaryOp::BitNot => self.self_width(operand)?,
                _ => 1,
            },
            ExprKind::Binary { op, lhs, rhs } => match op {
                BinaryOp::Add
                | BinaryOp::Sub
                | BinaryOp::Mul
                | BinaryOp::Div
                | BinaryOp::Mod
                | BinaryOp::BitAnd
                | BinaryOp::BitOr
                | BinaryOp::BitXor
                | BinaryOp::BitXnor => self.self_width(lhs)?.max(self.self_width(rhs)?),
                BinaryOp::Pow | BinaryOp::Shl | BinaryOp::Shr | BinaryOp::AShl | BinaryOp::AShr => {
                    self.self_width(lhs)?
                }
                _ => 1,
            },
            ExprKind::Ternary { then, otherwise, .. } => self.self_width(then)?.max(self.self_width(otherwise)?),
            ExprKind::Concat(parts) => parts.iter().map(|p| self.self_width(p)).sum::<Result<u32, _>>()?,
            ExprKind::Replication { count, parts } => {
                let n = self.constant(count)?.value;
                let unit = parts.iter().map(|p| self.self_width(p)).sum::<Result<u32, _>>()? as u128;
                u32::try_from(n.saturating_mul(unit)).unwrap_or(u32::MAX)
            }
            ExprKind::BitSelect { .. } => 1,
            ExprKind::PartSelect { msb, lsb, .. } => {
                let (h, l) = (self.int(msb)?, self.int(lsb)?);
                (h - l).unsigned_abs() as u32 + 1
            }
        };
        if w > MAX_WIDTH || w == 0 {
            return Err(too_wide("expression"));
        }
        Ok(w)
    }

    /// Compiles `e` in a context of at least `ctx` bits.
    fn rvalue(&self, e: &Expr, ctx: u32) -> Result<CExpr, ElaborationError> {
        let w = self.self_width(e)?.max(ctx);
        self.expr(e, w)
    }

    fn expr(&self, e: &Expr, w: u32) -> Result<CExpr, ElaborationError> {
        let boxed = |x: CExpr| Box::new(x);
        let kind = match &e.kind {
            ExprKind::Ident(n) => match self.names.get(n) {
                Some(Binding::Sig(s)) => CKind::Sig(*s),
                Some(Binding::Param(c, _)) => CKind::Const(c.value),
                None => return Err(ElaborationError::Unsupported(format!("reference to `{n}`"))),
            },
            ExprKind::Literal(l) => CKind::Const(Const::new(l.value, l.effective_width()).value),
            ExprKind::Unary { op, operand } => match op {
                UnaryOp::Plus | UnaryOp::Minus | UnaryOp::BitNot => CKind::Unary(*op, boxed(self.expr(operand, w)?)),
                _ => CKind::Unary(*op, boxed(self.rvalue(operand, 0)?)),
            },
            ExprKind::Binary { op, lhs, rhs } => match op {
                BinaryOp::Add
                | BinaryOp::Sub
                | BinaryOp::Mul
                | BinaryOp::Div
                | BinaryOp::Mod
                | BinaryOp::BitAnd
                | BinaryOp::BitOr
                | BinaryOp::BitXor
                | BinaryOp::BitXnor => CKind::Binary(*op, boxed(self.expr(lhs, w)?), boxed(self.expr(rhs, w)?)),
                BinaryOp::Pow | BinaryOp::Shl | BinaryOp::Shr | BinaryOp::AShl | BinaryOp::AShr => {
                    CKind::Binary(*op, boxed(self.expr(lhs, w)?), boxed(self.rvalue(rhs, 0)?))
                }
                BinaryOp::LogicalAnd | BinaryOp::LogicalOr => {
                    CKind::Binary(*op, boxed(self.rvalue(lhs, 0)?), boxed(self.rvalue(rhs, 0)?))
                }
                _ => {
                    let m = self.self_width(lhs)?.max(self.self_width(rhs)?);
                    CKind::Binary(*op, boxed(self.expr(lhs, m)?), boxed(self.expr(rhs, m)?))
                }
            },
            ExprKind::Ternary { cond, then, otherwise } => CKind::Ternary(
                boxed(self.rvalue(cond, 0)?),
                boxed(self.expr(then, w)?),
                boxed(self.expr(otherwise, w)?),
            ),
            ExprKind::Concat(parts) => {
                CKind::Concat(parts.iter().map(|p| self.rvalue(p, 0)).collect::<Result<_, _>>()?)
            }
            ExprKind::Replication { count, parts } => {
                let n = self.constant(count)?.value;
                let unit: Vec<CExpr> = parts.iter().map(|p| self.rvalue(p, 0)).collect::<Result<_, _>>()?;
                let mut all = Vec::new();
                for _ in 0..n.min(MAX_WIDTH as u128) {
                    all.extend(unit.iter().cloned());
                }
                CKind::Concat(all)
            }
            ExprKind::BitSelect { base, index } => {
                let (sig, map) = self.sig_or_map(base)?;
                let map = match sig {
                    Some(s) => self.sig_map(s),
                    None => map,
                };
                CKind::BitSel {
                    base: boxed(self.rvalue(base, 0)?),
                    index: boxed(self.rvalue(index, 0)?),
                    map,
                }
            }
            ExprKind::PartSelect { base, msb, lsb } => {
                let (sig, map) = self.sig_or_map(base)?;
                let map = match sig {
                    Some(s) => self.sig_map(s),
                    None => map,
                };
                let (lo, bits) = self.part_bounds(map, msb, lsb)?;
                CKind::PartSel {
                    base: boxed(self.rvalue(base, 0)?),
                    lo,
                    bits,
                }
            }
        };
        Ok(CExpr { kind, width: w })
    }

    fn sig_map(&self, s: SigId) -> IndexMap {
        self.maps[&s]
    }

    fn lvalue(&self, e: &Expr) -> Result<CLValue, ElaborationError> {
        let mut parts = Vec::new();
        let mut width = 0;
        for t in e.lvalue_targets() {
            let (target, w) = self.target(t)?;
            parts.push(target);
            width += w;
        }
        if width > MAX_WIDTH {
            return Err(too_wide("assignment target"));
        }
        Ok(CLValue { parts, width })
    }

    fn target(&self, e: &Expr) -> Result<(CTarget, u32), ElaborationError> {
        let sig_of = |base: &Expr| match &base.kind {
            ExprKind::Ident(n) => match self.names.get(n) {
                Some(Binding::Sig(s)) => Ok(*s),
                _ => Err(ElaborationError::Unsupported(format!("assignment to `{n}`"))),
            },
            _ => Err(ElaborationError::Unsupported("assignment to an expression".into())),
        };
        match &e.kind {
            ExprKind::Ident(_) => {
                let s = sig_of(e)?;
                Ok((CTarget::Whole(s), self.sig_map(s).width()))
            }
            ExprKind::BitSelect { base, index } => {
                let s = sig_of(base)?;
                Ok((
                    CTarget::Bit {
                        sig: s,
                        index: self.rvalue(index, 0)?,
                        map: self.sig_map(s),
                    },
                    1,
                ))
            }
            ExprKind::PartSelect { base, msb, lsb } => {
                let s = sig_of(base)?;
                let (lo, bits) = self.part_bounds(self.sig_map(s), msb, lsb)?;
                Ok((CTarget::Part { sig: s, lo, bits }, bits))
            }
            _ => Err(ElaborationError::Unsupported("assignment target".into())),
        }
    }

    fn assign(&self, lhs: &Expr, rhs: &Expr, nonblocking: bool) -> Result<CStmt, ElaborationError> {
        let target = self.lvalue(lhs)?;
        let value = self.rvalue(rhs, target.width)?;
        Ok(CStmt::Assign {
            target,
            value,
            nonblocking,
        })
    }

    fn stmt(&self, s: &Stmt) -> Result<CStmt, ElaborationError> {
        Ok(match &s.kind {
            StmtKind::Blocking { lhs, rhs } => self.assign(lhs, rhs, false)?,
            StmtKind::NonBlocking { lhs, rhs } => self.assign(lhs, rhs, true)?,
            StmtKind::If { cond, then, otherwise } => CStmt::If {
                cond: self.rvalue(cond, 0)?,
                then: Box::new(self.stmt(then)?),
                otherwise: otherwise.as_ref().map(|o| self.stmt(o).map(Box::new)).transpose()?,
            },
            StmtKind::Case { subject, arms, default } => {
                let mut w = self.self_width(subject)?;
                for arm in arms {
                    for l in &arm.labels {
                        w = w.max(self.self_width(l)?);
                    }
                }
                let arms = arms
                    .iter()
                    .map(|arm| {
                        let labels = arm.labels.iter().map(|l| self.expr(l, w)).collect::<Result<_, _>>()?;
                        Ok((labels, self.stmt(&arm.body)?))
                    })
                    .collect::<Result<_, ElaborationError>>()?;
                CStmt::Case {
                    subject: self.expr(subject, w)?,
                    arms,
                    default: default.as_ref().map(|d| self.stmt(d).map(Box::new)).transpose()?,
                }
            }
            StmtKind::Block(body) => CStmt::Block(body.iter().map(|s| self.stmt(s)).collect::<Result<_, _>>()?),
            StmtKind::Null => CStmt::Null,
        })
    }

    fn primitive(&self, inst: &Instantiation) -> Result<CStmt, ElaborationError> {
        let gate = inst.module.name.as_str();
        let conns: Vec<&Expr> = match &inst.connections {
            Connections::Positional(v) => v
                .iter()
                .map(|e| {
                    e.as_ref().ok_or_else(|| ElaborationError::Connection {
                        module: self.module.to_string(),
                        message: format!("`{gate}` terminals cannot be left open"),
                    })
                })
                .collect::<Result<_, _>>()?,
            Connections::Named(_) => {
                return Err(ElaborationError::Connection {
                    module: self.module.to_string(),
                    message: format!("`{gate}` takes positional terminals only"),
                })
            }
        };
        if conns.len() < 2 {
            return Err(ElaborationError::Connection {
                module: self.module.to_string(),
                message: format!("`{gate}` needs an output and at least one input"),
            });
        }
        let (outs, ins) = if matches!(gate, "not" | "buf") {
            conns.split_at(conns.len() - 1)
        } else {
            conns.split_at(1)
        };
        let (op, invert) = match gate {
            "and" => (BinaryOp::BitAnd, false),
            "nand" => (BinaryOp::BitAnd, true),
            "or" => (BinaryOp::BitOr, false),
            "nor" => (BinaryOp::BitOr, true),
            "xor" => (BinaryOp::BitXor, false),
            "xnor" => (BinaryOp::BitXor, true),
            "buf" => (BinaryOp::BitOr, false),
            _ => (BinaryOp::BitOr, true),
        };
        let mut body = Vec::with_capacity(outs.len());
        for o in outs {
            let target = self.lvalue(o)?;
            let w = target.width;
            let mut value = self.rvalue(ins[0], w)?;
            for e in &ins[1..] {
                let rhs = self.rvalue(e, w)?;
                let width = value.width.max(rhs.width);
                value = CExpr {
                    kind: CKind::Binary(op, Box::new(value), Box::new(rhs)),
                    width,
                };
            }
            if invert {
                let width = value.width;
                value = CExpr {
                    kind: CKind::Unary(UnaryOp::BitNot, Box::new(value)),
                    width,
                };
            }
            body.push(CStmt::Assign {
                target,
                value,
                nonblocking: false,
            });
        }
        Ok(if body.len() == 1 {
            body.remove(0)
        } else {
            CStmt::Block(body)
        })
    }
}

/// Orders combinational processes so writers precede readers.
fn order_comb(procs: Vec<CStmt>, signals: &[Signal], widths: &[u32]) -> Result<Vec<CStmt>, ElaborationError> {
    let n = procs.len();
    let mut writers: HashMap<SigId, Vec<(usize, u128)>> = HashMap::new();
    for (i, p) in procs.iter().enumerate() {
        let mut ws = Vec::new();
        p.writes(&mut ws, widths);
        for (s, m) in ws {
            writers.entry(s).or_default().push((i, m));
        }
    }
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut indegree = vec![0usize; n];
    for (q, p) in procs.iter().enumerate() {
        let mut rs = Vec::new();
        p.reads(&mut rs, widths);
        for (s, m) in rs {
            for &(w, wm) in writers.get(&s).map(Vec::as_slice).unwrap_or(&[]) {
                if w != q && wm & m != 0 && succ[w].insert(q) {
                    indegree[q] += 1;
                }
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &j in &succ[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.insert(j);
            }
        }
    }
    if order.len() < n {
        // Whatever is left is on a cycle or downstream of one; peel off sinks.
        let mut left: BTreeSet<usize> = (0..n).collect();
        order.iter().for_each(|i| {
            left.remove(i);
        });
        loop {
            let sinks: Vec<usize> = left
                .iter()
                .copied()
                .filter(|&i| succ[i].iter().all(|j| !left.contains(j)))
                .collect();
            if sinks.is_empty() {
                break;
            }
            sinks.iter().for_each(|i| {
                left.remove(i);
            });
        }
        let mut names = BTreeSet::new();
        for (_, p) in procs.iter().enumerate().filter(|(i, _)| left.contains(i)) {
            let mut ws = Vec::new();
            p.writes(&mut ws, widths);
            names.extend(ws.into_iter().map(|(s, _)| signals[s].name.clone()));
        }
        return Err(ElaborationError::CombinationalCycle(names.into_iter().collect()));
    }
    let mut slots: Vec<Option<CStmt>> = procs.into_iter().map(Some).collect();
    Ok(order
        .into_iter()
        .map(|i| slots[i].take().expect("each index once"))
        .collect())
}
