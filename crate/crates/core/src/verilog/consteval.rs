// SPDX-License-Identifier: Apache-2.0

//! Two-state constant expression evaluation with self-determined widths.
//! Used for parameters, ranges and literal folding.

use super::ast::*;

pub const MAX_WIDTH: u32 = 128;

/// A value together with its bit width; `value` is always masked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Const {
    pub value: u128,
    pub width: u32,
}

pub fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

impl Const {
    pub fn new(value: u128, width: u32) -> Self {
        let width = width.clamp(1, MAX_WIDTH);
        Const {
            value: value & mask(width),
            width,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        i64::try_from(self.value).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstError {
    #[error("`{0}` is not a known constant")]
    Unknown(String),
    #[error("{0} is not allowed in a constant expression")]
    NotConstant(&'static str),
    #[error("constant wider than {MAX_WIDTH} bits")]
    TooWide,
}

pub fn eval(e: &Expr, lookup: &dyn Fn(&str) -> Option<Const>) -> Result<Const, ConstError> {
    match &e.kind {
        ExprKind::Ident(n) => lookup(n).ok_or_else(|| ConstError::Unknown(n.clone())),
        ExprKind::Literal(l) => {
            let w = l.effective_width();
            if w > MAX_WIDTH {
                return Err(ConstError::TooWide);
            }
            Ok(Const::new(l.value, w))
        }
        ExprKind::Unary { op, operand } => {
            let v = eval(operand, lookup)?;
            Ok(unary(*op, v))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let a = eval(lhs, lookup)?;
            let b = eval(rhs, lookup)?;
            Ok(binary(*op, a, b))
        }
        ExprKind::Ternary { cond, then, otherwise } => {
            let c = eval(cond, lookup)?;
            let t = eval(then, lookup)?;
            let o = eval(otherwise, lookup)?;
            let w = t.width.max(o.width);
            Ok(Const::new(if c.value != 0 { t.value } else { o.value }, w))
        }
        ExprKind::Concat(parts) => {
            let mut acc = Const { value: 0, width: 0 };
            for p in parts {
                let v = eval(p, lookup)?;
                acc = concat(acc, v)?;
            }
            Ok(acc)
        }
        ExprKind::Replication { count, parts } => {
            let n = eval(count, lookup)?.value;
            let mut unit = Const { value: 0, width: 0 };
            for p in parts {
                unit = concat(unit, eval(p, lookup)?)?;
            }
            let mut acc = Const { value: 0, width: 0 };
            for _ in 0..n.min(MAX_WIDTH as u128 + 1) {
                acc = concat(acc, unit)?;
            }
            if acc.width == 0 {
                return Err(ConstError::NotConstant("zero replication"));
            }
            Ok(acc)
        }
        ExprKind::BitSelect { base, index } => {
            let b = eval(base, lookup)?;
            let i = eval(index, lookup)?.value;
            Ok(Const::new(if i < b.width as u128 { b.value >> i } else { 0 }, 1))
        }
        ExprKind::PartSelect { base, msb, lsb } => {
            let b = eval(base, lookup)?;
            let hi = eval(msb, lookup)?.value;
            let lo = eval(lsb, lookup)?.value;
            if hi < lo || hi >= MAX_WIDTH as u128 {
                return Err(ConstError::NotConstant("reversed part-select"));
            }
            Ok(Const::new(b.value >> lo, (hi - lo + 1) as u32))
        }
    }
}

fn concat(hi: Const, lo: Const) -> Result<Const, ConstError> {
    let w = hi.width + lo.width;
    if w > MAX_WIDTH {
        return Err(ConstError::TooWide);
    }
    let shifted = if lo.width >= 128 { 0 } else { hi.value << lo.width };
    Ok(Const {
        value: shifted | lo.value,
        width: w,
    })
}

fn bool_const(b: bool) -> Const {
    Const::new(b as u128, 1)
}

pub fn reduce(op: UnaryOp, v: Const) -> bool {
    let m = mask(v.width);
    match op {
        UnaryOp::ReduceAnd => v.value == m,
        UnaryOp::ReduceNand => v.value != m,
        UnaryOp::ReduceOr => v.value != 0,
        UnaryOp::ReduceNor => v.value == 0,
        UnaryOp::ReduceXor => v.value.count_ones() % 2 == 1,
        UnaryOp::ReduceXnor => v.value.count_ones().is_multiple_of(2),
        _ => unreachable!("not a reduction"),
    }
}

fn unary(op: UnaryOp, v: Const) -> Const {
    match op {
        UnaryOp::Plus => v,
        UnaryOp::Minus => Const::new(v.value.wrapping_neg(), v.width),
        UnaryOp::BitNot => Const::new(!v.value, v.width),
        UnaryOp::LogicalNot => bool_const(v.value == 0),
        _ => bool_const(reduce(op, v)),
    }
}

/// Binary operation at `width = max(a, b)` for arithmetic and bitwise
/// operators; relational and logical results are one bit.
pub fn binary(op: BinaryOp, a: Const, b: Const) -> Const {
    let w = a.width.max(b.width);
    let (x, y) = (a.value, b.value);
    match op {
        BinaryOp::Add => Const::new(x.wrapping_add(y), w),
        BinaryOp::Sub => Const::new(x.wrapping_sub(y), w),
        BinaryOp::Mul => Const::new(x.wrapping_mul(y), w),
        BinaryOp::Div => Const::new(x.checked_div(y).unwrap_or(0), w),
        BinaryOp::Mod => Const::new(x.checked_rem(y).unwrap_or(0), w),
        BinaryOp::Pow => Const::new(pow(x, y), a.width),
        BinaryOp::Shl | BinaryOp::AShl => Const::new(shl(x, y), a.width),
        BinaryOp::Shr | BinaryOp::AShr => Const::new(shr(x, y), a.width),
        BinaryOp::Lt => bool_const(x < y),
        BinaryOp::Le => bool_const(x <= y),
        BinaryOp::Gt => bool_const(x > y),
        BinaryOp::Ge => bool_const(x >= y),
        BinaryOp::Eq | BinaryOp::CaseEq => bool_const(x == y),
        BinaryOp::Ne | BinaryOp::CaseNe => bool_const(x != y),
        BinaryOp::BitAnd => Const::new(x & y, w),
        BinaryOp::BitOr => Const::new(x | y, w),
        BinaryOp::BitXor => Const::new(x ^ y, w),
        BinaryOp::BitXnor => Const::new(!(x ^ y), w),
        BinaryOp::LogicalAnd => bool_const(x != 0 && y != 0),
        BinaryOp::LogicalOr => bool_const(x != 0 || y != 0),
    }
}

pub fn shl(x: u128, y: u128) -> u128 {
    if y >= 128 {
        0
    } else {
        x << y
    }
}

pub fn shr(x: u128, y: u128) -> u128 {
    if y >= 128 {
        0
    } else {
        x >> y
    }
}

pub fn pow(x: u128, y: u128) -> u128 {
    let mut result: u128 = 1;
    let mut base = x;
    let mut e = y;
    while e > 0 {
        if e & 1 == 1 {
            result = result.wrapping_mul(base);
        }
        base = base.wrapping_mul(base);
        e >>= 1;
    }
    result
}

/// True when the expression contains only literals and operators.
pub fn is_literal_only(e: &Expr) -> bool {
    let mut found = false;
    e.for_each_ident(&mut |_, _| found = true);
    !found
}
