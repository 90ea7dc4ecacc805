// SPDX-License-Identifier: Apache-2.0

//! Width-annotated expression and statement form executed by the engine.
//! Every expression node carries the width it is evaluated at; results are
//! always masked to that width.

use crate::verilog::ast::{BinaryOp, UnaryOp};
use crate::verilog::consteval::{self, mask, Const};

pub type SigId = usize;

/// Maps a declared `[msb:lsb]` index onto a bit position from the LSB.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMap {
    pub msb: i64,
    pub lsb: i64,
}

impl IndexMap {
    pub fn width(&self) -> u32 {
        ((self.msb - self.lsb).unsigned_abs() + 1) as u32
    }

    pub fn position(&self, index: i64) -> Option<u32> {
        let (lo, hi) = (self.msb.min(self.lsb), self.msb.max(self.lsb));
        (lo..=hi)
            .contains(&index)
            .then(|| (index - self.lsb).unsigned_abs() as u32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub name: String,
    pub width: u32,
    pub range: IndexMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CExpr {
    pub kind: CKind,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CKind {
    Const(u128),
    Sig(SigId),
    Unary(UnaryOp, Box<CExpr>),
    Binary(BinaryOp, Box<CExpr>, Box<CExpr>),
    Ternary(Box<CExpr>, Box<CExpr>, Box<CExpr>),
    /// Parts MSB first, each at its own width.
    Concat(Vec<CExpr>),
    BitSel {
        base: Box<CExpr>,
        index: Box<CExpr>,
        map: IndexMap,
    },
    PartSel {
        base: Box<CExpr>,
        lo: u32,
        bits: u32,
    },
}

impl CExpr {
    pub fn eval(&self, values: &[u128]) -> u128 {
        let w = self.width;
        let raw = match &self.kind {
            CKind::Const(v) => *v,
            CKind::Sig(s) => values[*s],
            CKind::Unary(op, a) => {
                let x = a.eval(values);
                match op {
                    UnaryOp::Plus => x,
                    UnaryOp::Minus => x.wrapping_neg(),
                    UnaryOp::BitNot => !x,
                    UnaryOp::LogicalNot => (x == 0) as u128,
                    _ => consteval::reduce(*op, Const::new(x, a.width)) as u128,
                }
            }
            CKind::Binary(op, a, b) => {
                let (x, y) = (a.eval(values), b.eval(values));
                match op {
                    BinaryOp::BitXnor => !(x ^ y),
                    BinaryOp::Pow => consteval::pow(x, y),
                    BinaryOp::Shl | BinaryOp::AShl => consteval::shl(x, y),
                    BinaryOp::Shr | BinaryOp::AShr => consteval::shr(x, y),
                    _ => consteval::binary(*op, Const::new(x, a.width), Const::new(y, b.width)).value,
                }
            }
            CKind::Ternary(c, t, o) => {
                if c.eval(values) != 0 {
                    t.eval(values)
                } else {
                    o.eval(values)
                }
            }
            CKind::Concat(parts) => parts
                .iter()
                .fold(0u128, |acc, p| consteval::shl(acc, p.width as u128) | p.eval(values)),
            CKind::BitSel { base, index, map } => {
                let b = base.eval(values);
                match bit_position(index.eval(values), map) {
                    Some(pos) => (b >> pos) & 1,
                    None => 0,
                }
            }
            CKind::PartSel { base, lo, bits } => consteval::shr(base.eval(values), *lo as u128) & mask(*bits),
        };
        raw & mask(w)
    }

    /// Signal bits this expression reads, as `(signal, bit mask)` pairs.
    pub fn reads(&self, out: &mut Vec<(SigId, u128)>, widths: &[u32]) {
        match &self.kind {
            CKind::Const(_) => {}
            CKind::Sig(s) => out.push((*s, mask(widths[*s]))),
            CKind::Unary(_, a) => a.reads(out, widths),
            CKind::Binary(_, a, b) => {
                a.reads(out, widths);
                b.reads(out, widths);
            }
            CKind::Ternary(c, t, o) => {
                c.reads(out, widths);
                t.reads(out, widths);
                o.reads(out, widths);
            }
            CKind::Concat(parts) => parts.iter().for_each(|p| p.reads(out, widths)),
            CKind::BitSel { base, index, map } => {
                index.reads(out, widths);
                match (&base.kind, &index.kind) {
                    (CKind::Sig(s), CKind::Const(i)) => {
                        if let Some(pos) = bit_position(*i, map) {
                            out.push((*s, 1u128 << pos));
                        }
                    }
                    _ => base.reads(out, widths),
                }
            }
            CKind::PartSel { base, lo, bits } => match &base.kind {
                CKind::Sig(s) => out.push((*s, mask(*bits) << lo)),
                _ => base.reads(out, widths),
            },
        }
    }
}

fn bit_position(index: u128, map: &IndexMap) -> Option<u32> {
    i64::try_from(index).ok().and_then(|i| map.position(i))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CTarget {
    Whole(SigId),
    Bit { sig: SigId, index: CExpr, map: IndexMap },
    Part { sig: SigId, lo: u32, bits: u32 },
}

/// An assignment destination; concatenation parts are MSB first.
#[derive(Debug, Clone, PartialEq)]
pub struct CLValue {
    pub parts: Vec<CTarget>,
    pub width: u32,
}

/// A resolved write of `bits` bits at position `lo` of `sig`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Write {
    pub sig: SigId,
    pub lo: u32,
    pub bits: u32,
    pub value: u128,
}

impl Write {
    pub fn apply(&self, values: &mut [u128]) {
        let m = consteval::shl(mask(self.bits), self.lo as u128);
        let v = consteval::shl(self.value & mask(self.bits), self.lo as u128);
        let slot = &mut values[self.sig];
        *slot = (*slot & !m) | v;
    }
}

impl CLValue {
    /// Splits `value` over the parts, LSB part first.
    pub fn writes(&self, value: u128, values: &[u128], widths: &[u32], out: &mut Vec<Write>) {
        let mut rest = value & mask(self.width);
        for part in self.parts.iter().rev() {
            let (sig, lo, bits) = match part {
                CTarget::Whole(s) => (*s, 0, widths[*s]),
                CTarget::Bit { sig, index, map } => match bit_position(index.eval(values), map) {
                    Some(pos) => (*sig, pos, 1),
                    None => {
                        rest = consteval::shr(rest, 1);
                        continue;
                    }
                },
                CTarget::Part { sig, lo, bits } => (*sig, *lo, *bits),
            };
            out.push(Write {
                sig,
                lo,
                bits,
                value: rest & mask(bits),
            });
            rest = consteval::shr(rest, bits as u128);
        }
    }

    pub fn write_masks(&self, out: &mut Vec<(SigId, u128)>, widths: &[u32]) {
        for part in &self.parts {
            match part {
                CTarget::Whole(s) => out.push((*s, mask(widths[*s]))),
                CTarget::Bit { sig, index, map } => match &index.kind {
                    CKind::Const(i) => {
                        if let Some(pos) = bit_position(*i, map) {
                            out.push((*sig, 1u128 << pos));
                        }
                    }
                    _ => out.push((*sig, mask(widths[*sig]))),
                },
                CTarget::Part { sig, lo, bits } => out.push((*sig, mask(*bits) << lo)),
            }
        }
    }

    pub fn index_reads(&self, out: &mut Vec<(SigId, u128)>, widths: &[u32]) {
        for part in &self.parts {
            if let CTarget::Bit { index, .. } = part {
                index.reads(out, widths);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CStmt {
    Assign {
        target: CLValue,
        value: CExpr,
        nonblocking: bool,
    },
    If {
        cond: CExpr,
        then: Box<CStmt>,
        otherwise: Option<Box<CStmt>>,
    },
    Case {
        subject: CExpr,
        arms: Vec<(Vec<CExpr>, CStmt)>,
        default: Option<Box<CStmt>>,
    },
    Block(Vec<CStmt>),
    Null,
}

impl CStmt {
    /// Executes the statement: blocking writes land in `values` at once,
    /// non-blocking writes are queued on `nba`.
    pub fn exec(&self, values: &mut [u128], widths: &[u32], nba: &mut Vec<Write>) {
        match self {
            CStmt::Assign {
                target,
                value,
                nonblocking,
            } => {
                let v = value.eval(values);
                if *nonblocking {
                    target.writes(v, values, widths, nba);
                } else {
                    let mut ws = Vec::with_capacity(target.parts.len());
                    target.writes(v, values, widths, &mut ws);
                    ws.iter().for_each(|w| w.apply(values));
                }
            }
            CStmt::If { cond, then, otherwise } => {
                if cond.eval(values) != 0 {
                    then.exec(values, widths, nba);
                } else if let Some(o) = otherwise {
                    o.exec(values, widths, nba);
                }
            }
            CStmt::Case { subject, arms, default } => {
                let s = subject.eval(values);
                for (labels, body) in arms {
                    if labels.iter().any(|l| l.eval(values) == s) {
                        body.exec(values, widths, nba);
                        return;
                    }
                }
                if let Some(d) = default {
                    d.exec(values, widths, nba);
                }
            }
            CStmt::Block(body) => body.iter().for_each(|s| s.exec(values, widths, nba)),
            CStmt::Null => {}
        }
    }

    pub fn reads(&self, out: &mut Vec<(SigId, u128)>, widths: &[u32]) {
        match self {
            CStmt::Assign { target, value, .. } => {
                value.reads(out, widths);
                target.index_reads(out, widths);
            }
            CStmt::If { cond, then, otherwise } => {
                cond.reads(out, widths);
                then.reads(out, widths);
                if let Some(o) = otherwise {
                    o.reads(out, widths);
                }
            }
            CStmt::Case { subject, arms, default } => {
                subject.reads(out, widths);
                for (labels, body) in arms {
                    labels.iter().for_each(|l| l.reads(out, widths));
                    body.reads(out, widths);
                }
                if let Some(d) = default {
                    d.reads(out, widths);
                }
            }
            CStmt::Block(body) => body.iter().for_each(|s| s.reads(out, widths)),
            CStmt::Null => {}
        }
    }

    pub fn writes(&self, out: &mut Vec<(SigId, u128)>, widths: &[u32]) {
        match self {
            CStmt::Assign { target, .. } => target.write_masks(out, widths),
            CStmt::If { then, otherwise, .. } => {
                then.writes(out, widths);
                if let Some(o) = otherwise {
                    o.writes(out, widths);
                }
            }
            CStmt::Case { arms, default, .. } => {
                arms.iter().for_each(|(_, b)| b.writes(out, widths));
                if let Some(d) = default {
                    d.writes(out, widths);
                }
            }
            CStmt::Block(body) => body.iter().for_each(|s| s.writes(out, widths)),
            CStmt::Null => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascending_and_descending_ranges() {
        let down = IndexMap { msb: 7, lsb: 0 };
        assert_eq!(down.position(7), Some(7));
        assert_eq!(down.position(8), None);
        let up = IndexMap { msb: 0, lsb: 7 };
        assert_eq!(up.position(0), Some(7));
        assert_eq!(up.position(7), Some(0));
        let offset = IndexMap { msb: 11, lsb: 4 };
        assert_eq!(offset.position(4), Some(0));
        assert_eq!(offset.width(), 8);
    }

    #[test]
    fn concat_target_splits_lsb_first() {
        let widths = [4, 4];
        let lv = CLValue {
            parts: vec![CTarget::Whole(0), CTarget::Whole(1)],
            width: 8,
        };
        let mut values = vec![0u128; 2];
        let mut ws = Vec::new();
        lv.writes(0xA5, &values, &widths, &mut ws);
        ws.iter().for_each(|w| w.apply(&mut values));
        assert_eq!(values, vec![0xA, 0x5]);
    }

    #[test]
    fn bitwise_not_applies_at_context_width() {
        let sig = CExpr {
            kind: CKind::Sig(0),
            width: 8,
        };
        let e = CExpr {
            kind: CKind::Unary(UnaryOp::BitNot, Box::new(sig)),
            width: 8,
        };
        assert_eq!(e.eval(&[0x0F]), 0xF0);
    }
}
