//! Lowering of logic and arithmetic kernels to majority netlists.
//!
//! Forms are picked by gate count; when two forms need the same number of
//! gates, the one using the widest available majority wins.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{Builder, Circuit, Signal};
use crate::error::{CaseError, Result};

/// Widest operand supported by the netlist encoding.
pub const MAX_OPERAND_WIDTH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Mul,
    Div,
}

impl Kernel {
    pub const ALL: [Kernel; 7] = [
        Kernel::And,
        Kernel::Or,
        Kernel::Xor,
        Kernel::Add,
        Kernel::Sub,
        Kernel::Mul,
        Kernel::Div,
    ];

    /// Reference result. DIV packs the quotient in the low `width` bits and
    /// the remainder above it; callers must not pass a zero divisor.
    pub fn reference(self, a: u64, b: u64, width: usize) -> u64 {
        let mask = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
        let (a, b) = (a & mask, b & mask);
        match self {
            Kernel::And => a & b,
            Kernel::Or => a | b,
            Kernel::Xor => a ^ b,
            Kernel::Add => a.wrapping_add(b) & mask,
            Kernel::Sub => a.wrapping_sub(b) & mask,
            Kernel::Mul => a.wrapping_mul(b) & mask,
            Kernel::Div => (a / b) | (a % b) << width,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::And => "and",
            Kernel::Or => "or",
            Kernel::Xor => "xor",
            Kernel::Add => "add",
            Kernel::Sub => "sub",
            Kernel::Mul => "mul",
            Kernel::Div => "div",
        })
    }
}

impl FromStr for Kernel {
    type Err = CaseError;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| CaseError::UnknownKernel(s.to_string()))
    }
}

/// Build the netlist of `kernel` over two `width`-bit operands using only
/// the MAJ widths in `widths`.
pub fn lower_circuit(kernel: Kernel, width: usize, widths: &[usize]) -> Result<Circuit> {
    if width == 0 || width > MAX_OPERAND_WIDTH {
        return Err(CaseError::InvalidOperandWidth {
            got: width,
            max: MAX_OPERAND_WIDTH,
        });
    }
    let mut b = Builder::new(widths, 2, width)?;
    let a: Vec<Signal> = (0..width).map(|i| b.input(0, i)).collect();
    let d: Vec<Signal> = (0..width).map(|i| b.input(1, i)).collect();
    let outputs = match kernel {
        Kernel::And => a.iter().zip(&d).map(|(&x, &y)| b.and(x, y)).collect(),
        Kernel::Or => a.iter().zip(&d).map(|(&x, &y)| b.or(x, y)).collect(),
        Kernel::Xor => a.iter().zip(&d).map(|(&x, &y)| xor(&mut b, x, y)).collect(),
        Kernel::Add => ripple(&mut b, &a, &d, Signal::Const(false)).0,
        Kernel::Sub => {
            let nd: Vec<Signal> = d.iter().map(|&s| b.not(s)).collect();
            ripple(&mut b, &a, &nd, Signal::Const(true)).0
        }
        Kernel::Mul => multiply(&mut b, &a, &d),
        Kernel::Div => divide(&mut b, &a, &d),
    };
    Ok(b.finish(outputs))
}

fn xor(b: &mut Builder, x: Signal, y: Signal) -> Signal {
    let and = b.and(x, y);
    let nand = b.not(and);
    if b.has(5) {
        b.maj(&[x, y, nand, nand, Signal::Const(false)])
    } else {
        let or = b.or(x, y);
        b.and(or, nand)
    }
}

/// One full adder: (sum, carry out).
pub fn full_add(b: &mut Builder, x: Signal, y: Signal, c: Signal) -> (Signal, Signal) {
    let co = b.maj(&[x, y, c]);
    let nco = b.not(co);
    let sum = if b.has(5) {
        b.maj(&[x, y, c, nco, nco])
    } else {
        let nc = b.not(c);
        let inner = b.maj(&[x, y, nc]);
        b.maj(&[nco, c, inner])
    };
    (sum, co)
}

fn ripple(b: &mut Builder, x: &[Signal], y: &[Signal], carry_in: Signal) -> (Vec<Signal>, Signal) {
    let mut c = carry_in;
    let sums = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let (s, co) = full_add(b, xi, yi, c);
            c = co;
            s
        })
        .collect();
    (sums, c)
}

/// Shift-add, keeping the low `width` product bits.
fn multiply(b: &mut Builder, a: &[Signal], d: &[Signal]) -> Vec<Signal> {
    let w = a.len();
    let mut acc: Vec<Signal> = a.iter().map(|&ai| b.and(ai, d[0])).collect();
    for j in 1..w {
        let mut c = Signal::Const(false);
        for i in j..w {
            let p = b.and(a[i - j], d[j]);
            let (s, co) = full_add(b, acc[i], p, c);
            acc[i] = s;
            c = co;
        }
    }
    acc
}

/// Restoring division. Outputs the quotient then the remainder.
fn divide(b: &mut Builder, a: &[Signal], d: &[Signal]) -> Vec<Signal> {
    let w = a.len();
    // The subtrahend is extended by one bit, so its complement ends in 1.
    let mut nd: Vec<Signal> = d.iter().map(|&s| b.not(s)).collect();
    nd.push(Signal::Const(true));
    let mut rem = vec![Signal::Const(false); w];
    let mut quotient = vec![Signal::Const(false); w];
    for i in (0..w).rev() {
        let shifted: Vec<Signal> = std::iter::once(a[i]).chain(rem.iter().copied()).collect();
        let mut carries = Vec::with_capacity(w + 2);
        carries.push(Signal::Const(true));
        for j in 0..=w {
            let co = b.maj(&[shifted[j], nd[j], carries[j]]);
            carries.push(co);
        }
        let q = carries[w + 1];
        quotient[i] = q;
        rem = (0..w)
            .map(|j| restore(b, shifted[j], nd[j], carries[j], carries[j + 1], q))
            .collect();
    }
    quotient.into_iter().chain(rem).collect()
}

/// `q ? r + nd + c : r`, given the carry `co` of that sum.
fn restore(b: &mut Builder, r: Signal, nd: Signal, c: Signal, co: Signal, q: Signal) -> Signal {
    const F: Signal = Signal::Const(false);
    const T: Signal = Signal::Const(true);
    let nco = b.not(co);
    let nq = b.not(q);
    if b.has(9) {
        let g = b.maj(&[F, r, nq]);
        b.maj(&[T, r, nd, c, q, nco, nco, g, g])
    } else if b.has(7) {
        let g = b.maj(&[F, nd, c, q, nco]);
        b.maj(&[T, r, r, nq, nco, g, g])
    } else if b.has(5) {
        let diff = b.maj(&[r, nd, c, nco, nco]);
        let t = b.and(q, diff);
        b.maj(&[t, t, r, nq, T])
    } else {
        let nc = b.not(c);
        let inner = b.maj(&[r, nd, nc]);
        let diff = b.maj(&[nco, c, inner]);
        let keep = b.and(nq, r);
        let take = b.and(q, diff);
        b.or(keep, take)
    }
}
