//! Majority-gate netlists and a bit-parallel evaluator.
//!
//! A netlist is a list of gates in topological order. Each signal is either
//! a constant row, an operand bit, or the output of an earlier gate.
//! Evaluation packs 64 independent input cases into one `u64` per signal.

use std::collections::{BTreeMap, HashMap};

use pudsim_core::ops::MAJ_WIDTHS;
use serde::{Deserialize, Serialize};

use crate::error::{CaseError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signal {
    Const(bool),
    Input { operand: u8, bit: u8 },
    Gate(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    /// In-DRAM majority over the listed rows.
    Maj(Vec<Signal>),
    /// Host-written complement.
    Not(Signal),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub operands: usize,
    pub width: usize,
    pub gates: Vec<Gate>,
    pub outputs: Vec<Signal>,
}

impl Circuit {
    /// Evaluate 64 cases at once. `inputs[operand][bit]` holds one lane per case.
    pub fn eval_lanes(&self, inputs: &[Vec<u64>]) -> Vec<u64> {
        let mut values = Vec::with_capacity(self.gates.len());
        let read = |s: &Signal, values: &[u64]| match *s {
            Signal::Const(b) => {
                if b {
                    u64::MAX
                } else {
                    0
                }
            }
            Signal::Input { operand, bit } => inputs[operand as usize][bit as usize],
            Signal::Gate(i) => values[i as usize],
        };
        for gate in &self.gates {
            let v = match gate {
                Gate::Not(s) => !read(s, &values),
                Gate::Maj(ins) => {
                    let lanes: Vec<u64> = ins.iter().map(|s| read(s, &values)).collect();
                    majority_lanes(&lanes)
                }
            };
            values.push(v);
        }
        self.outputs.iter().map(|s| read(s, &values)).collect()
    }

    /// Evaluate one case; operand words are little-endian bit vectors and
    /// output bit `i` is the `i`-th output signal.
    pub fn eval(&self, operands: &[u64]) -> u64 {
        let inputs: Vec<Vec<u64>> = operands
            .iter()
            .map(|&w| (0..self.width).map(|b| if w >> b & 1 == 1 { 1 } else { 0 }).collect())
            .collect();
        self.eval_lanes(&inputs)
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &lane)| acc | (lane & 1) << i)
    }

    /// Number of MAJ gates per width.
    pub fn maj_counts(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for g in &self.gates {
            if let Gate::Maj(ins) = g {
                *out.entry(ins.len()).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn not_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Not(_))).count()
    }
}

/// Lane-wise strict majority.
pub fn majority_lanes(lanes: &[u64]) -> u64 {
    // Bit-sliced counter, four bits is enough for nine inputs.
    let mut count = [0u64; 4];
    for &l in lanes {
        let mut carry = l;
        for c in count.iter_mut() {
            let next = *c & carry;
            *c ^= carry;
            carry = next;
        }
    }
    let threshold = lanes.len() as u64 / 2 + 1;
    // count >= threshold, evaluated bit-serially from the top.
    let mut gt = 0u64;
    let mut eq = u64::MAX;
    for bit in (0..4).rev() {
        let t = if threshold >> bit & 1 == 1 { u64::MAX } else { 0 };
        gt |= eq & count[bit] & !t;
        eq &= !(count[bit] ^ t);
    }
    gt | eq
}

/// Netlist builder restricted to a set of available MAJ widths.
///
/// A request for a narrower majority than is available is padded with
/// complementary constant pairs, which never changes the result.
#[derive(Debug, Clone)]
pub struct Builder {
    widths: Vec<usize>,
    circuit: Circuit,
    nots: HashMap<Signal, Signal>,
}

impl Builder {
    pub fn new(widths: &[usize], operands: usize, width: usize) -> Result<Self> {
        if widths.is_empty() {
            return Err(CaseError::EmptyWidthSet);
        }
        if let Some(&bad) = widths.iter().find(|w| !MAJ_WIDTHS.contains(w)) {
            return Err(CaseError::InvalidWidth(bad));
        }
        let mut widths = widths.to_vec();
        widths.sort_unstable();
        widths.dedup();
        Ok(Self {
            widths,
            circuit: Circuit {
                operands,
                width,
                gates: Vec::new(),
                outputs: Vec::new(),
            },
            nots: HashMap::new(),
        })
    }

    pub fn widest(&self) -> usize {
        *self.widths.last().expect("non-empty by construction")
    }

    pub fn has(&self, x: usize) -> bool {
        self.widest() >= x
    }

    pub fn input(&self, operand: u8, bit: usize) -> Signal {
        Signal::Input {
            operand,
            bit: bit as u8,
        }
    }

    fn push(&mut self, g: Gate) -> Signal {
        self.circuit.gates.push(g);
        Signal::Gate(self.circuit.gates.len() as u32 - 1)
    }

    /// Majority of `ins`. Constant-determined results fold away.
    pub fn maj(&mut self, ins: &[Signal]) -> Signal {
        assert!(ins.len() % 2 == 1, "majority needs an odd operand count");
        let ones = ins.iter().filter(|s| **s == Signal::Const(true)).count();
        let zeros = ins.iter().filter(|s| **s == Signal::Const(false)).count();
        let half = ins.len() / 2;
        if ones > half {
            return Signal::Const(true);
        }
        if zeros > half {
            return Signal::Const(false);
        }
        let x = self
            .widths
            .iter()
            .copied()
            .find(|&w| w >= ins.len())
            .unwrap_or_else(|| panic!("MAJ{} requested but only {:?} available", ins.len(), self.widths));
        let mut row = ins.to_vec();
        while row.len() < x {
            row.push(Signal::Const(false));
            row.push(Signal::Const(true));
        }
        self.push(Gate::Maj(row))
    }

    pub fn not(&mut self, s: Signal) -> Signal {
        if let Signal::Const(b) = s {
            return Signal::Const(!b);
        }
        if let Signal::Gate(i) = s {
            if let Gate::Not(inner) = self.circuit.gates[i as usize] {
                return inner;
            }
        }
        if let Some(&done) = self.nots.get(&s) {
            return done;
        }
        let out = self.push(Gate::Not(s));
        self.nots.insert(s, out);
        out
    }

    pub fn and(&mut self, a: Signal, b: Signal) -> Signal {
        self.maj(&[a, b, Signal::Const(false)])
    }

    pub fn or(&mut self, a: Signal, b: Signal) -> Signal {
        self.maj(&[a, b, Signal::Const(true)])
    }

    pub fn finish(mut self, outputs: Vec<Signal>) -> Circuit {
        self.circuit.outputs = outputs;
        self.circuit
    }
}
