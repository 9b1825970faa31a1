//! Line-oriented text format.
//!
//! ```text
//! # comment
//! RZ 0 1
//! MZZ(0.001) 0 1
//! DETECTOR(2, 4) rec[-1] rec[-14]
//! REPEAT 3 {
//!     TICK
//! }
//! ```
//!
//! Serialization is canonical: LF endings, four-space indentation inside
//! blocks, no trailing whitespace, and floats in shortest round-trip form.

use super::{Circuit, Gate, Instruction, Op, Target};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn serialize_text(circuit: &Circuit) -> String {
    let mut out = String::new();
    write_block(circuit, 0, &mut out);
    out
}

fn write_block(circuit: &Circuit, depth: usize, out: &mut String) {
    let indent = "    ".repeat(depth);
    for op in &circuit.ops {
        match op {
            Op::Instr(ins) => {
                out.push_str(&indent);
                write_instruction(ins, out);
                out.push('\n');
            }
            Op::Repeat { count, body } => {
                let _ = writeln!(out, "{indent}REPEAT {count} {{");
                write_block(body, depth + 1, out);
                let _ = writeln!(out, "{indent}}}");
            }
        }
    }
}

fn write_instruction(ins: &Instruction, out: &mut String) {
    out.push_str(ins.gate.name());
    if !ins.args.is_empty() {
        out.push('(');
        for (i, a) in ins.args.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{a}");
        }
        out.push(')');
    }
    for t in &ins.targets {
        match t {
            Target::Qubit(q) => {
                let _ = write!(out, " {q}");
            }
            Target::Rec(k) => {
                let _ = write!(out, " rec[-{k}]");
            }
        }
    }
}

pub fn parse_text(text: &str) -> Result<Circuit, ParseError> {
    // Stack of open blocks: (repeat count, circuit being filled).
    let mut stack: Vec<(u64, Circuit, usize)> = vec![(1, Circuit::new(), 0)];
    for (line_idx, raw) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let trimmed = content.trim_end();
        let start = trimmed.len() - trimmed.trim_start().len();
        let line = trimmed.trim_start();
        if line.is_empty() {
            continue;
        }
        let err = |column: usize, message: String| ParseError {
            line: line_no,
            column: column + 1,
            message,
        };
        if line == "}" {
            if stack.len() == 1 {
                return Err(err(start, "unmatched '}'".into()));
            }
            let (count, body, _) = stack.pop().unwrap();
            stack.last_mut().unwrap().1.push_repeat(count, body);
            continue;
        }
        if let Some(rest) = line.strip_prefix("REPEAT") {
            let rest = rest.trim();
            let Some(num) = rest.strip_suffix('{') else {
                return Err(err(start, "expected 'REPEAT n {'".into()));
            };
            let count: u64 = num
                .trim()
                .parse()
                .map_err(|_| err(start + 7, format!("bad repeat count '{}'", num.trim())))?;
            stack.push((count, Circuit::new(), line_no));
            continue;
        }
        let ins = parse_instruction(line).map_err(|(col, msg)| err(start + col, msg))?;
        stack.last_mut().unwrap().1.push(ins);
    }
    if stack.len() > 1 {
        let (_, _, opened) = stack.last().unwrap();
        return Err(ParseError {
            line: *opened,
            column: 1,
            message: "unterminated REPEAT block".into(),
        });
    }
    Ok(stack.pop().unwrap().1)
}

/// Parses one instruction line; errors carry a 0-based column.
fn parse_instruction(line: &str) -> Result<Instruction, (usize, String)> {
    let name_end = line
        .find(|c: char| c == '(' || c.is_whitespace())
        .unwrap_or(line.len());
    let name = &line[..name_end];
    let gate = Gate::from_name(name).ok_or((0, format!("unknown instruction '{name}'")))?;
    let mut pos = name_end;
    let mut args = Vec::new();
    if line[pos..].starts_with('(') {
        let close = line[pos..]
            .find(')')
            .ok_or((pos, "missing ')'".to_string()))?
            + pos;
        let inner = &line[pos + 1..close];
        if !inner.trim().is_empty() {
            let mut col = pos + 1;
            for piece in inner.split(',') {
                let v: f64 = piece
                    .trim()
                    .parse()
                    .map_err(|_| (col, format!("bad number '{}'", piece.trim())))?;
                args.push(v);
                col += piece.len() + 1;
            }
        }
        pos = close + 1;
    }
    let mut targets = Vec::new();
    let rest = &line[pos..];
    let mut offset = pos;
    for tok in rest.split_whitespace() {
        let col = offset + rest[offset - pos..].find(tok).unwrap_or(0);
        offset = col + tok.len();
        if let Some(inner) = tok.strip_prefix("rec[-").and_then(|t| t.strip_suffix(']')) {
            let k: u32 = inner
                .parse()
                .map_err(|_| (col, format!("bad record reference '{tok}'")))?;
            if k == 0 {
                return Err((col, "record look-back must be at least 1".into()));
            }
            targets.push(Target::Rec(k));
        } else {
            let q: u32 = tok
                .parse()
                .map_err(|_| (col, format!("bad target '{tok}'")))?;
            targets.push(Target::Qubit(q));
        }
    }
    Ok(Instruction { gate, targets, args })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_pair_measurement() {
        let c = parse_text("MZZ 0 1\n").unwrap();
        assert_eq!(c.ops, vec![Op::Instr(Instruction::new(Gate::MZZ, &[0, 1]))]);
    }

    #[test]
    fn parses_deep_detector() {
        let c = parse_text("DETECTOR rec[-1] rec[-14]").unwrap();
        let Op::Instr(ins) = &c.ops[0] else { panic!() };
        assert_eq!(ins.gate, Gate::Detector);
        assert_eq!(ins.targets, vec![Target::Rec(1), Target::Rec(14)]);
    }

    #[test]
    fn canonical_output() {
        let text = "RZ 0 1\nMZZ(0.001) 0 1 # hi\n\nREPEAT 2 {\n  DEP1(0.0001) 0\n    TICK\n}\nDETECTOR(1, 2.5) rec[-1]\n";
        let c = parse_text(text).unwrap();
        assert_eq!(
            serialize_text(&c),
            "RZ 0 1\nMZZ(0.001) 0 1\nREPEAT 2 {\n    DEP1(0.0001) 0\n    TICK\n}\nDETECTOR(1, 2.5) rec[-1]\n"
        );
    }

    #[test]
    fn error_positions() {
        let e = parse_text("RZ 0\nMZZ 0 x\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 7));
        let e = parse_text("FOO 1").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        let e = parse_text("REPEAT 2 {\nTICK\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_text("}\n").unwrap_err();
        assert!(e.message.contains("unmatched"));
        let e = parse_text("DETECTOR rec[-0]").unwrap_err();
        assert_eq!(e.column, 10);
    }

    fn arb_instruction() -> impl Strategy<Value = Instruction> {
        (
            prop::sample::select(Gate::ALL.to_vec()),
            prop::collection::vec(0u32..50, 0..6),
            prop::collection::vec(0u32..1_000_000, 0..4).prop_map(|v| {
                v.into_iter().map(|x| x as f64 / 1_000_000.0).collect::<Vec<_>>()
            }),
        )
            .prop_map(|(gate, ts, args)| {
                let targets = if matches!(gate, Gate::Detector | Gate::ObservableInclude) {
                    ts.into_iter().map(|k| Target::Rec(k + 1)).collect()
                } else {
                    ts.into_iter().map(Target::Qubit).collect()
                };
                Instruction { gate, targets, args }
            })
    }

    fn arb_circuit() -> impl Strategy<Value = Circuit> {
        let leaf = prop::collection::vec(arb_instruction(), 0..8)
            .prop_map(|v| Circuit { ops: v.into_iter().map(Op::Instr).collect() });
        leaf.prop_recursive(3, 40, 4, |inner| {
            prop::collection::vec(
                prop_oneof![
                    arb_instruction().prop_map(Op::Instr),
                    (1u64..5, inner).prop_map(|(count, body)| Op::Repeat { count, body }),
                ],
                0..6,
            )
            .prop_map(|ops| Circuit { ops })
        })
    }

    proptest! {
        #[test]
        fn round_trip(c in arb_circuit()) {
            let text = serialize_text(&c);
            prop_assert!(!text.lines().any(|l| l.ends_with(' ')));
            prop_assert_eq!(parse_text(&text).unwrap(), c);
        }
    }
}
