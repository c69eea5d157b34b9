//! OpenQASM 2 subset frontend.
//!
//! Only two-qubit `cx`/`cz` gates are retained. Single-qubit gates (with any
//! parameters), `barrier`, `measure` and `reset` are parsed and dropped, since
//! they leave no trace on the routing grid. Multiple `qreg`s are flattened
//! into one index space in declaration order.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dag::Dag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Cx,
    Cz,
}

impl GateKind {
    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
        }
    }
}

/// A two-qubit gate. For `cx`, `qubit_a` is the control and `qubit_b` the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub qubit_a: usize,
    pub qubit_b: usize,
    /// Ordinal of the statement in the source file.
    pub source_pos: usize,
}

impl GateOp {
    pub fn touches(&self, q: usize) -> bool {
        self.qubit_a == q || self.qubit_b == q
    }

    pub fn shares_qubit(&self, other: &GateOp) -> bool {
        self.touches(other.qubit_a) || self.touches(other.qubit_b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalCircuit {
    pub n_qubits: usize,
    pub gates: Vec<GateOp>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("gate {index} acts twice on qubit {qubit}")]
    RepeatedQubit { index: usize, qubit: usize },
    #[error("gate {index} uses qubit {qubit} but the circuit has {n_qubits} qubits")]
    QubitOutOfRange {
        index: usize,
        qubit: usize,
        n_qubits: usize,
    },
}

impl LogicalCircuit {
    /// Builds a circuit from `(kind, a, b)` triples; `source_pos` is the list position.
    pub fn from_pairs(
        n_qubits: usize,
        pairs: impl IntoIterator<Item = (GateKind, usize, usize)>,
    ) -> Result<Self, CircuitError> {
        let gates = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (kind, a, b))| GateOp {
                kind,
                qubit_a: a,
                qubit_b: b,
                source_pos: i,
            })
            .collect();
        let circuit = Self { n_qubits, gates };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        for (index, g) in self.gates.iter().enumerate() {
            for qubit in [g.qubit_a, g.qubit_b] {
                if qubit >= self.n_qubits {
                    return Err(CircuitError::QubitOutOfRange {
                        index,
                        qubit,
                        n_qubits: self.n_qubits,
                    });
                }
            }
            if g.qubit_a == g.qubit_b {
                return Err(CircuitError::RepeatedQubit {
                    index,
                    qubit: g.qubit_a,
                });
            }
        }
        Ok(())
    }

    /// Serializes to OpenQASM 2 with a single register named `reg`.
    pub fn to_qasm_named(&self, reg: &str) -> String {
        let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        let _ = writeln!(out, "qreg {reg}[{}];", self.n_qubits);
        for g in &self.gates {
            let _ = writeln!(
                out,
                "{} {reg}[{}],{reg}[{}];",
                g.kind.mnemonic(),
                g.qubit_a,
                g.qubit_b
            );
        }
        out
    }

    pub fn to_qasm(&self) -> String {
        self.to_qasm_named("q")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct QasmError {
    pub line: usize,
    pub col: usize,
    pub kind: QasmErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QasmErrorKind {
    Syntax(String),
    Unsupported(String),
    IndexOutOfRange {
        register: String,
        index: usize,
        size: usize,
    },
    DuplicateRegister(String),
    UnknownRegister(String),
    RepeatedQubit(String),
    NoQuantumRegister,
}

impl fmt::Display for QasmErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QasmErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            QasmErrorKind::Unsupported(what) => write!(f, "unsupported statement: {what}"),
            QasmErrorKind::IndexOutOfRange {
                register,
                index,
                size,
            } => {
                write!(
                    f,
                    "qubit index {index} out of range for register `{register}` of size {size}"
                )
            }
            QasmErrorKind::DuplicateRegister(name) => write!(f, "duplicate register `{name}`"),
            QasmErrorKind::UnknownRegister(name) => write!(f, "unknown register `{name}`"),
            QasmErrorKind::RepeatedQubit(what) => write!(f, "gate acts twice on {what}"),
            QasmErrorKind::NoQuantumRegister => write!(f, "program declares no qreg"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Real,
    Str,
    Punct(char),
    Arrow,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Real => f.write_str("real literal"),
            Tok::Str => f.write_str("string literal"),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Arrow => f.write_str("`->`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, QasmError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            advance(1, &mut i, &mut col);
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            let word: String = chars[start..i].iter().collect();
            out.push(Spanned {
                tok: Tok::Ident(word),
                line: start_line,
                col: start_col,
            });
        } else if c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit))
        {
            let start = i;
            let mut real = false;
            while i < chars.len() {
                let d = chars[i];
                if d.is_ascii_digit() {
                    i += 1;
                } else if d == '.' || d == 'e' || d == 'E' {
                    real = true;
                    i += 1;
                    if (d == 'e' || d == 'E') && matches!(chars.get(i), Some('+') | Some('-')) {
                        i += 1;
                    }
                } else {
                    break;
                }
            }
            col += i - start;
            let literal: String = chars[start..i].iter().collect();
            let tok = if real {
                Tok::Real
            } else {
                Tok::Int(literal.parse().map_err(|_| QasmError {
                    line: start_line,
                    col: start_col,
                    kind: QasmErrorKind::Syntax(format!("integer literal `{literal}` too large")),
                })?)
            };
            out.push(Spanned {
                tok,
                line: start_line,
                col: start_col,
            });
        } else if c == '"' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if chars.get(i) != Some(&'"') {
                return Err(QasmError {
                    line: start_line,
                    col: start_col,
                    kind: QasmErrorKind::Syntax("unterminated string".into()),
                });
            }
            i += 1;
            col += i - start;
            out.push(Spanned {
                tok: Tok::Str,
                line: start_line,
                col: start_col,
            });
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            advance(2, &mut i, &mut col);
            out.push(Spanned {
                tok: Tok::Arrow,
                line: start_line,
                col: start_col,
            });
        } else if "[](){};,+-*/^=<>!".contains(c) {
            advance(1, &mut i, &mut col);
            out.push(Spanned {
                tok: Tok::Punct(c),
                line: start_line,
                col: start_col,
            });
        } else {
            return Err(QasmError {
                line: start_line,
                col: start_col,
                kind: QasmErrorKind::Syntax(format!("unexpected character `{c}`")),
            });
        }
    }
    Ok(out)
}

/// A quantum argument: either a whole register or one indexed qubit.
enum Arg {
    Register {
        name: String,
        line: usize,
        col: usize,
    },
    Qubit {
        global: usize,
        label: String,
    },
}

struct Register {
    base: usize,
    size: usize,
    quantum: bool,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    registers: HashMap<String, Register>,
    n_qubits: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn err<T>(&self, at: (usize, usize), kind: QasmErrorKind) -> Result<T, QasmError> {
        Err(QasmError {
            line: at.0,
            col: at.1,
            kind,
        })
    }

    fn next(&mut self) -> Result<Spanned, QasmError> {
        match self.toks.get(self.pos) {
            Some(s) => {
                self.pos += 1;
                Ok(s.clone())
            }
            None => self.err(
                self.end,
                QasmErrorKind::Syntax("unexpected end of input".into()),
            ),
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), QasmError> {
        let s = self.next()?;
        if s.tok == Tok::Punct(c) {
            Ok(())
        } else {
            self.err(
                (s.line, s.col),
                QasmErrorKind::Syntax(format!("expected `{c}`, found {}", s.tok)),
            )
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek().is_some_and(|s| s.tok == Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self) -> Result<(String, usize, usize), QasmError> {
        let s = self.next()?;
        match s.tok {
            Tok::Ident(name) => Ok((name, s.line, s.col)),
            other => self.err(
                (s.line, s.col),
                QasmErrorKind::Syntax(format!("expected identifier, found {other}")),
            ),
        }
    }

    fn expect_int(&mut self) -> Result<usize, QasmError> {
        let s = self.next()?;
        match s.tok {
            Tok::Int(n) => Ok(n),
            other => self.err(
                (s.line, s.col),
                QasmErrorKind::Syntax(format!("expected integer, found {other}")),
            ),
        }
    }

    /// Skips to just past the next `;`, for statements whose body is ignored.
    fn skip_statement(&mut self) -> Result<(), QasmError> {
        loop {
            if self.next()?.tok == Tok::Punct(';') {
                return Ok(());
            }
        }
    }

    /// Skips a balanced parenthesised parameter list; the opening `(` is already consumed.
    fn skip_params(&mut self) -> Result<(), QasmError> {
        let mut depth = 1;
        while depth > 0 {
            match self.next()?.tok {
                Tok::Punct('(') => depth += 1,
                Tok::Punct(')') => depth -= 1,
                Tok::Punct(';') => {
                    let at = self.toks[self.pos - 1].clone();
                    return self.err(
                        (at.line, at.col),
                        QasmErrorKind::Syntax("unbalanced `(`".into()),
                    );
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn declare(&mut self, quantum: bool) -> Result<(), QasmError> {
        let (name, line, col) = self.expect_ident()?;
        self.expect_punct('[')?;
        let size = self.expect_int()?;
        self.expect_punct(']')?;
        self.expect_punct(';')?;
        if self.registers.contains_key(&name) {
            return self.err((line, col), QasmErrorKind::DuplicateRegister(name));
        }
        let base = if quantum { self.n_qubits } else { 0 };
        if quantum {
            self.n_qubits += size;
        }
        self.registers.insert(
            name,
            Register {
                base,
                size,
                quantum,
            },
        );
        Ok(())
    }

    fn argument(&mut self) -> Result<Arg, QasmError> {
        let (name, line, col) = self.expect_ident()?;
        let Some(reg) = self.registers.get(&name) else {
            return self.err((line, col), QasmErrorKind::UnknownRegister(name));
        };
        let (base, size, quantum) = (reg.base, reg.size, reg.quantum);
        if !quantum {
            return self.err(
                (line, col),
                QasmErrorKind::Syntax(format!("`{name}` is a classical register")),
            );
        }
        if !self.eat_punct('[') {
            return Ok(Arg::Register { name, line, col });
        }
        let index = self.expect_int()?;
        self.expect_punct(']')?;
        if index >= size {
            return self.err(
                (line, col),
                QasmErrorKind::IndexOutOfRange {
                    register: name,
                    index,
                    size,
                },
            );
        }
        Ok(Arg::Qubit {
            global: base + index,
            label: format!("{name}[{index}]"),
        })
    }

    fn argument_list(&mut self) -> Result<Vec<Arg>, QasmError> {
        let mut args = vec![self.argument()?];
        while self.eat_punct(',') {
            args.push(self.argument()?);
        }
        self.expect_punct(';')?;
        Ok(args)
    }
}

/// Parses OpenQASM 2 source into a [`LogicalCircuit`].
pub fn parse_qasm(text: &str) -> Result<LogicalCircuit, QasmError> {
    let toks = lex(text)?;
    let end = toks.last().map(|s| (s.line, s.col + 1)).unwrap_or((1, 1));
    let mut p = Parser {
        toks,
        pos: 0,
        registers: HashMap::new(),
        n_qubits: 0,
        end,
    };
    let mut gates = Vec::new();
    let mut saw_qreg = false;
    let mut ordinal = 0;

    while let Some(first) = p.peek().cloned() {
        let at = (first.line, first.col);
        let Tok::Ident(word) = first.tok else {
            if first.tok == Tok::Punct(';') {
                p.pos += 1;
                continue;
            }
            return p.err(
                at,
                QasmErrorKind::Syntax(format!("expected a statement, found {}", first.tok)),
            );
        };
        p.pos += 1;
        let statement = ordinal;
        ordinal += 1;
        match word.as_str() {
            "OPENQASM" => {
                let s = p.next()?;
                if !matches!(s.tok, Tok::Real | Tok::Int(2)) {
                    return p.err(
                        (s.line, s.col),
                        QasmErrorKind::Syntax("expected version number".into()),
                    );
                }
                p.expect_punct(';')?;
            }
            "include" => {
                let s = p.next()?;
                if s.tok != Tok::Str {
                    return p.err(
                        (s.line, s.col),
                        QasmErrorKind::Syntax("expected file name string".into()),
                    );
                }
                p.expect_punct(';')?;
            }
            "qreg" => {
                p.declare(true)?;
                saw_qreg = true;
            }
            "creg" => p.declare(false)?,
            "if" => {
                return p.err(
                    at,
                    QasmErrorKind::Unsupported("classical control (`if`)".into()),
                )
            }
            "gate" | "opaque" => {
                return p.err(
                    at,
                    QasmErrorKind::Unsupported(format!("custom gate definition (`{word}`)")),
                )
            }
            "barrier" => {
                p.argument_list()?;
            }
            "reset" => {
                p.argument_list()?;
            }
            "measure" => {
                p.argument()?;
                let s = p.next()?;
                if s.tok != Tok::Arrow {
                    return p.err(
                        (s.line, s.col),
                        QasmErrorKind::Syntax(format!("expected `->`, found {}", s.tok)),
                    );
                }
                p.skip_statement()?;
            }
            _ => {
                if p.eat_punct('(') {
                    p.skip_params()?;
                }
                let args = p.argument_list()?;
                let kind = match word.as_str() {
                    "cx" | "CX" => Some(GateKind::Cx),
                    "cz" => Some(GateKind::Cz),
                    _ => None,
                };
                match (kind, args.as_slice()) {
                    (None, [_]) => {}
                    (None, _) => {
                        return p.err(
                            at,
                            QasmErrorKind::Unsupported(format!(
                                "{}-qubit gate `{word}`",
                                args.len()
                            )),
                        )
                    }
                    (
                        Some(kind),
                        [Arg::Qubit { global: a, .. }, Arg::Qubit { global: b, label }],
                    ) => {
                        if a == b {
                            return p.err(at, QasmErrorKind::RepeatedQubit(label.clone()));
                        }
                        gates.push(GateOp {
                            kind,
                            qubit_a: *a,
                            qubit_b: *b,
                            source_pos: statement,
                        });
                    }
                    (Some(_), [_, _]) => {
                        let (name, line, col) = args
                            .iter()
                            .find_map(|a| match a {
                                Arg::Register { name, line, col } => {
                                    Some((name.clone(), *line, *col))
                                }
                                Arg::Qubit { .. } => None,
                            })
                            .expect("one argument is a whole register");
                        return p.err(
                            (line, col),
                            QasmErrorKind::Unsupported(format!(
                                "register broadcast of `{word}` over `{name}`"
                            )),
                        );
                    }
                    (Some(_), _) => {
                        return p.err(
                            at,
                            QasmErrorKind::Syntax(format!(
                                "`{word}` takes 2 qubit arguments, got {}",
                                args.len()
                            )),
                        )
                    }
                }
            }
        }
    }

    if !saw_qreg {
        return p.err((1, 1), QasmErrorKind::NoQuantumRegister);
    }
    Ok(LogicalCircuit {
        n_qubits: p.n_qubits,
        gates,
    })
}

/// ASAP layering of a circuit's two-qubit gates. Layers hold gate indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredSchedule {
    pub layers: Vec<Vec<usize>>,
}

impl LayeredSchedule {
    pub fn layer_of(&self) -> Vec<usize> {
        let n = self.layers.iter().map(Vec::len).sum();
        let mut out = vec![0; n];
        for (l, layer) in self.layers.iter().enumerate() {
            for &g in layer {
                out[g] = l;
            }
        }
        out
    }
}

/// Places each gate one layer after the latest earlier gate sharing a qubit.
pub fn layered_schedule(circuit: &LogicalCircuit) -> LayeredSchedule {
    let mut qubit_depth = vec![0usize; circuit.n_qubits];
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for (id, g) in circuit.gates.iter().enumerate() {
        let layer = qubit_depth[g.qubit_a].max(qubit_depth[g.qubit_b]);
        if layer == layers.len() {
            layers.push(Vec::new());
        }
        layers[layer].push(id);
        qubit_depth[g.qubit_a] = layer + 1;
        qubit_depth[g.qubit_b] = layer + 1;
    }
    LayeredSchedule { layers }
}

pub type CircuitDag = Dag<GateOp>;

/// Per-qubit consecutive dependency graph: `g → h` iff they share a qubit and
/// `g` is the last gate on that qubit before `h`.
pub fn circuit_to_dag(circuit: &LogicalCircuit) -> CircuitDag {
    let mut dag = CircuitDag::new();
    let mut last: Vec<Option<usize>> = vec![None; circuit.n_qubits];
    for g in &circuit.gates {
        let id = dag.add_node(*g);
        for q in [g.qubit_a, g.qubit_b] {
            if let Some(prev) = last[q] {
                dag.add_edge(prev, id);
            }
            last[q] = Some(id);
        }
    }
    dag
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cx(a: usize, b: usize) -> (GateKind, usize, usize) {
        (GateKind::Cx, a, b)
    }

    #[test]
    fn single_gate() {
        let c = parse_qasm("qreg q[2]; cx q[0],q[1];").unwrap();
        assert_eq!(c.n_qubits, 2);
        assert_eq!(c.gates.len(), 1);
        assert_eq!(
            (c.gates[0].kind, c.gates[0].qubit_a, c.gates[0].qubit_b),
            (GateKind::Cx, 0, 1)
        );
    }

    #[test]
    fn registers_flatten_in_declaration_order() {
        let c = parse_qasm("qreg a[1]; qreg b[1]; cz a[0],b[0];").unwrap();
        assert_eq!(c.n_qubits, 2);
        assert_eq!(
            (c.gates[0].kind, c.gates[0].qubit_a, c.gates[0].qubit_b),
            (GateKind::Cz, 0, 1)
        );
    }

    #[test]
    fn single_qubit_gates_and_barriers_are_dropped() {
        let src = r#"OPENQASM 2.0;
include "qelib1.inc";
// comment
qreg q[3];
creg c[3];
h q[0];
rz(pi/4 + 0.5e-3) q[1];
u3(0.1, -pi/2, 2*pi) q[2];
barrier q;
cx q[0], q[1]; // trailing comment
t q;
cz q[2],q[1];
measure q[0] -> c[0];
reset q[2];
"#;
        let c = parse_qasm(src).unwrap();
        assert_eq!(c.n_qubits, 3);
        let pairs: Vec<_> = c
            .gates
            .iter()
            .map(|g| (g.kind, g.qubit_a, g.qubit_b))
            .collect();
        assert_eq!(pairs, vec![cx(0, 1), (GateKind::Cz, 2, 1)]);
        assert!(c.gates[0].source_pos < c.gates[1].source_pos);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_qasm("qreg q[2];\ncx q[0],q[2];").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(
            e.kind,
            QasmErrorKind::IndexOutOfRange {
                index: 2,
                size: 2,
                ..
            }
        ));

        let e = parse_qasm("qreg q[3];\n\n  ccx q[0],q[1],q[2];").unwrap_err();
        assert_eq!((e.line, e.col), (3, 3));
        assert!(matches!(e.kind, QasmErrorKind::Unsupported(_)));
        assert!(e.to_string().starts_with("line 3, column 3"));

        let e = parse_qasm("qreg q[2];\ncreg c[1];\nif (c==1) x q[0];").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, QasmErrorKind::Unsupported(_)));

        let e = parse_qasm("qreg q[2];\nqreg q[1];").unwrap_err();
        assert_eq!(
            (e.line, e.kind),
            (2, QasmErrorKind::DuplicateRegister("q".into()))
        );

        let e = parse_qasm("qreg q[2];\ncx q[0] q[1];").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(e.kind, QasmErrorKind::Syntax(_)));

        let e = parse_qasm("qreg q[2];\ncx q[1],q[1];").unwrap_err();
        assert!(matches!(e.kind, QasmErrorKind::RepeatedQubit(_)));

        let e = parse_qasm("qreg q[2];\ncx q,q[1];").unwrap_err();
        assert!(matches!(e.kind, QasmErrorKind::Unsupported(_)));

        assert_eq!(
            parse_qasm("// nothing").unwrap_err().kind,
            QasmErrorKind::NoQuantumRegister
        );
        assert!(matches!(
            parse_qasm("qreg q[1];\nh r[0];").unwrap_err().kind,
            QasmErrorKind::UnknownRegister(_)
        ));
    }

    #[test]
    fn layering_examples() {
        let c = LogicalCircuit::from_pairs(4, [cx(0, 1), cx(2, 3), cx(1, 2)]).unwrap();
        assert_eq!(layered_schedule(&c).layers, vec![vec![0, 1], vec![2]]);
        let c = LogicalCircuit::from_pairs(2, [cx(0, 1), cx(0, 1)]).unwrap();
        assert_eq!(layered_schedule(&c).layers, vec![vec![0], vec![1]]);
        let c = LogicalCircuit::from_pairs(2, []).unwrap();
        assert!(layered_schedule(&c).layers.is_empty());
    }

    #[test]
    fn dag_examples() {
        let edges = |pairs: Vec<(GateKind, usize, usize)>| {
            let c = LogicalCircuit::from_pairs(4, pairs).unwrap();
            let mut e = circuit_to_dag(&c).edges().to_vec();
            e.sort();
            e
        };
        assert_eq!(
            edges(vec![cx(0, 1), cx(1, 2), cx(0, 3)]),
            vec![(0, 1), (0, 2)]
        );
        assert!(edges(vec![cx(0, 1), cx(2, 3)]).is_empty());
        assert_eq!(
            edges(vec![cx(0, 1), cx(1, 2), cx(0, 1)]),
            vec![(0, 1), (0, 2), (1, 2)]
        );
    }

    fn arb_circuit() -> impl Strategy<Value = LogicalCircuit> {
        (2usize..8).prop_flat_map(|n| {
            let gate = (0..n, 1..n, any::<bool>()).prop_map(move |(a, off, z)| {
                let b = (a + off) % n;
                (if z { GateKind::Cz } else { GateKind::Cx }, a, b)
            });
            proptest::collection::vec(gate, 0..40)
                .prop_map(move |pairs| LogicalCircuit::from_pairs(n, pairs).unwrap())
        })
    }

    proptest! {
        #[test]
        fn layer_count_equals_longest_dag_path(c in arb_circuit()) {
            let layers = layered_schedule(&c);
            let dag = circuit_to_dag(&c);
            prop_assert_eq!(layers.layers.len(), dag.longest_path_len());
            let layer_of = layers.layer_of();
            for layer in &layers.layers {
                for (i, &g) in layer.iter().enumerate() {
                    for &h in &layer[i + 1..] {
                        prop_assert!(!c.gates[g].shares_qubit(&c.gates[h]));
                    }
                }
            }
            for (a, b) in dag.edges() {
                prop_assert!(layer_of[*a] < layer_of[*b]);
            }
        }

        #[test]
        fn dag_closure_matches_shared_qubit_order(c in arb_circuit()) {
            let dag = circuit_to_dag(&c);
            prop_assert!(dag.is_acyclic());
            let closure = dag.transitive_closure();
            // closure of the full "shares a qubit and precedes" relation
            let n = c.gates.len();
            let mut full = vec![vec![false; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    full[i][j] = c.gates[i].shares_qubit(&c.gates[j]);
                }
            }
            for k in 0..n {
                for i in 0..n {
                    if full[i][k] {
                        for j in 0..n {
                            if full[k][j] {
                                full[i][j] = true;
                            }
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(closure[i].contains(&j), full[i][j]);
                }
            }
        }

        #[test]
        fn serialize_parse_fixpoint(c in arb_circuit()) {
            let text = c.to_qasm();
            let parsed = parse_qasm(&text).unwrap();
            prop_assert_eq!(parsed.n_qubits, c.n_qubits);
            let strip = |c: &LogicalCircuit| c.gates.iter().map(|g| (g.kind, g.qubit_a, g.qubit_b)).collect::<Vec<_>>();
            prop_assert_eq!(strip(&parsed), strip(&c));
            prop_assert_eq!(parse_qasm(&parsed.to_qasm()).unwrap(), parsed);
        }
    }
}
