//! OpenQASM 2.0 subset: one `qreg`, `u3` and `cx` only.
//!
//! Metric and global-phase comments are written into the header so that a
//! reparsed file can be checked against what the compiler claimed.

use std::fmt::Write as _;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::synth::{metrics, Circuit, Gate, Metrics};

const METRICS_TAG: &str = "// metrics:";
const PHASE_TAG: &str = "// global_phase:";

/// Parsed program plus whatever the header claimed.
#[derive(Clone, Debug, PartialEq)]
pub struct QasmProgram {
    pub circuit: Circuit,
    pub claimed: Option<Metrics>,
}

pub fn emit(c: &Circuit) -> String {
    let m = metrics(c);
    let mut s = String::new();
    s.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(
        s,
        "{METRICS_TAG} cnot_count={} u3_count={} depth={}",
        m.cnot_count, m.u3_count, m.depth
    );
    let _ = writeln!(s, "{PHASE_TAG} {:.16e}", c.phase());
    let _ = writeln!(s, "qreg q[{}];", c.num_qubits());
    for g in c.gates() {
        match *g {
            Gate::U3 {
                qubit,
                theta,
                phi,
                lambda,
            } => {
                let _ = writeln!(s, "u3({theta:.16e},{phi:.16e},{lambda:.16e}) q[{qubit}];");
            }
            Gate::Cnot { control, target } => {
                let _ = writeln!(s, "cx q[{control}],q[{target}];");
            }
        }
    }
    s
}

fn angle(text: &str, line: usize) -> Result<f64> {
    let t = text.trim();
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    // `pi`, `-pi`, `pi/4`, `3*pi/2` and friends from hand-written files.
    let (sign, body) = match t.strip_prefix('-') {
        Some(b) => (-1.0, b.trim()),
        None => (1.0, t),
    };
    let (num, den) = match body.split_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (body, None),
    };
    let num = match num.split_once('*') {
        Some((k, p)) if p.trim() == "pi" => k.trim().parse::<f64>().ok().map(|k| k * PI),
        _ if num == "pi" => Some(PI),
        _ => None,
    };
    let den = match den {
        Some(d) => d.parse::<f64>().ok(),
        None => Some(1.0),
    };
    match (num, den) {
        (Some(a), Some(b)) if b != 0.0 => Ok(sign * a / b),
        _ => Err(Error::parse(line, format!("bad angle {t:?}"))),
    }
}

fn qubit(text: &str, n: usize, line: usize) -> Result<usize> {
    let t = text.trim();
    let idx = t
        .strip_prefix("q[")
        .and_then(|r| r.strip_suffix(']'))
        .and_then(|i| i.trim().parse::<usize>().ok())
        .ok_or_else(|| Error::parse(line, format!("bad qubit operand {t:?}")))?;
    if idx >= n {
        return Err(Error::parse(line, format!("qubit {idx} outside register of size {n}")));
    }
    Ok(idx)
}

fn parse_metrics(rest: &str, line: usize) -> Result<Metrics> {
    let mut m = Metrics::default();
    for field in rest.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("bad metrics field {field:?}")))?;
        let v: usize = v.parse().map_err(|_| Error::parse(line, format!("bad count {v:?}")))?;
        match k {
            "cnot_count" => m.cnot_count = v,
            "u3_count" => m.u3_count = v,
            "depth" => m.depth = v,
            _ => return Err(Error::parse(line, format!("unknown metric {k:?}"))),
        }
    }
    Ok(m)
}

pub fn parse(text: &str) -> Result<QasmProgram> {
    let mut header = false;
    let mut claimed = None;
    let mut phase = 0.0;
    let mut circuit: Option<Circuit> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix(METRICS_TAG) {
            claimed = Some(parse_metrics(rest, line)?);
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix(PHASE_TAG) {
            phase = rest
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad global phase {:?}", rest.trim())))?;
            continue;
        }
        let code = trimmed.split("//").next().unwrap_or("").trim();
        for stmt in code.split(';') {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                continue;
            }
            if !header {
                if stmt != "OPENQASM 2.0" {
                    return Err(Error::parse(line, "expected `OPENQASM 2.0;` header"));
                }
                header = true;
                continue;
            }
            if stmt.starts_with("include") {
                continue;
            }
            if let Some(rest) = stmt.strip_prefix("qreg") {
                if circuit.is_some() {
                    return Err(Error::parse(line, "only one quantum register is supported"));
                }
                let n = rest
                    .trim()
                    .strip_prefix("q[")
                    .and_then(|r| r.strip_suffix(']'))
                    .and_then(|s| s.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(line, format!("bad register declaration {stmt:?}")))?;
                circuit = Some(Circuit::new(n));
                continue;
            }
            let c = circuit
                .as_mut()
                .ok_or_else(|| Error::parse(line, "gate before register declaration"))?;
            let n = c.num_qubits();
            let gate = if let Some(rest) = stmt.strip_prefix("u3") {
                let rest = rest.trim_start();
                let close = rest
                    .strip_prefix('(')
                    .and_then(|r| r.find(')').map(|j| (r, j)))
                    .ok_or_else(|| Error::parse(line, "u3 needs (θ,φ,λ)"))?;
                let (args, operand) = (&close.0[..close.1], &close.0[close.1 + 1..]);
                let a: Vec<f64> = args.split(',').map(|x| angle(x, line)).collect::<Result<_>>()?;
                if a.len() != 3 {
                    return Err(Error::parse(line, format!("u3 takes 3 angles, got {}", a.len())));
                }
                Gate::u3(qubit(operand, n, line)?, a[0], a[1], a[2])
            } else if let Some(rest) = stmt.strip_prefix("cx") {
                let ops: Vec<&str> = rest.split(',').collect();
                if ops.len() != 2 {
                    return Err(Error::parse(line, "cx takes two operands"));
                }
                let (a, b) = (qubit(ops[0], n, line)?, qubit(ops[1], n, line)?);
                if a == b {
                    return Err(Error::parse(line, "cx control equals target"));
                }
                Gate::cnot(a, b)
            } else {
                return Err(Error::parse(line, format!("unsupported statement {stmt:?}")));
            };
            c.push(gate).map_err(|e| Error::parse(line, e.to_string()))?;
        }
    }
    if !header {
        return Err(Error::parse(1, "missing `OPENQASM 2.0;` header"));
    }
    let mut circuit = circuit.ok_or_else(|| Error::parse(text.lines().count(), "no qreg declaration"))?;
    circuit.set_phase(phase);
    Ok(QasmProgram { circuit, claimed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frobenius_norm, DENSE_LIMIT};
    use crate::synth::circuit_to_matrix;

    fn sample() -> Circuit {
        let gates = vec![
            Gate::u3(0, 0.1, -2.3, 1e-17),
            Gate::cnot(0, 2),
            Gate::u3(2, PI, 0.0, -PI / 3.0),
            Gate::cnot(2, 1),
        ];
        Circuit::from_gates(3, gates, 0.75).unwrap()
    }

    #[test]
    fn emit_layout() {
        let s = emit(&sample());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "OPENQASM 2.0;");
        assert_eq!(lines[1], "include \"qelib1.inc\";");
        assert_eq!(lines[2], "// metrics: cnot_count=2 u3_count=2 depth=4");
        assert_eq!(lines[4], "qreg q[3];");
        assert_eq!(lines[6], "cx q[0],q[2];");
        assert!(lines[5].starts_with("u3(1.0000000000000001e-1,"), "{}", lines[5]);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let p = parse(&emit(&c)).unwrap();
        assert_eq!(p.circuit, c);
        assert_eq!(p.claimed, Some(metrics(&c)));
        let a = circuit_to_matrix(&c, DENSE_LIMIT).unwrap();
        let b = circuit_to_matrix(&p.circuit, DENSE_LIMIT).unwrap();
        assert!(frobenius_norm((&a - &b).as_ref()) < 1e-12);
    }

    #[test]
    fn hand_written_angles() {
        let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\nu3(pi/2, -pi, 3*pi/4) q[1]; cx q[1],q[0];\n";
        let p = parse(src).unwrap();
        assert_eq!(p.claimed, None);
        assert_eq!(
            p.circuit.gates(),
            &[Gate::u3(1, PI / 2.0, -PI, 3.0 * PI / 4.0), Gate::cnot(1, 0)]
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("qreg q[2];\n", 1),
            ("OPENQASM 2.0;\nqreg q[2];\nh q[0];\n", 3),
            ("OPENQASM 2.0;\nqreg q[2];\n\ncx q[0],q[2];\n", 4),
            ("OPENQASM 2.0;\nqreg q[2];\ncx q[1],q[1];\n", 3),
            ("OPENQASM 2.0;\nqreg q[1];\nu3(0.1,0.2) q[0];\n", 3),
            ("OPENQASM 2.0;\nu3(0.1,0.2,0.3) q[0];\n", 2),
            ("OPENQASM 2.0;\nqreg q[1];\nu3(0.1,zz,0.3) q[0];\n", 3),
            ("OPENQASM 2.0;\nqreg q[1];\nqreg r[1];\n", 3),
        ];
        for (src, want) in cases {
            match parse(src) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{src:?}"),
                other => panic!("{src:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn empty_circuit() {
        let c = Circuit::new(4);
        let p = parse(&emit(&c)).unwrap();
        assert_eq!(p.circuit, c);
        assert_eq!(p.claimed, Some(Metrics::default()));
    }
}
