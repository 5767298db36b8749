//! Plain-text instruction files.
//!
//! ASCII, LF line endings, one command per line: the command letter, one
//! space, and the magnitude with exactly four decimals (`F 35.0000`). Lines
//! starting with `#` are comments. The single directive `#! error-corrected`
//! marks a program whose compensation has already been applied.

use std::fmt::Write as _;

use super::{Instruction, InstructionError, InstructionProgram, Kind};

const CORRECTED_DIRECTIVE: &str = "#! error-corrected";

pub fn emit_text(p: &InstructionProgram) -> Vec<u8> {
    let mut s = String::with_capacity(p.len() * 12);
    if p.error_corrected {
        s.push_str(CORRECTED_DIRECTIVE);
        s.push('\n');
    }
    for ins in p.iter() {
        // `{:.4}` of -0.00001 would print "-0.0000"; normalize the sign.
        let m = (ins.magnitude() * 1e4).round() / 1e4;
        let m = if m == 0.0 { 0.0 } else { m };
        writeln!(s, "{} {:.4}", ins.kind().letter(), m).expect("writing to String");
    }
    s.into_bytes()
}

pub fn parse_text(bytes: &[u8]) -> Result<InstructionProgram, InstructionError> {
    let text = String::from_utf8_lossy(bytes);
    let mut program = InstructionProgram::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if line == CORRECTED_DIRECTIVE {
                program.error_corrected = true;
            }
            continue;
        }
        let mut fields = line.split_whitespace();
        let letter = fields.next().unwrap_or_default();
        let kind = Kind::from_letter(letter).ok_or_else(|| InstructionError::UnknownCommand {
            line: line_no,
            command: letter.to_string(),
        })?;
        let mag_text = fields.next().unwrap_or_default();
        let magnitude: f64 = match (mag_text.parse::<f64>(), fields.next()) {
            (Ok(m), None) if m.is_finite() => m,
            _ => {
                return Err(InstructionError::BadMagnitude {
                    line: line_no,
                    text: line[letter.len()..].trim().to_string(),
                })
            }
        };
        let ins = Instruction::new(kind, magnitude).map_err(|e| InstructionError::AtLine {
            line: line_no,
            source: Box::new(e),
        })?;
        program.instructions.push(ins);
    }
    Ok(program)
}
