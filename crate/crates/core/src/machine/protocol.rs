//! Line protocol between host and machine.
//!
//! ASCII, LF-terminated, single-space separated. Host to machine:
//! `F <steps>`, `B <steps>`, `R <steps>`, `RETRACT 0|1`, `HOME`, `STOP`.
//! Machine to host: `OK`, `ERR <code>`, `HIT`. Only one command is
//! outstanding at a time, except that `STOP` may be sent while a motion is
//! executing; the interrupted command answers first, then `STOP` gets `OK`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::steps::MotorCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HostCommand {
    Motor(MotorCommand),
    Stop,
}

impl HostCommand {
    pub fn to_line(&self) -> String {
        match self {
            HostCommand::Motor(m) => m.to_line(),
            HostCommand::Stop => "STOP".to_string(),
        }
    }
}

impl FromStr for HostCommand {
    type Err = ErrorCode;

    fn from_str(line: &str) -> Result<Self, ErrorCode> {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let (head, arg) = match line.split_once(' ') {
            Some((h, a)) => (h, Some(a)),
            None => (line, None),
        };
        let steps = |a: Option<&str>| -> Result<i64, ErrorCode> {
            let a = a.ok_or(ErrorCode::BadArgument)?;
            if a.is_empty() || a.contains(' ') {
                return Err(ErrorCode::BadArgument);
            }
            a.parse().map_err(|_| ErrorCode::BadArgument)
        };
        let cmd = match head {
            "F" => MotorCommand::Feed(steps(arg)?),
            "B" => MotorCommand::Bend(steps(arg)?),
            "R" => MotorCommand::Rotate(steps(arg)?),
            "RETRACT" => match arg {
                Some("1") => MotorCommand::Retract(true),
                Some("0") => MotorCommand::Retract(false),
                _ => return Err(ErrorCode::BadArgument),
            },
            "HOME" if arg.is_none() => MotorCommand::Home,
            "STOP" if arg.is_none() => return Ok(HostCommand::Stop),
            "HOME" | "STOP" => return Err(ErrorCode::BadArgument),
            _ => return Err(ErrorCode::UnknownCommand),
        };
        Ok(HostCommand::Motor(cmd))
    }
}

/// Firmware error codes carried by `ERR <code>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorCode {
    UnknownCommand = 1,
    BadArgument = 2,
    NotHomed = 3,
    BendLimit = 4,
    RotateLimit = 5,
    WrongPegSide = 6,
    Stopped = 7,
    PegNotClear = 8,
}

impl ErrorCode {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        use ErrorCode::*;
        [
            UnknownCommand,
            BadArgument,
            NotHomed,
            BendLimit,
            RotateLimit,
            WrongPegSide,
            Stopped,
            PegNotClear,
        ]
        .into_iter()
        .find(|c| c.code() == code)
    }

    pub fn describe(self) -> &'static str {
        match self {
            ErrorCode::UnknownCommand => "unknown command",
            ErrorCode::BadArgument => "malformed argument",
            ErrorCode::NotHomed => "bend axis not homed",
            ErrorCode::BendLimit => "bend arm beyond hard stop",
            ErrorCode::RotateLimit => "rotation beyond cable wrap limit",
            ErrorCode::WrongPegSide => "peg on the wrong side of the wire",
            ErrorCode::Stopped => "stopped",
            ErrorCode::PegNotClear => "bend arm not at zero during feed",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.code(), self.describe())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reply {
    Ok,
    Err(ErrorCode),
    /// Limit switch closed (homing).
    Hit,
}

impl Reply {
    pub fn to_line(&self) -> String {
        match self {
            Reply::Ok => "OK".to_string(),
            Reply::Err(c) => format!("ERR {}", c.code()),
            Reply::Hit => "HIT".to_string(),
        }
    }

    pub fn parse(line: &str) -> Option<Self> {
        let line = line.strip_suffix('\r').unwrap_or(line);
        match line {
            "OK" => Some(Reply::Ok),
            "HIT" => Some(Reply::Hit),
            _ => {
                let code: u8 = line.strip_prefix("ERR ")?.parse().ok()?;
                ErrorCode::from_code(code).map(Reply::Err)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_host_lines() {
        assert_eq!("F 120".parse(), Ok(HostCommand::Motor(MotorCommand::Feed(120))));
        assert_eq!("B -5".parse(), Ok(HostCommand::Motor(MotorCommand::Bend(-5))));
        assert_eq!("RETRACT 1".parse(), Ok(HostCommand::Motor(MotorCommand::Retract(true))));
        assert_eq!("HOME".parse(), Ok(HostCommand::Motor(MotorCommand::Home)));
        assert_eq!("STOP".parse(), Ok(HostCommand::Stop));
        assert_eq!("X 1".parse::<HostCommand>(), Err(ErrorCode::UnknownCommand));
        assert_eq!("F  1".parse::<HostCommand>(), Err(ErrorCode::BadArgument));
        assert_eq!("F 1.5".parse::<HostCommand>(), Err(ErrorCode::BadArgument));
        assert_eq!("RETRACT 2".parse::<HostCommand>(), Err(ErrorCode::BadArgument));
        assert_eq!("HOME now".parse::<HostCommand>(), Err(ErrorCode::BadArgument));
    }

    #[test]
    fn replies_round_trip() {
        for r in [Reply::Ok, Reply::Hit, Reply::Err(ErrorCode::PegNotClear)] {
            assert_eq!(Reply::parse(&r.to_line()), Some(r));
        }
        assert_eq!(Reply::parse("ERR 99"), None);
        assert_eq!(Reply::parse("ok"), None);
    }
}
