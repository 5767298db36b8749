//! Line-oriented byte-stream links between host and machine.
//!
//! A link is split into a sending half, which can be shared (the STOP path
//! writes from another thread), and a receiving half owned by one reader.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

pub trait LineSink: Send {
    /// Writes one line; the terminator is added here.
    fn send_line(&mut self, line: &str) -> io::Result<()>;
}

#[derive(Debug, PartialEq, Eq)]
pub enum RecvError {
    Timeout,
    Closed,
}

pub trait LineSource: Send {
    /// Next line without its terminator.
    fn recv_line(&mut self, timeout: Duration) -> Result<String, RecvError>;
}

/// One end of a link.
pub struct Link {
    pub sink: Box<dyn LineSink>,
    pub source: Box<dyn LineSource>,
}

struct ChannelSink(Sender<String>);
struct ChannelSource(Receiver<String>);

impl LineSink for ChannelSink {
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        self.0
            .send(line.to_string())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer dropped"))
    }
}

impl LineSource for ChannelSource {
    fn recv_line(&mut self, timeout: Duration) -> Result<String, RecvError> {
        self.0.recv_timeout(timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => RecvError::Timeout,
            RecvTimeoutError::Disconnected => RecvError::Closed,
        })
    }
}

/// Two connected in-process ends.
pub fn channel_pair() -> (Link, Link) {
    let (a_tx, b_rx) = mpsc::channel();
    let (b_tx, a_rx) = mpsc::channel();
    (
        Link {
            sink: Box::new(ChannelSink(a_tx)),
            source: Box::new(ChannelSource(a_rx)),
        },
        Link {
            sink: Box::new(ChannelSink(b_tx)),
            source: Box::new(ChannelSource(b_rx)),
        },
    )
}

struct TcpSink(TcpStream);

impl LineSink for TcpSink {
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        let mut buf = Vec::with_capacity(line.len() + 1);
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
        self.0.write_all(&buf)?;
        self.0.flush()
    }
}

struct TcpSource {
    reader: BufReader<TcpStream>,
    partial: Vec<u8>,
}

impl LineSource for TcpSource {
    fn recv_line(&mut self, timeout: Duration) -> Result<String, RecvError> {
        let timeout = timeout.max(Duration::from_millis(1));
        self.reader
            .get_ref()
            .set_read_timeout(Some(timeout))
            .map_err(|_| RecvError::Closed)?;
        match self.reader.read_until(b'\n', &mut self.partial) {
            Ok(0) => Err(RecvError::Closed),
            Ok(_) if self.partial.last() == Some(&b'\n') => {
                self.partial.pop();
                let line = String::from_utf8_lossy(&self.partial).into_owned();
                self.partial.clear();
                Ok(line)
            }
            Ok(_) => Err(RecvError::Closed),
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                Err(RecvError::Timeout)
            }
            Err(_) => Err(RecvError::Closed),
        }
    }
}

/// Wraps a connected TCP stream.
pub fn tcp_link(stream: TcpStream) -> io::Result<Link> {
    stream.set_nodelay(true)?;
    let reader = stream.try_clone()?;
    Ok(Link {
        sink: Box::new(TcpSink(stream)),
        source: Box::new(TcpSource {
            reader: BufReader::new(reader),
            partial: Vec::new(),
        }),
    })
}

pub fn tcp_connect(addr: impl ToSocketAddrs) -> io::Result<Link> {
    tcp_link(TcpStream::connect(addr)?)
}
