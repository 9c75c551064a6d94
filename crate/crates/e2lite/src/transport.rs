//! Byte-stream transports carrying encoded messages.

use std::io::{ErrorKind, Read, Write};
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::Path;
use std::time::{Duration, Instant};

use crossbeam::channel::{self, Receiver, RecvTimeoutError, Sender};

use crate::error::{DecodeError, E2Error};
use crate::frame::FrameDecoder;
use crate::message::{decode, encode, E2Message};

#[derive(Debug, Clone, PartialEq)]
pub enum Received {
    /// A decoded message and the instant its line was complete.
    Message {
        msg: E2Message,
        at: Instant,
    },
    Timeout,
    /// A line that could not be decoded. The stream stays usable.
    Malformed(DecodeError),
}

pub trait Transport {
    fn send(&mut self, msg: &E2Message) -> Result<(), E2Error>;

    /// Waits up to `timeout` (forever with `None`) for the next message.
    /// Returns [`E2Error::Closed`] once the peer is gone and nothing is left
    /// to read.
    fn recv(&mut self, timeout: Option<Duration>) -> Result<Received, E2Error>;
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn send(&mut self, msg: &E2Message) -> Result<(), E2Error> {
        (**self).send(msg)
    }

    fn recv(&mut self, timeout: Option<Duration>) -> Result<Received, E2Error> {
        (**self).recv(timeout)
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send(&mut self, msg: &E2Message) -> Result<(), E2Error> {
        (**self).send(msg)
    }

    fn recv(&mut self, timeout: Option<Duration>) -> Result<Received, E2Error> {
        (**self).recv(timeout)
    }
}

fn decoded(line: Result<Vec<u8>, DecodeError>) -> Received {
    match line.and_then(|l| decode(&l)) {
        Ok(msg) => Received::Message {
            msg,
            at: Instant::now(),
        },
        Err(e) => Received::Malformed(e),
    }
}

/// In-process transport over a pair of byte channels. Raw chunks need not
/// align with lines, so tests can inject arbitrary bytes.
#[derive(Debug)]
pub struct InProcTransport {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    frames: FrameDecoder,
}

/// Two connected ends.
pub fn inproc_pair() -> (InProcTransport, InProcTransport) {
    let (a_tx, b_rx) = channel::unbounded();
    let (b_tx, a_rx) = channel::unbounded();
    let end = |tx, rx| InProcTransport {
        tx,
        rx,
        frames: FrameDecoder::default(),
    };
    (end(a_tx, a_rx), end(b_tx, b_rx))
}

impl InProcTransport {
    /// Sends bytes as they are, bypassing the encoder.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<(), E2Error> {
        self.tx.send(bytes.to_vec()).map_err(|_| E2Error::Closed)
    }
}

impl Transport for InProcTransport {
    fn send(&mut self, msg: &E2Message) -> Result<(), E2Error> {
        self.send_raw(&encode(msg))
    }

    fn recv(&mut self, timeout: Option<Duration>) -> Result<Received, E2Error> {
        let deadline = timeout.map(|t| Instant::now() + t);
        loop {
            if let Some(line) = self.frames.next_line() {
                return Ok(decoded(line));
            }
            let chunk = match deadline {
                None => self.rx.recv().map_err(|_| E2Error::Closed)?,
                Some(d) => match self.rx.recv_deadline(d) {
                    Ok(c) => c,
                    Err(RecvTimeoutError::Timeout) => return Ok(Received::Timeout),
                    Err(RecvTimeoutError::Disconnected) => return Err(E2Error::Closed),
                },
            };
            self.frames.push(&chunk);
        }
    }
}

/// Transport over a Unix domain stream socket.
#[derive(Debug)]
pub struct UnixTransport {
    stream: UnixStream,
    frames: FrameDecoder,
    buf: Vec<u8>,
}

impl UnixTransport {
    pub fn connect(path: impl AsRef<Path>) -> Result<Self, E2Error> {
        Ok(Self::from_stream(UnixStream::connect(path)?))
    }

    /// Binds `path` and waits for a single peer.
    pub fn listen(path: impl AsRef<Path>) -> Result<Self, E2Error> {
        let listener = UnixListener::bind(path)?;
        let (stream, _) = listener.accept()?;
        Ok(Self::from_stream(stream))
    }

    pub fn from_stream(stream: UnixStream) -> Self {
        Self {
            stream,
            frames: FrameDecoder::default(),
            buf: vec![0; 64 * 1024],
        }
    }

    pub fn shutdown(&self) {
        let _ = self.stream.shutdown(std::net::Shutdown::Both);
    }
}

impl Transport for UnixTransport {
    fn send(&mut self, msg: &E2Message) -> Result<(), E2Error> {
        match self.stream.write_all(&encode(msg)) {
            Ok(()) => Ok(()),
            Err(e) if matches!(e.kind(), ErrorKind::BrokenPipe | ErrorKind::ConnectionReset) => {
                Err(E2Error::Closed)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn recv(&mut self, timeout: Option<Duration>) -> Result<Received, E2Error> {
        let deadline = timeout.map(|t| Instant::now() + t);
        loop {
            if let Some(line) = self.frames.next_line() {
                return Ok(decoded(line));
            }
            let wait = match deadline {
                None => None,
                Some(d) => {
                    let left = d.saturating_duration_since(Instant::now());
                    if left.is_zero() {
                        return Ok(Received::Timeout);
                    }
                    Some(left)
                }
            };
            self.stream.set_read_timeout(wait)?;
            match self.stream.read(&mut self.buf) {
                Ok(0) => return Err(E2Error::Closed),
                Ok(n) => self.frames.push(&self.buf[..n]),
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                    return Ok(Received::Timeout)
                }
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) if e.kind() == ErrorKind::ConnectionReset => return Err(E2Error::Closed),
                Err(e) => return Err(e.into()),
            }
        }
    }
}
