use crate::error::DecodeError;

/// Default upper bound on one line, large enough for a few thousand records.
pub const MAX_LINE: usize = 4 << 20;

/// Splits an incoming byte stream into newline-terminated lines. Bytes after
/// the last newline stay buffered until the rest of the line arrives.
#[derive(Debug, Clone)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    /// Bytes of `buf` already scanned without finding a newline.
    scanned: usize,
    max_line: usize,
    /// Discarding the remainder of an oversized line.
    skipping: bool,
}

impl Default for FrameDecoder {
    fn default() -> Self {
        Self::new(MAX_LINE)
    }
}

impl FrameDecoder {
    pub fn new(max_line: usize) -> Self {
        Self {
            buf: Vec::new(),
            scanned: 0,
            max_line,
            skipping: false,
        }
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Bytes waiting for their terminating newline.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    /// Next complete line including its newline, if one is buffered. An
    /// oversized line yields one error and is then dropped up to its newline.
    pub fn next_line(&mut self) -> Option<Result<Vec<u8>, DecodeError>> {
        loop {
            match self.buf[self.scanned..].iter().position(|&b| b == b'\n') {
                Some(i) => {
                    let end = self.scanned + i + 1;
                    let line: Vec<u8> = self.buf.drain(..end).collect();
                    self.scanned = 0;
                    if self.skipping {
                        self.skipping = false;
                        continue;
                    }
                    if line.len() > self.max_line {
                        return Some(Err(DecodeError::TooLong(self.max_line)));
                    }
                    return Some(Ok(line));
                }
                None => {
                    if !self.skipping && self.buf.len() > self.max_line {
                        self.skipping = true;
                        self.buf.clear();
                        self.scanned = 0;
                        return Some(Err(DecodeError::TooLong(self.max_line)));
                    }
                    if self.skipping {
                        self.buf.clear();
                    }
                    self.scanned = self.buf.len();
                    return None;
                }
            }
        }
    }
}
