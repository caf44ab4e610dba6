//! Remote logit endpoint: wire protocol, client, and a serving helper.
//!
//! The protocol is strict request/response with newline-delimited JSON over
//! TCP. A connection opens with a handshake that pins the vocabulary
//! (content hash, size, end-of-sequence id); every subsequent request sends
//! a token-id context and receives the full logit vector. There is no
//! streaming and no partial vocabulary: sampling needs every coordinate of
//! every step, so the payload is always the whole vector.
//!
//! Wire format, one JSON document per line:
//!
//! ```text
//! -> {"op":"handshake"}
//! <- {"vocab_hash":"…","vocab_size":123,"eos_id":1}
//! -> {"context":[5,17,2]}
//! <- {"logits":[…]}            # exactly vocab_size floats
//! <- {"error":"message"}       # server-side failure
//! ```

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logits::LogitVector;
use crate::scorer::TokenScorer;
use crate::vocab::{TokenId, Vocabulary};

#[derive(Serialize, Deserialize)]
struct HandshakeRequest {
    op: String,
}

#[derive(Serialize, Deserialize)]
struct HandshakeReply {
    vocab_hash: String,
    vocab_size: usize,
    eos_id: Option<TokenId>,
}

#[derive(Serialize, Deserialize)]
struct StepRequest {
    context: Vec<TokenId>,
}

#[derive(Serialize, Deserialize)]
struct StepReply {
    #[serde(default)]
    logits: Option<Vec<f64>>,
    #[serde(default)]
    error: Option<String>,
}

struct Connection {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl Connection {
    fn open(stream: TcpStream, timeout: Duration) -> Result<Self> {
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(Self {
            reader,
            writer: BufWriter::new(stream),
        })
    }

    fn round_trip<Req: Serialize, Rep: for<'de> Deserialize<'de>>(
        &mut self,
        req: &Req,
    ) -> Result<Rep> {
        let mut line = serde_json::to_string(req)?;
        line.push('\n');
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(map_net_err)?;
        let mut reply = String::new();
        let n = self.reader.read_line(&mut reply).map_err(map_net_err)?;
        if n == 0 {
            return Err(Error::MalformedResponse(
                "connection closed mid-exchange".into(),
            ));
        }
        serde_json::from_str(&reply).map_err(|e| Error::MalformedResponse(e.to_string()))
    }
}

fn map_net_err(e: std::io::Error) -> Error {
    match e.kind() {
        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => Error::NetworkTimeout,
        _ => Error::Io(e),
    }
}

/// Client for a remote logit endpoint.
///
/// The client holds the vocabulary locally; [`RemoteScorer::connect`] fails
/// fast with a vocabulary-mismatch error if the endpoint's handshake hash
/// differs, before any decode step runs. One request is in flight per
/// connection at a time.
pub struct RemoteScorer {
    vocab: Vocabulary,
    eos: Option<TokenId>,
    conn: Mutex<Connection>,
}

impl RemoteScorer {
    pub fn connect(addr: impl ToSocketAddrs, vocab: Vocabulary, timeout: Duration) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(map_net_err)?;
        let mut conn = Connection::open(stream, timeout)?;
        let reply: HandshakeReply = conn.round_trip(&HandshakeRequest {
            op: "handshake".into(),
        })?;
        if reply.vocab_hash != vocab.content_hash() || reply.vocab_size != vocab.size() {
            return Err(Error::VocabularyMismatch(format!(
                "endpoint serves vocab {}#{}, client holds {}#{}",
                &reply.vocab_hash[..reply.vocab_hash.len().min(12)],
                reply.vocab_size,
                &vocab.content_hash()[..12],
                vocab.size()
            )));
        }
        if let Some(eos) = reply.eos_id {
            if eos as usize >= reply.vocab_size {
                return Err(Error::MalformedResponse(format!(
                    "eos_id {eos} outside vocabulary"
                )));
            }
        }
        Ok(Self {
            vocab,
            eos: reply.eos_id,
            conn: Mutex::new(conn),
        })
    }
}

impl TokenScorer for RemoteScorer {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_logits(&self, context: &[TokenId]) -> Result<LogitVector> {
        let mut conn = self.conn.lock().expect("remote connection poisoned");
        let reply: StepReply = conn.round_trip(&StepRequest {
            context: context.to_vec(),
        })?;
        if let Some(msg) = reply.error {
            return Err(Error::MalformedResponse(format!("endpoint error: {msg}")));
        }
        let logits = reply
            .logits
            .ok_or_else(|| Error::MalformedResponse("reply carries neither logits nor error".into()))?;
        if logits.len() != self.vocab.size() {
            return Err(Error::MalformedResponse(format!(
                "expected {} logits, got {}",
                self.vocab.size(),
                logits.len()
            )));
        }
        LogitVector::new(logits).map_err(|e| Error::MalformedResponse(e.to_string()))
    }

    fn eos_id(&self) -> Option<TokenId> {
        self.eos
    }

    fn concurrent_safe(&self) -> bool {
        false
    }
}

/// Serves a local scorer over the wire protocol, handling `max_connections`
/// connections sequentially and any number of requests per connection.
///
/// This is the reference implementation of the server side; external model
/// backends only need to speak the same line protocol.
pub fn serve_scorer(
    scorer: &dyn TokenScorer,
    listener: &TcpListener,
    max_connections: usize,
) -> Result<()> {
    for _ in 0..max_connections {
        let (stream, _) = listener.accept()?;
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = BufWriter::new(stream);
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break; // client hung up
            }
            let reply = handle_request(scorer, &line);
            writer.write_all(reply.as_bytes())?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
    }
    Ok(())
}

fn handle_request(scorer: &dyn TokenScorer, line: &str) -> String {
    if let Ok(req) = serde_json::from_str::<StepRequest>(line) {
        return match scorer.next_logits(&req.context) {
            Ok(logits) => serde_json::to_string(&StepReply {
                logits: Some(logits.into_scores()),
                error: None,
            })
            .expect("serialize reply"),
            Err(e) => serde_json::to_string(&StepReply {
                logits: None,
                error: Some(e.to_string()),
            })
            .expect("serialize reply"),
        };
    }
    if serde_json::from_str::<HandshakeRequest>(line).is_ok() {
        return serde_json::to_string(&HandshakeReply {
            vocab_hash: scorer.vocabulary().content_hash(),
            vocab_size: scorer.vocabulary().size(),
            eos_id: scorer.eos_id(),
        })
        .expect("serialize reply");
    }
    serde_json::to_string(&StepReply {
        logits: None,
        error: Some("unrecognized request".into()),
    })
    .expect("serialize reply")
}
