//! Canonical byte encoding shared by hashing, signing and the ledger file.
//! Every field is `u32 BE length ∥ bytes`; integers are 8-byte big-endian,
//! optional digests are empty when absent, nested records are length-prefixed.

use ed25519_dalek::Signature;

use super::{Block, BlockHash, LedgerTx, PeerId, TxOp};
use crate::fingerprint::{Fingerprint, RowId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed encoding at byte {offset}: {message}")]
pub struct CodecError {
    pub offset: usize,
    pub message: String,
}

#[derive(Default)]
pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(&(b.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(b);
        self
    }

    pub fn int(&mut self, i: i64) -> &mut Self {
        self.bytes(&i.to_be_bytes())
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn opt(&mut self, d: Option<&[u8; 32]>) -> &mut Self {
        self.bytes(d.map_or(&[][..], |d| &d[..]))
    }

    pub fn finish(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.buf)
    }
}

pub(crate) struct Decoder<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(data: &'a [u8]) -> Decoder<'a> {
        Decoder { data, pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> CodecError {
        CodecError { offset: self.pos, message: message.into() }
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CodecError> {
        let rest = &self.data[self.pos..];
        if rest.len() < 4 {
            return Err(self.err("truncated length"));
        }
        let len = u32::from_be_bytes(rest[..4].try_into().unwrap()) as usize;
        if rest.len() - 4 < len {
            return Err(self.err(format!("field of {len} bytes overruns input")));
        }
        self.pos += 4 + len;
        Ok(&rest[4..4 + len])
    }

    fn fixed<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        let b = self.bytes()?;
        b.try_into().map_err(|_| self.err(format!("expected {N} bytes, got {}", b.len())))
    }

    pub fn int(&mut self) -> Result<i64, CodecError> {
        Ok(i64::from_be_bytes(self.fixed::<8>()?))
    }

    pub fn str(&mut self) -> Result<String, CodecError> {
        let b = self.bytes()?;
        String::from_utf8(b.to_vec()).map_err(|_| self.err("invalid utf-8"))
    }

    pub fn digest(&mut self) -> Result<[u8; 32], CodecError> {
        self.fixed::<32>()
    }

    pub fn opt(&mut self) -> Result<Option<[u8; 32]>, CodecError> {
        let b = self.bytes()?;
        match b.len() {
            0 => Ok(None),
            32 => Ok(Some(b.try_into().unwrap())),
            n => Err(self.err(format!("expected empty or 32-byte digest, got {n}"))),
        }
    }

    pub fn end(&self) -> Result<(), CodecError> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(self.err("trailing bytes"))
        }
    }
}

/// The bytes a submitter and its endorsers sign.
pub(crate) fn encode_body(op: &TxOp, owner: &PeerId) -> Vec<u8> {
    let mut e = Encoder::default();
    e.str(op.kind_name());
    match op {
        TxOp::Put { row_id, table, fingerprint } => {
            e.opt(Some(row_id.as_bytes())).str(table).opt(Some(fingerprint.as_bytes())).opt(None).bytes(&[])
        }
        TxOp::Update { row_id, table, fingerprint, prev } => e
            .opt(Some(row_id.as_bytes()))
            .str(table)
            .opt(Some(fingerprint.as_bytes()))
            .opt(Some(prev.as_bytes()))
            .bytes(&[]),
        TxOp::MarkDeleted { row_id, table, prev } => {
            e.opt(Some(row_id.as_bytes())).str(table).opt(None).opt(Some(prev.as_bytes())).bytes(&[])
        }
        TxOp::AdjustRowCount { table, delta } => e.opt(None).str(table).opt(None).opt(None).int(*delta),
        TxOp::InitRowCount { table, count } => e.opt(None).str(table).opt(None).opt(None).int(*count),
    };
    e.str(owner.as_str()).finish()
}

fn decode_body(bytes: &[u8]) -> Result<(TxOp, PeerId), CodecError> {
    let mut d = Decoder::new(bytes);
    let kind = d.str()?;
    let row_id = d.opt()?.map(RowId::from_bytes);
    let table = d.str()?;
    let fingerprint = d.opt()?.map(Fingerprint::from_bytes);
    let prev = d.opt()?.map(Fingerprint::from_bytes);
    let delta_bytes = d.bytes()?;
    let owner = PeerId::new(d.str()?);
    d.end()?;
    let delta = match delta_bytes.len() {
        0 => None,
        8 => Some(i64::from_be_bytes(delta_bytes.try_into().unwrap())),
        n => return Err(CodecError { offset: 0, message: format!("bad delta width {n}") }),
    };
    let op = match (kind.as_str(), row_id, fingerprint, prev, delta) {
        ("put", Some(row_id), Some(fingerprint), None, None) => TxOp::Put { row_id, table, fingerprint },
        ("update", Some(row_id), Some(fingerprint), Some(prev), None) => {
            TxOp::Update { row_id, table, fingerprint, prev }
        }
        ("delete", Some(row_id), None, Some(prev), None) => TxOp::MarkDeleted { row_id, table, prev },
        ("adjust_count", None, None, None, Some(delta)) => TxOp::AdjustRowCount { table, delta },
        ("init_count", None, None, None, Some(count)) => TxOp::InitRowCount { table, count },
        _ => return Err(CodecError { offset: 0, message: format!("inconsistent fields for {kind:?} transaction") }),
    };
    Ok((op, owner))
}

pub(crate) fn encode_tx(tx: &LedgerTx) -> Vec<u8> {
    let mut e = Encoder::default();
    e.bytes(&encode_body(&tx.op, &tx.owner)).bytes(&tx.signature.to_bytes()).int(tx.endorsements.len() as i64);
    for (peer, sig) in &tx.endorsements {
        e.str(peer.as_str()).bytes(&sig.to_bytes());
    }
    e.finish()
}

fn decode_signature(d: &mut Decoder<'_>) -> Result<Signature, CodecError> {
    let b = d.bytes()?;
    let arr: [u8; 64] = b.try_into().map_err(|_| d.err("signature must be 64 bytes"))?;
    Ok(Signature::from_bytes(&arr))
}

fn decode_tx(bytes: &[u8]) -> Result<LedgerTx, CodecError> {
    let mut d = Decoder::new(bytes);
    let (op, owner) = decode_body(d.bytes()?)?;
    let signature = decode_signature(&mut d)?;
    let n = d.int()?;
    if n < 0 || n as usize > bytes.len() {
        return Err(d.err(format!("bad endorsement count {n}")));
    }
    let mut endorsements = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let peer = PeerId::new(d.str()?);
        endorsements.push((peer, decode_signature(&mut d)?));
    }
    d.end()?;
    Ok(LedgerTx { op, owner, signature, endorsements })
}

pub(crate) fn encode_block(b: &Block) -> Vec<u8> {
    let mut e = Encoder::default();
    e.int(b.height as i64).bytes(b.prev_hash.as_bytes()).int(b.timestamp).int(b.txs.len() as i64);
    for tx in &b.txs {
        e.bytes(&encode_tx(tx));
    }
    e.finish()
}

pub(crate) fn decode_block(bytes: &[u8]) -> Result<Block, CodecError> {
    let mut d = Decoder::new(bytes);
    let height = d.int()?;
    if height < 0 {
        return Err(d.err("negative height"));
    }
    let prev_hash = BlockHash::from_bytes(d.digest()?);
    let timestamp = d.int()?;
    let n = d.int()?;
    if n < 0 || n as usize > bytes.len() {
        return Err(d.err(format!("bad transaction count {n}")));
    }
    let mut txs = Vec::with_capacity(n as usize);
    for _ in 0..n {
        txs.push(decode_tx(d.bytes()?)?);
    }
    d.end()?;
    Ok(Block { height: height as u64, prev_hash, timestamp, txs })
}
