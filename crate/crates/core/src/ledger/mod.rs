//! Simulated permissioned blockchain holding tuple fingerprints and row counts.
//!
//! Peers live in-process. A batch of transactions is validated by every online
//! peer against committed state plus the batch's own earlier effects; each valid
//! transaction is signed, and the batch becomes one block once every
//! transaction has a quorum of endorsements.

mod codec;
mod state;

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::{CryptoRng, RngCore, SeedableRng};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::fingerprint::{digest_newtype, Fingerprint, RowId};

pub use codec::CodecError;
pub use state::{ChangeKind, FingerprintRecord, HistoryEntry, RecordStatus, WorldState};
use state::{Overlay, Rejection};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PeerId(String);

impl PeerId {
    pub fn new(id: impl Into<String>) -> PeerId {
        PeerId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PeerId {
    fn from(s: &str) -> PeerId {
        PeerId(s.to_string())
    }
}

digest_newtype!(
    /// SHA-256 of a block's canonical encoding.
    BlockHash
);

impl BlockHash {
    pub const ZERO: BlockHash = BlockHash([0; 32]);

    pub fn of(encoded: &[u8]) -> BlockHash {
        BlockHash(Sha256::digest(encoded).into())
    }
}

/// Transaction payload. `InitRowCount` records a table's bootstrap count;
/// later changes arrive as signed deltas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxOp {
    Put { row_id: RowId, table: String, fingerprint: Fingerprint },
    Update { row_id: RowId, table: String, fingerprint: Fingerprint, prev: Fingerprint },
    MarkDeleted { row_id: RowId, table: String, prev: Fingerprint },
    AdjustRowCount { table: String, delta: i64 },
    InitRowCount { table: String, count: i64 },
}

impl TxOp {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TxOp::Put { .. } => "put",
            TxOp::Update { .. } => "update",
            TxOp::MarkDeleted { .. } => "delete",
            TxOp::AdjustRowCount { .. } => "adjust_count",
            TxOp::InitRowCount { .. } => "init_count",
        }
    }

    pub fn row_id(&self) -> Option<&RowId> {
        match self {
            TxOp::Put { row_id, .. } | TxOp::Update { row_id, .. } | TxOp::MarkDeleted { row_id, .. } => Some(row_id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerTx {
    pub op: TxOp,
    pub owner: PeerId,
    pub signature: Signature,
    pub endorsements: Vec<(PeerId, Signature)>,
}

impl LedgerTx {
    pub fn body(&self) -> Vec<u8> {
        codec::encode_body(&self.op, &self.owner)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub height: u64,
    pub prev_hash: BlockHash,
    pub timestamp: i64,
    pub txs: Vec<LedgerTx>,
}

impl Block {
    pub fn encode(&self) -> Vec<u8> {
        codec::encode_block(self)
    }

    pub fn decode(bytes: &[u8]) -> Result<Block, CodecError> {
        codec::decode_block(bytes)
    }

    pub fn hash(&self) -> BlockHash {
        BlockHash::of(&self.encode())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub height: u64,
    pub block_hash: BlockHash,
    pub txs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    /// Number of blocks examined, genesis included.
    pub blocks: u64,
    pub first_bad_height: Option<u64>,
}

impl ChainReport {
    pub fn is_ok(&self) -> bool {
        self.first_bad_height.is_none()
    }

    /// Height of the last good block.
    pub fn head_height(&self) -> Option<u64> {
        self.first_bad_height.unwrap_or(self.blocks).checked_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("transaction {tx_index}: stale state for row {row_id}")]
    StaleState { tx_index: usize, row_id: RowId },
    #[error("transaction {tx_index}: row {row_id} already has an active fingerprint")]
    DuplicateRowId { tx_index: usize, row_id: RowId },
    #[error("transaction {tx_index} not endorsed: {reason}")]
    EndorsementFailed { tx_index: usize, reason: String },
    #[error("empty transaction batch")]
    EmptyBatch,
    #[error("unknown peer {0}")]
    UnknownPeer(PeerId),
    #[error("no row count recorded for table {0}")]
    UnknownTable(String),
    #[error("row {0} not found on the ledger")]
    NotFound(RowId),
    #[error("chain is damaged at height {0}")]
    ChainCorrupted(u64),
    #[error("ledger file: {0}")]
    Io(String),
    #[error("peer keys: {0}")]
    Keys(String),
}

impl From<std::io::Error> for LedgerError {
    fn from(e: std::io::Error) -> Self {
        LedgerError::Io(e.to_string())
    }
}

/// The ledger contract the gateway depends on. An adapter to an external
/// blockchain implements the same operations.
pub trait Ledger {
    fn submit(&mut self, batch: Vec<TxOp>, submitter: &PeerId) -> Result<Receipt, LedgerError>;
    /// `None` means the row id was never written.
    fn get_current(&self, row_id: &RowId) -> Option<FingerprintRecord>;
    /// Status and fingerprint only; the per-tuple check needs nothing else.
    fn current_fingerprint(&self, row_id: &RowId) -> Option<(RecordStatus, Fingerprint)> {
        self.get_current(row_id).map(|r| (r.status, r.fingerprint))
    }
    fn get_row_count(&self, table: &str) -> Result<i64, LedgerError>;
    fn verify_chain(&self) -> ChainReport;
    fn history(&self, row_id: &RowId) -> Result<Vec<HistoryEntry>, LedgerError>;
    /// Active row ids of a table; the full audit walks these to find deleted tuples.
    fn active_row_ids(&self, table: &str) -> Vec<RowId>;
}

pub trait Clock: fmt::Debug + Send + Sync {
    /// Seconds since the Unix epoch.
    fn now(&self) -> i64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> i64 {
        chrono::Utc::now().timestamp()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub i64);

impl Clock for FixedClock {
    fn now(&self) -> i64 {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct Peer {
    pub id: PeerId,
    key: SigningKey,
    pub online: bool,
}

impl Peer {
    pub fn verifying_key(&self) -> VerifyingKey {
        self.key.verifying_key()
    }
}

pub fn quorum(peers: usize) -> usize {
    peers / 2 + 1
}

/// A persisted block: its canonical bytes, the hash stored next to them, and
/// the decoded form when the bytes parse.
#[derive(Debug, Clone)]
struct StoredBlock {
    bytes: Vec<u8>,
    stored_hash: [u8; 32],
    block: Option<Block>,
}

#[derive(Debug, Clone)]
pub struct SimulatedLedger {
    peers: Vec<Peer>,
    chain: Vec<StoredBlock>,
    /// Set when the file ends inside a record.
    truncated: bool,
    /// Height of the first block that failed the structural check at load.
    damaged_at: Option<u64>,
    state: WorldState,
    path: Option<PathBuf>,
    clock: Arc<dyn Clock>,
}

fn keys_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".keys");
    PathBuf::from(p)
}

impl SimulatedLedger {
    /// In-memory ledger with `n` peers named `peer0..`, keys drawn from `rng`.
    pub fn with_rng(n: usize, rng: &mut (impl RngCore + CryptoRng), clock: Arc<dyn Clock>) -> SimulatedLedger {
        assert!(n >= 1, "a ledger needs at least one peer");
        let peers = (0..n)
            .map(|i| Peer { id: PeerId(format!("peer{i}")), key: SigningKey::generate(rng), online: true })
            .collect();
        let mut ledger = SimulatedLedger {
            peers,
            chain: Vec::new(),
            truncated: false,
            damaged_at: None,
            state: WorldState::default(),
            path: None,
            clock,
        };
        let genesis = Block { height: 0, prev_hash: BlockHash::ZERO, timestamp: ledger.clock.now(), txs: Vec::new() };
        ledger.push_block(genesis);
        ledger
    }

    pub fn seeded(n: usize, seed: u64, clock: Arc<dyn Clock>) -> SimulatedLedger {
        Self::with_rng(n, &mut rand_chacha::ChaCha20Rng::seed_from_u64(seed), clock)
    }

    pub fn in_memory(n: usize) -> SimulatedLedger {
        Self::with_rng(n, &mut rand::rngs::OsRng, Arc::new(SystemClock))
    }

    /// Creates a ledger file holding the genesis block, plus a key sidecar.
    pub fn create(path: &Path, n: usize, clock: Arc<dyn Clock>) -> Result<SimulatedLedger, LedgerError> {
        let mut ledger = Self::with_rng(n, &mut rand::rngs::OsRng, clock);
        ledger.persist_to(path)?;
        Ok(ledger)
    }

    /// Writes the whole chain and keys to fresh files and appends there from now on.
    pub fn persist_to(&mut self, path: &Path) -> Result<(), LedgerError> {
        let mut f = OpenOptions::new().write(true).create_new(true).open(path)?;
        for b in &self.chain {
            f.write_all(&record(b))?;
        }
        f.sync_all()?;
        let keys: String =
            self.peers.iter().map(|p| format!("{}\t{}\n", p.id, hex::encode(p.key.to_bytes()))).collect();
        std::fs::write(keys_path(path), keys)?;
        self.path = Some(path.to_path_buf());
        Ok(())
    }

    /// Loads a ledger file and rebuilds world state by replaying blocks. A
    /// damaged chain still loads; state then reflects the intact prefix and
    /// further submissions are refused.
    pub fn open(path: &Path, clock: Arc<dyn Clock>) -> Result<SimulatedLedger, LedgerError> {
        let peers = read_keys(&keys_path(path))?;
        let mut data = Vec::new();
        File::open(path)?.read_to_end(&mut data)?;
        let (chain, truncated) = split_records(&data);
        let mut ledger =
            SimulatedLedger { peers, chain, truncated, damaged_at: None, state: WorldState::default(), path: None, clock };
        let (state, damaged_at) = ledger.replay();
        ledger.state = state;
        ledger.damaged_at = damaged_at;
        ledger.path = Some(path.to_path_buf());
        Ok(ledger)
    }

    /// Rebuilds world state from the stored blocks, stopping at the first
    /// block that does not decode, link, or apply cleanly. Signatures are not
    /// rechecked here; [`Ledger::verify_chain`] does that.
    pub fn replay(&self) -> (WorldState, Option<u64>) {
        let mut state = WorldState::default();
        for (h, sb) in self.chain.iter().enumerate() {
            let h = h as u64;
            if !self.structurally_sound(h) {
                return (state, Some(h));
            }
            let block = sb.block.as_ref().expect("sound blocks decode");
            let mut overlay = Overlay::new(&state);
            if block.txs.iter().any(|tx| overlay.try_apply(&tx.op).is_err()) {
                return (state, Some(h));
            }
            for tx in &block.txs {
                state.apply(&tx.op, &tx.owner, h);
            }
        }
        (state, self.truncated.then_some(self.chain.len() as u64))
    }

    pub fn world_state(&self) -> &WorldState {
        &self.state
    }

    pub fn peers(&self) -> &[Peer] {
        &self.peers
    }

    pub fn peer_ids(&self) -> Vec<PeerId> {
        self.peers.iter().map(|p| p.id.clone()).collect()
    }

    pub fn quorum(&self) -> usize {
        quorum(self.peers.len())
    }

    pub fn set_online(&mut self, peer: &PeerId, online: bool) -> Result<(), LedgerError> {
        let p = self.peers.iter_mut().find(|p| p.id == *peer).ok_or_else(|| LedgerError::UnknownPeer(peer.clone()))?;
        p.online = online;
        Ok(())
    }

    pub fn head_height(&self) -> u64 {
        self.chain.len() as u64 - 1
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        self.chain.get(height as usize).and_then(|b| b.block.as_ref())
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn damaged_at(&self) -> Option<u64> {
        self.damaged_at
    }

    /// Detached copy that keeps state in memory only.
    pub fn fork(&self) -> SimulatedLedger {
        SimulatedLedger { path: None, ..self.clone() }
    }

    fn peer(&self, id: &PeerId) -> Option<&Peer> {
        self.peers.iter().find(|p| p.id == *id)
    }

    fn push_block(&mut self, block: Block) -> BlockHash {
        let bytes = block.encode();
        let hash = BlockHash::of(&bytes);
        self.chain.push(StoredBlock { bytes, stored_hash: *hash.as_bytes(), block: Some(block) });
        hash
    }

    /// Decodes, matches its stored hash, sits at the right height, and links
    /// to the previous block's bytes.
    fn structurally_sound(&self, h: u64) -> bool {
        let sb = &self.chain[h as usize];
        let Some(block) = &sb.block else { return false };
        let prev = match h {
            0 => BlockHash::ZERO,
            _ => BlockHash::of(&self.chain[h as usize - 1].bytes),
        };
        BlockHash::of(&sb.bytes).as_bytes() == &sb.stored_hash && block.height == h && block.prev_hash == prev
    }

    fn signatures_valid(&self, block: &Block) -> bool {
        let q = self.quorum();
        block.txs.iter().all(|tx| {
            let body = tx.body();
            let signed_by = |id: &PeerId, sig: &Signature| {
                self.peer(id).is_some_and(|p| p.verifying_key().verify(&body, sig).is_ok())
            };
            let mut endorsers: Vec<&PeerId> = tx.endorsements.iter().map(|(p, _)| p).collect();
            endorsers.sort();
            endorsers.dedup();
            signed_by(&tx.owner, &tx.signature)
                && endorsers.len() == tx.endorsements.len()
                && endorsers.len() >= q
                && tx.endorsements.iter().all(|(p, s)| signed_by(p, s))
        })
    }

    /// Each online peer checks the submitter's signature and validates the
    /// batch in order; the first rejection from any peer is reported.
    fn endorse(&self, txs: &mut [LedgerTx]) -> Result<(), LedgerError> {
        let owner = self.peer(&txs[0].owner).expect("submitter checked");
        let bodies: Vec<Vec<u8>> = txs.iter().map(LedgerTx::body).collect();
        let mut first_rejection: Option<(usize, Rejection)> = None;
        for peer in self.peers.iter().filter(|p| p.online) {
            let mut overlay = Overlay::new(&self.state);
            for (i, (tx, body)) in txs.iter_mut().zip(&bodies).enumerate() {
                let verdict = match owner.verifying_key().verify(body, &tx.signature) {
                    Err(_) => Err(Rejection::Invalid("bad submitter signature".into())),
                    Ok(()) => overlay.try_apply(&tx.op),
                };
                match verdict {
                    Ok(()) => tx.endorsements.push((peer.id.clone(), peer.key.sign(body))),
                    Err(r) => {
                        if first_rejection.as_ref().map_or(true, |(j, _)| i < *j) {
                            first_rejection = Some((i, r));
                        }
                        break;
                    }
                }
            }
        }
        let q = self.quorum();
        if let Some(i) = txs.iter().position(|tx| tx.endorsements.len() < q) {
            return Err(match first_rejection {
                Some((j, Rejection::Stale { row_id, .. })) => LedgerError::StaleState { tx_index: j, row_id },
                Some((j, Rejection::Duplicate(row_id))) => LedgerError::DuplicateRowId { tx_index: j, row_id },
                Some((j, Rejection::Invalid(reason))) => LedgerError::EndorsementFailed { tx_index: j, reason },
                None => LedgerError::EndorsementFailed {
                    tx_index: i,
                    reason: format!("{} of {} peers endorsed, quorum is {q}", txs[i].endorsements.len(), self.peers.len()),
                },
            });
        }
        Ok(())
    }
}

fn record(sb: &StoredBlock) -> Vec<u8> {
    let mut out = Vec::with_capacity(sb.bytes.len() + 36);
    out.extend_from_slice(&(sb.bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&sb.bytes);
    out.extend_from_slice(&sb.stored_hash);
    out
}

/// Splits a ledger file into `len ∥ block ∥ hash` records. The flag reports
/// bytes left over that do not form a whole record.
fn split_records(mut data: &[u8]) -> (Vec<StoredBlock>, bool) {
    let mut out = Vec::new();
    while !data.is_empty() {
        if data.len() < 4 {
            return (out, true);
        }
        let len = u32::from_be_bytes(data[..4].try_into().unwrap()) as usize;
        if data.len() - 4 < len.saturating_add(32) {
            return (out, true);
        }
        let bytes = data[4..4 + len].to_vec();
        let stored_hash = data[4 + len..4 + len + 32].try_into().unwrap();
        let block = Block::decode(&bytes).ok();
        out.push(StoredBlock { bytes, stored_hash, block });
        data = &data[4 + len + 32..];
    }
    (out, false)
}

fn read_keys(path: &Path) -> Result<Vec<Peer>, LedgerError> {
    let text = std::fs::read_to_string(path).map_err(|e| LedgerError::Keys(format!("{}: {e}", path.display())))?;
    let mut peers = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || LedgerError::Keys(format!("line {}: expected `peer<TAB>hex secret`", n + 1));
        let (id, secret) = line.split_once('\t').ok_or_else(bad)?;
        let mut bytes = [0u8; 32];
        hex::decode_to_slice(secret.trim(), &mut bytes).map_err(|_| bad())?;
        peers.push(Peer { id: PeerId::new(id), key: SigningKey::from_bytes(&bytes), online: true });
    }
    if peers.is_empty() {
        return Err(LedgerError::Keys("no peers".into()));
    }
    Ok(peers)
}

impl Ledger for SimulatedLedger {
    fn submit(&mut self, batch: Vec<TxOp>, submitter: &PeerId) -> Result<Receipt, LedgerError> {
        if let Some(h) = self.damaged_at {
            return Err(LedgerError::ChainCorrupted(h));
        }
        if batch.is_empty() {
            return Err(LedgerError::EmptyBatch);
        }
        let key = &self.peer(submitter).ok_or_else(|| LedgerError::UnknownPeer(submitter.clone()))?.key;
        let mut txs: Vec<LedgerTx> = batch
            .into_iter()
            .map(|op| {
                let signature = key.sign(&codec::encode_body(&op, submitter));
                LedgerTx { op, owner: submitter.clone(), signature, endorsements: Vec::new() }
            })
            .collect();
        self.endorse(&mut txs)?;

        let height = self.chain.len() as u64;
        let prev_hash = BlockHash::from_bytes(self.chain.last().expect("genesis").stored_hash);
        let block = Block { height, prev_hash, timestamp: self.clock.now(), txs };
        let bytes = block.encode();
        let block_hash = BlockHash::of(&bytes);
        let sb = StoredBlock { bytes, stored_hash: *block_hash.as_bytes(), block: None };
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new().append(true).open(path)?;
            f.write_all(&record(&sb))?;
            f.sync_data()?;
        }
        for tx in &block.txs {
            self.state.apply(&tx.op, &tx.owner, height);
        }
        let txs = block.txs.len();
        self.chain.push(StoredBlock { block: Some(block), ..sb });
        Ok(Receipt { height, block_hash, txs })
    }

    fn get_current(&self, row_id: &RowId) -> Option<FingerprintRecord> {
        self.state.record(row_id).cloned()
    }

    fn current_fingerprint(&self, row_id: &RowId) -> Option<(RecordStatus, Fingerprint)> {
        self.state.record(row_id).map(|r| (r.status, r.fingerprint))
    }

    fn get_row_count(&self, table: &str) -> Result<i64, LedgerError> {
        self.state.counts.get(table).copied().ok_or_else(|| LedgerError::UnknownTable(table.to_string()))
    }

    fn verify_chain(&self) -> ChainReport {
        let blocks = self.chain.len() as u64;
        let bad = (0..blocks).find(|&h| {
            !self.structurally_sound(h) || !self.signatures_valid(self.chain[h as usize].block.as_ref().unwrap())
        });
        ChainReport { blocks, first_bad_height: bad.or(self.truncated.then_some(blocks)) }
    }

    fn history(&self, row_id: &RowId) -> Result<Vec<HistoryEntry>, LedgerError> {
        self.state.record(row_id).map(|r| r.history.clone()).ok_or(LedgerError::NotFound(*row_id))
    }

    fn active_row_ids(&self, table: &str) -> Vec<RowId> {
        let mut out: Vec<RowId> =
            self.state.records().filter(|r| r.is_active() && r.table == table).map(|r| r.row_id).collect();
        out.sort();
        out
    }
}
