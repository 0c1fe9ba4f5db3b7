//! All-or-nothing preprocessing.
//!
//! The message is first framed with a recognizable header (magic, length,
//! CRC-32) so that a receiver can tell a correct reassembly from a wrong one,
//! then run through the package transform: every 16-byte block is masked with
//! AES-128 under a fresh random inner key, and the inner key is hidden in one
//! extra block as the XOR of AES digests (under the all-zero public key) of
//! the masked blocks. Losing any single output block loses the inner key and
//! with it every block.

use std::sync::LazyLock;

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes128;
use rand::{CryptoRng, RngCore};
use thiserror::Error;

pub const BLOCK_LEN: usize = 16;
pub const MAGIC: [u8; 4] = *b"JPZ1";
/// magic + 64-bit length + 32-bit CRC.
pub const HEADER_LEN: usize = 4 + 8 + 4;

pub type Block = [u8; BLOCK_LEN];

/// The public key used for the per-block digests. It is public by
/// construction, so zero is as good as anything.
pub const PUBLIC_KEY: Block = [0u8; BLOCK_LEN];

static PUBLIC_CIPHER: LazyLock<Aes128> = LazyLock::new(|| Aes128::new(&PUBLIC_KEY.into()));

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AontError {
    #[error("message payload is empty")]
    EmptyMessage,
    #[error("bad magic: not a framed message")]
    BadMagic,
    #[error("bad checksum: payload CRC does not match header")]
    BadChecksum,
    #[error("bad length: header length {declared} inconsistent with {available} framed bytes")]
    BadLength { declared: u64, available: usize },
    #[error("input of {0} bytes is not a multiple of the 16-byte block size")]
    LengthNotBlockAligned(usize),
    #[error("transformed message needs at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
}

/// The user's data. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMessage(Vec<u8>);

impl RawMessage {
    pub fn new(payload: Vec<u8>) -> Result<Self, AontError> {
        if payload.is_empty() {
            return Err(AontError::EmptyMessage);
        }
        Ok(Self(payload))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

/// Header, payload and zero padding up to a whole number of blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramedMessage(Vec<u8>);

impl FramedMessage {
    /// Wraps candidate bytes without checking them; `unframe` is the check.
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn framed_len(payload_len: usize) -> usize {
    (HEADER_LEN + payload_len).div_ceil(BLOCK_LEN) * BLOCK_LEN
}

pub fn frame(msg: &RawMessage) -> FramedMessage {
    let payload = msg.as_bytes();
    let mut out = Vec::with_capacity(framed_len(payload.len()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(payload.len() as u64).to_be_bytes());
    out.extend_from_slice(&crc32fast::hash(payload).to_be_bytes());
    out.extend_from_slice(payload);
    out.resize(framed_len(payload.len()), 0);
    FramedMessage(out)
}

/// Accepts only a well-formed frame. This is what tells the receiver (or an
/// attacker) that a reassembly guess was right.
pub fn unframe(framed: &FramedMessage) -> Result<RawMessage, AontError> {
    let bytes = framed.as_bytes();
    if bytes.len() < HEADER_LEN || bytes[..4] != MAGIC {
        return Err(AontError::BadMagic);
    }
    let declared = u64::from_be_bytes(bytes[4..12].try_into().unwrap());
    let bad_length = AontError::BadLength {
        declared,
        available: bytes.len(),
    };
    let len = usize::try_from(declared).map_err(|_| bad_length.clone())?;
    if len == 0 || len > bytes.len() - HEADER_LEN || framed_len(len) != bytes.len() {
        return Err(bad_length);
    }
    let crc = u32::from_be_bytes(bytes[12..16].try_into().unwrap());
    let payload = &bytes[HEADER_LEN..HEADER_LEN + len];
    if crc32fast::hash(payload) != crc {
        return Err(AontError::BadChecksum);
    }
    Ok(RawMessage(payload.to_vec()))
}

/// Output of the package transform: s masked blocks followed by the key block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformedMessage {
    blocks: Vec<Block>,
}

impl TransformedMessage {
    pub fn from_blocks(blocks: Vec<Block>) -> Self {
        Self { blocks }
    }

    /// Splits a byte string into blocks; fails unless it is block aligned.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AontError> {
        if !bytes.len().is_multiple_of(BLOCK_LEN) {
            return Err(AontError::LengthNotBlockAligned(bytes.len()));
        }
        Ok(Self {
            blocks: bytes.chunks_exact(BLOCK_LEN).map(|c| c.try_into().unwrap()).collect(),
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut Vec<Block> {
        &mut self.blocks
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.blocks.concat()
    }

    pub fn bit_length(&self) -> u64 {
        (self.blocks.len() * BLOCK_LEN * 8) as u64
    }
}

fn counter_block(i: u64) -> Block {
    (i as u128).to_be_bytes()
}

fn xor_into(dst: &mut Block, src: &Block) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
}

fn encrypt(cipher: &Aes128, block: &Block) -> Block {
    let mut b = (*block).into();
    cipher.encrypt_block(&mut b);
    b.into()
}

// h_i = E(K_pub, m'_i xor i)
fn digest(masked: &Block, i: u64) -> Block {
    let mut input = *masked;
    xor_into(&mut input, &counter_block(i));
    encrypt(&PUBLIC_CIPHER, &input)
}

pub fn aont_transform<R: RngCore + CryptoRng>(
    framed: &FramedMessage,
    rng: &mut R,
) -> Result<TransformedMessage, AontError> {
    let mut inner_key = [0u8; BLOCK_LEN];
    rng.fill_bytes(&mut inner_key);
    transform_with_inner_key(framed, &inner_key)
}

/// The package transform with a caller-chosen inner key. Only useful for
/// fixed test vectors; real use must draw the key fresh each time.
pub fn transform_with_inner_key(framed: &FramedMessage, inner_key: &Block) -> Result<TransformedMessage, AontError> {
    let bytes = framed.as_bytes();
    if bytes.is_empty() || !bytes.len().is_multiple_of(BLOCK_LEN) {
        return Err(AontError::LengthNotBlockAligned(bytes.len()));
    }
    let cipher = Aes128::new(inner_key.into());
    let mut key_block = *inner_key;
    let mut blocks = Vec::with_capacity(bytes.len() / BLOCK_LEN + 1);
    for (idx, chunk) in bytes.chunks_exact(BLOCK_LEN).enumerate() {
        let i = idx as u64 + 1;
        let mut masked: Block = chunk.try_into().unwrap();
        xor_into(&mut masked, &encrypt(&cipher, &counter_block(i)));
        xor_into(&mut key_block, &digest(&masked, i));
        blocks.push(masked);
    }
    blocks.push(key_block);
    Ok(TransformedMessage { blocks })
}

/// Recovers the inner key from the last block and unmasks the rest. The
/// result is only meaningful if it passes [`unframe`].
pub fn aont_inverse(t: &TransformedMessage) -> Result<FramedMessage, AontError> {
    let blocks = t.blocks();
    if blocks.len() < 2 {
        return Err(AontError::TooFewBlocks(blocks.len()));
    }
    let (data, key_block) = blocks.split_at(blocks.len() - 1);
    let mut inner_key = key_block[0];
    for (idx, masked) in data.iter().enumerate() {
        xor_into(&mut inner_key, &digest(masked, idx as u64 + 1));
    }
    let cipher = Aes128::new(&inner_key.into());
    let mut out = Vec::with_capacity(data.len() * BLOCK_LEN);
    for (idx, masked) in data.iter().enumerate() {
        let mut m = *masked;
        xor_into(&mut m, &encrypt(&cipher, &counter_block(idx as u64 + 1)));
        out.extend_from_slice(&m);
    }
    Ok(FramedMessage(out))
}

/// Inverts only the header block of a transformed message, and does so
/// cheaply after a few blocks change. An attacker testing many fillings of a
/// small hole uses it to discard candidates before a full inversion.
pub(crate) struct HeaderProbe {
    blocks: Vec<Block>,
    // Key block xor every data block's digest: the inner key.
    inner_key: Block,
}

impl HeaderProbe {
    pub(crate) fn new(t: &TransformedMessage) -> Option<Self> {
        let blocks = t.blocks().to_vec();
        if blocks.len() < 2 {
            return None;
        }
        let last = blocks.len() - 1;
        let mut inner_key = blocks[last];
        for (idx, masked) in blocks[..last].iter().enumerate() {
            xor_into(&mut inner_key, &digest(masked, idx as u64 + 1));
        }
        Some(Self { blocks, inner_key })
    }

    fn contribution(&self, idx: usize, block: &Block) -> Block {
        if idx == self.blocks.len() - 1 {
            *block
        } else {
            digest(block, idx as u64 + 1)
        }
    }

    /// Whether the first framed block would carry the magic and a length
    /// consistent with the message size once `changed` blocks are swapped in.
    pub(crate) fn plausible(&self, changed: &[(usize, Block)]) -> bool {
        let mut key = self.inner_key;
        let mut first = self.blocks[0];
        for (idx, block) in changed {
            xor_into(&mut key, &self.contribution(*idx, &self.blocks[*idx]));
            xor_into(&mut key, &self.contribution(*idx, block));
            if *idx == 0 {
                first = *block;
            }
        }
        let cipher = Aes128::new(&key.into());
        xor_into(&mut first, &encrypt(&cipher, &counter_block(1)));
        let framed = (self.blocks.len() - 1) * BLOCK_LEN;
        let declared = u64::from_be_bytes(first[4..12].try_into().unwrap());
        first[..4] == MAGIC
            && usize::try_from(declared).is_ok_and(|len| len > 0 && len <= framed && framed_len(len) == framed)
    }
}
