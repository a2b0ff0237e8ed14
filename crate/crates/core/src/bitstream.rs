//! Deterministic bit sources.
//!
//! Every source is addressed by `(kind, master_seed, stream_index)` and always
//! produces the same bits for the same address. Generator words are expanded
//! most-significant bit first; file bytes are consumed in file order, each
//! byte most-significant bit first.
//!
//! Stream derivation:
//! * MT19937 stream `s` is seeded with the low 32 bits of
//!   `SHA-1(master_seed || s)`, `s` written as 8 big-endian bytes.
//! * SHA-1 stream `s` emits block `i` as
//!   `SHA-1(master_seed || s || i)`, both integers 8 big-endian bytes.
//! * A file holds a single stream (index 0).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use sha1::{Digest, Sha1};

use crate::error::{config, Error, Result};

const TWO_POW_NEG_32: f64 = 1.0 / 4_294_967_296.0;

const MT_N: usize = 624;
const MT_M: usize = 397;
const MT_MATRIX_A: u32 = 0x9908_b0df;
const MT_UPPER: u32 = 0x8000_0000;
const MT_LOWER: u32 = 0x7fff_ffff;

/// The 32-bit Mersenne Twister, MT19937.
///
/// Seeding and twisting happen lazily, a few words ahead of the output, so
/// a generator that yields only a handful of words is cheap to create.
#[derive(Clone)]
pub struct Mt19937 {
    state: [u32; MT_N],
    /// Next output position in `state`.
    index: usize,
    /// Positions below this hold the current round's twisted words.
    ready: usize,
    /// Positions below this have been filled by the seeding recurrence.
    seeded: usize,
}

/// Words twisted per refill.
const MT_CHUNK: usize = 16;

impl Mt19937 {
    /// Seeds the generator with the standard `init_genrand` recurrence.
    pub fn new(seed: u32) -> Self {
        let mut state = [0u32; MT_N];
        state[0] = seed;
        Self {
            state,
            index: 0,
            ready: 0,
            seeded: 1,
        }
    }

    fn seed_up_to(&mut self, end: usize) {
        // carry the chain in a register rather than reloading each word
        let mut prev = self.state[self.seeded - 1];
        for (i, slot) in self.state.iter_mut().enumerate().take(end).skip(self.seeded) {
            prev = 1_812_433_253u32
                .wrapping_mul(prev ^ (prev >> 30))
                .wrapping_add(i as u32);
            *slot = prev;
        }
        self.seeded = self.seeded.max(end);
    }

    /// Twists positions `ready..ready + MT_CHUNK` in place. Position `i`
    /// reads the old words at `i + 1` and `i + M`, or the new word at
    /// `i + M - N` once that wraps, so in-order updates match the batch
    /// recurrence.
    #[cold]
    fn refill(&mut self) {
        let lo = self.ready;
        let hi = (lo + MT_CHUNK).min(MT_N);
        if self.seeded < MT_N {
            self.seed_up_to((hi + MT_M).min(MT_N));
        }
        let mag = |y: u32| if y & 1 == 0 { 0 } else { MT_MATRIX_A };
        for i in lo..hi {
            let next = self.state[(i + 1) % MT_N];
            let y = (self.state[i] & MT_UPPER) | (next & MT_LOWER);
            self.state[i] = self.state[(i + MT_M) % MT_N] ^ (y >> 1) ^ mag(y);
        }
        self.ready = hi;
    }

    /// Next tempered output word.
    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        if self.index == MT_N {
            self.index = 0;
            self.ready = 0;
        }
        if self.index == self.ready {
            self.refill();
        }
        let mut y = self.state[self.index];
        self.index += 1;
        y ^= y >> 11;
        y ^= (y << 7) & 0x9d2c_5680;
        y ^= (y << 15) & 0xefc6_0000;
        y ^= y >> 18;
        y
    }
}

impl fmt::Debug for Mt19937 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mt19937").field("index", &self.index).finish()
    }
}

/// SHA-1 of `key || counter` with the counter as 8 big-endian bytes.
pub fn sha1_block(key: &[u8], counter: u64) -> Result<[u8; 20]> {
    if key.is_empty() {
        return config("SHA-1 generator key must not be empty");
    }
    let mut hasher = Sha1::new();
    hasher.update(key);
    hasher.update(counter.to_be_bytes());
    Ok(hasher.finalize().into())
}

/// Counter-mode SHA-1 generator producing 160 bits per block.
#[derive(Debug, Clone)]
pub struct Sha1Counter {
    key: Vec<u8>,
    counter: u64,
    block: [u32; 5],
    next: usize,
}

impl Sha1Counter {
    pub fn new(key: Vec<u8>) -> Result<Self> {
        if key.is_empty() {
            return config("SHA-1 generator key must not be empty");
        }
        Ok(Self {
            key,
            counter: 0,
            block: [0; 5],
            next: 5,
        })
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        if self.next == 5 {
            // key is non-empty by construction
            let digest = sha1_block(&self.key, self.counter).expect("non-empty key");
            self.counter = self.counter.wrapping_add(1);
            for (word, chunk) in self.block.iter_mut().zip(digest.chunks_exact(4)) {
                *word = u32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            }
            self.next = 0;
        }
        let w = self.block[self.next];
        self.next += 1;
        w
    }
}

/// Which generator backs a source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneratorKind {
    Mt19937,
    Sha1,
    File(PathBuf),
}

impl GeneratorKind {
    /// Short column label used in reports.
    pub fn label(&self) -> String {
        match self {
            GeneratorKind::Mt19937 => "MT".to_string(),
            GeneratorKind::Sha1 => "SHA1".to_string(),
            GeneratorKind::File(p) => format!("file:{}", p.display()),
        }
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mt19937" | "mt" => Ok(GeneratorKind::Mt19937),
            "sha1" => Ok(GeneratorKind::Sha1),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(GeneratorKind::File(PathBuf::from(path))),
                _ => config(format!(
                    "unknown generator `{s}` (expected mt19937, sha1 or file:<path>)"
                )),
            },
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorKind::Mt19937 => f.write_str("mt19937"),
            GeneratorKind::Sha1 => f.write_str("sha1"),
            GeneratorKind::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Address of a family of bit streams: a generator plus a master seed.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    kind: GeneratorKind,
    master_seed: Vec<u8>,
    file: Option<Arc<[u8]>>,
}

impl SourceSpec {
    pub fn new(kind: GeneratorKind, master_seed: impl Into<Vec<u8>>) -> Result<Self> {
        let master_seed = master_seed.into();
        let file = match &kind {
            GeneratorKind::File(path) => Some(read_file(path)?),
            _ => {
                if master_seed.is_empty() {
                    return config("master seed must not be empty");
                }
                None
            }
        };
        Ok(Self {
            kind,
            master_seed,
            file,
        })
    }

    pub fn mt19937(master_seed: impl Into<Vec<u8>>) -> Result<Self> {
        Self::new(GeneratorKind::Mt19937, master_seed)
    }

    pub fn sha1(master_seed: impl Into<Vec<u8>>) -> Result<Self> {
        Self::new(GeneratorKind::Sha1, master_seed)
    }

    /// A source over in-memory bytes, treated exactly like a file.
    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> Self {
        Self {
            kind: GeneratorKind::File(PathBuf::from("<memory>")),
            master_seed: Vec::new(),
            file: Some(Arc::from(bytes.into())),
        }
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn master_seed(&self) -> &[u8] {
        &self.master_seed
    }

    /// Whether independent streams can be opened for any index. Files can
    /// only be read sequentially.
    pub fn is_splittable(&self) -> bool {
        self.file.is_none()
    }

    /// Opens stream `stream_index` positioned at its first bit.
    pub fn open(&self, stream_index: u64) -> Result<BitSource> {
        let words = match &self.kind {
            GeneratorKind::Mt19937 => {
                let mut key = self.master_seed.clone();
                key.extend_from_slice(&stream_index.to_be_bytes());
                let digest = Sha1::digest(&key);
                let seed = u32::from_be_bytes([digest[16], digest[17], digest[18], digest[19]]);
                WordSource::Mt(Box::new(Mt19937::new(seed)))
            }
            GeneratorKind::Sha1 => {
                let mut key = self.master_seed.clone();
                key.extend_from_slice(&stream_index.to_be_bytes());
                WordSource::Sha1(Sha1Counter::new(key)?)
            }
            GeneratorKind::File(path) => {
                if stream_index != 0 {
                    return config(format!(
                        "file source {} has a single stream; index {stream_index} requested",
                        path.display()
                    ));
                }
                let data = self.file.clone().expect("file sources are loaded eagerly");
                WordSource::File(FileWords { data, offset: 0 })
            }
        };
        Ok(BitSource::from_words(words))
    }
}

fn read_file(path: &Path) -> Result<Arc<[u8]>> {
    let bytes = std::fs::read(path)?;
    Ok(Arc::from(bytes))
}

#[derive(Debug, Clone)]
struct FileWords {
    data: Arc<[u8]>,
    offset: usize,
}

#[derive(Debug, Clone)]
enum WordSource {
    Mt(Box<Mt19937>),
    Sha1(Sha1Counter),
    File(FileWords),
}

impl WordSource {
    /// Next chunk as `(bits left-aligned in a u32, bit count)`.
    #[inline]
    fn next_chunk(&mut self) -> Option<(u32, u32)> {
        match self {
            WordSource::Mt(mt) => Some((mt.next_u32(), 32)),
            WordSource::Sha1(g) => Some((g.next_u32(), 32)),
            WordSource::File(f) => {
                let rest = &f.data[f.offset..];
                match rest.len() {
                    0 => None,
                    len if len >= 4 => {
                        f.offset += 4;
                        Some((u32::from_be_bytes([rest[0], rest[1], rest[2], rest[3]]), 32))
                    }
                    len => {
                        let mut buf = [0u8; 4];
                        buf[..len].copy_from_slice(rest);
                        f.offset += len;
                        Some((u32::from_be_bytes(buf), 8 * len as u32))
                    }
                }
            }
        }
    }

    fn remaining_bits(&self) -> Option<u64> {
        match self {
            WordSource::File(f) => Some(8 * (f.data.len() - f.offset) as u64),
            _ => None,
        }
    }
}

/// A positioned, single-threaded reader over one deterministic bit stream.
#[derive(Debug, Clone)]
pub struct BitSource {
    words: WordSource,
    /// Unread bits, left-aligned.
    buf: u64,
    avail: u32,
    consumed: u64,
}

impl BitSource {
    fn from_words(words: WordSource) -> Self {
        Self {
            words,
            buf: 0,
            avail: 0,
            consumed: 0,
        }
    }

    /// Bits consumed so far. Peeked bits are not counted.
    pub fn bits_consumed(&self) -> u64 {
        self.consumed
    }

    /// Bits still available, or `None` for unbounded generators.
    pub fn remaining_bits(&self) -> Option<u64> {
        self.words
            .remaining_bits()
            .map(|r| r + u64::from(self.avail))
    }

    fn exhausted(&self, requested: u64) -> Error {
        Error::InsufficientInput {
            requested,
            available: self.remaining_bits().unwrap_or(0),
        }
    }

    #[inline]
    fn refill(&mut self) -> bool {
        debug_assert_eq!(self.avail, 0);
        match self.words.next_chunk() {
            Some((w, bits)) => {
                self.buf = u64::from(w) << 32;
                self.avail = bits;
                true
            }
            None => false,
        }
    }

    /// Returns the next bit without consuming it.
    #[inline]
    pub fn peek_bit(&mut self) -> Result<u8> {
        if self.avail == 0 && !self.refill() {
            return Err(self.exhausted(1));
        }
        Ok((self.buf >> 63) as u8)
    }

    #[inline]
    pub fn next_bit(&mut self) -> Result<u8> {
        let b = self.peek_bit()?;
        self.buf <<= 1;
        self.avail -= 1;
        self.consumed += 1;
        Ok(b)
    }

    /// Consumes the next `n` bits.
    pub fn take_bits(&mut self, n: usize) -> Result<BitBlock> {
        if let Some(rem) = self.remaining_bits() {
            if rem < n as u64 {
                return Err(Error::InsufficientInput {
                    requested: n as u64,
                    available: rem,
                });
            }
        }
        let mut bits = vec![0u8; n];
        let mut pos = 0;
        while pos < n {
            if self.avail == 0 && !self.refill() {
                return Err(self.exhausted(n as u64));
            }
            let k = (self.avail as usize).min(n - pos);
            let buf = self.buf;
            // fixed-width unpacking for whole words vectorizes
            if k == 32 {
                for (j, b) in bits[pos..pos + 32].iter_mut().enumerate() {
                    *b = ((buf >> (63 - j)) & 1) as u8;
                }
            } else {
                for (j, b) in bits[pos..pos + k].iter_mut().enumerate() {
                    *b = ((buf >> (63 - j)) & 1) as u8;
                }
            }
            self.buf = buf << k;
            self.avail -= k as u32;
            pos += k;
        }
        self.consumed += n as u64;
        Ok(BitBlock { bits })
    }

    /// Consumes 32 bits and maps them to `sum b_i 2^-i`, a real in `[0, 1)`.
    #[inline]
    pub fn uniform01(&mut self) -> Result<f64> {
        if self.avail == 0 {
            if let WordSource::Mt(mt) = &mut self.words {
                self.consumed += 32;
                return Ok(f64::from(mt.next_u32()) * TWO_POW_NEG_32);
            }
        }
        let mut w = 0u32;
        let mut need = 32u32;
        while need > 0 {
            if self.avail == 0 && !self.refill() {
                return Err(self.exhausted(u64::from(need)));
            }
            let k = self.avail.min(need);
            let top = (self.buf >> (64 - k)) as u32;
            w = if k == 32 { top } else { (w << k) | top };
            self.buf = if k == 64 { 0 } else { self.buf << k };
            self.avail -= k;
            need -= k;
        }
        self.consumed += 32;
        Ok(f64::from(w) * TWO_POW_NEG_32)
    }

    /// Consumes the maximal run of bits equal to `bit` starting at the
    /// current position and returns its length. The first bit that differs
    /// is left unread. Fails if the source ends before the run does.
    #[inline]
    pub fn consume_run(&mut self, bit: u8) -> Result<u64> {
        let mut len = 0u64;
        loop {
            if self.avail == 0 && !self.refill() {
                return Err(self.exhausted(1));
            }
            let pattern = if bit == 0 { self.buf } else { !self.buf };
            let run = pattern.leading_zeros().min(self.avail);
            len += u64::from(run);
            self.avail -= run;
            self.buf = if run == 64 { 0 } else { self.buf << run };
            self.consumed += u64::from(run);
            if self.avail > 0 {
                return Ok(len);
            }
        }
    }
}

/// A fixed-length sample of bits, each stored as a `0` or `1` byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBlock {
    bits: Vec<u8>,
}

impl BitBlock {
    /// Wraps raw bits; every element must be 0 or 1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return config("a bit block must hold at least one bit");
        }
        if bits.iter().any(|&b| b > 1) {
            return config("bit values must be 0 or 1");
        }
        Ok(Self { bits })
    }

    /// Expands bytes most-significant bit first.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bits = bytes
            .iter()
            .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1))
            .collect();
        Self::new(bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// The block with every bit inverted.
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| b ^ 1).collect(),
        }
    }
}

impl FromStr for BitBlock {
    type Err = Error;

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => config(format!("invalid bit character `{other}`")),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits)
    }
}

impl AsRef<[u8]> for BitBlock {
    fn as_ref(&self) -> &[u8] {
        &self.bits
    }
}
