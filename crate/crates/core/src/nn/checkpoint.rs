//! Bit-exact training state snapshots.
//!
//! Byte layout (all integers little-endian):
//!
//! ```text
//! "ORDLAB01"
//! u64 metadata length, then metadata:
//!     u8 element width (4 or 8), u64 step, u64 epoch,
//!     f64 learning rate, f64 momentum, f64 weight decay, u8 nesterov,
//!     [u8; 32] rng key, u64 rng stream, u128 rng word position,
//!     u32 parameter tensor count
//! per tensor (parameters, then velocities): u64 blob length, then
//!     u32 rank, u64 extents..., element values
//! [u8; 32] SHA-256 of every preceding byte
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::network::Network;
use super::optim::OptimizerState;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{Rng, RngState};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"ORDLAB01";
pub const HASH_LEN: usize = 32;

pub type ContentHash = [u8; HASH_LEN];

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<S> {
    pub params: Vec<Tensor<S>>,
    pub optimizer: OptimizerState<S>,
    pub rng: RngState,
    pub step: u64,
    pub epoch: u64,
}

impl<S: Real> Checkpoint<S> {
    pub fn snapshot(net: &Network<S>, opt: &OptimizerState<S>, rng: &Rng, step: u64, epoch: u64) -> Self {
        Checkpoint {
            params: net.params().to_vec(),
            optimizer: opt.clone(),
            rng: RngState::capture(rng),
            step,
            epoch,
        }
    }

    /// Loads the parameters into `net` and hands back the optimizer and
    /// generator exactly as they were captured.
    pub fn restore_into(&self, net: &mut Network<S>) -> Result<(OptimizerState<S>, Rng)> {
        net.set_params(self.params.clone())?;
        net.clear_tape();
        Ok((self.optimizer.clone(), self.rng.restore()))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let mut meta = Vec::new();
        meta.push(S::BYTES as u8);
        meta.extend_from_slice(&self.step.to_le_bytes());
        meta.extend_from_slice(&self.epoch.to_le_bytes());
        meta.extend_from_slice(&self.optimizer.learning_rate.to_le_bytes());
        meta.extend_from_slice(&self.optimizer.momentum.to_le_bytes());
        meta.extend_from_slice(&self.optimizer.weight_decay.to_le_bytes());
        meta.push(self.optimizer.nesterov as u8);
        meta.extend_from_slice(&self.rng.seed);
        meta.extend_from_slice(&self.rng.stream.to_le_bytes());
        meta.extend_from_slice(&self.rng.word_pos.to_le_bytes());
        meta.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        for t in self.params.iter().chain(&self.optimizer.velocity) {
            let mut blob = Vec::with_capacity(4 + 8 * t.shape().len() + S::BYTES * t.len());
            blob.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &d in t.shape() {
                blob.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in t.data() {
                v.write_le(&mut blob);
            }
            out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
            out.extend_from_slice(&blob);
        }
        let hash = sha256(&out);
        out.extend_from_slice(&hash);
        out
    }

    pub fn content_hash(&self) -> ContentHash {
        let bytes = self.encode();
        let mut h = [0u8; HASH_LEN];
        h.copy_from_slice(&bytes[bytes.len() - HASH_LEN..]);
        h
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 8 + HASH_LEN {
            return Err(Error::Integrity(format!(
                "truncated checkpoint: {} bytes",
                bytes.len()
            )));
        }
        let (body, stored) = bytes.split_at(bytes.len() - HASH_LEN);
        let computed = sha256(body);
        if computed[..] != stored[..] {
            return Err(Error::Integrity(format!(
                "content hash mismatch: stored {}, computed {}",
                hex(stored),
                hex(&computed)
            )));
        }
        if &body[..MAGIC.len()] != MAGIC {
            return Err(Error::Integrity("bad magic bytes".into()));
        }
        let mut r = Reader {
            bytes: body,
            pos: MAGIC.len(),
        };
        let meta_len = r.u64()? as usize;
        let meta_end = r.pos + meta_len;
        let width = r.u8()? as usize;
        if width != S::BYTES {
            return Err(Error::Integrity(format!(
                "checkpoint holds {width}-byte values, expected {}",
                S::BYTES
            )));
        }
        let step = r.u64()?;
        let epoch = r.u64()?;
        let learning_rate = f64::from_bits(r.u64()?);
        let momentum = f64::from_bits(r.u64()?);
        let weight_decay = f64::from_bits(r.u64()?);
        let nesterov = r.u8()? != 0;
        let mut seed = [0u8; 32];
        seed.copy_from_slice(r.take(32)?);
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
        let count = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        if r.pos != meta_end {
            return Err(Error::Integrity("metadata length mismatch".into()));
        }
        let mut tensors = Vec::with_capacity(2 * count);
        for _ in 0..2 * count {
            let blob_len = r.u64()? as usize;
            let end = r.pos + blob_len;
            let rank = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64()? as usize);
            }
            let n: usize = shape.iter().product();
            let raw = r.take(n * S::BYTES)?;
            let data = raw.chunks_exact(S::BYTES).map(S::read_le).collect();
            if r.pos != end {
                return Err(Error::Integrity("tensor blob length mismatch".into()));
            }
            tensors.push(Tensor::from_vec(&shape, data).map_err(|e| Error::Integrity(format!("{e}")))?);
        }
        if r.pos != body.len() {
            return Err(Error::Integrity("trailing bytes before hash".into()));
        }
        let velocity = tensors.split_off(count);
        Ok(Checkpoint {
            params: tensors,
            optimizer: OptimizerState {
                learning_rate,
                momentum,
                weight_decay,
                nesterov,
                velocity,
            },
            rng: RngState {
                seed,
                stream,
                word_pos,
            },
            step,
            epoch,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Integrity(format!(
                "unexpected end of checkpoint at byte {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn sha256(bytes: &[u8]) -> ContentHash {
    let digest = Sha256::digest(bytes);
    let mut out = [0u8; HASH_LEN];
    out.copy_from_slice(&digest);
    out
}

pub fn hex(bytes: &[u8]) -> String {
    const DIGITS: &[u8; 16] = b"0123456789abcdef";
    let mut s = String::with_capacity(bytes.len() * 2);
    for &b in bytes {
        s.push(DIGITS[(b >> 4) as usize] as char);
        s.push(DIGITS[(b & 15) as usize] as char);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, ModelSpec};
    use crate::rng::stream;
    use rand::RngCore;

    fn fixture() -> Checkpoint<f32> {
        let spec = ModelSpec::mlp(3, &[4], 2, Activation::Relu);
        let mut rng = stream(11, &[]);
        let net = Network::<f32>::init(&spec, &mut rng).unwrap();
        let mut opt = OptimizerState::new(net.params(), 0.05, 0.9, 1e-4, true).unwrap();
        opt.velocity[0].data_mut()[1] = 0.125;
        rng.next_u64();
        Checkpoint::snapshot(&net, &opt, &rng, 17, 2)
    }

    #[test]
    fn encode_decode_is_identity() {
        let ck = fixture();
        let bytes = ck.encode();
        assert_eq!(&bytes[..8], MAGIC);
        let back = Checkpoint::<f32>::decode(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.encode(), bytes);
        assert_eq!(back.content_hash(), ck.content_hash());
    }

    #[test]
    fn truncated_bytes_fail_integrity() {
        let bytes = fixture().encode();
        for cut in [bytes.len() - 1, bytes.len() / 2, 10] {
            assert!(matches!(
                Checkpoint::<f32>::decode(&bytes[..cut]),
                Err(Error::Integrity(_))
            ));
        }
    }

    #[test]
    fn flipped_bit_reports_hash_mismatch() {
        let mut bytes = fixture().encode();
        bytes[40] ^= 1;
        match Checkpoint::<f32>::decode(&bytes) {
            Err(Error::Integrity(msg)) => assert!(msg.contains("hash mismatch")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn width_mismatch_rejected() {
        let bytes = fixture().encode();
        assert!(matches!(
            Checkpoint::<f64>::decode(&bytes),
            Err(Error::Integrity(_))
        ));
    }
}
