//! Flat binary checkpoint of hyperparameters and model parameters.
//!
//! All integers and floats are little-endian.
//!
//! | field            | type             |
//! |------------------|------------------|
//! | magic            | `b"ALOHALSM"`    |
//! | version          | `u32` (= 1)      |
//! | input width      | `u32`            |
//! | classes          | `u32`            |
//! | layer count `L`  | `u32`            |
//! | hidden sizes     | `L x u32`        |
//! | window           | `u32`            |
//! | learning rate    | `f64`            |
//! | dropout rate     | `f64`            |
//! | minibatch        | `u32`            |
//! | buffer size      | `u32`            |
//! | param count `P`  | `u64`            |
//! | parameters       | `P x f64`        |
//!
//! Parameters follow the in-memory layout: for each layer the `4H x (in + H)`
//! gate matrix (row-major, gate blocks input/forget/candidate/output) then
//! its `4H` bias; finally the `classes x H` head matrix and `classes` bias.

use std::io::{Read, Write};

use crate::error::NeuralError;
use crate::hyper::HyperParams;
use crate::model::{Architecture, LstmModel};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ALOHALSM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: LstmModel,
    pub hyper: HyperParams,
}

fn to_u32(v: usize, what: &str) -> Result<u32, NeuralError> {
    u32::try_from(v).map_err(|_| NeuralError::Checkpoint(format!("{what} {v} does not fit in u32")))
}

pub fn write_checkpoint<W: Write>(mut out: W, checkpoint: &Checkpoint) -> Result<(), NeuralError> {
    let arch = checkpoint.model.architecture();
    let hp = &checkpoint.hyper;
    let mut buf = Vec::with_capacity(64 + 8 * arch.param_count());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&to_u32(arch.input_width, "input width")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(arch.classes, "classes")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(arch.layer_sizes.len(), "layer count")?.to_le_bytes());
    for &h in &arch.layer_sizes {
        buf.extend_from_slice(&to_u32(h, "hidden size")?.to_le_bytes());
    }
    buf.extend_from_slice(&to_u32(hp.window, "window")?.to_le_bytes());
    buf.extend_from_slice(&hp.learning_rate.to_le_bytes());
    buf.extend_from_slice(&hp.dropout_rate.to_le_bytes());
    buf.extend_from_slice(&to_u32(hp.minibatch, "minibatch")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(hp.buffer_size, "buffer size")?.to_le_bytes());
    let params = checkpoint.model.params();
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NeuralError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            NeuralError::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<usize, NeuralError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
    fn u64(&mut self) -> Result<u64, NeuralError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64, NeuralError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Checkpoint, NeuralError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(8)? != CHECKPOINT_MAGIC {
        return Err(NeuralError::Checkpoint("bad magic".into()));
    }
    let version = cur.u32()? as u32;
    if version != CHECKPOINT_VERSION {
        return Err(NeuralError::Checkpoint(format!("unsupported version {version}")));
    }
    let input_width = cur.u32()?;
    let classes = cur.u32()?;
    let layers = cur.u32()?;
    if layers > 1024 {
        return Err(NeuralError::Checkpoint(format!("implausible layer count {layers}")));
    }
    let layer_sizes = (0..layers).map(|_| cur.u32()).collect::<Result<Vec<_>, _>>()?;
    let hyper = HyperParams {
        window: cur.u32()?,
        learning_rate: cur.f64()?,
        dropout_rate: cur.f64()?,
        minibatch: cur.u32()?,
        buffer_size: cur.u32()?,
    };
    let arch = Architecture::new(input_width, layer_sizes, classes)?;
    let count = cur.u64()?;
    if count != arch.param_count() as u64 {
        return Err(NeuralError::Checkpoint(format!(
            "parameter count {count} does not match architecture ({})",
            arch.param_count()
        )));
    }
    let params = (0..count).map(|_| cur.f64()).collect::<Result<Vec<_>, _>>()?;
    if cur.pos != bytes.len() {
        return Err(NeuralError::Checkpoint(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    let model = LstmModel::from_params(arch, params)?;
    if !model.is_finite() {
        return Err(NeuralError::Checkpoint("non-finite parameter".into()));
    }
    Ok(Checkpoint { model, hyper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let arch = Architecture::new(3, vec![4, 2], 6).unwrap();
        Checkpoint {
            model: LstmModel::init(arch, &mut ChaCha8Rng::seed_from_u64(5)),
            hyper: HyperParams::default(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &ck).unwrap();
        assert_eq!(&bytes[..8], CHECKPOINT_MAGIC);
        assert_eq!(bytes.len(), 8 + 4 * 4 + 2 * 4 + 4 + 8 + 8 + 4 + 4 + 8 + 8 * ck.model.params().len());
        assert_eq!(read_checkpoint(bytes.as_slice()).unwrap(), ck);
    }

    #[test]
    fn header_is_little_endian() {
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &sample()).unwrap();
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[3, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &[6, 0, 0, 0]);
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &sample()).unwrap();
        assert!(read_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(bad.as_slice()).is_err());
        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(read_checkpoint(bad.as_slice()).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(read_checkpoint(long.as_slice()).is_err());
    }
}
