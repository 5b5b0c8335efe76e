//! Binary descriptor files.
//!
//! Layout, all integers little-endian:
//!
//! | field         | type      |
//! |---------------|-----------|
//! | magic         | `b"DAPT"` |
//! | version       | u16       |
//! | scheme tag    | u8        |
//! | joints `J`    | u16       |
//! | code chans `C`| u8        |
//! | W, H, D       | u16 each  |
//! | channel count | u32       |
//! | voxel data    | f32, channel-major, depth fastest |
//! | checksum      | u64, FNV-1a over the voxel data bytes |

use std::hash::Hasher;
use std::path::Path;

use crate::encoder::{ChannelVolume, DAPotion, Scheme};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const MAGIC: &[u8; 4] = b"DAPT";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 2 + 1 + 6 + 4;

pub fn checksum(bytes: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn encode_descriptor(d: &DAPotion) -> Result<Vec<u8>> {
    let dims = d.dims();
    let narrow = |v: usize, what: &str| {
        u16::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds u16")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + d.volume.data().len() * 4 + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(d.scheme.tag());
    out.extend_from_slice(&narrow(d.joints, "joint count")?.to_le_bytes());
    out.push(
        u8::try_from(d.code_channels)
            .map_err(|_| Error::Format(format!("code channels {} exceed u8", d.code_channels)))?,
    );
    for &n in &dims {
        out.extend_from_slice(&narrow(n, "grid dim")?.to_le_bytes());
    }
    out.extend_from_slice(&(d.channels() as u32).to_le_bytes());
    let payload_start = out.len();
    for v in d.volume.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let sum = checksum(&out[payload_start..]);
    out.extend_from_slice(&sum.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated descriptor".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_descriptor(bytes: &[u8]) -> Result<DAPotion> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let tag = cur.u8()?;
    let scheme =
        Scheme::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown scheme tag {tag}")))?;
    let joints = cur.u16()? as usize;
    let code_channels = cur.u8()? as usize;
    let dims = [cur.u16()? as usize, cur.u16()? as usize, cur.u16()? as usize];
    let channels = cur.u32()? as usize;
    let count = channels
        .checked_mul(dims.iter().product())
        .ok_or_else(|| Error::Format("voxel count overflows".into()))?;
    let payload = cur.take(count.checked_mul(4).ok_or_else(|| Error::Format("payload too large".into()))?)?;
    let stored = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    if checksum(payload) != stored {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let volume = ChannelVolume::from_data(dims, channels, data)?;
    DAPotion::new(scheme, joints, code_channels, volume).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_descriptor(path: &Path, d: &DAPotion) -> Result<()> {
    write_atomic(path, &encode_descriptor(d)?)
}

pub fn read_descriptor(path: &Path) -> Result<DAPotion> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut d = decode_descriptor(&bytes)?;
    d.source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DAPotion {
        let n = 2 * 3 * 4 * 5;
        let data = (0..n).map(|i| i as f32 / n as f32).collect();
        let vol = ChannelVolume::from_data([3, 4, 5], 2, data).unwrap();
        DAPotion::new(Scheme::U, 1, 2, vol).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode_descriptor(&sample()).unwrap();
        assert_eq!(&bytes[..4], b"DAPT");
        assert_eq!(bytes.len(), HEADER_LEN + 120 * 4 + 8);
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), VERSION);
        assert_eq!(bytes[6], Scheme::U.tag());
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
    }

    #[test]
    fn corruption_detected() {
        let mut bytes = encode_descriptor(&sample()).unwrap();
        let mid = HEADER_LEN + 10;
        bytes[mid] ^= 0x40;
        assert!(decode_descriptor(&bytes).unwrap_err().to_string().contains("checksum"));
        let bytes = encode_descriptor(&sample()).unwrap();
        assert!(decode_descriptor(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_descriptor(&extra).is_err());
        let mut bad_magic = bytes;
        bad_magic[0] = b'X';
        assert!(decode_descriptor(&bad_magic).is_err());
    }

    #[test]
    fn round_trip_bytes() {
        let bytes = encode_descriptor(&sample()).unwrap();
        let back = decode_descriptor(&bytes).unwrap();
        assert_eq!(back.volume, sample().volume);
        assert_eq!(encode_descriptor(&back).unwrap(), bytes);
    }
}
