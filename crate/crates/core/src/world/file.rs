//! World container: `"DTGW" | version u32 | resolution f64 | width u32 |
//! height u32 | row-major traversable bitmask (LSB first, padded to a byte)`.
//! All numbers little-endian. The clearance field is rebuilt on load.

use std::io::{Read, Write};

use super::GridWorld;
use crate::error::{Error, Result};

pub const WORLD_MAGIC: &[u8; 4] = b"DTGW";
pub const WORLD_VERSION: u32 = 1;

fn bad(detail: impl Into<String>) -> Error {
    Error::Format {
        kind: "world",
        detail: detail.into(),
    }
}

pub fn write_world(world: &GridWorld, w: &mut impl Write) -> Result<()> {
    w.write_all(WORLD_MAGIC)?;
    w.write_all(&WORLD_VERSION.to_le_bytes())?;
    w.write_all(&world.resolution().to_le_bytes())?;
    w.write_all(&(world.width() as u32).to_le_bytes())?;
    w.write_all(&(world.height() as u32).to_le_bytes())?;
    let mut bytes = vec![0u8; world.traversable().len().div_ceil(8)];
    for (i, &t) in world.traversable().iter().enumerate() {
        if t {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_world(r: &mut impl Read) -> Result<GridWorld> {
    let mut head = [0u8; 24];
    r.read_exact(&mut head)
        .map_err(|e| bad(format!("truncated header: {e}")))?;
    if &head[..4] != WORLD_MAGIC {
        return Err(Error::BadMagic {
            kind: "world",
            found: head[..4].try_into().unwrap(),
        });
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != WORLD_VERSION {
        return Err(Error::Version {
            kind: "world",
            expected: WORLD_VERSION,
            found: version,
        });
    }
    let resolution = f64::from_le_bytes(head[8..16].try_into().unwrap());
    let width = u32::from_le_bytes(head[16..20].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(head[20..24].try_into().unwrap()) as usize;
    let cells = width
        .checked_mul(height)
        .filter(|&c| c > 0 && c <= 1 << 28)
        .ok_or_else(|| bad(format!("implausible size {width}x{height}")))?;
    let mut bytes = vec![0u8; cells.div_ceil(8)];
    r.read_exact(&mut bytes)
        .map_err(|e| bad(format!("truncated bitmask: {e}")))?;
    let traversable = (0..cells).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
    GridWorld::from_traversable(resolution, width, height, traversable)
}
