//! 2D Morton (Z-order) encoding used for spatially coherent orderings.

fn spread(x: u32) -> u64 {
    let mut x = x as u64;
    x = (x | (x << 16)) & 0x0000_ffff_0000_ffff;
    x = (x | (x << 8)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

/// Interleaves two 32-bit coordinates into a 64-bit Z-order code.
pub fn encode(x: u32, y: u32) -> u64 {
    spread(x) | (spread(y) << 1)
}

/// Z-order code of a placement point relative to the die origin. Coordinates
/// are clamped to the die and quantized to 32 bits.
pub fn point_code(p: crate::model::Point, die: crate::model::Die) -> u64 {
    let x = (p.x - die.x0).clamp(0, u32::MAX as i64) as u32;
    let y = (p.y - die.y0).clamp(0, u32::MAX as i64) as u32;
    encode(x, y)
}
