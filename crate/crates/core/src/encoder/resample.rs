use super::ChannelVolume;
use crate::error::{Error, Result};

/// Trilinear sample of channel `c` at a continuous voxel position. Neighbors
/// outside the grid contribute zero.
pub fn sample_trilinear(v: &ChannelVolume, c: usize, p: [f64; 3]) -> f32 {
    let dims = v.dims();
    let mut base = [0isize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..3 {
        if !(p[a] > -1.0 && p[a] < dims[a] as f64) {
            return 0.0;
        }
        let f = p[a].floor();
        base[a] = f as isize;
        frac[a] = p[a] - f;
    }
    let ch = v.channel(c);
    let mut acc = 0.0f64;
    for corner in 0..8 {
        let mut idx = [0usize; 3];
        let mut w = 1.0;
        let mut inside = true;
        for a in 0..3 {
            let step = (corner >> (2 - a)) & 1;
            let i = base[a] + step as isize;
            w *= if step == 1 { frac[a] } else { 1.0 - frac[a] };
            if i < 0 || i >= dims[a] as isize {
                inside = false;
            } else {
                idx[a] = i as usize;
            }
        }
        if inside && w != 0.0 {
            acc += w * ch[(idx[0] * dims[1] + idx[1]) * dims[2] + idx[2]] as f64;
        }
    }
    acc as f32
}

/// Channelwise trilinear resize with corner-aligned sampling: target voxel
/// `i` reads source position `i * (n_src - 1) / (n_dst - 1)`.
pub fn resample(v: &ChannelVolume, target: [usize; 3]) -> Result<ChannelVolume> {
    if target.iter().any(|&d| d < 2) {
        return Err(Error::Shape(format!("resample target {target:?} must be >= 2 per axis")));
    }
    if target == v.dims() {
        return Ok(v.clone());
    }
    let src = v.dims();
    let ratio: [f64; 3] = std::array::from_fn(|a| (src[a] - 1) as f64 / (target[a] - 1) as f64);
    let mut out = ChannelVolume::zeros(target, v.channels());
    for c in 0..v.channels() {
        for x in 0..target[0] {
            for y in 0..target[1] {
                for z in 0..target[2] {
                    let p = [x as f64 * ratio[0], y as f64 * ratio[1], z as f64 * ratio[2]];
                    out.set(c, x, y, z, sample_trilinear(v, c, p));
                }
            }
        }
    }
    Ok(out)
}

/// Sums out the depth axis, leaving a `W x H x 1` volume.
pub fn collapse_depth(v: &ChannelVolume) -> ChannelVolume {
    let [w, h, d] = v.dims();
    let mut out = ChannelVolume::zeros([w, h, 1], v.channels());
    for (dst, column) in out.data_mut().iter_mut().zip(v.data().chunks(d)) {
        *dst = column.iter().sum::<f32>();
    }
    out
}
