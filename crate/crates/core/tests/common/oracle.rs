//! Brute-force reference encoder, written against the defining formulas with
//! plain nested loops in f64. Shares no code with the library encoder.

#![allow(dead_code)]

/// Code vector from the interval construction: the clip is split into
/// `C - 1` equal time intervals and inside interval `k` the two-channel
/// ramp runs from channel `C - k` (start) to channel `C - k - 1` (end).
pub fn interval_code(t: usize, frames: usize, channels: usize) -> Vec<f64> {
    let s = (t - 1) as f64 / (frames - 1) as f64;
    let mut o = vec![0.0; channels];
    if channels == 2 {
        o[0] = s;
        o[1] = 1.0 - s;
        return o;
    }
    let pos = s * (channels - 1) as f64;
    let k = (pos.floor() as usize).min(channels - 2);
    let u = pos - k as f64;
    // 1-based channel C-k is index C-k-1.
    o[channels - k - 1] += 1.0 - u;
    o[channels - k - 2] += u;
    o
}

pub struct OracleOut {
    /// `[joint][channel][x][y][z]` flattened per joint block as in the library.
    pub data: Vec<f64>,
}

/// `positions[t][j]` are voxel coordinates. Returns the stacked descriptor
/// for scheme "u", "i", "n" or "nui".
pub fn brute_force_encode(
    positions: &[Vec<[f64; 3]>],
    dims: [usize; 3],
    sigma: f64,
    truncation: f64,
    channels: usize,
    epsilon: f64,
    scheme: &str,
) -> Vec<f64> {
    let frames = positions.len();
    let joints = positions[0].len();
    let [w, h, d] = dims;
    let nvox = w * h * d;
    let idx = |x: usize, y: usize, z: usize| (x * h + y) * d + z;
    let mut out = Vec::new();
    for j in 0..joints {
        let mut s = vec![vec![0.0f64; nvox]; channels];
        for x in 0..w {
            for y in 0..h {
                for z in 0..d {
                    for t in 1..=frames {
                        let p = positions[t - 1][j];
                        let dist2 = (x as f64 - p[0]).powi(2)
                            + (y as f64 - p[1]).powi(2)
                            + (z as f64 - p[2]).powi(2);
                        let heat = if dist2 <= (truncation * sigma).powi(2) {
                            (-dist2 / (2.0 * sigma * sigma)).exp()
                        } else {
                            0.0
                        };
                        let o = interval_code(t, frames, channels);
                        for c in 0..channels {
                            s[c][idx(x, y, z)] += heat * o[c];
                        }
                    }
                }
            }
        }
        let mut u = s.clone();
        for ch in u.iter_mut() {
            let max = ch.iter().cloned().fold(0.0, f64::max);
            if max > 0.0 {
                for v in ch.iter_mut() {
                    *v /= max;
                }
            }
        }
        let mut i = vec![0.0; nvox];
        for v in 0..nvox {
            for c in 0..channels {
                i[v] += u[c][v];
            }
        }
        let mut n = u.clone();
        for c in 0..channels {
            for v in 0..nvox {
                n[c][v] = u[c][v] / (epsilon + i[v]);
            }
        }
        match scheme {
            "u" => u.iter().for_each(|ch| out.extend(ch)),
            "i" => out.extend(&i),
            "n" => n.iter().for_each(|ch| out.extend(ch)),
            "nui" => {
                n.iter().for_each(|ch| out.extend(ch));
                u.iter().for_each(|ch| out.extend(ch));
                out.extend(&i);
            }
            other => panic!("unknown scheme {other}"),
        }
    }
    out
}
