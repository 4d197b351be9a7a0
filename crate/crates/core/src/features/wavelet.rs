//! Daubechies-4 (8-tap) discrete wavelet transform with periodic extension.

pub const WAVELET_LEVELS: usize = 4;

/// Decomposition low-pass filter, pywt `db4` ordering.
pub const DB4_DEC_LO: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

fn dec_hi() -> [f64; 8] {
    let mut hi = [0.0; 8];
    for (j, h) in hi.iter_mut().enumerate() {
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        *h = sign * DB4_DEC_LO[7 - j];
    }
    hi
}

/// One analysis step; an odd-length input is extended by repeating its last
/// sample so the periodic transform stays well defined.
fn dwt_step(x: &[f64], hi: &[f64; 8]) -> (Vec<f64>, Vec<f64>) {
    let mut ext;
    let x = if x.len() % 2 == 1 {
        ext = x.to_vec();
        ext.push(*x.last().unwrap());
        &ext[..]
    } else {
        x
    };
    let n = x.len() as isize;
    let half = x.len() / 2;
    let mut a = Vec::with_capacity(half);
    let mut d = Vec::with_capacity(half);
    for k in 0..half as isize {
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..8isize {
            let v = x[(2 * k + 4 - j).rem_euclid(n) as usize];
            sa += DB4_DEC_LO[j as usize] * v;
            sd += hi[j as usize] * v;
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

/// Squared-coefficient energy per level, ordered `[a4, d4, d3, d2, d1]`.
/// Energy is preserved exactly when the length is a multiple of 2^4.
pub fn wavedec_energies(x: &[f64]) -> [f64; WAVELET_LEVELS + 1] {
    let hi = dec_hi();
    let mut out = [0.0; WAVELET_LEVELS + 1];
    let mut approx = x.to_vec();
    for level in 0..WAVELET_LEVELS {
        if approx.is_empty() {
            break;
        }
        let (a, d) = dwt_step(&approx, &hi);
        out[WAVELET_LEVELS - level] = d.iter().map(|v| v * v).sum();
        approx = a;
    }
    out[0] = approx.iter().map(|v| v * v).sum();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_decomposition() {
        // energies of pywt.wavedec(x, 'db4', mode='periodization', level=4)
        let x: Vec<f64> = (0..32).map(|i| (i as f64 * 0.3).sin() + 0.05 * i as f64).collect();
        let want = [
            31.672074857124972,
            12.169765930227745,
            6.324217202171388,
            1.8416277268061751,
            0.24786923841261518,
        ];
        let got = wavedec_energies(&x);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-9 * w, "{g} vs {w}");
        }
    }

    #[test]
    fn filters_are_orthonormal() {
        let hi = dec_hi();
        let norm: f64 = DB4_DEC_LO.iter().map(|v| v * v).sum();
        let cross: f64 = DB4_DEC_LO.iter().zip(&hi).map(|(a, b)| a * b).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(cross.abs() < 1e-12);
    }

    #[test]
    fn energy_is_preserved() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for n in [16, 64, 512, 3072] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let total: f64 = x.iter().map(|v| v * v).sum();
            let e: f64 = wavedec_energies(&x).iter().sum();
            assert!((e - total).abs() <= 0.01 * total);
            assert!((e - total).abs() <= 1e-9 * total);
        }
    }
}
