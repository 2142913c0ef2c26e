//! Minimal complex FFT: iterative radix-2 for power-of-two lengths and
//! Bluestein's chirp-z reduction for everything else. No external FFT crate
//! so the core stays `no_std`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::math;

pub(crate) type C64 = Complex<f64>;

fn unit(theta: f64) -> C64 {
    C64::new(math::cos(theta), math::sin(theta))
}

struct Pow2Plan {
    n: usize,
    /// Forward twiddles `exp(-2πi k/n)` for `k < n/2`.
    twiddles: Vec<C64>,
}

impl Pow2Plan {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| unit(-2.0 * core::f64::consts::PI * k as f64 / n as f64))
            .collect();
        Self { n, twiddles }
    }

    fn forward(&self, data: &mut [C64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        // Bit-reversal permutation.
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            let mut start = 0;
            while start < n {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
                start += len;
            }
            len <<= 1;
        }
    }
}

struct Bluestein {
    n: usize,
    m: usize,
    plan: Pow2Plan,
    /// `exp(-iπ j²/n)`, reduced mod 2n for accuracy.
    chirp: Vec<C64>,
    /// FFT of the zero-padded symmetric conjugate chirp.
    vhat: Vec<C64>,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let plan = Pow2Plan::new(m);
        let chirp: Vec<C64> = (0..n)
            .map(|j| {
                let q = ((j as u64 * j as u64) % (2 * n as u64)) as f64;
                unit(-core::f64::consts::PI * q / n as f64)
            })
            .collect();
        let mut v = vec![C64::new(0.0, 0.0); m];
        for j in 0..n {
            let c = chirp[j].conj();
            v[j] = c;
            if j != 0 {
                v[m - j] = c;
            }
        }
        plan.forward(&mut v);
        Self {
            n,
            m,
            plan,
            chirp,
            vhat: v,
        }
    }

    fn forward(&self, data: &mut [C64]) {
        let (n, m) = (self.n, self.m);
        let mut u = vec![C64::new(0.0, 0.0); m];
        for j in 0..n {
            u[j] = data[j] * self.chirp[j];
        }
        self.plan.forward(&mut u);
        for (uj, vj) in u.iter_mut().zip(self.vhat.iter()) {
            *uj *= *vj;
        }
        // Inverse FFT of length m via conjugation.
        for x in u.iter_mut() {
            *x = x.conj();
        }
        self.plan.forward(&mut u);
        let scale = 1.0 / m as f64;
        for (k, out) in data.iter_mut().enumerate().take(n) {
            *out = u[k].conj() * scale * self.chirp[k];
        }
    }
}

enum Plan {
    Pow2(Pow2Plan),
    Chirp(Box<Bluestein>),
}

/// Forward/inverse DFT plan for a fixed length.
pub(crate) struct Fft {
    n: usize,
    plan: Plan,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "FFT length must be at least 2");
        let plan = if n.is_power_of_two() {
            Plan::Pow2(Pow2Plan::new(n))
        } else {
            Plan::Chirp(Box::new(Bluestein::new(n)))
        };
        Self { n, plan }
    }

    /// Unnormalized forward DFT, in place.
    pub fn forward(&self, data: &mut [C64]) {
        debug_assert_eq!(data.len(), self.n);
        match &self.plan {
            Plan::Pow2(p) => p.forward(data),
            Plan::Chirp(b) => b.forward(data),
        }
    }

    /// Inverse DFT with 1/n normalization, in place.
    pub fn inverse(&self, data: &mut [C64]) {
        for x in data.iter_mut() {
            *x = x.conj();
        }
        self.forward(data);
        let scale = 1.0 / self.n as f64;
        for x in data.iter_mut() {
            *x = x.conj() * scale;
        }
    }
}
