use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;

pub const WORDS: usize = 4;
pub const MAX_QUBITS: usize = 64 * WORDS;

/// Fixed-width bitset over qubits; bit `i` is qubit `i`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Bits(pub [u64; WORDS]);

impl Bits {
    pub const ZERO: Bits = Bits([0; WORDS]);

    pub fn single(i: usize) -> Self {
        let mut b = Self::ZERO;
        b.set(i);
        b
    }

    /// Bits `0..n` set.
    pub fn low(n: usize) -> Self {
        let mut b = Self::ZERO;
        for w in 0..WORDS {
            let lo = 64 * w;
            if n >= lo + 64 {
                b.0[w] = u64::MAX;
            } else if n > lo {
                b.0[w] = (1u64 << (n - lo)) - 1;
            }
        }
        b
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn xor(self, o: Bits) -> Bits {
        let mut r = self;
        for w in 0..WORDS {
            r.0[w] ^= o.0[w];
        }
        r
    }

    #[inline]
    pub fn and(self, o: Bits) -> Bits {
        let mut r = self;
        for w in 0..WORDS {
            r.0[w] &= o.0[w];
        }
        r
    }

    #[inline]
    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    /// Highest set bit plus one.
    pub fn width(&self) -> usize {
        for w in (0..WORDS).rev() {
            if self.0[w] != 0 {
                return 64 * w + 64 - self.0[w].leading_zeros() as usize;
            }
        }
        0
    }

    pub fn low_word(&self) -> u64 {
        self.0[0]
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::from("0x");
        let mut started = false;
        for w in (0..WORDS).rev() {
            if started {
                s.push_str(&format!("{:016x}", self.0[w]));
            } else if self.0[w] != 0 || w == 0 {
                s.push_str(&format!("{:x}", self.0[w]));
                started = true;
            }
        }
        s
    }

    pub fn from_hex(s: &str) -> Option<Bits> {
        let digits = s.trim().trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() || digits.len() > 16 * WORDS {
            return None;
        }
        let mut b = Bits::ZERO;
        let bytes = digits.as_bytes();
        for (w, chunk) in bytes.rchunks(16).enumerate() {
            let text = std::str::from_utf8(chunk).ok()?;
            b.0[w] = u64::from_str_radix(text, 16).ok()?;
        }
        Some(b)
    }
}

impl Ord for Bits {
    fn cmp(&self, other: &Self) -> Ordering {
        for w in (0..WORDS).rev() {
            match self.0[w].cmp(&other.0[w]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Hermitian Pauli string `i^{|x∧z|} X^x Z^z`, so a qubit with both bits set carries `Y`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Debug)]
pub struct PauliString {
    pub x: Bits,
    pub z: Bits,
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.z.cmp(&other.z).then(self.x.cmp(&other.x))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PauliString {
    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Product `self · other = i^k · out`; returns `(out, k mod 4)`.
    pub fn mul(&self, other: &PauliString) -> (PauliString, u8) {
        let out = PauliString { x: self.x.xor(other.x), z: self.z.xor(other.z) };
        let k = self.x.and(self.z).count_ones()
            + other.x.and(other.z).count_ones()
            + 2 * self.z.and(other.x).count_ones()
            + 4 * WORDS as u32 * 64
            - out.x.and(out.z).count_ones();
        (out, (k % 4) as u8)
    }

    /// Parse a label such as `"XIZY"` with qubit 0 leftmost.
    pub fn from_label(label: &str) -> Option<PauliString> {
        let mut p = PauliString::default();
        for (i, c) in label.chars().enumerate() {
            match c {
                'I' => {}
                'X' => p.x.set(i),
                'Z' => p.z.set(i),
                'Y' => {
                    p.x.set(i);
                    p.z.set(i);
                }
                _ => return None,
            }
        }
        Some(p)
    }

    pub fn label(&self, n_qubits: usize) -> String {
        (0..n_qubits)
            .map(|i| match (self.x.get(i), self.z.get(i)) {
                (false, false) => 'I',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            })
            .collect()
    }

    /// `P|b⟩ = amp · |row⟩`; returns `(row, amp)`.
    #[inline]
    pub fn apply_basis(&self, b: usize) -> (usize, Complex64) {
        let x = self.x.low_word() as usize;
        let z = self.z.low_word();
        let w = (x as u64 & z).count_ones() as usize;
        let amp = if (z & b as u64).count_ones() % 2 == 0 { I_POW[w % 4] } else { -I_POW[w % 4] };
        (b ^ x, amp)
    }

    /// Accumulate `scale · P v` into `out` (qubit count below 64).
    pub fn apply_add(&self, scale: Complex64, v: &[Complex64], out: &mut [Complex64]) {
        let x = self.x.low_word() as usize;
        let z = self.z.low_word();
        let phase = I_POW[(x as u64 & z).count_ones() as usize % 4] * scale;
        for (b, amp) in v.iter().enumerate() {
            let sign = if (z & b as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[b ^ x] += phase * sign * amp;
        }
    }

    /// In place `v ← exp(iθP) v = cos θ · v + i sin θ · P v`.
    pub fn rotate(&self, theta: f64, v: &mut [Complex64]) {
        let x = self.x.low_word() as usize;
        let z = self.z.low_word();
        let (s, c) = theta.sin_cos();
        let phase = I_POW[(x as u64 & z).count_ones() as usize % 4] * Complex64::new(0.0, s);
        let sign = |b: usize| if (z & b as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        if x == 0 {
            for (b, amp) in v.iter_mut().enumerate() {
                *amp *= c + phase * sign(b);
            }
            return;
        }
        // Pair each basis state with its partner b ^ x and update both.
        let top = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for b in 0..v.len() {
            if b & top != 0 {
                continue;
            }
            let b2 = b ^ x;
            let (a1, a2) = (v[b], v[b2]);
            // (P v)[b2] = phase_b · v[b] and (P v)[b] = phase_b2 · v[b2].
            v[b2] = c * a2 + phase * sign(b) * a1;
            v[b] = c * a1 + phase * sign(b2) * a2;
        }
    }
}

pub(crate) const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];
