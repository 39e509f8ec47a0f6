//! Systematic Reed-Solomon over GF(256), generator roots alpha^0 .. alpha^(n-1).
//!
//! Byte 0 of a codeword is the highest-degree coefficient, the same
//! convention QR codes and the `reedsolo` Python package use.

use super::gf256 as gf;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ReedSolomon {
    nsym: usize,
    /// Monic generator, highest degree first, `nsym + 1` coefficients.
    generator: Vec<u8>,
}

impl ReedSolomon {
    pub fn new(nsym: usize) -> Self {
        assert!(nsym > 0 && nsym < 255, "parity length {nsym}");
        let mut g = vec![1u8];
        for i in 0..nsym {
            // g *= (x - alpha^i)
            let root = gf::exp(i);
            let mut next = vec![0u8; g.len() + 1];
            for (j, &c) in g.iter().enumerate() {
                next[j] ^= c;
                next[j + 1] ^= gf::mul(c, root);
            }
            g = next;
        }
        Self { nsym, generator: g }
    }

    pub fn parity_len(&self) -> usize {
        self.nsym
    }

    /// Remainder of `msg * x^nsym` divided by the generator.
    pub fn parity(&self, msg: &[u8]) -> Vec<u8> {
        assert!(msg.len() + self.nsym <= 255, "codeword longer than 255");
        let mut rem = vec![0u8; self.nsym];
        for &m in msg {
            let factor = m ^ rem[0];
            rem.rotate_left(1);
            rem[self.nsym - 1] = 0;
            if factor != 0 {
                for (r, &g) in rem.iter_mut().zip(&self.generator[1..]) {
                    *r ^= gf::mul(g, factor);
                }
            }
        }
        rem
    }

    pub fn encode(&self, msg: &[u8]) -> Vec<u8> {
        let mut out = msg.to_vec();
        out.extend(self.parity(msg));
        out
    }

    fn syndromes(&self, codeword: &[u8]) -> Vec<u8> {
        (0..self.nsym).map(|j| gf::poly_eval(codeword, gf::exp(j))).collect()
    }

    /// Corrects up to `nsym / 2` symbol errors in place and returns how many were fixed.
    ///
    /// On failure the codeword is left untouched.
    pub fn correct(&self, codeword: &mut [u8]) -> Result<usize> {
        self.correct_with_erasures(codeword, &[])
    }

    /// Corrects `v` errors at unknown positions plus the listed erasures, provided `2v + erasures <= nsym`.
    ///
    /// Returns the number of symbols changed. On failure the codeword is left untouched.
    pub fn correct_with_erasures(&self, codeword: &mut [u8], erasures: &[usize]) -> Result<usize> {
        let n = codeword.len();
        if n <= self.nsym || n > 255 {
            return Err(Error::Framing(format!("codeword length {n}")));
        }
        let e = erasures.len();
        if e > self.nsym || erasures.iter().any(|&i| i >= n) {
            return Err(Error::Uncorrectable);
        }
        let synd = self.syndromes(codeword);
        if synd.iter().all(|&s| s == 0) {
            return Ok(0);
        }

        // Erasure locator prod(1 - X_j x); polynomials stored lowest degree first.
        let mut gamma = vec![1u8];
        for &i in erasures {
            let x = gf::exp(n - 1 - i);
            let mut next = gamma.clone();
            next.push(0);
            for (j, &c) in gamma.iter().enumerate() {
                next[j + 1] ^= gf::mul(c, x);
            }
            gamma = next;
        }

        // Berlekamp-Massey started from the erasure locator.
        let mut lambda = gamma.clone();
        let mut prev = gamma;
        let mut l = e;
        for k in e..self.nsym {
            let mut d = 0u8;
            for (i, &c) in lambda.iter().enumerate().take(k + 1) {
                d ^= gf::mul(c, synd[k - i]);
            }
            prev.insert(0, 0);
            if d == 0 {
                continue;
            }
            let mut next = lambda.clone();
            if next.len() < prev.len() {
                next.resize(prev.len(), 0);
            }
            for (i, &p) in prev.iter().enumerate() {
                next[i] ^= gf::mul(d, p);
            }
            if 2 * l <= k + e {
                l = k + 1 + e - l;
                let inv = gf::inv(d);
                prev = lambda.iter().map(|&c| gf::mul(c, inv)).collect();
            }
            lambda = next;
        }
        while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
            lambda.pop();
        }
        let degree = lambda.len() - 1;
        if degree != l || 2 * (l - e) + e > self.nsym {
            return Err(Error::Uncorrectable);
        }

        // Chien search: position i carries locator X = alpha^(n-1-i).
        let eval_low = |p: &[u8], x: u8| p.iter().rev().fold(0, |acc, &c| gf::mul(acc, x) ^ c);
        let mut positions = Vec::with_capacity(l);
        for i in 0..n {
            let power = n - 1 - i;
            let x_inv = gf::exp(255 - power % 255);
            if eval_low(&lambda, x_inv) == 0 {
                positions.push(i);
            }
        }
        if positions.len() != l {
            return Err(Error::Uncorrectable);
        }

        // Error evaluator omega = S(x) * lambda(x) mod x^nsym.
        let mut omega = vec![0u8; self.nsym];
        for (i, &s) in synd.iter().enumerate() {
            for (j, &c) in lambda.iter().enumerate() {
                if i + j < self.nsym {
                    omega[i + j] ^= gf::mul(s, c);
                }
            }
        }
        // Formal derivative: odd-degree terms survive in characteristic 2.
        let deriv: Vec<u8> = (1..lambda.len())
            .map(|i| if i % 2 == 1 { lambda[i] } else { 0 })
            .collect();

        let mut fixed = codeword.to_vec();
        let mut changed = 0;
        for &i in &positions {
            let power = n - 1 - i;
            let x = gf::exp(power);
            let x_inv = gf::inv(x);
            let denom = eval_low(&deriv, x_inv);
            if denom == 0 {
                return Err(Error::Uncorrectable);
            }
            let magnitude = gf::mul(x, gf::div(eval_low(&omega, x_inv), denom));
            fixed[i] ^= magnitude;
            changed += (magnitude != 0) as usize;
        }
        if self.syndromes(&fixed).iter().any(|&s| s != 0) {
            return Err(Error::Uncorrectable);
        }
        codeword.copy_from_slice(&fixed);
        Ok(changed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parity_matches_reference_implementation() {
        // Computed with the `reedsolo` Python package, RSCodec(10).
        let rs = ReedSolomon::new(10);
        assert_eq!(
            rs.parity(b"<0123456789abcdef>"),
            vec![217, 19, 63, 230, 86, 33, 168, 162, 185, 211]
        );
    }

    #[test]
    fn qr_version_one_example() {
        // "01234567" in numeric mode at version 1-M, from the symbol standard's worked example.
        let data = [
            0x10, 0x20, 0x0C, 0x56, 0x61, 0x80, 0xEC, 0x11, 0xEC, 0x11, 0xEC, 0x11, 0xEC, 0x11, 0xEC, 0x11,
        ];
        let rs = ReedSolomon::new(10);
        assert_eq!(
            rs.parity(&data),
            vec![0xA5, 0x24, 0xD4, 0xC1, 0xED, 0x36, 0xC7, 0x87, 0x2C, 0x55]
        );
    }

    #[test]
    fn codewords_have_zero_syndromes() {
        let rs = ReedSolomon::new(16);
        let cw = rs.encode(b"some message bytes");
        assert!(rs.syndromes(&cw).iter().all(|&s| s == 0));
    }

    #[test]
    fn clean_codeword_needs_no_fix() {
        let rs = ReedSolomon::new(10);
        let mut cw = rs.encode(b"hello");
        assert_eq!(rs.correct(&mut cw).unwrap(), 0);
    }

    #[test]
    fn failure_leaves_input_untouched() {
        let rs = ReedSolomon::new(4);
        let mut cw = rs.encode(b"abcdefgh");
        for b in cw.iter_mut().take(5) {
            *b ^= 0x5A;
        }
        let before = cw.clone();
        let _ = rs.correct(&mut cw);
        if cw != before {
            // Only a (rare) miscorrection to another codeword may modify it.
            assert!(rs.syndromes(&cw).iter().all(|&s| s == 0));
        }
    }

    proptest! {
        #[test]
        fn corrects_up_to_half_the_parity(
            msg in prop::collection::vec(any::<u8>(), 1..60),
            nsym in 2usize..24,
            seed in any::<u64>(),
        ) {
            let rs = ReedSolomon::new(nsym);
            let clean = rs.encode(&msg);
            let mut cw = clean.clone();
            let t = nsym / 2;
            let mut s = seed;
            let mut hit = std::collections::BTreeSet::new();
            while hit.len() < t.min(cw.len()) {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                hit.insert((s >> 33) as usize % cw.len());
            }
            for &i in &hit {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                cw[i] ^= ((s >> 40) as u8).max(1);
            }
            let fixed = rs.correct(&mut cw).unwrap();
            prop_assert_eq!(fixed, hit.len());
            prop_assert_eq!(cw, clean);
        }
    }

    proptest! {
        #[test]
        fn errors_and_erasures_within_budget(
            msg in prop::collection::vec(any::<u8>(), 1..40),
            nsym in 2usize..20,
            seed in any::<u64>(),
        ) {
            let rs = ReedSolomon::new(nsym);
            let clean = rs.encode(&msg);
            let mut s = seed;
            let mut next = |m: usize| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 33) as usize % m
            };
            let erasures = next(nsym + 1).min(clean.len());
            let errors = ((nsym - erasures) / 2).min(clean.len() - erasures);
            let mut order: Vec<usize> = (0..clean.len()).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, next(i + 1));
            }
            let mut cw = clean.clone();
            // Erased symbols may or may not actually be wrong.
            for (k, &i) in order[..erasures + errors].iter().enumerate() {
                if k >= erasures || i % 3 != 0 {
                    cw[i] ^= (next(256) as u8).max(1);
                }
            }
            let mut erased = order[..erasures].to_vec();
            erased.sort_unstable();
            prop_assert!(rs.correct_with_erasures(&mut cw, &erased).is_ok());
            prop_assert_eq!(cw, clean);
        }
    }
}
