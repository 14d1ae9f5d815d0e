use rand::Rng;

use super::PrcError;
use crate::bits::BitString;
use crate::predicate::Predicate;

/// The ledger-backed ideal encoder/decoder pair `(𝒰_n, ℛ^Φ)`.
///
/// Encoding returns a fresh uniform block and logs it with its message;
/// decoding returns the message of the first logged block whose
/// `Φ`-expansion contains the query.
#[derive(Debug, Clone)]
pub struct IdealCodecState {
    n: usize,
    k: usize,
    phi: Predicate,
    entries: Vec<(BitString, BitString)>,
}

impl IdealCodecState {
    pub fn new(n: usize, k: usize, phi: Predicate) -> Self {
        Self {
            n,
            k,
            phi,
            entries: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn phi(&self) -> &Predicate {
        &self.phi
    }

    pub fn entries(&self) -> &[(BitString, BitString)] {
        &self.entries
    }

    /// `𝒰_n(σ)`: `n` fresh uniform bits from `rng`, logged with `σ`.
    pub fn encode<R: Rng + ?Sized>(
        &mut self,
        message: &BitString,
        rng: &mut R,
    ) -> Result<BitString, PrcError> {
        if message.len() != self.k {
            return Err(PrcError::MessageLength {
                expected: self.k,
                actual: message.len(),
            });
        }
        let y = BitString::random(rng, self.n);
        self.entries.push((y.clone(), message.clone()));
        Ok(y)
    }

    /// `ℛ^Φ(ζ)`; `None` is `⊥`.
    pub fn decode(&self, zeta: &BitString) -> Result<Option<BitString>, PrcError> {
        self.decode_window(zeta, 0, self.n_checked(zeta.len())?)
    }

    fn n_checked(&self, len: usize) -> Result<usize, PrcError> {
        if len != self.n {
            return Err(PrcError::CodewordLength {
                expected: self.n,
                actual: len,
            });
        }
        Ok(len)
    }

    /// Decodes `haystack[start..start + n]` without copying it for Hamming `Φ`.
    pub(crate) fn decode_window(
        &self,
        haystack: &BitString,
        start: usize,
        n: usize,
    ) -> Result<Option<BitString>, PrcError> {
        debug_assert_eq!(n, self.n);
        match &self.phi {
            Predicate::Hamming(r) => Ok(self
                .entries
                .iter()
                .find(|(y, _)| haystack.window_distance(start, y) <= *r)
                .map(|(_, s)| s.clone())),
            phi => {
                let zeta = haystack.range(start..start + n);
                for (y, s) in &self.entries {
                    if phi.eval(y, &zeta)? {
                        return Ok(Some(s.clone()));
                    }
                }
                Ok(None)
            }
        }
    }
}
