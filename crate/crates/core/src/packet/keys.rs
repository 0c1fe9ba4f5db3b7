//! Pre-shared key material and its JSON key-file form.

use std::fmt;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Mode;
use crate::field::{PrimeModulus, Secrecy};

pub const MAC_KEY_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum KeyError {
    #[error("key file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("k0_hex must be {MAC_KEY_LEN} bytes of hex")]
    BadKeyHex,
    #[error("k0 must not be all zero")]
    ZeroKey,
    #[error("p_decimal {0:?} is not an unsigned 64-bit integer")]
    BadModulus(String),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

/// The 160-bit secret K0 shared by sender and receiver.
#[derive(Clone, PartialEq, Eq)]
pub struct MacKey([u8; MAC_KEY_LEN]);

impl MacKey {
    pub fn new(bytes: [u8; MAC_KEY_LEN]) -> Result<Self, KeyError> {
        if bytes.iter().all(|&b| b == 0) {
            return Err(KeyError::ZeroKey);
        }
        Ok(Self(bytes))
    }

    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        loop {
            let mut bytes = [0u8; MAC_KEY_LEN];
            rng.fill_bytes(&mut bytes);
            if let Ok(key) = Self::new(bytes) {
                return key;
            }
        }
    }

    pub fn as_bytes(&self) -> &[u8; MAC_KEY_LEN] {
        &self.0
    }
}

impl fmt::Debug for MacKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MacKey(..)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub k0: MacKey,
    pub modulus: PrimeModulus,
    pub mode: Mode,
}

#[derive(Debug, Serialize, Deserialize)]
struct KeyFile {
    k0_hex: String,
    /// Decimal string: JSON numbers lose precision above 2^53.
    p_decimal: String,
    mode: Mode,
    #[serde(default)]
    secret: bool,
}

impl KeyMaterial {
    pub fn from_json(text: &str) -> Result<Self, KeyError> {
        let file: KeyFile = serde_json::from_str(text)?;
        let raw = hex::decode(file.k0_hex.trim()).map_err(|_| KeyError::BadKeyHex)?;
        let k0 = MacKey::new(raw.try_into().map_err(|_| KeyError::BadKeyHex)?)?;
        let p: u64 = file
            .p_decimal
            .trim()
            .parse()
            .map_err(|_| KeyError::BadModulus(file.p_decimal.clone()))?;
        let secrecy = if file.secret { Secrecy::Secret } else { Secrecy::Public };
        Ok(Self {
            k0,
            modulus: PrimeModulus::new(p, secrecy)?,
            mode: file.mode,
        })
    }

    pub fn to_json(&self) -> String {
        let file = KeyFile {
            k0_hex: hex::encode(self.k0.as_bytes()),
            p_decimal: self.modulus.p().to_string(),
            mode: self.mode,
            secret: self.modulus.secrecy() == Secrecy::Secret,
        };
        serde_json::to_string_pretty(&file).expect("key file serializes") + "\n"
    }
}
