use hmac::{Hmac, Mac};
use sha1::Sha1;

pub const MAC_LEN: usize = 20;

type HmacSha1 = Hmac<Sha1>;

/// HMAC-SHA1 (RFC 2104) of `data` under `key`.
pub fn compute_mac(data: &[u8], key: &[u8]) -> [u8; MAC_LEN] {
    let mut mac = HmacSha1::new_from_slice(key).expect("HMAC accepts keys of any length");
    mac.update(data);
    mac.finalize().into_bytes().into()
}

/// Constant-time comparison of the recomputed tag against `tag`.
pub fn verify_mac(data: &[u8], key: &[u8], tag: &[u8]) -> bool {
    let mut mac = HmacSha1::new_from_slice(key).expect("HMAC accepts keys of any length");
    mac.update(data);
    mac.verify_slice(tag).is_ok()
}
