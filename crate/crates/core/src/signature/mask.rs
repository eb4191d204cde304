//! Token masking: replaces variable-looking tokens with class markers.

use std::net::{Ipv4Addr, Ipv6Addr};
use std::ops::Range;

use rand::Rng;

/// Classes of variable tokens recognized by [`mask`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarClass {
    Num,
    Hex,
    Ip,
    Ts,
    Path,
    /// Value of a `key=value` token that fits no other class.
    Val,
}

impl VarClass {
    pub const GENERATED: [VarClass; 5] = [
        VarClass::Num,
        VarClass::Hex,
        VarClass::Ip,
        VarClass::Ts,
        VarClass::Path,
    ];

    pub fn marker(self) -> &'static str {
        match self {
            VarClass::Num => "§NUM",
            VarClass::Hex => "§HEX",
            VarClass::Ip => "§IP",
            VarClass::Ts => "§TS",
            VarClass::Path => "§PATH",
            VarClass::Val => "§VAL",
        }
    }

    /// Lowercase stem used for placeholder names (`num`, `hex`, ...).
    pub fn stem(self) -> &'static str {
        match self {
            VarClass::Num => "num",
            VarClass::Hex => "hex",
            VarClass::Ip => "ip",
            VarClass::Ts => "ts",
            VarClass::Path => "path",
            VarClass::Val => "val",
        }
    }

    /// Draws a fresh random value that [`classify`] maps back to `self`.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> String {
        match self {
            VarClass::Num => {
                if rng.random_bool(0.2) {
                    format!("{}.{:02}", rng.random_range(0..10_000u32), rng.random_range(0..100u32))
                } else {
                    rng.random_range(0..4_000_000_000u64).to_string()
                }
            }
            VarClass::Hex => format!("0x{:08x}", rng.random::<u32>()),
            VarClass::Ip => format!(
                "10.{}.{}.{}",
                rng.random_range(0..=255u8),
                rng.random_range(0..=255u8),
                rng.random_range(1..=254u8)
            ),
            VarClass::Ts => format!(
                "2025-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z",
                rng.random_range(1..=12u8),
                rng.random_range(1..=28u8),
                rng.random_range(0..24u8),
                rng.random_range(0..60u8),
                rng.random_range(0..60u8),
                rng.random_range(0..1000u16)
            ),
            VarClass::Path => format!(
                "/lustre/orion/proj{}/run_{}/out.{}",
                rng.random_range(100..1000u32),
                rng.random_range(0..100_000u32),
                rng.random_range(0..64u32)
            ),
            VarClass::Val => format!("v{}", rng.random_range(0..1_000_000u32)),
        }
    }
}

const OPENERS: &[char] = &['(', '[', '{', '<', '"', '\''];
const CLOSERS: &[char] = &[')', ']', '}', '>', '"', '\'', ',', ';', ':', '.'];

/// Byte range of `token` with surrounding brackets, quotes and trailing
/// separators removed.
fn core_range(token: &str) -> Range<usize> {
    let start = token.len() - token.trim_start_matches(OPENERS).len();
    let end = start + token[start..].trim_end_matches(CLOSERS).len();
    start..end
}

/// Classifies a bare token (no surrounding punctuation).
pub fn classify(core: &str) -> Option<VarClass> {
    if core.is_empty() || core.starts_with('§') {
        return None;
    }
    if is_number(core) {
        Some(VarClass::Num)
    } else if is_hex(core) {
        Some(VarClass::Hex)
    } else if is_timestamp(core) {
        Some(VarClass::Ts)
    } else if is_ip(core) {
        Some(VarClass::Ip)
    } else if core.starts_with('/') && core.bytes().any(|b| b.is_ascii_digit()) {
        Some(VarClass::Path)
    } else {
        None
    }
}

/// Locates the variable part of a whitespace-delimited token, if any.
pub fn variable_span(token: &str) -> Option<(Range<usize>, VarClass)> {
    let core = core_range(token);
    let text = &token[core.clone()];
    if let Some(class) = classify(text) {
        return Some((core, class));
    }
    let eq = text.find('=')?;
    if eq == 0 {
        return None;
    }
    let value = &text[eq + 1..];
    if value.is_empty() {
        return None;
    }
    let class = match classify(value) {
        Some(c) => c,
        None if !value.starts_with('§') && value.bytes().any(|b| b.is_ascii_digit()) => {
            VarClass::Val
        }
        None => return None,
    };
    Some((core.start + eq + 1..core.end, class))
}

pub fn mask_token(token: &str) -> std::borrow::Cow<'_, str> {
    match variable_span(token) {
        Some((span, class)) => {
            let mut out = String::with_capacity(token.len());
            out.push_str(&token[..span.start]);
            out.push_str(class.marker());
            out.push_str(&token[span.end..]);
            out.into()
        }
        None => token.into(),
    }
}

/// Whitespace-tokenizes `message` and replaces variable tokens with class
/// markers, joining the result with single spaces.
///
/// ```
/// use logsift::signature::mask;
/// assert_eq!(mask("killed process 1234"), "killed process §NUM");
/// assert_eq!(mask("addr 0xDEADBEEF"), "addr §HEX");
/// ```
pub fn mask(message: &str) -> String {
    let mut out = String::with_capacity(message.len());
    for (i, tok) in message.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&mask_token(tok));
    }
    out
}

fn is_number(s: &str) -> bool {
    let s = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

fn is_hex(s: &str) -> bool {
    if let Some(rest) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        return !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_hexdigit());
    }
    s.len() >= 4
        && s.bytes().all(|b| b.is_ascii_hexdigit())
        && s.bytes().any(|b| b.is_ascii_digit())
        && s.bytes().any(|b| b.is_ascii_alphabetic())
}

fn digits(b: &[u8], n: usize) -> bool {
    b.len() >= n && b[..n].iter().all(u8::is_ascii_digit)
}

/// `hh:mm:ss` with optional fraction and zone; returns bytes consumed.
fn time_len(b: &[u8]) -> Option<usize> {
    if !(digits(b, 2) && b.get(2) == Some(&b':') && digits(&b[3..], 2)) {
        return None;
    }
    let mut i = 5;
    if b.get(i) == Some(&b':') && digits(&b[i + 1..], 2) {
        i += 3;
    }
    if matches!(b.get(i), Some(b'.' | b',')) && b.get(i + 1).is_some_and(u8::is_ascii_digit) {
        i += 1;
        while b.get(i).is_some_and(u8::is_ascii_digit) {
            i += 1;
        }
    }
    Some(i + zone_len(&b[i..]))
}

fn zone_len(b: &[u8]) -> usize {
    match b.first() {
        Some(b'Z') => 1,
        Some(b'+' | b'-') if digits(&b[1..], 2) => {
            if b.get(3) == Some(&b':') && digits(&b[4..], 2) {
                6
            } else if digits(&b[3..], 2) {
                5
            } else {
                3
            }
        }
        _ => 0,
    }
}

fn is_timestamp(s: &str) -> bool {
    let b = s.as_bytes();
    let is_date = digits(b, 4)
        && b.get(4) == Some(&b'-')
        && digits(&b[5..], 2)
        && b.get(7) == Some(&b'-')
        && digits(&b[8..], 2);
    if is_date {
        if b.len() == 10 {
            return true;
        }
        if matches!(b.get(10), Some(b'T' | b'_')) {
            return time_len(&b[11..]).is_some_and(|n| 11 + n == b.len());
        }
        return false;
    }
    time_len(b).is_some_and(|n| n == b.len() && n >= 8)
}

fn is_ip(s: &str) -> bool {
    if s.contains('.') {
        let host = match s.rsplit_once(':') {
            Some((h, port)) if !port.is_empty() && port.bytes().all(|b| b.is_ascii_digit()) => h,
            _ => s,
        };
        return host.parse::<Ipv4Addr>().is_ok();
    }
    s.bytes().filter(|&b| b == b':').count() >= 2 && s.parse::<Ipv6Addr>().is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(mask("killed process 1234"), "killed process §NUM");
        assert_eq!(mask("addr 0xDEADBEEF"), "addr §HEX");
        assert_eq!(mask("no variables here"), "no variables here");
    }

    #[test]
    fn classes() {
        assert_eq!(classify("-12.5"), Some(VarClass::Num));
        assert_eq!(classify("0x1f"), Some(VarClass::Hex));
        assert_eq!(classify("deadbeef1"), Some(VarClass::Hex));
        assert_eq!(classify("dead"), None);
        assert_eq!(classify("added"), None);
        assert_eq!(classify("10.0.0.1"), Some(VarClass::Ip));
        assert_eq!(classify("10.0.0.1:8080"), Some(VarClass::Ip));
        assert_eq!(classify("fe80::1"), Some(VarClass::Ip));
        assert_eq!(classify("2025-03-01T12:00:00.123Z"), Some(VarClass::Ts));
        assert_eq!(classify("2025-03-01T12:00:00+02:00"), Some(VarClass::Ts));
        assert_eq!(classify("2025-03-01"), Some(VarClass::Ts));
        assert_eq!(classify("12:34:56"), Some(VarClass::Ts));
        assert_eq!(classify("12:34"), None);
        assert_eq!(classify("/dev/nvme0n1"), Some(VarClass::Path));
        assert_eq!(classify("/usr/bin/env"), None);
        assert_eq!(classify("1.2.3"), None);
    }

    #[test]
    fn punctuation_and_key_value() {
        assert_eq!(mask("nic (1234) pid"), "nic (§NUM) pid");
        assert_eq!(mask("pid=42, state=up"), "pid=§NUM, state=up");
        assert_eq!(mask("job=xyz12"), "job=§VAL");
        assert_eq!(mask("job=abc12"), "job=§HEX");
        assert_eq!(mask("=5"), "=5");
    }

    #[test]
    fn idempotent_on_samples() {
        for m in [
            "a=b=3 (0x12) [10.1.1.1]: at 12:00:01,5 /x/1",
            "§NUM pid=§NUM",
            "2025-01-01T00:00:00Z fe80::1 deadbeef1",
        ] {
            let once = mask(m);
            assert_eq!(mask(&once), once, "{m}");
        }
    }

    #[test]
    fn sampled_values_round_trip_their_class() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for class in VarClass::GENERATED.into_iter().chain([VarClass::Val]) {
            for _ in 0..200 {
                let v = class.sample(&mut rng);
                let got = if class == VarClass::Val {
                    variable_span(&format!("k={v}")).map(|(_, c)| c)
                } else {
                    classify(&v)
                };
                assert_eq!(got, Some(class), "{v}");
            }
        }
    }
}
