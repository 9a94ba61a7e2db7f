//! SPICE-style engineering values (`1u`, `0.15u`, `10k`, `2.2meg`).

const SUFFIXES: &[(&str, i32)] = &[
    ("meg", 6),
    ("t", 12),
    ("g", 9),
    ("k", 3),
    ("m", -3),
    ("u", -6),
    ("n", -9),
    ("p", -12),
    ("f", -15),
];

/// Parses a number with an optional engineering suffix.
///
/// Negative exponents divide by an exact power of ten so that `1u` parses to
/// the same double as the literal `1e-6`.
pub fn parse_value(token: &str) -> Option<f64> {
    let lower = token.to_ascii_lowercase();
    let split = lower
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e')
        .unwrap_or(lower.len());
    // `1e-6` style exponents are handled by the float parser; a trailing
    // alphabetic run is treated as a suffix.
    let (mantissa, suffix) = lower.split_at(split);
    let base: f64 = mantissa.parse().ok()?;
    if !base.is_finite() {
        return None;
    }
    if suffix.is_empty() {
        return Some(base);
    }
    let exp = SUFFIXES.iter().find(|(s, _)| *s == suffix)?.1;
    let scale = 10f64.powi(exp.abs());
    Some(if exp < 0 { base / scale } else { base * scale })
}

/// Formats a value so that [`parse_value`] returns exactly the same double.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs();
    const ORDER: &[(&str, i32)] = &[
        ("t", 12),
        ("g", 9),
        ("meg", 6),
        ("k", 3),
        ("", 0),
        ("m", -3),
        ("u", -6),
        ("n", -9),
        ("p", -12),
        ("f", -15),
    ];
    for &(suffix, exp) in ORDER {
        let scale = 10f64.powi(exp);
        if mag >= scale * 0.999_999 {
            let mantissa = if exp < 0 {
                v * 10f64.powi(-exp)
            } else {
                v / scale
            };
            let text = format!("{mantissa}{suffix}");
            if parse_value(&text) == Some(v) {
                return text;
            }
            break;
        }
    }
    format!("{v:e}")
}
