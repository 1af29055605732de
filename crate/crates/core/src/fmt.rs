//! Numeric formatting for emitted files: C's `%.12g` behaviour, i.e. 12
//! significant digits, fixed or scientific notation by exponent range, and
//! trailing zeros trimmed.

/// Formats with 12 significant digits, `%g` style.
pub fn fmt_g12(x: f64) -> String {
    fmt_g(x, 12)
}

/// C `printf` `%.*g` emulation with at least two exponent digits.
pub fn fmt_g(x: f64, precision: usize) -> String {
    let precision = precision.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }

    // Decimal exponent as %e would print it (after rounding to the target
    // precision, so 9.9999… promotes correctly).
    let sci = format!("{:.*e}", precision - 1, x);
    let exp: i32 = sci
        .split('e')
        .nth(1)
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);

    if exp < -4 || exp >= precision as i32 {
        let (mantissa, _) = sci.split_once('e').unwrap();
        let mantissa = trim_trailing_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (precision as i32 - 1 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_trailing_zeros(&fixed)
    }
}

fn trim_trailing_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}
