//! C-style number formatting, independent of locale.

/// Shortest representation that parses back to `v`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// `printf("%.6e")`.
pub fn sci6(v: f64) -> String {
    c_exp(v, 6)
}

fn c_exp(v: f64, prec: usize) -> String {
    if !v.is_finite() {
        return non_finite(v);
    }
    let s = format!("{v:.prec$e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// `printf("%.17g")`.
pub fn g17(v: f64) -> String {
    const P: i32 = 17;
    if !v.is_finite() {
        return non_finite(v);
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    // exponent after rounding to P significant digits
    let s = format!("{v:.*e}", (P - 1) as usize);
    let exp: i32 = s.split_once('e').unwrap().1.parse().unwrap();
    if !(-4..P).contains(&exp) {
        let e = c_exp(v, (P - 1) as usize);
        let (mant, tail) = e.split_once('e').unwrap();
        format!("{}e{tail}", strip_zeros(mant))
    } else {
        let decimals = (P - 1 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn non_finite(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
