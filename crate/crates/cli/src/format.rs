//! Number rendering shared by the commands.

/// C-style `%.{sig}g`: `sig` significant digits, trailing zeros removed,
/// scientific notation outside `1e-5 <= |x| < 10^sig`.
pub fn general(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

/// Fixed eight decimals with trailing zeros removed, for human-readable lines.
pub fn short(x: f64) -> String {
    let s = format!("{x:.8}");
    let t = trim_zeros(&s);
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
