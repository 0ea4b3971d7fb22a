//! Deterministic text output: JSON with sorted keys and floats rounded to 12
//! significant digits, and the trajectory CSV layout.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::dynamics::Trajectory;

pub const SIG_DIGITS: usize = 12;

/// Rounds to 12 significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", SIG_DIGITS - 1, x);
    s.parse().unwrap_or(x)
}

/// Shortest representation of the 12-significant-digit rounding, with an
/// exponent for very small or very large magnitudes.
pub fn fmt_float(x: f64) -> String {
    let r = round_sig(x);
    if r.is_finite() {
        let a = r.abs();
        if a != 0.0 && !(1e-5..1e16).contains(&a) {
            format!("{r:e}")
        } else {
            format!("{r}")
        }
    } else {
        format!("{x}")
    }
}

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(0.0));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonicalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with sorted keys and rounded floats, newline terminated.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).unwrap_or(Value::Null);
    let mut s = serde_json::to_string_pretty(&canonicalize(v)).unwrap_or_else(|_| "null".into());
    s.push('\n');
    s
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// `t,node0_re,node0_im,...` followed by one row per grid point.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t");
    for i in 0..traj.dim() {
        let _ = write!(out, ",node{i}_re,node{i}_im");
    }
    out.push('\n');
    for (t, s) in traj.times.iter().zip(&traj.states) {
        out.push_str(&fmt_float(*t));
        for z in s.iter() {
            out.push(',');
            out.push_str(&fmt_float(z.re));
            out.push(',');
            out.push_str(&fmt_float(z.im));
        }
        out.push('\n');
    }
    out
}
