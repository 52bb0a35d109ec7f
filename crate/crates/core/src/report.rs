//! Stable text output: 17 significant digits for every float.

use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::dynamics::ButterflyParams;

/// Formats `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number carrying exactly the `fmt17` digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Number::from_str(&fmt17(x)).map(Value::Number).unwrap_or(Value::Null)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Insertion helper for building summaries.
#[derive(Debug, Default, Clone)]
pub struct Object(Map<String, Value>);

impl Object {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn f(self, key: &str, x: f64) -> Self {
        self.set(key, num(x))
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0)
    }
}

impl From<Object> for Value {
    fn from(o: Object) -> Self {
        o.into_value()
    }
}

fn dipole_json(d: &crate::geometry::DipoleOrientation) -> Value {
    Value::Array(
        d.vector()
            .iter()
            .map(|c| Value::Array(vec![num(c.re), num(c.im)]))
            .collect(),
    )
}

/// Parameter echo shared by all summaries.
pub fn params_json(p: &ButterflyParams) -> Value {
    Object::new()
        .f("gamma_signal", p.gamma_signal)
        .f("gamma_idler", p.gamma_idler)
        .f("omega_drive", p.omega_drive)
        .f("omega_couple", p.omega_couple)
        .f("atom_number", p.atom_number)
        .f("radius", p.radius)
        .f("wavelength", p.wavelength)
        .f("loss_branching", p.loss_branching)
        .set("signal_dipole", dipole_json(&p.signal_dipole))
        .set("idler_dipole", dipole_json(&p.idler_dipole))
        .set("time_unit_seconds", opt_num(p.time_unit_seconds))
        .into_value()
}

/// Pretty JSON with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        let v = num(0.1);
        assert_eq!(v.to_string(), "1.0000000000000001e-1");
        assert_eq!(num(f64::NAN), Value::Null);
        let back: f64 = v.to_string().parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn objects_are_key_sorted() {
        let v = Object::new().f("b", 1.0).f("a", 2.0).into_value();
        let text = v.to_string();
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
    }
}
