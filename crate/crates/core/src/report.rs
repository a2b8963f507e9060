//! Machine-readable output. Every real number is written with 17
//! significant digits so that a value survives a round trip exactly.

use serde_json::{Map, Number, Value};

use crate::error::Error;
use crate::moments::{Certificate, MomentReport, XChoice};
use crate::trace::CertifiedValue;

/// A JSON number carrying 17 significant digits, or null when not finite.
pub fn real(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format_real(x);
    Value::Number(text.parse::<Number>().expect("formatted float is valid JSON"))
}

/// The 17-significant-digit decimal form used in JSON and CSV output.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

pub fn certified(v: &CertifiedValue) -> Value {
    let mut m = Map::new();
    m.insert("value".into(), real(v.value));
    m.insert("tail_bound".into(), real(v.tail_bound));
    m.insert("terms_used".into(), Value::from(v.terms_used));
    Value::Object(m)
}

pub fn x_label(x: &XChoice) -> Value {
    match x {
        XChoice::Fixed(v) => real(*v),
        other => Value::String(other.label()),
    }
}

fn certificate_label(c: Certificate) -> &'static str {
    match c {
        Certificate::Certified => "Certified",
        Certificate::NotCertified => "NotCertified",
    }
}

pub fn moment_report(r: &MomentReport) -> Value {
    let mut query = Map::new();
    query.insert("d".into(), Value::from(r.query.d));
    query.insert("p".into(), Value::from(r.query.p));
    query.insert("disc".into(), Value::from(r.query.disc));
    query.insert("x".into(), x_label(&r.query.x));
    let mut resolved = Map::new();
    resolved.insert("dp2".into(), real(r.x_dp2));
    resolved.insert("dp".into(), real(r.x_dp));
    query.insert("x_resolved".into(), Value::Object(resolved));

    let sums = |map: &std::collections::BTreeMap<(u64, u64), CertifiedValue>| {
        Value::Object(
            map.iter()
                .map(|((n, q), v)| (format!("{n},{q}"), certified(v)))
                .collect(),
        )
    };
    let mut m = Map::new();
    m.insert("query".into(), Value::Object(query));
    m.insert("a_sums".into(), sums(&r.a_sums));
    m.insert("b_sums".into(), sums(&r.b_sums));
    m.insert("moment_dp2".into(), certified(&r.moment_dp2));
    m.insert("moment_dp".into(), certified(&r.moment_dp));
    m.insert("newform_moment".into(), certified(&r.newform_moment));
    m.insert("envelope".into(), real(r.envelope));
    m.insert("certificate".into(), Value::String(certificate_label(r.certificate).into()));
    Value::Object(m)
}

pub fn error(e: &Error) -> Value {
    let mut inner = Map::new();
    inner.insert("kind".into(), Value::String(e.kind().into()));
    inner.insert("message".into(), Value::String(e.to_string()));
    let mut m = Map::new();
    m.insert("error".into(), Value::Object(inner));
    Value::Object(m)
}

pub const MOMENT_CSV_HEADER: &str = "d,p,disc,x,x_dp2,x_dp,moment_dp2,moment_dp2_tail,moment_dp,moment_dp_tail,newform_moment,newform_tail,envelope,certificate,error";

/// One CSV row per moment query; failed queries keep their inputs and fill
/// only the error column.
pub fn moment_csv_row(query: (u64, u64, i64, &XChoice), outcome: &Result<MomentReport, Error>) -> String {
    let (d, p, disc, x) = query;
    let x = match x {
        XChoice::Fixed(v) => format_real(*v),
        other => other.label(),
    };
    match outcome {
        Ok(r) => {
            let reals = [
                r.x_dp2,
                r.x_dp,
                r.moment_dp2.value,
                r.moment_dp2.tail_bound,
                r.moment_dp.value,
                r.moment_dp.tail_bound,
                r.newform_moment.value,
                r.newform_moment.tail_bound,
                r.envelope,
            ]
            .map(format_real)
            .join(",");
            format!("{d},{p},{disc},{x},{reals},{},", certificate_label(r.certificate))
        }
        Err(e) => format!("{d},{p},{disc},{x},,,,,,,,,,,{}", e.kind()),
    }
}

/// Serializes with a trailing newline; the output depends only on the value.
pub fn to_json_line(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
