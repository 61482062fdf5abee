//! RPC00B-style key/value text format.
//!
//! ```text
//! LINE_OFF: 2884.0 pixels
//! SAMP_OFF: 2911.0 pixels
//! ...
//! LINE_NUM_COEFF_1: 1.0
//! ...
//! ```
//!
//! Required keys: the ten offsets/scales plus the four forward coefficient
//! lists (`LINE_NUM`, `LINE_DEN`, `SAMP_NUM`, `SAMP_DEN`, 20 entries each).
//! The inverse lists (`LAT_NUM`, `LAT_DEN`, `LONG_NUM`, `LONG_DEN`) are
//! optional but must be complete when any of them appears. Trailing unit
//! words after the numeric value are ignored; unknown keys are skipped.

use std::collections::HashMap;

use super::{InverseTensors, PolyTensor, RpcModel};
use crate::error::{Error, Result};

const OFFSET_KEYS: [&str; 10] = [
    "LINE_OFF",
    "SAMP_OFF",
    "LAT_OFF",
    "LONG_OFF",
    "HEIGHT_OFF",
    "LINE_SCALE",
    "SAMP_SCALE",
    "LAT_SCALE",
    "LONG_SCALE",
    "HEIGHT_SCALE",
];

const FORWARD_LISTS: [&str; 4] = ["LINE_NUM", "LINE_DEN", "SAMP_NUM", "SAMP_DEN"];
const INVERSE_LISTS: [&str; 4] = ["LAT_NUM", "LAT_DEN", "LONG_NUM", "LONG_DEN"];

/// Parse the key/value text format into a camera model.
pub fn parse_rpc(text: &str) -> Result<RpcModel> {
    let mut scalars: HashMap<String, f64> = HashMap::new();
    let mut lists: HashMap<String, [Option<f64>; 20]> = HashMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| Error::Parse {
            line: line_number,
            reason: "expected `KEY: value`".into(),
        })?;
        let key = key.trim().to_ascii_uppercase();
        let value_token = value.split_whitespace().next().ok_or_else(|| Error::Parse {
            line: line_number,
            reason: format!("missing value for {key}"),
        })?;
        let value: f64 = value_token.parse().map_err(|_| Error::Parse {
            line: line_number,
            reason: format!("unparseable number `{value_token}`"),
        })?;

        if let Some((list, idx)) = split_coeff_key(&key) {
            if !(1..=20).contains(&idx) {
                return Err(Error::Parse {
                    line: line_number,
                    reason: format!("coefficient index {idx} outside 1..20"),
                });
            }
            lists.entry(list).or_insert([None; 20])[idx - 1] = Some(value);
        } else {
            scalars.insert(key, value);
        }
    }

    let scalar = |key: &str| -> Result<f64> {
        scalars.get(key).copied().ok_or_else(|| Error::Parse {
            line: 0,
            reason: format!("missing key {key}"),
        })
    };
    let tensor = |name: &str| -> Result<PolyTensor> {
        let slots = lists.get(name).ok_or_else(|| Error::Parse {
            line: 0,
            reason: format!("missing coefficient list {name}_COEFF_1..20"),
        })?;
        let mut coeffs = [0.0; 20];
        for (i, slot) in slots.iter().enumerate() {
            coeffs[i] = slot.ok_or_else(|| Error::Parse {
                line: 0,
                reason: format!("missing coefficient {name}_COEFF_{}", i + 1),
            })?;
        }
        Ok(PolyTensor::from_rpc_coeffs(&coeffs))
    };

    let any_inverse = INVERSE_LISTS.iter().any(|name| lists.contains_key(*name));
    let inverse = if any_inverse {
        Some(InverseTensors {
            lat_num: tensor("LAT_NUM")?,
            lat_den: tensor("LAT_DEN")?,
            lon_num: tensor("LONG_NUM")?,
            lon_den: tensor("LONG_DEN")?,
        })
    } else {
        None
    };

    let model = RpcModel {
        proj_num_samp: tensor("SAMP_NUM")?,
        proj_den_samp: tensor("SAMP_DEN")?,
        proj_num_line: tensor("LINE_NUM")?,
        proj_den_line: tensor("LINE_DEN")?,
        inverse,
        lat_off: scalar("LAT_OFF")?,
        lat_scale: scalar("LAT_SCALE")?,
        lon_off: scalar("LONG_OFF")?,
        lon_scale: scalar("LONG_SCALE")?,
        hei_off: scalar("HEIGHT_OFF")?,
        hei_scale: scalar("HEIGHT_SCALE")?,
        samp_off: scalar("SAMP_OFF")?,
        samp_scale: scalar("SAMP_SCALE")?,
        line_off: scalar("LINE_OFF")?,
        line_scale: scalar("LINE_SCALE")?,
    };
    model.validate()?;
    Ok(model)
}

fn split_coeff_key(key: &str) -> Option<(String, usize)> {
    for name in FORWARD_LISTS.iter().chain(INVERSE_LISTS.iter()) {
        let prefix = format!("{name}_COEFF_");
        if let Some(rest) = key.strip_prefix(&prefix) {
            if let Ok(idx) = rest.parse::<usize>() {
                return Some((name.to_string(), idx));
            }
        }
    }
    None
}

/// Serialize a camera model back to the text format with 17 significant
/// digits, enough for a bit-exact reparse.
pub fn serialize_rpc(model: &RpcModel) -> String {
    let mut out = String::new();
    let num = |v: f64| format!("{v:.16e}");
    let scalars = [
        ("LINE_OFF", model.line_off),
        ("SAMP_OFF", model.samp_off),
        ("LAT_OFF", model.lat_off),
        ("LONG_OFF", model.lon_off),
        ("HEIGHT_OFF", model.hei_off),
        ("LINE_SCALE", model.line_scale),
        ("SAMP_SCALE", model.samp_scale),
        ("LAT_SCALE", model.lat_scale),
        ("LONG_SCALE", model.lon_scale),
        ("HEIGHT_SCALE", model.hei_scale),
    ];
    debug_assert_eq!(scalars.len(), OFFSET_KEYS.len());
    for (key, value) in scalars {
        out.push_str(&format!("{key}: {}\n", num(value)));
    }
    let mut write_list = |name: &str, tensor: &PolyTensor| {
        for (i, c) in tensor.to_rpc_coeffs().iter().enumerate() {
            out.push_str(&format!("{name}_COEFF_{}: {}\n", i + 1, num(*c)));
        }
    };
    write_list("LINE_NUM", &model.proj_num_line);
    write_list("LINE_DEN", &model.proj_den_line);
    write_list("SAMP_NUM", &model.proj_num_samp);
    write_list("SAMP_DEN", &model.proj_den_samp);
    if let Some(inv) = &model.inverse {
        write_list("LAT_NUM", &inv.lat_num);
        write_list("LAT_DEN", &inv.lat_den);
        write_list("LONG_NUM", &inv.lon_num);
        write_list("LONG_DEN", &inv.lon_den);
    }
    out
}
