use serde_json::{json, Value};

use super::{CompactSet, ConvexPolygon, Dim, GeometryError, Interval, IntervalUnion, PointCloud, Result};

fn parse_err(msg: impl Into<String>) -> GeometryError {
    GeometryError::Parse(msg.into())
}

/// Parses `{"type": "cloud"|"intervals"|"polygon", "data": [...]}`.
///
/// Cloud data is a list of `[x]`, `[x, y]` or bare numbers (1-D); interval
/// data is `[[lo, hi], ...]`; polygon data is a vertex list in either
/// orientation.
pub fn parse_set_json(text: &str) -> Result<CompactSet> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    set_from_json_value(&v)
}

pub fn set_from_json_value(v: &Value) -> Result<CompactSet> {
    let kind = v.get("type").and_then(Value::as_str).ok_or_else(|| parse_err("missing string field \"type\""))?;
    let data = v.get("data").and_then(Value::as_array).ok_or_else(|| parse_err("missing array field \"data\""))?;
    let rows: Vec<Vec<f64>> = data
        .iter()
        .map(|row| match row {
            Value::Number(n) => n.as_f64().map(|x| vec![x]).ok_or_else(|| parse_err("bad number")),
            Value::Array(a) => a.iter().map(|c| c.as_f64().ok_or_else(|| parse_err("coordinates must be numbers"))).collect(),
            _ => Err(parse_err("rows must be numbers or arrays")),
        })
        .collect::<Result<_>>()?;
    match kind {
        "cloud" => cloud_from_rows(&rows).map(CompactSet::Cloud),
        "intervals" => {
            let ivs = rows
                .iter()
                .map(|r| match r.as_slice() {
                    [lo, hi] => Interval::new(*lo, *hi),
                    _ => Err(parse_err("intervals are [lo, hi] pairs")),
                })
                .collect::<Result<Vec<_>>>()?;
            IntervalUnion::new(ivs).map(CompactSet::Intervals)
        }
        "polygon" => {
            let verts = rows
                .iter()
                .map(|r| match r.as_slice() {
                    [x, y] => Ok([*x, *y]),
                    _ => Err(parse_err("polygon vertices are [x, y] pairs")),
                })
                .collect::<Result<Vec<_>>>()?;
            ConvexPolygon::from_unordered(verts).map(CompactSet::Polygon)
        }
        other => Err(parse_err(format!("unknown set type {other:?}"))),
    }
}

fn cloud_from_rows(rows: &[Vec<f64>]) -> Result<PointCloud> {
    let first = rows.first().ok_or(GeometryError::Empty)?;
    match first.len() {
        1 | 2 => {}
        n => return Err(parse_err(format!("points have 1 or 2 coordinates, got {n}"))),
    }
    let dim = if first.len() == 1 { Dim::One } else { Dim::Two };
    let pts = rows
        .iter()
        .map(|r| match (dim, r.as_slice()) {
            (Dim::One, [x]) => Ok([*x, 0.0]),
            (Dim::Two, [x, y]) => Ok([*x, *y]),
            _ => Err(GeometryError::MixedDimensions),
        })
        .collect::<Result<Vec<_>>>()?;
    PointCloud::from_arrays(dim, pts)
}

pub fn set_to_json_value(s: &CompactSet) -> Value {
    match s {
        CompactSet::Cloud(c) => {
            let data: Vec<Value> = match c.dim() {
                Dim::One => c.arrays().iter().map(|p| json!([p[0]])).collect(),
                Dim::Two => c.arrays().iter().map(|p| json!([p[0], p[1]])).collect(),
            };
            json!({"type": "cloud", "data": data})
        }
        CompactSet::Intervals(u) => {
            let data: Vec<Value> = u.intervals().iter().map(|iv| json!([iv.lo, iv.hi])).collect();
            json!({"type": "intervals", "data": data})
        }
        CompactSet::Polygon(p) => {
            let data: Vec<Value> = p.vertices().iter().map(|v| json!([v[0], v[1]])).collect();
            json!({"type": "polygon", "data": data})
        }
    }
}

pub fn set_to_json(s: &CompactSet) -> String {
    set_to_json_value(s).to_string()
}

/// Parses CSV with one point per row and columns `x1[,x2]`. A header row is
/// accepted when its first field is not numeric.
pub fn parse_set_csv(text: &str) -> Result<CompactSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if k == 0 => continue,
            Err(e) => return Err(parse_err(format!("row {}: {e}", k + 1))),
        }
    }
    cloud_from_rows(&rows).map(CompactSet::Cloud)
}

/// Writes the set as a point cloud CSV with a header; intervals and polygons
/// are sampled at `step`.
pub fn set_to_csv(s: &CompactSet, step: f64) -> Result<String> {
    let c = s.to_cloud(step)?;
    let mut out = String::new();
    match c.dim() {
        Dim::One => {
            out.push_str("x1\n");
            for p in c.arrays() {
                out.push_str(&format!("{}\n", p[0]));
            }
        }
        Dim::Two => {
            out.push_str("x1,x2\n");
            for p in c.arrays() {
                out.push_str(&format!("{},{}\n", p[0], p[1]));
            }
        }
    }
    Ok(out)
}

/// Reads a set from either format, chosen by the first non-blank character.
pub fn set_from_str(text: &str) -> Result<CompactSet> {
    if text.trim_start().starts_with('{') {
        parse_set_json(text)
    } else {
        parse_set_csv(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        for text in [
            r#"{"type":"cloud","data":[[0.5,1.0],[2.0,-1.0]]}"#,
            r#"{"type":"intervals","data":[[0.1,0.2],[0.5,0.6]]}"#,
            r#"{"type":"polygon","data":[[0.0,0.0],[1.0,0.0],[0.0,1.0]]}"#,
        ] {
            let s = parse_set_json(text).unwrap();
            assert_eq!(parse_set_json(&set_to_json(&s)).unwrap(), s);
        }
        let bare = parse_set_json(r#"{"type":"cloud","data":[0.25, 0.75]}"#).unwrap();
        assert_eq!(bare.dim(), Dim::One);
    }

    #[test]
    fn json_rejects_invalid_sets() {
        assert!(parse_set_json(r#"{"type":"cloud","data":[]}"#).is_err());
        assert!(parse_set_json(r#"{"type":"intervals","data":[[0.0,1.0],[0.5,2.0]]}"#).is_err());
        assert!(parse_set_json(r#"{"type":"blob","data":[[0.0]]}"#).is_err());
        assert!(parse_set_json(r#"{"type":"cloud","data":[[0.0],[1.0,2.0]]}"#).is_err());
    }

    #[test]
    fn csv_round_trip_with_header() {
        let s = set_from_str("x1,x2\n0.5,1\n2,-1\n").unwrap();
        let out = set_to_csv(&s, 1e-3).unwrap();
        assert_eq!(set_from_str(&out).unwrap(), s);
        assert!(set_from_str("x1\n0.1\nabc\n").is_err());
    }
}
