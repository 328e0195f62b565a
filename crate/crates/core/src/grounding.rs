//! Absolute-coordinate spatial primitives: boxes, points, time spans, the
//! JSON/XML grounding wire formats, and the evaluation metrics behind
//! detection, temporal grounding, and counting.
//!
//! Coordinates are integer pixels in the model-input (resized) image frame;
//! `rescale_box` bridges to original-pixel frames.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GroundingError {
    #[error("degenerate box [{0} {1} {2} {3}]: x1<x2 and y1<y2 required")]
    DegenerateBox(i64, i64, i64, i64),
    #[error("negative coordinate in box/point")]
    NegativeCoordinate,
    #[error("invalid time span [{0}, {1}]")]
    InvalidTimeSpan(f64, f64),
    #[error("no parseable payload in text")]
    NoPayload,
    #[error("expected {expected} coordinates, got {got}")]
    WrongCoordCount { expected: usize, got: usize },
    #[error("empty pair list")]
    EmptyPairs,
    #[error("payload is not valid {0}")]
    Malformed(&'static str),
}

/// Axis-aligned box in absolute pixels; x1<x2, y1<y2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
    pub label: String,
}

impl BBox {
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64, label: &str) -> Result<Self, GroundingError> {
        if x1 < 0 || y1 < 0 {
            return Err(GroundingError::NegativeCoordinate);
        }
        if x2 <= x1 || y2 <= y1 {
            return Err(GroundingError::DegenerateBox(x1, y1, x2, y2));
        }
        Ok(BBox {
            x1,
            y1,
            x2,
            y2,
            label: label.to_string(),
        })
    }

    pub fn area(&self) -> f64 {
        ((self.x2 - self.x1) * (self.y2 - self.y1)) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
    pub label: String,
}

impl Point {
    pub fn new(x: i64, y: i64, label: &str) -> Result<Self, GroundingError> {
        if x < 0 || y < 0 {
            return Err(GroundingError::NegativeCoordinate);
        }
        Ok(Point {
            x,
            y,
            label: label.to_string(),
        })
    }
}

/// Closed time interval in seconds; start < end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start: f64,
    pub end: f64,
}

impl TimeSpan {
    pub fn new(start: f64, end: f64) -> Result<Self, GroundingError> {
        if !(start >= 0.0 && start < end) {
            return Err(GroundingError::InvalidTimeSpan(start, end));
        }
        Ok(TimeSpan { start, end })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpatialItem {
    Box(BBox),
    Point(Point),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireFormat {
    Json,
    Xml,
}

/// Intersection-over-union with the continuous area convention
/// (x2-x1)*(y2-y1).
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0) as f64;
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0) as f64;
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    inter / union
}

pub fn temporal_iou(a: &TimeSpan, b: &TimeSpan) -> f64 {
    let inter = (a.end.min(b.end) - a.start.max(b.start)).max(0.0);
    let union = (a.end - a.start) + (b.end - b.start) - inter;
    inter / union
}

/// Mean temporal IoU over prediction/reference pairs.
pub fn miou(pairs: &[(TimeSpan, TimeSpan)]) -> Result<f64, GroundingError> {
    if pairs.is_empty() {
        return Err(GroundingError::EmptyPairs);
    }
    Ok(pairs.iter().map(|(a, b)| temporal_iou(a, b)).sum::<f64>() / pairs.len() as f64)
}

/// Linearly rescales a box between image frames (width, height), rounding to
/// the nearest pixel and clamping to bounds.
pub fn rescale_box(
    b: &BBox,
    from: (usize, usize),
    to: (usize, usize),
) -> Result<BBox, GroundingError> {
    let sx = to.0 as f64 / from.0 as f64;
    let sy = to.1 as f64 / from.1 as f64;
    let clamp = |v: f64, hi: usize| (v.round().max(0.0) as i64).min(hi as i64);
    let x1 = clamp(b.x1 as f64 * sx, to.0);
    let x2 = clamp(b.x2 as f64 * sx, to.0);
    let y1 = clamp(b.y1 as f64 * sy, to.1);
    let y2 = clamp(b.y2 as f64 * sy, to.1);
    if x2 <= x1 || y2 <= y1 {
        return Err(GroundingError::DegenerateBox(x1, y1, x2, y2));
    }
    BBox::new(x1, y1, x2, y2, &b.label)
}

/// Number of boxes whose label matches exactly.
pub fn count_objects(boxes: &[BBox], label: &str) -> usize {
    boxes.iter().filter(|b| b.label == label).count()
}

fn json_escape(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

/// Canonical serializer: stable key order, no extra whitespace.
pub fn serialize_spatial(items: &[SpatialItem], format: WireFormat) -> String {
    match format {
        WireFormat::Json => {
            let parts: Vec<String> = items
                .iter()
                .map(|item| match item {
                    SpatialItem::Box(b) => format!(
                        "{{\"bbox_2d\":[{},{},{},{}],\"label\":{}}}",
                        b.x1,
                        b.y1,
                        b.x2,
                        b.y2,
                        json_escape(&b.label)
                    ),
                    SpatialItem::Point(p) => format!(
                        "{{\"point_2d\":[{},{}],\"label\":{}}}",
                        p.x,
                        p.y,
                        json_escape(&p.label)
                    ),
                })
                .collect();
            format!("[{}]", parts.join(","))
        }
        WireFormat::Xml => items
            .iter()
            .map(|item| match item {
                SpatialItem::Box(b) => format!(
                    "<box label=\"{}\">{} {} {} {}</box>",
                    xml_escape(&b.label),
                    b.x1,
                    b.y1,
                    b.x2,
                    b.y2
                ),
                SpatialItem::Point(p) => format!(
                    "<point label=\"{}\">{} {}</point>",
                    xml_escape(&p.label),
                    p.x,
                    p.y
                ),
            })
            .collect::<Vec<_>>()
            .join(""),
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('"', "&quot;")
}

fn xml_unescape(s: &str) -> String {
    s.replace("&quot;", "\"").replace("&lt;", "<").replace("&amp;", "&")
}

/// Extracts the first balanced JSON array from possibly prose-wrapped text.
fn first_json_array(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    for start in 0..bytes.len() {
        if bytes[start] != b'[' {
            continue;
        }
        let mut depth = 0i32;
        let mut in_str = false;
        let mut escaped = false;
        for (i, &c) in bytes.iter().enumerate().skip(start) {
            if in_str {
                if escaped {
                    escaped = false;
                } else if c == b'\\' {
                    escaped = true;
                } else if c == b'"' {
                    in_str = false;
                }
                continue;
            }
            match c {
                b'"' => in_str = true,
                b'[' | b'{' => depth += 1,
                b']' | b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(&text[start..=i]);
                    }
                }
                _ => {}
            }
        }
    }
    None
}

fn coords_from_json(v: &serde_json::Value, expected: usize) -> Result<Vec<i64>, GroundingError> {
    let arr = v.as_array().ok_or(GroundingError::Malformed("json"))?;
    if arr.len() != expected {
        return Err(GroundingError::WrongCoordCount {
            expected,
            got: arr.len(),
        });
    }
    arr.iter()
        .map(|x| x.as_i64().ok_or(GroundingError::Malformed("json")))
        .collect()
}

/// Parses a serialized grounding payload, tolerating surrounding prose: the
/// first well-formed payload is extracted.
pub fn parse_spatial_output(
    text: &str,
    format: WireFormat,
) -> Result<Vec<SpatialItem>, GroundingError> {
    match format {
        WireFormat::Json => {
            let payload = first_json_array(text).ok_or(GroundingError::NoPayload)?;
            let value: serde_json::Value =
                serde_json::from_str(payload).map_err(|_| GroundingError::Malformed("json"))?;
            let arr = value.as_array().ok_or(GroundingError::Malformed("json"))?;
            let mut out = Vec::with_capacity(arr.len());
            for item in arr {
                let obj = item.as_object().ok_or(GroundingError::Malformed("json"))?;
                let label = obj
                    .get("label")
                    .and_then(|l| l.as_str())
                    .ok_or(GroundingError::Malformed("json"))?;
                if let Some(b) = obj.get("bbox_2d") {
                    let c = coords_from_json(b, 4)?;
                    out.push(SpatialItem::Box(BBox::new(c[0], c[1], c[2], c[3], label)?));
                } else if let Some(p) = obj.get("point_2d") {
                    let c = coords_from_json(p, 2)?;
                    out.push(SpatialItem::Point(Point::new(c[0], c[1], label)?));
                } else {
                    return Err(GroundingError::Malformed("json"));
                }
            }
            Ok(out)
        }
        WireFormat::Xml => parse_spatial_xml(text),
    }
}

fn parse_spatial_xml(text: &str) -> Result<Vec<SpatialItem>, GroundingError> {
    let mut out = Vec::new();
    let mut rest = text;
    loop {
        let Some(lt) = rest.find('<') else { break };
        rest = &rest[lt..];
        let (tag, expected) = if rest.starts_with("<box ") {
            ("box", 4)
        } else if rest.starts_with("<point ") {
            ("point", 2)
        } else {
            rest = &rest[1..];
            continue;
        };
        let close = format!("</{tag}>");
        let head_end = rest.find('>').ok_or(GroundingError::Malformed("xml"))?;
        let head = &rest[..head_end];
        let body_start = head_end + 1;
        let body_end = rest[body_start..]
            .find(&close)
            .ok_or(GroundingError::Malformed("xml"))?
            + body_start;
        let label_start = head
            .find("label=\"")
            .ok_or(GroundingError::Malformed("xml"))?
            + "label=\"".len();
        let label_end = head[label_start..]
            .find('"')
            .ok_or(GroundingError::Malformed("xml"))?
            + label_start;
        let label = xml_unescape(&head[label_start..label_end]);
        let coords: Vec<i64> = rest[body_start..body_end]
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| GroundingError::Malformed("xml")))
            .collect::<Result<_, _>>()?;
        if coords.len() != expected {
            return Err(GroundingError::WrongCoordCount {
                expected,
                got: coords.len(),
            });
        }
        out.push(match tag {
            "box" => SpatialItem::Box(BBox::new(
                coords[0], coords[1], coords[2], coords[3], &label,
            )?),
            _ => SpatialItem::Point(Point::new(coords[0], coords[1], &label)?),
        });
        rest = &rest[body_end + close.len()..];
    }
    if out.is_empty() && !text.contains("[]") {
        return Err(GroundingError::NoPayload);
    }
    Ok(out)
}
