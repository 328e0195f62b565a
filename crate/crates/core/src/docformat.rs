//! Parser, validator, and canonical serializer for the QwenVL HTML
//! omni-document format: a closed HTML subset whose tags carry absolute
//! pixel coordinates in `data-bbox` attributes.
//!
//! The grammar is small and fixed, so this is a dedicated recursive-descent
//! recognizer rather than a general HTML parser; canonical output is
//! byte-stable. Inner content (table cells, formulas, abc notation, SMILES)
//! is preserved verbatim as opaque text.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DocError {
    #[error("offset {0}: expected {1}")]
    Expected(usize, String),
    #[error("offset {0}: unknown tag")]
    UnknownTag(usize),
    #[error("unknown element class '{0}'")]
    UnknownClass(String),
    #[error("malformed data-bbox '{0}'")]
    BadBBox(String),
    #[error("missing or wrong format attribute for {0:?} (expected '{1}')")]
    BadFormatAttr(ElementKind, &'static str),
    #[error("unexpected format attribute on {0:?}")]
    UnexpectedFormatAttr(ElementKind),
    #[error("unclosed tag: missing '{0}'")]
    Unclosed(String),
    #[error("bad table class '{0}' (expected 'table<id>')")]
    BadTableClass(String),
    #[error("element {index}: {reason}")]
    InvariantViolation { index: usize, reason: String },
    #[error("layout json: {0}")]
    BadLayoutJson(String),
    #[error("trailing input after document end at offset {0}")]
    TrailingInput(usize),
}

/// Axis-aligned rectangle in absolute pixels; x1<x2, y1<y2, non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

impl Bounds {
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Result<Self, DocError> {
        if x1 < 0 || y1 < 0 || x2 <= x1 || y2 <= y1 {
            return Err(DocError::BadBBox(format!("{x1} {y1} {x2} {y2}")));
        }
        Ok(Bounds { x1, y1, x2, y2 })
    }

    pub fn contains(&self, other: &Bounds) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && self.x2 >= other.x2 && self.y2 >= other.y2
    }

    fn attr(&self) -> String {
        format!("{} {} {} {}", self.x1, self.y1, self.x2, self.y2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Paragraph,
    Table,
    Chart,
    Formula,
    ImageCaption,
    ImageOcr,
    MusicSheet,
    ChemicalFormula,
}

impl ElementKind {
    pub const ALL: [ElementKind; 8] = [
        ElementKind::Paragraph,
        ElementKind::Table,
        ElementKind::Chart,
        ElementKind::Formula,
        ElementKind::ImageCaption,
        ElementKind::ImageOcr,
        ElementKind::MusicSheet,
        ElementKind::ChemicalFormula,
    ];

    /// Class name in the div wrapper, for kinds that use one.
    fn class_name(&self) -> Option<&'static str> {
        match self {
            ElementKind::Chart => Some("chart"),
            ElementKind::Formula => Some("formula"),
            ElementKind::ImageCaption => Some("image caption"),
            ElementKind::ImageOcr => Some("image ocr"),
            ElementKind::MusicSheet => Some("music sheet"),
            ElementKind::ChemicalFormula => Some("chemical formula"),
            _ => None,
        }
    }

    fn from_class(class: &str) -> Option<ElementKind> {
        match class {
            "chart" => Some(ElementKind::Chart),
            "formula" => Some(ElementKind::Formula),
            "image caption" => Some(ElementKind::ImageCaption),
            "image ocr" => Some(ElementKind::ImageOcr),
            "music sheet" => Some(ElementKind::MusicSheet),
            "chemical formula" => Some(ElementKind::ChemicalFormula),
            _ => None,
        }
    }

    /// Required format attribute value, if any.
    fn required_format(&self) -> Option<&'static str> {
        match self {
            ElementKind::MusicSheet => Some("abc notation"),
            ElementKind::ChemicalFormula => Some("smile"),
            _ => None,
        }
    }

    /// Tag wrapping the content node inside a div element.
    fn content_tag(&self) -> &'static str {
        match self {
            ElementKind::Chart => "table",
            ElementKind::Formula | ElementKind::MusicSheet | ElementKind::ChemicalFormula => "div",
            ElementKind::ImageCaption | ElementKind::ImageOcr => "p",
            _ => unreachable!("paragraph and table do not use a div wrapper"),
        }
    }
}

/// One typed document element with its absolute bounding box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocElement {
    pub kind: ElementKind,
    pub bbox: Bounds,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inner_img_bbox: Option<Bounds>,
    pub content: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub format_attr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub table_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub table_style: Option<String>,
}

/// Ordered document: elements in reading order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DocTree {
    pub elements: Vec<DocElement>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub page_size: Option<(u64, u64)>,
}

// ---------------------------------------------------------------------------
// Parsing

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        self.pos += self.rest().len() - self.rest().trim_start().len();
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), DocError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(DocError::Expected(self.pos, format!("'{token}'")))
        }
    }

    /// Consumes verbatim content up to (not including) `closing`, then the
    /// closing token itself.
    fn until(&mut self, closing: &str) -> Result<&'a str, DocError> {
        match self.rest().find(closing) {
            Some(i) => {
                let content = &self.rest()[..i];
                self.pos += i + closing.len();
                Ok(content)
            }
            None => Err(DocError::Unclosed(closing.to_string())),
        }
    }

    /// Parses a quoted attribute value: `name="value"` with the leading
    /// `name="` already matched by the caller via eat().
    fn quoted(&mut self) -> Result<&'a str, DocError> {
        match self.rest().find('"') {
            Some(i) => {
                let v = &self.rest()[..i];
                self.pos += i + 1;
                Ok(v)
            }
            None => Err(DocError::Unclosed("\"".to_string())),
        }
    }
}

fn parse_bbox_attr(raw: &str) -> Result<Bounds, DocError> {
    let parts: Vec<&str> = raw.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(DocError::BadBBox(raw.to_string()));
    }
    let nums: Vec<i64> = parts
        .iter()
        .map(|p| p.parse::<i64>().map_err(|_| DocError::BadBBox(raw.to_string())))
        .collect::<Result<_, _>>()?;
    Bounds::new(nums[0], nums[1], nums[2], nums[3])
        .map_err(|_| DocError::BadBBox(raw.to_string()))
}

/// Parses a `<p data-bbox="...">content</p>` paragraph; the `<p` is already
/// consumed.
fn parse_paragraph(c: &mut Cursor) -> Result<DocElement, DocError> {
    c.skip_ws();
    c.expect("data-bbox=\"")?;
    let bbox = parse_bbox_attr(c.quoted()?)?;
    c.expect(">")?;
    let content = c.until("</p>")?.to_string();
    Ok(DocElement {
        kind: ElementKind::Paragraph,
        bbox,
        inner_img_bbox: None,
        content,
        format_attr: None,
        table_id: None,
        table_style: None,
    })
}

/// Parses `<style>...</style><table data-bbox class="tableN">...</table>`;
/// the `<style>` is already consumed.
fn parse_table(c: &mut Cursor) -> Result<DocElement, DocError> {
    let style = c.until("</style>")?.to_string();
    c.skip_ws();
    c.expect("<table ")?;
    c.skip_ws();
    c.expect("data-bbox=\"")?;
    let bbox = parse_bbox_attr(c.quoted()?)?;
    c.skip_ws();
    c.expect("class=\"")?;
    let class = c.quoted()?;
    let id = class
        .strip_prefix("table")
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| DocError::BadTableClass(class.to_string()))?;
    c.expect(">")?;
    let content = c.until("</table>")?.to_string();
    Ok(DocElement {
        kind: ElementKind::Table,
        bbox,
        inner_img_bbox: None,
        content,
        format_attr: None,
        table_id: Some(id),
        table_style: Some(style),
    })
}

/// Parses one of the six `<div class="...">` wrappers; the `<div ` is
/// already consumed.
fn parse_div_element(c: &mut Cursor) -> Result<DocElement, DocError> {
    let mut class: Option<String> = None;
    let mut format_attr: Option<String> = None;
    let mut bbox: Option<Bounds> = None;
    loop {
        c.skip_ws();
        if c.eat(">") {
            break;
        } else if c.eat("class=\"") {
            class = Some(c.quoted()?.to_string());
        } else if c.eat("format=\"") {
            format_attr = Some(c.quoted()?.to_string());
        } else if c.eat("data-bbox=\"") {
            bbox = Some(parse_bbox_attr(c.quoted()?)?);
        } else {
            return Err(DocError::Expected(
                c.pos,
                "class, format, or data-bbox attribute".into(),
            ));
        }
    }
    let class = class.ok_or(DocError::Expected(c.pos, "class attribute".into()))?;
    let kind = ElementKind::from_class(&class).ok_or(DocError::UnknownClass(class))?;
    let bbox = bbox.ok_or(DocError::Expected(c.pos, "data-bbox attribute".into()))?;
    match kind.required_format() {
        Some(req) => {
            if format_attr.as_deref() != Some(req) {
                return Err(DocError::BadFormatAttr(kind, req));
            }
        }
        None => {
            if format_attr.is_some() {
                return Err(DocError::UnexpectedFormatAttr(kind));
            }
        }
    }

    c.skip_ws();
    c.expect("<img ")?;
    c.skip_ws();
    c.expect("data-bbox=\"")?;
    let inner = parse_bbox_attr(c.quoted()?)?;
    c.skip_ws();
    c.expect("/>")?;
    c.skip_ws();
    let tag = kind.content_tag();
    c.expect(&format!("<{tag}>"))?;
    let content = c.until(&format!("</{tag}>"))?.to_string();
    c.skip_ws();
    c.expect("</div>")?;
    Ok(DocElement {
        kind,
        bbox,
        inner_img_bbox: Some(inner),
        content,
        format_attr: kind.required_format().map(|s| s.to_string()),
        table_id: None,
        table_style: None,
    })
}

/// Parses a QwenVL HTML document. Whitespace between elements is
/// insignificant; tags outside the closed grammar are rejected.
pub fn parse_qwenvl_html(text: &str) -> Result<DocTree, DocError> {
    let mut c = Cursor { text, pos: 0 };
    c.skip_ws();
    c.expect("<html>")?;
    c.skip_ws();
    c.expect("<body>")?;
    let mut elements = Vec::new();
    loop {
        c.skip_ws();
        // Both skeleton closing orders are accepted on input; the canonical
        // serializer always emits </html></body>.
        if c.eat("</html>") {
            c.skip_ws();
            c.expect("</body>")?;
            break;
        }
        if c.eat("</body>") {
            c.skip_ws();
            c.expect("</html>")?;
            break;
        }
        if c.eat("<p ") {
            elements.push(parse_paragraph(&mut c)?);
        } else if c.eat("<style>") {
            elements.push(parse_table(&mut c)?);
        } else if c.eat("<div ") {
            elements.push(parse_div_element(&mut c)?);
        } else if c.rest().is_empty() {
            return Err(DocError::Unclosed("</html></body>".to_string()));
        } else {
            return Err(DocError::UnknownTag(c.pos));
        }
    }
    c.skip_ws();
    if !c.rest().is_empty() {
        return Err(DocError::TrailingInput(c.pos));
    }
    Ok(DocTree {
        elements,
        page_size: None,
    })
}

// ---------------------------------------------------------------------------
// Serialization

fn check_element(index: usize, e: &DocElement) -> Result<(), DocError> {
    let fail = |reason: String| DocError::InvariantViolation { index, reason };
    match e.kind {
        ElementKind::Paragraph => {
            if e.content.contains("</p>") {
                return Err(fail("paragraph content contains '</p>'".into()));
            }
        }
        ElementKind::Table => {
            if e.table_id.is_none() {
                return Err(fail("table element requires table_id".into()));
            }
            if e.content.contains("</table>") {
                return Err(fail("table content contains '</table>'".into()));
            }
            if e.table_style.as_deref().unwrap_or("").contains("</style>") {
                return Err(fail("table style contains '</style>'".into()));
            }
        }
        kind => {
            if e.inner_img_bbox.is_none() {
                return Err(fail(format!("{kind:?} element requires inner_img_bbox")));
            }
            if let Some(req) = kind.required_format() {
                if e.format_attr.as_deref() != Some(req) {
                    return Err(fail(format!("{kind:?} requires format=\"{req}\"")));
                }
            }
            let close = format!("</{}>", kind.content_tag());
            if e.content.contains(&close) {
                return Err(fail(format!("content contains '{close}'")));
            }
        }
    }
    Ok(())
}

fn serialize_element(e: &DocElement) -> String {
    match e.kind {
        ElementKind::Paragraph => {
            format!("<p data-bbox=\"{}\">{}</p>", e.bbox.attr(), e.content)
        }
        ElementKind::Table => format!(
            "<style>{}</style><table data-bbox=\"{}\" class=\"table{}\">{}</table>",
            e.table_style.as_deref().unwrap_or(""),
            e.bbox.attr(),
            e.table_id.unwrap_or(0),
            e.content
        ),
        kind => {
            let fmt = kind
                .required_format()
                .map(|f| format!(" format=\"{f}\""))
                .unwrap_or_default();
            let tag = kind.content_tag();
            format!(
                "<div class=\"{}\"{} data-bbox=\"{}\"><img data-bbox=\"{}\" /><{}>{}</{}></div>",
                kind.class_name().expect("div-wrapped kind"),
                fmt,
                e.bbox.attr(),
                e.inner_img_bbox.expect("checked").attr(),
                tag,
                e.content,
                tag
            )
        }
    }
}

/// Canonical serializer: one element per line, single-space bbox attributes,
/// the exact tag/class/format spellings of the format. Fixpoint under
/// parse -> serialize.
pub fn serialize_qwenvl_html(tree: &DocTree) -> Result<String, DocError> {
    for (i, e) in tree.elements.iter().enumerate() {
        check_element(i, e)?;
    }
    if tree.elements.is_empty() {
        return Ok("<html><body></html></body>".to_string());
    }
    let mut out = String::from("<html><body>");
    for e in &tree.elements {
        out.push('\n');
        out.push_str(&serialize_element(e));
    }
    out.push_str("\n</html></body>");
    Ok(out)
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    OutOfBounds,
    ImgNotContained,
    ReadingOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub element: usize,
    pub kind: IssueKind,
    pub severity: Severity,
}

/// Reports layout problems; never mutates the tree. Reading-order checks are
/// a heuristic and reported as warnings.
pub fn validate(tree: &DocTree, page: (u64, u64)) -> Vec<Issue> {
    let mut issues = Vec::new();
    let (pw, ph) = (page.0 as i64, page.1 as i64);
    for (i, e) in tree.elements.iter().enumerate() {
        if e.bbox.x2 > pw || e.bbox.y2 > ph {
            issues.push(Issue {
                element: i,
                kind: IssueKind::OutOfBounds,
                severity: Severity::Error,
            });
        }
        if let Some(img) = &e.inner_img_bbox {
            if !e.bbox.contains(img) {
                issues.push(Issue {
                    element: i,
                    kind: IssueKind::ImgNotContained,
                    severity: Severity::Error,
                });
            }
        }
        if i > 0 {
            let prev = &tree.elements[i - 1].bbox;
            let height = e.bbox.y2 - e.bbox.y1;
            let overlaps_x = e.bbox.x1 < prev.x2 && prev.x1 < e.bbox.x2;
            if overlaps_x && prev.y1 - e.bbox.y1 > height {
                issues.push(Issue {
                    element: i,
                    kind: IssueKind::ReadingOrder,
                    severity: Severity::Warning,
                });
            }
        }
    }
    issues
}

// ---------------------------------------------------------------------------
// Neutral JSON interchange

/// Lossless JSON form of a document tree.
pub fn to_layout_json(tree: &DocTree) -> String {
    serde_json::to_string_pretty(tree).expect("doc tree serialization")
}

pub fn from_layout_json(json: &str) -> Result<DocTree, DocError> {
    let tree: DocTree =
        serde_json::from_str(json).map_err(|e| DocError::BadLayoutJson(e.to_string()))?;
    for (i, e) in tree.elements.iter().enumerate() {
        check_element(i, e)?;
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paragraph_doc() -> &'static str {
        "<html><body>\n<p data-bbox=\"10 10 200 40\">hello</p>\n</html></body>"
    }

    fn element(kind: ElementKind) -> DocElement {
        let bbox = Bounds::new(0, 0, 100, 80).unwrap();
        match kind {
            ElementKind::Paragraph => DocElement {
                kind,
                bbox,
                inner_img_bbox: None,
                content: "some text".into(),
                format_attr: None,
                table_id: None,
                table_style: None,
            },
            ElementKind::Table => DocElement {
                kind,
                bbox,
                inner_img_bbox: None,
                content: "<tr><td>v</td></tr>".into(),
                format_attr: None,
                table_id: Some(1),
                table_style: Some("table1 {border: 1px}".into()),
            },
            _ => DocElement {
                kind,
                bbox,
                inner_img_bbox: Some(Bounds::new(0, 0, 100, 60).unwrap()),
                content: "inner content".into(),
                format_attr: kind.required_format().map(|s| s.to_string()),
                table_id: None,
                table_style: None,
            },
        }
    }

    fn all_kinds_tree() -> DocTree {
        DocTree {
            elements: ElementKind::ALL.iter().map(|&k| element(k)).collect(),
            page_size: None,
        }
    }

    #[test]
    fn parses_single_paragraph() {
        let tree = parse_qwenvl_html(paragraph_doc()).unwrap();
        assert_eq!(tree.elements.len(), 1);
        let e = &tree.elements[0];
        assert_eq!(e.kind, ElementKind::Paragraph);
        assert_eq!(e.bbox, Bounds::new(10, 10, 200, 40).unwrap());
        assert_eq!(e.content, "hello");
    }

    #[test]
    fn empty_skeleton_both_closing_orders() {
        assert!(parse_qwenvl_html("<html><body></html></body>")
            .unwrap()
            .elements
            .is_empty());
        assert!(parse_qwenvl_html("<html><body></body></html>")
            .unwrap()
            .elements
            .is_empty());
    }

    #[test]
    fn chart_with_inner_img() {
        let doc = "<html><body><div class=\"chart\" data-bbox=\"0 0 100 80\"> \
                   <img data-bbox=\"0 0 100 60\" /><table>a,b\n1,2</table></div></html></body>";
        let tree = parse_qwenvl_html(doc).unwrap();
        assert_eq!(tree.elements.len(), 1);
        let e = &tree.elements[0];
        assert_eq!(e.kind, ElementKind::Chart);
        assert_eq!(e.inner_img_bbox, Some(Bounds::new(0, 0, 100, 60).unwrap()));
        assert_eq!(e.content, "a,b\n1,2");
    }

    #[test]
    fn table_keeps_style_and_id() {
        let doc = "<html><body><style>table3 {color: red}</style>\
                   <table data-bbox=\"5 5 50 50\" class=\"table3\">cells</table></html></body>";
        let tree = parse_qwenvl_html(doc).unwrap();
        let e = &tree.elements[0];
        assert_eq!(e.kind, ElementKind::Table);
        assert_eq!(e.table_id, Some(3));
        assert_eq!(e.table_style.as_deref(), Some("table3 {color: red}"));
        assert_eq!(e.content, "cells");
    }

    #[test]
    fn music_sheet_requires_format_attr() {
        let ok = "<html><body><div class=\"music sheet\" format=\"abc notation\" \
                  data-bbox=\"0 0 10 10\"><img data-bbox=\"0 0 5 5\" /><div>X:1</div></div>\
                  </html></body>";
        let tree = parse_qwenvl_html(ok).unwrap();
        assert_eq!(tree.elements[0].format_attr.as_deref(), Some("abc notation"));

        let missing = ok.replace(" format=\"abc notation\"", "");
        assert!(matches!(
            parse_qwenvl_html(&missing),
            Err(DocError::BadFormatAttr(ElementKind::MusicSheet, _))
        ));
    }

    #[test]
    fn chemical_formula_requires_smile() {
        let ok = "<html><body><div class=\"chemical formula\" format=\"smile\" \
                  data-bbox=\"0 0 10 10\"><img data-bbox=\"0 0 5 5\" /><div>C1=CC=CC=C1</div>\
                  </div></html></body>";
        assert!(parse_qwenvl_html(ok).is_ok());
        let wrong = ok.replace("format=\"smile\"", "format=\"abc notation\"");
        assert!(parse_qwenvl_html(&wrong).is_err());
    }

    #[test]
    fn rejection_fixtures_per_error_class() {
        // malformed bbox: wrong count
        let doc = "<html><body><p data-bbox=\"1 2 3\">x</p></html></body>";
        assert!(matches!(parse_qwenvl_html(doc), Err(DocError::BadBBox(_))));
        // malformed bbox: non-numeric
        let doc = "<html><body><p data-bbox=\"a b c d\">x</p></html></body>";
        assert!(matches!(parse_qwenvl_html(doc), Err(DocError::BadBBox(_))));
        // malformed bbox: x2 <= x1
        let doc = "<html><body><p data-bbox=\"10 0 5 20\">x</p></html></body>";
        assert!(matches!(parse_qwenvl_html(doc), Err(DocError::BadBBox(_))));
        // unknown element class
        let doc = "<html><body><div class=\"sidebar\" data-bbox=\"0 0 5 5\">\
                   <img data-bbox=\"0 0 1 1\" /><p>x</p></div></html></body>";
        assert!(matches!(parse_qwenvl_html(doc), Err(DocError::UnknownClass(_))));
        // unknown tag
        let doc = "<html><body><h1>title</h1></html></body>";
        assert!(matches!(parse_qwenvl_html(doc), Err(DocError::UnknownTag(_))));
        // unclosed tag
        let doc = "<html><body><p data-bbox=\"0 0 5 5\">x</html></body>";
        assert!(matches!(parse_qwenvl_html(doc), Err(DocError::Unclosed(_))));
        // bad table class
        let doc = "<html><body><style>s</style>\
                   <table data-bbox=\"0 0 5 5\" class=\"grid\">x</table></html></body>";
        assert!(matches!(parse_qwenvl_html(doc), Err(DocError::BadTableClass(_))));
        // trailing input
        let doc = "<html><body></html></body>extra";
        assert!(matches!(parse_qwenvl_html(doc), Err(DocError::TrailingInput(_))));
    }

    #[test]
    fn serialize_empty_tree() {
        let s = serialize_qwenvl_html(&DocTree::default()).unwrap();
        assert_eq!(s, "<html><body></html></body>");
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let tree = parse_qwenvl_html(paragraph_doc()).unwrap();
        let once = serialize_qwenvl_html(&tree).unwrap();
        let again = serialize_qwenvl_html(&parse_qwenvl_html(&once).unwrap()).unwrap();
        assert_eq!(once, again);
        assert_eq!(once, paragraph_doc());
    }

    #[test]
    fn all_kinds_roundtrip() {
        let tree = all_kinds_tree();
        let html = serialize_qwenvl_html(&tree).unwrap();
        let parsed = parse_qwenvl_html(&html).unwrap();
        assert_eq!(parsed, tree);
        assert_eq!(serialize_qwenvl_html(&parsed).unwrap(), html);
        assert!(html.contains("format=\"abc notation\""));
        assert!(html.contains("format=\"smile\""));
    }

    #[test]
    fn serializer_rejects_broken_invariants() {
        let mut e = element(ElementKind::MusicSheet);
        e.format_attr = None;
        let tree = DocTree {
            elements: vec![e],
            page_size: None,
        };
        assert!(matches!(
            serialize_qwenvl_html(&tree),
            Err(DocError::InvariantViolation { .. })
        ));

        let mut e = element(ElementKind::Table);
        e.table_id = None;
        let tree = DocTree {
            elements: vec![e],
            page_size: None,
        };
        assert!(serialize_qwenvl_html(&tree).is_err());
    }

    #[test]
    fn validator_flags_issues() {
        let tree = DocTree {
            elements: vec![element(ElementKind::Paragraph)],
            page_size: None,
        };
        assert!(validate(&tree, (200, 200)).is_empty());
        // bbox is 100x80; a 50x50 page puts it out of bounds
        let issues = validate(&tree, (50, 50));
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::OutOfBounds);

        let mut chart = element(ElementKind::Chart);
        chart.inner_img_bbox = Some(Bounds::new(50, 50, 300, 300).unwrap());
        let tree = DocTree {
            elements: vec![chart],
            page_size: None,
        };
        let issues = validate(&tree, (1000, 1000));
        assert!(issues.iter().any(|i| i.kind == IssueKind::ImgNotContained));
    }

    #[test]
    fn validator_reading_order_warning() {
        let mut below = element(ElementKind::Paragraph);
        below.bbox = Bounds::new(0, 500, 100, 540).unwrap();
        let mut above = element(ElementKind::Paragraph);
        above.bbox = Bounds::new(0, 10, 100, 50).unwrap();
        let tree = DocTree {
            elements: vec![below, above],
            page_size: None,
        };
        let issues = validate(&tree, (1000, 1000));
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::ReadingOrder);
        assert_eq!(issues[0].severity, Severity::Warning);
    }

    #[test]
    fn validator_does_not_mutate() {
        let tree = all_kinds_tree();
        let before = tree.clone();
        let _ = validate(&tree, (10, 10));
        assert_eq!(tree, before);
    }

    #[test]
    fn layout_json_roundtrip() {
        for tree in [
            DocTree::default(),
            parse_qwenvl_html(paragraph_doc()).unwrap(),
            all_kinds_tree(),
        ] {
            let json = to_layout_json(&tree);
            assert_eq!(from_layout_json(&json).unwrap(), tree);
        }
    }

    #[test]
    fn layout_json_rejects_schema_violations() {
        assert!(from_layout_json("{\"elements\": 3}").is_err());
        // structurally valid JSON but broken invariant (table without id)
        let json = "{\"elements\":[{\"kind\":\"table\",\"bbox\":{\"x1\":0,\"y1\":0,\"x2\":5,\"y2\":5},\"content\":\"x\"}]}";
        assert!(from_layout_json(json).is_err());
    }
}
