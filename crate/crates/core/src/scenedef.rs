//! The scene description format: an XML element tree with elements
//! `scene`, `source`, `diffuse`, `face`, `obstacle`, `receiver`,
//! `speaker`, `position`, `orientation` and per-element attributes.
//!
//! Parsing normalizes the document (defaults filled for nested values,
//! trajectory samples sorted by time) and resolving produces an
//! [`engine::Scene`] with all remaining defaults applied and degrees
//! converted to radians. Serializing a parsed document and parsing it
//! again yields an equal document, so `parse . serialize . parse =
//! parse`. Every diagnostic carries a stable code, a source location
//! where available, and a one-line remedy.
//!
//! Angles in scene files are degrees; lengths are meters; times are
//! seconds.

use std::fmt;
use std::fmt::Write as FmtWrite;
use std::path::{Path, PathBuf};

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::engine::{
    self, DiffuseDef, DiffuseInput, ObstacleDef, RangeBox, ReceiverDef, ReflectorDef, Scene,
    SceneParams, SourceDef, SourceInput,
};
use crate::geometry::{Euler, PlanarPolygon, PositionInterp, Trajectory, Vec3};
use crate::imagesource::{fit_reflection_coeffs, Reflector, DEFAULT_EDGE_EXPONENT};
use crate::receivers::{Dims, HoaDecoder, HrirSet, ReceiverFormat, SpeakerLayout};
use crate::transmission::{DelayInterp, Obstacle};

/// Coplanarity tolerance for face and obstacle vertices, meters.
pub const PLANARITY_TOLERANCE: f64 = 1e-6;

/// Source location (1-based line and column). Locations never take part
/// in document equality, so parsed and re-serialized documents compare
/// structurally.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagCode {
    Syntax,
    UnknownElement,
    UnknownAttribute,
    MissingAttribute,
    BadValue,
    BadTrajectory,
    DupName,
    NonPlanar,
    FormatMismatch,
    MissingFile,
    NoSources,
    IrregularRing,
    RampTooLarge,
    TrajectoryBeyond,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::Syntax => "SYNTAX",
            DiagCode::UnknownElement => "UNKNOWN_ELEMENT",
            DiagCode::UnknownAttribute => "UNKNOWN_ATTRIBUTE",
            DiagCode::MissingAttribute => "MISSING_ATTRIBUTE",
            DiagCode::BadValue => "BAD_VALUE",
            DiagCode::BadTrajectory => "BAD_TRAJECTORY",
            DiagCode::DupName => "DUP_NAME",
            DiagCode::NonPlanar => "NONPLANAR",
            DiagCode::FormatMismatch => "FORMAT_MISMATCH",
            DiagCode::MissingFile => "MISSING_FILE",
            DiagCode::NoSources => "NO_SOURCES",
            DiagCode::IrregularRing => "IRREGULAR_RING",
            DiagCode::RampTooLarge => "RAMP_TOO_LARGE",
            DiagCode::TrajectoryBeyond => "TRAJECTORY_BEYOND",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub severity: Severity,
    pub location: Option<Loc>,
    pub message: String,
    pub remedy: String,
}

impl Diagnostic {
    fn error(code: DiagCode, location: Option<Loc>, message: String, remedy: &str) -> Diagnostic {
        Diagnostic { code, severity: Severity::Error, location, message, remedy: remedy.into() }
    }

    fn warning(code: DiagCode, location: Option<Loc>, message: String, remedy: &str) -> Diagnostic {
        Diagnostic { code, severity: Severity::Warning, location, message, remedy: remedy.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} {}", self.code.as_str())?;
        if let Some(loc) = self.location {
            write!(f, " at {loc}")?;
        }
        write!(f, ": {}. {}", self.message, self.remedy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajInterp {
    Cartesian,
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpKind {
    Nearest,
    Sinc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Euler angles in degrees, file order z y x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationSample {
    pub t: f64,
    pub z: f64,
    pub y: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputElem {
    Sound { file: String, looped: bool, gain: f64 },
    Sine { frequency: f64, amplitude: f64 },
    Noise { seed: u64, amplitude: f64 },
    Impulse { at: u64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceElem {
    pub loc: Loc,
    pub name: String,
    pub gain: Option<f64>,
    pub f6db: Option<f64>,
    pub interp: Option<TrajInterp>,
    pub positions: Vec<PositionSample>,
    pub orientations: Vec<OrientationSample>,
    pub input: Option<InputElem>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxElem {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub ramp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffuseElem {
    pub loc: Loc,
    pub name: String,
    pub gain: Option<f64>,
    pub interp: Option<TrajInterp>,
    pub positions: Vec<PositionSample>,
    pub orientations: Vec<OrientationSample>,
    pub range_box: Option<BoxElem>,
    pub input: Option<InputElem>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexElem {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceElem {
    pub loc: Loc,
    pub name: String,
    pub reflectivity: Option<f64>,
    pub damping: Option<f64>,
    pub kappa: Option<f64>,
    pub vertices: Vec<VertexElem>,
    /// Frequency/absorption targets, alternative to rho/delta.
    pub absorption: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleElem {
    pub loc: Loc,
    pub name: String,
    pub attenuation: Option<f64>,
    pub vertices: Vec<VertexElem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatKind {
    Vmic,
    Nsp,
    Vbap,
    Hoa2d,
    Amb,
    Binaural,
}

impl FormatKind {
    fn as_str(self) -> &'static str {
        match self {
            FormatKind::Vmic => "vmic",
            FormatKind::Nsp => "nsp",
            FormatKind::Vbap => "vbap",
            FormatKind::Hoa2d => "hoa2d",
            FormatKind::Amb => "amb",
            FormatKind::Binaural => "binaural",
        }
    }
}

/// Speaker position in degrees/meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeakerElem {
    pub az: f64,
    pub el: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverElem {
    pub loc: Loc,
    pub name: String,
    pub format: FormatKind,
    pub directivity: Option<f64>,
    pub order: Option<u32>,
    pub decoder: Option<HoaDecoder>,
    pub dims: Option<Dims>,
    pub interp: Option<TrajInterp>,
    pub positions: Vec<PositionSample>,
    pub orientations: Vec<OrientationSample>,
    pub speakers: Vec<SpeakerElem>,
    pub hrir_manifest: Option<String>,
}

/// Parsed, normalized scene document. Attribute values are stored in
/// file units (degrees, meters, seconds); optional attributes stay
/// `None` until resolve applies the defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneDocument {
    pub name: Option<String>,
    pub sample_rate: Option<f64>,
    pub speed_of_sound: Option<f64>,
    pub block_len: Option<u32>,
    pub image_order: Option<u32>,
    pub air_constant: Option<f64>,
    pub r_min: Option<f64>,
    pub max_distance: Option<f64>,
    pub interpolation: Option<InterpKind>,
    pub sinc_taps: Option<u32>,
    pub sources: Vec<SourceElem>,
    pub diffuse: Vec<DiffuseElem>,
    pub faces: Vec<FaceElem>,
    pub obstacles: Vec<ObstacleElem>,
    pub receivers: Vec<ReceiverElem>,
}

// ---------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------

struct Parser<'a> {
    text: &'a str,
    line_starts: Vec<usize>,
    diags: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        let mut line_starts = vec![0usize];
        for (i, b) in text.bytes().enumerate() {
            if b == b'\n' {
                line_starts.push(i + 1);
            }
        }
        Parser { text, line_starts, diags: Vec::new() }
    }

    fn loc(&self, offset: usize) -> Loc {
        let line = self.line_starts.partition_point(|&s| s <= offset);
        let col = offset - self.line_starts[line - 1] + 1;
        Loc { line: line as u32, col: col as u32 }
    }

    /// Location of the next tag at or after `offset` (the reader reports
    /// positions from the end of the previous event).
    fn tag_loc(&self, offset: usize) -> Loc {
        let next = self.text[offset.min(self.text.len())..]
            .find('<')
            .map(|i| offset + i)
            .unwrap_or(offset);
        self.loc(next)
    }

    fn error(&mut self, code: DiagCode, loc: Loc, message: String, remedy: &str) {
        self.diags.push(Diagnostic::error(code, Some(loc), message, remedy));
    }
}

/// Attributes of one start tag, with consumption tracking so unknown
/// attributes can be reported.
struct Attrs {
    loc: Loc,
    elem: String,
    entries: Vec<(String, String, bool)>,
}

impl Attrs {
    fn take(&mut self, name: &str) -> Option<String> {
        for (k, v, used) in &mut self.entries {
            if k == name {
                *used = true;
                return Some(v.clone());
            }
        }
        None
    }

    fn req(&mut self, name: &str, p: &mut Parser) -> Option<String> {
        let v = self.take(name);
        if v.is_none() {
            p.error(
                DiagCode::MissingAttribute,
                self.loc,
                format!("element <{}> is missing required attribute '{name}'", self.elem),
                "Add the attribute",
            );
        }
        v
    }

    fn parse_f64(&mut self, name: &str, p: &mut Parser) -> Option<f64> {
        let raw = self.take(name)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                p.error(
                    DiagCode::BadValue,
                    self.loc,
                    format!("attribute '{name}' of <{}> is not a finite number: '{raw}'", self.elem),
                    "Use a plain decimal number",
                );
                None
            }
        }
    }

    fn req_f64(&mut self, name: &str, p: &mut Parser) -> Option<f64> {
        let raw = self.req(name, p)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                p.error(
                    DiagCode::BadValue,
                    self.loc,
                    format!("attribute '{name}' of <{}> is not a finite number: '{raw}'", self.elem),
                    "Use a plain decimal number",
                );
                None
            }
        }
    }

    fn parse_u64(&mut self, name: &str, p: &mut Parser) -> Option<u64> {
        let raw = self.take(name)?;
        match raw.parse::<u64>() {
            Ok(v) => Some(v),
            _ => {
                p.error(
                    DiagCode::BadValue,
                    self.loc,
                    format!("attribute '{name}' of <{}> is not an integer: '{raw}'", self.elem),
                    "Use a non-negative integer",
                );
                None
            }
        }
    }

    fn parse_bool(&mut self, name: &str, p: &mut Parser) -> Option<bool> {
        let raw = self.take(name)?;
        match raw.as_str() {
            "true" | "1" => Some(true),
            "false" | "0" => Some(false),
            _ => {
                p.error(
                    DiagCode::BadValue,
                    self.loc,
                    format!("attribute '{name}' of <{}> must be true or false", self.elem),
                    "Use true or false",
                );
                None
            }
        }
    }

    fn parse_interp(&mut self, p: &mut Parser) -> Option<TrajInterp> {
        let raw = self.take("interp")?;
        match raw.as_str() {
            "cartesian" => Some(TrajInterp::Cartesian),
            "spherical" => Some(TrajInterp::Spherical),
            _ => {
                p.error(
                    DiagCode::BadValue,
                    self.loc,
                    format!("unknown interpolation mode '{raw}'"),
                    "Use cartesian or spherical",
                );
                None
            }
        }
    }

    fn finish(self, p: &mut Parser) {
        for (k, _, used) in &self.entries {
            if !used {
                p.error(
                    DiagCode::UnknownAttribute,
                    self.loc,
                    format!("unknown attribute '{k}' on <{}>", self.elem),
                    "Remove it or check the spelling",
                );
            }
        }
    }
}

/// One element with its children, read eagerly from the event stream.
struct Elem {
    name: String,
    attrs: Attrs,
    children: Vec<Elem>,
}

fn elem_from_tag(tag: &quick_xml::events::BytesStart, loc: Loc, p: &mut Parser) -> Elem {
    let name = String::from_utf8_lossy(tag.name().as_ref()).to_string();
    let mut entries = Vec::new();
    for attr in tag.attributes() {
        match attr {
            Ok(a) => {
                let key = String::from_utf8_lossy(a.key.as_ref()).to_string();
                match a.unescape_value() {
                    Ok(v) => entries.push((key, v.to_string(), false)),
                    Err(e) => p.error(
                        DiagCode::Syntax,
                        loc,
                        format!("bad attribute value for '{key}': {e}"),
                        "Fix the xml escaping",
                    ),
                }
            }
            Err(e) => {
                p.error(DiagCode::Syntax, loc, format!("bad attribute: {e}"), "Fix the xml syntax")
            }
        }
    }
    Elem { name: name.clone(), attrs: Attrs { loc, elem: name, entries }, children: Vec::new() }
}

fn read_tree(p: &mut Parser) -> Option<Elem> {
    let mut reader = Reader::from_str(p.text);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<Elem> = Vec::new();
    let mut root: Option<Elem> = None;
    loop {
        let at = reader.buffer_position() as usize;
        match reader.read_event() {
            Err(e) => {
                let loc = p.loc(reader.buffer_position() as usize);
                p.error(DiagCode::Syntax, loc, format!("xml error: {e}"), "Fix the xml syntax");
                return None;
            }
            Ok(Event::Eof) => break,
            Ok(Event::Start(tag)) => {
                let elem = elem_from_tag(&tag, p.tag_loc(at), p);
                stack.push(elem);
            }
            Ok(Event::Empty(tag)) => {
                let elem = elem_from_tag(&tag, p.tag_loc(at), p);
                attach(&mut stack, &mut root, elem, p);
            }
            Ok(Event::End(_)) => {
                if let Some(done) = stack.pop() {
                    attach(&mut stack, &mut root, done, p);
                }
            }
            Ok(Event::Text(t)) => {
                let content = t.unescape().unwrap_or_default().to_string();
                if !content.trim().is_empty() {
                    let loc = p.loc(at);
                    p.error(
                        DiagCode::Syntax,
                        loc,
                        format!("unexpected text content '{}'", content.trim()),
                        "Scene files carry data in attributes only",
                    );
                }
            }
            Ok(_) => {} // declarations, comments
        }
    }
    root
}

fn attach(stack: &mut Vec<Elem>, root: &mut Option<Elem>, done: Elem, p: &mut Parser) {
    match stack.last_mut() {
        Some(parent) => parent.children.push(done),
        None => {
            if root.is_some() {
                p.error(
                    DiagCode::Syntax,
                    done.attrs.loc,
                    "multiple root elements".into(),
                    "Keep a single <scene> root",
                );
            } else {
                *root = Some(done);
            }
        }
    }
}

/// Parse scene text into a normalized document. All syntax-level
/// problems are collected; any error fails the parse.
pub fn parse_document(text: &str) -> Result<SceneDocument, Vec<Diagnostic>> {
    let mut p = Parser::new(text);
    let root = read_tree(&mut p);
    let mut doc = SceneDocument::default();
    if let Some(mut root) = root {
        if root.name != "scene" {
            p.error(
                DiagCode::UnknownElement,
                root.attrs.loc,
                format!("root element must be <scene>, found <{}>", root.name),
                "Wrap the content in a <scene> element",
            );
        } else {
            doc.name = root.attrs.take("name");
            doc.sample_rate = root.attrs.parse_f64("fs", &mut p);
            doc.speed_of_sound = root.attrs.parse_f64("c", &mut p);
            doc.block_len = root.attrs.parse_u64("blocksize", &mut p).map(|v| v as u32);
            doc.image_order = root.attrs.parse_u64("order", &mut p).map(|v| v as u32);
            doc.air_constant = root.attrs.parse_f64("alpha", &mut p);
            doc.r_min = root.attrs.parse_f64("rmin", &mut p);
            doc.max_distance = root.attrs.parse_f64("maxdist", &mut p);
            doc.interpolation = root.attrs.take("interpolation").and_then(|v| match v.as_str() {
                "nearest" => Some(InterpKind::Nearest),
                "sinc" => Some(InterpKind::Sinc),
                other => {
                    p.error(
                        DiagCode::BadValue,
                        root.attrs.loc,
                        format!("unknown interpolation '{other}'"),
                        "Use nearest or sinc",
                    );
                    None
                }
            });
            doc.sinc_taps = root.attrs.parse_u64("sinctaps", &mut p).map(|v| v as u32);
            root.attrs.finish(&mut p);
            for child in root.children {
                parse_scene_child(child, &mut doc, &mut p);
            }
        }
    } else if p.diags.is_empty() {
        p.diags.push(Diagnostic::error(
            DiagCode::Syntax,
            None,
            "no root element found".into(),
            "Provide a <scene> element",
        ));
    }
    if p.diags.iter().any(|d| d.severity == Severity::Error) {
        Err(p.diags)
    } else {
        Ok(doc)
    }
}

fn parse_scene_child(mut elem: Elem, doc: &mut SceneDocument, p: &mut Parser) {
    let loc = elem.attrs.loc;
    match elem.name.as_str() {
        "source" => {
            let name = elem.attrs.req("name", p).unwrap_or_default();
            let gain = elem.attrs.parse_f64("gain", p);
            let f6db = elem.attrs.parse_f64("f6db", p);
            let interp = elem.attrs.parse_interp(p);
            elem.attrs.finish(p);
            let (positions, orientations, input, _, _, _) = parse_object_children(elem.children, p, "source");
            doc.sources.push(SourceElem { loc, name, gain, f6db, interp, positions, orientations, input });
        }
        "diffuse" => {
            let name = elem.attrs.req("name", p).unwrap_or_default();
            let gain = elem.attrs.parse_f64("gain", p);
            let interp = elem.attrs.parse_interp(p);
            elem.attrs.finish(p);
            let (positions, orientations, input, range_box, _, _) =
                parse_object_children(elem.children, p, "diffuse");
            doc.diffuse.push(DiffuseElem { loc, name, gain, interp, positions, orientations, range_box, input });
        }
        "face" => {
            let name = elem.attrs.req("name", p).unwrap_or_default();
            let reflectivity = elem.attrs.parse_f64("rho", p);
            let damping = elem.attrs.parse_f64("delta", p);
            let kappa = elem.attrs.parse_f64("kappa", p);
            elem.attrs.finish(p);
            let mut vertices = Vec::new();
            let mut absorption = Vec::new();
            for mut child in elem.children {
                match child.name.as_str() {
                    "vertex" => {
                        if let (Some(x), Some(y), Some(z)) = (
                            child.attrs.req_f64("x", p),
                            child.attrs.req_f64("y", p),
                            child.attrs.req_f64("z", p),
                        ) {
                            vertices.push(VertexElem { x, y, z });
                        }
                        child.attrs.finish(p);
                    }
                    "absorption" => {
                        if let (Some(f), Some(a)) =
                            (child.attrs.req_f64("f", p), child.attrs.req_f64("alpha", p))
                        {
                            absorption.push((f, a));
                        }
                        child.attrs.finish(p);
                    }
                    other => unknown_child(other, "face", child.attrs.loc, p),
                }
            }
            doc.faces.push(FaceElem { loc, name, reflectivity, damping, kappa, vertices, absorption });
        }
        "obstacle" => {
            let name = elem.attrs.req("name", p).unwrap_or_default();
            let attenuation = elem.attrs.parse_f64("attenuation", p);
            elem.attrs.finish(p);
            let mut vertices = Vec::new();
            for mut child in elem.children {
                match child.name.as_str() {
                    "vertex" => {
                        if let (Some(x), Some(y), Some(z)) = (
                            child.attrs.req_f64("x", p),
                            child.attrs.req_f64("y", p),
                            child.attrs.req_f64("z", p),
                        ) {
                            vertices.push(VertexElem { x, y, z });
                        }
                        child.attrs.finish(p);
                    }
                    other => unknown_child(other, "obstacle", child.attrs.loc, p),
                }
            }
            doc.obstacles.push(ObstacleElem { loc, name, attenuation, vertices });
        }
        "receiver" => {
            let name = elem.attrs.req("name", p).unwrap_or_default();
            let format = match elem.attrs.req("format", p).as_deref() {
                Some("vmic") => FormatKind::Vmic,
                Some("nsp") => FormatKind::Nsp,
                Some("vbap") => FormatKind::Vbap,
                Some("hoa2d") => FormatKind::Hoa2d,
                Some("amb") => FormatKind::Amb,
                Some("binaural") => FormatKind::Binaural,
                Some(other) => {
                    p.error(
                        DiagCode::BadValue,
                        loc,
                        format!("unknown receiver format '{other}'"),
                        "Use vmic, nsp, vbap, hoa2d, amb or binaural",
                    );
                    FormatKind::Vmic
                }
                None => FormatKind::Vmic,
            };
            let directivity = elem.attrs.parse_f64("a", p);
            let order = elem.attrs.parse_u64("order", p).map(|v| v as u32);
            let decoder = elem.attrs.take("decoder").and_then(|v| match v.as_str() {
                "basic" => Some(HoaDecoder::Basic),
                "maxre" => Some(HoaDecoder::MaxRe),
                other => {
                    p.error(
                        DiagCode::BadValue,
                        loc,
                        format!("unknown decoder '{other}'"),
                        "Use basic or maxre",
                    );
                    None
                }
            });
            let dims = elem.attrs.take("dims").and_then(|v| match v.as_str() {
                "2d" => Some(Dims::TwoD),
                "3d" => Some(Dims::ThreeD),
                other => {
                    p.error(DiagCode::BadValue, loc, format!("unknown dims '{other}'"), "Use 2d or 3d");
                    None
                }
            });
            let interp = elem.attrs.parse_interp(p);
            elem.attrs.finish(p);
            let (positions, orientations, _, _, speakers, hrir_manifest) =
                parse_object_children(elem.children, p, "receiver");
            doc.receivers.push(ReceiverElem {
                loc,
                name,
                format,
                directivity,
                order,
                decoder,
                dims,
                interp,
                positions,
                orientations,
                speakers,
                hrir_manifest,
            });
        }
        other => unknown_child(other, "scene", loc, p),
    }
}

fn unknown_child(name: &str, parent: &str, loc: Loc, p: &mut Parser) {
    p.error(
        DiagCode::UnknownElement,
        loc,
        format!("unknown element <{name}> inside <{parent}>"),
        "Remove it or check the spelling",
    );
}

type ObjectChildren = (
    Vec<PositionSample>,
    Vec<OrientationSample>,
    Option<InputElem>,
    Option<BoxElem>,
    Vec<SpeakerElem>,
    Option<String>,
);

fn parse_object_children(children: Vec<Elem>, p: &mut Parser, parent: &str) -> ObjectChildren {
    let mut positions = Vec::new();
    let mut orientations = Vec::new();
    let mut input = None;
    let mut range_box = None;
    let mut speakers = Vec::new();
    let mut hrir = None;
    for mut child in children {
        let loc = child.attrs.loc;
        match child.name.as_str() {
            "position" => {
                let t = child.attrs.parse_f64("t", p).unwrap_or(0.0);
                if let (Some(x), Some(y), Some(z)) = (
                    child.attrs.req_f64("x", p),
                    child.attrs.req_f64("y", p),
                    child.attrs.req_f64("z", p),
                ) {
                    positions.push(PositionSample { t, x, y, z });
                }
                child.attrs.finish(p);
            }
            "orientation" => {
                let t = child.attrs.parse_f64("t", p).unwrap_or(0.0);
                let z = child.attrs.parse_f64("z", p).unwrap_or(0.0);
                let y = child.attrs.parse_f64("y", p).unwrap_or(0.0);
                let x = child.attrs.parse_f64("x", p).unwrap_or(0.0);
                orientations.push(OrientationSample { t, z, y, x });
                child.attrs.finish(p);
            }
            "sound" if parent != "receiver" => {
                let file = child.attrs.req("file", p).unwrap_or_default();
                let looped = child.attrs.parse_bool("loop", p).unwrap_or(false);
                let gain = child.attrs.parse_f64("gain", p).unwrap_or(1.0);
                child.attrs.finish(p);
                set_input(&mut input, InputElem::Sound { file, looped, gain }, loc, p);
            }
            "sine" if parent == "source" => {
                let frequency = child.attrs.req_f64("f", p).unwrap_or(1000.0);
                let amplitude = child.attrs.parse_f64("a", p).unwrap_or(1.0);
                child.attrs.finish(p);
                set_input(&mut input, InputElem::Sine { frequency, amplitude }, loc, p);
            }
            "noise" if parent != "receiver" => {
                let seed = child.attrs.parse_u64("seed", p).unwrap_or(1);
                let amplitude = child.attrs.parse_f64("a", p).unwrap_or(1.0);
                child.attrs.finish(p);
                set_input(&mut input, InputElem::Noise { seed, amplitude }, loc, p);
            }
            "impulse" if parent == "source" => {
                let at = child.attrs.parse_u64("at", p).unwrap_or(0);
                let amplitude = child.attrs.parse_f64("a", p).unwrap_or(1.0);
                child.attrs.finish(p);
                set_input(&mut input, InputElem::Impulse { at, amplitude }, loc, p);
            }
            "box" if parent == "diffuse" => {
                if let (Some(dx), Some(dy), Some(dz)) = (
                    child.attrs.req_f64("dx", p),
                    child.attrs.req_f64("dy", p),
                    child.attrs.req_f64("dz", p),
                ) {
                    let ramp = child.attrs.parse_f64("ramp", p).unwrap_or(0.0);
                    range_box = Some(BoxElem { dx, dy, dz, ramp });
                }
                child.attrs.finish(p);
            }
            "speaker" if parent == "receiver" => {
                if let Some(az) = child.attrs.req_f64("az", p) {
                    let el = child.attrs.parse_f64("el", p).unwrap_or(0.0);
                    let r = child.attrs.parse_f64("r", p).unwrap_or(1.0);
                    speakers.push(SpeakerElem { az, el, r });
                }
                child.attrs.finish(p);
            }
            "hrir" if parent == "receiver" => {
                hrir = child.attrs.req("manifest", p);
                child.attrs.finish(p);
            }
            other => unknown_child(other, parent, loc, p),
        }
    }
    // Normalization: trajectory samples sorted by time; duplicates are an
    // error.
    positions.sort_by(|a, b| a.t.total_cmp(&b.t));
    orientations.sort_by(|a, b| a.t.total_cmp(&b.t));
    for w in positions.windows(2) {
        if w[0].t == w[1].t {
            p.error(
                DiagCode::BadTrajectory,
                Loc::default(),
                format!("duplicate position sample time {} in <{parent}>", w[0].t),
                "Give every sample a distinct time",
            );
        }
    }
    for w in orientations.windows(2) {
        if w[0].t == w[1].t {
            p.error(
                DiagCode::BadTrajectory,
                Loc::default(),
                format!("duplicate orientation sample time {} in <{parent}>", w[0].t),
                "Give every sample a distinct time",
            );
        }
    }
    (positions, orientations, input, range_box, speakers, hrir)
}

fn set_input(slot: &mut Option<InputElem>, value: InputElem, loc: Loc, p: &mut Parser) {
    if slot.is_some() {
        p.error(
            DiagCode::BadValue,
            loc,
            "multiple audio inputs on one object".into(),
            "Keep a single sound/sine/noise/impulse child",
        );
    } else {
        *slot = Some(value);
    }
}

// ---------------------------------------------------------------------
// Resolve: document -> engine scene
// ---------------------------------------------------------------------

struct Resolver {
    diags: Vec<Diagnostic>,
}

impl Resolver {
    fn error(&mut self, code: DiagCode, loc: Loc, message: String, remedy: &str) {
        self.diags.push(Diagnostic::error(code, Some(loc), message, remedy));
    }
}

fn speaker_layout_from(x: &ReceiverElem, r: &mut Resolver) -> Option<SpeakerLayout> {
    let positions: Vec<Vec3> = x
        .speakers
        .iter()
        .map(|s| Vec3::from_spherical(s.r, s.az.to_radians(), s.el.to_radians()))
        .collect();
    match SpeakerLayout::new(positions) {
        Ok(l) => Some(l),
        Err(e) => {
            r.error(
                DiagCode::FormatMismatch,
                x.loc,
                format!("receiver '{}': {e}", x.name),
                "Add <speaker az el r> children",
            );
            None
        }
    }
}

fn trajectory_from(
    positions: &[PositionSample],
    orientations: &[OrientationSample],
    interp: Option<TrajInterp>,
    loc: Loc,
    what: &str,
    r: &mut Resolver,
) -> Trajectory {
    if positions.is_empty() {
        r.error(
            DiagCode::MissingAttribute,
            loc,
            format!("{what} needs at least one <position> sample"),
            "Add a <position t x y z> child",
        );
        return Trajectory::fixed(Vec3::ZERO, Euler::IDENTITY);
    }
    let pos: Vec<(f64, Vec3)> =
        positions.iter().map(|s| (s.t, Vec3::new(s.x, s.y, s.z))).collect();
    let orient: Vec<(f64, Euler)> = orientations
        .iter()
        .map(|s| (s.t, Euler::new(s.z.to_radians(), s.y.to_radians(), s.x.to_radians())))
        .collect();
    let mode = match interp {
        Some(TrajInterp::Spherical) => PositionInterp::Spherical,
        _ => PositionInterp::Cartesian,
    };
    match Trajectory::new(pos, orient, mode) {
        Ok(t) => t,
        Err(e) => {
            r.error(
                DiagCode::BadTrajectory,
                loc,
                format!("{what}: {e}"),
                "Fix the trajectory samples",
            );
            Trajectory::fixed(Vec3::ZERO, Euler::IDENTITY)
        }
    }
}

fn polygon_from(vertices: &[VertexElem], loc: Loc, what: &str, r: &mut Resolver) -> Option<PlanarPolygon> {
    if vertices.len() < 3 {
        r.error(
            DiagCode::MissingAttribute,
            loc,
            format!("{what} needs at least 3 <vertex> children, got {}", vertices.len()),
            "Add vertices",
        );
        return None;
    }
    let verts: Vec<Vec3> = vertices.iter().map(|v| Vec3::new(v.x, v.y, v.z)).collect();
    match PlanarPolygon::new(verts) {
        Ok(poly) => {
            let residual = poly.coplanarity_residual();
            if residual > PLANARITY_TOLERANCE {
                r.error(
                    DiagCode::NonPlanar,
                    loc,
                    format!("{what} vertices deviate {residual:.2e} m from a common plane (tolerance {PLANARITY_TOLERANCE:.0e})"),
                    "Move the vertices onto one plane or split the polygon",
                );
                return None;
            }
            Some(poly)
        }
        Err(e) => {
            r.error(DiagCode::BadValue, loc, format!("{what}: {e}"), "Fix the vertex list");
            None
        }
    }
}

fn source_input_from(input: &Option<InputElem>, base: &Path) -> SourceInput {
    match input {
        None => SourceInput::Silence,
        Some(InputElem::Sound { file, looped, gain }) => SourceInput::File {
            path: base.join(file),
            looped: *looped,
            gain: *gain,
        },
        Some(InputElem::Sine { frequency, amplitude }) => SourceInput::Sine {
            frequency: *frequency,
            amplitude: *amplitude,
        },
        Some(InputElem::Noise { seed, amplitude }) => SourceInput::Noise {
            seed: *seed,
            amplitude: *amplitude,
        },
        Some(InputElem::Impulse { at, amplitude }) => SourceInput::Impulse {
            at: *at,
            amplitude: *amplitude,
        },
    }
}

/// Resolve a document into an engine scene, applying the defaults
/// (c = 340 m/s, fs = 44.1 kHz, block 1024, image order 1, kappa = 2.7,
/// r_min = 0.1 m, maxdist 1000 m, sinc interpolation). File paths are
/// joined onto `base`.
pub fn resolve(doc: &SceneDocument, base: &Path) -> Result<Scene, Vec<Diagnostic>> {
    let mut r = Resolver { diags: Vec::new() };
    let params = SceneParams {
        name: doc.name.clone().unwrap_or_default(),
        sample_rate: doc.sample_rate.unwrap_or(44100.0),
        speed_of_sound: doc.speed_of_sound.unwrap_or(340.0),
        block_len: doc.block_len.unwrap_or(1024) as usize,
        image_order: doc.image_order.unwrap_or(1),
        air_constant: doc.air_constant.unwrap_or(7782.0),
        r_min: doc.r_min.unwrap_or(0.1),
        max_delay_distance: doc.max_distance.unwrap_or(1000.0),
        interp: match doc.interpolation {
            Some(InterpKind::Nearest) => DelayInterp::Nearest,
            _ => DelayInterp::Sinc {
                taps: doc.sinc_taps.unwrap_or(DelayInterp::DEFAULT_SINC_TAPS as u32) as usize,
            },
        },
    };
    if params.block_len == 0 {
        r.diags.push(Diagnostic::error(
            DiagCode::BadValue,
            None,
            "blocksize must be positive".into(),
            "Use a positive blocksize",
        ));
    }

    // Duplicate names across all object kinds.
    let mut seen: std::collections::BTreeMap<String, Loc> = std::collections::BTreeMap::new();
    let all_names = doc
        .sources
        .iter()
        .map(|s| (s.name.clone(), s.loc))
        .chain(doc.diffuse.iter().map(|d| (d.name.clone(), d.loc)))
        .chain(doc.faces.iter().map(|f| (f.name.clone(), f.loc)))
        .chain(doc.obstacles.iter().map(|o| (o.name.clone(), o.loc)))
        .chain(doc.receivers.iter().map(|x| (x.name.clone(), x.loc)));
    for (name, loc) in all_names {
        if name.is_empty() {
            continue;
        }
        if let Some(first) = seen.get(&name) {
            r.error(
                DiagCode::DupName,
                loc,
                format!("duplicate object name '{name}' (first defined at {first})"),
                "Rename one of the objects",
            );
        } else {
            seen.insert(name, loc);
        }
    }

    let sources = doc
        .sources
        .iter()
        .map(|s| SourceDef {
            name: s.name.clone(),
            trajectory: trajectory_from(&s.positions, &s.orientations, s.interp, s.loc, "source", &mut r),
            gain: s.gain.unwrap_or(1.0),
            directivity_f6db: s.f6db,
            input: source_input_from(&s.input, base),
        })
        .collect();

    let diffuse = doc
        .diffuse
        .iter()
        .map(|d| {
            let bx = d.range_box.unwrap_or_else(|| {
                r.error(
                    DiagCode::MissingAttribute,
                    d.loc,
                    format!("diffuse source '{}' needs a <box dx dy dz> child", d.name),
                    "Add the range box",
                );
                BoxElem { dx: 1.0, dy: 1.0, dz: 1.0, ramp: 0.0 }
            });
            let input = match &d.input {
                None => DiffuseInput::Silence,
                Some(InputElem::Sound { file, looped, gain }) => DiffuseInput::File {
                    path: base.join(file),
                    looped: *looped,
                    gain: *gain,
                },
                Some(InputElem::Noise { seed, amplitude }) => DiffuseInput::Noise {
                    seed: *seed,
                    amplitude: *amplitude,
                },
                Some(other) => {
                    r.error(
                        DiagCode::BadValue,
                        d.loc,
                        format!("diffuse source '{}' cannot use input {:?}", d.name, other),
                        "Use a 4-channel sound file or noise",
                    );
                    DiffuseInput::Silence
                }
            };
            DiffuseDef {
                name: d.name.clone(),
                range: RangeBox {
                    trajectory: trajectory_from(&d.positions, &d.orientations, d.interp, d.loc, "diffuse", &mut r),
                    dimensions: Vec3::new(bx.dx, bx.dy, bx.dz),
                    ramp: bx.ramp,
                },
                gain: d.gain.unwrap_or(1.0),
                input,
            }
        })
        .collect();

    let reflectors = doc
        .faces
        .iter()
        .filter_map(|f| {
            let polygon = polygon_from(&f.vertices, f.loc, "face", &mut r)?;
            let (rho, delta) = match (f.reflectivity, f.damping, f.absorption.is_empty()) {
                (Some(rho), delta, true) => (rho, delta.unwrap_or(0.0)),
                (None, None, false) => {
                    match fit_reflection_coeffs(&f.absorption, doc.sample_rate.unwrap_or(44100.0)) {
                        Ok(fit) => (fit.reflectivity, fit.damping),
                        Err(e) => {
                            r.error(DiagCode::BadValue, f.loc, format!("face '{}': {e}", f.name), "Fix the absorption targets");
                            (1.0, 0.0)
                        }
                    }
                }
                (None, Some(delta), true) => (1.0, delta),
                (None, None, true) => (1.0, 0.0),
                _ => {
                    r.error(
                        DiagCode::BadValue,
                        f.loc,
                        format!("face '{}' mixes rho/delta attributes with absorption targets", f.name),
                        "Give either rho/delta or <absorption> children",
                    );
                    (f.reflectivity.unwrap_or(1.0), f.damping.unwrap_or(0.0))
                }
            };
            let mut reflector = Reflector::new(polygon, rho, delta);
            reflector.edge_exponent = f.kappa.unwrap_or(DEFAULT_EDGE_EXPONENT);
            Some(ReflectorDef { name: f.name.clone(), reflector })
        })
        .collect();

    let obstacles = doc
        .obstacles
        .iter()
        .filter_map(|o| {
            let polygon = polygon_from(&o.vertices, o.loc, "obstacle", &mut r)?;
            let attenuation = o.attenuation.unwrap_or(0.0);
            if !(0.0..=1.0).contains(&attenuation) {
                r.error(
                    DiagCode::BadValue,
                    o.loc,
                    format!("obstacle '{}' attenuation {attenuation} outside [0, 1]", o.name),
                    "Use a transmission weight between 0 and 1",
                );
            }
            Some(ObstacleDef {
                name: o.name.clone(),
                obstacle: Obstacle::new(polygon, attenuation.clamp(0.0, 1.0)),
            })
        })
        .collect();

    let receivers = doc
        .receivers
        .iter()
        .filter_map(|x| {
            let trajectory =
                trajectory_from(&x.positions, &x.orientations, x.interp, x.loc, "receiver", &mut r);
            let format = match x.format {
                FormatKind::Vmic => {
                    Some(ReceiverFormat::virtual_mic(x.directivity.unwrap_or(0.0)))
                }
                FormatKind::Nsp => speaker_layout_from(x, &mut r).map(ReceiverFormat::nsp),
                FormatKind::Vbap => speaker_layout_from(x, &mut r).and_then(|l| {
                    match ReceiverFormat::vbap2d(l) {
                        Ok(f) => Some(f),
                        Err(e) => {
                            r.error(
                                DiagCode::FormatMismatch,
                                x.loc,
                                format!("receiver '{}': {e}", x.name),
                                "Add more speakers",
                            );
                            None
                        }
                    }
                }),
                FormatKind::Hoa2d => speaker_layout_from(x, &mut r).and_then(|l| {
                    match ReceiverFormat::hoa2d(l, x.order.unwrap_or(1), x.decoder.unwrap_or_default())
                    {
                        Ok(f) => Some(f),
                        Err(e) => {
                            r.error(
                                DiagCode::FormatMismatch,
                                x.loc,
                                format!("receiver '{}': {e}", x.name),
                                "Add speakers or lower the order",
                            );
                            None
                        }
                    }
                }),
                FormatKind::Amb => {
                    match ReceiverFormat::ambi_fuma(x.order.unwrap_or(1), x.dims.unwrap_or(Dims::ThreeD)) {
                        Ok(f) => Some(f),
                        Err(e) => {
                            r.error(
                                DiagCode::FormatMismatch,
                                x.loc,
                                format!("receiver '{}': {e}", x.name),
                                "Use order 1..=3",
                            );
                            None
                        }
                    }
                }
                FormatKind::Binaural => {
                    let manifest = match &x.hrir_manifest {
                        Some(m) => m.clone(),
                        None => {
                            r.error(
                                DiagCode::MissingAttribute,
                                x.loc,
                                format!("binaural receiver '{}' needs an <hrir manifest> child", x.name),
                                "Point it at an hrir manifest file",
                            );
                            return None;
                        }
                    };
                    match HrirSet::load_manifest(&base.join(&manifest)) {
                        Ok(set) => speaker_layout_from(x, &mut r).and_then(|l| {
                            match ReceiverFormat::binaural(l, set) {
                                Ok(f) => Some(f),
                                Err(e) => {
                                    r.error(
                                        DiagCode::FormatMismatch,
                                        x.loc,
                                        format!("receiver '{}': {e}", x.name),
                                        "Add virtual speakers",
                                    );
                                    None
                                }
                            }
                        }),
                        Err(e) => {
                            r.error(
                                DiagCode::MissingFile,
                                x.loc,
                                format!("receiver '{}': {e}", x.name),
                                "Check the manifest path and wav files",
                            );
                            None
                        }
                    }
                }
            }?;
            Some(ReceiverDef { name: x.name.clone(), trajectory, format })
        })
        .collect();

    let scene = Scene { params, sources, diffuse, reflectors, obstacles, receivers };
    if r.diags.iter().any(|d| d.severity == Severity::Error) {
        Err(r.diags)
    } else {
        Ok(scene)
    }
}

/// Parse and resolve in one step, with file paths relative to `base`.
pub fn parse_scene_with_base(text: &str, base: &Path) -> Result<Scene, Vec<Diagnostic>> {
    let doc = parse_document(text)?;
    resolve(&doc, base)
}

/// Parse and resolve; file paths are relative to the working directory.
pub fn parse_scene(text: &str) -> Result<Scene, Vec<Diagnostic>> {
    parse_scene_with_base(text, Path::new("."))
}

/// Load, parse and resolve a scene file; audio paths resolve relative to
/// the scene file's directory.
pub fn load_scene_file(path: &Path) -> Result<Scene, Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![Diagnostic::error(
            DiagCode::MissingFile,
            None,
            format!("cannot read {}: {e}", path.display()),
            "Check the path",
        )]
    })?;
    let base = path.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    parse_scene_with_base(&text, &base)
}

// ---------------------------------------------------------------------
// Validation (errors plus advisory warnings)
// ---------------------------------------------------------------------

/// Validate a document: all parse/resolve errors plus warnings (empty
/// scene, irregular ring under HOA2D, oversized range-box ramps, and,
/// when a render duration is given, trajectories extending past it).
pub fn validate_document(doc: &SceneDocument, base: &Path, duration: Option<f64>) -> Vec<Diagnostic> {
    let mut diags = match resolve(doc, base) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    };

    if doc.sources.is_empty() && doc.diffuse.is_empty() {
        diags.push(Diagnostic::warning(
            DiagCode::NoSources,
            None,
            "scene has no sound sources".into(),
            "Add a <source> or <diffuse> element",
        ));
    }

    for x in &doc.receivers {
        if x.format == FormatKind::Hoa2d && x.speakers.len() >= 2 {
            let positions: Vec<Vec3> = x
                .speakers
                .iter()
                .map(|s| Vec3::from_spherical(s.r, s.az.to_radians(), s.el.to_radians()))
                .collect();
            if let Ok(layout) = SpeakerLayout::new(positions) {
                let deviation = layout.ring_irregularity();
                if deviation > 1e-6 {
                    diags.push(Diagnostic::warning(
                        DiagCode::IrregularRing,
                        Some(x.loc),
                        format!(
                            "receiver '{}' uses hoa2d on an irregular ring (max spacing deviation {:.2} deg)",
                            x.name,
                            deviation.to_degrees()
                        ),
                        "Distribute the speakers evenly for hoa2d",
                    ));
                }
            }
        }
    }

    for d in &doc.diffuse {
        if let Some(bx) = d.range_box {
            let half_min = 0.5 * bx.dx.min(bx.dy).min(bx.dz);
            if bx.ramp > half_min {
                diags.push(Diagnostic::warning(
                    DiagCode::RampTooLarge,
                    Some(d.loc),
                    format!(
                        "diffuse '{}' ramp {} m exceeds half of the smallest box dimension ({half_min} m)",
                        d.name, bx.ramp
                    ),
                    "Shorten the ramp or grow the box",
                ));
            }
        }
    }

    if let Some(duration) = duration {
        let objects = doc
            .sources
            .iter()
            .map(|s| (&s.name, s.loc, &s.positions))
            .chain(doc.diffuse.iter().map(|d| (&d.name, d.loc, &d.positions)))
            .chain(doc.receivers.iter().map(|x| (&x.name, x.loc, &x.positions)));
        for (name, loc, positions) in objects {
            if let Some(last) = positions.last() {
                if last.t > duration {
                    diags.push(Diagnostic::warning(
                        DiagCode::TrajectoryBeyond,
                        Some(loc),
                        format!(
                            "trajectory of '{name}' extends to {} s, past the {duration} s render",
                            last.t
                        ),
                        "Shorten the trajectory or extend the render",
                    ));
                }
            }
        }
    }

    diags
}

/// Parse and validate scene text in one step.
pub fn validate_scene(text: &str, base: &Path, duration: Option<f64>) -> Vec<Diagnostic> {
    match parse_document(text) {
        Ok(doc) => validate_document(&doc, base, duration),
        Err(diags) => diags,
    }
}

// ---------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------

fn esc(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

struct Xml {
    out: String,
    depth: usize,
}

impl Xml {
    fn open(&mut self, tag: &str, attrs: &[(&str, String)]) {
        self.line(tag, attrs, false);
        self.depth += 1;
    }

    fn close(&mut self, tag: &str) {
        self.depth -= 1;
        let _ = writeln!(self.out, "{}</{tag}>", "  ".repeat(self.depth));
    }

    fn leaf(&mut self, tag: &str, attrs: &[(&str, String)]) {
        self.line(tag, attrs, true);
    }

    fn line(&mut self, tag: &str, attrs: &[(&str, String)], leaf: bool) {
        let _ = write!(self.out, "{}<{tag}", "  ".repeat(self.depth));
        for (k, v) in attrs {
            let _ = write!(self.out, " {k}=\"{}\"", esc(v));
        }
        let _ = writeln!(self.out, "{}>", if leaf { "/" } else { "" });
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn push_opt(attrs: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<f64>) {
    if let Some(v) = v {
        attrs.push((key, num(*v)));
    }
}

fn trajectory_attrs(xml: &mut Xml, positions: &[PositionSample], orientations: &[OrientationSample]) {
    for s in positions {
        xml.leaf(
            "position",
            &[("t", num(s.t)), ("x", num(s.x)), ("y", num(s.y)), ("z", num(s.z))],
        );
    }
    for s in orientations {
        xml.leaf(
            "orientation",
            &[("t", num(s.t)), ("z", num(s.z)), ("y", num(s.y)), ("x", num(s.x))],
        );
    }
}

fn input_elem(xml: &mut Xml, input: &Option<InputElem>) {
    match input {
        None => {}
        Some(InputElem::Sound { file, looped, gain }) => xml.leaf(
            "sound",
            &[("file", file.clone()), ("loop", looped.to_string()), ("gain", num(*gain))],
        ),
        Some(InputElem::Sine { frequency, amplitude }) => {
            xml.leaf("sine", &[("f", num(*frequency)), ("a", num(*amplitude))])
        }
        Some(InputElem::Noise { seed, amplitude }) => {
            xml.leaf("noise", &[("seed", seed.to_string()), ("a", num(*amplitude))])
        }
        Some(InputElem::Impulse { at, amplitude }) => {
            xml.leaf("impulse", &[("at", at.to_string()), ("a", num(*amplitude))])
        }
    }
}

/// Serialize a document back to scene text. Parsing the result yields a
/// document equal to the input.
pub fn serialize(doc: &SceneDocument) -> String {
    let mut xml = Xml { out: String::new(), depth: 0 };
    let mut attrs: Vec<(&'static str, String)> = Vec::new();
    if let Some(name) = &doc.name {
        attrs.push(("name", name.clone()));
    }
    push_opt(&mut attrs, "fs", &doc.sample_rate);
    push_opt(&mut attrs, "c", &doc.speed_of_sound);
    if let Some(v) = doc.block_len {
        attrs.push(("blocksize", v.to_string()));
    }
    if let Some(v) = doc.image_order {
        attrs.push(("order", v.to_string()));
    }
    push_opt(&mut attrs, "alpha", &doc.air_constant);
    push_opt(&mut attrs, "rmin", &doc.r_min);
    push_opt(&mut attrs, "maxdist", &doc.max_distance);
    if let Some(v) = doc.interpolation {
        attrs.push((
            "interpolation",
            match v {
                InterpKind::Nearest => "nearest".to_string(),
                InterpKind::Sinc => "sinc".to_string(),
            },
        ));
    }
    if let Some(v) = doc.sinc_taps {
        attrs.push(("sinctaps", v.to_string()));
    }
    xml.open("scene", &attrs);

    for s in &doc.sources {
        let mut attrs = vec![("name", s.name.clone())];
        push_opt(&mut attrs, "gain", &s.gain);
        push_opt(&mut attrs, "f6db", &s.f6db);
        push_interp(&mut attrs, s.interp);
        xml.open("source", &attrs);
        trajectory_attrs(&mut xml, &s.positions, &s.orientations);
        input_elem(&mut xml, &s.input);
        xml.close("source");
    }

    for d in &doc.diffuse {
        let mut attrs = vec![("name", d.name.clone())];
        push_opt(&mut attrs, "gain", &d.gain);
        push_interp(&mut attrs, d.interp);
        xml.open("diffuse", &attrs);
        trajectory_attrs(&mut xml, &d.positions, &d.orientations);
        if let Some(b) = &d.range_box {
            xml.leaf(
                "box",
                &[("dx", num(b.dx)), ("dy", num(b.dy)), ("dz", num(b.dz)), ("ramp", num(b.ramp))],
            );
        }
        input_elem(&mut xml, &d.input);
        xml.close("diffuse");
    }

    for f in &doc.faces {
        let mut attrs = vec![("name", f.name.clone())];
        push_opt(&mut attrs, "rho", &f.reflectivity);
        push_opt(&mut attrs, "delta", &f.damping);
        push_opt(&mut attrs, "kappa", &f.kappa);
        xml.open("face", &attrs);
        for v in &f.vertices {
            xml.leaf("vertex", &[("x", num(v.x)), ("y", num(v.y)), ("z", num(v.z))]);
        }
        for (freq, alpha) in &f.absorption {
            xml.leaf("absorption", &[("f", num(*freq)), ("alpha", num(*alpha))]);
        }
        xml.close("face");
    }

    for o in &doc.obstacles {
        let mut attrs = vec![("name", o.name.clone())];
        push_opt(&mut attrs, "attenuation", &o.attenuation);
        xml.open("obstacle", &attrs);
        for v in &o.vertices {
            xml.leaf("vertex", &[("x", num(v.x)), ("y", num(v.y)), ("z", num(v.z))]);
        }
        xml.close("obstacle");
    }

    for x in &doc.receivers {
        let mut attrs = vec![("name", x.name.clone()), ("format", x.format.as_str().to_string())];
        push_opt(&mut attrs, "a", &x.directivity);
        if let Some(v) = x.order {
            attrs.push(("order", v.to_string()));
        }
        if let Some(v) = x.decoder {
            attrs.push((
                "decoder",
                match v {
                    HoaDecoder::Basic => "basic".to_string(),
                    HoaDecoder::MaxRe => "maxre".to_string(),
                },
            ));
        }
        if let Some(v) = x.dims {
            attrs.push(("dims", match v {
                Dims::TwoD => "2d".to_string(),
                Dims::ThreeD => "3d".to_string(),
            }));
        }
        push_interp(&mut attrs, x.interp);
        xml.open("receiver", &attrs);
        trajectory_attrs(&mut xml, &x.positions, &x.orientations);
        for s in &x.speakers {
            xml.leaf("speaker", &[("az", num(s.az)), ("el", num(s.el)), ("r", num(s.r))]);
        }
        if let Some(m) = &x.hrir_manifest {
            xml.leaf("hrir", &[("manifest", m.clone())]);
        }
        xml.close("receiver");
    }

    xml.close("scene");
    xml.out
}

fn push_interp(attrs: &mut Vec<(&'static str, String)>, interp: Option<TrajInterp>) {
    if let Some(v) = interp {
        attrs.push((
            "interp",
            match v {
                TrajInterp::Cartesian => "cartesian".to_string(),
                TrajInterp::Spherical => "spherical".to_string(),
            },
        ));
    }
}

/// Convenience: info summary of a parsed scene for the CLI.
pub fn scene_summary(scene: &Scene) -> engine::SceneInfo {
    engine::scene_info(scene)
}
