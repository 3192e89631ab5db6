//! Validation against the bundled report schema.
//!
//! Only the XML Schema constructs the bundled schema uses are understood:
//! a global root element, named complex types with a `sequence` of local
//! elements, attribute declarations, `simpleContent` extensions and named
//! simple types restricted by enumeration, pattern or minimum length.
//! Anything else in a schema is rejected when it is loaded.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use roxmltree::{Document, Node};

use super::ReportError;

pub const REPORT_SCHEMA: &str = include_str!("../../assets/schema/verification-report.v1.xsd");

const XS: &str = "http://www.w3.org/2001/XMLSchema";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Builtin {
    String,
    AnyUri,
    Date,
    Time,
    DateTime,
    Boolean,
    NonNegativeInteger,
    PositiveInteger,
}

#[derive(Debug, Clone)]
enum TypeRef {
    Builtin(Builtin),
    Named(String),
}

#[derive(Debug)]
struct SimpleType {
    base: TypeRef,
    enumeration: Vec<String>,
    patterns: Vec<Regex>,
    min_length: Option<usize>,
}

#[derive(Debug)]
struct Particle {
    name: String,
    ty: TypeRef,
    min: usize,
    max: Option<usize>,
}

#[derive(Debug)]
enum Content {
    Empty,
    Sequence(Vec<Particle>),
    Simple(TypeRef),
}

#[derive(Debug)]
struct AttributeDecl {
    name: String,
    ty: TypeRef,
    required: bool,
}

#[derive(Debug)]
struct ComplexType {
    content: Content,
    attributes: Vec<AttributeDecl>,
}

#[derive(Debug)]
pub struct Schema {
    namespace: Option<String>,
    root_name: String,
    root_type: TypeRef,
    complex: HashMap<String, ComplexType>,
    simple: HashMap<String, SimpleType>,
}

fn unsupported(node: Node<'_, '_>) -> String {
    format!("unsupported schema construct <{}>", node.tag_name().name())
}

fn xs_children<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children()
        .filter(|n| n.is_element())
        .filter(|n| n.tag_name().name() != "annotation")
}

fn type_ref(node: Node<'_, '_>, attr: &str) -> Result<TypeRef, String> {
    let raw = node.attribute(attr).ok_or_else(|| format!("<{}> without {attr}", node.tag_name().name()))?;
    let (prefix, local) = raw.split_once(':').unwrap_or(("", raw));
    let ns = node.lookup_namespace_uri(if prefix.is_empty() { None } else { Some(prefix) });
    if ns == Some(XS) {
        let b = match local {
            "string" => Builtin::String,
            "anyURI" => Builtin::AnyUri,
            "date" => Builtin::Date,
            "time" => Builtin::Time,
            "dateTime" => Builtin::DateTime,
            "boolean" => Builtin::Boolean,
            "nonNegativeInteger" => Builtin::NonNegativeInteger,
            "positiveInteger" => Builtin::PositiveInteger,
            other => return Err(format!("unsupported built-in type xs:{other}")),
        };
        Ok(TypeRef::Builtin(b))
    } else {
        Ok(TypeRef::Named(local.to_string()))
    }
}

fn occurs(node: Node<'_, '_>, attr: &str, default: usize) -> Result<Option<usize>, String> {
    match node.attribute(attr) {
        None => Ok(Some(default)),
        Some("unbounded") => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| format!("bad {attr}={v}")),
    }
}

fn attribute_decl(node: Node<'_, '_>) -> Result<AttributeDecl, String> {
    Ok(AttributeDecl {
        name: node.attribute("name").ok_or("attribute without name")?.to_string(),
        ty: type_ref(node, "type")?,
        required: node.attribute("use") == Some("required"),
    })
}

fn complex_type(node: Node<'_, '_>) -> Result<ComplexType, String> {
    let mut content = Content::Empty;
    let mut attributes = Vec::new();
    for c in xs_children(node) {
        match c.tag_name().name() {
            "sequence" => {
                let mut particles = Vec::new();
                for e in xs_children(c) {
                    if e.tag_name().name() != "element" {
                        return Err(unsupported(e));
                    }
                    particles.push(Particle {
                        name: e.attribute("name").ok_or("element without name")?.to_string(),
                        ty: type_ref(e, "type")?,
                        min: occurs(e, "minOccurs", 1)?.unwrap_or(0),
                        max: occurs(e, "maxOccurs", 1)?,
                    });
                }
                content = Content::Sequence(particles);
            }
            "simpleContent" => {
                let ext = xs_children(c).next().filter(|e| e.tag_name().name() == "extension").ok_or_else(|| unsupported(c))?;
                content = Content::Simple(type_ref(ext, "base")?);
                for a in xs_children(ext) {
                    if a.tag_name().name() != "attribute" {
                        return Err(unsupported(a));
                    }
                    attributes.push(attribute_decl(a)?);
                }
            }
            "attribute" => attributes.push(attribute_decl(c)?),
            _ => return Err(unsupported(c)),
        }
    }
    Ok(ComplexType { content, attributes })
}

fn simple_type(node: Node<'_, '_>) -> Result<SimpleType, String> {
    let r = xs_children(node).next().filter(|e| e.tag_name().name() == "restriction").ok_or_else(|| unsupported(node))?;
    let mut st = SimpleType { base: type_ref(r, "base")?, enumeration: Vec::new(), patterns: Vec::new(), min_length: None };
    for facet in xs_children(r) {
        let value = facet.attribute("value").ok_or("facet without value")?;
        match facet.tag_name().name() {
            "enumeration" => st.enumeration.push(value.to_string()),
            "pattern" => st.patterns.push(Regex::new(&format!("^(?:{value})$")).map_err(|e| e.to_string())?),
            "minLength" => st.min_length = Some(value.parse().map_err(|_| format!("bad minLength {value}"))?),
            _ => return Err(unsupported(facet)),
        }
    }
    Ok(st)
}

impl Schema {
    pub fn parse(xsd: &str) -> Result<Self, ReportError> {
        Self::parse_inner(xsd).map_err(ReportError::Schema)
    }

    fn parse_inner(xsd: &str) -> Result<Self, String> {
        let doc = Document::parse(xsd).map_err(|e| e.to_string())?;
        let root = doc.root_element();
        if root.tag_name().namespace() != Some(XS) || root.tag_name().name() != "schema" {
            return Err("not an XML schema".into());
        }
        if root.attribute("targetNamespace").is_some() && root.attribute("elementFormDefault") != Some("qualified") {
            return Err("only qualified local elements are supported".into());
        }
        let mut root_decl = None;
        let mut complex = HashMap::new();
        let mut simple = HashMap::new();
        for node in xs_children(root) {
            let name = node.attribute("name").map(str::to_string);
            match (node.tag_name().name(), name) {
                ("element", Some(name)) if root_decl.is_none() => root_decl = Some((name, type_ref(node, "type")?)),
                ("complexType", Some(name)) => {
                    complex.insert(name, complex_type(node)?);
                }
                ("simpleType", Some(name)) => {
                    simple.insert(name, simple_type(node)?);
                }
                _ => return Err(unsupported(node)),
            }
        }
        let (root_name, root_type) = root_decl.ok_or("schema declares no root element")?;
        Ok(Self { namespace: root.attribute("targetNamespace").map(str::to_string), root_name, root_type, complex, simple })
    }

    pub fn validate(&self, xml: &str) -> Result<(), ReportError> {
        let doc = Document::parse(xml).map_err(|e| ReportError::SchemaViolation(vec![format!("not well-formed: {e}")]))?;
        let mut errors = Vec::new();
        let root = doc.root_element();
        if root.tag_name().name() != self.root_name {
            errors.push(format!("root element is <{}>, expected <{}>", root.tag_name().name(), self.root_name));
        } else {
            self.check_element(root, &self.root_type, &format!("/{}", self.root_name), &mut errors);
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ReportError::SchemaViolation(errors))
        }
    }

    fn check_element(&self, node: Node<'_, '_>, ty: &TypeRef, path: &str, errors: &mut Vec<String>) {
        if node.tag_name().namespace() != self.namespace.as_deref() {
            errors.push(format!("{path}: element in namespace {:?}", node.tag_name().namespace()));
        }
        let text: String = node.children().filter(|n| n.is_text()).filter_map(|n| n.text()).collect();
        let children: Vec<Node<'_, '_>> = node.children().filter(Node::is_element).collect();
        let complex = match ty {
            TypeRef::Named(name) => self.complex.get(name),
            TypeRef::Builtin(_) => None,
        };
        let Some(complex) = complex else {
            for a in node.attributes() {
                errors.push(format!("{path}: unexpected attribute {}", a.name()));
            }
            if !children.is_empty() {
                errors.push(format!("{path}: simple element has child elements"));
            }
            if let Err(e) = self.check_value(ty, &text) {
                errors.push(format!("{path}: {e}"));
            }
            return;
        };
        for decl in &complex.attributes {
            match node.attribute(decl.name.as_str()) {
                Some(v) => {
                    if let Err(e) = self.check_value(&decl.ty, v) {
                        errors.push(format!("{path}/@{}: {e}", decl.name));
                    }
                }
                None if decl.required => errors.push(format!("{path}: missing attribute {}", decl.name)),
                None => {}
            }
        }
        for a in node.attributes() {
            if a.namespace().is_none() && !complex.attributes.iter().any(|d| d.name == a.name()) {
                errors.push(format!("{path}: unexpected attribute {}", a.name()));
            }
        }
        match &complex.content {
            Content::Empty | Content::Sequence(_) if !text.trim().is_empty() => {
                errors.push(format!("{path}: unexpected text content"));
            }
            _ => {}
        }
        match &complex.content {
            Content::Empty => {
                if !children.is_empty() {
                    errors.push(format!("{path}: element must be empty"));
                }
            }
            Content::Simple(base) => {
                if !children.is_empty() {
                    errors.push(format!("{path}: simple content has child elements"));
                }
                if let Err(e) = self.check_value(base, &text) {
                    errors.push(format!("{path}: {e}"));
                }
            }
            Content::Sequence(particles) => {
                let mut i = 0;
                for p in particles {
                    let mut n = 0;
                    while i < children.len() && children[i].tag_name().name() == p.name && p.max.is_none_or(|m| n < m) {
                        let child_path = format!("{path}/{}[{}]", p.name, n + 1);
                        self.check_element(children[i], &p.ty, &child_path, errors);
                        i += 1;
                        n += 1;
                    }
                    if n < p.min {
                        errors.push(format!("{path}: expected <{}> at least {} time(s), found {n}", p.name, p.min));
                    }
                }
                for extra in &children[i..] {
                    errors.push(format!("{path}: unexpected element <{}>", extra.tag_name().name()));
                }
            }
        }
    }

    fn check_value(&self, ty: &TypeRef, value: &str) -> Result<(), String> {
        match ty {
            TypeRef::Builtin(b) => check_builtin(*b, value),
            TypeRef::Named(name) => {
                let st = self.simple.get(name).ok_or_else(|| format!("unknown simple type {name}"))?;
                self.check_value(&st.base, value)?;
                if !st.enumeration.is_empty() && !st.enumeration.iter().any(|e| e == value) {
                    return Err(format!("{value:?} is not one of {:?}", st.enumeration));
                }
                if let Some(pattern) = st.patterns.iter().find(|p| !p.is_match(value)) {
                    return Err(format!("{value:?} does not match {}", pattern.as_str()));
                }
                if st.min_length.is_some_and(|m| value.chars().count() < m) {
                    return Err(format!("{value:?} is too short"));
                }
                Ok(())
            }
        }
    }
}

fn check_builtin(b: Builtin, raw: &str) -> Result<(), String> {
    // whitespace is collapsed for every built-in type but string
    let v = raw.trim();
    let ok = match b {
        Builtin::String => true,
        Builtin::AnyUri => !v.is_empty() && !v.contains(char::is_whitespace),
        Builtin::Date => chrono::NaiveDate::parse_from_str(v, "%Y-%m-%d").is_ok(),
        Builtin::Time => chrono::NaiveTime::parse_from_str(v, "%H:%M:%S%.f").is_ok(),
        Builtin::DateTime => {
            chrono::DateTime::parse_from_rfc3339(v).is_ok() || chrono::NaiveDateTime::parse_from_str(v, "%Y-%m-%dT%H:%M:%S%.f").is_ok()
        }
        Builtin::Boolean => matches!(v, "true" | "false" | "1" | "0"),
        Builtin::NonNegativeInteger => !v.is_empty() && v.trim_start_matches('+').chars().all(|c| c.is_ascii_digit()),
        Builtin::PositiveInteger => {
            let digits = v.trim_start_matches('+');
            !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) && digits.chars().any(|c| c != '0')
        }
    };
    if ok {
        Ok(())
    } else {
        Err(format!("{raw:?} is not a valid {b:?}"))
    }
}

static BUNDLED: LazyLock<Schema> = LazyLock::new(|| Schema::parse(REPORT_SCHEMA).expect("bundled schema is supported"));

pub fn bundled_schema() -> &'static Schema {
    &BUNDLED
}

pub fn validate_report(xml: &str) -> Result<(), ReportError> {
    bundled_schema().validate(xml)
}
