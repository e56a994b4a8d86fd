//! Textual meta paths.
//!
//! ```text
//! path     := TYPE step+
//! step     := "-[" RELNAME "]->" TYPE
//! TYPE     := "E" | "P" | "C" | "N"
//! ```
//!
//! Whitespace between tokens is ignored. In a meta-paths file each
//! non-blank line holds one path and `#` starts a comment line.

use crate::hin::{ObjectTypeId, Schema};

use super::{MetaPath, MetaPathError};

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn expect(&mut self, token: &str) -> Result<(), MetaPathError> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn error(&self, message: String) -> MetaPathError {
        MetaPathError::Syntax {
            position: self.pos,
            message,
        }
    }

    fn object_type(&mut self, schema: &Schema) -> Result<ObjectTypeId, MetaPathError> {
        self.skip_ws();
        let c = self
            .text[self.pos..]
            .chars()
            .next()
            .ok_or_else(|| self.error("expected an object type".into()))?;
        if !c.is_ascii_uppercase() {
            return Err(self.error(format!("expected an object type, found `{c}`")));
        }
        self.pos += 1;
        schema
            .object_type_by_code(c)
            .ok_or_else(|| MetaPathError::UnknownType(c.to_string()))
    }

    fn identifier(&mut self) -> Result<&'a str, MetaPathError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return Err(self.error("expected a relation name".into()));
        }
        self.pos += len;
        Ok(&rest[..len])
    }
}

pub fn parse_metapath(text: &str, schema: &Schema) -> Result<MetaPath, MetaPathError> {
    let mut cur = Cursor { text, pos: 0 };
    if cur.at_end() {
        return Err(cur.error("empty meta path".into()));
    }
    let mut types = vec![cur.object_type(schema)?];
    let mut names = Vec::new();
    loop {
        if cur.at_end() {
            break;
        }
        cur.expect("-[")?;
        names.push(cur.identifier()?);
        cur.expect("]->")?;
        types.push(cur.object_type(schema)?);
    }
    if names.is_empty() {
        return Err(cur.error("expected at least one `-[relation]->` step".into()));
    }

    let mut relations = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if schema.relations_named(name).next().is_none() {
            return Err(MetaPathError::UnknownRelation((*name).to_string()));
        }
        let r = schema
            .relation_id(name, types[i], types[i + 1])
            .ok_or(MetaPathError::IncompatibleEndpoint { index: i + 1 })?;
        relations.push(r);
    }
    Ok(MetaPath { types, relations })
}

pub fn format_metapath(mp: &MetaPath, schema: &Schema) -> String {
    let mut out = String::new();
    out.push(schema.object(mp.types[0]).code);
    for (r, t) in mp.relations.iter().zip(&mp.types[1..]) {
        out.push_str("-[");
        out.push_str(&schema.relation(*r).name);
        out.push_str("]->");
        out.push(schema.object(*t).code);
    }
    out
}

/// Parses a meta-paths file, reporting the 1-based line of any error.
pub fn parse_metapaths_file(text: &str, schema: &Schema) -> Result<Vec<MetaPath>, MetaPathError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(parse_metapath(trimmed, schema).map_err(|e| MetaPathError::InFile {
            line: i + 1,
            source: Box::new(e),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::default_sme_schema;

    #[test]
    fn parses_parent_report_path() {
        let s = default_sme_schema();
        let mp = parse_metapath("E-[parent]->E-[report]->N", &s).unwrap();
        let names: Vec<_> = mp.relations().iter().map(|&r| s.relation(r).name.as_str()).collect();
        assert_eq!(names, ["parent", "report"]);
        let codes: Vec<_> = mp.types().iter().map(|&t| s.object(t).code).collect();
        assert_eq!(codes, ['E', 'E', 'N']);
    }

    #[test]
    fn whitespace_between_tokens_is_ignored() {
        let s = default_sme_schema();
        let a = parse_metapath("E -[ control ]-> P -[shareholder]-> E", &s).unwrap();
        let b = parse_metapath("E-[control]->P-[shareholder]->E", &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parent_cannot_reach_a_person() {
        let s = default_sme_schema();
        assert_eq!(
            parse_metapath("E-[parent]->P", &s),
            Err(MetaPathError::IncompatibleEndpoint { index: 1 })
        );
        assert_eq!(
            parse_metapath("E-[parent]->E-[produce]->P", &s),
            Err(MetaPathError::IncompatibleEndpoint { index: 2 })
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let s = default_sme_schema();
        assert!(matches!(parse_metapath("", &s), Err(MetaPathError::Syntax { .. })));
        assert!(matches!(parse_metapath("E", &s), Err(MetaPathError::Syntax { .. })));
        assert!(matches!(
            parse_metapath("E-[parent]>E", &s),
            Err(MetaPathError::Syntax { position: 9, .. })
        ));
        assert!(matches!(parse_metapath("E-[]->E", &s), Err(MetaPathError::Syntax { .. })));
        assert!(matches!(parse_metapath("e-[parent]->E", &s), Err(MetaPathError::Syntax { .. })));
    }

    #[test]
    fn unknown_names() {
        let s = default_sme_schema();
        assert_eq!(parse_metapath("X-[parent]->E", &s), Err(MetaPathError::UnknownType("X".into())));
        assert_eq!(
            parse_metapath("E-[owns]->E", &s),
            Err(MetaPathError::UnknownRelation("owns".into()))
        );
    }

    #[test]
    fn file_skips_comments_and_reports_lines() {
        let s = default_sme_schema();
        let paths = parse_metapaths_file("# header\nE-[parent]->E\n\n  # x\nE-[report]->N\n", &s).unwrap();
        assert_eq!(paths.len(), 2);
        let err = parse_metapaths_file("E-[parent]->E\nE-[parent]->P\n", &s).unwrap_err();
        assert!(matches!(err, MetaPathError::InFile { line: 2, .. }));
    }
}
