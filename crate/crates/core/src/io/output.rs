use serde::{Deserialize, Serialize};

use super::simplified::SimplifiedAnalysis;
use super::{SchemaError, Section};

pub const ANALYSIS_MARKER: &str = "***Analysis***";
pub const ANALYSIS_RESULT_MARKER: &str = "***Corresponding analysis result***";
pub const FIXED_SCRIPT_MARKER: &str = "***Fixed Script***";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkersFound {
    /// The first-section marker that matched.
    pub analysis: String,
    pub fixed_script: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOutput {
    pub analysis: SimplifiedAnalysis,
    pub fixed_script: String,
    pub markers_found: MarkersFound,
}

fn find_analysis_marker(text: &str) -> Option<(usize, &'static str)> {
    [ANALYSIS_MARKER, ANALYSIS_RESULT_MARKER]
        .into_iter()
        .filter_map(|m| text.find(m).map(|i| (i, m)))
        .min_by_key(|(i, _)| *i)
}

/// Removes a surrounding markdown code fence, if any.
pub fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(body) = t.strip_prefix("```").and_then(|r| r.strip_suffix("```")) else {
        return text;
    };
    // The first line holds the info string (`json`, `powershell`, ...).
    match body.split_once('\n') {
        Some((_, code)) => code,
        None => body.trim(),
    }
}

/// Drops the line break after a section marker and one optional blank line.
fn section_body(text: &str) -> &str {
    let mut t = text.trim_start_matches([' ', '\t']);
    for _ in 0..2 {
        if let Some(r) = t.strip_prefix("\r\n").or_else(|| t.strip_prefix('\n')) {
            t = r;
        }
    }
    t
}

/// Parses a two-section model response and validates its analysis.
pub fn parse_model_output(text: &str) -> Result<ModelOutput, SchemaError> {
    let (a_pos, a_marker) =
        find_analysis_marker(text).ok_or(SchemaError::MissingSection(Section::Analysis))?;
    let json_start = a_pos + a_marker.len();
    if !text[json_start..].contains(FIXED_SCRIPT_MARKER) {
        return Err(SchemaError::MissingSection(Section::FixedScript));
    }

    let mut body = text[json_start..].trim_start();
    let fenced = body.starts_with("```");
    if fenced {
        body = body
            .split_once('\n')
            .map_or("", |(_, rest)| rest)
            .trim_start();
    }
    // `body` is a subslice of `text`.
    let offset = body.as_ptr() as usize - text.as_ptr() as usize;
    if !body.starts_with('{') {
        return Err(SchemaError::InvalidJson {
            position: offset,
            message: "expected a JSON object after the analysis marker".into(),
        });
    }
    let mut stream = serde_json::Deserializer::from_str(body).into_iter::<serde_json::Value>();
    let value = match stream.next() {
        Some(Ok(v)) => v,
        Some(Err(e)) => {
            return Err(SchemaError::InvalidJson {
                position: offset + byte_offset(body, e.line(), e.column()),
                message: e.to_string(),
            })
        }
        None => unreachable!("body starts with '{{'"),
    };
    let consumed = stream.byte_offset();
    let rest = &body[consumed..];
    let f_rel = rest
        .find(FIXED_SCRIPT_MARKER)
        .ok_or(SchemaError::MissingSection(Section::FixedScript))?;
    let mut between = rest[..f_rel].trim();
    if fenced {
        between = between.strip_prefix("```").unwrap_or(between).trim();
    }
    if !between.is_empty() {
        return Err(SchemaError::TrailingText {
            position: offset + consumed,
        });
    }
    let analysis: SimplifiedAnalysis =
        serde_json::from_value(value).map_err(|e| SchemaError::InvalidField(e.to_string()))?;
    analysis.validate()?;

    let fixed = section_body(&rest[f_rel + FIXED_SCRIPT_MARKER.len()..]);
    Ok(ModelOutput {
        analysis,
        fixed_script: strip_fences(fixed).to_owned(),
        markers_found: MarkersFound {
            analysis: a_marker.to_owned(),
            fixed_script: true,
        },
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Renders the canonical two-section layout.
pub fn render_model_output(analysis: &SimplifiedAnalysis, fixed_script: &str) -> String {
    format!(
        "{ANALYSIS_RESULT_MARKER}\n\n{}\n\n{FIXED_SCRIPT_MARKER}\n\n{fixed_script}",
        analysis.to_json()
    )
}
