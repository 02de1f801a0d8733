//! Embedded system presets.

use serde::{Deserialize, Serialize};

use crate::config::SystemParameters;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetDocument {
    pub schema_version: u32,
    pub name: String,
    pub description: String,
    pub parameters: SystemParameters,
}

const SOURCES: [(&str, &str); 2] = [
    ("strong", include_str!("../presets/strong.json")),
    ("weak", include_str!("../presets/weak.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

/// Raw JSON text of a preset.
pub fn source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn lookup(name: &str) -> Option<PresetDocument> {
    // The embedded documents are covered by tests, so a parse failure here
    // would be a build defect rather than a user error.
    source(name).map(|s| serde_json::from_str(s).expect("embedded preset is valid"))
}
