use std::fmt;
use std::sync::OnceLock;

use jsonschema::Validator;
use serde_json::Value;

const SCHEMA: &str = include_str!("../../schemas/evidence_bundle.schema.json");

/// The report schema as shipped.
pub fn schema_text() -> &'static str {
    SCHEMA
}

fn validator() -> &'static Validator {
    static V: OnceLock<Validator> = OnceLock::new();
    V.get_or_init(|| {
        let schema: Value = serde_json::from_str(SCHEMA).expect("schema is valid JSON");
        jsonschema::validator_for(&schema).expect("schema compiles")
    })
}

/// Schema errors, one line per failing location.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaViolation(pub Vec<String>);

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("; "))
    }
}

impl std::error::Error for SchemaViolation {}

pub fn validate(report: &Value) -> Result<(), SchemaViolation> {
    let errors: Vec<String> =
        validator().iter_errors(report).map(|e| format!("{}: {}", e.instance_path(), e)).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(SchemaViolation(errors))
    }
}
