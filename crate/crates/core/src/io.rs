//! JSON/text file helpers shared by the loaders and emitters.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

/// Deserializes JSON, reporting failures with the dotted path of the
/// offending field.
pub fn parse_json<D: DeserializeOwned>(text: &str) -> Result<D> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let mut path = err.path().to_string();
        let message = err.inner().to_string();
        // serde reports a missing field against its parent; point at the field
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            path = if path == "." { field.to_string() } else { format!("{path}.{field}") };
        }
        Error::Parse { path, message }
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn to_json_pretty<S: serde::Serialize>(value: &S) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("in-memory JSON serialization");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use serde::Deserialize;

    use super::*;

    #[derive(Debug, Deserialize)]
    struct Inner {
        #[allow(dead_code)]
        pos_m: [f64; 3],
    }

    #[derive(Debug, Deserialize)]
    struct Outer {
        #[allow(dead_code)]
        tx: Inner,
    }

    #[test]
    fn missing_field_path_names_the_field() {
        let err = parse_json::<Outer>(r#"{"tx": {}}"#).unwrap_err();
        match err {
            Error::Parse { path, .. } => assert_eq!(path, "tx.pos_m"),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_json::<Outer>(r#"{}"#).unwrap_err();
        assert!(err.to_string().contains("`tx`"));
    }

    #[test]
    fn type_error_path() {
        let err = parse_json::<Outer>(r#"{"tx": {"pos_m": [1, 2, "x"]}}"#).unwrap_err();
        assert!(err.to_string().contains("tx.pos_m[2]"), "{err}");
    }
}
