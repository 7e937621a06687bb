//! Data directories: `schema.txt` plus one headerless `<Relation>.csv` per
//! relation.

use std::fs;
use std::path::Path;

use delta_repair::model::{AttrType, Database, DatabaseBuilder, RelationSchema, Schema, Value};

use crate::CliError;

pub const SCHEMA_FILE: &str = "schema.txt";

/// Parses lines like `Author(aid:int, name:text)`. Blank lines and `#`
/// comments are skipped.
pub fn parse_schema(text: &str) -> Result<Schema, CliError> {
    let mut relations = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| CliError::Parse(format!("{SCHEMA_FILE}:{}: {msg}", i + 1));
        let (name, rest) = line
            .split_once('(')
            .ok_or_else(|| err("expected `Relation(attr:type, ...)`"))?;
        let body = rest
            .trim_end()
            .strip_suffix(')')
            .ok_or_else(|| err("missing closing parenthesis"))?;
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(err("invalid relation name"));
        }
        let mut attrs = Vec::new();
        for part in body.split(',') {
            let (attr, kind) = part
                .split_once(':')
                .ok_or_else(|| err(&format!("attribute `{}` has no type", part.trim())))?;
            let kind = match kind.trim() {
                "int" => AttrType::Int,
                "text" => AttrType::Text,
                other => return Err(err(&format!("unknown type `{other}` (expected int or text)"))),
            };
            attrs.push((attr.trim().to_string(), kind));
        }
        relations.push(RelationSchema::new(name, attrs));
    }
    Schema::new(relations).map_err(|e| CliError::Parse(format!("{SCHEMA_FILE}: {e}")))
}

pub fn render_schema(schema: &Schema) -> String {
    let mut out = String::new();
    for (_, rel) in schema.relations() {
        let attrs: Vec<String> = rel.attributes.iter().map(|(a, t)| format!("{a}:{t}")).collect();
        out.push_str(&format!("{}({})\n", rel.name, attrs.join(", ")));
    }
    out
}

/// Loads a data directory. A relation without a CSV file is empty.
pub fn load_dir(dir: &Path) -> Result<Database, CliError> {
    let schema_path = dir.join(SCHEMA_FILE);
    let schema = parse_schema(&fs::read_to_string(&schema_path).map_err(|e| CliError::io(&schema_path, e))?)?;
    let mut builder = DatabaseBuilder::new(schema.clone());
    for (_, rel) in schema.relations() {
        let path = dir.join(format!("{}.csv", rel.name));
        if !path.exists() {
            continue;
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(&path)
            .map_err(|e| CliError::csv(&path, e))?;
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::csv(&path, e))?;
            let at = || format!("{}:{}", path.display(), row + 1);
            if record.len() != rel.arity() {
                return Err(CliError::Parse(format!(
                    "{}: expected {} fields, found {}",
                    at(),
                    rel.arity(),
                    record.len()
                )));
            }
            let mut values = Vec::with_capacity(record.len());
            for (field, (attr, kind)) in record.iter().zip(&rel.attributes) {
                values.push(match kind {
                    AttrType::Int => Value::Int(
                        field
                            .trim()
                            .parse()
                            .map_err(|_| CliError::Parse(format!("{}: `{field}` is not an integer ({attr})", at())))?,
                    ),
                    AttrType::Text => Value::text(field),
                });
            }
            builder
                .insert(&rel.name, values)
                .map_err(|e| CliError::Parse(format!("{}: {e}", at())))?;
        }
    }
    Ok(builder.build())
}

/// Writes the live tuples of `db` as a data directory, in load order.
pub fn write_dir(db: &Database, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let schema_path = dir.join(SCHEMA_FILE);
    fs::write(&schema_path, render_schema(db.schema())).map_err(|e| CliError::io(&schema_path, e))?;
    for (rel_id, rel) in db.schema().relations() {
        let path = dir.join(format!("{}.csv", rel.name));
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&path)
            .map_err(|e| CliError::csv(&path, e))?;
        for tuple in db.base(rel_id) {
            let fields: Vec<String> = tuple
                .values
                .iter()
                .map(|v| match v {
                    Value::Int(i) => i.to_string(),
                    Value::Text(s) => s.to_string(),
                })
                .collect();
            writer.write_record(&fields).map_err(|e| CliError::csv(&path, e))?;
        }
        writer.flush().map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_round_trip() {
        let text = "# academic\nAuthor(aid:int, name:text)\n\nWrites(aid:int, pid:int)\n";
        let schema = parse_schema(text).unwrap();
        assert_eq!(schema.len(), 2);
        assert_eq!(
            render_schema(&schema),
            "Author(aid:int, name:text)\nWrites(aid:int, pid:int)\n"
        );
    }

    #[test]
    fn schema_errors_name_the_line() {
        let err = parse_schema("A(x:int)\nB(y:float)\n").unwrap_err().to_string();
        assert!(err.contains("schema.txt:2"), "{err}");
        assert!(parse_schema("A(x)\n").is_err());
        assert!(parse_schema("A(x:int\n").is_err());
        assert!(parse_schema("A(x:int)\nA(y:int)\n").is_err());
    }
}
