use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::adapters::InputRecord;
use crate::error::{Error, Result};

const PAYLOAD_COLUMNS: [&str; 2] = ["payload", "text"];

/// Reads the evaluation documents: `input_id`, `payload` (or `text`), an
/// optional `group`, and any further columns as numeric criteria.
pub fn load_dataset(path: &Path) -> Result<Vec<InputRecord>> {
    let ing = |e: &dyn std::fmt::Display| Error::Ingestion(format!("{}: {e}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| ing(&e))?;
    let headers = rdr.headers().map_err(|e| ing(&e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("input_id").ok_or_else(|| ing(&"missing `input_id` column"))?;
    let payload_col = PAYLOAD_COLUMNS
        .iter()
        .find_map(|c| col(c))
        .ok_or_else(|| ing(&"missing `payload` column"))?;
    let group_col = col("group");
    let criteria: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != id_col && *i != payload_col && Some(*i) != group_col)
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ing(&e))?;
        let id = rec.get(id_col).unwrap_or_default();
        if id.is_empty() {
            return Err(ing(&format!("row {} has an empty input_id", row + 2)));
        }
        if !seen.insert(id.to_string()) {
            return Err(ing(&format!("duplicate input_id `{id}`")));
        }
        let payload = rec.get(payload_col).unwrap_or_default();
        if payload.is_empty() {
            return Err(ing(&format!("`{id}` has an empty payload")));
        }
        let mut r = InputRecord::new(id, payload);
        r.group = group_col.and_then(|c| rec.get(c)).filter(|g| !g.is_empty()).map(String::from);
        let mut crit = BTreeMap::new();
        for (c, name) in &criteria {
            if let Some(cell) = rec.get(*c).filter(|s| !s.is_empty()) {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| ing(&format!("criterion `{name}` of `{id}` is not a number: `{cell}`")))?;
                crit.insert(name.clone(), v);
            }
        }
        r.criteria = crit;
        out.push(r);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no documents", path.display())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_groups_and_criteria() {
        let f = write("input_id,payload,group,length\nd1,\"Hello there. Bye.\",north,2\nd2,Other text,,\n");
        let d = load_dataset(f.path()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].group.as_deref(), Some("north"));
        assert_eq!(d[0].criteria["length"], 2.0);
        assert_eq!(d[1].group, None);
        assert!(d[1].criteria.is_empty());
    }

    #[test]
    fn rejects_duplicates_and_empty_files() {
        let f = write("input_id,payload\nd1,a\nd1,b\n");
        assert!(matches!(load_dataset(f.path()), Err(Error::Ingestion(_))));
        let f = write("input_id,payload\n");
        assert!(matches!(load_dataset(f.path()), Err(Error::EmptyInput(_))));
        let f = write("id,payload\nd1,a\n");
        assert!(matches!(load_dataset(f.path()), Err(Error::Ingestion(_))));
    }
}
