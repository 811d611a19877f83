use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_latin1, DatasetBundle};
use crate::error::{Error, Result};
use crate::model::{Catalog, IdMap, ItemId, RatingRecord, TagId, UserId};

/// A column by zero-based position or by header name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Layout of a delimited ratings file. Group and tag files use the same
/// delimiter and header setting, with two columns each: `user,group` and
/// `item,tag`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericSchema {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_true")]
    pub has_header: bool,
    pub user: ColumnRef,
    pub item: ColumnRef,
    pub rating: ColumnRef,
    #[serde(default)]
    pub timestamp: Option<ColumnRef>,
    #[serde(default = "default_scale")]
    pub rating_scale: u8,
}

fn default_delimiter() -> char {
    ','
}

fn default_true() -> bool {
    true
}

fn default_scale() -> u8 {
    5
}

impl GenericSchema {
    /// `user,item,rating` with a header row.
    pub fn csv() -> Self {
        GenericSchema {
            delimiter: ',',
            has_header: true,
            user: ColumnRef::Index(0),
            item: ColumnRef::Index(1),
            rating: ColumnRef::Index(2),
            timestamp: None,
            rating_scale: 5,
        }
    }
}

fn resolve(col: &ColumnRef, header: Option<&csv::StringRecord>, width: usize, param: &str) -> Result<usize> {
    let idx = match col {
        ColumnRef::Index(i) => *i,
        ColumnRef::Name(name) => header
            .and_then(|h| h.iter().position(|f| f.trim() == name))
            .ok_or_else(|| Error::config(param, format!("no column named {name:?}")))?,
    };
    if idx >= width {
        return Err(Error::config(param, format!("column {idx} out of range ({width} columns)")));
    }
    Ok(idx)
}

struct Table {
    header: Option<csv::StringRecord>,
    rows: Vec<(usize, csv::StringRecord)>,
}

fn read_table(path: &Path, delimiter: char, has_header: bool) -> Result<Table> {
    if !delimiter.is_ascii() {
        return Err(Error::config("schema.delimiter", "must be a single ASCII character"));
    }
    let text = read_latin1(path)?;
    let mut r = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = if has_header { Some(r.headers()?.clone()) } else { None };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec));
    }
    Ok(Table { header, rows })
}

fn field<'a>(path: &Path, line: usize, rec: &'a csv::StringRecord, idx: usize) -> Result<&'a str> {
    rec.get(idx).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("missing column {idx}"),
    })
}

/// Loads ratings from a delimited file, plus optional `user,group` and
/// `item,tag` files.
pub fn load_generic(
    ratings_path: &Path,
    groups_path: Option<&Path>,
    tags_path: Option<&Path>,
    schema: &GenericSchema,
) -> Result<DatasetBundle> {
    if schema.rating_scale == 0 {
        return Err(Error::config("schema.rating_scale", "must be at least 1"));
    }
    let table = read_table(ratings_path, schema.delimiter, schema.has_header)?;
    let width = table
        .header
        .as_ref()
        .map(|h| h.len())
        .or_else(|| table.rows.first().map(|r| r.1.len()))
        .unwrap_or(0);
    let h = table.header.as_ref();
    let uc = resolve(&schema.user, h, width, "schema.user")?;
    let ic = resolve(&schema.item, h, width, "schema.item")?;
    let rc = resolve(&schema.rating, h, width, "schema.rating")?;
    let tc = schema
        .timestamp
        .as_ref()
        .map(|t| resolve(t, h, width, "schema.timestamp"))
        .transpose()?;

    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let mut ratings = Vec::with_capacity(table.rows.len());
    let mut seen = HashSet::new();
    let p = ratings_path;
    for (line, rec) in &table.rows {
        let parse = |message: String| Error::Parse {
            path: p.to_path_buf(),
            line: *line,
            message,
        };
        let user = UserId(users.get_or_insert(field(p, *line, rec, uc)?));
        let item = ItemId(items.get_or_insert(field(p, *line, rec, ic)?));
        let raw = field(p, *line, rec, rc)?;
        let value: f64 = raw.parse().map_err(|_| parse(format!("bad rating {raw:?}")))?;
        if value.fract() != 0.0 || value < 1.0 || value > f64::from(schema.rating_scale) {
            return Err(Error::DataIntegrity(format!(
                "{}:{line}: rating {raw} outside 1..={}",
                p.display(),
                schema.rating_scale
            )));
        }
        let timestamp = match tc {
            Some(c) => {
                let t = field(p, *line, rec, c)?;
                Some(t.parse::<i64>().map_err(|_| parse(format!("bad timestamp {t:?}")))?)
            }
            None => None,
        };
        if !seen.insert((user, item)) {
            return Err(parse(format!("duplicate rating for user {} item {}", &rec[uc], &rec[ic])));
        }
        ratings.push(RatingRecord {
            user,
            item,
            rating: value as u8,
            timestamp,
        });
    }

    let mut tags = IdMap::new();
    let mut tag_pairs = Vec::new();
    if let Some(tp) = tags_path {
        let t = read_table(tp, schema.delimiter, schema.has_header)?;
        for (line, rec) in &t.rows {
            let item = items.get_or_insert(field(tp, *line, rec, 0)?);
            let tag = tags.get_or_insert(field(tp, *line, rec, 1)?);
            tag_pairs.push((item as usize, TagId(tag)));
        }
    }

    let mut labels: Option<Vec<(u32, String)>> = None;
    if let Some(gp) = groups_path {
        let t = read_table(gp, schema.delimiter, schema.has_header)?;
        let mut v = Vec::new();
        for (line, rec) in &t.rows {
            let user = users.get_or_insert(field(gp, *line, rec, 0)?);
            v.push((user, field(gp, *line, rec, 1)?.to_string()));
        }
        labels = Some(v);
    }

    let mut tag_assignments = vec![Vec::new(); items.len()];
    for (item, tag) in tag_pairs {
        tag_assignments[item].push(tag);
    }
    let explicit_groups = labels.map(|v| {
        let mut out = vec![None; users.len()];
        for (u, l) in v {
            out[u as usize] = Some(l);
        }
        out
    });
    let catalog = Catalog::new(items, users, tags, tag_assignments, schema.rating_scale)?;
    DatasetBundle::new(catalog, ratings, None, explicit_groups)
}
