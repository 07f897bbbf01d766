//! CSV loading and writing for databases and ground truth.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Database, Record};

/// Column layout of a database CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvLayout {
    pub id_column: String,
    pub entity_column: Option<String>,
    /// QID columns in schema order; `None` takes every remaining column.
    pub attributes: Option<Vec<String>>,
}

impl CsvLayout {
    pub fn new(id_column: impl Into<String>) -> Self {
        CsvLayout {
            id_column: id_column.into(),
            entity_column: None,
            attributes: None,
        }
    }

    pub fn from_config(cfg: &crate::Config) -> Self {
        CsvLayout {
            id_column: cfg.id_column.clone(),
            entity_column: cfg.entity_column.clone(),
            attributes: (!cfg.attributes.is_empty()).then(|| cfg.attributes.clone()),
        }
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_database(path: &Path, layout: &CsvLayout) -> Result<Database> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_database(file, &name, layout).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        Error::MissingColumn { column, .. } => Error::MissingColumn {
            path: path.to_path_buf(),
            column,
        },
        other => other,
    })
}

/// Reads a database from any CSV source. `name` labels it in reports.
pub fn read_database<R: std::io::Read>(
    reader: R,
    name: &str,
    layout: &CsvLayout,
) -> Result<Database> {
    let origin = Path::new(name);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err(origin))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: origin.to_path_buf(),
                column: name.to_string(),
            })
    };
    let id_col = column(&layout.id_column)?;
    let entity_col = layout.entity_column.as_deref().map(column).transpose()?;
    let schema: Vec<String> = match &layout.attributes {
        Some(attrs) => attrs.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != id_col && Some(*i) != entity_col)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let cols: Vec<usize> = schema.iter().map(|a| column(a)).collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err(origin))?;
        let data_row = i + 1;
        let id = row.get(id_col).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::Malformed(format!(
                "{name}: row {data_row} has an empty `{}`",
                layout.id_column
            )));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, row: data_row });
        }
        let values = cols.iter().map(|&c| row.get(c));
        let mut record = Record::new(id, values);
        if let Some(e) = entity_col.and_then(|c| row.get(c)).map(str::trim) {
            if !e.is_empty() {
                record = record.with_entity(e);
            }
        }
        records.push(record);
    }
    Database::new(name, schema, records)
}

/// Writes `id`, then the entity column when any record carries one, then the
/// schema attributes. Missing values become empty fields.
pub fn write_database<W: std::io::Write>(
    db: &Database,
    writer: W,
    layout: &CsvLayout,
) -> Result<()> {
    let origin = Path::new(db.name());
    let mut w = csv::Writer::from_writer(writer);
    let with_entity =
        layout.entity_column.is_some() && db.records().iter().any(|r| r.entity_id().is_some());
    let mut header = vec![layout.id_column.as_str()];
    if with_entity {
        header.push(layout.entity_column.as_deref().unwrap());
    }
    header.extend(db.schema().iter().map(String::as_str));
    w.write_record(&header).map_err(csv_err(origin))?;
    for r in db.records() {
        let mut row = vec![r.id()];
        if with_entity {
            row.push(r.entity_id().unwrap_or(""));
        }
        row.extend(r.values().iter().map(|v| v.as_deref().unwrap_or("")));
        w.write_record(&row).map_err(csv_err(origin))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: origin.to_path_buf(),
        source,
    })
}

pub fn save_database(db: &Database, path: &Path, layout: &CsvLayout) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_database(db, std::io::BufWriter::new(file), layout)
}

/// True matching pairs, (id in A, id in B).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub links: BTreeSet<(String, String)>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, id_a: &str, id_b: &str) -> bool {
        self.links.contains(&(id_a.to_string(), id_b.to_string()))
    }

    pub fn transposed(&self) -> GroundTruth {
        GroundTruth {
            links: self
                .links
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }

    /// Links every cross-database pair of records sharing an entity id.
    pub fn from_entities(db_a: &Database, db_b: &Database) -> Result<GroundTruth> {
        let missing = |db: &Database| db.records().iter().all(|r| r.entity_id().is_none());
        if !db_a.is_empty() && missing(db_a) || !db_b.is_empty() && missing(db_b) {
            return Err(Error::Malformed(
                "entity-id ground truth needs entity ids in both databases".to_string(),
            ));
        }
        let mut by_entity: HashMap<&str, Vec<&str>> = HashMap::new();
        for r in db_b.records() {
            if let Some(e) = r.entity_id() {
                by_entity.entry(e).or_default().push(r.id());
            }
        }
        let mut links = BTreeSet::new();
        for r in db_a.records() {
            if let Some(ids) = r.entity_id().and_then(|e| by_entity.get(e)) {
                for id_b in ids {
                    links.insert((r.id().to_string(), id_b.to_string()));
                }
            }
        }
        Ok(GroundTruth { links })
    }

    pub fn write<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let origin = Path::new("ground truth");
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id_a", "id_b"]).map_err(csv_err(origin))?;
        for (a, b) in &self.links {
            w.write_record([a, b]).map_err(csv_err(origin))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: origin.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write(std::io::BufWriter::new(file))
    }
}

/// Loads an `id_a,id_b` pairs file and checks every id against the two
/// databases.
pub fn load_ground_truth(path: &Path, db_a: &Database, db_b: &Database) -> Result<GroundTruth> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::Reader::from_reader(file);
    let ids = |db: &Database| -> HashSet<String> {
        db.records().iter().map(|r| r.id().to_string()).collect()
    };
    let (ids_a, ids_b) = (ids(db_a), ids(db_b));
    let mut links = BTreeSet::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err(path))?;
        let (a, b) = match (row.get(0), row.get(1)) {
            (Some(a), Some(b)) => (a.trim().to_string(), b.trim().to_string()),
            _ => {
                return Err(Error::Malformed(format!(
                    "{}: ground-truth rows need two columns",
                    path.display()
                )))
            }
        };
        if !ids_a.contains(&a) {
            return Err(Error::UnknownRecord {
                id: a,
                database: db_a.name().to_string(),
            });
        }
        if !ids_b.contains(&b) {
            return Err(Error::UnknownRecord {
                id: b,
                database: db_b.name().to_string(),
            });
        }
        links.insert((a, b));
    }
    Ok(GroundTruth { links })
}
