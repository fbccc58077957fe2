//! Dataset adapters.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use super::config::{Column, DataConfig, DataFormat, Manifest};
use crate::data::{Dataset, RawInteraction};
use crate::error::{Error, Result};

/// Entity counts of an ingested dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestSummary {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub categories: usize,
    pub memberships: usize,
}

impl IngestSummary {
    pub fn of(ds: &Dataset) -> Self {
        IngestSummary {
            users: ds.n_users(),
            items: ds.n_items(),
            interactions: ds.interactions.len(),
            categories: ds.n_categories(),
            memberships: ds.item_categories.len(),
        }
    }

    pub fn check(&self, m: &Manifest) -> Result<()> {
        let pairs = [
            ("users", m.users, self.users),
            ("items", m.items, self.items),
            ("interactions", m.interactions, self.interactions),
            ("categories", m.categories, self.categories),
        ];
        for (name, want, got) in pairs {
            if let Some(w) = want {
                if w != got {
                    return Err(Error::IngestMismatch(format!("expected {w} {name}, found {got}")));
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "users={} items={} interactions={} categories={} memberships={}",
            self.users, self.items, self.interactions, self.categories, self.memberships
        )
    }
}

/// Reads the configured dataset and checks it against the manifest.
pub fn ingest(cfg: &DataConfig) -> Result<Dataset> {
    let ds = match cfg.format {
        DataFormat::Movielens => {
            let dir = cfg
                .path
                .as_deref()
                .ok_or_else(|| Error::Config("data.path is required for movielens".into()))?;
            read_movielens(dir)?
        }
        DataFormat::Delimited => read_delimited(cfg)?,
    };
    IngestSummary::of(&ds).check(&cfg.expect)?;
    Ok(ds)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path.display().to_string(), line, format!("{other:?}")),
    }
}

/// `u.data` holds `user<TAB>item<TAB>rating<TAB>timestamp`; `u.item` holds
/// pipe-separated movie rows whose last 19 fields are genre flags.
pub fn read_movielens(dir: &Path) -> Result<Dataset> {
    let data_path = dir.join("u.data");
    let origin = data_path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(true)
        .from_reader(open(&data_path)?);
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&data_path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() < 3 {
            return Err(Error::parse(&origin, line, "expected user, item, rating, timestamp"));
        }
        let rating = rec[2]
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::parse(&origin, line, format!("bad rating {:?}", &rec[2])))?;
        let timestamp = match rec.get(3) {
            Some(t) => Some(
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::parse(&origin, line, format!("bad timestamp {t:?}")))?,
            ),
            None => None,
        };
        records.push(RawInteraction {
            user: rec[0].trim().to_string(),
            item: rec[1].trim().to_string(),
            rating: Some(rating),
            timestamp,
            line,
        });
    }

    let item_path = dir.join("u.item");
    let mut memberships = Vec::new();
    if item_path.exists() {
        let origin = item_path.display().to_string();
        // titles are latin-1, so work on raw bytes
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'|')
            .has_headers(false)
            .flexible(true)
            .quoting(false)
            .from_reader(open(&item_path)?);
        for rec in rdr.byte_records() {
            let rec = rec.map_err(|e| csv_error(&item_path, e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() < 20 {
                return Err(Error::parse(&origin, line, "expected 5 fields and 19 genre flags"));
            }
            let item = String::from_utf8_lossy(&rec[0]).trim().to_string();
            for (g, flag) in rec.iter().skip(rec.len() - 19).enumerate() {
                if flag == b"1" {
                    memberships.push((item.clone(), format!("genre{g}")));
                }
            }
        }
    }
    Dataset::from_raw(&records, &memberships, &origin)
}

fn column_index(col: &Column, headers: Option<&csv::StringRecord>, path: &Path) -> Result<usize> {
    match col {
        Column::Index(i) => Ok(*i),
        Column::Name(n) => headers
            .and_then(|h| h.iter().position(|x| x.trim() == n))
            .ok_or_else(|| Error::Config(format!("column {n:?} not found in {}", path.display()))),
    }
}

fn field<'r>(rec: &'r csv::StringRecord, i: usize, origin: &str, line: usize) -> Result<&'r str> {
    rec.get(i)
        .map(str::trim)
        .ok_or_else(|| Error::parse(origin, line, format!("missing column {i}")))
}

/// Delimited interactions (`user,item[,rating][,timestamp]` by configured
/// columns) and optional `item,category` rows.
pub fn read_delimited(cfg: &DataConfig) -> Result<Dataset> {
    let path = cfg
        .interactions
        .as_deref()
        .ok_or_else(|| Error::Config("data.interactions is required for delimited input".into()))?;
    let origin = path.display().to_string();
    let delim = cfg.delimiter_byte()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(cfg.header)
        .flexible(true)
        .from_reader(open(path)?);
    let headers = if cfg.header {
        Some(rdr.headers().map_err(|e| csv_error(path, e))?.clone())
    } else {
        None
    };
    let uc = column_index(&cfg.user_column, headers.as_ref(), path)?;
    let ic = column_index(&cfg.item_column, headers.as_ref(), path)?;
    let rc = cfg
        .rating_column
        .as_ref()
        .map(|c| column_index(c, headers.as_ref(), path))
        .transpose()?;
    let tc = cfg
        .timestamp_column
        .as_ref()
        .map(|c| column_index(c, headers.as_ref(), path))
        .transpose()?;
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let rating = match rc {
            Some(c) => {
                let f = field(&rec, c, &origin, line)?;
                Some(
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(&origin, line, format!("bad rating {f:?}")))?,
                )
            }
            None => None,
        };
        let timestamp = match tc {
            Some(c) => {
                let f = field(&rec, c, &origin, line)?;
                Some(
                    f.parse::<i64>()
                        .map_err(|_| Error::parse(&origin, line, format!("bad timestamp {f:?}")))?,
                )
            }
            None => None,
        };
        records.push(RawInteraction {
            user: field(&rec, uc, &origin, line)?.to_string(),
            item: field(&rec, ic, &origin, line)?.to_string(),
            rating,
            timestamp,
            line,
        });
    }

    let mut memberships = Vec::new();
    if let Some(cpath) = cfg.categories.as_deref() {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delim)
            .has_headers(cfg.header)
            .flexible(true)
            .from_reader(open(cpath)?);
        let headers = if cfg.header {
            Some(rdr.headers().map_err(|e| csv_error(cpath, e))?.clone())
        } else {
            None
        };
        let corigin = cpath.display().to_string();
        let ici = column_index(&cfg.category_item_column, headers.as_ref(), cpath)?;
        let cci = column_index(&cfg.category_column, headers.as_ref(), cpath)?;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(cpath, e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            memberships.push((
                field(&rec, ici, &corigin, line)?.to_string(),
                field(&rec, cci, &corigin, line)?.to_string(),
            ));
        }
    }
    Dataset::from_raw(&records, &memberships, &origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn movielens_layout() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("u.data"), "1\t10\t5\t881250949\n2\t10\t3\t881250950\n2\t20\t4\t1\n").unwrap();
        let mut item = File::create(dir.path().join("u.item")).unwrap();
        let flags = |on: &[usize]| (0..19).map(|g| if on.contains(&g) { "1" } else { "0" }).collect::<Vec<_>>().join("|");
        writeln!(item, "10|Caf\u{e9} (1995)|01-Jan-1995||http://x|{}", flags(&[3, 4])).unwrap();
        item.write_all(b"20|Cr\xe8me (1996)|01-Jan-1996||http://y|").unwrap();
        writeln!(item, "{}", flags(&[4])).unwrap();
        writeln!(item, "30|Unrated|||http://z|{}", flags(&[0])).unwrap();
        drop(item);
        let ds = read_movielens(dir.path()).unwrap();
        let s = IngestSummary::of(&ds);
        assert_eq!((s.users, s.items, s.interactions, s.categories, s.memberships), (2, 2, 3, 2, 3));
        assert!(!ds.implicit);
        assert_eq!(ds.interactions[0].timestamp, Some(881250949));
    }

    #[test]
    fn manifest_mismatch_is_reported() {
        let s = IngestSummary {
            users: 3,
            items: 4,
            interactions: 5,
            categories: 0,
            memberships: 0,
        };
        let ok = Manifest {
            users: Some(3),
            ..Default::default()
        };
        assert!(s.check(&ok).is_ok());
        let bad = Manifest {
            items: Some(5),
            ..Default::default()
        };
        assert!(matches!(s.check(&bad), Err(Error::IngestMismatch(_))));
    }

    #[test]
    fn delimited_with_header_and_names() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("reviews.csv");
        std::fs::write(&ip, "stars,uid,iid\n4,a,x\n5,b,x\n2,b,y\n").unwrap();
        let cp = dir.path().join("cats.csv");
        std::fs::write(&cp, "iid,cat\nx,food\ny,bar\nz,food\n").unwrap();
        let cfg = DataConfig {
            format: DataFormat::Delimited,
            interactions: Some(ip),
            categories: Some(cp),
            user_column: Column::Name("uid".into()),
            item_column: Column::Name("iid".into()),
            rating_column: Some(Column::Name("stars".into())),
            category_item_column: Column::Name("iid".into()),
            category_column: Column::Name("cat".into()),
            ..Default::default()
        };
        let ds = ingest(&cfg).unwrap();
        assert_eq!(ds.n_users(), 2);
        assert_eq!(ds.n_items(), 2);
        assert_eq!(ds.n_categories(), 2);
        assert_eq!(ds.interactions[2].rating, 2.0);
    }

    #[test]
    fn delimited_without_ratings_is_implicit() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("r.tsv");
        std::fs::write(&ip, "u1\ti1\nu2\ti1\n").unwrap();
        let cfg = DataConfig {
            format: DataFormat::Delimited,
            interactions: Some(ip),
            delimiter: "\\t".into(),
            header: false,
            ..Default::default()
        };
        let ds = ingest(&cfg).unwrap();
        assert!(ds.implicit);
        assert_eq!(ds.interactions.len(), 2);
    }

    #[test]
    fn missing_file_is_io_error() {
        let cfg = DataConfig {
            path: Some("/nonexistent/dir".into()),
            ..Default::default()
        };
        assert!(matches!(ingest(&cfg), Err(Error::Io { .. })));
    }
}
