//! CSV persistence for catalogs, ratings and session summaries.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::model::{AgeGroup, Catalog, DeviceClass, Gender, Orientation, Pool, RatingRecord, VideoAsset, ViewingDistance, Vision};
use crate::session::{SessionRecord, Termination};

pub const RATINGS_COLUMNS: [&str; 11] = [
    "session_id",
    "subject_id",
    "video_id",
    "position",
    "raw_score",
    "stall_total_ms",
    "play_duration_ms",
    "is_golden",
    "is_repeat",
    "is_common",
    "cursor_start",
];

pub const SESSIONS_COLUMNS: [&str; 12] = [
    "session_id",
    "subject_id",
    "termination",
    "elapsed_min",
    "warnings",
    "display_w",
    "display_h",
    "device_class",
    "vision",
    "age_group",
    "gender",
    "viewing_distance",
];

pub const CATALOG_COLUMNS: [&str; 8] = ["video_id", "width", "height", "orientation", "size_bits", "pool", "latent_quality", "golden_mos"];

/// Session summary as persisted; survey answers stand in for the subject profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRow {
    pub session_id: String,
    pub subject_id: String,
    pub termination: Termination,
    pub elapsed_min: f64,
    /// `;`-separated warning names.
    pub warnings: String,
    pub display_w: u32,
    pub display_h: u32,
    pub device_class: DeviceClass,
    pub vision: Vision,
    pub age_group: AgeGroup,
    pub gender: Gender,
    pub viewing_distance: ViewingDistance,
}

impl From<&SessionRecord> for SessionRow {
    fn from(s: &SessionRecord) -> Self {
        SessionRow {
            session_id: s.session_id.clone(),
            subject_id: s.subject_id.clone(),
            termination: s.termination,
            elapsed_min: (s.elapsed_min * 1000.0).round() / 1000.0,
            warnings: s.warnings.iter().map(|w| w.as_str()).collect::<Vec<_>>().join(";"),
            display_w: s.survey.display_w,
            display_h: s.survey.display_h,
            device_class: s.survey.device_class,
            vision: s.survey.vision,
            age_group: s.survey.age_group,
            gender: s.survey.gender,
            viewing_distance: s.survey.viewing_distance,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogRow {
    video_id: String,
    width: u32,
    height: u32,
    orientation: Orientation,
    size_bits: u64,
    pool: Pool,
    latent_quality: f64,
    golden_mos: Option<f64>,
}

/// Reads rows after checking that every `required` column is present.
pub fn read_rows<T: DeserializeOwned, R: Read>(reader: R, required: &[&str]) -> Result<Vec<T>, DataError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if let Some(missing) = required.iter().find(|c| !headers.iter().any(|h| h == **c)) {
        return Err(DataError::MissingColumn((*missing).to_string()));
    }
    rdr.deserialize().enumerate().map(|(i, row)| row.map_err(|e| DataError::Row { row: i + 2, message: e.to_string() })).collect()
}

pub fn write_rows<T: Serialize, W: Write>(writer: W, header: &[&str], rows: &[T]) -> Result<(), DataError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    wtr.write_record(header)?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_ratings<W: Write>(writer: W, ratings: &[RatingRecord]) -> Result<(), DataError> {
    write_rows(writer, &RATINGS_COLUMNS, ratings)
}

pub fn read_ratings<R: Read>(reader: R) -> Result<Vec<RatingRecord>, DataError> {
    let rows: Vec<RatingRecord> = read_rows(reader, &RATINGS_COLUMNS)?;
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.raw_score > 100 || r.cursor_start > 100) {
        return Err(DataError::Row { row: i + 2, message: format!("score out of range in `{}`", r.video_id) });
    }
    Ok(rows)
}

pub fn write_sessions<W: Write>(writer: W, sessions: &[SessionRow]) -> Result<(), DataError> {
    write_rows(writer, &SESSIONS_COLUMNS, sessions)
}

pub fn read_sessions<R: Read>(reader: R) -> Result<Vec<SessionRow>, DataError> {
    read_rows(reader, &SESSIONS_COLUMNS)
}

pub fn write_catalog<W: Write>(writer: W, catalog: &Catalog) -> Result<(), DataError> {
    let rows: Vec<CatalogRow> = catalog
        .assets()
        .iter()
        .map(|a| CatalogRow {
            video_id: a.id.clone(),
            width: a.width,
            height: a.height,
            orientation: a.orientation,
            size_bits: a.size_bits,
            pool: a.pool,
            latent_quality: a.latent_quality,
            golden_mos: a.golden_ground_truth_mos,
        })
        .collect();
    write_rows(writer, &CATALOG_COLUMNS, &rows)
}

/// Reads a catalog of 10 s videos; rejects resolutions outside the known set.
pub fn read_catalog<R: Read>(reader: R) -> Result<Catalog, DataError> {
    let rows: Vec<CatalogRow> = read_rows(reader, &CATALOG_COLUMNS)?;
    let assets = rows
        .into_iter()
        .map(|r| VideoAsset {
            id: r.video_id,
            width: r.width,
            height: r.height,
            orientation: r.orientation,
            duration_s: 10.0,
            size_bits: r.size_bits,
            pool: r.pool,
            latent_quality: r.latent_quality,
            golden_ground_truth_mos: r.golden_mos,
        })
        .collect();
    Catalog::new(assets).map_err(|e| DataError::Integrity(e.to_string()))
}
