//! Record schema and ingest for GES-style person-level crash data.
//!
//! A row of the canonical CSV is one person in one vehicle in one crash.
//! Label fields (case number, PSU, …) identify the person but carry no
//! signal; input fields describe driver, vehicle, and environment; the
//! severity column is the target. "Unknown" is a first-class value for every
//! input field — an empty cell, the token `unknown`, or a schema-declared
//! sentinel all read as unknown — but rows whose *severity* cannot be read
//! are rejected, never imputed.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

/// Person-level injury severity, ordered from least to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InjurySeverity {
    NoInjury,
    PossibleInjury,
    NonIncapacitating,
    Incapacitating,
    Fatal,
}

impl InjurySeverity {
    pub const ALL: [InjurySeverity; 5] = [
        InjurySeverity::NoInjury,
        InjurySeverity::PossibleInjury,
        InjurySeverity::NonIncapacitating,
        InjurySeverity::Incapacitating,
        InjurySeverity::Fatal,
    ];

    /// Canonical CSV/config token.
    pub fn token(self) -> &'static str {
        match self {
            InjurySeverity::NoInjury => "none",
            InjurySeverity::PossibleInjury => "possible",
            InjurySeverity::NonIncapacitating => "nonincap",
            InjurySeverity::Incapacitating => "incap",
            InjurySeverity::Fatal => "fatal",
        }
    }

    pub fn parse_token(s: &str) -> Option<InjurySeverity> {
        Self::ALL.into_iter().find(|sev| sev.token() == s)
    }

    /// Human-readable name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            InjurySeverity::NoInjury => "No Injury",
            InjurySeverity::PossibleInjury => "Possible Injury",
            InjurySeverity::NonIncapacitating => "Non-incapacitating Injury",
            InjurySeverity::Incapacitating => "Incapacitating Injury",
            InjurySeverity::Fatal => "Fatal Injury",
        }
    }

    /// Index into arrays ordered like [`InjurySeverity::ALL`].
    pub fn rank(self) -> usize {
        self as usize
    }
}

impl fmt::Display for InjurySeverity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Initial point of impact on the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImpactPoint {
    NoDamage,
    Front,
    RightSide,
    LeftSide,
    Back,
    FrontRightCorner,
    FrontLeftCorner,
    BackRightCorner,
    BackLeftCorner,
}

impl ImpactPoint {
    pub const ALL: [ImpactPoint; 9] = [
        ImpactPoint::NoDamage,
        ImpactPoint::Front,
        ImpactPoint::RightSide,
        ImpactPoint::LeftSide,
        ImpactPoint::Back,
        ImpactPoint::FrontRightCorner,
        ImpactPoint::FrontLeftCorner,
        ImpactPoint::BackRightCorner,
        ImpactPoint::BackLeftCorner,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ImpactPoint::NoDamage => "no_damage",
            ImpactPoint::Front => "front",
            ImpactPoint::RightSide => "right_side",
            ImpactPoint::LeftSide => "left_side",
            ImpactPoint::Back => "back",
            ImpactPoint::FrontRightCorner => "front_right_corner",
            ImpactPoint::FrontLeftCorner => "front_left_corner",
            ImpactPoint::BackRightCorner => "back_right_corner",
            ImpactPoint::BackLeftCorner => "back_left_corner",
        }
    }

    pub fn parse_token(s: &str) -> Option<ImpactPoint> {
        Self::ALL.into_iter().find(|p| p.token() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn token(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }

    pub fn parse_token(s: &str) -> Option<Gender> {
        match s {
            "male" => Some(Gender::Male),
            "female" => Some(Gender::Female),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum YesNo {
    Yes,
    No,
}

impl YesNo {
    pub fn token(self) -> &'static str {
        match self {
            YesNo::Yes => "yes",
            YesNo::No => "no",
        }
    }

    pub fn parse_token(s: &str) -> Option<YesNo> {
        match s {
            "yes" => Some(YesNo::Yes),
            "no" => Some(YesNo::No),
            _ => None,
        }
    }
}

/// The `manner_of_collision` token that, together with a front impact point,
/// defines the modeled cohort.
pub const MANNER_HEAD_ON: &str = "head_on";

/// The fifteen input fields of a record, in canonical column order.
///
/// The first eleven are the model variables (the inputs the classifiers see);
/// the remaining four are recorded, reported on, and then dropped by
/// [`select_model_variables`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InputField {
    DriverAge,
    Gender,
    AlcoholUse,
    RestraintUsed,
    Ejected,
    VehicleBodyType,
    VehicleRole,
    VehicleAge,
    Rollover,
    RoadSurface,
    LightCondition,
    MannerOfCollision,
    InitialImpact,
    TravelSpeed,
    SpeedLimit,
}

impl InputField {
    pub const ALL: [InputField; 15] = [
        InputField::DriverAge,
        InputField::Gender,
        InputField::AlcoholUse,
        InputField::RestraintUsed,
        InputField::Ejected,
        InputField::VehicleBodyType,
        InputField::VehicleRole,
        InputField::VehicleAge,
        InputField::Rollover,
        InputField::RoadSurface,
        InputField::LightCondition,
        InputField::MannerOfCollision,
        InputField::InitialImpact,
        InputField::TravelSpeed,
        InputField::SpeedLimit,
    ];

    /// The eleven inputs kept for modeling, in variable order.
    pub const MODEL: [InputField; 11] = [
        InputField::DriverAge,
        InputField::Gender,
        InputField::AlcoholUse,
        InputField::RestraintUsed,
        InputField::Ejected,
        InputField::VehicleBodyType,
        InputField::VehicleRole,
        InputField::VehicleAge,
        InputField::Rollover,
        InputField::RoadSurface,
        InputField::LightCondition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InputField::DriverAge => "driver_age",
            InputField::Gender => "gender",
            InputField::AlcoholUse => "alcohol_use",
            InputField::RestraintUsed => "restraint_used",
            InputField::Ejected => "ejected",
            InputField::VehicleBodyType => "vehicle_body_type",
            InputField::VehicleRole => "vehicle_role",
            InputField::VehicleAge => "vehicle_age",
            InputField::Rollover => "rollover",
            InputField::RoadSurface => "road_surface",
            InputField::LightCondition => "light_condition",
            InputField::MannerOfCollision => "manner_of_collision",
            InputField::InitialImpact => "initial_impact",
            InputField::TravelSpeed => "travel_speed",
            InputField::SpeedLimit => "speed_limit",
        }
    }

    pub fn parse_name(s: &str) -> Option<InputField> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    /// True for the four fields holding non-negative integers.
    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            InputField::DriverAge
                | InputField::VehicleAge
                | InputField::TravelSpeed
                | InputField::SpeedLimit
        )
    }
}

impl fmt::Display for InputField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Label (identification) columns, kept as opaque strings.
pub const LABEL_FIELDS: [&str; 9] = [
    "year",
    "month",
    "region",
    "psu",
    "jurisdiction",
    "case_number",
    "person_number",
    "vehicle_number",
    "vehicle_make_model",
];

const SEVERITY_FIELD: &str = "severity";

/// One parsed person-level record. Input fields use `None` for Unknown;
/// severity is always known (rows without it are rejected at parse time).
#[derive(Debug, Clone, PartialEq)]
pub struct AccidentRecord {
    // label fields — identification only, never used for modeling
    pub year: String,
    pub month: String,
    pub region: String,
    pub psu: String,
    pub jurisdiction: String,
    pub case_number: String,
    pub person_number: String,
    pub vehicle_number: String,
    pub vehicle_make_model: String,
    // input fields
    pub driver_age: Option<u32>,
    pub gender: Option<Gender>,
    pub alcohol_use: Option<YesNo>,
    pub restraint_used: Option<YesNo>,
    pub ejected: Option<YesNo>,
    pub vehicle_body_type: Option<String>,
    pub vehicle_role: Option<String>,
    pub vehicle_age: Option<u32>,
    pub rollover: Option<YesNo>,
    pub road_surface: Option<String>,
    pub light_condition: Option<String>,
    pub manner_of_collision: Option<String>,
    pub initial_impact: Option<ImpactPoint>,
    pub travel_speed: Option<u32>,
    pub speed_limit: Option<u32>,
    // output field
    pub severity: InjurySeverity,
}

impl AccidentRecord {
    /// A record with every label empty and every input Unknown.
    pub fn blank(severity: InjurySeverity) -> AccidentRecord {
        AccidentRecord {
            year: String::new(),
            month: String::new(),
            region: String::new(),
            psu: String::new(),
            jurisdiction: String::new(),
            case_number: String::new(),
            person_number: String::new(),
            vehicle_number: String::new(),
            vehicle_make_model: String::new(),
            driver_age: None,
            gender: None,
            alcohol_use: None,
            restraint_used: None,
            ejected: None,
            vehicle_body_type: None,
            vehicle_role: None,
            vehicle_age: None,
            rollover: None,
            road_surface: None,
            light_condition: None,
            manner_of_collision: None,
            initial_impact: None,
            travel_speed: None,
            speed_limit: None,
            severity,
        }
    }

    pub fn field_is_missing(&self, field: InputField) -> bool {
        match field {
            InputField::DriverAge => self.driver_age.is_none(),
            InputField::Gender => self.gender.is_none(),
            InputField::AlcoholUse => self.alcohol_use.is_none(),
            InputField::RestraintUsed => self.restraint_used.is_none(),
            InputField::Ejected => self.ejected.is_none(),
            InputField::VehicleBodyType => self.vehicle_body_type.is_none(),
            InputField::VehicleRole => self.vehicle_role.is_none(),
            InputField::VehicleAge => self.vehicle_age.is_none(),
            InputField::Rollover => self.rollover.is_none(),
            InputField::RoadSurface => self.road_surface.is_none(),
            InputField::LightCondition => self.light_condition.is_none(),
            InputField::MannerOfCollision => self.manner_of_collision.is_none(),
            InputField::InitialImpact => self.initial_impact.is_none(),
            InputField::TravelSpeed => self.travel_speed.is_none(),
            InputField::SpeedLimit => self.speed_limit.is_none(),
        }
    }

    pub fn clear_field(&mut self, field: InputField) {
        match field {
            InputField::DriverAge => self.driver_age = None,
            InputField::Gender => self.gender = None,
            InputField::AlcoholUse => self.alcohol_use = None,
            InputField::RestraintUsed => self.restraint_used = None,
            InputField::Ejected => self.ejected = None,
            InputField::VehicleBodyType => self.vehicle_body_type = None,
            InputField::VehicleRole => self.vehicle_role = None,
            InputField::VehicleAge => self.vehicle_age = None,
            InputField::Rollover => self.rollover = None,
            InputField::RoadSurface => self.road_surface = None,
            InputField::LightCondition => self.light_condition = None,
            InputField::MannerOfCollision => self.manner_of_collision = None,
            InputField::InitialImpact => self.initial_impact = None,
            InputField::TravelSpeed => self.travel_speed = None,
            InputField::SpeedLimit => self.speed_limit = None,
        }
    }

    fn input_token(&self, field: InputField) -> String {
        fn num(v: Option<u32>) -> String {
            v.map(|n| n.to_string()).unwrap_or_default()
        }
        fn opt(v: Option<&str>) -> String {
            v.unwrap_or_default().to_string()
        }
        match field {
            InputField::DriverAge => num(self.driver_age),
            InputField::Gender => opt(self.gender.map(Gender::token)),
            InputField::AlcoholUse => opt(self.alcohol_use.map(YesNo::token)),
            InputField::RestraintUsed => opt(self.restraint_used.map(YesNo::token)),
            InputField::Ejected => opt(self.ejected.map(YesNo::token)),
            InputField::VehicleBodyType => opt(self.vehicle_body_type.as_deref()),
            InputField::VehicleRole => opt(self.vehicle_role.as_deref()),
            InputField::VehicleAge => num(self.vehicle_age),
            InputField::Rollover => opt(self.rollover.map(YesNo::token)),
            InputField::RoadSurface => opt(self.road_surface.as_deref()),
            InputField::LightCondition => opt(self.light_condition.as_deref()),
            InputField::MannerOfCollision => opt(self.manner_of_collision.as_deref()),
            InputField::InitialImpact => opt(self.initial_impact.map(ImpactPoint::token)),
            InputField::TravelSpeed => num(self.travel_speed),
            InputField::SpeedLimit => num(self.speed_limit),
        }
    }
}

/// Projection of a record onto the eleven model variables plus the target.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRow {
    pub driver_age: Option<u32>,
    pub gender: Option<Gender>,
    pub alcohol_use: Option<YesNo>,
    pub restraint_used: Option<YesNo>,
    pub ejected: Option<YesNo>,
    pub vehicle_body_type: Option<String>,
    pub vehicle_role: Option<String>,
    pub vehicle_age: Option<u32>,
    pub rollover: Option<YesNo>,
    pub road_surface: Option<String>,
    pub light_condition: Option<String>,
    pub severity: InjurySeverity,
}

/// Maps canonical field names to the column headers of a particular file and
/// declares which extra tokens read as Unknown.
///
/// The default schema expects the canonical headers (field names themselves)
/// and treats `999` in any of the numeric fields as a sentinel for Unknown,
/// alongside the universal empty cell and `unknown` token.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    /// canonical field name → column header in the file
    pub columns: BTreeMap<String, String>,
    /// per-field tokens that read as Unknown (exact match after trimming)
    pub unknown_sentinels: BTreeMap<InputField, Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> CsvSchema {
        let mut columns = BTreeMap::new();
        for name in canonical_field_names() {
            columns.insert(name.to_string(), name.to_string());
        }
        let mut unknown_sentinels = BTreeMap::new();
        for field in InputField::ALL {
            if field.is_numeric() {
                unknown_sentinels.insert(field, vec!["999".to_string()]);
            }
        }
        CsvSchema {
            columns,
            unknown_sentinels,
        }
    }
}

impl CsvSchema {
    fn column_for<'a>(&'a self, field: &'a str) -> &'a str {
        self.columns.get(field).map(String::as_str).unwrap_or(field)
    }

    fn is_unknown_token(&self, field: InputField, token: &str) -> bool {
        if token.is_empty() || token.eq_ignore_ascii_case("unknown") {
            return true;
        }
        self.unknown_sentinels
            .get(&field)
            .is_some_and(|ts| ts.iter().any(|t| t == token))
    }
}

/// All canonical column names in file order: labels, inputs, severity.
pub fn canonical_field_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = LABEL_FIELDS.to_vec();
    names.extend(InputField::ALL.iter().map(|f| f.name()));
    names.push(SEVERITY_FIELD);
    names
}

/// Tally of an ingest run. `rows_read = rows_parsed + rows_rejected`;
/// missingness fractions are over parsed rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_parsed: usize,
    pub rows_rejected: usize,
    /// rejection reason → count
    pub reject_reasons: BTreeMap<String, usize>,
    /// input field → fraction of parsed rows with the field Unknown
    pub missingness: BTreeMap<InputField, f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum GesError {
    #[error("i/o error reading records: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("input has no `{0}` column (severity is mandatory)")]
    MissingSeverityColumn(String),
}

/// Reads records from CSV. Severity must be present and parseable on every
/// kept row; malformed rows are tallied in the report, never silently
/// dropped. A missing non-severity column leaves that field Unknown on every
/// row (and shows up as missingness 1.0).
pub fn parse_csv<R: Read>(
    source: R,
    schema: &CsvSchema,
) -> Result<(Vec<AccidentRecord>, IngestReport), GesError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let header_index = |name: &str| headers.iter().position(|h| h == name);

    let severity_col = schema.column_for(SEVERITY_FIELD).to_string();
    let severity_idx = header_index(&severity_col)
        .ok_or_else(|| GesError::MissingSeverityColumn(severity_col.clone()))?;

    let label_idx: Vec<Option<usize>> = LABEL_FIELDS
        .iter()
        .map(|f| header_index(schema.column_for(f)))
        .collect();
    let input_idx: Vec<Option<usize>> = InputField::ALL
        .iter()
        .map(|f| header_index(schema.column_for(f.name())))
        .collect();

    let mut records = Vec::new();
    let mut report = IngestReport {
        rows_read: 0,
        rows_parsed: 0,
        rows_rejected: 0,
        reject_reasons: BTreeMap::new(),
        missingness: BTreeMap::new(),
    };
    let mut missing_counts: BTreeMap<InputField, usize> = BTreeMap::new();
    let reject = |report: &mut IngestReport, reason: String| {
        report.rows_rejected += 1;
        *report.reject_reasons.entry(reason).or_insert(0) += 1;
    };

    for row in reader.records() {
        report.rows_read += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(e.into()),
                _ => {
                    reject(&mut report, "malformed row".to_string());
                    continue;
                }
            },
        };
        if row.len() != headers.len() {
            reject(&mut report, "wrong field count".to_string());
            continue;
        }

        let severity_token = row.get(severity_idx).unwrap_or("");
        let severity = if severity_token.is_empty()
            || severity_token.eq_ignore_ascii_case("unknown")
        {
            reject(&mut report, "unknown severity".to_string());
            continue;
        } else {
            match InjurySeverity::parse_token(severity_token) {
                Some(s) => s,
                None => {
                    reject(&mut report, "unparsable severity".to_string());
                    continue;
                }
            }
        };

        let mut record = AccidentRecord::blank(severity);
        {
            let labels: [&mut String; 9] = [
                &mut record.year,
                &mut record.month,
                &mut record.region,
                &mut record.psu,
                &mut record.jurisdiction,
                &mut record.case_number,
                &mut record.person_number,
                &mut record.vehicle_number,
                &mut record.vehicle_make_model,
            ];
            for (slot, idx) in labels.into_iter().zip(&label_idx) {
                if let Some(i) = idx {
                    *slot = row.get(*i).unwrap_or("").to_string();
                }
            }
        }

        let mut bad_field: Option<InputField> = None;
        for (field, idx) in InputField::ALL.into_iter().zip(&input_idx) {
            let token = idx.and_then(|i| row.get(i)).unwrap_or("");
            if schema.is_unknown_token(field, token) {
                continue; // stays Unknown
            }
            let ok = set_input_field(&mut record, field, token);
            if !ok {
                bad_field = Some(field);
                break;
            }
        }
        if let Some(field) = bad_field {
            reject(&mut report, format!("unparsable {}", field.name()));
            continue;
        }

        report.rows_parsed += 1;
        for field in InputField::ALL {
            if record.field_is_missing(field) {
                *missing_counts.entry(field).or_insert(0) += 1;
            }
        }
        records.push(record);
    }

    for field in InputField::ALL {
        let count = missing_counts.get(&field).copied().unwrap_or(0);
        let fraction = if report.rows_parsed == 0 {
            0.0
        } else {
            count as f64 / report.rows_parsed as f64
        };
        report.missingness.insert(field, fraction);
    }

    debug_assert_eq!(report.rows_read, report.rows_parsed + report.rows_rejected);
    Ok((records, report))
}

/// Parses a known (non-sentinel) token into `record`; false if unparsable.
fn set_input_field(record: &mut AccidentRecord, field: InputField, token: &str) -> bool {
    fn parse_u32(token: &str) -> Option<u32> {
        token.parse::<u32>().ok()
    }
    match field {
        InputField::DriverAge => match parse_u32(token) {
            Some(v) => {
                record.driver_age = Some(v);
                true
            }
            None => false,
        },
        InputField::VehicleAge => match parse_u32(token) {
            Some(v) => {
                record.vehicle_age = Some(v);
                true
            }
            None => false,
        },
        InputField::TravelSpeed => match parse_u32(token) {
            Some(v) => {
                record.travel_speed = Some(v);
                true
            }
            None => false,
        },
        InputField::SpeedLimit => match parse_u32(token) {
            Some(v) => {
                record.speed_limit = Some(v);
                true
            }
            None => false,
        },
        InputField::Gender => match Gender::parse_token(token) {
            Some(v) => {
                record.gender = Some(v);
                true
            }
            None => false,
        },
        InputField::AlcoholUse => match YesNo::parse_token(token) {
            Some(v) => {
                record.alcohol_use = Some(v);
                true
            }
            None => false,
        },
        InputField::RestraintUsed => match YesNo::parse_token(token) {
            Some(v) => {
                record.restraint_used = Some(v);
                true
            }
            None => false,
        },
        InputField::Ejected => match YesNo::parse_token(token) {
            Some(v) => {
                record.ejected = Some(v);
                true
            }
            None => false,
        },
        InputField::Rollover => match YesNo::parse_token(token) {
            Some(v) => {
                record.rollover = Some(v);
                true
            }
            None => false,
        },
        InputField::InitialImpact => match ImpactPoint::parse_token(token) {
            Some(v) => {
                record.initial_impact = Some(v);
                true
            }
            None => false,
        },
        InputField::VehicleBodyType => {
            record.vehicle_body_type = Some(token.to_string());
            true
        }
        InputField::VehicleRole => {
            record.vehicle_role = Some(token.to_string());
            true
        }
        InputField::RoadSurface => {
            record.road_surface = Some(token.to_string());
            true
        }
        InputField::LightCondition => {
            record.light_condition = Some(token.to_string());
            true
        }
        InputField::MannerOfCollision => {
            record.manner_of_collision = Some(token.to_string());
            true
        }
    }
}

struct CountingWriter<W: Write> {
    inner: W,
    bytes: u64,
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Writes records in the canonical column order (Unknown → empty cell) and
/// returns the number of bytes written. Output parses back losslessly with
/// the default schema.
pub fn write_csv<W: Write>(records: &[AccidentRecord], sink: W) -> Result<u64, GesError> {
    let counter = CountingWriter {
        inner: sink,
        bytes: 0,
    };
    let mut writer = csv::Writer::from_writer(counter);
    writer.write_record(canonical_field_names())?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.year.clone(),
            r.month.clone(),
            r.region.clone(),
            r.psu.clone(),
            r.jurisdiction.clone(),
            r.case_number.clone(),
            r.person_number.clone(),
            r.vehicle_number.clone(),
            r.vehicle_make_model.clone(),
        ];
        for field in InputField::ALL {
            row.push(r.input_token(field));
        }
        row.push(r.severity.token().to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(writer.into_inner().map_err(|e| e.into_error())?.bytes)
}

/// Keeps the rows where the collision is head-on *and* the initial impact
/// point is the front of the vehicle, preserving input order. Rows with
/// either field Unknown are excluded.
pub fn filter_head_on_front(records: &[AccidentRecord]) -> Vec<AccidentRecord> {
    records
        .iter()
        .filter(|r| {
            r.manner_of_collision.as_deref() == Some(MANNER_HEAD_ON)
                && r.initial_impact == Some(ImpactPoint::Front)
        })
        .cloned()
        .collect()
}

/// Projects records onto the eleven model variables plus severity, dropping
/// labels, collision descriptors, and the speed fields.
pub fn select_model_variables(records: &[AccidentRecord]) -> Vec<ModelRow> {
    records
        .iter()
        .map(|r| ModelRow {
            driver_age: r.driver_age,
            gender: r.gender,
            alcohol_use: r.alcohol_use,
            restraint_used: r.restraint_used,
            ejected: r.ejected,
            vehicle_body_type: r.vehicle_body_type.clone(),
            vehicle_role: r.vehicle_role.clone(),
            vehicle_age: r.vehicle_age,
            rollover: r.rollover,
            road_surface: r.road_surface.clone(),
            light_condition: r.light_condition.clone(),
            severity: r.severity,
        })
        .collect()
}
