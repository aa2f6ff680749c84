//! Bill metadata records: parsing, validation, era labeling and splits.
//!
//! Records come from delimited text files (one bill per row, header
//! required) or from a paged JSON catalog. Either way every row passes the
//! same field parser, so both sources accept the same spellings.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};

/// First congress whose bills belong to the COVID era.
pub const COVID_CONGRESS: u32 = 116;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Chamber {
    House,
    Senate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BillType {
    Bill,
    Resolution,
    JointResolution,
    ConcurrentResolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    Democrat,
    Republican,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Era {
    PreCovid,
    Covid,
}

impl Chamber {
    pub fn parse(s: &str) -> Option<Self> {
        match squash(s).as_str() {
            "house" | "h" | "houseofrepresentatives" => Some(Chamber::House),
            "senate" | "s" => Some(Chamber::Senate),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Chamber::House => "House",
            Chamber::Senate => "Senate",
        }
    }
}

impl BillType {
    /// Accepts the long names as well as congress.gov type codes
    /// (`hr`, `sjres`, `hconres`, ...).
    pub fn parse(s: &str) -> Option<Self> {
        match squash(s).as_str() {
            "bill" | "hr" | "s" => Some(BillType::Bill),
            "resolution" | "res" | "hres" | "sres" => Some(BillType::Resolution),
            "jointresolution" | "jres" | "hjres" | "sjres" => Some(BillType::JointResolution),
            "concurrentresolution" | "conres" | "hconres" | "sconres" => Some(BillType::ConcurrentResolution),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BillType::Bill => "bill",
            BillType::Resolution => "resolution",
            BillType::JointResolution => "joint_resolution",
            BillType::ConcurrentResolution => "concurrent_resolution",
        }
    }
}

impl Party {
    /// Never fails: anything other than the two major parties is `Other`.
    pub fn parse(s: &str) -> Self {
        match squash(s).as_str() {
            "d" | "dem" | "democrat" | "democratic" => Party::Democrat,
            "r" | "rep" | "gop" | "republican" => Party::Republican,
            _ => Party::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Party::Democrat => "Democrat",
            Party::Republican => "Republican",
            Party::Other => "Other",
        }
    }
}

impl Era {
    pub fn of_congress(congress: u32) -> Self {
        if congress >= COVID_CONGRESS {
            Era::Covid
        } else {
            Era::PreCovid
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Era::PreCovid => "pre_covid",
            Era::Covid => "covid",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Era {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, ' ' | '_' | '-' | '.'))
        .flat_map(char::to_lowercase)
        .collect()
}

/// Trims, lowercases and collapses internal whitespace.
pub fn normalize_committee(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BillRecord {
    pub bill_id: String,
    pub chamber: Chamber,
    pub bill_type: BillType,
    pub congress: u32,
    pub intro_date: NaiveDate,
    pub sponsor_party: Party,
    pub sponsor_state: String,
    pub sponsor_district: u32,
    pub cosponsor_count: u32,
    pub committees: BTreeSet<String>,
    pub last_action_date: NaiveDate,
    pub last_action_text: String,
}

impl BillRecord {
    pub fn era(&self) -> Era {
        Era::of_congress(self.congress)
    }

    /// Checks the cross-field invariants.
    pub fn validate(&self, congress: (u32, u32)) -> std::result::Result<(), String> {
        if self.bill_id.trim().is_empty() {
            return Err("empty bill_id".into());
        }
        if self.congress < congress.0 || self.congress > congress.1 {
            return Err(format!(
                "congress {} outside {}..={}",
                self.congress, congress.0, congress.1
            ));
        }
        if self.chamber == Chamber::Senate && self.sponsor_district != 0 {
            return Err(format!("senate sponsor with district {}", self.sponsor_district));
        }
        if self.last_action_date < self.intro_date {
            return Err(format!(
                "last action {} precedes introduction {}",
                self.last_action_date, self.intro_date
            ));
        }
        if self.sponsor_state.len() != 2 || !self.sponsor_state.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(format!("state `{}` is not a two-letter code", self.sponsor_state));
        }
        Ok(())
    }
}

/// Raw field values of one record, before parsing.
#[derive(Debug, Clone, Default)]
struct RawFields {
    bill_id: String,
    chamber: String,
    bill_type: String,
    congress: String,
    intro_date: String,
    sponsor_party: String,
    sponsor_state: String,
    sponsor_district: String,
    cosponsor_count: String,
    committees: Vec<String>,
    last_action_date: String,
    last_action_text: String,
}

fn parse_int(field: &str, value: &str) -> std::result::Result<u32, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("{field}: `{value}` is not a non-negative integer"))
}

fn parse_date(field: &str, value: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(value.trim(), "%Y-%m-%d")
        .map_err(|_| format!("{field}: `{value}` is not a YYYY-MM-DD date"))
}

impl RawFields {
    fn parse(&self) -> std::result::Result<BillRecord, String> {
        let chamber = Chamber::parse(&self.chamber)
            .ok_or_else(|| format!("chamber: unknown value `{}`", self.chamber))?;
        let bill_type = BillType::parse(&self.bill_type)
            .ok_or_else(|| format!("bill_type: unknown value `{}`", self.bill_type))?;
        let district = if self.sponsor_district.trim().is_empty() && chamber == Chamber::Senate {
            0
        } else {
            parse_int("sponsor_district", &self.sponsor_district)?
        };
        Ok(BillRecord {
            bill_id: self.bill_id.trim().to_string(),
            chamber,
            bill_type,
            congress: parse_int("congress", &self.congress)?,
            intro_date: parse_date("intro_date", &self.intro_date)?,
            sponsor_party: Party::parse(&self.sponsor_party),
            sponsor_state: self.sponsor_state.trim().to_ascii_uppercase(),
            sponsor_district: district,
            cosponsor_count: parse_int("cosponsor_count", &self.cosponsor_count)?,
            committees: self
                .committees
                .iter()
                .map(|c| normalize_committee(c))
                .filter(|c| !c.is_empty())
                .collect(),
            last_action_date: parse_date("last_action_date", &self.last_action_date)?,
            last_action_text: self.last_action_text.trim().to_string(),
        })
    }
}

/// Header names for each record field, plus text-format options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schema {
    pub delimiter: char,
    pub committee_delimiter: char,
    pub min_congress: u32,
    pub max_congress: u32,
    pub columns: Columns,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Columns {
    pub bill_id: String,
    pub chamber: String,
    pub bill_type: String,
    pub congress: String,
    pub intro_date: String,
    pub sponsor_party: String,
    pub sponsor_state: String,
    pub sponsor_district: String,
    pub cosponsor_count: String,
    /// Optional in the input; absent means no committees.
    pub committees: String,
    pub last_action_date: String,
    /// Optional in the input.
    pub last_action_text: String,
}

impl Default for Columns {
    fn default() -> Self {
        Self {
            bill_id: "bill_id".into(),
            chamber: "chamber".into(),
            bill_type: "bill_type".into(),
            congress: "congress".into(),
            intro_date: "intro_date".into(),
            sponsor_party: "sponsor_party".into(),
            sponsor_state: "sponsor_state".into(),
            sponsor_district: "sponsor_district".into(),
            cosponsor_count: "cosponsor_count".into(),
            committees: "committees".into(),
            last_action_date: "last_action_date".into(),
            last_action_text: "last_action_text".into(),
        }
    }
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            delimiter: ',',
            committee_delimiter: ';',
            min_congress: 93,
            max_congress: COVID_CONGRESS,
            columns: Columns::default(),
        }
    }
}

impl Schema {
    pub fn congress_range(&self) -> (u32, u32) {
        (self.min_congress, self.max_congress)
    }

    fn delimiter_byte(&self) -> Result<u8> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| Error::argument(format!("delimiter `{}` must be a single ASCII character", self.delimiter)))
    }
}

/// Provenance and counts of a corpus, written next to it as JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub sources: Vec<String>,
    pub rows: usize,
    pub pre_covid: usize,
    pub covid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<BillRecord>,
    eras: Vec<Era>,
    sources: Vec<String>,
}

impl Corpus {
    /// Builds a corpus, labeling eras. Fails on duplicate `bill_id`s.
    pub fn new(records: Vec<BillRecord>, sources: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.bill_id.as_str()) {
                return Err(Error::Corpus(format!("duplicate bill_id `{}`", r.bill_id)));
            }
        }
        let eras = records.iter().map(BillRecord::era).collect();
        Ok(Self { records, eras, sources })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[BillRecord] {
        &self.records
    }

    pub fn eras(&self) -> &[Era] {
        &self.eras
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn era_count(&self, era: Era) -> usize {
        self.eras.iter().filter(|&&e| e == era).count()
    }

    pub fn parties(&self) -> Vec<Party> {
        self.records.iter().map(|r| r.sponsor_party).collect()
    }

    /// The records at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize], source: &str) -> Self {
        Self {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            eras: indices.iter().map(|&i| self.eras[i]).collect(),
            sources: self.sources.iter().cloned().chain([source.to_string()]).collect(),
        }
    }

    pub fn manifest(&self) -> CorpusManifest {
        CorpusManifest {
            sources: self.sources.clone(),
            rows: self.len(),
            pre_covid: self.era_count(Era::PreCovid),
            covid: self.era_count(Era::Covid),
        }
    }
}

struct ColumnIndex {
    required: [usize; 10],
    committees: Option<usize>,
    last_action_text: Option<usize>,
}

fn locate_columns(headers: &csv::StringRecord, columns: &Columns) -> Result<ColumnIndex> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let need = |name: &String| find(name).ok_or_else(|| Error::MissingColumn(name.clone()));
    Ok(ColumnIndex {
        required: [
            need(&columns.bill_id)?,
            need(&columns.chamber)?,
            need(&columns.bill_type)?,
            need(&columns.congress)?,
            need(&columns.intro_date)?,
            need(&columns.sponsor_party)?,
            need(&columns.sponsor_state)?,
            need(&columns.sponsor_district)?,
            need(&columns.cosponsor_count)?,
            need(&columns.last_action_date)?,
        ],
        committees: find(&columns.committees),
        last_action_text: find(&columns.last_action_text),
    })
}

/// Parses delimited text. All rows must be valid: every failing row is
/// reported and no corpus is returned.
pub fn read_corpus<R: std::io::Read>(reader: R, schema: &Schema, source: &str) -> Result<Corpus> {
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter_byte()?)
        .flexible(true)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| Error::Decode { what: source.into(), offset: None, message: e.to_string() })?
        .clone();
    let idx = locate_columns(&headers, &schema.columns)?;

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (row, result) in csv.records().enumerate() {
        let line = row as u64 + 2;
        let rec = match result {
            Ok(r) => r,
            Err(e) => {
                errors.push(RowError { line, bill_id: None, message: e.to_string() });
                continue;
            }
        };
        let get = |i: usize| rec.get(i).unwrap_or("").to_string();
        let [id, chamber, bill_type, congress, intro, party, state, district, cosponsors, last] = idx.required;
        let raw = RawFields {
            bill_id: get(id),
            chamber: get(chamber),
            bill_type: get(bill_type),
            congress: get(congress),
            intro_date: get(intro),
            sponsor_party: get(party),
            sponsor_state: get(state),
            sponsor_district: get(district),
            cosponsor_count: get(cosponsors),
            committees: idx
                .committees
                .map(|i| get(i).split(schema.committee_delimiter).map(str::to_string).collect())
                .unwrap_or_default(),
            last_action_date: get(last),
            last_action_text: idx.last_action_text.map(get).unwrap_or_default(),
        };
        let bill_id = Some(raw.bill_id.trim().to_string()).filter(|s| !s.is_empty());
        match raw.parse().and_then(|r| r.validate(schema.congress_range()).map(|_| r)) {
            Ok(r) => records.push(r),
            Err(message) => errors.push(RowError { line, bill_id, message }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Rows(errors));
    }
    Corpus::new(records, vec![source.to_string()])
}

pub fn load_corpus(path: &Path, schema: &Schema) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(std::io::BufReader::new(file), schema, &path.display().to_string())
}

/// Writes the corpus in the delimited format `schema` reads.
pub fn write_corpus<W: std::io::Write>(corpus: &Corpus, writer: W, schema: &Schema) -> Result<()> {
    let mut csv = csv::WriterBuilder::new()
        .delimiter(schema.delimiter_byte()?)
        .from_writer(writer);
    let c = &schema.columns;
    let to_err = |e: csv::Error| Error::Decode { what: "corpus output".into(), offset: None, message: e.to_string() };
    csv.write_record([
        &c.bill_id,
        &c.chamber,
        &c.bill_type,
        &c.congress,
        &c.intro_date,
        &c.sponsor_party,
        &c.sponsor_state,
        &c.sponsor_district,
        &c.cosponsor_count,
        &c.committees,
        &c.last_action_date,
        &c.last_action_text,
    ])
    .map_err(to_err)?;
    let sep = schema.committee_delimiter.to_string();
    for r in corpus.records() {
        csv.write_record([
            r.bill_id.clone(),
            r.chamber.as_str().into(),
            r.bill_type.as_str().into(),
            r.congress.to_string(),
            r.intro_date.to_string(),
            r.sponsor_party.as_str().into(),
            r.sponsor_state.clone(),
            r.sponsor_district.to_string(),
            r.cosponsor_count.to_string(),
            r.committees.iter().cloned().collect::<Vec<_>>().join(&sep),
            r.last_action_date.to_string(),
            r.last_action_text.clone(),
        ])
        .map_err(to_err)?;
    }
    csv.flush().map_err(|e| Error::io("corpus output", e))
}

// ---------------------------------------------------------------------------
// Catalog client

/// Where catalog pages come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogSource {
    /// A directory of `page_NNN.json` files, read in name order.
    Fixtures(PathBuf),
    /// An HTTP endpoint answering `GET {base}?page=N&from=A&to=B` with a
    /// JSON array of records; an empty array ends the listing.
    Endpoint {
        base_url: String,
        max_attempts: u32,
        timeout_secs: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogQuery {
    pub min_congress: u32,
    pub max_congress: u32,
    /// Case-insensitive match against bill id, committees or last action.
    pub keyword: Option<String>,
}

impl Default for CatalogQuery {
    fn default() -> Self {
        Self { min_congress: 93, max_congress: COVID_CONGRESS, keyword: None }
    }
}

impl CatalogQuery {
    fn accepts(&self, r: &BillRecord) -> bool {
        if r.congress < self.min_congress || r.congress > self.max_congress {
            return false;
        }
        match &self.keyword {
            None => true,
            Some(k) => {
                let k = k.to_lowercase();
                r.bill_id.to_lowercase().contains(&k)
                    || r.last_action_text.to_lowercase().contains(&k)
                    || r.committees.iter().any(|c| c.contains(&k))
            }
        }
    }
}

/// Numbers and strings are both accepted for scalar fields.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Scalar {
    fn text(self) -> String {
        match self {
            Scalar::Int(i) => i.to_string(),
            Scalar::Float(f) => f.to_string(),
            Scalar::Text(s) => s,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CommitteeList {
    List(Vec<String>),
    Joined(String),
}

#[derive(Debug, Deserialize)]
struct PageRecord {
    bill_id: Scalar,
    chamber: String,
    bill_type: String,
    congress: Scalar,
    intro_date: String,
    sponsor_party: Option<String>,
    sponsor_state: String,
    sponsor_district: Option<Scalar>,
    cosponsor_count: Scalar,
    committees: Option<CommitteeList>,
    last_action_date: String,
    last_action_text: Option<String>,
}

impl PageRecord {
    fn into_raw(self) -> RawFields {
        RawFields {
            bill_id: self.bill_id.text(),
            chamber: self.chamber,
            bill_type: self.bill_type,
            congress: self.congress.text(),
            intro_date: self.intro_date,
            sponsor_party: self.sponsor_party.unwrap_or_default(),
            sponsor_state: self.sponsor_state,
            sponsor_district: self.sponsor_district.map(Scalar::text).unwrap_or_default(),
            cosponsor_count: self.cosponsor_count.text(),
            committees: match self.committees {
                None => Vec::new(),
                Some(CommitteeList::List(v)) => v,
                Some(CommitteeList::Joined(s)) => s.split(';').map(str::to_string).collect(),
            },
            last_action_date: self.last_action_date,
            last_action_text: self.last_action_text.unwrap_or_default(),
        }
    }
}

fn decode_page(page: usize, bytes: &[u8]) -> Result<Vec<BillRecord>> {
    let rows: Vec<PageRecord> = serde_json::from_slice(bytes)
        .map_err(|e| Error::Page { page, message: e.to_string() })?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.into_raw()
                .parse()
                .map_err(|m| Error::Page { page, message: format!("record {i}: {m}") })
        })
        .collect()
}

fn fixture_pages(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut pages: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("page_"))
        })
        .collect();
    pages.sort();
    Ok(pages)
}

fn get_page(agent: &ureq::Agent, url: &str, max_attempts: u32) -> Result<Vec<u8>> {
    let mut last = String::new();
    for attempt in 1..=max_attempts.max(1) {
        match agent.get(url).call() {
            Ok(mut resp) => match resp.body_mut().read_to_vec() {
                Ok(body) => return Ok(body),
                Err(e) => last = e.to_string(),
            },
            Err(e) => last = e.to_string(),
        }
        if attempt < max_attempts {
            std::thread::sleep(Duration::from_millis(100 << attempt.min(6)));
        }
    }
    Err(Error::Fetch { attempts: max_attempts.max(1), message: last })
}

/// Retrieves the catalog listing and keeps records matching `query`.
pub fn fetch_bills(source: &CatalogSource, query: &CatalogQuery) -> Result<Corpus> {
    let mut records = Vec::new();
    let label = match source {
        CatalogSource::Fixtures(dir) => {
            for (page, path) in fixture_pages(dir)?.iter().enumerate() {
                let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                records.extend(decode_page(page, &bytes)?);
            }
            format!("fixtures:{}", dir.display())
        }
        CatalogSource::Endpoint { base_url, max_attempts, timeout_secs } => {
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(*timeout_secs)))
                .build()
                .into();
            for page in 0.. {
                let url = format!(
                    "{base_url}?page={page}&from={}&to={}",
                    query.min_congress, query.max_congress
                );
                let batch = decode_page(page, &get_page(&agent, &url, *max_attempts)?)?;
                if batch.is_empty() {
                    break;
                }
                records.extend(batch);
            }
            format!("endpoint:{base_url}")
        }
    };
    records.retain(|r| query.accepts(r));
    for r in &records {
        r.validate((query.min_congress, query.max_congress))
            .map_err(|m| Error::Corpus(format!("{}: {m}", r.bill_id)))?;
    }
    Corpus::new(records, vec![label])
}

// ---------------------------------------------------------------------------
// Splits

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Training is every pre-COVID record, test every COVID record.
    ByEra,
    /// Seeded shuffle within each era, `round(fraction * count)` of each
    /// era to training.
    Random,
}

/// Row indices of a split, each list in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(corpus: &Corpus, mode: SplitMode, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::argument(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    if corpus.is_empty() {
        return Err(Error::argument("cannot split an empty corpus"));
    }
    let eras = corpus.eras();
    let (mut train, mut test): (Vec<usize>, Vec<usize>) = match mode {
        SplitMode::ByEra => (0..corpus.len()).partition(|&i| eras[i] == Era::PreCovid),
        SplitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for era in [Era::PreCovid, Era::Covid] {
                let mut members: Vec<usize> = (0..corpus.len()).filter(|&i| eras[i] == era).collect();
                members.shuffle(&mut rng);
                let take = (train_fraction * members.len() as f64).round() as usize;
                train.extend_from_slice(&members[..take]);
                test.extend_from_slice(&members[take..]);
            }
            (train, test)
        }
    };
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

pub fn split_corpus(corpus: &Corpus, mode: SplitMode, train_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    let s = split_indices(corpus, mode, train_fraction, seed)?;
    Ok((corpus.subset(&s.train, "split:train"), corpus.subset(&s.test, "split:test")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "bill_id,chamber,bill_type,congress,intro_date,sponsor_party,sponsor_state,sponsor_district,cosponsor_count,committees,last_action_date,last_action_text\n";

    fn read(body: &str) -> Result<Corpus> {
        read_corpus(format!("{HEADER}{body}").as_bytes(), &Schema::default(), "test")
    }

    #[test]
    fn lenient_enum_spellings() {
        assert_eq!(BillType::parse("H.J.Res."), Some(BillType::JointResolution));
        assert_eq!(BillType::parse("Concurrent Resolution"), Some(BillType::ConcurrentResolution));
        assert_eq!(Chamber::parse(" senate "), Some(Chamber::Senate));
        assert_eq!(Party::parse("Libertarian"), Party::Other);
        assert_eq!(Party::parse("D"), Party::Democrat);
    }

    #[test]
    fn senate_with_district_is_rejected() {
        let err = read("s1,Senate,bill,110,2007-02-01,R,TX,3,0,,2007-03-01,\n").unwrap_err();
        match err {
            Error::Rows(rows) => {
                assert_eq!(rows[0].line, 2);
                assert!(rows[0].message.contains("district"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn covid_congress_label() {
        let c = read("hr1,House,bill,116,2020-03-12,D,NY,10,4,Energy;  Ways and  Means ,2020-04-01,Referred\n")
            .unwrap();
        assert_eq!(c.eras(), &[Era::Covid]);
        let committees: Vec<&str> = c.records()[0].committees.iter().map(String::as_str).collect();
        assert_eq!(committees, ["energy", "ways and means"]);
    }

    #[test]
    fn header_only_is_empty_corpus() {
        assert!(read("").unwrap().is_empty());
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_corpus("bill_id,chamber\n".as_bytes(), &Schema::default(), "t").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "bill_type"));
    }

    #[test]
    fn every_bad_row_is_reported() {
        let err = read(concat!(
            "a,House,bill,100,1987-01-01,D,CA,1,0,,1987-01-02,\n",
            "b,House,bill,1x0,1987-01-01,D,CA,1,0,,1987-01-02,\n",
            "c,House,bill,100,1987-01-05,D,CA,1,0,,1987-01-02,\n",
            "d,House,bill,100,1987-01-01,D,California,1,0,,1987-01-02,\n",
        ))
        .unwrap_err();
        let Error::Rows(rows) = err else { panic!() };
        let lines: Vec<u64> = rows.iter().map(|r| r.line).collect();
        assert_eq!(lines, [3, 4, 5]);
    }

    #[test]
    fn duplicate_ids_are_a_corpus_error() {
        let row = "a,House,bill,100,1987-01-01,D,CA,1,0,,1987-01-02,\n";
        assert!(matches!(read(&row.repeat(2)), Err(Error::Corpus(_))));
    }

    #[test]
    fn stratified_split_shares() {
        let mut body = String::new();
        for i in 0..45 {
            let congress = if i < 30 { 110 } else { 116 };
            body.push_str(&format!("b{i},House,bill,{congress},2008-01-01,D,CA,1,0,,2008-01-02,\n"));
        }
        let c = read(&body).unwrap();
        let s = split_indices(&c, SplitMode::Random, 0.66, 7).unwrap();
        assert_eq!(s.train.len() + s.test.len(), 45);
        let pre = s.train.iter().filter(|&&i| c.eras()[i] == Era::PreCovid).count();
        assert_eq!(pre, 20);
        assert!(split_indices(&c, SplitMode::Random, 1.0, 7).is_err());
    }
}
