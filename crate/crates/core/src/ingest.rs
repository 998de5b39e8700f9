//! Tweet corpus and survey-panel ingestion.
//!
//! Tweets arrive as line-delimited JSON and are cleaned into premises:
//! URLs removed, lowercased, stripped of characters outside letters, digits,
//! whitespace and a small punctuation set, then kept only when they have
//! enough whitespace tokens and fall inside the configured year range.
//! Panel responses arrive as CSV with eleven Likert items per respondent.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of Likert items per panel response.
pub const PANEL_ITEMS: usize = 11;

/// Keywords used to pre-select tweets about gender roles.
pub const GENDER_ROLE_KEYWORDS: [&str; 6] = ["vrouw", "man", "moeder", "vader", "jongen", "meisje"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate tweet id {id:?} (first seen on line {first_line})")]
    DuplicateId { id: String, line: usize, first_line: usize },
    #[error("line {line}: unparseable timestamp {value:?}")]
    BadTimestamp { line: usize, value: String },
    #[error("keyword list is empty")]
    EmptyKeywords,
    #[error("panel file is missing column {0:?}")]
    MissingColumn(String),
    #[error("panel file has unexpected column {0:?}")]
    UnexpectedColumn(String),
    #[error("panel line {line}: {message}")]
    PanelRow { line: u64, message: String },
    #[error("panel line {line}: item_{item} = {value} is outside the Likert range 1..=5")]
    LikertOutOfRange { line: u64, item: usize, value: i64 },
    #[error("panel csv: {0}")]
    Csv(#[from] csv::Error),
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A tweet as collected, before cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub account: String,
    pub party: String,
    pub timestamp: NaiveDateTime,
    pub text: String,
}

#[derive(Deserialize)]
struct TweetRecord {
    id: String,
    account: String,
    party: String,
    timestamp: String,
    text: String,
}

/// Parses the timestamp shapes seen in tweet exports: RFC 3339, ISO without
/// offset, bare dates and the classic API `created_at` format.
pub fn parse_timestamp(value: &str) -> Option<NaiveDateTime> {
    let value = value.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
        return Some(dt.naive_utc());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(value, fmt) {
            return Some(dt);
        }
    }
    if let Ok(dt) = DateTime::parse_from_str(value, "%a %b %d %H:%M:%S %z %Y") {
        return Some(dt.naive_utc());
    }
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Reads line-delimited tweet records. Blank lines are skipped.
pub fn read_tweets<R: BufRead>(reader: R) -> Result<Vec<RawTweet>, IngestError> {
    let mut tweets = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| IngestError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TweetRecord = serde_json::from_str(&line).map_err(|e| IngestError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let timestamp = parse_timestamp(&record.timestamp).ok_or_else(|| IngestError::BadTimestamp {
            line: line_no,
            value: record.timestamp.clone(),
        })?;
        if let Some(&first_line) = seen.get(&record.id) {
            return Err(IngestError::DuplicateId {
                id: record.id,
                line: line_no,
                first_line,
            });
        }
        seen.insert(record.id.clone(), line_no);
        tweets.push(RawTweet {
            id: record.id,
            account: record.account,
            party: record.party,
            timestamp,
            text: record.text,
        });
    }
    Ok(tweets)
}

pub fn load_tweets(path: impl AsRef<Path>) -> Result<Vec<RawTweet>, IngestError> {
    read_tweets(BufReader::new(open(path.as_ref())?))
}

/// A cleaned premise ready for scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanTweet {
    pub id: String,
    pub party: String,
    pub year: i32,
    pub text: String,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningRules {
    pub year_min: i32,
    pub year_max: i32,
    pub min_tokens: usize,
    /// Punctuation kept besides letters, digits and whitespace.
    pub keep_punctuation: Vec<char>,
}

impl Default for CleaningRules {
    fn default() -> Self {
        Self {
            year_min: 2017,
            year_max: 2021,
            min_tokens: 5,
            keep_punctuation: vec!['.', ',', '!', '?', '\'', '-'],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    TooShort,
    OutOfRange,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub kept: Vec<CleanTweet>,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl CleanReport {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }
}

fn url_pattern() -> &'static Regex {
    static URL: OnceLock<Regex> = OnceLock::new();
    URL.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").expect("valid url regex"))
}

/// True if `text` still holds something the URL rule would remove.
pub fn contains_url(text: &str) -> bool {
    url_pattern().is_match(text)
}

fn clean_once(text: &str, keep: &[char]) -> String {
    let without_urls = url_pattern().replace_all(text, " ");
    let lowered = without_urls.to_lowercase();
    let stripped: String = lowered
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace() || keep.contains(c))
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Applies the cleaning rules until the text stops changing.
///
/// A single pass is not always a fixpoint: stripping `@` from `ww@w.x` yields
/// a fresh `www.` span, and some uppercase letters lowercase into sequences
/// with combining marks.
pub fn clean_text(text: &str, rules: &CleaningRules) -> String {
    let mut current = clean_once(text, &rules.keep_punctuation);
    for _ in 0..8 {
        let next = clean_once(&current, &rules.keep_punctuation);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Cleans and filters a corpus, counting every dropped tweet by reason.
pub fn clean_corpus(raw: &[RawTweet], rules: &CleaningRules) -> CleanReport {
    let mut report = CleanReport::default();
    for tweet in raw {
        let year = tweet.timestamp.year();
        if year < rules.year_min || year > rules.year_max {
            *report.dropped.entry(DropReason::OutOfRange).or_default() += 1;
            continue;
        }
        let text = clean_text(&tweet.text, rules);
        let tokens = token_count(&text);
        if tokens < rules.min_tokens {
            *report.dropped.entry(DropReason::TooShort).or_default() += 1;
            continue;
        }
        report.kept.push(CleanTweet {
            id: tweet.id.clone(),
            party: tweet.party.clone(),
            year,
            text,
            token_count: tokens,
        });
    }
    report
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    #[default]
    Substring,
    WholeWord,
}

fn matches_keyword(text: &str, keywords: &[String], mode: MatchMode) -> bool {
    match mode {
        MatchMode::Substring => keywords.iter().any(|k| text.contains(k.as_str())),
        MatchMode::WholeWord => text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .any(|w| keywords.iter().any(|k| k == w)),
    }
}

/// Keeps the tweets mentioning at least one keyword, in input order.
pub fn filter_by_keywords<S: AsRef<str>>(
    tweets: &[CleanTweet],
    keywords: &[S],
    mode: MatchMode,
) -> Result<Vec<CleanTweet>, IngestError> {
    let keywords: Vec<String> = keywords
        .iter()
        .map(|k| k.as_ref().trim().to_lowercase())
        .filter(|k| !k.is_empty())
        .collect();
    if keywords.is_empty() {
        return Err(IngestError::EmptyKeywords);
    }
    Ok(tweets
        .iter()
        .filter(|t| matches_keyword(&t.text, &keywords, mode))
        .cloned()
        .collect())
}

/// One panel member's answers for one wave.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelResponse {
    pub respondent_id: String,
    pub year: i32,
    pub party_voted: String,
    pub item_responses: [u8; PANEL_ITEMS],
}

/// Reads a panel CSV with header `respondent_id,year,party,item_1..item_11`.
/// Columns may appear in any order; extra `item_N` columns are rejected.
pub fn read_panel<R: Read>(reader: R) -> Result<Vec<PanelResponse>, IngestError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let respondent_col = column("respondent_id")?;
    let year_col = column("year")?;
    let party_col = column("party")?;
    let item_cols = (1..=PANEL_ITEMS)
        .map(|i| column(&format!("item_{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(extra) = headers.iter().find(|h| {
        h.strip_prefix("item_")
            .and_then(|n| n.parse::<usize>().ok())
            .is_some_and(|n| n == 0 || n > PANEL_ITEMS)
    }) {
        return Err(IngestError::UnexpectedColumn(extra.to_string()));
    }

    let mut responses = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |col: usize| record.get(col).unwrap_or("");
        let year = field(year_col).parse::<i32>().map_err(|_| IngestError::PanelRow {
            line,
            message: format!("year {:?} is not an integer", field(year_col)),
        })?;
        let mut items = [0u8; PANEL_ITEMS];
        for (i, &col) in item_cols.iter().enumerate() {
            let raw = field(col);
            let value = raw.parse::<i64>().map_err(|_| IngestError::PanelRow {
                line,
                message: format!("item_{} = {raw:?} is not an integer", i + 1),
            })?;
            if !(1..=5).contains(&value) {
                return Err(IngestError::LikertOutOfRange {
                    line,
                    item: i + 1,
                    value,
                });
            }
            items[i] = value as u8;
        }
        responses.push(PanelResponse {
            respondent_id: field(respondent_col).to_string(),
            year,
            party_voted: field(party_col).to_string(),
            item_responses: items,
        });
    }
    Ok(responses)
}

pub fn load_panel(path: impl AsRef<Path>) -> Result<Vec<PanelResponse>, IngestError> {
    read_panel(open(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: &str, date: &str, text: &str) -> RawTweet {
        RawTweet {
            id: id.into(),
            account: "acc".into(),
            party: "CDA".into(),
            timestamp: parse_timestamp(date).unwrap(),
            text: text.into(),
        }
    }

    #[test]
    fn reads_one_record() {
        let line = r#"{"id":"1","account":"a","party":"SP","timestamp":"2019-03-01T10:00:00Z","text":"hallo"}"#;
        let tweets = read_tweets(line.as_bytes()).unwrap();
        assert_eq!(tweets.len(), 1);
        assert_eq!(tweets[0].party, "SP");
        assert_eq!(tweets[0].timestamp.year(), 2019);
    }

    #[test]
    fn missing_text_reports_line() {
        let input = concat!(
            r#"{"id":"1","account":"a","party":"SP","timestamp":"2019-03-01","text":"x"}"#,
            "\n",
            r#"{"id":"2","account":"a","party":"SP","timestamp":"2019-03-01"}"#
        );
        match read_tweets(input.as_bytes()) {
            Err(IngestError::Malformed { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("text"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        let rec = r#"{"id":"7","account":"a","party":"SP","timestamp":"2019-03-01","text":"x"}"#;
        let input = format!("{rec}\n{rec}\n");
        assert!(matches!(
            read_tweets(input.as_bytes()),
            Err(IngestError::DuplicateId {
                line: 2,
                first_line: 1,
                ..
            })
        ));
    }

    #[test]
    fn twitter_created_at_format() {
        let ts = parse_timestamp("Wed Oct 10 20:19:24 +0000 2018").unwrap();
        assert_eq!(ts.year(), 2018);
    }

    #[test]
    fn short_tweet_after_url_removal_is_dropped() {
        let rules = CleaningRules::default();
        let text = clean_text("Check https://t.co/abc Dit Is GEWELDIG!!", &rules);
        assert_eq!(text, "check dit is geweldig!!");
        assert_eq!(token_count(&text), 4);
        let report = clean_corpus(
            &[raw("1", "2019-05-05", "Check https://t.co/abc Dit Is GEWELDIG!!")],
            &rules,
        );
        assert!(report.kept.is_empty());
        assert_eq!(report.dropped[&DropReason::TooShort], 1);
    }

    #[test]
    fn plain_tweet_kept() {
        let report = clean_corpus(
            &[raw("1", "2018-02-02", "De vrouw en de man werken beiden fulltime")],
            &CleaningRules::default(),
        );
        assert_eq!(report.kept.len(), 1);
        assert_eq!(report.kept[0].text, "de vrouw en de man werken beiden fulltime");
        assert_eq!(report.kept[0].token_count, 8);
        assert_eq!(report.kept[0].year, 2018);
    }

    #[test]
    fn year_bounds_inclusive() {
        let text = "een twee drie vier vijf zes";
        let report = clean_corpus(
            &[
                raw("a", "2016-12-31T23:59:59", text),
                raw("b", "2017-01-01", text),
                raw("c", "2021-12-31T23:59:59", text),
                raw("d", "2022-01-01", text),
            ],
            &CleaningRules::default(),
        );
        let ids: Vec<_> = report.kept.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["b", "c"]);
        assert_eq!(report.dropped[&DropReason::OutOfRange], 2);
    }

    #[test]
    fn strips_emoji_keeps_diacritics() {
        let cleaned = clean_text("Één café 🎉 #feest @jan: geweldig!", &CleaningRules::default());
        assert_eq!(cleaned, "één café feest jan geweldig!");
    }

    #[test]
    fn url_recreated_by_stripping_is_removed() {
        let cleaned = clean_text("zie ww@w.voorbeeld.nl nu", &CleaningRules::default());
        assert!(!contains_url(&cleaned));
        assert_eq!(cleaned, "zie nu");
    }

    #[test]
    fn keyword_modes() {
        let t = |id: &str, text: &str| CleanTweet {
            id: id.into(),
            party: "SP".into(),
            year: 2019,
            text: text.into(),
            token_count: token_count(text),
        };
        let tweets = vec![
            t("1", "de moeder zorgt voor de kinderen"),
            t("2", "wij verlagen de belastingen volgend jaar"),
            t("3", "mannen moeten meer huishoudelijk werk doen"),
        ];
        let sub = filter_by_keywords(&tweets, &GENDER_ROLE_KEYWORDS, MatchMode::Substring).unwrap();
        let ids: Vec<_> = sub.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["1", "3"]);
        let whole = filter_by_keywords(&tweets, &GENDER_ROLE_KEYWORDS, MatchMode::WholeWord).unwrap();
        let ids: Vec<_> = whole.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["1"]);
        let none: [&str; 0] = [];
        assert!(matches!(
            filter_by_keywords(&tweets, &none, MatchMode::Substring),
            Err(IngestError::EmptyKeywords)
        ));
    }

    fn header() -> String {
        let items: Vec<String> = (1..=11).map(|i| format!("item_{i}")).collect();
        format!("respondent_id,year,party,{}", items.join(","))
    }

    #[test]
    fn panel_row_of_threes() {
        let csv = format!("{}\nr1,2018,SGP,{}\n", header(), ["3"; 11].join(","));
        let rows = read_panel(csv.as_bytes()).unwrap();
        assert_eq!(rows[0].item_responses, [3u8; 11]);
        assert_eq!(rows[0].party_voted, "SGP");
    }

    #[test]
    fn panel_out_of_range_reports_line() {
        let mut vals = ["3"; 11];
        vals[4] = "6";
        let csv = format!(
            "{}\nr1,2018,SGP,{}\nr2,2018,SGP,{}\n",
            header(),
            ["3"; 11].join(","),
            vals.join(",")
        );
        assert!(matches!(
            read_panel(csv.as_bytes()),
            Err(IngestError::LikertOutOfRange {
                line: 3,
                item: 5,
                value: 6
            })
        ));
    }

    #[test]
    fn panel_with_ten_items_is_schema_error() {
        let items: Vec<String> = (1..=10).map(|i| format!("item_{i}")).collect();
        let csv = format!(
            "respondent_id,year,party,{}\nr1,2018,SGP,{}\n",
            items.join(","),
            ["3"; 10].join(",")
        );
        assert!(matches!(
            read_panel(csv.as_bytes()),
            Err(IngestError::MissingColumn(c)) if c == "item_11"
        ));
    }
}
