//! Parser for EDGAR's tag-delimited dissemination envelope.
//!
//! A submission is a header block followed by repeated document envelopes:
//!
//! ```text
//! <SUBMISSION>
//! <ACCESSION-NUMBER>0000320193-20-000010
//! <TYPE>10-K
//! <ACCEPTANCE-DATETIME>20200106163012
//! <FILER>
//! <COMPANY-DATA>
//! <CONFORMED-NAME>APPLE INC
//! <CIK>0000320193
//! <ASSIGNED-SIC>3571
//! </COMPANY-DATA>
//! </FILER>
//! <DOCUMENT>
//! <TYPE>10-K
//! <SEQUENCE>1
//! <FILENAME>a10-k.htm
//! <TEXT>
//! ...
//! </TEXT>
//! </DOCUMENT>
//! </SUBMISSION>
//! ```
//!
//! The older `<SEC-HEADER>` spelling (`ACCESSION NUMBER:` style key/value
//! lines) is accepted as well.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::NaiveDateTime;
use regex::bytes::Regex;
use regex::Regex as StrRegex;
use serde::{Deserialize, Serialize};

use super::{classify_content, ContentKind, EdgarError};

/// Layout of acceptance timestamps as disseminated (second precision, no zone).
pub const ACCEPTANCE_FORMAT: &str = "%Y%m%d%H%M%S";

/// `NNNNNNNNNN-NN-NNNNNN`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AccessionNumber(String);

impl AccessionNumber {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn accession_pattern() -> &'static StrRegex {
    static RE: OnceLock<StrRegex> = OnceLock::new();
    RE.get_or_init(|| StrRegex::new(r"^\d{10}-\d{2}-\d{6}$").unwrap())
}

impl FromStr for AccessionNumber {
    type Err = EdgarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if accession_pattern().is_match(s) {
            return Ok(Self(s.to_string()));
        }
        // Dashless 18-digit spelling used in some file names.
        if s.len() == 18 && s.bytes().all(|b| b.is_ascii_digit()) {
            return Ok(Self(format!("{}-{}-{}", &s[..10], &s[10..12], &s[12..])));
        }
        Err(EdgarError::Unparseable(format!("malformed accession number {s:?}")))
    }
}

impl TryFrom<String> for AccessionNumber {
    type Error = EdgarError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<AccessionNumber> for String {
    fn from(value: AccessionNumber) -> Self {
        value.0
    }
}

impl fmt::Display for AccessionNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub sequence: u32,
    pub doc_type: String,
    pub filename: String,
    pub raw_bytes: Vec<u8>,
    pub content_kind: ContentKind,
}

impl DocumentRecord {
    /// Body decoded for extraction. Filings predating UTF-8 are mostly
    /// Latin-1, so bytes that are not valid UTF-8 are mapped one-to-one.
    pub fn text(&self) -> String {
        match std::str::from_utf8(&self.raw_bytes) {
            Ok(s) => s.to_string(),
            Err(_) => self.raw_bytes.iter().map(|b| *b as char).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilingSubmission {
    pub accession_number: AccessionNumber,
    pub cik: u64,
    pub company_name: String,
    pub form_type: String,
    pub acceptance_timestamp: NaiveDateTime,
    pub sic_code: Option<u16>,
    pub documents: Vec<DocumentRecord>,
}

fn document_block() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s-u)<DOCUMENT>(.*?)(?:</DOCUMENT>|\z)").unwrap())
}

fn text_block() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s-u)<TEXT>\r?\n?(.*?)(?:\r?\n)?(?:</TEXT>|\z)").unwrap())
}

fn sic_in_brackets() -> &'static StrRegex {
    static RE: OnceLock<StrRegex> = OnceLock::new();
    RE.get_or_init(|| StrRegex::new(r"\[(\d{4})\]").unwrap())
}

/// Header values keyed by tag name, first occurrence wins.
#[derive(Default)]
struct Header {
    fields: Vec<(String, String)>,
}

impl Header {
    fn parse(block: &str) -> Self {
        let mut fields = Vec::new();
        for line in block.lines() {
            let line = line.trim_end();
            if let Some(rest) = line.strip_prefix('<') {
                if rest.starts_with('/') {
                    continue;
                }
                if let Some((tag, value)) = rest.split_once('>') {
                    let value = value.trim();
                    if !value.is_empty() {
                        fields.push((tag.trim().to_ascii_uppercase(), value.to_string()));
                    }
                }
            } else if let Some((key, value)) = line.split_once(':') {
                let value = value.trim();
                if !value.is_empty() {
                    let tag = key.trim().to_ascii_uppercase().replace(' ', "-");
                    fields.push((tag, value.to_string()));
                }
            }
        }
        Self { fields }
    }

    fn get(&self, names: &[&str]) -> Option<&str> {
        self.fields
            .iter()
            .find(|(tag, _)| names.contains(&tag.as_str()))
            .map(|(_, v)| v.as_str())
    }
}

/// Parses one dissemination-format submission.
///
/// Missing accession number, missing acceptance timestamp, or a submission
/// without any document envelope is reported as [`EdgarError::Unparseable`]
/// so callers can quarantine the input.
pub fn parse_dissemination(raw: &[u8]) -> Result<FilingSubmission, EdgarError> {
    let header_end = find(raw, b"<DOCUMENT>").unwrap_or(raw.len());
    let header = Header::parse(&String::from_utf8_lossy(&raw[..header_end]));

    let accession_number: AccessionNumber = header
        .get(&["ACCESSION-NUMBER"])
        .ok_or_else(|| EdgarError::Unparseable("missing accession number".into()))?
        .parse()?;
    let acceptance = header
        .get(&["ACCEPTANCE-DATETIME"])
        .ok_or_else(|| {
            EdgarError::Unparseable(format!("{accession_number}: missing acceptance timestamp"))
        })?;
    let acceptance_timestamp = NaiveDateTime::parse_from_str(acceptance, ACCEPTANCE_FORMAT)
        .map_err(|e| {
            EdgarError::Unparseable(format!(
                "{accession_number}: bad acceptance timestamp {acceptance:?}: {e}"
            ))
        })?;
    let form_type = header
        .get(&["TYPE", "CONFORMED-SUBMISSION-TYPE"])
        .unwrap_or_default()
        .to_string();
    let company_name = header
        .get(&["CONFORMED-NAME", "COMPANY-CONFORMED-NAME"])
        .unwrap_or_default()
        .to_string();
    let cik = match header.get(&["CIK", "CENTRAL-INDEX-KEY"]) {
        Some(v) => v.parse().map_err(|_| {
            EdgarError::Unparseable(format!("{accession_number}: bad CIK {v:?}"))
        })?,
        None => 0,
    };
    let sic_code = header
        .get(&["ASSIGNED-SIC", "STANDARD-INDUSTRIAL-CLASSIFICATION"])
        .and_then(parse_sic);

    let mut documents = Vec::new();
    let mut seen = BTreeSet::new();
    for (ordinal, block) in document_block()
        .captures_iter(&raw[header_end..])
        .map(|c| c.get(1).unwrap().as_bytes())
        .enumerate()
    {
        let doc = parse_document(block, ordinal as u32 + 1)
            .map_err(|e| EdgarError::Unparseable(format!("{accession_number}: {e}")))?;
        if !seen.insert(doc.sequence) {
            return Err(EdgarError::Unparseable(format!(
                "{accession_number}: duplicate document sequence {}",
                doc.sequence
            )));
        }
        documents.push(doc);
    }
    if documents.is_empty() {
        return Err(EdgarError::Unparseable(format!(
            "{accession_number}: no document envelopes"
        )));
    }

    Ok(FilingSubmission {
        accession_number,
        cik,
        company_name,
        form_type,
        acceptance_timestamp,
        sic_code,
        documents,
    })
}

fn parse_sic(value: &str) -> Option<u16> {
    let value = value.trim();
    if let Ok(code) = value.parse::<u16>() {
        return Some(code);
    }
    sic_in_brackets()
        .captures(value)
        .and_then(|c| c[1].parse().ok())
}

fn parse_document(block: &[u8], ordinal: u32) -> Result<DocumentRecord, String> {
    let body_start = find(block, b"<TEXT>").unwrap_or(block.len());
    let meta = Header::parse(&String::from_utf8_lossy(&block[..body_start]));
    let sequence = match meta.get(&["SEQUENCE"]) {
        Some(v) => v
            .parse::<u32>()
            .ok()
            .filter(|s| *s > 0)
            .ok_or_else(|| format!("bad document sequence {v:?}"))?,
        None => ordinal,
    };
    let raw_bytes = text_block()
        .captures(&block[body_start..])
        .map(|c| c.get(1).unwrap().as_bytes().to_vec())
        .unwrap_or_default();
    let content_kind = classify_content(&raw_bytes);
    Ok(DocumentRecord {
        sequence,
        doc_type: meta.get(&["TYPE"]).unwrap_or_default().to_string(),
        filename: meta.get(&["FILENAME"]).unwrap_or_default().to_string(),
        raw_bytes,
        content_kind,
    })
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    const FIXTURE: &str = "<SUBMISSION>
<ACCESSION-NUMBER>0000950123-14-000042
<TYPE>10-K
<PUBLIC-DOCUMENT-COUNT>2
<PERIOD>20131231
<ACCEPTANCE-DATETIME>20140101120000
<FILER>
<COMPANY-DATA>
<CONFORMED-NAME>EXAMPLE HOLDINGS CORP
<CIK>0000012345
<ASSIGNED-SIC>6022
</COMPANY-DATA>
</FILER>
<DOCUMENT>
<TYPE>10-K
<SEQUENCE>1
<FILENAME>ex10k.htm
<DESCRIPTION>ANNUAL REPORT
<TEXT>
<html><body><p>Annual report body.</p></body></html>
</TEXT>
</DOCUMENT>
<DOCUMENT>
<TYPE>GRAPHIC
<SEQUENCE>2
<FILENAME>logo.gif
<TEXT>
begin 644 logo.gif
M1TE&.#EA
end
</TEXT>
</DOCUMENT>
</SUBMISSION>
";

    #[test]
    fn parses_header_and_documents() {
        let sub = parse_dissemination(FIXTURE.as_bytes()).unwrap();
        assert_eq!(sub.accession_number.as_str(), "0000950123-14-000042");
        assert_eq!(sub.cik, 12345);
        assert_eq!(sub.company_name, "EXAMPLE HOLDINGS CORP");
        assert_eq!(sub.form_type, "10-K");
        assert_eq!(sub.sic_code, Some(6022));
        assert_eq!(sub.documents.len(), 2);
        let main = &sub.documents[0];
        assert_eq!((main.sequence, main.doc_type.as_str()), (1, "10-K"));
        assert_eq!(main.filename, "ex10k.htm");
        assert_eq!(
            main.text(),
            "<html><body><p>Annual report body.</p></body></html>"
        );
        assert_eq!(main.content_kind, ContentKind::Html);
        assert_eq!(sub.documents[1].content_kind, ContentKind::BinaryOrOther);
    }

    #[test]
    fn acceptance_timestamp_at_second_precision() {
        let sub = parse_dissemination(FIXTURE.as_bytes()).unwrap();
        let expected = NaiveDate::from_ymd_opt(2014, 1, 1)
            .unwrap()
            .and_hms_opt(12, 0, 0)
            .unwrap();
        assert_eq!(sub.acceptance_timestamp, expected);
        assert_eq!(
            sub.acceptance_timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            "2014-01-01T12:00:00"
        );
        assert_eq!(sub.acceptance_timestamp.and_utc().timestamp_subsec_nanos(), 0);
    }

    #[test]
    fn missing_accession_is_unparseable() {
        let raw = FIXTURE.replace("<ACCESSION-NUMBER>0000950123-14-000042\n", "");
        assert!(matches!(
            parse_dissemination(raw.as_bytes()),
            Err(EdgarError::Unparseable(_))
        ));
    }

    #[test]
    fn missing_acceptance_is_unparseable() {
        let raw = FIXTURE.replace("<ACCEPTANCE-DATETIME>20140101120000\n", "");
        let err = parse_dissemination(raw.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("acceptance"));
    }

    #[test]
    fn no_documents_is_unparseable() {
        let cut = FIXTURE.find("<DOCUMENT>").unwrap();
        assert!(parse_dissemination(&FIXTURE.as_bytes()[..cut]).is_err());
    }

    #[test]
    fn legacy_sec_header_spelling() {
        let raw = "<SEC-DOCUMENT>0000912057-97-000123.txt : 19970115
<SEC-HEADER>0000912057-97-000123.hdr.sgml : 19970115
<ACCEPTANCE-DATETIME>19970114173001
ACCESSION NUMBER:\t\t0000912057-97-000123
CONFORMED SUBMISSION TYPE:\t10-Q
PUBLIC DOCUMENT COUNT:\t\t1
FILER:

\tCOMPANY DATA:\t
\t\tCOMPANY CONFORMED NAME:\t\t\tOLD WIDGET CO
\t\tCENTRAL INDEX KEY:\t\t\t0000099999
\t\tSTANDARD INDUSTRIAL CLASSIFICATION:\tMISCELLANEOUS MANUFACTURING INDUSTRIES [3990]
</SEC-HEADER>
<DOCUMENT>
<TYPE>10-Q
<SEQUENCE>1
<TEXT>
Quarterly report text.
</TEXT>
</DOCUMENT>
</SEC-DOCUMENT>
";
        let sub = parse_dissemination(raw.as_bytes()).unwrap();
        assert_eq!(sub.accession_number.as_str(), "0000912057-97-000123");
        assert_eq!(sub.form_type, "10-Q");
        assert_eq!(sub.company_name, "OLD WIDGET CO");
        assert_eq!(sub.cik, 99999);
        assert_eq!(sub.sic_code, Some(3990));
        assert_eq!(sub.documents[0].content_kind, ContentKind::FixedWidthText);
        assert_eq!(sub.documents[0].text(), "Quarterly report text.");
    }

    #[test]
    fn duplicate_sequence_is_rejected() {
        let raw = FIXTURE.replace("<SEQUENCE>2", "<SEQUENCE>1");
        assert!(parse_dissemination(raw.as_bytes()).is_err());
    }

    #[test]
    fn accession_number_formats() {
        assert!("0000950123-14-000042".parse::<AccessionNumber>().is_ok());
        assert_eq!(
            "000095012314000042".parse::<AccessionNumber>().unwrap().as_str(),
            "0000950123-14-000042"
        );
        assert!("95012314-000042".parse::<AccessionNumber>().is_err());
    }

    #[test]
    fn latin1_bodies_survive() {
        let mut raw = FIXTURE.as_bytes().to_vec();
        let pos = find(&raw, b"Annual").unwrap();
        raw[pos] = 0xC9; // 'É' in Latin-1
        let sub = parse_dissemination(&raw).unwrap();
        assert!(sub.documents[0].text().contains("\u{c9}nnual"));
    }
}
