use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::EdgarError;

/// First day for which EDGAR publishes a daily dissemination archive.
pub const FIRST_ARCHIVE_DATE: NaiveDate = match NaiveDate::from_ymd_opt(1996, 1, 12) {
    Some(date) => date,
    None => panic!("invalid constant date"),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compression {
    GzipTar,
    Plain,
}

/// One daily archive on the EDGAR host.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchiveRef {
    pub date: NaiveDate,
    pub url_path: String,
    pub expected_compression: Compression,
}

impl ArchiveRef {
    /// Final path segment, used as the cache file name.
    pub fn archive_name(&self) -> &str {
        self.url_path
            .rsplit('/')
            .next()
            .unwrap_or(self.url_path.as_str())
    }
}

/// How archive paths are spelled for a given date.
///
/// The template accepts `{year}`, `{quarter}`, `{month}`, `{day}` and
/// `{yyyymmdd}` placeholders. Naming has changed across EDGAR eras, so this
/// is configuration rather than code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveNaming {
    pub path_template: String,
    pub compression: Compression,
}

impl Default for ArchiveNaming {
    fn default() -> Self {
        Self {
            path_template: "Archives/edgar/Feed/{year}/QTR{quarter}/{yyyymmdd}.nc.tar.gz".into(),
            compression: Compression::GzipTar,
        }
    }
}

impl ArchiveNaming {
    pub fn path_for(&self, date: NaiveDate) -> String {
        let quarter = (date.month() - 1) / 3 + 1;
        self.path_template
            .replace("{yyyymmdd}", &date.format("%Y%m%d").to_string())
            .replace("{year}", &format!("{:04}", date.year()))
            .replace("{quarter}", &quarter.to_string())
            .replace("{month}", &format!("{:02}", date.month()))
            .replace("{day}", &format!("{:02}", date.day()))
    }

    pub fn archive_for(&self, date: NaiveDate) -> ArchiveRef {
        ArchiveRef {
            date,
            url_path: self.path_for(date),
            expected_compression: self.compression,
        }
    }
}

pub fn is_business_day(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// One reference per weekday in `[from, to]`, ordered by date.
///
/// Holidays are not modelled; the host answers 404 for them and the fetcher
/// reports a missing archive.
pub fn list_daily_archives(
    from: NaiveDate,
    to: NaiveDate,
    naming: &ArchiveNaming,
) -> Result<Vec<ArchiveRef>, EdgarError> {
    if from < FIRST_ARCHIVE_DATE {
        return Err(EdgarError::BeforeAvailability {
            requested: from,
            earliest: FIRST_ARCHIVE_DATE,
        });
    }
    if from > to {
        return Err(EdgarError::InvalidRange { from, to });
    }
    Ok(from
        .iter_days()
        .take_while(|d| *d <= to)
        .filter(|d| is_business_day(*d))
        .map(|d| naming.archive_for(d))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn first_available_day() {
        let refs = list_daily_archives(d(1996, 1, 12), d(1996, 1, 12), &Default::default()).unwrap();
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].date, d(1996, 1, 12));
    }

    #[test]
    fn single_monday() {
        let refs = list_daily_archives(d(2020, 1, 6), d(2020, 1, 6), &Default::default()).unwrap();
        assert_eq!(refs.len(), 1);
        assert_eq!(
            refs[0].url_path,
            "Archives/edgar/Feed/2020/QTR1/20200106.nc.tar.gz"
        );
        assert_eq!(refs[0].archive_name(), "20200106.nc.tar.gz");
    }

    #[test]
    fn weekend_is_empty() {
        let refs = list_daily_archives(d(2020, 1, 4), d(2020, 1, 5), &Default::default()).unwrap();
        assert!(refs.is_empty());
    }

    #[test]
    fn rejects_dates_before_availability() {
        let err = list_daily_archives(d(1995, 12, 29), d(1996, 2, 1), &Default::default()).unwrap_err();
        match err {
            EdgarError::BeforeAvailability { earliest, .. } => assert_eq!(earliest, FIRST_ARCHIVE_DATE),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_inverted_range() {
        assert!(matches!(
            list_daily_archives(d(2020, 2, 1), d(2020, 1, 1), &Default::default()),
            Err(EdgarError::InvalidRange { .. })
        ));
    }

    #[test]
    fn matches_calendar_oracle_over_a_year() {
        // Oracle: day-of-week arithmetic from a known Monday.
        let anchor = d(2020, 1, 6);
        let refs = list_daily_archives(d(2020, 1, 1), d(2020, 12, 31), &Default::default()).unwrap();
        let expected: Vec<_> = d(2020, 1, 1)
            .iter_days()
            .take_while(|x| *x <= d(2020, 12, 31))
            .filter(|x| (x.signed_duration_since(anchor).num_days().rem_euclid(7)) < 5)
            .collect();
        let got: Vec<_> = refs.iter().map(|r| r.date).collect();
        assert_eq!(got, expected);
        assert_eq!(got.len(), 262);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn quarter_placeholder() {
        let naming = ArchiveNaming::default();
        assert!(naming.path_for(d(2014, 10, 1)).contains("/2014/QTR4/20141001"));
        assert!(naming.path_for(d(2014, 6, 30)).contains("/QTR2/"));
    }
}
