//! JUnit-style `test.xml` run reports.

use chrono::{DateTime, Duration, Utc};
use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;

use super::CaptureError;
use crate::ldgraph::{canonical_datetime, parse_datetime};

pub const REPORT_FILE: &str = "test.xml";
pub const GOAL_NOT_REACHED: &str = "goal not reached";

/// Outcome and timing extracted from a run report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestReport {
    pub success: bool,
    /// Seconds, normalized.
    pub duration: Decimal,
    pub started: DateTime<Utc>,
    pub ended: DateTime<Utc>,
    pub failure_message: Option<String>,
}

impl TestReport {
    /// Builds a report whose end time follows from start and duration.
    pub fn new(success: bool, duration: Decimal, started: DateTime<Utc>, failure_message: Option<String>) -> Self {
        let duration = duration.normalize();
        TestReport { success, duration, started, ended: started + duration_of(duration), failure_message }
    }
}

/// Millisecond-resolution duration for a non-negative number of seconds.
fn duration_of(seconds: Decimal) -> Duration {
    let ms = (seconds * Decimal::from(1000)).round().to_i64().unwrap_or(0);
    Duration::milliseconds(ms)
}

#[derive(Default)]
struct Suite {
    failures: u64,
    errors: u64,
    time: Option<Decimal>,
    timestamp: Option<String>,
}

fn malformed(msg: impl Into<String>) -> CaptureError {
    CaptureError::MalformedReport(msg.into())
}

fn read_suite(e: &BytesStart) -> Result<Suite, CaptureError> {
    let mut s = Suite::default();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| malformed(err.to_string()))?;
        let value = attr
            .normalized_value(XmlVersion::Implicit1_0)
            .map_err(|err| malformed(err.to_string()))?;
        let count = |v: &str| v.trim().parse::<u64>().map_err(|_| malformed(format!("bad count {v:?}")));
        match attr.key.as_ref() {
            "failures" => s.failures = count(&value)?,
            "errors" => s.errors = count(&value)?,
            "time" => {
                let t: Decimal = value.trim().parse().map_err(|_| malformed(format!("bad time {value:?}")))?;
                if t.is_sign_negative() {
                    return Err(malformed("negative time"));
                }
                s.time = Some(t);
            }
            "timestamp" => s.timestamp = Some(value.into_owned()),
            _ => {}
        }
    }
    Ok(s)
}

fn message_of(e: &BytesStart) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.as_ref() == "message")
        .and_then(|a| a.normalized_value(XmlVersion::Implicit1_0).ok().map(|v| v.into_owned()))
}

/// Reads success, duration and timestamps. A run succeeds when no suite
/// reports failures or errors and no failure element is present.
pub fn parse_test_report(bytes: &[u8]) -> Result<TestReport, CaptureError> {
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("not UTF-8"))?;
    let mut reader = Reader::from_str(text);
    let mut suites = Vec::new();
    let mut failure_elements = 0usize;
    let mut message = None;
    loop {
        match reader.read_event().map_err(|e| malformed(e.to_string()))? {
            Event::Start(e) | Event::Empty(e) => match e.name().as_ref() {
                "testsuite" => suites.push(read_suite(&e)?),
                "failure" | "error" => {
                    failure_elements += 1;
                    if message.is_none() {
                        message = message_of(&e);
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if suites.is_empty() {
        return Err(malformed("no testsuite element"));
    }
    let mut duration = Decimal::ZERO;
    let mut started: Option<DateTime<Utc>> = None;
    let mut failures = 0;
    for s in &suites {
        failures += s.failures + s.errors;
        duration += s.time.ok_or_else(|| malformed("testsuite without time attribute"))?;
        let raw = s.timestamp.as_deref().ok_or(CaptureError::MissingTimestamp)?;
        let ts = parse_datetime(raw).ok_or_else(|| malformed(format!("bad timestamp {raw:?}")))?;
        started = Some(started.map_or(ts, |cur| cur.min(ts)));
    }
    let success = failures == 0 && failure_elements == 0;
    let started = started.expect("at least one suite");
    Ok(TestReport::new(success, duration, started, if success { None } else { message }))
}

fn fmt_seconds(d: Decimal) -> String {
    format!("{:.3}", d.round_dp(3))
}

/// Writes the report format read by [`parse_test_report`].
pub fn serialize_report(report: &TestReport, suite_name: &str) -> String {
    let failures = u8::from(!report.success);
    let time = fmt_seconds(report.duration);
    let name = escape(suite_name);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!("<testsuites tests=\"1\" failures=\"{failures}\" errors=\"0\" time=\"{time}\">\n"));
    out.push_str(&format!(
        "  <testsuite name=\"{name}\" tests=\"1\" failures=\"{failures}\" errors=\"0\" skipped=\"0\" time=\"{time}\" timestamp=\"{}\">\n",
        canonical_datetime(report.started)
    ));
    out.push_str(&format!("    <testcase classname=\"{name}\" name=\"reach_goal\" time=\"{time}\""));
    if report.success {
        out.push_str("/>\n");
    } else {
        let msg = report.failure_message.as_deref().unwrap_or(GOAL_NOT_REACHED);
        out.push_str(">\n");
        out.push_str(&format!(
            "      <failure message=\"{}\" type=\"NavigationFailure\">{}</failure>\n",
            escape(msg),
            escape(msg)
        ));
        out.push_str("    </testcase>\n");
    }
    out.push_str("  </testsuite>\n</testsuites>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn suite(attrs: &str, body: &str) -> String {
        format!("<testsuites><testsuite name=\"x\" {attrs}><testcase name=\"t\">{body}</testcase></testsuite></testsuites>")
    }

    #[test]
    fn passing_report() {
        let r = parse_test_report(suite("failures=\"0\" time=\"41.2\" timestamp=\"2025-06-01T08:00:00Z\"", "").as_bytes()).unwrap();
        assert!(r.success);
        assert_eq!(r.duration, Decimal::new(412, 1));
        assert_eq!(canonical_datetime(r.ended), "2025-06-01T08:00:41.200Z");
    }

    #[test]
    fn failing_report() {
        let xml = suite(
            "failures=\"1\" time=\"30\" timestamp=\"2025-06-01T08:00:00\"",
            "<failure message=\"goal not reached\"/>",
        );
        let r = parse_test_report(xml.as_bytes()).unwrap();
        assert!(!r.success);
        assert_eq!(r.failure_message.as_deref(), Some(GOAL_NOT_REACHED));
        // a failure element alone is enough
        let xml = suite("time=\"30\" timestamp=\"2025-06-01T08:00:00Z\"", "<failure message=\"goal not reached\"/>");
        assert!(!parse_test_report(xml.as_bytes()).unwrap().success);
    }

    #[test]
    fn missing_fields() {
        let xml = suite("failures=\"0\" time=\"1\"", "");
        assert!(matches!(parse_test_report(xml.as_bytes()), Err(CaptureError::MissingTimestamp)));
        let xml = suite("failures=\"0\" timestamp=\"2025-06-01T08:00:00Z\"", "");
        assert!(matches!(parse_test_report(xml.as_bytes()), Err(CaptureError::MalformedReport(_))));
        assert!(matches!(parse_test_report(b"<testsuites/>"), Err(CaptureError::MalformedReport(_))));
        assert!(matches!(parse_test_report(b"<testsuite"), Err(CaptureError::MalformedReport(_))));
    }

    proptest! {
        #[test]
        fn writer_round_trips(success in any::<bool>(), ms in 0i64..10_000_000, t in 0i64..4_000_000_000, name in "[a-z_<&\"]{1,8}") {
            let started = DateTime::from_timestamp(t, 0).unwrap();
            let msg = (!success).then(|| GOAL_NOT_REACHED.to_string());
            let r = TestReport::new(success, Decimal::new(ms, 3), started, msg);
            prop_assert_eq!(parse_test_report(serialize_report(&r, &name).as_bytes()).unwrap(), r);
        }
    }
}
