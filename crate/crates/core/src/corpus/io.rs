use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Deserialize;
use unicode_normalization::UnicodeNormalization;

use super::{Intensity, Message, SurveySet, UserResponse};
use crate::error::{Error, Result};

pub const MESSAGES_FILE: &str = "messages.jsonl";
pub const RESPONSES_FILE: &str = "responses.csv";
pub const RESPONSES_HEADER: [&str; 4] = ["user_id", "tweet_id", "intensity", "filter"];

#[derive(Clone, Debug, Default)]
pub struct LoadedMessages {
    pub messages: Vec<Message>,
    /// 1-based line numbers of records that could not be parsed.
    pub skipped_lines: Vec<u64>,
}

impl LoadedMessages {
    pub fn skipped(&self) -> usize {
        self.skipped_lines.len()
    }
}

#[derive(Deserialize)]
struct MessageRecord {
    id: String,
    text: String,
    #[serde(default)]
    annotations: Vec<i64>,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_messages(path: impl AsRef<Path>) -> Result<LoadedMessages> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_messages(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => io_err(path, source),
        other => other,
    })
}

/// Parses JSON-lines message records. Malformed records are skipped and
/// counted; a repeated id is fatal.
pub fn parse_messages(reader: impl BufRead) -> Result<LoadedMessages> {
    let mut out = LoadedMessages::default();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno as u64 + 1;
        let line = line.map_err(|e| io_err(Path::new("<messages>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some(msg) = parse_record(&line) else {
            out.skipped_lines.push(lineno);
            continue;
        };
        if !seen.insert(msg.id.clone()) {
            return Err(Error::DuplicateMessageId(msg.id));
        }
        out.messages.push(msg);
    }
    Ok(out)
}

fn parse_record(line: &str) -> Option<Message> {
    let rec: MessageRecord = serde_json::from_str(line).ok()?;
    let text: String = rec.text.nfc().collect();
    if text.trim().is_empty() || rec.id.is_empty() {
        return None;
    }
    Message::new(rec.id, text, &rec.annotations).ok()
}

pub fn load_responses(path: impl AsRef<Path>) -> Result<Vec<UserResponse>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_responses(file, &path.display().to_string())
}

/// Parses the responses CSV. Any bad row is fatal and reported with its line.
pub fn parse_responses(reader: impl Read, name: &str) -> Result<Vec<UserResponse>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: name.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().map(str::trim).ne(RESPONSES_HEADER) {
        return Err(parse_err(
            1,
            format!(
                "expected header `{}`, found `{}`",
                RESPONSES_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).map(str::trim).unwrap_or("");
        let user_id = field(0);
        let message_id = field(1);
        if user_id.is_empty() || message_id.is_empty() {
            return Err(parse_err(line, "empty user_id or tweet_id".into()));
        }
        let intensity = field(2)
            .parse::<i64>()
            .ok()
            .and_then(Intensity::new)
            .ok_or_else(|| parse_err(line, format!("intensity `{}` not in 1-5", field(2))))?;
        let filter = match field(3) {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("filter `{other}` not 0 or 1"))),
        };
        out.push(UserResponse {
            user_id: user_id.to_string(),
            message_id: message_id.to_string(),
            intensity,
            filter,
        });
    }
    Ok(out)
}

/// Reads `messages.jsonl` and `responses.csv` from a data directory.
pub fn load_survey(dir: impl AsRef<Path>) -> Result<(SurveySet, LoadedMessages)> {
    let dir = dir.as_ref();
    let mut loaded = load_messages(dir.join(MESSAGES_FILE))?;
    let responses = load_responses(dir.join(RESPONSES_FILE))?;
    let messages = std::mem::take(&mut loaded.messages);
    let survey = SurveySet::new(messages, responses)?;
    Ok((survey, loaded))
}

pub fn write_messages(mut w: impl Write, messages: &[Message]) -> std::io::Result<()> {
    for m in messages {
        let rec = serde_json::json!({
            "id": m.id,
            "text": m.text,
            "annotations": m.annotations,
        });
        writeln!(w, "{rec}")?;
    }
    Ok(())
}

pub fn write_responses(w: impl Write, responses: &[UserResponse]) -> std::io::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(RESPONSES_HEADER)?;
    for r in responses {
        let level = r.intensity.level().to_string();
        wtr.write_record([
            r.user_id.as_str(),
            r.message_id.as_str(),
            level.as_str(),
            if r.filter { "1" } else { "0" },
        ])?;
    }
    wtr.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, Resolved};

    #[test]
    fn empty_file_is_empty_corpus() {
        let loaded = parse_messages("".as_bytes()).unwrap();
        assert!(loaded.messages.is_empty());
        assert_eq!(loaded.skipped(), 0);
    }

    #[test]
    fn three_line_fixture_resolves_categories() {
        let src = r#"{"id":"a","text":"you are cruel","annotations":[1,1,7]}
{"id":"b","text":"watch out","annotations":[5]}
{"id":"c","text":"mixed bag","annotations":[2,3,4]}
"#;
        let loaded = parse_messages(src.as_bytes()).unwrap();
        let resolved: Vec<_> = loaded.messages.iter().map(|m| m.resolved).collect();
        assert_eq!(
            resolved,
            vec![
                Resolved::Coded(Category::CruelStatement),
                Resolved::Coded(Category::Threat),
                Resolved::NonCodable
            ]
        );
        assert_eq!(loaded.skipped(), 0);
    }

    #[test]
    fn malformed_lines_are_skipped_and_counted() {
        let src = r#"{"id":"a","annotations":[1]}
{"id":"b","text":"fine"}
not json
{"id":"c","text":"   "}
{"id":"d","text":"bad code","annotations":[9]}
"#;
        let loaded = parse_messages(src.as_bytes()).unwrap();
        assert_eq!(loaded.messages.len(), 1);
        assert_eq!(loaded.messages[0].resolved, Resolved::NonCodable);
        assert_eq!(loaded.skipped_lines, vec![1, 3, 4, 5]);
    }

    #[test]
    fn duplicate_id_is_fatal() {
        let src = "{\"id\":\"x\",\"text\":\"a\"}\n{\"id\":\"x\",\"text\":\"b\"}\n";
        match parse_messages(src.as_bytes()) {
            Err(Error::DuplicateMessageId(id)) => assert_eq!(id, "x"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn text_is_nfc_normalized() {
        // "e" + combining acute composes to U+00E9
        let src = "{\"id\":\"x\",\"text\":\"caf\\u0065\\u0301\"}\n";
        let loaded = parse_messages(src.as_bytes()).unwrap();
        assert_eq!(loaded.messages[0].text, "caf\u{e9}");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_messages("/definitely/not/here.jsonl"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn responses_parse_and_reject_with_line_numbers() {
        let ok = "user_id,tweet_id,intensity,filter\nu1,m1,3,1\nu2,m1,1,0\n";
        let rs = parse_responses(ok.as_bytes(), "r.csv").unwrap();
        assert_eq!(rs.len(), 2);
        assert!(rs[0].filter);
        assert_eq!(rs[1].intensity.level(), 1);

        let bad = "user_id,tweet_id,intensity,filter\nu1,m1,3,1\nu2,m1,7,0\n";
        match parse_responses(bad.as_bytes(), "r.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad_filter = "user_id,tweet_id,intensity,filter\nu1,m1,3,yes\n";
        assert!(matches!(
            parse_responses(bad_filter.as_bytes(), "r.csv"),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad_header = "user,tweet,intensity,filter\n";
        assert!(matches!(
            parse_responses(bad_header.as_bytes(), "r.csv"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn responses_round_trip_through_writer() {
        let src = "user_id,tweet_id,intensity,filter\nu1,m1,3,1\nu2,m1,1,0\n";
        let rs = parse_responses(src.as_bytes(), "r.csv").unwrap();
        let mut buf = Vec::new();
        write_responses(&mut buf, &rs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), src);
    }
}
