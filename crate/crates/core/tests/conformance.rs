use emodrift::emoji::{parse_emoji_test, tokenize, TokenKind};

const EMOJI_TEST: &str = include_str!("../data/emoji-test.txt");

#[test]
fn every_rgi_sequence_is_one_emoji_token() {
    let entries = parse_emoji_test(EMOJI_TEST.as_bytes(), "emoji-test.txt").unwrap();
    let rgi: Vec<_> = entries.iter().filter(|e| e.status == "fully-qualified").collect();
    assert!(rgi.len() > 3000, "only {} fully-qualified entries", rgi.len());
    let mut failures = Vec::new();
    for e in &rgi {
        let toks = tokenize(&e.sequence);
        if toks.len() != 1 || toks[0].kind != TokenKind::Emoji || toks[0].surface != e.sequence {
            failures.push(format!("line {}: {:?} -> {:?}", e.line, e.sequence, toks));
        }
    }
    assert!(failures.is_empty(), "{} of {} failed:\n{}", failures.len(), rgi.len(), failures.join("\n"));
}

#[test]
fn rgi_sequences_surrounded_by_text_stay_whole() {
    let entries = parse_emoji_test(EMOJI_TEST.as_bytes(), "emoji-test.txt").unwrap();
    for e in entries.iter().filter(|e| e.status == "fully-qualified").step_by(7) {
        let text = format!("ok {} ok", e.sequence);
        let toks = tokenize(&text);
        let surfaces: Vec<&str> = toks.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, ["ok", e.sequence.as_str(), "ok"], "line {}", e.line);
    }
}

#[test]
fn family_and_its_unjoined_members() {
    let family = "\u{1F469}\u{200D}\u{1F469}\u{200D}\u{1F466}";
    assert_eq!(tokenize(family).len(), 1);
    let unjoined = tokenize("\u{1F469}\u{1F469}\u{1F466}");
    assert_eq!(unjoined.len(), 3);
    assert!(unjoined.iter().all(|t| t.kind == TokenKind::Emoji));
}
