use proptest::prelude::*;
use psaudit::syntax::{parse, strip_comments, tokenize, SourceScript};

fn ps_fragment() -> impl Strategy<Value = String> {
    let atoms = prop::sample::select(vec![
        "Write-Host",
        "gci",
        "%",
        "?",
        "|",
        "{",
        "}",
        "(",
        ")",
        "$(",
        "@(",
        "@{",
        "[",
        "]",
        "$x",
        "$global:y",
        "$using:z",
        "${a b}",
        "-eq",
        "$null",
        "-Force",
        "-Path:",
        "'s'",
        "\"d $x\"",
        "\"$(1+2)\"",
        "@'\nh\n'@",
        "@\"\nh $x\n\"@",
        "# c",
        "<# b #>",
        "`",
        "\n",
        " ",
        "\t",
        "=",
        "+=",
        "1",
        "0x1F",
        "function",
        "param",
        "try",
        "catch",
        "if",
        ";",
        ",",
        ".",
        "::",
        "é",
        "日本",
    ]);
    prop::collection::vec(atoms, 0..40).prop_map(|v| v.concat())
}

proptest! {
    #[test]
    fn tokens_reconstruct_source(src in ps_fragment()) {
        let script = SourceScript::new("p.ps1", src.clone());
        let tokens = tokenize(&script);
        let mut rebuilt = String::new();
        let mut last = 0;
        for t in &tokens {
            prop_assert!(t.start >= last, "overlapping tokens");
            let gap = &src[last..t.start];
            prop_assert!(gap.chars().all(|c| c.is_whitespace() || c == '`'), "gap {:?}", gap);
            rebuilt.push_str(gap);
            prop_assert_eq!(&src[t.start..t.end], t.text.as_str());
            rebuilt.push_str(&t.text);
            last = t.end;
        }
        let tail = &src[last..];
        prop_assert!(tail.chars().all(|c| c.is_whitespace() || c == '`'));
        rebuilt.push_str(tail);
        prop_assert_eq!(rebuilt, src);
    }

    #[test]
    fn strip_comments_is_idempotent(src in ps_fragment()) {
        let once = strip_comments(&SourceScript::new("p.ps1", src));
        let twice = strip_comments(&SourceScript::new("p.ps1", once.clone()));
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn locate_agrees_with_naive_counter(src in "[a-z\n\r é日]{0,80}", pick in 0usize..1000) {
        let script = SourceScript::new("p.ps1", src.clone());
        let boundaries: Vec<usize> = src.char_indices().map(|(i, _)| i).chain([src.len()]).collect();
        let offset = boundaries[pick % boundaries.len()];
        let (mut line, mut col) = (1, 1);
        for c in src[..offset].chars() {
            if c == '\n' { line += 1; col = 1; } else { col += 1; }
        }
        prop_assert_eq!(script.locate(offset).unwrap(), (line, col));
        prop_assert!(script.locate(src.len() + 1).is_err());
    }

    #[test]
    fn parse_never_panics_on_bytes(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let script = SourceScript::from_bytes("p.ps1", &bytes);
        let ast = parse(&script);
        for e in &ast.parse_errors {
            prop_assert!(e.span.start_line >= 1 && e.span.start_line <= script.line_count());
        }
    }

    #[test]
    fn spans_map_to_valid_positions(src in ps_fragment()) {
        let script = SourceScript::new("p.ps1", src);
        let ast = parse(&script);
        let n = script.line_count();
        let spans = ast.commands.iter().map(|c| c.span)
            .chain(ast.functions.iter().map(|f| f.name_span))
            .chain(ast.variables.iter().map(|v| v.span))
            .chain(ast.catch_blocks.iter().map(|c| c.span))
            .chain(ast.comparisons.iter().map(|c| c.span));
        for s in spans {
            prop_assert!(s.start_line >= 1 && s.end_line <= n);
            prop_assert!((s.start_line, s.start_column) <= (s.end_line, s.end_column));
        }
    }
}

#[test]
fn here_string_spans_three_lines() {
    let script = SourceScript::new("h.ps1", "@\"\nline\n\"@");
    let tokens = tokenize(&script);
    assert_eq!(tokens.len(), 1);
    assert_eq!(tokens[0].span.start_line, 1);
    assert_eq!(tokens[0].span.end_line, 3);
}

#[test]
fn bom_is_excluded_from_offsets() {
    let script = SourceScript::from_bytes("b.ps1", b"\xEF\xBB\xBF$x");
    assert!(script.had_bom());
    assert_eq!(tokenize(&script)[0].start, 0);
}
