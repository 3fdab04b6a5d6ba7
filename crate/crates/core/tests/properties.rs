use nl2asm_core::asm::parse_line;
use nl2asm_core::metrics::{bleu_n, Smoothing};
use nl2asm_core::pipeline::{destandardize, preprocess_intent, standardize_text, tokenize_snippet};
use nl2asm_core::translator::canonicalize_snippet;
use nl2asm_core::{validate_program, validate_snippet, ParserDictionaries};
use proptest::prelude::*;

const REG32: [&str; 8] = ["eax", "ebx", "ecx", "edx", "esi", "edi", "esp", "ebp"];
const REG8: [&str; 6] = ["al", "bl", "cl", "dl", "ah", "dh"];

fn reg32() -> impl Strategy<Value = String> {
    prop::sample::select(REG32.to_vec()).prop_map(String::from)
}

fn reg8() -> impl Strategy<Value = String> {
    prop::sample::select(REG8.to_vec()).prop_map(String::from)
}

fn imm() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..=0xff).prop_map(|v| format!("0x{v:x}")),
        (0u32..200).prop_map(|v| v.to_string()),
        (0u32..=u32::MAX).prop_map(|v| format!("0x{v:08x}")),
    ]
}

fn mem() -> impl Strategy<Value = String> {
    (reg32(), prop::option::of(-128i32..128), any::<bool>()).prop_map(|(base, disp, spaced)| match disp {
        None => format!("[{base}]"),
        Some(d) if spaced => format!("[{base} {} {}]", if d < 0 { '-' } else { '+' }, d.unsigned_abs()),
        Some(d) => format!("[{base}{}{}]", if d < 0 { '-' } else { '+' }, d.unsigned_abs()),
    })
}

/// Label-free instruction lines over a small, mostly valid grammar.
fn line() -> impl Strategy<Value = String> {
    let binop = prop::sample::select(vec!["mov", "xor", "add", "sub", "cmp", "and", "or"]);
    prop_oneof![
        (binop.clone(), reg32(), reg32()).prop_map(|(m, a, b)| format!("{m} {a}, {b}")),
        (binop.clone(), reg32(), imm()).prop_map(|(m, a, b)| format!("{m} {a}, {b}")),
        (binop.clone(), reg8(), reg8()).prop_map(|(m, a, b)| format!("{m} {a},{b}")),
        (binop.clone(), mem(), reg8()).prop_map(|(m, a, b)| format!("{m} {a}, {b}")),
        (binop, reg32(), mem()).prop_map(|(m, a, b)| format!("{m}  {a} ,  dword {b}")),
        imm().prop_map(|v| format!("push {v}")),
        reg32().prop_map(|r| format!("push {r}")),
        reg32().prop_map(|r| format!("pop {r}")),
        reg32().prop_map(|r| format!("inc {r}")),
        Just("int 0x80".to_string()),
        Just("cdq".to_string()),
        (reg32(), reg8()).prop_map(|(a, b)| format!("mov {a}, {b}")),
    ]
}

fn snippet() -> impl Strategy<Value = String> {
    prop::collection::vec(line(), 1..4).prop_map(|lines| lines.join("\\n"))
}

proptest! {
    #[test]
    fn canonical_form_is_a_fixed_point(text in snippet()) {
        let once = canonicalize_snippet(&text);
        prop_assert_eq!(canonicalize_snippet(&once.replace('\n', "\\n")), once);
    }

    #[test]
    fn canonical_form_keeps_the_syntax_verdict(text in snippet()) {
        let canon = canonicalize_snippet(&text).replace('\n', "\\n");
        prop_assert_eq!(
            validate_snippet(&text).syntactically_correct,
            validate_snippet(&canon).syntactically_correct
        );
    }

    #[test]
    fn printed_lines_parse_back(text in line()) {
        let parsed = parse_line(&text).unwrap();
        let printed = parsed.to_string();
        let again = parse_line(&printed).unwrap();
        prop_assert!(parsed.same_structure(&again), "{} -> {}", text, printed);
    }

    #[test]
    fn compilable_programs_have_valid_snippets(lines in prop::collection::vec(line(), 1..6)) {
        if validate_program(&lines).compilable {
            for l in &lines {
                prop_assert!(validate_snippet(l).syntactically_correct, "{}", l);
            }
        }
    }

    #[test]
    fn standardization_round_trips(
        value in imm(),
        reg in reg32(),
        label in "[a-z]{3,8}_[a-z]{2,5}",
    ) {
        let dicts = ParserDictionaries::builtin();
        let intent = format!("move {value} into {reg} and jump to the {label} label");
        let code = format!("mov {reg}, {value}\\njmp {label}");
        let std = standardize_text(&intent, &code, &dicts);
        let back = destandardize(&std.std_snippet, &std.slot_map);
        prop_assert!(back.unresolved.is_empty());
        prop_assert_eq!(back.sequence, tokenize_snippet(&code));
        let intent_back = destandardize(&std.std_intent, &std.slot_map);
        prop_assert_eq!(intent_back.sequence, preprocess_intent(&intent, &dicts));
    }

    #[test]
    fn bleu_is_bounded(a in prop::collection::vec(snippet(), 1..4), b in prop::collection::vec(snippet(), 1..4)) {
        let n = a.len().min(b.len());
        for order in 1..=4 {
            let s = bleu_n(&a[..n], &b[..n], order, Smoothing::AddOne).unwrap();
            prop_assert!((0.0..=100.0 + 1e-9).contains(&s));
            // Unsmoothed scores drop to 0 when a corpus has no n-grams of this order.
            let same = bleu_n(&a[..n], &a[..n], order, Smoothing::AddOne).unwrap();
            prop_assert!((same - 100.0).abs() < 1e-9);
        }
    }
}
