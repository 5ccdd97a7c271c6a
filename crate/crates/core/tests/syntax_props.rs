use mup_core::syntax::SourceProgram;
use mup_core::{parse_goal, parse_program, pretty, VarGen};
use mup_testgen::{canonical, cases, GenConfig};
use proptest::prelude::*;

fn parse(text: &str) -> Result<mup_core::Program, mup_core::ParseError> {
    parse_program(&SourceProgram::new(text, "<prop>"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn program_round_trip(case in cases(GenConfig::rich())) {
        let text = pretty(&case.program);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(canonical(&back), canonical(&case.program), "{}", text);
        prop_assert_eq!(pretty(&back), text);
    }

    #[test]
    fn goal_round_trip(case in cases(GenConfig::rich())) {
        let text = pretty(&case.goal);
        let (goal, vars) = parse_goal(&text, &VarGen::starting_at(10_000)).unwrap();
        prop_assert_eq!(pretty(&goal), text);
        prop_assert_eq!(vars.len(), case.goal_vars.len());
    }

    #[test]
    fn parsing_is_deterministic(case in cases(GenConfig::default())) {
        let text = pretty(&case.program);
        prop_assert_eq!(parse(&text).unwrap(), parse(&text).unwrap());
    }

    /// Arbitrary input never panics, and errors point inside the text.
    #[test]
    fn errors_are_positioned(text in "[a-zA-Z0-9_(),.:\\-!+' %\n⊕]{0,40}") {
        if let Err(e) = parse(&text) {
            let lines: Vec<&str> = text.split('\n').collect();
            prop_assert!(e.line >= 1 && (e.line as usize) <= lines.len(), "{e}");
            let width = lines[e.line as usize - 1].chars().count();
            prop_assert!(e.column >= 1 && (e.column as usize) <= width + 1, "{e}");
        }
    }

    /// Removing the final period from a non-empty program is always an error.
    #[test]
    fn missing_period_is_reported(case in cases(GenConfig::default())) {
        let text = pretty(&case.program);
        if let Some(cut) = text.trim_end().strip_suffix('.') {
            prop_assert!(parse(cut).is_err());
        }
    }
}

#[test]
fn round_trip_of_sample_programs() {
    let samples = [
        "twodoor (+) fourdoor.\ndiesel (+) gas.\nbmw(120d) :- twodoor, diesel.\n",
        "med (+) eng (+) eco.\ntuition(40k) :- med.\n",
        "p (+) q.\n",
        "p :- p.\n",
        "path(X, Y) :- edge(X, Y).\npath(X, Z) :- edge(X, Y), path(Y, Z).\n",
        "f(g(X), '40K', 'it\\'s') :- (a, b), c.\n",
    ];
    for text in samples {
        let program = parse(text).unwrap();
        assert_eq!(pretty(&program), text);
        assert_eq!(
            canonical(&parse(&pretty(&program)).unwrap()),
            canonical(&program)
        );
    }
}

#[test]
fn alternate_spellings_print_canonically() {
    let p = parse("!a ⊕ b :- c ⊗ d.\n40K.\n'it''s'.\n").unwrap();
    assert_eq!(pretty(&p), "a (+) b :- c, d.\n40k.\n'it\\'s'.\n");
}
