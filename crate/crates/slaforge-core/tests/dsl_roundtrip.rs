//! Parse/pretty-print round-trip over fuzz-generated sources, and the
//! regular-form validator against a brute-force scan of symbol lists.

use num_bigint::BigInt;
use proptest::prelude::*;

use slaforge_core::dsl::{
    self, ActionBlock, ArithOp, Assign, CmpOp, EventSignature, Expr, GrammarParts, Literal,
    Param, ParamType, RawProduction, RhsSymbol, ServiceView, StateDecl, StateType, ViewBinding,
};
use slaforge_core::rat::Rat;

const LOWER_KEYWORDS: &[&str] = &["view", "case", "max"];
const UPPER_KEYWORDS: &[&str] = &["Int", "Rat", "Time", "String", "Pair", "True", "False"];

fn lower_ident() -> impl Strategy<Value = String> {
    "[a-z][a-zA-Z0-9_]{0,6}".prop_filter("keyword", |s| !LOWER_KEYWORDS.contains(&s.as_str()))
}

fn upper_ident() -> impl Strategy<Value = String> {
    "[A-Z][a-zA-Z0-9]{0,4}".prop_filter("keyword", |s| !UPPER_KEYWORDS.contains(&s.as_str()))
}

fn param_type() -> impl Strategy<Value = ParamType> {
    prop_oneof![
        Just(ParamType::Time),
        Just(ParamType::Rational),
        Just(ParamType::Integer),
        Just(ParamType::Text),
    ]
}

prop_compose! {
    fn arb_signature()(
        name in lower_ident(),
        names in proptest::collection::btree_set(lower_ident(), 0..4),
        types in proptest::collection::vec(param_type(), 4),
    ) -> EventSignature {
        let params = names
            .into_iter()
            .zip(types)
            .map(|(name, ty)| Param { name, ty })
            .collect();
        EventSignature { name, params }
    }
}

prop_compose! {
    fn arb_view()(
        name in upper_ident(),
        signatures in proptest::collection::vec(arb_signature(), 0..4),
        terminals in proptest::collection::btree_set(lower_ident(), 4),
    ) -> ServiceView {
        // Deduplicate event names, then pair with distinct terminals.
        let mut seen = std::collections::BTreeSet::new();
        let bindings = signatures
            .into_iter()
            .filter(|s| seen.insert(s.name.clone()))
            .zip(terminals)
            .map(|(signature, terminal)| ViewBinding { signature, terminal })
            .collect();
        ServiceView { name, bindings }
    }
}

fn arb_rat() -> impl Strategy<Value = Rat> {
    (-1000i64..1000, 1i64..50).prop_map(|(n, d)| Rat::new(n, d))
}

fn arb_literal(ty: StateType) -> BoxedStrategy<Literal> {
    match ty {
        StateType::Integer => (-10000i64..10000)
            .prop_map(|n| Literal::Int(BigInt::from(n)))
            .boxed(),
        StateType::Rational => arb_rat().prop_map(Literal::Rat).boxed(),
        StateType::MetricPair => ("[a-z]{1,4}(\\.[0-9]{1,3})?", arb_rat())
            .prop_map(|(key, value)| Literal::Pair { key, value })
            .boxed(),
    }
}

fn arb_state_type() -> impl Strategy<Value = StateType> {
    prop_oneof![
        Just(StateType::Integer),
        Just(StateType::Rational),
        Just(StateType::MetricPair),
    ]
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-1000i64..1000).prop_map(|n| Expr::Int(BigInt::from(n))),
        lower_ident().prop_map(Expr::Var),
        "[a-z0-9.]{1,8}".prop_map(Expr::Text),
    ];
    leaf.prop_recursive(3, 32, 4, |inner| {
        let arith = prop_oneof![
            Just(ArithOp::Add),
            Just(ArithOp::Sub),
            Just(ArithOp::Mul),
            Just(ArithOp::Div),
        ];
        let cmp = prop_oneof![
            Just(CmpOp::Gt),
            Just(CmpOp::Lt),
            Just(CmpOp::Ge),
            Just(CmpOp::Le),
            Just(CmpOp::Eq),
            Just(CmpOp::Ne),
        ];
        prop_oneof![
            (arith, inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::Arith(op, Box::new(a), Box::new(b))),
            (cmp.clone(), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::Cmp(op, Box::new(a), Box::new(b))),
            (cmp, inner.clone(), inner.clone(), inner.clone()).prop_map(|(op, c1, c2, t)| {
                Expr::Case {
                    cond: Box::new(Expr::Cmp(op, Box::new(c1), Box::new(c2))),
                    on_true: Box::new(t.clone()),
                    on_false: Box::new(t),
                }
            }),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Max(Box::new(a), Box::new(b))),
            ("[a-z.]{1,6}", inner.clone())
                .prop_map(|(k, v)| Expr::Pair(Box::new(Expr::Text(k)), Box::new(v))),
        ]
    })
}

prop_compose! {
    fn arb_action()(
        statements in proptest::collection::vec((lower_ident(), arb_expr()), 0..4)
    ) -> ActionBlock {
        ActionBlock {
            statements: statements
                .into_iter()
                .map(|(target, expr)| Assign { target, expr })
                .collect(),
        }
    }
}

prop_compose! {
    fn arb_regular_production()(
        lhs in upper_ident(),
        terminal in lower_ident(),
        action in proptest::option::of(arb_action()),
        continuation in proptest::option::of(upper_ident()),
    ) -> RawProduction {
        let mut rhs = vec![RhsSymbol::Terminal(terminal)];
        if let Some(a) = action {
            rhs.push(RhsSymbol::Action(a));
        }
        if let Some(c) = continuation {
            rhs.push(RhsSymbol::Nonterminal(c));
        }
        RawProduction { lhs, rhs }
    }
}

prop_compose! {
    fn arb_grammar()(
        decl_names in proptest::collection::btree_set(lower_ident(), 0..4),
        types in proptest::collection::vec(arb_state_type(), 4),
        productions in proptest::collection::vec(arb_regular_production(), 1..5),
    )(
        states in decl_names
            .into_iter()
            .zip(types)
            .map(|(name, ty)| {
                arb_literal(ty).prop_map(move |initial| StateDecl {
                    name: name.clone(),
                    ty,
                    initial,
                })
            })
            .collect::<Vec<_>>(),
        productions in Just(productions),
    ) -> GrammarParts {
        let start = productions[0].lhs.clone();
        GrammarParts { states, productions, start }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn view_round_trips(view in arb_view()) {
        let printed = dsl::pretty::pretty_view(&view);
        let reparsed = dsl::parse_view(&printed).expect("pretty view parses");
        prop_assert_eq!(reparsed, view);
    }

    #[test]
    fn grammar_round_trips(grammar in arb_grammar()) {
        let printed = dsl::pretty::pretty_grammar(&grammar);
        let reparsed = dsl::parse_grammar(&printed).expect("pretty grammar parses");
        prop_assert_eq!(reparsed, grammar);
    }
}

// ---- regular-form validation vs brute-force scan ----

fn arb_symbol() -> impl Strategy<Value = RhsSymbol> {
    prop_oneof![
        lower_ident().prop_map(RhsSymbol::Terminal),
        upper_ident().prop_map(RhsSymbol::Nonterminal),
        Just(RhsSymbol::Action(ActionBlock { statements: vec![] })),
    ]
}

prop_compose! {
    fn arb_any_production()(
        lhs in upper_ident(),
        rhs in proptest::collection::vec(arb_symbol(), 0..5),
    ) -> RawProduction {
        RawProduction { lhs, rhs }
    }
}

/// Independent acceptance oracle: a straight scan of the symbol list.
fn brute_force_regular(p: &RawProduction) -> bool {
    let nts: Vec<usize> = p
        .rhs
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, RhsSymbol::Nonterminal(_)))
        .map(|(i, _)| i)
        .collect();
    let terms: Vec<usize> = p
        .rhs
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, RhsSymbol::Terminal(_)))
        .map(|(i, _)| i)
        .collect();
    let actions: Vec<usize> = p
        .rhs
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, RhsSymbol::Action(_)))
        .map(|(i, _)| i)
        .collect();
    let nt_ok = match nts.as_slice() {
        [] => true,
        [i] => *i == p.rhs.len() - 1,
        _ => false,
    };
    let term_ok = terms == vec![0];
    let action_ok = matches!(actions.as_slice(), [] | [1]);
    nt_ok && term_ok && action_ok
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn validator_matches_brute_force(prods in proptest::collection::vec(arb_any_production(), 1..6)) {
        let expected_ok = prods.iter().all(brute_force_regular);
        let got = dsl::validate_regular(&prods);
        prop_assert_eq!(got.is_ok(), expected_ok, "disagreement on {:?}", prods);
        if let Err(violations) = got {
            // Every reported offender really is one, and every offender is
            // reported.
            let offenders: std::collections::BTreeSet<usize> =
                violations.iter().map(|v| v.production_index).collect();
            for (i, p) in prods.iter().enumerate() {
                prop_assert_eq!(offenders.contains(&i), !brute_force_regular(p));
            }
        }
    }
}
