//! Built-in service-degradation metrics, generated as DSL source so they go
//! through the same parser, validator and binder as user-written files.

use super::bind::{bind, MetricDefinition};
use super::parser::{parse_grammar, parse_view};

/// The view selecting `invoke(Time t, Rat procTime)` as terminal `query`.
pub fn degradation_view_source() -> String {
    "view Degradation { invoke(Time t, Rat procTime) query }\n".to_string()
}

/// Cumulative percentage of queries slower than `bound_ms`, published under
/// the metric key `fas.<bound_ms>`.
pub fn degradation_grammar_source(bound_ms: i64) -> String {
    format!(
        r#"Pair<String, Rat> degradation = Pair("fas.{bound_ms}", 0);
Int cnt     = 0;
Int slowCnt = 0;

S ::= query
      {{ cnt = cnt + 1;
        slowCnt = slowCnt +
                   case (procTime > {bound_ms}) {{True => 1; False => 0;}};
        degradation = Pair("fas.{bound_ms}", 100 * slowCnt / cnt);
      }}
      S
"#
    )
}

/// Windowed variant of the degradation metric: counters reset whenever an
/// event arrives more than `window_ms` after the window start, so the value
/// tracks recent traffic instead of the whole run. Same DSL, same metric key.
pub fn windowed_degradation_grammar_source(bound_ms: i64, window_ms: i64) -> String {
    format!(
        r#"Pair<String, Rat> degradation = Pair("fas.{bound_ms}", 0);
Int winStart = 0;
Int cnt      = 0;
Int slowCnt  = 0;

# The first three statements roll the window: they must read the old
# winStart, so the window start is updated last.
S ::= query
      {{ cnt      = case (t - winStart > {window_ms}) {{True => 0; False => cnt;}};
        slowCnt  = case (t - winStart > {window_ms}) {{True => 0; False => slowCnt;}};
        winStart = case (t - winStart > {window_ms}) {{True => t; False => winStart;}};
        cnt      = cnt + 1;
        slowCnt  = slowCnt +
                   case (procTime > {bound_ms}) {{True => 1; False => 0;}};
        degradation = Pair("fas.{bound_ms}", 100 * slowCnt / cnt);
      }}
      S
"#
    )
}

/// Metric key used by the built-in degradation grammars.
pub fn degradation_metric_key(bound_ms: i64) -> String {
    format!("fas.{bound_ms}")
}

/// Bound cumulative degradation definition.
pub fn degradation_definition(bound_ms: i64) -> MetricDefinition {
    let view = parse_view(&degradation_view_source()).expect("built-in view parses");
    let parts =
        parse_grammar(&degradation_grammar_source(bound_ms)).expect("built-in grammar parses");
    bind(&view, &parts).expect("built-in definition binds")
}

/// Bound windowed degradation definition.
pub fn windowed_degradation_definition(bound_ms: i64, window_ms: i64) -> MetricDefinition {
    let view = parse_view(&degradation_view_source()).expect("built-in view parses");
    let parts = parse_grammar(&windowed_degradation_grammar_source(bound_ms, window_ms))
        .expect("built-in grammar parses");
    bind(&view, &parts).expect("built-in definition binds")
}
