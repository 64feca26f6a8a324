mod common;

use common::{train_on, RandomTrees, Synth};
use lexdep::chart::{parse, ParserConfig, Variant};
use lexdep::oracle::enumerate_best;
use lexdep::{HeadRuleTable, Model, ParseTree};

fn compare(model: &Model, rules: &HeadRuleTable, fixture: &[ParseTree]) -> Vec<String> {
    let mut mismatches = Vec::new();
    for v in [Variant::Base, Variant::PunctuationRule, Variant::TagBlind] {
        let cfg = ParserConfig::exhaustive(v);
        for t in fixture {
            let s = t.sentence();
            let best = enumerate_best(&s, model, rules, &cfg).unwrap();
            let chart = parse(&s, model, rules, &cfg).unwrap();
            match best {
                None if chart.fallback.is_some() => {}
                None => mismatches.push(format!("{v:?} {s}: only the chart found a parse")),
                Some(b) => {
                    if (b.log_score - chart.log_score).abs() > 1e-9 || b.tree != chart.tree {
                        mismatches.push(format!(
                            "{v:?} {s}\n  oracle {} {}\n  chart  {} {}",
                            b.log_score, b.tree, chart.log_score, chart.tree
                        ));
                    }
                }
            }
        }
    }
    mismatches
}

#[test]
fn grammar_corpus() {
    let (model, rules) = train_on(&Synth::new(7).trees(300));
    let m = compare(&model, &rules, &Synth::new(8).short_trees(40, 7));
    assert!(m.is_empty(), "{}", m.join("\n"));
}

#[test]
fn dense_random_corpus() {
    let (model, rules) = train_on(&RandomTrees::new(1).trees(400, 2, 9));
    let m = compare(&model, &rules, &RandomTrees::new(2).trees(30, 2, 7));
    assert!(m.is_empty(), "{}", m.join("\n"));
}
