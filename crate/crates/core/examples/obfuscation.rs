//! Maps obfuscated profanity back to blacklist words.

use toxprep::{LexiconSet, ObfuscationMatcher};

fn main() {
    let lex = LexiconSet::builtin();
    let matcher = ObfuscationMatcher::from_lexicons(&lex, []);
    let tokens = [
        "s**t", "S***T", "sh**", "shi*", "s*it:)", "SHYT", "sHYt", "shiiiit", "shiiiiiiiiiiiit", "SHUIT", "SHIZZ",
        "SHiiT", "SHITV", "$h1+", "$hit", "5h1t", "f*ck", "b!tch", "ship", "shot", "shift", "hello",
    ];
    for t in tokens {
        let pattern = matcher.pattern_match(t);
        let full = matcher.profane_match(t);
        println!("{t:>18}  pattern: {:<8} full: {}", pattern.unwrap_or("-"), full.unwrap_or("-"));
    }
}
